"""Generation, serialization, and splitting of training datasets.

A dataset is a directory holding a JSON manifest plus binary record streams.
Each record is

    id as unsigned 64-bit little-endian
    input frame  (HSC1: the five order blocks stacked band-like, or the
                  full detector canvas as a single plane)
    target frame (HSC1: the ground-truth cube)

and the prediction exchange format used to hand reconstructions back for
scoring is the same framing without the input:

    id as unsigned 64-bit little-endian
    cube frame (HSC1)

Samples fall into three categories: ``full_crop`` windows every source cube
at stride 1, ``sparse_crop`` uses wide strides, and ``blank`` pairs an
all-zero cube with an all-zero detector frame. Full-category and
sparse-category source cubes take their spectral bands from disjoint halves
of the source band pool, so no generated cube can appear in both categories.
Test samples come only from held-out source cubes that train/val never see.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import ConfigError, DimensionError, FormatError
from .hypercube import CropWindow, HyperCube, crop, enumerate_crops, read_cube, select_bands, write_cube
from .optics import BlockSet, CtisImage, ShiftGeometry, default_shifts, extract_blocks, simulate
from .scenes import SceneSpec, generate_scene

MANIFEST_NAME = "manifest.json"
RECORDS_NAME = "records.bin"
MANIFEST_VERSION = 1

CATEGORIES = ("full_crop", "sparse_crop", "blank")
SPLITS = ("train", "val", "test")

_ID = struct.Struct("<Q")


@dataclass(frozen=True)
class DatasetConfig:
    """Content parameters of a generated dataset (output location excluded)."""

    seed: int = 0
    scene_kind: str = "mosaic"          # mosaic | blobs | mixed
    source_rows: int = 64
    source_cols: int = 128
    source_bands: int = 16
    bands_per_sample: int = 5
    crop_side: int = 32
    shifts: tuple[int, ...] | None = None
    weight_mode: str = "unit"
    input_format: str = "blocks"        # blocks | canvas
    n_full: int = 600
    n_sparse: int = 300
    n_blank: int = 100
    n_test: int = 100
    full_strides: tuple[int, int] = (1, 1)
    sparse_strides: tuple[int, int] = (10, 15)
    sources_per_category: int = 2
    value_scale: float = 255.0

    def geometry(self) -> ShiftGeometry:
        shifts = self.shifts if self.shifts is not None else default_shifts(self.bands_per_sample)
        return ShiftGeometry(self.crop_side, tuple(shifts), self.weight_mode)

    def to_dict(self) -> dict:
        d = {
            "seed": self.seed,
            "scene_kind": self.scene_kind,
            "source_rows": self.source_rows,
            "source_cols": self.source_cols,
            "source_bands": self.source_bands,
            "bands_per_sample": self.bands_per_sample,
            "crop_side": self.crop_side,
            "shifts": None if self.shifts is None else list(self.shifts),
            "weight_mode": self.weight_mode,
            "input_format": self.input_format,
            "n_full": self.n_full,
            "n_sparse": self.n_sparse,
            "n_blank": self.n_blank,
            "n_test": self.n_test,
            "full_strides": list(self.full_strides),
            "sparse_strides": list(self.sparse_strides),
            "sources_per_category": self.sources_per_category,
            "value_scale": self.value_scale,
        }
        return d


@dataclass(frozen=True)
class SourceInfo:
    id: int
    scene_kind: str
    scene_seed: int
    band_indices: tuple[int, ...]
    role: str            # full | sparse | test_full | test_sparse
    held_out: bool


@dataclass
class SampleInfo:
    id: int
    category: str
    scene_kind: str
    source_id: int | None
    window: CropWindow | None
    band_indices: tuple[int, ...] | None
    offset: int
    nbytes: int
    split: str | None = None


@dataclass
class DatasetManifest:
    seed: int
    geometry: ShiftGeometry
    input_format: str
    config: dict
    sources: list[SourceInfo]
    samples: list[SampleInfo]
    base_dir: Path
    records_file: str = RECORDS_NAME
    split_files: dict[str, str] | None = None
    version: int = MANIFEST_VERSION

    @property
    def records_path(self) -> Path:
        return self.base_dir / self.records_file

    def sample_by_id(self, sample_id: int) -> SampleInfo:
        sample = self._index().get(sample_id)
        if sample is None:
            raise FormatError(f"unknown sample id {sample_id}")
        return sample

    def has_sample(self, sample_id: int) -> bool:
        return sample_id in self._index()

    def _index(self) -> dict[int, SampleInfo]:
        index = getattr(self, "_id_index", None)
        if index is None or len(index) != len(self.samples):
            index = {s.id: s for s in self.samples}
            object.__setattr__(self, "_id_index", index)
        return index

    def counts(self) -> dict:
        by_category: dict[str, int] = {}
        by_scene: dict[str, int] = {}
        by_split: dict[str, int] = {}
        for s in self.samples:
            by_category[s.category] = by_category.get(s.category, 0) + 1
            by_scene[s.scene_kind] = by_scene.get(s.scene_kind, 0) + 1
            key = s.split if s.split is not None else "unsplit"
            by_split[key] = by_split.get(key, 0) + 1
        return {"by_category": by_category, "by_scene": by_scene, "by_split": by_split}

    def to_json_dict(self) -> dict:
        return {
            "format": "ctisim-dataset",
            "version": self.version,
            "seed": self.seed,
            "geometry": self.geometry.to_dict(),
            "input_format": self.input_format,
            "records_file": self.records_file,
            "split_files": self.split_files,
            "config": self.config,
            "counts": self.counts(),
            "sources": [
                {
                    "id": src.id,
                    "scene_kind": src.scene_kind,
                    "scene_seed": src.scene_seed,
                    "band_indices": list(src.band_indices),
                    "role": src.role,
                    "held_out": src.held_out,
                }
                for src in self.sources
            ],
            "samples": [
                {
                    "id": s.id,
                    "category": s.category,
                    "scene_kind": s.scene_kind,
                    "source_id": s.source_id,
                    "window": None if s.window is None
                    else [s.window.origin_row, s.window.origin_col, s.window.side],
                    "band_indices": None if s.band_indices is None else list(s.band_indices),
                    "offset": s.offset,
                    "nbytes": s.nbytes,
                    "split": s.split,
                }
                for s in self.samples
            ],
        }

    def save(self, path=None) -> Path:
        path = self.base_dir / MANIFEST_NAME if path is None else Path(path)
        path.write_text(json.dumps(self.to_json_dict(), indent=2) + "\n")
        return path

    @classmethod
    def load(cls, path) -> "DatasetManifest":
        path = Path(path)
        if path.is_dir():
            path = path / MANIFEST_NAME
        try:
            raw = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise FormatError(f"unreadable manifest {path}: {exc}") from exc
        if raw.get("format") != "ctisim-dataset":
            raise FormatError(f"{path} is not a dataset manifest")
        samples = [
            SampleInfo(
                id=s["id"],
                category=s["category"],
                scene_kind=s["scene_kind"],
                source_id=s["source_id"],
                window=None if s["window"] is None else CropWindow(*s["window"]),
                band_indices=None if s["band_indices"] is None else tuple(s["band_indices"]),
                offset=s["offset"],
                nbytes=s["nbytes"],
                split=s["split"],
            )
            for s in raw["samples"]
        ]
        sources = [
            SourceInfo(
                id=src["id"],
                scene_kind=src["scene_kind"],
                scene_seed=src["scene_seed"],
                band_indices=tuple(src["band_indices"]),
                role=src["role"],
                held_out=src["held_out"],
            )
            for src in raw["sources"]
        ]
        return cls(
            seed=raw["seed"],
            geometry=ShiftGeometry.from_dict(raw["geometry"]),
            input_format=raw["input_format"],
            config=raw["config"],
            sources=sources,
            samples=samples,
            base_dir=path.parent,
            records_file=raw["records_file"],
            split_files=raw.get("split_files"),
            version=raw["version"],
        )


def _source_scene(src: SourceInfo, cfg: DatasetConfig) -> HyperCube:
    spec = SceneSpec(
        kind=src.scene_kind,
        rows=cfg.source_rows,
        cols=cfg.source_cols,
        bands=cfg.source_bands,
        seed=src.scene_seed,
        value_scale=cfg.value_scale,
    )
    return select_bands(generate_scene(spec), src.band_indices)


def _input_payload(target: HyperCube, geom: ShiftGeometry, input_format: str) -> HyperCube:
    img = simulate(target, geom)
    if input_format == "blocks":
        return HyperCube(extract_blocks(img).blocks)
    return HyperCube(img.data[np.newaxis])


def _blank_input(geom: ShiftGeometry, input_format: str) -> HyperCube:
    if input_format == "blocks":
        return HyperCube.zeros(5, geom.block_side, geom.block_side)
    return HyperCube.zeros(1, geom.canvas_side, geom.canvas_side)


def _write_record(fh, sample_id: int, input_cube: HyperCube, target: HyperCube) -> int:
    start = fh.tell()
    fh.write(_ID.pack(sample_id))
    write_cube(input_cube, fh)
    write_cube(target, fh)
    return fh.tell() - start


def _scene_kind_for(cfg: DatasetConfig, source_index: int) -> str:
    if cfg.scene_kind == "mixed":
        return ("mosaic", "blobs")[source_index % 2]
    return cfg.scene_kind


def build_dataset(config: DatasetConfig, out_dir) -> DatasetManifest:
    """Generate all samples and write the records file plus the manifest.

    Deterministic: the same config always produces byte-identical records
    and an identical manifest (paths aside).
    """
    if config.scene_kind not in ("mosaic", "blobs", "mixed"):
        raise ConfigError(f"unknown scene kind {config.scene_kind!r}")
    if config.input_format not in ("blocks", "canvas"):
        raise ConfigError(f"unknown input format {config.input_format!r}")
    if min(config.n_full, config.n_sparse, config.n_blank, config.n_test) < 0:
        raise ConfigError("sample counts must be nonnegative")
    if config.n_full + config.n_sparse + config.n_blank + config.n_test == 0:
        raise ConfigError("dataset must contain at least one sample")
    geom = config.geometry()
    needs_sources = config.n_full + config.n_sparse + config.n_test > 0
    if needs_sources:
        if config.crop_side > min(config.source_rows, config.source_cols):
            raise DimensionError(
                f"crop side {config.crop_side} exceeds source extent "
                f"{config.source_rows}x{config.source_cols}"
            )
        if config.source_bands < 2 * config.bands_per_sample:
            raise ConfigError(
                "source_bands must be at least twice bands_per_sample so full and "
                "sparse categories can draw disjoint band selections"
            )
        if config.sources_per_category < 1:
            raise ConfigError("sources_per_category must be >= 1")

    rng = np.random.default_rng(config.seed)
    full_pool = np.arange(0, config.source_bands // 2)
    sparse_pool = np.arange(config.source_bands // 2, config.source_bands)

    def draw_bands(pool) -> tuple[int, ...]:
        picked = rng.choice(pool, size=config.bands_per_sample, replace=False)
        return tuple(int(i) for i in np.sort(picked))

    sources: list[SourceInfo] = []

    def add_sources(n: int, role: str, pool) -> list[SourceInfo]:
        created = []
        for _ in range(n):
            src = SourceInfo(
                id=len(sources),
                scene_kind=_scene_kind_for(config, len(sources)),
                scene_seed=int(rng.integers(2**63)),
                band_indices=draw_bands(pool),
                role=role,
                held_out=role.startswith("test"),
            )
            sources.append(src)
            created.append(src)
        return created

    full_sources = add_sources(config.sources_per_category if config.n_full else 0, "full", full_pool)
    sparse_sources = add_sources(config.sources_per_category if config.n_sparse else 0, "sparse", sparse_pool)
    n_test_full = config.n_test - config.n_test // 2
    n_test_sparse = config.n_test // 2
    test_full_sources = add_sources(1 if n_test_full else 0, "test_full", full_pool)
    test_sparse_sources = add_sources(1 if n_test_sparse else 0, "test_sparse", sparse_pool)

    def plan_windows(srcs: list[SourceInfo], total: int, strides) -> list[tuple[SourceInfo, CropWindow]]:
        if total == 0:
            return []
        windows = enumerate_crops(
            (config.source_rows, config.source_cols), config.crop_side, *strides
        )
        per_source = [total // len(srcs)] * len(srcs)
        for i in range(total % len(srcs)):
            per_source[i] += 1
        plan = []
        for src, k in zip(srcs, per_source):
            if k > len(windows):
                raise DimensionError(
                    f"source {src.id} offers {len(windows)} windows at strides {strides}, "
                    f"but {k} samples were requested"
                )
            order = rng.permutation(len(windows))[:k]
            plan.extend((src, windows[int(i)]) for i in order)
        return plan

    crops = [
        ("full_crop", plan_windows(full_sources, config.n_full, config.full_strides)),
        ("sparse_crop", plan_windows(sparse_sources, config.n_sparse, config.sparse_strides)),
    ]
    test_crops = [
        ("full_crop", plan_windows(test_full_sources, n_test_full, config.full_strides)),
        ("sparse_crop", plan_windows(test_sparse_sources, n_test_sparse, config.sparse_strides)),
    ]

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    samples: list[SampleInfo] = []
    scene_cache: dict[int, HyperCube] = {}

    def source_cube(src: SourceInfo) -> HyperCube:
        if src.id not in scene_cache:
            scene_cache.clear()          # one source in memory at a time
            scene_cache[src.id] = _source_scene(src, config)
        return scene_cache[src.id]

    with open(out_dir / RECORDS_NAME, "wb") as fh:
        def emit_crop_sample(category: str, src: SourceInfo, window: CropWindow):
            target = crop(source_cube(src), window)
            input_cube = _input_payload(target, geom, config.input_format)
            sample_id = len(samples)
            offset = fh.tell()
            nbytes = _write_record(fh, sample_id, input_cube, target)
            samples.append(SampleInfo(
                id=sample_id, category=category, scene_kind=src.scene_kind,
                source_id=src.id, window=window, band_indices=src.band_indices,
                offset=offset, nbytes=nbytes,
            ))

        for category, plan in crops:
            for src, window in plan:
                emit_crop_sample(category, src, window)

        blank_target = HyperCube.zeros(geom.bands, geom.cube_side, geom.cube_side)
        blank_input = _blank_input(geom, config.input_format)
        for _ in range(config.n_blank):
            sample_id = len(samples)
            offset = fh.tell()
            nbytes = _write_record(fh, sample_id, blank_input, blank_target)
            samples.append(SampleInfo(
                id=sample_id, category="blank", scene_kind="blank", source_id=None,
                window=None, band_indices=None, offset=offset, nbytes=nbytes,
            ))

        for category, plan in test_crops:
            for src, window in plan:
                emit_crop_sample(category, src, window)

    manifest = DatasetManifest(
        seed=config.seed,
        geometry=geom,
        input_format=config.input_format,
        config=config.to_dict(),
        sources=sources,
        samples=samples,
        base_dir=out_dir,
    )
    manifest.save()
    return manifest


def split_dataset(manifest: DatasetManifest, train_frac: float = 0.9, seed: int = 0) -> DatasetManifest:
    """Tag every sample as train, val, or test.

    Samples from held-out sources always land in test; the rest are assigned
    train with probability ``train_frac`` and val otherwise, sample by
    sample, reproducibly in the seed.
    """
    if not 0.0 < train_frac < 1.0:
        raise ConfigError(f"train fraction must lie strictly inside (0, 1), got {train_frac}")
    if any(s.split is not None for s in manifest.samples):
        raise ConfigError("dataset already carries split tags")
    held_out = {src.id for src in manifest.sources if src.held_out}
    rng = np.random.default_rng(seed)
    for sample in manifest.samples:
        if sample.source_id is not None and sample.source_id in held_out:
            sample.split = "test"
        else:
            sample.split = "train" if rng.random() < train_frac else "val"
    manifest.save()
    return manifest


def export_for_training(manifest: DatasetManifest, out_dir) -> dict[str, Path]:
    """Write one record stream per split next to a manifest copy.

    Records are byte-for-byte copies from the dataset's records file.
    """
    if any(s.split is None for s in manifest.samples):
        raise ConfigError("dataset must be split before export")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths: dict[str, Path] = {}
    split_files = {}
    with open(manifest.records_path, "rb") as src:
        for split in SPLITS:
            members = [s for s in manifest.samples if s.split == split]
            name = f"{split}.records"
            with open(out_dir / name, "wb") as dst:
                for sample in members:
                    src.seek(sample.offset)
                    dst.write(src.read(sample.nbytes))
            paths[split] = out_dir / name
            split_files[split] = name
    manifest.split_files = split_files
    if out_dir != manifest.base_dir:
        # the exported copy references streams relative to its own directory
        exported = replace(manifest, base_dir=out_dir)
        exported.save(out_dir / MANIFEST_NAME)
    else:
        manifest.save()
    return paths


def _typed_input(frame: HyperCube, manifest: DatasetManifest):
    geom = manifest.geometry
    if manifest.input_format == "blocks":
        return BlockSet(frame.data, geom)
    return CtisImage(frame.data[0], geom)


def read_record(fh, expect_id: int | None = None) -> tuple[int, HyperCube, HyperCube]:
    header = fh.read(_ID.size)
    if len(header) < _ID.size:
        raise FormatError(f"truncated record id: got {len(header)} bytes")
    (sample_id,) = _ID.unpack(header)
    if expect_id is not None and sample_id != expect_id:
        raise FormatError(f"record id {sample_id} does not match manifest id {expect_id}")
    input_frame = read_cube(fh)
    target = read_cube(fh)
    return sample_id, input_frame, target


def iter_samples(manifest: DatasetManifest, split: str | None = None):
    """Yield (SampleInfo, input, target) triples; input is a BlockSet or CtisImage."""
    with open(manifest.records_path, "rb") as fh:
        for sample in manifest.samples:
            if split is not None and sample.split != split:
                continue
            fh.seek(sample.offset)
            _, input_frame, target = read_record(fh, expect_id=sample.id)
            yield sample, _typed_input(input_frame, manifest), target


def write_predictions(dest, pairs) -> int:
    """Write (id, cube) pairs in the prediction exchange format; returns count."""
    n = 0
    if hasattr(dest, "write"):
        for sample_id, cube in pairs:
            dest.write(_ID.pack(sample_id))
            write_cube(cube, dest)
            n += 1
        return n
    with open(dest, "wb") as fh:
        return write_predictions(fh, pairs)


def read_predictions(src):
    """Yield (id, cube) pairs from a prediction exchange file."""
    if not hasattr(src, "read"):
        with open(src, "rb") as fh:
            yield from read_predictions(fh)
            return
    while True:
        header = src.read(_ID.size)
        if len(header) == 0:
            return
        if len(header) < _ID.size:
            raise FormatError(f"truncated prediction id: got {len(header)} bytes")
        (sample_id,) = _ID.unpack(header)
        yield sample_id, read_cube(src)


def import_predictions(manifest: DatasetManifest, src):
    """Yield validated (id, cube) pairs from a prediction exchange file.

    Every id must exist in the manifest and every cube must match the
    manifest geometry.
    """
    geom = manifest.geometry
    want_shape = (geom.bands, geom.cube_side, geom.cube_side)
    for sample_id, cube in read_predictions(src):
        if not manifest.has_sample(sample_id):
            raise FormatError(f"prediction record has unknown id {sample_id}")
        if cube.data.shape != want_shape:
            raise FormatError(
                f"prediction {sample_id} has dims {cube.data.shape}, expected {want_shape}"
            )
        yield sample_id, cube
