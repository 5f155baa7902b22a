"""Command-line pipeline driver.

One executable with subcommands for scene generation, forward simulation,
system-matrix inspection, EM reconstruction, dataset generation, scoring,
and benchmarking. Every run echoes its fully resolved configuration on
stderr so results can be reproduced from logs alone.

Exit codes are stable: 0 success, 2 usage or configuration problem,
3 data, I/O, or format problem.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import time

import numpy as np

from .dataset import (
    DatasetConfig,
    DatasetManifest,
    build_dataset,
    export_for_training,
    import_predictions,
    iter_samples,
    split_dataset,
)
from .em import EmConfig, reconstruct
from .errors import (
    CapacityError,
    ConfigError,
    DimensionError,
    DomainError,
    FormatError,
    RangeError,
)
from .hypercube import HyperCube, read_cube, write_cube, write_pgm
from .metrics import ScoreAccumulator
from .optics import ShiftGeometry, default_shifts, read_image, simulate, write_image
from .scenes import SceneSpec, generate_scene
from .system_matrix import build_system_matrix, write_matrix_dump

THREADS_ENV = "CTISIM_THREADS"


def _parse_shifts(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(tok) for tok in text.replace(" ", "").split(",") if tok)
    except ValueError as exc:
        raise ConfigError(f"cannot parse shift list {text!r}: {exc}") from exc


def _parse_int_list(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(tok) for tok in text.replace(" ", "").split(",") if tok)
    except ValueError as exc:
        raise ConfigError(f"cannot parse integer list {text!r}: {exc}") from exc


def _resolve_threads(args) -> int:
    value = getattr(args, "threads", None)
    if value is None:
        value = os.environ.get(THREADS_ENV)
        value = int(value) if value else (os.cpu_count() or 1)
    if value < 1:
        raise ConfigError(f"thread count must be >= 1, got {value}")
    # All numerical kernels here are sequential and order-deterministic, so
    # output is bit-identical for any setting; the knob caps library pools.
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ[var] = str(value)
    return value


def _echo_config(name: str, resolved: dict) -> None:
    print(f"config[{name}]: {json.dumps(resolved, sort_keys=True)}", file=sys.stderr)


def cmd_gen_scene(args) -> int:
    spec = SceneSpec(
        kind=args.kind, rows=args.rows, cols=args.cols, bands=args.bands,
        seed=args.seed, value_scale=args.value_scale,
        grid_shape=(args.grid_rows, args.grid_cols),
        blob_count=(args.blobs_min, args.blobs_max),
    )
    _echo_config("gen-scene", {**spec.__dict__, "out": args.out, "threads": args.threads})
    cube = generate_scene(spec)
    write_cube(cube, args.out)
    if args.pgm:
        write_pgm(cube.band(args.pgm_band), args.pgm, max_value=spec.value_scale)
    print(f"wrote {args.out}: {cube.rows}x{cube.cols}x{cube.bands}")
    return 0


def cmd_simulate(args) -> int:
    cube = read_cube(args.cube)
    shifts = _parse_shifts(args.shifts) if args.shifts else default_shifts(cube.bands)
    geom = ShiftGeometry(cube.rows, shifts, args.weight_mode)
    _echo_config("simulate", {
        "cube": args.cube, "shifts": list(shifts), "weight_mode": args.weight_mode,
        "out": args.out, "threads": args.threads,
    })
    img = simulate(cube, geom)
    write_image(img, args.out)
    if args.pgm:
        write_pgm(img.data, args.pgm)
    print(f"wrote {args.out}: canvas {img.side}x{img.side}, shifts {list(shifts)}")
    return 0


def cmd_sysmat(args) -> int:
    shifts = _parse_shifts(args.shifts) if args.shifts else default_shifts(args.bands)
    geom = ShiftGeometry(args.side, shifts, args.weight_mode)
    _echo_config("sysmat", {
        "side": args.side, "shifts": list(shifts), "weight_mode": args.weight_mode,
        "dump": args.dump, "threads": args.threads,
    })
    t0 = time.perf_counter()
    H = build_system_matrix(geom)
    build_ms = (time.perf_counter() - t0) * 1e3
    stats = {
        "canvas_side": geom.canvas_side,
        "detector_pixels": H.n_detector_pixels,
        "voxels": H.n_voxels,
        "nnz": H.nnz,
        "nnz_per_column": 5,
        "sparsity": H.sparsity,
        "per_column_sparsity": H.per_column_sparsity,
        "build_ms": build_ms,
    }
    print(json.dumps(stats, indent=2))
    if args.dump:
        write_matrix_dump(H, args.dump)
        print(f"dumped matrix to {args.dump}", file=sys.stderr)
    return 0


def cmd_em(args) -> int:
    img = read_image(args.image)
    if args.shifts and _parse_shifts(args.shifts) != img.geometry.shifts:
        raise ConfigError(
            f"--shifts {args.shifts} does not match image metadata {list(img.geometry.shifts)}"
        )
    if args.bands is not None and args.bands != img.geometry.bands:
        raise ConfigError(
            f"--bands {args.bands} does not match image metadata {img.geometry.bands}"
        )
    cfg = EmConfig(
        iterations=args.iterations,
        init_mode=args.init,
        record_trajectory=bool(args.trajectory),
    )
    _echo_config("em", {
        "image": args.image, "iterations": cfg.iterations, "init": cfg.init_mode,
        "epsilon": cfg.epsilon, "trajectory": args.trajectory, "out": args.out,
        "threads": args.threads,
    })
    result = reconstruct(build_system_matrix(img.geometry), img, cfg)
    if result.warning:
        print(f"warning: {result.warning}", file=sys.stderr)
    write_cube(result.estimate, args.out)
    if args.trajectory:
        with open(args.trajectory, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["k", "loglik", "residual_l1", "ms"])
            for stat in result.trajectory:
                writer.writerow([stat.index, repr(stat.loglik),
                                 repr(stat.residual_l1), f"{stat.ms:.3f}"])
    est = result.estimate
    print(f"wrote {args.out}: {est.rows}x{est.cols}x{est.bands} after {cfg.iterations} iterations")
    return 0


def _eval_report(manifest: DatasetManifest, predictions_path, split: str | None) -> dict:
    predictions = dict(import_predictions(manifest, predictions_path))
    by_category = ScoreAccumulator()
    by_scene = ScoreAccumulator()
    scored = 0
    for sample, _, target in iter_samples(manifest, split=split):
        pred = predictions.get(sample.id)
        if pred is None:
            raise FormatError(f"missing prediction for sample id {sample.id}")
        by_category.add(target, pred, sample.category)
        by_scene.add(target, pred, sample.scene_kind)
        scored += 1
    if scored == 0:
        raise ConfigError(f"no samples to score in split {split!r}")
    cat_report = by_category.finalize()
    scene_report = by_scene.finalize()
    return {
        "count": cat_report.count,
        "mse": cat_report.mse,
        "mae": cat_report.mae,
        "by_category": {k: vars(v) for k, v in cat_report.per_category.items()},
        "by_scene": {k: vars(v) for k, v in scene_report.per_category.items()},
        "_tables": (cat_report, scene_report),
    }


def cmd_eval(args) -> int:
    _echo_config("eval", {
        "manifest": args.manifest, "predictions": args.predictions,
        "split": args.split, "json": args.json, "threads": args.threads,
    })
    manifest = DatasetManifest.load(args.manifest)
    report = _eval_report(manifest, args.predictions, args.split)
    cat_report, scene_report = report.pop("_tables")
    print(cat_report.format_table("category"))
    print()
    print(scene_report.format_table("scene"))
    if args.json:
        payload = json.dumps(report, indent=2) + "\n"
        if args.json == "-":
            sys.stdout.write(payload)
        else:
            with open(args.json, "w") as fh:
                fh.write(payload)
    return 0


def cmd_bench(args) -> int:
    iteration_list = _parse_int_list(args.iterations)
    if not iteration_list or min(iteration_list) < 1:
        raise ConfigError(f"iteration list must contain counts >= 1, got {args.iterations}")
    shifts = _parse_shifts(args.shifts) if args.shifts else default_shifts(args.bands)
    geom = ShiftGeometry(args.side, shifts, "unit")
    _echo_config("bench", {
        "side": args.side, "shifts": list(shifts), "iterations": list(iteration_list),
        "repetitions": args.repetitions, "seed": args.seed, "init": args.init,
        "out": args.out, "threads": args.threads,
    })
    H = build_system_matrix(geom)
    rng = np.random.default_rng(args.seed)
    instances = []
    for _ in range(args.repetitions):
        cube = HyperCube(rng.uniform(0.5, 255.0,
                                     size=(geom.bands, geom.cube_side, geom.cube_side)
                                     ).astype(np.float32))
        instances.append((cube, simulate(cube, geom)))

    from .metrics import mse as mse_of

    rows = []
    for its in iteration_list:
        cfg = EmConfig(iterations=its, init_mode=args.init)
        times, errors = [], []
        for cube, img in instances:
            t0 = time.perf_counter()
            result = reconstruct(H, img, cfg)
            times.append((time.perf_counter() - t0) * 1e3)
            errors.append(mse_of(cube, result.estimate))
        rows.append({
            "iterations": its,
            "mean_ms": float(np.mean(times)),
            "stddev_ms": float(np.std(times, ddof=1)) if len(times) > 1 else 0.0,
            "mse": float(np.mean(errors)),
        })

    out = sys.stdout if args.out == "-" else open(args.out, "w", newline="")
    try:
        writer = csv.DictWriter(out, fieldnames=["iterations", "mean_ms", "stddev_ms", "mse"])
        writer.writeheader()
        for row in rows:
            writer.writerow(row)
    finally:
        if out is not sys.stdout:
            out.close()
    return 0


def cmd_dataset(args) -> int:
    config = DatasetConfig(
        seed=args.seed,
        scene_kind=args.scene_kind,
        source_rows=args.source_rows,
        source_cols=args.source_cols,
        source_bands=args.source_bands,
        bands_per_sample=args.bands,
        crop_side=args.crop_side,
        shifts=_parse_shifts(args.shifts) if args.shifts else None,
        weight_mode=args.weight_mode,
        input_format=args.input_format,
        n_full=args.n_full,
        n_sparse=args.n_sparse,
        n_blank=args.n_blank,
        n_test=args.n_test,
        sparse_strides=tuple(_parse_int_list(args.sparse_strides)),
        sources_per_category=args.sources_per_category,
    )
    _echo_config("dataset", {**config.to_dict(), "out": args.out,
                             "train_frac": args.train_frac, "split_seed": args.split_seed,
                             "threads": args.threads})
    manifest = build_dataset(config, args.out)
    split_dataset(manifest, train_frac=args.train_frac, seed=args.split_seed)
    export_for_training(manifest, args.out)
    print(json.dumps(manifest.counts(), indent=2))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ctisim",
        description="Snapshot imaging spectrometer toolkit: simulate detector "
                    "frames, build the sparse system matrix, reconstruct cubes "
                    "with EM, generate datasets, and score predictions.",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--threads", type=int, default=None,
                        help=f"worker cap (default: {THREADS_ENV} env var, else all cores)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-scene", parents=[common], help="render a synthetic scene cube")
    p.add_argument("--kind", choices=("mosaic", "blobs", "blank"), default="mosaic")
    p.add_argument("--rows", type=int, default=200)
    p.add_argument("--cols", type=int, default=400)
    p.add_argument("--bands", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--value-scale", type=float, default=255.0)
    p.add_argument("--grid-rows", type=int, default=4)
    p.add_argument("--grid-cols", type=int, default=6)
    p.add_argument("--blobs-min", type=int, default=3)
    p.add_argument("--blobs-max", type=int, default=8)
    p.add_argument("--pgm", default=None, help="also export one band as 16-bit PGM")
    p.add_argument("--pgm-band", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen_scene)

    p = sub.add_parser("simulate", parents=[common], help="project a cube into a detector frame")
    p.add_argument("--cube", required=True)
    p.add_argument("--shifts", default=None, help="comma-separated per-band shifts")
    p.add_argument("--weight-mode", choices=("unit", "averaged"), default="unit")
    p.add_argument("--pgm", default=None, help="also export the frame as 16-bit PGM")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sysmat", parents=[common], help="build the system matrix and print stats")
    p.add_argument("--side", type=int, required=True)
    p.add_argument("--bands", type=int, default=5)
    p.add_argument("--shifts", default=None)
    p.add_argument("--weight-mode", choices=("unit", "averaged"), default="unit")
    p.add_argument("--dump", default=None, help="write the debug matrix dump here")
    p.set_defaults(func=cmd_sysmat)

    p = sub.add_parser("em", parents=[common], help="reconstruct a cube from a detector frame")
    p.add_argument("--image", required=True)
    p.add_argument("--iterations", type=int, default=20)
    p.add_argument("--init", choices=("backprojection", "ones"), default="backprojection")
    p.add_argument("--shifts", default=None, help="must match the image metadata if given")
    p.add_argument("--bands", type=int, default=None, help="must match the image metadata if given")
    p.add_argument("--trajectory", default=None, help="write per-iteration CSV here")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_em)

    p = sub.add_parser("dataset", parents=[common],
                       help="generate, split, and export a training dataset")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--scene-kind", choices=("mosaic", "blobs", "mixed"), default="mosaic")
    p.add_argument("--source-rows", type=int, default=64)
    p.add_argument("--source-cols", type=int, default=128)
    p.add_argument("--source-bands", type=int, default=16)
    p.add_argument("--bands", type=int, default=5)
    p.add_argument("--crop-side", type=int, default=32)
    p.add_argument("--shifts", default=None)
    p.add_argument("--weight-mode", choices=("unit", "averaged"), default="unit")
    p.add_argument("--input-format", choices=("blocks", "canvas"), default="blocks")
    p.add_argument("--n-full", type=int, default=600)
    p.add_argument("--n-sparse", type=int, default=300)
    p.add_argument("--n-blank", type=int, default=100)
    p.add_argument("--n-test", type=int, default=100)
    p.add_argument("--sparse-strides", default="10,15")
    p.add_argument("--sources-per-category", type=int, default=2)
    p.add_argument("--train-frac", type=float, default=0.9)
    p.add_argument("--split-seed", type=int, default=0)
    p.set_defaults(func=cmd_dataset)

    p = sub.add_parser("eval", parents=[common], help="score predictions against a dataset")
    p.add_argument("--manifest", required=True)
    p.add_argument("--predictions", required=True)
    p.add_argument("--split", choices=("train", "val", "test"), default=None,
                   help="restrict scoring to one split (default: all samples)")
    p.add_argument("--json", default=None, help="write the report as JSON (- for stdout)")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("bench", parents=[common],
                       help="time EM reconstruction across iteration counts")
    p.add_argument("--side", type=int, default=32)
    p.add_argument("--bands", type=int, default=5)
    p.add_argument("--shifts", default=None)
    p.add_argument("--iterations", default="1,5,10,20,50,100,500,1000")
    p.add_argument("--repetitions", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--init", choices=("backprojection", "ones"), default="backprojection")
    p.add_argument("--out", default="-", help="CSV destination (- for stdout)")
    p.set_defaults(func=cmd_bench)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.threads = _resolve_threads(args)
        return args.func(args)
    except (ConfigError, DimensionError, DomainError, CapacityError, RangeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
