import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from ctisim import (
    HyperCube,
    DatasetManifest,
    ScoreAccumulator,
    iter_samples,
    read_cube,
    read_image,
    write_cube,
    write_predictions,
)
from ctisim.cli import build_parser, main


def run_cli(*argv) -> int:
    return main(list(argv))


class TestGenScene:
    def test_writes_cube(self, tmp_path):
        out = tmp_path / "scene.hsc"
        assert run_cli("gen-scene", "--kind", "mosaic", "--rows", "32", "--cols", "48",
                       "--bands", "3", "--seed", "5", "--out", str(out)) == 0
        cube = read_cube(out)
        assert cube.data.shape == (3, 32, 48)

    def test_blank_scene(self, tmp_path):
        out = tmp_path / "blank.hsc"
        assert run_cli("gen-scene", "--kind", "blank", "--rows", "16", "--cols", "16",
                       "--bands", "2", "--out", str(out)) == 0
        assert not read_cube(out).data.any()

    def test_pgm_export(self, tmp_path):
        out = tmp_path / "scene.hsc"
        pgm = tmp_path / "band.pgm"
        assert run_cli("gen-scene", "--rows", "16", "--cols", "16", "--bands", "2",
                       "--out", str(out), "--pgm", str(pgm)) == 0
        assert pgm.read_bytes().startswith(b"P5\n")

    def test_bad_dims(self, tmp_path):
        assert run_cli("gen-scene", "--rows", "2", "--cols", "2", "--bands", "1",
                       "--out", str(tmp_path / "x.hsc")) == 2


class TestSimulate:
    def test_blank_cube_gives_blank_image(self, tmp_path):
        cube_path = tmp_path / "cube.hsc"
        write_cube(HyperCube.zeros(5, 16, 16), cube_path)
        out = tmp_path / "img.hsc"
        assert run_cli("simulate", "--cube", str(cube_path), "--out", str(out)) == 0
        assert not read_image(out).data.any()

    def test_default_shifts_recorded_in_metadata(self, tmp_path):
        cube_path = tmp_path / "cube.hsc"
        write_cube(HyperCube.zeros(5, 20, 20), cube_path)
        out = tmp_path / "img.hsc"
        assert run_cli("simulate", "--cube", str(cube_path), "--out", str(out)) == 0
        meta = json.loads((tmp_path / "img.hsc.json").read_text())
        assert meta["geometry"]["shifts"] == [1, 3, 5, 7, 9]

    def test_missing_input(self, tmp_path):
        assert run_cli("simulate", "--cube", str(tmp_path / "nope.hsc"),
                       "--out", str(tmp_path / "img.hsc")) == 3

    def test_explicit_shifts(self, tmp_path):
        cube_path = tmp_path / "cube.hsc"
        write_cube(HyperCube.zeros(2, 12, 12), cube_path)
        out = tmp_path / "img.hsc"
        assert run_cli("simulate", "--cube", str(cube_path), "--shifts", "2,4",
                       "--out", str(out)) == 0
        assert read_image(out).geometry.shifts == (2, 4)

    def test_bad_shift_list(self, tmp_path):
        cube_path = tmp_path / "cube.hsc"
        write_cube(HyperCube.zeros(2, 12, 12), cube_path)
        assert run_cli("simulate", "--cube", str(cube_path), "--shifts", "2,x",
                       "--out", str(tmp_path / "img.hsc")) == 2


class TestEm:
    @pytest.fixture()
    def image_path(self, tmp_path):
        rng = np.random.default_rng(80)
        cube_path = tmp_path / "cube.hsc"
        cube = HyperCube(rng.uniform(0.5, 255, size=(2, 10, 10)).astype(np.float32))
        write_cube(cube, cube_path)
        out = tmp_path / "img.hsc"
        assert run_cli("simulate", "--cube", str(cube_path), "--out", str(out)) == 0
        return out

    def test_reconstruction_defaults(self, image_path, tmp_path):
        parser = build_parser()
        args = parser.parse_args(["em", "--image", "x", "--out", "y"])
        assert args.iterations == 20
        assert args.init == "backprojection"
        out = tmp_path / "recon.hsc"
        assert run_cli("em", "--image", str(image_path), "--out", str(out)) == 0
        assert read_cube(out).data.shape == (2, 10, 10)

    def test_trajectory_row_count(self, image_path, tmp_path):
        out = tmp_path / "recon.hsc"
        traj = tmp_path / "traj.csv"
        assert run_cli("em", "--image", str(image_path), "--iterations", "1000",
                       "--trajectory", str(traj), "--out", str(out)) == 0
        with open(traj) as fh:
            rows = list(csv.DictReader(fh))
        assert len(rows) == 1000
        assert set(rows[0]) == {"k", "loglik", "residual_l1", "ms"}

    def test_corrupted_image(self, tmp_path):
        bad = tmp_path / "bad.hsc"
        bad.write_bytes(b"garbage")
        (tmp_path / "bad.hsc.json").write_text(json.dumps({
            "format": "ctisim-image", "version": 1,
            "geometry": {"cube_side": 10, "shifts": [1, 3], "weight_mode": "unit"},
        }))
        assert run_cli("em", "--image", str(bad), "--out", str(tmp_path / "x.hsc")) == 3

    def test_geometry_flag_mismatch(self, image_path, tmp_path):
        assert run_cli("em", "--image", str(image_path), "--bands", "7",
                       "--out", str(tmp_path / "x.hsc")) == 2
        assert run_cli("em", "--image", str(image_path), "--shifts", "1,2",
                       "--out", str(tmp_path / "x.hsc")) == 2


@pytest.fixture(scope="module")
def dataset_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("cli_ds")
    code = run_cli("dataset", "--out", str(out), "--seed", "4",
                   "--source-rows", "40", "--source-cols", "48",
                   "--source-bands", "6", "--bands", "2", "--crop-side", "12",
                   "--n-full", "8", "--n-sparse", "6", "--n-blank", "3",
                   "--n-test", "4", "--sparse-strides", "5,7")
    assert code == 0
    return out


class TestDatasetAndEval:
    def test_dataset_layout(self, dataset_dir):
        for name in ("manifest.json", "records.bin", "train.records",
                     "val.records", "test.records"):
            assert (dataset_dir / name).exists()

    def test_eval_perfect_predictions(self, dataset_dir, tmp_path, capsys):
        manifest = DatasetManifest.load(dataset_dir)
        preds = tmp_path / "preds.bin"
        write_predictions(preds, ((s.id, t) for s, _, t in iter_samples(manifest)))
        json_out = tmp_path / "report.json"
        assert run_cli("eval", "--manifest", str(dataset_dir / "manifest.json"),
                       "--predictions", str(preds), "--json", str(json_out)) == 0
        report = json.loads(json_out.read_text())
        assert report["mse"] == 0.0
        assert report["mae"] == 0.0
        out = capsys.readouterr().out
        assert "total" in out

    def test_eval_matches_in_process_scoring(self, dataset_dir, tmp_path):
        rng = np.random.default_rng(81)
        manifest = DatasetManifest.load(dataset_dir)
        pairs = []
        for sample, _, target in iter_samples(manifest):
            noisy = HyperCube(np.clip(
                target.data + rng.normal(0, 3, size=target.data.shape), 0, None
            ).astype(np.float32))
            pairs.append((sample.id, noisy))
        preds = tmp_path / "preds.bin"
        write_predictions(preds, pairs)
        json_out = tmp_path / "report.json"
        assert run_cli("eval", "--manifest", str(dataset_dir / "manifest.json"),
                       "--predictions", str(preds), "--json", str(json_out)) == 0
        cli_report = json.loads(json_out.read_text())

        by_id = dict(pairs)
        acc = ScoreAccumulator()
        for sample, _, target in iter_samples(manifest):
            acc.add(target, by_id[sample.id], sample.category)
        expected = acc.finalize()
        assert cli_report["mse"] == expected.mse
        assert cli_report["mae"] == expected.mae

    def test_eval_missing_prediction_names_id(self, dataset_dir, tmp_path, capsys):
        manifest = DatasetManifest.load(dataset_dir)
        pairs = [(s.id, t) for s, _, t in iter_samples(manifest)][1:]
        preds = tmp_path / "preds.bin"
        write_predictions(preds, pairs)
        code = run_cli("eval", "--manifest", str(dataset_dir / "manifest.json"),
                       "--predictions", str(preds))
        assert code == 3
        first_missing = str(manifest.samples[0].id)
        assert first_missing in capsys.readouterr().err

    def test_eval_split_filter(self, dataset_dir, tmp_path):
        manifest = DatasetManifest.load(dataset_dir)
        preds = tmp_path / "preds.bin"
        write_predictions(preds, ((s.id, t) for s, _, t in iter_samples(manifest)))
        json_out = tmp_path / "report.json"
        assert run_cli("eval", "--manifest", str(dataset_dir / "manifest.json"),
                       "--predictions", str(preds), "--split", "test",
                       "--json", str(json_out)) == 0
        report = json.loads(json_out.read_text())
        assert report["count"] == 4


class TestBench:
    def test_default_iteration_list(self):
        parser = build_parser()
        args = parser.parse_args(["bench"])
        assert args.iterations == "1,5,10,20,50,100,500,1000"
        assert args.repetitions == 20

    def test_small_run(self, tmp_path):
        out = tmp_path / "bench.csv"
        assert run_cli("bench", "--side", "10", "--bands", "2", "--repetitions", "3",
                       "--iterations", "1,4,16", "--seed", "1", "--out", str(out)) == 0
        with open(out) as fh:
            rows = list(csv.DictReader(fh))
        assert [int(r["iterations"]) for r in rows] == [1, 4, 16]
        errors = [float(r["mse"]) for r in rows]
        assert errors[0] >= errors[1] >= errors[2]
        assert all(float(r["mean_ms"]) > 0 for r in rows)

    def test_bad_iteration_list(self, tmp_path):
        assert run_cli("bench", "--iterations", "0,5", "--repetitions", "1",
                       "--side", "8", "--bands", "1") == 2


class TestSysmat:
    def test_stats_output(self, capsys):
        assert run_cli("sysmat", "--side", "16", "--bands", "3") == 0
        stats = json.loads(capsys.readouterr().out)
        assert stats["voxels"] == 16 * 16 * 3
        assert stats["nnz"] == 5 * stats["voxels"]
        assert stats["nnz_per_column"] == 5

    def test_dump(self, tmp_path, capsys):
        dump = tmp_path / "H.bin"
        assert run_cli("sysmat", "--side", "8", "--bands", "2", "--dump", str(dump)) == 0
        assert dump.exists()


class TestExitCodes:
    def test_unknown_flag_exits_two(self):
        result = subprocess.run(
            [sys.executable, "-m", "ctisim.cli", "sysmat", "--side", "8", "--frobnicate"],
            capture_output=True,
        )
        assert result.returncode == 2

    def test_missing_subcommand_exits_two(self):
        result = subprocess.run([sys.executable, "-m", "ctisim.cli"], capture_output=True)
        assert result.returncode == 2

    def test_console_script_help(self):
        result = subprocess.run([sys.executable, "-m", "ctisim.cli", "--help"],
                                capture_output=True, text=True)
        assert result.returncode == 0
        assert "subcommand" in result.stdout or "em" in result.stdout
