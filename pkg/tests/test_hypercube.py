import io

import numpy as np
import pytest

from ctisim import (
    CropWindow,
    DimensionError,
    FormatError,
    HyperCube,
    RangeError,
    crop,
    enumerate_crops,
    read_cube,
    select_bands,
    write_cube,
    write_pgm,
)

from oracles import windows_bruteforce


def random_cube(rng, bands, rows, cols):
    return HyperCube(rng.uniform(0.0, 255.0, size=(bands, rows, cols)).astype(np.float32))


class TestHyperCube:
    def test_rejects_negative_values(self):
        data = np.ones((2, 4, 4), dtype=np.float32)
        data[0, 0, 0] = -1.0
        with pytest.raises(DimensionError):
            HyperCube(data)

    def test_rejects_non_finite(self):
        data = np.ones((1, 4, 4), dtype=np.float32)
        data[0, 1, 1] = np.nan
        with pytest.raises(DimensionError):
            HyperCube(data)

    def test_rejects_wrong_rank(self):
        with pytest.raises(DimensionError):
            HyperCube(np.ones((4, 4), dtype=np.float32))

    def test_rejects_empty_axis(self):
        with pytest.raises(DimensionError):
            HyperCube(np.ones((0, 4, 4), dtype=np.float32))

    def test_data_is_immutable(self):
        cube = HyperCube(np.ones((1, 4, 4), dtype=np.float32))
        with pytest.raises(ValueError):
            cube.data[0, 0, 0] = 2.0

    def test_vector_round_trip(self):
        rng = np.random.default_rng(0)
        cube = random_cube(rng, 3, 5, 7)
        back = HyperCube.from_vector(cube.vector(), 3, 5, 7)
        assert np.array_equal(back.data, cube.data)

    def test_vectorization_order_is_band_then_row(self):
        # vector index = band*rows*cols + row*cols + col
        data = np.arange(2 * 3 * 4, dtype=np.float32).reshape(2, 3, 4)
        cube = HyperCube(data)
        vec = cube.vector()
        assert vec[1 * 12 + 2 * 4 + 3] == data[1, 2, 3]


class TestCrop:
    def test_identity_crop(self):
        rng = np.random.default_rng(1)
        cube = random_cube(rng, 5, 100, 100)
        out = crop(cube, CropWindow(0, 0, 100))
        assert np.array_equal(out.data, cube.data)

    def test_values_copied_not_aliased(self):
        cube = HyperCube(np.ones((1, 8, 8), dtype=np.float32))
        out = crop(cube, CropWindow(0, 0, 4))
        assert out.data.base is None or out.data.base is not cube.data

    def test_adjacent_windows_match_index_arithmetic(self):
        rng = np.random.default_rng(2)
        cube = random_cube(rng, 5, 200, 400)
        a = crop(cube, CropWindow(0, 0, 100))
        b = crop(cube, CropWindow(0, 1, 100))
        assert np.array_equal(a.data, cube.data[:, 0:100, 0:100])
        assert np.array_equal(b.data, cube.data[:, 0:100, 1:101])
        # the overlap agrees, the fresh column is new
        assert np.array_equal(a.data[:, :, 1:], b.data[:, :, :-1])

    def test_out_of_bounds_window(self):
        rng = np.random.default_rng(3)
        cube = random_cube(rng, 2, 200, 400)
        with pytest.raises(RangeError):
            crop(cube, CropWindow(101, 0, 100))

    def test_negative_origin(self):
        with pytest.raises(RangeError):
            CropWindow(-1, 0, 10)


class TestEnumerateCrops:
    def test_stride_one_count(self):
        windows = enumerate_crops((200, 400), 100, 1, 1)
        assert len(windows) == 30401

    def test_sparse_stride_count(self):
        # floor(100/10)+1 = 11 rows of windows, floor(300/15)+1 = 21 columns
        windows = enumerate_crops((200, 400), 100, 10, 15)
        assert len(windows) == 231

    def test_single_window(self):
        windows = enumerate_crops((100, 100), 100, 1, 1)
        assert windows == [CropWindow(0, 0, 100)]

    def test_side_too_large(self):
        with pytest.raises(DimensionError):
            enumerate_crops((50, 100), 60, 1, 1)

    def test_zero_stride(self):
        with pytest.raises(DimensionError):
            enumerate_crops((50, 100), 10, 0, 1)

    def test_matches_bruteforce_and_crops_cleanly(self):
        rng = np.random.default_rng(4)
        for _ in range(25):
            rows = int(rng.integers(8, 60))
            cols = int(rng.integers(8, 60))
            side = int(rng.integers(1, min(rows, cols) + 1))
            sr = int(rng.integers(1, 12))
            sc = int(rng.integers(1, 12))
            windows = enumerate_crops((rows, cols), side, sr, sc)
            expected = windows_bruteforce(rows, cols, side, sr, sc)
            assert [(w.origin_row, w.origin_col) for w in windows] == expected
            count = ((rows - side) // sr + 1) * ((cols - side) // sc + 1)
            assert len(windows) == count
            cube = random_cube(rng, 1, rows, cols)
            for w in windows:
                crop(cube, w)


class TestSelectBands:
    def test_full_selection_is_identity(self):
        rng = np.random.default_rng(5)
        cube = random_cube(rng, 6, 10, 10)
        out = select_bands(cube, range(6))
        assert np.array_equal(out.data, cube.data)

    def test_five_of_216(self):
        rng = np.random.default_rng(6)
        cube = random_cube(rng, 216, 12, 12)
        picked = [3, 50, 101, 160, 215]
        out = select_bands(cube, picked)
        assert out.bands == 5
        assert out.rows == 12 and out.cols == 12
        for i, b in enumerate(picked):
            assert np.array_equal(out.band(i), cube.band(b))

    def test_index_past_end(self):
        rng = np.random.default_rng(7)
        cube = random_cube(rng, 4, 8, 8)
        with pytest.raises(RangeError):
            select_bands(cube, [0, 4])

    def test_duplicates_rejected(self):
        rng = np.random.default_rng(8)
        cube = random_cube(rng, 4, 8, 8)
        with pytest.raises(RangeError):
            select_bands(cube, [1, 1, 2])

    def test_descending_rejected(self):
        rng = np.random.default_rng(9)
        cube = random_cube(rng, 4, 8, 8)
        with pytest.raises(RangeError):
            select_bands(cube, [2, 1])

    def test_selection_composes(self):
        rng = np.random.default_rng(10)
        cube = random_cube(rng, 10, 8, 8)
        outer = [1, 3, 4, 7, 9]
        inner = [0, 2, 4]
        twice = select_bands(select_bands(cube, outer), inner)
        composed = select_bands(cube, [outer[i] for i in inner])
        assert np.array_equal(twice.data, composed.data)


class TestCubeIO:
    def test_round_trip_random_cubes(self, tmp_path):
        rng = np.random.default_rng(11)
        for i in range(10):
            bands = int(rng.integers(1, 8))
            rows = int(rng.integers(1, 40))
            cols = int(rng.integers(1, 40))
            cube = random_cube(rng, bands, rows, cols)
            path = tmp_path / f"cube{i}.hsc"
            write_cube(cube, path)
            back = read_cube(path)
            assert back.data.shape == cube.data.shape
            assert np.array_equal(back.data, cube.data)

    def test_round_trip_bytes_identical(self, tmp_path):
        rng = np.random.default_rng(12)
        cube = random_cube(rng, 3, 9, 9)
        p1, p2 = tmp_path / "a.hsc", tmp_path / "b.hsc"
        write_cube(cube, p1)
        write_cube(read_cube(p1), p2)
        assert p1.read_bytes() == p2.read_bytes()

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "bad.hsc"
        path.write_bytes(b"XXXX" + b"\x00" * 32)
        with pytest.raises(FormatError, match="magic"):
            read_cube(path)

    def test_truncated_payload_names_sizes(self, tmp_path):
        rng = np.random.default_rng(13)
        cube = random_cube(rng, 5, 10, 10)
        path = tmp_path / "cube.hsc"
        write_cube(cube, path)
        blob = path.read_bytes()
        path.write_bytes(blob[:-4])
        with pytest.raises(FormatError) as err:
            read_cube(path)
        expected = 5 * 10 * 10 * 4
        assert str(expected) in str(err.value)
        assert str(expected - 4) in str(err.value)

    def test_truncated_header(self, tmp_path):
        path = tmp_path / "short.hsc"
        path.write_bytes(b"HSC1\x01")
        with pytest.raises(FormatError, match="header"):
            read_cube(path)

    def test_header_dim_overflow(self, tmp_path):
        import struct
        path = tmp_path / "huge.hsc"
        path.write_bytes(struct.pack("<4sIII", b"HSC1", 2**31 - 1, 2**31 - 1, 8))
        with pytest.raises(FormatError, match="range"):
            read_cube(path)

    def test_zero_dim_rejected(self, tmp_path):
        import struct
        path = tmp_path / "zero.hsc"
        path.write_bytes(struct.pack("<4sIII", b"HSC1", 0, 10, 1))
        with pytest.raises(FormatError):
            read_cube(path)

    def test_stream_round_trip(self):
        rng = np.random.default_rng(14)
        buf = io.BytesIO()
        cubes = [random_cube(rng, 2, 4, 5) for _ in range(3)]
        for c in cubes:
            write_cube(c, buf)
        buf.seek(0)
        for c in cubes:
            back = read_cube(buf)
            assert np.array_equal(back.data, c.data)


def test_pgm_export(tmp_path):
    arr = np.linspace(0.0, 255.0, 12).reshape(3, 4)
    path = tmp_path / "band.pgm"
    write_pgm(arr, path, max_value=255.0)
    blob = path.read_bytes()
    assert blob.startswith(b"P5\n4 3\n65535\n")
    pixels = np.frombuffer(blob.split(b"65535\n", 1)[1], dtype=">u2")
    assert pixels[-1] == 65535 and pixels[0] == 0
