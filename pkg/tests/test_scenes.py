import numpy as np
import pytest

from ctisim import ConfigError, DimensionError, SceneSpec, generate_scene, mosaic_region_map


def test_blank_is_all_zero():
    cube = generate_scene(SceneSpec("blank", 100, 100, 5))
    assert cube.data.shape == (5, 100, 100)
    assert not cube.data.any()


def test_mosaic_deterministic():
    spec = SceneSpec("mosaic", 200, 400, 5, seed=7)
    a = generate_scene(spec)
    b = generate_scene(spec)
    assert a.data.tobytes() == b.data.tobytes()


def test_blobs_deterministic():
    spec = SceneSpec("blobs", 64, 64, 4, seed=11)
    a = generate_scene(spec)
    b = generate_scene(spec)
    assert a.data.tobytes() == b.data.tobytes()


@pytest.mark.parametrize("seeds", [(0, 1), (7, 8), (100, 4242)])
def test_different_seeds_differ(seeds):
    for kind in ("mosaic", "blobs"):
        a = generate_scene(SceneSpec(kind, 32, 32, 3, seed=seeds[0]))
        b = generate_scene(SceneSpec(kind, 32, 32, 3, seed=seeds[1]))
        assert not np.array_equal(a.data, b.data)


def test_mosaic_constant_within_each_rectangle():
    spec = SceneSpec("mosaic", 32, 32, 3, seed=7)
    cube = generate_scene(spec)
    region = mosaic_region_map(spec)
    for region_id in np.unique(region):
        mask = region == region_id
        for band in range(cube.bands):
            values = cube.band(band)[mask]
            assert np.all(values == values[0])
            assert np.var(values.astype(np.float64)) == 0.0


def test_mosaic_covers_full_grid():
    spec = SceneSpec("mosaic", 40, 60, 2, seed=0, grid_shape=(4, 6))
    region = mosaic_region_map(spec)
    assert set(np.unique(region)) == set(range(24))


def test_values_within_scale():
    for kind in ("mosaic", "blobs"):
        cube = generate_scene(SceneSpec(kind, 48, 48, 5, seed=3, value_scale=100.0))
        assert cube.data.min() >= 0.0
        assert cube.data.max() <= 100.0


def test_dims_too_small():
    with pytest.raises(DimensionError):
        generate_scene(SceneSpec("mosaic", 4, 100, 5))
    with pytest.raises(DimensionError):
        generate_scene(SceneSpec("blobs", 100, 100, 0))


def test_unknown_kind():
    with pytest.raises(ConfigError):
        SceneSpec("gradient", 32, 32, 3)
