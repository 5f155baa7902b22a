import numpy as np
import pytest

from ctisim import (
    DimensionError,
    DomainError,
    EmConfig,
    HyperCube,
    ShiftGeometry,
    build_system_matrix,
    em_step,
    mse,
    poisson_loglik,
    reconstruct,
    simulate,
)

from oracles import dense_em_step, dense_system_matrix


def exact_instance(rng, side, bands):
    geom = ShiftGeometry.for_bands(side, bands)
    H = build_system_matrix(geom)
    f_true = rng.uniform(0.5, 255.0, size=H.n_voxels)
    return geom, H, f_true, H.matvec(f_true)


class TestEmConfig:
    def test_defaults(self):
        cfg = EmConfig()
        assert cfg.iterations == 20
        assert cfg.init_mode == "backprojection"
        assert cfg.epsilon == 1e-12
        assert cfg.record_trajectory is False

    def test_validation(self):
        with pytest.raises(DimensionError):
            EmConfig(iterations=0)
        with pytest.raises(DimensionError):
            EmConfig(init_mode="zeros")
        with pytest.raises(DomainError):
            EmConfig(epsilon=0.0)


class TestEmStep:
    def test_exact_data_fixed_point(self):
        rng = np.random.default_rng(40)
        _, H, f, g = exact_instance(rng, 12, 3)
        f_next = em_step(H, g, f)
        assert np.abs(f_next - f).max() <= 1e-9 * np.abs(f).max()

    def test_zero_estimate_is_absorbing(self):
        rng = np.random.default_rng(41)
        _, H, _, g = exact_instance(rng, 8, 2)
        f_next = em_step(H, g, np.zeros(H.n_voxels))
        assert not f_next.any()

    def test_zero_voxels_stay_zero(self):
        rng = np.random.default_rng(42)
        _, H, f, g = exact_instance(rng, 8, 2)
        f[::3] = 0.0
        f_next = em_step(H, g, f)
        assert not f_next[::3].any()

    def test_matches_dense_oracle(self):
        rng = np.random.default_rng(43)
        geom = ShiftGeometry.for_bands(4, 2)
        H = build_system_matrix(geom)
        dense = dense_system_matrix(geom)
        for _ in range(10):
            f = rng.uniform(0.1, 255.0, size=H.n_voxels)
            g = dense @ rng.uniform(0.1, 255.0, size=H.n_voxels)
            expected = dense_em_step(dense, g, f)
            got = em_step(H, g, f)
            assert np.abs(got - expected).max() <= 1e-9 * max(expected.max(), 1.0)

    def test_preserves_nonnegativity(self):
        rng = np.random.default_rng(44)
        _, H, _, g = exact_instance(rng, 8, 3)
        f = rng.uniform(0.0, 50.0, size=H.n_voxels)
        for _ in range(20):
            f = em_step(H, g, f)
            assert f.min() >= 0.0

    def test_dimension_errors(self):
        rng = np.random.default_rng(45)
        _, H, f, g = exact_instance(rng, 8, 2)
        with pytest.raises(DimensionError):
            em_step(H, g[:-1], f)
        with pytest.raises(DimensionError):
            em_step(H, g, f[:-1])

    def test_domain_errors(self):
        rng = np.random.default_rng(46)
        _, H, f, g = exact_instance(rng, 8, 2)
        bad = f.copy()
        bad[0] = np.nan
        with pytest.raises(DomainError):
            em_step(H, g, bad)
        bad[0] = -1.0
        with pytest.raises(DomainError):
            em_step(H, g, bad)


class TestPoissonLoglik:
    def test_maximized_at_unit_scaling(self):
        rng = np.random.default_rng(47)
        g = rng.uniform(1.0, 100.0, size=500)
        best = poisson_loglik(g, g)
        for t in (0.5, 0.9, 1.1, 2.0):
            assert poisson_loglik(g, t * g) < best

    def test_zero_observation(self):
        g_hat = np.array([1.0, 2.5, 4.0])
        assert poisson_loglik(np.zeros(3), g_hat) == -7.5

    def test_negative_rejected(self):
        with pytest.raises(DomainError):
            poisson_loglik(np.array([-1.0]), np.array([1.0]))
        with pytest.raises(DomainError):
            poisson_loglik(np.array([1.0]), np.array([-1.0]))

    def test_length_mismatch(self):
        with pytest.raises(DimensionError):
            poisson_loglik(np.ones(3), np.ones(4))

    def test_monotone_under_em(self):
        rng = np.random.default_rng(48)
        for _ in range(5):
            _, H, f_true, g = exact_instance(rng, 8, 2)
            f = H.rmatvec(g)
            prev = None
            for _ in range(50):
                f = em_step(H, g, f)
                ll = poisson_loglik(g, H.matvec(f))
                if prev is not None:
                    assert ll >= prev - 1e-9
                prev = ll


class TestReconstruct:
    def test_blank_image_gives_zero_estimate_and_warning(self):
        geom = ShiftGeometry.for_bands(8, 2)
        H = build_system_matrix(geom)
        img = simulate(HyperCube.zeros(2, 8, 8), geom)
        result = reconstruct(H, img)
        assert not result.estimate.data.any()
        assert result.warning is not None

    def test_ones_init_on_blank_image(self):
        geom = ShiftGeometry.for_bands(8, 2)
        H = build_system_matrix(geom)
        img = simulate(HyperCube.zeros(2, 8, 8), geom)
        result = reconstruct(H, img, EmConfig(iterations=3, init_mode="ones"))
        assert not result.estimate.data.any()
        assert result.warning is None

    def test_exact_data_residual_shrinks(self):
        rng = np.random.default_rng(49)
        geom = ShiftGeometry.for_bands(8, 3)
        H = build_system_matrix(geom)
        cube = HyperCube(rng.uniform(0.5, 255.0, size=(3, 8, 8)).astype(np.float32))
        img = simulate(cube, geom)
        result = reconstruct(H, img, EmConfig(iterations=500))
        g = img.data.reshape(-1).astype(np.float64)
        residual = np.abs(g - H.matvec(result.estimate.vector())).sum()
        assert residual / np.abs(g).sum() < 1e-3

    def test_estimate_shape_and_nonnegativity(self):
        rng = np.random.default_rng(50)
        geom = ShiftGeometry.for_bands(10, 4)
        H = build_system_matrix(geom)
        cube = HyperCube(rng.uniform(0.0, 255.0, size=(4, 10, 10)).astype(np.float32))
        result = reconstruct(H, simulate(cube, geom), EmConfig(iterations=5))
        assert result.estimate.data.shape == (4, 10, 10)
        assert result.estimate.data.min() >= 0.0

    def test_trajectory_recorded(self):
        rng = np.random.default_rng(51)
        geom = ShiftGeometry.for_bands(8, 2)
        H = build_system_matrix(geom)
        cube = HyperCube(rng.uniform(0.5, 255.0, size=(2, 8, 8)).astype(np.float32))
        result = reconstruct(H, simulate(cube, geom),
                             EmConfig(iterations=7, record_trajectory=True))
        assert len(result.trajectory) == 7
        assert [s.index for s in result.trajectory] == list(range(1, 8))
        residuals = [s.residual_l1 for s in result.trajectory]
        assert residuals[-1] <= residuals[0]
        assert all(s.ms >= 0.0 for s in result.trajectory)

    def test_trajectory_off_by_default(self):
        rng = np.random.default_rng(52)
        geom = ShiftGeometry.for_bands(8, 2)
        H = build_system_matrix(geom)
        cube = HyperCube(rng.uniform(0.5, 255.0, size=(2, 8, 8)).astype(np.float32))
        assert reconstruct(H, simulate(cube, geom)).trajectory is None

    def test_geometry_mismatch(self):
        H = build_system_matrix(ShiftGeometry.for_bands(8, 2))
        other = ShiftGeometry.for_bands(8, 2, "averaged")
        img = simulate(HyperCube.zeros(2, 8, 8), other)
        with pytest.raises(DimensionError):
            reconstruct(H, img)

    def test_more_iterations_reduce_mse(self):
        rng = np.random.default_rng(53)
        geom = ShiftGeometry.for_bands(12, 3)
        H = build_system_matrix(geom)
        cube = HyperCube(rng.uniform(0.5, 255.0, size=(3, 12, 12)).astype(np.float32))
        img = simulate(cube, geom)
        short = reconstruct(H, img, EmConfig(iterations=20))
        long = reconstruct(H, img, EmConfig(iterations=1000))
        assert mse(cube, long.estimate) < 0.9 * mse(cube, short.estimate)
