import dataclasses
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hybrid_sindy import diagnostics as diag
from hybrid_sindy.config import bundled_config, load_sweep_config
from hybrid_sindy.dynamics import COMPRESSION, FLIGHT, Hopper
from hybrid_sindy.features import build_library


@pytest.fixture(scope="module")
def sweep_cfg():
    return load_sweep_config(bundled_config("sweep"))


@pytest.fixture(scope="module")
def sweep_data(sweep_cfg):
    return diag.sweep_training_data(sweep_cfg)


class TestBound:
    def test_zero_noise(self):
        assert diag.ls_error_bound(100.0, 0.0, 2.0) == 0.0

    def test_half(self):
        assert diag.ls_error_bound(10.0, 0.05, 1.0) == pytest.approx(1.0)

    def test_vacuous(self):
        assert diag.ls_error_bound(10.0, 0.1, 1.0) == math.inf
        assert diag.ls_error_bound(10.0, 1.0, 1.0) == math.inf

    def test_domain(self):
        with pytest.raises(ValueError):
            diag.ls_error_bound(0.5, 0.1, 1.0)

    @given(st.floats(1, 1e3), st.floats(0, 1e-3), st.floats(0.1, 1.0), st.floats(1.0001, 2.0))
    def test_monotone(self, kappa, eps, C, f):
        b = diag.ls_error_bound(kappa, eps, C)
        for other in (diag.ls_error_bound(kappa * f, eps, C), diag.ls_error_bound(kappa, eps * f, C),
                      diag.ls_error_bound(kappa, eps, C * f)):
            assert other >= b

    def test_bound_holds_on_planted_problem(self, rng):
        lib = build_library(2, 2)
        C = diag.fit_library_constant(lib, [rng.uniform(1, 2, (80, 2)) for _ in range(10)], [1e-5, 1e-3], rng)
        X = rng.uniform(1, 2, (80, 2))
        Xi = rng.normal(size=(lib.p, 2))
        for eps in (1e-6, 1e-5, 1e-4):
            measured, bound = diag.bound_trial(lib, X, Xi, eps, C, rng)
            assert measured <= bound


class TestSuccessFactor:
    def test_single_nonzero(self):
        np.testing.assert_allclose(diag.threshold_success_factor(np.array([[0.0], [3.0]])), [1.0])

    def test_hopper_columns(self):
        lib = build_library(2, 2, ("y", "v"))
        truth = Hopper().true_coefficients(lib)
        comp = diag.threshold_success_factor(truth[COMPRESSION][:, [1]])[0]
        flight = diag.threshold_success_factor(truth[FLIGHT][:, [1]])[0]
        assert comp == pytest.approx(math.sqrt(2) * 11 / 10)
        assert flight == 1.0
        assert comp > flight

    @given(st.floats(1e-3, 1e3) | st.floats(-1e3, -1e-3))
    def test_scale_invariant(self, c):
        Xi = np.array([[1.0, 0.0], [-2.5, 0.3], [0.0, 4.0]])
        np.testing.assert_allclose(diag.threshold_success_factor(c * Xi), diag.threshold_success_factor(Xi))

    def test_zero_column_flagged(self):
        out = diag.threshold_success_factor(np.array([[1.0, 0.0], [2.0, 0.0]]))
        assert out[0] == pytest.approx(2 * math.sqrt(2)) and math.isnan(out[1])
        with pytest.raises(ValueError):
            diag.threshold_success_factor(np.zeros((3, 2)))


class TestSweep:
    def test_regime_clusters_are_pure(self, sweep_data):
        for regime in (FLIGHT, COMPRESSION):
            rows = diag.regime_cluster(sweep_data, regime, 300)
            assert len(rows) == 300
            assert set(sweep_data.labels[rows]) == {regime}

    def test_flight_cluster_contains_apex(self, sweep_data):
        rows = diag.regime_cluster(sweep_data, FLIGHT, 10)
        flight = diag.regime_subset(sweep_data, FLIGHT)
        assert flight[np.argmax(sweep_data.X[flight, 0])] in rows

    def test_oversized_cluster_skipped(self, sweep_cfg, sweep_data):
        cfg = dataclasses.replace(sweep_cfg, K_grid=[10 ** 7], eps_grid=[1e-4], realizations=1)
        cells = diag.noise_sweep(cfg, data=sweep_data)
        assert all(c.skipped for c in cells)

    def test_grid_shape_and_reproducibility(self, sweep_cfg, sweep_data):
        cfg = dataclasses.replace(sweep_cfg, realizations=1)
        a = diag.noise_sweep(cfg, data=sweep_data)
        b = diag.noise_sweep(cfg, data=sweep_data)
        assert len(a) == 2 * 30
        assert [c.success_fraction for c in a] == [c.success_fraction for c in b]

    def test_parallel_matches_serial(self, sweep_cfg, sweep_data):
        cfg = dataclasses.replace(sweep_cfg, K_grid=[30, 100], realizations=2)
        serial = diag.noise_sweep(cfg, data=sweep_data)
        parallel = diag.noise_sweep(cfg, jobs=2, data=sweep_data)
        assert serial == parallel

    def test_success_non_increasing_in_noise(self, sweep_cfg, sweep_data):
        cells = diag.noise_sweep(sweep_cfg, data=sweep_data)
        violations = 0
        for regime in sweep_cfg.regimes:
            for K in sweep_cfg.K_grid:
                row = [c.success_fraction for c in cells if c.regime == regime and c.K == K]
                # allow one realization of slack for sampling noise
                violations += sum(b > a + 1 / sweep_cfg.realizations for a, b in zip(row, row[1:]))
        assert violations <= 2

    def test_cell_row(self):
        cell = diag.SweepCell("flight", 30, 1e-2, 5, 3, 1e3)
        row = cell.to_row()
        assert row["success_fraction"] == 0.6 and row["kappa_eps"] == pytest.approx(10.0)
