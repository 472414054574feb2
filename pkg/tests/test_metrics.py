"""Rate/MSE identities, combiners, spectra, and beampattern ratio tests."""

import numpy as np
import pytest

from dfrc_hbf.errors import (
    DegenerateBeampatternError,
    InfeasibleQoSError,
    SingularSystemError,
)
from dfrc_hbf.metrics import (
    HybridBeamformer,
    aismmr,
    aismmr_from_powers,
    apsimr,
    apsimr_from_powers,
    beampattern_grid,
    grid_powers,
    mmse_combiner,
    mse,
    qos_bound_xi,
    rate,
    rate_wmmse,
    sinr,
    task_objective,
    transmit_spectrum,
    update_combiners,
)
from dfrc_hbf.model import AngleGrids, ScenarioConfig, generate_channel

GRID = AngleGrids.from_bounds((-5.0, 5.0), [(-90.0, -8.0), (8.0, 90.0)], 181)


def random_hbf(rng, m_t, n_t, u, k):
    f_rf = np.exp(2j * np.pi * rng.uniform(size=(m_t, n_t)))
    f = rng.normal(size=(k, n_t, u)) + 1j * rng.normal(size=(k, n_t, u))
    return HybridBeamformer(f_rf=f_rf, f=f)


def diag_hbf(b_target):
    """2x2 single-subcarrier beamformer whose cascade equals b_target."""
    f_rf = np.array([[1.0, 1.0], [1.0, -1.0]], dtype=complex)
    f0 = np.linalg.solve(f_rf, b_target)
    return HybridBeamformer(f_rf=f_rf, f=f0[None])


class TestHybridBeamformer:
    def test_rejects_non_unit_modulus(self):
        with pytest.raises(ValueError):
            HybridBeamformer(f_rf=np.array([[1.0, 0.5]]), f=np.zeros((1, 2, 1)))

    def test_rejects_shape_mismatch(self):
        with pytest.raises(ValueError):
            HybridBeamformer(f_rf=np.ones((4, 2)), f=np.zeros((1, 3, 1)))

    def test_effective_cascade(self):
        rng = np.random.default_rng(5)
        hbf = random_hbf(rng, 4, 2, 2, 3)
        assert np.allclose(hbf.effective(1), hbf.f_rf @ hbf.f[1])
        assert np.allclose(hbf.effective_all()[1], hbf.effective(1))


class TestSinrRateMse:
    def test_known_sinr_and_rate(self):
        hbf = diag_hbf(np.array([[2.0, 0.0], [0.0, 1.0]], dtype=complex))
        h = np.eye(2, dtype=complex)
        w = np.array([1.0, 0.0], dtype=complex)
        assert sinr(h, hbf, w, 1.0, u=0, k=0) == pytest.approx(4.0, abs=1e-12)
        assert rate(h, hbf, w, 1.0, u=0, k=0) == pytest.approx(np.log2(5.0), abs=1e-12)

    def test_zero_combiner(self):
        hbf = diag_hbf(np.array([[2.0, 0.0], [0.0, 1.0]], dtype=complex))
        h = np.eye(2, dtype=complex)
        w = np.zeros(2, dtype=complex)
        assert sinr(h, hbf, w, 1.0, u=0, k=0) == 0.0
        # with no combining the symbol estimate is 0, so the error is |0-1|^2
        assert mse(h, hbf, w, 1.0, u=0, k=0) == pytest.approx(1.0, abs=1e-12)

    def test_interference_enters_sinr(self):
        hbf = diag_hbf(np.array([[2.0, 1.0], [0.0, 1.0]], dtype=complex))
        h = np.eye(2, dtype=complex)
        w = np.array([1.0, 0.0], dtype=complex)
        # gains (2, 1): signal 4, interference 1, noise 1
        assert sinr(h, hbf, w, 1.0, u=0, k=0) == pytest.approx(2.0, abs=1e-12)


class TestMmseCombiner:
    def test_scalar_receive_formula(self):
        rng = np.random.default_rng(2)
        hbf = random_hbf(rng, 4, 2, 2, 1)
        h = rng.normal(size=(1, 4)) + 1j * rng.normal(size=(1, 4))
        got = mmse_combiner(h, hbf, 0.7, u=1, k=0)
        s = (h @ hbf.effective(0))[0]  # (U,) received gains
        expected = s[1] / (np.sum(np.abs(s) ** 2) + 0.7)
        assert np.allclose(got, expected, atol=1e-12)

    def test_minimizes_mse(self):
        rng = np.random.default_rng(9)
        for trial in range(20):
            hbf = random_hbf(rng, 6, 3, 2, 1)
            h = rng.normal(size=(3, 6)) + 1j * rng.normal(size=(3, 6))
            w_opt = mmse_combiner(h, hbf, 0.5, u=0, k=0)
            e_opt = mse(h, hbf, w_opt, 0.5, u=0, k=0)
            for _ in range(10):
                d = rng.normal(size=3) + 1j * rng.normal(size=3)
                e_other = mse(h, hbf, w_opt + 0.05 * d, 0.5, u=0, k=0)
                assert e_other >= e_opt - 1e-12

    def test_zero_noise_rank_deficiency(self):
        hbf = HybridBeamformer(f_rf=np.ones((2, 1)), f=np.ones((1, 1, 1)))
        h = np.ones((2, 2), dtype=complex)
        with pytest.raises(SingularSystemError):
            mmse_combiner(h, hbf, 0.0, u=0, k=0)


class TestWmmseIdentity:
    def test_rate_matches_weighted_mse_at_optimum(self):
        # with the MMSE combiner, e = 1/(1+SINR); picking omega = 1/e makes the
        # weighted-MSE expression collapse to log2(1 + SINR)
        rng = np.random.default_rng(31)
        for trial in range(100):
            m_t = int(rng.integers(2, 7))
            n_t = int(rng.integers(1, m_t + 1))
            u_cnt = int(rng.integers(1, n_t + 1))
            m_r = int(rng.integers(1, 5))
            hbf = random_hbf(rng, m_t, n_t, u_cnt, 1)
            h = rng.normal(size=(m_r, m_t)) + 1j * rng.normal(size=(m_r, m_t))
            sigma = float(rng.uniform(0.1, 2.0))
            u = int(rng.integers(u_cnt))
            w = mmse_combiner(h, hbf, sigma, u=u, k=0)
            e = mse(h, hbf, w, sigma, u=u, k=0)
            r_direct = rate(h, hbf, w, sigma, u=u, k=0)
            assert e == pytest.approx(1.0 / (1.0 + sinr(h, hbf, w, sigma, u, 0)), abs=1e-9)
            assert rate_wmmse(1.0 / e, e) == pytest.approx(r_direct, abs=1e-9)

    def test_rejects_nonpositive_weight(self):
        with pytest.raises(ValueError):
            rate_wmmse(0.0, 0.5)


class TestQosRadius:
    def test_known_radius(self):
        w = np.array([0.5], dtype=complex)
        # log2(2) - 2*0.25 + 1 - 0.5 = 1.0, divided by omega=2
        assert qos_bound_xi(2.0, w, 1.0, 0.5) == pytest.approx(0.5, abs=1e-12)

    def test_infeasible_raises_with_value(self):
        w = np.array([1.0], dtype=complex)
        with pytest.raises(InfeasibleQoSError) as exc:
            qos_bound_xi(1.0, w, 1.0, 10.0)
        assert exc.value.value < 0


class TestUpdateCombiners:
    def test_matches_per_entry_calls(self):
        rng = np.random.default_rng(17)
        cfg = ScenarioConfig(
            M_t=8, N_t=3, M_r=2, U=2, K=3, f_c=1e10, B=2.56e9,
            P_k=2.0, sigma_n2=1.0, chi=1.0, grid=GRID,
        )
        channels = generate_channel(cfg, rng)
        hbf = random_hbf(rng, 8, 3, 2, 3)
        combiners, errs = update_combiners(channels, hbf, cfg.sigma_n2)
        assert combiners.w.shape == (3, 2, 2)
        for k in range(3):
            for u in range(2):
                w_ref = mmse_combiner(channels.H[k, u], hbf, cfg.sigma_n2, u, k)
                assert np.allclose(combiners.w[k, u], w_ref, atol=1e-12)
                e_ref = mse(channels.H[k, u], hbf, w_ref, cfg.sigma_n2, u, k)
                assert errs[k, u] == pytest.approx(e_ref, abs=1e-12)
                assert combiners.omega[k, u] == pytest.approx(1.0 / e_ref, rel=1e-12)


class TestSpectra:
    def test_grid_powers_matches_loops(self):
        rng = np.random.default_rng(21)
        eff = rng.normal(size=(2, 4, 3)) + 1j * rng.normal(size=(2, 4, 3))
        steer = rng.normal(size=(2, 4, 5)) + 1j * rng.normal(size=(2, 4, 5))
        got = grid_powers(eff, steer)
        for k in range(2):
            for x in range(5):
                ref = sum(
                    abs(np.vdot(eff[k, :, u], steer[k, :, x])) ** 2 for u in range(3)
                )
                assert got[k, x] == pytest.approx(ref, rel=1e-12)

    def test_spectrum_scaling(self):
        cfg = ScenarioConfig(
            M_t=4, N_t=2, M_r=2, U=2, K=2, f_c=1e10, B=2.56e9,
            P_k=2.0, sigma_n2=1.0, chi=1.0, grid=GRID,
        )
        rng = np.random.default_rng(4)
        hbf = random_hbf(rng, 4, 2, 2, 2)
        scaled = HybridBeamformer(f_rf=hbf.f_rf, f=3.0 * hbf.f)
        p1 = transmit_spectrum(hbf, cfg, 1, 12.0)
        p2 = transmit_spectrum(scaled, cfg, 1, 12.0)
        assert p2 == pytest.approx(9.0 * p1, rel=1e-12)

    def test_grid_samples_match_pointwise_spectrum(self):
        cfg = ScenarioConfig(
            M_t=4, N_t=2, M_r=2, U=1, K=2, f_c=1e10, B=2.56e9,
            P_k=2.0, sigma_n2=1.0, chi=1.0, grid=GRID,
        )
        rng = np.random.default_rng(6)
        hbf = random_hbf(rng, 4, 2, 1, 2)
        bp = beampattern_grid(hbf, cfg)
        assert bp.values.shape == (2, GRID.full_grid.size)
        for k in (0, 1):
            for p in (0, 40, 90):
                ref = transmit_spectrum(hbf, cfg, k, float(bp.angles[p]))
                assert bp.values[k, p] == pytest.approx(ref, rel=1e-10)


class TestBeampatternRatios:
    def test_from_powers_known_values(self):
        side = np.ones((2, 5))
        main = np.ones((2, 3))
        assert aismmr_from_powers(side, main) == pytest.approx(5.0)
        assert apsimr_from_powers(side, main) == pytest.approx(1.0 / 3.0)

    def test_zero_sidelobe_gives_zero(self):
        side = np.zeros((2, 5))
        main = np.ones((2, 3))
        assert aismmr_from_powers(side, main) == 0.0
        assert apsimr_from_powers(side, main) == 0.0

    def test_degenerate_mainlobe_raises(self):
        side = np.ones((1, 4))
        with pytest.raises(DegenerateBeampatternError):
            aismmr_from_powers(side, np.array([[1.0, 0.0]]))
        with pytest.raises(DegenerateBeampatternError):
            apsimr_from_powers(side, np.zeros((1, 2)))

    def test_single_antenna_is_isotropic(self):
        # one element radiates the same power in every direction, so the
        # ratios collapse to the sidelobe count and 1/mainlobe count
        cfg = ScenarioConfig(
            M_t=1, N_t=1, M_r=1, U=1, K=2, f_c=1e10, B=2.56e9,
            P_k=1.0, sigma_n2=1.0, chi=1.0, grid=GRID,
        )
        hbf = HybridBeamformer(f_rf=np.ones((1, 1)), f=np.full((2, 1, 1), 0.3 + 0.4j))
        s_cnt = cfg.grid.theta_side.size
        m_cnt = cfg.grid.theta_main.size
        assert aismmr(hbf, cfg) == pytest.approx(float(s_cnt), rel=1e-9)
        assert apsimr(hbf, cfg) == pytest.approx(1.0 / m_cnt, rel=1e-9)

    def test_task_dispatch(self):
        cfg = ScenarioConfig(
            M_t=4, N_t=2, M_r=2, U=2, K=2, f_c=1e10, B=2.56e9,
            P_k=2.0, sigma_n2=1.0, chi=1.0, grid=GRID, task="sd",
        )
        rng = np.random.default_rng(14)
        hbf = random_hbf(rng, 4, 2, 2, 2)
        assert task_objective(hbf, cfg) == pytest.approx(aismmr(hbf, cfg))
        cfg_tt = cfg.replace(task="tt")
        assert task_objective(hbf, cfg_tt) == pytest.approx(apsimr(hbf, cfg_tt))
