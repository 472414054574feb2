"""Rates, MSE/combiner algebra, transmit spectra, and the two beampattern ratios."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateBeampatternError, InfeasibleQoSError, SingularSystemError
from .model import ScenarioConfig, SteeringTables, Task, steering_matrix, steering_vector


@dataclass(frozen=True)
class HybridBeamformer:
    """Analog beamformer shared by all subcarriers plus per-subcarrier digital stages.

    f_rf has shape (M_t, N_t) with unit-modulus entries; f has shape
    (K, N_t, U), one digital beamformer per subcarrier.
    """

    f_rf: np.ndarray
    f: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "f_rf", np.asarray(self.f_rf, dtype=complex))
        object.__setattr__(self, "f", np.asarray(self.f, dtype=complex))
        if self.f.ndim != 3 or self.f_rf.ndim != 2:
            raise ValueError("f_rf must be (M_t, N_t) and f must be (K, N_t, U)")
        if self.f.shape[1] != self.f_rf.shape[1]:
            raise ValueError("digital beamformer rows must match the RF chain count")
        if np.max(np.abs(np.abs(self.f_rf) - 1.0)) > 1e-9:
            raise ValueError("analog beamformer entries must be unit modulus")

    @property
    def n_subcarriers(self) -> int:
        return self.f.shape[0]

    def effective(self, k: int) -> np.ndarray:
        """Cascade F_RF @ F_k, shape (M_t, U)."""
        return self.f_rf @ self.f[k]

    def effective_all(self) -> np.ndarray:
        """All cascades stacked, shape (K, M_t, U)."""
        return np.einsum("mn,knu->kmu", self.f_rf, self.f)


@dataclass(frozen=True)
class CombinerSet:
    """Per-(subcarrier, user) receive combiners and their MSE weights."""

    w: np.ndarray  # (K, U, M_r)
    omega: np.ndarray  # (K, U) positive weights


@dataclass(frozen=True)
class BeampatternGrid:
    """Transmit power spectrum sampled over subcarriers x angles.

    values[k, p] is the absolute spectrum including the symbol-duration
    squared factor; angles in degrees, freqs in Hz.
    """

    values: np.ndarray  # (K, P)
    angles: np.ndarray  # (P,)
    freqs: np.ndarray  # (K,)


def sinr(h_ku: np.ndarray, hbf: HybridBeamformer, w_ku: np.ndarray, sigma_n2: float, u: int, k: int) -> float:
    """Receive SINR of user u on subcarrier k under combiner w_ku.

    Returns 0 when the combined signal gain vanishes, which also covers the
    all-zero combiner.
    """
    gains = w_ku.conj() @ (h_ku @ hbf.effective(k))  # (U,) combined gain per stream
    sig = abs(gains[u]) ** 2
    if sig == 0.0:
        return 0.0
    interference = float(np.sum(np.abs(gains) ** 2) - sig)
    noise = float(sigma_n2 * np.real(np.vdot(w_ku, w_ku)))
    return float(sig / (interference + noise))


def rate(h_ku: np.ndarray, hbf: HybridBeamformer, w_ku: np.ndarray, sigma_n2: float, u: int, k: int) -> float:
    """Achievable rate log2(1 + SINR) in bits/s/Hz."""
    return float(np.log2(1.0 + sinr(h_ku, hbf, w_ku, sigma_n2, u, k)))


def mse(h_ku: np.ndarray, hbf: HybridBeamformer, w_ku: np.ndarray, sigma_n2: float, u: int, k: int) -> float:
    """Symbol estimation MSE of user u on subcarrier k."""
    gains = w_ku.conj() @ (h_ku @ hbf.effective(k))
    e = abs(gains[u] - 1.0) ** 2
    e += float(np.sum(np.abs(gains) ** 2) - abs(gains[u]) ** 2)
    e += float(sigma_n2 * np.real(np.vdot(w_ku, w_ku)))
    return float(e)


def mmse_combiner(h_ku: np.ndarray, hbf: HybridBeamformer, sigma_n2: float, u: int, k: int) -> np.ndarray:
    """MSE-minimizing receive combiner for user u on subcarrier k."""
    b = hbf.effective(k)
    hb = h_ku @ b  # (M_r, U)
    cov = hb @ hb.conj().T + sigma_n2 * np.eye(h_ku.shape[0])
    if sigma_n2 == 0.0 and np.linalg.matrix_rank(cov) < cov.shape[0]:
        raise SingularSystemError("received-signal covariance is rank deficient at zero noise")
    try:
        return np.linalg.solve(cov, hb[:, u])
    except np.linalg.LinAlgError as err:
        raise SingularSystemError(str(err)) from err


def rate_wmmse(omega: float, e: float) -> float:
    """Weighted-MSE rate surrogate log2(omega) - omega*e + 1.

    Equals log2(1 + SINR) when e is the MMSE and omega = 1/e.
    """
    if omega <= 0:
        raise ValueError("MSE weight must be positive")
    return float(np.log2(omega) - omega * e + 1.0)


def qos_bound_xi(omega: float, w_ku: np.ndarray, sigma_n2: float, chi: float) -> float:
    """Radius of the combined-gain ball that enforces rate >= chi.

    Raises InfeasibleQoSError when the radius is negative, i.e. the constraint
    set is empty for the given combiner and weight.
    """
    if omega <= 0:
        raise ValueError("MSE weight must be positive")
    noise = float(sigma_n2 * np.real(np.vdot(w_ku, w_ku)))
    xi = (np.log2(omega) - omega * noise + 1.0 - chi) / omega
    if xi < 0:
        raise InfeasibleQoSError(
            f"rate threshold {chi} unreachable for current combiner (radius {xi:.3e})",
            value=float(xi),
        )
    return float(xi)


def update_combiners(channels, hbf: HybridBeamformer, sigma_n2: float) -> tuple[CombinerSet, np.ndarray]:
    """Refresh all MMSE combiners and weights; also returns the MSE matrix (K, U)."""
    K, U = channels.H.shape[0], channels.H.shape[1]
    w = np.zeros((K, U, channels.H.shape[2]), dtype=complex)
    errs = np.zeros((K, U))
    for k in range(K):
        for u in range(U):
            w[k, u] = mmse_combiner(channels.H[k, u], hbf, sigma_n2, u, k)
            errs[k, u] = mse(channels.H[k, u], hbf, w[k, u], sigma_n2, u, k)
    if np.any(errs <= 0):
        raise SingularSystemError("MMSE hit zero; weights 1/e are undefined")
    return CombinerSet(w=w, omega=1.0 / errs), errs


def grid_powers(effective: np.ndarray, steering: np.ndarray) -> np.ndarray:
    """||B_k^H a(f_k, theta)||^2 for stacked beamformers (K, M_t, U) over (K, M_t, X)."""
    proj = np.einsum("kmu,kmx->kux", effective.conj(), steering)
    return np.sum(np.abs(proj) ** 2, axis=1)


def transmit_spectrum(hbf: HybridBeamformer, cfg: ScenarioConfig, k: int, theta_deg: float) -> float:
    """Absolute transmit power spectrum at one subcarrier and angle."""
    f = cfg.subcarrier_frequencies()[k]
    a = steering_vector(f, theta_deg, cfg.M_t, cfg.d)
    return float(cfg.delta_t**2 * np.sum(np.abs(hbf.effective(k).conj().T @ a) ** 2))


def beampattern_grid(hbf: HybridBeamformer, cfg: ScenarioConfig) -> BeampatternGrid:
    """Sample the absolute spectrum over the full angle grid for every subcarrier."""
    freqs = cfg.subcarrier_frequencies()
    steering = np.stack([steering_matrix(f, cfg.grid.full_grid, cfg.M_t, cfg.d) for f in freqs])
    values = cfg.delta_t**2 * grid_powers(hbf.effective_all(), steering)
    return BeampatternGrid(values=values, angles=cfg.grid.full_grid.copy(), freqs=freqs)


def aismmr_from_powers(side_p: np.ndarray, main_p: np.ndarray) -> float:
    """Average integrated-sidelobe to minimum-mainlobe ratio from sampled powers."""
    floor = main_p.min(axis=1)
    if np.any(floor <= 0):
        raise DegenerateBeampatternError("mainlobe power vanishes at some subcarrier/angle")
    return float(np.mean(side_p.sum(axis=1) / floor))


def apsimr_from_powers(side_p: np.ndarray, main_p: np.ndarray) -> float:
    """Average peak-sidelobe to integrated-mainlobe ratio from sampled powers."""
    total = main_p.sum(axis=1)
    if np.any(total <= 0):
        raise DegenerateBeampatternError("integrated mainlobe power vanishes at some subcarrier")
    return float(np.mean(side_p.max(axis=1) / total))


def _set_powers(hbf: HybridBeamformer, cfg: ScenarioConfig, tables: SteeringTables | None):
    if tables is None:
        tables = SteeringTables.build(cfg)
    eff = hbf.effective_all()
    return grid_powers(eff, tables.side), grid_powers(eff, tables.main)


def aismmr(hbf: HybridBeamformer, cfg: ScenarioConfig, tables: SteeringTables | None = None) -> float:
    """Scan/detect beampattern objective; the symbol-duration factor cancels."""
    side_p, main_p = _set_powers(hbf, cfg, tables)
    return aismmr_from_powers(side_p, main_p)


def apsimr(hbf: HybridBeamformer, cfg: ScenarioConfig, tables: SteeringTables | None = None) -> float:
    """Tracking beampattern objective; the symbol-duration factor cancels."""
    side_p, main_p = _set_powers(hbf, cfg, tables)
    return apsimr_from_powers(side_p, main_p)


def task_objective(hbf: HybridBeamformer, cfg: ScenarioConfig, tables: SteeringTables | None = None) -> float:
    """Dispatch to the beampattern metric matching cfg.task."""
    if cfg.task is Task.SD:
        return aismmr(hbf, cfg, tables)
    return apsimr(hbf, cfg, tables)
