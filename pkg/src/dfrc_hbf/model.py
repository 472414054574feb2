"""Scenario configuration, array geometry, and clustered mmWave channel generation."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import ConfigError

SPEED_OF_LIGHT = 299_792_458.0  # m/s


class Task(Enum):
    """Radar operating mode the beampattern is shaped for."""

    SD = "sd"  # scanning/detection: integrated sidelobe over minimum mainlobe
    TT = "tt"  # target tracking: peak sidelobe over integrated mainlobe


def steering_vector(f: float, theta_deg: float, m_t: int, d: float) -> np.ndarray:
    """Space-frequency steering vector of a ULA.

    Entry m (m = 1..m_t) is exp(j*2*pi*f*tau_m) with tau_m = (m-1)*d*sin(theta)/c,
    so the vector depends on the actual subcarrier frequency, not just the carrier.

    Args:
        f: frequency in Hz, > 0.
        theta_deg: angle from broadside in degrees, |theta| <= 90.
        m_t: number of elements.
        d: element spacing in meters.

    Returns:
        Complex array of shape (m_t,), unit-modulus entries.
    """
    if f <= 0:
        raise ValueError(f"frequency must be positive, got {f}")
    if abs(theta_deg) > 90:
        raise ValueError(f"angle must lie in [-90, 90] degrees, got {theta_deg}")
    tau = np.arange(m_t) * d * np.sin(np.deg2rad(theta_deg)) / SPEED_OF_LIGHT
    return np.exp(2j * np.pi * f * tau)


def steering_matrix(f: float, thetas_deg: np.ndarray, m_t: int, d: float) -> np.ndarray:
    """Stack steering vectors for a set of angles; shape (m_t, len(thetas_deg))."""
    thetas_deg = np.asarray(thetas_deg, dtype=float)
    if thetas_deg.size and np.max(np.abs(thetas_deg)) > 90:
        raise ValueError("angles must lie in [-90, 90] degrees")
    if f <= 0:
        raise ValueError(f"frequency must be positive, got {f}")
    tau = np.outer(np.arange(m_t), d * np.sin(np.deg2rad(thetas_deg)) / SPEED_OF_LIGHT)
    return np.exp(2j * np.pi * f * tau)


@dataclass(frozen=True)
class AngleGrids:
    """Partition of the angular grid into mainlobe, sidelobe and transition sets.

    All angles are in degrees. The three sets are disjoint and together cover
    the full grid; membership was decided by closed-interval tests, so interval
    endpoints land in the mainlobe/sidelobe sets rather than the transition.
    """

    theta_main: np.ndarray
    theta_side: np.ndarray
    theta_trans: np.ndarray
    full_grid: np.ndarray

    def __post_init__(self):
        for name in ("theta_main", "theta_side", "theta_trans", "full_grid"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))
        if self.theta_main.size < 1 or self.theta_side.size < 1:
            raise ValueError("mainlobe and sidelobe sets must be non-empty")
        if np.intersect1d(self.theta_main, self.theta_side).size:
            raise ValueError("mainlobe and sidelobe sets overlap")
        union = np.sort(np.concatenate([self.theta_main, self.theta_side, self.theta_trans]))
        if union.size != self.full_grid.size or not np.array_equal(union, np.sort(self.full_grid)):
            raise ValueError("main/side/transition sets must partition the full grid")

    @classmethod
    def from_bounds(
        cls,
        mainlobe: tuple[float, float],
        sidelobe: list[tuple[float, float]],
        n_points: int = 361,
        span: tuple[float, float] = (-90.0, 90.0),
    ) -> "AngleGrids":
        """Build grids from interval bounds over a uniform angle grid."""
        lo, hi = float(mainlobe[0]), float(mainlobe[1])
        if not lo < hi:
            raise ValueError("mainlobe interval must have positive width")
        full = np.linspace(span[0], span[1], int(n_points))
        in_main = (full >= lo) & (full <= hi)
        in_side = np.zeros_like(in_main)
        for a, b in sidelobe:
            a, b = float(a), float(b)
            if not a < b:
                raise ValueError("sidelobe intervals must have positive width")
            if a <= hi and lo <= b:
                raise ValueError("sidelobe interval overlaps the mainlobe")
            in_side |= (full >= a) & (full <= b)
        in_trans = ~(in_main | in_side)
        return cls(full[in_main], full[in_side], full[in_trans], full)


@dataclass(frozen=True)
class Tolerances:
    """Numerical tolerances; defaults are used throughout unless overridden."""

    res: float = 1e-3  # stop when all four consensus residual norms fall below this
    power: float = 1e-8  # relative accuracy of the per-subcarrier power equality
    root: float = 1e-10  # scalar root-search residual
    zero: float = 1e-12  # threshold below which a norm counts as vanished

    def __post_init__(self):
        if self.res < 0 or self.power <= 0 or self.root <= 0 or self.zero <= 0:
            raise ValueError("tolerances must be positive (res may be zero)")


@dataclass(frozen=True)
class ScenarioConfig:
    """Full description of one solver run.

    Scalars chi / P_k / rho broadcast to per-user and per-subcarrier arrays.
    The subcarrier frequencies follow f_k = f_c + (k - K/2) * delta_f for
    k = 1..K with delta_f = B / K.
    """

    M_t: int
    N_t: int
    M_r: int
    U: int
    K: int
    f_c: float
    B: float
    P_k: object
    sigma_n2: float
    chi: object
    grid: AngleGrids
    task: Task = Task.SD
    d: float | None = None
    rho: object = (1.0, 1.0, 1.0, 1.0)
    max_iter: int = 1000
    ccd_max: int = 10
    seed: int = 0
    L: int = 4
    N_ray: int = 3
    tolerances: Tolerances = Tolerances()

    def __post_init__(self):
        if not (self.M_t >= self.N_t >= self.U >= 1):
            raise ValueError("need M_t >= N_t >= U >= 1")
        if self.M_r < 1 or self.K < 1:
            raise ValueError("M_r and K must be at least 1")
        if self.f_c <= 0 or self.B <= 0:
            raise ValueError("f_c and B must be positive")
        if self.sigma_n2 < 0:
            raise ValueError("noise variance must be non-negative")
        if self.L < 1 or self.N_ray < 1:
            raise ValueError("L and N_ray must be at least 1")
        if self.max_iter < 0 or self.ccd_max < 1:
            raise ValueError("max_iter must be >= 0 and ccd_max >= 1")
        if isinstance(self.task, str):
            object.__setattr__(self, "task", Task(self.task))

        # default spacing: half-wavelength at the highest subcarrier for OFDM,
        # at the carrier for single-carrier scenarios
        if self.d is None:
            f_ref = self.f_c if self.K == 1 else self.f_c + self.B / 2
            object.__setattr__(self, "d", SPEED_OF_LIGHT / (2 * f_ref))
        if self.d <= 0:
            raise ValueError("element spacing must be positive")

        p = np.broadcast_to(np.asarray(self.P_k, dtype=float), (self.K,)).copy()
        if np.any(p <= 0):
            raise ValueError("per-subcarrier power budgets must be positive")
        object.__setattr__(self, "P_k", p)

        chi = np.broadcast_to(np.asarray(self.chi, dtype=float), (self.K, self.U)).copy()
        if np.any(chi < 0):
            raise ValueError("rate thresholds must be non-negative")
        object.__setattr__(self, "chi", chi)

        rho = np.asarray(self.rho, dtype=float)
        if rho.shape == (4,):
            rho = np.tile(rho[:, None], (1, self.K))
        if rho.shape != (4, self.K):
            raise ValueError("rho must be 4 scalars or a (4, K) array")
        if np.any(rho <= 0):
            raise ValueError("penalty weights must be positive")
        object.__setattr__(self, "rho", rho)

    @property
    def delta_f(self) -> float:
        return self.B / self.K

    @property
    def delta_t(self) -> float:
        return 1.0 / self.delta_f

    def subcarrier_frequencies(self) -> np.ndarray:
        k = np.arange(1, self.K + 1, dtype=float)
        return self.f_c + (k - self.K / 2) * self.delta_f

    def replace(self, **changes) -> "ScenarioConfig":
        return dataclasses.replace(self, **changes)


@dataclass(frozen=True)
class ChannelSet:
    """Frequency-domain channels H[k, u] of shape (M_r, M_t) plus the draws behind them."""

    H: np.ndarray  # (K, U, M_r, M_t)
    L: int
    N_ray: int
    gains: np.ndarray  # (U, L, N_ray) complex path gains
    aod: np.ndarray  # (U, L, N_ray) departure angles, degrees
    aoa: np.ndarray  # (U, L, N_ray) arrival angles, degrees


def generate_channel(cfg: ScenarioConfig, rng: np.random.Generator) -> ChannelSet:
    """Draw a clustered multipath channel set for every user and subcarrier.

    Per user: L clusters times N_ray rays, unit-variance circular Gaussian path
    gains, departure/arrival angles uniform on [-90, 90] degrees. Subcarrier k
    applies the cluster delay phase exp(-j*2*pi*i*f_k/K) on cluster i and
    evaluates both array responses at f_k. Deterministic for a given generator
    state.
    """
    U, L, N = cfg.U, cfg.L, cfg.N_ray
    gains = (rng.standard_normal((U, L, N)) + 1j * rng.standard_normal((U, L, N))) / np.sqrt(2)
    aod = rng.uniform(-90.0, 90.0, size=(U, L, N))
    aoa = rng.uniform(-90.0, 90.0, size=(U, L, N))

    nu = np.sqrt(cfg.M_t * cfg.M_r / (L * N))
    freqs = cfg.subcarrier_frequencies()
    H = np.zeros((cfg.K, U, cfg.M_r, cfg.M_t), dtype=complex)
    for k, f in enumerate(freqs):
        cluster_phase = np.exp(-2j * np.pi * np.arange(L) * f / cfg.K)  # (L,)
        for u in range(U):
            a_t = steering_matrix(f, aod[u].ravel(), cfg.M_t, cfg.d)  # (M_t, L*N)
            a_r = steering_matrix(f, aoa[u].ravel(), cfg.M_r, cfg.d)  # (M_r, L*N)
            w = (gains[u] * cluster_phase[:, None]).ravel()  # (L*N,)
            H[k, u] = nu * (a_r * w) @ a_t.conj().T
    return ChannelSet(H=H, L=L, N_ray=N, gains=gains, aod=aod, aoa=aoa)


@dataclass(frozen=True)
class SteeringTables:
    """Per-subcarrier steering matrices and their Gram sums over the angle sets.

    side[k] is (M_t, S), main[k] is (M_t, M); the Gram sums are sum over the
    set of a a^H, shape (M_t, M_t). sin(theta) is evaluated once per grid
    point when the tables are built.
    """

    side: np.ndarray  # (K, M_t, S)
    main: np.ndarray  # (K, M_t, M)
    side_gram: np.ndarray  # (K, M_t, M_t)
    main_gram: np.ndarray  # (K, M_t, M_t)

    @classmethod
    def build(cls, cfg: ScenarioConfig) -> "SteeringTables":
        freqs = cfg.subcarrier_frequencies()
        side = np.stack([steering_matrix(f, cfg.grid.theta_side, cfg.M_t, cfg.d) for f in freqs])
        main = np.stack([steering_matrix(f, cfg.grid.theta_main, cfg.M_t, cfg.d) for f in freqs])
        side_gram = np.einsum("kms,kns->kmn", side, side.conj())
        main_gram = np.einsum("kms,kns->kmn", main, main.conj())
        return cls(side=side, main=main, side_gram=side_gram, main_gram=main_gram)
