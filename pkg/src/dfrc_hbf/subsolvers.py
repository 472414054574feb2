"""Closed-form block updates for the consensus-ADMM solver.

Each function solves one block of the per-subcarrier augmented Lagrangian
exactly (or its first-order surrogate, for the two log-of-norm blocks) and is
a pure function of explicit arrays so it can be driven directly by tests.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import (
    ConvergenceError,
    DegenerateBeampatternError,
    DegenerateSubproblemError,
    InfeasibleQoSError,
    LinearizationPointError,
    SingularSystemError,
)


@dataclass
class CadmmState:
    """Mutable iteration state.

    Shapes: Y (K, M_t, U); G (K, U, U) where G[k, u, i] is the consensus copy
    of combiner u's gain on stream i; h (K, S, U); g (K, M, U); eta, eps (K,).
    Duals mirror their primal blocks. r_bar / t_bar hold the linearization
    points of the log-of-norm surrogates and stay None until first use.
    """

    Y: np.ndarray
    G: np.ndarray
    h: np.ndarray
    g: np.ndarray
    eta: np.ndarray
    eps: np.ndarray
    varsigma: np.ndarray
    lam: np.ndarray
    beta: np.ndarray
    nu: np.ndarray
    r_bar: np.ndarray | None = None
    t_bar: np.ndarray | None = None


# ---------------------------------------------------------------------------
# Y block: quadratic objective on the power sphere via a secular equation
# ---------------------------------------------------------------------------


def solve_Y(
    m_k: np.ndarray,
    b_k: np.ndarray,
    g_lam: np.ndarray,
    q_k: np.ndarray,
    mv_k: np.ndarray,
    a_side: np.ndarray,
    a_main: np.ndarray,
    rho: np.ndarray,
    p_k: float,
    *,
    side_gram: np.ndarray | None = None,
    main_gram: np.ndarray | None = None,
    tol_power: float = 1e-8,
    expand_cap: int = 60,
    bisect_cap: int = 200,
) -> np.ndarray:
    """Minimize the Y-dependent quadratic terms subject to ||Y||_F^2 = p_k.

    Args:
        m_k: (M_t, U) columns b_u - varsigma_u.
        b_k: (M_t, U) columns H_u^H w_u.
        g_lam: (U, U) with [u, i] = G[u, i] + lam[u, i]; row u pairs with
            combiner u, column i with the stream the gain is taken on.
        q_k: (S, U) rows h_s + beta_s.
        mv_k: (M, U) rows g_m + nu_m.
        a_side / a_main: (M_t, S) and (M_t, M) steering matrices.
        rho: the four penalty weights for this subcarrier.
        p_k: power budget, > 0.

    The stationarity system is (Xi + mu I) Y = Psi with Hermitian positive
    definite Xi; the multiplier mu is the root of the strictly decreasing
    secular power function, located by bracketing plus bisection.
    """
    rho1, rho2, rho3, rho4 = (float(r) for r in rho)
    m_t = m_k.shape[0]
    if side_gram is None:
        side_gram = a_side @ a_side.conj().T
    if main_gram is None:
        main_gram = a_main @ a_main.conj().T

    xi_mat = (rho1 / 2) * np.eye(m_t) + (rho2 / 2) * (b_k @ b_k.conj().T)
    xi_mat = xi_mat + (rho3 / 2) * side_gram + (rho4 / 2) * main_gram
    xi_mat = (xi_mat + xi_mat.conj().T) / 2  # enforce Hermitian symmetry before eigh

    psi = (rho1 / 2) * m_k + (rho2 / 2) * (b_k @ g_lam)
    psi = psi + (rho3 / 2) * (a_side @ q_k.conj()) + (rho4 / 2) * (a_main @ mv_k.conj())
    if not np.isfinite(psi).all() or np.linalg.norm(psi) == 0.0:
        raise DegenerateSubproblemError("zero or non-finite right-hand side; power target unreachable")

    sig, d_mat = np.linalg.eigh(xi_mat)
    phi = d_mat.conj().T @ psi
    num = np.sum(np.abs(phi) ** 2, axis=1)  # (M_t,)

    def power(mu: float) -> float:
        return float(np.sum(num / (mu + sig) ** 2))

    sig_min = float(sig[0])
    hi = np.sqrt(num.sum() / p_k) - sig_min  # power(hi) <= p_k by construction
    tries = 0
    while power(hi) > p_k:
        hi = 2 * hi + 1
        tries += 1
        if tries > expand_cap:
            raise ConvergenceError("upper bracket for the power multiplier not found")

    delta = max(1.0, abs(sig_min))
    lo = -sig_min + delta
    tries = 0
    while power(lo) < p_k:
        delta *= 1e-2
        lo = -sig_min + delta
        tries += 1
        if tries > expand_cap:
            raise ConvergenceError("lower bracket for the power multiplier not found")
    if not (power(lo) >= p_k >= power(hi)):
        raise ConvergenceError("secular function is not decreasing across the located bracket")

    mu = lo
    for _ in range(bisect_cap):
        mu = 0.5 * (lo + hi)
        p = power(mu)
        if abs(p - p_k) <= tol_power * p_k:
            break
        if p > p_k:
            lo = mu
        else:
            hi = mu
    else:
        raise ConvergenceError("power bisection did not reach tolerance")
    return d_mat @ (phi / (sig + mu)[:, None])


# ---------------------------------------------------------------------------
# G block: projection of the gain targets onto the per-user rate ball
# ---------------------------------------------------------------------------


def solve_G(
    c: np.ndarray,
    u: int,
    xi: float,
    *,
    tol_root: float = 1e-10,
    newton_cap: int = 50,
    bisect_cap: int = 200,
) -> np.ndarray:
    """Project the gain candidates c onto the ball |G_u - 1|^2 + sum |G_i|^2 <= xi.

    The unconstrained candidate wins when already feasible; otherwise the
    multiplier solves the boundary equation, by Newton from zero (monotone for
    this convex decreasing residual) with a bisection fallback.
    """
    if xi < 0:
        raise InfeasibleQoSError("negative ball radius", value=float(xi), u=u)
    c = np.asarray(c, dtype=complex)
    dist2 = float(np.sum(np.abs(c) ** 2) - np.abs(c[u]) ** 2 + np.abs(c[u] - 1.0) ** 2)
    if dist2 <= xi:
        return c.copy()
    if xi == 0.0:
        out = np.zeros_like(c)
        out[u] = 1.0
        return out

    def residual(phi: float) -> float:
        return dist2 / (1.0 + phi) ** 2 - xi

    phi = 0.0
    converged = False
    for _ in range(newton_cap):
        r = residual(phi)
        if abs(r) <= tol_root * max(1.0, xi):
            converged = True
            break
        phi += r * (1.0 + phi) ** 3 / (2.0 * dist2)
    if not converged:
        lo, hi = phi, np.sqrt(dist2 / xi)  # exact root is sqrt(dist2/xi) - 1 < hi
        if residual(hi) > 0:
            raise ConvergenceError("multiplier bracket for the rate ball not found")
        for _ in range(bisect_cap):
            phi = 0.5 * (lo + hi)
            r = residual(phi)
            if abs(r) <= tol_root * max(1.0, xi):
                break
            if r > 0:
                lo = phi
            else:
                hi = phi

    out = c / (1.0 + phi)
    out[u] = (c[u] + phi) / (1.0 + phi)
    return out


# ---------------------------------------------------------------------------
# h / g blocks
# ---------------------------------------------------------------------------


def solve_h_sd(h_hat: np.ndarray, r_bar: np.ndarray, rho3: float, *, tol_zero: float = 1e-12) -> np.ndarray:
    """Sidelobe block for the scan/detect task.

    One exact minimization of the linearized integrated-sidelobe term around
    r_bar plus the quadratic proximity to h_hat.
    """
    nb2 = float(np.sum(np.abs(r_bar) ** 2))
    if np.sqrt(nb2) < tol_zero:
        raise LinearizationPointError("sidelobe linearization point has vanishing norm")
    return h_hat - r_bar / (rho3 * nb2)


def solve_g_tt(g_hat: np.ndarray, t_bar: np.ndarray, rho4: float, *, tol_zero: float = 1e-12) -> np.ndarray:
    """Mainlobe block for the tracking task (linearized integrated-mainlobe gain)."""
    nb2 = float(np.sum(np.abs(t_bar) ** 2))
    if np.sqrt(nb2) < tol_zero:
        raise LinearizationPointError("mainlobe linearization point has vanishing norm")
    return g_hat + t_bar / (rho4 * nb2)


def _piecewise_argmin(candidates: list[tuple[float, float]]) -> tuple[float, float]:
    """Pick (value, point) with minimal value, ties toward the smaller point."""
    return min(candidates)


def solve_h_eta_tt(
    h_hat: np.ndarray, rho3: float, *, tol_zero: float = 1e-12
) -> tuple[np.ndarray, float]:
    """Sidelobe block for the tracking task: joint ceiling eta and clipped h.

    For a fixed ceiling the optimal h shrinks every row of h_hat whose norm
    exceeds sqrt(eta) onto that sphere; the remaining scalar problem in
    kappa = sqrt(eta) is piecewise smooth between consecutive distinct row
    norms, with per-interval minimizers given by a quadratic. Candidates are
    collected over [kappa_min, kappa_max] (the log term is unbounded below
    past the smallest norm, so smaller ceilings are never admitted).
    """
    norms = np.linalg.norm(h_hat, axis=1)
    if norms.max(initial=0.0) < tol_zero:
        warnings.warn("all sidelobe responses vanish; returning the degenerate ceiling")
        return np.zeros_like(h_hat), tol_zero
    uniq = np.unique(norms)
    uniq = uniq[uniq > 0.0]
    if uniq.size == 1:
        return h_hat.copy(), float(uniq[0] ** 2)

    def f_val(kappa: float) -> float:
        over = norms > kappa
        return float(2 * np.log(kappa) + (rho3 / 2) * np.sum((kappa - norms[over]) ** 2))

    candidates: list[tuple[float, float]] = []
    for q in range(1, uniq.size):
        le, ri = float(uniq[q - 1]), float(uniq[q])
        active = norms >= ri
        a = rho3 * int(active.sum())
        b = -rho3 * float(norms[active].sum())
        disc = b * b - 4 * a * 2.0
        if disc <= 0:
            points = [le]  # derivative non-negative on the whole interval
        else:
            sq = np.sqrt(disc)
            v1, v2 = (-b - sq) / (2 * a), (-b + sq) / (2 * a)
            if v2 <= le or v1 >= ri:
                points = [le]
            elif v1 <= le and v2 >= ri:
                points = [ri]
            elif v1 <= le < v2 < ri:
                points = [v2]
            elif le < v1 and ri <= v2:
                points = [le, ri]
            else:
                points = [le, v2]
        candidates.extend((f_val(p), p) for p in points)

    _, kappa = _piecewise_argmin(candidates)
    over = norms > kappa
    scale = np.ones_like(norms)
    scale[over] = kappa / norms[over]
    return h_hat * scale[:, None], float(kappa**2)


def solve_g_eps_sd(
    g_hat: np.ndarray, rho4: float, *, tol_zero: float = 1e-12
) -> tuple[np.ndarray, float]:
    """Mainlobe block for the scan/detect task: joint floor eps and lifted g.

    Rows of g_hat below the floor sqrt(eps) are pushed onto it; the scalar
    problem in iota = sqrt(eps) is convex piecewise smooth between distinct
    row norms and is minimized over [iota_min, iota_max]. Zero rows that end
    up below the floor are lifted along the first coordinate.
    """
    norms = np.linalg.norm(g_hat, axis=1)
    if norms.max(initial=0.0) < tol_zero:
        raise DegenerateBeampatternError("all mainlobe responses vanish")
    uniq = np.unique(norms)

    def d_val(iota: float) -> float:
        under = norms <= iota
        with np.errstate(divide="ignore"):
            log_term = -2 * np.log(iota)
        return float(log_term + (rho4 / 2) * np.sum((iota - norms[under]) ** 2))

    if uniq.size == 1:
        iota = float(uniq[0])
    else:
        candidates: list[tuple[float, float]] = []
        for q in range(1, uniq.size):
            le, ri = float(uniq[q - 1]), float(uniq[q])
            active = norms <= le
            a = rho4 * int(active.sum())
            b = -rho4 * float(norms[active].sum())
            disc = b * b + 8 * a  # -4*a*(-2) > 0 always
            v1 = (-b + np.sqrt(disc)) / (2 * a)
            if v1 <= le:
                points = [le]
            elif v1 >= ri:
                points = [ri]
            else:
                points = [v1]
            candidates.extend((d_val(p), p) for p in points)
        _, iota = _piecewise_argmin(candidates)

    under = norms <= iota
    out = g_hat.copy()
    safe = np.maximum(norms, tol_zero)
    out[under] = g_hat[under] * (iota / safe[under])[:, None]
    zero_rows = under & (norms <= tol_zero)
    if np.any(zero_rows):
        out[zero_rows] = 0.0
        out[zero_rows, 0] = iota
    return out, float(iota**2)


# ---------------------------------------------------------------------------
# digital and analog beamformer blocks
# ---------------------------------------------------------------------------


def solve_Fk(v_k: np.ndarray, f_rf: np.ndarray) -> np.ndarray:
    """Least-squares digital beamformer: argmin ||V_k - F_RF F_k||_F."""
    gram = f_rf.conj().T @ f_rf
    try:
        return np.linalg.solve(gram, f_rf.conj().T @ v_k)
    except np.linalg.LinAlgError as err:
        raise SingularSystemError("analog beamformer Gram matrix is rank deficient") from err


def solve_FRF_ccd(
    f_rf: np.ndarray,
    f_all: np.ndarray,
    v_all: np.ndarray,
    ccd_max: int,
    *,
    tol: float = 1e-10,
    trace_objective: bool = False,
):
    """Cyclic coordinate descent over the unit-modulus analog beamformer entries.

    Sweeps elements in row-major order; each entry minimizes the summed fit
    sum_k ||V_k - F_RF F_k||_F^2 exactly with every other entry held fixed, so
    the fit never increases. An entry whose coupling scalar vanishes is left
    unchanged. Stops after ccd_max sweeps or when a sweep no longer moves any
    entry by more than tol.

    With trace_objective=True also returns the fit after every element update.
    """
    f_rf = np.array(f_rf, dtype=complex)
    m_t, n_t = f_rf.shape
    p_sum = np.einsum("kju,knu->jn", f_all, f_all.conj())  # sum_k F_k F_k^H
    c_sum = np.einsum("kju,kmu->jm", f_all, v_all.conj())  # sum_k F_k V_k^H

    def fit(mat: np.ndarray) -> float:
        return float(np.sum(np.abs(v_all - np.einsum("mn,knu->kmu", mat, f_all)) ** 2))

    trace: list[float] = []
    for _ in range(int(ccd_max)):
        moved = 0.0
        for i in range(m_t):
            row_conj = f_rf[i].conj()
            for j in range(n_t):
                psi = p_sum[j] @ row_conj - p_sum[j, j] * row_conj[j] - c_sum[j, i]
                if psi != 0.0:
                    new = np.exp(-1j * (np.angle(psi) + np.pi))
                    moved = max(moved, abs(new - f_rf[i, j]))
                    f_rf[i, j] = new
                    row_conj[j] = new.conjugate()
                if trace_objective:
                    trace.append(fit(f_rf))
        if moved < tol:
            break
    if trace_objective:
        return f_rf, np.asarray(trace)
    return f_rf


# ---------------------------------------------------------------------------
# dual ascent
# ---------------------------------------------------------------------------


def update_duals(
    varsigma: np.ndarray,
    lam: np.ndarray,
    beta: np.ndarray,
    nu: np.ndarray,
    y: np.ndarray,
    b: np.ndarray,
    g_mat: np.ndarray,
    why: np.ndarray,
    h: np.ndarray,
    h_cons: np.ndarray,
    g: np.ndarray,
    g_cons: np.ndarray,
):
    """One scaled dual ascent step on all four consensus couplings.

    b stacks the cascaded beamformer columns, why the combined gains of the
    consensus precoders, h_cons / g_cons the steering projections of Y.
    """
    return (
        varsigma + (y - b),
        lam + (g_mat - why),
        beta + (h - h_cons),
        nu + (g - g_cons),
    )
