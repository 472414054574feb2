"""Consensus-ADMM driver alternating the closed-form block updates."""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from . import metrics
from .errors import InfeasibleQoSError, LinearizationPointError, NumericalFailureError
from .metrics import CombinerSet, HybridBeamformer
from .model import ChannelSet, ScenarioConfig, SteeringTables, Task
from .subsolvers import (
    CadmmState,
    solve_Fk,
    solve_FRF_ccd,
    solve_G,
    solve_Y,
    solve_g_eps_sd,
    solve_g_tt,
    solve_h_eta_tt,
    solve_h_sd,
    update_duals,
)

GRACE_ITERATIONS = 10  # consecutive iterations the rate ball may be empty


@dataclass
class RunTrace:
    """Per-iteration history of one solver run plus its terminal snapshot.

    Wall times are measured per iteration and are not part of any serialized
    output; everything else is deterministic for a fixed config and seed.
    """

    objective: np.ndarray  # (T,)
    residual_norms: np.ndarray  # (T, 4)
    min_rate: np.ndarray  # (T,)
    mean_rate: np.ndarray  # (T,)
    wall_time: np.ndarray  # (T,) seconds
    termination: str = "max_iter"
    final_hbf: HybridBeamformer | None = None
    final_objective: float | None = None
    final_rates: np.ndarray | None = None  # (K, U)

    @property
    def n_iterations(self) -> int:
        return int(self.objective.shape[0])


def _gain_tensor(wh: np.ndarray, eff: np.ndarray) -> np.ndarray:
    """Combined gains w_u^H H_u b_i, shape (K, U, U) indexed [k, u, i]."""
    return np.einsum("kum,kmi->kui", wh, eff)


def _achieved_rates(gains: np.ndarray, w: np.ndarray, sigma_n2: float) -> np.ndarray:
    """Per-(k, u) rates log2(1 + SINR) from the combined-gain tensor."""
    sig = np.abs(np.einsum("kuu->ku", gains)) ** 2
    totals = np.sum(np.abs(gains) ** 2, axis=2)
    noise = sigma_n2 * np.sum(np.abs(w) ** 2, axis=2)
    denom = totals - sig + noise
    with np.errstate(divide="ignore", invalid="ignore"):
        snr = np.where(sig > 0, sig / denom, 0.0)
    return np.log2(1.0 + snr)


def residuals(
    state: CadmmState,
    hbf: HybridBeamformer,
    combiners: CombinerSet,
    channels: ChannelSet,
    tables: SteeringTables,
) -> np.ndarray:
    """Frobenius norms of the four consensus gaps, each averaged over subcarriers."""
    wh = np.einsum("kur,kurm->kum", combiners.w.conj(), channels.H)
    eff = hbf.effective_all()
    why = _gain_tensor(wh, state.Y)
    h_cons = np.einsum("kmu,kms->ksu", state.Y.conj(), tables.side)
    g_cons = np.einsum("kmu,kmp->kpu", state.Y.conj(), tables.main)
    return np.array(
        [
            np.mean(np.linalg.norm(state.Y - eff, axis=(1, 2))),
            np.mean(np.linalg.norm(state.G - why, axis=(1, 2))),
            np.mean(np.linalg.norm(state.h - h_cons, axis=(1, 2))),
            np.mean(np.linalg.norm(state.g - g_cons, axis=(1, 2))),
        ]
    )


def objective(
    hbf: HybridBeamformer,
    cfg: ScenarioConfig,
    task: Task | None = None,
    tables: SteeringTables | None = None,
) -> float:
    """Beampattern objective of a beamformer under the configured (or given) task."""
    if task is None:
        task = cfg.task
    if task is Task.SD:
        return metrics.aismmr(hbf, cfg, tables)
    return metrics.apsimr(hbf, cfg, tables)


def _objective_from_powers(side_pow: np.ndarray, main_pow: np.ndarray, task: Task) -> float:
    if task is Task.SD:
        return metrics.aismmr_from_powers(side_pow, main_pow)
    return metrics.apsimr_from_powers(side_pow, main_pow)


def _init_beamformer(cfg: ScenarioConfig, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    f_rf = np.exp(2j * np.pi * rng.uniform(0.0, 1.0, size=(cfg.M_t, cfg.N_t)))
    f = rng.standard_normal((cfg.K, cfg.N_t, cfg.U)) + 1j * rng.standard_normal((cfg.K, cfg.N_t, cfg.U))
    for k in range(cfg.K):
        f[k] *= np.sqrt(cfg.P_k[k]) / np.linalg.norm(f_rf @ f[k])
    return f_rf, f


def _rescaled(f_rf: np.ndarray, f: np.ndarray, p_k: np.ndarray) -> HybridBeamformer:
    f = f.copy()
    for k in range(f.shape[0]):
        f[k] *= np.sqrt(p_k[k]) / np.linalg.norm(f_rf @ f[k])
    return HybridBeamformer(f_rf=f_rf, f=f)


def run(
    cfg: ScenarioConfig,
    channels: ChannelSet,
    *,
    qos: bool = True,
) -> tuple[HybridBeamformer, CombinerSet, RunTrace]:
    """Solve the task-oriented beamforming design for one channel realization.

    Iterates combiner refresh, the six block updates, and dual ascent until
    every consensus residual falls below tolerances.res or max_iter is hit.
    With qos=False the per-user rate ball is skipped entirely (radar-only
    design); the gain consensus variables then track their targets freely.

    Returns the power-normalized beamformer, its final MMSE combiners, and
    the iteration trace. Raises InfeasibleQoSError when some user's rate ball
    stays empty longer than the grace window, NumericalFailureError when the
    state stops being finite.
    """
    tol = cfg.tolerances
    tables = SteeringTables.build(cfg)
    rng = np.random.default_rng([cfg.seed, 1])
    K, U = cfg.K, cfg.U

    f_rf, f = _init_beamformer(cfg, rng)
    hbf = HybridBeamformer(f_rf=f_rf, f=f)
    combiners, errs = metrics.update_combiners(channels, hbf, cfg.sigma_n2)
    wh = np.einsum("kur,kurm->kum", combiners.w.conj(), channels.H)

    Y = hbf.effective_all()
    h = np.einsum("kmu,kms->ksu", Y.conj(), tables.side)
    g = np.einsum("kmu,kmp->kpu", Y.conj(), tables.main)
    state = CadmmState(
        Y=Y,
        G=_gain_tensor(wh, Y),
        h=h,
        g=g,
        eta=np.sum(np.abs(h) ** 2, axis=2).max(axis=1),
        eps=np.sum(np.abs(g) ** 2, axis=2).min(axis=1),
        varsigma=np.zeros_like(Y),
        lam=np.zeros((K, U, U), dtype=complex),
        beta=np.zeros_like(h),
        nu=np.zeros_like(g),
    )

    objs: list[float] = []
    res_hist: list[np.ndarray] = []
    min_rates: list[float] = []
    mean_rates: list[float] = []
    walls: list[float] = []
    termination = "max_iter"
    infeasible_streak = 0

    for it in range(1, cfg.max_iter + 1):
        t0 = time.perf_counter()

        # (0) refresh combiners, weights and rate-ball radii
        combiners, errs = metrics.update_combiners(channels, hbf, cfg.sigma_n2)
        wh = np.einsum("kur,kurm->kum", combiners.w.conj(), channels.H)
        xi = np.zeros((K, U))
        offending = None
        if qos:
            for k in range(K):
                for u in range(U):
                    try:
                        xi[k, u] = metrics.qos_bound_xi(
                            combiners.omega[k, u], combiners.w[k, u], cfg.sigma_n2, cfg.chi[k, u]
                        )
                    except InfeasibleQoSError:
                        xi[k, u] = 0.0  # project onto the single feasible point this round
                        offending = (k, u)
            infeasible_streak = infeasible_streak + 1 if offending else 0
            if infeasible_streak > GRACE_ITERATIONS:
                k, u = offending
                raise InfeasibleQoSError(
                    # 1-based in the message to match the report files
                    f"rate threshold unreachable for user {u + 1} on subcarrier {k + 1} "
                    f"beyond the {GRACE_ITERATIONS}-iteration grace window",
                    k=k,
                    u=u,
                    iteration=it,
                )

        # (I) consensus precoders on the power sphere
        eff = hbf.effective_all()
        b_mats = wh.conj().transpose(0, 2, 1)  # (K, M_t, U), columns H_u^H w_u
        for k in range(K):
            state.Y[k] = solve_Y(
                eff[k] - state.varsigma[k],
                b_mats[k],
                state.G[k] + state.lam[k],
                state.h[k] + state.beta[k],
                state.g[k] + state.nu[k],
                tables.side[k],
                tables.main[k],
                cfg.rho[:, k],
                cfg.P_k[k],
                side_gram=tables.side_gram[k],
                main_gram=tables.main_gram[k],
                tol_power=tol.power,
            )

        # (II) combined-gain copies inside the rate ball
        why = _gain_tensor(wh, state.Y)
        for k in range(K):
            for u in range(U):
                c = why[k, u] - state.lam[k, u]
                state.G[k, u] = solve_G(c, u, xi[k, u], tol_root=tol.root) if qos else c

        # (III) beampattern blocks, task dependent
        h_hat = np.einsum("kmu,kms->ksu", state.Y.conj(), tables.side) - state.beta
        g_hat = np.einsum("kmu,kmp->kpu", state.Y.conj(), tables.main) - state.nu
        if cfg.task is Task.SD:
            for k in range(K):
                state.g[k], state.eps[k] = solve_g_eps_sd(g_hat[k], cfg.rho[3, k], tol_zero=tol.zero)
            if state.r_bar is None:
                state.r_bar = h_hat.copy()
            for k in range(K):
                try:
                    state.h[k] = solve_h_sd(h_hat[k], state.r_bar[k], cfg.rho[2, k], tol_zero=tol.zero)
                except LinearizationPointError:
                    state.r_bar[k] = h_hat[k].copy()
                    state.h[k] = solve_h_sd(h_hat[k], state.r_bar[k], cfg.rho[2, k], tol_zero=tol.zero)
            state.r_bar = state.h.copy()
        else:
            for k in range(K):
                state.h[k], state.eta[k] = solve_h_eta_tt(h_hat[k], cfg.rho[2, k], tol_zero=tol.zero)
            if state.t_bar is None:
                state.t_bar = g_hat.copy()
            for k in range(K):
                try:
                    state.g[k] = solve_g_tt(g_hat[k], state.t_bar[k], cfg.rho[3, k], tol_zero=tol.zero)
                except LinearizationPointError:
                    state.t_bar[k] = g_hat[k].copy()
                    state.g[k] = solve_g_tt(g_hat[k], state.t_bar[k], cfg.rho[3, k], tol_zero=tol.zero)
            state.t_bar = state.g.copy()

        # (IV) digital beamformers, (V) analog beamformer
        v = state.Y + state.varsigma
        for k in range(K):
            f[k] = solve_Fk(v[k], f_rf)
        f_rf = solve_FRF_ccd(f_rf, f, v, cfg.ccd_max)
        hbf = HybridBeamformer(f_rf=f_rf, f=f)

        # (VI) dual ascent at the new primals
        eff = hbf.effective_all()
        why = _gain_tensor(wh, state.Y)
        h_cons = np.einsum("kmu,kms->ksu", state.Y.conj(), tables.side)
        g_cons = np.einsum("kmu,kmp->kpu", state.Y.conj(), tables.main)
        state.varsigma, state.lam, state.beta, state.nu = update_duals(
            state.varsigma,
            state.lam,
            state.beta,
            state.nu,
            state.Y,
            eff,
            state.G,
            why,
            state.h,
            h_cons,
            state.g,
            g_cons,
        )

        res = np.array(
            [
                np.mean(np.linalg.norm(state.Y - eff, axis=(1, 2))),
                np.mean(np.linalg.norm(state.G - why, axis=(1, 2))),
                np.mean(np.linalg.norm(state.h - h_cons, axis=(1, 2))),
                np.mean(np.linalg.norm(state.g - g_cons, axis=(1, 2))),
            ]
        )
        side_pow = np.sum(np.abs(h_cons) ** 2, axis=2)
        main_pow = np.sum(np.abs(g_cons) ** 2, axis=2)
        obj = _objective_from_powers(side_pow, main_pow, cfg.task)
        rates = _achieved_rates(_gain_tensor(wh, eff), combiners.w, cfg.sigma_n2)

        objs.append(obj)
        res_hist.append(res)
        min_rates.append(float(rates.min()))
        mean_rates.append(float(rates.mean()))
        walls.append(time.perf_counter() - t0)

        if not (np.isfinite(res).all() and np.isfinite(obj) and np.isfinite(rates).all()):
            raise NumericalFailureError(f"non-finite state at iteration {it}", iteration=it)
        if np.all(res < tol.res):
            termination = "converged"
            break

    hbf = _rescaled(f_rf, f, cfg.P_k)
    combiners, _ = metrics.update_combiners(channels, hbf, cfg.sigma_n2)
    final_obj = objective(hbf, cfg, tables=tables)
    wh = np.einsum("kur,kurm->kum", combiners.w.conj(), channels.H)
    final_rates = _achieved_rates(_gain_tensor(wh, hbf.effective_all()), combiners.w, cfg.sigma_n2)
    trace = RunTrace(
        objective=np.asarray(objs),
        residual_norms=np.asarray(res_hist).reshape(len(res_hist), 4),
        min_rate=np.asarray(min_rates),
        mean_rate=np.asarray(mean_rates),
        wall_time=np.asarray(walls),
        termination=termination,
        final_hbf=hbf,
        final_objective=final_obj,
        final_rates=final_rates,
    )
    return hbf, combiners, trace


def random_phase_baseline(cfg: ScenarioConfig, rng: np.random.Generator) -> HybridBeamformer:
    """Random-phase analog beamformer completed by a least-squares digital stage."""
    f_rf = np.exp(2j * np.pi * rng.uniform(0.0, 1.0, size=(cfg.M_t, cfg.N_t)))
    v = rng.standard_normal((cfg.K, cfg.M_t, cfg.U)) + 1j * rng.standard_normal((cfg.K, cfg.M_t, cfg.U))
    f = np.stack([solve_Fk(v[k], f_rf) for k in range(cfg.K)])
    return _rescaled(f_rf, f, cfg.P_k)


def radar_only(cfg: ScenarioConfig, channels: ChannelSet) -> tuple[HybridBeamformer, CombinerSet, RunTrace]:
    """Solve the beampattern-only design: zero rate thresholds, ball disabled."""
    return run(cfg.replace(chi=0.0), channels, qos=False)
