"""Weighted-sum harvest maximization for multiple ERs with artificial noise.

Block Gauss-Seidel: auxiliary whitening matrices get exact closed-form
updates, then the covariance triple is re-optimized by the barrier-GP
engine with the per-receiver secrecy slacks folded into the objective as
log-barriers.  A KKT-residual evaluator turns the stationarity and
complementary-slackness conditions of the original problem into a machine
check on the returned solution.

Scenario variants are flags, not separate solvers: artificial noise can be
disabled, the energy covariance dropped, and the IR may or may not cancel
the energy signal (the cancelling IR simply removes W_E from its own
interference term).
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from .channel import ChannelSet
from .gp import BarrierSchedule, FeasibleSetSpec, barrier_outer, gp_maximize
from .linalg import hermitianize
from .metrics import CovarianceTriple, bits_to_nats
from .report import InfeasibleProblem, SolverReport

__all__ = [
    "P3Flags",
    "KktResidual",
    "P3Solution",
    "update_T",
    "ws_gradients",
    "solve_p3",
    "kkt_residual",
]


@dataclass(frozen=True)
class P3Flags:
    """Scenario switches for the multi-ER solver."""

    an_enabled: bool = True
    we_cancellation: bool = False
    force_we_zero: bool = False
    force_v_zero: bool = False

    @property
    def v_active(self) -> bool:
        return self.an_enabled and not self.force_v_zero

    @property
    def we_active(self) -> bool:
        return not self.force_we_zero


@dataclass
class KktResidual:
    """Violation magnitudes of the first-order optimality system."""

    stationarity: float
    comp_slack_rate: float
    comp_slack_power: float
    dual_feas: float


@dataclass
class P3Solution:
    triple: CovarianceTriple
    objective: float  # weighted-sum harvested energy, watts
    report: SolverReport
    kkt: KktResidual


def update_T(h: np.ndarray, g: list[np.ndarray], triple: CovarianceTriple,
             we_cancellation: bool = False
             ) -> tuple[np.ndarray, list[np.ndarray]]:
    """Exact closed-form update of the auxiliary whitening matrices.

    T0 inverts the IR's interference-plus-noise matrix (W_E + V, or V
    alone for a cancelling IR); each T_k inverts the kth ER's received
    signal matrix in W_I + V.  Both are inverses of I + PSD, hence PD.
    """
    v = triple.v_or_zero
    ir_intf = v if we_cancellation else triple.w_e + v
    n_i = h.shape[1]
    t0 = np.linalg.inv(np.eye(n_i) + h.conj().T @ ir_intf @ h)
    tk = []
    for gk in g:
        n_e = gk.shape[1]
        tk.append(np.linalg.inv(
            np.eye(n_e) + gk.conj().T @ (triple.w_i + v) @ gk))
    return hermitianize(t0), [hermitianize(t) for t in tk]


class _Round:
    """Per-round context: auxiliary matrices frozen, batched evaluation.

    ``blocks`` throughout is the tuple of ACTIVE covariance blocks in the
    order (W_I[, W_E][, V]) as dictated by the flags.
    """

    def __init__(self, h, g, t0, tk, weights, r0, flags: P3Flags, energy_mat):
        self.h, self.flags = h, flags
        self.k = len(g)
        self.n_t = h.shape[0]
        self.r0 = r0
        self.energy_mat = energy_mat
        self.g3 = np.stack(g)                       # (K, n_t, n_e)
        self.g3h = self.g3.conj().transpose(0, 2, 1)
        self.t0 = t0
        self.tk3 = np.stack(tk)                     # (K, n_e, n_e)
        self.lndet_t0 = float(np.linalg.slogdet(t0)[1])
        self.lndet_tk = np.linalg.slogdet(self.tk3)[1].real
        self.tr_t0 = float(np.trace(t0).real)
        self.tr_tk = np.trace(self.tk3, axis1=1, axis2=2).real
        self.ht0h = hermitianize(h @ t0 @ h.conj().T)
        self.gtkg = np.einsum("kij,kjl,klm->kim", self.g3, self.tk3,
                              self.g3h)             # (K, n_t, n_t)
        self.n_i = h.shape[1]
        self.n_e = self.g3.shape[2]

    def unpack(self, blocks) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        zero = np.zeros((self.n_t, self.n_t), dtype=complex)
        it = iter(blocks)
        w_i = next(it)
        w_e = next(it) if self.flags.we_active else zero
        v = next(it) if self.flags.v_active else zero
        return w_i, w_e, v

    def slacks(self, blocks) -> np.ndarray:
        """Per-receiver secrecy slack x_k at fixed auxiliary matrices."""
        w_i, w_e, v = self.unpack(blocks)
        ir_intf = v if self.flags.we_cancellation else w_e + v
        theta_i = (self.lndet_t0 - self.tr_t0
                   - float(np.vdot(self.ht0h, ir_intf).real) + self.n_i
                   + _lndet_gram(self.h, w_i + ir_intf))
        v_grams = self.g3h @ v @ self.g3
        lndet_v = _batched_lndet(v_grams)
        recv = np.einsum("kij,ij->k", self.gtkg.conj(), w_i + v).real
        theta_ek = (-lndet_v - self.lndet_tk + self.tr_tk + recv - self.n_e)
        return theta_i - theta_ek - self.r0

    def energy(self, blocks) -> float:
        w_i, w_e, v = self.unpack(blocks)
        return float(np.vdot(self.energy_mat, w_i + w_e + v).real)

    def value_at(self, t: float):
        def value(blocks):
            x = self.slacks(blocks)
            if np.any(x <= 0):
                return -math.inf
            return self.energy(blocks) + float(np.sum(np.log(x))) / t
        return value

    def barrier_problem(self, t: float, q1_cap: float):
        """(value, gradient, per-iterate step bound) for one barrier stage.

        The step bound is half the inverse of the barrier curvature seen
        at the iterate the gradient was just evaluated at; it is what
        keeps the iteration stable as the slacks tighten along a sweep.
        """
        state = {"q1": q1_cap}

        def gradient(blocks):
            x = self.slacks(blocks)
            grads = self.slack_gradients(blocks)
            sq = sum(np.sum(np.abs(dk) ** 2, axis=(1, 2)) for dk in grads)
            lip = float(np.sum(sq / (t * x ** 2)))
            state["q1"] = min(q1_cap, 0.5 / max(lip, 1e-12))
            coeff = 1.0 / (t * x)
            return tuple(self.energy_mat + np.einsum("k,kij->ij", coeff, dk)
                         for dk in grads)

        return self.value_at(t), gradient, lambda blocks: state["q1"]

    def slack_gradients(self, blocks):
        """Gradients of each x_k w.r.t. the active blocks, batched over k."""
        w_i, w_e, v = self.unpack(blocks)
        ir_intf = v if self.flags.we_cancellation else w_e + v
        omega = _whitened(self.h, w_i + ir_intf)
        psi = _batched_whitened(self.g3, self.g3h, v)
        d_wi = omega[None, :, :] - self.gtkg
        out = [d_wi]
        if self.flags.we_active:
            if self.flags.we_cancellation:
                d_we = np.zeros_like(d_wi)
            else:
                d_we = (omega - self.ht0h)[None, :, :] * np.ones(
                    (self.k, 1, 1))
            out.append(d_we)
        if self.flags.v_active:
            out.append((omega - self.ht0h)[None, :, :] + psi - self.gtkg)
        return out

    def gradient_at(self, t: float):
        def gradient(blocks):
            x = self.slacks(blocks)
            coeff = 1.0 / (t * x)
            grads = self.slack_gradients(blocks)
            return tuple(self.energy_mat
                         + np.einsum("k,kij->ij", coeff, dk)
                         for dk in grads)
        return gradient


def _lndet_gram(a: np.ndarray, w: np.ndarray) -> float:
    eigs = np.linalg.eigvalsh(a.conj().T @ w @ a)
    return float(np.sum(np.log1p(np.maximum(eigs, 0.0))))


def _batched_lndet(grams: np.ndarray) -> np.ndarray:
    eigs = np.linalg.eigvalsh(grams)
    return np.sum(np.log1p(np.maximum(eigs, 0.0)), axis=-1)


def _whitened(a: np.ndarray, w: np.ndarray) -> np.ndarray:
    n = a.shape[1]
    inner = np.eye(n) + a.conj().T @ w @ a
    return hermitianize(a @ np.linalg.solve(inner, a.conj().T))


def _batched_whitened(g3: np.ndarray, g3h: np.ndarray,
                      w: np.ndarray) -> np.ndarray:
    k, _, n_e = g3.shape
    inner = np.eye(n_e)[None] + g3h @ w @ g3
    solved = np.linalg.solve(inner, g3h)
    out = g3 @ solved
    return 0.5 * (out + out.conj().transpose(0, 2, 1))


def _energy_matrix(g: list[np.ndarray], mu, eta, sigma2_e) -> np.ndarray:
    n_t = g[0].shape[0]
    out = np.zeros((n_t, n_t), dtype=complex)
    for gk, mk, ek, s2 in zip(g, mu, eta, sigma2_e):
        out += s2 * mk * ek * (gk @ gk.conj().T)
    return hermitianize(out)


def ws_gradients(h: np.ndarray, g: list[np.ndarray],
                 triple: CovarianceTriple, t0: np.ndarray,
                 tk: list[np.ndarray], t: float, mu, eta, sigma2_e,
                 r0: float, flags: P3Flags = P3Flags()
                 ) -> tuple[np.ndarray, ...]:
    """Barrier-objective gradients w.r.t. the active covariance blocks.

    Raises ValueError if any secrecy slack is outside the barrier domain.
    """
    ctx = _Round(h, g, t0, tk, None, r0, flags,
                 _energy_matrix(g, mu, eta, sigma2_e))
    blocks = _pack(triple, flags)
    x = ctx.slacks(blocks)
    if np.any(x <= 0):
        raise ValueError(f"barrier domain violated: min slack {x.min():.3e}")
    return ctx.gradient_at(t)(blocks)


def _pack(triple: CovarianceTriple, flags: P3Flags):
    blocks = [triple.w_i]
    if flags.we_active:
        blocks.append(triple.w_e)
    if flags.v_active:
        blocks.append(triple.v_or_zero)
    return tuple(blocks)


def _repair_feasibility(ctx_builder, blocks, spec, p, r0, *, rounds=30,
                        q1: float, margin: float):
    """Push the minimum secrecy slack above ``margin``.

    Alternates exact auxiliary updates with gradient-projection ascent on
    a soft-min of the slacks, sharpening the soft-min as progress stalls.
    """
    beta = 1.0
    best = -math.inf
    for _ in range(rounds):
        ctx = ctx_builder(blocks)
        x = ctx.slacks(blocks)
        lo = float(x.min())
        if lo > margin:
            return blocks, ctx
        b = beta

        def value(bl):
            xs = ctx.slacks(bl)
            shift = np.max(-b * xs)
            return -(shift + math.log(np.sum(np.exp(-b * xs - shift)))) / b

        def gradient(bl):
            xs = ctx.slacks(bl)
            w = np.exp(-b * (xs - xs.min()))
            w /= w.sum()
            grads = ctx.slack_gradients(bl)
            return tuple(np.einsum("k,kij->ij", w, dk) for dk in grads)

        result = gp_maximize(value, gradient, spec, blocks, q1=q1, xi1=1e-4,
                             max_iter=150)
        blocks = result.blocks
        now = float(ctx.slacks(blocks).min())
        if now <= best + 1e-9:
            beta = min(beta * 4.0, 1024.0)
        best = max(best, now)
    ctx = ctx_builder(blocks)
    lo = float(ctx.slacks(blocks).min())
    if lo > 0:
        return blocks, ctx
    raise InfeasibleProblem(
        f"secrecy slack could not be made positive (best {best:.4e} nats "
        f"below target)", best_value=best)


def solve_p3(channels: ChannelSet, *, p: float | None = None,
             r0_bits: float | None = None,
             flags: P3Flags = P3Flags(),
             schedule: BarrierSchedule | None = None,
             q1_scale: float = 0.1, xi1: float = 1e-3, xi3: float = 1e-3,
             max_outer: int = 50, kkt_target: float | None = None
             ) -> P3Solution:
    """Alternating solve of the AN-aided weighted-sum harvest problem.

    Each outer iteration refreshes the auxiliary whitening matrices in
    closed form, then re-optimizes the covariance triple with the
    barrier-GP engine (barrier accuracy reset and re-swept every
    iteration).  Stops when the weighted-sum energy changes by less than
    ``xi3`` (absolute); the incumbent is retained whenever an iteration
    fails to improve, so the objective sequence is non-decreasing and
    every accepted iterate keeps all secrecy slacks positive.
    """
    t_start = time.perf_counter()
    cfg = channels.config
    h, g = channels.h, channels.g
    p = cfg.p if p is None else p
    r0 = bits_to_nats(cfg.target_bits if r0_bits is None else r0_bits)
    schedule = schedule or BarrierSchedule(t0=1.0, mu_t=3.0, xi2=1e-6)
    n_t, k = cfg.n_t, cfg.k
    energy_mat = _energy_matrix(g, cfg.mu, cfg.eta, cfg.sigma2_e)
    q1 = q1_scale * p

    if kkt_target is None:
        kkt_target = 1e-3 * max(1.0, p, r0)
    # displacement-per-unit-step threshold certifying a projected-gradient
    # fixed point at roughly half the stationarity target
    fp_tol = 0.5 * kkt_target

    n_blocks = 1 + flags.we_active + flags.v_active
    spec = FeasibleSetSpec(p=p, block_dims=[n_t] * n_blocks)
    blocks = tuple(np.eye(n_t, dtype=complex) * (p / (3.0 * n_t))
                   for _ in range(n_blocks))

    def ctx_builder(bl):
        triple = CovarianceTriple(*_triple_parts(bl, flags, n_t))
        t0, tk = update_T(h, g, triple, flags.we_cancellation)
        return _Round(h, g, t0, tk, None, r0, flags, energy_mat)

    margin = 1e-3 * max(1.0, r0)
    blocks, ctx = _repair_feasibility(ctx_builder, blocks, spec, p, r0,
                                      q1=q1, margin=margin)

    e_prev = ctx.energy(blocks)
    trace = [e_prev]
    status = "ok"
    t_final = schedule.t0
    stage_iters_total = 0
    barrier_trace: list[float] = []
    final_ctx = ctx
    for outer in range(1, max_outer + 1):
        ctx = ctx_builder(blocks)
        if float(ctx.slacks(blocks).min()) <= 0:
            status = "boundary"
            break

        def factory(t):
            return ctx.barrier_problem(t, q1)

        def barrier_value(bl, t):
            return float(np.sum(np.log(ctx.slacks(bl)))) / t

        result = barrier_outer(factory, schedule, k, spec, blocks, q1=q1,
                               xi1=xi1, barrier_value=barrier_value,
                               fp_tol=fp_tol, quiet_cap=8)
        t_final = schedule.t0 * schedule.mu_t ** result.t_updates
        stage_iters_total += sum(result.stage_iterations)
        barrier_trace = result.barrier_trace
        e_new = ctx.energy(result.blocks)
        if e_new < e_prev:
            break  # keep the incumbent
        blocks = result.blocks
        final_ctx = ctx
        trace.append(e_new)
        done = abs(e_new - e_prev) < xi3
        e_prev = e_new
        if done:
            break
    else:
        status = "max_outer"

    # terminal certification: one more auxiliary refresh, then ride the
    # barrier down over the tight-slack stages with curvature-safe steps
    # until the projected-gradient residual certifies stationarity
    blocks, final_ctx, t_final, e_cert = _certify(
        ctx_builder, blocks, spec, schedule, k, q1, xi1, fp_tol, t_final,
        final_ctx)
    if e_cert >= trace[-1]:
        trace.append(e_cert)
    e_prev = e_cert

    triple = CovarianceTriple(*_triple_parts(blocks, flags, n_t))
    kkt = _kkt_from_context(final_ctx, blocks, t_final, p)
    report = SolverReport(
        objective_trace=trace,
        outer_iters=len(trace) - 1,
        ellipsoid_iters=0,
        kkt_residuals={
            "stationarity": kkt.stationarity,
            "comp_slack_rate": kkt.comp_slack_rate,
            "comp_slack_power": kkt.comp_slack_power,
            "dual_feas": kkt.dual_feas,
            "barrier_terms": barrier_trace,
        },
        wall_time_s=time.perf_counter() - t_start,
        status=status,
    )
    return P3Solution(triple=triple, objective=e_prev, report=report,
                      kkt=kkt)


def _triple_parts(blocks, flags: P3Flags, n_t: int):
    zero = np.zeros((n_t, n_t), dtype=complex)
    it = iter(blocks)
    w_i = next(it)
    w_e = next(it) if flags.we_active else zero
    v = next(it) if flags.v_active else zero
    return w_i, w_e, v


def _certify(ctx_builder, blocks, spec, schedule: BarrierSchedule, k: int,
             q1: float, xi1: float, fp_tol: float, t_final: float,
             fallback_ctx: _Round):
    """Polish the incumbent to a stationary point of its barrier problem.

    The fast rounds optimize the objective but leave the iterate short of
    the projected-gradient fixed point at the final barrier accuracy.
    With the auxiliary matrices refreshed once more, one barrier sweep is
    run with every stage driven to the fixed-point criterion, so the
    implied multipliers 1/(t x_k) of the returned point satisfy the
    stationarity system to the certification tolerance.
    """
    ctx = ctx_builder(blocks)
    if float(ctx.slacks(blocks).min()) <= 0:
        return blocks, fallback_ctx, t_final, fallback_ctx.energy(blocks)
    result = barrier_outer(lambda t: ctx.barrier_problem(t, q1), schedule,
                           k, spec, blocks, q1=q1, xi1=xi1, fp_tol=fp_tol,
                           max_iter=1500, quiet_cap=1500)
    t_end = schedule.t0 * schedule.mu_t ** result.t_updates
    return result.blocks, ctx, t_end, ctx.energy(result.blocks)


def kkt_residual(triple: CovarianceTriple, t0: np.ndarray,
                 tk: list[np.ndarray], t: float, channels: ChannelSet,
                 p: float | None = None, r0_bits: float | None = None,
                 flags: P3Flags = P3Flags()) -> KktResidual:
    """Evaluate the optimality residuals of a candidate solution.

    Rate duals are the barrier's implied multipliers 1/(t x_k); the power
    dual is a least-squares fit over the active eigen-directions, and the
    PSD duals are the completing negative parts.  Whatever the stationarity
    equations cannot absorb is reported as residual.
    """
    cfg = channels.config
    p = cfg.p if p is None else p
    r0 = bits_to_nats(cfg.target_bits if r0_bits is None else r0_bits)
    ctx = _Round(channels.h, channels.g, t0, tk, None, r0, flags,
                 _energy_matrix(channels.g, cfg.mu, cfg.eta, cfg.sigma2_e))
    blocks = _pack(triple, flags)
    return _kkt_from_context(ctx, blocks, t, p)


def _kkt_from_context(ctx: _Round, blocks, t: float, p: float
                      ) -> KktResidual:
    x = ctx.slacks(blocks)
    lam = 1.0 / (t * x)
    grads = ctx.slack_gradients(blocks)
    stationarity_mats = [ctx.energy_mat + np.einsum("k,kij->ij", lam, dk)
                         for dk in grads]

    total_trace = float(sum(np.trace(b).real for b in blocks))
    power_active = total_trace >= p - 1e-6 * max(1.0, p)
    eig_tol = 1e-7 * max(1.0, p)

    evds = [np.linalg.eigh(hermitianize(b)) for b in blocks]
    if power_active:
        num, den = 0.0, 0
        for (w, u), m in zip(evds, stationarity_mats):
            act = u[:, w > eig_tol]
            if act.shape[1]:
                num += float(np.trace(act.conj().T @ m @ act).real)
                den += act.shape[1]
        upsilon = num / den if den else 0.0
    else:
        upsilon = 0.0
    dual_feas = max(0.0, -upsilon)
    upsilon = max(upsilon, 0.0)

    stationarity = 0.0
    for (w, u), m in zip(evds, stationarity_mats):
        inact = u[:, w <= eig_tol]
        resid = m - upsilon * np.eye(ctx.n_t)
        phi = np.zeros_like(m)
        if inact.shape[1]:
            s_in = inact.conj().T @ (-resid) @ inact
            ew, eu = np.linalg.eigh(hermitianize(s_in))
            dual_feas = max(dual_feas, float(-min(ew.min(), 0.0)))
            s_pos = (eu * np.maximum(ew, 0.0)) @ eu.conj().T
            phi = inact @ s_pos @ inact.conj().T
        stationarity = max(stationarity,
                           float(np.linalg.norm(resid + phi)))

    return KktResidual(
        stationarity=stationarity,
        comp_slack_rate=float(np.max(np.abs(lam * x))),
        comp_slack_power=abs(upsilon * (total_trace - p)),
        dual_feas=dual_feas,
    )
