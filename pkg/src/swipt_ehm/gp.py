"""Barrier + gradient-projection machinery shared by the covariance solvers.

The feasible set is always a product of PSD cones coupled by one joint
trace budget.  Euclidean projection onto it reduces to eigenvalue
thresholding with a single water-level ``rho`` applied across all blocks;
ascent is plain gradient projection with an Armijo-damped step, wrapped in
an outer log-barrier loop when inequality constraints are folded into the
objective.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .linalg import hermitianize, require_hermitian

__all__ = [
    "FeasibleSetSpec",
    "BarrierSchedule",
    "GpResult",
    "find_rho",
    "project_feasible",
    "armijo_step",
    "gp_maximize",
    "barrier_outer",
]

Blocks = tuple[np.ndarray, ...]


@dataclass
class FeasibleSetSpec:
    """Product of PSD cones with a joint trace budget P."""

    p: float
    block_dims: list[int]

    def __post_init__(self):
        if self.p <= 0:
            raise ValueError("trace budget must be positive")
        if not self.block_dims or min(self.block_dims) < 1:
            raise ValueError("block dimensions must be >= 1")


@dataclass
class BarrierSchedule:
    """Log-barrier accuracy schedule: t0, growth factor, K/t stop level."""

    t0: float = 1.0
    mu_t: float = 3.0
    xi2: float = 1e-6

    def __post_init__(self):
        if self.t0 <= 0 or self.mu_t <= 1 or self.xi2 <= 0:
            raise ValueError("need t0 > 0, mu_t > 1, xi2 > 0")


@dataclass
class GpResult:
    blocks: Blocks
    objective: float
    objective_trace: list[float]
    iterations: int
    status: str  # converged | stalled | max_iter

    # populated by barrier_outer
    t_updates: int = 0
    stage_iterations: list[int] = field(default_factory=list)
    barrier_trace: list[float] = field(default_factory=list)


def find_rho(eigs: np.ndarray, p: float) -> float:
    """Water level rho >= 0 with sum(max(e - rho, 0)) clipped to budget p.

    Returns 0 when the positive part already fits inside the budget;
    otherwise the unique rho > 0 that makes the clipped sum equal p.
    """
    if p < 0:
        raise ValueError("budget must be nonnegative")
    e = np.asarray(eigs, dtype=float).ravel()
    if e.size == 0 or float(np.sum(np.maximum(e, 0.0))) <= p:
        return 0.0
    s = np.sort(e)[::-1]
    if p == 0.0:
        return float(max(s[0], 0.0))
    ks = np.arange(1, s.size + 1)
    candidates = (np.cumsum(s) - p) / ks
    valid = s - candidates > 0
    k_star = int(np.nonzero(valid)[0][-1])
    return float(candidates[k_star])


def project_feasible(blocks: Sequence[np.ndarray],
                     spec: FeasibleSetSpec) -> Blocks:
    """Frobenius-nearest point of the joint PSD/trace-budget set.

    Each Hermitian block is eigendecomposed, all eigenvalues are
    thresholded by the single joint water level from :func:`find_rho`,
    and the blocks are reassembled with their original eigenvectors.
    """
    if len(blocks) != len(spec.block_dims):
        raise ValueError("block count does not match the feasible-set spec")
    evds = []
    for b, dim in zip(blocks, spec.block_dims):
        b = require_hermitian(np.asarray(b))
        if b.shape[0] != dim:
            raise ValueError(f"block dimension {b.shape[0]} != spec {dim}")
        evds.append(np.linalg.eigh(b))
    rho = find_rho(np.concatenate([w for w, _ in evds]), spec.p)
    out = []
    for w, u in evds:
        clipped = np.maximum(w - rho, 0.0)
        out.append(hermitianize((u * clipped) @ u.conj().T))
    return tuple(out)


def _inner(a: Sequence[np.ndarray], b: Sequence[np.ndarray]) -> float:
    """Real inner product on tuples of Hermitian matrices."""
    return float(sum(np.vdot(x, y).real for x, y in zip(a, b)))


def armijo_step(value: Callable[[Blocks], float], point: Blocks,
                direction: Blocks, gradient: Blocks,
                current_value: float | None = None,
                q2_init: float = 1.0, shrink: float = 0.5,
                slope: float = 1e-4,
                max_shrinks: int = 60) -> tuple[float, float, bool]:
    """Backtracking step size along a projected-gradient direction.

    Returns ``(q2, new_value, accepted)`` for the largest
    ``q2 = q2_init * shrink^m`` with
    ``g(x + q2 d) >= g(x) + slope * q2 * <grad, d>``.  Values of -inf/NaN
    along the segment (a barrier slack crossing zero) count as rejections.
    ``accepted`` is False after ``max_shrinks`` rejections, which callers
    treat as a converged/stalled step.
    """
    gx = value(point) if current_value is None else current_value
    descent = _inner(gradient, direction)
    q2 = q2_init
    for _ in range(max_shrinks + 1):
        candidate = tuple(x + q2 * d for x, d in zip(point, direction))
        gc = value(candidate)
        if np.isfinite(gc) and gc >= gx + slope * q2 * descent:
            return q2, float(gc), True
        q2 *= shrink
    return 0.0, float(gx), False


def gp_maximize(value: Callable[[Blocks], float],
                gradient: Callable[[Blocks], Blocks],
                spec: FeasibleSetSpec, start: Blocks,
                q1: float, xi1: float = 1e-3,
                max_iter: int = 2000,
                fp_tol: float | None = None,
                quiet_cap: int = 40,
                q1_fn: Callable[[Blocks], float] | None = None) -> GpResult:
    """Projected-gradient ascent over the joint PSD/trace set.

    Iterates ``x <- x + q2 (Proj(x + q1 grad g(x)) - x)`` until the
    relative objective change drops below ``xi1``.  The objective-change
    test alone can quit far from a fixed point when the attainable gain is
    small, so ``fp_tol`` optionally requires the projected-gradient
    residual ``|Proj(x + q1 grad) - x| / q1`` to fall below it instead,
    with ``quiet_cap`` bounding how many consecutive low-gain iterations
    are spent chasing it.  ``q1_fn`` re-evaluates the step bound at every
    iterate (a fixed step is unstable when the objective's curvature grows
    along the trajectory, e.g. approaching a barrier wall).  The objective
    sequence is non-decreasing by the Armijo rule; a rejected Armijo step
    is reported as ``stalled`` and the last point is returned.
    """
    x = tuple(np.asarray(b, dtype=complex) for b in start)
    gx = value(x)
    if not np.isfinite(gx):
        raise ValueError("gp_maximize requires a strictly feasible start")
    trace = [float(gx)]
    status = "max_iter"
    halved = False
    iters = 0
    quiet = 0
    for iters in range(1, max_iter + 1):
        grad = gradient(x)
        if not all(np.all(np.isfinite(g)) for g in grad):
            if not halved:
                q1 *= 0.5
                halved = True
                continue
            status = "stalled"
            break
        if q1_fn is not None:
            q1 = q1_fn(x)
        x_hat = project_feasible(tuple(xb + q1 * gb for xb, gb in zip(x, grad)),
                                 spec)
        d = tuple(xh - xb for xh, xb in zip(x_hat, x))
        if fp_tol is not None:
            d_norm = math.sqrt(sum(float(np.vdot(db, db).real) for db in d))
            if d_norm <= fp_tol * q1:
                status = "converged"
                break
        q2, gx_new, accepted = armijo_step(value, x, d, grad, current_value=gx)
        if not accepted:
            status = "stalled"
            break
        x = tuple(xb + q2 * db for xb, db in zip(x, d))
        rel = abs(gx_new - gx) / max(abs(gx), 1e-30)
        gx = gx_new
        trace.append(float(gx))
        if rel < xi1:
            if fp_tol is None:
                status = "converged"
                break
            # progress has decayed for a while without reaching the fixed
            # point; give up on this stage rather than spin
            quiet += 1
            if quiet >= quiet_cap:
                status = "converged"
                break
        else:
            quiet = 0
    return GpResult(blocks=x, objective=float(gx), objective_trace=trace,
                    iterations=iters, status=status)


def barrier_outer(problem_factory: Callable[[float], tuple[Callable, Callable]],
                  schedule: BarrierSchedule, slack_count: int,
                  spec: FeasibleSetSpec, start: Blocks, q1: float,
                  xi1: float = 1e-3, max_iter: int = 2000,
                  barrier_value: Callable[[Blocks, float], float] | None = None,
                  fp_tol: float | None = None,
                  quiet_cap: int = 40) -> GpResult:
    """Outer barrier loop: GP solves at growing t, warm-started.

    ``problem_factory(t)`` returns the ``(value, gradient)`` pair of the
    barrier objective at accuracy ``t``, optionally with a third element:
    a per-iterate step bound handed to :func:`gp_maximize` as ``q1_fn``.
    With ``slack_count == 0`` there is nothing to barrier and a single GP
    run is performed.  Otherwise t grows by ``mu_t`` until
    ``slack_count / t < xi2``.  ``fp_tol`` is the projected-gradient
    residual (displacement per unit step) at which a stage counts as
    solved.
    """
    def unpack_factory(t):
        made = problem_factory(t)
        return made if len(made) == 3 else (*made, None)

    if slack_count == 0:
        value, grad, q1_fn = unpack_factory(schedule.t0)
        result = gp_maximize(value, grad, spec, start,
                             q1=q1, xi1=xi1, max_iter=max_iter,
                             fp_tol=fp_tol, quiet_cap=quiet_cap,
                             q1_fn=q1_fn)
        result.t_updates = 0
        result.stage_iterations = [result.iterations]
        return result

    t = schedule.t0
    x = start
    t_updates = 0
    stage_iters: list[int] = []
    barrier_trace: list[float] = []
    result = None
    while True:
        value, grad, q1_fn = unpack_factory(t)
        result = gp_maximize(value, grad, spec, x, q1=q1, xi1=xi1,
                             max_iter=max_iter, fp_tol=fp_tol,
                             quiet_cap=quiet_cap, q1_fn=q1_fn)
        x = result.blocks
        stage_iters.append(result.iterations)
        if barrier_value is not None:
            barrier_trace.append(float(barrier_value(x, t)))
        t *= schedule.mu_t
        t_updates += 1
        if slack_count / t < schedule.xi2:
            break
    result.t_updates = t_updates
    result.stage_iterations = stage_iters
    result.barrier_trace = barrier_trace
    return result
