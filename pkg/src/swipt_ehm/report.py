"""Solver run reports and shared solver exceptions."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

__all__ = ["SolverReport", "InfeasibleProblem", "EllipsoidNumericalError"]


class InfeasibleProblem(Exception):
    """The requested secrecy target cannot be met on this draw.

    Carries a short diagnostic of what was attempted and the best value
    the feasibility search reached.
    """

    def __init__(self, message: str, best_value: float | None = None):
        super().__init__(message)
        self.best_value = best_value


class EllipsoidNumericalError(RuntimeError):
    """The ellipsoid shape matrix lost positive definiteness."""


@dataclass
class SolverReport:
    """Per-run accounting shared by all solvers.

    ``ellipsoid_iters`` and ``alpha_evals`` stay zero for solvers that do
    not use those loops; ``kkt_residuals`` maps residual names to
    magnitudes.
    """

    objective_trace: list[float] = field(default_factory=list)
    ellipsoid_iters: int = 0
    outer_iters: int = 0
    alpha_evals: int = 0
    kkt_residuals: dict[str, float] = field(default_factory=dict)
    wall_time_s: float = 0.0
    status: str = "ok"

    def to_dict(self) -> dict:
        return {
            "objective_trace": [float(v) for v in self.objective_trace],
            "ellipsoid_iters": self.ellipsoid_iters,
            "outer_iters": self.outer_iters,
            "alpha_evals": self.alpha_evals,
            "kkt_residuals": {k: float(v) for k, v in self.kkt_residuals.items()},
            "wall_time_s": float(self.wall_time_s),
            "status": self.status,
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)
