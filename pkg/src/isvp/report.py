"""Per-iteration diagnostics and terminal solve reports."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np


class SolveStatus(str, Enum):
    CONVERGED = "converged"
    MAX_ITERATIONS = "max_iterations"
    DIVERGED = "diverged"


@dataclass
class IterationRecord:
    """One outer iteration: residual, Jacobian conditioning, timing.

    ``err_c`` is the distance to the generating coefficient vector and is
    only present when the caller knows the ground truth.
    """

    k: int
    d: float
    cond_j: float
    wall_ms: float
    err_c: float | None = None


@dataclass
class SolveReport:
    """Terminal status plus the full iteration trace of one solve."""

    status: SolveStatus
    records: list[IterationRecord] = field(default_factory=list)
    c_final: np.ndarray | None = None
    iterations: int = 0
    total_ms: float = 0.0

    @property
    def residuals(self) -> list[float]:
        return [rec.d for rec in self.records]

    def to_dict(self) -> dict:
        return {
            "status": self.status.value,
            "iterations": self.iterations,
            "total_ms": self.total_ms,
            "c_final": None if self.c_final is None else self.c_final.tolist(),
            "records": [
                {
                    "k": rec.k,
                    "d": rec.d,
                    "cond_j": rec.cond_j,
                    "err_c": rec.err_c,
                    "wall_ms": rec.wall_ms,
                }
                for rec in self.records
            ],
        }
