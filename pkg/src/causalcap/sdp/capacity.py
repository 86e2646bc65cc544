"""Capacity extraction from solved programs and class dispatch."""

from __future__ import annotations

import math
from dataclasses import dataclass

from ..supermaps import ClassTag, SupermapClass
from ..tensor import LabeledOperator
from .programs import (
    build_capacity_free,
    build_capacity_freedef2,
    build_capacity_freefix,
    build_capacity_freepar,
)
from .solvers import SolverError, SolverResult, solve

__all__ = ["CapacityResult", "capacity_from", "sim_cost_from", "floor_count", "solve_capacity", "build_capacity"]

DEFAULT_SLACK = 1e-6


@dataclass(frozen=True)
class CapacityResult:
    m_star: float
    capacity_bits: float
    cls: SupermapClass | None
    eps: float
    status: str = "optimal"
    solve_ms: float = 0.0

    @property
    def messages(self) -> int:
        return round(2 ** self.capacity_bits)

    def to_dict(self):
        return {
            "m_star": self.m_star,
            "capacity_bits": self.capacity_bits,
            "class": None if self.cls is None else self.cls.name,
            "eps": self.eps,
            "status": self.status,
            "solve_ms": self.solve_ms,
        }


def floor_count(m_star: float, slack: float = DEFAULT_SLACK) -> int:
    """``floor(m_star + slack)``, rejecting counts below one message."""
    k = math.floor(m_star + slack)
    if k < 1:
        raise ValueError(f"capacity undefined: floor({m_star} + {slack}) = {k} < 1")
    return k


def capacity_from(result: SolverResult, cls: SupermapClass | None = None, eps: float = 0.0,
                  slack: float = DEFAULT_SLACK) -> CapacityResult:
    """``log2 floor(m* + slack)`` of an optimal capacity program."""
    if not result.optimal:
        raise SolverError(f"cannot extract a capacity from solver status {result.status!r}")
    k = floor_count(result.objective, slack)
    return CapacityResult(result.objective, math.log2(k), cls, eps, result.status, 1e3 * result.solve_time)


def sim_cost_from(result: SolverResult, slack: float = DEFAULT_SLACK) -> float:
    """``log2 ceil(tr F - slack)`` bits of an optimal simulation-cost program."""
    if not result.optimal:
        raise SolverError(f"cannot extract a simulation cost from solver status {result.status!r}")
    k = math.ceil(result.objective - slack)
    if k < 1:
        raise ValueError(f"simulation cost undefined: ceil({result.objective} - {slack}) = {k} < 1")
    return math.log2(k)


def build_capacity(JC: LabeledOperator, cls: SupermapClass, eps: float = 0.0):
    if cls.tag is ClassTag.FREE:
        return build_capacity_free(JC, eps)
    if cls.tag is ClassTag.FREE_DEF:
        return build_capacity_freedef2(JC, eps)
    if cls.tag is ClassTag.FREE_FIX:
        return build_capacity_freefix(JC, eps, cls.order)
    return build_capacity_freepar(JC, eps)


def solve_capacity(JC: LabeledOperator, cls: SupermapClass | str, eps: float = 0.0, solver: str = "clarabel",
                   slack: float = DEFAULT_SLACK) -> CapacityResult:
    if isinstance(cls, str):
        cls = SupermapClass.parse(cls)
    result = solve(build_capacity(JC, cls, eps), solver=solver)
    return capacity_from(result, cls, eps, slack)
