"""Solver adapters for compiled :class:`SdpProblem` instances.

Clarabel is the default interior-point backend; CVXOPT is available for
cross-checks. The tolerance can be overridden with ``CAUSALCAP_SOLVER_TOL``.
"""

from __future__ import annotations

import os
import time
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from ..tensor import LabeledOperator
from .model import SdpProblem, StandardForm

__all__ = ["SolverResult", "SolverError", "solve", "default_tolerance", "STATUSES"]

STATUSES = ("optimal", "infeasible", "unbounded", "inaccurate", "failed")
DEFAULT_TOL = 1e-8


class SolverError(RuntimeError):
    """Raised when a result is used as if it were optimal but is not."""


def default_tolerance() -> float:
    env = os.environ.get("CAUSALCAP_SOLVER_TOL")
    if env:
        try:
            val = float(env)
        except ValueError:
            raise ValueError(f"CAUSALCAP_SOLVER_TOL must be a number, got {env!r}") from None
        if not val > 0:
            raise ValueError("CAUSALCAP_SOLVER_TOL must be positive")
        return val
    return DEFAULT_TOL


@dataclass(frozen=True)
class SolverResult:
    status: str
    objective: float
    values: dict = field(default_factory=dict)
    solve_time: float = 0.0
    residuals: dict = field(default_factory=dict)
    solver: str = ""

    @property
    def optimal(self) -> bool:
        return self.status == "optimal"

    def require_optimal(self) -> "SolverResult":
        if not self.optimal:
            raise SolverError(f"solver status {self.status!r}")
        return self

    @property
    def max_residual(self) -> float:
        return max(self.residuals.values(), default=0.0)

    def to_dict(self, include_values: bool = False) -> dict:
        out = {
            "status": self.status,
            "objective": self.objective,
            "solve_time": self.solve_time,
            "solver": self.solver,
            "max_residual": self.max_residual,
        }
        if include_values:
            vals = {}
            for name, v in self.values.items():
                if isinstance(v, LabeledOperator):
                    a = v.entries
                    vals[name] = {
                        "layout": [list(s) for s in v.layout.systems],
                        "re": np.real(a).tolist(),
                        "im": np.imag(a).tolist(),
                    }
                else:
                    vals[name] = float(v)
            out["values"] = vals
        return out


def _svec_selector(d: int) -> sp.csr_matrix:
    # upper triangle, column-major, off-diagonals scaled by sqrt(2)
    rows, cols, vals = [], [], []
    k = 0
    r2 = np.sqrt(2.0)
    for j in range(d):
        for i in range(j + 1):
            rows.append(k)
            cols.append(i * d + j)
            vals.append(1.0 if i == j else r2)
            k += 1
    return sp.csr_matrix((vals, (rows, cols)), shape=(k, d * d))


def _clarabel(form: StandardForm, tol: float):
    import clarabel

    n = form.n
    a_parts = [sp.csr_matrix(form.a_eq)]
    b_parts = [form.b_eq]
    cones = []
    if form.a_eq.shape[0]:
        cones.append(clarabel.ZeroConeT(form.a_eq.shape[0]))
    if form.nonneg_h.size:
        a_parts.append(sp.csr_matrix(-form.nonneg_g))
        b_parts.append(form.nonneg_h)
        cones.append(clarabel.NonnegativeConeT(form.nonneg_h.size))
    for blk in form.blocks:
        sel = _svec_selector(blk.dim)
        a_parts.append(-(sel @ blk.coef))
        b_parts.append(sel @ blk.const.ravel())
        cones.append(clarabel.PSDTriangleConeT(blk.dim))
    a = sp.vstack(a_parts).tocsc()
    b = np.concatenate(b_parts)
    q = form.c if form.sense == "min" else -form.c

    best = ("failed", np.full(n, np.nan))
    for overrides in _CLARABEL_LADDER:
        settings = clarabel.DefaultSettings()
        settings.verbose = False
        settings.tol_gap_abs = tol
        settings.tol_gap_rel = tol
        settings.tol_feas = tol
        settings.max_iter = 500
        for key, val in overrides.items():
            setattr(settings, key, val)
        sol = clarabel.DefaultSolver(sp.csc_matrix((n, n)), q, a, b, cones, settings).solve()
        status = _CLARABEL_STATUS.get(str(sol.status), "failed")
        if status in ("optimal", "infeasible", "unbounded"):
            return status, np.asarray(sol.x, dtype=float)
        if status == "inaccurate" and best[0] == "failed":
            best = (status, np.asarray(sol.x, dtype=float))
    return best


_CLARABEL_STATUS = {
    "Solved": "optimal",
    "AlmostSolved": "inaccurate",
    "PrimalInfeasible": "infeasible",
    "AlmostPrimalInfeasible": "infeasible",
    "DualInfeasible": "unbounded",
    "AlmostDualInfeasible": "unbounded",
}

# retried in order when a solve stalls on numerical trouble
_CLARABEL_LADDER = (
    {},
    {"equilibrate_enable": False},
    {"static_regularization_constant": 1e-7},
    {"equilibrate_enable": False, "static_regularization_constant": 1e-7},
)


def _cvxopt(form: StandardForm, tol: float):
    import cvxopt
    from cvxopt import solvers

    q = form.c if form.sense == "min" else -form.c
    kwargs = {}
    if form.nonneg_h.size:
        kwargs["Gl"] = cvxopt.matrix(-form.nonneg_g)
        kwargs["hl"] = cvxopt.matrix(form.nonneg_h)
    if form.blocks:
        # symmetric blocks: row-major and column-major vec coincide
        kwargs["Gs"] = [cvxopt.matrix(-blk.coef.toarray()) for blk in form.blocks]
        kwargs["hs"] = [cvxopt.matrix(blk.const) for blk in form.blocks]
    if form.a_eq.shape[0]:
        kwargs["A"] = cvxopt.matrix(form.a_eq)
        kwargs["b"] = cvxopt.matrix(form.b_eq)
    opts = {"show_progress": False, "abstol": tol, "reltol": tol, "feastol": tol, "maxiters": 200}
    try:
        sol = solvers.sdp(cvxopt.matrix(q), options=opts, **kwargs)
    except (ValueError, ArithmeticError):
        return "failed", np.full(form.n, np.nan)
    status = {"optimal": "optimal", "primal infeasible": "infeasible", "dual infeasible": "unbounded"}.get(
        sol["status"], "inaccurate" if sol["x"] is not None else "failed")
    x = np.array(sol["x"]).ravel() if sol["x"] is not None else np.full(form.n, np.nan)
    return status, x


_BACKENDS = {"clarabel": _clarabel, "cvxopt": _cvxopt}


def solve(problem: SdpProblem, solver: str = "clarabel", tol: float | None = None) -> SolverResult:
    """Compile and solve; constraint residuals at the returned point are attached."""
    if solver not in _BACKENDS:
        raise ValueError(f"unknown solver {solver!r}; choose from {sorted(_BACKENDS)}")
    tol = default_tolerance() if tol is None else tol
    t0 = time.perf_counter()
    form = problem.compile()
    if not form.consistent:
        return SolverResult("infeasible", float("nan"), {}, time.perf_counter() - t0, {}, solver)
    status, x = _BACKENDS[solver](form, tol)
    elapsed = time.perf_counter() - t0
    if status in ("infeasible", "unbounded", "failed") or not np.all(np.isfinite(x)):
        return SolverResult(status if status != "optimal" else "failed", float("nan"), {}, elapsed, {}, solver)
    objective = float(form.c @ x + form.c0)
    values = problem.unpack(x)
    residuals = problem.residuals(values)
    return SolverResult(status, objective, values, elapsed, residuals, solver)
