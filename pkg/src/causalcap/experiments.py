"""Parameter sweeps, threshold search and randomized equivalence trials."""

from __future__ import annotations

import csv
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .channels import amplitude_damping, combine, pauli_channel, random_channel, random_pauli_probs
from .sdp import (
    build_avg_error_freepar,
    build_capacity_free,
    build_capacity_freepar,
    build_min_error_freepar,
    solve,
)
from .sdp.capacity import DEFAULT_SLACK, build_capacity, floor_count
from .supermaps import ClassTag, SupermapClass

__all__ = [
    "CSV_HEADER",
    "SweepRow",
    "ad_pair",
    "solve_row",
    "sweep",
    "write_csv",
    "read_csv",
    "check_monotone",
    "ThresholdResult",
    "threshold",
    "TrialReport",
    "trials",
    "TRIAL_TOL",
]

CSV_HEADER = ("eta", "class", "eps", "m_star", "capacity_bits", "status", "solve_ms")
CLASS_NAMES = ("FreePar", "FreeFix", "FreeDef", "Free")
TRIAL_TOL = {"pauli": 1e-5, "omega_p": 1e-7}
_RANK = {name: k for k, name in enumerate(CLASS_NAMES)}


def _g(x: float) -> str:
    return "nan" if x is None or (isinstance(x, float) and math.isnan(x)) else f"{x:.9g}"


@dataclass(frozen=True)
class SweepRow:
    eta: float
    cls: str
    eps: float
    m_star: float
    capacity_bits: float
    status: str
    solve_ms: float

    @property
    def key(self):
        return (self.eta, _rank(self.cls), self.cls, self.eps)

    @property
    def solved(self) -> bool:
        return self.status == "optimal"

    def csv_fields(self) -> list[str]:
        return [_g(self.eta), self.cls, _g(self.eps), _g(self.m_star), _g(self.capacity_bits), self.status,
                _g(self.solve_ms)]


def _class_name(cls: str) -> str:
    """Row label: bare ``FreeFix`` (best order) stays bare, explicit orders are kept."""
    parsed = SupermapClass.parse(cls)
    return "FreeFix" if cls.strip() == "FreeFix" else parsed.name


def _rank(name: str) -> int:
    return _RANK[SupermapClass.parse(name).tag.value]


def ad_pair(eta: float):
    """Choi operator of two parallel amplitude damping channels."""
    return combine([amplitude_damping(eta), amplitude_damping(eta)])


def _solve_m(jc, cls: SupermapClass, eps: float):
    res = solve(build_capacity(jc, cls, eps))
    return res.status, res.objective, res.solve_time


def solve_row(eta: float, cls: str, eps: float, slack: float = DEFAULT_SLACK) -> SweepRow:
    """One sweep point. ``FreeFix`` is the better of the two slot orders."""
    name = _class_name(cls)
    jc = ad_pair(eta)
    t0 = time.perf_counter()
    if name == "FreeFix":
        runs = [_solve_m(jc, SupermapClass(ClassTag.FREE_FIX, order), eps) for order in ((1, 2), (2, 1))]
    else:
        runs = [_solve_m(jc, SupermapClass.parse(cls), eps)]
    elapsed = 1e3 * (time.perf_counter() - t0)
    ok = [r for r in runs if r[0] == "optimal"]
    if len(ok) != len(runs):
        bad = next(r[0] for r in runs if r[0] != "optimal")
        status = "failed" if bad in ("failed", "infeasible", "unbounded") else bad
        return SweepRow(eta, name, eps, float("nan"), float("nan"), status, elapsed)
    m_star = max(r[1] for r in ok)
    try:
        bits = math.log2(floor_count(m_star, slack))
    except ValueError:
        return SweepRow(eta, name, eps, m_star, float("nan"), "failed", elapsed)
    return SweepRow(eta, name, eps, m_star, bits, "optimal", elapsed)


def _row_task(args):
    return solve_row(*args)


def _run(fn: Callable, tasks: list, jobs: int) -> list:
    if jobs <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, tasks))


def sweep(etas: Iterable[float], classes: Sequence[str], eps_list: Sequence[float], jobs: int = 1) -> list[SweepRow]:
    """All ``(eta, class, eps)`` points on the AD-pair family, sorted."""
    etas = [float(e) for e in etas]
    for e in etas:
        if not 0.0 <= e <= 0.5:
            raise ValueError(f"eta must lie in [0, 0.5], got {e}")
    for cls in classes:
        _class_name(cls)
    tasks = [(e, cls, float(eps)) for e in etas for cls in classes for eps in eps_list]
    rows = _run(_row_task, tasks, jobs)
    return sorted(rows, key=lambda r: r.key)


def write_csv(rows: Iterable[SweepRow], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for row in rows:
            w.writerow(row.csv_fields())


def read_csv(path) -> list[SweepRow]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != CSV_HEADER:
            raise ValueError(f"unexpected CSV header {reader.fieldnames}")
        return [
            SweepRow(float(r["eta"]), r["class"], float(r["eps"]), float(r["m_star"]), float(r["capacity_bits"]),
                     r["status"], float(r["solve_ms"]))
            for r in reader
        ]


def check_monotone(rows: Iterable[SweepRow]) -> list[str]:
    """Violations of class and error-tolerance monotonicity among solved rows."""
    solved = [r for r in rows if r.solved]
    by_point: dict = {}
    for r in solved:
        by_point.setdefault((r.eta, r.eps), {})[r.cls] = r.capacity_bits
    problems = []
    for (eta, eps), caps in sorted(by_point.items()):
        for lo in caps:
            for hi in caps:
                if _rank(lo) < _rank(hi) and caps[lo] > caps[hi]:
                    problems.append(f"eta={eta} eps={eps}: {lo}={caps[lo]} > {hi}={caps[hi]}")
    by_class: dict = {}
    for r in solved:
        by_class.setdefault((r.eta, r.cls), []).append((r.eps, r.capacity_bits))
    for (eta, cls), vals in sorted(by_class.items()):
        vals.sort()
        for (e0, c0), (e1, c1) in zip(vals, vals[1:]):
            if c0 > c1:
                problems.append(f"eta={eta} {cls}: eps={e0} gives {c0} > eps={e1} gives {c1}")
    return problems


# ---------------------------------------------------------------- threshold
@dataclass(frozen=True)
class ThresholdResult:
    classes: tuple[str, str]
    eps: float
    intervals: tuple[tuple[float, float, str], ...]  # (lo, hi, "onset" | "merge")
    samples: tuple[tuple[float, float], ...] = field(default_factory=tuple)  # (eta, gap in bits)
    failures: tuple[float, ...] = ()

    @property
    def monotone(self) -> bool:
        return len(self.intervals) <= 1

    @property
    def merge(self) -> tuple[float, float] | None:
        """Last interval where an advantage disappears."""
        lows = [(lo, hi) for lo, hi, kind in self.intervals if kind == "merge"]
        return lows[-1] if lows else None

    def to_dict(self):
        return {
            "classes": list(self.classes),
            "eps": self.eps,
            "intervals": [{"lo": lo, "hi": hi, "kind": kind} for lo, hi, kind in self.intervals],
            "merge": list(self.merge) if self.merge else None,
            "samples": [{"eta": e, "gap_bits": g} for e, g in self.samples],
            "failures": list(self.failures),
        }


def _gap(eta: float, strong: str, weak: str, eps: float) -> float:
    a = solve_row(eta, strong, eps)
    b = solve_row(eta, weak, eps)
    if not (a.solved and b.solved):
        return float("nan")
    return a.capacity_bits - b.capacity_bits


def _gap_task(args):
    return _gap(*args)


def threshold(class_pair: Sequence[str], eps: float = 0.0, eta_start: float = 0.05, eta_end: float = 0.45,
              steps: int = 9, width: float = 0.01, jobs: int = 1) -> ThresholdResult:
    """Bracket every eta where the capacity gap between two classes switches on or off.

    A coarse grid is scanned first; each bracket whose advantage indicator
    changes is then bisected until narrower than ``width``. Capacities are
    integer bit counts, so the search tracks a step function.
    """
    strong, weak = (_class_name(str(c)) for c in class_pair)
    if strong == weak:
        return ThresholdResult((strong, weak), float(eps), ())
    if steps < 2:
        raise ValueError("need at least two grid points")
    grid = list(np.linspace(eta_start, eta_end, steps))
    gaps = _run(_gap_task, [(e, strong, weak, eps) for e in grid], jobs)
    samples = list(zip(grid, gaps))
    failures = [e for e, g in samples if math.isnan(g)]
    good = [(e, g) for e, g in samples if not math.isnan(g)]
    intervals = []
    for (e0, g0), (e1, g1) in zip(good, good[1:]):
        if (g0 > 0) == (g1 > 0):
            continue
        lo, hi, adv_lo = e0, e1, g0 > 0
        while hi - lo > width:
            mid = 0.5 * (lo + hi)
            g = _gap(mid, strong, weak, eps)
            samples.append((mid, g))
            if math.isnan(g):
                failures.append(mid)
                break
            if (g > 0) == adv_lo:
                lo = mid
            else:
                hi = mid
        intervals.append((float(lo), float(hi), "merge" if adv_lo else "onset"))
    samples.sort()
    return ThresholdResult((strong, weak), float(eps), tuple(intervals),
                           tuple((float(e), float(g)) for e, g in samples), tuple(failures))


# ---------------------------------------------------------------- trials
@dataclass(frozen=True)
class TrialReport:
    kind: str
    n: int
    seed: int
    deltas: tuple[float, ...]
    failures: int
    tol: float

    @property
    def max_delta(self) -> float:
        return max(self.deltas, default=float("nan"))

    @property
    def ok(self) -> bool:
        return self.failures == 0 and bool(self.deltas) and self.max_delta <= self.tol

    def to_dict(self):
        return {
            "kind": self.kind,
            "n": self.n,
            "seed": self.seed,
            "deltas": list(self.deltas),
            "max_delta": self.max_delta,
            "failures": self.failures,
            "tol": self.tol,
            "ok": self.ok,
        }


def _pauli_trial(args):
    probs, eps_list = args
    jc = combine([pauli_channel(p) for p in probs])
    out = []
    for eps in eps_list:
        a = solve(build_capacity_free(jc, eps))
        b = solve(build_capacity_freepar(jc, eps))
        out.append(abs(a.objective - b.objective) if a.optimal and b.optimal else None)
    return out


def _omega_trial(args):
    entries, m = args
    from .tensor import LabeledOperator, SystemLayout

    jc = LabeledOperator(SystemLayout((("X1", 2), ("Y1", 2))), entries, True)
    a = solve(build_avg_error_freepar(jc, m))
    b = solve(build_min_error_freepar(jc, m))
    return [abs(a.objective - b.objective) if a.optimal and b.optimal else None]


def trials(kind: str, n: int, seed: int = 0, eps_list: Sequence[float] = (0.0, 0.02), m: int = 2,
           jobs: int = 1) -> TrialReport:
    """Seeded randomized comparisons.

    ``pauli``: ``|m*_Free - m*_FreePar|`` for pairs of single-qubit Pauli
    channels at every tolerance in ``eps_list``. ``omega_p``: average versus
    worst-case FreePar error on random qubit channels with ``m`` messages.
    """
    if kind not in TRIAL_TOL:
        raise ValueError(f"unknown trial kind {kind!r}; choose from {sorted(TRIAL_TOL)}")
    if int(n) != n or n < 1:
        raise ValueError(f"need at least one trial, got n={n}")
    rng = np.random.default_rng(seed)
    if kind == "pauli":
        tasks = [([random_pauli_probs(1, rng), random_pauli_probs(1, rng)], tuple(eps_list)) for _ in range(n)]
        results = _run(_pauli_trial, tasks, jobs)
    else:
        tasks = [(random_channel(2, 2, rng).op.entries, m) for _ in range(n)]
        results = _run(_omega_trial, tasks, jobs)
    flat = [d for res in results for d in res]
    deltas = tuple(float(d) for d in flat if d is not None)
    return TrialReport(kind, int(n), int(seed), deltas, sum(d is None for d in flat), TRIAL_TOL[kind])
