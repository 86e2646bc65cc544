"""Membership predicates for supermap and channel classes.

A supermap Choi operator lives on slot systems ``X_i, Y_i``, the sender
input ``A`` and the receiver output ``B``. Float operators are compared with
an absolute tolerance; exact operators (object dtype) are compared exactly.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

import numpy as np

from .channels import classical_noiseless, slot_pairs
from .exact import exact_psd
from .tensor import (
    LabeledOperator,
    LayoutError,
    SystemLayout,
    identity,
    ns_project,
    partial_trace,
    permute_systems,
    replace,
    tensor,
)

__all__ = [
    "CHECK_ATOL",
    "SupermapClass",
    "ClassTag",
    "Violation",
    "Report",
    "Roles",
    "check_no_forward_signaling",
    "check_general_supermap",
    "check_comb",
    "check_definite_decomposition",
    "check_no_signaling_channel",
    "embed_symmetric",
]

CHECK_ATOL = 1e-8


class ClassTag(str, Enum):
    FREE_PAR = "FreePar"
    FREE_FIX = "FreeFix"
    FREE_DEF = "FreeDef"
    FREE = "Free"


_RANK = {ClassTag.FREE_PAR: 0, ClassTag.FREE_FIX: 1, ClassTag.FREE_DEF: 2, ClassTag.FREE: 3}


@dataclass(frozen=True)
class SupermapClass:
    """One of the four free classes; ``FreeFix`` carries a slot order."""

    tag: ClassTag
    order: tuple[int, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "tag", ClassTag(self.tag))
        if self.tag is ClassTag.FREE_FIX:
            if self.order is None:
                raise ValueError("FreeFix needs an explicit slot order")
            order = tuple(int(k) for k in self.order)
            if sorted(order) != list(range(1, len(order) + 1)):
                raise ValueError(f"{order} is not a permutation of slots 1..{len(order)}")
            object.__setattr__(self, "order", order)
        elif self.order is not None:
            raise ValueError(f"{self.tag.value} takes no slot order")

    @classmethod
    def parse(cls, text: str) -> "SupermapClass":
        """Parse ``Free``, ``FreeDef``, ``FreePar`` or ``FreeFix(2,1)``."""
        text = text.strip()
        if text.startswith("FreeFix"):
            rest = text[len("FreeFix"):].strip("()[] ")
            order = tuple(int(t) for t in rest.replace(",", " ").split()) if rest else (1, 2)
            return cls(ClassTag.FREE_FIX, order)
        return cls(ClassTag(text))

    @property
    def name(self) -> str:
        if self.tag is ClassTag.FREE_FIX:
            return "FreeFix(" + ",".join(map(str, self.order)) + ")"
        return self.tag.value

    def includes(self, other: "SupermapClass") -> bool:
        """Set inclusion ``other ⊆ self`` in the chain FreePar ⊆ FreeFix ⊆ FreeDef ⊆ Free."""
        return _RANK[other.tag] <= _RANK[self.tag]

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class Violation:
    constraint: str
    residual: float

    def to_dict(self):
        return {"constraint": self.constraint, "residual": self.residual}


@dataclass(frozen=True)
class Report:
    ok: bool
    violations: tuple[Violation, ...] = ()
    residuals: dict = field(default_factory=dict)

    def __bool__(self):
        return self.ok

    @property
    def max_violation(self) -> float:
        return max((v.residual for v in self.violations), default=0.0)

    def to_dict(self):
        return {
            "ok": self.ok,
            "max_violation": self.max_violation,
            "violations": [v.to_dict() for v in self.violations],
            "residuals": dict(self.residuals),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


class _Collector:
    def __init__(self, atol: float):
        self.atol = atol
        self.violations: list[Violation] = []
        self.residuals: dict[str, float] = {}

    def zero(self, name: str, op: LabeledOperator):
        if op.exact:
            ok = bool(np.all(op.entries == 0))
            res = 0.0 if ok else float(max(abs(complex(x)) for x in op.entries.ravel()))
        else:
            res = float(np.max(np.abs(op.entries), initial=0.0))
            ok = res <= self.atol
        self._record(name, res, ok)

    def psd(self, name: str, op: LabeledOperator):
        if op.exact:
            r = exact_psd(op)
            if r.psd:
                res = 0.0
            else:
                w = np.array([float(x) for x in r.witness])
                f = op.to_float().entries.real
                res = float(-(w @ f @ w) / (w @ w))
            self._record(name, res, r.psd)
        else:
            h = 0.5 * (op.entries + op.entries.conj().T)
            res = max(0.0, -float(np.linalg.eigvalsh(h).min()))
            self._record(name, res, res <= self.atol)

    def _record(self, name, res, ok):
        self.residuals[name] = res
        if not ok:
            self.violations.append(Violation(name, res))

    def report(self) -> Report:
        return Report(not self.violations, tuple(self.violations), self.residuals)


@dataclass(frozen=True)
class Roles:
    """Assignment of layout labels to the roles of a supermap Choi operator."""

    pairs: tuple[tuple[str, str], ...]
    a: str = "A"
    b: str = "B"

    @classmethod
    def infer(cls, layout: SystemLayout, a: str = "A", b: str = "B", pairs=None) -> "Roles":
        for lab, role in ((a, "A"), (b, "B")):
            if lab not in layout:
                raise LayoutError(f"missing role {role}: label {lab!r} not in layout")
        if pairs is None:
            pairs = slot_pairs(layout.without([a, b]))
        pairs = tuple((x, y) for x, y in pairs)
        for x, y in pairs:
            for lab in (x, y):
                if lab not in layout:
                    raise LayoutError(f"missing slot label {lab!r}")
        return cls(pairs, a, b)

    @property
    def xs(self) -> list[str]:
        return [x for x, _ in self.pairs]

    @property
    def ys(self) -> list[str]:
        return [y for _, y in self.pairs]

    def d_y(self, layout: SystemLayout) -> int:
        return layout.sub(self.ys).dim if self.ys else 1

    def d_x(self, layout: SystemLayout) -> int:
        return layout.sub(self.xs).dim if self.xs else 1


def _minus_replace(op: LabeledOperator, label: str) -> LabeledOperator:
    return op - replace(op, [label])


def _scaled_identity(layout: SystemLayout, c, exact: bool) -> LabeledOperator:
    return identity(layout, exact) * c


def check_no_forward_signaling(J: LabeledOperator, a: str = "A", b: str = "B", pairs=None,
                               atol: float = CHECK_ATOL) -> Report:
    """``{}_{[1-A]}J_{YAB} = 0``: the induced channel cannot carry A to B."""
    roles = Roles.infer(J.layout, a, b, pairs)
    col = _Collector(atol)
    j_yab = partial_trace(J, roles.xs)
    col.zero("no_forward_signaling", _minus_replace(j_yab, roles.a))
    return col.report()


def check_general_supermap(J: LabeledOperator, a: str = "A", b: str = "B", pairs=None,
                           atol: float = CHECK_ATOL) -> Report:
    """``J >= 0`` and ``L_NS(J_{XYA}) = 1/d_X``."""
    roles = Roles.infer(J.layout, a, b, pairs)
    col = _Collector(atol)
    col.psd("psd", J)
    j_xya = partial_trace(J, [roles.b])
    target = _scaled_identity(j_xya.layout, _inv(roles.d_x(J.layout), J.exact), J.exact)
    col.zero("ns_projection", ns_project(j_xya, roles.pairs) - target)
    return col.report()


def _inv(d: int, exact: bool):
    from fractions import Fraction

    return Fraction(1, d) if exact else 1.0 / d


def _order_labels(roles: Roles, order: Sequence[int]) -> list[tuple[str, str]]:
    n = len(roles.pairs)
    order = tuple(int(k) for k in order)
    if sorted(order) != list(range(1, n + 1)):
        raise ValueError(f"order {order} is not a permutation of slots 1..{n}")
    return [roles.pairs[k - 1] for k in order]


def _telescoping(col: _Collector, J: LabeledOperator, roles: Roles, seq: list[tuple[str, str]], tag: str, upto):
    # {}_{[1-Y_{k_n}]} J_{X_{k1}Y_{k1}..X_{kn}Y_{kn}A} = 0 for n in upto
    for n in upto:
        keep = {roles.a}
        for x, y in seq[:n]:
            keep.update((x, y))
        marg = partial_trace(J, [lab for lab in J.labels if lab not in keep])
        col.zero(f"{tag}telescoping[n={n}]", _minus_replace(marg, seq[n - 1][1]))


def check_comb(J: LabeledOperator, order: Sequence[int], a: str = "A", b: str = "B", pairs=None,
               atol: float = CHECK_ATOL) -> Report:
    """Quantum comb (causally fixed supermap) constraints for slot ``order`` (1-based)."""
    roles = Roles.infer(J.layout, a, b, pairs)
    seq = _order_labels(roles, order)
    col = _Collector(atol)
    col.psd("psd", J)
    _telescoping(col, J, roles, seq, "", range(1, len(seq) + 1))
    j_a = partial_trace(J, [lab for lab in J.labels if lab != roles.a])
    col.zero("normalization", j_a - _scaled_identity(j_a.layout, roles.d_y(J.layout), J.exact))
    return col.report()


def check_definite_decomposition(components: Sequence[tuple[Sequence[int], LabeledOperator]], a: str = "A",
                                 b: str = "B", pairs=None, atol: float = CHECK_ATOL) -> Report:
    """Validate an order-indexed decomposition of a causally definite supermap.

    Every prefix ``(k_1..k_n)`` with ``n < N`` constrains the sum of the
    components sharing that prefix; full orders constrain each component.
    """
    if not components:
        raise ValueError("empty decomposition")
    first = components[0][1]
    roles = Roles.infer(first.layout, a, b, pairs)
    n_slots = len(roles.pairs)
    perms = set(itertools.permutations(range(1, n_slots + 1)))
    comps: dict[tuple[int, ...], LabeledOperator] = {}
    for order, op in components:
        order = tuple(int(k) for k in order)
        if order not in perms:
            raise ValueError(f"order {order} is not a permutation of slots 1..{n_slots}")
        if order in comps:
            raise ValueError(f"order {order} listed twice")
        if set(op.labels) != set(first.labels):
            raise LayoutError("components live on different systems")
        comps[order] = permute_systems(op, first.labels)

    col = _Collector(atol)
    for order, op in comps.items():
        col.psd(f"psd{list(order)}", op)
    for n in range(1, n_slots):
        prefixes = {order[:n] for order in comps}
        for prefix in sorted(prefixes):
            total = None
            for order, op in comps.items():
                if order[:n] == prefix:
                    total = op if total is None else total + op
            seq = [roles.pairs[k - 1] for k in prefix]
            _telescoping(col, total, roles, seq, f"prefix{list(prefix)}:", [n])
    for order, op in comps.items():
        seq = [roles.pairs[k - 1] for k in order]
        _telescoping(col, op, roles, seq, f"order{list(order)}:", [n_slots])
    total = None
    for op in comps.values():
        total = op if total is None else total + op
    j_a = partial_trace(total, [lab for lab in total.labels if lab != roles.a])
    col.zero("normalization", j_a - _scaled_identity(j_a.layout, roles.d_y(total.layout), total.exact))
    return col.report()


def check_no_signaling_channel(J: LabeledOperator, pairs=None, atol: float = CHECK_ATOL) -> Report:
    """``{}_{[Y_j - X_jY_j]}J = 0`` for every party ``j`` of a multipartite channel."""
    pairs = tuple(pairs) if pairs is not None else tuple(slot_pairs(J.layout))
    col = _Collector(atol)
    for x, y in pairs:
        col.zero(f"no_signaling[{x}{y}]", replace(J, [y]) - replace(J, [x, y]))
    return col.report()


def embed_symmetric(E: LabeledOperator, F: LabeledOperator, m: int, a: str = "A", b: str = "B") -> LabeledOperator:
    """``E (x) J^{Delta_m}_{AB} + F (x) (1_AB - J^{Delta_m}_{AB})``."""
    exact = E.exact and F.exact
    jd = classical_noiseless(m, a, b, exact=exact).op
    rest = identity(jd.layout, exact) - jd
    return tensor(E, jd) + tensor(permute_systems(F, E.labels), rest)
