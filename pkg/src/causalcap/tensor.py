"""Labeled multilinear operator algebra.

Operators live on an ordered list of named subsystems. Index convention is
mixed-radix, big-endian in declared label order. Every operation here is
generic over the scalar domain: float/complex numpy arrays for numerics and
object arrays (``Fraction`` or :class:`~causalcap.exact.quad.QuadScalar`) for
exact certification.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "LayoutError",
    "SystemLayout",
    "LabeledOperator",
    "tensor",
    "partial_trace",
    "partial_transpose",
    "replace",
    "trace_and_replace",
    "ns_project",
    "link_product",
    "permute_systems",
    "identity",
    "expand",
    "relabel",
]

HERMITIAN_ATOL = 1e-12


class LayoutError(ValueError):
    """Raised on label/dimension mismatches between operators."""


@dataclass(frozen=True)
class SystemLayout:
    systems: tuple[tuple[str, int], ...] = ()

    def __post_init__(self):
        systems = tuple((str(lab), int(d)) for lab, d in self.systems)
        seen = set()
        for lab, d in systems:
            if lab in seen:
                raise LayoutError(f"duplicate label {lab!r}")
            if d < 1:
                raise LayoutError(f"dimension of {lab!r} must be positive, got {d}")
            seen.add(lab)
        object.__setattr__(self, "systems", systems)

    @classmethod
    def of(cls, *systems: tuple[str, int]) -> "SystemLayout":
        return cls(tuple(systems))

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(lab for lab, _ in self.systems)

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(d for _, d in self.systems)

    @property
    def dim(self) -> int:
        return int(np.prod(self.dims, dtype=np.int64)) if self.systems else 1

    def __len__(self):
        return len(self.systems)

    def __contains__(self, label):
        return label in self.labels

    def dim_of(self, label: str) -> int:
        return self.dims[self.index(label)]

    def index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise LayoutError(f"unknown label {label!r}; layout has {self.labels}") from None

    def sub(self, labels: Iterable[str]) -> "SystemLayout":
        """Sub-layout over ``labels``, kept in this layout's order."""
        wanted = set(labels)
        for lab in wanted:
            self.index(lab)
        return SystemLayout(tuple(s for s in self.systems if s[0] in wanted))

    def without(self, labels: Iterable[str]) -> "SystemLayout":
        drop = set(labels)
        for lab in drop:
            self.index(lab)
        return SystemLayout(tuple(s for s in self.systems if s[0] not in drop))

    def __add__(self, other: "SystemLayout") -> "SystemLayout":
        return SystemLayout(self.systems + other.systems)

    def reordered(self, order: Sequence[str]) -> "SystemLayout":
        return SystemLayout(tuple((lab, self.dim_of(lab)) for lab in order))


def _is_exact(a: np.ndarray) -> bool:
    return a.dtype == object


def _eye(d: int, exact: bool, dtype=float) -> np.ndarray:
    if not exact:
        return np.eye(d, dtype=dtype)
    out = np.full((d, d), Fraction(0), dtype=object)
    for i in range(d):
        out[i, i] = Fraction(1)
    return out


@dataclass(frozen=True, eq=False)
class LabeledOperator:
    """Dense square matrix tagged with a :class:`SystemLayout`.

    ``hermitian=True`` is verified at construction; exact domains compare
    entries exactly, float domains to ``HERMITIAN_ATOL`` relative to scale.
    """

    layout: SystemLayout
    entries: np.ndarray
    hermitian: bool = field(default=False)

    def __post_init__(self):
        a = np.asarray(self.entries)
        if a.ndim == 0:
            a = a.reshape(1, 1)
        n = self.layout.dim
        if a.shape != (n, n):
            raise LayoutError(f"entries have shape {a.shape}, layout needs ({n}, {n})")
        if a.dtype.kind in "iub":
            a = a.astype(float)
        a = a.copy()
        a.setflags(write=False)
        object.__setattr__(self, "entries", a)
        if self.hermitian and not _check_hermitian(a):
            raise ValueError("operator flagged hermitian is not hermitian")

    # ------------------------------------------------------------ properties
    @property
    def labels(self) -> tuple[str, ...]:
        return self.layout.labels

    @property
    def dims(self) -> tuple[int, ...]:
        return self.layout.dims

    @property
    def dim(self) -> int:
        return self.layout.dim

    @property
    def exact(self) -> bool:
        return _is_exact(self.entries)

    @property
    def scalar(self):
        if self.entries.shape != (1, 1):
            raise LayoutError("operator is not 1x1")
        return self.entries[0, 0]

    def tensor_view(self) -> np.ndarray:
        return self.entries.reshape(self.dims + self.dims)

    # ------------------------------------------------------------ algebra
    def _coerce(self, other) -> np.ndarray:
        if isinstance(other, LabeledOperator):
            if other.labels != self.labels:
                other = permute_systems(other, self.labels) if set(other.labels) == set(self.labels) else None
                if other is None:
                    raise LayoutError("operands live on different systems")
            if other.dims != self.dims:
                raise LayoutError("dimension mismatch")
            return other.entries
        raise TypeError(f"cannot combine LabeledOperator with {type(other).__name__}")

    def __add__(self, other):
        b = self._coerce(other)
        return LabeledOperator(self.layout, self.entries + b, self.hermitian and other.hermitian)

    def __sub__(self, other):
        b = self._coerce(other)
        return LabeledOperator(self.layout, self.entries - b, self.hermitian and other.hermitian)

    def __neg__(self):
        return LabeledOperator(self.layout, -self.entries, self.hermitian)

    def __mul__(self, c):
        if isinstance(c, LabeledOperator):
            return NotImplemented
        return LabeledOperator(self.layout, self.entries * c, self.hermitian and _is_real(c))

    __rmul__ = __mul__

    def __truediv__(self, c):
        return LabeledOperator(self.layout, self.entries / c, self.hermitian)

    def __matmul__(self, other):
        b = self._coerce(other)
        return LabeledOperator(self.layout, self.entries @ b)

    def trace(self):
        return np.trace(self.entries)

    def dagger(self) -> "LabeledOperator":
        return LabeledOperator(self.layout, np.conj(self.entries).T, self.hermitian)

    def symmetrized(self) -> "LabeledOperator":
        """Return ``(M + M^dagger)/2`` with the hermitian flag set."""
        a = self.entries
        if self.exact:
            h = (a + np.conj(a).T) / 2
        else:
            h = 0.5 * (a + a.conj().T)
        return LabeledOperator(self.layout, h, True)

    def to_float(self) -> "LabeledOperator":
        if not self.exact:
            return self
        vals = np.vectorize(complex, otypes=[complex])(self.entries)
        if np.all(vals.imag == 0):
            vals = vals.real
        return LabeledOperator(self.layout, vals, self.hermitian)

    def allclose(self, other: "LabeledOperator", atol: float = 1e-12) -> bool:
        """Entrywise closeness as abstract tensors (layouts may be permuted)."""
        b = self._coerce(other.to_float() if other.exact else other)
        a = self.to_float().entries
        b = np.vectorize(complex, otypes=[complex])(b) if b.dtype == object else b
        return bool(np.allclose(a, b, atol=atol, rtol=0))

    def __repr__(self):
        kind = "exact" if self.exact else str(self.entries.dtype)
        return f"LabeledOperator({list(self.layout.systems)}, {kind})"


def _is_real(c) -> bool:
    if isinstance(c, complex):
        return c.imag == 0
    if isinstance(c, np.ndarray) or np.iscomplexobj(c):
        return bool(np.all(np.imag(c) == 0))
    return True


def _check_hermitian(a: np.ndarray) -> bool:
    if _is_exact(a):
        return bool(np.all(a == np.conj(a).T))
    scale = max(1.0, float(np.max(np.abs(a))) if a.size else 1.0)
    return bool(np.max(np.abs(a - a.conj().T), initial=0.0) <= HERMITIAN_ATOL * scale)


# ---------------------------------------------------------------- operations
def _labels(labels) -> list[str]:
    if isinstance(labels, str):
        return [labels]
    return list(labels)


def tensor(a: LabeledOperator, b: LabeledOperator) -> LabeledOperator:
    """Kronecker product; the result layout is ``a.layout + b.layout``."""
    for lab in a.labels:
        if lab in b.layout:
            raise LayoutError(f"duplicate label {lab!r} in tensor product")
    return LabeledOperator(a.layout + b.layout, np.kron(a.entries, b.entries), a.hermitian and b.hermitian)


def partial_trace(op: LabeledOperator, labels) -> LabeledOperator:
    """Trace out ``labels``; tracing everything gives a 1x1 operator."""
    labels = _labels(labels)
    if not labels:
        return op
    for lab in labels:
        op.layout.index(lab)
    t = op.tensor_view()
    n = len(op.layout)
    # highest axes first so lower axis numbers stay valid
    for idx in sorted((op.layout.index(lab) for lab in set(labels)), reverse=True):
        t = np.trace(t, axis1=idx, axis2=idx + n)
        n -= 1
    rest = op.layout.without(labels)
    return LabeledOperator(rest, t.reshape(rest.dim, rest.dim), op.hermitian)


def partial_transpose(op: LabeledOperator, labels) -> LabeledOperator:
    labels = _labels(labels)
    n = len(op.layout)
    axes = list(range(2 * n))
    for lab in labels:
        i = op.layout.index(lab)
        axes[i], axes[i + n] = axes[i + n], axes[i]
    t = op.tensor_view().transpose(axes)
    return LabeledOperator(op.layout, t.reshape(op.dim, op.dim), op.hermitian)


def permute_systems(op: LabeledOperator, new_order: Sequence[str]) -> LabeledOperator:
    new_order = list(new_order)
    if sorted(new_order) != sorted(op.labels) or len(set(new_order)) != len(new_order):
        raise LayoutError(f"{new_order} is not a permutation of {list(op.labels)}")
    n = len(op.layout)
    perm = [op.layout.index(lab) for lab in new_order]
    t = op.tensor_view().transpose(perm + [p + n for p in perm])
    layout = op.layout.reordered(new_order)
    return LabeledOperator(layout, t.reshape(op.dim, op.dim), op.hermitian)


def identity(layout: SystemLayout, exact: bool = False, dtype=float) -> LabeledOperator:
    return LabeledOperator(layout, _eye(layout.dim, exact, dtype), True)


def expand(op: LabeledOperator, layout: SystemLayout) -> LabeledOperator:
    """``op`` tensored with identity on the labels it lacks, in ``layout`` order."""
    missing = [s for s in layout.systems if s[0] not in op.layout]
    for lab, d in op.layout.systems:
        if layout.dim_of(lab) != d:
            raise LayoutError(f"dimension mismatch on {lab!r}")
    if missing:
        op = tensor(op, identity(SystemLayout(tuple(missing)), op.exact, op.entries.dtype))
    return permute_systems(op, layout.labels)


def replace(op: LabeledOperator, labels) -> LabeledOperator:
    """Trace out ``labels`` and put back the maximally mixed state there."""
    labels = _labels(labels)
    if not labels:
        return op
    traced = partial_trace(op, labels)
    sub = op.layout.sub(labels)
    mixed = identity(sub, op.exact, op.entries.dtype) / sub.dim
    return permute_systems(tensor(traced, mixed), op.labels)


def trace_and_replace(op: LabeledOperator, terms) -> LabeledOperator:
    """Signed sum of :func:`replace` terms.

    ``terms`` is a sequence of ``(sign, labels)`` with sign in {-1, +1}; an
    empty label set stands for the identity term. ``[(1, ()), (-1, ["Y"])]``
    is ``J - tr_Y[J] (x) 1_Y/d_Y``.
    """
    out = None
    for sign, labels in terms:
        if sign not in (1, -1):
            raise ValueError(f"coefficients must be +1 or -1, got {sign}")
        term = replace(op, _labels(labels))
        term = term if sign == 1 else -term
        out = term if out is None else out + term
    if out is None:
        return op * 0
    return out


def ns_project(op: LabeledOperator, pairs: Sequence[tuple[str, str]]) -> LabeledOperator:
    """Orthogonal projection onto the span of no-signaling channel Choi operators.

    Composition over ``pairs`` of ``J - {}_{Y_j}J + {}_{X_jY_j}J``.
    """
    used: set[str] = set()
    for x, y in pairs:
        for lab in (x, y):
            op.layout.index(lab)
            if lab in used:
                raise LayoutError(f"label {lab!r} appears in more than one pair")
            used.add(lab)
    for x, y in pairs:
        op = op - replace(op, [y]) + replace(op, [x, y])
    return op


def link_product(p: LabeledOperator, q: LabeledOperator) -> LabeledOperator:
    """``tr_B[(P_AB (x) 1_C)(1_A (x) Q_BC^{T_B})]`` over the shared systems B.

    Result layout: P's private labels then Q's private labels. With identical
    label sets this is the scalar ``tr[P Q^T]`` as a 1x1 operator.
    """
    shared = [lab for lab in p.labels if lab in q.layout]
    for lab in shared:
        if p.layout.dim_of(lab) != q.layout.dim_of(lab):
            raise LayoutError(f"shared label {lab!r} has dims {p.layout.dim_of(lab)} vs {q.layout.dim_of(lab)}")
    np_, nq = len(p.layout), len(q.layout)
    tp, tq = p.tensor_view(), q.tensor_view()
    # sum_{b,b'} P[a b, a' b'] Q[b c, b' c']
    p_axes = [p.layout.index(l) for l in shared] + [p.layout.index(l) + np_ for l in shared]
    q_axes = [q.layout.index(l) for l in shared] + [q.layout.index(l) + nq for l in shared]
    t = np.tensordot(tp, tq, axes=(p_axes, q_axes))
    pa = p.layout.without(shared)
    qc = q.layout.without(shared)
    k, l = len(pa), len(qc)
    # axes now: rows(a), cols(a'), rows(c), cols(c')
    t = t.transpose(list(range(k)) + list(range(2 * k, 2 * k + l)) + list(range(k, 2 * k)) + list(range(2 * k + l, 2 * k + 2 * l)))
    out = pa + qc
    return LabeledOperator(out, np.asarray(t).reshape(out.dim, out.dim), p.hermitian and q.hermitian)


def relabel(op: LabeledOperator, mapping: dict[str, str]) -> LabeledOperator:
    """Rename systems; entries and ordering are unchanged."""
    for lab in mapping:
        op.layout.index(lab)
    layout = SystemLayout(tuple((mapping.get(lab, lab), d) for lab, d in op.layout.systems))
    return LabeledOperator(layout, op.entries, op.hermitian)
