"""Choi operators of the channel families used for capacity studies.

Choi operators are unnormalized, ``J = sum_ij |i><j| (x) C(|i><j|)``, so that
``tr_Y J = 1_X``. Input systems come first in the layout.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .exact import exact_psd, sqrt_rational
from .tensor import (
    LabeledOperator,
    LayoutError,
    SystemLayout,
    identity,
    partial_trace,
    permute_systems,
    relabel,
    tensor,
)

__all__ = [
    "ChannelError",
    "ChoiChannel",
    "ChannelList",
    "PAULIS",
    "amplitude_damping",
    "pauli_channel",
    "pauli_gamma",
    "gamma_basis",
    "replacement_channel",
    "classical_noiseless",
    "from_matrix",
    "combine",
    "random_channel",
    "random_pauli_probs",
    "slot_pairs",
]

PSD_ATOL = 1e-10
TP_ATOL = 1e-12

PAULIS = (
    np.eye(2),
    np.array([[0, 1], [1, 0]], dtype=float),
    np.array([[0, -1j], [1j, 0]]),
    np.array([[1, 0], [0, -1]], dtype=float),
)


class ChannelError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class ChoiChannel:
    op: LabeledOperator
    input_labels: tuple[str, ...]
    output_labels: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "input_labels", tuple(self.input_labels))
        object.__setattr__(self, "output_labels", tuple(self.output_labels))
        if set(self.input_labels) & set(self.output_labels):
            raise ChannelError("input and output labels overlap")
        if set(self.input_labels) | set(self.output_labels) != set(self.op.labels):
            raise ChannelError("input/output labels do not cover the operator layout")
        self.validate()

    def validate(self) -> None:
        op = self.op
        if op.exact:
            if not exact_psd(op):
                raise ChannelError("Choi operator is not PSD")
        else:
            h = op.symmetrized().entries
            if np.max(np.abs(h - op.entries), initial=0.0) > TP_ATOL * max(1.0, np.abs(op.entries).max()):
                raise ChannelError("Choi operator is not Hermitian")
            if np.linalg.eigvalsh(h).min() < -PSD_ATOL:
                raise ChannelError("Choi operator is not PSD")
        marg = partial_trace(op, self.output_labels)
        inp = identity(marg.layout, op.exact)
        if op.exact:
            ok = bool(np.all(permute_systems(marg, inp.labels).entries == inp.entries))
        else:
            ok = marg.allclose(inp, atol=TP_ATOL)
        if not ok:
            raise ChannelError("Choi operator is not trace preserving")

    @property
    def d_in(self) -> int:
        return self.op.layout.sub(self.input_labels).dim

    @property
    def d_out(self) -> int:
        return self.op.layout.sub(self.output_labels).dim

    def relabeled(self, inp: str, out: str) -> "ChoiChannel":
        if len(self.input_labels) != 1 or len(self.output_labels) != 1:
            raise ChannelError("relabeling needs a single input and output system")
        op = relabel(self.op, {self.input_labels[0]: inp, self.output_labels[0]: out})
        return ChoiChannel(op, (inp,), (out,))


def _layout(inp: str, out: str, d_in: int, d_out: int) -> SystemLayout:
    return SystemLayout(((inp, d_in), (out, d_out)))


def amplitude_damping(eta, inp: str = "X", out: str = "Y", exact: bool = False) -> ChoiChannel:
    """Qubit amplitude damping with Kraus ops ``sqrt(eta)|0><1|`` and ``diag(1, sqrt(1-eta))``.

    With ``exact=True`` ``eta`` must be rational and the entries live in
    Q(sqrt(r)), e.g. ``sqrt(0.9) = (3/10)*sqrt(10)``.
    """
    if exact:
        eta = Fraction(eta) if not isinstance(eta, float) else Fraction(str(eta))
        if not 0 <= eta <= 1:
            raise ChannelError(f"damping parameter must lie in [0, 1], got {eta}")
        root = sqrt_rational(1 - eta)
        zero = Fraction(0)
        e = np.full((4, 4), zero, dtype=object)
        e[0, 0] = Fraction(1)
        e[2, 2] = eta
        e[3, 3] = 1 - eta
        e[0, 3] = e[3, 0] = root
    else:
        eta = float(eta)
        if not 0.0 <= eta <= 1.0:
            raise ChannelError(f"damping parameter must lie in [0, 1], got {eta}")
        root = np.sqrt(1.0 - eta)
        e = np.array([[1, 0, 0, root], [0, 0, 0, 0], [0, 0, eta, 0], [root, 0, 0, 1 - eta]], dtype=float)
    return ChoiChannel(LabeledOperator(_layout(inp, out, 2, 2), e, True), (inp,), (out,))


def _gamma_ket(d: int) -> np.ndarray:
    ket = np.zeros(d * d)
    ket[[i * d + i for i in range(d)]] = 1.0
    return ket


def pauli_gamma(indices: Sequence[int], inp: str = "X", out: str = "Y") -> LabeledOperator:
    """``(1 (x) sigma_i) |Gamma><Gamma| (1 (x) sigma_i)`` for a q-qubit Pauli string."""
    q = len(indices)
    d = 2 ** q
    sigma = np.array([[1.0]])
    for i in indices:
        sigma = np.kron(sigma, PAULIS[i])
    ket = np.kron(np.eye(d), sigma) @ _gamma_ket(d)
    g = np.outer(ket, ket.conj())
    if np.all(np.abs(g.imag) == 0):
        g = g.real
    return LabeledOperator(_layout(inp, out, d, d), g, True)


def pauli_channel(probs, q: int = 1, inp: str = "X", out: str = "Y") -> ChoiChannel:
    """Pauli channel; ``probs`` is indexed by Pauli strings in lexicographic order."""
    probs = np.asarray(probs, dtype=float).ravel()
    if probs.size != 4 ** q:
        raise ChannelError(f"need {4 ** q} probabilities for q={q}, got {probs.size}")
    if np.any(probs < 0):
        raise ChannelError("probabilities must be non-negative")
    if abs(probs.sum() - 1.0) > 1e-12:
        raise ChannelError("probabilities must sum to 1")
    d = 2 ** q
    acc = np.zeros((d * d, d * d))
    for p, idx in zip(probs, itertools.product(range(4), repeat=q)):
        if p:
            acc = acc + p * pauli_gamma(idx, inp, out).entries.real
    return ChoiChannel(LabeledOperator(_layout(inp, out, d, d), acc, True), (inp,), (out,))


def slot_pairs(layout: SystemLayout) -> list[tuple[str, str]]:
    """Pairs ``(X_i, Y_i)`` of a channel-list layout, ordered by slot index."""
    xs = sorted((lab for lab in layout.labels if lab.startswith("X")), key=_slot_key)
    pairs = []
    for x in xs:
        y = "Y" + x[1:]
        if y not in layout:
            raise LayoutError(f"no output system matching {x!r}")
        pairs.append((x, y))
    ys = [lab for lab in layout.labels if lab.startswith("Y")]
    if len(ys) != len(xs):
        raise LayoutError("unpaired output systems in layout")
    return pairs


def _slot_key(lab: str):
    tail = lab[1:]
    return (0, int(tail)) if tail.isdigit() else (1, tail)


def gamma_basis(layout: SystemLayout) -> list[tuple[tuple[int, ...], LabeledOperator]]:
    """All Pauli-conjugated Gamma operators over a multi-slot qubit layout.

    Each slot ``(X_j, Y_j)`` must carry ``2**q_j`` dimensions; the returned
    operators are products over slots, permuted into ``layout`` order.
    """
    pairs = slot_pairs(layout)
    per_slot = []
    for x, y in pairs:
        d = layout.dim_of(x)
        if layout.dim_of(y) != d or d & (d - 1):
            raise LayoutError(f"slot {x}/{y} is not a qubit register")
        q = d.bit_length() - 1
        per_slot.append([(idx, pauli_gamma(idx, x, y)) for idx in itertools.product(range(4), repeat=q)])
    out = []
    for combo in itertools.product(*per_slot):
        op = combo[0][1]
        for _, g in combo[1:]:
            op = tensor(op, g)
        idx = tuple(i for part, _ in combo for i in part)
        out.append((idx, permute_systems(op, layout.labels)))
    return out


def replacement_channel(rho0, in_dim: int, inp: str = "X", out: str = "Y") -> ChoiChannel:
    """Constant-output channel ``C(rho) = rho0``; its Choi operator is ``1 (x) rho0``."""
    rho0 = np.asarray(rho0)
    if rho0.ndim != 2 or rho0.shape[0] != rho0.shape[1]:
        raise ChannelError("rho0 must be a square matrix")
    if rho0.dtype != object:
        if np.max(np.abs(rho0 - rho0.conj().T), initial=0.0) > 1e-12:
            raise ChannelError("rho0 is not Hermitian")
        if np.linalg.eigvalsh(rho0).min() < -PSD_ATOL or abs(np.trace(rho0) - 1) > 1e-12:
            raise ChannelError("rho0 is not a density matrix")
    elif not exact_psd(rho0) or np.trace(rho0) != 1:
        raise ChannelError("rho0 is not a density matrix")
    exact = rho0.dtype == object
    eye = identity(SystemLayout(((inp, in_dim),)), exact)
    r = LabeledOperator(SystemLayout(((out, rho0.shape[0]),)), rho0)
    try:
        op = tensor(eye, r).symmetrized()
    except ValueError as err:
        raise ChannelError(str(err)) from None
    return ChoiChannel(op, (inp,), (out,))


def classical_noiseless(m: int, inp: str = "X", out: str = "Y", exact: bool = False) -> ChoiChannel:
    """Noiseless classical channel on ``m`` letters: ``sum_j |jj><jj|``."""
    if int(m) != m or m < 1:
        raise ChannelError(f"need m >= 1, got {m}")
    m = int(m)
    if exact:
        e = np.full((m * m, m * m), Fraction(0), dtype=object)
        for j in range(m):
            e[j * m + j, j * m + j] = Fraction(1)
    else:
        e = np.zeros((m * m, m * m))
        e[[j * m + j for j in range(m)], [j * m + j for j in range(m)]] = 1.0
    return ChoiChannel(LabeledOperator(_layout(inp, out, m, m), e, True), (inp,), (out,))


def from_matrix(entries, in_dim: int, out_dim: int, inp: str = "X", out: str = "Y") -> ChoiChannel:
    """Wrap a raw Choi matrix given in (input, output) order."""
    op = LabeledOperator(_layout(inp, out, in_dim, out_dim), np.asarray(entries))
    if not op.exact:
        op = op.symmetrized() if np.max(np.abs(op.entries - op.entries.conj().T), initial=0.0) <= 1e-9 else op
    return ChoiChannel(op, (inp,), (out,))


@dataclass(frozen=True, eq=False)
class ChannelList:
    channels: tuple[ChoiChannel, ...]

    def __post_init__(self):
        object.__setattr__(self, "channels", tuple(self.channels))
        seen: set[str] = set()
        for ch in self.channels:
            for lab in ch.op.labels:
                if lab in seen:
                    raise LayoutError(f"label {lab!r} used by more than one channel")
                seen.add(lab)

    @classmethod
    def canonical(cls, channels: Sequence[ChoiChannel]) -> "ChannelList":
        """Relabel channel ``i`` (1-based) to ``X{i} -> Y{i}``."""
        return cls(tuple(ch.relabeled(f"X{i}", f"Y{i}") for i, ch in enumerate(channels, start=1)))

    def __len__(self):
        return len(self.channels)

    def __iter__(self):
        return iter(self.channels)


def combine(channels) -> LabeledOperator:
    """Choi operator of a list of channels in parallel, layout ``[X1.., Y1..]``.

    A bare sequence of channels is relabeled canonically first; a
    :class:`ChannelList` keeps its labels.
    """
    if not isinstance(channels, ChannelList):
        channels = ChannelList.canonical(list(channels))
    chans = channels.channels
    if not chans:
        raise ChannelError("empty channel list")
    op = chans[0].op
    for ch in chans[1:]:
        op = tensor(op, ch.op)
    order = [lab for ch in chans for lab in ch.input_labels] + [lab for ch in chans for lab in ch.output_labels]
    return permute_systems(op, order)


def random_channel(d_in: int, d_out: int, rng: np.random.Generator, real: bool = False, rank: int | None = None,
                   inp: str = "X", out: str = "Y") -> ChoiChannel:
    """Random channel from a Ginibre Choi sample normalized to be trace preserving."""
    k = rank or d_in * d_out
    g = rng.standard_normal((d_in * d_out, k))
    if not real:
        g = g + 1j * rng.standard_normal((d_in * d_out, k))
    w = g @ g.conj().T
    lay = _layout(inp, out, d_in, d_out)
    wx = partial_trace(LabeledOperator(lay, w), [out]).entries
    vals, vecs = np.linalg.eigh(0.5 * (wx + wx.conj().T))
    s = vecs @ np.diag(vals ** -0.5) @ vecs.conj().T
    t = np.kron(s, np.eye(d_out))
    j = t @ w @ t.conj().T
    return ChoiChannel(LabeledOperator(lay, j).symmetrized(), (inp,), (out,))


def random_pauli_probs(q: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform sample from the probability simplex on ``4**q`` outcomes."""
    p = rng.dirichlet(np.ones(4 ** q))
    return p / p.sum()
