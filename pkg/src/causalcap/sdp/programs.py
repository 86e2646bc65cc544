"""Capacity, dual, simulation-cost and error programs over channel-list Choi operators.

Channel-list Choi operators ``JC`` use the layout ``[X1..XN, Y1..YN]``
produced by :func:`causalcap.channels.combine`. Every matrix variable of a
capacity program lives on the same layout as ``JC``.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from ..channels import ChoiChannel, classical_noiseless, slot_pairs
from ..tensor import (
    LabeledOperator,
    LayoutError,
    SystemLayout,
    expand,
    identity,
    link_product,
    ns_project,
    partial_trace,
    partial_transpose,
    replace,
)
from .model import SdpError, SdpProblem

__all__ = [
    "build_capacity_free",
    "build_capacity_freedef2",
    "build_capacity_freefix",
    "build_capacity_freefix2",
    "build_capacity_freepar",
    "build_zero_error_dual_free",
    "build_zero_error_dual_freedef2",
    "build_sim_cost_par",
    "build_avg_error_freepar",
    "build_min_error_freepar",
]


def _float(op: LabeledOperator) -> LabeledOperator:
    op = op.to_float() if op.exact else op
    if np.iscomplexobj(op.entries) and not np.any(op.entries.imag):
        op = LabeledOperator(op.layout, op.entries.real, op.hermitian)
    return op


def _is_complex(op: LabeledOperator) -> bool:
    return np.iscomplexobj(op.entries)


def _check_eps(eps: float) -> float:
    eps = float(eps)
    if not 0.0 <= eps < 1.0:
        raise SdpError(f"error tolerance must lie in [0, 1), got {eps}")
    return eps


class _Ctx:
    """Shared bookkeeping for programs over a channel-list layout."""

    def __init__(self, jc: LabeledOperator):
        self.jc = _float(jc)
        self.layout = self.jc.layout
        self.pairs = slot_pairs(self.layout)
        self.xs = [x for x, _ in self.pairs]
        self.ys = [y for _, y in self.pairs]
        self.x_layout = self.layout.sub(self.xs)
        self.y_layout = self.layout.sub(self.ys)
        self.d_x = self.x_layout.dim
        self.d_y = self.y_layout.dim
        self.complex_ = _is_complex(self.jc)
        self.eye = identity(self.layout)
        self.eye_x = identity(self.x_layout)
        self.eye_y = identity(self.y_layout)

    def fidelity(self, e: LabeledOperator):
        """``E * JC = tr[E JC^T]``, real for Hermitian arguments."""
        return np.real(link_product(e, self.jc).entries)

    def y_marginal(self, e: LabeledOperator) -> LabeledOperator:
        return partial_trace(e, self.xs)

    def slot(self, k: int) -> tuple[str, str]:
        return self.pairs[k - 1]


def _real_trace(op: LabeledOperator):
    return np.real(op.trace())


def build_capacity_free(JC: LabeledOperator, eps: float = 0.0) -> SdpProblem:
    """One-shot capacity program assisted by free general supermaps (maximize m)."""
    eps = _check_eps(eps)
    c = _Ctx(JC)
    p = SdpProblem("max", "capacity_free", c.complex_)
    p.meta.update(cls="Free", eps=eps)
    p.scalar("m")
    p.matrix("E", c.layout)
    p.matrix("F", c.layout)
    p.objective(lambda v: v["m"])
    p.psd("fidelity", lambda v: c.fidelity(v["E"]) - v["m"] * (1 - eps))
    p.equal("E_Y", lambda v: c.y_marginal(v["E"]) - c.eye_y)
    p.psd("E>=0", lambda v: v["E"])
    p.psd("F-E>=0", lambda v: v["F"] - v["E"])
    p.equal("ns(F)", lambda v: ns_project(v["F"], c.pairs) - c.eye * (v["m"] / c.d_x))
    return p


def build_capacity_freepar(JC: LabeledOperator, eps: float = 0.0) -> SdpProblem:
    """No-signaling assisted (free parallel) capacity program."""
    eps = _check_eps(eps)
    c = _Ctx(JC)
    p = SdpProblem("max", "capacity_freepar", c.complex_)
    p.meta.update(cls="FreePar", eps=eps)
    p.scalar("m")
    p.matrix("E", c.layout)
    p.matrix("F", c.x_layout)
    p.objective(lambda v: v["m"])
    p.psd("fidelity", lambda v: c.fidelity(v["E"]) - v["m"] * (1 - eps))
    p.equal("E_Y", lambda v: c.y_marginal(v["E"]) - c.eye_y)
    p.psd("E>=0", lambda v: v["E"])
    p.psd("F_X(x)1-E>=0", lambda v: expand(v["F"], c.layout) - v["E"])
    p.equal("tr F", lambda v: _real_trace(v["F"]) - v["m"])
    return p


def _minus_replace(op: LabeledOperator, labels) -> LabeledOperator:
    return op - replace(op, labels)


def _comb_constraints(p: SdpProblem, c: _Ctx, var: str, order: Sequence[int]) -> None:
    # {}_{[1-Y_{k_n}]} F_{X_{k1}Y_{k1}..X_{kn}Y_{kn}} = 0 for every prefix of the order
    for n in range(len(order), 0, -1):
        keep = {lab for k in order[:n] for lab in c.slot(k)}
        drop = [lab for lab in c.layout.labels if lab not in keep]
        y_last = c.slot(order[n - 1])[1]
        name = f"comb[{var},n={n}]"
        p.equal(name, lambda v, drop=drop, y=y_last: _minus_replace(partial_trace(v[var], drop), [y]))


def _check_order(c: _Ctx, order: Sequence[int]) -> tuple[int, ...]:
    order = tuple(int(k) for k in order)
    if sorted(order) != list(range(1, len(c.pairs) + 1)):
        raise SdpError(f"order {order} is not a permutation of slots 1..{len(c.pairs)}")
    return order


def build_capacity_freedef2(JC: LabeledOperator, eps: float = 0.0) -> SdpProblem:
    """Capacity program assisted by free causally definite supermaps, two slots only."""
    eps = _check_eps(eps)
    c = _Ctx(JC)
    if len(c.pairs) != 2:
        raise SdpError(
            f"the causally definite capacity program is implemented for N=2 slots only, got N={len(c.pairs)}; "
            "general N needs an enumeration over all N! orders and is not supported")
    p = SdpProblem("max", "capacity_freedef2", c.complex_)
    p.meta.update(cls="FreeDef", eps=eps)
    p.scalar("m")
    for name in "EFGH":
        p.matrix(name, c.layout)
    p.objective(lambda v: v["m"])
    p.psd("fidelity", lambda v: c.fidelity(v["E"] + v["G"]) - v["m"] * (1 - eps))
    p.equal("E_Y+G_Y", lambda v: c.y_marginal(v["E"] + v["G"]) - c.eye_y)
    p.psd("E>=0", lambda v: v["E"])
    p.psd("F-E>=0", lambda v: v["F"] - v["E"])
    p.psd("G>=0", lambda v: v["G"])
    p.psd("H-G>=0", lambda v: v["H"] - v["G"])
    p.equal("tr[F+H]", lambda v: _real_trace(v["F"] + v["H"]) - v["m"] * c.d_y)
    _comb_constraints(p, c, "F", (1, 2))
    _comb_constraints(p, c, "H", (2, 1))
    return p


def build_capacity_freefix(JC: LabeledOperator, eps: float = 0.0, order: Sequence[int] | None = None) -> SdpProblem:
    """Single-order (quantum comb) capacity program.

    Obtained from the causally definite program by keeping only the component
    of the given order, so it is a derived program rather than a quoted one.
    Works for any number of slots.
    """
    eps = _check_eps(eps)
    c = _Ctx(JC)
    order = _check_order(c, order if order is not None else range(1, len(c.pairs) + 1))
    p = SdpProblem("max", "capacity_freefix", c.complex_)
    p.meta.update(cls="FreeFix", order=order, eps=eps, derived=True)
    p.scalar("m")
    p.matrix("E", c.layout)
    p.matrix("F", c.layout)
    p.objective(lambda v: v["m"])
    p.psd("fidelity", lambda v: c.fidelity(v["E"]) - v["m"] * (1 - eps))
    p.equal("E_Y", lambda v: c.y_marginal(v["E"]) - c.eye_y)
    p.psd("E>=0", lambda v: v["E"])
    p.psd("F-E>=0", lambda v: v["F"] - v["E"])
    p.equal("tr F", lambda v: _real_trace(v["F"]) - v["m"] * c.d_y)
    _comb_constraints(p, c, "F", order)
    return p


def build_capacity_freefix2(JC: LabeledOperator, eps: float = 0.0, order: Sequence[int] = (1, 2)) -> SdpProblem:
    """Two-slot form of :func:`build_capacity_freefix`."""
    c = _Ctx(JC)
    if len(c.pairs) != 2:
        raise SdpError(f"expected N=2 slots, got N={len(c.pairs)}")
    return build_capacity_freefix(JC, eps, order)


def build_zero_error_dual_free(JC: LabeledOperator) -> SdpProblem:
    """Dual of the zero-error Free program; its optimum upper-bounds m."""
    c = _Ctx(JC)
    jt = partial_transpose(c.jc, c.layout.labels)
    p = SdpProblem("min", "dual_free", c.complex_)
    p.meta.update(cls="Free", eps=0.0, dual=True)
    p.matrix("M", c.layout)
    p.matrix("N", c.y_layout)
    p.objective(lambda v: _real_trace(v["N"]))
    # only ns(M) and tr M enter; pinning M to the projected subspace removes
    # directions the program cannot see
    p.equal("M=ns(M)", lambda v: v["M"] - ns_project(v["M"], c.pairs))
    p.psd("ns(M)>=0", lambda v: ns_project(v["M"], c.pairs))
    p.psd(
        "ns(M)+1(x)N>=(1+trM/dX)J^T",
        lambda v: ns_project(v["M"], c.pairs) + expand(v["N"], c.layout) - jt * (1 + _real_trace(v["M"]) / c.d_x),
    )
    return p


def build_zero_error_dual_freedef2(JC: LabeledOperator) -> SdpProblem:
    """Dual of the zero-error FreeDef program (two slots); minimize tr K."""
    c = _Ctx(JC)
    if len(c.pairs) != 2:
        raise SdpError(f"expected N=2 slots, got N={len(c.pairs)}")
    (x1, y1), (x2, y2) = c.pairs
    p = SdpProblem("min", "dual_freedef2", c.complex_)
    p.meta.update(cls="FreeDef", eps=0.0, dual=True)
    p.scalar("lam")
    p.matrix("M", c.layout)
    p.matrix("N", c.layout)
    p.matrix("K", c.y_layout)
    p.objective(lambda v: _real_trace(v["K"]))
    for var, (xa, ya), (xb, yb) in (("M", (x1, y1), (x2, y2)), ("N", (x2, y2), (x1, y1))):
        xa_layout = c.layout.sub([xa])
        d_xb = c.layout.dim_of(xb)
        p.psd(f"{var}>=0", lambda v, var=var: v[var])
        p.equal(f"{var}:[1-{xb}]{var}_X{ya}",
                lambda v, var=var, yb=yb, xb=xb: _minus_replace(partial_trace(v[var], [yb]), [xb]))
        p.equal(
            f"{var}_{xa}=d{xb}*lam*1",
            lambda v, var=var, xa=xa, xl=xa_layout, d=d_xb: partial_trace(
                v[var], [lab for lab in c.layout.labels if lab != xa]) - identity(xl) * (d * v["lam"]),
        )
        p.psd(
            f"{var}+1(x)K>=(lam+1)J",
            lambda v, var=var: v[var] + expand(v["K"], c.layout) - c.jc * (v["lam"] + 1),
        )
    return p


def _channel_op(channel) -> tuple[LabeledOperator, str, str]:
    if isinstance(channel, ChoiChannel):
        if len(channel.input_labels) != 1 or len(channel.output_labels) != 1:
            raise LayoutError("simulation cost expects a single-input, single-output channel")
        op = _float(channel.op)
        return op, channel.input_labels[0], channel.output_labels[0]
    op = _float(channel)
    if len(op.labels) != 2:
        raise LayoutError("simulation cost expects a Choi operator on two systems (input, output)")
    return op, op.labels[0], op.labels[1]


def build_sim_cost_par(JC, eps: float = 0.0) -> SdpProblem:
    """Parallel-assisted simulation cost of one channel; minimize ``tr F_B``.

    At ``eps = 0`` the slack operator is forced to zero and the constraint
    collapses to ``E <= J``.
    """
    eps = float(eps)
    if eps < 0:
        raise SdpError(f"error tolerance must be non-negative, got {eps}")
    j, a, b = _channel_op(JC)
    layout = j.layout
    a_layout, b_layout = layout.sub([a]), layout.sub([b])
    p = SdpProblem("min", "sim_cost_par", _is_complex(j))
    p.meta.update(eps=eps)
    p.matrix("E", layout)
    p.matrix("F", b_layout)
    p.objective(lambda v: _real_trace(v["F"]))
    eye_a = identity(a_layout)
    if eps == 0:
        p.psd("J-E>=0", lambda v: j - v["E"])
    else:
        p.matrix("W", layout)
        p.psd("W>=0", lambda v: v["W"])
        p.psd("W-E+J>=0", lambda v: v["W"] - v["E"] + j)
        p.psd("eps*1-W_A>=0", lambda v: eye_a * eps - partial_trace(v["W"], [b]))
    p.psd("E>=0", lambda v: v["E"])
    p.psd("1(x)F-E>=0", lambda v: expand(v["F"], layout) - v["E"])
    p.equal("E_A", lambda v: partial_trace(v["E"], [b]) - eye_a)
    return p


def _freepar_supermap(p: SdpProblem, c: _Ctx, m: int, a: str, b: str) -> SystemLayout:
    """Declare a full FreePar supermap variable ``S`` on ``X Y A B``."""
    full = c.layout + SystemLayout(((a, m), (b, m)))
    p.matrix("S", full)
    a_layout = full.sub([a])
    p.psd("S>=0", lambda v: v["S"])
    p.equal("[1-Y]S_XYA", lambda v: _minus_replace(partial_trace(v["S"], [b]), c.ys))
    p.equal("S_A=dY*1", lambda v: partial_trace(v["S"], c.xs + c.ys + [b]) - identity(a_layout) * c.d_y)
    p.equal("[1-A]S_YAB", lambda v: _minus_replace(partial_trace(v["S"], c.xs), [a]))
    return full


def _check_m(m) -> int:
    if int(m) != m:
        raise SdpError(f"message count must be an integer, got {m}")
    m = int(m)
    if m < 2:
        raise SdpError("message count must be at least 2 (m=1 is trivially error-free)")
    return m


def build_avg_error_freepar(JC: LabeledOperator, m: int, a: str = "A", b: str = "B") -> SdpProblem:
    """Minimum average error probability for ``m`` equiprobable messages (FreePar)."""
    m = _check_m(m)
    c = _Ctx(JC)
    jd = classical_noiseless(m, a, b).op
    p = SdpProblem("min", "avg_error_freepar", c.complex_)
    p.meta.update(cls="FreePar", m=m)
    _freepar_supermap(p, c, m, a, b)
    p.objective(lambda v: 1 - np.real(np.trace((link_product(v["S"], c.jc) @ jd).entries)) / m)
    return p


def build_min_error_freepar(JC: LabeledOperator, m: int, a: str = "A", b: str = "B") -> SdpProblem:
    """Minimum diamond-distance error ``omega`` to the ideal m-letter channel (FreePar)."""
    m = _check_m(m)
    c = _Ctx(JC)
    jd = classical_noiseless(m, a, b).op
    p = SdpProblem("min", "min_error_freepar", c.complex_)
    p.meta.update(cls="FreePar", m=m)
    _freepar_supermap(p, c, m, a, b)
    p.scalar("t")
    p.matrix("W", jd.layout)
    eye_a = identity(jd.layout.sub([a]))
    p.objective(lambda v: v["t"])
    p.psd("W>=0", lambda v: v["W"])
    p.psd("W-(S*J-JD)>=0", lambda v: v["W"] - (link_product(v["S"], c.jc) - jd))
    p.psd("t*1-W_A>=0", lambda v: eye_a * v["t"] - partial_trace(v["W"], [b]))
    return p
