"""Pauli twirl onto the span of Pauli-conjugated maximally entangled projectors."""

from __future__ import annotations

import numpy as np

from ..channels import gamma_basis, slot_pairs
from ..tensor import LabeledOperator, LayoutError

__all__ = ["pauli_twirl"]


def pauli_twirl(E: LabeledOperator, q_total: int) -> LabeledOperator:
    """``sum_i tr[E Gamma^i] / 4**q * Gamma^i`` over all Pauli strings on ``q_total`` qubits.

    ``E`` lives on a channel-list layout whose slots are qubit registers with
    ``q_total`` qubits in total.
    """
    q = 0
    for x, y in slot_pairs(E.layout):
        d = E.layout.dim_of(x)
        if E.layout.dim_of(y) != d or d & (d - 1):
            raise LayoutError(f"slot {x}/{y} is not a qubit register")
        q += d.bit_length() - 1
    if q != q_total:
        raise LayoutError(f"layout carries {q} input qubits, expected {q_total}")
    e = E.to_float().entries if E.exact else E.entries
    acc = np.zeros(e.shape, dtype=np.result_type(e.dtype, float))
    norm = 4.0 ** q
    for _, g in gamma_basis(E.layout):
        acc = acc + (np.sum(e * g.entries) / norm) * g.entries
    if np.iscomplexobj(acc) and not np.any(np.abs(acc.imag) > 0):
        acc = acc.real
    return LabeledOperator(E.layout, acc, E.hermitian)
