"""Exact positive-semidefiniteness test by pivoted LDL^T."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .quad import QuadScalar, quad_sign

__all__ = ["PsdResult", "exact_psd"]


@dataclass(frozen=True)
class PsdResult:
    psd: bool
    witness: tuple | None = None  # vector v with v^T M v < 0 when not PSD
    pivots: tuple = ()
    rank: int = 0

    def __bool__(self):
        return self.psd


def _sign(x) -> int:
    return quad_sign(x)


def exact_psd(m) -> PsdResult:
    """Decide whether a symmetric matrix over Q or Q(sqrt(r)) is PSD.

    Each step eliminates a strictly positive diagonal pivot. A negative
    diagonal entry of the current Schur complement, or a nonzero off-diagonal
    entry between two zero diagonals, certifies indefiniteness; the witness
    is mapped back to the original coordinates so that ``w^T M w < 0``.
    """
    from ..tensor import LabeledOperator

    a = m.entries if isinstance(m, LabeledOperator) else np.asarray(m, dtype=object)
    n = a.shape[0]
    if a.shape != (n, n):
        raise ValueError("matrix must be square")
    s = [[_exact(a[i, j]) for j in range(n)] for i in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            if s[i][j] != s[j][i]:
                raise ValueError(f"matrix is not symmetric at ({i}, {j})")

    remaining = list(range(n))
    steps: list[tuple[int, dict]] = []  # (pivot, {j: S_pj / S_pp})
    pivots = []
    while remaining:
        witness_core = None
        pivot = None
        for i in remaining:
            sg = _sign(s[i][i])
            if sg < 0:
                witness_core = {i: Fraction(1)}
                break
            if sg > 0 and pivot is None:
                pivot = i
        if witness_core is None and pivot is None:
            # all remaining diagonals zero: block must vanish
            for idx, i in enumerate(remaining):
                for j in remaining[idx + 1:]:
                    sg = _sign(s[i][j])
                    if sg != 0:
                        witness_core = {i: Fraction(1), j: Fraction(-sg)}
                        break
                if witness_core is not None:
                    break
            if witness_core is None:
                return PsdResult(True, None, tuple(pivots), len(pivots))
        if witness_core is not None:
            return PsdResult(False, _back_substitute(n, steps, witness_core), tuple(pivots), len(pivots))

        p = pivot
        d = s[p][p]
        pivots.append(d)
        remaining.remove(p)
        coeffs = {j: s[p][j] / d for j in remaining if s[p][j] != 0}
        steps.append((p, coeffs))
        for i, ci in coeffs.items():
            spi = s[p][i]
            for j, cj in coeffs.items():
                s[i][j] = s[i][j] - spi * cj
    return PsdResult(True, None, tuple(pivots), len(pivots))


def _exact(x):
    if isinstance(x, Fraction):
        return Fraction(int(x.numerator), int(x.denominator))
    if isinstance(x, (int, np.integer)):
        return Fraction(int(x))
    if isinstance(x, QuadScalar):
        return x
    raise TypeError(f"exact_psd needs rational or quadratic entries, got {type(x).__name__}")


def _back_substitute(n, steps, core):
    x = [Fraction(0)] * n
    for i, v in core.items():
        x[i] = v
    for p, coeffs in reversed(steps):
        acc = Fraction(0)
        for j, c in coeffs.items():
            acc = acc + c * x[j]
        x[p] = -acc
    return tuple(x)
