"""Exact arithmetic in the real quadratic field Q(sqrt(r))."""

from __future__ import annotations

import math
from fractions import Fraction
from numbers import Rational

__all__ = ["QuadScalar", "quad_sign", "sqrt_rational", "squarefree_part"]


def squarefree_part(n: int) -> tuple[int, int]:
    """Return ``(k, r)`` with ``n = k*k*r`` and ``r`` square-free."""
    if n <= 0:
        raise ValueError("n must be positive")
    k, r, p = 1, 1, 2
    while p * p <= n:
        while n % (p * p) == 0:
            n //= p * p
            k *= p
        if n % p == 0:
            n //= p
            r *= p
        p += 1
    return k, r * n


def _frac(x) -> Fraction:
    if isinstance(x, Fraction):
        return Fraction(int(x.numerator), int(x.denominator))
    if isinstance(x, (int, Rational)):
        return Fraction(int(x.numerator), int(x.denominator))
    if isinstance(x, str):
        return Fraction(x)
    raise TypeError(f"not an exact rational: {x!r}")


class QuadScalar:
    """``a + b*sqrt(r)`` with rational ``a``, ``b`` and square-free ``r > 1``.

    Mixing with ``int`` and ``Fraction`` is supported; mixing two different
    radicands is only allowed when one side is rational.
    """

    __slots__ = ("a", "b", "r")

    def __init__(self, a=0, b=0, r: int = 10):
        self.a = _frac(a)
        self.b = _frac(b)
        r = int(r)
        if r < 2 or squarefree_part(r)[0] != 1:
            raise ValueError(f"radicand must be square-free and > 1, got {r}")
        self.r = r

    # ---------------------------------------------------------------- helpers
    def _lift(self, other) -> "QuadScalar | None":
        if isinstance(other, QuadScalar):
            if other.r != self.r:
                if other.b == 0:
                    return QuadScalar(other.a, 0, self.r)
                if self.b == 0:
                    return None
                raise ValueError(f"incompatible radicands {self.r} and {other.r}")
            return other
        if isinstance(other, (int, Fraction)):
            return QuadScalar(other, 0, self.r)
        return None

    def _rebase(self, other):
        # self is rational but other carries a different radicand
        return QuadScalar(self.a, 0, other.r)

    @property
    def is_rational(self) -> bool:
        return self.b == 0

    # ---------------------------------------------------------------- arithmetic
    def __add__(self, other):
        o = self._lift(other)
        if o is None:
            if isinstance(other, QuadScalar):
                return self._rebase(other) + other
            return NotImplemented
        return QuadScalar(self.a + o.a, self.b + o.b, self.r)

    __radd__ = __add__

    def __neg__(self):
        return QuadScalar(-self.a, -self.b, self.r)

    def __pos__(self):
        return self

    def __sub__(self, other):
        o = self._lift(other)
        if o is None:
            if isinstance(other, QuadScalar):
                return self._rebase(other) - other
            return NotImplemented
        return QuadScalar(self.a - o.a, self.b - o.b, self.r)

    def __rsub__(self, other):
        o = self._lift(other)
        if o is None:
            return NotImplemented
        return o - self

    def __mul__(self, other):
        o = self._lift(other)
        if o is None:
            if isinstance(other, QuadScalar):
                return self._rebase(other) * other
            return NotImplemented
        return QuadScalar(self.a * o.a + self.r * self.b * o.b, self.a * o.b + self.b * o.a, self.r)

    __rmul__ = __mul__

    def inverse(self) -> "QuadScalar":
        norm = self.a * self.a - self.r * self.b * self.b
        if norm == 0:
            raise ZeroDivisionError("division by zero in Q(sqrt(r))")
        return QuadScalar(self.a / norm, -self.b / norm, self.r)

    def __truediv__(self, other):
        o = self._lift(other)
        if o is None:
            if isinstance(other, QuadScalar):
                return self._rebase(other) / other
            return NotImplemented
        return self * o.inverse()

    def __rtruediv__(self, other):
        o = self._lift(other)
        if o is None:
            return NotImplemented
        return o * self.inverse()

    def conjugate(self):
        # real field: complex conjugation is the identity
        return self

    def galois_conjugate(self) -> "QuadScalar":
        return QuadScalar(self.a, -self.b, self.r)

    # ---------------------------------------------------------------- order
    def sign(self) -> int:
        return quad_sign(self)

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            return self.b == 0 and self.a == other
        if isinstance(other, QuadScalar):
            if self.b == 0 and other.b == 0:
                return self.a == other.a
            return self.r == other.r and self.a == other.a and self.b == other.b
        return NotImplemented

    def __hash__(self):
        return hash(self.a) if self.b == 0 else hash((self.a, self.b, self.r))

    def __lt__(self, other):
        return (self - other).sign() < 0

    def __le__(self, other):
        return (self - other).sign() <= 0

    def __gt__(self, other):
        return (self - other).sign() > 0

    def __ge__(self, other):
        return (self - other).sign() >= 0

    def __abs__(self):
        return -self if self.sign() < 0 else self

    def __bool__(self):
        return self.a != 0 or self.b != 0

    def __float__(self):
        return float(self.a) + float(self.b) * math.sqrt(self.r)

    def __complex__(self):
        return complex(float(self))

    def __repr__(self):
        if self.b == 0:
            return f"QuadScalar({self.a})"
        return f"QuadScalar({self.a} + {self.b}*sqrt({self.r}))"

    def to_json(self):
        return [str(self.a), str(self.b)]


def quad_sign(x) -> int:
    """Exact sign of ``a + b*sqrt(r)``.

    When ``a`` and ``b`` disagree in sign the answer comes from comparing
    ``a**2`` against ``r*b**2``.
    """
    if isinstance(x, (int, Fraction)):
        return int(x > 0) - int(x < 0)
    a, b = x.a, x.b
    sa = int(a > 0) - int(a < 0)
    sb = int(b > 0) - int(b < 0)
    if sb == 0:
        return sa
    if sa == 0 or sa == sb:
        return sb
    # opposite signs
    lhs, rhs = a * a, x.r * b * b
    if lhs == rhs:
        return 0
    return sa if lhs > rhs else sb


def sqrt_rational(q, r: int | None = None):
    """Exact square root of a non-negative rational.

    Returns a ``Fraction`` when the root is rational, otherwise a
    :class:`QuadScalar` ``(k/d)*sqrt(r)``. If ``r`` is given the root must
    live in Q(sqrt(r)).
    """
    q = _frac(q)
    if q < 0:
        raise ValueError("square root of a negative number")
    if q == 0:
        return Fraction(0)
    num = q.numerator * q.denominator
    k, rad = squarefree_part(num)
    coeff = Fraction(k, q.denominator)
    if rad == 1:
        return coeff
    if r is not None and rad != r:
        raise ValueError(f"sqrt({q}) is not in Q(sqrt({r}))")
    return QuadScalar(0, coeff, rad)
