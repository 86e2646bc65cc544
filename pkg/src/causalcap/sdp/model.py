"""Solver-agnostic SDP model.

Constraints and objectives are plain Python callables that take a mapping
``name -> value`` (a :class:`LabeledOperator` for matrix variables, a float
for scalars) and return an operator or a scalar. They must be affine in the
variables; :meth:`SdpProblem.compile` linearizes them by evaluating at zero
and on each coordinate basis element, which keeps the program definitions
readable and lets the same callables check feasibility of any point.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np
import scipy.sparse as sp

from ..tensor import LabeledOperator, SystemLayout

__all__ = ["Variable", "SdpProblem", "PsdBlock", "StandardForm", "SdpError"]

Expr = Callable[[Mapping[str, object]], object]


class SdpError(ValueError):
    pass


@dataclass(frozen=True)
class Variable:
    """A real scalar, or a Hermitian (real symmetric if ``complex_`` is false) matrix."""

    name: str
    layout: SystemLayout | None = None
    complex_: bool = False

    @property
    def is_scalar(self) -> bool:
        return self.layout is None

    @property
    def n(self) -> int:
        return 1 if self.layout is None else self.layout.dim

    @property
    def size(self) -> int:
        if self.is_scalar:
            return 1
        n = self.n
        return n * n if self.complex_ else n * (n + 1) // 2

    def basis(self):
        """Yield matrices of the coordinate basis, in coordinate order."""
        if self.is_scalar:
            yield 1.0
            return
        n = self.n
        dtype = complex if self.complex_ else float
        for i in range(n):
            for j in range(i, n):
                b = np.zeros((n, n), dtype=dtype)
                b[i, j] = b[j, i] = 1.0
                yield b
        if self.complex_:
            for i in range(n):
                for j in range(i + 1, n):
                    b = np.zeros((n, n), dtype=complex)
                    b[i, j] = 1j
                    b[j, i] = -1j
                    yield b

    def unpack(self, x: np.ndarray):
        if self.is_scalar:
            return float(x[0])
        n = self.n
        iu = np.triu_indices(n)
        k = len(iu[0])
        a = np.zeros((n, n), dtype=complex if self.complex_ else float)
        a[iu] = x[:k]
        a = a + np.triu(a, 1).T
        if self.complex_:
            iu1 = np.triu_indices(n, 1)
            im = np.zeros((n, n))
            im[iu1] = x[k:]
            a = a + 1j * (im - im.T)
        return LabeledOperator(self.layout, a, True)

    def zero(self):
        if self.is_scalar:
            return 0.0
        return LabeledOperator(self.layout, np.zeros((self.n, self.n), dtype=complex if self.complex_ else float), True)


@dataclass
class _Constraint:
    kind: str  # "eq" | "psd"
    name: str
    fn: Expr


@dataclass
class PsdBlock:
    """PSD requirement ``const + sum_k x_k coef_k >= 0`` on a real symmetric block."""

    name: str
    dim: int
    const: np.ndarray  # (dim, dim)
    coef: sp.csr_matrix  # (dim*dim, n), row-major vec of each coefficient matrix


@dataclass
class StandardForm:
    """``opt c.x + c0`` s.t. ``A x = b``, ``g.x + h0 >= 0`` rows, PSD blocks."""

    sense: str
    c: np.ndarray
    c0: float
    a_eq: np.ndarray
    b_eq: np.ndarray
    nonneg_names: list[str]
    nonneg_g: np.ndarray  # (k, n)
    nonneg_h: np.ndarray  # (k,)
    blocks: list[PsdBlock]
    offsets: dict[str, tuple[int, int]]
    consistent: bool = True
    eq_names: list[str] = field(default_factory=list)

    @property
    def n(self) -> int:
        return self.c.size


class _Recorder(dict):
    def __init__(self, base):
        super().__init__(base)
        self.used: set[str] = set()

    def __getitem__(self, key):
        self.used.add(key)
        return super().__getitem__(key)


def _as_array(val) -> np.ndarray:
    if isinstance(val, LabeledOperator):
        a = val.entries
        if a.dtype == object:
            a = val.to_float().entries
        return np.asarray(a)
    a = np.asarray(val)
    if a.ndim == 0:
        a = a.reshape(1, 1)
    return a


class SdpProblem:
    """Container for variables, affine constraints and a linear objective."""

    def __init__(self, sense: str = "max", name: str = "sdp", complex_: bool = False):
        if sense not in ("max", "min"):
            raise SdpError("sense must be 'max' or 'min'")
        self.sense = sense
        self.name = name
        self.complex_ = complex_
        self.variables: dict[str, Variable] = {}
        self.constraints: list[_Constraint] = []
        self._objective: Expr | None = None
        self.meta: dict = {}
        self._compiled: StandardForm | None = None

    # ------------------------------------------------------------ building
    def scalar(self, name: str) -> str:
        return self._add(Variable(name))

    def matrix(self, name: str, layout: SystemLayout, complex_: bool | None = None) -> str:
        return self._add(Variable(name, layout, self.complex_ if complex_ is None else complex_))

    def _add(self, var: Variable) -> str:
        if var.name in self.variables:
            raise SdpError(f"variable {var.name!r} declared twice")
        self.variables[var.name] = var
        self._compiled = None
        return var.name

    def objective(self, fn: Expr) -> None:
        self._objective = fn
        self._compiled = None

    def equal(self, name: str, fn: Expr) -> None:
        """Require ``fn(v) == 0`` (operator- or scalar-valued)."""
        self.constraints.append(_Constraint("eq", name, fn))
        self._compiled = None

    def psd(self, name: str, fn: Expr) -> None:
        """Require ``fn(v) >= 0``; a scalar-valued ``fn`` is an ordinary inequality."""
        self.constraints.append(_Constraint("psd", name, fn))
        self._compiled = None

    # ------------------------------------------------------------ evaluation
    def zero_point(self) -> dict:
        return {name: var.zero() for name, var in self.variables.items()}

    def evaluate_objective(self, values: Mapping[str, object]) -> float:
        return float(np.real(_as_array(self._objective(values))[0, 0]))

    def residuals(self, values: Mapping[str, object]) -> dict[str, float]:
        """Constraint violations at ``values``: max |entry| for equalities,
        ``max(0, -lambda_min)`` for PSD constraints."""
        out = {}
        for con in self.constraints:
            a = _as_array(con.fn(values))
            if con.kind == "eq":
                out[con.name] = float(np.max(np.abs(a), initial=0.0))
            else:
                h = 0.5 * (a + a.conj().T)
                out[con.name] = max(0.0, -float(np.linalg.eigvalsh(h).min()))
        return out

    def unpack(self, x: np.ndarray) -> dict:
        form = self.compile()
        return {name: var.unpack(x[slice(*form.offsets[name])]) for name, var in self.variables.items()}

    # ------------------------------------------------------------ compilation
    def _linearize(self, fn: Expr):
        """Return ``(const, cols)`` with ``fn(x) = const + sum_k x_k cols[k]``."""
        base = self.zero_point()
        rec = _Recorder(base)
        const = _as_array(fn(rec))
        used = sorted(rec.used)
        cols: dict[int, np.ndarray] = {}
        offsets = self._offsets()
        for name in used:
            var = self.variables[name]
            start, _ = offsets[name]
            for k, b in enumerate(var.basis()):
                point = dict(base)
                point[name] = b if var.is_scalar else LabeledOperator(var.layout, b, True)
                col = _as_array(fn(point)) - const
                if np.any(col):
                    cols[start + k] = col
        return const, cols

    def _offsets(self) -> dict[str, tuple[int, int]]:
        out, pos = {}, 0
        for name, var in self.variables.items():
            out[name] = (pos, pos + var.size)
            pos += var.size
        return out

    def compile(self) -> StandardForm:
        if self._compiled is not None:
            return self._compiled
        if self._objective is None:
            raise SdpError("objective not set")
        offsets = self._offsets()
        n = sum(v.size for v in self.variables.values())

        const, cols = self._linearize(self._objective)
        c = np.zeros(n)
        for k, col in cols.items():
            c[k] = float(np.real(col[0, 0]))
        c0 = float(np.real(const[0, 0]))

        eq_rows, eq_b, eq_names = [], [], []
        nn_g, nn_h, nn_names = [], [], []
        blocks: list[PsdBlock] = []
        for con in self.constraints:
            const, cols = self._linearize(con.fn)
            if con.kind == "eq":
                parts = [np.real]
                if np.iscomplexobj(const) or any(np.iscomplexobj(v) for v in cols.values()):
                    parts.append(np.imag)
                for part in parts:
                    flat0 = part(const).ravel()
                    mat = np.zeros((flat0.size, n))
                    for k, col in cols.items():
                        mat[:, k] = part(col).ravel()
                    eq_rows.append(mat)
                    eq_b.append(-flat0)
                    eq_names.extend([con.name] * flat0.size)
                continue
            if const.shape[0] != const.shape[1]:
                raise SdpError(f"PSD constraint {con.name!r} is not square")
            if const.shape == (1, 1):
                g = np.zeros(n)
                for k, col in cols.items():
                    g[k] = float(np.real(col[0, 0]))
                nn_g.append(g)
                nn_h.append(float(np.real(const[0, 0])))
                nn_names.append(con.name)
                continue
            blocks.append(_psd_block(con.name, const, cols, n))

        if eq_rows:
            a_eq = np.vstack(eq_rows)
            b_eq = np.concatenate(eq_b)
        else:
            a_eq = np.zeros((0, n))
            b_eq = np.zeros(0)
        a_eq, b_eq, consistent = _row_reduce(a_eq, b_eq)
        form = StandardForm(
            sense=self.sense,
            c=c,
            c0=c0,
            a_eq=a_eq,
            b_eq=b_eq,
            nonneg_names=nn_names,
            nonneg_g=np.array(nn_g).reshape(len(nn_g), n),
            nonneg_h=np.array(nn_h),
            blocks=blocks,
            offsets=offsets,
            consistent=consistent,
            eq_names=eq_names,
        )
        self._compiled = form
        return form


def _embed(a: np.ndarray) -> np.ndarray:
    """Real symmetric ``[[Re, -Im], [Im, Re]]`` embedding of a Hermitian matrix."""
    if not np.iscomplexobj(a):
        return a
    re, im = a.real, a.imag
    return np.block([[re, -im], [im, re]])


def _psd_block(name: str, const: np.ndarray, cols: dict, n: int) -> PsdBlock:
    is_complex = np.iscomplexobj(const) or any(np.iscomplexobj(v) for v in cols.values())
    if is_complex:
        const = const.astype(complex)
    c0 = _embed(0.5 * (const + const.conj().T))
    d = c0.shape[0]
    rows, cidx, vals = [], [], []
    for k, col in cols.items():
        if is_complex:
            col = col.astype(complex)
        m = _embed(0.5 * (col + col.conj().T)).ravel()
        nz = np.nonzero(m)[0]
        rows.extend(nz.tolist())
        cidx.extend([k] * nz.size)
        vals.extend(m[nz].tolist())
    coef = sp.csr_matrix((vals, (rows, cidx)), shape=(d * d, n))
    return PsdBlock(name, d, np.asarray(c0, dtype=float), coef)


def _row_reduce(a: np.ndarray, b: np.ndarray, rtol: float = 1e-10):
    """Orthonormal, full-row-rank equivalent of ``a x = b``; flags inconsistency."""
    if a.shape[0] == 0:
        return a, b, True
    u, s, vt = np.linalg.svd(a, full_matrices=False)
    tol = rtol * max(1.0, s[0] if s.size else 0.0)
    r = int(np.sum(s > tol))
    ur = u[:, :r]
    proj = ur @ (ur.T @ b)
    consistent = bool(np.linalg.norm(b - proj) <= 1e-8 * max(1.0, np.linalg.norm(b)))
    return vt[:r], (ur.T @ b) / s[:r], consistent
