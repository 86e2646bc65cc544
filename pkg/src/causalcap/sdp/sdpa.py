"""SDPA sparse-format export and a small reader for round-trip checks.

The exported problem is the SDPA primal

    minimize   c^T z
    subject to sum_i F_i z_i - F_0  >= 0   (block diagonal)

Equalities of the model are eliminated first through ``x = x0 + N z`` with
``N`` an orthonormal null-space basis. Maximization problems are exported
with a negated objective; the header comment records the sign and the
constant needed to recover the model objective.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import SdpError, SdpProblem, StandardForm

__all__ = ["export_sdpa", "read_sdpa", "SdpaData", "solve_sdpa_cvxopt"]


@dataclass
class SdpaData:
    c: np.ndarray
    block_struct: list[int]
    # mats[i][b] is the dense symmetric matrix of block b in F_i
    mats: list[list[np.ndarray]]
    sense_sign: float = 1.0
    offset: float = 0.0

    @property
    def m(self) -> int:
        return self.c.size

    def model_objective(self, sdpa_objective: float) -> float:
        return self.sense_sign * sdpa_objective + self.offset


def _fmt(x: float) -> str:
    if x == int(x) and abs(x) < 1e15:
        return str(int(x))
    return repr(float(x))


def _reduce(form: StandardForm):
    n = form.n
    if form.a_eq.shape[0]:
        if not form.consistent:
            raise SdpError("equality constraints are inconsistent; nothing to export")
        # rows of a_eq are orthonormal after compilation
        x0 = form.a_eq.T @ form.b_eq
        _, s, vt = np.linalg.svd(form.a_eq, full_matrices=True)
        basis = vt[form.a_eq.shape[0]:].T
    else:
        x0 = np.zeros(n)
        basis = np.eye(n)
    return x0, basis


def export_sdpa(problem: SdpProblem, tol: float = 1e-14) -> str:
    """Serialize ``problem`` to SDPA sparse format text."""
    form = problem.compile()
    x0, basis = _reduce(form)
    sign = 1.0 if form.sense == "min" else -1.0
    c = sign * (basis.T @ form.c)
    offset = float(form.c @ x0 + form.c0)

    # affine map for each block: M(z) = const + sum_i z_i coef_i
    blocks = []  # (size, const, coefs list over i) ; size < 0 for diagonal
    if form.nonneg_h.size:
        g = form.nonneg_g @ basis
        h = form.nonneg_h + form.nonneg_g @ x0
        blocks.append(("diag", h, g))
    for blk in form.blocks:
        coef = blk.coef.toarray()  # (d*d, n)
        const = blk.const.ravel() + coef @ x0
        blocks.append(("full", const.reshape(blk.dim, blk.dim), (coef @ basis)))

    struct = []
    for kind, const, coef in blocks:
        struct.append(-const.size if kind == "diag" else const.shape[0])

    lines = [
        f'"{problem.name}: exported by causalcap',
        f"* objective sign: model objective = {_fmt(sign)} * sdpa objective + offset",
        f"* offset = {_fmt(offset)}",
        f"* sense = {form.sense}",
        str(basis.shape[1]),
        str(len(blocks)),
        " ".join(str(s) for s in struct),
        " ".join(_fmt(v) for v in c) if c.size else "",
    ]
    # F_0 = -const, F_i = coef_i, so that sum F_i z_i - F_0 = M(z)
    for bno, (kind, const, coef) in enumerate(blocks, start=1):
        if kind == "diag":
            for r in range(const.size):
                if abs(const[r]) > tol:
                    lines.append(f"0 {bno} {r + 1} {r + 1} {_fmt(-const[r])}")
        else:
            d = const.shape[0]
            iu = np.triu_indices(d)
            for r, cidx in zip(*iu):
                if abs(const[r, cidx]) > tol:
                    lines.append(f"0 {bno} {r + 1} {cidx + 1} {_fmt(-const[r, cidx])}")
    for i in range(basis.shape[1]):
        for bno, (kind, const, coef) in enumerate(blocks, start=1):
            if kind == "diag":
                col = coef[:, i]
                for r in np.nonzero(np.abs(col) > tol)[0]:
                    lines.append(f"{i + 1} {bno} {r + 1} {r + 1} {_fmt(col[r])}")
            else:
                d = const.shape[0]
                mat = coef[:, i].reshape(d, d)
                iu = np.triu_indices(d)
                for r, cidx in zip(*iu):
                    if abs(mat[r, cidx]) > tol:
                        lines.append(f"{i + 1} {bno} {r + 1} {cidx + 1} {_fmt(mat[r, cidx])}")
    return "\n".join(lines) + "\n"


def read_sdpa(text: str) -> SdpaData:
    """Parse SDPA sparse format (comments start with ``"`` or ``*``)."""
    sign, offset = 1.0, 0.0
    body = []
    for raw in text.splitlines():
        line = raw.strip()
        if line.startswith('"') or line.startswith("*"):
            if "objective sign" in line:
                sign = float(line.split("=")[-1].split("*")[0])
            elif line.startswith("* offset"):
                offset = float(line.split("=")[-1])
            continue
        if line:
            body.append(line.replace(",", " ").replace("{", " ").replace("}", " ").replace("(", " ").replace(")", " "))
    if len(body) < 3:
        raise ValueError("truncated SDPA data")
    m = int(body[0].split()[0])
    nblocks = int(body[1].split()[0])
    struct = [int(t) for t in body[2].split()[:nblocks]]
    pos = 3
    if m:
        c = np.array([float(t) for t in body[pos].split()[:m]])
        pos += 1
    else:
        c = np.zeros(0)
    mats = [[np.zeros((abs(s), abs(s))) for s in struct] for _ in range(m + 1)]
    for line in body[pos:]:
        t = line.split()
        i, b, r, col, v = int(t[0]), int(t[1]), int(t[2]), int(t[3]), float(t[4])
        a = mats[i][b - 1]
        a[r - 1, col - 1] = v
        a[col - 1, r - 1] = v
    return SdpaData(c, struct, mats, sign, offset)


def solve_sdpa_cvxopt(data: SdpaData, tol: float = 1e-9):
    """Solve parsed SDPA data with CVXOPT; returns ``(status, sdpa_objective, z)``."""
    import cvxopt
    from cvxopt import solvers

    gl_rows, hl, gs, hs = [], [], [], []
    for b, s in enumerate(data.block_struct):
        if s < 0:
            for r in range(-s):
                gl_rows.append([-data.mats[i + 1][b][r, r] for i in range(data.m)])
                hl.append(-data.mats[0][b][r, r])
        else:
            gs.append(cvxopt.matrix(np.column_stack([-data.mats[i + 1][b].ravel() for i in range(data.m)])))
            hs.append(cvxopt.matrix(-data.mats[0][b]))
    kwargs = {}
    if gl_rows:
        kwargs["Gl"] = cvxopt.matrix(np.array(gl_rows, dtype=float).reshape(len(gl_rows), data.m))
        kwargs["hl"] = cvxopt.matrix(np.array(hl, dtype=float))
    if gs:
        kwargs["Gs"] = gs
        kwargs["hs"] = hs
    opts = {"show_progress": False, "abstol": tol, "reltol": tol, "feastol": tol}
    sol = solvers.sdp(cvxopt.matrix(data.c), options=opts, **kwargs)
    z = np.array(sol["x"]).ravel() if sol["x"] is not None else None
    return sol["status"], (float(data.c @ z) if z is not None else float("nan")), z
