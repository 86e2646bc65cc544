import numpy as np
from pytest import fixture

# acceptance lines collected by tests/test_acceptance.py
ACCEPTANCE: list[tuple[str, bool, str]] = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in sorted(ACCEPTANCE):
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")


@fixture
def rng():
    return np.random.default_rng(20240611)


def random_hermitian(d, rng, real=False):
    a = rng.standard_normal((d, d))
    if not real:
        a = a + 1j * rng.standard_normal((d, d))
    return a + a.conj().T


def random_kraus(d_in, d_out, rng, n=None):
    """Kraus operators of a random CPTP map, from a random isometry."""
    n = n or d_in * d_out
    g = rng.standard_normal((n * d_out, d_in)) + 1j * rng.standard_normal((n * d_out, d_in))
    q, _ = np.linalg.qr(g)  # isometry C^{d_in} -> C^{n d_out}
    return [q[k * d_out:(k + 1) * d_out, :] for k in range(n)]


def apply_kraus(kraus, rho):
    return sum(k @ rho @ k.conj().T for k in kraus)


def choi_from_map(fn, d_in):
    """sum_ij |i><j| (x) fn(|i><j|), built from matrix units."""
    blocks = []
    for i in range(d_in):
        row = []
        for j in range(d_in):
            e = np.zeros((d_in, d_in), dtype=complex)
            e[i, j] = 1
            row.append(fn(e))
        blocks.append(row)
    return np.block(blocks)


def ptrace_oracle(a, dims, keep):
    """Partial trace by einsum, keeping the subsystems in ``keep`` (in order)."""
    n = len(dims)
    t = a.reshape(list(dims) * 2)
    letters = "abcdefghijklmnop"
    rows = list(letters[:n])
    cols = list(letters[n:2 * n])
    for k in range(n):
        if k not in keep:
            cols[k] = rows[k]
    out = "".join(rows[k] for k in keep) + "".join(cols[k] for k in keep)
    r = np.einsum("".join(rows) + "".join(cols) + "->" + out, t)
    d = int(np.prod([dims[k] for k in keep]))
    return r.reshape(d, d)
