"""Exact verification of primal and dual certificates for zero-error capacities.

Everything here runs over Q or Q(sqrt(r)); there is no tolerance and no
solver on this path. A certificate bundle is a directory holding a
``manifest.json``, one JSON file per matrix and a ``checksums.json``.

The matrix files declare their systems in the order ``[X1, X2, Y1, Y2]``,
but the basis convention of the source matrices is not known a priori.
:func:`discover_layout` tries the declared reading first and then every
other assignment of the four tensor factors, and reports the one under
which all constraints hold.
"""

from __future__ import annotations

import hashlib
import itertools
import json
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Sequence

import numpy as np

from .channels import combine
from .exact import QuadScalar, exact_psd, quad_sign
from .io import FormatError, entries_checksum, load_operator, parse_channel_spec, _rational
from .tensor import (
    LabeledOperator,
    expand,
    identity,
    link_product,
    ns_project,
    partial_trace,
    partial_transpose,
    permute_systems,
    relabel,
    replace,
)

__all__ = [
    "CertificateError",
    "CertificateBundle",
    "Check",
    "Verdict",
    "LayoutSearch",
    "DATA_DIR",
    "case_dir",
    "load_certificates",
    "verify_checksums",
    "verify_primal_free",
    "verify_dual_free",
    "verify_dual_freedef",
    "discover_layout",
    "certify",
    "VERIFICATIONS",
]

DATA_DIR = Path(__file__).parent / "data"

MATRIX_KEYS = ("E", "F", "free_M", "free_N", "def_M", "def_N", "def_K")


class CertificateError(FileNotFoundError):
    """Certificate data missing or unreadable."""


def _exact_str(x) -> str:
    if isinstance(x, QuadScalar):
        if x.b == 0:
            return str(x.a)
        return f"{x.a} + ({x.b})*sqrt({x.r})"
    return str(Fraction(x))


@dataclass(frozen=True)
class Check:
    constraint: str
    ok: bool
    residual: str = "0"  # exact, printed

    def to_dict(self):
        return {"constraint": self.constraint, "ok": self.ok, "residual": self.residual}


@dataclass(frozen=True)
class Verdict:
    name: str
    ok: bool
    checks: tuple[Check, ...]
    bound: str
    order: tuple[str, ...]

    @property
    def failed(self) -> list[Check]:
        return [c for c in self.checks if not c.ok]

    def to_dict(self):
        return {
            "name": self.name,
            "ok": self.ok,
            "bound": self.bound,
            "order": list(self.order),
            "checks": [c.to_dict() for c in self.checks],
        }


class _Exact:
    """Accumulates exact constraint checks."""

    def __init__(self):
        self.checks: list[Check] = []

    def zero(self, name: str, op: LabeledOperator):
        bad = [x for x in op.entries.ravel() if x != 0]
        if not bad:
            self.checks.append(Check(name, True))
            return
        worst = max(bad, key=lambda x: abs(x))
        self.checks.append(Check(name, False, _exact_str(abs(worst))))

    def psd(self, name: str, op: LabeledOperator):
        res = exact_psd(op)
        if res.psd:
            self.checks.append(Check(name, True))
            return
        w = np.empty(len(res.witness), dtype=object)
        w[:] = list(res.witness)
        quad = w @ op.entries @ w
        norm = w @ w
        self.checks.append(Check(name, False, _exact_str(-quad / norm)))

    def geq(self, name: str, lhs, rhs):
        diff = lhs - rhs
        ok = quad_sign(diff) >= 0
        self.checks.append(Check(name, ok, "0" if ok else _exact_str(-diff)))

    @property
    def ok(self) -> bool:
        return all(c.ok for c in self.checks)


@dataclass(frozen=True)
class CertificateBundle:
    case: str
    channel: LabeledOperator  # exact Choi operator of the channel pair, canonical layout
    m: int
    lam: Fraction
    matrices: dict
    declared_order: tuple[str, ...]
    checksum_checks: tuple[Check, ...] = field(default_factory=tuple)

    @property
    def canonical(self) -> tuple[str, ...]:
        return self.channel.labels

    @property
    def pairs(self) -> list[tuple[str, str]]:
        n = len(self.canonical) // 2
        return [(self.canonical[i], self.canonical[n + i]) for i in range(n)]

    @property
    def checksums_ok(self) -> bool:
        return all(c.ok for c in self.checksum_checks)

    def read(self, key: str, order: Sequence[str] | None = None) -> LabeledOperator:
        """Matrix ``key`` with its tensor factors read in ``order``, returned in canonical layout.

        ``order[k]`` names the system carried by the ``k``-th declared factor.
        Operators on a subset of the systems take the induced relative order.
        """
        op = self.matrices[key]
        order = tuple(order or self.declared_order)
        declared = [lab for lab in self.declared_order if lab in op.layout]
        induced = [lab for lab in order if lab in op.layout]
        if declared != list(op.labels):
            op = permute_systems(op, declared)
        op = relabel(op, dict(zip(declared, induced)))
        return permute_systems(op, [lab for lab in self.canonical if lab in op.layout])


def case_dir(case: str | Path) -> Path:
    p = Path(case)
    if p.is_dir():
        return p
    return DATA_DIR / str(case)


def _manifest_digest(manifest: dict) -> str:
    blob = json.dumps(manifest, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def load_certificates(case: str | Path) -> CertificateBundle:
    """Load a bundle by case id (shipped data) or directory path.

    Checksum mismatches do not abort loading; they are recorded as failed
    checks so that the verifications still run and report.
    """
    root = case_dir(case)
    mpath = root / "manifest.json"
    if not mpath.is_file():
        raise CertificateError(f"no certificate manifest at {mpath}")
    try:
        manifest = json.loads(mpath.read_text())
    except json.JSONDecodeError as exc:
        raise FormatError(f"{mpath}: {exc}") from None
    files = manifest.get("files", {})
    missing = [k for k in MATRIX_KEYS if k not in files]
    if missing:
        raise FormatError(f"manifest lacks entries for {missing}")
    matrices = {}
    for key in MATRIX_KEYS:
        path = root / files[key]
        if not path.is_file():
            raise CertificateError(f"missing certificate file {path}")
        matrices[key] = load_operator(path)
    channels = parse_channel_spec(manifest["channels"], exact=True)
    jc = combine(channels)
    declared = tuple(manifest.get("declared_order", jc.labels))
    if sorted(declared) != sorted(jc.labels):
        raise FormatError(f"declared order {declared} does not match systems {jc.labels}")
    bundle = CertificateBundle(
        case=str(manifest.get("case", root.name)),
        channel=jc,
        m=int(manifest["m"]),
        lam=_rational(manifest["lambda"]),
        matrices=matrices,
        declared_order=declared,
    )
    return _with_checksums(bundle, root, manifest)


def _with_checksums(bundle: CertificateBundle, root: Path, manifest: dict) -> CertificateBundle:
    cpath = root / "checksums.json"
    if not cpath.is_file():
        checks = (Check("checksums.json present", False, "missing"),)
    else:
        expected = json.loads(cpath.read_text()).get("sha256", {})
        actual = {name: entries_checksum(bundle.matrices[key]) for key, name in manifest["files"].items()}
        actual["manifest.json"] = _manifest_digest(manifest)
        checks = tuple(
            Check(f"checksum {name}", expected.get(name) == digest, "0" if expected.get(name) == digest else "mismatch")
            for name, digest in sorted(actual.items())
        )
    return CertificateBundle(
        bundle.case, bundle.channel, bundle.m, bundle.lam, bundle.matrices, bundle.declared_order, checks
    )


def verify_checksums(bundle: CertificateBundle) -> Verdict:
    return Verdict("checksums", bundle.checksums_ok, bundle.checksum_checks, "", bundle.declared_order)


def write_checksums(root: Path) -> dict:
    """Recompute and store the transcription checksums of a bundle directory."""
    root = Path(root)
    manifest = json.loads((root / "manifest.json").read_text())
    digests = {name: entries_checksum(load_operator(root / name)) for name in manifest["files"].values()}
    digests["manifest.json"] = _manifest_digest(manifest)
    doc = {"algorithm": "sha256 of canonical JSON", "sha256": dict(sorted(digests.items()))}
    (root / "checksums.json").write_text(json.dumps(doc, indent=2) + "\n")
    return doc


# ---------------------------------------------------------------- verifications
def _split(bundle):
    n = len(bundle.pairs)
    xs = list(bundle.canonical[:n])
    ys = list(bundle.canonical[n:])
    return xs, ys


def verify_primal_free(bundle: CertificateBundle, order: Sequence[str] | None = None) -> Verdict:
    """Feasibility of ``(E, F)`` for the zero-error Free program with ``m`` messages."""
    order = tuple(order or bundle.declared_order)
    e, f = bundle.read("E", order), bundle.read("F", order)
    jc = bundle.channel
    xs, ys = _split(bundle)
    d_x = jc.layout.sub(xs).dim
    m = bundle.m
    c = _Exact()
    c.geq(f"E*J>={m}", link_product(e, jc).scalar, Fraction(m))
    c.zero("E_Y=1_Y", partial_trace(e, xs) - identity(jc.layout.sub(ys), exact=True))
    c.psd("E>=0", e)
    c.psd("F-E>=0", f - e)
    c.zero(f"ns(F)=({m}/dX)1", ns_project(f, bundle.pairs) - identity(jc.layout, exact=True) * Fraction(m, d_x))
    return Verdict("primal_free", c.ok, tuple(c.checks), str(m), order)


def verify_dual_free(bundle: CertificateBundle, order: Sequence[str] | None = None) -> Verdict:
    """Dual feasibility of ``(M, N)``; ``tr N`` then bounds the message count."""
    order = tuple(order or bundle.declared_order)
    mm, nn = bundle.read("free_M", order), bundle.read("free_N", order)
    jc = bundle.channel
    xs, _ = _split(bundle)
    d_x = jc.layout.sub(xs).dim
    jt = partial_transpose(jc, jc.labels)
    lm = ns_project(mm, bundle.pairs)
    c = _Exact()
    c.psd("ns(M)>=0", lm)
    c.psd("ns(M)+1(x)N>=(1+trM/dX)J^T", lm + expand(nn, jc.layout) - jt * (1 + mm.trace() / d_x))
    return Verdict("dual_free", c.ok, tuple(c.checks), _exact_str(nn.trace()), order)


def verify_dual_freedef(bundle: CertificateBundle, order: Sequence[str] | None = None) -> Verdict:
    """Dual feasibility of ``(lambda, M, N, K)`` for the two-slot FreeDef program."""
    order = tuple(order or bundle.declared_order)
    jc = bundle.channel
    if len(bundle.pairs) != 2:
        raise ValueError("the FreeDef dual is defined for two slots")
    (x1, y1), (x2, y2) = bundle.pairs
    lam = bundle.lam
    kk = bundle.read("def_K", order)
    c = _Exact()
    for key, (xa, _ya), (xb, yb) in (("def_M", (x1, y1), (x2, y2)), ("def_N", (x2, y2), (x1, y1))):
        var = key[-1]
        op = bundle.read(key, order)
        c.psd(f"{var}>=0", op)
        marg = partial_trace(op, [yb])
        c.zero(f"[1-{xb}]tr_{yb}{var}=0", marg - replace(marg, [xb]))
        rest = [lab for lab in jc.labels if lab != xa]
        d_xb = jc.layout.dim_of(xb)
        c.zero(f"{var}_{xa}=d{xb}*lambda*1", partial_trace(op, rest) - identity(jc.layout.sub([xa]), exact=True) * (d_xb * lam))
        c.psd(f"{var}+1(x)K>=(lambda+1)J", op + expand(kk, jc.layout) - jc * (lam + 1))
    return Verdict("dual_freedef", c.ok, tuple(c.checks), _exact_str(kk.trace()), order)


VERIFICATIONS = (verify_primal_free, verify_dual_free, verify_dual_freedef)


@dataclass(frozen=True)
class LayoutSearch:
    order: tuple[str, ...] | None
    verdicts: tuple[Verdict, ...]
    tried: int

    @property
    def ok(self) -> bool:
        return self.order is not None


def _candidate_orders(bundle: CertificateBundle):
    yield tuple(bundle.declared_order)
    for perm in itertools.permutations(bundle.canonical):
        if perm != tuple(bundle.declared_order):
            yield perm


def discover_layout(bundle: CertificateBundle) -> LayoutSearch:
    """First factor reading under which every verification passes.

    When none does, the verdicts for the declared reading are returned so the
    report names the failing constraints.
    """
    tried = 0
    declared_verdicts = None
    for order in _candidate_orders(bundle):
        tried += 1
        verdicts = []
        for verify in VERIFICATIONS:
            v = verify(bundle, order)
            verdicts.append(v)
            if not v.ok and declared_verdicts is not None:
                break
        if declared_verdicts is None:
            declared_verdicts = tuple(verdicts)
        if len(verdicts) == len(VERIFICATIONS) and all(v.ok for v in verdicts):
            return LayoutSearch(order, tuple(verdicts), tried)
    return LayoutSearch(None, declared_verdicts, tried)


def certify(case: str | Path) -> dict:
    """Full certificate run: checksums, layout discovery, the three verdicts."""
    bundle = load_certificates(case)
    search = discover_layout(bundle)
    verdicts = [verify_checksums(bundle), *search.verdicts]
    ok = bundle.checksums_ok and search.ok
    out = {
        "case": bundle.case,
        "ok": ok,
        "declared_order": list(bundle.declared_order),
        "discovered_order": list(search.order) if search.order else None,
        "orders_tried": search.tried,
        "verdicts": [v.to_dict() for v in verdicts],
    }
    if search.ok:
        primal, dual, dual_def = search.verdicts
        out["conclusion"] = {
            "m_free_lower": primal.bound,
            "m_free_upper": dual.bound,
            "m_freedef_upper": dual_def.bound,
        }
    return out
