"""Command-line driver.

Exit codes: 0 pass, 1 check failure, 2 input error, 3 solver failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

EXIT_OK, EXIT_CHECK, EXIT_INPUT, EXIT_SOLVER = 0, 1, 2, 3

ALL_CLASSES = "FreePar,FreeFix,FreeDef,Free"


class InputError(Exception):
    pass


def _floats(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise InputError(f"expected comma-separated numbers, got {text!r}") from None


def _classes(text: str) -> list[str]:
    from .supermaps import SupermapClass

    # FreeFix(1,2) contains a comma; split only at top level
    out, depth, cur = [], 0, ""
    for ch in text:
        if ch == "," and depth == 0:
            out.append(cur.strip())
            cur = ""
            continue
        depth += ch == "("
        depth -= ch == ")"
        cur += ch
    if cur.strip():
        out.append(cur.strip())
    for name in out:
        try:
            SupermapClass.parse(name)
        except ValueError as exc:
            raise InputError(f"bad class {name!r}: {exc}") from None
    if not out:
        raise InputError("no classes given")
    return out


def _emit(doc: dict, out: str | None) -> None:
    text = json.dumps(doc, indent=2)
    if out:
        Path(out).write_text(text + "\n")
    print(text)


def _grid(args) -> list[float]:
    if args.steps < 1:
        raise InputError("--steps must be at least 1")
    if args.steps == 1:
        return [args.eta_start]
    return [float(x) for x in np.linspace(args.eta_start, args.eta_end, args.steps)]


# ---------------------------------------------------------------- verbs
def cmd_sweep(args) -> int:
    from .experiments import check_monotone, sweep, write_csv, CSV_HEADER

    etas = _grid(args)
    try:
        rows = sweep(etas, _classes(args.classes), _floats(args.eps), jobs=args.jobs)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    if args.out:
        write_csv(rows, args.out)
    else:
        print(",".join(CSV_HEADER))
        for r in rows:
            print(",".join(r.csv_fields()))
    failed = [r for r in rows if not r.solved]
    problems = check_monotone(rows)
    for p in problems:
        print(f"monotonicity violated: {p}", file=sys.stderr)
    if failed:
        print(f"{len(failed)} of {len(rows)} points did not solve", file=sys.stderr)
        return EXIT_SOLVER
    return EXIT_CHECK if problems else EXIT_OK


def cmd_threshold(args) -> int:
    from .experiments import threshold

    classes = _classes(args.classes)
    if len(classes) != 2:
        raise InputError("threshold needs exactly two classes, e.g. --classes Free,FreeDef")
    eps = _floats(args.eps)
    if len(eps) != 1:
        raise InputError("threshold takes a single --eps value")
    res = threshold(classes, eps[0], args.eta_start, args.eta_end, args.steps, jobs=args.jobs)
    _emit(res.to_dict(), args.out)
    return EXIT_SOLVER if res.failures else EXIT_OK


def cmd_certify(args) -> int:
    from .certificates import CertificateError, certify
    from .io import FormatError

    try:
        report = certify(args.case)
    except (CertificateError, FormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    _emit(report, args.out)
    for v in report["verdicts"]:
        for c in v["checks"]:
            if not c["ok"]:
                print(f"FAIL {v['name']}: {c['constraint']} (residual {c['residual']})", file=sys.stderr)
    return EXIT_OK if report["ok"] else EXIT_CHECK


def cmd_trials(args) -> int:
    from .experiments import trials

    try:
        rep = trials(args.kind, args.n, args.seed, _floats(args.eps), m=args.m, jobs=args.jobs)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    _emit(rep.to_dict(), args.out)
    if rep.failures:
        return EXIT_SOLVER
    return EXIT_OK if rep.ok else EXIT_CHECK


def cmd_export_sdpa(args) -> int:
    from .channels import combine
    from .experiments import ad_pair
    from .io import FormatError, load_channel_spec
    from .sdp.capacity import build_capacity
    from .sdp.programs import build_zero_error_dual_free, build_zero_error_dual_freedef2
    from .sdp.sdpa import export_sdpa
    from .supermaps import ClassTag, SupermapClass

    if args.channels:
        try:
            jc = combine(load_channel_spec(args.channels))
        except (OSError, FormatError) as exc:
            raise InputError(str(exc)) from None
    else:
        jc = ad_pair(args.eta)
    classes = _classes(args.classes)
    if len(classes) != 1:
        raise InputError("export-sdpa takes one class")
    cls = SupermapClass.parse(classes[0])
    eps = _floats(args.eps)
    if len(eps) != 1:
        raise InputError("export-sdpa takes a single --eps value")
    if args.dual:
        if eps[0] != 0:
            raise InputError("dual programs are zero-error only")
        if cls.tag is ClassTag.FREE:
            problem = build_zero_error_dual_free(jc)
        elif cls.tag is ClassTag.FREE_DEF:
            problem = build_zero_error_dual_freedef2(jc)
        else:
            raise InputError("dual export is available for Free and FreeDef")
    else:
        problem = build_capacity(jc, cls, eps[0])
    text = export_sdpa(problem)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


# ---------------------------------------------------------------- parser
def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="causalcap", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="verb", required=True)

    def common(sp, classes, eps, eta_start=0.0, eta_end=0.5, steps=11):
        sp.add_argument("--eta-start", type=float, default=eta_start)
        sp.add_argument("--eta-end", type=float, default=eta_end)
        sp.add_argument("--steps", type=int, default=steps)
        sp.add_argument("--classes", default=classes)
        sp.add_argument("--eps", default=eps)
        sp.add_argument("--out")
        sp.add_argument("--jobs", type=int, default=1)

    sp = sub.add_parser("sweep", help="capacities of the amplitude damping pair over an eta grid (CSV)")
    common(sp, ALL_CLASSES, "0,0.02")
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("threshold", help="bracket the eta where a capacity gap opens or closes")
    common(sp, "Free,FreeDef", "0", 0.05, 0.45, 9)
    sp.set_defaults(func=cmd_threshold)

    sp = sub.add_parser("certify", help="exact verification of a shipped certificate bundle")
    sp.add_argument("case", help="case id such as ad01, or a bundle directory")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_certify)

    sp = sub.add_parser("trials", help="seeded randomized equivalence trials")
    sp.add_argument("kind", choices=["pauli", "omega_p"])
    sp.add_argument("--n", type=int, default=10)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--eps", default="0,0.02")
    sp.add_argument("--m", type=int, default=2)
    sp.add_argument("--out")
    sp.add_argument("--jobs", type=int, default=1)
    sp.set_defaults(func=cmd_trials)

    sp = sub.add_parser("export-sdpa", help="write a capacity program in SDPA sparse format")
    sp.add_argument("--eta", type=float, default=0.1)
    sp.add_argument("--channels", help="channel spec JSON; overrides --eta")
    sp.add_argument("--classes", default="Free")
    sp.add_argument("--eps", default="0")
    sp.add_argument("--dual", action="store_true", help="export the zero-error dual instead")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_export_sdpa)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except RuntimeError as exc:
        # resolved lazily so that certify never loads the solver stack
        solvers = sys.modules.get("causalcap.sdp.solvers")
        if solvers is not None and isinstance(exc, solvers.SolverError):
            print(f"solver failure: {exc}", file=sys.stderr)
            return EXIT_SOLVER
        raise


if __name__ == "__main__":
    sys.exit(main())
