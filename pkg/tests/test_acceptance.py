"""Acceptance criteria, each at its stated tolerance.

Every test records one PASS/FAIL line, printed in the terminal summary.
"""

import time
from fractions import Fraction

import numpy as np
import pytest

from causalcap.certificates import certify
from causalcap.channels import amplitude_damping, replacement_channel
from causalcap.experiments import CLASS_NAMES, check_monotone, solve_row, sweep, threshold, trials
from causalcap.sdp.capacity import sim_cost_from
from causalcap.sdp.programs import build_sim_cost_par
from causalcap.sdp.solvers import solve
from causalcap.tensor import LabeledOperator, SystemLayout, link_product, ns_project

from conftest import ACCEPTANCE, apply_kraus, choi_from_map, random_hermitian, random_kraus

SEED = 2024


def record(name, ok, detail):
    ACCEPTANCE.append((name, bool(ok), detail))
    assert ok, f"{name}: {detail}"


def test_1_exact_separation():
    t0 = time.perf_counter()
    r = certify("ad01")
    dt = time.perf_counter() - t0
    c = r.get("conclusion", {})
    ok = (r["ok"] and all(v["ok"] for v in r["verdicts"])
          and Fraction(c["m_free_lower"]) >= 2 and Fraction(c["m_freedef_upper"]) < 2 and dt < 60)
    record("1 exact separation", ok,
           f"verdicts all pass, 2 <= m_Free <= {c.get('m_free_upper')}, m_FreeDef <= {c.get('m_freedef_upper')}, "
           f"{dt:.1f} s")


def test_2_solver_reproduction():
    t0 = time.perf_counter()
    free = solve_row(0.1, "Free", 0.0)
    fdef = solve_row(0.1, "FreeDef", 0.0)
    dt = time.perf_counter() - t0
    ok = (2 - 1e-6 <= free.m_star <= 2.5 + 1e-6 and 1 - 1e-6 <= fdef.m_star <= 1.95 + 1e-6
          and free.capacity_bits == 1 and fdef.capacity_bits == 0 and dt < 300)
    record("2 solver reproduction", ok,
           f"m_Free={free.m_star:.8f} ({free.capacity_bits:g} bit), m_FreeDef={fdef.m_star:.8f} "
           f"({fdef.capacity_bits:g} bit), {dt:.1f} s")


def test_3_threshold():
    res = threshold(["Free", "FreeDef"], eps=0.0)
    gap_at = {round(e, 12): g for e, g in res.samples}
    present = all(gap_at.get(e, 0) > 0 for e in (0.05, 0.1, 0.15))
    absent = gap_at.get(0.3) == 0
    merge = res.merge
    inside = merge is not None and 0.15 <= merge[0] and merge[1] <= 0.25
    record("3 threshold", present and absent and inside and not res.failures,
           f"gap at 0.05/0.1/0.15 = {[gap_at.get(e) for e in (0.05, 0.1, 0.15)]}, at 0.3 = {gap_at.get(0.3)}, "
           f"merge in {merge}")


def test_4_endpoint():
    rows = [solve_row(0.0, cls, 0.0) for cls in CLASS_NAMES]
    bits = {r.cls: r.capacity_bits for r in rows}
    ok = all(b == 2 for b in bits.values())
    record("4 endpoint eta=0", ok,
           "expected 2 bits for every class, observed "
           + ", ".join(f"{r.cls}={r.capacity_bits:g} (m*={r.m_star:.6f})" for r in rows))


def test_5_pauli():
    rep = trials("pauli", 10, seed=SEED, eps_list=(0.0, 0.02))
    ok = rep.failures == 0 and len(rep.deltas) == 20 and rep.max_delta <= 1e-5
    record("5 Pauli no-advantage", ok, f"{len(rep.deltas)} comparisons, max |dm| = {rep.max_delta:.2e}")


def test_6_omega_p():
    rep = trials("omega_p", 20, seed=SEED, m=2)
    ok = rep.failures == 0 and len(rep.deltas) == 20 and rep.max_delta <= 1e-7
    record("6 omega = p", ok, f"{len(rep.deltas)} channels, max |omega - p| = {rep.max_delta:.2e}")


def test_7_simulation_cost():
    ident = solve(build_sim_cost_par(amplitude_damping(0.0)))
    rho = np.array([[0.75, 0.25], [0.25, 0.25]])
    rep = solve(build_sim_cost_par(replacement_channel(rho, 2)))
    b_id, b_rep = sim_cost_from(ident), sim_cost_from(rep)
    ok = abs(ident.objective - 4) <= 1e-6 and b_id == 2 and b_rep == 0
    record("7 simulation cost", ok,
           f"identity tr F = {ident.objective:.9f} ({b_id:g} bits), replacement {b_rep:g} bits")


def _ns_properties():
    rng = np.random.default_rng(SEED)
    pairs = [("X1", "Y1"), ("X2", "Y2")]
    lay = SystemLayout.of(("X1", 2), ("X2", 2), ("Y1", 2), ("Y2", 2))
    worst = 0.0
    for _ in range(100):
        a = LabeledOperator(lay, random_hermitian(16, rng), True)
        b = LabeledOperator(lay, random_hermitian(16, rng), True)
        pa, pb = ns_project(a, pairs), ns_project(b, pairs)
        worst = max(
            worst,
            np.max(np.abs((ns_project(pa, pairs) - pa).entries)),
            abs(np.trace(pa.entries.conj().T @ b.entries) - np.trace(a.entries.conj().T @ pb.entries)),
            abs(pa.trace() - a.trace()),
        )
    return worst


def _link_composition():
    rng = np.random.default_rng(SEED)
    worst = 0.0
    for _ in range(50):
        da, db, dc = rng.integers(2, 4, size=3)
        kc, kd = random_kraus(da, db, rng), random_kraus(db, dc, rng)
        jc = LabeledOperator(SystemLayout.of(("A", da), ("B", db)), choi_from_map(lambda e: apply_kraus(kc, e), da))
        jd = LabeledOperator(SystemLayout.of(("B", db), ("C", dc)), choi_from_map(lambda e: apply_kraus(kd, e), db))
        direct = choi_from_map(lambda e: apply_kraus(kd, apply_kraus(kc, e)), da)
        worst = max(worst, np.max(np.abs(link_product(jc, jd).entries - direct)))
    return worst


@pytest.mark.slow
def test_8_property_suites():
    ns = _ns_properties()
    link = _link_composition()
    rows = sweep(np.round(np.linspace(0, 0.5, 6), 12), list(CLASS_NAMES), [0.0, 0.02])
    solved = [r for r in rows if r.solved]
    problems = check_monotone(rows)
    ok = ns <= 1e-12 and link <= 1e-12 and not problems and len(solved) == len(rows)
    record("8 property suites", ok,
           f"ns_project worst {ns:.1e}, link product worst {link:.1e}, "
           f"{len(solved)}/{len(rows)} sweep rows solved, {len(problems)} monotonicity violations")
