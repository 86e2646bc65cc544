import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from causalcap.channels import (
    amplitude_damping,
    classical_noiseless,
    combine,
    pauli_channel,
    random_channel,
    random_pauli_probs,
    replacement_channel,
)
from causalcap.sdp.capacity import build_capacity, capacity_from, floor_count, sim_cost_from, solve_capacity
from causalcap.sdp.model import SdpError, SdpProblem
from causalcap.sdp.programs import (
    build_avg_error_freepar,
    build_capacity_free,
    build_min_error_freepar,
    build_sim_cost_par,
    build_zero_error_dual_free,
    build_zero_error_dual_freedef2,
)
from causalcap.sdp.sdpa import export_sdpa, read_sdpa, solve_sdpa_cvxopt
from causalcap.sdp.solvers import SolverError, solve
from causalcap.sdp.twirl import pauli_twirl
from causalcap.supermaps import SupermapClass
from causalcap.tensor import LayoutError, SystemLayout, ns_project, partial_trace

CLASSES = ["FreePar", "FreeFix", "FreeDef", "Free"]
# the causally definite program needs two slots
SINGLE_SLOT = ["FreePar", "FreeFix(1)", "Free"]


def toy():
    p = SdpProblem("max", "toy")
    p.scalar("x")
    p.objective(lambda v: v["x"])
    p.psd("x<=1", lambda v: 1 - v["x"])
    return p


def top_eigenvalue(c):
    lay = SystemLayout.of(("A", c.shape[0]))
    p = SdpProblem("max", "top")
    p.matrix("X", lay)
    p.objective(lambda v: np.real(np.trace(v["X"].entries @ c)))
    p.equal("tr", lambda v: np.real(v["X"].trace()) - 1)
    p.psd("X>=0", lambda v: v["X"])
    return p


class TestModel:
    def test_toy(self):
        r = solve(toy())
        assert r.status == "optimal"
        assert_allclose(r.objective, 1.0, atol=1e-7)

    @pytest.mark.parametrize("solver", ["clarabel", "cvxopt"])
    def test_top_eigenvalue(self, solver, rng):
        a = rng.normal(size=(4, 4))
        c = a + a.T
        r = solve(top_eigenvalue(c), solver=solver)
        assert r.optimal
        assert_allclose(r.objective, np.linalg.eigvalsh(c).max(), atol=1e-6)
        assert r.max_residual < 1e-6

    def test_residuals_at_a_point(self):
        p = toy()
        assert p.residuals({"x": 3.0}) == {"x<=1": 2.0}
        assert p.residuals({"x": 0.0}) == {"x<=1": 0.0}

    def test_inconsistent_equalities(self):
        p = toy()
        p.equal("x=1", lambda v: v["x"] - 1)
        p.equal("x=2", lambda v: v["x"] - 2)
        assert solve(p).status == "infeasible"

    def test_unknown_solver(self):
        with pytest.raises(ValueError):
            solve(toy(), solver="mosek")

    def test_bad_sense_and_names(self):
        with pytest.raises(SdpError):
            SdpProblem("maximize")
        p = toy()
        with pytest.raises(SdpError):
            p.scalar("x")

    def test_require_optimal(self):
        p = toy()
        p.equal("x=1", lambda v: v["x"] - 1)
        p.equal("x=2", lambda v: v["x"] - 2)
        with pytest.raises(SolverError):
            solve(p).require_optimal()


def single(channel):
    return combine([channel])


class TestCapacity:
    @pytest.mark.parametrize("cls", SINGLE_SLOT)
    def test_classical_identity(self, cls):
        r = solve_capacity(single(classical_noiseless(3)), cls)
        assert_allclose(r.m_star, 3.0, atol=1e-6)
        assert_allclose(r.capacity_bits, math.log2(3))

    @pytest.mark.parametrize("cls", ["FreePar", "Free"])
    def test_qubit_identity_superdense(self, cls):
        r = solve_capacity(single(amplitude_damping(0.0)), cls)
        assert_allclose(r.m_star, 4.0, atol=1e-6)
        assert r.capacity_bits == 2.0

    def test_replacement_carries_nothing(self):
        rho = np.array([[0.6, 0.1], [0.1, 0.4]])
        r = solve_capacity(single(replacement_channel(rho, 2)), "Free")
        assert_allclose(r.m_star, 1.0, atol=1e-6)
        assert r.capacity_bits == 0.0

    def test_single_slot_classes_agree(self, rng):
        ch = single(random_channel(2, 2, rng, real=True))
        vals = [solve_capacity(ch, c).m_star for c in SINGLE_SLOT]
        assert_allclose(vals, vals[0], atol=1e-6)

    def test_error_tolerance_helps(self):
        J = single(amplitude_damping(0.3))
        a = solve_capacity(J, "FreePar").m_star
        b = solve_capacity(J, "FreePar", eps=0.05).m_star
        assert b >= a - 1e-7
        with pytest.raises(SdpError):
            build_capacity_free(J, eps=1.0)

    def test_class_chain_on_pair(self):
        J = combine([amplitude_damping(0.1), amplitude_damping(0.1)])
        vals = [solve_capacity(J, c).m_star for c in CLASSES]
        assert all(lo <= hi + 1e-6 for lo, hi in zip(vals, vals[1:]))
        assert_allclose(vals[-1], 2.12443392, atol=1e-5)

    def test_floor_count(self):
        assert floor_count(1.9999999) == 2
        assert floor_count(2.5) == 2
        with pytest.raises(ValueError):
            floor_count(0.5)

    def test_non_optimal_refused(self):
        p = toy()
        p.equal("x=1", lambda v: v["x"] - 1)
        p.equal("x=2", lambda v: v["x"] - 2)
        with pytest.raises(SolverError):
            capacity_from(solve(p))


class TestDuality:
    def test_free_dual_bounds_primal(self):
        J = combine([amplitude_damping(0.1), amplitude_damping(0.1)])
        primal = solve(build_capacity_free(J)).objective
        dual = solve(build_zero_error_dual_free(J))
        assert dual.status in ("optimal", "inaccurate")
        assert dual.objective >= primal - 1e-5
        assert dual.objective <= primal + 1e-3

    def test_freedef_dual_bounds_primal(self):
        J = combine([amplitude_damping(0.1), amplitude_damping(0.1)])
        primal = solve_capacity(J, "FreeDef").m_star
        dual = solve(build_zero_error_dual_freedef2(J))
        assert dual.objective >= primal - 1e-5


class TestTwirl:
    def test_pauli_channels_are_fixed(self, rng):
        J = combine([pauli_channel(random_pauli_probs(1, rng)), pauli_channel(random_pauli_probs(1, rng))])
        assert_allclose(pauli_twirl(J, 2).entries, J.entries, atol=1e-12)

    def test_idempotent_and_trace_preserving(self, rng):
        J = combine([random_channel(2, 2, rng), random_channel(2, 2, rng)])
        T = pauli_twirl(J, 2)
        assert_allclose(pauli_twirl(T, 2).entries, T.entries, atol=1e-12)
        assert_allclose(T.trace(), J.trace(), atol=1e-12)
        assert_allclose(partial_trace(T, ["Y1", "Y2"]).entries, np.eye(4), atol=1e-12)

    def test_commutes_with_projection(self, rng):
        J = combine([random_channel(2, 2, rng), random_channel(2, 2, rng)])
        pairs = [("X1", "Y1"), ("X2", "Y2")]
        lhs = pauli_twirl(ns_project(J, pairs), 2)
        rhs = ns_project(pauli_twirl(J, 2), pairs)
        assert_allclose(lhs.entries, rhs.entries, atol=1e-12)

    def test_qubit_count(self, rng):
        J = combine([random_channel(2, 2, rng)])
        with pytest.raises(LayoutError):
            pauli_twirl(J, 2)
        with pytest.raises(LayoutError):
            pauli_twirl(combine([random_channel(3, 3, rng)]), 1)


class TestSimulationCost:
    @pytest.mark.parametrize("channel, bits", [
        (amplitude_damping(0.0), 2.0),
        (classical_noiseless(2), 1.0),
        (replacement_channel(np.diag([0.5, 0.5]), 2), 0.0),
    ])
    def test_known_costs(self, channel, bits):
        r = solve(build_sim_cost_par(channel))
        assert sim_cost_from(r) == bits

    def test_error_lowers_cost(self):
        ch = amplitude_damping(0.2)
        a = solve(build_sim_cost_par(ch)).objective
        b = solve(build_sim_cost_par(ch, eps=0.1)).objective
        assert b <= a + 1e-7


class TestErrorPrograms:
    def test_average_and_worst_case_agree(self):
        J = single(amplitude_damping(0.3))
        p = solve(build_avg_error_freepar(J, 2)).objective
        w = solve(build_min_error_freepar(J, 2)).objective
        assert_allclose(w, p, atol=1e-6)

    def test_noiseless_has_no_error(self):
        J = single(classical_noiseless(2))
        assert_allclose(solve(build_avg_error_freepar(J, 2)).objective, 0.0, atol=1e-7)

    def test_message_count_validated(self):
        J = single(classical_noiseless(2))
        with pytest.raises(SdpError):
            build_avg_error_freepar(J, 1)
        with pytest.raises(SdpError):
            build_min_error_freepar(J, 2.5)


TOY_SDPA = """\
"toy: exported by causalcap
* objective sign: model objective = -1 * sdpa objective + offset
* offset = 0
* sense = max
1
1
-1
-1
0 1 1 1 -1
1 1 1 1 -1
"""


class TestSdpa:
    def test_toy_text(self):
        assert export_sdpa(toy()) == TOY_SDPA

    def test_toy_solves(self):
        data = read_sdpa(TOY_SDPA)
        status, obj, _ = solve_sdpa_cvxopt(data)
        assert status == "optimal"
        assert_allclose(data.model_objective(obj), 1.0, atol=1e-7)

    def test_capacity_round_trip(self):
        # zero-error programs lack a strictly feasible point and stall CVXOPT
        J = combine([amplitude_damping(0.1), amplitude_damping(0.1)])
        for cls in ("FreePar", "Free"):
            p = build_capacity(J, SupermapClass.parse(cls), 0.02)
            data = read_sdpa(export_sdpa(p))
            status, obj, _ = solve_sdpa_cvxopt(data)
            assert status == "optimal"
            assert_allclose(data.model_objective(obj), solve(p).objective, atol=1e-5)

    def test_truncated(self):
        with pytest.raises(ValueError):
            read_sdpa("1\n1\n")

    def test_inconsistent_not_exported(self):
        p = toy()
        p.equal("x=1", lambda v: v["x"] - 1)
        p.equal("x=2", lambda v: v["x"] - 2)
        with pytest.raises(SdpError):
            export_sdpa(p)
