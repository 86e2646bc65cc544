from fractions import Fraction

import numpy as np
import pytest
from numpy.testing import assert_allclose

from causalcap.channels import (
    PAULIS,
    ChannelError,
    ChannelList,
    ChoiChannel,
    amplitude_damping,
    classical_noiseless,
    combine,
    from_matrix,
    gamma_basis,
    pauli_channel,
    pauli_gamma,
    random_channel,
    random_pauli_probs,
    replacement_channel,
    slot_pairs,
)
from causalcap.exact import QuadScalar
from causalcap.tensor import LayoutError, SystemLayout, partial_trace

from conftest import apply_kraus, choi_from_map


def ad_kraus(eta):
    return [np.array([[0, np.sqrt(eta)], [0, 0]]), np.array([[1, 0], [0, np.sqrt(1 - eta)]])]


class TestAmplitudeDamping:
    @pytest.mark.parametrize("eta", [0.0, 0.1, 0.37, 1.0])
    def test_matches_kraus(self, eta):
        k = ad_kraus(eta)
        expect = choi_from_map(lambda e: apply_kraus(k, e), 2)
        got = amplitude_damping(eta)
        assert got.op.labels == ("X", "Y")
        assert_allclose(got.op.entries, expect, atol=1e-14)

    def test_exact_entries(self):
        J = amplitude_damping(Fraction(1, 10), exact=True).op
        assert J.entries[0, 3] == QuadScalar(0, Fraction(3, 10), 10)
        assert J.entries[2, 2] == Fraction(1, 10)
        assert J.entries[3, 3] == Fraction(9, 10)
        assert_allclose(J.to_float().entries, amplitude_damping(0.1).op.entries, atol=1e-15)

    def test_exact_from_decimal_string(self):
        J = amplitude_damping("0.1", exact=True).op
        assert J.entries[2, 2] == Fraction(1, 10)

    def test_out_of_range(self):
        with pytest.raises(ChannelError):
            amplitude_damping(1.5)

    def test_trace_preserving(self):
        J = amplitude_damping(0.3).op
        assert_allclose(partial_trace(J, ["Y"]).entries, np.eye(2), atol=1e-15)


class TestPauli:
    def test_gamma_basis_is_orthogonal(self):
        lay = SystemLayout.of(("X1", 2), ("X2", 2), ("Y1", 2), ("Y2", 2))
        basis = gamma_basis(lay)
        assert len(basis) == 16
        g = np.array([b.entries.ravel() for _, b in basis])
        gram = g.conj() @ g.T
        assert_allclose(gram, 16 * np.eye(16), atol=1e-12)

    def test_channel_matches_direct_map(self, rng):
        p = random_pauli_probs(1, rng)
        expect = choi_from_map(lambda e: sum(pi * s @ e @ s.conj().T for pi, s in zip(p, PAULIS)), 2)
        assert_allclose(pauli_channel(p).op.entries, expect, atol=1e-14)

    def test_two_qubit_ordering(self, rng):
        p = random_pauli_probs(2, rng)
        ops = [np.kron(a, b) for a in PAULIS for b in PAULIS]
        expect = choi_from_map(lambda e: sum(pi * s @ e @ s.conj().T for pi, s in zip(p, ops)), 4)
        got = pauli_channel(p, q=2)
        assert_allclose(got.op.entries, expect, atol=1e-13)

    def test_gamma_is_pauli_conjugated_projector(self):
        g = pauli_gamma([3]).entries
        ket = np.array([1, 0, 0, -1.0])
        assert_allclose(g, np.outer(ket, ket), atol=1e-15)

    def test_probabilities(self, rng):
        p = random_pauli_probs(1, rng)
        assert p.shape == (4,)
        assert np.all(p >= 0)
        assert abs(p.sum() - 1) < 1e-15
        with pytest.raises(ChannelError):
            pauli_channel([0.5, 0.5, 0.5, -0.5])
        with pytest.raises(ChannelError):
            pauli_channel([1, 0, 0])


class TestOtherChannels:
    def test_replacement(self):
        rho = np.array([[0.7, 0.1], [0.1, 0.3]])
        ch = replacement_channel(rho, 3)
        expect = choi_from_map(lambda e: np.trace(e) * rho, 3)
        assert_allclose(ch.op.entries, expect, atol=1e-15)
        assert ch.d_in == 3
        assert ch.d_out == 2

    def test_replacement_rejects_non_states(self):
        with pytest.raises(ChannelError):
            replacement_channel(np.array([[1.0, 0], [0, 1.0]]), 2)

    def test_classical(self):
        J = classical_noiseless(3).op
        expect = choi_from_map(lambda e: np.diag(np.diag(e)), 3)
        assert_allclose(J.entries, expect)
        assert np.all(classical_noiseless(2, exact=True).op.entries == classical_noiseless(2).op.entries)

    def test_from_matrix_validates(self):
        with pytest.raises(ChannelError):
            from_matrix(np.eye(4), 2, 2)
        ch = from_matrix(amplitude_damping(0.2).op.entries, 2, 2)
        assert isinstance(ch, ChoiChannel)

    def test_random_channel_is_cptp(self, rng):
        for real in (False, True):
            ch = random_channel(3, 2, rng, real=real)
            e = ch.op.entries
            assert np.linalg.eigvalsh(e).min() > -1e-12
            assert_allclose(partial_trace(ch.op, ["Y"]).entries, np.eye(3), atol=1e-12)

    def test_random_channel_is_seeded(self):
        a = random_channel(2, 2, np.random.default_rng(5)).op.entries
        b = random_channel(2, 2, np.random.default_rng(5)).op.entries
        assert np.array_equal(a, b)


class TestLists:
    def test_combine_layout_and_value(self):
        a, b = amplitude_damping(0.1), amplitude_damping(0.3)
        J = combine([a, b])
        assert J.labels == ("X1", "X2", "Y1", "Y2")
        # inputs first: reorder the plain kron (X1 Y1 X2 Y2)
        t = np.kron(a.op.entries, b.op.entries).reshape([2] * 8)
        t = t.transpose(0, 2, 1, 3, 4, 6, 5, 7).reshape(16, 16)
        assert_allclose(J.entries, t, atol=1e-15)

    def test_combine_empty(self):
        with pytest.raises(ChannelError):
            combine([])

    def test_list_labels_must_be_disjoint(self):
        with pytest.raises(LayoutError):
            ChannelList((amplitude_damping(0.1), amplitude_damping(0.2)))

    def test_slot_pairs(self):
        lay = SystemLayout.of(("X2", 2), ("X1", 2), ("Y1", 2), ("Y2", 2))
        assert slot_pairs(lay) == [("X1", "Y1"), ("X2", "Y2")]
        with pytest.raises(LayoutError):
            slot_pairs(SystemLayout.of(("X1", 2), ("Y2", 2)))
