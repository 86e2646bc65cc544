import json
from fractions import Fraction

import numpy as np
import pytest
from numpy.testing import assert_allclose

from causalcap.channels import amplitude_damping, combine
from causalcap.exact import QuadScalar
from causalcap.io import (
    FormatError,
    dump_operator,
    entries_checksum,
    load_channel_spec,
    load_operator,
    operator_to_json,
    parse_channel_spec,
    parse_operator,
)


def doc(entries, domain="rational", layout=(("X", 2),)):
    return {"layout": [list(s) for s in layout], "scalar_domain": domain, "entries": entries}


class TestEntries:
    def test_rational_entry(self):
        op = parse_operator(doc([["3808/25", "0"], ["0", "1"]]))
        assert op.entries[0, 0] == Fraction(3808, 25)
        assert op.exact

    def test_quad_entry(self):
        op = parse_operator(doc([["1387/1620", ["0", "1/10"]], [["0", "1/10"], "1"]], "quad(10)"))
        assert op.entries[0, 1] == QuadScalar(0, Fraction(1, 10), 10)
        assert op.entries[0, 0] == Fraction(1387, 1620)
        assert_allclose(float(op.entries[0, 1]), 1 / np.sqrt(10), rtol=1e-15)

    def test_flat_entries(self):
        op = parse_operator(doc(["1", "0", "0", "1/2"]))
        assert op.entries[1, 1] == Fraction(1, 2)

    def test_complex_entries(self):
        op = parse_operator(doc([[1.0, [0, -0.5]], [[0, 0.5], 2.0]], "complex_f64"))
        assert op.entries[0, 1] == -0.5j
        real = parse_operator(doc([[1.0, 0.25], [0.25, 2.0]], "complex_f64"))
        assert real.entries.dtype == float


class TestErrors:
    @pytest.mark.parametrize("entries", [
        [["0.5", "0"], ["0", "1"]],  # decimal strings are parsed exactly, floats are not
    ])
    def test_decimal_string_is_exact(self, entries):
        assert parse_operator(doc(entries)).entries[0, 0] == Fraction(1, 2)

    @pytest.mark.parametrize("entries", [
        [[0.5, "0"], ["0", "1"]],
        [[True, "0"], ["0", "1"]],
        [["x", "0"], ["0", "1"]],
        [["1/0", "0"], ["0", "1"]],
        [["1", "0"], ["0"]],
        ["1", "0", "0"],
    ])
    def test_bad_rational_files(self, entries):
        with pytest.raises(FormatError):
            parse_operator(doc(entries))

    def test_not_hermitian(self):
        with pytest.raises(FormatError):
            parse_operator(doc([["1", "1"], ["0", "1"]]))

    def test_missing_field(self):
        with pytest.raises(FormatError, match="entries"):
            parse_operator({"layout": [["X", 2]], "scalar_domain": "rational"})

    def test_bad_domain(self):
        with pytest.raises(FormatError):
            parse_operator(doc([["1", "0"], ["0", "1"]], "float128"))
        with pytest.raises(FormatError):
            parse_operator(doc([["1", "0"], ["0", "1"]], "quad(12)"))

    def test_bad_quad_entry(self):
        with pytest.raises(FormatError):
            parse_operator(doc([[["1", "2", "3"], "0"], ["0", "1"]], "quad(10)"))

    def test_bad_layout(self):
        with pytest.raises(FormatError):
            parse_operator({"layout": "X", "scalar_domain": "rational", "entries": []})

    def test_bad_json(self, tmp_path):
        p = tmp_path / "m.json"
        p.write_text("{not json")
        with pytest.raises(FormatError):
            load_operator(p)
        with pytest.raises(FormatError):
            load_channel_spec(p)

    def test_irrational_in_rational_file(self):
        J = amplitude_damping(Fraction(1, 10), exact=True).op
        with pytest.raises(FormatError):
            operator_to_json(J, "rational")


class TestRoundTrip:
    def test_exact_round_trip(self, tmp_path):
        J = combine([amplitude_damping(Fraction(1, 10), exact=True)] * 2)
        p = tmp_path / "J.json"
        dump_operator(J, p)
        back = load_operator(p)
        assert back.labels == J.labels
        assert np.all(back.entries == J.entries)
        assert json.loads(p.read_text())["scalar_domain"] == "quad(10)"

    def test_float_round_trip(self, tmp_path):
        J = amplitude_damping(0.3).op
        p = tmp_path / "J.json"
        dump_operator(J, p)
        assert_allclose(load_operator(p).entries, J.entries, rtol=0, atol=0)

    def test_rational_detected(self):
        J = amplitude_damping(Fraction(0), exact=True).op
        assert operator_to_json(J)["scalar_domain"] == "rational"
        J = amplitude_damping(Fraction(1, 4), exact=True).op
        assert operator_to_json(J)["scalar_domain"] == "quad(3)"

    def test_checksum_ignores_formatting(self, tmp_path):
        J = amplitude_damping(Fraction(1, 10), exact=True).op
        p = tmp_path / "J.json"
        dump_operator(J, p)
        compact = tmp_path / "K.json"
        compact.write_text(json.dumps(json.loads(p.read_text())))
        assert entries_checksum(load_operator(p)) == entries_checksum(load_operator(compact))
        other = amplitude_damping(Fraction(1, 5), exact=True).op
        assert entries_checksum(other) != entries_checksum(J)


class TestChannelSpecs:
    def test_forms(self):
        one = parse_channel_spec({"kind": "ad", "eta": 0.1})
        assert len(one) == 1
        two = parse_channel_spec([{"kind": "ad", "eta": 0.1}, {"kind": "pauli", "probs": [0.7, 0.1, 0.1, 0.1]}])
        assert len(two) == 2
        wrapped = parse_channel_spec({"channels": [{"kind": "classical", "m": 3}]})
        assert wrapped[0].d_in == 3

    def test_values(self):
        (ch,) = parse_channel_spec({"kind": "ad", "eta": "1/10"}, exact=True)
        assert ch.op.entries[2, 2] == Fraction(1, 10)
        (ch,) = parse_channel_spec({"kind": "replacement", "rho": [[1, 0], [0, 0]], "in_dim": 3})
        assert ch.d_in == 3 and ch.d_out == 2
        (ch,) = parse_channel_spec({"kind": "ad", "eta": 0.1})
        assert_allclose(ch.op.entries, amplitude_damping(0.1).op.entries)

    @pytest.mark.parametrize("spec", [
        {"eta": 0.1},
        {"kind": "ad"},
        {"kind": "teleport"},
        {"kind": "ad", "eta": 2},
        {"kind": "pauli", "probs": [0.5, 0.5, 0.5, -0.5]},
        [],
    ])
    def test_bad_specs(self, spec):
        with pytest.raises(FormatError):
            parse_channel_spec(spec)

    def test_load(self, tmp_path):
        p = tmp_path / "ch.json"
        p.write_text(json.dumps({"channels": [{"kind": "ad", "eta": 0.2}] * 2}))
        assert len(load_channel_spec(p)) == 2
