from fractions import Fraction

import pytest

from conftest import FIXTURES, load
from lharv.cbtc import CycleRecord, default_params, generate_scenario
from lharv.replay import Step, Witness
from lharv.textio import (ModelError, emit_witness, format_model, format_number, format_pathset,
                          format_record, format_spec, iter_records, parse_model, parse_number, parse_pathset,
                          parse_record, parse_spec, parse_witness)


def codes(exc):
    return {d.code for d in exc.value.diagnostics}


def test_decimals_are_exact():
    assert parse_number("0.9") == Fraction(9, 10)
    assert parse_number("9/10") == Fraction(9, 10)
    assert format_number(Fraction(9, 10)) == "0.9"
    assert format_number(Fraction(1, 3)) == "1/3"
    assert format_number(Fraction(-5, 4)) == "-1.25"


def test_relay_round_trip():
    text = (FIXTURES / "relay.lharv").read_text()
    net = parse_model(text)
    again = parse_model(format_model(net))
    assert format_model(again) == format_model(net)
    assert [a.name for a in net] == ["S", "T", "K"]
    assert net.automaton("T").readable_vars == ("s", "k")


def test_implicit_coefficient_and_chains():
    net = parse_model("""
automaton A { var x, y; local label a;
  loc p { flow x in [0, 1]; flow y in [1, 1]; inv 0 <= x <= 2y + 1; }
  init p { x = 0; y = 0; } }""")
    inv = net.automaton("A").location("p").invariant
    assert len(inv) == 2
    assert inv[1].lhs.terms == {"x": 1, "y": -2}
    assert inv[1].rhs == 1


def test_crlf_and_comments():
    net = parse_model("// c\r\nautomaton A { # hi\r\n var x; loc p { flow x in [1, 1]; } init p { x = 0; } }\r\n")
    assert net.automaton("A").local_vars == ("x",)


@pytest.mark.parametrize("body,code", [
    ("loc p { flow x in [2, 1]; }", "empty-rate"),
    ("loc p { flow x in [1, 1]; flow x in [0, 1]; }", "duplicate-flow"),
    ("loc p { flow x in [1, 1]; inv z <= 1; }", "undeclared-identifier"),
])
def test_model_diagnostics(body, code):
    with pytest.raises(ModelError) as exc:
        parse_model(f"automaton A {{ var x; {body} init p {{ x = 0; }} }}")
    assert code in codes(exc)
    assert all(d.span is not None for d in exc.value.diagnostics)


def test_nonlinear_term_rejected_with_position():
    with pytest.raises(ModelError) as exc:
        parse_model("automaton A { var x, y; loc p { flow x in [1, 1]; flow y in [1, 1]; inv x * y <= 1; } }")
    d = exc.value.diagnostics[-1]
    assert "nonlinear" in d.message
    assert d.span.line == 1


def test_pathset_diagnostics(relay):
    net = relay[0]
    with pytest.raises(ModelError) as exc:
        parse_pathset((FIXTURES / "relay_mismatch.paths").read_text(), net)
    assert codes(exc) == {"unknown-transition"}
    with pytest.raises(ModelError) as exc:
        parse_pathset("S: s1 -a-> s2\nT: t1\n", net)
    assert "missing path for component K" in str(exc.value)
    with pytest.raises(ModelError) as exc:
        parse_pathset("S: s2\nT: t1\nK: k1\n", net)
    assert "non-initial-start" in codes(exc)


def test_spec_forms(relay):
    net = relay[0]
    a = parse_spec("assert s + 2t - 3k = 0 at (s5, t5, k5)", net)
    b = parse_spec("at S.s5, T.t5, K.k5 assert s + 2*t - 3*k == 0", net)
    assert a.targets == b.targets == {"S": "s5", "T": "t5", "K": "k5"}
    assert a.constraints == b.constraints
    assert parse_spec(format_spec(a), net) == a
    with pytest.raises(ModelError) as exc:
        parse_spec("at nowhere", net)
    assert "unknown-location" in codes(exc)


def test_cbtc_scenario_round_trip():
    sc = generate_scenario(default_params(3))
    text = format_model(sc.network)
    net = parse_model(text)
    assert format_model(net) == text
    ps = parse_pathset(format_pathset(sc.paths), net)
    assert ps.paths == sc.paths.paths


def test_witness_round_trip():
    w = Witness("exact", {"A": (Step("p", Fraction(1, 3), {"x": Fraction(0)}, {"x": Fraction(1, 3)}),)},
                {("s", 0): Fraction(1, 3)})
    text = emit_witness(w)
    assert "dwell 1/3" in text
    assert parse_witness(text) == w


def test_record_round_trip_is_exact():
    rec = CycleRecord(3, 1.5, default_params(2))
    line = format_record(rec)
    back = parse_record(line)
    assert back.trains == rec.trains
    assert back.timestamp == Fraction(3, 2)
    assert parse_record('{"cycle": 1, "trains": [{"id": "a", "x0": 0.1, "cur_v": [0, "1/3"], '
                        '"new_v": [0, 1], "ma": 1, "sbd": 1, "rsd": 0}]}').trains[0].cur_v[1] == Fraction(1, 3)


def test_malformed_record_yields_error_and_stream_continues():
    out = list(iter_records(['{"cycle": 0}', "", "not json", format_record(CycleRecord(2, 0, default_params(1)))]))
    assert isinstance(out[0], ModelError) and isinstance(out[1], ModelError)
    assert out[2].cycle == 2


def test_crossed_fixture_parses():
    net, ps, spec = load("crossed", "crossed", "crossed")
    assert spec.targets == {"A": "a3", "B": "b3"}
