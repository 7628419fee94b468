from fractions import Fraction

import pytest

from lharv.model import (Automaton, Constraint, FlowRange, LinearExpression, Location, Network, Relation,
                         Transition, owner_of, participants_of, validate_network)

X = LinearExpression.var("x")
Y = LinearExpression.var("y")


def test_expression_arithmetic_is_exact():
    e = X * Fraction(1, 3) + Y * 2 - X * Fraction(1, 3) + 1
    assert e.terms == {"y": 2}
    assert e.constant == 1
    assert e.evaluate({"x": 5, "y": Fraction(1, 2)}) == 2


def test_zero_coefficients_are_dropped():
    assert (X - X).terms == {}
    assert (X - X).is_constant()


def test_nonlinear_product_rejected():
    with pytest.raises(TypeError):
        X * Y


def test_constraint_normal_form_moves_terms_left():
    c = Constraint.make(X + 3, Relation.LE, Y * 2 - 1)
    assert c.lhs.terms == {"x": 1, "y": -2}
    assert c.rhs == -4
    assert c.lhs.constant == 0


@pytest.mark.parametrize("rel,value,expected", [
    ("<", 1, False), ("<=", 1, True), ("=", 1, True), (">", 1, False), (">=", 1, True), ("<", 0, True),
])
def test_relation_holds(rel, value, expected):
    c = Constraint.make(X, Relation.parse(rel), 1)
    assert c.holds({"x": Fraction(value)}) is expected


def test_double_equals_parses_as_equality():
    assert Relation.parse("==") is Relation.EQ


def test_canonical_flips_leading_negative():
    c = Constraint.make(-X + Y, Relation.LT, 2).canonical()
    assert c.lhs.terms == {"x": 1, "y": -1}
    assert c.relation is Relation.GT
    assert c.rhs == -2


def _aut(name, var, shared=(), local=("a",), reads=(), guard=None):
    loc0 = Location("l0", (), {var: FlowRange(1, 1)}, {var: Fraction(0)})
    loc1 = Location("l1", (), {var: FlowRange(1, 1)})
    lab = shared[0] if shared else local[0]
    t = Transition("l0", "l1", lab, (guard,) if guard else ())
    return Automaton(name, (var,), tuple(reads), tuple(local), tuple(shared), (loc0, loc1), ("l0",), (t,))


def test_owner_and_participants():
    net = Network((_aut("A", "x", shared=("s",), local=("la",)), _aut("B", "y", shared=("s",), local=("lb",))))
    assert owner_of(net, "y") == "B"
    assert participants_of(net, "s") == frozenset({"A", "B"})
    assert validate_network(net) == []


def test_read_on_local_label_is_diagnosed():
    g = Constraint.make(Y, Relation.GE, 0)
    net = Network((_aut("A", "x", local=("la",), reads=("y",), guard=g), _aut("B", "y", local=("lb",))))
    codes = {d.code for d in validate_network(net)}
    assert "read-on-local-label" in codes


def test_unowned_readable_variable_is_diagnosed():
    net = Network((_aut("A", "x", reads=("z",)),))
    assert "unowned-readable-variable" in {d.code for d in validate_network(net)}
