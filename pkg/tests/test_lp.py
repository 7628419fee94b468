import random
from fractions import Fraction

import pytest

from lharv.encoder import LinearSystem
from lharv.lp import DeadlineExceeded, Exact, Float, parse_mode, prepare, solve_feasibility
from lharv.lp.exact import Reduced, leq_form, verify_farkas, q
from lharv.model import Constraint, LinearExpression, Relation

X, Y, Z = (LinearExpression.var(v) for v in "xyz")
R = Relation


def system(*rows):
    cons = tuple(Constraint.make(l, r, b) for l, r, b in rows)
    names = sorted({v for c in cons for v in c.variables()})
    return LinearSystem(tuple(names), cons, ("row",) * len(cons))


def holds(sys, a):
    return all(c.holds(a) for c in sys.constraints)


MODES = [Exact(), Exact(guided=False), Float()]

CASES = [
    # (rows, feasible) -- decided by hand
    ([(X, R.LT, 1), (X, R.GT, 1)], False),
    ([(X, R.LE, 1), (X, R.GE, 1)], True),
    ([(X, R.LT, 1), (X, R.GE, 1)], False),
    ([(X + Y, R.EQ, 2), (X - Y, R.GT, 0), (Y, R.GE, 1)], False),  # x > y and x + y = 2 force y < 1
    ([(X + Y, R.EQ, 2), (X - Y, R.GT, 0), (Y, R.GE, Fraction(1, 2))], True),
    ([(X, R.EQ, 1), (X, R.EQ, 2)], False),
    ([(X - Y, R.LE, 0), (Y - Z, R.LE, 0), (Z - X, R.LT, 0)], False),  # x <= y <= z < x
    ([(X - Y, R.LE, 0), (Y - Z, R.LE, 0), (Z - X, R.LE, 0)], True),
]


@pytest.mark.parametrize("mode", MODES, ids=["exact", "exact-simplex", "float"])
@pytest.mark.parametrize("rows,feasible", CASES)
def test_small_systems(mode, rows, feasible):
    sys = system(*rows)
    res = solve_feasibility(sys, mode)
    assert res.feasible is feasible
    if feasible and not isinstance(mode, Float):
        assert holds(sys, res.assignment)


def test_exact_sees_tiny_open_interval_float_does_not():
    sys = system((X, R.GT, 0), (X, R.LT, Fraction(1, 10 ** 9)))
    res = solve_feasibility(sys, Exact())
    assert res.feasible and holds(sys, res.assignment)
    assert solve_feasibility(sys, Exact(guided=False)).feasible
    # strict rows tightened by 1e-6 leave nothing
    assert not solve_feasibility(sys, Float()).feasible


# x <= 1 - y and x >= 2 + y need y <= -1/2
FARKAS = [(X + Y, R.LE, 1), (X - Y, R.GE, 2), (Y, R.GE, 0)]


def test_methods_are_reported():
    sys = system(*FARKAS)
    assert solve_feasibility(sys, Exact()).method == "certificate"
    assert solve_feasibility(sys, Exact(guided=False)).method == "simplex"
    assert solve_feasibility(system((X, R.EQ, 1), (X, R.EQ, 2)), Exact()).method == "presolve"


def _random_system(rng):
    rows = []
    names = [LinearExpression.var(f"v{i}") for i in range(rng.randint(1, 4))]
    for _ in range(rng.randint(1, 6)):
        e = LinearExpression()
        for v in rng.sample(names, rng.randint(1, len(names))):
            e = e + v * rng.choice([-2, -1, 1, 1, 3])
        rows.append((e, rng.choice(list(R)), rng.randint(-3, 3)))
    return system(*rows)


def test_guided_and_plain_exact_agree_on_random_systems():
    rng = random.Random(7)
    for _ in range(300):
        sys = _random_system(rng)
        a = solve_feasibility(sys, Exact())
        b = solve_feasibility(sys, Exact(guided=False))
        assert a.feasible == b.feasible
        for r in (a, b):
            if r.feasible:
                assert holds(sys, r.assignment)


def test_deadline_aborts():
    sys = system((X, R.LE, 1))
    with pytest.raises(DeadlineExceeded):
        solve_feasibility(sys, Exact(), deadline=lambda: True)


def test_float_epsilon_must_be_positive():
    with pytest.raises(ValueError):
        Float(0)
    assert parse_mode("float", 1e-5) == Float(1e-5)
    with pytest.raises(ValueError):
        parse_mode("fast")


def test_bound_propagation():
    red = Reduced.build(system((X, R.LE, 3), (Y - X, R.LE, 1), (X, R.GE, 0)).constraints, ("x", "y"))
    assert red.bounds()["y"] == (None, q(4))
    assert red.excludes({"y": q(1)}, "=", q(5))
    assert not red.excludes({"y": q(1)}, "=", q(4))
    assert red.excludes({"y": q(1)}, ">", q(4))


def test_extension_reuses_base():
    base = system((X, R.GE, 0), (Y - X, R.LE, 1))
    prep = prepare(base)
    assert solve_feasibility(prep.extend([Constraint.make(Y, R.EQ, 5), Constraint.make(X, R.LE, 3)]),
                             Exact()).feasible is False
    ok = prep.extend([Constraint.make(Y, R.EQ, 1)])
    res = solve_feasibility(ok, Exact())
    assert res.feasible and res.assignment["y"] == 1
    assert solve_feasibility(ok, Float()).feasible


def test_farkas_verification():
    red = Reduced.build(system(*FARKAS).constraints, ("x", "y"))
    rows = leq_form(red)
    # (x + y <= 1) + (-x + y <= -2) + 2 * (-y <= 0) gives 0 <= -1
    weight = {(1, 1): 1, (-1, 1): 1, (0, -1): 2}
    y = {i: q(weight[(int(r[0].get("x", 0)), int(r[0].get("y", 0)))]) for i, r in enumerate(rows)}
    assert len(rows) == 3
    assert verify_farkas(rows, y)
    assert not verify_farkas(rows, {i: q(1) for i in range(3)})
