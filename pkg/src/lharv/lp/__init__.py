"""Feasibility of a :class:`~lharv.encoder.LinearSystem` with one contract
and two backends.

``Exact`` decides the mixed open/closed polyhedron over the rationals.
By default a float solve proposes a point or a Farkas vector, which is
accepted only after exact verification; whenever that fails, a Bland
simplex over the rationals decides.  ``Float`` runs HiGHS with strict rows
tightened by ``epsilon``; its answers are advisory and get replayed by the
caller.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Optional, Union

from .exact import (ZERO, DeadlineExceeded, Q, Reduced, _const_ok, q, simplex, solve_linear, to_fraction,
                    verify_farkas)
from . import floatlp

__all__ = ["Exact", "Float", "Feasible", "Infeasible", "Prepared", "prepare", "solve_feasibility",
           "extract_witness", "DeadlineExceeded", "parse_mode"]


@dataclass(frozen=True)
class Exact:
    guided: bool = True  # try a verified float hint before the simplex

    name = "exact"


@dataclass(frozen=True)
class Float:
    epsilon: float = 1e-6

    name = "float"

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")


SolveMode = Union[Exact, Float]


def parse_mode(name: str, epsilon=None) -> SolveMode:
    if name == "exact":
        return Exact()
    if name == "float":
        return Float(float(epsilon)) if epsilon is not None else Float()
    raise ValueError(f"unknown mode {name!r}")


@dataclass(frozen=True)
class Feasible:
    assignment: dict
    mode: str = "exact"
    method: str = ""  # "certificate" | "simplex" | "presolve" | "highs"

    feasible = True


@dataclass(frozen=True)
class Infeasible:
    reason: str = ""
    method: str = ""

    feasible = False


class Prepared:
    """A system after exact presolve, cheap to extend with extra rows.

    Extra rows are presolved exactly only when an exact answer is needed;
    the float backend adds them on top of the base matrices.
    """

    def __init__(self, variables, base: Reduced, stats=(0, 0), extra=()):
        self.variables = tuple(variables)
        self.base = base
        self.stats = tuple(stats)
        self.extra = tuple(extra)
        self._reduced = base if not self.extra else None

    @property
    def reduced(self) -> Reduced:
        if self._reduced is None:
            self._reduced = self.base.extend(self.extra)
        return self._reduced

    def extend(self, constraints) -> "Prepared":
        constraints = tuple(constraints)
        n, m = self.stats
        return Prepared(self.variables, self.base, (n + len(constraints), m), self.extra + constraints)

    def extra_rows(self):
        """Extra rows over the base's remaining variables; None when one of
        them is a false constant row."""
        out = []
        for c in self.extra:
            coeffs, rhs = self.base._sub({v: q(k) for v, k in c.lhs.terms.items()}, q(c.rhs))
            rel = c.relation.value
            if not coeffs:
                if not _const_ok(rel, rhs):
                    return None
                continue
            out.append((coeffs, rel, rhs))
        return out


def prepare(sys) -> Prepared:
    if isinstance(sys, Prepared):
        return sys
    return Prepared(sys.variables, Reduced.build(sys.constraints, sys.variables), sys.stats)


def _checker(deadline: Optional[Callable[[], bool]]):
    if deadline is None:
        return lambda: None

    def check():
        if deadline():
            raise DeadlineExceeded()
    return check


def solve_feasibility(sys, mode: SolveMode = Exact(), deadline: Optional[Callable[[], bool]] = None):
    """Decide feasibility; ``deadline()`` returning True aborts with
    :class:`DeadlineExceeded`."""
    prep = prepare(sys)
    check = _checker(deadline)
    if prep.base.infeasible:
        return Infeasible(prep.base.infeasible, "presolve")
    check()
    extra = prep.extra_rows() if prep.extra else []
    if extra is None:
        return Infeasible("contradictory constant row", "presolve")
    if any(prep.base.excludes(*row) for row in extra):
        return Infeasible("bounds of the base system exclude an added row", "bounds")
    if isinstance(mode, Float):
        status, point = floatlp.feasible_point(prep.base, mode.epsilon, extra)
        if status == "feasible":
            return Feasible(prep.base.reconstruct(point, float), "float", "highs")
        if status == "infeasible":
            return Infeasible("float solve found no point", "highs")
        mode = Exact(guided=False)  # numerical failure: decide exactly
    red = prep.reduced
    if red.infeasible:
        return Infeasible(red.infeasible, "presolve")
    if mode.guided:
        verdict = _guided(red)
        if verdict is not None:
            return verdict
        check()
    res = simplex(red, check)
    if not res.feasible:
        reason = "strict rows cannot hold" if res.slack is not None else "closed rows infeasible"
        return Infeasible(reason, "simplex")
    return Feasible(_full(red, res.point), "exact", "simplex")


def _full(red: Reduced, point: dict) -> dict:
    full = red.reconstruct(point)
    return {v: to_fraction(x) for v, x in full.items()}


def _rational(x: float, limit: Optional[int]) -> Fraction:
    f = Fraction(x)
    return f.limit_denominator(limit) if limit else f


def _guided(red: Reduced):
    try:
        status, point = floatlp.feasible_point(red, 1e-6)
    except (ValueError, ArithmeticError):  # pragma: no cover - solver hiccup
        return None
    if status == "feasible":
        for limit in (1000, 10 ** 6, None):
            cand = {v: _q(_rational(x, limit)) for v, x in point.items()}
            if red.check_point(cand):
                return Feasible(_full(red, cand), "exact", "certificate")
        cand = _crossover(red, point)
        if cand is not None and red.check_point(cand):
            return Feasible(_full(red, cand), "exact", "certificate")
        return None
    if status == "infeasible":
        rows, y = floatlp.farkas_vector(red)
        if y is None:
            return None
        for tol in (1e-9, 1e-7, 1e-5):
            ex = _snap_farkas(rows, y, tol)
            if ex is not None and verify_farkas(rows, ex):
                return Infeasible("verified Farkas certificate", "certificate")
    return None


def _q(f: Fraction):
    return Q(f.numerator, f.denominator)


def _crossover(red: Reduced, point: dict):
    """Solve the rows active at the float point exactly, other variables
    from the rounded point."""
    eqs = []
    for r in red.rows:
        val = sum(float(c) * point[v] for v, c in r.coeffs.items())
        for bnd, st in ((r.lo, r.lo_strict), (r.hi, r.hi_strict)):
            if bnd is not None and not st and abs(val - float(bnd)) <= 1e-7 * (1 + abs(float(bnd))):
                eqs.append((dict(r.coeffs), bnd))
    hint = {v: _q(_rational(x, 10 ** 6)) for v, x in point.items()}
    return solve_linear(eqs, red.free, hint)


def _snap_farkas(rows, y, tol: float):
    top = float(max(y)) if len(y) else 0.0
    if top <= 0:
        return None
    support = [i for i, w in enumerate(y) if w > tol * top]
    vars_ = {}
    for i in support:
        for v, c in rows[i][0].items():
            vars_.setdefault(v, {})[i] = c
    eqs = [(col, ZERO) for col in vars_.values()]
    eqs.append(({i: (1 if rows[i][2] else 0) - rows[i][1] for i in support}, Q(1)))
    hint = {i: _q(_rational(float(y[i]), 10 ** 6)) for i in support}
    sol = solve_linear(eqs, support, hint)
    return sol


# --------------------------------------------------------------------------

def extract_witness(sys, a: dict, ps, skel):
    """Per-component timed sequences and event timestamps from an assignment."""
    from ..encoder import LPVar
    from ..replay import Step, Witness

    mode = "float" if any(isinstance(v, float) for v in a.values()) else "exact"
    zero = 0.0 if mode == "float" else Fraction(0)
    comps = {}
    for name, path in ps.paths.items():
        steps = []
        for i, loc in enumerate(path.locations):
            d = a.get(LPVar("dwell", name, i), zero)
            entry = {}
            exit_ = {}
            for v in sys.variables:
                if v.component == name and v.position == i and v.kind != "dwell":
                    (entry if v.kind == "entry" else exit_)[v.var] = a.get(v, zero)
            steps.append(Step(loc, d, entry, exit_))
        comps[name] = tuple(steps)
    sync = {}
    for ev in skel.events:
        comp, pos = next(iter(ev.positions.items()))
        t = zero
        for st in comps[comp][:pos + 1]:
            t = t + st.dwell
        sync[ev.key] = t
    return Witness(mode, comps, sync)
