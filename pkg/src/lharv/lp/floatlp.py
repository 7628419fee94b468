"""Floating-point feasibility via HiGHS (``scipy.optimize.linprog``).

Used as the float backend proper and as a guide for the exact backend: a
float point or float Farkas vector is only a hint there, and is accepted
after exact verification.
"""

from __future__ import annotations

import numpy as np
from scipy.optimize import linprog
from scipy.sparse import csr_matrix, hstack, vstack

from .exact import Reduced, leq_form

_OPTIONS = {"presolve": True}


def _bounds(red: Reduced, index: dict, eps: float):
    lo = np.full(len(index), -np.inf)
    hi = np.full(len(index), np.inf)
    rows = []
    for r in red.rows:
        if len(r.coeffs) == 1:
            (v,) = r.coeffs
            k = index[v]
            if r.lo is not None:
                lo[k] = max(lo[k], float(r.lo) + (eps if r.lo_strict else 0.0))
            if r.hi is not None:
                hi[k] = min(hi[k], float(r.hi) - (eps if r.hi_strict else 0.0))
        else:
            rows.append(r)
    return lo, hi, rows


def _assemble(red: Reduced, eps: float):
    free = red.free
    index = {v: k for k, v in enumerate(free)}
    lo, hi, multi = _bounds(red, index, eps)
    data, ri, ci, b = [], [], [], []
    m = 0
    for r in multi:
        items = [(index[v], float(c)) for v, c in r.coeffs.items()]
        if r.hi is not None:
            for k, c in items:
                ri.append(m), ci.append(k), data.append(c)
            b.append(float(r.hi) - (eps if r.hi_strict else 0.0))
            m += 1
        if r.lo is not None:
            for k, c in items:
                ri.append(m), ci.append(k), data.append(-c)
            b.append(-float(r.lo) - (eps if r.lo_strict else 0.0))
            m += 1
    a_ub = csr_matrix((data, (ri, ci)), shape=(m, len(free))) if m else None
    return free, index, lo, hi, a_ub, np.array(b)


def _cached(red: Reduced, eps: float):
    cache = red.__dict__.setdefault("_float_cache", {})
    if eps not in cache:
        cache[eps] = _assemble(red, eps)
    return cache[eps]


def feasible_point(red: Reduced, eps: float, extra=()):
    """Solve the reduced rows with strict rows tightened by ``eps``.

    ``extra`` holds further rows ``(coeffs, rel, rhs)`` over the remaining
    variables, added on top of the (cached) matrices of ``red``.  Returns
    ``("feasible", {var: float})``, ``("infeasible", None)`` or
    ``("error", message)``.
    """
    free, index, lo, hi, a_ub, b_ub = _cached(red, eps)
    need = [v for coeffs, _, _ in extra for v in coeffs if v not in index]
    if need:
        free = list(free)
        index = dict(index)
        for v in sorted(set(need), key=red.order.__getitem__):
            index[v] = len(free)
            free.append(v)
        grow = len(free) - len(lo)
        lo = np.concatenate([lo, np.full(grow, -np.inf)])
        hi = np.concatenate([hi, np.full(grow, np.inf)])
        if a_ub is not None:
            a_ub = hstack([a_ub, csr_matrix((a_ub.shape[0], grow))], format="csr")
    if not free:
        return "feasible", {}
    if np.any(lo > hi):
        return "infeasible", None
    ub, eq = ([], [], [], []), ([], [], [], [])
    for coeffs, rel, rhs in extra:
        sign = -1.0 if rel in (">", ">=") else 1.0
        data, ri, ci, b = eq if rel == "=" else ub
        for v, c in coeffs.items():
            ri.append(len(b)), ci.append(index[v]), data.append(sign * float(c))
        b.append(sign * float(rhs) - (eps if rel in ("<", ">") else 0.0))
    kwargs = {}
    if ub[3]:
        more = csr_matrix((ub[0], (ub[1], ub[2])), shape=(len(ub[3]), len(free)))
        a_ub = more if a_ub is None else vstack([a_ub, more], format="csr")
        b_ub = np.concatenate([b_ub, ub[3]])
    if a_ub is not None:
        kwargs["A_ub"], kwargs["b_ub"] = a_ub, b_ub
    if eq[3]:
        kwargs["A_eq"] = csr_matrix((eq[0], (eq[1], eq[2])), shape=(len(eq[3]), len(free)))
        kwargs["b_eq"] = np.array(eq[3])
    res = linprog(np.zeros(len(free)), bounds=np.column_stack([lo, hi]), method="highs",
                  options=_OPTIONS, **kwargs)
    if res.status == 0:
        return "feasible", {v: float(res.x[index[v]]) for v in free}
    if res.status == 2:
        return "infeasible", None
    return "error", res.message


def farkas_vector(red: Reduced):
    """Float multipliers ``y >= 0`` over :func:`leq_form` rows with
    ``y.A = 0``, ``y.b <= 0`` and ``sum(y_strict) - y.b = 1``; None if the
    float solve finds none."""
    rows = leq_form(red)
    if not rows:
        return rows, None
    free = red.free
    index = {v: k for k, v in enumerate(free)}
    n, m = len(free), len(rows)
    data, ri, ci = [], [], []
    for i, (coeffs, _, _) in enumerate(rows):
        for v, c in coeffs.items():
            ri.append(index[v]), ci.append(i), data.append(float(c))
    b = np.array([float(rhs) for _, rhs, _ in rows])
    st = np.array([1.0 if s else 0.0 for _, _, s in rows])
    a_eq = csr_matrix((data + list(st - b), (ri + [n] * m, ci + list(range(m)))), shape=(n + 1, m))
    b_eq = np.zeros(n + 1)
    b_eq[n] = 1.0
    res = linprog(np.ones(m), A_ub=b.reshape(1, -1), b_ub=np.zeros(1), A_eq=a_eq, b_eq=b_eq,
                  bounds=(0, None), method="highs", options=_OPTIONS)
    if res.status != 0:
        return rows, None
    return rows, res.x
