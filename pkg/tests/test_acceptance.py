"""Acceptance criteria, one check each.

Every check returns ``(passed, detail)``.  Under pytest each criterion is a
test that prints its line; ``python3 tests/test_acceptance.py`` prints one
``PASS``/``FAIL`` line per criterion and exits nonzero on any failure.
"""

import random
import subprocess
import sys
import time
from pathlib import Path

HERE = Path(__file__).resolve().parent
sys.path.insert(0, str(HERE))

import pytest  # noqa: E402

from lharv import Exact, Float, check, replay_witness, sample_oracle, solve_feasibility  # noqa: E402
from lharv.cbtc import (bench, check_cycle, default_params, margin, monitor,  # noqa: E402
                        safe_records, with_gap)
from lharv.encoder import assignment_of, dump, encode, substitute  # noqa: E402
from lharv.lp import extract_witness  # noqa: E402
from lharv.model import Automaton, FlowRange, Location, Network, Transition  # noqa: E402
from lharv.pathset import (Inconsistent, SyncSkeleton, align_occurrences, enumerate_global_paths,  # noqa: E402
                           interleave, project_all)
from lharv.replay import InstanceTooLarge  # noqa: E402
from lharv.textio import format_record  # noqa: E402

from conftest import FIXTURES, ROOT, load  # noqa: E402
from instances import random_instance  # noqa: E402
from test_encoder import GOLDEN  # noqa: E402

from fractions import Fraction  # noqa: E402


def golden_rows():
    t0 = time.perf_counter()
    net, ps, spec = load("relay", "relay", "relay")
    lines = set(dump(encode(net, ps, align_occurrences(ps, net), spec)).splitlines())
    missing = [r for r in GOLDEN if r not in lines]
    secs = time.perf_counter() - t0
    return not missing and secs < 1, f"{len(GOLDEN) - len(missing)}/{len(GOLDEN)} rows, {secs:.3f} s"


CROSS_SEEDS = range(250)


def cross_validation():
    t0 = time.perf_counter()
    bad = []
    oracle_hits = too_large = feasible = 0
    for seed in CROSS_SEEDS:
        net, ps, spec = random_instance(seed)[:3]
        exact = check(net, ps, spec, Exact())
        sys_, skel = exact.system, exact.skeleton
        # (b) raw float answer, before any exact fallback
        fres = solve_feasibility(sys_, Float())
        if fres.feasible:
            w = extract_witness(sys_, fres.assignment, ps, skel)
            if not replay_witness(net, ps, skel, spec, w, 1e-7).passed:
                bad.append((seed, "float witness fails replay"))
        if exact.verdict == "Reachable":
            feasible += 1
            if not replay_witness(net, ps, skel, spec, exact.witness, 0).passed:
                bad.append((seed, "exact witness fails replay"))
        # (c)
        if fres.feasible != (exact.verdict == "Reachable"):
            bad.append((seed, "float and exact disagree"))
        # (a)
        try:
            o = sample_oracle(net, ps, skel, spec, Fraction(1, 2), 2, node_budget=20_000)
        except InstanceTooLarge:
            too_large += 1
            continue
        if o.feasible:
            oracle_hits += 1
            if substitute(sys_, assignment_of(o.witness)):
                bad.append((seed, "oracle witness violates the system"))
            if exact.verdict != "Reachable":
                bad.append((seed, "oracle found a run the checker missed"))
    secs = time.perf_counter() - t0
    detail = (f"{len(CROSS_SEEDS)} instances, {feasible} feasible, {oracle_hits} oracle witnesses, "
              f"{too_large} over oracle budget, {len(bad)} failures, {secs:.1f} s")
    if bad:
        detail += f"; first {bad[0]}"
    return not bad and len(CROSS_SEEDS) >= 200 and secs < 120, detail


def _random_automaton(rng, name, shared, nloc):
    locs = [f"{name}{i}" for i in range(nloc)]
    own_local = [f"{name.lower()}{k}" for k in range(2)]
    labels = rng.sample(shared, rng.randint(1, len(shared))) + own_local[:rng.randint(0, 2)]
    trans = set()
    for _ in range(rng.randint(1, 5)):
        trans.add((rng.choice(locs), rng.choice(locs), rng.choice(labels)))
    trans = sorted(trans)
    used = {lab for _, _, lab in trans}
    x = f"{name}x"
    locations = tuple(Location(l, (), {x: FlowRange(1, 1)}, {x: Fraction(0)} if l == locs[0] else {})
                      for l in locs)
    return Automaton(name, (x,), (), tuple(sorted(used - set(shared))), tuple(sorted(used & set(shared))),
                     locations, (locs[0],), tuple(Transition(s, t, lab) for s, t, lab in trans))


STRUCT_SEEDS = range(120)


def structural_soundness():
    rng = random.Random(7)
    paths = bad = 0
    for _ in STRUCT_SEEDS:
        k = rng.randint(2, 3)
        shared = ["p", "q", "r"][:rng.randint(1, 3)]
        net = Network(tuple(_random_automaton(rng, n, shared, rng.randint(1, 4)) for n in "ABC"[:k]))
        for gp in enumerate_global_paths(net, 5):
            ps = project_all(gp, net)
            sk = align_occurrences(ps, net)
            paths += 1
            if not isinstance(sk, SyncSkeleton) or project_all(interleave(ps, sk, net), net) != ps:
                bad += 1
    net, ps, _ = load("crossed", "crossed", "crossed")
    crossed = isinstance(align_occurrences(ps, net), Inconsistent)
    return bad == 0 and crossed, (f"{len(STRUCT_SEEDS)} products, {paths} global paths, {bad} rejected; "
                                  f"crossed order {'Inconsistent' if crossed else 'accepted'}")


BENCH_N = [8, 10, 12, 14, 16]


def cbtc_bench():
    exact = bench(BENCH_N, 20, Exact())
    flt = bench(BENCH_N, 20, Float())
    verdicts = all(r.verdict == "Unreachable" for r in exact + flt)
    e16, f16 = exact[-1], flt[-1]
    counts = [(r.constraints, r.variables) for r in exact]
    monotone = all(a[0] < b[0] and a[1] < b[1] for a, b in zip(counts, counts[1:]))
    within = 2672 / 3 <= e16.constraints <= 2672 * 3 and 192 / 3 <= e16.variables <= 192 * 3
    ok = verdicts and e16.median_ms <= 500 and f16.median_ms <= 100 and monotone and within
    return ok, (f"n=16 exact {e16.median_ms:.1f} ms, float {f16.median_ms:.1f} ms, counts {counts[-1]}, "
                f"monotone {monotone}, all Unreachable {verdicts}")


def collision():
    net, ps, spec = load("cbtc_unsafe2", "cbtc_unsafe2", "cbtc_unsafe2")
    res = check(net, ps, spec, Exact())
    ok = res.verdict == "Reachable"
    detail = res.verdict
    if ok:
        w = res.witness
        replayed = replay_witness(net, ps, res.skeleton, spec, w, 0).passed
        final = w.final_valuation()
        braking = all(steps[-1].location == "EBraking" for steps in w.components.values())
        equal = final["Train1.x"] == final["Train2.x"]
        ok = replayed and braking and equal
        detail = f"Reachable, replay {replayed}, positions {final['Train1.x']} and {final['Train2.x']}"
    params = default_params(2, "unsafe")
    m = margin(*params)
    # smallest integer gap that makes the margin positive
    gap = params[0].x0 - params[1].x0 - m + 1
    flipped = with_gap(params, 0, gap)
    after = check_cycle(flipped)[0]
    fixture_after = check(*load("cbtc_unsafe2_gap211", "cbtc_unsafe2_gap211", "cbtc_unsafe2_gap211")).verdict
    ok = ok and margin(*flipped) > 0 and after == "Unreachable" and fixture_after == "Unreachable"
    return ok, f"{detail}; margin {m}, gap {gap} gives {after}"


def monitor_discipline():
    recs = safe_records(16, 100)
    pulled = []

    def lines():
        for r in recs:
            pulled.append(time.perf_counter())
            yield format_record(r)

    verdicts, late = [], 0
    for v in monitor(lines(), 500):
        emitted = time.perf_counter()
        if (emitted - pulled[len(verdicts)]) * 1000 > 500:
            late += 1
        verdicts.append(v)
    results = [v.result for v in verdicts]
    ordered = [v.cycle for v in verdicts] == [r.cycle for r in recs]
    worst = max(v.latency_ms for v in verdicts)
    ok = results == ["Unreachable"] * 100 and ordered and late == 0
    return ok, (f"{results.count('Unreachable')} Unreachable, {results.count('DeadlineMiss')} DeadlineMiss, "
                f"in order {ordered}, {late} late, worst {worst:.1f} ms")


def _fixture_runs():
    for spec in sorted(FIXTURES.glob("*.spec")):
        stem = spec.stem
        model = FIXTURES / f"{stem.split('_unreachable')[0]}.lharv"
        yield stem, [str(model), str(model.with_suffix(".paths")), str(spec)]
    yield "relay_mismatch", [str(FIXTURES / "relay.lharv"), str(FIXTURES / "relay_mismatch.paths"),
                             str(FIXTURES / "relay.spec")]


def determinism(tmp=None):
    import tempfile
    tmp = Path(tmp or tempfile.mkdtemp())
    differ = []
    runs = 0
    for stem, files in _fixture_runs():
        outs = []
        for k in range(2):
            w, d = tmp / f"{stem}.{k}.witness", tmp / f"{stem}.{k}.lp"
            p = subprocess.run([sys.executable, "-m", "lharv", "check", *files, "--mode", "exact",
                                "--witness", str(w), "--dump-lp", str(d)], capture_output=True, cwd=ROOT)
            outs.append((p.returncode, p.stdout, w.read_bytes() if w.exists() else b"",
                         d.read_bytes() if d.exists() else b""))
        runs += 1
        if outs[0] != outs[1]:
            differ.append(stem)
    return not differ, f"{runs} fixtures, differing: {', '.join(differ) or 'none'}"


CRITERIA = [
    ("encoder golden rows", golden_rows),
    ("pipeline cross-validation", cross_validation),
    ("structural soundness", structural_soundness),
    ("train benchmark", cbtc_bench),
    ("collision detection", collision),
    ("monitor discipline", monitor_discipline),
    ("determinism", determinism),
]


def run(name, fn):
    ok, detail = fn()
    return ok, f"{'PASS' if ok else 'FAIL'} {name}: {detail}"


@pytest.mark.parametrize("name,fn", CRITERIA, ids=[n.replace(" ", "_") for n, _ in CRITERIA])
def test_criterion(name, fn, capsys):
    ok, line = run(name, fn)
    with capsys.disabled():
        print("\n" + line)
    assert ok, line


if __name__ == "__main__":
    results = []
    for n, f in CRITERIA:
        ok, line = run(n, f)
        print(line, flush=True)
        results.append(ok)
    sys.exit(0 if all(results) else 1)
