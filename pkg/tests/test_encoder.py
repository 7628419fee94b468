import pytest

from conftest import load
from lharv.encoder import EncodingError, LPVar, dump, encode, encode_base, stats
from lharv.pathset import align_occurrences
from lharv.textio import ReachSpec

# Positions are 0-based: location t3 of T is T position 2, and so on.
GOLDEN = [
    # flow at t3: 0.9*delta <= exit - entry <= 1.1*delta
    "flow: 0.9*delta(T,2) + entry(T,2,t) - exit(T,2,t) <= 0",
    "flow: 1.1*delta(T,2) + entry(T,2,t) - exit(T,2,t) >= 0",
    # guard t < 5 on the transition leaving t4
    "guard: exit(T,3,t) < 5",
    # reset t := 2 entering t3
    "reset: entry(T,2,t) = 2",
    # b fires after S spent s1 and s2, and T spent t1
    "sync: delta(S,0) + delta(S,1) - delta(T,0) = 0",
    # T reads s and k on e, sampled at their owners' exits at that event
    "guard: exit(S,2,s) + exit(T,2,t) - exit(K,1,k) > 0",
    # equal total time
    "total: delta(S,0) + delta(S,1) + delta(S,2) + delta(S,3) + delta(S,4)"
    " - delta(T,0) - delta(T,1) - delta(T,2) - delta(T,3) - delta(T,4) = 0",
    "total: delta(S,0) + delta(S,1) + delta(S,2) + delta(S,3) + delta(S,4)"
    " - delta(K,0) - delta(K,1) - delta(K,2) - delta(K,3) - delta(K,4) = 0",
    # the specification at the final exits
    "spec: exit(S,4,s) + 2*exit(T,4,t) - 3*exit(K,4,k) = 0",
]


@pytest.fixture
def relay_system(relay):
    net, ps, spec = relay
    sk = align_occurrences(ps, net)
    return encode(net, ps, sk, spec)


@pytest.mark.parametrize("row", GOLDEN)
def test_relay_golden_rows(relay_system, row):
    lines = dump(relay_system).splitlines()
    assert row in lines


def test_relay_counts(relay_system):
    # 3 components x 5 positions: 15 dwells, 15 entries, 15 exits
    assert stats(relay_system) == (69, 45)
    fam = relay_system.families
    assert fam.count("spec") == 1
    assert fam.count("total") == 2
    assert fam.count("sync") == 4  # b: 1 pair, e: 2 pairs, f: 1 pair
    assert fam.count("guard") == 2


def test_variable_order(relay_system):
    v = relay_system.variables
    assert v[:3] == (LPVar("dwell", "S", 0), LPVar("entry", "S", 0, "s"), LPVar("exit", "S", 0, "s"))
    comps = [x.component for x in v]
    assert comps == sorted(comps, key=["S", "T", "K"].index)


def test_dump_is_deterministic(relay):
    net, ps, spec = relay
    a = dump(encode(net, ps, align_occurrences(ps, net), spec))
    net2, ps2, spec2 = load("relay", "relay", "relay")
    b = dump(encode(net2, ps2, align_occurrences(ps2, net2), spec2))
    assert a == b


def test_mismatched_targets_refused(relay):
    net, ps, _ = relay
    bad = ReachSpec({"S": "s4"})
    with pytest.raises(EncodingError):
        encode(net, ps, align_occurrences(ps, net), bad)


def test_rows_lead_with_positive_coefficient(relay_system):
    for line in dump(relay_system).splitlines():
        if ": " in line:
            assert not line.split(": ", 1)[1].startswith("-"), line


def test_base_has_no_spec_rows(relay):
    net, ps, _ = relay
    base = encode_base(net, ps, align_occurrences(ps, net))
    assert "spec" not in base.families
    assert len(base.constraints) == 68
