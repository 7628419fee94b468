"""End-to-end reachability check of one path set against one specification."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .encoder import LinearSystem, encode, targets_match
from .lp import Exact, Float, extract_witness, solve_feasibility
from .model import Network, validate_network
from .pathset import Inconsistent, PathSet, align_occurrences
from .replay import Witness, replay_witness
from .textio import ModelError


class InternalError(RuntimeError):
    """A solver answer failed its own cross-check."""


@dataclass(frozen=True)
class CheckResult:
    verdict: str  # "Reachable" | "Unreachable" | "Inconsistent"
    detail: str = ""
    system: Optional[LinearSystem] = None
    skeleton: object = None
    witness: Optional[Witness] = None
    method: str = ""

    @property
    def stats(self) -> tuple:
        return self.system.stats if self.system is not None else (0, 0)


def check(net: Network, ps: PathSet, spec, mode=Exact(), deadline=None, validate: bool = True) -> CheckResult:
    """Validate, align, encode, solve and replay.

    Raises :class:`ModelError` for an ill-formed network; every other
    outcome is a verdict.
    """
    if validate:
        diags = validate_network(net)
        if diags:
            raise ModelError(diags)
    skel = align_occurrences(ps, net)
    if isinstance(skel, Inconsistent):
        return CheckResult("Inconsistent", str(skel))
    if not targets_match(ps, spec):
        return CheckResult("Unreachable", "target locations differ from the paths' final locations",
                           skeleton=skel, method="structural")
    sys = encode(net, ps, skel, spec)
    return decide(net, ps, skel, spec, sys, mode, deadline)


def decide(net, ps, skel, spec, sys, mode, deadline=None, prepared=None) -> CheckResult:
    res = solve_feasibility(prepared if prepared is not None else sys, mode, deadline)
    if not res.feasible:
        return CheckResult("Unreachable", res.reason, sys, skel, method=res.method)
    w = extract_witness(sys, res.assignment, ps, skel)
    report = replay_witness(net, ps, skel, spec, w)
    if report.passed:
        return CheckResult("Reachable", "", sys, skel, w, res.method)
    if isinstance(mode, Float):
        # advisory answer did not replay; the exact backend decides
        return decide(net, ps, skel, spec, sys, Exact(), deadline, prepared)
    raise InternalError("exact witness failed replay: " + "; ".join(map(str, report.violations)))
