"""Path-oriented reachability checking for networks of linear hybrid
automata whose transitions may read other components' variables."""

from .model import (Automaton, Constraint, Diagnostic, FlowRange, LinearExpression, Location, Network,
                    Relation, Transition, UnknownIdentifier, owner_of, participants_of, validate_network)
from .pathset import Inconsistent, Path, PathSet, SyncEvent, SyncSkeleton, align_occurrences, project
from .encoder import LinearSystem, LPVar, encode, stats
from .lp import Exact, Float, Feasible, Infeasible, extract_witness, solve_feasibility
from .replay import InstanceTooLarge, Witness, replay_witness, sample_oracle
from .textio import ModelError, ReachSpec, SourceSpan, parse_model, parse_pathset, parse_spec
from .checker import CheckResult, check

__version__ = "0.1.0"

__all__ = [
    "Automaton", "Constraint", "Diagnostic", "FlowRange", "LinearExpression", "Location", "Network",
    "Relation", "Transition", "UnknownIdentifier", "owner_of", "participants_of", "validate_network",
    "Inconsistent", "Path", "PathSet", "SyncEvent", "SyncSkeleton", "align_occurrences", "project",
    "LinearSystem", "LPVar", "encode", "stats",
    "Exact", "Float", "Feasible", "Infeasible", "extract_witness", "solve_feasibility",
    "InstanceTooLarge", "Witness", "replay_witness", "sample_oracle",
    "ModelError", "ReachSpec", "SourceSpan", "parse_model", "parse_pathset", "parse_spec",
    "CheckResult", "check",
]
