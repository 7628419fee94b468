"""Command-line front end.

Stable machine-readable lines go to standard output; diagnostics and
timings go to standard error.  Exit status: 0 Unreachable or clean run,
1 Reachable, 2 Inconsistent or ill-formed input, 3 internal error,
4 deadline exceeded before a verdict.
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

from . import cbtc
from .checker import InternalError, check
from .encoder import dump, encode, encode_base
from .lp import DeadlineExceeded, parse_mode
from .model import validate_network
from .pathset import Inconsistent, align_occurrences
from .replay import replay_witness
from .textio import (ModelError, emit_witness, format_model, format_pathset, format_record, format_spec,
                     format_verdict, parse_model, parse_number, parse_pathset, parse_spec, parse_witness)

EXIT = {"Unreachable": 0, "Reachable": 1, "Inconsistent": 2}
ILL_FORMED, INTERNAL, LATE = 2, 3, 4


def _err(*lines) -> None:
    for line in lines:
        print(line, file=sys.stderr)


def _read(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    return Path(path).read_text(encoding="utf-8")


def _mode(args):
    eps = float(parse_number(args.epsilon)) if args.epsilon is not None else None
    return parse_mode(args.mode, eps)


def _load(args, with_spec: bool = True):
    net = parse_model(_read(args.model), args.model)
    diags = validate_network(net)
    if diags:
        raise ModelError(diags)
    ps = parse_pathset(_read(args.paths), net, args.paths)
    spec = parse_spec(_read(args.spec), net, args.spec) if with_spec and args.spec else None
    return net, ps, spec


def _deadline(ms):
    if ms is None:
        return None
    stop = time.perf_counter() + ms / 1000.0
    return lambda: time.perf_counter() > stop


def cmd_check(args) -> int:
    net, ps, spec = _load(args)
    t0 = time.perf_counter()
    try:
        res = check(net, ps, spec, _mode(args), _deadline(args.deadline_ms), validate=False)
    except DeadlineExceeded:
        print("verdict DeadlineMiss")
        _err(f"no verdict within {args.deadline_ms} ms")
        return LATE
    elapsed = (time.perf_counter() - t0) * 1000.0
    print(f"verdict {res.verdict}")
    if res.system is not None:
        n, m = res.stats
        print(f"constraints {n}")
        print(f"variables {m}")
    if args.dump_lp and res.system is not None:
        Path(args.dump_lp).write_text(dump(res.system), encoding="utf-8")
    if args.witness and res.witness is not None:
        Path(args.witness).write_text(emit_witness(res.witness), encoding="utf-8")
    _err(f"method {res.method or '-'}; {elapsed:.1f} ms" + (f"; {res.detail}" if res.detail else ""))
    return EXIT[res.verdict]


def _skeleton_lines(skel) -> list:
    out = []
    for ev in skel.events:
        where = " ".join(f"{c}@{p}" for c, p in ev.positions.items())
        out.append(f"sync {ev.label} {ev.occurrence} {where}")
    return out


def cmd_explain(args) -> int:
    net, ps, spec = _load(args)
    skel = align_occurrences(ps, net)
    if isinstance(skel, Inconsistent):
        print(f"inconsistent {skel}")
        return EXIT["Inconsistent"]
    print(f"skeleton {len(skel.events)}")
    for line in _skeleton_lines(skel):
        print(line)
    sys_ = encode(net, ps, skel, spec) if spec is not None else encode_base(net, ps, skel)
    sys.stdout.write(dump(sys_))
    return 0


def cmd_replay(args) -> int:
    net, ps, spec = _load(args)
    skel = align_occurrences(ps, net)
    if isinstance(skel, Inconsistent):
        print(f"inconsistent {skel}")
        return EXIT["Inconsistent"]
    w = parse_witness(_read(args.witness_file), args.witness_file)
    report = replay_witness(net, ps, skel, spec, w, args.tol)
    print("replay " + ("pass" if report.passed else "fail"))
    for v in report.violations:
        print(f"violation {v}")
    return 0 if report.passed else 1


def cmd_bench(args) -> int:
    mode = _mode(args)
    print(f"{'n':>3} {'constraints':>11} {'variables':>9} {'median_ms':>9}  verdict")
    worst = 0
    for row in cbtc.bench(args.trains, args.reps, mode):
        print(f"{row.n:>3} {row.constraints:>11} {row.variables:>9} {row.median_ms:>9.1f}  {row.verdict}")
        sys.stdout.flush()
        worst = max(worst, EXIT[row.verdict])
    return worst


def cmd_monitor(args) -> int:
    mode = _mode(args)
    status = 0
    stream = sys.stdin if args.input == "-" else open(args.input, encoding="utf-8")
    try:
        for v in cbtc.monitor(stream, args.deadline_ms, mode):
            print(format_verdict(v))
            sys.stdout.flush()
            if v.result == "Malformed":
                status = max(status, ILL_FORMED)
                _err(f"cycle {v.cycle}: {v.detail}")
            elif v.result == "Reachable":
                status = max(status, EXIT["Reachable"])
    finally:
        if stream is not sys.stdin:
            stream.close()
    return status


def cmd_scenario(args) -> int:
    params = cbtc.default_params(args.trains, args.profile)
    if args.gap is not None:
        params = cbtc.with_gap(params, args.pair - 1, parse_number(args.gap))
    sc = cbtc.generate_scenario(params)
    if not 1 <= args.pair <= len(sc.pairs):
        raise ValueError(f"pair must be between 1 and {len(sc.pairs)}")
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    files = {".lharv": format_model(sc.network), ".paths": format_pathset(sc.paths),
             ".spec": format_spec(sc.spec(sc.pairs[args.pair - 1]))}
    for ext, text in files.items():
        Path(str(out) + ext).write_text(text, encoding="utf-8")
        print(f"wrote {out}{ext}")
    front, rear = params[args.pair - 1], params[args.pair]
    _err(f"margin {cbtc.margin(front, rear)} for pair {front.id}/{rear.id}")
    return 0


def cmd_records(args) -> int:
    for rec in cbtc.safe_records(args.trains, args.count, profile=args.profile):
        print(format_record(rec))
    return 0


def _int_list(text: str) -> list:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="lharv", description="Path-oriented reachability checking for linear "
                                 "hybrid automata with readable shared variables.")
    sub = ap.add_subparsers(dest="command", required=True)

    def solver_flags(p, default_mode="exact"):
        p.add_argument("--mode", choices=("exact", "float"), default=default_mode,
                       help="exact rational decision or advisory float solve (default: %(default)s)")
        p.add_argument("--epsilon", metavar="RAT", help="strict-row tightening in float mode (default 1e-6)")

    def model_args(p, spec_required=True):
        p.add_argument("model", help="network file (.lharv)")
        p.add_argument("paths", help="path set file (.paths)")
        if spec_required:
            p.add_argument("spec", help="reachability specification (.spec)")
        else:
            p.add_argument("spec", nargs="?", help="optional reachability specification (.spec)")

    p = sub.add_parser("check", help="decide whether the path set can reach the specification")
    model_args(p)
    solver_flags(p)
    p.add_argument("--deadline-ms", type=int, help="give up after this many milliseconds")
    p.add_argument("--witness", metavar="PATH", help="write the witness of a Reachable verdict here")
    p.add_argument("--dump-lp", metavar="PATH", help="write the serialized linear system here")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("explain", help="print the sync skeleton and the serialized linear system")
    model_args(p, spec_required=False)
    p.set_defaults(func=cmd_explain)

    p = sub.add_parser("replay", help="replay a witness file against the automata")
    model_args(p)
    p.add_argument("witness_file", metavar="witness", help="witness file")
    p.add_argument("--tol", type=float, default=0.0, help="tolerance for float witnesses (default 0)")
    p.set_defaults(func=cmd_replay)

    p = sub.add_parser("bench", help="time whole-cycle checks of the safe train profile")
    p.add_argument("--trains", type=_int_list, default=[8, 10, 12, 14, 16], metavar="N,N,...",
                   help="train counts (default 8,10,12,14,16)")
    p.add_argument("--reps", type=int, default=20, help="repetitions per train count (default 20)")
    solver_flags(p)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("monitor", help="check a stream of cycle records under a per-cycle deadline")
    p.add_argument("input", nargs="?", default="-", help="record file, or - for standard input")
    p.add_argument("--deadline-ms", type=int, default=500, help="per-cycle deadline (default 500)")
    solver_flags(p)
    p.set_defaults(func=cmd_monitor)

    p = sub.add_parser("scenario", help="write the train scenario of one parameter profile as text files")
    p.add_argument("--trains", type=int, default=2)
    p.add_argument("--profile", choices=("safe", "unsafe"), default="safe")
    p.add_argument("--pair", type=int, default=1, help="1-based adjacent pair for the specification")
    p.add_argument("--gap", metavar="RAT", help="set that pair's initial gap (trains behind move too)")
    p.add_argument("--out", required=True, help="output prefix; .lharv, .paths and .spec are appended")
    p.set_defaults(func=cmd_scenario)

    p = sub.add_parser("records", help="print cycle records (one JSON object per line)")
    p.add_argument("--trains", type=int, default=16)
    p.add_argument("--count", type=int, default=100)
    p.add_argument("--profile", choices=("safe", "unsafe"), default="safe")
    p.set_defaults(func=cmd_records)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ModelError as exc:
        _err(*(str(d) for d in exc.diagnostics))
        return ILL_FORMED
    except (OSError, ValueError) as exc:
        _err(f"error: {exc}")
        return ILL_FORMED
    except InternalError as exc:
        _err(f"internal error: {exc}")
        return INTERNAL
    except Exception as exc:  # pragma: no cover - last resort
        _err(f"internal error: {type(exc).__name__}: {exc}")
        return INTERNAL


if __name__ == "__main__":
    sys.exit(main())
