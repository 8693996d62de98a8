"""``latfold`` command line.

Exit codes: 0 success, 1 verification mismatch, 2 invalid input (a JSON
object with ``error`` and ``message`` goes to standard error).  Settings
resolve as flags > ``--config`` JSON file > built-in defaults.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Dict, List, Optional

from . import __version__
from .encoders import nested_shell, turn_ancilla, turn_circuit
from .encoders.base import EncodedProblem
from .errors import LatfoldError
from .lattice import CUBIC, LATTICES, PLANAR, Fold, fold_energy, fold_record, format_fold, saw_enumerate
from .pbp import format_coefficient, parse_coefficient
from .potentials import interaction_matrix, load_potential
from .reduction import reduce_problem
from .render import to_svg, to_text
from .solve import (
    Schedule,
    exhaustive_solve,
    milp_solve,
    run_pipeline,
    solve_exact,
    split_subproblems,
    stats,
)

ENCODINGS = (turn_ancilla.NAME, turn_circuit.NAME, nested_shell.NAME)


class UsageError(LatfoldError):
    pass


def _num(x) -> str:
    return format_coefficient(x) if x is not None else "None"


def _json_num(x):
    if x is None:
        return None
    s = format_coefficient(x)
    return int(s) if "/" not in s and "." not in s else (float(x) if "/" in s else float(s))


def _emit(args, record: Dict[str, object], lines: List[str]) -> None:
    if args.format == "json":
        print(json.dumps(record, sort_keys=True, indent=2))
    else:
        for line in lines:
            print(line)


def _write(path: Optional[str], text: str) -> None:
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _read_problem(path: str) -> EncodedProblem:
    text = sys.stdin.read() if path == "-" else Path(path).read_text()
    return EncodedProblem.from_text(text)


def _penalties(items: Optional[List[str]]) -> Dict[str, object]:
    out = {}
    for item in items or ():
        key, sep, value = item.partition("=")
        if not sep:
            raise UsageError(f"penalty override {item!r} is not key=value")
        key = key if key.startswith("lambda_") else f"lambda_{key}"
        out[key] = parse_coefficient(value)
    return out


def build_problem(sequence: str, lattice: str, encoding: str, potential: str, penalties=None, all_flags=False):
    if encoding not in ENCODINGS:
        raise UsageError(f"unknown encoding {encoding!r}")
    if lattice not in LATTICES:
        raise UsageError(f"unknown lattice {lattice!r}")
    if encoding == nested_shell.NAME and lattice != CUBIC:
        raise UsageError("the nested-shell encoding is cubic only")
    table = load_potential(potential)
    P = interaction_matrix(sequence, table, lattice)
    if encoding == turn_ancilla.NAME:
        return turn_ancilla.encode(sequence, P, penalties, lattice, all_flags=all_flags)
    if encoding == turn_circuit.NAME:
        return turn_circuit.encode(sequence, P, penalties, lattice)
    return nested_shell.encode(sequence, P, penalties)


def _parse_bits(s: str, n: int) -> List[int]:
    s = s.strip()
    if not s or set(s) - {"0", "1"}:
        raise UsageError(f"bitstring {s!r} must consist of 0 and 1")
    if len(s) != n:
        raise UsageError(f"bitstring has {len(s)} bits, problem has {n} variables")
    return [int(c) for c in s]


def _fold_summary(problem: EncodedProblem, bits) -> Dict[str, object]:
    fold = problem.decode(bits)
    if fold is None:
        return {"bits": "".join(map(str, bits)), "valid": False, "fold": None}
    rec = fold_record(fold, problem.interactions) if problem.interactions is not None else None
    return {"bits": "".join(map(str, bits)), "valid": fold.is_valid, "fold": rec}


# -- subcommands ------------------------------------------------------------


def cmd_encode(args) -> int:
    prob = build_problem(
        args.sequence, args.lattice, args.encoding, args.potential, _penalties(args.penalty), args.all_flags
    )
    _write(args.output, prob.to_text())
    if args.output not in (None, "-"):
        rec = {"output": args.output, "num_vars": prob.num_vars, "roles": prob.registry.counts()}
        _emit(args, rec, [f"wrote {args.output}: {prob.num_vars} variables {prob.registry.counts()}"])
    return 0


def cmd_reduce(args) -> int:
    prob = _read_problem(args.problem)
    red = reduce_problem(prob)
    _write(args.output, red.to_text())
    return 0


def cmd_solve(args) -> int:
    prob = _read_problem(args.problem)
    report: Dict[str, object] = {"encoder": prob.encoder, "sequence": prob.sequence, "num_vars": prob.num_vars}
    lines = []
    if args.solver in ("exhaustive", "milp", "exact"):
        subs = split_subproblems(prob, args.split)
        fn = {"exhaustive": exhaustive_solve, "milp": milp_solve, "exact": solve_exact}[args.solver]
        results = [(s.id, fn(prob, fixed=s.fixed or None)) for s in subs]
        best = min(r.energy for _, r in results)
        winners = [(sid, r) for sid, r in results if r.energy == best]
        bits = winners[0][1].argmin[0]
        report.update(
            {
                "solver": args.solver,
                "split": args.split,
                "energy": _json_num(best),
                "subproblem_minima": {str(sid): _json_num(r.energy) for sid, r in results},
                "best": _fold_summary(prob, bits),
            }
        )
        lines.append(f"minimum energy {_num(best)}")
        lines.append(f"best bits {''.join(map(str, bits))}")
        if args.dump:
            _write(args.dump, "".join(f"{sid} {''.join(map(str, r.argmin[0]))} {_num(r.energy)}\n" for sid, r in results))
    elif args.solver == "sa":
        target = parse_coefficient(args.target) if args.target is not None else None
        res = run_pipeline(
            prob,
            k=args.split,
            samples=args.samples,
            max_samples=args.max_samples or args.samples << args.split,
            target=target,
            schedule=Schedule(sweeps=args.sweeps),
            seed=args.seed,
            descent=args.descent,
            t_sample_us=args.t_sample_us,
            workers=args.workers,
        )
        report.update(
            {
                "solver": "sa",
                "split": args.split,
                "energy": _json_num(res.best_energy),
                "best": _fold_summary(prob, res.best.bits),
                "stats": res.stats.report(),
            }
        )
        lines.append(f"best energy {_num(res.best_energy)}")
        lines.append(f"best bits {res.best.bitstring}")
        for k, v in res.stats.report().items():
            lines.append(f"{k} {v}")
        if args.dump:
            _write(args.dump, res.samples.dump())
    else:
        raise UsageError(f"unknown solver {args.solver!r}")
    fold = report["best"]["fold"]
    if fold is not None:
        lines.append(f"fold energy {fold['energy']}")
    _emit(args, report, lines)
    return 0


def cmd_decode(args) -> int:
    prob = _read_problem(args.problem)
    raw = list(args.bits or [])
    if args.samples:
        for line in Path(args.samples).read_text().splitlines():
            parts = line.split()
            if parts:
                raw.append(parts[1] if len(parts) >= 2 else parts[0])
    if not raw:
        raise UsageError("no bitstrings given (use --bits or --samples)")
    records = []
    lines = []
    for s in raw:
        bits = _parse_bits(s, prob.num_vars)
        summary = _fold_summary(prob, bits)
        summary["energy"] = _json_num(prob.polynomial.evaluate(bits))
        records.append(summary)
        if summary["fold"] is None:
            lines.append(f"{s} no-fold hamiltonian {_num(prob.polynomial.evaluate(bits))}")
        else:
            lines.append(format_fold(summary["fold"]).rstrip() + f"\nvalid {summary['valid']}")
    _emit(args, {"records": records}, lines)
    return 0


def cmd_verify(args) -> int:
    prob = build_problem(args.sequence, args.lattice, args.encoding, args.potential, _penalties(args.penalty))
    P = prob.interactions
    oracle = saw_enumerate(args.sequence, P, args.lattice)
    work = prob
    if args.encoding == turn_circuit.NAME and args.reduced:
        work = reduce_problem(prob)
    res = solve_exact(work)
    fold = work.decode(res.argmin[0])
    fold_ok = fold is not None and fold.is_valid and fold_energy(fold, P) == oracle.energy
    ok = res.energy == oracle.energy and fold_ok
    rec = {
        "sequence": args.sequence,
        "encoding": args.encoding,
        "lattice": args.lattice,
        "encoder_energy": _json_num(res.energy),
        "oracle_energy": _json_num(oracle.energy),
        "method": res.method,
        "decoded_valid": fold_ok,
        "result": "PASS" if ok else "FAIL",
    }
    lines = [
        f"{'encoder':<8} {_num(res.energy):>12}  ({args.encoding}, {res.method})",
        f"{'oracle':<8} {_num(oracle.energy):>12}  (self-avoiding walk enumeration)",
        "PASS" if ok else "FAIL",
    ]
    _emit(args, rec, lines)
    return 0 if ok else 1


def cmd_stats(args) -> int:
    st = stats(args.hits, args.total, args.t_sample_us, strict=False)
    rep = st.report()
    _emit(args, rep, [f"{k} {v}" for k, v in rep.items()])
    return 0


def cmd_render(args) -> int:
    if args.problem:
        prob = _read_problem(args.problem)
        if not args.bits:
            raise UsageError("render from a problem needs --bits")
        fold = prob.decode(_parse_bits(args.bits, prob.num_vars))
        if fold is None:
            raise UsageError("bitstring does not decode to a fold")
        P = prob.interactions
    elif args.fold:
        rec = json.loads(Path(args.fold).read_text())
        fold = Fold(tuple(tuple(c) for c in rec["coords"]), rec["sequence"])
        P = None
    else:
        raise UsageError("render needs a problem file with --bits, or --fold")
    if args.ascii:
        _write(args.output, to_text(fold))
    else:
        _write(args.output, to_svg(fold, P, title=fold.sequence))
    return 0


# -- parser -----------------------------------------------------------------


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.add_argument("--config", help="JSON job configuration (flags take precedence)")
    p.add_argument("--workers", type=int, default=1)


def _job(p: argparse.ArgumentParser) -> None:
    p.add_argument("--sequence", required=False)
    p.add_argument("--lattice", choices=LATTICES, default=CUBIC)
    p.add_argument("--encoding", choices=ENCODINGS, default=turn_ancilla.NAME)
    p.add_argument("--potential", default="hp", help="hp, mj, mj:<file> or a table path")
    p.add_argument("--penalty", action="append", metavar="NAME=VALUE", help="override a penalty weight")


def make_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="latfold", description="Lattice protein folding as binary optimization")
    ap.add_argument("--version", action="version", version=f"latfold {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("encode", help="build a problem file")
    _common(p)
    _job(p)
    p.add_argument("--all-flags", action="store_true", help="allocate interaction flags for zero-energy pairs too")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("reduce", help="quadratize a problem file")
    _common(p)
    p.add_argument("problem")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_reduce)

    p = sub.add_parser("solve", help="find low-energy assignments")
    _common(p)
    p.add_argument("problem")
    p.add_argument("--solver", choices=("exact", "exhaustive", "milp", "sa"), default="exact")
    p.add_argument("--split", type=int, default=0, help="number of turn bits to fix")
    p.add_argument("--samples", type=int, default=1000, help="annealing batch size per subproblem")
    p.add_argument("--max-samples", type=int, default=None, help="sample budget (default: one batch per subproblem)")
    p.add_argument("--target", help="stop once this energy is reached")
    p.add_argument("--sweeps", type=int, default=64)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--t-sample-us", type=float, default=20.0)
    p.add_argument("--descent", action=argparse.BooleanOptionalAction, default=True)
    p.add_argument("--dump", help="write samples as 'subproblem bitstring energy' lines")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("decode", help="turn bitstrings into folds")
    _common(p)
    p.add_argument("problem")
    p.add_argument("--bits", action="append")
    p.add_argument("--samples", help="sample dump file")
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("verify", help="compare an encoding's exact minimum with the walk oracle")
    _common(p)
    _job(p)
    p.add_argument("--reduced", action=argparse.BooleanOptionalAction, default=True,
                   help="solve the quadratized turn-circuit problem")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("stats", help="p_s, R99 and TTS from hit counts")
    _common(p)
    p.add_argument("--hits", type=int, required=True)
    p.add_argument("--total", type=int, required=True)
    p.add_argument("--t-sample-us", type=float, default=20.0)
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("render", help="draw a fold")
    _common(p)
    p.add_argument("problem", nargs="?")
    p.add_argument("--bits")
    p.add_argument("--fold", help="fold record JSON (as printed by decode --format json)")
    p.add_argument("--ascii", action="store_true")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_render)
    return ap


def _apply_config(ap: argparse.ArgumentParser, argv: List[str]) -> argparse.Namespace:
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if known.config:
        try:
            cfg = json.loads(Path(known.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {known.config}: {exc}") from None
        if not isinstance(cfg, dict):
            raise UsageError("config must be a JSON object")
        cfg = {k.replace("-", "_"): v for k, v in cfg.items()}
        if "penalties" in cfg:
            cfg["penalty"] = [f"{k}={v}" for k, v in cfg.pop("penalties").items()]
        for action in ap._subparsers._group_actions:  # type: ignore[union-attr]
            for sp in action.choices.values():
                sp.set_defaults(**cfg)
    return ap.parse_args(argv)


def _fail(exc: BaseException, code: int = 2) -> int:
    sys.stderr.write(json.dumps({"error": type(exc).__name__, "message": str(exc)}) + "\n")
    return code


def main(argv: Optional[List[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    ap = make_parser()
    try:
        args = _apply_config(ap, argv)
    except LatfoldError as exc:
        return _fail(exc)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        if getattr(args, "sequence", "x") is None and args.command in ("encode", "verify"):
            raise UsageError("--sequence is required (flag or config)")
        return args.func(args)
    except (LatfoldError, ValueError, KeyError, OSError) as exc:
        return _fail(exc)


if __name__ == "__main__":
    sys.exit(main())
