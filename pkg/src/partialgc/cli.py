"""Command-line entry point.

    partialgc assignment cyclic --m 4 --delta 2 -o a.txt
    partialgc order a.txt -o o.txt
    partialgc simulate-approx approx.cfg [--seed S] [--threads N] [--raw]
    partialgc simulate-exact exact.cfg
    partialgc lagrange-demo lagrange.cfg
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .assignment import (AssignmentMatrix, RegularGraphSpec, build_cyclic, build_regular_graph,
                         find_ramanujan_graph, ramanujan_bound, second_eigenvalue)
from .config import ConfigError, parse_config
from .errors import ConstructionFailedError, CoverageUnreachableError, PartialGCError
from .experiments import raw_csv, run_cluster, run_lagrange, summary_csv
from .ordering import chunk_ordering, q_max, q_max_lower_bound

EXIT_CONFIG = 2
EXIT_UNREACHABLE = 3

_KINDS_FOR = {
    "simulate-approx": ("approx-mse", "ordering-compare"),
    "simulate-exact": ("exact-completion", "ordering-compare"),
    "lagrange-demo": ("lagrange",),
}


def _err(msg: str) -> None:
    print(f"partialgc: error: {msg}", file=sys.stderr)


def _load_config(path: str, command: str, args):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    cfg = parse_config(text)
    if cfg.experiment not in _KINDS_FOR[command]:
        raise ConfigError(f"{command} cannot run experiment {cfg.experiment!r}")
    return cfg.with_overrides(seed=args.seed, raw=args.raw)


def _write(path: str, text: str) -> None:
    out = Path(path)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(text)


def cmd_assignment(args) -> int:
    if args.kind == "cyclic":
        a = build_cyclic(args.m, args.delta)
    else:
        if args.ramanujan:
            a, seed, lam = find_ramanujan_graph(args.m, args.delta, args.graph_seed)
        else:
            seed = args.graph_seed
            a = build_regular_graph(RegularGraphSpec(args.m, args.delta, seed))
            lam = second_eigenvalue(a)
        bound = ramanujan_bound(args.delta)
        print(f"graph_seed={seed} lambda2={lam:.6f} bound={bound:.6f}")
        if lam >= bound:
            print(f"warning: lambda2 >= 2*sqrt(degree-1); graph is not Ramanujan", file=sys.stderr)
    text = a.to_text()
    if args.output:
        _write(args.output, text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_order(args) -> int:
    try:
        a = AssignmentMatrix.from_text(Path(args.assignment).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read {args.assignment}: {exc.strerror}") from None
    o, _ = chunk_ordering(a)
    d = a.regular_degree()
    q = q_max(a, o)
    rowsum = int(o.rank_matrix().sum(axis=1).max())
    if args.output:
        _write(args.output, o.to_text())
    else:
        sys.stdout.write(o.to_text())
    optimal = q == q_max_lower_bound(a.n_workers, d)
    print(f"qmax={q} rowsum={rowsum} optimal={'true' if optimal else 'false'}")
    return 0


def cmd_cluster(args) -> int:
    cfg = _load_config(args.config, args.command, args)
    res = run_cluster(cfg, exact=args.command == "simulate-exact", threads=args.threads)
    for config_id, setup in res.setups.items():
        if setup.second_eigenvalue is not None:
            bound = ramanujan_bound(cfg.sim.degree)
            print(f"{config_id} graph_seed={setup.graph_seed} lambda2={setup.second_eigenvalue:.6f} "
                  f"bound={bound:.6f} qmax={setup.q_max}")
            if setup.second_eigenvalue >= bound:
                print(f"warning: {config_id}: lambda2 >= 2*sqrt(degree-1)", file=sys.stderr)
        else:
            print(f"{config_id} qmax={setup.q_max}")
    _write(cfg.output, summary_csv(res))
    if cfg.raw:
        _write(cfg.raw_output, raw_csv(res))
    for line in res.lines:
        print(line)
    return 0


def cmd_lagrange(args) -> int:
    cfg = _load_config(args.config, args.command, args)
    text, lines = run_lagrange(cfg)
    _write(cfg.output, text)
    for line in lines:
        print(line)
    return 0


def _global_flags(suppress: bool) -> argparse.ArgumentParser:
    # Subcommands re-declare the flags with suppressed defaults so that a flag
    # given before the subcommand is not reset by the subparser.
    p = argparse.ArgumentParser(add_help=False)
    dflt = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    p.add_argument("--seed", type=int, default=dflt(None), help="override the config's master seed")
    p.add_argument("--threads", type=int, default=dflt(1), help="worker threads for trials")
    p.add_argument("--raw", action="store_true", default=dflt(False), help="also write per-trial CSV")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _global_flags(suppress=True)
    parser = argparse.ArgumentParser(prog="partialgc", parents=[_global_flags(suppress=False)],
                                     description="Partial-straggler gradient coding experiments")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("assignment", parents=[common], help="write an assignment file")
    p.add_argument("kind", choices=["cyclic", "regular-graph"])
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--delta", type=int, required=True, help="load factor / graph degree")
    p.add_argument("--graph-seed", type=int, default=0)
    p.add_argument("--ramanujan", action="store_true", help="search seeds for a Ramanujan graph")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_assignment)

    p = sub.add_parser("order", parents=[common], help="optimal chunk ordering of an assignment file")
    p.add_argument("assignment")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_order)

    for name in ("simulate-approx", "simulate-exact"):
        p = sub.add_parser(name, parents=[common])
        p.add_argument("config")
        p.set_defaults(func=cmd_cluster)

    p = sub.add_parser("lagrange-demo", parents=[common])
    p.add_argument("config")
    p.set_defaults(func=cmd_lagrange)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CoverageUnreachableError as exc:
        _err(str(exc))
        return EXIT_UNREACHABLE
    except (ConfigError, ConstructionFailedError, PartialGCError) as exc:
        _err(str(exc))
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
