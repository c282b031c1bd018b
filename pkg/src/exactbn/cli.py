"""Command-line interface: learn, check, score.

learn writes the optimal network as text (one "VAR <- P1 P2" line per
variable plus a trailing score line), optionally a DOT rendering and a
per-layer stats CSV.  check reruns the learner against the in-memory
oracles and fails on any disagreement.  score re-prices an existing
network file against a dataset.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
import tempfile

from .bounds import network_score
from .dataset import load_csv, preprocess
from .errors import CycleError, DataError
from .oracle import DP_CAP, EXHAUSTIVE_CAP, dp_optimal, exhaustive_optimal
from .order_graph import learn
from .varset import bits

WORKDIR_ENV = "EXACTBN_WORKDIR"


def format_network(parents, names, score: float) -> str:
    lines = []
    for v, pm in enumerate(parents):
        ps = " ".join(names[u] for u in bits(pm))
        lines.append(f"{names[v]} <- {ps}".rstrip())
    lines.append(f"score: {score!r}")
    return "\n".join(lines) + "\n"


def parse_network(text: str, names) -> tuple[int, ...]:
    index = {name: i for i, name in enumerate(names)}
    parents = [0] * len(names)
    seen = set()
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("score:"):
            continue
        if "<-" not in line:
            raise DataError(f"bad network line: {line!r}")
        left, _, right = line.partition("<-")
        child = left.strip()
        if child not in index:
            raise DataError(f"unknown variable {child!r} in network file")
        v = index[child]
        if v in seen:
            raise DataError(f"duplicate line for variable {child!r}")
        seen.add(v)
        for tok in right.split():
            if tok not in index:
                raise DataError(f"unknown parent {tok!r} for {child!r}")
            parents[v] |= 1 << index[tok]
    return tuple(parents)


def format_dot(parents, names) -> str:
    lines = ["digraph network {"]
    for name in names:
        lines.append(f'  "{name}";')
    for v, pm in enumerate(parents):
        for u in bits(pm):
            lines.append(f'  "{names[u]}" -> "{names[v]}";')
    lines.append("}")
    return "\n".join(lines) + "\n"


def _add_data_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--input", required=True, help="delimited data file")
    p.add_argument("--delimiter", default=",", help="field delimiter (default ',')")
    p.add_argument("--missing", default="?", help="missing-value token (default '?')")
    p.add_argument("--no-header", action="store_true", help="file has no header row")
    p.add_argument(
        "--max-states",
        type=int,
        default=4,
        help="binarize columns with more distinct values than this (default 4)",
    )


def _add_search_args(p: argparse.ArgumentParser) -> None:
    p.add_argument(
        "--workdir",
        default=os.environ.get(WORKDIR_ENV),
        help=f"work directory for layer files (default ${WORKDIR_ENV} or a temp dir)",
    )
    p.add_argument(
        "--max-ram-nodes",
        type=int,
        default=1_000_000,
        help="in-RAM duplicate-table budget before spilling to disk (default 1e6)",
    )
    p.add_argument(
        "--upper",
        type=float,
        default=None,
        help="override the pruning upper bound ('inf' disables pruning)",
    )
    p.add_argument(
        "--no-parent-pruning",
        action="store_true",
        help="keep full parent graphs instead of pruning by order-graph presence",
    )
    p.add_argument("--beam", type=int, default=5, help="beam width of the bound search")
    p.add_argument("--max-iters", type=int, default=1000, help="bound search iteration cap")
    p.add_argument("--seed", type=int, default=0, help="bound search random seed")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="exactbn", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_learn = sub.add_parser("learn", help="learn the optimal network")
    _add_data_args(p_learn)
    _add_search_args(p_learn)
    p_learn.add_argument("--out", help="write the network text here (also printed)")
    p_learn.add_argument("--dot", help="write a DOT rendering here")
    p_learn.add_argument("--stats", help="write the per-layer stats CSV here")
    p_learn.add_argument("--data-meta", help="write dataset provenance JSON here")

    p_check = sub.add_parser("check", help="learn, then compare against the oracles")
    _add_data_args(p_check)
    _add_search_args(p_check)
    p_check.add_argument("--dp-cap", type=int, default=DP_CAP, help="oracle size limit")

    p_score = sub.add_parser("score", help="score an existing network file")
    _add_data_args(p_score)
    p_score.add_argument("--network", required=True, help="network text file")
    return parser


def _load_dataset(args):
    table = load_csv(
        args.input,
        delimiter=args.delimiter,
        missing_token=args.missing,
        has_header=not args.no_header,
    )
    return preprocess(table, max_states=args.max_states)


def _run_learn(args, data, workdir):
    return learn(
        data,
        workdir,
        max_size=args.max_ram_nodes,
        upper=args.upper,
        parent_pruning=not args.no_parent_pruning,
        beam=args.beam,
        max_iters=args.max_iters,
        seed=args.seed,
    )


def _with_workdir(args, fn):
    if args.workdir:
        os.makedirs(args.workdir, exist_ok=True)
        return fn(args.workdir)
    with tempfile.TemporaryDirectory(prefix="exactbn-") as tmp:
        return fn(tmp)


def cmd_learn(args) -> int:
    data = _load_dataset(args)
    if args.data_meta:
        with open(args.data_meta, "w") as f:
            f.write(data.metadata_json())

    def run(workdir):
        return _run_learn(args, data, workdir)

    net, stats = _with_workdir(args, run)
    text = format_network(net.parents, data.names, net.score)
    sys.stdout.write(text)
    if args.out:
        with open(args.out, "w") as f:
            f.write(text)
    if args.dot:
        with open(args.dot, "w") as f:
            f.write(format_dot(net.parents, data.names))
    if args.stats:
        with open(args.stats, "w") as f:
            f.write(stats.to_csv())
    return 0


def cmd_check(args) -> int:
    data = _load_dataset(args)
    if data.n > args.dp_cap:
        raise DataError(f"check needs n <= {args.dp_cap}, got {data.n}")

    def run(workdir):
        return _run_learn(args, data, workdir)

    net, _ = _with_workdir(args, run)
    results = {"learn": net.score, "dp": dp_optimal(data, cap=args.dp_cap).score}
    if data.n <= EXHAUSTIVE_CAP:
        results["exhaustive"] = exhaustive_optimal(data).score
    for name, value in results.items():
        print(f"{name}: {value!r}")
    ref = results["dp"]
    tol = 1e-9 * max(1.0, abs(ref))
    bad = [name for name, value in results.items() if not math.isfinite(value) or abs(value - ref) > tol]
    if bad:
        print(f"DISAGREEMENT beyond {tol:g}: {', '.join(bad)}", file=sys.stderr)
        return 1
    print("all scores agree")
    return 0


def cmd_score(args) -> int:
    data = _load_dataset(args)
    with open(args.network) as f:
        parents = parse_network(f.read(), data.names)
    print(repr(network_score(parents, data)))
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handlers = {"learn": cmd_learn, "check": cmd_check, "score": cmd_score}
    try:
        return handlers[args.command](args)
    except (DataError, CycleError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # corruption / search invariants
        print(f"internal error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
