"""Command-line front end.

Subcommands: grow, analyze, tau-table, tau-sample, monte-carlo, encode,
channel, decode, dump-tree. Reports are emitted as JSON, aligned text, or
CSV (table commands). Exit codes: 0 success, 2 usage error, 3 BlockError
while decoding, 4 node/depth budget exceeded.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import codec, harness, process
from .erasure import BecChannel
from .tree import LimitExceededError, deserialize_tree, select_utilized, serialize_tree

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_BLOCK_ERROR = 3
EXIT_LIMIT = 4


class UsageError(ValueError):
    pass


def _resolve_params(args) -> tuple[int, float]:
    """Apply the coupling convention to (--n, --eps)."""
    has_n = args.n is not None
    has_eps = args.eps is not None
    if args.couple == "theorem1":
        if not has_eps or has_n:
            raise UsageError("--couple theorem1 takes --eps only; n is derived")
        return harness.depth_for_epsilon(args.eps), args.eps
    if args.couple == "appendix":
        if not has_n or has_eps:
            raise UsageError("--couple appendix takes --n only; eps is derived")
        return args.n, harness.epsilon_for_depth(args.n)
    if not (has_n and has_eps):
        raise UsageError("give both --n and --eps, or pick a --couple convention")
    return args.n, args.eps


def _add_param_flags(p: argparse.ArgumentParser, with_couple: bool = True):
    p.add_argument("--z", type=float, default=harness.DEFAULT_Z_ROOT,
                   help="root erasure probability (default: capacity .618 channel)")
    p.add_argument("--n", type=int, default=None, help="target depth")
    p.add_argument("--eps", type=float, default=None, help="pruning parameter")
    if with_couple:
        p.add_argument("--couple", choices=["theorem1", "appendix"], default=None,
                       help="derive the missing parameter: theorem1 sets "
                            "n=ceil(-5*log2(eps)); appendix sets eps=2^(-n/5)")


def _emit(args, payload: dict, text_lines: list[str]):
    if args.format == "json":
        print(json.dumps(payload, sort_keys=True, indent=2))
    else:
        print("\n".join(text_lines))


def _load_spec(path: str):
    with open(path, "r", encoding="utf-8") as fh:
        tree = deserialize_tree(fh.read())
    return select_utilized(tree)


def cmd_grow(args) -> int:
    n, eps = _resolve_params(args)
    spec = harness.build_spec(args.z, n, eps)
    text = serialize_tree(spec.tree)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_analyze(args) -> int:
    if args.tree:
        spec = _load_spec(args.tree)
        n, eps = spec.tree.n, spec.tree.epsilon
        rep = harness.analyze(spec.tree.z_root, n, eps)
    else:
        n, eps = _resolve_params(args)
        rep = harness.analyze(args.z, n, eps)
    d = rep.to_dict()
    lines = [
        f"z_root          {rep.z_root!r}",
        f"n               {rep.n}",
        f"epsilon         {rep.epsilon!r}",
        f"block length N  {rep.block_length}",
        f"message bits K  {rep.message_length}",
        f"rate R          {rep.rate!r}",
        f"error bound P   {rep.error_bound!r}",
        f"E[tau]          {rep.expected_tau!r}",
        f"devices N*E[tau] {rep.device_count!r}",
        f"check N=eps^-5  N={rep.block_length} eps^-5={rep.coupled_block_length!r}",
        f"check P<=eps    {'pass' if rep.error_bound_ok else 'FAIL'}",
        f"check R>=I-eps  {rep.rate_flag} (capacity {rep.capacity!r})",
        f"check R(1-eps*2^-n)<=I  {'pass' if rep.rate_conservation_ok else 'FAIL'}",
    ]
    _emit(args, d, lines)
    return EXIT_OK


def cmd_tau_table(args) -> int:
    rows = harness.tau_table(args.z, args.n_max)
    if args.format == "json":
        print(json.dumps({"z_root": args.z, "rows": rows}, sort_keys=True))
    elif args.format == "csv":
        print("n,expected_tau")
        for n, et in rows:
            print(f"{n},{et!r}")
    else:
        for n, et in rows:
            print(f"{n:3d}  {et!r}")
    return EXIT_OK


def cmd_tau_sample(args) -> int:
    n, eps = _resolve_params(args)
    stats = process.sample_tau_mean(args.z, n, eps, trials=args.trials, seed=args.seed)
    payload = {"z_root": args.z, "n": n, "epsilon": eps, "mean": stats.mean,
               "stderr": stats.stderr, "trials": stats.trials, "seed": stats.seed}
    _emit(args, payload, [
        f"n {n}  trials {stats.trials}  seed {stats.seed}",
        f"sample mean tau {stats.mean!r}  stderr {stats.stderr!r}",
    ])
    return EXIT_OK


def cmd_monte_carlo(args) -> int:
    n, eps = _resolve_params(args)
    rep = harness.run_monte_carlo(args.z, n, eps, trials=args.trials, seed=args.seed)
    frac = rep.block_errors / rep.blocks_sent if rep.blocks_sent else 0.0
    _emit(args, rep.to_dict(), [
        f"N {rep.block_length}  K {rep.message_length}  R {rep.exact_rate!r}",
        f"blocks {rep.blocks_sent}  block errors {rep.block_errors}  "
        f"fraction {frac!r}  bound {rep.error_bound!r}",
        f"E[tau] {rep.expected_tau!r}  devices {rep.device_count!r}",
        f"seed {rep.seed}  wall time/bit {rep.wall_time_per_bit!r}",
    ])
    return EXIT_OK


def cmd_encode(args) -> int:
    spec = _load_spec(args.tree)
    k = spec.params.message_length
    with open(args.infile, "rb") as fh:
        bits = codec.unpack_bits(fh.read(), k)
    frame = codec.encode(spec, bits)
    with open(args.out, "wb") as fh:
        fh.write(codec.pack_bits(frame))
    return EXIT_OK


def cmd_channel(args) -> int:
    spec = _load_spec(args.tree)
    n_bits = spec.params.block_length
    with open(args.infile, "rb") as fh:
        bits = codec.unpack_bits(fh.read(), n_bits)
    rx = BecChannel(args.z, seed=args.seed).transmit_frame(bits)
    with open(args.out, "wb") as fh:
        fh.write(codec.pack_symbols(rx))
    return EXIT_OK


def cmd_decode(args) -> int:
    spec = _load_spec(args.tree)
    with open(args.infile, "rb") as fh:
        rx = codec.unpack_symbols(fh.read(), spec.params.block_length)
    try:
        msg = codec.decode(spec, rx)
    except codec.BlockError as exc:
        print(f"block error: {exc}", file=sys.stderr)
        return EXIT_BLOCK_ERROR
    with open(args.out, "wb") as fh:
        fh.write(codec.pack_bits(msg))
    return EXIT_OK


def cmd_dump_tree(args) -> int:
    if args.tree:
        spec = _load_spec(args.tree)
    else:
        n, eps = _resolve_params(args)
        spec = harness.build_spec(args.z, n, eps)
    tree = spec.tree
    order = tree.preorder()
    rows = [
        {
            "path": tree.path_id(int(i)),
            "depth": int(tree.depth[i]),
            "z": float(tree.z[i]),
            "leaf": bool(tree.leaf_mask[i]),
            "utilized": bool(spec.utilized_mask[i]),
        }
        for i in order
    ]
    if args.format == "json":
        print(json.dumps(rows))
    else:
        print("path,depth,z,leaf,utilized")
        for r in rows:
            print(f"{r['path']},{r['depth']},{r['z']!r},"
                  f"{int(r['leaf'])},{int(r['utilized'])}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="prunedpolar",
        description="Pruned polar coding on binary erasure channels",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("grow", help="grow a tree and write it as text")
    _add_param_flags(p)
    p.add_argument("--out", default=None, help="tree file (default: stdout)")
    p.set_defaults(func=cmd_grow)

    p = sub.add_parser("analyze", help="code parameters and inequality checks")
    _add_param_flags(p)
    p.add_argument("--tree", default=None, help="analyze an existing tree file")
    p.add_argument("--format", choices=["json", "text"], default="text")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("tau-table", help="exact E[tau] for n=0..n_max, eps=2^(-n/5)")
    p.add_argument("--z", type=float, default=harness.DEFAULT_Z_ROOT)
    p.add_argument("--n-max", type=int, default=harness.EXACT_DEPTH_BUDGET)
    p.add_argument("--format", choices=["json", "text", "csv"], default="text")
    p.set_defaults(func=cmd_tau_table)

    p = sub.add_parser("tau-sample", help="sampled mean of tau (any depth)")
    _add_param_flags(p)
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--format", choices=["json", "text"], default="text")
    p.set_defaults(func=cmd_tau_sample)

    p = sub.add_parser("monte-carlo", help="encode -> BEC -> decode over many blocks")
    _add_param_flags(p)
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--format", choices=["json", "text"], default="text")
    p.set_defaults(func=cmd_monte_carlo)

    p = sub.add_parser("encode", help="message file -> frame file (bit-packed)")
    p.add_argument("--tree", required=True)
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser(
        "channel",
        help="push a frame file through a BEC: bit-packed in, 2-bit symbols out "
             "(--z 0 is the lossless pipe)",
    )
    p.add_argument("--tree", required=True)
    p.add_argument("--z", type=float, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_channel)

    p = sub.add_parser("decode", help="received-frame file -> message file")
    p.add_argument("--tree", required=True)
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("dump-tree", help="per-node data export (csv or json)")
    _add_param_flags(p)
    p.add_argument("--tree", default=None)
    p.add_argument("--format", choices=["json", "csv"], default="csv")
    p.set_defaults(func=cmd_dump_tree)

    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except LimitExceededError as exc:
        print(f"limit exceeded: {exc}", file=sys.stderr)
        return EXIT_LIMIT
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
