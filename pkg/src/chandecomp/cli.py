"""Command-line interface: ``chandecomp {gen,decompose,verify,classify,bench}``.

Exit codes: 0 success or threshold met, 1 threshold missed, 2 usage error,
3 I/O or parse error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
import time

import numpy as np

from . import ansatz
from .channel import classify_extremality, random_channel, trace_channel
from .exceptions import CapabilityError, FileFormatError, ValidationError

EXIT_OK, EXIT_MISSED, EXIT_USAGE, EXIT_IO = 0, 1, 2, 3

BENCH_COLUMNS = [
    "shape", "family", "param_count_total", "channels",
    "min_error", "median_error", "max_error", "mean_evals", "wall_time_s", "note",
]

log = logging.getLogger("chandecomp")


class _UsageError(Exception):
    pass


def _family(text):
    try:
        return ansatz.normalize_family(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def _shape_list(text):
    shapes = []
    for item in filter(None, (s.strip() for s in text.split(","))):
        try:
            n, m = (int(v) for v in item.lower().split("x"))
        except ValueError:
            raise argparse.ArgumentTypeError(f"bad shape {item!r}, expected NxM") from None
        shapes.append((n, m))
    return shapes


def _family_list(text):
    return [_family(s.strip()) for s in text.split(",") if s.strip()]


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return v


def _write_text(text, out):
    from .files import _atomic_text

    if out is None:
        sys.stdout.write(text)
    else:
        _atomic_text(text, out)


def cmd_gen(args):
    from .files import channel_to_dict

    if args.m == 1:
        ch = trace_channel(args.n)
    else:
        rank = args.rank if args.rank is not None else args.n * args.m
        try:
            ch = random_channel(args.n, args.m, rank, seed=args.seed)
        except ValueError as exc:
            raise _UsageError(str(exc)) from exc
    _write_text(json.dumps(channel_to_dict(ch), indent=1, allow_nan=False) + "\n", args.out)
    return EXIT_OK


def cmd_decompose(args):
    from .decompose import DecompositionProblem, decompose
    from .files import load_channel, save_result

    target = load_channel(args.channel)
    try:
        problem = DecompositionProblem(
            target=target,
            family=args.family,
            components=args.components,
            starts=args.starts,
            max_evals_per_start=args.max_evals,
            target_error=args.target_error,
            seed=args.seed,
            method=args.method,
            refine=args.refine,
        )
    except (CapabilityError, ValueError) as exc:
        raise _UsageError(str(exc)) from exc
    res = decompose(problem)
    if args.out is not None:
        save_result(res, target, args.out)
    summary = {
        "achieved_error": res.achieved_error,
        "diamond_upper_bound": res.diamond_upper_bound,
        "evals_used": res.evals_used,
        "starts_run": len(res.per_start_errors),
        "converged": res.converged,
    }
    if args.json:
        print(json.dumps(summary))
    else:
        print(
            f"family {res.family} ({target.n},{target.m}): error {res.achieved_error:.3e}, "
            f"diamond bound {res.diamond_upper_bound:.3e}, evals {res.evals_used}, "
            f"starts {len(res.per_start_errors)}/{problem.starts}"
        )
    return EXIT_OK if res.achieved_error < args.target_error else EXIT_MISSED


def cmd_verify(args):
    from .decompose import verify
    from .files import channel_checksum, load_channel, load_result

    result, checksum = load_result(args.result)
    target = load_channel(args.channel)
    if checksum != channel_checksum(target):
        raise FileFormatError(f"{args.channel}: checksum does not match the one recorded in {args.result}")
    try:
        report = verify(result, target)
    except ValidationError as exc:
        raise FileFormatError(f"{args.result}: {exc}") from exc
    drift = abs(report.trace_distance - result.achieved_error)
    ok = drift <= args.tol
    if args.json:
        print(json.dumps({
            "trace_distance": report.trace_distance,
            "diamond_upper_bound": report.diamond_upper_bound,
            "recorded_error": result.achieved_error,
            "drift": drift,
            "ok": ok,
        }))
    else:
        print(
            f"trace distance {report.trace_distance:.6e} (recorded {result.achieved_error:.6e}, "
            f"drift {drift:.1e}), diamond bound {report.diamond_upper_bound:.6e}: "
            + ("ok" if ok else "MISMATCH")
        )
    return EXIT_OK if ok else EXIT_MISSED


def cmd_classify(args):
    from .files import load_channel

    ch = load_channel(args.channel)
    rep = classify_extremality(ch, tol=args.tol)
    if args.json:
        print(json.dumps({
            "n": ch.n,
            "m": ch.m,
            "kraus_rank": rep.kraus_rank,
            "gram_rank": rep.gram_rank,
            "classification": rep.classification,
            "tolerance": rep.tolerance_used,
        }))
    else:
        print(
            f"{rep.classification}, rank {rep.kraus_rank} "
            f"(gram rank {rep.gram_rank} of {rep.kraus_rank ** 2}, tol {rep.tolerance_used:g})"
        )
    return EXIT_OK


def _bench_rows(args):
    for n, m in args.shapes:
        for fam in args.families:
            row = dict.fromkeys(BENCH_COLUMNS, "")
            row.update(shape=f"{n}x{m}", family=fam)
            if (n, m) not in ansatz.supported_shapes(fam):
                row["note"] = f"skipped: family {fam} does not support ({n},{m})"
                log.warning(row["note"])
                yield row
                continue
            c = m
            row["param_count_total"] = c * ansatz.param_count(fam, n, m) + c - 1
            row["channels"] = args.channels
            if args.channels > 0:
                row.update(_bench_errors(n, m, fam, args))
            yield row


def _bench_errors(n, m, fam, args):
    from .decompose import DecompositionProblem, decompose

    seeds = np.random.SeedSequence(args.seed).spawn(args.channels)
    errors, evals = [], []
    t0 = time.perf_counter()
    for s in seeds:
        ch_seed, opt_seed = s.spawn(2)
        target = random_channel(n, m, n * m, seed=np.random.default_rng(ch_seed))
        res = decompose(DecompositionProblem(
            target=target, family=fam, starts=args.starts, max_evals_per_start=args.max_evals,
            target_error=args.target_error, seed=opt_seed,
        ))
        errors.append(res.achieved_error)
        evals.append(res.evals_used)
    return {
        "min_error": f"{min(errors):.3e}",
        "median_error": f"{float(np.median(errors)):.3e}",
        "max_error": f"{max(errors):.3e}",
        "mean_evals": f"{float(np.mean(evals)):.1f}",
        "wall_time_s": f"{time.perf_counter() - t0:.2f}",
    }


def cmd_bench(args):
    if args.channels < 0:
        raise _UsageError("--channels must be >= 0")
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=BENCH_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for row in _bench_rows(args):
        writer.writerow(row)
    _write_text(buf.getvalue(), args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="chandecomp",
        description="Decompose quantum channels into convex sums of generalized extreme channels.",
    )
    parser.add_argument("-v", "--verbose", action="count", default=0, help="more logging (repeatable)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="write a random channel file")
    p.add_argument("--n", type=_positive_int, required=True, help="input dimension")
    p.add_argument("--m", type=_positive_int, required=True, help="output dimension")
    p.add_argument("--rank", type=_positive_int, default=None, help="Kraus rank (default n*m)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None, help="output path (default stdout)")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("decompose", help="decompose a channel file")
    p.add_argument("channel", help="channel JSON file")
    p.add_argument("--family", type=_family, default="I", help="ansatz family 1, 2 or 3")
    p.add_argument("--starts", type=_positive_int, default=20)
    p.add_argument("--target-error", type=float, default=1e-5)
    p.add_argument("--max-evals", type=_positive_int, default=50_000, help="evaluations per start")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--components", type=_positive_int, default=None, help="mixture size (default m)")
    p.add_argument("--method", choices=("lm", "simplex"), default="lm")
    p.add_argument("--refine", action="store_true", help="per-component refinement pass")
    p.add_argument("--json", action="store_true", help="machine-readable summary")
    p.add_argument("--out", default=None, help="result JSON path")
    p.set_defaults(func=cmd_decompose)

    p = sub.add_parser("verify", help="recompute a stored result's error from scratch")
    p.add_argument("result", help="result JSON file")
    p.add_argument("channel", help="target channel JSON file")
    p.add_argument("--tol", type=float, default=1e-12, help="allowed drift from the recorded error")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("classify", help="extremality classification of a channel file")
    p.add_argument("channel")
    p.add_argument("--tol", type=float, default=1e-10, help="relative rank tolerance")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("bench", help="benchmark table as CSV")
    p.add_argument("--shapes", type=_shape_list, default=list(ansatz.TABLE_SHAPES),
                   help="comma-separated NxM list (default: the seven table shapes)")
    p.add_argument("--families", type=_family_list, default=list(ansatz.FAMILIES), help="e.g. 1,2,3")
    p.add_argument("--channels", type=int, default=20, help="random channels per shape (0: counts only)")
    p.add_argument("--starts", type=_positive_int, default=20)
    p.add_argument("--target-error", type=float, default=1e-5)
    p.add_argument("--max-evals", type=_positive_int, default=50_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None, help="CSV path (default stdout)")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    level = (logging.WARNING, logging.INFO, logging.DEBUG)[min(args.verbose, 2)]
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except _UsageError as exc:
        print(f"chandecomp {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, FileFormatError) as exc:
        print(f"chandecomp {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
