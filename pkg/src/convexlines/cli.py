"""Command-line front end: calibrate, sample, enumerate, verify, render.

Exit codes: 0 success, 1 usage, 2 domain error (message names the violated
precondition), 3 cap or trial budget exceeded.  Every randomized subcommand
echoes the effective seed, so a bare invocation is reproducible by default.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .enumerator import (
    build_weight_table,
    count_lines,
    dump_weight_table,
    enumerate_lines,
    exact_conditional,
    tv_distance,
)
from .errors import DomainError, ResourceError
from .formats import read_samples, write_samples, write_svg
from .measure import calibrate
from .sampler import (
    RngStream,
    SampleBatch,
    SampleMeta,
    sample_conditioned,
    sample_conditioned_dp,
    sample_conditioned_mixture,
    sample_free,
)
from .verify import run_check

DEFAULT_SEED = 1729
CACHE_ENV = "CONVEXLINES_CACHE_DIR"

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DOMAIN = 2
EXIT_RESOURCE = 3


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage errors; the contract here reserves 2 for
    # domain errors, so route usage problems to exit 1
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _n_pair(text: str) -> tuple[int, int]:
    try:
        a, b = text.split(",")
        return int(a), int(b)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected N1,N2 with integer parts, got {text!r}")


def _mixture(text: str) -> list[tuple[float, float]]:
    prior = []
    for part in text.split(","):
        try:
            r, w = part.split(":")
            prior.append((float(r), float(w)))
        except ValueError:
            raise argparse.ArgumentTypeError(f"expected r1:w1,r2:w2,... got {text!r}")
    return prior


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="convexlines", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, metavar="SUBCOMMAND")

    p = sub.add_parser("calibrate", help="solve for z at a target endpoint")
    p.add_argument("--n", type=_n_pair, required=True, metavar="N1,N2")
    p.add_argument("--r", type=float, required=True)
    p.add_argument("--json", action="store_true", help="machine-readable output")
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("sample", help="draw free or endpoint-conditioned lines")
    p.add_argument("--n", type=_n_pair, required=True, metavar="N1,N2")
    p.add_argument("--r", type=float, default=1.0)
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--mode", choices=("free", "conditioned"), default="conditioned")
    p.add_argument("--method", choices=("rejection", "exact-dp"), default="exact-dp",
                   help="conditioned mode only")
    p.add_argument("--mixture", type=_mixture, metavar="r1:w1,r2:w2,...",
                   help="draw r from this prior instead of --r (conditioned mode)")
    p.add_argument("--max-tries", type=int, default=10**6)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--out", type=Path, required=True, metavar="FILE.jsonl")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("enumerate", help="exact line counts and conditional laws")
    p.add_argument("--n", type=_n_pair, required=True, metavar="N1,N2")
    p.add_argument("--r", type=float, default=1.0)
    p.add_argument("--full", action="store_true",
                   help="list every line with its conditional probability")
    p.add_argument("--tv-vs", type=float, metavar="R2",
                   help="total variation distance between the r and R2 laws")
    p.set_defaults(func=cmd_enumerate)

    p = sub.add_parser("verify", help="run a numerical check suite, write CSV + figures")
    p.add_argument("check", metavar="CHECK",
                   help="calibration, lclt, limit-shape, lln, tv, metrics, or all")
    p.add_argument("--config", type=Path, metavar="FILE.json",
                   help="JSON overrides merged over the default configuration")
    p.add_argument("--out", type=Path, metavar="FILE.csv",
                   help="CSV path; figures land next to it (default: CSV to stdout)")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--threads", type=int, default=None)
    p.add_argument("--no-figures", action="store_true")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("render", help="SVG of scaled samples over the limit parabola")
    p.add_argument("--in", dest="infile", type=Path, required=True, metavar="FILE.jsonl")
    p.add_argument("--n", type=_n_pair, required=True, metavar="N1,N2")
    p.add_argument("--r", type=float, default=None, help="caption only")
    p.add_argument("--out", type=Path, required=True, metavar="FILE.svg")
    p.set_defaults(func=cmd_render)
    return parser


def cmd_calibrate(args) -> int:
    params = calibrate(args.n, args.r)
    payload = {
        "n": list(params.n),
        "r": params.r,
        "kappa": params.kappa,
        "delta": list(params.delta),
        "alpha": list(params.alpha),
        "z": list(params.z),
    }
    if args.json:
        print(json.dumps(payload, indent=2))
    else:
        for key in ("n", "r", "kappa", "delta", "alpha", "z"):
            print(f"{key} = {payload[key]}")
    return EXIT_OK


def cmd_sample(args) -> int:
    if args.count < 1:
        raise DomainError("count must be >= 1")
    n = args.n
    lines = []
    metas = []
    params = calibrate(n, args.r)
    if args.mode == "free":
        gen = RngStream(args.seed, 0).generator()
        for _ in range(args.count):
            lines.append(sample_free(params, stream=gen))
            metas.append(SampleMeta(tries=1, tail_bound=0.0, stream_id=0))
    elif args.mixture is not None:
        drawn = sample_conditioned_mixture(
            n, args.mixture, args.count, RngStream(args.seed, 0),
            method=args.method, max_tries=args.max_tries,
        )
        lines = [line for _, line in drawn]
        metas = [SampleMeta(tries=1, tail_bound=0.0, stream_id=0) for _ in drawn]
    elif args.method == "exact-dp":
        lines = sample_conditioned_dp(n, args.r, args.count, RngStream(args.seed, 0))
        metas = [SampleMeta(tries=1, tail_bound=0.0, stream_id=0) for _ in lines]
    else:
        # one child stream per sample: the recorded stream id replays it alone
        for i in range(args.count):
            line, tries = sample_conditioned(
                params, stream=RngStream(args.seed, i), max_tries=args.max_tries
            )
            lines.append(line)
            metas.append(SampleMeta(tries=tries, tail_bound=0.0, stream_id=i))
    written = write_samples(args.out, SampleBatch(params, lines, metas))
    print(f"# seed={args.seed}")
    print(f"wrote {written} {args.mode} samples (n={n[0]},{n[1]}) to {args.out}")
    return EXIT_OK


def cmd_enumerate(args) -> int:
    n = args.n
    print(f"count {count_lines(n)}")
    cache_dir = os.environ.get(CACHE_ENV)
    if cache_dir:
        path = Path(cache_dir) / f"wt_{n[0]}x{n[1]}_r{args.r:g}_log.csv"
        if not path.exists():
            path.parent.mkdir(parents=True, exist_ok=True)
            dump_weight_table(build_weight_table(n, args.r, mode="log"), path)
        print(f"# weight table cached at {path}")
    if args.tv_vs is not None:
        print(f"tv {tv_distance(n, args.r, args.tv_vs):.12g}")
    if args.full:
        probs = exact_conditional(n, args.r)
        for line in enumerate_lines(n):
            edges = [[d.x1, d.x2, k] for d, k in line.edges]
            print(f"p={probs[line]:.12g} edges={json.dumps(edges, separators=(',', ':'))}")
    return EXIT_OK


def cmd_verify(args) -> int:
    overrides: dict = {}
    if args.config is not None:
        try:
            overrides = json.loads(args.config.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise DomainError(f"cannot read config {args.config}: {exc}") from exc
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.threads is not None:
        overrides["threads"] = args.threads
    report = run_check(args.check, overrides)
    csv_text = report.to_csv()
    npass = sum(row.passed for row in report.rows)
    if args.out is None:
        sys.stdout.write(csv_text)
    else:
        args.out.parent.mkdir(parents=True, exist_ok=True)
        args.out.write_text(csv_text, encoding="utf-8")
        print(f"# seed={report.config['seed']}")
        print(f"wrote {args.out} ({npass}/{len(report.rows)} rows pass)")
        if not args.no_figures:
            from .plots import render_report_figures

            for path in render_report_figures(report, args.out.parent):
                print(f"wrote {path}")
    return EXIT_OK


def cmd_render(args) -> int:
    lines = [line for line, _ in read_samples(args.infile)]
    path = write_svg(args.out, lines, args.n, args.r)
    print(f"wrote {path} ({len(lines)} lines)")
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except ResourceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RESOURCE


if __name__ == "__main__":
    sys.exit(main())
