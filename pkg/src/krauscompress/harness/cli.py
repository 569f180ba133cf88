"""Command line entry point: ``krauscompress {compress,sweep,verify,correlations,plot}``."""
from __future__ import annotations

import argparse
import json
import os
import sys
import warnings
from typing import List, Optional

from .. import metrics
from ..compressor import SAMPLERS, CoarseCompressionWarning, CompressionPlan, compress
from .correlations import SigmaSpecError, correlations_demo
from .specs import SpecError, build_channel
from .svg import PlotError, emit_svg
from .sweep import ConfigError, ScenarioConfig, run_sweep, write_config
from .verify import broken_normalization, verify_suite


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="out", metavar="DIR", help="output directory")
    p.add_argument("--budget", choices=("quick", "full"), default="quick")
    p.add_argument("--json", action="store_true", help="machine-readable stdout")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(prog="krauscompress", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    c = sub.add_parser("compress", parents=[common], help="compress one channel")
    c.add_argument("channel", help='spec such as "randomizing:d=8"')
    c.add_argument("-n", "--slices", type=int, required=True)
    c.add_argument("--sampler", choices=SAMPLERS, default="haar")
    c.add_argument("--epsilon-target", type=float, default=None)

    s = sub.add_parser("sweep", parents=[common], help="run a scenario config")
    s.add_argument("config", help="scenario JSON file")
    s.add_argument("--workers", type=int, default=None)
    s.add_argument("--no-timing", action="store_true", help="write 0 in the ms column")

    v = sub.add_parser("verify", parents=[common], help="run the verification suite")
    v.add_argument("--only", default=None, help="comma separated check ids")
    v.add_argument("--mutate", action="store_true",
                   help="scale every zoo Kraus operator by 1.01 (the suite should fail)")

    r = sub.add_parser("correlations", parents=[common], help="correlation destruction demo")
    r.add_argument("--dim-a", type=int, default=8)
    r.add_argument("--dim-c", type=int, default=4)
    r.add_argument("--dim-b", type=int, default=None)
    r.add_argument("--sigma", default="maxmixed", help='"maxmixed", "diag:w1,..." or "random:seed=N"')
    r.add_argument("-n", "--slices", type=int, default=2048)
    r.add_argument("--terms", type=int, default=20)
    r.add_argument("--sampler", choices=SAMPLERS, default="haar")

    pl = sub.add_parser("plot", parents=[common], help="log-log SVG from a CSV")
    pl.add_argument("csv")
    pl.add_argument("--x", default="n")
    pl.add_argument("--y", default="value")
    pl.add_argument("--group", action="append", default=[], help="grouping column (repeatable)")
    pl.add_argument("--where", action="append", default=[], metavar="COL=VALUE")
    pl.add_argument("--name", default="plot.svg", help="file name inside --out")
    pl.add_argument("--title", default="")
    return parser


def _emit(args, payload: dict, lines: List[str]) -> None:
    if args.json:
        print(json.dumps(payload, sort_keys=True))
    else:
        print("\n".join(lines))


def _cmd_compress(args) -> int:
    ch = build_channel(args.channel)
    plan = CompressionPlan(args.slices, args.sampler, args.seed, args.epsilon_target)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", CoarseCompressionWarning)
        result = compress(ch, plan)
    budget = metrics.OptBudget.named(args.budget, seed=args.seed)
    dist = metrics.one_to_p_distance(result.sliced, ch, 1.0, budget)
    os.makedirs(args.out, exist_ok=True)
    path = os.path.join(args.out, "compression.json")
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(result.to_dict(), fh)
    payload = {
        "channel": args.channel,
        "plan": plan.to_dict(),
        "env_dim": result.env_dim,
        "tp_defect": result.tp_defect,
        "coarse": result.coarse,
        "corrected_tp_defect": None if result.corrected is None else result.corrected.tp_defect,
        "one_to_one_distance": dist.value,
        "result_path": path,
    }
    lines = [
        f"{args.channel}: |E|={result.env_dim} -> n={plan.n} ({plan.sampler}, seed {plan.seed})",
        f"TP defect {result.tp_defect:.4g}" + (" (coarse)" if result.coarse else ""),
        f"(1->1) distance of sliced map >= {dist.value:.4g}",
        f"wrote {path}",
    ]
    lines += [f"warning: {w.message}" for w in caught]
    _emit(args, payload, lines)
    return 0


def _cmd_sweep(args) -> int:
    with open(args.config, encoding="utf-8") as fh:
        data = json.load(fh)
    data["out_dir"] = args.out
    data.setdefault("budget", args.budget)
    if args.workers is not None:
        data["workers"] = args.workers
    if args.no_timing:
        data["record_timing"] = False
    config = ScenarioConfig.from_dict(data)
    rows = run_sweep(config)
    payload = {"csv": config.csv_path, "rows": len(rows)}
    _emit(args, payload, [f"wrote {len(rows)} rows to {config.csv_path}"])
    return 0


def _cmd_verify(args) -> int:
    only = None
    if args.only:
        try:
            only = [int(t) for t in args.only.split(",") if t.strip()]
        except ValueError:
            raise ConfigError(f"--only expects comma separated integers, got {args.only!r}") from None
    mutate = broken_normalization() if args.mutate else None
    report = verify_suite(args.budget, args.seed, only=only, mutate=mutate, out_dir=args.out)
    _emit(args, report.to_dict(), report.summary_lines())
    return 0 if report.passed else 1


def _cmd_correlations(args) -> int:
    rep = correlations_demo(args.dim_a, args.dim_c, args.sigma, args.slices, args.seed,
                            args.terms, dim_B=args.dim_b, sampler=args.sampler)
    os.makedirs(args.out, exist_ok=True)
    path = os.path.join(args.out, "correlations.json")
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(rep.to_dict(), fh, indent=2)
    lines = [
        f"left side {rep.left_side:.4g} <= per-term bound {rep.per_term_bound:.4g}: {rep.convexity_ok}",
        f"ordering parameter {rep.ordering_parameter:.4g}; dual check on "
        f"{len(rep.dual_lhs)} elements: {rep.dual_ok}",
        f"wrote {path}",
    ]
    _emit(args, rep.to_dict(), lines)
    return 0 if rep.convexity_ok and rep.dual_ok else 1


def _cmd_plot(args) -> int:
    where = {}
    for item in args.where:
        key, eq, value = item.partition("=")
        if not eq:
            raise ConfigError(f"--where expects COL=VALUE, got {item!r}")
        where[key] = value
    out = emit_svg(args.csv, args.x, args.y, args.group, os.path.join(args.out, args.name),
                   where=where or None, title=args.title)
    _emit(args, {"svg": out}, [f"wrote {out}"])
    return 0


COMMANDS = {
    "compress": _cmd_compress,
    "sweep": _cmd_sweep,
    "verify": _cmd_verify,
    "correlations": _cmd_correlations,
    "plot": _cmd_plot,
}


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        write_config(vars(args), args.out, f"{args.command}.config.json")
        return COMMANDS[args.command](args)
    except (SpecError, ConfigError, SigmaSpecError, PlotError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
