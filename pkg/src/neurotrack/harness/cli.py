"""Command line entry point.

Exit codes: 0 success, 1 configuration error, 2 runtime or IO error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from typing import Sequence

from .. import mlp
from ..kinematics import VelocityPair
from ..tracking import lyapunov_sign_scan
from .config import ConfigError, describe_keys, load_config
from .csvio import emit_csv, sweep_csv
from .experiments import RANK_KEYS, compare_controllers, gain_sweep
from .metrics import compute_metrics
from .runner import run_scenario

log = logging.getLogger("neurotrack")

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2


def _floats(text: str) -> list[float]:
    try:
        return [float(tok) for tok in text.split(",") if tok.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma separated numbers, got {text!r}") from exc


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return format(v + 0.0, ".9g")
    return str(v)


def _print_metrics(m, stream) -> None:
    for key, val in m.as_dict().items():
        print(f"{key}={_fmt(val) or 'never'}", file=stream)


def cmd_run(args) -> int:
    cfg = load_config(args.config)
    net = mlp.load_csv(args.load_net) if args.load_net else None
    result = run_scenario(cfg, net)
    emit_csv(result, args.out if args.out else sys.stdout)
    _print_metrics(compute_metrics(result, cfg.thresholds), sys.stderr if not args.out else sys.stdout)
    if args.save_net:
        if result.final_net is None:
            raise ConfigError("--save-net needs sim.mode = full-dynamics")
        mlp.save_csv(result.final_net, args.save_net)
    if args.figures:
        from .figures import render_run

        for path in render_run(result, args.figures):
            log.info("wrote %s", path)
    return EXIT_OK


def cmd_sweep(args) -> int:
    base = load_config(args.config)
    rows = gain_sweep(
        base,
        args.k1 or [base.gains.k1],
        args.k2 or [base.gains.k2],
        args.k3 or [base.gains.k3],
        rank_by=args.rank_by,
        workers=args.workers,
    )
    sweep_csv(rows, args.out if args.out else sys.stdout)
    if args.figures:
        from .figures import render_sweep

        for path in render_sweep(rows, args.figures):
            log.info("wrote %s", path)
    return EXIT_OK


def cmd_compare(args) -> int:
    cfg_a = load_config(args.config_a)
    cfg_b = load_config(args.config_b)
    cmp = compare_controllers(cfg_a, cfg_b, keep_logs=bool(args.figures))
    lines = ["metric,a,b,ratio_b_over_a"]
    lines += [",".join((name, _fmt(a), _fmt(b), _fmt(r))) for name, a, b, r in cmp.rows()]
    text = "\n".join(lines) + "\n"
    if args.out:
        with open(args.out, "w", encoding="ascii", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if args.figures:
        from .figures import render_comparison

        for path in render_comparison(cmp, args.figures):
            log.info("wrote %s", path)
    return EXIT_OK


def cmd_gradcheck(args) -> int:
    sizes = [int(tok) for tok in args.sizes.split(",")]
    devs = mlp.random_grad_checks(args.samples, seed=args.seed, sizes=sizes, eps=args.eps)
    worst = max(devs)
    print(f"samples={len(devs)}")
    print(f"max_rel_dev={worst:.3e}")
    print(f"tolerance={args.tol:.1e}")
    return EXIT_OK if worst < args.tol else EXIT_RUNTIME


def cmd_scan(args) -> int:
    cfg = load_config(args.config)
    seg = cfg.reference.segments[0]
    b = args.bound
    report = lyapunov_sign_scan(
        VelocityPair(seg.v, seg.w),
        cfg.gains,
        (-b, -b, -b),
        (b, b, b),
        args.samples,
        seed=args.seed,
        variant=cfg.variant,
    )
    for line in report.lines():
        print(line)
    return EXIT_OK


def cmd_keys(args) -> int:
    for line in describe_keys():
        print(line)
    return EXIT_OK


class _Parser(argparse.ArgumentParser):
    # argparse would exit with 2, which this tool reserves for runtime errors
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="neurotrack", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="simulate one scenario and write its time series as CSV")
    r.add_argument("config")
    r.add_argument("--out", help="CSV destination (default: stdout)")
    r.add_argument("--figures", metavar="DIR", help="also render PNG figures into DIR")
    r.add_argument("--save-net", metavar="CSV", help="write the final network weights")
    r.add_argument("--load-net", metavar="CSV", help="start from these network weights")
    r.set_defaults(func=cmd_run)

    s = sub.add_parser("sweep", help="grid search over tracking gains")
    s.add_argument("config")
    s.add_argument("--k1", type=_floats)
    s.add_argument("--k2", type=_floats)
    s.add_argument("--k3", type=_floats)
    s.add_argument("--rank-by", choices=sorted(RANK_KEYS), default="ep",
                   help="settling signal: ep = posture error norm, ex = longitudinal error")
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--out")
    s.add_argument("--figures", metavar="DIR")
    s.set_defaults(func=cmd_sweep)

    c = sub.add_parser("compare", help="run two scenarios and report metric ratios B/A")
    c.add_argument("config_a")
    c.add_argument("config_b")
    c.add_argument("--out")
    c.add_argument("--figures", metavar="DIR")
    c.set_defaults(func=cmd_compare)

    g = sub.add_parser("gradcheck", help="check backprop against finite differences")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--samples", type=int, default=100)
    g.add_argument("--sizes", default="6,12,2")
    g.add_argument("--eps", type=float, default=1e-6)
    g.add_argument("--tol", type=float, default=1e-6)
    g.set_defaults(func=cmd_gradcheck)

    sc = sub.add_parser("scan", help="sample the sign of dV/dt over a box of tracking errors")
    sc.add_argument("config")
    sc.add_argument("--samples", type=int, default=100_000)
    sc.add_argument("--bound", type=float, default=0.2, help="half-width of the error box")
    sc.add_argument("--seed", type=int, default=0)
    sc.set_defaults(func=cmd_scan)

    k = sub.add_parser("keys", help="list configuration keys and defaults")
    k.set_defaults(func=cmd_keys)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (OSError, ValueError, ArithmeticError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
