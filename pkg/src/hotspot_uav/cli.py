"""Command-line front end.

    hotspot-uav coverage [-c CONFIG] [overrides]   single operating point
    hotspot-uav sweep    [-c CONFIG] [overrides]   grid sweep -> CSV + manifest
    hotspot-uav optimum  [-c CONFIG] [overrides]   coverage-optimal height
    hotspot-uav compare  [-c CONFIG] [overrides]   Monte-Carlo placement comparison
    hotspot-uav selftest                           internal cross-checks

Exit status: 0 success, 1 invalid input, 2 numerical failure.
"""

import argparse
import sys
import warnings
from dataclasses import replace

from .config import Engine, base_value, load_config, parse_config
from .errors import NumericFailure, ValidationError
from .selftest import run_selftest
from .sweep import FlatProfileWarning, find_optimum_height, format_csv, run_sweep, sweep_results
from .urban import Strategy

EXIT_OK, EXIT_INVALID, EXIT_NUMERIC = 0, 1, 2

# flag -> config key; values use the same syntax as the file
_FLAG_KEYS = {
    "height": "deployment.height",
    "density": "deployment.density",
    "hotspot_radius": "deployment.hotspot_radius",
    "beamwidth": "radio.beamwidth",
    "threshold": "radio.threshold",
    "axis": "sweep.axis",
    "values": "sweep.values",
    "engines": "sweep.engines",
    "strategies": "sweep.strategies",
    "output": "sweep.output",
    "n_trials": "simulation.n_trials",
    "seed": "simulation.seed",
    "workers": "simulation.workers",
    "window_scale": "simulation.window_scale",
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def _add_common(p):
    p.add_argument("-c", "--config", help="INI configuration file (defaults used when omitted)")
    p.add_argument("--set", action="append", default=[], metavar="SECTION.KEY=VALUE",
                   help="override any configuration key; repeatable")
    for name in _FLAG_KEYS:
        p.add_argument("--" + name.replace("_", "-"), dest=name, metavar="VALUE",
                       help=f"same as --set {_FLAG_KEYS[name]}=VALUE")


def build_parser():
    parser = _Parser(prog="hotspot-uav", description="UAV hotspot coverage analysis")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, text in (
        ("coverage", "coverage and spectral efficiency at the configured operating point"),
        ("sweep", "sweep one parameter, write CSV and run manifest"),
        ("optimum", "coverage-maximising UAV height for each strategy"),
        ("compare", "Monte-Carlo comparison of placement strategies"),
    ):
        _add_common(sub.add_parser(name, help=text, description=text))
    sub.add_parser("selftest", help="run internal cross-checks")
    return parser


def _overrides(args):
    out = {}
    for item in args.set:
        key, sep, value = item.partition("=")
        if not sep:
            raise ValidationError(f"--set expects SECTION.KEY=VALUE, got {item!r}")
        out[key.strip()] = value.strip()
    for name, key in _FLAG_KEYS.items():
        value = getattr(args, name, None)
        if value is not None:
            out[key] = value
    return out


def _load(args, extra=None):
    overrides = {**(extra or {}), **_overrides(args)}
    if args.config:
        try:
            return load_config(args.config, overrides)
        except OSError as e:
            raise ValidationError(f"cannot read config: {e}") from None
    return parse_config("", overrides)


def _cmd_coverage(args, out):
    cfg = _load(args)
    cfg = replace(cfg, values=(base_value(cfg),))
    out.write(format_csv(sweep_results(cfg)))


def _cmd_sweep(args, out):
    cfg = _load(args)
    rows = run_sweep(cfg)
    out.write(f"wrote {len(rows)} rows to {cfg.output}\n")


def _cmd_optimum(args, out):
    cfg = _load(args)
    out.write("strategy,gamma_opt_m,coverage,flat\n")
    for s in cfg.strategies:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", FlatProfileWarning)
            res = find_optimum_height(cfg, s)
        out.write(f"{s.value},{res.gamma_opt:.2f},{res.metric_at_opt:.6f},{str(res.flat).lower()}\n")


def _cmd_compare(args, out):
    # all four placements unless the user narrows them
    cfg = _load(args, {"sweep.strategies": ", ".join(s.value for s in Strategy),
                       "sweep.engines": Engine.MONTECARLO.value})
    rows = run_sweep(cfg)
    out.write(f"wrote {len(rows)} rows to {cfg.output}\n")


def _cmd_selftest(args, out):
    ok = run_selftest(lambda line: out.write(line + "\n"))
    return EXIT_OK if ok else EXIT_NUMERIC


_COMMANDS = {
    "coverage": _cmd_coverage,
    "sweep": _cmd_sweep,
    "optimum": _cmd_optimum,
    "compare": _cmd_compare,
    "selftest": _cmd_selftest,
}


def main(argv=None, out=None):
    out = out or sys.stdout
    args = build_parser().parse_args(argv)
    try:
        status = _COMMANDS[args.command](args, out)
    except ValidationError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INVALID
    except NumericFailure as e:
        print(f"numerical failure: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK if status is None else status


if __name__ == "__main__":
    sys.exit(main())
