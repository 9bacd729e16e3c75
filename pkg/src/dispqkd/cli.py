"""Command-line interface.

Configuration files are flat ``key = value`` text in SI units; ``#`` starts a
comment.  Recognised keys (all optional, defaults in brackets):

    sigma1_rad_s       spectral width of photon 1, rad/s        [1.57e12]
    sigma2_rad_s       spectral width of photon 2, rad/s        [1.57e12]
    rho                spectral correlation, -1 < rho < 1       [0.9]
    beta_s2_m          group-velocity dispersion, s^2/m         [-1.15e-26]
    alpha_db_km        fibre attenuation, dB/km                 [0.2]
    length_m           fibre length per arm, m                  [0]
    dark_rate_hz       dark-count rate per detector, 1/s        [1e3]
    jitter_fwhm_s      detector timing jitter (FWHM), s         [0]
    rep_rate_hz        source repetition rate, 1/s              [1e7]
    window_multiplier  window duration in standard deviations   [6]

Unknown keys are errors.  ``--set KEY=VALUE`` overrides the file.  Sweep
axes also accept ``sigma_rad_s``, which sets both spectral widths.

Exit status: 0 success, 1 invalid input, 2 numerical guard tripped,
3 acceptance threshold not met.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import montecarlo, oracle, qkd, stats
from .biphoton import BiphotonState, evaluate_grid, time_axes
from .model import ConfigError, LinkConfig, load_config
from .output import document_to_json, rows_to_csv, rows_to_json
from .qkd import Scenario
from .sweep import Levels, SweepSpec, parse_axis, parse_values, run_sweep

EXIT_OK, EXIT_INVALID, EXIT_GUARD, EXIT_THRESHOLD = 0, 1, 2, 3

GUARD_ERRORS = (qkd.NumericalGuardError, oracle.AliasingError, stats.DegenerateCorrelationError)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


# -- plot recipes ----------------------------------------------------------

_KEYRATE_LENGTHS = Levels("length_m", tuple(np.linspace(0.0, 3e5, 301)))
_WIDTH_LENGTHS = Levels("length_m", tuple(np.geomspace(1.0, 1e5, 101)))
_BOTH = (Scenario.GLOBAL_REF, Scenario.MUTUAL_REF_ONLY)

RECIPES: dict[str, tuple[str, SweepSpec]] = {
    "correlation-map": (
        "pearson over (rho, L) with the L0 and L0.95 distances",
        SweepSpec(
            axes=(
                Levels("rho", tuple(np.linspace(-0.95, 0.95, 39))),
                Levels("length_m", tuple(np.geomspace(1.0, 1e5, 51))),
            ),
            quantity="correlation",
        ),
    ),
    "widths-vs-length": (
        "widths against L for rho = 0.9, without and with 20 ps FWHM jitter",
        SweepSpec(
            axes=(Levels("jitter_fwhm_s", (0.0, 20e-12)), _WIDTH_LENGTHS),
            fixed={"rho": 0.9},
        ),
    ),
    "widths-vs-bandwidth": (
        "widths against sigma1 = sigma2 at 20 km and 200 km for rho in {0, 0.9}",
        SweepSpec(
            axes=(
                Levels("length_m", (2e4, 2e5)),
                Levels("rho", (0.0, 0.9)),
                Levels("sigma_rad_s", tuple(np.geomspace(1e9, 1e13, 81))),
            ),
        ),
    ),
    "keyrate-vs-length": (
        "key rate against L for two bandwidths, rho in {-0.9, 0, 0.9}, both scenarios",
        SweepSpec(
            axes=(
                Levels("sigma_rad_s", (1.57e12, 1e10)),
                Levels("rho", (-0.9, 0.0, 0.9)),
                _KEYRATE_LENGTHS,
            ),
            quantity="keyrate",
            scenarios=_BOTH,
            fixed={"jitter_fwhm_s": 0.0},
        ),
    ),
    "jitter-family": (
        "key rate against L for rho = 0.99 and jitter from 0 to 2 ns",
        SweepSpec(
            axes=(
                Levels("sigma_rad_s", (1.57e12, 1e10)),
                Levels("jitter_fwhm_s", (0.0, 1e-10, 2e-10, 5e-10, 1e-9, 2e-9)),
                _KEYRATE_LENGTHS,
            ),
            quantity="keyrate",
            scenarios=_BOTH,
            fixed={"rho": 0.99},
        ),
    ),
    "scenario-widths": (
        "the three filtering widths against L for rho in {0.9, 0, -0.9}",
        SweepSpec(axes=(Levels("rho", (0.9, 0.0, -0.9)), _WIDTH_LENGTHS)),
    ),
}


# -- helpers -----------------------------------------------------------------


def _overrides(pairs: list[str]) -> dict[str, str]:
    out = {}
    for item in pairs:
        key, sep, value = item.partition("=")
        if not sep or not key.strip():
            raise ConfigError({"--set": f"expected KEY=VALUE, got {item!r}"})
        out[key.strip()] = value.strip()
    return out


def _count(text: str) -> int:
    """Integer that may be written in exponent form, e.g. ``1e7``."""
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not value.is_integer():
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}")
    return int(value)


def _config(args) -> LinkConfig:
    return load_config(args.config, _overrides(args.set))


def _scenarios(value: str) -> tuple[Scenario, ...]:
    return _BOTH if value == "both" else (Scenario.parse(value),)


def _emit(args, text: str) -> None:
    if args.out:
        Path(args.out).write_text(text, newline="\n")
    else:
        sys.stdout.write(text)


def _table(args, rows: list[dict]) -> None:
    if args.format == "json":
        _emit(args, rows_to_json(rows, args.command))
    else:
        _emit(args, rows_to_csv(rows))


def _flatten(doc: dict, prefix: str = "") -> dict:
    flat = {}
    for key, value in doc.items():
        if isinstance(value, dict):
            flat.update(_flatten(value, f"{prefix}{key}."))
        else:
            flat[f"{prefix}{key}"] = value
    return flat


def _levels(args, base: LinkConfig) -> list[Levels]:
    axes = []
    if getattr(args, "rho", None):
        axes.append(Levels("rho", tuple(parse_values(args.rho))))
    lengths = parse_values(args.lengths) if args.lengths else [base.fiber.length]
    axes.append(Levels("length_m", tuple(lengths)))
    return axes


# -- subcommands -------------------------------------------------------------


def cmd_table(args) -> int:
    base = _config(args)
    axes = _levels(args, base) if args.command != "maxdist" else (
        [Levels("rho", tuple(parse_values(args.rho)))] if args.rho else []
    )
    if args.command == "maxdist" and not axes:
        axes = [Levels("rho", (base.source.rho,))]
    spec = SweepSpec(axes=tuple(axes), quantity=args.command, scenarios=_scenarios(args.scenario))
    _table(args, run_sweep(spec, base, args.workers))
    return EXIT_OK


def cmd_sweep(args) -> int:
    base = _config(args)
    axes = [parse_axis(a) for a in args.axis]
    for item in args.levels:
        name, sep, values = item.partition("=")
        if not sep:
            raise ConfigError({"--levels": f"expected NAME=VALUES, got {item!r}"})
        axes.append(Levels(name.strip(), tuple(parse_values(values))))
    if not axes:
        raise ConfigError({"--axis": "at least one --axis or --levels is required"})
    spec = SweepSpec(axes=tuple(axes), quantity=args.quantity, scenarios=_scenarios(args.scenario))
    _table(args, run_sweep(spec, base, args.workers))
    return EXIT_OK


def cmd_recipe(args) -> int:
    _, spec = RECIPES[args.name]
    _table(args, run_sweep(spec, _config(args), args.workers))
    return EXIT_OK


def cmd_oracle(args) -> int:
    config = _config(args)
    grid = oracle.OracleGrid(size=args.grid_size, span_sigmas=args.span_sigmas, method=args.method)
    report = oracle.run_oracle(config.source, config.fiber.beta, config.fiber.length, grid)
    doc = report.to_dict()
    doc["threshold"] = args.threshold
    doc["passed"] = report.rel_l2_error < args.threshold
    if args.format == "json":
        _emit(args, document_to_json(doc))
    else:
        _emit(args, rows_to_csv([_flatten(doc)]))
    return EXIT_OK if doc["passed"] else EXIT_THRESHOLD


def cmd_montecarlo(args) -> int:
    config = _config(args)
    scenario = Scenario.parse(args.scenario)
    report = montecarlo.run_trials(
        config, scenario, args.trials, args.seed, workers=args.workers, ideal=not args.physical
    )
    analytic = qkd.key_rate(config, scenario)
    comparison = montecarlo.compare_with_analytic(report, analytic, n_sigma=args.threshold)
    doc = {"report": report.to_dict(), "analytic": analytic.as_row(), "comparison": comparison}
    if args.format == "json":
        _emit(args, document_to_json(doc))
    else:
        _emit(args, rows_to_csv([_flatten(doc)]))
    agrees = comparison["p_exp_agrees"] and comparison["qber_agrees"]
    return EXIT_THRESHOLD if args.check and not agrees else EXIT_OK


def cmd_wavefunction(args) -> int:
    config = _config(args)
    state = BiphotonState.from_config(config)
    if args.numeric:
        grid = oracle.propagate_numeric(
            config.source,
            config.fiber.beta,
            config.fiber.length,
            oracle.OracleGrid(size=args.grid_size, span_sigmas=args.span_sigmas, method=args.method),
        )
    else:
        t1, t2 = time_axes(state, n=args.grid_size, span=args.span_sigmas)
        grid = evaluate_grid(state, t1, t2)
    if args.format == "npz":
        if not args.out:
            raise ConfigError({"--out": "npz output needs a file path"})
        grid.save_npz(args.out)
    elif args.out:
        grid.to_csv(args.out)
    else:
        grid.to_csv(sys.stdout)
    return EXIT_OK


# -- parser ------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="key = value configuration file")
    common.add_argument("--set", metavar="KEY=VALUE", action="append", default=[], help="override a key")
    common.add_argument("--out", metavar="PATH", help="write to PATH instead of stdout")

    fmt = _Parser(add_help=False)
    fmt.add_argument("--format", choices=("csv", "json"), default="csv")

    workers = _Parser(add_help=False)
    workers.add_argument("--workers", type=int, default=1, metavar="N")

    scen_both = _Parser(add_help=False)
    scen_both.add_argument("--scenario", choices=("global", "mutual", "both"), default="both")

    def grid(size, span):
        g = _Parser(add_help=False)
        g.add_argument("--grid-size", type=int, default=size, metavar="N")
        g.add_argument("--span-sigmas", type=float, default=span, metavar="X")
        g.add_argument("--method", choices=("auto", "spectral", "fresnel"), default="auto")
        return g

    parser = _Parser(prog="dispqkd", description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    lengths_help = "comma list or min:max:count[:lin|log] (default: length_m from the config)"
    p = sub.add_parser("stats", parents=[common, fmt, workers], help="temporal widths and correlation")
    p.add_argument("--lengths", metavar="VALUES", help=lengths_help)
    p.add_argument("--rho", metavar="VALUES", help="one table block per rho value")
    p.set_defaults(func=cmd_table, scenario="global")

    p = sub.add_parser("keyrate", parents=[common, fmt, workers, scen_both], help="windows, QBER and key rate")
    p.add_argument("--lengths", metavar="VALUES", help=lengths_help)
    p.add_argument("--rho", metavar="VALUES", help="one curve per rho value")
    p.set_defaults(func=cmd_table)

    p = sub.add_parser("maxdist", parents=[common, fmt, workers, scen_both], help="maximal secure distance")
    p.add_argument("--rho", metavar="VALUES", help="one row per rho value")
    p.set_defaults(func=cmd_table)

    p = sub.add_parser("oracle", parents=[common, fmt, grid(512, 10.0)], help="closed form vs numerical propagation")
    p.add_argument("--threshold", type=float, default=1e-6, help="largest accepted relative L2 error")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("montecarlo", parents=[common, fmt, workers], help="event-level simulation")
    p.add_argument("--scenario", choices=("global", "mutual"), default="global")
    p.add_argument("--trials", type=_count, default=10_000_000, metavar="N")
    p.add_argument("--seed", type=int, default=0, metavar="N")
    p.add_argument("--threshold", type=float, default=3.0, help="agreement bound in standard errors")
    p.add_argument("--physical", action="store_true", help="let tails escape windows; earliest click wins")
    p.add_argument("--check", action="store_true", help="exit 3 unless both estimates agree")
    p.set_defaults(func=cmd_montecarlo)

    p = sub.add_parser("sweep", parents=[common, fmt, workers, scen_both], help="parameter lattice")
    p.add_argument("--axis", action="append", default=[], metavar="NAME:MIN:MAX:COUNT[:lin|log]")
    p.add_argument("--levels", action="append", default=[], metavar="NAME=VALUES")
    p.add_argument("--quantity", choices=("stats", "correlation", "keyrate", "maxdist"), default="stats")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("wavefunction", parents=[common, grid(128, 6.0)], help="psi_L on a time grid")
    p.add_argument("--format", choices=("csv", "npz"), default="csv")
    p.add_argument("--numeric", action="store_true", help="propagate numerically instead of the closed form")
    p.set_defaults(func=cmd_wavefunction)

    recipe_help = "; ".join(f"{name}: {desc}" for name, (desc, _) in RECIPES.items())
    p = sub.add_parser("recipe", parents=[common, fmt, workers], help="plot data", description=recipe_help)
    p.add_argument("name", choices=tuple(RECIPES))
    p.set_defaults(func=cmd_recipe)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except GUARD_ERRORS as exc:
        print(f"dispqkd: numerical guard: {exc}", file=sys.stderr)
        return EXIT_GUARD
    except (ConfigError, ValueError, OSError) as exc:
        print(f"dispqkd: invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
