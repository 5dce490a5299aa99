from __future__ import annotations

import argparse
import json
import logging
from pathlib import Path
import sys
from typing import Callable

from ._version import __version__
from .backtest import Orientation, backtest_report, exceedance_indicators
from .config import (
    PRESET_NAMES,
    ExperimentConfig,
    Forecaster,
    MethodPair,
    MixtureSpec,
    load_config,
    preset_config,
)
from .dcc import DccParams, simulate_dcc
from .doctor import build_doctor_report
from .errors import ConfigError, InfosetError, InvalidArgumentError
from .garch import GarchParams, simulate_garch
from .pipeline import (
    run_application,
    run_mean_score_experiment,
    run_mixture_demo,
    run_power_study,
)
from .prices import load_forecasts_csv, prices_from_returns, write_prices_csv
from .report import ExperimentReport
from .serialization import write_json_artifact

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
DEFAULT_MIXTURE_N = 1_000_000


def _configure_logging(verbosity: int) -> None:
    level = logging.WARNING if verbosity <= 0 else logging.INFO if verbosity == 1 else logging.DEBUG
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", force=True)


def _resolve_config(args: argparse.Namespace, default_preset: str) -> ExperimentConfig:
    if args.config is not None and args.preset is not None:
        raise ConfigError("--config and --preset are mutually exclusive")
    if args.config is not None:
        config = load_config(args.config)
    else:
        config = preset_config(args.preset or default_preset)
    if getattr(args, "full_scale", False):
        config = config.at_full_scale()
    overrides: dict[str, object] = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if getattr(args, "replications", None) is not None:
        overrides["replications"] = args.replications
    if getattr(args, "workers", None) is not None:
        overrides["workers"] = args.workers
    if getattr(args, "n", None) is not None:
        overrides["n"] = args.n
    if getattr(args, "methods", None) is not None:
        overrides["methods"] = MethodPair(*args.methods)
    return config.replace(**overrides) if overrides else config


def _print_report(report: ExperimentReport, written: list[Path]) -> None:
    for row in report.rows:
        rel = "n/a" if row.rel_diff is None else f"{row.rel_diff:.4f}"
        print(
            f"h={row.h} alpha={row.alpha:g} n={row.n}: m_F={row.m_f:.4f} m_G={row.m_g:.4f} "
            f"diff={row.diff:.4f} rel={rel} t={row.t_stat:.3f} p={row.p_value:.4g}"
        )
    for cell in report.power:
        power = "n/a" if cell.power is None else f"{cell.power:.3f}"
        flag = " FLAGGED" if cell.flagged else ""
        print(
            f"h={cell.h} alpha={cell.alpha:g} N={cell.n} level={cell.level:g}: power={power} "
            f"({cell.completed}/{cell.replications} completed){flag}"
        )
    for path in written:
        print(f"wrote: {path}")


def _cmd_simulate(args: argparse.Namespace) -> int:
    config = _resolve_config(args, "garch-1")
    n = args.length or config.n
    out = Path(args.out)
    dgp = config.dgp
    if isinstance(dgp, GarchParams):
        path = simulate_garch(dgp, n, config.seed, config.burn_in)
        written = [path.to_csv(out / "garch_path.csv")]
        returns, kind = path.returns, "log"
    elif isinstance(dgp, DccParams):
        bivariate = simulate_dcc(dgp, n, config.seed, config.burn_in)
        written = [bivariate.to_csv(out / "dcc_path.csv")]
        returns, kind = bivariate.returns, "relative"
    else:
        raise ConfigError("simulate needs a [garch] or [dcc] study")
    if args.prices:
        prices = prices_from_returns(returns, kind, config.return_scale)
        written.append(write_prices_csv(out / "prices.csv", prices))
    for item in written:
        print(f"wrote: {item}")
    return EXIT_OK


def _cmd_mean_scores(args: argparse.Namespace) -> int:
    config = _resolve_config(args, "garch-1")
    report = run_mean_score_experiment(config)
    _print_report(report, report.write(args.out))
    return EXIT_OK


def _cmd_power(args: argparse.Namespace) -> int:
    config = _resolve_config(args, "garch-1")
    report = run_power_study(config)
    _print_report(report, report.write(args.out))
    return EXIT_OK


def _cmd_apply(args: argparse.Namespace) -> int:
    config = _resolve_config(args, "dcc-1" if len(args.prices) == 2 else "garch-1")
    report = run_application(args.prices, config)
    _print_report(report, report.write(args.out))
    return EXIT_OK


def _cmd_backtest(args: argparse.Namespace) -> int:
    forecasts, realizations = load_forecasts_csv(
        args.forecasts, args.forecast_column, args.realization_column
    )
    orientation = Orientation.UPPER_TAIL if args.upper_tail else Orientation.LOWER_TAIL
    series = exceedance_indicators(
        forecasts, realizations, orientation, alpha=args.alpha, h=args.horizon
    )
    report = backtest_report(series, args.lag, args.max_lag)
    output = write_json_artifact(Path(args.out) / "backtest.json", report.to_artifact())
    print(f"exceedance rate: {report.empirical_rate:.5f} (expected {report.expected_rate:g})")
    print(f"coverage: z={report.coverage_z:.3f} p={report.coverage_p:.4g}")
    print(
        f"independence (lag {report.independence_lag}): "
        f"LR={report.independence_lr:.3f} p={report.independence_p:.4g}"
    )
    if report.scan is not None:
        print(f"lag scan up to {args.max_lag}: adjusted p={report.scan.adjusted_p:.4g}")
    print(f"passes at {args.level:g}: {report.passes(args.level)}")
    print(f"wrote: {output}")
    if args.strict and not report.passes(args.level):
        return EXIT_CONFIG
    return EXIT_OK


def _cmd_mixture_demo(args: argparse.Namespace) -> int:
    config: ExperimentConfig | None = None
    if args.config is not None or args.preset is not None:
        config = _resolve_config(args, "mixture")
        if not isinstance(config.dgp, MixtureSpec):
            raise ConfigError("mixture-demo needs a [mixture] study")
        spec = config.dgp
        seed = config.seed
        n = args.length or config.n
    else:
        try:
            spec = MixtureSpec(args.alpha, args.sigma)
        except InvalidArgumentError as exc:
            raise ConfigError(exc.detail) from exc
        seed = args.seed if args.seed is not None else 0
        n = args.length or DEFAULT_MIXTURE_N
    report = run_mixture_demo(spec, n, seed, config)
    written = report.write(args.out)
    quantile = report.extras["quantile_score"]
    log = report.extras["log_score"]
    print(f"common alpha-quantile: {report.extras['quantile_value']:.5f}")
    print(f"quantile score: diff={quantile['diff']:.6f} z={quantile['z']:.3f}")
    print(f"log score: diff={log['diff']:.6f} z={log['z']:.3f}")
    for path in written:
        print(f"wrote: {path}")
    return EXIT_OK


def _cmd_doctor(args: argparse.Namespace) -> int:
    report = build_doctor_report()
    if args.json:
        print(json.dumps(report, indent=2, sort_keys=True))
    else:
        package = report["package"]
        print(f"infoset-eval {package['version']}")
        print(f"status: {report['status']}")
        print(f"python: {report['runtime']['python']}")
        print(f"presets: {sum(report['presets'].values())}/{len(report['presets'])}")
        print(
            "module imports: "
            f"{sum(value == 'ok' for value in report['module_imports'].values())}/"
            f"{len(report['module_imports'])}"
        )
        if report["blockers"]:
            print("blockers:")
            for blocker in report["blockers"]:
                print(f"  - {blocker}")
    if args.strict and report["status"] != "pass":
        return EXIT_CONFIG
    return EXIT_OK


def _experiment_options(parser: argparse.ArgumentParser, *, replications: bool = False) -> None:
    parser.add_argument("--config", type=Path, default=None, help="experiment TOML file")
    parser.add_argument(
        "--preset", choices=PRESET_NAMES, default=None, help="packaged experiment configuration"
    )
    parser.add_argument("--seed", type=int, default=None, help="master seed (overrides config)")
    parser.add_argument("--out", type=Path, default=Path("results"), help="output directory")
    parser.add_argument(
        "--full-scale",
        "--paper-scale",
        dest="full_scale",
        action="store_true",
        help="1000 replications and the long one-step samples",
    )
    parser.add_argument(
        "--methods",
        nargs=2,
        metavar=("F", "G"),
        choices=[item.value for item in Forecaster],
        default=None,
        help="forecasters for the smaller and the larger information set",
    )
    if replications:
        parser.add_argument(
            "--replications", type=int, default=None, help="replications per cell (power only)"
        )
        parser.add_argument("--workers", type=int, default=None, help="worker processes")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="infoset-eval",
        description=(
            "Compare quantile (VaR) forecasts built on nested information sets: "
            "mean scores, Diebold-Mariano tests, power studies and exceedance backtests."
        ),
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument(
        "-v", "--verbose", action="count", default=0, help="-v for progress, -vv for debug"
    )
    subparsers = parser.add_subparsers(dest="command", required=True)

    simulate = subparsers.add_parser("simulate", help="Simulate a GARCH or DCC path to CSV.")
    _experiment_options(simulate)
    simulate.add_argument("--length", type=int, default=None, help="observations (default: n)")
    simulate.add_argument(
        "--prices", action="store_true", help="also write prices.csv for the apply command"
    )
    simulate.set_defaults(handler=_cmd_simulate)

    mean_scores = subparsers.add_parser(
        "mean-scores", help="Huge-sample mean scores and DM tests per horizon and level."
    )
    _experiment_options(mean_scores)
    mean_scores.add_argument("--n", type=int, default=None, help="evaluation length")
    mean_scores.set_defaults(handler=_cmd_mean_scores)

    power = subparsers.add_parser("power", help="Rolling-window power study.")
    _experiment_options(power, replications=True)
    power.set_defaults(handler=_cmd_power)

    backtest = subparsers.add_parser(
        "backtest", help="Coverage and independence tests for a forecast CSV."
    )
    backtest.add_argument("forecasts", type=Path, help="CSV with forecast and realization columns")
    backtest.add_argument("--alpha", type=float, required=True, help="VaR level")
    backtest.add_argument("--horizon", type=int, default=1)
    backtest.add_argument("--lag", type=int, default=None, help="independence lag (default: h)")
    backtest.add_argument("--max-lag", type=int, default=None, help="also scan lags 1..max")
    backtest.add_argument("--upper-tail", action="store_true")
    backtest.add_argument("--forecast-column", default="forecast")
    backtest.add_argument("--realization-column", default="realization")
    backtest.add_argument("--level", type=float, default=0.01, help="test level")
    backtest.add_argument("--out", type=Path, default=Path("results"))
    backtest.add_argument(
        "--strict", action="store_true", help="return exit code 2 when a test rejects"
    )
    backtest.set_defaults(handler=_cmd_backtest)

    apply = subparsers.add_parser("apply", help="Rolling-window comparison on price CSV files.")
    apply.add_argument("prices", nargs="+", type=Path, help="one or two price files")
    _experiment_options(apply)
    apply.set_defaults(handler=_cmd_apply)

    mixture = subparsers.add_parser(
        "mixture-demo", help="Quantile versus log score on an equal normal mixture."
    )
    mixture.add_argument("--config", type=Path, default=None)
    mixture.add_argument("--preset", choices=PRESET_NAMES, default=None)
    mixture.add_argument("--seed", type=int, default=None)
    mixture.add_argument("--alpha", type=float, default=0.05)
    mixture.add_argument("--sigma", type=float, default=2.0)
    mixture.add_argument("--length", type=int, default=None, help=f"draws (default {DEFAULT_MIXTURE_N})")
    mixture.add_argument("--out", type=Path, default=Path("results"))
    mixture.set_defaults(handler=_cmd_mixture_demo)

    doctor = subparsers.add_parser("doctor", help="Verify package, presets and imports.")
    doctor.add_argument("--json", action="store_true")
    doctor.add_argument("--strict", action="store_true")
    doctor.set_defaults(handler=_cmd_doctor)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    _configure_logging(args.verbose)
    handler: Callable[[argparse.Namespace], int] = args.handler
    try:
        return handler(args)
    except ConfigError as exc:
        print(f"configuration error [{exc.code}]: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InfosetError as exc:
        print(f"error [{exc.code}]: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    raise SystemExit(main())
