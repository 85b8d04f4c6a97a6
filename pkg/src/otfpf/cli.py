"""Command-line front end.

Subcommands: ``simulate``, ``variance-study``, ``compare`` and ``check``.
Exit codes: 0 success, 1 configuration or usage error, 2 numerical error,
3 I/O error.
"""

import argparse
import csv
import logging
import os
import sys
import time

from . import rng as rngmod
from .checks import default_check_problem, run_checks
from .config import config_to_dict, parse_config, parse_problem, with_overrides
from .ensembles import run_filter
from .errors import ConfigError, FilterError, InvalidInputError
from .experiments import run_filtering_comparison, run_variance_study, single_run_report
from .models import run_kalman_bucy, simulate_truth_and_observations
from .output import RunManifest, emit_report, sha256, write_manifest
from . import __version__

log = logging.getLogger("otfpf")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_IO = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _load(args):
    if not args.config:
        raise ConfigError(f"{args.command} needs --config", field="config")
    cfg = parse_config(args.config)
    cfg = with_overrides(cfg, seed=args.seed)
    if args.particles:
        cfg = with_overrides(cfg, particles=True)
    return cfg


def cmd_simulate(args, started):
    cfg = _load(args)
    _, obs = simulate_truth_and_observations(
        cfg.model, cfg.init, cfg.t_max, cfg.dt, rngmod.derive_seed(cfg.seed, "observation-path")
    )
    run_seed = rngmod.derive_seed(cfg.seed, "simulate")
    runs = [run_filter(k, cfg.model, cfg.init, obs, cfg.N, run_seed, cfg.particles) for k in cfg.kinds]
    report = single_run_report(runs, obs.t_grid, oracle=run_kalman_bucy(cfg.model, cfg.init, obs))
    return emit_report(
        report, args.out, command="simulate", seed=cfg.seed, config=config_to_dict(cfg),
        particles=cfg.particles, started=started,
    )


def cmd_variance_study(args, started):
    cfg = _load(args)
    report = run_variance_study(cfg)
    return emit_report(
        report, args.out, command="variance-study", seed=cfg.seed, config=config_to_dict(cfg),
        particles=cfg.particles, started=started,
    )


def cmd_compare(args, started):
    cfg = _load(args)
    report = run_filtering_comparison(cfg)
    return emit_report(
        report, args.out, command="compare", seed=cfg.seed, config=config_to_dict(cfg),
        particles=cfg.particles, started=started,
    )


def cmd_check(args, started):
    if args.config:
        model, init, t_max, dt = parse_problem(args.config)
    else:
        model, init = default_check_problem()
        t_max, dt = 1.0, 1e-3
    seed = 0 if args.seed is None else args.seed
    results = run_checks(model, init, t_max, dt, seed)
    os.makedirs(args.out, exist_ok=True)
    path = os.path.join(args.out, "check.csv")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["check", "value", "low", "high", "passed"])
        for r in results:
            w.writerow([r.name, repr(r.value), repr(r.low), repr(r.high), str(r.passed).lower()])
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'}  {r.name:<36} {r.value:.3e}  [{r.low:g}, {r.high:g}]")
    config = {"A": model.A.tolist(), "C": model.C.tolist(), "initial_mean": init.mean.tolist(),
              "initial_cov": init.cov.tolist(), "t_max": t_max, "dt": dt}
    manifest = RunManifest("check", seed, __version__, config, {"check.csv": sha256(path)},
                           round(time.perf_counter() - started, 3))
    write_manifest(manifest, args.out)
    if not all(r.passed for r in results):
        raise _ChecksFailed(f"{sum(not r.passed for r in results)} check(s) out of tolerance")
    return manifest


class _ChecksFailed(Exception):
    pass


COMMANDS = {
    "simulate": (cmd_simulate, "run each configured filter once on one observation path"),
    "variance-study": (cmd_variance_study, "simulation variance over independent replications"),
    "compare": (cmd_compare, "filters compared on one shared observation path"),
    "check": (cmd_check, "residuals of the matrix equations, OT maps and one-step expansion"),
}


def build_parser():
    parser = _Parser(prog="otfpf", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, (_, help_text) in COMMANDS.items():
        p = sub.add_parser(name, help=help_text, description=help_text)
        p.add_argument("--config", help="INI run configuration")
        p.add_argument("--seed", type=int, help="root seed (overrides the config)")
        p.add_argument("--out", default=os.path.join("out", name), help="output directory (default: %(default)s)")
        if name != "check":
            p.add_argument("--particles", action="store_true", help="also write particles.csv")
    return parser


def main(argv=None):
    logging.basicConfig(level=logging.INFO, format="%(message)s")
    args = build_parser().parse_args(argv)
    started = time.perf_counter()
    handler = COMMANDS[args.command][0]
    try:
        manifest = handler(args, started)
    except (ConfigError, InvalidInputError) as exc:
        log.error("config error: %s", exc)
        return EXIT_CONFIG
    except (FilterError, ArithmeticError, _ChecksFailed) as exc:
        log.error("numerical error: %s", exc)
        return EXIT_NUMERICAL
    except OSError as exc:
        log.error("I/O error: %s", exc)
        return EXIT_IO
    for name, digest in manifest.files.items():
        log.info("wrote %s  sha256=%s", os.path.join(args.out, name), digest[:16])
    log.info("done in %.2fs", manifest.duration_seconds)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
