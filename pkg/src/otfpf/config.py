"""INI run configuration.

Format (keys are case-insensitive; ``#`` starts a comment, and ``;`` only
at the start of a line because it separates matrix rows)::

    [run]
    kind = monte_carlo, ot_fpf     # required: one or more of monte_carlo, fpf, ot_fpf
    N = 80                         # particles per ensemble
    R = 500                        # replications
    t_max = 1.0
    dt = 0.001
    seed = 0
    particles = false              # also write particles.csv

    [model]                        # required
    A = 0, 1; -1, -0.5             # rows separated by ';', entries by ',' or blanks
    C = 1, 0

    [initial]                      # optional, defaults to N(0, I)
    mean = 1, 0
    cov = 2, 0.5; 0.5, 1

Unknown sections or keys are rejected.
"""

import configparser
import dataclasses

import numpy as np

from .ensembles import FilterKind
from .errors import ConfigError, InvalidInputError
from .experiments import ExperimentConfig
from .models import GaussianBelief, LinearGaussianModel

DEFAULTS = {"n": 80, "r": 500, "t_max": 1.0, "dt": 1e-3, "seed": 0, "particles": False}
ALLOWED = {
    "run": {"kind", "n", "r", "t_max", "dt", "seed", "particles"},
    "model": {"a", "c"},
    "initial": {"mean", "cov"},
}


def parse_matrix(text, field):
    """``"1, 2; 3, 4"`` -> 2x2 array. A single number gives a 1x1 matrix."""
    try:
        rows = [[float(x) for x in row.replace(",", " ").split()] for row in text.split(";")]
    except ValueError as exc:
        raise ConfigError(f"{field}: cannot parse matrix {text!r}", field=field) from exc
    if not rows or any(len(r) != len(rows[0]) for r in rows) or not rows[0]:
        raise ConfigError(f"{field}: rows of {text!r} have unequal or zero length", field=field)
    return np.array(rows)


def parse_vector(text, field):
    m = parse_matrix(text, field)
    if m.shape[0] != 1:
        raise ConfigError(f"{field}: expected a single row, got {text!r}", field=field)
    return m[0]


def _number(section, key, cast):
    raw = section[key]
    try:
        return cast(raw)
    except ValueError as exc:
        raise ConfigError(f"{key}: invalid value {raw!r}", field=key) from exc


def _boolean(raw, key):
    value = raw.strip().lower()
    if value in ("1", "true", "yes", "on"):
        return True
    if value in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"{key}: invalid boolean {raw!r}", field=key)


def _integer(raw):
    value = float(raw)
    if value != int(value):
        raise ValueError(raw)
    return int(value)


def read_parser(path):
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",), interpolation=None)
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}", field="config") from exc
    except configparser.Error as exc:
        raise ConfigError(f"{path}: malformed config: {exc}") from exc
    for name in parser.sections():
        if name not in ALLOWED:
            raise ConfigError(f"unknown section [{name}]", field=name)
        for key in parser[name]:
            if key not in ALLOWED[name]:
                raise ConfigError(f"unknown key {key!r} in [{name}]", field=key)
    return parser


def model_from_parser(parser):
    if not parser.has_section("model"):
        raise ConfigError("missing [model] section", field="model")
    sec = parser["model"]
    for key in ("a", "c"):
        if key not in sec:
            raise ConfigError(f"missing model matrix {key.upper()}", field=key.upper())
    try:
        model = LinearGaussianModel(parse_matrix(sec["a"], "A"), parse_matrix(sec["c"], "C"))
    except InvalidInputError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"model: {exc}", field="model") from exc
    init = GaussianBelief.standard(model.d)
    if parser.has_section("initial"):
        sec = parser["initial"]
        mean = parse_vector(sec["mean"], "mean") if "mean" in sec else init.mean
        cov = parse_matrix(sec["cov"], "cov") if "cov" in sec else init.cov
        try:
            init = GaussianBelief(mean, cov)
        except InvalidInputError as exc:
            raise ConfigError(f"initial: {exc}", field="initial") from exc
    return model, init


def parse_config(path):
    """Read and validate an INI run configuration, applying documented defaults."""
    parser = read_parser(path)
    if not parser.has_section("run") or "kind" not in parser["run"]:
        raise ConfigError("missing [run] kind", field="kind")
    run = parser["run"]
    kinds = [k.strip() for k in run["kind"].split(",") if k.strip()]
    valid = {k.value for k in FilterKind}
    for k in kinds:
        if k not in valid:
            raise ConfigError(f"kind: unknown filter {k!r} (expected one of {sorted(valid)})", field="kind")
    values = dict(DEFAULTS)
    for key, cast in (("n", _integer), ("r", _integer), ("seed", _integer), ("t_max", float), ("dt", float)):
        if key in run:
            values[key] = _number(run, key, cast)
    if "particles" in run:
        values["particles"] = _boolean(run["particles"], "particles")
    model, init = model_from_parser(parser)
    return ExperimentConfig(
        kinds=tuple(kinds),
        model=model,
        init=init,
        N=values["n"],
        R=values["r"],
        t_max=values["t_max"],
        dt=values["dt"],
        seed=values["seed"],
        particles=values["particles"],
    )


def with_overrides(cfg, **changes):
    changes = {k: v for k, v in changes.items() if v is not None}
    return dataclasses.replace(cfg, **changes) if changes else cfg


def config_to_dict(cfg):
    """JSON-ready echo of a configuration."""
    return {
        "kind": [k.value for k in cfg.kinds],
        "A": cfg.model.A.tolist(),
        "C": cfg.model.C.tolist(),
        "initial_mean": cfg.init.mean.tolist(),
        "initial_cov": cfg.init.cov.tolist(),
        "N": cfg.N,
        "R": cfg.R,
        "t_max": cfg.t_max,
        "dt": cfg.dt,
        "seed": cfg.seed,
        "particles": cfg.particles,
    }


def parse_problem(path):
    """Model, initial belief, ``t_max`` and ``dt`` from a config whose ``[run] kind`` may be absent."""
    parser = read_parser(path)
    model, init = model_from_parser(parser)
    run = parser["run"] if parser.has_section("run") else {}
    t_max = _number(run, "t_max", float) if "t_max" in run else DEFAULTS["t_max"]
    dt = _number(run, "dt", float) if "dt" in run else DEFAULTS["dt"]
    return model, init, t_max, dt
