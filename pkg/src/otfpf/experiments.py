"""Replicated studies of simulation variance.

A study runs ``R`` independent replications of one or more filters and
reports, at every grid time, the across-replication mean and variance
(divisor ``R - 1``) of each empirical-moment estimator. Estimators are named
``mean[i]`` for the empirical mean and ``cov[i,j]`` (``i <= j``) for the
empirical covariance.
"""

from dataclasses import dataclass, field

import numpy as np

from . import rng as rngmod
from .ensembles import FilterKind, init_ensemble, propagate
from .errors import (
    ConfigError,
    DegenerateEnsembleError,
    ReplicationError,
    UnsupportedReferenceError,
)
from .models import GaussianBelief, LinearGaussianModel, n_steps, run_kalman_bucy, simulate_truth_and_observations

ORACLE = "kalman_bucy"


@dataclass(frozen=True, eq=False)
class ExperimentConfig:
    kinds: tuple
    model: LinearGaussianModel
    init: GaussianBelief
    N: int = 80
    R: int = 500
    t_max: float = 1.0
    dt: float = 1e-3
    seed: int = 0
    particles: bool = False

    def __post_init__(self):
        kinds = self.kinds
        if isinstance(kinds, (str, FilterKind)):
            kinds = (kinds,)
        try:
            kinds = tuple(FilterKind(k) for k in kinds)
        except ValueError as exc:
            raise ConfigError(str(exc), field="kind") from exc
        if not kinds:
            raise ConfigError("at least one filter kind is required", field="kind")
        object.__setattr__(self, "kinds", kinds)
        if self.N < 2:
            raise ConfigError(f"N must be at least 2, got {self.N}", field="N")
        if self.R < 2:
            raise ConfigError(f"R must be at least 2, got {self.R}", field="R")
        if self.seed < 0:
            raise ConfigError(f"seed must be non-negative, got {self.seed}", field="seed")
        if self.init.d != self.model.d:
            raise ConfigError(
                f"initial belief has dimension {self.init.d}, model has {self.model.d}", field="init_mean"
            )
        n_steps(self.t_max, self.dt)

    @property
    def n(self):
        return n_steps(self.t_max, self.dt)

    @property
    def times(self):
        return self.dt * np.arange(self.n + 1)


@dataclass(eq=False)
class Series:
    """One estimator of one filter, sampled on the report's time grid."""

    filter: str
    estimator: str
    replication_mean: np.ndarray
    simulation_variance: np.ndarray
    analytic_reference: np.ndarray = None


@dataclass(eq=False)
class ExperimentReport:
    times: np.ndarray
    series: list
    replications: int
    particles: dict = field(default_factory=dict)

    def get(self, filter, estimator):
        for s in self.series:
            if s.filter == filter and s.estimator == estimator:
                return s
        raise KeyError((filter, estimator))


def analytic_reference(kind, t, N):
    """Closed-form simulation variances for Brownian motion started at N(0, 1).

    Returns ``(var_of_mean, var_of_var)``: ``((1 + t)/N, 3 (1 + t)^2 / N)`` for
    Monte-Carlo and ``(1/N, 3/N)`` for the optimal-transport filter.
    """
    kind = FilterKind(kind)
    t = np.asarray(t, dtype=float)
    if kind is FilterKind.MONTE_CARLO:
        return (1.0 + t) / N, 3.0 * (1.0 + t) ** 2 / N
    if kind is FilterKind.OT_FPF:
        one = np.ones_like(t)
        return one / N, 3.0 * one / N
    raise UnsupportedReferenceError(f"no closed-form simulation variance for {kind.value}")


def _is_unit_diffusion(model, init):
    return (
        model.d == 1
        and not np.any(model.A)
        and not np.any(model.C)
        and np.allclose(init.mean, 0.0)
        and np.allclose(init.cov, 1.0)
    )


def _estimator_names(d):
    names = [(f"mean[{i}]", ("mean", i)) for i in range(d)]
    names += [(f"cov[{i},{j}]", ("cov", i, j)) for i in range(d) for j in range(i, d)]
    return names


def _collect(label, means, covs, reference=None):
    # means (R, n+1, d), covs (R, n+1, d, d)
    out = []
    for name, key in _estimator_names(means.shape[-1]):
        values = means[..., key[1]] if key[0] == "mean" else covs[..., key[1], key[2]]
        if values.shape[0] > 1:
            var = values.var(axis=0, ddof=1)
        else:
            var = np.full(values.shape[1], np.nan)
        ref = None
        if reference is not None:
            ref = reference[0] if key[0] == "mean" else reference[1]
        out.append(Series(label, name, values.mean(axis=0), var, ref))
    return out


def replication_seeds(root_seed, R):
    """Integer seed of each replication; replication ``r`` reruns alone with ``run_filter``."""
    return [rngmod.derive_seed(root_seed, "replication", r) for r in range(R)]


def _run_replications(kind, cfg, seeds, dZ, keep_particles):
    X0 = np.stack([init_ensemble(cfg.init, cfg.N, s).particles for s in seeds])
    gens = None if kind is FilterKind.OT_FPF else [rngmod.stream(s, "dynamics") for s in seeds]
    try:
        return propagate(kind, cfg.model, X0, dZ, cfg.dt, gens, keep_particles)
    except DegenerateEnsembleError as exc:
        r = exc.batch_index[0] if exc.batch_index else 0
        raise ReplicationError(
            f"replication {r} (seed {seeds[r]}) failed: {exc}", replication=r, seed=seeds[r], cause=exc
        ) from exc


def run_variance_study(cfg):
    """Simulation variance of the moment estimators over independent replications.

    Replication ``r`` uses its own seed (see :func:`replication_seeds`) for
    its initial ensemble, its Brownian increments and its own observation
    path, so nothing is shared between replications. Filters listed together
    in ``cfg.kinds`` reuse the same initial ensembles. Analytic curves are
    attached when the model is the unit Brownian motion.
    """
    seeds = replication_seeds(cfg.seed, cfg.R)
    n = cfg.n
    needs_obs = any(k is not FilterKind.MONTE_CARLO for k in cfg.kinds) and np.any(cfg.model.C)
    if needs_obs:
        dZ = np.stack(
            [simulate_truth_and_observations(cfg.model, cfg.init, cfg.t_max, cfg.dt, s)[1].dZ for s in seeds]
        )
    else:
        # C = 0: observation increments never enter the particle dynamics.
        dZ = np.zeros((n, cfg.model.m))
    times = cfg.times
    report = ExperimentReport(times, [], cfg.R)
    unit = _is_unit_diffusion(cfg.model, cfg.init)
    for kind in cfg.kinds:
        means, covs, traj = _run_replications(kind, cfg, seeds, dZ, cfg.particles)
        reference = None
        if unit and kind is not FilterKind.FPF:
            reference = analytic_reference(kind, times, cfg.N)
        report.series.extend(_collect(kind.value, means, covs, reference))
        if traj is not None:
            report.particles[kind.value] = traj
    return report


def run_filtering_comparison(cfg):
    """Simulation variance of each filter conditioned on one shared observation path.

    The path is drawn once from the ``observation-path`` seed of
    ``cfg.seed``; every replication of every filter sees it. The Kalman-Bucy
    oracle on that path is included as filter ``kalman_bucy`` with zero
    simulation variance.
    """
    path_seed = rngmod.derive_seed(cfg.seed, "observation-path")
    _, obs = simulate_truth_and_observations(cfg.model, cfg.init, cfg.t_max, cfg.dt, path_seed)
    seeds = replication_seeds(cfg.seed, cfg.R)
    report = ExperimentReport(obs.t_grid.copy(), [], cfg.R)
    for kind in cfg.kinds:
        means, covs, traj = _run_replications(kind, cfg, seeds, obs.dZ, cfg.particles)
        report.series.extend(_collect(kind.value, means, covs))
        if traj is not None:
            report.particles[kind.value] = traj
    beliefs = run_kalman_bucy(cfg.model, cfg.init, obs)
    kb_means = np.stack([b.mean for b in beliefs])[None]
    kb_covs = np.stack([b.cov for b in beliefs])[None]
    for s in _collect(ORACLE, kb_means, kb_covs):
        s.simulation_variance = np.zeros_like(s.replication_mean)
        report.series.append(s)
    return report


def single_run_report(runs, times, oracle=None):
    """Wrap single-ensemble runs as a report with undefined (NaN) simulation variance."""
    report = ExperimentReport(np.asarray(times), [], 1)
    for run in runs:
        report.series.extend(_collect(run.kind.value, run.means[None], run.covs[None]))
        if run.particles is not None:
            report.particles[run.kind.value] = run.particles
    if oracle is not None:
        kb_means = np.stack([b.mean for b in oracle])[None]
        kb_covs = np.stack([b.cov for b in oracle])[None]
        for s in _collect(ORACLE, kb_means, kb_covs):
            s.simulation_variance = np.zeros_like(s.replication_mean)
            report.series.append(s)
    return report

