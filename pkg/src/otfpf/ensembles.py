"""Finite-N particle systems: Monte-Carlo, feedback particle filter, OT filter.

The step kernels work on particle arrays of shape ``(..., N, d)``: any
leading axes are independent ensembles (replications) advanced in lockstep.
Moments, gains and ``G`` are frozen at the start of each step.
"""

import enum
from dataclasses import dataclass

import numpy as np

from . import rng as rngmod
from .errors import ConfigError, DegenerateEnsembleError, InvalidInputError, SingularMatrixError
from .matrixeq import is_strictly_pd, solve_lyapunov, symmetrize
from .models import sample_gaussian


class FilterKind(str, enum.Enum):
    MONTE_CARLO = "monte_carlo"
    FPF = "fpf"
    OT_FPF = "ot_fpf"


def empirical_moments(X):
    """Mean and covariance (divisor N) over the particle axis of ``(..., N, d)``."""
    N = X.shape[-2]
    mean = X.mean(axis=-2)
    D = X - mean[..., None, :]
    cov = np.swapaxes(D, -1, -2) @ D / N
    return mean, symmetrize(cov)


@dataclass(frozen=True, eq=False)
class Ensemble:
    """N particles in R^d, stored as an ``(N, d)`` array."""

    particles: np.ndarray

    def __post_init__(self):
        X = np.array(self.particles, dtype=float)
        if X.ndim == 1:
            X = X[:, None]
        if X.ndim != 2 or X.shape[0] < 2:
            raise ConfigError(f"an ensemble needs N >= 2 particles, got shape {X.shape}", field="N")
        X.setflags(write=False)
        object.__setattr__(self, "particles", X)

    @property
    def N(self):
        return self.particles.shape[0]

    @property
    def d(self):
        return self.particles.shape[1]

    def mean(self):
        return empirical_moments(self.particles)[0]

    def cov(self):
        return empirical_moments(self.particles)[1]


def init_ensemble(init, N, seed):
    """N i.i.d. draws from ``init`` using the ``ensemble`` stream of ``seed``."""
    if N < 2:
        raise ConfigError(f"N must be at least 2, got {N}", field="N")
    if not is_strictly_pd(init.cov):
        raise InvalidInputError("initial covariance must be strictly positive definite")
    return Ensemble(sample_gaussian(init, N, rngmod.stream(seed, "ensemble")))


def _check_pd(cov):
    ok = is_strictly_pd(cov)
    if not np.all(ok):
        bad = np.argwhere(~np.atleast_1d(ok))[0]
        raise DegenerateEnsembleError(
            "empirical covariance is not strictly positive definite",
            batch_index=tuple(int(i) for i in bad),
        )


def _mc_advance(X, dt, noise):
    return X + np.sqrt(dt) * noise


def _fpf_advance(model, X, mean, cov, dZ, dt, noise):
    _check_pd(cov)
    K = cov @ model.C.T
    innovation = dZ[..., None, :] - 0.5 * dt * (X + mean[..., None, :]) @ model.C.T
    return X + dt * X @ model.A.T + np.sqrt(dt) * noise + innovation @ np.swapaxes(K, -1, -2)


def _ot_advance(model, X, mean, cov, dZ, dt):
    _check_pd(cov)
    try:
        G = solve_lyapunov(cov, model.riccati_rhs(cov))
    except SingularMatrixError as exc:
        raise DegenerateEnsembleError(str(exc)) from exc
    K = cov @ model.C.T
    centred = X - mean[..., None, :]
    innovation = dZ - dt * mean @ model.C.T
    shift = dt * mean @ model.A.T + np.einsum("...ij,...j->...i", K, innovation)
    return X + shift[..., None, :] + dt * centred @ np.swapaxes(G, -1, -2)


def mc_step(ens, dt, gen):
    """Independent Brownian increments: ``S <- S + sqrt(dt) xi``."""
    if not dt > 0:
        raise InvalidInputError(f"dt must be positive, got {dt}")
    return Ensemble(_mc_advance(ens.particles, dt, gen.standard_normal(ens.particles.shape)))


def fpf_step(model, ens, dZ, dt, gen):
    """One Euler-Maruyama step of the finite-N linear feedback particle filter."""
    dZ = np.atleast_1d(np.asarray(dZ, dtype=float))
    noise = gen.standard_normal(ens.particles.shape)
    return Ensemble(_fpf_advance(model, ens.particles, *empirical_moments(ens.particles), dZ, dt, noise))


def ot_fpf_step(model, ens, dZ, dt):
    """One Euler step of the optimal-transport particle filter (deterministic)."""
    dZ = np.atleast_1d(np.asarray(dZ, dtype=float))
    return Ensemble(_ot_advance(model, ens.particles, *empirical_moments(ens.particles), dZ, dt))


def ot_fpf_step_scalar(a, c, particles, dZ, dt):
    """Closed-form scalar OT filter step, kept as an independent reference."""
    S = np.asarray(particles, dtype=float)
    mean = S.mean()
    var = np.mean((S - mean) ** 2)
    K = var * c
    return S + a * S * dt + (S - mean) * dt / (2.0 * var) + K * (dZ - c * (S + mean) / 2.0 * dt)


@dataclass(frozen=True, eq=False)
class FilterRun:
    """Moments of one or more ensembles on the time grid.

    ``means`` is ``(..., n + 1, d)`` and ``covs`` ``(..., n + 1, d, d)``;
    ``particles`` (optional) holds the trajectory of the first ensemble as
    ``(n + 1, N, d)``.
    """

    kind: FilterKind
    times: np.ndarray
    means: np.ndarray
    covs: np.ndarray
    particles: np.ndarray = None


def propagate(kind, model, X0, dZ, dt, gens=None, keep_particles=False):
    """Advance a stack of ensembles ``X0`` of shape ``(R, N, d)`` over ``dZ``.

    ``dZ`` is either ``(n, m)`` (shared by all ensembles) or ``(R, n, m)``.
    ``gens`` supplies one generator per ensemble for the stochastic kinds;
    each generator is consumed exactly as a single-ensemble run would, so
    ensemble ``r`` of a stack is reproducible on its own.

    Raises
    ------
    DegenerateEnsembleError
        With ``step`` and ``batch_index`` set, if an empirical covariance
        collapses.
    """
    kind = FilterKind(kind)
    X = np.array(X0, dtype=float)
    R, N, d = X.shape
    dZ = np.asarray(dZ, dtype=float)
    shared = dZ.ndim == 2
    n = dZ.shape[-2]
    if kind is not FilterKind.OT_FPF and (gens is None or len(gens) != R):
        raise InvalidInputError(f"{kind.value} needs one generator per ensemble")
    means = np.empty((R, n + 1, d))
    covs = np.empty((R, n + 1, d, d))
    mean, cov = empirical_moments(X)
    means[:, 0], covs[:, 0] = mean, cov
    traj = None
    if keep_particles:
        traj = np.empty((n + 1, N, d))
        traj[0] = X[0]
    for k in range(n):
        dz = np.broadcast_to(dZ[k], (R, dZ.shape[-1])) if shared else dZ[:, k]
        try:
            if kind is FilterKind.OT_FPF:
                X = _ot_advance(model, X, mean, cov, dz, dt)
            else:
                noise = np.stack([g.standard_normal((N, d)) for g in gens])
                if kind is FilterKind.FPF:
                    X = _fpf_advance(model, X, mean, cov, dz, dt, noise)
                else:
                    X = _mc_advance(X, dt, noise)
        except DegenerateEnsembleError as exc:
            raise DegenerateEnsembleError(
                f"{kind.value}: degenerate ensemble at step {k} (t={k * dt:g}): {exc}",
                step=k,
                batch_index=exc.batch_index,
            ) from exc
        mean, cov = empirical_moments(X)
        means[:, k + 1], covs[:, k + 1] = mean, cov
        if keep_particles:
            traj[k + 1] = X[0]
    return means, covs, traj


def run_filter(kind, model, init, obs, N, seed, keep_particles=False):
    """Run one ensemble of ``N`` particles along ``obs`` and record its moments.

    The initial ensemble comes from :func:`init_ensemble` with ``seed``; the
    Brownian increments of ``fpf`` and ``monte_carlo`` from the ``dynamics``
    stream of ``seed``. The ``ot_fpf`` run is a pure function of the initial
    ensemble and ``obs``.
    """
    kind = FilterKind(kind)
    if init.d != model.d:
        raise InvalidInputError(f"initial belief has dimension {init.d}, model has {model.d}")
    if obs.dZ.shape[1] != model.m:
        raise InvalidInputError(f"observation path has m={obs.dZ.shape[1]}, model has m={model.m}")
    X0 = init_ensemble(init, N, seed).particles[None]
    gens = [rngmod.stream(seed, "dynamics")]
    means, covs, traj = propagate(kind, model, X0, obs.dZ, obs.dt, gens, keep_particles)
    return FilterRun(kind, obs.t_grid.copy(), means[0], covs[0], traj)
