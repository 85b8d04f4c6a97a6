"""Linear-Gaussian signal model, synthetic data and the Kalman-Bucy filter.

Signal and observations follow

    dX_t = A X_t dt + dB_t,      dZ_t = C X_t dt + dW_t,

with identity noise covariances. The pair ``(A, C)`` is assumed observable
wherever a filter is expected to converge; this is the caller's obligation
and is not checked.
"""

from dataclasses import dataclass

import numpy as np

from . import rng as rngmod
from .errors import ConfigError, InvalidInputError, NotPSDError, NumericalInstabilityError
from .matrixeq import PSD_TOL, check_symmetric, is_strictly_pd, symmetrize


def _frozen(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class LinearGaussianModel:
    """Drift matrix ``A`` (d x d) and observation matrix ``C`` (m x d)."""

    A: np.ndarray
    C: np.ndarray

    def __post_init__(self):
        A = _frozen(np.atleast_2d(self.A))
        C = _frozen(np.atleast_2d(self.C))
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise InvalidInputError(f"A must be square, got shape {A.shape}")
        if C.ndim != 2 or C.shape[1] != A.shape[0]:
            raise InvalidInputError(f"C must be m x {A.shape[0]}, got shape {C.shape}")
        if not (np.all(np.isfinite(A)) and np.all(np.isfinite(C))):
            raise InvalidInputError("A and C must have finite entries")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "C", C)

    @property
    def d(self):
        return self.A.shape[0]

    @property
    def m(self):
        return self.C.shape[0]

    @classmethod
    def pure_diffusion(cls, d=1):
        """``A = 0`` and ``C = 0``: the state is a Brownian motion and observations carry no information."""
        return cls(np.zeros((d, d)), np.zeros((1, d)))

    def riccati_rhs(self, Sigma):
        """``A S + S A^T + I - S C^T C S``, over a stack of covariances if given one."""
        Sigma = np.asarray(Sigma, dtype=float)
        AS = self.A @ Sigma
        SCt = Sigma @ self.C.T
        out = AS + np.swapaxes(AS, -1, -2) + np.eye(self.d) - SCt @ np.swapaxes(SCt, -1, -2)
        return symmetrize(out)


@dataclass(frozen=True, eq=False)
class GaussianBelief:
    """Gaussian ``N(mean, cov)``; ``cov`` symmetric PSD."""

    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean = _frozen(np.atleast_1d(self.mean))
        cov = np.atleast_2d(np.asarray(self.cov, dtype=float))
        if mean.ndim != 1 or cov.shape != (mean.size, mean.size):
            raise InvalidInputError(f"mean {mean.shape} and cov {cov.shape} are inconsistent")
        if not (np.all(np.isfinite(mean)) and np.all(np.isfinite(cov))):
            raise InvalidInputError("belief has non-finite entries")
        check_symmetric(cov, "cov")
        w = np.linalg.eigvalsh(symmetrize(cov))
        if w[0] < -PSD_TOL * max(np.max(np.abs(w)), 1e-300):
            raise NotPSDError(f"cov is not positive semidefinite (min eigenvalue {w[0]:.3e})")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", _frozen(cov))

    @property
    def d(self):
        return self.mean.size

    @classmethod
    def standard(cls, d=1):
        return cls(np.zeros(d), np.eye(d))


@dataclass(frozen=True, eq=False)
class ObservationPath:
    """Uniform time grid ``t_0..t_n`` with one observation increment per step."""

    t_grid: np.ndarray
    dZ: np.ndarray
    dt: float

    def __post_init__(self):
        t = _frozen(np.atleast_1d(self.t_grid))
        dZ = np.asarray(self.dZ, dtype=float)
        if dZ.ndim == 1:
            dZ = dZ[:, None]
        if dZ.ndim != 2 or dZ.shape[0] != t.size - 1:
            raise InvalidInputError(f"dZ must have one row per step ({t.size - 1}), got shape {dZ.shape}")
        dZ = _frozen(dZ)
        dt = float(self.dt)
        if dt <= 0:
            raise ConfigError(f"dt must be positive, got {dt}", field="dt")
        if t.ndim != 1 or t.size < 1:
            raise InvalidInputError("t_grid must be a non-empty 1-d array")
        if t.size > 1 and np.max(np.abs(np.diff(t) - dt)) > 1e-9 * max(dt, np.max(np.abs(t))):
            raise InvalidInputError("t_grid is not uniformly spaced with step dt")
        object.__setattr__(self, "t_grid", t)
        object.__setattr__(self, "dZ", dZ)
        object.__setattr__(self, "dt", dt)

    @property
    def n(self):
        return self.t_grid.size - 1

    @classmethod
    def uniform(cls, dZ, dt, t0=0.0):
        dZ = np.asarray(dZ, dtype=float)
        if dZ.ndim == 1:
            dZ = dZ[:, None]
        if not dt > 0:
            raise ConfigError(f"dt must be positive, got {dt}", field="dt")
        t = t0 + dt * np.arange(dZ.shape[0] + 1)
        return cls(t, dZ, dt)


def n_steps(t_max, dt):
    """Number of whole steps of size ``dt`` that fit in ``[0, t_max]``."""
    if not dt > 0:
        raise ConfigError(f"dt must be positive, got {dt}", field="dt")
    if not t_max >= dt:
        raise ConfigError(f"t_max must be at least dt, got t_max={t_max}, dt={dt}", field="t_max")
    return int(np.floor(t_max / dt + 1e-9))


def sample_gaussian(belief, size, gen):
    """``size`` i.i.d. draws from ``belief`` as a ``(size, d)`` array."""
    L = np.linalg.cholesky(belief.cov)
    z = gen.standard_normal((size, belief.d))
    return belief.mean + z @ L.T


def simulate_truth_and_observations(model, init, t_max, dt, seed):
    """Euler-Maruyama sample of the hidden signal and its observation increments.

    Returns ``(X, obs)`` with ``X`` of shape ``(n + 1, d)``. The signal draws
    from the ``truth`` stream and the observation noise from the
    ``observation`` stream of ``seed``.
    """
    n = n_steps(t_max, dt)
    if init.d != model.d:
        raise InvalidInputError(f"initial belief has dimension {init.d}, model has {model.d}")
    truth = rngmod.stream(seed, "truth")
    noise = rngmod.stream(seed, "observation")
    X = np.empty((n + 1, model.d))
    X[0] = sample_gaussian(init, 1, truth)[0]
    xi = truth.standard_normal((n, model.d))
    eta = noise.standard_normal((n, model.m))
    sq = np.sqrt(dt)
    dZ = np.empty((n, model.m))
    for k in range(n):
        dZ[k] = model.C @ X[k] * dt + sq * eta[k]
        X[k + 1] = X[k] + model.A @ X[k] * dt + sq * xi[k]
    return X, ObservationPath.uniform(dZ, dt)


def kalman_bucy_step(model, belief, dZ, dt):
    """One forward-Euler step of the Kalman-Bucy mean and Riccati equations."""
    mean, cov = belief.mean, belief.cov
    dZ = np.atleast_1d(np.asarray(dZ, dtype=float))
    K = cov @ model.C.T
    new_mean = mean + model.A @ mean * dt + K @ (dZ - model.C @ mean * dt)
    new_cov = symmetrize(cov + model.riccati_rhs(cov) * dt)
    if not is_strictly_pd(new_cov):
        raise NumericalInstabilityError(
            f"Riccati step with dt={dt} lost positive definiteness; use a smaller dt"
        )
    return GaussianBelief(new_mean, new_cov)


def run_kalman_bucy(model, init, obs):
    """Beliefs at every grid point, ``beliefs[0] is init``."""
    if not is_strictly_pd(init.cov):
        raise NumericalInstabilityError("initial covariance is not strictly positive definite")
    beliefs = [init]
    for k in range(obs.n):
        beliefs.append(kalman_bucy_step(model, beliefs[-1], obs.dZ[k], obs.dt))
    return beliefs
