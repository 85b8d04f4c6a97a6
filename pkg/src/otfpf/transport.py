"""Optimal transport between Gaussians and the time-stepping particle construction."""

from dataclasses import dataclass

import numpy as np

from .ensembles import Ensemble
from .matrixeq import solve_lyapunov, solve_skew_equation, spd_inv, spd_inv_sqrt, spd_sqrt, symmetrize
from .models import GaussianBelief, kalman_bucy_step, run_kalman_bucy


@dataclass(frozen=True, eq=False)
class AffineMap:
    """``T(x) = offset + F (x - anchor)``."""

    anchor: np.ndarray
    offset: np.ndarray
    F: np.ndarray

    def __call__(self, x):
        # x is (d,) or (N, d); rows are points.
        x = np.asarray(x, dtype=float)
        return self.offset + (x - self.anchor) @ self.F.T

    def then(self, other):
        """The composition ``other(self(x))`` as a single affine map."""
        return AffineMap(self.anchor, other(self.offset), other.F @ self.F)

    def push(self, belief):
        """Image of a Gaussian under the map."""
        return GaussianBelief(self(belief.mean), symmetrize(self.F @ belief.cov @ self.F.T))


def ot_matrix(cov_from, cov_to):
    """Symmetric ``F`` with ``F cov_from F = cov_to``.

    ``F = S (S cov_from S)^{-1/2} S`` with ``S = cov_to^{1/2}``. Broadcasts
    over leading axes.
    """
    root_to = spd_sqrt(cov_to)
    middle = spd_inv_sqrt(root_to @ cov_from @ root_to)
    return symmetrize(root_to @ middle @ root_to)


def gaussian_ot_map(src, dst):
    """Optimal transport map between two non-degenerate Gaussians.

    The map is affine, ``T(x) = dst.mean + F (x - src.mean)``, with ``F``
    the unique symmetric positive definite solution of
    ``F src.cov F = dst.cov``.

    Raises
    ------
    SingularMatrixError
        If either covariance is singular.
    """
    spd_inv_sqrt(src.cov)  # rejects a singular source up front
    return AffineMap(src.mean.copy(), dst.mean.copy(), ot_matrix(src.cov, dst.cov))


def transport_cost(src, dst, F):
    """``E|T(X) - X|^2`` for ``X ~ src`` and ``T(x) = dst.mean + F (x - src.mean)``."""
    shift = dst.mean - src.mean
    C = src.cov
    spread = np.trace(C) - 2.0 * np.trace(F @ C) + np.trace(F @ C @ F.T)
    return float(shift @ shift + spread)


def wasserstein2_gaussians(a, b):
    """Squared 2-Wasserstein distance between two Gaussians (closed form)."""
    root_b = spd_sqrt(b.cov)
    cross = spd_sqrt(root_b @ a.cov @ root_b)
    shift = a.mean - b.mean
    value = shift @ shift + np.trace(a.cov) + np.trace(b.cov) - 2.0 * np.trace(cross)
    return max(float(value), 0.0)


def symmetric_gain(model, Sigma):
    """Unique symmetric ``G`` with ``G Sigma + Sigma G`` equal to the Riccati right-hand side."""
    return solve_lyapunov(Sigma, model.riccati_rhs(Sigma))


def skew_correction(model, Sigma):
    """Skew ``Omega`` that turns the plain feedback gain into the symmetric one.

    Solves ``Omega S^{-1} + S^{-1} Omega = A^T - A + (S C^T C - C^T C S) / 2``.
    """
    CtC = model.C.T @ model.C
    rhs = model.A.T - model.A + 0.5 * (Sigma @ CtC - CtC @ Sigma)
    return solve_skew_equation(spd_inv(Sigma), 0.5 * (rhs - rhs.T))


def family_gain(model, Sigma, Omega):
    """``A + S^{-1}/2 - S C^T C / 2 + Omega S^{-1}``.

    Every skew ``Omega`` yields a drift gain that propagates the covariance
    exactly; ``Omega = 0`` is the feedback particle filter's choice.
    """
    Sinv = spd_inv(Sigma)
    return model.A + 0.5 * Sinv - 0.5 * Sigma @ model.C.T @ model.C + Omega @ Sinv


def lemma1_residual(model, Sigma, dt):
    """``||F(dt) - I - G dt||_F`` for one forward-Euler Riccati step from ``Sigma``.

    ``F(dt)`` is the optimal transport matrix from ``Sigma`` to the covariance
    one step later and ``G`` the symmetric gain at ``Sigma``; the residual is
    second order in ``dt``.
    """
    Sigma = np.asarray(Sigma, dtype=float)
    nxt = kalman_bucy_step(model, GaussianBelief(np.zeros(model.d), Sigma), np.zeros(model.m), dt)
    F = ot_matrix(Sigma, nxt.cov)
    G = symmetric_gain(model, Sigma)
    return float(np.linalg.norm(F - np.eye(model.d) - G * dt))


def iter_time_stepping(model, init, obs, particles):
    """Yield the ensemble at every grid point, moved by successive optimal maps.

    Each step maps the ensemble with the optimal transport map between
    consecutive Kalman-Bucy posteriors. Only one ensemble is alive at a time,
    so large ``N`` and long grids stay cheap in memory.
    """
    beliefs = run_kalman_bucy(model, init, obs)
    ens = particles
    yield ens
    for k in range(obs.n):
        T = gaussian_ot_map(beliefs[k], beliefs[k + 1])
        ens = Ensemble(T(ens.particles))
        yield ens


def time_stepping_process(model, init, obs, particles):
    """List of all ``n + 1`` ensembles produced by :func:`iter_time_stepping`."""
    return list(iter_time_stepping(model, init, obs, particles))
