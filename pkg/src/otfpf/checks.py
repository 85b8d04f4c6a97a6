"""Numerical invariant suite behind the ``check`` subcommand."""

from dataclasses import dataclass

import numpy as np

from . import rng as rngmod
from .models import GaussianBelief, LinearGaussianModel, ObservationPath, run_kalman_bucy
from .transport import family_gain, gaussian_ot_map, lemma1_residual, skew_correction, symmetric_gain


@dataclass(frozen=True)
class CheckResult:
    name: str
    value: float
    low: float
    high: float

    @property
    def passed(self):
        return bool(np.isfinite(self.value) and self.low <= self.value <= self.high)


def _rel(residual, scale):
    return float(np.linalg.norm(residual) / max(np.linalg.norm(scale), 1e-300))


def _asym(M):
    return float(np.max(np.abs(M - M.T)) / max(np.max(np.abs(M)), 1e-300))


def _matrix_checks(model, Sigma, tag, gen):
    R = model.riccati_rhs(Sigma)
    G = symmetric_gain(model, Sigma)
    Omega = skew_correction(model, Sigma)
    Sinv = np.linalg.inv(Sigma)
    CtC = model.C.T @ model.C
    skew_rhs = model.A.T - model.A + 0.5 * (Sigma @ CtC - CtC @ Sigma)
    W = gen.standard_normal(Sigma.shape)
    random_omega = W - W.T
    G_family = family_gain(model, Sigma, random_omega)
    return [
        CheckResult(f"lyapunov_residual[{tag}]", _rel(G @ Sigma + Sigma @ G - R, R), 0.0, 1e-8),
        CheckResult(f"lyapunov_asymmetry[{tag}]", _asym(G), 0.0, 1e-10),
        CheckResult(
            f"skew_residual[{tag}]", _rel(Omega @ Sinv + Sinv @ Omega - skew_rhs, skew_rhs), 0.0, 1e-8
        ),
        CheckResult(
            f"decomposition_identity[{tag}]", _rel(family_gain(model, Sigma, Omega) - G, G), 0.0, 1e-7
        ),
        CheckResult(
            f"family_covariance_residual[{tag}]",
            _rel(G_family @ Sigma + Sigma @ G_family.T - R, R),
            0.0,
            1e-7,
        ),
    ]


def run_checks(model, init, t_max=1.0, dt=1e-3, seed=0):
    """Residuals of the matrix equations, the OT map and the one-step expansion.

    Evaluated at the initial covariance and at the Kalman-Bucy covariance at
    ``t_max`` (the covariance does not depend on the observations, so a zero
    path is used).
    """
    gen = rngmod.stream(seed, "check")
    n = max(int(np.floor(t_max / dt + 1e-9)), 1)
    beliefs = run_kalman_bucy(model, init, ObservationPath.uniform(np.zeros((n, model.m)), dt))
    first, last = beliefs[0], beliefs[-1]
    results = _matrix_checks(model, first.cov, "t=0", gen)
    results += _matrix_checks(model, last.cov, f"t={n * dt:g}", gen)
    T = gaussian_ot_map(first, last)
    results.append(CheckResult("ot_map_asymmetry", _asym(T.F), 0.0, 1e-10))
    results.append(CheckResult("ot_map_pushforward", _rel(T.F @ first.cov @ T.F - last.cov, last.cov), 0.0, 1e-8))
    for step in (1e-2, 1e-3):
        r_full = lemma1_residual(model, first.cov, step)
        r_half = lemma1_residual(model, first.cov, step / 2)
        if r_full < 1e-13:
            # stationary covariance: the expansion is exact at every order
            results.append(CheckResult(f"lemma1_residual[dt={step:g}]", r_full, 0.0, 1e-13))
        else:
            results.append(CheckResult(f"lemma1_ratio[dt={step:g}]", r_half / r_full, 0.15, 0.4))
    return results


def default_check_problem():
    """Observable two-dimensional model used when ``check`` gets no config."""
    model = LinearGaussianModel([[0.0, 1.0], [-1.0, -0.5]], [[1.0, 0.0]])
    init = GaussianBelief([1.0, 0.0], [[2.0, 0.5], [0.5, 1.0]])
    return model, init

