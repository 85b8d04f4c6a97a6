"""Acceptance criteria. Each test records one PASS/FAIL line for the summary."""

import os

import numpy as np
import pytest

from otfpf.cli import main
from otfpf.config import parse_config
from otfpf.ensembles import Ensemble, init_ensemble, ot_fpf_step, ot_fpf_step_scalar, propagate, run_filter
from otfpf.experiments import replication_seeds, run_variance_study
from otfpf.matrixeq import solve_lyapunov, solve_skew_equation
from otfpf.models import (
    GaussianBelief,
    LinearGaussianModel,
    ObservationPath,
    run_kalman_bucy,
    simulate_truth_and_observations,
)
from otfpf.transport import (
    family_gain,
    gaussian_ot_map,
    iter_time_stepping,
    lemma1_residual,
    skew_correction,
    symmetric_gain,
    transport_cost,
)

from conftest import random_orthogonal, random_spd, rel_fro

CONFIGS = os.path.join(os.path.dirname(__file__), os.pardir, "configs")
CHECK_TIMES = (0.0, 0.5, 1.0)


@pytest.fixture(scope="module")
def brownian():
    cfg = parse_config(os.path.join(CONFIGS, "brownian_variance.ini"))
    assert (cfg.N, cfg.R, cfg.dt, cfg.t_max) == (80, 500, 1e-3, 1.0)
    return cfg, run_variance_study(cfg)


def _index(times, t):
    return int(np.argmin(np.abs(times - t)))


def test_mc_mean_variance(brownian, acceptance):
    cfg, report = brownian
    s = report.get("monte_carlo", "mean[0]")
    errs = []
    for t in CHECK_TIMES:
        k = _index(report.times, t)
        target = (1 + t) / cfg.N
        errs.append(abs(s.simulation_variance[k] - target) / target)
    detail = "rel err " + ", ".join(f"t={t:g}: {e:.3f}" for t, e in zip(CHECK_TIMES, errs)) + " (tol 0.15)"
    acceptance(max(errs) <= 0.15, detail)
    assert max(errs) <= 0.15, detail


def test_ot_mean_variance_and_frozen_mean(brownian, acceptance):
    cfg, report = brownian
    s = report.get("ot_fpf", "mean[0]")
    errs = [abs(s.simulation_variance[_index(report.times, t)] * cfg.N - 1) for t in CHECK_TIMES]
    # per-replication drift of the ensemble mean, scaled by the initial ensemble spread
    seeds = replication_seeds(cfg.seed, cfg.R)
    X0 = np.stack([init_ensemble(cfg.init, cfg.N, sd).particles for sd in seeds])
    means, covs, _ = propagate("ot_fpf", cfg.model, X0, np.zeros((cfg.n, 1)), cfg.dt)
    scale = np.maximum(np.abs(means[:, 0, 0]), np.sqrt(covs[:, 0, 0, 0]))
    drift = np.max(np.abs(means[:, :, 0] - means[:, :1, 0]) / scale[:, None])
    ok = max(errs) <= 0.15 and drift <= 1e-8
    detail = f"max rel err {max(errs):.3f} (tol 0.15), max mean drift {drift:.1e} (tol 1e-8)"
    acceptance(ok, detail)
    assert ok, detail


def test_variance_estimator_variance(brownian, acceptance):
    cfg, report = brownian
    parts, ok = [], True
    for kind in ("monte_carlo", "ot_fpf"):
        s = report.get(kind, "cov[0,0]")
        for t in (0.0, 1.0):
            k = _index(report.times, t)
            target = 3 * (1 + t) ** 2 / cfg.N if kind == "monte_carlo" else 3 / cfg.N
            err = abs(s.simulation_variance[k] - target) / target
            ok &= err <= 0.20
            parts.append(f"{kind} t={t:g}: N*var={cfg.N * s.simulation_variance[k]:.3f} vs {cfg.N * target:g}")
    detail = "; ".join(parts) + " (tol 0.20)"
    acceptance(ok, detail)
    assert ok, detail


def test_exactness_against_kalman_bucy(oscillator, oscillator_init, acceptance):
    N, dt = 10_000, 1e-3
    tol = 3 * (1 / np.sqrt(N) + dt)
    _, obs = simulate_truth_and_observations(oscillator, oscillator_init, 1.0, dt, seed=0)
    kb = run_kalman_bucy(oscillator, oscillator_init, obs)[-1]
    sd = np.sqrt(np.diag(kb.cov))
    worst = {}
    for kind in ("fpf", "ot_fpf"):
        run = run_filter(kind, oscillator, oscillator_init, obs, N, seed=1)
        mean_err = np.abs(run.means[-1] - kb.mean) / np.maximum(np.abs(kb.mean), sd)
        cov_err = np.abs(run.covs[-1] - kb.cov) / np.outer(sd, sd)
        worst[kind] = max(mean_err.max(), cov_err.max())
    ok = max(worst.values()) <= tol
    detail = ", ".join(f"{k}: {v:.4f}" for k, v in worst.items()) + f" (tol {tol:.4f})"
    acceptance(ok, detail)
    assert ok, detail


def test_gaussian_ot_map_suite(acceptance):
    gen = np.random.default_rng(5)
    worst_sym = worst_push = 0.0
    beaten = 0
    for i in range(200):
        d = (1, 2, 3, 5)[i % 4]
        src = GaussianBelief(gen.standard_normal(d), random_spd(gen, d))
        dst = GaussianBelief(gen.standard_normal(d), random_spd(gen, d))
        F = gaussian_ot_map(src, dst).F
        worst_sym = max(worst_sym, np.max(np.abs(F - F.T)))
        worst_push = max(worst_push, rel_fro(F @ src.cov @ F - dst.cov, dst.cov))
        best = transport_cost(src, dst, F)
        w, V = np.linalg.eigh(dst.cov)
        root_y = (V * np.sqrt(w)) @ V.T
        w, V = np.linalg.eigh(src.cov)
        inv_root_x = (V / np.sqrt(w)) @ V.T
        for _ in range(20):
            alt = root_y @ random_orthogonal(gen, d) @ inv_root_x
            if transport_cost(src, dst, alt) < best * (1 - 1e-12) - 1e-14:
                beaten += 1
    ok = worst_sym <= 1e-10 and worst_push <= 1e-8 and beaten == 0
    detail = f"asym {worst_sym:.1e} (1e-10), pushforward {worst_push:.1e} (1e-8), cheaper alternatives {beaten}"
    acceptance(ok, detail)
    assert ok, detail


def test_matrix_equation_suite(acceptance):
    gen = np.random.default_rng(6)
    lyap = gsym = skew = oskew = decomp = 0.0
    for _ in range(200):
        d = int(gen.integers(1, 7))
        model = LinearGaussianModel(gen.standard_normal((d, d)), gen.standard_normal((int(gen.integers(1, 4)), d)))
        Sigma = random_spd(gen, d)
        R = model.riccati_rhs(Sigma)
        G = solve_lyapunov(Sigma, R)
        lyap = max(lyap, rel_fro(G @ Sigma + Sigma @ G - R, R))
        gsym = max(gsym, np.max(np.abs(G - G.T)) / max(np.max(np.abs(G)), 1e-300))
        Sinv = np.linalg.inv(Sigma)
        CtC = model.C.T @ model.C
        rhs = model.A.T - model.A + 0.5 * (Sigma @ CtC - CtC @ Sigma)
        Omega = solve_skew_equation(Sinv, rhs)
        if d > 1:
            skew = max(skew, rel_fro(Omega @ Sinv + Sinv @ Omega - rhs, rhs))
            oskew = max(oskew, np.max(np.abs(Omega + Omega.T)))
        Gs = symmetric_gain(model, Sigma)
        decomp = max(decomp, rel_fro(family_gain(model, Sigma, skew_correction(model, Sigma)) - Gs, Gs))
    ok = lyap <= 1e-8 and gsym <= 1e-10 and skew <= 1e-8 and oskew == 0.0 and decomp <= 1e-7
    detail = (
        f"lyapunov {lyap:.1e}, G asym {gsym:.1e}, skew eq {skew:.1e}, "
        f"Omega+Omega^T {oskew:.1e}, decomposition {decomp:.1e}"
    )
    acceptance(ok, detail)
    assert ok, detail


def test_one_step_expansion_order(oscillator, oscillator_init, acceptance):
    Sigma = oscillator_init.cov
    steps = (1e-2, 5e-3, 1e-3, 5e-4)
    scaled = [lemma1_residual(oscillator, Sigma, dt) / dt**2 for dt in steps]
    ratios = [lemma1_residual(oscillator, Sigma, dt / 2) / lemma1_residual(oscillator, Sigma, dt) for dt in (1e-2, 1e-3)]
    bounded = max(scaled) <= 2 * min(scaled)
    ok = bounded and all(0.15 <= r <= 0.4 for r in ratios)
    detail = (
        f"residual/dt^2 in [{min(scaled):.4f}, {max(scaled):.4f}], "
        f"halving ratios {ratios[0]:.4f}, {ratios[1]:.4f} (range [0.15, 0.4])"
    )
    acceptance(ok, detail)
    assert ok, detail


def test_time_stepping_construction(diffusion, acceptance):
    N, dt, n = 100_000, 1e-3, 1000
    init = GaussianBelief.standard()
    obs = ObservationPath.uniform(np.zeros((n, 1)), dt)
    ens = init_ensemble(init, N, seed=8)
    for last in iter_time_stepping(diffusion, init, obs, ens):
        pass
    euler = ens
    for _ in range(n):
        euler = ot_fpf_step(diffusion, euler, [0.0], dt)
    sd = np.sqrt(2.0)
    post_mean = abs(last.mean()[0]) / sd
    post_cov = abs(last.cov()[0, 0] - 2.0) / 2.0
    gap_mean = abs(last.mean()[0] - euler.mean()[0]) / sd
    gap_cov = abs(last.cov()[0, 0] - euler.cov()[0, 0]) / euler.cov()[0, 0]
    ok = max(post_mean, post_cov) <= 0.02 and max(gap_mean, gap_cov) <= 0.03
    detail = (
        f"vs N(0,2): mean {post_mean:.4f}, var {post_cov:.4f} (tol 0.02); "
        f"vs Euler ot_fpf: mean {gap_mean:.4f}, var {gap_cov:.4f} (tol 0.03)"
    )
    acceptance(ok, detail)
    assert ok, detail


def test_scalar_vector_agreement(acceptance):
    gen = np.random.default_rng(9)
    worst = 0.0
    for _ in range(100):
        a, c = gen.normal(), gen.normal()
        N = int(gen.integers(2, 200))
        S = gen.normal() + gen.uniform(0.1, 3.0) * gen.standard_normal(N)
        dZ, dt = 0.1 * gen.normal(), 10.0 ** gen.uniform(-4, -2)
        vec = ot_fpf_step(LinearGaussianModel(a, c), Ensemble(S), [dZ], dt).particles[:, 0]
        ref = ot_fpf_step_scalar(a, c, S, dZ, dt)
        worst = max(worst, np.max(np.abs(vec - ref)) / max(1.0, np.max(np.abs(S))))
    ok = worst <= 1e-12
    detail = f"max scaled difference {worst:.1e} (tol 1e-12)"
    acceptance(ok, detail)
    assert ok, detail


def test_cli_determinism(tmp_path, acceptance):
    runs = {
        "simulate": os.path.join(CONFIGS, "oscillator_simulate.ini"),
        "variance-study": os.path.join(CONFIGS, "brownian_variance.ini"),
    }
    same = {}
    for command, cfg in runs.items():
        outs = [tmp_path / f"{command}-{i}" for i in range(2)]
        for out in outs:
            assert main([command, "--config", cfg, "--seed", "7", "--out", str(out)]) == 0
        same[command] = (outs[0] / "moments.csv").read_bytes() == (outs[1] / "moments.csv").read_bytes()
    ok = all(same.values())
    detail = ", ".join(f"{k}: {'identical' if v else 'DIFFERENT'}" for k, v in same.items())
    acceptance(ok, detail)
    assert ok, detail
