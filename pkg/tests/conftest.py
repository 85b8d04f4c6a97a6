import numpy as np
import pytest

from otfpf.models import GaussianBelief, LinearGaussianModel

_ACCEPTANCE = []


def random_spd(gen, d, low=0.2, high=5.0):
    Q, _ = np.linalg.qr(gen.standard_normal((d, d)))
    return (Q * gen.uniform(low, high, d)) @ Q.T


def random_sym(gen, d):
    W = gen.standard_normal((d, d))
    return W + W.T


def random_skew(gen, d):
    W = gen.standard_normal((d, d))
    return W - W.T


def random_orthogonal(gen, d):
    Q, R = np.linalg.qr(gen.standard_normal((d, d)))
    return Q * np.sign(np.diag(R))


def rel_fro(residual, reference):
    return np.linalg.norm(residual) / np.linalg.norm(reference)


@pytest.fixture
def gen():
    return np.random.default_rng(20240607)


@pytest.fixture
def oscillator():
    return LinearGaussianModel([[0.0, 1.0], [-1.0, -0.5]], [[1.0, 0.0]])


@pytest.fixture
def oscillator_init():
    return GaussianBelief([1.0, 0.0], [[2.0, 0.5], [0.5, 1.0]])


@pytest.fixture
def diffusion():
    return LinearGaussianModel.pure_diffusion()


@pytest.fixture
def acceptance(request):
    """Record one pass/fail line per acceptance criterion for the terminal summary."""

    def record(passed, detail):
        _ACCEPTANCE.append((request.node.name, bool(passed), detail))
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, passed, detail in _ACCEPTANCE:
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  {name}: {detail}")
