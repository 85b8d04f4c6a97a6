"""Small dense symmetric linear algebra.

Square roots of symmetric positive (semi)definite matrices, the symmetric
Lyapunov equation ``G S + S G = R`` and its skew-symmetric counterpart.

All functions accept a single ``(d, d)`` matrix or a stack ``(..., d, d)``
and operate on the trailing two axes, in the style of :mod:`numpy.linalg`.
They are pure; nothing is cached.
"""

import numpy as np

from .errors import InvalidInputError, NotPSDError, SingularMatrixError

SYMMETRY_TOL = 1e-10
PSD_TOL = 1e-10
MAX_LYAPUNOV_DIM = 32


def _as_square(M, name):
    M = np.asarray(M, dtype=float)
    if M.ndim < 2 or M.shape[-1] != M.shape[-2]:
        raise InvalidInputError(f"{name} must be square, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise InvalidInputError(f"{name} has non-finite entries")
    return M


def _max_abs(M):
    return np.max(np.abs(M), axis=(-2, -1))


def symmetrize(M):
    return 0.5 * (M + np.swapaxes(M, -1, -2))


def check_symmetric(M, name="matrix", tol=SYMMETRY_TOL):
    """Raise :class:`InvalidInputError` unless ``M`` is symmetric relative to its largest entry."""
    asym = _max_abs(M - np.swapaxes(M, -1, -2))
    if np.any(asym > tol * _max_abs(M)):
        raise InvalidInputError(f"{name} is not symmetric (max asymmetry {np.max(asym):.3e})")


def check_skew(M, name="matrix", tol=SYMMETRY_TOL):
    """Raise :class:`InvalidInputError` unless ``M + M^T`` vanishes relative to the largest entry."""
    excess = _max_abs(M + np.swapaxes(M, -1, -2))
    if np.any(excess > tol * _max_abs(M)):
        raise InvalidInputError(f"{name} is not skew-symmetric (max |M + M^T| {np.max(excess):.3e})")


def spd_floor(M):
    """Smallest eigenvalue accepted as strictly positive: ``1e-12 * max(1, ||M||_2)``."""
    w = np.linalg.eigvalsh(M)
    return 1e-12 * np.maximum(1.0, np.max(np.abs(w), axis=-1))


def _eigh_checked(M, name):
    M = _as_square(M, name)
    check_symmetric(M, name)
    return np.linalg.eigh(symmetrize(M))


def _strict_eigh(M, name):
    w, V = _eigh_checked(M, name)
    floor = 1e-12 * np.maximum(1.0, np.max(np.abs(w), axis=-1))
    bad = w[..., 0] <= floor
    if np.any(bad):
        raise SingularMatrixError(
            f"{name} is not strictly positive definite "
            f"(min eigenvalue {np.min(w[..., 0]):.3e}, floor {np.max(floor):.3e})"
        )
    return w, V


def is_strictly_pd(M):
    """Elementwise flag over the stack: min eigenvalue above :func:`spd_floor`."""
    w = np.linalg.eigvalsh(symmetrize(np.asarray(M, dtype=float)))
    return w[..., 0] > 1e-12 * np.maximum(1.0, np.max(np.abs(w), axis=-1))


def _from_eig(w, V):
    return symmetrize((V * w[..., None, :]) @ np.swapaxes(V, -1, -2))


def spd_sqrt(M):
    """Symmetric PSD square root via eigendecomposition.

    Eigenvalues in ``[-1e-10 ||M||, 0)`` are treated as round-off and clamped
    to zero; anything more negative raises :class:`NotPSDError`.
    """
    w, V = _eigh_checked(M, "M")
    scale = np.max(np.abs(w), axis=-1)
    if np.any(w[..., 0] < -PSD_TOL * scale):
        raise NotPSDError(f"matrix is not positive semidefinite (min eigenvalue {np.min(w[..., 0]):.3e})")
    return _from_eig(np.sqrt(np.maximum(w, 0.0)), V)


def spd_inv_sqrt(M):
    """Symmetric inverse square root of a strictly positive definite matrix."""
    w, V = _strict_eigh(M, "M")
    return _from_eig(1.0 / np.sqrt(w), V)


def spd_inv(M):
    """Inverse of a strictly positive definite matrix, symmetrized."""
    w, V = _strict_eigh(M, "M")
    return _from_eig(1.0 / w, V)


def _kron_sum(S):
    # Row-major vec: vec(G S + S G) = (I (x) S^T + S (x) I) vec(G); S is symmetric.
    d = S.shape[-1]
    eye = np.eye(d)
    K = np.einsum("ij,...kl->...ikjl", eye, S) + np.einsum("...ij,kl->...ikjl", S, eye)
    return K.reshape(S.shape[:-2] + (d * d, d * d))


def solve_lyapunov(Sigma, Rhs):
    """Solve ``G Sigma + Sigma G = Rhs`` for symmetric ``G``.

    Dense Kronecker vectorization, intended for ``d <= 32``. ``Sigma`` must be
    strictly positive definite, which makes the solution unique; a symmetric
    right-hand side then yields a symmetric ``G``.

    Raises
    ------
    SingularMatrixError
        If ``Sigma`` is not strictly positive definite.
    InvalidInputError
        On shape mismatch, asymmetric input or ``d > 32``.
    """
    Sigma = _as_square(Sigma, "Sigma")
    Rhs = _as_square(Rhs, "Rhs")
    d = Sigma.shape[-1]
    if Rhs.shape[-1] != d:
        raise InvalidInputError(f"Sigma is {d}x{d} but Rhs is {Rhs.shape[-1]}x{Rhs.shape[-1]}")
    if d > MAX_LYAPUNOV_DIM:
        raise InvalidInputError(f"dense Lyapunov solve supports d <= {MAX_LYAPUNOV_DIM}, got {d}")
    check_symmetric(Rhs, "Rhs")
    _strict_eigh(Sigma, "Sigma")
    Sigma = symmetrize(Sigma)
    batch = np.broadcast_shapes(Sigma.shape[:-2], Rhs.shape[:-2])
    K = np.broadcast_to(_kron_sum(Sigma), batch + (d * d, d * d))
    rhs = np.broadcast_to(Rhs, batch + (d, d)).reshape(batch + (d * d, 1))
    try:
        g = np.linalg.solve(K, rhs)
    except np.linalg.LinAlgError as exc:
        raise SingularMatrixError(f"Kronecker system is singular: {exc}") from exc
    return symmetrize(g.reshape(batch + (d, d)))


def _skew_basis(d):
    rows, cols = np.triu_indices(d, 1)
    E = np.zeros((rows.size, d, d))
    k = np.arange(rows.size)
    E[k, rows, cols] = 1.0
    E[k, cols, rows] = -1.0
    return E, rows, cols


def solve_skew_equation(SigmaInv, Rhs):
    """Solve ``Omega S + S Omega = Rhs`` for skew-symmetric ``Omega``.

    ``S`` (here ``SigmaInv``) is strictly positive definite and ``Rhs`` skew
    symmetric. The operator maps skew matrices to skew matrices, so the
    system is assembled on the ``d(d-1)/2`` upper-triangular coordinates and
    solved densely. For ``d == 1`` the only skew matrix is zero.
    """
    S = _as_square(SigmaInv, "SigmaInv")
    Rhs = _as_square(Rhs, "Rhs")
    d = S.shape[-1]
    if Rhs.shape[-1] != d:
        raise InvalidInputError(f"SigmaInv is {d}x{d} but Rhs is {Rhs.shape[-1]}x{Rhs.shape[-1]}")
    check_skew(Rhs, "Rhs")
    _strict_eigh(S, "SigmaInv")
    S = symmetrize(S)
    batch = np.broadcast_shapes(S.shape[:-2], Rhs.shape[:-2])
    if d == 1:
        return np.zeros(batch + (1, 1))
    E, rows, cols = _skew_basis(d)
    Sb = S[..., None, :, :]
    images = E @ Sb + Sb @ E  # (..., p, d, d), one image per basis element
    L = np.swapaxes(images[..., rows, cols], -1, -2)  # columns = basis elements
    L = np.broadcast_to(L, batch + L.shape[-2:])
    rhs = np.broadcast_to(Rhs, batch + (d, d))[..., rows, cols][..., None]
    try:
        coef = np.linalg.solve(L, rhs)[..., 0]
    except np.linalg.LinAlgError as exc:
        raise SingularMatrixError(f"skew system is singular: {exc}") from exc
    Omega = np.einsum("...k,kij->...ij", coef, E)
    return 0.5 * (Omega - np.swapaxes(Omega, -1, -2))
