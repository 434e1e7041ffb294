"""Small SVD-based helpers shared by the rank and image tests."""

import numpy as np

# Relative singular-value cutoff used throughout the package.
DEFAULT_RANK_TOL = 1e-9


def _singular_values(M):
    M = np.atleast_2d(np.asarray(M, dtype=float))
    if M.size == 0:
        return np.zeros(0)
    try:
        return np.linalg.svd(M, compute_uv=False)
    except np.linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError(f"SVD did not converge: {exc}") from exc


def rank_from_singular_values(s, tau=DEFAULT_RANK_TOL):
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.count_nonzero(s > tau * s[0]))


def matrix_rank(M, tau=DEFAULT_RANK_TOL):
    """Count singular values above ``tau`` times the largest one."""
    return rank_from_singular_values(_singular_values(M), tau)


def column_basis(M, tau=DEFAULT_RANK_TOL):
    """Orthonormal basis of the numerical column space of ``M``."""
    M = np.atleast_2d(np.asarray(M, dtype=float))
    if M.size == 0:
        return np.zeros((M.shape[0], 0))
    U, s, _ = np.linalg.svd(M, full_matrices=False)
    r = rank_from_singular_values(s, tau)
    return U[:, :r]


def left_null_space(M, tau=DEFAULT_RANK_TOL):
    """Orthonormal basis N with N.T @ M ~ 0 (columns of N span the left kernel)."""
    M = np.atleast_2d(np.asarray(M, dtype=float))
    rows = M.shape[0]
    if M.size == 0:
        return np.eye(rows)
    U, s, _ = np.linalg.svd(M, full_matrices=True)
    r = rank_from_singular_values(s, tau)
    return U[:, r:]


def projection_residual(M, v, tau=DEFAULT_RANK_TOL):
    """Distance from ``v`` (vector or matrix of columns) to the column space of ``M``."""
    Q = column_basis(M, tau)
    v = np.asarray(v, dtype=float)
    return float(np.linalg.norm(v - Q @ (Q.T @ v)))
