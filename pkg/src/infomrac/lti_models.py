"""Discrete-time LTI plant and reference model.

The plant ``x(t+1) = A x(t) + B u(t)`` is what the adaptive controller tries to
make behave like the reference model ``xm(t+1) = Am xm(t) + Bm r(t)``.  The
plant matrices are hidden from the controller; they are used here to step the
true system and to score gains against the matching equations
``A + B K = Am``, ``B L = Bm``.
"""

from dataclasses import dataclass, InitVar
from typing import Optional

import numpy as np

from ._linalg import DEFAULT_RANK_TOL, matrix_rank

# Default spectral-radius margin for the Schur test.
SCHUR_TOL = 1e-10
# Default relative tolerance for declaring the matching equations solved.
MATCH_TOL = 1e-8


class ConfigurationError(ValueError):
    """Raised when a system, model or scenario violates a standing assumption."""


class DimensionError(ValueError):
    pass


class EigenvalueError(RuntimeError):
    """The eigenvalue solver failed to converge."""


def _as_matrix(M, name):
    M = np.array(M, dtype=float)
    if M.ndim == 1:
        M = M.reshape(-1, 1)
    if M.ndim != 2:
        raise DimensionError(f"{name} must be a 2-D array, got shape {M.shape}")
    M.setflags(write=False)
    return M


def _as_vector(v, size, name):
    v = np.asarray(v, dtype=float).reshape(-1)
    if v.shape[0] != size:
        raise DimensionError(f"{name} must have length {size}, got {v.shape[0]}")
    return v


def is_controllable(A, B, tol=DEFAULT_RANK_TOL):
    """Kalman rank test on ``[B, AB, ..., A^(n-1) B]``."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.asarray(B, dtype=float)
    if B.ndim == 1:
        B = B.reshape(-1, 1)
    n = A.shape[0]
    if A.shape != (n, n):
        raise DimensionError("A must be square")
    if B.shape[0] != n:
        raise DimensionError("B has the wrong number of rows")
    blocks = [B]
    for _ in range(n - 1):
        blocks.append(A @ blocks[-1])
    return matrix_rank(np.hstack(blocks), tol) == n


def spectral_radius(A):
    A = np.atleast_2d(np.asarray(A, dtype=float))
    if A.shape[0] != A.shape[1]:
        raise DimensionError("A must be square")
    try:
        eig = np.linalg.eigvals(A)
    except np.linalg.LinAlgError as exc:
        raise EigenvalueError(str(exc)) from exc
    return float(np.max(np.abs(eig)))


def is_schur(A, tol=SCHUR_TOL):
    """True iff every eigenvalue of ``A`` has modulus below ``1 - tol``."""
    return spectral_radius(A) < 1.0 - tol


@dataclass(frozen=True)
class StateSpacePlant:
    """The (unknown) plant ``(A_s, B_s)``; controllability is checked on construction."""

    A: np.ndarray
    B: np.ndarray
    check: InitVar[bool] = True

    def __post_init__(self, check):
        A = _as_matrix(self.A, "A")
        B = _as_matrix(self.B, "B")
        n = A.shape[0]
        if A.shape != (n, n) or n < 1:
            raise DimensionError(f"A must be square, got {A.shape}")
        if B.shape[0] != n or B.shape[1] < 1:
            raise DimensionError(f"B must have {n} rows, got {B.shape}")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        if check and not is_controllable(A, B):
            raise ConfigurationError("plant (A, B) is not controllable")

    @property
    def n(self):
        return self.A.shape[0]

    @property
    def m(self):
        return self.B.shape[1]


@dataclass(frozen=True)
class ReferenceModel:
    """Known target dynamics ``(A_m, B_m)``; must be Schur and controllable."""

    Am: np.ndarray
    Bm: np.ndarray
    check: InitVar[bool] = True

    def __post_init__(self, check):
        Am = _as_matrix(self.Am, "Am")
        Bm = _as_matrix(self.Bm, "Bm")
        n = Am.shape[0]
        if Am.shape != (n, n) or n < 1:
            raise DimensionError(f"Am must be square, got {Am.shape}")
        if Bm.shape[0] != n or Bm.shape[1] < 1:
            raise DimensionError(f"Bm must have {n} rows, got {Bm.shape}")
        object.__setattr__(self, "Am", Am)
        object.__setattr__(self, "Bm", Bm)
        if check:
            if not is_schur(Am):
                raise ConfigurationError(
                    f"Am is not Schur (spectral radius {spectral_radius(Am):.6g})")
            if not is_controllable(Am, Bm):
                raise ConfigurationError("reference model (Am, Bm) is not controllable")
        n, p = Am.shape[0], Bm.shape[1]
        target = np.block([[np.eye(n), np.zeros((n, p))], [Am, Bm]])
        target.setflags(write=False)
        object.__setattr__(self, "_target", target)

    @property
    def n(self):
        return self.Am.shape[0]

    @property
    def p(self):
        return self.Bm.shape[1]

    def target(self):
        """The block ``[[I, 0], [Am, Bm]]`` that the stacked state data must span (read-only)."""
        return self._target


@dataclass(frozen=True)
class GainPair:
    K: np.ndarray
    L: np.ndarray

    def __post_init__(self):
        K = _as_matrix(self.K, "K")
        L = _as_matrix(self.L, "L")
        if K.shape[0] != L.shape[0]:
            raise DimensionError("K and L must have the same number of rows")
        object.__setattr__(self, "K", K)
        object.__setattr__(self, "L", L)

    @classmethod
    def from_stacked(cls, KL, n):
        KL = np.asarray(KL, dtype=float)
        return cls(KL[:, :n].copy(), KL[:, n:].copy())


def check_pair(plant, model):
    if plant.n != model.n:
        raise DimensionError(f"plant has {plant.n} states, model has {model.n}")
    if model.p > plant.m:
        raise DimensionError(
            f"model has {model.p} reference inputs but the plant only {plant.m} inputs")


def step(plant, x, u):
    x = _as_vector(x, plant.n, "x")
    u = _as_vector(u, plant.m, "u")
    return plant.A @ x + plant.B @ u


def reference_step(model, xm, r):
    xm = _as_vector(xm, model.n, "xm")
    r = _as_vector(r, model.p, "r")
    return model.Am @ xm + model.Bm @ r


def matching_residual(plant, model, gains):
    """Frobenius norm of ``[A_s + B_s K - A_m, B_s L - B_m]``."""
    check_pair(plant, model)
    if gains.K.shape != (plant.m, plant.n) or gains.L.shape != (plant.m, model.p):
        raise DimensionError(
            f"gains have shapes {gains.K.shape}, {gains.L.shape}; expected "
            f"{(plant.m, plant.n)}, {(plant.m, model.p)}")
    err = np.hstack([plant.A + plant.B @ gains.K - model.Am,
                     plant.B @ gains.L - model.Bm])
    return float(np.linalg.norm(err))


def matching_solvable(plant, model, tol=MATCH_TOL) -> Optional[GainPair]:
    """Ground-truth check of the matching equations using the hidden plant.

    Candidate gains are the least-squares ones, ``K = B_s^+ (A_m - A_s)`` and
    ``L = B_s^+ B_m``.  They are returned only if their residual is below
    ``tol * max(1, ||[A_m, B_m]||_F)``; otherwise no solution exists.
    """
    check_pair(plant, model)
    Bp = np.linalg.pinv(plant.B)
    gains = GainPair(Bp @ (model.Am - plant.A), Bp @ model.Bm)
    scale = max(1.0, float(np.linalg.norm(np.hstack([model.Am, model.Bm]))))
    if matching_residual(plant, model, gains) <= tol * scale:
        return gains
    return None
