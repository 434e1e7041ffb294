"""Data informativity tests on recorded input-state data.

A trajectory of length ``t`` holds inputs ``u(0..t-1)`` and states
``x(0..t)``.  From it we can ask two different questions:

* are the data *informative for system identification*, i.e. is the stacked
  matrix ``[X_-; U_-]`` of full row rank ``n + m``;
* are the data *informative for model reference control*, i.e. does the
  column space of ``[X_-; X_+]`` contain that of ``[[I, 0], [Am, Bm]]``.

The second condition is weaker than the first whenever the matching equations
have a solution, and it is all the adaptive controller needs.
"""

import csv
from dataclasses import dataclass, replace
from typing import Optional, Union

import numpy as np

from . import _linalg
from .lti_models import DimensionError, GainPair, ReferenceModel, StateSpacePlant, step

# Relative residual accepted when solving for V1, V2.
IMAGE_TOL = 1e-8


@dataclass(frozen=True)
class RankTolerance:
    """Relative singular-value cutoff: ``s_i`` counts iff ``s_i > tau * s_max``."""

    tau: float = _linalg.DEFAULT_RANK_TOL

    def __post_init__(self):
        if not self.tau >= 0:
            raise ValueError(f"rank tolerance must be nonnegative, got {self.tau}")


TolLike = Union[RankTolerance, float, None]


def _tau(tol: TolLike) -> float:
    if tol is None:
        return _linalg.DEFAULT_RANK_TOL
    if isinstance(tol, RankTolerance):
        return tol.tau
    return RankTolerance(float(tol)).tau


def numeric_rank(M, tol: TolLike = None) -> int:
    """Numerical rank of ``M``; the zero (or empty) matrix has rank 0."""
    return _linalg.matrix_rank(M, _tau(tol))


@dataclass(frozen=True)
class Trajectory:
    """Input-state data ``U_-(t)`` (m x t) and ``X(t)`` (n x (t+1))."""

    U_minus: np.ndarray
    X: np.ndarray

    def __post_init__(self):
        U = np.array(self.U_minus, dtype=float)
        X = np.array(self.X, dtype=float)
        if U.ndim != 2 or X.ndim != 2:
            raise DimensionError("U_minus and X must be 2-D")
        if U.shape[1] < 1:
            raise DimensionError("a trajectory needs at least one input sample")
        if X.shape[1] != U.shape[1] + 1:
            raise DimensionError(
                f"X must have one more column than U_minus ({X.shape[1]} vs {U.shape[1]})")
        U.setflags(write=False)
        X.setflags(write=False)
        object.__setattr__(self, "U_minus", U)
        object.__setattr__(self, "X", X)

    @property
    def t(self):
        return self.U_minus.shape[1]

    @property
    def n(self):
        return self.X.shape[0]

    @property
    def m(self):
        return self.U_minus.shape[0]

    @property
    def X_minus(self):
        return self.X[:, :-1]

    @property
    def X_plus(self):
        return self.X[:, 1:]

    def prefix(self, t):
        if not 1 <= t <= self.t:
            raise ValueError(f"prefix length must be in [1, {self.t}], got {t}")
        return Trajectory(self.U_minus[:, :t], self.X[:, :t + 1])

    @classmethod
    def simulate(cls, plant: StateSpacePlant, x0, inputs):
        """Open-loop data from ``plant`` driven by the columns of ``inputs``."""
        inputs = np.atleast_2d(np.asarray(inputs, dtype=float))
        X = np.empty((plant.n, inputs.shape[1] + 1))
        X[:, 0] = x0
        for k in range(inputs.shape[1]):
            X[:, k + 1] = step(plant, X[:, k], inputs[:, k])
        return cls(inputs, X)

    def to_csv(self, path):
        n, m = self.n, self.m
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["t"] + [f"u_{i + 1}" for i in range(m)]
                            + [f"x_{i + 1}" for i in range(n)])
            for k in range(self.t + 1):
                u = [repr(float(v)) for v in self.U_minus[:, k]] if k < self.t else [""] * m
                writer.writerow([k] + u + [repr(float(v)) for v in self.X[:, k]])

    @classmethod
    def from_csv(cls, path):
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        if not rows:
            raise ValueError(f"{path}: empty file")
        header, body = rows[0], rows[1:]
        u_cols = [i for i, name in enumerate(header) if name.startswith("u_")]
        x_cols = [i for i, name in enumerate(header) if name.startswith("x_")]
        if not u_cols or not x_cols:
            raise ValueError(f"{path}: header must contain u_* and x_* columns")
        if len(body) < 2:
            raise ValueError(f"{path}: need at least two rows of data")
        X = np.array([[float(row[i]) for i in x_cols] for row in body]).T
        U = np.array([[float(row[i]) for i in u_cols] for row in body[:-1]]).T
        if any(body[-1][i].strip() for i in u_cols):
            raise ValueError(f"{path}: the final row must leave the inputs empty")
        return cls(U, X)


def hankel(U, depth):
    """Block Hankel matrix of depth ``depth``: ``H[i*m + k, j] = U[k, i + j]``."""
    U = np.atleast_2d(np.asarray(U, dtype=float))
    m, t = U.shape
    if not 1 <= depth <= t:
        raise ValueError(f"depth must be in [1, {t}], got {depth}")
    cols = t - depth + 1
    return np.vstack([U[:, i:i + cols] for i in range(depth)])


def is_pe(U, order, tol: TolLike = None):
    """Persistency of excitation: the depth-``order`` Hankel matrix has full row rank."""
    U = np.atleast_2d(np.asarray(U, dtype=float))
    return numeric_rank(hankel(U, order), tol) == U.shape[0] * order


def informative_for_sysid(traj: Trajectory, tol: TolLike = None):
    stacked = np.vstack([traj.X_minus, traj.U_minus])
    return numeric_rank(stacked, tol) == traj.n + traj.m


def _check_model(traj, model):
    if model.n != traj.n:
        raise DimensionError(f"model has {model.n} states, data have {traj.n}")


def informative_for_mrc(traj: Trajectory, model: ReferenceModel, tol: TolLike = None):
    """Rank test: appending ``[[I, 0], [Am, Bm]]`` to ``[X_-; X_+]`` adds no rank."""
    _check_model(traj, model)
    data = np.vstack([traj.X_minus, traj.X_plus])
    augmented = np.hstack([data, model.target()])
    return numeric_rank(data, tol) == numeric_rank(augmented, tol)


def image_inclusion_residual(traj: Trajectory, model: ReferenceModel, tol: TolLike = None):
    """Relative distance of ``[[I, 0], [Am, Bm]]`` from the column space of ``[X_-; X_+]``."""
    _check_model(traj, model)
    data = np.vstack([traj.X_minus, traj.X_plus])
    target = model.target()
    return _linalg.projection_residual(data, target, _tau(tol)) / np.linalg.norm(target)


class InformativityError(RuntimeError):
    """The data do not support the requested construction."""


def solve_v(traj: Trajectory, model: ReferenceModel, tol: TolLike = None,
            image_tol: float = IMAGE_TOL):
    """Minimum-norm ``(V1, V2)`` with ``[X_-; X_+] [V1 V2] = [[I, 0], [Am, Bm]]``."""
    _check_model(traj, model)
    data = np.vstack([traj.X_minus, traj.X_plus])
    target = model.target()
    V, *_ = np.linalg.lstsq(data, target, rcond=_tau(tol))
    residual = np.linalg.norm(data @ V - target)
    if residual > image_tol * max(1.0, np.linalg.norm(target)):
        raise InformativityError(
            f"data are not informative for model reference control "
            f"(residual {residual:.3e})")
    n = model.n
    return V[:, :n], V[:, n:]


def gains_from_data(traj: Trajectory, model: ReferenceModel, tol: TolLike = None,
                    image_tol: float = IMAGE_TOL) -> GainPair:
    """Offline gains ``K = U_- V1``, ``L = U_- V2``.

    For exact data generated by the plant these satisfy the matching
    equations, because ``A_s + B_s K = X_+ V1 = Am`` and ``B_s L = X_+ V2 = Bm``.
    """
    V1, V2 = solve_v(traj, model, tol, image_tol)
    return GainPair(traj.U_minus @ V1, traj.U_minus @ V2)


@dataclass(frozen=True)
class InformativeTimeTracker:
    """First time ``T*`` at which the online data became informative.

    ``t_star`` stays ``None`` until found; once the horizon ``n + m`` passes
    without success the tracker flags the matching equations as unsolvable.
    """

    n: int
    m: int
    lower_bound: int
    t_star: Optional[int] = None
    unsolvable: bool = False

    @property
    def horizon(self):
        return self.n + self.m

    @classmethod
    def start(cls, model: ReferenceModel, m: int, tol: TolLike = None):
        return cls(n=model.n, m=m, lower_bound=model.n + numeric_rank(model.Bm, tol))

    @property
    def settled(self):
        return self.t_star is not None or self.unsolvable


def update_tracker(tracker: InformativeTimeTracker, traj: Trajectory,
                   model: ReferenceModel, tol: TolLike = None) -> InformativeTimeTracker:
    if tracker.settled:
        return tracker
    t = traj.t
    if t >= tracker.lower_bound and informative_for_mrc(traj, model, tol):
        return replace(tracker, t_star=t)
    if t >= tracker.horizon:
        return replace(tracker, unsolvable=True)
    return tracker


def initial_excitation_holds(traj: Trajectory, delta: float):
    """``sum_k [x(k); u(k)][x(k); u(k)]^T - delta I`` is positive definite."""
    if delta <= 0:
        raise ValueError("delta must be positive")
    D = np.vstack([traj.X_minus, traj.U_minus])
    return bool(np.linalg.eigvalsh(D @ D.T).min() > delta)
