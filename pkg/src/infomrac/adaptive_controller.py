"""Online adaptive controller built on informative data.

The controller keeps three data buffers ``Phi_U``, ``Phi_Xm``, ``Phi_Xp`` and a
parameter matrix ``Theta`` whose row count equals the buffers' column count.
Its gains are ``[K_hat, L_hat] = Phi_U @ Theta``.  Before the informative time
``T*`` the buffers grow with every sample and ``Theta`` grows with them; after
``T*`` the first ``T*`` columns freeze and the last column slides over fresh
samples whose state norm stays below ``sigma``.  ``Theta`` is driven by a
gradient step on ``||Phi_X Theta - [[I, 0], [Am, Bm]]||_F^2``, normalized by
``||Phi_X||_F^2`` after ``T*`` and, unless configured otherwise, before it too.

Until the data are informative, the applied input alternates between the
adaptive input and an exploration input chosen to raise the rank of
``[Phi_Xm; Phi_U]`` by one.
"""

import enum
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import _linalg
from .informativity import IMAGE_TOL
from .lti_models import ConfigurationError, DimensionError, GainPair, ReferenceModel


class Mode(str, enum.Enum):
    INITIAL = "initial"
    ADAPTIVE = "adaptive"
    EXPLORATION = "exploration"


class ExplorationError(RuntimeError):
    """No rank-increasing input exists for the current buffers."""


@dataclass(frozen=True)
class ControllerConfig:
    gamma: float = 1.99
    sigma: float = 100.0
    u0: Optional[np.ndarray] = None
    c_r: float = 1.0
    rank_tol: float = _linalg.DEFAULT_RANK_TOL
    image_tol: float = IMAGE_TOL
    # With gamma near 2 the raw step diverges once ||Phi_X||_2^2 > 2 / gamma.
    normalize_growth_phase: bool = True

    def __post_init__(self):
        if not 0.0 < self.gamma < 2.0:
            raise ConfigurationError(f"gamma must lie in (0, 2), got {self.gamma}")
        if not self.sigma > 0:
            raise ConfigurationError(f"sigma must be positive, got {self.sigma}")
        if not self.c_r > 0:
            raise ConfigurationError(f"c_r must be positive, got {self.c_r}")
        if self.u0 is not None:
            u0 = np.array(self.u0, dtype=float).reshape(-1)
            if np.linalg.norm(u0) == 0:
                raise ConfigurationError("u0 must be nonzero")
            u0.setflags(write=False)
            object.__setattr__(self, "u0", u0)

    def initial_input(self, m):
        if self.u0 is None:
            return np.ones(m) / np.sqrt(m)
        if self.u0.shape[0] != m:
            raise DimensionError(f"u0 must have length {m}, got {self.u0.shape[0]}")
        return self.u0.copy()


@dataclass(frozen=True)
class DataBuffers:
    Phi_U: np.ndarray
    Phi_Xm: np.ndarray
    Phi_Xp: np.ndarray
    sigma: float
    # [Phi_U; Phi_Xm; Phi_Xp] in one array; the three blocks are views into it.
    stack: Optional[np.ndarray] = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        stack = self.stack
        if stack is None:
            stack = np.vstack([self.Phi_U, self.Phi_Xm, self.Phi_Xp]).astype(float)
        stack.setflags(write=False)
        m, n = self.Phi_U.shape[0], self.Phi_Xm.shape[0]
        object.__setattr__(self, "stack", stack)
        object.__setattr__(self, "Phi_U", stack[:m])
        object.__setattr__(self, "Phi_Xm", stack[m:m + n])
        object.__setattr__(self, "Phi_Xp", stack[m + n:])
        object.__setattr__(self, "_Phi_X", stack[m:])

    @classmethod
    def empty(cls, n, m, sigma):
        return cls(np.zeros((m, 0)), np.zeros((n, 0)), np.zeros((n, 0)), sigma)

    @property
    def columns(self):
        return self.Phi_U.shape[1]

    @property
    def Phi_X(self):
        return self._Phi_X

    def stacked_state_input(self):
        """``[Phi_Xm; Phi_U]``, whose rank the exploration input increases."""
        return np.vstack([self.Phi_Xm, self.Phi_U])


@dataclass(frozen=True)
class ThetaState:
    Theta: np.ndarray
    gamma: float

    @classmethod
    def initial(cls, n, p, gamma):
        return cls(np.zeros((1, n + p)), gamma)

    @property
    def rows(self):
        return self.Theta.shape[0]


def _in_growth_phase(t, t_star):
    return t_star is None or t <= t_star + 1


def update_buffers(bufs: DataBuffers, t: int, t_star: Optional[int],
                   u_prev, x_prev, x_now) -> DataBuffers:
    """Fold the transition ``(x(t-1), u(t-1)) -> x(t)`` into the buffers.

    Three cases: while ``t <= T* + 1`` the raw sample is appended; afterwards
    the sample replaces the last column (keeping the first ``T*``) if
    ``|x(t)| <= sigma``; otherwise the buffers are left unchanged.
    """
    if t < 1:
        raise ValueError("buffers are defined from t = 1 on")
    x_now = np.asarray(x_now, dtype=float).reshape(-1)
    if _in_growth_phase(t, t_star):
        keep = bufs.columns
    elif math.sqrt(np.vdot(x_now, x_now)) <= bufs.sigma:
        keep = t_star
    else:
        return bufs
    m, n = bufs.Phi_U.shape[0], bufs.Phi_Xm.shape[0]
    stack = np.empty((m + 2 * n, keep + 1))
    stack[:, :keep] = bufs.stack[:, :keep]
    stack[:m, keep] = np.ravel(u_prev)
    stack[m:m + n, keep] = np.ravel(x_prev)
    stack[m + n:, keep] = x_now
    return DataBuffers(stack[:m], stack[m:m + n], stack[m + n:], bufs.sigma, stack)


def residual(bufs: DataBuffers, theta: ThetaState, model: ReferenceModel):
    """``Phi_X Theta - [[I, 0], [Am, Bm]]``."""
    if bufs.columns == 0:
        return -model.target()
    if theta.rows != bufs.columns:
        raise DimensionError(
            f"Theta has {theta.rows} rows but the buffers have {bufs.columns} columns")
    return bufs.Phi_X @ theta.Theta - model.target()


def compute_delta(bufs: DataBuffers, theta: ThetaState, t: int,
                  t_star: Optional[int], model: ReferenceModel,
                  normalize_growth: bool = False):
    """Adaptation error; normalized by ``||Phi_X||_F^2`` once ``t > T*``.

    While ``t <= T*`` the raw residual is returned unless ``normalize_growth``.
    """
    return normalize_residual(residual(bufs, theta, model), bufs, t, t_star, normalize_growth)


def normalize_residual(err, bufs: DataBuffers, t: int, t_star: Optional[int],
                       normalize_growth: bool = False):
    if (t_star is None or t <= t_star) and not normalize_growth:
        return err
    Phi_X = bufs.Phi_X
    norm_sq = float(np.vdot(Phi_X, Phi_X))
    if norm_sq == 0.0:
        raise FloatingPointError(f"Phi_X vanished at t = {t}")
    return err / norm_sq


def theta_update(theta: ThetaState, bufs: DataBuffers, delta, t: int,
                 t_star: Optional[int]) -> ThetaState:
    """Gradient step ``Theta - gamma Phi_X^T Delta``; a zero row is appended while ``t <= T*``."""
    Phi_X = bufs.Phi_X
    if Phi_X.shape[1] != theta.rows or delta.shape != (Phi_X.shape[0], theta.Theta.shape[1]):
        raise DimensionError("Theta, buffers and Delta have inconsistent shapes")
    new = theta.Theta - theta.gamma * (Phi_X.T @ delta)
    if t_star is None or t <= t_star:
        new = np.vstack([new, np.zeros((1, new.shape[1]))])
    return ThetaState(new, theta.gamma)


def stacked_gains(bufs: DataBuffers, theta: ThetaState):
    """``[K_hat, L_hat] = Phi_U Theta``; zero while the buffers are empty."""
    if bufs.columns == 0:
        return np.zeros((bufs.Phi_U.shape[0], theta.Theta.shape[1]))
    return bufs.Phi_U @ theta.Theta


def current_gains(bufs: DataBuffers, theta: ThetaState, n: int) -> GainPair:
    return GainPair.from_stacked(stacked_gains(bufs, theta), n)


def adaptive_input(bufs: DataBuffers, theta: ThetaState, x, r):
    """``u_a = Phi_U Theta [x; r]``."""
    z = np.concatenate([np.asarray(x, dtype=float).reshape(-1),
                        np.asarray(r, dtype=float).reshape(-1)])
    return bufs.Phi_U @ (theta.Theta @ z)


def exploration_input(bufs: DataBuffers, x, c_r: float = 1.0,
                      rank_tol: float = _linalg.DEFAULT_RANK_TOL):
    """Input that makes ``[x; u]`` leave the column space of ``[Phi_Xm; Phi_U]``.

    Picks a left annihilator ``(xi, eta)`` of the stacked buffers with the
    largest possible ``|eta|`` and returns ``u = s c_r eta / |eta|``, the sign
    ``s`` chosen so that ``xi^T x + eta^T u`` is as far from zero as possible.
    """
    x = np.asarray(x, dtype=float).reshape(-1)
    n = bufs.Phi_Xm.shape[0]
    N = _linalg.left_null_space(bufs.stacked_state_input(), rank_tol)
    if N.shape[1] == 0:
        raise ExplorationError("stacked buffers already have full row rank")
    N_xi, N_eta = N[:n], N[n:]
    # Combination of null-space vectors maximizing |eta| over unit coefficients.
    _, s, Vt = np.linalg.svd(N_eta)
    if s.size == 0 or s[0] <= 1e-12:
        raise ExplorationError("every left annihilator has a zero input part")
    c = Vt[0]
    xi, eta = N_xi @ c, N_eta @ c
    direction = eta / np.linalg.norm(eta)
    sign = 1.0 if xi @ x >= 0 else -1.0
    return sign * c_r * direction


def in_column_space(M, v, image_tol: float = IMAGE_TOL,
                    rank_tol: float = _linalg.DEFAULT_RANK_TOL):
    v = np.asarray(v, dtype=float).reshape(-1)
    return _linalg.projection_residual(M, v, rank_tol) <= image_tol * (1.0 + np.linalg.norm(v))


def select_input(bufs: DataBuffers, theta: ThetaState, x, r, t: int,
                 mrc_informative: bool, horizon: int,
                 config: ControllerConfig = ControllerConfig()):
    """Choose between the adaptive input and an exploration input.

    Explore only if ``t < n + m``, the data are not yet informative and the
    adaptive input would add nothing new to ``[Phi_Xm; Phi_U]``.
    """
    if t < 1:
        raise ValueError("u(0) is fixed by the configuration")
    u_a = adaptive_input(bufs, theta, x, r)
    if t >= horizon or mrc_informative:
        return u_a, Mode.ADAPTIVE
    candidate = np.concatenate([np.asarray(x, dtype=float).reshape(-1), u_a])
    if not in_column_space(bufs.stacked_state_input(), candidate,
                           config.image_tol, config.rank_tol):
        return u_a, Mode.ADAPTIVE
    u_r = exploration_input(bufs, x, config.c_r, config.rank_tol)
    return u_r, Mode.EXPLORATION


def optimal_theta(frozen_Xm, frozen_Xp, model: ReferenceModel,
                  rank_tol: float = _linalg.DEFAULT_RANK_TOL):
    """A fixed ``Theta*`` with ``Phi_X(t) Theta* = [[I, 0], [Am, Bm]]`` for every ``t > T*``.

    The minimum-norm solution on the frozen prefix, padded with a zero row for
    the sliding column, so it stays valid whatever that column holds.
    """
    prefix = np.vstack([frozen_Xm, frozen_Xp])
    V, *_ = np.linalg.lstsq(prefix, model.target(), rcond=rank_tol)
    return np.vstack([V, np.zeros((1, V.shape[1]))])


def lyapunov_value(Theta, Theta_star):
    """``V = 0.5 tr(E^T E)`` with ``E = Theta - Theta*``."""
    E = np.asarray(Theta) - np.asarray(Theta_star)
    return 0.5 * float(np.vdot(E, E))


@dataclass
class AdaptiveController:
    """Mutable per-run state: buffers, parameter matrix and input history.

    Owned by a single simulation run; the pure functions above do the work.
    """

    model: ReferenceModel
    m: int
    config: ControllerConfig = field(default_factory=ControllerConfig)

    def __post_init__(self):
        n, p = self.model.n, self.model.p
        self.buffers = DataBuffers.empty(n, self.m, self.config.sigma)
        self.theta = ThetaState.initial(n, p, self.config.gamma)
        self._cached = (None, None, None)

    def residual(self):
        """``Phi_X Theta - [[I, 0], [Am, Bm]]`` for the current state, memoized."""
        bufs, theta, err = self._cached
        if bufs is not self.buffers or theta is not self.theta:
            err = residual(self.buffers, self.theta, self.model)
            self._cached = (self.buffers, self.theta, err)
        return err

    @property
    def horizon(self):
        return self.model.n + self.m

    def observe(self, t, t_star, u_prev, x_prev, x_now):
        before = self.buffers
        self.buffers = update_buffers(before, t, t_star, u_prev, x_prev, x_now)
        return self.buffers is not before

    def act(self, x, r, t, mrc_informative):
        return select_input(self.buffers, self.theta, x, r, t, mrc_informative,
                            self.horizon, self.config)

    def adapt(self, t, t_star):
        delta = normalize_residual(self.residual(), self.buffers, t, t_star,
                                   self.config.normalize_growth_phase)
        self.theta = theta_update(self.theta, self.buffers, delta, t, t_star)
        return delta

    def gains(self):
        return current_gains(self.buffers, self.theta, self.model.n)

    def stacked_gains(self):
        return stacked_gains(self.buffers, self.theta)

    def residual_sq(self):
        err = self.residual()
        return float(np.vdot(err, err))
