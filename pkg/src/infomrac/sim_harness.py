"""Closed-loop simulation of the adaptive controller against a hidden plant."""

import csv
import enum
import json
import logging
import math
import os
from dataclasses import dataclass, field, replace
from typing import List, Optional, Union

import numpy as np

from .adaptive_controller import (AdaptiveController, ControllerConfig, Mode,
                                  lyapunov_value, optimal_theta)
from .informativity import (InformativeTimeTracker, RankTolerance, Trajectory,
                            update_tracker)
from .lti_models import (ConfigurationError, DimensionError, GainPair, ReferenceModel,
                         StateSpacePlant, check_pair, matching_residual)

log = logging.getLogger(__name__)

# Relative and absolute slack for the step-to-step Lyapunov check.
LYAPUNOV_RTOL = 1e-12
LYAPUNOV_ATOL = 1e-12


class Verdict(str, enum.Enum):
    CONVERGED = "converged"
    UNSOLVABLE = "unsolvable"
    MAX_STEPS = "max_steps"


class SimulationError(RuntimeError):
    """Numerical failure at step ``t``; carries ``t_star`` and the log so far."""

    def __init__(self, t, message, t_star=None, steps=None):
        super().__init__(f"step {t}: {message}")
        self.t = t
        self.t_star = t_star
        self.steps = steps if steps is not None else []


class LyapunovViolation(SimulationError):
    pass


@dataclass(frozen=True)
class NormalReference:
    stddev: float = 1.0
    seed: Optional[int] = None


@dataclass(frozen=True)
class ConstantReference:
    value: tuple

    def __post_init__(self):
        object.__setattr__(self, "value", tuple(float(v) for v in self.value))


ReferenceSpec = Union[NormalReference, ConstantReference]


def make_rng(seed):
    """Counter-based Philox generator so logs replay identically across platforms."""
    return np.random.Generator(np.random.Philox(seed))


def reference_signal(spec: ReferenceSpec, t: int, rng, p: int):
    if isinstance(spec, ConstantReference):
        if len(spec.value) != p:
            raise DimensionError(f"constant reference has {len(spec.value)} entries, need {p}")
        return np.array(spec.value)
    if isinstance(spec, NormalReference):
        return rng.normal(0.0, spec.stddev, size=p)
    raise TypeError(f"unknown reference spec {spec!r}")


@dataclass(frozen=True)
class Scenario:
    plant: StateSpacePlant
    model: ReferenceModel
    reference: ReferenceSpec = NormalReference()
    x0: Optional[np.ndarray] = None
    xm0: Optional[np.ndarray] = None
    controller: ControllerConfig = ControllerConfig()
    epsilon: float = 1e-10
    max_steps: int = 10_000
    seed: int = 0
    name: str = ""

    def __post_init__(self):
        check_pair(self.plant, self.model)
        if not self.epsilon > 0:
            raise ConfigurationError("epsilon must be positive")
        if self.max_steps < 1:
            raise ConfigurationError("max_steps must be positive")
        for key in ("x0", "xm0"):
            v = getattr(self, key)
            if v is not None:
                v = np.array(v, dtype=float).reshape(-1)
                if v.shape[0] != self.plant.n:
                    raise DimensionError(f"{key} must have length {self.plant.n}")
                v.setflags(write=False)
                object.__setattr__(self, key, v)
        self.controller.initial_input(self.plant.m)

    def with_seed(self, seed):
        return replace(self, seed=int(seed))


@dataclass
class StepRecord:
    t: int
    x: np.ndarray
    xm: np.ndarray
    u: np.ndarray
    mode: Mode
    e_norm: float
    matching_error: float
    residual_sq: float
    informative: bool
    lyapunov: float = math.nan


@dataclass
class RunReport:
    t_star: Optional[int]
    verdict: Verdict
    stop_step: int
    final_gains: GainPair
    final_matching_error: float
    final_residual_sq: float
    seed: int
    steps: List[StepRecord] = field(default_factory=list, repr=False)

    def to_dict(self):
        return {
            "t_star": self.t_star,
            "verdict": self.verdict.value,
            "stop_step": self.stop_step,
            "K": self.final_gains.K.tolist(),
            "L": self.final_gains.L.tolist(),
            "final_matching_error": self.final_matching_error,
            "final_residual_sq": self.final_residual_sq,
            "seed": self.seed,
        }


def run(scenario: Scenario, check_lyapunov: bool = True) -> RunReport:
    """Simulate the closed loop until convergence, unsolvability or ``max_steps``.

    Each step ``t >= 1``: draw ``r(t)``; test the data ``(U_-(t), X(t))`` for
    informativity; fold the last transition into the buffers; stop if the
    residual criterion holds; otherwise pick the input, adapt ``Theta`` and
    advance plant and reference model.  A state or input that stops being
    finite raises :class:`SimulationError`.
    """
    # Overflow is reported through the finiteness checks, not warnings.
    with np.errstate(over="ignore", invalid="ignore"):
        return _run(scenario, check_lyapunov)


def _run(scenario, check_lyapunov):
    plant, model, cfg = scenario.plant, scenario.model, scenario.controller
    n, m, p = plant.n, plant.m, model.p
    rank_tol = RankTolerance(cfg.rank_tol)

    init_seq, ref_seq = np.random.SeedSequence(scenario.seed).spawn(2)
    init_rng = make_rng(init_seq)
    x0 = scenario.x0 if scenario.x0 is not None else init_rng.standard_normal(n)
    xm0 = scenario.xm0 if scenario.xm0 is not None else init_rng.standard_normal(n)
    ref = scenario.reference
    ref_rng = make_rng(ref.seed if isinstance(ref, NormalReference) and ref.seed is not None
                       else ref_seq)

    A, B, Am, Bm = plant.A, plant.B, model.Am, model.Bm
    # Matching residual [A + B K - Am, B L - Bm] = B [K L] + offset.
    offset = np.hstack([A - Am, -Bm])
    ctrl = AdaptiveController(model, m, cfg)
    tracker = InformativeTimeTracker.start(model, m, rank_tol)

    X = np.empty((n, scenario.max_steps + 2))
    U = np.empty((m, scenario.max_steps + 1))
    X[:, 0] = x0
    x, xm = np.array(x0, dtype=float), np.array(xm0, dtype=float)
    target_norm_sq = float(np.sum(model.target() ** 2))

    steps: List[StepRecord] = []
    u = cfg.initial_input(m)
    r = reference_signal(ref, 0, ref_rng, p)
    zero_gains = ctrl.gains()
    steps.append(StepRecord(0, x.copy(), xm.copy(), u.copy(), Mode.INITIAL,
                            float(np.linalg.norm(x - xm)),
                            matching_residual(plant, model, zero_gains),
                            target_norm_sq, False))

    theta_star = None
    V_next = math.nan
    holds = 0
    warned = False
    t = 0
    while True:
        U[:, t] = u
        x_next = A @ x + B @ u
        xm = Am @ xm + Bm @ r
        if not np.isfinite(x_next).all():
            raise SimulationError(t + 1, "plant state is no longer finite",
                                  tracker.t_star, steps)
        X[:, t + 1] = x_next
        x_prev, x = x, x_next
        t += 1

        r = reference_signal(ref, t, ref_rng, p)
        if not tracker.settled:
            traj = Trajectory(U[:, :t], X[:, :t + 1])
            tracker = update_tracker(tracker, traj, model, rank_tol)
        t_star = tracker.t_star
        informative = t_star is not None

        appended = ctrl.observe(t, t_star, U[:, t - 1], x_prev, x)
        if informative and t > t_star + 1:
            holds = 0 if appended else holds + 1
            if holds > 10 * (n + m) and not warned:
                log.warning("buffers frozen for %d steps at t = %d; sigma = %g is "
                            "probably too small", holds, t, cfg.sigma)
                warned = True

        residual_sq = ctrl.residual_sq()
        KL = ctrl.stacked_gains()
        match = B @ KL + offset
        match_err = math.sqrt(np.vdot(match, match))

        V = math.nan
        if informative and t > t_star:
            if theta_star is None:
                bufs = ctrl.buffers
                theta_star = optimal_theta(bufs.Phi_Xm[:, :t_star], bufs.Phi_Xp[:, :t_star],
                                           model, cfg.rank_tol)
            V = V_next if V_next == V_next else lyapunov_value(ctrl.theta.Theta, theta_star)

        verdict = None
        if tracker.unsolvable:
            verdict = Verdict.UNSOLVABLE
        elif informative and t > t_star and residual_sq <= scenario.epsilon:
            verdict = Verdict.CONVERGED

        u, mode = ctrl.act(x, r, t, informative)
        if not np.isfinite(u).all():
            raise SimulationError(t, "control input is no longer finite",
                                  tracker.t_star, steps)
        e = x - xm
        steps.append(StepRecord(t, x.copy(), xm.copy(), u.copy(), mode,
                                math.sqrt(np.vdot(e, e)), match_err,
                                residual_sq, informative, V))

        if verdict is None and t >= scenario.max_steps:
            verdict = Verdict.MAX_STEPS
        if verdict is not None:
            gains = GainPair.from_stacked(KL, n)
            return RunReport(t_star, verdict, t, gains,
                             matching_residual(plant, model, gains), residual_sq,
                             scenario.seed, steps)

        ctrl.adapt(t, t_star)
        if V == V:
            V_next = lyapunov_value(ctrl.theta.Theta, theta_star)
            if check_lyapunov and V_next > V * (1 + LYAPUNOV_RTOL) + LYAPUNOV_ATOL:
                raise LyapunovViolation(t, f"Lyapunov value rose from {V!r} to {V_next!r}",
                                        t_star, steps)


# -- scenario files ---------------------------------------------------------

def _matrix(rows):
    return np.array(rows, dtype=float)


def scenario_from_dict(d) -> Scenario:
    try:
        plant = StateSpacePlant(_matrix(d["plant"]["A"]), _matrix(d["plant"]["B"]))
        model = ReferenceModel(_matrix(d["model"]["Am"]), _matrix(d["model"]["Bm"]))
    except KeyError as exc:
        raise ConfigurationError(f"scenario is missing key {exc}") from exc
    ref = d.get("reference", {"kind": "normal"})
    kind = ref.get("kind", "normal")
    if kind == "normal":
        reference = NormalReference(float(ref.get("stddev", 1.0)), ref.get("seed"))
    elif kind == "constant":
        reference = ConstantReference(ref["value"])
    else:
        raise ConfigurationError(f"unknown reference kind {kind!r}")
    c = d.get("controller", {})
    tols = c.get("tolerances", {})
    controller = ControllerConfig(
        gamma=float(c.get("gamma", 1.99)),
        sigma=float(c.get("sigma", 100.0)),
        u0=c.get("u0"),
        c_r=float(c.get("c_r", 1.0)),
        rank_tol=float(tols.get("rank", ControllerConfig.rank_tol)),
        image_tol=float(tols.get("image", ControllerConfig.image_tol)),
        normalize_growth_phase=bool(c.get("normalize_growth_phase", True)),
    )
    return Scenario(plant, model, reference, d.get("x0"), d.get("xm0"), controller,
                    float(d.get("epsilon", 1e-10)), int(d.get("max_steps", 10_000)),
                    int(d.get("seed", 0)), d.get("name", ""))


def scenario_to_dict(s: Scenario):
    if isinstance(s.reference, ConstantReference):
        ref = {"kind": "constant", "value": list(s.reference.value)}
    else:
        ref = {"kind": "normal", "stddev": s.reference.stddev, "seed": s.reference.seed}
    c = s.controller
    return {
        "name": s.name,
        "plant": {"A": s.plant.A.tolist(), "B": s.plant.B.tolist()},
        "model": {"Am": s.model.Am.tolist(), "Bm": s.model.Bm.tolist()},
        "reference": ref,
        "x0": None if s.x0 is None else s.x0.tolist(),
        "xm0": None if s.xm0 is None else s.xm0.tolist(),
        "controller": {
            "gamma": c.gamma, "sigma": c.sigma,
            "u0": None if c.u0 is None else c.u0.tolist(),
            "c_r": c.c_r,
            "tolerances": {"rank": c.rank_tol, "image": c.image_tol},
            "normalize_growth_phase": c.normalize_growth_phase,
        },
        "epsilon": s.epsilon,
        "max_steps": s.max_steps,
        "seed": s.seed,
    }


def load_scenario(path) -> Scenario:
    with open(path) as fh:
        return scenario_from_dict(json.load(fh))


def save_scenario(scenario: Scenario, path):
    with open(path, "w") as fh:
        json.dump(scenario_to_dict(scenario), fh, indent=2)
        fh.write("\n")


# -- outputs ----------------------------------------------------------------

def csv_header(n, m):
    return (["t", "mode"] + [f"u_{i + 1}" for i in range(m)]
            + [f"x_{i + 1}" for i in range(n)] + [f"xm_{i + 1}" for i in range(n)]
            + ["e_norm", "residual_sq", "matching_error", "informative"])


def export_csv(steps: List[StepRecord], path, n=None, m=None):
    if steps:
        n, m = steps[0].x.shape[0], steps[0].u.shape[0]
    elif n is None or m is None:
        raise ValueError("dimensions are required to write an empty log")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(csv_header(n, m))
        for s in steps:
            writer.writerow([s.t, s.mode.value] + [repr(float(v)) for v in s.u]
                            + [repr(float(v)) for v in s.x] + [repr(float(v)) for v in s.xm]
                            + [repr(s.e_norm), repr(s.residual_sq), repr(s.matching_error),
                               int(s.informative)])


def export_report(report: RunReport, path):
    with open(path, "w") as fh:
        json.dump(report.to_dict(), fh, indent=2)
        fh.write("\n")


def emit_plots(steps: List[StepRecord], out_dir, prefix=""):
    """Write tracking-error, matching-error and input panels as PNG files."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    os.makedirs(out_dir, exist_ok=True)
    t = np.array([s.t for s in steps])
    e = np.array([s.x - s.xm for s in steps])
    u = np.array([s.u for s in steps])
    match = np.array([s.matching_error for s in steps])
    paths = []

    fig, ax = plt.subplots(figsize=(6, 3.5))
    for i in range(e.shape[1]):
        ax.plot(t, e[:, i], label=f"$e_{i + 1}$")
    ax.set_xlabel("t")
    ax.set_ylabel("tracking error")
    ax.legend(loc="upper right")
    paths.append(os.path.join(out_dir, f"{prefix}tracking_error.png"))
    fig.tight_layout()
    fig.savefig(paths[-1], dpi=120)
    plt.close(fig)

    fig, ax = plt.subplots(figsize=(6, 3.5))
    ax.semilogy(t, match)
    ax.set_xlabel("t")
    ax.set_ylabel("matching error")
    paths.append(os.path.join(out_dir, f"{prefix}matching_error.png"))
    fig.tight_layout()
    fig.savefig(paths[-1], dpi=120)
    plt.close(fig)

    fig, ax = plt.subplots(figsize=(6, 3.5))
    for i in range(u.shape[1]):
        ax.plot(t, u[:, i], label=f"$u_{i + 1}$")
    ax.set_xlabel("t")
    ax.set_ylabel("input")
    ax.legend(loc="upper right")
    paths.append(os.path.join(out_dir, f"{prefix}inputs.png"))
    fig.tight_layout()
    fig.savefig(paths[-1], dpi=120)
    plt.close(fig)
    return paths
