"""The eight closed-loop experiments: a 4-state numerical system (S1-S4) and
the longitudinal dynamics of a highly maneuverable aircraft (S5-S8).

S1, S2, S5, S6 use standard-normal references; the others a constant
reference of 0.1 in every channel.  All use gamma = 1.99, sigma = 100 and a
stopping threshold of 1e-10.
"""

import numpy as np

from .adaptive_controller import ControllerConfig
from .lti_models import ReferenceModel, StateSpacePlant
from .sim_harness import ConstantReference, NormalReference, Scenario

NUMERICAL_A = np.array([
    [-1.1, -0.85, -0.1, -0.62],
    [-0.24, -0.65, 0.77, -0.34],
    [-1.57, -0.26, -0.36, -1.2],
    [0.33, -0.99, -0.43, 0.56],
])
NUMERICAL_B = np.array([
    [0.35, 0.52, 0.01],
    [0.39, -0.14, 1.45],
    [1.04, 0.98, 1.16],
    [0.13, 0.34, -0.29],
])
NUMERICAL_AM = np.array([
    [-0.75, -0.32, 0.24, -0.27],
    [0.15, 0.66, -0.29, 0.05],
    [-0.53, 1.88, -0.48, -0.16],
    [0.46, -0.94, -0.01, 0.69],
])
NUMERICAL_BM = np.array([
    [0.52, -0.86, -0.69],
    [-0.14, 1.2, 0.67],
    [0.98, -0.86, -0.92],
    [0.34, -0.76, -0.55],
])

# Angle of attack scaled by 100; 0.01 s sampling.
AIRCRAFT_A = np.array([
    [0.9810, 0.9831, -0.0007],
    [0.0012, 0.9737, 0.0],
    [0.0, 0.01, 1.0],
])
AIRCRAFT_B = np.array([
    [-0.2436, -0.1708, -0.0050, -0.1997],
    [-0.4621, -0.3160, 0.2240, -0.3118],
    [0.0, 0.0, 0.0, 0.0],
])
AIRCRAFT_AM = np.array([
    [0.9800, 0.6484, -0.7487],
    [-0.0008, 0.2964, -1.5178],
    [0.0, 0.01, 1.0],
])
AIRCRAFT_BM = AIRCRAFT_B.copy()
AIRCRAFT_SAMPLING_TIME = 0.01

SCENARIO_NAMES = tuple(f"S{i}" for i in range(1, 9))
DEFAULT_SEEDS = dict(zip(SCENARIO_NAMES, range(1, 9)))

_CONTROLLER = ControllerConfig(gamma=1.99, sigma=100.0)


def numerical_system():
    return StateSpacePlant(NUMERICAL_A, NUMERICAL_B), ReferenceModel(NUMERICAL_AM, NUMERICAL_BM)


def aircraft_system():
    return StateSpacePlant(AIRCRAFT_A, AIRCRAFT_B), ReferenceModel(AIRCRAFT_AM, AIRCRAFT_BM)


def paper_scenario(name, seed=None) -> Scenario:
    if name not in SCENARIO_NAMES:
        raise KeyError(f"unknown scenario {name!r}; choose from {', '.join(SCENARIO_NAMES)}")
    index = int(name[1:])
    if index <= 4:
        plant, model = numerical_system()
        max_steps = 10_000
    else:
        plant, model = aircraft_system()
        max_steps = 20_000
    if index in (1, 2, 5, 6):
        reference = NormalReference(stddev=1.0)
    else:
        reference = ConstantReference((0.1,) * model.p)
    return Scenario(plant, model, reference, controller=_CONTROLLER, epsilon=1e-10,
                    max_steps=max_steps,
                    seed=DEFAULT_SEEDS[name] if seed is None else int(seed), name=name)


def paper_scenarios():
    return [paper_scenario(name) for name in SCENARIO_NAMES]
