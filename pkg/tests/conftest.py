import numpy as np
import pytest

from infomrac import ReferenceModel, Scenario, StateSpacePlant, Trajectory


def random_schur(rng, n, radius=0.6):
    M = rng.standard_normal((n, n))
    return M * (radius / max(abs(np.linalg.eigvals(M))))


def random_solvable_pair(rng, n, m, p=None, bm_full_rank=True):
    """Plant and model with a known matching solution ``(K, L)``.

    The model is drawn first and the plant is built as ``A = Am - B K``, so the
    matching equations hold by construction.  Plants with spectral radius above
    1.5 are redrawn to keep short trajectories numerically well scaled.
    """
    p = m if p is None else p
    while True:
        Am = random_schur(rng, n)
        B = rng.standard_normal((n, m))
        K = rng.standard_normal((m, n))
        if bm_full_rank:
            L = rng.standard_normal((m, p))
        else:
            L = rng.standard_normal((m, 1)) @ rng.standard_normal((1, p))
        if max(abs(np.linalg.eigvals(Am - B @ K))) > 1.5:
            continue
        try:
            plant = StateSpacePlant(Am - B @ K, B)
            model = ReferenceModel(Am, B @ L)
        except ValueError:
            continue
        return plant, model, K, L


def random_trajectory(rng, plant, t, input_rank=None):
    """Open-loop data; inputs confined to an ``input_rank``-dim subspace if given."""
    m = plant.m
    if input_rank is None:
        U = rng.standard_normal((m, t))
    else:
        U = rng.standard_normal((m, input_rank)) @ rng.standard_normal((input_rank, t))
    return Trajectory.simulate(plant, rng.standard_normal(plant.n), U)


@pytest.fixture
def stable_scenario():
    """Small stable plant whose closed loop converges within a few thousand steps."""
    A = np.array([[0.5, 0.2], [0.0, 0.3]])
    Am = np.array([[0.2, 0.1], [0.0, 0.4]])
    return Scenario(StateSpacePlant(A, np.eye(2)), ReferenceModel(Am, np.eye(2)),
                    seed=0, max_steps=5000, name="stable")


@pytest.fixture
def unsolvable_scenario():
    """Two states, one input; ``Bm`` is not in the image of ``B``."""
    plant = StateSpacePlant(np.array([[0.0, 1.0], [0.0, 0.0]]), np.array([[0.0], [1.0]]))
    model = ReferenceModel(np.array([[0.0, 1.0], [0.0, 0.5]]), np.array([[1.0], [1.0]]))
    return Scenario(plant, model, seed=3, max_steps=100, name="unsolvable")
