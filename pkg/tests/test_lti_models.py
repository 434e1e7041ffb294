import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from infomrac.lti_models import (ConfigurationError, DimensionError, GainPair,
                                 ReferenceModel, StateSpacePlant, check_pair,
                                 is_controllable, is_schur, matching_residual,
                                 matching_solvable, reference_step, spectral_radius, step)
from infomrac.presets import (AIRCRAFT_A, AIRCRAFT_B, NUMERICAL_A, NUMERICAL_B,
                              aircraft_system, numerical_system)

finite = st.floats(-10, 10, allow_nan=False)


def test_controllability_of_double_integrator():
    A = np.array([[1.0, 1.0], [0.0, 1.0]])
    assert is_controllable(A, np.array([[0.0], [1.0]]))
    assert not is_controllable(A, np.array([[1.0], [0.0]]))


def test_uncontrollable_plant_is_rejected():
    with pytest.raises(ConfigurationError):
        StateSpacePlant(np.eye(2), np.array([[1.0], [0.0]]))


def test_non_schur_model_is_rejected():
    with pytest.raises(ConfigurationError, match="Schur"):
        ReferenceModel(np.diag([0.5, 1.0]), np.eye(2))


def test_schur_boundary():
    assert is_schur(np.diag([0.5, -0.9]))
    assert not is_schur(np.diag([0.5, 1.0 - 1e-12]))
    assert spectral_radius(np.array([[0.0, -2.0], [2.0, 0.0]])) == pytest.approx(2.0)


def test_shape_errors():
    with pytest.raises(DimensionError):
        StateSpacePlant(np.ones((2, 3)), np.ones((2, 1)))
    with pytest.raises(DimensionError):
        StateSpacePlant(np.eye(2), np.ones((3, 1)))
    plant = StateSpacePlant(np.eye(2) * 0.5, np.eye(2))
    with pytest.raises(DimensionError):
        step(plant, [1.0, 2.0, 3.0], [0.0, 0.0])


def test_more_references_than_inputs_is_rejected():
    plant = StateSpacePlant(np.array([[0.0, 1.0], [0.0, 0.0]]), np.array([[0.0], [1.0]]))
    with pytest.raises(DimensionError):
        check_pair(plant, ReferenceModel(0.5 * np.eye(2), np.eye(2)))


@settings(max_examples=50, deadline=None)
@given(arrays(float, 3, elements=finite), arrays(float, 3, elements=finite),
       arrays(float, 2, elements=finite), arrays(float, 2, elements=finite),
       finite, finite)
def test_step_is_linear(x1, x2, u1, u2, a, b):
    plant = StateSpacePlant(np.array([[0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [0.2, -0.1, 0.9]]),
                            np.array([[0.0, 1.0], [0.0, 0.0], [1.0, 0.0]]))
    lhs = step(plant, a * x1 + b * x2, a * u1 + b * u2)
    rhs = a * step(plant, x1, u1) + b * step(plant, x2, u2)
    np.testing.assert_allclose(lhs, rhs, atol=1e-9 * (1 + np.abs(rhs).max()))


def test_step_matches_elementwise_sum():
    rng = np.random.default_rng(0)
    plant = StateSpacePlant(NUMERICAL_A, NUMERICAL_B)
    x, u = rng.standard_normal(4), rng.standard_normal(3)
    expected = [sum(NUMERICAL_A[i, j] * x[j] for j in range(4))
                + sum(NUMERICAL_B[i, k] * u[k] for k in range(3)) for i in range(4)]
    np.testing.assert_allclose(step(plant, x, u), expected, rtol=1e-14)


def test_reference_step():
    model = ReferenceModel(np.diag([0.5, 0.25]), np.eye(2))
    np.testing.assert_allclose(reference_step(model, [2.0, 4.0], [1.0, -1.0]), [2.0, 0.0])


def test_target_block():
    model = ReferenceModel(np.diag([0.5, 0.25]), np.array([[1.0], [2.0]]))
    expected = np.array([[1, 0, 0], [0, 1, 0], [0.5, 0, 1], [0, 0.25, 2]], dtype=float)
    np.testing.assert_array_equal(model.target(), expected)
    with pytest.raises(ValueError):
        model.target()[0, 0] = 3.0


def test_preset_matrices_verbatim():
    assert NUMERICAL_A[0, 0] == -1.1
    assert AIRCRAFT_A[2, 1] == 0.01
    _, model = aircraft_system()
    assert model.Am[1, 2] == -1.5178
    np.testing.assert_array_equal(model.Bm, AIRCRAFT_B)


def test_preset_plants_are_open_loop_unstable():
    # Independent check via characteristic polynomial roots.
    for A in (NUMERICAL_A, AIRCRAFT_A):
        assert max(abs(np.roots(np.poly(A)))) > 1.0


def test_matching_solvable_on_presets():
    for plant, model in (numerical_system(), aircraft_system()):
        gains = matching_solvable(plant, model)
        assert gains is not None
        assert matching_residual(plant, model, gains) <= 1e-12


def test_matching_unsolvable_counterexample():
    plant = StateSpacePlant(np.array([[0.0, 1.0], [0.0, 0.0]]), np.array([[0.0], [1.0]]))
    model = ReferenceModel(np.array([[0.0, 1.0], [0.0, 0.5]]), np.array([[1.0], [1.0]]))
    assert matching_solvable(plant, model) is None


def test_matching_residual_is_frobenius_norm():
    plant, model = numerical_system()
    gains = GainPair(np.zeros((3, 4)), np.zeros((3, 3)))
    expected = np.sqrt(np.sum((plant.A - model.Am) ** 2) + np.sum(model.Bm ** 2))
    assert matching_residual(plant, model, gains) == pytest.approx(expected, rel=1e-14)


def test_gain_pair_split():
    KL = np.arange(12.0).reshape(2, 6)
    g = GainPair.from_stacked(KL, 4)
    np.testing.assert_array_equal(g.K, KL[:, :4])
    np.testing.assert_array_equal(g.L, KL[:, 4:])
