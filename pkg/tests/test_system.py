from math import pi

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from phdae import (AssumptionViolation, EvaluationError, ImplicitPHSystem, State, check_assumptions,
                   check_callbacks, continuous_multipliers, energy, hidden_constraint,
                   multiplier_matrix, output)
from phdae.system import residuals, vector_field
from phdae.pendulum import embedding, embedding_jacobian, to_implicit

from toy_systems import circle_particle, falling_particle, on_circle, stiffened_circle

HANG_R = np.array([0.0, -0.6, 0.0, -0.9])


def hang(p=(0.0, 0.0, 0.0, 0.0)):
    return State(HANG_R, np.array(p, dtype=float))


class TestState:
    def test_roundtrip_through_vector(self):
        x = State([1.0, 2.0], [3.0, 4.0])
        y = State.from_vector(x.as_vector())
        assert_allclose(y.r, x.r)
        assert_allclose(y.p, x.p)

    def test_rejects_non_finite(self):
        with pytest.raises(EvaluationError):
            State([np.nan, 0.0], [0.0, 0.0])

    def test_rejects_length_mismatch(self):
        with pytest.raises(ValueError):
            State([0.0, 0.0], [0.0])


class TestEnergy:
    def test_hanging_rest(self, pend):
        assert energy(pend, hang()) == pytest.approx(9.81 * (0.2 * -0.6 + 0.6 * -0.9), abs=1e-12)
        assert energy(pend, hang()) == pytest.approx(-6.4746, abs=1e-12)

    def test_zero_momentum_zero_height(self, pend):
        assert energy(pend, State([0.6, 0.0, 0.9, 0.0], np.zeros(4))) == 0.0

    @given(st.lists(st.floats(-5, 5), min_size=4, max_size=4))
    def test_kinetic_part_is_quadratic(self, p):
        from phdae.pendulum import build_implicit
        pend = build_implicit()
        p = np.array(p)
        V = energy(pend, hang())
        assert energy(pend, hang(2 * p)) - V == pytest.approx(4 * (energy(pend, hang(p)) - V),
                                                             rel=1e-12, abs=1e-12)

    def test_non_finite_energy_raises(self):
        sys = circle_particle()
        bad = ImplicitPHSystem(**{**sys.__dict__, "hamiltonian": lambda r, p: np.inf})
        with pytest.raises(EvaluationError):
            energy(bad, on_circle(0.0))


class TestHiddenConstraint:
    def test_zero_momentum(self, pend):
        assert_allclose(hidden_constraint(pend, hang()), 0.0)

    def test_horizontal_push_is_tangential(self, pend):
        assert_allclose(hidden_constraint(pend, hang([1, 0, 0, 0])), [0.0, 0.0], atol=1e-15)

    def test_vertical_push(self, pend):
        assert_allclose(hidden_constraint(pend, hang([0, 1, 0, 0])), [-6.0, 3.0], rtol=1e-14)


class TestOutput:
    def test_zero_momentum(self, pend):
        assert_allclose(output(pend, hang()), 0.0)

    def test_output_is_joint_rate(self, params, pend):
        # y must equal dq/dt when p = M r' with r' = D iota(q) q'
        q = np.array([-pi / 2, 0.0])
        qdot = np.array([1.0, 0.0])
        rdot = embedding_jacobian(params, q) @ qdot
        x = State(embedding(params, q), params.mass_matrix @ rdot)
        assert_allclose(output(pend, x), qdot, atol=1e-14)

    def test_output_equals_joint_rates_on_random_states(self, params, pend, rng):
        for _ in range(20):
            q = rng.uniform(-pi, pi, 2)
            qdot = rng.standard_normal(2)
            rdot = embedding_jacobian(params, q) @ qdot
            x = State(embedding(params, q), params.mass_matrix @ rdot)
            assert_allclose(output(pend, x), qdot, atol=1e-12)

    @given(st.floats(-10, 10))
    @settings(max_examples=30)
    def test_linear_in_momentum(self, c):
        from phdae.pendulum import build_implicit
        pend = build_implicit()
        x = hang([0.3, -0.1, 0.2, 0.5])
        assert_allclose(output(pend, hang(c * x.p)), c * output(pend, x), atol=1e-12)


class TestMultiplierMatrix:
    def test_hanging(self, pend):
        assert_allclose(multiplier_matrix(pend, hang()), [[7.2, -3.6], [-3.6, 2.4]], rtol=1e-14)

    def test_single_coordinate_constraint(self):
        sys = ImplicitPHSystem(
            n=2, k=1, m=0,
            hamiltonian=lambda r, p: 0.5 * p @ p,
            grad_r_H=lambda r, p: np.zeros(2), grad_p_H=lambda r, p: np.asarray(p),
            constraint=lambda r: np.array([r[0]]),
            constraint_jacobian=lambda r: np.array([[1.0, 0.0]]),
            input_map=lambda r: np.zeros((2, 0)),
            mass_inverse=np.eye(2), potential=lambda r: 0.0,
        )
        assert_allclose(multiplier_matrix(sys, State([0.0, 1.0], [0.0, 0.0])), [[1.0]])

    def test_symmetric(self, params, pend, rng):
        for _ in range(20):
            A = multiplier_matrix(pend, to_implicit(params, rng.uniform(-pi, pi, 2),
                                                    rng.standard_normal(2)))
            assert_allclose(A, A.T, atol=1e-13)

    def test_singular_configuration(self, pend):
        with pytest.raises(AssumptionViolation):
            multiplier_matrix(pend, State([0.0, -0.6, 0.0, -0.6], np.zeros(4)))


class TestContinuousMultipliers:
    def test_hanging_equilibrium(self, pend):
        # static force balance: the lower bar carries m_b g, the upper bar (m_a + m_b) g
        lam = continuous_multipliers(pend, hang())
        assert_allclose(lam, [6.54, 9.81], atol=1e-9)

    def test_unconstrained_gives_empty(self):
        sys = falling_particle()
        assert continuous_multipliers(sys, State([0.0, 0.0], [1.0, 0.0])).shape == (0,)

    def test_keeps_hidden_constraint_stationary(self, params, pend, rng):
        # d/dt f along the constrained field must vanish
        for _ in range(10):
            x = to_implicit(params, rng.uniform(-pi, pi, 2), rng.standard_normal(2))
            u = rng.standard_normal(2)
            rdot, pdot = vector_field(pend, x, u)
            eps = 1e-6
            fp = hidden_constraint(pend, State(x.r + eps * rdot, x.p + eps * pdot))
            fm = hidden_constraint(pend, State(x.r - eps * rdot, x.p - eps * pdot))
            assert_allclose((fp - fm) / (2 * eps), 0.0, atol=1e-6)

    def test_residual_contract(self, params, pend, rng):
        for _ in range(10):
            x = to_implicit(params, rng.uniform(-pi, pi, 2), rng.standard_normal(2))
            continuous_multipliers(pend, x, rng.standard_normal(2))

    def test_non_separable_circle(self):
        sys = stiffened_circle(c=0.1)
        x = on_circle(-0.3, omega=0.7)
        rdot, pdot = vector_field(sys, x)
        eps = 1e-6
        fp = hidden_constraint(sys, State(x.r + eps * rdot, x.p + eps * pdot))
        fm = hidden_constraint(sys, State(x.r - eps * rdot, x.p - eps * pdot))
        assert_allclose((fp - fm) / (2 * eps), 0.0, atol=1e-6)


class TestAssumptions:
    def test_hanging_passes(self, pend):
        report = check_assumptions(pend, [hang()])
        assert report.ok
        assert report.ranks == [2]
        assert report.spd == [True]

    def test_coincident_masses_flagged_by_rank(self, pend):
        report = check_assumptions(pend, [State([0.0, -0.6, 0.0, -0.6], np.zeros(4))])
        assert not report.ok
        assert report.ranks == [1]
        assert report.failures[0][1] == "rank"

    def test_singular_mass_flagged(self):
        sys = circle_particle()
        bad = ImplicitPHSystem(**{**sys.__dict__, "mass_inverse": np.diag([1.0, 0.0])})
        report = check_assumptions(bad, [on_circle(0.0)])
        assert report.spd == [False]
        assert any(kind == "spd" for _, kind, _ in report.failures)

    def test_needs_samples(self, pend):
        with pytest.raises(ValueError):
            check_assumptions(pend, [])

    def test_non_separable_hessian(self):
        report = check_assumptions(stiffened_circle(), [on_circle(0.4, 1.0)])
        assert report.ok


class TestCallbacks:
    def test_pendulum_is_consistent(self, pend):
        assert check_callbacks(pend) == []

    def test_toys_are_consistent(self):
        assert check_callbacks(circle_particle()) == []
        assert check_callbacks(stiffened_circle()) == []

    def test_missing_factor_two_detected(self, pend):
        bad = ImplicitPHSystem(**{**pend.__dict__,
                                  "constraint_jacobian": lambda r: 0.5 * pend.constraint_jacobian(r)})
        problems = check_callbacks(bad)
        assert problems and "finite differences" in problems[0]

    def test_wrong_shape_detected(self, pend):
        bad = ImplicitPHSystem(**{**pend.__dict__, "input_map": lambda r: np.zeros((4, 3))})
        assert any("input_map" in msg for msg in check_callbacks(bad))

    def test_inconsistent_mass_detected(self, pend):
        bad = ImplicitPHSystem(**{**pend.__dict__, "grad_p_H": lambda r, p: np.asarray(p)})
        assert any("mass_inverse" in msg for msg in check_callbacks(bad))


def test_residuals_on_manifold(params, pend, rng):
    for _ in range(20):
        g, f = residuals(pend, to_implicit(params, rng.uniform(-pi, pi, 2), rng.standard_normal(2)))
        assert g < 1e-14 and f < 1e-13
