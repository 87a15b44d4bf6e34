from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from phdae import (DRIFT, KICK, State, UnsupportedOperation, adjoint, compose, drift, kick,
                   stormer_verlet, symmetrize, symplectic_euler)

from toy_systems import anharmonic, ballistic, falling_particle, stiffened_circle, on_circle

HANG = State([0.0, -0.6, 0.0, -0.9], [0.3, -0.2, 0.1, 0.4])
ZERO_U = np.zeros(2)


def states(n):
    vec = st.lists(st.floats(-2, 2), min_size=n, max_size=n)
    return st.builds(State, vec, vec)


class TestKick:
    def test_gravity_only_changes_vertical_momentum(self, pend):
        h = 0.013
        x = kick(pend, HANG, ZERO_U, h)
        assert_allclose(x.r, HANG.r, rtol=0, atol=0)
        assert x.p[1] == HANG.p[1] - 0.2 * 9.81 * h
        assert x.p[3] == HANG.p[3] - 0.6 * 9.81 * h
        assert x.p[0] == HANG.p[0] and x.p[2] == HANG.p[2]

    def test_zero_step_is_identity(self, pend):
        x = kick(pend, HANG, np.array([1.0, -2.0]), 0.0)
        assert_allclose(x.as_vector(), HANG.as_vector(), rtol=0, atol=0)

    def test_half_kicks_add_up(self, pend):
        u = np.array([0.7, -0.4])
        twice = kick(pend, kick(pend, HANG, u, 0.05), u, 0.05)
        assert_allclose(twice.as_vector(), kick(pend, HANG, u, 0.1).as_vector(), atol=1e-15)

    def test_needs_separable_system(self):
        with pytest.raises(UnsupportedOperation):
            kick(stiffened_circle(), on_circle(0.0), np.zeros(1), 0.1)


class TestDrift:
    def test_zero_momentum_is_identity(self, pend):
        x = State(HANG.r, np.zeros(4))
        assert_allclose(drift(pend, x, 0.5).r, x.r, rtol=0, atol=0)

    def test_position_update(self, pend):
        h = 0.02
        x = drift(pend, HANG, h)
        assert x.r[0] == pytest.approx(HANG.r[0] + h / 0.2 * HANG.p[0], abs=1e-16)
        assert x.r[2] == pytest.approx(HANG.r[2] + h / 0.6 * HANG.p[2], abs=1e-16)
        assert_allclose(x.p, HANG.p, rtol=0, atol=0)

    def test_backwards_drift_undoes_forward(self, pend):
        back = drift(pend, drift(pend, HANG, 0.3), -0.3)
        assert_allclose(back.as_vector(), HANG.as_vector(), atol=1e-15)


class TestStormerVerlet:
    def test_exact_for_constant_gravity(self):
        sys = falling_particle()
        sv = stormer_verlet(sys)
        x = State([0.1, 2.0], [0.4, 1.5])
        for h in (0.01, 0.3, 1.0):
            assert_allclose(sv(sys, x, np.zeros(0), h).as_vector(), ballistic(x, h).as_vector(),
                            rtol=1e-15, atol=1e-14)

    def test_errors_at_rounding_level_over_many_steps(self):
        sys = falling_particle()
        sv = stormer_verlet(sys)
        x = y = State([0.0, 0.0], [1.0, 3.0])
        for _ in range(100):
            x = sv(sys, x, np.zeros(0), 0.01)
        y = ballistic(y, 1.0)
        assert np.max(np.abs(x.as_vector() - y.as_vector())) < 1e-12

    @given(states(4), st.floats(0.001, 0.1))
    @settings(max_examples=50, deadline=None)
    def test_roundtrip(self, x, h):
        from phdae.pendulum import build_implicit
        pend = build_implicit()
        sv = stormer_verlet(pend)
        u = np.array([0.3, -0.2])
        back = sv(pend, sv(pend, x, u, h), u, -h)
        assert_allclose(back.as_vector(), x.as_vector(), atol=1e-13)

    def test_declared_orders(self):
        # errors against a fine-step reference on a nonlinear potential
        sys = anharmonic()
        x0 = State([1.0], [0.0])
        T = 1.0

        def run(method, h):
            x = x0
            for _ in range(int(round(T / h))):
                x = method(sys, x, np.zeros(0), h)
            return x.as_vector()

        sv = stormer_verlet(sys)
        ref = run(sv, 1e-4)
        for method, order in ((sv, 2), (symplectic_euler(sys), 1)):
            e1 = np.max(np.abs(run(method, 0.02) - ref))
            e2 = np.max(np.abs(run(method, 0.01) - ref))
            assert np.log2(e1 / e2) == pytest.approx(order, abs=0.15)
            assert method.declared_order == order


class TestAdjoint:
    def test_symmetric_method_is_its_own_adjoint(self, pend, rng):
        sv = stormer_verlet(pend)
        sv_star = adjoint(sv)
        for _ in range(10):
            x = State(rng.standard_normal(4), rng.standard_normal(4))
            u = rng.standard_normal(2)
            assert_allclose(sv_star(pend, x, u, 0.05).as_vector(), sv(pend, x, u, 0.05).as_vector(),
                            atol=1e-12)

    def test_involution(self, pend):
        se = symplectic_euler(pend)
        twice = adjoint(adjoint(se))
        assert_allclose(twice(pend, HANG, ZERO_U, 0.1).as_vector(),
                        se(pend, HANG, ZERO_U, 0.1).as_vector(), atol=1e-15)

    def test_adjoint_reverses_composition(self, pend):
        se_star = adjoint(symplectic_euler(pend))
        drift_o_kick = compose(DRIFT, KICK)
        u = np.array([0.5, 0.2])
        assert_allclose(se_star(pend, HANG, u, 0.1).as_vector(),
                        drift_o_kick(pend, HANG, u, 0.1).as_vector(), atol=1e-15)

    def test_adjoint_of_kick_first_is_drift_first(self, pend):
        u = np.array([0.5, 0.2])
        kick_first = adjoint(compose(DRIFT, KICK))
        expected = compose(KICK, DRIFT)(pend, HANG, u, 0.1)
        assert_allclose(kick_first(pend, HANG, u, 0.1).as_vector(), expected.as_vector(), atol=1e-15)

    def test_iterative_adjoint_matches_closed_form(self, pend):
        se = symplectic_euler(pend)
        opaque = replace(se, adjoint_step=None)
        u = np.array([0.5, 0.2])
        assert_allclose(adjoint(opaque)(pend, HANG, u, 0.05).as_vector(),
                        adjoint(se)(pend, HANG, u, 0.05).as_vector(), atol=1e-12)

    def test_iterative_adjoint_inverts_backward_step(self, pend):
        se = replace(symplectic_euler(pend), adjoint_step=None)
        y = adjoint(se)(pend, HANG, ZERO_U, 0.05)
        assert_allclose(se(pend, y, ZERO_U, -0.05).as_vector(), HANG.as_vector(), atol=1e-12)


class TestSymmetrize:
    def test_symplectic_euler_becomes_verlet(self, pend, rng):
        sym = symmetrize(symplectic_euler(pend))
        sv = stormer_verlet(pend)
        for _ in range(10):
            x = State(rng.standard_normal(4), rng.standard_normal(4))
            u = rng.standard_normal(2)
            assert_allclose(sym(pend, x, u, 0.04).as_vector(), sv(pend, x, u, 0.04).as_vector(),
                            atol=1e-12)
        assert sym.is_symmetric and sym.declared_order == 2

    def test_drift_kick_drift(self, pend, rng):
        sym = symmetrize(compose(DRIFT, KICK))
        dkd = compose((DRIFT, 0.5), KICK, (DRIFT, 0.5))
        for _ in range(5):
            x = State(rng.standard_normal(4), rng.standard_normal(4))
            u = rng.standard_normal(2)
            assert_allclose(sym(pend, x, u, 0.04).as_vector(), dkd(pend, x, u, 0.04).as_vector(),
                            atol=1e-14)

    def test_symmetric_method_unchanged(self, pend):
        sv = stormer_verlet(pend)
        assert symmetrize(sv) is sv

    def test_result_passes_roundtrip(self, pend):
        sym = symmetrize(replace(symplectic_euler(pend), adjoint_step=None))
        u = np.array([0.1, -0.3])
        back = sym(pend, sym(pend, HANG, u, 0.02), u, -0.02)
        assert_allclose(back.as_vector(), HANG.as_vector(), atol=1e-11)


class TestCompose:
    def test_fractions(self, pend):
        half_twice = compose((DRIFT, 0.5), (DRIFT, 0.5))
        assert_allclose(half_twice(pend, HANG, ZERO_U, 0.2).as_vector(),
                        drift(pend, HANG, 0.2).as_vector(), atol=1e-15)

    def test_right_stage_acts_first(self, pend):
        u = np.array([1.0, 0.0])
        kd = compose(KICK, DRIFT)
        expected = kick(pend, drift(pend, HANG, 0.1), u, 0.1)
        assert_allclose(kd(pend, HANG, u, 0.1).as_vector(), expected.as_vector(), atol=0)

    def test_needs_a_stage(self):
        with pytest.raises(ValueError):
            compose()
