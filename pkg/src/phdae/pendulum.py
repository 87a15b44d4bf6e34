"""The double planar pendulum in Cartesian (implicit) and angle (explicit) form.

Cartesian coordinates ``r = (a_x, a_y, b_x, b_y)`` hold the two point masses;
the bars give ``g = (|a|^2 - l_a^2, |b - a|^2 - l_b^2)``. Gravity points in
``-y`` so the hanging rest state is ``q = (-pi/2, 0)``. The explicit model
uses the absolute angle ``q1`` of the first bar and the relative angle ``q2``
of the second, with joint torques ``u`` as inputs.
"""

from dataclasses import dataclass
from math import atan2, pi

import numpy as np

from . import _backend
from .errors import InputError, StepFailure
from .flows import UnconstrainedMethod
from .projection import MultiplierSolution
from .system import ImplicitPHSystem, State


@dataclass(frozen=True)
class PendulumParams:
    """Link lengths [m], masses [kg] and gravity [m/s^2]; defaults are the reference values."""

    l_a: float = 0.6
    l_b: float = 0.3
    m_a: float = 0.2
    m_b: float = 0.6
    g_bar: float = 9.81

    def __post_init__(self):
        for name in ("l_a", "l_b", "m_a", "m_b", "g_bar"):
            value = getattr(self, name)
            if not (np.isfinite(value) and value > 0):
                raise ValueError(f"pendulum parameter {name} must be positive, got {value!r}")

    def as_tuple(self):
        return (float(self.l_a), float(self.l_b), float(self.m_a), float(self.m_b),
                float(self.g_bar))

    @property
    def mass_matrix(self):
        return np.diag([self.m_a, self.m_a, self.m_b, self.m_b])


def input_matrix(params, r):
    """Torque-to-force map ``U(r)`` (4 x 2)."""
    ax, ay, bx, by = r
    dx, dy = bx - ax, by - ay
    U1 = np.array([-ay, ax, 0.0, 0.0]) / params.l_a**2
    U2 = np.array([dy, -dx, -dy, dx]) / params.l_b**2 - U1
    return np.column_stack([U1, U2])


def build_implicit(params=PendulumParams()):
    """The Cartesian DAE model as an :class:`ImplicitPHSystem`."""
    la, lb, ma, mb, gb = params.as_tuple()
    Minv = np.diag([1 / ma, 1 / ma, 1 / mb, 1 / mb])
    grad_V = np.array([0.0, gb * ma, 0.0, gb * mb])

    def potential(r):
        return gb * (ma * r[1] + mb * r[3])

    def hamiltonian(r, p):
        p = np.asarray(p)
        return 0.5 * p @ (Minv @ p) + potential(r)

    def constraint(r):
        dx, dy = r[2] - r[0], r[3] - r[1]
        return np.array([r[0] ** 2 + r[1] ** 2 - la**2, dx**2 + dy**2 - lb**2])

    def constraint_jacobian(r):
        dx, dy = r[2] - r[0], r[3] - r[1]
        return 2.0 * np.array([[r[0], r[1], 0.0, 0.0], [-dx, -dy, dx, dy]])

    return ImplicitPHSystem(
        n=4, k=2, m=2,
        hamiltonian=hamiltonian,
        grad_r_H=lambda r, p: grad_V.copy(),
        grad_p_H=lambda r, p: Minv @ np.asarray(p, dtype=float),
        constraint=constraint,
        constraint_jacobian=constraint_jacobian,
        input_map=lambda r: input_matrix(params, r),
        mass_inverse=Minv,
        potential=potential,
        name="double_pendulum",
        meta={"params": params},
    )


def exact_drift(params, x, h):
    """Exact free-fall flow of the unconstrained, unactuated field over time ``h``."""
    la, lb, ma, mb, gb = params.as_tuple()
    fall = 0.5 * gb * h * h
    m = np.array([ma, ma, mb, mb])
    r = x.r + h * x.p / m - np.array([0.0, fall, 0.0, fall])
    p = x.p - np.array([0.0, ma * gb * h, 0.0, mb * gb * h])
    return State(r, p)


def exact_kick(params, x, u, h):
    """Exact flow of the input field ``U(r) u d/dp`` with ``r`` frozen: ``p += h U(r) u``."""
    return State(x.r, x.p + h * (input_matrix(params, x.r) @ np.asarray(u, dtype=float)))


def _pendulum_split(params):
    def step(sys, x, u, h):
        x = exact_drift(params, x, 0.5 * h)
        x = exact_kick(params, x, u, h)
        return exact_drift(params, x, 0.5 * h)
    return step


def _pendulum_kernel(params):
    ptuple = params.as_tuple()

    def kernel(x, u, h, nu_guess, cfg):
        r, p, nu, mu, iters, g_res, f_res, status = _backend.pendulum_step(
            ptuple, x.r, x.p, u, float(h), nu_guess, cfg.tol, cfg.max_iter, cfg.fd_step)
        if status != _backend.STATUS_OK:
            reason = {_backend.STATUS_MAX_ITER: f"no convergence in {cfg.max_iter} iterations",
                      _backend.STATUS_DIVERGED: "Newton iteration diverged",
                      _backend.STATUS_SINGULAR: "singular Newton or multiplier matrix"}[status]
            raise StepFailure(f"constrained step failed: {reason} (g residual {g_res:.3e}); "
                              "try a smaller step size", g_res, iters)
        sol = MultiplierSolution(np.array(nu), np.array(mu), iters, g_res, f_res)
        return State(r, p), sol

    return kernel


def pendulum_method(params=PendulumParams()):
    """Free fall for h/2, input kick for h, free fall for h/2.

    Symmetric and second order; at zero input it is the exact free-fall flow
    over ``h`` and therefore symplectic.
    """
    step = _pendulum_split(params)
    return UnconstrainedMethod(
        step=step,
        declared_order=2,
        is_symmetric=True,
        symplectic_at_zero_input=True,
        name="pendulum_drift_kick_drift",
        adjoint_step=step,
        constrained_kernel=_pendulum_kernel(params),
    )


def embedding(params, q):
    """Angles ``q = (q1, q2)`` to Cartesian positions ``r``."""
    q1, q2 = q
    qt = q1 + q2
    ax, ay = params.l_a * np.cos(q1), params.l_a * np.sin(q1)
    return np.array([ax, ay, ax + params.l_b * np.cos(qt), ay + params.l_b * np.sin(qt)])


def embedding_jacobian(params, q):
    """``d r / d q`` (4 x 2)."""
    q1, q2 = q
    qt = q1 + q2
    la, lb = params.l_a, params.l_b
    s1, c1, st, ct = np.sin(q1), np.cos(q1), np.sin(qt), np.cos(qt)
    return np.array([
        [-la * s1, 0.0],
        [la * c1, 0.0],
        [-la * s1 - lb * st, -lb * st],
        [la * c1 + lb * ct, lb * ct],
    ])


def chart(params, r, tol=1e-8):
    """Inverse of :func:`embedding` on the constraint manifold, angles in ``(-pi, pi]``."""
    r = np.asarray(r, dtype=float)
    dx, dy = r[2] - r[0], r[3] - r[1]
    g = (abs(r[0] ** 2 + r[1] ** 2 - params.l_a**2), abs(dx**2 + dy**2 - params.l_b**2))
    if max(g) > tol:
        raise InputError(f"r={r} is off the constraint manifold (|g| = {max(g):.3e})")
    q1 = atan2(r[1], r[0])
    q2 = atan2(dy, dx) - q1
    if q2 <= -pi:
        q2 += 2 * pi
    elif q2 > pi:
        q2 -= 2 * pi
    return np.array([q1, q2])


def explicit_mass_matrix(params, q):
    """Configuration-dependent inertia of the angle model."""
    la, lb, ma, mb, _ = params.as_tuple()
    c2 = np.cos(q[1])
    m11 = (ma + mb) * la**2 + mb * lb**2 + 2 * mb * la * lb * c2
    m12 = mb * lb**2 + mb * la * lb * c2
    return np.array([[m11, m12], [m12, mb * lb**2]])


def explicit_hamiltonian(params, q, p_hat):
    la, lb, ma, mb, gb = params.as_tuple()
    p_hat = np.asarray(p_hat, dtype=float)
    kinetic = 0.5 * p_hat @ np.linalg.solve(explicit_mass_matrix(params, q), p_hat)
    return kinetic + gb * ((ma + mb) * la * np.sin(q[0]) + mb * lb * np.sin(q[0] + q[1]))


@dataclass(frozen=True)
class ExplicitState:
    q: np.ndarray
    p_hat: np.ndarray


@dataclass(frozen=True)
class ExplicitPendulum:
    """The angle-coordinate ODE ``q' = M(q)^{-1} p_hat``, ``p_hat' = -dH/dq + u``."""

    params: PendulumParams

    def hamiltonian(self, q, p_hat):
        return explicit_hamiltonian(self.params, q, p_hat)

    def rhs(self, q, p_hat, u=(0.0, 0.0)):
        """Time derivatives ``(q', p_hat')``."""
        la, lb, ma, mb, gb = self.params.as_tuple()
        qdot = self.velocity(q, p_hat)
        s2 = np.sin(q[1])
        dM = np.array([[-2 * mb * la * lb * s2, -mb * la * lb * s2],
                       [-mb * la * lb * s2, 0.0]])
        ct = np.cos(q[0] + q[1])
        grad_V = gb * np.array([(ma + mb) * la * np.cos(q[0]) + mb * lb * ct, mb * lb * ct])
        p_dot = -grad_V + np.array([0.0, 0.5 * qdot @ dM @ qdot]) + np.asarray(u, dtype=float)
        return qdot, p_dot

    def velocity(self, q, p_hat):
        return np.linalg.solve(explicit_mass_matrix(self.params, q), np.asarray(p_hat, dtype=float))


def build_explicit(params=PendulumParams()):
    return ExplicitPendulum(params)


def lift_momentum(params, q, p_hat):
    """Cartesian momentum ``p = M D(q) Mhat(q)^{-1} p_hat`` of the angle-space state."""
    qdot = np.linalg.solve(explicit_mass_matrix(params, q), np.asarray(p_hat, dtype=float))
    return params.mass_matrix @ (embedding_jacobian(params, q) @ qdot)


def pullback_momentum(params, q, p):
    """Generalized momentum ``p_hat = D(q)^T p``."""
    return embedding_jacobian(params, q).T @ np.asarray(p, dtype=float)


def to_implicit(params, q, p_hat):
    return State(embedding(params, q), lift_momentum(params, q, p_hat))


def to_explicit(params, x):
    q = chart(params, x.r)
    return q, pullback_momentum(params, q, x.p)


def hanging_state(params=PendulumParams()):
    return to_implicit(params, (-pi / 2, 0.0), (0.0, 0.0))


SWINGING_Q = (-pi / 2 + 0.5, 0.3)


def swinging_state(params=PendulumParams(), q=SWINGING_Q):
    """Released from rest at ``q`` (default: 0.5 rad off vertical, 0.3 rad elbow bend)."""
    return to_implicit(params, q, (0.0, 0.0))


@dataclass(frozen=True)
class ExplicitTrajectory:
    t: np.ndarray
    q: np.ndarray
    p_hat: np.ndarray

    def __len__(self):
        return self.t.size

    def state(self, i):
        return ExplicitState(self.q[i], self.p_hat[i])


def rk4_reference(params, q0, p_hat0, h_ref, steps, source=None, zoh_period=None):
    """Fixed-step RK4 on the explicit model.

    With a control ``source`` the input is sampled every ``zoh_period``
    seconds (which must be a whole multiple of ``h_ref``) from the output
    ``y = q'`` and held in between.
    """
    if not h_ref > 0:
        raise ValueError("h_ref must be positive")
    out = np.empty((steps + 1, 4))
    x0 = (float(q0[0]), float(q0[1]), float(p_hat0[0]), float(p_hat0[1]))
    ptuple = params.as_tuple()
    if source is None:
        _backend.rk4_run(ptuple, x0, (0.0, 0.0), float(h_ref), steps, out)
    else:
        if zoh_period is None:
            raise ValueError("zoh_period is required with a control source")
        per = int(round(zoh_period / h_ref))
        if per < 1 or abs(per * h_ref - zoh_period) > 1e-9 * zoh_period:
            raise ValueError("zoh_period must be a whole multiple of h_ref")
        out[0] = x0
        i, alpha = 0, 0
        while i < steps:
            n = min(per, steps - i)
            q, p_hat = out[i, :2], out[i, 2:]
            y = np.linalg.solve(explicit_mass_matrix(params, q), p_hat)
            u = np.asarray(source(alpha, y), dtype=float)
            chunk = np.empty((n + 1, 4))
            _backend.rk4_run(ptuple, tuple(out[i]), (float(u[0]), float(u[1])), float(h_ref), n, chunk)
            out[i + 1:i + n + 1] = chunk[1:]
            i += n
            alpha += 1
    t = h_ref * np.arange(steps + 1)
    return ExplicitTrajectory(t, out[:, :2].copy(), out[:, 2:].copy())


def reference_state(params, q0, p_hat0, T, h_ref=1e-5, source=None, zoh_period=None):
    """Lifted Cartesian state of the RK4 reference at time ``T``."""
    steps = int(round(T / h_ref))
    if abs(steps * h_ref - T) > 1e-9 * max(T, 1.0):
        raise ValueError("T must be a whole multiple of h_ref")
    traj = rk4_reference(params, q0, p_hat0, h_ref, steps, source, zoh_period)
    return to_implicit(params, traj.q[-1], traj.p_hat[-1])
