"""Momentum projection and the multiplier solves that close the constrained step.

The constrained step is ``Phi_{mu,h/2} o psi_h o Phi_{nu,h/2}`` where
``Phi_{lam,h}(r, p) = (r, p - h G(r)^T lam)``. Because the projections leave
``r`` alone, the position multiplier ``nu`` is found first from
``g(r_next) = 0`` and the momentum multiplier ``mu`` afterwards from
``f(r_next, p_next) = 0``, as in SHAKE/RATTLE.
"""

from dataclasses import dataclass

import numpy as np

from .errors import AssumptionViolation, SolverError
from .system import COND_MAX, State, continuous_multipliers, hidden_constraint, momentum_hessian


@dataclass(frozen=True)
class NewtonConfig:
    tol: float = 1e-12
    max_iter: int = 50
    fd_step: float = 1e-7

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("NewtonConfig.tol must be positive")
        if self.max_iter < 1:
            raise ValueError("NewtonConfig.max_iter must be at least 1")


@dataclass(frozen=True)
class MultiplierSolution:
    nu: np.ndarray
    mu: np.ndarray
    newton_iters: int
    g_residual: float
    f_residual: float


def _jacobian(sys, r):
    return np.asarray(sys.constraint_jacobian(r), dtype=float).reshape(sys.k, sys.n)


def projection_map(sys, x, lam, h):
    """``(r, p) -> (r, p - h G(r)^T lam)``."""
    lam = np.asarray(lam, dtype=float)
    if h == 0 or not lam.size:
        return x
    return State(x.r, x.p - h * (_jacobian(sys, x.r).T @ lam))


def _newton(residual, z0, cfg, what):
    """Newton iteration with a forward-difference Jacobian. Returns ``(z, F(z), iters)``."""
    z = np.array(z0, dtype=float)
    F = residual(z)
    err = float(np.max(np.abs(F), initial=0.0))
    iters = 0
    while err > cfg.tol:
        if iters >= cfg.max_iter:
            raise SolverError(
                f"{what} solve did not converge in {cfg.max_iter} iterations "
                f"(residual {err:.3e}); try a smaller step size", err, iters)
        delta = cfg.fd_step * (1.0 + np.max(np.abs(z), initial=0.0))
        J = np.empty((F.size, z.size))
        for j in range(z.size):
            zj = z.copy()
            zj[j] += delta
            J[:, j] = (residual(zj) - F) / delta
        z = z + np.linalg.solve(J, -F)
        F = residual(z)
        err = float(np.max(np.abs(F), initial=0.0))
        iters += 1
        if not np.isfinite(err):
            raise SolverError(f"{what} solve diverged; try a smaller step size", err, iters)
    return z, F, iters


def solve_position_multiplier(sys, method, x, u, h, cfg=NewtonConfig(), guess=None):
    """Find ``nu`` with ``g(r_next) = 0`` where ``r_next`` comes from ``psi_h(Phi_{nu,h/2}(x))``.

    Returns ``(nu, x_mid, iterations)``; ``x_mid`` is the state after the
    unconstrained map and before the final momentum projection. ``guess``
    warm-starts Newton; without one the continuous multipliers are used.
    """
    u = np.zeros(sys.m) if u is None else np.asarray(u, dtype=float)
    if h == 0:
        return np.zeros(sys.k), method.step(sys, x, u, 0.0), 0
    if sys.k == 0:
        return np.zeros(0), method.step(sys, x, u, h), 0
    if guess is None:
        guess = continuous_multipliers(sys, x, u)

    GT = _jacobian(sys, x.r).T
    cache = {}

    def advance(nu):
        key = nu.tobytes()
        if key not in cache:
            cache.clear()
            cache[key] = method.step(sys, State(x.r, x.p - 0.5 * h * (GT @ nu)), u, h)
        return cache[key]

    def residual(nu):
        return np.asarray(sys.constraint(advance(nu).r), dtype=float)

    nu, _, iters = _newton(residual, guess, cfg, "position multiplier")
    return nu, advance(nu), iters


def solve_momentum_multiplier(sys, x_mid, h, cfg=NewtonConfig()):
    """Find ``mu`` with ``f(r, p - (h/2) G(r)^T mu) = 0`` at the post-map position.

    Linear for separable systems and solved directly; Newton otherwise.
    Returns ``(mu, x_next, iterations)``.
    """
    if h == 0 or sys.k == 0:
        return np.zeros(sys.k), x_mid, 0
    r = x_mid.r
    GT = _jacobian(sys, r).T
    if sys.separable:
        MinvGT = np.asarray(sys.mass_inverse) @ GT
        A = GT.T @ MinvGT
        if not np.linalg.cond(A) <= COND_MAX:
            raise AssumptionViolation(f"multiplier matrix is singular at r={r}")
        mu = np.linalg.solve(0.5 * h * A, hidden_constraint(sys, x_mid))
        return mu, State(r, x_mid.p - 0.5 * h * (GT @ mu)), 0

    def residual(mu):
        return hidden_constraint(sys, State(r, x_mid.p - 0.5 * h * (GT @ mu)))

    A = GT.T @ momentum_hessian(sys, r, x_mid.p) @ GT
    if not np.linalg.cond(A) <= COND_MAX:
        raise AssumptionViolation(f"multiplier matrix is singular at r={r}")
    mu, _, iters = _newton(residual, np.linalg.solve(0.5 * h * A, residual(np.zeros(sys.k))),
                           cfg, "momentum multiplier")
    return mu, State(r, x_mid.p - 0.5 * h * (GT @ mu)), iters
