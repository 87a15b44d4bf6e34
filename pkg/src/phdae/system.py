"""Implicit port-Hamiltonian systems in ambient Cartesian coordinates.

A system is given by a Hamiltonian ``H(r, p)`` on ``T*R^n``, holonomic
constraints ``g(r) = 0`` with Jacobian ``G(r)``, and an input map ``U(r)``.
The dynamics are the index-3 DAE

    r' = grad_p H,   p' = -grad_r H - G(r)^T lam + U(r) u,   0 = g(r)

with collocated output ``y = U(r)^T grad_p H``. Differentiating ``g`` along
the flow gives the hidden constraints ``f = G(r) grad_p H = 0``.
"""

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import AssumptionViolation, EvaluationError

RANK_RTOL = 1e-10
COND_MAX = 1e12
HESS_STEP = 1e-5


@dataclass(frozen=True)
class ImplicitPHSystem:
    """Callbacks and dimensions describing an implicit PH system.

    ``constraint_jacobian`` must be the true Jacobian of ``constraint``
    (a quadratic constraint contributes its factor 2). When ``mass_inverse``
    and ``potential`` are both given the system is treated as separable,
    ``H = p^T M^{-1} p / 2 + V(r)``, which enables the split flows and the
    closed-form momentum projection.
    """

    n: int
    k: int
    m: int
    hamiltonian: Callable
    grad_r_H: Callable
    grad_p_H: Callable
    constraint: Callable
    constraint_jacobian: Callable
    input_map: Callable
    mass_inverse: Optional[np.ndarray] = None
    potential: Optional[Callable] = None
    name: str = "system"
    meta: dict = field(default_factory=dict, compare=False)

    @property
    def separable(self):
        return self.mass_inverse is not None and self.potential is not None


@dataclass(frozen=True)
class State:
    """Phase point ``(r, p)`` in the ambient cotangent space."""

    r: np.ndarray
    p: np.ndarray

    def __post_init__(self):
        r = np.array(self.r, dtype=float).reshape(-1)
        p = np.array(self.p, dtype=float).reshape(-1)
        if r.shape != p.shape:
            raise ValueError(f"r and p differ in length: {r.size} != {p.size}")
        if not (np.all(np.isfinite(r)) and np.all(np.isfinite(p))):
            raise EvaluationError(f"non-finite state r={r}, p={p}")
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "p", p)

    def as_vector(self):
        return np.concatenate([self.r, self.p])

    @classmethod
    def from_vector(cls, v):
        v = np.asarray(v, dtype=float)
        n = v.size // 2
        return cls(v[:n], v[n:])


def _finite(value, what, x):
    value = np.asarray(value, dtype=float)
    if not np.all(np.isfinite(value)):
        raise EvaluationError(f"{what} is not finite at r={x.r}, p={x.p}")
    return value


def energy(sys, x):
    """Total energy ``H(r, p)``."""
    value = float(sys.hamiltonian(x.r, x.p))
    if not np.isfinite(value):
        raise EvaluationError(f"energy is not finite at r={x.r}, p={x.p}")
    return value


def hidden_constraint(sys, x):
    """Velocity-level constraint ``f(r, p) = G(r) grad_p H(r, p)``."""
    G = np.asarray(sys.constraint_jacobian(x.r), dtype=float).reshape(sys.k, sys.n)
    return G @ np.asarray(sys.grad_p_H(x.r, x.p), dtype=float)


def output(sys, x):
    """Collocated output ``y = U(r)^T grad_p H(r, p)``."""
    U = np.asarray(sys.input_map(x.r), dtype=float).reshape(sys.n, sys.m)
    return U.T @ np.asarray(sys.grad_p_H(x.r, x.p), dtype=float)


def residuals(sys, x):
    """Return ``(||g(r)||_inf, ||f(r, p)||_inf)``; zero for unconstrained systems."""
    if sys.k == 0:
        return 0.0, 0.0
    g = np.asarray(sys.constraint(x.r), dtype=float)
    f = hidden_constraint(sys, x)
    return float(np.max(np.abs(g))), float(np.max(np.abs(f)))


def momentum_hessian(sys, r, p):
    """Hessian of ``H`` in ``p``: exact ``M^{-1}`` when separable, else central differences."""
    if sys.separable:
        return np.asarray(sys.mass_inverse, dtype=float)
    p = np.asarray(p, dtype=float)
    eps = HESS_STEP * (1.0 + np.max(np.abs(p), initial=0.0))
    hess = np.empty((sys.n, sys.n))
    for j in range(sys.n):
        dp = np.zeros(sys.n)
        dp[j] = eps
        hess[:, j] = (np.asarray(sys.grad_p_H(r, p + dp)) - np.asarray(sys.grad_p_H(r, p - dp))) / (2 * eps)
    return 0.5 * (hess + hess.T)


def multiplier_matrix(sys, x):
    """The ``k x k`` matrix ``G H_pp G^T`` whose invertibility fixes the multipliers.

    Raises
    ------
    AssumptionViolation
        If the matrix is singular to working precision (condition > 1e12).
    """
    G = np.asarray(sys.constraint_jacobian(x.r), dtype=float).reshape(sys.k, sys.n)
    A = G @ momentum_hessian(sys, x.r, x.p) @ G.T
    if sys.k and not np.linalg.cond(A) <= COND_MAX:
        raise AssumptionViolation(
            f"multiplier matrix is singular (cond={np.linalg.cond(A):.3e}) at r={x.r}")
    return A


def continuous_multipliers(sys, x, u=None):
    """Constraint forces of the continuous-time field at ``x`` under input ``u``.

    Solves ``A lam = d/dt f`` where the time derivative is taken along the
    unconstrained field ``(grad_p H, -grad_r H + U u)``; the r-directional
    part of ``f`` is a central finite difference, the p-part is analytic.
    """
    if sys.k == 0:
        return np.zeros(0)
    u = np.zeros(sys.m) if u is None else np.asarray(u, dtype=float)
    r, p = x.r, x.p
    G = np.asarray(sys.constraint_jacobian(r), dtype=float).reshape(sys.k, sys.n)
    hess = momentum_hessian(sys, r, p)
    A = G @ hess @ G.T
    if not np.linalg.cond(A) <= COND_MAX:
        raise AssumptionViolation(f"multiplier matrix is singular at r={r}")

    rdot = _finite(sys.grad_p_H(r, p), "grad_p H", x)
    U = np.asarray(sys.input_map(r), dtype=float).reshape(sys.n, sys.m)
    pdot = -_finite(sys.grad_r_H(r, p), "grad_r H", x) + U @ u
    rhs = G @ hess @ pdot
    speed = np.max(np.abs(rdot), initial=0.0)
    if speed > 0.0:
        eps = 1e-6 * (1.0 + np.max(np.abs(r))) / speed
        f_plus = hidden_constraint(sys, State(r + eps * rdot, p))
        f_minus = hidden_constraint(sys, State(r - eps * rdot, p))
        rhs = rhs + (f_plus - f_minus) / (2 * eps)
    lam = np.linalg.solve(A, rhs)
    if not np.all(np.isfinite(lam)):
        raise EvaluationError(f"multipliers are not finite at r={r}, p={p}")
    scale = np.max(np.abs(rhs), initial=0.0)
    if np.max(np.abs(A @ lam - rhs)) > 1e-10 * max(scale, 1e-300):
        raise AssumptionViolation("multiplier solve residual exceeds 1e-10 relative")
    return lam


def vector_field(sys, x, u=None, lam=None):
    """Right-hand side ``(r', p')`` of the constrained DAE.

    ``lam`` defaults to the continuous multipliers at ``(x, u)``.
    """
    u = np.zeros(sys.m) if u is None else np.asarray(u, dtype=float)
    if lam is None:
        lam = continuous_multipliers(sys, x, u)
    G = np.asarray(sys.constraint_jacobian(x.r), dtype=float).reshape(sys.k, sys.n)
    U = np.asarray(sys.input_map(x.r), dtype=float).reshape(sys.n, sys.m)
    rdot = np.asarray(sys.grad_p_H(x.r, x.p), dtype=float)
    pdot = -np.asarray(sys.grad_r_H(x.r, x.p), dtype=float) - G.T @ lam + U @ u
    return rdot, pdot


@dataclass
class AssumptionReport:
    """Per-sample outcome of :func:`check_assumptions`."""

    ranks: list = field(default_factory=list)
    spd: list = field(default_factory=list)
    failures: list = field(default_factory=list)

    @property
    def ok(self):
        return not self.failures


def check_assumptions(sys, samples):
    """Check the full-rank constraint Jacobian and momentum convexity on ``samples``.

    Failures are collected in the report rather than raised.
    """
    samples = list(samples)
    if not samples:
        raise ValueError("check_assumptions needs at least one sample")
    report = AssumptionReport()
    for i, x in enumerate(samples):
        G = np.asarray(sys.constraint_jacobian(x.r), dtype=float).reshape(sys.k, sys.n)
        if sys.k:
            sv = np.linalg.svd(G, compute_uv=False)
            rank = int(np.sum(sv > RANK_RTOL * sv.max())) if sv.max() > 0 else 0
        else:
            rank = 0
        report.ranks.append(rank)
        if rank != sys.k:
            report.failures.append((i, "rank", f"rank(G) = {rank} < k = {sys.k}"))

        hess = momentum_hessian(sys, x.r, x.p)
        try:
            np.linalg.cholesky(0.5 * (hess + hess.T))
            spd = bool(np.allclose(hess, hess.T, rtol=1e-10, atol=1e-12))
        except np.linalg.LinAlgError:
            spd = False
        report.spd.append(spd)
        if not spd:
            report.failures.append((i, "spd", "momentum Hessian is not positive definite"))
    return report


def check_callbacks(sys, rng=None, count=100, scale=1.0, rtol=1e-6):
    """Validate callback dimensions, the mass matrix and the constraint Jacobian.

    Random points are drawn from ``N(0, scale^2)``. Returns a list of problem
    descriptions, empty when everything is consistent.
    """
    rng = np.random.default_rng(0) if rng is None else rng
    problems = []
    if sys.mass_inverse is not None:
        Minv = np.asarray(sys.mass_inverse, dtype=float)
        if Minv.shape != (sys.n, sys.n):
            problems.append(f"mass_inverse has shape {Minv.shape}")
        elif not np.allclose(Minv, Minv.T):
            problems.append("mass_inverse is not symmetric")
        elif np.min(np.linalg.eigvalsh(Minv)) <= 0:
            problems.append("mass_inverse is not positive definite")

    worst = 0.0
    for _ in range(count):
        r = scale * rng.standard_normal(sys.n)
        p = scale * rng.standard_normal(sys.n)
        shapes = {
            "grad_r_H": (np.shape(sys.grad_r_H(r, p)), (sys.n,)),
            "grad_p_H": (np.shape(sys.grad_p_H(r, p)), (sys.n,)),
            "constraint": (np.shape(sys.constraint(r)), (sys.k,)),
            "constraint_jacobian": (np.shape(sys.constraint_jacobian(r)), (sys.k, sys.n)),
            "input_map": (np.shape(sys.input_map(r)), (sys.n, sys.m)),
        }
        for name, (got, want) in shapes.items():
            if got != want:
                problems.append(f"{name} returned shape {got}, expected {want}")
        if np.ndim(sys.hamiltonian(r, p)) != 0:
            problems.append("hamiltonian is not scalar")
        if problems:
            return problems
        if sys.mass_inverse is not None and not np.allclose(
                sys.grad_p_H(r, p), np.asarray(sys.mass_inverse) @ p, rtol=1e-12, atol=1e-12):
            problems.append("grad_p_H disagrees with mass_inverse @ p")
            return problems

        G = np.asarray(sys.constraint_jacobian(r), dtype=float)
        fd = np.empty_like(G)
        for j in range(sys.n):
            eps = 1e-6 * (1.0 + abs(r[j]))
            dr = np.zeros(sys.n)
            dr[j] = eps
            fd[:, j] = (np.asarray(sys.constraint(r + dr)) - np.asarray(sys.constraint(r - dr))) / (2 * eps)
        denom = max(np.max(np.abs(G), initial=0.0), 1.0)
        worst = max(worst, np.max(np.abs(fd - G), initial=0.0) / denom)
    if worst > rtol:
        problems.append(f"constraint_jacobian differs from finite differences by {worst:.2e}")
    return problems
