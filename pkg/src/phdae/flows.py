"""Unconstrained one-step maps and the combinators that build them.

Every method here acts on the whole ambient space ``T*R^n`` and ignores the
constraints; :mod:`phdae.projection` pins the result back onto the manifold.
The sampled input ``u`` is held constant over a step and enters only through
kicks.
"""

from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np

from .errors import SolverError, UnsupportedOperation
from .system import State


@dataclass(frozen=True)
class UnconstrainedMethod:
    """A one-step map ``step(sys, x, u, h) -> State`` plus its declared properties.

    ``adjoint_step`` is an optional closed form of the adjoint map; when absent
    :func:`adjoint` falls back to an iterative inverse. ``constrained_kernel``
    lets a model-specific compiled routine stand in for the generic
    projection solve (see :mod:`phdae.pendulum`).
    """

    step: Callable
    declared_order: int
    is_symmetric: bool
    symplectic_at_zero_input: bool
    name: str = "method"
    adjoint_step: Optional[Callable] = None
    constrained_kernel: Optional[Callable] = None

    def __call__(self, sys, x, u, h):
        return self.step(sys, x, u, h)


def _require_separable(sys, what):
    if not sys.separable:
        raise UnsupportedOperation(f"{what} needs a separable system (mass_inverse and potential)")


def kick(sys, x, u, h):
    """Exact flow of the potential-plus-input field with ``r`` frozen."""
    _require_separable(sys, "kick")
    force = -np.asarray(sys.grad_r_H(x.r, x.p), dtype=float)
    if sys.m:
        force = force + np.asarray(sys.input_map(x.r), dtype=float) @ np.asarray(u, dtype=float)
    return State(x.r, x.p + h * force)


def drift(sys, x, h):
    """Exact flow of the kinetic field: ``r <- r + h M^{-1} p``."""
    _require_separable(sys, "drift")
    return State(x.r + h * (np.asarray(sys.mass_inverse) @ x.p), x.p)


def _kick_step(sys, x, u, h):
    return kick(sys, x, u, h)


def _drift_step(sys, x, u, h):
    return drift(sys, x, h)


# Exact flows are self-adjoint.
KICK = UnconstrainedMethod(_kick_step, 1, True, True, "kick", adjoint_step=_kick_step)
DRIFT = UnconstrainedMethod(_drift_step, 1, True, True, "drift", adjoint_step=_drift_step)


def compose(*stages, order=1, symmetric=False, name=None):
    """Compose methods right to left, like ``a o b`` (``b`` acts first).

    Each stage is a method or a ``(method, fraction)`` pair; the stage is
    advanced by ``fraction * h``.
    """
    pairs = [(s, 1.0) if isinstance(s, UnconstrainedMethod) else (s[0], float(s[1]))
             for s in stages]
    if not pairs:
        raise ValueError("compose needs at least one stage")

    def step(sys, x, u, h):
        for method, c in reversed(pairs):
            x = method.step(sys, x, u, c * h)
        return x

    adjoint_step = None
    if all(m.adjoint_step is not None for m, _ in pairs):
        # (a o b)* = b* o a*, fractions unchanged.
        def adjoint_step(sys, x, u, h):
            for method, c in pairs:
                x = method.adjoint_step(sys, x, u, c * h)
            return x

    if name is None:
        name = " o ".join(f"{m.name}({c:g}h)" for m, c in pairs)
    return UnconstrainedMethod(
        step=step,
        declared_order=order,
        is_symmetric=symmetric,
        symplectic_at_zero_input=all(m.symplectic_at_zero_input for m, _ in pairs),
        name=name,
        adjoint_step=adjoint_step,
    )


def stormer_verlet(sys):
    """Kick-drift-kick Stormer-Verlet for a separable system."""
    _require_separable(sys, "stormer_verlet")
    return compose((KICK, 0.5), (DRIFT, 1.0), (KICK, 0.5), order=2, symmetric=True,
                   name="stormer_verlet")


def symplectic_euler(sys):
    """First-order ``kick o drift`` (drift first); its adjoint is ``drift o kick``."""
    _require_separable(sys, "symplectic_euler")
    return compose(KICK, DRIFT, order=1, name="kick o drift")


def _iterative_inverse(method, sys, x, u, h, tol=1e-12, max_iter=100, damping=1.0):
    """Solve ``method.step(y, u, -h) = x`` for ``y`` by damped fixed-point iteration."""
    target = x.as_vector()
    y = method.step(sys, x, u, h).as_vector()
    err = np.inf
    for it in range(1, max_iter + 1):
        back = method.step(sys, State.from_vector(y), u, -h).as_vector()
        delta = target - back
        err = float(np.max(np.abs(delta)))
        y = y + damping * delta
        if err <= tol * (1.0 + np.max(np.abs(target))):
            return State.from_vector(y)
    raise SolverError(f"adjoint inverse did not converge for {method.name}", err, max_iter)


def adjoint(method, tol=1e-12, max_iter=100, damping=1.0):
    """The adjoint method ``psi*_h = (psi_{-h})^{-1}``.

    Uses the closed form when the method carries one, otherwise an iterative
    inverse with the given tolerance and iteration cap.
    """
    if method.adjoint_step is not None:
        return replace(method, step=method.adjoint_step, adjoint_step=method.step,
                       name=f"adjoint({method.name})", constrained_kernel=None)

    def step(sys, x, u, h):
        return _iterative_inverse(method, sys, x, u, h, tol, max_iter, damping)

    return UnconstrainedMethod(
        step=step,
        declared_order=method.declared_order,
        is_symmetric=method.is_symmetric,
        symplectic_at_zero_input=method.symplectic_at_zero_input,
        name=f"adjoint({method.name})",
        adjoint_step=method.step,
    )


def symmetrize(method):
    """Symmetric composition ``psi_{h/2} o psi*_{h/2}``.

    A method already declared symmetric is returned unchanged.
    """
    if method.is_symmetric:
        return method
    order = method.declared_order + (method.declared_order % 2)
    return compose((method, 0.5), (adjoint(method), 0.5), order=max(order, 2),
                   symmetric=True, name=f"symmetrize({method.name})")
