"""Measurements of order, symmetry, symplecticity, energy drift and dissipation."""

from dataclasses import dataclass

import numpy as np

from .control import SequenceSource, ZeroSource
from .stepper import IntegratorConfig, constrained_step, simulate
from .system import State

FD_STEP = 1e-6


@dataclass(frozen=True)
class OrderStudyReport:
    h: np.ndarray
    errors: np.ndarray
    steps: np.ndarray
    observed_order: np.ndarray

    def rows(self):
        """``(h, steps, error, order)`` per step size; the first order entry is NaN."""
        orders = np.concatenate([[np.nan], self.observed_order])
        return list(zip(self.h, self.steps, self.errors, orders))


def _observed_orders(errors, floor=1e-13):
    orders = []
    for coarse, fine in zip(errors[:-1], errors[1:]):
        if coarse <= floor or fine <= floor:
            orders.append(np.nan)
        else:
            orders.append(np.log2(coarse / fine))
    return np.array(orders)


def order_study(sys, method, x0, source, T, h_list, reference, newton=None, use_kernel=True):
    """Global error at time ``T`` for each step size and the observed order between pairs.

    ``reference`` is the reference state at ``T`` or a callable returning it.
    Step sizes must halve successively and divide ``T``. Errors are the
    infinity norm over ``(r, p)`` in ambient coordinates; the order is
    reported as NaN where errors sit at rounding level.
    """
    h_list = np.asarray(h_list, dtype=float)
    if np.any(h_list <= 0):
        raise ValueError("step sizes must be positive")
    if h_list.size > 1 and not np.allclose(h_list[:-1] / h_list[1:], 2.0, rtol=1e-9):
        raise ValueError("step sizes must decrease by a factor of 2")
    ref = reference() if callable(reference) else reference
    ref_vec = ref.as_vector()
    errors, steps = [], []
    for h in h_list:
        n = int(round(T / h))
        if abs(n * h - T) > 1e-9 * T:
            raise ValueError(f"h={h} does not divide T={T}")
        cfg = IntegratorConfig(h=h) if newton is None else IntegratorConfig(h=h, newton=newton)
        traj = simulate(sys, method, x0, source, cfg, n, use_kernel=use_kernel)
        errors.append(float(np.max(np.abs(traj.final_state.as_vector() - ref_vec))))
        steps.append(n)
    errors = np.array(errors)
    return OrderStudyReport(h_list, errors, np.array(steps), _observed_orders(errors))


def self_reference(sys, method, x0, source, T, h, refine=8, use_kernel=True):
    """Final state of the method itself at step ``h / refine``, for Richardson-style studies."""
    hr = h / refine
    n = int(round(T / hr))
    return simulate(sys, method, x0, source, IntegratorConfig(h=hr), n,
                    use_kernel=use_kernel).final_state


def symmetry_roundtrip(sys, method, x0, u, h, steps, newton=None, use_kernel=True):
    """Run ``steps`` forward with ``h`` then back with ``-h``; return the distance to ``x0``.

    ``u`` is a single command or a sequence of ``steps`` commands; the backward
    pass replays it in reverse.
    """
    if steps == 0:
        return 0.0
    u = np.asarray(u, dtype=float)
    seq = np.tile(u, (steps, 1)) if u.ndim == 1 else u
    fwd = IntegratorConfig(h=h) if newton is None else IntegratorConfig(h=h, newton=newton)
    back = IntegratorConfig(h=-h, newton=fwd.newton)
    x = x0
    for alpha in range(steps):
        x = constrained_step(sys, method, x, seq[alpha], fwd, use_kernel=use_kernel).state
    for alpha in reversed(range(steps)):
        x = constrained_step(sys, method, x, seq[alpha], back, use_kernel=use_kernel).state
    return float(np.max(np.abs(x.as_vector() - x0.as_vector())))


def canonical_form(n):
    """The matrix ``J`` of ``dr ^ dp`` on ``R^{2n}``."""
    eye = np.eye(n)
    zero = np.zeros((n, n))
    return np.block([[zero, eye], [-eye, zero]])


def symplecticity_check(sys, method, x, u, h):
    """Defect ``||M^T J M - J||_inf`` of the central-difference Jacobian of the unconstrained map."""
    z = x.as_vector()
    n = sys.n
    eps = FD_STEP * (1.0 + np.max(np.abs(z)))
    M = np.empty((2 * n, 2 * n))
    for j in range(2 * n):
        dz = np.zeros(2 * n)
        dz[j] = eps
        zp, zm = z + dz, z - dz
        plus = method.step(sys, State.from_vector(zp), u, h).as_vector()
        minus = method.step(sys, State.from_vector(zm), u, h).as_vector()
        # divide by the step actually represented
        M[:, j] = (plus - minus) / (zp[j] - zm[j])
    J = canonical_form(n)
    return float(np.max(np.abs(M.T @ J @ M - J)))


def energy_drift_study(sys, method, x0, h, steps, use_kernel=True):
    """Zero-input run; returns ``(max |H - H0|, least-squares slope of H against t)``."""
    traj = simulate(sys, method, x0, ZeroSource(sys.m), IntegratorConfig(h=h), steps,
                    use_kernel=use_kernel)
    return energy_drift(traj)


def energy_drift(traj):
    """``(max |H - H0|, least-squares slope of H against t)`` of a logged run."""
    dev = traj.H - traj.H[0]
    if len(traj) < 2:
        return float(np.max(np.abs(dev))), 0.0
    slope = np.polyfit(traj.t, dev, 1)[0]
    return float(np.max(np.abs(dev))), float(slope)


def dissipation_check(traj, slack=1e-12):
    """``(True, None)`` if ``H`` never rises by more than ``slack``, else ``(False, first index)``.

    The index is that of the step ``a`` with ``H[a+1] - H[a] > slack``.
    """
    if len(traj) < 2:
        return True, None
    bad = np.flatnonzero(np.diff(traj.H) > slack)
    if bad.size:
        return False, int(bad[0])
    return True, None


def replay_source(traj):
    """Open-loop source replaying the commands logged in ``traj``."""
    return SequenceSource(traj.u)
