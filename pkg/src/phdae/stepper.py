"""The constrained sampled-data step and the zero-order-hold simulation loop."""

from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np

from .errors import InputError, SolverError, StepFailure
from .projection import (MultiplierSolution, NewtonConfig, solve_momentum_multiplier,
                         solve_position_multiplier)
from .system import State, continuous_multipliers, energy, output, residuals


@dataclass(frozen=True)
class IntegratorConfig:
    """Step size (negative runs backwards), Newton settings and logging stride.

    ``tol_g`` and ``tol_f`` decide whether an initial state counts as lying
    on the constraint manifold.
    """

    h: float
    newton: NewtonConfig = field(default_factory=NewtonConfig)
    log_every: int = 1
    tol_g: float = 1e-10
    tol_f: float = 1e-10

    def __post_init__(self):
        if not np.isfinite(self.h) or self.h == 0:
            raise ValueError(f"step size must be finite and non-zero, got {self.h!r}")
        if self.log_every < 1:
            raise ValueError("log_every must be at least 1")


@dataclass(frozen=True)
class StepResult:
    """Outcome of one constrained step.

    ``y`` is the output at the new state, ``u`` the input held during the step
    and ``H`` the energy of the new state.
    """

    state: State
    multipliers: MultiplierSolution
    y: np.ndarray
    u: np.ndarray
    H: float


def constrained_step(sys, method, x, u, cfg, nu_guess=None, use_kernel=True):
    """Advance ``x`` by ``Phi_{mu,h/2} o psi_h o Phi_{nu,h/2}`` with the input held at ``u``.

    ``nu_guess`` warm-starts the position-multiplier Newton solve; by default
    the continuous multipliers at ``x`` are used. A compiled kernel carried by
    ``method`` is used when ``use_kernel`` is true.

    Raises
    ------
    StepFailure
        If a multiplier solve fails or the new state misses the tolerance.
    """
    u = np.zeros(sys.m) if u is None else np.asarray(u, dtype=float)
    h = cfg.h
    tol = cfg.newton.tol
    try:
        if nu_guess is None:
            nu_guess = continuous_multipliers(sys, x, u)
        if use_kernel and method.constrained_kernel is not None:
            x_next, sol = method.constrained_kernel(x, u, h, nu_guess, cfg.newton)
        else:
            nu, x_mid, it_nu = solve_position_multiplier(sys, method, x, u, h, cfg.newton,
                                                         guess=nu_guess)
            mu, x_next, it_mu = solve_momentum_multiplier(sys, x_mid, h, cfg.newton)
            g_res, f_res = residuals(sys, x_next)
            sol = MultiplierSolution(nu, mu, it_nu + it_mu, g_res, f_res)
    except StepFailure:
        raise
    except SolverError as exc:
        raise StepFailure(str(exc), exc.residual, exc.iterations) from exc
    if sol.g_residual > tol or sol.f_residual > tol:
        raise StepFailure(
            f"constraint residuals g={sol.g_residual:.3e}, f={sol.f_residual:.3e} exceed "
            f"tolerance {tol:.1e}", max(sol.g_residual, sol.f_residual), sol.newton_iters)
    return StepResult(x_next, sol, output(sys, x_next), u, energy(sys, x_next))


class Record(NamedTuple):
    t: float
    state: State
    nu: np.ndarray
    mu: np.ndarray
    newton_iters: int
    H: float
    g_res: float
    f_res: float
    y: np.ndarray
    u: np.ndarray


@dataclass
class Trajectory:
    """Column-wise log of a sampled-data run.

    Row ``i`` holds the state at ``t[i]``, its energy, residuals and output,
    the multipliers of the step that produced it (zero for the initial row)
    and the command ``u`` issued at that sample, held until the next one.
    """

    h: float
    log_every: int
    t: np.ndarray
    r: np.ndarray
    p: np.ndarray
    nu: np.ndarray
    mu: np.ndarray
    newton_iters: np.ndarray
    H: np.ndarray
    g_res: np.ndarray
    f_res: np.ndarray
    y: np.ndarray
    u: np.ndarray
    failure: Optional[str] = None

    def __len__(self):
        return self.t.size

    def __getitem__(self, i):
        return Record(float(self.t[i]), State(self.r[i], self.p[i]), self.nu[i], self.mu[i],
                      int(self.newton_iters[i]), float(self.H[i]), float(self.g_res[i]),
                      float(self.f_res[i]), self.y[i], self.u[i])

    def __iter__(self):
        return (self[i] for i in range(len(self)))

    def state(self, i):
        return State(self.r[i], self.p[i])

    @property
    def final_state(self):
        return self.state(-1)

    @classmethod
    def empty(cls, sys, h, log_every, rows):
        return cls(
            h=h, log_every=log_every,
            t=np.zeros(rows), r=np.zeros((rows, sys.n)), p=np.zeros((rows, sys.n)),
            nu=np.zeros((rows, sys.k)), mu=np.zeros((rows, sys.k)),
            newton_iters=np.zeros(rows, dtype=int), H=np.zeros(rows),
            g_res=np.zeros(rows), f_res=np.zeros(rows),
            y=np.zeros((rows, sys.m)), u=np.zeros((rows, sys.m)),
        )

    def truncated(self, rows):
        cut = {name: getattr(self, name)[:rows] for name in _COLUMNS}
        return Trajectory(self.h, self.log_every, failure=self.failure, **cut)

    def thinned(self, every):
        """Keep every ``every``-th logged row."""
        kept = {name: getattr(self, name)[::every] for name in _COLUMNS}
        return Trajectory(self.h, self.log_every * every, failure=self.failure, **kept)


_COLUMNS = ("t", "r", "p", "nu", "mu", "newton_iters", "H", "g_res", "f_res", "y", "u")


def check_on_manifold(sys, x, cfg):
    g_res, f_res = residuals(sys, x)
    if g_res > cfg.tol_g or f_res > cfg.tol_f:
        raise InputError(f"initial state is off the constraint manifold: |g| = {g_res:.3e} "
                         f"(tol {cfg.tol_g:.1e}), |f| = {f_res:.3e} (tol {cfg.tol_f:.1e})")


def simulate(sys, method, x0, source, cfg, steps, use_kernel=True):
    """Run the sampled-data loop for ``steps`` samples.

    At each sample the output is read, the control source issues the command
    and the constrained step advances the state with that command held.
    Every ``cfg.log_every``-th sample is logged, the initial one included.

    Raises
    ------
    InputError
        If ``x0`` is off the constraint manifold.
    StepFailure
        If a step fails; ``exc.trajectory`` holds the rows logged so far.
    """
    if steps < 0:
        raise ValueError("steps must be non-negative")
    check_on_manifold(sys, x0, cfg)
    every = cfg.log_every
    traj = Trajectory.empty(sys, cfg.h, every, steps // every + 1)

    x = x0
    y = output(sys, x)
    u = np.asarray(source(0, y), dtype=float)
    g_res, f_res = residuals(sys, x)
    traj.r[0], traj.p[0], traj.y[0], traj.u[0] = x.r, x.p, y, u
    traj.H[0], traj.g_res[0], traj.f_res[0] = energy(sys, x), g_res, f_res
    row = 1

    nu_prev = None
    for alpha in range(steps):
        try:
            res = constrained_step(sys, method, x, u, cfg, nu_guess=nu_prev, use_kernel=use_kernel)
        except StepFailure as exc:
            partial = traj.truncated(row)
            partial.failure = f"step {alpha}: {exc}"
            raise StepFailure(partial.failure, exc.residual, exc.iterations, alpha, partial) from exc
        x = res.state
        nu_prev = res.multipliers.nu
        y = res.y
        u = np.asarray(source(alpha + 1, y), dtype=float)
        if (alpha + 1) % every == 0:
            traj.t[row] = (alpha + 1) * cfg.h
            traj.r[row], traj.p[row] = x.r, x.p
            traj.nu[row], traj.mu[row] = res.multipliers.nu, res.multipliers.mu
            traj.newton_iters[row] = res.multipliers.newton_iters
            traj.H[row] = res.H
            traj.g_res[row] = res.multipliers.g_residual
            traj.f_res[row] = res.multipliers.f_residual
            traj.y[row], traj.u[row] = y, u
            row += 1
    return traj


def power_balance_audit(sys, traj):
    """Per-step mismatch ``(H[a+1] - H[a]) - h u[a] . (y[a] + y[a+1]) / 2``.

    The trapezoidal rule stands in for the integral of the supplied power over
    the sampling interval, so a consistent second-order run gives ``O(h^3)``
    per step. Requires a trajectory logged at every step.
    """
    if len(traj) and traj.log_every != 1:
        raise ValueError("power_balance_audit needs log_every == 1")
    if len(traj) < 2:
        return np.zeros(0)
    supplied = traj.h * np.einsum("ij,ij->i", traj.u[:-1], 0.5 * (traj.y[:-1] + traj.y[1:]))
    return np.diff(traj.H) - supplied
