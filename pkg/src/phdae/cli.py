"""Command-line experiment runner.

Usage: ``phdae <command> --config <path> [--out <dir>]``.

Exit status: 0 success, 1 a check did not pass, 2 configuration or input
error, 3 solver failure (a partial ``trajectory.csv`` is still written).
"""

import argparse
import sys as _sys
from pathlib import Path

import numpy as np

from ._backend import BACKEND
from .config import load_config
from .control import DampingSource, SequenceSource, ZeroSource, load_input_csv
from .diagnostics import dissipation_check, energy_drift, order_study, symmetry_roundtrip
from .errors import ConfigError, InputError, StepFailure
from .pendulum import (PendulumParams, build_implicit, pendulum_method, reference_state,
                       to_explicit, to_implicit)
from .projection import NewtonConfig
from .stepper import IntegratorConfig, simulate
from .system import State

EXIT_OK, EXIT_CHECK, EXIT_CONFIG, EXIT_SOLVER = 0, 1, 2, 3

COMMANDS = ("simulate", "order-study", "energy-study", "symmetry-check", "dissipation-check",
            "validate-config")

TRAJECTORY_COLUMNS = (["t"] + [f"r{i}" for i in range(1, 5)] + [f"p{i}" for i in range(1, 5)]
                      + ["nu1", "nu2", "mu1", "mu2", "H", "g_res", "f_res", "y1", "y2", "u1", "u2",
                         "newton_iters"])


def _fmt(value):
    # + 0.0 folds -0 into 0
    return format(float(value) + 0.0, ".17g")


def write_trajectory_csv(traj, path, footer=None):
    """Write a trajectory with 17 significant digits; ``footer`` becomes a ``#`` comment."""
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(TRAJECTORY_COLUMNS) + "\n")
        for i in range(len(traj)):
            values = [traj.t[i], *traj.r[i], *traj.p[i], *traj.nu[i], *traj.mu[i], traj.H[i],
                      traj.g_res[i], traj.f_res[i], *traj.y[i], *traj.u[i]]
            fh.write(",".join(_fmt(v) for v in values) + f",{int(traj.newton_iters[i])}\n")
        if footer:
            fh.write(f"# {footer}\n")


def write_study_csv(report, path):
    with open(path, "w", newline="\n") as fh:
        fh.write("h,steps,global_error,observed_order\n")
        for h, steps, err, order in report.rows():
            fh.write(f"{_fmt(h)},{int(steps)},{_fmt(err)},{_fmt(order)}\n")


def write_report(path, title, items):
    with open(path, "w", newline="\n") as fh:
        fh.write(f"{title}\n")
        for key, value in items:
            if isinstance(value, float):
                value = repr(value + 0.0)
            fh.write(f"{key} = {value}\n")


class Experiment:
    """Objects built from a :class:`RunConfig`."""

    def __init__(self, cfg):
        self.cfg = cfg
        try:
            self.params = PendulumParams(**cfg.params)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        self.sys = build_implicit(self.params)
        self.method = pendulum_method(self.params)
        self.newton = NewtonConfig(tol=cfg.tol, max_iter=cfg.max_iter, fd_step=cfg.fd_step)
        self.input_rows = None
        self.source = self._source()
        if cfg.r0 is not None:
            self.x0 = State(np.array(cfg.r0), np.array(cfg.p0))
        else:
            self.x0 = to_implicit(self.params, cfg.q0, cfg.p_hat0)

    def _source(self):
        cfg = self.cfg
        m = self.sys.m
        if cfg.control == "zero":
            return ZeroSource(m)
        if cfg.control == "damping":
            gain = cfg.gain
            K = gain[0] * np.eye(m) if len(gain) == 1 else np.array(gain).reshape(m, m)
            try:
                return DampingSource(K)
            except ValueError as exc:
                raise ConfigError(str(exc), cfg.lines.get(("control", "gain"))) from None
        rows = load_input_csv(cfg.input_path, m)
        self.input_rows = rows
        return SequenceSource(rows)

    def integrator(self, h=None, log_every=None):
        return IntegratorConfig(h=self.cfg.h if h is None else h, newton=self.newton,
                                log_every=self.cfg.log_every if log_every is None else log_every)


def _run_simulate(exp, out):
    cfg = exp.cfg
    traj = simulate(exp.sys, exp.method, exp.x0, exp.source, exp.integrator(), cfg.steps)
    write_trajectory_csv(traj, out / "trajectory.csv")
    write_report(out / "report.txt", "simulate", [
        ("backend", BACKEND), ("h", cfg.h), ("steps", cfg.steps), ("control", cfg.control),
        ("H_initial", float(traj.H[0])), ("H_final", float(traj.H[-1])),
        ("max_g_res", float(np.max(traj.g_res))), ("max_f_res", float(np.max(traj.f_res))),
        ("max_newton_iters", int(np.max(traj.newton_iters))),
    ])
    return EXIT_OK


def _run_order_study(exp, out):
    cfg = exp.cfg
    if cfg.control == "damping" or (exp.input_rows is not None and len(exp.input_rows) > 1):
        raise ConfigError("order-study needs zero control or a constant open-loop input",
                          cfg.lines.get(("control", "mode")))
    q0, p_hat0 = to_explicit(exp.params, exp.x0)
    if exp.input_rows is None:
        ref = reference_state(exp.params, q0, p_hat0, cfg.T, cfg.h_ref)
    else:
        ref = reference_state(exp.params, q0, p_hat0, cfg.T, cfg.h_ref, source=exp.source,
                              zoh_period=cfg.T)
    try:
        report = order_study(exp.sys, exp.method, exp.x0, exp.source, cfg.T, cfg.h_list, ref,
                             newton=exp.newton)
    except ValueError as exc:
        raise ConfigError(str(exc), cfg.lines.get(("experiment", "h_list"))) from None
    write_study_csv(report, out / "study.csv")
    items = [("backend", BACKEND), ("T", cfg.T), ("h_ref", cfg.h_ref)]
    for h, steps, err, order in report.rows():
        items.append((f"h={float(h)!r}",
                      f"steps={int(steps)} error={float(err)!r} order={float(order)!r}"))
    write_report(out / "report.txt", "order-study", items)
    return EXIT_OK


def _run_energy_study(exp, out):
    cfg = exp.cfg
    zero = ZeroSource(exp.sys.m)
    traj = simulate(exp.sys, exp.method, exp.x0, zero, exp.integrator(), cfg.steps)
    write_trajectory_csv(traj, out / "trajectory.csv")
    max_dev, slope = energy_drift(traj)
    T = cfg.steps * cfg.h
    items = [("backend", BACKEND), ("h", cfg.h), ("steps", cfg.steps), ("input", "zero"),
             ("max_deviation", max_dev), ("slope", slope),
             ("drift_fraction", abs(slope) * T / max_dev if max_dev > 0 else 0.0)]
    if cfg.compare_half:
        half = simulate(exp.sys, exp.method, exp.x0, zero, exp.integrator(h=cfg.h / 2),
                        2 * cfg.steps)
        half_dev, _ = energy_drift(half)
        items += [("max_deviation_half_h", half_dev),
                  ("deviation_ratio", max_dev / half_dev if half_dev > 0 else float("nan"))]
    write_report(out / "report.txt", "energy-study", items)
    return EXIT_OK


def _run_symmetry_check(exp, out):
    cfg = exp.cfg
    traj = simulate(exp.sys, exp.method, exp.x0, exp.source, exp.integrator(log_every=1),
                    cfg.steps)
    write_trajectory_csv(traj.thinned(cfg.log_every), out / "trajectory.csv")
    error = symmetry_roundtrip(exp.sys, exp.method, exp.x0, traj.u[:-1], cfg.h, cfg.steps,
                               newton=exp.newton) if cfg.steps else 0.0
    passed = error <= cfg.threshold
    write_report(out / "report.txt", "symmetry-check", [
        ("backend", BACKEND), ("h", cfg.h), ("steps", cfg.steps),
        ("roundtrip_error", error), ("threshold", cfg.threshold),
        ("result", "pass" if passed else "fail"),
    ])
    return EXIT_OK if passed else EXIT_CHECK


def _run_dissipation_check(exp, out):
    cfg = exp.cfg
    traj = simulate(exp.sys, exp.method, exp.x0, exp.source, exp.integrator(log_every=1),
                    cfg.steps)
    write_trajectory_csv(traj.thinned(cfg.log_every), out / "trajectory.csv")
    ok, first = dissipation_check(traj)
    dH = np.diff(traj.H)
    items = [("backend", BACKEND), ("h", cfg.h), ("steps", cfg.steps), ("control", cfg.control),
             ("H_initial", float(traj.H[0])), ("H_final", float(traj.H[-1])),
             ("max_energy_increment", float(np.max(dH)) if dH.size else 0.0)]
    if not ok:
        items.append(("first_increase_step", first))
    items.append(("result", "pass" if ok else "fail"))
    write_report(out / "report.txt", "dissipation-check", items)
    return EXIT_OK if ok else EXIT_CHECK


RUNNERS = {
    "simulate": _run_simulate,
    "order-study": _run_order_study,
    "energy-study": _run_energy_study,
    "symmetry-check": _run_symmetry_check,
    "dissipation-check": _run_dissipation_check,
}


def _error(message):
    print(f"phdae: error: {message}", file=_sys.stderr)


def run(command, config_path, out=None):
    """Run ``command`` on the config at ``config_path``; returns the exit status."""
    try:
        cfg = load_config(config_path)
        mode = command.replace("-", "_")
        if command != "validate-config" and ("experiment", "mode") in cfg.lines \
                and cfg.experiment != mode:
            print(f"phdae: note: command {command!r} overrides experiment mode "
                  f"{cfg.experiment!r}", file=_sys.stderr)
        exp = Experiment(cfg)
        if command == "validate-config":
            print(f"config ok: system={cfg.system} h={cfg.h} control={cfg.control} "
                  f"experiment={cfg.experiment} steps={cfg.steps}")
            return EXIT_OK
        out_dir = Path(out if out is not None else cfg.output)
        out_dir.mkdir(parents=True, exist_ok=True)
        return RUNNERS[command](exp, out_dir)
    except (ConfigError, InputError) as exc:
        _error(exc)
        return EXIT_CONFIG
    except StepFailure as exc:
        _error(f"solver failure: {exc}")
        if exc.trajectory is not None:
            write_trajectory_csv(exc.trajectory, out_dir / "trajectory.csv",
                                 footer=f"FAILURE: {exc}")
        return EXIT_SOLVER


def build_parser():
    parser = argparse.ArgumentParser(
        prog="phdae", description="Sampled-data simulation of implicit port-Hamiltonian systems.")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", required=True, help="path to the run configuration")
    parser.add_argument("--out", help="output directory (overrides [output] path)")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    return run(args.command, args.config, args.out)


if __name__ == "__main__":
    raise SystemExit(main())
