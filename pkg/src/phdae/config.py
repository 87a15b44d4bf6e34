"""Run configuration: a sectioned ``key = value`` text format.

Example::

    [system]
    name = double_pendulum
    m_b = 0.6

    [integrator]
    h = 0.01

    [control]
    mode = damping
    gain = 0.3

    [initial]
    q = -1.0707963267948966, 0.3

    [experiment]
    steps = 1000

    [output]
    path = out

Blank lines and lines starting with ``#`` or ``;`` are ignored. Unknown
sections or keys are errors.
"""

from dataclasses import dataclass, field
from math import isfinite, pi
from pathlib import Path
from typing import Optional

from .errors import ConfigError

EXPERIMENTS = ("simulate", "order_study", "energy_study", "symmetry_check", "dissipation_check")
CONTROL_MODES = ("zero", "damping", "open_loop")

KEYS = {
    "system": {"name", "l_a", "l_b", "m_a", "m_b", "g_bar"},
    "integrator": {"h", "tol", "max_iter", "fd_step"},
    "control": {"mode", "gain", "input"},
    "initial": {"q", "p_hat", "r", "p"},
    "experiment": {"mode", "steps", "T", "h_list", "h_ref", "threshold", "compare_half"},
    "output": {"path", "log_every"},
}


@dataclass
class RunConfig:
    system: str = "double_pendulum"
    params: dict = field(default_factory=dict)
    h: float = 0.01
    tol: float = 1e-12
    max_iter: int = 50
    fd_step: float = 1e-7
    control: str = "zero"
    gain: Optional[list] = None
    input_path: Optional[str] = None
    q0: Optional[tuple] = None
    p_hat0: Optional[tuple] = None
    r0: Optional[tuple] = None
    p0: Optional[tuple] = None
    experiment: str = "simulate"
    steps: int = 1000
    T: float = 1.0
    h_list: tuple = (0.004, 0.002, 0.001)
    h_ref: float = 1e-5
    threshold: float = 1e-9
    compare_half: bool = True
    output: str = "out"
    log_every: int = 1
    lines: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if self.q0 is None and self.r0 is None:
            self.q0 = (-pi / 2, 0.0)


def _number(text, lineno, key):
    try:
        value = float(text)
    except ValueError:
        raise ConfigError(f"malformed number for {key!r}: {text!r}", lineno) from None
    if not isfinite(value):
        raise ConfigError(f"{key!r} must be finite, got {text!r}", lineno)
    return value


def _integer(text, lineno, key):
    try:
        return int(text)
    except ValueError:
        raise ConfigError(f"malformed integer for {key!r}: {text!r}", lineno) from None


def _vector(text, lineno, key, size=None):
    values = tuple(_number(t.strip(), lineno, key) for t in text.split(",") if t.strip())
    if size is not None and len(values) != size:
        raise ConfigError(f"{key!r} needs {size} comma-separated values, got {len(values)}", lineno)
    return values


def _boolean(text, lineno, key):
    lowered = text.lower()
    if lowered in ("true", "yes", "1", "on"):
        return True
    if lowered in ("false", "no", "0", "off"):
        return False
    raise ConfigError(f"{key!r} must be true or false, got {text!r}", lineno)


def read_sections(text):
    """Split config text into ``{section: {key: (value, lineno)}}``."""
    sections = {}
    current = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line[0] in "#;":
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ConfigError(f"malformed section header {line!r}", lineno)
            current = line[1:-1].strip()
            if current not in KEYS:
                raise ConfigError(f"unknown section [{current}]", lineno)
            if current in sections:
                raise ConfigError(f"duplicate section [{current}]", lineno)
            sections[current] = {}
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {line!r}", lineno)
        if current is None:
            raise ConfigError("key outside of any section", lineno)
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in KEYS[current]:
            raise ConfigError(f"unknown key {key!r} in [{current}]", lineno)
        if key in sections[current]:
            raise ConfigError(f"duplicate key {key!r} in [{current}]", lineno)
        if not value:
            raise ConfigError(f"empty value for {key!r}", lineno)
        sections[current][key] = (value, lineno)
    return sections


def parse_config(text, base_dir=None):
    """Parse config text into a :class:`RunConfig`.

    ``base_dir`` resolves relative input paths and, when given, their
    existence is checked.
    """
    sections = read_sections(text)
    cfg = RunConfig()
    lines = {}

    def get(section, key):
        entry = sections.get(section, {}).get(key)
        if entry is not None:
            lines[(section, key)] = entry[1]
        return entry

    if (e := get("system", "name")) is not None:
        if e[0] != "double_pendulum":
            raise ConfigError(f"unknown system {e[0]!r} (available: double_pendulum)", e[1])
        cfg.system = e[0]
    for key in ("l_a", "l_b", "m_a", "m_b", "g_bar"):
        if (e := get("system", key)) is not None:
            value = _number(e[0], e[1], key)
            if value <= 0:
                raise ConfigError(f"{key!r} must be positive", e[1])
            cfg.params[key] = value

    if (e := get("integrator", "h")) is not None:
        cfg.h = _number(e[0], e[1], "h")
    if cfg.h <= 0:
        raise ConfigError("step size h must be positive", lines.get(("integrator", "h")))
    if (e := get("integrator", "tol")) is not None:
        cfg.tol = _number(e[0], e[1], "tol")
        if cfg.tol <= 0:
            raise ConfigError("tol must be positive", e[1])
    if (e := get("integrator", "max_iter")) is not None:
        cfg.max_iter = _integer(e[0], e[1], "max_iter")
        if cfg.max_iter < 1:
            raise ConfigError("max_iter must be at least 1", e[1])
    if (e := get("integrator", "fd_step")) is not None:
        cfg.fd_step = _number(e[0], e[1], "fd_step")
        if cfg.fd_step <= 0:
            raise ConfigError("fd_step must be positive", e[1])

    if (e := get("control", "mode")) is not None:
        if e[0] not in CONTROL_MODES:
            raise ConfigError(f"control mode must be one of {', '.join(CONTROL_MODES)}", e[1])
        cfg.control = e[0]
    if (e := get("control", "gain")) is not None:
        cfg.gain = list(_vector(e[0], e[1], "gain"))
        if len(cfg.gain) not in (1, 4):
            raise ConfigError("gain is a scalar or a row-major 2x2 matrix", e[1])
    if (e := get("control", "input")) is not None:
        path = Path(e[0])
        if base_dir is not None and not path.is_absolute():
            path = Path(base_dir) / path
        if base_dir is not None and not path.is_file():
            raise ConfigError(f"input file {str(path)!r} does not exist", e[1])
        cfg.input_path = str(path)
    if cfg.control == "damping" and cfg.gain is None:
        raise ConfigError("damping control needs a gain", lines.get(("control", "mode")))
    if cfg.control == "open_loop" and cfg.input_path is None:
        raise ConfigError("open_loop control needs an input file", lines.get(("control", "mode")))

    q = get("initial", "q")
    p_hat = get("initial", "p_hat")
    r = get("initial", "r")
    p = get("initial", "p")
    if (q or p_hat) and (r or p):
        line = max(e[1] for e in (q, p_hat, r, p) if e)
        raise ConfigError("initial state given both as (q, p_hat) and as (r, p)", line)
    if p_hat and not q:
        raise ConfigError("p_hat needs q", p_hat[1])
    if p and not r:
        raise ConfigError("p needs r", p[1])
    if q:
        cfg.q0 = _vector(q[0], q[1], "q", 2)
        cfg.p_hat0 = _vector(p_hat[0], p_hat[1], "p_hat", 2) if p_hat else (0.0, 0.0)
    elif r:
        cfg.q0 = None
        cfg.r0 = _vector(r[0], r[1], "r", 4)
        cfg.p0 = _vector(p[0], p[1], "p", 4) if p else (0.0,) * 4
    else:
        cfg.p_hat0 = (0.0, 0.0)

    if (e := get("experiment", "mode")) is not None:
        if e[0] not in EXPERIMENTS:
            raise ConfigError(f"experiment mode must be one of {', '.join(EXPERIMENTS)}", e[1])
        cfg.experiment = e[0]
    if (e := get("experiment", "steps")) is not None:
        cfg.steps = _integer(e[0], e[1], "steps")
        if cfg.steps < 0:
            raise ConfigError("steps must be non-negative", e[1])
    if (e := get("experiment", "T")) is not None:
        cfg.T = _number(e[0], e[1], "T")
        if cfg.T <= 0:
            raise ConfigError("T must be positive", e[1])
    if (e := get("experiment", "h_list")) is not None:
        cfg.h_list = _vector(e[0], e[1], "h_list")
        if not cfg.h_list or min(cfg.h_list) <= 0:
            raise ConfigError("h_list needs positive step sizes", e[1])
    if (e := get("experiment", "h_ref")) is not None:
        cfg.h_ref = _number(e[0], e[1], "h_ref")
        if cfg.h_ref <= 0:
            raise ConfigError("h_ref must be positive", e[1])
    if (e := get("experiment", "threshold")) is not None:
        cfg.threshold = _number(e[0], e[1], "threshold")
    if (e := get("experiment", "compare_half")) is not None:
        cfg.compare_half = _boolean(e[0], e[1], "compare_half")

    if (e := get("output", "path")) is not None:
        cfg.output = e[0]
    if (e := get("output", "log_every")) is not None:
        cfg.log_every = _integer(e[0], e[1], "log_every")
        if cfg.log_every < 1:
            raise ConfigError("log_every must be at least 1", e[1])

    cfg.lines = lines
    return cfg


def load_config(path):
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {str(path)!r}: {exc.strerror}") from None
    return parse_config(text, base_dir=path.parent)
