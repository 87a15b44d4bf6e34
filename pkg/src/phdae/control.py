"""Command sources for the sampled-data loop.

A control source is any callable ``source(alpha, y) -> u`` mapping the step
index and the sampled output to the command held over the next interval.
"""

import csv

import numpy as np

from .errors import ConfigError


class ZeroSource:
    """``u = 0`` for ``m`` ports."""

    def __init__(self, m):
        self.m = m

    def __call__(self, alpha, y):
        return np.zeros(self.m)


class DampingSource:
    """Output feedback ``u = -K y`` with ``K`` symmetric positive semi-definite."""

    def __init__(self, K):
        K = np.atleast_2d(np.asarray(K, dtype=float))
        if K.shape[0] != K.shape[1]:
            raise ValueError(f"damping gain must be square, got shape {K.shape}")
        if np.max(np.abs(K - K.T), initial=0.0) > 1e-12:
            raise ValueError("damping gain must be symmetric")
        if np.min(np.linalg.eigvalsh(K)) < -1e-12:
            raise ValueError("damping gain must be positive semi-definite")
        self.K = K

    def __call__(self, alpha, y):
        return -(self.K @ np.asarray(y, dtype=float))


class SequenceSource:
    """Open-loop replay of ``rows``; the last row is held once the list runs out."""

    def __init__(self, rows):
        rows = np.atleast_2d(np.asarray(rows, dtype=float))
        if rows.size == 0:
            raise ValueError("sequence source needs at least one row")
        self.rows = rows

    def __call__(self, alpha, y):
        return self.rows[min(alpha, len(self.rows) - 1)].copy()


def damping_source(K):
    return DampingSource(K)


def sequence_source(rows):
    return SequenceSource(rows)


def load_input_csv(path, m):
    """Read an input sequence: one row per sample, ``m`` columns, ``#`` comments.

    A header line is allowed; when it names columns ``u1..um`` (as in an
    exported trajectory) those columns are picked out.
    """
    rows = []
    columns = list(range(m))
    seen_data = False
    with open(path, newline="") as fh:
        lines = [(i, line) for i, line in enumerate(fh, start=1)
                 if line.strip() and not line.lstrip().startswith("#")]
    for lineno, fields in zip((i for i, _ in lines), csv.reader(line for _, line in lines)):
        fields = [f.strip() for f in fields]
        if not seen_data:
            try:
                [float(f) for f in fields]
            except ValueError:
                wanted = [f"u{j + 1}" for j in range(m)]
                if all(w in fields for w in wanted):
                    columns = [fields.index(w) for w in wanted]
                elif len(fields) != m:
                    raise ConfigError(f"{path}: header does not name u1..u{m}", lineno)
                seen_data = True
                continue
            seen_data = True
        try:
            values = [float(f) for f in fields]
        except ValueError:
            raise ConfigError(f"{path}: malformed number in {fields}", lineno) from None
        if max(columns) >= len(values) or (columns == list(range(m)) and len(values) != m):
            raise ConfigError(f"{path}: expected {m} columns, got {len(values)}", lineno)
        rows.append([values[c] for c in columns])
    if not rows:
        raise ConfigError(f"{path}: no input rows")
    return np.array(rows)
