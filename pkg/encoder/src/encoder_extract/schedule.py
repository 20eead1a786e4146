"""Snapshot-epoch schedules.

A fine-tuning run of E epochs keeps three intermediate checkpoints; the
schedule decides which.  The arithmetic here matches the consumer side of
the feature pipeline so that ``--schedule fixed_stride(3)`` names the same
epochs in both places:

* ``fixed_stride(s)`` — the final epoch and two more at stride s back:
  [E-2s, E-s, E].
* ``geometric`` — intervals back from the end shrink by 3 with
  d = floor(E/10 + 0.5): [E-4d, E-d, E].
* ``random`` — three distinct epochs drawn uniformly from [1, E] with the
  job seed, sorted ascending.
"""

from __future__ import annotations

import re

import numpy as np

from .errors import ScheduleError

_SCHEDULE_RE = re.compile(r"^(fixed_stride|random|geometric)(?:\((\d+)\))?$")


def schedule_epochs(kind: str, total_epochs: int, stride: int = 1, seed: int = 0) -> list:
    """Three distinct snapshot epochs in [1, total_epochs]."""
    E = int(total_epochs)
    if kind == "fixed_stride":
        s = int(stride)
        if s < 1 or E - 2 * s < 1:
            raise ScheduleError(f"stride {s} too large for {E} epochs")
        return [E - 2 * s, E - s, E]
    if kind == "geometric":
        d = int(np.floor(E / 10 + 0.5))
        if d < 1 or E - 4 * d < 1:
            raise ScheduleError(f"{E} epochs too few for the geometric schedule")
        return [E - 4 * d, E - d, E]
    if kind == "random":
        if E < 3:
            raise ScheduleError(f"cannot draw 3 distinct epochs from {E}")
        rng = np.random.default_rng(seed)
        picks = rng.choice(E, size=3, replace=False) + 1
        return sorted(int(e) for e in picks)
    raise ScheduleError(f"unknown schedule kind {kind!r}")


def parse_schedule(text: str, total_epochs: int, seed: int = 0) -> list:
    """Parse ``fixed_stride(s)`` / ``geometric`` / ``random`` into epochs."""
    m = _SCHEDULE_RE.match(text.strip())
    if m is None:
        raise ScheduleError(f"unrecognized schedule {text!r}")
    kind, arg = m.group(1), m.group(2)
    if kind == "fixed_stride":
        return schedule_epochs(kind, total_epochs, stride=int(arg or 1))
    if arg is not None:
        raise ScheduleError(f"schedule {kind!r} takes no argument")
    return schedule_epochs(kind, total_epochs, seed=seed)
