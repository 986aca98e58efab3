"""Named initial-data presets for the solver.

A preset maps spatial points of shape ``(..., dim)`` to values. Lateral data
for presets is the initial profile frozen in time.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

GAUSSIAN_SIGMA = 0.5
TWO_BUMP_OFFSET = 0.8
TWO_BUMP_SIGMA = 0.35

PRESET_NAMES = ("gaussian", "exp1d", "bump", "constant:<v>", "two-bump")


def _sq(x):
    return np.sum(np.asarray(x, dtype=float) ** 2, axis=-1)


def gaussian(x):
    return np.exp(-_sq(x) / (2 * GAUSSIAN_SIGMA ** 2))


def exp1d(x):
    return np.exp(np.asarray(x, dtype=float)[..., 0])


def bump(x):
    s = _sq(x)
    inside = s < 1
    return np.where(inside, np.exp(1 - 1 / np.where(inside, 1 - s, 1.0)), 0.0)


def two_bump(x):
    x = np.asarray(x, dtype=float)
    shift = np.zeros(x.shape[-1])
    shift[0] = TWO_BUMP_OFFSET
    w = 2 * TWO_BUMP_SIGMA ** 2
    return np.exp(-_sq(x - shift) / w) + np.exp(-_sq(x + shift) / w)


def constant(v: float) -> Callable:
    v = float(v)

    def f(x):
        return np.full(np.shape(x)[:-1], v)
    return f


def preset(name: str, scale: float = 1.0, shift: float = 0.0) -> Callable:
    """Look up a preset by name and return ``x -> scale * f(x) + shift``."""
    if name.startswith("constant:"):
        try:
            base = constant(float(name.split(":", 1)[1]))
        except ValueError:
            raise ValueError(f"bad constant preset {name!r}") from None
    else:
        table = {"gaussian": gaussian, "exp1d": exp1d, "bump": bump, "two-bump": two_bump}
        if name not in table:
            raise ValueError(f"unknown data preset {name!r}; choose from {PRESET_NAMES}")
        base = table[name]
    if scale == 1.0 and shift == 0.0:
        return base
    return lambda x: scale * base(x) + shift
