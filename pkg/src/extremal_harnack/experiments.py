"""Standard solved fields used by the CLI, the scripts and the acceptance suite."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.optimize import brentq

from .nonlinearity import Nonlinearity
from .presets import preset
from .pucci import EllipticityPair
from .solver import Field, ProblemSpec, Side, make_grid, solve

PROBE_RADIUS = 2.0
PROBE_SPAN = (-1.0, 0.0)
FAMILY_RADIUS = 2.5
FAMILY_SPAN = (-1.25, 0.5)


@dataclass(frozen=True)
class SolveConfig:
    """Everything needed to build a solved field from a named preset."""

    data: str = "gaussian"
    side: str = "super"
    lam: float = 1.0
    Lam: float = 2.0
    dim: int = 1
    radius: float = PROBE_RADIUS
    cells: int = 256
    t_start: float = PROBE_SPAN[0]
    t_end: float = PROBE_SPAN[1]
    save_factor: float = 0.5
    scale: float = 1.0
    shift: float = 0.0

    @property
    def h(self) -> float:
        return 2 * self.radius / self.cells

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def solve_preset(cfg: SolveConfig, nl: Nonlinearity) -> Field:
    """Solve with preset initial data; lateral data is the initial data frozen in time."""
    spec = ProblemSpec(Side.parse(cfg.side), EllipticityPair(cfg.lam, cfg.Lam),
                       preset(cfg.data, cfg.scale, cfg.shift), nonlinearity=nl)
    grid = make_grid(spec, cfg.dim, cfg.radius, cfg.cells, cfg.t_start, cfg.t_end,
                     save_interval=cfg.save_factor * cfg.h ** 2)
    f = solve(spec, grid)
    f.meta["config"] = cfg.to_dict()
    return f


def center_value(f: Field, t: float = 0.0) -> float:
    return float(f.evaluate(np.zeros((1, f.dim)), t)[0])


def calibrated_field(eps: float, nl: Nonlinearity, cfg: SolveConfig) -> Field:
    """Solved field with ``u(0, 0) = eps``.

    The data amplitude ``s`` is tuned so that the solution from ``s * data``
    has ``u(0, 0)`` close to ``eps``; by comparison ``u(0, 0)`` is nondecreasing
    in ``s``. The equation has no zeroth-order term, so adding the small
    residual constant yields another solution with ``u(0, 0) = eps`` exactly.
    """
    cache = {}

    def value(log_s):
        if log_s not in cache:
            f = solve_preset(_with(cfg, scale=math.exp(log_s)), nl)
            cache[log_s] = (max(center_value(f), 1e-300), f)
        return cache[log_s]

    def gap(log_s):
        return math.log(value(log_s)[0]) - math.log(eps)

    lo, hi = math.log(eps), math.log(eps) + 1.0
    while gap(hi) < 0:
        lo, hi = hi, hi + 2.0
    while gap(lo) > 0:
        lo, hi = lo - 2.0, lo
    root = brentq(gap, lo, hi, xtol=1e-5, rtol=1e-10)
    # settle below eps so the shift is nonnegative and keeps u >= 0
    step = 1e-5
    while gap(root) > 0:
        root -= step
        step *= 2
    v, f = value(root)
    out = Field(f.grid, f.values + (eps - v), dict(f.meta))
    out.meta.update(eps=eps, amplitude=math.exp(root), shift=eps - v)
    return out


def _with(cfg: SolveConfig, **kw) -> SolveConfig:
    d = cfg.to_dict()
    d.update(kw)
    return SolveConfig(**d)


def family_config(cells: int = 160, data: str = "bump") -> SolveConfig:
    return SolveConfig(data=data, radius=FAMILY_RADIUS, cells=cells,
                       t_start=FAMILY_SPAN[0], t_end=FAMILY_SPAN[1])


def osgood_family(eps_values: Sequence[float], nl: Nonlinearity,
                  cfg: SolveConfig = None) -> list:
    cfg = family_config() if cfg is None else cfg
    return [(eps, calibrated_field(eps, nl, cfg)) for eps in eps_values]
