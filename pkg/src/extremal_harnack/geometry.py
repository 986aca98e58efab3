"""Parabolic cubes, intrinsic waiting sets and the intrinsic scale.

Every set is an axis-aligned box in space-time whose faces may be open or
closed. ``Box`` carries that data, and the named sets only know how to
build their box.

Conventions
-----------
* ``ParabolicCube``: ``{|x - x0|_inf < rho} x (t0 - rho^2, t0]``.
* ``WaitingSetPlus``: ``{|x - x0|_inf < rho c/2} x
  (t0 + rho^2 - (rho c)^2/2, t0 + rho^2 - (rho c)^2/4]``.
* ``WaitingSetMinus``: ``{|x|_inf <= c/2} x [-1 + c^2/4, -1 + c^2/2]``,
  optionally mapped by ``(x, t) -> (x0 + s x, t0 + s^2 t)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence, Union

import numpy as np

from .nonlinearity import Nonlinearity


def _vec(x, dim=None) -> tuple:
    arr = np.atleast_1d(np.asarray(x, dtype=float))
    if arr.ndim != 1:
        raise ValueError("a spatial point must be a 1D sequence")
    if dim is not None and arr.size != dim:
        raise ValueError(f"expected a point of dimension {dim}, got {arr.size}")
    return tuple(float(v) for v in arr)


@dataclass(frozen=True)
class Box:
    """Axis-aligned space-time box.

    ``lo``/``hi`` hold the spatial bounds per axis. ``x_closed`` says whether
    the spatial faces belong to the set (all axes alike). Time bounds carry
    their own flags.
    """

    lo: tuple
    hi: tuple
    x_closed: bool
    t_lo: float
    t_hi: float
    t_lo_closed: bool
    t_hi_closed: bool

    @property
    def dim(self) -> int:
        return len(self.lo)

    def contains(self, x, t) -> np.ndarray:
        """Vectorized membership; ``x`` has shape ``(..., dim)``."""
        x = np.asarray(x, dtype=float)
        t = np.asarray(t, dtype=float)
        if x.shape[-1] != self.dim:
            raise ValueError(f"expected points of dimension {self.dim}")
        lo, hi = np.asarray(self.lo), np.asarray(self.hi)
        if self.x_closed:
            inside = np.all((x >= lo) & (x <= hi), axis=-1)
        else:
            inside = np.all((x > lo) & (x < hi), axis=-1)
        inside &= (t >= self.t_lo) if self.t_lo_closed else (t > self.t_lo)
        inside &= (t <= self.t_hi) if self.t_hi_closed else (t < self.t_hi)
        return inside

    def within(self, other: "Box") -> bool:
        """Closure of ``self`` lies in the closure of ``other``."""
        if self.dim != other.dim:
            raise ValueError("dimension mismatch")
        return (all(a >= b for a, b in zip(self.lo, other.lo))
                and all(a <= b for a, b in zip(self.hi, other.hi))
                and self.t_lo >= other.t_lo and self.t_hi <= other.t_hi)

    def widths(self) -> tuple:
        return tuple(h - l for l, h in zip(self.lo, self.hi)), self.t_hi - self.t_lo


@dataclass(frozen=True)
class ParabolicCube:
    center: tuple
    t0: float
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", _vec(self.center))
        if not (np.isfinite(self.radius) and self.radius > 0):
            raise ValueError("radius must be finite and positive")

    @property
    def dim(self) -> int:
        return len(self.center)

    def box(self) -> Box:
        r = self.radius
        return Box(tuple(c - r for c in self.center), tuple(c + r for c in self.center),
                   False, self.t0 - r * r, self.t0, False, True)


@dataclass(frozen=True)
class WaitingSetPlus:
    center: tuple
    t0: float
    radius: float
    cn: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "center", _vec(self.center))
        if not (np.isfinite(self.radius) and self.radius > 0):
            raise ValueError("radius must be finite and positive")
        if not 0 < self.cn <= 1:
            raise ValueError("cn must lie in (0, 1]")

    @property
    def dim(self) -> int:
        return len(self.center)

    def box(self) -> Box:
        r, c = self.radius, self.cn
        half = r * c / 2
        top = self.t0 + r * r
        return Box(tuple(x - half for x in self.center), tuple(x + half for x in self.center),
                   False, top - (r * c) ** 2 / 2, top - (r * c) ** 2 / 4, False, True)


@dataclass(frozen=True)
class WaitingSetMinus:
    """``A_1^-`` and its images under ``(x, t) -> (x0 + s x, t0 + s^2 t)``."""

    cn: float = 1.0
    dim: int = 1
    center: tuple = field(default=None)
    t0: float = 0.0
    scale: float = 1.0

    def __post_init__(self):
        if not 0 < self.cn <= 1:
            raise ValueError("cn must lie in (0, 1]")
        if self.dim < 1:
            raise ValueError("dim must be positive")
        center = (0.0,) * self.dim if self.center is None else _vec(self.center, self.dim)
        object.__setattr__(self, "center", center)
        if not (np.isfinite(self.scale) and self.scale > 0):
            raise ValueError("scale must be finite and positive")

    def box(self) -> Box:
        c, s = self.cn, self.scale
        half = s * c / 2
        return Box(tuple(x - half for x in self.center), tuple(x + half for x in self.center),
                   True, self.t0 + s * s * (-1 + c * c / 4), self.t0 + s * s * (-1 + c * c / 2),
                   True, True)


AnySet = Union[ParabolicCube, WaitingSetPlus, WaitingSetMinus, Box]


def as_box(s: AnySet) -> Box:
    return s if isinstance(s, Box) else s.box()


def contains(s: AnySet, point) -> bool:
    """Exact membership of ``point = (x, t)`` honoring open and closed faces."""
    x, t = point
    b = as_box(s)
    return bool(b.contains(np.asarray(_vec(x, b.dim)), float(t)))


def intrinsic_scale(nl: Nonlinearity, u0: float, C: float) -> float:
    """``u0 / (C (phi(u0) + u0)) = 1 / (C (eta(u0) + 1))``.

    ``C = 1`` is accepted so that a C-grid may start at ``2^0``.
    """
    if not u0 > 0:
        raise ValueError("u0 must be positive")
    if not C >= 1:
        raise ValueError("C must be at least 1")
    return 1.0 / (C * (float(nl.eta_values(u0)) + 1.0))


def fits_in(domain: ParabolicCube, required: Iterable[AnySet]) -> bool:
    """True iff every required set's bounding box lies inside ``domain``.

    Boundary contact is allowed.
    """
    dom = domain.box()
    return all(as_box(s).within(dom) for s in required)


def forward_radius_limit(domain: ParabolicCube, x0: Sequence[float], t0: float,
                         cn: float = 1.0) -> float:
    """Largest ``rho`` with ``Q_{2 rho}(x0, t0)`` and ``A^+_rho(x0, t0)`` inside ``domain``.

    Returns 0 when no positive radius is admissible.
    """
    x0 = np.asarray(_vec(x0, domain.dim))
    c = np.asarray(domain.center)
    R = domain.radius
    slack_x = float(np.min(R - np.abs(x0 - c)))
    slack_top = domain.t0 - t0
    slack_bottom = t0 - (domain.t0 - R * R)
    if slack_x <= 0 or slack_top <= 0 or slack_bottom < 0:
        return 0.0
    # spatial: 2 rho <= slack (cube dominates the waiting set since cn <= 1)
    # past: 4 rho^2 <= slack_bottom, future: rho^2 (1 - cn^2/4) <= slack_top
    return float(min(slack_x / 2, np.sqrt(slack_bottom) / 2,
                     np.sqrt(slack_top / (1 - cn * cn / 4))))
