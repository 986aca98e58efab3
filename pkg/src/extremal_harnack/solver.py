"""Monotone explicit finite differences for the extremal parabolic equations.

Two equations are supported on the cube ``[-R, R]^dim`` with ``dim`` in
``{1, 2}``::

    super side:  u_t = P^-(D^2 u) - phi(|Du|)
    sub side:    u_t = P^+(D^2 u) + phi(|Du|)

Dirichlet data is imposed on the whole parabolic boundary. The scheme is
explicit Euler in time with

* ``P^-``/``P^+``: each direction ``v`` of a frame contributes
  ``theta(Delta_v u)``, where ``theta`` puts weight ``lam`` on one sign and
  ``Lam`` on the other. In 2D the frames are the axis pair and the diagonal
  pair, and the operator takes the min (``P^-``) or max (``P^+``) of the two
  frame sums.
* ``|Du|``: Rouy-Tourin upwinding. In 1D, when ``h L_phi <= 2 lam``, the
  centered difference is used instead. The diffusion then dominates the
  drift, so the scheme stays monotone and becomes second order.

The time step follows ``dt = 0.9 / (4 Lam dim / h^2 + 2 sqrt(dim) L_phi / h)``,
where ``L_phi`` bounds the Lipschitz constant of ``phi`` on ``[0, G_max]`` and
``G_max`` is twice the largest discrete gradient seen so far.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from .errors import CflViolation, NonFiniteValue
from .nonlinearity import Nonlinearity, local_lipschitz
from .pucci import EllipticityPair

CFL_SAFETY = 0.9
PECLET_LIMIT = 2.0


class Side(enum.Enum):
    SUPER = "super"
    SUB = "sub"

    @classmethod
    def parse(cls, value) -> "Side":
        if isinstance(value, cls):
            return value
        key = str(value).lower().replace("extremal", "").replace("-", "").replace("_", "")
        for side in cls:
            if side.value == key:
                return side
        raise ValueError(f"unknown side {value!r}; use 'super' or 'sub'")

    @property
    def sign(self) -> str:
        return "-" if self is Side.SUPER else "+"


# ---------------------------------------------------------------------------
# grid and problem
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Grid:
    """Uniform grid on ``[-radius, radius]^dim x [t_start, t_end]``.

    ``dt`` is the largest admissible step; the solver splits each of the
    ``layers`` saved intervals into equal substeps no longer than ``dt``.
    ``lipschitz`` and ``gradient_bound`` record the drift bound that ``dt``
    was built from.
    """

    dim: int
    radius: float
    cells: int
    t_start: float
    t_end: float
    dt: float
    layers: int
    lipschitz: float = 0.0
    gradient_bound: float = 0.0
    central: bool = False

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise ValueError("the solver supports dim 1 and 2")
        if self.cells < 2:
            raise ValueError("need at least two cells per axis")
        if not self.radius > 0 or not self.t_end > self.t_start:
            raise ValueError("empty space-time domain")
        if not self.dt > 0 or self.layers < 1:
            raise ValueError("dt and layers must be positive")

    @property
    def h(self) -> float:
        return 2.0 * self.radius / self.cells

    @property
    def axis(self) -> np.ndarray:
        return np.linspace(-self.radius, self.radius, self.cells + 1)

    @property
    def times(self) -> np.ndarray:
        return np.linspace(self.t_start, self.t_end, self.layers + 1)

    @property
    def shape(self) -> tuple:
        return (self.cells + 1,) * self.dim

    def points(self) -> np.ndarray:
        """Node coordinates with shape ``shape + (dim,)``."""
        mesh = np.meshgrid(*([self.axis] * self.dim), indexing="ij")
        return np.stack(mesh, axis=-1)

    def to_dict(self) -> dict:
        return {"dim": self.dim, "radius": self.radius, "cells": self.cells, "h": self.h,
                "t_start": self.t_start, "t_end": self.t_end, "dt": self.dt,
                "layers": self.layers, "lipschitz": self.lipschitz,
                "gradient_bound": self.gradient_bound, "central": self.central}


@dataclass(frozen=True)
class ProblemSpec:
    """Extremal problem with Dirichlet data.

    ``drift`` overrides ``phi`` for manufactured-solution tests (``phi = 0`` for
    the heat equation, for instance); admissibility is only required of a
    supplied ``nonlinearity``. ``boundary(x, t)`` defaults to the initial
    data frozen in time.
    """

    side: Side
    ellipticity: EllipticityPair
    initial: Callable
    nonlinearity: Optional[Nonlinearity] = None
    drift: Optional[Callable] = None
    boundary: Optional[Callable] = None

    def __post_init__(self):
        object.__setattr__(self, "side", Side.parse(self.side))
        if (self.nonlinearity is None) == (self.drift is None):
            raise ValueError("give exactly one of nonlinearity or drift")

    def phi(self, g: np.ndarray) -> np.ndarray:
        if self.nonlinearity is not None:
            return self.nonlinearity.phi(g)
        return np.asarray(self.drift(g), dtype=float) * np.ones_like(g)

    def boundary_values(self, x: np.ndarray, t: float) -> np.ndarray:
        if self.boundary is None:
            return np.asarray(self.initial(x), dtype=float)
        return np.asarray(self.boundary(x, t), dtype=float)


def data_modulus(fn: Callable, dim: int, radius: float, cells: int) -> float:
    """Largest difference of ``fn`` between grid neighbors."""
    axis = np.linspace(-radius, radius, cells + 1)
    pts = np.stack(np.meshgrid(*([axis] * dim), indexing="ij"), axis=-1)
    v = np.asarray(fn(pts), dtype=float)
    return float(max(np.max(np.abs(np.diff(v, axis=a))) for a in range(dim)))


def check_continuity(fn: Callable, dim: int, radius: float, cells: int = 64,
                     tol: float = 1e-8) -> None:
    """Reject data whose sampled modulus of continuity does not shrink under refinement."""
    coarse = data_modulus(fn, dim, radius, cells)
    fine = data_modulus(fn, dim, radius, 4 * cells)
    if fine > tol and fine > 0.9 * coarse:
        raise ValueError(f"data looks discontinuous: neighbor jump {fine:.3g} at h/4 "
                         f"versus {coarse:.3g} at h")


# ---------------------------------------------------------------------------
# discrete operators
# ---------------------------------------------------------------------------

def _theta(s, e: EllipticityPair, sign: str):
    pos, neg = (e.lam, e.Lam) if sign == "-" else (e.Lam, e.lam)
    return pos * np.maximum(s, 0.0) + neg * np.minimum(s, 0.0)


def _interior(u: np.ndarray, di: int = 0, dj: int = 0) -> np.ndarray:
    """Interior block of ``u`` shifted by ``(di, dj)``."""
    if u.ndim == 1:
        return u[1 + di: u.shape[0] - 1 + di]
    n0, n1 = u.shape
    return u[1 + di: n0 - 1 + di, 1 + dj: n1 - 1 + dj]


def second_differences(u: np.ndarray, h: float) -> list:
    """Directional second differences grouped by frame."""
    c = _interior(u)
    if u.ndim == 1:
        return [[(_interior(u, 1) - 2 * c + _interior(u, -1)) / h ** 2]]
    axis = [(_interior(u, 1, 0) - 2 * c + _interior(u, -1, 0)) / h ** 2,
            (_interior(u, 0, 1) - 2 * c + _interior(u, 0, -1)) / h ** 2]
    diag = [(_interior(u, 1, 1) - 2 * c + _interior(u, -1, -1)) / (2 * h ** 2),
            (_interior(u, 1, -1) - 2 * c + _interior(u, -1, 1)) / (2 * h ** 2)]
    return [axis, diag]


def pucci_interior(u: np.ndarray, h: float, e: EllipticityPair, sign: str) -> np.ndarray:
    """Discrete extremal operator on all interior nodes of one time layer."""
    sums = [sum(_theta(d, e, sign) for d in frame) for frame in second_differences(u, h)]
    if len(sums) == 1:
        return sums[0]
    return np.minimum(*sums) if sign == "-" else np.maximum(*sums)


def gradient_interior(u: np.ndarray, h: float, side: Side, central: bool = False) -> np.ndarray:
    """Monotone discretization of ``|Du|`` on interior nodes."""
    c = _interior(u)
    if central:
        if u.ndim != 1:
            raise ValueError("centered gradient is only used in 1D")
        return np.abs(_interior(u, 1) - _interior(u, -1)) / (2 * h)
    total = np.zeros_like(c)
    shifts = [(1,), ] if u.ndim == 1 else [(1, 0), (0, 1)]
    for s in shifts:
        fwd = (_interior(u, *s) - c) / h
        bwd = (c - _interior(u, *(-k for k in s))) / h
        if side is Side.SUPER:
            g = np.maximum(np.maximum(bwd, -fwd), 0.0)
        else:
            g = np.maximum(np.maximum(fwd, -bwd), 0.0)
        total += g * g
    return np.sqrt(total)


def _layer(field_or_array, time_index):
    if isinstance(field_or_array, Field):
        return field_or_array.values[time_index], field_or_array.grid.h
    return np.asarray(field_or_array, dtype=float), None


def discrete_pucci(field, space_index, time_index: int, e: EllipticityPair,
                   sign: str = "-", h: Optional[float] = None) -> float:
    """Discrete ``P^-`` (``sign='-'``) or ``P^+`` at one interior node.

    ``field`` is a :class:`Field` or a raw array of node values, in which case
    ``h`` must be given and ``time_index`` is ignored.
    """
    u, hh = _layer(field, time_index)
    h = hh if h is None else h
    idx = np.atleast_1d(space_index)
    if np.any(idx < 1) or np.any(idx > np.array(u.shape) - 2):
        raise IndexError("discrete operators need an interior node")
    window = u[tuple(slice(i - 1, i + 2) for i in idx)]
    return float(np.ravel(pucci_interior(window, h, e, sign))[0])


def upwind_gradient_norm(field, space_index, time_index: int, side,
                         h: Optional[float] = None) -> float:
    """Rouy-Tourin gradient norm at one interior node."""
    u, hh = _layer(field, time_index)
    h = hh if h is None else h
    idx = np.atleast_1d(space_index)
    if np.any(idx < 1) or np.any(idx > np.array(u.shape) - 2):
        raise IndexError("discrete operators need an interior node")
    window = u[tuple(slice(i - 1, i + 2) for i in idx)]
    return float(np.ravel(gradient_interior(window, h, Side.parse(side)))[0])


def max_discrete_gradient(u: np.ndarray, h: float) -> float:
    return float(max(np.max(np.abs(np.diff(u, axis=a))) for a in range(u.ndim)) / h)


# ---------------------------------------------------------------------------
# time step control
# ---------------------------------------------------------------------------

def cfl_dt(e: EllipticityPair, dim: int, h: float, lipschitz: float) -> float:
    return CFL_SAFETY / (4 * e.Lam * dim / h ** 2 + 2 * np.sqrt(dim) * lipschitz / h)


def scheme_coefficients(e: EllipticityPair, dim: int, h: float, dt: float,
                        lipschitz: float, central: bool = False) -> dict:
    """Worst-case coefficients of the explicit update.

    ``center`` is the smallest possible weight of ``u_i^m`` in ``u_i^{m+1}``,
    ``neighbor`` the smallest weight of any stencil neighbor. Both must be
    nonnegative for a monotone step.
    """
    # axis frame: 2 Lam / h^2 per axis; diagonal frame: Lam / h^2 per direction
    diffusion = 2 * e.Lam * dim / h ** 2
    if central:
        drift_center, neighbor = 0.0, e.lam / h ** 2 - lipschitz / (2 * h)
    else:
        drift_center, neighbor = np.sqrt(dim) * lipschitz / h, 0.0
    return {"center": 1 - dt * (diffusion + drift_center), "neighbor": dt * neighbor}


def _drift_lipschitz(spec: ProblemSpec, bound: float) -> float:
    if bound <= 0:
        bound = 1.0
    fn = spec.nonlinearity if spec.nonlinearity is not None else spec.phi
    return local_lipschitz(fn, bound)


def make_grid(spec: ProblemSpec, dim: int, radius: float, cells: int,
              t_start: float, t_end: float, save_interval: Optional[float] = None) -> Grid:
    """Grid with a CFL step built from the discrete gradient of the initial data."""
    h = 2.0 * radius / cells
    axis = np.linspace(-radius, radius, cells + 1)
    pts = np.stack(np.meshgrid(*([axis] * dim), indexing="ij"), axis=-1)
    g0 = max_discrete_gradient(np.asarray(spec.initial(pts), dtype=float), h)
    bound = 2 * g0
    lip = _drift_lipschitz(spec, bound)
    central = dim == 1 and h * lip <= PECLET_LIMIT * spec.ellipticity.lam
    dt = cfl_dt(spec.ellipticity, dim, h, lip)
    span = t_end - t_start
    if save_interval is None:
        save_interval = max(h * h, dt)
    layers = max(1, int(round(span / save_interval)))
    return Grid(dim, radius, cells, t_start, t_end, dt, layers, lip, bound, central)


# ---------------------------------------------------------------------------
# field
# ---------------------------------------------------------------------------

@dataclass
class Field:
    """Saved layers of a discrete solution.

    ``values`` has shape ``(layers + 1,) + grid.shape``: time comes first.
    Off-grid evaluation is multilinear in space and linear in time.
    """

    grid: Grid
    values: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        expected = (self.grid.layers + 1,) + self.grid.shape
        if self.values.shape != expected:
            raise ValueError(f"values have shape {self.values.shape}, expected {expected}")
        if not np.all(np.isfinite(self.values)):
            raise NonFiniteValue("field contains non-finite values")
        self._interp = None

    @property
    def dim(self) -> int:
        return self.grid.dim

    @property
    def times(self) -> np.ndarray:
        return self.grid.times

    @property
    def spacing(self) -> float:
        return self.grid.h

    @property
    def time_spacing(self) -> float:
        return (self.grid.t_end - self.grid.t_start) / self.grid.layers

    def space_nodes(self, axis: int = 0) -> np.ndarray:
        return self.grid.axis

    def time_nodes(self) -> np.ndarray:
        return self.times

    @property
    def space_bounds(self) -> tuple:
        return (-self.grid.radius, self.grid.radius)

    @property
    def time_bounds(self) -> tuple:
        return (self.grid.t_start, self.grid.t_end)

    def evaluate(self, x, t) -> np.ndarray:
        """Interpolate at spatial points ``x`` (shape ``(..., dim)``) and times ``t``."""
        x = np.asarray(x, dtype=float)
        t = np.broadcast_to(np.asarray(t, dtype=float), x.shape[:-1])
        if self._interp is None:
            axes = (self.times,) + (self.grid.axis,) * self.dim
            self._interp = RegularGridInterpolator(axes, self.values, method="linear",
                                                   bounds_error=True)
        pts = np.concatenate([t[..., None], x], axis=-1)
        lo = np.array([self.grid.t_start] + [-self.grid.radius] * self.dim)
        hi = np.array([self.grid.t_end] + [self.grid.radius] * self.dim)
        slack = 1e-12 * np.maximum(1.0, np.abs(hi - lo))
        if np.any(pts < lo - slack) or np.any(pts > hi + slack):
            raise ValueError("evaluation point outside the field's domain")
        return self._interp(np.clip(pts, lo, hi))

    def to_rows(self) -> np.ndarray:
        """Long format ``(t, x1[, x2], value)`` rows."""
        pts = self.grid.points().reshape(-1, self.dim)
        rows = []
        for t, layer in zip(self.times, self.values):
            rows.append(np.column_stack([np.full(len(pts), t), pts, layer.reshape(-1)]))
        return np.vstack(rows)

    @classmethod
    def from_rows(cls, grid: Grid, rows: np.ndarray, meta: Optional[dict] = None) -> "Field":
        rows = np.asarray(rows, dtype=float)
        values = rows[:, -1].reshape((grid.layers + 1,) + grid.shape)
        return cls(grid, values, dict(meta or {}))


# ---------------------------------------------------------------------------
# time stepping
# ---------------------------------------------------------------------------

@dataclass
class _State:
    dt: float
    lipschitz: float
    gradient_bound: float
    central: bool
    steps: int = 0
    shrinks: int = 0


def step(u: np.ndarray, spec: ProblemSpec, h: float, dt: float, t_next: float,
         boundary_points: np.ndarray, lipschitz: float, central: bool = False,
         out_gradient: Optional[list] = None) -> np.ndarray:
    """One explicit Euler step; lateral values are overwritten from the data.

    Raises
    ------
    CflViolation
        If ``dt`` makes a coefficient of the update negative.
    """
    coeff = scheme_coefficients(spec.ellipticity, u.ndim, h, dt, lipschitz, central)
    if coeff["center"] < 0 or coeff["neighbor"] < 0:
        raise CflViolation(f"dt={dt:.3e} is not monotone for h={h:.3e}, L={lipschitz:.3e}")
    side = spec.side
    g = gradient_interior(u, h, side, central)
    if out_gradient is not None:
        out_gradient.append(float(np.max(g)) if g.size else 0.0)
    rate = pucci_interior(u, h, spec.ellipticity, side.sign)
    drift = spec.phi(g)
    rate = rate - drift if side is Side.SUPER else rate + drift
    new = u.copy()
    inner = tuple(slice(1, -1) for _ in range(u.ndim))
    new[inner] = u[inner] + dt * rate
    mask = _boundary_mask(u.shape)
    new[mask] = spec.boundary_values(boundary_points, t_next)
    return new


def monotonicity_certificate(spec: ProblemSpec, dim: int, h: float, trials: int,
                             rng: np.random.Generator, nodes: int = 5) -> dict:
    """Raise one stencil value of a random field and check the center update.

    Each trial draws ``u`` uniform in ``[0, 1]`` on ``nodes^dim`` points and a
    perturbation ``eps`` in ``(0, 1]`` of one node in the center's stencil
    (the center included). ``dt`` is the CFL step for the worst possible
    gradient of such fields. The certificate holds when the stepped center
    value never decreases beyond rounding.
    """
    g_max = 2.0 * np.sqrt(dim) / h
    lip = _drift_lipschitz(spec, 2 * g_max)
    central = dim == 1 and h * lip <= PECLET_LIMIT * spec.ellipticity.lam
    dt = cfl_dt(spec.ellipticity, dim, h, lip)
    shape = (nodes,) * dim
    mid = (nodes // 2,) * dim
    offsets = [o for o in np.ndindex(*(3,) * dim)]
    axis = h * (np.arange(nodes) - nodes // 2)
    pts = np.stack(np.meshgrid(*([axis] * dim), indexing="ij"), axis=-1)
    bpts = pts[_boundary_mask(shape)]
    worst = math.inf
    for _ in range(trials):
        u = rng.uniform(0.0, 1.0, shape)
        eps = rng.uniform(0.0, 1.0) or 1.0
        off = offsets[rng.integers(len(offsets))]
        v = u.copy()
        v[tuple(m + o - 1 for m, o in zip(mid, off))] += eps
        a = step(u, spec, h, dt, 0.0, bpts, lip, central)[mid]
        b = step(v, spec, h, dt, 0.0, bpts, lip, central)[mid]
        worst = min(worst, float(b - a))
    tol = 1e-13
    return {"trials": trials, "dt": dt, "lipschitz": lip, "central": central,
            "worst_change": worst, "passed": bool(worst >= -tol)}


def _boundary_mask(shape) -> np.ndarray:
    mask = np.ones(shape, dtype=bool)
    mask[tuple(slice(1, -1) for _ in shape)] = False
    return mask


def solve(spec: ProblemSpec, grid: Grid, check_data: bool = True) -> Field:
    """Run the scheme from ``t_start`` to ``t_end`` and return the saved layers.

    Each saved interval is split into equal substeps of length at most the
    current admissible ``dt``. When the running gradient exceeds the bound
    ``dt`` was built from, the bound is doubled, ``dt`` shrinks (it never
    grows), and the 1D centered gradient is abandoned if it no longer
    satisfies its cell-Peclet condition.

    Raises
    ------
    CflViolation
        For manually built grids whose ``dt`` is too large.
    NonFiniteValue
        If the iterate leaves the finite range.
    """
    if check_data:
        check_continuity(spec.initial, grid.dim, grid.radius)
    pts = grid.points()
    bpts = pts[_boundary_mask(grid.shape)]
    u = np.asarray(spec.initial(pts), dtype=float).copy()
    u[_boundary_mask(grid.shape)] = spec.boundary_values(bpts, grid.t_start)
    st = _State(grid.dt, grid.lipschitz, grid.gradient_bound, grid.central)
    if st.central and grid.h * st.lipschitz > PECLET_LIMIT * spec.ellipticity.lam:
        st.central = False
    times = grid.times
    out = np.empty((grid.layers + 1,) + grid.shape)
    out[0] = u
    umax, umin = float(np.max(u)), float(np.min(u))
    for j in range(grid.layers):
        t, t_end = times[j], times[j + 1]
        while t < t_end:
            n = int(np.ceil((t_end - t) / st.dt * (1 - 1e-12)))
            sub = (t_end - t) / max(n, 1)
            grads: list = []
            t_next = t_end if n <= 1 else t + sub
            u = step(u, spec, grid.h, sub, t_next, bpts, st.lipschitz, st.central, grads)
            st.steps += 1
            t = t_next
            if not np.all(np.isfinite(u)):
                raise NonFiniteValue(f"non-finite values at t={t:.6g}")
            if grads and grads[0] > st.gradient_bound:
                _shrink(st, spec, grid, grads[0])
        out[j + 1] = u
        umax, umin = max(umax, float(np.max(u))), min(umin, float(np.min(u)))
    meta = {"steps": st.steps, "dt_final": st.dt, "dt_shrinks": st.shrinks,
            "lipschitz_final": st.lipschitz, "central_gradient": st.central,
            "max": umax, "min": umin}
    return Field(replace(grid, dt=st.dt), out, meta)


def _shrink(st: _State, spec: ProblemSpec, grid: Grid, g: float) -> None:
    st.gradient_bound = 2 * g
    lip = _drift_lipschitz(spec, st.gradient_bound)
    st.lipschitz = max(st.lipschitz, lip)
    if st.central and grid.h * st.lipschitz > PECLET_LIMIT * spec.ellipticity.lam:
        st.central = False
    dt = cfl_dt(spec.ellipticity, grid.dim, grid.h, st.lipschitz)
    if dt < st.dt:
        st.dt = dt
        st.shrinks += 1


def grid_from_dict(d: dict) -> Grid:
    keys = ("dim", "radius", "cells", "t_start", "t_end", "dt", "layers",
            "lipschitz", "gradient_bound", "central")
    return Grid(**{k: d[k] for k in keys if k in d})


def load_field(manifest_path: str) -> Field:
    """Read a field written by :func:`extremal_harnack.report.write_field`."""
    import os
    with open(manifest_path) as fh:
        manifest = json.load(fh)
    grid = grid_from_dict(manifest["grid"])
    csv_path = os.path.join(os.path.dirname(os.path.abspath(manifest_path)), manifest["csv"])
    rows = np.loadtxt(csv_path, delimiter=",", skiprows=1, ndmin=2)
    return Field.from_rows(grid, rows, manifest.get("meta"))
