"""Numerical probes of the intrinsic and global Harnack estimates.

All probes work on *field-like* objects: anything with ``dim``,
``evaluate(x, t)``, ``space_bounds``, ``time_bounds``, a sampling rule
``samples(lo, hi, axis)`` and a resolution ``resolution(axis)``, where
``axis`` is a spatial index or ``"t"``. :class:`~extremal_harnack.solver.Field`
gets these through :class:`GridField`.

Extremes over a box are taken over the tensor product of per-axis sample
coordinates. For a grid field these are the grid lines crossing the box plus
the box faces. The multilinear interpolant attains its extremes over the
closed box at exactly these points, so the values are exact. Open and closed
faces give the same sup and inf for a continuous interpolant.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field as dc_field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import (ChainEscapesDomain, DegenerateBase, GridTooCoarse,
                     NoAdmissibleBase)
from .geometry import (Box, ParabolicCube, WaitingSetMinus, WaitingSetPlus,
                       forward_radius_limit, intrinsic_scale)
from .nonlinearity import (Nonlinearity, harnack_integral, osgood_classify,
                           reciprocal_integral, scaling_radius)
from .parallel import max_workers
from .solver import Field

DEGENERATE_BASE = 1e-14
MIN_CELLS = 3
DEFAULT_C_GRID = tuple(2.0 ** (j / 2) for j in range(17))
BASE_LATTICE = 5


# ---------------------------------------------------------------------------
# field adapters
# ---------------------------------------------------------------------------

def _merge(nodes: np.ndarray, lo: float, hi: float) -> np.ndarray:
    inner = nodes[(nodes > lo) & (nodes < hi)]
    return np.unique(np.concatenate([[lo], inner, [hi]]))


class GridField:
    """Adapter giving a solver :class:`Field` the probe interface."""

    def __init__(self, f: Field):
        self.field = f
        self.dim = f.dim
        self.space_bounds = f.space_bounds
        self.time_bounds = f.time_bounds

    def evaluate(self, x, t):
        return self.field.evaluate(x, t)

    def samples(self, lo: float, hi: float, axis) -> np.ndarray:
        nodes = self.field.times if axis == "t" else self.field.grid.axis
        return _merge(nodes, lo, hi)

    def resolution(self, axis) -> float:
        return self.field.time_spacing if axis == "t" else self.field.spacing

    def metadata(self) -> dict:
        return {"kind": "grid", **self.field.grid.to_dict()}


class AnalyticField:
    """Closed-form field ``func(x, t)`` sampled on ``samples`` points per axis.

    ``resolution`` is a nominal spacing used only by the coarseness checks.
    """

    def __init__(self, func: Callable, dim: int = 1, space_bounds=(-2.0, 2.0),
                 time_bounds=(-4.0, 0.0), samples: int = 33, resolution: float = 1e-6,
                 name: str = "analytic"):
        if samples < 3 or samples % 2 == 0:
            raise ValueError("samples must be odd and at least 3")
        self.func = func
        self.dim = dim
        self.space_bounds = tuple(map(float, space_bounds))
        self.time_bounds = tuple(map(float, time_bounds))
        self.n_samples = samples
        self.nominal = resolution
        self.name = name

    def evaluate(self, x, t):
        x = np.asarray(x, dtype=float)
        t = np.broadcast_to(np.asarray(t, dtype=float), x.shape[:-1])
        return np.asarray(self.func(x, t), dtype=float) * np.ones(x.shape[:-1])

    def samples(self, lo: float, hi: float, axis) -> np.ndarray:
        return np.linspace(lo, hi, self.n_samples)

    def resolution(self, axis) -> float:
        return self.nominal if axis != "t" else self.nominal ** 2

    def metadata(self) -> dict:
        return {"kind": "analytic", "name": self.name, "dim": self.dim,
                "samples": self.n_samples, "resolution": self.nominal,
                "space_bounds": list(self.space_bounds), "time_bounds": list(self.time_bounds)}


class RescaledField:
    """``v(y, s) = u(r y + x_s, r^2 s + t_s) / A`` for a field-like ``u``.

    Sample coordinates are the images of the base field's, so probing ``v``
    visits the same underlying points as probing ``u``.
    """

    def __init__(self, base, r: float, x_shift=0.0, t_shift: float = 0.0, A: float = 1.0):
        if not (r > 0 and A > 0):
            raise ValueError("r and A must be positive")
        self.base, self.r, self.A = base, float(r), float(A)
        self.x_shift = np.broadcast_to(np.asarray(x_shift, dtype=float), (base.dim,)).copy()
        self.t_shift = float(t_shift)
        self.dim = base.dim
        lo, hi = base.space_bounds
        # cube bounds must stay shared across axes
        if not np.allclose(self.x_shift, self.x_shift[0]):
            raise ValueError("x_shift must be equal on all axes")
        xs = self.x_shift[0]
        self.space_bounds = ((lo - xs) / r, (hi - xs) / r)
        tl, th = base.time_bounds
        self.time_bounds = ((tl - t_shift) / r ** 2, (th - t_shift) / r ** 2)

    def to_base(self, y, s):
        y = np.asarray(y, dtype=float)
        return self.r * y + self.x_shift, self.r ** 2 * np.asarray(s, dtype=float) + self.t_shift

    def evaluate(self, y, s):
        x, t = self.to_base(y, s)
        return self.base.evaluate(x, t) / self.A

    def samples(self, lo: float, hi: float, axis) -> np.ndarray:
        if axis == "t":
            m = lambda v: self.r ** 2 * v + self.t_shift  # noqa: E731
            inv = lambda v: (v - self.t_shift) / self.r ** 2  # noqa: E731
        else:
            xs = self.x_shift[axis]
            m = lambda v: self.r * v + xs  # noqa: E731
            inv = lambda v: (v - xs) / self.r  # noqa: E731
        inner = inv(self.base.samples(m(lo), m(hi), axis))
        return _merge(inner, lo, hi)

    def resolution(self, axis) -> float:
        scale = self.r ** 2 if axis == "t" else self.r
        return self.base.resolution(axis) / scale

    def metadata(self) -> dict:
        return {"kind": "rescaled", "r": self.r, "A": self.A,
                "x_shift": self.x_shift.tolist(), "t_shift": self.t_shift,
                "base": self.base.metadata()}


def as_probe_field(f):
    return GridField(f) if isinstance(f, Field) else f


def analytic_field(ident: str, dim: int = 1, **kw) -> AnalyticField:
    """``constant:<v>``, ``affine:<v>`` (``v + x_1``) or ``sqrt-abs`` (``|x_1|^(1/2)``)."""
    if ident.startswith("constant:"):
        v = float(ident.split(":", 1)[1])
        return AnalyticField(lambda x, t: np.full(x.shape[:-1], v), dim, name=ident, **kw)
    if ident.startswith("affine:"):
        v = float(ident.split(":", 1)[1])
        return AnalyticField(lambda x, t: v + x[..., 0], dim, name=ident, **kw)
    if ident == "sqrt-abs":
        return AnalyticField(lambda x, t: np.sqrt(np.abs(x[..., 0])), dim, name=ident, **kw)
    raise ValueError(f"unknown analytic field {ident!r}")


# ---------------------------------------------------------------------------
# set sampling
# ---------------------------------------------------------------------------

def domain_box(f) -> Box:
    lo, hi = f.space_bounds
    return Box((lo,) * f.dim, (hi,) * f.dim, True, f.time_bounds[0], f.time_bounds[1],
               True, True)


def domain_cube(f) -> ParabolicCube:
    """Largest parabolic cube with spatial center 0 and top at the final time."""
    lo, hi = f.space_bounds
    center = 0.5 * (lo + hi)
    radius = min(0.5 * (hi - lo), math.sqrt(f.time_bounds[1] - f.time_bounds[0]))
    return ParabolicCube((center,) * f.dim, f.time_bounds[1], radius)


def resolved(f, box: Box) -> bool:
    widths, tw = box.widths()
    if any(w < MIN_CELLS * f.resolution(i) for i, w in enumerate(widths)):
        return False
    return tw >= MIN_CELLS * f.resolution("t")


def box_samples(f, box: Box) -> tuple:
    """Tensor-product sample points of ``box``: ``(x, t)`` arrays."""
    axes = [f.samples(box.lo[i], box.hi[i], i) for i in range(box.dim)]
    ts = f.samples(box.t_lo, box.t_hi, "t")
    mesh = np.meshgrid(ts, *axes, indexing="ij")
    t = mesh[0].ravel()
    x = np.stack([m.ravel() for m in mesh[1:]], axis=-1)
    return x, t


def extremes(f, box: Box, require_resolved: bool = True) -> tuple:
    """``(inf, sup)`` of the field over the closure of ``box``.

    Raises
    ------
    GridTooCoarse
        If ``require_resolved`` and the box is narrower than three grid
        spacings on some axis.
    """
    if not box.within(domain_box(f)):
        raise ValueError("set leaves the field's domain")
    if require_resolved and not resolved(f, box):
        raise GridTooCoarse(f"set {box} is resolved by fewer than {MIN_CELLS} cells")
    x, t = box_samples(f, box)
    v = f.evaluate(x, t)
    return float(np.min(v)), float(np.max(v))


def ball_values(f, r: float, t: float) -> np.ndarray:
    """Field values on the closed Euclidean ball ``B_r`` at time ``t``."""
    if f.dim == 1:
        xs = f.samples(-r, r, 0)[:, None]
    else:
        lo, hi = -r, r
        ax = [f.samples(lo, hi, i) for i in range(f.dim)]
        mesh = np.stack(np.meshgrid(*ax, indexing="ij"), axis=-1).reshape(-1, f.dim)
        inside = mesh[np.sum(mesh ** 2, axis=-1) <= r * r]
        res = max(f.resolution(0), 1e-3 * r)
        n = max(16, int(math.ceil(2 * math.pi * r / res)))
        ang = np.linspace(0, 2 * math.pi, n, endpoint=False)
        circle = r * np.stack([np.cos(ang), np.sin(ang)], axis=-1)
        xs = np.vstack([inside, circle])
    return f.evaluate(xs, np.full(len(xs), t))


# ---------------------------------------------------------------------------
# intrinsic Harnack probes
# ---------------------------------------------------------------------------

@dataclass
class ProbeReport:
    kind: str
    records: list
    c_star: Optional[float]
    c_refined: Optional[float]
    cn: float
    c_grid: list
    passed: bool
    reason: str
    field_meta: dict = dc_field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "c_star": self.c_star, "c_refined": self.c_refined,
                "cn": self.cn, "c_grid": list(self.c_grid), "passed": self.passed,
                "reason": self.reason, "field": self.field_meta,
                "records": self.records}


def _base_value(f, x0, t0) -> float:
    return float(f.evaluate(np.asarray(x0, dtype=float)[None], np.array([t0]))[0])


def _backward_record(f, nl, C, cn, x0, t0, u0):
    a0 = intrinsic_scale(nl, u0, C)
    box = WaitingSetMinus(cn, f.dim, x0, t0, a0).box()
    rec = {"C": C, "base": list(map(float, x0)) + [float(t0)], "u": u0, "alpha0": a0,
           "rho": a0}
    if not box.within(domain_box(f)):
        rec.update(status="outside")
        return rec
    if not resolved(f, box):
        rec.update(status="unresolved")
        return rec
    _, sup = extremes(f, box)
    rec.update(status="ok", sup=sup, ratio=sup / u0, pass_=bool(sup <= C * u0))
    return rec


def backward_probe(f, nl: Nonlinearity, c_grid: Sequence[float] = DEFAULT_C_GRID,
                   cn: float = 1.0, base=None, refine: bool = True) -> ProbeReport:
    """Smallest ``C`` with ``sup`` over the scaled ``A_1^-`` at most ``C u(x0, t0)``.

    The waiting set is ``{(x0 + a0 x, t0 + a0^2 t) : (x, t) in A_1^-}`` with
    ``a0 = 1 / (C (eta(u(x0, t0)) + 1))``; ``base`` defaults to the spatial
    center at the final time.

    Raises
    ------
    DegenerateBase
        If ``u(x0, t0) <= 1e-14``.
    """
    f = as_probe_field(f)
    if base is None:
        lo, hi = f.space_bounds
        base = ((0.5 * (lo + hi),) * f.dim, f.time_bounds[1])
    x0, t0 = tuple(map(float, np.atleast_1d(base[0]))), float(base[1])
    u0 = _base_value(f, x0, t0)
    if u0 <= DEGENERATE_BASE:
        raise DegenerateBase(f"u(base) = {u0:.3e}")
    records, c_star, reason, last_fail = [], None, "no C in the grid passes", None
    for C in sorted(c_grid):
        rec = _backward_record(f, nl, C, cn, x0, t0, u0)
        records.append(_clean(rec))
        if rec["status"] != "ok":
            reason = f"waiting set {rec['status']} at C={C:g}"
            break
        if rec["pass_"]:
            c_star, reason = C, "ok"
            break
        last_fail = C
    c_ref = None
    if refine and c_star is not None:
        c_ref = _bisect(lambda C: _ok(_backward_record(f, nl, C, cn, x0, t0, u0)),
                        last_fail, c_star)
    return ProbeReport("backward", records, c_star, c_ref, cn, sorted(c_grid),
                       c_star is not None, reason, f.metadata())


def _ok(rec) -> Optional[bool]:
    return rec.get("pass_") if rec["status"] == "ok" else None


def _bisect(passes: Callable, lo: Optional[float], hi: float, iters: int = 30) -> float:
    """Smallest passing ``C`` in ``(lo, hi]`` assuming a single crossing."""
    if lo is None:
        return hi
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if passes(mid):
            hi = mid
        else:
            lo = mid
    return hi


def _clean(rec: dict) -> dict:
    out = dict(rec)
    if "pass_" in out:
        out["pass"] = out.pop("pass_")
    return out


def default_base_points(f, lattice: int = BASE_LATTICE) -> list:
    """``lattice^(dim+1)`` points over the central half of the domain cube."""
    cube = domain_cube(f)
    R, top = cube.radius, cube.t0
    xs = [np.linspace(c - R / 2, c + R / 2, lattice) for c in cube.center]
    ts = np.linspace(top - 0.75 * R * R, top - 0.25 * R * R, lattice)
    mesh = np.meshgrid(*xs, ts, indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=-1)
    return [(tuple(p[:-1]), float(p[-1])) for p in pts]


def _forward_record(f, nl, C, cn, cube, x0, t0, rho_override):
    u0 = _base_value(f, x0, t0)
    rec = {"C": C, "base": list(x0) + [t0], "u": u0}
    if u0 <= DEGENERATE_BASE:
        rec.update(status="degenerate")
        return rec
    limit = forward_radius_limit(cube, x0, t0, cn)
    if limit <= 0:
        rec.update(status="inadmissible")
        return rec
    a0 = intrinsic_scale(nl, u0, C)
    rho = min(a0, limit) if rho_override is None else float(rho_override)
    rec.update(alpha0=a0, rho=rho)
    if rho_override is not None and rho > limit * (1 + 1e-12):
        rec.update(status="inadmissible")
        return rec
    box = WaitingSetPlus(x0, t0, rho, cn).box()
    if not resolved(f, box):
        rec.update(status="unresolved")
        return rec
    inf, _ = extremes(f, box)
    rec.update(status="ok", inf=inf, ratio=u0 / inf if inf > 0 else math.inf,
               pass_=bool(u0 <= C * inf))
    return rec


def _forward_scan(f, nl, C, cn, cube, bases, rho):
    with ThreadPoolExecutor(max_workers()) as pool:
        recs = list(pool.map(lambda b: _forward_record(f, nl, C, cn, cube, b[0], b[1], rho),
                             bases))
    return recs


def _forward_verdict(recs) -> Optional[bool]:
    ok = [r for r in recs if r["status"] == "ok"]
    if any(r["status"] == "unresolved" for r in recs) or not ok:
        return None
    return all(r["pass_"] for r in ok)


def forward_probe(f, nl: Nonlinearity, c_grid: Sequence[float] = DEFAULT_C_GRID,
                  cn: float = 1.0, base_points=None, rho: Optional[float] = None,
                  refine: bool = True) -> ProbeReport:
    """Smallest ``C`` with ``u(x0, t0) <= C inf`` over ``A^+_rho(x0, t0)`` at every base.

    ``rho = min(alpha0(C), limit)``, where ``limit`` is the largest radius with
    ``Q_{2 rho}`` and ``A^+_rho`` inside the field's domain cube. Passing
    ``rho`` fixes the radius for every candidate.

    Raises
    ------
    NoAdmissibleBase
        If no base point admits a positive radius with a positive base value.
    """
    f = as_probe_field(f)
    cube = domain_cube(f)
    bases = default_base_points(f) if base_points is None else [
        (tuple(map(float, np.atleast_1d(b[0]))), float(b[1])) for b in base_points]
    records, c_star, reason, last_fail = [], None, "no C in the grid passes", None
    grid = sorted(c_grid)
    for C in grid:
        recs = _forward_scan(f, nl, C, cn, cube, bases, rho)
        if not any(r["status"] in ("ok", "unresolved") for r in recs):
            raise NoAdmissibleBase("no base point admits the forward waiting set")
        records.extend(_clean(r) for r in recs)
        verdict = _forward_verdict(recs)
        if verdict is None:
            reason = f"waiting sets unresolved at C={C:g}"
            break
        if verdict:
            c_star, reason = C, "ok"
            break
        last_fail = C
    c_ref = None
    if refine and c_star is not None:
        c_ref = _bisect(lambda C: _forward_verdict(_forward_scan(f, nl, C, cn, cube, bases, rho)),
                        last_fail, c_star)
    return ProbeReport("forward", records, c_star, c_ref, cn, grid,
                       c_star is not None, reason, f.metadata())


# ---------------------------------------------------------------------------
# oscillation decay
# ---------------------------------------------------------------------------

@dataclass
class HolderReport:
    C: float
    cn: float
    delta: float
    omega0: float
    factor: float
    rhos: list
    oscs: list
    flags: list
    alpha_hat: Optional[float]
    alpha_formula: float
    passed: bool
    note: str

    def to_dict(self) -> dict:
        return {"C": self.C, "cn": self.cn, "delta": self.delta, "omega0": self.omega0,
                "factor": self.factor, "rho": self.rhos, "osc": self.oscs,
                "flags": self.flags, "alpha_hat": self.alpha_hat,
                "alpha_formula": self.alpha_formula, "passed": self.passed,
                "note": self.note}


def holder_radii(nl: Nonlinearity, C: float, cn: float, omega0: float, count: int) -> list:
    """``rho_0 = 1`` and ``rho_k = factor^k r_{omega0/4}`` for ``k >= 1``."""
    delta = 1 - 1 / (4 * C)
    factor = scaling_radius(nl, delta, C) * cn / (4 * C * float(nl.eta_values(4.0)))
    r0 = scaling_radius(nl, omega0 / 4, C) if omega0 > 0 else 1.0
    return [1.0] + [factor ** k * r0 for k in range(1, count)]


def holder_estimate(f, nl: Nonlinearity, C: float, cn: float = 1.0, center=None,
                    max_levels: int = 12, require_fit: bool = False) -> HolderReport:
    """Oscillation over the nested cubes ``Q_{rho_k}`` against ``delta^k omega0``.

    Levels stop once ``rho_k`` drops below three grid spacings. The fitted
    exponent is the least-squares slope of ``log osc`` against ``log rho``
    over levels with positive oscillation.

    Raises
    ------
    GridTooCoarse
        If ``require_fit`` and fewer than three levels are resolved.
    """
    f = as_probe_field(f)
    if not C > 1:
        raise ValueError("C must exceed 1")
    if center is None:
        lo, hi = f.space_bounds
        center = ((0.5 * (lo + hi),) * f.dim, f.time_bounds[1])
    x0, t0 = tuple(map(float, np.atleast_1d(center[0]))), float(center[1])
    delta = 1 - 1 / (4 * C)
    factor = scaling_radius(nl, delta, C) * cn / (4 * C * float(nl.eta_values(4.0)))
    alpha = min(0.5, math.log(delta) / math.log(factor))
    q1 = ParabolicCube(x0, t0, 1.0).box()
    inf0, sup0 = extremes(f, q1, require_resolved=False)
    omega0 = sup0 - inf0
    rhos = holder_radii(nl, C, cn, omega0, max_levels)
    h = f.resolution(0)
    usable = [r for r in rhos if r >= MIN_CELLS * h and r * r >= MIN_CELLS * f.resolution("t")]
    # radii decrease, so usable is a prefix
    usable = rhos[:len(usable)]
    if require_fit and len(usable) < 3:
        raise GridTooCoarse(f"only {len(usable)} oscillation levels are resolved")
    # nested sample unions: smallest cube first, carrying running extremes
    oscs = [0.0] * len(usable)
    run_inf, run_sup = math.inf, -math.inf
    for k in reversed(range(len(usable))):
        box = ParabolicCube(x0, t0, usable[k]).box()
        lo_k, hi_k = extremes(f, box, require_resolved=False)
        run_inf, run_sup = min(run_inf, lo_k), max(run_sup, hi_k)
        oscs[k] = run_sup - run_inf
    flags = [bool(o <= delta ** k * omega0 * (1 + 1e-12) + 1e-300) for k, o in enumerate(oscs)]
    pos = [(r, o) for r, o in zip(usable, oscs) if o > 0]
    alpha_hat = None
    note = "ok"
    if len(pos) >= 2:
        lr, lo_ = np.log([p[0] for p in pos]), np.log([p[1] for p in pos])
        alpha_hat = float(np.polyfit(lr, lo_, 1)[0])
    elif omega0 == 0:
        note = "zero oscillation: exponent undefined"
    else:
        note = "fewer than two levels with positive oscillation"
    return HolderReport(C, cn, delta, omega0, factor, usable, oscs, flags, alpha_hat, alpha,
                        all(flags), note)


# ---------------------------------------------------------------------------
# global chain
# ---------------------------------------------------------------------------

@dataclass
class ChainReport:
    direction: str
    C: float
    cn: float
    u0: float
    radii: list
    times: list
    rhos: list
    levels: list
    K: int
    t_K: float
    integral: float
    majorant: float
    majorization_ok: bool
    chain_ratio: float
    c_tilde: float
    analytic_bound: float
    time_ok: bool
    well_formed: bool
    passed: bool

    def to_dict(self) -> dict:
        return {"direction": self.direction, "C": self.C, "cn": self.cn, "u0": self.u0,
                "r": self.radii, "t": self.times, "rho": self.rhos, "M": self.levels,
                "K": self.K, "t_K": self.t_K, "abs_t_K": abs(self.t_K),
                "integral": self.integral, "majorant": self.majorant,
                "majorization_ok": self.majorization_ok, "chain_ratio": self.chain_ratio,
                "c_tilde": self.c_tilde, "analytic_bound": self.analytic_bound,
                "time_ok": self.time_ok, "well_formed": self.well_formed,
                "passed": self.passed}


def global_chain(f, nl: Nonlinearity, C: float, cn: float = 1.0,
                 direction: str = "forward", max_steps: int = 100_000) -> ChainReport:
    """Iterate the radii, time levels and running extremes up to ``r_K >= 1``.

    ``forward`` walks into the past from ``(0, 0)``, taking sups on the
    growing balls (``t_i < 0``). ``backward`` is its time mirror. It walks into
    the future with ``t_i > 0`` and running infima ``m_i``, and integrates
    ``1/phi`` from ``m_K`` up to ``u(0, 0)``.

    The majorant of ``int ds/(phi(s) + s)`` is ``sum (C_meas - 1)/(eta(M_i) + 1)``
    over ``i < K``, with ``C_meas`` the largest step ratio. In the mirrored chain
    ``eta`` is evaluated at the lower end ``m_{i+1}``.

    Raises
    ------
    ChainEscapesDomain
        If a ball or time level leaves the field's domain.
    """
    f = as_probe_field(f)
    if direction not in ("forward", "backward"):
        raise ValueError("direction must be 'forward' or 'backward'")
    back = direction == "backward"
    x0 = np.zeros(f.dim)
    u0 = _base_value(f, x0, 0.0)
    if u0 <= 0:
        raise DegenerateBase("the chain needs u(0, 0) > 0")
    eta = lambda s: float(nl.eta_values(s))  # noqa: E731
    sgn = 1.0 if back else -1.0
    radii, times, rhos, levels = [0.0], [0.0], [], [u0]
    r, t, M = 0.0, 0.0, u0
    while r < 1:
        if len(rhos) >= max_steps:
            raise RuntimeError("chain did not reach r >= 1")
        rho = 1 / (C * (eta(M) + 1))
        r = r + rho * cn / 2
        t = t + sgn * (1 - cn * cn / 4) * rho * rho
        lo, hi = f.space_bounds
        tl, th = f.time_bounds
        if r > min(-lo, hi) or not (tl <= t <= th):
            raise ChainEscapesDomain(f"chain reached r={r:.4g}, t={t:.4g}")
        vals = ball_values(f, r, t)
        if back:
            M = min(M, float(np.min(vals)))
        else:
            M = max(M, float(np.max(vals)))
        rhos.append(rho)
        radii.append(r)
        times.append(t)
        levels.append(M)
    K = len(rhos)
    t_K = times[-1]
    lo_M, hi_M = (levels[-1], u0) if back else (u0, levels[-1])
    if lo_M <= 0:
        integral = math.inf
        plus = math.inf
    else:
        integral = harnack_integral(nl, lo_M, hi_M) if hi_M > lo_M else 0.0
        plus = (reciprocal_integral(lambda s: nl.phi(s) + s, lo_M, hi_M)
                if hi_M > lo_M else 0.0)
    if back:
        ratios = [levels[i] / levels[i + 1] if levels[i + 1] > 0 else math.inf
                  for i in range(K)]
        ends = levels[1:]
    else:
        ratios = [levels[i + 1] / levels[i] for i in range(K)]
        ends = levels[:-1]
    c_meas = max(ratios) if ratios else 1.0
    if math.isfinite(c_meas):
        majorant = sum((c_meas - 1) / (eta(m) + 1) for m in ends) if c_meas > 1 else 0.0
    else:
        majorant = math.inf
    maj_ok = bool(plus <= majorant * (1 + 1e-9) + 1e-15) if math.isfinite(plus) else False
    abs_t = abs(t_K)
    c_tilde = max(1.0, integral, 1 / (abs_t * (eta(u0) + 1) ** 2))
    # int ds/phi <= 2 int ds/(phi + s) <= 2 (C_meas - 1) C (2/cn) r_K
    bound = 2 * (c_meas - 1) * C * (2 / cn) * radii[-1]
    time_ok = bool(0 < abs_t <= 1)
    inc = all(b > a for a, b in zip(radii, radii[1:]))
    mono_t = all((b > a) if back else (b < a) for a, b in zip(times, times[1:]))
    mono_m = all((b <= a) if back else (b >= a) for a, b in zip(levels, levels[1:]))
    well = inc and mono_t and mono_m and 1 <= radii[-1] <= 2
    if C >= 4 / cn:
        well = well and all(p <= cn / 4 for p in rhos) and abs_t <= radii[-1] / 2
    return ChainReport(direction, C, cn, u0, radii, times, rhos, levels, K, t_K, integral,
                       majorant, maj_ok, c_meas, c_tilde, bound, time_ok, well,
                       bool(maj_ok and time_ok and well and integral <= bound + 1e-12))


# ---------------------------------------------------------------------------
# minimum principle
# ---------------------------------------------------------------------------

@dataclass
class MinPrincipleReport:
    verdict: str
    osgood: str
    rows: list
    c_tilde_max: Optional[float]
    passed: bool

    def to_dict(self) -> dict:
        return {"verdict": self.verdict, "osgood": self.osgood, "rows": self.rows,
                "c_tilde_max": self.c_tilde_max, "passed": self.passed}


def minimum_principle_check(family: Sequence, nl: Nonlinearity, C: float = 2.0,
                            cn: float = 1.0) -> MinPrincipleReport:
    """Chain end values ``M_K(eps)`` and ``|t_K(eps)|`` along a family ``[(eps, field)]``.

    Passes when both are nonincreasing as ``eps`` decreases and every chain
    passes its own checks. Skipped (``NotApplicable``) unless ``phi`` is
    classified Osgood.
    """
    verdict = osgood_classify(nl).verdict
    if verdict != "Osgood":
        return MinPrincipleReport("NotApplicable", verdict, [], None, True)
    rows = []
    for eps, fld in sorted(family, key=lambda p: -p[0]):
        rep = global_chain(fld, nl, C, cn, "forward")
        rows.append({"eps": float(eps), "u0": rep.u0, "M_K": rep.levels[-1],
                     "abs_t_K": abs(rep.t_K), "K": rep.K, "integral": rep.integral,
                     "c_tilde": rep.c_tilde, "analytic_bound": rep.analytic_bound,
                     "chain_passed": rep.passed})
    m_ok = all(b["M_K"] <= a["M_K"] for a, b in zip(rows, rows[1:]))
    t_ok = all(b["abs_t_K"] <= a["abs_t_K"] for a, b in zip(rows, rows[1:]))
    c_max = max((r["c_tilde"] for r in rows), default=None)
    passed = bool(m_ok and t_ok and all(r["chain_passed"] for r in rows))
    return MinPrincipleReport("Checked", verdict, rows, c_max, passed)
