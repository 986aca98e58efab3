"""The explicit family ``u_k`` showing the Harnack integral can blow up.

For ``(x, z) in R^2 x R`` and ``q = 4/eps0``, ``r = k^(-eps0)``::

    u_k = |x|^(-q) / k                                 for |x| >= r
    u_k = A - B|x|^2 + C|x|^4 + D (z + 2) rho(|x|)      for |x| <  r

with coefficients chosen so that the two pieces glue in C^2.  Everything here
is closed form: value, gradient and Hessian, plus pointwise checks of
``|P^-_{1,q+1}(D^2 u_k)| <= |D u_k|^(1+eps0)`` on ball-masked grids.
"""

from __future__ import annotations

import logging
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import DomainError, MonotoneWarning, NotFound
from .nonlinearity import reciprocal_integral
from .parallel import max_workers
from .pucci import EllipticityPair, pucci_minus_batch

log = logging.getLogger(__name__)

DEFAULT_CUTOFF_SHAPE = 0.7
OUTER_RESIDUAL_TOL = 1e-12
SWEEP_KS = tuple(2 ** j for j in range(1, 61))


@dataclass(frozen=True)
class Cutoff:
    """Smooth nonincreasing cutoff on ``[0, r)``.

    ``rho = 1`` on ``[0, r/2]``, ``rho = 0`` on ``[0.95 r, r)`` and in between
    ``rho(s) = psi(1 - (s - r/2) / (0.45 r))`` with the logistic-type step
    ``psi(x) = f(x) / (f(x) + f(1-x))``, ``f(x) = exp(-shape / x)``.
    ``shape = 0.7`` keeps ``max |rho'|`` near ``3.38 / r``.
    """

    r: float
    shape: float = DEFAULT_CUTOFF_SHAPE

    @property
    def width(self) -> float:
        return 0.45 * self.r

    def _psi(self, x):
        a = self.shape
        x = np.asarray(x, dtype=float)
        inside = (x > 1e-6) & (x < 1 - 1e-6)
        xc = np.clip(x, 1e-6, 1 - 1e-6)
        s = a / (1 - xc) - a / xc
        ds = a / (1 - xc) ** 2 + a / xc ** 2
        d2s = 2 * a / (1 - xc) ** 3 - 2 * a / xc ** 3
        sig = 0.5 * (1 + np.tanh(0.5 * s))
        # sig * (1 - sig) without cancellation
        e = np.exp(-np.abs(s))
        w = e / (1 + e) ** 2
        p0 = np.where(x >= 1 - 1e-6, 1.0, np.where(x <= 1e-6, 0.0, sig))
        p1 = np.where(inside, w * ds, 0.0)
        p2 = np.where(inside, w * (1 - 2 * sig) * ds ** 2 + w * d2s, 0.0)
        return p0, p1, p2

    def __call__(self, s):
        return self.derivatives(s)[0]

    def derivatives(self, s):
        """``(rho, rho', rho'')`` at radii ``s``."""
        s = np.asarray(s, dtype=float)
        x = 1 - (s - 0.5 * self.r) / self.width
        p0, p1, p2 = self._psi(x)
        w = self.width
        return p0, -p1 / w, p2 / w ** 2


@dataclass(frozen=True)
class CounterexampleParams:
    eps0: float
    k: int
    q: float
    r: float
    coef_a: float
    coef_b: float
    coef_c: float
    coef_d: float
    cutoff: Cutoff = field(repr=False)

    @property
    def ellipticity(self) -> EllipticityPair:
        return EllipticityPair(1.0, self.q + 1.0)

    def to_dict(self) -> dict:
        return {"eps0": self.eps0, "k": self.k, "q": self.q, "r": self.r,
                "A": self.coef_a, "B": self.coef_b, "C": self.coef_c,
                "D": self.coef_d, "cutoff_shape": self.cutoff.shape}


def make_params(eps0: float, k: int, cutoff_shape: float = DEFAULT_CUTOFF_SHAPE
                ) -> CounterexampleParams:
    """Derived quantities of ``u_k``; rejects ``r = k^(-eps0) > 1/2``."""
    if not eps0 > 0:
        raise DomainError("eps0 must be positive")
    if int(k) != k or k < 1:
        raise DomainError("k must be a positive integer")
    k = int(k)
    q = 4.0 / eps0
    r = float(k) ** (-eps0)
    if r > 0.5:
        raise DomainError(f"r = k^-eps0 = {r:.4g} exceeds 1/2")
    rq = r ** (-q)
    return CounterexampleParams(
        eps0=eps0, k=k, q=q, r=r,
        coef_a=(8 + 6 * q + q * q) / (8 * k) * rq,
        coef_b=q * (q + 4) / (4 * k) * rq / r ** 2,
        coef_c=q * (q + 2) / (8 * k) * rq / r ** 4,
        coef_d=rq / k,
        cutoff=Cutoff(r, cutoff_shape),
    )


def evaluate(params: CounterexampleParams, points, branch: Optional[str] = None) -> tuple:
    """Value, gradient and Hessian of ``u_k`` at points ``(..., 3)`` = ``(x1, x2, z)``.

    ``branch`` forces the ``"inner"`` or ``"outer"`` formula regardless of
    ``|x|``; by default ``|x| >= r`` selects the outer one.
    """
    pts = np.asarray(points, dtype=float)
    x = pts[..., :2]
    z = pts[..., 2]
    s2 = np.sum(x * x, axis=-1)
    s = np.sqrt(s2)
    p = params
    q, k = p.q, p.k
    if branch is None:
        outer = s >= p.r
    elif branch in ("inner", "outer"):
        outer = np.full(s.shape, branch == "outer")
    else:
        raise ValueError("branch must be 'inner', 'outer' or None")

    value = np.empty(s.shape)
    grad = np.zeros(s.shape + (3,))
    hess = np.zeros(s.shape + (3, 3))
    eye2 = np.eye(2)
    xxT = x[..., :, None] * x[..., None, :]

    # outer: radial power
    so = np.where(outer, s, 1.0)
    value = np.where(outer, so ** (-q) / k, value)
    g_over_s = -q * so ** (-q - 2) / k
    curv = q * (q + 2) * so ** (-q - 4) / k
    hx_out = g_over_s[..., None, None] * eye2 + curv[..., None, None] * xxT
    gx_out = g_over_s[..., None] * x

    # inner: quartic plus cutoff term
    rho, d1, d2 = p.cutoff.derivatives(np.where(outer, 0.0, np.minimum(s, p.r)))
    zp2 = z + 2.0
    quart = p.coef_a - p.coef_b * s2 + p.coef_c * s2 * s2
    val_in = quart + p.coef_d * zp2 * rho
    q_over_s = -2 * p.coef_b + 4 * p.coef_c * s2
    s_safe = np.where(s > 0, s, 1.0)
    d1_over_s = np.where(s > 0, d1 / s_safe, 0.0)
    # (rho'' - rho'/s) / s^2 multiplies x x^T
    cut_curv = np.where(s > 0, (d2 - d1_over_s) / s_safe ** 2, 0.0)
    hx_in = ((q_over_s + p.coef_d * zp2 * d1_over_s)[..., None, None] * eye2
             + (8 * p.coef_c + p.coef_d * zp2 * cut_curv)[..., None, None] * xxT)
    gx_in = (q_over_s + p.coef_d * zp2 * d1_over_s)[..., None] * x
    hxz_in = (p.coef_d * d1_over_s)[..., None] * x

    value = np.where(outer, value, val_in)
    grad[..., :2] = np.where(outer[..., None], gx_out, gx_in)
    grad[..., 2] = np.where(outer, 0.0, p.coef_d * rho)
    hess[..., :2, :2] = np.where(outer[..., None, None], hx_out, hx_in)
    hxz = np.where(outer[..., None], 0.0, hxz_in)
    hess[..., :2, 2] = hxz
    hess[..., 2, :2] = hxz
    return value, grad, hess


def coefficient_residuals(params: CounterexampleParams) -> dict:
    """Relative gaps between the closed-form ``A, B, C`` and the C^2 gluing system.

    The system matches value, first and second radial derivative of
    ``A - B s^2 + C s^4`` with ``s^(-q)/k`` at ``s = r``; it is solved with
    ``numpy.linalg.solve`` after scaling the unknowns by powers of ``r``.
    """
    q, k, r = params.q, params.k, params.r
    # unknowns a = A r^q k, b = B r^(q+2) k, c = C r^(q+4) k
    M = np.array([[1.0, -1.0, 1.0], [0.0, -2.0, 4.0], [0.0, -2.0, 12.0]])
    rhs = np.array([1.0, -q, q * (q + 1)])
    a, b, c = np.linalg.solve(M, rhs)
    scale = [r ** (-q) / k, r ** (-q - 2) / k, r ** (-q - 4) / k]
    solved = [a * scale[0], b * scale[1], c * scale[2]]
    closed = [params.coef_a, params.coef_b, params.coef_c]
    out = {name: float(abs(x - y) / abs(y)) for name, x, y in zip("ABC", closed, solved)}
    out["D"] = abs(params.coef_d - r ** (-q) / k) / (r ** (-q) / k)
    return out


def interface_mismatch(params: CounterexampleParams, angles: int = 16,
                       zs=(-1.5, -0.5, 0.0, 0.5, 1.5)) -> dict:
    """Largest relative jump of value, gradient and Hessian across ``|x| = r``."""
    th = np.linspace(0.0, 2 * np.pi, angles, endpoint=False)
    pts = np.array([[params.r * np.cos(a), params.r * np.sin(a), z] for a in th for z in zs])
    vi, gi, hi = evaluate(params, pts, "inner")
    vo, go, ho = evaluate(params, pts, "outer")

    def rel(a, b):
        return float(np.max(np.linalg.norm(np.reshape(a - b, (len(pts), -1)), axis=-1)
                            / np.linalg.norm(np.reshape(b, (len(pts), -1)), axis=-1)))
    return {"value": rel(vi, vo), "gradient": rel(gi, go), "hessian": rel(hi, ho)}


def eval_point(params: CounterexampleParams, x, z: float):
    """Closed-form ``(value, gradient, Hessian)`` at a single point ``(x, z)``."""
    v, g, h = evaluate(params, np.array([x[0], x[1], z], dtype=float))
    return float(v), g, h


# ---------------------------------------------------------------------------
# grid checks
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GridSpec:
    """Tensor grid over ``[-2, 2]^3`` masked to the open ball ``B_2``.

    Each of the two ``x`` axes puts ``inner_share`` of its ``n`` nodes uniformly
    in ``[-r, r]`` and the rest geometrically in ``r <= |x_i| <= 2``; the ``z``
    axis is uniform.  A uniform box grid never resolves the inner ball once
    ``r`` drops below the spacing.
    """

    n: int = 64
    inner_share: float = 0.5
    radius: float = 2.0

    def axes(self, r: float):
        # odd inner count so that x = 0 (the minimum of |Du|) is a node
        m = max(1, int(round(self.n * self.inner_share / 2)))
        n_out = self.n - (2 * m + 1)
        inner = np.linspace(-r, r, 2 * m + 1)
        n_neg = n_out // 2
        n_pos = n_out - n_neg
        outer_pos = r * (self.radius / r) ** np.linspace(0.0, 1.0, n_pos + 1)[1:]
        outer_neg = -r * (self.radius / r) ** np.linspace(0.0, 1.0, n_neg + 1)[1:]
        x_axis = np.unique(np.concatenate([outer_neg, inner, outer_pos]))
        z_axis = np.linspace(-self.radius, self.radius, self.n)
        return x_axis, z_axis

    def points(self, r: float, radius: Optional[float] = None) -> np.ndarray:
        radius = self.radius if radius is None else radius
        x_axis, z_axis = self.axes(r)
        X1, X2, Z = np.meshgrid(x_axis, x_axis, z_axis, indexing="ij")
        pts = np.stack([X1.ravel(), X2.ravel(), Z.ravel()], axis=-1)
        mask = np.sum(pts * pts, axis=-1) < radius ** 2
        return pts[mask]


@dataclass
class InequalityReport:
    eps0: float
    k: int
    passed: bool
    min_margin: float
    argmin: list
    outer_max_residual: float
    outer_ok: bool
    n_points: int
    samples: Optional[np.ndarray] = field(default=None, repr=False)

    def to_dict(self) -> dict:
        return {"eps0": self.eps0, "k": self.k, "pass": self.passed,
                "min_margin": self.min_margin, "argmin": self.argmin,
                "outer_max_relative_residual": self.outer_max_residual,
                "outer_ok": self.outer_ok, "n_points": self.n_points}


def _chunks(n, size=65536):
    for start in range(0, n, size):
        yield slice(start, min(n, start + size))


def inequality_check(params: CounterexampleParams, grid: GridSpec = GridSpec(),
                     keep_samples: bool = False) -> InequalityReport:
    """Evaluate ``|Du|^(1+eps0) - |P^-(D^2 u)|`` on the ball-masked grid.

    Outer-region points must also satisfy ``|P^-| <= 1e-12 ||D^2 u||``.
    There ``P^-`` vanishes identically, so once that residual bound holds the
    rounding-level value is replaced by zero before forming the margin.
    """
    pts = grid.points(params.r)
    e = params.ellipticity
    margins = np.empty(len(pts))
    outer_res = 0.0
    for sl in _chunks(len(pts)):
        _, g, h = evaluate(params, pts[sl])
        pm = pucci_minus_batch(h, e)
        gnorm = np.linalg.norm(g, axis=-1)
        outer = np.sum(pts[sl, :2] ** 2, axis=-1) >= params.r ** 2
        apm = np.abs(pm)
        if np.any(outer):
            hn = np.linalg.norm(h[outer], axis=(-2, -1))
            res = apm[outer] / hn
            outer_res = max(outer_res, float(np.max(res)))
            apm[outer] = np.where(res <= OUTER_RESIDUAL_TOL, 0.0, apm[outer])
        margins[sl] = gnorm ** (1 + params.eps0) - apm
    i = int(np.argmin(margins))
    p = pts[i]
    outer_ok = outer_res <= OUTER_RESIDUAL_TOL
    samples = None
    if keep_samples:
        radial = np.hypot(pts[:, 0], pts[:, 1])
        samples = np.stack([radial, pts[:, 2], margins], axis=-1)
    return InequalityReport(
        eps0=params.eps0, k=params.k,
        passed=bool(margins[i] >= 0 and outer_ok),
        min_margin=float(margins[i]),
        argmin=[float(np.hypot(p[0], p[1])), float(p[2]), p.tolist()],
        outer_max_residual=outer_res, outer_ok=outer_ok,
        n_points=len(pts), samples=samples,
    )


@dataclass
class KSweep:
    eps0: float
    k_min: int
    passes: dict
    monotone: bool

    def to_dict(self) -> dict:
        return {"eps0": self.eps0, "k_min": self.k_min,
                "passes": {str(k): v for k, v in self.passes.items()},
                "monotone": self.monotone}


def _passes(eps0, k, grid):
    try:
        params = make_params(eps0, k)
    except DomainError:
        return None
    return inequality_check(params, grid).passed


def k_sweep(eps0: float, grid: GridSpec = GridSpec(), ks=SWEEP_KS) -> KSweep:
    """Smallest dyadic ``k`` whose grid check passes (inadmissible ``k`` count as failing)."""
    if not 0.25 <= eps0 <= 2:
        raise DomainError("eps0 must lie in [0.25, 2]")
    with ThreadPoolExecutor(max_workers=max_workers()) as pool:
        results = list(pool.map(lambda k: _passes(eps0, k, grid), ks))
    passes = dict(zip(ks, results))
    good = [k for k, ok in passes.items() if ok]
    if not good:
        raise NotFound(f"no k in {ks[0]}..{ks[-1]} passes for eps0={eps0}")
    k_min = min(good)
    monotone = all(passes[k] for k in ks if k >= k_min)
    if not monotone:
        warnings.warn(f"non-monotone pass pattern for eps0={eps0}: {passes}",
                      MonotoneWarning, stacklevel=2)
    return KSweep(eps0=eps0, k_min=k_min, passes=passes, monotone=monotone)


def min_valid_k(eps0: float, grid: GridSpec = GridSpec()) -> int:
    """Smallest ``k`` in the dyadic sweep ``{2, 4, ..., 2^60}`` passing :func:`inequality_check`."""
    return k_sweep(eps0, grid).k_min


@dataclass
class Blowup:
    inf_b1: float
    sup_b1: float
    integral: float
    lower_bound: float

    @property
    def ok(self) -> bool:
        return (self.sup_b1 > 1 and self.integral >= self.lower_bound - 1e-6)

    def to_dict(self) -> dict:
        return {"inf_B1": self.inf_b1, "sup_B1": self.sup_b1,
                "integral": self.integral, "half_log_k": self.lower_bound,
                "ok": self.ok}


def harnack_blowup(params: CounterexampleParams, grid: GridSpec = GridSpec()) -> Blowup:
    """``inf_{B_1} u_k = 1/k``, grid ``sup_{B_1} u_k`` and ``int ds/(s^(1+eps0)+s)``."""
    inf_b1 = 1.0 / params.k
    pts = grid.points(params.r, radius=1.0)
    sup_b1 = max(float(np.max(evaluate(params, pts[sl])[0])) for sl in _chunks(len(pts)))
    eps0 = params.eps0
    integral = reciprocal_integral(lambda s: s ** (1 + eps0) + s, inf_b1, sup_b1)
    return Blowup(inf_b1=inf_b1, sup_b1=sup_b1, integral=integral,
                  lower_bound=0.5 * math.log(params.k))
