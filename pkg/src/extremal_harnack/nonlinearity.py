"""Gradient nonlinearities ``phi(t) = eta(t) * t``.

A :class:`Nonlinearity` wraps a callable ``eta`` together with its
submultiplicativity constant ``lambda0``.  The module provides the
admissibility validators (monotone shape, slow variation, submultiplicativity),
an Osgood classifier, the Harnack integral ``int_m^M ds / phi(s)`` and the
intrinsic rescaling radius ``r_A = 1 / (L2 (eta(A) + 1))``.

Catalog members are addressable by string id::

    identity            eta = 1
    logpow:beta=<f>     eta = (1 + |log t|)^beta
    pow:eps=<f>         eta = max(t, 1)^eps
    root                eta = min(t, 1)^(-1/2)
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import EvaluationDomainError
from .quadrature import integrate_log

Array = np.ndarray

P2_TOLERANCE = 0.05
P2_EXPONENTS = tuple(range(1, 7))
HARNACK_RTOL = 1e-8
QUAD_BUDGET = 1_000_000
OSGOOD_LOWER_LIMITS = tuple(10.0 ** -j for j in range(2, 13, 2))


def _vectorized(fn: Callable, t) -> Array:
    t = np.asarray(t, dtype=float)
    try:
        out = np.asarray(fn(t), dtype=float)
        if out.shape != t.shape:
            out = np.broadcast_to(out, t.shape).astype(float)
    except (TypeError, ValueError):
        out = np.vectorize(lambda s: float(fn(float(s))), otypes=[float])(t)
    return out


@dataclass(frozen=True)
class Nonlinearity:
    """An admissible gradient growth ``phi(t) = eta(t) t``.

    Parameters
    ----------
    eta : callable
        ``eta: (0, inf) -> [1, inf)``; evaluated on numpy arrays when possible.
    lambda0 : float
        Constant with ``eta(st) <= lambda0 eta(s) eta(t)``.
    name : str
        Identifier (catalog id for catalog members).
    eta_derivative : callable, optional
        Analytic ``eta'``; a central difference is used when omitted.
    """

    eta: Callable
    lambda0: float = 1.0
    name: str = "custom"
    eta_derivative: Optional[Callable] = field(default=None, compare=False)

    def __post_init__(self):
        if not self.lambda0 > 0:
            raise ValueError("lambda0 must be positive")

    def eta_values(self, t) -> Array:
        t = np.asarray(t, dtype=float)
        if np.any(t <= 0):
            raise EvaluationDomainError("eta is only defined on (0, inf)")
        try:
            out = _vectorized(self.eta, t)
        except (ArithmeticError, ValueError) as exc:
            raise EvaluationDomainError(f"{self.name}: eta failed: {exc}") from exc
        if not np.all(np.isfinite(out)):
            bad = t[~np.isfinite(out)]
            raise EvaluationDomainError(f"{self.name}: eta not finite at t={bad[:3]}")
        return out

    def eta_prime(self, t) -> Array:
        t = np.asarray(t, dtype=float)
        if self.eta_derivative is not None:
            return _vectorized(self.eta_derivative, t)
        step = 1e-6 * t
        return (self.eta_values(t + step) - self.eta_values(t - step)) / (2 * step)

    def phi(self, t):
        """``eta(t) t`` for ``t > 0`` and ``0`` at ``t = 0``; array in, array out."""
        t_arr = np.asarray(t, dtype=float)
        if np.any(t_arr < 0):
            raise ValueError("phi is defined on [0, inf)")
        out = np.zeros_like(t_arr)
        pos = t_arr > 0
        if np.any(pos):
            out[pos] = self.eta_values(t_arr[pos]) * t_arr[pos]
        return out if out.ndim else float(out)

    def __call__(self, t):
        return self.phi(t)


def eval_phi(nl: Nonlinearity, t: float) -> float:
    """Return ``phi(t) = eta(t) t`` (``0`` at ``t = 0``)."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    return float(nl.phi(t))


# ---------------------------------------------------------------------------
# catalog
# ---------------------------------------------------------------------------

def identity() -> Nonlinearity:
    return Nonlinearity(eta=lambda t: np.ones_like(np.asarray(t, dtype=float)),
                        eta_derivative=lambda t: np.zeros_like(np.asarray(t, dtype=float)),
                        lambda0=1.0, name="identity")


def logpow(beta: float) -> Nonlinearity:
    # (1+|log st|) <= (1+|log s|)(1+|log t|), hence lambda0 = 1.
    if beta <= 0:
        raise ValueError("beta must be positive")

    def eta(t):
        return (1.0 + np.abs(np.log(t))) ** beta

    def deta(t):
        lt = np.log(t)
        return beta * (1.0 + np.abs(lt)) ** (beta - 1) * np.sign(lt) / t

    return Nonlinearity(eta=eta, eta_derivative=deta, lambda0=1.0,
                        name=f"logpow:beta={beta:g}")


def power(eps: float) -> Nonlinearity:
    if eps <= 0:
        raise ValueError("eps must be positive")

    def eta(t):
        return np.maximum(t, 1.0) ** eps

    def deta(t):
        t = np.asarray(t, dtype=float)
        return np.where(t > 1.0, eps * np.maximum(t, 1.0) ** (eps - 1), 0.0)

    return Nonlinearity(eta=eta, eta_derivative=deta, lambda0=1.0,
                        name=f"pow:eps={eps:g}")


def root() -> Nonlinearity:
    def eta(t):
        return np.minimum(t, 1.0) ** -0.5

    def deta(t):
        t = np.asarray(t, dtype=float)
        return np.where(t < 1.0, -0.5 * np.minimum(t, 1.0) ** -1.5, 0.0)

    return Nonlinearity(eta=eta, eta_derivative=deta, lambda0=1.0, name="root")


_PARAM_RE = re.compile(r"^(logpow|pow):(beta|eps)=([-+0-9.eE]+)$")


def from_id(ident: str) -> Nonlinearity:
    """Build a catalog member from its string id."""
    ident = ident.strip()
    if ident == "identity":
        return identity()
    if ident == "root":
        return root()
    m = _PARAM_RE.match(ident)
    if m:
        kind, key, value = m.groups()
        if (kind, key) == ("logpow", "beta"):
            return logpow(float(value))
        if (kind, key) == ("pow", "eps"):
            return power(float(value))
    raise ValueError(f"unknown nonlinearity id {ident!r}")


CATALOG_IDS = ("identity", "logpow:beta=1", "pow:eps=0.5", "root")


# ---------------------------------------------------------------------------
# validators
# ---------------------------------------------------------------------------

@dataclass
class ConditionReport:
    name: str
    p1_pass: bool
    p1_failures: list
    p2_sequence: list
    p2_verdict: str
    p3_sup_ratio: float
    lambda0: float
    p3_pass: bool

    @property
    def all_pass(self) -> bool:
        return self.p1_pass and self.p2_verdict == "pass" and self.p3_pass

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "P1": {"pass": self.p1_pass, "failures": list(self.p1_failures)},
            "P2": {"sequence": [float(q) for q in self.p2_sequence],
                   "exponents": list(P2_EXPONENTS), "verdict": self.p2_verdict},
            "P3": {"sup_ratio": float(self.p3_sup_ratio), "lambda0": self.lambda0,
                   "pass": self.p3_pass},
            "all_pass": self.all_pass,
        }


def default_sample_grid(points: int = 241) -> Array:
    return np.logspace(-6, 6, points)


def p2_sequence(nl: Nonlinearity) -> Array:
    t = 10.0 ** np.array(P2_EXPONENTS, dtype=float)
    eta = nl.eta_values(t)
    return t * nl.eta_prime(t) / eta * np.log(eta)


def p2_trend(q: Array, tol: float = P2_TOLERANCE) -> str:
    """Classify the slow-variation sequence as ``pass``, ``fail`` or ``inconclusive``.

    ``pass``: the tail is already below ``tol``, or the magnitudes decrease
    strictly at every sampled decade.  ``fail``: the magnitudes grow over the
    last three decades.  Anything else is inconclusive.
    """
    a = np.abs(np.asarray(q, dtype=float))
    if a[-1] <= tol and np.all(np.diff(a[-3:]) <= 1e-12):
        return "pass"
    if np.all(np.diff(a) < 0):
        return "pass"
    if np.all(np.diff(a[-3:]) > 0):
        return "fail"
    return "inconclusive"


def validate_conditions(nl: Nonlinearity, sample_grid=None) -> ConditionReport:
    """Check the shape, slow-variation and submultiplicativity conditions on samples."""
    t = np.sort(np.asarray(default_sample_grid() if sample_grid is None else sample_grid,
                          dtype=float))
    if t[0] > 1e-6 * (1 + 1e-12) or t[-1] < 1e6 * (1 - 1e-12):
        raise ValueError("sample grid must span at least [1e-6, 1e6]")
    if np.any(t <= 0):
        raise ValueError("sample grid must be positive")

    eta = nl.eta_values(t)
    phi = eta * t
    failures = []
    if np.any(eta < 1 - 1e-12):
        failures.append(f"eta < 1 at t={t[eta < 1 - 1e-12][:3].tolist()}")
    small, large = t < 1, t >= 1
    if np.any(np.diff(eta[small]) > 1e-12 * np.maximum(eta[small][1:], 1)):
        failures.append("eta increases on (0,1)")
    if np.any(np.diff(eta[large]) < -1e-12 * np.maximum(eta[large][1:], 1)):
        failures.append("eta decreases on [1,inf)")
    if np.any(phi < t * (1 - 1e-12)):
        failures.append("phi(t) < t")
    if np.any(np.diff(phi) <= 0):
        failures.append("phi not strictly increasing")

    q = p2_sequence(nl)
    ratio = eta[:, None] * eta[None, :]
    st = t[:, None] * t[None, :]
    sup_ratio = float(np.max(nl.eta_values(st) / ratio))

    return ConditionReport(
        name=nl.name,
        p1_pass=not failures,
        p1_failures=failures,
        p2_sequence=q.tolist(),
        p2_verdict=p2_trend(q),
        p3_sup_ratio=sup_ratio,
        lambda0=nl.lambda0,
        p3_pass=sup_ratio <= nl.lambda0 * (1 + 1e-12),
    )


def local_lipschitz(nl_or_phi, upper: float, lower: float = 0.0,
                    points: int = 4001, floor: float = 1e-12) -> float:
    """Sampled Lipschitz bound of ``phi`` on ``[lower, upper]``.

    Difference quotients are taken on a grid that is geometric near zero
    (down to ``floor * max(upper, 1)``) and uniform elsewhere.  Nonlinearities
    that are only locally Lipschitz on ``(0, inf)`` get a finite bound valid
    for arguments above the floor.
    """
    phi = nl_or_phi.phi if isinstance(nl_or_phi, Nonlinearity) else nl_or_phi
    upper = float(upper)
    if upper <= lower:
        upper = lower + 1.0
    lo = max(lower, floor * max(upper, 1.0))
    s = np.unique(np.concatenate([
        np.geomspace(lo, upper, points), np.linspace(lo, upper, points), [lower],
    ]))
    vals = np.asarray(_vectorized(phi, s), dtype=float)
    slopes = np.abs(np.diff(vals) / np.diff(s))
    return float(np.max(slopes))


# ---------------------------------------------------------------------------
# Osgood condition and Harnack integral
# ---------------------------------------------------------------------------

@dataclass
class OsgoodVerdict:
    verdict: str
    evidence: list
    slope: float
    decay_exponent: float

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "evidence": [[float(a), float(v)] for a, v in self.evidence],
            "slope": float(self.slope),
            "decay_exponent": float(self.decay_exponent),
        }


def reciprocal_integral(phi: Callable, m: float, M: float,
                        rtol: float = HARNACK_RTOL, budget: int = QUAD_BUDGET) -> float:
    """``int_m^M ds / phi(s)`` for ``0 < m``; negative when ``m > M``."""
    if m <= 0 or M <= 0:
        raise ValueError("limits must be positive")
    if m == M:
        return 0.0
    return integrate_log(lambda s: 1.0 / np.asarray(phi(s), dtype=float), m, M,
                         rtol=rtol, budget=budget)


def harnack_integral(nl: Nonlinearity, m: float, M: float) -> float:
    """``int_m^M ds / phi(s)`` with relative tolerance ``1e-8``."""
    if not 0 < m <= M:
        raise ValueError("need 0 < m <= M")
    return reciprocal_integral(nl.phi, m, M)


def osgood_classify(nl: Nonlinearity, slope_threshold: float = 1e-3,
                    increment_tol: float = 1e-6) -> OsgoodVerdict:
    """Decide whether ``int_0^1 ds / phi(s)`` diverges.

    ``I(a) = int_a^1 ds/phi`` is computed for ``a = 1e-2, 1e-4, ..., 1e-12``.
    In the variable ``L = log(1/a)`` the increments of ``I`` approximate
    ``1/eta(e^{-L})``.  Their local power-law decay exponent ``p`` separates
    divergent tails (``p <= 1``) from convergent ones (``p > 1``, or
    exponentially small increments).
    """
    evidence = [(a, reciprocal_integral(nl.phi, a, 1.0)) for a in OSGOOD_LOWER_LIMITS]
    L = np.log(1.0 / np.array([a for a, _ in evidence]))
    I = np.array([v for _, v in evidence])
    slopes = np.diff(I) / np.diff(L)
    slope = float(slopes[-1])
    mids = 0.5 * (L[1:] + L[:-1])

    if slopes[-1] <= increment_tol * max(abs(I[-1]), 1.0):
        exponent = math.inf
    else:
        tail = slice(-3, None)
        with np.errstate(divide="ignore"):
            exponent = float(-np.polyfit(np.log(mids[tail]), np.log(slopes[tail]), 1)[0])

    if exponent > 1.25:
        verdict = "NonOsgood"
    elif exponent <= 1.1 and slope >= slope_threshold:
        verdict = "Osgood"
    else:
        verdict = "Inconclusive"
    return OsgoodVerdict(verdict=verdict, evidence=evidence, slope=slope,
                         decay_exponent=exponent)


def scaling_radius(nl: Nonlinearity, A: float, L2: float) -> float:
    """Rescaling radius ``r_A = 1 / (L2 (eta(A) + 1)) = A / (L2 (phi(A) + A))``."""
    if not A > 0:
        raise ValueError("A must be positive")
    if L2 < nl.lambda0:
        raise ValueError("L2 must be at least lambda0")
    return 1.0 / (L2 * (float(nl.eta_values(A)) + 1.0))
