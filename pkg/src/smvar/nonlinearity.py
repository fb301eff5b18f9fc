"""Nonlinearity catalog (f, F) and the one-dimensional variational constants.

The sublinear catalog members are extended by f(s) = 0 for s <= 0, so F
vanishes on the negative half-line as well.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np
from scipy.interpolate import CubicHermiteSpline

from .errors import ConfigError, DomainTooSmallError
from .search1d import golden_section_max, scan_maximize

Func = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class ARParams:
    """Growth and Ambrosetti-Rabinowitz data: |f| <= C(1+|s|^{p-1}), 0 < eta F <= s f for |s| >= tau0."""

    p: float
    C: float
    eta: float
    tau0: float

    def __post_init__(self):
        if not 2 < self.p < 6:
            raise ValueError(f"p must lie in (2, 6), got {self.p}")
        if self.C <= 0 or self.tau0 <= 0:
            raise ValueError("C and tau0 must be positive")
        if self.eta <= 4:
            raise ValueError(f"eta must exceed 4, got {self.eta}")


@dataclass(frozen=True, eq=False)
class Nonlinearity:
    kind: str
    params: dict
    f: Func = field(repr=False)
    F: Func = field(repr=False)
    sublinear: bool = False
    ar: ARParams | None = None

    def __call__(self, s):
        return self.f(np.asarray(s, dtype=np.float64))

    def primitive(self, s):
        return self.F(np.asarray(s, dtype=np.float64))

    def spec(self) -> dict:
        """Config-level description (kind + parameters)."""
        return {"kind": self.kind, **self.params}


def _positive_part(fn: Func) -> Func:
    def wrapped(s):
        s = np.asarray(s, dtype=np.float64)
        sp = np.maximum(s, 0.0)
        return np.where(s > 0, fn(sp), 0.0)
    return wrapped


# -- catalog ------------------------------------------------------------------

def min_pow(r: float, p: float) -> Nonlinearity:
    """f(s) = min(s^r, s^p), 0 < r < 1 < p."""
    if not 0 < r < 1 < p:
        raise ValueError(f"need 0 < r < 1 < p, got r={r}, p={p}")

    def f(s):
        return np.minimum(s ** r, s ** p)

    def F(s):
        return np.where(s <= 1.0, s ** (p + 1) / (p + 1), 1.0 / (p + 1) + (s ** (r + 1) - 1.0) / (r + 1))

    return Nonlinearity("min_pow", {"r": r, "p": p}, _positive_part(f), _positive_part(F), sublinear=True)


def log_square() -> Nonlinearity:
    """f(s) = ln(1 + s^2)."""

    def f(s):
        return np.log1p(s * s)

    def F(s):
        return s * np.log1p(s * s) - 2.0 * s + 2.0 * np.arctan(s)

    return Nonlinearity("log_square", {}, _positive_part(f), _positive_part(F), sublinear=True)


# g and G(s) = int_1^s g for the two worked examples of the g-family
_G_VARIANTS: dict[str, tuple[Callable, Callable]] = {
    "minus_one": (lambda s: -np.ones_like(s), lambda s: -(s - 1.0)),
    "inv_minus_two": (lambda s: 1.0 / s - 2.0, lambda s: np.log(s) - 2.0 * (s - 1.0)),
}


def piecewise_g(variant: str = "minus_one", a: float = 2.0) -> Nonlinearity:
    """The g-family: f = 0 on [0,1), s + g(s) on [1,a), a + g(a) beyond."""
    if variant not in _G_VARIANTS:
        raise ConfigError(f"unknown piecewise_g variant {variant!r}; choose from {sorted(_G_VARIANTS)}")
    if not a > 1:
        raise ValueError(f"a must exceed 1, got {a}")
    g, G = _G_VARIANTS[variant]
    ga = float(g(np.array(a)))
    Ga = float(G(np.array(a)))
    top = a + ga

    def f(s):
        mid = np.clip(s, 1.0, a)
        return np.where(s < 1.0, 0.0, np.where(s < a, mid + g(mid), top))

    def F(s):
        mid = np.clip(s, 1.0, a)
        return np.where(
            s < 1.0, 0.0,
            np.where(s < a, mid ** 2 / 2 + G(mid) - 0.5, top * s - a ** 2 / 2 + Ga - a * ga - 0.5))

    return Nonlinearity("piecewise_g", {"variant": variant, "a": a}, _positive_part(f), _positive_part(F),
                        sublinear=True)


def piecewise_g_closed_forms(variant: str, a: float) -> tuple[float, float]:
    """Closed-form (c_f, c_F_hat) for the g-family."""
    g, G = _G_VARIANTS[variant]
    ga, Ga = float(g(np.array(a))), float(G(np.array(a)))
    cf = (a + ga) / a
    cF_hat = (a + ga) ** 2 / (a * a + 2 * a * ga - 2 * Ga + 1)
    return cf, cF_hat


def ar_power(p: float = 5.0, tau0: float = 1.0) -> Nonlinearity:
    """f(s) = |s|^{p-2} s, F = |s|^p / p; AR holds with eta = p exactly."""
    params = ARParams(p=p, C=1.0, eta=p, tau0=tau0)

    def f(s):
        return np.abs(s) ** (p - 2) * s

    def F(s):
        return np.abs(s) ** p / p

    return Nonlinearity("ar_power", {"p": p, "tau0": tau0}, f, F, ar=params)


def adaptive_simpson(fn: Callable[[float], float], a: float, b: float, tol: float = 1e-12,
                     max_depth: int = 50) -> float:
    def simpson(fa, fm, fb, lo, hi):
        return (hi - lo) * (fa + 4 * fm + fb) / 6.0

    def rec(lo, hi, fa, fm, fb, whole, eps, depth):
        m = 0.5 * (lo + hi)
        lm, rm = 0.5 * (lo + m), 0.5 * (m + hi)
        flm, frm = fn(lm), fn(rm)
        left = simpson(fa, flm, fm, lo, m)
        right = simpson(fm, frm, fb, m, hi)
        if depth >= max_depth or abs(left + right - whole) <= 15 * eps:
            return left + right + (left + right - whole) / 15.0
        return rec(lo, m, fa, flm, fm, left, eps / 2, depth + 1) + rec(m, hi, fm, frm, fb, right, eps / 2, depth + 1)

    fa, fb, fm = fn(a), fn(b), fn(0.5 * (a + b))
    return rec(a, b, fa, fm, fb, simpson(fa, fm, fb, a, b), tol, 0)


def tabulated(f: Func, F: Func | None = None, domain: tuple[float, float] = (-20.0, 20.0),
              knots: int = 4001, name: str = "tabulated", sublinear: bool = False) -> Nonlinearity:
    """Arbitrary continuous f.  Without a closed-form F, F is tabulated by adaptive
    Simpson between knots and interpolated by cubic Hermite splines with slopes f."""
    if F is None:
        lo, hi = domain
        if not lo <= 0.0 <= hi:
            raise ValueError("tabulation domain must contain 0")
        t = np.unique(np.concatenate([np.linspace(lo, hi, knots), [0.0]]))
        scalar = lambda x: float(f(np.array([x]))[0])  # noqa: E731
        i0 = int(np.searchsorted(t, 0.0))
        vals = np.zeros_like(t)
        for i in range(i0 + 1, t.size):
            vals[i] = vals[i - 1] + adaptive_simpson(scalar, t[i - 1], t[i], tol=1e-12 / t.size)
        for i in range(i0 - 1, -1, -1):
            vals[i] = vals[i + 1] - adaptive_simpson(scalar, t[i], t[i + 1], tol=1e-12 / t.size)
        spline = CubicHermiteSpline(t, vals, f(t))

        def F(s):
            s = np.asarray(s, dtype=np.float64)
            if np.any((s < lo) | (s > hi)):
                raise ValueError(f"argument outside tabulated range [{lo}, {hi}]")
            return spline(s)

    return Nonlinearity(name, {}, f, F, sublinear=sublinear)


def synthetic_multiwell(mu0: float = 1.0, wells: int = 3) -> Nonlinearity:
    """f built so that Phi_mu0(t) = t^2/2 - mu0 F(t) equals sin^2(pi t) on [0, wells-1]
    and pi^2 (dist to that interval)^2 outside: global minima at t = 0, 1, ..., wells-1."""
    top = float(wells - 1)
    pi2 = math.pi ** 2

    def phi(t):
        inside = np.sin(np.pi * np.clip(t, 0.0, top)) ** 2
        outside = pi2 * (np.minimum(t, 0.0) ** 2 + np.maximum(t - top, 0.0) ** 2)
        return inside + outside

    def dphi(t):
        inside = np.where((t >= 0) & (t <= top), np.pi * np.sin(2 * np.pi * t), 0.0)
        outside = 2 * pi2 * (np.minimum(t, 0.0) + np.maximum(t - top, 0.0))
        return inside + outside

    def f(t):
        t = np.asarray(t, dtype=np.float64)
        return (t - dphi(t)) / mu0

    def F(t):
        t = np.asarray(t, dtype=np.float64)
        return (0.5 * t * t - phi(t)) / mu0

    return Nonlinearity("multiwell", {"mu0": mu0, "wells": wells}, f, F)


def linear(slope: float = 1.0) -> Nonlinearity:
    return Nonlinearity("linear", {"slope": slope}, lambda s: slope * np.asarray(s, dtype=np.float64),
                        lambda s: 0.5 * slope * np.asarray(s, dtype=np.float64) ** 2)


def zero() -> Nonlinearity:
    return Nonlinearity("zero", {}, lambda s: np.zeros_like(np.asarray(s, dtype=np.float64)),
                        lambda s: np.zeros_like(np.asarray(s, dtype=np.float64)))


CATALOG = {
    "min_pow": min_pow,
    "log_square": log_square,
    "piecewise_g": piecewise_g,
    "ar_power": ar_power,
    "multiwell": synthetic_multiwell,
    "linear": linear,
    "zero": zero,
}


def from_spec(spec: dict) -> Nonlinearity:
    spec = dict(spec)
    kind = spec.pop("kind", None)
    if kind not in CATALOG:
        raise ConfigError(f"unknown nonlinearity kind {kind!r}; choose from {sorted(CATALOG)}")
    try:
        return CATALOG[kind](**spec)
    except TypeError as exc:
        raise ConfigError(f"bad parameters for {kind}: {exc}") from None


def sublinear_catalog() -> list[Nonlinearity]:
    """Representative members satisfying the sublinear hypotheses."""
    return [
        min_pow(0.5, 2.0),
        min_pow(0.25, 3.0),
        log_square(),
        piecewise_g("minus_one", 2.0),
        piecewise_g("minus_one", 10.0),
        piecewise_g("inv_minus_two", 2.0),
        piecewise_g("inv_minus_two", 5.0),
    ]


# -- sampled hypothesis checks -------------------------------------------------

def check_sublinear(nl: Nonlinearity, tol: float = 1e-3) -> bool:
    """f(s)/s small at 1e-6 and 1e6, and F(s0) > 0 somewhere on a log grid."""
    s = np.array([1e-6, 1e6])
    ratios = np.abs(nl(s) / s)
    grid = np.geomspace(1e-3, 1e3, 601)
    return bool(np.all(ratios <= tol) and np.any(nl.primitive(grid) > 0))


def check_ar(nl: Nonlinearity, params: ARParams | None = None, samples: int = 2001) -> bool:
    params = params or nl.ar
    if params is None:
        raise ValueError("no AR parameters supplied")
    s = np.linspace(-1e3, 1e3, samples)
    growth = np.all(np.abs(nl(s)) <= params.C * (1 + np.abs(s) ** (params.p - 1)))
    big = s[np.abs(s) >= params.tau0]
    Fb = nl.primitive(big)
    ar = np.all(Fb > 0) and np.all(params.eta * Fb <= big * nl(big) * (1 + 1e-12))
    return bool(growth and ar)


# -- constants ----------------------------------------------------------------

def compute_cf(nl: Nonlinearity) -> tuple[float, float]:
    """c_f = max_{s>0} f(s)/s and its argmax."""
    res = scan_maximize(lambda s: nl(s) / s)
    if res.unbounded_suspect:
        raise ValueError("f(s)/s still increasing at the scan boundary; c_f looks unbounded")
    return res.value, res.argmax


def compute_cF(nl: Nonlinearity, e: float, q: float) -> tuple[float, float]:
    """c_F = max_{s>0} 4F(s)/(2s^2 + e q s^4); q = 0 gives the limit max 2F(s)/s^2."""
    if e <= 0 or q < 0:
        raise ValueError("need e > 0 and q >= 0")
    res = scan_maximize(lambda s: 4.0 * nl.primitive(s) / (2.0 * s * s + e * q * s ** 4))
    if res.unbounded_suspect:
        raise ValueError("4F/(2s^2+eqs^4) still increasing at the scan boundary")
    return res.value, res.argmax


@dataclass
class ConstantsReport:
    c_f: float
    c_F: float
    c_F_hat: float
    s_star_f: float
    s_star_F: float
    gap: tuple[float, float]

    def to_dict(self) -> dict:
        d = asdict(self)
        d["gap"] = list(self.gap)
        return d


def constants_report(nl: Nonlinearity, e: float, q: float) -> ConstantsReport:
    cf, sf = compute_cf(nl)
    cF, sF = compute_cF(nl, e, q)
    cF_hat, _ = compute_cF(nl, e, 0.0)
    return ConstantsReport(cf, cF, cF_hat, sf, sF, (1.0 / cf, 1.0 / cF))


@dataclass
class GapLemmaResult:
    holds: bool
    margin: float
    c_f: float
    c_F: float

    def __bool__(self):
        return self.holds


def check_gap_lemma(nl: Nonlinearity, e: float, q: float) -> GapLemmaResult:
    """c_f > c_F strictly; a failure points at a solver or catalog bug."""
    cf, _ = compute_cf(nl)
    cF, _ = compute_cF(nl, e, q)
    return GapLemmaResult(cf > cF, cf - cF, cf, cF)


def threshold_lambdas(nl: Nonlinearity, e: float, q: float, alpha_sup: float = 1.0,
                      alpha_l1: float = 1.0, volume: float = 1.0) -> tuple[float, float]:
    """(trivial-only bound, two-solution bound) for Psi = lambda alpha, beta = 1.

    The second bound compares H/F over constants, so a general torus picks up
    a factor Vol; with Vol = 1 it is c_F^{-1} ||alpha||_1^{-1}.
    """
    cf, _ = compute_cf(nl)
    cF, _ = compute_cF(nl, e, q)
    return 1.0 / (cf * alpha_sup), volume / (cF * alpha_l1)


# -- global minima of Phi_mu0 --------------------------------------------------

@dataclass
class Components:
    m: int
    intervals: list[tuple[float, float]]
    min_value: float


def phi_mu(nl: Nonlinearity, mu0: float, t) -> np.ndarray:
    t = np.asarray(t, dtype=np.float64)
    return 0.5 * t * t - mu0 * nl.primitive(t)


def phi_mu_components(nl: Nonlinearity, mu0: float, domain: tuple[float, float] = (-10.0, 10.0),
                      grid: int = 20001) -> Components:
    """Connected components of the global-minimum set of t -> t^2/2 - mu0 F(t), at grid resolution."""
    if grid < 10_000:
        raise ValueError("grid must have at least 10^4 points")
    t = np.linspace(domain[0], domain[1], grid)
    v = phi_mu(nl, mu0, t)
    i_min = int(np.argmin(v))
    vstar = float(v[i_min])
    if i_min in (0, grid - 1):
        raise DomainTooSmallError(f"minimum of Phi_mu0 on the boundary of {domain}")
    atol = 1e-9 * max(1.0, abs(vstar))
    inside = v <= vstar + atol
    if inside[0] or inside[-1]:
        raise DomainTooSmallError(f"minimum set of Phi_mu0 touches the boundary of {domain}")
    edges = np.diff(inside.astype(np.int8))
    starts = np.flatnonzero(edges == 1) + 1
    stops = np.flatnonzero(edges == -1)
    intervals = [(float(t[a]), float(t[b])) for a, b in zip(starts, stops)]
    return Components(len(intervals), intervals, vstar)


# -- superlinear threshold ------------------------------------------------------

def ar_lambda0(params: ARParams, kappa_p: float, tau: float) -> float:
    """lambda_0(tau) = p tau^{1/2} / (2pC + 2C kappa_p^p tau^{(p-1)/2})."""
    if tau <= 0 or kappa_p <= 0:
        raise ValueError("tau and kappa_p must be positive")
    p, C = params.p, params.C
    return p * math.sqrt(tau) / (2 * p * C + 2 * C * kappa_p ** p * tau ** ((p - 1) / 2))


def ar_h_bound(params: ARParams, kappa_p: float, tau: float) -> float:
    """Upper bound C/2 tau^{1/2} + C kappa_p^p/p tau^{(p-2)/2} for h(tau)."""
    p, C = params.p, params.C
    return C / 2 * math.sqrt(tau) + C * kappa_p ** p / p * tau ** ((p - 2) / 2)


def maximize_ar_lambda0(params: ARParams, kappa_p: float) -> tuple[float, float]:
    """(tau*, lambda_0(tau*)) maximizing the closed form over tau > 0."""
    logs = np.linspace(-20.0, 20.0, 801)
    vals = np.array([ar_lambda0(params, kappa_p, math.exp(x)) for x in logs])
    i = int(np.argmax(vals))
    lo, hi = logs[max(i - 1, 0)], logs[min(i + 1, logs.size - 1)]
    x, val = golden_section_max(lambda x: ar_lambda0(params, kappa_p, math.exp(x)), lo, hi, rtol=1e-12)
    return math.exp(x), val
