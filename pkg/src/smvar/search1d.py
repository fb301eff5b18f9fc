"""One-dimensional global maximization: log-spaced bracket scan + golden section."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


def golden_section_max(fn: Callable[[float], float], lo: float, hi: float,
                       rtol: float = 1e-10, maxiter: int = 500) -> tuple[float, float]:
    """Maximize a unimodal ``fn`` on [lo, hi]; stops once the bracket is rtol-relative small."""
    a, b = float(lo), float(hi)
    x1 = b - INV_PHI * (b - a)
    x2 = a + INV_PHI * (b - a)
    f1, f2 = fn(x1), fn(x2)
    for _ in range(maxiter):
        if b - a <= rtol * max(abs(a), abs(b), 1e-300):
            break
        if f1 < f2:
            a, x1, f1 = x1, x2, f2
            x2 = a + INV_PHI * (b - a)
            f2 = fn(x2)
        else:
            b, x2, f2 = x2, x1, f1
            x1 = b - INV_PHI * (b - a)
            f1 = fn(x1)
    return (x1, f1) if f1 >= f2 else (x2, f2)


@dataclass
class ScanResult:
    value: float
    argmax: float
    unbounded_suspect: bool


def scan_maximize(fn: Callable[[np.ndarray], np.ndarray], lo: float = 1e-6, hi: float = 1e6,
                  points: int = 2048, rtol: float = 1e-10, max_candidates: int = 16) -> ScanResult:
    """Global max of a continuous function on [lo, hi].

    ``fn`` must accept numpy arrays.  Every strict local maximum of the
    log-spaced scan (plus the grid argmax, which covers flat tops) is refined
    by golden section on its neighbouring bracket.
    """
    s = np.geomspace(lo, hi, points)
    v = np.asarray(fn(s), dtype=np.float64)
    inner = np.arange(1, points - 1)
    left, mid, right = v[inner - 1], v[inner], v[inner + 1]
    strict = inner[(mid >= left) & (mid >= right) & ((mid > left) | (mid > right))]
    cands = set(int(i) for i in strict[np.argsort(v[strict])[::-1][:max_candidates]])
    cands.add(int(np.argmax(v)))

    def scalar(x):
        return float(fn(np.array([x]))[0])

    best_v, best_x = -np.inf, float("nan")
    for i in sorted(cands):
        a = s[max(i - 1, 0)]
        b = s[min(i + 1, points - 1)]
        x, fx = golden_section_max(scalar, a, b, rtol=rtol)
        if v[i] > fx:
            x, fx = float(s[i]), float(v[i])
        if fx > best_v:
            best_v, best_x = fx, x
    suspect = bool(np.argmax(v) == points - 1 and v[-1] > v[-2])
    return ScanResult(float(best_v), float(best_x), suspect)
