"""Flat and conformally flat 3-tori: grids, quadrature, Laplace-Beltrami, H^1 norms.

Fields are stored as flat float64 arrays of length N^3 in x-fastest order,
i.e. ``values.reshape(N, N, N)[iz, iy, ix]``.  On the flat torus every
differential operator is an exact Fourier multiplier; with a conformal
factor psi (metric e^{2 psi} delta) the operator is the divergence form
e^{-3 psi} div(e^{psi} grad u) on a face-averaged second-order stencil.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.sparse.linalg import LinearOperator, cg

from .errors import ManifoldMismatchError, SolverError


@dataclass(frozen=True, eq=False)
class ScalarField:
    """Immutable real field sampled on the nodes of one manifold."""

    values: np.ndarray
    manifold_id: str

    def __post_init__(self):
        v = np.array(self.values, dtype=np.float64).ravel()
        if not np.all(np.isfinite(v)):
            raise ValueError("ScalarField values must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def _check(self, other: "ScalarField"):
        if other.manifold_id != self.manifold_id:
            raise ManifoldMismatchError(
                f"fields bound to different grids ({self.manifold_id} vs {other.manifold_id})")

    def _binary(self, other, op):
        if isinstance(other, ScalarField):
            self._check(other)
            return ScalarField(op(self.values, other.values), self.manifold_id)
        return ScalarField(op(self.values, float(other)), self.manifold_id)

    def __add__(self, other):
        return self._binary(other, np.add)

    __radd__ = __add__

    def __sub__(self, other):
        return self._binary(other, np.subtract)

    def __rsub__(self, other):
        return self._binary(other, lambda a, b: b - a)

    def __mul__(self, other):
        return self._binary(other, np.multiply)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return self._binary(other, np.divide)

    def __neg__(self):
        return ScalarField(-self.values, self.manifold_id)

    def __len__(self):
        return self.values.size

    def min(self) -> float:
        return float(self.values.min())

    def max(self) -> float:
        return float(self.values.max())


def _is_power_of_two(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


@dataclass(frozen=True, eq=False)
class Manifold:
    n_per_axis: int
    side_length: float
    psi: np.ndarray | None
    cell_volumes: np.ndarray
    manifold_id: str
    # |k|^2 on the full FFT grid (flat) or the symbol of the flat 7-point stencil (conformal)
    spectral_cache: np.ndarray = field(repr=False)
    face_coeffs: tuple[np.ndarray, ...] | None = field(default=None, repr=False)

    @property
    def shape(self) -> tuple[int, int, int]:
        n = self.n_per_axis
        return (n, n, n)

    @property
    def n_nodes(self) -> int:
        return self.n_per_axis ** 3

    @property
    def spacing(self) -> float:
        return self.side_length / self.n_per_axis

    @property
    def is_flat(self) -> bool:
        return self.psi is None

    @property
    def volume(self) -> float:
        return float(self.cell_volumes.sum())

    @property
    def conformal_factor(self) -> ScalarField | None:
        return None if self.psi is None else ScalarField(self.psi, self.manifold_id)

    def coordinates(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Node coordinates (x, y, z) as flat arrays in grid order."""
        t = np.arange(self.n_per_axis) * self.spacing
        z, y, x = np.meshgrid(t, t, t, indexing="ij")
        return x.ravel(), y.ravel(), z.ravel()

    def field(self, values) -> ScalarField:
        if isinstance(values, ScalarField):
            check_bound(self, values)
            return values
        arr = np.asarray(values, dtype=np.float64)
        if arr.ndim == 0:
            arr = np.full(self.n_nodes, float(arr))
        if arr.size != self.n_nodes:
            raise ManifoldMismatchError(f"expected {self.n_nodes} values, got {arr.size}")
        return ScalarField(arr, self.manifold_id)

    def constant(self, c: float) -> ScalarField:
        return self.field(np.full(self.n_nodes, float(c)))

    def zeros(self) -> ScalarField:
        return self.constant(0.0)

    def from_function(self, fn: Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray]) -> ScalarField:
        x, y, z = self.coordinates()
        return self.field(np.broadcast_to(fn(x, y, z), x.shape))


def build_torus(n_per_axis: int, side_length: float = 1.0, conformal_factor=None) -> Manifold:
    """Build the periodic grid on [0, L)^3, optionally with metric e^{2 psi} delta."""
    n = int(n_per_axis)
    if n < 4 or not _is_power_of_two(n):
        raise ValueError(f"n_per_axis must be a power of two >= 4, got {n_per_axis}")
    L = float(side_length)
    if not (L > 0 and np.isfinite(L)):
        raise ValueError(f"side_length must be positive, got {side_length}")
    h = L / n

    psi = None
    if conformal_factor is not None:
        psi = np.array(getattr(conformal_factor, "values", conformal_factor), dtype=np.float64).ravel()
        if psi.size != n ** 3:
            raise ValueError(f"conformal factor has {psi.size} samples, grid has {n ** 3}")
        if not np.all(np.isfinite(psi)):
            raise ValueError("conformal factor must be finite")
        psi.setflags(write=False)

    digest = hashlib.blake2b(digest_size=8)
    digest.update(f"{n}:{L!r}".encode())
    if psi is not None:
        digest.update(psi.tobytes())
    mid = digest.hexdigest()

    freqs = 2.0 * np.pi * np.fft.fftfreq(n, d=h)
    if psi is None:
        cell = np.full(n ** 3, h ** 3)
        k2 = freqs ** 2
        faces = None
    else:
        cell = np.exp(3.0 * psi) * h ** 3
        k2 = (4.0 / h ** 2) * np.sin(freqs * h / 2.0) ** 2
        ep = np.exp(psi).reshape(n, n, n)
        faces = tuple(0.5 * (ep + np.roll(ep, -1, axis=ax)) for ax in range(3))
    ksq = k2[:, None, None] + k2[None, :, None] + k2[None, None, :]
    cell.setflags(write=False)
    ksq.setflags(write=False)
    return Manifold(n, L, psi, cell, mid, ksq, faces)


def check_bound(M: Manifold, *fields: ScalarField):
    for f in fields:
        if f.manifold_id != M.manifold_id:
            raise ManifoldMismatchError(f"field bound to {f.manifold_id}, manifold is {M.manifold_id}")


# -- array kernels (flat arrays in, flat arrays out) --------------------------

def _spectral_multiply(M: Manifold, a: np.ndarray, symbol: np.ndarray) -> np.ndarray:
    return np.fft.ifftn(symbol * np.fft.fftn(a.reshape(M.shape))).real.ravel()


def _divergence_form(M: Manifold, a: np.ndarray) -> np.ndarray:
    """div(e^psi grad a) on the face-averaged stencil (no e^{-3 psi} factor)."""
    a3 = a.reshape(M.shape)
    out = np.zeros(M.shape)
    for ax, c in enumerate(M.face_coeffs):
        flux = c * (np.roll(a3, -1, axis=ax) - a3)
        out += flux - np.roll(flux, 1, axis=ax)
    return out.ravel() / M.spacing ** 2


def laplacian_array(M: Manifold, a: np.ndarray) -> np.ndarray:
    if M.is_flat:
        return _spectral_multiply(M, a, -M.spectral_cache)
    return np.exp(-3.0 * M.psi) * _divergence_form(M, a)


def gradient_energy_array(M: Manifold, a: np.ndarray) -> float:
    """int |grad_g a|^2 dv_g, nonnegative by construction."""
    if M.is_flat:
        ahat = np.fft.fftn(a.reshape(M.shape))
        return float(np.sum(M.spectral_cache * np.abs(ahat) ** 2) * M.spacing ** 3 / M.n_nodes)
    a3 = a.reshape(M.shape)
    total = 0.0
    for ax, c in enumerate(M.face_coeffs):
        d = np.roll(a3, -1, axis=ax) - a3
        total += float(np.sum(c * d * d))
    return total * M.spacing


def gradient_inner_array(M: Manifold, a: np.ndarray, b: np.ndarray) -> float:
    """Bilinear form int <grad_g a, grad_g b> dv_g."""
    return -float(np.dot(laplacian_array(M, a) * M.cell_volumes, b))


# -- public operations on ScalarFields ----------------------------------------

def laplace_beltrami(M: Manifold, u: ScalarField) -> ScalarField:
    check_bound(M, u)
    return ScalarField(laplacian_array(M, u.values), M.manifold_id)


def integrate(M: Manifold, w: ScalarField) -> float:
    check_bound(M, w)
    return float(np.dot(w.values, M.cell_volumes))


def inner(M: Manifold, u: ScalarField, v: ScalarField) -> float:
    """L^2(dv_g) inner product."""
    check_bound(M, u, v)
    return float(np.dot(u.values * v.values, M.cell_volumes))


def l2_norm(M: Manifold, u: ScalarField) -> float:
    return inner(M, u, u) ** 0.5


def lp_norm(M: Manifold, u: ScalarField, p: float) -> float:
    check_bound(M, u)
    return float(np.dot(np.abs(u.values) ** p, M.cell_volumes)) ** (1.0 / p)


def h1_beta_norm_sq(M: Manifold, beta: ScalarField | float, u: ScalarField) -> float:
    """||u||_beta^2 = int |grad_g u|^2 + beta u^2 dv_g."""
    check_bound(M, u)
    if isinstance(beta, ScalarField):
        check_bound(M, beta)
        b = beta.values
    else:
        b = float(beta)
    if np.any(np.asarray(b) <= 0):
        raise ValueError("beta must be strictly positive")
    mass = float(np.dot(b * u.values ** 2, M.cell_volumes))
    return gradient_energy_array(M, u.values) + mass


def h1_norm_sq(M: Manifold, u: ScalarField) -> float:
    return h1_beta_norm_sq(M, 1.0, u)


def h1_norm(M: Manifold, u: ScalarField) -> float:
    return h1_norm_sq(M, u) ** 0.5


# -- screened Poisson solve (-Delta_g + c) s = rhs ----------------------------

@dataclass
class LinearSolveInfo:
    iterations: int
    residual_norm: float


def solve_screened_array(M: Manifold, coeff, rhs: np.ndarray, rtol: float = 1e-12) -> tuple[np.ndarray, LinearSolveInfo]:
    """Solve (-Delta_g + coeff) s = rhs for a positive coefficient (scalar or nodal array).

    Flat torus with a constant coefficient is inverted exactly in Fourier
    space.  Every other case runs preconditioned CG on the symmetrized system
    W(-Delta_g + coeff) with W = diag(cell_volumes); the preconditioner is the
    constant-coefficient operator inverted by FFT.
    """
    c = np.asarray(coeff, dtype=np.float64)
    if np.any(c <= 0):
        raise ValueError("screening coefficient must be positive")
    scalar = c.ndim == 0 or np.all(c == c.flat[0])
    if M.is_flat and scalar:
        s = _spectral_multiply(M, rhs, 1.0 / (M.spectral_cache + float(c.flat[0])))
        return s, LinearSolveInfo(0, 0.0)

    W = M.cell_volumes
    cw = c * W if c.ndim else float(c) * W
    if M.is_flat:
        def apply(x):
            return -W * laplacian_array(M, x) + cw * x
        cbar = 1.0
    else:
        h3 = M.spacing ** 3
        def apply(x):
            return -h3 * _divergence_form(M, x) + cw * x
        cbar = float(np.mean([fc.mean() for fc in M.face_coeffs]))
    h3 = M.spacing ** 3
    wbar = float(np.mean(cw)) / h3
    precond_symbol = 1.0 / (h3 * (cbar * M.spectral_cache + wbar))

    n = M.n_nodes
    A = LinearOperator((n, n), matvec=apply, dtype=np.float64)
    P = LinearOperator((n, n), matvec=lambda r: _spectral_multiply(M, r, precond_symbol), dtype=np.float64)
    b = W * rhs
    count = [0]

    def _cb(_):
        count[0] += 1

    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        return np.zeros(n), LinearSolveInfo(0, 0.0)
    x, info = cg(A, b, rtol=rtol, atol=0.0, maxiter=10 * n, M=P, callback=_cb)
    res = np.linalg.norm(b - apply(x))
    if info != 0 or res > 10 * rtol * bnorm:
        raise SolverError(f"CG did not converge (info={info}, relative residual {res / bnorm:.3e})")
    return x, LinearSolveInfo(count[0], float(res / bnorm))


def solve_screened(M: Manifold, coeff, rhs: ScalarField) -> ScalarField:
    check_bound(M, rhs)
    c = coeff.values if isinstance(coeff, ScalarField) else coeff
    s, _ = solve_screened_array(M, c, rhs.values)
    return ScalarField(s, M.manifold_id)


def random_field(M: Manifold, rng: np.random.Generator, max_mode: int = 2,
                 amplitude: float = 1.0, mean: float = 0.0) -> ScalarField:
    """Smooth random field: white noise restricted to Fourier modes |k_i| <= max_mode."""
    noise = rng.standard_normal(M.shape)
    idx = np.abs(np.fft.fftfreq(M.n_per_axis, d=1.0 / M.n_per_axis))
    keep = (idx[:, None, None] <= max_mode) & (idx[None, :, None] <= max_mode) & (idx[None, None, :] <= max_mode)
    smooth = np.fft.ifftn(np.fft.fftn(noise) * keep).real.ravel()
    smooth -= smooth.mean()
    std = smooth.std()
    if std > 0:
        smooth /= std
    return M.field(mean + amplitude * smooth)
