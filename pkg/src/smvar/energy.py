"""Reduced energy E(u) = 1/2 ||u||_beta^2 + e/4 int phi_u u^2 - int Psi(lambda,x) F(u),
its gradient, and the splittings used by the three existence results."""
from __future__ import annotations

import enum
from dataclasses import asdict, dataclass

import numpy as np

from .errors import ConfigError
from .manifold import (
    Manifold,
    ScalarField,
    check_bound,
    gradient_energy_array,
    gradient_inner_array,
    laplacian_array,
    random_field,
    solve_screened_array,
)
from .maxwell import PhiCache, phi_array
from .nonlinearity import Nonlinearity


class PsiMode(str, enum.Enum):
    LAMBDA_ALPHA = "lambda_alpha"
    LAMBDA_ALPHA_PLUS_MU0_BETA = "lambda_alpha_plus_mu0_beta"
    LAMBDA_CONSTANT = "lambda_constant"


@dataclass(frozen=True)
class SystemParams:
    e: float
    q: float
    lam: float
    mu0: float
    alpha: ScalarField
    beta: ScalarField
    psi_mode: PsiMode = PsiMode.LAMBDA_ALPHA

    def __post_init__(self):
        object.__setattr__(self, "psi_mode", PsiMode(self.psi_mode))
        # e = lambda in the multi-well setting, so lambda = 0 forces e = 0 there
        e_floor_ok = self.e == 0 and self.psi_mode is PsiMode.LAMBDA_ALPHA_PLUS_MU0_BETA
        if self.e <= 0 and not e_floor_ok:
            raise ConfigError(f"e must be positive, got {self.e}")
        if self.q < 0 or self.lam < 0 or self.mu0 < 0:
            raise ConfigError("q, lambda and mu0 must be nonnegative")
        if self.alpha.min() <= 0 or self.beta.min() <= 0:
            raise ConfigError("alpha and beta must be strictly positive")

    def with_lambda(self, lam: float, couple_e: bool = False) -> "SystemParams":
        """Copy at a new lambda; ``couple_e`` keeps e = lambda (multi-well setting)."""
        e = lam if couple_e else self.e
        return SystemParams(e, self.q, lam, self.mu0, self.alpha, self.beta, self.psi_mode)

    def psi(self) -> np.ndarray:
        if self.psi_mode is PsiMode.LAMBDA_ALPHA:
            return self.lam * self.alpha.values
        if self.psi_mode is PsiMode.LAMBDA_ALPHA_PLUS_MU0_BETA:
            return self.lam * self.alpha.values + self.mu0 * self.beta.values
        return np.full(self.alpha.values.size, self.lam)


def uniform_params(M: Manifold, e: float = 1.0, q: float = 1.0, lam: float = 0.0, mu0: float = 0.0,
                   psi_mode: PsiMode | str = PsiMode.LAMBDA_ALPHA, alpha: float = 1.0,
                   beta: float = 1.0) -> SystemParams:
    return SystemParams(e, q, lam, mu0, M.constant(alpha), M.constant(beta), PsiMode(psi_mode))


@dataclass
class EnergyBreakdown:
    total: float
    dirichlet_mass: float
    coupling: float
    potential: float
    H_value: float

    def to_dict(self) -> dict:
        return asdict(self)


CSV_COLUMNS = ("lambda", "e", "q", "total", "dirichlet_mass", "coupling", "potential", "grad_norm")


def csv_row(params: SystemParams, br: EnergyBreakdown, grad_norm: float) -> dict:
    return {"lambda": params.lam, "e": params.e, "q": params.q, "total": br.total,
            "dirichlet_mass": br.dirichlet_mass, "coupling": br.coupling,
            "potential": br.potential, "grad_norm": grad_norm}


def _breakdown(M, params, nl, u, phi) -> EnergyBreakdown:
    W = M.cell_volumes
    dm = 0.5 * (gradient_energy_array(M, u) + float(np.dot(params.beta.values * u * u, W)))
    cp = 0.25 * params.e * float(np.dot(phi * u * u, W))
    pot = float(np.dot(params.psi() * nl.primitive(u), W))
    return EnergyBreakdown(dm + cp - pot, dm, cp, pot, dm + cp)


def energy(M: Manifold, params: SystemParams, nl: Nonlinearity, u: ScalarField,
           cache: PhiCache | None = None) -> EnergyBreakdown:
    check_bound(M, u, params.alpha, params.beta)
    phi = phi_array(M, u.values, params.q, cache)
    return _breakdown(M, params, nl, u.values, phi)


def _l2_gradient(M, params, nl, u, phi) -> np.ndarray:
    return -laplacian_array(M, u) + params.beta.values * u + params.e * phi * u - params.psi() * nl(u)


def energy_gradient(M: Manifold, params: SystemParams, nl: Nonlinearity, u: ScalarField,
                    cache: PhiCache | None = None) -> ScalarField:
    """L^2(dv_g) representative r: E'(u)v = int r v dv_g."""
    check_bound(M, u, params.alpha, params.beta)
    phi = phi_array(M, u.values, params.q, cache)
    return ScalarField(_l2_gradient(M, params, nl, u.values, phi), M.manifold_id)


def sobolev_gradient(M: Manifold, params: SystemParams, r: ScalarField) -> ScalarField:
    """H^1_beta representative s: (-Delta_g + beta) s = r."""
    check_bound(M, r)
    s, _ = solve_screened_array(M, params.beta.values, r.values)
    return ScalarField(s, M.manifold_id)


@dataclass
class Evaluation:
    """Everything a solver needs at one iterate (raw arrays, no copies)."""

    u: np.ndarray
    phi: np.ndarray
    breakdown: EnergyBreakdown
    r: np.ndarray
    s: np.ndarray
    grad_norm: float

    @property
    def total(self) -> float:
        return self.breakdown.total


def evaluate(M: Manifold, params: SystemParams, nl: Nonlinearity, u: np.ndarray,
             cache: PhiCache | None = None, need_gradient: bool = True) -> Evaluation:
    phi = phi_array(M, u, params.q, cache)
    br = _breakdown(M, params, nl, u, phi)
    if not need_gradient:
        return Evaluation(u, phi, br, None, None, float("nan"))
    r = _l2_gradient(M, params, nl, u, phi)
    s, _ = solve_screened_array(M, params.beta.values, r)
    # ||s||_beta^2 = <s, r>_{L^2} is the dual norm of E'(u)
    gn = float(np.sqrt(max(np.dot(s * r, M.cell_volumes), 0.0)))
    return Evaluation(u, phi, br, r, s, gn)


def functional_parts(M: Manifold, params: SystemParams, nl: Nonlinearity, u: ScalarField,
                     cache: PhiCache | None = None) -> tuple[float, float]:
    """(N(u), G(u)) with N = 1/2||u||_beta^2 - mu0 int beta F(u) and G = 1/4 int phi_u u^2 - int alpha F(u)."""
    if params.psi_mode is not PsiMode.LAMBDA_ALPHA_PLUS_MU0_BETA:
        raise ConfigError("functional_parts needs psi_mode lambda_alpha_plus_mu0_beta")
    check_bound(M, u)
    W = M.cell_volumes
    uv = u.values
    Fu = nl.primitive(uv)
    half_norm = 0.5 * (gradient_energy_array(M, uv) + float(np.dot(params.beta.values * uv * uv, W)))
    N = half_norm - params.mu0 * float(np.dot(params.beta.values * Fu, W))
    phi = phi_array(M, uv, params.q, cache)
    G = 0.25 * float(np.dot(phi * uv * uv, W)) - float(np.dot(params.alpha.values * Fu, W))
    return N, G


def j_mu(M: Manifold, params: SystemParams, nl: Nonlinearity, u: ScalarField, mu: float,
         cache: PhiCache | None = None) -> float:
    """mu H(u) - int F(u) dv_g."""
    if params.psi_mode is not PsiMode.LAMBDA_CONSTANT:
        raise ConfigError("j_mu needs psi_mode lambda_constant")
    br = energy(M, params, nl, u, cache)
    return mu * br.H_value - float(np.dot(nl.primitive(u.values), M.cell_volumes))


# -- weak-form certificate -------------------------------------------------------

def random_test_fields(M: Manifold, n: int = 10, seed: int = 0) -> list[ScalarField]:
    """H^1-normalized random test fields mixing low and high frequencies."""
    rng = np.random.default_rng(seed)
    out = []
    for i in range(n):
        v = random_field(M, rng, max_mode=1 + (i % max(1, M.n_per_axis // 2)), mean=rng.standard_normal())
        norm = np.sqrt(gradient_energy_array(M, v.values) + float(np.dot(v.values ** 2, M.cell_volumes)))
        out.append(ScalarField(v.values / norm, M.manifold_id))
    return out


@dataclass
class WeakResidual:
    schrodinger: float
    maxwell: float

    @property
    def worst(self) -> float:
        return max(self.schrodinger, self.maxwell)


def weak_form_residual(M: Manifold, params: SystemParams, nl: Nonlinearity, u: ScalarField,
                       phi: ScalarField | None = None, tests: list[ScalarField] | None = None) -> WeakResidual:
    """Largest defect of both weak equations over H^1-normalized test fields.

    With phi omitted the Maxwell partner phi_u is recomputed from u.
    """
    check_bound(M, u)
    W = M.cell_volumes
    uv = u.values
    ph = phi_array(M, uv, params.q) if phi is None else phi.values
    tests = tests if tests is not None else random_test_fields(M)
    fu = params.psi() * nl(uv)
    s_res = m_res = 0.0
    for v in tests:
        vv = v.values
        lhs = gradient_inner_array(M, uv, vv) + float(np.dot((params.beta.values * uv + params.e * uv * ph) * vv, W))
        s_res = max(s_res, abs(lhs - float(np.dot(fu * vv, W))))
        lhs_m = gradient_inner_array(M, ph, vv) + float(np.dot(ph * vv, W))
        m_res = max(m_res, abs(lhs_m - params.q * float(np.dot(uv * uv * vv, W))))
    return WeakResidual(s_res, m_res)
