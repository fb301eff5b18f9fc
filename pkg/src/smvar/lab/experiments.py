"""The experiment suites behind the CLI: identity battery, sublinear thresholds,
multi-well multiplicity, superlinear (AR) second solutions, single solves.

Each ``run_*`` function is pure given (config, seed) and returns plain data;
writing files is left to :mod:`smvar.lab.commands`.
"""
from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from ..critical import (
    Classification,
    default_endpoint,
    estimate_embedding_constant,
    h1_distance,
    minimize,
    mountain_pass,
    multi_start_deflated,
)
from ..energy import PsiMode, csv_row, energy, energy_gradient, evaluate, j_mu, weak_form_residual
from ..errors import ConfigError
from ..expr import field_from_expression
from ..manifold import h1_norm_sq, inner, integrate, random_field
from ..maxwell import (
    check_convexity,
    check_monotone,
    check_scaling,
    check_symmetry,
    coupling_energy,
    h1_phi_sq,
    solve_maxwell,
)
from ..nonlinearity import (
    ar_lambda0,
    compute_cf,
    compute_cF,
    constants_report,
    maximize_ar_lambda0,
    phi_mu_components,
    piecewise_g,
)
from .config import ExperimentConfig

log = logging.getLogger(__name__)


# -- identity battery ---------------------------------------------------------------

@dataclass
class SuiteResult:
    name: str
    trials: int
    failures: int
    worst: float
    tolerance: float
    failing: list = field(default_factory=list, repr=False)

    @property
    def passed(self) -> bool:
        return self.failures == 0

    def row(self) -> dict:
        return {"suite": self.name, "trials": self.trials, "failures": self.failures,
                "worst": self.worst, "tolerance": self.tolerance, "passed": self.passed}


def _rand(M, rng):
    return random_field(M, rng, max_mode=int(rng.integers(1, 5)), amplitude=rng.uniform(0.2, 2.0),
                        mean=rng.normal())


def _suite(name, tol, trials, defect_fn):
    worst, failing = 0.0, []
    for i in range(trials):
        d, fields = defect_fn(i)
        worst = max(worst, d)
        if not d <= tol:
            failing.append((i, fields))
    return SuiteResult(name, trials, len(failing), worst, tol, failing)


def run_battery(cfg: ExperimentConfig) -> list[SuiteResult]:
    """Randomized checks of the phi_u identities and of the energy gradient (seeded)."""
    M = cfg.manifold.build()
    q = cfg.params.q
    nl = cfg.build_nonlinearity()
    seed = cfg.solver.rng_seed
    trials = cfg.experiment.trials
    rng = np.random.default_rng([seed, 1])

    def coupling(i):
        u = _rand(M, rng)
        sol = solve_maxwell(M, u, q)
        if q == 0:
            return float(np.max(np.abs(sol.phi.values))), {"u": u}
        a = coupling_energy(M, u, sol)
        b = h1_phi_sq(M, sol.phi) / q
        return abs(a - b) / max(abs(a), abs(b), 1e-300), {"u": u}

    def symmetry(i):
        u, v = _rand(M, rng), _rand(M, rng)
        trip = check_symmetry(M, u, v, q)
        scale = max(abs(x) for x in trip)
        if scale == 0:
            return 0.0, {"u": u, "v": v}
        spread = max(trip) - min(trip)
        return spread / scale, {"u": u, "v": v}

    def monotone(i):
        u, v = _rand(M, rng), _rand(M, rng)
        val = check_monotone(M, u, v, q)
        scale = max(coupling_energy(M, u, solve_maxwell(M, u, q)) + coupling_energy(M, v, solve_maxwell(M, v, q)),
                    1.0)
        return max(0.0, -val) / scale, {"u": u, "v": v}

    def scaling(i):
        u = _rand(M, rng)
        t = float(rng.uniform(-3, 3))
        d = check_scaling(M, u, t, q)
        phin = math.sqrt(max(inner(M, solve_maxwell(M, u, q).phi, solve_maxwell(M, u, q).phi), 0.0))
        return d / max(1.0, t * t * phin), {"u": u}

    def convexity(i):
        u, v = _rand(M, rng), _rand(M, rng)
        t = float(rng.uniform(0, 1))
        lhs, rhs = check_convexity(M, u, v, t, q)
        return max(0.0, lhs - rhs) / max(1.0, abs(rhs)), {"u": u, "v": v}

    lam = cfg.params.lam if cfg.params.lam > 0 else 0.7
    mu0 = cfg.params.mu0 if cfg.params.mu0 > 0 else 0.3
    modes = list(PsiMode)
    grad_trials = cfg.experiment.gradient_trials
    h = 1e-5

    def gradient(i):
        mode = modes[i // grad_trials]
        spec = replace(cfg.params, psi_mode=mode.value, mu0=mu0, e=cfg.params.e if cfg.params.e > 0 else 1.0)
        params = spec.build(M, lam)
        u, v = _rand(M, rng), _rand(M, rng)
        r = energy_gradient(M, params, nl, u)
        analytic = inner(M, r, v)
        fd = (energy(M, params, nl, u + h * v).total - energy(M, params, nl, u - h * v).total) / (2 * h)
        # floor keeps a direction nearly orthogonal to r from inflating the relative error
        floor = 1e-2 * math.sqrt(inner(M, r, r) * inner(M, v, v))
        return abs(fd - analytic) / max(abs(analytic), floor, 1e-300), {"u": u, "v": v}

    return [
        _suite("coupling_identity", 1e-8, trials, coupling),
        _suite("symmetry", 1e-8, trials, symmetry),
        _suite("monotonicity", 1e-10, trials, monotone),
        _suite("scaling", 1e-10, trials, scaling),
        _suite("convexity", 1e-9, trials, convexity),
        _suite("gradient_consistency", 1e-5, grad_trials * len(modes), gradient),
    ]


# -- sublinear thresholds -------------------------------------------------------------

REGIME_COLUMNS = ("lambda", "n_starts", "n_trivial", "n_negative_min", "n_mountain_pass", "n_distinct_nontrivial",
                  "n_unconverged", "min_energy", "trivial_bound", "multiplicity_bound")


@dataclass
class RegimeReport:
    rows: list[dict]
    trivial_bound: float
    multiplicity_bound: float


def _lambda_values(cfg: ExperimentConfig, refs: dict[str, float]) -> list[float]:
    grid = cfg.lambda_grid
    if grid.relative_to == "absolute":
        return [float(x) for x in grid.values]
    if grid.relative_to not in refs:
        raise ConfigError(f"lambda_grid.relative_to = {grid.relative_to!r} is not available for this command")
    return [float(x) * refs[grid.relative_to] for x in grid.values]


def _distinct(M, reports, radius):
    out = []
    for rep in reports:
        if all(h1_distance(M, rep.u, d.u) > radius for d in out):
            out.append(rep)
    return out


def thresholds_row(cfg: ExperimentConfig, lam: float, index: int, bounds: tuple[float, float]):
    """One lambda of the regime scan: multi-start minimize, then a mountain pass if a
    negative-energy minimizer exists."""
    M = cfg.manifold.build()
    nl = cfg.build_nonlinearity()
    params = cfg.params.build(M, lam)
    sol = cfg.solver
    rng = np.random.default_rng([sol.rng_seed, index])
    _, s_star = compute_cF(nl, params.e, params.q)
    amp = cfg.experiment.start_amplitude
    starts = [M.constant(s_star)]
    while len(starts) < cfg.experiment.n_starts:
        starts.append(random_field(M, rng, max_mode=2, amplitude=amp * s_star * rng.uniform(0.1, 1.0),
                                   mean=rng.uniform(0.0, 1.5) * s_star))
    reports = [minimize(M, params, nl, u0, sol) for u0 in starts]
    conv = [r for r in reports if r.converged]
    n_triv = sum(r.classification is Classification.TRIVIAL for r in conv)
    n_neg = sum(r.classification is Classification.NEGATIVE_ENERGY_MIN for r in conv)
    nontrivial = _distinct(M, sorted((r for r in conv if r.classification is not Classification.TRIVIAL),
                                     key=lambda r: r.energy.total), sol.deflation_radius)
    labelled = [(f"lambda{index:03d}_start{i:02d}", r) for i, r in enumerate(reports)]
    n_mp = 0
    if n_neg and cfg.experiment.mountain_pass:
        mp = mountain_pass(M, params, nl, default_endpoint(M, params, nl), sol)
        labelled.append((f"lambda{index:03d}_mountain_pass", mp))
        if (mp.converged and mp.classification is Classification.MOUNTAIN_PASS
                and all(h1_distance(M, mp.u, d.u) > sol.deflation_radius for d in nontrivial)):
            n_mp = 1
            reports.append(mp)
    energies = [r.energy.total for r in reports if r.converged]
    row = {"lambda": lam, "n_starts": len(starts), "n_trivial": n_triv, "n_negative_min": n_neg,
           "n_mountain_pass": n_mp, "n_distinct_nontrivial": len(nontrivial) + n_mp,
           "n_unconverged": sum(not r.converged for r in reports),
           "min_energy": min(energies) if energies else float("nan"),
           "trivial_bound": bounds[0], "multiplicity_bound": bounds[1]}
    erows = [csv_row(params, r.energy, r.grad_norm) for _, r in labelled]
    return row, erows, labelled


def _map_lambdas(fn, cfg, lambdas, extra, workers):
    args = [(cfg, lam, i, extra) for i, lam in enumerate(lambdas)]
    if workers <= 1 or len(args) <= 1:
        return [fn(*a) for a in args]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        # map() yields in submission order, so the merge is lambda-ordered
        return list(pool.map(fn, *zip(*args)))


def gap_sweeps(cfg: ExperimentConfig) -> dict:
    nl = cfg.build_nonlinearity()
    e = cfg.params.e
    q_rows = []
    cf, _ = compute_cf(nl)
    for q in cfg.experiment.q_sweep:
        cF, _ = compute_cF(nl, e, q)
        q_rows.append({"q": q, "c_f_inv": 1 / cf, "c_F_inv": 1 / cF, "width": 1 / cF - 1 / cf})
    a_rows = []
    if nl.kind == "piecewise_g":
        for a in cfg.experiment.a_sweep:
            g = piecewise_g(nl.params["variant"], a)
            c1, _ = compute_cf(g)
            c2, _ = compute_cF(g, e, 0.0)
            a_rows.append({"a": a, "c_f": c1, "c_F_hat": c2, "difference": c1 - c2})
    return {"q_sweep": q_rows, "a_sweep": a_rows}


def run_thresholds(cfg: ExperimentConfig, workers: int = 1):
    if PsiMode(cfg.params.psi_mode) is not PsiMode.LAMBDA_ALPHA:
        raise ConfigError("thresholds needs psi_mode = lambda_alpha")
    M = cfg.manifold.build()
    nl = cfg.build_nonlinearity()
    if not nl.sublinear:
        raise ConfigError("thresholds needs a sublinear nonlinearity")
    params = cfg.params.build(M, 0.0)
    if abs(M.volume - 1.0) > 1e-12 or np.any(params.beta.values != 1.0):
        log.warning("thresholds assume beta = 1 and Vol = 1; bounds are reported with the Vol factor")
    consts = constants_report(nl, params.e, params.q)
    a_sup = float(params.alpha.values.max())
    a_l1 = integrate(M, params.alpha)
    bounds = (1.0 / (consts.c_f * a_sup), M.volume / (consts.c_F * a_l1))
    lambdas = _lambda_values(cfg, {"trivial_bound": bounds[0], "multiplicity_bound": bounds[1]})
    results = _map_lambdas(thresholds_row, cfg, lambdas, bounds, workers)
    rows = [r[0] for r in results]
    erows = [e for r in results for e in r[1]]
    labelled = [x for r in results for x in r[2]]
    return consts, RegimeReport(rows, *bounds), gap_sweeps(cfg), erows, labelled


# -- multi-well ----------------------------------------------------------------------

MULTIWELL_COLUMNS = ("lambda", "n_starts", "n_distinct", "n_below_tau", "min_energy", "max_weak_residual", "m", "tau")


def multiwell_row(cfg: ExperimentConfig, lam: float, index: int, extra):
    m, tau = extra
    M = cfg.manifold.build()
    nl = cfg.build_nonlinearity()
    params = cfg.params.build(M, lam)
    res = multi_start_deflated(M, params, nl, cfg.solver, cfg.experiment.n_starts, tau,
                               tuple(cfg.experiment.components_domain))
    resid = [weak_form_residual(M, params, nl, r.u).worst for r in res.solutions]
    row = {"lambda": lam, "n_starts": res.n_starts, "n_distinct": len(res.solutions),
           "n_below_tau": res.n_below_tau,
           "min_energy": res.solutions[0].energy.total if res.solutions else float("nan"),
           "max_weak_residual": max(resid) if resid else float("nan"), "m": m, "tau": tau}
    erows = [csv_row(params, r.energy, r.grad_norm) for r in res.solutions]
    labelled = [(f"lambda{index:03d}_solution{i:02d}", r) for i, r in enumerate(res.solutions)]
    return row, erows, labelled


def run_multiwell(cfg: ExperimentConfig, workers: int = 1):
    if PsiMode(cfg.params.psi_mode) is not PsiMode.LAMBDA_ALPHA_PLUS_MU0_BETA:
        raise ConfigError("multiwell needs psi_mode = lambda_alpha_plus_mu0_beta")
    M = cfg.manifold.build()
    nl = cfg.build_nonlinearity()
    comps = phi_mu_components(nl, cfg.params.mu0, tuple(cfg.experiment.components_domain))
    beta_l1 = integrate(M, field_from_expression(M, cfg.params.beta))
    floor = beta_l1 * comps.min_value
    tau = cfg.experiment.tau if cfg.experiment.tau is not None else floor + 0.1
    if not tau > floor:
        raise ConfigError(f"tau = {tau} must exceed ||beta||_1 inf Phi_mu0 = {floor}")
    lambdas = _lambda_values(cfg, {})
    results = _map_lambdas(multiwell_row, cfg, lambdas, (comps.m, tau), workers)
    summary = {"m": comps.m, "components": comps.intervals, "min_value": comps.min_value,
               "beta_l1": beta_l1, "tau": tau}
    return summary, [r[0] for r in results], [e for r in results for e in r[1]], [x for r in results for x in r[2]]


# -- superlinear ---------------------------------------------------------------------

SUPERLINEAR_COLUMNS = ("lambda", "zero_grad_norm", "local_min_class", "local_min_grad_norm", "mp_class",
                       "mp_energy", "mp_grad_norm", "mp_weak_residual", "mp_converged")


def superlinear_row(cfg: ExperimentConfig, lam: float, index: int, extra):
    M = cfg.manifold.build()
    nl = cfg.build_nonlinearity()
    params = cfg.params.build(M, lam)
    sol = cfg.solver
    rng = np.random.default_rng([sol.rng_seed, index])
    zero = evaluate(M, params, nl, np.zeros(M.n_nodes))
    local = minimize(M, params, nl, random_field(M, rng, max_mode=2, amplitude=0.05, mean=0.05), sol)
    labelled = [(f"lambda{index:03d}_local_min", local)]
    row = {"lambda": lam, "zero_grad_norm": zero.grad_norm, "local_min_class": local.classification.value,
           "local_min_grad_norm": local.grad_norm, "mp_class": "none", "mp_energy": float("nan"),
           "mp_grad_norm": float("nan"), "mp_weak_residual": float("nan"), "mp_converged": False}
    erows = [csv_row(params, local.energy, local.grad_norm)]
    if lam > 0 and cfg.experiment.mountain_pass:
        mp = mountain_pass(M, params, nl, None, sol)
        labelled.append((f"lambda{index:03d}_mountain_pass", mp))
        row.update(mp_class=mp.classification.value, mp_energy=mp.energy.total, mp_grad_norm=mp.grad_norm,
                   mp_weak_residual=weak_form_residual(M, params, nl, mp.u).worst, mp_converged=mp.converged)
        erows.append(csv_row(params, mp.energy, mp.grad_norm))
    return row, erows, labelled


def run_superlinear(cfg: ExperimentConfig, workers: int = 1):
    if PsiMode(cfg.params.psi_mode) is not PsiMode.LAMBDA_CONSTANT:
        raise ConfigError("superlinear needs psi_mode = lambda_constant")
    nl = cfg.build_nonlinearity()
    if nl.ar is None:
        raise ConfigError(f"nonlinearity {nl.kind!r} carries no AR parameters")
    M = cfg.manifold.build()
    kappa = cfg.experiment.kappa_p or estimate_embedding_constant(M, nl.ar.p, cfg.solver)
    tau_rows = [{"tau": t, "lambda0": ar_lambda0(nl.ar, kappa, t)} for t in cfg.experiment.tau_grid]
    tau_star, lam0 = maximize_ar_lambda0(nl.ar, kappa)
    lambdas = _lambda_values(cfg, {"lambda0": lam0})
    results = _map_lambdas(superlinear_row, cfg, lambdas, None, workers)

    lam_ref = next((x for x in lambdas if x > 0), lam0 / 2)
    params = cfg.params.build(M, lam_ref)
    u0 = field_from_expression(M, cfg.experiment.j_mu_field)
    mu = 1.0 / (2.0 * lam_ref)
    jvals = [{"t": t, "J": j_mu(M, params, nl, t * u0, mu)} for t in cfg.experiment.j_mu_scales]
    js = [r["J"] for r in jvals]
    witness = len(js) >= 2 and js[-1] < js[-2] and js[-1] < 0
    summary = {"kappa_p": kappa, "kappa_estimated": cfg.experiment.kappa_p is None, "tau_star": tau_star,
               "lambda0": lam0, "tau_grid": tau_rows, "j_mu": {"mu": mu, "lambda": lam_ref, "values": jvals,
                                                              "unbounded_witness": bool(witness)}}
    return summary, [r[0] for r in results], [e for r in results for e in r[1]], [x for r in results for x in r[2]]


# -- single solve --------------------------------------------------------------------

def run_solve(cfg: ExperimentConfig):
    M = cfg.manifold.build()
    nl = cfg.build_nonlinearity()
    params = cfg.params.build(M)
    try:
        _, s = compute_cF(nl, params.e, params.q)
    except ValueError:
        s = 1.0
    rep = minimize(M, params, nl, M.constant(s), cfg.solver)
    labelled = [("minimizer", rep)]
    if cfg.experiment.mountain_pass and rep.energy.total < 0:
        labelled.append(("mountain_pass", mountain_pass(M, params, nl, None, cfg.solver)))
    for _, r in labelled:
        r.telemetry["weak_residual"] = weak_form_residual(M, params, nl, r.u).worst
        r.telemetry["h1_norm_sq"] = h1_norm_sq(M, r.u)
    erows = [csv_row(params, r.energy, r.grad_norm) for _, r in labelled]
    return labelled, erows


