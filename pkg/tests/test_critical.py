from dataclasses import replace

import numpy as np
import pytest

from oracles import constant_energy
from smvar.critical import (
    Classification,
    SolverConfig,
    default_endpoint,
    estimate_embedding_constant,
    h1_distance,
    minimize,
    mountain_pass,
    multi_start_deflated,
)
from smvar.energy import energy, uniform_params, weak_form_residual
from smvar.errors import ConfigError
from smvar.manifold import build_torus, h1_norm, random_field
from smvar.nonlinearity import (
    ar_power,
    compute_cf,
    compute_cF,
    linear,
    phi_mu_components,
    piecewise_g,
    sublinear_catalog,
    synthetic_multiwell,
    zero,
)

G = piecewise_g("minus_one", 2.0)


@pytest.fixture(scope="module")
def above(flat16):
    cF, s = compute_cF(G, 1.0, 1.0)
    return uniform_params(flat16, lam=1.1 / cF), s


def test_solver_config_validation():
    with pytest.raises(ConfigError):
        SolverConfig(path_points=40)
    with pytest.raises(ConfigError):
        SolverConfig(grad_tol=0.0)
    with pytest.raises(ConfigError):
        SolverConfig(max_iters=0)


def test_lambda_zero_goes_to_zero(flat16, rng):
    p = uniform_params(flat16, lam=0.0)
    rep = minimize(flat16, p, G, random_field(flat16, rng, mean=2.0))
    assert rep.converged and rep.classification is Classification.TRIVIAL
    assert abs(rep.energy.total) < 1e-12


def test_below_trivial_bound_all_trivial(flat16):
    lam = 0.9 / compute_cf(G)[0]
    p = uniform_params(flat16, lam=lam)
    rng = np.random.default_rng(7)
    for _ in range(20):
        u0 = random_field(flat16, rng, 2, amplitude=rng.uniform(0.1, 3), mean=rng.uniform(0, 5))
        rep = minimize(flat16, p, G, u0)
        assert rep.converged and h1_norm(flat16, rep.u) <= 1e-6


def test_descent_is_monotone(flat16, above):
    p, s = above
    rep = minimize(flat16, p, G, random_field(flat16, np.random.default_rng(1), 2, mean=s))
    hist = np.array(rep.telemetry["energy_history"])
    assert np.all(np.diff(hist) <= 0)


def test_two_solutions_above_multiplicity_bound(flat16, above):
    p, s = above
    low = minimize(flat16, p, G, flat16.constant(s))
    assert low.converged and low.classification is Classification.NEGATIVE_ENERGY_MIN
    mp = mountain_pass(flat16, p, G)
    assert mp.converged and mp.classification is Classification.MOUNTAIN_PASS
    assert mp.energy.total > 0 > low.energy.total
    assert mp.grad_norm <= 1e-6
    assert h1_distance(flat16, low.u, mp.u) > 1e-3
    for rep in (low, mp):
        assert weak_form_residual(flat16, p, G, rep.u).worst <= 1e-6
        assert rep.u.min() >= -1e-6
    # a constant solution u = c must satisfy c + c^3 = lambda f(c)
    c = mp.u.values.mean()
    assert c + c ** 3 == pytest.approx(p.lam * float(G(np.array(c))), rel=1e-8)


def test_minimizer_level_matches_constant_scan(flat16, above):
    p, s = above
    low = minimize(flat16, p, G, flat16.constant(s))
    t = np.linspace(0.01, 6, 200001)
    assert low.energy.total == pytest.approx(constant_energy(t, 1, 1, p.lam, G.primitive).min(), rel=1e-7)


@pytest.mark.parametrize("nl", sublinear_catalog(), ids=lambda n: f"{n.kind}{n.params}")
def test_catalog_mountain_pass(nl, flat16):
    cF, _ = compute_cF(nl, 1.0, 1.0)
    p = uniform_params(flat16, lam=1.1 / cF)
    mp = mountain_pass(flat16, p, nl)
    assert mp.converged and mp.energy.total > 0 and mp.grad_norm <= 1e-6


def test_mountain_pass_needs_negative_endpoint(flat16):
    p = uniform_params(flat16, lam=1.0)
    with pytest.raises(ValueError):
        mountain_pass(flat16, p, zero(), flat16.constant(1.0))
    from smvar.errors import SolverError

    with pytest.raises(SolverError):
        default_endpoint(flat16, p, zero())


def test_default_endpoint_negative(flat16, above):
    p, _ = above
    w = default_endpoint(flat16, p, G)
    assert energy(flat16, p, G, w).total < 0


def test_superlinear_second_solution(flat16):
    nl = ar_power(5.0)
    lam = 0.5 * 0.426082
    p = uniform_params(flat16, lam=lam, psi_mode="lambda_constant")
    local = minimize(flat16, p, nl, random_field(flat16, np.random.default_rng(2), 2, 0.05, 0.05))
    assert local.classification is Classification.TRIVIAL
    mp = mountain_pass(flat16, p, nl)
    assert mp.converged and mp.classification is Classification.MOUNTAIN_PASS
    assert weak_form_residual(flat16, p, nl, mp.u).worst <= 1e-6


def test_determinism(flat16, above):
    p, s = above
    a = mountain_pass(flat16, p, G)
    b = mountain_pass(flat16, p, G)
    assert np.array_equal(a.u.values, b.u.values) and a.energy.total == b.energy.total


def test_multiwell_three_solutions(flat16):
    nl = synthetic_multiwell(1.0, 3)
    lam = 1e-3
    p = uniform_params(flat16, e=lam, lam=lam, mu0=1.0, psi_mode="lambda_alpha_plus_mu0_beta")
    res = multi_start_deflated(flat16, p, nl, SolverConfig(), 8, None, (-3.0, 5.0))
    comps = phi_mu_components(nl, 1.0, (-3.0, 5.0))
    assert res.tau == pytest.approx(comps.min_value + 0.1)
    assert len(res.solutions) >= 3 and res.n_below_tau >= 3
    for rep in res.solutions:
        assert rep.converged and weak_form_residual(flat16, p, nl, rep.u).worst <= 1e-6


def test_multiwell_lambda_zero_gives_exact_wells(flat16):
    nl = synthetic_multiwell(1.0, 3)
    p = uniform_params(flat16, e=0.0, lam=0.0, mu0=1.0, psi_mode="lambda_alpha_plus_mu0_beta")
    res = multi_start_deflated(flat16, p, nl, SolverConfig(), 6, None, (-3.0, 5.0))
    centers = sorted(float(r.u.values.mean()) for r in res.solutions)
    np.testing.assert_allclose(centers, [0.0, 1.0, 2.0], atol=1e-6)


def test_single_well_single_cluster(flat16):
    p = uniform_params(flat16, e=0.01, lam=0.01, mu0=0.5, psi_mode="lambda_alpha_plus_mu0_beta")
    res = multi_start_deflated(flat16, p, linear(1.0), SolverConfig(), 6)
    assert len(res.solutions) == 1


def test_multistart_mode_checks(flat16):
    with pytest.raises(ConfigError):
        multi_start_deflated(flat16, uniform_params(flat16), linear())
    p = uniform_params(flat16, e=1.0, lam=0.5, mu0=0.5, psi_mode="lambda_alpha_plus_mu0_beta")
    with pytest.raises(ConfigError):
        multi_start_deflated(flat16, p, linear())


def test_embedding_constant_bounds():
    M16 = build_torus(16)
    k4 = estimate_embedding_constant(M16, 4.0)
    assert k4 >= 1.0
    k4_32 = estimate_embedding_constant(build_torus(32), 4.0)
    assert abs(k4 - k4_32) <= 0.05 * k4
    M = build_torus(8, 2.0)
    assert estimate_embedding_constant(M, 2.0) >= M.volume ** (1 / 2 - 1 / 2) - 1e-12
    assert estimate_embedding_constant(M, 3.0) >= M.volume ** (1 / 3 - 1 / 2) * (1 - 1e-12)
    with pytest.raises(ValueError):
        estimate_embedding_constant(M16, 6.0)


def test_report_to_dict(flat16, above):
    p, s = above
    d = minimize(flat16, p, G, flat16.constant(s)).to_dict()
    assert d["classification"] == "negative_energy_min"
    assert "energy_history" not in d["telemetry"]


def test_unconverged_when_iterations_exhausted(flat16, above):
    p, s = above
    rep = minimize(flat16, p, G, random_field(flat16, np.random.default_rng(0), 2, mean=s),
                   replace(SolverConfig(), max_iters=1))
    assert not rep.converged
