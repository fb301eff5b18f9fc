import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import dense_conformal_laplacian, dense_flat_laplacian, dense_maxwell
from smvar.manifold import build_torus, l2_norm, laplace_beltrami, random_field, solve_screened
from smvar.maxwell import (
    PhiCache,
    check_convexity,
    check_monotone,
    check_scaling,
    check_symmetry,
    coupling_energy,
    h1_phi_sq,
    phi_array,
    solve_maxwell,
)


@pytest.mark.parametrize("which", ["flat", "conformal"])
def test_dense_direct_solve_agrees(which, flat8, conformal8, rng):
    M = flat8 if which == "flat" else conformal8
    A = dense_flat_laplacian(8) if which == "flat" else dense_conformal_laplacian(8, 1.0, M.psi)
    for q in (1.0, 0.3):
        u = random_field(M, rng, 3, mean=0.5)
        sol = solve_maxwell(M, u, q)
        ref = dense_maxwell(A, u.values, q)
        assert np.max(np.abs(sol.phi.values - ref)) <= 1e-9


def test_manufactured_recovery_linear_source(flat16):
    # 2 + sin(2 pi x) makes the source -Delta phi* + phi* change sign, so it is fed to
    # the screened solve directly rather than through u^2
    phi_star = flat16.from_function(lambda x, y, z: 2 + np.sin(2 * np.pi * x))
    src = flat16.from_function(lambda x, y, z: 2 + (4 * np.pi ** 2 + 1) * np.sin(2 * np.pi * x))
    back = solve_screened(flat16, 1.0, src)
    assert l2_norm(flat16, back - phi_star) <= 1e-10


def test_manufactured_recovery_through_u(flat16):
    amp = 0.04
    phi_star = flat16.from_function(lambda x, y, z: 2 + amp * np.sin(2 * np.pi * x))
    src = 2 + amp * (4 * np.pi ** 2 + 1) * np.sin(2 * np.pi * flat16.coordinates()[0])
    assert src.min() > 0
    u = flat16.field(np.sqrt(src))
    sol = solve_maxwell(flat16, u, 1.0)
    assert l2_norm(flat16, sol.phi - phi_star) <= 1e-10
    assert sol.residual_norm <= 1e-10


def test_constants(flat16):
    np.testing.assert_allclose(solve_maxwell(flat16, flat16.constant(3.0), 1.0).phi.values, 9.0, rtol=1e-13)
    zero = solve_maxwell(flat16, flat16.constant(3.0), 0.0)
    assert np.all(zero.phi.values == 0) and zero.iterations == 0
    sol = solve_maxwell(flat16, flat16.constant(1.0), 2.0)
    assert coupling_energy(flat16, flat16.constant(1.0), sol) == pytest.approx(2.0, rel=1e-13)
    t, q = 1.3, 0.7
    M2 = build_torus(8, 1.5)
    u = M2.constant(t)
    assert coupling_energy(M2, u, solve_maxwell(M2, u, q)) == pytest.approx(q * t ** 4 * M2.volume, rel=1e-12)


def test_negative_q_rejected(flat8):
    with pytest.raises(ValueError):
        solve_maxwell(flat8, flat8.constant(1.0), -1.0)


def test_conformal_residual_small(conformal8, rng):
    sol = solve_maxwell(conformal8, random_field(conformal8, rng, 2, mean=1.0), 1.0)
    assert sol.residual_norm < 1e-9 and sol.iterations > 0
    tel = sol.telemetry()
    assert tel["phi_min"] >= 0 and set(tel) == {"residual_norm", "iterations", "phi_min", "phi_max"}


def test_phi_nonnegative_and_positive(flat16, conformal8, rng):
    for M in (flat16, conformal8):
        u = random_field(M, rng, 2, mean=0.3)
        phi = solve_maxwell(M, u, 1.0).phi
        assert phi.min() > 0


def test_symmetry_constants(flat16):
    trip = check_symmetry(flat16, flat16.constant(1.0), flat16.constant(2.0), 1.0)
    np.testing.assert_allclose(trip, (4.0, 4.0, 4.0), rtol=1e-12)


def test_identity_edge_cases(flat16, rng):
    u, v = random_field(flat16, rng), random_field(flat16, rng)
    assert check_monotone(flat16, u, u, 1.0) == 0.0
    assert check_monotone(flat16, u, flat16.zeros(), 1.0) == pytest.approx(
        coupling_energy(flat16, u, solve_maxwell(flat16, u, 1.0)))
    lhs, mid, rhs = check_symmetry(flat16, u, u, 1.0)
    assert lhs == pytest.approx(h1_phi_sq(flat16, solve_maxwell(flat16, u, 1.0).phi), rel=1e-12)
    assert lhs == pytest.approx(mid, rel=1e-12) and mid == rhs
    assert check_scaling(flat16, u, 0.0, 1.0) == 0.0
    assert check_scaling(flat16, u, 1.0, 1.0) == 0.0
    assert check_scaling(flat16, u, 2.5, 1.0) <= 1e-10
    for t in (0.0, 1.0):
        l, r = check_convexity(flat16, u, v, t, 1.0)
        assert l == pytest.approx(r, rel=1e-12)
    l, r = check_convexity(flat16, u, u, 0.4, 1.0)
    assert l == pytest.approx(r, rel=1e-12)
    with pytest.raises(ValueError):
        check_convexity(flat16, u, v, 1.5, 1.0)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1), q=st.floats(0.01, 10.0), t=st.floats(0.0, 1.0),
       conformal=st.booleans())
def test_identities_property(seed, q, t, conformal, ):
    M = _CONF if conformal else _FLAT
    rng = np.random.default_rng(seed)
    u = random_field(M, rng, 3, amplitude=rng.uniform(0.1, 3), mean=rng.normal())
    v = random_field(M, rng, 3, amplitude=rng.uniform(0.1, 3), mean=rng.normal())
    sol = solve_maxwell(M, u, q)
    a, b = coupling_energy(M, u, sol), h1_phi_sq(M, sol.phi) / q
    assert a == pytest.approx(b, rel=1e-8)
    trip = check_symmetry(M, u, v, q)
    assert max(trip) - min(trip) <= 1e-8 * max(map(abs, trip))
    scale = a + coupling_energy(M, v, solve_maxwell(M, v, q))
    assert check_monotone(M, u, v, q) >= -1e-10 * max(scale, 1.0)
    lhs, rhs = check_convexity(M, u, v, t, q)
    assert lhs <= rhs + 1e-9 * max(abs(rhs), 1.0)


_FLAT = build_torus(8)
_CONF = build_torus(8, 1.0, 0.2 * np.cos(2 * np.pi * _FLAT.coordinates()[0]))


def test_cache_hits_and_eviction(flat8, rng):
    cache = PhiCache(maxsize=2)
    fields = [random_field(flat8, rng).values for _ in range(3)]
    first = phi_array(flat8, fields[0], 1.0, cache)
    again = phi_array(flat8, fields[0], 1.0, cache)
    assert again is first and cache.hits == 1
    assert not again.flags.writeable
    phi_array(flat8, fields[0], 2.0, cache)
    phi_array(flat8, fields[1], 1.0, cache)
    phi_array(flat8, fields[2], 1.0, cache)
    assert len(cache._data) == 2
    assert cache.misses == 4
    np.testing.assert_array_equal(first, solve_maxwell(flat8, flat8.field(fields[0]), 1.0).phi.values)


def test_cache_thread_safety(flat8, rng):
    from concurrent.futures import ThreadPoolExecutor

    cache = PhiCache(maxsize=8)
    fields = [random_field(flat8, rng).values for _ in range(4)]
    with ThreadPoolExecutor(4) as pool:
        out = list(pool.map(lambda i: phi_array(flat8, fields[i % 4], 1.0, cache), range(64)))
    for i, phi in enumerate(out):
        np.testing.assert_array_equal(phi, phi_array(flat8, fields[i % 4], 1.0))


def test_laplacian_consistency_of_solution(conformal8, rng):
    u = random_field(conformal8, rng, 2, mean=1.0)
    phi = solve_maxwell(conformal8, u, 0.5).phi
    back = -laplace_beltrami(conformal8, phi).values + phi.values
    np.testing.assert_allclose(back, 0.5 * u.values ** 2, atol=1e-9)
