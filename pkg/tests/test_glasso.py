import itertools

import numpy as np
import pytest

from gammaglasso.core import SampleCov
from gammaglasso.glasso import (
    GlassoConfig,
    SingularInputError,
    glasso_objective,
    glasso_solve,
    kkt_violation,
)


def random_psd(rng, p, n=None):
    n = n or 4 * p
    a = rng.normal(size=(n, p))
    return a.T @ a / n


def test_diagonal_closed_form():
    s = np.diag([1.0, 2.0, 0.5, 3.0])
    sol = glasso_solve(s, GlassoConfig(rho=0.3))
    np.testing.assert_allclose(np.diag(sol.omega.values), 1.0 / (np.diag(s) + 0.3), atol=1e-8)
    off = sol.omega.values - np.diag(np.diag(sol.omega.values))
    assert np.max(np.abs(off)) == 0.0


def test_rho_zero_recovers_inverse():
    rng = np.random.default_rng(0)
    s = random_psd(rng, 5)
    sol = glasso_solve(s, GlassoConfig(rho=0.0, tol=1e-12, max_outer=2000))
    np.testing.assert_allclose(sol.omega.values, np.linalg.inv(s), atol=1e-8)


def test_rho_zero_singular_input():
    a = np.ones((2, 3))
    s = a.T @ a / 2  # rank 1
    with pytest.raises(SingularInputError):
        glasso_solve(s, GlassoConfig(rho=0.0))


def _grid_search_p2(s, rho):
    """Refining dense grid search over (w11, w22, w12); independent oracle."""
    best = (1.0, 1.0, 0.0)
    lo = np.array([0.05, 0.05, -2.0])
    hi = np.array([4.0, 4.0, 2.0])
    for _ in range(6):
        g1 = np.linspace(lo[0], hi[0], 41)
        g2 = np.linspace(lo[1], hi[1], 41)
        g3 = np.linspace(lo[2], hi[2], 41)
        best_val = np.inf
        for w11, w22, w12 in itertools.product(g1, g2, g3):
            det = w11 * w22 - w12 ** 2
            if det <= 1e-12 or w11 <= 0:
                continue
            om = np.array([[w11, w12], [w12, w22]])
            val = (np.sum(s * om) - np.log(det)
                   + rho * (w11 + w22 + 2 * abs(w12)))
            if val < best_val:
                best_val = val
                best = (w11, w22, w12)
        span = (hi - lo) / 8
        center = np.array(best)
        lo = center - span
        hi = center + span
        lo[0] = max(lo[0], 1e-4)
        lo[1] = max(lo[1], 1e-4)
    return np.array([[best[0], best[2]], [best[2], best[1]]])


def test_p2_grid_search_oracle():
    s = np.array([[1.0, 0.5], [0.5, 1.0]])
    sol = glasso_solve(s, GlassoConfig(rho=0.1, tol=1e-10))
    oracle = _grid_search_p2(s, 0.1)
    np.testing.assert_allclose(sol.omega.values, oracle, atol=1e-3)


def test_kkt_conditions_random_instances():
    rng = np.random.default_rng(1)
    for _ in range(10):
        p = rng.integers(2, 7)
        s = random_psd(rng, p)
        rho = float(rng.uniform(0.01, 0.5))
        sol = glasso_solve(s, GlassoConfig(rho=rho, tol=1e-9))
        assert kkt_violation(s, rho, sol.omega) < 1e-5


def test_objective_monotone_and_symmetric_pd():
    rng = np.random.default_rng(2)
    for _ in range(5):
        s = random_psd(rng, 6)
        sol = glasso_solve(s, GlassoConfig(rho=0.1))
        assert np.all(np.diff(sol.objective_trace) <= 1e-10)
        assert np.array_equal(sol.omega.values, sol.omega.values.T)


def test_w_cov_tracks_inverse():
    rng = np.random.default_rng(3)
    s = random_psd(rng, 8)
    sol = glasso_solve(s, GlassoConfig(rho=0.05))
    gap = np.max(np.abs(sol.omega.values @ sol.w_cov.values - np.eye(8)))
    assert gap <= 1e-3


def test_permutation_invariance():
    rng = np.random.default_rng(4)
    s = random_psd(rng, 6)
    perm = rng.permutation(6)
    sol = glasso_solve(s, GlassoConfig(rho=0.15))
    sol_p = glasso_solve(s[np.ix_(perm, perm)], GlassoConfig(rho=0.15))
    inv = np.argsort(perm)
    back = sol_p.omega.values[np.ix_(inv, inv)]
    np.testing.assert_allclose(back, sol.omega.values, atol=1e-6)


def test_sparsity_monotone_in_rho():
    rng = np.random.default_rng(5)
    rhos = [0.02, 0.05, 0.1, 0.2, 0.4]
    for _ in range(20):
        s = random_psd(rng, 5)
        counts = []
        for rho in rhos:
            sol = glasso_solve(s, GlassoConfig(rho=rho))
            off = sol.omega.values[np.triu_indices(5, 1)]
            counts.append(int(np.sum(np.abs(off) > 1e-8)))
        assert all(b <= a for a, b in zip(counts, counts[1:]))


def test_not_converged_flag_returns_best_iterate():
    rng = np.random.default_rng(6)
    s = random_psd(rng, 10)
    sol = glasso_solve(s, GlassoConfig(rho=0.05, tol=1e-14, max_outer=1))
    assert not sol.converged
    assert sol.iterations == 1
    assert np.isfinite(glasso_objective(s, 0.05, sol.omega))


def test_accepts_sample_cov_wrapper():
    rng = np.random.default_rng(7)
    s = SampleCov(random_psd(rng, 3))
    sol = glasso_solve(s, GlassoConfig(rho=0.1))
    assert sol.omega.dim == 3


def test_config_validation():
    with pytest.raises(ValueError):
        GlassoConfig(rho=-0.1)
    with pytest.raises(ValueError):
        GlassoConfig(rho=0.1, tol=0.0)
    with pytest.raises(ValueError):
        GlassoConfig(rho=0.1, max_outer=0)
