import numpy as np
import pytest


@pytest.fixture(scope="session", autouse=True)
def _warm_numba_kernels():
    """Compile (or load from cache) the hot kernels once per session so the
    timed acceptance budgets measure the algorithms, not JIT compilation."""
    from gammaglasso.gamma_mm import GammaConfig, mm_fit
    from gammaglasso.gibbs import GibbsConfig, bg_gibbs, bt_gibbs
    from gammaglasso.glasso import GlassoConfig, glasso_solve

    rng = np.random.default_rng(0)
    y = rng.standard_normal((12, 3))
    glasso_solve(y.T @ y / 12, GlassoConfig(rho=0.1))
    mm_fit(y, np.ones(13), GammaConfig(gamma=0.1, lam=0.1))
    cfg = GibbsConfig(n_keep=2, n_burn=1)
    bg_gibbs(y, cfg, seed=0)
    bt_gibbs(y, cfg, seed=0)
