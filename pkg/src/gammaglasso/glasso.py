"""L1-penalized precision estimation: min over PD matrices of
tr(S Omega) - log|Omega| + rho * ||Omega||_1 (all entries, diagonal included).

The solver is a primal blockwise coordinate descent: one column/row of Omega
at a time, with the off-diagonal block solved by a soft-thresholding lasso
loop and the diagonal by its closed form.  Both Omega and W = Omega^-1 are
kept current (W via rank-one block identities), so the primal objective is
available, and monotone, sweep by sweep.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .core import (
    NotPositiveDefiniteError,
    PrecisionMatrix,
    SampleCov,
    cholesky_pd,
    symmetrize,
)


class SingularInputError(ValueError):
    """rho = 0 requires a positive-definite S; raised otherwise."""


@dataclass(frozen=True)
class GlassoConfig:
    """Penalty and convergence knobs for glasso_solve."""

    rho: float
    tol: float = 1e-6
    max_outer: int = 500
    max_inner: int = 1000

    def __post_init__(self):
        if self.rho < 0:
            raise ValueError("rho must be >= 0")
        if self.tol <= 0:
            raise ValueError("tol must be > 0")
        if self.max_outer < 1 or self.max_inner < 1:
            raise ValueError("iteration caps must be >= 1")


@dataclass(frozen=True)
class GlassoSolution:
    omega: PrecisionMatrix
    w_cov: SampleCov
    iterations: int
    converged: bool
    objective_trace: np.ndarray


@njit(cache=True, nogil=True)
def _objective(S, rho, omega):
    p = S.shape[0]
    tr = 0.0
    l1 = 0.0
    for i in range(p):
        for j in range(p):
            tr += S[i, j] * omega[i, j]
            l1 += abs(omega[i, j])
    chol = np.linalg.cholesky(omega)
    ld = 0.0
    for i in range(p):
        ld += np.log(chol[i, i])
    return tr - 2.0 * ld + rho * l1


@njit(cache=True, nogil=True)
def _glasso_cd(S, rho, tol, max_outer, max_inner, omega, w, obj_trace):
    """Blockwise coordinate descent; omega and w are updated in place.

    Requires w == inv(omega) on entry (warm start).  Returns
    (sweeps, converged); obj_trace[k] holds the objective after sweep k,
    obj_trace[0] the starting value.
    """
    p = S.shape[0]
    obj_trace[0] = _objective(S, rho, omega)
    if p == 1:
        omega[0, 0] = 1.0 / (S[0, 0] + rho)
        w[0, 0] = S[0, 0] + rho
        obj_trace[1] = _objective(S, rho, omega)
        return 1, True

    off = 0.0
    dia = 0.0
    for i in range(p):
        dia += abs(S[i, i])
        for j in range(p):
            if i != j:
                off += abs(S[i, j])
    off /= p * (p - 1)
    dia /= p
    thresh = tol * (off + 1e-12)
    # the off-diagonal of W can be exact after a single update (it is pinned
    # to s12 -/+ rho at active entries), so the diagonal change is tracked too
    thresh_diag = tol * (dia + 1e-12)
    inner_tol = 0.1 * thresh

    pm1 = p - 1
    idx = np.empty(pm1, np.int64)
    A = np.empty((pm1, pm1))
    beta = np.empty(pm1)
    v = np.empty(pm1)
    w12 = np.empty(pm1)
    s12 = np.empty(pm1)
    w_prev = np.empty((p, p))

    sweeps = 0
    converged = False
    for sweep in range(max_outer):
        for i in range(p):
            for j in range(p):
                w_prev[i, j] = w[i, j]
        for col in range(p):
            k = 0
            for i in range(p):
                if i != col:
                    idx[k] = i
                    k += 1
            w22 = w[col, col]
            for a in range(pm1):
                ia = idx[a]
                s12[a] = S[ia, col]
                w12[a] = w[ia, col]
            # A = inv(Omega_11) from the block-inverse identity on W
            for a in range(pm1):
                ia = idx[a]
                for b in range(pm1):
                    A[a, b] = w[ia, idx[b]] - w12[a] * w12[b] / w22
            c = S[col, col] + rho
            for a in range(pm1):
                beta[a] = omega[idx[a], col]
            for a in range(pm1):
                acc = 0.0
                for b in range(pm1):
                    acc += A[a, b] * beta[b]
                v[a] = acc
            # lasso on beta: min (c/2) b'Ab + s12'b + rho ||b||_1
            for _ in range(max_inner):
                dmax = 0.0
                for kk in range(pm1):
                    bk = beta[kk]
                    g = s12[kk] + c * (v[kk] - A[kk, kk] * bk)
                    if g > rho:
                        bnew = -(g - rho) / (c * A[kk, kk])
                    elif g < -rho:
                        bnew = -(g + rho) / (c * A[kk, kk])
                    else:
                        bnew = 0.0
                    d = bnew - bk
                    if d != 0.0:
                        beta[kk] = bnew
                        for a in range(pm1):
                            v[a] += A[a, kk] * d
                        if abs(d) > dmax:
                            dmax = abs(d)
                if dmax <= inner_tol:
                    break
            # exact block minimum for the diagonal, then refresh Omega and W
            t = 1.0 / c
            quad = 0.0
            for a in range(pm1):
                quad += beta[a] * v[a]
            omega[col, col] = t + quad
            for a in range(pm1):
                ia = idx[a]
                omega[ia, col] = beta[a]
                omega[col, ia] = beta[a]
            w[col, col] = c
            for a in range(pm1):
                ia = idx[a]
                w[ia, col] = -c * v[a]
                w[col, ia] = -c * v[a]
                for b in range(pm1):
                    w[ia, idx[b]] = A[a, b] + c * v[a] * v[b]
        sweeps = sweep + 1
        obj_trace[sweeps] = _objective(S, rho, omega)
        dsum = 0.0
        ddiag = 0.0
        for i in range(p):
            ddiag += abs(w[i, i] - w_prev[i, i])
            for j in range(p):
                if i != j:
                    dsum += abs(w[i, j] - w_prev[i, j])
        if dsum / (p * (p - 1)) < thresh and ddiag / p < thresh_diag:
            converged = True
            break
    return sweeps, converged


def glasso_solve(S, cfg: GlassoConfig, warm_omega: np.ndarray | None = None,
                 warm_w: np.ndarray | None = None) -> GlassoSolution:
    """Solve the penalized problem for sample covariance S.

    `warm_omega`/`warm_w` (a consistent Omega, Omega^-1 pair) restart the
    sweep from a previous iterate; by default W0 = S + rho*I.
    """
    S_arr = S.values if isinstance(S, SampleCov) else symmetrize(np.asarray(S, dtype=np.float64))
    p = S_arr.shape[0]
    if cfg.rho == 0.0:
        try:
            cholesky_pd(S_arr)
        except NotPositiveDefiniteError as err:
            raise SingularInputError("rho = 0 requires positive-definite S") from err
    if warm_omega is not None:
        omega = symmetrize(np.asarray(warm_omega, dtype=np.float64)).copy()
        w = np.asarray(warm_w, dtype=np.float64).copy() if warm_w is not None else np.linalg.inv(omega)
    else:
        w = S_arr + cfg.rho * np.eye(p)
        omega = np.linalg.inv(w)
    obj_trace = np.empty(cfg.max_outer + 1)
    sweeps, converged = _glasso_cd(
        S_arr, cfg.rho, cfg.tol, cfg.max_outer, cfg.max_inner, omega, w, obj_trace
    )
    return GlassoSolution(
        omega=PrecisionMatrix(omega),
        w_cov=SampleCov(w),
        iterations=sweeps,
        converged=converged,
        objective_trace=obj_trace[: sweeps + 1].copy(),
    )


def glasso_objective(S, rho: float, omega) -> float:
    """tr(S Omega) - log|Omega| + rho ||Omega||_1, the solver's objective."""
    S_arr = S.values if isinstance(S, SampleCov) else np.asarray(S, dtype=np.float64)
    om = omega.values if isinstance(omega, PrecisionMatrix) else np.asarray(omega, dtype=np.float64)
    return float(_objective(S_arr, rho, om))


def kkt_violation(S, rho: float, omega, zero_tol: float = 1e-8) -> float:
    """Max violation of the stationarity conditions at `omega`.

    Off-diagonals: |(S - Omega^-1)_ij| <= rho where omega_ij = 0, and
    (S - Omega^-1)_ij + rho*sign(omega_ij) = 0 elsewhere; diagonal:
    (S - Omega^-1)_ii + rho = 0.
    """
    S_arr = S.values if isinstance(S, SampleCov) else np.asarray(S, dtype=np.float64)
    om = omega.values if isinstance(omega, PrecisionMatrix) else np.asarray(omega, dtype=np.float64)
    grad = S_arr - np.linalg.inv(om)
    p = om.shape[0]
    worst = 0.0
    for i in range(p):
        worst = max(worst, abs(grad[i, i] + rho))
        for j in range(p):
            if i == j:
                continue
            if abs(om[i, j]) <= zero_tol:
                worst = max(worst, abs(grad[i, j]) - rho)
            else:
                worst = max(worst, abs(grad[i, j] + rho * np.sign(om[i, j])))
    return float(worst)
