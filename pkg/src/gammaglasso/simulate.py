"""Synthetic benchmark data: contamination scenarios over fixed or
graph-structured truth matrices, plus the outlier screen and the robust
normalization used on real data.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import networkx as nx
import numpy as np
from scipy.linalg import solve_triangular
from scipy.stats import chi2

from .core import DataMatrix, PrecisionMatrix

# consistency constant making the MAD estimate sigma for Gaussian data
MAD_SCALE = 1.4826

# fixed 12x12 benchmark truth: sparse support with entries spanning two
# orders of magnitude (upper triangle listed, symmetrized below)
_MATRIX_A_ENTRIES = {
    (0, 0): 0.239, (0, 1): 0.117, (0, 7): 0.031,
    (1, 1): 1.554,
    (2, 2): 0.362, (2, 3): 0.002,
    (3, 3): 0.199, (3, 4): 0.094,
    (4, 4): 0.349, (4, 11): -0.036,
    (5, 5): 0.295, (5, 6): -0.229, (5, 7): 0.002,
    (6, 6): 0.715,
    (7, 7): 0.164, (7, 8): 0.112, (7, 9): -0.028, (7, 10): -0.008,
    (8, 8): 0.518, (8, 9): -0.193, (8, 10): -0.09,
    (9, 9): 0.379, (9, 10): 0.167,
    (10, 10): 0.159,
    (11, 11): 0.207,
}


def matrix_a() -> PrecisionMatrix:
    """The fixed 12-dimensional benchmark precision matrix."""
    m = np.zeros((12, 12))
    for (i, j), v in _MATRIX_A_ENTRIES.items():
        m[i, j] = v
        m[j, i] = v
    return PrecisionMatrix(m)


def matrix_ar2(p: int) -> PrecisionMatrix:
    """AR(2) band: 1 on the diagonal, 0.5 one off, 0.25 two off."""
    if p < 3:
        raise ValueError("AR(2) structure needs p >= 3")
    m = np.eye(p)
    for i in range(p - 1):
        m[i, i + 1] = m[i + 1, i] = 0.5
    for i in range(p - 2):
        m[i, i + 2] = m[i + 2, i] = 0.25
    return PrecisionMatrix(m)


@dataclass(frozen=True)
class GraphSpec:
    """Random-graph truth: small-world (Watts-Strogatz) or scale-free
    (preferential attachment) support with resampled edge weights."""

    family: str
    p: int
    neighborhood: int = 2
    rewire: float = 0.1
    attach: int = 1

    def __post_init__(self):
        if self.family not in {"small-world", "scale-free"}:
            raise ValueError("family must be 'small-world' or 'scale-free'")
        if self.p < 3:
            raise ValueError("p must be >= 3")


def _adjacency(spec: GraphSpec, seed: int) -> np.ndarray:
    if spec.family == "small-world":
        # networkx k counts ring neighbors on both sides
        g = nx.watts_strogatz_graph(spec.p, 2 * spec.neighborhood, spec.rewire, seed=seed)
    else:
        g = nx.barabasi_albert_graph(spec.p, spec.attach, seed=seed)
    return nx.to_numpy_array(g, dtype=np.float64)


def precision_from_adjacency(adj: np.ndarray, rng: np.random.Generator) -> PrecisionMatrix:
    """Weights E_ij ~ U([-0.75,-0.25] u [0.25,0.75]) on adjacency edges,
    symmetrized, then shifted so the smallest eigenvalue is exactly 0.1."""
    adj = np.asarray(adj)
    p = adj.shape[0]
    e = np.zeros((p, p))
    for i in range(p):
        for j in range(p):
            if i != j and adj[i, j] > 0:
                mag = rng.uniform(0.25, 0.75)
                sign = 1.0 if rng.random() < 0.5 else -1.0
                e[i, j] = sign * mag
    e_sym = (e + e.T) / 2.0
    lam_min = float(np.linalg.eigvalsh(e_sym)[0])
    return PrecisionMatrix(e_sym + (0.1 - lam_min) * np.eye(p))


def precision_from_graph(spec: GraphSpec, rng: np.random.Generator) -> PrecisionMatrix:
    adj = _adjacency(spec, seed=int(rng.integers(2 ** 31 - 1)))
    return precision_from_adjacency(adj, rng)


@dataclass(frozen=True)
class ScenarioSpec:
    """Contamination scenario: clean Gaussian rows with an epsilon-fraction
    replaced by the scenario's outlier law."""

    kind: str
    omega: PrecisionMatrix
    n: int
    eps_c: float = 0.1
    eta: float | None = None
    seed: int = 0

    def __post_init__(self):
        if self.kind not in {"a", "b", "c"}:
            raise ValueError("kind must be one of a, b, c")
        if not (0.0 <= self.eps_c < 1.0):
            raise ValueError("contamination ratio must be in [0, 1)")
        if self.kind == "c" and (self.eta is None or self.eta <= 0):
            raise ValueError("kind c needs eta > 0")
        if self.n < 1:
            raise ValueError("n must be >= 1")


def generate(spec: ScenarioSpec, rng: np.random.Generator):
    """Draw the scenario's data; returns (DataMatrix, contamination labels).

    Clean rows are N(0, Omega^-1), drawn by a triangular solve against the
    Cholesky factor of Omega; kind b contaminates with N(0, 30 I) and kind c
    with N(eta * (1,1,1,0,...,0), I).
    """
    p = spec.omega.dim
    chol = spec.omega.chol
    labels = np.zeros(spec.n, dtype=bool)
    if spec.kind != "a" and spec.eps_c > 0:
        labels = rng.random(spec.n) < spec.eps_c
    z = rng.standard_normal((spec.n, p))
    data = np.empty((spec.n, p))
    clean = ~labels
    if np.any(clean):
        data[clean] = solve_triangular(chol.T, z[clean].T, lower=False).T
    if np.any(labels):
        if spec.kind == "b":
            data[labels] = np.sqrt(30.0) * z[labels]
        else:
            shift = np.zeros(p)
            shift[: min(3, p)] = spec.eta
            data[labels] = shift + z[labels]
    return DataMatrix(data), labels


def hotelling_filter(Y: DataMatrix, alpha: float):
    """Flag rows whose Mahalanobis distance against the sample mean and
    covariance exceeds the chi-square(p) upper-alpha quantile.

    Returns (kept DataMatrix, flagged index array).
    """
    if not 0 < alpha < 1:
        raise ValueError("alpha must be in (0, 1)")
    values = Y.values
    n, p = values.shape
    if n <= p:
        raise ValueError("need n > p for an invertible covariance estimate")
    mu = values.mean(axis=0)
    centered = values - mu
    sigma = centered.T @ centered / n
    try:
        sigma_inv = np.linalg.inv(sigma)
    except np.linalg.LinAlgError as err:
        raise ValueError("singular covariance estimate") from err
    dist = np.einsum("ij,jk,ik->i", centered, sigma_inv, centered)
    threshold = chi2.ppf(1.0 - alpha, df=p)
    flagged = np.flatnonzero(dist > threshold)
    kept = np.delete(values, flagged, axis=0)
    if kept.shape[0] == 0:
        raise ValueError("all rows flagged as outliers")
    return DataMatrix(kept), flagged


def mad_normalize(Y: DataMatrix) -> DataMatrix:
    """Column-wise (y - median) / (1.4826 * MAD)."""
    values = Y.values
    med = np.median(values, axis=0)
    mad = np.median(np.abs(values - med), axis=0)
    if np.any(mad <= 0):
        bad = int(np.flatnonzero(mad <= 0)[0])
        raise ValueError(f"column {bad + 1} has zero median absolute deviation")
    return DataMatrix((values - med) / (MAD_SCALE * mad))
