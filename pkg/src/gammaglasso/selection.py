"""Edge selection from posterior samples and the benchmark metrics.

Selection follows the median probability rule: edge (i, j) is excluded
exactly when at least half the posterior draws put |w_ij| below the
threshold.  Metrics match the benchmark conventions: RMSE/AL/CP over the
strict lower triangle, TPR/FPR/FDR of a selected edge set against the
truth's nonzero support.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .core import PrecisionMatrix
from .wbb import PosteriorSample

DEFAULT_EDGE_EPS = 1e-2


@dataclass(frozen=True)
class EdgeSet:
    """Selected unordered pairs (0-based, i < j) with their posterior
    inclusion probabilities P(|w_ij| >= eps | Y)."""

    p: int
    edges: frozenset
    include_prob: dict = field(compare=False)
    eps: float = DEFAULT_EDGE_EPS

    def __post_init__(self):
        for (i, j) in self.edges:
            if not (0 <= i < j < self.p):
                raise ValueError(f"edge ({i}, {j}) out of range for p={self.p}")
        for prob in self.include_prob.values():
            if not (0.0 <= prob <= 1.0):
                raise ValueError("inclusion probabilities must be in [0, 1]")

    def adjacency(self) -> np.ndarray:
        adj = np.zeros((self.p, self.p), dtype=bool)
        for (i, j) in self.edges:
            adj[i, j] = adj[j, i] = True
        return adj


@dataclass(frozen=True)
class MetricsReport:
    rmse: float | None = None
    al: float | None = None
    cp: float | None = None
    tpr: float | None = None
    fpr: float | None = None
    fdr: float | None = None

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in ("rmse", "al", "cp", "tpr", "fpr", "fdr")}


def median_probability_select(sample: PosteriorSample, eps: float = DEFAULT_EDGE_EPS) -> EdgeSet:
    """Exclude (i, j) iff the fraction of draws with |w_ij| < eps is >= 0.5."""
    if eps <= 0:
        raise ValueError("eps must be > 0")
    p = sample.p
    edges = set()
    probs = {}
    small = np.abs(sample.draws) < eps
    frac_small = small.mean(axis=0)
    for i in range(p):
        for j in range(i + 1, p):
            probs[(i, j)] = 1.0 - float(frac_small[i, j])
            if frac_small[i, j] < 0.5:
                edges.add((i, j))
    return EdgeSet(p=p, edges=frozenset(edges), include_prob=probs, eps=eps)


def point_threshold_select(est, eps: float = DEFAULT_EDGE_EPS) -> EdgeSet:
    """Edges where a point estimate exceeds eps in magnitude.

    Baseline rule for samplers whose draws carry no exact zeros (the
    continuous-posterior Gibbs chains): threshold the posterior mean the way
    the frequentist baselines threshold their point estimates.
    """
    m = est.values if isinstance(est, PrecisionMatrix) else np.asarray(est)
    p = m.shape[0]
    edges = set()
    probs = {}
    for i in range(p):
        for j in range(i + 1, p):
            hit = abs(m[i, j]) >= eps
            probs[(i, j)] = 1.0 if hit else 0.0
            if hit:
                edges.add((i, j))
    return EdgeSet(p=p, edges=frozenset(edges), include_prob=probs, eps=eps)


def support_edges(omega, threshold: float = 1e-8) -> frozenset:
    """Nonzero off-diagonal support of a matrix as an edge set."""
    m = omega.values if isinstance(omega, PrecisionMatrix) else np.asarray(omega)
    p = m.shape[0]
    return frozenset(
        (i, j) for i in range(p) for j in range(i + 1, p) if abs(m[i, j]) > threshold
    )


def compute_metrics(truth: PrecisionMatrix, est, sample: PosteriorSample | None = None,
                    edges: EdgeSet | None = None) -> MetricsReport:
    """RMSE of the point estimate, interval length/coverage from the sample,
    and selection rates from the edge set; sample- or edge-dependent fields
    are None when the corresponding input is absent."""
    t = truth.values if isinstance(truth, PrecisionMatrix) else np.asarray(truth)
    p = t.shape[0]
    il, jl = np.tril_indices(p, -1)
    rmse = None
    if est is not None:
        e = est.values if isinstance(est, PrecisionMatrix) else np.asarray(est)
        if e.shape != t.shape:
            raise ValueError("estimate and truth dimensions differ")
        rmse = float(np.sqrt(np.mean((t[il, jl] - e[il, jl]) ** 2)))
    al = cp = None
    if sample is not None:
        if sample.p != p:
            raise ValueError("sample and truth dimensions differ")
        q025 = np.quantile(sample.draws, 0.025, axis=0, method="linear")
        q975 = np.quantile(sample.draws, 0.975, axis=0, method="linear")
        al = float(np.mean(q975[il, jl] - q025[il, jl]))
        covered = (q025[il, jl] <= t[il, jl]) & (t[il, jl] <= q975[il, jl])
        cp = float(np.mean(covered))
    tpr = fpr = fdr = None
    if edges is not None:
        if edges.p != p:
            raise ValueError("edge set and truth dimensions differ")
        true_edges = support_edges(t, threshold=0.0)
        all_pairs = {(i, j) for i in range(p) for j in range(i + 1, p)}
        true_zero = all_pairs - true_edges
        selected = set(edges.edges)
        tp = len(selected & true_edges)
        fp = len(selected & true_zero)
        fn = len(true_edges - selected)
        tpr = tp / (tp + fn) if (tp + fn) > 0 else None
        fpr = fp / len(true_zero) if true_zero else None
        fdr = fp / (tp + fp) if (tp + fp) > 0 else 0.0
    return MetricsReport(rmse=rmse, al=al, cp=cp, tpr=tpr, fpr=fpr, fdr=fdr)


def edges_to_json_text(edges: EdgeSet, labels=None, provenance: dict | None = None) -> str:
    """Adjacency-list JSON; node labels default to 1-based indices."""
    if labels is None:
        labels = [str(i + 1) for i in range(edges.p)]
    adjacency = {labels[i]: [] for i in range(edges.p)}
    for (i, j) in sorted(edges.edges):
        adjacency[labels[i]].append(labels[j])
        adjacency[labels[j]].append(labels[i])
    payload = {
        "p": edges.p,
        "eps": edges.eps,
        "nodes": list(labels),
        "adjacency": adjacency,
        "include_prob": {f"{labels[i]}--{labels[j]}": prob
                         for (i, j), prob in sorted(edges.include_prob.items())},
    }
    if provenance:
        payload["provenance"] = provenance
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def edges_to_dot_text(edges: EdgeSet, labels=None, provenance: str | None = None) -> str:
    """Undirected DOT graph of the selected edges."""
    if labels is None:
        labels = [str(i + 1) for i in range(edges.p)]
    lines = []
    if provenance:
        lines.append(f"// {provenance}")
    lines.append("graph precision {")
    for name in labels:
        lines.append(f'    "{name}";')
    for (i, j) in sorted(edges.edges):
        lines.append(f'    "{labels[i]}" -- "{labels[j]}";')
    lines.append("}")
    return "\n".join(lines) + "\n"
