import json

import numpy as np
import pytest

from gammaglasso.core import PrecisionMatrix
from gammaglasso.selection import (
    EdgeSet,
    compute_metrics,
    edges_to_dot_text,
    edges_to_json_text,
    median_probability_select,
    point_threshold_select,
    support_edges,
)
from gammaglasso.wbb import PosteriorSample


def make_sample(draws):
    draws = np.asarray(draws, dtype=np.float64)
    return PosteriorSample(draws=draws, method="WBB", gamma=0.1, lam=0.1, seed=0)


def pd_base(p, scale=1.0):
    return scale * np.eye(p)


def test_always_zero_entry_excluded():
    draws = np.stack([pd_base(3) for _ in range(20)])
    sample = make_sample(draws)
    edges = median_probability_select(sample, eps=1e-2)
    assert (0, 1) not in edges.edges
    assert edges.include_prob[(0, 1)] == 0.0


def test_large_entry_included():
    draws = np.stack([pd_base(3) + 0.5 * (np.ones((3, 3)) - np.eye(3)) for _ in range(20)])
    edges = median_probability_select(make_sample(draws), eps=1e-2)
    assert (0, 1) in edges.edges
    assert edges.include_prob[(0, 1)] == 1.0


def test_boundary_half_excluded():
    # exactly half the draws below eps: the >= 0.5 rule excludes
    small = pd_base(2)
    big = pd_base(2) + 0.3 * (np.ones((2, 2)) - np.eye(2))
    draws = np.stack([small] * 10 + [big] * 10)
    edges = median_probability_select(make_sample(draws), eps=1e-2)
    assert (0, 1) not in edges.edges


def test_selection_invariant_to_draw_order():
    rng = np.random.default_rng(0)
    draws = np.stack([pd_base(4) + rng.normal(scale=0.05, size=(4, 4)) for _ in range(30)])
    draws = (draws + draws.transpose(0, 2, 1)) / 2
    sample = make_sample(draws)
    shuffled = make_sample(draws[rng.permutation(30)])
    e1 = median_probability_select(sample)
    e2 = median_probability_select(shuffled)
    assert e1.edges == e2.edges
    assert e1.include_prob == e2.include_prob


def test_rmse_zero_at_truth():
    truth = PrecisionMatrix(np.eye(3) + 0.2)
    m = compute_metrics(truth, truth)
    assert m.rmse == 0.0


def test_rmse_hand_instance():
    truth = np.eye(3)
    truth[1, 0] = truth[0, 1] = 0.5
    truth[2, 0] = truth[0, 2] = 0.0
    truth[2, 1] = truth[1, 2] = 0.25
    est = np.eye(3)
    est[1, 0] = est[0, 1] = 0.4
    est[2, 0] = est[0, 2] = 0.1
    est[2, 1] = est[1, 2] = 0.25
    m = compute_metrics(PrecisionMatrix(truth), est)
    assert m.rmse == pytest.approx(np.sqrt((0.01 + 0.01 + 0.0) / 3), abs=1e-15)


def test_cp_one_when_all_intervals_cover():
    rng = np.random.default_rng(1)
    truth = PrecisionMatrix(np.eye(3))
    draws = np.stack([np.eye(3) + rng.normal(scale=0.01, size=(3, 3)) for _ in range(200)])
    draws = (draws + draws.transpose(0, 2, 1)) / 2
    m = compute_metrics(truth, truth, sample=make_sample(draws))
    assert m.cp == 1.0
    assert m.al > 0


def test_al_matches_manual_type7_quantiles():
    rng = np.random.default_rng(2)
    draws = np.stack([pd_base(3) + rng.normal(scale=0.1, size=(3, 3)) for _ in range(37)])
    draws = (draws + draws.transpose(0, 2, 1)) / 2
    sample = make_sample(draws)
    m = compute_metrics(PrecisionMatrix(np.eye(3)), np.eye(3), sample=sample)
    il, jl = np.tril_indices(3, -1)
    manual = np.mean(
        np.quantile(draws, 0.975, axis=0, method="linear")[il, jl]
        - np.quantile(draws, 0.025, axis=0, method="linear")[il, jl]
    )
    assert m.al == pytest.approx(manual, abs=1e-12)


def test_degenerate_zero_interval_covers_zero_truth_only():
    draws = np.stack([pd_base(2) for _ in range(10)])  # off-diagonal exactly 0
    truth_zero = PrecisionMatrix(np.eye(2))
    truth_nonzero = np.eye(2)
    truth_nonzero[0, 1] = truth_nonzero[1, 0] = 0.3
    m0 = compute_metrics(truth_zero, None, sample=make_sample(draws))
    m1 = compute_metrics(PrecisionMatrix(truth_nonzero), None, sample=make_sample(draws))
    assert m0.cp == 1.0
    assert m1.cp == 0.0
    assert m0.al == 0.0


def test_rates_against_support():
    truth = np.eye(4)
    truth[0, 1] = truth[1, 0] = 0.5
    truth[2, 3] = truth[3, 2] = 0.4
    truth_pm = PrecisionMatrix(truth)
    edges = EdgeSet(p=4, edges=frozenset({(0, 1), (0, 2)}),
                    include_prob={(0, 1): 1.0, (0, 2): 0.8})
    m = compute_metrics(truth_pm, None, edges=edges)
    assert m.tpr == pytest.approx(0.5)      # found (0,1) of {(0,1),(2,3)}
    assert m.fpr == pytest.approx(0.25)     # one of four true zeros
    assert m.fdr == pytest.approx(0.5)
    # TPR + FNR = 1
    fnr = 1 / 2
    assert m.tpr + fnr == 1.0


def test_fdr_zero_when_no_false_positives():
    truth = np.eye(3)
    truth[0, 1] = truth[1, 0] = 0.5
    edges = EdgeSet(p=3, edges=frozenset({(0, 1)}), include_prob={(0, 1): 1.0})
    m = compute_metrics(PrecisionMatrix(truth), None, edges=edges)
    assert m.fpr == 0.0
    assert m.fdr == 0.0


def test_point_threshold_select():
    est = np.eye(3)
    est[0, 1] = est[1, 0] = 0.02
    est[0, 2] = est[2, 0] = 0.005
    edges = point_threshold_select(est, eps=1e-2)
    assert edges.edges == frozenset({(0, 1)})


def test_support_edges_threshold():
    m = np.eye(3)
    m[0, 1] = m[1, 0] = 1e-9
    m[1, 2] = m[2, 1] = 0.2
    assert support_edges(m) == frozenset({(1, 2)})


def test_exports_parse():
    edges = EdgeSet(p=3, edges=frozenset({(0, 2)}), include_prob={(0, 2): 0.9})
    payload = json.loads(edges_to_json_text(edges, labels=["a", "b", "c"]))
    assert payload["adjacency"]["a"] == ["c"]
    dot = edges_to_dot_text(edges, labels=["a", "b", "c"], provenance="prov")
    assert dot.startswith("// prov")
    assert '"a" -- "c";' in dot


def test_edge_set_validation():
    with pytest.raises(ValueError):
        EdgeSet(p=2, edges=frozenset({(0, 5)}), include_prob={})
    with pytest.raises(ValueError):
        EdgeSet(p=3, edges=frozenset(), include_prob={(0, 1): 1.5})
