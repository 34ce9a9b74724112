"""Hyperedge-prediction evaluation: discrimination and completion metrics.

Two evaluation tasks:

* discrimination (AUC): each observed test edge is paired with
  size-matched uniformly drawn negative node sets; edges are scored by
  their unnormalized log minor log det(L_e) and ranked jointly, ties
  counted half;
* completion (mean percentile rank): one uniformly chosen member of each
  test edge is masked, every node outside the remaining members is scored
  as a candidate completion by det(L_{rest + candidate}), and the masked
  node's percentile rank among the other candidates is averaged.  Because
  the conditional normalizer is candidate-independent, this ranking equals
  ranking by the exact conditional probability.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import ModelParams, build_kernel, validate_edge


@dataclass
class EvalReport:
    """Per-repeat metric values with their aggregate and a pooled rank curve."""

    aucs: list[float]
    mprs: list[float]
    auc_mean: float
    auc_std: float
    mpr_mean: float
    mpr_std: float
    rank_curve: list[tuple[float, float]]

    @classmethod
    def from_repeats(cls, aucs, mprs, ranks_per_repeat) -> "EvalReport":
        aucs = [float(a) for a in aucs]
        mprs = [float(p) for p in mprs]
        pooled = [r for ranks in ranks_per_repeat for r in ranks]
        std = lambda xs: float(np.std(xs, ddof=1)) if len(xs) > 1 else 0.0  # noqa: E731
        return cls(
            aucs=aucs,
            mprs=mprs,
            auc_mean=float(np.mean(aucs)),
            auc_std=std(aucs),
            mpr_mean=float(np.mean(mprs)),
            mpr_std=std(mprs),
            rank_curve=rank_curve(pooled),
        )


def average_ranks(values) -> np.ndarray:
    """Ranks 1..N with ties assigned their average rank."""
    values = np.asarray(values, dtype=float)
    order = np.argsort(values, kind="stable")
    ranks = np.empty(len(values))
    sorted_vals = values[order]
    i = 0
    while i < len(values):
        j = i
        while j + 1 < len(values) and sorted_vals[j + 1] == sorted_vals[i]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def auc_from_scores(positive_scores, negative_scores) -> float:
    """Rank-statistic AUC with half-credit for ties."""
    pos = np.asarray(positive_scores, dtype=float)
    neg = np.asarray(negative_scores, dtype=float)
    if len(pos) == 0 or len(neg) == 0:
        raise ValueError("need at least one positive and one negative score")
    ranks = average_ranks(np.concatenate([pos, neg]))
    rank_sum = ranks[: len(pos)].sum()
    return float((rank_sum - len(pos) * (len(pos) + 1) / 2.0) / (len(pos) * len(neg)))


def percentile_rank(candidate_scores, true_index: int) -> float:
    """Fraction of the other candidates scored below the true one (ties half)."""
    scores = np.asarray(candidate_scores, dtype=float)
    if len(scores) < 2:
        raise ValueError("percentile rank needs at least two candidates")
    s_true = scores[true_index]
    others = np.delete(scores, true_index)
    below = np.count_nonzero(others < s_true)
    ties = np.count_nonzero(others == s_true)
    return float((below + 0.5 * ties) / len(others))


def _log_minor_scores(L, edges) -> np.ndarray:
    """Batched log det(L_e); nonpositive minors score -inf."""
    scores = np.empty(len(edges))
    by_size: dict[int, list[int]] = {}
    for pos, e in enumerate(edges):
        by_size.setdefault(len(e), []).append(pos)
    for k, rows in by_size.items():
        if k == 0:
            scores[rows] = 0.0
            continue
        idx = np.array([edges[p] for p in rows], dtype=np.int64)
        sign, logdet = np.linalg.slogdet(L[idx[:, :, None], idx[:, None, :]])
        vals = np.where(sign > 0, logdet, -np.inf)
        scores[rows] = vals
    return scores


def auc(
    params: ModelParams,
    test_edges,
    seed,
    negatives_per_positive: int = 1,
    scorer=None,
) -> float:
    """Discrimination AUC of observed test edges against uniform negatives.

    For each test edge of size k, draws ``negatives_per_positive`` uniform
    k-subsets of the node universe (without replacement within a draw).
    ``scorer`` may replace the default log-minor score; it receives a node
    tuple and returns a float.
    """
    n = params.n
    edges = [validate_edge(e, n) for e in test_edges]
    if not edges:
        raise ValueError("no test edges")
    if negatives_per_positive < 1:
        raise ValueError("need at least one negative per positive")
    for e in edges:
        if len(e) > n:
            raise ValueError(f"edge size {len(e)} exceeds node count {n}")
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    negatives = []
    for e in edges:
        for _ in range(negatives_per_positive):
            negatives.append(tuple(sorted(rng.choice(n, size=len(e), replace=False))))
    if scorer is None:
        L = build_kernel(params)
        pos_scores = _log_minor_scores(L, edges)
        neg_scores = _log_minor_scores(L, negatives)
    else:
        pos_scores = np.array([scorer(e) for e in edges], dtype=float)
        neg_scores = np.array([scorer(e) for e in negatives], dtype=float)
    return auc_from_scores(pos_scores, neg_scores)


def mpr(params: ModelParams, test_edges, seed, scorer=None) -> tuple[float, list[float]]:
    """Mean percentile rank of masked nodes, plus the per-edge rank list.

    Every test edge must have size >= 2 so that masking leaves a nonempty
    context.  Candidates are all nodes outside the remaining members (the
    masked node included).
    """
    n = params.n
    edges = [validate_edge(e, n) for e in test_edges]
    if not edges:
        raise ValueError("no test edges")
    for e in edges:
        if len(e) < 2:
            raise ValueError(f"cannot mask a node of a size-{len(e)} edge")
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    L = None if scorer is not None else build_kernel(params)
    in_base = np.zeros(n, dtype=bool)
    ranks = []
    for e in edges:
        j_star = e[rng.integers(len(e))]
        base = tuple(v for v in e if v != j_star)
        in_base[:] = False
        in_base[list(base)] = True
        candidates = np.flatnonzero(~in_base)
        completed = [tuple(sorted(base + (int(j),))) for j in candidates]
        if scorer is None:
            scores = _log_minor_scores(L, completed)
        else:
            scores = np.array([scorer(c) for c in completed], dtype=float)
        true_pos = int(np.searchsorted(candidates, j_star))
        ranks.append(percentile_rank(scores, true_pos))
    return float(np.mean(ranks)), ranks


def rank_curve(ranks, grid_points: int = 101) -> list[tuple[float, float]]:
    """Proportion of percentile ranks at or above each grid threshold.

    The grid is t = 0.00, 0.01, ..., 1.00 by default; the curve starts at
    exactly 1.0 and is non-increasing.
    """
    ranks = np.asarray(list(ranks), dtype=float)
    if ranks.size == 0:
        raise ValueError("no ranks to summarize")
    out = []
    for t_int in range(grid_points):
        t = t_int / (grid_points - 1)
        out.append((t, float(np.mean(ranks >= t))))
    return out


def evaluate(params: ModelParams, test_edges, seed, negatives_per_positive: int = 1):
    """Convenience wrapper: (auc, mpr, rank list) for one test set."""
    a = auc(params, test_edges, seed, negatives_per_positive=negatives_per_positive)
    p, ranks = mpr(params, test_edges, seed)
    return a, p, ranks
