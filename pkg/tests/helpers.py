"""Independent reference implementations used as test oracles.

Everything here is written the slow, obvious way — dense matrices,
itertools enumeration, per-edge loops — deliberately sharing no code
with the package internals.  Expected values in the test modules were
frozen from these oracles before the fast paths were wired up.
"""

from __future__ import annotations

import itertools

import numpy as np
from scipy.linalg import orthogonal_procrustes

from ndpp_hypergraph import ModelParams


# ---------------------------------------------------------------------------
# parameter construction


def skew_from_upper_ref(upper, d):
    C = np.zeros((d, d))
    iu = np.triu_indices(d, k=1)
    C[iu] = upper
    return C - C.T


def random_params(
    rng: np.random.Generator,
    n: int,
    d: int,
    gamma: float | None = None,
    beta_scale: float = 1.0,
    symmetric: bool = False,
) -> ModelParams:
    V = rng.standard_normal((n, d))
    V /= np.linalg.norm(V, axis=1, keepdims=True)
    beta = beta_scale * rng.uniform(0.3, 1.5, size=n)
    if symmetric:
        return ModelParams(beta=beta, V=V, c_upper=None, gamma=0.0)
    u = rng.standard_normal(d * (d - 1) // 2)
    u /= np.sqrt(2.0) * np.linalg.norm(u)
    if gamma is None:
        gamma = float(rng.uniform(0.0, 1.0))
    return ModelParams(beta=beta, V=V, c_upper=u, gamma=gamma)


def dense_kernel(beta, V, c_upper, gamma) -> np.ndarray:
    """Kernel assembled by plain matrix products."""
    beta = np.asarray(beta, dtype=float)
    V = np.asarray(V, dtype=float)
    d = V.shape[1]
    B = np.diag(beta)
    C = np.zeros((d, d)) if c_upper is None else skew_from_upper_ref(c_upper, d)
    return B @ V @ V.T @ B + gamma * (B @ V @ C @ V.T @ B) + B @ B


# ---------------------------------------------------------------------------
# exhaustive enumeration


def all_subsets(n):
    for k in range(n + 1):
        yield from itertools.combinations(range(n), k)


def enum_distribution(L) -> dict:
    """Probability of every subset, normalized by the sum of minors.

    Normalizing by the sum (rather than det(L+I)) keeps this independent
    of the identity the production code relies on.
    """
    L = np.asarray(L, dtype=float)
    n = L.shape[0]
    dets = {}
    for e in all_subsets(n):
        sub = L[np.ix_(e, e)]
        dets[e] = float(np.linalg.det(sub)) if e else 1.0
    total = sum(dets.values())
    return {e: v / total for e, v in dets.items()}


def enum_marginal(dist: dict, i: int) -> float:
    return sum(p for e, p in dist.items() if i in e)


def enum_pair_conditional(dist: dict, i: int, j: int) -> float:
    joint = sum(p for e, p in dist.items() if i in e and j in e)
    return joint / enum_marginal(dist, i)


def enum_superset_conditional(dist: dict, e1, e2) -> float:
    """pr(E = e2 | e1 subset of E) by direct enumeration."""
    e1 = set(e1)
    denom = sum(p for e, p in dist.items() if e1.issubset(e))
    return dist[tuple(sorted(e2))] / denom


def mean_size(dist: dict) -> float:
    return sum(len(e) * p for e, p in dist.items())


# ---------------------------------------------------------------------------
# likelihood / gradient


def naive_loglik(beta, V, c_upper, gamma, edges) -> float:
    """Per-edge average log-likelihood via dense per-edge determinants."""
    L = dense_kernel(beta, V, c_upper, gamma)
    n = L.shape[0]
    total = 0.0
    for e in edges:
        if len(e) == 0:
            continue  # det of the empty minor is 1
        sign, logdet = np.linalg.slogdet(L[np.ix_(e, e)])
        if sign <= 0:
            raise ValueError(f"nonpositive minor on edge {e}")
        total += logdet
    sign, lognorm = np.linalg.slogdet(L + np.eye(n))
    assert sign > 0
    return total / len(edges) - lognorm


def fd_gradient(beta, V, c_upper, gamma, edges, step=1e-6):
    """Central finite differences of naive_loglik in ambient coordinates.

    Returns (g_beta, g_V, g_upper, g_gamma) matching the layout of the
    analytic gradient.  c_upper may be None for the symmetric model.
    """
    beta = np.asarray(beta, dtype=float)
    V = np.asarray(V, dtype=float)

    def at(b, v, u, g):
        return naive_loglik(b, v, u, g, edges)

    g_beta = np.zeros_like(beta)
    for i in range(beta.size):
        bp, bm = beta.copy(), beta.copy()
        bp[i] += step
        bm[i] -= step
        g_beta[i] = (at(bp, V, c_upper, gamma) - at(bm, V, c_upper, gamma)) / (2 * step)

    g_V = np.zeros_like(V)
    for i in range(V.shape[0]):
        for j in range(V.shape[1]):
            vp, vm = V.copy(), V.copy()
            vp[i, j] += step
            vm[i, j] -= step
            g_V[i, j] = (at(beta, vp, c_upper, gamma) - at(beta, vm, c_upper, gamma)) / (2 * step)

    if c_upper is None:
        return g_beta, g_V, None, 0.0

    c_upper = np.asarray(c_upper, dtype=float)
    g_u = np.zeros_like(c_upper)
    for i in range(c_upper.size):
        up, um = c_upper.copy(), c_upper.copy()
        up[i] += step
        um[i] -= step
        g_u[i] = (at(beta, V, up, gamma) - at(beta, V, um, gamma)) / (2 * step)

    g_gamma = (at(beta, V, c_upper, gamma + step) - at(beta, V, c_upper, gamma - step)) / (2 * step)
    return g_beta, g_V, g_u, g_gamma


# ---------------------------------------------------------------------------
# alignment


def exhaustive_v_error(v_hat, v_star):
    """min over all 2^n sign patterns (Procrustes per pattern)."""
    v_hat = np.asarray(v_hat, dtype=float)
    v_star = np.asarray(v_star, dtype=float)
    n = v_star.shape[0]
    denom = np.linalg.norm(v_star)
    best = np.inf
    for bits in itertools.product((1.0, -1.0), repeat=n):
        s = np.array(bits)
        sv = s[:, None] * v_star
        O, _ = orthogonal_procrustes(sv, v_hat)
        err = np.linalg.norm(v_hat - sv @ O) / denom
        best = min(best, err)
    return best


def exhaustive_l_error(l_hat, l_star):
    l_hat = np.asarray(l_hat, dtype=float)
    l_star = np.asarray(l_star, dtype=float)
    n = l_star.shape[0]
    denom = np.linalg.norm(l_star)
    best = np.inf
    for bits in itertools.product((1.0, -1.0), repeat=n):
        s = np.array(bits)
        err = np.linalg.norm(s[:, None] * l_hat * s[None, :] - l_star) / denom
        best = min(best, err)
    return best


# ---------------------------------------------------------------------------
# misc

def vmf3_mean_cosine(kappa: float) -> float:
    """E[mu . v] for the 3-sphere law: coth(kappa) - 1/kappa."""
    return 1.0 / np.tanh(kappa) - 1.0 / kappa


def edges_to_counts_arrays(edges):
    """Collapse an edge list to (distinct edges, multiplicities)."""
    seen: dict = {}
    for e in edges:
        key = tuple(sorted(e))
        seen[key] = seen.get(key, 0) + 1
    ordered = sorted(seen)
    return ordered, np.array([seen[e] for e in ordered])
