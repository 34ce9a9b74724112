"""Exact draws from the determinantal hypergraph distribution.

The reference sampler sweeps the nodes once.  At node i it includes the
node with the current conditional inclusion probability (the (i, i) entry
of a running residual matrix, initially the marginal kernel K), then folds
the decision into the residual with a rank-1 update:

    residual <- residual - column_i row_i / pivot,

where the pivot is the inclusion probability itself when the node was
kept and that probability minus one when it was dropped.  The residual's
diagonal always carries the exact conditional inclusion probabilities
given all earlier decisions, so the chain rule makes the draw exact for
any admissible kernel, nonsymmetric included.
"""

from __future__ import annotations

import numpy as np

from .exceptions import DegenerateKernelError
from .model import ModelParams, marginal_kernel

# Pivots smaller than this cannot be conditioned on reliably.
PIVOT_TOL = 1e-12

# Per-chunk residual memory budget for batch sampling, in matrix entries.
_CHUNK_ENTRY_BUDGET = 8_000_000
_CHUNK_MAX_DRAWS = 65_536


def sample_hyperedge(L, rng: np.random.Generator) -> tuple[int, ...]:
    """Draw one node set from the distribution of the kernel L.

    Consumes exactly n uniforms from ``rng``, one per node, in node order.
    """
    K = marginal_kernel(L)
    n = K.shape[0]
    A = K.copy()
    keep = []
    for i in range(n):
        p = A[i, i]
        take = rng.random() < min(max(p, 0.0), 1.0)
        if take:
            keep.append(i)
        if i == n - 1:
            break
        pivot = p if take else p - 1.0
        if abs(pivot) < PIVOT_TOL:
            raise DegenerateKernelError(
                f"degenerate pivot {pivot!r} while conditioning on node {i}"
            )
        A[i + 1 :, i + 1 :] -= np.outer(A[i + 1 :, i], A[i, i + 1 :]) / pivot
    return tuple(keep)


def _default_chunk(n: int, m: int) -> int:
    return max(1, min(m, _CHUNK_MAX_DRAWS, _CHUNK_ENTRY_BUDGET // max(1, n * n)))


def sample_batch(L, m: int, seed, chunk_size: int | None = None) -> list[tuple[int, ...]]:
    """Draw m independent node sets from the kernel L, deterministically in seed.

    All per-draw uniforms come from one seeded stream consumed in draw-major,
    node-minor order, so the output does not depend on the chunking used to
    vectorize the residual updates.
    """
    if m < 1:
        raise ValueError(f"number of draws must be >= 1, got {m}")
    L = np.asarray(L, dtype=float)
    K = marginal_kernel(L)
    n = K.shape[0]
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    rng = np.random.default_rng(ss)
    chunk = chunk_size or _default_chunk(n, m)
    out: list[tuple[int, ...]] = []
    done = 0
    while done < m:
        b = min(chunk, m - done)
        U = rng.random((b, n))
        out.extend(_sample_chunk(K, U))
        done += b
    return out


def _sample_chunk(K, U) -> list[tuple[int, ...]]:
    b, n = U.shape
    A = np.repeat(K[None, :, :], b, axis=0)
    taken = np.zeros((b, n), dtype=bool)
    for i in range(n):
        p = A[:, i, i]
        take = U[:, i] < np.clip(p, 0.0, 1.0)
        taken[:, i] = take
        if i == n - 1:
            break
        pivot = np.where(take, p, p - 1.0)
        if np.any(np.abs(pivot) < PIVOT_TOL):
            raise DegenerateKernelError(
                f"degenerate pivot while conditioning on node {i}"
            )
        A[:, i + 1 :, i + 1 :] -= (
            A[:, i + 1 :, i, None] * A[:, i, None, i + 1 :] / pivot[:, None, None]
        )
    return [tuple(np.flatnonzero(row)) for row in taken]


def sample_hyperedge_lowrank(params: ModelParams, rng: np.random.Generator) -> tuple[int, ...]:
    """Experimental d x d recursion variant of the sweep sampler.

    Runs the update entirely in the latent dimension via

        Z = (B^2 + I)^{-1} B V,
        W = ((I + gamma C)^{-1} + V^T B (B^2 + I)^{-1} B V)^{-1},
        p_i = z_i^T W z_i,

    with the same pivot bookkeeping as the reference sampler.  Its inclusion
    probabilities omit the diagonal contribution of the popularity term
    (the true marginal splits as diag(beta^2 / (1 + beta^2)) + Z W Z^T), so
    the draws deviate from the exact distribution whenever beta > 0.  Kept
    only for comparison; do not use for estimation or evaluation.
    """
    beta, V, gamma = params.beta, params.V, params.gamma
    n, d = V.shape
    denom = beta**2 + 1.0
    Z = (beta / denom)[:, None] * V
    M = np.eye(d) + gamma * params.C
    W = np.linalg.inv(np.linalg.inv(M) + V.T @ ((beta**2 / denom)[:, None] * V))
    keep = []
    for i in range(n):
        z = Z[i]
        p = float(z @ W @ z)
        take = rng.random() < min(max(p, 0.0), 1.0)
        if take:
            keep.append(i)
        if i == n - 1:
            break
        pivot = p if take else p - 1.0
        if abs(pivot) < PIVOT_TOL:
            raise DegenerateKernelError(
                f"degenerate pivot {pivot!r} while conditioning on node {i}"
            )
        Wz = W @ z
        W = W - np.outer(Wz, z @ W) / pivot
    return tuple(keep)
