"""Symmetry-aware comparison of fitted and ground-truth parameters.

Two parameter sets describe the same distribution exactly when they are
linked by a per-node sign flip S (diagonal, entries +-1) and a latent
rotation O (orthogonal d x d):

    V' = S V O^T,  C' = O C O^T,  beta' = beta,  gamma' = gamma,
    L' = S L S.

All error metrics here first resolve that symmetry group, so a perfect
fit reports zero error regardless of which representative the optimizer
landed on.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .exceptions import NumericalWarning
from .model import ModelParams, build_kernel, marginal_kernel

_GREEDY_MAX_PASSES = 100


@dataclass
class AlignmentResult:
    signs: np.ndarray      # (n,) entries +-1
    rotation: np.ndarray   # (d, d) orthogonal
    error: float           # ||V_hat - S V_star O||_F / ||V_star||_F


@dataclass
class AlignedErrors:
    v_error: float
    b_error: float
    gamma_error: float
    c_error: float | None
    l_error: float
    signs: np.ndarray
    rotation: np.ndarray


@dataclass
class ProbabilityErrors:
    marginal_error: float
    conditional_error: float
    n_excluded_marginal: int
    n_excluded_conditional: int


def random_rotation(d: int, rng: np.random.Generator) -> np.ndarray:
    """Orthogonal matrix drawn from the Haar measure (reflections included)."""
    Q, R = np.linalg.qr(rng.standard_normal((d, d)))
    return Q * np.sign(np.diag(R))


def random_signs(n: int, rng: np.random.Generator) -> np.ndarray:
    return rng.integers(0, 2, size=n) * 2.0 - 1.0


def apply_symmetry(params: ModelParams, signs, rotation) -> ModelParams:
    """Transport params along the symmetry group: V -> S V O^T, C -> O C O^T."""
    signs = np.asarray(signs, dtype=float)
    O = np.asarray(rotation, dtype=float)
    V = signs[:, None] * (params.V @ O.T)
    C = None if params.c_upper is None else O @ params.C @ O.T
    return ModelParams.from_matrices(
        beta=params.beta.copy(), V=V, C=C, gamma=params.gamma, gamma_max=params.gamma_max
    )


def _procrustes(A, B):
    """Orthogonal O minimizing ||A O - B||_F."""
    U, _, Wt = np.linalg.svd(A.T @ B)
    return U @ Wt


def _spectral_signs(A, B) -> np.ndarray:
    """Sign vector from the leading eigenvector of the elementwise product.

    If A = S B S exactly (both symmetric), A * B = D(s) (B * B) D(s) has a
    nonnegative conjugated core, so by Perron-Frobenius the leading
    eigenvector is s times a positive vector and its signs recover s up to
    a global flip.  Near-misses still give a strong initial guess.
    """
    M = np.asarray(A, dtype=float) * np.asarray(B, dtype=float)
    M = 0.5 * (M + M.T)
    _, vecs = np.linalg.eigh(M)
    lead = vecs[:, -1]
    return np.where(lead >= 0, 1.0, -1.0)


def _objective(v_hat, v_star, signs, O):
    return float(np.linalg.norm(v_hat - signs[:, None] * (v_star @ O)))


def align_latent(
    v_hat,
    v_star,
    restarts: int = 8,
    seed: int = 0,
    tol: float = 1e-12,
    max_iter: int = 500,
) -> AlignmentResult:
    """Approximately minimize ||V_hat - S V_star O||_F / ||V_star||_F.

    Alternates an orthogonal-Procrustes solve for O with per-row sign
    choices for S until the objective stops decreasing.  Sign starts come
    from the Gram matrices (V V^T is rotation-invariant, so the signs
    solve a pure conjugation problem there): a spectral synchronization
    guess and a greedy refinement of it, plus all-ones and random
    restarts.
    """
    v_hat = np.asarray(v_hat, dtype=float)
    v_star = np.asarray(v_star, dtype=float)
    if v_hat.shape != v_star.shape:
        raise ValueError(f"shape mismatch: {v_hat.shape} vs {v_star.shape}")
    n, d = v_star.shape
    rng = np.random.default_rng(seed)
    denom = np.linalg.norm(v_star)
    g_hat, g_star = v_hat @ v_hat.T, v_star @ v_star.T
    spectral = _spectral_signs(g_star, g_hat)
    refined, _ = _greedy_sign_refine(g_star, g_hat, spectral.copy())
    seeded = [np.ones(n), spectral, refined]
    best = None
    for r in range(restarts):
        signs = seeded[r].copy() if r < len(seeded) else random_signs(n, rng)
        prev = np.inf
        O = np.eye(d)
        for _ in range(max_iter):
            O = _procrustes(signs[:, None] * v_star, v_hat)
            target = v_star @ O
            dots = (v_hat * target).sum(axis=1)
            signs = np.where(dots >= 0, 1.0, -1.0)
            obj = _objective(v_hat, v_star, signs, O)
            if prev - obj < tol:
                break
            prev = obj
        obj = _objective(v_hat, v_star, signs, O)
        if best is None or obj < best[0]:
            best = (obj, signs, O)
    return AlignmentResult(signs=best[1], rotation=best[2], error=best[0] / denom)


def _kernel_sign_objective(L_hat, L_star, signs):
    return float(np.linalg.norm(signs[:, None] * L_hat * signs[None, :] - L_star))


def _greedy_sign_refine(L_hat, L_star, signs):
    """Single-coordinate sign flips until no flip lowers the kernel distance."""
    signs = signs.copy()
    n = len(signs)
    best = _kernel_sign_objective(L_hat, L_star, signs)
    for _ in range(_GREEDY_MAX_PASSES):
        improved = False
        for i in range(n):
            signs[i] = -signs[i]
            cand = _kernel_sign_objective(L_hat, L_star, signs)
            if cand < best - 1e-15:
                best = cand
                improved = True
            else:
                signs[i] = -signs[i]
        if not improved:
            break
    return signs, best


def kernel_error(L_hat, L_star, sign_starts) -> float:
    """min over refined sign patterns of ||S L_hat S - L_star||_F / ||L_star||_F.

    A spectral synchronization start is always tried in addition to the
    supplied ones.
    """
    L_hat = np.asarray(L_hat, dtype=float)
    L_star = np.asarray(L_star, dtype=float)
    best = np.inf
    starts = [np.asarray(s0, dtype=float) for s0 in sign_starts]
    starts.append(_spectral_signs(L_hat, L_star))
    for s0 in starts:
        _, obj = _greedy_sign_refine(L_hat, L_star, s0)
        best = min(best, obj)
    return best / np.linalg.norm(L_star)


def aligned_errors(
    fit_params: ModelParams,
    truth_params: ModelParams,
    restarts: int = 8,
    seed: int = 0,
) -> AlignedErrors:
    """Relative errors of all parameter blocks after resolving the symmetry group.

    The rotation recovered from the latent alignment (V_hat ~ S V_star O)
    transports the fitted coupling back via O C_hat O^T before comparison,
    which is the pairing under which a symmetry-transported copy of the
    truth scores zero on every block.  The kernel error minimizes over
    sign patterns only, seeded by the latent alignment plus a greedy
    refinement.  The coupling error is None when either side is symmetric.
    """
    if fit_params.n != truth_params.n or fit_params.d != truth_params.d:
        raise ValueError("parameter shapes do not match")
    res = align_latent(fit_params.V, truth_params.V, restarts=restarts, seed=seed)
    b_star = np.linalg.norm(truth_params.beta)
    b_error = float(np.linalg.norm(fit_params.beta - truth_params.beta) / b_star)
    if truth_params.gamma > 0:
        gamma_error = abs(fit_params.gamma - truth_params.gamma) / truth_params.gamma
    else:
        gamma_error = abs(fit_params.gamma)
    if fit_params.c_upper is None or truth_params.c_upper is None:
        c_error = None
    else:
        O = res.rotation
        moved = O @ fit_params.C @ O.T
        c_error = float(
            np.linalg.norm(moved - truth_params.C) / np.linalg.norm(truth_params.C)
        )
    L_hat = build_kernel(fit_params)
    L_star = build_kernel(truth_params)
    l_error = kernel_error(L_hat, L_star, [res.signs, np.ones(fit_params.n)])
    return AlignedErrors(
        v_error=res.error,
        b_error=b_error,
        gamma_error=float(gamma_error),
        c_error=c_error,
        l_error=l_error,
        signs=res.signs,
        rotation=res.rotation,
    )


def probability_errors(
    fit_params: ModelParams,
    truth_params: ModelParams,
    min_prob: float = 1e-12,
) -> ProbabilityErrors:
    """Mean relative errors of marginal and pairwise-conditional probabilities.

    Both quantities are invariant under the symmetry group, so no alignment
    is needed.  Ground-truth probabilities below ``min_prob`` are excluded
    (counted, with a warning) because their relative errors are meaningless.
    """
    K_hat = marginal_kernel(build_kernel(fit_params))
    K_star = marginal_kernel(build_kernel(truth_params))
    n = K_star.shape[0]

    p_hat = np.diag(K_hat)
    p_star = np.diag(K_star)
    keep = p_star > min_prob
    n_excl_marg = int(np.count_nonzero(~keep))
    marginal = float(np.mean(np.abs(p_hat[keep] - p_star[keep]) / p_star[keep]))

    def conditional_matrix(K):
        diag = np.diag(K)
        with np.errstate(divide="ignore", invalid="ignore"):
            return (np.outer(diag, diag) - K * K.T) / diag[:, None]

    C_hat = conditional_matrix(K_hat)
    C_star = conditional_matrix(K_star)
    off = ~np.eye(n, dtype=bool)
    ok = off & (C_star > min_prob) & (p_star > min_prob)[:, None]
    n_excl_cond = int(np.count_nonzero(off) - np.count_nonzero(ok))
    conditional = float(np.mean(np.abs(C_hat[ok] - C_star[ok]) / C_star[ok]))

    if n_excl_marg or n_excl_cond:
        warnings.warn(
            f"excluded {n_excl_marg} marginal and {n_excl_cond} conditional "
            f"entries with ground-truth probability below {min_prob:g}",
            NumericalWarning,
            stacklevel=2,
        )
    return ProbabilityErrors(
        marginal_error=marginal,
        conditional_error=conditional,
        n_excluded_marginal=n_excl_marg,
        n_excluded_conditional=n_excl_cond,
    )
