"""Constrained maximum-likelihood estimation for the nonsymmetric
determinantal hypergraph model.

The objective is the per-edge average log-likelihood

    phi = (1/m) sum_s log det(L_{e_s}) - log det(L + I),

maximized over (beta, V, C, gamma) subject to beta > 0, unit-norm rows
of V, unit Frobenius norm of the skew coupling C, and gamma in
[0, gamma_max].  Optimization is projected adaptive-moment gradient
ascent with multiple random starts; the gradient is analytic.

Both the objective and its gradient exploit the low-rank-plus-diagonal
structure of each principal submatrix,

    L_e = D_e + X_e M X_e^T,   X = diag(beta) V,  M = I + gamma C,
    det(L_e) = det(D_e) det(M) det(M^{-1} + X_e^T D_e^{-1} X_e),

so the per-edge cost scales with the latent dimension rather than the
edge size.  Agreement with direct principal-minor factorizations is
covered by tests.
"""

from __future__ import annotations

import concurrent.futures
from collections import Counter
from dataclasses import dataclass, field, replace

import numpy as np

from .exceptions import FitFailureError, NumericalError
from .model import (
    DEFAULT_GAMMA_MAX,
    ModelParams,
    skew_from_upper,
    upper_from_skew,
    validate_edge,
)

# Determinants at or below this floor are clamped before the log.
DET_FLOOR = 1e-300
_LOG_DET_FLOOR = np.log(DET_FLOOR)
# Rows of V (or the whole coupling) closer to zero than this are re-randomized.
DEGENERATE_NORM_TOL = 1e-12
# Number of step-size halvings after which a start is declared converged.
_MAX_STEP_REDUCTIONS = 6


@dataclass
class EdgeCounts:
    """Observed hyperedges collapsed to distinct edges with multiplicities.

    Empty draws are permitted here (they contribute only through the
    normalizer), although datasets read from disk never contain them.
    """

    n: int
    edges: list[tuple[int, ...]]
    counts: np.ndarray

    @classmethod
    def from_edges(cls, edges, n: int) -> "EdgeCounts":
        counter = Counter(validate_edge(e, n, allow_empty=True) for e in edges)
        items = sorted(counter.items(), key=lambda kv: (len(kv[0]), kv[0]))
        return cls(
            n=n,
            edges=[e for e, _ in items],
            counts=np.array([c for _, c in items], dtype=np.int64),
        )

    @property
    def m(self) -> int:
        return int(self.counts.sum())

    def mean_size(self) -> float:
        sizes = np.array([len(e) for e in self.edges], dtype=float)
        return float((sizes * self.counts).sum() / self.counts.sum())


@dataclass
class FitConfig:
    """Optimization settings; defaults follow the reference configuration."""

    d: int
    starts: int = 5
    max_epochs: int = 2000
    step_size: float = 0.01
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    decay_factor: float = 0.5
    patience: int = 20
    rel_tol: float = 1e-9
    beta_floor: float = 1e-6
    gamma_max: float = DEFAULT_GAMMA_MAX
    symmetric: bool = False
    seed: int = 0

    def __post_init__(self):
        if self.d < 2:
            raise ValueError("latent dimension must be at least 2")
        if self.starts < 1:
            raise ValueError("need at least one start")
        if not (0.0 < self.decay_factor < 1.0):
            raise ValueError("step-size decay factor must lie in (0, 1)")
        if self.beta_floor <= 0:
            raise ValueError("beta floor must be positive")


@dataclass
class FitResult:
    params: ModelParams
    log_likelihood_per_edge: float
    trajectories: list[list[float]] | None = None
    selected_start: int | None = None
    diagnostics: dict | None = None
    config: FitConfig | None = None
    seed: int | None = None


@dataclass
class ParamGradient:
    """Gradient of the per-edge average log-likelihood in ambient coordinates.

    ``c_upper`` holds derivatives with respect to the strict-upper-triangle
    coordinates of C (the full pullback, matching finite differences over
    those coordinates).  In symmetric mode the coupling and gamma slots are
    identically zero.
    """

    beta: np.ndarray
    V: np.ndarray
    c_upper: np.ndarray
    gamma: float


class _Workspace:
    """Distinct edges grouped by size with per-edge weights count/m."""

    def __init__(self, data: EdgeCounts):
        self.n = data.n
        m = data.counts.sum()
        if m <= 0:
            raise ValueError("no observed edges")
        by_size: dict[int, list[int]] = {}
        for pos, e in enumerate(data.edges):
            by_size.setdefault(len(e), []).append(pos)
        self.groups = []
        for k in sorted(by_size):
            if k == 0:
                continue  # empty draws contribute log det = 0
            rows = by_size[k]
            idx = np.array([data.edges[p] for p in rows], dtype=np.int64)
            w = data.counts[rows].astype(float) / m
            self.groups.append((k, idx, w))


def _prepare(params: ModelParams):
    return _prepare_raw(params.beta, params.V, params.c_upper, params.gamma)


def _prepare_raw(beta, V, c_upper, gamma):
    beta = np.asarray(beta, dtype=float)
    V = np.asarray(V, dtype=float)
    d = V.shape[1]
    X = beta[:, None] * V
    D = beta**2
    if c_upper is None:
        M = np.eye(d)
    else:
        M = np.eye(d) + float(gamma) * skew_from_upper(np.asarray(c_upper, dtype=float), d)
    Minv = np.linalg.inv(M)
    sign_m, logdet_m = np.linalg.slogdet(M)
    if sign_m <= 0:
        raise NumericalError("det(I + gamma C) is not positive")
    return X, D, M, Minv, logdet_m


def _group_core(X, D, Minv, logdet_m, idx):
    """Per-edge Woodbury core: gathered rows, D^{-1}X rows, S, and log-dets."""
    Xe = X[idx]                      # (g, k, d)
    de = D[idx]                      # (g, k)
    Ae = Xe / de[:, :, None]         # D_e^{-1} X_e
    S = Xe.transpose(0, 2, 1) @ Ae   # X_e^T D_e^{-1} X_e, symmetric (g, d, d)
    F = Minv[None, :, :] + S
    sign, logdet_f = np.linalg.slogdet(F)
    logdets = np.log(de).sum(axis=1) + logdet_m + logdet_f
    valid = (sign > 0) & np.isfinite(logdets) & (logdets > _LOG_DET_FLOOR)
    return Xe, de, Ae, S, F, logdets, valid


def _normalizer_parts(X, D, Minv, logdet_m):
    dplus = D + 1.0
    A = X / dplus[:, None]
    S = X.T @ A
    F = Minv + S
    sign, logdet_f = np.linalg.slogdet(F)
    if sign <= 0 or not np.isfinite(logdet_f):
        raise NumericalError("normalizer det(L + I) is not positive")
    logdet_norm = np.log(dplus).sum() + logdet_m + logdet_f
    return dplus, A, S, F, logdet_norm


def log_likelihood(params: ModelParams, data: EdgeCounts) -> float:
    """Per-edge average log-likelihood of the observed edges under params.

    Nonpositive or underflowing edge minors are clamped to a tiny floor
    before the log so the value stays finite during optimization.
    """
    obj, _ = _objective(_Workspace(data), params)
    return obj


def _objective(ws: _Workspace, params: ModelParams):
    return _objective_core(ws, _prepare(params))


def _objective_core(ws: _Workspace, prep):
    X, D, M, Minv, logdet_m = prep
    total = 0.0
    clamped = 0
    for _, idx, w in ws.groups:
        _, _, _, _, _, logdets, valid = _group_core(X, D, Minv, logdet_m, idx)
        clamped += int(np.count_nonzero(~valid))
        total += float(w @ np.where(valid, logdets, _LOG_DET_FLOOR))
    _, _, _, _, logdet_norm = _normalizer_parts(X, D, Minv, logdet_m)
    return total - logdet_norm, clamped


def log_likelihood_raw(beta, V, c_upper, gamma, data: EdgeCounts) -> float:
    """Objective at unconstrained coordinates, skipping feasibility checks.

    Lets callers probe the likelihood surface slightly off the constraint
    set (e.g. finite-difference probes around a feasible point); the
    analytic gradient is taken in these same ambient coordinates.
    """
    ws = _Workspace(data)
    obj, _ = _objective_core(ws, _prepare_raw(beta, V, c_upper, gamma))
    return obj


def gradient(params: ModelParams, data: EdgeCounts) -> ParamGradient:
    """Analytic gradient of the per-edge average log-likelihood."""
    g, _ = _gradient(_Workspace(data), params)
    return g


def _gradient(ws: _Workspace, params: ModelParams):
    """Gradient plus the count of clamped (excluded) edge terms."""
    X, D, M, Minv, logdet_m = _prepare(params)
    n, d = X.shape
    symmetric = params.c_upper is None

    grad_X = np.zeros((n, d))
    diag_G = np.zeros(n)
    T_acc = np.zeros((d, d))  # sum of weights * X_e^T L_e^{-T} X_e
    clamped = 0

    for _, idx, w in ws.groups:
        Xe, de, Ae, S, F, _, valid = _group_core(X, D, Minv, logdet_m, idx)
        clamped += int(np.count_nonzero(~valid))
        if not np.all(valid):
            idx, Xe, de, Ae, S, F = (
                a[valid] for a in (idx, Xe, de, Ae, S, F)
            )
            w = w[valid]
            if idx.shape[0] == 0:
                continue
        P = np.linalg.inv(F)                               # (M^{-1} + S)^{-1}
        P2 = P if symmetric else np.linalg.inv(Minv.T + S)
        eye = np.eye(d)
        # d phi_e / d X rows: L_e^{-T} X_e M^T + L_e^{-1} X_e M
        W = (eye - P2 @ S) @ M.T + (eye - P @ S) @ M
        np.add.at(grad_X, idx.ravel(), (w[:, None, None] * (Ae @ W)).reshape(-1, d))
        # diag(L_e^{-1}) for the popularity chain
        dinv = 1.0 / de - ((Ae @ P) * Ae).sum(axis=2)
        np.add.at(diag_G, idx.ravel(), (w[:, None] * dinv).ravel())
        if not symmetric:
            T = S - S @ P2 @ S                             # X_e^T L_e^{-T} X_e
            T_acc += np.tensordot(w, T, axes=1)

    # Normalizer terms share the same structure with diagonal D + 1.
    dplus, A_n, S_n, F_n, _ = _normalizer_parts(X, D, Minv, logdet_m)
    P_n = np.linalg.inv(F_n)
    P2_n = P_n if symmetric else np.linalg.inv(Minv.T + S_n)
    eye = np.eye(d)
    W_n = (eye - P2_n @ S_n) @ M.T + (eye - P_n @ S_n) @ M
    grad_X -= A_n @ W_n
    diag_G -= 1.0 / dplus - ((A_n @ P_n) * A_n).sum(axis=1)
    if not symmetric:
        T_acc -= S_n - S_n @ P2_n @ S_n

    grad_V = params.beta[:, None] * grad_X
    grad_beta = (grad_X * params.V).sum(axis=1) + 2.0 * params.beta * diag_G
    if symmetric:
        grad_u = np.zeros(0)
        grad_gamma = 0.0
    else:
        grad_gamma = float((T_acc * params.C).sum())
        Z = params.gamma * T_acc
        grad_u = upper_from_skew(Z - Z.T)
    return ParamGradient(beta=grad_beta, V=grad_V, c_upper=grad_u, gamma=grad_gamma), clamped


def project(
    beta,
    V,
    C,
    gamma,
    beta_floor: float = 1e-6,
    gamma_max: float = DEFAULT_GAMMA_MAX,
    rng: np.random.Generator | None = None,
) -> ModelParams:
    """Map an unconstrained candidate onto the feasible parameter set.

    Floors beta, renormalizes rows of V (re-randomizing degenerate rows),
    skew-symmetrizes and unit-normalizes C, and clips gamma to
    [0, gamma_max].  Idempotent on feasible input.  ``C`` may be a full
    matrix, a strict-upper-triangle vector, or None for the symmetric case.
    """
    params, _ = _project_counted(beta, V, C, gamma, beta_floor, gamma_max, rng)
    return params


def _project_counted(beta, V, C, gamma, beta_floor, gamma_max, rng=None):
    beta = np.asarray(beta, dtype=float).copy()
    V = np.asarray(V, dtype=float).copy()
    n, d = V.shape
    if rng is None:
        rng = np.random.default_rng(0)
    counts = {"beta_floor": 0, "v_rerandomized": 0, "gamma_clip": 0, "c_rerandomized": 0}

    counts["beta_floor"] = int(np.count_nonzero(beta < beta_floor))
    beta = np.maximum(beta, beta_floor)

    norms = np.linalg.norm(V, axis=1)
    bad = norms < DEGENERATE_NORM_TOL
    if np.any(bad):
        counts["v_rerandomized"] = int(np.count_nonzero(bad))
        fresh = rng.standard_normal((int(bad.sum()), d))
        V[bad] = fresh
        norms = np.linalg.norm(V, axis=1)
    V = V / norms[:, None]

    if C is None:
        upper = None
        gamma = 0.0
    else:
        C = np.asarray(C, dtype=float)
        if C.ndim == 1:
            C = skew_from_upper(C, d)
        C = (C - C.T) / 2.0
        fro = np.linalg.norm(C, "fro")
        if fro < DEGENERATE_NORM_TOL:
            counts["c_rerandomized"] = 1
            G = rng.standard_normal((d, d))
            C = G - G.T
            fro = np.linalg.norm(C, "fro")
        upper = upper_from_skew(C / fro)

    g = float(gamma)
    clipped = min(max(g, 0.0), gamma_max)
    if clipped != g:
        counts["gamma_clip"] = 1
    params = ModelParams(beta=beta, V=V, c_upper=upper, gamma=clipped, gamma_max=gamma_max)
    return params, counts


def _pack(params: ModelParams, symmetric: bool) -> np.ndarray:
    parts = [params.beta, params.V.ravel()]
    if not symmetric:
        parts.extend([params.c_upper, np.array([params.gamma])])
    return np.concatenate(parts)


def _unpack(theta, n, d, symmetric):
    beta = theta[:n]
    V = theta[n : n + n * d].reshape(n, d)
    if symmetric:
        return beta, V, None, 0.0
    nu = d * (d - 1) // 2
    u = theta[n + n * d : n + n * d + nu]
    gamma = float(theta[-1])
    return beta, V, u, gamma


def _grad_vector(g: ParamGradient, symmetric: bool) -> np.ndarray:
    parts = [g.beta, g.V.ravel()]
    if not symmetric:
        parts.extend([g.c_upper, np.array([g.gamma])])
    return np.concatenate(parts)


def _init_params(ws: _Workspace, cfg: FitConfig, mean_size: float, rng) -> ModelParams:
    n, d = ws.n, cfg.d
    V = rng.standard_normal((n, d))
    beta = np.full(n, mean_size / n) + np.abs(rng.normal(0.0, 0.1, size=n))
    if cfg.symmetric:
        C = None
        gamma = 0.0
    else:
        C = skew_from_upper(rng.standard_normal(d * (d - 1) // 2), d)
        gamma = rng.uniform(0.0, min(1.0, cfg.gamma_max))
    return project(beta, V, C, gamma, cfg.beta_floor, cfg.gamma_max, rng)


def _run_start(ws: _Workspace, cfg: FitConfig, mean_size: float, seed_seq):
    rng = np.random.default_rng(seed_seq)
    params = _init_params(ws, cfg, mean_size, rng)
    counts_total = {"beta_floor": 0, "v_rerandomized": 0, "gamma_clip": 0, "c_rerandomized": 0}
    clamped_total = 0
    try:
        obj, clamped = _objective(ws, params)
    except (NumericalError, np.linalg.LinAlgError):
        return {"failed": True, "objective": -np.inf, "trajectory": []}
    clamped_total += clamped
    trajectory = [obj]
    best_obj, best_params = obj, params
    theta = _pack(params, cfg.symmetric)
    m1 = np.zeros_like(theta)
    m2 = np.zeros_like(theta)
    lr = cfg.step_size
    plateau = 0
    reductions = 0

    for epoch in range(1, cfg.max_epochs + 1):
        try:
            g, clamped = _gradient(ws, params)
        except (NumericalError, np.linalg.LinAlgError):
            break
        clamped_total += clamped
        gv = _grad_vector(g, cfg.symmetric)
        if not np.all(np.isfinite(gv)):
            break
        m1 = cfg.beta1 * m1 + (1.0 - cfg.beta1) * gv
        m2 = cfg.beta2 * m2 + (1.0 - cfg.beta2) * gv**2
        mhat = m1 / (1.0 - cfg.beta1**epoch)
        vhat = m2 / (1.0 - cfg.beta2**epoch)
        theta = theta + lr * mhat / (np.sqrt(vhat) + cfg.eps)
        beta, V, u, gamma = _unpack(theta, ws.n, cfg.d, cfg.symmetric)
        try:
            params, counts = _project_counted(
                beta, V, u, gamma, cfg.beta_floor, cfg.gamma_max, rng
            )
        except Exception:
            break
        for key in counts_total:
            counts_total[key] += counts[key]
        theta = _pack(params, cfg.symmetric)
        try:
            obj, clamped = _objective(ws, params)
        except (NumericalError, np.linalg.LinAlgError):
            break
        clamped_total += clamped
        trajectory.append(obj)
        if np.isfinite(obj) and obj > best_obj + cfg.rel_tol * max(1.0, abs(best_obj)):
            best_obj, best_params = obj, params
            plateau = 0
        else:
            plateau += 1
            if plateau >= cfg.patience:
                lr *= cfg.decay_factor
                plateau = 0
                reductions += 1
                if reductions > _MAX_STEP_REDUCTIONS:
                    break

    return {
        "failed": not np.isfinite(best_obj),
        "objective": best_obj,
        "params": best_params,
        "trajectory": trajectory,
        "projection_counts": counts_total,
        "clamped_edge_terms": clamped_total,
    }


def fit(data: EdgeCounts, config: FitConfig, threads: int = 1) -> FitResult:
    """Maximize the constrained log-likelihood with multi-start projected ascent.

    Starts are seeded independently from the master seed and the best final
    objective wins (ties go to the lowest start index), so the result is
    deterministic for a given seed regardless of thread count.
    """
    ws = _Workspace(data)
    mean_size = data.mean_size()
    children = np.random.SeedSequence(config.seed).spawn(config.starts)

    def run(idx):
        return _run_start(ws, config, mean_size, children[idx])

    if threads > 1 and config.starts > 1:
        with concurrent.futures.ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(run, range(config.starts)))
    else:
        results = [run(i) for i in range(config.starts)]

    ok = [i for i, r in enumerate(results) if not r["failed"]]
    if not ok:
        raise FitFailureError(
            f"all {config.starts} optimization starts failed to reach a finite objective"
        )
    best = max(ok, key=lambda i: results[i]["objective"])
    chosen = results[best]
    diagnostics = {
        "projection_counts": chosen["projection_counts"],
        "clamped_edge_terms": chosen["clamped_edge_terms"],
        "failed_starts": config.starts - len(ok),
        "start_objectives": [r["objective"] for r in results],
    }
    return FitResult(
        params=chosen["params"],
        log_likelihood_per_edge=chosen["objective"],
        trajectories=[r["trajectory"] for r in results],
        selected_start=best,
        diagnostics=diagnostics,
        config=config,
        seed=config.seed,
    )


@dataclass
class CvResult:
    chosen_d: int
    scores: dict[int, float]


def _derived_seed(*parts) -> int:
    return int(np.random.SeedSequence(list(parts)).generate_state(1, np.uint64)[0])


def cross_validate_dimension(
    data: EdgeCounts,
    candidate_ds,
    config: FitConfig,
    folds: int = 5,
    threads: int = 1,
) -> CvResult:
    """Choose the latent dimension by K-fold held-out log-likelihood.

    Folds are shared across candidates, per-candidate fits are seeded from
    (master seed, d, fold) so duplicate candidates score identically, and
    ties resolve to the smallest dimension.
    """
    expanded = []
    for e, c in zip(data.edges, data.counts):
        expanded.extend([e] * int(c))
    m = len(expanded)
    if m < folds:
        raise ValueError(f"cannot make {folds} folds from {m} edges")
    rng = np.random.default_rng(np.random.SeedSequence([config.seed, 101]))
    perm = rng.permutation(m)
    fold_idx = np.array_split(perm, folds)
    if any(len(f) == 0 for f in fold_idx) or any(len(f) == m for f in fold_idx):
        raise ValueError("degenerate fold: a fold has zero training or held-out edges")

    scores: dict[int, float] = {}
    for d in sorted(set(int(x) for x in candidate_ds)):
        fold_scores = []
        for k, held in enumerate(fold_idx):
            train_idx = np.concatenate([f for j, f in enumerate(fold_idx) if j != k])
            train = [expanded[i] for i in train_idx]
            cfg = replace(config, d=d, seed=_derived_seed(config.seed, d, k))
            result = fit(EdgeCounts.from_edges(train, data.n), cfg, threads=threads)
            held_counts = EdgeCounts.from_edges([expanded[i] for i in held], data.n)
            fold_scores.append(log_likelihood(result.params, held_counts))
        scores[d] = float(np.mean(fold_scores))

    chosen = None
    for d in sorted(scores):
        if chosen is None or scores[d] > scores[chosen]:
            chosen = d
    return CvResult(chosen_d=chosen, scores=scores)
