"""Kernel construction and exact probability queries for a nonsymmetric
determinantal hypergraph model.

The model places a probability distribution over all subsets of n nodes
through a nonsymmetric kernel matrix

    L = B V (I + gamma * C) V^T B + B^2,        B = diag(beta),

where each row v_i of V is a unit-norm latent position, C is a skew
coupling matrix (C^T = -C) with unit Frobenius norm, gamma >= 0 scales
the skew term, and beta_i > 0 is a per-node popularity weight.  The
probability of observing exactly the node set e is the principal-minor
ratio

    pr(e) = det(L_e) / det(L + I).

The symmetric part of L is positive semidefinite by construction, so
every principal minor is nonnegative and the ratios form a valid
distribution.  The skew term makes co-occurrence of similar nodes more
likely instead of less, which a symmetric kernel cannot express.
"""

from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass, field

import numpy as np

from .exceptions import InvalidParamsError, NumericalError, NumericalWarning

# Tolerance for the unit-norm invariants on rows of V and on C.
UNIT_NORM_TOL = 1e-10
# Relative slack allowed when checking admissibility of the symmetric part.
ADMISSIBILITY_RTOL = 1e-8
# Hard cap for exhaustive subset enumeration (2^n terms).
BRUTE_FORCE_MAX_NODES = 14

DEFAULT_GAMMA_MAX = 10.0


def skew_from_upper(upper, d):
    """Build the full d x d skew matrix from its strict upper triangle."""
    upper = np.asarray(upper, dtype=float)
    if upper.shape != (d * (d - 1) // 2,):
        raise InvalidParamsError(
            f"skew coupling needs {d * (d - 1) // 2} strict-upper entries for d={d}, "
            f"got shape {upper.shape}"
        )
    C = np.zeros((d, d))
    C[np.triu_indices(d, 1)] = upper
    return C - C.T


def upper_from_skew(C):
    """Strict upper triangle of a square matrix, row-major."""
    C = np.asarray(C, dtype=float)
    return C[np.triu_indices(C.shape[0], 1)].copy()


@dataclass(frozen=True)
class ModelParams:
    """Constrained parameters of the nonsymmetric determinantal model.

    Fields
    ------
    beta : (n,) strictly positive popularity weights.
    V : (n, d) latent positions, every row unit-norm.
    c_upper : strict upper triangle of the skew coupling matrix C, so the
        skew constraint holds structurally.  ``None`` means the symmetric
        special case (then gamma must be 0).
    gamma : skew strength in [0, gamma_max].
    gamma_max : upper bound for gamma (configurable, default 10).
    """

    beta: np.ndarray
    V: np.ndarray
    c_upper: np.ndarray | None
    gamma: float
    gamma_max: float = DEFAULT_GAMMA_MAX

    def __post_init__(self):
        object.__setattr__(self, "beta", np.asarray(self.beta, dtype=float))
        object.__setattr__(self, "V", np.asarray(self.V, dtype=float))
        if self.c_upper is not None:
            object.__setattr__(self, "c_upper", np.asarray(self.c_upper, dtype=float))
        object.__setattr__(self, "gamma", float(self.gamma))
        self._validate()

    def _validate(self):
        beta, V = self.beta, self.V
        if beta.ndim != 1 or V.ndim != 2 or V.shape[0] != beta.shape[0]:
            raise InvalidParamsError(
                f"shape mismatch: beta {beta.shape} vs V {V.shape}"
            )
        n, d = V.shape
        if n < 1:
            raise InvalidParamsError("model needs at least one node")
        if d < 2:
            raise InvalidParamsError(
                "latent dimension must be at least 2 (no unit-norm skew coupling exists below that)"
            )
        if not (np.all(np.isfinite(beta)) and np.all(np.isfinite(V))):
            raise InvalidParamsError("non-finite entries in beta or V")
        if np.any(beta <= 0):
            raise InvalidParamsError("popularity weights beta must be strictly positive")
        row_norms = np.linalg.norm(V, axis=1)
        if np.max(np.abs(row_norms - 1.0)) > UNIT_NORM_TOL:
            raise InvalidParamsError(
                "rows of V must be unit-norm within "
                f"{UNIT_NORM_TOL:g} (worst deviation {np.max(np.abs(row_norms - 1.0)):.3e})"
            )
        if self.c_upper is None:
            if self.gamma != 0.0:
                raise InvalidParamsError("gamma must be 0 when no skew coupling is present")
        else:
            if not np.all(np.isfinite(self.c_upper)):
                raise InvalidParamsError("non-finite entries in skew coupling")
            if self.c_upper.shape != (d * (d - 1) // 2,):
                raise InvalidParamsError(
                    f"skew coupling has {self.c_upper.shape} entries, expected {(d * (d - 1) // 2,)}"
                )
            fro = np.sqrt(2.0) * np.linalg.norm(self.c_upper)
            if abs(fro - 1.0) > UNIT_NORM_TOL:
                raise InvalidParamsError(
                    f"Frobenius norm of the skew coupling must be 1 within {UNIT_NORM_TOL:g}, got {fro!r}"
                )
        if not np.isfinite(self.gamma) or self.gamma < 0 or self.gamma > self.gamma_max:
            raise InvalidParamsError(
                f"gamma must lie in [0, {self.gamma_max}], got {self.gamma!r}"
            )

    @property
    def n(self) -> int:
        return self.V.shape[0]

    @property
    def d(self) -> int:
        return self.V.shape[1]

    @property
    def C(self) -> np.ndarray:
        """Materialized skew coupling matrix (zeros when absent)."""
        if self.c_upper is None:
            return np.zeros((self.d, self.d))
        return skew_from_upper(self.c_upper, self.d)

    @classmethod
    def from_matrices(cls, beta, V, C, gamma, gamma_max=DEFAULT_GAMMA_MAX):
        """Construct from a full skew matrix C (or None for the symmetric case)."""
        upper = None if C is None else upper_from_skew(C)
        if C is not None:
            C = np.asarray(C, dtype=float)
            if not np.allclose(C, -C.T, atol=1e-8):
                raise InvalidParamsError("coupling matrix is not skew within 1e-8")
        return cls(beta=beta, V=V, c_upper=upper, gamma=gamma, gamma_max=gamma_max)


def validate_edge(nodes, n, allow_empty=False) -> tuple[int, ...]:
    """Normalize a node collection into a sorted tuple, checking range and duplicates."""
    e = tuple(sorted(int(v) for v in nodes))
    if not e:
        if allow_empty:
            return e
        raise ValueError("empty hyperedge")
    if len(set(e)) != len(e):
        raise ValueError(f"duplicate node ids in hyperedge {e}")
    if e[0] < 0 or e[-1] >= n:
        raise ValueError(f"node id out of range [0, {n}) in hyperedge {e}")
    return e


def build_kernel(params: ModelParams) -> np.ndarray:
    """Materialize the n x n kernel L = B V (I + gamma C) V^T B + B^2."""
    X = params.beta[:, None] * params.V
    M = np.eye(params.d) + params.gamma * params.C
    return X @ M @ X.T + np.diag(params.beta**2)


def check_admissible(L, rtol=ADMISSIBILITY_RTOL) -> bool:
    """Whether the symmetric part of L is PSD up to a relative slack.

    This is the structural condition that makes every principal minor of L
    nonnegative, hence every subset probability well defined.
    """
    L = np.asarray(L, dtype=float)
    lam_min = np.linalg.eigvalsh(L + L.T).min()
    return lam_min >= -rtol * np.linalg.norm(L, "fro")


def _slogdet_principal(L, e):
    """(sign, log|det|) of the principal submatrix of L indexed by edge e."""
    if len(e) == 0:
        return 1.0, 0.0
    sub = L[np.ix_(e, e)]
    sign, logdet = np.linalg.slogdet(sub)
    return sign, logdet


def log_prob_exact(L, e) -> float:
    """Exact log probability log det(L_e) - log det(L + I) of node set e.

    The empty set is allowed (its minor is defined as 1).  A nonpositive
    minor, which can only arise from numerical noise on an admissible
    kernel or from a user-supplied inadmissible matrix, yields -inf with
    a warning rather than an exception.
    """
    L = np.asarray(L, dtype=float)
    n = L.shape[0]
    e = validate_edge(e, n, allow_empty=True)
    sign_norm, logdet_norm = np.linalg.slogdet(L + np.eye(n))
    if sign_norm <= 0:
        raise NumericalError("normalizer det(L + I) is not positive; kernel inadmissible")
    sign, logdet = _slogdet_principal(L, e)
    if sign <= 0:
        warnings.warn(
            f"principal minor for node set {e} is not positive; returning -inf",
            NumericalWarning,
            stacklevel=2,
        )
        return -np.inf
    return logdet - logdet_norm


def two_node_closed_form(params: ModelParams, i: int, j: int) -> float:
    """Closed-form unnormalized probability (two-node minor) for the pair {i, j}.

    Equals beta_i^2 beta_j^2 (4 - cos^2(v_i, v_j) + gamma^2 (v_i^T C v_j)^2),
    which shows how latent alignment suppresses and skew coupling restores
    co-occurrence mass.
    """
    if i == j:
        raise ValueError("pair must consist of two distinct nodes")
    n = params.n
    if not (0 <= i < n and 0 <= j < n):
        raise ValueError(f"node ids ({i}, {j}) out of range [0, {n})")
    vi, vj = params.V[i], params.V[j]
    cos = float(vi @ vj)
    skew = float(vi @ params.C @ vj)
    bb = float(params.beta[i] ** 2 * params.beta[j] ** 2)
    return bb * (4.0 - cos**2 + params.gamma**2 * skew**2)


def marginal_kernel(L) -> np.ndarray:
    """Marginal kernel K = I - (L + I)^{-1}; K_ii = pr(i in E), det(K_e) = pr(e subset E)."""
    L = np.asarray(L, dtype=float)
    n = L.shape[0]
    try:
        inv = np.linalg.inv(L + np.eye(n))
    except np.linalg.LinAlgError as err:
        raise NumericalError(f"ill-conditioned kernel: {err}") from err
    if not np.all(np.isfinite(inv)):
        raise NumericalError("ill-conditioned kernel: non-finite inverse of L + I")
    return np.eye(n) - inv


def pairwise_conditional(K, i: int, j: int, tol=1e-12) -> float:
    """pr(j in E | i in E) computed from the marginal kernel K."""
    K = np.asarray(K, dtype=float)
    n = K.shape[0]
    if i == j:
        raise ValueError("conditional pair must consist of two distinct nodes")
    if not (0 <= i < n and 0 <= j < n):
        raise ValueError(f"node ids ({i}, {j}) out of range [0, {n})")
    if K[i, i] <= tol:
        raise NumericalError(
            f"conditional undefined: node {i} has inclusion probability <= {tol:g}"
        )
    return (K[i, i] * K[j, j] - K[i, j] * K[j, i]) / K[i, i]


def conditional_exact(L, e1, e2) -> float:
    """Exact probability pr(E = e2 | e1 subset of E) for nested node sets e1 <= e2.

    Uses det(L_{e2}) / det(L + I - I_{e1}) where I_{e1} zeroes the diagonal
    slots of the conditioned-on nodes.
    """
    L = np.asarray(L, dtype=float)
    n = L.shape[0]
    e1 = validate_edge(e1, n, allow_empty=True)
    e2 = validate_edge(e2, n, allow_empty=True)
    if not set(e1) <= set(e2):
        raise ValueError(f"conditioning set {e1} is not contained in {e2}")
    A = L + np.eye(n)
    if e1:
        A[list(e1), list(e1)] -= 1.0
    sign_den, logdet_den = np.linalg.slogdet(A)
    if sign_den <= 0:
        raise NumericalError("conditional normalizer det(L + I - I_e1) is not positive")
    sign_num, logdet_num = _slogdet_principal(L, e2)
    if sign_num <= 0:
        warnings.warn(
            f"principal minor for node set {e2} is not positive; returning probability 0",
            NumericalWarning,
            stacklevel=2,
        )
        return 0.0
    return float(np.exp(logdet_num - logdet_den))


def brute_force_distribution(L) -> dict[tuple[int, ...], float]:
    """Exact distribution over all 2^n subsets by direct minor enumeration.

    Intended as a ground-truth oracle for small n; refuses n > 14.
    """
    L = np.asarray(L, dtype=float)
    n = L.shape[0]
    if n > BRUTE_FORCE_MAX_NODES:
        raise ValueError(f"brute-force enumeration capped at n={BRUTE_FORCE_MAX_NODES}, got {n}")
    norm = np.linalg.det(L + np.eye(n))
    if norm <= 0:
        raise NumericalError("normalizer det(L + I) is not positive; kernel inadmissible")
    dist: dict[tuple[int, ...], float] = {(): 1.0 / norm}
    for k in range(1, n + 1):
        idx = np.array(list(itertools.combinations(range(n), k)), dtype=int)
        subs = L[idx[:, :, None], idx[:, None, :]]
        dets = np.linalg.det(subs)
        for row, det in zip(idx, dets):
            dist[tuple(int(v) for v in row)] = float(det) / norm
    return dist
