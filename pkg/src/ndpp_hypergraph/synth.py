"""Synthetic ground-truth scenarios for simulation studies.

A scenario fixes the node count, latent dimension, latent-position law
(uniform on the sphere, or a von Mises-Fisher cluster mixture), a size
scaling factor s for the popularity weights, and the skew strength.
Popularity weights follow beta_i = 15 s (0.2 eta_i + 0.05) with
eta_i ~ Beta(1, 4), giving range [0.75 s, 3.75 s] and mean 1.35 s.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .exceptions import DataFormatError
from .model import DEFAULT_GAMMA_MAX, ModelParams, build_kernel, upper_from_skew
from .sampling import sample_batch

_CANONICAL_MEANS_3D = ((1.0, 0.0, 0.0), (0.0, 1.0, 0.0), (0.0, 0.0, 1.0))

_SCENARIO_KEYS = ("n", "d", "s", "latent_law", "kappa", "gamma", "seed")


@dataclass
class ScenarioSpec:
    """Ground-truth recipe: sizes, latent law, and popularity scaling."""

    n: int
    d: int
    s: float = 1.0
    latent_law: str = "uniform"      # "uniform" or "vmf"
    kappa: float = 10.0
    means: tuple | None = None       # vMF mean directions; None = canonical 3D axes
    gamma: float = 0.15
    seed: int = 0

    def __post_init__(self):
        if self.latent_law not in ("uniform", "vmf"):
            raise ValueError(f"unknown latent law {self.latent_law!r}")
        if self.n < 1 or self.d < 2:
            raise ValueError("scenario needs n >= 1 and d >= 2")
        if self.s <= 0:
            raise ValueError("size scaling s must be positive")
        if self.latent_law == "vmf" and self.means is None and self.d != 3:
            raise ValueError("vMF latent law with canonical means requires d = 3")


def scenario_from_config(text_or_dict) -> ScenarioSpec:
    """Parse a scenario from a JSON document with keys exactly
    (n, d, s, latent_law, kappa, gamma, seed); kappa is optional for the
    uniform law."""
    if isinstance(text_or_dict, dict):
        doc = dict(text_or_dict)
    else:
        try:
            doc = json.loads(text_or_dict)
        except json.JSONDecodeError as err:
            raise DataFormatError(f"scenario config is not valid JSON: {err}") from err
    unknown = set(doc) - set(_SCENARIO_KEYS)
    if unknown:
        raise DataFormatError(f"unknown scenario keys: {sorted(unknown)}")
    missing = {"n", "d", "s", "latent_law", "gamma", "seed"} - set(doc)
    if missing:
        raise DataFormatError(f"missing scenario keys: {sorted(missing)}")
    return ScenarioSpec(
        n=int(doc["n"]),
        d=int(doc["d"]),
        s=float(doc["s"]),
        latent_law=str(doc["latent_law"]),
        kappa=float(doc.get("kappa", 10.0)),
        gamma=float(doc["gamma"]),
        seed=int(doc["seed"]),
    )


def sample_vmf(mu, kappa: float, size: int, rng: np.random.Generator) -> np.ndarray:
    """Draw unit vectors from a von Mises-Fisher distribution around mu.

    Uses the standard rejection scheme for the cosine component combined
    with a uniform tangent direction (tangent-normal decomposition).
    """
    mu = np.asarray(mu, dtype=float)
    d = mu.shape[0]
    mu = mu / np.linalg.norm(mu)
    if kappa <= 0:
        raise ValueError("concentration kappa must be positive")
    b = (d - 1) / (np.sqrt(4.0 * kappa**2 + (d - 1) ** 2) + 2.0 * kappa)
    x0 = (1.0 - b) / (1.0 + b)
    c = kappa * x0 + (d - 1) * np.log(1.0 - x0**2)
    out = np.empty((size, d))
    for row in range(size):
        while True:
            z = rng.beta((d - 1) / 2.0, (d - 1) / 2.0)
            w = (1.0 - (1.0 + b) * z) / (1.0 - (1.0 - b) * z)
            if kappa * w + (d - 1) * np.log(1.0 - x0 * w) - c >= np.log(rng.random()):
                break
        tangent = rng.standard_normal(d)
        tangent -= (tangent @ mu) * mu
        tangent /= np.linalg.norm(tangent)
        out[row] = w * mu + np.sqrt(max(0.0, 1.0 - w * w)) * tangent
    return out


def gen_latent(spec: ScenarioSpec, rng: np.random.Generator) -> np.ndarray:
    """Latent position matrix with unit-norm rows under the scenario's law.

    Uniform law: entries U[0, 1], rows normalized (all-nonnegative cone).
    vMF law: nodes assigned round-robin to the mean directions (canonical
    3D axes by default), each row drawn at concentration kappa.
    """
    if spec.latent_law == "uniform":
        V = rng.random((spec.n, spec.d))
        norms = np.linalg.norm(V, axis=1)
        while np.any(norms < 1e-12):  # measure-zero guard
            bad = norms < 1e-12
            V[bad] = rng.random((int(bad.sum()), spec.d))
            norms = np.linalg.norm(V, axis=1)
        return V / norms[:, None]
    means = spec.means if spec.means is not None else _CANONICAL_MEANS_3D
    means = [np.asarray(mu, dtype=float) for mu in means]
    if any(mu.shape != (spec.d,) for mu in means):
        raise ValueError("vMF mean directions must match the latent dimension")
    V = np.empty((spec.n, spec.d))
    for i in range(spec.n):
        V[i] = sample_vmf(means[i % len(means)], spec.kappa, 1, rng)[0]
    return V


def gen_skew(d: int, rng: np.random.Generator) -> np.ndarray:
    """Skew coupling C = (G - G^T) / ||G - G^T||_F with G ~ U[0, 1]^{d x d}."""
    if d < 2:
        raise ValueError("skew coupling needs d >= 2")
    G = rng.random((d, d))
    C = G - G.T
    fro = np.linalg.norm(C, "fro")
    while fro < 1e-12:  # measure-zero guard
        G = rng.random((d, d))
        C = G - G.T
        fro = np.linalg.norm(C, "fro")
    return C / fro


def popularity_value(eta, s: float):
    """Popularity curve beta = 15 s (0.2 eta + 0.05) for eta in [0, 1]."""
    return 15.0 * s * (0.2 * np.asarray(eta, dtype=float) + 0.05)


def gen_popularity(n: int, s: float, rng: np.random.Generator) -> np.ndarray:
    """Popularity weights from the Beta(1, 4)-driven curve; range [0.75 s, 3.75 s]."""
    if s <= 0:
        raise ValueError("size scaling s must be positive")
    return popularity_value(rng.beta(1.0, 4.0, size=n), s)


def make_scenario(spec: ScenarioSpec) -> ModelParams:
    """Ground-truth parameters for a scenario; deterministic in spec.seed.

    Drawing order is fixed (latent positions, then coupling, then
    popularity) so every block is reproducible.
    """
    rng = np.random.default_rng(np.random.SeedSequence(spec.seed))
    V = gen_latent(spec, rng)
    C = gen_skew(spec.d, rng)
    beta = gen_popularity(spec.n, spec.s, rng)
    gamma_max = max(DEFAULT_GAMMA_MAX, spec.gamma)
    return ModelParams(
        beta=beta, V=V, c_upper=upper_from_skew(C), gamma=spec.gamma, gamma_max=gamma_max
    )


def sample_dataset(
    params: ModelParams,
    m: int,
    seed,
    min_size: int = 2,
) -> tuple[list[tuple[int, ...]], int]:
    """Draw m hyperedges of size >= min_size, resampling undersized draws.

    Returns (edges, discarded) where discarded counts the draws thrown away
    by the size filter.
    """
    if m < 1:
        raise ValueError(f"number of edges must be >= 1, got {m}")
    L = build_kernel(params)
    if isinstance(seed, np.random.SeedSequence):
        root = seed
    else:
        root = np.random.SeedSequence(seed)
    edges: list[tuple[int, ...]] = []
    discarded = 0
    round_idx = 0
    while len(edges) < m:
        need = m - len(edges)
        total = len(edges) + discarded
        keep_rate = max(0.05, len(edges) / total) if total else 0.5
        batch = int(np.ceil(need / keep_rate)) + 16
        child = root.spawn(1)[0]
        for e in sample_batch(L, batch, child):
            if len(e) >= min_size:
                if len(edges) < m:
                    edges.append(e)
            else:
                discarded += 1
        round_idx += 1
        if round_idx > 1000:
            raise RuntimeError(
                f"size filter rejected too many draws ({discarded}); "
                "the kernel rarely produces edges of the requested size"
            )
    return edges, discarded
