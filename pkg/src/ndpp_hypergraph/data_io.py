"""Dataset ingestion, preprocessing, splitting, and model persistence.

Two on-disk hyperedge formats are supported:

* edge-list text: one hyperedge per line, whitespace-separated integer
  node ids, '#' starts a comment line;
* paired count/member files: one file of hyperedge sizes, one file with
  all member ids flattened in order.

Ingestion normalizes node ids to a contiguous 0-based range.  Files whose
ids already form such a range are taken as canonical and kept verbatim
(so pipeline artifacts round-trip without scrambling node identity);
anything else is relabeled in first-appearance order with the map
recorded in the provenance.
"""

from __future__ import annotations

import csv
import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

from .exceptions import DataFormatError, InvalidParamsError
from .estimation import FitConfig, FitResult
from .model import DEFAULT_GAMMA_MAX, ModelParams

MODEL_FORMAT_VERSION = 1


@dataclass
class Provenance:
    source: str
    relabel_map: list[int] | None  # new id -> original id; None = identity
    log: list[str] = field(default_factory=list)


@dataclass
class HypergraphDataset:
    n: int
    edges: list[tuple[int, ...]]
    provenance: Provenance

    @property
    def m(self) -> int:
        return len(self.edges)


@dataclass
class SplitSpec:
    train_fraction: float = 0.8
    repeats: int = 5
    seed: int = 0


@dataclass
class DatasetSummary:
    n: int
    m: int
    size_mean: float
    size_std: float
    size_min: int
    size_max: int

    def as_dict(self) -> dict:
        return {
            "nodes": self.n,
            "hyperedges": self.m,
            "size_mean": self.size_mean,
            "size_std": self.size_std,
            "size_min": self.size_min,
            "size_max": self.size_max,
        }

    def __str__(self) -> str:
        return (
            f"nodes {self.n}  hyperedges {self.m}  "
            f"size {self.size_mean:.3f} +- {self.size_std:.3f}  "
            f"range ({self.size_min}, {self.size_max})"
        )


def _finalize_edges(raw_edges, source: str, log: list[str], min_size: int, relabel: str):
    """Dedup within edges, apply the size floor, and normalize node ids."""
    edges = []
    for lineno, nodes in raw_edges:
        uniq = sorted(set(nodes))
        if len(uniq) != len(nodes):
            log.append(f"line {lineno}: dropped duplicate node ids within a hyperedge")
        if len(uniq) < min_size:
            log.append(f"line {lineno}: dropped hyperedge of size {len(uniq)} < {min_size}")
            continue
        edges.append(uniq)
    if not edges:
        raise DataFormatError(f"{source}: no hyperedges of size >= {min_size}")

    ids = sorted({v for e in edges for v in e})
    contiguous = ids[0] == 0 and ids[-1] == len(ids) - 1
    if relabel == "never" or (relabel == "auto" and contiguous):
        n = ids[-1] + 1 if relabel == "never" else len(ids)
        relabel_map = None
        out = [tuple(e) for e in edges]
    elif relabel in ("auto", "always"):
        seen: dict[int, int] = {}
        for e in edges:
            for v in e:
                if v not in seen:
                    seen[v] = len(seen)
        out = [tuple(sorted(seen[v] for v in e)) for e in edges]
        n = len(seen)
        relabel_map = [orig for orig, _ in sorted(seen.items(), key=lambda kv: kv[1])]
        log.append(f"relabeled {n} node ids to a contiguous range in first-appearance order")
    else:
        raise ValueError(f"unknown relabel mode {relabel!r}")
    return HypergraphDataset(
        n=n, edges=out, provenance=Provenance(source=source, relabel_map=relabel_map, log=log)
    )


def _parse_int(token: str, path, lineno: int) -> int:
    try:
        return int(token)
    except ValueError:
        raise DataFormatError(
            f"{path}: non-integer token {token!r} on line {lineno}"
        ) from None


def read_edge_list(path, min_size: int = 2, relabel: str = "auto") -> HypergraphDataset:
    """Read whitespace-separated hyperedge lines; '#' introduces comments."""
    log: list[str] = []
    raw = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            body = line.strip()
            if not body or body.startswith("#"):
                continue
            raw.append((lineno, [_parse_int(t, path, lineno) for t in body.split()]))
    if not raw:
        raise DataFormatError(f"{path}: empty edge-list file")
    return _finalize_edges(raw, str(path), log, min_size, relabel)


def _read_int_column(path) -> list[int]:
    values = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            body = line.strip()
            if not body or body.startswith("#"):
                continue
            for token in body.split():
                values.append(_parse_int(token, path, lineno))
    return values


def read_nverts_simplices(
    nverts_path, simplices_path, min_size: int = 2, relabel: str = "auto"
) -> HypergraphDataset:
    """Read the paired size-file / flattened-member-file hyperedge format."""
    sizes = _read_int_column(nverts_path)
    members = _read_int_column(simplices_path)
    if not sizes:
        raise DataFormatError(f"{nverts_path}: empty size file")
    declared = sum(sizes)
    if declared != len(members):
        raise DataFormatError(
            f"size/member mismatch: sizes sum to {declared} but "
            f"{simplices_path} lists {len(members)} ids"
        )
    raw = []
    cursor = 0
    for row, k in enumerate(sizes, 1):
        if k < 0:
            raise DataFormatError(f"{nverts_path}: negative size on row {row}")
        raw.append((row, members[cursor : cursor + k]))
        cursor += k
    log: list[str] = []
    return _finalize_edges(
        raw, f"{nverts_path}+{simplices_path}", log, min_size, relabel
    )


def write_edge_list(dataset_or_edges, path) -> None:
    """Write one hyperedge per line, ids space-separated in sorted order."""
    edges = getattr(dataset_or_edges, "edges", dataset_or_edges)
    with open(path, "w", encoding="utf-8") as fh:
        for e in edges:
            fh.write(" ".join(str(v) for v in sorted(e)) + "\n")


def preprocess(
    ds: HypergraphDataset,
    min_size: int = 2,
    max_size: int | None = None,
    top_k_nodes: int | None = None,
) -> HypergraphDataset:
    """Filter to the most frequent nodes and re-apply size bounds.

    Node frequency counts one occurrence per containing hyperedge; ties
    break toward the smaller id.  Edges keep only their surviving members
    and are dropped if they fall below ``min_size`` or above ``max_size``.
    """
    log = list(ds.provenance.log)
    edges = [list(e) for e in ds.edges]
    if top_k_nodes is not None and top_k_nodes < ds.n:
        freq = np.zeros(ds.n, dtype=np.int64)
        for e in edges:
            freq[list(e)] += 1
        order = sorted(range(ds.n), key=lambda v: (-freq[v], v))
        kept = set(order[:top_k_nodes])
        edges = [[v for v in e if v in kept] for e in edges]
        log.append(f"kept top {top_k_nodes} nodes by hyperedge frequency")
    raw = []
    dropped_small = dropped_large = 0
    for i, e in enumerate(edges, 1):
        if len(e) < min_size:
            dropped_small += 1
            continue
        if max_size is not None and len(e) > max_size:
            dropped_large += 1
            continue
        raw.append((i, e))
    if dropped_small:
        log.append(f"dropped {dropped_small} hyperedges of size < {min_size}")
    if dropped_large:
        log.append(f"dropped {dropped_large} hyperedges of size > {max_size}")
    if not raw:
        raise DataFormatError("preprocessing removed every hyperedge")
    return _finalize_edges(raw, ds.provenance.source, log, min_size, "auto")


def summarize(ds: HypergraphDataset) -> DatasetSummary:
    """Node/edge counts plus hyperedge-size mean, sample std, and range."""
    sizes = np.array([len(e) for e in ds.edges], dtype=float)
    std = float(sizes.std(ddof=1)) if len(sizes) > 1 else 0.0
    return DatasetSummary(
        n=ds.n,
        m=ds.m,
        size_mean=float(sizes.mean()),
        size_std=std,
        size_min=int(sizes.min()),
        size_max=int(sizes.max()),
    )


def split(ds: HypergraphDataset, spec: SplitSpec) -> list[tuple[HypergraphDataset, HypergraphDataset]]:
    """Edge-level uniform train/test splits, deterministic per (seed, repeat).

    The test size is floor(m * (1 - train_fraction)); the remainder goes to
    train.  Nodes appearing only in test remain part of the node universe.
    """
    if not (0.0 < spec.train_fraction < 1.0):
        raise ValueError("train fraction must lie strictly between 0 and 1")
    if spec.repeats < 1:
        raise ValueError("need at least one repeat")
    m = ds.m
    if m < 2:
        raise DataFormatError("cannot split fewer than 2 hyperedges")
    # the epsilon keeps binary-float artifacts like 10 * (1 - 0.8) = 1.9999...
    # from stealing a test edge
    n_test = int(np.floor(m * (1.0 - spec.train_fraction) + 1e-9))
    n_train = m - n_test
    if n_test == 0 or n_train == 0:
        raise DataFormatError(
            f"degenerate split: {n_train} train / {n_test} test edges from m={m}"
        )
    out = []
    for r in range(spec.repeats):
        rng = np.random.default_rng(np.random.SeedSequence([spec.seed, r]))
        perm = rng.permutation(m)
        train_edges = [ds.edges[i] for i in perm[:n_train]]
        test_edges = [ds.edges[i] for i in perm[n_train:]]
        prov = lambda part: Provenance(  # noqa: E731
            source=ds.provenance.source,
            relabel_map=ds.provenance.relabel_map,
            log=ds.provenance.log + [f"{part} side of split repeat {r} (seed {spec.seed})"],
        )
        out.append(
            (
                HypergraphDataset(n=ds.n, edges=train_edges, provenance=prov("train")),
                HypergraphDataset(n=ds.n, edges=test_edges, provenance=prov("test")),
            )
        )
    return out


def _model_document(params: ModelParams, loglik, config, seed) -> dict:
    if isinstance(config, FitConfig):
        config = {k: (v if not isinstance(v, np.generic) else v.item()) for k, v in vars(config).items()}
    if config is None:
        config = {"gamma_max": params.gamma_max}
    elif isinstance(config, dict) and "gamma_max" not in config:
        config = {**config, "gamma_max": params.gamma_max}
    return {
        "format_version": MODEL_FORMAT_VERSION,
        "n": params.n,
        "d": params.d,
        "gamma": params.gamma,
        "beta": [float(x) for x in params.beta],
        "V": [float(x) for x in params.V.ravel()],
        "C_upper": None if params.c_upper is None else [float(x) for x in params.c_upper],
        "loglik": None if loglik is None else float(loglik),
        "config": config,
        "seed": seed,
    }


def save_params(params: ModelParams, path, loglik=None, config=None, seed=None) -> None:
    """Persist parameters as JSON with round-trip-exact decimal floats."""
    doc = _model_document(params, loglik, config, seed)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def save_model(result: FitResult, path) -> None:
    """Persist a fit result (parameters plus objective, config echo, seed)."""
    save_params(
        result.params,
        path,
        loglik=result.log_likelihood_per_edge,
        config=result.config,
        seed=result.seed,
    )


def load_model(path) -> FitResult:
    """Load a model file, re-validating every structural invariant.

    Violations are rejected with the invariant named, never repaired.
    """
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as err:
            raise DataFormatError(f"{path}: invalid JSON: {err}") from err
    for name in ("format_version", "n", "d", "gamma", "beta", "V", "C_upper", "loglik", "config", "seed"):
        if name not in doc:
            raise DataFormatError(f"{path}: missing field {name!r}")
    if doc["format_version"] != MODEL_FORMAT_VERSION:
        raise DataFormatError(
            f"{path}: unsupported format_version {doc['format_version']!r} "
            f"(expected {MODEL_FORMAT_VERSION})"
        )
    n, d = int(doc["n"]), int(doc["d"])
    beta = np.asarray(doc["beta"], dtype=float)
    V_flat = np.asarray(doc["V"], dtype=float)
    if beta.shape != (n,) or V_flat.shape != (n * d,):
        raise DataFormatError(f"{path}: parameter blocks do not match n={n}, d={d}")
    c_upper = doc["C_upper"]
    config = doc["config"]
    gamma_max = DEFAULT_GAMMA_MAX
    if isinstance(config, dict) and "gamma_max" in config:
        gamma_max = float(config["gamma_max"])
    try:
        params = ModelParams(
            beta=beta,
            V=V_flat.reshape(n, d),
            c_upper=None if c_upper is None else np.asarray(c_upper, dtype=float),
            gamma=float(doc["gamma"]),
            gamma_max=gamma_max,
        )
    except InvalidParamsError as err:
        raise DataFormatError(f"{path}: invariant violated: {err}") from err
    return FitResult(
        params=params,
        log_likelihood_per_edge=np.nan if doc["loglik"] is None else float(doc["loglik"]),
        config=config,
        seed=doc["seed"],
    )


def write_metrics_csv(path, rows, header=("dataset", "repeat", "metric", "value")) -> None:
    """CSV report; floats rendered with round-trip precision."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow(
                [repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row]
            )


def write_curve_csv(path, points) -> None:
    write_metrics_csv(path, points, header=("t", "proportion"))


def file_sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()
