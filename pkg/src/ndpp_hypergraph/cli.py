"""Command-line interface.

Every subcommand that writes artifacts also writes a JSON manifest next
to its primary output (``<output>.manifest.json``) recording the command,
flag values, master seed, SHA-256 digests of the inputs, and the output
paths.  Outputs are byte-reproducible from a manifest.  Exit codes:
0 success, 2 usage error, 3 data/format error, 4 numerical failure.
"""

from __future__ import annotations

import collections
import functools
import json
import os
import sys
from pathlib import Path

import click
import numpy as np

from . import __version__
from .alignment import aligned_errors, probability_errors
from .data_io import (
    HypergraphDataset,
    file_sha256,
    load_model,
    read_edge_list,
    read_nverts_simplices,
    save_model,
    save_params,
    summarize,
    write_curve_csv,
    write_edge_list,
    write_metrics_csv,
)
from .estimation import EdgeCounts, FitConfig, cross_validate_dimension, fit
from .exceptions import DataFormatError, NumericalError
from .model import build_kernel
from .prediction import auc as auc_metric
from .prediction import mpr as mpr_metric
from .prediction import rank_curve
from .synth import ScenarioSpec, make_scenario, sample_dataset

_THREADS_ENV = "NDPP_THREADS"


def _default_threads() -> int:
    try:
        return max(1, int(os.environ.get(_THREADS_ENV, "1")))
    except ValueError:
        return 1


def _guard(fn):
    """Map library errors onto the documented exit codes."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except DataFormatError as err:
            click.echo(f"data error: {err}", err=True)
            sys.exit(3)
        except OSError as err:
            click.echo(f"i/o error: {err}", err=True)
            sys.exit(3)
        except NumericalError as err:
            click.echo(f"numerical error: {err}", err=True)
            sys.exit(4)
        except ValueError as err:
            click.echo(f"invalid value: {err}", err=True)
            sys.exit(2)

    return wrapper


def _write_manifest(primary_output, command: str, flags: dict, seed, inputs, outputs):
    doc = {
        "command": command,
        "version": __version__,
        "seed": seed,
        "flags": {k: (str(v) if isinstance(v, Path) else v) for k, v in flags.items()},
        "inputs": {str(p): file_sha256(p) for p in inputs},
        "outputs": {str(p): file_sha256(p) for p in outputs},
    }
    path = str(primary_output) + ".manifest.json"
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


@click.group()
@click.version_option(__version__)
def main():
    """Nonsymmetric determinantal hypergraph model toolkit."""


@main.command()
@click.option("--n", type=int, required=True, help="Number of nodes.")
@click.option("--d", type=int, required=True, help="Latent dimension.")
@click.option("--m", type=int, required=True, help="Number of hyperedges to draw.")
@click.option("--s", type=float, default=1.0, show_default=True, help="Popularity scaling.")
@click.option(
    "--latent",
    type=click.Choice(["uniform", "vmf"]),
    default="uniform",
    show_default=True,
    help="Latent-position law.",
)
@click.option("--gamma", type=float, default=0.15, show_default=True, help="Skew strength.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out-edges", type=click.Path(dir_okay=False), required=True)
@click.option("--out-params", type=click.Path(dir_okay=False), required=True)
@_guard
def simulate(n, d, m, s, latent, gamma, seed, out_edges, out_params):
    """Draw a synthetic hyperedge dataset plus its ground-truth parameters."""
    if m < 1:
        raise click.UsageError("--m must be at least 1")
    if n < 1 or d < 2:
        raise click.UsageError("need --n >= 1 and --d >= 2")
    if s <= 0:
        raise click.UsageError("--s must be positive")
    if latent == "vmf" and d != 3:
        raise click.UsageError("--latent vmf uses the canonical 3D means and needs --d 3")
    spec = ScenarioSpec(n=n, d=d, s=s, latent_law=latent, gamma=gamma, seed=seed)
    params = make_scenario(spec)
    edges, discarded = sample_dataset(params, m, seed=np.random.SeedSequence([seed, 1]))
    write_edge_list(edges, out_edges)
    scenario_echo = {
        "n": n,
        "d": d,
        "s": s,
        "latent_law": latent,
        "kappa": spec.kappa,
        "gamma": gamma,
        "seed": seed,
        "discarded_draws": discarded,
    }
    save_params(params, out_params, config=scenario_echo, seed=seed)
    flags = {
        "n": n, "d": d, "m": m, "s": s, "latent": latent, "gamma": gamma,
        "out_edges": out_edges, "out_params": out_params,
    }
    _write_manifest(out_edges, "simulate", flags, seed, [], [out_edges, out_params])
    click.echo(f"wrote {len(edges)} hyperedges ({discarded} undersized draws resampled)")


@main.command()
@click.option("--edges", "edges_path", type=click.Path(dir_okay=False), required=True)
@click.option("--d", type=int, required=True, help="Latent dimension.")
@click.option("--starts", type=int, default=5, show_default=True)
@click.option("--epochs", type=int, default=2000, show_default=True)
@click.option("--lr", type=float, default=0.01, show_default=True)
@click.option("--gamma-max", type=float, default=10.0, show_default=True)
@click.option("--symmetric", is_flag=True, help="Fix gamma = 0 and drop the skew coupling.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out-model", type=click.Path(dir_okay=False), required=True)
@click.option("--threads", type=int, default=_default_threads, help="Worker cap for multi-start.")
@_guard
def fit_cmd(edges_path, d, starts, epochs, lr, gamma_max, symmetric, seed, out_model, threads):
    """Fit model parameters to an edge-list file by maximum likelihood."""
    if d < 2:
        raise click.UsageError("--d must be at least 2")
    ds = read_edge_list(edges_path)
    if ds.provenance.relabel_map is not None:
        click.echo(
            "note: node ids were relabeled to a contiguous range; "
            "the model universe uses the relabeled ids",
            err=True,
        )
    data = EdgeCounts.from_edges(ds.edges, ds.n)
    config = FitConfig(
        d=d, starts=starts, max_epochs=epochs, step_size=lr,
        gamma_max=gamma_max, symmetric=symmetric, seed=seed,
    )
    result = fit(data, config, threads=max(1, threads))
    save_model(result, out_model)
    flags = {
        "edges": edges_path, "d": d, "starts": starts, "epochs": epochs, "lr": lr,
        "gamma_max": gamma_max, "symmetric": symmetric, "out_model": out_model,
    }
    _write_manifest(out_model, "fit", flags, seed, [edges_path], [out_model])
    click.echo(f"fitted {ds.m} edges over {ds.n} nodes; "
               f"per-edge log-likelihood {result.log_likelihood_per_edge:.6f}")


main.add_command(fit_cmd, name="fit")


@main.command()
@click.option("--model", "model_path", type=click.Path(dir_okay=False), required=True)
@click.option("--test-edges", type=click.Path(dir_okay=False), required=True)
@click.option(
    "--metric",
    type=click.Choice(["auc", "mpr", "both"]),
    default="both",
    show_default=True,
)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out-report", type=click.Path(dir_okay=False), required=True)
@_guard
def eval_cmd(model_path, test_edges, metric, seed, out_report):
    """Score held-out edges; writes a metric report and (for mpr) a rank curve."""
    result = load_model(model_path)
    params = result.params
    ds = read_edge_list(test_edges, relabel="never")
    if ds.n > params.n:
        raise DataFormatError(
            f"node-universe mismatch: test file references node ids up to {ds.n - 1} "
            f"but the model has {params.n} nodes"
        )
    dataset_name = Path(test_edges).stem
    rows = []
    outputs = [out_report]
    try:
        if metric in ("auc", "both"):
            value = auc_metric(params, ds.edges, seed)
            rows.append((dataset_name, 0, "auc", float(value)))
        if metric in ("mpr", "both"):
            value, ranks = mpr_metric(params, ds.edges, seed)
            rows.append((dataset_name, 0, "mpr", float(value)))
    except ValueError as err:
        raise DataFormatError(f"test set incompatible with the protocol: {err}") from err
    write_metrics_csv(out_report, rows)
    if metric in ("mpr", "both"):
        curve_path = str(Path(out_report).with_suffix("")) + ".curve.csv"
        write_curve_csv(curve_path, rank_curve(ranks))
        outputs.append(curve_path)
    flags = {"model": model_path, "test_edges": test_edges, "metric": metric, "out_report": out_report}
    _write_manifest(out_report, "eval", flags, seed, [model_path, test_edges], outputs)
    for row in rows:
        click.echo(f"{row[2]} = {row[3]:.6f}")


main.add_command(eval_cmd, name="eval")


@main.command()
@click.option("--model", "model_path", type=click.Path(dir_okay=False), required=True)
@click.option("--m", type=int, required=True, help="Number of hyperedges to draw.")
@click.option("--min-size", type=int, default=1, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out-edges", type=click.Path(dir_okay=False), required=True)
@_guard
def sample(model_path, m, min_size, seed, out_edges):
    """Draw hyperedges from a saved model."""
    if m < 1:
        raise click.UsageError("--m must be at least 1")
    result = load_model(model_path)
    edges, discarded = sample_dataset(result.params, m, seed=seed, min_size=min_size)
    write_edge_list(edges, out_edges)
    flags = {"model": model_path, "m": m, "min_size": min_size, "out_edges": out_edges}
    _write_manifest(out_edges, "sample", flags, seed, [model_path], [out_edges])
    click.echo(f"wrote {len(edges)} hyperedges ({discarded} undersized draws resampled)")


@main.command()
@click.option("--edges", "edges_path", type=click.Path(dir_okay=False), required=True)
@click.option("--dims", required=True, help="Comma-separated candidate dimensions, e.g. 2,3,4.")
@click.option("--folds", type=int, default=5, show_default=True)
@click.option("--starts", type=int, default=2, show_default=True)
@click.option("--epochs", type=int, default=500, show_default=True)
@click.option("--lr", type=float, default=0.01, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out-report", type=click.Path(dir_okay=False), default=None)
@click.option("--threads", type=int, default=_default_threads, help="Worker cap for multi-start.")
@_guard
def cv(edges_path, dims, folds, starts, epochs, lr, seed, out_report, threads):
    """Choose the latent dimension by K-fold held-out log-likelihood."""
    try:
        candidates = [int(t) for t in dims.split(",") if t.strip()]
    except ValueError:
        raise click.UsageError(f"--dims must be comma-separated integers, got {dims!r}")
    if not candidates:
        raise click.UsageError("--dims is empty")
    ds = read_edge_list(edges_path)
    data = EdgeCounts.from_edges(ds.edges, ds.n)
    config = FitConfig(
        d=max(2, candidates[0]), starts=starts, max_epochs=epochs, step_size=lr, seed=seed
    )
    try:
        result = cross_validate_dimension(data, candidates, config, folds=folds, threads=max(1, threads))
    except ValueError as err:
        raise DataFormatError(str(err)) from err
    click.echo(f"chosen d = {result.chosen_d}")
    for d_val in sorted(result.scores):
        click.echo(f"  d={d_val}: held-out log-likelihood {result.scores[d_val]:.6f}")
    if out_report:
        rows = [(Path(edges_path).stem, d_val, "heldout_loglik", result.scores[d_val])
                for d_val in sorted(result.scores)]
        write_metrics_csv(out_report, rows, header=("dataset", "d", "metric", "value"))
        flags = {"edges": edges_path, "dims": dims, "folds": folds, "starts": starts,
                 "epochs": epochs, "lr": lr, "out_report": out_report}
        _write_manifest(out_report, "cv", flags, seed, [edges_path], [out_report])


@main.command()
@click.option("--model", "model_path", type=click.Path(dir_okay=False), required=True)
@click.option("--truth", "truth_path", type=click.Path(dir_okay=False), required=True)
@click.option("--seed", type=int, default=0, show_default=True, help="Alignment restart seed.")
@click.option("--m", "m_label", type=int, default=None, help="Training-set size label for the report.")
@click.option("--s", "s_label", type=float, default=None, help="Scenario scaling label for the report.")
@click.option("--out-report", type=click.Path(dir_okay=False), required=True)
@_guard
def align(model_path, truth_path, seed, m_label, s_label, out_report):
    """Compare a fitted model against ground-truth parameters."""
    fitted = load_model(model_path).params
    truth = load_model(truth_path).params
    if fitted.n != truth.n or fitted.d != truth.d:
        raise DataFormatError(
            f"shape mismatch: model is ({fitted.n}, {fitted.d}), "
            f"truth is ({truth.n}, {truth.d})"
        )
    errs = aligned_errors(fitted, truth, seed=seed)
    probs = probability_errors(fitted, truth)
    truth_cfg = load_model(truth_path).config or {}
    s_val = s_label if s_label is not None else truth_cfg.get("s", "")
    m_val = m_label if m_label is not None else ""
    metrics = [
        ("v_error", errs.v_error),
        ("b_error", errs.b_error),
        ("gamma_error", errs.gamma_error),
        ("c_error", "" if errs.c_error is None else errs.c_error),
        ("l_error", errs.l_error),
        ("marginal_error", probs.marginal_error),
        ("conditional_error", probs.conditional_error),
    ]
    rows = [(name, value, seed, m_val, truth.d, s_val) for name, value in metrics]
    write_metrics_csv(out_report, rows, header=("metric", "value", "seed", "m", "d", "s"))
    flags = {"model": model_path, "truth": truth_path, "m": m_label, "s": s_label,
             "out_report": out_report}
    _write_manifest(out_report, "align", flags, seed, [model_path, truth_path], [out_report])
    for name, value in metrics:
        click.echo(f"{name} = {value if value != '' else 'n/a'}")


@main.command()
@click.option("--edges", "edges_path", type=click.Path(dir_okay=False), default=None)
@click.option("--nverts", type=click.Path(dir_okay=False), default=None)
@click.option("--simplices", type=click.Path(dir_okay=False), default=None)
@click.option("--min-size", type=int, default=2, show_default=True)
@click.option("--max-size", type=int, default=None)
@click.option("--top-k", type=int, default=None, help="Keep only the k most frequent nodes.")
@click.option("--out-summary", type=click.Path(dir_okay=False), default=None)
@click.option("--out-hist", type=click.Path(dir_okay=False), default=None,
              help="Write a size,count hyperedge-size histogram CSV.")
@_guard
def summarize_cmd(edges_path, nverts, simplices, min_size, max_size, top_k,
                  out_summary, out_hist):
    """Print dataset statistics (nodes, edges, size mean/std/range)."""
    if edges_path and (nverts or simplices):
        raise click.UsageError("pass either --edges or --nverts/--simplices, not both")
    if edges_path:
        ds = read_edge_list(edges_path, min_size=min_size)
        inputs = [edges_path]
    elif nverts and simplices:
        ds = read_nverts_simplices(nverts, simplices, min_size=min_size)
        inputs = [nverts, simplices]
    else:
        raise click.UsageError("pass --edges or both --nverts and --simplices")
    from .data_io import preprocess

    if top_k is not None or max_size is not None:
        ds = preprocess(ds, min_size=min_size, max_size=max_size, top_k_nodes=top_k)
    summary = summarize(ds)
    click.echo(str(summary))
    for line in ds.provenance.log:
        click.echo(f"  [{line}]", err=True)
    outputs = []
    if out_summary:
        with open(out_summary, "w", encoding="utf-8") as fh:
            json.dump(summary.as_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")
        outputs.append(out_summary)
    if out_hist:
        hist = collections.Counter(len(e) for e in ds.edges)
        write_metrics_csv(out_hist, sorted(hist.items()), header=("size", "count"))
        outputs.append(out_hist)
    if outputs:
        flags = {"edges": edges_path, "nverts": nverts, "simplices": simplices,
                 "min_size": min_size, "max_size": max_size, "top_k": top_k,
                 "out_summary": out_summary, "out_hist": out_hist}
        _write_manifest(outputs[0], "summarize", flags, None, inputs, outputs)


main.add_command(summarize_cmd, name="summarize")


if __name__ == "__main__":
    main()
