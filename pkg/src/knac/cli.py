"""Command-line entry points for every workflow stage.

Exit codes: 0 success, 1 runtime failure, 2 validation error. All
subcommands are deterministic given their flags (including --seed).
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click
import numpy as np

from . import scenarios
from .clusterer import KMeansConfig, kmeans
from .dataset import load_dataset, save_dataset
from .errors import KnacError, ValidationError
from .explain import RuleConfig, bounding_box
from .metrics import agreement
from .recommend import RecommendParams, recommend_all, render
from .rulebase import kb_table, kb_text
from .session import Decision, SessionStore, data_dir_from_env, json_dumps, start


def _fail(exc: Exception) -> None:
    click.echo(f"error: {exc}", err=True)
    sys.exit(2 if isinstance(exc, ValidationError) else 1)


def _params(ctx_args: dict) -> RecommendParams:
    return RecommendParams(
        epsilon_split=ctx_args["epsilon_split"],
        lambda_split=ctx_args["lambda_split"],
        epsilon_merge=ctx_args["epsilon_merge"],
        lambda_merge=ctx_args["lambda_merge"],
        linkage=ctx_args["linkage"],
        silhouette_cap=ctx_args["silhouette_cap"],
        seed=ctx_args["seed"],
    )


def _load(data, expert, clusters, kmeans_k, seed):
    ds = load_dataset(data, expert, clusters)
    if not ds.has_clusters:
        if kmeans_k is None:
            raise ValidationError(
                "no cluster labels: pass --clusters FILE or --kmeans K")
        labels = kmeans(ds.features, KMeansConfig(k=kmeans_k, seed=seed))
        ds = ds.with_cluster_labels(labels)
    return ds


def _write_outputs(out: Path, ds, m, h_split, h_merge, splits, merges,
                   explanations=None) -> None:
    out.mkdir(parents=True, exist_ok=True)
    recs = []
    texts = []
    for rec in splits + merges:
        d = rec.to_json_dict()
        d["render_text"] = render(rec, ds)
        recs.append(d)
        texts.append(d["render_text"])
    (out / "recommendations.json").write_text(json_dumps(recs), encoding="utf-8")
    (out / "recommendations.txt").write_text(
        "\n\n".join(texts) + ("\n" if texts else ""), encoding="utf-8")
    matrices = {
        "contingency": m.to_json_dict(),
        "h_merge": h_merge.to_json_dict(),
        "h_split": h_split.to_json_dict(),
        "expert_names": {str(i): ds.expert_name(i) for i in range(ds.n_expert)},
        "cluster_names": {str(j): ds.cluster_name(j) for j in range(ds.n_cluster)},
    }
    (out / "matrices.json").write_text(json_dumps(matrices), encoding="utf-8")
    if explanations is not None:
        (out / "explanations.json").write_text(json_dumps(explanations), encoding="utf-8")


param_options = [
    click.option("--epsilon-split", type=float, default=0.8, show_default=True),
    click.option("--lambda-split", type=float, default=0.1, show_default=True),
    click.option("--epsilon-merge", type=float, default=0.8, show_default=True),
    click.option("--lambda-merge", type=float, default=0.2, show_default=True),
    click.option("--linkage", type=click.Choice(["single", "complete", "average", "centroid"]),
                 default="average", show_default=True),
    click.option("--silhouette-cap", type=int, default=2000, show_default=True),
    click.option("--seed", type=int, default=0, show_default=True),
    click.option("--axis-mode", type=click.Choice(["column", "row"]),
                 default="column", show_default=True),
]

input_options = [
    click.option("--data", required=True, type=click.Path()),
    click.option("--expert", required=True, type=click.Path()),
    click.option("--clusters", type=click.Path(), default=None),
    click.option("--kmeans", "kmeans_k", type=int, default=None,
                 help="cluster with k-means when no clusters file is given"),
]


def _apply_options(options):
    def wrap(fn):
        for opt in reversed(options):
            fn = opt(fn)
        return fn
    return wrap


@click.group()
def main():
    """Refine expert cluster labelings against automated clusterings."""


@main.command("recommend")
@_apply_options(input_options)
@_apply_options(param_options)
@click.option("-o", "--out", required=True, type=click.Path())
def cmd_recommend(**kw):
    """Compute matrices and split/merge recommendations."""
    try:
        params = _params(kw)
        ds = _load(kw["data"], kw["expert"], kw["clusters"], kw["kmeans_k"], kw["seed"])
        m, hs, hm, splits, merges = recommend_all(ds, params, kw["axis_mode"])
        _write_outputs(Path(kw["out"]), ds, m, hs, hm, splits, merges)
    except KnacError as exc:
        _fail(exc)


@main.command("explain")
@_apply_options(input_options)
@_apply_options(param_options)
@click.option("--max-conditions", type=int, default=3, show_default=True)
@click.option("--precision-target", type=float, default=0.95, show_default=True)
@click.option("--quantile-grid", type=int, default=10, show_default=True)
@click.option("-o", "--out", required=True, type=click.Path())
def cmd_explain(**kw):
    """Recommendations plus rule explanations and bounding boxes."""
    try:
        from .explain import explain_merge, explain_split

        params = _params(kw)
        config = RuleConfig(kw["max_conditions"], kw["precision_target"], kw["quantile_grid"])
        ds = _load(kw["data"], kw["expert"], kw["clusters"], kw["kmeans_k"], kw["seed"])
        m, hs, hm, splits, merges = recommend_all(ds, params, kw["axis_mode"])
        explanations = []
        text_blocks = []
        for rec in splits:
            rules = explain_split(ds, rec, config)
            explanations.append({
                "recommendation": rec.to_json_dict(),
                "rules": [r.to_json_dict() for r in rules],
            })
            text_blocks.append(render(rec, ds) + "\n" + "\n".join(
                r.text(ds.cluster_name(r.target_label)) for r in rules))
        for rec in merges:
            rules = explain_merge(ds, rec, config)
            explanations.append({
                "recommendation": rec.to_json_dict(),
                "rules": [r.to_json_dict() for r in rules],
            })
            text_blocks.append(render(rec, ds) + "\n" + "\n".join(
                r.text(ds.expert_name(r.target_label)) for r in rules))
        _write_outputs(Path(kw["out"]), ds, m, hs, hm, splits, merges, explanations)
        (Path(kw["out"]) / "explanations.txt").write_text(
            "\n\n".join(text_blocks) + ("\n" if text_blocks else ""), encoding="utf-8")
    except KnacError as exc:
        _fail(exc)


@main.command("eval")
@click.option("--labels-a", required=True, type=click.Path())
@click.option("--labels-b", required=True, type=click.Path())
@click.option("--format", "fmt", type=click.Choice(["json", "text"]), default="json")
def cmd_eval(labels_a, labels_b, fmt):
    """Agreement scores (homogeneity/completeness/v-measure) of two labelings."""
    try:
        from .dataset import _canonicalize, _parse_labels

        a, _ = _parse_labels(Path(labels_a))
        b, _ = _parse_labels(Path(labels_b))
        if len(a) != len(b):
            raise ValidationError(
                f"label files disagree: {len(a)} rows vs {len(b)} rows")
        va, _ = _canonicalize(a)
        vb, _ = _canonicalize(b)
        scores = agreement(va, vb)
        if fmt == "json":
            click.echo(json_dumps(scores.to_json_dict()), nl=False)
        else:
            click.echo(f"homogeneity  {scores.homogeneity:.4f}")
            click.echo(f"completeness {scores.completeness:.4f}")
            click.echo(f"v-measure    {scores.v_measure:.4f}")
    except KnacError as exc:
        _fail(exc)


@main.command("start")
@_apply_options(input_options)
@_apply_options(param_options)
@click.option("--session-id", required=True)
@click.option("--data-dir", type=click.Path(), default=None,
              help="session store root (default: $KNAC_DATA_DIR or ./knac_data)")
@click.option("--reference", type=click.Path(), default=None,
              help="ground-truth labels the metrics history scores against")
def cmd_start(**kw):
    """Open a persistent refinement session."""
    try:
        ds = _load(kw["data"], kw["expert"], kw["clusters"], kw["kmeans_k"], kw["seed"])
        reference = None
        if kw["reference"]:
            from .dataset import _canonicalize, _parse_labels
            raw, _ = _parse_labels(Path(kw["reference"]))
            reference, _ = _canonicalize(raw)
        store = SessionStore(data_dir_from_env(kw["data_dir"]))
        session = start(ds, _params(kw), session_id=kw["session_id"],
                        axis_mode=kw["axis_mode"], reference_labels=reference,
                        store=store)
        click.echo(json_dumps({
            "id": session.session_id,
            "iteration": session.iteration,
            "pending": [p.rec_id for p in session.pending],
        }), nl=False)
    except KnacError as exc:
        _fail(exc)


@main.command("apply")
@click.option("--session-id", required=True)
@click.option("--data-dir", type=click.Path(), default=None)
@click.option("--accept", "accepts", multiple=True, help="recommendation id to accept")
@click.option("--reject", "rejects", multiple=True, help="recommendation id to reject")
def cmd_apply(session_id, data_dir, accepts, rejects):
    """Apply one round of decisions to a session."""
    try:
        store = SessionStore(data_dir_from_env(data_dir))
        session = store.load(session_id)
        decisions = [Decision(r, "accept") for r in accepts]
        decisions += [Decision(r, "reject") for r in rejects]
        session.iterate(decisions)
        click.echo(json_dumps({
            "converged": session.converged,
            "iteration": session.iteration,
            "kb_version": session.kb.version,
            "pending": [p.rec_id for p in session.pending],
        }), nl=False)
    except KnacError as exc:
        _fail(exc)


@main.command("auto-expert")
@click.option("--session-id", required=True)
@click.option("--data-dir", type=click.Path(), default=None)
@click.option("--threshold", type=float, default=0.8, show_default=True)
@click.option("--iteration-cap", type=int, default=20, show_default=True)
def cmd_auto_expert(session_id, data_dir, threshold, iteration_cap):
    """Run a session to convergence with a scripted accept-above-threshold expert."""
    try:
        store = SessionStore(data_dir_from_env(data_dir))
        session = store.load(session_id)
        session.auto_expert(threshold, iteration_cap)
        click.echo(json_dumps({
            "converged": session.converged,
            "iteration": session.iteration,
            "metrics_history": [m.to_json_dict() for m in session.metrics_history],
        }), nl=False)
    except KnacError as exc:
        _fail(exc)


@main.command("kb")
@click.option("--session-id", required=True)
@click.option("--data-dir", type=click.Path(), default=None)
@click.option("--format", "fmt", type=click.Choice(["json", "text", "table"]),
              default="text", show_default=True)
def cmd_kb(session_id, data_dir, fmt):
    """Print a session's knowledge base."""
    try:
        store = SessionStore(data_dir_from_env(data_dir))
        session = store.load(session_id)
        if fmt == "json":
            click.echo(session.kb.to_json(), nl=False)
        elif fmt == "table":
            click.echo(kb_table(session.kb, session.name_of), nl=False)
        else:
            click.echo(kb_text(session.kb, session.name_of), nl=False)
    except KnacError as exc:
        _fail(exc)


@main.command("demo")
@click.option("--scenario", required=True,
              type=click.Choice(list(scenarios.SCENARIOS)))
@click.option("--seed", type=int, default=7, show_default=True)
@click.option("-o", "--out", required=True, type=click.Path())
@click.option("--data-dir", type=click.Path(), default=None,
              help="also open a session in this store (id: demo-<scenario>-<seed>)")
@_apply_options(param_options[:6])  # scenario --seed doubles as the params seed
def cmd_demo(**kw):
    """Generate a seeded scenario and write its full recommendation report."""
    try:
        sc = scenarios.make_scenario(kw["scenario"], kw["seed"])
        params = _params(kw)
        out = Path(kw["out"])
        out.mkdir(parents=True, exist_ok=True)
        save_dataset(sc.ds, out / "data.csv", out / "expert.csv",
                     out / "clusters.csv", out / "label_map.json")
        (out / "truth.csv").write_text(
            "\n".join(str(int(v)) for v in sc.truth) + "\n", encoding="utf-8")
        m, hs, hm, splits, merges = recommend_all(sc.ds, params)
        _write_outputs(out, sc.ds, m, hs, hm, splits, merges)
        boxes = [bounding_box(sc.ds, lbl).to_json_dict()
                 for lbl in range(sc.ds.n_expert)]
        (out / "bounding_boxes.json").write_text(json_dumps(boxes), encoding="utf-8")
        if kw["data_dir"]:
            store = SessionStore(data_dir_from_env(kw["data_dir"]))
            start(sc.ds, params, session_id=f"demo-{kw['scenario']}-{kw['seed']}",
                  reference_labels=sc.truth, store=store)
        click.echo(f"wrote {out}")
    except KnacError as exc:
        _fail(exc)


@main.command("serve")
@click.option("--port", type=int, default=8080, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--data-dir", type=click.Path(), default=None)
def cmd_serve(port, host, data_dir):
    """Serve the HTTP session API (and the review UI when built)."""
    try:
        import uvicorn

        from .service import create_app

        app = create_app(SessionStore(data_dir_from_env(data_dir)))
        uvicorn.run(app, host=host, port=port, log_level="warning")
    except KnacError as exc:
        _fail(exc)


if __name__ == "__main__":
    main()
