"""Command-line surface: taxonomy tools, training, prediction, scoring.

Every command with the same inputs, flags and seed produces byte-identical
outputs; all reports are JSON written to stdout or ``--out``.
"""
from __future__ import annotations

import functools
import json
import sys
from pathlib import Path

import click

from . import binary as binary_mod
from . import cdp as cdp_mod
from . import hypemo as hypemo_mod
from .cones import (
    ConeTrainConfig,
    edge_energies,
    load_label_embedding,
    save_label_embedding,
    train_label_embeddings,
)
from .dataio import (
    FeatureFile,
    concat_features,
    read_binary_labels,
    read_dataset,
    read_features,
    read_predictions,
    stats as dataset_stats,
    write_binary_predictions,
    write_predictions,
)
from .ensemble import union_ensemble
from .errors import PersuasionError
from .metrics import hierarchical_report, macro_f1
from .taxonomy import dag_to_tree, leaf_set, load_taxonomy


def _emit(doc, out: str | None) -> None:
    text = json.dumps(doc, ensure_ascii=False, indent=2) + "\n"
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _friendly_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except PersuasionError as exc:
            raise click.ClickException(str(exc)) from exc
    return wrapper


def _load_features(features: str, image_features: str | None) -> FeatureFile:
    ff = read_features(features)
    if image_features:
        ff = concat_features(ff, read_features(image_features))
    return ff


@click.group()
def main() -> None:
    """Hierarchical persuasion-technique classification toolkit."""


# -- taxonomy -----------------------------------------------------------------

@main.group()
def taxonomy() -> None:
    """Inspect and convert taxonomy files."""


@taxonomy.command("check")
@click.option("--taxonomy", "taxonomy_path", required=True, type=click.Path(exists=True))
@click.option("--out", default=None)
@_friendly_errors
def taxonomy_check(taxonomy_path: str, out: str | None) -> None:
    """Validate a taxonomy file and report its shape."""
    t = load_taxonomy(taxonomy_path)
    tree = dag_to_tree(t)
    _emit({
        "root": t.root,
        "nodes": len(t.nodes),
        "edges": len(t.edges),
        "leaves": len(t.leaf_index),
        "tree_nodes": len(tree),
        "valid": True,
    }, out)


@taxonomy.command("to-tree")
@click.option("--taxonomy", "taxonomy_path", required=True, type=click.Path(exists=True))
@click.option("--out", default=None)
@_friendly_errors
def taxonomy_to_tree(taxonomy_path: str, out: str | None) -> None:
    """Expand the DAG into its root-path tree."""
    tree = dag_to_tree(load_taxonomy(taxonomy_path))
    _emit({
        "tree_nodes": [[n.node_id, n.label, n.parent_id] for n in tree.tree_nodes],
        "label_to_nodes": {k: list(v) for k, v in sorted(tree.label_to_nodes.items())},
    }, out)


# -- label embedding ----------------------------------------------------------

@main.group("embed-labels")
def embed_labels() -> None:
    """Train hyperbolic label embeddings."""


@embed_labels.command("train")
@click.option("--taxonomy", "taxonomy_path", required=True, type=click.Path(exists=True))
@click.option("--out", required=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--epochs", default=ConeTrainConfig.epochs, show_default=True)
@click.option("--lr", default=ConeTrainConfig.learning_rate, show_default=True)
@click.option("--dim", default=ConeTrainConfig.dim, show_default=True)
@click.option("--cone-k", default=ConeTrainConfig.cone_k, show_default=True)
@click.option("--negatives", default=ConeTrainConfig.negatives_per_positive, show_default=True)
@click.option("--burn-in", default=ConeTrainConfig.burn_in_epochs, show_default=True)
@click.option("--margin", default=ConeTrainConfig.margin, show_default=True)
@_friendly_errors
def embed_labels_train(taxonomy_path: str, out: str, seed: int, epochs: int,
                       lr: float, dim: int, cone_k: float, negatives: int,
                       burn_in: int, margin: float) -> None:
    """Fit entailment-cone embeddings for every tree node."""
    tree = dag_to_tree(load_taxonomy(taxonomy_path))
    cfg = ConeTrainConfig(dim=dim, cone_k=cone_k, epochs=epochs, learning_rate=lr,
                          burn_in_epochs=burn_in, negatives_per_positive=negatives,
                          margin=margin, seed=seed)
    emb = train_label_embeddings(tree, cfg)
    save_label_embedding(emb, out)
    energies = list(edge_energies(emb, tree).values())
    satisfied = sum(1 for e in energies if e < cfg.margin)
    click.echo(json.dumps({
        "tree_nodes": len(tree),
        "edges": len(energies),
        "edges_below_margin": satisfied,
        "final_epoch_loss": emb.history[-1] if emb.history else 0.0,
    }), err=True)


# -- training -----------------------------------------------------------------

def _train_common(fn):
    fn = click.option("--lr", default=None, type=float)(fn)
    fn = click.option("--epochs", default=None, type=int)(fn)
    fn = click.option("--batch-size", default=None, type=int)(fn)
    fn = click.option("--seed", default=0, show_default=True)(fn)
    fn = click.option("--model", "model_path", required=True)(fn)
    return fn


@main.group()
def train() -> None:
    """Train a classifier head on precomputed features."""


@train.command("hypemo")
@click.option("--data", required=True, type=click.Path(exists=True))
@click.option("--features", required=True, type=click.Path(exists=True))
@click.option("--image-features", default=None, type=click.Path(exists=True))
@click.option("--taxonomy", "taxonomy_path", required=True, type=click.Path(exists=True))
@click.option("--label-emb", required=True, type=click.Path(exists=True))
@click.option("--tau", default=1.0, show_default=True)
@_train_common
@_friendly_errors
def train_hypemo_cmd(data: str, features: str, image_features: str | None,
                     taxonomy_path: str, label_emb: str, tau: float, seed: int,
                     model_path: str, epochs: int | None, lr: float | None,
                     batch_size: int | None) -> None:
    """Train the distance-weighted softmax head."""
    t = load_taxonomy(taxonomy_path)
    tree = dag_to_tree(t)
    emb = load_label_embedding(label_emb, tree)
    samples = read_dataset(data, t)
    ff = _load_features(features, image_features)
    feats = dict(ff.records_for([s.sample_id for s in samples]))
    rows = hypemo_mod.explode_multilabel(
        [(s.sample_id, feats[s.sample_id].astype(float), s.labels) for s in samples])
    cfg = hypemo_mod.HypemoConfig(seed=seed, zscore_threshold=tau)
    if epochs is not None:
        cfg.epochs = epochs
    if lr is not None:
        cfg.learning_rate = lr
    if batch_size is not None:
        cfg.batch_size = batch_size
    model = hypemo_mod.train_hypemo(rows, emb, leaf_set(t), cfg)
    hypemo_mod.save_hypemo(model, model_path)


@train.command("cdp")
@click.option("--data", required=True, type=click.Path(exists=True))
@click.option("--features", required=True, type=click.Path(exists=True))
@click.option("--image-features", default=None, type=click.Path(exists=True))
@click.option("--definitions", required=True, type=click.Path(exists=True))
@click.option("--taxonomy", "taxonomy_path", required=True, type=click.Path(exists=True))
@click.option("--lambda-aux", default=0.3, show_default=True)
@_train_common
@_friendly_errors
def train_cdp_cmd(data: str, features: str, image_features: str | None,
                  definitions: str, taxonomy_path: str, lambda_aux: float,
                  seed: int, model_path: str, epochs: int | None,
                  lr: float | None, batch_size: int | None) -> None:
    """Train the class-definition multi-task head."""
    t = load_taxonomy(taxonomy_path)
    samples = [s for s in read_dataset(data, t) if s.labels]
    ff = _load_features(features, image_features)
    feats = dict(ff.records_for([s.sample_id for s in samples]))
    defs_ff = read_features(definitions)
    defs = {sid: vec.astype(float) for sid, vec in defs_ff.records()}
    rows = [(s.sample_id, feats[s.sample_id].astype(float), s.labels) for s in samples]
    cfg = cdp_mod.CdpConfig(seed=seed, lambda_aux=lambda_aux)
    if epochs is not None:
        cfg.epochs = epochs
    if lr is not None:
        cfg.learning_rate = lr
    if batch_size is not None:
        cfg.batch_size = batch_size
    model = cdp_mod.train_cdp(rows, defs, leaf_set(t), cfg)
    cdp_mod.save_cdp(model, model_path)


@train.command("binary")
@click.option("--data", required=True, type=click.Path(exists=True))
@click.option("--features", required=True, type=click.Path(exists=True))
@click.option("--image-features", required=True, type=click.Path(exists=True))
@_train_common
@_friendly_errors
def train_binary_cmd(data: str, features: str, image_features: str, seed: int,
                     model_path: str, epochs: int | None, lr: float | None,
                     batch_size: int | None) -> None:
    """Train the binary persuasion detector."""
    labels = read_binary_labels(data)
    text_ff = read_features(features)
    image_ff = read_features(image_features)
    ids = list(labels)
    cfg = binary_mod.BinaryConfig(seed=seed)
    if epochs is not None:
        cfg.epochs = epochs
    if lr is not None:
        cfg.learning_rate = lr
    if batch_size is not None:
        cfg.batch_size = batch_size
    model = binary_mod.train_binary(text_ff.records_for(ids),
                                    image_ff.records_for(ids), labels, cfg)
    binary_mod.save_binary(model, model_path)


# -- prediction ---------------------------------------------------------------

@main.group()
def predict() -> None:
    """Predict with a trained model over a feature file."""


@predict.command("hypemo")
@click.option("--features", required=True, type=click.Path(exists=True))
@click.option("--image-features", default=None, type=click.Path(exists=True))
@click.option("--model", "model_path", required=True, type=click.Path(exists=True))
@click.option("--out", required=True)
@click.option("--tau", default=None, type=float,
              help="Override the threshold stored in the model.")
@_friendly_errors
def predict_hypemo_cmd(features: str, image_features: str | None,
                       model_path: str, out: str, tau: float | None) -> None:
    model = hypemo_mod.load_hypemo(model_path)
    if tau is not None:
        model.config.zscore_threshold = tau
    ff = _load_features(features, image_features)
    write_predictions(hypemo_mod.predict_hier(model, ff.records()), out)


@predict.command("cdp")
@click.option("--features", required=True, type=click.Path(exists=True))
@click.option("--image-features", default=None, type=click.Path(exists=True))
@click.option("--model", "model_path", required=True, type=click.Path(exists=True))
@click.option("--out", required=True)
@_friendly_errors
def predict_cdp_cmd(features: str, image_features: str | None,
                    model_path: str, out: str) -> None:
    model = cdp_mod.load_cdp(model_path)
    ff = _load_features(features, image_features)
    write_predictions(cdp_mod.predict_cdp(model, ff.records()), out)


@predict.command("binary")
@click.option("--features", required=True, type=click.Path(exists=True))
@click.option("--image-features", required=True, type=click.Path(exists=True))
@click.option("--model", "model_path", required=True, type=click.Path(exists=True))
@click.option("--out", required=True)
@_friendly_errors
def predict_binary_cmd(features: str, image_features: str, model_path: str,
                       out: str) -> None:
    model = binary_mod.load_binary(model_path)
    text_ff = read_features(features)
    image_ff = read_features(image_features)
    rows = binary_mod.predict_binary(model, text_ff.records(),
                                     image_ff.records_for(text_ff.ids))
    write_binary_predictions(rows, out)


# -- ensembling and scoring ----------------------------------------------------

@main.group()
def ensemble() -> None:
    """Combine prediction files."""


@ensemble.command("union")
@click.argument("files", nargs=-1, required=True, type=click.Path(exists=True))
@click.option("--out", required=True)
@_friendly_errors
def ensemble_union(files: tuple[str, ...], out: str) -> None:
    """Per-sample union of the label sets of all FILES."""
    write_predictions(union_ensemble([read_predictions(f) for f in files]), out)


@main.group()
def score() -> None:
    """Score prediction files against gold labels."""


@score.command("hier")
@click.argument("gold", type=click.Path(exists=True))
@click.argument("pred", type=click.Path(exists=True))
@click.option("--taxonomy", "taxonomy_path", required=True, type=click.Path(exists=True))
@click.option("--out", default=None)
@_friendly_errors
def score_hier(gold: str, pred: str, taxonomy_path: str, out: str | None) -> None:
    """Hierarchical precision/recall/F1 plus per-leaf F1."""
    t = load_taxonomy(taxonomy_path)
    report = hierarchical_report(t, read_predictions(gold), read_predictions(pred))
    _emit(report.to_dict(), out)


@score.command("binary")
@click.argument("gold", type=click.Path(exists=True))
@click.argument("pred", type=click.Path(exists=True))
@click.option("--out", default=None)
@_friendly_errors
def score_binary(gold: str, pred: str, out: str | None) -> None:
    """Macro-F1 over the two binary classes."""
    gold_map = read_binary_labels(gold)
    pred_map = read_binary_labels(pred)
    if gold_map.keys() != pred_map.keys():
        raise click.ClickException("gold/pred ids differ")
    ids = list(gold_map)
    report = macro_f1([gold_map[i] for i in ids], [pred_map[i] for i in ids])
    _emit(report.to_dict(), out)


@main.command("stats")
@click.option("--data", required=True, type=click.Path(exists=True))
@click.option("--taxonomy", "taxonomy_path", required=True, type=click.Path(exists=True))
@click.option("--out", default=None)
@_friendly_errors
def stats_cmd(data: str, taxonomy_path: str, out: str | None) -> None:
    """Per-label frequency table of a labeled dataset."""
    t = load_taxonomy(taxonomy_path)
    _emit(dataset_stats(read_dataset(data, t), t), out)


if __name__ == "__main__":
    main()
