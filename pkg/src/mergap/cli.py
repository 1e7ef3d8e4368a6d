"""Command line front end.

Eight subcommands cover the pipeline: ingest, features, train, grid,
divergence, cluster, project, final. Every command takes --out-dir and
writes its artifacts there plus a run.json describing the resolved
configuration; option precedence is flag > --config file > built-in
default. Failures print a one-object JSON error to stderr and exit 1.

Datasets are always passed as colon-joined file specs:

    MANIFEST.csv:SIDECAR.json[:FEATURES.emb1[:EXTRA.emb1]]

The sidecar names the dataset and its annotation scale; feature files are
EMB1 containers keyed by clip id (precomputed embeddings or the stat
descriptors written by the features command).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from contextlib import contextmanager
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import __version__, kernels
from ._rng import clip_seed
from .audio_features import (
    AudioError,
    ChromaParams,
    MfccParams,
    compute_chromagram,
    compute_mfcc,
    load_wav,
    resample,
    select_segment,
    summarize_stats,
)
from .datasets import (
    Dataset,
    ManifestError,
    combine,
    genre_histogram,
    load_dataset,
    load_split,
    make_splits,
    normalize_dataset,
    save_split,
)
from .embedding_io import EmbeddingFormatError, read_emb1, table_from_rows, write_emb1
from .evaluation import (
    EvalDataset,
    FinalRun,
    cross_grid,
    evaluate,
    final_experiment,
    render_final_csv,
    render_grid_csv,
    render_grid_table,
    split_xy,
    train_on,
)
from .gap_analysis import (
    cluster_composition,
    divergence_matrix,
    inter_centroid_stats,
    kmeans,
    tsne,
)
from .regressor import CheckpointError, TrainConfig, TrainingDivergedError, predict, save_checkpoint
from .svgplot import heatmap_svg, scatter_svg

DEFAULTS = {
    "seed": 0,
    "segment_s": 25.0,
    "orders": None,  # per-kind below
    "orders_chroma": 2,
    "orders_mfcc": 3,
    "projections": 128,
    "bins": 32,
    "k": 3,
    "perplexity": 30.0,
    "iters": 1000,
    "hidden1": 1024,
    "hidden2": 512,
    "dropout_in": 0.1,
    "dropout_hidden": 0.3,
    "learning_rate": 1e-4,
    "batch_size": 32,
    "max_epochs": 300,
    "patience": 20,
}


class CliError(Exception):
    """User-facing command error (bad arguments, unusable inputs)."""


EXPECTED_ERRORS = (
    CliError,
    ManifestError,
    AudioError,
    EmbeddingFormatError,
    CheckpointError,
    TrainingDivergedError,
    ValueError,
    OSError,
)


def _load_config_file(path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise CliError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise CliError(f"config {path} must hold a JSON object")
    unknown = set(doc) - set(DEFAULTS)
    if unknown:
        raise CliError(f"config {path} has unknown keys: {sorted(unknown)}")
    return doc


class Settings:
    """Resolved options, flag > config file > default, recorded for run.json."""

    def __init__(self, args: argparse.Namespace):
        self.config_doc = _load_config_file(args.config) if args.config else {}
        self.args = args
        self.resolved: dict = {}

    def get(self, key: str):
        flag = getattr(self.args, key, None)
        if flag is not None:
            value = flag
        elif key in self.config_doc:
            value = self.config_doc[key]
        else:
            value = DEFAULTS[key]
        self.resolved[key] = value
        return value

    def train_config(self) -> TrainConfig:
        return TrainConfig(
            hidden1=int(self.get("hidden1")),
            hidden2=int(self.get("hidden2")),
            dropout_in=float(self.get("dropout_in")),
            dropout_hidden=float(self.get("dropout_hidden")),
            learning_rate=float(self.get("learning_rate")),
            batch_size=int(self.get("batch_size")),
            max_epochs=int(self.get("max_epochs")),
            patience=int(self.get("patience")),
            seed=int(self.get("seed")),
        )


@contextmanager
def locked_out_dir(out_dir: Path):
    """Exclusive .lock file guards against concurrent writers of one out-dir."""
    out_dir.mkdir(parents=True, exist_ok=True)
    lock = out_dir / ".lock"
    try:
        fd = os.open(lock, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
    except FileExistsError:
        raise CliError(
            f"{out_dir} is locked by another run (remove stale {lock} if no run is active)"
        ) from None
    try:
        os.write(fd, f"{os.getpid()}\n".encode())
        os.close(fd)
        yield out_dir
    finally:
        try:
            lock.unlink()
        except FileNotFoundError:
            pass


def write_run_json(out_dir: Path, command: str, settings: Settings, extra: dict | None = None):
    doc = {
        "command": command,
        "version": __version__,
        "kernel_backend": kernels.BACKEND,
        "config": settings.resolved,
        "defaults": {k: v for k, v in DEFAULTS.items() if v is not None},
    }
    if extra:
        doc.update(extra)
    (out_dir / "run.json").write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_csv(path: Path, header, rows) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    path.write_text("\n".join(lines) + "\n")


def parse_spec(spec: str, n_features: int, what: str = "--dataset"):
    """Split MANIFEST:SIDECAR[:EMB1...] and check the file count."""
    parts = spec.split(":")
    if len(parts) != 2 + n_features:
        raise CliError(
            f"{what} expects {2 + n_features} colon-joined paths "
            f"(manifest:sidecar{':features' * n_features}), got {spec!r}"
        )
    for part in parts:
        if not part:
            raise CliError(f"{what} has an empty path component in {spec!r}")
    return parts


def load_features_table(path):
    table = read_emb1(path)
    index = {cid: i for i, cid in enumerate(table.ids)}
    return table, index


def features_for(records, feature_paths) -> np.ndarray:
    """Row-align (and fuse, when several files are given) features to records."""
    tables = [load_features_table(p) for p in feature_paths]
    blocks = []
    for table, index in tables:
        missing = [rec.clip_id for rec in records if rec.clip_id not in index]
        if missing:
            shown = ", ".join(missing[:5])
            raise CliError(
                f"{table.model_id}: {len(missing)} manifest clips missing from "
                f"feature file (first: {shown})"
            )
        blocks.append(
            np.stack([table.values[index[rec.clip_id]] for rec in records]).astype(np.float64)
        )
    return np.concatenate(blocks, axis=1) if len(blocks) > 1 else blocks[0]


def labels_of(records) -> np.ndarray:
    return np.array([[rec.raw_valence, rec.raw_arousal] for rec in records], dtype=np.float64)


def build_eval_dataset(raw: Dataset, feature_paths, seed: int, split=None) -> EvalDataset:
    norm = normalize_dataset(raw)
    split = split or make_splits(norm.records, seed=seed)
    return EvalDataset(
        dataset_id=raw.dataset_id,
        clip_ids=tuple(rec.clip_id for rec in norm.records),
        x=features_for(norm.records, feature_paths),
        y=labels_of(norm.records),
        split=split,
    )


def build_combined_eval(members, seed: int) -> EvalDataset:
    """members: list of (raw Dataset, feature_paths). Ids get dataset prefixes."""
    combined = combine([raw for raw, _ in members], seed=seed)
    by_member = {raw.dataset_id: features_for(normalize_dataset(raw).records, paths)
                 for raw, paths in members}
    order = {raw.dataset_id: [rec.clip_id for rec in raw.records] for raw, _ in members}
    rows = {}
    for raw, _ in members:
        feats = by_member[raw.dataset_id]
        for i, cid in enumerate(order[raw.dataset_id]):
            rows[f"{raw.dataset_id}:{cid}"] = feats[i]
    x = np.stack([rows[rec.clip_id] for rec in combined.records])
    dims = {feats.shape[1] for feats in by_member.values()}
    if len(dims) != 1:
        raise CliError(f"member feature dims differ: {sorted(dims)}")
    return EvalDataset(
        dataset_id="+".join(combined.member_ids),
        clip_ids=tuple(rec.clip_id for rec in combined.records),
        x=x,
        y=labels_of(combined.records),
        split=combined.split,
    )


def load_spec_datasets(specs, n_features: int, what: str = "--dataset"):
    """Parse and load repeated dataset specs; duplicate dataset ids are an error."""
    out = []
    seen = set()
    for spec in specs:
        parts = parse_spec(spec, n_features, what)
        raw = load_dataset(parts[0], parts[1])
        if raw.dataset_id in seen:
            raise CliError(f"duplicate dataset id {raw.dataset_id!r} in {what} specs")
        seen.add(raw.dataset_id)
        out.append((raw, parts[2:]))
    return out


# ---------------------------------------------------------------- commands


def cmd_ingest(args) -> int:
    settings = Settings(args)
    seed = int(settings.get("seed"))
    raw = load_dataset(args.manifest, args.sidecar)
    norm = normalize_dataset(raw)
    split = make_splits(norm.records, seed=seed)
    with locked_out_dir(Path(args.out_dir)) as out:
        write_csv(
            out / "labels.csv",
            ["clip_id", "valence", "arousal"],
            [[rec.clip_id, rec.raw_valence, rec.raw_arousal] for rec in norm.records],
        )
        save_split(split, out / "split.json")
        write_csv(
            out / "genres.csv",
            ["genre", "count"],
            list(genre_histogram(norm.records).items()),
        )
        sizes = split.sizes()
        summary = (
            f"dataset {raw.dataset_id}: {len(raw.records)} clips\n"
            f"scale v:[{raw.scale.v_min}, {raw.scale.v_max}] "
            f"a:[{raw.scale.a_min}, {raw.scale.a_max}]\n"
            f"splits train/val/test: {sizes['train']}/{sizes['val']}/{sizes['test']}\n"
        )
        (out / "summary.txt").write_text(summary)
        write_run_json(out, "ingest", settings, {"dataset_id": raw.dataset_id})
    print(summary, end="")
    return 0


def cmd_features(args) -> int:
    settings = Settings(args)
    seed = int(settings.get("seed"))
    segment_s = float(settings.get("segment_s"))
    kind = args.kind
    orders = args.orders
    if orders is None:
        orders = int(settings.get("orders_chroma" if kind == "chroma" else "orders_mfcc"))
    settings.resolved["orders"] = orders
    raw = load_dataset(args.manifest, args.sidecar)
    audio_root = Path(args.audio_root) if args.audio_root else Path(args.manifest).parent
    rows = {}
    for rec in raw.records:
        clip = resample(load_wav(audio_root / rec.audio_path))
        if segment_s > 0:
            clip = select_segment(clip, segment_s, seed=clip_seed(seed, rec.clip_id))
        if kind == "chroma":
            gram = compute_chromagram(clip, ChromaParams())
        else:
            gram = compute_mfcc(clip, MfccParams())
        rows[rec.clip_id] = summarize_stats(gram, orders).values.astype(np.float32)
    table = table_from_rows(f"{kind}_stat", layer=0, rows=rows)
    with locked_out_dir(Path(args.out_dir)) as out:
        emb_path = out / f"{raw.dataset_id}_{kind}.emb1"
        write_emb1(table, emb_path)
        meta = {
            "dataset_id": raw.dataset_id,
            "kind": kind,
            "orders": orders,
            "segment_s": segment_s,
            "dim": table.dim,
            "count": table.count,
        }
        (out / "features_meta.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
        write_run_json(out, "features", settings, {"dataset_id": raw.dataset_id})
    print(f"wrote {emb_path} ({table.count} rows, dim {table.dim})")
    return 0


def cmd_train(args) -> int:
    settings = Settings(args)
    seed = int(settings.get("seed"))
    config = settings.train_config()
    raw = load_dataset(args.manifest, args.sidecar)
    split = load_split(args.split) if args.split else None
    ds = build_eval_dataset(raw, args.features, seed, split)
    params, report = train_on(ds, config)
    x_test, y_test = split_xy(ds, "test")
    test_eval = evaluate(y_test, predict(params, x_test))
    with locked_out_dir(Path(args.out_dir)) as out:
        save_checkpoint(params, out / "model.mlp1", config)
        save_split(ds.split, out / "split.json")
        doc = {
            "dataset_id": ds.dataset_id,
            "input_dim": int(ds.x.shape[1]),
            "report": asdict(report),
            "test_r2": asdict(test_eval) | {"avg": test_eval.avg},
        }
        (out / "train_report.json").write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
        write_run_json(out, "train", settings, {"dataset_id": ds.dataset_id})
    print(
        f"{ds.dataset_id}: best epoch {report.best_epoch} ({report.stopping_reason}), "
        f"val mse {report.val_loss:.4f}, test r2 avg {test_eval.avg:.3f}"
    )
    return 0


def cmd_grid(args) -> int:
    settings = Settings(args)
    seed = int(settings.get("seed"))
    config = settings.train_config()
    loaded = load_spec_datasets(args.dataset, 1)
    if len(loaded) < 2:
        raise CliError("grid needs at least two --dataset specs")
    datasets = [build_eval_dataset(raw, paths, seed) for raw, paths in loaded]
    result = cross_grid(datasets, config)
    with locked_out_dir(Path(args.out_dir)) as out:
        (out / "grid.csv").write_text(render_grid_csv(result))
        (out / "grid.txt").write_text(render_grid_table(result))
        matrix = [
            [
                (result.cells[(t, e)].avg if (t, e) in result.cells else None)
                for e in result.eval_ids
            ]
            for t in result.train_ids
        ]
        (out / "grid.svg").write_text(
            heatmap_svg(matrix, result.train_ids, result.eval_ids, title="avg R2 (train x eval)")
        )
        doc = {
            "reports": {tid: asdict(rep) for tid, rep in result.reports.items()},
            "errors": {f"{t}->{e}": msg for (t, e), msg in result.errors.items()},
        }
        (out / "grid_report.json").write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
        write_run_json(out, "grid", settings, {"dataset_ids": list(result.train_ids)})
    print(render_grid_table(result), end="")
    return 0


def cmd_divergence(args) -> int:
    settings = Settings(args)
    seed = int(settings.get("seed"))
    projections = int(settings.get("projections"))
    bins = int(settings.get("bins"))
    loaded = load_spec_datasets(args.dataset, 1)
    if len(loaded) < 2:
        raise CliError("divergence needs at least two --dataset specs")
    views = {}
    if args.what in ("data", "both"):
        clouds = {}
        for raw, paths in loaded:
            clouds[raw.dataset_id] = features_for(normalize_dataset(raw).records, paths)
        dims = {cloud.shape[1] for cloud in clouds.values()}
        if len(dims) != 1:
            raise CliError(f"feature dims differ across datasets: {sorted(dims)}")
        views["data"] = clouds
    if args.what in ("annot", "both"):
        views["annot"] = {
            raw.dataset_id: labels_of(normalize_dataset(raw).records) for raw, _ in loaded
        }
    rows = []
    matrices = {}
    for view, clouds in views.items():
        names, w1 = divergence_matrix(clouds, "w1", n_projections=projections, seed=seed)
        _, js = divergence_matrix(clouds, "js", bins=bins)
        matrices[view] = (names, w1, js)
        for i in range(len(names)):
            for j in range(i + 1, len(names)):
                rows.append([names[i], names[j], view, float(w1[i, j]), float(js[i, j])])
    with locked_out_dir(Path(args.out_dir)) as out:
        write_csv(out / "divergence.csv", ["dataset_a", "dataset_b", "view", "w1", "js"], rows)
        for view, (names, w1, js) in matrices.items():
            write_csv(out / f"{view}_w1.csv", ["dataset", *names],
                      [[names[i], *w1[i]] for i in range(len(names))])
            write_csv(out / f"{view}_js.csv", ["dataset", *names],
                      [[names[i], *js[i]] for i in range(len(names))])
            (out / f"{view}_w1.svg").write_text(
                heatmap_svg(w1.tolist(), names, names, title=f"{view}: sliced W1")
            )
            (out / f"{view}_js.svg").write_text(
                heatmap_svg(js.tolist(), names, names, title=f"{view}: JS divergence (bits)")
            )
        write_run_json(out, "divergence", settings, {"what": args.what})
    for row in rows:
        print(f"{row[0]}-{row[1]} [{row[2]}] w1={row[3]:.3f} js={row[4]:.3f}")
    return 0


def cmd_cluster(args) -> int:
    settings = Settings(args)
    seed = int(settings.get("seed"))
    k = int(settings.get("k"))
    loaded = load_spec_datasets(args.dataset, 1)
    points, owners, clip_ids = [], [], []
    for raw, paths in loaded:
        norm = normalize_dataset(raw)
        feats = features_for(norm.records, paths)
        points.append(feats)
        owners.extend([raw.dataset_id] * len(norm.records))
        clip_ids.extend(rec.clip_id for rec in norm.records)
    dims = {p.shape[1] for p in points}
    if len(dims) != 1:
        raise CliError(f"feature dims differ across datasets: {sorted(dims)}")
    x = np.concatenate(points, axis=0)
    result = kmeans(x, k=k, seed=seed)
    report = cluster_composition(result.assignments, owners)
    with locked_out_dir(Path(args.out_dir)) as out:
        write_csv(
            out / "clusters.csv",
            ["clip_id", "dataset", "cluster"],
            [[cid, own, int(c)] for cid, own, c in zip(clip_ids, owners, result.assignments)],
        )
        write_csv(
            out / "composition.csv",
            ["cluster", "dataset", "count", "fraction"],
            [
                [c, name, report.counts[(c, name)], report.fractions[(c, name)]]
                for (c, name) in sorted(report.counts)
            ],
        )
        doc = {
            "k": k,
            "inertia": result.inertia,
            "n_iter": result.n_iter,
            "inertia_history": list(result.inertia_history),
            "cluster_sizes": {str(c): n for c, n in sorted(report.cluster_sizes().items())},
        }
        (out / "cluster_report.json").write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
        write_run_json(out, "cluster", settings, {"n_points": int(x.shape[0])})
    print(f"k={k} inertia={result.inertia:.3f} iters={result.n_iter}")
    return 0


def cmd_project(args) -> int:
    settings = Settings(args)
    seed = int(settings.get("seed"))
    perplexity = float(settings.get("perplexity"))
    iters = int(settings.get("iters"))
    loaded = load_spec_datasets(args.dataset, 1)
    points, owners, clip_ids = [], [], []
    for raw, paths in loaded:
        norm = normalize_dataset(raw)
        points.append(features_for(norm.records, paths))
        owners.extend([raw.dataset_id] * len(norm.records))
        clip_ids.extend(rec.clip_id for rec in norm.records)
    dims = {p.shape[1] for p in points}
    if len(dims) != 1:
        raise CliError(f"feature dims differ across datasets: {sorted(dims)}")
    x = np.concatenate(points, axis=0)
    proj = tsne(x, perplexity=perplexity, seed=seed, n_iter=iters, dataset_ids=owners)
    stats_doc = {"kl_initial": proj.kl_initial, "kl_final": proj.kl_final}
    if len(proj.centroids) >= 2:
        stats = inter_centroid_stats(proj.centroids)
        stats_doc["centroid_mean"] = stats.mean
        stats_doc["centroid_variance"] = stats.variance
        stats_doc["pair_distances"] = {f"{a}-{b}": d for (a, b), d in stats.pair_distances.items()}
    if args.raw_stats and len(loaded) >= 2:
        raw_centroids = {}
        offset = 0
        for (raw, _), feats in zip(loaded, points):
            raw_centroids[raw.dataset_id] = feats.mean(axis=0)
            offset += len(feats)
        raw_stats = inter_centroid_stats(raw_centroids)
        stats_doc["raw_centroid_mean"] = raw_stats.mean
        stats_doc["raw_centroid_variance"] = raw_stats.variance
    with locked_out_dir(Path(args.out_dir)) as out:
        write_csv(
            out / "projection.csv",
            ["clip_id", "dataset", "x", "y"],
            [
                [cid, own, float(p[0]), float(p[1])]
                for cid, own, p in zip(clip_ids, owners, proj.points)
            ],
        )
        (out / "projection.svg").write_text(
            scatter_svg(proj.points, owners, proj.centroids, title="2-D projection")
        )
        (out / "projection_stats.json").write_text(
            json.dumps(stats_doc, indent=2, sort_keys=True) + "\n"
        )
        write_run_json(out, "project", settings, {"n_points": int(x.shape[0])})
    print(f"kl {proj.kl_initial:.3f} -> {proj.kl_final:.3f} over {iters} iters")
    return 0


def cmd_final(args) -> int:
    settings = Settings(args)
    seed = int(settings.get("seed"))
    config = settings.train_config()
    single_raw, single_paths = load_spec_datasets([args.train_single], 2, "--train-single")[0]
    members = load_spec_datasets(args.train_member, 2, "--train-member")
    holdouts = load_spec_datasets(args.holdout, 2, "--holdout") if args.holdout else []

    def variant_paths(paths, fused: bool):
        return list(paths) if fused else [paths[0]]

    runs = []
    for fused in (False, True):
        label = "fused" if fused else "base"
        norm_holdouts = {}
        for raw, paths in holdouts:
            norm = normalize_dataset(raw)
            norm_holdouts[raw.dataset_id] = (
                features_for(norm.records, variant_paths(paths, fused)),
                labels_of(norm.records),
            )
        single_ds = build_eval_dataset(single_raw, variant_paths(single_paths, fused), seed)
        runs.append(
            FinalRun(
                name=f"{label}/{single_ds.dataset_id}",
                train_ds=single_ds,
                extra_targets=dict(norm_holdouts),
            )
        )
        combined_ds = build_combined_eval(
            [(raw, variant_paths(paths, fused)) for raw, paths in members], seed
        )
        runs.append(
            FinalRun(
                name=f"{label}/{combined_ds.dataset_id}",
                train_ds=combined_ds,
                extra_targets=dict(norm_holdouts),
            )
        )
    result = final_experiment(runs, config)
    with locked_out_dir(Path(args.out_dir)) as out:
        (out / "final.csv").write_text(render_final_csv(result))
        lines = []
        for rname in result.run_names:
            for tname in result.target_names[rname]:
                cell = result.cells.get((rname, tname))
                shown = f"{cell.avg:6.3f} (v {cell.valence_r2:6.3f} a {cell.arousal_r2:6.3f})" \
                    if cell else "    --"
                lines.append(f"{rname:<24} {tname:<12} {shown}")
        (out / "final.txt").write_text("\n".join(lines) + "\n")
        doc = {
            "reports": {name: asdict(rep) for name, rep in result.reports.items()},
            "errors": {f"{r}->{t}": msg for (r, t), msg in result.errors.items()},
        }
        (out / "final_report.json").write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
        write_run_json(out, "final", settings, {"runs": list(result.run_names)})
    print("\n".join(lines))
    return 0


# ---------------------------------------------------------------- parser


def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--seed", type=int, default=None, help="global random seed")
    sub.add_argument("--out-dir", required=True, help="directory for artifacts")
    sub.add_argument("--config", default=None, help="JSON file with option defaults")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mergap",
        description="music emotion regression and dataset-gap analysis",
    )
    parser.add_argument("--version", action="version", version=f"mergap {__version__}")
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("ingest", help="validate a manifest, normalize labels, make splits")
    p.add_argument("--manifest", required=True)
    p.add_argument("--sidecar", required=True)
    _add_common(p)
    p.set_defaults(fn=cmd_ingest)

    p = subs.add_parser("features", help="extract stat descriptors from audio into EMB1")
    p.add_argument("--manifest", required=True)
    p.add_argument("--sidecar", required=True)
    p.add_argument("--audio-root", default=None, help="base dir for manifest audio paths")
    p.add_argument("--kind", choices=("chroma", "mfcc"), required=True)
    p.add_argument("--orders", type=int, default=None, help="derivative orders to stack")
    p.add_argument("--segment-s", type=float, default=None, dest="segment_s")
    _add_common(p)
    p.set_defaults(fn=cmd_features)

    p = subs.add_parser("train", help="fit a valence/arousal regressor on one dataset")
    p.add_argument("--manifest", required=True)
    p.add_argument("--sidecar", required=True)
    p.add_argument("--features", action="append", required=True,
                   help="EMB1 file; repeat to fuse several")
    p.add_argument("--split", default=None, help="existing split.json (default: derive from seed)")
    for key in ("hidden1", "hidden2", "batch_size", "max_epochs", "patience"):
        p.add_argument(f"--{key.replace('_', '-')}", type=int, default=None, dest=key)
    for key in ("dropout_in", "dropout_hidden", "learning_rate"):
        p.add_argument(f"--{key.replace('_', '-')}", type=float, default=None, dest=key)
    _add_common(p)
    p.set_defaults(fn=cmd_train)

    p = subs.add_parser("grid", help="cross-dataset R2 grid")
    p.add_argument("--dataset", action="append", required=True,
                   help="MANIFEST:SIDECAR:FEATURES.emb1 (repeat)")
    for key in ("hidden1", "hidden2", "batch_size", "max_epochs", "patience"):
        p.add_argument(f"--{key.replace('_', '-')}", type=int, default=None, dest=key)
    for key in ("dropout_in", "dropout_hidden", "learning_rate"):
        p.add_argument(f"--{key.replace('_', '-')}", type=float, default=None, dest=key)
    _add_common(p)
    p.set_defaults(fn=cmd_grid)

    p = subs.add_parser("divergence", help="pairwise distribution divergences")
    p.add_argument("--dataset", action="append", required=True)
    p.add_argument("--what", choices=("data", "annot", "both"), default="both")
    p.add_argument("--projections", type=int, default=None)
    p.add_argument("--bins", type=int, default=None)
    _add_common(p)
    p.set_defaults(fn=cmd_divergence)

    p = subs.add_parser("cluster", help="k-means over pooled features, per-dataset composition")
    p.add_argument("--dataset", action="append", required=True)
    p.add_argument("--k", type=int, default=None)
    _add_common(p)
    p.set_defaults(fn=cmd_cluster)

    p = subs.add_parser("project", help="2-D projection of pooled features")
    p.add_argument("--dataset", action="append", required=True)
    p.add_argument("--perplexity", type=float, default=None)
    p.add_argument("--iters", type=int, default=None)
    p.add_argument("--raw-stats", action="store_true",
                   help="also report centroid stats in the original feature space")
    _add_common(p)
    p.set_defaults(fn=cmd_project)

    p = subs.add_parser("final", help="single vs combined training, base vs fused features")
    p.add_argument("--train-single", required=True,
                   help="MANIFEST:SIDECAR:BASE.emb1:CHROMA.emb1")
    p.add_argument("--train-member", action="append", required=True,
                   help="same 4-part spec; repeat for each combined-corpus member")
    p.add_argument("--holdout", action="append", default=None,
                   help="same 4-part spec; repeat for each held-out corpus")
    for key in ("hidden1", "hidden2", "batch_size", "max_epochs", "patience"):
        p.add_argument(f"--{key.replace('_', '-')}", type=int, default=None, dest=key)
    for key in ("dropout_in", "dropout_hidden", "learning_rate"):
        p.add_argument(f"--{key.replace('_', '-')}", type=float, default=None, dest=key)
    _add_common(p)
    p.set_defaults(fn=cmd_final)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except EXPECTED_ERRORS as exc:
        doc = {"error": type(exc).__name__, "message": str(exc)}
        print(json.dumps(doc, sort_keys=True), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
