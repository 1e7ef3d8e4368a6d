"""Dataset ingestion: manifests, annotation-scale normalization, splits, merging.

Five corpora are supported out of the box (EmoMusic ``E``, DEAM ``D``,
PMEmo ``P``, WTC ``W1``, WCMED ``W2``), each with its own native
valence/arousal scale.  All labels are mapped into [-1, +1] per dataset
before any training or analysis.  Dataset ids are open strings so that
synthetic corpora can flow through the same interfaces; the five ids above
are merely the conventional ones.
"""

from __future__ import annotations

import csv
import json
import math
from collections import Counter
from dataclasses import dataclass, replace
from pathlib import Path

from ._rng import clip_seed

KNOWN_DATASET_IDS = ("E", "D", "P", "W1", "W2")

SPLIT_NAMES = ("train", "val", "test")

MANIFEST_COLUMNS = ("clip_id", "audio_path", "duration_s", "valence", "arousal", "genre")

UNKNOWN_GENRE = "unknown"


class ManifestError(ValueError):
    """Malformed manifest or sidecar: bad header, unparseable row, duplicate id."""


class LabelRangeError(ManifestError):
    """A raw label lies outside the dataset's declared annotation scale."""


@dataclass(frozen=True)
class AnnotationScale:
    """Native valence/arousal bounds of one dataset."""

    v_min: float
    v_max: float
    a_min: float
    a_max: float

    def __post_init__(self):
        if not (self.v_min < self.v_max):
            raise ValueError(f"valence bounds must satisfy v_min < v_max, got [{self.v_min}, {self.v_max}]")
        if not (self.a_min < self.a_max):
            raise ValueError(f"arousal bounds must satisfy a_min < a_max, got [{self.a_min}, {self.a_max}]")

    def contains(self, valence: float, arousal: float) -> bool:
        return (self.v_min <= valence <= self.v_max) and (self.a_min <= arousal <= self.a_max)


#: Scale of labels after normalization (and of datasets annotated in [-1, 1] natively).
NORMALIZED_SCALE = AnnotationScale(-1.0, 1.0, -1.0, 1.0)

#: Native scales of the supported corpora.
DEFAULT_SCALES = {
    "E": AnnotationScale(-1.0, 1.0, -1.0, 1.0),
    "D": AnnotationScale(-1.0, 1.0, -1.0, 1.0),
    "P": AnnotationScale(0.0, 1.0, 0.0, 1.0),
    "W1": AnnotationScale(-5.0, 5.0, 0.0, 100.0),
    "W2": AnnotationScale(0.0, 400.0, 0.0, 400.0),
}


@dataclass(frozen=True)
class ClipRecord:
    """One annotated excerpt."""

    clip_id: str
    dataset_id: str
    audio_path: str
    duration_s: float
    raw_valence: float
    raw_arousal: float
    genre: str | None = None


@dataclass(frozen=True)
class NormalizedLabel:
    valence: float
    arousal: float

    def __post_init__(self):
        if not (-1.0 <= self.valence <= 1.0 and -1.0 <= self.arousal <= 1.0):
            raise ValueError(f"normalized label out of [-1, 1]: ({self.valence}, {self.arousal})")


@dataclass(frozen=True)
class SplitAssignment:
    """Disjoint train/val/test partition of clip ids."""

    assignment: dict  # clip_id -> "train" | "val" | "test"
    seed: int

    def members(self, name: str) -> list[str]:
        if name not in SPLIT_NAMES:
            raise ValueError(f"unknown split name {name!r}")
        return [cid for cid, s in self.assignment.items() if s == name]

    def sizes(self) -> dict:
        counts = Counter(self.assignment.values())
        return {name: counts.get(name, 0) for name in SPLIT_NAMES}


@dataclass(frozen=True)
class Dataset:
    """A dataset id, its records, and the scale the records' labels live on."""

    dataset_id: str
    records: tuple
    scale: AnnotationScale


@dataclass(frozen=True)
class CombinedDataset:
    """Union of several datasets, each normalized with its own scale first."""

    member_ids: tuple
    records: tuple  # labels already in [-1, 1]; clip ids prefixed "<dataset_id>:"
    split: SplitAssignment


def load_scale_sidecar(path) -> tuple[str, AnnotationScale]:
    """Read the JSON sidecar declaring ``dataset_id`` and the four scale bounds."""
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ManifestError(f"cannot read scale sidecar {path}: {exc}") from exc
    try:
        dataset_id = str(doc["dataset_id"])
        scale = AnnotationScale(
            float(doc["v_min"]), float(doc["v_max"]), float(doc["a_min"]), float(doc["a_max"])
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ManifestError(f"bad scale sidecar {path}: {exc}") from exc
    if not dataset_id:
        raise ManifestError(f"bad scale sidecar {path}: empty dataset_id")
    return dataset_id, scale


def load_manifest(path, dataset_id: str, scale: AnnotationScale) -> list[ClipRecord]:
    """Parse a manifest CSV into ClipRecords, range-checking labels against ``scale``.

    Raises ManifestError on structural problems and LabelRangeError when a
    label falls outside the declared scale (never clamps: an out-of-range
    value means the scale declaration is wrong, which must not be hidden).
    """
    records = []
    seen = set()
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise ManifestError(f"cannot open manifest {path}: {exc}") from exc
    with fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames
        if header is None or tuple(header) != MANIFEST_COLUMNS:
            raise ManifestError(
                f"manifest {path} must have header {','.join(MANIFEST_COLUMNS)}, got {header}"
            )
        for lineno, row in enumerate(reader, start=2):
            clip_id = (row["clip_id"] or "").strip()
            if not clip_id:
                raise ManifestError(f"{path}:{lineno}: empty clip_id")
            if clip_id in seen:
                raise ManifestError(f"{path}:{lineno}: duplicate clip_id {clip_id!r}")
            seen.add(clip_id)
            try:
                duration = float(row["duration_s"])
                valence = float(row["valence"])
                arousal = float(row["arousal"])
            except (TypeError, ValueError) as exc:
                raise ManifestError(f"{path}:{lineno}: unparseable numeric field: {exc}") from exc
            if not (duration > 0) or not math.isfinite(duration):
                raise ManifestError(f"{path}:{lineno}: duration_s must be a positive number")
            if not (math.isfinite(valence) and math.isfinite(arousal)):
                raise ManifestError(f"{path}:{lineno}: non-finite label")
            if not scale.contains(valence, arousal):
                raise LabelRangeError(
                    f"{path}:{lineno}: label ({valence}, {arousal}) outside scale "
                    f"v:[{scale.v_min}, {scale.v_max}] a:[{scale.a_min}, {scale.a_max}]"
                )
            genre = (row["genre"] or "").strip() or None
            records.append(
                ClipRecord(
                    clip_id=clip_id,
                    dataset_id=dataset_id,
                    audio_path=row["audio_path"],
                    duration_s=duration,
                    raw_valence=valence,
                    raw_arousal=arousal,
                    genre=genre,
                )
            )
    return records


def load_dataset(manifest_path, sidecar_path) -> Dataset:
    """Load a manifest plus its scale sidecar into a Dataset."""
    dataset_id, scale = load_scale_sidecar(sidecar_path)
    records = load_manifest(manifest_path, dataset_id, scale)
    return Dataset(dataset_id=dataset_id, records=tuple(records), scale=scale)


def normalize_label(raw_v: float, raw_a: float, scale: AnnotationScale) -> NormalizedLabel:
    """Affine map of both axes onto [-1, +1]: x -> 2*(x - min)/(max - min) - 1."""
    if not scale.contains(raw_v, raw_a):
        raise LabelRangeError(
            f"raw label ({raw_v}, {raw_a}) outside scale "
            f"v:[{scale.v_min}, {scale.v_max}] a:[{scale.a_min}, {scale.a_max}]"
        )
    v = 2.0 * (raw_v - scale.v_min) / (scale.v_max - scale.v_min) - 1.0
    a = 2.0 * (raw_a - scale.a_min) / (scale.a_max - scale.a_min) - 1.0
    return NormalizedLabel(valence=v, arousal=a)


def denormalize_label(label: NormalizedLabel, scale: AnnotationScale) -> tuple[float, float]:
    """Inverse of :func:`normalize_label` (used for round-trip checks)."""
    v = (label.valence + 1.0) / 2.0 * (scale.v_max - scale.v_min) + scale.v_min
    a = (label.arousal + 1.0) / 2.0 * (scale.a_max - scale.a_min) + scale.a_min
    return v, a


def normalize_records(records, scale: AnnotationScale) -> list[ClipRecord]:
    """Return copies of ``records`` with labels mapped into [-1, 1]."""
    out = []
    for rec in records:
        label = normalize_label(rec.raw_valence, rec.raw_arousal, scale)
        out.append(replace(rec, raw_valence=label.valence, raw_arousal=label.arousal))
    return out


def normalize_dataset(dataset: Dataset) -> Dataset:
    return Dataset(
        dataset_id=dataset.dataset_id,
        records=tuple(normalize_records(dataset.records, dataset.scale)),
        scale=NORMALIZED_SCALE,
    )


def make_splits(records, seed: int, ratios=(8, 1, 1)) -> SplitAssignment:
    """Deterministic train/val/test partition.

    Records are ordered by a seeded hash of their clip_id (not by input
    order), so the assignment is stable under manifest reordering.  Cuts
    fall at floor(n*8/10) and floor(n*9/10); the remainder goes to test.
    """
    n = len(records)
    if n < len(ratios):
        raise ValueError(f"need at least {len(ratios)} records to split, got {n}")
    total = sum(ratios)
    ordered = sorted(records, key=lambda r: (clip_seed(seed, r.clip_id), r.clip_id))
    cut_train = n * ratios[0] // total
    cut_val = n * (ratios[0] + ratios[1]) // total
    assignment = {}
    for i, rec in enumerate(ordered):
        if i < cut_train:
            assignment[rec.clip_id] = "train"
        elif i < cut_val:
            assignment[rec.clip_id] = "val"
        else:
            assignment[rec.clip_id] = "test"
    return SplitAssignment(assignment=assignment, seed=seed)


def save_split(split: SplitAssignment, path) -> None:
    doc = {"seed": split.seed, "assignment": dict(sorted(split.assignment.items()))}
    Path(path).write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")


def load_split(path) -> SplitAssignment:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    assignment = {str(k): str(v) for k, v in doc["assignment"].items()}
    bad = set(assignment.values()) - set(SPLIT_NAMES)
    if bad:
        raise ValueError(f"split file {path} contains unknown split names {sorted(bad)}")
    return SplitAssignment(assignment=assignment, seed=int(doc["seed"]))


def prefixed_clip_id(dataset_id: str, clip_id: str) -> str:
    return f"{dataset_id}:{clip_id}"


def combine(members, seed: int) -> CombinedDataset:
    """Union of several datasets with per-dataset normalization and splits.

    Each member is normalized with its own scale, split with the shared
    seed (so member splits match the ones used when the dataset stands
    alone), and only then merged; split membership is unioned name-wise.
    Clip ids are prefixed with the dataset id to preserve uniqueness.
    """
    members = list(members)
    if not members:
        raise ValueError("combine() needs at least one member dataset")
    merged_records = []
    merged_assignment = {}
    member_ids = []
    for member in members:
        member_ids.append(member.dataset_id)
        normalized = normalize_dataset(member)
        split = make_splits(normalized.records, seed=seed)
        for rec in normalized.records:
            new_id = prefixed_clip_id(member.dataset_id, rec.clip_id)
            merged_records.append(replace(rec, clip_id=new_id))
            merged_assignment[new_id] = split.assignment[rec.clip_id]
    return CombinedDataset(
        member_ids=tuple(member_ids),
        records=tuple(merged_records),
        split=SplitAssignment(assignment=merged_assignment, seed=seed),
    )


def genre_histogram(records) -> dict:
    """Count records per genre; records without a genre label count as "unknown"."""
    counts = Counter(rec.genre if rec.genre is not None else UNKNOWN_GENRE for rec in records)
    return dict(sorted(counts.items(), key=lambda kv: (-kv[1], kv[0])))
