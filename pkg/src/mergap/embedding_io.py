"""EMB1: the neutral binary container for precomputed per-clip embeddings.

Layout (all integers little-endian, no padding):

    magic   4 bytes  b"EMB1"
    version u32      format version (currently 1)
    dim     u32      vector length
    count   u32      number of rows
    model   u32 length + UTF-8 bytes
    layer   u32
    rows    count times: (u32 length + UTF-8 clip_id, dim float32 values)

Values are IEEE-754 binary32; the round trip through write/read is
value-exact for every representable float32, subnormals included.
Non-finite values are rejected on both write and read.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .audio_features import FeatureMatrix, FeatureVector

MAGIC = b"EMB1"
FORMAT_VERSION = 1


class EmbeddingFormatError(ValueError):
    """Structurally invalid EMB1 payload (magic, lengths, finiteness)."""


class JoinError(ValueError):
    """No overlap between embedding rows and clip records."""


@dataclass(frozen=True)
class EmbeddingTable:
    """Per-clip embedding vectors from one model/layer."""

    model_id: str
    layer: int
    ids: tuple
    values: np.ndarray  # (count, dim) float32

    def __post_init__(self):
        if self.values.ndim != 2:
            raise ValueError("embedding values must be 2-D (count x dim)")
        if self.values.shape[0] != len(self.ids):
            raise ValueError("row count must match number of clip ids")
        if len(set(self.ids)) != len(self.ids):
            raise ValueError("duplicate clip ids in embedding table")
        if self.layer < 0:
            raise ValueError("layer must be nonnegative")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("embedding table contains non-finite values")

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    @property
    def count(self) -> int:
        return self.values.shape[0]

    def row(self, clip_id: str) -> np.ndarray:
        try:
            idx = self.ids.index(clip_id)
        except ValueError:
            raise KeyError(clip_id) from None
        return self.values[idx]


def table_from_rows(model_id: str, layer: int, rows: dict) -> EmbeddingTable:
    """Build a table from a {clip_id: vector} mapping (insertion order kept)."""
    ids = tuple(rows.keys())
    if ids:
        values = np.stack([np.asarray(rows[i], dtype=np.float32) for i in ids])
    else:
        values = np.zeros((0, 0), dtype=np.float32)
    return EmbeddingTable(model_id=model_id, layer=layer, ids=ids, values=values)


def _write_str(fh, text: str) -> None:
    data = text.encode("utf-8")
    fh.write(struct.pack("<I", len(data)))
    fh.write(data)


def write_emb1(table: EmbeddingTable, path) -> None:
    """Serialize a table; the dataclass invariants guarantee finiteness."""
    values = np.ascontiguousarray(table.values, dtype=np.float32)
    if not np.all(np.isfinite(values)):
        raise EmbeddingFormatError("refusing to write non-finite embedding values")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<III", FORMAT_VERSION, table.dim, table.count))
        _write_str(fh, table.model_id)
        fh.write(struct.pack("<I", table.layer))
        for i, clip_id in enumerate(table.ids):
            _write_str(fh, clip_id)
            fh.write(values[i].tobytes())


class _Reader:
    def __init__(self, data: bytes, path):
        self.data = data
        self.pos = 0
        self.path = path

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise EmbeddingFormatError(
                f"{self.path}: truncated file (needed {n} bytes at offset {self.pos})"
            )
        out = self.data[self.pos : self.pos + n]
        self.pos += n
        return out

    def u32(self) -> int:
        return struct.unpack("<I", self.take(4))[0]

    def string(self) -> str:
        length = self.u32()
        try:
            return self.take(length).decode("utf-8")
        except UnicodeDecodeError as exc:
            raise EmbeddingFormatError(f"{self.path}: invalid UTF-8 string") from exc


def read_emb1(path) -> EmbeddingTable:
    """Parse and validate an EMB1 file."""
    with open(path, "rb") as fh:
        data = fh.read()
    r = _Reader(data, path)
    if r.take(4) != MAGIC:
        raise EmbeddingFormatError(f"{path}: bad magic (not an EMB1 file)")
    version = r.u32()
    if version != FORMAT_VERSION:
        raise EmbeddingFormatError(f"{path}: unsupported format version {version}")
    dim = r.u32()
    count = r.u32()
    model_id = r.string()
    layer = r.u32()
    ids = []
    rows = np.empty((count, dim), dtype=np.float32)
    for i in range(count):
        ids.append(r.string())
        rows[i] = np.frombuffer(r.take(4 * dim), dtype="<f4")
    if r.pos != len(data):
        raise EmbeddingFormatError(f"{path}: {len(data) - r.pos} trailing bytes after payload")
    if not np.all(np.isfinite(rows)):
        raise EmbeddingFormatError(f"{path}: non-finite embedding value")
    if len(set(ids)) != len(ids):
        raise EmbeddingFormatError(f"{path}: duplicate clip ids")
    return EmbeddingTable(model_id=model_id, layer=layer, ids=tuple(ids), values=rows)


def pool_time(frames: np.ndarray) -> FeatureVector:
    """Per-dimension temporal mean over (n_frames x dim) activations."""
    frames = np.asarray(frames, dtype=np.float64)
    if frames.ndim != 2 or frames.shape[0] < 1:
        raise ValueError("pool_time needs a non-empty (n_frames x dim) matrix")
    return FeatureVector(values=frames.mean(axis=0), kind="embedding")


@dataclass(frozen=True)
class JoinResult:
    features: FeatureMatrix
    labels: np.ndarray  # (n, 2): valence, arousal
    unmatched_record_ids: tuple
    unmatched_table_ids: tuple


def join_with_labels(table: EmbeddingTable, records, kind: str = "embedding") -> JoinResult:
    """Inner-join embedding rows with clip records, in record order.

    Labels are taken from the records as-is ((valence, arousal) columns), so
    normalize the records first when training targets are wanted in [-1, 1].
    Unmatched ids on either side are reported, and a fully disjoint join is
    an error.
    """
    table_ids = set(table.ids)
    matched = [rec for rec in records if rec.clip_id in table_ids]
    if not matched:
        raise JoinError(
            f"no clip ids shared between embedding table ({table.count} rows) "
            f"and records ({len(list(records))} records)"
        )
    record_ids = {rec.clip_id for rec in records}
    index = {cid: i for i, cid in enumerate(table.ids)}
    values = np.stack([table.values[index[rec.clip_id]] for rec in matched]).astype(np.float64)
    labels = np.array([[rec.raw_valence, rec.raw_arousal] for rec in matched])
    features = FeatureMatrix(
        clip_ids=tuple(rec.clip_id for rec in matched), values=values, kind=kind
    )
    return JoinResult(
        features=features,
        labels=labels,
        unmatched_record_ids=tuple(rec.clip_id for rec in records if rec.clip_id not in table_ids),
        unmatched_table_ids=tuple(cid for cid in table.ids if cid not in record_ids),
    )
