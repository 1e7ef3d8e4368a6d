import struct

import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from mergap.datasets import ClipRecord
from mergap.embedding_io import (
    EmbeddingFormatError,
    EmbeddingTable,
    JoinError,
    join_with_labels,
    pool_time,
    read_emb1,
    table_from_rows,
    write_emb1,
)


def table(ids=("a", "b"), dim=3, model="toy", layer=0, seed=0):
    rng = np.random.Generator(np.random.PCG64(seed))
    return EmbeddingTable(
        model_id=model,
        layer=layer,
        ids=tuple(ids),
        values=rng.standard_normal((len(ids), dim)).astype(np.float32),
    )


class TestTable:
    def test_duplicate_ids_rejected(self):
        with pytest.raises(ValueError, match="duplicate"):
            EmbeddingTable("m", 0, ("a", "a"), np.zeros((2, 2), dtype=np.float32))

    def test_non_finite_rejected(self):
        vals = np.array([[np.inf, 0.0]], dtype=np.float32)
        with pytest.raises(ValueError, match="finite"):
            EmbeddingTable("m", 0, ("a",), vals)

    def test_row_lookup(self):
        t = table()
        assert np.array_equal(t.row("b"), t.values[1])
        with pytest.raises(KeyError):
            t.row("zz")


class TestRoundTrip:
    def test_values_exact_including_subnormals(self, tmp_path):
        vals = np.array(
            [[1.0, -2.5, 1e-40], [5e-44, 0.0, -0.0]], dtype=np.float32
        )
        t = EmbeddingTable("model/x", 7, ("clip one", "clip-two"), vals)
        write_emb1(t, tmp_path / "t.emb1")
        r = read_emb1(tmp_path / "t.emb1")
        # bit-exact comparison: -0.0 and subnormals must survive untouched
        assert np.array_equal(r.values.view(np.uint32), vals.view(np.uint32))
        assert r.model_id == "model/x"
        assert r.layer == 7
        assert r.ids == ("clip one", "clip-two")

    def test_unicode_ids(self, tmp_path):
        t = EmbeddingTable("m", 0, ("clip-é甫",), np.ones((1, 2), dtype=np.float32))
        write_emb1(t, tmp_path / "u.emb1")
        assert read_emb1(tmp_path / "u.emb1").ids == ("clip-é甫",)

    @given(
        n=st.integers(0, 6),
        dim=st.integers(1, 8),
        seed=st.integers(0, 2**20),
    )
    @settings(
        max_examples=30, deadline=None,
        suppress_health_check=[HealthCheck.function_scoped_fixture],
    )
    def test_random_tables(self, n, dim, seed, tmp_path):
        rng = np.random.Generator(np.random.PCG64(seed))
        ids = tuple(f"c{i}" for i in range(n))
        vals = (rng.standard_normal((n, dim)) * 10.0 ** rng.integers(-6, 6)).astype(np.float32)
        t = EmbeddingTable("m", int(rng.integers(0, 100)), ids, vals)
        path = tmp_path / f"r{seed}.emb1"
        write_emb1(t, path)
        r = read_emb1(path)
        assert r.ids == ids
        assert np.array_equal(r.values.view(np.uint32), vals.view(np.uint32))


def valid_bytes():
    """Hand-assembled two-row file, independent of write_emb1."""
    rows = [("a", (1.0, 2.0)), ("b", (3.0, 4.0))]
    out = b"EMB1" + struct.pack("<III", 1, 2, 2)
    out += struct.pack("<I", 3) + b"toy" + struct.pack("<I", 0)
    for cid, vals in rows:
        raw = cid.encode()
        out += struct.pack("<I", len(raw)) + raw + struct.pack("<2f", *vals)
    return out


class TestRejection:
    def write(self, tmp_path, data):
        p = tmp_path / "x.emb1"
        p.write_bytes(data)
        return p

    def test_valid_baseline_parses(self, tmp_path):
        t = read_emb1(self.write(tmp_path, valid_bytes()))
        assert t.count == 2 and t.dim == 2

    def test_bad_magic(self, tmp_path):
        data = b"NOPE" + valid_bytes()[4:]
        with pytest.raises(EmbeddingFormatError, match="magic"):
            read_emb1(self.write(tmp_path, data))

    def test_unsupported_version(self, tmp_path):
        data = bytearray(valid_bytes())
        data[4:8] = struct.pack("<I", 9)
        with pytest.raises(EmbeddingFormatError, match="version"):
            read_emb1(self.write(tmp_path, bytes(data)))

    def test_truncated(self, tmp_path):
        data = valid_bytes()
        for cut in (3, 10, len(data) - 1):
            with pytest.raises(EmbeddingFormatError, match="truncated"):
                read_emb1(self.write(tmp_path, data[:cut]))

    def test_trailing_garbage(self, tmp_path):
        with pytest.raises(EmbeddingFormatError, match="trailing"):
            read_emb1(self.write(tmp_path, valid_bytes() + b"!"))

    def test_count_dim_mismatch_reads_as_truncation(self, tmp_path):
        data = bytearray(valid_bytes())
        data[12:16] = struct.pack("<I", 5)  # claim 5 rows, supply 2
        with pytest.raises(EmbeddingFormatError):
            read_emb1(self.write(tmp_path, bytes(data)))

    def test_non_finite_value(self, tmp_path):
        data = bytearray(valid_bytes())
        data[-4:] = struct.pack("<f", float("nan"))
        with pytest.raises(EmbeddingFormatError, match="non-finite"):
            read_emb1(self.write(tmp_path, bytes(data)))

    def test_duplicate_ids_on_disk(self, tmp_path):
        data = bytearray(valid_bytes())
        # rewrite clip id "b" as "a" (both are single bytes at known offsets)
        idx = data.rindex(b"b\x00\x00\x40\x40")  # "b" followed by 3.0f
        data[idx] = ord("a")
        with pytest.raises(EmbeddingFormatError, match="duplicate"):
            read_emb1(self.write(tmp_path, bytes(data)))

    def test_write_refuses_non_finite(self, tmp_path):
        t = table()
        object.__setattr__(t, "values", np.array([[np.nan, 0.0, 0.0]], dtype=np.float32))
        object.__setattr__(t, "ids", ("a",))
        with pytest.raises(EmbeddingFormatError):
            write_emb1(t, tmp_path / "n.emb1")


class TestPooling:
    def test_mean_over_time(self):
        v = pool_time(np.array([[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]]))
        assert np.allclose(v.values, [3.0, 4.0])
        assert v.kind == "embedding"

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            pool_time(np.zeros((0, 4)))


class TestJoin:
    def recs(self, ids, v=0.5):
        return [
            ClipRecord(cid, "T", f"{cid}.wav", 3.0, v, -v) for cid in ids
        ]

    def test_aligned_to_record_order(self):
        t = table(ids=("a", "b", "c"), dim=2)
        out = join_with_labels(t, self.recs(["c", "a"]))
        assert out.features.clip_ids == ("c", "a")
        assert np.allclose(out.features.values[0], t.row("c"))
        assert np.allclose(out.features.values[1], t.row("a"))
        assert out.labels.shape == (2, 2)
        assert out.labels[0, 0] == 0.5 and out.labels[0, 1] == -0.5

    def test_unmatched_are_reported(self):
        t = table(ids=("a", "b"), dim=2)
        out = join_with_labels(t, self.recs(["b", "zz"]))
        assert out.unmatched_record_ids == ("zz",)
        assert out.unmatched_table_ids == ("a",)

    def test_fully_disjoint_is_an_error(self):
        t = table(ids=("a",), dim=2)
        with pytest.raises(JoinError):
            join_with_labels(t, self.recs(["x", "y"]))


def test_table_from_rows_keeps_insertion_order():
    rows = {"z": np.zeros(2, dtype=np.float32), "a": np.ones(2, dtype=np.float32)}
    t = table_from_rows("m", 1, rows)
    assert t.ids == ("z", "a")
    assert np.allclose(t.row("a"), 1.0)
