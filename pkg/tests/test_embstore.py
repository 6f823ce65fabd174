import io

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from litmine.embstore import (
    Accumulator,
    EmbeddingRecord,
    StreamWriter,
    aggregate,
    load_text_vectors,
    merge_accumulators,
    read_header,
    reconstruct_words,
    write_count_sidecar,
    read_count_sidecar,
    write_stream,
    write_text_vectors,
    StreamReader,
    WordVectorTable,
    WordEntry,
)
from litmine.errors import (
    CorruptStreamError,
    DimensionMismatchError,
    FormatError,
    ParseError,
    StreamOrderError,
)

from synth import make_records
from oracles import batch_mean_table, group_occurrences


def roundtrip(records, dim):
    buf = io.BytesIO()
    write_stream(buf, dim, records)
    buf.seek(0)
    return StreamReader(buf)


class TestStreamFormat:
    def test_empty_stream(self):
        reader = roundtrip([], dim=4)
        assert reader.header.dim == 4
        assert list(reader) == []
        assert reader.records_read == 0

    def test_write_read_roundtrip(self, rng):
        records = [
            EmbeddingRecord(0, 0, 0, "alpha", np.array([1.5, -2.25], dtype=np.float32)),
            EmbeddingRecord(0, 0, 1, "beta", np.array([0.0, 3.75], dtype=np.float32)),
            EmbeddingRecord(0, 1, 0, "alpha", np.array([7.0, -0.5], dtype=np.float32)),
        ]
        reader = roundtrip(records, dim=2)
        out = list(reader)
        assert reader.records_read == 3
        for orig, got in zip(records, out):
            assert got.key == orig.key
            assert got.word_text == orig.word_text
            assert got.vector.tobytes() == orig.vector.tobytes()  # bit-exact

    def test_roundtrip_random_bit_exact(self, rng):
        records = make_records(rng, dim=8, n_occurrences=50)
        reader = roundtrip(records, dim=8)
        out = list(reader)
        assert len(out) == len(records)
        for orig, got in zip(records, out):
            assert (orig.key, orig.word_text) == (got.key, got.word_text)
            assert orig.vector.tobytes() == got.vector.tobytes()

    def test_bad_magic(self):
        buf = io.BytesIO(b"XEMB" + b"\x01\x00" + b"\x04\x00\x00\x00")
        with pytest.raises(FormatError):
            read_header(buf)

    def test_bad_version(self):
        buf = io.BytesIO(b"CEMB" + b"\x63\x00" + b"\x04\x00\x00\x00")
        with pytest.raises(FormatError):
            read_header(buf)

    def test_zero_dim_header(self):
        buf = io.BytesIO(b"CEMB" + b"\x01\x00" + b"\x00\x00\x00\x00")
        with pytest.raises(FormatError):
            read_header(buf)

    def test_short_header(self):
        with pytest.raises(FormatError):
            read_header(io.BytesIO(b"CEM"))

    def test_truncated_record_reports_offset(self):
        buf = io.BytesIO()
        write_stream(
            buf,
            2,
            [EmbeddingRecord(0, 0, 0, "w", np.array([1.0, 2.0], dtype=np.float32))],
        )
        data = buf.getvalue()
        reader = StreamReader(io.BytesIO(data[:-3]))
        with pytest.raises(CorruptStreamError) as exc:
            list(reader)
        assert exc.value.offset == 10  # record starts right after the header

    def test_writer_rejects_wrong_dim(self):
        writer = StreamWriter(io.BytesIO(), dim=3)
        with pytest.raises(DimensionMismatchError):
            writer.write(
                EmbeddingRecord(0, 0, 0, "w", np.array([1.0, 2.0], dtype=np.float32))
            )

    def test_whitespace_word_rejected_on_read(self):
        buf = io.BytesIO()
        # writer validates nothing about whitespace; craft bytes directly
        writer = StreamWriter(buf, dim=1)
        writer.write(EmbeddingRecord(0, 0, 0, "a b", np.array([1.0], dtype=np.float32)))
        buf.seek(0)
        with pytest.raises(CorruptStreamError):
            list(StreamReader(buf))


class TestReconstructWords:
    def rec(self, doc, seq, idx, word, vec):
        return EmbeddingRecord(doc, seq, idx, word, np.array(vec, dtype=np.float32))

    def test_single_piece_identity(self):
        out = list(reconstruct_words([self.rec(0, 0, 0, "w", [1, 3])]))
        assert len(out) == 1
        word, vec = out[0]
        assert word == "w"
        assert np.array_equal(vec, [1.0, 3.0])

    def test_two_piece_mean(self):
        records = [self.rec(0, 0, 0, "w", [1, 3]), self.rec(0, 0, 0, "w", [3, 5])]
        [(word, vec)] = reconstruct_words(records)
        assert word == "w"
        assert np.array_equal(vec, [2.0, 4.0])

    def test_three_groups_order_preserved(self, rng):
        records = make_records(rng, n_words=5, dim=3, n_occurrences=3)
        got = list(reconstruct_words(records))
        expected = group_occurrences(records)
        assert [w for w, _ in got] == [w for w, _ in expected]
        for (_, v1), (_, v2) in zip(got, expected):
            np.testing.assert_allclose(v1, v2, rtol=0, atol=1e-12)

    def test_batch_oracle_large(self, rng):
        records = make_records(rng, n_words=12, dim=6, n_occurrences=200)
        got = list(reconstruct_words(records))
        expected = group_occurrences(records)
        assert len(got) == len(expected)
        for (w1, v1), (w2, v2) in zip(got, expected):
            assert w1 == w2
            np.testing.assert_allclose(v1, v2, rtol=1e-12, atol=0)

    def test_out_of_order_key_rejected(self):
        records = [
            self.rec(0, 0, 1, "a", [1.0]),
            self.rec(0, 0, 0, "b", [1.0]),
        ]
        with pytest.raises(StreamOrderError):
            list(reconstruct_words(records))

    def test_reopened_group_rejected(self):
        records = [
            self.rec(0, 0, 0, "a", [1.0]),
            self.rec(0, 0, 1, "b", [1.0]),
            self.rec(0, 0, 0, "a", [1.0]),
        ]
        with pytest.raises(StreamOrderError):
            list(reconstruct_words(records))

    def test_mixed_word_in_group_rejected(self):
        records = [
            self.rec(0, 0, 0, "a", [1.0]),
            self.rec(0, 0, 0, "b", [1.0]),
        ]
        with pytest.raises(CorruptStreamError):
            list(reconstruct_words(records))

    @given(
        vecs=st.lists(
            st.lists(st.integers(-1000, 1000), min_size=2, max_size=2),
            min_size=1,
            max_size=6,
        ),
        scale=st.sampled_from([0.5, 2.0, 4.0, 0.25]),
    )
    def test_scaling_linearity(self, vecs, scale):
        # integer coordinates and power-of-two scales keep the floats exact
        base = [self.rec(0, 0, 0, "w", v) for v in vecs]
        scaled = [
            self.rec(0, 0, 0, "w", np.array(v, dtype=np.float32) * scale) for v in vecs
        ]
        [(_, v1)] = reconstruct_words(base)
        [(_, v2)] = reconstruct_words(scaled)
        np.testing.assert_array_equal(v1 * scale, v2)


class TestAggregate:
    def occurrences(self, pairs):
        return [(w, np.asarray(v, dtype=np.float64)) for w, v in pairs]

    def test_below_min_count_dropped(self):
        occ = self.occurrences([("w", [1.0])] * 4)
        table = aggregate(occ, min_count=5)
        assert "w" not in table

    def test_at_min_count_kept(self):
        occ = self.occurrences([("w", [2.0, -1.0])] * 5)
        table = aggregate(occ, min_count=5)
        entry = table.get("w")
        assert entry.count == 5
        assert np.array_equal(entry.vector, [2.0, -1.0])

    def test_batch_mean_oracle(self, rng):
        words = [f"w{i}" for i in range(10)]
        occ = [
            (words[int(rng.integers(10))], rng.normal(size=4))
            for _ in range(1000)
        ]
        table = aggregate(occ, min_count=1)
        expected = batch_mean_table(occ, min_count=1)
        assert set(table.entries) == set(expected)
        for word, (vec, count) in expected.items():
            entry = table.get(word)
            assert entry.count == count
            np.testing.assert_allclose(entry.vector, vec, rtol=1e-9)

    def test_dim_mismatch_mid_stream(self):
        occ = [("a", np.ones(3)), ("b", np.ones(4))]
        with pytest.raises(DimensionMismatchError):
            aggregate(occ, min_count=1)

    def test_min_count_monotone(self, rng):
        occ = [
            (f"w{int(rng.integers(6))}", rng.normal(size=2)) for _ in range(60)
        ]
        tables = {m: aggregate(occ, min_count=m) for m in (1, 3, 5, 8)}
        for lo, hi in [(1, 3), (3, 5), (5, 8)]:
            assert set(tables[hi].entries) <= set(tables[lo].entries)

    def test_mean_consistency(self, rng):
        occ = [
            (f"w{int(rng.integers(5))}", rng.normal(size=3)) for _ in range(200)
        ]
        acc = Accumulator()
        for w, v in occ:
            acc.add(w, v)
        table = acc.finalize(min_count=1)
        for word in table.words():
            total, count = acc.sum_and_count(word)
            entry = table.get(word)
            np.testing.assert_allclose(entry.vector * entry.count, total, rtol=1e-9)


class TestMergeAccumulators:
    def build(self, pairs):
        acc = Accumulator()
        for w, v in pairs:
            acc.add(w, np.asarray(v, dtype=np.float64))
        return acc

    def test_identity(self):
        a = self.build([("x", [1.0, 2.0]), ("y", [0.0, 1.0])])
        merged = merge_accumulators(a, Accumulator())
        assert len(merged) == 2
        for word in ("x", "y"):
            sa, ca = a.sum_and_count(word)
            sm, cm = merged.sum_and_count(word)
            assert ca == cm
            np.testing.assert_array_equal(sa, sm)

    def test_commutativity(self, rng):
        a = self.build([(f"w{i % 3}", rng.normal(size=2)) for i in range(10)])
        b = self.build([(f"w{i % 4}", rng.normal(size=2)) for i in range(7)])
        ab, ba = merge_accumulators(a, b), merge_accumulators(b, a)
        assert set(dict(ab._counts)) == set(dict(ba._counts))
        for word in ab._counts:
            s1, c1 = ab.sum_and_count(word)
            s2, c2 = ba.sum_and_count(word)
            assert c1 == c2
            np.testing.assert_allclose(s1, s2, rtol=1e-12)

    def test_three_way_shard_merge(self, rng):
        occ = [(f"w{int(rng.integers(8))}", rng.normal(size=3)) for _ in range(90)]
        whole = self.build(occ)
        shards = [self.build(occ[i::3]) for i in range(3)]
        merged = merge_accumulators(merge_accumulators(shards[0], shards[1]), shards[2])
        assert set(merged._counts) == set(whole._counts)
        for word in whole._counts:
            sw, cw = whole.sum_and_count(word)
            sm, cm = merged.sum_and_count(word)
            assert cw == cm
            np.testing.assert_allclose(sm, sw, rtol=1e-9)

    def test_dim_mismatch(self):
        a = self.build([("x", [1.0, 2.0])])
        b = self.build([("x", [1.0, 2.0, 3.0])])
        with pytest.raises(DimensionMismatchError):
            merge_accumulators(a, b)


class TestTextVectors:
    def test_parse_two_words(self):
        text = "2 3\nfoo 1.0 2.0 3.0\nbar -1.0 0.5 0.25\n"
        table = load_text_vectors(io.StringIO(text))
        assert table.dim == 3 and len(table) == 2
        np.testing.assert_array_equal(table.get("bar").vector, [-1.0, 0.5, 0.25])

    def test_wrong_field_count(self):
        text = "1 3\nfoo 1.0 2.0\n"
        with pytest.raises(ParseError) as exc:
            load_text_vectors(io.StringIO(text))
        assert exc.value.line == 2

    def test_non_finite_rejected(self):
        text = "1 2\nfoo 1.0 nan\n"
        with pytest.raises(ParseError):
            load_text_vectors(io.StringIO(text))

    def test_declared_count_mismatch(self):
        text = "3 2\nfoo 1.0 2.0\n"
        with pytest.raises(ParseError):
            load_text_vectors(io.StringIO(text))

    def test_duplicate_word(self):
        text = "2 1\nfoo 1.0\nfoo 2.0\n"
        with pytest.raises(ParseError):
            load_text_vectors(io.StringIO(text))

    def test_write_load_roundtrip(self, rng):
        entries = {
            f"w{i}": WordEntry(rng.normal(size=5), 5) for i in range(20)
        }
        table = WordVectorTable(5, entries)
        buf = io.StringIO()
        write_text_vectors(table, buf)
        reloaded = load_text_vectors(io.StringIO(buf.getvalue()))
        assert set(reloaded.entries) == set(entries)
        for word, entry in entries.items():
            np.testing.assert_array_equal(reloaded.get(word).vector, entry.vector)
        # second write is byte-identical
        buf2 = io.StringIO()
        write_text_vectors(reloaded, buf2)
        assert buf.getvalue() == buf2.getvalue()


class TestCountSidecar:
    def test_roundtrip(self, rng):
        entries = {f"w{i}": WordEntry(rng.normal(size=2), 5 + i) for i in range(7)}
        table = WordVectorTable(2, entries)
        buf = io.BytesIO()
        write_count_sidecar(table, buf)
        buf.seek(0)
        counts = read_count_sidecar(buf)
        assert counts == {w: e.count for w, e in entries.items()}


@settings(max_examples=40, deadline=None)
@given(
    n_shards=st.integers(1, 8),
    seed=st.integers(0, 2**16),
)
def test_shard_invariance_property(n_shards, seed):
    rng = np.random.default_rng(seed)
    occ = [(f"w{int(rng.integers(12))}", rng.normal(size=3)) for _ in range(150)]
    whole = Accumulator()
    for w, v in occ:
        whole.add(w, v)
    merged = Accumulator()
    for i in range(n_shards):
        shard = Accumulator()
        for w, v in occ[i::n_shards]:
            shard.add(w, v)
        merged.update(shard)
    assert set(merged._counts) == set(whole._counts)
    for word in whole._counts:
        sw, cw = whole.sum_and_count(word)
        sm, cm = merged.sum_and_count(word)
        assert cw == cm
        np.testing.assert_allclose(sm, sw, rtol=1e-9)
