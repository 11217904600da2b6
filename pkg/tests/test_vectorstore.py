import numpy as np
import pytest

from vaxrag.corpus import CollectionId, Document, parse_timestamp
from vaxrag.errors import (
    CorruptSnapshotError,
    DimensionMismatchError,
    UnknownCollectionError,
    ZeroVectorError,
)
from vaxrag.vectorstore import SearchQuery, VectorRecord, VectorStore, cosine

D = 4


def _doc(i, ts="2024-01-01T00:00:00Z", meta=None):
    return Document(
        id=f"v{i}", collection=CollectionId.PAPERS, text=f"text {i}", lang="en",
        timestamp=parse_timestamp(ts), source="s", metadata=meta or {},
    )


def _rec(i, vec, **kw):
    return VectorRecord(
        doc_id=f"v{i}", collection=CollectionId.PAPERS,
        vector=np.asarray(vec, dtype=float), payload=_doc(i, **kw),
    )


class TestCosine:
    def test_identity(self):
        assert cosine(np.array([1.0, 0.0]), np.array([1.0, 0.0])) == pytest.approx(1.0)

    def test_orthogonal(self):
        assert cosine(np.array([1.0, 0.0]), np.array([0.0, 1.0])) == pytest.approx(0.0)

    def test_forty_five_degrees(self):
        value = cosine(np.array([1.0, 1.0]), np.array([1.0, 0.0]))
        assert value == pytest.approx(2 ** -0.5, abs=1e-9)  # 0.70710678...

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            cosine(np.array([1.0, 0.0]), np.array([1.0, 0.0, 0.0]))

    def test_zero_vector(self):
        with pytest.raises(ZeroVectorError):
            cosine(np.zeros(2), np.array([1.0, 0.0]))


class TestUpsert:
    def test_roundtrip(self):
        store = VectorStore(D)
        store.upsert(_rec(1, [1, 0, 0, 0]))
        assert store.get(CollectionId.PAPERS, "v1").id == "v1"

    def test_replace_keeps_count(self):
        store = VectorStore(D)
        store.upsert(_rec(1, [1, 0, 0, 0]))
        replacement = _rec(1, [0, 1, 0, 0])
        replacement.payload.metadata["edited"] = "yes"
        store.upsert(replacement)
        assert store.count(CollectionId.PAPERS) == 1
        assert store.get(CollectionId.PAPERS, "v1").metadata["edited"] == "yes"

    def test_wrong_dimension(self):
        store = VectorStore(D)
        with pytest.raises(DimensionMismatchError):
            store.upsert(_rec(1, [1, 0]))

    def test_vectors_normalized_at_upsert(self):
        store = VectorStore(D)
        store.upsert(_rec(1, [3, 4, 0, 0]))
        coll = store._collections[CollectionId.PAPERS]
        assert np.linalg.norm(coll.vectors[0]) == pytest.approx(1.0, abs=1e-6)

    def test_unknown_collection(self):
        store = VectorStore(D)
        with pytest.raises(UnknownCollectionError):
            store.count("nonsense")


class TestSearch:
    def _store3(self):
        store = VectorStore(2)
        for i, vec in enumerate(([1, 0], [0, 1], [0.6, 0.8])):
            store.upsert(
                VectorRecord(
                    doc_id=f"v{i}", collection=CollectionId.PAPERS,
                    vector=np.asarray(vec, dtype=float), payload=_doc(i),
                )
            )
        return store

    def test_three_unit_docs(self):
        store = self._store3()
        hits = store.search(
            SearchQuery(collection=CollectionId.PAPERS, vector=np.array([1.0, 0.0]),
                        top_k=2)
        )
        assert [h.doc_id for h in hits] == ["v0", "v2"]
        assert hits[0].score == pytest.approx(1.0)
        assert hits[1].score == pytest.approx(0.6)

    def test_window_excluding_everything(self):
        store = self._store3()
        window = (parse_timestamp("1990-01-01T00:00:00Z"),
                  parse_timestamp("1990-12-31T00:00:00Z"))
        hits = store.search(
            SearchQuery(collection=CollectionId.PAPERS, vector=np.array([1.0, 0.0]),
                        top_k=2, time_window=window)
        )
        assert hits == []

    def test_k_larger_than_collection(self):
        store = self._store3()
        hits = store.search(
            SearchQuery(collection=CollectionId.PAPERS, vector=np.array([1.0, 0.0]),
                        top_k=50)
        )
        assert len(hits) == 3
        scores = [h.score for h in hits]
        assert scores == sorted(scores, reverse=True)

    def test_metadata_filters(self):
        store = VectorStore(2)
        for i, tag in enumerate(["a", "b", "a"]):
            store.upsert(
                VectorRecord(
                    doc_id=f"v{i}", collection=CollectionId.PAPERS,
                    vector=np.array([1.0, float(i) / 10]),
                    payload=_doc(i, meta={"tag": tag}),
                )
            )
        hits = store.search(
            SearchQuery(collection=CollectionId.PAPERS, vector=np.array([1.0, 0.0]),
                        top_k=5, filters={"tag": "a"})
        )
        assert {h.doc_id for h in hits} == {"v0", "v2"}
        assert all(h.payload.metadata["tag"] == "a" for h in hits)

    def test_invalid_query(self):
        with pytest.raises(ValueError):
            SearchQuery(collection=CollectionId.PAPERS, vector=np.array([1.0, 0.0]),
                        top_k=0)


def brute_force(records, query, k):
    """Independent oracle: per-record dot products, tuple sort."""
    qn = query / np.linalg.norm(query)
    scored = []
    for doc_id, vec in records:
        vn = vec / np.linalg.norm(vec)
        scored.append((-float(np.dot(vn, qn)), doc_id))
    scored.sort()
    return [(doc_id, -neg) for neg, doc_id in scored[:k]]


class TestExactness:
    @pytest.mark.parametrize("dim", [8, 32])
    def test_matches_brute_force_with_ties(self, dim):
        rng = np.random.default_rng(dim)
        store = VectorStore(dim)
        records = []
        vectors = rng.normal(size=(400, dim))
        vectors[50] = vectors[40]  # deliberate duplicates -> exact score ties
        vectors[60] = vectors[40]
        for i, vec in enumerate(vectors):
            doc_id = f"r{i:04d}"
            store.upsert(
                VectorRecord(doc_id=doc_id, collection=CollectionId.PAPERS,
                             vector=vec, payload=_doc(i))
            )
            records.append((doc_id, vec))
        for q in range(25):
            query = rng.normal(size=dim)
            hits = store.search(
                SearchQuery(collection=CollectionId.PAPERS, vector=query, top_k=10)
            )
            expected = brute_force(records, query, 10)
            assert [h.doc_id for h in hits] == [doc_id for doc_id, _ in expected]
            for hit, (_, score) in zip(hits, expected):
                assert hit.score == pytest.approx(score, abs=1e-12)

    def test_duplicate_vectors_tie_break_by_id(self):
        store = VectorStore(2)
        for doc_id in ["zz", "aa", "mm"]:
            store.upsert(
                VectorRecord(doc_id=doc_id, collection=CollectionId.PAPERS,
                             vector=np.array([1.0, 0.0]), payload=_doc(doc_id))
            )
        hits = store.search(
            SearchQuery(collection=CollectionId.PAPERS, vector=np.array([1.0, 0.0]),
                        top_k=3)
        )
        assert [h.doc_id for h in hits] == ["aa", "mm", "zz"]


class TestCount:
    def test_window_counts(self):
        store = VectorStore(2)
        for i, ts in enumerate(["2020-01-05T00:00:00Z", "2020-01-20T00:00:00Z",
                                "2020-02-10T00:00:00Z"]):
            store.upsert(
                VectorRecord(doc_id=f"v{i}", collection=CollectionId.NEWS,
                             vector=np.array([1.0, 0.0]),
                             payload=Document(
                                 id=f"v{i}", collection=CollectionId.NEWS, text="t",
                                 lang="en", timestamp=parse_timestamp(ts), source="s",
                             ))
            )
        january = (parse_timestamp("2020-01-01T00:00:00Z"),
                   parse_timestamp("2020-01-31T23:59:59Z"))
        assert store.count(CollectionId.NEWS, january) == 2
        empty = (parse_timestamp("2019-01-01T00:00:00Z"),
                 parse_timestamp("2019-01-02T00:00:00Z"))
        assert store.count(CollectionId.NEWS, empty) == 0
        full = (parse_timestamp("2019-01-01T00:00:00Z"),
                parse_timestamp("2030-01-01T00:00:00Z"))
        assert store.count(CollectionId.NEWS, full) == store.count(CollectionId.NEWS)


class TestSnapshot:
    def test_empty_roundtrip(self, tmp_path):
        store = VectorStore(D)
        path = tmp_path / "empty.bin"
        store.snapshot(path)
        restored = VectorStore.restore(path)
        assert restored.counts() == store.counts()
        assert restored.dimension == D

    def test_random_roundtrip_identical_hits(self, tmp_path):
        rng = np.random.default_rng(7)
        store = VectorStore(8)
        for i in range(100):
            coll = list(CollectionId)[i % 5]
            store.upsert(
                VectorRecord(
                    doc_id=f"d{i}", collection=coll, vector=rng.normal(size=8),
                    payload=Document(
                        id=f"d{i}", collection=coll, text=f"doc {i}", lang="en",
                        timestamp=parse_timestamp("2024-05-05T00:00:00Z"), source="s",
                        metadata={"n": str(i)},
                    ),
                )
            )
        path = tmp_path / "store.bin"
        store.snapshot(path)
        restored = VectorStore.restore(path)
        for q in range(20):
            query = rng.normal(size=8)
            for coll in CollectionId:
                original = store.search(
                    SearchQuery(collection=coll, vector=query, top_k=5)
                )
                after = restored.search(
                    SearchQuery(collection=coll, vector=query, top_k=5)
                )
                assert [(h.doc_id, h.score) for h in original] == [
                    (h.doc_id, h.score) for h in after
                ]

    def test_normalization_preserved(self, tmp_path):
        store = VectorStore(D)
        store.upsert(_rec(1, [5, 1, 1, 1]))
        path = tmp_path / "s.bin"
        store.snapshot(path)
        restored = VectorStore.restore(path)
        vec = restored._collections[CollectionId.PAPERS].vectors[0]
        assert abs(np.linalg.norm(vec) - 1.0) <= 1e-6

    def test_truncated_snapshot(self, tmp_path):
        store = VectorStore(D)
        store.upsert(_rec(1, [1, 0, 0, 0]))
        path = tmp_path / "s.bin"
        store.snapshot(path)
        blob = path.read_bytes()
        path.write_bytes(blob[: len(blob) - 7])
        with pytest.raises(CorruptSnapshotError):
            VectorStore.restore(path)

    def test_bitflip_snapshot(self, tmp_path):
        store = VectorStore(D)
        store.upsert(_rec(1, [1, 0, 0, 0]))
        path = tmp_path / "s.bin"
        store.snapshot(path)
        blob = bytearray(path.read_bytes())
        blob[10] ^= 0xFF
        path.write_bytes(bytes(blob))
        with pytest.raises(CorruptSnapshotError):
            VectorStore.restore(path)


class TestScan:
    def test_sorted_by_timestamp(self):
        store = VectorStore(2)
        stamps = ["2024-03-01T00:00:00Z", "2024-01-01T00:00:00Z", "2024-02-01T00:00:00Z"]
        for i, ts in enumerate(stamps):
            store.upsert(
                VectorRecord(doc_id=f"v{i}", collection=CollectionId.PAPERS,
                             vector=np.array([1.0, 0.0]), payload=_doc(i, ts=ts))
            )
        docs = store.scan(CollectionId.PAPERS)
        assert [d.id for d in docs] == ["v1", "v2", "v0"]
        assert len(store.scan(CollectionId.PAPERS, limit=2)) == 2
