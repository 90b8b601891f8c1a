import json
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fmea_gen.embedding import HashEmbedder
from fmea_gen.errors import DuplicateIdError, NotFoundError
from fmea_gen.model import EquipmentBoundary, FmeaDocument
from fmea_gen.store import DEFAULT_RATIOS, CorpusStore, split_ids


def synth_doc(i: int) -> FmeaDocument:
    return FmeaDocument(
        doc_id=f"synth-{i:04d}",
        equipment_name=f"Unit {i}",
        short_description=f"synthetic unit number {i}",
        boundary=EquipmentBoundary(description=f"Synthetic unit {i}.", components=("frame",)),
    )


class TestSplitIds:
    def test_sizes_on_714(self):
        split = split_ids([f"d{i}" for i in range(714)], seed=7)
        assert split.sizes == (571, 71, 72)

    def test_partition_property(self):
        ids = [f"d{i}" for i in range(53)]
        split = split_ids(ids, seed=3)
        combined = list(split.train_ids) + list(split.validation_ids) + list(split.test_ids)
        assert sorted(combined) == sorted(ids)
        assert len(set(combined)) == len(ids)

    def test_deterministic_for_seed(self):
        ids = [f"d{i}" for i in range(40)]
        assert split_ids(ids, seed=11) == split_ids(ids, seed=11)

    def test_input_order_does_not_matter(self):
        ids = [f"d{i}" for i in range(40)]
        shuffled = ids[:]
        random.Random(0).shuffle(shuffled)
        assert split_ids(ids, seed=5) == split_ids(shuffled, seed=5)

    def test_different_seeds_differ(self):
        ids = [f"d{i}" for i in range(100)]
        assert split_ids(ids, seed=1).train_ids != split_ids(ids, seed=2).train_ids

    @given(st.integers(min_value=1, max_value=400), st.integers(min_value=0, max_value=2**32))
    @settings(max_examples=100, deadline=None)
    def test_partition_holds_for_any_size(self, n, seed):
        ids = [f"d{i}" for i in range(n)]
        split = split_ids(ids, seed)
        parts = [split.train_ids, split.validation_ids, split.test_ids]
        combined = [i for part in parts for i in part]
        assert sorted(combined) == sorted(ids)
        assert len(split.train_ids) == int(n * 0.8)
        assert len(split.validation_ids) == int(n * 0.1)

    def test_rejects_bad_ratios(self):
        with pytest.raises(ValueError):
            split_ids(["a", "b"], 0, ratios=(0.5, 0.2, 0.2))
        with pytest.raises(ValueError):
            split_ids(["a", "b"], 0, ratios=(0.8, 0.2))

    def test_part_accessor(self):
        split = split_ids([f"d{i}" for i in range(10)], seed=0)
        assert split.part("train") == split.train_ids
        with pytest.raises(ValueError):
            split.part("dev")


class TestCorpusStore:
    def test_ingest_and_get(self, tmp_path):
        store = CorpusStore(tmp_path)
        store.ingest(synth_doc(1))
        assert store.get("synth-0001").equipment_name == "Unit 1"
        assert len(store) == 1
        assert "synth-0001" in store

    def test_duplicate_ingest_raises(self, tmp_path):
        store = CorpusStore(tmp_path)
        store.ingest(synth_doc(1))
        with pytest.raises(DuplicateIdError):
            store.ingest(synth_doc(1))

    def test_ingest_many_skips_duplicates(self, tmp_path):
        store = CorpusStore(tmp_path)
        docs = [synth_doc(i) for i in range(5)]
        assert store.ingest_many(docs) == (5, 0)
        assert store.ingest_many(docs) == (0, 5)

    def test_get_missing_raises_not_found(self, tmp_path):
        store = CorpusStore(tmp_path)
        with pytest.raises(NotFoundError):
            store.get("nope")

    def test_persists_across_instances(self, tmp_path):
        CorpusStore(tmp_path).ingest_many([synth_doc(i) for i in range(3)])
        reloaded = CorpusStore(tmp_path)
        assert len(reloaded) == 3
        assert reloaded.get("synth-0002") == synth_doc(2)

    def test_list_ids_sorted_and_filtered(self, fixture_store):
        ids = fixture_store.list_ids()
        assert ids == sorted(ids)
        assert fixture_store.list_ids(provenance="fixture") == ids
        assert fixture_store.list_ids(provenance="generated") == []

    def test_list_ids_by_split_part(self, fixture_store):
        fixture_store.make_split(7)
        test_ids = fixture_store.list_ids(split_part="test", seed=7)
        assert len(test_ids) == 2

    def test_split_persisted_and_reloaded(self, tmp_path, fixture_set):
        store = CorpusStore(tmp_path / "c")
        store.ingest_many(fixture_set.documents)
        made = store.make_split(7)
        again = CorpusStore(tmp_path / "c").load_split(7)
        assert made == again
        assert (tmp_path / "c" / "splits" / "7.json").exists()

    def test_ensure_split_is_idempotent(self, fixture_store):
        first = fixture_store.ensure_split(3)
        second = fixture_store.ensure_split(3)
        assert first == second

    def test_fixture_split_sizes(self, fixture_store):
        split = fixture_store.make_split(7)
        assert split.sizes == (16, 2, 2)


class TestEmbeddingCache:
    def test_embedding_cached_and_stable(self, fixture_store):
        emb = HashEmbedder()
        first = fixture_store.embedding_for("pump-01", emb)
        second = fixture_store.embedding_for("pump-01", emb)
        assert first == second

    def test_cache_survives_reload(self, tmp_path, fixture_set):
        root = tmp_path / "c"
        store = CorpusStore(root)
        store.ingest_many(fixture_set.documents)
        emb = HashEmbedder()
        vec = store.embedding_for("pump-01", emb)
        cache = json.loads((root / "embeddings.json").read_text())
        assert cache
        reloaded = CorpusStore(root)
        assert reloaded.embedding_for("pump-01", emb) == vec

    def test_rebuild_recomputes_all(self, fixture_store):
        emb = HashEmbedder()
        count = fixture_store.rebuild_embeddings(emb)
        assert count == 20
        assert fixture_store.embedding_for("fan-01", emb).provider_id == emb.provider_id
