from __future__ import annotations

import io
import json
import logging
import random

import pytest

from rolloutaid import (
    MinerConfig,
    ModelFormatError,
    PreprocessConfig,
    score_state,
    train,
)
from rolloutaid.persistence import (
    load_model,
    model_from_json,
    model_to_json,
    save_model,
)
from conftest import fs


@pytest.fixture()
def sample_model(sample_log):
    return train(sample_log, PreprocessConfig(), MinerConfig(min_support=1))


class TestRoundTrip:
    def test_save_load_save_is_byte_identical(self, sample_model, tmp_path):
        path_a = tmp_path / "a.json"
        path_b = tmp_path / "b.json"
        save_model(sample_model, path_a)
        loaded = load_model(path_a)
        save_model(loaded, path_b)
        assert path_a.read_bytes() == path_b.read_bytes()

    def test_loaded_model_scores_identically(self, sample_model):
        loaded = model_from_json(model_to_json(sample_model))
        rng = random.Random(2)
        alphabet = [f"d{i}" for i in range(1, 11)]
        for _ in range(100):
            state = frozenset(rng.sample(alphabet, rng.randrange(0, 8)))
            assert score_state(loaded, state) == score_state(sample_model, state)

    def test_known_entry_supports(self, sample_model):
        document = json.loads(model_to_json(sample_model))
        by_itemset = {e["itemset"]: e for e in document["entries"]}
        entry = by_itemset["d6;d7"]
        assert entry["support_down"] == 1
        assert entry["support_available"] == 1

    def test_extended_fixture_entry_supports(self):
        from rolloutaid import build_ratio_model, mine_frequent_itemsets
        from conftest import EXTENDED_AVAILABLE, EXTENDED_DOWN

        model = build_ratio_model(
            mine_frequent_itemsets(EXTENDED_DOWN, MinerConfig(min_support=1)),
            EXTENDED_AVAILABLE,
            EXTENDED_DOWN,
            MinerConfig(min_support=1),
        )
        document = json.loads(model_to_json(model))
        by_itemset = {e["itemset"]: e for e in document["entries"]}
        entry = by_itemset["d6;d7"]
        assert entry["support_down"] == 1
        assert entry["support_available"] == 2

    def test_config_and_provenance_survive(self, sample_model):
        loaded = model_from_json(model_to_json(sample_model))
        assert loaded.down_threshold == sample_model.down_threshold
        assert loaded.min_support == sample_model.min_support
        assert loaded.laplace == sample_model.laplace
        assert loaded.provenance == sample_model.provenance


class TestFormatValidation:
    def test_unknown_version_rejected(self, sample_model):
        document = json.loads(model_to_json(sample_model))
        document["version"] = 99
        with pytest.raises(ModelFormatError, match="unsupported model version"):
            model_from_json(json.dumps(document))

    def test_wrong_format_tag_rejected(self, sample_model):
        document = json.loads(model_to_json(sample_model))
        document["format"] = "something-else"
        with pytest.raises(ModelFormatError, match="format"):
            model_from_json(json.dumps(document))

    def test_not_json_rejected(self):
        with pytest.raises(ModelFormatError, match="JSON"):
            model_from_json("definitely not json")

    def test_both_zero_supports_rejected(self, sample_model):
        document = json.loads(model_to_json(sample_model))
        document["entries"][0]["support_down"] = 0
        document["entries"][0]["support_available"] = 0
        with pytest.raises(ModelFormatError, match="corrupted"):
            model_from_json(json.dumps(document))

    def test_duplicate_itemset_rejected(self, sample_model):
        document = json.loads(model_to_json(sample_model))
        document["entries"].append(dict(document["entries"][0]))
        with pytest.raises(ModelFormatError, match="duplicates"):
            model_from_json(json.dumps(document))

    def test_digest_mismatch_warns_but_loads(self, sample_model, caplog):
        document = json.loads(model_to_json(sample_model))
        document["entries"][0]["support_down"] += 1
        with caplog.at_level(logging.WARNING, logger="rolloutaid.persistence"):
            model_from_json(json.dumps(document))
        assert any("digest mismatch" in r.message for r in caplog.records)

    def test_stream_io(self, sample_model):
        buffer = io.StringIO()
        save_model(sample_model, buffer)
        buffer.seek(0)
        loaded = load_model(buffer)
        assert loaded.entries == sample_model.entries
