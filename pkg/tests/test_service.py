from __future__ import annotations

import json

import pytest
from fastapi.testclient import TestClient

from rolloutaid import MinerConfig, PreprocessConfig, score_state, train
from rolloutaid.core import parse_state
from rolloutaid.service import create_app
from conftest import fs


@pytest.fixture()
def model(sample_log):
    return train(sample_log, PreprocessConfig(), MinerConfig(min_support=1))


@pytest.fixture()
def client(model, sample_log, tmp_path):
    app = create_app(
        model, log=sample_log, journal_path=tmp_path / "decisions.jsonl"
    )
    return TestClient(app)


class TestRankingEndpoint:
    def test_known_day(self, client, model, sample_log):
        response = client.get("/api/v1/ranking", params={"date": "2017-01-03"})
        assert response.status_code == 200
        body = response.json()
        assert body["date"] == "2017-01-03"
        assert body["n_supervisor_rollouts"] == 0  # the only vehicle was down
        assert [row["vehicle_id"] for row in body["ranking"]] == ["v1"]
        row = body["ranking"][0]
        expected = score_state(model, fs("d1", "d2", "d3", "d4", "d6"))
        assert row["score"]["numerator"] == expected.score.numerator
        assert row["score"]["denominator"] == expected.score.denominator
        assert row["rank"] == 1
        assert row["defects"] == "d1;d2;d3;d4;d6"

    def test_scores_match_library_exactly(self, client, model, sample_log):
        for day in ("2017-01-01", "2017-03-14"):
            body = client.get("/api/v1/ranking", params={"date": day}).json()
            for row in body["ranking"]:
                expected = score_state(model, parse_state(row["defects"]))
                assert row["score"]["display"] == expected.score.display()
                witness = (
                    ";".join(sorted(expected.witness)) if expected.witness else None
                )
                assert row["witness"] == witness

    def test_empty_day(self, client):
        body = client.get("/api/v1/ranking", params={"date": "2019-01-01"}).json()
        assert body["ranking"] == []
        assert body["n_supervisor_rollouts"] is None

    def test_bad_date(self, client):
        response = client.get("/api/v1/ranking", params={"date": "not-a-date"})
        assert response.status_code == 400
        assert response.json()["error"]["code"] == "validation_error"

    def test_missing_date(self, client):
        response = client.get("/api/v1/ranking")
        assert response.status_code == 400

    def test_no_log_loaded(self, model, tmp_path):
        app = create_app(model, journal_path=tmp_path / "j.jsonl")
        response = TestClient(app).get(
            "/api/v1/ranking", params={"date": "2017-01-01"}
        )
        assert response.status_code == 400
        assert "no fleet log" in response.json()["error"]["message"]


class TestScoreEndpoint:
    def test_score_matches_library(self, client, model):
        response = client.post("/api/v1/score", json={"state": "d6;d7;d9"})
        assert response.status_code == 200
        body = response.json()
        expected = score_state(model, fs("d6", "d7", "d9"))
        assert body["score"]["numerator"] == expected.score.numerator
        assert body["score"]["denominator"] == expected.score.denominator
        assert body["witness"] == ";".join(sorted(expected.witness))

    def test_empty_state_scores_zero(self, client):
        body = client.post("/api/v1/score", json={"state": ""}).json()
        assert body["score"]["numerator"] == 0
        assert body["witness"] is None

    def test_malformed_state_rejected(self, client):
        response = client.post("/api/v1/score", json={"state": "d1,d2"})
        assert response.status_code == 400

    def test_missing_body_field_rejected(self, client):
        response = client.post("/api/v1/score", json={})
        assert response.status_code == 400
        assert response.json()["error"]["code"] == "validation_error"


class TestWhatIfEndpoint:
    def test_empty_toggles_identity(self, client):
        body = client.post(
            "/api/v1/whatif", json={"state": "d6;d7", "add": [], "remove": []}
        ).json()
        assert body["before"] == body["after"]
        assert body["state_before"] == body["state_after"] == "d6;d7"

    def test_removing_witness_defect_lowers_score(self, client, model):
        before = score_state(model, fs("d6", "d7"))
        assert before.witness is not None
        body = client.post(
            "/api/v1/whatif",
            json={"state": "d6;d7", "add": [], "remove": sorted(before.witness)},
        ).json()
        b = (body["before"]["score"]["numerator"], body["before"]["score"]["denominator"])
        a = (body["after"]["score"]["numerator"], body["after"]["score"]["denominator"])
        assert a != b
        assert body["after"]["score"]["numerator"] == 0

    def test_unknown_defect_added_changes_nothing(self, client):
        base = client.post("/api/v1/score", json={"state": "d6;d7"}).json()
        body = client.post(
            "/api/v1/whatif", json={"state": "d6;d7", "add": ["zz9"], "remove": []}
        ).json()
        assert body["after"]["score"] == base["score"]


class TestDecisionsEndpoint:
    def test_journal_appends(self, client, tmp_path):
        first = client.post(
            "/api/v1/decisions",
            json={"date": "2017-01-01", "vehicle_id": "v1", "decision": "roll",
                  "score_shown": "0.5"},
        )
        second = client.post(
            "/api/v1/decisions",
            json={"date": "2017-01-01", "vehicle_id": "v2", "decision": "hold"},
        )
        assert first.status_code == 200 and second.status_code == 200
        assert first.json()["journaled"] is True
        assert first.json()["sequence"] == 1
        assert second.json()["sequence"] == 2
        journal = tmp_path / "decisions.jsonl"
        lines = [json.loads(l) for l in journal.read_text().splitlines()]
        assert [l["vehicle_id"] for l in lines] == ["v1", "v2"]
        assert lines[0]["score_shown"] == "0.5"

    def test_repeat_submission_appends_again(self, client, tmp_path):
        payload = {"date": "2017-01-01", "vehicle_id": "v1", "decision": "roll"}
        client.post("/api/v1/decisions", json=payload)
        client.post("/api/v1/decisions", json=payload)
        journal = tmp_path / "decisions.jsonl"
        assert len(journal.read_text().splitlines()) == 2

    def test_invalid_decision_rejected(self, client):
        response = client.post(
            "/api/v1/decisions",
            json={"date": "2017-01-01", "vehicle_id": "v1", "decision": "maybe"},
        )
        assert response.status_code == 400

    def test_bad_date_rejected(self, client):
        response = client.post(
            "/api/v1/decisions",
            json={"date": "yesterday", "vehicle_id": "v1", "decision": "roll"},
        )
        assert response.status_code == 400


class TestMetaEndpoint:
    def test_meta_reflects_model(self, client, model):
        body = client.get("/api/v1/model/meta").json()
        assert body["config"]["down_threshold"] == model.down_threshold
        assert body["config"]["min_support"] == model.min_support
        assert body["n_itemsets"] == len(model)
        assert body["provenance"]["n_observations"] == 8
        assert body["provenance"]["log_sha256"] == model.provenance.log_sha256
