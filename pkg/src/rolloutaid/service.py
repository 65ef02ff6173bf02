"""Read-only HTTP API over a loaded model, for the supervisor dashboard.

The service never does score arithmetic of its own: every number in a
response comes from the library calls the CLI also uses. The loaded model is
immutable; retraining happens offline and a new process (or an explicit
restart) picks up the new file. Decision journal appends are serialized
through a single lock.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass
from datetime import date
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from .core import DefectState, Status, TransactionLog, canonicalize_state, format_state
from .errors import ValidationError
from .mining import ItemsetRatioModel
from .scoring import ScoreResult, rank_fleet, score_state, snapshot_from_log

API_PREFIX = "/api/v1"

DECISION_VALUES = ("roll", "hold")


class ScoreRequest(BaseModel):
    state: str


class WhatIfRequest(BaseModel):
    state: str
    add: list[str] = []
    remove: list[str] = []


class DecisionRequest(BaseModel):
    date: str
    vehicle_id: str
    decision: str
    score_shown: str | None = None


@dataclass
class _Journal:
    """Append-only decision journal; one JSON object per line."""

    path: Path
    lock: threading.Lock

    def append(self, record: dict) -> int:
        with self.lock:
            sequence = 0
            if self.path.exists():
                with self.path.open("r", encoding="utf-8") as handle:
                    sequence = sum(1 for line in handle if line.strip())
            sequence += 1
            with self.path.open("a", encoding="utf-8") as handle:
                handle.write(json.dumps({"sequence": sequence, **record}, sort_keys=True))
                handle.write("\n")
            return sequence


def _score_payload(result: ScoreResult) -> dict:
    return {
        "score": {
            "numerator": result.score.numerator,
            "denominator": result.score.denominator,
            "display": result.score.display(),
        },
        "witness": format_state(result.witness) if result.witness else None,
    }


def _error_response(status_code: int, code: str, message: str) -> JSONResponse:
    return JSONResponse(
        status_code=status_code,
        content={"error": {"code": code, "message": message}},
    )


def create_app(
    model: ItemsetRatioModel,
    *,
    log: TransactionLog | None = None,
    journal_path: str | Path = "decisions.jsonl",
) -> FastAPI:
    app = FastAPI(title="rolloutaid", docs_url=None, redoc_url=None)
    journal = _Journal(path=Path(journal_path), lock=threading.Lock())

    @app.exception_handler(ValidationError)
    async def _on_validation_error(request: Request, exc: ValidationError):
        return _error_response(400, "validation_error", str(exc))

    @app.exception_handler(RequestValidationError)
    async def _on_request_error(request: Request, exc: RequestValidationError):
        return _error_response(400, "validation_error", str(exc))

    def _parse_state_arg(text: str) -> DefectState:
        return canonicalize_state(
            token.strip() for token in text.split(";") if token.strip()
        )

    @app.get(API_PREFIX + "/ranking")
    async def get_ranking(date: str | None = None):
        if date is None:
            raise ValidationError("missing required query parameter 'date'")
        try:
            as_of = _parse_date(date)
        except ValueError:
            raise ValidationError(f"unparseable date {date!r}") from None
        if log is None:
            raise ValidationError("no fleet log loaded; ranking by date unavailable")
        snapshot = snapshot_from_log(log, as_of)
        ranking = rank_fleet(model, snapshot)
        n_rollouts = None
        if snapshot.vehicles:
            n_rollouts = sum(
                1
                for row in log
                if row.timestamp == as_of and row.status is Status.AVAILABLE
            )
        return {
            "date": as_of.isoformat(),
            "n_supervisor_rollouts": n_rollouts,
            "ranking": [
                {
                    "rank": position,
                    "vehicle_id": vehicle_id,
                    "defects": format_state(snapshot.vehicles[vehicle_id]),
                    **_score_payload(result),
                }
                for position, (vehicle_id, result) in enumerate(
                    ranking.ordered, start=1
                )
            ],
        }

    @app.post(API_PREFIX + "/score")
    async def post_score(body: ScoreRequest):
        state = _parse_state_arg(body.state)
        result = score_state(model, state)
        return {"state": format_state(state), **_score_payload(result)}

    @app.post(API_PREFIX + "/whatif")
    async def post_whatif(body: WhatIfRequest):
        base = _parse_state_arg(body.state)
        add = canonicalize_state(body.add)
        remove = canonicalize_state(body.remove)
        toggled = (base | add) - remove
        before = score_state(model, base)
        after = score_state(model, toggled)
        return {
            "state_before": format_state(base),
            "state_after": format_state(toggled),
            "before": _score_payload(before),
            "after": _score_payload(after),
        }

    @app.post(API_PREFIX + "/decisions")
    async def post_decision(body: DecisionRequest):
        try:
            decision_date = _parse_date(body.date)
        except ValueError:
            raise ValidationError(f"unparseable date {body.date!r}") from None
        if body.decision not in DECISION_VALUES:
            raise ValidationError(
                f"decision must be one of {', '.join(DECISION_VALUES)}"
            )
        if not body.vehicle_id.strip():
            raise ValidationError("empty vehicle_id")
        sequence = journal.append(
            {
                "date": decision_date.isoformat(),
                "vehicle_id": body.vehicle_id,
                "decision": body.decision,
                "score_shown": body.score_shown,
            }
        )
        return {
            "journaled": True,
            "sequence": sequence,
            "date": decision_date.isoformat(),
            "vehicle_id": body.vehicle_id,
        }

    @app.get(API_PREFIX + "/model/meta")
    async def get_meta():
        provenance = model.provenance
        return {
            "config": {
                "down_threshold": model.down_threshold,
                "min_support": model.min_support,
                "laplace": model.laplace,
            },
            "provenance": {
                "train_start": provenance.train_start.isoformat()
                if provenance.train_start
                else None,
                "train_end": provenance.train_end.isoformat()
                if provenance.train_end
                else None,
                "n_observations": provenance.n_observations,
                "n_remains_available": provenance.n_remains_available,
                "n_becomes_down": provenance.n_becomes_down,
                "log_sha256": provenance.log_sha256,
            },
            "n_itemsets": len(model),
        }

    return app


def _parse_date(text: str) -> date:
    return date.fromisoformat(text.strip())
