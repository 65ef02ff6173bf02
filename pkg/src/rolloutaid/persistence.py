"""Versioned, canonical model files.

The file carries raw support pairs rather than pre-divided floats so exact
ratio ordering survives a round trip; save -> load -> save is byte-identical.
"""

from __future__ import annotations

import hashlib
import json
import logging
from datetime import date
from pathlib import Path
from typing import IO, Union

from .core import format_state, parse_state
from .errors import ModelFormatError, ValidationError
from .mining import ItemsetRatioModel, ItemsetSupports, ModelProvenance

MODEL_FORMAT = "rolloutaid-model"
MODEL_VERSION = 1

logger = logging.getLogger(__name__)


def _payload_dict(model: ItemsetRatioModel) -> dict:
    entries = [
        {
            "itemset": format_state(itemset),
            "support_down": supports.down,
            "support_available": supports.available,
        }
        for itemset, supports in sorted(
            model.entries.items(), key=lambda kv: format_state(kv[0])
        )
    ]
    provenance = model.provenance
    return {
        "config": {
            "down_threshold": model.down_threshold,
            "min_support": model.min_support,
            "laplace": model.laplace,
        },
        "entries": entries,
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
    }


def _payload_digest(payload: dict) -> str:
    canonical = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def model_to_json(model: ItemsetRatioModel) -> str:
    payload = _payload_dict(model)
    document = {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "content_sha256": _payload_digest(payload),
        **payload,
    }
    return json.dumps(document, indent=2, sort_keys=True) + "\n"


def save_model(model: ItemsetRatioModel, sink: Union[str, Path, IO[str]]) -> None:
    text = model_to_json(model)
    if isinstance(sink, (str, Path)):
        Path(sink).write_text(text, encoding="utf-8")
    else:
        sink.write(text)


def model_from_json(text: str) -> ItemsetRatioModel:
    try:
        document = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"model file is not valid JSON: {exc}") from None
    if not isinstance(document, dict):
        raise ModelFormatError("model file must contain a JSON object")
    if document.get("format") != MODEL_FORMAT:
        raise ModelFormatError("not a model file (unrecognized format tag)")
    if document.get("version") != MODEL_VERSION:
        raise ModelFormatError(
            f"unsupported model version {document.get('version')!r}"
        )
    for section in ("config", "entries", "provenance"):
        if section not in document:
            raise ModelFormatError(f"model file missing section {section!r}")

    payload = {
        "config": document["config"],
        "entries": document["entries"],
        "provenance": document["provenance"],
    }
    stored_digest = document.get("content_sha256")
    if stored_digest and stored_digest != _payload_digest(payload):
        logger.warning("model content digest mismatch; file may be corrupted")

    config = document["config"]
    try:
        down_threshold = float(config["down_threshold"])
        min_support = int(config["min_support"])
        laplace = bool(config["laplace"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFormatError(f"malformed model config: {exc}") from None

    entries: dict = {}
    for position, raw in enumerate(document["entries"]):
        try:
            itemset = parse_state(raw["itemset"])
            supports = ItemsetSupports(
                down=int(raw["support_down"]),
                available=int(raw["support_available"]),
            )
        except (KeyError, TypeError, ValueError, ValidationError) as exc:
            raise ModelFormatError(f"malformed model entry {position}: {exc}") from None
        if not itemset:
            raise ModelFormatError(f"model entry {position} has an empty itemset")
        if supports.down < 0 or supports.available < 0:
            raise ModelFormatError(f"model entry {position} has negative supports")
        if supports.down == 0 and supports.available == 0:
            raise ModelFormatError(
                f"model entry {position} is corrupted: both supports are zero"
            )
        if itemset in entries:
            raise ModelFormatError(
                f"model entry {position} duplicates itemset {raw['itemset']!r}"
            )
        entries[itemset] = supports

    raw_prov = document["provenance"]
    try:
        provenance = ModelProvenance(
            train_start=date.fromisoformat(raw_prov["train_start"])
            if raw_prov.get("train_start")
            else None,
            train_end=date.fromisoformat(raw_prov["train_end"])
            if raw_prov.get("train_end")
            else None,
            n_observations=int(raw_prov["n_observations"]),
            n_remains_available=int(raw_prov["n_remains_available"]),
            n_becomes_down=int(raw_prov["n_becomes_down"]),
            log_sha256=str(raw_prov["log_sha256"]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFormatError(f"malformed model provenance: {exc}") from None

    return ItemsetRatioModel(
        entries=entries,
        down_threshold=down_threshold,
        min_support=min_support,
        laplace=laplace,
        provenance=provenance,
    )


def load_model(source: Union[str, Path, IO[str]]) -> ItemsetRatioModel:
    if isinstance(source, (str, Path)):
        text = Path(source).read_text(encoding="utf-8")
    else:
        text = source.read()
    return model_from_json(text)
