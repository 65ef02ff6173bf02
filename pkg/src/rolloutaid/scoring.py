"""Suitability scoring and fleet ranking.

A vehicle's score is the highest itemset ratio among mined itemsets
contained in its defect state; low scores mean safe to roll out. Rankings
are ascending, so the most roll-out-suitable vehicles come first.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from datetime import date
from itertools import combinations
from pathlib import Path
from typing import IO, Union

from .core import DefectState, Ratio, TransactionLog, format_state, parse_state
from .errors import ValidationError
from .mining import ItemsetRatioModel

SNAPSHOT_CSV_HEADER = ("vehicle_id", "defect_state")
RANKING_CSV_HEADER = (
    "rank",
    "vehicle_id",
    "score_numerator",
    "score_denominator",
    "score_display",
    "witness_itemset",
)


@dataclass(frozen=True)
class FleetSnapshot:
    """One day's fleet: each vehicle's current defect state."""

    as_of: date | None
    vehicles: dict[str, DefectState]


@dataclass(frozen=True)
class ScoreResult:
    """Score plus the itemset that achieved it (absent iff the score is zero)."""

    score: Ratio
    witness: DefectState | None

    @classmethod
    def zero(cls) -> "ScoreResult":
        return cls(score=Ratio.zero(), witness=None)


@dataclass(frozen=True)
class Ranking:
    """Vehicles ordered ascending by score; ties broken by vehicle id."""

    ordered: tuple[tuple[str, ScoreResult], ...]
    as_of: date | None = None


def _prefer(
    ratio: Ratio, itemset: DefectState, best_ratio: Ratio, best_itemset: DefectState
) -> bool:
    """Witness tie-break: higher ratio, then larger itemset, then lexicographically
    smallest serialization. Larger witnesses explain more of the state."""
    if ratio != best_ratio:
        return ratio > best_ratio
    if len(itemset) != len(best_itemset):
        return len(itemset) > len(best_itemset)
    return format_state(itemset) < format_state(best_itemset)


def score_state(model: ItemsetRatioModel, state: DefectState) -> ScoreResult:
    """Highest ratio over model itemsets that are subsets of the state; zero if none.

    Defects outside the model's universe cannot change the result, so the
    state is reduced first. When the reduced state is small, its subsets are
    enumerated and looked up directly; otherwise the itemset dictionary is
    scanned. Both routes find exactly the mined subsets of the state.
    """
    if model.is_empty or not state:
        return ScoreResult.zero()
    reduced = state & model.universe
    if not reduced:
        return ScoreResult.zero()

    best_ratio: Ratio | None = None
    best_itemset: DefectState | None = None
    if 2 ** len(reduced) <= len(model.entries):
        pool = sorted(reduced)
        for size in range(1, len(pool) + 1):
            for combo in combinations(pool, size):
                itemset = frozenset(combo)
                if itemset not in model.entries:
                    continue
                ratio = model.ratio(itemset)
                if best_ratio is None or _prefer(
                    ratio, itemset, best_ratio, best_itemset  # type: ignore[arg-type]
                ):
                    best_ratio, best_itemset = ratio, itemset
    else:
        for itemset in model.entries:
            if not itemset <= reduced:
                continue
            ratio = model.ratio(itemset)
            if best_ratio is None or _prefer(
                ratio, itemset, best_ratio, best_itemset  # type: ignore[arg-type]
            ):
                best_ratio, best_itemset = ratio, itemset

    if best_ratio is None:
        return ScoreResult.zero()
    return ScoreResult(score=best_ratio, witness=best_itemset)


def rank_fleet(model: ItemsetRatioModel, snapshot: FleetSnapshot) -> Ranking:
    """Score every vehicle and order ascending (most roll-out-suitable first).

    The output is identical for any input ordering of the snapshot.
    """
    scored = [
        (vehicle_id, score_state(model, state))
        for vehicle_id, state in snapshot.vehicles.items()
    ]
    scored.sort(key=lambda pair: (pair[1].score, pair[0]))
    return Ranking(ordered=tuple(scored), as_of=snapshot.as_of)


def select_top_n(ranking: Ranking, n: int) -> list[str]:
    """First n vehicle ids of the ranking; clamps silently when n exceeds it."""
    if n < 0:
        raise ValidationError("n must be non-negative")
    return [vehicle_id for vehicle_id, _ in ranking.ordered[:n]]


def snapshot_from_log(log: TransactionLog, as_of: date) -> FleetSnapshot:
    """Defect states of every vehicle observed on the given day."""
    vehicles = {
        row.vehicle_id: row.state for row in log if row.timestamp == as_of
    }
    return FleetSnapshot(as_of=as_of, vehicles=vehicles)


def load_snapshot(
    source: Union[str, Path, IO[str]], as_of: date | None = None
) -> FleetSnapshot:
    """Read a fleet snapshot CSV: vehicle_id,defect_state (one row per vehicle)."""
    handle, owned = (
        (open(source, "r", encoding="utf-8", newline=""), True)
        if isinstance(source, (str, Path))
        else (source, False)
    )
    try:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header is None or tuple(
            h.strip().lower() for h in header
        ) != SNAPSHOT_CSV_HEADER:
            raise ValidationError(
                "expected CSV header " + ",".join(SNAPSHOT_CSV_HEADER)
            )
        vehicles: dict[str, DefectState] = {}
        for lineno, record in enumerate(reader, start=2):
            if not record or (len(record) == 1 and not record[0].strip()):
                continue
            if len(record) != 2:
                raise ValidationError(
                    f"line {lineno}: expected 2 fields, got {len(record)}"
                )
            vehicle_id, state_text = (field.strip() for field in record)
            if not vehicle_id:
                raise ValidationError(f"line {lineno}: empty vehicle_id")
            if vehicle_id in vehicles:
                raise ValidationError(
                    f"line {lineno}: duplicate vehicle {vehicle_id}"
                )
            try:
                vehicles[vehicle_id] = parse_state(state_text)
            except ValidationError as exc:
                raise ValidationError(f"line {lineno}: {exc}") from None
    finally:
        if owned:
            handle.close()
    return FleetSnapshot(as_of=as_of, vehicles=vehicles)


def write_ranking_csv(ranking: Ranking, sink: Union[str, Path, IO[str]]) -> None:
    handle, owned = (
        (open(sink, "w", encoding="utf-8", newline=""), True)
        if isinstance(sink, (str, Path))
        else (sink, False)
    )
    try:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(RANKING_CSV_HEADER)
        for position, (vehicle_id, result) in enumerate(ranking.ordered, start=1):
            writer.writerow(
                (
                    position,
                    vehicle_id,
                    result.score.numerator,
                    result.score.denominator,
                    result.score.display(),
                    format_state(result.witness) if result.witness else "",
                )
            )
    finally:
        if owned:
            handle.close()
