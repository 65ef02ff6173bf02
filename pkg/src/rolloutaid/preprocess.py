"""Turns a raw observation log into labeled roll-out transitions.

A transition is one adjacent pair of same-vehicle rows. Pairs where the
vehicle stayed available feed the "remains available" multiset; pairs where
an available vehicle was held back the next day with a failure-bound state
feed the "becomes down" multiset. Everything else is ignored.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from datetime import date
from enum import Enum
from pathlib import Path
from typing import IO, Iterable, Union

from .core import (
    EMPTY_STATE,
    DefectState,
    Observation,
    Status,
    TransactionLog,
    canonicalize_state,
    format_state,
)
from .errors import ValidationError

LOG_CSV_HEADER = ("vehicle_id", "timestamp", "defect_state", "status")
LABELED_CSV_HEADER = (
    "vehicle_id",
    "timestamp",
    "defect_state",
    "current_status",
    "next_status",
    "label",
)

# Any state the supervisor sometimes tolerates is not failure-bound. States
# with no appearances cannot occur, so the down-fraction is always defined.
BadStateSet = frozenset[DefectState]

TextSource = Union[str, Path, IO[str], IO[bytes]]


@dataclass(frozen=True)
class PreprocessConfig:
    """Knobs for labeling; down_threshold is the fraction of appearances a
    state must be marked Down for it to count as failure-bound."""

    down_threshold: float = 0.85

    def __post_init__(self) -> None:
        if not 0.0 < self.down_threshold <= 1.0:
            raise ValidationError("down_threshold must be in (0, 1]")


class TransitionLabel(str, Enum):
    REMAINS_AVAILABLE = "remains_available"
    BECOMES_DOWN = "becomes_down"


@dataclass(frozen=True)
class LabeledTransition:
    """One labeled day-to-day transition, carrying the state the vehicle
    was rolled out with (the earlier day's state)."""

    vehicle_id: str
    timestamp: date
    state: DefectState
    current_status: Status
    next_status: Status
    label: TransitionLabel


@dataclass(frozen=True)
class LabeledDataset:
    rows: tuple[LabeledTransition, ...]

    @property
    def remains_available(self) -> tuple[DefectState, ...]:
        """Multiset of states whose vehicles stayed available the next day."""
        return tuple(
            r.state for r in self.rows if r.label is TransitionLabel.REMAINS_AVAILABLE
        )

    @property
    def becomes_down(self) -> tuple[DefectState, ...]:
        """Multiset of states whose vehicles were held back the next day."""
        return tuple(
            r.state for r in self.rows if r.label is TransitionLabel.BECOMES_DOWN
        )


def _open_text(source: TextSource) -> tuple[IO[str], bool]:
    """Return a text handle and whether the caller owns closing it."""
    if isinstance(source, (str, Path)):
        return open(source, "r", encoding="utf-8", newline=""), True
    if isinstance(source, io.TextIOBase):
        return source, False
    read0 = source.read(0)
    if isinstance(read0, bytes):
        return io.TextIOWrapper(source, encoding="utf-8", newline=""), False
    return source, False


def _parse_state_field(text: str) -> DefectState:
    if not text.strip():
        return EMPTY_STATE
    return canonicalize_state(token.strip() for token in text.split(";"))


def load_transactions(source: TextSource) -> TransactionLog:
    """Parse an observation log CSV (see LOG_CSV_HEADER) into a sorted log.

    Raises ValidationError with the offending line number for unparseable
    dates, unknown status tokens, malformed defect ids, or duplicate
    (vehicle, date) rows.
    """
    handle, owned = _open_text(source)
    try:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header is None or tuple(h.strip().lower() for h in header) != LOG_CSV_HEADER:
            raise ValidationError(
                "expected CSV header " + ",".join(LOG_CSV_HEADER)
            )
        rows: list[Observation] = []
        seen: dict[tuple[str, date], int] = {}
        for lineno, record in enumerate(reader, start=2):
            if not record or (len(record) == 1 and not record[0].strip()):
                continue
            if len(record) != 4:
                raise ValidationError(
                    f"line {lineno}: expected 4 fields, got {len(record)}"
                )
            vehicle_id, ts_text, state_text, status_text = (
                field.strip() for field in record
            )
            if not vehicle_id:
                raise ValidationError(f"line {lineno}: empty vehicle_id")
            try:
                timestamp = date.fromisoformat(ts_text)
            except ValueError:
                raise ValidationError(
                    f"line {lineno}: unparseable date {ts_text!r}"
                ) from None
            try:
                state = _parse_state_field(state_text)
                status = Status.parse(status_text)
            except ValidationError as exc:
                raise ValidationError(f"line {lineno}: {exc}") from None
            key = (vehicle_id, timestamp)
            if key in seen:
                raise ValidationError(
                    f"line {lineno}: duplicate observation for vehicle "
                    f"{vehicle_id} on {ts_text} (first seen at line {seen[key]})"
                )
            seen[key] = lineno
            rows.append(Observation(vehicle_id, timestamp, state, status))
    finally:
        if owned:
            handle.close()
    return TransactionLog.from_rows(rows)


def write_transactions(log: TransactionLog, sink: Union[str, Path, IO[str]]) -> None:
    """Write a log in the same CSV schema load_transactions reads."""
    handle, owned = (
        (open(sink, "w", encoding="utf-8", newline=""), True)
        if isinstance(sink, (str, Path))
        else (sink, False)
    )
    try:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(LOG_CSV_HEADER)
        for row in log:
            writer.writerow(
                (
                    row.vehicle_id,
                    row.timestamp.isoformat(),
                    format_state(row.state),
                    row.status.value,
                )
            )
    finally:
        if owned:
            handle.close()


def compute_bad_states(log: TransactionLog, cfg: PreprocessConfig) -> BadStateSet:
    """States marked Down in at least cfg.down_threshold of their appearances.

    The denominator counts every appearance of the state in the log,
    Available and Down rows alike.
    """
    totals: dict[DefectState, int] = {}
    downs: dict[DefectState, int] = {}
    for row in log:
        totals[row.state] = totals.get(row.state, 0) + 1
        if row.status is Status.DOWN:
            downs[row.state] = downs.get(row.state, 0) + 1
    # Compare via division, not multiplication: both sides then round the
    # same way, so an exact threshold hit (17/20 vs 0.85) stays included.
    return frozenset(
        state
        for state, total in totals.items()
        if downs.get(state, 0) / total >= cfg.down_threshold
    )


def label_transitions(log: TransactionLog, bad: BadStateSet) -> LabeledDataset:
    """Label every adjacent same-vehicle row pair of the log.

    Available -> Available emits a remains-available row; Available -> Down
    emits a becomes-down row only when the Down-day state is failure-bound.
    Pairs starting from a Down day, pairs whose Down-day state is not
    failure-bound, and vehicle boundaries emit nothing. Calendar gaps between
    adjacent rows are ignored.
    """
    labeled: list[LabeledTransition] = []
    for current, nxt in zip(log.rows, log.rows[1:]):
        if current.vehicle_id != nxt.vehicle_id:
            continue
        if current.status is not Status.AVAILABLE:
            continue
        if nxt.status is Status.AVAILABLE:
            label = TransitionLabel.REMAINS_AVAILABLE
        elif nxt.state in bad:
            label = TransitionLabel.BECOMES_DOWN
        else:
            continue
        labeled.append(
            LabeledTransition(
                vehicle_id=current.vehicle_id,
                timestamp=current.timestamp,
                state=current.state,
                current_status=current.status,
                next_status=nxt.status,
                label=label,
            )
        )
    return LabeledDataset(rows=tuple(labeled))


def preprocess(log: TransactionLog, cfg: PreprocessConfig) -> LabeledDataset:
    """Convenience: compute failure-bound states, then label the log."""
    return label_transitions(log, compute_bad_states(log, cfg))


def write_labeled_csv(dataset: LabeledDataset, sink: Union[str, Path, IO[str]]) -> None:
    handle, owned = (
        (open(sink, "w", encoding="utf-8", newline=""), True)
        if isinstance(sink, (str, Path))
        else (sink, False)
    )
    try:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(LABELED_CSV_HEADER)
        for row in dataset.rows:
            writer.writerow(
                (
                    row.vehicle_id,
                    row.timestamp.isoformat(),
                    format_state(row.state),
                    row.current_status.value,
                    row.next_status.value,
                    row.label.value,
                )
            )
    finally:
        if owned:
            handle.close()
