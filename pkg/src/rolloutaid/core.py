"""Shared domain vocabulary: defects, defect states, observations, logs, ratios.

All types here are immutable values; they can be shared freely between
threads and reused as dict keys.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass
from datetime import date
from enum import Enum
from functools import total_ordering
from typing import Iterable, Iterator

from .errors import ValidationError

# A defect state is the set of unresolved defect ids on a vehicle on one day.
DefectState = frozenset[str]

EMPTY_STATE: DefectState = frozenset()

# Characters that would break the semicolon/comma-delimited external formats.
_FORBIDDEN_ID_CHARS = (",", ";", "\n", "\r")


def validate_defect_id(token: str) -> str:
    """Check a raw defect id token, returning it unchanged if acceptable."""
    if not token:
        raise ValidationError("empty defect id")
    for ch in _FORBIDDEN_ID_CHARS:
        if ch in token:
            raise ValidationError(
                f"defect id {token!r} contains forbidden character {ch!r}"
            )
    return token


def canonicalize_state(ids: Iterable[str]) -> DefectState:
    """Build a defect state from raw id tokens, validating each and dropping duplicates."""
    return frozenset(validate_defect_id(token) for token in ids)


def format_state(state: DefectState) -> str:
    """Canonical serialization: semicolon-joined ids in lexicographic order."""
    return ";".join(sorted(state))


def parse_state(text: str) -> DefectState:
    """Inverse of :func:`format_state`; an empty string is the healthy (empty) state.

    Whitespace around individual tokens is tolerated and stripped.
    """
    if not text.strip():
        return EMPTY_STATE
    return canonicalize_state(token.strip() for token in text.split(";"))


def state_sort_key(state: DefectState) -> str:
    """Stable ordering key for defect states (their canonical serialization)."""
    return format_state(state)


def jaccard(a: DefectState, b: DefectState) -> float:
    """Set similarity |a∩b| / |a∪b| in [0, 1].

    Two empty states are identical, so their similarity is 1.
    """
    if not a and not b:
        return 1.0
    return len(a & b) / len(a | b)


class Status(str, Enum):
    """Supervisor's daily verdict: rolled out (Available) or held back (Down)."""

    AVAILABLE = "Available"
    DOWN = "Down"

    @classmethod
    def parse(cls, token: str) -> "Status":
        normalized = token.strip().lower()
        if normalized == "available":
            return cls.AVAILABLE
        if normalized == "down":
            return cls.DOWN
        raise ValidationError(f"unknown status token {token!r}")


@dataclass(frozen=True)
class Observation:
    """One vehicle-day record: defect state plus the supervisor's status call."""

    vehicle_id: str
    timestamp: date
    state: DefectState
    status: Status


@dataclass(frozen=True)
class TransactionLog:
    """Time-ordered per-vehicle observations.

    Rows are sorted by (vehicle_id, timestamp) and no two rows share the
    same key; build instances through :meth:`from_rows`, which enforces both.
    """

    rows: tuple[Observation, ...]

    @classmethod
    def from_rows(cls, rows: Iterable[Observation]) -> "TransactionLog":
        ordered = sorted(rows, key=lambda r: (r.vehicle_id, r.timestamp))
        previous: Observation | None = None
        for row in ordered:
            if (
                previous is not None
                and previous.vehicle_id == row.vehicle_id
                and previous.timestamp == row.timestamp
            ):
                raise ValidationError(
                    f"duplicate observation for vehicle {row.vehicle_id} "
                    f"on {row.timestamp.isoformat()}"
                )
            previous = row
        return cls(rows=tuple(ordered))

    def __len__(self) -> int:
        return len(self.rows)

    def __iter__(self) -> Iterator[Observation]:
        return iter(self.rows)

    def date_range(self) -> tuple[date, date] | None:
        """Earliest and latest observation dates, or None for an empty log."""
        if not self.rows:
            return None
        dates = [row.timestamp for row in self.rows]
        return min(dates), max(dates)

    def digest(self) -> str:
        """SHA-256 over the canonical row serialization; used as provenance."""
        h = hashlib.sha256()
        for row in self.rows:
            line = (
                f"{row.vehicle_id},{row.timestamp.isoformat()},"
                f"{format_state(row.state)},{row.status.value}\n"
            )
            h.update(line.encode("utf-8"))
        return h.hexdigest()


@total_ordering
@dataclass(frozen=True, eq=False)
class Ratio:
    """Exact non-negative rational stored as the raw integer pair it came from.

    Comparison is by value (cross-multiplication), so Ratio(1, 2) == Ratio(2, 4).
    A zero denominator with a positive numerator means "infinite" and compares
    above every finite ratio; all infinite ratios compare equal. 0/0 is
    rejected at construction.
    """

    numerator: int
    denominator: int

    def __post_init__(self) -> None:
        if self.numerator < 0 or self.denominator < 0:
            raise ValidationError("ratio parts must be non-negative counts")
        if self.numerator == 0 and self.denominator == 0:
            raise ValidationError("0/0 ratio is undefined")

    @classmethod
    def zero(cls) -> "Ratio":
        return cls(0, 1)

    def _canonical(self) -> tuple[int, int]:
        if self.denominator == 0:
            return (1, 0)
        if self.numerator == 0:
            return (0, 1)
        g = math.gcd(self.numerator, self.denominator)
        return (self.numerator // g, self.denominator // g)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Ratio):
            return NotImplemented
        return self._canonical() == other._canonical()

    def __hash__(self) -> int:
        return hash(self._canonical())

    def __lt__(self, other: "Ratio") -> bool:
        if not isinstance(other, Ratio):
            return NotImplemented
        return self.numerator * other.denominator < other.numerator * self.denominator

    def __str__(self) -> str:
        return f"{self.numerator}/{self.denominator}"

    def is_infinite(self) -> bool:
        return self.denominator == 0

    def as_float(self) -> float:
        """Float projection for display only; never used for ordering."""
        if self.denominator == 0:
            return math.inf
        return self.numerator / self.denominator

    def display(self) -> str:
        if self.denominator == 0:
            return "inf"
        return repr(self.numerator / self.denominator)
