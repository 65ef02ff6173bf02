from __future__ import annotations

from pathlib import Path

import pytest

from rolloutaid import load_transactions

DATA_DIR = Path(__file__).parent / "data"

# The 8-row, two-vehicle sample log used across the suite. Its labeled
# multisets are known by hand:
#   remains-available: {d1,d2,d3}, {d1,d2}, {d6,d7}
#   becomes-down:      {d1,d2,d3,d4}, {d6,d7,d8}
SAMPLE_LOG_PATH = DATA_DIR / "two_fleet_sample.csv"


def fs(*items: str) -> frozenset[str]:
    return frozenset(items)


@pytest.fixture(scope="session")
def sample_log():
    return load_transactions(SAMPLE_LOG_PATH)


# Labeled multisets including the extra stayed-available day for the second
# vehicle (a five-member available multiset); used where the ratio fixtures
# need support({d6,d7}) == 2 on the available side.
EXTENDED_AVAILABLE = (
    fs("d1", "d2", "d3"),
    fs("d1", "d2"),
    fs("d1", "d2"),
    fs("d6", "d7"),
    fs("d6", "d7"),
)
EXTENDED_DOWN = (
    fs("d1", "d2", "d3", "d4"),
    fs("d6", "d7", "d8"),
)
