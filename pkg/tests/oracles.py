"""Independent reference implementations the fast paths are checked against.

Everything here is deliberately naive: exhaustive enumeration and full
scans, no shared code with the implementations under test.
"""

from __future__ import annotations

from itertools import combinations
from typing import Iterable, Sequence

from rolloutaid import DefectState, ItemsetRatioModel, Ratio, ScoreResult
from rolloutaid.core import format_state


def brute_force_frequent_itemsets(
    states: Sequence[DefectState], min_support: int, max_size: int | None = None
) -> dict[DefectState, int]:
    """Enumerate every non-empty subset of the observed universe and count
    containment directly."""
    universe = sorted(set().union(*states)) if states else []
    result: dict[DefectState, int] = {}
    limit = len(universe) if max_size is None else min(max_size, len(universe))
    for size in range(1, limit + 1):
        for combo in combinations(universe, size):
            candidate = frozenset(combo)
            count = sum(1 for member in states if candidate <= member)
            if count >= min_support:
                result[candidate] = count
    return result


def _pick_best(
    candidates: Iterable[tuple[DefectState, Ratio]]
) -> ScoreResult:
    best_itemset: DefectState | None = None
    best_ratio: Ratio | None = None
    for itemset, ratio in candidates:
        if best_ratio is None:
            best_itemset, best_ratio = itemset, ratio
            continue
        if ratio != best_ratio:
            take = ratio > best_ratio
        elif len(itemset) != len(best_itemset):
            take = len(itemset) > len(best_itemset)
        else:
            take = format_state(itemset) < format_state(best_itemset)
        if take:
            best_itemset, best_ratio = itemset, ratio
    if best_ratio is None:
        return ScoreResult.zero()
    return ScoreResult(score=best_ratio, witness=best_itemset)


def score_by_full_scan(model: ItemsetRatioModel, state: DefectState) -> ScoreResult:
    """Direct scan of every model itemset, keeping the subsets of the state."""
    return _pick_best(
        (itemset, model.ratio(itemset))
        for itemset in model.entries
        if itemset <= state
    )


def score_by_intersection(model: ItemsetRatioModel, state: DefectState) -> ScoreResult:
    """Intersect the state with every model itemset and look the result up;
    intersections that are not stored itemsets (including the empty set)
    contribute nothing."""
    seen: set[DefectState] = set()
    candidates: list[tuple[DefectState, Ratio]] = []
    for itemset in model.entries:
        intersection = itemset & state
        if not intersection or intersection in seen:
            continue
        seen.add(intersection)
        if intersection in model.entries:
            candidates.append((intersection, model.ratio(intersection)))
    return _pick_best(candidates)
