"""Frequent itemset mining over down-transition states, plus the ratio model.

The miner enumerates every frequent itemset (not just closed or maximal
ones) so the result is downward closed: any subset of a stored itemset is
stored too, with support at least as large. The scorer's dictionary lookups
rely on that property.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from datetime import date
from functools import cached_property
from itertools import combinations
from typing import Iterable, Mapping, Sequence

from .core import DefectState, Ratio, TransactionLog
from .errors import ValidationError
from .preprocess import PreprocessConfig, preprocess

# Mined itemset -> number of down-transition states containing it.
FrequentItemsets = dict[DefectState, int]


@dataclass(frozen=True)
class MinerConfig:
    min_support: int = 1
    max_itemset_size: int | None = None
    laplace: bool = False  # +1/+1 smoothing of the down/available ratio

    def __post_init__(self) -> None:
        if self.min_support < 1:
            raise ValidationError("min_support must be at least 1")
        if self.max_itemset_size is not None and self.max_itemset_size < 1:
            raise ValidationError("max_itemset_size must be at least 1")


def support(itemset: DefectState, states: Iterable[DefectState]) -> int:
    """Number of members (counted with multiplicity) containing the itemset."""
    count = 0
    for member in states:
        if itemset <= member:
            count += 1
    return count


class _FPNode:
    __slots__ = ("item", "count", "parent", "children", "link")

    def __init__(self, item: str | None, parent: "_FPNode | None") -> None:
        self.item = item
        self.count = 0
        self.parent = parent
        self.children: dict[str, _FPNode] = {}
        self.link: _FPNode | None = None


def _insert_path(
    root: _FPNode, header: dict[str, _FPNode], items: Sequence[str], mult: int
) -> None:
    node = root
    for item in items:
        child = node.children.get(item)
        if child is None:
            child = _FPNode(item, node)
            node.children[item] = child
            child.link = header.get(item)
            header[item] = child
        child.count += mult
        node = child


def _mine_tree(
    weighted: Iterable[tuple[Iterable[str], int]],
    min_support: int,
    suffix: DefectState,
    max_size: int | None,
    out: FrequentItemsets,
) -> None:
    """One level of pattern growth: count, build the conditional tree, recurse."""
    item_counts: Counter[str] = Counter()
    for items, mult in weighted:
        for item in items:
            item_counts[item] += mult
    frequent = {i: c for i, c in item_counts.items() if c >= min_support}
    if not frequent:
        return

    # Fixed item order (frequency desc, then name) keeps the tree shape and
    # hence the recursion deterministic for a given multiset of inputs.
    order = sorted(frequent, key=lambda i: (-frequent[i], i))
    rank = {item: pos for pos, item in enumerate(order)}
    root = _FPNode(None, None)
    header: dict[str, _FPNode] = {}
    for items, mult in weighted:
        path = sorted((i for i in items if i in frequent), key=rank.__getitem__)
        if path:
            _insert_path(root, header, path, mult)

    for item in reversed(order):
        grown = suffix | frozenset((item,))
        out[grown] = frequent[item]
        if max_size is not None and len(grown) >= max_size:
            continue
        base: list[tuple[list[str], int]] = []
        node = header.get(item)
        while node is not None:
            if node.count:
                path: list[str] = []
                parent = node.parent
                while parent is not None and parent.item is not None:
                    path.append(parent.item)
                    parent = parent.parent
                if path:
                    base.append((path, node.count))
            node = node.link
        if base:
            _mine_tree(base, min_support, grown, max_size, out)


def mine_frequent_itemsets(
    states: Iterable[DefectState], cfg: MinerConfig
) -> FrequentItemsets:
    """All non-empty itemsets contained in at least cfg.min_support members.

    The result (itemsets and exact supports) does not depend on the order of
    the input multiset.
    """
    transactions: Counter[DefectState] = Counter()
    for state in states:
        transactions[state] += 1
    out: FrequentItemsets = {}
    _mine_tree(
        [(state, mult) for state, mult in transactions.items()],
        cfg.min_support,
        frozenset(),
        cfg.max_itemset_size,
        out,
    )
    return out


def count_supports(
    itemsets: Iterable[DefectState], states: Iterable[DefectState]
) -> dict[DefectState, int]:
    """Supports of many itemsets against one multiset in a single pass.

    Per distinct member, either enumerate its (reduced) subsets or scan the
    itemset list, whichever is cheaper; both routes count exactly.
    """
    keys = {k: 0 for k in itemsets}
    if not keys:
        return keys
    universe: set[str] = set()
    for key in keys:
        universe.update(key)
    grouped: Counter[DefectState] = Counter()
    for state in states:
        grouped[state] += 1
    n_keys = len(keys)
    for state, mult in grouped.items():
        reduced = state & universe
        if not reduced:
            continue
        if 2 ** len(reduced) <= n_keys:
            pool = sorted(reduced)
            for size in range(1, len(pool) + 1):
                for combo in combinations(pool, size):
                    key = frozenset(combo)
                    if key in keys:
                        keys[key] += mult
        else:
            for key in keys:
                if key <= reduced:
                    keys[key] += mult
    return keys


@dataclass(frozen=True)
class ItemsetSupports:
    """Raw support pair of one itemset: down-transition and stayed-available counts."""

    down: int
    available: int


@dataclass(frozen=True)
class ModelProvenance:
    train_start: date | None
    train_end: date | None
    n_observations: int
    n_remains_available: int
    n_becomes_down: int
    log_sha256: str

    @classmethod
    def empty(cls) -> "ModelProvenance":
        return cls(None, None, 0, 0, 0, "")


@dataclass(frozen=True)
class ItemsetRatioModel:
    """Mined itemsets with their raw support pairs and the config they came from.

    Treated as immutable once built; safe to share between concurrent readers.
    Ratios are derived from the raw pairs on demand so exact ordering survives
    persistence round-trips.
    """

    entries: Mapping[DefectState, ItemsetSupports]
    down_threshold: float
    min_support: int
    laplace: bool
    provenance: ModelProvenance

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def is_empty(self) -> bool:
        return not self.entries

    @cached_property
    def universe(self) -> frozenset[str]:
        """Union of all mined itemsets; defects outside it never affect scores."""
        items: set[str] = set()
        for key in self.entries:
            items.update(key)
        return frozenset(items)

    def ratio(self, itemset: DefectState) -> Ratio:
        """Down-support over available-support for one mined itemset."""
        pair = self.entries[itemset]
        if self.laplace:
            return Ratio(pair.down + 1, pair.available + 1)
        return Ratio(pair.down, pair.available)

    def ratios(self) -> dict[DefectState, Ratio]:
        return {itemset: self.ratio(itemset) for itemset in self.entries}


def build_ratio_model(
    itemsets: FrequentItemsets,
    remains_available: Sequence[DefectState],
    becomes_down: Sequence[DefectState],
    miner_cfg: MinerConfig,
    *,
    down_threshold: float = 0.85,
    provenance: ModelProvenance | None = None,
) -> ItemsetRatioModel:
    """Attach support pairs to mined itemsets.

    Down-side supports come from the miner; available-side supports are
    counted directly against the stayed-available multiset. An itemset absent
    from that multiset keeps a zero denominator, which orders above every
    finite ratio rather than being smoothed away (unless laplace mode is on).
    """
    avail_supports = count_supports(itemsets.keys(), remains_available)
    entries = {
        itemset: ItemsetSupports(down=down_support, available=avail_supports[itemset])
        for itemset, down_support in itemsets.items()
    }
    return ItemsetRatioModel(
        entries=entries,
        down_threshold=down_threshold,
        min_support=miner_cfg.min_support,
        laplace=miner_cfg.laplace,
        provenance=provenance if provenance is not None else ModelProvenance.empty(),
    )


def train(
    log: TransactionLog, pre_cfg: PreprocessConfig, miner_cfg: MinerConfig
) -> ItemsetRatioModel:
    """Full training pass: label the log, mine down-transition states, build ratios.

    An empty becomes-down multiset yields an empty (but valid) model whose
    scores are all zero.
    """
    dataset = preprocess(log, pre_cfg)
    remains_available = dataset.remains_available
    becomes_down = dataset.becomes_down
    itemsets = mine_frequent_itemsets(becomes_down, miner_cfg)
    window = log.date_range()
    provenance = ModelProvenance(
        train_start=window[0] if window else None,
        train_end=window[1] if window else None,
        n_observations=len(log),
        n_remains_available=len(remains_available),
        n_becomes_down=len(becomes_down),
        log_sha256=log.digest(),
    )
    return build_ratio_model(
        itemsets,
        remains_available,
        becomes_down,
        miner_cfg,
        down_threshold=pre_cfg.down_threshold,
        provenance=provenance,
    )
