from __future__ import annotations

from hypothesis import given, settings
from hypothesis import strategies as st

from rolloutaid import (
    FleetSnapshot,
    MinerConfig,
    Ratio,
    build_ratio_model,
    canonicalize_state,
    jaccard,
    mine_frequent_itemsets,
    rank_fleet,
    score_state,
    support,
)
from rolloutaid.persistence import model_from_json, model_to_json
from oracles import score_by_full_scan, score_by_intersection

ALPHABET = [f"d{i}" for i in range(1, 9)]

states = st.frozensets(st.sampled_from(ALPHABET), max_size=6)
multisets = st.lists(states, max_size=30)
ratios = st.tuples(st.integers(0, 50), st.integers(0, 50)).filter(
    lambda nd: nd != (0, 0)
).map(lambda nd: Ratio(*nd))


def trained_models():
    return st.tuples(
        st.lists(states.filter(bool), min_size=0, max_size=20),
        multisets,
        st.integers(1, 3),
    ).map(
        lambda args: build_ratio_model(
            mine_frequent_itemsets(args[0], MinerConfig(min_support=args[2])),
            args[1],
            args[0],
            MinerConfig(min_support=args[2]),
        )
    )


class TestStateProperties:
    @given(st.lists(st.sampled_from(ALPHABET), max_size=10))
    def test_canonicalize_idempotent(self, tokens):
        once = canonicalize_state(tokens)
        assert canonicalize_state(once) == once

    @given(states, states)
    def test_jaccard_symmetric_bounded(self, a, b):
        sim = jaccard(a, b)
        assert sim == jaccard(b, a)
        assert 0.0 <= sim <= 1.0
        assert (sim == 1.0) == (a == b)


class TestRatioProperties:
    @given(ratios, ratios)
    def test_total_order_trichotomy(self, a, b):
        assert (a < b) + (b < a) + (a == b) == 1

    @given(ratios, ratios, ratios)
    def test_transitivity(self, a, b, c):
        if a <= b <= c:
            assert a <= c

    @given(ratios, ratios)
    def test_consistent_with_floats_when_finite(self, a, b):
        if a.denominator > 0 and b.denominator > 0:
            assert (a < b) == (a.as_float() < b.as_float())

    @given(ratios, ratios)
    def test_equality_consistent_with_hash(self, a, b):
        if a == b:
            assert hash(a) == hash(b)


class TestMiningProperties:
    @settings(max_examples=60)
    @given(multisets, st.integers(1, 3))
    def test_downward_closure(self, members, k):
        mined = mine_frequent_itemsets(members, MinerConfig(min_support=k))
        for itemset, count in mined.items():
            assert count >= k
            for item in itemset:
                subset = itemset - {item}
                if subset:
                    assert subset in mined
                    assert mined[subset] >= count

    @settings(max_examples=60)
    @given(multisets, states, states)
    def test_support_antimonotone(self, members, a, b):
        small, large = (a, a | b)
        assert support(small, members) >= support(large, members)

    @settings(max_examples=60)
    @given(multisets, st.integers(1, 3))
    def test_mined_supports_are_exact(self, members, k):
        mined = mine_frequent_itemsets(members, MinerConfig(min_support=k))
        for itemset, count in mined.items():
            assert count == support(itemset, members)


class TestScoringProperties:
    @settings(max_examples=80)
    @given(trained_models(), states)
    def test_three_routes_agree(self, model, state):
        ours = score_state(model, state)
        assert ours == score_by_full_scan(model, state)
        assert ours == score_by_intersection(model, state)

    @settings(max_examples=80)
    @given(trained_models(), states, states)
    def test_score_monotone_under_growth(self, model, state, extra):
        assert (
            score_state(model, state).score
            <= score_state(model, state | extra).score
        )

    @settings(max_examples=40)
    @given(
        trained_models(),
        st.dictionaries(
            st.text(alphabet="abcdefgh", min_size=1, max_size=3), states, max_size=8
        ),
        st.randoms(use_true_random=False),
    )
    def test_ranking_permutation_invariant(self, model, vehicles, rng):
        baseline = rank_fleet(model, FleetSnapshot(as_of=None, vehicles=vehicles))
        items = list(vehicles.items())
        rng.shuffle(items)
        shuffled = rank_fleet(model, FleetSnapshot(as_of=None, vehicles=dict(items)))
        assert shuffled.ordered == baseline.ordered
        scores = [result.score for _, result in baseline.ordered]
        assert all(x <= y for x, y in zip(scores, scores[1:]))


class TestPersistenceProperties:
    @settings(max_examples=40)
    @given(trained_models(), states)
    def test_round_trip_preserves_scores(self, model, state):
        loaded = model_from_json(model_to_json(model))
        assert score_state(loaded, state) == score_state(model, state)

    @settings(max_examples=40)
    @given(trained_models())
    def test_round_trip_is_canonical(self, model):
        text = model_to_json(model)
        assert model_to_json(model_from_json(text)) == text
