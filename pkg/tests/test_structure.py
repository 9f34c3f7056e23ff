import json
from collections import Counter

import numpy as np
import pytest

from psidecomp import (
    IndexSet,
    PartialJointStructure,
    canonical_display,
    default_ordering,
    dissimilarity,
    model_preset,
    ordering_from_lists,
    structure_from_json,
    structure_to_json,
    structures_equal,
    to_binary_multiset,
)


def make_structure(K, ranks_by_members):
    entries = tuple(
        (s, ranks_by_members.get(s.members, 0)) for s in default_ordering(K)
    )
    return PartialJointStructure(entries, K)


class TestIndexSet:
    def test_sorted_and_deduplicated(self):
        s = IndexSet((3, 1, 3, 2))
        assert s.members == (1, 2, 3)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            IndexSet(())

    def test_label(self):
        assert IndexSet.of(1, 3).label() == "1|3"


class TestDefaultOrdering:
    def test_k2(self):
        sets = [s.members for s in default_ordering(2)]
        assert sets == [(1, 2), (1,), (2,)]

    def test_k3_lexicographic_within_size(self):
        sets = [s.members for s in default_ordering(3)]
        assert sets == [(1, 2, 3), (1, 2), (1, 3), (2, 3), (1,), (2,), (3,)]

    def test_k1(self):
        assert [s.members for s in default_ordering(1)] == [(1,)]

    @pytest.mark.parametrize("K", [1, 2, 3, 4, 5, 6])
    def test_every_subset_exactly_once(self, K):
        ordering = default_ordering(K)
        assert len(ordering) == 2**K - 1
        assert len({s.members for s in ordering}) == 2**K - 1
        sizes = [len(s) for s in ordering]
        assert sizes == sorted(sizes, reverse=True)

    def test_out_of_range(self):
        with pytest.raises(ValueError):
            default_ordering(0)
        with pytest.raises(ValueError):
            default_ordering(17)

    def test_custom_ordering_validation(self):
        ordering_from_lists([[1, 2], [2], [1]], 2)  # valid permutation
        with pytest.raises(ValueError):
            ordering_from_lists([[1], [2], [1, 2]], 2)  # sizes increase
        with pytest.raises(ValueError):
            ordering_from_lists([[1, 2], [1], [1]], 2)  # duplicate


class TestBinaryMultiset:
    def test_worked_two_block_example(self):
        s = make_structure(2, {(1, 2): 2, (1,): 1})
        assert to_binary_multiset(s) == Counter({(1, 1): 2, (1, 0): 1})

    def test_all_zero_ranks(self):
        s = make_structure(3, {})
        assert to_binary_multiset(s) == Counter()

    def test_benchmark_model_five_pattern(self):
        truth = model_preset(5).structure
        ms = to_binary_multiset(truth)
        assert sum(ms.values()) == 8
        sizes = Counter(sum(v) for v in ms.elements())
        assert sizes == Counter({3: 2, 2: 6})

    def test_canonical_display_feeds_same_multiset(self):
        s = make_structure(3, {(1, 2): 1, (3,): 2})
        kept = PartialJointStructure(canonical_display(s), 3)
        assert to_binary_multiset(kept) == to_binary_multiset(s)


class TestDissimilarity:
    def test_worked_value_six(self):
        a = make_structure(3, {(1, 2, 3): 1, (1, 2): 1})
        b = make_structure(3, {(1, 2, 3): 2, (2, 3): 1})
        assert dissimilarity(a, b) == 6
        assert dissimilarity(b, a) == 6

    def test_identical_structures(self):
        a = make_structure(3, {(1, 2): 2, (3,): 1})
        assert dissimilarity(a, a) == 0

    def test_hand_evaluated_two_sided_pair(self):
        a = make_structure(3, {(1, 2, 3): 1})
        b = make_structure(3, {(1,): 1})
        assert dissimilarity(a, b) == 8

    def test_empty_side_counts_ones(self):
        a = make_structure(3, {(1, 2, 3): 1, (1,): 1})
        b = make_structure(3, {(1,): 1})
        # survivor (1,1,1) faces an empty other side: 3^2
        assert dissimilarity(a, b) == 9

    def test_symmetry_and_identity_on_random_pairs(self):
        rng = np.random.default_rng(5)
        for _ in range(300):
            K = int(rng.integers(2, 6))
            ordering = default_ordering(K)
            ra = {s.members: int(rng.integers(0, 3)) for s in ordering}
            rb = {s.members: int(rng.integers(0, 3)) for s in ordering}
            a, b = make_structure(K, ra), make_structure(K, rb)
            assert dissimilarity(a, b) == dissimilarity(b, a)
            assert dissimilarity(a, a) == 0
            if dissimilarity(a, b) == 0:
                assert structures_equal(a, b)

    def test_mismatched_K_rejected(self):
        with pytest.raises(ValueError):
            dissimilarity(make_structure(2, {}), make_structure(3, {}))


class TestCanonicalDisplayAndJson:
    def test_zero_ranks_dropped_order_kept(self):
        s = make_structure(3, {(1, 2): 1, (2,): 2})
        kept = canonical_display(s)
        assert [(e[0].members, e[1]) for e in kept] == [((1, 2), 1), ((2,), 2)]

    def test_model_three_has_three_rank_two_entries(self):
        kept = canonical_display(model_preset(3).structure)
        assert [(e[0].members, e[1]) for e in kept] == [
            ((1, 2), 2), ((1, 3), 2), ((2, 3), 2)]

    def test_empty_structure(self):
        assert canonical_display(make_structure(2, {})) == ()

    def test_json_round_trip_and_key_order(self):
        s = make_structure(3, {(1, 2, 3): 2, (3,): 1})
        text = structure_to_json(s)
        payload = json.loads(text)
        assert list(payload.keys()) == ["K", "entries"]
        assert payload["entries"][0] == {"blocks": [1, 2, 3], "rank": 2}
        back = structure_from_json(text)
        assert structures_equal(back, s)

    def test_negative_rank_rejected(self):
        with pytest.raises(ValueError):
            PartialJointStructure(((IndexSet.of(1), -1),), 2)
        with pytest.raises(ValueError):
            structure_from_json('{"K": 2, "entries": [{"blocks": [3], "rank": 1}]}')

    def test_block_rank_totals(self):
        s = make_structure(3, {(1, 2, 3): 2, (1, 2): 1, (3,): 4})
        assert s.block_rank(1) == 3
        assert s.block_rank(2) == 3
        assert s.block_rank(3) == 6
        assert s.total_rank() == 7
