import numpy as np
import pytest

from pseudolik.errors import CapacityError, DomainError
from pseudolik.support import (
    PartitionId,
    SubsetId,
    SupportSpec,
    enumerate_partitions,
    enumerate_subsets,
    restrict,
    restricted_index_map,
    state_array,
    state_at,
    state_index,
    state_indices,
)


def brute_force_partition_count(q):
    count = 0
    for left in range(1, 1 << q):
        for right in range(1, 1 << q):
            if left & right == 0:
                count += 1
    return count


class TestEnumeration:
    def test_subset_count_q1(self):
        assert [s.mask for s in enumerate_subsets(SupportSpec.binary(1))] == [1]

    @pytest.mark.parametrize("q", range(1, 11))
    def test_subset_count_matches_closed_form(self, q):
        subs = enumerate_subsets(SupportSpec.binary(q))
        assert len(subs) == (1 << q) - 1
        assert len({s.mask for s in subs}) == len(subs)
        assert all(s.mask > 0 for s in subs)

    def test_subset_order_ascending_bitmask(self):
        masks = [s.mask for s in enumerate_subsets(SupportSpec.binary(5))]
        assert masks == sorted(masks)

    @pytest.mark.parametrize("q", range(1, 11))
    def test_partition_count_closed_form_and_bruteforce(self, q):
        parts = enumerate_partitions(SupportSpec.binary(q))
        closed = 3**q - 2 ** (q + 1) + 1
        assert len(parts) == closed
        assert len(parts) == brute_force_partition_count(q)
        assert len({(p.left, p.right) for p in parts}) == len(parts)

    def test_partitions_q1_empty(self):
        assert enumerate_partitions(SupportSpec.binary(1)) == []

    def test_partitions_q2_hand_enumeration(self):
        parts = enumerate_partitions(SupportSpec.binary(2))
        assert [(p.left, p.right) for p in parts] == [(1, 2), (2, 1)]

    def test_partition_order_lexicographic(self):
        keys = [(p.left, p.right) for p in enumerate_partitions(SupportSpec.binary(4))]
        assert keys == sorted(keys)

    def test_enumeration_deterministic_serialization(self):
        spec = SupportSpec.binary(6)
        first = "\n".join(p.text() for p in enumerate_partitions(spec))
        second = "\n".join(p.text() for p in enumerate_partitions(spec))
        assert first == second

    def test_caps(self):
        with pytest.raises(CapacityError):
            enumerate_subsets(SupportSpec.binary(21))
        with pytest.raises(CapacityError):
            enumerate_partitions(SupportSpec.binary(13))
        assert len(enumerate_subsets(SupportSpec.binary(12), cap=12)) == 4095
        with pytest.raises(CapacityError):
            enumerate_subsets(SupportSpec.binary(12), cap=11)


class TestStateIndexing:
    def test_binary_origin_and_top(self):
        spec = SupportSpec.binary(3)
        assert state_index(spec, (0, 0, 0)) == 0
        assert state_index(spec, (1, 1, 1)) == 7

    def test_mixed_radix_count(self):
        spec = SupportSpec(((0, 1, 2), (0, 1)))
        assert spec.num_states == 6

    @pytest.mark.parametrize(
        "spec",
        [
            SupportSpec.binary(1),
            SupportSpec.binary(4),
            SupportSpec.binary(8),
            SupportSpec(((0, 1, 2), (0, 1), (5, 7, 9, 11))),
            SupportSpec(((-1, 0, 1), (-1, 1))),
            SupportSpec(((3, 1, 2),)),  # value order defines digit order
        ],
    )
    def test_round_trip_full_support(self, spec):
        for idx in range(spec.num_states):
            x = state_at(spec, idx)
            assert state_index(spec, x) == idx
        arr = state_array(spec)
        assert state_indices(spec, arr).tolist() == list(range(spec.num_states))

    def test_out_of_support_names_coordinate(self):
        spec = SupportSpec.binary(3)
        with pytest.raises(DomainError, match="coordinate 2"):
            state_index(spec, (0, 5, 0))
        with pytest.raises(DomainError, match="row 1"):
            state_indices(spec, np.array([[0, 0, 0], [0, 2, 0]]))

    def test_index_out_of_range(self):
        with pytest.raises(DomainError):
            state_at(SupportSpec.binary(2), 4)

    def test_restricted_index_map(self):
        spec = SupportSpec.binary(3)
        gidx = restricted_index_map(spec, SubsetId.from_coords([1, 3]))
        states = state_array(spec)
        sub = restrict(spec, SubsetId.from_coords([1, 3]))
        expected = [state_index(sub, (s[0], s[2])) for s in states]
        assert gidx.tolist() == expected


class TestSpecValidation:
    def test_empty_value_set(self):
        with pytest.raises(ValueError):
            SupportSpec(((0, 1), ()))

    def test_duplicate_values(self):
        with pytest.raises(ValueError):
            SupportSpec(((0, 0),))

    def test_no_coordinates(self):
        with pytest.raises(ValueError):
            SupportSpec(())

    def test_count_must_fit_u64(self):
        with pytest.raises(CapacityError):
            SupportSpec(tuple(((0, 1, 2, 3),) * 33))  # 4^33 > 2^64


class TestIdTextForms:
    def test_subset_text_round_trip(self):
        sub = SubsetId.from_coords([1, 3])
        assert sub.text() == "{1,3}"
        assert SubsetId.parse("{1,3}") == sub
        assert SubsetId.parse(" {2} ").coords() == (2,)

    def test_partition_text_round_trip(self):
        part = PartitionId.from_coords([1], [2, 3])
        assert part.text() == "{1}|{2,3}"
        assert PartitionId.parse("{1}|{2,3}") == part

    def test_parse_rejects_garbage(self):
        with pytest.raises(ValueError):
            SubsetId.parse("1,3")
        with pytest.raises(ValueError):
            SubsetId.parse("{}")
        with pytest.raises(ValueError):
            PartitionId.parse("{1}{2}")

    def test_subset_nonempty(self):
        with pytest.raises(ValueError):
            SubsetId(0)

    def test_partition_invariants(self):
        with pytest.raises(ValueError):
            PartitionId(0, 1)
        with pytest.raises(ValueError):
            PartitionId(3, 1)  # overlap

    def test_partitions_are_ordered_pairs(self):
        assert PartitionId(1, 2) != PartitionId(2, 1)
