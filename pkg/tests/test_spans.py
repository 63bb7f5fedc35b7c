"""Character-span primitive behaviour."""

import pytest
from hypothesis import given
from hypothesis import strategies as st

from spanqa.spans import (
    CharSpan,
    merge_overlapping,
    overlap_length,
    overlap_with_union,
    total_length,
    validate_disjoint_sorted,
)


def span_lists(max_side: int = 200):
    return st.lists(
        st.tuples(st.integers(0, max_side), st.integers(1, 40)).map(
            lambda p: CharSpan(p[0], p[0] + p[1])
        ),
        max_size=10,
    )


class TestCharSpan:
    def test_basic_accessors(self):
        s = CharSpan(3, 8)
        assert (s.start, s.end) == (3, 8)
        assert len(s) == 5
        assert s.slice("abcdefghij") == "defgh"

    def test_rejects_empty_and_negative(self):
        with pytest.raises(ValueError):
            CharSpan(5, 5)
        with pytest.raises(ValueError):
            CharSpan(-1, 4)
        with pytest.raises(ValueError):
            CharSpan(7, 3)

    def test_ordering_is_positional(self):
        assert CharSpan(1, 9) < CharSpan(2, 3)
        assert sorted([CharSpan(4, 6), CharSpan(1, 2)])[0] == CharSpan(1, 2)

    def test_validate_against_bounds(self):
        CharSpan(0, 4).validate_against("abcd", label="span")
        with pytest.raises(ValueError, match="span"):
            CharSpan(2, 9).validate_against("abcd", label="span")


class TestOverlap:
    def test_overlap_length_cases(self):
        assert overlap_length(CharSpan(0, 5), CharSpan(5, 9)) == 0
        assert overlap_length(CharSpan(0, 5), CharSpan(3, 9)) == 2
        assert overlap_length(CharSpan(2, 4), CharSpan(0, 10)) == 2

    def test_overlap_with_union_counts_each_char_once(self):
        span = CharSpan(0, 10)
        others = [CharSpan(0, 4), CharSpan(2, 6)]  # union covers [0, 6)
        assert overlap_with_union(span, others) == 6

    def test_total_length(self):
        assert total_length([CharSpan(0, 3), CharSpan(5, 6)]) == 4
        assert total_length([]) == 0


class TestMergeOverlapping:
    def test_merges_touching_and_overlapping(self):
        merged = merge_overlapping([CharSpan(4, 8), CharSpan(0, 5), CharSpan(8, 9)])
        assert merged == [CharSpan(0, 9)]

    def test_keeps_gaps(self):
        merged = merge_overlapping([CharSpan(0, 2), CharSpan(5, 7)])
        assert merged == [CharSpan(0, 2), CharSpan(5, 7)]

    def test_empty_input(self):
        assert merge_overlapping([]) == []

    @given(span_lists())
    def test_output_is_sorted_disjoint_and_coverage_preserving(self, spans):
        merged = merge_overlapping(spans)
        validate_disjoint_sorted(merged, label="merged")
        want = {i for s in spans for i in range(s.start, s.end)}
        got = {i for s in merged for i in range(s.start, s.end)}
        assert want == got


class TestValidateDisjointSorted:
    def test_accepts_sorted_disjoint(self):
        validate_disjoint_sorted([CharSpan(0, 2), CharSpan(3, 5)], label="ok")

    def test_rejects_overlap(self):
        with pytest.raises(ValueError, match="bad"):
            validate_disjoint_sorted([CharSpan(0, 4), CharSpan(3, 5)], label="bad")

    def test_rejects_unsorted(self):
        with pytest.raises(ValueError):
            validate_disjoint_sorted([CharSpan(5, 7), CharSpan(0, 2)], label="unsorted")
