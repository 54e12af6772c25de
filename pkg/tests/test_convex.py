from fractions import Fraction

import pytest

from pbwforge.roots import build_cartan, positive_roots_up_to
from pbwforge.convex import (
    ConvexOrderSpec,
    AmbiguousOrder,
    NotWordTypeAtScale,
    BoundTooSmall,
    NoPairExists,
    InvalidTwoRowSpec,
    swapped_compare,
    LESS,
    EQUIVALENT,
    GREATER,
)

A1 = build_cartan("A", 1)
A2 = build_cartan("A", 2)


def order_a1_12():
    return ConvexOrderSpec(A1, [[1, 2]], validated_height=10)


def test_compare_examples():
    o = order_a1_12()
    # alpha_1 = (0,1) beats delta: 2*2 > 3*1
    assert o.compare((0, 1), (1, 1)) == GREATER
    assert o.compare((1, 1), (2, 2)) == EQUIVALENT
    assert o.compare((1, 0), (1, 1)) == LESS


def test_ambiguous_order_detected():
    # h = (1,1) collapses all roots onto delta's ray
    with pytest.raises(AmbiguousOrder):
        ConvexOrderSpec(A1, [[1, 1]], validated_height=4)


def test_two_row_validation():
    # second row must vanish on delta
    with pytest.raises(InvalidTwoRowSpec):
        ConvexOrderSpec(A1, [[1, 2], [0, 1]], validated_height=4)
    o = ConvexOrderSpec(A1, [[1, 2], [1, -1]], validated_height=8)
    assert o.compare((1, 0), (0, 1)) == LESS


def test_two_row_tworow_shape():
    # the classic two-row example: row1 tracks distance from the delta ray,
    # row2 separates the alpha_1 + n*delta family from its mirror
    o = ConvexOrderSpec(A1, [[0, 0], [-1, 1]], validated_height=0)
    # all ratios share first coordinate 0; families split by the second row
    assert o.compare((1, 0), (1, 1)) == LESS        # delta - alpha_1 side below delta
    assert o.compare((1, 1), (0, 1)) == LESS        # delta below the alpha_1 side
    assert o.compare((2, 1), (1, 0)) == GREATER     # ascending toward delta
    assert o.compare((1, 2), (0, 1)) == LESS


def test_first_n_roots():
    o = order_a1_12()
    assert [r.vector for r in o.first_n_roots(2, 8)] == [(1, 0), (2, 1)]
    assert [r.vector for r in o.first_n_roots(3, 8)] == [(1, 0), (2, 1), (3, 2)]
    assert o.first_n_roots(0, 8) == []
    with pytest.raises(BoundTooSmall):
        o.first_n_roots(9, 6)


def test_first_n_roots_unstable_for_tworow():
    # genuine two-row order on A_2 affine: below delta the order has shape
    # omega*2, so a segment reaching into the accumulating family is not a
    # true initial segment and must be flagged when the bound grows
    o = ConvexOrderSpec(A2, [[-1, 0, 1], [-1, 1, 0]], validated_height=6)
    with pytest.raises(NotWordTypeAtScale):
        o.first_n_roots(4, 4)
    # short segments stay inside the first omega block and are fine
    assert len(o.first_n_roots(2, 6)) == 2


def test_reduced_word_examples():
    o = order_a1_12()
    assert o.reduced_word_from_segment(1) == (0,)
    assert o.reduced_word_from_segment(2) == (0, 1)
    assert o.reduced_word_from_segment(3) == (0, 1, 0)


def test_reduced_word_roundtrip_long():
    o = order_a1_12()
    for n in range(1, 13):
        word = o.reduced_word_from_segment(n)
        inv = {tuple(v) for v in A1.inversion_set(word)}
        seg = {r.vector for r in o.first_n_roots(n, (n + 2) * 2)}
        assert inv == seg


def test_positive_system_below_delta():
    o = order_a1_12()
    assert o.positive_system_below_delta(8) == [(-1,)]
    o2 = ConvexOrderSpec(A1, [[2, 1]], validated_height=8)
    assert o2.positive_system_below_delta(8) == [(1,)]
    o3 = ConvexOrderSpec(A2, [[1, 4, 9]], validated_height=9)
    sys3 = o3.positive_system_below_delta(9)
    assert len(sys3) == 3


def test_adapted_coweights_a1():
    o = order_a1_12()
    (w,) = o.adapted_coweights()
    assert w.plus_lift == (0, 1)
    assert w.minus_lift == (1, 0)


def test_minimal_pair_examples():
    o = order_a1_12()
    beta, gamma = o.minimal_pair((1, 1))
    assert (beta.vector, gamma.vector) == ((0, 1), (1, 0))
    beta2, gamma2 = o.minimal_pair((2, 1))
    assert beta2.vector == (1, 1) and beta2.is_imaginary()
    assert gamma2.vector == (1, 0)
    with pytest.raises(NoPairExists):
        o.minimal_pair((1, 0))


def test_minimal_pair_definition_scan():
    # every non-simple real root within the bound admits a pair satisfying
    # the definitional scan: nothing strictly between
    o = order_a1_12()
    for r in positive_roots_up_to(A1, 7):
        if r.height == 1 or r.is_imaginary():
            continue
        beta, gamma = o.minimal_pair(r.vector)
        assert tuple(a + b for a, b in zip(beta.vector, gamma.vector)) == r.vector
        assert o.compare(gamma, beta) == LESS


def test_verify_convexity_clean():
    o = order_a1_12()
    rep = o.verify_convexity(8, seed=3, cone_samples=40)
    assert rep.ok
    assert rep.pairs_checked > 0


def test_verify_convexity_scrambled():
    o = order_a1_12()
    # swapping two adjacent roots breaks clause (a)
    bad = swapped_compare(o, (1, 0), (2, 1))
    rep = o.verify_convexity(6, seed=3, cone_samples=0, compare_override=bad)
    assert rep.clause_a_violations


def test_cone_separation_simple_pair():
    o = order_a1_12()
    rep = o.verify_convexity(3, seed=1, cone_samples=30)
    assert not rep.cone_violations


def test_a2_order_convex():
    o = ConvexOrderSpec(A2, [[1, 4, 9]], validated_height=9)
    rep = o.verify_convexity(6, seed=5, cone_samples=30)
    assert rep.ok
