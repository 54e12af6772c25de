from fractions import Fraction

import pytest

from pbwforge.roots import (
    build_cartan,
    positive_roots_up_to,
    chamber_coweights,
    roots_to_csv_rows,
    CartanDatum,
    InvalidRank,
    NotAFiniteRoot,
    NotReduced,
    NotAPositiveSystem,
    wt_add,
    wt_scale,
)


def kernel_oracle(matrix):
    # independent integer kernel: Fraction row reduction, primitive rescale
    n = len(matrix)
    rows = [[Fraction(x) for x in row] for row in matrix]
    # reduce
    piv = []
    r = 0
    for c in range(n):
        pr = next((i for i in range(r, n) if rows[i][c] != 0), None)
        if pr is None:
            continue
        rows[r], rows[pr] = rows[pr], rows[r]
        pv = rows[r][c]
        rows[r] = [x / pv for x in rows[r]]
        for i in range(n):
            if i != r and rows[i][c]:
                f = rows[i][c]
                rows[i] = [x - f * y for x, y in zip(rows[i], rows[r])]
        piv.append(c)
        r += 1
    free = [c for c in range(n) if c not in piv]
    assert len(free) == 1
    v = [Fraction(0)] * n
    v[free[0]] = 1
    for i, c in enumerate(piv):
        v[c] = -rows[i][free[0]]
    from math import gcd
    den = 1
    for x in v:
        den = den * x.denominator // gcd(den, x.denominator)
    ints = [int(x * den) for x in v]
    g = 0
    for x in ints:
        g = gcd(g, abs(x))
    ints = [x // g for x in ints]
    if sum(ints) < 0:
        ints = [-x for x in ints]
    return tuple(ints)


def test_a1_affine():
    c = build_cartan("A", 1)
    assert c.pairing == ((2, -2), (-2, 2))
    assert c.delta == (1, 1)
    assert c.affine_node == 0


def test_a2_affine():
    c = build_cartan("A", 2)
    assert c.delta == (1, 1, 1)
    offdiag = [c.pairing[i][j] for i in range(3) for j in range(3) if i != j]
    assert all(v == -1 for v in offdiag)


def test_d4_affine_delta_by_kernel_oracle():
    c = build_cartan("D", 4)
    assert c.delta == kernel_oracle(c.pairing)
    # center node has delta-coefficient 2, the four leaves 1
    assert sorted(c.delta) == [1, 1, 1, 1, 2]
    center = c.delta.index(2)
    assert sum(1 for j in range(5) if c.pairing[center][j] == -1) == 4


@pytest.mark.parametrize("rank,coxeter", [(6, 12), (7, 18), (8, 30)])
def test_e_series(rank, coxeter):
    c = build_cartan("E", rank)
    assert c.delta == kernel_oracle(c.pairing)
    assert sum(c.delta) == coxeter
    assert all(x > 0 for x in c.delta)
    assert c.delta[c.affine_node] == 1
    assert all(sum(c.pairing[i][j] * c.delta[j] for j in range(c.n)) == 0
               for i in range(c.n))


def test_invalid_ranks():
    with pytest.raises(InvalidRank):
        build_cartan("A", 0)
    with pytest.raises(InvalidRank):
        build_cartan("D", 3)
    with pytest.raises(InvalidRank):
        build_cartan("E", 9)
    with pytest.raises(InvalidRank):
        build_cartan("F", 4)


def test_positive_roots_a1():
    c = build_cartan("A", 1)
    roots = positive_roots_up_to(c, 3)
    assert {r.vector for r in roots} == {(1, 0), (0, 1), (1, 1), (2, 1), (1, 2)}
    by_vec = {r.vector: r for r in roots}
    assert by_vec[(1, 1)].is_imaginary() and by_vec[(1, 1)].n == 1
    assert by_vec[(2, 1)].is_real()
    roots4 = positive_roots_up_to(c, 4)
    r22 = next(r for r in roots4 if r.vector == (2, 2))
    assert r22.is_imaginary() and r22.mult == 1


def test_positive_roots_a1_general_shape():
    # the real roots of A_1 affine are exactly (n, n-1) and (n-1, n)
    c = build_cartan("A", 1)
    roots = positive_roots_up_to(c, 13)
    real = {r.vector for r in roots if r.is_real()}
    expect = set()
    for n in range(1, 8):
        if 2 * n - 1 <= 13:
            expect.add((n, n - 1))
            expect.add((n - 1, n))
    assert real == expect
    imag = {r.vector for r in roots if r.is_imaginary()}
    assert imag == {(n, n) for n in range(1, 7)}


def test_positive_roots_a2_brute_force_oracle():
    c = build_cartan("A", 2)
    roots = positive_roots_up_to(c, 2)
    # oracle: scan all vectors of height <= 2 and check norm independently
    def norm(v):
        return sum(v[i] * c.pairing[i][j] * v[j] for i in range(3) for j in range(3))
    expected = set()
    for a in range(3):
        for b in range(3):
            for d in range(3):
                v = (a, b, d)
                if 1 <= sum(v) <= 2 and norm(v) == 2:
                    expected.add(v)
    assert {r.vector for r in roots} == expected
    assert len([r for r in roots if r.height == 2]) == 3


def test_root_invariants():
    for tag, rank, H in (("A", 1, 8), ("A", 2, 6)):
        c = build_cartan(tag, rank)
        for r in positive_roots_up_to(c, H):
            if r.is_real():
                assert c.norm(r.vector) == 2
            else:
                assert all(c.dot(r.vector, c.simple_root(i)) == 0 for i in range(c.n))


def test_project():
    c = build_cartan("A", 1)
    assert c.project((1, 1)) == (0,)
    assert c.project((2, 1)) == (-1,)
    assert c.project((1, 2)) == (1,)


def test_lift():
    c = build_cartan("A", 1)
    assert c.lift((1,)) == (0, 1)
    assert c.lift((-1,)) == (1, 0)
    c2 = build_cartan("A", 2)
    assert c2.lift((-1, -1)) == (1, 0, 0)
    with pytest.raises(NotAFiniteRoot):
        c.lift((2,))


def test_reflect():
    c = build_cartan("A", 1)
    assert c.reflect(0, (0, 1)) == (2, 1)
    assert c.reflect(1, (0, 1)) == (0, -1)
    assert c.reflect(0, c.delta) == c.delta
    # involution and root-set preservation
    roots = [r.vector for r in positive_roots_up_to(c, 6)]
    rootset = set(roots) | {tuple(-x for x in v) for v in roots}
    for i in range(c.n):
        for v in roots:
            w = c.reflect(i, v)
            assert c.reflect(i, w) == v
            assert w in rootset or c.norm(w) == 2 or w == v


def test_inversion_set():
    c = build_cartan("A", 1)
    assert c.inversion_set((0,)) == [(1, 0)]
    assert c.inversion_set((0, 1)) == [(1, 0), (2, 1)]
    with pytest.raises(NotReduced):
        c.inversion_set((0, 0))


def test_chamber_coweights_a1():
    c = build_cartan("A", 1)
    (w,) = chamber_coweights(c, [(1,)])
    assert w.plus_lift == (0, 1) and w.minus_lift == (1, 0)
    assert wt_add(w.plus_lift, w.minus_lift) == c.delta
    (w2,) = chamber_coweights(c, [(-1,)])
    assert w2.plus_lift == (1, 0) and w2.minus_lift == (0, 1)


def test_chamber_coweights_a2_standard():
    c = build_cartan("A", 2)
    system = [(1, 0), (0, 1), (1, 1)]
    ws = chamber_coweights(c, system)
    assert len(ws) == 2
    for w in ws:
        assert wt_add(w.plus_lift, w.minus_lift) == c.delta
        # fundamental coweight pairings against the system's simple roots
        assert w.pair_finite(w.simple) == 1
        others = [s for s in [(1, 0), (0, 1)] if s != w.simple]
        for s in others:
            assert w.pair_finite(s) == 0
    assert {w.plus_lift for w in ws} == {(0, 1, 0), (0, 0, 1)}


def test_not_a_positive_system():
    c = build_cartan("A", 2)
    with pytest.raises(NotAPositiveSystem):
        chamber_coweights(c, [(1, 0), (-1, 0), (1, 1)])
    with pytest.raises(NotAPositiveSystem):
        chamber_coweights(c, [(1, 0), (0, 1)])


def test_serialization_roundtrip():
    c = build_cartan("D", 5)
    c2 = CartanDatum.from_json(c.to_json())
    assert c2.pairing == c.pairing
    assert c2.delta == c.delta
    assert c.content_hash() == c2.content_hash()
    rows = roots_to_csv_rows(positive_roots_up_to(c, 2))
    assert rows[0] == ["coordinates", "kind", "height", "mult"]
