"""Functional convex preorders on the positive roots.

An order is a 1- or 2-row rational matrix h; roots compare by the
lexicographic order on h(alpha)/ht(alpha).  Imaginary roots all tie (the
functional is linear), and that is the only permitted tie: any other
coincidence raises AmbiguousOrder.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction

from .linalg import feasible_nonneg_solution
from .roots import (
    Root,
    NotAPositiveSystem,
    positive_roots_up_to,
    root_from_vector,
    chamber_coweights,
    wt_height,
    wt_sub,
)

LESS, EQUIVALENT, GREATER = -1, 0, 1


class AmbiguousOrder(ValueError):
    pass


class NotWordTypeAtScale(RuntimeError):
    pass


class BoundTooSmall(ValueError):
    pass


class NotSimpleAfterPullback(RuntimeError):
    """Greedy reduced-word extraction hit a non-simple pullback."""


class NoPairExists(ValueError):
    pass


class InvalidTwoRowSpec(ValueError):
    pass


def _vec(x):
    return x.vector if isinstance(x, Root) else tuple(x)


@dataclass
class ConvexOrderSpec:
    """A convex preorder cut out by a rational functional matrix."""

    cartan: object
    rows: tuple
    validated_height: int = 0
    _ratio_cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self.rows = tuple(tuple(Fraction(x) for x in row) for row in self.rows)
        if len(self.rows) not in (1, 2):
            raise InvalidTwoRowSpec("only 1- or 2-row functionals are supported")
        if any(len(row) != self.cartan.n for row in self.rows):
            raise InvalidTwoRowSpec("functional row length must match |I|")
        if len(self.rows) == 2:
            # two-row shape: the second row must kill delta so that the
            # imaginary ray sits at (x, 0)
            if self._h(self.cartan.delta)[1] != 0:
                raise InvalidTwoRowSpec("second functional row must vanish on delta")
        if self.validated_height:
            self.validate(self.validated_height)

    def _h(self, vec):
        return tuple(sum(r[i] * x for i, x in enumerate(vec)) for r in self.rows)

    def ratio(self, x):
        """Normalized functional value h(alpha)/ht(alpha), the sort key."""
        v = _vec(x)
        got = self._ratio_cache.get(v)
        if got is None:
            h = wt_height(v)
            got = tuple(val / h for val in self._h(v))
            self._ratio_cache[v] = got
        return got

    def compare(self, a, b):
        """Exact three-way comparison; Equivalent only for imaginary pairs."""
        va, vb = _vec(a), _vec(b)
        ra, rb = self.ratio(va), self.ratio(vb)
        if ra < rb:
            return LESS
        if ra > rb:
            return GREATER
        # only proportional vectors may tie
        ha, hb = wt_height(va), wt_height(vb)
        if tuple(x * hb for x in va) != tuple(x * ha for x in vb):
            raise AmbiguousOrder(f"roots {va} and {vb} compare equal under h={self.rows}")
        return EQUIVALENT

    def less(self, a, b):
        return self.compare(a, b) == LESS

    def validate(self, height_bound):
        """Check injectivity on non-proportional roots up to the bound."""
        roots = positive_roots_up_to(self.cartan, height_bound)
        for i, r in enumerate(roots):
            for s in roots[i + 1:]:
                self.compare(r, s)
        self.validated_height = max(self.validated_height, height_bound)

    # -- root enumeration in order ------------------------------------------

    def sorted_roots(self, height_bound):
        roots = positive_roots_up_to(self.cartan, height_bound)
        return sorted(roots, key=lambda r: (self.ratio(r), r.height, r.vector))

    def reals_below_delta(self, height_bound):
        dr = self.ratio(self.cartan.delta)
        return [r for r in self.sorted_roots(height_bound)
                if r.is_real() and self.ratio(r) < dr]

    def reals_above_delta(self, height_bound):
        dr = self.ratio(self.cartan.delta)
        return [r for r in self.sorted_roots(height_bound)
                if r.is_real() and self.ratio(r) > dr]

    def first_n_roots(self, n, height_bound):
        """The n smallest positive roots, with a one-delta-step stability check."""
        if n == 0:
            return []
        lo = self.reals_below_delta(height_bound)
        if len(lo) < n:
            raise BoundTooSmall(
                f"only {len(lo)} roots below delta at height {height_bound}, wanted {n}")
        bigger = self.reals_below_delta(height_bound + wt_height(self.cartan.delta))
        if [r.vector for r in lo[:n]] != [r.vector for r in bigger[:n]]:
            raise NotWordTypeAtScale(
                f"initial segment of length {n} unstable under height growth")
        return lo[:n]

    def reduced_word_from_segment(self, n, height_bound=None):
        """Greedy word i_1..i_n with alpha_k = s_{i_1}..s_{i_{k-1}}(alpha_{i_k})."""
        c = self.cartan
        if height_bound is None:
            height_bound = (n + 2) * wt_height(c.delta)
        segment = self.first_n_roots(n, height_bound)
        word = []
        for k, rk in enumerate(segment):
            v = rk.vector
            for i in word:
                v = c.reflect(i, v)  # word applied in reverse = v^{-1}
            hit = next((i for i in range(c.n) if v == c.simple_root(i)), None)
            if hit is None:
                raise NotSimpleAfterPullback(
                    f"pullback of {rk.vector} at step {k} is {v}, not simple")
            word.append(hit)
        got = {tuple(b) for b in c.inversion_set(tuple(word))}
        want = {r.vector for r in segment}
        if got != want:
            raise NotSimpleAfterPullback(
                f"inversion set {got} does not reproduce the segment {want}")
        return tuple(word)

    # -- positive systems and coweights --------------------------------------

    def positive_system_below_delta(self, height_bound):
        projected = {self.cartan.project(r.vector)
                     for r in self.reals_below_delta(height_bound)}
        pm = set()
        for r in positive_roots_up_to(self.cartan, wt_height(self.cartan.delta) - 1):
            if r.is_real():
                p = self.cartan.project(r.vector)
                pm.add(p)
                pm.add(tuple(-x for x in p))
        finite_count = len(pm) // 2
        if len(projected) != finite_count:
            raise NotAPositiveSystem(
                f"projection of the below-delta roots has {len(projected)} elements, "
                f"expected {finite_count}; height bound {height_bound} too small?")
        from .roots import positive_system_simples
        positive_system_simples(self.cartan, projected)  # full one-of-± / closure check
        return sorted(projected)

    def positive_system_above_delta(self, height_bound):
        below = self.positive_system_below_delta(height_bound)
        return sorted(tuple(-x for x in b) for b in below)

    def adapted_coweights(self, height_bound=None):
        """Chamber coweights adapted to this order: fundamental for p(above-delta)."""
        if height_bound is None:
            height_bound = 3 * wt_height(self.cartan.delta)
        return chamber_coweights(self.cartan, self.positive_system_above_delta(height_bound))

    # -- minimal pairs --------------------------------------------------------

    def minimal_pair(self, alpha, height_bound=None):
        """A minimal pair (beta, gamma) for alpha: beta+gamma=alpha, gamma < beta,
        nothing strictly between; ties broken toward the largest gamma."""
        a = _vec(alpha)
        c = self.cartan
        if sum(a) == 1:
            raise NoPairExists(f"{a} is simple")
        if height_bound is None:
            height_bound = wt_height(a)
        roots = positive_roots_up_to(c, wt_height(a) - 1)
        by_vec = {r.vector: r for r in roots}
        candidates = []
        for g in roots:
            rest = wt_sub(a, g.vector)
            b = by_vec.get(rest)
            if b is None:
                continue
            if self.compare(g, b) == LESS:
                candidates.append((b, g))
        if not candidates:
            raise NoPairExists(f"no decomposition of {a} into two positive roots")
        minimal = []
        for b, g in candidates:
            dominated = any(
                self.less(g, g2) and self.less(b2, b)
                for b2, g2 in candidates if (b2.vector, g2.vector) != (b.vector, g.vector))
            if not dominated:
                minimal.append((b, g))
        minimal.sort(key=lambda p: (self.ratio(p[1]), p[1].vector), reverse=True)
        return minimal[0]

    # -- convexity verification -----------------------------------------------

    def verify_convexity(self, height_bound, seed=0, cone_samples=50,
                         compare_override=None):
        cmp = compare_override or self.compare
        roots = positive_roots_up_to(self.cartan, height_bound)
        vecs = {r.vector for r in roots}
        clause_a = []
        pairs = 0
        for i, x in enumerate(roots):
            for y in roots[i:]:
                s = tuple(p + q for p, q in zip(x.vector, y.vector))
                if s not in vecs:
                    continue
                lo, hi = (x, y) if cmp(x.vector, y.vector) != GREATER else (y, x)
                pairs += 1
                srt = root_from_vector(self.cartan, s)
                ok = (cmp(lo.vector, s) != GREATER) and (cmp(s, hi.vector) != GREATER)
                if not ok:
                    clause_a.append((lo.vector, srt.vector, hi.vector))
        cone_violations = []
        rng = random.Random(seed)
        ordered = sorted(roots, key=lambda r: (self.ratio(r), r.height, r.vector))
        ratios = [self.ratio(r) for r in ordered]
        for _ in range(cone_samples):
            k = rng.randrange(1, len(ordered))
            while 0 < k < len(ordered) and ratios[k - 1] == ratios[k]:
                k += 1
            if k >= len(ordered):
                continue
            lows = ordered[:k]
            highs = ordered[k:]
            A = [r.vector for r in lows if rng.random() < 0.5] or [lows[-1].vector]
            B = [r.vector for r in highs if rng.random() < 0.5] or [highs[0].vector]
            n = self.cartan.n
            eqs = [[v[t] for v in A] + [-w[t] for w in B] for t in range(n)]
            eqs.append([1] * (len(A) + len(B)))
            rhs = [0] * n + [1]
            if feasible_nonneg_solution(eqs, rhs):
                cone_violations.append((sorted(A), sorted(B)))
        return ConvexityReport(height_bound, pairs, clause_a,
                               cone_samples, cone_violations)


@dataclass
class ConvexityReport:
    height_bound: int
    pairs_checked: int
    clause_a_violations: list
    cone_instances: int
    cone_violations: list

    @property
    def ok(self):
        return not self.clause_a_violations and not self.cone_violations

    def summary(self):
        return {
            "height_bound": self.height_bound,
            "pairs_checked": self.pairs_checked,
            "clause_a_violations": [list(map(list, v)) for v in self.clause_a_violations],
            "cone_instances": self.cone_instances,
            "cone_violations": [[list(map(list, a)), list(map(list, b))]
                                for a, b in self.cone_violations],
            "ok": self.ok,
        }


def swapped_compare(order, u, v):
    """A deliberately non-convex comparison: transpose the roots u and v."""
    u, v = tuple(u), tuple(v)

    def cmp(a, b):
        a, b = _vec(a), _vec(b)
        a2 = v if a == u else u if a == v else a
        b2 = v if b == u else u if b == v else b
        return order.compare(a2, b2)

    return cmp
