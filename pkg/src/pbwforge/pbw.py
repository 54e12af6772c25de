"""Root partitions, PBW and dual PBW bases, bar matrices, canonical bases.

Real root vectors come from the cuspidal linear characterization (the
unique character killed by every forbidden coproduct split), solved
exactly on the small space of allowed words.  Their theta-expansions are
rebuilt by minimal-pair commutator recursions and cross-checked against
the cuspidal characters coordinate by coordinate, so every pairing
downstream is a dot product.

Theorem-shaped failures raise TheoremViolation; the CLI turns those into
structured findings with exit code 2 instead of crashing.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .exactq import LaurentPoly, RatFunc, q_factorial, q_int, ratfunc_sqrt
from .linalg import ff_kernel, ff_rank
from .convex import LESS, GREATER
from .roots import (
    Root,
    positive_roots_up_to,
    root_from_vector,
    wt_height,
    wt_sub,
)
from .shuffle import DUAL, FSIDE, PrefVec, ShuffleAlgebra, ShuffleVec


class TheoremViolation(RuntimeError):
    """A checkable theorem failed; carries a structured finding record."""

    def __init__(self, kind, message, **details):
        super().__init__(f"{kind}: {message}")
        self.finding = {"kind": kind, "message": message, **details}


class CuspidalDimensionNot1(TheoremViolation):
    def __init__(self, message, **details):
        super().__init__("cuspidal-dimension", message, **details)


class NormalizationFailed(TheoremViolation):
    def __init__(self, message, **details):
        super().__init__("cuspidal-normalization", message, **details)


class DependentPBW(TheoremViolation):
    def __init__(self, message, **details):
        super().__init__("dependent-pbw", message, **details)


class DualNotPositive(TheoremViolation):
    def __init__(self, message, **details):
        super().__init__("dual-not-positive", message, **details)


class NotUnitriangular(TheoremViolation):
    def __init__(self, message, **details):
        super().__init__("bar-not-unitriangular", message, **details)


class NoCanonicalSolution(TheoremViolation):
    def __init__(self, message, **details):
        super().__init__("no-canonical-solution", message, **details)


class SupportViolation(TheoremViolation):
    def __init__(self, message, **details):
        super().__init__("ls-support", message, **details)


class EntriesDoNotCommute(TheoremViolation):
    def __init__(self, message, **details):
        super().__init__("psi-noncommutative", message, **details)


BELOW, ABOVE = "below", "above"


@dataclass(frozen=True)
class RootPartition:
    """Multiplicities on real roots plus a multipartition over chamber coweights."""

    weight: tuple
    real: tuple   # ((vector, mult), ...), sorted by descending convex order
    imag: tuple   # one partition tuple per chamber coweight (engine ordering)

    @property
    def n_delta(self):
        return sum(sum(p) for p in self.imag)

    def is_purely_imaginary(self):
        return not self.real

    def f_map(self, delta):
        f = {v: m for v, m in self.real}
        n = self.n_delta
        if n:
            f[delta] = n
        return f

    def label(self):
        reals = ",".join(f"{v}^{m}" if m > 1 else f"{v}" for v, m in self.real)
        imag = ";".join(f"w{k}:{p}" for k, p in enumerate(self.imag) if p)
        return "[" + reals + ("|" + imag if imag else "") + "]"


class PBWBasis:
    def __init__(self, weight, partitions, elements, duals, pairing_matrix, gram_rank):
        self.weight = weight
        self.partitions = partitions
        self.elements = elements
        self.duals = duals
        self.pairing_matrix = pairing_matrix
        self.gram_rank = gram_rank

    def index_of(self, pi):
        return self.partitions.index(pi)


class PBWEngine:
    """All basis-level computations for one convex order."""

    def __init__(self, order, height_bound, cache_dir=None):
        self.order = order
        self.cartan = order.cartan
        self.height_bound = height_bound
        dh = wt_height(self.cartan.delta)
        self.algebra = ShuffleAlgebra(self.cartan, max_height=height_bound + 2 * dh,
                                      cache_dir=cache_dir)
        self.coweights = sorted(order.adapted_coweights(max(3 * dh, height_bound + dh)),
                                key=lambda w: w.simple)
        self.findings = []
        self._roots_cache = {}
        self._span_cache = {}
        self._real_vec = {}
        self._cuspidal = {}
        self._psi = {}
        self._pvec = {}
        self._schur = {}
        self._bases = {}
        self._canonical = {}
        self._label_transpose = [False] * len(self.coweights)
        self._labels_resolved = False

    # -- roots ---------------------------------------------------------------

    def roots_up_to(self, h):
        got = self._roots_cache.get(h)
        if got is None:
            got = positive_roots_up_to(self.cartan, h)
            self._roots_cache[h] = got
        return got

    def real_roots_inside(self, nu):
        out = [r for r in self.roots_up_to(wt_height(nu))
               if r.is_real() and all(a <= b for a, b in zip(r.vector, nu))]
        out.sort(key=lambda r: (self.order.ratio(r), r.vector), reverse=True)
        return out

    # -- semicuspidal support decisions ---------------------------------------

    def sum_of_roots_decides(self, lam, alpha, side, strict=True):
        """Is lam an N-combination of roots on the given side of alpha?"""
        lam = tuple(lam)
        avec = alpha.vector if isinstance(alpha, Root) else tuple(alpha)
        key = (lam, avec, side, strict)
        got = self._span_cache.get(key)
        if got is not None:
            return got
        h = wt_height(lam)
        if h == 0:
            self._span_cache[key] = True
            return True
        pool = []
        for r in self.roots_up_to(h):
            c = self.order.compare(r.vector, avec)
            ok = (c == LESS if side == BELOW else c == GREATER) if strict else \
                 (c != GREATER if side == BELOW else c != LESS)
            if ok and all(a <= b for a, b in zip(r.vector, lam)):
                pool.append(r.vector)
        reach = {(0,) * self.cartan.n}
        subs = sorted(self.algebra._sub_weights(lam), key=wt_height)
        for v in pool:
            for w in subs:
                prev = wt_sub(w, v)
                if all(x >= 0 for x in prev) and prev in reach:
                    reach.add(w)
        got = lam in reach
        self._span_cache[key] = got
        return got

    # -- cuspidal characters ----------------------------------------------------

    def allowed_split(self, lam, alpha):
        # In these word coordinates the prefix of a word carries the paper's
        # *right* tensor factor: the one global convention flip of this build.
        # A split (lam, mu) survives iff the prefix weight is a sum of roots
        # above alpha and the suffix weight a sum of roots below it.
        mu = wt_sub(alpha.vector, lam)
        return (self.sum_of_roots_decides(lam, alpha, ABOVE, strict=True)
                and self.sum_of_roots_decides(mu, alpha, BELOW, strict=True))

    def allowed_words(self, alpha):
        """Words whose every proper prefix weight is an allowed cuspidal split."""
        n = self.cartan.n
        target = alpha.vector
        ht = alpha.height
        ok_weights = {}

        def weight_ok(w):
            got = ok_weights.get(w)
            if got is None:
                got = self.allowed_split(w, alpha)
                ok_weights[w] = got
            return got

        out = []

        def rec(word, wt):
            if len(word) == ht:
                out.append(tuple(word))
                return
            for i in range(n):
                if wt[i] < target[i]:
                    nxt = tuple(wt[j] + (1 if j == i else 0) for j in range(n))
                    if len(word) + 1 == ht or weight_ok(nxt):
                        word.append(i)
                        rec(word, nxt)
                        word.pop()

        rec([], (0,) * n)
        return sorted(out)

    def cuspidal_ray(self, alpha):
        """The one-dimensional cuspidal solution space at a real root.

        Returns the primitive integral bar-centered generator of the ray;
        the honest character is a bar-symmetric N[q,q^-1]-multiple of it,
        fixed later by the <E, E*> = 1 anchor.
        """
        if isinstance(alpha, tuple):
            alpha = root_from_vector(self.cartan, alpha)
        got = self._cuspidal.get(alpha.vector)
        if got is not None:
            return got
        if not alpha.is_real():
            raise ValueError("cuspidal characters are built for real roots")
        if alpha.height == 1:
            i = alpha.vector.index(1)
            out = self.algebra.char_unit((i,))
            self._cuspidal[alpha.vector] = out
            return out
        allowed = self.allowed_words(alpha)
        if not allowed:
            raise CuspidalDimensionNot1(
                "no allowed words", root=list(alpha.vector))
        # constraints: orthogonality to the Serre radical restricted to the
        # allowed coordinates (the radical is verified exactly, generator by
        # generator, through the algebra-map property)
        gens = self.algebra.serre_generators(alpha.vector)
        zero = LaurentPoly.zero()
        rows = []
        seen = set()
        for g in gens:
            row = tuple(g.get(w, zero) for w in allowed)
            if any(not e.is_zero for e in row) and row not in seen:
                seen.add(row)
                rows.append(list(row))
        na = len(allowed)
        rank = ff_rank(rows) if rows else 0
        dim = na - rank
        if dim != 1:
            raise CuspidalDimensionNot1(
                f"solution space has dimension {dim}",
                root=list(alpha.vector), allowed_words=len(allowed))
        if rows:
            (kernel_vec,) = ff_kernel(rows, na)
        else:
            kernel_vec = tuple([RatFunc.one()] * na)
        # normalize: primitive integral, bar-invariant, nonnegative
        table = _normalize_cuspidal(dict(zip(allowed, kernel_vec)), alpha)
        out = ShuffleVec(alpha.vector, DUAL, PrefVec(RatFunc.one(), table))
        self._cuspidal[alpha.vector] = out
        return out

    # -- real root vectors (f side, with theta data) ------------------------------

    def real_root_vector(self, alpha):
        """E_alpha with theta-expansion, normalized to <E_alpha, E*_alpha> = 1.

        Built by minimal-pair commutators from lower roots; the cuspidal
        linear solve pins the ray and <E, (1-q^2) E> = 1 pins the scalar
        up to sign, which positivity of the character resolves.
        """
        if isinstance(alpha, tuple):
            alpha = root_from_vector(self.cartan, alpha)
        got = self._real_vec.get(alpha.vector)
        if got is not None:
            return got
        if alpha.height == 1:
            i = alpha.vector.index(1)
            out = self.algebra.theta_vec(i)
            self._real_vec[alpha.vector] = out
            return out
        ray = self.cuspidal_ray(alpha)
        beta, gamma = self.order.minimal_pair(alpha.vector)
        if beta.is_real() and gamma.is_real():
            eb = self.real_root_vector(beta)
            eg = self.real_root_vector(gamma)
            twist = self.cartan.dot(beta.vector, gamma.vector)
            x = self.algebra.mul(eg, eb).sub(
                self.algebra.mul(eb, eg).scaled(RatFunc(LaurentPoly.q_power(-twist))))
        else:
            # no real minimal pair: alpha sits in an omega_+/- + n*delta
            # family and the P_1 commutator reaches it from alpha - delta
            prev = wt_sub(alpha.vector, self.cartan.delta)
            eprev = self.real_root_vector(prev)
            widx = self._family_coweight(alpha.vector)
            p1 = self.p_vector(widx, 1)
            x = self.algebra.mul(eprev, p1).sub(self.algebra.mul(p1, eprev))
        if _exact_ratio(x, ray) is None:
            raise CuspidalDimensionNot1(
                "commutator construction leaves the cuspidal ray",
                root=list(alpha.vector))
        # scalar anchor: <E, (1-q^2) E> = 1, the square root taken exactly
        xchar = ShuffleVec(alpha.vector, DUAL,
                           x.vec.scaled(RatFunc(self.algebra.one_minus_q2)))
        norm = self.algebra.f_pair(x, xchar)
        s = ratfunc_sqrt(norm)
        if s is None:
            raise NormalizationFailed(
                "self-pairing of the commutator is not a perfect square",
                root=list(alpha.vector))
        out = x.scaled(s.inverse())
        star = ShuffleVec(alpha.vector, DUAL,
                          out.vec.scaled(RatFunc(self.algebra.one_minus_q2)))
        if not star.is_nonneg_integral():
            out = out.scaled(-1)
            star = ShuffleVec(alpha.vector, DUAL,
                              out.vec.scaled(RatFunc(self.algebra.one_minus_q2)))
        if not star.is_nonneg_integral():
            raise NormalizationFailed(
                "no sign makes the cuspidal character nonnegative",
                root=list(alpha.vector))
        if self.algebra.f_pair(out, star) != RatFunc.one():
            raise NormalizationFailed(
                "<E, E*> = 1 anchor failed", root=list(alpha.vector))
        self._real_vec[alpha.vector] = out
        return out

    def cuspidal_dual_root_vector(self, alpha):
        """E*_alpha: the cuspidal character, reported bar-centered.

        Internally E_alpha is pinned by <E, E*> = 1; in these coordinates
        that scaling is off bar-invariance by one global q-power per root
        (the recorded convention twist), so the reported character is the
        recentered one: integral, content-free, bar_dual-invariant and
        nonnegative.
        """
        if isinstance(alpha, tuple):
            alpha = root_from_vector(self.cartan, alpha)
        e = self.real_root_vector(alpha)
        star = ShuffleVec(alpha.vector, DUAL,
                          e.vec.scaled(RatFunc(self.algebra.one_minus_q2)))
        shift2 = None
        for w, c in star.coordinates().items():
            p = c.to_laurent()
            s2 = -(p.low + p.high)
            if shift2 is None:
                shift2 = s2
            elif shift2 != s2:
                raise NormalizationFailed(
                    "coordinates demand different bar-centering shifts",
                    root=list(alpha.vector))
        if shift2 is None or shift2 % 2:
            raise NormalizationFailed(
                "no bar-centering q-power exists", root=list(alpha.vector))
        out = ShuffleVec(alpha.vector, DUAL,
                         star.vec.scaled(RatFunc(LaurentPoly.q_power(shift2 // 2))))
        if not out.is_nonneg_integral():
            raise NormalizationFailed(
                "recentered character is not nonnegative", root=list(alpha.vector))
        if any(not c.to_laurent().is_bar_symmetric()
               for c in out.coordinates().values()):
            raise NormalizationFailed(
                "recentered character is not bar-invariant", root=list(alpha.vector))
        return out

    def _family_coweight(self, avec):
        p = self.cartan.project(avec)
        for k, w in enumerate(self.coweights):
            if p == w.simple or p == tuple(-x for x in w.simple):
                return k
        raise ValueError(f"{avec} is not in a chamber-coweight family")

    # -- imaginary root vectors ------------------------------------------------

    def psi(self, widx, n):
        """psi_n = E_{n delta - w+} E_{w+} - q^2 E_{w+} E_{n delta - w+}."""
        key = (widx, n)
        got = self._psi.get(key)
        if got is None:
            w = self.coweights[widx]
            hi = tuple(n * d - p for d, p in zip(self.cartan.delta, w.plus_lift))
            e_hi = self.real_root_vector(hi)
            e_plus = self.real_root_vector(w.plus_lift)
            got = self.algebra.mul(e_hi, e_plus).sub(
                self.algebra.mul(e_plus, e_hi).scaled(RatFunc(LaurentPoly.q_power(2))))
            self._psi[key] = got
        return got

    def p_vector(self, widx, n):
        """P_n = (1/[n]) sum_s q^{n-s} psi_s P_{n-s}, P_0 = 1."""
        key = (widx, n)
        got = self._pvec.get(key)
        if got is None:
            if n == 0:
                got = self.algebra.one(FSIDE)
            else:
                acc = None
                for s in range(1, n + 1):
                    term = self.algebra.mul(self.psi(widx, s), self.p_vector(widx, n - s))
                    term = term.scaled(RatFunc(LaurentPoly.q_power(n - s)))
                    acc = term if acc is None else acc.add(term)
                got = acc.scaled(RatFunc(1, q_int(n)))
            self._pvec[key] = got
        return got

    def schur_raw(self, widx, lam, t=None):
        """Jacobi-Trudi determinant det(P_{lam_i - i + j}) over the commuting block."""
        lam = tuple(lam)
        key = (widx, lam, t)
        got = self._schur.get(key)
        if got is not None:
            return got
        if t is None:
            t = max(1, len(lam))
            out = self._schur_det(widx, lam, t)
            out2 = self._schur_det(widx, lam, t + 1)
            if out.coordinates() != out2.coordinates():
                raise EntriesDoNotCommute(
                    "Jacobi-Trudi determinant depends on the matrix size",
                    coweight=widx, partition=list(lam))
        else:
            out = self._schur_det(widx, lam, t)
        self._schur[key] = out
        return out

    def _schur_det(self, widx, lam, t):
        if any(l <= 0 for l in lam):
            raise ValueError("partition parts must be positive")
        if len(lam) > t:
            raise ValueError("need t >= length of the partition")
        degs = [[(lam[i] if i < len(lam) else 0) - (i + 1) + (j + 1) for j in range(t)]
                for i in range(t)]
        needed = sorted({d for row in degs for d in row if d > 0})
        for a in needed:
            for b in needed:
                if a < b and a + b <= sum(lam):
                    pa, pb = self.p_vector(widx, a), self.p_vector(widx, b)
                    if self.algebra.mul(pa, pb).coordinates() != \
                       self.algebra.mul(pb, pa).coordinates():
                        raise EntriesDoNotCommute(
                            f"P_{a} and P_{b} do not commute", coweight=widx)
        from itertools import permutations
        total = None
        for per in permutations(range(t)):
            sign = _perm_sign(per)
            if any(degs[i][per[i]] < 0 for i in range(t)):
                continue
            factors = [self.p_vector(widx, degs[i][per[i]]) for i in range(t)
                       if degs[i][per[i]] > 0]
            term = self.algebra.product(factors, side_hint=FSIDE)
            term = term.scaled(sign)
            total = term if total is None else total.add(term)
        if total is None:
            total = self.algebra.zero(
                tuple(sum(lam) * d for d in self.cartan.delta), FSIDE)
        return total

    # -- imaginary labeling (partition vs transpose) -----------------------------

    def resolve_labeling(self):
        """Fix the partition labeling by the omega-width-2 criterion at 2*delta."""
        if self._labels_resolved:
            return
        self._labels_resolved = True  # set first: the 2delta build recurses here
        two_delta = tuple(2 * d for d in self.cartan.delta)
        if wt_height(two_delta) > self.algebra.max_height:
            return
        basis = self._build_basis(two_delta)
        for widx, w in enumerate(self.coweights):
            width_of = {}
            for pi, dvec in zip(basis.partitions, basis.duals):
                if pi.is_purely_imaginary() and sum(pi.imag[widx]) == 2:
                    width_of[pi.imag[widx]] = self.char_width(dvec, w)
            if width_of.get((2,)) == 2 and width_of.get((1, 1)) == 1:
                flip = False
            elif width_of.get((1, 1)) == 2 and width_of.get((2,)) == 1:
                flip = True
            else:
                self.findings.append({
                    "kind": "labeling-indeterminate", "coweight": widx,
                    "widths": {str(k): v for k, v in width_of.items()}})
                flip = False
            self._label_transpose[widx] = flip
            self.findings.append({
                "kind": "imaginary-labeling", "coweight": widx,
                "convention": "transpose" if flip else "identity"})
        self._bases.clear()

    def s_for_label(self, widx, lam):
        """S-element for a partition label, after the width-2 normalization."""
        self.resolve_labeling()
        lam = tuple(lam)
        if self._label_transpose[widx]:
            lam = _conjugate(lam)
        return self.schur_raw(widx, lam)

    def schur_vector(self, widx, lam):
        return self.s_for_label(widx, lam)

    # -- root partitions -----------------------------------------------------------

    def enumerate_root_partitions(self, nu, extension=1):
        nu = tuple(nu)
        reals = self.real_roots_inside(nu)
        delta = self.cartan.delta
        parts = []

        def rec(idx, remaining, chosen):
            rem_h = wt_height(remaining)
            if rem_h == 0 or _is_delta_multiple(remaining, delta):
                n = rem_h // wt_height(delta)
                for mp in _multipartitions(n, len(self.coweights)):
                    parts.append(RootPartition(nu, tuple(chosen), mp))
                if rem_h == 0:
                    return
            if idx >= len(reals):
                return
            r = reals[idx]
            rec(idx + 1, remaining, chosen)
            m = 0
            cur = remaining
            while all(a >= b for a, b in zip(cur, r.vector)):
                cur = wt_sub(cur, r.vector)
                m += 1
                rec(idx + 1, cur, chosen + [(r.vector, m)])

        rec(0, nu, [])
        uniq = sorted(set(parts), key=lambda p: self.sort_key(p, extension))
        return uniq

    def sort_key(self, pi, extension=1):
        """Linear extension of the partial order: descending f-sequence, then labels."""
        desc = self._indivisible_desc(pi.weight)
        f = pi.f_map(self.cartan.delta)
        seq = tuple(f.get(v, 0) for v in desc)
        tie = tuple(tuple(p) for p in pi.imag)
        if extension == 2:
            tie = tuple(tuple(-x for x in p) for p in reversed(pi.imag))
        return (seq, tie)

    def _indivisible_desc(self, nu):
        vecs = [r.vector for r in self.real_roots_inside(nu)]
        if _delta_fits(nu, self.cartan.delta):
            vecs.append(self.cartan.delta)
        vecs.sort(key=lambda v: (self.order.ratio(v), v), reverse=True)
        return vecs

    def partition_less(self, pi, sigma):
        """The root-partition order: agreement outside a window, growth at both ends."""
        f, g = pi.f_map(self.cartan.delta), sigma.f_map(self.cartan.delta)
        support = sorted(set(f) | set(g), key=lambda v: (self.order.ratio(v), v))
        diffs = [v for v in support if f.get(v, 0) != g.get(v, 0)]
        if not diffs:
            return False
        lo, hi = diffs[0], diffs[-1]
        return f.get(lo, 0) < g.get(lo, 0) and f.get(hi, 0) < g.get(hi, 0)

    def partition_sim(self, pi, sigma):
        return pi.f_map(self.cartan.delta) == sigma.f_map(self.cartan.delta)

    # -- PBW basis -------------------------------------------------------------------

    def pbw_element(self, pi):
        delta_ratio = self.order.ratio(self.cartan.delta)
        above = [(v, m) for v, m in pi.real if self.order.ratio(v) > delta_ratio]
        below = [(v, m) for v, m in pi.real if self.order.ratio(v) < delta_ratio]
        factors = []
        for v, m in above:
            factors.append(self._divided_power(v, m))
        for widx, lam in enumerate(pi.imag):
            if lam:
                factors.append(self.s_for_label(widx, lam))
        for v, m in below:
            factors.append(self._divided_power(v, m))
        return self.algebra.product(factors, side_hint=FSIDE)

    def _divided_power(self, v, m):
        e = self.real_root_vector(v)
        out = e
        for _ in range(m - 1):
            out = self.algebra.mul(out, e)
        if m > 1:
            out = out.scaled(RatFunc(1, q_factorial(m)))
        return out

    def pbw_basis(self, nu):
        nu = tuple(nu)
        got = self._bases.get(nu)
        if got is None:
            self.resolve_labeling()
            got = self._build_basis(nu)
            self._bases[nu] = got
        return got

    def _build_basis(self, nu):
        partitions = self.enumerate_root_partitions(nu)
        elements = [self.pbw_element(pi) for pi in partitions]
        r = len(partitions)
        gram = self.algebra.gram(nu)
        grank = gram.rank_certified()
        if grank != r:
            raise DependentPBW(
                f"{r} root partitions against Gram rank {grank}",
                weight=list(nu))
        P = [[self.algebra.f_pair(elements[i], elements[j]) for j in range(r)]
             for i in range(r)]
        blocks = self._class_blocks(partitions)
        block_of = {}
        for b, rows in enumerate(blocks):
            for i in rows:
                block_of[i] = b
        cross = [(i, j) for i in range(r) for j in range(r)
                 if block_of[i] != block_of[j] and not P[i][j].is_zero]
        try:
            if cross:
                # standard classes failed to be orthogonal across ~-classes;
                # record it and invert the full matrix instead of the blocks
                self.findings.append({"kind": "cross-class-pairing",
                                      "weight": list(nu), "pairs": cross[:8]})
                inv = _ratfunc_inverse(P)
            else:
                inv = [[RatFunc.zero()] * r for _ in range(r)]
                for rows in blocks:
                    sub = [[P[i][j] for j in rows] for i in rows]
                    sub_inv = _ratfunc_inverse(sub)
                    for a, i in enumerate(rows):
                        for b, j in enumerate(rows):
                            inv[i][j] = sub_inv[a][b]
        except Exception:
            raise DependentPBW("PBW pairing matrix is singular", weight=list(nu))
        duals = []
        for j in range(r):
            acc = None
            for i in range(r):
                if inv[i][j].is_zero:
                    continue
                term = elements[i].vec.scaled(inv[i][j])
                acc = term if acc is None else acc.add(term)
            duals.append(ShuffleVec(nu, DUAL, acc if acc is not None else PrefVec()))
        for i in range(r):
            for j in range(r):
                want = RatFunc.one() if i == j else RatFunc.zero()
                if self.algebra.f_pair(elements[i], duals[j]) != want:
                    raise DependentPBW("dual basis failed re-verification",
                                       weight=list(nu), i=i, j=j)
        for j, d in enumerate(duals):
            if not d.is_nonneg_integral():
                raise DualNotPositive(
                    f"dual PBW element {partitions[j].label()} has a coordinate "
                    "outside N[q,q^-1]", weight=list(nu), index=j)
        basis = PBWBasis(nu, partitions, elements, duals, P, grank)
        basis.inverse_pairing = inv
        return basis

    def _class_blocks(self, partitions):
        blocks = []
        cur = []
        for i, pi in enumerate(partitions):
            if cur and not self.partition_sim(partitions[cur[-1]], pi):
                blocks.append(cur)
                cur = []
            cur.append(i)
        if cur:
            blocks.append(cur)
        return blocks

    # -- bar matrix and canonical basis ------------------------------------------------

    def bar_matrix(self, nu):
        basis = self.pbw_basis(nu)
        r = len(basis.partitions)
        M = [[self.algebra.f_pair(basis.elements[i],
                                  self.algebra.bar_f(basis.elements[j]))
              for j in range(r)] for i in range(r)]
        inv = basis.inverse_pairing
        B = [[RatFunc.zero()] * r for _ in range(r)]
        for i in range(r):
            for j in range(r):
                acc = RatFunc.zero()
                for k in range(r):
                    if not inv[i][k].is_zero and not M[k][j].is_zero:
                        acc = acc + inv[i][k] * M[k][j]
                B[i][j] = acc
        # integrality of the transition (the PBW basis is a Z[q,q^-1]-basis)
        lb = [[None] * r for _ in range(r)]
        for i in range(r):
            for j in range(r):
                if not B[i][j].is_laurent():
                    raise NoCanonicalSolution(
                        "bar transition entry is not Laurent",
                        weight=list(nu), i=i, j=j)
                lb[i][j] = B[i][j].to_laurent()
        # unitriangularity with respect to the partial order
        class_mixing = []
        for j in range(r):
            if lb[j][j] != LaurentPoly.const(1):
                raise NotUnitriangular("diagonal bar coefficient is not 1",
                                       weight=list(nu), index=j)
            for i in range(r):
                if i == j or lb[i][j].is_zero:
                    continue
                pi, pj = basis.partitions[i], basis.partitions[j]
                if self.partition_less(pi, pj):
                    continue
                if self.partition_sim(pi, pj):
                    class_mixing.append((i, j))
                    self.findings.append({
                        "kind": "bar-class-mixing", "weight": list(nu),
                        "i": pi.label(), "j": pj.label()})
                    continue
                raise NotUnitriangular(
                    f"bar({pj.label()}) hits {pi.label()} which is not below it",
                    weight=list(nu))
        return lb, class_mixing

    def bar_matrix_and_canonical(self, nu):
        """Bar transition, canonical basis, and the positivity report."""
        nu = tuple(nu)
        got = self._canonical.get(nu)
        if got is not None:
            return got
        basis = self.pbw_basis(nu)
        lb, class_mixing = self.bar_matrix(nu)
        r = len(basis.partitions)
        canon1 = self._canonical_from_bar(basis, lb, extension=1)
        canon2 = self._canonical_from_bar(basis, lb, extension=2)
        if canon1 != canon2:
            raise NoCanonicalSolution(
                "canonical basis differs between the two linear extensions",
                weight=list(nu))
        positive = True
        bad = []
        for j in range(r):
            for i in range(r):
                c = canon1[j][i]
                if i == j or c.is_zero:
                    continue
                if not (c.is_nonneg() and c.low >= 1):
                    positive = False
                    bad.append((basis.partitions[i].label(),
                                basis.partitions[j].label(), c.render()))
        report = {
            "weight": list(nu),
            "dim": r,
            "unitriangular": True,
            "class_mixing": [(basis.partitions[i].label(), basis.partitions[j].label())
                             for i, j in class_mixing],
            "positivity": positive,
            "positivity_failures": bad,
        }
        got = (lb, canon1, report)
        self._canonical[nu] = got
        return got

    def _canonical_from_bar(self, basis, lb, extension):
        r = len(basis.partitions)
        order_idx = sorted(range(r), key=lambda i: self.sort_key(
            basis.partitions[i], extension))
        pos = {k: t for t, k in enumerate(order_idx)}
        canonical = [None] * r

        def bar_coeffs(x):
            out = [LaurentPoly.zero()] * r
            for k in range(r):
                if x[k].is_zero:
                    continue
                xb = x[k].bar()
                for i in range(r):
                    if not lb[i][k].is_zero:
                        out[i] = out[i] + lb[i][k] * xb
            return out

        for j in order_idx:
            x = [LaurentPoly.zero()] * r
            x[j] = LaurentPoly.const(1)
            while True:
                d = bar_coeffs(x)
                d = [d[i] - x[i] for i in range(r)]
                supp = [i for i in range(r) if not d[i].is_zero]
                if not supp:
                    break
                k = max(supp, key=lambda i: pos[i])
                if pos[k] >= pos[j]:
                    raise NoCanonicalSolution(
                        "correction target is not strictly below",
                        weight=list(basis.weight))
                a = d[k]
                if a.bar() != -a:
                    raise NoCanonicalSolution(
                        "bar defect is not antisymmetric", weight=list(basis.weight))
                c = LaurentPoly(1, [a.coeff(e) for e in range(1, a.high + 1)]) \
                    if a.high >= 1 else LaurentPoly.zero()
                if (c - c.bar()) != a:
                    raise NoCanonicalSolution(
                        "no correction in qZ[q] exists", weight=list(basis.weight))
                bk = canonical[k]
                x = [x[i] + c * bk[i] for i in range(r)]
            canonical[j] = tuple(x)
        return canonical

    # -- Levendorskii-Soibelman ------------------------------------------------------

    def element_for_label(self, label):
        """('real', vec) or ('imag', multipartition tuple) -> (FSide vec, weight, f-position)."""
        kind, data = label
        if kind == "real":
            v = tuple(data)
            return self.real_root_vector(v), v
        mp = tuple(tuple(p) for p in data)
        factors = [self.s_for_label(widx, lam) for widx, lam in enumerate(mp) if lam]
        el = self.algebra.product(factors, side_hint=FSIDE)
        n = sum(sum(p) for p in mp)
        return el, tuple(n * d for d in self.cartan.delta)

    def ls_straighten_check(self, label_hi, label_lo):
        """Support bound for E_theta E_psi - q^(theta.psi) E_psi E_theta."""
        e_hi, w_hi = self.element_for_label(label_hi)
        e_lo, w_lo = self.element_for_label(label_lo)
        if label_hi[0] == "real" and label_lo[0] == "real":
            if self.order.compare(w_hi, w_lo) != GREATER:
                raise ValueError("labels must satisfy theta > psi")
        elif label_hi[0] == "real":
            if self.order.compare(w_hi, self.cartan.delta) != GREATER:
                raise ValueError("real label must sit above delta")
        elif label_lo[0] == "real":
            if self.order.compare(self.cartan.delta, w_lo) != GREATER:
                raise ValueError("real label must sit below delta")
        else:
            raise ValueError("two imaginary labels never satisfy theta > psi")
        twist = self.cartan.dot(w_hi, w_lo)
        x = self.algebra.mul(e_hi, e_lo).sub(
            self.algebra.mul(e_lo, e_hi).scaled(RatFunc(LaurentPoly.q_power(twist))))
        nu = tuple(a + b for a, b in zip(w_hi, w_lo))
        coeffs, basis = self.expand_in_pbw(x, nu)
        target = self._pair_partition(label_hi, label_lo, nu)
        support = []
        for i, c in enumerate(coeffs):
            if c.is_zero:
                continue
            pi = basis.partitions[i]
            support.append(pi.label())
            if not self.partition_less(pi, target):
                raise SupportViolation(
                    f"{pi.label()} appears but is not below {target.label()}",
                    weight=list(nu))
        return {"pair": [str(label_hi), str(label_lo)], "support": support, "ok": True}

    def _pair_partition(self, label_hi, label_lo, nu):
        real = []
        imag = tuple(() for _ in self.coweights)
        for kind, data in (label_hi, label_lo):
            if kind == "real":
                real.append((tuple(data), 1))
            else:
                imag = tuple(tuple(p) for p in data)
        real.sort(key=lambda vm: self.order.ratio(vm[0]), reverse=True)
        return RootPartition(nu, tuple(real), imag)

    def expand_in_pbw(self, x, nu):
        """Coefficients of an f-side vector in the PBW basis at nu."""
        basis = self.pbw_basis(nu)
        r = len(basis.partitions)
        m = [self.algebra.f_pair(basis.elements[i], x) for i in range(r)]
        inv = basis.inverse_pairing
        coeffs = []
        for i in range(r):
            acc = RatFunc.zero()
            for k in range(r):
                if not inv[i][k].is_zero and not m[k].is_zero:
                    acc = acc + inv[i][k] * m[k]
            coeffs.append(acc)
        # reconstruction check: the expansion reproduces x
        acc = None
        for i in range(r):
            if coeffs[i].is_zero:
                continue
            t = basis.elements[i].vec.scaled(coeffs[i])
            acc = t if acc is None else acc.add(t)
        got = acc.coordinates() if acc is not None else {}
        want = {w: c for w, c in x.vec.coordinates().items() if not c.is_zero}
        got = {w: c for w, c in got.items() if not c.is_zero}
        if got != want:
            raise DependentPBW("PBW expansion failed to reconstruct the vector",
                               weight=list(nu))
        return coeffs, basis

    # -- MV support and widths ------------------------------------------------------

    def char_support_and_width(self, x, w):
        """Restriction support and the width of the omega-face of its hull."""
        supp = self.algebra.restriction_support(x)
        plus, minus = w.plus_lift, w.minus_lift
        face_vals = []
        n = self.cartan.n
        # solve a*plus + b*minus = mu exactly; the lifts are independent
        i1 = next(i for i in range(n) if plus[i] * minus[(i + 1) % n] !=
                  minus[i] * plus[(i + 1) % n])
        i2 = (i1 + 1) % n
        det = Fraction(plus[i1] * minus[i2] - plus[i2] * minus[i1])
        for mu in supp:
            a = Fraction(mu[i1] * minus[i2] - mu[i2] * minus[i1], 1) / det
            b = Fraction(plus[i1] * mu[i2] - plus[i2] * mu[i1], 1) / det
            if all(a * plus[k] + b * minus[k] == mu[k] for k in range(n)) \
                    and a >= 0 and b >= 0:
                face_vals.append(a - b)
        width = max(face_vals) - min(face_vals) if face_vals else Fraction(0)
        return supp, face_vals, width

    def char_width(self, x, w):
        return self.char_support_and_width(x, w)[2]

    # -- imaginary dual generators ----------------------------------------------------

    def e_element(self, widx, k):
        """[L_w(1^k)]: the dual element of the purely imaginary label (1^k) at w."""
        if k == 0:
            return self.algebra.one(DUAL)
        nu = tuple(k * d for d in self.cartan.delta)
        basis = self.pbw_basis(nu)
        want = tuple((1,) * k if j == widx else () for j in range(len(self.coweights)))
        for pi, d in zip(basis.partitions, basis.duals):
            if pi.is_purely_imaginary() and pi.imag == want:
                return d
        raise ValueError(f"label (1^{k}) at coweight {widx} not found at {nu}")

    def dual_element(self, nu, pi):
        basis = self.pbw_basis(tuple(nu))
        return basis.duals[basis.partitions.index(pi)]


# -- helpers --------------------------------------------------------------------------


def _perm_sign(per):
    sign = 1
    seen = [False] * len(per)
    for i in range(len(per)):
        if seen[i]:
            continue
        j = i
        clen = 0
        while not seen[j]:
            seen[j] = True
            j = per[j]
            clen += 1
        if clen % 2 == 0:
            sign = -sign
    return sign


def _conjugate(lam):
    if not lam:
        return ()
    out = []
    for k in range(1, lam[0] + 1):
        out.append(sum(1 for p in lam if p >= k))
    return tuple(out)


def _is_delta_multiple(v, delta):
    h = wt_height(v)
    dh = wt_height(delta)
    if h == 0 or h % dh:
        return False
    k = h // dh
    return v == tuple(k * d for d in delta)


def _delta_fits(nu, delta):
    return all(a >= b for a, b in zip(nu, delta))


def _partitions_of(n):
    if n == 0:
        yield ()
        return
    def rec(rest, maxp):
        if rest == 0:
            yield ()
            return
        for p in range(min(rest, maxp), 0, -1):
            for tail in rec(rest - p, p):
                yield (p,) + tail
    yield from rec(n, n)


def _multipartitions(n, k):
    """All k-tuples of partitions with total size n."""
    if k == 0:
        return [()] if n == 0 else []
    out = []

    def rec(idx, rest, acc):
        if idx == k - 1:
            for p in _partitions_of(rest):
                out.append(tuple(acc + [p]))
            return
        for here in range(rest + 1):
            for p in _partitions_of(here):
                rec(idx + 1, rest - here, acc + [p])

    rec(0, n, [])
    return out


def _normalize_cuspidal(table_ratfunc, alpha):
    """Primitive integral, bar-invariant, nonnegative coordinate table."""
    den = LaurentPoly.const(1)
    from .exactq import poly_gcd
    for v in table_ratfunc.values():
        den = den * v.den.divide_exact(poly_gcd(den, v.den))
    ints = {}
    for w, v in table_ratfunc.items():
        if v.is_zero:
            continue
        ints[w] = (v * RatFunc(den)).to_laurent()
    if not ints:
        raise NormalizationFailed("zero cuspidal solution", root=list(alpha.vector))
    from math import gcd
    g = 0
    for p in ints.values():
        g = gcd(g, abs(p.content()))
    ints = {w: LaurentPoly(p.low, [c // g for c in p.coeffs]) for w, p in ints.items()}
    # global q-shift making every coordinate bar-symmetric
    shift2 = None
    for p in ints.values():
        s = -(p.low + p.high)
        if shift2 is None:
            shift2 = s
        elif shift2 != s:
            raise NormalizationFailed(
                "coordinates demand different bar-centering shifts",
                root=list(alpha.vector))
    if shift2 % 2 != 0:
        raise NormalizationFailed(
            "bar-centering shift is a half-integer", root=list(alpha.vector))
    m = shift2 // 2
    out = {w: p.shift(m) for w, p in ints.items()}
    for w, p in out.items():
        if p.bar() != p:
            raise NormalizationFailed(
                f"coordinate at {w} is not bar-symmetric", root=list(alpha.vector))
    signs = {1 if p.is_nonneg() else -1 if (-p).is_nonneg() else 0
             for p in out.values()}
    if signs == {-1}:
        out = {w: -p for w, p in out.items()}
    elif signs != {1}:
        raise NormalizationFailed(
            "coordinates are not uniformly nonnegative", root=list(alpha.vector))
    return out


def _coords_equal(a, b):
    ca = {w: c for w, c in a.vec.coordinates().items() if not c.is_zero}
    cb = {w: c for w, c in b.vec.coordinates().items() if not c.is_zero}
    return ca == cb


def _exact_ratio(x, target):
    """Scalar g with x = g * target on coordinates, or None."""
    xt = {w: c for w, c in x.vec.coordinates().items() if not c.is_zero}
    tt = {w: c for w, c in target.vec.coordinates().items() if not c.is_zero}
    if set(xt) != set(tt) or not tt:
        return None
    g = None
    for w, c in tt.items():
        ratio = xt[w] / c
        if g is None:
            g = ratio
        elif g != ratio:
            return None
    if g is None or g.is_zero:
        return None
    return g


def _ratfunc_inverse(mat):
    from .linalg import ratfunc_matrix_inverse
    return ratfunc_matrix_inverse(mat)
