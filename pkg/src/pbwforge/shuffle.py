"""The algebra f and its graded dual in word coordinates.

An element of f is carried in two coordinate systems at once: its
theta-expansion (free-algebra coefficients, multiplied by concatenation)
and its form-embedding x -> (<x, theta_w>)_w (multiplied by the q-twisted
shuffle).  Characters of modules live in the same word space on the dual
side.  Keeping both sides lets every pairing be a plain dot product, so no
linear system is solved on the hot path.

Vectors store a single rational prefactor times a Laurent coordinate
table; all denominators ((1-q^2)-powers, quantum integers from divided
powers) live in the prefactor.
"""

from __future__ import annotations

import os
import zlib
from dataclasses import dataclass
from itertools import combinations

from .exactq import LaurentPoly, RatFunc, q_binom, q_factorial, poly_gcd
from .linalg import (
    eval_matrix_mod,
    ff_solve,
    modp_pivot_columns,
    modp_rank,
    modp_rank_incremental,
    InconsistentSystem,
)
from .roots import wt_height, wt_sub

FSIDE = "f"
DUAL = "dual"


class WeightMismatch(ValueError):
    pass


class WeightOverflowGuard(RuntimeError):
    pass


class CacheCorrupt(RuntimeError):
    pass


def word_weight(n, word):
    out = [0] * n
    for i in word:
        out[i] += 1
    return tuple(out)


# -- prefactored coordinate vectors -------------------------------------------


def _common_pref(a, b):
    """g, fa, fb with a = g*fa, b = g*fb and fa, fb Laurent."""
    gn = poly_gcd(a.num, b.num)
    gd = poly_gcd(a.den, b.den)
    dl = a.den * b.den.divide_exact(gd)
    g = RatFunc(gn, dl)
    fa = (a / g).to_laurent()
    fb = (b / g).to_laurent()
    return g, fa, fb


class PrefVec:
    """pref * table, pref a RatFunc and table a dict word -> LaurentPoly."""

    __slots__ = ("pref", "table")

    def __init__(self, pref=None, table=None):
        self.pref = pref if pref is not None else RatFunc.one()
        self.table = {}
        if table:
            for w, p in table.items():
                if p and not p.is_zero:
                    self.table[w] = p
        if not self.table:
            self.pref = RatFunc.one()

    @property
    def is_zero(self):
        return not self.table

    def copy(self):
        return PrefVec(self.pref, dict(self.table))

    def coordinate(self, word):
        p = self.table.get(word)
        if p is None:
            return RatFunc.zero()
        return self.pref * p

    def coordinates(self):
        return {w: self.pref * p for w, p in sorted(self.table.items())}

    def support(self):
        return sorted(self.table)

    def scaled(self, c):
        if isinstance(c, LaurentPoly):
            c = RatFunc(c)
        elif isinstance(c, int):
            c = RatFunc(c)
        if c.is_zero or self.is_zero:
            return PrefVec()
        return PrefVec(self.pref * c, self.table)

    def add(self, other):
        if self.is_zero:
            return other.copy()
        if other.is_zero:
            return self.copy()
        g, fa, fb = _common_pref(self.pref, other.pref)
        out = {}
        for w, p in self.table.items():
            out[w] = p * fa
        for w, p in other.table.items():
            got = out.get(w)
            t = p * fb
            out[w] = t if got is None else got + t
        return PrefVec(g, out)

    def sub(self, other):
        return self.add(other.scaled(-1))

    def bar(self):
        return PrefVec(self.pref.bar(), {w: p.bar() for w, p in self.table.items()})

    def dot(self, other):
        """Plain coordinate dot product, a RatFunc."""
        if self.is_zero or other.is_zero:
            return RatFunc.zero()
        small, big = (self.table, other.table) if len(self.table) < len(other.table) \
            else (other.table, self.table)
        acc = LaurentPoly.zero()
        for w, p in small.items():
            q = big.get(w)
            if q is not None:
                acc = acc + p * q
        if acc.is_zero:
            return RatFunc.zero()
        return self.pref * other.pref * acc

    def primitive(self):
        """Extract integer content into the prefactor (canonical-ish form)."""
        if self.is_zero:
            return self
        from math import gcd
        g = 0
        for p in self.table.values():
            g = gcd(g, abs(p.content()))
        if g in (0, 1):
            return self
        return PrefVec(self.pref * g,
                       {w: LaurentPoly(p.low, [c // g for c in p.coeffs])
                        for w, p in self.table.items()})


@dataclass
class ShuffleVec:
    """A graded word-coefficient vector: an element of f or a character.

    f-side vectors also carry their theta-expansion so that the bilinear
    form and the f-f* evaluation pairing are dot products.
    """

    weight: tuple
    side: str
    vec: PrefVec
    theta: PrefVec = None

    @property
    def is_zero(self):
        return self.vec.is_zero and (self.theta is None or self.theta.is_zero)

    def coordinate(self, word):
        return self.vec.coordinate(word)

    def coordinates(self):
        return self.vec.coordinates()

    def scaled(self, c):
        return ShuffleVec(self.weight, self.side, self.vec.scaled(c),
                          self.theta.scaled(c) if self.theta is not None else None)

    def add(self, other):
        if self.weight != other.weight or self.side != other.side:
            raise WeightMismatch("cannot add vectors of different weight or side")
        th = None
        if self.theta is not None and other.theta is not None:
            th = self.theta.add(other.theta)
        return ShuffleVec(self.weight, self.side, self.vec.add(other.vec), th)

    def sub(self, other):
        return self.add(other.scaled(-1))

    def laurent_coordinates(self):
        """Coordinates as honest Laurent polynomials; NotDivisible if any is not."""
        return {w: c.to_laurent() for w, c in self.vec.coordinates().items()}

    def is_nonneg_integral(self):
        try:
            coords = self.laurent_coordinates()
        except Exception:
            return False
        return all(p.is_nonneg() for p in coords.values())


# -- the algebra ---------------------------------------------------------------


class ShuffleAlgebra:
    """Quantum shuffle arithmetic over a fixed Cartan datum."""

    def __init__(self, cartan, max_height=40, cache_dir=None):
        self.cartan = cartan
        self.max_height = max_height
        self.cache_dir = cache_dir
        self._words = {}
        self._plans = {}
        self._columns = {}   # word -> Laurent table of its embedding (pref implied)
        self._grams = {}
        self._serre_checked = False
        self.one_minus_q2 = LaurentPoly.from_dict({0: 1, 2: -1})

    # -- word enumeration ---------------------------------------------------

    def words_of_weight(self, nu):
        got = self._words.get(nu)
        if got is not None:
            return got
        letters = [i for i in range(self.cartan.n) for _ in range(nu[i])]
        n = len(letters)
        out = set()

        def rec(prefix, remaining):
            if not remaining:
                out.add(tuple(prefix))
                return
            seen = set()
            for k, l in enumerate(remaining):
                if l in seen:
                    continue
                seen.add(l)
                rec(prefix + [l], remaining[:k] + remaining[k + 1:])

        rec([], letters)
        got = tuple(sorted(out))
        self._words[nu] = got
        return got

    # -- shuffle product ------------------------------------------------------

    def _plan(self, nu, lam):
        key = (nu, lam)
        got = self._plans.get(key)
        if got is not None:
            return got
        mu = wt_sub(nu, lam)
        n = wt_height(nu)
        k = wt_height(lam)
        pairing = self.cartan.pairing
        plan = []
        for u in self.words_of_weight(lam):
            for v in self.words_of_weight(mu):
                for S in combinations(range(n), k):
                    w = [None] * n
                    for pos, letter in zip(S, u):
                        w[pos] = letter
                    it = iter(v)
                    sset = set(S)
                    for pos in range(n):
                        if w[pos] is None:
                            w[pos] = next(it)
                    e = 0
                    for kk in S:
                        lk = w[kk]
                        row = pairing[lk]
                        for ll in range(kk):
                            if ll not in sset:
                                e += row[w[ll]]
                    plan.append((tuple(w), u, v, e))
        self._plans[key] = plan
        return plan

    def _table_mul(self, ta, tb, nu, lam):
        """Shuffle product of two Laurent tables (weights lam and nu-lam)."""
        acc = {}
        for w, u, v, e in self._plan(nu, lam):
            pa = ta.get(u)
            if pa is None:
                continue
            pb = tb.get(v)
            if pb is None:
                continue
            t = (pa * pb).shift(e)
            cur = acc.get(w)
            acc[w] = t if cur is None else cur + t
        return {w: p for w, p in acc.items() if not p.is_zero}

    def mul(self, a, b):
        """The q-twisted shuffle product; concatenation on the theta side."""
        if a.side != b.side:
            raise WeightMismatch("sides differ")
        nu = tuple(x + y for x, y in zip(a.weight, b.weight))
        if wt_height(nu) > self.max_height:
            raise WeightOverflowGuard(f"product weight {nu} exceeds bound {self.max_height}")
        if a.is_zero or b.is_zero:
            return self.zero(nu, a.side)
        table = self._table_mul(a.vec.table, b.vec.table, nu, a.weight)
        vec = PrefVec(a.vec.pref * b.vec.pref, table)
        theta = None
        if a.theta is not None and b.theta is not None:
            tt = {}
            for w1, p1 in a.theta.table.items():
                for w2, p2 in b.theta.table.items():
                    w = w1 + w2
                    t = p1 * p2
                    cur = tt.get(w)
                    tt[w] = t if cur is None else cur + t
            theta = PrefVec(a.theta.pref * b.theta.pref, tt)
        return ShuffleVec(nu, a.side, vec, theta)

    def product(self, factors, side_hint=None):
        out = None
        for f in factors:
            out = f if out is None else self.mul(out, f)
        if out is None:
            return self.one(FSIDE if side_hint is None else side_hint)
        return out

    # -- constructors ---------------------------------------------------------

    def zero(self, nu, side):
        return ShuffleVec(nu, side, PrefVec(), PrefVec() if side == FSIDE else None)

    def one(self, side):
        nu = (0,) * self.cartan.n
        unit = PrefVec(RatFunc.one(), {(): LaurentPoly.const(1)})
        return ShuffleVec(nu, side, unit, unit.copy() if side == FSIDE else None)

    def char_unit(self, word, coeff=None):
        """Dual-side basis vector at a word."""
        nu = word_weight(self.cartan.n, word)
        c = coeff if coeff is not None else LaurentPoly.const(1)
        return ShuffleVec(nu, DUAL, PrefVec(RatFunc.one(), {word: c}))

    def theta_vec(self, i):
        """v(theta_i) = (1-q^2)^{-1} unit_i together with its theta-expansion."""
        w = (i,)
        nu = word_weight(self.cartan.n, w)
        vec = PrefVec(RatFunc(1, self.one_minus_q2), {w: LaurentPoly.const(1)})
        theta = PrefVec(RatFunc.one(), {w: LaurentPoly.const(1)})
        return ShuffleVec(nu, FSIDE, vec, theta)

    def divided_power_letter(self, i, n):
        """v(theta_i^{(n)}) = v(theta_i)^n / [n]!."""
        if n == 0:
            return self.one(FSIDE)
        out = self.theta_vec(i)
        for _ in range(n - 1):
            out = self.mul(out, self.theta_vec(i))
        return out.scaled(RatFunc(1, q_factorial(n)))

    # -- embedding ------------------------------------------------------------

    def column_table(self, word):
        """Laurent table of v(theta_word) with the (1-q^2)^{-len} prefactor implied."""
        got = self._columns.get(word)
        if got is not None:
            return got
        if not word:
            got = {(): LaurentPoly.const(1)}
        else:
            prefix = self.column_table(word[:-1])
            i = word[-1]
            nu = word_weight(self.cartan.n, word)
            lam = word_weight(self.cartan.n, word[:-1])
            got = self._table_mul(prefix, {(i,): LaurentPoly.const(1)}, nu, lam)
        self._columns[word] = got
        return got

    def embed_word(self, word):
        nu = word_weight(self.cartan.n, word)
        ht = len(word)
        vec = PrefVec(RatFunc(1, self.one_minus_q2 ** ht), dict(self.column_table(word)))
        theta = PrefVec(RatFunc.one(), {word: LaurentPoly.const(1)})
        return ShuffleVec(nu, FSIDE, vec, theta)

    def embed_theta(self, theta, nu):
        """Embed a theta-expansion: vec = sum_w c_w * v(theta_w)."""
        ht = wt_height(nu)
        acc = {}
        for w, c in theta.table.items():
            col = self.column_table(w)
            for ww, p in col.items():
                t = c * p
                cur = acc.get(ww)
                acc[ww] = t if cur is None else cur + t
        vec = PrefVec(theta.pref * RatFunc(1, self.one_minus_q2 ** ht),
                      {w: p for w, p in acc.items() if not p.is_zero})
        return ShuffleVec(nu, FSIDE, vec, theta.copy())

    # -- pairings and involutions ----------------------------------------------

    def f_pair(self, x, y):
        """<x, y>: Lusztig form for y on the f side, evaluation pairing for a character."""
        if x.side != FSIDE or x.theta is None:
            raise WeightMismatch("f_pair needs an f-side left argument with theta data")
        if x.weight != y.weight:
            raise WeightMismatch(f"weights differ: {x.weight} vs {y.weight}")
        return x.theta.dot(y.vec)

    def bar_f(self, x):
        """Bar on f: fixes every theta_w, conjugates coefficients."""
        if x.side != FSIDE or x.theta is None:
            raise WeightMismatch("bar_f needs an f-side vector with theta data")
        return self.embed_theta(x.theta.bar(), x.weight)

    def bar_dual(self, x):
        """Bar on characters: coefficientwise q -> q^{-1}."""
        if x.side != DUAL:
            raise WeightMismatch("bar_dual acts on dual-side vectors")
        return ShuffleVec(x.weight, DUAL, x.vec.bar())

    def deconcat(self, x, lam, mu):
        """Coproduct component: table (w1, w2) -> coefficient of w1.w2 in x."""
        if tuple(a + b for a, b in zip(lam, mu)) != x.weight:
            raise WeightMismatch(f"{lam} + {mu} != {x.weight}")
        k = wt_height(lam)
        out = {}
        n = self.cartan.n
        for w, p in x.vec.table.items():
            w1, w2 = w[:k], w[k:]
            if word_weight(n, w1) == lam:
                out[(w1, w2)] = x.vec.pref * p
        return out

    def restriction_support(self, x):
        """All weights mu with a nonzero deconcat(x, mu, nu-mu) component."""
        n = self.cartan.n
        supp = set()
        for w in x.vec.table:
            for k in range(len(w) + 1):
                supp.add(word_weight(n, w[:k]))
        return sorted(supp)

    # -- membership in the image of the form -----------------------------------

    def solve_membership(self, x):
        """Find a theta-expansion of a raw vector, or raise InconsistentSystem.

        Used for externally supplied vectors; engine-built f-side vectors
        already carry theta data.
        """
        nu = x.weight
        words = self.words_of_weight(nu)
        gram = self.gram(nu)
        N = gram.n_rows
        idx = {w: i for i, w in enumerate(words)}
        ht = wt_height(nu)
        target = [RatFunc.zero()] * len(words)
        for w, c in x.vec.coordinates().items():
            target[idx[w]] = c * RatFunc(self.one_minus_q2 ** ht)
        sol = cols = None
        for q0 in (3, 7, None):
            cols = (modp_pivot_columns(eval_matrix_mod(N, q0)) if q0 is not None
                    else list(range(len(words))))
            rows = [[N[i][j] for j in cols] for i in range(len(words))]
            try:
                sol = ff_solve(rows, target)
                break
            except InconsistentSystem:
                if q0 is None:
                    raise
        assert sol is not None
        theta = PrefVec(RatFunc.one(), {})
        table = {}
        pref = None
        # repackage RatFunc solution as prefactored Laurent data
        dens = LaurentPoly.const(1)
        for s in sol:
            dens = dens * s.den.divide_exact(poly_gcd(dens, s.den))
        for j, s in enumerate(sol):
            if s.is_zero:
                continue
            table[words[cols[j]]] = s.num * dens.divide_exact(s.den)
        theta = PrefVec(RatFunc(1, dens), table)
        return ShuffleVec(nu, FSIDE, x.vec.copy(), theta)

    # -- Gram matrices ----------------------------------------------------------

    def gram(self, nu):
        got = self._grams.get(nu)
        if got is not None:
            return got
        g = None
        if self.cache_dir:
            g = _load_gram_cache(self.cache_dir, self.cartan, nu, self)
        if g is None:
            g = self._build_gram(nu)
            if self.cache_dir:
                _store_gram_cache(self.cache_dir, self.cartan, nu, g)
        self._grams[nu] = g
        return g

    def _build_gram(self, nu):
        words = self.words_of_weight(nu)
        ht = wt_height(nu)
        n = len(words)
        idx = {w: i for i, w in enumerate(words)}
        N = [[LaurentPoly.zero()] * n for _ in range(n)]
        for j, w in enumerate(words):
            col = self.column_table(w)
            for ww, p in col.items():
                N[idx[ww]][j] = p
        return GramMatrix(nu, words, N, ht, self)

    # -- Serre relations ----------------------------------------------------------

    def serre_table(self, i, j):
        """Theta table of the quantum Serre element for the pair i != j."""
        a = self.cartan.pairing[i][j]
        m = 1 - a
        out = {}
        for k in range(m + 1):
            w = (i,) * k + (j,) + (i,) * (m - k)
            c = q_binom(m, k)
            if k % 2:
                c = -c
            out[w] = out.get(w, LaurentPoly.zero()) + c
        return {w: c for w, c in out.items() if not c.is_zero}

    def check_serre_relations(self):
        """Embed each Serre element once and demand zero (exact)."""
        if self._serre_checked:
            return True
        for i in range(self.cartan.n):
            for j in range(self.cartan.n):
                if i == j:
                    continue
                t = self.serre_table(i, j)
                nu = word_weight(self.cartan.n, next(iter(t)))
                v = self.embed_theta(PrefVec(RatFunc.one(), t), nu)
                if not v.vec.is_zero:
                    raise AssertionError(f"Serre element for ({i},{j}) does not vanish")
        self._serre_checked = True
        return True

    def serre_generators(self, nu):
        """Sparse theta-tables spanning (conjecturally all of) the form radical at nu."""
        self.check_serre_relations()
        n = self.cartan.n
        gens = []
        for i in range(n):
            for j in range(n):
                if i == j:
                    continue
                st = self.serre_table(i, j)
                swt = word_weight(n, next(iter(st)))
                rest = wt_sub(nu, swt)
                if any(x < 0 for x in rest):
                    continue
                # all splits rest = left + right
                for left in self._sub_weights(rest):
                    right = wt_sub(rest, left)
                    for u in self.words_of_weight(left):
                        for v in self.words_of_weight(right):
                            g = {}
                            for w, c in st.items():
                                key = u + w + v
                                g[key] = g.get(key, LaurentPoly.zero()) + c
                            gens.append(g)
        return gens

    def _sub_weights(self, nu):
        ranges = [range(x + 1) for x in nu]
        out = [()]
        for r in ranges:
            out = [t + (v,) for t in out for v in r]
        return out


# -- Gram matrix ----------------------------------------------------------------


class GramMatrix:
    """<theta_w, theta_w'> on the words of a weight, as N * (1-q^2)^{-ht}."""

    def __init__(self, weight, words, n_rows, ht, algebra):
        self.weight = weight
        self.words = words
        self.n_rows = n_rows
        self.ht = ht
        self.algebra = algebra
        self._rank = None
        self._rank_method = None

    def entry(self, i, j):
        return RatFunc(self.n_rows[i][j], self.algebra.one_minus_q2 ** self.ht)

    def check_symmetric(self):
        n = len(self.words)
        for i in range(n):
            for j in range(i):
                if self.n_rows[i][j] != self.n_rows[j][i]:
                    return False
        return True

    def rank_certified(self, expected=None):
        """Exact rank over Q(q), certified by a two-sided mod-p sandwich.

        Lower bound: rank of an integer evaluation.  Upper bound: the
        evaluated rank of the Serre radical generators (each verified to be
        an exact kernel vector through the algebra-map property).  When the
        bounds do not meet, fall back to exact fraction-free elimination.
        """
        if self._rank is not None:
            return self._rank
        n = len(self.words)
        if n == 0:
            self._rank = 0
            return 0
        gens = self.algebra.serre_generators(self.weight)
        best_lower, best_null = 0, 0
        for q0 in (3, 5, 19):
            lower = modp_rank(eval_matrix_mod(self.n_rows, q0))
            zero = LaurentPoly.zero()
            rows = [[g.get(w, zero).eval_mod(q0, 2_147_483_647) for w in self.words]
                    for g in gens]
            null = modp_rank_incremental(iter(rows), n) if gens else 0
            best_lower = max(best_lower, lower)
            best_null = max(best_null, null)
            if best_lower + best_null == n:
                self._rank = best_lower
                self._rank_method = "sandwich"
                return self._rank
        from .linalg import ff_rank
        self._rank = ff_rank(self.n_rows)
        self._rank_method = "bareiss"
        return self._rank


# -- disk cache -------------------------------------------------------------------

_GRAM_HEADER = "PBWFORGE-GRAM v1"


def _gram_path(cache_dir, cartan, nu):
    name = f"gram_{cartan.content_hash()}_{'-'.join(str(x) for x in nu)}.txt"
    return os.path.join(cache_dir, name)


def _store_gram_cache(cache_dir, cartan, nu, gram):
    os.makedirs(cache_dir, exist_ok=True)
    lines = []
    n = len(gram.words)
    ht = gram.ht
    den = gram.algebra.one_minus_q2 ** ht
    for i in range(n):
        for j in range(n):
            r = RatFunc(gram.n_rows[i][j], den)
            lines.append(f"{i}\t{j}\t{r.num.render()}\t{r.den.render()}")
    body = "\n".join(lines) + "\n"
    crc = zlib.crc32(body.encode()) & 0xFFFFFFFF
    head = (f"{_GRAM_HEADER}\ncartan={cartan.content_hash()}\n"
            f"nu={','.join(str(x) for x in nu)}\nwords={n}\n")
    path = _gram_path(cache_dir, cartan, nu)
    tmp = path + ".tmp"
    with open(tmp, "w") as fh:
        fh.write(head + body + f"crc={crc:08x}\n")
    os.replace(tmp, path)


def _load_gram_cache(cache_dir, cartan, nu, algebra):
    path = _gram_path(cache_dir, cartan, nu)
    if not os.path.exists(path):
        return None
    try:
        with open(path) as fh:
            text = fh.read()
        lines = text.splitlines()
        if lines[0] != _GRAM_HEADER:
            raise CacheCorrupt("bad header")
        if lines[1] != f"cartan={cartan.content_hash()}":
            raise CacheCorrupt("cartan hash mismatch")
        if lines[2] != f"nu={','.join(str(x) for x in nu)}":
            raise CacheCorrupt("weight mismatch")
        nwords = int(lines[3].split("=", 1)[1])
        crc_line = lines[-1]
        if not crc_line.startswith("crc="):
            raise CacheCorrupt("missing crc")
        body = "\n".join(lines[4:-1]) + "\n"
        if zlib.crc32(body.encode()) & 0xFFFFFFFF != int(crc_line[4:], 16):
            raise CacheCorrupt("crc mismatch")
        words = algebra.words_of_weight(nu)
        if len(words) != nwords:
            raise CacheCorrupt("word count mismatch")
        ht = wt_height(nu)
        den = algebra.one_minus_q2 ** ht
        N = [[LaurentPoly.zero()] * nwords for _ in range(nwords)]
        for line in lines[4:-1]:
            i_s, j_s, num_s, den_s = line.split("\t")
            r = RatFunc(LaurentPoly.parse(num_s), LaurentPoly.parse(den_s))
            N[int(i_s)][int(j_s)] = (r * RatFunc(den)).to_laurent()
        return GramMatrix(nu, words, N, ht, algebra)
    except CacheCorrupt:
        try:
            os.remove(path)
        except OSError:
            pass
        return None
    except (ValueError, IndexError, OSError):
        try:
            os.remove(path)
        except OSError:
            pass
        return None
