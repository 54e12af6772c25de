"""Exact arithmetic in the quantum parameter q.

LaurentPoly is Z[q, q^-1] with arbitrary-precision integer coefficients;
RatFunc is the fraction field, kept gcd-reduced so equality is structural.
Everything downstream (Gram matrices, basis transitions) sits on these two
types, so no floating point appears anywhere in the package.
"""

from __future__ import annotations

import re
from fractions import Fraction
from math import gcd


class DivisionByZero(ArithmeticError):
    pass


class NotDivisible(ArithmeticError):
    """Raised when an exact division in Z[q,q^-1] fails.

    Callers treat this as a first-class outcome: several integrality
    assertions are phrased as "this division must be exact".
    """


def _trim(low, coeffs):
    # canonical form: first and last coefficient nonzero, zero poly is ((), 0)
    i, j = 0, len(coeffs)
    while i < j and coeffs[i] == 0:
        i += 1
    while j > i and coeffs[j - 1] == 0:
        j -= 1
    if i == j:
        return 0, ()
    return low + i, tuple(coeffs[i:j])


class LaurentPoly:
    """A Laurent polynomial c_low*q^low + ... stored as (low, coeffs)."""

    __slots__ = ("low", "coeffs")

    def __init__(self, low=0, coeffs=()):
        self.low, self.coeffs = _trim(low, list(coeffs))

    # -- constructors ------------------------------------------------------

    @staticmethod
    def zero():
        return LaurentPoly(0, ())

    @staticmethod
    def const(n):
        return LaurentPoly(0, (n,))

    @staticmethod
    def q_power(e, c=1):
        return LaurentPoly(e, (c,))

    @staticmethod
    def from_dict(d):
        if not d:
            return LaurentPoly.zero()
        lo = min(d)
        hi = max(d)
        return LaurentPoly(lo, [d.get(e, 0) for e in range(lo, hi + 1)])

    # -- structure ---------------------------------------------------------

    @property
    def is_zero(self):
        return not self.coeffs

    @property
    def high(self):
        if self.is_zero:
            raise ValueError("zero polynomial has no top exponent")
        return self.low + len(self.coeffs) - 1

    def coeff(self, e):
        k = e - self.low
        if 0 <= k < len(self.coeffs):
            return self.coeffs[k]
        return 0

    def terms(self):
        return [(self.low + k, c) for k, c in enumerate(self.coeffs) if c]

    def __iter__(self):
        return iter(self.terms())

    def __eq__(self, other):
        if isinstance(other, int):
            other = LaurentPoly.const(other)
        if not isinstance(other, LaurentPoly):
            return NotImplemented
        return self.low == other.low and self.coeffs == other.coeffs

    def __hash__(self):
        return hash((self.low, self.coeffs))

    def __bool__(self):
        return not self.is_zero

    def __repr__(self):
        return f"LaurentPoly({self.render()!r})"

    # -- arithmetic --------------------------------------------------------

    def __add__(self, other):
        if isinstance(other, int):
            other = LaurentPoly.const(other)
        if not isinstance(other, LaurentPoly):
            return NotImplemented
        if self.is_zero:
            return other
        if other.is_zero:
            return self
        lo = min(self.low, other.low)
        hi = max(self.low + len(self.coeffs), other.low + len(other.coeffs))
        out = [0] * (hi - lo)
        for k, c in enumerate(self.coeffs):
            out[self.low - lo + k] += c
        for k, c in enumerate(other.coeffs):
            out[other.low - lo + k] += c
        return LaurentPoly(lo, out)

    __radd__ = __add__

    def __neg__(self):
        return LaurentPoly(self.low, [-c for c in self.coeffs])

    def __sub__(self, other):
        if isinstance(other, int):
            other = LaurentPoly.const(other)
        return self + (-other)

    def __rsub__(self, other):
        return LaurentPoly.const(other) + (-self)

    def __mul__(self, other):
        if isinstance(other, int):
            if other == 0:
                return LaurentPoly.zero()
            return LaurentPoly(self.low, [c * other for c in self.coeffs])
        if not isinstance(other, LaurentPoly):
            return NotImplemented
        if self.is_zero or other.is_zero:
            return LaurentPoly.zero()
        a, b = self.coeffs, other.coeffs
        out = [0] * (len(a) + len(b) - 1)
        for i, ca in enumerate(a):
            if ca:
                for j, cb in enumerate(b):
                    if cb:
                        out[i + j] += ca * cb
        return LaurentPoly(self.low + other.low, out)

    __rmul__ = __mul__

    def __pow__(self, n):
        if n < 0:
            raise ValueError("negative power of a Laurent polynomial")
        result = LaurentPoly.const(1)
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def shift(self, e):
        """Multiply by q^e."""
        if self.is_zero:
            return self
        return LaurentPoly(self.low + e, self.coeffs)

    def bar(self):
        """The involution q -> q^-1."""
        if self.is_zero:
            return self
        return LaurentPoly(-(self.low + len(self.coeffs) - 1),
                           tuple(reversed(self.coeffs)))

    def divide_exact(self, other):
        """Return self/other when the division is exact in Z[q,q^-1]."""
        if not isinstance(other, LaurentPoly):
            other = LaurentPoly.const(other)
        if other.is_zero:
            raise DivisionByZero("division by the zero polynomial")
        if self.is_zero:
            return self
        a = list(self.coeffs)
        b = other.coeffs
        n, m = len(a), len(b)
        if n < m:
            raise NotDivisible(f"{self.render()} not divisible by {other.render()}")
        lead = b[-1]
        out = [0] * (n - m + 1)
        for k in range(n - m, -1, -1):
            c = a[k + m - 1]
            if c % lead != 0:
                raise NotDivisible(f"{self.render()} not divisible by {other.render()}")
            t = c // lead
            out[k] = t
            if t:
                for j in range(m):
                    a[k + j] -= t * b[j]
        if any(a[:m - 1]):
            raise NotDivisible(f"{self.render()} not divisible by {other.render()}")
        return LaurentPoly(self.low - other.low, out)

    def content(self):
        """gcd of the coefficients, signed so content*primitive = self."""
        g = 0
        for c in self.coeffs:
            g = gcd(g, abs(c))
        if g and self.coeffs[-1] < 0:
            return -g
        return g

    def is_nonneg(self):
        return all(c >= 0 for c in self.coeffs)

    def is_bar_symmetric(self):
        return self == self.bar()

    # -- evaluation --------------------------------------------------------

    def eval_fraction(self, x):
        """Exact evaluation at a rational point x != 0 (Fraction arithmetic)."""
        x = Fraction(x)
        if self.is_zero:
            return Fraction(0)
        if x == 0:
            raise ZeroDivisionError("Laurent polynomial at q=0")
        acc = Fraction(0)
        for c in reversed(self.coeffs):
            acc = acc * x + c
        return acc * x ** self.low

    def eval_mod(self, q0, p):
        """Evaluation at q=q0 over F_p (q0 invertible mod p)."""
        acc = 0
        for c in reversed(self.coeffs):
            acc = (acc * q0 + c) % p
        if self.low >= 0:
            return (acc * pow(q0, self.low, p)) % p
        return (acc * pow(q0, -self.low * (p - 2), p)) % p

    # -- text grammar ------------------------------------------------------

    def render(self):
        """Bit-exact grammar: terms in increasing exponent, `c*q^e`."""
        if self.is_zero:
            return "0"
        return " + ".join(f"{c}*q^{e}" for e, c in self.terms())

    _TERM_RE = re.compile(r"^([+-]?\d+)\*q\^([+-]?\d+)$")

    @staticmethod
    def parse(text):
        text = text.strip()
        if text == "0":
            return LaurentPoly.zero()
        d = {}
        for part in text.split(" + "):
            m = LaurentPoly._TERM_RE.match(part.strip())
            if not m:
                raise ValueError(f"bad polynomial term: {part!r}")
            c, e = int(m.group(1)), int(m.group(2))
            d[e] = d.get(e, 0) + c
        return LaurentPoly.from_dict(d)


def _poly_coeffs(p):
    # p as a plain polynomial coefficient list (low must be >= 0)
    if p.is_zero:
        return []
    return [0] * p.low + list(p.coeffs)


def poly_gcd(a, b):
    """gcd in Z[q] of the polynomial parts of a and b, primitive and monic-signed.

    Subresultant-free primitive PRS; fine at the degrees this package sees.
    """
    fa = _poly_coeffs(a.shift(-a.low) if not a.is_zero else a)
    fb = _poly_coeffs(b.shift(-b.low) if not b.is_zero else b)

    def content(f):
        g = 0
        for c in f:
            g = gcd(g, abs(c))
        return g or 1

    def primitive(f):
        c = content(f)
        return [x // c for x in f]

    def trim(f):
        while f and f[-1] == 0:
            f.pop()
        return f

    def prem(f, g):
        # pseudo-remainder of f by g
        f = list(f)
        dg = len(g) - 1
        lg = g[-1]
        while len(f) - 1 >= dg and trim(f):
            df = len(f) - 1
            lf = f[-1]
            f = [c * lg for c in f]
            for j in range(dg + 1):
                f[df - dg + j] -= lf * g[j]
            f = trim(f)
            if not f:
                break
        return f

    fa, fb = trim(fa), trim(fb)
    if not fa and not fb:
        return LaurentPoly.zero()
    if not fa:
        fa, fb = fb, fa
    ca = content(fa)
    if not fb:
        g = [x // ca for x in fa]
        if g[-1] < 0:
            g = [-x for x in g]
        return LaurentPoly(0, g)
    cb = content(fb)
    cont = gcd(ca, cb)
    fa, fb = primitive(fa), primitive(fb)
    if len(fa) < len(fb):
        fa, fb = fb, fa
    while True:
        r = prem(fa, fb)
        if not r:
            break
        fa, fb = fb, primitive(r)
    if fb[-1] < 0:
        fb = [-x for x in fb]
    return LaurentPoly(0, [c * cont for c in fb])


class RatFunc:
    """A reduced fraction num/den of integer polynomials in q.

    Invariants: den != 0; gcd(num, den) is a unit (including integer content
    and powers of q); den has positive leading coefficient.  Equality is
    therefore structural.
    """

    __slots__ = ("num", "den")

    def __init__(self, num, den=None, _reduced=False):
        if isinstance(num, int):
            num = LaurentPoly.const(num)
        if den is None:
            den = LaurentPoly.const(1)
        elif isinstance(den, int):
            den = LaurentPoly.const(den)
        if den.is_zero:
            raise DivisionByZero("rational function with zero denominator")
        if _reduced:
            self.num, self.den = num, den
            return
        if num.is_zero:
            self.num, self.den = LaurentPoly.zero(), LaurentPoly.const(1)
            return
        # clear q-powers: shift both to honest polynomials sharing no q factor
        shift = min(num.low, den.low)
        num = num.shift(-shift)
        den = den.shift(-shift)
        extra = min(num.low, den.low)
        if extra:
            num = num.shift(-extra)
            den = den.shift(-extra)
        g = poly_gcd(num, den)
        if not (g == LaurentPoly.const(1)):
            num = num.divide_exact(g)
            den = den.divide_exact(g)
        cn, cd = num.content(), den.content()
        cg = gcd(abs(cn), abs(cd))
        if cd < 0:
            cg = -cg
        if cg != 1:
            num = LaurentPoly(num.low, [c // cg for c in num.coeffs])
            den = LaurentPoly(den.low, [c // cg for c in den.coeffs])
        self.num, self.den = num, den

    # -- constructors ------------------------------------------------------

    @staticmethod
    def zero():
        return RatFunc(0)

    @staticmethod
    def one():
        return RatFunc(1)

    @staticmethod
    def from_laurent(p):
        return RatFunc(p)

    @staticmethod
    def from_fraction(fr):
        fr = Fraction(fr)
        return RatFunc(LaurentPoly.const(fr.numerator), LaurentPoly.const(fr.denominator))

    # -- structure ---------------------------------------------------------

    @property
    def is_zero(self):
        return self.num.is_zero

    def __bool__(self):
        return not self.is_zero

    def __eq__(self, other):
        if isinstance(other, int):
            other = RatFunc(other)
        elif isinstance(other, LaurentPoly):
            other = RatFunc(other)
        if not isinstance(other, RatFunc):
            return NotImplemented
        return self.num == other.num and self.den == other.den

    def __hash__(self):
        return hash((self.num, self.den))

    def __repr__(self):
        return f"RatFunc({self.render()!r})"

    def render(self):
        if self.den == LaurentPoly.const(1):
            return self.num.render()
        return f"({self.num.render()}) / ({self.den.render()})"

    # -- arithmetic --------------------------------------------------------

    def _coerce(self, other):
        if isinstance(other, (int, LaurentPoly)):
            return RatFunc(other)
        if isinstance(other, RatFunc):
            return other
        return None

    def __add__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return RatFunc(self.num * o.den + o.num * self.den, self.den * o.den)

    __radd__ = __add__

    def __neg__(self):
        return RatFunc(-self.num, self.den, _reduced=True)

    def __sub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return self + (-o)

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return RatFunc(self.num * o.num, self.den * o.den)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        if o.is_zero:
            raise DivisionByZero("division by zero rational function")
        return RatFunc(self.num * o.den, self.den * o.num)

    def __rtruediv__(self, other):
        return self._coerce(other) / self

    def inverse(self):
        return RatFunc(1) / self

    def bar(self):
        return RatFunc(self.num.bar(), self.den.bar())

    # -- conversion --------------------------------------------------------

    def is_laurent(self):
        """True when self lies in Z[q,q^-1]."""
        return len(self.den.coeffs) == 1 and abs(self.den.coeffs[-1]) == 1

    def to_laurent(self):
        """Lossless conversion when is_laurent(); raises NotDivisible otherwise."""
        if not self.is_laurent():
            raise NotDivisible(f"{self.render()} is not a Laurent polynomial")
        sign = 1 if self.den.coeffs[-1] > 0 else -1
        return self.num.shift(-self.den.low) * sign

    def eval_fraction(self, x):
        return self.num.eval_fraction(x) / self.den.eval_fraction(x)

    def eval_mod(self, q0, p):
        d = self.den.eval_mod(q0, p)
        if d == 0:
            raise ZeroDivisionError("denominator vanishes at evaluation point")
        return (self.num.eval_mod(q0, p) * pow(d, p - 2, p)) % p


# -- q-combinatorics -------------------------------------------------------

Q = LaurentPoly.q_power
ONE = LaurentPoly.const(1)


def q_int(n):
    """[n] = (q^n - q^-n)/(q - q^-1) = q^(n-1) + q^(n-3) + ... + q^(1-n)."""
    if n < 0:
        raise ValueError("q_int wants n >= 0")
    if n == 0:
        return LaurentPoly.zero()
    return LaurentPoly(1 - n, [1 if k % 2 == 0 else 0 for k in range(2 * n - 1)])


def q_factorial(n):
    """[n]! = [1][2]...[n]."""
    if n < 0:
        raise ValueError("q_factorial wants n >= 0")
    out = LaurentPoly.const(1)
    for k in range(1, n + 1):
        out = out * q_int(k)
    return out


def q_binom(n, k):
    """Gaussian binomial [n choose k], a bar-symmetric Laurent polynomial."""
    if k < 0 or k > n:
        return LaurentPoly.zero()
    num = q_factorial(n)
    return num.divide_exact(q_factorial(k) * q_factorial(n - k))


def bar(p):
    """bar on either scalar type."""
    return p.bar()


def laurent_sqrt(p):
    """An exact square root of a Laurent polynomial, or None.

    The sign is normalized so the lowest coefficient is positive.
    """
    if p.is_zero:
        return LaurentPoly.zero()
    if p.low % 2:
        return None
    c = list(p.coeffs)
    n = len(c) - 1
    if n % 2:
        return None
    import math
    r0 = math.isqrt(abs(c[0]))
    if r0 * r0 != c[0]:
        return None
    out = [r0]
    for k in range(1, n // 2 + 1):
        acc = c[k] - sum(out[i] * out[k - i] for i in range(1, k) if k - i <= n // 2 and i < len(out))
        if acc % (2 * r0):
            return None
        out.append(acc // (2 * r0))
    cand = LaurentPoly(p.low // 2, out)
    if cand * cand == p:
        return cand
    return None


def ratfunc_sqrt(r):
    """Square root of a reduced rational function, or None."""
    sn = laurent_sqrt(r.num)
    sd = laurent_sqrt(r.den)
    if sn is None or sd is None:
        return None
    return RatFunc(sn, sd)
