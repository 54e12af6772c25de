"""Symmetric affine Cartan data and positive-root combinatorics.

Weights are plain tuples of ints indexed by the node list.  The projection
to the finite subsystem drops the affine coordinate after subtracting the
right multiple of delta; every module in the package shares that section.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from fractions import Fraction


class InvalidRank(ValueError):
    pass


class NotAFiniteRoot(ValueError):
    pass


class NotReduced(ValueError):
    pass


class NotAPositiveSystem(ValueError):
    pass


def wt_add(a, b):
    return tuple(x + y for x, y in zip(a, b))


def wt_sub(a, b):
    return tuple(x - y for x, y in zip(a, b))


def wt_scale(k, a):
    return tuple(k * x for x in a)


def wt_height(a):
    return sum(a)


def wt_is_nonneg(a):
    return all(x >= 0 for x in a)


REAL = "real"
IMAGINARY = "imaginary"


@dataclass(frozen=True)
class Root:
    vector: tuple
    kind: str           # REAL or IMAGINARY
    n: int              # for imaginary roots, vector == n*delta
    height: int
    mult: int

    def is_real(self):
        return self.kind == REAL

    def is_imaginary(self):
        return self.kind == IMAGINARY


def _extended_edges(type_tag, rank):
    """Adjacency list of the extended Dynkin diagram; node 0 is affine."""
    if type_tag == "A":
        if rank < 1:
            raise InvalidRank("affine A_n needs n >= 1")
        if rank == 1:
            return 2, [(0, 1), (0, 1)]  # double bond: pairing -2
        n = rank
        edges = [(i, i + 1) for i in range(n)] + [(0, n)]
        return n + 1, edges
    if type_tag == "D":
        if rank < 4:
            raise InvalidRank("affine D_n needs n >= 4")
        n = rank
        # finite D_n: chain 2-3-...-(n-2) with forks {1, 0-spot} at node 2
        # and {n-1, n} at node n-2; affine node 0 mirrors node 1.
        edges = [(0, 2), (1, 2)]
        edges += [(i, i + 1) for i in range(2, n - 2)]
        edges += [(n - 2, n - 1), (n - 2, n)]
        return n + 1, edges
    if type_tag == "E":
        if rank not in (6, 7, 8):
            raise InvalidRank("affine E_n needs n in {6,7,8}")
        # Bourbaki labels 1..rank; branch node 4 carries node 2.
        chain = {6: [1, 3, 4, 5, 6], 7: [1, 3, 4, 5, 6, 7], 8: [1, 3, 4, 5, 6, 7, 8]}[rank]
        edges = [(chain[k], chain[k + 1]) for k in range(len(chain) - 1)]
        edges.append((2, 4))
        attach = {6: 2, 7: 1, 8: 8}[rank]
        edges.append((0, attach))
        return rank + 1, edges
    raise InvalidRank(f"unknown affine family {type_tag!r}")


def _integer_kernel(matrix):
    """Primitive integer kernel vector of a corank-1 symmetric integer matrix."""
    n = len(matrix)
    rows = [[Fraction(x) for x in row] for row in matrix]
    pivots = []
    r = 0
    for c in range(n):
        pr = next((i for i in range(r, n) if rows[i][c] != 0), None)
        if pr is None:
            continue
        rows[r], rows[pr] = rows[pr], rows[r]
        pv = rows[r][c]
        rows[r] = [x / pv for x in rows[r]]
        for i in range(n):
            if i != r and rows[i][c] != 0:
                f = rows[i][c]
                rows[i] = [x - f * y for x, y in zip(rows[i], rows[r])]
        pivots.append(c)
        r += 1
    free = [c for c in range(n) if c not in pivots]
    if len(free) != 1:
        raise InvalidRank(f"pairing matrix has corank {len(free)}, expected 1")
    fc = free[0]
    vec = [Fraction(0)] * n
    vec[fc] = Fraction(1)
    for i, c in enumerate(pivots):
        vec[c] = -rows[i][fc]
    from math import gcd
    den = 1
    for x in vec:
        den = den * x.denominator // gcd(den, x.denominator)
    ints = [int(x * den) for x in vec]
    g = 0
    for x in ints:
        g = gcd(g, abs(x))
    ints = [x // g for x in ints]
    if sum(ints) < 0:
        ints = [-x for x in ints]
    if not all(x > 0 for x in ints):
        raise InvalidRank("kernel vector is not strictly positive")
    return tuple(ints)


def _is_positive_definite(matrix):
    # Sylvester: all leading principal minors positive (Fraction elimination)
    n = len(matrix)
    rows = [[Fraction(x) for x in row] for row in matrix]
    for k in range(n):
        if rows[k][k] <= 0:
            return False
        for i in range(k + 1, n):
            f = rows[i][k] / rows[k][k]
            for j in range(k, n):
                rows[i][j] -= f * rows[k][j]
    return True


class CartanDatum:
    """Index set with symmetric pairing, of symmetric affine (ADE-extended) type."""

    def __init__(self, type_tag, rank, pairing):
        self.type_tag = type_tag
        self.rank = rank
        self.pairing = tuple(tuple(row) for row in pairing)
        self.n = len(self.pairing)
        for i in range(self.n):
            if self.pairing[i][i] != 2:
                raise InvalidRank("diagonal of the pairing must be 2")
            for j in range(self.n):
                if self.pairing[i][j] != self.pairing[j][i]:
                    raise InvalidRank("pairing must be symmetric")
                if i != j and self.pairing[i][j] > 0:
                    raise InvalidRank("off-diagonal pairing must be <= 0")
        self.delta = _integer_kernel(self.pairing)
        self.affine_node = self._detect_affine_node()
        self.finite_nodes = tuple(i for i in range(self.n) if i != self.affine_node)

    def _detect_affine_node(self):
        for i in range(self.n):
            if self.delta[i] != 1:
                continue
            sub = [[self.pairing[a][b] for b in range(self.n) if b != i]
                   for a in range(self.n) if a != i]
            if _is_positive_definite(sub):
                return i
        raise InvalidRank("no affine node found")

    # -- bilinear form -----------------------------------------------------

    def dot(self, a, b):
        total = 0
        for i, x in enumerate(a):
            if x:
                row = self.pairing[i]
                total += x * sum(row[j] * y for j, y in enumerate(b) if y)
        return total

    def norm(self, a):
        return self.dot(a, a)

    def simple_root(self, i):
        return tuple(1 if j == i else 0 for j in range(self.n))

    # -- projection to the finite subsystem --------------------------------

    def project(self, nu):
        """p(nu): subtract nu_a * delta, then drop the affine coordinate."""
        k = nu[self.affine_node]
        shifted = wt_sub(nu, wt_scale(k, self.delta))
        return tuple(shifted[j] for j in self.finite_nodes)

    def embed_finite(self, beta):
        """Inverse of coordinate-dropping: finite vector -> full lattice, 0 at the affine node."""
        out = [0] * self.n
        for j, x in zip(self.finite_nodes, beta):
            out[j] = x
        return tuple(out)

    def finite_pairing(self):
        return [[self.pairing[a][b] for b in self.finite_nodes] for a in self.finite_nodes]

    def is_finite_root(self, beta):
        if len(beta) != self.n - 1 or not all(isinstance(x, int) for x in beta):
            return False
        v = self.embed_finite(beta)
        return self.norm(v) == 2

    def lift(self, beta):
        """Minimal positive real root projecting to the finite root beta."""
        if not self.is_finite_root(beta):
            raise NotAFiniteRoot(f"{beta} is not a root of the finite subsystem")
        v = self.embed_finite(beta)
        k = max(0, max(-(v[j] // self.delta[j]) if v[j] < 0 else 0 for j in range(self.n)))
        while not wt_is_nonneg(wt_add(v, wt_scale(k, self.delta))):
            k += 1
        return wt_add(v, wt_scale(k, self.delta))

    # -- Weyl group --------------------------------------------------------

    def reflect(self, i, nu):
        c = sum(self.pairing[i][j] * x for j, x in enumerate(nu))
        out = list(nu)
        out[i] -= c
        return tuple(out)

    def reflect_word(self, word, nu):
        for i in reversed(word):
            nu = self.reflect(i, nu)
        return nu

    def inversion_set(self, word):
        """beta_k = s_{i_1}...s_{i_{k-1}}(alpha_{i_k}); raises NotReduced on collision."""
        out = []
        seen = set()
        for k, ik in enumerate(word):
            beta = self.simple_root(ik)
            for i in reversed(word[:k]):
                beta = self.reflect(i, beta)
            if not wt_is_nonneg(beta) or beta in seen:
                raise NotReduced(f"word {word} is not reduced at position {k}")
            seen.add(beta)
            out.append(beta)
        return out

    # -- serialization -----------------------------------------------------

    def to_json(self):
        return {"type": self.type_tag, "rank": self.rank,
                "pairing": [list(r) for r in self.pairing]}

    @staticmethod
    def from_json(obj):
        return CartanDatum(obj["type"], obj["rank"], obj["pairing"])

    def content_hash(self):
        blob = json.dumps(self.to_json(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    def __repr__(self):
        return f"CartanDatum({self.type_tag}_{self.rank} affine, |I|={self.n})"


def build_cartan(type_tag, rank):
    n, edges = _extended_edges(type_tag, rank)
    pairing = [[2 if i == j else 0 for j in range(n)] for i in range(n)]
    for a, b in edges:
        pairing[a][b] -= 1
        pairing[b][a] -= 1
    return CartanDatum(type_tag, rank, pairing)


def positive_roots_up_to(cartan, height_bound):
    """All positive roots of height <= bound, by brute-force norm scan.

    Real roots are exactly the norm-2 points of the root lattice in symmetric
    type; imaginary roots are the multiples of delta, multiplicity |I|-1.
    """
    if height_bound < 1:
        raise ValueError("height bound must be >= 1")
    n = cartan.n
    out = []

    def scan(prefix, remaining):
        if len(prefix) == n:
            nu = tuple(prefix)
            h = wt_height(nu)
            if h == 0:
                return
            norm = cartan.norm(nu)
            if norm == 2:
                out.append(Root(nu, REAL, 0, h, 1))
            else:
                dh = wt_height(cartan.delta)
                if h % dh == 0:
                    k = h // dh
                    if nu == wt_scale(k, cartan.delta):
                        out.append(Root(nu, IMAGINARY, k, h, n - 1))
            return
        for v in range(remaining + 1):
            scan(prefix + [v], remaining - v)

    scan([], height_bound)
    out.sort(key=lambda r: (r.height, r.vector))
    return out


def root_from_vector(cartan, nu):
    h = wt_height(nu)
    if cartan.norm(nu) == 2 and wt_is_nonneg(nu):
        return Root(tuple(nu), REAL, 0, h, 1)
    dh = wt_height(cartan.delta)
    if h > 0 and h % dh == 0:
        k = h // dh
        if tuple(nu) == wt_scale(k, cartan.delta):
            return Root(tuple(nu), IMAGINARY, k, h, cartan.n - 1)
    raise ValueError(f"{nu} is not a positive root")


@dataclass(frozen=True)
class ChamberCoweight:
    coweight: tuple          # Fractions on the finite nodes, functional on finite coords
    plus_lift: tuple         # omega_+ as a full weight vector
    minus_lift: tuple        # omega_- as a full weight vector
    simple: tuple            # the finite simple root it is dual to

    def pair_finite(self, beta):
        return sum(c * x for c, x in zip(self.coweight, beta))


def positive_system_simples(cartan, system):
    system = {tuple(b) for b in system}
    finite = [r for r in positive_roots_up_to(cartan, wt_height(cartan.delta) - 1)
              if r.is_real()]
    finite_roots = set()
    for r in finite:
        p = cartan.project(r.vector)
        if any(p):
            finite_roots.add(p)
            finite_roots.add(tuple(-x for x in p))
    half = len(finite_roots) // 2
    if len(system) != half:
        raise NotAPositiveSystem(f"expected {half} roots, got {len(system)}")
    for b in system:
        if b not in finite_roots:
            raise NotAPositiveSystem(f"{b} is not a finite root")
        if tuple(-x for x in b) in system:
            raise NotAPositiveSystem(f"both {b} and its negative are present")
    for a in system:
        for b in system:
            s = wt_add(a, b)
            if s in finite_roots and s not in system:
                raise NotAPositiveSystem(f"{a}+{b} is a root outside the system")
    simples = []
    for b in sorted(system):
        decomposable = any(
            wt_sub(b, a) in system for a in system if a != b and wt_sub(b, a) != b)
        if not decomposable:
            simples.append(b)
    return simples


def chamber_coweights(cartan, positive_system):
    """Fundamental coweights of a finite positive system, with minimal lifts.

    One coweight per simple root of the system; pairings solved exactly
    over the rationals.
    """
    simples = positive_system_simples(cartan, positive_system)
    m = len(simples)
    if m != cartan.n - 1:
        raise NotAPositiveSystem(f"found {m} simple roots, expected {cartan.n - 1}")
    out = []
    for k in range(m):
        rows = [[Fraction(x) for x in s] for s in simples]
        rhs = [Fraction(1) if i == k else Fraction(0) for i in range(m)]
        sol = _solve_square(rows, rhs)
        w_plus = cartan.lift(simples[k])
        w_minus = cartan.lift(tuple(-x for x in simples[k]))
        assert wt_add(w_plus, w_minus) == cartan.delta
        out.append(ChamberCoweight(tuple(sol), w_plus, w_minus, simples[k]))
    return out


def _solve_square(rows, rhs):
    n = len(rows)
    aug = [rows[i] + [rhs[i]] for i in range(n)]
    for c in range(n):
        pr = next((i for i in range(c, n) if aug[i][c] != 0), None)
        if pr is None:
            raise NotAPositiveSystem("simple roots are linearly dependent")
        aug[c], aug[pr] = aug[pr], aug[c]
        pv = aug[c][c]
        aug[c] = [x / pv for x in aug[c]]
        for i in range(n):
            if i != c and aug[i][c] != 0:
                f = aug[i][c]
                aug[i] = [x - f * y for x, y in zip(aug[i], aug[c])]
    return [aug[i][n] for i in range(n)]


def roots_to_csv_rows(roots):
    rows = [["coordinates", "kind", "height", "mult"]]
    for r in roots:
        rows.append([" ".join(str(x) for x in r.vector), r.kind, str(r.height), str(r.mult)])
    return rows
