"""Exact linear algebra helpers.

Three layers: fraction-free Bareiss elimination over Z[q,q^-1] (the
workhorse for small dense solves and kernels), fast mod-p evaluation ranks
used as one-sided certificates for large matrices, and an exact rational
simplex for cone-separation feasibility questions.
"""

from __future__ import annotations

from fractions import Fraction

import numpy as np

from .exactq import LaurentPoly, RatFunc

DEFAULT_PRIME = 2_147_483_647  # 2^31 - 1, products fit in int64 after reduction


class InconsistentSystem(ValueError):
    pass


# -- mod-p certificates ------------------------------------------------------


def eval_matrix_mod(rows, q0, p=DEFAULT_PRIME):
    """Evaluate a matrix of LaurentPoly at q=q0 over F_p as a numpy array."""
    out = np.zeros((len(rows), len(rows[0]) if rows else 0), dtype=np.int64)
    for i, row in enumerate(rows):
        for j, e in enumerate(row):
            if e and not e.is_zero:
                out[i, j] = e.eval_mod(q0, p)
    return out


def modp_rank(mat, p=DEFAULT_PRIME):
    """Rank of an integer numpy matrix over F_p (vectorized elimination)."""
    a = np.array(mat, dtype=np.int64) % p
    m, n = a.shape
    rank = 0
    row = 0
    for col in range(n):
        if row >= m:
            break
        piv = None
        for i in range(row, m):
            if a[i, col] % p:
                piv = i
                break
        if piv is None:
            continue
        a[[row, piv]] = a[[piv, row]]
        inv = pow(int(a[row, col]), p - 2, p)
        a[row] = (a[row] * inv) % p
        mask = a[row + 1:, col] != 0
        if mask.any():
            a[row + 1:][mask] = (a[row + 1:][mask] - np.outer(a[row + 1:, col][mask], a[row])) % p
        row += 1
        rank += 1
    return rank


def modp_pivot_columns(mat, p=DEFAULT_PRIME):
    """Greedy column basis over F_p: indices of a maximal independent column set."""
    a = np.array(mat, dtype=np.int64) % p
    m, n = a.shape
    pivots = []
    row = 0
    for col in range(n):
        if row >= m:
            break
        piv = None
        for i in range(row, m):
            if a[i, col] % p:
                piv = i
                break
        if piv is None:
            continue
        a[[row, piv]] = a[[piv, row]]
        inv = pow(int(a[row, col]), p - 2, p)
        a[row] = (a[row] * inv) % p
        rest = np.arange(m) != row
        col_vals = a[rest, col]
        mask = col_vals != 0
        if mask.any():
            rows_idx = np.where(rest)[0][mask]
            a[rows_idx] = (a[rows_idx] - np.outer(a[rows_idx, col], a[row])) % p
        pivots.append(col)
        row += 1
    return pivots


def modp_rank_incremental(row_iter, ncols, p=DEFAULT_PRIME, cap=None):
    """Rank of a (possibly huge) family of F_p rows fed one at a time."""
    basis = []  # reduced rows with leading-one, sorted by pivot
    pivots = {}
    for raw in row_iter:
        v = np.array(raw, dtype=np.int64) % p
        for c in sorted(pivots):
            if v[c]:
                v = (v - v[c] * pivots[c]) % p
        nz = np.nonzero(v)[0]
        if len(nz) == 0:
            continue
        c = int(nz[0])
        v = (v * pow(int(v[c]), p - 2, p)) % p
        pivots[c] = v
        basis.append(v)
        if cap is not None and len(basis) >= cap:
            break
    return len(basis)


# -- fraction-free elimination ----------------------------------------------


def ff_echelon(rows):
    """Fraction-free Bareiss echelon form of a LaurentPoly matrix.

    Returns (echelon, pivots) where pivots is a list of (row, col).  The
    echelon entries stay in Z[q,q^-1]; the number of pivots is the exact
    rank over Q(q).
    """
    a = [list(r) for r in rows]
    m = len(a)
    n = len(a[0]) if m else 0
    prev = LaurentPoly.const(1)
    pivots = []
    r = 0
    for c in range(n):
        if r >= m:
            break
        pr = next((i for i in range(r, m) if not a[i][c].is_zero), None)
        if pr is None:
            continue
        a[r], a[pr] = a[pr], a[r]
        piv = a[r][c]
        for i in range(r + 1, m):
            if all(a[i][j].is_zero for j in range(n)):
                continue
            fi = a[i][c]
            for j in range(n):
                t = a[i][j] * piv - a[r][j] * fi
                a[i][j] = t.divide_exact(prev) if not t.is_zero else t
        pivots.append((r, c))
        prev = piv
        r += 1
    return a, pivots


def ff_rank(rows):
    if not rows or not rows[0]:
        return 0
    return len(ff_echelon(rows)[1])


def _back_substitute(echelon, pivots, rhs):
    """Solve the echelon system for one RatFunc right-hand side."""
    n = len(echelon[0])
    x = [RatFunc.zero()] * n
    assigned = {c for _, c in pivots}
    for r, c in reversed(pivots):
        acc = rhs[r]
        row = echelon[r]
        for j in range(c + 1, n):
            if not row[j].is_zero and not x[j].is_zero:
                acc = acc - RatFunc(row[j]) * x[j]
        x[c] = acc / RatFunc(row[c])
    return x, assigned


def ff_kernel(rows, ncols):
    """Kernel basis over Q(q) of a LaurentPoly matrix, as RatFunc vectors."""
    if not rows:
        return [tuple(RatFunc.one() if j == k else RatFunc.zero() for j in range(ncols))
                for k in range(ncols)]
    ech, pivots = ff_echelon(rows)
    pivot_cols = [c for _, c in pivots]
    free_cols = [c for c in range(ncols) if c not in pivot_cols]
    basis = []
    for f in free_cols:
        # kernel vector with x[f] = 1, other free coords 0
        x = [RatFunc.zero()] * ncols
        x[f] = RatFunc.one()
        for r, c in reversed(pivots):
            row = ech[r]
            acc = RatFunc.zero()
            for j in range(c + 1, ncols):
                if not row[j].is_zero and not x[j].is_zero:
                    acc = acc - RatFunc(row[j]) * x[j]
            x[c] = acc / RatFunc(row[c])
        basis.append(tuple(x))
    return basis


def ff_solve(rows, rhs_col):
    """Solve M x = b exactly over Q(q); raises InconsistentSystem if unsolvable.

    M has LaurentPoly entries, b has LaurentPoly or RatFunc entries.  When
    the system is underdetermined any one solution is returned (free
    coordinates pinned to zero).
    """
    m = len(rows)
    n = len(rows[0]) if m else 0
    rhs = [e if isinstance(e, RatFunc) else RatFunc(e) for e in rhs_col]
    # augmented fraction-free elimination: track rhs through the same row ops
    a = [list(r) for r in rows]
    b = list(rhs)
    prev = LaurentPoly.const(1)
    pivots = []
    r = 0
    for c in range(n):
        if r >= m:
            break
        pr = next((i for i in range(r, m) if not a[i][c].is_zero), None)
        if pr is None:
            continue
        a[r], a[pr] = a[pr], a[r]
        b[r], b[pr] = b[pr], b[r]
        piv = a[r][c]
        rp = RatFunc(piv)
        prevr = RatFunc(prev)
        for i in range(r + 1, m):
            fi = a[i][c]
            fir = RatFunc(fi)
            for j in range(n):
                t = a[i][j] * piv - a[r][j] * fi
                a[i][j] = t.divide_exact(prev) if not t.is_zero else t
            b[i] = (b[i] * rp - b[r] * fir) / prevr
        pivots.append((r, c))
        prev = piv
        r += 1
    pivot_rows = {pr for pr, _ in pivots}
    for i in range(m):
        if i not in pivot_rows:
            if not b[i].is_zero and all(a[i][j].is_zero for j in range(n)):
                raise InconsistentSystem("inconsistent linear system")
    x, _ = _back_substitute(a, pivots, b)
    # verify rows that were skipped (defensive: underdetermined consistency)
    for i in range(m):
        if i not in pivot_rows:
            acc = RatFunc.zero()
            for j in range(n):
                if not a[i][j].is_zero and not x[j].is_zero:
                    acc = acc + RatFunc(a[i][j]) * x[j]
            if acc != b[i]:
                raise InconsistentSystem("inconsistent linear system")
    return x


def ratfunc_matrix_solve(mat, rhs_cols):
    """Solve a square RatFunc system for several right-hand sides at once.

    Denominators are cleared row by row so the elimination itself is
    fraction-free over Z[q,q^-1].
    """
    n = len(mat)
    cleared = []
    rhss = [list(col) for col in rhs_cols]
    for i in range(n):
        den = LaurentPoly.const(1)
        for e in mat[i]:
            den = den * e.den
        row = []
        for e in mat[i]:
            row.append(e.num * den.divide_exact(e.den))
        cleared.append(row)
        for col in rhss:
            col[i] = col[i] * RatFunc(den)
    out = []
    for col in rhss:
        out.append(ff_solve(cleared, col))
    return out


def ratfunc_matrix_inverse(mat):
    n = len(mat)
    eyes = [[RatFunc.one() if i == j else RatFunc.zero() for i in range(n)] for j in range(n)]
    cols = ratfunc_matrix_solve(mat, eyes)
    # cols[j] solves M x = e_j, i.e. inverse column j
    return [[cols[j][i] for j in range(n)] for i in range(n)]


# -- exact rational feasibility ----------------------------------------------


def feasible_nonneg_solution(A, b):
    """Is {x >= 0 : A x = b} nonempty?  Exact phase-I simplex with Bland's rule.

    A is a list of rows of Fractions/ints, b a list of Fractions/ints.
    """
    m = len(A)
    n = len(A[0]) if m else 0
    rows = [[Fraction(x) for x in row] for row in A]
    rhs = [Fraction(x) for x in b]
    for i in range(m):
        if rhs[i] < 0:
            rows[i] = [-x for x in rows[i]]
            rhs[i] = -rhs[i]
    # tableau with artificial variables n..n+m-1
    T = [rows[i] + [Fraction(1) if j == i else Fraction(0) for j in range(m)] + [rhs[i]]
         for i in range(m)]
    basis = [n + i for i in range(m)]
    total = n + m

    def objective_row():
        # minimize sum of artificials: reduced costs
        z = [Fraction(0)] * (total + 1)
        for i, bi in enumerate(basis):
            if bi >= n:
                for j in range(total + 1):
                    z[j] += T[i][j]
        return z

    while True:
        z = objective_row()
        enter = None
        for j in range(n):  # never re-enter artificials
            if j not in basis and z[j] > 0:
                enter = j
                break
        if enter is None:
            break
        leave = None
        best = None
        for i in range(m):
            if T[i][enter] > 0:
                ratio = T[i][total] / T[i][enter]
                if best is None or ratio < best or (ratio == best and basis[i] < basis[leave]):
                    best = ratio
                    leave = i
        if leave is None:
            break  # unbounded in phase I cannot happen; defensive
        piv = T[leave][enter]
        T[leave] = [x / piv for x in T[leave]]
        for i in range(m):
            if i != leave and T[i][enter] != 0:
                f = T[i][enter]
                T[i] = [x - f * y for x, y in zip(T[i], T[leave])]
        basis[leave] = enter
    artificial_sum = sum(T[i][total] for i in range(m) if basis[i] >= n)
    return artificial_sum == 0
