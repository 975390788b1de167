"""Exact rational linear algebra and sparse multivariate polynomials.

Everything in this module is exact: scalars are `fractions.Fraction`
(always reduced, positive denominator), matrices are dense arrays of
Fractions, polynomials are sparse exponent-vector maps.  Floating point
never enters here; numeric work lives in the modules that need it.

All objects are treated as immutable after construction.
"""

from __future__ import annotations

import itertools
from fractions import Fraction


Rational = Fraction


def rat(x) -> Fraction:
    """Coerce ints, strings like ``-3/7``, and Fractions to Fraction."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, float):
        raise TypeError("refusing to coerce float to Rational; convert explicitly")
    return Fraction(x)


def rat_to_str(x: Fraction) -> str:
    """Serialize as ``p/q`` (or just ``p`` when q == 1)."""
    return str(Fraction(x))


def rat_from_str(s) -> Fraction:
    if isinstance(s, bool):
        raise ValueError("not a rational: %r" % (s,))
    if isinstance(s, (int, str, Fraction)):
        return Fraction(s)
    raise ValueError("not a rational: %r" % (s,))


# ---------------------------------------------------------------------------
# vectors (plain tuples of Fractions)
# ---------------------------------------------------------------------------

def vec(xs):
    return tuple(rat(x) for x in xs)


def vec_add(a, b):
    return tuple(x + y for x, y in zip(a, b))


def vec_sub(a, b):
    return tuple(x - y for x, y in zip(a, b))


def vec_scale(c, a):
    c = rat(c)
    return tuple(c * x for x in a)


def vec_dot(a, b):
    if len(a) != len(b):
        raise ValueError("dimension mismatch in dot product")
    return sum((x * y for x, y in zip(a, b)), Fraction(0))


def vec_is_zero(a):
    return all(x == 0 for x in a)


class RationalMatrix:
    """Dense matrix of Fractions, row-major, immutable."""

    __slots__ = ("rows", "cols", "entries")

    def __init__(self, entries):
        rows = [tuple(rat(x) for x in row) for row in entries]
        if not rows:
            raise ValueError("matrix must have at least one row")
        ncols = len(rows[0])
        if ncols == 0 or any(len(r) != ncols for r in rows):
            raise ValueError("ragged or empty matrix rows")
        object.__setattr__(self, "rows", len(rows))
        object.__setattr__(self, "cols", ncols)
        object.__setattr__(self, "entries", tuple(rows))

    def __setattr__(self, *a):
        raise AttributeError("RationalMatrix is immutable")

    # -- constructors ------------------------------------------------------

    @staticmethod
    def identity(n):
        return RationalMatrix([[Fraction(int(i == j)) for j in range(n)] for i in range(n)])

    @staticmethod
    def zeros(m, n):
        return RationalMatrix([[Fraction(0)] * n for _ in range(m)])

    @staticmethod
    def from_columns(cols):
        cols = [tuple(rat(x) for x in c) for c in cols]
        return RationalMatrix([[c[i] for c in cols] for i in range(len(cols[0]))])

    # -- basic access ------------------------------------------------------

    def __getitem__(self, ij):
        i, j = ij
        return self.entries[i][j]

    def row(self, i):
        return self.entries[i]

    def column(self, j):
        return tuple(self.entries[i][j] for i in range(self.rows))

    def tolist(self):
        return [list(r) for r in self.entries]

    def __eq__(self, other):
        return (
            isinstance(other, RationalMatrix)
            and self.rows == other.rows
            and self.cols == other.cols
            and self.entries == other.entries
        )

    def __hash__(self):
        return hash(self.entries)

    def __repr__(self):
        return "RationalMatrix(%r)" % ([[str(x) for x in r] for r in self.entries],)

    def is_zero(self):
        return all(x == 0 for r in self.entries for x in r)

    def is_symmetric(self):
        return self.rows == self.cols and all(
            self.entries[i][j] == self.entries[j][i]
            for i in range(self.rows)
            for j in range(i + 1, self.cols)
        )

    # -- arithmetic --------------------------------------------------------

    def __add__(self, other):
        self._check_same_shape(other)
        return RationalMatrix(
            [[a + b for a, b in zip(r1, r2)] for r1, r2 in zip(self.entries, other.entries)]
        )

    def __sub__(self, other):
        self._check_same_shape(other)
        return RationalMatrix(
            [[a - b for a, b in zip(r1, r2)] for r1, r2 in zip(self.entries, other.entries)]
        )

    def __neg__(self):
        return self.scale(-1)

    def scale(self, c):
        c = rat(c)
        return RationalMatrix([[c * x for x in r] for r in self.entries])

    def __matmul__(self, other):
        if self.cols != other.rows:
            raise ValueError("shape mismatch in matrix product")
        return RationalMatrix(
            [
                [
                    sum((self.entries[i][k] * other.entries[k][j] for k in range(self.cols)), Fraction(0))
                    for j in range(other.cols)
                ]
                for i in range(self.rows)
            ]
        )

    def matvec(self, v):
        if self.cols != len(v):
            raise ValueError("shape mismatch in matrix-vector product")
        return tuple(
            sum((self.entries[i][k] * v[k] for k in range(self.cols)), Fraction(0))
            for i in range(self.rows)
        )

    def transpose(self):
        return RationalMatrix([[self.entries[i][j] for i in range(self.rows)] for j in range(self.cols)])

    def frobenius_dot(self, other):
        self._check_same_shape(other)
        return sum(
            (a * b for r1, r2 in zip(self.entries, other.entries) for a, b in zip(r1, r2)),
            Fraction(0),
        )

    def _check_same_shape(self, other):
        if self.rows != other.rows or self.cols != other.cols:
            raise ValueError("shape mismatch")

    def submatrix(self, rowset, colset):
        return RationalMatrix([[self.entries[i][j] for j in colset] for i in rowset])

    def to_float_array(self):
        import numpy as np

        return np.array([[float(x) for x in r] for r in self.entries], dtype=float)

    # -- elimination kernels -----------------------------------------------

    def det(self):
        """Exact determinant; cofactor expansion up to 3x3, Bareiss beyond."""
        if self.rows != self.cols:
            raise ValueError("determinant of a non-square matrix")
        n = self.rows
        e = self.entries
        if n == 1:
            return e[0][0]
        if n == 2:
            return e[0][0] * e[1][1] - e[0][1] * e[1][0]
        if n == 3:
            return (
                e[0][0] * (e[1][1] * e[2][2] - e[1][2] * e[2][1])
                - e[0][1] * (e[1][0] * e[2][2] - e[1][2] * e[2][0])
                + e[0][2] * (e[1][0] * e[2][1] - e[1][1] * e[2][0])
            )
        return _det_bareiss(self)

    def rref(self):
        """Reduced row echelon form; returns (matrix, pivot column tuple)."""
        m = [list(r) for r in self.entries]
        nrows, ncols = self.rows, self.cols
        pivots = []
        r = 0
        for c in range(ncols):
            pr = None
            for i in range(r, nrows):
                if m[i][c] != 0:
                    pr = i
                    break
            if pr is None:
                continue
            m[r], m[pr] = m[pr], m[r]
            pv = m[r][c]
            m[r] = [x / pv for x in m[r]]
            for i in range(nrows):
                if i != r and m[i][c] != 0:
                    f = m[i][c]
                    m[i] = [a - f * b for a, b in zip(m[i], m[r])]
            pivots.append(c)
            r += 1
            if r == nrows:
                break
        return RationalMatrix(m), tuple(pivots)

    def rank(self):
        return len(self.rref()[1])

    def nullspace(self):
        """Basis of the right null space, as a list of vectors."""
        red, pivots = self.rref()
        free = [c for c in range(self.cols) if c not in pivots]
        basis = []
        for f in free:
            v = [Fraction(0)] * self.cols
            v[f] = Fraction(1)
            for r, p in enumerate(pivots):
                v[p] = -red.entries[r][f]
            basis.append(tuple(v))
        return basis

    def solve(self, b):
        """One exact solution of ``self @ x = b``, or None if inconsistent."""
        if len(b) != self.rows:
            raise ValueError("right-hand side has wrong length")
        aug = RationalMatrix([list(r) + [rat(x)] for r, x in zip(self.entries, b)])
        red, pivots = aug.rref()
        if self.cols in pivots:
            return None
        x = [Fraction(0)] * self.cols
        for r, p in enumerate(pivots):
            x[p] = red.entries[r][self.cols]
        return tuple(x)

    def inverse(self):
        if self.rows != self.cols:
            raise ValueError("inverse of a non-square matrix")
        n = self.rows
        aug = RationalMatrix(
            [list(self.entries[i]) + [Fraction(int(i == j)) for j in range(n)] for i in range(n)]
        )
        red, pivots = aug.rref()
        if pivots != tuple(range(n)):
            raise ValueError("matrix is singular")
        return RationalMatrix([list(red.entries[i][n:]) for i in range(n)])


def _det_bareiss(A):
    """Fraction-free Gaussian elimination on the integer-scaled matrix."""
    n = A.rows
    scale = Fraction(1)
    m = []
    for r in A.entries:
        l = 1
        for x in r:
            d = x.denominator
            l = l * d // _gcd(l, d)
        scale /= l
        m.append([int(x * l) for x in r])
    sign = 1
    prev = 1
    for k in range(n - 1):
        if m[k][k] == 0:
            pr = None
            for i in range(k + 1, n):
                if m[i][k] != 0:
                    pr = i
                    break
            if pr is None:
                return Fraction(0)
            m[k], m[pr] = m[pr], m[k]
            sign = -sign
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                m[i][j] = (m[i][j] * m[k][k] - m[i][k] * m[k][j]) // prev
            m[i][k] = 0
        prev = m[k][k]
    return sign * scale * m[n - 1][n - 1]


def _gcd(a, b):
    while b:
        a, b = b, a % b
    return a


# ---------------------------------------------------------------------------
# minors
# ---------------------------------------------------------------------------

def minor(A: RationalMatrix, rowset, colset) -> Fraction:
    """Exact determinant of the submatrix picked by the index sets.

    Index sets are 0-based, strictly increasing, of equal length >= 1.
    """
    rowset = tuple(rowset)
    colset = tuple(colset)
    if len(rowset) != len(colset):
        raise ValueError("rowset and colset must have the same size")
    if len(rowset) < 1:
        raise ValueError("minor order must be at least 1")
    for name, idxs, bound in (("row", rowset, A.rows), ("col", colset, A.cols)):
        if any(i < 0 or i >= bound for i in idxs):
            raise IndexError("%s index out of range" % name)
        if any(idxs[i] >= idxs[i + 1] for i in range(len(idxs) - 1)):
            raise ValueError("%s indices must be strictly increasing" % name)
    return A.submatrix(rowset, colset).det()


def enumerate_minors(m, n, order="all"):
    """Deterministic lexicographic enumeration of minor index pairs.

    Minors are the determinants of p x p submatrices for p >= 2 ("all"
    ranges over p = 2..min(m,n)).  The returned order fixes the meaning of
    every coefficient-vector index used elsewhere.
    """
    if order == "all":
        orders = range(2, min(m, n) + 1)
    else:
        p = int(order)
        if p < 2 or p > min(m, n):
            raise ValueError("minor order %d out of range for %dx%d" % (p, m, n))
        orders = (p,)
    out = []
    for p in orders:
        for rowset in itertools.combinations(range(m), p):
            for colset in itertools.combinations(range(n), p):
                out.append((rowset, colset))
    return out


def nonvanishing_minor_candidates(matrices, m, n, order="all"):
    """Minor index pairs that can be non-zero on at least one given matrix.

    A minor whose submatrix has an all-zero row or column in every listed
    matrix is exactly zero there; such pairs are omitted.  Used to keep
    exact verification cheap on sparse atoms (large shapes have tens of
    thousands of minors, almost all structurally zero).
    """
    needed = set()
    if order == "all":
        orders = range(2, min(m, n) + 1)
    else:
        orders = (int(order),)
    for A in matrices:
        rows_sup = [set() for _ in range(m)]
        cols_sup = [set() for _ in range(n)]
        for i in range(m):
            for j in range(n):
                if A.entries[i][j] != 0:
                    rows_sup[i].add(j)
                    cols_sup[j].add(i)
        live_rows = [i for i in range(m) if rows_sup[i]]
        live_cols = [j for j in range(n) if cols_sup[j]]
        for p in orders:
            if p > min(len(live_rows), len(live_cols)):
                continue
            for rowset in itertools.combinations(live_rows, p):
                cols_avail = set().union(*(rows_sup[i] for i in rowset))
                if len(cols_avail) < p:
                    continue
                for colset in itertools.combinations(sorted(cols_avail), p):
                    cs = set(colset)
                    if any(not (rows_sup[i] & cs) for i in rowset):
                        continue
                    if any(not (cols_sup[j] & set(rowset)) for j in colset):
                        continue
                    needed.add((rowset, colset))
    return needed


def det_sum_expansion(A: RationalMatrix, X: RationalMatrix) -> Fraction:
    """det(A+X) computed through the mixed-minor expansion.

    Expands det(A+X) = det(A) + det(X) + sum over proper row subsets of X
    of cofactor(A) * minor(X) terms (generalized Laplace across the row
    split).  Must agree with the direct determinant exactly.
    """
    if A.rows != A.cols or X.rows != X.cols or A.rows != X.rows:
        raise ValueError("det_sum_expansion needs two square matrices of equal size")
    n = A.rows
    total = A.det() + X.det()
    full = tuple(range(n))
    for p in range(1, n):
        for rowset in itertools.combinations(full, p):
            comp_rows = tuple(i for i in full if i not in rowset)
            for colset in itertools.combinations(full, p):
                comp_cols = tuple(j for j in full if j not in colset)
                sign = -1 if (sum(rowset) + sum(colset)) % 2 else 1
                cof = A.submatrix(comp_rows, comp_cols).det()
                if cof == 0:
                    continue
                total += sign * cof * X.submatrix(rowset, colset).det()
    return total


def cofactor_2x2(B: RationalMatrix) -> RationalMatrix:
    if B.rows != 2 or B.cols != 2:
        raise ValueError("cofactor_2x2 needs a 2x2 matrix")
    e = B.entries
    return RationalMatrix([[e[1][1], -e[1][0]], [-e[0][1], e[0][0]]])


def cofactor_identity_2x2(A: RationalMatrix, B: RationalMatrix) -> Fraction:
    """det(A) - A:Cof(B) + det(B); equals det(A-B) for 2x2 matrices."""
    if A.rows != 2 or A.cols != 2 or B.rows != 2 or B.cols != 2:
        raise ValueError("cofactor_identity_2x2 needs 2x2 matrices")
    return A.det() - A.frobenius_dot(cofactor_2x2(B)) + B.det()


# ---------------------------------------------------------------------------
# sparse multivariate polynomials
# ---------------------------------------------------------------------------

class MultiPoly:
    """Sparse polynomial over the rationals in variables z_1..z_nvars.

    Terms map exponent tuples to non-zero Fraction coefficients.
    """

    __slots__ = ("nvars", "terms")

    def __init__(self, nvars, terms=None):
        nvars = int(nvars)
        clean = {}
        if terms:
            for expo, coeff in dict(terms).items():
                expo = tuple(int(e) for e in expo)
                if len(expo) != nvars or any(e < 0 for e in expo):
                    raise ValueError("bad exponent vector %r" % (expo,))
                coeff = rat(coeff)
                if coeff != 0:
                    clean[expo] = clean.get(expo, Fraction(0)) + coeff
                    if clean[expo] == 0:
                        del clean[expo]
        object.__setattr__(self, "nvars", nvars)
        object.__setattr__(self, "terms", dict(clean))

    def __setattr__(self, *a):
        raise AttributeError("MultiPoly is immutable")

    @staticmethod
    def zero(nvars):
        return MultiPoly(nvars)

    @staticmethod
    def constant(nvars, c):
        c = rat(c)
        return MultiPoly(nvars, {(0,) * nvars: c} if c != 0 else {})

    @staticmethod
    def variable(nvars, i):
        e = [0] * nvars
        e[i] = 1
        return MultiPoly(nvars, {tuple(e): Fraction(1)})

    @staticmethod
    def linear(coeffs, constant=0):
        """The affine polynomial coeffs . z + constant."""
        nvars = len(coeffs)
        terms = {}
        for i, c in enumerate(coeffs):
            c = rat(c)
            if c != 0:
                e = [0] * nvars
                e[i] = 1
                terms[tuple(e)] = c
        constant = rat(constant)
        if constant != 0:
            terms[(0,) * nvars] = constant
        return MultiPoly(nvars, terms)

    def is_zero(self):
        return not self.terms

    def degree(self):
        if not self.terms:
            return -1
        return max(sum(e) for e in self.terms)

    def is_homogeneous(self, deg=None):
        if not self.terms:
            return True
        degs = {sum(e) for e in self.terms}
        if len(degs) != 1:
            return False
        return deg is None or degs == {deg}

    def homogeneous_part(self, deg):
        return MultiPoly(self.nvars, {e: c for e, c in self.terms.items() if sum(e) == deg})

    def __eq__(self, other):
        return (
            isinstance(other, MultiPoly)
            and self.nvars == other.nvars
            and self.terms == other.terms
        )

    def __hash__(self):
        return hash((self.nvars, frozenset(self.terms.items())))

    def __add__(self, other):
        self._check(other)
        terms = dict(self.terms)
        for e, c in other.terms.items():
            terms[e] = terms.get(e, Fraction(0)) + c
        return MultiPoly(self.nvars, terms)

    def __sub__(self, other):
        return self + other.scale(-1)

    def __neg__(self):
        return self.scale(-1)

    def scale(self, c):
        c = rat(c)
        if c == 0:
            return MultiPoly.zero(self.nvars)
        return MultiPoly(self.nvars, {e: c * v for e, v in self.terms.items()})

    def __mul__(self, other):
        self._check(other)
        terms = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                terms[e] = terms.get(e, Fraction(0)) + c1 * c2
        return MultiPoly(self.nvars, terms)

    def _check(self, other):
        if not isinstance(other, MultiPoly) or other.nvars != self.nvars:
            raise ValueError("polynomial variable-count mismatch")

    def eval(self, point):
        """Exact evaluation at a rational point."""
        if len(point) != self.nvars:
            raise ValueError("point dimension mismatch")
        point = [rat(x) for x in point]
        total = Fraction(0)
        for e, c in self.terms.items():
            v = c
            for x, p in zip(point, e):
                if p:
                    v *= x**p
            total += v
        return total

    def eval_float(self, point):
        if len(point) != self.nvars:
            raise ValueError("point dimension mismatch")
        total = 0.0
        for e, c in self.terms.items():
            v = float(c)
            for x, p in zip(point, e):
                if p:
                    v *= float(x) ** p
            total += v
        return total

    def compose_linear(self, L: RationalMatrix, shift=None):
        """Exact substitution z_i -> (row i of L) . w + shift_i.

        L is nvars x k; the result is a polynomial in k variables.
        """
        if L.rows != self.nvars:
            raise ValueError("substitution matrix has wrong row count")
        k = L.cols
        if shift is None:
            shift = (Fraction(0),) * self.nvars
        if len(shift) != self.nvars:
            raise ValueError("shift has wrong length")
        subs = [MultiPoly.linear(L.row(i), shift[i]) for i in range(self.nvars)]
        result = MultiPoly.zero(k)
        pow_cache = [{0: MultiPoly.constant(k, 1)} for _ in range(self.nvars)]

        def power(i, p):
            cache = pow_cache[i]
            if p not in cache:
                cache[p] = power(i, p - 1) * subs[i]
            return cache[p]

        for e, c in self.terms.items():
            term = MultiPoly.constant(k, c)
            for i, p in enumerate(e):
                if p:
                    term = term * power(i, p)
            result = result + term
        return result

    def coefficient_vector(self, monomials):
        """Coefficients against an explicit monomial list (exponent tuples)."""
        return tuple(self.terms.get(tuple(e), Fraction(0)) for e in monomials)

    def monomials(self):
        return sorted(self.terms.keys())

    def __repr__(self):
        if not self.terms:
            return "MultiPoly(0)"
        bits = []
        for e in sorted(self.terms, reverse=True):
            c = self.terms[e]
            mono = "*".join(
                "z%d" % (i + 1) if p == 1 else "z%d^%d" % (i + 1, p)
                for i, p in enumerate(e)
                if p
            )
            bits.append("%s%s" % (c, "*" + mono if mono else ""))
        return "MultiPoly(%s)" % " + ".join(bits)


def poly_eval(f: MultiPoly, z):
    return f.eval(z)


def poly_compose_linear(f: MultiPoly, L: RationalMatrix, shift=None):
    return f.compose_linear(L, shift)


def span_basis_indices(polys):
    """Indices of a maximal linearly independent subset, by exact rank.

    The subset keeps the first polynomial achieving each new pivot, so the
    selection is deterministic in the given order.
    """
    monomials = sorted({e for p in polys for e in p.terms})
    if not monomials:
        return []
    rows = [p.coefficient_vector(monomials) for p in polys]
    chosen = []
    basis_rows = []
    for idx, r in enumerate(rows):
        r = list(r)
        for br in basis_rows:
            piv = next(i for i, x in enumerate(br) if x != 0)
            if r[piv] != 0:
                f = r[piv] / br[piv]
                r = [a - f * b for a, b in zip(r, br)]
        if any(x != 0 for x in r):
            basis_rows.append(r)
            chosen.append(idx)
    return chosen


# ---------------------------------------------------------------------------
# quadratic forms
# ---------------------------------------------------------------------------

class QuadraticForm:
    """Homogeneous quadratic form on R^dim with an exactly symmetric matrix."""

    __slots__ = ("dim", "matrix")

    def __init__(self, matrix: RationalMatrix):
        if not matrix.is_symmetric():
            raise ValueError("quadratic form matrix must be exactly symmetric")
        object.__setattr__(self, "dim", matrix.rows)
        object.__setattr__(self, "matrix", matrix)

    def __setattr__(self, *a):
        raise AttributeError("QuadraticForm is immutable")

    @staticmethod
    def from_poly(p: MultiPoly):
        if not p.is_homogeneous(2) and not p.is_zero():
            raise ValueError("polynomial is not a homogeneous quadratic")
        d = p.nvars
        m = [[Fraction(0)] * d for _ in range(d)]
        for e, c in p.terms.items():
            idx = [i for i, q in enumerate(e) if q]
            if len(idx) == 1:
                m[idx[0]][idx[0]] = c
            else:
                i, j = idx
                m[i][j] = c / 2
                m[j][i] = c / 2
        return QuadraticForm(RationalMatrix(m))

    def to_poly(self):
        d = self.dim
        terms = {}
        for i in range(d):
            for j in range(i, d):
                c = self.matrix[i, j] if i == j else 2 * self.matrix[i, j]
                if c != 0:
                    e = [0] * d
                    e[i] += 1
                    e[j] += 1
                    terms[tuple(e)] = c
        return MultiPoly(d, terms)

    def __call__(self, v):
        v = vec(v)
        return vec_dot(v, self.matrix.matvec(v))

    def __add__(self, other):
        return QuadraticForm(self.matrix + other.matrix)

    def scale(self, c):
        return QuadraticForm(self.matrix.scale(c))

    def restrict(self, basis):
        """Form pulled back to coordinates on span(basis); basis is a list of vectors."""
        C = RationalMatrix.from_columns(basis)
        return QuadraticForm(C.transpose() @ self.matrix @ C)

    def is_zero(self):
        return self.matrix.is_zero()

    def __eq__(self, other):
        return isinstance(other, QuadraticForm) and self.matrix == other.matrix

    def __repr__(self):
        return "QuadraticForm(%r)" % (self.matrix,)


class PSDReport:
    """Outcome of the exact semidefiniteness analysis of a symmetric matrix.

    ``is_psd``        exact verdict.
    ``kernel``        basis of the kernel when PSD (zero set of the form).
    ``neg_witness``   vector v with v^T M v < 0 when not PSD.
    ``rank``          number of strictly positive pivots found.
    """

    __slots__ = ("is_psd", "kernel", "neg_witness", "rank")

    def __init__(self, is_psd, kernel, neg_witness, rank):
        self.is_psd = is_psd
        self.kernel = kernel
        self.neg_witness = neg_witness
        self.rank = rank


def psd_analyze(M: RationalMatrix) -> PSDReport:
    """Exact LDL^T-style analysis with diagonal pivoting.

    Maintains a congruence basis so that a negative diagonal entry (or a
    zero diagonal with a non-zero off-diagonal residual, which forces
    indefiniteness for symmetric matrices) yields an exact witness vector.
    """
    if not M.is_symmetric():
        raise ValueError("psd_analyze needs a symmetric matrix")
    n = M.rows
    S = [list(r) for r in M.entries]
    vs = [[Fraction(int(i == j)) for j in range(n)] for i in range(n)]
    active = list(range(n))
    rank = 0
    while active:
        neg = [i for i in active if S[i][i] < 0]
        if neg:
            return PSDReport(False, None, tuple(vs[neg[0]]), rank)
        pos = [i for i in active if S[i][i] > 0]
        if not pos:
            for i in active:
                for j in active:
                    if i < j and S[i][j] != 0:
                        # Q(v_i + t v_j) = 2 t S_ij with S_ii = S_jj = 0
                        sgn = -1 if S[i][j] > 0 else 1
                        w = [a + sgn * b for a, b in zip(vs[i], vs[j])]
                        return PSDReport(False, None, tuple(w), rank)
            kernel = [tuple(vs[i]) for i in active]
            return PSDReport(True, kernel, None, rank)
        p = max(pos, key=lambda i: (S[i][i], -i))
        piv = S[p][p]
        active.remove(p)
        rank += 1
        coeffs = {i: S[i][p] / piv for i in active}
        for i in active:
            f = coeffs[i]
            if f != 0:
                vs[i] = [a - f * b for a, b in zip(vs[i], vs[p])]
        for i in active:
            for j in active:
                S[i][j] = S[i][j] - coeffs[i] * piv * coeffs[j]
    return PSDReport(True, [], None, rank)
