"""Linear subspaces of matrix space, presented as pencils.

A d-dimensional subspace K of m x n matrices is stored through a basis
B_1..B_d; the associated pencil P(z) = sum_l z_l B_l has entry (i,j) equal
to a_ij . z for coefficient vectors a_ij in Q^d.  Elementary row and
column operations on the pencil produce equivalent subspaces that keep the
pointwise rank profile and the span of the 2x2 minor polynomials; the
certificate machinery leans on both facts.
"""

from __future__ import annotations

import math
import random
from fractions import Fraction

import numpy as np

from .algebra import (
    MultiPoly,
    RationalMatrix,
    enumerate_minors,
    rat,
    rat_from_str,
    rat_to_str,
    span_basis_indices,
    vec_dot,
)


class Subspace:
    """Basis presentation of a subspace of m x n matrices."""

    __slots__ = ("m", "n", "d", "basis")

    def __init__(self, basis):
        basis = tuple(
            b if isinstance(b, RationalMatrix) else RationalMatrix(b) for b in basis
        )
        if not basis:
            raise ValueError("subspace needs at least one basis matrix")
        m, n = basis[0].rows, basis[0].cols
        if any(b.rows != m or b.cols != n for b in basis):
            raise ValueError("basis matrices must share one shape")
        d = len(basis)
        if d > m * n:
            raise ValueError("dimension %d exceeds %d x %d" % (d, m, n))
        stacked = RationalMatrix([[b[i, j] for i in range(m) for j in range(n)] for b in basis])
        if stacked.rank() != d:
            dep = stacked.transpose().nullspace()[0] if d > 1 else (Fraction(1),)
            # surface one explicit vanishing combination of the basis
            combo = " + ".join(
                "(%s)*B%d" % (rat_to_str(c), l + 1) for l, c in enumerate(dep) if c != 0
            )
            raise ValueError("basis matrices are linearly dependent: %s = 0" % combo)
        object.__setattr__(self, "m", m)
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "basis", basis)

    def __setattr__(self, *a):
        raise AttributeError("Subspace is immutable")

    def __eq__(self, other):
        return isinstance(other, Subspace) and self.basis == other.basis

    def __repr__(self):
        return "Subspace(m=%d, n=%d, d=%d)" % (self.m, self.n, self.d)

    def entry_vector(self, i, j):
        """Coefficient vector a_ij of the pencil entry (i, j)."""
        return tuple(b[i, j] for b in self.basis)

    def entry_grid(self):
        return [[self.entry_vector(i, j) for j in range(self.n)] for i in range(self.m)]

    def evaluate(self, z):
        """P(z) = sum_l z_l B_l, exactly."""
        if len(z) != self.d:
            raise ValueError("point dimension mismatch")
        acc = RationalMatrix.zeros(self.m, self.n)
        for zl, b in zip(z, self.basis):
            acc = acc + b.scale(rat(zl))
        return acc

    def basis_float(self):
        """d x (m*n) float array of the flattened basis matrices."""
        return np.array(
            [[float(b[i, j]) for i in range(self.m) for j in range(self.n)] for b in self.basis]
        )

    def restricted(self, vectors):
        """Subspace spanned by P(v) for the given independent vectors in R^d."""
        return Subspace([self.evaluate(v) for v in vectors])

    def to_json(self):
        return {
            "m": self.m,
            "n": self.n,
            "d": self.d,
            "basis": [[[rat_to_str(b[i, j]) for j in range(self.n)] for i in range(self.m)] for b in self.basis],
        }

    @staticmethod
    def from_json(obj):
        try:
            basis = [
                RationalMatrix([[rat_from_str(x) for x in row] for row in bm])
                for bm in obj["basis"]
            ]
        except (KeyError, TypeError, ValueError) as exc:
            raise ValueError("bad subspace JSON: %s" % exc) from exc
        K = Subspace(basis)
        for key in ("m", "n", "d"):
            if key in obj and int(obj[key]) != getattr(K, key):
                raise ValueError("subspace JSON field %r inconsistent with basis" % key)
        return K


# ---------------------------------------------------------------------------
# pencil operations
# ---------------------------------------------------------------------------

_OP_KINDS = ("row-swap", "row-scale", "row-add", "col-swap", "col-scale", "col-add")


class PencilOp:
    """One elementary row or column operation on a pencil.

    swap:  interchange lines i and j
    scale: line i multiplied by c (c != 0)
    add:   line i incremented by c times line j
    """

    __slots__ = ("kind", "i", "j", "c")

    def __init__(self, kind, i, j=None, c=None):
        if kind not in _OP_KINDS:
            raise ValueError("unknown op kind %r" % kind)
        if kind.endswith("scale"):
            if c is None or rat(c) == 0:
                raise ValueError("scale factor must be non-zero")
            j = None
        elif kind.endswith("swap"):
            if j is None:
                raise ValueError("swap needs two indices")
            c = None
        else:
            if j is None or c is None:
                raise ValueError("add needs a second index and a factor")
        self.kind = kind
        self.i = int(i)
        self.j = None if j is None else int(j)
        self.c = None if c is None else rat(c)

    def __repr__(self):
        return "PencilOp(%r, i=%d, j=%r, c=%r)" % (self.kind, self.i, self.j, self.c)


def _apply_op_to_matrix(M: RationalMatrix, op: PencilOp) -> RationalMatrix:
    rows = [list(r) for r in M.entries]
    if op.kind.startswith("col"):
        rows = [list(r) for r in zip(*rows)]
    if op.kind.endswith("swap"):
        rows[op.i], rows[op.j] = rows[op.j], rows[op.i]
    elif op.kind.endswith("scale"):
        rows[op.i] = [op.c * x for x in rows[op.i]]
    else:
        rows[op.i] = [a + op.c * b for a, b in zip(rows[op.i], rows[op.j])]
    if op.kind.startswith("col"):
        rows = [list(r) for r in zip(*rows)]
    return RationalMatrix(rows)


def apply_ops(K: Subspace, ops) -> Subspace:
    """Equivalent subspace obtained by elementary pencil operations.

    The operations have constant coefficients, so they act on every basis
    matrix simultaneously; the pointwise rank profile is preserved.
    """
    basis = list(K.basis)
    for op in ops:
        limit = K.m if op.kind.startswith("row") else K.n
        idxs = [op.i] if op.j is None else [op.i, op.j]
        if any(i < 0 or i >= limit for i in idxs):
            raise IndexError("op index out of range")
        if op.kind.endswith("add") and op.i == op.j:
            raise ValueError("add op needs distinct lines")
        basis = [_apply_op_to_matrix(b, op) for b in basis]
    return Subspace(basis)


def random_pencil_ops(m, n, count, rng: random.Random):
    """Deterministic stream of well-formed random ops (for transport tests)."""
    ops = []
    for _ in range(count):
        axis = rng.choice(("row", "col"))
        limit = m if axis == "row" else n
        if limit < 2:
            axis = "col" if axis == "row" else "row"
            limit = m if axis == "row" else n
        kind = rng.choice(("swap", "scale", "add"))
        i = rng.randrange(limit)
        if kind == "scale":
            c = Fraction(rng.choice([x for x in range(-3, 4) if x]), rng.randint(1, 3))
            ops.append(PencilOp(axis + "-scale", i, c=c))
        elif kind == "swap":
            j = rng.randrange(limit - 1)
            if j >= i:
                j += 1
            ops.append(PencilOp(axis + "-swap", i, j))
        else:
            j = rng.randrange(limit - 1)
            if j >= i:
                j += 1
            c = Fraction(rng.randint(-3, 3), rng.randint(1, 3))
            ops.append(PencilOp(axis + "-add", i, j, c))
    return ops


# ---------------------------------------------------------------------------
# pencil entries and minor spans
# ---------------------------------------------------------------------------

def parametrize(K: Subspace):
    """The pencil as an m x n grid of degree-1 polynomials in z_1..z_d."""
    return [
        [MultiPoly.linear(K.entry_vector(i, j)) for j in range(K.n)]
        for i in range(K.m)
    ]


def _poly_det(grid):
    n = len(grid)
    if n == 1:
        return grid[0][0]
    if n == 2:
        return grid[0][0] * grid[1][1] - grid[0][1] * grid[1][0]
    nvars = grid[0][0].nvars
    acc = MultiPoly.zero(nvars)
    for j in range(n):
        sub = [row[:j] + row[j + 1 :] for row in grid[1:]]
        term = grid[0][j] * _poly_det(sub)
        acc = acc + (term if j % 2 == 0 else -term)
    return acc


def minor_polys(K: Subspace, order=2):
    """Minor polynomials M_k(P(z)) in the fixed enumeration order."""
    pencil = parametrize(K)
    out = []
    for rows, cols in enumerate_minors(K.m, K.n, order):
        out.append(_poly_det([[pencil[i][j] for j in cols] for i in rows]))
    return out


class MinorSpan:
    """Order-p minor polynomials of a pencil plus a basis of their span."""

    __slots__ = ("order", "polys", "span_basis")

    def __init__(self, order, polys, span_basis):
        self.order = order
        self.polys = list(polys)
        self.span_basis = list(span_basis)

    @property
    def dim(self):
        return len(self.span_basis)


def minor_span(K: Subspace, order=2) -> MinorSpan:
    if order < 2 or order > min(K.m, K.n):
        raise ValueError("minor order %d out of range" % order)
    polys = minor_polys(K, order)
    return MinorSpan(order, polys, span_basis_indices(polys))


# ---------------------------------------------------------------------------
# rank-one detection
# ---------------------------------------------------------------------------

class RankOneResult:
    """Outcome of a rank-one connection search.

    ``found``          a rank-one direction was located.
    ``witness``        exact rational direction (rank P(witness) == 1), or None.
    ``witness_minpoly`` for d == 2 only: when the direction is a quadratic
                       irrational t with z = (t, 1), the monic minimal
                       polynomial coefficients (c0, c1, 1) and the chosen
                       branch; every order-2 minor polynomial is divisible
                       by this polynomial, which certifies exactness.
    ``witness_float``  floating approximation of the direction.
    ``residual``       scale-free residual at the reported direction.
    ``lower_bound``    smallest residual seen when nothing was found.
    ``is_proof``       verdict backed by exact computation.
    """

    __slots__ = (
        "found",
        "witness",
        "witness_minpoly",
        "witness_float",
        "residual",
        "lower_bound",
        "is_proof",
        "mode",
    )

    def __init__(self, found, witness=None, witness_minpoly=None, witness_float=None,
                 residual=None, lower_bound=None, is_proof=False, mode="numeric"):
        self.found = found
        self.witness = witness
        self.witness_minpoly = witness_minpoly
        self.witness_float = witness_float
        self.residual = residual
        self.lower_bound = lower_bound
        self.is_proof = is_proof
        self.mode = mode

    def __repr__(self):
        return (
            "RankOneResult(found=%r, witness=%r, residual=%r, lower_bound=%r, is_proof=%r, mode=%r)"
            % (self.found, self.witness, self.residual, self.lower_bound, self.is_proof, self.mode)
        )


def find_rank_one(K: Subspace, mode="auto", density=20000, seed=0, tol=1e-9,
                  absent_tol=1e-6, refine_candidates=12) -> RankOneResult:
    """Search for z != 0 with rank P(z) <= 1.

    Exact mode (d <= 2) decides the question; numeric mode samples the unit
    sphere and refines by Gauss-Newton, and a negative answer is only a
    probabilistic statement (flagged through ``is_proof``).
    """
    if mode == "auto":
        mode = "exact" if K.d <= 2 else "numeric"
    if mode == "exact":
        if K.d > 2:
            raise ValueError("exact mode supports d <= 2 only")
        return _find_rank_one_exact(K)
    if mode != "numeric":
        raise ValueError("unknown mode %r" % mode)
    return _find_rank_one_numeric(K, density, seed, tol, absent_tol, refine_candidates)


def rank_at(K: Subspace, z):
    return K.evaluate(z).rank()


def _find_rank_one_exact(K: Subspace) -> RankOneResult:
    if K.d == 1:
        if K.basis[0].rank() == 1:
            w = (Fraction(1),)
            return RankOneResult(True, witness=w, witness_float=np.array([1.0]),
                                 residual=0.0, is_proof=True, mode="exact")
        return RankOneResult(False, is_proof=True, mode="exact")

    polys = [p for p in minor_polys(K, 2) if not p.is_zero()]
    if not polys:
        w = (Fraction(1), Fraction(0))
        return RankOneResult(True, witness=w, witness_float=np.array([1.0, 0.0]),
                             residual=0.0, is_proof=True, mode="exact")

    # z = (1, 0): every form must have zero z1^2 coefficient
    if all(p.terms.get((2, 0), Fraction(0)) == 0 for p in polys):
        w = (Fraction(1), Fraction(0))
        return RankOneResult(True, witness=w, witness_float=np.array([1.0, 0.0]),
                             residual=0.0, is_proof=True, mode="exact")

    # dehomogenize at z = (t, 1) and take the gcd of the univariate forms
    unis = []
    for p in polys:
        unis.append([
            p.terms.get((0, 2), Fraction(0)),
            p.terms.get((1, 1), Fraction(0)),
            p.terms.get((2, 0), Fraction(0)),
        ])
    g = _poly_gcd_many(unis)
    deg = len(g) - 1
    if deg == 0:
        return RankOneResult(False, is_proof=True, mode="exact")
    if deg == 1:
        t = -g[0] / g[1]
        w = (t, Fraction(1))
        return RankOneResult(True, witness=w, witness_float=np.array([float(t), 1.0]),
                             residual=0.0, is_proof=True, mode="exact")
    # monic quadratic t^2 + b t + c
    b, c = g[1], g[0]
    disc = b * b - 4 * c
    if disc < 0:
        return RankOneResult(False, is_proof=True, mode="exact")
    root = _rational_sqrt(disc)
    if root is not None:
        t = (-b + root) / 2
        w = (t, Fraction(1))
        return RankOneResult(True, witness=w, witness_float=np.array([float(t), 1.0]),
                             residual=0.0, is_proof=True, mode="exact")
    tf = (-float(b) + math.sqrt(float(disc))) / 2.0
    return RankOneResult(
        True,
        witness=None,
        witness_minpoly={"coeffs": (c, b, Fraction(1)), "branch": +1},
        witness_float=np.array([tf, 1.0]),
        residual=0.0,
        is_proof=True,
        mode="exact",
    )


def _poly_trim(p):
    while p and p[-1] == 0:
        p = p[:-1]
    return p


def _poly_mod(a, b):
    a = list(a)
    db, lb = len(b) - 1, b[-1]
    while len(a) - 1 >= db and any(x != 0 for x in a):
        da = len(a) - 1
        f = a[-1] / lb
        for k in range(db + 1):
            a[da - db + k] -= f * b[k]
        a = _poly_trim(a)
        if not a:
            break
    return a


def _poly_gcd(a, b):
    a, b = _poly_trim(list(a)), _poly_trim(list(b))
    while b:
        a, b = b, _poly_mod(a, b)
    if a:
        lead = a[-1]
        a = [x / lead for x in a]
    return a


def _poly_gcd_many(polys):
    g = []
    for p in polys:
        p = _poly_trim(list(p))
        if not p:
            continue
        g = p if not g else _poly_gcd(g, p)
        if len(g) == 1:
            return [Fraction(1)]
    if not g:
        return [Fraction(1)]
    return [x / g[-1] for x in g]


def poly_divides(g, p):
    """True when g divides p exactly in Q[t] (coefficient lists, low to high)."""
    p = _poly_trim(list(p))
    if not p:
        return True
    return not _poly_mod(p, _poly_trim(list(g)))


def _rational_sqrt(x: Fraction):
    if x < 0:
        return None
    if x == 0:
        return Fraction(0)
    num = math.isqrt(x.numerator)
    den = math.isqrt(x.denominator)
    if num * num == x.numerator and den * den == x.denominator:
        return Fraction(num, den)
    return None


# -- numeric search ---------------------------------------------------------

def _minor_index_arrays(m, n):
    pairs = enumerate_minors(m, n, 2)
    a1 = np.array([r[0] * n + c[0] for r, c in pairs])
    a2 = np.array([r[1] * n + c[1] for r, c in pairs])
    b1 = np.array([r[0] * n + c[1] for r, c in pairs])
    b2 = np.array([r[1] * n + c[0] for r, c in pairs])
    return a1, a2, b1, b2


def _residuals(Z, B, idx):
    """Scale-free residual sqrt(sum minors^2) / ||P(z)||_F^2 per sample row."""
    a1, a2, b1, b2 = idx
    E = Z @ B
    s = (E * E).sum(axis=1)
    M = E[:, a1] * E[:, a2] - E[:, b1] * E[:, b2]
    return np.sqrt((M * M).sum(axis=1)) / s


def _sphere_samples(d, density, seed):
    if d == 1:
        return np.array([[1.0]])
    if d == 2:
        theta = np.pi * (np.arange(density) + 0.5) / density
        return np.stack([np.cos(theta), np.sin(theta)], axis=1)
    if d == 3:
        i = np.arange(density)
        z = 1.0 - 2.0 * (i + 0.5) / density
        r = np.sqrt(np.maximum(0.0, 1.0 - z * z))
        phi = i * np.pi * (3.0 - np.sqrt(5.0))
        return np.stack([r * np.cos(phi), r * np.sin(phi), z], axis=1)
    rng = np.random.default_rng(seed)
    Z = rng.standard_normal((density, d))
    return Z / np.linalg.norm(Z, axis=1, keepdims=True)


def _gauss_newton(z, B, idx, iters=60):
    a1, a2, b1, b2 = idx
    Bt = B.T  # (mn) x d
    best = z / np.linalg.norm(z)
    best_res = None
    cur = best
    stale = 0
    for _ in range(iters):
        e = cur @ B
        s = float(e @ e)
        mvals = e[a1] * e[a2] - e[b1] * e[b2]
        res_vec = mvals / s
        res = float(np.linalg.norm(res_vec))
        if best_res is None or res < best_res * (1.0 - 1e-3):
            best_res, best = res, cur
            stale = 0
        else:
            if res < best_res:
                best_res, best = res, cur
            stale += 1
            if stale >= 4:  # stagnated far from a zero; stop early
                break
        if res < 1e-17:
            break
        G = (
            Bt[a1] * e[a2][:, None]
            + Bt[a2] * e[a1][:, None]
            - Bt[b1] * e[b2][:, None]
            - Bt[b2] * e[b1][:, None]
        )  # q0 x d, gradients of the minors
        grad_s = 2.0 * (B @ e)
        J = (G * s - mvals[:, None] * grad_s[None, :]) / (s * s)
        step, *_ = np.linalg.lstsq(J, -res_vec, rcond=None)
        nz = cur + step
        nrm = np.linalg.norm(nz)
        if nrm == 0 or not np.all(np.isfinite(nz)):
            break
        cur = nz / nrm
    return best, best_res


def _polish_witness(K: Subspace, z):
    """Try to turn a float direction into an exact rational rank-one witness."""
    z = np.asarray(z, dtype=float)
    scale = np.max(np.abs(z))
    if scale == 0:
        return None
    z = z / scale
    for digits in (100, 10**4, 10**8, 10**12):
        cand = tuple(Fraction(float(x)).limit_denominator(digits) for x in z)
        if all(x == 0 for x in cand):
            continue
        M = K.evaluate(cand)
        if not M.is_zero() and M.rank() == 1:
            return cand
    return None


def _find_rank_one_numeric(K, density, seed, tol, absent_tol, refine_candidates):
    B = K.basis_float()
    idx = _minor_index_arrays(K.m, K.n)
    density = int(density)
    best_overall = None
    best_z = None
    block = max(1, int(4_000_000 // max(1, len(idx[0]))))
    samples = _sphere_samples(K.d, density, seed)
    top = []
    for start in range(0, len(samples), block):
        Z = samples[start : start + block]
        res = _residuals(Z, B, idx)
        k = min(len(res), max(1, refine_candidates // 2))
        order = np.argpartition(res, k - 1)[:k]
        for i in order:
            top.append((float(res[i]), Z[i]))
        i_min = int(np.argmin(res))
        if best_overall is None or res[i_min] < best_overall:
            best_overall = float(res[i_min])
            best_z = Z[i_min]
    top.sort(key=lambda t: t[0])
    for _, z0 in top[:refine_candidates]:
        z, res = _gauss_newton(z0, B, idx)
        if res is not None and res < best_overall:
            best_overall, best_z = res, z
    if best_overall is not None and best_overall < tol:
        exact = _polish_witness(K, best_z)
        return RankOneResult(
            True,
            witness=exact,
            witness_float=np.asarray(best_z),
            residual=best_overall,
            is_proof=exact is not None,
            mode="numeric",
        )
    certified = best_overall is not None and best_overall > absent_tol
    return RankOneResult(
        False,
        witness_float=np.asarray(best_z) if best_z is not None else None,
        residual=best_overall,
        lower_bound=best_overall,
        is_proof=False,
        mode="numeric" if certified else "numeric-inconclusive",
    )
