"""Triviality certificates for Null Lagrangian measures on subspaces.

A certificate step is a vector beta over the fixed order-2 minor
enumeration whose combination sum_k beta_k M_k(P(z)) is a PSD, non-zero
quadratic form on the current cone.  For pencils of dimension d <= 3 and
no rank-one directions such a beta always exists and is found
constructively: locate a row or column whose coefficient vectors span a
1-, 2- or 3-dimensional space, reduce the pencil by elementary operations
to a canonical shape, read off an explicitly non-negative polynomial
(a squared linear form, or a definite 2x2 determinant), and pull it back
through the invariance of the minor span under pencil operations.

The descending chain repeatedly restricts to the kernel of the current
certificate form; it stops at the zero cone (triviality certified) or at
a cone carrying no combination (obstruction).
"""

from __future__ import annotations

from fractions import Fraction

import numpy as np

from .algebra import (
    MultiPoly,
    QuadraticForm,
    RationalMatrix,
    enumerate_minors,
    psd_analyze,
    rat,
    rat_from_str,
    rat_to_str,
    vec_dot,
    vec_is_zero,
)
from .subspace import Subspace, minor_polys


# ---------------------------------------------------------------------------
# domain types
# ---------------------------------------------------------------------------

class MinorCombination:
    """Coefficients over the order-2 minor enumeration, as a quadratic form.

    ``projections`` mirrors the extra coefficient slots (one per matrix
    entry) that the general triviality condition allows; the subspace
    search never needs them and never fills them.
    """

    __slots__ = ("beta", "projections", "form")

    def __init__(self, beta, form: QuadraticForm, projections=None):
        beta = tuple(rat(b) for b in beta)
        if all(b == 0 for b in beta) and (
            projections is None or all(rat(p) == 0 for p in projections)
        ):
            raise ValueError("combination must have a non-zero coefficient")
        self.beta = beta
        self.projections = None if projections is None else tuple(rat(p) for p in projections)
        self.form = form

    def __repr__(self):
        nz = sum(1 for b in self.beta if b != 0)
        return "MinorCombination(%d coefficients, %d non-zero)" % (len(self.beta), nz)


def combination_form(K: Subspace, beta) -> QuadraticForm:
    """The quadratic form of sum_k beta_k M_k(P_K(z)), built exactly."""
    polys = minor_polys(K, 2)
    if len(beta) != len(polys):
        raise ValueError("beta length %d != %d minors" % (len(beta), len(polys)))
    acc = MultiPoly.zero(K.d)
    for b, p in zip(beta, polys):
        b = rat(b)
        if b != 0:
            acc = acc + p.scale(b)
    return QuadraticForm.from_poly(acc)


class TrivialityCertificate:
    """Chain of combinations with strictly descending cones.

    ``cones[i]`` is the basis of the cone on which ``chain[i]`` is PSD and
    non-zero; ``cones[i+1]`` spans its kernel there.  ``terminal`` marks
    that the final kernel is the origin.
    """

    __slots__ = ("chain", "cones", "terminal")

    def __init__(self, chain, cones, terminal):
        self.chain = list(chain)
        self.cones = [list(c) for c in cones]
        self.terminal = bool(terminal)

    def to_json(self, K: Subspace = None):
        obj = {
            "kind": "triviality-certificate",
            "terminal": self.terminal,
            "chain": [
                {
                    "beta": [rat_to_str(b) for b in comb.beta],
                    "cone_basis": [[rat_to_str(x) for x in v] for v in cone],
                }
                for comb, cone in zip(self.chain, self.cones)
            ],
        }
        if K is not None:
            obj["subspace"] = K.to_json()
        return obj

    @staticmethod
    def chain_from_json(obj):
        chain = []
        for entry in obj["chain"]:
            beta = tuple(rat_from_str(x) for x in entry["beta"])
            cone = [tuple(rat_from_str(x) for x in v) for v in entry["cone_basis"]]
            chain.append((beta, cone))
        return chain, bool(obj["terminal"])


class Obstruction:
    """A cone on which the certificate search failed."""

    __slots__ = ("cone", "reason", "rank_one_witness", "note")

    def __init__(self, cone, reason, rank_one_witness=None, note=""):
        self.cone = [tuple(v) for v in cone]
        self.reason = reason
        self.rank_one_witness = rank_one_witness
        self.note = note

    def __repr__(self):
        return "Obstruction(reason=%r, cone_dim=%d)" % (self.reason, len(self.cone))


class GenericityReport:
    """Outcome of one Grassmannian chart probe."""

    __slots__ = ("lambda_value", "span_dim", "beta", "min_eigenvalue", "exact_span_dim")

    def __init__(self, lambda_value, span_dim, beta, min_eigenvalue, exact_span_dim=None):
        self.lambda_value = lambda_value
        self.span_dim = span_dim
        self.beta = beta
        self.min_eigenvalue = min_eigenvalue
        self.exact_span_dim = exact_span_dim


class CertificateOutcome:
    """Result of the constructive search: a combination or a rank-one reason."""

    __slots__ = ("combination", "rank_one_witness", "note")

    def __init__(self, combination=None, rank_one_witness=None, note=""):
        self.combination = combination
        self.rank_one_witness = rank_one_witness
        self.note = note

    @property
    def found(self):
        return self.combination is not None


# ---------------------------------------------------------------------------
# pencil reduction on entry-vector grids
# ---------------------------------------------------------------------------
#
# The grid E holds the pencil's coefficient vectors, E[i][j] in Q^d.
# Elementary row/column operations act on these vectors; the variable z is
# untouched, so any polynomial produced from a reduced grid lives in the
# same minor span as the original pencil, and any direction z0 found on a
# reduced grid is a direction for the original pencil (pointwise ranks
# agree under the operations, and lines that are identically zero never
# carry rank).

def _vector_rank(vectors):
    vectors = [v for v in vectors if not vec_is_zero(v)]
    if not vectors:
        return 0
    return RationalMatrix(vectors).rank()


def _drop_zero_lines(E):
    E = [row for row in E if any(not vec_is_zero(v) for v in row)]
    if not E:
        return E
    keep = [j for j in range(len(E[0])) if any(not vec_is_zero(row[j]) for row in E)]
    return [[row[j] for j in keep] for row in E]


def _transpose_grid(E):
    return [list(col) for col in zip(*E)]


def _square_of(v):
    lin = MultiPoly.linear(v)
    return lin * lin


def _case_span_one(E, d, i0):
    E = [list(r) for r in E]
    E[0], E[i0] = E[i0], E[0]
    n_ = len(E[0])
    j_star = next(j for j in range(n_) if not vec_is_zero(E[0][j]))
    for row in E:
        row[0], row[j_star] = row[j_star], row[0]
    v = E[0][0]
    pivot_pos = next(i for i, x in enumerate(v) if x != 0)
    for j in range(1, n_):
        w = E[0][j]
        if vec_is_zero(w):
            continue
        t = w[pivot_pos] / v[pivot_pos]
        for row in E:
            row[j] = tuple(a - t * b for a, b in zip(row[j], row[0]))
    inner = [E[i][j] for i in range(1, len(E)) for j in range(1, n_)]
    stacked = [w for w in inner if not vec_is_zero(w)]
    if _vector_rank(stacked) < d:
        rows = stacked if stacked else [tuple(Fraction(0) for _ in range(d))]
        z0 = RationalMatrix(rows).nullspace()[0]
        return ("rank1", z0, "a direction annihilates every entry off the first row and column")
    return ("poly", _square_of(v))


def _case_min_two(E, d):
    """Pencil with two columns (rows handled by transposition upstream)."""
    m_ = len(E)
    for j in (0, 1):
        col = [E[i][j] for i in range(m_)]
        if _vector_rank(col) < d:
            rows = [v for v in col if not vec_is_zero(v)]
            rows = rows if rows else [tuple(Fraction(0) for _ in range(d))]
            z0 = RationalMatrix(rows).nullspace()[0]
            return ("rank1", z0, "a direction annihilates one full column of a two-column pencil")
    # bring d rows with independent first-column entries to the top
    chosen = []
    chosen_rows = []
    for i in range(m_):
        if _vector_rank(chosen + [E[i][0]]) > len(chosen):
            chosen.append(E[i][0])
            chosen_rows.append(i)
        if len(chosen) == d:
            break
    E = [list(r) for r in E]
    # chosen_rows is strictly increasing with chosen_rows[pos] >= pos, so
    # these swaps never displace a later chosen row
    for pos, i in enumerate(chosen_rows):
        E[pos], E[i] = E[i], E[pos]
    top = RationalMatrix.from_columns([E[k][0] for k in range(d)])
    for i in range(d, m_):
        coeffs = top.solve(E[i][0])
        for k in range(d):
            if coeffs[k] != 0:
                E[i] = [
                    tuple(a - coeffs[k] * b for a, b in zip(E[i][j], E[k][j]))
                    for j in range(2)
                ]
    leftover = [i for i in range(d, m_) if any(not vec_is_zero(v) for v in E[i])]
    if leftover:
        return ("continue", E)
    E = E[:d]
    if d == 3:
        return (
            "rank1",
            None,
            "pencil reduces to a three-dimensional subspace of 3x2 matrices, "
            "which always carries a rank-one direction",
        )
    # d == 2: the pencil determinant decides everything
    det_poly = (
        MultiPoly.linear(E[0][0]) * MultiPoly.linear(E[1][1])
        - MultiPoly.linear(E[0][1]) * MultiPoly.linear(E[1][0])
    )
    return _decide_binary_form(det_poly)


def _decide_binary_form(h: MultiPoly):
    """For a binary quadratic pencil determinant: definite => certificate,
    real root => rank-one direction."""
    if h.is_zero():
        return ("rank1", (Fraction(1), Fraction(0)), "pencil determinant vanishes identically")
    c20 = h.terms.get((2, 0), Fraction(0))
    c11 = h.terms.get((1, 1), Fraction(0))
    c02 = h.terms.get((0, 2), Fraction(0))
    if c20 == 0:
        return ("rank1", (Fraction(1), Fraction(0)), "pencil determinant vanishes at (1, 0)")
    disc = c11 * c11 - 4 * c20 * c02
    if disc < 0:
        return ("poly", h if c20 > 0 else -h)
    from .subspace import _rational_sqrt

    root = _rational_sqrt(disc)
    if root is not None:
        t = (-c11 + root) / (2 * c20)
        return ("rank1", (t, Fraction(1)), "pencil determinant has a rational root")
    return (
        "rank1",
        None,
        "pencil determinant has an irrational real root (discriminant %s)" % rat_to_str(disc),
    )


def _case_span_two(E, d, i0):
    E = [list(r) for r in E]
    E[0], E[i0] = E[i0], E[0]
    n_ = len(E[0])
    # two independent pivots in row 0
    piv = []
    for j in range(n_):
        if _vector_rank([E[0][k] for k in piv] + [E[0][j]]) > len(piv):
            piv.append(j)
        if len(piv) == 2:
            break
    # piv is strictly increasing, so these swaps cannot displace a later pivot
    for target, j in enumerate(piv):
        if j != target:
            for row in E:
                row[target], row[j] = row[j], row[target]
    W = RationalMatrix.from_columns([E[0][0], E[0][1]])
    for j in range(2, n_):
        if vec_is_zero(E[0][j]):
            continue
        coeffs = W.solve(E[0][j])
        for row in E:
            row[j] = tuple(
                a - coeffs[0] * b0 - coeffs[1] * b1
                for a, b0, b1 in zip(row[j], row[0], row[1])
            )
    lower_cols = [
        j for j in range(2, n_) if any(not vec_is_zero(E[i][j]) for i in range(1, len(E)))
    ]
    if not lower_cols:
        return ("continue", [row[:2] for row in E])
    j0 = lower_cols[0]
    U1 = [E[i][j0] for i in range(1, len(E)) if not vec_is_zero(E[i][j0])]
    if _vector_rank(U1) == 1:
        return ("continue", E)
    psi = _intersect_spans([E[0][0], E[0][1]], U1, d)
    if psi is None:
        raise RuntimeError("span intersection unexpectedly empty")
    return ("poly", _square_of(psi))


def _intersect_spans(vs, ws, d):
    """A non-zero vector in span(vs) ∩ span(ws), if one exists."""
    cols = [list(v) for v in vs] + [[-x for x in w] for w in ws]
    A = RationalMatrix.from_columns([tuple(c) for c in cols])
    for nv in A.nullspace():
        combo = [Fraction(0)] * d
        for c, v in zip(nv[: len(vs)], vs):
            for i in range(d):
                combo[i] += c * v[i]
        if any(x != 0 for x in combo):
            return tuple(combo)
    return None


def _case_span_three(E, d, i0):
    E = [list(r) for r in E]
    E[0], E[i0] = E[i0], E[0]
    n_ = len(E[0])
    piv = []
    for j in range(n_):
        if _vector_rank([E[0][k] for k in piv] + [E[0][j]]) > len(piv):
            piv.append(j)
        if len(piv) == 3:
            break
    for target, j in enumerate(piv):
        if j != target:
            for row in E:
                row[target], row[j] = row[j], row[target]
    W = RationalMatrix.from_columns([E[0][0], E[0][1], E[0][2]])
    for j in range(3, n_):
        if vec_is_zero(E[0][j]):
            continue
        coeffs = W.solve(E[0][j])
        for row in E:
            row[j] = tuple(
                a - sum(coeffs[k] * row[k][t] for k in range(3))
                for t, a in enumerate(row[j])
            )
    for i in range(1, len(E)):
        for j in range(3, n_):
            if not vec_is_zero(E[i][j]):
                return ("poly", _square_of(E[i][j]))
    E = [row[:3] for row in E]
    m_ = len(E)
    if m_ > 3:
        col0 = [E[i][0] for i in range(m_)]
        if _vector_rank(col0) < 3:
            return ("continue", E)
        chosen = []
        chosen_rows = []
        for i in range(m_):
            if _vector_rank(chosen + [E[i][0]]) > len(chosen):
                chosen.append(E[i][0])
                chosen_rows.append(i)
            if len(chosen) == 3:
                break
        for pos, i in enumerate(chosen_rows):
            E[pos], E[i] = E[i], E[pos]
        top = RationalMatrix.from_columns([E[k][0] for k in range(3)])
        for i in range(3, m_):
            coeffs = top.solve(E[i][0])
            E[i] = [
                tuple(a - sum(coeffs[k] * E[k][j][t] for k in range(3)) for t, a in enumerate(E[i][j]))
                for j in range(3)
            ]
        if any(any(not vec_is_zero(v) for v in E[i]) for i in range(3, m_)):
            return ("continue", E)
        E = E[:3]
    col0 = RationalMatrix([list(E[i][0]) for i in range(3)])
    if col0.rank() < 3:
        return ("continue", E)
    inv = col0.inverse()
    newE = []
    for i in range(3):
        newE.append(
            [
                tuple(
                    sum(inv[i, k] * E[k][j][t] for k in range(3))
                    for t in range(d)
                )
                for j in range(3)
            ]
        )
    E = newE
    basis = [tuple(Fraction(int(i == k)) for i in range(3)) for k in range(3)]
    if _vector_rank([basis[0], E[0][1], E[0][2]]) < 3:
        return ("continue", E)
    # remove the e1 component of the row-0 entries in columns 1, 2
    for j in (1, 2):
        alpha = E[0][j][0]
        if alpha != 0:
            for i in range(3):
                E[i][j] = tuple(a - alpha * b for a, b in zip(E[i][j], E[i][0]))
    # map (row-0 col-1, row-0 col-2) to (e2, e3) with a column transform
    M2 = RationalMatrix([[E[0][1][1], E[0][2][1]], [E[0][1][2], E[0][2][2]]])
    M2i = M2.inverse()
    for i in range(3):
        c1, c2 = E[i][1], E[i][2]
        E[i][1] = tuple(M2i[0, 0] * a + M2i[1, 0] * b for a, b in zip(c1, c2))
        E[i][2] = tuple(M2i[0, 1] * a + M2i[1, 1] * b for a, b in zip(c1, c2))
    b = tuple(x - y for x, y in zip(E[1][2], E[2][1]))
    if any(x != 0 for x in b):
        return ("poly", _square_of(b))
    # symmetric terminal shape: (b.z)^2 degenerates, and rank-one-free
    # three-dimensional symmetric pencils do exist, so neither outcome can
    # be assumed here; fall back to a direct search
    return ("symmetric", None, "reduction terminated at a symmetric 3x3 pencil")


def _certificate_target(K: Subspace):
    """Run the reduction; return ('poly', g) with g PSD non-zero in the minor
    span, or ('rank1', witness_or_None, note)."""
    d = K.d
    E = K.entry_grid()
    for _ in range(16 * (K.m + K.n + 4)):
        E = _drop_zero_lines(E)
        if not E:
            raise RuntimeError("pencil vanished during reduction")
        m_, n_ = len(E), len(E[0])
        if m_ == 1 or n_ == 1:
            v = next(v for row in E for v in row if not vec_is_zero(v))
            return ("rank1", v, "pencil has a single non-zero line")
        row_spans = [_vector_rank(row) for row in E]
        col_spans = [_vector_rank([E[i][j] for i in range(m_)]) for j in range(n_)]
        s = min(row_spans + col_spans)
        transposed = False
        if s in row_spans:
            i0 = row_spans.index(s)
        else:
            E = _transpose_grid(E)
            i0 = col_spans.index(s)
            transposed = True
            m_, n_ = n_, m_
        if s == 1:
            return _case_span_one(E, d, i0)
        if s == 2:
            if min(m_, n_) == 2:
                if n_ != 2:
                    E = _transpose_grid(E)
                res = _case_min_two(E, d)
            else:
                res = _case_span_two(E, d, i0)
        elif s == 3:
            # a two-line pencil caps every line span at 2, so here m_, n_ >= 3
            res = _case_span_three(E, d, i0)
        else:
            raise RuntimeError("span dimension %d exceeds pencil dimension" % s)
        if res[0] == "continue":
            E = res[1]
            continue
        return res
    raise RuntimeError("pencil reduction failed to terminate")


def solve_beta_for_poly(K: Subspace, g: MultiPoly):
    """Exact beta with sum_k beta_k M_k(P_K(z)) == g, or None."""
    polys = minor_polys(K, 2)
    monomials = sorted(set(e for p in polys for e in p.terms) | set(g.terms))
    if not monomials:
        return None
    A = RationalMatrix.from_columns([p.coefficient_vector(monomials) for p in polys])
    return A.solve(g.coefficient_vector(monomials))


def find_certificate_d_le_3(K: Subspace) -> CertificateOutcome:
    """Constructive certificate for pencils of dimension at most three.

    Callers are expected to have ruled out rank-one directions; when the
    reduction nevertheless runs into one, the outcome reports it instead
    of a combination.
    """
    if K.d > 3:
        raise ValueError("constructive search supports d <= 3 (got d=%d)" % K.d)
    if min(K.m, K.n) < 2:
        return CertificateOutcome(
            rank_one_witness=_any_nonzero_direction(K),
            note="single-line matrices are all of rank at most one",
        )
    kind, *rest = _certificate_target(K)
    if kind == "rank1":
        witness, note = rest
        return CertificateOutcome(rank_one_witness=witness, note=note)
    if kind == "symmetric":
        return _symmetric_fallback(K, rest[1])
    g = rest[0]
    beta = solve_beta_for_poly(K, g)
    if beta is None:
        raise RuntimeError("target polynomial left the minor span; reduction is broken")
    comb = MinorCombination(beta, QuadraticForm.from_poly(g))
    return CertificateOutcome(combination=comb)


def _symmetric_fallback(K: Subspace, note):
    """Terminal symmetric case: search instead of assuming either outcome.

    Tries a numerically guided but exactly verified PSD combination first,
    then an exact rank-one direction; reports inconclusive when both fail.
    """
    comb = psd_combination_search(K)
    if comb is not None:
        return CertificateOutcome(combination=comb)
    from .subspace import find_rank_one

    res = find_rank_one(K, mode="numeric", density=40000, seed=0)
    if res.found and res.witness is not None:
        return CertificateOutcome(
            rank_one_witness=res.witness,
            note=note + "; exact rank-one direction recovered numerically",
        )
    return CertificateOutcome(
        note=note
        + "; no exactly verified combination found and no exact rank-one "
        "direction recovered (inconclusive)",
    )


def psd_combination_search(K: Subspace, seed=0, targets=24):
    """Numeric-assisted search for an exactly PSD non-zero combination.

    Projects a family of PSD target forms onto the span of the minor
    forms, rationalizes candidate coefficients and keeps the first one
    that passes the exact PSD check.  Sound but not complete.
    """
    polys = minor_polys(K, 2)
    d = K.d
    forms = [QuadraticForm.from_poly(p) for p in polys]
    cols = []
    for f in forms:
        v = []
        for i in range(d):
            for j in range(i, d):
                v.append(float(f.matrix[i, j]))
        cols.append(v)
    Pi = np.array(cols, dtype=float).T
    rng = np.random.default_rng(seed)
    target_list = [np.eye(d)]
    for _ in range(targets):
        G = rng.standard_normal((d, d))
        target_list.append(G @ G.T + 1e-3 * np.eye(d))
    for T in target_list:
        tvec = []
        for i in range(d):
            for j in range(i, d):
                tvec.append(T[i, j])
        tvec = np.array(tvec)
        beta_f, *_ = np.linalg.lstsq(Pi, tvec, rcond=None)
        if float(np.linalg.norm(Pi @ beta_f - tvec)) > 1e-9 * max(1.0, float(np.linalg.norm(tvec))):
            continue
        comb = _rationalize_combination(K, forms, beta_f)
        if comb is not None:
            return comb
    return None


def _rationalize_combination(K, forms, beta_f):
    d = K.d
    for digits in (10**6, 10**12):
        beta = tuple(Fraction(float(b)).limit_denominator(digits) for b in beta_f)
        if all(b == 0 for b in beta):
            continue
        acc = RationalMatrix.zeros(d, d)
        for b, f in zip(beta, forms):
            if b != 0:
                acc = acc + f.matrix.scale(b)
        if acc.is_zero():
            continue
        rep = psd_analyze(acc)
        if rep.is_psd:
            return MinorCombination(beta, QuadraticForm(acc))
    return None


def _any_nonzero_direction(K):
    for l in range(K.d):
        z = tuple(Fraction(int(i == l)) for i in range(K.d))
        if not K.evaluate(z).is_zero():
            return z
    return None


# ---------------------------------------------------------------------------
# verification
# ---------------------------------------------------------------------------

class VerifyReport:
    """Exact verdict for one combination on one subspace cone."""

    __slots__ = ("verdict", "psd", "nonzero", "neg_witness", "pos_witness", "kernel")

    def __init__(self, verdict, psd, nonzero, neg_witness=None, pos_witness=None, kernel=None):
        self.verdict = verdict
        self.psd = psd
        self.nonzero = nonzero
        self.neg_witness = neg_witness
        self.pos_witness = pos_witness
        self.kernel = kernel

    @property
    def ok(self):
        return self.verdict == "psd-nontrivial"


def verify_combination(K: Subspace, comb: MinorCombination, cone_basis=None) -> VerifyReport:
    """Exact check that the combination is PSD and non-zero on the cone.

    The cone is a subspace given by basis vectors in R^d (None means all
    of R^d).  The form is rebuilt from beta, so a tampered ``form`` field
    cannot fool the verdict.
    """
    form = combination_form(K, comb.beta)
    if comb.projections is not None and any(p != 0 for p in comb.projections):
        lin = _projection_linear_form(K, comb.projections)
    else:
        lin = None
    if cone_basis is None:
        cone_basis = [tuple(Fraction(int(i == k)) for i in range(K.d)) for k in range(K.d)]
    cone_basis = [tuple(rat(x) for x in v) for v in cone_basis]
    if not cone_basis:
        return VerifyReport("trivial", True, False)
    restricted = form.restrict(cone_basis)
    if lin is not None:
        # on a subspace, non-negativity of quadratic + linear forces the
        # linear part to vanish identically there
        for v in cone_basis:
            if vec_dot(lin, v) != 0:
                return VerifyReport("indefinite", False, True,
                                    neg_witness=tuple(-x for x in v), pos_witness=v)
    if restricted.is_zero():
        return VerifyReport("trivial", True, False)
    rep = psd_analyze(restricted.matrix)
    lift = lambda w: tuple(
        sum(w[r] * cone_basis[r][i] for r in range(len(cone_basis)))
        for i in range(K.d)
    )
    if rep.is_psd:
        kernel = [lift(w) for w in rep.kernel]
        return VerifyReport("psd-nontrivial", True, True, kernel=kernel)
    neg = lift(rep.neg_witness)
    neg_rep = psd_analyze(restricted.matrix.scale(-1))
    if neg_rep.is_psd:
        return VerifyReport("nsd-nontrivial", False, True, neg_witness=neg)
    pos = lift(neg_rep.neg_witness)
    return VerifyReport("indefinite", False, True, neg_witness=neg, pos_witness=pos)


def _projection_linear_form(K: Subspace, projections):
    if len(projections) != K.m * K.n:
        raise ValueError("projection coefficient count must be m*n")
    lin = [Fraction(0)] * K.d
    idx = 0
    for i in range(K.m):
        for j in range(K.n):
            c = projections[idx]
            idx += 1
            if c != 0:
                a = K.entry_vector(i, j)
                for l in range(K.d):
                    lin[l] += c * a[l]
    return tuple(lin)


def verify_combination_on_samples(K: Subspace, comb: MinorCombination, points, tol=1e-12):
    """Sampling check on an arbitrary point set; never conclusive."""
    form = combination_form(K, comb.beta)
    values = [float(form(tuple(rat(x) for x in p))) for p in points]
    return {
        "min": min(values) if values else None,
        "max": max(values) if values else None,
        "nonnegative_on_samples": all(v >= -tol for v in values),
        "conclusive": False,
    }


# ---------------------------------------------------------------------------
# descending chain
# ---------------------------------------------------------------------------

def reduce_chain(K: Subspace, measure_support_hint=None):
    """Descending-cone reduction; terminal certificate or obstruction.

    Every cone appearing here is a subspace: each certificate form is PSD,
    so its zero set within the current cone is the kernel of the
    restricted form.  With d <= 3 the per-step search is the guaranteed
    constructive one; larger pencils fall back to the heuristic
    identity-projection step and the chain is best-effort.
    """
    if measure_support_hint:
        cone = _independent_subset([tuple(rat(x) for x in v) for v in measure_support_hint])
    else:
        cone = [tuple(Fraction(int(i == k)) for i in range(K.d)) for k in range(K.d)]
    chain = []
    cones = []
    while cone:
        sub = K.restricted(cone)
        if sub.d <= 3:
            outcome = find_certificate_d_le_3(sub)
        else:
            outcome = _heuristic_combination(sub)
        if not outcome.found:
            witness = outcome.rank_one_witness
            lifted = None
            if witness is not None:
                lifted = tuple(
                    sum(witness[r] * cone[r][i] for r in range(len(cone)))
                    for i in range(K.d)
                )
            return Obstruction(cone, "no combination on cone", lifted, outcome.note)
        beta = outcome.combination.beta
        full_form = combination_form(K, beta)
        comb = MinorCombination(beta, full_form)
        report = verify_combination(K, comb, cone)
        if not report.ok:
            raise RuntimeError("chain step failed exact verification: %s" % report.verdict)
        chain.append(comb)
        cones.append(cone)
        kernel = report.kernel
        if len(kernel) >= len(cone):
            raise RuntimeError("chain cone failed to shrink")
        cone = kernel
    return TrivialityCertificate(chain, cones, terminal=True)


def _independent_subset(vectors):
    chosen = []
    for v in vectors:
        if vec_is_zero(v):
            continue
        if _vector_rank(chosen + [v]) > len(chosen):
            chosen.append(v)
    return chosen


def _heuristic_combination(K: Subspace) -> CertificateOutcome:
    """Identity-projection search for a PSD combination; heuristic only.

    Solves the least-squares representation of the identity form in the
    span of the minor forms, rationalizes, and keeps the result only if it
    passes the exact PSD check.
    """
    polys = minor_polys(K, 2)
    d = K.d
    forms = [QuadraticForm.from_poly(p) for p in polys]
    cols = []
    for f in forms:
        v = []
        for i in range(d):
            for j in range(i, d):
                v.append(float(f.matrix[i, j]))
        cols.append(v)
    Pi = np.array(cols, dtype=float).T
    target = []
    for i in range(d):
        for j in range(i, d):
            target.append(1.0 if i == j else 0.0)
    target = np.array(target)
    beta_f, *_ = np.linalg.lstsq(Pi, target, rcond=None)
    resid = float(np.linalg.norm(Pi @ beta_f - target))
    if resid > 1e-8 * max(1.0, float(np.linalg.norm(target))):
        return CertificateOutcome(note="identity form is outside the span of the minor forms (heuristic)")
    comb = _rationalize_combination(K, forms, beta_f)
    if comb is not None:
        return CertificateOutcome(combination=comb)
    return CertificateOutcome(note="rationalized identity projection failed the exact PSD check (heuristic)")


# ---------------------------------------------------------------------------
# Grassmannian genericity
# ---------------------------------------------------------------------------

def grassmann_genericity(k, m, n, chart, A, lambda_tol=1e-12, exact=None) -> GenericityReport:
    """Probe one chart point of the space of k-dimensional subspaces.

    ``chart`` is a pair (W0 basis, W1 basis) of transversal subspaces of
    R^(mn); ``A`` is the (mn-k) x k matrix of the linear map whose graph
    over W0 picks the subspace.  The 2x2 minors restricted to that
    subspace give quadratic forms on R^k; the report carries the volume
    Lambda = det(Pi Pi^T) of their vectorization, the span dimension, and
    a combination beta whose form is positive definite when the span is
    full.
    """
    if k > m * n:
        raise ValueError("k exceeds the matrix dimension")
    W0, W1 = chart
    W0 = [list(v) for v in W0]
    W1 = [list(v) for v in W1]
    if len(W0) != k or len(W1) != m * n - k or any(len(v) != m * n for v in W0 + W1):
        raise ValueError("chart bases have wrong sizes")
    A_raw = [list(row) for row in A]
    A = np.asarray([[float(x) for x in row] for row in A_raw], dtype=float)
    if A.shape != (m * n - k, k):
        raise ValueError("chart matrix must be (mn-k) x k")
    stack = np.array([[float(x) for x in v] for v in W0 + W1])
    if np.linalg.matrix_rank(stack) < m * n:
        raise ValueError("chart subspaces are not transversal")

    W0f = np.array([[float(x) for x in v] for v in W0])
    W1f = np.array([[float(x) for x in v] for v in W1])
    span_vecs = W0f + A.T @ W1f  # rows: a_l + T(a_l)
    # pencil coefficient vectors h_st in R^k
    H = span_vecs.reshape(k, m, n)
    pairs = enumerate_minors(m, n, 2)
    q0 = len(pairs)
    nvec = k * (k + 1) // 2
    Pi = np.zeros((nvec, q0))
    X_all = np.zeros((q0, k, k))
    for jdx, (rows, cols) in enumerate(pairs):
        h11 = H[:, rows[0], cols[0]]
        h22 = H[:, rows[1], cols[1]]
        h12 = H[:, rows[0], cols[1]]
        h21 = H[:, rows[1], cols[0]]
        X = 0.5 * (np.outer(h11, h22) + np.outer(h22, h11) - np.outer(h12, h21) - np.outer(h21, h12))
        X_all[jdx] = X
        Pi[:, jdx] = _sym_vec(X, k)
    lam = float(np.linalg.det(Pi @ Pi.T))
    span_dim = int(np.linalg.matrix_rank(Pi, tol=1e-10 * max(1.0, float(np.abs(Pi).max()))))
    exact_span_dim = None
    if exact or (exact is None and _chart_is_rational(chart, A_raw)):
        exact_span_dim = _exact_span_dim(k, m, n, chart, A_raw, pairs)
    beta = None
    min_eig = None
    if abs(lam) > lambda_tol and span_dim == nvec:
        target = _sym_vec(np.eye(k), k)
        beta, *_ = np.linalg.lstsq(Pi, target, rcond=None)
        S = np.tensordot(beta, X_all, axes=1)
        min_eig = float(np.linalg.eigvalsh(S).min())
        if min_eig <= 1e-9:
            rng = np.random.default_rng(0)
            for _ in range(3):
                jitter = rng.standard_normal(q0) * 1e-6
                cand = beta + jitter - np.linalg.lstsq(Pi, Pi @ jitter, rcond=None)[0]
                S2 = np.tensordot(cand, X_all, axes=1)
                e2 = float(np.linalg.eigvalsh(S2).min())
                if e2 > min_eig:
                    beta, min_eig = cand, e2
    return GenericityReport(lam, span_dim, beta, min_eig, exact_span_dim)


def _sym_vec(X, k):
    out = []
    for i in range(k):
        for j in range(i, k):
            out.append(X[i, j])
    return np.array(out)


def _chart_is_rational(chart, A):
    W0, W1 = chart
    try:
        for v in list(W0) + list(W1):
            for x in v:
                rat(x)
        for row in A:
            for x in row:
                rat(x)
    except (TypeError, ValueError):
        return False
    return True


def _exact_span_dim(k, m, n, chart, A, pairs):
    W0, W1 = chart
    W0 = [tuple(rat(x) for x in v) for v in W0]
    W1 = [tuple(rat(x) for x in v) for v in W1]
    Aq = [[rat(x) for x in row] for row in A]
    span_vecs = []
    for l in range(k):
        v = list(W0[l])
        for i in range(m * n - k):
            c = Aq[i][l]
            if c != 0:
                for t in range(m * n):
                    v[t] += c * W1[i][t]
        span_vecs.append(v)
    rows = []
    for rows_idx, cols_idx in pairs:
        h = lambda s, t: tuple(span_vecs[l][s * n + t] for l in range(k))
        h11, h22 = h(rows_idx[0], cols_idx[0]), h(rows_idx[1], cols_idx[1])
        h12, h21 = h(rows_idx[0], cols_idx[1]), h(rows_idx[1], cols_idx[0])
        entries = []
        for i in range(k):
            for j in range(i, k):
                val = (
                    h11[i] * h22[j] + h11[j] * h22[i] - h12[i] * h21[j] - h12[j] * h21[i]
                ) / 2
                entries.append(val)
        rows.append(entries)
    return RationalMatrix(rows).rank() if rows else 0
