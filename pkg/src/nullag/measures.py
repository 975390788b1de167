"""Discrete measures on matrix space and the Farkas feasibility kernel.

A finite atomic probability measure commutes with a minor M when
int M dmu = M(int X dmu); measures doing so for every minor are the
objects the rest of the library certifies against.  Verification is exact
over the rationals.  Non-trivial measures with barycenter zero are
constructed by convex-hull membership: collect candidate support points,
stack the values of a spanning family of polynomials, and solve the
resulting equality-form Farkas problem with an exact simplex.
"""

from __future__ import annotations

import itertools
from fractions import Fraction

import numpy as np

from .algebra import (
    MultiPoly,
    RationalMatrix,
    enumerate_minors,
    minor,
    nonvanishing_minor_candidates,
    rat,
    rat_from_str,
    rat_to_str,
    vec_dot,
    vec_is_zero,
)
from .subspace import Subspace


# ---------------------------------------------------------------------------
# measures
# ---------------------------------------------------------------------------

class DiscreteMeasure:
    """Finite atomic probability measure.

    Atoms are RationalMatrix (exact) or float arrays (numeric); weights
    follow the same split.  Weights are non-negative and sum to one;
    atoms are pairwise distinct.
    """

    __slots__ = ("atoms", "weights", "exact")

    def __init__(self, atoms, weights):
        atoms = list(atoms)
        if not atoms:
            raise ValueError("measure needs at least one atom")
        exact = all(isinstance(a, RationalMatrix) for a in atoms)
        if exact:
            weights = tuple(rat(w) for w in weights)
            if any(w < 0 for w in weights):
                raise ValueError("weights must be non-negative")
            if sum(weights) != 1:
                raise ValueError("weights must sum to one")
            if len({a.entries for a in atoms}) != len(atoms):
                raise ValueError("atoms must be pairwise distinct")
        else:
            atoms = [np.asarray(a, dtype=float) for a in atoms]
            weights = tuple(float(w) for w in weights)
            if any(w < -1e-15 for w in weights):
                raise ValueError("weights must be non-negative")
            if abs(sum(weights) - 1.0) > 1e-9:
                raise ValueError("weights must sum to one")
        if len(atoms) != len(weights):
            raise ValueError("atom and weight counts differ")
        self.atoms = atoms
        self.weights = weights
        self.exact = exact

    @property
    def shape(self):
        a = self.atoms[0]
        if self.exact:
            return (a.rows, a.cols)
        return tuple(a.shape)

    def barycenter(self):
        if self.exact:
            m, n = self.shape
            acc = RationalMatrix.zeros(m, n)
            for w, a in zip(self.weights, self.atoms):
                acc = acc + a.scale(w)
            return acc
        acc = np.zeros(self.shape)
        for w, a in zip(self.weights, self.atoms):
            acc = acc + w * a
        return acc

    def is_dirac(self):
        return sum(1 for w in self.weights if (w != 0 if self.exact else w > 1e-15)) <= 1

    def pruned(self):
        """Drop zero-weight atoms."""
        keep = [
            (a, w)
            for a, w in zip(self.atoms, self.weights)
            if (w != 0 if self.exact else w > 1e-15)
        ]
        return DiscreteMeasure([a for a, _ in keep], [w for _, w in keep])

    def to_json(self):
        m, n = self.shape
        if self.exact:
            atoms = [[[rat_to_str(a[i, j]) for j in range(n)] for i in range(m)] for a in self.atoms]
            weights = [rat_to_str(w) for w in self.weights]
        else:
            atoms = [[[float(a[i, j]) for j in range(n)] for i in range(m)] for a in self.atoms]
            weights = [float(w) for w in self.weights]
        return {"kind": "measure", "shape": [m, n], "atoms": atoms, "weights": weights}

    @staticmethod
    def from_json(obj):
        try:
            atoms_raw = obj["atoms"]
            weights_raw = obj["weights"]
            exact = all(
                isinstance(x, (str, int)) for a in atoms_raw for row in a for x in row
            ) and all(isinstance(w, (str, int)) for w in weights_raw)
            if exact:
                atoms = [RationalMatrix([[rat_from_str(x) for x in row] for row in a]) for a in atoms_raw]
                weights = [rat_from_str(w) for w in weights_raw]
            else:
                atoms = [np.asarray(a, dtype=float) for a in atoms_raw]
                weights = [float(w) for w in weights_raw]
        except (KeyError, TypeError, ValueError) as exc:
            raise ValueError("bad measure JSON: %s" % exc) from exc
        mu = DiscreteMeasure(atoms, weights)
        if "shape" in obj and tuple(obj["shape"]) != mu.shape:
            raise ValueError("measure JSON shape inconsistent with atoms")
        return mu


class NLReport:
    """Verdict of the Null-Lagrangian check with per-minor residuals.

    ``residuals`` maps (rowset, colset) to the residual value for every
    minor that was actually evaluated; minors skipped because every atom
    (and the barycenter) has a structurally zero submatrix there are
    exactly zero and only counted.
    """

    __slots__ = ("verdict", "residuals", "checked", "skipped", "exact", "tol")

    def __init__(self, verdict, residuals, checked, skipped, exact, tol):
        self.verdict = verdict
        self.residuals = residuals
        self.checked = checked
        self.skipped = skipped
        self.exact = exact
        self.tol = tol

    def max_residual(self):
        if not self.residuals:
            return 0
        return max(abs(v) for v in self.residuals.values())


def is_null_lagrangian(mu: DiscreteMeasure, shape=None, orders="all", tol=1e-9) -> NLReport:
    """Check int M dmu == M(barycenter) for the enumerated minors.

    Exact measures get an exact verdict (residuals must vanish
    identically); float measures are checked against ``tol``.
    """
    m, n = mu.shape
    if shape is not None and tuple(shape) != (m, n):
        raise ValueError("measure shape %r does not match %r" % ((m, n), tuple(shape)))
    bary = mu.barycenter()
    if mu.exact:
        cand = nonvanishing_minor_candidates(list(mu.atoms) + [bary], m, n, orders)
        total = len(enumerate_minors(m, n, orders))
        residuals = {}
        for rows, cols in sorted(cand):
            val = sum(
                (w * minor(a, rows, cols) for w, a in zip(mu.weights, mu.atoms)),
                Fraction(0),
            ) - minor(bary, rows, cols)
            residuals[(rows, cols)] = val
        verdict = all(v == 0 for v in residuals.values())
        return NLReport(verdict, residuals, len(residuals), total - len(residuals), True, 0)
    pairs = enumerate_minors(m, n, orders)
    residuals = {}
    for rows, cols in pairs:
        val = sum(
            w * float(np.linalg.det(a[np.ix_(rows, cols)])) for w, a in zip(mu.weights, mu.atoms)
        ) - float(np.linalg.det(bary[np.ix_(rows, cols)]))
        residuals[(rows, cols)] = val
    verdict = all(abs(v) <= tol for v in residuals.values())
    return NLReport(verdict, residuals, len(residuals), 0, False, tol)


def two_atom_measure(K: Subspace, witness) -> DiscreteMeasure:
    """The measure (1/2) delta_A + (1/2) delta_{-A} at A = P(witness)."""
    A = K.evaluate(witness)
    if A.is_zero():
        raise ValueError("witness direction evaluates to the zero matrix")
    return DiscreteMeasure([A, A.scale(-1)], [Fraction(1, 2), Fraction(1, 2)])


# ---------------------------------------------------------------------------
# Farkas kernel
# ---------------------------------------------------------------------------

class FarkasProblem:
    """Feasibility instance: does Ax = b admit x >= 0?"""

    __slots__ = ("A", "b")

    def __init__(self, A: RationalMatrix, b):
        b = tuple(rat(x) for x in b)
        if len(b) != A.rows:
            raise ValueError("right-hand side length mismatch")
        self.A = A
        self.b = b


class FarkasResult:
    """Either a non-negative solution or a separating certificate.

    ``x``            solution with Ax = b, x >= 0 (exact), or None.
    ``certificate``  y with y.A >= 0 componentwise and y.b < 0, or None.
    Exactly one of the two is set.
    """

    __slots__ = ("x", "certificate")

    def __init__(self, x=None, certificate=None):
        self.x = x
        self.certificate = certificate

    @property
    def feasible(self):
        return self.x is not None


def farkas_solve(problem: FarkasProblem) -> FarkasResult:
    """Exact phase-one simplex with Bland's rule (termination guaranteed).

    Minimizes the artificial mass of Ax + s = b', x, s >= 0; a zero
    optimum yields the solution, a positive optimum yields the separating
    vector from the simplex multipliers.  Both outcomes are re-verified
    exactly before returning.
    """
    A, b = problem.A, problem.b
    m, n = A.rows, A.cols
    signs = [Fraction(-1) if x < 0 else Fraction(1) for x in b]
    T = [
        [signs[i] * A.entries[i][j] for j in range(n)]
        + [Fraction(int(i == k)) for k in range(m)]
        + [signs[i] * b[i]]
        for i in range(m)
    ]
    basis = [n + i for i in range(m)]
    ncols = n + m

    def reduced_cost(j):
        # cost 0 on structural, 1 on artificial columns
        rc = Fraction(1) if j >= n else Fraction(0)
        for i in range(m):
            if basis[i] >= n:
                rc -= T[i][j]
        return rc

    while True:
        enter = None
        for j in range(ncols):
            if j in basis:
                continue
            if reduced_cost(j) < 0:
                enter = j
                break
        if enter is None:
            break
        leave = None
        best = None
        for i in range(m):
            if T[i][enter] > 0:
                ratio = T[i][ncols] / T[i][enter]
                if best is None or ratio < best or (ratio == best and basis[i] < basis[leave]):
                    best = ratio
                    leave = i
        if leave is None:
            raise RuntimeError("phase-one objective unbounded; this cannot happen")
        piv = T[leave][enter]
        T[leave] = [x / piv for x in T[leave]]
        for i in range(m):
            if i != leave and T[i][enter] != 0:
                f = T[i][enter]
                T[i] = [a - f * p for a, p in zip(T[i], T[leave])]
        basis[leave] = enter

    objective = sum((T[i][ncols] for i in range(m) if basis[i] >= n), Fraction(0))
    if objective == 0:
        x = [Fraction(0)] * n
        for i in range(m):
            if basis[i] < n:
                x[basis[i]] = T[i][ncols]
        x = tuple(x)
        if any(xi < 0 for xi in x) or A.matvec(x) != b:
            raise RuntimeError("simplex produced an invalid solution")
        return FarkasResult(x=x)
    # simplex multipliers off the artificial columns: y'_i = (c_B B^-1)_i
    yprime = []
    for i in range(m):
        yprime.append(sum((T[r][n + i] for r in range(m) if basis[r] >= n), Fraction(0)))
    y = tuple(-signs[i] * yprime[i] for i in range(m))
    ys = [vec_dot(y, A.column(j)) for j in range(n)]
    if any(v < 0 for v in ys) or vec_dot(y, b) >= 0:
        raise RuntimeError("simplex produced an invalid infeasibility certificate")
    return FarkasResult(certificate=y)


def farkas_feasible_bruteforce(problem: FarkasProblem) -> bool:
    """Independent oracle: enumerate candidate basic solutions exhaustively.

    A feasible system has a basic feasible solution supported on linearly
    independent columns, so checking every independent column subset
    decides feasibility.  Exponential; for cross-checking small systems.
    """
    A, b = problem.A, problem.b
    n = A.cols
    if all(x == 0 for x in b):
        return True
    for size in range(1, min(A.rows, n) + 1):
        for subset in itertools.combinations(range(n), size):
            sub = RationalMatrix.from_columns([A.column(j) for j in subset])
            if sub.rank() < size:
                continue
            sol = sub.solve(b)
            if sol is None:
                continue
            if all(x >= 0 for x in sol):
                return True
    return False


# ---------------------------------------------------------------------------
# non-trivial measure construction
# ---------------------------------------------------------------------------

class VectorMeasure:
    """Finite atomic measure on R^d points (pre-push-forward form)."""

    __slots__ = ("points", "weights")

    def __init__(self, points, weights):
        self.points = [tuple(rat(x) for x in p) for p in points]
        self.weights = tuple(rat(w) for w in weights)

    def barycenter(self):
        d = len(self.points[0])
        return tuple(
            sum((w * p[i] for w, p in zip(self.weights, self.points)), Fraction(0))
            for i in range(d)
        )


def default_cone_sampler(d, seed=0, candidates=None):
    """Deterministic stratified stream of rational points on R^d \\ {0}.

    Yields user candidates first, then signed coordinate directions, then
    signed two-index combinations, then seeded random rational points.
    Low-height points come first because structured measures tend to be
    supported there.
    """
    import random as _random

    def gen():
        seen = set()

        def emit(p):
            p = tuple(rat(x) for x in p)
            if vec_is_zero(p) or p in seen:
                return None
            seen.add(p)
            return p

        for p in candidates or []:
            q = emit(p)
            if q is not None:
                yield q
        for i in range(d):
            for s in (1, -1):
                p = [Fraction(0)] * d
                p[i] = Fraction(s)
                q = emit(p)
                if q is not None:
                    yield q
        for i in range(d):
            for j in range(i + 1, d):
                for si, sj in ((1, 1), (1, -1), (-1, 1), (-1, -1)):
                    p = [Fraction(0)] * d
                    p[i], p[j] = Fraction(si), Fraction(sj)
                    q = emit(p)
                    if q is not None:
                        yield q
        rng = _random.Random(seed)
        attempts = 0
        while True:
            attempts += 1
            span = 12 + attempts // 16  # widen so the point space never exhausts
            p = [Fraction(rng.randint(-span, span), rng.randint(1, 4)) for _ in range(d)]
            q = emit(p)
            if q is not None:
                yield q

    return gen()


def construct_nontrivial(F, cone_sampler=None, d=None, budget=512, rounds=8,
                         batch=32, value_fn=None, seed=0, candidates=None):
    """Search for a non-trivial measure with barycenter 0 commuting with F.

    ``F`` is a list of homogeneous polynomials that must contain the d
    coordinate projections (so that a solution automatically has
    barycenter zero).  Alternatively ``value_fn``/``d`` supply the family
    lazily as a per-point value tuple, which keeps huge minor families
    affordable.  Feasibility over a finite sample is monotone in the
    sample, so the sample grows in rounds until the Farkas solve succeeds
    or the budget runs out.

    Returns a VectorMeasure (atoms in R^d), or None.
    """
    if value_fn is None:
        if not F:
            raise ValueError("empty polynomial family")
        d = F[0].nvars
        projections_present = set()
        for f in F:
            for i in range(d):
                if f == MultiPoly.variable(d, i):
                    projections_present.add(i)
        if len(projections_present) != d:
            raise ValueError("family must contain all %d coordinate projections" % d)

        def value_fn(p, _F=F):
            # sparse row map: function index -> non-zero value at p
            out = {}
            for idx, f in enumerate(_F):
                v = f.eval(p)
                if v != 0:
                    out[idx] = v
            return out

    elif d is None:
        raise ValueError("value_fn requires d")

    sampler = cone_sampler if cone_sampler is not None else default_cone_sampler(
        d, seed=seed, candidates=candidates
    )
    points = []
    values = []

    def grow(count):
        added = 0
        for p in sampler:
            points.append(p)
            values.append(value_fn(p))
            added += 1
            if added >= count:
                break
        return added

    first = max(batch, 2 * d)
    for rnd in range(rounds):
        want = first if rnd == 0 else batch
        want = min(want, budget - len(points))
        if want > 0:
            grow(want)
        if not points:
            return None
        rows = _independent_value_rows(values)
        ncols = len(points)
        Amat = RationalMatrix(
            [[values[c].get(r, Fraction(0)) for c in range(ncols)] for r in rows]
            + [[Fraction(1)] * ncols]
        )
        b = [Fraction(0)] * len(rows) + [Fraction(1)]
        res = farkas_solve(FarkasProblem(Amat, b))
        if res.feasible:
            atoms = []
            weights = []
            for lam, p, vals in zip(res.x, points, values):
                if lam != 0:
                    atoms.append(p)
                    weights.append(lam)
            mu = VectorMeasure(atoms, weights)
            _verify_vector_measure(mu, values, points, res.x)
            return mu
        if len(points) >= budget:
            return None
    return None


def _independent_value_rows(values):
    """Indices of a row basis of the (functions x points) value matrix.

    Values are sparse per-point maps {function index: value}; rows that
    vanish on every point never appear.  Identical constraint rows are
    redundant and dependent rows do not change the solution set, so the
    Farkas instance only needs a basis.
    """
    ncols = len(values)
    live = sorted(set().union(*values)) if values else []
    basis_rows = []
    chosen = []
    seen = set()
    for r in live:
        row = [values[c].get(r, Fraction(0)) for c in range(ncols)]
        key = tuple(row)
        if key in seen:
            continue
        seen.add(key)
        red = list(row)
        for br in basis_rows:
            piv = next(i for i, x in enumerate(br) if x != 0)
            if red[piv] != 0:
                f = red[piv] / br[piv]
                red = [a - f * bb for a, bb in zip(red, br)]
        if any(x != 0 for x in red):
            basis_rows.append(red)
            chosen.append(r)
    return chosen


def _verify_vector_measure(mu: VectorMeasure, values, points, x):
    total = sum(mu.weights, Fraction(0))
    if total != 1:
        raise RuntimeError("constructed measure weights do not sum to one")
    for r in sorted(set().union(*values)):
        acc = sum(
            (lam * values[c].get(r, Fraction(0)) for c, lam in enumerate(x) if lam != 0),
            Fraction(0),
        )
        if acc != 0:
            raise RuntimeError("constructed measure fails exact commutation")
    if len(mu.points) < 2:
        raise RuntimeError("constructed measure is a Dirac; projections row missing?")


# ---------------------------------------------------------------------------
# subspace front end
# ---------------------------------------------------------------------------

def subspace_value_fn(K: Subspace, orders="all"):
    """Per-point values of every minor of P(z) plus the d projections.

    Minor values are computed on the evaluated matrix with structural-zero
    filtering, so sparse sample points stay cheap even for big shapes.
    """
    pairs = enumerate_minors(K.m, K.n, orders)
    index = {pc: i for i, pc in enumerate(pairs)}
    nminors = len(pairs)

    def value(p):
        M = K.evaluate(p)
        vals = {}
        for rows, cols in nonvanishing_minor_candidates([M], K.m, K.n, orders):
            v = minor(M, rows, cols)
            if v != 0:
                vals[index[(rows, cols)]] = v
        for i in range(K.d):
            if p[i] != 0:
                vals[nminors + i] = p[i]
        return vals

    return value


def construct_nontrivial_for_subspace(K: Subspace, budget=512, rounds=8, seed=0,
                                      candidates=None, orders="all"):
    """Non-trivial barycenter-zero measure on K, or None.

    Solves the convex-hull membership in pencil coordinates, maps atoms
    through the pencil and re-verifies the matrix measure exactly against
    every minor order before returning it.
    """
    vm = construct_nontrivial(
        None,
        d=K.d,
        budget=budget,
        rounds=rounds,
        value_fn=subspace_value_fn(K, orders),
        seed=seed,
        candidates=candidates,
    )
    if vm is None:
        return None
    mu = DiscreteMeasure([K.evaluate(p) for p in vm.points], vm.weights)
    report = is_null_lagrangian(mu, orders=orders)
    if not report.verdict:
        raise RuntimeError("constructed matrix measure fails exact verification")
    if not mu.barycenter().is_zero():
        raise RuntimeError("constructed measure has non-zero barycenter")
    return mu
