"""Five-atom measures on the conservation-law manifold.

The manifold is the image of (u, v) -> [[u, v], [a(v), u],
[u a(v), u^2/2 + F(v)]] for a flux a with primitive F.  Around a base
point where a' > 0, five atoms (the base point plus four symmetric
offsets) support a family of commuting measures: the weights solve the
linear system A gamma = (0,0,0,eps)^T up to a quadratic correction, and a
contraction iteration starting from the linear solution converges to
exact weights while staying componentwise positive.  Everything here is
binary64: the flux is a user callable, so all verifications are
tolerance-based and the tolerances ride along in the results.
"""

from __future__ import annotations

import math

import numpy as np

from .measures import DiscreteMeasure, is_null_lagrangian


# ---------------------------------------------------------------------------
# flux functions
# ---------------------------------------------------------------------------

class FluxFunction:
    """Flux a with primitive F (F' = a) and derivative a'."""

    __slots__ = ("a", "primitive", "a_prime", "name")

    def __init__(self, a, primitive, a_prime, name="custom", check=True):
        self.a = a
        self.primitive = primitive
        self.a_prime = a_prime
        self.name = name
        if check:
            self._check_primitive()

    def _check_primitive(self, tol=1e-8):
        from scipy.integrate import quad

        for x0, x1 in ((0.0, 0.7), (-0.9, 0.3), (0.2, 1.1)):
            integral, _ = quad(self.a, x0, x1, limit=200)
            diff = self.primitive(x1) - self.primitive(x0)
            scale = max(1.0, abs(integral))
            if abs(diff - integral) > tol * scale:
                raise ValueError(
                    "primitive inconsistent with flux on [%g, %g]: F-diff %g vs integral %g"
                    % (x0, x1, diff, integral)
                )

    def __repr__(self):
        return "FluxFunction(%r)" % self.name

    @staticmethod
    def linear():
        return FluxFunction(
            lambda v: v, lambda v: 0.5 * v * v, lambda v: 1.0, name="linear", check=False
        )

    @staticmethod
    def from_expression(text):
        ast = _parse_flux_expression(text)
        dast = _diff(ast)
        from scipy.integrate import quad

        def a(v, _ast=ast):
            return _eval(_ast, v)

        def a_prime(v, _ast=dast):
            return _eval(_ast, v)

        def primitive(v, _a=a):
            val, _ = quad(_a, 0.0, v, limit=200)
            return val

        return FluxFunction(a, primitive, a_prime, name=text, check=True)

    @staticmethod
    def named(spec):
        """Resolve "linear", "quadratic:c", "cubic:c", or an expression.

        quadratic:c means a(v) = v + c v^2 and cubic:c means
        a(v) = v + c v^3, keeping a'(0) = 1 positive.
        """
        if spec == "linear":
            return FluxFunction.linear()
        for prefix, power in (("quadratic", 2), ("cubic", 3)):
            if spec == prefix or spec.startswith(prefix + ":"):
                c = float(spec.split(":", 1)[1]) if ":" in spec else 1.0
                return FluxFunction(
                    lambda v, c=c, p=power: v + c * v**p,
                    lambda v, c=c, p=power: 0.5 * v * v + c * v ** (p + 1) / (p + 1),
                    lambda v, c=c, p=power: 1.0 + p * c * v ** (p - 1),
                    name=spec,
                    check=False,
                )
        return FluxFunction.from_expression(spec)


# -- tiny arithmetic-expression parser: +, -, *, /, ^, v, constants ---------

def _tokenize(text):
    tokens = []
    i = 0
    while i < len(text):
        ch = text[i]
        if ch.isspace():
            i += 1
            continue
        if ch in "+-*/^()":
            tokens.append(ch)
            i += 1
            continue
        if ch == "v":
            tokens.append("v")
            i += 1
            continue
        if ch.isdigit() or ch == ".":
            j = i
            while j < len(text) and (text[j].isdigit() or text[j] == "."):
                j += 1
            tokens.append(float(text[i:j]))
            i = j
            continue
        raise ValueError("unexpected character %r in flux expression" % ch)
    return tokens


def _parse_flux_expression(text):
    tokens = _tokenize(text)
    pos = [0]

    def peek():
        return tokens[pos[0]] if pos[0] < len(tokens) else None

    def take(expected=None):
        tok = peek()
        if tok is None or (expected is not None and tok != expected):
            raise ValueError("malformed flux expression %r" % text)
        pos[0] += 1
        return tok

    def parse_expr():
        node = parse_term()
        while peek() in ("+", "-"):
            op = take()
            rhs = parse_term()
            node = (("add" if op == "+" else "sub"), node, rhs)
        return node

    def parse_term():
        node = parse_factor()
        while peek() in ("*", "/"):
            op = take()
            rhs = parse_factor()
            node = (("mul" if op == "*" else "div"), node, rhs)
        return node

    def parse_factor():
        tok = peek()
        if tok == "+":
            take()
            return parse_factor()
        if tok == "-":
            take()
            return ("sub", ("num", 0.0), parse_factor())
        return parse_power()

    def parse_power():
        base = parse_atom()
        if peek() == "^":
            take()
            expo = parse_factor()
            if expo[0] != "num":
                raise ValueError("exponent must be a constant in %r" % text)
            return ("pow", base, expo)
        return base

    def parse_atom():
        tok = peek()
        if tok == "(":
            take()
            node = parse_expr()
            take(")")
            return node
        if tok == "v":
            take()
            return ("var",)
        if isinstance(tok, float):
            take()
            return ("num", tok)
        raise ValueError("malformed flux expression %r" % text)

    node = parse_expr()
    if pos[0] != len(tokens):
        raise ValueError("trailing input in flux expression %r" % text)
    return node


def _eval(node, v):
    kind = node[0]
    if kind == "num":
        return node[1]
    if kind == "var":
        return v
    if kind == "add":
        return _eval(node[1], v) + _eval(node[2], v)
    if kind == "sub":
        return _eval(node[1], v) - _eval(node[2], v)
    if kind == "mul":
        return _eval(node[1], v) * _eval(node[2], v)
    if kind == "div":
        return _eval(node[1], v) / _eval(node[2], v)
    if kind == "pow":
        return _eval(node[1], v) ** node[2][1]
    raise ValueError("bad node %r" % (node,))


def _diff(node):
    kind = node[0]
    if kind in ("num",):
        return ("num", 0.0)
    if kind == "var":
        return ("num", 1.0)
    if kind == "add":
        return ("add", _diff(node[1]), _diff(node[2]))
    if kind == "sub":
        return ("sub", _diff(node[1]), _diff(node[2]))
    if kind == "mul":
        return ("add", ("mul", _diff(node[1]), node[2]), ("mul", node[1], _diff(node[2])))
    if kind == "div":
        num = ("sub", ("mul", _diff(node[1]), node[2]), ("mul", node[1], _diff(node[2])))
        return ("div", num, ("mul", node[2], node[2]))
    if kind == "pow":
        c = node[2][1]
        inner = ("mul", ("num", c), ("pow", node[1], ("num", c - 1.0)))
        return ("mul", inner, _diff(node[1]))
    raise ValueError("bad node %r" % (node,))


# ---------------------------------------------------------------------------
# manifold points
# ---------------------------------------------------------------------------

def p1_matrix(flux: FluxFunction, u, v):
    a = flux.a(v)
    return np.array([[u, v], [a, u], [u * a, 0.5 * u * u + flux.primitive(v)]])


def p1_alpha_matrix(flux: FluxFunction, alpha, u, v):
    a1, a2 = alpha
    du = u - a1
    da = flux.a(v) - flux.a(a2)
    dF = flux.primitive(v) - flux.primitive(a2) - flux.a(a2) * (v - a2)
    return np.array([[du, v - a2], [da, du], [du * da, 0.5 * du * du + dF]])


class K1Point:
    """A state (u, v) together with its 3x2 matrix on the manifold."""

    __slots__ = ("u", "v", "matrix")

    def __init__(self, u, v, matrix, check_against=None, tol=1e-9):
        self.u = float(u)
        self.v = float(v)
        self.matrix = np.asarray(matrix, dtype=float)
        if self.matrix.shape != (3, 2):
            raise ValueError("manifold points are 3x2 matrices")
        if check_against is not None:
            expect = check_against
            scale = max(1.0, float(np.abs(expect).max()))
            if float(np.abs(self.matrix - expect).max()) > tol * scale:
                raise ValueError("matrix is off the manifold at (%g, %g)" % (u, v))

    @staticmethod
    def on_manifold(flux, u, v, tol=1e-9):
        M = p1_matrix(flux, u, v)
        return K1Point(u, v, M, check_against=M, tol=tol)

    @staticmethod
    def on_stripped(flux, alpha, u, v, tol=1e-9):
        M = p1_alpha_matrix(flux, alpha, u, v)
        return K1Point(u, v, M, check_against=M, tol=tol)


def _minor(M, i, j):
    return M[i, 0] * M[j, 1] - M[i, 1] * M[j, 0]


def minors_3x2(M):
    """(D1, D2, D3) = row-pair minors (1,2), (2,3), (1,3)."""
    return np.array([_minor(M, 0, 1), _minor(M, 1, 2), _minor(M, 0, 2)])


# ---------------------------------------------------------------------------
# the five-atom system
# ---------------------------------------------------------------------------

class FiveAtomSystem:
    """Atoms, the linear system matrix and all iteration constants."""

    __slots__ = (
        "flux", "alpha", "s0", "t0", "atoms", "A", "A_inv",
        "lam", "Lam", "C1", "C2", "theta", "eps0", "quad_mats",
    )

    def __init__(self, flux, alpha, s0, t0, atoms, A, A_inv, lam, Lam, C1, C2, theta, eps0, quad_mats):
        self.flux = flux
        self.alpha = alpha
        self.s0 = s0
        self.t0 = t0
        self.atoms = atoms
        self.A = A
        self.A_inv = A_inv
        self.lam = lam
        self.Lam = Lam
        self.C1 = C1
        self.C2 = C2
        self.theta = theta
        self.eps0 = eps0
        self.quad_mats = quad_mats

    def quadratic_term(self, gamma):
        """Q(gamma): the three minors of the weighted atom sum, padded with 0."""
        g = np.asarray(gamma, dtype=float)
        return np.array([float(g @ S @ g) for S in self.quad_mats] + [0.0])

    def linear_term(self, gamma, eps):
        return self.A @ np.asarray(gamma, dtype=float) - np.array([0.0, 0.0, 0.0, eps])

    def g_term(self, gamma, eps):
        return self.linear_term(gamma, eps) - self.quadratic_term(gamma)

    def to_json(self):
        return {
            "flux": self.flux.name,
            "alpha": [float(x) for x in self.alpha],
            "s0": self.s0,
            "t0": self.t0,
            "atoms": [a.tolist() for a in self.atoms],
            "A": self.A.tolist(),
            "lambda": self.lam,
            "Lambda": self.Lam,
            "C1": self.C1,
            "C2": self.C2,
            "theta": self.theta,
            "eps0": self.eps0,
        }


class AtomConstructionError(ValueError):
    pass


def build_atoms(flux: FluxFunction, alpha=(0.0, 0.0), s0=0.1, t0=0.1) -> FiveAtomSystem:
    """Construct the five atoms and every constant the iteration needs.

    Preconditions checked explicitly: a' > 0 at the base state, the
    shifted flux changes sign across the offset, and the shifted primitive
    is strictly convex over the offset (positive at both +-t0).
    """
    a1, a2 = float(alpha[0]), float(alpha[1])
    if s0 <= 0 or t0 <= 0:
        raise AtomConstructionError("offsets must be positive")
    if flux.a_prime(a2) <= 0:
        raise AtomConstructionError(
            "flux slope %g at the base state is not positive" % flux.a_prime(a2)
        )
    a_sh = lambda t: flux.a(a2 + t) - flux.a(a2)
    F_sh = lambda t: flux.primitive(a2 + t) - flux.primitive(a2) - flux.a(a2) * t
    if not (a_sh(t0) > 0 and a_sh(-t0) < 0):
        raise AtomConstructionError(
            "offset t0=%g too large: shifted flux does not change sign" % t0
        )
    if not (F_sh(t0) > 0 and F_sh(-t0) > 0):
        raise AtomConstructionError(
            "offset t0=%g too large: shifted primitive is not strictly convex" % t0
        )

    zeta0 = np.zeros((3, 2))
    zeta1 = p1_alpha_matrix(flux, (a1, a2), a1 + s0, a2)
    zeta2 = p1_alpha_matrix(flux, (a1, a2), a1 - s0, a2)
    zeta3 = p1_alpha_matrix(flux, (a1, a2), a1, a2 + t0)
    zeta4 = p1_alpha_matrix(flux, (a1, a2), a1, a2 - t0)
    atoms = [zeta0, zeta1, zeta2, zeta3, zeta4]

    A = np.zeros((4, 4))
    for j, z in enumerate(atoms[1:]):
        A[:3, j] = minors_3x2(z)
        A[3, j] = 1.0
    try:
        A_inv = np.linalg.inv(A)
    except np.linalg.LinAlgError as exc:
        raise AtomConstructionError("atom minor matrix is singular") from exc
    last_col = A_inv[:, 3]
    if not np.all(last_col > 0):
        raise AtomConstructionError(
            "positivity of the linear weights failed; offsets too large"
        )
    lam = float(last_col.min())
    Lam = float(last_col.max())

    # quadratic coefficient matrices of the three minors in the weights
    quad_mats = []
    for i_minor in range(3):
        S = np.zeros((4, 4))
        for j in range(4):
            for l in range(4):
                plus = minors_3x2(atoms[1 + j] + atoms[1 + l])[i_minor]
                S[j, l] = 0.5 * (
                    plus
                    - minors_3x2(atoms[1 + j])[i_minor]
                    - minors_3x2(atoms[1 + l])[i_minor]
                )
        quad_mats.append(0.5 * (S + S.T))
    # row-sum bound on each quadratic block gives |Q| <= C1 |g|^2 and
    # |DQ| <= C1 r on the r-ball
    C1 = 2.0 * math.sqrt(sum(float(np.abs(S).sum(axis=1).max()) ** 2 for S in quad_mats))
    C2 = float(np.linalg.norm(A_inv, 2)) * (1.0 + 1e-9) * C1
    theta = lam / (4.0 * Lam + 2.0 * lam)
    theta = math.nextafter(theta, 0.0)
    eps0 = theta / (2.0 * C2 * Lam)
    return FiveAtomSystem(flux, (a1, a2), float(s0), float(t0), atoms, A, A_inv,
                          lam, Lam, C1, C2, theta, eps0, quad_mats)


def solve_linear_weights(system: FiveAtomSystem, eps):
    """gamma0 = A^-1 (0,0,0,eps)^T, componentwise within [lam*eps, Lam*eps]."""
    if not 0 < eps < 1:
        raise ValueError("eps must be in (0, 1)")
    gamma0 = eps * system.A_inv[:, 3]
    lo, hi = system.lam * eps, system.Lam * eps
    slack = 1e-12 * max(1.0, hi)
    if not (np.all(gamma0 >= lo - slack) and np.all(gamma0 <= hi + slack)):
        raise RuntimeError("linear weights escaped their bracket")
    return gamma0


class IterationError(RuntimeError):
    pass


class IterationResult:
    """Converged weights plus the per-step trace.

    Trace entries carry the step norm and the guaranteed bound
    2^(k-1) theta^k |gamma0| so callers can audit the contraction.
    """

    __slots__ = ("gamma", "eps", "trace", "converged", "g_norm", "gamma0")

    def __init__(self, gamma, eps, trace, converged, g_norm, gamma0):
        self.gamma = gamma
        self.eps = eps
        self.trace = trace
        self.converged = converged
        self.g_norm = g_norm
        self.gamma0 = gamma0

    def to_json(self):
        return {
            "eps": self.eps,
            "gamma": [float(x) for x in self.gamma],
            "gamma0": [float(x) for x in self.gamma0],
            "converged": self.converged,
            "g_norm": self.g_norm,
            "trace": self.trace,
        }


def iterate_weights(system: FiveAtomSystem, eps, tol=1e-12, k_max=64) -> IterationResult:
    """Contraction iteration from the linear solution.

    Guaranteed for eps <= eps0; larger eps is attempted best-effort and
    non-convergence raises.  On every converged run the result satisfies
    the drift bound |gamma - gamma0| <= (lam/2) eps and the componentwise
    floor (lam/2) eps, both re-checked here.
    """
    guaranteed = eps <= system.eps0
    gamma0 = solve_linear_weights(system, eps)
    gamma = gamma0.copy()
    norm0 = float(np.linalg.norm(gamma0))
    trace = []
    g = system.g_term(gamma, eps)
    g_norm = float(np.linalg.norm(g))
    k = 0
    while g_norm > tol and k < k_max:
        k += 1
        delta = system.A_inv @ (-g)
        gamma = gamma + delta
        bound = 2.0 ** (k - 1) * system.theta**k * norm0
        step = float(np.linalg.norm(delta))
        trace.append({"k": k, "delta_norm": step, "bound": bound})
        if guaranteed and step > bound * (1.0 + 1e-9) + 1e-300:
            raise IterationError(
                "step %d violated the contraction bound (%g > %g)" % (k, step, bound)
            )
        g = system.g_term(gamma, eps)
        g_norm = float(np.linalg.norm(g))
    if g_norm > tol:
        raise IterationError(
            "no convergence in %d steps at eps=%g (eps0=%g); reduce eps or the offsets"
            % (k_max, eps, system.eps0)
        )
    drift = float(np.linalg.norm(gamma - gamma0))
    floor = 0.5 * system.lam * eps
    if guaranteed:
        if drift > floor * (1.0 + 1e-9):
            raise IterationError("weight drift %g exceeded (lam/2) eps = %g" % (drift, floor))
        if not np.all(gamma >= floor * (1.0 - 1e-9)):
            raise IterationError("a weight fell below the (lam/2) eps floor")
    elif np.any(gamma < 0):
        raise IterationError("weights went negative outside the guaranteed regime")
    return IterationResult(gamma, float(eps), trace, True, g_norm, gamma0)


def five_atom_measure(system: FiveAtomSystem, result: IterationResult, tol=1e-9) -> DiscreteMeasure:
    """(1-eps) at the base atom plus the converged weights; verified."""
    eps = result.eps
    weights = [1.0 - eps] + [float(x) for x in result.gamma]
    mu = DiscreteMeasure(list(system.atoms), weights)
    report = is_null_lagrangian(mu, orders=2, tol=tol)
    if not report.verdict:
        raise IterationError(
            "five-atom measure failed the commutation check (max residual %g)"
            % report.max_residual()
        )
    return mu


def push_forward_to_K1(mu_alpha: DiscreteMeasure, flux: FluxFunction, alpha,
                       tol=1e-9) -> DiscreteMeasure:
    """Transport a measure from the stripped manifold back to the full one.

    The first row of a stripped point is (u - alpha_1, v - alpha_2), so
    the state is read off row one, each atom is checked against the
    stripped parametrization, and the full-manifold measure is
    re-verified numerically.
    """
    a1, a2 = float(alpha[0]), float(alpha[1])
    new_atoms = []
    for atom in mu_alpha.atoms:
        atom = np.asarray(atom, dtype=float)
        u = a1 + atom[0, 0]
        v = a2 + atom[0, 1]
        expect = p1_alpha_matrix(flux, (a1, a2), u, v)
        scale = max(1.0, float(np.abs(expect).max()))
        if float(np.abs(atom - expect).max()) > tol * scale:
            raise ValueError("atom is off the stripped manifold beyond tolerance")
        new_atoms.append(p1_matrix(flux, u, v))
    mu = DiscreteMeasure(new_atoms, [float(w) for w in mu_alpha.weights])
    report = is_null_lagrangian(mu, orders=2, tol=tol)
    if not report.verdict:
        raise RuntimeError(
            "pushed-forward measure failed the commutation check (max residual %g)"
            % report.max_residual()
        )
    return mu


def support_radius(mu: DiscreteMeasure):
    """Largest atom norm; reported instead of an a-priori constant."""
    return max(float(np.linalg.norm(np.asarray(a, dtype=float))) for a in mu.atoms)


def negative_branch_evidence(flux: FluxFunction, alpha, delta=0.1, samples=10000, seed=0):
    """Sign sampling for the decreasing-flux branch.

    With a' < 0 at the base state, (u2-u1)^2 - (v2-v1)(a(v2)-a(v1)) should
    stay non-negative on pairs near the base point, vanishing only on the
    diagonal; this reports the sampled range as evidence, not a proof.
    """
    a1, a2 = float(alpha[0]), float(alpha[1])
    if flux.a_prime(a2) >= 0:
        raise ValueError("negative branch needs a' < 0 at the base state")
    rng = np.random.default_rng(seed)
    pts = rng.uniform(-delta, delta, size=(samples, 4))
    u1, v1 = a1 + pts[:, 0], a2 + pts[:, 1]
    u2, v2 = a1 + pts[:, 2], a2 + pts[:, 3]
    av = np.array([flux.a(x) for x in v2]) - np.array([flux.a(x) for x in v1])
    vals = (u2 - u1) ** 2 - (v2 - v1) * av
    return {
        "min": float(vals.min()),
        "max": float(vals.max()),
        "sign_constant": bool(vals.min() >= 0.0),
        "samples": int(samples),
        "delta": float(delta),
        "note": "sampled evidence only; the triviality conclusion is not proved here",
    }
