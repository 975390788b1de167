import numpy as np
import pytest

from nullag.conslaw import (
    AtomConstructionError,
    FluxFunction,
    IterationError,
    K1Point,
    build_atoms,
    five_atom_measure,
    iterate_weights,
    minors_3x2,
    negative_branch_evidence,
    p1_alpha_matrix,
    p1_matrix,
    push_forward_to_K1,
    solve_linear_weights,
    support_radius,
)
from nullag.measures import DiscreteMeasure, is_null_lagrangian


# ---------------------------------------------------------------------------
# flux functions
# ---------------------------------------------------------------------------

def test_flux_named_forms():
    lin = FluxFunction.named("linear")
    assert lin.a(0.3) == 0.3 and lin.a_prime(2.0) == 1.0
    quad = FluxFunction.named("quadratic:1")
    assert quad.a(0.5) == pytest.approx(0.75)
    assert quad.a_prime(0.0) == pytest.approx(1.0)
    assert quad.primitive(1.0) == pytest.approx(0.5 + 1.0 / 3.0)


def test_flux_expression_parser():
    f = FluxFunction.named("v + v^2")
    assert f.a(0.5) == pytest.approx(0.75)
    assert f.a_prime(0.5) == pytest.approx(2.0)
    assert f.primitive(1.0) == pytest.approx(0.5 + 1.0 / 3.0, abs=1e-10)
    g = FluxFunction.named("(1 - v) * v / 2")
    assert g.a(0.5) == pytest.approx(0.125)
    with pytest.raises(ValueError):
        FluxFunction.named("v ^ v")
    with pytest.raises(ValueError):
        FluxFunction.named("w + 1")
    with pytest.raises(ValueError):
        FluxFunction.named("v +")


def test_flux_primitive_consistency_enforced():
    with pytest.raises(ValueError):
        FluxFunction(lambda v: v, lambda v: v, lambda v: 1.0, check=True)


def test_k1_point_validation():
    flux = FluxFunction.linear()
    pt = K1Point.on_manifold(flux, 0.3, -0.2)
    assert pt.matrix.shape == (3, 2)
    M = p1_matrix(flux, 0.3, -0.2)
    M[2, 1] += 1.0
    with pytest.raises(ValueError):
        K1Point(0.3, -0.2, M, check_against=p1_matrix(flux, 0.3, -0.2))


# ---------------------------------------------------------------------------
# atom construction
# ---------------------------------------------------------------------------

def test_build_atoms_linear_matrix():
    flux = FluxFunction.linear()
    S = build_atoms(flux, (0.0, 0.0), 0.1, 0.1)
    s = 0.1
    expect = np.array(
        [
            [s**2, s**2, -(s**2), -(s**2)],
            [0.0, 0.0, s**3 / 2, -(s**3) / 2],
            [s**3 / 2, -(s**3) / 2, 0.0, 0.0],
            [1.0, 1.0, 1.0, 1.0],
        ]
    )
    assert np.abs(S.A - expect).max() < 1e-15
    assert S.atoms[0].tolist() == np.zeros((3, 2)).tolist()
    assert 0 < S.lam <= S.Lam
    assert 0 < S.theta < 0.5
    assert S.eps0 > 0


def test_build_atoms_rejects_negative_slope():
    flux = FluxFunction.named("0 - v")
    with pytest.raises(AtomConstructionError):
        build_atoms(flux, (0.0, 0.0), 0.1, 0.1)


def test_build_atoms_rejects_large_offsets():
    flux = FluxFunction.named("quadratic:1")
    with pytest.raises(AtomConstructionError):
        build_atoms(flux, (0.0, 0.0), 0.1, 1.5)  # shifted flux keeps one sign


def test_build_atoms_quadratic_constants():
    flux = FluxFunction.named("quadratic:1")
    S = build_atoms(flux, (0.0, 0.0), 0.05, 0.05)
    inv_last = np.linalg.inv(S.A)[:, 3]
    assert np.all(inv_last > 0)
    assert S.lam == pytest.approx(inv_last.min())
    assert S.Lam == pytest.approx(inv_last.max())


# ---------------------------------------------------------------------------
# weights
# ---------------------------------------------------------------------------

def test_linear_weights_symmetric_offsets():
    flux = FluxFunction.linear()
    S = build_atoms(flux, (0.0, 0.0), 0.1, 0.1)
    eps = 0.01
    gamma0 = solve_linear_weights(S, eps)
    assert np.abs(gamma0 - eps / 4).max() < 1e-14
    assert np.abs(S.quadratic_term(gamma0)).max() < 1e-14


def test_linear_weights_asymmetric_offsets():
    flux = FluxFunction.linear()
    s, t = 0.1, 0.05
    S = build_atoms(flux, (0.0, 0.0), s, t)
    eps = 0.01
    gamma0 = solve_linear_weights(S, eps)
    # rows two and three force the pairs equal; rows one and four fix the ratio
    g12 = eps * t**2 / (2 * (s**2 + t**2))
    g34 = eps * s**2 / (2 * (s**2 + t**2))
    assert np.abs(gamma0 - np.array([g12, g12, g34, g34])).max() < 1e-14


def test_linear_weights_solve_equation():
    flux = FluxFunction.named("quadratic:1")
    S = build_atoms(flux, (0.3, 0.1), 0.05, 0.04)
    eps = 1e-3
    gamma0 = solve_linear_weights(S, eps)
    assert np.abs(S.A @ gamma0 - np.array([0, 0, 0, eps])).max() < 1e-16


def test_iteration_linear_zero_steps():
    flux = FluxFunction.linear()
    S = build_atoms(flux, (0.0, 0.0), 0.1, 0.1)
    res = iterate_weights(S, 0.01)
    assert res.trace == []
    assert np.abs(res.gamma - res.gamma0).max() == 0.0


def test_iteration_quadratic_converges():
    flux = FluxFunction.named("quadratic:1")
    S = build_atoms(flux, (0.0, 0.0), 0.1, 0.1)
    eps = S.eps0 / 2
    res = iterate_weights(S, eps)
    assert res.g_norm <= 1e-12
    norm0 = np.linalg.norm(res.gamma0)
    for entry in res.trace:
        assert entry["delta_norm"] <= entry["bound"] * (1 + 1e-9)
        assert entry["bound"] == pytest.approx(2.0 ** (entry["k"] - 1) * S.theta ** entry["k"] * norm0)
    floor = 0.5 * S.lam * eps
    assert np.all(res.gamma >= floor * (1 - 1e-9))
    assert np.linalg.norm(res.gamma - res.gamma0) <= floor * (1 + 1e-9)
    # defining equation restated: A gamma - (0,0,0,eps) = Q(gamma)
    assert np.abs(S.linear_term(res.gamma, eps) - S.quadratic_term(res.gamma)).max() <= 1e-12


def test_iteration_error_reported_when_budget_exhausted():
    # the failure mode outside the guarantee is non-convergence within
    # k_max; a tight cap exercises the reporting path deterministically
    flux = FluxFunction.named("quadratic:1")
    S = build_atoms(flux, (0.0, 0.0), 0.1, 0.1)
    with pytest.raises(IterationError, match="no convergence"):
        iterate_weights(S, S.eps0 / 2, tol=1e-15, k_max=1)


# ---------------------------------------------------------------------------
# measures and push-forward
# ---------------------------------------------------------------------------

def test_five_atom_measure_linear():
    flux = FluxFunction.linear()
    S = build_atoms(flux, (0.0, 0.0), 0.1, 0.1)
    res = iterate_weights(S, 0.01)
    mu = five_atom_measure(S, res)
    rep = is_null_lagrangian(mu, orders=2, tol=1e-12)
    assert rep.verdict


def test_five_atom_measure_quadratic_and_push_forward():
    flux = FluxFunction.named("quadratic:1")
    S = build_atoms(flux, (0.0, 0.0), 0.1, 0.1)
    res = iterate_weights(S, S.eps0 / 2)
    mu = five_atom_measure(S, res)
    assert is_null_lagrangian(mu, orders=2, tol=1e-9).verdict
    pushed = push_forward_to_K1(mu, flux, (0.0, 0.0))
    assert is_null_lagrangian(pushed, orders=2, tol=1e-9).verdict
    assert support_radius(pushed) > 0


def test_push_forward_dirac():
    flux = FluxFunction.named("quadratic:1")
    alpha = (0.3, 0.2)
    mu = DiscreteMeasure([np.zeros((3, 2))], [1.0])
    pushed = push_forward_to_K1(mu, flux, alpha)
    assert np.abs(pushed.atoms[0] - p1_matrix(flux, *alpha)).max() < 1e-12


def test_push_forward_matches_stripped_at_origin():
    # with base point 0 and a(0) = 0, the stripped and full parametrizations
    # coincide, so atoms must come back unchanged
    flux = FluxFunction.linear()
    S = build_atoms(flux, (0.0, 0.0), 0.1, 0.1)
    res = iterate_weights(S, 0.01)
    mu = five_atom_measure(S, res)
    pushed = push_forward_to_K1(mu, flux, (0.0, 0.0))
    for a, b in zip(mu.atoms, pushed.atoms):
        assert np.abs(np.asarray(a) - np.asarray(b)).max() < 1e-12


def test_push_forward_rejects_off_manifold_atom():
    flux = FluxFunction.linear()
    bad = np.array([[0.1, 0.0], [0.5, 0.1], [0.0, 0.005]])  # second row wrong
    mu = DiscreteMeasure([bad], [1.0])
    with pytest.raises(ValueError):
        push_forward_to_K1(mu, flux, (0.0, 0.0))


def test_nonzero_base_point_quadratic():
    flux = FluxFunction.named("quadratic:1")
    alpha = (0.7, 0.4)
    S = build_atoms(flux, alpha, 0.05, 0.05)
    res = iterate_weights(S, S.eps0 / 2)
    mu = five_atom_measure(S, res)
    pushed = push_forward_to_K1(mu, flux, alpha)
    assert is_null_lagrangian(pushed, orders=2, tol=1e-9).verdict


# ---------------------------------------------------------------------------
# negative branch
# ---------------------------------------------------------------------------

def test_negative_branch_linear_decreasing():
    flux = FluxFunction.named("0 - v")
    report = negative_branch_evidence(flux, (0.0, 0.0), delta=0.1, samples=2000, seed=0)
    assert report["sign_constant"]
    assert report["min"] >= 0


def test_negative_branch_requires_negative_slope():
    with pytest.raises(ValueError):
        negative_branch_evidence(FluxFunction.linear(), (0.0, 0.0))


def test_negative_branch_quadratic():
    flux = FluxFunction.named("0 - v + v^2")
    report = negative_branch_evidence(flux, (0.0, 0.0), delta=0.05, samples=10000, seed=1)
    assert report["sign_constant"]
