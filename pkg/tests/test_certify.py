import random
from fractions import Fraction

import numpy as np
import pytest

from nullag.algebra import QuadraticForm, RationalMatrix, enumerate_minors, psd_analyze
from nullag.certify import (
    MinorCombination,
    Obstruction,
    TrivialityCertificate,
    combination_form,
    find_certificate_d_le_3,
    grassmann_genericity,
    reduce_chain,
    solve_beta_for_poly,
    verify_combination,
)
from nullag.fixtures import (
    builtin,
    k0_pencil,
    kr_family,
    quaternion_pencil,
    rotation_pencil,
    sub_k0_random,
    v0_chart,
    v0_subspace,
)
from nullag.subspace import Subspace, apply_ops, find_rank_one, minor_polys, random_pencil_ops


# ---------------------------------------------------------------------------
# constructive search, d <= 3
# ---------------------------------------------------------------------------

def test_certificate_diag_pencil():
    K = v0_subspace(2, 4, 4)
    out = find_certificate_d_le_3(K)
    assert out.found
    rep = verify_combination(K, out.combination)
    assert rep.ok
    # the two squared-coordinate minors give the identity form directly
    pairs = enumerate_minors(4, 4, 2)
    beta = [Fraction(0)] * len(pairs)
    beta[pairs.index(((0, 1), (0, 1)))] = Fraction(1)  # y1^2
    beta[pairs.index(((2, 3), (2, 3)))] = Fraction(1)  # y2^2
    comb = MinorCombination(beta, combination_form(K, beta))
    assert comb.form.matrix == RationalMatrix.identity(2)
    rep2 = psd_analyze(comb.form.matrix)
    assert rep2.is_psd and rep2.rank == 2 and rep2.kernel == []
    assert verify_combination(K, comb).ok


def test_certificate_rotation_single_minor():
    K = rotation_pencil()
    out = find_certificate_d_le_3(K)
    assert out.found
    beta = out.combination.beta
    assert len(beta) == 1 and beta[0] != 0
    assert out.combination.form.matrix == RationalMatrix.identity(2).scale(abs(beta[0]))
    assert verify_combination(K, out.combination).ok


def test_certificate_refused_on_rank_one():
    out = find_certificate_d_le_3(k0_pencil())
    assert not out.found
    assert out.rank_one_witness is not None
    K = k0_pencil()
    assert K.evaluate(out.rank_one_witness).rank() == 1


def test_certificate_d3_quaternion():
    K = quaternion_pencil()
    out = find_certificate_d_le_3(K)
    assert out.found
    assert verify_combination(K, out.combination).ok


def test_certificate_d_too_large():
    with pytest.raises(ValueError):
        find_certificate_d_le_3(kr_family(0))


def test_certificate_fuzz_sub_k0():
    for seed in range(25):
        for d in (1, 2, 3):
            K = sub_k0_random(seed * 10 + d, d)
            out = find_certificate_d_le_3(K)
            assert out.found, "missing certificate for seed=%d d=%d" % (seed, d)
            assert verify_combination(K, out.combination).ok


def test_certificate_transport_invariance():
    rng = random.Random(5)
    cases = [
        (rotation_pencil(), True),
        (v0_subspace(2, 4, 4), True),
        (quaternion_pencil(), True),
        (k0_pencil(), False),
        (sub_k0_random(3, 3), True),
    ]
    for K, expect in cases:
        for _ in range(20):
            ops = random_pencil_ops(K.m, K.n, rng.randint(1, 6), rng)
            K2 = apply_ops(K, ops)
            out = find_certificate_d_le_3(K2)
            assert out.found == expect
            if out.found:
                assert verify_combination(K2, out.combination).ok


# ---------------------------------------------------------------------------
# verification
# ---------------------------------------------------------------------------

def test_zero_combination_rejected():
    K = rotation_pencil()
    with pytest.raises(ValueError):
        MinorCombination([0], QuadraticForm(RationalMatrix.zeros(2, 2)))


def test_indefinite_combination_witnesses():
    K = kr_family(0)
    pairs = enumerate_minors(3, 3, 2)
    beta = [Fraction(0)] * len(pairs)
    beta[pairs.index(((0, 1), (0, 1)))] = Fraction(1)  # gamma^2 - alpha^2 on the pencil
    comb = MinorCombination(beta, combination_form(K, beta))
    rep = verify_combination(K, comb)
    assert rep.verdict == "indefinite"
    form = combination_form(K, beta)
    assert form(rep.neg_witness) < 0
    assert form(rep.pos_witness) > 0


def test_verify_on_restricted_cone():
    K = v0_subspace(2, 4, 4)
    out = find_certificate_d_le_3(K)
    rep = verify_combination(K, out.combination, cone_basis=[(Fraction(1), Fraction(0))])
    assert rep.verdict in ("psd-nontrivial", "trivial")


# ---------------------------------------------------------------------------
# descending chain
# ---------------------------------------------------------------------------

def test_chain_diag_pencil_terminal():
    K = v0_subspace(2, 4, 4)
    cert = reduce_chain(K)
    assert isinstance(cert, TrivialityCertificate)
    assert cert.terminal
    assert 1 <= len(cert.chain) <= K.d
    dims = [len(c) for c in cert.cones]
    assert dims[0] == K.d
    assert all(dims[i] > dims[i + 1] for i in range(len(dims) - 1))


def test_chain_rotation_terminal():
    cert = reduce_chain(rotation_pencil())
    assert cert.terminal and len(cert.chain) == 1


def test_chain_quaternion_terminal():
    cert = reduce_chain(quaternion_pencil())
    assert cert.terminal and len(cert.chain) <= 3


def test_chain_k0_obstruction():
    res = reduce_chain(kr_family(0))
    assert isinstance(res, Obstruction)
    assert len(res.cone) == 4  # stuck on the whole space


def test_chain_rank_one_obstruction():
    res = reduce_chain(k0_pencil())
    assert isinstance(res, Obstruction)
    assert res.rank_one_witness is not None
    assert k0_pencil().evaluate(res.rank_one_witness).rank() == 1


def test_chain_fuzz_terminal_and_bounded():
    for seed in range(12):
        for d in (2, 3):
            K = sub_k0_random(seed * 7 + d, d)
            cert = reduce_chain(K)
            assert isinstance(cert, TrivialityCertificate) and cert.terminal
            assert len(cert.chain) <= d


def test_chain_json_roundtrip():
    K = v0_subspace(2, 4, 4)
    cert = reduce_chain(K)
    obj = cert.to_json(K)
    chain, terminal = TrivialityCertificate.chain_from_json(obj)
    assert terminal == cert.terminal
    assert len(chain) == len(cert.chain)
    K2 = Subspace.from_json(obj["subspace"])
    assert K2 == K


# ---------------------------------------------------------------------------
# Grassmannian genericity
# ---------------------------------------------------------------------------

def test_grassmann_v0_chart():
    chart, A = v0_chart(2, 4, 4)
    rep = grassmann_genericity(2, 4, 4, chart, A)
    assert rep.exact_span_dim == 3  # k(k+1)/2
    assert rep.span_dim == 3
    assert abs(rep.lambda_value) > 1e-12
    assert rep.beta is not None and rep.min_eigenvalue > 0


def test_grassmann_degenerate_dyad_chart():
    # W0 spanned by two matrices sharing one row: the pencil stays rank <= 1
    p = 16
    e11 = [Fraction(0)] * p
    e11[0] = Fraction(1)
    e12 = [Fraction(0)] * p
    e12[1] = Fraction(1)
    used = {0, 1}
    W1 = []
    for t in range(p):
        if t not in used:
            v = [Fraction(0)] * p
            v[t] = Fraction(1)
            W1.append(v)
    A = [[0, 0]] * (p - 2)
    rep = grassmann_genericity(2, 4, 4, ([e11, e12], W1), A)
    assert rep.span_dim < 3
    assert abs(rep.lambda_value) <= 1e-12
    assert rep.exact_span_dim == 0


def test_grassmann_random_scan():
    rng = np.random.default_rng(0)
    hits = 0
    for _ in range(50):
        basis = rng.standard_normal((16, 16))
        while abs(np.linalg.det(basis)) < 1e-6:
            basis = rng.standard_normal((16, 16))
        W0 = [list(v) for v in basis[:2]]
        W1 = [list(v) for v in basis[2:]]
        A = rng.standard_normal((14, 2))
        rep = grassmann_genericity(2, 4, 4, (W0, W1), A)
        if abs(rep.lambda_value) > 1e-12 and rep.beta is not None and rep.min_eigenvalue > 0:
            hits += 1
            # positive combination stays positive on sampled directions
            span = np.array(W0) + A.T @ np.array(W1)
            pairs = enumerate_minors(4, 4, 2)
            for _ in range(10):
                y = rng.standard_normal(2)
                X = (y @ span).reshape(4, 4)
                total = 0.0
                for b, (rows, cols) in zip(rep.beta, pairs):
                    total += b * np.linalg.det(X[np.ix_(rows, cols)])
                assert total > 0
    assert hits == 50


def test_grassmann_rejects_bad_chart():
    chart, A = v0_chart(2, 4, 4)
    with pytest.raises(ValueError):
        grassmann_genericity(2, 4, 4, (chart[0], chart[0]), [[0, 0]] * 2)


def test_solve_beta_consistency():
    K = rotation_pencil()
    polys = minor_polys(K, 2)
    g = polys[0]
    beta = solve_beta_for_poly(K, g)
    assert beta == (Fraction(1),)
