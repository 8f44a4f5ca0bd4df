"""Monomial basis: counting, ordering, evaluation, analytic Jacobian."""

import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from wbokit.basis import (
    MonomialBasis,
    basis_jacobian,
    basis_jacobian_batch,
    basis_size,
    build_basis,
    eval_basis,
    eval_basis_batch,
)
from wbokit.errors import ContractViolationError


def test_count_19_3():
    basis = build_basis(19, 3)
    assert basis.n_terms == 1539
    assert basis_size(19, 3) == 1539
    # degree strata: 19 linear, 190 quadratic, 1330 cubic
    degrees = basis.exponents.sum(axis=1)
    assert [int(np.sum(degrees == d)) for d in (1, 2, 3)] == [19, 190, 1330]


def test_count_12_3():
    assert basis_size(12, 3) == 454


def test_univariate_terms():
    basis = build_basis(1, 3)
    np.testing.assert_array_equal(basis.exponents, [[1], [2], [3]])


def test_two_var_degree_two_order():
    # graded lexicographic: degree strata ascending, lexicographic inside
    basis = build_basis(2, 2)
    np.testing.assert_array_equal(
        basis.exponents, [[1, 0], [0, 1], [2, 0], [1, 1], [0, 2]]
    )


@given(st.integers(1, 25), st.integers(1, 4))
def test_count_identity(n_q, degree):
    # total through degree D is C(n_q + D, D) - 1 (all monomials minus the
    # constant), which must match the per-degree sum
    expected = math.comb(n_q + degree, degree) - 1
    assert basis_size(n_q, degree) == expected
    assert build_basis(n_q, degree).n_terms == expected


def test_bad_dimensions_rejected():
    with pytest.raises(ContractViolationError):
        build_basis(0, 3)
    with pytest.raises(ContractViolationError):
        build_basis(3, 0)


class TestEval:
    def test_zero_configuration(self):
        basis = build_basis(4, 3)
        np.testing.assert_array_equal(eval_basis(basis, np.zeros(4)), 0.0)

    def test_powers_of_two(self):
        basis = build_basis(1, 3)
        np.testing.assert_allclose(eval_basis(basis, [2.0]), [2.0, 4.0, 8.0])

    def test_log_domain_recomputation(self):
        """Each term is the product of component powers; recompute via logs."""
        rng = np.random.default_rng(5)
        basis = build_basis(3, 3)
        for _ in range(10):
            q = rng.uniform(0.1, 2.0, 3)  # positive, so logs are defined
            expected = np.exp(basis.exponents @ np.log(q))
            np.testing.assert_allclose(
                eval_basis(basis, q), expected, rtol=1e-12
            )

    def test_batch_matches_single(self):
        rng = np.random.default_rng(6)
        basis = build_basis(5, 2)
        qs = rng.uniform(-1, 1, (7, 5))
        batch = eval_basis_batch(basis, qs)
        for i, q in enumerate(qs):
            np.testing.assert_array_equal(batch[i], eval_basis(basis, q))

    def test_dimension_mismatch(self):
        with pytest.raises(ContractViolationError):
            eval_basis(build_basis(3, 2), np.zeros(4))


class TestJacobian:
    def test_at_zero_identity_pattern(self):
        basis = build_basis(4, 3)
        jac = basis_jacobian(basis, np.zeros(4))
        np.testing.assert_array_equal(jac[:4], np.eye(4))
        np.testing.assert_array_equal(jac[4:], 0.0)

    def test_univariate_at_two(self):
        basis = build_basis(1, 3)
        np.testing.assert_allclose(
            basis_jacobian(basis, [2.0]), [[1.0], [4.0], [12.0]]
        )

    def test_finite_difference_oracle(self):
        rng = np.random.default_rng(7)
        basis = build_basis(4, 3)
        for _ in range(10):
            q = rng.uniform(-1.5, 1.5, 4)
            jac = basis_jacobian(basis, q)
            for i in range(4):
                h = 1e-6 * (1.0 + abs(q[i]))
                qp, qm = q.copy(), q.copy()
                qp[i] += h
                qm[i] -= h
                fd = (eval_basis(basis, qp) - eval_basis(basis, qm)) / (2 * h)
                assert np.max(np.abs(jac[:, i] - fd)) < 1e-6

    def test_disjoint_variable_exactly_zero(self):
        # the derivative of a term with exponent 0 in q_i carries no
        # rounding: it is the float 0.0
        basis = build_basis(3, 3)
        rng = np.random.default_rng(8)
        q = rng.uniform(-2, 2, 3)
        jac = basis_jacobian(basis, q)
        for row, exp in zip(jac, basis.exponents):
            for i in range(3):
                if exp[i] == 0:
                    assert row[i] == 0.0

    def test_batch_matches_single(self):
        rng = np.random.default_rng(9)
        basis = build_basis(3, 3)
        qs = rng.uniform(-1, 1, (5, 3))
        batch = basis_jacobian_batch(basis, qs)
        for i, q in enumerate(qs):
            np.testing.assert_array_equal(batch[i], basis_jacobian(basis, q))


class TestDescriptor:
    def test_round_trip_preserves_order(self):
        basis = build_basis(6, 3)
        clone = MonomialBasis.from_descriptor(basis.to_descriptor())
        np.testing.assert_array_equal(clone.exponents, basis.exponents)

    def test_unknown_order_rejected(self):
        with pytest.raises(ContractViolationError):
            MonomialBasis.from_descriptor(
                {"n_q": 2, "degree": 2, "term_order": "lex"}
            )
