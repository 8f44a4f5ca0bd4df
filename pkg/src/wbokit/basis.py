"""Multivariate monomial bases over joint configurations.

A basis of degree D in n_q variables contains every monomial of total degree
1 through D (no constant term: the identity offset lives in the quaternion
scalar part).  Terms are ordered by total degree, then lexicographically with
q_0 ranked highest, so for two variables and degree two the order is
q0, q1, q0^2, q0*q1, q1^2.  The ordering is a pure function of (n_q, degree),
which is what makes serialized coefficient matrices portable.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import ContractViolationError

__all__ = [
    "MonomialBasis",
    "build_basis",
    "basis_size",
    "eval_basis",
    "basis_jacobian",
    "eval_basis_batch",
    "basis_jacobian_batch",
]

# Cap on n_chunk * n_terms * n_q in the batched evaluators, to bound the
# temporaries when a large sample set meets a large basis.
_CHUNK_BUDGET = 4_000_000


@dataclass(frozen=True, eq=False)
class MonomialBasis:
    n_q: int
    degree: int
    exponents: np.ndarray  # (n_terms, n_q) non-negative integers

    def __post_init__(self):
        exp = np.array(self.exponents, dtype=np.int64)
        if exp.ndim != 2 or exp.shape[1] != self.n_q or np.any(exp < 0):
            raise ContractViolationError("malformed exponent table")
        exp.setflags(write=False)
        object.__setattr__(self, "exponents", exp)

    @property
    def n_terms(self):
        return self.exponents.shape[0]

    def to_descriptor(self):
        """JSON-ready description; ordering is implied by (n_q, degree)."""
        return {"n_q": self.n_q, "degree": self.degree, "term_order": "graded-lex"}

    @classmethod
    def from_descriptor(cls, descriptor):
        order = descriptor.get("term_order", "graded-lex")
        if order != "graded-lex":
            raise ContractViolationError(f"unknown term order {order!r}")
        return build_basis(int(descriptor["n_q"]), int(descriptor["degree"]))


def basis_size(n_q, degree):
    """Number of terms: sum over d of C(n_q + d - 1, d)."""
    return sum(math.comb(n_q + d - 1, d) for d in range(1, degree + 1))


def build_basis(n_q, degree):
    if n_q < 1 or degree < 1:
        raise ContractViolationError("need n_q >= 1 and degree >= 1")
    rows = []
    for d in range(1, degree + 1):
        for combo in itertools.combinations_with_replacement(range(n_q), d):
            e = np.zeros(n_q, dtype=np.int64)
            for idx in combo:
                e[idx] += 1
            rows.append(e)
    return MonomialBasis(n_q, degree, np.array(rows, dtype=np.int64))


def _check_q(basis, qs):
    arr = np.asarray(qs, dtype=float)
    if arr.ndim == 1:
        arr = arr[None, :]
        single = True
    else:
        single = False
    if arr.ndim != 2 or arr.shape[1] != basis.n_q:
        raise ContractViolationError(
            f"expected configurations of length {basis.n_q}, got shape {np.shape(qs)}"
        )
    return arr, single


def _chunks(n, basis):
    step = max(1, _CHUNK_BUDGET // max(1, basis.n_terms * basis.n_q))
    for start in range(0, n, step):
        yield start, min(n, start + step)


def eval_basis_batch(basis, qs):
    """Evaluate all terms at each row of qs; returns (N, n_terms)."""
    arr, _ = _check_q(basis, qs)
    exp = basis.exponents
    out = np.empty((arr.shape[0], basis.n_terms))
    for lo, hi in _chunks(arr.shape[0], basis):
        powers = arr[lo:hi, None, :] ** exp[None, :, :]
        out[lo:hi] = powers.prod(axis=2)
    return out


def basis_jacobian_batch(basis, qs):
    """d(term_k)/d(q_j) at each row of qs; returns (N, n_terms, n_q).

    Built from prefix/suffix products of the per-variable powers so that
    zero-valued variables never require a division.
    """
    arr, _ = _check_q(basis, qs)
    exp = basis.exponents
    out = np.empty((arr.shape[0], basis.n_terms, basis.n_q))
    for lo, hi in _chunks(arr.shape[0], basis):
        block = arr[lo:hi]
        powers = block[:, None, :] ** exp[None, :, :]
        down_one = block[:, None, :] ** np.maximum(exp - 1, 0)[None, :, :]
        cp = np.cumprod(powers, axis=2)
        prefix = np.ones_like(powers)
        prefix[:, :, 1:] = cp[:, :, :-1]
        rcp = np.cumprod(powers[:, :, ::-1], axis=2)[:, :, ::-1]
        suffix = np.ones_like(powers)
        suffix[:, :, :-1] = rcp[:, :, 1:]
        out[lo:hi] = exp[None, :, :] * prefix * suffix * down_one
    return out


def eval_basis(basis, q):
    arr, _ = _check_q(basis, q)
    return eval_basis_batch(basis, arr)[0]


def basis_jacobian(basis, q):
    arr, _ = _check_q(basis, q)
    return basis_jacobian_batch(basis, arr)[0]
