"""Exact operator algebra on symmetric powers of a four-dimensional space.

The basic objects are second-order differential operators in four variables
x_1..x_4 that preserve polynomial degree.  Fifteen such operators, one for
each unordered pair drawn from six labels, are built as signed squares of
first-order operators; their pure second-order ("degree two") parts act on
the space of degree-k monomials and are represented as exact integer
matrices there.

All arithmetic in this module is exact (Python ints); matrices are numpy
arrays with dtype=object so that identities can be checked without floats.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from math import comb

import numpy as np

NUM_VARS = 4
PAIRS = [(i, j) for i in range(1, 7) for j in range(i + 1, 7)]

# Generators of the fifteen operators: overall sign and the four signed
# elementary terms c * x_a d_b of the first-order operator that gets squared.
# Term format: (c, a, b) with 1-based variable indices.
OMEGA_TABLE = {
    (1, 2): (-1, [(+1, 1, 1), (+1, 2, 2), (-1, 3, 3), (-1, 4, 4)]),
    (1, 3): (-1, [(+1, 1, 4), (-1, 2, 3), (-1, 3, 2), (+1, 4, 1)]),
    (1, 4): (+1, [(+1, 1, 4), (+1, 2, 3), (-1, 3, 2), (-1, 4, 1)]),
    (1, 5): (+1, [(+1, 1, 3), (-1, 2, 4), (-1, 3, 1), (+1, 4, 2)]),
    (1, 6): (-1, [(+1, 1, 3), (+1, 2, 4), (+1, 3, 1), (+1, 4, 2)]),
    (2, 3): (+1, [(+1, 1, 4), (-1, 2, 3), (+1, 3, 2), (-1, 4, 1)]),
    (2, 4): (-1, [(+1, 1, 4), (+1, 2, 3), (+1, 3, 2), (+1, 4, 1)]),
    (2, 5): (-1, [(+1, 1, 3), (-1, 2, 4), (+1, 3, 1), (-1, 4, 2)]),
    (2, 6): (+1, [(+1, 1, 3), (+1, 2, 4), (-1, 3, 1), (-1, 4, 2)]),
    (3, 4): (-1, [(+1, 1, 1), (-1, 2, 2), (+1, 3, 3), (-1, 4, 4)]),
    (3, 5): (-1, [(+1, 1, 2), (+1, 2, 1), (+1, 3, 4), (+1, 4, 3)]),
    (3, 6): (+1, [(+1, 1, 2), (-1, 2, 1), (-1, 3, 4), (+1, 4, 3)]),
    (4, 5): (+1, [(+1, 1, 2), (-1, 2, 1), (+1, 3, 4), (-1, 4, 3)]),
    (4, 6): (-1, [(+1, 1, 2), (+1, 2, 1), (-1, 3, 4), (-1, 4, 3)]),
    (5, 6): (-1, [(+1, 1, 1), (-1, 2, 2), (-1, 3, 3), (+1, 4, 4)]),
}


class InvalidLevelError(ValueError):
    """Raised when a level k < 1 is requested."""


class InvalidIndexError(ValueError):
    """Raised for variable or pair indices outside their admissible range."""


def basis(k):
    """Ordered monomial basis of the degree-k polynomials in four variables.

    Monomials are exponent 4-tuples (a, b, c, d) with a+b+c+d = k, listed in
    descending lexicographic order, so x1^k comes first and x4^k last.
    Length is C(k+3, 3).
    """
    if not isinstance(k, (int, np.integer)) or k < 1:
        raise InvalidLevelError(f"level must be a positive integer, got {k!r}")
    out = []
    for a in range(k, -1, -1):
        for b in range(k - a, -1, -1):
            for c in range(k - a - b, -1, -1):
                out.append((a, b, c, k - a - b - c))
    assert len(out) == comb(k + 3, 3)
    return out


def basis_index(k):
    """Dict mapping exponent tuple -> position in basis(k)."""
    return {m: i for i, m in enumerate(basis(k))}


def dim(k):
    return comb(k + 3, 3)


@dataclass(frozen=True)
class FirstOrderOp:
    """Sum of elementary terms c * x_i d_j with integer coefficients."""

    terms: tuple  # tuple of (coeff, i, j), canonical: sorted by (i, j), merged

    @staticmethod
    def from_terms(terms):
        acc = {}
        for c, i, j in terms:
            if not (1 <= i <= NUM_VARS and 1 <= j <= NUM_VARS):
                raise InvalidIndexError(f"variable index out of range in ({c},{i},{j})")
            acc[(i, j)] = acc.get((i, j), 0) + c
        cleaned = tuple(
            (c, i, j) for (i, j), c in sorted(acc.items()) if c != 0
        )
        return FirstOrderOp(cleaned)

    def apply_monomial(self, expo):
        """Image of the monomial with exponents `expo` as {expo: coeff}."""
        out = {}
        for c, i, j in self.terms:
            e = expo[j - 1]
            if e == 0:
                continue
            target = list(expo)
            target[j - 1] -= 1
            target[i - 1] += 1
            target = tuple(target)
            out[target] = out.get(target, 0) + c * e
        return out


@dataclass(frozen=True)
class SecondOrderOp:
    """Degree-preserving operator  sum c * x_i x_k d_j d_l  +  sum c * x_i d_j.

    The quadratic keys are ((i, k), (j, l)) with each pair sorted, since the
    x's commute among themselves and so do the d's.
    """

    quad: tuple  # tuple of (((i,k),(j,l)), coeff)
    lin: tuple   # tuple of ((i,j), coeff)

    @staticmethod
    def from_dicts(quad, lin):
        q = tuple(sorted((key, c) for key, c in quad.items() if c != 0))
        l = tuple(sorted((key, c) for key, c in lin.items() if c != 0))
        return SecondOrderOp(q, l)

    def __add__(self, other):
        quad = dict(self.quad)
        for key, c in other.quad:
            quad[key] = quad.get(key, 0) + c
        lin = dict(self.lin)
        for key, c in other.lin:
            lin[key] = lin.get(key, 0) + c
        return SecondOrderOp.from_dicts(quad, lin)

    def scale(self, s):
        return SecondOrderOp(
            tuple((key, s * c) for key, c in self.quad),
            tuple((key, s * c) for key, c in self.lin),
        )

    def is_zero(self):
        return not self.quad and not self.lin

    def apply_monomial(self, expo):
        """Image of a monomial as {exponent tuple: integer coeff}."""
        out = {}
        for ((i, kk), (j, l)), c in self.quad:
            # d_j d_l followed by multiplication with x_i x_k
            coeff = expo[l - 1] * (expo[j - 1] - (1 if j == l else 0))
            if coeff == 0:
                continue
            target = list(expo)
            target[l - 1] -= 1
            target[j - 1] -= 1
            target[i - 1] += 1
            target[kk - 1] += 1
            out_key = tuple(target)
            out[out_key] = out.get(out_key, 0) + c * coeff
        for (i, j), c in self.lin:
            e = expo[j - 1]
            if e == 0:
                continue
            target = list(expo)
            target[j - 1] -= 1
            target[i - 1] += 1
            out_key = tuple(target)
            out[out_key] = out.get(out_key, 0) + c * e
        return {key: c for key, c in out.items() if c != 0}


def compose(left, right):
    """Composition (x_i d_j) o (x_k d_l) = x_i x_k d_j d_l + [j=k] x_i d_l."""
    i, j = left
    kk, l = right
    for idx in (i, j, kk, l):
        if not 1 <= idx <= NUM_VARS:
            raise InvalidIndexError(f"elementary index {idx} outside 1..{NUM_VARS}")
    quad = {(tuple(sorted((i, kk))), tuple(sorted((j, l)))): 1}
    lin = {(i, l): 1} if j == kk else {}
    return SecondOrderOp.from_dicts(quad, lin)


def square_first_order(op, sign):
    """sign * (op o op) expanded exactly through the composition law."""
    acc = SecondOrderOp((), ())
    for cm, am, bm in op.terms:
        for cn, an, bn in op.terms:
            acc = acc + compose((am, bm), (an, bn)).scale(cm * cn)
    return acc.scale(sign)


def omega(i, j):
    """The tabulated operator for the pair (i, j), 1 <= i < j <= 6."""
    if not (1 <= i < j <= 6):
        raise InvalidIndexError(f"pair ({i},{j}) must satisfy 1 <= i < j <= 6")
    sign, terms = OMEGA_TABLE[(i, j)]
    return square_first_order(FirstOrderOp.from_terms(terms), sign)


def degree_two_part(op):
    """Drop the first-order terms, keeping the pure x x d d part."""
    return SecondOrderOp(op.quad, ())


def omega_hat(i, j):
    """Degree-two part of omega(i, j)."""
    return degree_two_part(omega(i, j))


def matrix_of(op, k):
    """Exact integer matrix of a degree-preserving operator on basis(k).

    Column m holds the image of the m-th basis monomial.
    """
    bas = basis(k)
    index = {m: r for r, m in enumerate(bas)}
    n = len(bas)
    mat = np.zeros((n, n), dtype=object)
    for col, mono in enumerate(bas):
        for target, c in op.apply_monomial(mono).items():
            row = index.get(target)
            if row is None:
                raise ValueError("operator is not degree-preserving")
            mat[row, col] += c
    return mat


def omega_hat_matrix(k, i, j):
    """Integer matrix of the degree-two part of omega(i, j) at level k."""
    return matrix_of(omega_hat(i, j), k)


def all_omega_hat_matrices(k):
    """Dict (i, j) -> integer matrix for all fifteen pairs."""
    return {pair: omega_hat_matrix(k, *pair) for pair in PAIRS}


def identity_matrix(k):
    return np.array(
        [[1 if r == c else 0 for c in range(dim(k))] for r in range(dim(k))],
        dtype=object,
    )


def is_scalar_matrix(mat):
    """Return (True, scalar) if mat is an exact scalar multiple of Id."""
    n = mat.shape[0]
    s = mat[0, 0]
    for r in range(n):
        for c in range(n):
            if mat[r, c] != (s if r == c else 0):
                return False, None
    return True, s


def commutator(a, b):
    return a @ b - b @ a


def braid_relation_defects(k, mats=None):
    """Exact commutators of the infinitesimal braid relations at level k.

    Returns a list of (description, ok) pairs; every `ok` should be True.
    Pairs with disjoint labels commute, and each operator commutes with the
    sum over any triangle of labels containing it.
    """
    if mats is None:
        mats = all_omega_hat_matrices(k)

    def get(a, b):
        return mats[(a, b) if a < b else (b, a)]

    zero = np.zeros((dim(k), dim(k)), dtype=object)
    results = []
    for s, t, u, v in itertools.permutations(range(1, 7), 4):
        if s < t and u < v and (s, t) < (u, v) and len({s, t, u, v}) == 4:
            ok = not np.any(commutator(get(s, t), get(u, v)) != zero)
            results.append((f"[O^{s},{t}, O^{u},{v}]", ok))
    for s, t, u in itertools.combinations(range(1, 7), 3):
        for a, b, c in ((s, u, t), (t, s, u), (u, s, t)):
            lhs = commutator(get(a, b), get(b, c) + get(a, c))
            ok = not np.any(lhs != zero)
            results.append((f"[O^{a},{b}, O^{b},{c}+O^{a},{c}]", ok))
    return results


def ward_scalars(k, mats=None):
    """Measured Ward scalars at level k.

    Returns (total_scalar, fixed_scalars) where `total_scalar` is the exact
    integer s with  sum over all pairs = s * Id, and `fixed_scalars[j]` is
    the scalar of  sum over i != j  for each fixed label j in 1..6.  Raises
    if any of these sums fails to be scalar.
    """
    if mats is None:
        mats = all_omega_hat_matrices(k)
    total = sum(mats[p] for p in PAIRS)
    ok, s_total = is_scalar_matrix(total)
    if not ok:
        raise AssertionError(f"sum over all pairs is not scalar at k={k}")
    fixed = {}
    for j in range(1, 7):
        part = sum(
            mats[(min(i, j), max(i, j))] for i in range(1, 7) if i != j
        )
        ok, s = is_scalar_matrix(part)
        if not ok:
            raise AssertionError(f"fixed-{j} sum is not scalar at k={k}")
        fixed[j] = s
    return s_total, fixed


def first_order_matrix(op, k):
    """Exact integer matrix of a FirstOrderOp acting on basis(k)."""
    bas = basis(k)
    index = {m: r for r, m in enumerate(bas)}
    n = len(bas)
    mat = np.zeros((n, n), dtype=object)
    for col, mono in enumerate(bas):
        for target, c in op.apply_monomial(mono).items():
            mat[index[target], col] += c
    return mat


def matrix_to_json(mat, level):
    """JSON-ready dict for an exact or complex matrix on basis(level)."""
    n = mat.shape[0]
    exact = mat.dtype == object
    if exact:
        entries = [int(mat[r, c]) for r in range(n) for c in range(n)]
    else:
        entries = [
            [float(np.real(mat[r, c])), float(np.imag(mat[r, c]))]
            for r in range(n)
            for c in range(n)
        ]
    return {"level": int(level), "dim": int(n), "exact": exact, "entries": entries}


def matrix_from_json(payload):
    n = payload["dim"]
    entries = payload["entries"]
    if payload["exact"]:
        mat = np.array(entries, dtype=object).reshape(n, n)
    else:
        mat = np.array(
            [complex(re, im) for re, im in entries], dtype=complex
        ).reshape(n, n)
    return mat
