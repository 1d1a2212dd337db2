"""Exact linear algebra over GF(q) on integer-encoded numpy arrays.

Index sets are 0-based sorted tuples.  The rank-formula and projection
families take a pair ``(I, J)`` of row and column index sets of equal size.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .errors import ShapeMismatch
from .field import FieldSpec


def as_matrix(A) -> np.ndarray:
    A = np.asarray(A, dtype=np.int64)
    if A.ndim != 2:
        raise ShapeMismatch(f"expected a 2-d array, got shape {A.shape}")
    return A


def identity(n: int) -> np.ndarray:
    return np.eye(n, dtype=np.int64)


def rref(F: FieldSpec, A) -> tuple[np.ndarray, list[int]]:
    """Reduced row echelon form and pivot columns."""
    R = as_matrix(A).copy()
    rows, cols = R.shape
    pivots: list[int] = []
    r = 0
    for c in range(cols):
        if r == rows:
            break
        nz = np.nonzero(R[r:, c])[0]
        if len(nz) == 0:
            continue
        i = r + int(nz[0])
        if i != r:
            R[[r, i]] = R[[i, r]]
        R[r] = F.mul(R[r], F.inv(R[r, c]))
        f = R[:, c].copy()
        f[r] = 0
        if f.any():
            R = F.sub(R, F.mul(f[:, None], R[r][None, :]))
        pivots.append(c)
        r += 1
    return R, pivots


def rank(F: FieldSpec, A) -> int:
    A = as_matrix(A)
    if A.size == 0:
        return 0
    return len(rref(F, A)[1])


def kernel_basis(F: FieldSpec, A) -> np.ndarray:
    """Rows form a basis of {v : A v = 0}; shape (n - rank, n)."""
    A = as_matrix(A)
    n = A.shape[1]
    R, piv = rref(F, A)
    free = [c for c in range(n) if c not in piv]
    basis = np.zeros((len(free), n), dtype=np.int64)
    for k, fc in enumerate(free):
        basis[k, fc] = 1
        for r, pc in enumerate(piv):
            basis[k, pc] = F.neg(R[r, fc])
    return basis


def image_basis(F: FieldSpec, A) -> np.ndarray:
    """Rows form a basis of the column space of A (pivot columns of A)."""
    A = as_matrix(A)
    _, piv = rref(F, A)
    return A[:, piv].T.copy()


def det(F: FieldSpec, A) -> int:
    A = as_matrix(A)
    n, m = A.shape
    if n != m:
        raise ShapeMismatch("determinant of a non-square matrix")
    if n == 0:
        return 1
    R = A.copy()
    d = 1
    for c in range(n):
        nz = np.nonzero(R[c:, c])[0]
        if len(nz) == 0:
            return 0
        i = c + int(nz[0])
        if i != c:
            R[[c, i]] = R[[i, c]]
            d = int(F.neg(d))
        piv = R[c, c]
        d = int(F.mul(d, piv))
        below = R[c + 1 :, c]
        if below.any():
            f = F.mul(below, F.inv(piv))
            R[c + 1 :] = F.sub(R[c + 1 :], F.mul(f[:, None], R[c][None, :]))
    return d


def inverse(F: FieldSpec, A) -> np.ndarray | None:
    A = as_matrix(A)
    n = A.shape[0]
    if A.shape[1] != n:
        raise ShapeMismatch("inverse of a non-square matrix")
    R, piv = rref(F, np.hstack([A, identity(n)]))
    if piv[:n] != list(range(n)):
        return None
    return R[:, n:].copy()


def solve(F: FieldSpec, A, b) -> np.ndarray | None:
    """Some x with A x = b (free variables set to zero), or None."""
    A = as_matrix(A)
    b = np.asarray(b, dtype=np.int64)
    if b.shape != (A.shape[0],):
        raise ShapeMismatch("right-hand side has the wrong length")
    n = A.shape[1]
    R, piv = rref(F, np.hstack([A, b[:, None]]))
    if n in piv:
        return None
    x = np.zeros(n, dtype=np.int64)
    for r, pc in enumerate(piv):
        x[pc] = R[r, n]
    return x


def adjugate(F: FieldSpec, A) -> np.ndarray:
    """Transpose of the cofactor matrix; adj of a 1x1 matrix is [1]."""
    A = as_matrix(A)
    n = A.shape[0]
    if A.shape[1] != n:
        raise ShapeMismatch("adjugate of a non-square matrix")
    if n == 0:
        return np.zeros((0, 0), dtype=np.int64)
    if n == 1:
        return np.ones((1, 1), dtype=np.int64)
    if n > 6:
        dA = det(F, A)
        if dA:
            return F.mul(inverse(F, A), dA)
    adj = np.zeros((n, n), dtype=np.int64)
    idx = list(range(n))
    for i in range(n):
        for j in range(n):
            minor = A[np.ix_([k for k in idx if k != i], [k for k in idx if k != j])]
            c = det(F, minor)
            adj[j, i] = F.neg(c) if (i + j) % 2 else c
    return adj


def submatrix(A, I, J) -> np.ndarray:
    return as_matrix(A)[np.ix_(list(I), list(J))]


def _check_pair(A: np.ndarray, I, J) -> tuple[tuple[int, ...], tuple[int, ...]]:
    I, J = tuple(I), tuple(J)
    if len(I) != len(J):
        raise ShapeMismatch("index sets must have equal size")
    for S, bound in ((I, A.shape[0]), (J, A.shape[1])):
        if list(S) != sorted(set(S)) or any(not 0 <= s < bound for s in S):
            raise ShapeMismatch(f"index set {S} is not strictly increasing within bounds")
    return I, J


@dataclass(frozen=True)
class AdjugateReport:
    rank: int
    r: int
    weak_applies: bool  # rank A <= r
    weak_holds: bool
    strong_applies: bool  # rank A < r
    strong_holds: bool

    @property
    def ok(self) -> bool:
        return (not self.weak_applies or self.weak_holds) and (
            not self.strong_applies or self.strong_holds
        )


def check_adjugate_identities(F: FieldSpec, A, I, J) -> AdjugateReport:
    """Check A[:,J] adj(A[I,J]) A[I,:] = det(A[I,J]) A and adj(A[I,J]) A[I,:] = 0."""
    A = as_matrix(A)
    I, J = _check_pair(A, I, J)
    r = len(I)
    rk = rank(F, A)
    adj = adjugate(F, submatrix(A, I, J))
    g = det(F, submatrix(A, I, J))
    right = F.matmul(adj, A[list(I), :])
    lhs = F.matmul(A[:, list(J)], right)
    weak = bool(np.array_equal(lhs, F.mul(A, g)))
    strong = not right.any()
    return AdjugateReport(rk, r, rk <= r, weak, rk < r, strong)


def rank_formula_terms(F: FieldSpec, A, I, J) -> tuple[list[np.ndarray], int]:
    """The r outer products column_i(A[:,J]) x row_i(adj(A[I,J]) A[I,:]) and det(A[I,J])."""
    A = as_matrix(A)
    I, J = _check_pair(A, I, J)
    right = F.matmul(adjugate(F, submatrix(A, I, J)), A[list(I), :])
    left = A[:, list(J)]
    terms = [F.mul(left[:, i][:, None], right[i][None, :]) for i in range(len(I))]
    return terms, det(F, submatrix(A, I, J))


def projection_PQ(F: FieldSpec, A, I, J) -> tuple[np.ndarray, np.ndarray, int]:
    """Kernel projection P = g Id - Q where Q places adj(A[I,J]) A[I,:] into rows J."""
    A = as_matrix(A)
    I, J = _check_pair(A, I, J)
    n = A.shape[1]
    g = det(F, submatrix(A, I, J))
    Q = np.zeros((n, n), dtype=np.int64)
    if I:
        Q[list(J), :] = F.matmul(adjugate(F, submatrix(A, I, J)), A[list(I), :])
    P = F.sub(F.mul(identity(n), g), Q)
    return P, Q, g


def find_full_minor(F: FieldSpec, A, r: int) -> tuple[tuple[int, ...], tuple[int, ...]] | None:
    """First (I, J) in lexicographic order with det(A[I,J]) != 0, or None."""
    A = as_matrix(A)
    rows, cols = A.shape
    if r > min(rows, cols):
        return None
    if r == 0:
        return (), ()
    if rank(F, A) < r:
        return None
    for I in itertools.combinations(range(rows), r):
        sub = A[list(I), :]
        if rank(F, sub) < r:
            continue
        for J in itertools.combinations(range(cols), r):
            if det(F, sub[:, list(J)]):
                return I, J
    return None


def batch_rank(F: FieldSpec, mats) -> np.ndarray:
    """Ranks of a stack of matrices with shape (..., rows, cols)."""
    mats = np.asarray(mats, dtype=np.int64)
    lead = mats.shape[:-2]
    rows, cols = mats.shape[-2:]
    A = mats.reshape((-1, rows, cols)).copy()
    B = A.shape[0]
    r = np.zeros(B, dtype=np.int64)
    ridx = np.arange(rows)
    for c in range(cols):
        elig = (A[:, :, c] != 0) & (ridx[None, :] >= r[:, None])
        has = np.nonzero(elig.any(axis=1))[0]
        if len(has) == 0:
            continue
        piv = np.argmax(elig[has], axis=1)
        rb = r[has]
        top = A[has, rb].copy()
        A[has, rb] = A[has, piv]
        A[has, piv] = top
        prow = A[has, rb]
        prow = F.mul(prow, F.inv(prow[:, c])[:, None])
        fac = A[has, :, c]
        fac = np.where(ridx[None, :] > rb[:, None], fac, 0)
        A[has] = F.sub(A[has], F.mul(fac[:, :, None], prow[:, None, :]))
        A[has, rb] = prow
        r[has] += 1
    return r.reshape(lead)


def same_span(F: FieldSpec, U, W) -> bool:
    """Whether the row spaces of U and W coincide."""
    U = np.asarray(U, dtype=np.int64)
    W = np.asarray(W, dtype=np.int64)
    ru, rw = rank(F, U), rank(F, W)
    return ru == rw and rank(F, np.vstack([U, W])) == ru


def random_matrix_of_rank(F: FieldSpec, rows: int, cols: int, s: int, rng) -> np.ndarray:
    """Product of random rows x s and s x cols factors (rank at most s)."""
    if s == 0:
        return np.zeros((rows, cols), dtype=np.int64)
    L = rng.integers(0, F.q, size=(rows, s))
    R = rng.integers(0, F.q, size=(s, cols))
    return F.matmul(L, R)


def span_elements(F: FieldSpec, basis) -> np.ndarray:
    """All q^k vectors in the span of the rows of ``basis``, in canonical coefficient order."""
    basis = np.asarray(basis, dtype=np.int64)
    k = basis.shape[0]
    n = basis.shape[1] if basis.ndim == 2 else 0
    coeffs = all_vectors(F.q, k)
    if k == 0:
        return np.zeros((1, n), dtype=np.int64)
    return F.matmul(coeffs, basis)


def all_vectors(q: int, n: int) -> np.ndarray:
    """Every vector of F^n in canonical (lexicographic) order, shape (q^n, n)."""
    if n == 0:
        return np.zeros((1, 0), dtype=np.int64)
    grid = np.indices((q,) * n).reshape(n, -1).T
    return grid.astype(np.int64)


def projective_reps(F: FieldSpec, basis) -> np.ndarray:
    """One nonzero vector per line of span(basis): coefficient vectors with leading 1."""
    basis = np.asarray(basis, dtype=np.int64)
    k = basis.shape[0]
    if k == 0:
        return np.zeros((0, basis.shape[1] if basis.ndim == 2 else 0), dtype=np.int64)
    blocks = []
    for lead in range(k):
        tail = all_vectors(F.q, k - lead - 1)
        c = np.zeros((tail.shape[0], k), dtype=np.int64)
        c[:, lead] = 1
        c[:, lead + 1 :] = tail
        blocks.append(c)
    return F.matmul(np.vstack(blocks), basis)
