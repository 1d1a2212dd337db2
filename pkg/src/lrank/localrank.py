"""Local rank, its algebraic counterpart, stability and stable-point search.

Rank vectors are tuples (r_1, ..., r_d) compared colexicographically, so the
last coordinate dominates.  Points are arrays of shape (d, n).
"""

from __future__ import annotations

import enum
import heapq
import math
from itertools import product

import numpy as np

from . import caps
from .errors import LengthMismatch
from .field import FieldSpec, embedding_table, extension_for
from .matrix import all_vectors, batch_rank, kernel_basis, projective_reps, rank
from .tensor import Tensor, all_points, as_point, embed_tensor, matrix_slice, slice_last


class Ordering(enum.IntEnum):
    LT = -1
    EQ = 0
    GT = 1


def colex_cmp(r, s) -> Ordering:
    r, s = tuple(r), tuple(s)
    if len(r) != len(s):
        raise LengthMismatch(f"cannot compare rank vectors of lengths {len(r)} and {len(s)}")
    for a, b in zip(reversed(r), reversed(s)):
        if a != b:
            return Ordering.LT if a < b else Ordering.GT
    return Ordering.EQ


def colex_key(r, base: int) -> int:
    """Integer whose natural order is the colex order, valid for entries < base."""
    return sum(int(v) * base**i for i, v in enumerate(r))


def colex_max(vectors):
    best = None
    for v in vectors:
        if best is None or colex_cmp(v, best) == Ordering.GT:
            best = v
    return best


def norm(r) -> int:
    d = len(r)
    return sum(2 ** (d - 1 - i) * int(v) for i, v in enumerate(r))


def log_factor(spec: FieldSpec, x: float) -> float:
    if x < 0:
        raise ValueError("log_factor needs x >= 0")
    return math.log(x + 1) / math.log(spec.q) + 1


# --- local rank via the recursion over the last slice's kernel ---


def _slice_batch(T: Tensor, X: np.ndarray) -> np.ndarray:
    """Coefficients of T[x] for each row x of X; shape (B,) + (n,)*d."""
    F = T.field
    C = np.moveaxis(T.coeffs, T.d - 1, 0)
    if F.m == 1:
        return np.tensordot(X, C, axes=(1, 0)) % F.p
    Xb = X.reshape(X.shape + (1,) * (C.ndim - 1))
    return F.sum(F.mul(Xb[:, :, ...], C[None]), axis=1)


def local_rank(T: Tensor, p) -> tuple[int, ...]:
    """LR_p(T) through the kernel recursion, scanning one point per kernel line."""
    p = as_point(T, p)
    return _lr(T, p, {}, [0])


def _lr(T: Tensor, p: np.ndarray, memo: dict, work: list) -> tuple[int, ...]:
    key = (T.d, T.key(), p[: T.d - 1].tobytes())
    if key in memo:
        return memo[key]
    F = T.field
    if T.d == 1:
        out = (rank(F, T.matrix()),)
    else:
        M = matrix_slice(T, p[: T.d], T.d - 1)
        rd = rank(F, M)
        reps = projective_reps(F, kernel_basis(F, M))
        work[0] += len(reps)
        caps.check("kernel", work[0], "local-rank kernel scan")
        if len(reps) == 0:
            best = (0,) * (T.d - 1)
        elif T.d == 2:
            best = (int(batch_rank(F, _slice_batch(T, reps)).max()),)
        else:
            best = colex_max(_lr(slice_last(T, x), p, memo, work) for x in reps)
        out = tuple(best) + (rd,)
    memo[key] = out
    return out


def _bcontract(F: FieldSpec, C: np.ndarray, X: np.ndarray) -> np.ndarray:
    """Contract axis 1 of C (B, n, ...) with X (B, n)."""
    if F.m == 1:
        return np.einsum("bi,bi...->b...", X, C) % F.p
    Xb = X.reshape(X.shape + (1,) * (C.ndim - 2))
    return F.sum(F.mul(Xb, C), axis=1)


def _last_matrices(F: FieldSpec, C: np.ndarray, P: np.ndarray) -> np.ndarray:
    """Matrices T_b[p_b]_d for a batch of coefficient arrays and points; (B, n, n)."""
    d = P.shape[1]
    for k in range(d - 1):
        C = _bcontract(F, C, P[:, k])
    return np.swapaxes(C, 1, 2)


def local_rank_batch(F: FieldSpec, C, P, chunk: int = 1 << 14) -> np.ndarray:
    """LR_{P[b]}(T_b) for a batch: C has shape (B,) + (n,)*(d+1), P has shape (B, d, n).

    Implements the kernel recursion with every x in V scanned and masked by
    membership in the kernel, so it is fully vectorized.
    """
    C = np.asarray(C, dtype=np.int64)
    P = np.asarray(P, dtype=np.int64)
    B = C.shape[0]
    out = np.empty((B, P.shape[1]), dtype=np.int64)
    for s in range(0, B, chunk):
        out[s : s + chunk] = _lr_batch(F, C[s : s + chunk], P[s : s + chunk])
    return out


def _lr_batch(F: FieldSpec, C: np.ndarray, P: np.ndarray) -> np.ndarray:
    B, d, n = P.shape
    if d == 1:
        return batch_rank(F, C)[:, None]
    M = _last_matrices(F, C, P)
    rd = batch_rank(F, M)
    X = all_vectors(F.q, n)
    Q = len(X)
    inker = ~F.matmul(M, X.T).any(axis=1)
    Cm = np.moveaxis(C, d, 1)
    if F.m == 1:
        sub = np.einsum("ji,bi...->bj...", X, Cm) % F.p
    else:
        sub = F.sum(F.mul(X.reshape((1, Q, n) + (1,) * (Cm.ndim - 2)), Cm[:, None]), axis=2)
    sub = sub.reshape((B * Q,) + (n,) * d)
    R = _lr_batch(F, sub, np.repeat(P[:, : d - 1], Q, axis=0)).reshape(B, Q, d - 1)
    key = (R * (n + 1) ** np.arange(d - 1)).sum(axis=2)
    key[~inker] = -1
    best = R[np.arange(B), key.argmax(axis=1)]
    return np.concatenate([best, rd[:, None]], axis=1)


# --- local rank straight from the definition ---


def point_tables(F: FieldSpec, C, ranks: bool = True) -> tuple[np.ndarray, np.ndarray | None]:
    """For a batch of tensors, the zero indicator and slot-wise slice ranks at every point.

    Returns Z of shape (B, N) and R of shape (d, B, N) where N = q^(nd) and the
    points are in canonical order (slot 1 most significant).
    """
    C = np.asarray(C, dtype=np.int64)
    B = C.shape[0]
    n = C.shape[1]
    d = C.ndim - 2
    caps.check("bruteforce", F.q ** (n * d), "direct local-rank enumeration")
    pts = all_points(F.q, n, d)
    N = len(pts)

    def contract_points(A, slot):
        # A has shape (B, N, n, ...): contract axis 2 with pts[:, slot]
        X = pts[:, slot]
        if F.m == 1:
            return np.einsum("ki,bki...->bk...", X, A) % F.p
        return F.sum(F.mul(X.reshape((1, N, n) + (1,) * (A.ndim - 3)), A), axis=2)

    base = np.broadcast_to(C[:, None], (B, N) + C.shape[1:])
    E = base
    for k in range(d):
        E = contract_points(E, k)
    Z = ~E.any(axis=2)
    if not ranks:
        return Z, None
    R = np.empty((d, B, N), dtype=np.int64)
    for i in range(d):
        A = np.moveaxis(base, 2 + i, 1 + d)  # slot i next to the output axis
        for k in range(d):
            if k != i:
                A = contract_points(A, k)
        R[i] = batch_rank(F, A.reshape(B * N, n, n)).reshape(B, N)
    return Z, R


def local_rank_from_tables(Z: np.ndarray, R: np.ndarray, q: int, n: int, p_idx) -> np.ndarray:
    """Colex max of the slice-rank vectors over all adjoint partners, per tensor and point.

    ``p_idx`` is an int array of shape (B, K) of canonical point indices; the
    result has shape (B, K, d).
    """
    d, B, N = R.shape
    p_idx = np.asarray(p_idx, dtype=np.int64)
    x_idx = np.arange(N)
    b_idx = np.arange(B)[:, None, None]
    block = [q ** (n * (d - i)) for i in range(1, d + 1)]
    ok = np.ones((B, p_idx.shape[1], N), dtype=bool)
    ranks = []
    for i in range(1, d + 1):
        s = block[i - 1]
        w = (p_idx[:, :, None] // s) * s + x_idx[None, None, :] % s
        ranks.append(R[i - 1][b_idx, w])
        if i < d:
            ok &= Z[b_idx, w]
    stacked = np.stack(ranks, axis=-1)
    key = (stacked * (n + 1) ** np.arange(d)).sum(axis=-1)
    key[~ok] = -1
    best = key.argmax(axis=-1)
    return np.take_along_axis(stacked, best[:, :, None, None], axis=2)[:, :, 0, :]


def point_index(q: int, p) -> int:
    flat = np.asarray(p, dtype=np.int64).ravel()
    idx = 0
    for v in flat:
        idx = idx * q + int(v)
    return idx


def local_rank_bruteforce(T: Tensor, p) -> tuple[int, ...]:
    """LR_p(T) by maximizing over every x in V^d with p adjoint to x."""
    p = as_point(T, p)
    Z, R = point_tables(T.field, T.coeffs[None])
    out = local_rank_from_tables(Z, R, T.field.q, T.n, [[point_index(T.field.q, p)]])
    return tuple(int(v) for v in out[0, 0])


# --- algebraic local rank ---


def alg_local_rank_leq(T: Tensor, p, r) -> bool:
    """Decide whether bLR_p(T) is colex at most r.

    Where the last slice has rank exactly r_d, every slice T[x] with x in its
    kernel over an extension L with |L| > prod_{i<d}(r_i + 1) is checked
    recursively; a polynomial of that degree vanishing on all of a subspace
    over L vanishes on its closure.
    """
    p = as_point(T, p)
    r = tuple(int(v) for v in r)
    if len(r) != T.d:
        raise LengthMismatch(f"rank vector has length {len(r)}, expected {T.d}")
    return _leq(T, p, r, [0])


def _leq(T: Tensor, p: np.ndarray, r: tuple[int, ...], work: list) -> bool:
    F = T.field
    M = matrix_slice(T, p[: T.d], T.d - 1)
    rd = rank(F, M)
    if rd > r[-1]:
        return False
    if T.d == 1 or rd < r[-1]:
        return True
    rest = r[:-1]
    if all(v >= T.n for v in rest):
        return True
    K = kernel_basis(F, M)
    if len(K) == 0:
        return True
    L = extension_for(F, math.prod(v + 1 for v in rest))
    if L != F:
        emb = embedding_table(F, L)
        T, p, K = embed_tensor(T, L), emb[p], emb[K]
    reps = projective_reps(L, K)
    work[0] += len(reps)
    caps.check("sweep", work[0], "extension-field kernel sweep")
    if T.d == 2:
        return int(batch_rank(L, _slice_batch(T, reps)).max()) <= rest[0]
    return all(_leq(slice_last(T, x), p, rest, work) for x in reps)


def alg_local_rank(T: Tensor, p) -> tuple[int, ...]:
    """The colex-minimal r with bLR_p(T) at most r, found coordinate by coordinate."""
    p = as_point(T, p)
    n, d = T.n, T.d
    fixed: list[int] = []
    for _ in range(d):
        free = d - len(fixed) - 1
        for t in range(n + 1):
            cand = (n,) * free + (t,) + tuple(fixed)
            if _leq(T, p, cand, [0]):
                fixed.insert(0, t)
                break
    return tuple(fixed)


def is_lr_stable(T: Tensor, p) -> bool:
    """LR_p(T) = bLR_p(T); since LR never exceeds bLR one decision suffices."""
    p = as_point(T, p)
    return alg_local_rank_leq(T, p, local_rank(T, p))


# --- stable point search ---


def _line_classes(F: FieldSpec, n: int) -> np.ndarray:
    """Zero plus one vector with leading coefficient 1 per line of F^n, in canonical order."""
    reps = projective_reps(F, np.eye(n, dtype=np.int64))
    allv = np.vstack([np.zeros((1, n), dtype=np.int64), reps])
    order = np.lexsort(allv.T[::-1])
    return allv[order]


def find_lr_stable_point(T: Tensor, mode: str = "exhaustive", budget: int | None = None, rng=None):
    """An LR-stable p minimizing norm(LR_p(T)), ties broken by canonical order of p.

    ``exhaustive`` scans every prefix (p_1..p_{d-1}) up to nonzero scaling of
    each slot, with p_d = 0, in order of the lower bound rank T[p]_d.
    ``sampled`` draws ``budget`` points uniformly from Z(T).  Returns
    (p, LR_p(T)) or None when no stable point was seen within the budget.
    """
    n, d, F = T.n, T.d, T.field
    if mode == "sampled":
        from .sampler import uniform_zero_point

        if rng is None:
            rng = np.random.default_rng(0)
        best = None
        for _ in range(budget or 64):
            p = uniform_zero_point(T, rng)
            lr = local_rank(T, p)
            cand = (norm(lr), p.ravel().tolist())
            if best is not None and cand >= best[0]:
                continue
            if alg_local_rank_leq(T, p, lr):
                best = (cand, p, lr)
        return None if best is None else (best[1], best[2])
    if mode != "exhaustive":
        raise ValueError(f"unknown search mode {mode!r}")
    if d == 1:
        return np.zeros((1, n), dtype=np.int64), (rank(F, T.matrix()),)
    classes = _line_classes(F, n)
    caps.check("enum", len(classes) ** (d - 1), "stable-point prefix scan")
    idx = np.array(list(product(range(len(classes)), repeat=d - 1)), dtype=np.int64)
    prefixes = classes[idx]
    lower = batch_rank(F, _last_matrices(F, np.broadcast_to(T.coeffs, (len(idx),) + T.coeffs.shape), np.concatenate([prefixes, np.zeros((len(idx), 1, n), np.int64)], axis=1)))
    heap = [(int(lower[k]), k) for k in range(len(idx))]
    heapq.heapify(heap)
    best = None
    evaluated = 0
    while heap:
        lb, k = heapq.heappop(heap)
        if best is not None and lb > best[0][0]:
            break
        if budget is not None and evaluated >= budget:
            break
        evaluated += 1
        p = np.concatenate([prefixes[k], np.zeros((1, n), np.int64)], axis=0)
        lr = local_rank(T, p)
        cand = (norm(lr), k)
        if best is not None and cand >= best[0]:
            continue
        if alg_local_rank_leq(T, p, lr):
            best = (cand, p, lr)
    return None if best is None else (best[1], best[2])
