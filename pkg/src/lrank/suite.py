"""Named property checks over every module, runnable at two sizes.

``smoke`` uses small corpora and finishes in well under a minute; ``full``
runs the exhaustive corpora.  Each property returns (passed, detail) and a
failure or exception becomes a report entry rather than an abort.  Reports
contain no timings, so a fixed seed gives a byte-identical report.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import permutations, product

import numpy as np

from . import decomp, localrank, matrix, polarize, sampler, tensor, vrat
from .errors import NotStable
from .field import embedding_table, extension_for, make_field

PROPERTIES: list[tuple[str, str, object]] = []


def prop(module: str, name: str):
    def wrap(fn):
        PROPERTIES.append((module, name, fn))
        return fn

    return wrap


def all_tensors(F, n: int, d: int) -> np.ndarray:
    """Every coefficient array of the given shape, in canonical order."""
    N = n ** (d + 1)
    codes = np.arange(F.q**N, dtype=np.int64)
    digits = (codes[:, None] // F.q ** np.arange(N)[::-1]) % F.q
    return digits.reshape((-1,) + (n,) * (d + 1))


def lr_equivalence_mismatches(F, C: np.ndarray) -> int:
    """Count (T, p) pairs where the direct maximum and the kernel recursion disagree."""
    C = np.asarray(C, dtype=np.int64)
    B, n, d = C.shape[0], C.shape[1], C.ndim - 2
    Z, R = localrank.point_tables(F, C)
    N = Z.shape[1]
    brute = localrank.local_rank_from_tables(Z, R, F.q, n, np.tile(np.arange(N), (B, 1)))
    pts = tensor.all_points(F.q, n, d)
    rec = localrank.local_rank_batch(F, np.repeat(C, N, axis=0), np.tile(pts, (B, 1, 1)))
    return int((brute.reshape(B * N, d) != rec).any(axis=1).sum())


# --- field ---


@prop("field", "field axioms")
def _field_axioms(level, rng):
    for p, m in [(2, 1), (3, 1), (2, 2), (5, 1), (2, 3), (2, 4)]:
        F = make_field(p, m)
        a, b, c = np.meshgrid(*[np.arange(F.q)] * 3, indexing="ij")
        if not np.array_equal(F.mul(F.mul(a, b), c), F.mul(a, F.mul(b, c))):
            return False, f"associativity fails over GF({F.q})"
        if not np.array_equal(F.mul(a, F.add(b, c)), F.add(F.mul(a, b), F.mul(a, c))):
            return False, f"distributivity fails over GF({F.q})"
        nz = np.arange(1, F.q)
        if not (F.mul(nz, F.inv(nz)) == 1).all():
            return False, f"inverses fail over GF({F.q})"
    F = make_field(101)
    a, b, c = (rng.integers(0, F.q, 10**4) for _ in range(3))
    ok = np.array_equal(F.mul(a, F.add(b, c)), F.add(F.mul(a, b), F.mul(a, c)))
    return ok, "exhaustive for q <= 16, sampled for q = 101"


@prop("field", "embedding injective and multiplicative")
def _embedding(level, rng):
    for p, m in [(2, 1), (2, 2), (3, 1), (2, 4), (3, 2)]:
        src = make_field(p, m)
        for t in (m, 2 * m):
            tgt = make_field(p, t)
            e = embedding_table(src, tgt)
            a, b = np.meshgrid(np.arange(src.q), np.arange(src.q), indexing="ij")
            if len(set(e.tolist())) != src.q or not np.array_equal(e[src.mul(a, b)], tgt.mul(e[a], e[b])):
                return False, f"GF({src.q}) into GF({tgt.q})"
    return True, ""


@prop("field", "character orthogonality")
def _characters(level, rng):
    for p, m in [(2, 1), (3, 1), (2, 2), (5, 1), (3, 2)]:
        F = make_field(p, m)
        a = np.arange(F.q)
        for c in range(F.q):
            s = F.character_table[F.mul(c, a)].sum()
            want = F.q if c == 0 else 0
            if abs(s - want) > 1e-9:
                return False, f"GF({F.q}) c={c}"
    return True, ""


# --- matrix ---

FIELDS_SMALL = [(2, 1), (3, 1), (2, 2), (5, 1)]


def _matrix_corpus(level, rng):
    count = 1000 if level == "full" else 60
    for p, m in FIELDS_SMALL:
        F = make_field(p, m)
        for _ in range(count):
            rows, cols = rng.integers(1, 7, size=2)
            r = int(rng.integers(0, min(rows, cols) + 1))
            s = int(rng.integers(0, r + 1))
            A = matrix.random_matrix_of_rank(F, rows, cols, s, rng)
            I = tuple(sorted(rng.choice(rows, r, replace=False).tolist()))
            J = tuple(sorted(rng.choice(cols, r, replace=False).tolist()))
            yield F, A, I, J


@prop("matrix", "adjugate identities")
def _adjugate(level, rng):
    for F, A, I, J in _matrix_corpus(level, rng):
        if not matrix.check_adjugate_identities(F, A, I, J).ok:
            return False, f"GF({F.q}) {A.tolist()} I={I} J={J}"
    return True, ""


@prop("matrix", "projection properties")
def _projection(level, rng):
    for F, A, I, J in _matrix_corpus(level, rng):
        if A.shape[0] < len(I):
            continue
        P, Q, g = matrix.projection_PQ(F, A, I, J)
        rk, r = matrix.rank(F, A), len(I)
        if rk < r and P.any():
            return False, "P nonzero below rank"
        if rk <= r and F.matmul(A, P).any():
            return False, "A P nonzero"
        if rk == r:
            pair = matrix.find_full_minor(F, A, r)
            P2, _, g2 = matrix.projection_PQ(F, A, *pair)
            if g2 == 0 or not matrix.same_span(F, matrix.image_basis(F, P2), matrix.kernel_basis(F, A)):
                return False, "image of P differs from the kernel"
    return True, ""


@prop("matrix", "rank formula reconstruction")
def _rank_formula(level, rng):
    for F, A, I, J in _matrix_corpus(level, rng):
        terms, g = matrix.rank_formula_terms(F, A, I, J)
        if g == 0 or matrix.rank(F, A) > len(I):
            continue
        total = np.zeros_like(A)
        for t in terms:
            total = F.add(total, t)
        if len(terms) != len(I) or not np.array_equal(F.mul(total, F.inv(g)), A):
            return False, f"GF({F.q}) {A.tolist()}"
    return True, ""


@prop("matrix", "projection homogeneity")
def _homogeneity(level, rng):
    for F, A, I, J in _matrix_corpus(level, rng):
        lam = int(rng.integers(1, F.q))
        P, Q, g = matrix.projection_PQ(F, A, I, J)
        P2, Q2, g2 = matrix.projection_PQ(F, F.mul(A, lam), I, J)
        s = F.pow(lam, len(I))
        if g2 != F.mul(g, s) or not np.array_equal(P2, F.mul(P, s)) or not np.array_equal(Q2, F.mul(Q, s)):
            return False, f"GF({F.q}) lambda={lam}"
    return True, ""


# --- tensor ---


def kernel_zero_mismatches(F, C: np.ndarray) -> int:
    """Count (T, x, i, y) where y in ker T[x]_i disagrees with T(x with slot i set to y) = 0.

    Slot matrices come from contracting coefficient arrays and membership of
    the modified point from the zero table, so the two sides are computed
    independently.  Prime fields only.
    """
    C = np.asarray(C, dtype=np.int64)
    B, n, d = C.shape[0], C.shape[1], C.ndim - 2
    pts = tensor.all_points(F.q, n, d)
    N = len(pts)
    Z, _ = localrank.point_tables(F, C, ranks=False)
    V = matrix.all_vectors(F.q, n)
    block = F.q**n
    bad = 0
    for i in range(d):
        A = np.broadcast_to(np.moveaxis(C, 1 + i, d)[:, None], (B, N) + (n,) * (d + 1))
        for k in range(d):
            if k != i:
                A = np.einsum("bkj...,kj->bk...", A, pts[:, k]) % F.p
        in_ker = ~(np.einsum("bkjo,yj->bkyo", A, V) % F.p).any(axis=-1)
        s = block ** (d - 1 - i)
        base = (np.arange(N) // (s * block)) * (s * block) + np.arange(N) % s
        zero = Z[:, base[:, None] + np.arange(block)[None, :] * s]
        bad += int((in_ker != zero).sum())
    return bad


@prop("tensor", "kernel and zero set correspondence")
def _ext_zt(level, rng):
    F = make_field(2)
    for d in ([2, 3] if level == "full" else [2]):
        C = all_tensors(F, 2, d)
        for start in range(0, len(C), 2048):
            bad = kernel_zero_mismatches(F, C[start : start + 2048])
            if bad:
                return False, f"{bad} mismatches at d={d}"
    return True, ""


@prop("tensor", "zero set size matches enumeration")
def _zero_naive(level, rng):
    count = 200 if level == "full" else 20
    for p, m, n, d in [(2, 1, 2, 2), (2, 1, 2, 3), (3, 1, 2, 2), (2, 2, 2, 2), (5, 1, 2, 2), (3, 1, 2, 3)]:
        F = make_field(p, m)
        for _ in range(count):
            T = tensor.random_tensor(F, n, d, rng)
            if tensor.zero_set_size(T) != tensor.zero_set_size_naive(T):
                return False, f"GF({F.q}) n={n} d={d}"
    return True, ""


@prop("tensor", "order-one analytic rank equals matrix rank")
def _ar_order_one(level, rng):
    for p in (2, 3):
        F = make_field(p)
        for n in (1, 2, 3):
            if p == 2 and n <= 2:
                mats = all_tensors(F, n, 1)
            else:
                mats = rng.integers(0, p, size=(100 if level == "full" else 20, n, n))
            for M in mats:
                z, ar = tensor.analytic_rank(tensor.Tensor(F, n, 1, M))
                if z != p ** (n - matrix.rank(F, M.T)):
                    return False, f"GF({p}) {M.tolist()}"
    return True, ""


@prop("tensor", "analytic rank below planted partition rank")
def _ar_planted(level, rng):
    count = 50 if level == "full" else 10
    for p, n, d in [(2, 3, 2), (3, 2, 3), (5, 3, 2)]:
        F = make_field(p)
        for _ in range(count):
            r = int(rng.integers(0, 3))
            T = tensor.planted_tensor(F, n, d, r, rng)
            if tensor.analytic_rank(T)[1] > r + 1e-9:
                return False, f"GF({p}) n={n} d={d} r={r}"
    return True, ""


@prop("tensor", "verification invariance")
def _verify_invariance(level, rng):
    count = 50 if level == "full" else 10
    F = make_field(5)
    for _ in range(count):
        T, D = tensor.planted_decomposition(F, 3, 2, 3, rng)
        terms = list(D.terms)
        rng.shuffle(terms)
        lam = int(rng.integers(1, 5))
        t0 = terms[0]
        terms[0] = tensor.Term(t0.slots, F.mul(t0.form, lam), F.mul(t0.map, F.inv(lam)))
        if not tensor.verify_decomposition(T, tensor.Decomposition(2, terms))[0]:
            return False, "permuted and rescaled terms fail"
    return True, ""


# --- localrank ---


@prop("localrank", "recursion equals direct maximum")
def _lr_equiv(level, rng):
    F = make_field(2)
    dims = [2, 3] if level == "full" else [2]
    for d in dims:
        C = all_tensors(F, 2, d)
        for start in range(0, len(C), 1024):
            bad = lr_equivalence_mismatches(F, C[start : start + 1024])
            if bad:
                return False, f"{bad} mismatches, GF(2) n=2 d={d}"
    count = 200 if level == "full" else 20
    F = make_field(3)
    for n, d in [(2, 2), (3, 2), (2, 3)]:
        C = rng.integers(0, 3, size=(count,) + (n,) * (d + 1))
        for start in range(0, count, 8):
            if lr_equivalence_mismatches(F, C[start : start + 8]):
                return False, f"GF(3) n={n} d={d}"
    return True, ""


def _random_pairs(level, rng, count_full=100, count_smoke=15):
    count = count_full if level == "full" else count_smoke
    for p, n, d in [(2, 2, 2), (2, 3, 2), (3, 2, 3), (5, 2, 2)]:
        F = make_field(p)
        for _ in range(count):
            T = tensor.random_tensor(F, n, d, rng)
            p_ = rng.integers(0, p, size=(d, n))
            yield T, p_


@prop("localrank", "local rank below algebraic local rank")
def _lr_blr(level, rng):
    for T, p in _random_pairs(level, rng):
        if localrank.colex_cmp(localrank.local_rank(T, p), localrank.alg_local_rank(T, p)) > 0:
            return False, repr(T)
    return True, ""


@prop("localrank", "independent of the last point")
def _lr_last(level, rng):
    for T, p in _random_pairs(level, rng, 30, 5):
        base = localrank.local_rank(T, p)
        for y in matrix.all_vectors(T.field.q, T.n):
            if localrank.local_rank(T, tensor.replace_slot(p, T.d - 1, y)) != base:
                return False, repr(T)
    return True, ""


@prop("localrank", "last coordinate is the last slice rank")
def _lr_last_coord(level, rng):
    for T, p in _random_pairs(level, rng):
        if localrank.local_rank(T, p)[-1] != matrix.rank(T.field, tensor.matrix_slice(T, p, T.d - 1)):
            return False, repr(T)
    return True, ""


@prop("localrank", "slice scaling keeps local rank")
def _lr_scaling(level, rng):
    for T, p in _random_pairs(level, rng):
        F = T.field
        x = rng.integers(0, F.q, size=T.n)
        lam = int(rng.integers(1, F.q))
        a = localrank.local_rank(tensor.slice_last(T, x), p[:-1])
        b = localrank.local_rank(tensor.slice_last(T, F.mul(x, lam)), p[:-1])
        if a != b:
            return False, repr(T)
    return True, ""


@prop("localrank", "algebraic decision matches extension search")
def _blr_soundness(level, rng):
    count = 40 if level == "full" else 8
    for p, n in [(2, 2), (2, 3), (3, 2)]:
        F = make_field(p)
        L = extension_for(F, n + 1)
        for _ in range(count):
            T = tensor.random_tensor(F, n, 2, rng)
            pt = rng.integers(0, p, size=(2, n))
            table = embedding_table(F, L)
            TL = tensor.embed_tensor(T, L)
            if localrank.alg_local_rank(T, pt) != localrank.local_rank(TL, table[pt]):
                return False, repr(T)
    return True, ""


# --- vrat ---


def _vrat_corpus(level, rng):
    count = 60 if level == "full" else 10
    for p in (2, 3, 5):
        F = make_field(p)
        for _ in range(count):
            nv = int(rng.integers(1, 4))
            H = vrat.random_vpoly(F, nv, (2,), 2, rng)
            g = vrat.random_vpoly(F, nv, (), 2, rng)
            if g.is_zero():
                g = vrat.VPoly.const(F, nv, 1)
            yield F, nv, H, g


@prop("vrat", "derivative preserves equivalence")
def _vrat_deriv(level, rng):
    for F, nv, H, g in _vrat_corpus(level, rng):
        R = vrat.VRat(g * H, g)
        if not vrat.vrat_equiv(vrat.derivative(R), H.grad(range(nv))):
            return False, f"GF({F.q})"
    return True, ""


@prop("vrat", "evaluation commutes with term sums")
def _vrat_sum(level, rng):
    for F, nv, H, g in _vrat_corpus(level, rng):
        parts = [vrat.random_vpoly(F, nv, (2,), 2, rng) for _ in range(3)]
        total = parts[0] + parts[1] + parts[2]
        for _ in range(5):
            v = rng.integers(0, F.q, size=nv)
            if int(g.eval(v)) == 0:
                continue
            a = vrat.VRat(total, g).eval(v)
            vals = [vrat.VRat(t, g).eval(v) for t in parts]
            if not np.array_equal(a, F.add(F.add(vals[0], vals[1]), vals[2])):
                return False, f"GF({F.q})"
    return True, ""


@prop("vrat", "derivative term budget")
def _vrat_budget(level, rng):
    for F, nv, H, g in _vrat_corpus(level, rng):
        n = 2
        terms = []
        for _ in range(int(rng.integers(1, 4))):
            form = vrat.random_vpoly(F, nv, (n,), 1, rng)
            mp = vrat.random_vpoly(F, nv, (n,), 1, rng)
            terms.append(vrat.FormulaTerm((0,), form, mp))
        Fm = vrat.DecompFormula(1, terms, g)
        dF = vrat.derivative_formula(Fm, range(nv))
        if len(dF.terms) > 2 * len(Fm.terms):
            return False, "budget exceeded"
    return True, ""


@prop("vrat", "characteristic two derivative of a square")
def _vrat_char2(level, rng):
    F = make_field(2)
    v = vrat.VPoly.var(F, 2, 0)
    return (v * v).grad([0, 1]).is_zero(), ""


# --- decomp ---


def _decomp_corpus(level, rng):
    F = make_field(2)
    for c in all_tensors(F, 2, 2) if level == "full" else all_tensors(F, 2, 2)[::7]:
        yield tensor.Tensor(F, 2, 2, c), True
    count = 30 if level == "full" else 4
    for p, n, d in [(3, 2, 2), (3, 3, 2), (5, 2, 3), (3, 2, 3)]:
        F = make_field(p)
        for _ in range(count):
            yield tensor.random_tensor(F, n, d, rng), False


@prop("decomp", "verified decompositions within budget")
def _decomp_budget(level, rng):
    for T, exhaustive in _decomp_corpus(level, rng):
        found = localrank.find_lr_stable_point(T)
        if found is None:
            continue
        p, lr = found
        D = decomp.decompose(T, p)
        if not tensor.verify_decomposition(T, D)[0] or len(D) > localrank.norm(lr):
            return False, repr(T)
    F = make_field(3)
    for _ in range(10):
        M = rng.integers(0, 3, size=(3, 3))
        if len(decomp.decompose_matrix(F, M)) != matrix.rank(F, M):
            return False, "order one"
    return True, ""


@prop("decomp", "brute-force partition rank below decomposition size")
def _decomp_oracle(level, rng):
    F = make_field(2)
    C = all_tensors(F, 2, 2) if level == "full" else all_tensors(F, 2, 2)[::5]
    for c in C:
        T = tensor.Tensor(F, 2, 2, c)
        found = decomp.pr_upper_bound(T)
        if found is None:
            continue
        if tensor.brute_force_pr(T, 8) > found[0]:
            return False, repr(T)
    return True, ""


@prop("decomp", "slice formula certificate")
def _decomp_certificate(level, rng):
    count = 20 if level == "full" else 4
    for p, n, d in [(3, 2, 2), (5, 2, 3)]:
        F = make_field(p)
        for _ in range(count):
            T = tensor.random_tensor(F, n, d, rng)
            found = localrank.find_lr_stable_point(T)
            if found is None:
                continue
            parts = decomp.slice_formula(T, found[0])
            num = parts.numerator(n)
            nv = parts.h.nvars
            # numerator(t) = h(t) T[y + t] on the new block of variables
            for _ in range(10):
                t = np.zeros(nv, dtype=np.int64)
                t[parts.new_vars] = rng.integers(0, p, size=n)
                lhs = num.eval(t)
                y = F.add(parts.y, t[parts.new_vars])
                rhs = F.mul(tensor.slice_last(T, y).coeffs, int(parts.h.eval(t)))
                if not np.array_equal(lhs, rhs):
                    return False, repr(T)
    return True, ""


@prop("decomp", "stability regression")
def _decomp_regression(level, rng):
    F = make_field(2)
    c = np.zeros((3, 3, 3), dtype=np.int64)
    c[0, 0, 0] = c[1, 1, 1] = c[2, 0, 2] = c[2, 1, 2] = 1
    T = tensor.Tensor(F, 3, 2, c)
    p = np.zeros((2, 3), dtype=np.int64)
    try:
        decomp.decompose(T, p)
        return False, "unstable point accepted"
    except NotStable:
        pass
    try:
        D = decomp.build_decomposition(T, p)
    except Exception:
        return True, "construction fails without the stability check"
    return not tensor.verify_decomposition(T, D)[0], "unchecked construction does not verify"


# --- sampler ---


@prop("sampler", "resample uniformity")
def _resample_uniform(level, rng):
    F = make_field(2)
    for d in ([2, 3] if level == "full" else [2]):
        C = all_tensors(F, 2, d)
        for start in range(0, len(C), 4096):
            for i in range(d + 1):
                w, Z, scale = sampler.resample_weights_dense(F, C[start : start + 4096], i)
                if not np.array_equal(w, Z * scale):
                    return False, f"d={d} i={i}"
    F = make_field(3)
    for _ in range(20 if level == "full" else 3):
        T = tensor.random_tensor(F, 2, 2, rng)
        for i in range(3):
            D = sampler.resample_distribution_exact(T, i)
            if len(set(D.probs)) != 1 or len(D.support) != tensor.zero_set_size(T):
                return False, "GF(3)"
    return True, ""


@prop("sampler", "expected slice rank below analytic rank")
def _prop64(level, rng):
    F = make_field(2)
    C = all_tensors(F, 2, 2)
    corpus = [tensor.Tensor(F, 2, 2, c) for c in (C if level == "full" else C[::9])]
    for p in (3, 5):
        for _ in range(100 if level == "full" else 10):
            corpus.append(tensor.random_tensor(make_field(p), 2, 2, rng))
    for T in corpus:
        z, q, nd = tensor.zero_set_size(T), T.field.q, T.n * T.d
        for e in sampler.expected_slice_ranks(T):
            if not sampler.ar_leq(e, z, q, nd):
                return False, repr(T)
    return True, ""


@prop("sampler", "pruning postcondition")
def _pruning(level, rng):
    for _ in range(200 if level == "full" else 30):
        outs = list(product(range(3), repeat=3))
        w = rng.integers(0, 4, size=len(outs))
        w[0] += 1
        dist = {o: Fraction(int(x), int(w.sum())) for o, x in zip(outs, w) if x}
        S = {o for o in outs if rng.random() < 0.5} | {outs[0]}
        mass = sum((dist.get(o, Fraction(0)) for o in S), Fraction(0))
        cuts = sorted(Fraction(int(v), 12) for v in rng.integers(1, 12, size=2))
        deltas = [mass * cuts[0], mass * (cuts[1] - cuts[0]), mass * (1 - cuts[1])]
        if min(deltas) <= 0:
            continue
        T = sampler.prune(dist, S, deltas)
        if not (T and T <= S and sampler.check_pruned(dist, T, deltas)):
            return False, str(dist)
    return True, ""


@prop("sampler", "pipeline consistency")
def _pipeline(level, rng):
    for _ in range(20 if level == "full" else 4):
        T = tensor.random_tensor(make_field(53), 2, 2, rng)
        rep = sampler.lr_ar_pipeline(T, 1)
        if rep.stable:
            p = np.array(rep.p)
            lr, blr = localrank.local_rank(T, p), localrank.alg_local_rank(T, p)
            if lr != blr or localrank.colex_cmp(lr, rep.r) > 0:
                return False, repr(T)
    return True, ""


@prop("sampler", "resample adjointness")
def _adjoint(level, rng):
    for p, n, d in [(2, 2, 2), (3, 2, 2), (2, 2, 3)]:
        F = make_field(p)
        for _ in range(10 if level == "full" else 3):
            T = tensor.random_tensor(F, n, d, rng)
            zs = sampler.ZeroSetSampler(T)
            for _ in range(20):
                res = sampler.uniform_resample(T, rng, zs)
                if not tensor.is_adjoint(T, res.U, res.X):
                    return False, repr(T)
    return True, ""


# --- polarize ---


def _poly_corpus(level, rng):
    for p in (5, 7):
        F = make_field(p)
        for n in (1, 2):
            for k in (2, 3):
                for _ in range(6 if level == "full" else 2):
                    P = polarize.random_poly(F, n, k, rng)
                    if P.degree >= 2:
                        yield P


@prop("polarize", "polarization multilinear and symmetric")
def _polar_props(level, rng):
    for P in _poly_corpus(level, rng):
        F, n, k = P.field, P.n, P.degree
        T = polarize.polarize(P)
        C = T.coeffs
        if any(not np.array_equal(C, C.transpose(s)) for s in permutations(range(k))):
            return False, "not symmetric"
        pts = matrix.all_vectors(F.q, n)
        diag = polarize.form_value(T, [pts] * k)
        want = F.mul(P.homogeneous_part(k).eval(pts), F.scalar(math.factorial(k)))
        if not np.array_equal(diag, want):
            return False, "diagonal differs from k! P_k"
        xs = [pts[rng.integers(0, len(pts), 50)] for _ in range(k)]
        for y in (np.zeros((50, n), np.int64), pts[rng.integers(0, len(pts), 50)]):
            if not np.array_equal(polarize.polar_by_differences(P, xs, y), polarize.form_value(T, xs)):
                return False, "differences disagree"
    return True, ""


@prop("polarize", "Cauchy-Schwarz bound")
def _cs(level, rng):
    for P in _poly_corpus(level, rng):
        if not polarize.cauchy_schwarz_check(P)["holds"]:
            return False, str(P.monomials)
    return True, ""


@prop("polarize", "witness correlation")
def _witness(level, rng):
    F = make_field(5)
    for _ in range(6 if level == "full" else 2):
        l1, l2 = (polarize.PolyFn.linear(F, rng.integers(0, 5, size=2)) for _ in range(2))
        P = l1 * l2
        if P.degree < 2:
            continue
        res = polarize.poly_rank_upper(P)
        s = 2 * res.bound
        if s > 4:
            continue
        if polarize.witness_correlation(P, res.products) < F.p ** (-s) - 1e-12:
            return False, str(P.monomials)
    return True, ""


# --- cli ---


@prop("cli", "round trip")
def _round_trip(level, rng):
    import os
    import tempfile

    for p, m in [(3, 1), (2, 2)]:
        T = tensor.random_tensor(make_field(p, m), 2, 2, rng)
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, "t.json")
            tensor.save_tensor(T, path)
            first = open(path).read()
            tensor.save_tensor(tensor.load_tensor(path), path)
            if open(path).read() != first:
                return False, f"GF({p**m})"
    return True, ""


@prop("cli", "seed determinism")
def _determinism(level, rng):
    import contextlib
    import io

    from .cli import main

    outs = []
    for _ in range(2):
        buf = io.StringIO()
        with contextlib.redirect_stdout(buf):
            main(["--json", "--seed", "7", "gen", "--p", "3", "--n", "2", "--d", "2"])
        outs.append(buf.getvalue())
    return outs[0] == outs[1], ""


# --- runner ---


@dataclass
class SuiteReport:
    level: str
    seed: int
    results: list

    @property
    def ok(self) -> bool:
        return all(r["passed"] for r in self.results)

    def to_json(self) -> str:
        return json.dumps({"schema": 1, "level": self.level, "seed": self.seed, "ok": self.ok, "results": self.results}, indent=1)


def run_suite(level: str = "smoke", seed: int = 0, only: list[str] | None = None) -> SuiteReport:
    if level not in ("smoke", "full"):
        raise ValueError("level must be smoke or full")
    results = []
    for module, name, fn in PROPERTIES:
        if only and module not in only:
            continue
        rng = np.random.default_rng([seed, len(results)])
        try:
            passed, detail = fn(level, rng)
        except Exception as exc:  # failures are report entries
            passed, detail = False, f"{type(exc).__name__}: {exc}"
        results.append({"module": module, "name": name, "passed": bool(passed), "detail": detail})
    return SuiteReport(level, seed, results)
