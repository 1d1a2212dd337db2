from __future__ import annotations

import itertools
from fractions import Fraction

import mpmath
import numpy as np
import pytest
from hypothesis import given, strategies as st

from lrank.errors import PipelineFailed, PreconditionViolated
from lrank.field import make_field
from lrank.localrank import alg_local_rank, alg_local_rank_leq, local_rank, norm
from lrank.matrix import kernel_basis, rank, span_elements
from lrank.sampler import (
    RankTree,
    ZeroSetSampler,
    ar_leq,
    c_const,
    c_prime,
    check_pruned,
    expected_norm,
    expected_slice_ranks,
    expected_slice_ranks_all,
    field_condition,
    lex_markov_search,
    log_cmp,
    lr_ar_pipeline,
    prob_lr_leq,
    prune,
    rank_tree,
    resample_batch,
    resample_distribution_exact,
    resample_weights_dense,
    tree_leq,
    tree_paths,
    uniform_resample,
    uniform_zero_point,
    zero_set_points,
)
from lrank.tensor import (
    Tensor,
    eval_tensor,
    is_adjoint,
    matrix_slice,
    planted_tensor,
    random_tensor,
    slice_last,
    zero_set_size,
)

from examples_lib import gap_family

F2, F3, F5 = make_field(2), make_field(3), make_field(5)


def point_list(T):
    d, n, q = T.d, T.n, T.field.q
    return [np.array(f).reshape(d, n) for f in itertools.product(range(q), repeat=n * d)]


def chain_law(T, i):
    """Exact law of U with slots >= i taken from X, by walking every branch of the resampling chain."""
    F, d = T.field, T.d
    Z = [x for x in point_list(T) if not eval_tensor(T, x).any()]
    law: dict = {}

    def walk(U, X, j, pr):
        if j < i:
            key = tuple(np.concatenate([U[:i], X[i:]]).ravel().tolist())
            law[key] = law.get(key, Fraction(0)) + pr
            return
        point = np.concatenate([U[:j], X[j:]])
        K = span_elements(F, kernel_basis(F, matrix_slice(T, point, j)))
        for y in K:
            X2 = X.copy()
            X2[j] = y
            walk(U, X2, j - 1, pr / len(K))

    for U in Z:
        walk(U, U.copy(), d - 1, Fraction(1, len(Z)))
    return law, Z


# --- exact logarithm comparisons ---


@given(st.integers(-40, 200), st.integers(1, 40), st.integers(1, 10**6), st.sampled_from([2, 3, 4, 5, 7, 9, 25, 53]))
def test_log_cmp_matches_mpmath(a, b, z, q):
    c = Fraction(a, b)
    mpmath.mp.dps = 80
    diff = mpmath.mpf(a) / b - mpmath.log(z) / mpmath.log(q)
    got = log_cmp(c, z, q)
    if abs(diff) < mpmath.mpf(10) ** -60:
        assert got == 0
    else:
        assert got == (1 if diff > 0 else -1)


def test_log_cmp_exact_powers():
    assert log_cmp(Fraction(3), 8, 2) == 0
    assert log_cmp(Fraction(3, 2), 8, 4) == 0
    assert log_cmp(Fraction(1, 2), 3, 9) == 0
    assert log_cmp(Fraction(2, 3), 2, 8) == 1
    assert log_cmp(Fraction(1, 3), 2, 8) == 0


def test_log_cmp_large_values():
    z = 53**40 + 1
    assert log_cmp(Fraction(40), z, 53) == -1
    assert log_cmp(Fraction(40) + Fraction(1, 10**6), z, 53) == 1


def test_ar_leq():
    # |Z| = 136 in (F_2^4)^2: AR = 8 - log2(136) ~ 0.9125
    assert ar_leq(Fraction(9, 10), 136, 2, 8)
    assert not ar_leq(Fraction(92, 100), 136, 2, 8)
    assert ar_leq(Fraction(0), 2**8, 2, 8) and not ar_leq(Fraction(1, 10**9), 2**8, 2, 8)


# --- sampling ---


def test_zero_set_sampler_frequencies():
    rng = np.random.default_rng(0)
    T = random_tensor(F2, 2, 2, rng)
    Z = {tuple(x.ravel()) for x in point_list(T) if not eval_tensor(T, x).any()}
    sampler = ZeroSetSampler(T)
    assert sampler.total == len(Z)
    N = 20000
    counts: dict = {}
    for _ in range(N):
        x = tuple(sampler.sample(rng).ravel())
        assert x in Z
        counts[x] = counts.get(x, 0) + 1
    p = 1 / len(Z)
    sd = (N * p * (1 - p)) ** 0.5
    assert set(counts) == Z
    assert all(abs(c - N * p) <= 4 * sd for c in counts.values())


def test_zero_set_sampler_is_exact_weighting():
    rng = np.random.default_rng(1)
    for F, n, d in [(F3, 2, 2), (F2, 2, 3), (F5, 1, 2)]:
        T = random_tensor(F, n, d, rng)
        s = ZeroSetSampler(T)
        assert s.total == zero_set_size(T)
        assert not eval_tensor(T, uniform_zero_point(T, rng)).any()


def test_resample_invariants(rng):
    for F, n, d in [(F2, 2, 2), (F3, 2, 3), (F5, 2, 2), (F3, 3, 1)]:
        for _ in range(25):
            T = random_tensor(F, n, d, rng)
            R = uniform_resample(T, rng)
            for i in range(d + 1):
                assert not eval_tensor(T, R.walk(i)).any()
            assert is_adjoint(T, R.U, R.X)
            assert len(R.trace) == d


def test_resample_zero_and_order_one(rng):
    T = Tensor.zero(F3, 2, 2)
    R = uniform_resample(T, rng)
    assert R.trace == [2, 2]
    M = np.array([[1, 2, 0], [2, 1, 0], [0, 0, 0]])
    T = Tensor.from_matrix(F3, M)
    for _ in range(10):
        R = uniform_resample(T, rng)
        assert not F3.matmul(M, R.X[0]).any() and not F3.matmul(M, R.U[0]).any()


def test_resample_batch_monte_carlo():
    rng = np.random.default_rng(5)
    T = random_tensor(F2, 2, 2, rng)
    N = 100000
    U, X = resample_batch(T, rng, N)
    # U with slot 1 replaced by X: keep the top block of U, the low block of X
    block = 4
    W = (U // block) * block + X % block
    law, Z = chain_law(T, 1)
    Zidx = {int(x[0] @ [2, 1]) * block + int(x[1] @ [2, 1]) for x in Z}
    counts = np.bincount(W, minlength=16)
    assert set(np.nonzero(counts)[0].tolist()) <= Zidx
    p = 1 / len(Z)
    sd = (N * p * (1 - p)) ** 0.5
    for idx in Zidx:
        assert abs(counts[idx] - N * p) <= 4 * sd


# --- exact distributions ---


def test_chain_law_matches_dp_and_is_uniform(rng):
    for F, n, d in [(F2, 2, 2), (F3, 1, 2), (F2, 1, 3), (F3, 2, 1)]:
        for _ in range(4):
            T = random_tensor(F, n, d, rng)
            for i in range(d + 1):
                law, Z = chain_law(T, i)
                dist = resample_distribution_exact(T, i).as_dict()
                assert dist == law
                assert set(law) == {tuple(z.ravel().tolist()) for z in Z}
                assert all(v == Fraction(1, len(Z)) for v in law.values())


def test_dense_weights_match_sparse(rng):
    for d in (2, 3):
        T = random_tensor(F2, 2, d, rng)
        for i in range(d + 1):
            w, Z, scale = resample_weights_dense(F2, T.coeffs[None], i)
            z = int(Z[0].sum())
            assert np.array_equal(w[0], Z[0].astype(np.int64) * (w[0].sum() // z))
            assert w[0].sum() == scale * z


def test_resample_distribution_examples():
    T = Tensor.zero(F2, 2, 2)
    for i in range(3):
        dist = resample_distribution_exact(T, i)
        assert len(dist.support) == 16 and set(dist.probs) == {Fraction(1, 16)}
    with pytest.raises(ValueError):
        resample_distribution_exact(T, 3)
    assert len(zero_set_points(T)) == 16


# --- expected slice ranks ---


def naive_expected_ranks(T, over_zero=True):
    F = T.field
    pts = point_list(T)
    if over_zero:
        pts = [x for x in pts if not eval_tensor(T, x).any()]
    return [Fraction(sum(rank(F, matrix_slice(T, x, i)) for x in pts), len(pts)) for i in range(T.d)]


def test_expected_slice_ranks_against_enumeration(rng):
    for F, n, d in [(F2, 2, 2), (F3, 1, 3), (F2, 2, 1), (F3, 2, 2)]:
        for _ in range(4):
            T = random_tensor(F, n, d, rng)
            assert expected_slice_ranks(T) == naive_expected_ranks(T)
            assert expected_slice_ranks_all(T) == naive_expected_ranks(T, over_zero=False)
            z = zero_set_size(T)
            for e in expected_slice_ranks(T):
                assert ar_leq(e, z, F.q, n * d)


def test_expected_slice_rank_examples():
    assert expected_slice_ranks(Tensor.zero(F3, 2, 2)) == [0, 0]
    M = np.array([[1, 0, 0], [0, 1, 0], [0, 0, 0]])
    T = Tensor.from_matrix(F3, M)
    assert expected_slice_ranks(T) == [2]
    T = gap_family(F2, 3)
    z = zero_set_size(T)
    # zero iff x1 = 0 or y = 0: 4 * 8 + 4 * 1 = 36 points
    assert z == 36
    e_zero = expected_slice_ranks(T)
    e_all = expected_slice_ranks_all(T)
    assert e_zero == naive_expected_ranks(T)
    # T(x, y) = x_0 y: slot 0 has rank 1 iff y != 0, slot 1 has rank 3 iff x_0 != 0
    assert e_all == [Fraction(7, 8), Fraction(3, 2)]
    # on Z: y != 0 forces x_0 = 0 (28 points), and the 4 points with y = 0, x_0 = 1 have slot-1 rank 3
    assert e_zero == [Fraction(28, 36), Fraction(12, 36)]


# --- rank trees ---


def direct_tree_law(T, p):
    """Law of the slice-rank vector Y by enumerating every kernel choice."""
    F = T.field
    law: dict = {}

    def rec(S, pr, tail):
        if S.d == 1:
            y = (rank(F, S.matrix()),) + tail
            law[y] = law.get(y, Fraction(0)) + pr
            return
        M = matrix_slice(S, p[: S.d], S.d - 1)
        K = span_elements(F, kernel_basis(F, M))
        for x in K:
            rec(slice_last(S, x), pr / len(K), (rank(F, M),) + tail)

    rec(T, Fraction(1), ())
    return law


def test_rank_tree_matches_enumeration(rng):
    for F, n, d in [(F2, 2, 2), (F3, 2, 2), (F2, 2, 3), (F3, 2, 3)]:
        for _ in range(5):
            T = random_tensor(F, n, d, rng)
            p = rng.integers(0, F.q, size=(d, n))
            tree = rank_tree(T, p)
            law: dict = {}
            for _, pr, y in tree_paths(tree):
                law[y] = law.get(y, Fraction(0)) + pr
            want = direct_tree_law(T, p)
            assert law == want
            assert expected_norm(tree) == sum((pr * norm(y) for y, pr in want.items()), Fraction(0))
            # the colex maximum of the support is the local rank
            top = max(want, key=lambda y: y[::-1])
            assert top == local_rank(T, p)


def test_prob_lr_leq_examples(rng):
    T = Tensor.zero(F3, 2, 2)
    assert prob_lr_leq(T, np.zeros((2, 2), dtype=np.int64), (0, 0), 1)
    M = np.array([[1, 1], [0, 0]])
    T = Tensor.from_matrix(F3, M)
    assert prob_lr_leq(T, [[0, 0]], (1,), 1) and not prob_lr_leq(T, [[0, 0]], (0,), Fraction(1, 100))
    for _ in range(30):
        T = random_tensor(F3, 2, 3, rng)
        p = rng.integers(0, 3, size=(3, 2))
        r = local_rank(T, p)
        assert prob_lr_leq(T, p, r, 1)
        for lo, hi in [(Fraction(1, 5), Fraction(1, 2)), (Fraction(1, 2), Fraction(1))]:
            for s in itertools.product(range(3), repeat=3):
                if prob_lr_leq(T, p, s, hi):
                    assert prob_lr_leq(T, p, s, lo)


def test_delta_order_implies_algebraic_bound(rng):
    checked = 0
    for F in (F5, make_field(7)):
        for n, d in [(2, 2), (2, 3), (3, 2)]:
            for _ in range(8):
                T = random_tensor(F, n, d, rng)
                p = rng.integers(0, F.q, size=(d, n))
                p[-1] = 0
                tree = rank_tree(T, p)
                for _, _, y in tree_paths(tree):
                    for delta in (Fraction(1, 2), Fraction(9, 10), Fraction(1)):
                        bound = 1
                        for v in y[:-1]:
                            bound *= v + 1
                        if delta * F.q > bound and tree_leq(tree, y, delta):
                            assert alg_local_rank_leq(T, p, y)
                            checked += 1
    assert checked > 20


# --- pruning ---


def test_prune_examples():
    dist = {(a, b): Fraction(1, 4) for a in range(2) for b in range(2)}
    S = set(dist)
    assert prune(dist, S, [Fraction(1, 100)] * 2) == S
    S = {(0, 0), (1, 1)}
    Tset = prune(dist, S, [Fraction(1, 4), Fraction(1, 4)])
    assert Tset and Tset <= S and check_pruned(dist, Tset, [Fraction(1, 4)] * 2)
    with pytest.raises(PreconditionViolated):
        prune(dist, {(0, 0), (0, 1)}, [Fraction(3, 10), Fraction(3, 10)])
    with pytest.raises(PreconditionViolated):
        prune(dist, S, [0, Fraction(1, 4)])


@st.composite
def distributions(draw):
    d = draw(st.integers(1, 3))
    support = draw(st.lists(st.tuples(*[st.integers(0, 2)] * d), min_size=1, max_size=12, unique=True))
    weights = draw(st.lists(st.integers(1, 9), min_size=len(support), max_size=len(support)))
    total = sum(weights)
    dist = {x: Fraction(w, total) for x, w in zip(support, weights)}
    S = set(draw(st.lists(st.sampled_from(support), min_size=1, unique=True)))
    mass = sum(dist[x] for x in S)
    split = draw(st.lists(st.integers(1, 5), min_size=d, max_size=d))
    deltas = [mass * w / (sum(split) + draw(st.integers(0, 4))) for w in split]
    return dist, S, deltas


@given(distributions())
def test_prune_postcondition(args):
    dist, S, deltas = args
    Tset = prune(dist, S, deltas)
    assert Tset and Tset <= S
    assert check_pruned(dist, Tset, deltas)


# --- Markov search ---


def leaf(*values):
    """Chain tree with a single outcome (values listed from the first slot)."""
    t = RankTree(values[0])
    for v in values[1:]:
        t = RankTree(v, ((Fraction(1), t),))
    return t


def test_lex_markov_examples():
    t = leaf(1, 2, 0)
    assert lex_markov_search(t, lambda y: True, Fraction(1)) == (1, 2, 0)
    two = RankTree(1, ((Fraction(1, 2), RankTree(0)), (Fraction(1, 2), RankTree(2))))
    assert lex_markov_search(two, lambda y: True, Fraction(1)) == (2, 1)
    with pytest.raises(PreconditionViolated):
        lex_markov_search(two, lambda y: y == (2, 1), Fraction(3, 4))


@st.composite
def trees(draw, depth=3):
    def build(k):
        v = draw(st.integers(0, 2))
        if k == 1:
            return RankTree(v)
        m = draw(st.integers(1, 3))
        ws = draw(st.lists(st.integers(1, 5), min_size=m, max_size=m))
        tot = sum(ws)
        return RankTree(v, tuple((Fraction(w, tot), build(k - 1)) for w in ws))

    return build(depth)


@given(trees(), st.integers(0, 2**16))
def test_lex_markov_postcondition(tree, seed):
    paths = tree_paths(tree)
    ys = sorted({y for _, _, y in paths})
    rng = np.random.default_rng(seed)
    A = {y for y in ys if rng.random() < 0.6} or {ys[0]}
    mass = sum((pr for _, pr, y in paths if y in A), Fraction(0))
    eps = mass * Fraction(int(rng.integers(1, 11)), 10)
    r = lex_markov_search(tree, lambda y: y in A, eps)
    assert r in A
    assert any(y == r and pr > 0 for _, pr, y in paths)
    assert tree_leq(tree, r, eps / 2)


# --- constants ---


def test_constants():
    assert c_prime(2) == 2 and c_const(2) == 16
    assert c_prime(3) == Fraction(8, 8) and c_const(3) == 32
    assert c_prime(4) == Fraction(64, 81)


# --- end-to-end pipeline ---


def check_report(T, rep, eps=1):
    F, n, d = T.field, T.n, T.d
    if not rep.stable:
        assert rep.p is None and not rep.field_ok
        return
    p = np.array(rep.p)
    r = tuple(rep.r)
    assert not eval_tensor(T, p).any()
    assert local_rank(T, p) == r == alg_local_rank(T, p)
    assert rep.norm == norm(r)
    assert ar_leq(Fraction(rep.norm) / (2**d - 1 + Fraction(eps)), rep.z_size, F.q, n * d)


def test_pipeline_trivial_cases(rng):
    T = Tensor.zero(F3, 2, 2)
    rep = lr_ar_pipeline(T)
    assert rep.stable and rep.norm == 0 and rep.p == [[0, 0], [0, 0]]
    M = np.array([[1, 2], [0, 0]])
    rep = lr_ar_pipeline(Tensor.from_matrix(F3, M))
    assert rep.stable and rep.r == (1,)
    with pytest.raises(ValueError):
        lr_ar_pipeline(T, eps=0)


def test_pipeline_large_field():
    rng = np.random.default_rng(11)
    F = make_field(37)
    for _ in range(3):
        T = planted_tensor(F, 2, 2, 1, rng)
        rep = lr_ar_pipeline(T)
        assert rep.field_ok and rep.stable
        check_report(T, rep)
        # stages record the search path, each candidate in order
        idx = [s["index"] for s in rep.stages if s["stage"] == "candidate"]
        assert idx == list(range(len(idx)))


def test_pipeline_small_fields(rng):
    for F, n, d in [(F2, 2, 2), (F3, 2, 2), (F2, 2, 3), (F5, 2, 2)]:
        for _ in range(4):
            T = random_tensor(F, n, d, rng)
            try:
                rep = lr_ar_pipeline(T)
            except PipelineFailed:
                assert not field_condition(F.q, zero_set_size(T), n * d, d, 1)
                continue
            check_report(T, rep)


def test_field_condition():
    assert field_condition(2, 1, 3, 1, 1)
    # d = 2 needs q eps >= 16 (1 + AR), impossible below q = 16
    for z in range(1, 7**4 + 1, 97):
        assert not field_condition(7, z, 4, 2, 1)
    assert field_condition(37, 37**4, 4, 2, 1)
    assert field_condition(37, 37**3, 4, 2, 1)  # 16 * 2 <= 37
    assert not field_condition(37, 37**2, 4, 2, 1)  # 16 * 3 > 37
    assert field_condition(37, 37**3, 4, 2, Fraction(1, 2)) is False
    assert field_condition(32, 32**4, 4, 2, Fraction(1, 2))
