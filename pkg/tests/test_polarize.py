from __future__ import annotations

import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from lrank.errors import CharTooSmall, PreconditionViolated
from lrank.field import make_field
from lrank.matrix import all_vectors
from lrank.polarize import (
    PolyFn,
    cauchy_schwarz_check,
    equidistribution_report,
    extend_tensor,
    form_value,
    gowers_Uk,
    polar_by_differences,
    polarize,
    poly_rank_upper,
    pr_extension_experiment,
    random_poly,
    witness_correlation,
)
from lrank.tensor import Tensor, brute_force_pr, planted_tensor, random_tensor, zero_set_size

F2, F3, F5, F7 = make_field(2), make_field(3), make_field(5), make_field(7)


def mono(F, n, *terms):
    """PolyFn from (coeff, exponent tuple) pairs."""
    return PolyFn(F, n, {tuple(e): c for c, e in terms})


def naive_eval(P, x):
    """P at a single point by plain integer arithmetic (prime fields)."""
    q = P.field.q
    return sum(c * math.prod(int(v) ** e for v, e in zip(x, exps)) for exps, c in P.monomials.items()) % q


def points(q, n):
    return [np.array(v) for v in itertools.product(range(q), repeat=n)]


# --- polarization ---


def test_polarize_examples():
    P = mono(F5, 2, (1, (1, 1)))
    T = polarize(P)
    assert T.d == 1 and np.array_equal(T.coeffs, [[0, 1], [1, 0]])
    for a in points(5, 2):
        for b in points(5, 2):
            val = form_value(T, [a[None], b[None]])[0]
            assert val == (a[0] * b[1] + a[1] * b[0]) % 5
    L = mono(F5, 3, (2, (1, 0, 0)), (3, (0, 0, 1)))
    assert not polarize(L, 2).coeffs.any()
    P3 = mono(F5, 3, (1, (1, 1, 1)))
    T3 = polarize(P3)
    for x in points(5, 3):
        diag = form_value(T3, [x[None]] * 3)[0]
        assert diag == (6 * x[0] * x[1] * x[2]) % 5
    with pytest.raises(CharTooSmall):
        polarize(mono(F2, 2, (1, (1, 1))))
    with pytest.raises(CharTooSmall):
        polarize(mono(F3, 3, (1, (1, 1, 1))))
    with pytest.raises(PreconditionViolated):
        polarize(mono(F5, 2, (1, (2, 1))), 2)


@pytest.mark.parametrize("F", [F5, F7])
@pytest.mark.parametrize("n,k", [(1, 2), (2, 2), (1, 3), (2, 3)])
def test_polarization_identity_exhaustive(F, n, k):
    rng = np.random.default_rng(100 * F.q + 10 * n + k)
    fact_inv = F.inv(math.factorial(k) % F.q)
    pts = all_vectors(F.q, n)
    for _ in range(5):
        P = random_poly(F, n, k, rng)
        T = polarize(P, k)
        Pk = P.homogeneous_part(k)
        diag = form_value(T, [pts] * k)
        assert np.array_equal(F.mul(fact_inv, diag), Pk.eval(pts))
        for x in pts:
            assert Pk.eval(x[None])[0] == naive_eval(Pk, x)
        # the form equals the k-th difference at every argument tuple and two base points
        grid = list(itertools.product(range(len(pts)), repeat=k))
        xs = [pts[[g[i] for g in grid]] for i in range(k)]
        want = form_value(T, xs)
        for base in (0, len(pts) - 1):
            y = np.repeat(pts[base][None], len(grid), axis=0)
            assert np.array_equal(polar_by_differences(P, xs, y), want)
        # symmetry under every slot permutation
        for perm in itertools.permutations(range(k)):
            assert np.array_equal(np.transpose(T.coeffs, perm), T.coeffs)


@given(st.integers(0, 2**32), st.sampled_from([F5, F7]))
def test_polarization_multilinear(seed, F):
    rng = np.random.default_rng(seed)
    n, k = 2, int(rng.integers(2, 4))
    T = polarize(random_poly(F, n, k, rng), k)
    xs = [rng.integers(0, F.q, size=(1, n)) for _ in range(k)]
    i = int(rng.integers(0, k))
    y = rng.integers(0, F.q, size=(1, n))
    c = int(rng.integers(0, F.q))
    lhs_args = list(xs)
    lhs_args[i] = F.add(F.mul(c, xs[i]), y)
    rhs_args = list(xs)
    rhs_args[i] = y
    lhs = form_value(T, lhs_args)
    rhs = F.add(F.mul(c, form_value(T, xs)), form_value(T, rhs_args))
    assert np.array_equal(lhs, rhs)


# --- rank of polynomials ---


def test_poly_rank_upper_examples():
    assert poly_rank_upper(PolyFn.constant(F5, 2, 3)).bound == 0
    rng = np.random.default_rng(3)
    l1 = PolyFn.linear(F5, [1, 2])
    l2 = PolyFn.linear(F5, [3, 1])
    P = l1 * l2
    res = poly_rank_upper(P, rng=rng)
    # nonzero quadratic form, so rank(P) >= 1
    assert res.bound == 1 and res.check(P)
    assert res.pr_bound <= 2
    with pytest.raises(CharTooSmall):
        poly_rank_upper(mono(F2, 2, (1, (1, 1))))
    with pytest.raises(PreconditionViolated):
        poly_rank_upper(l1)


def test_poly_rank_upper_products(rng):
    for F, n in [(F5, 3), (F7, 2), (F5, 2)]:
        for _ in range(5):
            l1 = PolyFn.linear(F, rng.integers(0, F.q, size=n))
            l2 = PolyFn.linear(F, rng.integers(0, F.q, size=n))
            P = l1 * l2
            if P.is_zero():
                continue
            res = poly_rank_upper(P, rng=rng)
            assert res is not None and res.check(P)
            assert res.bound == 1 and res.pr_bound <= 2


def test_poly_rank_upper_cubic():
    rng = np.random.default_rng(4)
    P = mono(F5, 3, (1, (1, 1, 1)))
    res = poly_rank_upper(P, rng=rng)
    assert res is not None and res.check(P)
    assert 1 <= res.bound <= res.pr_bound


# --- equidistribution ---


def test_equidist_examples():
    rep = equidistribution_report([PolyFn.variable(F3, 2, 0)])
    assert rep.dev == 0 and rep.pr_zero == Fraction(1, 3)
    rep = equidistribution_report([mono(F2, 2, (1, (1, 1)))])
    assert rep.pr_zero == Fraction(3, 4) and rep.dev == Fraction(1, 4)
    # E (-1)^(x1 x2) = 1/2
    assert rep.maxchar_sq == Fraction(1, 4) and rep.holds
    with pytest.raises(ValueError):
        equidistribution_report([])


@pytest.mark.parametrize("F,n,m", [(F3, 3, 2), (F2, 3, 2), (F2, 3, 3), (F3, 2, 1), (F5, 2, 2)])
def test_equidist_against_enumeration(F, n, m):
    rng = np.random.default_rng(7 * n + m + F.q)
    for _ in range(5):
        Ps = [random_poly(F, n, 2, rng) for _ in range(m)]
        rep = equidistribution_report(Ps)
        zeros = sum(all(naive_eval(P, x) == 0 for P in Ps) for x in points(F.q, n))
        assert rep.pr_zero == Fraction(zeros, F.q**n)
        assert rep.dev == abs(rep.pr_zero - Fraction(1, F.q**m))
        assert abs(rep.fourier_pr - float(rep.pr_zero)) < 1e-9
        assert rep.holds
        if F.p in (2, 3):
            assert abs(float(rep.maxchar_sq) - rep.maxchar**2) < 1e-9
            assert rep.dev**2 <= rep.maxchar_sq


# --- Gowers norms ---


def test_gowers_examples():
    assert gowers_Uk(PolyFn(F3, 2), 2) == 1.0
    assert gowers_Uk(PolyFn(F3, 2), 2, route="direct") == pytest.approx(1.0)
    P = mono(F3, 2, (1, (1, 1)))
    # polar form is nondegenerate on F_3^2, so AR = 2 and the 4th power of the norm is 3^-2
    assert gowers_Uk(P, 2) == pytest.approx(3**-0.5, abs=1e-12)
    assert gowers_Uk(P, 2, route="direct") == pytest.approx(3**-0.5, abs=1e-9)
    low = mono(F5, 2, (1, (1, 0)), (2, (0, 1)))
    assert gowers_Uk(low, 2) == 1.0 and gowers_Uk(low, 2, route="direct") == pytest.approx(1.0)
    with pytest.raises(ValueError):
        gowers_Uk(P, 2, route="other")
    with pytest.raises(PreconditionViolated):
        gowers_Uk(PolyFn(make_field(2, 2), 1), 2)


@pytest.mark.parametrize("F,n,k", [(F3, 2, 2), (F5, 2, 2), (F5, 1, 3), (F3, 1, 2)])
def test_gowers_routes_agree(F, n, k):
    rng = np.random.default_rng(F.q + n + k)
    for _ in range(4):
        P = random_poly(F, n, k, rng)
        assert abs(gowers_Uk(P, k) - gowers_Uk(P, k, route="direct")) < 1e-6


# --- Cauchy-Schwarz and the witness surrogate ---


@pytest.mark.parametrize("F", [F5, F7])
def test_cauchy_schwarz(F):
    rng = np.random.default_rng(F.q)
    for n, k in [(1, 2), (2, 2), (2, 3)]:
        for _ in range(5):
            P = random_poly(F, n, k, rng)
            out = cauchy_schwarz_check(P, k)
            assert out["holds"]
            assert out["lhs"] <= out["rhs"] + 1e-9
            assert out["Z_size"] == zero_set_size(polarize(P, k))


def test_witness_correlation():
    rng = np.random.default_rng(9)
    for P in [mono(F5, 2, (1, (1, 1))), PolyFn.linear(F5, [1, 1]) * PolyFn.linear(F5, [1, 4]) + PolyFn.linear(F5, [0, 1])]:
        res = poly_rank_upper(P, rng=rng)
        s = 2 * len(res.products)
        assert witness_correlation(P, res.products) >= F5.p**-s - 1e-12
    # with the exact factors P_k itself is cancelled
    f, g = PolyFn.linear(F5, [1, 2]), PolyFn.linear(F5, [0, 1])
    assert witness_correlation(f * g, [(f, g)]) >= 5**-2


# --- field extension ---


def test_extend_tensor_identity_and_embedding(rng):
    T = random_tensor(F3, 2, 2, rng)
    assert extend_tensor(T, 1) is T
    K = extend_tensor(T, 2)
    assert K.field.q == 9 and np.array_equal(K.coeffs, T.coeffs)
    assert zero_set_size(K) >= zero_set_size(T)
    with pytest.raises(ValueError):
        extend_tensor(T, 0)
    rep = pr_extension_experiment(T, 1, rng=rng, oracle=False)
    assert rep.z_base == rep.z_ext and rep.ar_base == rep.ar_ext and rep.pr_upper_base == rep.pr_upper_ext


def test_extension_oracle_exhaustive_gf2():
    rng = np.random.default_rng(0)
    for c in itertools.product(range(2), repeat=8):
        T = Tensor(F2, 2, 2, np.array(c).reshape(2, 2, 2))
        rep = pr_extension_experiment(T, 2, rng=rng)
        assert rep.oracle_holds and rep.pr_base <= 2 * rep.pr_ext
        assert rep.pr_base == brute_force_pr(T, 4)


def test_extension_planted_pr1():
    rng = np.random.default_rng(1)
    for _ in range(5):
        T = planted_tensor(F2, 2, 2, 1, rng)
        if not T.coeffs.any():
            continue
        rep = pr_extension_experiment(T, 2, rng=rng)
        assert rep.pr_base == rep.pr_ext == 1
    # the exact table over GF(9) is too large, so compare the upper bounds
    for _ in range(5):
        T = planted_tensor(F3, 2, 2, 1, rng)
        if not T.coeffs.any():
            continue
        rep = pr_extension_experiment(T, 2, rng=rng, oracle=False)
        assert rep.pr_base is None
        # a nonzero tensor needs at least one term over either field
        for ub in (rep.pr_upper_base, rep.pr_upper_ext):
            assert ub is None or ub >= 1


# --- serialization ---


@given(st.integers(0, 2**32), st.sampled_from([F5, make_field(2, 3), make_field(3, 2)]))
def test_polyfn_roundtrip(seed, F):
    rng = np.random.default_rng(seed)
    P = random_poly(F, 3, 2, rng, density=0.5)
    Q = PolyFn.from_dict(P.to_dict())
    assert Q.equals(P) and Q.field == F and Q.n == P.n
