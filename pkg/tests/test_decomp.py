from __future__ import annotations

from fractions import Fraction

import numpy as np
import pytest

from lrank.decomp import build_decomposition, decompose, decompose_matrix, pr_upper_bound, slice_formula
from lrank.errors import NotStable
from lrank.field import make_field
from lrank.localrank import find_lr_stable_point, is_lr_stable, local_rank, norm
from lrank.matrix import random_matrix_of_rank, rank
from lrank.sampler import ar_leq, field_condition
from lrank.tensor import (
    Tensor,
    brute_force_pr,
    planted_tensor,
    random_tensor,
    slice_last,
    verify_decomposition,
    zero_set_size,
)

from examples_lib import matrix_space_gap, three_slot_example, three_slot_point

F2, F3, F5 = make_field(2), make_field(3), make_field(5)


def test_decompose_matrix_examples(rng):
    assert len(decompose_matrix(F3, np.zeros((3, 3), dtype=np.int64))) == 0
    D = decompose_matrix(F3, np.diag([1, 1, 0]))
    assert len(D) == 2
    assert verify_decomposition(Tensor.from_matrix(F3, np.diag([1, 1, 0])), D)[0]
    for s in range(5):
        A = random_matrix_of_rank(F5, 4, 4, s, rng)
        D = decompose_matrix(F5, A)
        assert len(D) == rank(F5, A)
        assert verify_decomposition(Tensor.from_matrix(F5, A), D)[0]


def test_decompose_order_one_is_matrix_case(rng):
    A = rng.integers(0, 5, size=(3, 3))
    T = Tensor.from_matrix(F5, A)
    D = decompose(T, np.zeros((1, 3), dtype=np.int64))
    assert len(D) == rank(F5, A)
    assert [t.form.tolist() for t in D.terms] == [t.form.tolist() for t in decompose_matrix(F5, A).terms]


def test_terms_are_normalized(rng):
    T = random_tensor(F5, 2, 2, rng)
    p, _ = find_lr_stable_point(T)
    for t in decompose(T, p).terms:
        flat = t.form.ravel()
        assert flat[np.nonzero(flat)[0][0]] == 1


def test_two_slot_budget(rng):
    # at a stable point with slice ranks (r1, r2) at most 2 r1 + r2 terms are emitted
    for F in (F3, F5):
        for _ in range(15):
            T = random_tensor(F, 3, 2, rng)
            p, r = find_lr_stable_point(T)
            D = decompose(T, p)
            assert verify_decomposition(T, D)[0]
            assert len(D) <= 2 * r[0] + r[1]


@pytest.mark.parametrize("q,n,d", [(3, 2, 3), (5, 2, 3), (3, 3, 2), (2, 2, 3)])
def test_random_budget(q, n, d):
    F = make_field(q)
    rng = np.random.default_rng(q * 100 + n * 10 + d)
    for _ in range(6):
        T = random_tensor(F, n, d, rng)
        found = find_lr_stable_point(T)
        if found is None:
            continue
        p, r = found
        D = decompose(T, p)
        ok, nterms = verify_decomposition(T, D)
        assert ok and nterms <= norm(r)


def test_worked_example_decomposes():
    for F in (F2, F3):
        T = three_slot_example(F, 3)
        p = three_slot_point(3)
        D = decompose(T, p)
        assert verify_decomposition(T, D)[0] and len(D) <= norm((0, 1, 0))


def test_unstable_point_refused():
    T = matrix_space_gap(F2)
    p = np.zeros((2, 3), dtype=np.int64)
    assert not is_lr_stable(T, p)
    with pytest.raises(NotStable):
        decompose(T, p)
    try:
        D = build_decomposition(T, p)
    except Exception:
        return
    assert not verify_decomposition(T, D)[0]


def test_oracle_dominance_exhaustive_gf2():
    for flat in range(2**8):
        coeffs = np.array([(flat >> k) & 1 for k in range(8)]).reshape(2, 2, 2)
        T = Tensor(F2, 2, 2, coeffs)
        bound, D, p = pr_upper_bound(T)
        assert verify_decomposition(T, D) == (True, bound)
        assert bound <= norm(local_rank(T, p))
        assert brute_force_pr(T, 8) <= bound
    for d in (1,):
        for flat in range(2**4):
            T = Tensor(F2, 2, d, np.array([(flat >> k) & 1 for k in range(4)]).reshape(2, 2))
            bound, _, _ = pr_upper_bound(T)
            assert bound == brute_force_pr(T, 4)


def test_pr_upper_bound_examples(rng):
    bound, D, p = pr_upper_bound(Tensor.zero(F3, 2, 2))
    assert bound == 0 and len(D) == 0 and not p.any()
    hits = 0
    for _ in range(20):
        T = planted_tensor(F2, 2, 2, 1, rng)
        if T.is_zero():
            continue
        bound, D, _ = pr_upper_bound(T)
        assert bound >= 1 and verify_decomposition(T, D)[0]
        hits += bound == 1
    assert hits > 0


def test_pr_upper_bound_against_analytic_rank(rng):
    # the size condition q >= 16 (AR + 1) holds over GF(37) for AR <= 1
    F = make_field(37)
    for _ in range(6):
        T = planted_tensor(F, 2, 2, 1, rng)
        z = zero_set_size(T)
        assert field_condition(37, z, 4, 2, Fraction(1))
        bound, D, _ = pr_upper_bound(T)
        assert verify_decomposition(T, D)[0]
        # bound <= 4 AR  <=>  bound / 4 <= AR, decided exactly from |Z|
        assert ar_leq(Fraction(bound, 4), z, 37, 4)


def test_slice_formula_certificate(rng):
    for F, n, d in [(F3, 2, 2), (F5, 2, 3), (F3, 3, 2)]:
        for _ in range(5):
            T = random_tensor(F, n, d, rng)
            p, _ = find_lr_stable_point(T)
            parts = slice_formula(T, p)
            num = parts.numerator(n)
            nv = parts.h.nvars
            for _ in range(10):
                t = np.zeros(nv, dtype=np.int64)
                t[parts.new_vars] = rng.integers(0, F.q, size=n)
                y = F.add(parts.y, t[parts.new_vars])
                want = F.mul(slice_last(T, y).coeffs, int(parts.h.eval(t)))
                assert np.array_equal(num.eval(t), want)
