"""Explicit partition-rank decompositions from an LR-stable point.

The builder follows the kernel recursion.  At each level the last slice
M = T[p]_d gets a full minor (I, J) and its kernel projection P = g Id - Q; a
kernel vector x with the right lower local rank is pulled back to y with
P y = x, and the slice family v -> T[P v] is decomposed recursively around
v = y.  Differentiating the resulting formula in v and evaluating at y turns
the family identity back into a decomposition of T with at most
2 |inner terms| + rank M terms.

All polynomial bookkeeping is done in shifted variables v = y + t.  In jet
mode every variable block is truncated to degree one, which is exact because
each block is differentiated once and then set to zero.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ChoiceFailure, NotStable, VerificationFailed
from .field import FieldSpec
from .localrank import find_lr_stable_point, is_lr_stable, local_rank
from .matrix import (
    adjugate,
    det,
    find_full_minor,
    kernel_basis,
    projective_reps,
    rank,
    solve,
    submatrix,
)
from .tensor import Decomposition, Tensor, Term, slice_last, verify_decomposition
from .vrat import (
    DecompFormula,
    FormulaTerm,
    VPoly,
    derivative_formula,
    poly_adjugate,
    poly_det,
    scalar_entries,
)


def decompose_matrix(F: FieldSpec, A) -> Decomposition:
    """rank A terms from the rank formula at the first full minor."""
    A = np.asarray(A, dtype=np.int64)
    r = rank(F, A)
    if r == 0:
        return Decomposition(1, [])
    I, J = find_full_minor(F, A, r)
    g = det(F, submatrix(A, I, J))
    right = F.matmul(adjugate(F, submatrix(A, I, J)), A[list(I), :])
    left = F.mul(A[:, list(J)], F.inv(g))
    terms = [Term((0,), right[i], left[:, i]).normalized(F) for i in range(r)]
    return Decomposition(1, [t for t in terms if not t.is_zero()])


@dataclass
class SliceParts:
    """The pieces of the slice formula at one level, before differentiation."""

    inner: DecompFormula  # decomposes v -> T[P v] over den'
    h: VPoly  # g * den'
    q_parts: list[tuple[VPoly, VPoly]]  # (den' * (Q v)_j, T[e_j]) for j in J
    new_vars: list[int]
    minor: tuple[tuple[int, ...], tuple[int, ...]]
    x: np.ndarray
    y: np.ndarray

    def numerator(self, n: int) -> VPoly:
        """den' T[P v] + den' T[Q v] written as one tensor-valued polynomial."""
        acc = self.inner.numerator(n)
        for s, mp in self.q_parts:
            acc = acc + (s * mp)
        return acc


class _Builder:
    def __init__(self, T: Tensor, p: np.ndarray, jet: bool = True):
        self.F = T.field
        self.n = T.n
        self.d = T.d
        self.p = np.asarray(p, dtype=np.int64)
        self.nvars = self.n * (self.d - 1)
        self.blocks = [list(range(k * self.n, (k + 1) * self.n)) for k in range(self.d - 1)]
        self.jet = jet
        self.trace: list[dict] = []

    def trunc(self, poly: VPoly) -> VPoly:
        return poly.truncate(self.blocks) if self.jet else poly

    def const(self, value) -> VPoly:
        return VPoly.const(self.F, self.nvars, value)

    def tensor_at_zero(self, fam: VPoly, k: int) -> Tensor:
        return Tensor(self.F, self.n, k, fam.constant())

    def last_matrix(self, fam: VPoly, k: int) -> VPoly:
        """Polynomial matrix [out, in] of v -> fam(p_1, ..., p_{k-1}, v)."""
        F = self.F
        pts = self.p[: k - 1]

        def fn(c):
            for j in range(k - 1):
                c = F.tensordot(pts[j], c, axes=([0], [0]))
            return c.T

        return fam.map_coeffs(fn, (self.n, self.n))

    def matrix_formula(self, fam: VPoly, r: int) -> DecompFormula:
        A = fam.transpose((1, 0))
        A0 = A.constant()
        pair = find_full_minor(self.F, A0, r)
        if pair is None or rank(self.F, A0) != r:
            raise ChoiceFailure(f"no nonzero {r}-minor in the representative matrix")
        I, J = pair
        self.trace.append({"order": 1, "rank": r, "I": list(I), "J": list(J)})
        E = scalar_entries(A)
        sub = [[E[i][j] for j in J] for i in I]
        g = self.trunc(poly_det(self.F, self.nvars, sub))
        adj = poly_adjugate(self.F, self.nvars, sub) if r else []
        terms = []
        for m in range(r):
            row = VPoly.zero(self.F, self.nvars, (self.n,))
            for l in range(r):
                row = row + self.trunc(adj[m][l] * A[I[l]])
            terms.append(FormulaTerm((0,), row, A[:, J[m]]))
        return DecompFormula(1, terms, g, budget=r)

    def slice_parts(self, fam: VPoly, k: int, r: tuple[int, ...], level: int) -> SliceParts:
        F, n = self.F, self.n
        M = self.last_matrix(fam, k)
        M0 = M.constant()
        rk = r[-1]
        if rank(F, M0) != rk:
            raise ChoiceFailure(f"representative slice has rank {rank(F, M0)}, expected {rk}")
        I, J = find_full_minor(F, M0, rk)
        E = scalar_entries(M)
        sub = [[E[i][j] for j in J] for i in I]
        g = self.trunc(poly_det(F, self.nvars, sub))
        adj = poly_adjugate(F, self.nvars, sub) if rk else []
        q_rows = []
        for m in range(rk):
            row = VPoly.zero(F, self.nvars, (n,))
            for l in range(rk):
                row = row + self.trunc(adj[m][l] * M[I[l]])
            q_rows.append(row)
        Q0 = np.zeros((n, n), dtype=np.int64)
        for m in range(rk):
            Q0[J[m]] = q_rows[m].constant()
        g0 = int(g.constant())
        P0 = F.sub(F.mul(np.eye(n, dtype=np.int64), g0), Q0)

        # a kernel vector whose slice has the required lower local rank
        T0 = self.tensor_at_zero(fam, k)
        target = tuple(r[:-1])
        reps = projective_reps(F, kernel_basis(F, M0))
        candidates = list(reps) if len(reps) else [np.zeros(n, dtype=np.int64)]
        x = None
        for cand in candidates:
            if local_rank(slice_last(T0, cand), self.p[: k - 1]) == target:
                x = np.asarray(cand, dtype=np.int64)
                break
        if x is None:
            raise ChoiceFailure(f"no kernel vector has lower local rank {target}")
        y = solve(F, P0, x)
        if y is None:
            raise ChoiceFailure("kernel vector is outside the image of the projection")
        self.trace.append(
            {"order": k, "rank": rk, "I": list(I), "J": list(J), "x": x.tolist(), "y": y.tolist()}
        )

        new_vars = self.blocks[level]
        v = self.const(y) + VPoly.linear(F, self.nvars, np.eye(n, dtype=np.int64), new_vars)
        # P v = g v - Q v
        qv = [self.trunc(q_rows[m].tensordot(v, ([0], [0]))) for m in range(rk)]
        Qv = [VPoly.zero(F, self.nvars) for _ in range(n)]
        for m in range(rk):
            Qv[J[m]] = qv[m]
        Pv_entries = [self.trunc(g * v[i]) - Qv[i] for i in range(n)]
        Pv = _stack_vector(F, self.nvars, Pv_entries, n)
        red = self.trunc(fam.tensordot(Pv, ([k - 1], [0])))
        inner = self.formula(red, k - 1, target, level + 1)
        den_in = inner.den
        h = self.trunc(g * den_in)
        q_parts = []
        for m in range(rk):
            s = self.trunc(den_in * qv[m])
            mp = fam[(slice(None),) * (k - 1) + (J[m],)]
            q_parts.append((s, mp))
        return SliceParts(inner, h, q_parts, new_vars, (tuple(I), tuple(J)), x, y)

    def formula(self, fam: VPoly, k: int, r: tuple[int, ...], level: int) -> DecompFormula:
        if k == 1:
            return self.matrix_formula(fam, r[0])
        parts = self.slice_parts(fam, k, r, level)
        nv = parts.new_vars
        zero = {i: 0 for i in nv}
        h = parts.h
        lifted = DecompFormula(k - 1, parts.inner.terms, h, parts.inner.budget)
        dF = derivative_formula(lifted, nv)
        dh = h.grad(nv)
        terms = list(dF.terms)
        for s, mp in parts.q_parts:
            form = self.trunc(h * s.grad(nv)) - self.trunc(s * dh)
            terms.append(FormulaTerm((k - 1,), form, mp))
        fix = lambda poly: self.trunc(poly.substitute(zero))
        terms = [FormulaTerm(t.slots, fix(t.form), fix(t.map)) for t in terms]
        return DecompFormula(k, terms, fix(self.trunc(h * h)), 2 * parts.inner.budget + r[-1])


def _stack_vector(F: FieldSpec, nvars: int, entries: list[VPoly], n: int) -> VPoly:
    acc = VPoly.zero(F, nvars, (n,))
    for i, e in enumerate(entries):
        unit = np.zeros(n, dtype=np.int64)
        unit[i] = 1
        acc = acc + e.outer(VPoly.const(F, nvars, unit))
    return acc


def build_decomposition(T: Tensor, p, r=None, trace: list | None = None) -> Decomposition:
    """Run the construction without checking stability or verifying the result."""
    p = np.asarray(p, dtype=np.int64)
    if T.d == 1:
        return decompose_matrix(T.field, T.matrix())
    r = tuple(local_rank(T, p)) if r is None else tuple(r)
    b = _Builder(T, p)
    fam = b.const(T.coeffs)
    Fm = b.formula(fam, T.d, r, 0)
    if trace is not None:
        trace.extend(b.trace)
    F = T.field
    den = int(Fm.den.constant())
    if den == 0:
        raise ChoiceFailure("the formula is not defined at this tensor")
    inv = F.inv(den)
    terms = []
    for t in Fm.terms:
        term = Term(t.slots, t.form.constant(), F.mul(t.map.constant(), inv))
        if not term.is_zero():
            terms.append(term.normalized(F))
    return Decomposition(T.d, terms)


def slice_formula(T: Tensor, p, r=None) -> SliceParts:
    """Top-level slice formula with full (untruncated) polynomials in v - y."""
    p = np.asarray(p, dtype=np.int64)
    r = tuple(local_rank(T, p)) if r is None else tuple(r)
    b = _Builder(T, p, jet=False)
    return b.slice_parts(b.const(T.coeffs), T.d, r, 0)


def decompose(T: Tensor, p, trace: list | None = None) -> Decomposition:
    """A verified decomposition with at most norm(LR_p(T)) terms; p must be LR-stable."""
    p = np.asarray(p, dtype=np.int64)
    if not is_lr_stable(T, p):
        raise NotStable("the point is not LR-stable for this tensor")
    D = build_decomposition(T, p, trace=trace)
    ok, _ = verify_decomposition(T, D)
    if not ok:
        raise VerificationFailed("constructed decomposition does not sum to the tensor")
    return D


def pr_upper_bound(T: Tensor, budget: int | None = None, rng=None, mode: str = "exhaustive"):
    """(bound, witness, p) from a stable-point search followed by decompose, or None."""
    found = find_lr_stable_point(T, mode=mode, budget=budget, rng=rng)
    if found is None:
        return None
    p, _ = found
    D = decompose(T, p)
    return len(D), D, p
