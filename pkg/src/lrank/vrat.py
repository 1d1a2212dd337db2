"""Polynomial maps in a vector variable with array-valued coefficients.

A :class:`VPoly` is a finite sum of monomials v^e times coefficient arrays of
a fixed shape.  :class:`VRat` pairs a numerator with a scalar denominator and
never cancels common factors.  :class:`DecompFormula` is a list of
form-times-map terms over a shared denominator, closed under the product-rule
derivative.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field as dc_field
from itertools import permutations, product

import numpy as np

from . import caps
from .errors import DegreeCapExceeded, ShapeMismatch
from .field import FieldSpec

Exps = tuple[int, ...]


def _perm_sign(perm) -> int:
    sign = 1
    seen = [False] * len(perm)
    for i in range(len(perm)):
        if seen[i]:
            continue
        j, length = i, 0
        while not seen[j]:
            seen[j] = True
            j = perm[j]
            length += 1
        if length % 2 == 0:
            sign = -sign
    return sign


class VPoly:
    """sum over exponent vectors e of coeffs[e] * prod_i v_i^e_i."""

    __slots__ = ("field", "nvars", "shape", "terms")

    def __init__(self, field: FieldSpec, nvars: int, shape: tuple[int, ...], terms=None):
        self.field = field
        self.nvars = int(nvars)
        self.shape = tuple(shape)
        self.terms: dict[Exps, np.ndarray] = {}
        cap = caps.get("degree")
        for e, c in (terms or {}).items():
            e = tuple(int(k) for k in e)
            if len(e) != self.nvars:
                raise ShapeMismatch("exponent vector has the wrong length")
            if sum(e) > cap:
                raise DegreeCapExceeded(f"degree {sum(e)} exceeds cap {cap}")
            c = np.asarray(c, dtype=np.int64)
            if c.shape != self.shape:
                raise ShapeMismatch(f"coefficient shape {c.shape} differs from {self.shape}")
            if c.any():
                self.terms[e] = c

    # --- constructors ---

    @classmethod
    def zero(cls, F: FieldSpec, nvars: int, shape=()) -> "VPoly":
        return cls(F, nvars, shape)

    @classmethod
    def const(cls, F: FieldSpec, nvars: int, value) -> "VPoly":
        value = np.asarray(value, dtype=np.int64)
        return cls(F, nvars, value.shape, {(0,) * nvars: value})

    @classmethod
    def var(cls, F: FieldSpec, nvars: int, i: int) -> "VPoly":
        e = [0] * nvars
        e[i] = 1
        return cls(F, nvars, (), {tuple(e): np.int64(1)})

    @classmethod
    def linear(cls, F: FieldSpec, nvars: int, arr, variables) -> "VPoly":
        """v -> sum_k arr[..., k] * v_{variables[k]}; the last axis of arr is consumed."""
        arr = np.asarray(arr, dtype=np.int64)
        terms = {}
        for k, i in enumerate(variables):
            e = [0] * nvars
            e[i] = 1
            terms[tuple(e)] = arr[..., k]
        return cls(F, nvars, arr.shape[:-1], terms)

    # --- basics ---

    def _new(self, shape, terms) -> "VPoly":
        return VPoly(self.field, self.nvars, shape, terms)

    def monomials(self) -> list[Exps]:
        """Exponent vectors in graded lexicographic order."""
        return sorted(self.terms, key=lambda e: (sum(e), e))

    def degree(self) -> int:
        return max((sum(e) for e in self.terms), default=-1)

    def is_zero(self) -> bool:
        return not self.terms

    def constant(self) -> np.ndarray:
        return self.terms.get((0,) * self.nvars, np.zeros(self.shape, dtype=np.int64))

    def _check(self, other: "VPoly") -> None:
        if other.field != self.field or other.nvars != self.nvars:
            raise ShapeMismatch("polynomials live in different rings")

    def __add__(self, other: "VPoly") -> "VPoly":
        self._check(other)
        if other.shape != self.shape:
            raise ShapeMismatch(f"cannot add shapes {self.shape} and {other.shape}")
        terms = dict(self.terms)
        for e, c in other.terms.items():
            terms[e] = self.field.add(terms[e], c) if e in terms else c
        return self._new(self.shape, terms)

    def __neg__(self) -> "VPoly":
        return self._new(self.shape, {e: self.field.neg(c) for e, c in self.terms.items()})

    def __sub__(self, other: "VPoly") -> "VPoly":
        return self + (-other)

    def scale(self, c: int) -> "VPoly":
        return self._new(self.shape, {e: self.field.mul(v, c) for e, v in self.terms.items()})

    def equals(self, other: "VPoly") -> bool:
        if self.shape != other.shape or self.terms.keys() != other.terms.keys():
            return False
        return all(np.array_equal(c, other.terms[e]) for e, c in self.terms.items())

    def map_coeffs(self, fn, shape=None) -> "VPoly":
        """Apply a linear function to every coefficient array."""
        out = {e: fn(c) for e, c in self.terms.items()}
        if shape is None:
            shape = np.shape(next(iter(out.values()))) if out else fn(np.zeros(self.shape, np.int64)).shape
        return self._new(shape, out)

    def __getitem__(self, idx) -> "VPoly":
        return self.map_coeffs(lambda c: np.asarray(c)[idx], np.zeros(self.shape)[idx].shape)

    def transpose(self, axes) -> "VPoly":
        return self.map_coeffs(lambda c: np.transpose(c, axes), tuple(self.shape[a] for a in axes))

    def reshape(self, shape) -> "VPoly":
        return self.map_coeffs(lambda c: np.reshape(c, shape), tuple(shape))

    # --- products ---

    def _combine(self, other: "VPoly", op, shape) -> "VPoly":
        self._check(other)
        cap = caps.get("degree")
        out: dict[Exps, np.ndarray] = {}
        F = self.field
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                if sum(e) > cap:
                    raise DegreeCapExceeded(f"degree {sum(e)} exceeds cap {cap}")
                c = op(c1, c2)
                out[e] = F.add(out[e], c) if e in out else c
        return self._new(shape, out)

    def outer(self, other: "VPoly") -> "VPoly":
        F = self.field
        nd = len(other.shape)
        return self._combine(
            other,
            lambda a, b: F.mul(np.reshape(a, np.shape(a) + (1,) * nd), b),
            self.shape + other.shape,
        )

    def __mul__(self, other: "VPoly") -> "VPoly":
        """Product with a scalar-valued polynomial on either side."""
        if self.shape == ():
            return other._combine_left(self)
        if other.shape != ():
            raise ShapeMismatch("use outer() for two array-valued polynomials")
        return self._combine(other, self.field.mul, self.shape)

    def _combine_left(self, scalar: "VPoly") -> "VPoly":
        return scalar._combine(self, lambda a, b: self.field.mul(b, a), self.shape)

    def tensordot(self, other: "VPoly", axes) -> "VPoly":
        F = self.field
        probe = np.tensordot(np.zeros(self.shape), np.zeros(other.shape), axes=axes)
        return self._combine(other, lambda a, b: F.tensordot(a, b, axes), probe.shape)

    def matmul(self, other: "VPoly") -> "VPoly":
        if len(self.shape) != 2:
            raise ShapeMismatch("matmul needs a matrix on the left")
        axes = ([1], [0])
        return self.tensordot(other, axes)

    # --- evaluation and calculus ---

    def eval(self, v) -> np.ndarray:
        v = np.asarray(v, dtype=np.int64)
        if v.shape != (self.nvars,):
            raise ShapeMismatch("evaluation point has the wrong length")
        F = self.field
        acc = np.zeros(self.shape, dtype=np.int64)
        for e, c in self.terms.items():
            w = 1
            for i, k in enumerate(e):
                if k:
                    w = F.mul(w, F.pow(int(v[i]), k))
            acc = F.add(acc, F.mul(c, w))
        return acc

    def substitute(self, values: dict[int, int]) -> "VPoly":
        """Fix some variables to field constants; the variable count is unchanged."""
        F = self.field
        out: dict[Exps, np.ndarray] = {}
        for e, c in self.terms.items():
            w = 1
            e2 = list(e)
            for i, val in values.items():
                if e[i]:
                    w = F.mul(w, F.pow(int(val), e[i]))
                    e2[i] = 0
            if w == 0:
                continue
            e2 = tuple(e2)
            c2 = F.mul(c, w)
            out[e2] = F.add(out[e2], c2) if e2 in out else c2
        return self._new(self.shape, out)

    def partial(self, i: int) -> "VPoly":
        F = self.field
        out: dict[Exps, np.ndarray] = {}
        for e, c in self.terms.items():
            if e[i] == 0:
                continue
            k = e[i] % F.p
            if k == 0:
                continue
            e2 = list(e)
            e2[i] -= 1
            out[tuple(e2)] = F.mul(c, k)
        return self._new(self.shape, out)

    def grad(self, variables, axis: int | None = None) -> "VPoly":
        """Formal derivative along ``variables``; the new axis is placed at ``axis`` (default last)."""
        variables = list(variables)
        axis = len(self.shape) if axis is None else axis
        shape = self.shape[:axis] + (len(variables),) + self.shape[axis:]
        out: dict[Exps, np.ndarray] = {}
        for k, i in enumerate(variables):
            d = self.partial(i)
            for e, c in d.terms.items():
                if e not in out:
                    out[e] = np.zeros(shape, dtype=np.int64)
                idx = (slice(None),) * axis + (k,)
                out[e][idx] = c
        return self._new(shape, out)

    def truncate(self, blocks) -> "VPoly":
        """Drop monomials of degree above 1 in any block of variables."""
        keep = {
            e: c for e, c in self.terms.items() if all(sum(e[i] for i in b) <= 1 for b in blocks)
        }
        return self._new(self.shape, keep)

    def __repr__(self) -> str:
        return f"VPoly(nvars={self.nvars}, shape={self.shape}, monomials={len(self.terms)})"


def scalar_entries(M: VPoly) -> list[list[VPoly]]:
    rows, cols = M.shape
    return [[M[i, j] for j in range(cols)] for i in range(rows)]


def poly_det(F: FieldSpec, nvars: int, entries: list[list[VPoly]]) -> VPoly:
    """Leibniz expansion; used for minors of size at most a handful."""
    r = len(entries)
    total = VPoly.const(F, nvars, np.int64(1)) if r == 0 else VPoly.zero(F, nvars)
    if r == 0:
        return total
    for perm in permutations(range(r)):
        term = entries[0][perm[0]]
        for i in range(1, r):
            if term.is_zero():
                break
            term = term * entries[i][perm[i]]
        if term.is_zero():
            continue
        total = total + (term if _perm_sign(perm) > 0 else -term)
    return total


def poly_adjugate(F: FieldSpec, nvars: int, entries: list[list[VPoly]]) -> list[list[VPoly]]:
    r = len(entries)
    if r == 1:
        return [[VPoly.const(F, nvars, np.int64(1))]]
    adj = [[None] * r for _ in range(r)]
    for i in range(r):
        for j in range(r):
            minor = [[entries[a][b] for b in range(r) if b != j] for a in range(r) if a != i]
            c = poly_det(F, nvars, minor)
            adj[j][i] = -c if (i + j) % 2 else c
    return adj


def stack(F: FieldSpec, nvars: int, entries, shape) -> VPoly:
    """Assemble a nested list of scalar polynomials into one array-valued polynomial."""
    flat = list(np.array(entries, dtype=object).ravel())
    terms: dict[Exps, np.ndarray] = {}
    size = int(np.prod(shape))
    for k, p in enumerate(flat):
        for e, c in p.terms.items():
            if e not in terms:
                terms[e] = np.zeros(size, dtype=np.int64)
            terms[e][k] = c
    return VPoly(F, nvars, tuple(shape), {e: c.reshape(shape) for e, c in terms.items()})


# --- formal rational maps ---


@dataclass
class VRat:
    num: VPoly
    den: VPoly

    def __post_init__(self):
        if self.den.shape != ():
            raise ShapeMismatch("the denominator must be scalar valued")
        if self.den.field != self.num.field or self.den.nvars != self.num.nvars:
            raise ShapeMismatch("numerator and denominator live in different rings")

    def eval(self, v) -> np.ndarray | None:
        """Value at v, or None where the denominator vanishes."""
        g = int(self.den.eval(v))
        F = self.num.field
        val = self.num.eval(v)
        if g == 0:
            if not np.any(val):
                warnings.warn("numerator and denominator both vanish; every value is equivalent", stacklevel=2)
            return None
        return F.mul(val, F.inv(g))


def vrat_equiv(R: VRat, H: VPoly) -> bool:
    """The polynomial identity num = den * H."""
    if R.num.shape != H.shape:
        raise ShapeMismatch("shapes differ")
    return R.num.equals(R.den * H)


def derivative(R: VRat, variables=None, axis: int | None = None) -> VRat:
    """<g grad F - F (x) grad g // g^2>; the direction axis goes at ``axis`` (default last)."""
    variables = list(range(R.num.nvars)) if variables is None else list(variables)
    F_, g = R.num, R.den
    axis = len(F_.shape) if axis is None else axis
    dg = g.grad(variables)
    left = g * F_.grad(variables, axis)
    right = F_.outer(dg)
    if axis != len(F_.shape):
        k = len(F_.shape)
        perm = list(range(axis)) + [k] + list(range(axis, k))
        right = right.transpose(perm)
    return VRat(left - right, g * g)


def tensor_grad_axis(shape) -> int:
    """Axis for a new last input slot of a tensor-valued map: just before the output."""
    return max(len(shape) - 1, 0)


# --- decomposition formulas ---


@dataclass
class FormulaTerm:
    slots: tuple[int, ...]
    form: VPoly  # shape (n,)*len(slots)
    map: VPoly  # shape (n,)*(order - len(slots)) + (n,)

    def is_zero(self) -> bool:
        return self.form.is_zero() or self.map.is_zero()

    def total(self, order: int) -> VPoly:
        """The order-``order`` tensor-valued polynomial form (x) map in natural slot order."""
        prod = self.form.outer(self.map)
        rest = [k for k in range(order) if k not in self.slots]
        perm = list(self.slots) + rest + [order]
        return prod.transpose(list(np.argsort(perm)))


@dataclass
class DecompFormula:
    order: int
    terms: list[FormulaTerm]
    den: VPoly
    budget: int = dc_field(default=-1)

    def __post_init__(self):
        self.terms = [t for t in self.terms if not t.is_zero()]
        if self.budget < 0:
            self.budget = len(self.terms)
        if len(self.terms) > self.budget:
            raise ValueError("formula exceeds its term budget")

    def numerator(self, n: int) -> VPoly:
        F, nv = self.den.field, self.den.nvars
        acc = VPoly.zero(F, nv, (n,) * (self.order + 1))
        for t in self.terms:
            acc = acc + t.total(self.order)
        return acc

    def as_vrat(self, n: int) -> VRat:
        return VRat(self.numerator(n), self.den)

    def map_polys(self, fn) -> "DecompFormula":
        return DecompFormula(
            self.order,
            [FormulaTerm(t.slots, fn(t.form), fn(t.map)) for t in self.terms],
            fn(self.den),
            self.budget,
        )


def derivative_formula(Fm: DecompFormula, variables) -> DecompFormula:
    """Per-term product rule: P (x) Q over h becomes P (x) (h dQ - Q (x) dh) + (h dP) (x) Q over h^2.

    The derivative direction becomes a new last input slot, numbered ``order``.
    """
    variables = list(variables)
    h = Fm.den
    dh = h.grad(variables)
    new_slot = Fm.order
    terms = []
    for t in Fm.terms:
        mshape = t.map.shape
        ax = tensor_grad_axis(mshape)
        dq = h * t.map.grad(variables, ax)
        qdh = t.map.outer(dh)
        k = len(mshape)
        qdh = qdh.transpose(list(range(ax)) + [k] + list(range(ax, k)))
        terms.append(FormulaTerm(t.slots, t.form, dq - qdh))
        terms.append(FormulaTerm(t.slots + (new_slot,), h * t.form.grad(variables), t.map))
    return DecompFormula(Fm.order + 1, terms, h * h, 2 * Fm.budget)


def random_vpoly(F: FieldSpec, nvars: int, shape, degree: int, rng, density: float = 0.5) -> VPoly:
    """Random VPoly with each monomial of total degree <= ``degree`` present with probability ``density``."""
    shape = tuple(shape)
    terms = {}
    for e in product(range(degree + 1), repeat=nvars):
        if sum(e) <= degree and rng.random() < density:
            terms[e] = rng.integers(0, F.q, size=shape)
    return VPoly(F, nvars, shape, terms)
