"""Exact arithmetic in GF(p^m).

Elements are encoded as integers ``c0 + c1*p + ... + c_{m-1}*p^(m-1)`` where
``c`` is the coefficient vector modulo the field's modulus.  This encoding is
the canonical enumeration order: coefficient vectors in lexicographic order,
zero first, so ``GF(4)`` enumerates as ``[0, 1, x, x+1]``.

The :class:`FieldSpec` methods operate elementwise on integers or numpy
integer arrays of encoded elements; :class:`FieldElem` is the explicit
coefficient-vector form used at API boundaries.
"""

from __future__ import annotations

import cmath
import itertools
from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np

from . import caps
from .errors import DivisionByZero, NonPrime, NotASubfield

_SMALL_TABLE = 1024  # build full q x q add/mul tables up to this order


def is_prime(p: int) -> bool:
    if p < 2:
        return False
    if p < 4:
        return True
    if p % 2 == 0:
        return False
    f = 3
    while f * f <= p:
        if p % f == 0:
            return False
        f += 2
    return True


def _prime_factors(n: int) -> list[int]:
    out = []
    f = 2
    while f * f <= n:
        if n % f == 0:
            out.append(f)
            while n % f == 0:
                n //= f
        f += 1
    if n > 1:
        out.append(n)
    return out


# --- scalar polynomial helpers over F_p (coefficient lists, constant first) ---


def _poly_trim(a: list[int]) -> list[int]:
    while a and a[-1] == 0:
        a.pop()
    return a


def _poly_mod(a: list[int], b: list[int], p: int) -> list[int]:
    """Remainder of a by monic-or-not b over F_p."""
    a = _poly_trim(list(a))
    b = _poly_trim(list(b))
    inv_lead = pow(b[-1], p - 2, p) if p > 2 else 1
    while len(a) >= len(b):
        c = a[-1] * inv_lead % p
        shift = len(a) - len(b)
        for i, bi in enumerate(b):
            a[shift + i] = (a[shift + i] - c * bi) % p
        _poly_trim(a)
    return a


def _is_irreducible(modulus: tuple[int, ...], p: int) -> bool:
    """Trial division by every monic polynomial of degree 1..m//2."""
    m = len(modulus) - 1
    for deg in range(1, m // 2 + 1):
        for low in itertools.product(range(p), repeat=deg):
            if not _poly_mod(list(modulus), list(low) + [1], p):
                return False
    return True


@dataclass(frozen=True)
class FieldElem:
    """An element of GF(p^m) as its coefficient vector (constant term first)."""

    coeffs: tuple[int, ...]

    def __repr__(self) -> str:
        return f"FieldElem({list(self.coeffs)})"


@dataclass(frozen=True)
class FieldSpec:
    p: int
    m: int
    modulus: tuple[int, ...]

    def __post_init__(self):
        if not is_prime(self.p):
            raise NonPrime(f"{self.p} is not prime")
        if self.m < 1 or len(self.modulus) != self.m + 1:
            raise ValueError("modulus must have m+1 coefficients")
        if self.modulus[-1] != 1:
            raise ValueError("modulus must be monic")
        if any(not 0 <= c < self.p for c in self.modulus):
            raise ValueError("modulus coefficients must lie in [0, p)")
        if self.m > 1 and not _is_irreducible(self.modulus, self.p):
            raise ValueError(f"modulus {self.modulus} is reducible over F_{self.p}")

    def __repr__(self) -> str:
        return f"GF({self.p}^{self.m})" if self.m > 1 else f"GF({self.p})"

    @property
    def q(self) -> int:
        return self.p**self.m

    @property
    def is_prime_field(self) -> bool:
        return self.m == 1

    # --- conversions ---

    def elem(self, a: int) -> FieldElem:
        a = int(a)
        return FieldElem(tuple((a // self.p**i) % self.p for i in range(self.m)))

    def index(self, e: FieldElem | int) -> int:
        if isinstance(e, FieldElem):
            if len(e.coeffs) != self.m:
                raise ValueError("coefficient vector has the wrong length")
            return sum(int(c) % self.p * self.p**i for i, c in enumerate(e.coeffs))
        a = int(e)
        if not 0 <= a < self.q:
            raise ValueError(f"{a} is not an element index of {self}")
        return a

    def digits(self, a) -> np.ndarray:
        """Coefficient digits of encoded elements, new trailing axis of length m."""
        a = np.asarray(a, dtype=np.int64)
        return (a[..., None] // self._place) % self.p

    def from_digits(self, dg) -> np.ndarray:
        dg = np.asarray(dg, dtype=np.int64) % self.p
        return dg @ self._place

    @cached_property
    def _place(self) -> np.ndarray:
        return np.array([self.p**i for i in range(self.m)], dtype=np.int64)

    # --- scalar polynomial multiplication used to build tables ---

    def _mul_scalar(self, a: int, b: int) -> int:
        p, m = self.p, self.m
        da = [(a // p**i) % p for i in range(m)]
        db = [(b // p**i) % p for i in range(m)]
        prod = [0] * (2 * m - 1)
        for i, x in enumerate(da):
            if x:
                for j, y in enumerate(db):
                    prod[i + j] = (prod[i + j] + x * y) % p
        r = _poly_mod(prod, list(self.modulus), p)
        return sum(c * p**i for i, c in enumerate(r))

    def _pow_scalar(self, a: int, e: int) -> int:
        result, base = 1, a
        while e:
            if e & 1:
                result = self._mul_scalar(result, base)
            base = self._mul_scalar(base, base)
            e >>= 1
        return result

    def _mul_by_const_matrix(self, c: int) -> np.ndarray:
        """Matrix over F_p of a -> c*a acting on digit vectors."""
        cols = [self.digits(self._mul_scalar(c, self.p**i)) for i in range(self.m)]
        return np.stack(cols, axis=1)

    @cached_property
    def primitive(self) -> int:
        """Smallest primitive element in canonical order."""
        q = self.q
        if q == 2:
            return 1
        factors = _prime_factors(q - 1)
        for g in range(2, q):
            if all(self._pow_scalar(g, (q - 1) // r) != 1 for r in factors):
                return g
        raise AssertionError("no primitive element found")

    @cached_property
    def _exp_log(self) -> tuple[np.ndarray, np.ndarray]:
        q, g = self.q, self.primitive
        n = q - 1
        block = max(1, int(np.sqrt(n)))
        head = np.empty(block, dtype=np.int64)
        x = 1
        for i in range(block):
            head[i] = x
            x = self._mul_scalar(x, g)
        step = x  # g^block
        exp = np.empty(n, dtype=np.int64)
        c = 1
        for start in range(0, n, block):
            chunk = head[: min(block, n - start)]
            if self.m == 1:
                exp[start : start + len(chunk)] = chunk * c % self.p
            else:
                mat = self._mul_by_const_matrix(c)
                exp[start : start + len(chunk)] = self.from_digits(self.digits(chunk) @ mat.T)
            c = self._mul_scalar(c, step)
        log = np.zeros(q, dtype=np.int64)
        log[exp] = np.arange(n, dtype=np.int64)
        return exp, log

    @cached_property
    def _tables(self) -> tuple[np.ndarray, np.ndarray] | None:
        q = self.q
        if self.m == 1 or q > _SMALL_TABLE:
            return None
        a = np.arange(q)
        dg = self.digits(a)
        add = self.from_digits(dg[:, None, :] + dg[None, :, :])
        exp, log = self._exp_log
        la, lb = np.meshgrid(log, log, indexing="ij")
        mul = exp[(la + lb) % (q - 1)]
        mul[0, :] = 0
        mul[:, 0] = 0
        return add, mul

    @cached_property
    def _neg_table(self) -> np.ndarray:
        return self.from_digits(-self.digits(np.arange(self.q)))

    # --- elementwise arithmetic on encoded elements ---

    def add(self, a, b):
        if self.m == 1:
            return (np.asarray(a, dtype=np.int64) + b) % self.p
        if self.p == 2:
            return np.bitwise_xor(np.asarray(a, dtype=np.int64), b)
        t = self._tables
        if t is not None:
            return t[0][a, b]
        return self.from_digits(self.digits(a) + self.digits(b))

    def neg(self, a):
        if self.m == 1:
            return (-np.asarray(a, dtype=np.int64)) % self.p
        if self.p == 2:
            return np.asarray(a, dtype=np.int64)
        return self._neg_table[a]

    def sub(self, a, b):
        if self.m == 1:
            return (np.asarray(a, dtype=np.int64) - b) % self.p
        return self.add(a, self.neg(b))

    def mul(self, a, b):
        if self.m == 1:
            return np.asarray(a, dtype=np.int64) * b % self.p
        t = self._tables
        if t is not None:
            return t[1][a, b]
        a = np.asarray(a, dtype=np.int64)
        b = np.asarray(b, dtype=np.int64)
        exp, log = self._exp_log
        r = exp[(log[a] + log[b]) % (self.q - 1)]
        return np.where((a == 0) | (b == 0), 0, r)

    def inv(self, a):
        a = np.asarray(a, dtype=np.int64)
        if np.any(a == 0):
            raise DivisionByZero("inverse of zero")
        exp, log = self._exp_log
        return exp[(-log[a]) % (self.q - 1)]

    def div(self, a, b):
        return self.mul(a, self.inv(b))

    def pow(self, a, e: int):
        a = np.asarray(a, dtype=np.int64)
        if e == 0:
            return np.ones_like(a)
        if e < 0:
            a = self.inv(a)
            e = -e
        exp, log = self._exp_log
        r = exp[(log[a] * (e % (self.q - 1))) % (self.q - 1)]
        return np.where(a == 0, 0, r)

    def scalar(self, c: int) -> int:
        """Image of the integer c in the prime subfield."""
        return int(c) % self.p

    def sum(self, a, axis=None):
        a = np.asarray(a, dtype=np.int64)
        if self.m == 1:
            return np.sum(a, axis=axis) % self.p
        if self.p == 2:
            return np.bitwise_xor.reduce(a.ravel() if axis is None else a, axis=0 if axis is None else axis)
        if axis is None:
            return self.from_digits(self.digits(a.ravel()).sum(axis=0))
        ax = axis if axis >= 0 else a.ndim + axis
        return self.from_digits(self.digits(a).sum(axis=ax))

    def tensordot(self, a, b, axes):
        """Field version of np.tensordot."""
        a = np.asarray(a, dtype=np.int64)
        b = np.asarray(b, dtype=np.int64)
        if self.m == 1:
            return np.tensordot(a, b, axes=axes) % self.p
        if isinstance(axes, int):
            ax_a = list(range(a.ndim - axes, a.ndim))
            ax_b = list(range(axes))
        else:
            ax_a, ax_b = (list(np.atleast_1d(x)) for x in axes)
            ax_a = [x % a.ndim for x in ax_a]
            ax_b = [x % b.ndim for x in ax_b]
        free_a = [i for i in range(a.ndim) if i not in ax_a]
        free_b = [i for i in range(b.ndim) if i not in ax_b]
        k = len(ax_a)
        at = np.transpose(a, free_a + ax_a)
        bt = np.transpose(b, ax_b + free_b)
        ksize = int(np.prod([a.shape[i] for i in ax_a])) if k else 1
        at = at.reshape(at.shape[: len(free_a)] + (ksize,))
        bt = bt.reshape((ksize,) + bt.shape[k:])
        fa = at.shape[:-1]
        fb = bt.shape[1:]
        prod = self.mul(
            at.reshape(fa + (ksize,) + (1,) * len(fb)),
            bt.reshape((1,) * len(fa) + (ksize,) + fb),
        )
        return self.sum(prod, axis=len(fa))

    def matmul(self, a, b):
        a = np.asarray(a, dtype=np.int64)
        b = np.asarray(b, dtype=np.int64)
        if self.m == 1:
            return (a @ b) % self.p
        if a.ndim == 1 or b.ndim == 1:
            # promote vectors as np.matmul does, then drop the added axis
            out = self.matmul(a[None, :] if a.ndim == 1 else a, b[:, None] if b.ndim == 1 else b)
            if a.ndim == 1 and b.ndim == 1:
                return out[0, 0]
            return out[..., 0, :] if a.ndim == 1 else out[..., 0]
        return self.sum(self.mul(a[..., :, :, None], b[..., None, :, :]), axis=-2)

    @cached_property
    def trace_table(self) -> np.ndarray:
        """Absolute trace a + a^p + ... + a^(p^(m-1)) of every element (in F_p)."""
        a = np.arange(self.q, dtype=np.int64)
        total = np.zeros_like(a)
        cur = a
        for _ in range(self.m):
            total = self.add(total, cur)
            cur = self.pow(cur, self.p)
        return total

    @cached_property
    def character_table(self) -> np.ndarray:
        tr = self.trace_table
        return np.exp(2j * np.pi * tr / self.p)

    def to_dict(self) -> dict:
        return {"p": self.p, "m": self.m, "modulus": list(self.modulus)}


@lru_cache(maxsize=None)
def _smallest_modulus(p: int, m: int) -> tuple[int, ...]:
    if m == 1:
        return (0, 1)
    for low in itertools.product(range(p), repeat=m):
        cand = tuple(low) + (1,)
        if low[0] != 0 and _is_irreducible(cand, p):
            return cand
    raise AssertionError("no irreducible polynomial found")


@lru_cache(maxsize=None)
def _make_field(p: int, m: int) -> FieldSpec:
    return FieldSpec(p, m, _smallest_modulus(p, m))


def make_field(p: int, m: int = 1) -> FieldSpec:
    """GF(p^m) with the lexicographically smallest monic irreducible modulus."""
    if not is_prime(p):
        raise NonPrime(f"{p} is not prime")
    if m < 1:
        raise ValueError("extension degree must be positive")
    caps.check("field", p**m, f"GF({p}^{m})")
    return _make_field(p, m)


def field_from_dict(d: dict) -> FieldSpec:
    p = int(d["p"])
    m = int(d.get("m", 1))
    if "modulus" not in d or d["modulus"] is None:
        if m != 1:
            raise ValueError("a modulus is required when m > 1")
        return make_field(p, 1)
    caps.check("field", p**m, f"GF({p}^{m})")
    spec = FieldSpec(p, m, tuple(int(c) for c in d["modulus"]))
    canonical = _make_field(p, m)
    return canonical if spec == canonical else spec


# --- the element-level operations ---


def arith(spec: FieldSpec, a: FieldElem, b: FieldElem, op: str) -> FieldElem:
    x, y = spec.index(a), spec.index(b)
    if op == "add":
        r = spec.add(x, y)
    elif op == "sub":
        r = spec.sub(x, y)
    elif op == "mul":
        r = spec.mul(x, y)
    elif op == "div":
        r = spec.div(x, y)
    else:
        raise ValueError(f"unknown op {op!r}")
    return spec.elem(int(r))


def inv(spec: FieldSpec, a: FieldElem) -> FieldElem:
    return spec.elem(int(spec.inv(spec.index(a))))


def power(spec: FieldSpec, a: FieldElem, e: int) -> FieldElem:
    return spec.elem(int(spec.pow(spec.index(a), e)))


def enumerate_field(spec: FieldSpec) -> list[FieldElem]:
    return [spec.elem(a) for a in range(spec.q)]


@lru_cache(maxsize=None)
def embedding_table(source: FieldSpec, target: FieldSpec) -> np.ndarray:
    """Array mapping encoded elements of ``source`` to their images in ``target``.

    The generator x of ``source`` goes to the smallest root (in canonical
    order) of the source modulus inside ``target``.
    """
    if source.p != target.p or target.m % source.m:
        raise NotASubfield(f"{source} does not embed in {target}")
    if source == target:
        return np.arange(source.q, dtype=np.int64)
    # evaluate the source modulus at every target element by Horner's rule
    xs = np.arange(target.q, dtype=np.int64)
    val = np.zeros_like(xs)
    for c in reversed(source.modulus):
        val = target.add(target.mul(val, xs), target.scalar(c))
    roots = np.nonzero(val == 0)[0]
    if len(roots) == 0:
        raise NotASubfield(f"modulus of {source} has no root in {target}")
    root = int(roots[0])
    powers = [1]
    for _ in range(source.m - 1):
        powers.append(int(target.mul(powers[-1], root)))
    dg = source.digits(np.arange(source.q))
    out = np.zeros(source.q, dtype=np.int64)
    for i, rp in enumerate(powers):
        out = target.add(out, target.mul(dg[:, i] % source.p, rp))
    return out


def embed(a: FieldElem, source: FieldSpec, target: FieldSpec) -> FieldElem:
    return target.elem(int(embedding_table(source, target)[source.index(a)]))


def character(spec: FieldSpec, a: FieldElem | int) -> complex:
    """Additive character exp(2 pi i Tr(a) / p)."""
    tr = int(spec.trace_table[spec.index(a)])
    return cmath.exp(2j * cmath.pi * tr / spec.p)


def extension_for(spec: FieldSpec, size_bound: int) -> FieldSpec:
    """Smallest extension GF(p^(m*l)) of ``spec`` with more than ``size_bound`` elements."""
    ell = 1
    while spec.q**ell <= size_bound:
        ell += 1
    return spec if ell == 1 else make_field(spec.p, spec.m * ell)
