"""Polynomials over finite fields, their polarizations, and the polynomial-side desk checks.

A degree-k polynomial P in n variables polarizes to the symmetric k-linear
form obtained from k iterated finite differences.  Only the degree-k part
survives, and a monomial with exponent vector e contributes coeff * prod(e_j!)
to every coefficient whose slot indices form the multiset of e.  The form is
returned as a :class:`Tensor` of order k - 1 whose output slot is the k-th
argument.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from fractions import Fraction
from itertools import combinations, permutations, product

import numpy as np

from . import caps
from .decomp import pr_upper_bound
from .errors import CharTooSmall, PreconditionViolated
from .field import FieldSpec, field_from_dict, make_field
from .matrix import all_vectors, projective_reps, solve
from .tensor import (
    Decomposition,
    Tensor,
    brute_force_pr,
    embed_tensor,
    zero_set_size,
)


@dataclass
class PolyFn:
    """Sparse polynomial: exponent tuple -> nonzero field element index."""

    field: FieldSpec
    n: int
    monomials: dict = dc_field(default_factory=dict)

    def __post_init__(self):
        clean = {}
        for exps, c in self.monomials.items():
            exps = tuple(int(e) for e in exps)
            if len(exps) != self.n or any(e < 0 for e in exps):
                raise ValueError(f"bad exponent vector {exps}")
            c = int(c) % self.field.q if self.field.m == 1 else int(c)
            if c:
                clean[exps] = self.field.add(clean.get(exps, 0), c)
        self.monomials = {e: c for e, c in clean.items() if c}

    @classmethod
    def variable(cls, F: FieldSpec, n: int, j: int) -> "PolyFn":
        e = [0] * n
        e[j] = 1
        return cls(F, n, {tuple(e): 1})

    @classmethod
    def linear(cls, F: FieldSpec, coeffs) -> "PolyFn":
        n = len(coeffs)
        mons = {}
        for j, c in enumerate(coeffs):
            e = [0] * n
            e[j] = 1
            mons[tuple(e)] = int(c)
        return cls(F, n, mons)

    @classmethod
    def constant(cls, F: FieldSpec, n: int, c: int) -> "PolyFn":
        return cls(F, n, {(0,) * n: c})

    @property
    def degree(self) -> int:
        return max((sum(e) for e in self.monomials), default=0)

    def is_zero(self) -> bool:
        return not self.monomials

    def homogeneous_part(self, k: int) -> "PolyFn":
        return PolyFn(self.field, self.n, {e: c for e, c in self.monomials.items() if sum(e) == k})

    def __add__(self, other: "PolyFn") -> "PolyFn":
        out = dict(self.monomials)
        for e, c in other.monomials.items():
            out[e] = self.field.add(out.get(e, 0), c)
        return PolyFn(self.field, self.n, out)

    def __sub__(self, other: "PolyFn") -> "PolyFn":
        return self + other.scale(self.field.neg(1))

    def scale(self, c: int) -> "PolyFn":
        F = self.field
        return PolyFn(F, self.n, {e: F.mul(v, c) for e, v in self.monomials.items()})

    def __mul__(self, other: "PolyFn") -> "PolyFn":
        F = self.field
        out: dict = {}
        for e1, c1 in self.monomials.items():
            for e2, c2 in other.monomials.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                out[e] = F.add(out.get(e, 0), F.mul(c1, c2))
        return PolyFn(F, self.n, out)

    def equals(self, other: "PolyFn") -> bool:
        return self.n == other.n and self.monomials == other.monomials

    def eval(self, X) -> np.ndarray:
        """Values at a batch of points of shape (N, n)."""
        F = self.field
        X = np.asarray(X, dtype=np.int64)
        out = np.zeros(X.shape[0], dtype=np.int64)
        for e, c in self.monomials.items():
            term = np.full(X.shape[0], c, dtype=np.int64)
            for j, k in enumerate(e):
                if k:
                    term = F.mul(term, F.pow(X[:, j], k))
            out = F.add(out, term)
        return out

    def value_table(self) -> np.ndarray:
        """Values at every point of F^n in canonical order."""
        caps.check("enum", self.field.q**self.n, "polynomial value table")
        return self.eval(all_vectors(self.field.q, self.n))

    def to_dict(self) -> dict:
        F = self.field
        mons = []
        for e in sorted(self.monomials):
            c = self.monomials[e]
            mons.append({"exps": list(e), "coeff": c if F.m == 1 else [int(v) for v in F.digits(c)]})
        return {"field": F.to_dict(), "n": self.n, "monomials": mons}

    @classmethod
    def from_dict(cls, obj: dict) -> "PolyFn":
        F = field_from_dict(obj["field"])
        mons = {}
        for m in obj["monomials"]:
            c = m["coeff"]
            c = int(F.from_digits(np.asarray(c, dtype=np.int64))) if isinstance(c, list) else int(c)
            mons[tuple(m["exps"])] = c
        return cls(F, int(obj["n"]), mons)


PolyTuple = list  # nonempty list of PolyFn over a common field and n


def random_poly(F: FieldSpec, n: int, k: int, rng, density: float = 1.0) -> PolyFn:
    """Random polynomial of degree at most k with exponents below the characteristic."""
    mons = {}
    for e in product(range(min(k, F.p - 1) + 1), repeat=n):
        if sum(e) <= k and rng.random() < density:
            mons[e] = int(rng.integers(0, F.q))
    return PolyFn(F, n, mons)


# --- polarization ---


def _require_char(F: FieldSpec, k: int) -> None:
    if F.p <= k:
        raise CharTooSmall(f"characteristic {F.p} must exceed the degree {k}")


def polarize(P: PolyFn, k: int | None = None) -> Tensor:
    """The symmetric k-linear form of P as a tensor of order k - 1 (k defaults to deg P)."""
    F, n = P.field, P.n
    k = P.degree if k is None else k
    if k < 2:
        raise PreconditionViolated("polarization to a tensor needs k >= 2")
    _require_char(F, k)
    if P.degree > k:
        raise PreconditionViolated(f"degree {P.degree} exceeds k = {k}")
    C = np.zeros((n,) * k, dtype=np.int64)
    for e, c in P.homogeneous_part(k).monomials.items():
        weight = F.scalar(math.prod(math.factorial(v) for v in e))
        val = F.mul(c, weight)
        slots = [j for j, v in enumerate(e) for _ in range(v)]
        for idx in set(permutations(slots)):
            C[idx] = F.add(C[idx], val)
    return Tensor(F, n, k - 1, C)


def form_value(T: Tensor, xs) -> np.ndarray:
    """The k-linear form of T at batches of arguments xs (k arrays of shape (N, n))."""
    F = T.field
    C = T.coeffs
    out = C[None]
    for x in xs:
        x = np.asarray(x, dtype=np.int64)
        out = F.sum(F.mul(out, x.reshape(x.shape + (1,) * (out.ndim - 2))), axis=1)
    return out


def polar_by_differences(P: PolyFn, xs, y) -> np.ndarray:
    """Iterated finite differences of P along xs, evaluated at base points y."""
    F = P.field
    k = len(xs)
    y = np.asarray(y, dtype=np.int64)
    acc = np.zeros(y.shape[0], dtype=np.int64)
    for size in range(k + 1):
        for S in combinations(range(k), size):
            pt = y
            for i in S:
                pt = F.add(pt, np.asarray(xs[i], dtype=np.int64))
            val = P.eval(pt)
            acc = F.add(acc, val if (k - size) % 2 == 0 else F.neg(val))
    return acc


# --- characters and exact magnitudes ---


def _trace_counts(F: FieldSpec, values: np.ndarray) -> np.ndarray:
    return np.bincount(F.trace_table[values], minlength=F.p)


def char_average(F: FieldSpec, values: np.ndarray) -> complex:
    """E chi(v) over the given array of field elements."""
    return complex(F.character_table[np.asarray(values, dtype=np.int64)].mean())


def char_average_sq_exact(F: FieldSpec, values: np.ndarray) -> Fraction | None:
    """|E chi(v)|^2 as an exact rational when the characteristic is 2 or 3, else None."""
    if F.p not in (2, 3):
        return None
    M = _trace_counts(F, np.asarray(values, dtype=np.int64).ravel())
    N = int(M.sum())
    B = [sum(int(M[t]) * int(M[(t + s) % F.p]) for t in range(F.p)) for s in range(F.p)]
    if F.p == 2:
        num = Fraction(B[0] - B[1])
    else:
        num = B[0] - Fraction(B[1] + B[2], 2)
    return num / (N * N)


def cauchy_schwarz_check(P: PolyFn, k: int | None = None) -> dict:
    """|E chi(P)| against |E chi(polar P)|^(1/2^(k-1)) = q^(-AR/2^(k-1))."""
    F = P.field
    k = P.degree if k is None else k
    T = polarize(P, k)
    lhs = abs(char_average(F, P.value_table()))
    z = zero_set_size(T)
    q, nd = F.q, T.n * T.d
    bias = z / q**nd
    rhs = bias ** (1.0 / 2 ** (k - 1))
    return {"lhs": lhs, "rhs": rhs, "Z_size": z, "nd": nd, "holds": lhs <= rhs + 1e-9}


# --- rank of polynomials ---


def diagonal_products(P: PolyFn, D: Decomposition, k: int) -> list[tuple[PolyFn, PolyFn]]:
    """Restrict each term of a decomposition of polar P to the diagonal, as factor pairs.

    The diagonal of the polar form is k! P_k, so the products (scaled by
    1/k!) sum to P_k and each is a product of two homogeneous factors of
    positive degree.
    """
    F, n = P.field, P.n
    inv_fact = F.inv(F.scalar(math.factorial(k)))
    out = []
    for t in D.terms:
        f = _form_to_poly(F, n, t.form)
        g = _form_to_poly(F, n, t.map).scale(inv_fact)
        if not (f.is_zero() or g.is_zero()):
            out.append((f, g))
    return out


def _form_to_poly(F: FieldSpec, n: int, A: np.ndarray) -> PolyFn:
    """The diagonal x -> A(x, ..., x) of a multilinear array."""
    A = np.asarray(A, dtype=np.int64)
    mons: dict = {}
    for idx in product(range(n), repeat=A.ndim):
        c = int(A[idx])
        if c:
            e = [0] * n
            for j in idx:
                e[j] += 1
            e = tuple(e)
            mons[e] = F.add(mons.get(e, 0), c)
    return PolyFn(F, n, mons)


def _ratio(a: PolyFn, b: PolyFn) -> int | None:
    """c with a = c b if such a nonzero scalar exists."""
    if a.is_zero() or b.is_zero() or set(a.monomials) != set(b.monomials):
        return None
    F = a.field
    e0 = next(iter(a.monomials))
    c = F.div(a.monomials[e0], b.monomials[e0])
    return int(c) if b.scale(c).equals(a) else None


def divide_by_linear(Q: PolyFn, ell: PolyFn) -> PolyFn | None:
    """h with ell h = Q for homogeneous Q, found by solving for the coefficients of h."""
    F, n = Q.field, Q.n
    k = Q.degree
    if Q.is_zero() or k < 1:
        return None
    rows = sorted({e for e in product(range(k + 1), repeat=n) if sum(e) == k})
    cols = sorted({e for e in product(range(k), repeat=n) if sum(e) == k - 1})
    pos = {e: i for i, e in enumerate(rows)}
    A = np.zeros((len(rows), len(cols)), dtype=np.int64)
    for j, e in enumerate(cols):
        for le, c in ell.monomials.items():
            A[pos[tuple(a + b for a, b in zip(e, le))], j] = c
    b = np.array([Q.monomials.get(e, 0) for e in rows], dtype=np.int64)
    x = solve(F, A, b)
    if x is None:
        return None
    return PolyFn(F, n, {e: int(v) for e, v in zip(cols, x)})


def _linear_factor(Q: PolyFn) -> tuple[PolyFn, PolyFn] | None:
    """A factorization Q = ell h with ell linear, searching lines of linear forms."""
    F, n = Q.field, Q.n
    if Q.is_zero() or Q.degree < 2 or any(sum(e) != Q.degree for e in Q.monomials):
        return None
    caps.check("enum", F.q**n, "linear factor search")
    for c in projective_reps(F, np.eye(n, dtype=np.int64)):
        ell = PolyFn.linear(F, c)
        h = divide_by_linear(Q, ell)
        if h is not None:
            return ell, h
    return None


def merge_products(pairs: list[tuple[PolyFn, PolyFn]]) -> list[tuple[PolyFn, PolyFn]]:
    """Combine products that share a factor up to scaling, or whose sum has a linear factor.

    Products that vanish are dropped.
    """
    pairs = [(f, g) for f, g in pairs if not (f * g).is_zero()]
    changed = True
    while changed:
        changed = False
        for a, b in combinations(range(len(pairs)), 2):
            f1, g1 = pairs[a]
            f2, g2 = pairs[b]
            merged = None
            for (u1, v1), (u2, v2) in [((f1, g1), (f2, g2)), ((f1, g1), (g2, f2)), ((g1, f1), (f2, g2)), ((g1, f1), (g2, f2))]:
                c = _ratio(u2, u1)
                if c is not None:
                    merged = (u1, v1 + v2.scale(c))
                    break
            if merged is None:
                merged = _linear_factor(f1 * g1 + f2 * g2)
            if merged is not None:
                rest = [pairs[i] for i in range(len(pairs)) if i not in (a, b)]
                if not (merged[0] * merged[1]).is_zero():
                    rest.append(merged)
                pairs = rest
                changed = True
                break
    return pairs


@dataclass
class PolyRankBound:
    bound: int
    products: list  # (f, g) pairs with sum f g = P_k
    pr_witness: Decomposition | None
    pr_bound: int | None

    def check(self, P: PolyFn) -> bool:
        k = P.degree
        acc = PolyFn(P.field, P.n)
        for f, g in self.products:
            acc = acc + f * g
        return acc.equals(P.homogeneous_part(k))


def poly_rank_upper(P: PolyFn, budget: int | None = None, rng=None) -> PolyRankBound | None:
    """Upper bound on rank(P) from a verified decomposition of its polarization.

    The bound is the number of reducible products left after merging the
    diagonal restrictions of the decomposition terms; it never exceeds the
    decomposition size.  Returns None when no stable point was found.
    """
    k = P.degree
    if k == 0:
        return PolyRankBound(0, [], None, None)
    if k == 1:
        raise PreconditionViolated("rank is defined here for degree at least 2")
    _require_char(P.field, k)
    found = pr_upper_bound(polarize(P, k), budget=budget, rng=rng)
    if found is None:
        return None
    nterms, D, _ = found
    products = merge_products(diagonal_products(P, D, k))
    out = PolyRankBound(len(products), products, D, nterms)
    if not out.check(P):
        raise AssertionError("diagonal products do not reproduce the top-degree part")
    return out


# --- equidistribution of polynomial tuples ---


@dataclass
class EquidistReport:
    pr_zero: Fraction
    dev: Fraction
    maxchar: float
    maxchar_sq: Fraction | None  # exact when the characteristic is 2 or 3
    fourier_pr: float
    holds: bool

    def to_dict(self) -> dict:
        return {
            "pr_zero": str(self.pr_zero),
            "dev": str(self.dev),
            "maxchar": self.maxchar,
            "maxchar_sq": None if self.maxchar_sq is None else str(self.maxchar_sq),
            "fourier_pr": self.fourier_pr,
            "holds": self.holds,
        }


def equidistribution_report(Ps: PolyTuple) -> EquidistReport:
    """Deviation of Pr[P(x) = 0] from q^-m against the largest nontrivial character average."""
    if not Ps:
        raise ValueError("need at least one polynomial")
    F, n = Ps[0].field, Ps[0].n
    if any(P.field != F or P.n != n for P in Ps):
        raise ValueError("polynomials must share field and number of variables")
    q, m = F.q, len(Ps)
    caps.check("bruteforce", q**n, "equidistribution enumeration")
    caps.check("enum", q**m, "character enumeration")
    vals = np.stack([P.value_table() for P in Ps], axis=1)  # (q^n, m)
    zeros = int((vals == 0).all(axis=1).sum())
    pr_zero = Fraction(zeros, q**n)
    dev = abs(pr_zero - Fraction(1, q**m))
    A = all_vectors(q, m)
    combos = F.sum(F.mul(A[:, None, :], vals[None, :, :]), axis=2)  # (q^m, q^n)
    avgs = F.character_table[combos].mean(axis=1)
    fourier = float(avgs.sum().real) / q**m
    maxchar = float(np.abs(avgs[1:]).max()) if len(A) > 1 else 0.0
    maxchar_sq = None
    if F.p in (2, 3):
        maxchar_sq = max(char_average_sq_exact(F, row) for row in combos[1:])
        holds = dev * dev <= maxchar_sq
    else:
        holds = float(dev) <= maxchar + 1e-12
    return EquidistReport(pr_zero, dev, maxchar, maxchar_sq, fourier, holds)


# --- Gowers norms of polynomial phases ---


def gowers_power_direct(P: PolyFn, k: int) -> complex:
    """E over x, v_1..v_k of omega^(k-th difference of P), by enumeration."""
    F, n = P.field, P.n
    if not F.is_prime_field:
        raise PreconditionViolated("polynomial phases are defined over prime fields")
    caps.check("bruteforce", F.q ** (n * (k + 1)), "direct Gowers enumeration")
    pts = all_vectors(F.q, n)
    N = len(pts)
    grids = np.meshgrid(*[np.arange(N)] * (k + 1), indexing="ij")
    idx = [g.ravel() for g in grids]
    y = pts[idx[0]]
    xs = [pts[i] for i in idx[1:]]
    vals = polar_by_differences(P, xs, y)
    return char_average(F, vals)


def gowers_power_ar(P: PolyFn, k: int) -> float:
    """q^(-AR(polar P)), the 2^k-th power of the U^k norm of omega^P."""
    F = P.field
    if not F.is_prime_field:
        raise PreconditionViolated("polynomial phases are defined over prime fields")
    if P.degree < k:
        return 1.0
    T = polarize(P, k)
    return zero_set_size(T) / F.q ** (T.n * T.d)


def gowers_Uk(P: PolyFn, k: int, route: str = "ar") -> float:
    """The U^k norm of x -> omega^P(x); route "ar" uses the polar zero set, "direct" enumerates."""
    if route == "ar":
        power = gowers_power_ar(P, k)
    elif route == "direct":
        power = gowers_power_direct(P, k).real
    else:
        raise ValueError(f"unknown route {route!r}")
    return max(power, 0.0) ** (1.0 / 2**k)


def witness_correlation(P: PolyFn, products: list[tuple[PolyFn, PolyFn]]) -> float:
    """max over j of |E omega^(P_k - sum j_i Q_i)| where Q_i run over the product factors.

    Each reducible product f g contributes the two lower-degree polynomials
    f and g; with s = 2 (number of products) factors the maximum is at least
    p^-s.
    """
    F, n = P.field, P.n
    k = P.degree
    Pk = P.homogeneous_part(k)
    Qs = [f for pair in products for f in pair]
    s = len(Qs)
    caps.check("enum", F.p**s * F.q**n, "witness correlation enumeration")
    base = Pk.value_table()
    tables = [Q.value_table() for Q in Qs]
    best = 0.0
    for js in product(range(F.p), repeat=s):
        v = base
        for j, t in zip(js, tables):
            v = F.sub(v, F.mul(F.scalar(j), t))
        best = max(best, abs(char_average(F, v)))
    return best


# --- field extension experiment ---


def extend_tensor(T: Tensor, ell: int) -> Tensor:
    if ell < 1:
        raise ValueError("extension degree must be positive")
    if ell == 1:
        return T
    F = T.field
    return embed_tensor(T, make_field(F.p, F.m * ell))


@dataclass
class ExtensionReport:
    ell: int
    z_base: int
    z_ext: int
    nd: int
    ar_base: float
    ar_ext: float
    pr_upper_base: int | None
    pr_upper_ext: int | None
    pr_base: int | None
    pr_ext: int | None
    oracle_holds: bool | None

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def pr_extension_experiment(T: Tensor, ell: int, budget: int | None = None, rng=None, oracle: bool = True) -> ExtensionReport:
    """Partition and analytic rank of T over its field and over a degree-ell extension."""
    K = extend_tensor(T, ell)
    nd = T.n * T.d
    zb, ze = zero_set_size(T), zero_set_size(K)
    ar_b = nd - math.log(zb) / math.log(T.field.q)
    ar_e = nd - math.log(ze) / math.log(K.field.q)
    ub = pr_upper_bound(T, budget=budget, rng=rng)
    ue = pr_upper_bound(K, budget=budget, rng=rng)
    pb = pe = None
    holds = None
    if oracle:
        rmax = T.n ** T.d
        pb = brute_force_pr(T, rmax)
        pe = brute_force_pr(K, rmax)
        holds = pb <= ell * pe
    return ExtensionReport(
        ell, zb, ze, nd, max(ar_b, 0.0), max(ar_e, 0.0),
        None if ub is None else ub[0], None if ue is None else ue[0], pb, pe, holds,
    )
