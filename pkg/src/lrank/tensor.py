"""Dense d-linear maps V^d -> V over GF(q), decompositions and brute-force oracles.

Coefficients are stored as an integer array of shape (n,)*(d+1) indexed
(i_1, ..., i_d, out).  Input slots are numbered 0..d-1 and a point ``p`` in
V^d is an array of shape (d, n).
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field as dc_field
from functools import lru_cache

import numpy as np

from . import caps
from .errors import OrderTooSmall, ShapeMismatch
from .field import FieldSpec, embedding_table, field_from_dict
from .matrix import all_vectors, batch_rank

UNKNOWN = None


# --- contraction helpers ---


def contract(F: FieldSpec, C: np.ndarray, x: np.ndarray) -> np.ndarray:
    """sum_i x[i] * C[i, ...]."""
    x = np.asarray(x, dtype=np.int64)
    if F.m == 1:
        return np.tensordot(x, C, axes=(0, 0)) % F.p
    return F.sum(F.mul(x.reshape((-1,) + (1,) * (C.ndim - 1)), C), axis=0)


def batch_contract(F: FieldSpec, C: np.ndarray, X: np.ndarray, shared: bool) -> np.ndarray:
    """Contract the first non-batch axis of C against rows of X (shape (B, n)).

    ``shared`` means C has no batch axis and is used for every row.
    """
    X = np.asarray(X, dtype=np.int64)
    if F.m == 1:
        if shared:
            out = np.tensordot(X, C, axes=(1, 0))
        else:
            out = np.einsum("bi,bi...->b...", X, C)
        return out % F.p
    rest = C.ndim - (1 if shared else 2)
    Xb = X.reshape(X.shape + (1,) * rest)
    Cb = C[None] if shared else C
    return F.sum(F.mul(Xb, Cb), axis=1)


def as_point(T: "Tensor", x, count: int | None = None) -> np.ndarray:
    count = T.d if count is None else count
    x = np.asarray(x, dtype=np.int64)
    if x.shape != (count, T.n):
        raise ShapeMismatch(f"expected {count} vectors of length {T.n}, got shape {x.shape}")
    return x


@dataclass(frozen=True, eq=False)
class Tensor:
    field: FieldSpec
    n: int
    d: int
    coeffs: np.ndarray

    def __post_init__(self):
        if self.d < 1:
            raise OrderTooSmall("a tensor needs at least one input")
        c = np.array(self.coeffs, dtype=np.int64)
        if c.shape != (self.n,) * (self.d + 1):
            raise ShapeMismatch(f"coefficient shape {c.shape} does not match n={self.n}, d={self.d}")
        if c.size and (c.min() < 0 or c.max() >= self.field.q):
            raise ValueError("coefficient outside the field")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def zero(cls, F: FieldSpec, n: int, d: int) -> "Tensor":
        return cls(F, n, d, np.zeros((n,) * (d + 1), dtype=np.int64))

    @classmethod
    def identity(cls, F: FieldSpec, n: int, d: int) -> "Tensor":
        c = np.zeros((n,) * (d + 1), dtype=np.int64)
        for i in range(n):
            c[(i,) * (d + 1)] = 1
        return cls(F, n, d, c)

    @classmethod
    def from_matrix(cls, F: FieldSpec, M) -> "Tensor":
        M = np.asarray(M, dtype=np.int64)
        if M.ndim != 2 or M.shape[0] != M.shape[1]:
            raise ShapeMismatch("expected a square matrix")
        return cls(F, M.shape[0], 1, M.T)

    def matrix(self) -> np.ndarray:
        """For d = 1 the n x n matrix acting on column vectors."""
        if self.d != 1:
            raise ShapeMismatch("only order-1 tensors are matrices")
        return self.coeffs.T.copy()

    def key(self) -> bytes:
        return self.coeffs.tobytes()

    def is_zero(self) -> bool:
        return not self.coeffs.any()

    def equals(self, other: "Tensor") -> bool:
        return (
            self.field == other.field
            and self.d == other.d
            and self.n == other.n
            and np.array_equal(self.coeffs, other.coeffs)
        )

    def _like(self, c) -> "Tensor":
        return Tensor(self.field, self.n, self.d, c)

    def __add__(self, other: "Tensor") -> "Tensor":
        return self._like(self.field.add(self.coeffs, other.coeffs))

    def __sub__(self, other: "Tensor") -> "Tensor":
        return self._like(self.field.sub(self.coeffs, other.coeffs))

    def scale(self, c: int) -> "Tensor":
        return self._like(self.field.mul(self.coeffs, c))

    def __repr__(self) -> str:
        return f"Tensor({self.field!r}, n={self.n}, d={self.d})"


# --- evaluation and slices ---


def eval_tensor(T: Tensor, x) -> np.ndarray:
    x = as_point(T, x)
    C = T.coeffs
    for k in range(T.d):
        C = contract(T.field, C, x[k])
    return C


def eval_full(T: Tensor, x, y) -> int:
    y = np.asarray(y, dtype=np.int64)
    if y.shape != (T.n,):
        raise ShapeMismatch("output covector has the wrong length")
    return int(contract(T.field, eval_tensor(T, x), y))


def slice_last(T: Tensor, v) -> Tensor:
    """T[v] = T(-, ..., -, v), a tensor of order d - 1."""
    if T.d < 2:
        raise OrderTooSmall("slicing needs d >= 2")
    v = np.asarray(v, dtype=np.int64)
    if v.shape != (T.n,):
        raise ShapeMismatch("slice vector has the wrong length")
    C = np.moveaxis(T.coeffs, T.d - 1, 0)
    return Tensor(T.field, T.n, T.d - 1, contract(T.field, C, v))


def matrix_slice(T: Tensor, x, i: int) -> np.ndarray:
    """Matrix of v -> T(x with slot i replaced by v); slot i is 0-based."""
    x = as_point(T, x)
    if not 0 <= i < T.d:
        raise ShapeMismatch(f"slot {i} out of range for d={T.d}")
    C = np.moveaxis(T.coeffs, i, T.d - 1)
    others = [k for k in range(T.d) if k != i]
    for k in others:
        C = contract(T.field, C, x[k])
    return C.T.copy()


def replace_slot(x, i: int, v) -> np.ndarray:
    y = np.array(x, dtype=np.int64)
    y[i] = v
    return y


def last_slices(T: Tensor, prefixes) -> np.ndarray:
    """Matrices T[x]_{d-1} for a batch of prefixes of shape (B, d-1, n); returns (B, n, n)."""
    X = np.asarray(prefixes, dtype=np.int64)
    B = X.shape[0]
    if T.d == 1:
        return np.broadcast_to(T.coeffs.T, (B, T.n, T.n)).copy()
    C = batch_contract(T.field, T.coeffs, X[:, 0], shared=True)
    for k in range(1, T.d - 1):
        C = batch_contract(T.field, C, X[:, k], shared=False)
    return np.swapaxes(C, 1, 2)


def _prefix_chunks(q: int, n: int, count: int, chunk: int = 1 << 15):
    """Yield all of (F^n)^count in canonical order as (B, count, n) blocks."""
    total = q ** (n * count)
    flat = n * count
    for start in range(0, total, chunk):
        idx = np.arange(start, min(total, start + chunk), dtype=np.int64)
        digits = np.empty((len(idx), flat), dtype=np.int64)
        for k in range(flat - 1, -1, -1):
            digits[:, k] = idx % q
            idx //= q
        yield digits.reshape(len(digits), count, n)


def all_points(q: int, n: int, count: int) -> np.ndarray:
    return np.concatenate(list(_prefix_chunks(q, n, count)), axis=0) if count else np.zeros((1, 0, n), np.int64)


# --- zero set, analytic rank and bias ---


def zero_set_size(T: Tensor) -> int:
    """|Z(T)| computed as the sum over prefixes x' of q^(n - rank T[x']_d)."""
    q, n = T.field.q, T.n
    caps.check("enum", q ** (n * (T.d - 1)), "zero-set prefix enumeration")
    if T.d == 1:
        return q ** (n - int(batch_rank(T.field, T.coeffs.T[None])[0]))
    total = 0
    for X in _prefix_chunks(q, n, T.d - 1):
        ranks = batch_rank(T.field, last_slices(T, X))
        counts = np.bincount(ranks, minlength=n + 1)
        total += sum(int(c) * q ** (n - r) for r, c in enumerate(counts))
    return total


def zero_set_size_naive(T: Tensor) -> int:
    """Count x in V^d with T(x) = 0 by evaluating at every point."""
    q, n = T.field.q, T.n
    caps.check("bruteforce", q ** (n * T.d), "naive zero-set enumeration")
    total = 0
    for X in _prefix_chunks(q, n, T.d):
        C = batch_contract(T.field, T.coeffs, X[:, 0], shared=True)
        for k in range(1, T.d):
            C = batch_contract(T.field, C, X[:, k], shared=False)
        total += int((~C.any(axis=1)).sum())
    return total


def analytic_rank(T: Tensor) -> tuple[int, float]:
    """(|Z(T)|, n d - log_q |Z(T)|)."""
    z = zero_set_size(T)
    q = T.field.q
    ar = T.n * T.d - math.log(z) / math.log(q)
    exact_power = q ** (T.n * T.d) == z
    return z, 0.0 if exact_power else max(ar, 0.0)


def bias_character(T: Tensor) -> complex:
    """Average of chi(T(x) . y) over all x in V^d and y in V."""
    F, q, n = T.field, T.field.q, T.n
    caps.check("bruteforce", q ** (n * T.d), "bias enumeration")
    chi = F.character_table
    Y = all_vectors(q, n)
    acc = 0j
    for X in _prefix_chunks(q, n, T.d, chunk=1 << 12):
        C = batch_contract(F, T.coeffs, X[:, 0], shared=True)
        for k in range(1, T.d):
            C = batch_contract(F, C, X[:, k], shared=False)
        acc += complex(chi[F.matmul(C, Y.T)].sum())
    return acc / q ** (n * (T.d + 1))


# --- adjoint pairs and the reduction operator ---


def walk_point(p, x, i: int) -> np.ndarray:
    """(p_1, ..., p_i, x_{i+1}, ..., x_d): the first i slots from p, the rest from x."""
    p = np.asarray(p, dtype=np.int64)
    x = np.asarray(x, dtype=np.int64)
    return np.concatenate([p[:i], x[i:]], axis=0)


def is_adjoint(T: Tensor, p, x) -> bool:
    p, x = as_point(T, p), as_point(T, x)
    return all(not eval_tensor(T, walk_point(p, x, i)).any() for i in range(1, T.d))


def reduce_slice(T: Tensor, p, Pmat, v) -> Tensor:
    """T[Pmat v] where Pmat is an already evaluated kernel projection."""
    as_point(T, p)
    Pmat = np.asarray(Pmat, dtype=np.int64)
    if Pmat.shape != (T.n, T.n):
        raise ShapeMismatch("projection must be n x n")
    return slice_last(T, T.field.matmul(Pmat, np.asarray(v, dtype=np.int64)))


# --- decompositions ---


@dataclass(frozen=True, eq=False)
class Term:
    """form(x_A) * map(x_B) where B is the complement of A among the inputs.

    The map is vector valued, so the output slot always sits on the map side.
    """

    slots: tuple[int, ...]
    form: np.ndarray
    map: np.ndarray

    def __post_init__(self):
        s = tuple(int(a) for a in self.slots)
        if not s or list(s) != sorted(set(s)) or s[0] < 0:
            raise ShapeMismatch(f"form slots {s} must be a nonempty increasing list")
        object.__setattr__(self, "slots", s)
        object.__setattr__(self, "form", np.asarray(self.form, dtype=np.int64))
        object.__setattr__(self, "map", np.asarray(self.map, dtype=np.int64))
        n = self.map.shape[-1] if self.map.ndim else 0
        if self.form.shape != (n,) * len(s) or any(k != n for k in self.map.shape):
            raise ShapeMismatch("form and map shapes disagree")

    @property
    def n(self) -> int:
        return self.map.shape[-1]

    @property
    def order(self) -> int:
        return len(self.slots) + self.map.ndim - 1

    def coeffs(self, F: FieldSpec) -> np.ndarray:
        d = self.order
        if max(self.slots) >= d:
            raise ShapeMismatch("form slot out of range")
        outer = F.mul(
            self.form.reshape(self.form.shape + (1,) * self.map.ndim),
            self.map.reshape((1,) * self.form.ndim + self.map.shape),
        )
        rest = [k for k in range(d) if k not in self.slots]
        order = list(self.slots) + rest + [d]
        return np.transpose(outer, np.argsort(order))

    def is_zero(self) -> bool:
        return not self.form.any() or not self.map.any()

    def normalized(self, F: FieldSpec) -> "Term":
        """Scale the form to be monic in its first nonzero coefficient."""
        flat = self.form.ravel()
        nz = np.nonzero(flat)[0]
        if len(nz) == 0:
            return self
        lead = int(flat[nz[0]])
        return Term(self.slots, F.mul(self.form, F.inv(lead)), F.mul(self.map, lead))


@dataclass
class Decomposition:
    order: int
    terms: list[Term] = dc_field(default_factory=list)

    def __len__(self) -> int:
        return len(self.terms)

    def total(self, F: FieldSpec, n: int) -> np.ndarray:
        acc = np.zeros((n,) * (self.order + 1), dtype=np.int64)
        for t in self.terms:
            if t.order != self.order or t.n != n:
                raise ShapeMismatch("term shape does not match the decomposition")
            acc = F.add(acc, t.coeffs(F))
        return acc


def verify_decomposition(T: Tensor, D: Decomposition) -> tuple[bool, int]:
    if D.order != T.d:
        raise ShapeMismatch("decomposition order differs from the tensor order")
    return bool(np.array_equal(D.total(T.field, T.n), T.coeffs)), len(D.terms)


# --- random and planted tensors ---


def random_tensor(F: FieldSpec, n: int, d: int, rng) -> Tensor:
    return Tensor(F, n, d, rng.integers(0, F.q, size=(n,) * (d + 1)))


def _random_nonzero(F: FieldSpec, shape, rng) -> np.ndarray:
    while True:
        a = rng.integers(0, F.q, size=shape)
        if a.any():
            return a


def random_term(F: FieldSpec, n: int, d: int, rng) -> Term:
    subsets = [s for k in range(1, d + 1) for s in itertools.combinations(range(d), k)]
    slots = subsets[int(rng.integers(len(subsets)))]
    form = _random_nonzero(F, (n,) * len(slots), rng)
    mp = _random_nonzero(F, (n,) * (d - len(slots) + 1), rng)
    return Term(slots, form, mp)


def planted_decomposition(F: FieldSpec, n: int, d: int, pr_target: int, rng) -> tuple[Tensor, Decomposition]:
    D = Decomposition(d, [random_term(F, n, d, rng) for _ in range(pr_target)])
    return Tensor(F, n, d, D.total(F, n)), D


def planted_tensor(F: FieldSpec, n: int, d: int, pr_target: int, rng) -> Tensor:
    return planted_decomposition(F, n, d, pr_target, rng)[0]


# --- brute-force partition rank ---


def _encode(F: FieldSpec, flat: np.ndarray) -> np.ndarray:
    """Encode rows of field elements as integers sum c_k q^k."""
    weights = np.array([F.q**k for k in range(flat.shape[-1])], dtype=np.int64)
    return flat @ weights


def _reducible_codes(F: FieldSpec, n: int, d: int) -> np.ndarray:
    codes = set()
    for k in range(1, d + 1):
        for slots in itertools.combinations(range(d), k):
            forms = all_vectors(F.q, n**k)[1:]
            maps = all_vectors(F.q, n ** (d - k + 1))[1:]
            for f in forms:
                form = f.reshape((n,) * k)
                for chunk in np.array_split(maps, max(1, len(maps) // 4096)):
                    terms = [Term(slots, form, m.reshape((n,) * (d - k + 1))).coeffs(F).ravel() for m in chunk]
                    codes.update(_encode(F, np.array(terms)).tolist())
    return np.array(sorted(codes), dtype=np.int64)


@lru_cache(maxsize=8)
def pr_table(F: FieldSpec, n: int, d: int) -> np.ndarray:
    """Partition rank of every tensor in the space, indexed by its integer code."""
    size = F.q ** (n ** (d + 1))
    caps.check("pr_table", size, "partition-rank table")
    N = n ** (d + 1)
    gens = _reducible_codes(F, n, d)
    dist = np.full(size, -1, dtype=np.int16)
    dist[0] = 0
    frontier = np.array([0], dtype=np.int64)
    level = 0
    char2 = F.p == 2
    q = F.q

    def digits(codes):
        out = np.empty((len(codes), N), dtype=np.int64)
        c = codes.copy()
        for k in range(N):
            out[:, k] = c % q
            c //= q
        return out

    gdig = None if char2 else digits(gens)
    while len(frontier):
        level += 1
        found = []
        if char2:
            small, big = (frontier, gens) if len(frontier) < len(gens) else (gens, frontier)
            for s in small:
                cand = big ^ s
                cand = cand[dist[cand] < 0]
                dist[cand] = level
                found.append(cand)
        else:
            fdig = digits(frontier)
            for g in gdig:
                cand = _encode(F, F.add(fdig, g[None, :]))
                cand = cand[dist[cand] < 0]
                dist[cand] = level
                found.append(cand)
        frontier = np.unique(np.concatenate(found)) if found else np.zeros(0, np.int64)
    return dist


def brute_force_pr(T: Tensor, r_max: int) -> int | None:
    """Exact partition rank if it is at most r_max, else UNKNOWN (None)."""
    dist = pr_table(T.field, T.n, T.d)
    v = int(dist[_encode(T.field, T.coeffs.ravel()[None])[0]])
    return v if v <= r_max else UNKNOWN


# --- JSON io ---


def _elems_to_json(F: FieldSpec, a: np.ndarray) -> list:
    flat = np.asarray(a, dtype=np.int64).ravel()
    if F.m == 1:
        return [int(v) for v in flat]
    return [[int(c) for c in F.digits(int(v))] for v in flat]


def _elems_from_json(F: FieldSpec, items) -> np.ndarray:
    out = []
    for v in items:
        if isinstance(v, list):
            out.append(int(F.from_digits(np.array(v, dtype=np.int64))))
        else:
            v = int(v)
            if not 0 <= v < F.q:
                raise ValueError(f"field element {v} out of range")
            out.append(v)
    return np.array(out, dtype=np.int64)


def tensor_to_dict(T: Tensor) -> dict:
    return {
        "field": T.field.to_dict(),
        "n": T.n,
        "order": T.d,
        "coeffs": _elems_to_json(T.field, T.coeffs),
    }


def tensor_from_dict(obj: dict) -> Tensor:
    F = field_from_dict(obj["field"])
    n, d = int(obj["n"]), int(obj["order"])
    flat = _elems_from_json(F, obj["coeffs"])
    if flat.size != n ** (d + 1):
        raise ShapeMismatch(f"expected {n ** (d + 1)} coefficients, got {flat.size}")
    return Tensor(F, n, d, flat.reshape((n,) * (d + 1)))


def decomposition_to_dict(F: FieldSpec, D: Decomposition) -> dict:
    return {
        "order": D.order,
        "terms": [
            {"slots": list(t.slots), "form": _elems_to_json(F, t.form), "map": _elems_to_json(F, t.map)}
            for t in D.terms
        ],
    }


def decomposition_from_dict(F: FieldSpec, obj: dict, n: int | None = None) -> Decomposition:
    d = int(obj["order"])
    terms = []
    for t in obj["terms"]:
        slots = [int(s) for s in t["slots"]]
        form = _elems_from_json(F, t["form"])
        mp = _elems_from_json(F, t["map"])
        k = len(slots)
        size = n if n is not None else round(mp.size ** (1 / (d - k + 1)))
        if size ** (d - k + 1) != mp.size or size**k != form.size:
            raise ShapeMismatch("term sizes are inconsistent with the order")
        terms.append(Term(slots, form.reshape((size,) * k), mp.reshape((size,) * (d - k + 1))))
    return Decomposition(d, terms)


def load_tensor(path: str) -> Tensor:
    with open(path) as fh:
        return tensor_from_dict(json.load(fh))


def save_tensor(T: Tensor, path: str) -> None:
    with open(path, "w") as fh:
        json.dump(tensor_to_dict(T), fh)


def embed_tensor(T: Tensor, target: FieldSpec) -> Tensor:
    """The same coefficients viewed over an extension field."""
    table = embedding_table(T.field, target)
    return Tensor(target, T.n, T.d, table[T.coeffs])
