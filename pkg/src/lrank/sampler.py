"""Resampling on zero sets, exact rank statistics, pruning and the LR-vs-AR pipeline.

Probabilities are exact :class:`fractions.Fraction` values.  Comparisons that
involve the analytic rank AR = n d - log_q |Z| go through :func:`log_cmp`,
which is exact whenever log_q |Z| is rational and otherwise uses a decimal
logarithm whose precision grows until the sign is certain.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass, field as dc_field
from decimal import Decimal, localcontext
from fractions import Fraction
from itertools import accumulate, product

import numpy as np

from . import caps
from .errors import PipelineFailed, PreconditionViolated
from .localrank import (
    _line_classes,
    alg_local_rank_leq,
    colex_max,
    local_rank,
    norm,
)
from .matrix import batch_rank, kernel_basis, projective_reps, rank, span_elements
from .tensor import (
    Tensor,
    _prefix_chunks,
    all_points,
    as_point,
    last_slices,
    matrix_slice,
    slice_last,
    zero_set_size,
)

# --- exact comparisons against logarithms ---


def _is_power(z: int, p: int) -> int | None:
    k = 0
    while z > 1 and z % p == 0:
        z //= p
        k += 1
    return k if z == 1 else None


def log_cmp(c: Fraction, z: int, q: int) -> int:
    """Sign of c - log_q(z) for a rational c and integers z >= 1, q >= 2."""
    c = Fraction(c)
    base = _smallest_root(q)
    k = _is_power(z, base[0])
    if k is not None:
        exact = Fraction(k, base[1])
        return (c > exact) - (c < exact)
    a, b = c.numerator, c.denominator
    # q^a versus z^b as integers when that is cheap
    if a >= 0 and b * z.bit_length() <= 1 << 17 and a * q.bit_length() <= 1 << 17:
        lhs, rhs = q**a, z**b
        return (lhs > rhs) - (lhs < rhs)
    if a < 0:
        return -1
    return _decimal_sign(lambda: Decimal(a) / Decimal(b) - Decimal(z).ln() / Decimal(q).ln())


def _smallest_root(q: int) -> tuple[int, int]:
    """(p, m) with q = p^m."""
    for p in range(2, q + 1):
        if q % p == 0:
            k = _is_power(q, p)
            return p, k
    raise ValueError(q)


def _decimal_sign(expr, start: int = 60) -> int:
    prec = start
    while prec <= 20000:
        with localcontext() as ctx:
            ctx.prec = prec
            val = expr()
            if abs(val) > Decimal(10) ** (-(prec // 2)):
                return 1 if val > 0 else -1
        prec *= 4
    raise ArithmeticError("could not certify the sign of a logarithmic expression")


def ar_leq(x: Fraction, z: int, q: int, nd: int) -> bool:
    """x <= AR where AR = nd - log_q z, decided exactly."""
    return log_cmp(Fraction(nd) - Fraction(x), z, q) >= 0


def ar_value(z: int, q: int, nd: int) -> float:
    return nd - math.log(z) / math.log(q)


# --- sampling ---


def _randbelow(rng, n: int) -> int:
    if n < 1 << 62:
        return int(rng.integers(n))
    bits = n.bit_length()
    while True:
        words = [int(w) for w in rng.integers(0, 1 << 32, size=(bits + 31) // 32)]
        v = 0
        for w in words:
            v = (v << 32) | w
        v >>= 32 * len(words) - bits
        if v < n:
            return v


def _uniform_in_span(F, basis: np.ndarray, n: int, rng) -> np.ndarray:
    if len(basis) == 0:
        return np.zeros(n, dtype=np.int64)
    coeffs = rng.integers(0, F.q, size=len(basis))
    return F.matmul(coeffs[None, :], basis)[0]


class ZeroSetSampler:
    """Exact uniform sampling from Z(T): a prefix x' weighted by its kernel size, then a kernel vector."""

    def __init__(self, T: Tensor):
        self.T = T
        F, n, d = T.field, T.n, T.d
        caps.check("enum", F.q ** (n * (d - 1)), "zero-set sampler prefix table")
        if d == 1:
            self.prefixes = np.zeros((1, 0, n), dtype=np.int64)
            ranks = np.array([rank(F, T.matrix())])
        else:
            self.prefixes = all_points(F.q, n, d - 1)
            ranks = batch_rank(F, last_slices(T, self.prefixes))
        self.weights = [F.q ** (n - int(r)) for r in ranks]
        self.cum = list(accumulate(self.weights))
        self.total = self.cum[-1]

    def sample(self, rng) -> np.ndarray:
        T = self.T
        u = _randbelow(rng, self.total)
        k = bisect_right(self.cum, u)
        prefix = self.prefixes[k]
        point = np.zeros((T.d, T.n), dtype=np.int64)
        point[: T.d - 1] = prefix
        M = matrix_slice(T, point, T.d - 1)
        point[T.d - 1] = _uniform_in_span(T.field, kernel_basis(T.field, M), T.n, rng)
        return point


def uniform_zero_point(T: Tensor, rng) -> np.ndarray:
    return ZeroSetSampler(T).sample(rng)


@dataclass
class Resample:
    U: np.ndarray
    X: np.ndarray
    trace: list[int] = dc_field(default_factory=list)  # kernel dimensions for slots d..1

    def walk(self, i: int) -> np.ndarray:
        """U with slots i+1..d taken from X (0 <= i <= d)."""
        return np.concatenate([self.U[:i], self.X[i:]], axis=0)


def uniform_resample(T: Tensor, rng, sampler: ZeroSetSampler | None = None) -> Resample:
    """U uniform on Z(T), then X_i uniform on ker T[U_1..U_{i-1}, -, X_{i+1}..X_d]_i for i = d..1."""
    sampler = sampler or ZeroSetSampler(T)
    U = sampler.sample(rng)
    X = U.copy()
    trace = []
    F = T.field
    for i in range(T.d - 1, -1, -1):
        point = np.concatenate([U[:i], X[i:]], axis=0)
        K = kernel_basis(F, matrix_slice(T, point, i))
        trace.append(len(K))
        X[i] = _uniform_in_span(F, K, T.n, rng)
    return Resample(U, X, trace)


def resample_batch(T: Tensor, rng, size: int) -> tuple[np.ndarray, np.ndarray]:
    """``size`` independent resamples as point indices (U_idx, X_idx), vectorized through point tables."""
    F, n, d = T.field, T.n, T.d
    q = F.q
    caps.check("bruteforce", q ** (n * d), "tabulated resampling")
    from .localrank import point_tables

    Z, _ = point_tables(F, T.coeffs[None], ranks=False)
    Z = Z[0]
    zero_idx = np.nonzero(Z)[0]
    U = zero_idx[rng.integers(0, len(zero_idx), size=size)]
    X = U.copy()
    block = q**n
    for i in range(d - 1, -1, -1):
        s = block ** (d - 1 - i)
        # current walk point: U on slots < i, X on slots >= i
        hi = (U // (s * block)) * (s * block)
        lo = X % s
        base = hi + lo
        cand = base[:, None] + np.arange(block)[None, :] * s
        ok = Z[cand]
        counts = ok.sum(axis=1)
        pick = (rng.random(size) * counts).astype(np.int64)
        order = np.cumsum(ok, axis=1) - 1
        choice = np.argmax((order == pick[:, None]) & ok, axis=1)
        X = (X // (s * block)) * (s * block) + choice * s + X % s
    return U, X


# --- exact resample distributions ---


@dataclass
class DiscreteDist:
    support: list
    probs: list

    def __post_init__(self):
        if any(p < 0 for p in self.probs):
            raise ValueError("negative probability")
        if sum(self.probs, Fraction(0)) != 1:
            raise ValueError("probabilities do not sum to one")

    def as_dict(self) -> dict:
        return dict(zip(self.support, self.probs))


def zero_set_points(T: Tensor) -> list[tuple[int, ...]]:
    """Every point of Z(T) as a flat tuple, generated from prefixes and kernels."""
    F, n, d = T.field, T.n, T.d
    size = zero_set_size(T)
    caps.check("resample", size, "zero-set enumeration")
    out = []
    for X in _prefix_chunks(F.q, n, d - 1):
        mats = last_slices(T, X) if d > 1 else T.matrix()[None]
        for prefix, M in zip(X, mats):
            for y in span_elements(F, kernel_basis(F, M)):
                out.append(tuple(prefix.ravel().tolist()) + tuple(int(v) for v in y))
    return out


def resample_distribution_exact(T: Tensor, i: int) -> DiscreteDist:
    """Exact law of U with slots i+1..d replaced by X, by dynamic programming over Z(T)."""
    F, n, d = T.field, T.n, T.d
    if not 0 <= i <= d:
        raise ValueError("i must lie in 0..d")
    pts = zero_set_points(T)
    weights: dict[tuple, int] = {z: 1 for z in pts}
    denom = len(pts)
    block = F.q**n
    for j in range(d - 1, i - 1, -1):
        classes: dict[tuple, int] = {}
        for z, w in weights.items():
            key = z[: j * n] + z[(j + 1) * n :]
            classes[key] = classes.get(key, 0) + w
        new: dict[tuple, int] = {}
        for key, mass in classes.items():
            point = np.array(key[: j * n] + (0,) * n + key[j * n :], dtype=np.int64).reshape(d, n)
            K = span_elements(F, kernel_basis(F, matrix_slice(T, point, j)))
            share = mass * (block // len(K))
            for y in K:
                z = key[: j * n] + tuple(int(v) for v in y) + key[j * n :]
                new[z] = new.get(z, 0) + share
        weights = new
        denom *= block
    support = sorted(weights)
    return DiscreteDist(support, [Fraction(weights[z], denom) for z in support])


def resample_weights_dense(F, C, i: int) -> tuple[np.ndarray, np.ndarray, int]:
    """Batch version over all points: returns (weights, Z, scale) with weights/ (|Z| scale) the law."""
    from .localrank import point_tables

    C = np.asarray(C, dtype=np.int64)
    B, n = C.shape[0], C.shape[1]
    d = C.ndim - 2
    Z, _ = point_tables(F, C, ranks=False)
    block = F.q**n
    grid = Z.reshape((B,) + (block,) * d)
    w = grid.astype(np.int64)
    scale = 1
    for j in range(d - 1, i - 1, -1):
        ax = 1 + j
        mass = w.sum(axis=ax, keepdims=True)
        count = grid.sum(axis=ax, keepdims=True)
        w = grid * (mass * (block // count))
        scale *= block
    return w.reshape(B, -1), Z, scale


# --- expected slice ranks ---


def slice_rank_sums(T: Tensor, i: int) -> tuple[int, int]:
    """(sum over z in Z(T) of rank T[z]_i, |Z(T)|) via the slot-i decomposition of Z(T)."""
    F, n, d = T.field, T.n, T.d
    caps.check("enum", F.q ** (n * (d - 1)), "slice-rank enumeration")
    total_rank = 0
    total = 0
    C = np.moveaxis(T.coeffs, i, d - 1)
    S = Tensor(F, n, d, C)
    for X in _prefix_chunks(F.q, n, d - 1):
        ranks = batch_rank(F, last_slices(S, X)) if d > 1 else np.array([rank(F, T.matrix())])
        for r, c in enumerate(np.bincount(ranks, minlength=n + 1)):
            k = int(c) * F.q ** (n - r)
            total += k
            total_rank += k * r
    return total_rank, total


def expected_slice_ranks(T: Tensor) -> list[Fraction]:
    """E[rank T[z]_i] for z uniform on Z(T), for each slot i."""
    out = []
    for i in range(T.d):
        s, z = slice_rank_sums(T, i)
        out.append(Fraction(s, z))
    return out


def expected_slice_ranks_all(T: Tensor) -> list[Fraction]:
    """E[rank T[x]_i] for x uniform on all of V^d."""
    F, n, d = T.field, T.n, T.d
    out = []
    for i in range(d):
        C = np.moveaxis(T.coeffs, i, d - 1)
        S = Tensor(F, n, d, C)
        s, cnt = 0, 0
        for X in _prefix_chunks(F.q, n, d - 1):
            ranks = batch_rank(F, last_slices(S, X)) if d > 1 else np.array([rank(F, T.matrix())])
            s += int(ranks.sum())
            cnt += len(ranks)
        out.append(Fraction(s, cnt))
    return out


# --- rank trees: the law of R^p ---


@dataclass(frozen=True)
class RankTree:
    """Value at this level and (conditional probability, subtree) pairs for the next slot."""

    value: int
    children: tuple = ()

    @property
    def depth(self) -> int:
        return 1 + (self.children[0][1].depth if self.children else 0)


def rank_tree(T: Tensor, p) -> RankTree:
    """Law of R^p(T): X_d uniform on ker T[p]_d, recursing into T[X_d] at p'.

    Kernel vectors on one line give the same subtree, so each line is visited
    once and identical subtrees are merged.
    """
    p = as_point(T, p)
    return _rank_tree(T, p, {}, [0])


def _rank_tree(T: Tensor, p: np.ndarray, memo: dict, work: list) -> RankTree:
    key = (T.d, T.key())
    if key in memo:
        return memo[key]
    F = T.field
    if T.d == 1:
        node = RankTree(rank(F, T.matrix()))
    else:
        M = matrix_slice(T, p[: T.d], T.d - 1)
        K = kernel_basis(F, M)
        reps = projective_reps(F, K)
        work[0] += len(reps) + 1
        caps.check("kernel", work[0], "rank-tree construction")
        total = F.q ** len(K)
        acc: dict[RankTree, Fraction] = {}
        zero = _rank_tree(slice_last(T, np.zeros(T.n, dtype=np.int64)), p, memo, work)
        acc[zero] = Fraction(1, total)
        for x in reps:
            sub = _rank_tree(slice_last(T, x), p, memo, work)
            acc[sub] = acc.get(sub, Fraction(0)) + Fraction(F.q - 1, total)
        children = tuple(sorted(((pr, sub) for sub, pr in acc.items()), key=lambda c: _tree_sort_key(c[1])))
        node = RankTree(rank(F, M), children)
    memo[key] = node
    return node


def _tree_sort_key(t: RankTree):
    return (t.value, tuple((c[0], _tree_sort_key(c[1])) for c in t.children))


def tree_paths(tree: RankTree) -> list[tuple[tuple[int, ...], Fraction, tuple[int, ...]]]:
    """(child-index path from the root, probability, Y vector) for every leaf."""
    if not tree.children:
        return [((), Fraction(1), (tree.value,))]
    out = []
    for k, (pr, sub) in enumerate(tree.children):
        for path, q, y in tree_paths(sub):
            out.append(((k,) + path, pr * q, y + (tree.value,)))
    return out


def expected_norm(tree: RankTree) -> Fraction:
    if not tree.children:
        return Fraction(tree.value)
    return tree.value + 2 * sum((pr * expected_norm(sub) for pr, sub in tree.children), Fraction(0))


def tree_leq(tree: RankTree, r, delta: Fraction) -> bool:
    """Y is at most r in the delta-colex sense, recursing on conditional subtrees."""
    r = tuple(r)
    if not tree.children:
        return tree.value <= r[-1] if len(r) == 1 else _short(tree, r)
    if tree.value < r[-1]:
        return True
    if tree.value > r[-1]:
        return False
    mass = sum((pr for pr, sub in tree.children if tree_leq(sub, r[:-1], delta)), Fraction(0))
    return mass >= delta


def _short(tree: RankTree, r) -> bool:
    raise ValueError("rank vector length does not match the tree depth")


def prob_lr_leq(T: Tensor, p, r, delta) -> bool:
    """R^p(T) is at most r in the delta-colex sense, with exact kernel probabilities."""
    return tree_leq(rank_tree(T, p), tuple(r), Fraction(delta))


# --- pruning and the lexicographic Markov step ---


def _marginal(dist: dict, k: int) -> dict:
    out: dict = {}
    for x, pr in dist.items():
        out[x[:k]] = out.get(x[:k], Fraction(0)) + pr
    return out


def prune(dist: dict, S, deltas) -> set:
    """A nonempty T inside S whose every prefix keeps conditional mass at least delta_i."""
    deltas = [Fraction(x) for x in deltas]
    S = set(S)
    if any(x <= 0 for x in deltas):
        raise PreconditionViolated("every delta must be positive")
    mass = sum((dist.get(x, Fraction(0)) for x in S), Fraction(0))
    if sum(deltas) > mass:
        raise PreconditionViolated(f"sum of deltas {sum(deltas)} exceeds Pr[S] = {mass}")
    return _prune(dist, S, deltas)


def _prune(dist: dict, S: set, deltas: list) -> set:
    d = len(deltas)
    if d == 1:
        return set(S)
    marg = _marginal(dist, d - 1)
    inside: dict = {}
    for x in S:
        inside[x[: d - 1]] = inside.get(x[: d - 1], Fraction(0)) + dist.get(x, Fraction(0))
    S_prev = {u for u, m in inside.items() if marg.get(u, 0) > 0 and m / marg[u] >= deltas[-1]}
    T_prev = _prune(marg, S_prev, deltas[:-1])
    return {x for x in S if x[: d - 1] in T_prev}


def check_pruned(dist: dict, T: set, deltas) -> bool:
    """Every prefix u of T at level i-1 has Pr[X_<=i in T_<=i | X_<=i-1 = u] >= delta_i."""
    if not T:
        return False
    for i, delta in enumerate(deltas, start=1):
        marg_i = _marginal(dist, i)
        marg_prev = _marginal(dist, i - 1)
        T_i = {x[:i] for x in T}
        for u in {x[: i - 1] for x in T}:
            denom = marg_prev.get(u, Fraction(0))
            if denom == 0:
                return False
            num = sum((pr for v, pr in marg_i.items() if v[: i - 1] == u and v in T_i), Fraction(0))
            if num / denom < Fraction(delta):
                return False
    return True


def lex_markov_search(tree: RankTree, A, eps) -> tuple[int, ...]:
    """Some r in A with Pr[Y = r] > 0 and Y at most r in the eps/(d-1)-colex sense."""
    eps = Fraction(eps)
    paths = tree_paths(tree)
    d = len(paths[0][2])
    good = [(path, pr, y) for path, pr, y in paths if pr > 0 and A(y)]
    mass = sum((pr for _, pr, _ in good), Fraction(0))
    if mass < eps:
        raise PreconditionViolated(f"Pr[Y in A] = {mass} is below eps = {eps}")
    if d == 1:
        return good[0][2]
    delta = eps / (d - 1)
    dist: dict = {}
    for path, pr, _ in paths:
        dist[path] = dist.get(path, Fraction(0)) + pr
    kept = prune(dist, {path for path, _, _ in good}, [delta] * (d - 1))
    ys = {path: y for path, _, y in paths}
    r = colex_max(ys[path] for path in sorted(kept))
    if not tree_leq(tree, r, delta):
        raise PipelineFailed("markov", "pruned colex maximum fails the delta-order check")
    return tuple(r)


# --- the LR-vs-AR pipeline ---


def c_prime(d: int) -> Fraction:
    return Fraction(2 ** (d * (d - 1) // 2), (d - 1) ** d)


def c_const(d: int) -> Fraction:
    return 2 ** (2 * d - 1) * c_prime(d)


def field_condition(q: int, z: int, nd: int, d: int, eps: Fraction) -> bool:
    """q >= C_d (1 + AR)^(d-1) / eps with AR = nd - log_q z."""
    eps = Fraction(eps)
    if d == 1:
        return True
    Cd = c_const(d)
    if d == 2:
        # q eps / C_2 >= 1 + nd - log_q z
        c = Fraction(nd + 1) - q * eps / Cd
        return log_cmp(c, z, q) <= 0
    bound = q * eps / Cd

    def expr():
        ar = Decimal(nd) - Decimal(z).ln() / Decimal(q).ln()
        rhs = (Decimal(bound.numerator) / Decimal(bound.denominator)) ** (Decimal(1) / Decimal(d - 1))
        return rhs - (1 + ar)

    return _decimal_sign(expr) >= 0


@dataclass
class PipelineReport:
    p: list | None
    r: tuple | None
    stable: bool
    norm: int | None
    z_size: int
    ar: float
    field_ok: bool
    stages: list = dc_field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "p": self.p,
            "r": list(self.r) if self.r is not None else None,
            "stable": self.stable,
            "norm": self.norm,
            "Z_size": self.z_size,
            "ar": self.ar,
            "field_ok": self.field_ok,
            "stages": self.stages,
        }


def _prefix_candidates(T: Tensor) -> list[np.ndarray]:
    """Points (p', 0) with one representative per slotwise scaling class of p'."""
    F, n, d = T.field, T.n, T.d
    classes = _line_classes(F, n)
    caps.check("enum", len(classes) ** (d - 1), "pipeline candidate scan")
    out = []
    for idx in product(range(len(classes)), repeat=d - 1):
        p = np.zeros((d, n), dtype=np.int64)
        p[: d - 1] = classes[list(idx)]
        out.append(p)
    return out


def lr_ar_pipeline(T: Tensor, eps=1) -> PipelineReport:
    """Resample-based choice of p, Markov bound, pruning, and the stability conclusion.

    Every candidate p = (p', 0) lies in Z(T) and R^p does not depend on p_d,
    so the exact minimizer of E||R^p|| over prefix classes is at most the
    average over Z(T).  If a later stage fails at that point the next
    candidate (by expectation, then canonical order) is tried, and the path is
    recorded in the stages list.
    """
    eps = Fraction(eps)
    if not 0 < eps <= 1:
        raise ValueError("eps must lie in (0, 1]")
    F, n, d = T.field, T.n, T.d
    q = F.q
    z = zero_set_size(T)
    nd = n * d
    ar = ar_value(z, q, nd) if z != q**nd else 0.0
    field_ok = field_condition(q, z, nd, d, eps)
    stages: list = [{"stage": "zero-set", "Z_size": z, "ar": ar, "field_ok": field_ok}]
    if d == 1 or z == q**nd:
        p = np.zeros((d, n), dtype=np.int64)
        r = local_rank(T, p)
        stages.append({"stage": "trivial", "reason": "order one" if d == 1 else "zero tensor"})
        return PipelineReport(p.tolist(), r, True, norm(r), z, ar, field_ok, stages)

    total = 2**d - 1
    cands = []
    for p in _prefix_candidates(T):
        tree = rank_tree(T, p)
        cands.append((expected_norm(tree), p.ravel().tolist(), p, tree))
    cands.sort(key=lambda c: (c[0], c[1]))
    if not ar_leq(cands[0][0] / total, z, q, nd):
        raise PipelineFailed("expectation", "no candidate has E||R^p|| <= (2^d - 1) AR")
    eps1 = eps / (total + eps)
    delta = eps1 / (d - 1)
    factor = total + eps

    def in_markov_set(y) -> bool:
        return ar_leq(Fraction(norm(y)) / factor, z, q, nd)

    for rank_pos, (exp_norm, _, p, tree) in enumerate(cands):
        entry = {"stage": "candidate", "index": rank_pos, "p": p.tolist(), "E_norm": str(exp_norm)}
        stages.append(entry)
        if not ar_leq(exp_norm / total, z, q, nd):
            entry["result"] = "expectation bound fails"
            break
        paths = tree_paths(tree)
        mass = sum((pr for _, pr, y in paths if in_markov_set(y)), Fraction(0))
        entry["markov_mass"] = str(mass)
        if mass < eps1:
            entry["result"] = "markov mass below eps'"
            continue
        r = lex_markov_search(tree, in_markov_set, eps1)
        entry["r"] = list(r)
        size_ok = delta * q > math.prod(v + 1 for v in r[:-1])
        entry["delta_q_condition"] = size_ok
        lr = local_rank(T, p)
        entry["local_rank"] = list(lr)
        if size_ok:
            # the delta-order bound forces bLR <= r, while r is attained, so LR = bLR = r
            stable = lr == r and alg_local_rank_leq(T, p, r)
            entry["result"] = "stable" if stable else "inconsistent"
            if not stable:
                raise PipelineFailed("stability", f"R^p bound {r} disagrees with LR {lr}")
            return PipelineReport(p.tolist(), tuple(r), True, norm(r), z, ar, field_ok, stages)
        if alg_local_rank_leq(T, p, lr) and in_markov_set(lr):
            entry["result"] = "stable by direct check"
            return PipelineReport(p.tolist(), tuple(lr), True, norm(lr), z, ar, field_ok, stages)
        entry["result"] = "field too small for this candidate"
    if field_ok:
        raise PipelineFailed("search", "no candidate produced a stable point despite the field-size condition")
    return PipelineReport(None, None, False, None, z, ar, field_ok, stages)
