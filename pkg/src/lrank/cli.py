"""Command-line interface: ``lrank <command> [options]``.

Exit codes: 0 success, 1 verification failure, 2 precondition or usage
error, 3 size cap exceeded.  With ``--json`` every command prints one JSON
object carrying ``"schema": 1``; exact quantities are integers or rational
strings.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction

import numpy as np

from . import caps
from .decomp import decompose
from .errors import CapExceeded, LRankError, VerificationFailed
from .field import make_field
from .localrank import alg_local_rank, find_lr_stable_point, is_lr_stable, local_rank, norm
from .polarize import PolyFn, equidistribution_report, polarize, pr_extension_experiment
from .sampler import lr_ar_pipeline
from .tensor import (
    analytic_rank,
    decomposition_from_dict,
    decomposition_to_dict,
    load_tensor,
    planted_tensor,
    random_tensor,
    tensor_to_dict,
    verify_decomposition,
)

SCHEMA = 1


class UsageError(LRankError):
    pass


def _read_json(path: str):
    try:
        with open(path) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read {path}: {exc}") from exc


def _write_json(obj, path: str | None) -> None:
    if path:
        with open(path, "w") as fh:
            json.dump(obj, fh)


def _load_point(path: str, T) -> np.ndarray:
    obj = _read_json(path)
    pts = obj["point"] if isinstance(obj, dict) else obj
    p = np.asarray(pts, dtype=np.int64)
    if p.shape != (T.d, T.n):
        raise UsageError(f"point must have shape ({T.d}, {T.n}), got {p.shape}")
    return p


def _field(args):
    return make_field(args.p, args.m)


# --- commands ---


def cmd_field_info(args, rng):
    F = _field(args)
    return {"p": F.p, "m": F.m, "q": F.q, "modulus": list(F.modulus), "primitive": int(F.primitive)}


def cmd_gen(args, rng):
    F = _field(args)
    if args.planted is None:
        T = random_tensor(F, args.n, args.d, rng)
    else:
        T = planted_tensor(F, args.n, args.d, args.planted, rng)
    obj = tensor_to_dict(T)
    _write_json(obj, args.out)
    return {"seed": args.seed, "tensor": obj}


def cmd_ar(args, rng):
    T = load_tensor(args.input)
    z, ar = analytic_rank(T)
    return {"Z": z, "q": T.field.q, "nd": T.n * T.d, "ar": ar}


def cmd_lr(args, rng):
    T = load_tensor(args.input)
    p = _load_point(args.point, T)
    r = local_rank(T, p)
    return {"lr": list(r), "norm": norm(r)}


def cmd_blr(args, rng):
    T = load_tensor(args.input)
    p = _load_point(args.point, T)
    r = alg_local_rank(T, p)
    return {"blr": list(r), "stable": is_lr_stable(T, p)}


def cmd_stable_search(args, rng):
    T = load_tensor(args.input)
    found = find_lr_stable_point(T, mode=args.mode, budget=args.budget, rng=rng)
    if found is None:
        return {"seed": args.seed, "found": False}
    p, r = found
    _write_json({"point": p.tolist()}, args.out)
    return {"seed": args.seed, "found": True, "point": p.tolist(), "lr": list(r), "norm": norm(r)}


def cmd_decompose(args, rng):
    T = load_tensor(args.input)
    p = _load_point(args.point, T)
    D = decompose(T, p)
    r = local_rank(T, p)
    obj = decomposition_to_dict(T.field, D)
    _write_json(obj, args.out)
    return {"nterms": len(D), "lr": list(r), "norm": norm(r), "decomposition": obj}


def cmd_verify(args, rng):
    T = load_tensor(args.input)
    D = decomposition_from_dict(T.field, _read_json(args.decomp), T.n)
    ok, nterms = verify_decomposition(T, D)
    if not ok:
        raise VerificationFailed(f"decomposition with {nterms} terms does not sum to the tensor")
    return {"verified": True, "nterms": nterms}


def cmd_pipeline(args, rng):
    T = load_tensor(args.input)
    rep = lr_ar_pipeline(T, Fraction(args.eps))
    out = rep.to_dict()
    out["nd"] = T.n * T.d
    out["q"] = T.field.q
    return out


def cmd_polarize(args, rng):
    P = PolyFn.from_dict(_read_json(args.input))
    T = polarize(P, args.k)
    obj = tensor_to_dict(T)
    _write_json(obj, args.out)
    return {"k": T.d + 1, "tensor": obj}


def cmd_equidist(args, rng):
    Ps = [PolyFn.from_dict(_read_json(path)) for path in args.input]
    return equidistribution_report(Ps).to_dict()


def cmd_extend(args, rng):
    T = load_tensor(args.input)
    rep = pr_extension_experiment(T, args.ell, budget=args.budget, rng=rng, oracle=not args.no_oracle)
    return rep.to_dict()


def cmd_suite(args, rng):
    from .suite import run_suite

    rep = run_suite(args.level, args.seed)
    out = json.loads(rep.to_json())
    if not rep.ok:
        raise _SuiteFailed(out)
    return out


class _SuiteFailed(VerificationFailed):
    def __init__(self, report):
        failed = [r["name"] for r in report["results"] if not r["passed"]]
        super().__init__("failing properties: " + ", ".join(failed))
        self.report = report


# --- parser ---


def _global_flags(parser: argparse.ArgumentParser, suppress: bool) -> None:
    """Global flags are accepted before or after the command name."""

    def dflt(value):
        return argparse.SUPPRESS if suppress else value

    parser.add_argument("--seed", type=int, default=dflt(0), help="RNG seed (default 0)")
    parser.add_argument("--cap", action="append", default=dflt([]), metavar="NAME=INT", help="override a size cap")
    parser.add_argument("--json", action="store_true", default=dflt(False), help="print JSON")
    parser.add_argument("--quiet", action="store_true", default=dflt(False), help="suppress output")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lrank", description="Local rank, partition rank and analytic rank of tensors over finite fields.")
    _global_flags(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, fn, help_):
        sp = sub.add_parser(name, help=help_)
        _global_flags(sp, suppress=True)
        sp.set_defaults(func=fn)
        return sp

    def field_args(sp):
        sp.add_argument("--p", type=int, required=True, help="characteristic")
        sp.add_argument("--m", type=int, default=1, help="extension degree")

    sp = add("field-info", cmd_field_info, "describe GF(p^m)")
    field_args(sp)
    sp = add("gen", cmd_gen, "random or planted tensor")
    field_args(sp)
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--d", type=int, required=True)
    sp.add_argument("--planted", type=int, default=None, help="partition rank witness size")
    sp.add_argument("--out")
    sp = add("ar", cmd_ar, "zero-set size and analytic rank")
    sp.add_argument("--in", dest="input", required=True)
    for name, fn, help_ in [("lr", cmd_lr, "local rank at a point"), ("blr", cmd_blr, "algebraic local rank and stability")]:
        sp = add(name, fn, help_)
        sp.add_argument("--in", dest="input", required=True)
        sp.add_argument("--point", required=True)
    sp = add("stable-search", cmd_stable_search, "find an LR-stable point")
    sp.add_argument("--in", dest="input", required=True)
    sp.add_argument("--mode", choices=["exhaustive", "sampled"], default="exhaustive")
    sp.add_argument("--budget", type=int, default=None)
    sp.add_argument("--out")
    sp = add("decompose", cmd_decompose, "decomposition at a stable point")
    sp.add_argument("--in", dest="input", required=True)
    sp.add_argument("--point", required=True)
    sp.add_argument("--out")
    sp = add("verify", cmd_verify, "check that a decomposition sums to a tensor")
    sp.add_argument("--in", dest="input", required=True)
    sp.add_argument("--decomp", required=True)
    sp = add("pipeline", cmd_pipeline, "resampling pipeline from analytic rank to a stable point")
    sp.add_argument("--in", dest="input", required=True)
    sp.add_argument("--eps", default="1", help="rational in (0, 1]")
    sp = add("polarize", cmd_polarize, "polarization of a polynomial")
    sp.add_argument("--in", dest="input", required=True)
    sp.add_argument("--k", type=int, default=None)
    sp.add_argument("--out")
    sp = add("equidist", cmd_equidist, "equidistribution report for a polynomial tuple")
    sp.add_argument("--in", dest="input", nargs="+", required=True)
    sp = add("extend", cmd_extend, "partition rank over a field extension")
    sp.add_argument("--in", dest="input", required=True)
    sp.add_argument("--ell", type=int, required=True)
    sp.add_argument("--budget", type=int, default=None)
    sp.add_argument("--no-oracle", action="store_true")
    sp = add("suite", cmd_suite, "run the property suite")
    sp.add_argument("--level", choices=["smoke", "full"], default="smoke")
    return parser


def _emit(obj: dict, args) -> None:
    if args.quiet:
        return
    if args.json:
        print(json.dumps({"schema": SCHEMA, **obj}, default=str))
        return
    for key, val in obj.items():
        if isinstance(val, (dict, list)) and len(json.dumps(val, default=str)) > 200:
            val = "<omitted; use --json>"
        print(f"{key}: {val}")


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    caps.reset()
    try:
        for item in args.cap:
            name, _, value = item.partition("=")
            caps.set_cap(name, int(value))
    except (ValueError, KeyError) as exc:
        print(f"error: bad --cap {args.cap}: {exc}", file=sys.stderr)
        return 2
    rng = np.random.default_rng(args.seed)
    try:
        out = args.func(args, rng)
    except CapExceeded as exc:
        _fail(args, "cap_exceeded", exc)
        return 3
    except VerificationFailed as exc:
        if isinstance(exc, _SuiteFailed):
            _emit(exc.report, args)
        _fail(args, "verification_failed", exc)
        return 1
    except (LRankError, ValueError, KeyError, OSError) as exc:
        _fail(args, "precondition", exc)
        return 2
    _emit(out, args)
    return 0


def _fail(args, kind: str, exc: Exception) -> None:
    if args.json and not args.quiet:
        print(json.dumps({"schema": SCHEMA, "error": kind, "message": str(exc)}))
    print(f"error: {exc}", file=sys.stderr)


if __name__ == "__main__":
    sys.exit(main())
