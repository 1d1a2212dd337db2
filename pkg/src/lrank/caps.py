"""Named size caps for exhaustive computations.

Every exhaustive routine checks its workload against one of these caps and
raises :class:`CapExceeded` instead of silently sampling.  The CLI can
override them with ``--cap name=value``.
"""

from __future__ import annotations

from .errors import CapExceeded

DEFAULTS = {
    "field": 2**20,  # largest field order accepted by make_field
    "enum": 2**24,  # q^(n(d-1)) for zero-set counting
    "bruteforce": 2**16,  # q^(nd) for direct enumeration over V^d
    "kernel": 2**24,  # kernel-tree size in local-rank recursions
    "sweep": 2**22,  # extension-field sweep points in the bLR decision
    "resample": 2**14,  # |Z(T)| for exact resampling distributions
    "pr_table": 2**20,  # size of the whole tensor space for brute-force PR
    "degree": 16,  # total degree of a VPoly
}

CAPS = dict(DEFAULTS)


def get(name: str) -> int:
    return CAPS[name]


def set_cap(name: str, value: int) -> None:
    if name not in DEFAULTS:
        raise KeyError(f"unknown cap {name!r}; known: {sorted(DEFAULTS)}")
    CAPS[name] = int(value)


def reset() -> None:
    CAPS.clear()
    CAPS.update(DEFAULTS)


def check(name: str, size: int, what: str = "") -> None:
    limit = CAPS[name]
    if size > limit:
        raise CapExceeded(f"{what or name}: size {size} exceeds cap {name}={limit}")
