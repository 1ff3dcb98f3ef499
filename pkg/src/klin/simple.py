"""Local brute-force refuter over all ell-subsets of variables."""

from __future__ import annotations

from fractions import Fraction
from itertools import combinations
from math import comb

from .errors import ResourceCapError, ValidationError
from .instance import BRUTE_FORCE_CAP, Equation, KLinInstance, brute_force_val
from .algebra import SparseVec
from .refute import Certificate

__all__ = ["simple_refute", "local_instance"]


def local_instance(I: KLinInstance, S: tuple[int, ...], positions: list[int]) -> KLinInstance:
    """Equations at ``positions`` re-indexed onto the variables ``S``."""
    where = {c: j for j, c in enumerate(S)}
    eqs = []
    for p in positions:
        eq = I.equations[p]
        eqs.append(Equation(SparseVec(tuple(where[i] for i in eq.lhs.idx), eq.lhs.val, len(S)), eq.rhs))
    return KLinInstance(I.spec, len(S), I.k, tuple(eqs))


def simple_refute(I: KLinInstance, ell: int, variant: str = "random", eps: float = 0.5,
                  cap: int = BRUTE_FORCE_CAP, work_cap: int = 1 << 28) -> Certificate:
    """``alg_val = Σ_S alg(I_S)|H_S| / (|H| C(n-k, ℓ-k))`` with exact per-bucket optima."""
    if variant not in ("random", "semirandom"):
        raise ValidationError(f"unknown variant {variant!r}")
    n, k, m = I.n, I.k, I.m
    if m == 0:
        raise ValidationError("empty instance")
    if not k <= ell <= n:
        raise ValidationError(f"need k <= l <= n, got l={ell}")
    q = I.spec.order
    if q**ell > cap:
        raise ResourceCapError(f"|G|^l = {q**ell} exceeds per-subset cap {cap}")
    if comb(n, ell) * q**ell > work_cap:
        raise ResourceCapError(f"C(n,l)|G|^l = {comb(n, ell) * q**ell} exceeds work cap {work_cap}")
    norm = comb(n - k, ell - k)
    C = Fraction(comb(n, ell), norm)
    sparse_below = Fraction(eps).limit_denominator(10**9) / (2 * C) * m
    supports = [frozenset(eq.lhs.idx) for eq in I.equations]
    total = Fraction(0)
    n_sparse = n_solved = 0
    for S in combinations(range(n), ell):
        Sset = set(S)
        pos = [p for p, sup in enumerate(supports) if sup <= Sset]
        if not pos:
            continue
        if variant == "semirandom" and len(pos) < sparse_below:
            total += len(pos)
            n_sparse += 1
            continue
        v, _ = brute_force_val(local_instance(I, S, pos), cap=cap)
        total += v * len(pos)
        n_solved += 1
    val = total / (m * norm)
    trail = [{"stage": "simple", "normalizer": norm, "exact": str(val), "buckets_solved": n_solved,
              "buckets_sparse": n_sparse}]
    return Certificate(float(val), f"simple-{variant}", {"ell": ell, "eps": eps, "variant": variant, "k": k, "n": n,
                                                         "m": m, "group": str(I.spec)}, trail, "exact")
