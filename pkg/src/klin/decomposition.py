"""Regular bipartite decompositions of k-LIN instances and their audit."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations

from .algebra import GroupSpec, SparseVec, is_prefix
from .errors import ValidationError
from .instance import Equation, KLinInstance


@dataclass(frozen=True)
class Member:
    """Equation ``pos`` scaled by the unit ``scalar``: ``vec = scalar*v``, ``rhs = scalar*b``."""

    pos: int
    scalar: int
    vec: SparseVec
    rhs: int


@dataclass(frozen=True)
class Bucket:
    u: SparseVec
    t: int
    members: tuple[Member, ...]
    leftover: bool = False

    @property
    def size(self) -> int:
        return len(self.members)


@dataclass(frozen=True)
class BipartiteDecomposition:
    t: int
    buckets: tuple[Bucket, ...]
    taus: dict[int, int] = field(compare=False)

    @property
    def n_buckets(self) -> int:
        return len(self.buckets)

    @property
    def n_equations(self) -> int:
        return sum(b.size for b in self.buckets)

    @property
    def positions(self) -> list[int]:
        return [mem.pos for b in self.buckets for mem in b.members]

    def subinstance(self, I: KLinInstance) -> KLinInstance:
        eqs = [Equation(mem.vec, mem.rhs) for b in self.buckets for mem in b.members]
        return I.with_equations(eqs)


def default_taus(n: int, k: int, ell: int, eps: float, units: int) -> dict[int, int]:
    base = n * units / ell
    return {t: math.ceil(max(1.0, base ** (k / 2 - t)) * 4 * k * k / eps**2) for t in range(1, k + 1)}


def _canonical(vals: tuple[int, ...], spec: GroupSpec) -> tuple[tuple[int, ...], int]:
    """Smallest unit multiple of ``vals`` and the smallest unit reaching it."""
    mul = spec.mul
    if spec.is_field:
        beta = int(spec.inv[vals[0]])
        return tuple(int(mul[beta, a]) for a in vals), beta
    best: tuple[int, ...] | None = None
    best_beta = 1
    for beta in spec.units:
        cand = tuple(int(mul[beta, a]) for a in vals)
        if best is None or cand < best:
            best, best_beta = cand, int(beta)
    assert best is not None
    return best, best_beta


def _member(I: KLinInstance, pos: int, beta: int) -> Member:
    spec = I.spec
    eq = I.equations[pos]
    return Member(pos, beta, eq.lhs.scale(beta, spec), int(spec.mul[beta, eq.rhs]))


def regular_decompose(I: KLinInstance, ell: int, eps: float, taus: dict[int, int] | None = None) -> list[BipartiteDecomposition]:
    """Greedy regular decomposition, one entry per ``t = 1..k`` (t descending order of construction)."""
    spec = I.spec
    k, n = I.k, I.n
    if taus is None:
        taus = default_taus(n, k, ell, eps, len(spec.units))
    taus = {t: int(taus[t]) for t in range(1, k + 1)}
    remaining = set(range(I.m))
    out: dict[int, list[Bucket]] = {t: [] for t in range(1, k + 1)}
    for t in range(k, 0, -1):
        tau = taus[t]
        cand: dict[tuple, dict[int, int]] = {}
        for pos in sorted(remaining):
            v = I.equations[pos].lhs
            if v.wt < t:
                continue
            for T in combinations(range(v.wt), t):
                vals, beta = _canonical(tuple(v.val[j] for j in T), spec)
                key = tuple(zip((v.idx[j] for j in T), vals))
                cand.setdefault(key, {})[pos] = beta
        while True:
            best_key, best_cnt = None, 0
            for key, d in cand.items():
                c = len(d)
                if c > best_cnt or (c == best_cnt and c > 0 and best_key is not None and key < best_key):
                    best_key, best_cnt = key, c
            if best_key is None or best_cnt < tau:
                break
            chosen = sorted(cand[best_key].items())[:tau]
            members = tuple(_member(I, pos, beta) for pos, beta in chosen)
            u = SparseVec(tuple(i for i, _ in best_key), tuple(a for _, a in best_key), n)
            out[t].append(Bucket(u, t, members))
            gone = {pos for pos, _ in chosen}
            remaining -= gone
            for key in list(cand):
                d = cand[key]
                for pos in gone & d.keys():
                    del d[pos]
                if not d:
                    del cand[key]
    # leftovers keyed by the first (unit) coordinate
    left: dict[tuple[int, int], list[Member]] = {}
    for pos in sorted(remaining):
        v = I.equations[pos].lhs
        if v.wt == 0:
            raise ValidationError(f"equation {pos} has empty left-hand side")
        unit_js = [j for j, a in enumerate(v.val) if spec.inv[a] >= 0]
        if unit_js:
            j = unit_js[0]
            beta = int(spec.inv[v.val[j]])
            key = (v.idx[j], 1)
        else:
            beta = 1
            key = (v.idx[0], v.val[0])
        left.setdefault(key, []).append(_member(I, pos, beta))
    for key in sorted(left):
        u = SparseVec((key[0],), (key[1],), n)
        out[1].append(Bucket(u, 1, tuple(left[key]), leftover=True))
    return [BipartiteDecomposition(t, tuple(out[t]), dict(taus)) for t in range(1, k + 1)]


# ---------------------------------------------------------------------------
# audit


@dataclass
class AuditReport:
    partition: bool = True
    prefix: bool = True
    sizes: bool = True
    bucket_count: bool = True
    regularity: bool = True
    messages: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.partition and self.prefix and self.sizes and self.bucket_count and self.regularity

    def fail(self, item: str, msg: str) -> None:
        setattr(self, item, False)
        self.messages.append(f"{item}: {msg}")


def _orbit(vals: tuple[int, ...], spec: GroupSpec) -> frozenset[tuple[int, ...]]:
    return frozenset(tuple(int(spec.mul[g, a]) for a in vals) for g in spec.units)


def audit_decomposition(I: KLinInstance, decomps: list[BipartiteDecomposition], check_bucket_count: bool = True) -> AuditReport:
    """Re-check every structural guarantee of :func:`regular_decompose` from scratch."""
    spec = I.spec
    rep = AuditReport()
    k = I.k
    taus = decomps[0].taus if decomps else {}
    seen: list[int] = []
    for D in decomps:
        t = D.t
        for b in D.buckets:
            if b.u.wt != t:
                rep.fail("prefix", f"bucket u has weight {b.u.wt} at level {t}")
            for mem in b.members:
                seen.append(mem.pos)
                src = I.equations[mem.pos]
                if spec.inv[mem.scalar] < 0:
                    rep.fail("prefix", f"scalar {mem.scalar} is not a unit")
                expect = {i: int(spec.mul[mem.scalar, a]) for i, a in zip(src.lhs.idx, src.lhs.val)}
                if mem.vec.as_dict() != {i: a for i, a in expect.items() if a}:
                    rep.fail("prefix", f"position {mem.pos}: stored vector is not the scaled original")
                if mem.rhs != int(spec.mul[mem.scalar, src.rhs]):
                    rep.fail("prefix", f"position {mem.pos}: rhs not scaled")
                if not is_prefix(b.u, mem.vec):
                    rep.fail("prefix", f"position {mem.pos}: u not contained in scaled vector")
            tau = taus[t]
            if t != 1 and b.size != tau:
                rep.fail("sizes", f"level {t} bucket has {b.size} members, expected {tau}")
            if t == 1 and b.size > tau:
                rep.fail("sizes", f"level 1 bucket has {b.size} > {tau} members")
            # regularity within the bucket
            for t2 in range(t + 1, k + 1):
                counts: dict[tuple, int] = {}
                for mem in b.members:
                    v = mem.vec
                    for T in combinations(range(v.wt), t2):
                        orb = _orbit(tuple(v.val[j] for j in T), spec)
                        key = (tuple(v.idx[j] for j in T), orb)
                        counts[key] = counts.get(key, 0) + 1
                worst = max(counts.values(), default=0)
                if worst >= taus[t2]:
                    rep.fail("regularity", f"level {t} bucket has {worst} >= tau_{t2}={taus[t2]} sharing a weight-{t2} prefix")
        if check_bucket_count and D.n_buckets > 2 * I.m / taus[t]:
            rep.fail("bucket_count", f"|U^({t})| = {D.n_buckets} > 2|H|/tau_{t} = {2 * I.m / taus[t]:.3f}")
    if sorted(seen) != list(range(I.m)):
        rep.fail("partition", "positions do not form a partition of the equation list")
    return rep
