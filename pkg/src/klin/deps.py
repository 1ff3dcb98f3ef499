"""Short linear dependencies among sparse vectors: exhaustive oracle and Kikuchi-cycle search."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from itertools import combinations, product
from math import comb
from typing import Sequence

import numpy as np

from .algebra import GroupSpec, SparseVec, as_spec
from .errors import ResourceCapError, ValidationError
from .instance import Equation, KLinInstance
from .kikuchi import build_even_field

EXHAUSTIVE_CAP = 1 << 24

__all__ = ["Dependency", "SearchResult", "verify_dependency", "find_dependency_exhaustive",
           "find_dependency_kikuchi", "kikuchi_search", "combination", "exhaustive_cost"]


@dataclass(frozen=True)
class Dependency:
    terms: tuple[tuple[int, int], ...]  # (position, coefficient), positions increasing

    def __post_init__(self) -> None:
        if len(self.terms) < 2:
            raise ValidationError("a dependency has at least two terms")
        if any(c == 0 for _, c in self.terms):
            raise ValidationError("dependency coefficients must be nonzero")

    @property
    def length(self) -> int:
        return len(self.terms)

    @property
    def positions(self) -> tuple[int, ...]:
        return tuple(p for p, _ in self.terms)


@dataclass(frozen=True)
class SearchResult:
    dependency: Dependency | None
    complete: bool
    visited: int
    cycles_checked: int


def _vectors(H) -> tuple[list[SparseVec], GroupSpec]:
    if isinstance(H, KLinInstance):
        return [eq.lhs for eq in H.equations], H.spec
    raise TypeError("expected a KLinInstance or (vectors, spec)")


def combination(H: Sequence[SparseVec], terms, spec: GroupSpec) -> dict[int, int]:
    """``Σ α_v v`` as a sparse dict (zero entries removed)."""
    acc: dict[int, int] = {}
    for pos, a in terms:
        v = H[pos]
        for i, c in zip(v.idx, v.val):
            acc[i] = int(spec.add[acc.get(i, 0), spec.mul[a, c]])
    return {i: c for i, c in acc.items() if c}


def verify_dependency(H, dep: Dependency, spec: GroupSpec | str | None = None) -> bool:
    """Exact check that ``Σ α_v v = 0`` with every ``α_v`` a unit and distinct positions."""
    if spec is None:
        H, spec = _vectors(H)
    spec = as_spec(spec)
    pos = dep.positions
    if len(set(pos)) != len(pos) or any(not 0 <= p < len(H) for p in pos):
        return False
    if any(spec.inv[a] < 0 for _, a in dep.terms):
        return False
    return not combination(H, dep.terms, spec)


def exhaustive_cost(m: int, max_size: int, units: int) -> int:
    return sum(comb(m, s) * units ** (s - 1) for s in range(2, max_size + 1))


def find_dependency_exhaustive(H, max_size: int, spec: GroupSpec | str | None = None,
                               cap: int = EXHAUSTIVE_CAP) -> Dependency | None:
    """Smallest dependency (first coefficient normalised to 1), or ``None`` if none of size ``<= max_size``."""
    if spec is None:
        H, spec = _vectors(H)
    spec = as_spec(spec)
    m = len(H)
    max_size = min(max_size, m)
    units = [int(u) for u in spec.units]
    cost = exhaustive_cost(m, max_size, len(units))
    if cost > cap:
        raise ResourceCapError(f"exhaustive dependency search needs {cost} > {cap} checks")
    n = H[0].n if H else 0
    dense = np.array([v.dense() for v in H], dtype=np.int64).reshape(m, n)
    add, mul = spec.add, spec.mul
    for s in range(2, max_size + 1):
        coefs = np.array([(1,) + c for c in product(units, repeat=s - 1)], dtype=np.int64)
        for sub in combinations(range(m), s):
            acc = np.zeros((coefs.shape[0], n), dtype=np.int64)
            for j, p in enumerate(sub):
                acc = add[acc, mul[coefs[:, j][:, None], dense[p][None, :]]]
            hit = np.flatnonzero(~acc.any(axis=1))
            if hit.size:
                c = coefs[hit[0]]
                return Dependency(tuple((p, int(a)) for p, a in zip(sub, c)))
    return None


def _pair_vectors(H: Sequence[SparseVec], spec: GroupSpec) -> tuple[list[SparseVec], list[tuple[int, int, int]]]:
    """``v - s v'`` for pairs overlapping in exactly one coordinate, scaled to cancel it."""
    out, meta = [], []
    for a, b in combinations(range(len(H)), 2):
        v, w = H[a], H[b]
        shared = set(v.idx) & set(w.idx)
        if len(shared) != 1:
            continue
        i = shared.pop()
        s = int(spec.mul[v.as_dict()[i], spec.inv[w.as_dict()[i]]])
        out.append(v.minus(w.scale(s, spec), spec))
        meta.append((a, b, s))
    return out, meta


def _bfs(H: Sequence[SparseVec], spec: GroupSpec, ell: int, budget: int | None, order_seed: int | None,
         accept) -> SearchResult:
    arity = H[0].wt
    inst = KLinInstance(spec, H[0].n, arity, tuple(Equation(v, 0) for v in H))
    K = build_even_field(inst, ell)
    N = K.N
    order = np.argsort(K.rows, kind="stable")
    rows, cols, eqs, betas = K.rows[order], K.cols[order], K.eq[order], K.beta[order]
    ptr = np.searchsorted(rows, np.arange(N + 1))
    active = np.unique(rows)
    if order_seed is not None:
        active = np.random.default_rng(order_seed).permutation(active)
    label: dict[int, dict[int, int]] = {}
    add, mul, neg = spec.add, spec.mul, spec.neg
    visited = checked = 0
    for start in active.tolist():
        if start in label:
            continue
        label[start] = {}
        queue = deque([start])
        while queue:
            w = queue.popleft()
            visited += 1
            if budget is not None and visited > budget:
                return SearchResult(None, False, visited, checked)
            Lw = label[w]
            for e in range(ptr[w], ptr[w + 1]):
                w2, pos, beta = int(cols[e]), int(eqs[e]), int(betas[e])
                combo = dict(Lw)
                combo[pos] = int(add[combo.get(pos, 0), beta])
                if w2 not in label:
                    label[w2] = {p: c for p, c in combo.items() if c}
                    queue.append(w2)
                    continue
                for p, c in label[w2].items():
                    combo[p] = int(add[combo.get(p, 0), neg[c]])
                combo = {p: c for p, c in combo.items() if c}
                if not combo:
                    continue
                checked += 1
                dep = accept(combo)
                if dep is not None:
                    return SearchResult(dep, True, visited, checked)
    return SearchResult(None, True, visited, checked)


def kikuchi_search(H, ell: int, spec: GroupSpec | str | None = None, walk_budget: int | None = None,
                   seed: int | None = None) -> SearchResult:
    """BFS over the level-``ell`` Kikuchi graph; every non-tree edge closes a walk whose label sum is tested."""
    if spec is None:
        H, spec = _vectors(H)
    spec = as_spec(spec)
    if not spec.is_field:
        raise ValidationError("Kikuchi dependency search needs a field")
    H = list(H)
    if len(H) < 2:
        return SearchResult(None, True, 0, 0)
    k = H[0].wt
    if any(v.wt != k for v in H):
        raise ValidationError("all vectors must have the same weight k")
    if k % 2 == 0:
        def accept(combo):
            dep = Dependency(tuple(sorted(combo.items())))
            return dep if verify_dependency(H, dep, spec) else None
        return _bfs(H, spec, ell, walk_budget, seed, accept)
    P, meta = _pair_vectors(H, spec)
    if len(P) < 2:
        return SearchResult(None, True, 0, 0)

    def accept_pairs(combo):
        acc: dict[int, int] = {}
        for j, c in combo.items():
            a, b, s = meta[j]
            acc[a] = int(spec.add[acc.get(a, 0), c])
            acc[b] = int(spec.add[acc.get(b, 0), spec.neg[spec.mul[c, s]]])
        terms = tuple(sorted((p, c) for p, c in acc.items() if c))
        if len(terms) < 2:
            return None
        dep = Dependency(terms)
        return dep if verify_dependency(H, dep, spec) else None
    return _bfs(P, spec, ell, walk_budget, seed, accept_pairs)


def find_dependency_kikuchi(H, ell: int, walk_budget: int | None = None, seed: int | None = None,
                            spec: GroupSpec | str | None = None) -> Dependency | None:
    return kikuchi_search(H, ell, spec, walk_budget, seed).dependency
