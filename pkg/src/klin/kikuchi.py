"""Kikuchi matrices: vertex spaces, constructive edge generation, degrees, norms.

Three families share one representation.  A vertex is a sorted support of
size ``ell`` inside a coordinate range together with one value per support
position:

* ``even-field``: coordinates ``[0, n)``, nonzero field values;
* ``even-group``: coordinates ``[0, n)``, arbitrary group values (the pair (U, S));
* ``odd``: coordinates ``[0, 2n)`` where ``c < n`` belongs to ``U1`` and
  ``c >= n`` to ``U2``; nonzero field values.

Rank = colex(support) * B**ell + mixed-radix(values), B the number of value choices.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from itertools import combinations, product
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp

from .algebra import GroupSpec, SparseVec, annihilator_size
from .decomposition import BipartiteDecomposition
from .errors import ResourceCapError, ValidationError
from .instance import KLinInstance
from .spectral import NormResult, scaled_norm

DEFAULT_CAP_N = 2**21
DEFAULT_CAP_EDGES = 2**26


def cap_n() -> int:
    return int(os.environ.get("KLIN_CAP_N", DEFAULT_CAP_N))


def cap_edges() -> int:
    return int(os.environ.get("KLIN_CAP_EDGES", DEFAULT_CAP_EDGES))


# ---------------------------------------------------------------------------
# vertex spaces


class VertexSpace:
    KINDS = ("even-field", "even-group", "odd")

    def __init__(self, kind: str, spec: GroupSpec, n: int, ell: int, check_cap: bool = True) -> None:
        if kind not in self.KINDS:
            raise ValidationError(f"unknown vertex space {kind!r}")
        self.kind, self.spec, self.n, self.ell = kind, spec, n, ell
        self.coords = 2 * n if kind == "odd" else n
        if not 0 <= ell <= self.coords:
            raise ValidationError(f"ell={ell} out of range for {self.coords} coordinates")
        self.base = spec.order if kind == "even-group" else spec.order - 1
        self.N = self.base**ell * math.comb(self.coords, ell)
        if check_cap and self.N > cap_n():
            raise ResourceCapError(f"vertex count N={self.N} exceeds cap {cap_n()} (set KLIN_CAP_N)")
        self._binom = np.array([[math.comb(c, j) for j in range(ell + 2)] for c in range(self.coords + 1)], dtype=np.int64)
        self._vweights = self.base ** np.arange(ell - 1, -1, -1, dtype=np.int64)
        self._block = self.base**ell

    def digits(self, codes: np.ndarray) -> np.ndarray:
        return codes if self.kind == "even-group" else codes - 1

    def codes(self, digits: np.ndarray) -> np.ndarray:
        return digits if self.kind == "even-group" else digits + 1

    def colex(self, S: np.ndarray) -> np.ndarray:
        S = np.asarray(S, dtype=np.int64).reshape(-1, self.ell)
        j = np.arange(1, self.ell + 1)
        return self._binom[S, j[None, :]].sum(axis=1) if self.ell else np.zeros(S.shape[0], dtype=np.int64)

    def value_rank(self, V: np.ndarray) -> np.ndarray:
        V = np.asarray(V, dtype=np.int64)
        return self.digits(V) @ self._vweights if self.ell else np.zeros(V.shape[:-1], dtype=np.int64)

    def rank(self, support: Sequence[int], values: Sequence[int]) -> int:
        S = np.array(sorted(support), dtype=np.int64)
        order = np.argsort(np.asarray(support))
        V = np.asarray(values, dtype=np.int64)[order]
        if len(S) != self.ell:
            raise ValidationError("support size differs from ell")
        return int(self.colex(S[None, :])[0] * self._block + self.value_rank(V))

    def unrank(self, r: int) -> tuple[tuple[int, ...], tuple[int, ...]]:
        if not 0 <= r < self.N:
            raise ValidationError("rank out of range")
        c, vr = divmod(int(r), self._block)
        S = []
        for j in range(self.ell, 0, -1):
            s = j - 1
            while s + 1 <= self.coords - 1 and math.comb(s + 1, j) <= c:
                s += 1
            S.append(s)
            c -= math.comb(s, j)
        S.reverse()
        digs = []
        for _ in range(self.ell):
            vr, d = divmod(vr, self.base)
            digs.append(d)
        digs.reverse()
        vals = tuple(int(x) for x in self.codes(np.array(digs, dtype=np.int64))) if digs else ()
        return tuple(S), vals

    def all_vertices(self) -> tuple[np.ndarray, np.ndarray]:
        """Supports and values of every vertex, in rank order."""
        sups = _rows(combinations(range(self.coords), self.ell), self.ell)
        sups = sups[np.argsort(self.colex(sups), kind="stable")]
        digs = _rows(product(range(self.base), repeat=self.ell), self.ell)
        S = np.repeat(sups, digs.shape[0], axis=0)
        V = np.tile(self.codes(digs), (sups.shape[0], 1))
        return S, V

    def y_phases(self, x: Sequence[int]) -> np.ndarray:
        """Phase exponent of ``y_U = chi_U(x)`` for every vertex, rank order."""
        x = np.asarray(x, dtype=np.int64)
        S, V = self.all_vertices()
        xs = x[S % self.n] if self.kind == "odd" else x[S]
        chi = self.spec.chi
        return chi[V, xs].sum(axis=1) % self.spec.exponent if self.ell else np.zeros(S.shape[0], dtype=np.int64)


# ---------------------------------------------------------------------------
# matrices


@dataclass
class KikuchiMatrix:
    """Labeled edge list of a Hermitian Kikuchi matrix.

    ``eq``/``eq2`` hold equation positions (``eq2 = -1`` for even kinds);
    ``beta`` the scalar label; ``split`` an index of the support split used.
    """

    kind: str
    space: VertexSpace
    rows: np.ndarray
    cols: np.ndarray
    phase: np.ndarray
    eq: np.ndarray
    eq2: np.ndarray
    beta: np.ndarray
    split: np.ndarray
    delta: int
    n_types: int
    retained: int | None = None
    meta: dict = field(default_factory=dict)

    @property
    def N(self) -> int:
        return self.space.N

    @property
    def spec(self) -> GroupSpec:
        return self.space.spec

    @property
    def n_edges(self) -> int:
        return int(self.rows.size)

    @property
    def per_type(self) -> int:
        return self.delta if self.retained is None else self.retained

    def to_sparse(self) -> sp.csr_matrix:
        vals = self.spec.roots[self.phase % self.spec.exponent]
        return sp.csr_matrix((vals, (self.rows, self.cols)), shape=(self.N, self.N))

    def subset(self, mask: np.ndarray, retained: int | None = None) -> KikuchiMatrix:
        return KikuchiMatrix(self.kind, self.space, self.rows[mask], self.cols[mask], self.phase[mask],
                             self.eq[mask], self.eq2[mask], self.beta[mask], self.split[mask],
                             self.delta, self.n_types, retained, dict(self.meta))


@dataclass(frozen=True)
class Degrees:
    D: np.ndarray
    total: int
    d: float
    gamma: np.ndarray

    @property
    def trace_gamma(self) -> float:
        return float(self.gamma.sum())


def degrees(K: KikuchiMatrix) -> Degrees:
    D = np.bincount(K.rows, minlength=K.N).astype(np.int64)
    total = int(D.sum())
    if total == 0:
        raise ValidationError("no-certificate: Kikuchi matrix has no edges (d = 0)")
    d = total / K.N
    return Degrees(D, total, d, D + d)


def _rows(it: Iterable[tuple[int, ...]], width: int) -> np.ndarray:
    rows = list(it)
    return np.array(rows, dtype=np.int64).reshape(len(rows), width)


def _pair_edges(space: VertexSpace, P: np.ndarray, vP: np.ndarray, masks: np.ndarray, betas: np.ndarray,
                outside_vals: np.ndarray) -> Iterable[tuple[np.ndarray, np.ndarray, np.ndarray, int]]:
    """Yield (rowsU, colsV, beta_per_edge, split_index) for one formal support.

    For a split ``A`` (``masks[s]`` true on the U side) and scalar ``beta``:
    ``U = beta*vP`` on ``A``, ``V = -beta*vP`` on the complement, equal free
    values on ``ell - |A|`` outside coordinates.
    """
    spec = space.spec
    mul, neg = spec.mul, spec.neg
    a = P.size
    h = a // 2
    r = space.ell - h
    if r < 0:
        return
    comp = np.setdiff1d(np.arange(space.coords), P)
    if r > comp.size:
        return
    Os = _rows(combinations(comp.tolist(), r), r)
    W = _rows(product(outside_vals.tolist(), repeat=r), r)
    bv = mul[betas[:, None], vP[None, :]]  # (b, a)
    o, w, nb = Os.shape[0], W.shape[0], betas.size
    for si, mask in enumerate(masks):
        res = []
        for side_mask, sign in ((mask, 1), (~mask, -1)):
            pos = np.concatenate([np.broadcast_to(P[side_mask], (o, h)), Os], axis=1)
            sv = bv[:, side_mask] if sign > 0 else neg[bv[:, side_mask]]
            vals = np.concatenate([
                np.broadcast_to(sv[None, None, :, :], (o, w, nb, h)),
                np.broadcast_to(W[None, :, None, :], (o, w, nb, r)),
            ], axis=3)
            perm = np.argsort(pos, axis=1)
            pos_s = np.take_along_axis(pos, perm, axis=1)
            vals_s = np.take_along_axis(vals, np.broadcast_to(perm[:, None, None, :], vals.shape), axis=3)
            rk = space.colex(pos_s)[:, None, None] * space._block + space.value_rank(vals_s)
            res.append(rk.reshape(-1))
        bet = np.broadcast_to(betas[None, None, :], (o, w, nb)).reshape(-1)
        yield res[0], res[1], bet, si


def _half_masks(a: int) -> np.ndarray:
    masks = []
    for A in combinations(range(a), a // 2):
        m = np.zeros(a, dtype=bool)
        m[list(A)] = True
        masks.append(m)
    return np.array(masks, dtype=bool).reshape(-1, a)


def _odd_masks(s: int) -> np.ndarray:
    """Splits of two blocks of size ``s``: ``floor/ceil`` or ``ceil/floor`` per block."""
    lo, hi = s // 2, s - s // 2
    masks = []
    for a1, a2 in sorted({(lo, hi), (hi, lo)}):
        for A1 in combinations(range(s), a1):
            for A2 in combinations(range(s), a2):
                m = np.zeros(2 * s, dtype=bool)
                m[list(A1)] = True
                m[[s + j for j in A2]] = True
                masks.append(m)
    return np.array(masks, dtype=bool).reshape(-1, 2 * s)


def even_delta(n: int, k: int, ell: int, base: int) -> int:
    h = k // 2
    if ell < h or ell - h > n - k:
        return 0
    return math.comb(k, h) * math.comb(n - k, ell - h) * base ** (ell - h)


def odd_delta(n: int, k: int, t: int, ell: int, units: int) -> int:
    s = k - t
    if ell < s or ell - s > 2 * n - 2 * s:
        return 0
    lo, hi = s // 2, s - s // 2
    return (2 if s % 2 else 1) * math.comb(s, lo) * math.comb(s, hi) * math.comb(2 * n - 2 * s, ell - s) * units ** (ell - s)


def _edges_by_lhs(cache: dict, space: VertexSpace, P: np.ndarray, vP: np.ndarray, masks: np.ndarray,
                  betas: np.ndarray, outside_vals: np.ndarray) -> list:
    """``_pair_edges`` memoised on the formal support; geometry does not depend on the rhs."""
    key = (P.tobytes(), vP.tobytes())
    hit = cache.get(key)
    if hit is None:
        hit = cache[key] = list(_pair_edges(space, P, vP, masks, betas, outside_vals))
    return hit


def _assemble(kind, space, chunks, delta, n_types, meta) -> KikuchiMatrix:
    if chunks:
        rows, cols, ph, eq, eq2, bet, spl = (np.concatenate([c[i] for c in chunks]) for i in range(7))
    else:
        rows = cols = ph = eq = eq2 = bet = spl = np.zeros(0, dtype=np.int64)
    return KikuchiMatrix(kind, space, rows, cols, ph, eq, eq2, bet, spl, delta, n_types, None, meta)


def _check_edge_cap(count: int) -> None:
    if count > cap_edges():
        raise ResourceCapError(f"edge count {count} exceeds cap {cap_edges()} (set KLIN_CAP_EDGES)")


def build_even_field(I: KLinInstance, ell: int) -> KikuchiMatrix:
    spec, n, k = I.spec, I.n, I.k
    if not spec.is_field:
        raise ValidationError("even-field Kikuchi matrix needs a field")
    if k % 2:
        raise ValidationError("even-field Kikuchi matrix needs even k")
    if not k // 2 <= ell <= n - k // 2:
        raise ValidationError(f"ell={ell} outside [{k // 2}, {n - k // 2}]")
    if any(eq.lhs.wt != k for eq in I.equations):
        raise ValidationError("every equation must have weight exactly k")
    space = VertexSpace("even-field", spec, n, ell)
    betas = spec.nonzero
    delta = even_delta(n, k, ell, spec.order - 1)
    _check_edge_cap(I.m * betas.size * delta)
    masks = _half_masks(k)
    L = spec.exponent
    chunks = []
    cache: dict = {}
    for pos, eq in enumerate(I.equations):
        P = np.array(eq.lhs.idx, dtype=np.int64)
        vP = np.array(eq.lhs.val, dtype=np.int64)
        ph_b = spec.chi[betas, eq.rhs]
        for ru, cv, bet, si in _edges_by_lhs(cache, space, P, vP, masks, betas, spec.nonzero):
            m = ru.size
            chunks.append((ru, cv, ph_b[bet - 1] % L, np.full(m, pos), np.full(m, -1), bet, np.full(m, si)))
    return _assemble("even-field", space, chunks, delta, I.m * betas.size, {"ell": ell, "k": k, "m": I.m})


def formal_support(v: SparseVec, arity: int) -> tuple[np.ndarray, np.ndarray]:
    """``supp(v)`` padded with the smallest unused indices; zeros at padding."""
    d = v.as_dict()
    extra = [i for i in range(v.n) if i not in d][: arity - v.wt]
    if v.wt + len(extra) < arity:
        raise ValidationError("not enough coordinates to pad the support")
    P = sorted(list(d) + extra)
    return np.array(P, dtype=np.int64), np.array([d.get(i, 0) for i in P], dtype=np.int64)


def build_even_group(I: KLinInstance, ell: int, arity: int | None = None) -> KikuchiMatrix:
    spec, n = I.spec, I.n
    arity = I.k if arity is None else arity
    if arity % 2:
        raise ValidationError("even-group Kikuchi matrix needs even arity")
    if not arity // 2 <= ell <= n - arity // 2:
        raise ValidationError(f"ell={ell} outside [{arity // 2}, {n - arity // 2}]")
    if any(eq.lhs.wt > arity for eq in I.equations):
        raise ValidationError("equation weight exceeds arity")
    space = VertexSpace("even-group", spec, n, ell)
    betas = spec.nonzero
    delta = even_delta(n, arity, ell, spec.order)
    _check_edge_cap(I.m * betas.size * delta)
    masks = _half_masks(arity)
    L = spec.exponent
    allvals = np.arange(spec.order)
    chunks = []
    cache: dict = {}
    for pos, eq in enumerate(I.equations):
        P, vP = formal_support(eq.lhs, arity)
        ph_b = spec.chi[betas, eq.rhs]
        for ru, cv, bet, si in _edges_by_lhs(cache, space, P, vP, masks, betas, allvals):
            m = ru.size
            chunks.append((ru, cv, ph_b[bet - 1] % L, np.full(m, pos), np.full(m, -1), bet, np.full(m, si)))
    return _assemble("even-group", space, chunks, delta, I.m * betas.size, {"ell": ell, "k": arity, "m": I.m})


def build_odd(decomp: BipartiteDecomposition, spec: GroupSpec, n: int, k: int, ell: int) -> KikuchiMatrix:
    """Pair Kikuchi matrix ``A^(t)`` of one decomposition level."""
    if not spec.is_field:
        raise ValidationError("odd Kikuchi matrix needs a field")
    t = decomp.t
    s = k - t
    space = VertexSpace("odd", spec, n, ell)
    betas = spec.nonzero
    units = spec.order - 1
    delta = odd_delta(n, k, t, ell, units)
    n_pairs = sum(b.size * (b.size - 1) for b in decomp.buckets)
    _check_edge_cap(n_pairs * units * delta)
    masks = _odd_masks(s)
    L = spec.exponent
    chunks = []
    cache: dict = {}
    for b in decomp.buckets:
        if b.u.wt != t:
            raise ValidationError("decomposition inconsistent with t")
        ucoords = set(b.u.idx)
        rest = []
        for mem in b.members:
            if mem.vec.wt != k:
                raise ValidationError("odd pipeline needs weight-k equations")
            d = mem.vec.as_dict()
            if any(d.get(i) != a for i, a in zip(b.u.idx, b.u.val)):
                raise ValidationError("decomposition inconsistent with t")
            keep = [i for i in mem.vec.idx if i not in ucoords]
            rest.append((np.array(keep, dtype=np.int64), np.array([d[i] for i in keep], dtype=np.int64)))
        for j, j2 in ((j, j2) for j in range(b.size) for j2 in range(b.size) if j != j2):
            m1, m2 = b.members[j], b.members[j2]
            P = np.concatenate([rest[j][0], rest[j2][0] + n])
            vP = np.concatenate([rest[j][1], spec.neg[rest[j2][1]]])
            ph_b = (spec.chi[betas, m1.rhs] - spec.chi[betas, m2.rhs]) % L
            if P.size == 0:
                # t = k: self-loops on every vertex
                for bi, beta in enumerate(betas):
                    allr = np.arange(space.N, dtype=np.int64)
                    m = allr.size
                    chunks.append((allr, allr, np.full(m, ph_b[bi]), np.full(m, m1.pos), np.full(m, m2.pos),
                                   np.full(m, beta), np.zeros(m, dtype=np.int64)))
                continue
            for ru, cv, bet, si in _edges_by_lhs(cache, space, P, vP, masks, betas, spec.nonzero):
                m = ru.size
                chunks.append((ru, cv, ph_b[bet - 1], np.full(m, m1.pos), np.full(m, m2.pos), bet, np.full(m, si)))
    return _assemble("odd", space, chunks, delta, n_pairs * units, {"ell": ell, "k": k, "t": t, "n": n})


# ---------------------------------------------------------------------------
# checks and statistics


def hermitian_ok(K: KikuchiMatrix) -> bool:
    """Every edge has its transpose with negated phase exponent (exact)."""
    L = K.spec.exponent
    neg = K.spec.neg
    fwd = set(zip(K.rows.tolist(), K.cols.tolist(), K.eq.tolist(), K.eq2.tolist(), K.beta.tolist(), (K.phase % L).tolist()))
    for r, c, e, e2, b, ph in fwd:
        if (c, r, e, e2, int(neg[b]), (-ph) % L) not in fwd:
            return False
    return True


def transpose_index(K: KikuchiMatrix) -> np.ndarray:
    """Index of the transpose of each edge (same equations, negated scalar)."""
    neg = K.spec.neg
    key = {(r, c, e, e2, b): i for i, (r, c, e, e2, b) in
           enumerate(zip(K.rows.tolist(), K.cols.tolist(), K.eq.tolist(), K.eq2.tolist(), K.beta.tolist()))}
    out = np.empty(K.n_edges, dtype=np.int64)
    for i, (r, c, e, e2, b) in enumerate(zip(K.rows.tolist(), K.cols.tolist(), K.eq.tolist(), K.eq2.tolist(), K.beta.tolist())):
        out[i] = key[(c, r, e, e2, int(neg[b]))]
    return out


def type_counts(K: KikuchiMatrix) -> dict[tuple[int, int, int], int]:
    out: dict[tuple[int, int, int], int] = {}
    for e, e2, b in zip(K.eq.tolist(), K.eq2.tolist(), K.beta.tolist()):
        out[(e, e2, b)] = out.get((e, e2, b), 0) + 1
    return out


@dataclass(frozen=True)
class LocalDegreeStats:
    counts: dict[tuple[int, int, int], int]

    @property
    def max(self) -> int:
        return max(self.counts.values(), default=0)


def local_degrees(K: KikuchiMatrix) -> LocalDegreeStats:
    """``d[(U, v, 0)]`` = partners ``v'`` of ``v`` at ``U``; ``d[(U, v, 1)]`` with ``v`` second."""
    trip = set(zip(K.rows.tolist(), K.eq.tolist(), K.eq2.tolist()))
    counts: dict[tuple[int, int, int], int] = {}
    for r, e, e2 in trip:
        counts[(r, e, 0)] = counts.get((r, e, 0), 0) + 1
        counts[(r, e2, 1)] = counts.get((r, e2, 1), 0) + 1
    return LocalDegreeStats(counts)


def quadratic_form(K: KikuchiMatrix, x: Sequence[int]) -> complex:
    """``y^† A y`` with ``y_U = chi_U(x)`` (``chi_{U1}(x) chi_{U2}(x)`` for pairs)."""
    if K.n_edges == 0:
        return 0j
    L = K.spec.exponent
    y = K.space.y_phases(x)
    e = (K.phase - y[K.rows] + y[K.cols]) % L
    return complex(K.spec.roots[e].sum())


def field_beta_multiplicity(K: KikuchiMatrix) -> dict[tuple[int, int], int]:
    """Number of distinct scalars with an edge, per (vertex, equation)."""
    out: dict[tuple[int, int], set] = {}
    for r, e, b in zip(K.rows.tolist(), K.eq.tolist(), K.beta.tolist()):
        out.setdefault((r, e), set()).add(b)
    return {key: len(v) for key, v in out.items()}


def matched_half_annihilator(K: KikuchiMatrix, I: KLinInstance, row: int, pos: int, arity: int) -> tuple[int, bool]:
    """``1/λ`` of the matched half of equation ``pos`` at vertex ``row`` and whether ``U`` vanishes there."""
    S, V = K.space.unrank(row)
    P, vP = formal_support(I.equations[pos].lhs, arity)
    Uval = dict(zip(S, V))
    half = [j for j, c in enumerate(P.tolist()) if c in Uval]
    w = [int(vP[j]) for j in half]
    zero = all(Uval[int(P[j])] == 0 for j in half)
    return annihilator_size(w, I.spec), zero


def norm_of(K: KikuchiMatrix, method: str = "auto", seed: int = 0) -> tuple[NormResult, Degrees]:
    deg = degrees(K)
    return scaled_norm(K.to_sparse(), deg.gamma, method=method, seed=seed), deg


def dump(K: KikuchiMatrix) -> str:
    spec = K.spec
    lines = [f"kikuchi v1 kind={K.kind} N={K.N} L={spec.exponent}"]
    for r, c, ph in zip(K.rows.tolist(), K.cols.tolist(), (K.phase % spec.exponent).tolist()):
        lines.append(f"{r} {c} {ph}")
    return "\n".join(lines) + "\n"
