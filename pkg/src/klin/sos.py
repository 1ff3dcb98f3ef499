"""Max-entropy pseudo-expectations for k-LIN over fields, their checks, and expansion oracles."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from itertools import combinations, product
from math import comb

import numpy as np

from .algebra import GroupSpec, SparseVec, as_spec
from .deps import EXHAUSTIVE_CAP, exhaustive_cost
from .errors import ResourceCapError, ValidationError
from .instance import KLinInstance

ENTRY_CAP = 1 << 20
DENSE_INDEX_CAP = 1 << 24

__all__ = ["PseudoExpectation", "PEReport", "BooleanPE", "build_max_entropy", "point_pe", "verify_pe",
           "to_boolean_pe", "expansion_check", "find_refutation_exhaustive", "dump_pe", "parse_pe"]


@dataclass
class PseudoExpectation:
    """Partial map from representative vectors (dense digit rows) to phase exponents mod ``p``."""

    spec: GroupSpec
    n: int
    d: int
    vecs: np.ndarray  # (E, n) element codes
    exps: np.ndarray  # (E,) exponent of the phase
    parents: np.ndarray  # (E, 2): indices (U, V) with W = U - V; -1 for seeds
    status: str = "complete"
    error_at: tuple[int, ...] | None = None
    _index: dict[int, int] = field(default_factory=dict, repr=False)

    @property
    def size(self) -> int:
        return int(self.exps.size)

    @property
    def complete(self) -> bool:
        return self.status == "complete"

    def key(self, vec) -> int:
        q = self.spec.order
        out = 0
        for a in vec:
            out = out * q + int(a)
        return out

    def lookup(self, vec) -> int | None:
        """Exponent at ``vec`` (dense sequence) or ``None`` if undefined."""
        i = self._index.get(self.key(vec))
        return None if i is None else int(self.exps[i])

    def value(self, vec) -> complex:
        e = self.lookup(vec)
        return 0j if e is None else complex(self.spec.roots[e % self.spec.exponent])

    def reindex(self) -> None:
        q = self.spec.order
        pw = q ** np.arange(self.n - 1, -1, -1, dtype=np.int64)
        self._index = {int(c): i for i, c in enumerate((self.vecs @ pw).tolist())}

    def replay(self) -> bool:
        """Recompute every derived phase from its parents."""
        L = self.spec.exponent
        for i, (a, b) in enumerate(self.parents.tolist()):
            if a < 0:
                continue
            if (self.exps[a] - self.exps[b] - self.exps[i]) % L:
                return False
            if not np.array_equal(self.spec.sub[self.vecs[a], self.vecs[b]], self.vecs[i]):
                return False
        return True


class _Store:
    def __init__(self, spec: GroupSpec, n: int, cap: int) -> None:
        self.spec, self.n, self.cap = spec, n, cap
        q = spec.order
        self.pw = q ** np.arange(n - 1, -1, -1, dtype=np.int64)
        self.dense = q**n <= DENSE_INDEX_CAP
        self.slot = np.full(q**n, -1, dtype=np.int64) if self.dense else None
        self.map: dict[int, int] = {}
        self.vecs = np.zeros((64, n), dtype=np.int64)
        self.exps = np.zeros(64, dtype=np.int64)
        self.par = np.full((64, 2), -1, dtype=np.int64)
        self.E = 0

    def find(self, codes: np.ndarray) -> np.ndarray:
        if self.dense:
            return self.slot[codes]
        return np.array([self.map.get(int(c), -1) for c in codes.tolist()], dtype=np.int64)

    def add(self, vec: np.ndarray, code: int, e: int, a: int, b: int) -> int:
        if self.E >= self.cap:
            raise ResourceCapError(f"pseudo-expectation exceeds {self.cap} entries")
        if self.E == self.exps.size:
            grow = self.exps.size
            self.vecs = np.vstack([self.vecs, np.zeros((grow, self.n), dtype=np.int64)])
            self.exps = np.concatenate([self.exps, np.zeros(grow, dtype=np.int64)])
            self.par = np.vstack([self.par, np.full((grow, 2), -1, dtype=np.int64)])
        i = self.E
        self.vecs[i], self.exps[i], self.par[i] = vec, e, (a, b)
        if self.dense:
            self.slot[code] = i
        else:
            self.map[code] = i
        self.E += 1
        return i


def build_max_entropy(I: KLinInstance, d: int, order: str = "fifo", cap: int = ENTRY_CAP) -> PseudoExpectation:
    """Seed ``E[y_{βv}] = ω^{Tr(βb)}`` and close under ``(U, V) -> U - V`` with ``wt(U - V) <= d``."""
    spec = I.spec
    if not spec.is_field:
        raise ValidationError("pseudo-expectations are defined for fields only")
    if d < I.k:
        raise ValidationError(f"degree d={d} must be at least k={I.k}")
    if order not in ("fifo", "lifo"):
        raise ValidationError("order must be fifo or lifo")
    n, L = I.n, spec.exponent
    st = _Store(spec, n, cap)
    sub, chi = spec.sub, spec.chi
    work: deque[int] = deque()
    err: list[tuple[int, ...]] = []

    def put(vec: np.ndarray, e: int, a: int, b: int) -> bool:
        code = int(vec @ st.pw)
        j = int(st.find(np.array([code]))[0])
        if j >= 0:
            if (st.exps[j] - e) % L:
                err.append(tuple(int(c) for c in vec))
                return False
            return True
        work.append(st.add(vec, code, e % L, a, b))
        return True

    put(np.zeros(n, dtype=np.int64), 0, -1, -1)
    for eq in I.equations:
        v = eq.lhs.dense()
        for beta in spec.nonzero:
            if not put(spec.mul[beta, v], int(chi[beta, eq.rhs]), -1, -1):
                return _finish(st, I, d, err)
    while work:
        w = work.popleft() if order == "fifo" else work.pop()
        E = st.E
        X = st.vecs[:E]
        for sign in (1, -1):
            D = sub[st.vecs[w][None, :], X] if sign == 1 else sub[X, st.vecs[w][None, :]]
            ok = np.count_nonzero(D, axis=1) <= d
            if not ok.any():
                continue
            idx = np.flatnonzero(ok)
            D = D[idx]
            e = sign * (st.exps[w] - st.exps[idx])
            codes = D @ st.pw
            have = st.find(codes)
            old = have >= 0
            bad = old & ((st.exps[np.where(old, have, 0)] - e) % L != 0)
            if bad.any():
                err.append(tuple(int(c) for c in D[np.flatnonzero(bad)[0]]))
                return _finish(st, I, d, err)
            new = np.flatnonzero(~old)
            if new.size == 0:
                continue
            uc, first = np.unique(codes[new], return_index=True)
            for j, c in zip(new[first].tolist(), uc.tolist()):
                a, b = (w, int(idx[j])) if sign == 1 else (int(idx[j]), w)
                st.add(D[j], int(c), int(e[j]) % L, a, b)
                work.append(st.E - 1)
            # duplicates inside the batch must agree with the first copy
            clash = np.flatnonzero((st.exps[st.find(codes[new])] - e[new]) % L)
            if clash.size:
                err.append(tuple(int(c) for c in D[new[clash[0]]]))
                return _finish(st, I, d, err)
    return _finish(st, I, d, err)


def _finish(st: _Store, I: KLinInstance, d: int, err: list) -> PseudoExpectation:
    pe = PseudoExpectation(I.spec, I.n, d, st.vecs[:st.E].copy(), st.exps[:st.E].copy(), st.par[:st.E].copy(),
                           "error" if err else "complete", err[0] if err else None)
    pe.reindex()
    return pe


def point_pe(spec: GroupSpec | str, x, d: int) -> PseudoExpectation:
    """The genuine expectation at a point ``x``: every ``W`` with ``wt(W) <= d`` gets ``χ(W·x)``."""
    spec = as_spec(spec)
    x = np.asarray(x, dtype=np.int64)
    n = x.size
    rows = [np.zeros(n, dtype=np.int64)]
    for s in range(1, min(d, n) + 1):
        for T in combinations(range(n), s):
            for vals in product(spec.nonzero.tolist(), repeat=s):
                w = np.zeros(n, dtype=np.int64)
                w[list(T)] = vals
                rows.append(w)
    V = np.array(rows)
    dot = np.zeros(len(rows), dtype=np.int64)
    for i in range(n):
        dot = spec.add[dot, spec.mul[V[:, i], x[i]]]
    pe = PseudoExpectation(spec, n, d, V, spec.chi[1, dot].astype(np.int64), np.full((len(rows), 2), -1))
    pe.reindex()
    return pe


# ---------------------------------------------------------------------------
# verification


@dataclass
class PEReport:
    normalization: bool = True
    validity: bool = True
    consistency: bool = True
    closure: bool = True
    positivity: bool = True
    objective: bool = True
    min_eig: float = 1.0
    rank1_err: float = 0.0
    n_classes: int = 0
    messages: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all((self.normalization, self.validity, self.consistency, self.closure, self.positivity, self.objective))

    def fail(self, item: str, msg: str) -> None:
        setattr(self, item, False)
        self.messages.append(f"{item}: {msg}")


def moment_classes(pe: PseudoExpectation) -> list[np.ndarray]:
    """Entries of weight ``<= d/2`` grouped by ``u ~ v`` iff ``u - v`` is defined."""
    wt = np.count_nonzero(pe.vecs, axis=1)
    half = np.flatnonzero(wt <= pe.d // 2)
    left = list(half.tolist())
    sub = pe.spec.sub
    out = []
    while left:
        w0 = left[0]
        rest = np.array(left)
        D = sub[pe.vecs[rest], pe.vecs[w0][None, :]]
        inside = np.array([pe.key(r) in pe._index for r in D.tolist()])
        cls = rest[inside]
        out.append(cls)
        taken = set(cls.tolist())
        left = [i for i in left if i not in taken]
    return out


def moment_matrix(pe: PseudoExpectation, cls: np.ndarray) -> np.ndarray:
    spec = pe.spec
    V = pe.vecs[cls]
    pw = spec.order ** np.arange(pe.n - 1, -1, -1, dtype=np.int64)
    codes = spec.sub[V[:, None, :], V[None, :, :]] @ pw
    idx = np.vectorize(lambda c: pe._index.get(int(c), -1), otypes=[np.int64])(codes)
    M = np.where(idx >= 0, spec.roots[pe.exps[np.maximum(idx, 0)] % spec.exponent], 0)
    return M.astype(complex)


def verify_pe(pe: PseudoExpectation, I: KLinInstance, d: int | None = None, spot: int = 500, seed: int = 0) -> PEReport:
    """Normalization, validity, consistency, closure, positivity and objective checks."""
    rep = PEReport()
    if not pe.complete:
        rep.fail("closure", f"pseudo-expectation is in error state at {pe.error_at}")
        return rep
    spec, n = pe.spec, pe.n
    d = pe.d if d is None else d
    L = spec.exponent
    if pe.lookup([0] * n) != 0:
        rep.fail("normalization", "E[1] != 1")
    rng = np.random.default_rng(seed)
    E = pe.size
    add, sub, mul = spec.add, spec.sub, spec.mul
    p = spec.p
    for _ in range(spot):
        U = pe.vecs[rng.integers(E)]
        i = int(rng.integers(n))
        a, b = (int(c) for c in rng.integers(0, spec.order, size=2))
        # y_{i,a}^p = 1: adding a p times to U leaves the representative unchanged
        W = U.copy()
        for _ in range(p):
            W[i] = add[W[i], a]
        if not np.array_equal(W, U):
            rep.fail("validity", f"y^p representative differs at coordinate {i}")
        # y_{i,a} conj(y_{i,b}) = y_{i,a-b}
        W1 = U.copy()
        W1[i] = sub[add[W1[i], a], b]
        W2 = U.copy()
        W2[i] = add[W2[i], sub[a, b]]
        if not np.array_equal(W1, W2) or pe.lookup(W1) != pe.lookup(W2):
            rep.fail("consistency", f"y_a conj(y_b) != y_(a-b) at coordinate {i}")
        V = pe.vecs[rng.integers(E)]
        D = sub[U, V]
        if np.count_nonzero(D) <= d:
            eD = pe.lookup(D)
            if eD is None or (eD - pe.lookup(U) + pe.lookup(V)) % L:
                rep.fail("closure", "E[y_(U-V)] != E[y_U] conj(E[y_V])")
        eneg = pe.lookup(spec.neg[U])
        if eneg is None or (eneg + pe.lookup(U)) % L:
            rep.fail("closure", "negation is not conjugation")
    if len(rep.messages) > 20:
        rep.messages = rep.messages[:20]
    for j, eq in enumerate(I.equations):
        v = eq.lhs.dense()
        for beta in spec.nonzero:
            e = pe.lookup(mul[beta, v])
            if e is None or (e - spec.chi[beta, eq.rhs]) % L:
                rep.fail("objective", f"equation {j}, beta={beta}")
    classes = moment_classes(pe)
    rep.n_classes = len(classes)
    for cls in classes:
        M = moment_matrix(pe, cls)
        w = np.linalg.eigvalsh(M)
        rep.min_eig = min(rep.min_eig, float(w.min()))
        if w.min() < -1e-8:
            rep.fail("positivity", f"class of size {cls.size} has eigenvalue {w.min():.3g}")
        g = M[:, 0]
        rep.rank1_err = max(rep.rank1_err, float(np.linalg.norm(M - np.outer(g, g.conj()))))
    return rep


# ---------------------------------------------------------------------------
# indicator form


@dataclass
class BooleanPE:
    spec: GroupSpec
    n: int
    d: int
    tables: dict[tuple[int, ...], np.ndarray]
    objective: float
    sum_rule_err: float
    imag_err: float
    booleanity_err: float

    def moment(self, factors: dict[int, int]) -> float:
        """``E'[prod_i x_{i, a_i}]`` for distinct variables."""
        T = tuple(sorted(factors))
        tab = self.tables.get(T)
        if tab is None:
            raise ValidationError(f"monomial degree {len(T)} exceeds table degree {self.d}")
        return float(tab[tuple(factors[i] for i in T)])

    @property
    def ok(self) -> bool:
        return bool(self.sum_rule_err <= 1e-9 and self.imag_err <= 1e-9 and self.booleanity_err <= 1e-9)


def _char_matrix(spec: GroupSpec) -> np.ndarray:
    """``C[a, b] = ω^{-Tr(b a)}`` for the indicator expansion."""
    L = spec.exponent
    return spec.roots[(-spec.chi.T) % L]


def indicator_table(pe: PseudoExpectation, T: tuple[int, ...]) -> np.ndarray:
    """``E'[prod_{i in T} x_{i, a_i}]`` for every ``a`` in ``F^T`` (complex, before the realness check)."""
    spec, n, q = pe.spec, pe.n, pe.spec.order
    s = len(T)
    f = np.zeros((q,) * s, dtype=complex)
    for beta in product(range(q), repeat=s):
        vec = [0] * n
        for i, b in zip(T, beta):
            vec[i] = b
        f[beta] = pe.value(vec)
    C = _char_matrix(spec) / q
    for ax in range(s):
        f = np.moveaxis(np.tensordot(C, f, axes=([1], [ax])), 0, ax)
    return f


def to_boolean_pe(pe: PseudoExpectation, d: int, I: KLinInstance | None = None, seed: int = 0,
                  spot: int = 200) -> BooleanPE:
    """Indicator moments up to degree ``d`` via ``x_{i,a} -> (1/|F|) Σ_b ω^{-Tr(ba)} y_{i,b}``."""
    if not pe.complete:
        raise ValidationError("pseudo-expectation is not complete")
    if d > pe.d:
        raise ValidationError(f"degree {d} exceeds pseudo-expectation degree {pe.d}")
    spec, n = pe.spec, pe.n
    tables: dict[tuple[int, ...], np.ndarray] = {(): np.array(1.0 + 0j)}
    for s in range(1, min(d, n) + 1):
        for T in combinations(range(n), s):
            tables[T] = indicator_table(pe, T)
    imag = max(float(np.max(np.abs(t.imag))) for t in tables.values())
    sum_err = 0.0
    for T, tab in tables.items():
        for j, i in enumerate(T):
            parent = tables[T[:j] + T[j + 1:]]
            sum_err = max(sum_err, float(np.max(np.abs(tab.sum(axis=j) - parent))))
    # booleanity: x_{i,a} x_{i,a'} expands to delta(a,a') x_{i,a}
    rng = np.random.default_rng(seed)
    C = _char_matrix(spec) / spec.order
    bool_err = 0.0
    for _ in range(spot if n else 0):
        i = int(rng.integers(n))
        a, a2 = (int(c) for c in rng.integers(0, spec.order, size=2))
        acc = 0j
        for b in range(spec.order):
            for b2 in range(spec.order):
                vec = [0] * n
                vec[i] = int(spec.add[b, b2])
                acc += C[a, b] * C[a2, b2] * pe.value(vec)
        want = tables[(i,)][a] if (a == a2 and d >= 1) else 0.0
        bool_err = max(bool_err, float(abs(acc - want)))
    obj = float("nan")
    if I is not None:
        tot = 0.0
        for eq in I.equations:
            T = eq.lhs.idx
            tab = tables[T] if T in tables else indicator_table(pe, T)
            for alpha in product(range(spec.order), repeat=len(T)):
                s = 0
                for c, a in zip(eq.lhs.val, alpha):
                    s = int(spec.add[s, spec.mul[c, a]])
                if s == eq.rhs:
                    tot += tab[alpha].real
        obj = float(tot / I.m)
    real = {T: t.real.copy() for T, t in tables.items()}
    return BooleanPE(spec, n, d, real, obj, sum_err, imag, bool_err)


# ---------------------------------------------------------------------------
# exhaustive oracles


def _subset_sums(H: list[SparseVec], spec: GroupSpec, max_size: int, cap: int, rhs: list[int] | None = None):
    m = len(H)
    max_size = min(max_size, m)
    units = [int(u) for u in spec.units]
    cost = exhaustive_cost(m, max_size, len(units)) + m
    if cost > cap:
        raise ResourceCapError(f"exhaustive search needs {cost} > {cap} checks")
    n = H[0].n if H else 0
    dense = np.array([v.dense() for v in H], dtype=np.int64).reshape(m, n)
    b = np.asarray(rhs if rhs is not None else [0] * m, dtype=np.int64)
    for s in range(1, max_size + 1):
        coefs = np.array([(1,) + c for c in product(units, repeat=s - 1)], dtype=np.int64)
        for sub in combinations(range(m), s):
            acc = np.zeros((coefs.shape[0], n), dtype=np.int64)
            tot = np.zeros(coefs.shape[0], dtype=np.int64)
            for j, p in enumerate(sub):
                acc = spec.add[acc, spec.mul[coefs[:, j][:, None], dense[p][None, :]]]
                tot = spec.add[tot, spec.mul[coefs[:, j], b[p]]]
            yield sub, coefs, acc, tot


def expansion_check(H, ell: int, beta: float, spec: GroupSpec | str | None = None,
                    cap: int = EXHAUSTIVE_CAP) -> tuple[bool, tuple[tuple[int, ...], tuple[int, ...]] | None]:
    """True iff every nonzero combination of at most ``ell`` vectors has weight ``> beta * |V|``."""
    if spec is None:
        if not isinstance(H, KLinInstance):
            raise TypeError("spec required for a plain vector list")
        H, spec = [eq.lhs for eq in H.equations], H.spec
    spec = as_spec(spec)
    for sub, coefs, acc, _ in _subset_sums(list(H), spec, ell, cap):
        wt = np.count_nonzero(acc, axis=1)
        bad = np.flatnonzero(wt <= beta * len(sub))
        if bad.size:
            return False, (sub, tuple(int(c) for c in coefs[bad[0]]))
    return True, None


def find_refutation_exhaustive(I: KLinInstance, max_size: int,
                               cap: int = EXHAUSTIVE_CAP) -> tuple[tuple[int, ...], tuple[int, ...]] | None:
    """Smallest ``(V, α)`` with ``Σ α_v v = 0`` and ``Σ α_v b_v != 0``."""
    H = [eq.lhs for eq in I.equations]
    for sub, coefs, acc, tot in _subset_sums(H, I.spec, max_size, cap, list(I.rhs)):
        hit = np.flatnonzero(~acc.any(axis=1) & (tot != 0))
        if hit.size:
            return sub, tuple(int(c) for c in coefs[hit[0]])
    return None


# ---------------------------------------------------------------------------
# text format


def dump_pe(pe: PseudoExpectation) -> str:
    spec = pe.spec
    err = "" if pe.error_at is None else " at=" + ",".join(map(str, pe.error_at))
    lines = [f"pe v1 group: {spec}", f"n: {pe.n}", f"d: {pe.d}", f"status: {pe.status}{err}"]
    order = np.lexsort(pe.vecs.T[::-1]) if pe.size else []
    for i in order:
        v = pe.vecs[i]
        rep = " ".join(f"{j}:{spec.format_literal(int(a))}" for j, a in enumerate(v.tolist()) if a) or "0"
        lines.append(f"{rep} => ({int(pe.exps[i])},)")
    return "\n".join(lines) + "\n"


def parse_pe(text: str) -> PseudoExpectation:
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    try:
        if not lines[0].startswith("pe v1 group:"):
            raise ValidationError("missing pe v1 header")
        spec = as_spec(lines[0][len("pe v1 group:"):])
        n = int(lines[1].split(":", 1)[1])
        d = int(lines[2].split(":", 1)[1])
        status = lines[3].split(":", 1)[1].split()[0]
        vecs, exps = [], []
        for ln in lines[4:]:
            lhs, rhs = ln.split("=>")
            v = [0] * n
            if lhs.strip() != "0":
                for tok in lhs.split():
                    j, lit = tok.split(":", 1)
                    v[int(j)] = spec.parse_literal(lit)
            vecs.append(v)
            exps.append(int(rhs.strip().strip("()").split(",")[0]))
    except (IndexError, ValueError) as exc:
        if isinstance(exc, ValidationError):
            raise
        raise ValidationError(f"malformed pseudo-expectation dump: {exc}") from None
    pe = PseudoExpectation(spec, n, d, np.array(vecs, dtype=np.int64).reshape(-1, n), np.array(exps, dtype=np.int64),
                           np.full((len(vecs), 2), -1), status)
    pe.reindex()
    return pe
