"""k-LIN instances: model, generators, exact evaluation and the text format."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .algebra import GroupSpec, SparseVec, as_spec
from .errors import ResourceCapError, ValidationError

BRUTE_FORCE_CAP = 2**22
FORMAT_HEADER = "klin v1"


@dataclass(frozen=True)
class Equation:
    lhs: SparseVec
    rhs: int


@dataclass(frozen=True)
class KLinInstance:
    spec: GroupSpec
    n: int
    k: int
    equations: tuple[Equation, ...]
    provenance: tuple[tuple[str, str], ...] = field(default=())

    def __post_init__(self) -> None:
        for eq in self.equations:
            if eq.lhs.n != self.n:
                raise ValidationError("equation dimension differs from n")
            if eq.lhs.wt > self.k:
                raise ValidationError(f"equation weight {eq.lhs.wt} exceeds k={self.k}")
            if not 0 <= eq.rhs < self.spec.order:
                raise ValidationError("rhs out of range")

    @property
    def m(self) -> int:
        return len(self.equations)

    def __len__(self) -> int:
        return len(self.equations)

    @property
    def lhs(self) -> list[SparseVec]:
        return [e.lhs for e in self.equations]

    @property
    def rhs(self) -> list[int]:
        return [e.rhs for e in self.equations]

    def with_equations(self, eqs: Iterable[Equation], k: int | None = None, spec: GroupSpec | None = None) -> KLinInstance:
        return KLinInstance(spec or self.spec, self.n, self.k if k is None else k, tuple(eqs), self.provenance)

    def meta(self) -> dict[str, str]:
        return dict(self.provenance)


def make_instance(spec: GroupSpec | str, n: int, k: int, rows: Iterable[tuple[dict[int, int], int]], **meta: str) -> KLinInstance:
    """Build an instance from ``({index: code}, rhs)`` rows."""
    spec = as_spec(spec)
    eqs = tuple(Equation(SparseVec.from_dict(d, n), int(b)) for d, b in rows)
    return KLinInstance(spec, n, k, eqs, tuple(sorted((str(a), str(b)) for a, b in meta.items())))


# ---------------------------------------------------------------------------
# generators


def random_lhs(spec: GroupSpec, n: int, k: int, m: int, rng: np.random.Generator) -> list[SparseVec]:
    if k > n:
        raise ValidationError("k must not exceed n")
    q = spec.order
    out = []
    for _ in range(m):
        supp = np.sort(rng.choice(n, size=k, replace=False))
        vals = rng.integers(1, q, size=k)
        out.append(SparseVec(tuple(int(i) for i in supp), tuple(int(v) for v in vals), n))
    return out


def gen_random(spec: GroupSpec | str, n: int, k: int, m: int, seed: int) -> KLinInstance:
    spec = as_spec(spec)
    if m < 1:
        raise ValidationError("m must be positive")
    rng = np.random.default_rng(seed)
    lhs = random_lhs(spec, n, k, m, rng)
    rhs = rng.integers(0, spec.order, size=m)
    eqs = tuple(Equation(v, int(b)) for v, b in zip(lhs, rhs))
    return KLinInstance(spec, n, k, eqs, (("generator", "random"), ("seed", str(seed))))


def lhs_pattern(name: str, spec: GroupSpec | str, n: int, k: int, m: int, seed: int, **kw) -> list[SparseVec]:
    """Adversarial left-hand sides.

    ``prefix``: every support inside the first ``width`` coordinates.
    ``clustered``: supports drawn from a few blocks of ``width`` consecutive coordinates.
    ``star``: every support contains coordinate 0.
    ``random``: uniform supports.
    """
    spec = as_spec(spec)
    rng = np.random.default_rng(seed)
    q = spec.order
    width = int(kw.get("width", max(k, n // 2)))
    if width < k or width > n:
        raise ValidationError(f"pattern width {width} incompatible with k={k}, n={n}")
    out = []
    for _ in range(m):
        if name == "prefix":
            supp = rng.choice(width, size=k, replace=False)
        elif name == "clustered":
            starts = list(range(0, n - width + 1, width)) or [0]
            s0 = starts[int(rng.integers(len(starts)))]
            supp = s0 + rng.choice(width, size=k, replace=False)
        elif name == "star":
            supp = np.concatenate([[0], 1 + rng.choice(n - 1, size=k - 1, replace=False)])
        elif name == "random":
            supp = rng.choice(n, size=k, replace=False)
        else:
            raise ValidationError(f"unknown lhs pattern {name!r}")
        vals = rng.integers(1, q, size=k)
        order = np.argsort(supp)
        out.append(SparseVec(tuple(int(supp[i]) for i in order), tuple(int(vals[i]) for i in order), n))
    return out


def gen_semirandom(lhs_source, spec: GroupSpec | str | None = None, seed: int = 0, k: int | None = None) -> KLinInstance:
    """Keep the given left-hand sides and draw fresh uniform right-hand sides.

    ``lhs_source`` is a path to an instance file, a :class:`KLinInstance`, or a
    list of :class:`SparseVec` (then ``spec`` is required).
    """
    if isinstance(lhs_source, (str, Path)):
        lhs_source = load(lhs_source)
    if isinstance(lhs_source, KLinInstance):
        spec = lhs_source.spec if spec is None else as_spec(spec)
        lhs = lhs_source.lhs
        n, k = lhs_source.n, lhs_source.k if k is None else k
    else:
        if spec is None:
            raise ValidationError("spec required for a raw lhs list")
        spec = as_spec(spec)
        lhs = list(lhs_source)
        if not lhs:
            raise ValidationError("empty lhs list")
        n = lhs[0].n
        k = max(v.wt for v in lhs) if k is None else k
    if any(v.wt > k for v in lhs):
        raise ValidationError("lhs vectors must be k-sparse")
    rng = np.random.default_rng(seed)
    rhs = rng.integers(0, spec.order, size=len(lhs))
    eqs = tuple(Equation(v, int(b)) for v, b in zip(lhs, rhs))
    return KLinInstance(spec, n, k, eqs, (("generator", "semirandom"), ("seed", str(seed))))


# ---------------------------------------------------------------------------
# evaluation


def _lhs_values(I: KLinInstance, X: np.ndarray) -> np.ndarray:
    """``(batch, m)`` array of ``<v, x>`` codes for each row of ``X``."""
    spec = I.spec
    add, mul = spec.add, spec.mul
    out = np.zeros((X.shape[0], I.m), dtype=np.int64)
    for j, eq in enumerate(I.equations):
        acc = np.zeros(X.shape[0], dtype=np.int64)
        for i, a in zip(eq.lhs.idx, eq.lhs.val):
            acc = add[acc, mul[a, X[:, i]]]
        out[:, j] = acc
    return out


def _check_x(I: KLinInstance, x: Sequence[int]) -> np.ndarray:
    arr = np.asarray(x, dtype=np.int64)
    if arr.shape != (I.n,):
        raise ValidationError(f"assignment has shape {arr.shape}, expected ({I.n},)")
    if arr.min(initial=0) < 0 or arr.max(initial=0) >= I.spec.order:
        raise ValidationError("assignment value out of range")
    return arr


def satisfied_count(I: KLinInstance, x: Sequence[int]) -> int:
    arr = _check_x(I, x)
    vals = _lhs_values(I, arr[None, :])[0]
    return int(np.sum(vals == np.asarray(I.rhs, dtype=np.int64)))


def val_at(I: KLinInstance, x: Sequence[int]) -> Fraction:
    if I.m == 0:
        raise ValidationError("empty instance")
    return Fraction(satisfied_count(I, x), I.m)


def all_assignments(q: int, n: int, start: int = 0, stop: int | None = None) -> np.ndarray:
    """Assignments with lexicographic index in ``[start, stop)``; coordinate 0 most significant."""
    stop = q**n if stop is None else stop
    idx = np.arange(start, stop, dtype=np.int64)
    out = np.empty((idx.size, n), dtype=np.int64)
    for i in range(n - 1, -1, -1):
        out[:, i] = idx % q
        idx = idx // q
    return out


def brute_force_val(I: KLinInstance, cap: int = BRUTE_FORCE_CAP, chunk: int = 1 << 16) -> tuple[Fraction, tuple[int, ...]]:
    """Exact optimum and the lexicographically first maximiser."""
    q, n = I.spec.order, I.n
    total = q**n
    if total > cap:
        raise ResourceCapError(f"|G|^n = {total} exceeds brute-force cap {cap}")
    if I.m == 0:
        raise ValidationError("empty instance")
    rhs = np.asarray(I.rhs, dtype=np.int64)
    best, best_x = -1, None
    for start in range(0, total, chunk):
        X = all_assignments(q, n, start, min(total, start + chunk))
        counts = np.sum(_lhs_values(I, X) == rhs[None, :], axis=1)
        j = int(np.argmax(counts))
        if counts[j] > best:
            best, best_x = int(counts[j]), tuple(int(a) for a in X[j])
            if best == I.m:
                break
    return Fraction(best, I.m), best_x


def phi_advantage(I: KLinInstance, x: Sequence[int]) -> complex:
    """Character-sum form of ``val_at(I, x) - 1/|G|``."""
    arr = _check_x(I, x)
    spec = I.spec
    chi = spec.chi
    L = spec.exponent
    s = _lhs_values(I, arr[None, :])[0]
    betas = spec.nonzero
    tot = 0j
    roots = spec.roots
    for eq, sv in zip(I.equations, s):
        e = (chi[betas, eq.rhs] - chi[betas, sv]) % L
        tot += roots[e].sum()
    return tot / (I.m * spec.order)


# ---------------------------------------------------------------------------
# text format


def serialize(I: KLinInstance) -> str:
    spec = I.spec
    lines = [FORMAT_HEADER, f"group: {spec}", f"n: {I.n}", f"k: {I.k}"]
    for key, val in I.provenance:
        lines.append(f"meta: {key}={val}")
    for eq in I.equations:
        terms = " ".join(f"{i}:{spec.format_literal(a)}" for i, a in zip(eq.lhs.idx, eq.lhs.val))
        lines.append(f"{terms} = {spec.format_literal(eq.rhs)}")
    return "\n".join(lines) + "\n"


def parse(text: str) -> KLinInstance:
    header: dict[str, str] = {}
    meta: list[tuple[str, str]] = []
    rows: list[tuple[int, str]] = []
    seen_magic = False
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if not seen_magic:
            if line != FORMAT_HEADER:
                raise ValidationError(f"line {lineno}: expected {FORMAT_HEADER!r}")
            seen_magic = True
            continue
        if line[0].isdigit() or line[0] == "=":
            rows.append((lineno, line))
            continue
        key, sep, val = line.partition(":")
        key = key.strip()
        if not sep or key not in ("group", "n", "k", "meta"):
            raise ValidationError(f"line {lineno}: unrecognised line {raw!r}")
        if key == "meta":
            mk, eq, mv = val.strip().partition("=")
            if not eq:
                raise ValidationError(f"line {lineno}: meta needs key=value")
            meta.append((mk.strip(), mv.strip()))
        else:
            if rows:
                raise ValidationError(f"line {lineno}: header after equations")
            header[key] = val.strip()
    if not seen_magic:
        raise ValidationError("missing header line")
    for key in ("group", "n", "k"):
        if key not in header:
            raise ValidationError(f"missing header field {key!r}")
    spec = GroupSpec.parse(header["group"])
    try:
        n, k = int(header["n"]), int(header["k"])
    except ValueError:
        raise ValidationError("n and k must be integers") from None
    eqs = []
    for lineno, line in rows:
        left, _, right = line.partition("=")
        d: dict[int, int] = {}
        for tok in left.split():
            si, sep, sa = tok.partition(":")
            if not sep:
                raise ValidationError(f"line {lineno}: bad term {tok!r}")
            try:
                i = int(si)
            except ValueError:
                raise ValidationError(f"line {lineno}: bad index {si!r}") from None
            if not 0 <= i < n:
                raise ValidationError(f"line {lineno}: index {i} out of range [0,{n})")
            if i in d:
                raise ValidationError(f"line {lineno}: repeated index {i}")
            try:
                a = spec.parse_literal(sa)
            except ValidationError as exc:
                raise ValidationError(f"line {lineno}: {exc}") from None
            if a == 0:
                raise ValidationError(f"line {lineno}: zero coefficient at index {i}")
            d[i] = a
        if len(d) > k:
            raise ValidationError(f"line {lineno}: weight {len(d)} exceeds k={k}")
        try:
            b = spec.parse_literal(right)
        except ValidationError as exc:
            raise ValidationError(f"line {lineno}: {exc}") from None
        eqs.append(Equation(SparseVec.from_dict(d, n), b))
    return KLinInstance(spec, n, k, tuple(eqs), tuple(meta))


def load(path: str | Path) -> KLinInstance:
    return parse(Path(path).read_text(encoding="utf-8"))


def dump(I: KLinInstance, path: str | Path) -> None:
    Path(path).write_text(serialize(I), encoding="utf-8")


def count_supports(n: int, k: int) -> int:
    return math.comb(n, k)


def all_supports(n: int, k: int) -> Iterable[tuple[int, ...]]:
    return combinations(range(n), k)
