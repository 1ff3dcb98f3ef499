"""Exact arithmetic for prime fields, small extension fields and finite Abelian groups.

Every domain element is handled internally as an integer *code* in ``[0, |G|)``
with ``0`` the additive identity.  Table lookups (numpy arrays) make vectorised
evaluation cheap.  Codes are:

* prime field ``F_p``: the residue itself;
* extension field ``GF(p^m)``: ``sum(c_j * p**j)`` for coefficient vector
  ``(c_0, ..., c_{m-1})`` (little endian, same as the file literal);
* product ``Z_{m_1} x ... x Z_{m_r}``: mixed radix, first component most
  significant.

Character values are roots of unity.  Internally a phase is a single exponent
``s`` modulo ``L = spec.exponent`` meaning ``exp(2 pi i s / L)``; the public
:class:`Phase` keeps the per-component exponent tuple as well.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property, reduce
from itertools import combinations, product
from typing import Iterable, Sequence

import numpy as np

from .errors import DomainError, ValidationError

MAX_FIELD_ORDER = 1024
MAX_GROUP_ORDER = 4096


# ---------------------------------------------------------------------------
# number theory helpers


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    f = 3
    while f * f <= n:
        if n % f == 0:
            return False
        f += 2
    return True


def factorize(n: int) -> list[tuple[int, int]]:
    """Prime factorisation as ``[(p, e), ...]`` with increasing ``p``."""
    out: list[tuple[int, int]] = []
    f = 2
    while f * f <= n:
        e = 0
        while n % f == 0:
            n //= f
            e += 1
        if e:
            out.append((f, e))
        f += 1
    if n > 1:
        out.append((n, 1))
    return out


def lcm(values: Iterable[int]) -> int:
    return reduce(lambda a, b: a * b // math.gcd(a, b), values, 1)


# ---------------------------------------------------------------------------
# polynomials over F_p (little-endian coefficient lists)


def _poly_trim(a: list[int]) -> list[int]:
    while len(a) > 1 and a[-1] == 0:
        a.pop()
    return a


def poly_rem(a: Sequence[int], b: Sequence[int], p: int) -> list[int]:
    """Remainder of ``a`` divided by ``b`` over ``F_p``."""
    r = _poly_trim([x % p for x in a])
    b = _poly_trim([x % p for x in b])
    db = len(b) - 1
    inv_lead = pow(b[-1], -1, p)
    while len(r) - 1 >= db and any(r):
        shift = len(r) - 1 - db
        coef = r[-1] * inv_lead % p
        for j, bj in enumerate(b):
            r[shift + j] = (r[shift + j] - coef * bj) % p
        _poly_trim(r)
        if len(r) - 1 < db:
            break
    return r


def is_irreducible(poly: Sequence[int], p: int) -> bool:
    """Trial division by every monic polynomial of degree ``1..m//2``."""
    m = len(poly) - 1
    if m < 1 or poly[-1] % p != 1:
        return False
    for d in range(1, m // 2 + 1):
        for low in product(range(p), repeat=d):
            r = poly_rem(poly, list(low) + [1], p)
            if not any(r):
                return False
    return True


def lowest_irreducible(p: int, m: int) -> tuple[int, ...]:
    """Monic irreducible of degree ``m`` whose lower coefficients have the smallest code."""
    for code in range(p**m):
        low = [(code // p**j) % p for j in range(m)]
        poly = low + [1]
        if is_irreducible(poly, p):
            return tuple(poly)
    raise DomainError(f"no irreducible polynomial of degree {m} over F_{p}")  # pragma: no cover


# ---------------------------------------------------------------------------
# phases


@dataclass(frozen=True)
class Phase:
    """Formal product of roots of unity ``prod_i omega_{m_i}^{e_i}``."""

    exps: tuple[int, ...]
    moduli: tuple[int, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "exps", tuple(e % m for e, m in zip(self.exps, self.moduli)))

    def __mul__(self, other: Phase) -> Phase:
        if self.moduli != other.moduli:
            raise DomainError("phase moduli differ")
        return Phase(tuple(a + b for a, b in zip(self.exps, other.exps)), self.moduli)

    def conj(self) -> Phase:
        return Phase(tuple(-e for e in self.exps), self.moduli)

    @property
    def scalar(self) -> int:
        """Exponent modulo the lcm of the moduli."""
        L = lcm(self.moduli)
        return sum(e * (L // m) for e, m in zip(self.exps, self.moduli)) % L

    def is_one(self) -> bool:
        return self.scalar == 0

    def to_complex(self) -> complex:
        L = lcm(self.moduli)
        return complex(np.exp(2j * np.pi * self.scalar / L))

    def __abs__(self) -> float:
        return 1.0


# ---------------------------------------------------------------------------
# domains


@dataclass(frozen=True)
class GroupSpec:
    """An algebraic domain: ``kind`` is ``"prime"``, ``"ext"`` or ``"product"``."""

    kind: str
    p: int = 0
    m: int = 1
    poly: tuple[int, ...] = ()
    moduli: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        if self.kind == "prime":
            if not is_prime(self.p):
                raise ValidationError(f"p={self.p} is not prime")
            if self.p > MAX_FIELD_ORDER:
                raise ValidationError(f"field order {self.p} exceeds {MAX_FIELD_ORDER}")
        elif self.kind == "ext":
            if not is_prime(self.p) or self.m < 2:
                raise ValidationError("extension field needs prime p and m >= 2")
            if self.p**self.m > MAX_FIELD_ORDER:
                raise ValidationError(f"field order {self.p ** self.m} exceeds {MAX_FIELD_ORDER}")
            poly = self.poly or lowest_irreducible(self.p, self.m)
            poly = tuple(c % self.p for c in poly)
            if len(poly) != self.m + 1 or poly[-1] != 1:
                raise ValidationError(f"polynomial {poly} is not monic of degree {self.m}")
            if not is_irreducible(poly, self.p):
                raise ValidationError(f"polynomial {poly} is reducible over F_{self.p}")
            object.__setattr__(self, "poly", poly)
        elif self.kind == "product":
            if not self.moduli or any(mi < 2 for mi in self.moduli):
                raise ValidationError("product moduli must all be >= 2")
            if math.prod(self.moduli) > MAX_GROUP_ORDER:
                raise ValidationError(f"group order exceeds {MAX_GROUP_ORDER}")
        else:
            raise ValidationError(f"unknown domain kind {self.kind!r}")

    # constructors -----------------------------------------------------------
    @classmethod
    def prime(cls, p: int) -> GroupSpec:
        return cls("prime", p=p)

    @classmethod
    def ext(cls, p: int, m: int, poly: Sequence[int] | None = None) -> GroupSpec:
        return cls("ext", p=p, m=m, poly=tuple(poly) if poly else ())

    @classmethod
    def zm(cls, *moduli: int) -> GroupSpec:
        return cls("product", moduli=tuple(moduli))

    @classmethod
    def parse(cls, text: str) -> GroupSpec:
        """Parse ``p=3`` | ``gf p=2 m=2 [poly=111]`` | ``zm=6,2``."""
        s = text.strip()
        try:
            if s.startswith("gf"):
                kv = dict(tok.split("=", 1) for tok in s[2:].split())
                poly = tuple(int(c) for c in kv["poly"]) if "poly" in kv else None
                return cls.ext(int(kv["p"]), int(kv["m"]), poly)
            if s.startswith("zm="):
                return cls.zm(*(int(x) for x in s[3:].split(",")))
            if s.startswith("p="):
                return cls.prime(int(s[2:]))
        except (KeyError, ValueError) as exc:
            if isinstance(exc, ValidationError):
                raise
            raise ValidationError(f"bad domain spec {text!r}: {exc}") from None
        raise ValidationError(f"bad domain spec {text!r}")

    def __str__(self) -> str:
        if self.kind == "prime":
            return f"p={self.p}"
        if self.kind == "ext":
            return f"gf p={self.p} m={self.m} poly={''.join(map(str, self.poly))}"
        return "zm=" + ",".join(map(str, self.moduli))

    # basic invariants -------------------------------------------------------
    @property
    def is_field(self) -> bool:
        return self.kind != "product"

    @property
    def order(self) -> int:
        if self.kind == "prime":
            return self.p
        if self.kind == "ext":
            return self.p**self.m
        return math.prod(self.moduli)

    @property
    def phase_moduli(self) -> tuple[int, ...]:
        return self.moduli if self.kind == "product" else (self.p,)

    @property
    def exponent(self) -> int:
        return lcm(self.phase_moduli)

    # tables -----------------------------------------------------------------
    @cached_property
    def components(self) -> np.ndarray:
        """``(q, r)`` array: base-p digits (fields) or product components."""
        q = self.order
        codes = np.arange(q)
        if self.kind == "prime":
            return codes[:, None].copy()
        if self.kind == "ext":
            return np.stack([(codes // self.p**j) % self.p for j in range(self.m)], axis=1)
        cols = []
        rest = codes
        for mi in reversed(self.moduli):
            cols.append(rest % mi)
            rest = rest // mi
        return np.stack(cols[::-1], axis=1)

    def _from_components(self, comp: np.ndarray) -> np.ndarray:
        if self.kind == "prime":
            return comp[..., 0] % self.p
        if self.kind == "ext":
            w = self.p ** np.arange(self.m)
            return (comp % self.p) @ w
        code = np.zeros(comp.shape[:-1], dtype=np.int64)
        for i, mi in enumerate(self.moduli):
            code = code * mi + comp[..., i] % mi
        return code

    @cached_property
    def add(self) -> np.ndarray:
        c = self.components
        s = c[:, None, :] + c[None, :, :]
        return self._from_components(s).astype(np.int64)

    @cached_property
    def neg(self) -> np.ndarray:
        return self._from_components(-self.components).astype(np.int64)

    @cached_property
    def sub(self) -> np.ndarray:
        return self.add[:, self.neg]

    @cached_property
    def _ext_log_tables(self) -> tuple[np.ndarray, np.ndarray]:
        p, m, q = self.p, self.m, self.order
        red = self.poly

        def mul_digits(a: list[int], b: list[int]) -> list[int]:
            prod_ = [0] * (2 * m - 1)
            for i, ai in enumerate(a):
                if ai:
                    for j, bj in enumerate(b):
                        prod_[i + j] += ai * bj
            for deg in range(2 * m - 2, m - 1, -1):
                c = prod_[deg] % p
                if c:
                    for j in range(m + 1):
                        prod_[deg - m + j] -= c * red[j]
            return [x % p for x in prod_[:m]]

        digits = self.components.tolist()
        for g in range(2, q):
            exp = [1]
            cur = digits[1]
            gd = digits[g]
            ok = True
            for _ in range(q - 2):
                cur = mul_digits(cur, gd)
                code = sum(c * p**j for j, c in enumerate(cur))
                if code == 1:
                    ok = False
                    break
                exp.append(code)
            if ok:
                exp_arr = np.array(exp, dtype=np.int64)
                log_arr = np.full(q, -1, dtype=np.int64)
                log_arr[exp_arr] = np.arange(q - 1)
                return exp_arr, log_arr
        raise DomainError("no primitive element found")  # pragma: no cover

    @cached_property
    def mul(self) -> np.ndarray:
        q = self.order
        if self.kind == "prime":
            a = np.arange(q)
            return np.outer(a, a) % q
        if self.kind == "product":
            c = self.components
            return self._from_components(c[:, None, :] * c[None, :, :]).astype(np.int64)
        exp, log = self._ext_log_tables
        out = np.zeros((q, q), dtype=np.int64)
        la = log[1:]
        out[1:, 1:] = exp[(la[:, None] + la[None, :]) % (q - 1)]
        return out

    @cached_property
    def units(self) -> np.ndarray:
        """Codes of the multiplicative units, increasing."""
        if self.is_field:
            return np.arange(1, self.order)
        c = self.components
        ok = np.ones(self.order, dtype=bool)
        for i, mi in enumerate(self.moduli):
            ok &= np.gcd(c[:, i], mi) == 1
        return np.nonzero(ok)[0]

    @cached_property
    def nonzero(self) -> np.ndarray:
        return np.arange(1, self.order)

    @cached_property
    def inv(self) -> np.ndarray:
        """Multiplicative inverse of units, ``-1`` elsewhere."""
        out = np.full(self.order, -1, dtype=np.int64)
        mul = self.mul
        for u in self.units:
            out[u] = int(np.nonzero(mul[u] == 1)[0][0])
        return out

    @cached_property
    def trace_table(self) -> np.ndarray:
        """``Tr(e)`` as an element of F_p for every field element."""
        if self.kind == "prime":
            return np.arange(self.p)
        if self.kind != "ext":
            raise DomainError("trace is defined only for fields")
        q, p = self.order, self.p
        exp, log = self._ext_log_tables
        out = np.zeros(q, dtype=np.int64)
        for e in range(1, q):
            acc = 0
            for j in range(self.m):
                acc = int(self.add[acc, exp[(log[e] * p**j) % (q - 1)]])
            if acc >= p:
                raise DomainError("trace left the prime subfield")  # pragma: no cover
            out[e] = acc
        return out

    @cached_property
    def chi(self) -> np.ndarray:
        """``chi[a, x]``: scalar phase exponent mod ``exponent`` of character a at x."""
        if self.is_field:
            return self.trace_table[self.mul]
        L = self.exponent
        c = self.components
        acc = np.zeros((self.order, self.order), dtype=np.int64)
        for i, mi in enumerate(self.moduli):
            acc += ((c[:, None, i] * c[None, :, i]) % mi) * (L // mi)
        return acc % L

    @cached_property
    def roots(self) -> np.ndarray:
        L = self.exponent
        return np.exp(2j * np.pi * np.arange(L) / L)

    # element conversion -----------------------------------------------------
    def encode(self, e) -> int:
        """Canonical element (int, coefficient tuple or component tuple) to code."""
        if isinstance(e, (int, np.integer)):
            code = int(e)
            if self.kind == "product" and len(self.moduli) == 1:
                code %= self.moduli[0]
            if not 0 <= code < self.order:
                raise ValidationError(f"element {e} out of range for {self}")
            return code
        comps = np.array(list(e), dtype=np.int64)
        r = self.m if self.kind == "ext" else len(self.phase_moduli)
        if comps.shape != (r,):
            raise ValidationError(f"element {e} has wrong shape for {self}")
        return int(self._from_components(comps[None, :])[0])

    def decode(self, code: int):
        code = int(code)
        if self.kind == "prime":
            return code
        comps = tuple(int(x) for x in self.components[code])
        if self.kind == "product" and len(comps) == 1:
            return comps[0]
        return comps

    def parse_literal(self, text: str) -> int:
        t = text.strip()
        try:
            if self.kind == "prime":
                v = int(t)
                if not 0 <= v < self.p:
                    raise ValueError
                return v
            if self.kind == "ext":
                if len(t) != self.m or any(not ch.isdigit() or int(ch) >= self.p for ch in t):
                    raise ValueError
                return sum(int(ch) * self.p**j for j, ch in enumerate(t))
            parts = [int(x) for x in t.split(",")]
            if len(parts) != len(self.moduli) or any(not 0 <= x < mi for x, mi in zip(parts, self.moduli)):
                raise ValueError
            return int(self._from_components(np.array(parts)[None, :])[0])
        except ValueError:
            raise ValidationError(f"bad element literal {text!r} for {self}") from None

    def format_literal(self, code: int) -> str:
        comps = self.components[int(code)]
        if self.kind == "prime":
            return str(int(code))
        if self.kind == "ext":
            return "".join(str(int(c)) for c in comps)
        return ",".join(str(int(c)) for c in comps)

    def phase_of_scalar(self, s: int) -> complex:
        return complex(self.roots[int(s) % self.exponent])


def as_spec(spec: GroupSpec | str) -> GroupSpec:
    return spec if isinstance(spec, GroupSpec) else GroupSpec.parse(spec)


# ---------------------------------------------------------------------------
# sparse vectors


@dataclass(frozen=True)
class SparseVec:
    """Sorted ``(index, code)`` pairs with nonzero codes, ambient dimension ``n``."""

    idx: tuple[int, ...]
    val: tuple[int, ...]
    n: int

    def __post_init__(self) -> None:
        if len(self.idx) != len(self.val):
            raise ValidationError("index/value length mismatch")
        if any(b <= a for a, b in zip(self.idx, self.idx[1:])):
            raise ValidationError("indices must be strictly increasing")
        if self.idx and (self.idx[0] < 0 or self.idx[-1] >= self.n):
            raise ValidationError(f"index out of range for n={self.n}")
        if any(v == 0 for v in self.val):
            raise ValidationError("sparse vectors store no zero values")

    @classmethod
    def from_dict(cls, d: dict[int, int], n: int) -> SparseVec:
        items = sorted((int(i), int(v)) for i, v in d.items() if v != 0)
        return cls(tuple(i for i, _ in items), tuple(v for _, v in items), n)

    @classmethod
    def from_dense(cls, x: Sequence[int], n: int | None = None) -> SparseVec:
        return cls.from_dict({i: int(v) for i, v in enumerate(x) if v}, len(x) if n is None else n)

    @property
    def wt(self) -> int:
        return len(self.idx)

    @property
    def support(self) -> frozenset[int]:
        return frozenset(self.idx)

    def as_dict(self) -> dict[int, int]:
        return dict(zip(self.idx, self.val))

    def dense(self) -> np.ndarray:
        out = np.zeros(self.n, dtype=np.int64)
        out[list(self.idx)] = self.val
        return out

    def restrict(self, coords: Iterable[int]) -> SparseVec:
        keep = set(coords)
        return SparseVec.from_dict({i: v for i, v in zip(self.idx, self.val) if i in keep}, self.n)

    def scale(self, beta: int, spec: GroupSpec) -> SparseVec:
        mul = spec.mul
        return SparseVec.from_dict({i: int(mul[beta, v]) for i, v in zip(self.idx, self.val)}, self.n)

    def plus(self, other: SparseVec, spec: GroupSpec) -> SparseVec:
        d = self.as_dict()
        for i, v in zip(other.idx, other.val):
            d[i] = int(spec.add[d.get(i, 0), v])
        return SparseVec.from_dict(d, self.n)

    def minus(self, other: SparseVec, spec: GroupSpec) -> SparseVec:
        return self.plus(_negv(other, spec), spec)


def _negv(v: SparseVec, spec: GroupSpec) -> SparseVec:
    return SparseVec(v.idx, tuple(int(spec.neg[x]) for x in v.val), v.n)


def is_prefix(u: SparseVec, v: SparseVec) -> bool:
    """``u`` is contained in ``v``: ``supp(u) ⊆ supp(v)`` and values agree there."""
    d = v.as_dict()
    return all(d.get(i) == x for i, x in zip(u.idx, u.val))


# ---------------------------------------------------------------------------
# traces and characters


def trace(e, spec: GroupSpec) -> int:
    if not spec.is_field:
        raise DomainError("trace needs a field")
    return int(spec.trace_table[spec.encode(e)])


def character(alpha, x, spec: GroupSpec) -> Phase:
    a, b = spec.encode(alpha), spec.encode(x)
    if spec.is_field:
        return Phase((int(spec.chi[a, b]),), (spec.p,))
    ca, cx = spec.components[a], spec.components[b]
    return Phase(tuple(int(u * w) for u, w in zip(ca, cx)), spec.moduli)


def char_vec(v: SparseVec, x: Sequence[int], spec: GroupSpec) -> Phase:
    if len(x) != v.n:
        raise ValidationError(f"assignment has length {len(x)}, expected {v.n}")
    out = Phase((0,) * len(spec.phase_moduli), spec.phase_moduli)
    for i, a in zip(v.idx, v.val):
        out = out * character(a, int(x[i]), spec)
    return out


# ---------------------------------------------------------------------------
# subgroups


@dataclass(frozen=True)
class SubgroupDesc:
    """Subgroup ``⊗_i mu_i Z_{m_i}``; for fields ``mu`` is ``(1,)`` or ``(q,)``."""

    mu: tuple[int, ...]
    order: int


def representative_group(v: SparseVec, spec: GroupSpec) -> SubgroupDesc:
    if spec.is_field:
        return SubgroupDesc((1,), spec.order) if v.wt else SubgroupDesc((spec.order,), 1)
    comps = spec.components[list(v.val)] if v.wt else np.zeros((0, len(spec.moduli)), dtype=np.int64)
    mu = []
    for i, mi in enumerate(spec.moduli):
        g = mi
        for c in comps[:, i]:
            g = math.gcd(g, int(c))
        mu.append(g)
    return SubgroupDesc(tuple(mu), math.prod(mi // g for mi, g in zip(spec.moduli, mu)))


def thinness(v: SparseVec, spec: GroupSpec) -> Fraction:
    return Fraction(representative_group(v, spec).order, spec.order)


def robustness(v: SparseVec, k: int, spec: GroupSpec) -> Fraction:
    h = k // 2
    if v.wt < h:
        raise ValidationError(f"weight {v.wt} below k/2={h}")
    if spec.is_field:
        return Fraction(1)
    return min(thinness(v.restrict(S), spec) for S in combinations(v.idx, h))


def annihilator_size(values: Sequence[int], spec: GroupSpec) -> int:
    """``|{g : g*w = 0 for all w in values}|``, which equals ``1/thinness``."""
    if spec.is_field:
        return 1 if any(values) else spec.order
    comps = spec.components[list(values)] if len(values) else np.zeros((0, len(spec.moduli)), dtype=np.int64)
    out = 1
    for i, mi in enumerate(spec.moduli):
        g = mi
        for c in comps[:, i]:
            g = math.gcd(g, int(c))
        out *= g
    return out


@dataclass(frozen=True)
class QuotientChoice:
    """Subgroup ``H`` chosen for threshold ``t`` and the quotient ``G/H``.

    ``mu`` gives ``G/H ≅ ⊗ Z_{mu_i}`` over the original components;
    ``verified`` is the outcome of the exhaustive case check (None when skipped).
    """

    spec: GroupSpec
    t: int
    mu: tuple[int, ...]
    case: int
    quotient: GroupSpec
    verified: bool | None

    @property
    def subgroup(self) -> SubgroupDesc:
        if self.spec.is_field:
            return SubgroupDesc((self.spec.order,), 1)
        return SubgroupDesc(self.mu, self.spec.order // math.prod(self.mu))

    @property
    def quotient_order(self) -> int:
        return self.quotient.order

    def reduce_table(self) -> np.ndarray:
        """Map from codes of ``G`` to codes of ``G/H``."""
        if self.spec.is_field:
            return np.arange(self.spec.order)
        c = self.spec.components
        keep = [i for i, u in enumerate(self.mu) if u > 1]
        qc = np.stack([c[:, i] % self.mu[i] for i in keep], axis=1)
        return self.quotient._from_components(qc).astype(np.int64)


def _min_nontrivial_subgroup(spec: GroupSpec) -> int:
    """Smallest nontrivial subgroup order, by enumerating cyclic subgroups."""
    best = spec.order
    add = spec.add
    for g in range(1, spec.order):
        cur, k = g, 1
        while cur != 0:
            cur = int(add[cur, g])
            k += 1
        best = min(best, k)
    return best


def check_quotient_case(quotient: GroupSpec, t: int, case: int) -> bool:
    q = quotient.order
    if case == 1:
        return q <= t
    if case == 2:
        return q > t and _min_nontrivial_subgroup(quotient) == q
    return t < q <= t * t and _min_nontrivial_subgroup(quotient) * t >= q


def find_quotient_subgroup(spec: GroupSpec, t: int) -> QuotientChoice:
    """Choose ``H`` so that ``G/H`` is small with no small nontrivial subgroups."""
    q = spec.order
    if spec.is_field:
        case = 1 if q <= t else 2
        return QuotientChoice(spec, t, (1,), case, spec, None)
    # canonical prime-power factors, decreasing prime then exponent
    factors = []
    for ci, mi in enumerate(spec.moduli):
        for p, e in factorize(mi):
            factors.append((p, e, ci))
    factors.sort(key=lambda f: (-f[0], -f[1], f[2]))
    fmu = [1] * len(factors)
    if q <= t:
        case = 1
        fmu = [p**e for p, e, _ in factors]
    elif factors[0][0] > t:
        case = 2
        fmu[0] = factors[0][0]
    else:
        case = 3
        done = False
        for s, (p, e, _) in enumerate(factors):
            for e2 in range(1, e + 1):
                fmu[s] = p**e2
                if math.prod(fmu) > t:
                    done = True
                    break
            if done:
                break
    mu = [1] * len(spec.moduli)
    for (p, e, ci), d in zip(factors, fmu):
        mu[ci] *= d
    mu_t = tuple(mu)
    quotient = GroupSpec.zm(*(u for u in mu_t if u > 1))
    verified = check_quotient_case(quotient, t, case) if quotient.order <= 64 else None
    return QuotientChoice(spec, t, mu_t, case, quotient, verified)
