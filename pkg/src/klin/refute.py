"""Certified refutation pipelines: even field, group reduction, odd arity."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Any

import numpy as np

from .algebra import GroupSpec, SparseVec, find_quotient_subgroup, robustness
from .decomposition import (AuditReport, BipartiteDecomposition, Bucket, Member, audit_decomposition,
                            default_taus, regular_decompose)
from .errors import ValidationError
from .instance import Equation, KLinInstance
from .kikuchi import (KikuchiMatrix, build_even_field, build_even_group, build_odd, degrees, local_degrees,
                      norm_of, odd_delta, transpose_index, type_counts)

SCHEMA = "klin-cert/1"

__all__ = [
    "Certificate", "refute_even_field", "refute_even_group_robust", "reduce_group_pipeline",
    "regular_decompose", "audit_decomposition", "edge_delete", "refute_bipartite", "refute_odd",
    "refute", "default_eta", "psi_t", "BipartiteDecomposition",
]


@dataclass
class Certificate:
    alg_val: float
    kind: str
    params: dict[str, Any]
    trail: list[dict[str, Any]] = field(default_factory=list)
    soundness_flag: str = "exact"
    config: dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return {"schema": SCHEMA, **asdict(self)}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True, default=_jsonable)

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> Certificate:
        if d.get("schema") != SCHEMA:
            raise ValidationError(f"unsupported certificate schema {d.get('schema')!r}")
        try:
            return cls(float(d["alg_val"]), str(d["kind"]), dict(d["params"]), list(d["trail"]),
                       str(d["soundness_flag"]), dict(d.get("config", {})))
        except (KeyError, TypeError, ValueError) as exc:
            raise ValidationError(f"malformed certificate: {exc}") from None

    @classmethod
    def from_json(cls, text: str) -> Certificate:
        try:
            return cls.from_dict(json.loads(text))
        except json.JSONDecodeError as exc:
            raise ValidationError(f"certificate is not valid JSON: {exc}") from None


def _jsonable(o):
    if isinstance(o, Fraction):
        return str(o)
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    raise TypeError(f"not serialisable: {type(o)}")


def _flag(*flags: str) -> str:
    return "loose" if "loose" in flags else "exact"


# ---------------------------------------------------------------------------
# even arity


def refute_even_field(I: KLinInstance, ell: int, eps: float | None = None, norm_method: str = "auto") -> Certificate:
    """``alg_val = 1/|F| + tr(Γ)‖Ã‖/(|F||H|Δ)``, which equals ``1/|F| + 2|F*|/|F|·‖Ã‖``."""
    if I.m == 0:
        raise ValidationError("empty instance")
    spec = I.spec
    K = build_even_field(I, ell)
    res, deg = norm_of(K, method=norm_method)
    q = spec.order
    alg = 1 / q + deg.trace_gamma * res.value / (q * I.m * K.delta)
    trail = [{"stage": "even-field", "N": K.N, "delta": K.delta, "d": deg.d, "norm": res.value,
              "norm_method": res.method, "edges": K.n_edges}]
    return Certificate(alg, "even-field", {"ell": ell, "eps": eps, "k": I.k, "n": I.n, "m": I.m, "group": str(spec),
                                      "norm_method": norm_method}, trail, _flag("loose" if res.loose else "exact"))


def refute_even_group_robust(I: KLinInstance, ell: int, arity: int | None = None, norm_method: str = "auto") -> Certificate:
    """Group Kikuchi certificate with zero-padded formal supports."""
    if I.m == 0:
        raise ValidationError("empty instance")
    spec = I.spec
    arity = I.k if arity is None else arity
    K = build_even_group(I, ell, arity)
    res, deg = norm_of(K, method=norm_method)
    q = spec.order
    alg = 1 / q + deg.trace_gamma * res.value / (q * I.m * K.delta)
    lams = [robustness(eq.lhs, arity, spec) for eq in I.equations if eq.lhs.wt >= arity // 2]
    lam = min(lams) if lams else Fraction(1)
    trail = [{"stage": "even-group", "N": K.N, "delta": K.delta, "d": deg.d, "norm": res.value,
              "norm_method": res.method, "lambda": str(lam), "arity": arity, "edges": K.n_edges}]
    return Certificate(alg, "even-group", {"ell": ell, "k": I.k, "arity": arity, "n": I.n, "m": I.m, "group": str(spec),
                                      "norm_method": norm_method},
                       trail, _flag("loose" if res.loose else "exact"))


def _solve_unary(spec: GroupSpec, eqs: list[Equation]) -> int:
    """Exact maximum number of satisfied equations of weight at most one."""
    best = 0
    by_var: dict[int, list[tuple[int, int]]] = {}
    for eq in eqs:
        if eq.lhs.wt == 0:
            best += int(eq.rhs == 0)
        else:
            by_var.setdefault(eq.lhs.idx[0], []).append((eq.lhs.val[0], eq.rhs))
    mul = spec.mul
    for rows in by_var.values():
        a = np.array([r[0] for r in rows])
        b = np.array([r[1] for r in rows])
        counts = (mul[a[:, None], np.arange(spec.order)[None, :]] == b[:, None]).sum(axis=0)
        best += int(counts.max())
    return best


def reduce_group_pipeline(I: KLinInstance, ell: int, eps: float, norm_method: str = "auto") -> Certificate:
    """Quotient into ``G/H`` and split by post-quotient weight."""
    spec = I.spec
    if spec.is_field:
        cert = refute_even_field(I, ell, eps, norm_method) if I.k % 2 == 0 else refute_odd(I, ell, eps)
        cert.trail.insert(0, {"stage": "group-reduction", "note": "field input: no quotient"})
        return cert
    if I.k % 2:
        raise ValidationError("group reduction pipeline needs even k")
    t = math.ceil(4 / eps)
    choice = find_quotient_subgroup(spec, t)
    Q = choice.quotient
    red = choice.reduce_table()
    k = I.k
    buckets: dict[str, list[Equation]] = {"I0": [], "I1": [], "I2": []}
    for eq in I.equations:
        d = {i: int(red[a]) for i, a in zip(eq.lhs.idx, eq.lhs.val)}
        v = SparseVec.from_dict(d, I.n)
        e2 = Equation(v, int(red[eq.rhs]))
        if v.wt <= 1:
            buckets["I0"].append(e2)
        elif v.wt >= max(k - 1, 2):
            buckets["I1"].append(e2)
        else:
            buckets["I2"].append(e2)
    m = I.m
    total = Fraction(0)
    trail: list[dict[str, Any]] = [{"stage": "group-reduction", "t": t, "case": choice.case, "mu": list(choice.mu),
                                    "quotient": str(Q), "case_verified": choice.verified}]
    flags = []
    weights = {}
    for name, eqs in buckets.items():
        w = Fraction(len(eqs), m)
        weights[name] = w
        if not eqs:
            continue
        if name == "I0":
            val = Fraction(_solve_unary(Q, eqs), len(eqs))
            total += w * val
            trail.append({"stage": "I0", "weight": str(w), "alg_val": float(val), "exact": True})
            continue
        if w <= Fraction(eps) / 4:
            total += w
            trail.append({"stage": name, "weight": str(w), "alg_val": 1.0, "note": "mass <= eps/4"})
            continue
        arity = k if name == "I1" else k - 2
        sub = KLinInstance(Q, I.n, k, tuple(eqs))
        cert = refute_even_group_robust(sub, max(ell, arity // 2), arity, norm_method)
        val = min(1.0, cert.alg_val)
        flags.append(cert.soundness_flag)
        total += w * Fraction(val)
        trail.append({"stage": name, "weight": str(w), "alg_val": val, "sub": cert.trail})
    assert sum(weights.values()) == 1
    return Certificate(float(total), "group-reduction", {"ell": ell, "eps": eps, "k": k, "n": I.n, "m": m, "group": str(spec),
                                           "norm_method": norm_method},
                       trail, _flag(*flags))


# ---------------------------------------------------------------------------
# odd arity


def default_eta(k: int, eps: float) -> int:
    return 3**k * math.ceil(eps**-2)


def _mix(a: int, b: int) -> int:
    x = (a * 0x9E3779B1 + b * 0x85EBCA77 + 0x165667B1) & 0xFFFFFFFF
    x ^= x >> 15
    x = (x * 0x2C1B3C6D) & 0xFFFFFFFF
    return x ^ (x >> 12)


@dataclass
class DeletionResult:
    matrix: KikuchiMatrix
    rho: float
    retained: int
    removed_step1: int
    removed_step2: int
    fallback: bool = False


def edge_delete(K: KikuchiMatrix, eta: int, rebalance: bool = True) -> DeletionResult:
    """Bound local degrees by ``eta`` then equalise every type count, always in Hermitian pairs.

    ``rebalance=False`` stops after the degree-bounding step (for inspection).
    """
    if eta < 1:
        raise ValidationError("eta must be at least 1")
    if K.kind != "odd":
        raise ValidationError("edge deletion applies to odd Kikuchi matrices")
    E = K.n_edges
    if E == 0:
        return DeletionResult(K, 0.0, K.delta, 0, 0)
    tr = transpose_index(K)
    alive = np.ones(E, dtype=bool)
    rows, eq, eq2 = K.rows.tolist(), K.eq.tolist(), K.eq2.tolist()
    groups: dict[tuple[int, int, int], list[int]] = {}
    for i in range(E):
        groups.setdefault((rows[i], eq[i], 0), []).append(i)
        groups.setdefault((rows[i], eq2[i], 1), []).append(i)
    removed1 = 0
    for (U, v, side) in sorted(groups):
        idx = [i for i in groups[(U, v, side)] if alive[i]]
        partner_of = (lambda i: eq2[i]) if side == 0 else (lambda i: eq[i])
        partners = sorted({partner_of(i) for i in idx}, key=lambda p: (_mix(U, p), p))
        excess = len(partners) - eta
        if excess <= 0:
            continue
        drop = set(partners[-excess:])
        for i in idx:
            if partner_of(i) in drop and alive[i]:
                alive[i] = False
                alive[tr[i]] = False
                removed1 += 1 + int(tr[i] != i)
    if not rebalance:
        return DeletionResult(K.subset(alive, retained=K.delta), 0.0, K.delta, removed1, 0)
    # step 2: uniform type counts
    by_type: dict[tuple[int, int, int], list[int]] = {}
    for i in range(E):
        by_type.setdefault((eq[i], eq2[i], int(K.beta[i])), []).append(i)
    counts = {ty: sum(alive[i] for i in idx) for ty, idx in by_type.items()}
    R = int(min(counts.values()))
    if R == 0:
        return DeletionResult(K, 0.0, K.delta, 0, 0, fallback=True)
    removed2 = 0
    for ty in sorted(by_type):
        idx = sorted((i for i in by_type[ty] if alive[i]), key=lambda i: (_mix(rows[i], i), i))
        excess = len(idx) - R
        for i in idx:
            if excess <= 0:
                break
            if not alive[i]:
                continue
            alive[i] = False
            j = tr[i]
            excess -= 1
            removed2 += 1
            if j != i and alive[j]:
                alive[j] = False
                removed2 += 1
                if (eq[j], eq2[j], int(K.beta[j])) == ty:
                    excess -= 1
    out = K.subset(alive, retained=R)
    return DeletionResult(out, 1 - R / K.delta, R, removed1, removed2)


def psi_t(I: KLinInstance, decomp: BipartiteDecomposition, x) -> float:
    """``Ψ_t(x)`` from its Cauchy-Schwarz definition (sum of squared moduli)."""
    spec = I.spec
    k = I.k
    x = np.asarray(x, dtype=np.int64)
    chi, L, roots = spec.chi, spec.exponent, spec.roots
    betas = spec.nonzero
    acc = 0.0
    for b in decomp.buckets:
        for beta in betas:
            s = 0j
            for mem in b.members:
                sv = 0
                for i, a in zip(mem.vec.idx, mem.vec.val):
                    sv = int(spec.add[sv, spec.mul[a, x[i]]])
                s += roots[(chi[beta, mem.rhs] - chi[beta, sv]) % L]
            acc += abs(s) ** 2
    return k * k * decomp.n_buckets * acc / (I.m**2 * spec.order)


def refute_bipartite(I: KLinInstance, decomp: BipartiteDecomposition, ell: int, eps: float, eta: int | None = None,
                     norm_method: str = "auto", deletion: bool | None = None) -> tuple[float, dict[str, Any]]:
    """Upper bound on ``max_x Ψ_t(x)`` for one decomposition level; ``I`` is the full instance."""
    spec = I.spec
    k, n, m = I.k, I.n, I.m
    t = decomp.t
    q, units = spec.order, spec.order - 1
    U = decomp.n_buckets
    Ht = decomp.n_equations
    info: dict[str, Any] = {"stage": "bipartite", "t": t, "U": U, "H_t": Ht}
    if U == 0:
        info["bound"] = 0.0
        return 0.0, info
    pref = k * k * U / (m * m * q)
    diag = pref * units * Ht
    info["diag"] = diag
    pair_mass = sum(b.size * (b.size - 1) for b in decomp.buckets)
    if pair_mass == 0:
        info.update(spectral=0.0, bound=diag, note="singleton buckets")
        return diag, info
    if t == k:
        # A^(k) is a multiple of the identity; evaluate it in closed form
        chi, L, roots = spec.chi, spec.exponent, spec.roots
        c = 0.0
        for b in decomp.buckets:
            for beta in spec.nonzero:
                s = sum(roots[chi[beta, mem.rhs] % L] for mem in b.members)
                c += abs(s) ** 2 - b.size
        bound = diag + pref * abs(c)
        info.update(spectral=pref * abs(c), bound=bound, note="t = k closed form")
        return bound, info
    delta = odd_delta(n, k, t, ell, units)
    info["delta"] = delta
    if delta == 0:
        trivial = pref * units * sum(b.size**2 for b in decomp.buckets)
        info.update(bound=trivial, note="delta = 0: trivial bound")
        return trivial, info
    K = build_odd(decomp, spec, n, k, ell)
    use_del = (t < k / 2) if deletion is None else deletion
    per_type = delta
    if use_del:
        eta = default_eta(k, eps) if eta is None else eta
        dr = edge_delete(K, eta)
        info.update(eta=eta, rho=dr.rho, deletion_fallback=dr.fallback, retained=dr.retained)
        K = dr.matrix
        per_type = dr.retained
    res, deg = norm_of(K, method=norm_method)
    spectral = pref / per_type * deg.trace_gamma * res.value
    info.update(N=K.N, d=deg.d, norm=res.value, norm_method=res.method, loose=res.loose, spectral=spectral,
                bound=diag + spectral, edges=K.n_edges)
    return diag + spectral, info


def refute_odd(I: KLinInstance, ell: int, eps: float, eta: int | None = None, taus: dict[int, int] | None = None,
               norm_method: str = "auto", experimental_group: bool = False) -> Certificate:
    """``alg_val = 1/|F| + Σ_t sqrt(B_t)`` over a regular decomposition."""
    spec = I.spec
    if I.m == 0:
        raise ValidationError("empty instance")
    if any(eq.lhs.wt != I.k for eq in I.equations):
        raise ValidationError("odd pipeline needs weight-k equations")
    if not spec.is_field and not experimental_group:
        raise ValidationError("odd arity over groups requires the experimental flag")
    decomps = regular_decompose(I, ell, eps, taus)
    q = spec.order
    trail: list[dict[str, Any]] = [{"stage": "decomposition", "taus": decomps[0].taus,
                                    "sizes": {D.t: [D.n_buckets, D.n_equations] for D in decomps}}]
    total = 1 / q
    flags = []
    for D in decomps:
        if D.n_buckets == 0:
            continue
        if spec.is_field:
            B, info = refute_bipartite(I, D, ell, eps, eta, norm_method)
        else:
            units = len(spec.nonzero)
            B = I.k**2 * D.n_buckets * units * sum(b.size**2 for b in D.buckets) / (I.m**2 * q)
            info = {"stage": "bipartite", "t": D.t, "bound": B, "note": "group: trivial bound"}
        if info.get("loose"):
            flags.append("loose")
        info["adv"] = math.sqrt(max(B, 0.0))
        total += info["adv"]
        trail.append(info)
    kind = "odd" if spec.is_field else "odd-group-experimental"
    return Certificate(total, kind, {"ell": ell, "eps": eps, "eta": eta if eta is not None else default_eta(I.k, eps),
                                     "k": I.k, "n": I.n, "m": I.m, "group": str(spec), "norm_method": norm_method,
                                     "taus": [decomps[0].taus[t] for t in range(1, I.k + 1)]}, trail, _flag(*flags))


def refute(I: KLinInstance, ell: int, eps: float, **kw) -> Certificate:
    """Dispatch: fields with even k → even pipeline, odd k → odd pipeline, groups → reduction."""
    if I.spec.is_field:
        if I.k % 2 == 0:
            return refute_even_field(I, ell, eps, kw.get("norm_method", "auto"))
        return refute_odd(I, ell, eps, kw.get("eta"), kw.get("taus"), kw.get("norm_method", "auto"))
    if I.k % 2 == 0:
        return reduce_group_pipeline(I, ell, eps, kw.get("norm_method", "auto"))
    return refute_odd(I, ell, eps, kw.get("eta"), kw.get("taus"), kw.get("norm_method", "auto"), experimental_group=True)
