from __future__ import annotations

from collections import Counter, defaultdict
from itertools import combinations, product

import numpy as np
import pytest

from klin.algebra import GroupSpec, SparseVec, thinness
from klin.decomposition import regular_decompose
from klin.errors import ResourceCapError, ValidationError
from klin.instance import gen_random, make_instance, phi_advantage
from klin.kikuchi import (VertexSpace, build_even_field, build_even_group, build_odd, degrees, dump, even_delta,
                          field_beta_multiplicity, formal_support, hermitian_ok, local_degrees,
                          matched_half_annihilator, odd_delta, quadratic_form, type_counts)

from conftest import bucket_instance as _bucket_instance, every_x

F3 = GroupSpec.prime(3)


def sparse_vectors(spec, coords, ell, with_zero_values=False):
    """All (support, values) pairs; values range over F* or all of G."""
    vals = range(spec.order) if with_zero_values else range(1, spec.order)
    for S in combinations(range(coords), ell):
        for V in product(vals, repeat=ell):
            yield S, V


def brute_edges(spec, n, ell, P, vP, group=False, odd_blocks=None):
    """Edge set ``{(U, V, beta)}`` from the defining rule, by scanning all vertex pairs."""
    coords = 2 * n if odd_blocks else n
    verts = list(sparse_vectors(spec, coords, ell, with_zero_values=group))
    full = dict(zip(P, vP))
    Pset = set(P)
    out = set()
    for (S, U), (T, V) in product(verts, repeat=2):
        if set(S) ^ set(T) != Pset:
            continue
        if odd_blocks:
            D1, D2 = odd_blocks
            s = len(D1)
            a1, a2 = len(set(S) & D1), len(set(S) & D2)
            if {a1, a2} != {s // 2, s - s // 2} or a1 + a2 != s:
                continue
        du, dv = dict(zip(S, U)), dict(zip(T, V))
        for beta in range(1, spec.order):
            ok = True
            for i in set(S) | set(T):
                diff = int(spec.sub[du.get(i, 0), dv.get(i, 0)])
                if diff != int(spec.mul[beta, full.get(i, 0)]):
                    ok = False
                    break
            if ok:
                out.add(((S, U), (T, V), beta))
    return out


def built_edges(K, sel=None):
    sp = K.space
    out = set()
    for r, c, b, e in zip(K.rows.tolist(), K.cols.tolist(), K.beta.tolist(), K.eq.tolist()):
        if sel is None or e == sel:
            out.add((sp.unrank(r), sp.unrank(c), b))
    return out


# --- vertex spaces ----------------------------------------------------------

@pytest.mark.parametrize("kind,spec,n,ell", [("even-field", "p=3", 5, 2), ("even-group", "zm=4", 4, 2),
                                             ("odd", "p=2", 3, 2), ("even-field", "gf p=2 m=2", 4, 3)])
def test_rank_unrank_bijection(kind, spec, n, ell):
    sp = VertexSpace(kind, GroupSpec.parse(spec), n, ell)
    seen = set()
    for r in range(sp.N):
        S, V = sp.unrank(r)
        assert sp.rank(S, V) == r
        seen.add((S, V))
    assert len(seen) == sp.N
    S, V = sp.all_vertices()
    assert [sp.rank(s, v) for s, v in zip(S.tolist(), V.tolist())] == list(range(sp.N))


def test_vertex_counts():
    assert VertexSpace("even-group", GroupSpec.zm(4), 3, 1).N == 12
    assert VertexSpace("even-field", F3, 4, 1).N == 8
    assert VertexSpace("odd", F3, 3, 2).N == 4 * 15


def test_cap(monkeypatch):
    monkeypatch.setenv("KLIN_CAP_N", "10")
    with pytest.raises(ResourceCapError):
        VertexSpace("even-field", F3, 4, 2)


# --- even field -------------------------------------------------------------

def test_tiny_field_example():
    I = make_instance(F3, 4, 2, [({0: 1, 1: 1}, 0)])
    K = build_even_field(I, 1)
    sp = K.space
    b1 = {(sp.unrank(r), sp.unrank(c)) for r, c, b in zip(K.rows, K.cols, K.beta) if b == 1}
    assert b1 == {(((0,), (1,)), ((1,), (2,))), (((1,), (1,)), ((0,), (2,)))}
    assert K.delta == 2
    deg = degrees(K)
    assert (K.N, deg.total, deg.d) == (8, 4, 0.5)
    assert deg.total == int(deg.D.sum())
    assert np.all(deg.gamma > 0)


@pytest.mark.parametrize("spec,n,ell", [("p=3", 4, 1), ("p=3", 4, 2), ("gf p=2 m=2", 4, 2), ("p=5", 3, 1),
                                        ("p=2", 6, 2)])
def test_field_edges_match_rule(spec, n, ell):
    G = GroupSpec.parse(spec)
    I = gen_random(G, n, 2, 3, seed=4)
    K = build_even_field(I, ell)
    for pos, eq in enumerate(I.equations):
        want = brute_edges(G, n, ell, eq.lhs.idx, eq.lhs.val)
        assert built_edges(K, pos) == want
        assert len(want) == (G.order - 1) * even_delta(n, 2, ell, G.order - 1)


def test_field_k4_counts():
    I = gen_random(F3, 6, 4, 4, seed=1)
    K = build_even_field(I, 3)
    assert set(Counter(zip(K.eq.tolist(), K.beta.tolist())).values()) == {K.delta}
    assert K.delta == even_delta(6, 4, 3, 2) == 6 * 2 * 2


def test_field_hermitian_and_unique_beta(domain):
    if not domain.is_field:
        pytest.skip("field only")
    I = gen_random(domain, 4, 2, 6, seed=3)
    K = build_even_field(I, 2)
    assert hermitian_ok(K)
    assert max(field_beta_multiplicity(K).values()) == 1
    M = K.to_sparse().toarray()
    assert np.allclose(M, M.conj().T)


def test_field_rejects():
    with pytest.raises(ValidationError):
        build_even_field(gen_random(F3, 5, 3, 2, 0), 2)
    with pytest.raises(ValidationError):
        build_even_group(gen_random(F3, 5, 2, 2, 0), 6)


def test_no_edges_flagged():
    I = make_instance(F3, 4, 2, [])
    K = build_even_field(I, 1)
    assert K.n_edges == 0 and quadratic_form(K, [0, 0, 0, 0]) == 0
    with pytest.raises(ValidationError, match="no-certificate"):
        degrees(K)


def test_quadratic_form_matches_phi_field():
    I = gen_random(F3, 4, 2, 3, seed=8)
    K = build_even_field(I, 1)
    for x in every_x(3, 4):
        lhs = phi_advantage(I, x)
        rhs = quadratic_form(K, x) / (I.m * 3 * K.delta)
        assert abs(lhs - rhs) <= 1e-9


# --- even group -------------------------------------------------------------

@pytest.mark.parametrize("spec,n,ell", [("zm=4", 3, 1), ("zm=6", 3, 1), ("zm=4", 4, 2), ("zm=2,2", 3, 2)])
def test_group_edges_match_rule(spec, n, ell):
    G = GroupSpec.parse(spec)
    I = gen_random(G, n, 2, 3, seed=6)
    K = build_even_group(I, ell)
    for pos, eq in enumerate(I.equations):
        want = brute_edges(G, n, ell, eq.lhs.idx, eq.lhs.val, group=True)
        assert built_edges(K, pos) == want
        assert len(want) == (G.order - 1) * even_delta(n, 2, ell, G.order)


def test_group_padding_rule():
    Z4 = GroupSpec.zm(4)
    I = make_instance(Z4, 3, 2, [({1: 2}, 2)])
    K = build_even_group(I, 1)
    P, vP = formal_support(I.equations[0].lhs, 2)
    assert len(P) == 2 and set(P) >= {1}
    assert built_edges(K, 0) == brute_edges(Z4, 3, 1, tuple(P.tolist()), tuple(vP.tolist()), group=True)


def test_group_quadratic_form_and_degrees():
    Z4 = GroupSpec.zm(4)
    I = gen_random(Z4, 3, 2, 4, seed=2)
    K = build_even_group(I, 1)
    assert K.N == 12 and hermitian_ok(K)
    assert degrees(K).total == I.m * 3 * K.delta
    for x in every_x(4, 3):
        assert abs(phi_advantage(I, x) - quadratic_form(K, x) / (I.m * 4 * K.delta)) <= 1e-9


def _beta_counts(K):
    per = defaultdict(set)
    for r, e, b in zip(K.rows.tolist(), K.eq.tolist(), K.beta.tolist()):
        per[(r, e)].add(b)
    return per


@pytest.mark.parametrize("spec", ["zm=4", "zm=6"])
def test_group_multiplicity_refined(spec):
    G = GroupSpec.parse(spec)
    rows = [({0: 2, 1: 2}, 1), ({0: 3, 2: 3}, 0), ({1: 1, 2: 2}, 1), ({0: 2, 2: 4 % G.order or 2}, 0)]
    I = make_instance(G, 3, 2, rows)
    K = build_even_group(I, 1)
    for (r, e), betas in _beta_counts(K).items():
        inv_lam, zero_half = matched_half_annihilator(K, I, r, e, 2)
        assert len(betas) == (inv_lam - 1 if zero_half else inv_lam)
        assert len(betas) <= inv_lam


@pytest.mark.xfail(strict=True, reason="the count is 1/lambda - 1 at vertices whose matched half is zero")
def test_group_multiplicity_literal():
    Z4 = GroupSpec.zm(4)
    I = make_instance(Z4, 3, 2, [({0: 2, 1: 2}, 1)])
    K = build_even_group(I, 1)
    lam = thinness(I.equations[0].lhs.restrict([0]), Z4)
    assert all(len(b) == int(1 / lam) for b in _beta_counts(K).values())


# --- odd arity --------------------------------------------------------------

@pytest.mark.parametrize("spec,n,k,t,ell", [("p=2", 3, 2, 1, 1), ("p=3", 3, 2, 1, 1), ("p=2", 4, 3, 1, 2),
                                            ("p=3", 4, 3, 2, 1), ("p=2", 5, 3, 2, 2)])
def test_odd_edges_match_rule(spec, n, k, t, ell):
    G = GroupSpec.parse(spec)
    I = _bucket_instance(G, n, k, t, 3, seed=t + n)
    taus = {j: (3 if j == t else 10**6) for j in range(1, k + 1)}
    D = regular_decompose(I, ell, 1.0, taus)[t - 1]
    assert D.n_buckets == 1 and D.buckets[0].size == 3
    K = build_odd(D, G, n, k, ell)
    assert hermitian_ok(K)
    tc = type_counts(K)
    assert set(tc.values()) == {odd_delta(n, k, t, ell, G.order - 1)}
    b = D.buckets[0]
    u = set(b.u.idx)
    for m1, m2 in ((a, c) for a in b.members for c in b.members if a is not c):
        r1 = [(i, a) for i, a in zip(m1.vec.idx, m1.vec.val) if i not in u]
        r2 = [(i, a) for i, a in zip(m2.vec.idx, m2.vec.val) if i not in u]
        P = tuple(i for i, _ in r1) + tuple(i + n for i, _ in r2)
        vP = tuple(a for _, a in r1) + tuple(int(G.neg[a]) for _, a in r2)
        blocks = ({i for i, _ in r1}, {i + n for i, _ in r2})
        want = brute_edges(G, n, ell, P, vP, odd_blocks=blocks)
        got = {(U, V, bb) for r, c, bb, e, e2 in zip(K.rows.tolist(), K.cols.tolist(), K.beta.tolist(),
                                                     K.eq.tolist(), K.eq2.tolist())
               if (e, e2) == (m1.pos, m2.pos) for U, V in [(K.space.unrank(r), K.space.unrank(c))]}
        assert got == want


def test_odd_both_orientations_for_odd_split():
    # k - t = 1: the single remaining coordinate may sit on either block
    G = GroupSpec.prime(2)
    I = _bucket_instance(G, 3, 2, 1, 2, seed=0)
    D = regular_decompose(I, 1, 1.0, {1: 2, 2: 10**6})[0]
    K = build_odd(D, G, 3, 2, 1)
    assert set(K.split.tolist()) == {0, 1}
    assert odd_delta(3, 2, 1, 1, 1) == 2


def test_odd_delta_closed_form_variant():
    # the constructive count matches C(2n - 2(k-t), l - (k-t)), not C(2n - k - t, ...)
    from math import comb
    for n, k, t, ell in [(4, 3, 1, 2), (5, 3, 2, 2), (5, 3, 1, 3)]:
        s = k - t
        base = odd_delta(n, k, t, ell, 1) // ((2 if s % 2 else 1) * comb(s, s // 2) * comb(s, s - s // 2))
        assert base == comb(2 * n - 2 * s, ell - s)


def test_local_degrees_rescan():
    G = GroupSpec.prime(2)
    I = _bucket_instance(G, 5, 3, 1, 4, seed=3)
    D = regular_decompose(I, 2, 1.0, {1: 4, 2: 10**6, 3: 10**6})[0]
    K = build_odd(D, G, 5, 3, 2)
    stats = local_degrees(K)
    partners = defaultdict(set)
    for r, e, e2 in zip(K.rows.tolist(), K.eq.tolist(), K.eq2.tolist()):
        partners[(r, e, 0)].add(e2)
        partners[(r, e2, 1)].add(e)
    assert stats.counts == {key: len(v) for key, v in partners.items()}
    assert stats.max <= D.buckets[0].size - 1
    pair = _bucket_instance(G, 5, 3, 1, 2, seed=3)
    Dp = regular_decompose(pair, 2, 1.0, {1: 2, 2: 10**6, 3: 10**6})[0]
    assert local_degrees(build_odd(Dp, G, 5, 3, 2)).max <= 1


def test_dump_format():
    I = make_instance(F3, 4, 2, [({0: 1, 1: 1}, 0)])
    text = dump(build_even_field(I, 1)).splitlines()
    assert text[0].startswith("kikuchi v1 kind=even-field N=8")
    assert len(text) == 5
