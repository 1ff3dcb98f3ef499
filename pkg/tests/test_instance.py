from __future__ import annotations

from collections import Counter
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from klin.algebra import GroupSpec, SparseVec
from klin.errors import ResourceCapError, ValidationError
from klin.instance import (Equation, KLinInstance, brute_force_val, gen_random, gen_semirandom, lhs_pattern,
                           make_instance, parse, phi_advantage, serialize, val_at, dump)

from conftest import every_x, naive_opt, naive_val

F3 = GroupSpec.prime(3)


def test_gen_random_deterministic():
    a = serialize(gen_random(F3, 6, 3, 10, seed=1))
    b = serialize(gen_random(F3, 6, 3, 10, seed=1))
    assert a == b
    assert a != serialize(gen_random(F3, 6, 3, 10, seed=2))


def test_gen_random_forced_support():
    I = gen_random(GroupSpec.prime(2), 3, 3, 1, seed=0)
    assert I.equations[0].lhs == SparseVec((0, 1, 2), (1, 1, 1), 3)


def test_gen_random_lhs_uniform():
    I = gen_random(F3, 4, 2, 10_000, seed=5)
    counts = Counter((eq.lhs.idx, eq.lhs.val) for eq in I.equations)
    assert len(counts) == 24  # C(4,2) * 2^2 patterns
    for c in counts.values():
        assert abs(c / 10_000 - 1 / 24) <= 0.01


def test_semirandom_rhs_uniform_and_lhs_kept(tmp_path):
    Z6 = GroupSpec.zm(6)
    lhs = lhs_pattern("random", Z6, 5, 2, 6000, seed=3)
    I = gen_semirandom(lhs, Z6, seed=4)
    assert I.lhs == lhs
    freq = Counter(I.rhs)
    for b in range(6):
        assert abs(freq[b] / 6000 - 1 / 6) <= 0.02
    path = tmp_path / "lhs.klin"
    dump(I, path)
    J = gen_semirandom(str(path), seed=9)
    assert J.lhs == I.lhs


def test_prefix_pattern_contract():
    for v in lhs_pattern("prefix", F3, 10, 3, 50, seed=0, width=4):
        assert max(v.idx) < 4
    for v in lhs_pattern("star", F3, 10, 3, 50, seed=0):
        assert 0 in v.idx


def test_val_at_examples():
    I = make_instance(F3, 2, 2, [({0: 1, 1: 1}, 0), ({0: 1, 1: 2}, 1)])
    # 2+1 = 0 and 2+2 = 1 mod 3
    assert val_at(I, [2, 1]) == 1
    assert naive_val(I, [2, 1]) == 1.0
    single = make_instance(F3, 3, 2, [({0: 1, 2: 2}, 1)])
    assert val_at(single, [1, 0, 0]) == 1
    J = gen_random(F3, 5, 2, 7, seed=2)
    x = [1, 0, 2, 2, 1]
    shifted = [Equation(eq.lhs, int(F3.add[eq.rhs, 1])) for eq in J.equations]
    assert val_at(J.with_equations(shifted), x) + val_at(J, x) <= 1
    sat = [Equation(eq.lhs, eq.rhs) for eq in J.equations if val_at(J.with_equations([eq]), x) == 1]
    if sat:
        bumped = J.with_equations([Equation(e.lhs, int(F3.add[e.rhs, 1])) for e in sat])
        assert val_at(bumped, x) == 0
    with pytest.raises(ValidationError):
        val_at(J, [0, 0])


def test_brute_force_examples():
    free = make_instance(F3, 4, 2, [({0: 1}, 2), ({1: 2}, 1), ({2: 1}, 0)])
    assert brute_force_val(free)[0] == 1
    pair = make_instance(F3, 3, 2, [({0: 1, 1: 1}, 0), ({0: 1, 1: 1}, 1), ({1: 1, 2: 1}, 2)])
    assert brute_force_val(pair)[0] <= Fraction(2, 3)
    I = gen_random(F3, 5, 2, 8, seed=7)
    v, x = brute_force_val(I)
    assert val_at(I, x) == v
    assert float(v) == naive_opt(I)
    rng = np.random.default_rng(0)
    for _ in range(100):
        assert val_at(I, rng.integers(0, 3, size=5)) <= v


def test_brute_force_cap():
    with pytest.raises(ResourceCapError):
        brute_force_val(gen_random(F3, 20, 2, 3, 0))


def test_phi_examples():
    I = make_instance(F3, 3, 2, [({0: 1, 1: 1}, 2), ({1: 2, 2: 1}, 0)])
    x = [1, 1, 1]
    assert val_at(I, x) == 1
    assert abs(phi_advantage(I, x) - (1 - 1 / 3)) <= 1e-9
    F2 = GroupSpec.prime(2)
    J = make_instance(F2, 2, 2, [({0: 1, 1: 1}, 1)])
    assert abs(phi_advantage(J, [0, 0]) + 0.5) <= 1e-12


def test_phi_identity_and_mean(domain):
    n = 3 if domain.order <= 4 else 2
    I = gen_random(domain, n, 2, 5, seed=11)
    total = 0j
    for x in every_x(domain.order, n):
        phi = phi_advantage(I, x)
        total += phi
        assert abs(float(val_at(I, x)) - 1 / domain.order - phi.real) <= 1e-9
        assert abs(phi.imag) <= 1e-9
    mean = total / domain.order**n
    if domain.is_field:
        assert abs(mean) <= 1e-9
    else:
        # thin equations are biased: the mean is the average of P[v.x = b] - 1/|G|
        probs = []
        for eq in I.equations:
            J = I.with_equations([eq])
            probs.append(sum(naive_val(J, x) for x in every_x(domain.order, n)) / domain.order**n)
        assert abs(mean - (np.mean(probs) - 1 / domain.order)) <= 1e-9


def test_roundtrip_fixture():
    text = "klin v1\ngroup: zm=6,2\nn: 4\nk: 2\n0:1,1 3:2,0 = 5,1\n1:3,1 = 0,0\n# comment\n2:1,0 3:1,1 = 1,1\n"
    I = parse(text)
    assert I.m == 3
    assert parse(serialize(I)) == I
    gf = gen_random("gf p=3 m=2", 5, 3, 4, seed=0)
    assert parse(serialize(gf)) == gf


@pytest.mark.parametrize("text,needle", [
    ("klin v1\ngroup: p=3\nn: 4\nk: 2\n0:0 1:1 = 1\n", "line 5"),
    ("klin v1\ngroup: p=3\nn: 4\nk: 2\n0:1 4:1 = 1\n", "out of range"),
    ("klin v1\ngroup: p=3\nn: 4\n0:1 1:1 = 1\n", "k"),
    ("klin v2\n", "line 1"),
    ("klin v1\ngroup: p=3\nn: 4\nk: 1\n0:1 1:1 = 1\n", "exceeds"),
])
def test_parse_rejects(text, needle):
    with pytest.raises(ValidationError, match=needle):
        parse(text)


@settings(max_examples=40, deadline=None)
@given(st.sampled_from(["p=2", "p=5", "gf p=2 m=2", "zm=4,3"]), st.integers(2, 6), st.integers(1, 8),
       st.integers(0, 10_000))
def test_serialize_roundtrip_property(spec_s, n, m, seed):
    I = gen_random(spec_s, n, min(2, n), m, seed)
    assert parse(serialize(I)) == I


def test_instance_rejects_overweight():
    with pytest.raises(ValidationError):
        KLinInstance(F3, 3, 1, (Equation(SparseVec((0, 1), (1, 1), 3), 0),))
