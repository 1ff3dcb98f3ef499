from __future__ import annotations

from fractions import Fraction
from itertools import combinations
from math import comb

import pytest

from klin.algebra import GroupSpec
from klin.errors import ResourceCapError, ValidationError
from klin.instance import brute_force_val, gen_random, make_instance
from klin.simple import local_instance, simple_refute

F3 = GroupSpec.prime(3)


@pytest.mark.parametrize("spec,n,k,m,seed", [("p=3", 5, 2, 8, 0), ("p=2", 6, 3, 10, 1), ("zm=4", 4, 2, 7, 2),
                                             ("gf p=2 m=2", 4, 2, 6, 3)])
def test_ell_equals_n_exact(spec, n, k, m, seed):
    I = gen_random(spec, n, k, m, seed)
    cert = simple_refute(I, n)
    assert Fraction(cert.trail[0]["exact"]) == brute_force_val(I)[0]
    assert cert.trail[0]["normalizer"] == 1


@pytest.mark.parametrize("ell", [2, 3, 4])
def test_sound_sweep(ell):
    for m in range(2, 13, 2):
        for seed in range(3):
            I = gen_random(F3, 6, 2, m, seed)
            assert simple_refute(I, ell).alg_val + 1e-9 >= float(brute_force_val(I)[0])


@pytest.mark.parametrize("ell", [2, 3, 5])
def test_count_identity(ell):
    I = gen_random(F3, 6, 2, 9, seed=4)
    total = sum(sum(1 for eq in I.equations if set(eq.lhs.idx) <= set(S)) for S in combinations(range(6), ell))
    assert total == I.m * comb(6 - 2, ell - 2)


def test_coarse_levels_are_looser():
    I = gen_random(F3, 6, 2, 12, seed=7)
    top = simple_refute(I, 6).alg_val
    for ell in range(2, 6):
        assert top <= simple_refute(I, ell).alg_val + 1e-9


def test_semirandom_variant_sound():
    for seed in range(5):
        I = gen_random(F3, 6, 2, 10, seed)
        cert = simple_refute(I, 3, variant="semirandom", eps=0.5)
        assert cert.kind == "simple-semirandom"
        assert cert.alg_val + 1e-9 >= float(brute_force_val(I)[0])


def test_local_instance_reindexes():
    I = make_instance(F3, 5, 2, [({1: 1, 4: 2}, 1), ({0: 1, 2: 1}, 0)])
    J = local_instance(I, (1, 3, 4), [0])
    assert J.n == 3 and J.equations[0].lhs.as_dict() == {0: 1, 2: 2}


def test_rejects():
    I = gen_random(F3, 6, 3, 5, 0)
    with pytest.raises(ValidationError):
        simple_refute(I, 2)
    with pytest.raises(ValidationError):
        simple_refute(I, 7)
    with pytest.raises(ValidationError):
        simple_refute(I, 4, variant="other")
    with pytest.raises(ResourceCapError):
        simple_refute(I, 6, cap=100)
