from __future__ import annotations

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings, strategies as st

from klin.spectral import gershgorin, hermitian_norm, scale, scaled_norm


def random_hermitian(N, density, seed):
    rng = np.random.default_rng(seed)
    A = sp.random(N, N, density=density, random_state=seed, format="csr", dtype=float)
    phase = np.exp(2j * np.pi * rng.integers(0, 6, size=A.nnz) / 6)
    A.data = phase
    return ((A + A.conj().T) / 2).tocsr()


def test_two_vertex_toy():
    w = np.exp(2j * np.pi / 3)
    A = sp.csr_matrix(np.array([[0, w], [np.conj(w), 0]]))
    for c in (1.0, 2.0, 5.0):
        assert abs(scaled_norm(A, np.full(2, c)).value - 1 / c) <= 1e-12


@pytest.mark.parametrize("seed", range(6))
def test_dense_vs_power(seed):
    M = random_hermitian(60, 0.08, seed)
    d = hermitian_norm(M, "dense")
    p = hermitian_norm(M, "power", seed=seed)
    assert p.converged
    assert abs(d.value - p.value) <= 1e-5 * max(1.0, d.value)


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 25), st.integers(0, 10_000))
def test_gershgorin_scaled_bound(N, seed):
    M = random_hermitian(N, 0.3, seed)
    rows = np.asarray(abs(M).sum(axis=1)).ravel()
    gamma = rows + 1.0
    val = scaled_norm(M, gamma).value
    assert val <= 1 + 1e-12
    assert hermitian_norm(M).value <= gershgorin(M) + 1e-12


def test_scale_rejects_nonpositive():
    with pytest.raises(ValueError):
        scale(sp.eye(2, format="csr"), np.array([1.0, 0.0]))


def test_zero_matrix():
    r = hermitian_norm(sp.csr_matrix((3, 3)))
    assert r.value == 0.0 and r.converged
