"""Scaled spectral norm of a Hermitian Kikuchi matrix."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

DENSE_LIMIT = 4096


@dataclass(frozen=True)
class NormResult:
    value: float
    method: str  # "dense" | "power" | "zero"
    converged: bool
    iterations: int = 0
    gershgorin: float = float("inf")

    @property
    def loose(self) -> bool:
        return not self.converged


def scale(A: sp.spmatrix, gamma: np.ndarray) -> sp.csr_matrix:
    """``Γ^{-1/2} A Γ^{-1/2}`` for a positive diagonal ``gamma``."""
    if np.any(gamma <= 0):
        raise ValueError("Γ must be strictly positive")
    s = sp.diags(1.0 / np.sqrt(gamma))
    return (s @ A @ s).tocsr()


def gershgorin(M: sp.spmatrix) -> float:
    if M.nnz == 0:
        return 0.0
    return float(np.max(np.asarray(abs(M).sum(axis=1)).ravel()))


def hermitian_norm(M: sp.spmatrix, method: str = "auto", tol: float = 1e-6, seed: int = 0,
                   max_iter: int | None = None) -> NormResult:
    """Largest absolute eigenvalue of a Hermitian matrix."""
    N = M.shape[0]
    g = gershgorin(M)
    if M.nnz == 0:
        return NormResult(0.0, "zero", True, 0, 0.0)
    if method == "dense" or (method == "auto" and N <= DENSE_LIMIT):
        D = M.toarray()
        D = (D + D.conj().T) / 2
        w = np.linalg.eigvalsh(D)
        return NormResult(float(np.max(np.abs(w))), "dense", True, 0, g)
    rng = np.random.default_rng(seed)
    v0 = rng.standard_normal(N) + 1j * rng.standard_normal(N)
    cap = max_iter if max_iter is not None else 10 * N
    try:
        w = spla.eigsh(M.astype(complex), k=1, which="LM", v0=v0, tol=tol * 1e-4, maxiter=cap,
                       return_eigenvectors=False)
        return NormResult(float(abs(w[0])), "power", True, 0, g)
    except (spla.ArpackNoConvergence, ValueError):
        pass
    # plain power iteration on M^2 as a fallback
    x = v0 / np.linalg.norm(v0)
    prev = sigma = 0.0
    converged = False
    it = 0
    for it in range(1, cap + 1):
        y = M @ x
        sigma = float(np.linalg.norm(y))
        if sigma == 0.0:
            return NormResult(0.0, "power", True, it, g)
        z = M @ y
        x = z / np.linalg.norm(z)
        if abs(sigma - prev) <= tol * sigma:
            converged = True
            break
        prev = sigma
    y = M @ x
    z = M @ y
    theta = float(np.real(np.vdot(x, z)))
    resid = float(np.linalg.norm(z - theta * x))
    upper = float(np.sqrt(max(theta + resid, 0.0)))
    if not converged:
        upper = max(upper, sigma)
    return NormResult(min(upper, g) if g > 0 else upper, "power", converged, it, g)


def scaled_norm(A: sp.spmatrix, gamma: np.ndarray, method: str = "auto", seed: int = 0) -> NormResult:
    """``‖Γ^{-1/2} A Γ^{-1/2}‖₂``."""
    return hermitian_norm(scale(A, np.asarray(gamma, dtype=float)), method=method, seed=seed)
