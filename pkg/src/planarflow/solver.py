"""Graph Laplacian and Dirichlet solves with unit conductances."""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import ContractError, ResourceError
from .planarmap import PlanarMap

DENSE_LIMIT = 2000


def laplacian(pmap: PlanarMap) -> sp.csr_matrix:
    """``L = D - A`` counting parallel edges; loops contribute nothing."""
    ends = pmap.edge_endpoints
    u, w = ends[:, 0], ends[:, 1]
    keep = u != w
    u, w = u[keep], w[keep]
    n = pmap.n_vertices
    ones = np.ones(len(u))
    adj = sp.coo_matrix((np.concatenate([ones, ones]), (np.concatenate([u, w]), np.concatenate([w, u]))),
                        shape=(n, n)).tocsr()
    deg = np.asarray(adj.sum(axis=1)).ravel()
    return (sp.diags(deg) - adj).tocsr()


def dirichlet(pmap: PlanarMap, fixed_idx: np.ndarray, fixed_val: np.ndarray, *,
              method: str = "direct", lap: sp.csr_matrix | None = None) -> np.ndarray:
    """Harmonic extension of prescribed values.

    Every connected component must contain a prescribed vertex. ``method`` is
    ``"direct"`` (sparse LU), ``"cg"`` (Jacobi-preconditioned conjugate
    gradient with a dense fallback on small systems) or ``"dense"``.
    """
    n = pmap.n_vertices
    fixed_idx = np.asarray(fixed_idx, dtype=np.int64)
    if len(fixed_idx) == 0:
        raise ContractError("at least one vertex must be prescribed")
    comp = pmap.component_of
    has_fixed = np.zeros(pmap.n_components, dtype=bool)
    has_fixed[comp[fixed_idx]] = True
    if not has_fixed.all():
        c = int(np.flatnonzero(~has_fixed)[0])
        v = int(np.flatnonzero(comp == c)[0])
        raise ContractError(f"component of vertex {v} has no prescribed vertex")
    L = laplacian(pmap) if lap is None else lap
    u = np.zeros(n)
    u[fixed_idx] = fixed_val
    free = np.ones(n, dtype=bool)
    free[fixed_idx] = False
    fi = np.flatnonzero(free)
    if len(fi) == 0:
        return u
    Lff = L[fi][:, fi]
    rhs = -(L[fi][:, fixed_idx] @ np.asarray(fixed_val, dtype=float))
    u[fi] = _solve(Lff.tocsc(), rhs, method)
    return u


def _solve(A: sp.csc_matrix, b: np.ndarray, method: str) -> np.ndarray:
    m = A.shape[0]
    if method == "dense" or (method == "cg" and m < DENSE_LIMIT):
        if m > 20000:
            raise ResourceError(f"dense solve of size {m} refused")
        return np.linalg.solve(A.toarray(), b)
    if method == "direct":
        return spla.spsolve(A, b)
    if method == "cg":
        dinv = 1.0 / A.diagonal()
        M = spla.LinearOperator(A.shape, matvec=lambda x: dinv * x)
        x, info = spla.cg(A, b, rtol=1e-12, atol=0.0, maxiter=20 * m, M=M)
        if info != 0:
            return spla.spsolve(A, b)
        return x
    raise ContractError(f"unknown solver method {method!r}")
