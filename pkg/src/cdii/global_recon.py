"""Global reconstruction through the coupled elliptic system for ``(u_1, ..., u_n)``.

The system reads ``-div(S grad u_j) + sum_i W_ij . grad u_i = 0`` with
Dirichlet data ``u_j = g_j``; its solution gives ``gamma = H [grad U]^-1``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .calculus import derivatives, lie_bracket, matrix_divergence
from .conductivity import ConductivityField
from .errors import CdiiError, HypothesisError, SolverError
from .forward import BoundaryCondition, DirichletOperator, MeasurementSet, SolverConfig
from .grid import Grid, MatrixField, ScalarField, VectorField
from .hypotheses import DET_TOL, build_S, build_Z, decomposition_coefficients
from .recon import curl_gamma_inverse

__all__ = [
    "lie_bracket",
    "CoefficientBundle",
    "coefficient_fields",
    "weight_fields",
    "DiscreteSystem",
    "assemble_elliptic_system",
    "GlobalResult",
    "solve_global",
    "continuous_residual",
]


@dataclass
class CoefficientBundle:
    """Coefficients of the coupled system.

    ``v[(i, j, p, q)]`` and ``vt[(i, j, p, q)]`` are zero-based with ``p < q``;
    ``W[(i, j)]`` multiplies ``grad u_i`` in equation ``j``.
    """

    grid: Grid
    v: dict
    vt: dict
    Z1: MatrixField
    Z2: MatrixField
    H: MatrixField
    S: MatrixField | None = None
    W: dict = field(default_factory=dict)
    omega1: MatrixField | None = None
    omega2: MatrixField | None = None


def _columns(values: np.ndarray, grid: Grid) -> list[VectorField]:
    return [VectorField(grid, values[..., :, l]) for l in range(grid.n)]


def _directional(X: np.ndarray, Y: VectorField) -> np.ndarray:
    """``(X . grad) Y``."""
    return np.einsum("...a,...ba->...b", X, derivatives(Y.values, Y.grid))


def _v_terms(Z1: np.ndarray, cols: list[VectorField], grid: Grid) -> dict:
    """``delta_ij sum_l ((Z1[p,l] e_q - Z1[q,l] e_p) . grad) C_l + [C_j, Z1[p,i] e_q - Z1[q,i] e_p]``."""
    n = grid.n
    eye = np.eye(n)
    out = {}
    for p, q in combinations(range(n), 2):
        # X_l = Z1[p, l] e_q - Z1[q, l] e_p, one field per column index l
        X = [Z1[..., p, l, None] * eye[q] - Z1[..., q, l, None] * eye[p] for l in range(n)]
        diag = sum(_directional(X[l], cols[l]) for l in range(n))
        for i in range(n):
            Xi = VectorField(grid, X[i])
            for j in range(n):
                val = lie_bracket(cols[j], Xi).values
                if i == j:
                    val = val + diag
                out[(i, j, p, q)] = VectorField(grid, val)
    return out


def coefficient_fields(M: MeasurementSet, tol: float = DET_TOL) -> CoefficientBundle:
    """``v_ij^pq`` built on the columns of ``Z2^{-T}`` and ``vt_ij^pq`` on the columns of ``H``.

    Raises
    ------
    HypothesisError
        ``H`` or ``Z2`` is numerically singular at some node.
    """
    if M.m < 2:
        raise CdiiError(f"the coupled system needs n+2={M.n + 2} current densities, got {len(M)}")
    grid = M.grid
    coeffs = decomposition_coefficients(M.subset(range(M.n + 2)), tol)
    Z1, Z2 = build_Z(coeffs)
    det = np.linalg.det(Z2.values)
    scale = np.prod(np.linalg.norm(Z2.values, axis=-2), axis=-1)
    rel = np.abs(det) / np.where(scale > 0, scale, 1.0)
    if np.min(rel) < tol or np.min(scale) == 0:
        node = tuple(int(i) for i in np.unravel_index(np.argmin(rel), grid.dims))
        raise HypothesisError(f"Z_2 is singular at node {node}", hypothesis="4A", node=node,
                              value=float(det[node]))
    Zstar = np.swapaxes(np.linalg.inv(Z2.values), -1, -2)
    H = M.H
    v = _v_terms(Z1.values, _columns(Zstar, grid), grid)
    vt = _v_terms(Z1.values, _columns(H.values, grid), grid)
    return CoefficientBundle(grid, v, vt, Z1, Z2, H)


def weight_fields(bundle: CoefficientBundle, omega1, omega2) -> CoefficientBundle:
    """Attach ``S`` and ``W_ij = delta_ij div S - sum_{p<q} (w1_pq v_ij^pq + w2_pq vt_ij^pq)``.

    ``omega1``/``omega2`` are MatrixFields or constant antisymmetric matrices;
    ``w_pq`` is the ``(p, q)`` entry.
    """
    grid = bundle.grid
    n = grid.n

    def as_field(o):
        if isinstance(o, MatrixField):
            return o
        return MatrixField.constant(grid, o)

    o1, o2 = as_field(omega1), as_field(omega2)
    for o in (o1, o2):
        if np.max(np.abs(o.values + np.swapaxes(o.values, -1, -2))) > 1e-12:
            raise ValueError("Omega weights must be antisymmetric")
    S = build_S(bundle.Z1, bundle.Z2, bundle.H, o1, o2)
    divS = matrix_divergence(S).values
    W = {}
    for i in range(n):
        for j in range(n):
            w = divS.copy() if i == j else np.zeros(grid.dims + (n,))
            for p, q in combinations(range(n), 2):
                w -= (o1.values[..., p, q, None] * bundle.v[(i, j, p, q)].values
                      + o2.values[..., p, q, None] * bundle.vt[(i, j, p, q)].values)
            W[(i, j)] = VectorField(grid, w)
    bundle.S, bundle.W, bundle.omega1, bundle.omega2 = S, W, o1, o2
    return bundle


def continuous_residual(bundle: CoefficientBundle, grads: list[VectorField]) -> list[ScalarField]:
    """``-div(S grad u_j) + sum_i W_ij . grad u_i`` evaluated from gradient fields."""
    grid = bundle.grid
    out = []
    for j, g in enumerate(grads):
        flux = VectorField(grid, np.einsum("...ab,...b->...a", bundle.S.values, g.values))
        r = -np.trace(derivatives(flux.values, grid), axis1=-2, axis2=-1)
        for i, gi in enumerate(grads):
            r = r + np.einsum("...a,...a->...", bundle.W[(i, j)].values, gi.values)
        out.append(ScalarField(grid, r))
    return out


def _centered(grid: Grid, a: int) -> sp.csr_matrix:
    """Centered first difference along axis ``a`` at interior rows, full-grid columns."""
    idx = np.arange(grid.size).reshape(grid.dims)
    inner = tuple(slice(1, -1) for _ in range(grid.n))
    rows = idx[inner].ravel()
    plus = [slice(1, -1)] * grid.n
    minus = [slice(1, -1)] * grid.n
    plus[a] = slice(2, None)
    minus[a] = slice(0, -2)
    h = grid.spacing[a]
    cols = np.concatenate([idx[tuple(plus)].ravel(), idx[tuple(minus)].ravel()])
    vals = np.concatenate([np.full(rows.size, 0.5 / h), np.full(rows.size, -0.5 / h)])
    return sp.csr_matrix((vals, (np.concatenate([rows, rows]), cols)),
                         shape=(grid.size, grid.size))


@dataclass
class DiscreteSystem:
    """Block system over ``n`` interior unknown vectors; boundary data folded into ``rhs``."""

    grid: Grid
    matrix: sp.csr_matrix
    rhs: np.ndarray
    interior: np.ndarray
    boundary_values: list[np.ndarray]
    bundle: CoefficientBundle

    @property
    def unknowns(self) -> int:
        return self.matrix.shape[0]


def assemble_elliptic_system(M: MeasurementSet, omega1, omega2,
                             boundary: list[BoundaryCondition] | None = None,
                             spd_tol: float = 0.0) -> DiscreteSystem:
    """Discretize the coupled system with the conservative stencil for ``S``.

    Parameters
    ----------
    M : MeasurementSet
        At least ``n + 2`` current densities.
    omega1, omega2 : MatrixField or ndarray
    boundary : list of BoundaryCondition, optional
        Dirichlet data ``g_1..g_n``; defaults to the boundary data stored in ``M``.

    Raises
    ------
    HypothesisError
        ``S`` is not positive definite somewhere, or a ``Z``/``H`` singularity.
    """
    grid = M.grid
    n = grid.n
    boundary = list(boundary) if boundary is not None else list(M.boundary[:n])
    if len(boundary) != n or any(b is None for b in boundary):
        raise CdiiError(f"need Dirichlet data for the first {n} solutions")
    bundle = weight_fields(coefficient_fields(M), omega1, omega2)
    lam = np.linalg.eigvalsh(bundle.S.values)[..., 0]
    if np.min(lam) <= spd_tol:
        node = tuple(int(i) for i in np.unravel_index(np.argmin(lam), grid.dims))
        raise HypothesisError(f"S is not positive definite at node {node} (min eigenvalue "
                              f"{float(lam[node]):.3e})", hypothesis="4B", node=node,
                              value=float(lam[node]))
    op = DirichletOperator(bundle.S)
    interior, bnd = op.interior, op.boundary
    G = [_centered(grid, a)[interior] for a in range(n)]
    blocks = [[None] * n for _ in range(n)]
    rhs = []
    gvals = [b.values.ravel() for b in boundary]
    for j in range(n):
        r = op.rhs(boundary[j].values)
        for i in range(n):
            Wij = bundle.W[(i, j)].values.reshape(-1, n)[interior]
            C = sum(sp.diags(Wij[:, a]) @ G[a] for a in range(n)).tocsr()
            blk = C[:, interior]
            r = r - C[:, bnd] @ gvals[i][bnd]
            if i == j:
                blk = blk + op.A
            blocks[j][i] = blk
        rhs.append(r)
    K = sp.bmat(blocks, format="csr")
    if not np.all(np.isfinite(K.data)):
        raise CdiiError("coupled system has non-finite coefficients")
    return DiscreteSystem(grid, K, np.concatenate(rhs), interior, gvals, bundle)


@dataclass
class GlobalResult:
    solutions: list[ScalarField]
    conductivity: ConductivityField
    asymmetry: float
    residual: float
    curl: dict


def solve_global(system: DiscreteSystem, M: MeasurementSet, cfg: SolverConfig | None = None,
                 tol: float = DET_TOL) -> GlobalResult:
    """Solve the coupled system and recover ``gamma = H [grad U]^-1`` (symmetrized).

    ``cfg.method == "cg"`` selects a Krylov solver (BiCGSTAB, since the block
    system is not symmetric); ``"direct"`` uses a sparse LU factorization.

    Raises
    ------
    SolverError
        The solve failed or missed its tolerance.
    HypothesisError
        ``[grad U]`` is singular at some node.
    """
    cfg = cfg or SolverConfig()
    K, b = system.matrix, system.rhs
    bnorm = np.linalg.norm(b) or 1.0
    if cfg.method == "direct":
        x = spla.spsolve(K.tocsc(), b)
    else:
        x, info = spla.bicgstab(K, b, rtol=cfg.tol, atol=0.0, maxiter=cfg.maxiter)
        if info != 0:
            res = np.linalg.norm(K @ x - b) / bnorm
            raise SolverError(f"coupled system: Krylov solver did not converge (residual {res:.3e})",
                              residual=res)
    res = float(np.linalg.norm(K @ x - b) / bnorm)
    if not np.all(np.isfinite(x)) or res > max(cfg.tol, 1e-9):
        raise SolverError(f"coupled system: relative residual {res:.3e}", residual=res)
    grid = system.grid
    n = grid.n
    m = system.interior.size
    sols = []
    for j in range(n):
        u = system.boundary_values[j].copy()
        u[system.interior] = x[j * m:(j + 1) * m]
        sols.append(ScalarField(grid, u.reshape(grid.dims)))
    DU = np.stack([derivatives(u.values, grid) for u in sols], axis=-1)  # columns grad u_i
    det = np.linalg.det(DU)
    scale = np.prod(np.linalg.norm(DU, axis=-2), axis=-1)
    rel = np.abs(det) / np.where(scale > 0, scale, 1.0)
    if np.min(rel) < tol:
        node = tuple(int(i) for i in np.unravel_index(np.argmin(rel), grid.dims))
        raise HypothesisError(f"reconstructed gradients are dependent at node {node}",
                              hypothesis="2", node=node, value=float(det[node]))
    g = M.H.values @ np.linalg.inv(DU)
    asym = float(np.max(np.abs(g - np.swapaxes(g, -1, -2))))
    gamma = ConductivityField(MatrixField(grid, 0.5 * (g + np.swapaxes(g, -1, -2))))
    curl = curl_gamma_inverse(gamma, M.H)
    return GlobalResult(sols, gamma, asym, res, curl)
