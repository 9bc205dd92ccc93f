"""Local reconstructions: ``log beta`` gradient, ``beta`` by integration, ``gamma_tilde``, curl of ``gamma^-1``."""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import kernels
from .calculus import derivatives, exterior_derivative
from .conductivity import ConductivityField, unit_determinant
from .errors import CdiiError, HypothesisError, SolverError
from .forward import MeasurementSet
from .grid import Box, Grid, MatrixField, ScalarField, VectorField
from .hypotheses import (DET_TOL, ConstraintSpace, build_Z, codim_functional_B,
                         constraint_crosses, constraint_space, decomposition_coefficients)
from .linalg import SymBasis, sym

__all__ = [
    "Anchor",
    "log_beta_gradient",
    "integrability_defect",
    "integrate_gradient",
    "poisson_normal_recon",
    "reconstruct_gamma_tilde",
    "gamma_tilde_from_subset",
    "curl_gamma_inverse",
    "direct_curl",
    "JointResult",
    "joint_pipeline",
]


@dataclass(frozen=True)
class Anchor:
    """Known value ``beta(x0) > 0`` at grid node ``index``."""

    index: tuple[int, ...]
    value: float

    def __post_init__(self):
        object.__setattr__(self, "index", tuple(int(i) for i in self.index))
        if not self.value > 0:
            raise ValueError(f"anchor value must be positive, got {self.value}")

    @classmethod
    def at(cls, grid: Grid, point, value: float) -> "Anchor":
        """Anchor at the node nearest to ``point``."""
        return cls(grid.nearest_index(point), value)

    def shifted(self, box: Box) -> "Anchor":
        """Same anchor with the index expressed relative to ``box``."""
        if not box.contains(self.index):
            raise ValueError(f"anchor node {self.index} lies outside the subdomain {box}")
        return Anchor(tuple(i - lo for i, lo in zip(self.index, box.lo)), self.value)


def _apply(form: np.ndarray, A: np.ndarray, B: np.ndarray | None = None) -> np.ndarray:
    partial = np.einsum("...i,...ik->...k", A, form)
    return partial if B is None else np.einsum("...k,...k->...", partial, B)


def log_beta_gradient(H1: VectorField, H2: VectorField, gamma_tilde: MatrixField,
                      c0: float = 1e-10, subdomain: Box | None = None) -> VectorField:
    """Gradient of ``log beta`` from two current densities and the anisotropy ``gamma_tilde``.

    With ``V_j = gamma_tilde^-1 H_j`` (so ``d V_j = grad log beta ^ V_j``)::

        F = [|H1|^2 dV2 - (H1.H2) dV1](g H1, g H2) g^-1 H1 / (D |H1|^2)
            - dV1(g H1, .) / |H1|^2,      g = gamma_tilde,

    where ``D = |H1|^2 |H2|^2 - (H1.H2)^2``.

    Raises
    ------
    HypothesisError
        ``D < c0`` at a node of ``subdomain`` (default: whole grid).
    ValueError
        ``gamma_tilde`` does not have unit determinant.
    """
    grid = H1.grid
    g = gamma_tilde.values
    if np.max(np.abs(np.linalg.det(g) - 1.0)) > 1e-8:
        raise ValueError("gamma_tilde must have unit determinant")
    h1, h2 = H1.values, H2.values
    n11 = np.einsum("...i,...i->...", h1, h1)
    n22 = np.einsum("...i,...i->...", h2, h2)
    n12 = np.einsum("...i,...i->...", h1, h2)
    D = n11 * n22 - n12 ** 2
    box = (subdomain or Box.full(grid)).check(grid)
    sub = D[box.slices]
    if np.min(sub) < c0:
        local = np.unravel_index(np.argmin(sub), sub.shape)
        node = tuple(int(i + lo) for i, lo in zip(local, box.lo))
        raise HypothesisError(f"H_1 and H_2 are nearly parallel at node {node} (D={float(D[node]):.3e})",
                              hypothesis="1", node=node, value=float(D[node]))
    ginv = np.linalg.inv(g)
    V1 = np.einsum("...ij,...j->...i", ginv, h1)
    V2 = np.einsum("...ij,...j->...i", ginv, h2)
    dV1 = exterior_derivative(VectorField(grid, V1)).values
    dV2 = exterior_derivative(VectorField(grid, V2)).values
    gH1 = np.einsum("...ij,...j->...i", g, h1)
    gH2 = np.einsum("...ij,...j->...i", g, h2)
    with np.errstate(divide="ignore", invalid="ignore"):
        coef = (n11 * _apply(dV2, gH1, gH2) - n12 * _apply(dV1, gH1, gH2)) / (D * n11)
        F = coef[..., None] * V1 - _apply(dV1, gH1) / n11[..., None]
    return VectorField(grid, F)


def integrability_defect(F: VectorField, margin: int = 1) -> float:
    """``sup |dF|`` away from ``margin`` edge layers; small when ``F`` is a gradient.

    One-sided edge stencils differentiate ``F`` a second time, so the edge
    layers are excluded by default.
    """
    margin = min(margin, (min(F.grid.dims) - 1) // 2)
    return exterior_derivative(F).sup(Box.interior(F.grid, margin))


def integrate_gradient(F: VectorField, anchor: Anchor, subdomain: Box | None = None) -> ScalarField:
    """``beta(x) = beta(x0) exp(int_0^1 (x - x0) . F(x0 + t (x - x0)) dt)`` on straight segments.

    Composite trapezoid with step at most ``h`` and multilinear interpolation.
    Nodes outside ``subdomain`` (a box, hence convex) are NaN.
    """
    grid = F.grid
    box = (subdomain or Box.full(grid)).check(grid)
    if not box.contains(anchor.index):
        raise ValueError(f"anchor node {anchor.index} lies outside the subdomain")
    if not F.is_finite():
        raise CdiiError("log-beta gradient is not finite")
    x0 = grid.point(anchor.index)
    targets = grid.coords()[box.slices].reshape(-1, grid.n)
    I = kernels.integrate_segments(np.ascontiguousarray(F.values), grid.origin, grid.spacing,
                                   x0, targets)
    if not np.all(np.isfinite(I)):
        raise CdiiError("an integration segment leaves the grid")
    out = np.full(grid.dims, np.nan)
    out[box.slices] = anchor.value * np.exp(I.reshape(tuple(b - a for a, b in zip(box.lo, box.hi))))
    return ScalarField(grid, out)


def _difference_ops(dims, spacing):
    """Forward differences and face averages along each axis as sparse matrices."""
    eyes = [sp.identity(d, format="csr") for d in dims]
    diffs, avgs = [], []
    for a, (d, h) in enumerate(zip(dims, spacing)):
        D1 = sp.diags([-np.ones(d - 1), np.ones(d - 1)], [0, 1], shape=(d - 1, d)) / h
        A1 = sp.diags([0.5 * np.ones(d - 1), 0.5 * np.ones(d - 1)], [0, 1], shape=(d - 1, d))
        Dk, Ak = None, None
        for b in range(len(dims)):
            fd, fa = (D1, A1) if b == a else (eyes[b], eyes[b])
            Dk = fd if Dk is None else sp.kron(Dk, fd, format="csr")
            Ak = fa if Ak is None else sp.kron(Ak, fa, format="csr")
        diffs.append(Dk)
        avgs.append(Ak)
    return diffs, avgs


def poisson_normal_recon(F: VectorField, anchor: Anchor | None = None,
                         subdomain: Box | None = None) -> ScalarField:
    """Least-squares potential of ``F``: the discrete Neumann problem ``-lap phi = -div F``.

    Face differences of ``phi`` are fitted to face averages of ``F`` over the
    box; the normal equations are the 5-point (7-point) Neumann Laplacian with
    the flux boundary condition built in. The constant is fixed by a
    mean-zero constraint and then shifted so ``phi(x0) = log beta(x0)``.
    Returns ``log beta`` (NaN outside ``subdomain``).
    """
    grid = F.grid
    box = (subdomain or Box.full(grid)).check(grid)
    sub = grid.sub(box)
    Fv = F.values[box.slices]
    if not np.all(np.isfinite(Fv)):
        raise CdiiError("log-beta gradient is not finite")
    diffs, avgs = _difference_ops(sub.dims, sub.spacing)
    vol = float(np.prod(sub.spacing))
    A = sum(vol * D.T @ D for D in diffs)
    b = sum(vol * D.T @ (Av @ Fv[..., a].ravel()) for a, (D, Av) in enumerate(zip(diffs, avgs)))
    N = sub.size
    ones = sp.csr_matrix(np.ones((1, N)))
    K = sp.bmat([[A, ones.T], [ones, None]], format="csc")
    rhs = np.concatenate([b, [0.0]])
    sol = spla.spsolve(K, rhs)
    res = np.linalg.norm(K @ sol - rhs) / max(np.linalg.norm(rhs), 1e-300)
    if not np.all(np.isfinite(sol)) or res > 1e-9:
        raise SolverError(f"Neumann solve failed (relative residual {res:.3e})", residual=res)
    phi = sol[:N].reshape(sub.dims)
    if anchor is not None:
        local = anchor.shifted(box)
        phi = phi - phi[local.index] + np.log(anchor.value)
    out = np.full(grid.dims, np.nan)
    out[box.slices] = phi
    return ScalarField(grid, out)


def _finish_gamma_tilde(raw: np.ndarray, grid: Grid, box: Box) -> MatrixField:
    g = sym(raw)
    finite = np.all(np.isfinite(g), axis=(-1, -2))
    g = np.where(finite[..., None, None], g, np.nan)
    det = np.where(finite, np.linalg.det(np.where(finite[..., None, None], g, 0.0)), np.nan)
    lam = np.where(finite, np.linalg.eigvalsh(np.where(finite[..., None, None], g, 0.0))[..., 0], np.nan)
    sub = np.where(np.isfinite(lam), lam, -np.inf)[box.slices]
    if np.min(sub) <= 0:
        local = np.unravel_index(np.argmin(sub), sub.shape)
        node = tuple(int(i + lo) for i, lo in zip(local, box.lo))
        raise HypothesisError(f"reconstructed gamma_tilde is not positive definite at node {node}; "
                              "the data look inconsistent", hypothesis="3", node=node,
                              value=float(lam[node]))
    with np.errstate(invalid="ignore"):
        out = np.where((det > 0)[..., None, None], unit_determinant(g), np.nan)
    return MatrixField(grid, out)


def reconstruct_gamma_tilde(cs: ConstraintSpace, c1: float = 1e-10, subdomain: Box | None = None,
                            basis: SymBasis | None = None) -> MatrixField:
    """``gamma_tilde = sum_I s_I N(I) / B`` with ``s_I`` the sign making ``tr N(I)`` positive.

    The result is symmetrized and scaled to unit determinant.

    Raises
    ------
    HypothesisError
        ``B < c1`` on the subdomain, or the result is not positive definite.
    """
    grid = cs.grid
    box = (subdomain or Box.full(grid)).check(grid)
    crosses, _ = constraint_crosses(cs, basis)
    B = np.sum(np.abs(np.linalg.det(crosses)) ** (1.0 / cs.n), axis=-1)
    sub = B[box.slices]
    if np.min(sub) < c1:
        local = np.unravel_index(np.argmin(sub), sub.shape)
        node = tuple(int(i + lo) for i, lo in zip(local, box.lo))
        raise HypothesisError(f"constraint space is degenerate at node {node} (B={float(B[node]):.3e})",
                              hypothesis="3", node=node, value=float(B[node]))
    signs = np.sign(np.trace(crosses, axis1=-2, axis2=-1))
    total = np.einsum("...s,...sij->...ij", signs, crosses)
    with np.errstate(divide="ignore", invalid="ignore"):
        raw = total / B[..., None, None]
    return _finish_gamma_tilde(raw, grid, box)


def gamma_tilde_from_subset(cs: ConstraintSpace, subset, subdomain: Box | None = None,
                            basis: SymBasis | None = None) -> MatrixField:
    """``gamma_tilde`` from a single cross product ``N(I)``: ``sign N(I) / |det N(I)|^(1/n)``."""
    from .linalg import cross_product

    grid = cs.grid
    box = (subdomain or Box.full(grid)).check(grid)
    N = cross_product(cs.matrices[..., list(subset), :, :], basis or SymBasis.orthonormal(cs.n))
    s = np.sign(np.trace(N, axis1=-2, axis2=-1))
    d = np.abs(np.linalg.det(N)) ** (1.0 / cs.n)
    with np.errstate(divide="ignore", invalid="ignore"):
        raw = s[..., None, None] * N / d[..., None, None]
    return _finish_gamma_tilde(raw, grid, box)


def curl_gamma_inverse(gamma, H: MatrixField, tol: float = DET_TOL) -> dict:
    """Components ``d_q (gamma^-1)_{pl} - d_p (gamma^-1)_{ql}`` from ``gamma`` and ``H``.

    Evaluated as ``sum_ij (H^-1)_{il} ((gamma^-1)_{qj} d_p H_{ji} - (gamma^-1)_{pj} d_q H_{ji})``
    where ``H_{ji}`` is component ``j`` of ``H_i``. Keys are zero-based
    ``(l, p, q)`` with ``p < q``.
    """
    gvals = gamma.values
    grid = H.grid
    det = np.linalg.det(H.values)
    scale = np.prod(np.linalg.norm(H.values, axis=-2), axis=-1)
    if np.min(np.abs(det) / np.where(scale > 0, scale, 1.0)) < tol:
        node = tuple(int(i) for i in np.unravel_index(np.argmin(np.abs(det)), grid.dims))
        raise HypothesisError(f"H is singular at node {node}", hypothesis="2", node=node)
    Hinv = np.linalg.inv(H.values)
    ginv = np.linalg.inv(gvals)
    dH = derivatives(H.values, grid)  # [..., j, i, p] = d_p H_{ji}
    n = grid.n
    out = {}
    for p, q in combinations(range(n), 2):
        # T[..., i] row-vectors: sum_j (g^{qj} d_p H_ji - g^{pj} d_q H_ji)
        T = (np.einsum("...j,...ji->...i", ginv[..., q, :], dH[..., p])
             - np.einsum("...j,...ji->...i", ginv[..., p, :], dH[..., q]))
        val = np.einsum("...il,...i->...l", Hinv, T)
        for l in range(n):
            out[(l, p, q)] = ScalarField(grid, val[..., l])
    return out


def direct_curl(gamma) -> dict:
    """Finite-difference ``d_q (gamma^-1)_{pl} - d_p (gamma^-1)_{ql}`` of a known conductivity."""
    grid = gamma.grid
    ginv = np.linalg.inv(gamma.values)
    d = derivatives(ginv, grid)  # [..., p, l, a] = d_a (g^-1)_{pl}
    return {(l, p, q): ScalarField(grid, d[..., p, l, q] - d[..., q, l, p])
            for p, q in combinations(range(grid.n), 2) for l in range(grid.n)}


@dataclass
class JointResult:
    """Everything the joint pipeline produced, on the subdomain grid."""

    conductivity: ConductivityField
    gamma_tilde: MatrixField
    beta: ScalarField
    log_beta_gradient: VectorField
    B: ScalarField | None
    curl: dict
    integrability: float
    beta_poisson: ScalarField | None = None
    discrepancy: float | None = None
    stages: list = field(default_factory=list)


def joint_pipeline(M: MeasurementSet, anchor: Anchor, subdomain: Box | None = None, *,
                   method: str = "path", gamma_tilde: MatrixField | None = None,
                   c0: float = 1e-10, c1: float = 1e-10, basis: SymBasis | None = None,
                   omega_basis=None) -> JointResult:
    """Reconstruct ``gamma = beta gamma_tilde`` from current densities.

    Stages: decomposition coefficients, ``Z``, constraint space,
    ``gamma_tilde``, ``grad log beta``, integration. ``method`` is ``"path"``
    (segment integration), ``"poisson"`` (Neumann least squares) or
    ``"both"`` (path result returned, relative sup-discrepancy of the two
    recorded). Passing ``gamma_tilde`` skips the anisotropic stages.
    Outputs live on ``grid.sub(subdomain)``; derivatives are taken on the full grid first.

    Raises
    ------
    CdiiError
        From any stage, with the stage name prefixed to the message.
    """
    if method not in ("path", "poisson", "both"):
        raise ValueError(f"unknown integration method {method!r}")
    grid = M.grid
    box = (subdomain or Box.interior(grid)).check(grid)
    sub = grid.sub(box)
    stages = []

    def run(stage, fn, *args, **kw):
        try:
            out = fn(*args, **kw)
        except CdiiError as exc:
            raise exc.at_stage(stage)
        stages.append(stage)
        return out

    B = None
    if gamma_tilde is None:
        coeffs = run("decomposition", decomposition_coefficients, M)
        Z = run("Z", build_Z, coeffs)
        cs = run("constraint space", constraint_space, Z, M.H, omega_basis)
        B = run("B", codim_functional_B, cs, basis)
        gt = run("gamma_tilde", reconstruct_gamma_tilde, cs, c1, box, basis)
    else:
        gt = gamma_tilde
    gt_full = MatrixField(grid, np.where(np.isfinite(gt.values), gt.values, 0.0) if gamma_tilde is None
                          else gt.values)
    # values outside the box are only used by the derivative stencils near its edge
    F = run("log beta gradient", log_beta_gradient, M[0], M[1], _safe_unit(gt_full), c0, box)
    Fs = F.restrict(box)
    local = anchor.shifted(box)
    beta_p = None
    if method in ("path", "both"):
        beta = run("integration", integrate_gradient, Fs, local)
    if method in ("poisson", "both"):
        beta_p = ScalarField(sub, np.exp(run("poisson", poisson_normal_recon, Fs, local).values))
        if method == "poisson":
            beta = beta_p
    discrepancy = None
    if method == "both":
        discrepancy = float(np.max(np.abs(beta.values - beta_p.values) / np.abs(beta.values)))
    gts = gt_full.restrict(box)
    gamma = ConductivityField.from_parts(beta, gts)
    curl = run("curl", curl_gamma_inverse, gamma, M.H.restrict(box))
    return JointResult(gamma, gts, beta, Fs, B.restrict(box) if B is not None else None, curl,
                       integrability_defect(Fs), beta_p, discrepancy, stages)


def _safe_unit(g: MatrixField) -> MatrixField:
    """Replace non-SPD nodes (outside the checked box) by the identity before differentiation."""
    v = g.values
    bad = ~np.all(np.isfinite(v), axis=(-2, -1))
    bad |= np.abs(np.linalg.det(np.where(bad[..., None, None], np.eye(g.n), v)) - 1.0) > 1e-8
    return MatrixField(g.grid, np.where(bad[..., None, None], np.eye(g.n), v))
