"""Pointwise non-degeneracy checks and the derived objects ``mu_k``, ``Z_k``, constraint space, ``B`` and ``S``."""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .calculus import derivatives
from .errors import CdiiError, HypothesisError
from .forward import MeasurementSet
from .grid import Box, Grid, MatrixField, ScalarField, VectorField
from .linalg import SymBasis, antisym_basis, cross_product, sym

__all__ = [
    "DET_TOL",
    "DecompositionCoefficients",
    "ConstraintSpace",
    "HypothesisReport",
    "functional_F1",
    "functional_F2",
    "decomposition_coefficients",
    "cramer_coefficients",
    "build_Z",
    "constraint_space",
    "constraint_crosses",
    "codim_functional_B",
    "build_S",
    "check_hypotheses",
]

DET_TOL = 1e-10


def _relative_det(cols: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """``det`` of ``(..., n, n)`` and the same divided by the product of column norms."""
    det = np.linalg.det(cols)
    scale = np.prod(np.linalg.norm(cols, axis=-2), axis=-1)
    with np.errstate(divide="ignore", invalid="ignore"):
        rel = np.where(scale > 0, np.abs(det) / np.where(scale > 0, scale, 1.0), 0.0)
    return det, rel


def _node(index) -> tuple[int, ...]:
    return tuple(int(i) for i in index)


def functional_F1(g1: VectorField, g2: VectorField) -> ScalarField:
    """``|g1|^2 |g2|^2 - (g1 . g2)^2``: zero exactly where the two fields are parallel."""
    if not g1.grid.same_as(g2.grid):
        raise ValueError("fields live on different grids")
    a, b = g1.values, g2.values
    aa = np.einsum("...i,...i->...", a, a)
    bb = np.einsum("...i,...i->...", b, b)
    ab = np.einsum("...i,...i->...", a, b)
    return ScalarField(g1.grid, aa * bb - ab * ab)


def functional_F2(*grads: VectorField) -> ScalarField:
    """Node-wise ``det(g_1, ..., g_n)`` of the matrix whose columns are the fields."""
    if len(grads) == 1 and not isinstance(grads[0], VectorField):
        grads = tuple(grads[0])
    grid = grads[0].grid
    if len(grads) != grid.n:
        raise ValueError(f"F2 takes exactly n={grid.n} fields, got {len(grads)}")
    return ScalarField(grid, np.linalg.det(MatrixField.from_columns(grads).values))


@dataclass(frozen=True)
class DecompositionCoefficients:
    """``mu_k`` with ``H mu_k = H_{n+k}``; ``residual`` is the worst relative residual."""

    grid: Grid
    mu: tuple[VectorField, ...]
    residual: float

    @property
    def m(self) -> int:
        return len(self.mu)


def _check_H(H: np.ndarray, grid: Grid, tol: float):
    det, rel = _relative_det(H)
    if not np.all(np.isfinite(det)) or np.min(rel) < tol:
        node = _node(np.unravel_index(np.argmin(np.where(np.isfinite(rel), rel, -1.0)), grid.dims))
        raise HypothesisError(
            f"current densities H_1..H_n are linearly dependent at node {node} "
            f"(relative det {float(rel[node]):.3e} < {tol:g})",
            hypothesis="2", node=node, value=float(det[node]))
    return det


def decomposition_coefficients(M: MeasurementSet, tol: float = DET_TOL) -> DecompositionCoefficients:
    """Solve ``H mu_k = H_{n+k}`` at every node for ``k = 1..m``.

    Raises
    ------
    HypothesisError
        ``|det H|`` falls below ``tol`` times the product of the column norms
        at some node; the message names the node.
    """
    if M.m < 1:
        raise CdiiError(f"decomposition needs more than n={M.n} current densities")
    H = M.H.values
    _check_H(H, M.grid, tol)
    rhs = np.stack([M[M.n + k].values for k in range(M.m)], axis=-1)  # (..., n, m)
    mu = np.linalg.solve(H, rhs)
    res = np.linalg.norm(np.einsum("...ij,...jk->...ik", H, mu) - rhs, axis=-2)
    ref = np.linalg.norm(rhs, axis=-2)
    worst = float(np.max(res / np.maximum(ref, np.finfo(float).tiny))) if res.size else 0.0
    return DecompositionCoefficients(
        M.grid, tuple(VectorField(M.grid, mu[..., k]) for k in range(M.m)), worst)


def cramer_coefficients(M: MeasurementSet) -> DecompositionCoefficients:
    """Same coefficients from determinant ratios ``det(H with column i -> H_{n+k}) / det H``."""
    H = M.H.values
    det = np.linalg.det(H)
    out = []
    for k in range(M.m):
        b = M[M.n + k].values
        mu = np.empty(M.grid.dims + (M.n,))
        for i in range(M.n):
            Hi = H.copy()
            Hi[..., :, i] = b
            mu[..., i] = np.linalg.det(Hi) / det
        out.append(VectorField(M.grid, mu))
    return DecompositionCoefficients(M.grid, tuple(out), float("nan"))


def build_Z(coeffs: DecompositionCoefficients) -> list[MatrixField]:
    """``Z_k`` with column ``i`` equal to ``grad mu_k^i``, i.e. ``Z_k[a, i] = d_a mu_k^i``."""
    out = []
    for mu in coeffs.mu:
        if not mu.is_finite():
            raise CdiiError("decomposition coefficients are not finite")
        d = derivatives(mu.values, mu.grid)  # [..., i, a] = d_a mu^i
        out.append(MatrixField(mu.grid, np.swapaxes(d, -1, -2)))
    return out


@dataclass(frozen=True)
class ConstraintSpace:
    """Symmetric matrices ``(Z_k H^T Omega)^sym`` per node.

    ``matrices`` has shape ``(*dims, count, n, n)`` with ``count = m n (n-1) / 2``;
    ``labels[j] = (k, p)`` records the solution index and the ``Omega`` basis index.
    """

    grid: Grid
    matrices: np.ndarray
    labels: tuple[tuple[int, int], ...]

    @property
    def count(self) -> int:
        return self.matrices.shape[-3]

    @property
    def n(self) -> int:
        return self.grid.n

    def rank(self, rtol: float = 1e-8) -> np.ndarray:
        """Numerical rank of the span at every node (coordinates in an orthonormal basis)."""
        c = SymBasis.orthonormal(self.n).coords(self.matrices)
        s = np.linalg.svd(c, compute_uv=False)
        top = s[..., :1]
        return np.sum(s > rtol * np.where(top > 0, top, 1.0), axis=-1) * (top[..., 0] > 0)

    def rank_report(self) -> dict:
        target = self.n * (self.n + 1) // 2 - 1
        r = self.rank()
        return {"target": target, "min_rank": int(np.min(r)),
                "deficient_nodes": int(np.sum(r < target))}


def constraint_space(Z: list[MatrixField], H: MatrixField,
                     omega_basis: np.ndarray | None = None) -> ConstraintSpace:
    """All ``(Z_k H^T Omega)^sym`` for ``Omega`` in a basis of antisymmetric matrices.

    ``omega_basis`` defaults to ``e_p (x) e_q - e_q (x) e_p`` for ``p < q``.
    """
    n = H.grid.n
    basis = antisym_basis(n) if omega_basis is None else np.asarray(omega_basis, dtype=float)
    if basis.shape != (n * (n - 1) // 2, n, n):
        raise ValueError(f"need {n * (n - 1) // 2} antisymmetric {n}x{n} matrices")
    mats, labels = [], []
    for k, Zk in enumerate(Z):
        if not Zk.grid.same_as(H.grid):
            raise ValueError("Z and H live on different grids")
        ZH = np.einsum("...ij,...kj->...ik", Zk.values, H.values)
        for p, om in enumerate(basis):
            mats.append(sym(ZH @ om))
            labels.append((k, p))
    return ConstraintSpace(H.grid, np.stack(mats, axis=-3), tuple(labels))


def constraint_crosses(cs: ConstraintSpace, basis: SymBasis | None = None):
    """Cross products ``N(I)`` over every ``(n_S - 1)``-subset ``I`` of the constraints.

    Returns the array ``(*dims, len(subsets), n, n)`` and the list of subsets.
    """
    n = cs.n
    nS = n * (n + 1) // 2
    if cs.count < nS - 1:
        raise CdiiError(f"{cs.count} constraints cannot span a codimension-one subspace of "
                        f"S_{n} (need {nS - 1}); provide more solutions")
    basis = basis or SymBasis.orthonormal(n)
    subsets = list(combinations(range(cs.count), nS - 1))
    crosses = np.stack([cross_product(cs.matrices[..., list(I), :, :], basis) for I in subsets],
                       axis=-3)
    return crosses, subsets


def codim_functional_B(cs: ConstraintSpace, basis: SymBasis | None = None) -> ScalarField:
    """``B = sum_I |det N(I)|^(1/n)``; positive exactly where the constraints span a hyperplane."""
    crosses, _ = constraint_crosses(cs, basis)
    vals = np.sum(np.abs(np.linalg.det(crosses)) ** (1.0 / cs.n), axis=-1)
    return ScalarField(cs.grid, vals)


def _as_values(m, grid: Grid) -> np.ndarray:
    if isinstance(m, MatrixField):
        return m.values
    a = np.asarray(m, dtype=float)
    return np.broadcast_to(a, grid.dims + (grid.n, grid.n)) if a.shape == (grid.n, grid.n) else a


def build_S(Z1: MatrixField, Z2: MatrixField, H: MatrixField, omega1, omega2,
            tol: float = DET_TOL) -> MatrixField:
    """``S = (Z2^{-T} Z1^T Omega1 + H Z1^T Omega2)^sym``.

    ``omega1``/``omega2`` are MatrixFields or constant ``n x n`` arrays.

    Raises
    ------
    HypothesisError
        ``Z2`` is numerically singular at some node.
    """
    grid = H.grid
    z2 = Z2.values
    det, rel = _relative_det(z2)
    if np.min(rel) < tol:
        node = _node(np.unravel_index(np.argmin(rel), grid.dims))
        raise HypothesisError(f"Z_2 is singular at node {node} (relative det {float(rel[node]):.3e})",
                              hypothesis="4A", node=node, value=float(det[node]))
    z1t = np.swapaxes(Z1.values, -1, -2)
    o1, o2 = _as_values(omega1, grid), _as_values(omega2, grid)
    first = np.linalg.solve(np.swapaxes(z2, -1, -2), z1t @ o1)
    return MatrixField(grid, sym(first + H.values @ z1t @ o2))


@dataclass(frozen=True)
class HypothesisReport:
    """Infimum of one functional over a subdomain, compared with its threshold.

    ``gating`` is False for purely informational reports, which never make
    :func:`all_passed` fail.
    """

    hypothesis: str
    description: str
    infimum: float
    threshold: float
    node: tuple[int, ...]
    location: tuple[float, ...]
    gating: bool = True

    @property
    def passed(self) -> bool:
        return bool(self.infimum >= self.threshold)

    def line(self) -> str:
        status = "pass" if self.passed else ("FAIL" if self.gating else "info")
        loc = ", ".join(f"{c:.4g}" for c in self.location)
        return (f"Hyp {self.hypothesis:<6} {self.description:<28} inf={self.infimum:.6e} "
                f"threshold={self.threshold:.1e} at ({loc}) {status}")


def _report(name, desc, values: np.ndarray, grid: Grid, box: Box, threshold, gating=True):
    sub = values[box.slices]
    bad = ~np.isfinite(sub)
    sub = np.where(bad, -np.inf, sub)
    local = np.unravel_index(np.argmin(sub), sub.shape)
    node = tuple(int(i + lo) for i, lo in zip(local, box.lo))
    inf = float(sub[local])
    return HypothesisReport(name, desc, inf, float(threshold), node,
                            tuple(float(c) for c in grid.point(node)), gating)


def all_passed(reports) -> bool:
    return all(r.passed for r in reports if r.gating)


def check_hypotheses(M: MeasurementSet, subdomain: Box | None = None, c0: float = 1e-8,
                     c1: float | None = None, *, gamma=None, omegas=None, which=None,
                     omega_basis=None, basis: SymBasis | None = None) -> list[HypothesisReport]:
    """Evaluate the hypothesis functionals and report their infima over ``subdomain``.

    Parameters
    ----------
    M : MeasurementSet
    subdomain : Box, optional
        Defaults to the grid minus one boundary layer.
    c0, c1 : float
        Thresholds; ``c1`` (for ``B``) defaults to ``c0``.
    gamma : ConductivityField or MatrixField, optional
        When given, gradients ``gamma^-1 H_i`` enter F1/F2; otherwise the
        current densities themselves are used (same zero set).
    omegas : (Omega1, Omega2), optional
        Weights for ``S``; required for hypothesis 4B.
    which : iterable of str, optional
        Subset of ``"1", "2", "3", "4A", "4B"``. By default every check the
        data supports is run; explicitly requested checks that the data cannot
        support raise :class:`CdiiError`.

    Returns
    -------
    list of HypothesisReport
        ``4A`` reports ``|det Z_2|`` (the inverted matrix) and gates;
        ``4A-Z1`` reports ``|det Z_1|`` for information. When ``H`` is
        singular somewhere, checks 3, 4A and 4B are reported as failed with a
        NaN infimum at that node instead of raising.
    """
    grid = M.grid
    box = (subdomain or Box.interior(grid)).check(grid)
    c1 = c0 if c1 is None else c1
    n, m = M.n, M.m
    nS = n * (n + 1) // 2
    supported = {"1": len(M) >= 2, "2": True,
                 "3": m * n * (n - 1) // 2 >= nS - 1 and m >= 1,
                 "4A": m >= 2, "4B": m >= 2 and omegas is not None}
    if which is None:
        which = [k for k in ("1", "2", "3", "4A", "4B") if supported[k]]
    else:
        which = [str(w).upper() for w in which]
        for w in which:
            if w not in supported:
                raise ValueError(f"unknown hypothesis {w!r}")
            if not supported[w]:
                need = {"1": "two solutions", "3": f"{nS - 1} constraints",
                        "4A": "two additional solutions",
                        "4B": "two additional solutions and Omega weights"}[w]
                raise CdiiError(f"hypothesis {w} needs {need}; got {len(M)} solutions")

    if gamma is not None:
        ginv = np.linalg.inv(gamma.values)
        grads = [VectorField(grid, np.einsum("...ij,...j->...i", ginv, H.values)) for H in M.currents]
    else:
        grads = list(M.currents)

    reports = []
    if "1" in which:
        F1 = functional_F1(grads[0], grads[1]).values
        reports.append(_report("1", "F1 (two independent)", F1, grid, box, c0))
    if "2" in which:
        F2 = np.abs(functional_F2(*grads[:n]).values)
        reports.append(_report("2", "|F2| (basis)", F2, grid, box, c0))
    if not any(w in which for w in ("3", "4A", "4B")):
        return reports

    try:
        coeffs = decomposition_coefficients(M)
    except HypothesisError as exc:
        # everything below needs mu; report it as undefined where H is singular
        node = exc.node or tuple(box.lo)
        loc = tuple(float(c) for c in grid.point(node))
        thr = {"3": c1, "4A": c0, "4B": c0}
        for w in ("3", "4A", "4B"):
            if w in which:
                reports.append(HypothesisReport(w, "undefined (H singular)", float("nan"), thr[w],
                                                node, loc))
        return reports
    Z = build_Z(coeffs)
    if "3" in which:
        cs = constraint_space(Z, M.H, omega_basis)
        B = codim_functional_B(cs, basis).values
        reports.append(_report("3", "B (codimension one)", B, grid, box, c1))
    if "4A" in which:
        d2 = np.abs(np.linalg.det(Z[1].values))
        d1 = np.abs(np.linalg.det(Z[0].values))
        reports.append(_report("4A", "|det Z2| (inverted)", d2, grid, box, c0))
        reports.append(_report("4A-Z1", "|det Z1|", d1, grid, box, c0, gating=False))
    if "4B" in which:
        try:
            S = build_S(Z[0], Z[1], M.H, *omegas)
            lam = np.linalg.eigvalsh(S.values)[..., 0]
        except HypothesisError:
            lam = np.full(grid.dims, -np.inf)
        reports.append(_report("4B", "min eig S (ellipticity)", lam, grid, box, c0))
    return reports
