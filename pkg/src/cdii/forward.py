"""Forward problem ``div(gamma grad u) = f`` with Dirichlet data, and measurement synthesis."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.ndimage import gaussian_filter

from . import kernels
from .calculus import derivatives
from .conductivity import ConductivityField
from .errors import HypothesisError, SolverError
from .grid import Grid, MatrixField, ScalarField, VectorField

__all__ = [
    "BoundaryCondition",
    "SolverConfig",
    "NoiseDescriptor",
    "MeasurementSet",
    "DirichletOperator",
    "assemble_operator",
    "solve_conductivity",
    "current_density",
    "synthesize_measurements",
    "add_noise",
    "w1inf_norm",
]


@dataclass(frozen=True)
class BoundaryCondition:
    """Dirichlet data ``g``; only the boundary entries of ``values`` are used."""

    grid: Grid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.shape != self.grid.dims:
            raise ValueError(f"boundary data must have shape {self.grid.dims}")
        if not np.all(np.isfinite(v[self.grid.boundary_mask()])):
            raise ValueError("boundary data must be finite on every boundary node")
        v[~self.grid.boundary_mask()] = 0.0
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def trace(cls, u: ScalarField) -> "BoundaryCondition":
        return cls(u.grid, u.values)

    @classmethod
    def from_function(cls, grid: Grid, fn: Callable[[np.ndarray], np.ndarray]) -> "BoundaryCondition":
        return cls(grid, fn(grid.coords()))


@dataclass(frozen=True)
class SolverConfig:
    method: str = "direct"
    tol: float = 1e-10
    maxiter: int = 20000
    source: ScalarField | None = None

    def __post_init__(self):
        if self.method not in ("direct", "cg"):
            raise ValueError(f"unknown solver {self.method!r} (use 'direct' or 'cg')")
        if not self.tol > 0:
            raise ValueError("solver tolerance must be positive")


@dataclass(frozen=True)
class NoiseDescriptor:
    level: float
    radius: float
    seed: int
    norm: str = "w1inf"


@dataclass(frozen=True)
class MeasurementSet:
    """Ordered current densities ``H_1 .. H_{n+m}`` on one grid.

    ``boundary`` holds the generating Dirichlet data when known, ``kind`` is
    ``"analytic"`` (exact gradients) or ``"numeric"`` (forward solves).
    """

    grid: Grid
    currents: tuple[VectorField, ...]
    kind: str = "numeric"
    boundary: tuple[BoundaryCondition | None, ...] = ()
    noise: NoiseDescriptor | None = None
    attrs: dict = field(default_factory=dict)

    def __post_init__(self):
        currents = tuple(self.currents)
        object.__setattr__(self, "currents", currents)
        if len(currents) < self.grid.n:
            raise ValueError(f"need at least n={self.grid.n} current densities, got {len(currents)}")
        for H in currents:
            if not H.grid.same_as(self.grid):
                raise ValueError("all current densities must share the grid")
        if self.kind not in ("analytic", "numeric"):
            raise ValueError(f"kind must be 'analytic' or 'numeric', got {self.kind!r}")
        boundary = tuple(self.boundary) or (None,) * len(currents)
        if len(boundary) != len(currents):
            raise ValueError("one boundary entry per current density expected")
        object.__setattr__(self, "boundary", boundary)

    @property
    def n(self) -> int:
        return self.grid.n

    @property
    def m(self) -> int:
        return len(self.currents) - self.n

    def __len__(self):
        return len(self.currents)

    def __getitem__(self, i: int) -> VectorField:
        return self.currents[i]

    @property
    def H(self) -> MatrixField:
        """``[H_1 | ... | H_n]``."""
        return MatrixField.from_columns(self.currents[: self.n])

    def subset(self, indices: Sequence[int]) -> "MeasurementSet":
        return replace(self, currents=tuple(self.currents[i] for i in indices),
                       boundary=tuple(self.boundary[i] for i in indices))


class DirichletOperator:
    """Discrete ``-div(C grad .)`` split into interior/boundary blocks.

    Conservative 9-point (2D) / 19-nonzero 27-point-box (3D) stencil: diagonal
    fluxes with arithmetic face averages of ``C``, mixed terms by nested
    centered differences. The interior block is symmetric for symmetric ``C``.
    """

    def __init__(self, coef: MatrixField):
        grid = coef.grid
        rows, cols, vals = kernels.assemble_stencil(coef.values, grid.spacing)
        full = sp.coo_matrix((vals, (rows, cols)), shape=(grid.size, grid.size)).tocsr()
        bmask = grid.boundary_mask().ravel()
        self.grid = grid
        self.interior = np.flatnonzero(~bmask)
        self.boundary = np.flatnonzero(bmask)
        self.A = full[self.interior][:, self.interior].tocsr()
        self.A_b = full[self.interior][:, self.boundary].tocsr()

    def rhs(self, g: np.ndarray, source: np.ndarray | None = None) -> np.ndarray:
        b = -self.A_b @ g.ravel()[self.boundary]
        if source is not None:
            b = b - source.ravel()[self.interior]
        return b

    def scatter(self, u_int: np.ndarray, g: np.ndarray) -> np.ndarray:
        u = np.array(g, dtype=float).ravel()
        u[self.interior] = u_int
        return u.reshape(self.grid.dims)


def assemble_operator(coef: MatrixField) -> DirichletOperator:
    return DirichletOperator(coef)


def _as_matrix_field(gamma) -> MatrixField:
    if isinstance(gamma, ConductivityField):
        return gamma.gamma
    if isinstance(gamma, MatrixField):
        return gamma
    raise TypeError("expected ConductivityField or MatrixField")


def _linear_solve(A, b, cfg: SolverConfig, what: str):
    bnorm = np.linalg.norm(b)
    if cfg.method == "direct":
        x = spla.spsolve(A.tocsc(), b)
    else:
        x, info = spla.cg(A, b, rtol=cfg.tol, atol=0.0, maxiter=cfg.maxiter)
        if info != 0:
            res = np.linalg.norm(A @ x - b) / (bnorm or 1.0)
            raise SolverError(f"{what}: CG did not converge (relative residual {res:.3e})",
                              residual=res)
    res = np.linalg.norm(A @ x - b) / (bnorm or 1.0)
    if not np.all(np.isfinite(x)) or res > max(cfg.tol, 1e-9):
        raise SolverError(f"{what}: relative residual {res:.3e} exceeds tolerance {cfg.tol:g}",
                          residual=res)
    return x, res


def solve_conductivity(gamma, g: BoundaryCondition, cfg: SolverConfig | None = None,
                       *, return_residual: bool = False, check_spd: bool = True):
    """Solve ``div(gamma grad u) = f`` in the interior with ``u = g`` on the boundary.

    Parameters
    ----------
    gamma : ConductivityField or MatrixField
    g : BoundaryCondition
    cfg : SolverConfig, optional
        ``cfg.source`` is the optional manufactured right-hand side ``f``.
    return_residual : bool
        Also return the relative residual of the interior linear system.

    Raises
    ------
    HypothesisError
        ``gamma`` is not positive definite at some node.
    SolverError
        The linear solve failed or missed the tolerance.
    """
    cfg = cfg or SolverConfig()
    coef = _as_matrix_field(gamma)
    if not g.grid.same_as(coef.grid):
        raise ValueError("boundary data and conductivity live on different grids")
    if check_spd:
        lam = np.linalg.eigvalsh(0.5 * (coef.values + np.swapaxes(coef.values, -1, -2)))
        if np.min(lam[..., 0]) <= 0:
            node = np.unravel_index(np.argmin(lam[..., 0]), coef.grid.dims)
            raise HypothesisError(f"conductivity is not positive definite at node {node}",
                                  hypothesis="ellipticity", node=node, value=float(lam[..., 0][node]))
    op = DirichletOperator(coef)
    source = None if cfg.source is None else cfg.source.values
    b = op.rhs(g.values, source)
    x, res = _linear_solve(op.A, b, cfg, "forward solve")
    u = ScalarField(coef.grid, op.scatter(x, g.values))
    return (u, res) if return_residual else u


def current_density(gamma, u: ScalarField) -> VectorField:
    """``H = gamma grad u`` node-wise."""
    coef = _as_matrix_field(gamma)
    if not u.grid.same_as(coef.grid):
        raise ValueError("u and gamma live on different grids")
    grad = derivatives(u.values, u.grid)
    return VectorField(u.grid, np.einsum("...ij,...j->...i", coef.values, grad))


def synthesize_measurements(gamma, inputs, cfg: SolverConfig | None = None) -> MeasurementSet:
    """Current densities for a list of Dirichlet data or from an analytic case.

    ``inputs`` is either a sequence of :class:`BoundaryCondition` (each solved
    with :func:`solve_conductivity`, then :func:`current_density`) or an
    object with ``measurements(grid)`` such as ``cases.AnalyticCase``, in which
    case ``gamma`` only supplies the grid and exact gradients are used.
    """
    if hasattr(inputs, "measurements"):
        grid = _as_matrix_field(gamma).grid if gamma is not None else None
        return inputs.measurements(grid)
    inputs = list(inputs)
    coef = _as_matrix_field(gamma)
    if len(inputs) < coef.grid.n:
        raise ValueError(f"need at least {coef.grid.n} boundary conditions, got {len(inputs)}")
    currents = []
    for k, g in enumerate(inputs):
        try:
            u = solve_conductivity(coef, g, cfg)
        except SolverError as exc:
            raise exc.at_stage(f"solution {k + 1}")
        currents.append(current_density(coef, u))
    return MeasurementSet(coef.grid, tuple(currents), kind="numeric", boundary=tuple(inputs),
                          attrs={"solver": (cfg or SolverConfig()).method})


def w1inf_norm(values: np.ndarray, grid: Grid) -> float:
    """Discrete ``W^{1,inf}`` norm: largest sup-norm among the field and its first partials."""
    d = derivatives(values, grid)
    return float(max(np.max(np.abs(values)), np.max(np.abs(d))))


def _smooth_noise(rng, grid: Grid, ncomp: int, radius: float) -> np.ndarray:
    white = rng.standard_normal(grid.dims + (ncomp,))
    if radius <= 0:
        return white
    sigma = [radius / h for h in grid.spacing] + [0.0]
    return gaussian_filter(white, sigma=sigma, mode="nearest")


def add_noise(M: MeasurementSet, level: float, radius: float, seed: int = 0,
              norm: str = "w1inf") -> MeasurementSet:
    """Perturb every current density by mollified white noise.

    Each perturbation is Gaussian-filtered white noise (standard deviation
    ``radius`` in physical units) rescaled so that its discrete ``W^{1,inf}``
    norm (``norm="w1inf"``) or sup-norm (``norm="linf"``) equals ``level``.
    Deterministic for a given ``seed``; ``level == 0`` returns ``M`` unchanged.
    """
    if level < 0:
        raise ValueError("noise level must be non-negative")
    if norm not in ("w1inf", "linf"):
        raise ValueError(f"unknown noise norm {norm!r}")
    if level == 0:
        return M
    rng = np.random.default_rng(seed)
    noisy = []
    for H in M.currents:
        p = _smooth_noise(rng, M.grid, M.n, radius)
        scale = w1inf_norm(p, M.grid) if norm == "w1inf" else float(np.max(np.abs(p)))
        noisy.append(VectorField(M.grid, H.values + (level / scale) * p))
    return replace(M, currents=tuple(noisy), noise=NoiseDescriptor(level, radius, seed, norm))
