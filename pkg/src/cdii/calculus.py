"""Finite-difference calculus on grid fields.

All derivatives use second-order central differences in the interior and
second-order one-sided stencils on the boundary (``numpy.gradient`` with
``edge_order=2``), so every operator is exact on quadratic polynomials and can
be evaluated up to the boundary.
"""

from __future__ import annotations

import numpy as np

from .grid import Grid, MatrixField, ScalarField, TwoFormField, VectorField, _check_grid

__all__ = [
    "derivatives",
    "jacobian",
    "gradient",
    "divergence",
    "matrix_divergence",
    "exterior_derivative",
    "wedge",
    "two_form_apply",
    "lie_bracket",
]


def derivatives(values: np.ndarray, grid: Grid) -> np.ndarray:
    """Partial derivatives of a raw node array along every spatial axis.

    Returns an array with one extra trailing axis: ``out[..., a] = d/dx_{a+1}``.
    """
    values = np.asarray(values, dtype=float)
    if values.shape[: grid.n] != grid.dims:
        raise ValueError(f"array of shape {values.shape} does not live on grid {grid.dims}")
    parts = np.gradient(values, *grid.spacing, axis=tuple(range(grid.n)), edge_order=2)
    if grid.n == 1:  # pragma: no cover - grids are 2D/3D
        parts = [parts]
    return np.stack(parts, axis=-1)


def jacobian(V: VectorField) -> MatrixField:
    """``DV`` with entries ``[b, a] = d_a V^b``."""
    return MatrixField(V.grid, derivatives(V.values, V.grid))


def gradient(f: ScalarField) -> VectorField:
    if not isinstance(f, ScalarField):
        raise TypeError("gradient expects a ScalarField")
    return VectorField(f.grid, derivatives(f.values, f.grid))


def divergence(V: VectorField) -> ScalarField:
    return ScalarField(V.grid, np.trace(derivatives(V.values, V.grid), axis1=-2, axis2=-1))


def matrix_divergence(S: MatrixField) -> VectorField:
    """Row-contracted divergence ``(div S)_b = sum_a d_a S_ab``."""
    d = derivatives(S.values, S.grid)  # [..., a, b, c] = d_c S_ab
    return VectorField(S.grid, np.einsum("...aba->...b", d))


def exterior_derivative(V: VectorField) -> TwoFormField:
    """``dV`` with coefficients ``c_ij = d_i V^j - d_j V^i``."""
    J = derivatives(V.values, V.grid)  # [..., j, i] = d_i V^j
    c = np.swapaxes(J, -1, -2) - J
    return TwoFormField(V.grid, c)


def wedge(A: VectorField, B: VectorField) -> TwoFormField:
    """Pointwise ``A ^ B``, i.e. ``c_ij = A_i B_j - A_j B_i``."""
    _check_grid(B, A.grid)
    a, b = A.values, B.values
    outer = a[..., :, None] * b[..., None, :]
    return TwoFormField(A.grid, outer - np.swapaxes(outer, -1, -2))


def two_form_apply(omega: TwoFormField, A: VectorField, B: VectorField | None = None):
    """Pair a two-form with one or two vector fields.

    ``omega(A, .)`` is the vector with components ``sum_i A_i c_ik``; pairing
    with a second field gives the scalar ``A^T c B``. This is the linear
    extension of ``(A ^ B)(C, D) = (A.C)(B.D) - (A.D)(B.C)``.
    """
    _check_grid(A, omega.grid)
    partial = np.einsum("...i,...ik->...k", A.values, omega.values)
    if B is None:
        return VectorField(omega.grid, partial)
    _check_grid(B, omega.grid)
    return ScalarField(omega.grid, np.einsum("...k,...k->...", partial, B.values))


def lie_bracket(X: VectorField, Y: VectorField) -> VectorField:
    """``[X, Y] = (X . grad) Y - (Y . grad) X``."""
    _check_grid(Y, X.grid)
    DX = derivatives(X.values, X.grid)
    DY = derivatives(Y.values, Y.grid)
    out = np.einsum("...a,...ba->...b", X.values, DY) - np.einsum("...a,...ba->...b", Y.values, DX)
    return VectorField(X.grid, out)
