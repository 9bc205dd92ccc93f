"""Conductivity tensors and their scalar/anisotropic split ``gamma = beta * gamma_tilde``."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import Grid, MatrixField, ScalarField
from .linalg import SpdReport, spd_check, sym

__all__ = ["ConductivityField", "unit_determinant"]


def unit_determinant(m: np.ndarray) -> np.ndarray:
    """Scale each matrix so its determinant is one (``m / det(m)^(1/n)``)."""
    n = m.shape[-1]
    det = np.linalg.det(m)
    return m / np.abs(det)[..., None, None] ** (1.0 / n)


@dataclass(frozen=True)
class ConductivityField:
    """Symmetric positive-definite tensor field.

    ``beta = det(gamma)^(1/n)`` and ``gamma_tilde = gamma / beta`` are derived
    on demand; ``kappa`` is the tightest ellipticity constant of the data.
    """

    gamma: MatrixField

    @classmethod
    def from_array(cls, grid: Grid, values) -> "ConductivityField":
        return cls(MatrixField(grid, values))

    @classmethod
    def constant(cls, grid: Grid, gamma0) -> "ConductivityField":
        return cls(MatrixField.constant(grid, gamma0))

    @classmethod
    def from_parts(cls, beta: ScalarField, gamma_tilde: MatrixField) -> "ConductivityField":
        return cls(MatrixField(beta.grid, beta.values[..., None, None] * gamma_tilde.values))

    @property
    def grid(self) -> Grid:
        return self.gamma.grid

    @property
    def values(self) -> np.ndarray:
        return self.gamma.values

    @property
    def n(self) -> int:
        return self.grid.n

    @property
    def beta(self) -> ScalarField:
        return ScalarField(self.grid, np.linalg.det(self.values) ** (1.0 / self.n))

    @property
    def gamma_tilde(self) -> MatrixField:
        return MatrixField(self.grid, unit_determinant(self.values))

    @property
    def inverse(self) -> MatrixField:
        return MatrixField(self.grid, np.linalg.inv(self.values))

    @property
    def kappa(self) -> float:
        lam = np.linalg.eigvalsh(sym(self.values))
        lo = np.min(lam[..., 0])
        if lo <= 0:
            return float("inf")
        return float(max(np.max(lam[..., -1]), 1.0 / lo))

    def check(self, kappa: float | None = None) -> SpdReport:
        return spd_check(self.gamma, self.kappa * (1 + 1e-12) if kappa is None else kappa)
