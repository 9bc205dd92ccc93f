"""Node-wise linear algebra over symmetric and antisymmetric matrices.

Everything here works on raw arrays with arbitrary leading (node) axes, so a
whole grid of matrices is processed in one call.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .grid import MatrixField

__all__ = [
    "sym",
    "antisym_basis",
    "SymBasis",
    "cross_product",
    "cross_is_degenerate",
    "SpdReport",
    "spd_check",
    "spd_power",
    "DEPENDENCE_TOL",
]

DEPENDENCE_TOL = 1e-9


def sym(a: np.ndarray) -> np.ndarray:
    return 0.5 * (a + np.swapaxes(a, -1, -2))


def antisym_basis(n: int) -> np.ndarray:
    """``{e_p (x) e_q - e_q (x) e_p}`` for ``p < q``, shape ``(n(n-1)/2, n, n)``."""
    out = []
    for p, q in combinations(range(n), 2):
        m = np.zeros((n, n))
        m[p, q] = 1.0
        m[q, p] = -1.0
        out.append(m)
    return np.array(out)


class SymBasis:
    """Ordered basis of the symmetric matrices ``S_n``.

    ``SymBasis.orthonormal(n)`` gives ``e_i (x) e_i`` followed by
    ``(e_i (x) e_j + e_j (x) e_i)/sqrt(2)``, orthonormal for
    ``<A, B> = tr(A B^T)``. Any other basis may be passed explicitly.
    """

    def __init__(self, matrices):
        matrices = np.array(matrices, dtype=float)
        if matrices.ndim != 3 or matrices.shape[1] != matrices.shape[2]:
            raise ValueError("basis must be an array of square matrices")
        n = matrices.shape[1]
        if matrices.shape[0] != n * (n + 1) // 2:
            raise ValueError(f"S_{n} has dimension {n * (n + 1) // 2}, got {matrices.shape[0]}")
        if np.max(np.abs(matrices - np.swapaxes(matrices, -1, -2))) > 1e-14:
            raise ValueError("basis elements must be symmetric")
        if abs(np.linalg.det(self._gram(matrices))) < 1e-12:
            raise ValueError("basis elements are linearly dependent")
        matrices.setflags(write=False)
        self.matrices = matrices
        self.n = n

    @staticmethod
    def _gram(m):
        return np.einsum("aij,bij->ab", m, m)

    @classmethod
    def orthonormal(cls, n: int) -> "SymBasis":
        out = []
        for i in range(n):
            m = np.zeros((n, n))
            m[i, i] = 1.0
            out.append(m)
        for i, j in combinations(range(n), 2):
            m = np.zeros((n, n))
            m[i, j] = m[j, i] = 1.0 / np.sqrt(2.0)
            out.append(m)
        return cls(out)

    @property
    def size(self) -> int:
        return self.matrices.shape[0]

    def gram(self) -> np.ndarray:
        return self._gram(self.matrices)

    def volume(self) -> float:
        """``det(e_1, ..., e_N)`` measured against an orthonormal frame (positive)."""
        return float(np.sqrt(np.linalg.det(self.gram())))

    def coords(self, m: np.ndarray) -> np.ndarray:
        """Inner products ``<M, E_a>``, shape ``(..., N)``."""
        return np.einsum("...ij,aij->...a", m, self.matrices)

    def combine(self, c: np.ndarray) -> np.ndarray:
        return np.einsum("...a,aij->...ij", c, self.matrices)


def _cofactor_row(rows: np.ndarray) -> np.ndarray:
    """Signed minors from expanding ``det([rows; e_1 .. e_N])`` along its last row."""
    N = rows.shape[-1]
    out = np.empty(rows.shape[:-2] + (N,))
    for a in range(N):
        minor = np.delete(rows, a, axis=-1)
        sign = -1.0 if (N - 1 + a) % 2 else 1.0
        out[..., a] = sign * np.linalg.det(minor) if N > 1 else sign
    return out


def cross_product(vectors, basis: SymBasis | None = None) -> np.ndarray:
    """Generalized cross product of ``N - 1`` vectors in an ``N``-dimensional space.

    Parameters
    ----------
    vectors : array_like
        Either shape ``(..., N-1, N)`` (Euclidean vectors, ``basis=None``) or
        ``(..., N-1, n, n)`` symmetric matrices when ``basis`` is a
        :class:`SymBasis`. Leading axes are broadcast node axes.
    basis : SymBasis, optional
        Basis of ``S_n``. The formal determinant uses inner products with the
        basis in every row but the last and is divided by the basis volume.

    Returns
    -------
    ndarray
        Shape ``(..., N)`` or ``(..., n, n)``. Orthogonal to every input, zero
        exactly when the inputs are linearly dependent, alternating in its
        arguments.
    """
    v = np.asarray(vectors, dtype=float)
    if basis is None:
        N = v.shape[-1]
        if v.shape[-2] != N - 1:
            raise ValueError(f"cross product in R^{N} takes {N - 1} vectors, got {v.shape[-2]}")
        return _cofactor_row(v)
    N = basis.size
    if v.shape[-2:] != (basis.n, basis.n) or v.ndim < 3 or v.shape[-3] != N - 1:
        count = v.shape[-3] if v.ndim >= 3 else None
        raise ValueError(f"cross product in S_{basis.n} takes {N - 1} matrices, got {count}")
    c = basis.coords(v)
    return basis.combine(_cofactor_row(c)) / basis.volume()


def cross_is_degenerate(vectors, basis: SymBasis | None = None, tol: float = DEPENDENCE_TOL):
    """True where ``|cross| < tol * prod |V_i|`` (inputs numerically dependent)."""
    v = np.asarray(vectors, dtype=float)
    out = cross_product(v, basis)
    if basis is None:
        norms = np.linalg.norm(v, axis=-1)
        size = np.linalg.norm(out, axis=-1)
    else:
        norms = np.sqrt(np.einsum("...ij,...ij->...", v, v))
        size = np.sqrt(np.einsum("...ij,...ij->...", out, out))
    return size < tol * np.prod(norms, axis=-1)


@dataclass
class SpdReport:
    """Outcome of :func:`spd_check`."""

    ok: np.ndarray
    lam_min: np.ndarray
    lam_max: np.ndarray
    kappa: float
    asymmetry: float

    @property
    def passed(self) -> bool:
        return bool(np.all(self.ok))

    @property
    def margins(self) -> tuple[float, float]:
        return float(np.min(self.lam_min)), float(np.max(self.lam_max))

    def worst_node(self) -> tuple[int, ...]:
        return tuple(int(i) for i in np.unravel_index(np.argmin(self.lam_min), self.lam_min.shape))


def spd_check(M, kappa: float) -> SpdReport:
    """Check ``kappa^-1 <= lam_min <= lam_max <= kappa`` at every node.

    The input is symmetrized first; the largest asymmetry is recorded.
    """
    values = M.values if isinstance(M, MatrixField) else np.asarray(M, dtype=float)
    asym = float(np.max(np.abs(values - np.swapaxes(values, -1, -2)))) if values.size else 0.0
    lam = np.linalg.eigvalsh(sym(values))
    lo, hi = lam[..., 0], lam[..., -1]
    ok = (lo >= 1.0 / kappa) & (hi <= kappa)
    return SpdReport(ok, lo, hi, float(kappa), asym)


def spd_power(m: np.ndarray, p: float) -> np.ndarray:
    """``M^p`` for symmetric positive-definite ``M`` via eigendecomposition."""
    w, q = np.linalg.eigh(sym(np.asarray(m, dtype=float)))
    if np.any(w <= 0):
        raise ValueError("matrix is not positive definite")
    return np.einsum("...ij,...j,...kj->...ik", q, w ** p, q)
