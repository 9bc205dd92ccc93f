"""Closed-form test cases: constant tensors, CGO pairs, exponential isotropic data, push-forwards.

Every evaluator takes points ``x`` of shape ``(..., n)`` and returns arrays
with matching leading axes, so cases can be sampled on any grid or point set.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .conductivity import ConductivityField
from .forward import BoundaryCondition, MeasurementSet
from .grid import Grid, MatrixField, ScalarField, VectorField
from .linalg import antisym_basis, spd_power, sym

__all__ = [
    "AnalyticCase",
    "Diffeomorphism",
    "constant_case",
    "cgo_pair",
    "isotropic_exponential",
    "push_forward",
    "push_forward_fields",
    "CATALOG",
    "get_case",
]

Fn = Callable[[np.ndarray], np.ndarray]


def _const(m) -> Fn:
    m = np.asarray(m, dtype=float)
    return lambda x: np.broadcast_to(m, np.shape(x)[:-1] + m.shape).copy()


def _quadratic(Q) -> tuple[Fn, Fn, Fn]:
    """``u = x^T Q x / 2`` with its gradient and Hessian (``Q`` symmetric)."""
    Q = np.asarray(Q, dtype=float)
    return (lambda x: 0.5 * np.einsum("...i,ij,...j->...", x, Q, x),
            lambda x: np.einsum("ij,...j->...i", Q, x),
            _const(Q))


def _linear(i: int, n: int) -> tuple[Fn, Fn, Fn]:
    e = np.eye(n)[i]
    return (lambda x: x[..., i] + 0.0, _const(e), _const(np.zeros((n, n))))


@dataclass(frozen=True)
class AnalyticCase:
    """Conductivity with exact solutions, gradients and auxiliary matrices.

    ``expected`` holds the constant matrices a case predicts (``Z1``, ``Z2``,
    ``H``, ``S``, ...); ``omega1``/``omega2`` are the antisymmetric weight
    fields used by the coupled elliptic system.
    """

    name: str
    n: int
    gamma: Fn
    solutions: tuple[Fn, ...]
    gradients: tuple[Fn, ...]
    hessians: tuple[Fn, ...] | None = None
    gamma_divergence: Fn | None = None
    omega1: Fn | None = None
    omega2: Fn | None = None
    expected: dict = field(default_factory=dict)
    params: dict = field(default_factory=dict)
    lo: tuple[float, ...] = ()
    hi: tuple[float, ...] = ()

    def __post_init__(self):
        if not self.lo:
            object.__setattr__(self, "lo", (0.0,) * self.n)
        if not self.hi:
            object.__setattr__(self, "hi", (1.0,) * self.n)
        self.check_pde()

    def grid(self, N: int) -> Grid:
        """Default-domain grid with ``N`` cells per axis."""
        return Grid.box(self.lo, self.hi, [N + 1] * self.n)

    def conductivity(self, grid: Grid) -> ConductivityField:
        return ConductivityField(MatrixField(grid, self.gamma(grid.coords())))

    def solution_fields(self, grid: Grid) -> list[ScalarField]:
        x = grid.coords()
        return [ScalarField(grid, u(x)) for u in self.solutions]

    def gradient_fields(self, grid: Grid) -> list[VectorField]:
        x = grid.coords()
        return [VectorField(grid, g(x)) for g in self.gradients]

    def current(self, i: int, x: np.ndarray) -> np.ndarray:
        return np.einsum("...ij,...j->...i", self.gamma(x), self.gradients[i](x))

    def boundary_conditions(self, grid: Grid) -> list[BoundaryCondition]:
        return [BoundaryCondition.trace(u) for u in self.solution_fields(grid)]

    def measurements(self, grid: Grid | None = None) -> MeasurementSet:
        """Current densities from exact gradients (``kind="analytic"``)."""
        grid = grid or self.grid(32)
        x = grid.coords()
        currents = tuple(VectorField(grid, self.current(i, x)) for i in range(len(self.gradients)))
        return MeasurementSet(grid, currents, kind="analytic",
                              boundary=tuple(self.boundary_conditions(grid)),
                              attrs={"case": self.name})

    def omega_fields(self, grid: Grid) -> tuple[MatrixField, MatrixField]:
        if self.omega1 is None or self.omega2 is None:
            raise ValueError(f"case {self.name!r} carries no Omega weights")
        x = grid.coords()
        return MatrixField(grid, self.omega1(x)), MatrixField(grid, self.omega2(x))

    def pde_residual(self, points: np.ndarray, step: float = 1e-3) -> np.ndarray:
        """``|div(gamma grad u_i)|`` at ``points`` for every solution, shape ``(count, P)``.

        Uses exact Hessians when the case provides them, otherwise a
        fourth-order central difference of the exact flux ``gamma grad u``.
        """
        points = np.atleast_2d(points)
        out = []
        for i in range(len(self.solutions)):
            if self.hessians is not None and self.gamma_divergence is not None:
                g = self.gamma(points)
                r = (np.einsum("...ab,...ab->...", g, self.hessians[i](points))
                     + np.einsum("...b,...b->...", self.gamma_divergence(points),
                                 self.gradients[i](points)))
            else:
                r = np.zeros(points.shape[0])
                for a in range(self.n):
                    e = np.zeros(self.n)
                    e[a] = step
                    f = lambda s: self.current(i, points + s * e)[:, a]
                    r += (8 * (f(1) - f(-1)) - (f(2) - f(-2))) / (12 * step)
            out.append(np.abs(r))
        return np.array(out)

    def check_pde(self, count: int = 100, seed: int = 0, tol: float | None = None) -> float:
        rng = np.random.default_rng(seed)
        pts = rng.uniform(self.lo, self.hi, size=(count, self.n))
        worst = float(np.max(self.pde_residual(pts)))
        exact = self.hessians is not None and self.gamma_divergence is not None
        tol = tol if tol is not None else (1e-10 if exact else 1e-7)
        scale = max(1.0, float(np.max(np.abs(np.array([self.current(i, pts) for i in range(len(self.gradients))])))))
        if worst > tol * scale:
            raise ValueError(f"case {self.name!r}: PDE residual {worst:.3e} exceeds {tol:g}")
        return worst


def _even_constant_parts(t):
    """n=2: diagonal and off-diagonal quadratics with weights ``t`` (sum zero, distinct)."""
    t = np.asarray(t, dtype=float)
    n = t.size
    Z1 = np.diag(t)
    Z2 = np.zeros((n, n))
    for j in range(n - 1):
        Z2[j, j + 1] = Z2[j + 1, j] = 1.0
    # Z2^{-T} Z1^T Omega1 = I for this Omega1 when n = 2
    omega1 = (1.0 / t[0]) * antisym_basis(n)[0]
    omega2 = np.zeros((n, n))
    return Z1, Z2, omega1, omega2


def _odd3_constant_parts(t):
    t = np.asarray(t, dtype=float)
    Z1 = np.array([[0.0, 1.0, 0.0], [1.0, 0.0, 1.0], [0.0, 1.0, 0.0]])
    Z2 = np.diag(1.0 / t)
    omega1 = np.zeros((3, 3))
    omega1[1, 0], omega1[0, 1] = 1.0, -1.0
    omega2 = np.zeros((3, 3))
    omega2[1, 2], omega2[2, 1] = 1.0, -1.0
    return Z1, Z2, omega1, omega2


def odd_case_matrix(t) -> np.ndarray:
    """Predicted ``S'`` of the three-dimensional construction."""
    t1, t2, t3 = t
    c = (t3 + 1.0) / 2.0
    return np.array([[t1, 0.0, c], [0.0, -t2 - 1.0, 0.0], [c, 0.0, 1.0]])


def constant_case(gamma0=None, n: int = 2, t: Sequence[float] | None = None,
                  name: str | None = None) -> AnalyticCase:
    """Polynomial solution bundle for a constant conductivity ``gamma0``.

    ``u_i = x_i`` for ``i <= n`` and two quadratics built for ``gamma0 = I``
    then conjugated by ``gamma0^{-1/2}``:

    * ``n = 2``: ``u_3 = x^T diag(t) x / 2`` (``sum t = 0``, ``t`` distinct),
      ``u_4 = x_1 x_2``; ``Omega_1 = (e1 (x) e2 - e2 (x) e1) / t_1``, ``Omega_2 = 0``.
    * ``n = 3``: ``u_4 = x_1 x_2 + x_2 x_3``, ``u_5 = sum x_i^2 / (2 t_i)``
      (``sum 1/t = 0``), ``Omega_1 = e2 (x) e1 - e1 (x) e2``,
      ``Omega_2 = e2 (x) e3 - e3 (x) e2``.

    The weights are conjugated as ``gamma0^{1/2} Omega gamma0^{1/2}`` so that
    ``S = gamma0^{1/2} S0 gamma0^{1/2}``.
    """
    gamma0 = np.eye(n) if gamma0 is None else np.asarray(gamma0, dtype=float)
    n = gamma0.shape[0]
    if gamma0.shape != (n, n) or np.max(np.abs(gamma0 - gamma0.T)) > 1e-14:
        raise ValueError("gamma0 must be a symmetric matrix")
    if np.min(np.linalg.eigvalsh(gamma0)) <= 0:
        raise ValueError("gamma0 must be positive definite")
    if n == 2:
        t = np.array((1.0, -1.0) if t is None else t, dtype=float)
        if t.shape != (2,) or abs(t.sum()) > 1e-12 or t[0] == t[1]:
            raise ValueError(f"n=2 needs two distinct weights summing to zero, got {t}")
        Z1_0, Z2_0, om1_0, om2_0 = _even_constant_parts(t)
        S0 = sym(np.linalg.inv(Z2_0).T @ Z1_0.T @ om1_0 + Z1_0.T @ om2_0)
    elif n == 3:
        t = np.array((6.0, -2.0, 3.0) if t is None else t, dtype=float)
        if t.shape != (3,) or np.any(t == 0) or abs(np.sum(1.0 / t)) > 1e-12 \
                or len(set(t.tolist())) < 3:
            raise ValueError(f"n=3 needs distinct nonzero weights with sum(1/t) = 0, got {t}")
        Z1_0, Z2_0, om1_0, om2_0 = _odd3_constant_parts(t)
        S0 = odd_case_matrix(t)
        if np.min(np.linalg.eigvalsh(S0)) <= 0:
            raise ValueError(f"weights {t} give a non-elliptic S")
    else:
        raise ValueError("constant cases are built for n = 2 or 3")

    root = spd_power(gamma0, 0.5)
    iroot = spd_power(gamma0, -0.5)
    Z1 = iroot @ Z1_0 @ iroot
    Z2 = iroot @ Z2_0 @ iroot
    omega1 = root @ om1_0 @ root
    omega2 = root @ om2_0 @ root
    S = root @ S0 @ root

    parts = [_linear(i, n) for i in range(n)] + [_quadratic(Z1), _quadratic(Z2)]
    if name is None:
        tag = "identity" if np.allclose(gamma0, np.eye(n)) else "spd"
        name = f"constant-{tag}-{n}d"
    return AnalyticCase(
        name=name, n=n, gamma=_const(gamma0),
        solutions=tuple(p[0] for p in parts),
        gradients=tuple(p[1] for p in parts),
        hessians=tuple(p[2] for p in parts),
        gamma_divergence=_const(np.zeros(n)),
        omega1=_const(omega1), omega2=_const(omega2),
        expected={"H": gamma0, "Z1": Z1, "Z2": Z2, "Omega1": omega1, "Omega2": omega2,
                  "S": S, "S0": S0, "gamma_tilde": gamma0 / np.linalg.det(gamma0) ** (1.0 / n)},
        params={"gamma0": gamma0, "t": t},
    )


def cgo_pair(beta: float = 1.0, rho: float = 2.0, k=(1.0, 0.0), kperp=(0.0, 1.0),
             lo=None, hi=None) -> AnalyticCase:
    """Real and imaginary parts of ``exp(rho (k + i kperp) . x) / sqrt(beta)`` for constant ``beta``."""
    k = np.asarray(k, dtype=float)
    kp = np.asarray(kperp, dtype=float)
    n = k.size
    if kp.shape != k.shape or abs(k @ kp) > 1e-12 or abs(k @ k - 1) > 1e-12 or abs(kp @ kp - 1) > 1e-12:
        raise ValueError("k and kperp must be orthonormal")
    if beta <= 0 or rho <= 0:
        raise ValueError("beta and rho must be positive")
    c = 1.0 / np.sqrt(beta)

    def amp(x):
        return c * np.exp(rho * (x @ k))

    def phase(x):
        return rho * (x @ kp)

    def u_re(x):
        return amp(x) * np.cos(phase(x))

    def u_im(x):
        return amp(x) * np.sin(phase(x))

    def g_re(x):
        a, p = amp(x)[..., None], phase(x)[..., None]
        return rho * a * (k * np.cos(p) - kp * np.sin(p))

    def g_im(x):
        a, p = amp(x)[..., None], phase(x)[..., None]
        return rho * a * (kp * np.cos(p) + k * np.sin(p))

    kk = np.outer(k, k) - np.outer(kp, kp)
    kx = np.outer(k, kp) + np.outer(kp, k)

    def h_re(x):
        a, p = amp(x)[..., None, None], phase(x)[..., None, None]
        return rho ** 2 * a * (kk * np.cos(p) - kx * np.sin(p))

    def h_im(x):
        a, p = amp(x)[..., None, None], phase(x)[..., None, None]
        return rho ** 2 * a * (kx * np.cos(p) + kk * np.sin(p))

    return AnalyticCase(
        name=f"cgo-{n}d", n=n, gamma=_const(beta * np.eye(n)),
        solutions=(u_re, u_im), gradients=(g_re, g_im), hessians=(h_re, h_im),
        gamma_divergence=_const(np.zeros(n)),
        params={"beta": beta, "rho": rho, "k": k, "kperp": kp},
        lo=tuple(lo) if lo is not None else (), hi=tuple(hi) if hi is not None else (),
    )


def cgo_f1(case: AnalyticCase, x: np.ndarray) -> np.ndarray:
    """Closed form of ``F1(u_re, u_im) = rho^4 exp(4 rho k.x) / beta^2`` for a CGO pair."""
    p = case.params
    return p["rho"] ** 4 * np.exp(4 * p["rho"] * (x @ p["k"])) / p["beta"] ** 2


def isotropic_exponential(lo=(-0.5, -0.5), hi=(0.5, 0.5)) -> AnalyticCase:
    """``gamma = exp(x1 + x2) I`` with ``u_1 = e^{-x1} - e^{-x2}``, ``u_2 = e^{-x1} + e^{-x2}``."""

    def beta(x):
        return np.exp(x[..., 0] + x[..., 1])

    def gamma(x):
        return beta(x)[..., None, None] * np.eye(2)

    def u1(x):
        return np.exp(-x[..., 0]) - np.exp(-x[..., 1])

    def u2(x):
        return np.exp(-x[..., 0]) + np.exp(-x[..., 1])

    def g1(x):
        return np.stack([-np.exp(-x[..., 0]), np.exp(-x[..., 1])], axis=-1)

    def g2(x):
        return np.stack([-np.exp(-x[..., 0]), -np.exp(-x[..., 1])], axis=-1)

    def hess(s):
        def h(x):
            out = np.zeros(x.shape[:-1] + (2, 2))
            out[..., 0, 0] = np.exp(-x[..., 0])
            out[..., 1, 1] = s * np.exp(-x[..., 1])
            return out
        return h

    def div_gamma(x):
        return beta(x)[..., None] * np.ones(2)

    return AnalyticCase(
        name="isotropic-exponential-2d", n=2, gamma=gamma,
        solutions=(u1, u2), gradients=(g1, g2), hessians=(hess(-1.0), hess(1.0)),
        gamma_divergence=div_gamma,
        params={"beta": beta, "log_beta_gradient": np.ones(2)},
        lo=tuple(lo), hi=tuple(hi),
    )


@dataclass(frozen=True)
class Diffeomorphism:
    """Smooth map ``Psi`` with explicit inverse and Jacobian ``D Psi[i, j] = d_j Psi_i``."""

    forward: Fn
    inverse: Fn
    jacobian: Fn
    n: int
    name: str = "psi"

    def jac_det(self, x):
        return np.linalg.det(self.jacobian(x))

    def bound(self, lo, hi, samples: int = 2000, seed: int = 0) -> float:
        """``C_Psi`` with ``C^-1 <= |J| <= C`` on sampled points of the box, checking invertibility."""
        rng = np.random.default_rng(seed)
        x = rng.uniform(lo, hi, size=(samples, self.n))
        corners = np.array(np.meshgrid(*zip(lo, hi), indexing="ij")).reshape(self.n, -1).T
        x = np.vstack([x, corners])
        J = np.abs(self.jac_det(x))
        if np.min(J) <= 0:
            raise ValueError(f"{self.name}: Jacobian degenerates on the domain")
        err = np.max(np.abs(self.inverse(self.forward(x)) - x))
        if err > 1e-12 * max(1.0, float(np.max(np.abs(x)))):
            raise ValueError(f"{self.name}: inverse map is inaccurate ({err:.2e})")
        return float(max(np.max(J), 1.0 / np.min(J)))

    def image_box(self, lo, hi, samples: int = 65):
        """Bounding box of ``Psi([lo, hi])`` estimated on a tensor sample of the box."""
        axes = [np.linspace(a, b, samples) for a, b in zip(lo, hi)]
        pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, self.n)
        img = self.forward(pts)
        return tuple(float(v) for v in img.min(axis=0)), tuple(float(v) for v in img.max(axis=0))

    @classmethod
    def identity(cls, n: int) -> "Diffeomorphism":
        return cls(lambda x: x + 0.0, lambda y: y + 0.0, _const(np.eye(n)), n, "identity")

    @classmethod
    def scaling(cls, s: float, n: int) -> "Diffeomorphism":
        return cls(lambda x: s * x, lambda y: y / s, _const(s * np.eye(n)), n, f"scale{s:g}")

    @classmethod
    def separable_quadratic(cls, a: Sequence[float]) -> "Diffeomorphism":
        """``Psi_i(x) = x_i + a_i x_i^2``; a diffeomorphism where ``1 + 2 a_i x_i > 0``."""
        a = np.asarray(a, dtype=float)
        n = a.size

        def fwd(x):
            return x + a * x ** 2

        def inv(y):
            safe = np.where(a == 0, 1.0, a)
            root = (-1.0 + np.sqrt(1.0 + 4.0 * safe * y)) / (2.0 * safe)
            return np.where(a == 0, y, root)

        def jac(x):
            d = 1.0 + 2.0 * a * x
            return d[..., :, None] * np.eye(n)

        return cls(fwd, inv, jac, n, "quadratic")

    @classmethod
    def shear(cls, amp: float = 0.2) -> "Diffeomorphism":
        """Planar ``(x1 + amp sin(pi x2), x2 + amp sin(pi x1'))`` built from two shears (``J = 1``)."""

        def fwd(x):
            y1 = x[..., 0] + amp * np.sin(np.pi * x[..., 1])
            y2 = x[..., 1] + amp * np.sin(np.pi * y1)
            return np.stack([y1, y2], axis=-1)

        def inv(y):
            x2 = y[..., 1] - amp * np.sin(np.pi * y[..., 0])
            x1 = y[..., 0] - amp * np.sin(np.pi * x2)
            return np.stack([x1, x2], axis=-1)

        def jac(x):
            y1 = x[..., 0] + amp * np.sin(np.pi * x[..., 1])
            a = amp * np.pi * np.cos(np.pi * x[..., 1])
            b = amp * np.pi * np.cos(np.pi * y1)
            out = np.empty(x.shape[:-1] + (2, 2))
            out[..., 0, 0] = 1.0
            out[..., 0, 1] = a
            out[..., 1, 0] = b
            out[..., 1, 1] = 1.0 + b * a
            return out

        return cls(fwd, inv, jac, 2, "shear")


def _push_gamma(psi, gamma):
    def f(y):
        x = psi.inverse(y)
        D = psi.jacobian(x)
        return D @ gamma(x) @ np.swapaxes(D, -1, -2) / np.abs(np.linalg.det(D))[..., None, None]
    return f


def push_forward(case: AnalyticCase, psi: Diffeomorphism) -> AnalyticCase:
    """Exact push-forward of an analytic case: ``Psi_* gamma``, ``u o Psi^-1`` and pushed weights.

    The image domain is the bounding box of ``Psi`` applied to the case box.
    """
    if psi.n != case.n:
        raise ValueError("dimension mismatch between case and diffeomorphism")
    psi.bound(case.lo, case.hi)

    def sol(u):
        return lambda y: u(psi.inverse(y))

    def grad(g):
        def f(y):
            x = psi.inverse(y)
            return np.linalg.solve(np.swapaxes(psi.jacobian(x), -1, -2), g(x)[..., None])[..., 0]
        return f

    def om(w, weight):
        if w is None:
            return None

        def f(y):
            x = psi.inverse(y)
            D = psi.jacobian(x)
            scale = np.abs(np.linalg.det(D))[..., None, None] if weight else 1.0
            return scale * (D @ w(x) @ np.swapaxes(D, -1, -2))
        return f

    lo, hi = psi.image_box(case.lo, case.hi)
    return AnalyticCase(
        name=f"{case.name}@{psi.name}", n=case.n, gamma=_push_gamma(psi, case.gamma),
        solutions=tuple(sol(u) for u in case.solutions),
        gradients=tuple(grad(g) for g in case.gradients),
        omega1=om(case.omega1, False), omega2=om(case.omega2, True),
        params={**case.params, "psi": psi.name, "source": case.name},
        lo=lo, hi=hi,
    )


# how each kind of grid object transforms under Psi (D = D Psi at x = Psi^-1(y), J = |det D|)
_TRANSFORMS = {
    "scalar": lambda v, D, J: v,
    "gamma": lambda v, D, J: D @ v @ np.swapaxes(D, -1, -2) / J[..., None, None],
    "current": lambda v, D, J: np.einsum("...ij,...j->...i", D, v) / J[..., None],
    "gradient": lambda v, D, J: np.linalg.solve(np.swapaxes(D, -1, -2), v[..., None])[..., 0],
    "Z": lambda v, D, J: np.linalg.solve(np.swapaxes(D, -1, -2), v),
    "omega1": lambda v, D, J: D @ v @ np.swapaxes(D, -1, -2),
    "omega2": lambda v, D, J: J[..., None, None] * (D @ v @ np.swapaxes(D, -1, -2)),
    "S": lambda v, D, J: D @ v @ np.swapaxes(D, -1, -2),
}


def push_forward_fields(fields: dict, kinds: dict, psi: Diffeomorphism, target: Grid) -> dict:
    """Push grid fields forward onto ``target`` by multilinear interpolation.

    Parameters
    ----------
    fields : dict of name -> ScalarField / VectorField / MatrixField
    kinds : dict of name -> one of ``scalar, gamma, current, gradient, Z, omega1, omega2, S``
    psi : Diffeomorphism
    target : Grid
        Grid over ``Psi(X)``. Target nodes whose pre-image leaves the source
        grid are masked with NaN.

    Returns
    -------
    dict of name -> field on ``target``, plus ``"_mask"`` (bool array of valid nodes).
    """
    from . import kernels

    y = target.coords()
    x = psi.inverse(y)
    D = psi.jacobian(x)
    J = np.abs(np.linalg.det(D))
    pts = x.reshape(-1, target.n)
    out = {}
    valid = np.ones(target.dims, dtype=bool)
    for name, f in fields.items():
        kind = kinds[name]
        src = f.values
        comp_shape = src.shape[f.grid.n:]
        vals = kernels.interpolate(src.reshape(f.grid.dims + (-1,)), f.grid.origin,
                                   f.grid.spacing, pts)
        vals = vals.reshape(target.dims + comp_shape)
        bad = np.isnan(vals).reshape(target.dims + (-1,)).any(axis=-1)
        valid &= ~bad
        vals = np.where(np.isnan(vals), 0.0, vals)
        out[name] = type(f)(target, _TRANSFORMS[kind](vals, D, J))
    out["_mask"] = valid
    return out


def _catalog():
    spd2 = np.array([[2.0, 0.5], [0.5, 1.0]])
    return {
        "constant-identity-2d": lambda: constant_case(np.eye(2)),
        "constant-spd-2d": lambda: constant_case(spd2),
        "constant-identity-3d": lambda: constant_case(np.eye(3)),
        "odd-3d-t623": lambda: constant_case(np.eye(3), t=(6.0, -2.0, 3.0), name="odd-3d-t623"),
        "constant-spd-3d": lambda: constant_case(
            np.array([[2.0, 0.3, 0.1], [0.3, 1.5, 0.2], [0.1, 0.2, 1.0]])),
        "cgo-2d": lambda: cgo_pair(1.0, 2.0),
        "isotropic-exponential-2d": isotropic_exponential,
        "pushed-spd-2d": lambda: push_forward(constant_case(spd2),
                                              Diffeomorphism.separable_quadratic([0.4, 0.25])),
        "sheared-spd-2d": lambda: push_forward(constant_case(spd2), Diffeomorphism.shear(0.15)),
    }


CATALOG = tuple(_catalog())


def get_case(name: str) -> AnalyticCase:
    table = _catalog()
    if name not in table:
        raise KeyError(f"unknown case {name!r}; available: {', '.join(table)}")
    return table[name]()
