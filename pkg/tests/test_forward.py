import numpy as np
import pytest

from cdii import cases
from cdii.conductivity import ConductivityField
from cdii.errors import HypothesisError
from cdii.forward import (BoundaryCondition, MeasurementSet, SolverConfig, add_noise, current_density,
                          solve_conductivity, synthesize_measurements, w1inf_norm)
from cdii.grid import Grid, MatrixField, ScalarField, VectorField


def _poly_gamma(grid):
    x = grid.coords()
    v = np.empty(grid.dims + (2, 2))
    v[..., 0, 0] = 2 + x[..., 0]
    v[..., 1, 1] = 1 + x[..., 1]
    v[..., 0, 1] = v[..., 1, 0] = 0.2
    return ConductivityField(MatrixField(grid, v))


@pytest.mark.parametrize("method", ["direct", "cg"])
def test_constant_coefficient_quadratic_is_exact(spd2, method):
    grid = spd2.grid(12)
    gam = spd2.conductivity(grid)
    for u in spd2.solution_fields(grid):
        sol = solve_conductivity(gam, BoundaryCondition.trace(u), SolverConfig(method, tol=1e-12))
        np.testing.assert_allclose(sol.values, u.values, atol=1e-9)


def test_manufactured_solution_converges():
    errs = []
    for N in (17, 33, 65):
        grid = Grid.box([0, 0], [1, 1], [N, N])
        gam = _poly_gamma(grid)
        x, y = grid.coords()[..., 0], grid.coords()[..., 1]
        u = np.sin(x) * np.exp(y)
        ux, uy = np.cos(x) * np.exp(y), np.sin(x) * np.exp(y)
        uxx, uyy, uxy = -u, u, np.cos(x) * np.exp(y)
        g = gam.values
        # div(gamma grad u) with d_x g11 = 1, d_y g22 = 1
        f = ux + g[..., 0, 0] * uxx + 2 * 0.2 * uxy + uy + g[..., 1, 1] * uyy
        sol = solve_conductivity(gam, BoundaryCondition(grid, u),
                                 SolverConfig(source=ScalarField(grid, f)))
        errs.append(np.max(np.abs(sol.values - u)))
    orders = np.log2(np.array(errs[:-1]) / errs[1:])
    assert np.all(orders > 1.8)


def test_non_spd_conductivity_rejected():
    grid = Grid.uniform(2, 0.25)
    bad = MatrixField.constant(grid, [[1.0, 0.0], [0.0, -1.0]])
    with pytest.raises(HypothesisError):
        solve_conductivity(bad, BoundaryCondition(grid, np.zeros(grid.dims)))


def test_boundary_condition_validation():
    grid = Grid.uniform(2, 0.25)
    with pytest.raises(ValueError):
        BoundaryCondition(grid, np.zeros((4, 4)))
    v = np.zeros(grid.dims)
    v[0, 0] = np.nan
    with pytest.raises(ValueError):
        BoundaryCondition(grid, v)
    v = np.ones(grid.dims)
    v[2, 2] = np.nan  # interior entries are ignored
    bc = BoundaryCondition(grid, v)
    assert bc.values[2, 2] == 0.0


def test_synthesize_and_current_density(spd2):
    grid = spd2.grid(10)
    gam = spd2.conductivity(grid)
    M = synthesize_measurements(gam, spd2.boundary_conditions(grid))
    assert len(M) == 4 and M.m == 2 and M.kind == "numeric"
    exact = spd2.measurements(grid)
    for a, b in zip(M.currents, exact.currents):
        np.testing.assert_allclose(a.values, b.values, atol=1e-8)
    H = current_density(gam, spd2.solution_fields(grid)[0])
    np.testing.assert_allclose(H.values, exact[0].values, atol=1e-12)


def test_measurement_set_checks():
    grid = Grid.uniform(2, 0.25)
    other = Grid.uniform(2, 0.125)
    H = VectorField(grid, np.ones(grid.dims + (2,)))
    with pytest.raises(ValueError):
        MeasurementSet(grid, (H,))
    with pytest.raises(ValueError):
        MeasurementSet(grid, (H, VectorField(other, np.ones(other.dims + (2,)))))
    M = MeasurementSet(grid, (H, H, H))
    assert M.subset([0, 2]).m == 0


def test_noise_is_seeded_and_scaled(spd2):
    grid = spd2.grid(32)
    M = spd2.measurements(grid)
    a = add_noise(M, 1e-3, 0.05, seed=5)
    b = add_noise(M, 1e-3, 0.05, seed=5)
    c = add_noise(M, 1e-3, 0.05, seed=6)
    d0 = a[0].values - M[0].values
    np.testing.assert_array_equal(d0, b[0].values - M[0].values)
    assert not np.allclose(d0, c[0].values - M[0].values)
    assert w1inf_norm(d0, grid) == pytest.approx(1e-3)
    e = add_noise(M, 1e-3, 0.05, seed=5, norm="linf")
    assert np.max(np.abs(e[1].values - M[1].values)) == pytest.approx(1e-3)
    assert add_noise(M, 0.0, 0.05) is M
    with pytest.raises(ValueError):
        add_noise(M, -1.0, 0.05)
    with pytest.raises(ValueError):
        add_noise(M, 1.0, 0.05, norm="l2")


def test_conductivity_parts(spd2):
    grid = spd2.grid(4)
    gam = spd2.conductivity(grid)
    np.testing.assert_allclose(np.linalg.det(gam.gamma_tilde.values), 1.0)
    again = ConductivityField.from_parts(gam.beta, gam.gamma_tilde)
    np.testing.assert_allclose(again.values, gam.values, atol=1e-14)
    assert gam.check().passed


def test_cgo_case_currents_and_f1():
    case = cases.get_case("cgo-2d")
    x = np.random.default_rng(0).uniform(0, 1, size=(50, 2))
    assert case.check_pde() < 1e-7
    f1 = cases.cgo_f1(case, x)
    assert np.all(f1 > 0)


def test_identity_affine_data_is_exact():
    grid = Grid.uniform(2, 1 / 16)
    x = grid.coords()
    eye = MatrixField.constant(grid, np.eye(2))
    u, res = solve_conductivity(eye, BoundaryCondition(grid, x[..., 0]), return_residual=True)
    np.testing.assert_allclose(u.values, x[..., 0], atol=1e-13)
    assert res < 1e-13
    M = synthesize_measurements(eye, [BoundaryCondition(grid, x[..., i]) for i in range(2)])
    for i in range(2):
        np.testing.assert_allclose(M[i].values, np.broadcast_to(np.eye(2)[i], x.shape), atol=1e-10)


def test_laplace_manufactured_ratio():
    errs = []
    for N in (16, 32, 64):
        grid = Grid.uniform(2, 1.0 / N)
        x, y = grid.coords()[..., 0], grid.coords()[..., 1]
        u = np.sin(np.pi * x) * np.sin(np.pi * y)
        f = ScalarField(grid, -2 * np.pi ** 2 * u)
        sol = solve_conductivity(MatrixField.constant(grid, np.eye(2)), BoundaryCondition(grid, u),
                                 SolverConfig(source=f))
        errs.append(np.max(np.abs(sol.values - u)))
    ratios = np.array(errs[:-1]) / errs[1:]
    assert np.all((ratios > 3.6) & (ratios < 4.4))


def test_current_density_examples():
    grid = Grid.uniform(2, 1 / 8)
    x = grid.coords()
    H = current_density(MatrixField.constant(grid, np.diag([2.0, 1.0])),
                        ScalarField(grid, x[..., 0] + x[..., 1]))
    np.testing.assert_allclose(H.values, np.broadcast_to([2.0, 1.0], x.shape), atol=1e-12)
    iso = cases.get_case("isotropic-exponential-2d")
    y = np.random.default_rng(0).uniform(-0.5, 0.5, size=(20, 2))
    expected = np.stack([-np.exp(y[:, 1]), np.exp(y[:, 0])], axis=-1)
    np.testing.assert_allclose(iso.current(0, y), expected, rtol=1e-13)
    assert len(iso.measurements(iso.grid(8))) == 2


def test_constant_case_currents_are_gamma_columns(spd2):
    M = spd2.measurements(spd2.grid(6))
    H = M.H.values
    np.testing.assert_allclose(H, np.broadcast_to(spd2.params["gamma0"], H.shape), atol=1e-14)
