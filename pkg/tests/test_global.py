import numpy as np
import pytest

from helpers import assert_close

from cdii import cases, global_recon as gr
from cdii.errors import HypothesisError
from cdii.forward import SolverConfig
from cdii.grid import MatrixField


def test_continuous_residual_vanishes_on_constant_case(odd3):
    grid = odd3.grid(6)
    M = odd3.measurements(grid)
    b = gr.weight_fields(gr.coefficient_fields(M), *odd3.omega_fields(grid))
    assert_close(b.S.values, odd3.expected["S"], atol=1e-12)
    for r in gr.continuous_residual(b, odd3.gradient_fields(grid)[:3]):
        assert r.sup() < 1e-10


def test_continuous_residual_second_order():
    case = cases.get_case("sheared-spd-2d")
    errs = []
    for N in (16, 32, 64):
        grid = case.grid(N)
        M = case.measurements(grid)
        b = gr.weight_fields(gr.coefficient_fields(M), *case.omega_fields(grid))
        r = gr.continuous_residual(b, case.gradient_fields(grid)[:2])
        errs.append(max(np.max(np.abs(x.values[2:-2, 2:-2])) for x in r))
    assert np.all(np.log2(np.array(errs[:-1]) / errs[1:]) > 1.8)


@pytest.mark.parametrize("method", ["direct", "cg"])
def test_global_solve_constant_case(spd2, method):
    grid = spd2.grid(16)
    M = spd2.measurements(grid)
    system = gr.assemble_elliptic_system(M, *spd2.omega_fields(grid))
    res = gr.solve_global(system, M, SolverConfig(method, tol=1e-12))
    assert_close(res.conductivity.values, spd2.params["gamma0"], atol=1e-8)
    assert res.asymmetry < 1e-8
    for u, exact in zip(res.solutions, spd2.solution_fields(grid)):
        assert_close(u.values, exact.values, atol=1e-9)


def test_global_solve_3d(odd3):
    grid = odd3.grid(6)
    M = odd3.measurements(grid)
    res = gr.solve_global(gr.assemble_elliptic_system(M, *odd3.omega_fields(grid)), M)
    assert_close(res.conductivity.values, np.eye(3), atol=1e-10)


def test_non_elliptic_weights_rejected(spd2):
    grid = spd2.grid(8)
    M = spd2.measurements(grid)
    o1, o2 = spd2.omega_fields(grid)
    flipped = MatrixField(grid, -o1.values)
    with pytest.raises(HypothesisError) as exc:
        gr.assemble_elliptic_system(M, flipped, o2)
    assert exc.value.hypothesis == "4B"


def test_weights_must_be_antisymmetric(spd2):
    grid = spd2.grid(8)
    M = spd2.measurements(grid)
    with pytest.raises(ValueError):
        gr.weight_fields(gr.coefficient_fields(M), np.eye(2), np.zeros((2, 2)))


def test_constant_case_coefficients_vanish():
    c = cases.get_case("constant-identity-2d")
    grid = c.grid(8)
    M = c.measurements(grid)
    b = gr.weight_fields(gr.coefficient_fields(M), *c.omega_fields(grid))
    assert max(f.sup() for f in b.v.values()) < 1e-12
    assert max(f.sup() for f in b.vt.values()) < 1e-12
    assert max(f.sup() for f in b.W.values()) < 1e-12
    assert_close(b.S.values, np.eye(2), atol=1e-14)


def test_delta_term_isolation(rng):
    from cdii.calculus import derivatives, lie_bracket
    from cdii.grid import Grid, VectorField
    grid = Grid.uniform(2, 1 / 8)
    x = grid.coords()
    Z1 = np.broadcast_to(rng.standard_normal((2, 2)), grid.dims + (2, 2))
    cols = [VectorField(grid, np.stack([np.sin(x[..., 0] + k), x[..., 1] ** 2 * (k + 1)], axis=-1))
            for k in range(2)]
    v = gr._v_terms(Z1, cols, grid)
    X = [Z1[..., 0, l, None] * np.array([0.0, 1.0]) - Z1[..., 1, l, None] * np.array([1.0, 0.0])
         for l in range(2)]
    first = sum(np.einsum("...a,...ba->...b", X[l], derivatives(cols[l].values, grid)) for l in range(2))
    for i in range(2):
        for j in range(2):
            bracket = lie_bracket(cols[j], VectorField(grid, X[i])).values
            expected = bracket + (first if i == j else 0.0)
            np.testing.assert_allclose(v[(i, j, 0, 1)].values, expected, atol=1e-12)


def test_zero_boundary_data_gives_zero_solution():
    from cdii.forward import BoundaryCondition
    c = cases.get_case("constant-identity-2d")
    grid = c.grid(10)
    M = c.measurements(grid)
    zero = [BoundaryCondition(grid, np.zeros(grid.dims))] * 2
    system = gr.assemble_elliptic_system(M, *c.omega_fields(grid), boundary=zero)
    assert np.all(system.rhs == 0.0)
    import scipy.sparse.linalg as spla
    x = spla.spsolve(system.matrix.tocsc(), system.rhs)
    assert np.max(np.abs(x)) == 0.0


def test_identity_end_to_end():
    c = cases.get_case("constant-identity-2d")
    grid = c.grid(16)
    M = c.measurements(grid)
    res = gr.solve_global(gr.assemble_elliptic_system(M, *c.omega_fields(grid)), M)
    x = grid.coords()
    for j in range(2):
        assert_close(res.solutions[j].values, x[..., j], atol=1e-11)
    assert_close(res.conductivity.values, np.eye(2), atol=1e-11)


def test_affine_perturbation_gives_proportional_coefficients():
    from cdii.conductivity import ConductivityField
    from cdii.forward import synthesize_measurements
    base = cases.get_case("constant-identity-2d")
    grid = base.grid(24)
    x = grid.coords()
    sizes = []
    for eps in (1e-2, 1e-3):
        g = np.broadcast_to(np.eye(2), grid.dims + (2, 2)).copy()
        g[..., 0, 0] += eps * x[..., 0]
        g[..., 1, 1] += eps * x[..., 1]
        M = synthesize_measurements(ConductivityField(MatrixField(grid, g)), base.boundary_conditions(grid))
        b = gr.coefficient_fields(M)
        size = max(np.max(np.abs(f.values[2:-2, 2:-2])) for f in b.vt.values())
        assert np.isfinite(size)
        sizes.append(size)
    assert 5 < sizes[0] / sizes[1] < 20


def test_noise_stability_constant(spd2):
    from cdii.forward import add_noise
    from cdii.calculus import derivatives
    grid = spd2.grid(32)
    M0 = spd2.measurements(grid)
    omegas = spd2.omega_fields(grid)
    consts = []
    for delta in (1e-4, 1e-3):
        M = add_noise(M0, delta, 0.2, seed=1)
        res = gr.solve_global(gr.assemble_elliptic_system(M, *omegas, boundary=list(M0.boundary[:2])), M)
        err = np.sqrt(np.mean(np.sum((res.conductivity.values - spd2.params["gamma0"]) ** 2, axis=(-1, -2))))
        h1 = 0.0
        for a, b in zip(M.currents, M0.currents):
            d = a.values - b.values
            h1 += np.mean(d ** 2) + np.mean(derivatives(d, grid) ** 2)
        consts.append(err / np.sqrt(h1))
    assert 0.5 < consts[0] / consts[1] < 2.0
