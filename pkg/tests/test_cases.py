import numpy as np
import pytest

from cdii import cases


@pytest.mark.parametrize("name", cases.CATALOG)
def test_catalog_cases_solve_the_pde(name):
    case = cases.get_case(name)
    assert case.check_pde(count=30) < 1e-7


def test_unknown_case():
    with pytest.raises(KeyError):
        cases.get_case("nope")


@pytest.mark.parametrize("gamma0,t", [
    (np.eye(2), (1.0, 1.0)),
    (np.eye(2), (1.0, 2.0)),
    (np.eye(3), (1.0, 2.0, 3.0)),
    (np.array([[1.0, 0.0], [0.0, -1.0]]), None),
    (np.array([[1.0, 1.0], [0.0, 1.0]]), None),
])
def test_constant_case_rejects_bad_parameters(gamma0, t):
    with pytest.raises(ValueError):
        cases.constant_case(gamma0, t=t)


def test_odd_matrix_other_weights():
    S = cases.odd_case_matrix((12.0, -3.0, 4.0))
    np.testing.assert_allclose(S, [[12, 0, 2.5], [0, 2, 0], [2.5, 0, 1]])


def test_constant_case_expected_entries(spd2):
    e = spd2.expected
    g0 = spd2.params["gamma0"]
    np.testing.assert_allclose(np.linalg.det(e["gamma_tilde"]), 1.0)
    np.testing.assert_allclose(e["S"], g0, atol=1e-14)  # S0 = I conjugated by gamma0^(1/2)


def test_diffeomorphisms_invert():
    for psi in (cases.Diffeomorphism.scaling(2.0, 2), cases.Diffeomorphism.shear(0.15),
                cases.Diffeomorphism.separable_quadratic([0.4, 0.25]), cases.Diffeomorphism.identity(3)):
        c = psi.bound([0.0] * psi.n, [1.0] * psi.n)
        assert c >= 1.0
        x = np.random.default_rng(2).uniform(0, 1, size=(20, psi.n))
        np.testing.assert_allclose(psi.inverse(psi.forward(x)), x, atol=1e-12)


def test_shear_is_volume_preserving():
    psi = cases.Diffeomorphism.shear(0.15)
    x = np.random.default_rng(3).uniform(0, 1, size=(30, 2))
    np.testing.assert_allclose(psi.jac_det(x), 1.0, atol=1e-13)


def test_push_forward_scaling_formula(spd2):
    psi = cases.Diffeomorphism.scaling(2.0, 2)
    pc = cases.push_forward(spd2, psi)
    y = np.array([[1.0, 0.6]])
    # (D gamma D^T) / |J| with D = 2 I, |J| = 4
    np.testing.assert_allclose(pc.gamma(y)[0], spd2.params["gamma0"], atol=1e-14)
    assert pc.check_pde(count=20) < 1e-7


def test_push_forward_fields_matches_analytic(spd2):
    psi = cases.Diffeomorphism.shear(0.15)
    pc = cases.push_forward(spd2, psi)
    src = spd2.grid(64)
    tgt = pc.grid(16)
    fields = {"gamma": spd2.conductivity(src).gamma, "H": spd2.measurements(src)[2]}
    out = cases.push_forward_fields(fields, {"gamma": "gamma", "H": "current"}, psi, tgt)
    mask = out["_mask"]
    assert mask.mean() > 0.5
    err_g = np.abs(out["gamma"].values - pc.conductivity(tgt).values)[mask].max()
    err_h = np.abs(out["H"].values - pc.measurements(tgt)[2].values)[mask].max()
    assert err_g < 1e-10  # gamma is constant
    assert err_h < 5e-3


def test_identity_case_matrices():
    c = cases.get_case("constant-identity-2d")
    np.testing.assert_allclose(c.expected["Z1"], np.diag([1.0, -1.0]))
    np.testing.assert_allclose(c.expected["Z2"], [[0, 1.0], [1.0, 0]])
    x = np.array([[0.3, 0.7]])
    np.testing.assert_allclose(c.solutions[2](x), (0.09 - 0.49) / 2)
    np.testing.assert_allclose(c.solutions[3](x), 0.21)


def test_odd_case_determinant_and_trace(odd3):
    S = odd3.expected["S0"]
    assert np.linalg.det(S) == pytest.approx(2.0)
    assert np.trace(odd3.expected["Z2"]) == pytest.approx(0.0, abs=1e-15)
    assert np.min(np.linalg.eigvalsh(cases.get_case("constant-spd-2d").expected["S"])) > 0


def test_cgo_f1_scaling():
    x = np.array([[0.0, 0.4], [0.0, 0.9]])  # k . x = 0 for k = e1
    a = cases.cgo_f1(cases.cgo_pair(1.0, 2.0), x)
    b = cases.cgo_f1(cases.cgo_pair(1.0, 4.0), x)
    np.testing.assert_allclose(b / a, 16.0, rtol=1e-12)
    np.testing.assert_allclose(a, 2.0 ** 4, rtol=1e-12)


def test_identity_push_forward_changes_nothing(spd2):
    pc = cases.push_forward(spd2, cases.Diffeomorphism.identity(2))
    x = np.random.default_rng(4).uniform(0, 1, size=(10, 2))
    np.testing.assert_allclose(pc.gamma(x), spd2.gamma(x), atol=1e-15)
    for i in range(4):
        np.testing.assert_allclose(pc.current(i, x), spd2.current(i, x), atol=1e-15)


def test_push_forward_chain_rule(spd2):
    psi = cases.Diffeomorphism.separable_quadratic([0.4, 0.25])
    pc = cases.push_forward(spd2, psi)
    x = np.random.default_rng(5).uniform(0.05, 0.95, size=(30, 2))
    D = psi.jacobian(x)
    J = np.abs(np.linalg.det(D))
    for i in range(4):
        back = J[:, None] * np.linalg.solve(D, pc.current(i, psi.forward(x))[..., None])[..., 0]
        np.testing.assert_allclose(back, spd2.current(i, x), atol=1e-12)
