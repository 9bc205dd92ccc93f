import numpy as np
import pytest
from hypothesis import given, strategies as st

from cdii.grid import Box, Grid, MatrixField, ScalarField, TwoFormField, VectorField


def test_uniform_grid_geometry():
    g = Grid.uniform(2, 0.25)
    assert g.dims == (5, 5)
    assert g.h == 0.25
    assert g.upper == (1.0, 1.0)
    assert g.coords().shape == (5, 5, 2)
    np.testing.assert_allclose(g.point((4, 2)), [1.0, 0.5])


def test_uniform_rejects_non_dividing_step():
    with pytest.raises(ValueError):
        Grid.uniform(2, 0.3)


@pytest.mark.parametrize("dims,origin,spacing", [
    ((5,), (0.0,), (0.1,)),
    ((5, 2), (0, 0), (0.1, 0.1)),
    ((5, 5), (0, 0), (0.1, -0.1)),
    ((5, 5), (0,), (0.1, 0.1)),
])
def test_bad_grids(dims, origin, spacing):
    with pytest.raises(ValueError):
        Grid(dims, origin, spacing)


def test_boundary_mask_counts():
    g = Grid.box([0, 0, 0], [1, 1, 1], [4, 5, 6])
    assert g.boundary_mask().sum() == 4 * 5 * 6 - 2 * 3 * 4


def test_refine_halves_step():
    g = Grid.uniform(2, 0.25).refine()
    assert g.dims == (9, 9) and g.h == 0.125 and g.upper == (1.0, 1.0)


def test_sub_grid_origin_and_dims():
    g = Grid.uniform(2, 0.1)
    s = g.sub(Box((2, 3), (8, 10)))
    assert s.dims == (6, 7)
    np.testing.assert_allclose(s.origin, [0.2, 0.3])


@given(st.floats(-3, 3), st.floats(-3, 3))
def test_nearest_index_is_clipped(x, y):
    g = Grid.uniform(2, 0.125)
    i, j = g.nearest_index((x, y))
    assert 0 <= i < 9 and 0 <= j < 9
    if 0 <= x <= 1 and 0 <= y <= 1:
        assert np.all(np.abs(g.point((i, j)) - (x, y)) <= 0.0625 + 1e-12)


def test_box_physical_and_check():
    g = Grid.uniform(2, 0.1)
    b = Box.physical(g, (0.2, 0.2), (0.5, 0.7))
    assert b == Box((2, 2), (6, 8))
    assert b.contains((2, 7)) and not b.contains((6, 2))
    with pytest.raises(ValueError):
        Box((0, 0), (12, 5)).check(g)
    with pytest.raises(ValueError):
        Box((0,), (5,)).check(g)


def test_grid_dict_round_trip():
    g = Grid.box([-1, 0, 2], [1, 3, 4], [5, 6, 7])
    assert Grid.from_dict(g.to_dict()).same_as(g)
    d = g.to_dict()
    d["n"] = 2
    with pytest.raises(ValueError):
        Grid.from_dict(d)


def test_field_shapes_are_validated():
    g = Grid.uniform(2, 0.25)
    with pytest.raises(ValueError):
        VectorField(g, np.zeros((5, 5, 3)))
    with pytest.raises(ValueError):
        ScalarField(g, np.zeros((4, 5)))
    with pytest.raises(ValueError):
        TwoFormField(g, np.ones((5, 5, 2, 2)))


def test_matrix_field_helpers(rng):
    g = Grid.uniform(2, 0.25)
    cols = [VectorField(g, rng.standard_normal((5, 5, 2))) for _ in range(2)]
    M = MatrixField.from_columns(cols)
    np.testing.assert_array_equal(M.column(1).values, cols[1].values)
    assert M.transpose().transpose().values.tolist() == M.values.tolist()
    C = MatrixField.constant(g, [[1.0, 2.0], [2.0, 3.0]])
    assert C.asymmetry() == 0.0
    box = Box.interior(g)
    assert M.restrict(box).grid.dims == (3, 3)
    assert M[box].shape == (3, 3, 2, 2)
