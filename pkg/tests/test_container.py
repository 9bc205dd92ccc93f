import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cdii.container import FieldContainer, read_container, write_container
from cdii.errors import ContainerError
from cdii.grid import Grid, MatrixField, ScalarField, TwoFormField, VectorField


def _container(rng, n=2):
    g = Grid.box([0.0] * n, [1.0] * n, [4 + k for k in range(n)])
    fc = FieldContainer(g, attrs={"case": "demo", "t": [1, -1]})
    fc.add("beta", ScalarField(g, rng.standard_normal(g.dims)))
    fc.add("H1", VectorField(g, rng.standard_normal(g.dims + (n,))))
    m = rng.standard_normal(g.dims + (n, n))
    fc.add("gamma", MatrixField(g, m))
    fc.add("omega", TwoFormField(g, m - np.swapaxes(m, -1, -2)))
    return fc


@pytest.mark.parametrize("n", [2, 3])
def test_round_trip(tmp_path, rng, n):
    fc = _container(rng, n)
    back = read_container(write_container(tmp_path / "a.cdii", fc))
    assert back.grid.same_as(fc.grid) and back.attrs == fc.attrs
    assert list(back.fields) == list(fc.fields)
    for k in fc.fields:
        assert type(back[k]) is type(fc[k])
        np.testing.assert_array_equal(back[k].values, fc[k].values)


@settings(max_examples=20, deadline=None)
@given(st.integers(3, 6), st.integers(3, 6), st.floats(-1e6, 1e6, allow_nan=False))
def test_round_trip_is_bitwise(tmp_path_factory, a, b, value):
    g = Grid.box([0, 0], [1, 2], [a, b])
    fc = FieldContainer(g).add("f", ScalarField(g, np.full(g.dims, value)))
    path = tmp_path_factory.mktemp("c") / "f.cdii"
    assert read_container(write_container(path, fc))["f"].values.tobytes() == fc["f"].values.tobytes()


def test_missing_field_is_named(rng):
    fc = _container(rng)
    with pytest.raises(ContainerError, match="nope"):
        fc["nope"]
    assert [f.values.shape for f in fc.numbered("H")] == [(4, 5, 2)]


def test_add_validates(rng):
    fc = _container(rng)
    other = Grid.uniform(2, 0.5)
    with pytest.raises(ValueError):
        fc.add("x", ScalarField(other, np.zeros(other.dims)))
    with pytest.raises(TypeError):
        fc.add("x", np.zeros(3))


def _rewrite(path, header=None, manifest=None, payload_cut=0):
    raw = path.read_bytes()
    first = raw.index(b"\n")
    second = raw.index(b"\n", first + 1)
    h, m, p = raw[:first], json.loads(raw[first + 1:second]), raw[second + 1:]
    if header is not None:
        h = header
    if manifest is not None:
        manifest(m)
    if payload_cut:
        p = p[:-payload_cut]
    path.write_bytes(h + b"\n" + json.dumps(m).encode() + b"\n" + p)


@pytest.mark.parametrize("edit,match", [
    (dict(header=b"NOT-A-CONTAINER 1"), "bad header"),
    (dict(header=b"CDII-FIELDS 9"), "version 9"),
    (dict(manifest=lambda m: m.update(little_endian=False)), "little-endian"),
    (dict(manifest=lambda m: m.pop("grid")), "malformed"),
    (dict(manifest=lambda m: m["fields"][0].update(kind="tensor")), "unknown kind"),
    (dict(manifest=lambda m: m["fields"][1].update(components=7)), "components"),
    (dict(payload_cut=8), "truncated in field 'omega'"),
])
def test_corrupt_containers(tmp_path, rng, edit, match):
    path = write_container(tmp_path / "c.cdii", _container(rng))
    _rewrite(path, **edit)
    with pytest.raises(ContainerError, match=match):
        read_container(path)


def test_trailing_bytes_rejected(tmp_path, rng):
    path = write_container(tmp_path / "c.cdii", _container(rng))
    path.write_bytes(path.read_bytes() + b"\0" * 8)
    with pytest.raises(ContainerError, match="manifest describes"):
        read_container(path)


def test_unreadable_inputs(tmp_path):
    with pytest.raises(ContainerError):
        read_container(tmp_path / "missing.cdii")
    p = tmp_path / "empty.cdii"
    p.write_bytes(b"")
    with pytest.raises(ContainerError):
        read_container(p)
