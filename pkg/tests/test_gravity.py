import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nanolander import gravity as gv
from nanolander.gravity import G


def cube_obj(tmp_path, drop_face=False, invert=False):
    shape = gv.box()
    faces = shape.faces[:-1] if drop_face else shape.faces
    if invert:
        faces = faces[:, ::-1]
    lines = [f"v {x} {y} {z}" for x, y, z in shape.vertices]
    lines += ["f " + " ".join(str(i + 1) for i in f) for f in faces]
    path = tmp_path / "cube.obj"
    path.write_text("# cube\n" + "\n".join(lines) + "\n")
    return path


def random_rotation(rng):
    q, r = np.linalg.qr(rng.normal(size=(3, 3)))
    q = q @ np.diag(np.sign(np.diag(r)))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q


def test_load_unit_cube(tmp_path):
    shape = gv.load_shape(cube_obj(tmp_path), density=1000.0)
    assert len(shape.faces) == 12
    assert shape.volume == pytest.approx(1.0, rel=1e-14)
    assert shape.mass == pytest.approx(1000.0)


def test_open_mesh_is_topology_error(tmp_path):
    with pytest.raises(gv.TopologyError):
        gv.load_shape(cube_obj(tmp_path, drop_face=True))


def test_inverted_mesh_is_orientation_error(tmp_path):
    with pytest.raises(gv.OrientationError):
        gv.load_shape(cube_obj(tmp_path, invert=True))


def test_parse_error_names_line(tmp_path):
    path = tmp_path / "bad.obj"
    path.write_text("v 0 0 0\nv 1 0 zero\n")
    with pytest.raises(gv.ShapeParseError, match="line 2"):
        gv.load_shape(path)


def test_obj_round_trip(tmp_path):
    shape = gv.icosphere(2.0, 1)
    gv.write_obj(tmp_path / "s.obj", shape)
    back = gv.load_shape(tmp_path / "s.obj", density=shape.density)
    np.testing.assert_allclose(back.vertices, shape.vertices)
    assert back.volume == pytest.approx(shape.volume, rel=1e-12)


def test_far_field_point_mass_100m():
    rho = 2100.0
    s = gv.polyhedron_field(gv.box(density=rho), (100.0, 0.0, 0.0))
    expected = G * rho / 100.0**2
    assert abs(np.linalg.norm(s.acceleration) / expected - 1) < 1e-4
    assert s.potential < 0
    assert s.acceleration[0] < 0  # attraction toward the body


def test_far_field_at_infinity():
    shape = gv.box()
    s = gv.polyhedron_field(shape, (1e9, 0.0, 0.0))
    pm = shape.mu / 1e18
    assert abs(np.linalg.norm(s.acceleration) / pm - 1) < 1e-12
    assert abs(s.potential / (-shape.mu / 1e9) - 1) < 1e-12


def test_cube_axis_symmetry():
    shape = gv.box()
    ax = gv.polyhedron_field(shape, (3.0, 0.0, 0.0)).acceleration
    ay = gv.polyhedron_field(shape, (0.0, 3.0, 0.0)).acceleration
    assert abs(np.linalg.norm(ax) / np.linalg.norm(ay) - 1) < 1e-12


def test_density_linearity():
    p = (1.3, -0.7, 2.1)
    a1 = gv.polyhedron_field(gv.box(density=1000.0), p)
    a2 = gv.polyhedron_field(gv.box(density=2000.0), p)
    np.testing.assert_allclose(a2.acceleration, 2 * a1.acceleration, rtol=1e-13)
    assert a2.potential == pytest.approx(2 * a1.potential, rel=1e-13)


def test_rotation_equivariance():
    rng = np.random.default_rng(4)
    shape = gv.icosphere(1.0, 1, axes=(1.5, 1.0, 0.7))
    for _ in range(10):
        R = random_rotation(rng)
        p = rng.normal(size=3)
        p *= 3.0 / np.linalg.norm(p)
        a = gv.polyhedron_field(shape, p).acceleration
        b = gv.polyhedron_field(shape.transformed(R), R @ p).acceleration
        assert np.linalg.norm(b - R @ a) <= 1e-12 * np.linalg.norm(a)


def test_surface_point_is_singular():
    with pytest.raises(gv.SingularityError):
        gv.polyhedron_field(gv.box(), (0.5, 0.1, 0.2))


def test_interior_point_rejected():
    with pytest.raises(gv.InteriorPointError):
        gv.polyhedron_field(gv.box(), (0.1, 0.0, 0.0))


def test_sphere_matches_point_mass_outside():
    shape = gv.icosphere(1.0, 4)
    s = gv.polyhedron_field(shape, (0.0, 0.0, 2.0))
    assert np.linalg.norm(s.acceleration) == pytest.approx(shape.mu / 4.0, rel=1e-9)


@settings(max_examples=40, deadline=None)
@given(st.floats(-1, 1), st.floats(-1, 1), st.floats(-1, 1), st.floats(1.0, 20.0))
def test_gradient_matches_potential(x, y, z, r):
    d = np.array([x, y, z])
    if np.linalg.norm(d) < 1e-3:
        return
    p = r * d / np.linalg.norm(d)
    shape = gv.box()
    h = 1e-4 * max(1.0, r)
    grad = np.zeros(3)
    for k in range(3):
        e = np.zeros(3)
        e[k] = h
        grad[k] = (gv.polyhedron_field(shape, p + e).potential - gv.polyhedron_field(shape, p - e).potential) / (2 * h)
    a = gv.polyhedron_field(shape, p).acceleration
    assert np.linalg.norm(a + grad) <= 1e-6 * np.linalg.norm(a)


def test_cube_map_symmetry():
    gmap = gv.surface_gravity_map(gv.box(), ("y", 0.0), 0.25)
    mag = gmap.magnitude
    assert gmap.valid.sum() > 0
    # grid is centred, so reversing either in-plane axis maps the slice onto itself
    flipped_u = mag[::-1, :]
    flipped_v = mag[:, ::-1]
    ok = gmap.valid & gmap.valid[::-1, :] & gmap.valid[:, ::-1]
    np.testing.assert_allclose(mag[ok], flipped_u[ok], rtol=1e-10)
    np.testing.assert_allclose(mag[ok], flipped_v[ok], rtol=1e-10)


def test_map_flags_interior_points():
    gmap = gv.surface_gravity_map(gv.box(), ("z", 0.0), 0.25)
    inside = (np.abs(gmap.points[..., 0]) < 0.5) & (np.abs(gmap.points[..., 1]) < 0.5)
    assert not gmap.valid[inside].any()
    assert np.isnan(gmap.potential[inside]).all()


def test_map_density_doubles():
    m1 = gv.surface_gravity_map(gv.box(density=1000.0), ("y", 0.0), 0.5)
    m2 = gv.surface_gravity_map(gv.box(density=2000.0), ("y", 0.0), 0.5)
    np.testing.assert_allclose(m2.magnitude[m1.valid], 2 * m1.magnitude[m1.valid], rtol=1e-13)


def test_castalia_class_surface_gravity():
    shape = gv.icosphere(700.0, 3, density=2100.0, axes=(1.4, 0.6, 0.55))
    # points just above the surface along the principal axes
    for axis, extent in zip(range(3), (1.4, 0.6, 0.55)):
        p = np.zeros(3)
        p[axis] = 700.0 * extent * 1.02
        a = np.linalg.norm(gv.polyhedron_field(shape, p).acceleration)
        assert 1e-4 <= a <= 1e-3


def test_map_csv(tmp_path):
    gmap = gv.surface_gravity_map(gv.box(), ("y", 0.0), 0.5)
    path = tmp_path / "map.csv"
    gv.write_map_csv(path, gmap)
    lines = path.read_text().splitlines()
    assert lines[0] == "x,y,z,potential,ax,ay,az"
    assert len(lines) == 1 + gmap.valid.size
    assert any("nan" in ln.lower() for ln in lines[1:])


def test_bad_resolution():
    with pytest.raises(ValueError):
        gv.surface_gravity_map(gv.box(), ("y", 0.0), 0.0)


def test_mass_properties():
    shape = gv.box((2.0, 1.0, 3.0), density=10.0)
    assert shape.volume == pytest.approx(6.0)
    assert shape.mass == pytest.approx(60.0)
    np.testing.assert_allclose(shape.centroid, 0.0, atol=1e-15)
    assert shape.bounding_radius == pytest.approx(math.sqrt(1 + 0.25 + 2.25))
