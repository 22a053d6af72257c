"""Gravity field of a homogeneous closed polyhedron.

The potential and attraction are evaluated with the edge-dyad / face-dyad
polyhedron formulation, which is exact for a constant-density body bounded
by planar triangles. Sign convention: ``potential`` is the gravitational
potential energy per unit mass (negative, -GM/r in the far field) so that
``acceleration == -grad(potential)``.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np

logger = logging.getLogger(__name__)

G = 6.674e-11  # m^3 / (kg s^2)
SINGULAR_DISTANCE = 1e-9  # m


class ShapeError(ValueError):
    """Base class for invalid shape models."""


class ShapeParseError(ShapeError):
    pass


class TopologyError(ShapeError):
    pass


class OrientationError(ShapeError):
    pass


class SingularityError(ValueError):
    """Field point lies on (or within 1e-9 m of) the polyhedron surface."""


class InteriorPointError(ValueError):
    """Field point lies inside the polyhedron."""


def _signed_volume(vertices: np.ndarray, faces: np.ndarray) -> float:
    tri = vertices[faces]
    return float(np.einsum("ij,ij->i", tri[:, 0], np.cross(tri[:, 1], tri[:, 2])).sum() / 6.0)


@dataclass(frozen=True, eq=False)
class ShapeModel:
    """Closed, outward-oriented triangle mesh with a uniform density.

    Args:
        vertices: (V, 3) vertex coordinates in metres.
        faces: (F, 3) zero-based vertex indices, counter-clockwise seen from outside.
        density: mass density in kg/m^3.
    """

    vertices: np.ndarray
    faces: np.ndarray
    density: float

    def __post_init__(self):
        v = np.array(self.vertices, dtype=float)
        f = np.array(self.faces, dtype=np.int64)
        if v.ndim != 2 or v.shape[1] != 3:
            raise ShapeError(f"vertices must be (V, 3), got {v.shape}")
        if f.ndim != 2 or f.shape[1] != 3 or len(f) == 0:
            raise ShapeError(f"faces must be (F, 3) and non-empty, got {f.shape}")
        if f.min() < 0 or f.max() >= len(v):
            raise ShapeError("face index out of range")
        if not self.density > 0:
            raise ShapeError(f"density must be positive, got {self.density}")
        v.setflags(write=False)
        f.setflags(write=False)
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "faces", f)
        object.__setattr__(self, "density", float(self.density))
        _check_closed(f)
        vol = _signed_volume(v, f)
        if vol <= 0:
            raise OrientationError(f"signed volume {vol:.6g} m^3 is not positive; faces point inward")
        object.__setattr__(self, "_volume", vol)

    @property
    def volume(self) -> float:
        return self._volume  # type: ignore[attr-defined]

    @property
    def mass(self) -> float:
        return self.density * self.volume

    @property
    def mu(self) -> float:
        """Gravitational parameter G*M in m^3/s^2."""
        return G * self.mass

    @property
    def centroid(self) -> np.ndarray:
        tri = self.vertices[self.faces]
        det = np.einsum("ij,ij->i", tri[:, 0], np.cross(tri[:, 1], tri[:, 2]))
        return (det[:, None] * tri.sum(axis=1)).sum(axis=0) / (24.0 * self.volume)

    @property
    def bounding_radius(self) -> float:
        return float(np.linalg.norm(self.vertices - self.centroid, axis=1).max())

    def with_density(self, density: float) -> "ShapeModel":
        return ShapeModel(self.vertices, self.faces, density)

    def transformed(self, rotation: np.ndarray, translation: Sequence[float] = (0.0, 0.0, 0.0)) -> "ShapeModel":
        rot = np.asarray(rotation, dtype=float)
        return ShapeModel(self.vertices @ rot.T + np.asarray(translation, dtype=float), self.faces, self.density)


def _check_closed(faces: np.ndarray) -> None:
    """Every edge must be used once in each direction (closed and consistently wound)."""
    directed = np.concatenate([faces[:, [0, 1]], faces[:, [1, 2]], faces[:, [2, 0]]])
    if np.any(directed[:, 0] == directed[:, 1]):
        raise TopologyError("degenerate face with repeated vertex")
    und = np.sort(directed, axis=1)
    _, counts = np.unique(und, axis=0, return_counts=True)
    if np.any(counts != 2):
        bad = int(np.count_nonzero(counts != 2))
        raise TopologyError(f"mesh is not closed: {bad} edge(s) not shared by exactly two faces")
    _, dcounts = np.unique(directed, axis=0, return_counts=True)
    if np.any(dcounts != 1):
        raise TopologyError("inconsistent face winding: a directed edge appears twice")


def load_shape(path: str | Path, density: float = 2100.0) -> ShapeModel:
    """Read an OBJ-subset file (``v x y z`` and ``f i j k`` lines, 1-based).

    Comments (``#``) and blank lines are ignored. Face entries of the form
    ``i/t/n`` are accepted and only the vertex index is kept.
    """
    verts: list[list[float]] = []
    faces: list[list[int]] = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            tag, *rest = line.split()
            try:
                if tag == "v":
                    if len(rest) != 3:
                        raise ValueError("expected 3 coordinates")
                    verts.append([float(x) for x in rest])
                elif tag == "f":
                    if len(rest) != 3:
                        raise ValueError("only triangular faces are supported")
                    idx = [int(tok.split("/")[0]) for tok in rest]
                    if min(idx) < 1:
                        raise ValueError("indices are 1-based")
                    faces.append([i - 1 for i in idx])
                else:
                    raise ValueError(f"unsupported record {tag!r}")
            except ValueError as exc:
                raise ShapeParseError(f"{path}, line {lineno}: {exc}: {raw.rstrip()!r}") from None
    if not verts or not faces:
        raise ShapeParseError(f"{path}: no vertices or faces")
    if max(max(f) for f in faces) >= len(verts):
        raise ShapeParseError(f"{path}: face references vertex beyond {len(verts)}")
    return ShapeModel(np.array(verts), np.array(faces), density)


def write_obj(path: str | Path, shape: ShapeModel) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for v in shape.vertices:
            fh.write(f"v {float(v[0])!r} {float(v[1])!r} {float(v[2])!r}\n")
        for f in shape.faces:
            fh.write(f"f {f[0] + 1} {f[1] + 1} {f[2] + 1}\n")


# --------------------------------------------------------------------------
# Built-in meshes
# --------------------------------------------------------------------------

def box(size: Sequence[float] = (1.0, 1.0, 1.0), density: float = 2100.0) -> ShapeModel:
    """Axis-aligned box centred on the origin, 8 vertices and 12 triangles."""
    hx, hy, hz = (0.5 * float(s) for s in size)
    v = np.array([[x, y, z] for x in (-hx, hx) for y in (-hy, hy) for z in (-hz, hz)])
    # vertex index = 4*ix + 2*iy + iz
    quads = [
        (0, 1, 3, 2),  # -x
        (4, 6, 7, 5),  # +x
        (0, 4, 5, 1),  # -y
        (2, 3, 7, 6),  # +y
        (0, 2, 6, 4),  # -z
        (1, 5, 7, 3),  # +z
    ]
    faces = []
    for a, b, c, d in quads:
        faces += [(a, b, c), (a, c, d)]
    return ShapeModel(v, np.array(faces), density)


def icosphere(radius: float = 1.0, subdivisions: int = 2, density: float = 2100.0,
              axes: Sequence[float] = (1.0, 1.0, 1.0)) -> ShapeModel:
    """Subdivided icosahedron projected onto a sphere, optionally stretched to an ellipsoid."""
    t = (1.0 + math.sqrt(5.0)) / 2.0
    verts = [(-1, t, 0), (1, t, 0), (-1, -t, 0), (1, -t, 0),
             (0, -1, t), (0, 1, t), (0, -1, -t), (0, 1, -t),
             (t, 0, -1), (t, 0, 1), (-t, 0, -1), (-t, 0, 1)]
    faces = [(0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
             (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
             (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
             (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1)]
    pts = [np.array(p, dtype=float) / np.linalg.norm(p) for p in verts]
    for _ in range(subdivisions):
        cache: dict[tuple[int, int], int] = {}

        def midpoint(i: int, j: int) -> int:
            key = (min(i, j), max(i, j))
            if key not in cache:
                m = pts[i] + pts[j]
                pts.append(m / np.linalg.norm(m))
                cache[key] = len(pts) - 1
            return cache[key]

        new_faces = []
        for a, b, c in faces:
            ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
            new_faces += [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
        faces = new_faces
    v = np.array(pts) * radius * np.asarray(axes, dtype=float)
    return ShapeModel(v, np.array(faces), density)


# --------------------------------------------------------------------------
# Field evaluation
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class GravitySample:
    point: np.ndarray
    potential: float
    acceleration: np.ndarray


def _face_frames(shape: ShapeModel):
    tri = shape.vertices[shape.faces]  # (F, 3 verts, 3)
    n = np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0])
    n /= np.linalg.norm(n, axis=1, keepdims=True)
    edge_vec = np.roll(tri, -1, axis=1) - tri  # edge k runs vertex k -> k+1
    edge_len = np.linalg.norm(edge_vec, axis=2)
    # outward in-plane edge normals
    edge_n = np.cross(edge_vec, n[:, None, :]) / edge_len[..., None]
    return tri, n, edge_vec, edge_len, edge_n


def surface_distance(shape: ShapeModel, point: Sequence[float]) -> float:
    """Euclidean distance from ``point`` to the closest point on the mesh."""
    x = np.asarray(point, dtype=float)
    tri, n, edge_vec, edge_len, edge_n = _face_frames(shape)
    rel = x - tri  # (F, 3, 3)
    plane = np.einsum("fj,fj->f", rel[:, 0], n)
    inside = np.all(np.einsum("fkj,fkj->fk", rel, edge_n) <= 0.0, axis=1)
    t = np.clip(np.einsum("fkj,fkj->fk", rel, edge_vec) / edge_len**2, 0.0, 1.0)
    seg = np.linalg.norm(rel - t[..., None] * edge_vec, axis=2).min(axis=1)
    return float(np.where(inside, np.abs(plane), seg).min())


_FAR_RATIO = 20.0  # face-centroid distance / longest edge beyond which quadrature is used


def _triangle_rule(n: int = 8):
    """Collapsed Gauss-Legendre rule on the unit triangle as (barycentric (Q, 3), weights summing to 1)."""
    x, w = np.polynomial.legendre.leggauss(n)
    x = 0.5 * (x + 1.0)
    w = 0.5 * w
    xi, eta = np.meshgrid(x, x, indexing="ij")
    wts = (np.outer(w, w) * xi * 2.0).ravel()
    bary = np.stack([1.0 - xi, xi * (1.0 - eta), xi * eta], axis=-1).reshape(-1, 3)
    return bary, wts


_RULE = _triangle_rule()


@dataclass(frozen=True)
class _Frames:
    tri: np.ndarray  # (F, 3, 3) vertices relative to the body centroid
    normal: np.ndarray
    edge_vec: np.ndarray
    edge_len: np.ndarray
    edge_normal: np.ndarray
    area: np.ndarray
    face_center: np.ndarray
    longest: np.ndarray
    quad_points: np.ndarray  # (F, Q, 3)
    centroid: np.ndarray


def _frames(shape: ShapeModel) -> _Frames:
    c = shape.centroid
    tri, n, edge_vec, edge_len, edge_n = _face_frames(shape)
    tri = tri - c
    area = 0.5 * np.linalg.norm(np.cross(edge_vec[:, 0], -edge_vec[:, 2]), axis=1)
    bary, _ = _RULE
    qp = np.einsum("qk,fkj->fqj", bary, tri)
    return _Frames(tri, n, edge_vec, edge_len, edge_n, area, tri.mean(axis=1),
                   edge_len.max(axis=1), qp, c)


def _raw_field(shape: ShapeModel, x: np.ndarray, frames: _Frames | None = None):
    """Return (U, grad U, sum of face solid angles), U = G rho * integral dV/|p - x| > 0.

    Everything is expressed through the face integrals I_f = int_f dA/|p - x|:
    U = (G rho/2) sum_f (n_f . (p_f - x)) I_f and grad U = -G rho sum_f n_f I_f.
    Near faces use the closed-form edge/face decomposition of I_f; faces far
    from the field point use quadrature of I_f - A_f/R, which keeps the sums
    free of cancellation at large range.
    """
    fr = frames if frames is not None else _frames(shape)
    X = x - fr.centroid
    R = float(np.linalg.norm(X))
    r = fr.tri - X  # (F, 3, 3) vertices relative to the field point
    rn = np.linalg.norm(r, axis=2)

    r1, r2, r3 = r[:, 0], r[:, 1], r[:, 2]
    num = np.einsum("fj,fj->f", r1, np.cross(r2, r3))
    den = (rn[:, 0] * rn[:, 1] * rn[:, 2]
           + rn[:, 0] * np.einsum("fj,fj->f", r2, r3)
           + rn[:, 1] * np.einsum("fj,fj->f", r3, r1)
           + rn[:, 2] * np.einsum("fj,fj->f", r1, r2))
    omega = 2.0 * np.arctan2(num, den)

    far = np.linalg.norm(fr.face_center - X, axis=1) > _FAR_RATIO * fr.longest
    near = ~far
    # J_f = I_f - A_f / R
    J = np.empty(len(omega))
    if near.any():
        s = rn[near] + np.roll(rn[near], -1, axis=1)
        e = fr.edge_len[near]
        L = np.log1p(2.0 * e / (s - e))
        re = np.einsum("fkj,fkj->fk", r[near], fr.edge_normal[near])
        rf = np.einsum("fj,fj->f", r1[near], fr.normal[near])
        I_near = (re * L).sum(axis=1) - rf * omega[near]
        J[near] = I_near - fr.area[near] / R
    if far.any():
        q = fr.quad_points[far]  # relative to centroid
        rho = np.linalg.norm(q - X, axis=2)
        g = (2.0 * np.einsum("fqj,j->fq", q, X) - np.einsum("fqj,fqj->fq", q, q)) / (R * rho * (R + rho))
        J[far] = fr.area[far] * (g @ _RULE[1])
    I = J + fr.area / R

    # sum_f n_f A_f vanishes identically on a closed surface, so only J enters here
    nJ = (fr.normal * J[:, None]).sum(axis=0)
    nq = np.einsum("fj,fj->f", fr.tri[:, 0], fr.normal)
    u = 0.5 * ((nq * I).sum() - X @ nJ)
    k = G * shape.density
    return k * u, -k * nJ, float(omega.sum())


def polyhedron_field(shape: ShapeModel, point: Sequence[float]) -> GravitySample:
    """Potential and acceleration at an exterior point.

    Raises:
        SingularityError: the point is within 1e-9 m of a face, edge or vertex.
        InteriorPointError: the point is inside the body.
    """
    x = np.asarray(point, dtype=float)
    if x.shape != (3,):
        raise ValueError(f"point must be a 3-vector, got shape {x.shape}")
    if surface_distance(shape, x) <= SINGULAR_DISTANCE:
        raise SingularityError(f"point {x.tolist()} lies on the polyhedron surface")
    with np.errstate(divide="ignore", invalid="ignore"):  # only the centroid itself divides by zero
        u, grad, solid = _raw_field(shape, x)
    if solid > 2.0 * math.pi:
        raise InteriorPointError(f"point {x.tolist()} is inside the polyhedron")
    return GravitySample(point=x, potential=-u, acceleration=grad)


# --------------------------------------------------------------------------
# Slice maps
# --------------------------------------------------------------------------

_AXES = {"x": 0, "y": 1, "z": 2}


@dataclass(frozen=True)
class GravityMap:
    """Samples on a regular grid in an axis-aligned plane.

    ``valid`` is False where the grid point is inside the body or on its
    surface; potential and acceleration are NaN there.
    """

    points: np.ndarray  # (n_u, n_v, 3)
    potential: np.ndarray  # (n_u, n_v)
    acceleration: np.ndarray  # (n_u, n_v, 3)
    valid: np.ndarray  # (n_u, n_v) bool

    @property
    def magnitude(self) -> np.ndarray:
        return np.linalg.norm(self.acceleration, axis=-1)

    def samples(self) -> Iterator[GravitySample]:
        for idx in zip(*np.nonzero(self.valid)):
            yield GravitySample(self.points[idx], float(self.potential[idx]), self.acceleration[idx])


def surface_gravity_map(shape: ShapeModel, plane: tuple[str, float] = ("y", 0.0),
                        resolution: float = 0.1) -> GravityMap:
    """Sample the field over a planar slice of the body's bounding box.

    Args:
        plane: ``(normal_axis, offset)``; ``("y", 0.0)`` is the x-z plane through the origin.
        resolution: grid spacing in metres.
    """
    if not resolution > 0:
        raise ValueError(f"resolution must be positive, got {resolution}")
    axis_name, offset = plane
    if axis_name not in _AXES:
        raise ValueError(f"plane normal must be one of x, y, z; got {axis_name!r}")
    normal = _AXES[axis_name]
    iu, iv = [a for a in range(3) if a != normal]
    lo = shape.vertices.min(axis=0)
    hi = shape.vertices.max(axis=0)
    center = 0.5 * (lo + hi)
    half = 1.5 * 0.5 * (hi - lo)

    def axis_coords(a: int) -> np.ndarray:
        k = int(math.floor(half[a] / resolution + 1e-9))
        return center[a] + resolution * np.arange(-k, k + 1)

    us, vs = axis_coords(iu), axis_coords(iv)
    pts = np.zeros((len(us), len(vs), 3))
    pts[..., iu] = us[:, None]
    pts[..., iv] = vs[None, :]
    pts[..., normal] = offset

    pot = np.full(pts.shape[:2], np.nan)
    acc = np.full(pts.shape, np.nan)
    valid = np.zeros(pts.shape[:2], dtype=bool)
    frames = _frames(shape)
    for i in range(len(us)):
        for j in range(len(vs)):
            x = pts[i, j]
            if surface_distance(shape, x) <= SINGULAR_DISTANCE:
                continue
            with np.errstate(divide="ignore", invalid="ignore"):
                u, grad, solid = _raw_field(shape, x, frames)
            if solid > 2.0 * math.pi:
                continue
            pot[i, j] = -u
            acc[i, j] = grad
            valid[i, j] = True
    logger.debug("gravity map: %d of %d points valid", int(valid.sum()), valid.size)
    return GravityMap(pts, pot, acc, valid)


def write_map_csv(path: str | Path, gmap: GravityMap) -> None:
    """CSV with header ``x,y,z,potential,ax,ay,az``; flagged points carry NaN."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "y", "z", "potential", "ax", "ay", "az"])
        for i in range(gmap.points.shape[0]):
            for j in range(gmap.points.shape[1]):
                p = gmap.points[i, j]
                a = gmap.acceleration[i, j]
                w.writerow([repr(float(v)) for v in (*p, gmap.potential[i, j], *a)])
