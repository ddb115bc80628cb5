"""Intrinsic triangle meshes, reference domains and conformal metric fields.

A surface with boundary is stored as a triangulation plus one positive
length per edge.  Edges come in two kinds: the three sides of every
triangle, and *augmentation* edges joining nearby vertices whose length is
known intrinsically (straight segments in a flat chart, great-circle arcs on
a sphere).  Augmentation edges do not enter area computations; they only
shrink the metrication error of graph shortest paths.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np
from scipy.sparse import coo_matrix
from scipy.spatial import cKDTree

from ._validation import NumericalError, PreconditionError, check_positive

# Path sums over lengths on this grid are exact in double precision, which
# makes graph distances exactly symmetric and exactly metric.
LENGTH_QUANTUM = 2.0**-40

DEFAULT_AUGMENT = 10.0

_GAUSS3_NODES = np.array([0.5 - 0.5 * math.sqrt(0.6), 0.5, 0.5 + 0.5 * math.sqrt(0.6)])
_GAUSS3_WEIGHTS = np.array([5.0, 8.0, 5.0]) / 18.0


def quantize_lengths(lengths):
    return np.round(np.asarray(lengths, dtype=float) / LENGTH_QUANTUM) * LENGTH_QUANTUM


def heron_area(a, b, c):
    """Area of triangles with side lengths ``a, b, c`` (numerically stable Heron)."""
    s = np.sort(np.stack(np.broadcast_arrays(a, b, c)), axis=0)[::-1]
    a, b, c = s
    prod = (a + (b + c)) * (c - (a - b)) * (c + (a - b)) * (a + (b - c))
    return 0.25 * np.sqrt(np.maximum(prod, 0.0))


# --------------------------------------------------------------------------
# reference domains


class Disk:
    """Closed Euclidean disk, the default reference region ``D``."""

    def __init__(self, radius=1.0, center=(0.0, 0.0)):
        self.radius = check_positive(radius, "radius")
        self.center = np.asarray(center, dtype=float).reshape(2)

    def __repr__(self):
        return f"Disk(radius={self.radius!r}, center={tuple(self.center)!r})"

    @property
    def perimeter(self):
        return 2.0 * math.pi * self.radius

    @property
    def area(self):
        return math.pi * self.radius**2

    @property
    def diameter(self):
        return 2.0 * self.radius

    @property
    def inradius(self):
        return self.radius

    def level(self, x):
        """Signed distance to the boundary circle, negative inside."""
        x = np.asarray(x, dtype=float)
        return np.linalg.norm(x - self.center, axis=-1) - self.radius

    def contains(self, x, tol=1e-9):
        return self.level(x) <= tol

    def inward_normal(self, x):
        d = self.center - np.asarray(x, dtype=float)
        return d / np.linalg.norm(d, axis=-1, keepdims=True)

    def boundary_point(self, s):
        """Point at counterclockwise arc length ``s`` measured from angle 0."""
        a = np.asarray(s, dtype=float) / self.radius
        return self.center + self.radius * np.stack([np.cos(a), np.sin(a)], axis=-1)

    def boundary_samples(self, n):
        """``n`` equispaced boundary points with inward normals and arc weights."""
        s = np.arange(n) * (self.perimeter / n)
        p = self.boundary_point(s)
        return p, self.inward_normal(p), np.full(n, self.perimeter / n)

    def grid(self, spacing):
        """Square lattice points of the given spacing lying in the disk."""
        k = int(math.ceil(self.radius / spacing))
        t = np.arange(-k, k + 1) * spacing
        xx, yy = np.meshgrid(t, t, indexing="ij")
        pts = np.column_stack([xx.ravel(), yy.ravel()]) + self.center
        return pts[self.level(pts) <= 1e-12]

    def boundary_grid(self, spacing):
        n = max(8, int(math.ceil(self.perimeter / spacing)))
        return self.boundary_samples(n)[0]


class ConvexPolygon:
    """Convex polygonal reference region given by counterclockwise corners."""

    def __init__(self, vertices):
        v = np.asarray(vertices, dtype=float)
        if v.ndim != 2 or v.shape[1] != 2 or len(v) < 3:
            raise PreconditionError("polygon needs at least three 2-D corners")
        e = np.roll(v, -1, axis=0) - v
        cross = e[:, 0] * np.roll(e, -1, axis=0)[:, 1] - e[:, 1] * np.roll(e, -1, axis=0)[:, 0]
        if np.any(cross <= 0):
            raise PreconditionError("polygon corners must be strictly convex and counterclockwise")
        self.vertices = v
        self._edges = e
        self._lengths = np.linalg.norm(e, axis=1)
        self._normals = np.column_stack([-e[:, 1], e[:, 0]]) / self._lengths[:, None]

    @property
    def perimeter(self):
        return float(self._lengths.sum())

    @property
    def area(self):
        x, y = self.vertices.T
        return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))

    @property
    def diameter(self):
        d = self.vertices[:, None, :] - self.vertices[None, :, :]
        return float(np.linalg.norm(d, axis=-1).max())

    @property
    def inradius(self):
        c = self.vertices.mean(axis=0)
        return float(-self.level(c))

    def level(self, x):
        x = np.asarray(x, dtype=float)
        offs = np.einsum("...j,kj->...k", x, self._normals) - np.sum(
            self.vertices * self._normals, axis=1
        )
        return -offs.min(axis=-1)

    def contains(self, x, tol=1e-9):
        return self.level(x) <= tol

    def inward_normal(self, x):
        x = np.asarray(x, dtype=float)
        offs = np.einsum("...j,kj->...k", x, self._normals) - np.sum(
            self.vertices * self._normals, axis=1
        )
        return self._normals[np.argmin(offs, axis=-1)]

    def boundary_point(self, s):
        s = np.mod(np.asarray(s, dtype=float), self.perimeter)
        cum = np.concatenate([[0.0], np.cumsum(self._lengths)])
        k = np.clip(np.searchsorted(cum, s, side="right") - 1, 0, len(self._lengths) - 1)
        t = (s - cum[k]) / self._lengths[k]
        return self.vertices[k] + t[..., None] * self._edges[k]

    def boundary_samples(self, n):
        s = (np.arange(n) + 0.5) * (self.perimeter / n)
        cum = np.concatenate([[0.0], np.cumsum(self._lengths)])
        k = np.clip(np.searchsorted(cum, s, side="right") - 1, 0, len(self._lengths) - 1)
        return self.boundary_point(s), self._normals[k], np.full(n, self.perimeter / n)

    def grid(self, spacing):
        lo, hi = self.vertices.min(axis=0), self.vertices.max(axis=0)
        xs = np.arange(lo[0], hi[0] + spacing, spacing)
        ys = np.arange(lo[1], hi[1] + spacing, spacing)
        xx, yy = np.meshgrid(xs, ys, indexing="ij")
        pts = np.column_stack([xx.ravel(), yy.ravel()])
        return pts[self.level(pts) <= 1e-12]

    def boundary_grid(self, spacing):
        n = max(8, int(math.ceil(self.perimeter / spacing)))
        return self.boundary_point(np.arange(n) * self.perimeter / n)


# --------------------------------------------------------------------------
# metric fields


@dataclass(frozen=True)
class MetricField:
    """Riemannian metric on a convex planar region.

    The conformal case ``g = exp(2u) * g_euclid`` is described by ``u`` and
    its gradient; both map an ``(n, 2)`` array of points to ``(n,)`` and
    ``(n, 2)`` arrays.  A general field may instead supply ``tensor``, mapping
    points to ``(n, 2, 2)`` symmetric positive definite matrices; such fields
    compile into meshes but cannot be traced.
    """

    domain: object
    u: object = None
    grad_u: object = None
    tensor: object = None
    name: str = "euclidean"
    params: dict = field(default_factory=dict)

    @property
    def is_conformal(self):
        return self.tensor is None

    def conformal_exponent(self, x):
        x = np.asarray(x, dtype=float)
        if self.u is None:
            return np.zeros(x.shape[:-1])
        return np.asarray(self.u(x), dtype=float)

    def gradient(self, x):
        x = np.asarray(x, dtype=float)
        if self.grad_u is None:
            return np.zeros_like(x)
        return np.asarray(self.grad_u(x), dtype=float)

    def metric_tensor(self, x):
        x = np.asarray(x, dtype=float)
        if self.tensor is not None:
            return np.asarray(self.tensor(x), dtype=float)
        s = np.exp(2.0 * self.conformal_exponent(x))
        return s[..., None, None] * np.eye(2)

    def speed(self, x, direction):
        """Metric norm of ``direction`` attached at ``x``."""
        direction = np.asarray(direction, dtype=float)
        if self.tensor is None:
            return np.exp(self.conformal_exponent(x)) * np.linalg.norm(direction, axis=-1)
        g = self.metric_tensor(x)
        return np.sqrt(np.einsum("...i,...ij,...j->...", direction, g, direction))


def euclidean_field(domain=None):
    return MetricField(domain=domain if domain is not None else Disk())


def constant_scale_field(scale, domain=None):
    """Metric ``scale**2 * g_euclid``, i.e. ``u = ln(scale)``."""
    c = math.log(check_positive(scale, "scale"))
    return MetricField(
        domain=domain if domain is not None else Disk(),
        u=lambda x: np.full(np.shape(x)[:-1], c),
        grad_u=lambda x: np.zeros(np.shape(x)),
        name="constant_scale",
        params={"scale": float(scale)},
    )


def gaussian_bump_field(amplitude, width=0.3, center=(0.0, 0.0), domain=None):
    """Conformal bump ``u(x) = amplitude * exp(-|x - center|^2 / (2 width^2))``."""
    width = check_positive(width, "width")
    c = np.asarray(center, dtype=float).reshape(2)
    amp = float(amplitude)

    def u(x):
        r2 = np.sum((np.asarray(x) - c) ** 2, axis=-1)
        return amp * np.exp(-r2 / (2.0 * width**2))

    def grad_u(x):
        d = np.asarray(x) - c
        return -(u(x) / width**2)[..., None] * d

    return MetricField(
        domain=domain if domain is not None else Disk(),
        u=u,
        grad_u=grad_u,
        name="gaussian_bump",
        params={"amplitude": amp, "width": width, "center": [float(c[0]), float(c[1])]},
    )


# --------------------------------------------------------------------------
# the mesh


class IntrinsicMesh:
    """Triangulated surface with boundary described by its edge lengths.

    Parameters
    ----------
    triangles : (T, 3) int array
    edges : (E, 2) int array
        Every triangle side must be present; extra pairs are augmentation
        edges.
    lengths : (E,) float array
        Positive lengths, snapped to :data:`LENGTH_QUANTUM`.
    boundary : (B,) int array
        Boundary loop in cyclic order.
    boundary_arclen : (B,) float array, optional
        Parameter of each boundary vertex; starts at 0 and increases strictly.
        Defaults to the intrinsic arc length along the loop.
    boundary_period : float, optional
        Parameter length of the whole loop.  Defaults to the intrinsic
        boundary length.
    coords : (V, 2) float array, optional
        Planar reference coordinates (NaN rows for vertices without one).
    n_vertices : int, optional
    """

    def __init__(
        self,
        triangles,
        edges,
        lengths,
        boundary,
        boundary_arclen=None,
        boundary_period=None,
        coords=None,
        n_vertices=None,
    ):
        tri = np.asarray(triangles, dtype=np.intp).reshape(-1, 3)
        e = np.sort(np.asarray(edges, dtype=np.intp).reshape(-1, 2), axis=1)
        lengths = quantize_lengths(np.asarray(lengths, dtype=float).reshape(-1))
        if len(lengths) != len(e):
            raise PreconditionError("one length per edge is required")
        if coords is not None:
            coords = np.asarray(coords, dtype=float).reshape(-1, 2)
        if n_vertices is None:
            candidates = [0]
            if coords is not None:
                candidates.append(len(coords))
            if e.size:
                candidates.append(int(e.max()) + 1)
            if tri.size:
                candidates.append(int(tri.max()) + 1)
            n_vertices = max(candidates)
        self.n_vertices = int(n_vertices)
        if coords is not None and len(coords) != self.n_vertices:
            raise PreconditionError("coords must have one row per vertex")

        order = np.lexsort((e[:, 1], e[:, 0]))
        e, lengths = e[order], lengths[order]
        if len(e) and np.any(np.all(e[1:] == e[:-1], axis=1)):
            raise PreconditionError("duplicate edges")
        if np.any(e[:, 0] == e[:, 1]):
            raise PreconditionError("self-loop edge")
        if np.any(~np.isfinite(lengths)) or np.any(lengths <= 0):
            raise PreconditionError("every edge length must be > 0")

        self.triangles = tri
        self.edges = e
        self.lengths = lengths
        self.coords = coords
        self.boundary = np.asarray(boundary, dtype=np.intp).reshape(-1)

        self._edge_keys = e[:, 0] * self.n_vertices + e[:, 1]
        self.tri_edges = self._locate_triangle_edges()
        self._check_triangles()
        self._check_boundary()

        if boundary_arclen is None and len(self.boundary) == 0:
            boundary_arclen, boundary_period = np.zeros(0), 0.0
        elif boundary_arclen is None:
            steps = self._boundary_steps()
            boundary_arclen = np.concatenate([[0.0], np.cumsum(steps[:-1])])
            boundary_period = float(steps.sum())
        self.boundary_arclen = np.asarray(boundary_arclen, dtype=float).reshape(-1)
        if boundary_period is None:
            boundary_period = float(self._boundary_steps().sum())
        self.boundary_period = float(boundary_period)
        self._check_arclen()

    # -- construction checks ------------------------------------------------

    def edge_index(self, i, j):
        """Indices into :attr:`edges` of the pairs ``(i, j)``; -1 if absent."""
        i, j = np.asarray(i), np.asarray(j)
        a, b = np.minimum(i, j), np.maximum(i, j)
        keys = a * self.n_vertices + b
        pos = np.searchsorted(self._edge_keys, keys)
        pos = np.clip(pos, 0, max(len(self._edge_keys) - 1, 0))
        found = len(self._edge_keys) > 0
        ok = found & (self._edge_keys[pos] == keys) if found else np.zeros(keys.shape, bool)
        return np.where(ok, pos, -1)

    def _locate_triangle_edges(self):
        if not len(self.triangles):
            return np.zeros((0, 3), dtype=np.intp)
        t = self.triangles
        idx = np.stack(
            [self.edge_index(t[:, 1], t[:, 2]), self.edge_index(t[:, 2], t[:, 0]),
             self.edge_index(t[:, 0], t[:, 1])],
            axis=1,
        )
        if np.any(idx < 0):
            bad = int(np.argmax(np.any(idx < 0, axis=1)))
            raise PreconditionError(f"triangle {bad} {tuple(t[bad])} has a side missing from edges")
        return idx

    def _check_triangles(self):
        if not len(self.triangles):
            return
        t = self.triangles
        if np.any((t[:, 0] == t[:, 1]) | (t[:, 1] == t[:, 2]) | (t[:, 0] == t[:, 2])):
            raise PreconditionError("triangle with repeated vertex")
        bad = self.triangle_inequality_violations()
        if len(bad):
            k = int(bad[0])
            raise NumericalError(
                f"triangle {k} {tuple(self.triangles[k])} violates the strict triangle "
                f"inequality with sides {tuple(self.tri_lengths[k])}"
            )

    def _boundary_steps(self):
        b = self.boundary
        return self.lengths[self.edge_index(b, np.roll(b, -1))]

    def _check_boundary(self):
        b = self.boundary
        if len(b) == 0:
            if len(self.triangles):
                raise PreconditionError("a nonempty mesh needs a boundary loop")
            return
        if len(b) < 3 or len(np.unique(b)) != len(b):
            raise PreconditionError("boundary loop must be a simple cycle of >= 3 vertices")
        idx = self.edge_index(b, np.roll(b, -1))
        if np.any(idx < 0):
            raise PreconditionError("consecutive boundary vertices must share an edge")
        counts = np.bincount(self.tri_edges.ravel(), minlength=len(self.edges))
        if np.any(counts[idx] != 1):
            raise PreconditionError("every boundary edge must belong to exactly one triangle")
        tri_edge_ids = np.unique(self.tri_edges.ravel())
        open_edges = tri_edge_ids[counts[tri_edge_ids] == 1]
        if len(open_edges) != len(b):
            raise PreconditionError(
                f"mesh has {len(open_edges)} open edges but the boundary loop has {len(b)}"
            )

    def _check_arclen(self):
        s = self.boundary_arclen
        if len(s) != len(self.boundary):
            raise PreconditionError("one arc-length parameter per boundary vertex is required")
        if len(s) == 0:
            return
        if s[0] != 0.0 or np.any(np.diff(s) <= 0) or self.boundary_period <= s[-1]:
            raise PreconditionError("boundary parameters must start at 0 and increase strictly")

    # -- derived data --------------------------------------------------------

    @cached_property
    def mesh_id(self):
        """Short content hash identifying the mesh."""
        h = hashlib.sha1()
        for arr in (self.triangles, self.edges, self.lengths, self.boundary, self.boundary_arclen):
            h.update(np.ascontiguousarray(arr).tobytes())
        return h.hexdigest()[:12]

    @property
    def n_triangles(self):
        return len(self.triangles)

    @property
    def n_edges(self):
        return len(self.edges)

    @cached_property
    def tri_lengths(self):
        return self.lengths[self.tri_edges]

    @cached_property
    def is_triangle_edge(self):
        mask = np.zeros(len(self.edges), dtype=bool)
        mask[self.tri_edges.ravel()] = True
        return mask

    @cached_property
    def graph(self):
        """Symmetric sparse adjacency matrix weighted by edge lengths."""
        n = self.n_vertices
        i, j = self.edges[:, 0], self.edges[:, 1]
        g = coo_matrix(
            (np.concatenate([self.lengths, self.lengths]), (np.concatenate([i, j]), np.concatenate([j, i]))),
            shape=(n, n),
        ).tocsr()
        g.sort_indices()
        return g

    @cached_property
    def is_boundary_vertex(self):
        mask = np.zeros(self.n_vertices, dtype=bool)
        mask[self.boundary] = True
        return mask

    @property
    def has_coords(self):
        return self.coords is not None and bool(np.all(np.isfinite(self.coords)))

    def triangle_inequality_violations(self):
        a, b, c = self.tri_lengths.T
        ok = (a < b + c) & (b < c + a) & (c < a + b)
        return np.flatnonzero(~ok)

    def triangle_areas(self):
        if not len(self.triangles):
            return np.zeros(0)
        a, b, c = self.tri_lengths.T
        return heron_area(a, b, c)

    def total_area(self):
        return total_area(self)

    def boundary_length(self):
        return float(self._boundary_steps().sum()) if len(self.boundary) else 0.0

    def with_lengths(self, lengths):
        """Same combinatorics and boundary parameterization, new edge lengths."""
        return IntrinsicMesh(
            self.triangles, self.edges, lengths, self.boundary,
            boundary_arclen=self.boundary_arclen, boundary_period=self.boundary_period,
            coords=self.coords, n_vertices=self.n_vertices,
        )

    def rescaled(self, s):
        """All edge lengths multiplied by ``s``; the boundary parameter is kept."""
        return self.with_lengths(self.lengths * check_positive(s, "s"))

    def nearest_vertex(self, point, candidates=None):
        if self.coords is None:
            raise PreconditionError("mesh has no reference coordinates")
        ids = np.arange(self.n_vertices) if candidates is None else np.asarray(candidates)
        d = np.linalg.norm(self.coords[ids] - np.asarray(point, dtype=float), axis=1)
        d[np.isnan(d)] = np.inf
        return int(ids[np.argmin(d)])

    def __repr__(self):
        return (
            f"IntrinsicMesh(V={self.n_vertices}, T={self.n_triangles}, E={self.n_edges}, "
            f"boundary={len(self.boundary)})"
        )


def total_area(mesh):
    """Sum of Heron areas of all triangles (0 for an empty mesh)."""
    return float(mesh.triangle_areas().sum())


def vertex_fraction_area(mesh, inside):
    """Area of the vertex set ``inside`` under the straddling-fraction rule.

    Each triangle contributes its area times the fraction of its vertices
    flagged in ``inside``.
    """
    inside = np.asarray(inside, dtype=bool)
    if not mesh.n_triangles:
        return 0.0
    frac = inside[mesh.triangles].sum(axis=1) / 3.0
    return float(np.dot(frac, mesh.triangle_areas()))


def sublevel_fractions(values, level):
    """Area fraction of each triangle where the linear interpolant of ``values`` is below ``level``.

    ``values`` has shape ``(T, 3)``; infinite entries count as above every level.
    """
    f = np.sort(np.asarray(values, dtype=float), axis=1)
    f0, f1, f2 = f[:, 0], f[:, 1], f[:, 2]
    out = np.zeros(len(f))
    # a constant triangle has an empty strict sublevel set at its own value
    out[(level > f2) | ((level == f2) & (f2 > f0))] = 1.0
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        # products of ratios in [0, 1], safe against overflow and underflow
        lower = ((level - f0) / (f1 - f0)) * ((level - f0) / (f2 - f0))
        upper = 1.0 - ((f2 - level) / (f2 - f0)) * ((f2 - level) / (f2 - f1))
    a = (level > f0) & (level <= f1) & (level < f2)
    b = (level > f1) & (level < f2)
    out[a] = lower[a]
    out[b] = upper[b]
    return np.clip(out, 0.0, 1.0)


def sublevel_area(mesh, values, level):
    """Area of ``{values < level}`` for the piecewise-linear interpolant of per-vertex ``values``."""
    values = np.asarray(getattr(values, "values", values), dtype=float)
    if values.shape != (mesh.n_vertices,):
        raise PreconditionError("need one value per vertex")
    if not mesh.n_triangles:
        return 0.0
    return float(np.dot(sublevel_fractions(values[mesh.triangles], level), mesh.triangle_areas()))


def collar_complement_area(mesh, delta, boundary_distance):
    """Area of the part of ``mesh`` at distance >= ``delta`` from the boundary.

    ``boundary_distance`` is a per-vertex distance-to-boundary array or a
    :class:`~bdrigid.geodesics.DistanceField`; it is interpolated linearly
    over each triangle, so triangles straddling the ``delta`` level
    contribute the exact area beyond it.
    """
    delta = check_positive(delta, "delta", strict=False)
    values = np.asarray(getattr(boundary_distance, "values", boundary_distance), dtype=float)
    if values.shape != (mesh.n_vertices,):
        raise PreconditionError("need one value per vertex")
    if not mesh.n_triangles:
        return 0.0
    beyond = 1.0 - sublevel_fractions(values[mesh.triangles], delta)
    return float(np.dot(beyond, mesh.triangle_areas()))


# --------------------------------------------------------------------------
# construction


def stitch_rings(ring_a, angles_a, ring_b, angles_b):
    """Triangulate the band between two closed vertex rings ordered by angle.

    Both rings are given counterclockwise with angles in radians.  A ring of
    one vertex produces a fan.  Returns an ``(n_a + n_b, 3)`` array (fans
    return ``n`` triangles).
    """
    ring_a, ring_b = np.asarray(ring_a), np.asarray(ring_b)
    if len(ring_a) == 1 or len(ring_b) == 1:
        apex, ring = (ring_a[0], ring_b) if len(ring_a) == 1 else (ring_b[0], ring_a)
        return np.array([[apex, ring[k], ring[(k + 1) % len(ring)]] for k in range(len(ring))])
    na, nb = len(ring_a), len(ring_b)
    a0 = angles_a[0]
    ua = np.mod(np.asarray(angles_a) - a0, 2 * np.pi)
    ub = np.mod(np.asarray(angles_b) - a0, 2 * np.pi)
    start_b = int(np.argmin(np.minimum(ub, 2 * np.pi - ub)))
    ub = np.roll(ub, -start_b)
    ids_b = np.roll(ring_b, -start_b)
    if ub[0] > np.pi:
        ub[0] -= 2 * np.pi
    ub = np.concatenate([[ub[0]], ub[0] + np.mod(ub[1:] - ub[0], 2 * np.pi)])
    ua_ext = np.concatenate([ua, [2 * np.pi]])
    ub_ext = np.concatenate([ub, [ub[0] + 2 * np.pi]])
    tris = []
    i = j = 0
    while i < na or j < nb:
        if j >= nb or (i < na and ua_ext[i + 1] <= ub_ext[j + 1]):
            tris.append((ring_a[i], ring_a[(i + 1) % na], ids_b[j % nb]))
            i += 1
        else:
            tris.append((ring_a[i % na], ids_b[j], ids_b[(j + 1) % nb]))
            j += 1
    return np.array(tris)


def ring_layout(radii, counts, offsets, center=None):
    """Vertices, rings and band triangles of a concentric-ring planar mesh.

    ``center`` adds a single vertex at the origin stitched to the first ring.
    Returns ``coords, rings, angles, triangles``.
    """
    coords, rings, angles, tris = [], [], [], []
    nxt = 0
    if center is not None:
        coords.append(np.asarray(center, dtype=float).reshape(1, 2))
        rings.append(np.array([0]))
        angles.append(np.array([0.0]))
        nxt = 1
    for rho, n, off in zip(radii, counts, offsets):
        a = off + 2.0 * np.pi * np.arange(n) / n
        coords.append(rho * np.column_stack([np.cos(a), np.sin(a)]))
        rings.append(np.arange(nxt, nxt + n))
        angles.append(a)
        nxt += n
    for k in range(len(rings) - 1):
        tris.append(stitch_rings(rings[k], angles[k], rings[k + 1], angles[k + 1]))
    return np.vstack(coords), rings, angles, np.vstack(tris)


def triangle_edge_pairs(triangles):
    t = np.asarray(triangles)
    e = np.vstack([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]])
    return np.unique(np.sort(e, axis=1), axis=0)


def planar_augmentation(coords, radius, hole_radius=None, ids=None):
    """Vertex pairs within ``radius`` whose straight segment avoids the hole.

    The hole is the open disk of ``hole_radius`` centred at the origin.
    ``ids`` restricts the search to a subset of rows of ``coords``.
    """
    ids = np.arange(len(coords)) if ids is None else np.asarray(ids)
    pts = coords[ids]
    pairs = cKDTree(pts).query_pairs(radius, output_type="ndarray")
    if hole_radius is not None and len(pairs):
        a, b = pts[pairs[:, 0]], pts[pairs[:, 1]]
        d = b - a
        t = np.clip(-np.sum(a * d, axis=1) / np.maximum(np.sum(d * d, axis=1), 1e-300), 0.0, 1.0)
        closest = np.linalg.norm(a + t[:, None] * d, axis=1)
        pairs = pairs[closest >= hole_radius * (1 - 1e-9)]
    return ids[pairs] if len(pairs) else np.zeros((0, 2), dtype=np.intp)


def merge_edges(*edge_sets):
    e = np.vstack([np.sort(np.asarray(s, dtype=np.intp).reshape(-1, 2), axis=1) for s in edge_sets])
    return np.unique(e, axis=0)


def boundary_vertex_count(radius, h):
    return max(12, int(round(2.0 * np.pi * radius / h)))


def build_disk_mesh(radius=1.0, h=0.02, augment=DEFAULT_AUGMENT):
    """Euclidean disk mesh from concentric rings, plus augmentation edges.

    Rings are spaced ``radius / ceil(radius / h)`` apart; each ring carries a
    vertex count proportional to its radius.  Every pair of vertices closer
    than ``augment * h`` is joined by a straight augmentation edge, which
    keeps graph distances within a fraction of a percent of Euclidean ones.
    The boundary loop starts at angle 0 and runs counterclockwise.
    """
    radius = check_positive(radius, "radius")
    h = check_positive(h, "h")
    if not h < radius / 4:
        raise PreconditionError(
            f"resolution too coarse: need 0 < h < radius/4 = {radius / 4:g}, got h={h:g}"
        )
    n_rings = int(math.ceil(radius / h))
    dr = radius / n_rings
    radii = dr * np.arange(1, n_rings + 1)
    counts = [max(6, int(round(2 * np.pi * r / dr))) for r in radii[:-1]]
    counts.append(boundary_vertex_count(radius, h))
    offsets = [(0.5 * (k % 2)) * 2 * np.pi / n for k, n in enumerate(counts[:-1], start=1)] + [0.0]
    coords, rings, _, tris = ring_layout(radii, counts, offsets, center=(0.0, 0.0))
    edges = triangle_edge_pairs(tris)
    if augment and augment > 0:
        edges = merge_edges(edges, planar_augmentation(coords, augment * h))
    lengths = np.linalg.norm(coords[edges[:, 0]] - coords[edges[:, 1]], axis=1)
    return IntrinsicMesh(tris, edges, lengths, rings[-1], coords=coords)


def conformal_edge_lengths(coords, edges, metric):
    """Gauss-3 approximation of metric lengths of straight reference segments."""
    a = coords[edges[:, 0]]
    d = coords[edges[:, 1]] - a
    pts = a[:, None, :] + _GAUSS3_NODES[None, :, None] * d[:, None, :]
    if metric.is_conformal:
        integrand = np.exp(metric.conformal_exponent(pts)) * np.linalg.norm(d, axis=1)[:, None]
    else:
        integrand = metric.speed(pts, np.broadcast_to(d[:, None, :], pts.shape))
    return integrand @ _GAUSS3_WEIGHTS


def apply_conformal_factor(mesh, metric):
    """Recompute every edge length as the metric length of its reference segment.

    The boundary parameterization is kept, so the returned mesh stays
    identified with the reference boundary.
    """
    if not mesh.has_coords:
        raise PreconditionError("apply_conformal_factor needs reference coordinates on every vertex")
    if not np.all(metric.domain.contains(mesh.coords, tol=1e-9)):
        raise PreconditionError("mesh reference coordinates leave the metric field's domain")
    lengths = conformal_edge_lengths(mesh.coords, mesh.edges, metric)
    return mesh.with_lengths(lengths)


# --------------------------------------------------------------------------
# text I/O


def write_mesh(mesh, path):
    """Write the ``irmesh 1`` text format (17 significant digits)."""
    lines = ["irmesh 1"]
    for i in range(mesh.n_vertices):
        if mesh.coords is not None and np.all(np.isfinite(mesh.coords[i])):
            x, y = mesh.coords[i]
            lines.append(f"v {i} {x:.17g} {y:.17g}")
        else:
            lines.append(f"v {i}")
    lines.extend(f"t {i} {j} {k}" for i, j, k in mesh.triangles)
    lines.extend(f"e {i} {j} {w:.17g}" for (i, j), w in zip(mesh.edges, mesh.lengths))
    lines.extend(f"b {v} {s:.17g}" for v, s in zip(mesh.boundary, mesh.boundary_arclen))
    if len(mesh.boundary):
        # closing line: first vertex again, carrying the loop period
        lines.append(f"b {mesh.boundary[0]} {mesh.boundary_period:.17g}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="ascii")
    return path


def read_mesh(path):
    text = Path(path).read_text(encoding="ascii").split("\n")
    if not text or text[0].strip() != "irmesh 1":
        raise PreconditionError(f"{path}: missing 'irmesh 1' header")
    vids, xy, tris, edges, lengths, bverts, barc = [], [], [], [], [], [], []
    for lineno, line in enumerate(text[1:], start=2):
        parts = line.split()
        if not parts:
            continue
        tag = parts[0]
        try:
            if tag == "v":
                vids.append(int(parts[1]))
                xy.append((float(parts[2]), float(parts[3])) if len(parts) >= 4 else (np.nan, np.nan))
            elif tag == "t":
                tris.append(tuple(int(p) for p in parts[1:4]))
            elif tag == "e":
                edges.append((int(parts[1]), int(parts[2])))
                lengths.append(float(parts[3]))
            elif tag == "b":
                bverts.append(int(parts[1]))
                barc.append(float(parts[2]))
            else:
                raise ValueError(f"unknown record {tag!r}")
        except (IndexError, ValueError) as exc:
            raise PreconditionError(f"{path}:{lineno}: {exc}") from None
    n = len(vids)
    if sorted(vids) != list(range(n)):
        raise PreconditionError(f"{path}: vertex ids must be 0..{n - 1}")
    coords = np.full((n, 2), np.nan)
    coords[np.asarray(vids, dtype=np.intp)] = np.asarray(xy, dtype=float).reshape(-1, 2)
    if np.all(np.isnan(coords)):
        coords = None
    period = None
    if len(bverts) > 1 and bverts[-1] == bverts[0]:
        period = barc[-1]
        bverts, barc = bverts[:-1], barc[:-1]
    return IntrinsicMesh(
        np.asarray(tris, dtype=np.intp).reshape(-1, 3),
        np.asarray(edges, dtype=np.intp).reshape(-1, 2),
        np.asarray(lengths, dtype=float),
        np.asarray(bverts, dtype=np.intp),
        boundary_arclen=np.asarray(barc, dtype=float) if bverts else None,
        boundary_period=period,
        coords=coords,
        n_vertices=n,
    )
