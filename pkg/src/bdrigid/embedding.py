"""Distance-like coordinates built from boundary distance fields.

For a unit vector ``v`` let ``L_v(p) = <p, v>``.  The directional field

    phi_v(x) = min_j  d(x, y_j) + L_v(F(y_j))

runs over the boundary samples ``y_j`` with reference positions ``F(y_j)``.
The map ``phi = (phi_e1, phi_e2)`` sends the mesh into the plane.  For
extra directions ``v`` the defect ``|phi_v - L_v o phi|`` measures how far
``phi`` is from satisfying the identities of the planar model.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from ._validation import PreconditionError, check_count, check_unit_vector
from .boundary import arclength_correspondence
from .gh import hausdorff_distance
from .mesh import Disk

N_EXTRA_DIRECTIONS = 16


@dataclass(frozen=True)
class DirectionalField:
    """Values of ``phi_v`` per vertex and the sample index achieving each minimum."""

    v: np.ndarray
    values: np.ndarray
    foot: np.ndarray


@dataclass(frozen=True)
class EmbeddingMap:
    """The planar map ``phi`` together with its two coordinate fields."""

    coords: np.ndarray
    components: tuple = field(repr=False)

    def to_csv(self, path):
        f1, f2 = self.components
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["vertex", "phi1", "phi2", "foot1", "foot2"])
            for k in range(len(self.coords)):
                w.writerow([k, f"{self.coords[k, 0]:.17g}", f"{self.coords[k, 1]:.17g}", f1.foot[k], f2.foot[k]])


class LiftDiagnostics(NamedTuple):
    directions: np.ndarray
    defects: np.ndarray
    lift_distance: float
    defect_bound: float


class FootIdentity(NamedTuple):
    defect: float
    boundary_defect: float


def unit_directions(k, offset=0.0):
    """``k`` unit vectors equally spaced on the circle, starting at angle ``offset``."""
    k = check_count(k, "k")
    a = offset + 2.0 * np.pi * np.arange(k) / k
    return np.column_stack([np.cos(a), np.sin(a)])


def _boundary_inputs(bd, correspondence):
    if bd.fields is None:
        raise PreconditionError("boundary data must keep its distance fields")
    if correspondence is None:
        correspondence = arclength_correspondence(bd.params, bd.period, Disk())
    pts = np.asarray(getattr(correspondence, "points", correspondence), dtype=float)
    if pts.shape != (bd.m, 2):
        raise PreconditionError(f"correspondence must give one point per sample, got shape {pts.shape}")
    return bd.fields, pts


def phi_direction(fields, points, v):
    """Directional field ``phi_v`` from ``(m, V)`` sample fields and ``(m, 2)`` sample positions.

    Ties in the minimum go to the lowest sample index.
    """
    v = check_unit_vector(v)
    fields = np.asarray(fields, dtype=float)
    points = np.asarray(points, dtype=float)
    if fields.ndim != 2 or points.shape != (fields.shape[0], 2):
        raise PreconditionError("need one distance field per sample position")
    shifted = fields + (points @ v)[:, None]
    foot = np.argmin(shifted, axis=0)
    values = shifted[foot, np.arange(shifted.shape[1])]
    return DirectionalField(v=v, values=values, foot=foot)


def build_embedding(bd, correspondence=None):
    """Assemble ``phi = (phi_e1, phi_e2)`` from boundary distance data.

    ``correspondence`` defaults to the arc-length identification of the
    samples with the unit circle.
    """
    fields, pts = _boundary_inputs(bd, correspondence)
    comps = tuple(phi_direction(fields, pts, e) for e in np.eye(2))
    return EmbeddingMap(coords=np.column_stack([c.values for c in comps]), components=comps)


def verify_foot_identity(field, bd, correspondence=None):
    """Check ``phi_v(x) = phi_v(y) + d(x, y)`` at the foot ``y`` of every vertex ``x``.

    Returns the max violation and the max boundary-value defect
    ``L_v(F(y)) - phi_v(y)`` over the foot samples; the first is bounded by
    the second.
    """
    fields, pts = _boundary_inputs(bd, correspondence)
    foot_vertex = bd.vertices[field.foot]
    idx = np.arange(len(field.values))
    d = fields[field.foot, idx]
    defect = np.abs(field.values - field.values[foot_vertex] - d).max()
    used = np.unique(field.foot)
    bdef = np.abs(pts[used] @ field.v - field.values[bd.vertices[used]]).max()
    return FootIdentity(defect=float(defect), boundary_defect=float(bdef))


def lift_diagnostics(bd, embedding, directions=None, correspondence=None):
    """Directional defects and distance of the lift to the diagonal subspace.

    For each direction ``v`` (default: 16 equally spaced ones) the defect is
    ``max_x |phi_v(x) - <phi(x), v>|``.  The lift of ``x`` is
    ``Phi(x) = (phi_v(x))_v / sqrt(2)`` over ``e1``, ``e2`` and the extra
    directions, and ``I(p) = (<p, v>)_v / sqrt(2)``.  ``lift_distance`` is
    ``max_x dist(Phi(x), I(R^2))`` by exact least squares.  It satisfies
    ``max defect <= 2 sqrt(2) lift_distance`` and
    ``lift_distance <= defect_bound = sqrt(k / 2) max defect``.
    """
    fields, pts = _boundary_inputs(bd, correspondence)
    extra = unit_directions(N_EXTRA_DIRECTIONS) if directions is None else np.asarray(directions, float)
    phi = embedding.coords
    vals = np.column_stack([phi_direction(fields, pts, v).values for v in extra])
    defects = np.abs(vals - phi @ extra.T).max(axis=0)

    dirs = np.vstack([np.eye(2), extra])
    lifted = np.column_stack([phi, vals])
    q, _ = np.linalg.qr(dirs)
    resid = lifted - (lifted @ q) @ q.T
    lift = float(np.linalg.norm(resid, axis=1).max() / np.sqrt(2.0))
    bound = float(np.sqrt(len(dirs) / 2.0) * defects.max()) if len(defects) else 0.0
    return LiftDiagnostics(directions=extra, defects=defects, lift_distance=lift, defect_bound=bound)


def lipschitz_defect(values, mesh, k=1.0):
    """Max over edges of ``|values[i] - values[j]| - k * length(ij)``.

    ``values`` is per-vertex, scalar or vector valued (Euclidean norm).
    """
    vals = np.asarray(getattr(values, "values", getattr(values, "coords", values)), dtype=float)
    if vals.shape[0] != mesh.n_vertices:
        raise PreconditionError("need one value per vertex")
    diff = vals[mesh.edges[:, 0]] - vals[mesh.edges[:, 1]]
    change = np.abs(diff) if diff.ndim == 1 else np.linalg.norm(diff, axis=1)
    return float((change - k * mesh.lengths).max())


def image_hausdorff(embedding, mesh, domain, spacing):
    """Hausdorff distances of ``phi(vertices)`` to a grid of ``domain`` and of ``phi(boundary)`` to its boundary."""
    interior = hausdorff_distance(embedding.coords, domain.grid(spacing))
    rim = hausdorff_distance(embedding.coords[mesh.boundary], domain.boundary_grid(spacing))
    return interior, rim


def _signed_image_areas(coords, triangles):
    a, b, c = (coords[triangles[:, k]] for k in range(3))
    u, w = b - a, c - a
    return 0.5 * (u[:, 0] * w[:, 1] - u[:, 1] * w[:, 0])


def jacobian_ratios(embedding, mesh):
    """Per-triangle ratio of image area to intrinsic area (the affine Jacobian)."""
    return np.abs(_signed_image_areas(embedding.coords, mesh.triangles)) / mesh.triangle_areas()


def jacobian_defect(embedding, mesh):
    """Largest excess of the affine Jacobian over 1, or 0 if no triangle expands."""
    return float(max(0.0, jacobian_ratios(embedding, mesh).max() - 1.0))


def image_area(embedding, mesh, inside=None):
    """Summed image-triangle area, weighting each triangle by the fraction of its vertices in ``inside``."""
    areas = np.abs(_signed_image_areas(embedding.coords, mesh.triangles))
    if inside is None:
        return float(areas.sum())
    frac = np.asarray(inside, dtype=bool)[mesh.triangles].sum(axis=1) / 3.0
    return float(areas @ frac)


def boundary_distortion(embedding, bd, eta):
    """Max over sample pairs at separation ``>= eta`` of ``||phi(x) - phi(y)| - d(x, y)|``."""
    p = embedding.coords[bd.vertices]
    img = np.linalg.norm(p[:, None, :] - p[None, :, :], axis=-1)
    mask = bd.separation() >= eta
    if not np.any(mask):
        return 0.0
    return float(np.abs(img - bd.matrix)[mask].max())
