"""Boundary distance data, its C0/C1 deviations, and boundary-derivative checks."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from ._validation import PreconditionError, check_count, check_positive
from .geodesics import DistanceField, distance_rows, initial_direction

DEFAULT_ETA = 0.1


@dataclass(frozen=True)
class BoundaryDistanceData:
    """Sampled boundary distance function.

    ``params`` are boundary parameters (arc length of the reference
    identification) of the ``m`` sampled boundary vertices, ``matrix`` the
    symmetric ``m x m`` table of intrinsic distances between them.  ``fields``
    optionally keeps the full distance field of every sample (shape
    ``(m, V)``) for reuse by the embedding.
    """

    params: np.ndarray
    matrix: np.ndarray
    period: float
    mesh_id: str = ""
    vertices: np.ndarray | None = None
    fields: np.ndarray | None = field(default=None, repr=False, compare=False)

    @property
    def m(self):
        return len(self.params)

    @property
    def spacing(self):
        """Nominal arc-length spacing ``period / m`` of the samples."""
        return self.period / self.m

    @property
    def max_gap(self):
        """Largest cyclic gap between consecutive sample parameters."""
        gaps = np.diff(np.concatenate([self.params, [self.params[0] + self.period]]))
        return float(gaps.max())

    def separation(self):
        """Cyclic parameter distance between every pair of samples."""
        d = np.abs(self.params[:, None] - self.params[None, :])
        return np.minimum(d, self.period - d)

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow([f"{s:.17g}" for s in self.params])
            for row in self.matrix:
                w.writerow([f"{v:.17g}" for v in row])

    @classmethod
    def from_csv(cls, path, period):
        rows = np.loadtxt(path, delimiter=",", ndmin=2)
        return cls(params=rows[0], matrix=rows[1:], period=float(period))


@dataclass(frozen=True)
class BoundaryCorrespondence:
    """Map from boundary samples of a mesh to points of the reference boundary."""

    points: np.ndarray
    monotone: bool


def boundary_sample_indices(mesh, m):
    """Positions in ``mesh.boundary`` nearest to ``m`` equispaced parameters.

    Targets ``k * period / m`` are nested when ``m`` doubles, so coarser
    sample sets are subsets of finer ones.
    """
    m = check_count(m, "m", minimum=2)
    nb = len(mesh.boundary)
    if m > nb:
        raise PreconditionError(f"m={m} exceeds the {nb} boundary vertices")
    s = mesh.boundary_arclen
    period = mesh.boundary_period
    targets = np.arange(m) * (period / m)
    d = np.abs(targets[:, None] - s[None, :])
    d = np.minimum(d, period - d)
    pos = np.argmin(d, axis=1)
    if len(np.unique(pos)) != m:
        raise PreconditionError(f"m={m} samples collide on the boundary; use fewer samples")
    return pos


def boundary_distance_matrix(mesh, m, n_jobs=1, keep_fields=True):
    """Distances between ``m`` boundary samples, averaged with the transpose."""
    pos = boundary_sample_indices(mesh, m)
    verts = mesh.boundary[pos]
    rows = distance_rows(mesh, verts, n_jobs=n_jobs)
    mat = rows[:, verts]
    mat = 0.5 * (mat + mat.T)
    np.fill_diagonal(mat, 0.0)
    return BoundaryDistanceData(
        params=mesh.boundary_arclen[pos].copy(),
        matrix=mat,
        period=mesh.boundary_period,
        mesh_id=mesh.mesh_id,
        vertices=verts,
        fields=rows if keep_fields else None,
    )


def arclength_correspondence(params, period, domain):
    """Identify boundary parameters with ``domain``'s boundary proportionally to arc length."""
    s = np.asarray(params, dtype=float) * (domain.perimeter / period)
    pts = domain.boundary_point(s)
    return BoundaryCorrespondence(points=pts, monotone=bool(np.all(np.diff(params) > 0)))


def reference_boundary_data(params, period, domain, mesh_id="reference"):
    """Exact Euclidean boundary distances of ``domain`` under the arc-length identification."""
    pts = arclength_correspondence(params, period, domain).points
    mat = np.linalg.norm(pts[:, None, :] - pts[None, :, :], axis=-1)
    return BoundaryDistanceData(
        params=np.asarray(params, dtype=float), matrix=mat, period=float(period), mesh_id=mesh_id
    )


def _check_same_sampling(a, b):
    if a.m != b.m or not np.allclose(a.params, b.params, rtol=0, atol=1e-9) or not np.isclose(
        a.period, b.period, rtol=1e-12
    ):
        raise PreconditionError("boundary data sampled at different parameters cannot be compared")


def c0_deviation(a, b):
    """Largest entrywise difference of two boundary distance tables."""
    _check_same_sampling(a, b)
    return float(np.abs(a.matrix - b.matrix).max())


def tangential_derivatives(data, matrix=None):
    """Central differences of ``matrix`` along each argument, cyclic in the samples."""
    mat = data.matrix if matrix is None else matrix
    s = data.params
    ds = np.roll(s, -1) - np.roll(s, 1)
    ds[0] += data.period
    ds[-1] += data.period
    d1 = (np.roll(mat, -1, axis=0) - np.roll(mat, 1, axis=0)) / ds[:, None]
    d2 = (np.roll(mat, -1, axis=1) - np.roll(mat, 1, axis=1)) / ds[None, :]
    return d1, d2


def c1_deviation(a, b, eta=DEFAULT_ETA):
    """C1 distance of two tables away from the diagonal.

    Max over sample pairs with boundary separation at least ``eta`` of the
    absolute difference and of its central-difference derivatives in each
    argument.
    """
    _check_same_sampling(a, b)
    eta = check_positive(eta, "eta")
    if not eta > 2.0 * a.spacing:
        raise PreconditionError(
            f"diagonal cutoff eta={eta:g} must exceed twice the sample spacing ({2 * a.spacing:g})"
        )
    diff = a.matrix - b.matrix
    d1, d2 = tangential_derivatives(a, diff)
    mask = a.separation() >= eta
    if not np.any(mask):
        return 0.0
    return float(max(np.abs(diff[mask]).max(), np.abs(d1[mask]).max(), np.abs(d2[mask]).max()))


class GradientCheck(NamedTuple):
    defect: float
    derivative: float
    projection: float
    unique: bool


def _boundary_speed(mesh, pos):
    """Metric length per unit boundary parameter around boundary position ``pos``."""
    b, s = mesh.boundary, mesh.boundary_arclen
    nb = len(b)
    prev, nxt = (pos - 1) % nb, (pos + 1) % nb
    ids = mesh.edge_index(np.array([b[prev], b[pos]]), np.array([b[pos], b[nxt]]))
    span = s[nxt] - s[prev]
    if span <= 0:
        span += mesh.boundary_period
    return float(mesh.lengths[ids].sum() / span)


def boundary_gradient_check(mesh, bd, i, j, eta=DEFAULT_ETA, probe=1.0):
    """Compare the boundary derivative of ``bd(., y)`` with the direction to ``y``.

    ``i`` and ``j`` index samples of ``bd`` (``x`` and ``y``).  The derivative
    is a central difference over the neighbouring samples of ``x``, converted
    to metric arc length; the direction ``xy`` comes from
    :func:`~bdrigid.geodesics.initial_direction`.  The defect is
    ``|d/ds bd(x(s), y) + <t, xy>|`` with ``t`` the unit boundary tangent.
    A non-unique ``xy`` skips the check (NaN defect).
    """
    if i == j:
        raise PreconditionError("x and y must be distinct samples")
    if bd.separation()[i, j] < eta:
        raise PreconditionError(f"samples {i}, {j} are closer than eta={eta:g}")
    if bd.vertices is None:
        raise PreconditionError("boundary data must record its sample vertices")
    x, y = int(bd.vertices[i]), int(bd.vertices[j])
    m = bd.m
    ip, im = (i + 1) % m, (i - 1) % m
    ds = bd.params[ip] - bd.params[im]
    if ds <= 0:
        ds += bd.period
    pos = int(np.flatnonzero(mesh.boundary == x)[0])
    deriv = (bd.matrix[ip, j] - bd.matrix[im, j]) / ds / _boundary_speed(mesh, pos)

    nb = len(mesh.boundary)
    tangent = mesh.coords[mesh.boundary[(pos + 1) % nb]] - mesh.coords[mesh.boundary[(pos - 1) % nb]]
    tangent /= np.linalg.norm(tangent)
    fields = None
    if bd.fields is not None:
        fields = (
            DistanceField(source=np.array([x]), values=bd.fields[i], predecessors=None),
            DistanceField(source=np.array([y]), values=bd.fields[j], predecessors=None),
        )
    direction = initial_direction(mesh, x, y, probe=probe, fields=fields)
    proj = float(tangent @ direction.vector)
    if not direction.unique:
        return GradientCheck(defect=float("nan"), derivative=float(deriv), projection=proj, unique=False)
    return GradientCheck(defect=abs(deriv + proj), derivative=float(deriv), projection=proj, unique=True)


def recover_boundary_metric(bd):
    """Speed of the boundary parameterization recovered from ``bd`` alone.

    For every sample ``p`` the one-sided quotients
    ``bd(p, p +- k ds) / (k ds)`` for ``k in (1, 2, 4)`` are averaged over
    both sides and extrapolated to ``k -> 0`` by two Richardson steps in
    ``k^2``.
    """
    m = check_count(bd.m, "m", minimum=16)
    s, mat, period = bd.params, bd.matrix, bd.period
    idx = np.arange(m)
    quotients = []
    for k in (1, 2, 4):
        fwd = (idx + k) % m
        bwd = (idx - k) % m
        dfwd = np.mod(s[fwd] - s, period)
        dbwd = np.mod(s - s[bwd], period)
        quotients.append(0.5 * (mat[idx, fwd] / dfwd + mat[idx, bwd] / dbwd))
    q1, q2, q4 = quotients
    r12 = (4.0 * q1 - q2) / 3.0
    r24 = (4.0 * q2 - q4) / 3.0
    return (16.0 * r12 - r24) / 15.0
