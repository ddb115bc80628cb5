"""Santalo volume recovery from exit lengths, ball areas and isoembolic audits."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from ._validation import check_count, check_positive
from .geodesics import boundary_proximity, distance_rows, trace_geodesics
from .mesh import sublevel_area

SPHERE_MEASURE_2D = 2.0 * math.pi
MAX_AUDIT_CENTERS = 512


@dataclass(frozen=True)
class SantaloEstimate:
    """Volume recovered from boundary-to-boundary geodesic lengths.

    When some rays are trapped the sum omits them and ``volume`` is only a
    lower bound (``lower_bound`` is set).
    """

    volume: float
    m_boundary: int
    m_angle: int
    trapped_fraction: float
    lower_bound: bool
    arclen: np.ndarray = field(repr=False, default=None)
    theta: np.ndarray = field(repr=False, default=None)
    lengths: np.ndarray = field(repr=False, default=None)
    trapped: np.ndarray = field(repr=False, default=None)

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["arclen", "theta", "length", "trapped"])
            for s, t, ell, tr in zip(self.arclen, self.theta, self.lengths, self.trapped):
                w.writerow([f"{s:.17g}", f"{t:.17g}", f"{ell:.17g}", int(tr)])


def santalo_volume(metric, m_boundary=256, m_angle=128, step=0.01, reverse=False):
    """Area of a conformal metric on a convex domain from its exit lengths.

    Computes ``(1 / 2 pi) sum_p ds_p sum_theta dtheta l(p, theta) cos(theta)``
    where ``p`` runs over ``m_boundary`` equispaced boundary points (periodic
    trapezoid rule, ``ds_p`` in metric arc length) and ``theta`` over the
    ``m_angle`` midpoints of a uniform partition of ``(-pi/2, pi/2)``.  The
    angle is measured from the inward normal, and ``l`` is the metric length
    of the geodesic until it leaves the domain.  ``reverse`` walks the
    boundary clockwise.
    """
    m_boundary = check_count(m_boundary, "m_boundary", minimum=1)
    m_angle = check_count(m_angle, "m_angle", minimum=0)
    domain = metric.domain
    pts, normals, ds = domain.boundary_samples(m_boundary)
    arclen = np.concatenate([[0.0], np.cumsum(ds[:-1])])
    if reverse:
        pts, normals, ds, arclen = pts[::-1], normals[::-1], ds[::-1], arclen[::-1]
    if m_angle == 0:
        empty = np.zeros(0)
        return SantaloEstimate(0.0, m_boundary, 0, 0.0, False, empty, empty, empty, np.zeros(0, bool))
    dtheta = math.pi / m_angle
    theta = -0.5 * math.pi + dtheta * (np.arange(m_angle) + 0.5)
    tangents = np.column_stack([-normals[:, 1], normals[:, 0]])
    if reverse:
        tangents = -tangents
    c, s = np.cos(theta), np.sin(theta)
    dirs = c[None, :, None] * normals[:, None, :] + s[None, :, None] * tangents[:, None, :]
    starts = np.repeat(pts, m_angle, axis=0)
    lengths, _, trapped = trace_geodesics(metric, starts, dirs.reshape(-1, 2), step=step)
    weights = ds * np.exp(metric.conformal_exponent(pts))
    inner = np.where(trapped, 0.0, lengths).reshape(m_boundary, m_angle) @ (c * dtheta)
    volume = float(weights @ inner) / SPHERE_MEASURE_2D
    frac = float(trapped.mean())
    return SantaloEstimate(
        volume=volume,
        m_boundary=m_boundary,
        m_angle=m_angle,
        trapped_fraction=frac,
        lower_bound=frac > 0,
        arclen=np.repeat(arclen, m_angle),
        theta=np.tile(theta, m_boundary),
        lengths=lengths,
        trapped=trapped,
    )


def _longest_triangle_edge(mesh):
    return float(mesh.tri_lengths.max()) if mesh.n_triangles else 0.0


def ball_area(mesh, center, r, distances=None):
    """Area of ``{x : d(center, x) < r}``.

    The distance is interpolated linearly over each triangle, so triangles
    straddling the sphere contribute the exact area of their part inside.
    ``distances`` may carry a precomputed field from ``center``.
    """
    r = check_positive(r, "r")
    if distances is None:
        distances = distance_rows(mesh, [center], limit=r + _longest_triangle_edge(mesh))[0]
    return sublevel_area(mesh, distances, r)


class Violation(NamedTuple):
    vertex: int
    r: float
    area: float
    required: float


@dataclass(frozen=True)
class IsoembolicReport:
    """Balls away from the boundary whose area falls below ``lam * r**2``."""

    lam: float
    delta: float
    violations: list
    n_centers: int
    n_balls: int

    @property
    def passed(self):
        return not self.violations


def audit_centers(mesh, max_centers=MAX_AUDIT_CENTERS):
    """Deterministic strided subset of interior vertices used as ball centers."""
    interior = np.flatnonzero(~mesh.is_boundary_vertex)
    stride = max(1, math.ceil(len(interior) / max_centers))
    return interior[::stride]


def isoembolic_audit(mesh, lam=1.0, delta=0.1, centers=None, proximity=None):
    """Check ``area(B_r(x)) >= lam r^2`` on balls missing the boundary.

    Radii run over ``delta * 2**k`` for ``k = 0, 1, ...`` while below the
    center's distance to the boundary.  Centers default to
    :func:`audit_centers`.
    """
    lam = check_positive(lam, "lam")
    delta = check_positive(delta, "delta")
    if centers is None:
        centers = audit_centers(mesh)
    if proximity is None:
        proximity = boundary_proximity(mesh).values
    pad = _longest_triangle_edge(mesh)
    violations, n_balls = [], 0
    for x in np.asarray(centers):
        reach = float(proximity[x])
        if reach <= delta:
            continue
        radii = delta * 2.0 ** np.arange(int(math.floor(math.log2(reach / delta))) + 1)
        radii = radii[radii < reach]
        row = distance_rows(mesh, [int(x)], limit=float(radii[-1]) + pad)[0]
        for r in radii:
            n_balls += 1
            area = ball_area(mesh, int(x), float(r), distances=row)
            if area < lam * r * r:
                violations.append(Violation(int(x), float(r), float(area), float(lam * r * r)))
    return IsoembolicReport(lam=lam, delta=delta, violations=violations, n_centers=len(centers), n_balls=n_balls)
