"""Test geometries on the unit disk and audits of the stability hypotheses.

``euclidean`` and ``conformal_bump`` are metrics on the disk itself.  The
two grafts replace the disk of radius ``r`` around the origin by a long
capped tube (``cylinder_graft``) or by a big sphere with a small cap removed
(``sphere_graft``).  Grafts are built from edge lengths only; the reference
coordinates of graft vertices are NaN.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.spatial import cKDTree

from ._validation import PreconditionError, check_count, check_positive
from .boundary import boundary_distance_matrix, c0_deviation
from .geodesics import boundary_proximity
from .integral import IsoembolicReport, isoembolic_audit
from .mesh import (
    DEFAULT_AUGMENT,
    Disk,
    IntrinsicMesh,
    apply_conformal_factor,
    boundary_vertex_count,
    build_disk_mesh,
    collar_complement_area,
    euclidean_field,
    gaussian_bump_field,
    planar_augmentation,
    ring_layout,
    stitch_rings,
    triangle_edge_pairs,
)

KINDS = ("euclidean", "conformal_bump", "cylinder_graft", "sphere_graft")
DEFAULT_PARAMS = {
    "euclidean": {},
    "conformal_bump": {"t": 0.05, "width": 0.3},
    "cylinder_graft": {"r": 0.05, "L": 3.0},
    "sphere_graft": {"r": 0.05, "R": 3.0},
}
SPHERE_MAX_SPACING = 0.15
SPHERE_GRADING = 0.25


@dataclass(frozen=True)
class Scenario:
    """A compiled test geometry with its reference region ``D`` (the unit disk)."""

    kind: str
    params: dict
    h: float
    mesh: IntrinsicMesh = field(repr=False)
    domain: Disk = field(repr=False)
    metric: object = field(default=None, repr=False)
    graft_vertices: np.ndarray = field(default=None, repr=False)
    augment: float = DEFAULT_AUGMENT

    @property
    def is_graft(self):
        return self.kind.endswith("_graft")

    def spec(self):
        return {"kind": self.kind, "params": dict(self.params), "h": self.h}

    def to_json(self):
        return json.dumps(self.spec(), sort_keys=True)


def scenario_from_json(text, augment=DEFAULT_AUGMENT):
    """Build a scenario from ``{"kind": ..., "params": {...}, "h": ...}``."""
    spec = json.loads(text) if isinstance(text, str) else dict(text)
    unknown = set(spec) - {"kind", "params", "h"}
    if unknown:
        raise PreconditionError(f"unknown scenario keys: {sorted(unknown)}")
    return make_scenario(spec.get("kind"), spec.get("params"), spec.get("h", 0.02), augment=augment)


def _check_params(kind, params):
    if kind not in KINDS:
        raise PreconditionError(f"unknown scenario kind {kind!r}; expected one of {KINDS}")
    merged = dict(DEFAULT_PARAMS[kind])
    merged.update(params or {})
    unknown = set(merged) - set(DEFAULT_PARAMS[kind])
    if unknown:
        raise PreconditionError(f"unknown parameters for {kind}: {sorted(unknown)}")
    for k, v in merged.items():
        merged[k] = check_positive(float(v), k, strict=False) if k != "t" else float(v)
    if kind == "conformal_bump":
        if abs(merged["t"]) > 0.2:
            raise PreconditionError(f"bump amplitude must satisfy |t| <= 0.2, got {merged['t']}")
        check_positive(merged["width"], "width")
    if kind.endswith("_graft") and not 0 < merged["r"] < 0.2:
        raise PreconditionError(f"graft radius must satisfy 0 < r < 0.2, got {merged['r']}")
    if kind == "cylinder_graft":
        check_positive(merged["L"], "L")
    if kind == "sphere_graft" and not merged["R"] > 1:
        raise PreconditionError(f"sphere radius must satisfy R > 1, got {merged['R']}")
    return merged


def make_scenario(kind, params=None, h=0.02, augment=DEFAULT_AUGMENT):
    """Compile a scenario mesh.  Deterministic in ``(kind, params, h, augment)``."""
    params = _check_params(kind, params)
    h = check_positive(float(h), "h")
    domain = Disk()
    if kind == "euclidean":
        mesh = build_disk_mesh(1.0, h, augment=augment)
        return Scenario(kind, params, h, mesh, domain, euclidean_field(domain), augment=augment)
    if kind == "conformal_bump":
        metric = gaussian_bump_field(params["t"], params["width"], domain=domain)
        mesh = apply_conformal_factor(build_disk_mesh(1.0, h, augment=augment), metric)
        return Scenario(kind, params, h, mesh, domain, metric, augment=augment)
    if params["r"] < 2 * h:
        raise PreconditionError(f"graft radius r={params['r']} must be at least 2h={2 * h}")
    if kind == "cylinder_graft":
        mesh, graft = _cylinder_graft(params["r"], params["L"], h, augment)
    else:
        mesh, graft = _sphere_graft(params["r"], params["R"], h, augment)
    return Scenario(kind, params, h, mesh, domain, None, graft, augment=augment)


# --------------------------------------------------------------------------
# graft construction


def _annulus(r_hole, h, n_hole, augment):
    """Planar annulus ``r_hole <= |x| <= 1`` whose outer ring matches :func:`build_disk_mesh`."""
    n = int(math.ceil((1.0 - r_hole) / h))
    dr = (1.0 - r_hole) / n
    radii = r_hole + dr * np.arange(n + 1)
    counts = [n_hole] + [max(n_hole, int(round(2 * math.pi * rho / dr))) for rho in radii[1:-1]]
    counts.append(boundary_vertex_count(1.0, h))
    offsets = [0.0] + [(0.5 * (k % 2)) * 2 * math.pi / c for k, c in enumerate(counts[1:-1], 1)] + [0.0]
    coords, rings, angles, tris = ring_layout(radii, counts, offsets)
    edges = triangle_edge_pairs(tris)
    if augment and augment > 0:
        edges = np.vstack([edges, planar_augmentation(coords, augment * h, hole_radius=r_hole)])
    lengths = np.linalg.norm(coords[edges[:, 0]] - coords[edges[:, 1]], axis=1)
    return coords, rings, angles, tris, edges, lengths


def _merge_min(edges, lengths):
    """Deduplicate vertex pairs, keeping the shortest length of each."""
    e = np.sort(np.vstack(edges), axis=1)
    w = np.concatenate(lengths)
    order = np.lexsort((w, e[:, 1], e[:, 0]))
    e, w = e[order], w[order]
    keep = np.ones(len(e), dtype=bool)
    keep[1:] = np.any(e[1:] != e[:-1], axis=1)
    return e[keep], w[keep]


def _band(ring_ids, ring_angles):
    return np.vstack([stitch_rings(ring_ids[k], ring_angles[k], ring_ids[k + 1], ring_angles[k + 1])
                      for k in range(len(ring_ids) - 1)])


def _assemble(coords, rings, tris_a, edges_a, lengths_a, graft_tris, graft_edges, graft_lengths, n_graft):
    n_a = len(coords)
    all_coords = np.vstack([coords, np.full((n_graft, 2), np.nan)])
    edges, lengths = _merge_min([edges_a, graft_edges], [lengths_a, graft_lengths])
    mesh = IntrinsicMesh(np.vstack([tris_a, graft_tris]), edges, lengths, rings[-1], coords=all_coords)
    return mesh, np.arange(n_a, n_a + n_graft)


def _cylinder_graft(r, L, h, augment):
    """Annulus plus a flat tube of circumference ``2 pi r`` and length ``L`` capped by a cone fan."""
    n_hole = boundary_vertex_count(r, h)
    coords, rings, angles, tris_a, edges_a, lengths_a = _annulus(r, h, n_hole, augment)
    n_a = len(coords)
    nz = int(math.ceil(L / h))
    z = L * np.arange(nz + 1) / nz
    ring_ids, ring_ang = [rings[0]], [angles[0]]
    nxt = n_a
    for k in range(1, nz + 1):
        ring_ids.append(np.arange(nxt, nxt + n_hole))
        ring_ang.append(angles[0] + (k % 2) * math.pi / n_hole)
        nxt += n_hole
    apex = nxt
    tube_tris = _band(ring_ids, ring_ang)
    cap_tris = stitch_rings(np.array([apex]), np.array([0.0]), ring_ids[-1], ring_ang[-1])

    # unrolled coordinates of the tube (arc length around, height along)
    ids = np.concatenate(ring_ids)
    ang = np.mod(np.concatenate(ring_ang), 2 * math.pi)
    flat = np.column_stack([r * ang, np.repeat(z, n_hole)])
    flat[:, 0] = np.minimum(flat[:, 0], np.nextafter(2 * math.pi * r, 0))
    local = {int(v): k for k, v in enumerate(ids)}
    pairs = [np.array([[local[a], local[b]] for a, b in triangle_edge_pairs(tube_tris)])]
    if augment and augment > 0:
        tree = cKDTree(flat, boxsize=[2 * math.pi * r, 3 * L + 1])
        pairs.append(tree.query_pairs(augment * h, output_type="ndarray"))
    pairs = np.unique(np.sort(np.vstack(pairs), axis=1), axis=0)
    d = flat[pairs[:, 0]] - flat[pairs[:, 1]]
    circ = 2 * math.pi * r
    du = np.abs(d[:, 0])
    du = np.minimum(du, circ - du)
    tube_len = np.hypot(du, d[:, 1])
    tube_edges = ids[pairs]

    cap_edges = np.column_stack([np.full(n_hole, apex), ring_ids[-1]])
    cap_len = np.full(n_hole, 0.5 * math.pi * r)
    graft_edges = np.vstack([tube_edges, cap_edges])
    graft_len = np.concatenate([tube_len, cap_len])
    return _assemble(
        coords, rings, tris_a, edges_a, lengths_a,
        np.vstack([tube_tris, cap_tris]), graft_edges, graft_len, apex + 1 - n_a,
    )


def _sphere_graft(r, R, h, augment):
    """Annulus plus a radius-``R`` sphere with a cap of boundary length ``2 pi r`` removed.

    Latitude rings start at the seam with spacing ``h`` and coarsen
    linearly with distance up to :data:`SPHERE_MAX_SPACING`.
    """
    n_hole = boundary_vertex_count(r, h)
    coords, rings, angles, tris_a, edges_a, lengths_a = _annulus(r, h, n_hole, augment)
    n_a = len(coords)
    a0 = math.asin(r / R)
    polar, spacing = [a0], []
    while True:
        sp = min(SPHERE_MAX_SPACING, h + SPHERE_GRADING * R * (polar[-1] - a0))
        nxt_a = polar[-1] + sp / R
        if math.pi - nxt_a < 0.5 * sp / R:
            break
        polar.append(nxt_a)
        spacing.append(sp)
    ring_ids, ring_ang = [rings[0]], [angles[0]]
    pos3 = [_sphere_points(R, a0, angles[0])]
    nxt = n_a
    for k, (a, sp) in enumerate(zip(polar[1:], spacing), start=1):
        n = max(6, int(round(2 * math.pi * R * math.sin(a) / sp)))
        ang = (0.5 * (k % 2)) * 2 * math.pi / n + 2 * math.pi * np.arange(n) / n
        ring_ids.append(np.arange(nxt, nxt + n))
        ring_ang.append(ang)
        pos3.append(_sphere_points(R, a, ang))
        nxt += n
    pole = nxt
    ring_ids.append(np.array([pole]))
    ring_ang.append(np.array([0.0]))
    pos3.append(np.array([[0.0, 0.0, -R]]))
    tris = _band(ring_ids, ring_ang)

    ids = np.concatenate(ring_ids)
    pts = np.vstack(pos3)
    local = {int(v): k for k, v in enumerate(ids)}
    pairs = [np.array([[local[a], local[b]] for a, b in triangle_edge_pairs(tris)])]
    if augment and augment > 0:
        chord = 2 * R * math.sin(min(math.pi / 2, augment * h / (2 * R)))
        pairs.append(cKDTree(pts).query_pairs(chord, output_type="ndarray"))
    pairs = np.unique(np.sort(np.vstack(pairs), axis=1), axis=0)
    c = np.linalg.norm(pts[pairs[:, 0]] - pts[pairs[:, 1]], axis=1)
    great = 2 * R * np.arcsin(np.minimum(1.0, c / (2 * R)))
    return _assemble(coords, rings, tris_a, edges_a, lengths_a, tris, ids[pairs], great, pole + 1 - n_a)


def _sphere_points(R, polar, azimuth):
    s = R * math.sin(polar)
    return np.column_stack([s * np.cos(azimuth), s * np.sin(azimuth), np.full(len(azimuth), R * math.cos(polar))])


# --------------------------------------------------------------------------
# hypothesis audit


@lru_cache(maxsize=8)
def euclidean_reference(h, m, augment=DEFAULT_AUGMENT):
    """Boundary data of the Euclidean disk mesh at the same resolution (cached)."""
    return boundary_distance_matrix(build_disk_mesh(1.0, h, augment=augment), m, keep_fields=False)


@dataclass(frozen=True)
class AssumptionAudit:
    """Numbers behind the three hypotheses and the pass flags derived from them.

    ``cond1``: ``delta0 < delta``.  ``cond2``: ``collar_area < volume_bound``
    with ``volume_bound = area(D) + delta``.  ``cond3``: no isoembolic
    violation.
    """

    delta: float
    lam: float
    delta0: float
    collar_area: float
    volume_bound: float
    isoembolic: IsoembolicReport = field(repr=False)

    @property
    def cond1(self):
        return self.delta0 < self.delta

    @property
    def cond2(self):
        return self.collar_area < self.volume_bound

    @property
    def cond3(self):
        return self.isoembolic.passed

    @property
    def flags(self):
        return (self.cond1, self.cond2, self.cond3)

    def flag_string(self):
        return "".join("P" if f else "F" for f in self.flags)


def audit_assumptions(scenario, delta=0.1, lam=1.0, m=128, bd=None, proximity=None):
    """Evaluate the three hypotheses on ``scenario``.

    ``delta0`` compares boundary distances with the Euclidean disk mesh at
    the same ``h`` and ``m``, so the shared metrication error cancels.
    """
    delta = check_positive(delta, "delta")
    m = check_count(m, "m", minimum=2)
    if not delta > 2 * scenario.h:
        raise PreconditionError(f"delta={delta:g} must exceed 2h={2 * scenario.h:g}")
    mesh = scenario.mesh
    if bd is None:
        bd = boundary_distance_matrix(mesh, m, keep_fields=False)
    ref = euclidean_reference(scenario.h, m, scenario.augment)
    delta0 = c0_deviation(bd, ref)
    if proximity is None:
        proximity = boundary_proximity(mesh).values
    collar = collar_complement_area(mesh, delta, proximity)
    iso = isoembolic_audit(mesh, lam, delta, proximity=proximity)
    return AssumptionAudit(
        delta=delta,
        lam=float(lam),
        delta0=float(delta0),
        collar_area=float(collar),
        volume_bound=float(scenario.domain.area + delta),
        isoembolic=iso,
    )
