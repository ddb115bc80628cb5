"""Distance fields on intrinsic meshes and geodesics of conformal metrics.

Graph shortest paths (Dijkstra on the augmented edge set) are the ground
truth for intrinsic distances.  Smooth geodesics of ``exp(2u) g_euclid`` are
integrated with classical RK4 in metric arc length, using the conformal
Christoffel symbols

    Gamma^k_ij = delta^k_i d_j u + delta^k_j d_i u - delta_ij d_k u,

so that the geodesic equation reads
``x'' = -2 <grad u, x'> x' + |x'|^2 grad u``.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.sparse.csgraph import dijkstra

from ._validation import NumericalError, PreconditionError, check_positive, check_unit_vector, check_vertex_indices

TRAPPED_LENGTH_FACTOR = 100.0


@dataclass(frozen=True)
class DistanceField:
    """Distances from a source vertex set, with predecessor links."""

    source: np.ndarray
    values: np.ndarray
    predecessors: np.ndarray | None = None

    def __getitem__(self, item):
        return self.values[item]


def distance_field(mesh, sources):
    """Exact shortest-path distances from ``sources`` on the mesh graph."""
    src = np.unique(check_vertex_indices(sources, mesh.n_vertices, "sources"))
    if len(src) == 1:
        values, pred = dijkstra(mesh.graph, directed=True, indices=int(src[0]), return_predecessors=True)
    else:
        values, pred, _ = dijkstra(
            mesh.graph, directed=True, indices=src, return_predecessors=True, min_only=True
        )
    return DistanceField(source=src, values=values, predecessors=pred)


def distance_rows(mesh, sources, limit=np.inf, n_jobs=1):
    """Stack of single-source distance fields, shape ``(len(sources), V)``.

    Rows are independent; ``n_jobs > 1`` splits them across threads.
    """
    src = check_vertex_indices(sources, mesh.n_vertices, "sources")
    graph = mesh.graph

    # the graph is stored symmetric, so directed=True gives undirected
    # distances without a per-call transpose
    def run(chunk):
        return dijkstra(graph, directed=True, indices=chunk, limit=limit)

    if n_jobs is None or n_jobs <= 1 or len(src) < 2 * n_jobs:
        return np.atleast_2d(run(src))
    chunks = np.array_split(src, n_jobs)
    with ThreadPoolExecutor(max_workers=n_jobs) as pool:
        return np.vstack([np.atleast_2d(r) for r in pool.map(run, chunks)])


def boundary_proximity(mesh):
    """Distance from every vertex to the boundary loop."""
    return distance_field(mesh, mesh.boundary)


def extract_path(mesh, field, target):
    """Vertex path from the field's source set to ``target``.

    Walks back from ``target`` choosing, among all neighbours ``u`` with
    ``values[u] + |u t| == values[t]``, the lowest vertex index.  Lengths are
    on a dyadic grid, so the equality test is exact.
    """
    values = field.values
    if not np.isfinite(values[target]):
        raise PreconditionError(f"vertex {target} is unreachable from the source set")
    g = mesh.graph
    indptr, indices, data = g.indptr, g.indices, g.data
    sources = set(int(s) for s in np.atleast_1d(field.source))
    path = [int(target)]
    t = int(target)
    while t not in sources:
        lo, hi = indptr[t], indptr[t + 1]
        nb, w = indices[lo:hi], data[lo:hi]
        ok = values[nb] + w == values[t]
        if not np.any(ok):
            # fall back on the stored tree when rounding differs from the dyadic grid
            if field.predecessors is None:
                raise NumericalError(f"no tight edge into vertex {t}; distances are inconsistent")
            t = int(field.predecessors[t])
        else:
            t = int(nb[ok].min())
        path.append(t)
    return np.asarray(path[::-1])


class InitialDirection(NamedTuple):
    vector: np.ndarray
    unique: bool
    spread: float


def initial_direction(mesh, x, y, probe=1.0, cone_angle=8.0, ambiguity_angle=30.0, fields=None):
    """Unit initial direction at ``x`` of the shortest path from ``x`` to ``y``.

    Let ``reach = min(probe, d(x, y) / 2)``.  Among vertices ``v`` with
    ``d(x, v)`` in ``[reach / 2, reach]``, the near-minimizing ones are those
    whose excess ``d(x, v) + d(v, y) - d(x, y)`` is within
    ``(1 - cos(cone_angle)) * d(x, v)`` of the smallest excess in that window.
    The direction is the normalized mean of the unit chords from ``x`` to
    them, in reference coordinates.  For a unique minimizer this set is a thin
    cone around it, so averaging cancels the lateral wander of individual
    graph paths.  For conformal metrics Euclidean angles are metric angles.

    The result is flagged non-unique when some vertex of the window with excess
    below ``(1 - cos(ambiguity_angle)) / 2 * d(x, v)`` deviates from the
    returned direction by more than ``ambiguity_angle`` degrees.
    """
    if mesh.coords is None:
        raise PreconditionError("initial_direction needs reference coordinates")
    if x == y:
        raise PreconditionError("x and y must differ")
    if not np.all(np.isfinite(mesh.coords[x])):
        raise PreconditionError(f"vertex {x} has no reference coordinates")
    fx = fields[0] if fields is not None else distance_field(mesh, [x])
    fy = fields[1] if fields is not None else distance_field(mesh, [y])
    ell = fx.values
    d = float(ell[y])
    reach = min(probe, 0.5 * d)
    window = (ell >= 0.5 * reach) & (ell <= reach) & np.all(np.isfinite(mesh.coords), axis=1)
    if not np.any(window):
        raise NumericalError(f"no vertices between {x} and {y} at arc length {reach:g}; mesh too coarse")
    excess = ell + fy.values - d
    e0 = excess[window].min()
    cone = window & (excess <= e0 + (1.0 - math.cos(math.radians(cone_angle))) * ell)
    chords = mesh.coords[cone] - mesh.coords[x]
    chords /= np.linalg.norm(chords, axis=1, keepdims=True)
    vec = chords.sum(axis=0)
    vec /= np.linalg.norm(vec)

    slack = 0.5 * (1.0 - math.cos(math.radians(ambiguity_angle)))
    zone = window & (excess <= slack * ell)
    spread = 0.0
    if np.any(zone):
        dirs = mesh.coords[zone] - mesh.coords[x]
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
        spread = float(np.degrees(np.arccos(np.clip(dirs @ vec, -1.0, 1.0))).max())
    return InitialDirection(vector=vec, unique=spread <= ambiguity_angle, spread=spread)


# --------------------------------------------------------------------------
# smooth geodesics


@dataclass(frozen=True)
class GeodesicPath:
    """A traced unit-speed geodesic entering the domain at ``entry``."""

    samples: np.ndarray
    params: np.ndarray
    length: float
    entry: np.ndarray
    direction: np.ndarray
    exit: np.ndarray | None
    trapped: bool
    entry_angle: float

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "x", "y"])
            for t, (x, y) in zip(self.params, self.samples):
                w.writerow([f"{t:.17g}", f"{x:.17g}", f"{y:.17g}"])


def _rhs(metric, x, w):
    g = metric.gradient(x)
    gw = np.sum(g * w, axis=-1, keepdims=True)
    ww = np.sum(w * w, axis=-1, keepdims=True)
    return w, -2.0 * gw * w + ww * g


def _rk4(metric, x, w, h):
    h = np.asarray(h, dtype=float).reshape(-1, 1) if np.ndim(h) else h
    k1x, k1w = _rhs(metric, x, w)
    k2x, k2w = _rhs(metric, x + 0.5 * h * k1x, w + 0.5 * h * k1w)
    k3x, k3w = _rhs(metric, x + 0.5 * h * k2x, w + 0.5 * h * k2w)
    k4x, k4w = _rhs(metric, x + h * k3x, w + h * k3w)
    return (
        x + h / 6.0 * (k1x + 2 * k2x + 2 * k3x + k4x),
        w + h / 6.0 * (k1w + 2 * k2w + 2 * k3w + k4w),
    )


def _initial_state(metric, points, directions):
    points = np.array(points, dtype=float).reshape(-1, 2)
    directions = np.asarray(directions, dtype=float).reshape(-1, 2)
    if not metric.is_conformal:
        raise PreconditionError("geodesic tracing supports conformal metric fields only")
    eucl = directions / np.linalg.norm(directions, axis=1, keepdims=True)
    normals = metric.domain.inward_normal(points)
    cosang = np.sum(eucl * normals, axis=1)
    if np.any(cosang < -1e-12):
        raise PreconditionError("initial direction points outward (not in the inward hemisphere)")
    w = eucl * np.exp(-metric.conformal_exponent(points))[:, None]
    return points, w, eucl, np.arccos(np.clip(cosang, -1.0, 1.0))


def trace_geodesics(metric, points, directions, step=0.01, bisection_steps=60, max_length=None):
    """Trace many boundary-to-boundary geodesics at once.

    ``directions`` are Euclidean directions (rescaled internally to metric
    unit speed).  Returns ``(lengths, exits, trapped)``; trapped rays have
    ``length = max_length`` and NaN exits.
    """
    step = check_positive(step, "step")
    domain = metric.domain
    if max_length is None:
        max_length = TRAPPED_LENGTH_FACTOR * domain.diameter
    x, w, _, _ = _initial_state(metric, points, directions)
    n = len(x)
    lengths = np.full(n, float(max_length))
    exits = np.full((n, 2), np.nan)
    trapped = np.zeros(n, dtype=bool)
    active = np.arange(n)
    s = 0.0
    n_steps = int(math.ceil(max_length / step))
    for _ in range(n_steps):
        if not len(active):
            break
        xa, wa = x[active], w[active]
        xn, wn = _rk4(metric, xa, wa, step)
        crossed = domain.level(xn) > 0
        if np.any(crossed):
            lo = np.zeros(crossed.sum())
            hi = np.full(crossed.sum(), step)
            xc, wc = xa[crossed], wa[crossed]
            for _ in range(bisection_steps):
                mid = 0.5 * (lo + hi)
                xm, _ = _rk4(metric, xc, wc, mid)
                out = domain.level(xm) > 0
                hi = np.where(out, mid, hi)
                lo = np.where(out, lo, mid)
            tau = 0.5 * (lo + hi)
            xe, _ = _rk4(metric, xc, wc, tau)
            ids = active[crossed]
            lengths[ids] = s + tau
            exits[ids] = xe
        x[active], w[active] = xn, wn
        active = active[~crossed]
        s += step
    trapped[active] = True
    return lengths, exits, trapped


def trace_geodesic(metric, p, v, step=0.01, bisection_steps=60):
    """Trace one geodesic from boundary point ``p`` in inward direction ``v``.

    ``v`` is a Euclidean unit vector (metric angles equal Euclidean ones for
    conformal metrics).  Integration stops at the first boundary crossing,
    located by bisection on the last step, or after ``100 * diam(D)``.
    """
    v = check_unit_vector(v, "v", atol=1e-6)
    step = check_positive(step, "step")
    metric_domain = metric.domain
    x, w, eucl, angle = _initial_state(metric, p, v)
    max_length = TRAPPED_LENGTH_FACTOR * metric_domain.diameter
    samples, params = [x[0].copy()], [0.0]
    s = 0.0
    exit_point, trapped, length = None, True, max_length
    while s < max_length:
        xn, wn = _rk4(metric, x, w, step)
        if metric_domain.level(xn)[0] > 0:
            lo, hi = 0.0, step
            for _ in range(bisection_steps):
                mid = 0.5 * (lo + hi)
                xm, _ = _rk4(metric, x, w, mid)
                if metric_domain.level(xm)[0] > 0:
                    hi = mid
                else:
                    lo = mid
            tau = 0.5 * (lo + hi)
            xe, _ = _rk4(metric, x, w, tau)
            exit_point, trapped, length = xe[0], False, s + tau
            samples.append(xe[0].copy())
            params.append(length)
            break
        x, w = xn, wn
        s += step
        samples.append(x[0].copy())
        params.append(s)
    return GeodesicPath(
        samples=np.asarray(samples),
        params=np.asarray(params),
        length=float(length),
        entry=np.asarray(p, dtype=float).reshape(2),
        direction=eucl[0],
        exit=exit_point,
        trapped=trapped,
        entry_angle=float(angle[0]),
    )


def polyline_metric_length(metric, samples):
    """Metric length of a polyline by Gauss-3 quadrature on each segment."""
    from .mesh import conformal_edge_lengths

    pts = np.asarray(samples, dtype=float)
    idx = np.column_stack([np.arange(len(pts) - 1), np.arange(1, len(pts))])
    return float(conformal_edge_lengths(pts, idx, metric).sum())


def shoot_to_targets(metric, p, q, step=0.005, iterations=40):
    """Geodesics from boundary points ``p`` that exit at boundary points ``q``.

    Vectorized bisection on the entry angle, one bracket per pair.  The exit
    point is assumed to move monotonically along the boundary with the
    angle, which holds for simple metrics.  Returns ``(directions, lengths,
    miss)`` where ``miss`` is the distance from the final exit point to ``q``.
    """
    p = np.asarray(p, dtype=float).reshape(-1, 2)
    q = np.asarray(q, dtype=float).reshape(-1, 2)
    normal = metric.domain.inward_normal(p)
    tangent = np.column_stack([-normal[:, 1], normal[:, 0]])
    chord = q - p

    def direction(theta):
        return np.cos(theta)[:, None] * normal + np.sin(theta)[:, None] * tangent

    def signed(theta):
        _, ex, _ = trace_geodesics(metric, p, direction(theta), step=step)
        e = ex - p
        # positive when the exit lies counterclockwise past q as seen from p
        return chord[:, 0] * e[:, 1] - chord[:, 1] * e[:, 0]

    edge = math.pi / 2 - 1e-9
    lo = np.full(len(p), -edge)
    hi = np.full(len(p), edge)
    flo = signed(lo)
    for _ in range(iterations):
        mid = 0.5 * (lo + hi)
        fm = signed(mid)
        same = fm * flo > 0
        lo = np.where(same, mid, lo)
        flo = np.where(same, fm, flo)
        hi = np.where(same, hi, mid)
    theta = 0.5 * (lo + hi)
    d = direction(theta)
    lengths, ex, _ = trace_geodesics(metric, p, d, step=step)
    return d, lengths, np.linalg.norm(ex - q, axis=1)


def shoot_to_target(metric, p, q, step=0.005, iterations=40):
    """Single-pair version of :func:`shoot_to_targets`; returns ``(direction, length)``."""
    d, lengths, _ = shoot_to_targets(metric, p, q, step=step, iterations=iterations)
    return d[0], float(lengths[0])
