"""Gromov-Hausdorff upper bounds from epsilon-approximations, and simple lower bounds.

A map ``f: X -> Y`` with distortion at most ``eps`` on pairs and an
``eps``-dense image certifies ``d_GH(X, Y) <= 2 eps``.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy.spatial import ConvexHull, QhullError, cKDTree

from ._validation import PreconditionError, check_points, check_positive, check_random_state

EXHAUSTIVE_LIMIT = 2000
PAIR_BUDGET = 10**6


@dataclass(frozen=True)
class ApproximationCertificate:
    """Distortion and covering radius of a map into a Euclidean net.

    ``eps_net`` is measured against the finite net; the net's own spacing
    adds at most ``net_slack`` to the covering radius of the continuum
    target, reported separately and not folded into ``gh_upper``.
    """

    eps_distortion: float
    eps_net: float
    eps: float
    gh_upper: float
    net_slack: float
    n_points: int
    n_pairs: int
    pair_sampling: str
    seed: int | None

    def to_json(self, path=None):
        text = json.dumps(asdict(self), indent=2, sort_keys=True)
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text + "\n")
        return text

    @classmethod
    def from_json(cls, text):
        return cls(**json.loads(text))


def hausdorff_distance(p, q):
    """Symmetric Hausdorff distance between two finite point sets."""
    p = check_points(p, "P")
    q = check_points(q, "Q")
    return max(directed_hausdorff(p, q), directed_hausdorff(q, p))


def directed_hausdorff(p, q):
    """``max_{a in P} min_{b in Q} |a - b|``."""
    d, _ = cKDTree(q).query(p)
    return float(d.max())


def _distance_rows(d_x, sources, n):
    if callable(d_x):
        rows = np.asarray(d_x(sources), dtype=float)
    else:
        mat = np.asarray(d_x, dtype=float)
        if mat.shape != (n, n):
            raise PreconditionError(f"distance matrix must have shape ({n}, {n}), got {mat.shape}")
        rows = mat[sources]
    if rows.shape != (len(sources), n):
        raise PreconditionError(f"distance rows must have shape ({len(sources)}, {n}), got {rows.shape}")
    return rows


def certify_approximation(
    images, y_net, d_x, *, seed=42, net_slack=0.0, exhaustive_limit=EXHAUSTIVE_LIMIT, pair_budget=PAIR_BUDGET
):
    """Certify ``d_GH(X, Y) <= 2 eps`` for the map ``x -> images[x]``.

    Parameters
    ----------
    images : (n, 2) array
        Images of the points of ``X`` in the plane.
    y_net : (k, 2) array
        Dense point set standing in for ``Y``.
    d_x : (n, n) array or callable
        Distances in ``X``; a callable maps source indices to distance rows.
    seed : int
        Seed for the pair sample when ``n > exhaustive_limit``.  Then
        ``ceil(pair_budget / n)`` random sources are paired with every point.
    net_slack : float
        Spacing-induced slack of ``y_net``, recorded only.
    """
    images = check_points(images, "images")
    y_net = check_points(y_net, "y_net")
    n = len(images)
    if n <= exhaustive_limit:
        sources = np.arange(n)
        sampling, used_seed = "all", None
    else:
        k = min(n, math.ceil(pair_budget / n))
        rng = check_random_state(seed)
        sources = np.sort(rng.choice(n, size=k, replace=False))
        sampling, used_seed = "sources", seed
    rows = _distance_rows(d_x, sources, n)
    img = np.linalg.norm(images[sources][:, None, :] - images[None, :, :], axis=-1)
    finite = np.isfinite(rows)
    eps_d = float(np.abs(img - rows)[finite].max()) if np.any(finite) else 0.0
    eps_n = directed_hausdorff(y_net, images)
    eps = max(eps_d, eps_n)
    return ApproximationCertificate(
        eps_distortion=eps_d,
        eps_net=eps_n,
        eps=eps,
        gh_upper=2.0 * eps,
        net_slack=float(net_slack),
        n_points=n,
        n_pairs=int(finite.sum()),
        pair_sampling=sampling,
        seed=used_seed,
    )


def _diameter(d):
    if np.ndim(d) == 0:
        return check_positive(float(d), "diameter", strict=False)
    arr = np.asarray(d, dtype=float)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise PreconditionError("expected a diameter or a square distance matrix")
    return float(arr.max())


def point_set_diameter(points):
    """Euclidean diameter of a finite planar point set."""
    pts = check_points(points)
    if len(pts) > 3:
        try:
            pts = pts[ConvexHull(pts).vertices]
        except QhullError:
            pass
    return float(np.linalg.norm(pts[:, None, :] - pts[None, :, :], axis=-1).max())


def gh_lower_bound_diameter(d_x, d_y):
    """``|diam X - diam Y| / 2``; each argument is a diameter or a square distance matrix."""
    return 0.5 * abs(_diameter(d_x) - _diameter(d_y))


def graph_diameter_lower(distance_rows, start=0, sweeps=4):
    """Lower bound on the diameter of a graph metric by repeated farthest-point sweeps.

    ``distance_rows`` maps a list of source indices to distance rows.
    """
    best, src = 0.0, int(start)
    for _ in range(sweeps):
        row = np.asarray(distance_rows([src]), dtype=float)[0]
        row = np.where(np.isfinite(row), row, -np.inf)
        far = int(np.argmax(row))
        if row[far] <= best:
            break
        best, src = float(row[far]), far
    return best
