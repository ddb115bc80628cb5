"""scikit-learn style wrappers around the functional API.

The estimators take meshes or metric fields as ``X`` rather than feature
matrices, so they are not meant for sklearn pipelines.  What they provide is
parameter handling (``get_params``, ``set_params``, ``clone``), a fitted
state checked by ``check_is_fitted`` and the ``fit`` / ``transform`` idiom.
Output wrapping (``set_output``) is off since ``transform`` takes no features.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import PreconditionError, check_count, check_vertex_indices
from .boundary import boundary_distance_matrix
from .embedding import build_embedding, lift_diagnostics
from .gh import certify_approximation
from .integral import santalo_volume
from .mesh import IntrinsicMesh, MetricField


def _check_mesh(X):
    if not isinstance(X, IntrinsicMesh):
        raise PreconditionError(f"expected an IntrinsicMesh, got {type(X).__name__}")
    return X


class BoundaryDistanceTransformer(TransformerMixin, BaseEstimator, auto_wrap_output_keys=None):
    """Boundary distance data of a mesh.

    ``fit(mesh)`` computes the ``m x m`` table; ``transform`` returns it.
    """

    def __init__(self, m=128, n_jobs=1):
        self.m = m
        self.n_jobs = n_jobs

    def fit(self, X, y=None):
        mesh = _check_mesh(X)
        self.boundary_data_ = boundary_distance_matrix(mesh, check_count(self.m, "m", 2), n_jobs=self.n_jobs)
        return self

    def transform(self, X=None):
        check_is_fitted(self, "boundary_data_")
        return self.boundary_data_.matrix


class DistanceLikeEmbedding(TransformerMixin, BaseEstimator, auto_wrap_output_keys=None):
    """Planar embedding of a mesh by distance-like coordinates.

    Parameters
    ----------
    m : int
        Number of boundary samples.
    diagnostics : bool
        Also compute the directional defects of the lift (``lift_``).
    n_jobs : int
        Threads for the boundary distance fields.

    Attributes
    ----------
    boundary_data_ : BoundaryDistanceData
    embedding_ : EmbeddingMap
    lift_ : LiftDiagnostics or None
    """

    def __init__(self, m=128, diagnostics=False, n_jobs=1):
        self.m = m
        self.diagnostics = diagnostics
        self.n_jobs = n_jobs

    def fit(self, X, y=None):
        mesh = _check_mesh(X)
        self.n_vertices_ = mesh.n_vertices
        self.boundary_data_ = boundary_distance_matrix(mesh, check_count(self.m, "m", 2), n_jobs=self.n_jobs)
        self.embedding_ = build_embedding(self.boundary_data_)
        self.lift_ = lift_diagnostics(self.boundary_data_, self.embedding_) if self.diagnostics else None
        return self

    def transform(self, X=None):
        """Images of vertex ids ``X`` (all vertices when ``X`` is None)."""
        check_is_fitted(self, "embedding_")
        if X is None:
            return self.embedding_.coords
        ids = check_vertex_indices(X, self.n_vertices_, "X")
        return self.embedding_.coords[ids]

    def fit_transform(self, X, y=None):
        return self.fit(X).transform()


class SantaloVolumeEstimator(BaseEstimator):
    """Area of a conformal metric recovered from its exit lengths."""

    def __init__(self, m_boundary=256, m_angle=128, step=0.01):
        self.m_boundary = m_boundary
        self.m_angle = m_angle
        self.step = step

    def fit(self, X, y=None):
        if not isinstance(X, MetricField):
            raise PreconditionError(f"expected a MetricField, got {type(X).__name__}")
        self.estimate_ = santalo_volume(X, self.m_boundary, self.m_angle, self.step)
        self.volume_ = self.estimate_.volume
        return self


class GHCertifier(BaseEstimator):
    """Gromov-Hausdorff upper bound for a map into a planar net.

    ``fit(images, distances)`` where ``distances`` is a square matrix or a
    callable returning distance rows for given source indices.
    """

    def __init__(self, net=None, seed=42, net_slack=0.0):
        self.net = net
        self.seed = seed
        self.net_slack = net_slack

    def fit(self, X, y):
        images = np.asarray(X, dtype=float)
        net = images if self.net is None else self.net
        self.certificate_ = certify_approximation(images, net, y, seed=self.seed, net_slack=self.net_slack)
        self.gh_upper_ = self.certificate_.gh_upper
        return self
