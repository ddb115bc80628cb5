"""Numerical experiments on the stability of boundary rigidity for planar domains.

Meshes carry an intrinsic metric through their edge lengths; graph
shortest paths are the ground-truth distances.  From the boundary distance
function the package builds distance-like coordinates, certifies
Gromov-Hausdorff closeness to the Euclidean disk, and audits the volume and
isoembolic hypotheses on test geometries.
"""

from ._validation import NumericalError, PreconditionError
from .boundary import (
    BoundaryCorrespondence,
    BoundaryDistanceData,
    arclength_correspondence,
    boundary_distance_matrix,
    boundary_gradient_check,
    c0_deviation,
    c1_deviation,
    recover_boundary_metric,
    reference_boundary_data,
)
from .embedding import (
    DirectionalField,
    EmbeddingMap,
    LiftDiagnostics,
    build_embedding,
    image_hausdorff,
    jacobian_defect,
    lift_diagnostics,
    lipschitz_defect,
    phi_direction,
    verify_foot_identity,
)
from .geodesics import distance_field, initial_direction, trace_geodesic
from .gh import ApproximationCertificate, certify_approximation, gh_lower_bound_diameter, hausdorff_distance
from .integral import IsoembolicReport, SantaloEstimate, ball_area, isoembolic_audit, santalo_volume
from .mesh import (
    Disk,
    IntrinsicMesh,
    MetricField,
    build_disk_mesh,
    collar_complement_area,
    gaussian_bump_field,
    total_area,
)
from .pipeline import PipelineConfig, StabilityReport, emit_report, run_pipeline
from .scenarios import AssumptionAudit, Scenario, audit_assumptions, make_scenario

__version__ = "0.1.0"
