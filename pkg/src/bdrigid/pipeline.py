"""End-to-end stability experiment: boundary data to a Gromov-Hausdorff certificate."""

from __future__ import annotations

import csv
import io
import json
import math
import time
from dataclasses import asdict, dataclass, field, fields

from ._validation import NumericalError, PreconditionError, check_count, check_positive
from .boundary import (
    DEFAULT_ETA,
    boundary_distance_matrix,
    c0_deviation,
    c1_deviation,
    reference_boundary_data,
)
from .embedding import build_embedding, image_hausdorff
from .geodesics import boundary_proximity, distance_rows
from .gh import certify_approximation, gh_lower_bound_diameter, graph_diameter_lower
from .integral import santalo_volume
from .mesh import DEFAULT_AUGMENT, Disk
from .scenarios import audit_assumptions, euclidean_reference, make_scenario

REPORT_COLUMNS = (
    "scenario",
    "h",
    "m",
    "delta",
    "lambda",
    "eta",
    "delta0",
    "delta1",
    "santalo_volume",
    "collar_area",
    "audit_flags",
    "distortion",
    "hausdorff_image",
    "hausdorff_boundary",
    "gh_upper",
    "gh_lower",
    "floor_metrication",
    "floor_sampling",
    "seed",
    "wall_seconds",
)


@dataclass(frozen=True)
class PipelineConfig:
    """Run parameters; ``params`` override the scenario defaults."""

    kind: str = "euclidean"
    params: dict = field(default_factory=dict)
    h: float = 0.02
    m: int = 128
    eta: float = DEFAULT_ETA
    delta: float = 0.1
    lam: float = 1.0
    santalo_boundary: int = 256
    santalo_angle: int = 128
    santalo_step: float = 0.01
    seed: int = 42
    threads: int = 1
    augment: float = DEFAULT_AUGMENT
    timing: bool = True

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        if "scenario" in d:
            sc = d.pop("scenario")
            d.setdefault("kind", sc.get("kind", "euclidean"))
            d.setdefault("params", sc.get("params", {}))
            if "h" in sc:
                d.setdefault("h", sc["h"])
        if "lambda" in d:
            d["lam"] = d.pop("lambda")
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise PreconditionError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)


@dataclass
class StabilityReport:
    """One row of results; ``absent`` maps inapplicable fields to the reason."""

    scenario: str
    h: float
    m: int
    delta: float
    lam: float
    eta: float
    delta0: float
    delta1: float
    santalo_volume: float | None
    collar_area: float
    audit_flags: str
    distortion: float
    hausdorff_image: float
    hausdorff_boundary: float
    gh_upper: float
    gh_lower: float
    floor_metrication: float
    floor_sampling: float
    seed: int
    wall_seconds: float | None
    absent: dict = field(default_factory=dict)

    def row(self):
        """Values in :data:`REPORT_COLUMNS` order."""
        d = asdict(self)
        d["lambda"] = d.pop("lam")
        return [d[c] for c in REPORT_COLUMNS]

    def to_dict(self):
        d = dict(zip(REPORT_COLUMNS, self.row()))
        d["absent"] = dict(sorted(self.absent.items()))
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        d["lam"] = d.pop("lambda")
        return cls(**d)


def describe_scenario(kind, params):
    inner = ";".join(f"{k}={params[k]!r}" for k in sorted(params))
    return f"{kind}[{inner}]" if inner else kind


class StageError(RuntimeError):
    """A pipeline stage failed; carries the stage name and the original error."""

    def __init__(self, stage, cause):
        super().__init__(f"stage {stage!r} failed: {cause}")
        self.stage = stage
        self.cause = cause


def _stage(name, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except (PreconditionError, NumericalError) as exc:
        raise StageError(name, exc) from exc


def metrication_floor(h, m, augment=DEFAULT_AUGMENT):
    """C0 deviation of the Euclidean disk mesh from exact chord lengths at the same sampling."""
    ref = euclidean_reference(h, m, augment)
    exact = reference_boundary_data(ref.params, ref.period, Disk())
    return c0_deviation(ref, exact)


def run_pipeline(config):
    """Boundary data, deviations, volume checks, audits, embedding and certificate for one scenario."""
    if isinstance(config, dict):
        config = PipelineConfig.from_dict(config)
    check_count(config.m, "m", minimum=16)
    check_positive(config.eta, "eta")
    t0 = time.perf_counter()
    sc = _stage("scenario", make_scenario, config.kind, config.params, config.h, augment=config.augment)
    mesh, domain = sc.mesh, sc.domain
    absent = {}

    bd = _stage("boundary", boundary_distance_matrix, mesh, config.m, n_jobs=config.threads)
    ref = euclidean_reference(config.h, config.m, config.augment)
    delta0 = _stage("deviation", c0_deviation, bd, ref)
    delta1 = _stage("deviation", c1_deviation, bd, ref, config.eta)

    if sc.metric is not None:
        est = _stage(
            "santalo", santalo_volume, sc.metric, config.santalo_boundary, config.santalo_angle, config.santalo_step
        )
        santalo = est.volume
        if est.lower_bound:
            absent["santalo_volume"] = f"lower bound only: {est.trapped_fraction:.3g} of rays trapped"
    else:
        santalo = None
        absent["santalo_volume"] = "no smooth metric field: geodesic tracing undefined on grafts"

    proximity = boundary_proximity(mesh).values
    audit = _stage(
        "audit", audit_assumptions, sc, config.delta, config.lam, config.m, bd=bd, proximity=proximity
    )

    emb = _stage("embedding", build_embedding, bd)
    spacing = 0.5 * config.h
    haus_img, haus_bd = image_hausdorff(emb, mesh, domain, spacing)
    cert = _stage(
        "certificate",
        certify_approximation,
        emb.coords,
        domain.grid(spacing),
        lambda src: distance_rows(mesh, src, n_jobs=config.threads),
        seed=config.seed,
        net_slack=spacing,
    )
    diam = graph_diameter_lower(lambda src: distance_rows(mesh, src), start=int(mesh.boundary[0]))
    gh_lower = gh_lower_bound_diameter(diam, domain.diameter)
    if gh_lower > cert.gh_upper:
        raise StageError("certificate", NumericalError(f"gh_lower={gh_lower:g} exceeds gh_upper={cert.gh_upper:g}"))

    report = StabilityReport(
        scenario=describe_scenario(sc.kind, sc.params),
        h=config.h,
        m=config.m,
        delta=config.delta,
        lam=config.lam,
        eta=config.eta,
        delta0=delta0,
        delta1=delta1,
        santalo_volume=santalo,
        collar_area=audit.collar_area,
        audit_flags=audit.flag_string(),
        distortion=cert.eps_distortion,
        hausdorff_image=haus_img,
        hausdorff_boundary=haus_bd,
        gh_upper=cert.gh_upper,
        gh_lower=gh_lower,
        floor_metrication=metrication_floor(config.h, config.m, config.augment),
        floor_sampling=0.5 * bd.max_gap,
        seed=config.seed,
        wall_seconds=None,
        absent=absent,
    )
    if config.timing:
        report.wall_seconds = time.perf_counter() - t0
    else:
        absent["wall_seconds"] = "timing disabled"
    return report


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v) if math.isfinite(v) else str(v)
    return str(v)


def report_csv(reports, header=True):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if header:
        w.writerow(REPORT_COLUMNS)
    for r in reports:
        w.writerow([_cell(v) for v in r.row()])
    return buf.getvalue()


def report_json(reports):
    items = [r.to_dict() for r in reports]
    return json.dumps(items[0] if len(items) == 1 else items, indent=2) + "\n"


def emit_report(report, fmt, path):
    """Write one report (or a list) as CSV with the fixed header, or as pretty JSON."""
    reports = report if isinstance(report, (list, tuple)) else [report]
    if fmt == "csv":
        text = report_csv(reports)
    elif fmt == "json":
        text = report_json(reports)
    else:
        raise PreconditionError(f"format must be 'csv' or 'json', got {fmt!r}")
    with open(path, "w", newline="") as fh:
        fh.write(text)
    return path


def read_report_json(path):
    with open(path) as fh:
        data = json.load(fh)
    items = data if isinstance(data, list) else [data]
    return [StabilityReport.from_dict(d) for d in items]


def run_family(config, key, values):
    """Run ``config`` once per value of scenario parameter ``key``."""
    base = config if isinstance(config, PipelineConfig) else PipelineConfig.from_dict(config)
    out = []
    for v in values:
        params = {**base.params, key: v}
        out.append(run_pipeline(PipelineConfig(**{**asdict(base), "params": params})))
    return out


__all__ = [
    "REPORT_COLUMNS",
    "PipelineConfig",
    "StabilityReport",
    "StageError",
    "emit_report",
    "metrication_floor",
    "read_report_json",
    "report_csv",
    "report_json",
    "run_family",
    "run_pipeline",
]
