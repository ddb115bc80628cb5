"""Command line driver.

Exit codes: 0 on success, 2 when inputs violate a precondition (including
unwritable output paths), 3 when a numerical stage fails.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace

from ._validation import NumericalError, PreconditionError
from .boundary import boundary_distance_matrix
from .embedding import build_embedding
from .geodesics import distance_rows
from .gh import certify_approximation
from .integral import santalo_volume
from .mesh import write_mesh
from .pipeline import PipelineConfig, StageError, emit_report, run_family, run_pipeline
from .scenarios import audit_assumptions, make_scenario

EXIT_OK, EXIT_PRECONDITION, EXIT_NUMERICAL = 0, 2, 3


def _parse_value(text):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def load_config(args):
    """Merge ``--config`` JSON with command line overrides."""
    data = {}
    if args.config:
        try:
            with open(args.config) as fh:
                data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise PreconditionError(f"config {args.config}: {exc}") from exc
    config = PipelineConfig.from_dict(data)
    overrides = {}
    if args.kind is not None:
        overrides["kind"] = args.kind
    if args.param:
        params = dict(config.params if args.kind is None or args.kind == config.kind else {})
        for item in args.param:
            key, sep, value = item.partition("=")
            if not sep:
                raise PreconditionError(f"--param expects KEY=VALUE, got {item!r}")
            params[key] = _parse_value(value)
        overrides["params"] = params
    elif args.kind is not None and args.kind != config.kind:
        overrides["params"] = {}
    for name in ("h", "m", "seed", "threads"):
        value = getattr(args, name)
        if value is not None:
            overrides[name] = value
    if getattr(args, "no_timing", False):
        overrides["timing"] = False
    return replace(config, **overrides)


def _out_path(args, name):
    os.makedirs(args.out, exist_ok=True)
    return os.path.join(args.out, name)


def _scenario(config):
    return make_scenario(config.kind, config.params, config.h, augment=config.augment)


def cmd_mesh(args, config):
    sc = _scenario(config)
    path = write_mesh(sc.mesh, _out_path(args, "mesh.irmesh"))
    print(f"{sc.mesh!r} -> {path}")


def cmd_bdmatrix(args, config):
    sc = _scenario(config)
    bd = boundary_distance_matrix(sc.mesh, config.m, n_jobs=config.threads, keep_fields=False)
    path = _out_path(args, "bdmatrix.csv")
    bd.to_csv(path)
    print(f"m={bd.m} -> {path}")


def cmd_embed(args, config):
    sc = _scenario(config)
    bd = boundary_distance_matrix(sc.mesh, config.m, n_jobs=config.threads)
    emb = build_embedding(bd)
    path = _out_path(args, "embedding.csv")
    emb.to_csv(path)
    print(f"V={len(emb.coords)} -> {path}")


def cmd_santalo(args, config):
    sc = _scenario(config)
    if sc.metric is None:
        raise PreconditionError(f"{sc.kind} has no smooth metric field to trace geodesics in")
    est = santalo_volume(sc.metric, config.santalo_boundary, config.santalo_angle, config.santalo_step)
    path = _out_path(args, "santalo.csv")
    est.to_csv(path)
    print(f"volume={est.volume!r} trapped_fraction={est.trapped_fraction!r} -> {path}")


def cmd_audit(args, config):
    sc = _scenario(config)
    audit = audit_assumptions(sc, config.delta, config.lam, config.m)
    out = {
        "scenario": sc.spec(),
        "delta": audit.delta,
        "lambda": audit.lam,
        "delta0": audit.delta0,
        "collar_area": audit.collar_area,
        "volume_bound": audit.volume_bound,
        "violations": [v._asdict() for v in audit.isoembolic.violations],
        "cond1": audit.cond1,
        "cond2": audit.cond2,
        "cond3": audit.cond3,
    }
    path = _out_path(args, "audit.json")
    with open(path, "w") as fh:
        json.dump(out, fh, indent=2)
        fh.write("\n")
    print(f"flags={audit.flag_string()} -> {path}")


def cmd_ghbound(args, config):
    sc = _scenario(config)
    bd = boundary_distance_matrix(sc.mesh, config.m, n_jobs=config.threads)
    emb = build_embedding(bd)
    spacing = 0.5 * config.h
    cert = certify_approximation(
        emb.coords,
        sc.domain.grid(spacing),
        lambda src: distance_rows(sc.mesh, src, n_jobs=config.threads),
        seed=config.seed,
        net_slack=spacing,
    )
    path = _out_path(args, "certificate.json")
    cert.to_json(path)
    print(f"gh_upper={cert.gh_upper!r} -> {path}")


def cmd_experiment(args, config):
    report = run_pipeline(config)
    path = emit_report(report, args.format, _out_path(args, f"report.{args.format}"))
    print(f"gh_upper={report.gh_upper!r} flags={report.audit_flags} -> {path}")


def cmd_sweep(args, config):
    if not args.sweep_param or not args.values:
        raise PreconditionError("sweep needs --sweep-param and --values")
    values = [_parse_value(v) for v in args.values.split(",")]
    reports = run_family(config, args.sweep_param, values)
    path = emit_report(reports, args.format, _out_path(args, f"sweep.{args.format}"))
    print(f"{len(reports)} reports -> {path}")


COMMANDS = {
    "mesh": (cmd_mesh, "compile a scenario mesh"),
    "bdmatrix": (cmd_bdmatrix, "boundary distance matrix as CSV"),
    "embed": (cmd_embed, "distance-like coordinates as CSV"),
    "santalo": (cmd_santalo, "volume from exit lengths, with the per-ray dump"),
    "audit": (cmd_audit, "check the three hypotheses"),
    "ghbound": (cmd_ghbound, "Gromov-Hausdorff certificate as JSON"),
    "experiment": (cmd_experiment, "full pipeline, one report"),
    "sweep": (cmd_sweep, "full pipeline over a parameter family"),
}


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file with run parameters")
    common.add_argument("--out", default=".", help="output directory (default: .)")
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--seed", type=int)
    common.add_argument("--threads", type=int)
    common.add_argument("--kind", help="scenario kind")
    common.add_argument("--param", action="append", metavar="KEY=VALUE", help="scenario parameter")
    common.add_argument("--h", type=float)
    common.add_argument("--m", type=int)
    common.add_argument("--no-timing", action="store_true", help="leave wall_seconds empty")

    parser = argparse.ArgumentParser(prog="bdrigid", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, helptext) in COMMANDS.items():
        p = sub.add_parser(name, parents=[common], help=helptext)
        if name == "sweep":
            p.add_argument("--sweep-param", help="scenario parameter to vary, e.g. t")
            p.add_argument("--values", help="comma separated values")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        config = load_config(args)
        COMMANDS[args.command][0](args, config)
    except StageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL if isinstance(exc.cause, NumericalError) else EXIT_PRECONDITION
    except PreconditionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    except NumericalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
