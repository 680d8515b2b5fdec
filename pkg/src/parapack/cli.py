"""Command-line front end.

Four subcommands share one configuration format: verify (model
self-checks against the independent reference solvers), simulate
(plant-only run), estimate (plant plus observer co-simulation) and lmi
(energy-certificate check of a candidate file). Every command writes a
JSON report; simulate and estimate also write the trace CSV.

Exit codes: 0 success, 1 domain failure (failed check, rejected gain or
certificate, escaped or diverged run), 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import estimator as est_mod
from .config import RunConfig, load_lmi_candidate, load_run_config
from .errors import ConfigError, GainDesignError, ParapackError
from .kirchhoff import (
    branch_voltage_spread,
    jacobi_eigenvalues,
    numeric_inverse,
    reference_branch_currents,
)
from .pack_model import (
    assemble_state,
    branch_currents,
    build_pack_model,
    kirchhoff_matrix,
    soc_part,
    relax_part,
    terminal_voltage,
)
from .simulator import integrate, integrate_with_observer

log = logging.getLogger("parapack")


def _json_ready(value):
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, (np.floating, np.integer, np.bool_)):
        return value.item()
    if isinstance(value, dict):
        return {k: _json_ready(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_ready(v) for v in value]
    return value


def _write_report(path: Path, payload: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(_json_ready(payload), fh, indent=2)
        fh.write("\n")


def _out_dir(cfg: RunConfig, args) -> Path:
    directory = args.out if args.out else cfg.output.directory
    path = Path(directory)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _check(name: str, value: float, tolerance: float) -> dict:
    passed = bool(value <= tolerance)
    return {"name": name, "value": float(value),
            "tolerance": float(tolerance), "passed": passed}


def cmd_verify(args) -> int:
    cfg = load_run_config(args.config)
    model = build_pack_model(cfg.pack)
    n = model.n
    checks = []

    a22 = kirchhoff_matrix(model.r0)
    residual = np.max(np.abs(a22 @ model.kirchhoff_inverse - np.eye(n)))
    checks.append(_check("coupling_inverse_residual", residual, 1e-10))

    reference = numeric_inverse(a22)
    scale = max(1.0, float(np.max(np.abs(reference))))
    diff = np.max(np.abs(model.kirchhoff_inverse - reference))
    checks.append(_check("closed_form_vs_elimination", diff / scale, 1e-9))

    rng = np.random.default_rng(2024)
    worst_current = 0.0
    worst_sum = 0.0
    worst_voltage = 0.0
    for _ in range(100):
        z = rng.uniform(0.0, 1.0, size=n)
        w = rng.uniform(-0.1, 0.1, size=n)
        pack_current = rng.uniform(-5.0, 5.0)
        x = assemble_state(z, w)
        i_model = branch_currents(model, x, pack_current)
        potentials = model.ocv.eval(z) + w
        i_ref = reference_branch_currents(model.r0, potentials, pack_current)
        worst_current = max(worst_current, float(np.max(np.abs(i_model - i_ref))))
        worst_sum = max(worst_sum, abs(float(i_model.sum()) - pack_current))
        worst_voltage = max(worst_voltage,
                            branch_voltage_spread(model.r0, potentials, i_model))
    checks.append(_check("branch_currents_vs_reference", worst_current, 1e-10))
    checks.append(_check("branch_current_sum", worst_sum, 1e-10))
    checks.append(_check("branch_voltage_agreement", worst_voltage, 1e-9))

    rest = assemble_state(np.full(n, 0.5), np.zeros(n))
    v_rest = terminal_voltage(model, rest, 0.0)
    checks.append(_check("terminal_voltage_at_rest",
                         abs(v_rest - model.ocv.eval(0.5)), 1e-12))
    checks.append(_check("split_fraction_sum",
                         abs(float(model.split.sum()) - 1.0), 1e-12))
    checks.append(_check("potential_gain_row_sums",
                         float(np.max(np.abs(model.pot_gain.sum(axis=1)))),
                         1e-10 * max(1.0, float((1.0 / model.r0).sum()))))

    bounds = model.slope_bounds
    sector = est_mod.check_secant_sector(model.ocv, bounds.lower, bounds.upper)
    checks.append({"name": "ocv_secants_within_slope_bounds",
                   "value": [sector.lowest, sector.highest],
                   "tolerance": [bounds.lower - 1e-9, bounds.upper + 1e-9],
                   "passed": sector.ok})

    passed = all(c["passed"] for c in checks)
    out = _out_dir(cfg, args)
    report = {
        "schema_version": 1,
        "command": "verify",
        "passed": passed,
        "cells": n,
        "checks": checks,
        "slope_bounds": {
            "lower": bounds.lower, "upper": bounds.upper,
            "soc_at_lower": bounds.z_at_lower, "soc_at_upper": bounds.z_at_upper,
        },
    }
    _write_report(out / cfg.output.report, report)
    _write_ocv_curve(model, out / "ocv_curve.csv")

    for c in checks:
        print("%-34s %s" % (c["name"], "ok" if c["passed"] else "FAILED"))
    print("verify: %s (report: %s)" % ("pass" if passed else "FAIL",
                                       out / cfg.output.report))
    return 0 if passed else 1


def _write_ocv_curve(model, path: Path, samples: int = 1001) -> None:
    zs = np.linspace(0.0, 1.0, samples)
    ocv = model.ocv.eval(zs)
    slope = model.ocv.slope(zs)
    lines = ["z,ocv,docv"]
    for row in zip(zs, ocv, slope):
        lines.append(",".join(repr(float(v)) for v in row))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines))
        fh.write("\n")


def cmd_simulate(args) -> int:
    cfg = load_run_config(args.config)
    model = build_pack_model(cfg.pack)
    log.info("simulating %d cells for t_end=%g dt=%g", model.n, cfg.t_end, cfg.dt)
    trace = integrate(model, cfg.x0, cfg.profile, cfg.t_end, cfg.dt)
    out = _out_dir(cfg, args)
    trace_path = out / cfg.output.trace
    trace.write_csv(trace_path)
    summary = trace.summary(capacities=model.q)
    report = {
        "schema_version": 1,
        "command": "simulate",
        "passed": not trace.escaped,
        "time_unit": cfg.time_unit,
        "dt": cfg.dt,
        "trace": str(trace_path),
        **summary,
    }
    _write_report(out / cfg.output.report, report)
    status = "escaped SOC guard band at step %s" % trace.escape_step \
        if trace.escaped else "complete"
    print("simulate: %s, %d steps, final SOC %s" % (
        status, summary["steps"],
        ["%.4f" % v for v in summary["final_soc"]]))
    print("trace: %s" % trace_path)
    return 1 if trace.escaped else 0


def cmd_estimate(args) -> int:
    cfg = load_run_config(args.config)
    if cfg.estimator is None:
        raise ConfigError("config %s has no estimator section" % args.config)
    model = build_pack_model(cfg.pack)
    settings = cfg.estimator
    gain = est_mod.design_observer_gain(model, settings.kappa,
                                        force=args.force_gain)

    xhat0 = cfg.x0.copy()
    xhat0[0::2] += settings.soc_offset
    xhat0[1::2] += settings.relaxation_offset
    trace = integrate_with_observer(
        model, gain, cfg.x0, xhat0, cfg.profile, settings.disturbance,
        cfg.t_end, cfg.dt,
    )
    out = _out_dir(cfg, args)
    trace_path = out / cfg.output.trace
    trace.write_csv(trace_path)
    summary = trace.summary(capacities=model.q)

    deltas = np.linspace(model.slope_bounds.lower, model.slope_bounds.upper, 21)
    worst = max(
        float(np.max(np.real(np.linalg.eigvals(
            est_mod.error_dynamics_matrix(model, gain, d)))))
        for d in deltas
    )
    gates = [
        {"cell": k + 1, "stable": g.stable,
         "trace_at_lower": g.trace_at_lower, "trace_at_upper": g.trace_at_upper,
         "det_at_lower": g.det_at_lower, "det_at_upper": g.det_at_upper}
        for k, g in enumerate(gain.gate.cells)
    ]
    report = {
        "schema_version": 1,
        "command": "estimate",
        "passed": not trace.escaped,
        "time_unit": cfg.time_unit,
        "dt": cfg.dt,
        "trace": str(trace_path),
        "kappa": gain.kappa,
        "gain_forced": bool(args.force_gain and not gain.gate.stable),
        "gate": gates,
        "max_error_eigenvalue_over_slopes": worst,
        "disturbance": settings.disturbance.kind,
        **summary,
    }
    _write_report(out / cfg.output.report, report)
    print("estimate: %s, error norm %.3e -> %.3e (peak %.3e)" % (
        "escaped" if trace.escaped else "complete",
        summary["error_norm_initial"], summary["error_norm_final"],
        summary["error_norm_peak"]))
    print("trace: %s" % trace_path)
    return 1 if trace.escaped else 0


def cmd_lmi(args) -> int:
    cfg = load_run_config(args.config)
    model = build_pack_model(cfg.pack)
    candidate = load_lmi_candidate(args.candidate, model.n)
    report = est_mod.verify_energy_certificate(model, candidate)

    oracle_agrees = None
    oracle_max = None
    if report.max_eigenvalue is not None:
        big = est_mod.build_certificate_matrix(model, candidate)
        oracle_max = float(jacobi_eigenvalues(big)[-1])
        oracle_accept = oracle_max < -1e-10
        oracle_agrees = bool(oracle_accept == report.accepted)

    payload = {
        "schema_version": 1,
        "command": "lmi",
        "passed": bool(report.accepted and oracle_agrees is not False),
        "accepted": report.accepted,
        "reason": report.reason,
        "max_eigenvalue": report.max_eigenvalue,
        "max_eigenvalue_jacobi": oracle_max,
        "oracle_agrees": oracle_agrees,
        "p_min_eigenvalue": report.p_min_eigenvalue,
        "gamma": report.gamma,
        "implied_gain": report.implied_gain,
        "slope_bounds": {"lower": model.slope_bounds.lower,
                         "upper": model.slope_bounds.upper},
        "convention": "quadratic form on stacked (error, mismatch, disturbance) "
                      "blocks of sizes (2n, n, 2n); per-cell sector multipliers "
                      "weight all sector terms",
    }
    out = _out_dir(cfg, args)
    _write_report(out / cfg.output.report, payload)
    if report.accepted:
        print("lmi: accepted (max eigenvalue %.3e, gamma %.6g)"
              % (report.max_eigenvalue, report.gamma))
    else:
        print("lmi: rejected: %s" % report.reason)
    if oracle_agrees is False:
        print("lmi: eigenvalue routes disagree (%.3e vs %.3e)"
              % (report.max_eigenvalue, oracle_max), file=sys.stderr)
        return 1
    return 0 if report.accepted else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="parapack",
        description="Model, simulate and verify parallel-connected battery packs.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="run configuration JSON")
    common.add_argument("--out", help="output directory (overrides config)")

    p = sub.add_parser("verify", parents=[common],
                       help="cross-check the model against reference solvers")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("simulate", parents=[common],
                       help="integrate the pack under the configured profile")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("estimate", parents=[common],
                       help="co-simulate the pack and the state estimator")
    p.add_argument("--force-gain", action="store_true",
                   help="run even if kappa fails the stability gate")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("lmi", parents=[common],
                       help="check an energy-certificate candidate")
    p.add_argument("--candidate", required=True,
                   help="certificate candidate JSON")
    p.set_defaults(func=cmd_lmi)
    return parser


def main(argv=None) -> int:
    level = os.environ.get("PARAPACK_LOG", "WARNING").upper()
    if level not in ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"):
        level = "WARNING"
    logging.basicConfig(level=level, stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print("config error: %s" % exc, file=sys.stderr)
        return 2
    except GainDesignError as exc:
        print("gain rejected: %s" % exc, file=sys.stderr)
        return 1
    except ParapackError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
