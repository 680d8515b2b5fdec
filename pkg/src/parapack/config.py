"""JSON configuration loading for the command-line tools.

Two document types are published: a run configuration (pack, OCV
curve, scenario) and a certificate candidate. Both carry a
schema_version and reject unknown keys so silent typos cannot change a
run. Schema validation happens first; semantic checks (lengths against
the cell count, monotone table times) run on the parsed values.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import jsonschema
import numpy as np

from .errors import ConfigError, ParameterError
from .estimator import LmiCandidate
from .ocv import OcvCurve
from .pack_model import CellParams, PackConfig, assemble_state
from .simulator import CurrentProfile, Disturbance

_POSITIVE = {"type": "number", "exclusiveMinimum": 0}
_NUMBER = {"type": "number"}

_PROFILE_SCHEMA = {
    "oneOf": [
        {
            "type": "object",
            "additionalProperties": False,
            "required": ["kind", "amplitude"],
            "properties": {
                "kind": {"const": "constant"},
                "amplitude": _NUMBER,
            },
        },
        {
            "type": "object",
            "additionalProperties": False,
            "required": ["kind", "amplitude", "frequency"],
            "properties": {
                "kind": {"const": "sine"},
                "amplitude": _NUMBER,
                "frequency": _POSITIVE,
                "offset": _NUMBER,
            },
        },
        {
            "type": "object",
            "additionalProperties": False,
            "required": ["kind", "points"],
            "properties": {
                "kind": {"const": "table"},
                "points": {
                    "type": "array",
                    "minItems": 2,
                    "items": {
                        "type": "array",
                        "minItems": 2,
                        "maxItems": 2,
                        "items": _NUMBER,
                    },
                },
            },
        },
    ]
}

_DISTURBANCE_SCHEMA = {
    "oneOf": [
        {
            "type": "object",
            "additionalProperties": False,
            "required": ["kind"],
            "properties": {"kind": {"const": "none"}},
        },
        {
            "type": "object",
            "additionalProperties": False,
            "required": ["kind"],
            "properties": {
                "kind": {"const": "scaled-sine"},
                "current_frequency": _POSITIVE,
                "voltage_frequency": _POSITIVE,
            },
        },
        {
            "type": "object",
            "additionalProperties": False,
            "required": ["kind", "current_amplitude", "voltage_amplitude",
                          "start", "stop"],
            "properties": {
                "kind": {"const": "pulse"},
                "current_amplitude": _NUMBER,
                "voltage_amplitude": _NUMBER,
                "start": {"type": "number", "minimum": 0},
                "stop": _POSITIVE,
            },
        },
    ]
}

CONFIG_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "additionalProperties": False,
    "required": ["schema_version", "pack", "ocv", "sim"],
    "properties": {
        "schema_version": {"const": 1},
        "comment": {"type": "string"},
        "pack": {
            "type": "object",
            "additionalProperties": False,
            "required": ["cells"],
            "properties": {
                "cells": {
                    "type": "array",
                    "minItems": 2,
                    "items": {
                        "type": "object",
                        "additionalProperties": False,
                        "required": ["r0", "r1", "c1", "q"],
                        "properties": {
                            "r0": _POSITIVE,
                            "r1": _POSITIVE,
                            "c1": _POSITIVE,
                            "q": _POSITIVE,
                        },
                    },
                }
            },
        },
        "ocv": {
            "type": "object",
            "additionalProperties": False,
            "required": ["coefficients"],
            "properties": {
                "coefficients": {
                    "type": "array",
                    "minItems": 2,
                    "items": _NUMBER,
                }
            },
        },
        "sim": {
            "type": "object",
            "additionalProperties": False,
            "required": ["t_end", "initial_soc", "profile"],
            "properties": {
                "t_end": _POSITIVE,
                "dt": _POSITIVE,
                "time_unit": {"enum": ["seconds", "hours"]},
                "initial_soc": {
                    "type": "array",
                    "minItems": 2,
                    "items": {"type": "number", "minimum": 0, "maximum": 1},
                },
                "initial_relaxation": {
                    "type": "array",
                    "minItems": 2,
                    "items": _NUMBER,
                },
                "profile": _PROFILE_SCHEMA,
            },
        },
        "estimator": {
            "type": "object",
            "additionalProperties": False,
            "required": ["kappa"],
            "properties": {
                "kappa": {
                    "type": "array",
                    "minItems": 1,
                    "items": {
                        "type": "array",
                        "minItems": 2,
                        "maxItems": 2,
                        "items": _NUMBER,
                    },
                },
                "initial_soc_offset": _NUMBER,
                "initial_relaxation_offset": _NUMBER,
                "disturbance": _DISTURBANCE_SCHEMA,
            },
        },
        "output": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "directory": {"type": "string", "minLength": 1},
                "trace": {"type": "string", "minLength": 1},
                "report": {"type": "string", "minLength": 1},
            },
        },
    },
}

CANDIDATE_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "additionalProperties": False,
    "required": ["schema_version", "P", "Q", "gamma", "tau"],
    "properties": {
        "schema_version": {"const": 1},
        "comment": {"type": "string"},
        "P": {
            "type": "array",
            "minItems": 2,
            "items": {"type": "array", "minItems": 2, "items": _NUMBER},
        },
        "Q": {
            "type": "array",
            "minItems": 2,
            "items": {"type": "array", "minItems": 1, "items": _NUMBER},
        },
        "gamma": _NUMBER,
        "tau": {"type": "array", "minItems": 1, "items": _NUMBER},
    },
}


@dataclass(frozen=True)
class EstimatorSettings:
    kappa: np.ndarray
    soc_offset: float
    relaxation_offset: float
    disturbance: Disturbance


@dataclass(frozen=True)
class OutputSettings:
    directory: str
    trace: str
    report: str


@dataclass(frozen=True)
class RunConfig:
    pack: PackConfig
    profile: CurrentProfile
    t_end: float
    dt: float
    time_unit: str
    x0: np.ndarray
    estimator: EstimatorSettings | None
    output: OutputSettings


def _load_json(path) -> dict:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError("cannot read %s: %s" % (path, exc)) from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError("%s is not valid JSON: %s" % (path, exc)) from exc


def _validate(doc: dict, schema: dict, path) -> None:
    try:
        jsonschema.validate(doc, schema)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError("%s: %s (at %s)" % (path, exc.message, where)) from exc


def _build_profile(spec: dict) -> CurrentProfile:
    kind = spec["kind"]
    if kind == "constant":
        return CurrentProfile.constant(spec["amplitude"])
    if kind == "sine":
        return CurrentProfile.sine(spec["amplitude"], spec["frequency"],
                                   spec.get("offset", 0.0))
    points = np.asarray(spec["points"], dtype=float)
    return CurrentProfile.table(points[:, 0], points[:, 1])


def _build_disturbance(spec: dict | None, profile: CurrentProfile) -> Disturbance:
    if spec is None or spec["kind"] == "none":
        return Disturbance.none()
    if spec["kind"] == "scaled-sine":
        return Disturbance.scaled_sine(
            profile,
            current_frequency=spec.get("current_frequency", 1.0),
            voltage_frequency=spec.get("voltage_frequency", 0.5),
        )
    return Disturbance.pulse(spec["current_amplitude"], spec["voltage_amplitude"],
                             spec["start"], spec["stop"])


def load_run_config(path) -> RunConfig:
    """Parse and validate a run configuration file."""
    doc = _load_json(path)
    _validate(doc, CONFIG_SCHEMA, path)
    try:
        cells = tuple(
            CellParams(c["r0"], c["r1"], c["c1"], c["q"])
            for c in doc["pack"]["cells"]
        )
        curve = OcvCurve(tuple(doc["ocv"]["coefficients"]))
        pack = PackConfig(cells=cells, ocv=curve)
    except ParameterError as exc:
        raise ConfigError("%s: %s" % (path, exc)) from exc
    n = pack.n

    sim = doc["sim"]
    soc = np.asarray(sim["initial_soc"], dtype=float)
    if soc.size != n:
        raise ConfigError(
            "%s: initial_soc has %d entries for %d cells" % (path, soc.size, n)
        )
    relax = np.asarray(sim.get("initial_relaxation", np.zeros(n)), dtype=float)
    if relax.size != n:
        raise ConfigError(
            "%s: initial_relaxation has %d entries for %d cells"
            % (path, relax.size, n)
        )
    try:
        profile = _build_profile(sim["profile"])
    except ParameterError as exc:
        raise ConfigError("%s: %s" % (path, exc)) from exc

    est = None
    if "estimator" in doc:
        spec = doc["estimator"]
        kappa = np.asarray(spec["kappa"], dtype=float)
        if kappa.shape == (1, 2):
            kappa = np.tile(kappa, (n, 1))
        if kappa.shape != (n, 2):
            raise ConfigError(
                "%s: kappa needs 1 or %d gain pairs, got %d"
                % (path, n, kappa.shape[0])
            )
        try:
            disturbance = _build_disturbance(spec.get("disturbance"), profile)
        except ParameterError as exc:
            raise ConfigError("%s: %s" % (path, exc)) from exc
        est = EstimatorSettings(
            kappa=kappa,
            soc_offset=float(spec.get("initial_soc_offset", 0.0)),
            relaxation_offset=float(spec.get("initial_relaxation_offset", 0.0)),
            disturbance=disturbance,
        )

    out = doc.get("output", {})
    output = OutputSettings(
        directory=out.get("directory", "out"),
        trace=out.get("trace", "trace.csv"),
        report=out.get("report", "report.json"),
    )
    return RunConfig(
        pack=pack,
        profile=profile,
        t_end=float(sim["t_end"]),
        dt=float(sim.get("dt", 0.1)),
        time_unit=sim.get("time_unit", "seconds"),
        x0=assemble_state(soc, relax),
        estimator=est,
        output=output,
    )


def load_lmi_candidate(path, n: int) -> LmiCandidate:
    """Parse and validate a certificate candidate file."""
    doc = _load_json(path)
    _validate(doc, CANDIDATE_SCHEMA, path)
    try:
        return LmiCandidate.from_arrays(doc["P"], doc["Q"], doc["gamma"],
                                        doc["tau"], n)
    except ParameterError as exc:
        raise ConfigError("%s: %s" % (path, exc)) from exc
