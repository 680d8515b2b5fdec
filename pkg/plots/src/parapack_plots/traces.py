"""Parsers for the CSV files the parapack tools write.

Two file shapes are understood: simulation traces
(``t,z_1..z_n,w_1..w_n,i_1..i_n,v`` with optional estimator columns
``zhat_1..zhat_n,what_1..what_n,e_norm,v_err``) and the OCV curve
sample (``z,ocv,docv``). Column counts are validated against the
header so a truncated or reordered file fails loudly instead of
producing a wrong figure.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np


class PlotDataError(Exception):
    """The input file does not match the documented CSV contract."""


@dataclass(frozen=True)
class TraceData:
    """One simulation trace; estimator fields are None for plain runs."""

    n: int
    t: np.ndarray
    soc: np.ndarray
    relax: np.ndarray
    currents: np.ndarray
    voltage: np.ndarray
    est_soc: np.ndarray | None
    est_relax: np.ndarray | None
    error_norm: np.ndarray | None
    voltage_error: np.ndarray | None

    @property
    def has_estimates(self) -> bool:
        return self.est_soc is not None


@dataclass(frozen=True)
class OcvCurveData:
    z: np.ndarray
    ocv: np.ndarray
    docv: np.ndarray


def _read_csv(path) -> tuple[list[str], np.ndarray]:
    path = Path(path)
    try:
        with open(path, "r", encoding="utf-8") as fh:
            header = fh.readline().strip()
            with warnings.catch_warnings():
                # A header-only file is reported below, not warned about.
                warnings.simplefilter("ignore", UserWarning)
                data = np.loadtxt(fh, delimiter=",", ndmin=2)
    except OSError as exc:
        raise PlotDataError("cannot read %s: %s" % (path, exc)) from exc
    except ValueError as exc:
        raise PlotDataError("%s is not numeric CSV: %s" % (path, exc)) from exc
    if not header:
        raise PlotDataError("%s is empty" % path)
    columns = header.split(",")
    if data.size == 0:
        raise PlotDataError("%s has a header but no rows" % path)
    if data.shape[1] != len(columns):
        raise PlotDataError(
            "%s: %d header columns but %d data columns"
            % (path, len(columns), data.shape[1])
        )
    return columns, data


def _expected_trace_header(n: int, with_estimates: bool) -> list[str]:
    cols = ["t"]
    cols += ["z_%d" % (k + 1) for k in range(n)]
    cols += ["w_%d" % (k + 1) for k in range(n)]
    cols += ["i_%d" % (k + 1) for k in range(n)]
    cols.append("v")
    if with_estimates:
        cols += ["zhat_%d" % (k + 1) for k in range(n)]
        cols += ["what_%d" % (k + 1) for k in range(n)]
        cols += ["e_norm", "v_err"]
    return cols


def load_trace(path) -> TraceData:
    """Parse a simulation or estimation trace CSV."""
    columns, data = _read_csv(path)
    n = sum(1 for c in columns if c.startswith("z_"))
    if n < 2:
        raise PlotDataError(
            "%s: expected a pack trace with at least 2 cells, found %d "
            "SOC columns" % (path, n)
        )
    with_estimates = len(columns) > 3 * n + 2
    expected = _expected_trace_header(n, with_estimates)
    if columns != expected:
        raise PlotDataError(
            "%s: header %s does not match the trace contract for %d cells"
            % (path, ",".join(columns), n)
        )

    soc = data[:, 1:1 + n]
    relax = data[:, 1 + n:1 + 2 * n]
    currents = data[:, 1 + 2 * n:1 + 3 * n]
    voltage = data[:, 1 + 3 * n]
    est_soc = est_relax = error_norm = voltage_error = None
    if with_estimates:
        base = 2 + 3 * n
        est_soc = data[:, base:base + n]
        est_relax = data[:, base + n:base + 2 * n]
        error_norm = data[:, base + 2 * n]
        voltage_error = data[:, base + 2 * n + 1]
    return TraceData(
        n=n, t=data[:, 0], soc=soc, relax=relax, currents=currents,
        voltage=voltage, est_soc=est_soc, est_relax=est_relax,
        error_norm=error_norm, voltage_error=voltage_error,
    )


def load_ocv_curve(path) -> OcvCurveData:
    """Parse the OCV curve sample the verify command writes."""
    columns, data = _read_csv(path)
    if columns != ["z", "ocv", "docv"]:
        raise PlotDataError(
            "%s: header %s does not match the OCV curve contract"
            % (path, ",".join(columns))
        )
    return OcvCurveData(z=data[:, 0], ocv=data[:, 1], docv=data[:, 2])
