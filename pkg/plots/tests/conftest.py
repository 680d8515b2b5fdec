"""Hand-written fixture CSVs matching the documented trace contracts."""

import numpy as np
import pytest


def trace_header(n, with_estimates):
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


def write_trace(path, n=3, rows=6, with_estimates=False):
    t = 0.5 * np.arange(rows)
    cells = np.arange(1, n + 1)
    soc = 0.10 + 0.02 * cells[None, :] + 0.001 * t[:, None]
    relax = 0.001 * cells[None, :] * np.exp(-t[:, None])
    currents = 0.3 * cells[None, :] - 0.1 * t[:, None]
    voltage = 3.2 + 0.01 * t
    blocks = [t[:, None], soc, relax, currents, voltage[:, None]]
    if with_estimates:
        est_soc = soc - 0.05 * np.exp(-t[:, None])
        est_relax = relax * 0.9
        err = np.sqrt(np.sum((soc - est_soc) ** 2 + (relax - est_relax) ** 2,
                             axis=1))
        v_err = 0.001 * np.exp(-t)
        blocks += [est_soc, est_relax, err[:, None], v_err[:, None]]
    data = np.hstack(blocks)
    lines = [",".join(trace_header(n, with_estimates))]
    for row in data:
        lines.append(",".join(repr(float(v)) for v in row))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def write_ocv_curve(path, samples=21):
    z = np.linspace(0.0, 1.0, samples)
    ocv = 3.0 + 0.4 * z + 0.1 * z * z
    docv = 0.4 + 0.2 * z
    lines = ["z,ocv,docv"]
    for row in zip(z, ocv, docv):
        lines.append(",".join(repr(float(v)) for v in row))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


@pytest.fixture
def plain_trace_csv(tmp_path):
    return write_trace(tmp_path / "plain.csv", with_estimates=False)


@pytest.fixture
def estimator_trace_csv(tmp_path):
    return write_trace(tmp_path / "est.csv", with_estimates=True)


@pytest.fixture
def ocv_curve_csv(tmp_path):
    return write_ocv_curve(tmp_path / "ocv_curve.csv")
