"""Shared fixtures: the reference three-cell pack and its long traces.

The expensive simulations are session-scoped so the acceptance tests
and the unit tests share one run each. Fixtures that time a run return
(result, seconds).
"""

from __future__ import annotations

import time
from pathlib import Path

import numpy as np
import pytest

import parapack as pp

REPO_ROOT = Path(__file__).resolve().parents[1]

REFERENCE_COEFFS = (3.0896, 1.1627, -2.3821, 2.1870, -0.5444, -0.1939, 0.0582)
REFERENCE_CELLS = (
    {"r0": 0.0040, "r1": 0.0025, "c1": 1500.0, "q": 1.7},
    {"r0": 0.0035, "r1": 0.0015, "c1": 2000.0, "q": 2.0},
    {"r0": 0.00045, "r1": 0.0035, "c1": 1000.0, "q": 2.3},
)
CHARGE_CURRENT = 1.4e-3


@pytest.fixture(scope="session")
def reference_curve() -> pp.OcvCurve:
    return pp.OcvCurve(REFERENCE_COEFFS)


@pytest.fixture(scope="session")
def reference_pack(reference_curve) -> pp.PackConfig:
    cells = tuple(pp.CellParams(**c) for c in REFERENCE_CELLS)
    return pp.PackConfig(cells=cells, ocv=reference_curve)


@pytest.fixture(scope="session")
def reference_model(reference_pack) -> pp.PackModel:
    return pp.build_pack_model(reference_pack)


@pytest.fixture(scope="session")
def shipped_candidate() -> pp.LmiCandidate:
    return pp.load_lmi_candidate(REPO_ROOT / "configs" / "lmi_candidate.json", 3)


def make_run_doc() -> dict:
    """A fresh, valid run-configuration document for the reference pack."""
    return {
        "schema_version": 1,
        "pack": {"cells": [dict(c) for c in REFERENCE_CELLS]},
        "ocv": {"coefficients": list(REFERENCE_COEFFS)},
        "sim": {
            "t_end": 2.0,
            "dt": 0.002,
            "initial_soc": [0.05, 0.10, 0.15],
            "initial_relaxation": [0.0, 0.0, 0.0],
            "profile": {"kind": "constant", "amplitude": CHARGE_CURRENT},
        },
    }


@pytest.fixture(scope="session")
def charge_profile() -> pp.CurrentProfile:
    return pp.CurrentProfile.constant(CHARGE_CURRENT)


@pytest.fixture(scope="session")
def charge_x0(reference_model) -> np.ndarray:
    return pp.assemble_state([0.05, 0.10, 0.15], np.zeros(reference_model.n))


@pytest.fixture(scope="session")
def charge_trace(reference_model, charge_profile, charge_x0):
    """Constant-current charge run over the equalization transient."""
    start = time.perf_counter()
    trace = pp.integrate(reference_model, charge_x0, charge_profile,
                         t_end=50.0, dt=0.002)
    return trace, time.perf_counter() - start


@pytest.fixture(scope="session")
def reference_gain(reference_model) -> pp.ObserverGain:
    kappa = np.array([[-0.1, -0.1]] * reference_model.n)
    return pp.design_observer_gain(reference_model, kappa)


@pytest.fixture(scope="session")
def disturbed_estimator_trace(reference_model, reference_gain, charge_profile,
                              charge_x0):
    """Observer co-simulation with current and voltage disturbances
    whose envelope follows the pack current."""
    xhat0 = charge_x0.copy()
    xhat0[0::2] -= 0.05
    disturbance = pp.Disturbance.scaled_sine(charge_profile)
    start = time.perf_counter()
    trace = pp.integrate_with_observer(
        reference_model, reference_gain, charge_x0, xhat0, charge_profile,
        disturbance, t_end=100.0, dt=0.002,
    )
    return trace, time.perf_counter() - start


@pytest.fixture(scope="session")
def undisturbed_estimator_trace(reference_model, reference_gain,
                                charge_profile, charge_x0):
    """Long disturbance-free co-simulation; the error must vanish."""
    xhat0 = charge_x0.copy()
    xhat0[0::2] -= 0.05
    start = time.perf_counter()
    trace = pp.integrate_with_observer(
        reference_model, reference_gain, charge_x0, xhat0, charge_profile,
        None, t_end=400.0, dt=0.004,
    )
    return trace, time.perf_counter() - start
