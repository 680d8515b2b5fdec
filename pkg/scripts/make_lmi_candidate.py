"""Synthesize the shipped energy-certificate candidate.

Solves the semidefinite program

    minimize    gamma
    subject to  P >= I, tau >= 0, gamma >= 0,
                certificate_matrix(P, Q, gamma, tau) <= -margin * I

for the reference three-cell pack and writes the solution to
configs/lmi_candidate.json. Requires cvxpy with an SDP-capable solver;
the package itself never needs one, it only checks candidates.

Run from the repository root:  python3 scripts/make_lmi_candidate.py
"""

import json
import sys
from pathlib import Path

import numpy as np

import parapack as pp

MARGIN = 1e-4


def reference_model() -> pp.PackModel:
    cfg = pp.load_run_config(Path(__file__).resolve().parent.parent
                             / "configs" / "charge.json")
    return pp.build_pack_model(cfg.pack)


def synthesize(model: pp.PackModel):
    import cvxpy as cp

    n = model.n
    lo = model.slope_bounds.lower
    hi = model.slope_bounds.upper
    zc = model.Z.T

    p = cp.Variable((2 * n, 2 * n), symmetric=True)
    q = cp.Variable((2 * n, n))
    gamma = cp.Variable(nonneg=True)
    tau = cp.Variable(n, nonneg=True)

    top_left = p @ model.A + q @ model.C
    top_mid = p @ model.B_ocv + q @ model.D_ocv
    zero_rows = np.zeros((3 * n, 5 * n))
    m = cp.bmat([[top_left, top_mid, p]])
    m = cp.vstack([m, zero_rows])
    m = m + cp.vstack([
        np.zeros((3 * n, 5 * n)),
        cp.hstack([np.zeros((2 * n, 3 * n)), -0.5 * gamma * np.eye(2 * n)]),
    ])
    sym = m + m.T

    omega = cp.bmat([
        [-lo * hi * (zc @ cp.diag(tau) @ zc.T),
         0.5 * (lo + hi) * (zc @ cp.diag(tau)),
         np.zeros((2 * n, 2 * n))],
        [0.5 * (lo + hi) * (cp.diag(tau) @ zc.T),
         -cp.diag(tau),
         np.zeros((n, 2 * n))],
        [np.zeros((2 * n, 2 * n)), np.zeros((2 * n, n)),
         np.zeros((2 * n, 2 * n))],
    ])

    constraints = [
        p >> np.eye(2 * n),
        sym + omega << -MARGIN * np.eye(5 * n),
    ]
    problem = cp.Problem(cp.Minimize(gamma), constraints)
    problem.solve(solver=cp.CLARABEL)
    if problem.status not in ("optimal", "optimal_inaccurate"):
        raise RuntimeError("solver returned status %s" % problem.status)
    return p.value, q.value, float(gamma.value), tau.value


def main() -> int:
    model = reference_model()
    p, q, gamma, tau = synthesize(model)
    p = 0.5 * (p + p.T)

    candidate = pp.LmiCandidate.from_arrays(p, q, gamma, tau, model.n)
    report = pp.verify_energy_certificate(model, candidate)
    if not report.accepted:
        raise RuntimeError("synthesized candidate was rejected: %s" % report.reason)
    print("candidate accepted: max eigenvalue %.6e, gamma %.6f"
          % (report.max_eigenvalue, gamma))

    payload = {
        "schema_version": 1,
        "comment": "Energy-certificate candidate for the reference three-cell "
                   "pack, synthesized by scripts/make_lmi_candidate.py.",
        "P": p.tolist(),
        "Q": q.tolist(),
        "gamma": gamma,
        "tau": tau.tolist(),
    }
    out = Path(__file__).resolve().parent.parent / "configs" / "lmi_candidate.json"
    with open(out, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")
    print("wrote %s" % out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
