"""Observer design and verification for the parallel pack.

The estimator injects the terminal-voltage innovation into each cell's
state through a per-cell gain pair kappa = (k_soc, k_relax). Because
the pack exposes a single voltage, the voltage feedthrough matrix
I + r0 * pot_gain is a rank-one averaging projection (every row equals
the current-split fractions); the injection matrix built here composes
the per-cell gains with that projection, which on every realizable
innovation acts exactly as "feed the scalar innovation through
kappa_k".

Two acceptance routes are provided:

* a per-cell quadratic gate on the reduced error dynamics, exact over
  the whole OCV slope interval because the test polynomial's
  coefficients are affine in the slope; and
* a quadratic-storage certificate with a sector multiplier for a
  candidate (P, Q, gamma, tau), checked as a single symmetric
  eigenvalue condition, which also bounds the estimation-error energy
  against the disturbance energy.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import GainDesignError, ModelConstructionError, ParameterError
from .ocv import OcvCurve
from .pack_model import CellParams, PackModel


def _as_kappa_blocks(kappa, n: int) -> np.ndarray:
    kb = np.asarray(kappa, dtype=float)
    if kb.shape == (2,):
        kb = np.tile(kb, (n, 1))
    if kb.shape != (n, 2) or not np.all(np.isfinite(kb)):
        raise ParameterError(
            "kappa must be a finite (2,) pair or (%d, 2) array, got %s"
            % (n, kb.shape)
        )
    return kb


def quadratic_coefficients(kappa_block, cell: CellParams, delta: float):
    """Trace and determinant of the reduced error matrix at slope delta.

    The reduced per-cell error system is stable at a fixed slope iff
    the trace is negative and the determinant positive.
    """
    k1, k2 = float(kappa_block[0]), float(kappa_block[1])
    leak = 1.0 / (cell.r1 * cell.c1)
    trace = k1 * delta + k2 - leak
    det = -k1 * delta * leak
    return trace, det


def cell_error_matrix(kappa_block, cell: CellParams, delta: float) -> np.ndarray:
    """Reduced 2x2 error dynamics of one cell at a fixed OCV slope."""
    k1, k2 = float(kappa_block[0]), float(kappa_block[1])
    leak = 1.0 / (cell.r1 * cell.c1)
    return np.array([
        [k1 * delta, k1],
        [k2 * delta, k2 - leak],
    ])


def max_real_eigenvalue(kappa_block, cell: CellParams, deltas) -> float:
    """Largest real part of the reduced error eigenvalues over a set of
    slopes, from the quadratic characteristic polynomial."""
    worst = -np.inf
    for delta in np.atleast_1d(np.asarray(deltas, dtype=float)):
        trace, det = quadratic_coefficients(kappa_block, cell, float(delta))
        disc = trace * trace - 4.0 * det
        if disc >= 0.0:
            top = 0.5 * (trace + np.sqrt(disc))
        else:
            top = 0.5 * trace
        worst = max(worst, top)
    return float(worst)


@dataclass(frozen=True)
class CellGate:
    """Stability-gate values for one cell at both slope endpoints."""

    stable: bool
    trace_at_lower: float
    trace_at_upper: float
    det_at_lower: float
    det_at_upper: float


@dataclass(frozen=True)
class StabilityReport:
    stable: bool
    cells: tuple[CellGate, ...]


def check_kappa_stability(model: PackModel, kappa, margin: float = 1e-12) -> StabilityReport:
    """Gate a per-cell gain over the full OCV slope interval.

    Both gate quantities are affine in the slope, so checking the two
    interval endpoints decides the whole interval exactly.
    """
    kb = _as_kappa_blocks(kappa, model.n)
    lo = model.slope_bounds.lower
    hi = model.slope_bounds.upper
    gates = []
    for k, cell in enumerate(model.config.cells):
        t_lo, d_lo = quadratic_coefficients(kb[k], cell, lo)
        t_hi, d_hi = quadratic_coefficients(kb[k], cell, hi)
        stable = (t_lo < -margin and t_hi < -margin
                  and d_lo > margin and d_hi > margin)
        gates.append(CellGate(stable, t_lo, t_hi, d_lo, d_hi))
    return StabilityReport(all(g.stable for g in gates), tuple(gates))


def kappa_matrix(kappa, n: int) -> np.ndarray:
    """Stack per-cell gain pairs into the block-diagonal 2n x n form."""
    kb = _as_kappa_blocks(kappa, n)
    mat = np.zeros((2 * n, n))
    for k in range(n):
        mat[2 * k, k] = kb[k, 0]
        mat[2 * k + 1, k] = kb[k, 1]
    return mat


def decoupling_kappa(model: PackModel) -> np.ndarray:
    """The unique per-cell gains that cancel the voltage coupling.

    With kappa_k = -(1/(r0_k q_k), 1/(r0_k c1_k)) the injected
    innovation cancels the equalization currents in the error dynamics
    exactly, leaving n independent 2x2 error systems.
    """
    return np.column_stack([
        -1.0 / (model.r0 * model.q),
        -1.0 / (model.r0 * model.c1),
    ])


@dataclass(frozen=True)
class ObserverGain:
    """Injection matrix plus the pieces it was assembled from."""

    K: np.ndarray
    K_mismatch: np.ndarray
    K_innovation: np.ndarray
    kappa: np.ndarray
    gate: StabilityReport


def design_observer_gain(model: PackModel, kappa, force: bool = False) -> ObserverGain:
    """Build the voltage-innovation injection matrix for per-cell gains.

    The voltage feedthrough D = I + r0 * pot_gain is a rank-one
    averaging projection; the gain composes the per-cell pairs with it,
    so K acts on the scalar innovation exactly as the kappa pairs.
    Unless force=True the gains must pass the quadratic stability gate.
    """
    n = model.n
    kb = _as_kappa_blocks(kappa, n)
    gate = check_kappa_stability(model, kb)
    if not gate.stable and not force:
        bad = [k for k, g in enumerate(gate.cells) if not g.stable]
        raise GainDesignError(
            "kappa fails the quadratic stability gate for cell(s) %s over "
            "the OCV slope interval [%.4g, %.4g]"
            % (bad, model.slope_bounds.lower, model.slope_bounds.upper)
        )

    d = model.D_ocv
    projection = np.outer(np.ones(n), model.split)
    if np.max(np.abs(d - projection)) > 1e-9:
        raise ModelConstructionError(
            "voltage feedthrough is neither invertible nor the expected "
            "averaging projection; cannot construct the injection matrix"
        )

    kmat = kappa_matrix(kb, n)
    k_innovation = kmat @ d
    k_mismatch = -(model.B_in @ model.pot_gain) @ d
    k_full = k_mismatch + k_innovation

    # On the realizable innovation direction (all rows equal) the
    # closed-loop OCV-mismatch gain must collapse to the kappa blocks.
    ones = np.ones(n)
    lhs = (model.B_ocv + k_full @ model.D_ocv) @ ones
    rhs = kmat @ ones
    scale = max(1.0, float(np.max(np.abs(rhs))))
    if np.max(np.abs(lhs - rhs)) > 1e-9 * scale:
        raise ModelConstructionError(
            "gain algebra check failed on the innovation direction"
        )

    for arr in (k_full, k_mismatch, k_innovation, kb):
        arr.setflags(write=False)
    return ObserverGain(K=k_full, K_mismatch=k_mismatch,
                        K_innovation=k_innovation, kappa=kb, gate=gate)


def error_dynamics_matrix(model: PackModel, gain, delta) -> np.ndarray:
    """Linearized estimation-error dynamics at fixed OCV slopes.

    delta may be a scalar or one slope per cell.
    """
    k_gain = np.asarray(getattr(gain, "K", gain), dtype=float)
    dvec = np.broadcast_to(np.asarray(delta, dtype=float), (model.n,))
    return (model.A + k_gain @ model.C
            + (model.B_ocv + k_gain @ model.D_ocv) @ np.diag(dvec) @ model.Z)


def error_disturbance_gains(model: PackModel, gain):
    """Input vectors mapping the current and voltage disturbances into
    the estimation-error dynamics."""
    k_gain = np.asarray(getattr(gain, "K", gain), dtype=float)
    vec_di = model.B_I + k_gain @ model.D_I
    vec_dv = k_gain @ np.ones(model.n)
    return vec_di, vec_dv


@dataclass(frozen=True)
class SectorCheck:
    """Result of sampling OCV secants against the slope interval."""

    ok: bool
    lowest: float
    highest: float
    worst_pair: tuple[float, float]


def check_secant_sector(curve: OcvCurve, lower: float, upper: float,
                        pairs: int = 2000, pad: float = 1e-9,
                        seed: int = 0) -> SectorCheck:
    """Sample SOC pairs and verify every OCV secant slope lies in
    [lower - pad, upper + pad]."""
    rng = np.random.default_rng(seed)
    lowest, highest = np.inf, -np.inf
    worst = (0.0, 0.0)
    count = 0
    while count < pairs:
        z1, z2 = rng.uniform(0.0, 1.0, size=2)
        if abs(z2 - z1) < 1e-9:
            continue
        count += 1
        secant = (curve.eval(z2) - curve.eval(z1)) / (z2 - z1)
        if secant < lowest:
            lowest, worst = secant, (z1, z2)
        if secant > highest:
            highest = secant
    ok = bool(lowest >= lower - pad and highest <= upper + pad)
    return SectorCheck(ok=ok, lowest=float(lowest), highest=float(highest),
                       worst_pair=(float(worst[0]), float(worst[1])))


@dataclass(frozen=True)
class LmiCandidate:
    """Certificate candidate: storage matrix P, gain surrogate Q,
    energy gain gamma and the per-cell sector multipliers tau."""

    P: np.ndarray
    Q: np.ndarray
    gamma: float
    tau: np.ndarray

    @classmethod
    def from_arrays(cls, p, q, gamma, tau, n: int) -> "LmiCandidate":
        p = np.asarray(p, dtype=float)
        q = np.asarray(q, dtype=float)
        tau = np.asarray(tau, dtype=float)
        gamma = float(gamma)
        if p.shape != (2 * n, 2 * n):
            raise ParameterError("P must be %dx%d, got %s" % (2 * n, 2 * n, p.shape))
        if q.shape != (2 * n, n):
            raise ParameterError("Q must be %dx%d, got %s" % (2 * n, n, q.shape))
        if tau.shape != (n,):
            raise ParameterError("tau must have %d entries, got %s" % (n, tau.shape))
        if not (np.all(np.isfinite(p)) and np.all(np.isfinite(q))
                and np.all(np.isfinite(tau)) and np.isfinite(gamma)):
            raise ParameterError("candidate entries must be finite")
        scale = max(1.0, float(np.max(np.abs(p))))
        if np.max(np.abs(p - p.T)) > 1e-9 * scale:
            raise ParameterError("P must be symmetric")
        p = 0.5 * (p + p.T)
        for arr in (p, q, tau):
            arr.setflags(write=False)
        return cls(P=p, Q=q, gamma=gamma, tau=tau)


def build_certificate_matrix(model: PackModel, candidate: LmiCandidate) -> np.ndarray:
    """Assemble the symmetric matrix whose negativity certifies the
    energy bound.

    The quadratic form acts on stacked (error, OCV-mismatch,
    disturbance) vectors, sizes (2n, n, 2n); the sector term confines
    the mismatch between the extreme OCV slopes with one multiplier per
    cell.
    """
    n = model.n
    lo = model.slope_bounds.lower
    hi = model.slope_bounds.upper
    n1, n2, n3 = 2 * n, n, 2 * n
    size = n1 + n2 + n3

    m = np.zeros((size, size))
    m[:n1, :n1] = candidate.P @ model.A + candidate.Q @ model.C
    m[:n1, n1:n1 + n2] = candidate.P @ model.B_ocv + candidate.Q @ model.D_ocv
    m[:n1, n1 + n2:] = candidate.P
    m[n1 + n2:, n1 + n2:] = -0.5 * candidate.gamma * np.eye(n3)
    sym = m + m.T

    zc = model.Z.T
    tau = np.diag(candidate.tau)
    sym[:n1, :n1] += -lo * hi * (zc @ tau @ zc.T)
    cross = 0.5 * (lo + hi) * (zc @ tau)
    sym[:n1, n1:n1 + n2] += cross
    sym[n1:n1 + n2, :n1] += cross.T
    sym[n1:n1 + n2, n1:n1 + n2] += -tau
    return sym


@dataclass(frozen=True)
class CertificateReport:
    accepted: bool
    reason: str | None
    max_eigenvalue: float | None
    p_min_eigenvalue: float
    gamma: float
    implied_gain: np.ndarray | None


def verify_energy_certificate(model: PackModel, candidate: LmiCandidate,
                              eig_margin: float = 1e-10) -> CertificateReport:
    """Check a candidate certificate.

    Accepts iff P is positive definite, tau and gamma are nonnegative
    and the assembled certificate matrix is negative definite with
    margin eig_margin. When accepted, the bound

        e(t)' P e(t) <= e(0)' P e(0) + gamma * integral(|d|^2)

    holds along every trajectory whose SOC estimates stay in range, with
    d the stacked disturbance input of the error dynamics. The implied
    injection matrix is P^-1 Q.
    """
    p_eigs = np.linalg.eigvalsh(candidate.P)
    p_min = float(p_eigs[0])
    scale = max(1.0, float(p_eigs[-1]))
    if p_min <= 1e-12 * scale:
        return CertificateReport(False, "storage matrix is not positive definite",
                                 None, p_min, candidate.gamma, None)
    if np.any(candidate.tau < 0.0):
        return CertificateReport(False, "sector multipliers must be nonnegative",
                                 None, p_min, candidate.gamma, None)
    if candidate.gamma < 0.0:
        return CertificateReport(False, "energy gain must be nonnegative",
                                 None, p_min, candidate.gamma, None)

    implied = np.linalg.solve(candidate.P, candidate.Q)
    implied.setflags(write=False)
    big = build_certificate_matrix(model, candidate)
    max_eig = float(np.linalg.eigvalsh(big)[-1])
    if max_eig >= -eig_margin:
        return CertificateReport(False,
                                 "certificate matrix is not negative definite "
                                 "(max eigenvalue %.3e)" % max_eig,
                                 max_eig, p_min, candidate.gamma, implied)
    return CertificateReport(True, None, max_eig, p_min, candidate.gamma, implied)


def energy_balance(model: PackModel, candidate: LmiCandidate, trace,
                   disturbance) -> dict:
    """Evaluate the certified energy inequality along a simulated trace.

    Uses the candidate's implied gain for the disturbance input vectors
    and returns the stored energy V(t) - V(0), the disturbance energy
    budget gamma * integral(|d|^2), and their largest difference
    (positive values mean the bound was violated).
    """
    if trace.est_states is None:
        raise ParameterError("trace has no estimator signals")
    k_gain = np.linalg.solve(candidate.P, candidate.Q)
    vec_di, vec_dv = error_disturbance_gains(model, k_gain)
    err = trace.states - trace.est_states
    v_stored = np.einsum("ij,jk,ik->i", err, candidate.P, err)
    lhs = v_stored - v_stored[0]

    di = np.asarray(disturbance.d_current(trace.t), dtype=float)
    dv = np.asarray(disturbance.d_voltage(trace.t), dtype=float)
    d_rows = np.outer(di, vec_di) + np.outer(dv, vec_dv)
    power = np.sum(d_rows * d_rows, axis=1)
    steps = 0.5 * (power[1:] + power[:-1]) * np.diff(trace.t)
    budget = candidate.gamma * np.concatenate([[0.0], np.cumsum(steps)])
    return {
        "stored": lhs,
        "budget": budget,
        "max_violation": float(np.max(lhs - budget)),
    }
