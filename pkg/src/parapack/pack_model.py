"""State-space model of n cells wired in parallel.

Each cell is an SOC integrator plus one relaxation (RC) state behind a
series resistance; wiring the cells in parallel constrains every branch
to the same terminal voltage while the branch currents sum to the pack
current. Eliminating the currents turns the coupled
differential-algebraic description into an explicit linear state-space
model driven by the pack current and the per-cell open-circuit
voltages.

State layout is interleaved: x = [z_1, w_1, z_2, w_2, ...] with z the
SOC and w the relaxation voltage. Positive pack current charges the
cells.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InternalConsistencyError, ModelConstructionError, ParameterError
from .ocv import OcvCurve, SlopeBounds

# Branch resistances below this are treated as short circuits: the
# current split 1/r_k blows up and the elimination loses all accuracy.
MIN_RESISTANCE = 1e-12


@dataclass(frozen=True)
class CellParams:
    """Physical parameters of one cell.

    r0: series (terminal) resistance, ohm
    r1: resistance of the relaxation RC pair, ohm
    c1: capacitance of the relaxation RC pair, farad
    q:  charge capacity in current-units times time-units
    """

    r0: float
    r1: float
    c1: float
    q: float

    def __post_init__(self):
        for name in ("r0", "r1", "c1", "q"):
            value = float(getattr(self, name))
            if not math.isfinite(value) or value <= 0.0:
                raise ParameterError(
                    "cell parameter %s must be a positive finite number, got %r"
                    % (name, getattr(self, name))
                )
            object.__setattr__(self, name, value)
        if self.r0 < MIN_RESISTANCE:
            raise ParameterError(
                "series resistance %g is below the %g short-circuit guard"
                % (self.r0, MIN_RESISTANCE)
            )


@dataclass(frozen=True)
class PackConfig:
    """Cells plus the shared OCV curve."""

    cells: tuple[CellParams, ...]
    ocv: OcvCurve

    def __post_init__(self):
        cells = tuple(self.cells)
        if len(cells) < 2:
            raise ParameterError(
                "a parallel pack needs at least 2 cells, got %d" % len(cells)
            )
        if not all(isinstance(c, CellParams) for c in cells):
            raise ParameterError("cells must be CellParams instances")
        object.__setattr__(self, "cells", cells)

    @property
    def n(self) -> int:
        return len(self.cells)


def _validated_resistances(series_resistances) -> np.ndarray:
    r = np.asarray(series_resistances, dtype=float)
    if r.ndim != 1 or r.size < 2:
        raise ParameterError(
            "need a 1-d array of at least 2 series resistances, got shape %s"
            % (r.shape,)
        )
    if not np.all(np.isfinite(r)) or np.any(r < MIN_RESISTANCE):
        raise ParameterError(
            "series resistances must be finite and at least %g" % MIN_RESISTANCE
        )
    return r


def kirchhoff_matrix(series_resistances) -> np.ndarray:
    """Coefficient matrix of the branch-current constraints.

    Rows 0..n-2 equate the resistive voltage drops of branch 0 and
    branch k+1; the last row sums the currents.
    """
    r = _validated_resistances(series_resistances)
    n = r.size
    a = np.zeros((n, n))
    for k in range(n - 1):
        a[k, 0] = r[0]
        a[k, k + 1] = -r[k + 1]
    a[n - 1, :] = 1.0
    return a


def invert_kirchhoff_matrix(series_resistances) -> np.ndarray:
    """Closed-form inverse of kirchhoff_matrix(r).

    With conductances g_k = 1/r_k and S = sum(g), the last column is
    g/S and column j < n-1 is g * g_{j+1} / S with g_{j+1} subtracted
    from its (j+1)-th entry. This is O(n^2) and needs no elimination.
    """
    r = _validated_resistances(series_resistances)
    n = r.size
    g = 1.0 / r
    s = g.sum()
    m = np.empty((n, n))
    m[:, n - 1] = g / s
    for j in range(n - 1):
        m[:, j] = g * (g[j + 1] / s)
        m[j + 1, j] -= g[j + 1]
    return m


@dataclass(frozen=True)
class PackModel:
    """Explicit model of the parallel pack.

    The state equation is
        dx/dt = A x + B_ocv * OCV(z) + B_I * I
    and the branch terminal voltages are
        v = C x + D_ocv * OCV(z) + D_I * I
    where OCV(z) stacks the per-cell open-circuit voltages. All rows of
    the voltage equation agree by construction, so v collapses to the
    single pack voltage.

    pot_gain maps branch source potentials to the equalization part of
    the branch currents; split is the fraction of the pack current each
    branch carries once the potentials agree.
    """

    config: PackConfig
    n: int
    r0: np.ndarray
    r1: np.ndarray
    c1: np.ndarray
    q: np.ndarray
    kirchhoff_inverse: np.ndarray
    pot_gain: np.ndarray
    split: np.ndarray
    A11: np.ndarray
    B_in: np.ndarray
    W: np.ndarray
    Z: np.ndarray
    A: np.ndarray
    B_ocv: np.ndarray
    B_I: np.ndarray
    C: np.ndarray
    D_ocv: np.ndarray
    D_I: np.ndarray
    slope_bounds: SlopeBounds

    @property
    def ocv(self) -> OcvCurve:
        return self.config.ocv


def soc_part(x: np.ndarray) -> np.ndarray:
    """SOC entries of one or many interleaved states."""
    return np.asarray(x)[..., 0::2]


def relax_part(x: np.ndarray) -> np.ndarray:
    """Relaxation-voltage entries of one or many interleaved states."""
    return np.asarray(x)[..., 1::2]


def assemble_state(soc, relax) -> np.ndarray:
    """Interleave per-cell SOC and relaxation vectors into one state."""
    z = np.asarray(soc, dtype=float)
    w = np.asarray(relax, dtype=float)
    if z.shape != w.shape or z.ndim != 1:
        raise ParameterError("soc and relax must be 1-d arrays of equal length")
    x = np.empty(2 * z.size)
    x[0::2] = z
    x[1::2] = w
    return x


def _check_inverse(a: np.ndarray, m: np.ndarray, n: int):
    # Full product for small packs; for very wide packs spot-check a
    # fixed set of random columns instead of the O(n^3) product.
    if n <= 64:
        residual = np.max(np.abs(a @ m - np.eye(n)))
    else:
        rng = np.random.default_rng(0)
        cols = rng.integers(0, n, size=10)
        residual = 0.0
        for j in cols:
            e = np.zeros(n)
            e[j] = 1.0
            residual = max(residual, np.max(np.abs(a @ m[:, j] - e)))
    if residual > 1e-10:
        raise ModelConstructionError(
            "closed-form coupling inverse residual %.3e exceeds 1e-10" % residual
        )


def build_pack_model(config: PackConfig) -> PackModel:
    """Assemble all model matrices for a pack configuration.

    Raises ModelConstructionError when any internal cross-check fails
    and MonotonicityError when the OCV curve is not strictly increasing.
    """
    n = config.n
    r0 = np.array([c.r0 for c in config.cells])
    r1 = np.array([c.r1 for c in config.cells])
    c1 = np.array([c.c1 for c in config.cells])
    q = np.array([c.q for c in config.cells])

    a22 = kirchhoff_matrix(r0)
    m = invert_kirchhoff_matrix(r0)
    _check_inverse(a22, m, n)

    split = m[:, n - 1].copy()
    pot_gain = np.empty((n, n))
    pot_gain[:, 1:] = m[:, : n - 1]
    pot_gain[:, 0] = -m[:, : n - 1].sum(axis=1)

    g = 1.0 / r0
    s = g.sum()
    closed_form = np.outer(g, g) / s - np.diag(g)
    if np.max(np.abs(pot_gain - closed_form)) > 1e-9 * s:
        raise ModelConstructionError(
            "potential-gain matrix disagrees with its conductance form"
        )
    if abs(split.sum() - 1.0) > 1e-12:
        raise ModelConstructionError(
            "current split fractions sum to %.17g, expected 1" % split.sum()
        )
    if np.max(np.abs(pot_gain.sum(axis=1))) > 1e-10 * max(s, 1.0):
        raise ModelConstructionError(
            "potential-gain rows must sum to zero (uniform potentials "
            "drive no equalization current)"
        )

    a11 = np.zeros((2 * n, 2 * n))
    b_in = np.zeros((2 * n, n))
    w_sel = np.zeros((n, 2 * n))
    z_sel = np.zeros((n, 2 * n))
    for k in range(n):
        a11[2 * k + 1, 2 * k + 1] = -1.0 / (r1[k] * c1[k])
        b_in[2 * k, k] = 1.0 / q[k]
        b_in[2 * k + 1, k] = 1.0 / c1[k]
        w_sel[k, 2 * k + 1] = 1.0
        z_sel[k, 2 * k] = 1.0

    a_mat = a11 + b_in @ pot_gain @ w_sel
    b_ocv = b_in @ pot_gain
    b_i = b_in @ split
    d_ocv = np.eye(n) + np.diag(r0) @ pot_gain
    c_mat = d_ocv @ w_sel
    d_i = r0 * split

    if np.max(np.abs(d_i - 1.0 / s)) > 1e-12 * max(1.0, 1.0 / s):
        raise ModelConstructionError(
            "current feedthrough should equal the reciprocal total conductance"
        )

    bounds = config.ocv.slope_bounds()

    matrices = dict(
        kirchhoff_inverse=m, pot_gain=pot_gain, split=split, A11=a11,
        B_in=b_in, W=w_sel, Z=z_sel, A=a_mat, B_ocv=b_ocv, B_I=b_i,
        C=c_mat, D_ocv=d_ocv, D_I=d_i,
    )
    for arr in matrices.values():
        arr.setflags(write=False)
    for arr in (r0, r1, c1, q):
        arr.setflags(write=False)
    return PackModel(
        config=config, n=n, r0=r0, r1=r1, c1=c1, q=q,
        slope_bounds=bounds, **matrices,
    )


def branch_potentials(model: PackModel, x: np.ndarray, clamp: bool = False) -> np.ndarray:
    """Per-branch source voltages OCV(z_k) + w_k."""
    return model.ocv.eval(soc_part(x), clamp=clamp) + relax_part(x)


def branch_currents(model: PackModel, x: np.ndarray, pack_current: float,
                    clamp: bool = False) -> np.ndarray:
    """Current into each branch for a given state and pack current."""
    p = branch_potentials(model, x, clamp=clamp)
    return model.pot_gain @ p + model.split * pack_current


def terminal_voltage(model: PackModel, x: np.ndarray, pack_current: float,
                     clamp: bool = False) -> float:
    """Pack terminal voltage.

    Computed both from the output equation and per branch from the
    currents; all 2n values must agree to 1e-9 (relative), otherwise
    the model state is inconsistent and InternalConsistencyError is
    raised.
    """
    ocv_z = model.ocv.eval(soc_part(x), clamp=clamp)
    p = ocv_z + relax_part(x)
    v_rows = model.C @ np.asarray(x, dtype=float) + model.D_ocv @ ocv_z \
        + model.D_I * pack_current
    i = model.pot_gain @ p + model.split * pack_current
    v_branch = p + model.r0 * i
    values = np.concatenate([v_rows, v_branch])
    spread = np.max(values) - np.min(values)
    scale = max(1.0, float(np.max(np.abs(values))))
    if spread > 1e-9 * scale:
        raise InternalConsistencyError(
            "branch terminal voltages disagree by %.3e" % spread
        )
    return float(np.mean(values))
