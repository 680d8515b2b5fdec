"""Fixed-step simulation of the pack and its state estimator.

The integrator is classic fourth-order Runge-Kutta with a constant
step. Traces record every accepted step; a guard band on the SOC stops
a run that leaves the physically meaningful range, and non-finite
states raise immediately. CSV export follows a fixed column contract so
downstream tooling can parse traces without extra metadata.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import (
    DivergenceError,
    InternalConsistencyError,
    ParameterError,
)
from .pack_model import PackModel, relax_part, soc_part

# SOC may overshoot the calibrated [0, 1] range slightly before the run
# is declared escaped; OCV evaluation clamps inside this band.
DEFAULT_GUARD_BAND = (-0.01, 1.01)

_TRAPZ = getattr(np, "trapezoid", None) or np.trapz


class CurrentProfile:
    """Pack current as a function of time.

    Use the constructors: constant(amplitude), sine(amplitude,
    frequency, offset), table(times, currents). Calling the profile
    with a scalar or array of times returns the current.
    """

    def __init__(self, kind: str, func: Callable[[np.ndarray], np.ndarray],
                 params: dict):
        self.kind = kind
        self._func = func
        self.params = dict(params)

    def __call__(self, t):
        out = self._func(np.asarray(t, dtype=float))
        if np.ndim(t) == 0:
            return float(out)
        return out

    @classmethod
    def constant(cls, amplitude: float) -> "CurrentProfile":
        amplitude = _finite(amplitude, "amplitude")
        return cls("constant", lambda t: np.full_like(t, amplitude),
                   {"amplitude": amplitude})

    @classmethod
    def sine(cls, amplitude: float, frequency: float, offset: float = 0.0) -> "CurrentProfile":
        amplitude = _finite(amplitude, "amplitude")
        frequency = _finite(frequency, "frequency")
        offset = _finite(offset, "offset")
        if frequency <= 0.0:
            raise ParameterError("sine frequency must be positive, got %g" % frequency)

        def func(t):
            return offset + amplitude * np.sin(2.0 * np.pi * frequency * t)

        return cls("sine", func, {"amplitude": amplitude,
                                  "frequency": frequency, "offset": offset})

    @classmethod
    def table(cls, times, currents) -> "CurrentProfile":
        ts = np.asarray(times, dtype=float)
        cs = np.asarray(currents, dtype=float)
        if ts.ndim != 1 or ts.size < 2 or ts.shape != cs.shape:
            raise ParameterError(
                "table profile needs matching 1-d arrays of at least 2 points"
            )
        if not (np.all(np.isfinite(ts)) and np.all(np.isfinite(cs))):
            raise ParameterError("table profile entries must be finite")
        if np.any(np.diff(ts) <= 0.0):
            raise ParameterError("table profile times must strictly increase")

        def func(t):
            # np.interp holds the first/last value outside the table.
            return np.interp(t, ts, cs)

        return cls("table", func, {"times": ts.tolist(), "currents": cs.tolist()})


def _finite(value, name: str) -> float:
    value = float(value)
    if not np.isfinite(value):
        raise ParameterError("%s must be finite" % name)
    return value


class Disturbance:
    """Additive current and measured-voltage disturbances.

    d_current adds to the pack current seen by the cells; d_voltage
    adds to the voltage measurement fed to the estimator.
    """

    def __init__(self, kind: str,
                 d_current: Callable[[np.ndarray], np.ndarray],
                 d_voltage: Callable[[np.ndarray], np.ndarray],
                 params: dict):
        self.kind = kind
        self.d_current = d_current
        self.d_voltage = d_voltage
        self.params = dict(params)

    @classmethod
    def none(cls) -> "Disturbance":
        zero = lambda t: np.zeros_like(np.asarray(t, dtype=float))
        return cls("none", zero, zero, {})

    @classmethod
    def scaled_sine(cls, profile: CurrentProfile,
                    current_frequency: float = 1.0,
                    voltage_frequency: float = 0.5) -> "Disturbance":
        """Sinusoids whose envelope follows the pack current."""
        fi = _finite(current_frequency, "current_frequency")
        fv = _finite(voltage_frequency, "voltage_frequency")

        def d_i(t):
            t = np.asarray(t, dtype=float)
            return profile(t) * np.sin(2.0 * np.pi * fi * t)

        def d_v(t):
            t = np.asarray(t, dtype=float)
            return profile(t) * np.sin(2.0 * np.pi * fv * t)

        return cls("scaled-sine", d_i, d_v,
                   {"current_frequency": fi, "voltage_frequency": fv})

    @classmethod
    def pulse(cls, current_amplitude: float, voltage_amplitude: float,
              start: float, stop: float) -> "Disturbance":
        """Constant offsets active on the half-open window [start, stop)."""
        ai = _finite(current_amplitude, "current_amplitude")
        av = _finite(voltage_amplitude, "voltage_amplitude")
        start = _finite(start, "start")
        stop = _finite(stop, "stop")
        if stop <= start:
            raise ParameterError("pulse needs stop > start")

        def window(t):
            t = np.asarray(t, dtype=float)
            return ((t >= start) & (t < stop)).astype(float)

        return cls("pulse", lambda t: ai * window(t), lambda t: av * window(t),
                   {"current_amplitude": ai, "voltage_amplitude": av,
                    "start": start, "stop": stop})


@dataclass
class SimulationTrace:
    """Time grid plus recorded signals of one run.

    states holds the interleaved pack state per row. For estimator runs
    est_states and v_pred are filled and the CSV gains the estimate
    columns. pack_current is the current actually drawn at the
    terminals (profile plus any current disturbance); voltage is the
    measured terminal voltage (including any sensor disturbance).
    """

    t: np.ndarray
    states: np.ndarray
    currents: np.ndarray
    voltage: np.ndarray
    pack_current: np.ndarray
    escaped: bool = False
    escape_step: int | None = None
    est_states: np.ndarray | None = None
    v_pred: np.ndarray | None = None

    @property
    def n(self) -> int:
        return self.states.shape[1] // 2

    def soc(self) -> np.ndarray:
        return soc_part(self.states)

    def relax(self) -> np.ndarray:
        return relax_part(self.states)

    def est_soc(self) -> np.ndarray:
        return soc_part(self.est_states)

    def est_relax(self) -> np.ndarray:
        return relax_part(self.est_states)

    def error_norm(self) -> np.ndarray:
        """Euclidean norm of the state-estimate error per row."""
        if self.est_states is None:
            raise ParameterError("trace has no estimator signals")
        return np.sqrt(np.sum((self.states - self.est_states) ** 2, axis=1))

    def voltage_error(self) -> np.ndarray:
        if self.v_pred is None:
            raise ParameterError("trace has no estimator signals")
        return self.voltage - self.v_pred

    def summary(self, capacities: np.ndarray | None = None) -> dict:
        out = {
            "steps": int(self.t.size - 1),
            "t_end": float(self.t[-1]),
            "escaped": bool(self.escaped),
            "escape_step": None if self.escape_step is None else int(self.escape_step),
            "final_soc": [float(v) for v in self.soc()[-1]],
            "final_relaxation": [float(v) for v in self.relax()[-1]],
        }
        if capacities is not None:
            q = np.asarray(capacities, dtype=float)
            moved = float(q @ (self.soc()[-1] - self.soc()[0]))
            supplied = float(_TRAPZ(self.pack_current, self.t))
            out["charge_moved"] = moved
            out["charge_supplied"] = supplied
            out["charge_balance_residual"] = moved - supplied
        if self.est_states is not None:
            err = self.error_norm()
            out["error_norm_initial"] = float(err[0])
            out["error_norm_final"] = float(err[-1])
            out["error_norm_peak"] = float(np.max(err))
        return out

    def write_csv(self, path) -> None:
        write_trace_csv(self, path)


def trace_header(n: int, with_estimates: bool) -> list[str]:
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


def write_trace_csv(trace: SimulationTrace, path) -> None:
    """Write a trace using the fixed column contract.

    Floats are written with repr so the file parses back bit-exact.
    Every row's branch currents are rechecked against the pack current
    before anything is written.
    """
    mismatch = np.max(np.abs(trace.currents.sum(axis=1) - trace.pack_current))
    if mismatch > 1e-8:
        raise InternalConsistencyError(
            "branch currents disagree with the pack current by %.3e" % mismatch
        )
    with_est = trace.est_states is not None
    columns = [trace.t, *trace.soc().T, *trace.relax().T, *trace.currents.T,
               trace.voltage]
    if with_est:
        columns += [*trace.est_soc().T, *trace.est_relax().T,
                    trace.error_norm(), trace.voltage_error()]
    header = trace_header(trace.n, with_est)
    lines = [",".join(header)]
    rows = np.column_stack(columns)
    for row in rows:
        lines.append(",".join(repr(float(v)) for v in row))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines))
        fh.write("\n")


def _clamped_ocv(coefficients):
    cs = tuple(coefficients)

    def f(z):
        z = np.clip(z, 0.0, 1.0)
        out = np.full_like(z, cs[-1])
        for c in cs[-2::-1]:
            out = out * z + c
        return out

    return f


def _time_grid(t_end: float, dt: float):
    t_end = _finite(t_end, "t_end")
    dt = _finite(dt, "dt")
    if dt <= 0.0 or t_end <= 0.0:
        raise ParameterError("t_end and dt must be positive")
    steps = int(round(t_end / dt))
    if abs(steps * dt - t_end) > 1e-9 * max(t_end, 1.0):
        raise ParameterError(
            "t_end %g is not an integer number of steps of dt %g" % (t_end, dt)
        )
    if steps < 1:
        raise ParameterError("horizon shorter than one step")
    return np.arange(steps + 1) * dt, steps


def _check_state(x0, n: int, name: str) -> np.ndarray:
    x = np.asarray(x0, dtype=float)
    if x.shape != (2 * n,):
        raise ParameterError("%s must have shape (%d,), got %s" % (name, 2 * n, x.shape))
    if not np.all(np.isfinite(x)):
        raise ParameterError("%s must be finite" % name)
    return x.copy()


def _finish_plant_trace(model: PackModel, t, states, currents_in,
                        escaped, escape_step) -> SimulationTrace:
    """Fill per-row currents and voltage from recorded states, checking
    the redundant voltage routes on every row."""
    ocv = _clamped_ocv(model.ocv.coefficients)
    p = ocv(soc_part(states)) + relax_part(states)
    currents = p @ model.pot_gain.T + np.outer(currents_in, model.split)
    v_all = p + currents * model.r0
    spread = np.max(v_all, axis=1) - np.min(v_all, axis=1)
    scale = max(1.0, float(np.max(np.abs(v_all))))
    if np.max(spread) > 1e-9 * scale:
        raise InternalConsistencyError(
            "branch terminal voltages disagree by %.3e" % float(np.max(spread))
        )
    voltage = np.mean(v_all, axis=1)
    return SimulationTrace(
        t=t, states=states, currents=currents, voltage=voltage,
        pack_current=currents_in.copy(), escaped=escaped,
        escape_step=escape_step,
    )


def integrate(model: PackModel, x0, profile: CurrentProfile, t_end: float,
              dt: float = 0.1, guard_band=DEFAULT_GUARD_BAND) -> SimulationTrace:
    """Simulate the pack from x0 under a current profile.

    Returns the full trace. If any SOC leaves the guard band the run
    stops at that step with trace.escaped set; a non-finite state
    raises DivergenceError.
    """
    x = _check_state(x0, model.n, "x0")
    t, steps = _time_grid(t_end, dt)
    lo, hi = guard_band
    i_grid = np.asarray(profile(t), dtype=float)
    i_half = np.asarray(profile(t[:-1] + 0.5 * dt), dtype=float)

    a = model.A
    b_ocv = model.B_ocv
    b_i = model.B_I
    ocv = _clamped_ocv(model.ocv.coefficients)

    def rhs(x_loc, i_now):
        return a @ x_loc + b_ocv @ ocv(x_loc[0::2]) + b_i * i_now

    states = np.empty((steps + 1, 2 * model.n))
    states[0] = x
    escaped = False
    escape_step = None
    last = steps
    for k in range(steps):
        i0, im, i1 = i_grid[k], i_half[k], i_grid[k + 1]
        k1 = rhs(x, i0)
        k2 = rhs(x + 0.5 * dt * k1, im)
        k3 = rhs(x + 0.5 * dt * k2, im)
        k4 = rhs(x + dt * k3, i1)
        x = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(x)):
            raise DivergenceError(
                "state became non-finite at step %d (t=%g)" % (k + 1, t[k + 1]),
                step=k + 1,
            )
        states[k + 1] = x
        z = x[0::2]
        if np.any(z < lo) or np.any(z > hi):
            escaped = True
            escape_step = k + 1
            last = k + 1
            break

    cut = last + 1
    return _finish_plant_trace(
        model, t[:cut], states[:cut], i_grid[:cut], escaped, escape_step
    )


def integrate_with_observer(model: PackModel, gain, x0, xhat0,
                            profile: CurrentProfile,
                            disturbance: Disturbance | None,
                            t_end: float, dt: float = 0.1,
                            guard_band=DEFAULT_GUARD_BAND) -> SimulationTrace:
    """Co-simulate the pack and a voltage-innovation observer.

    gain is the 2n x n injection matrix (or an object exposing one as
    .K). The observer sees the disturbed voltage measurement and the
    undisturbed commanded current; the plant is driven by the commanded
    current plus the current disturbance.
    """
    k_gain = np.asarray(getattr(gain, "K", gain), dtype=float)
    n = model.n
    if k_gain.shape != (2 * n, n):
        raise ParameterError(
            "gain must have shape (%d, %d), got %s" % (2 * n, n, k_gain.shape)
        )
    x = _check_state(x0, n, "x0")
    xh = _check_state(xhat0, n, "xhat0")
    if disturbance is None:
        disturbance = Disturbance.none()

    t, steps = _time_grid(t_end, dt)
    lo, hi = guard_band
    t_half = t[:-1] + 0.5 * dt
    i_grid = np.asarray(profile(t), dtype=float)
    i_half = np.asarray(profile(t_half), dtype=float)
    di_grid = np.asarray(disturbance.d_current(t), dtype=float)
    di_half = np.asarray(disturbance.d_current(t_half), dtype=float)
    dv_grid = np.asarray(disturbance.d_voltage(t), dtype=float)
    dv_half = np.asarray(disturbance.d_voltage(t_half), dtype=float)

    kc = k_gain @ model.C
    kd = k_gain @ model.D_ocv
    two_n = 2 * n
    lin = np.zeros((2 * two_n, 2 * two_n))
    lin[:two_n, :two_n] = model.A
    lin[two_n:, :two_n] = -kc
    lin[two_n:, two_n:] = model.A + kc
    nl = np.zeros((2 * two_n, 2 * n))
    nl[:two_n, :n] = model.B_ocv
    nl[two_n:, :n] = -kd
    nl[two_n:, n:] = model.B_ocv + kd
    u_i = np.concatenate([model.B_I, model.B_I])
    u_di = np.concatenate([model.B_I, -(k_gain @ model.D_I)])
    u_dv = np.concatenate([np.zeros(two_n), -(k_gain @ np.ones(n))])
    ocv = _clamped_ocv(model.ocv.coefficients)

    def rhs(y, i_now, di_now, dv_now):
        zz = np.concatenate([y[:two_n][0::2], y[two_n:][0::2]])
        return (lin @ y + nl @ ocv(zz) + u_i * i_now + u_di * di_now
                + u_dv * dv_now)

    y = np.concatenate([x, xh])
    ys = np.empty((steps + 1, 2 * two_n))
    ys[0] = y
    escaped = False
    escape_step = None
    last = steps
    for k in range(steps):
        k1 = rhs(y, i_grid[k], di_grid[k], dv_grid[k])
        k2 = rhs(y + 0.5 * dt * k1, i_half[k], di_half[k], dv_half[k])
        k3 = rhs(y + 0.5 * dt * k2, i_half[k], di_half[k], dv_half[k])
        k4 = rhs(y + dt * k3, i_grid[k + 1], di_grid[k + 1], dv_grid[k + 1])
        y = y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(y)):
            raise DivergenceError(
                "state became non-finite at step %d (t=%g)" % (k + 1, t[k + 1]),
                step=k + 1,
            )
        ys[k + 1] = y
        z = y[:two_n][0::2]
        if np.any(z < lo) or np.any(z > hi):
            escaped = True
            escape_step = k + 1
            last = k + 1
            break

    cut = last + 1
    t = t[:cut]
    states = ys[:cut, :two_n]
    est_states = ys[:cut, two_n:]
    pack_current = i_grid[:cut] + di_grid[:cut]

    trace = _finish_plant_trace(model, t, states, pack_current,
                                escaped, escape_step)
    trace.voltage = trace.voltage + dv_grid[:cut]
    ocv_hat = ocv(soc_part(est_states))
    v_pred_rows = (est_states @ model.C.T + ocv_hat @ model.D_ocv.T
                   + np.outer(i_grid[:cut], model.D_I))
    trace.est_states = est_states
    trace.v_pred = np.mean(v_pred_rows, axis=1)
    return trace


def integrate_reduced_error(model: PackModel, kappa_blocks, x0, e0,
                            profile: CurrentProfile, t_end: float,
                            dt: float = 0.1):
    """Integrate the pack together with the per-cell reduced error system.

    kappa_blocks is an (n, 2) array of per-cell injection pairs. The
    reduced error of cell k evolves independently of the other cells,
    driven by the cell's own OCV mismatch:

        de_z/dt = k1 * (e_w + docv)
        de_w/dt = k2 * (e_w + docv) - e_w / (r1 c1)

    with docv = OCV(z) - OCV(z - e_z). Returns (t, states, errors).
    """
    kb = np.asarray(kappa_blocks, dtype=float)
    n = model.n
    if kb.shape != (n, 2):
        raise ParameterError("kappa_blocks must have shape (%d, 2)" % n)
    x = _check_state(x0, n, "x0")
    e = _check_state(e0, n, "e0")
    t, steps = _time_grid(t_end, dt)
    i_grid = np.asarray(profile(t), dtype=float)
    i_half = np.asarray(profile(t[:-1] + 0.5 * dt), dtype=float)

    a = model.A
    b_ocv = model.B_ocv
    b_i = model.B_I
    ocv = _clamped_ocv(model.ocv.coefficients)
    k1v = kb[:, 0]
    k2v = kb[:, 1]
    leak = 1.0 / (model.r1 * model.c1)

    def rhs(y, i_now):
        x_loc, e_loc = y[: 2 * n], y[2 * n:]
        z = x_loc[0::2]
        dx = a @ x_loc + b_ocv @ ocv(z) + b_i * i_now
        e_z, e_w = e_loc[0::2], e_loc[1::2]
        docv = ocv(z) - ocv(z - e_z)
        drive = e_w + docv
        de = np.empty(2 * n)
        de[0::2] = k1v * drive
        de[1::2] = k2v * drive - leak * e_w
        return np.concatenate([dx, de])

    y = np.concatenate([x, e])
    ys = np.empty((steps + 1, 4 * n))
    ys[0] = y
    for k in range(steps):
        k1 = rhs(y, i_grid[k])
        k2 = rhs(y + 0.5 * dt * k1, i_half[k])
        k3 = rhs(y + 0.5 * dt * k2, i_half[k])
        k4 = rhs(y + dt * k3, i_grid[k + 1])
        y = y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(y)):
            raise DivergenceError(
                "state became non-finite at step %d (t=%g)" % (k + 1, t[k + 1]),
                step=k + 1,
            )
        ys[k + 1] = y
    return t, ys[:, : 2 * n], ys[:, 2 * n:]
