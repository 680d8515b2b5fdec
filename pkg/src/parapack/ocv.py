"""Open-circuit voltage curve: polynomial OCV(z) and its slope.

The curve maps state of charge z in [0, 1] to the cell's equilibrium
voltage. Estimator design needs guaranteed bounds on the slope d(OCV)/dz
over the full SOC range, so the curve object can locate its extreme
slopes to high accuracy and refuses non-increasing calibrations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import MonotonicityError, OcvDomainError, ParameterError

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class SlopeBounds:
    """Extreme values of d(OCV)/dz over the SOC range."""

    lower: float
    upper: float
    z_at_lower: float
    z_at_upper: float


@dataclass(frozen=True)
class OcvCurve:
    """Polynomial OCV model with ascending coefficients.

    coefficients[k] multiplies z**k, so coefficients[0] is the fully
    discharged open-circuit voltage.
    """

    coefficients: tuple[float, ...]

    def __post_init__(self):
        coeffs = tuple(float(c) for c in self.coefficients)
        if len(coeffs) < 2:
            raise ParameterError(
                "OCV polynomial needs at least two coefficients, got %d"
                % len(coeffs)
            )
        if not all(math.isfinite(c) for c in coeffs):
            raise ParameterError("OCV coefficients must be finite")
        object.__setattr__(self, "coefficients", coeffs)

    @property
    def degree(self) -> int:
        return len(self.coefficients) - 1

    def _prepare(self, z, clamp: bool):
        arr = np.asarray(z, dtype=float)
        if clamp:
            return np.clip(arr, 0.0, 1.0)
        bad = (arr < 0.0) | (arr > 1.0) | ~np.isfinite(arr)
        if np.any(bad):
            worst = float(np.asarray(arr)[bad].flat[0])
            raise OcvDomainError(
                "SOC %g outside the calibrated range [0, 1]" % worst
            )
        return arr

    def eval(self, z, clamp: bool = False):
        """OCV at SOC z (scalar or array). Out-of-range z raises unless
        clamp=True, which evaluates at the nearest range endpoint."""
        arr = self._prepare(z, clamp)
        out = np.zeros_like(arr)
        for c in reversed(self.coefficients):
            out = out * arr + c
        if np.ndim(z) == 0:
            return float(out)
        return out

    def slope(self, z, clamp: bool = False):
        """d(OCV)/dz at SOC z (scalar or array)."""
        arr = self._prepare(z, clamp)
        out = np.zeros_like(arr)
        for k in range(self.degree, 0, -1):
            out = out * arr + k * self.coefficients[k]
        if np.ndim(z) == 0:
            return float(out)
        return out

    def slope_bounds(self, samples: int = 10000, refine_tol: float = 1e-8) -> SlopeBounds:
        """Locate the extreme slopes over [0, 1].

        Dense sampling brackets each extremum, golden-section search
        refines it to refine_tol in z. Raises MonotonicityError when the
        smallest slope is not strictly positive.
        """
        if samples < 3:
            raise ParameterError("slope_bounds needs at least 3 samples")
        zs = np.linspace(0.0, 1.0, samples)
        ds = self.slope(zs)

        # Golden-section search never lands exactly on a bracket edge, so
        # keep the grid extremum when it beats the refined point; this
        # matters when the true extremum sits on a domain boundary.
        idx_lo = int(np.argmin(ds))
        z_lo = self._refine(zs, ds, idx_lo, sign=1.0, tol=refine_tol)
        if ds[idx_lo] < self.slope(z_lo):
            z_lo = float(zs[idx_lo])
        idx_hi = int(np.argmax(ds))
        z_hi = self._refine(zs, ds, idx_hi, sign=-1.0, tol=refine_tol)
        if ds[idx_hi] > self.slope(z_hi):
            z_hi = float(zs[idx_hi])
        lo = self.slope(z_lo)
        hi = self.slope(z_hi)
        if lo <= 0.0:
            raise MonotonicityError(
                "OCV slope %.6g at SOC %.6g is not positive; the curve must "
                "be strictly increasing" % (lo, z_lo)
            )
        return SlopeBounds(lower=lo, upper=hi, z_at_lower=z_lo, z_at_upper=z_hi)

    def _refine(self, zs, ds, idx, sign: float, tol: float) -> float:
        # Bracket the grid extremum with its neighbours (clipped at the
        # domain edges) and shrink with golden-section steps.
        a = zs[max(idx - 1, 0)]
        b = zs[min(idx + 1, len(zs) - 1)]

        def f(z):
            return sign * self.slope(float(z))

        c = b - _GOLDEN * (b - a)
        d = a + _GOLDEN * (b - a)
        fc, fd = f(c), f(d)
        while abs(b - a) > tol:
            if fc < fd:
                b, d, fd = d, c, fc
                c = b - _GOLDEN * (b - a)
                fc = f(c)
            else:
                a, c, fc = c, d, fd
                d = a + _GOLDEN * (b - a)
                fd = f(d)
        return 0.5 * (a + b)
