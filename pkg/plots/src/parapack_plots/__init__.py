"""Figure rendering for parapack simulation traces and reports."""

from .figures import (
    branch_current_figure,
    estimator_error_figure,
    ocv_figure,
    ocv_slope_figure,
    save_figure,
)
from .traces import (
    OcvCurveData,
    PlotDataError,
    TraceData,
    load_ocv_curve,
    load_trace,
)

__version__ = "0.1.0"

__all__ = [
    "OcvCurveData", "PlotDataError", "TraceData", "branch_current_figure",
    "estimator_error_figure", "load_ocv_curve", "load_trace", "ocv_figure",
    "ocv_slope_figure", "save_figure", "__version__",
]
