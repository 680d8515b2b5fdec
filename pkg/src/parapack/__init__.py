"""Modelling, simulation and state estimation for parallel battery packs."""

from .errors import (
    ConfigError,
    DivergenceError,
    GainDesignError,
    InternalConsistencyError,
    ModelConstructionError,
    MonotonicityError,
    OcvDomainError,
    ParameterError,
    ParapackError,
    SingularMatrixError,
)
from .ocv import OcvCurve, SlopeBounds
from .pack_model import (
    CellParams,
    PackConfig,
    PackModel,
    assemble_state,
    branch_currents,
    branch_potentials,
    build_pack_model,
    invert_kirchhoff_matrix,
    kirchhoff_matrix,
    relax_part,
    soc_part,
    terminal_voltage,
)
from .simulator import (
    CurrentProfile,
    Disturbance,
    SimulationTrace,
    integrate,
    integrate_reduced_error,
    integrate_with_observer,
    write_trace_csv,
)
from .estimator import (
    CertificateReport,
    LmiCandidate,
    ObserverGain,
    StabilityReport,
    build_certificate_matrix,
    check_kappa_stability,
    check_secant_sector,
    decoupling_kappa,
    design_observer_gain,
    energy_balance,
    error_disturbance_gains,
    error_dynamics_matrix,
    verify_energy_certificate,
)
from .config import load_lmi_candidate, load_run_config

__version__ = "0.1.0"

__all__ = [
    "CellParams", "CertificateReport", "ConfigError", "CurrentProfile",
    "Disturbance", "DivergenceError", "GainDesignError",
    "InternalConsistencyError", "LmiCandidate", "ModelConstructionError",
    "MonotonicityError", "ObserverGain", "OcvCurve", "OcvDomainError",
    "PackConfig", "PackModel", "ParameterError", "ParapackError",
    "SimulationTrace", "SingularMatrixError", "SlopeBounds",
    "StabilityReport", "assemble_state", "branch_currents",
    "branch_potentials", "build_certificate_matrix", "build_pack_model",
    "check_kappa_stability", "check_secant_sector", "decoupling_kappa",
    "design_observer_gain", "energy_balance", "error_disturbance_gains",
    "error_dynamics_matrix", "integrate", "integrate_reduced_error",
    "integrate_with_observer", "invert_kirchhoff_matrix", "kirchhoff_matrix",
    "load_lmi_candidate", "load_run_config", "relax_part", "soc_part",
    "terminal_voltage", "verify_energy_certificate", "write_trace_csv",
    "__version__",
]
