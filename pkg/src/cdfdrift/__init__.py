"""Cumulative-distribution finite differences for the Kimura drift equation."""

from ._backend import BACKEND
from .diagnostics import (
    ConvergenceRow,
    DiagnosticsReport,
    convergence_order,
    discrete_expectation,
    discrete_theta_moment,
    fixation_errors,
    local_error,
    power_law_exponents,
    report,
)
from .errors import CdfDriftError, ConfigError, ModelError, SolverError
from .model import (
    CdfState,
    DeltaAtZero,
    GaussianPdf,
    GridSpec,
    OneWayMutation,
    PureDrift,
    Selection,
    TimeSpec,
    TwoWayMutation,
    UniformPdf,
    build_initial_cdf,
    eval_diffusion,
    eval_drift,
    steady_state_two_way,
    theta,
)
from .oracle import WfConfig, simulate_fixation
from .scheme import (
    RFDM,
    SFDM,
    SchemeVariant,
    TridiagonalSystem,
    assemble,
    recover_pdf,
    run,
    step,
    thomas_solve,
)

__version__ = "0.1.0"
