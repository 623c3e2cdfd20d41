"""Projection-based controllers: sector design, projected simulation and audits."""
from .analysis import (
    AuditRecord,
    DissipativityReport,
    NotCheckable,
    PerformanceMetrics,
    SamplingBox,
    audit_trajectory,
    check_dissipativity,
    count_zero_crossings,
    performance_metrics,
)
from .controllers import (
    linear_controller,
    msd_c1_controller,
    static_gain_controller,
    tora_c1_controller,
    tora_c2_controller,
)
from .core import (
    ClosedLoopState,
    ConfigurationError,
    ControllerModel,
    DissipativityTriple,
    PlantModel,
    SectorBounds,
    SectorCertificate,
    Trajectory,
)
from .plants import lti_model, msd_model, tora_mechanical_energy, tora_model
from .projection import (
    StateLeftAdmissibleSet,
    active_mode,
    oracle_grid_step,
    partial_project,
    project_oracle,
    repair_state,
)
from .sector import (
    BoundaryMode,
    CertificateSearchFailed,
    NotSectorDesignable,
    admissible_interval,
    classify_mode,
    design_sector,
    sector_residual,
    synthesize_certificate_search,
    verify_certificate,
)
from .sim import IntegratorConfig, NumericalBlowup, Scenario, simulate, sliding_fraction, step
from .trajio import read_trajectory_csv, write_trajectory_csv

__version__ = "0.1.0"
