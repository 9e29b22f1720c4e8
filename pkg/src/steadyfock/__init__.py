"""Steady Fock states of a cavity mode driven by an engineered atomic reservoir."""

from .analytic import (
    AnalyticSolution,
    RegimeReport,
    analytic_populations,
    auto_truncation,
    check_conditions,
    population_series,
)
from .collision import (
    BeamTrajectory,
    CollisionConfig,
    beam_for_rates,
    beam_steady_state,
    collision_map,
    convergence_study,
    lindblad_distance,
    simulate_beam,
)
from .engineering import (
    EffectiveParams,
    RamanParams,
    derive_effective,
    selective_jc,
    resonant_jc,
    solve_selectivity,
    validate_selectivity,
)
from .errors import (
    IntegrationError,
    NoSteadyStateError,
    SolverError,
    SteadyFockError,
    TruncationError,
)
from .fock import (
    DensityMatrix,
    HilbertSpec,
    Operator,
    annihilation,
    creation,
    fock_state,
    number,
    selective_lowering,
    thermal_state,
    trace_distance,
)
from .lindblad import (
    Channel,
    MasterEquationSpec,
    SteadyStateReport,
    evolve,
    liouvillian_matrix,
    steady_state,
)
from .observables import (
    GridSpec,
    WignerGrid,
    classify_nonclassical,
    fock_fidelity,
    mandel_q,
    state_metrics,
    wigner,
)
from .reservoir import (
    BeamParams,
    EngineeredRates,
    build_master_equation,
    feasibility_check,
    natural_master_equation,
    rates_from_beam,
)

__version__ = "0.1.0"
