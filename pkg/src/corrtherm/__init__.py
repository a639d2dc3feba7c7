"""Single-shot thermodynamics of correlated diagonal states.

Deterministic work of formation for collections of subsystems with fixed
marginals: exact linear-program and closed-form solvers, reversibility
diagnostics, thermo-majorization oracles, heterogeneous ensembles, and
thermodynamic-limit sweeps.  Energies are dimensionless (beta E), works in
kT, entropies in nats.
"""

from .asymptotics import SweepRecord, correlation_scaling, sweep_n, sweep_p
from .errors import (
    AccuracyError,
    ConstraintViolationError,
    CorrthermError,
    DimensionCapError,
    InfeasibleError,
    InvalidStateError,
    MajorizationError,
    SpectrumCapError,
)
from .freeenergy import (
    CorrelationReport,
    WorkBudget,
    average_work,
    delta_f_local,
    mutual_information,
    renyi_divergence,
    shannon_entropy,
    work_budget_single,
)
from .hetero import (
    Atom,
    DistributionSpec,
    Ensemble,
    build_joint_constraints,
    decompose,
    ensemble_cwork,
    mean_delta_f,
    sample_ensemble,
    sigma_d_states,
    theorem3_experiment,
)
from .lpsolver import ConstraintSystem, LpSolution, build_constraints, cwork_lp, min_infnorm
from .majorization import MajorizationCurve, beta_order, can_transform, curve, min_work
from .qubit import (
    QubitOptimum,
    RStarLadder,
    analytic_cwork,
    quasi_thermal_interval,
    qubit_delta_f,
    qubit_single_formation,
    rstar_ladder,
    rstar_spacing_stats,
)
from .spectrum import (
    DiagonalState,
    GibbsWeights,
    LocalSystem,
    SpectrumN,
    build_spectrum,
    degeneracy_shifted,
    gibbs_weights,
    qubit_state,
    qubit_system,
    thermal_state,
)

__version__ = "0.1.0"

__all__ = [
    "AccuracyError",
    "Atom",
    "ConstraintSystem",
    "ConstraintViolationError",
    "CorrelationReport",
    "CorrthermError",
    "DiagonalState",
    "DimensionCapError",
    "DistributionSpec",
    "Ensemble",
    "GibbsWeights",
    "InfeasibleError",
    "InvalidStateError",
    "LocalSystem",
    "LpSolution",
    "MajorizationCurve",
    "MajorizationError",
    "QubitOptimum",
    "RStarLadder",
    "SpectrumCapError",
    "SpectrumN",
    "SweepRecord",
    "WorkBudget",
    "analytic_cwork",
    "average_work",
    "beta_order",
    "build_constraints",
    "build_joint_constraints",
    "can_transform",
    "correlation_scaling",
    "curve",
    "cwork_lp",
    "decompose",
    "degeneracy_shifted",
    "delta_f_local",
    "ensemble_cwork",
    "gibbs_weights",
    "mean_delta_f",
    "min_infnorm",
    "min_work",
    "mutual_information",
    "quasi_thermal_interval",
    "qubit_delta_f",
    "qubit_single_formation",
    "qubit_state",
    "qubit_system",
    "renyi_divergence",
    "rstar_ladder",
    "rstar_spacing_stats",
    "sample_ensemble",
    "shannon_entropy",
    "sigma_d_states",
    "sweep_n",
    "sweep_p",
    "thermal_state",
    "theorem3_experiment",
    "work_budget_single",
]
