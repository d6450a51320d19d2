"""Driven Cooper-pair box simulator.

Unitary charge dynamics under flux/gate drives, forward/backward protocol
reversal checks, two-point-measurement work statistics with emulated
thermal ensembles, and the supporting decoherence and readout estimates.
Units: energies in rad/ns (hbar = 1), times in ns, flux in flux quanta,
temperatures in kelvin.
"""

__version__ = "0.1.0"

from .config import RunConfig, config_from_mapping, load_config
from .drive import (
    BACKWARD,
    DEFAULT_DURATION,
    FORWARD,
    DriveProtocol,
    TabulatedProtocol,
    Waveform,
    default_protocol,
    load_waveform_table,
    reverse_protocol,
    sample_drive,
)
from .experiment import (
    ExperimentSample,
    MicrorevReport,
    PreparationEnsemble,
    TransitionMatrix,
    derive_seed,
    microrev_deviation,
    partition_seeds,
    prepare_ensemble,
    run_protocol,
    sample_experiment,
    stochasticity_defect,
    transition_matrix,
)
from .model import (
    DEFAULT_SUBSPACE,
    KB_OVER_HBAR,
    BiasPoint,
    DeviceParams,
    EigenSystem,
    beta_ratio,
    build_hamiltonian,
    charge_labels,
    charge_operator,
    eigensystem,
    hermiticity_defect,
    josephson_energy,
    time_reverse_hamiltonian,
)
from .noise import (
    DephasingRatioPoint,
    DetectorParams,
    DetectorReport,
    dephasing_ratio,
    detector_distinguishability,
    fidelity_loss_bound,
    kolmogorov_distance_quadrature,
    ratio_trace,
    window_width,
)
from .propagate import (
    PropagatorConfig,
    SpectrumTrace,
    convergence_estimate,
    evolve,
    spectrum_trace,
    step_unitary,
    unitarity_defect,
)
from .thermo import (
    BKEqualityResult,
    BKRatioRecord,
    EnergyLadder,
    GibbsWeights,
    WorkDistribution,
    bk_equality,
    bk_ratio_check,
    energy_ladder,
    gibbs_weights,
    sample_work,
    thermal_energy,
    work_distribution_exact,
)

__all__ = [
    "__version__",
    "BACKWARD",
    "BKEqualityResult",
    "BKRatioRecord",
    "BiasPoint",
    "DEFAULT_DURATION",
    "DEFAULT_SUBSPACE",
    "DephasingRatioPoint",
    "DetectorParams",
    "DetectorReport",
    "DeviceParams",
    "DriveProtocol",
    "EigenSystem",
    "EnergyLadder",
    "ExperimentSample",
    "FORWARD",
    "GibbsWeights",
    "KB_OVER_HBAR",
    "MicrorevReport",
    "PreparationEnsemble",
    "PropagatorConfig",
    "RunConfig",
    "SpectrumTrace",
    "TabulatedProtocol",
    "TransitionMatrix",
    "Waveform",
    "WorkDistribution",
    "beta_ratio",
    "bk_equality",
    "bk_ratio_check",
    "build_hamiltonian",
    "charge_labels",
    "charge_operator",
    "config_from_mapping",
    "convergence_estimate",
    "default_protocol",
    "dephasing_ratio",
    "derive_seed",
    "detector_distinguishability",
    "eigensystem",
    "energy_ladder",
    "evolve",
    "fidelity_loss_bound",
    "gibbs_weights",
    "hermiticity_defect",
    "josephson_energy",
    "kolmogorov_distance_quadrature",
    "load_config",
    "load_waveform_table",
    "microrev_deviation",
    "partition_seeds",
    "prepare_ensemble",
    "ratio_trace",
    "reverse_protocol",
    "run_protocol",
    "sample_drive",
    "sample_experiment",
    "sample_work",
    "spectrum_trace",
    "step_unitary",
    "stochasticity_defect",
    "thermal_energy",
    "time_reverse_hamiltonian",
    "transition_matrix",
    "unitarity_defect",
    "window_width",
    "work_distribution_exact",
]
