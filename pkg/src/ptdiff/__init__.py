"""Predefined-time exact differentiators with bounded time-varying gains."""
from .analysis import (
    EquivalenceReport, PerturbationReport, SettlingReport, SweepReport, detect_settling,
    equivalence_check, perturbation_experiment, predicted_settling, slack_sweep,
)
from .admissibility import AdmissibilityReport, check_admissibility
from .config import ExperimentConfig, load_config, preset_config
from .dynamics import (
    BlowUpError, MonitorSpec, Trajectory, euler_integrate, simulate_base,
    simulate_differentiator, simulate_error, simulate_filter,
)
from .families import (
    CorrectionFamily, FixedTimeFamily, LevantFamily, LinearFamily, MenardFamily,
    linear_gains_from_roots, menard_Tf, phi_eval,
)
from .redesign import (
    RedesignParams, build_structure, compute_eta, f_vec, g_terminal, h_correction, kappa,
    kappa_max, signed_power,
)
from .signals import NoiseSpec, TestSignal, derivative_bound, make_preset, sample_measurement
from .timescale import inverse_warp, lambda_matrix, time_warp

__version__ = "0.1.0"
