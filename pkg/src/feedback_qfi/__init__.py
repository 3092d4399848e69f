"""Quantum Fisher information of unitary and noisy channels under coherent feedback."""

from .errors import QfiError
from .feedback import (
    FeedbackSchedule,
    GainInterval,
    SweepResult,
    beta_sweep,
    controlled_qfi,
    gain_interval,
    optimal_schedule,
    scaling_curve,
    total_unitary,
    uncontrolled_qfi,
)
from .hamfam import HamiltonianFamily, universal_qfi
from .noisy import NoisySweepConfig, ProbeSearch, max_noisy_qfi, noisy_beta_sweep, noisy_qfi
from .qfi import (
    Probe,
    QfiResult,
    channel_qfi_fd,
    channel_qfi_generator,
    mixed_state_qfi_sld,
    optimal_probe,
    precision_bound,
    pure_state_qfi,
)
from .spectral import arc_c_te, c_te, eigen_angles, min_fidelity_over_inputs

__version__ = "0.1.0"

__all__ = [
    "FeedbackSchedule",
    "GainInterval",
    "HamiltonianFamily",
    "NoisySweepConfig",
    "Probe",
    "ProbeSearch",
    "QfiError",
    "QfiResult",
    "SweepResult",
    "arc_c_te",
    "beta_sweep",
    "c_te",
    "channel_qfi_fd",
    "channel_qfi_generator",
    "controlled_qfi",
    "eigen_angles",
    "gain_interval",
    "max_noisy_qfi",
    "min_fidelity_over_inputs",
    "mixed_state_qfi_sld",
    "noisy_beta_sweep",
    "noisy_qfi",
    "optimal_probe",
    "optimal_schedule",
    "precision_bound",
    "pure_state_qfi",
    "scaling_curve",
    "total_unitary",
    "uncontrolled_qfi",
    "universal_qfi",
]
