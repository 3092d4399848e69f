"""Numerical tolerances and fixed conventions shared by every module."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Tolerances:
    hermitian: float = 1e-12
    unitary: float = 1e-10
    trace: float = 1e-10
    psd_clamp: float = 1e-10
    psd_invalid: float = 1e-6
    jacobi_rel: float = 1e-13
    jacobi_max_sweeps: int = 100
    degeneracy: float = 1e-8
    kraus_completeness: float = 1e-10
    probe_norm: float = 1e-12
    generator_residual: float = 1e-6
    sld_cutoff: float = 1e-10
    drho_trace: float = 1e-8
    drho_hermitian: float = 1e-8
    no_information: float = 1e-12
    bisection: float = 1e-4


TOL = Tolerances()

DEFAULT_DX = 1e-5

# Pauli matrices; sigma_3 uses the diag(-1, 1) sign convention throughout.
SIGMA_0 = np.eye(2, dtype=np.complex128)
SIGMA_1 = np.array([[0, 1], [1, 0]], dtype=np.complex128)
SIGMA_2 = np.array([[0, -1j], [1j, 0]], dtype=np.complex128)
SIGMA_3 = np.array([[-1, 0], [0, 1]], dtype=np.complex128)

# Default per-segment dephasing: total attenuation 0.8 over 5 segments.
DEFAULT_ETA = 0.8 ** (1 / 5)
