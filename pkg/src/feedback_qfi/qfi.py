"""Quantum Fisher information of parametrised unitaries and states.

All finite differences are central, evaluated at ``x - dx/2`` and
``x + dx/2``.  ``make_unitary`` arguments are plain callables ``x -> U(x)``.
Values are per single use of the channel; repetitions only enter through
:func:`precision_bound`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .constants import DEFAULT_DX, TOL
from .errors import (
    DerivativeInaccurateError,
    InconsistentDerivativeError,
    NoInformationError,
    StepTooLargeError,
)
from .matcore import as_density, dagger, fidelity, hermitian_deviation, hermitian_eig
from .spectral import c_te

UnitaryFn = Callable[[float], np.ndarray]

METHODS = ("cte_fd", "generator", "pure_fd", "sld", "bures_fd")


@dataclass(frozen=True)
class QfiResult:
    value: float
    method: str
    dx_used: float | None = None

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown QFI method {self.method!r}")
        if not (math.isfinite(self.value) and self.value >= 0):
            raise ValueError(f"QFI must be finite and non-negative, got {self.value}")


@dataclass(frozen=True, eq=False)
class Probe:
    """Pure input state given by its amplitudes."""

    amplitudes: np.ndarray

    def __post_init__(self):
        amp = np.asarray(self.amplitudes, dtype=np.complex128).reshape(-1)
        norm = np.linalg.norm(amp)
        if abs(norm - 1.0) > TOL.probe_norm:
            raise ValueError(f"probe must be normalised (norm {norm!r})")
        object.__setattr__(self, "amplitudes", amp)

    @classmethod
    def normalized(cls, amplitudes) -> Probe:
        amp = np.asarray(amplitudes, dtype=np.complex128).reshape(-1)
        return cls(amp / np.linalg.norm(amp))

    @classmethod
    def bloch(cls, polar: float, azimuth: float) -> Probe:
        return cls(np.array([math.cos(polar / 2), np.exp(1j * azimuth) * math.sin(polar / 2)]))

    @property
    def dim(self) -> int:
        return self.amplitudes.shape[0]

    def density(self) -> np.ndarray:
        a = self.amplitudes
        return np.outer(a, a.conj())


def _check_dx(dx: float) -> None:
    if not dx > 0:
        raise ValueError(f"dx must be positive, got {dx}")


def channel_qfi_fd(make_unitary: UnitaryFn, x: float, dx: float = DEFAULT_DX) -> QfiResult:
    """Maximal QFI over inputs from the eigen-angle spread of U(x-dx/2)^H U(x+dx/2).

    Raises:
        StepTooLargeError: the spread wrapped past pi at this step size.
    """
    _check_dx(dx)
    u1 = make_unitary(x - dx / 2)
    u2 = make_unitary(x + dx / 2)
    rep = c_te(dagger(u1) @ u2)
    if rep.wraparound_flag:
        raise StepTooLargeError(
            f"eigen-angle spread {rep.spread:.4f} > pi at dx={dx:g}; use a smaller dx"
        )
    # 8 (1 - cos c) written as 16 sin^2(c/2) to avoid cancellation.
    value = 16.0 * math.sin(rep.c_te / 2) ** 2 / dx**2
    return QfiResult(value, "cte_fd", dx)


def local_generator(make_unitary: UnitaryFn, x: float, dx: float = DEFAULT_DX) -> np.ndarray:
    """h = i (dU/dx) U^H by central difference, Hermitised.

    Raises:
        DerivativeInaccurateError: anti-Hermitian residual above 1e-6.
    """
    _check_dx(dx)
    du = (make_unitary(x + dx / 2) - make_unitary(x - dx / 2)) / dx
    h = 1j * du @ dagger(make_unitary(x))
    resid = hermitian_deviation(h)
    if resid > TOL.generator_residual:
        raise DerivativeInaccurateError(
            f"local generator is not Hermitian (residual {resid:.3e}); derivative inaccurate"
        )
    return 0.5 * (h + dagger(h))


def channel_qfi_generator(make_unitary: UnitaryFn, x: float, dx: float = DEFAULT_DX) -> QfiResult:
    """Maximal QFI as the squared eigenvalue spread of the local generator."""
    w = hermitian_eig(local_generator(make_unitary, x, dx), check=False).eigenvalues
    return QfiResult(float(w[0] - w[-1]) ** 2, "generator", dx)


def optimal_probe(make_unitary: UnitaryFn, x: float, dx: float = DEFAULT_DX) -> Probe:
    """Input state attaining the maximal QFI.

    The equal superposition of the extreme eigenvectors of the generator,
    pulled back through U(x)^H so that it is an input rather than an output
    state.
    """
    h = local_generator(make_unitary, x, dx)
    w, v = hermitian_eig(h, check=False)
    if w[0] - w[-1] <= TOL.no_information:
        raise NoInformationError("generator has zero spread: U(x) carries no information about x")
    out = (v[:, 0] + v[:, -1]) / math.sqrt(2.0)
    return Probe.normalized(dagger(make_unitary(x)) @ out)


def _one_minus_overlap(psi1: np.ndarray, psi2: np.ndarray) -> np.ndarray:
    # 1 - |<psi1|psi2>| = ||psi2 e^{-i arg} - psi1||^2 / 2 for unit vectors; no cancellation.
    psi1 = psi1 / np.linalg.norm(psi1, axis=-1, keepdims=True)
    psi2 = psi2 / np.linalg.norm(psi2, axis=-1, keepdims=True)
    ov = np.sum(np.conj(psi1) * psi2, axis=-1)
    phase = np.where(np.abs(ov) > 0, np.conj(ov) / np.where(np.abs(ov) > 0, np.abs(ov), 1), 1)
    diff = psi2 * phase[..., None] - psi1
    return 0.5 * np.sum(np.abs(diff) ** 2, axis=-1)


def pure_state_qfi(make_unitary: UnitaryFn, probe: Probe, x: float, dx: float = DEFAULT_DX) -> QfiResult:
    """QFI of the pure family U(x)|probe> via 8 (1 - |overlap|) / dx^2."""
    _check_dx(dx)
    psi1 = make_unitary(x - dx / 2) @ probe.amplitudes
    psi2 = make_unitary(x + dx / 2) @ probe.amplitudes
    return QfiResult(8.0 * float(_one_minus_overlap(psi1, psi2)) / dx**2, "pure_fd", dx)


def sld_qfi_values(rho: np.ndarray, drho: np.ndarray) -> np.ndarray:
    """Unchecked, batched SLD formula sum 2 |<i|drho|j>|^2 / (p_i + p_j)."""
    p, v = hermitian_eig(rho, check=False)
    d = dagger(v) @ drho @ v
    denom = p[..., :, None] + p[..., None, :]
    keep = denom > TOL.sld_cutoff
    weights = np.where(keep, 2.0 / np.where(keep, denom, 1.0), 0.0)
    return np.sum(weights * np.abs(d) ** 2, axis=(-2, -1))


def mixed_state_qfi_sld(rho, drho) -> QfiResult:
    """QFI of a (possibly mixed) state from rho and its derivative.

    Raises:
        InconsistentDerivativeError: drho has non-negligible trace or is not Hermitian.
    """
    rho = as_density(rho)
    drho = np.asarray(drho, dtype=np.complex128)
    if drho.shape != rho.shape:
        raise InconsistentDerivativeError(f"drho shape {drho.shape} does not match rho {rho.shape}")
    if hermitian_deviation(drho) > TOL.drho_hermitian:
        raise InconsistentDerivativeError("drho is not Hermitian")
    tr = np.trace(drho).real
    if abs(tr) > TOL.drho_trace:
        raise InconsistentDerivativeError(f"drho must be traceless, trace is {tr:.3e}")
    drho = 0.5 * (drho + dagger(drho))
    return QfiResult(float(sld_qfi_values(rho, drho)), "sld")


def bures_route_qfi(rho_minus, rho_plus, dx: float) -> QfiResult:
    """8 (1 - F) / dx^2 for states at x - dx/2 and x + dx/2."""
    _check_dx(dx)
    return QfiResult(8.0 * (1.0 - fidelity(rho_minus, rho_plus)) / dx**2, "bures_fd", dx)


def precision_bound(j: float, n: int = 1) -> float:
    """Cramer-Rao limit 1/sqrt(n J); ``math.inf`` when J = 0."""
    if j < 0 or not math.isfinite(j):
        raise ValueError(f"Fisher information must be finite and >= 0, got {j}")
    if int(n) != n or n < 1:
        raise ValueError(f"repetition count must be a positive integer, got {n}")
    if j == 0:
        return math.inf
    return 1.0 / math.sqrt(n * j)
