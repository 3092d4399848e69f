"""Dephasing noise interleaved with feedback controls.

Each segment applies the channel with Kraus operators
``sqrt((1+eta)/2) U(x)`` and ``sqrt((1-eta)/2) sigma_3 U(x)`` with
``U(x) = exp(-i H(x) t)``, followed by the segment's control.  ``eta`` is the
per-segment coherence factor.  Density matrices may carry leading batch axes
so that a whole grid of probes is evolved at once.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import partial
from typing import Sequence

import numpy as np

from .constants import DEFAULT_DX, DEFAULT_ETA, SIGMA_3, TOL
from .errors import InvalidMatrixError, UnsupportedDimensionError
from .feedback import (
    DEFAULT_SEARCH_RANGE,
    FeedbackSchedule,
    SweepResult,
    find_gain_interval,
    optimal_schedule,
    parallel_map,
)
from .hamfam import HamiltonianFamily
from .matcore import dagger, pure_density
from .qfi import Probe, QfiResult, sld_qfi_values


@dataclass(frozen=True, eq=False)
class KrausChannel:
    kraus_ops: tuple[np.ndarray, ...]

    def __post_init__(self):
        ops = tuple(np.asarray(k, dtype=np.complex128) for k in self.kraus_ops)
        if not ops:
            raise InvalidMatrixError("a channel needs at least one Kraus operator")
        shape = ops[0].shape
        if len(shape) != 2 or shape[0] != shape[1] or any(k.shape != shape for k in ops):
            raise InvalidMatrixError("Kraus operators must be square and of equal dimension")
        completeness = sum(dagger(k) @ k for k in ops)
        dev = float(np.max(np.abs(completeness - np.eye(shape[0]))))
        if dev > TOL.kraus_completeness:
            raise InvalidMatrixError(f"Kraus operators are not trace preserving (deviation {dev:.3e})")
        object.__setattr__(self, "kraus_ops", ops)

    @property
    def dim(self) -> int:
        return self.kraus_ops[0].shape[0]


@dataclass(frozen=True)
class ProbeSearch:
    grid_points_per_angle: int = 64
    refine_iters: int = 3

    def __post_init__(self):
        if self.grid_points_per_angle < 2 or self.refine_iters < 0:
            raise ValueError("probe search needs >= 2 grid points per angle and >= 0 refinement rounds")


@dataclass(frozen=True)
class NoisySweepConfig:
    eta: float = DEFAULT_ETA
    m: int = 5
    T: float = 1.0
    x_true: float = 1.0
    beta_grid: Sequence[float] = field(default_factory=lambda: tuple(np.linspace(-3, 3, 61)))
    dx: float = DEFAULT_DX
    probe_search: ProbeSearch = field(default_factory=ProbeSearch)
    search_range: tuple[float, float] = DEFAULT_SEARCH_RANGE
    scan_points: int = 601

    def __post_init__(self):
        _check_eta(self.eta)
        if int(self.m) != self.m or self.m < 1:
            raise ValueError(f"m must be a positive integer, got {self.m}")
        if not self.T > 0 or not self.dx > 0:
            raise ValueError("T and dx must be positive")


def _check_eta(eta: float) -> None:
    if not 0.0 <= eta <= 1.0:
        raise ValueError(f"eta must lie in [0, 1], got {eta}")


def dephasing_after_unitary(family: HamiltonianFamily, x: float, t: float, eta: float) -> KrausChannel:
    """Kraus pair sqrt((1+eta)/2) U and sqrt((1-eta)/2) sigma_3 U; the second is dropped at eta = 1."""
    _check_eta(eta)
    if family.dim != 2:
        raise UnsupportedDimensionError(f"sigma_3 dephasing needs a qubit family, got d={family.dim}")
    u = family.unitary_at(x, t)
    ops = [math.sqrt((1 + eta) / 2) * u]
    if eta < 1.0:
        ops.append(math.sqrt((1 - eta) / 2) * SIGMA_3 @ u)
    return KrausChannel(tuple(ops))


def apply_channel(channel: KrausChannel, rho: np.ndarray) -> np.ndarray:
    """sum_k K rho K^H (rho may be batched)."""
    rho = np.asarray(rho, dtype=np.complex128)
    if rho.shape[-2:] != (channel.dim, channel.dim):
        raise InvalidMatrixError(f"state of shape {rho.shape[-2:]} does not match channel dimension {channel.dim}")
    return sum(k @ rho @ dagger(k) for k in channel.kraus_ops)


def evolve_density(
    family: HamiltonianFamily, x: float, schedule: FeedbackSchedule, eta: float, rho0: np.ndarray
) -> np.ndarray:
    """Run all segments: channel, then control, m times."""
    channel = dephasing_after_unitary(family, x, schedule.t, eta)
    rho = np.asarray(rho0, dtype=np.complex128)
    for c in schedule.controls:
        rho = apply_channel(channel, rho)
        rho = c @ rho @ dagger(c)
    return rho


def evolve_noisy(
    family: HamiltonianFamily, x: float, schedule: FeedbackSchedule, eta: float, probe: Probe
) -> np.ndarray:
    return evolve_density(family, x, schedule, eta, probe.density())


def _qfi_for_states(family, x, schedule, eta, rho0, dx) -> np.ndarray:
    rho = evolve_density(family, x, schedule, eta, rho0)
    drho = (
        evolve_density(family, x + dx / 2, schedule, eta, rho0)
        - evolve_density(family, x - dx / 2, schedule, eta, rho0)
    ) / dx
    drho = 0.5 * (drho + dagger(drho))
    return sld_qfi_values(rho, drho)


def noisy_qfi(
    family: HamiltonianFamily,
    x: float,
    schedule: FeedbackSchedule,
    eta: float,
    probe: Probe,
    dx: float = DEFAULT_DX,
) -> QfiResult:
    """SLD QFI of the noisy output, derivative by central difference with controls fixed."""
    if not dx > 0:
        raise ValueError(f"dx must be positive, got {dx}")
    value = float(_qfi_for_states(family, x, schedule, eta, probe.density(), dx))
    return QfiResult(max(value, 0.0), "sld", dx)


_MAX_POLLS = 64


def _bloch_states(polar: np.ndarray, azimuth: np.ndarray) -> np.ndarray:
    psi = np.stack([np.cos(polar / 2), np.exp(1j * azimuth) * np.sin(polar / 2)], axis=-1)
    return pure_density(psi)


def max_noisy_qfi(
    family: HamiltonianFamily,
    x: float,
    schedule: FeedbackSchedule,
    eta: float,
    dx: float = DEFAULT_DX,
    search: ProbeSearch = ProbeSearch(),
) -> tuple[QfiResult, Probe]:
    """Maximise the noisy QFI over pure qubit probes.

    A coarse azimuth x polar grid (``n`` x ``n/2`` points) is scanned, ties
    going to the lowest grid index, and the best point is then polished by
    coordinate search with halving steps.  Deterministic for a fixed search.

    Raises:
        UnsupportedDimensionError: the family is not a qubit family.
    """
    if family.dim != 2:
        raise UnsupportedDimensionError(f"probe optimisation is implemented for qubits only, got d={family.dim}")
    n_az = search.grid_points_per_angle
    n_pol = max(2, n_az // 2)
    azimuth = np.arange(n_az) * (2 * np.pi / n_az)
    polar = np.linspace(0.0, np.pi, n_pol)
    az, po = np.meshgrid(azimuth, polar, indexing="ij")
    objective = partial(_qfi_for_states, family, x, schedule, eta, dx=dx)
    values = objective(_bloch_states(po.ravel(), az.ravel()))
    best = int(np.argmax(values))
    best_val = float(values[best])
    angles = np.array([po.ravel()[best], az.ravel()[best]])
    steps = np.array([polar[1] - polar[0], azimuth[1] - azimuth[0]])
    for _ in range(search.refine_iters):
        for _ in range(_MAX_POLLS):
            improved = False
            trials = []
            for axis in (0, 1):
                for sign in (1.0, -1.0):
                    cand = angles.copy()
                    cand[axis] += sign * steps[axis]
                    trials.append(cand)
            trials = np.array(trials)
            vals = objective(_bloch_states(trials[:, 0], trials[:, 1]))
            k = int(np.argmax(vals))
            if vals[k] > best_val:
                best_val = float(vals[k])
                angles = trials[k]
                improved = True
            if not improved:
                break
        steps = steps / 2
    probe = Probe.bloch(float(angles[0]), float(angles[1]))
    return QfiResult(max(best_val, 0.0), "sld", dx), probe


def _noisy_point(beta: float, family, cfg: NoisySweepConfig) -> float:
    schedule = optimal_schedule(family, (1.0 + beta) * cfg.x_true, cfg.m, cfg.T)
    return max_noisy_qfi(family, cfg.x_true, schedule, cfg.eta, cfg.dx, cfg.probe_search)[0].value


def noisy_baseline(cfg: NoisySweepConfig, family: HamiltonianFamily) -> float:
    """Probe-maximised QFI of the same noisy evolution with identity controls."""
    schedule = FeedbackSchedule.identity(family.dim, cfg.m, cfg.T)
    return max_noisy_qfi(family, cfg.x_true, schedule, cfg.eta, cfg.dx, cfg.probe_search)[0].value


def noisy_beta_sweep(
    cfg: NoisySweepConfig, family: HamiltonianFamily, *, workers: int | None = None, interval: bool = True
) -> SweepResult:
    """Probe-maximised noisy QFI per beta, the noisy baseline and the gain interval.

    The interval is found on ``cfg.search_range`` with its own pre-scan, so it
    does not depend on how fine ``cfg.beta_grid`` is.
    """
    betas = np.asarray(cfg.beta_grid, dtype=float)
    if betas.size == 0 or np.any(np.diff(betas) <= 0):
        raise ValueError("beta grid must be non-empty and strictly increasing")
    point = partial(_noisy_point, family=family, cfg=cfg)
    values = np.array(parallel_map(point, betas, workers))
    baseline = noisy_baseline(cfg, family)
    gi = None
    if interval and point(0.0) > baseline:
        grid = np.linspace(cfg.search_range[0], cfg.search_range[1], cfg.scan_points)
        scan = np.array(parallel_map(point, grid, workers)) - baseline
        gi = find_gain_interval(lambda b: point(b) - baseline, cfg.search_range, scanned=(grid, scan))
    meta = {
        "x_true": cfg.x_true,
        "T": cfg.T,
        "m": cfg.m,
        "dx": cfg.dx,
        "eta": cfg.eta,
        "family": family.to_spec(),
    }
    return SweepResult(betas, values, baseline, gi, meta)
