"""Feedback-controlled evolutions and the mis-estimation sweeps.

The total evolution with ``m`` segments of length ``t = T/m`` is the
operator product ``U_t(x) U_1 U_t(x) U_2 ... U_t(x) U_m``.  Controls are
built from an estimate ``x_hat`` and are held fixed when differentiating
with respect to the true parameter.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import partial
from typing import Callable, Iterable, Sequence

import numpy as np

from .constants import DEFAULT_DX, TOL
from .errors import NotUnitaryError
from .hamfam import HamiltonianFamily
from .matcore import dagger, unitary_deviation
from .qfi import QfiResult, channel_qfi_fd


DEFAULT_SEARCH_RANGE = (-3.0, 3.0)
DEFAULT_SCAN_POINTS = 601


@dataclass(frozen=True, eq=False)
class FeedbackSchedule:
    m: int
    T: float
    controls: tuple[np.ndarray, ...]

    def __post_init__(self):
        if int(self.m) != self.m or self.m < 1:
            raise ValueError(f"segment count m must be a positive integer, got {self.m}")
        if not self.T > 0:
            raise ValueError(f"total time T must be positive, got {self.T}")
        controls = tuple(np.asarray(c, dtype=np.complex128) for c in self.controls)
        if len(controls) != self.m:
            raise ValueError(f"expected {self.m} controls, got {len(controls)}")
        for i, c in enumerate(controls, start=1):
            dev = unitary_deviation(c)
            if dev > TOL.unitary:
                raise NotUnitaryError(f"control U_{i} is not unitary (deviation {dev:.3e})")
        object.__setattr__(self, "controls", controls)

    @property
    def t(self) -> float:
        return self.T / self.m

    @classmethod
    def identity(cls, dim: int, m: int, T: float) -> FeedbackSchedule:
        """No feedback: every control is the identity."""
        eye = np.eye(dim, dtype=np.complex128)
        return cls(m, T, (eye,) * m)


@dataclass(frozen=True)
class GainInterval:
    """Innermost roots of controlled - baseline around beta = 0.

    An ``*_open`` flag means no crossing was found on that side and the
    endpoint is the edge of the search range.
    """

    lo: float
    hi: float
    lo_open: bool = False
    hi_open: bool = False

    @property
    def is_open(self) -> bool:
        return self.lo_open or self.hi_open


@dataclass(eq=False)
class SweepResult:
    betas: np.ndarray
    qfi_controlled: np.ndarray
    qfi_uncontrolled: float
    gain_interval: GainInterval | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.betas = np.asarray(self.betas, dtype=float)
        self.qfi_controlled = np.asarray(self.qfi_controlled, dtype=float)
        if self.betas.shape != self.qfi_controlled.shape:
            raise ValueError("betas and qfi_controlled must have the same length")

    @property
    def gain(self) -> np.ndarray:
        return self.qfi_controlled - self.qfi_uncontrolled


def total_unitary(family: HamiltonianFamily, x: float, schedule: FeedbackSchedule) -> np.ndarray:
    ut = family.unitary_at(x, schedule.t)
    out = np.eye(family.dim, dtype=np.complex128)
    for c in schedule.controls:
        out = out @ ut @ c
    return out


def optimal_schedule(family: HamiltonianFamily, x_hat: float, m: int, T: float) -> FeedbackSchedule:
    """U_1 = ... = U_{m-1} = U_t(x_hat)^H and U_m = I."""
    if int(m) != m or m < 1:
        raise ValueError(f"segment count m must be a positive integer, got {m}")
    inv = dagger(family.unitary_at(x_hat, T / m))
    eye = np.eye(family.dim, dtype=np.complex128)
    return FeedbackSchedule(m, T, (inv,) * (m - 1) + (eye,))


def controlled_qfi(
    family: HamiltonianFamily, x: float, schedule: FeedbackSchedule, dx: float = DEFAULT_DX
) -> QfiResult:
    """Maximal QFI of x -> total_unitary with the controls held fixed."""
    return channel_qfi_fd(partial(total_unitary, family, schedule=schedule), x, dx)


def uncontrolled_qfi(family: HamiltonianFamily, x: float, m: int, T: float, dx: float = DEFAULT_DX) -> QfiResult:
    return controlled_qfi(family, x, FeedbackSchedule.identity(family.dim, m, T), dx)


def _qfi_at_beta(beta: float, family: HamiltonianFamily, x_true: float, m: int, T: float, dx: float) -> float:
    schedule = optimal_schedule(family, (1.0 + beta) * x_true, m, T)
    return controlled_qfi(family, x_true, schedule, dx).value


def parallel_map(fn: Callable[[float], float], values: Iterable[float], workers: int | None) -> list[float]:
    """Map in grid order; with ``workers`` > 1 points go to a process pool.

    Each point is an independent pure computation, so pooled results equal
    sequential ones bit for bit.
    """
    values = list(values)
    if not workers or workers <= 1 or len(values) < 2:
        return [fn(v) for v in values]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, values, chunksize=max(1, len(values) // (4 * workers))))


def find_gain_interval(
    g: Callable[[float], float],
    search_range: tuple[float, float] = DEFAULT_SEARCH_RANGE,
    scan_points: int = DEFAULT_SCAN_POINTS,
    tol: float = TOL.bisection,
    scanned: tuple[np.ndarray, np.ndarray] | None = None,
) -> GainInterval:
    """Innermost sign changes of ``g`` on either side of 0, refined by bisection.

    ``g(0)`` must be positive.  A pre-scan grid brackets the roots; pass
    ``scanned=(grid, values)`` to reuse values already computed.
    """
    lo_end, hi_end = search_range
    if not lo_end < 0 < hi_end:
        raise ValueError(f"search range must contain 0, got {search_range}")
    g0 = g(0.0)
    if not g0 > 0:
        raise ValueError(f"no gain at beta = 0 (controlled - baseline = {g0:.6g})")
    if scanned is None:
        grid = np.linspace(lo_end, hi_end, scan_points)
        values = np.array([g(b) for b in grid])
    else:
        grid, values = (np.asarray(a, dtype=float) for a in scanned)

    def walk(side: np.ndarray) -> float | None:
        # Outward from 0 until g stops being positive; bisect that bracket.
        inside = 0.0
        for b, gb in zip(grid[side], values[side]):
            if b == 0.0:
                continue
            if gb <= 0:
                return _bisect(g, inside, float(b), tol)
            inside = float(b)
        return None

    hi = walk(grid > 0)
    lo = walk(np.flatnonzero(grid < 0)[::-1])
    return GainInterval(
        lo_end if lo is None else lo,
        hi_end if hi is None else hi,
        lo_open=lo is None,
        hi_open=hi is None,
    )


def _bisect(g: Callable[[float], float], inside: float, outside: float, tol: float) -> float:
    # Invariant: g(inside) > 0 >= g(outside).
    while abs(outside - inside) >= tol:
        mid = 0.5 * (inside + outside)
        if g(mid) > 0:
            inside = mid
        else:
            outside = mid
    return 0.5 * (inside + outside)


def beta_sweep(
    family: HamiltonianFamily,
    x_true: float,
    m: int,
    T: float,
    betas: Sequence[float],
    dx: float = DEFAULT_DX,
    *,
    workers: int | None = None,
    interval: bool = True,
) -> SweepResult:
    """Controlled QFI for controls built from x_hat = (1 + beta) x_true.

    The gain interval is bracketed on the given grid and refined by
    bisection; it is ``None`` when the grid contains no positive gain at or
    around beta = 0.
    """
    betas = np.asarray(betas, dtype=float)
    if betas.size == 0:
        raise ValueError("beta grid is empty")
    if np.any(np.diff(betas) <= 0):
        raise ValueError("beta grid must be strictly increasing")
    point = partial(_qfi_at_beta, family=family, x_true=x_true, m=m, T=T, dx=dx)
    values = np.array(parallel_map(point, betas, workers))
    baseline = uncontrolled_qfi(family, x_true, m, T, dx).value
    gi = None
    if interval and betas[0] < 0 < betas[-1] and point(0.0) > baseline:
        gi = find_gain_interval(
            lambda b: point(b) - baseline,
            (float(betas[0]), float(betas[-1])),
            scanned=(betas, values - baseline),
        )
    meta = {"x_true": x_true, "T": T, "m": m, "dx": dx, "family": family.to_spec()}
    return SweepResult(betas, values, baseline, gi, meta)


def gain_interval(
    family: HamiltonianFamily,
    x_true: float,
    m: int,
    T: float,
    dx: float = DEFAULT_DX,
    search_range: tuple[float, float] = DEFAULT_SEARCH_RANGE,
    scan_points: int = DEFAULT_SCAN_POINTS,
) -> GainInterval:
    """Range of mis-estimation beta over which feedback beats no feedback."""
    baseline = uncontrolled_qfi(family, x_true, m, T, dx).value
    point = partial(_qfi_at_beta, family=family, x_true=x_true, m=m, T=T, dx=dx)
    return find_gain_interval(lambda b: point(b) - baseline, search_range, scan_points)


def scaling_curve(
    family: HamiltonianFamily, x: float, T: float, m_values: Iterable[int], dx: float = DEFAULT_DX
) -> list[tuple[int, float]]:
    """Controlled QFI under the exact optimal schedule (x_hat = x) for each m."""
    out = []
    for m in m_values:
        schedule = optimal_schedule(family, x, int(m), T)
        out.append((int(m), controlled_qfi(family, x, schedule, dx).value))
    return out
