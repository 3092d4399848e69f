"""Eigen-angles of unitaries and their spread.

A unitary ``U`` has eigenvalues ``exp(-i theta_j)``; the angles ``theta_j``
live on the branch (-pi, pi] and are returned in decreasing order.  Half the
spread between the extreme angles controls how far ``U`` can move any input
state, which is what bounds the Fisher information of a unitary channel.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .constants import TOL
from .errors import ValidityError
from .matcore import as_unitary, dagger, hermitian_eig


@dataclass(frozen=True)
class SpreadReport:
    c_te: float | np.ndarray
    spread: float | np.ndarray
    wraparound_flag: bool | np.ndarray


def unitary_eig(u, *, check: bool = True) -> tuple[np.ndarray, np.ndarray]:
    """Eigen-angles (descending) and matching joint eigenvectors of a unitary.

    ``A = (U + U^H)/2`` and ``B = (U - U^H)/2i`` commute, so diagonalising
    ``A`` and then ``B`` inside each (near-)degenerate eigenspace of ``A``
    gives eigenvectors of ``U`` using only the Hermitian solver.
    """
    u = as_unitary(u) if check else np.asarray(u, dtype=np.complex128)
    a = 0.5 * (u + dagger(u))
    b = (u - dagger(u)) / 2j
    wa, va = hermitian_eig(a, check=False)
    # Group labels for runs of A-eigenvalues closer than the degeneracy threshold.
    gaps = (wa[..., :-1] - wa[..., 1:]) > TOL.degeneracy
    labels = np.concatenate(
        [np.zeros(wa.shape[:-1] + (1,), dtype=int), np.cumsum(gaps, axis=-1)], axis=-1
    )
    same = labels[..., :, None] == labels[..., None, :]
    b_local = np.where(same, dagger(va) @ b @ va, 0.0)
    _, q = hermitian_eig(b_local, check=False)
    w = va @ q
    re = np.einsum("...ij,...ik,...kj->...j", np.conj(w), a, w).real
    im = np.einsum("...ij,...ik,...kj->...j", np.conj(w), b, w).real
    theta = -np.arctan2(im, re)
    theta = np.where(theta <= -np.pi, theta + 2 * np.pi, theta)
    order = np.argsort(-theta, axis=-1, kind="stable")
    theta = np.take_along_axis(theta, order, axis=-1)
    w = np.take_along_axis(w, order[..., None, :], axis=-1)
    return theta, w


def eigen_angles(u, *, check: bool = True) -> np.ndarray:
    """Angles theta_j in (-pi, pi] with exp(-i theta_j) the eigenvalues, sorted descending."""
    return unitary_eig(u, check=check)[0]


def c_te(u, *, check: bool = True) -> SpreadReport:
    """Half the spread between the largest and smallest eigen-angle."""
    theta = eigen_angles(u, check=check)
    spread = theta[..., 0] - theta[..., -1]
    if np.ndim(spread) == 0:
        spread = float(spread)
    return SpreadReport(spread / 2, spread, spread > np.pi)


def arc_c_te(u, *, check: bool = True) -> float | np.ndarray:
    """Half the shortest arc of the unit circle holding every eigenvalue.

    Unlike :func:`c_te` this ignores the branch cut, so it is invariant under
    global phase.  The two agree whenever ``c_te`` reports no wraparound.
    """
    theta = eigen_angles(u, check=check)
    gaps = theta[..., :-1] - theta[..., 1:]
    wrap = 2 * np.pi - (theta[..., 0] - theta[..., -1])
    widest = np.maximum(wrap, np.max(gaps, axis=-1, initial=0.0))
    out = (2 * np.pi - widest) / 2
    return float(out) if np.ndim(out) == 0 else out


def min_fidelity_over_inputs(u, *, check: bool = True) -> float:
    """cos(c_te(U)): the smallest fidelity between rho and U rho U^H over all inputs.

    Raises:
        ValidityError: the angle spread exceeds pi, where the formula stops holding.
    """
    rep = c_te(u, check=check)
    if np.any(rep.wraparound_flag):
        raise ValidityError(
            f"eigen-angle spread {np.max(rep.spread):.6f} violates theta_max - theta_min <= pi"
        )
    out = np.cos(rep.c_te)
    return float(out) if np.ndim(out) == 0 else out


def extremal_probe(u, *, check: bool = True) -> np.ndarray:
    """(v_max + v_min)/sqrt(2) from the eigenvectors at the extreme angles.

    Within a degenerate extremal group the first vector is taken; if all
    angles coincide the first eigenvector alone is returned.
    """
    theta, w = unitary_eig(u, check=check)
    at_min = theta <= theta[..., -1:] + TOL.degeneracy
    i_min = np.argmax(at_min, axis=-1)
    v_max = w[..., :, 0]
    v_min = np.take_along_axis(w, i_min[..., None, None], axis=-1)[..., 0]
    flat = (i_min == 0)[..., None]
    return np.where(flat, v_max, (v_max + v_min) / np.sqrt(2.0))
