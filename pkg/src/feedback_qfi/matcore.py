"""Small dense complex matrix kernel.

Everything here operates on numpy arrays of shape ``(..., d, d)``; leading
axes are treated as a batch so that sweeps over many probes or many random
matrices run as a handful of vectorised operations.  The Hermitian
eigensolver is a cyclic Jacobi iteration, which is exact enough for d <= 8
that unitaries built from it stay unitary to machine precision.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .constants import TOL
from .errors import (
    ConvergenceError,
    InvalidMatrixError,
    InvalidStateError,
    NotUnitaryError,
)


class Spectrum(NamedTuple):
    """Eigenvalues sorted in decreasing order with matching eigenvector columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


def dagger(a: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(a, -1, -2))


def _square(a) -> np.ndarray:
    a = np.asarray(a, dtype=np.complex128)
    if a.ndim < 2 or a.shape[-1] != a.shape[-2] or a.shape[-1] < 1:
        raise InvalidMatrixError(f"expected square matrices, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise InvalidMatrixError("matrix has non-finite entries")
    return a


def hermitian_deviation(a: np.ndarray) -> float:
    a = np.asarray(a)
    if a.size == 0:
        return 0.0
    return float(np.max(np.abs(a - dagger(a))))


def as_hermitian(a, tol: float = TOL.hermitian) -> np.ndarray:
    """Validate Hermiticity and return the exactly symmetrised complex copy."""
    a = _square(a)
    dev = hermitian_deviation(a)
    if dev > tol:
        raise InvalidMatrixError(f"matrix is not Hermitian (max |A - A^H| = {dev:.3e})")
    return 0.5 * (a + dagger(a))


def unitary_deviation(m) -> float:
    m = np.asarray(m, dtype=np.complex128)
    eye = np.eye(m.shape[-1])
    return float(np.max(np.abs(dagger(m) @ m - eye)))


def is_unitary(m, tol: float = TOL.unitary) -> bool:
    """True iff max |(M^H M - I)_ij| <= tol (for every matrix in a batch)."""
    m = _square(m)
    return unitary_deviation(m) <= tol


def as_unitary(u, tol: float = TOL.unitary) -> np.ndarray:
    u = _square(u)
    dev = unitary_deviation(u)
    if dev > tol:
        raise NotUnitaryError(f"matrix is not unitary (max |U^H U - I| = {dev:.3e})")
    return u


def as_density(rho) -> np.ndarray:
    """Validate a density matrix (or a batch) and return it symmetrised."""
    rho = _square(rho)
    dev = hermitian_deviation(rho)
    if dev > TOL.hermitian:
        raise InvalidStateError(f"density matrix is not Hermitian (deviation {dev:.3e})")
    rho = 0.5 * (rho + dagger(rho))
    tr = np.trace(rho, axis1=-2, axis2=-1).real
    if np.any(np.abs(tr - 1.0) > TOL.trace):
        raise InvalidStateError(f"density matrix trace {np.ravel(tr)[0]!r} != 1")
    w = hermitian_eig(rho, check=False).eigenvalues
    if np.any(w < -TOL.psd_clamp):
        raise InvalidStateError(f"density matrix has negative eigenvalue {w.min():.3e}")
    return rho


def pure_density(psi) -> np.ndarray:
    """|psi><psi| for a vector or a batch of vectors along the last axis."""
    psi = np.asarray(psi, dtype=np.complex128)
    return psi[..., :, None] * np.conj(psi[..., None, :])


_NEGLIGIBLE = 1e-30


def _jacobi_rotation(a, v, p, q):
    # Zero a[..., p, q] with J = diag(1, e^{-i phi}) @ [[c, s], [-s, c]] acting on (p, q).
    # Entries this far below the unit peak entry cannot matter and risk overflow when divided by.
    apq = a[..., p, q]
    r = np.abs(apq)
    active = r > _NEGLIGIBLE
    safe_r = np.where(active, r, 1.0)
    phase = np.where(active, apq / safe_r, 1.0)
    theta = (a[..., q, q].real - a[..., p, p].real) / (2.0 * safe_r)
    t = np.where(theta >= 0.0, 1.0, -1.0) / (np.abs(theta) + np.hypot(theta, 1.0))
    t = np.where(active, t, 0.0)
    c = 1.0 / np.sqrt(1.0 + t * t)
    s = t * c
    jrot = np.empty(a.shape[:-2] + (2, 2), dtype=np.complex128)
    jrot[..., 0, 0] = c
    jrot[..., 0, 1] = s
    jrot[..., 1, 0] = -s * np.conj(phase)
    jrot[..., 1, 1] = c * np.conj(phase)
    idx = [p, q]
    a[..., :, idx] = a[..., :, idx] @ jrot
    a[..., idx, :] = dagger(jrot) @ a[..., idx, :]
    a[..., p, q] = 0.0
    a[..., q, p] = 0.0
    v[..., :, idx] = v[..., :, idx] @ jrot


def hermitian_eig(a, *, check: bool = True) -> Spectrum:
    """Eigen-decomposition of a Hermitian matrix (or batch) by cyclic Jacobi.

    Eigenvalues come back in decreasing order.  Iteration stops once the
    off-diagonal Frobenius norm drops below ``1e-13 * ||A||_F``.

    Raises:
        InvalidMatrixError: input not Hermitian (only when ``check``).
        ConvergenceError: sweep cap reached.
    """
    a = as_hermitian(a) if check else 0.5 * (_square(a) + dagger(_square(a)))
    n = a.shape[-1]
    v = np.broadcast_to(np.eye(n, dtype=np.complex128), a.shape).copy()
    # Work on A / max|A_ij| so thresholds are scale free and squares cannot underflow.
    peak = np.max(np.abs(a), axis=(-2, -1))
    safe_norm = np.where(peak > 0, peak, 1.0)
    a = a / safe_norm[..., None, None]
    scale = np.sqrt(np.sum(np.abs(a) ** 2, axis=(-2, -1)))
    offmask = ~np.eye(n, dtype=bool)
    pairs = [(p, q) for p in range(n - 1) for q in range(p + 1, n)]
    for _ in range(TOL.jacobi_max_sweeps):
        off = np.sqrt(np.sum(np.abs(a[..., offmask]) ** 2, axis=-1))
        if np.all(off <= TOL.jacobi_rel * scale):
            break
        for p, q in pairs:
            _jacobi_rotation(a, v, p, q)
    else:
        off = np.sqrt(np.sum(np.abs(a[..., offmask]) ** 2, axis=-1))
        if not np.all(off <= TOL.jacobi_rel * scale):
            raise ConvergenceError(float(np.max(off)), TOL.jacobi_max_sweeps)
    w = np.diagonal(a, axis1=-2, axis2=-1).real * safe_norm[..., None]
    order = np.argsort(-w, axis=-1, kind="stable")
    w = np.take_along_axis(w, order, axis=-1)
    v = np.take_along_axis(v, order[..., None, :], axis=-1)
    return Spectrum(w, v)


def from_spectrum(w: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Rebuild V diag(w) V^H."""
    return (v * w[..., None, :]) @ dagger(v)


def expm_i(h, t: float) -> np.ndarray:
    """exp(-i H t) through the eigendecomposition of H."""
    if not np.isfinite(t):
        raise ValueError("time must be finite")
    w, v = hermitian_eig(h)
    if t == 0:
        return np.broadcast_to(np.eye(w.shape[-1], dtype=np.complex128), v.shape).copy()
    return from_spectrum(np.exp(-1j * w * t), v)


def psd_sqrt(a) -> np.ndarray:
    """Square root of a positive semidefinite matrix.

    Eigenvalues in [-1e-6, 0) are treated as rounding noise and clamped to 0.
    """
    w, v = hermitian_eig(a)
    if np.any(w < -TOL.psd_invalid):
        raise InvalidStateError(f"matrix is not positive semidefinite (eigenvalue {w.min():.3e})")
    return from_spectrum(np.sqrt(np.clip(w, 0.0, None)).astype(np.complex128), v)


def _factor_sqrt(rho: np.ndarray) -> np.ndarray:
    # sqrt(rho) with eigenvalues at rounding level (relative 64 eps) snapped to zero,
    # so rank-deficient states do not pick up sqrt(eps) ~ 1e-8 spurious weight.
    w, v = hermitian_eig(rho, check=False)
    floor = 64 * np.finfo(float).eps * np.max(np.abs(w), axis=-1, keepdims=True)
    w = np.where(w > floor, w, 0.0)
    return from_spectrum(np.sqrt(w).astype(np.complex128), v)


def fidelity(rho1, rho2) -> float | np.ndarray:
    """Root fidelity Tr sqrt(sqrt(rho1) rho2 sqrt(rho1)), in [0, 1].

    Evaluated as the nuclear norm of sqrt(rho1) sqrt(rho2), whose singular
    values are read off the Hermitian dilation [[0, X], [X^H, 0]]; this keeps
    full precision for pure and nearly pure states.
    """
    rho1 = as_density(rho1)
    rho2 = as_density(rho2)
    x = _factor_sqrt(rho1) @ _factor_sqrt(rho2)
    d = x.shape[-1]
    dil = np.zeros(x.shape[:-2] + (2 * d, 2 * d), dtype=np.complex128)
    dil[..., :d, d:] = x
    dil[..., d:, :d] = dagger(x)
    sv = hermitian_eig(dil, check=False).eigenvalues[..., :d]
    f = np.clip(np.sum(np.clip(sv, 0.0, None), axis=-1), 0.0, 1.0)
    return float(f) if np.ndim(f) == 0 else f


def bures_distance(rho1, rho2) -> float | np.ndarray:
    """sqrt(2 - 2 F), between 0 and sqrt(2)."""
    f = fidelity(rho1, rho2)
    d = np.sqrt(np.clip(2.0 - 2.0 * np.asarray(f), 0.0, None))
    return float(d) if np.ndim(d) == 0 else d
