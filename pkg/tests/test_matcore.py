import math

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings
from hypothesis import strategies as st

from feedback_qfi.constants import SIGMA_1, SIGMA_3
from feedback_qfi.errors import InvalidMatrixError, InvalidStateError
from feedback_qfi.matcore import (
    bures_distance,
    expm_i,
    fidelity,
    from_spectrum,
    hermitian_eig,
    is_unitary,
    psd_sqrt,
    pure_density,
)

from .conftest import random_density, random_hermitian, random_pure, random_unitary


def test_pauli_spectrum():
    w, v = hermitian_eig(SIGMA_1)
    np.testing.assert_allclose(w, [1, -1], atol=1e-15)
    # eigenvectors up to phase
    assert abs(abs(np.vdot(v[:, 0], [1, 1])) / math.sqrt(2) - 1) < 1e-14
    assert abs(abs(np.vdot(v[:, 1], [1, -1])) / math.sqrt(2) - 1) < 1e-14


def test_diagonal_sorted_descending():
    w, _ = hermitian_eig(np.diag([3.0, 1.0, 2.0]))
    np.testing.assert_array_equal(w, [3, 2, 1])


@pytest.mark.parametrize("d", [2, 3, 4, 6, 8])
def test_reconstruction_and_orthonormality(rng, d):
    for _ in range(20):
        a = random_hermitian(rng, d)
        w, v = hermitian_eig(a)
        assert np.max(np.abs(from_spectrum(w, v) - a)) < 1e-10
        assert np.max(np.abs(v.conj().T @ v - np.eye(d))) < 1e-10
        assert np.all(np.diff(w) <= 0)
        np.testing.assert_allclose(w, np.linalg.eigvalsh(a)[::-1], atol=1e-10)


def test_batched_eig_matches_single(rng):
    a = np.stack([random_hermitian(rng, 3) for _ in range(7)])
    wb, _ = hermitian_eig(a)
    for k in range(7):
        np.testing.assert_allclose(wb[k], hermitian_eig(a[k]).eigenvalues, atol=1e-13)


def test_zero_matrix_and_degenerate():
    w, v = hermitian_eig(np.zeros((3, 3)))
    np.testing.assert_array_equal(w, 0)
    w, v = hermitian_eig(np.eye(4) * 2.5)
    np.testing.assert_allclose(w, 2.5)


def test_rejects_non_hermitian():
    with pytest.raises(InvalidMatrixError):
        hermitian_eig(np.array([[0, 1], [0, 0]]))


@pytest.mark.parametrize("shift", [-3.0, 0.5, 10.0])
def test_shift_property(rng, shift):
    a = random_hermitian(rng, 4)
    np.testing.assert_allclose(
        hermitian_eig(a + shift * np.eye(4)).eigenvalues, hermitian_eig(a).eigenvalues + shift, atol=1e-10
    )


def test_expm_identity_and_diagonal():
    np.testing.assert_array_equal(expm_i(np.zeros((3, 3)), 2.7), np.eye(3))
    th = 0.83
    np.testing.assert_allclose(expm_i(SIGMA_3, th), np.diag([np.exp(1j * th), np.exp(-1j * th)]), atol=1e-15)


def test_expm_pauli_closed_form():
    # exp(-i theta n.sigma) = cos theta I - i sin theta n.sigma
    np.testing.assert_allclose(expm_i(SIGMA_1, math.pi / 2), -1j * SIGMA_1, atol=1e-15)


def test_expm_against_scipy(rng):
    for d in (2, 3, 5):
        h = random_hermitian(rng, d)
        np.testing.assert_allclose(expm_i(h, 1.3), scipy.linalg.expm(-1j * h * 1.3), atol=1e-12)


def test_expm_group_property(rng):
    h = random_hermitian(rng, 4)
    np.testing.assert_allclose(expm_i(h, 0.4 + 1.1), expm_i(h, 0.4) @ expm_i(h, 1.1), atol=1e-10)


def test_is_unitary(rng):
    assert is_unitary(np.eye(3), 1e-10)
    assert not is_unitary(2 * np.eye(3), 1e-10)
    assert is_unitary(expm_i(random_hermitian(rng, 4), 1.3), 1e-10)


def test_psd_sqrt_examples(rng):
    np.testing.assert_allclose(psd_sqrt(np.eye(2)), np.eye(2), atol=1e-15)
    np.testing.assert_allclose(psd_sqrt(np.diag([4.0, 9.0]) / 13), np.diag([2.0, 3.0]) / math.sqrt(13), atol=1e-15)
    for d in (2, 3, 4):
        a = random_density(rng, d, rank=max(1, d - 1))
        s = psd_sqrt(a)
        assert np.max(np.abs(s @ s - a)) < 1e-9


def test_psd_sqrt_clamps_and_rejects():
    tiny = np.diag([1.0, -1e-9])
    np.testing.assert_allclose(psd_sqrt(tiny), np.diag([1.0, 0.0]))
    with pytest.raises(InvalidStateError):
        psd_sqrt(np.diag([1.0, -1e-3]))


def test_fidelity_examples(rng):
    rho = random_density(rng, 3)
    assert fidelity(rho, rho) == pytest.approx(1.0, abs=1e-9)
    psi, phi = random_pure(rng, 3), random_pure(rng, 3)
    assert fidelity(pure_density(psi), pure_density(phi)) == pytest.approx(abs(np.vdot(psi, phi)), abs=1e-7)
    assert fidelity(np.eye(2) / 2, pure_density([1, 0])) == pytest.approx(1 / math.sqrt(2), abs=1e-12)


def test_fidelity_symmetric_and_invalid(rng):
    a, b = random_density(rng, 3), random_density(rng, 3)
    assert fidelity(a, b) == pytest.approx(fidelity(b, a), abs=1e-9)
    with pytest.raises(InvalidStateError):
        fidelity(2 * a, b)


def test_bures_examples():
    z0, z1 = pure_density([1, 0]), pure_density([0, 1])
    assert bures_distance(z0, z0) == pytest.approx(0.0, abs=1e-7)
    assert bures_distance(z0, z1) == pytest.approx(math.sqrt(2), abs=1e-12)
    for theta in (0.3, 1.0, 2.5):
        tilted = pure_density([math.cos(theta / 2), math.sin(theta / 2)])
        mixed = 0.999 * tilted + 0.001 * np.eye(2) / 2
        assert bures_distance(z0, tilted) == pytest.approx(math.sqrt(2 - 2 * math.cos(theta / 2)), abs=1e-7)
        assert bures_distance(z0, mixed) < math.sqrt(2)


def test_fidelity_unitary_invariance(rng):
    for d in (2, 3, 4):
        a, b, u = random_density(rng, d), random_density(rng, d), random_unitary(rng, d)
        assert fidelity(u @ a @ u.conj().T, u @ b @ u.conj().T) == pytest.approx(fidelity(a, b), abs=1e-9)


def test_bures_triangle_inequality(rng):
    for _ in range(200):
        d = int(rng.integers(2, 5))
        a, b, c = (random_density(rng, d) for _ in range(3))
        assert bures_distance(a, c) <= bures_distance(a, b) + bures_distance(b, c) + 1e-9


@settings(max_examples=60, deadline=None)
@given(
    st.lists(st.floats(-5, 5), min_size=6, max_size=6),
    st.floats(-4, 4),
    st.floats(-4, 4),
)
def test_expm_unitary_and_additive(coeffs, s, t):
    h = np.array(
        [[coeffs[0], coeffs[1] + 1j * coeffs[2]], [coeffs[1] - 1j * coeffs[2], coeffs[3]]], dtype=complex
    ) + coeffs[4] * SIGMA_1 + coeffs[5] * SIGMA_3
    assert is_unitary(expm_i(h, s), 1e-10)
    assert np.max(np.abs(expm_i(h, s + t) - expm_i(h, s) @ expm_i(h, t))) < 1e-10


def test_eig_survives_subnormal_off_diagonal():
    a = np.array([[1.0, 1e-320 + 1e-320j], [1e-320 - 1e-320j, -2.0]])
    w, _ = hermitian_eig(a)
    np.testing.assert_array_equal(w, [1.0, -2.0])


def test_eig_scale_free():
    a = np.array([[0.0, 1.0], [1.0, 0.0]])
    for s in (1e-200, 1.0, 1e200):
        np.testing.assert_allclose(hermitian_eig(s * a).eigenvalues, [s, -s], rtol=1e-14)
