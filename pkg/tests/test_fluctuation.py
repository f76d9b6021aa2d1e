import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from neqcasimir.basis import SPEED_OF_LIGHT, radial_grid
from neqcasimir.errors import DomainError
from neqcasimir.fluctuation import (
    HBAR,
    K_B,
    ThermalState,
    absorption_bracket,
    bose_occupation,
    environment_correlator,
    kirchhoff_bracket,
    source_correlator,
    thermal_weight,
)
from neqcasimir.materials import library_model
from neqcasimir.scattering import ScatteringMatrix, planar_scattering_matrix
from neqcasimir.testing import random_grid, random_reciprocal_passive

OMEGA = 1e14
Q = OMEGA / SPEED_OF_LIGHT


def test_thermal_weight_examples():
    T = HBAR * OMEGA / (2 * K_B)
    assert thermal_weight(OMEGA, T) == pytest.approx(0.656518 * HBAR * OMEGA, rel=1e-6)
    assert thermal_weight(OMEGA, 0.0) == 0.5 * HBAR * OMEGA
    T = HBAR * OMEGA / (K_B * np.log(2))
    assert bose_occupation(OMEGA, T) == pytest.approx(1.0, rel=1e-14)


@given(st.floats(1e10, 1e17), st.floats(1e-2, 1e4))
def test_thermal_weight_identity(omega, T):
    # F = hbar omega (1/2 + n), and F >= hbar omega / 2
    F = thermal_weight(omega, T)
    assert F == pytest.approx(HBAR * omega * (0.5 + bose_occupation(omega, T)), rel=1e-14)
    assert F >= 0.5 * HBAR * omega


def test_domain_checks():
    with pytest.raises(DomainError):
        bose_occupation(-1.0, 300.0)
    with pytest.raises(DomainError):
        bose_occupation(1.0, -1.0)
    with pytest.raises(DomainError):
        ThermalState(-1.0, 300.0)


def _pref(T):
    return 2 * np.pi * OMEGA / SPEED_OF_LIGHT**2 * thermal_weight(OMEGA, T)


def test_zero_matrix_correlator_is_propagating_projector():
    g = radial_grid(OMEGA, [0.5 * Q, 2 * Q], [1.0, 1.0])
    S = ScatteringMatrix(g, np.zeros((2, 2, 2)))
    C = source_correlator(S, OMEGA, 300.0)
    expected = _pref(300.0) * np.where(g.propagating, 1 / np.where(g.propagating, g.kz.real, 1.0), 0.0)
    np.testing.assert_allclose(np.diagonal(C.blocks, axis1=1, axis2=2), expected, rtol=1e-14)
    np.testing.assert_allclose(environment_correlator(g, 300.0), expected, rtol=1e-14)


def test_planar_correlator_diagonal():
    g = radial_grid(OMEGA, [0.5 * Q, 2 * Q], [1.0, 1.0])
    S = planar_scattering_matrix(library_model("sic"), g, 1, 1e-7)
    r = np.diagonal(S.blocks, axis1=1, axis2=2)
    d = np.diagonal(source_correlator(S, OMEGA, 300.0).blocks, axis1=1, axis2=2) / _pref(300.0)
    kz = g.kz
    pw = g.propagating
    np.testing.assert_allclose(d[pw], (1 - np.abs(r[pw]) ** 2) / kz[pw].real, rtol=1e-13)
    np.testing.assert_allclose(d[~pw], 2 * r[~pw].imag / kz[~pw].imag, rtol=1e-13)


@given(st.integers(1, 6), st.integers(0, 2**32 - 1), st.floats(0, 2000))
def test_random_passive_correlators_psd(half, seed, T):
    rng = np.random.default_rng(seed)
    g = random_grid(rng, 2 * half, omega=OMEGA)
    S = random_reciprocal_passive(g, rng)
    C = source_correlator(S, OMEGA, T)
    assert C.hermiticity_defect() < 1e-13
    assert C.is_psd()
    A = absorption_bracket(S)
    assert np.linalg.eigvalsh(0.5 * (A + np.conj(np.swapaxes(A, 1, 2)))).min() > 0


def test_non_passive_matrix_warns():
    g = radial_grid(OMEGA, [0.5 * Q], [1.0])
    S = ScatteringMatrix(g, 2.0 * np.eye(2)[None])
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        source_correlator(S, OMEGA, 300.0)
    assert any("positive semidefinite" in str(w.message) for w in caught)


def test_correlator_frequency_must_match_grid():
    g = radial_grid(OMEGA, [0.5 * Q], [1.0])
    S = ScatteringMatrix(g, np.zeros((1, 2, 2)))
    with pytest.raises(DomainError):
        source_correlator(S, 2 * OMEGA, 300.0)
    with pytest.raises(DomainError):
        source_correlator(ScatteringMatrix(g.with_frequency(OMEGA, imaginary=True), np.zeros((1, 2, 2))),
                          OMEGA, 300.0)


def test_brackets_hermitian_for_reciprocal_matrices(rng):
    g = random_grid(rng, 8, omega=OMEGA)
    S = random_reciprocal_passive(g, rng)
    for B in (kirchhoff_bracket(S), absorption_bracket(S)):
        np.testing.assert_allclose(B, np.conj(np.swapaxes(B, 1, 2)), atol=1e-13 * np.abs(B).max())
