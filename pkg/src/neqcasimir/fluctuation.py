"""Thermal weights and the correlator of the field radiated by one plate."""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.constants import Boltzmann as K_B
from scipy.constants import hbar as HBAR

from .basis import SPEED_OF_LIGHT, ModeGrid, sigma_weight
from .errors import DomainError
from .scattering import ScatteringMatrix

__all__ = [
    "ThermalState",
    "SourceCorrelator",
    "thermal_weight",
    "bose_occupation",
    "kirchhoff_bracket",
    "absorption_bracket",
    "source_correlator",
    "environment_correlator",
    "HBAR",
    "K_B",
]

HERMITICITY_TOL = 1e-12
PSD_TOL = 1e-10


@dataclass(frozen=True)
class ThermalState:
    T1: float
    T2: float

    def __post_init__(self):
        if not (self.T1 >= 0 and self.T2 >= 0):
            raise DomainError("temperatures must be non-negative")


def bose_occupation(omega, T):
    """n(omega, T) = 1 / (exp(hbar omega / k_B T) - 1); zero at T = 0."""
    omega = np.asarray(omega, dtype=float)
    T = np.asarray(T, dtype=float)
    if np.any(omega <= 0):
        raise DomainError("omega must be positive")
    if np.any(T < 0):
        raise DomainError("temperature must be non-negative")
    with np.errstate(divide="ignore", over="ignore"):
        x = HBAR * omega / (K_B * T)
        n = np.where(T > 0, 1.0 / np.expm1(x), 0.0)
    return n[()] if n.ndim == 0 else n


def thermal_weight(omega, T):
    """F(omega, T) = (hbar omega / 2) coth(hbar omega / 2 k_B T), in J."""
    omega = np.asarray(omega, dtype=float)
    F = HBAR * omega * (0.5 + bose_occupation(omega, T))
    return F[()] if np.ndim(F) == 0 else F


def _matmul_diag_right(A, d):
    # A @ diag(d) for stacked blocks
    return A * d[:, None, :]


def _matmul_diag_left(d, A):
    return d[:, :, None] * A


def kirchhoff_bracket(S: ScatteringMatrix) -> np.ndarray:
    """Sigma_-1^pw - S Sigma_-1^pw S^+ + S Sigma_-1^ew - Sigma_-1^ew S^+ (blocks)."""
    grid = S.grid
    pw = sigma_weight(grid, -1, "pw")
    ew = sigma_weight(grid, -1, "ew")
    A = S.blocks
    Ah = np.conj(np.swapaxes(A, -1, -2))
    out = -_matmul_diag_right(A, pw) @ Ah
    out += _matmul_diag_right(A, ew) - _matmul_diag_left(ew, Ah)
    idx = np.arange(grid.block_size)
    out[:, idx, idx] += pw
    return out


def absorption_bracket(S: ScatteringMatrix) -> np.ndarray:
    """Sigma_1^pw - S^+ Sigma_1^pw S - Sigma_1^ew S + S^+ Sigma_1^ew (blocks).

    Positive semidefinite exactly when the plate absorbs the power of every
    incident field, propagating or evanescent.
    """
    grid = S.grid
    pw = sigma_weight(grid, 1, "pw")
    ew = sigma_weight(grid, 1, "ew")
    A = S.blocks
    Ah = np.conj(np.swapaxes(A, -1, -2))
    out = -Ah @ _matmul_diag_left(pw, A)
    out += -_matmul_diag_left(ew, A) + _matmul_diag_right(Ah, ew)
    idx = np.arange(grid.block_size)
    out[:, idx, idx] += pw
    return out


@dataclass(frozen=True, eq=False)
class SourceCorrelator:
    """<b^(A) b^(A)+> at one frequency, stored block-wise."""

    grid: ModeGrid
    blocks: np.ndarray

    def hermiticity_defect(self) -> float:
        scale = float(np.abs(self.blocks).max()) or 1.0
        herm = np.conj(np.swapaxes(self.blocks, -1, -2))
        return float(np.abs(self.blocks - herm).max()) / scale

    def min_eigenvalue(self) -> float:
        herm = 0.5 * (self.blocks + np.conj(np.swapaxes(self.blocks, -1, -2)))
        return float(np.linalg.eigvalsh(herm).min())

    def norm(self) -> float:
        return float(np.linalg.norm(self.blocks, ord=2, axis=(-2, -1)).max())

    def is_psd(self, tol: float = PSD_TOL) -> bool:
        return self.min_eigenvalue() >= -tol * self.norm()


def source_correlator(S: ScatteringMatrix, omega, T, check=True) -> SourceCorrelator:
    """Correlator of the amplitudes radiated by a plate at temperature T.

    (2 pi omega / c^2) F(omega, T) [Sigma_-1^pw - S Sigma_-1^pw S^+
    + S Sigma_-1^ew - Sigma_-1^ew S^+], with the factor order kept as written
    because S need not be diagonal.
    """
    grid = S.grid
    if grid.imaginary_axis:
        raise DomainError("source correlators are defined at real frequency")
    if not np.isclose(float(omega), grid.frequency, rtol=1e-14, atol=0.0):
        raise DomainError(f"omega={omega!r} does not match the grid frequency {grid.frequency!r}")
    pref = 2 * np.pi * grid.frequency / SPEED_OF_LIGHT**2 * thermal_weight(grid.frequency, T)
    corr = SourceCorrelator(grid, pref * kirchhoff_bracket(S))
    if check:
        if corr.hermiticity_defect() > HERMITICITY_TOL:
            warnings.warn(
                f"source correlator not Hermitian (defect {corr.hermiticity_defect():.2e}); "
                "the scattering matrix may be unphysical"
            )
        elif not corr.is_psd():
            warnings.warn("source correlator is not positive semidefinite; S may be non-passive")
    return corr


def environment_correlator(grid: ModeGrid, T) -> np.ndarray:
    """Diagonal of <b_env b_env*>: (2 pi omega / c^2) F Re(1 / k_z), shape (B, m)."""
    pref = 2 * np.pi * grid.frequency / SPEED_OF_LIGHT**2 * thermal_weight(grid.frequency, T)
    return pref * np.real(1.0 / grid.kz)
