"""Multiple scattering inside the gap.

The amplitudes of the intracavity field obey b+ = b1 + S1 b- and
b- = b2 + S2 b+, solved by the round-trip resolvents
U12 = (1 - S1 S2)^-1 and U21 = (1 - S2 S1)^-1.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ResonanceError, StructuralError
from .fluctuation import SourceCorrelator
from .scattering import ScatteringMatrix

__all__ = ["CavityOperator", "IntracavityCorrelators", "cavity_operator", "intracavity_correlators"]

MAX_CONDITION = 1e12
RESIDUAL_TOL = 1e-10


def dagger(A):
    return np.conj(np.swapaxes(A, -1, -2))


@dataclass(frozen=True, eq=False)
class CavityOperator:
    U12: np.ndarray
    U21: np.ndarray
    condition_estimate: float


@dataclass(frozen=True, eq=False)
class IntracavityCorrelators:
    """Blocks C^(KK') = <b^(K) b^(K')+> for K, K' in {+, -}."""

    pp: np.ndarray
    pm: np.ndarray
    mp: np.ndarray
    mm: np.ndarray

    def block(self, K: str, Kp: str) -> np.ndarray:
        return {("+", "+"): self.pp, ("+", "-"): self.pm,
                ("-", "+"): self.mp, ("-", "-"): self.mm}[(K, Kp)]


def _same_grid(S1: ScatteringMatrix, S2: ScatteringMatrix):
    g1, g2 = S1.grid, S2.grid
    if g1 is g2:
        return
    if (g1.frequency != g2.frequency or g1.imaginary != g2.imaginary
            or g1.k_vectors.shape != g2.k_vectors.shape
            or not np.array_equal(g1.k_vectors, g2.k_vectors)):
        raise StructuralError("both scattering matrices must live on the same grid and frequency")


def _resolvent(A, B, omega, method):
    m = A.shape[-1]
    eye = np.broadcast_to(np.eye(m), A.shape)
    M = eye - A @ B
    if method == "neumann":
        # sum_n (AB)^n, only for well-separated plates
        P = A @ B
        if np.linalg.norm(P, ord=2, axis=(-2, -1)).max() >= 1:
            raise ResonanceError("Neumann series diverges: round-trip operator norm >= 1", omega=omega)
        U = np.array(eye, dtype=complex)
        term = np.array(eye, dtype=complex)
        for _ in range(10000):
            term = term @ P
            U = U + term
            if np.abs(term).max() <= 1e-17 * np.abs(U).max():
                break
        cond = float(np.linalg.cond(M).max())
        return U, cond, M
    cond = np.linalg.cond(M)
    worst = float(np.max(cond)) if cond.size else 1.0
    if not np.isfinite(worst) or worst > MAX_CONDITION:
        raise ResonanceError(
            f"1 - S S is singular or ill-conditioned (condition {worst:.3g}) at omega={omega!r}; "
            "lossless cavity mode",
            omega=omega, condition=worst,
        )
    U = np.linalg.solve(M, np.array(eye, dtype=complex))
    return U, worst, M


def cavity_operator(S1: ScatteringMatrix, S2: ScatteringMatrix, method: str = "direct") -> CavityOperator:
    """U12 = (1 - S1 S2)^-1 and U21 = (1 - S2 S1)^-1 by dense block solves.

    ``method="neumann"`` sums the geometric series instead (cross-check mode).
    """
    _same_grid(S1, S2)
    omega = S1.grid.omega
    U12, c12, M12 = _resolvent(S1.blocks, S2.blocks, omega, method)
    U21, c21, M21 = _resolvent(S2.blocks, S1.blocks, omega, method)
    m = S1.grid.block_size
    eye = np.eye(m)
    for M, U in ((M12, U12), (M21, U21)):
        if U.size and np.abs(M @ U - eye).max() > RESIDUAL_TOL * max(1.0, np.abs(U).max()):
            raise ResonanceError("cavity solve residual above tolerance", omega=omega,
                                 condition=max(c12, c21))
    return CavityOperator(U12, U21, max(c12, c21))


def intracavity_correlators(S1: ScatteringMatrix, S2: ScatteringMatrix, corr1: SourceCorrelator,
                            corr2: SourceCorrelator, cavity: CavityOperator | None = None
                            ) -> IntracavityCorrelators:
    """Correlators of the gap amplitudes b+ and b-; the plates radiate independently.

    C++ = U12 C1 U12+ + S1 U21 C2 U21+ S1+
    C-- = S2 U12 C1 U12+ S2+ + U21 C2 U21+
    C+- = U12 C1 U12+ S2+ + S1 U21 C2 U21+,   C-+ = (C+-)+
    """
    _same_grid(S1, S2)
    cav = cavity or cavity_operator(S1, S2)
    A1, A2 = S1.blocks, S2.blocks
    X1 = cav.U12 @ corr1.blocks @ dagger(cav.U12)
    X2 = cav.U21 @ corr2.blocks @ dagger(cav.U21)
    pp = X1 + A1 @ X2 @ dagger(A1)
    mm = A2 @ X1 @ dagger(A2) + X2
    pm = X1 @ dagger(A2) + A1 @ X2
    return IntracavityCorrelators(pp, pm, dagger(pm), mm)
