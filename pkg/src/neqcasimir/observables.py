"""Force and heat-transfer kernels, assembled observables and planar oracles.

Sign conventions: a negative force per area is attraction; a positive heat
flux flows from plate 1 to plate 2.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.constants import Boltzmann as K_B
from scipy.constants import hbar as HBAR

from .basis import SPEED_OF_LIGHT, ModeGrid, radial_grid, sigma_weight
from .cavity import IntracavityCorrelators, cavity_operator, dagger
from .errors import AccuracyError, DomainError, StructuralError, UnsupportedModelError
from .fluctuation import absorption_bracket, bose_occupation, kirchhoff_bracket
from .materials import DielectricModel
from .quadrature import (
    QuadratureSpec,
    integrate_frequency,
    integrate_kperp,
    matsubara_sum,
    pairwise_sum,
)
from .scattering import LOSS_FLOOR, ScatteringMatrix, fresnel, planar_scattering_matrix, translate

__all__ = [
    "ObservableKernel",
    "SpectralRule",
    "SpectralObservable",
    "PlanarPlate",
    "ZeroPlate",
    "FilePlate",
    "as_plate",
    "observable_kernel",
    "average_observable",
    "force_kernel_J",
    "heat_kernel_H",
    "casimir_trace",
    "log_det_trace",
    "equilibrium_force",
    "free_energy",
    "noneq_force_delta",
    "noneq_force_total",
    "heat_transfer_power",
    "planar_oracle_force",
    "planar_oracle_delta",
    "planar_oracle_heat",
]

REALITY_TOL = 1e-10
LOGDET_TOL = 1e-10
# relative size below which a kernel difference is treated as rounding noise
CANCELLATION_FLOOR = 64 * np.finfo(float).eps


# -- plates --------------------------------------------------------------------

@dataclass(frozen=True)
class PlanarPlate:
    """Flat homogeneous plate (half-space, or a slab of given thickness)."""

    model: DielectricModel
    thickness: float | None = None
    loss_floor: float = LOSS_FLOOR

    isotropic = True

    def scattering_matrix(self, grid: ModeGrid, plate: int, gap: float) -> ScatteringMatrix:
        return planar_scattering_matrix(self.model, grid, plate, gap, self.thickness, self.loss_floor)

    def reflection(self, omega, k, imaginary=False):
        pair = fresnel(self.model, omega, k, imaginary=imaginary, thickness=self.thickness,
                       loss_floor=self.loss_floor)
        return pair.r_s, pair.r_p

    def characteristic_frequencies(self):
        return self.model.characteristic_frequencies()


@dataclass(frozen=True)
class ZeroPlate:
    """Perfectly absorbing plate, S = 0 (black body)."""

    isotropic = True

    def scattering_matrix(self, grid: ModeGrid, plate: int, gap: float) -> ScatteringMatrix:
        m = grid.block_size
        S = ScatteringMatrix(grid, np.zeros((grid.n_blocks, m, m)), plate=plate, reciprocal=True)
        return S.replace(reference_point=(0.0, 0.0, gap if plate == 2 else 0.0))

    def reflection(self, omega, k, imaginary=False):
        z = np.zeros(np.shape(k), dtype=complex)
        return z, z

    def characteristic_frequencies(self):
        return []


@dataclass(frozen=True, eq=False)
class FilePlate:
    """Scattering matrix loaded from a file, valid at its own frequency and grid only."""

    S: ScatteringMatrix
    source: str = ""

    isotropic = False

    def scattering_matrix(self, grid: ModeGrid, plate: int, gap: float) -> ScatteringMatrix:
        g = self.S.grid
        if (grid.imaginary != g.imaginary or grid.frequency != g.frequency
                or grid.k_vectors.shape != g.k_vectors.shape
                or not np.array_equal(grid.k_vectors, g.k_vectors)):
            raise UnsupportedModelError("a block-matrix file is only available at its own frequency and grid")
        S = self.S.replace(plate=plate)
        if plate == 2 and S.reference_point[2] == 0.0:
            S = translate(S, (0.0, 0.0, gap))
        return S

    def characteristic_frequencies(self):
        return []


def as_plate(x):
    if isinstance(x, DielectricModel):
        return PlanarPlate(x)
    if isinstance(x, ScatteringMatrix):
        return FilePlate(x)
    if hasattr(x, "scattering_matrix"):
        return x
    raise DomainError(f"cannot build a plate from {type(x).__name__}")


def _planar_pair(p1, p2):
    p1, p2 = as_plate(p1), as_plate(p2)
    if not (p1.isotropic and p2.isotropic):
        raise UnsupportedModelError("k_perp integration needs rotationally invariant (planar) plates")
    return p1, p2


# -- mode averages of field bilinears ---------------------------------------------

@dataclass(frozen=True, eq=False)
class ObservableKernel:
    """Diagonal blocks O^(KK') of a field bilinear on a grid, each stored as (B, m)."""

    grid: ModeGrid
    kind: str
    diagonals: dict

    def block(self, K: str, Kp: str) -> np.ndarray:
        d = self.diagonals[(K, Kp)]
        m = self.grid.block_size
        out = np.zeros(d.shape + (m,), dtype=complex)
        idx = np.arange(m)
        out[:, idx, idx] = d
        return out


def observable_kernel(grid: ModeGrid, kind: str) -> ObservableKernel:
    """Kernels of T_zz and S_z integrated over the plate area.

    stress_zz: (c^2 k_z^2 / 4 pi omega^2)(delta_KK' Pi_pw + delta_K,-K' Pi_ew)
    poynting_z: (c^2 k_z / 4 pi omega) s(K') (same projector structure),
    with s(+) = 1, s(-) = -1.
    """
    if grid.imaginary_axis:
        raise DomainError("observable kernels are defined at real frequency")
    w = grid.frequency
    kz = grid.kz
    pw, ew = grid.projector("pw"), grid.projector("ew")
    if kind == "stress_zz":
        pref = SPEED_OF_LIGHT**2 * kz**2 / (4 * np.pi * w**2)
        sign = {"+": 1.0, "-": 1.0}
    elif kind == "poynting_z":
        pref = SPEED_OF_LIGHT**2 * kz / (4 * np.pi * w)
        sign = {"+": 1.0, "-": -1.0}
    else:
        raise DomainError(f"unknown observable kind {kind!r}")
    diag = {}
    for K in "+-":
        for Kp in "+-":
            proj = pw if K == Kp else ew
            diag[(K, Kp)] = sign[Kp] * pref * proj
    return ObservableKernel(grid, kind, diag)


def average_observable(kernel: ObservableKernel, corr: IntracavityCorrelators) -> complex:
    """2 sum_{K,K'} Tr_alpha[C^(KK') O^(K'K)] at one frequency."""
    grid = kernel.grid
    total = 0j
    for K in "+-":
        for Kp in "+-":
            C = corr.block(K, Kp)
            d = kernel.diagonals[(Kp, K)]
            total += np.sum(grid.weights * np.einsum("bii,bi->b", C, d))
    return 2 * total


# -- J and H kernels ------------------------------------------------------------------

def _right_J(S: ScatteringMatrix) -> np.ndarray:
    # Sigma_2^pw + S+ Sigma_2^pw S + Sigma_2^ew S + S+ Sigma_2^ew
    grid = S.grid
    pw = sigma_weight(grid, 2, "pw")
    ew = sigma_weight(grid, 2, "ew")
    A = S.blocks
    Ah = dagger(A)
    out = Ah @ (pw[:, :, None] * A) + ew[:, :, None] * A + Ah * ew[:, None, :]
    idx = np.arange(grid.block_size)
    out[:, idx, idx] += pw
    return out


def _trace_product(left, right, what):
    # per-block tr(left @ right), with the imaginary residue checked
    t = np.einsum("bij,bji->b", left, right)
    scale = np.linalg.norm(left, axis=(-2, -1)) * np.linalg.norm(right, axis=(-2, -1))
    bad = np.abs(t.imag) > REALITY_TOL * np.maximum(scale, np.finfo(float).tiny)
    if np.any(bad):
        worst = float(np.max(np.abs(t.imag) / np.maximum(scale, np.finfo(float).tiny)))
        raise AccuracyError(f"{what} kernel has an imaginary residue {worst:.3g} of its scale")
    return t.real


def _emission(SA, U):
    return U @ kirchhoff_bracket(SA) @ dagger(U)


def _pair_kernels(S1, S2, which):
    """Per-block (K(S1,S2), K(S2,S1)) from a single cavity solve."""
    cav = cavity_operator(S1, S2)
    right = _right_J if which == "J" else absorption_bracket
    k12 = _trace_product(_emission(S1, cav.U12), right(S2), which)
    k21 = _trace_product(_emission(S2, cav.U21), right(S1), which)
    return k12, k21


def _weighted(grid, per_block, per_block_out):
    if per_block_out:
        return per_block
    return pairwise_sum(grid.weights * per_block)


def cancelled_difference(a, b):
    """a - b, with differences at the roundoff level of |a| + |b| set to zero.

    For identical plates J(S1, S2) = J(S2, S1) holds exactly; without the floor
    the adaptive quadrature would try to resolve pure rounding noise.
    """
    d = a - b
    return np.where(np.abs(d) <= CANCELLATION_FLOOR * (np.abs(a) + np.abs(b)), 0.0, d)


def force_kernel_J(SA: ScatteringMatrix, SB: ScatteringMatrix, per_block: bool = False):
    """Tr_alpha[U^(AB) K(S^A) U^(AB)+ (Sigma_2^pw + S^B+ Sigma_2^pw S^B + Sigma_2^ew S^B + S^B+ Sigma_2^ew)]

    with K the Kirchhoff bracket of plate A.  ``per_block`` returns the
    unweighted trace of every block instead of the weighted sum.
    """
    cav = cavity_operator(SA, SB)
    t = _trace_product(_emission(SA, cav.U12), _right_J(SB), "J")
    return _weighted(SA.grid, t, per_block)


def heat_kernel_H(SA: ScatteringMatrix, SB: ScatteringMatrix, per_block: bool = False):
    """Tr_alpha[U^(AB) K(S^A) U^(AB)+ (Sigma_1^pw - S^B+ Sigma_1^pw S^B - Sigma_1^ew S^B + S^B+ Sigma_1^ew)]"""
    cav = cavity_operator(SA, SB)
    t = _trace_product(_emission(SA, cav.U12), absorption_bracket(SB), "H")
    return _weighted(SA.grid, t, per_block)


def casimir_trace(S1: ScatteringMatrix, S2: ScatteringMatrix, per_block: bool = False):
    """Tr_alpha[kappa (U^(12) S1 S2 + U^(21) S2 S1)] on the imaginary axis."""
    if not S1.grid.imaginary_axis:
        raise DomainError("casimir_trace is evaluated at imaginary frequency")
    cav = cavity_operator(S1, S2)
    A, B = S1.blocks, S2.blocks
    M = cav.U12 @ A @ B + cav.U21 @ B @ A
    kappa = S1.grid.kz.imag
    t = np.einsum("bi,bii->b", kappa, M)
    scale = kappa.max(initial=0.0) * np.abs(M).max(initial=0.0) * M.shape[-1]
    if np.any(np.abs(t.imag) > REALITY_TOL * max(scale, np.finfo(float).tiny)):
        raise AccuracyError("imaginary-axis Casimir trace is not real; S is not real there")
    return _weighted(S1.grid, t.real, per_block)


def log_det_trace(S1: ScatteringMatrix, S2: ScatteringMatrix, per_block: bool = False, check: bool = True):
    """Re Tr_alpha log(1 - S1 S2), summed over eigenvalues with log1p.

    For small eigenvalues log|1 - lam| = log1p(|lam|^2 - 2 Re lam) / 2 keeps
    full relative accuracy when S1 S2 is tiny (large xi); a block
    log-determinant is the cross-check.
    """
    P = S1.blocks @ S2.blocks
    lam = np.linalg.eigvals(P)
    arg = np.abs(lam) ** 2 - 2 * lam.real
    if np.any(arg <= -1.0):
        raise AccuracyError("1 - S1 S2 is singular")
    small = np.abs(lam) < 0.5
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.sum(np.where(small, 0.5 * np.log1p(np.where(small, arg, 0.0)), np.log(np.abs(1.0 - lam))),
                   axis=-1)
    if check and t.size:
        sign, logabs = np.linalg.slogdet(np.eye(P.shape[-1]) - P)
        if np.max(np.abs(logabs - t)) > LOGDET_TOL * max(1.0, float(np.abs(t).max())):
            raise AccuracyError("log-det and eigenvalue evaluations of Tr log(1 - S1 S2) disagree")
    return _weighted(S1.grid, t, per_block)


# -- spectral bookkeeping ----------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class SpectralRule:
    """Frozen quadrature: frequency nodes and weights, and a k_perp rule per frequency."""

    frequencies: np.ndarray
    weights: np.ndarray
    imaginary: bool
    k_nodes: tuple
    k_weights: tuple

    def __len__(self):
        return len(self.frequencies)


@dataclass(frozen=True, eq=False)
class SpectralObservable:
    """Integrated observable with its per-frequency spectral density.

    ``samples`` are (frequency, density) pairs; value = sum(weights * density)
    over the rule.  Units: Pa for forces, W/m^2 for heat flux, J/m^2 for free
    energies.
    """

    value: float
    error: float
    unit: str
    rule: SpectralRule | None = None
    samples: np.ndarray = field(default=None, repr=False)
    meta: dict = field(default_factory=dict)

    def __float__(self):
        return float(self.value)


# share of the tolerance given to every inner k_perp integral
KPERP_BUDGET = 0.25


def _kperp_integral(f, omega, spec, gap, imaginary, k_rule):
    if k_rule is not None:
        nodes, weights = k_rule
        if nodes.size == 0:
            return 0.0, 0.0, k_rule
        return pairwise_sum(weights * f(nodes)), 0.0, k_rule
    inner = spec.replace(rel_tol=KPERP_BUDGET * spec.rel_tol, abs_tol=KPERP_BUDGET * spec.abs_tol)
    res = integrate_kperp(f, omega, inner, gap=gap, imaginary=imaginary)
    return res.value, res.error, (res.nodes, res.weights)


def _matsubara_observable(per_k, gap, T, spec, rule, unit):
    """k_B T sum'_n int d^2k/(2 pi)^2 per_k(xi_n, k), or its T = 0 integral."""
    if rule is not None:
        if not rule.imaginary:
            raise DomainError("a real-frequency rule cannot be used for a Matsubara sum")
        dens = np.array([_kperp_integral(lambda k, x=x: per_k(x, k), x, spec, gap, True, (kn, kw))[0]
                         for x, kn, kw in zip(rule.frequencies, rule.k_nodes, rule.k_weights)])
        value = pairwise_sum(rule.weights * dens)
        return SpectralObservable(value, 0.0, unit, rule, np.column_stack([rule.frequencies, dens]),
                                  {"frozen_rule": True})
    seen = {}

    def h(xi):
        v, err, kr = _kperp_integral(lambda k: per_k(xi, k), xi, spec, gap, True, None)
        seen[float(xi)] = (v, err, kr)
        return v

    res = matsubara_sum(h, T, spec.replace(rel_tol=0.5 * spec.rel_tol), xi_scale=SPEED_OF_LIGHT / gap)
    entries = [seen[float(x)] for x in res.frequencies]
    k_err = pairwise_sum(np.abs(res.weights) * np.array([e[1] for e in entries]))
    frozen = SpectralRule(res.frequencies, res.weights, True,
                          tuple(e[2][0] for e in entries), tuple(e[2][1] for e in entries))
    dens = np.array([e[0] for e in entries])
    return SpectralObservable(res.value, res.error + k_err, unit, frozen,
                              np.column_stack([res.frequencies, dens]),
                              {"matsubara_terms": res.n_terms, "T": T, "gap": gap})


def _thermal_limits(T1, T2, spec):
    Tmax = max(T1, T2)
    return spec.omega_cutoff * K_B * Tmax / HBAR, K_B * Tmax / HBAR


def _real_observable(per_k, weight, gap, T1, T2, spec, rule, unit, breakpoints):
    """int d omega weight(omega) int d^2k/(2 pi)^2 per_k(omega, k) on the real axis."""
    if rule is not None:
        if rule.imaginary:
            raise DomainError("an imaginary-axis rule cannot be used on the real axis")
        w = np.asarray(weight(rule.frequencies), dtype=float) * np.ones(len(rule))
        dens = np.zeros(len(rule))
        for i, (om, kn, kw) in enumerate(zip(rule.frequencies, rule.k_nodes, rule.k_weights)):
            if w[i] != 0.0:
                dens[i] = _kperp_integral(lambda k: per_k(om, k), om, spec, gap, False, (kn, kw))[0]
        value = pairwise_sum(rule.weights * w * dens)
        return SpectralObservable(value, 0.0, unit, rule, np.column_stack([rule.frequencies, dens]),
                                  {"frozen_rule": True})
    if max(T1, T2) == 0 or T1 == T2:
        return SpectralObservable(0.0, 0.0, unit, None, np.empty((0, 2)),
                                  {"reason": "vanishing thermal weight"})
    omega_max, scale = _thermal_limits(T1, T2, spec)
    seen = {}

    def g(om):
        v, err, kr = _kperp_integral(lambda k: per_k(om, k), om, spec, gap, False, None)
        seen[float(om)] = (v, err, kr)
        return v

    res = integrate_frequency(g, weight, spec, omega_max=omega_max, thermal_scale=scale,
                              breakpoints=breakpoints)
    w_nodes = np.asarray(weight(res.nodes), dtype=float) * np.ones_like(res.nodes)
    entries = [seen.get(float(x), (0.0, 0.0, (np.empty(0), np.empty(0)))) for x in res.nodes]
    dens = np.array([e[0] for e in entries])
    k_err = pairwise_sum(np.abs(res.weights * w_nodes) * np.array([e[1] for e in entries]))
    frozen = SpectralRule(res.nodes, res.weights, False,
                          tuple(e[2][0] for e in entries), tuple(e[2][1] for e in entries))
    return SpectralObservable(res.value, res.error + k_err, unit, frozen,
                              np.column_stack([res.nodes, dens]),
                              {"tail_bound": res.tail_bound, "omega_max": omega_max,
                               "frequency_nodes": int(res.nodes.size), "T1": T1, "T2": T2, "gap": gap})


def _pair_matrices(p1, p2, omega, k, gap, imaginary):
    grid = radial_grid(omega, k, np.ones_like(k), imaginary=imaginary)
    return p1.scattering_matrix(grid, 1, gap), p2.scattering_matrix(grid, 2, gap)


def _check_gap(gap):
    if not gap > 0:
        raise DomainError(f"gap must be positive, got {gap!r}")


def _check_temperature(*Ts):
    for T in Ts:
        if not T >= 0:
            raise DomainError("temperatures must be non-negative")


# -- assembled observables ----------------------------------------------------------------

def equilibrium_force(plate1, plate2, gap: float, T: float, spec: QuadratureSpec | None = None,
                      rule: SpectralRule | None = None) -> SpectralObservable:
    """Equilibrium Casimir pressure (Pa) as a Matsubara sum.

    F/A = -k_B T sum'_n Tr_alpha[kappa (U^(12) S1 S2 + U^(21) S2 S1)] at xi_n.
    """
    _check_gap(gap)
    _check_temperature(T)
    spec = spec or QuadratureSpec()
    p1, p2 = _planar_pair(plate1, plate2)

    def per_k(xi, k):
        S1, S2 = _pair_matrices(p1, p2, xi, k, gap, True)
        return -casimir_trace(S1, S2, per_block=True)

    return _matsubara_observable(per_k, gap, T, spec, rule, "Pa")


def free_energy(plate1, plate2, gap: float, T: float, spec: QuadratureSpec | None = None,
                rule: SpectralRule | None = None) -> SpectralObservable:
    """Free energy per area (J/m^2): k_B T sum'_n Tr_alpha log(1 - S1 S2) at xi_n."""
    _check_gap(gap)
    _check_temperature(T)
    spec = spec or QuadratureSpec()
    p1, p2 = _planar_pair(plate1, plate2)

    def per_k(xi, k):
        S1, S2 = _pair_matrices(p1, p2, xi, k, gap, True)
        return log_det_trace(S1, S2, per_block=True)

    return _matsubara_observable(per_k, gap, T, spec, rule, "J/m^2")


def _breakpoints(*plates):
    out = []
    for p in plates:
        out.extend(p.characteristic_frequencies())
    return sorted(set(out))


def noneq_force_delta(plate1, plate2, gap: float, T1: float, T2: float,
                      spec: QuadratureSpec | None = None, rule: SpectralRule | None = None
                      ) -> SpectralObservable:
    """(hbar/2) int d omega/2 pi (n(T1) - n(T2)) [J(S1,S2) - J(S2,S1)], per area (Pa)."""
    _check_gap(gap)
    _check_temperature(T1, T2)
    spec = spec or QuadratureSpec()
    p1, p2 = _planar_pair(plate1, plate2)
    if p1 == p2:
        # mirror-image plates: J(S1, S2) = J(S2, S1) identically
        return SpectralObservable(0.0, 0.0, "Pa", rule, np.empty((0, 2)), {"reason": "identical plates"})

    def weight(om):
        return HBAR / (4 * np.pi) * (bose_occupation(om, T1) - bose_occupation(om, T2))

    def per_k(om, k):
        S1, S2 = _pair_matrices(p1, p2, om, k, gap, False)
        j12, j21 = _pair_kernels(S1, S2, "J")
        return cancelled_difference(j12, j21)

    return _real_observable(per_k, weight, gap, T1, T2, spec, rule, "Pa", _breakpoints(p1, p2))


def noneq_force_total(plate1, plate2, gap: float, T1: float, T2: float,
                      spec: QuadratureSpec | None = None) -> SpectralObservable:
    """[F_eq(T1) + F_eq(T2)] / 2 + Delta F(T1, T2), in Pa."""
    spec = spec or QuadratureSpec()
    f1 = equilibrium_force(plate1, plate2, gap, T1, spec)
    f2 = f1 if T2 == T1 else equilibrium_force(plate1, plate2, gap, T2, spec)
    d = noneq_force_delta(plate1, plate2, gap, T1, T2, spec)
    value = 0.5 * (f1.value + f2.value) + d.value
    error = 0.5 * (f1.error + f2.error) + d.error
    return SpectralObservable(value, error, "Pa", None, None,
                              {"eq_T1": f1.value, "eq_T2": f2.value, "delta": d.value})


def heat_transfer_power(plate1, plate2, gap: float, T1: float, T2: float,
                        spec: QuadratureSpec | None = None, rule: SpectralRule | None = None
                        ) -> SpectralObservable:
    """hbar int d omega/2 pi omega (n(T1) - n(T2)) H(S1, S2), per area (W/m^2)."""
    _check_gap(gap)
    _check_temperature(T1, T2)
    spec = spec or QuadratureSpec()
    p1, p2 = _planar_pair(plate1, plate2)

    def weight(om):
        return HBAR / (2 * np.pi) * om * (bose_occupation(om, T1) - bose_occupation(om, T2))

    def per_k(om, k):
        S1, S2 = _pair_matrices(p1, p2, om, k, gap, False)
        return heat_kernel_H(S1, S2, per_block=True)

    return _real_observable(per_k, weight, gap, T1, T2, spec, rule, "W/m^2", _breakpoints(p1, p2))


# -- planar closed forms ------------------------------------------------------------------

def _kz_real(omega, k):
    q = omega / SPEED_OF_LIGHT
    d = (q - k) * (q + k)
    return np.where(d >= 0, np.sqrt(np.abs(d)) + 0j, 1j * np.sqrt(np.abs(d)))


def _oracle_real(density, weight, p1, p2, gap, T1, T2, spec, rule, unit):
    # closed-form integrand summed over both polarizations, same drivers as above
    def per_k(om, k):
        r1 = p1.reflection(om, k)
        r2 = p2.reflection(om, k)
        kz = _kz_real(om, k)
        return sum(density(kz, a, b) for a, b in zip(r1, r2))

    return _real_observable(per_k, weight, gap, T1, T2, spec, rule, unit, _breakpoints(p1, p2))


def planar_oracle_force(model1, model2, gap: float, T: float, spec: QuadratureSpec | None = None,
                        rule: SpectralRule | None = None) -> SpectralObservable:
    """Lifshitz pressure: -2 k_B T sum'_n int k dk/2pi sum_pol kappa r1 r2 e / (1 - r1 r2 e)."""
    _check_gap(gap)
    spec = spec or QuadratureSpec()
    p1, p2 = _planar_pair(model1, model2)

    def per_k(xi, k):
        kappa = np.sqrt((xi / SPEED_OF_LIGHT) ** 2 + k * k)
        e = np.exp(-2 * kappa * gap)
        out = np.zeros_like(kappa)
        for a, b in zip(p1.reflection(xi, k, imaginary=True), p2.reflection(xi, k, imaginary=True)):
            rr = (a * b).real * e
            out += kappa * rr / (1 - rr)
        return -2 * out

    return _matsubara_observable(per_k, gap, T, spec, rule, "Pa")


def planar_oracle_delta(model1, model2, gap: float, T1: float, T2: float,
                        spec: QuadratureSpec | None = None, rule: SpectralRule | None = None
                        ) -> SpectralObservable:
    """Closed-form Delta F for flat plates (Pa)."""
    _check_gap(gap)
    spec = spec or QuadratureSpec()
    p1, p2 = _planar_pair(model1, model2)

    def density(kz, R1, R2):
        den = np.abs(1 - R1 * R2 * np.exp(2j * kz * gap)) ** 2
        prop = kz.real * (np.abs(R2) ** 2 - np.abs(R1) ** 2) / den
        evan = (-2 * kz.imag * np.exp(-2 * gap * kz.imag)
                * (R1.imag * R2.real - R1.real * R2.imag) / den)
        return prop + evan

    def weight(om):
        return HBAR / (2 * np.pi) * (bose_occupation(om, T1) - bose_occupation(om, T2))

    return _oracle_real(density, weight, p1, p2, gap, T1, T2, spec, rule, "Pa")


def planar_oracle_heat(model1, model2, gap: float, T1: float, T2: float,
                       spec: QuadratureSpec | None = None, rule: SpectralRule | None = None
                       ) -> SpectralObservable:
    """Closed-form heat flux between flat plates (W/m^2)."""
    _check_gap(gap)
    spec = spec or QuadratureSpec()
    p1, p2 = _planar_pair(model1, model2)

    def density(kz, R1, R2):
        den = np.abs(1 - R1 * R2 * np.exp(2j * kz * gap)) ** 2
        prop = (1 - np.abs(R1) ** 2) * (1 - np.abs(R2) ** 2) / den
        evan = 4 * np.exp(-2 * gap * kz.imag) * R1.imag * R2.imag / den
        return np.where(kz.imag == 0, prop, evan)

    def weight(om):
        return HBAR / (2 * np.pi) * om * (bose_occupation(om, T1) - bose_occupation(om, T2))

    return _oracle_real(density, weight, p1, p2, gap, T1, T2, spec, rule, "W/m^2")
