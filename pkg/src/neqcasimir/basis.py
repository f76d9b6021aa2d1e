"""Plane-wave mode algebra for the vacuum gap.

A mode is labelled by its polarization (s = TE, p = TM), its transverse
wave-vector ``k_perp`` and its direction of propagation along z.  Scattering
operators are stored block-diagonally: every block of a :class:`ModeGrid`
collects the modes that a (possibly periodic) surface can couple, e.g. the
diffraction orders sharing one Bloch vector, and carries a quadrature weight
that turns ``sum over nodes`` into ``int d^2k / (2 pi)^2``.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np
from scipy.constants import c as SPEED_OF_LIGHT

from .errors import DegenerateModeError, DomainError, StructuralError

__all__ = [
    "Polarization",
    "Direction",
    "ModeIndex",
    "ModeGrid",
    "axial_wavenumber",
    "sector_flag",
    "polarization_vectors",
    "mode_field",
    "inversion_map",
    "sigma_weight",
    "radial_grid",
    "canonical_order",
    "SPEED_OF_LIGHT",
]

# relative distance to the light cone below which a node counts as grazing
GRAZING_TOL = 1e-12


class Polarization(enum.IntEnum):
    S = 0
    P = 1

    @property
    def parity(self) -> int:
        """P(alpha): one for s, zero for p."""
        return 1 if self is Polarization.S else 0


class Direction(enum.IntEnum):
    PLUS = 1
    MINUS = -1

    def flipped(self) -> "Direction":
        return Direction(-int(self))


@dataclass(frozen=True)
class ModeIndex:
    polarization: Polarization
    k_perp: tuple[float, float]
    direction: Direction = Direction.PLUS

    @property
    def parity(self) -> int:
        return self.polarization.parity

    @property
    def k_perp_mag(self) -> float:
        return float(np.hypot(*self.k_perp))


def _check_frequency(omega) -> complex:
    omega = complex(omega)
    if omega.imag == 0.0:
        if not omega.real > 0.0:
            raise DomainError(f"real frequency must be positive, got {omega.real!r}")
    elif omega.real != 0.0 or omega.imag < 0.0:
        raise DomainError(
            "frequency must be real positive or on the positive imaginary axis, "
            f"got {omega!r}"
        )
    return omega


def _omega_squared(omega: complex) -> float:
    # exact real value, so the branch cut is never hit with a signed zero
    return omega.real**2 if omega.imag == 0.0 else -(omega.imag**2)


def _kz_squared(omega: complex, k):
    # factored on the real axis so that k = omega/c gives exactly zero
    if omega.imag == 0.0:
        q = omega.real / SPEED_OF_LIGHT
        return (q - k) * (q + k)
    return -((omega.imag / SPEED_OF_LIGHT) ** 2) - k**2


def upper_sqrt(z):
    """Square root on the branch Re >= 0, Im >= 0 (passive arguments)."""
    z = np.asarray(z, dtype=complex)
    z = np.where(z.imag == 0.0, z.real + 0j, z)
    return np.sqrt(z)


def axial_wavenumber(omega, k_perp_mag):
    """Return k_z = sqrt(omega^2/c^2 - k_perp^2) with Re, Im >= 0.

    ``omega`` may be a positive real frequency or ``1j * xi`` with xi >= 0; on
    the imaginary axis k_z = i sqrt(xi^2/c^2 + k^2).
    """
    omega = _check_frequency(omega)
    k = np.asarray(k_perp_mag, dtype=float)
    if np.any(k < 0):
        raise DomainError("k_perp magnitude must be non-negative")
    kz = upper_sqrt(_kz_squared(omega, k))
    return kz[()] if kz.ndim == 0 else kz


def sector_flag(omega, k_perp_mag):
    """s_alpha: +1 for propagating, -1 for evanescent, 0 on the light cone."""
    omega = _check_frequency(omega)
    k = np.asarray(k_perp_mag, dtype=float)
    s = np.sign(_omega_squared(omega) / SPEED_OF_LIGHT**2 - k**2).astype(int)
    return s[()] if s.ndim == 0 else s


def _unit_k(k_perp) -> np.ndarray:
    k = np.asarray(k_perp, dtype=float)
    norm = np.hypot(k[0], k[1])
    if norm == 0.0:
        raise DegenerateModeError("k_perp = 0 has no azimuth; polarization basis undefined")
    return np.array([k[0] / norm, k[1] / norm, 0.0])


def _wavevector(mode: ModeIndex, omega: complex) -> np.ndarray:
    kz = axial_wavenumber(omega, mode.k_perp_mag)
    return np.array([mode.k_perp[0], mode.k_perp[1], int(mode.direction) * kz], dtype=complex)


def polarization_vectors(mode: ModeIndex, omega):
    """Return ``(e_s, e_p)`` for the direction of ``mode``.

    e_s = z x k_hat and e_p = (c / omega) k x e_s, with k = k_perp +- k_z z.
    """
    omega = _check_frequency(omega)
    u = _unit_k(mode.k_perp)
    e_s = np.array([-u[1], u[0], 0.0], dtype=complex)
    kx, ky, kz = _wavevector(mode, omega)
    # k x e_s written out, e_s having no z component
    e_p = (SPEED_OF_LIGHT / omega) * np.array([-kz * e_s[1], kz * e_s[0], kx * e_s[1] - ky * e_s[0]])
    return e_s, e_p


def mode_field(mode: ModeIndex, omega, r) -> np.ndarray:
    """Complex mode function e_alpha exp(i k . r) at position(s) ``r`` (..., 3)."""
    e_s, e_p = polarization_vectors(mode, omega)
    e = e_s if mode.polarization is Polarization.S else e_p
    k = _wavevector(mode, _check_frequency(omega))
    r = np.asarray(r, dtype=float)
    phase = np.exp(1j * (r @ k))
    return phase[..., None] * e


def inversion_map(mode: ModeIndex) -> ModeIndex:
    """J(alpha, k_perp, +-) = (alpha, -k_perp, -+)."""
    kx, ky = mode.k_perp
    return ModeIndex(mode.polarization, (-kx + 0.0, -ky + 0.0), mode.direction.flipped())


def canonical_order(keys) -> np.ndarray:
    """Permutation sorting block keys by magnitude, then azimuth in [0, 2 pi)."""
    keys = np.asarray(keys, dtype=float).reshape(-1, 2)
    mag = np.hypot(keys[:, 0], keys[:, 1])
    ang = np.mod(np.arctan2(keys[:, 1], keys[:, 0]), 2 * np.pi)
    return np.lexsort((ang, mag))


@dataclass(frozen=True, eq=False)
class ModeGrid:
    """Block-structured set of modes at one frequency.

    Parameters
    ----------
    frequency : float
        Real angular frequency omega > 0, or xi >= 0 when ``imaginary`` is set
        (the grid then lives at omega = i xi), rad/s.
    k_vectors : array (B, n, 2)
        Transverse wave-vectors of block ``b``; each one carries an s and a p
        mode, so a block holds ``m = 2 n`` modes ordered (k_0 s, k_0 p, k_1 s, ...).
    weights : array (B,)
        Quadrature weight of each block, in units of rad^2/m^2 / (2 pi)^2.
    isotropic : bool
        Rotationally invariant problems sample only |k_perp|; the inversion
        -k_perp is then represented by the same node.
    imaginary : bool
        Whether ``frequency`` is an imaginary-axis xi.
    """

    frequency: float
    k_vectors: np.ndarray
    weights: np.ndarray
    isotropic: bool = False
    imaginary: bool = False
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        f = float(self.frequency)
        if self.imaginary and not f >= 0.0:
            raise DomainError(f"imaginary-axis frequency must be >= 0, got {f!r}")
        if not self.imaginary and not f > 0.0:
            raise DomainError(f"real frequency must be positive, got {f!r}")
        object.__setattr__(self, "frequency", f)
        kv = np.array(self.k_vectors, dtype=float)
        if kv.ndim != 3 or kv.shape[-1] != 2:
            raise StructuralError(f"k_vectors must have shape (B, n, 2), got {kv.shape}")
        w = np.array(self.weights, dtype=float).reshape(-1)
        if w.shape[0] != kv.shape[0]:
            raise StructuralError("one weight per block required")
        if not np.all(np.isfinite(w)) or np.any(w < 0):
            raise StructuralError("block weights must be finite and non-negative")
        kmag = np.hypot(kv[..., 0], kv[..., 1])
        if np.any(kmag == 0.0):
            raise DegenerateModeError("grids may not contain k_perp = 0")
        if not self.imaginary:
            q2 = (f / SPEED_OF_LIGHT) ** 2
            if np.any(np.abs(kmag**2 - q2) <= GRAZING_TOL * q2):
                raise DegenerateModeError("grid contains a grazing node (k_z = 0)")
        kv.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "k_vectors", kv)
        object.__setattr__(self, "weights", w)

    @property
    def omega(self) -> complex:
        """Complex frequency: omega, or i xi on the imaginary axis."""
        return 1j * self.frequency if self.imaginary else complex(self.frequency)

    @property
    def omega_squared(self) -> float:
        return -self.frequency**2 if self.imaginary else self.frequency**2

    # -- shape -----------------------------------------------------------
    @property
    def n_blocks(self) -> int:
        return self.k_vectors.shape[0]

    @property
    def block_size(self) -> int:
        return 2 * self.k_vectors.shape[1]

    @property
    def n_modes(self) -> int:
        return self.n_blocks * self.block_size

    @property
    def imaginary_axis(self) -> bool:
        return self.imaginary

    # -- per-mode data, shape (B, m) ---------------------------------------
    @property
    def polarizations(self) -> np.ndarray:
        return np.tile([0, 1], self.k_vectors.shape[1])

    @property
    def parity(self) -> np.ndarray:
        return 1 - self.polarizations

    @property
    def mode_k(self) -> np.ndarray:
        return np.repeat(self.k_vectors, 2, axis=1)

    @property
    def k_mag(self) -> np.ndarray:
        kv = self.mode_k
        return np.hypot(kv[..., 0], kv[..., 1])

    @property
    def kz(self) -> np.ndarray:
        if "kz" not in self._cache:
            kz = upper_sqrt(_kz_squared(self.omega, self.k_mag))
            kz.setflags(write=False)
            self._cache["kz"] = kz
        return self._cache["kz"]

    @property
    def propagating(self) -> np.ndarray:
        return self.k_mag**2 < self.omega_squared / SPEED_OF_LIGHT**2

    def projector(self, sector: str) -> np.ndarray:
        """Diagonal of Pi^(pw) or Pi^(ew) as a (B, m) float array."""
        pw = self.propagating
        if sector == "pw":
            return pw.astype(float)
        if sector == "ew":
            return (~pw).astype(float)
        raise DomainError(f"unknown sector {sector!r}")

    @property
    def nodes(self) -> list[ModeIndex]:
        kv = self.mode_k.reshape(-1, 2)
        pol = np.tile(self.polarizations, self.n_blocks)
        return [ModeIndex(Polarization(int(p)), (float(k[0]), float(k[1]))) for p, k in zip(pol, kv)]

    # -- traces ----------------------------------------------------------
    def block_trace(self, blocks) -> np.ndarray:
        return np.trace(blocks, axis1=-2, axis2=-1)

    def trace(self, blocks):
        """Tr_alpha over the grid: sum_b w_b tr(A_b)."""
        return np.sum(self.weights * self.block_trace(blocks))

    # -- inversion ---------------------------------------------------------
    def j_permutation(self) -> np.ndarray:
        """Flat index of J(alpha) for every mode alpha.

        Raises StructuralError if some -k_perp is missing from the grid.
        """
        if "jperm" in self._cache:
            return self._cache["jperm"]
        n = self.n_modes
        if self.isotropic:
            perm = np.arange(n)
        else:
            kv = self.mode_k.reshape(-1, 2)
            pol = np.tile(self.polarizations, self.n_blocks)
            scale = max(float(np.abs(kv).max()), 1e-300)
            key = lambda k, p: (int(round(k[0] / scale * 1e9)), int(round(k[1] / scale * 1e9)), int(p))
            lookup = {key(k, p): i for i, (k, p) in enumerate(zip(kv, pol))}
            perm = np.empty(n, dtype=int)
            for i, (k, p) in enumerate(zip(kv, pol)):
                j = lookup.get(key(-k, p))
                if j is None:
                    raise StructuralError(f"grid is not closed under inversion: -k_perp of {tuple(k)} missing")
                perm[i] = j
        perm.setflags(write=False)
        self._cache["jperm"] = perm
        return perm

    def j_block_map(self):
        """Inversion at block level.

        Returns ``(partner, perm)``: J sends mode ``i`` of block ``b`` to mode
        ``perm[b, i]`` of block ``partner[b]``.
        """
        if "jblock" in self._cache:
            return self._cache["jblock"]
        m = self.block_size
        flat = self.j_permutation()
        blocks, within = np.divmod(flat.reshape(self.n_blocks, m), m)
        partner = blocks[:, 0]
        if np.any(blocks != partner[:, None]):
            raise StructuralError("inversion must map every block onto a single block")
        self._cache["jblock"] = (partner, within)
        return partner, within

    def is_j_closed(self) -> bool:
        try:
            self.j_permutation()
        except StructuralError:
            return False
        return True

    def with_frequency(self, frequency, imaginary=None) -> "ModeGrid":
        imaginary = self.imaginary if imaginary is None else imaginary
        return ModeGrid(frequency, self.k_vectors, self.weights, self.isotropic, imaginary)


def sigma_weight(grid: ModeGrid, n: int, sector: str) -> np.ndarray:
    """Diagonal of Sigma_n = k_z^n Pi^(sector) as a complex (B, m) array."""
    if n not in (-1, 1, 2):
        raise DomainError(f"unsupported exponent {n}; use -1, 1 or 2")
    if grid.imaginary_axis:
        raise DomainError("sector weights are defined at real frequency only")
    proj = grid.projector(sector)
    return np.where(proj > 0, grid.kz**n, 0.0 + 0j)


def radial_grid(frequency, k_nodes, weights, imaginary=False) -> ModeGrid:
    """Isotropic grid with one (s, p) block per |k_perp| node along x.

    ``weights`` should already include the polar measure k dk / (2 pi).
    """
    k = np.asarray(k_nodes, dtype=float).reshape(-1)
    w = np.asarray(weights, dtype=float).reshape(-1)
    if np.any(np.diff(k) <= 0):
        raise StructuralError("radial nodes must be strictly ascending (canonical order)")
    kv = np.zeros((k.size, 1, 2))
    kv[:, 0, 0] = k
    return ModeGrid(frequency, kv, w, isotropic=True, imaginary=imaginary)
