"""Scattering matrices of the two plates.

Conventions: plate 1 fills z < 0 and scatters the (-) waves of the gap into
(+) waves; plate 2 fills z > a and scatters (+) into (-).  A matrix is always
expressed in gap coordinates, so moving a plate multiplies its entries by the
phases of the incoming and outgoing plane waves.
"""
from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .basis import SPEED_OF_LIGHT, ModeGrid, canonical_order, upper_sqrt
from .errors import DegenerateModeError, DomainError, StructuralError
from .materials import DielectricModel, permittivity

__all__ = [
    "FresnelPair",
    "ScatteringMatrix",
    "OnsagerReport",
    "fresnel",
    "planar_scattering_matrix",
    "translate",
    "check_onsager",
    "onsager_partner",
    "load_block_matrix",
    "save_block_matrix",
    "BLOCK_FORMAT",
]

BLOCK_FORMAT = "neqcasimir.block-smatrix"
ONSAGER_TOL = 1e-10
# damping floor (relative to omega) for lossless models at real frequency
LOSS_FLOOR = 1e-8


@dataclass(frozen=True)
class FresnelPair:
    r_s: np.ndarray
    r_p: np.ndarray


def _slab(r, kzm_phase):
    # vacuum | medium (thickness d) | vacuum, kzm_phase = exp(2 i k_z^m d)
    return r * (1.0 - kzm_phase) / (1.0 - r * r * kzm_phase)


def fresnel(model: DielectricModel, omega, k_perp_mag, *, imaginary=False,
            thickness=None, loss_floor=LOSS_FLOOR) -> FresnelPair:
    """Reflection coefficients of a vacuum/medium interface.

    r_s = (k_z - k_z^m) / (k_z + k_z^m),  r_p = (eps k_z - k_z^m) / (eps k_z + k_z^m)

    With ``imaginary=True``, ``omega`` is xi >= 0 and both coefficients are
    real; xi = 0 uses the static limits of the model.  ``thickness`` switches to
    a free-standing slab with internal reflections.
    """
    k = np.asarray(k_perp_mag, dtype=float)
    if isinstance(omega, complex) or np.iscomplexobj(omega):
        w = complex(omega)
        if w.real != 0.0 or w.imag <= 0.0:
            raise DomainError("complex frequencies must lie on the positive imaginary axis")
        omega, imaginary = w.imag, True
    omega = float(omega)
    if imaginary:
        if omega < 0:
            raise DomainError("xi must be non-negative")
        eps = model.imaginary_axis(omega)
        exi2 = model.eps_times_xi_squared(omega)
        kappa = np.sqrt((omega / SPEED_OF_LIGHT) ** 2 + k**2)
        kappa_m = np.sqrt(exi2 / SPEED_OF_LIGHT**2 + k**2)
        r_s = (kappa - kappa_m) / (kappa + kappa_m)
        if np.isinf(eps):
            r_p = np.ones_like(kappa)
        else:
            r_p = (eps * kappa - kappa_m) / (eps * kappa + kappa_m)
        if thickness is not None:
            phase = np.exp(-2.0 * kappa_m * thickness)
            r_s, r_p = _slab(r_s, phase), _slab(r_p, phase)
        return FresnelPair(r_s.astype(complex), r_p.astype(complex))

    if omega <= 0:
        raise DomainError("real frequency must be positive")
    eps = permittivity(model, omega, loss_floor=loss_floor)
    q2 = (omega / SPEED_OF_LIGHT) ** 2
    q = omega / SPEED_OF_LIGHT
    kz = upper_sqrt((q - k) * (q + k))
    kzm = upper_sqrt(eps * q2 - k**2)
    den_s = kz + kzm
    den_p = eps * kz + kzm
    if np.any(den_s == 0) or np.any(den_p == 0):
        raise DegenerateModeError("degenerate interface mode (k_z = k_z^m = 0)")
    r_s = (kz - kzm) / den_s
    r_p = (eps * kz - kzm) / den_p
    if thickness is not None:
        phase = np.exp(2j * kzm * thickness)
        r_s, r_p = _slab(r_s, phase), _slab(r_p, phase)
    return FresnelPair(np.asarray(r_s, dtype=complex), np.asarray(r_p, dtype=complex))


@dataclass(frozen=True, eq=False)
class ScatteringMatrix:
    """Block-diagonal scattering operator on a :class:`ModeGrid`.

    ``blocks[b]`` maps incoming to outgoing amplitudes within block ``b``.
    """

    grid: ModeGrid
    blocks: np.ndarray
    plate: int = 1
    reference_point: tuple[float, float, float] = (0.0, 0.0, 0.0)
    reciprocal: bool | None = None
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        b = np.asarray(self.blocks, dtype=complex)
        m = self.grid.block_size
        if b.shape != (self.grid.n_blocks, m, m):
            raise StructuralError(f"blocks must have shape {(self.grid.n_blocks, m, m)}, got {b.shape}")
        if self.plate not in (1, 2):
            raise DomainError("plate must be 1 or 2")
        b.setflags(write=False)
        object.__setattr__(self, "blocks", b)
        object.__setattr__(self, "reference_point", tuple(float(x) for x in self.reference_point))

    @property
    def plate_side(self) -> str:
        return "left" if self.plate == 1 else "right"

    def dense(self) -> np.ndarray:
        n, m = self.grid.n_blocks, self.grid.block_size
        out = np.zeros((n * m, n * m), dtype=complex)
        for b in range(n):
            out[b * m:(b + 1) * m, b * m:(b + 1) * m] = self.blocks[b]
        return out

    def replace(self, **changes) -> "ScatteringMatrix":
        kw = dict(grid=self.grid, blocks=self.blocks, plate=self.plate,
                  reference_point=self.reference_point, reciprocal=self.reciprocal, meta=self.meta)
        kw.update(changes)
        return ScatteringMatrix(**kw)


def planar_scattering_matrix(model: DielectricModel, grid: ModeGrid, plate: int, gap: float,
                             thickness=None, loss_floor=LOSS_FLOOR) -> ScatteringMatrix:
    """Diagonal matrix of a flat plate: R for plate 1, R exp(2 i k_z a) for plate 2."""
    if not gap > 0:
        raise DomainError(f"gap must be positive, got {gap!r}")
    if plate not in (1, 2):
        raise DomainError("plate must be 1 or 2")
    pair = fresnel(model, grid.frequency, grid.k_mag, imaginary=grid.imaginary,
                   thickness=thickness, loss_floor=loss_floor)
    r = np.where(grid.polarizations == 0, pair.r_s, pair.r_p)
    m = grid.block_size
    blocks = np.zeros((grid.n_blocks, m, m), dtype=complex)
    idx = np.arange(m)
    blocks[:, idx, idx] = r
    S = ScatteringMatrix(grid, blocks, plate=plate, reciprocal=True,
                         meta={"model": model.name or model.kind})
    if plate == 2:
        S = translate(S, (0.0, 0.0, gap))
    return S


def translate(S: ScatteringMatrix, displacement) -> ScatteringMatrix:
    """Move the plate by ``displacement`` (m).

    Plate 1: S -> exp(-i k+ . x) S exp(i k'- . x); plate 2 with the signs of
    the z components exchanged.
    """
    d = np.asarray(displacement, dtype=float).reshape(3)
    new_ref = np.asarray(S.reference_point) + d
    if d[2] != 0.0:
        if S.plate == 1 and new_ref[2] > 0:
            raise DomainError("plate 1 would protrude into the gap (reference z > 0)")
        if S.plate == 2 and new_ref[2] <= 0:
            raise DomainError("plate 2 would close the gap (reference z <= 0)")
    if not np.any(d):
        return S.replace(reference_point=tuple(new_ref))
    grid = S.grid
    kperp = grid.mode_k @ d[:2]
    kz = grid.kz
    sign = 1.0 if S.plate == 1 else -1.0
    out_phase = np.exp(-1j * (kperp + sign * kz * d[2]))
    in_phase = np.exp(1j * (kperp - sign * kz * d[2]))
    blocks = out_phase[:, :, None] * S.blocks * in_phase[:, None, :]
    return S.replace(blocks=blocks, reference_point=tuple(new_ref))


def onsager_partner(S_blocks: np.ndarray, grid: ModeGrid) -> np.ndarray:
    """Blocks of R(S)_{ab} = (k_z,b / k_z,a) (-1)^(P_a + P_b) S_{J(b) J(a)}.

    S is reciprocal exactly when R(S) = S; R is an involution, so
    (S + R(S)) / 2 is the reciprocal part of any matrix.
    """
    partner, perm = grid.j_block_map()
    pb = S_blocks[partner]
    idx = np.arange(grid.n_blocks)[:, None, None]
    # T[b, i, j] = S_{b'}[perm[b, j], perm[b, i]]
    T = pb[idx, perm[:, None, :], perm[:, :, None]]
    kz = grid.kz
    sgn = (-1.0) ** grid.parity
    return (sgn[:, None] * sgn[None, :]) * (kz[:, None, :] / kz[:, :, None]) * T


@dataclass(frozen=True)
class OnsagerReport:
    max_violation: float
    passed: bool

    @property
    def pass_(self) -> bool:
        return self.passed


def check_onsager(S: ScatteringMatrix, tol: float = ONSAGER_TOL) -> OnsagerReport:
    """Largest deviation from reciprocity, relative to the largest entry of S."""
    if not S.grid.is_j_closed():
        raise StructuralError("Onsager check needs a grid closed under inversion")
    scale = float(np.abs(S.blocks).max()) if S.blocks.size else 0.0
    if scale == 0.0:
        return OnsagerReport(0.0, True)
    viol = float(np.abs(S.blocks - onsager_partner(S.blocks, S.grid)).max()) / scale
    return OnsagerReport(viol, viol <= tol)


# -- block-matrix files -------------------------------------------------------

def _order_vectors(kx, ky, period, N):
    m = np.arange(-N, N + 1)
    return np.stack([kx + 2 * np.pi * m / period, np.full(m.shape, ky)], axis=-1)


def load_block_matrix(path) -> ScatteringMatrix:
    """Read a grating scattering matrix written by :func:`save_block_matrix`.

    The document is JSON.  Within a block, modes run over diffraction orders
    m = -N..N (k_perp = (kx + 2 pi m / d, ky)) with s before p, so a block has
    dimension 2 (2N + 1).
    """
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise StructuralError(f"{path}: not a valid block-matrix document ({exc})") from None
    if not isinstance(doc, dict) or doc.get("format") != BLOCK_FORMAT:
        raise StructuralError(f"{path}: missing format tag {BLOCK_FORMAT!r}")
    try:
        omega = float(doc["omega"])
        period = float(doc["period"])
        N = int(doc["order_cutoff"])
        plate = int(doc["plate"])
        reciprocal = bool(doc["reciprocal"])
        nodes = doc["nodes"]
    except (KeyError, TypeError, ValueError) as exc:
        raise StructuralError(f"{path}: missing or invalid field {exc}") from None
    imaginary = bool(doc.get("imaginary_axis", False))
    tol = float(doc.get("tolerance", ONSAGER_TOL))
    ref = tuple(doc.get("reference_point", (0.0, 0.0, 0.0)))
    if N < 0 or period <= 0 or not nodes:
        raise StructuralError(f"{path}: need order_cutoff >= 0, period > 0 and at least one node")
    dim = 2 * (2 * N + 1)
    keys, weights, blocks = [], [], []
    for i, node in enumerate(nodes):
        try:
            kx, ky, w = float(node["kx"]), float(node["ky"]), float(node["weight"])
            flat = np.asarray(node["block"], dtype=float)
        except (KeyError, TypeError, ValueError) as exc:
            raise StructuralError(f"{path}: node {i}: invalid entry {exc}") from None
        if flat.shape != (dim * dim, 2):
            raise StructuralError(
                f"{path}: node {i}: expected {dim * dim} [re, im] pairs for N={N}, got shape {flat.shape}"
            )
        if not np.all(np.isfinite(flat)) or not (math.isfinite(kx) and math.isfinite(ky) and math.isfinite(w)):
            raise StructuralError(f"{path}: node {i}: non-finite entries")
        if abs(kx) > np.pi / period * (1 + 1e-12):
            raise StructuralError(f"{path}: node {i}: kx outside the first Brillouin zone")
        keys.append((kx, ky))
        weights.append(w)
        blocks.append((flat[:, 0] + 1j * flat[:, 1]).reshape(dim, dim))
    order = canonical_order(keys)
    keys = np.asarray(keys)[order]
    kv = np.stack([_order_vectors(kx, ky, period, N) for kx, ky in keys])
    grid = ModeGrid(omega, kv, np.asarray(weights)[order], imaginary=imaginary)
    if not grid.is_j_closed():
        raise StructuralError(f"{path}: grid lacks inversion partners (-kx, -ky) for some nodes")
    S = ScatteringMatrix(grid, np.asarray(blocks)[order], plate=plate, reference_point=ref,
                         reciprocal=reciprocal,
                         meta={"period": period, "order_cutoff": N, "tolerance": tol, "path": str(path)})
    if reciprocal:
        report = check_onsager(S, tol)
        if not report.passed:
            warnings.warn(f"{path}: flagged reciprocal but Onsager violation is {report.max_violation:.3g}")
    return S


def save_block_matrix(S: ScatteringMatrix, path, period: float, order_cutoff: int,
                      tolerance: float = ONSAGER_TOL) -> None:
    """Write ``S`` in the block-matrix format (floats round-trip exactly)."""
    N = int(order_cutoff)
    dim = 2 * (2 * N + 1)
    if S.grid.block_size != dim:
        raise StructuralError(f"block size {S.grid.block_size} does not match N={N}")
    nodes = []
    for b in range(S.grid.n_blocks):
        kx, ky = S.grid.k_vectors[b, N]
        flat = S.blocks[b].reshape(-1)
        nodes.append({
            "kx": float(kx), "ky": float(ky), "weight": float(S.grid.weights[b]),
            "block": [[float(z.real), float(z.imag)] for z in flat],
        })
    doc = {
        "format": BLOCK_FORMAT,
        "version": 1,
        "omega": S.grid.frequency,
        "imaginary_axis": S.grid.imaginary,
        "period": float(period),
        "order_cutoff": N,
        "plate": S.plate,
        "reciprocal": bool(S.reciprocal),
        "tolerance": tolerance,
        "reference_point": list(S.reference_point),
        "nodes": nodes,
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1)
