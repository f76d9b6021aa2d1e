"""Random reciprocal, passive scattering matrices for property tests."""
from __future__ import annotations

import numpy as np

from .basis import SPEED_OF_LIGHT, ModeGrid, radial_grid
from .errors import DomainError
from .fluctuation import absorption_bracket, kirchhoff_bracket
from .scattering import ScatteringMatrix, onsager_partner

__all__ = ["random_grid", "random_reciprocal_passive", "is_passive", "min_passivity_eigenvalue"]


def _k_vectors(rng, n, q):
    # magnitudes on both sides of the light line, away from grazing
    while True:
        mag = q * rng.uniform(0.05, 3.0, size=n)
        if np.all(np.abs(mag**2 - q**2) > 1e-3 * q**2):
            break
    ang = rng.uniform(0, 2 * np.pi, size=n)
    return np.stack([mag * np.cos(ang), mag * np.sin(ang)], axis=-1)


def random_grid(rng: np.random.Generator, size: int, omega: float = 1e15) -> ModeGrid:
    """Grid closed under k -> -k whose blocks are ``size x size``.

    size 2: one isotropic node.  size divisible by 4: a single block holding
    +-k pairs.  Otherwise two partner blocks holding k and -k respectively.
    """
    if size < 2 or size % 2:
        raise DomainError("block size must be an even number >= 2")
    q = omega / SPEED_OF_LIGHT
    if size == 2:
        k = _k_vectors(rng, 1, q)
        return radial_grid(omega, np.hypot(k[:, 0], k[:, 1]), [rng.uniform(0.5, 2.0)])
    n = size // 2
    w = rng.uniform(0.5, 2.0, size=2)
    if size % 4 == 0:
        k = _k_vectors(rng, n // 2, q)
        kv = np.concatenate([k, -k])[None]
        return ModeGrid(omega, kv, w[:1])
    k = _k_vectors(rng, n, q)
    return ModeGrid(omega, np.stack([k, -k]), w)


def min_passivity_eigenvalue(S: ScatteringMatrix) -> float:
    """Smallest eigenvalue over both passivity forms (emission and absorption)."""
    out = np.inf
    for form in (kirchhoff_bracket(S), absorption_bracket(S)):
        herm = 0.5 * (form + np.conj(np.swapaxes(form, -1, -2)))
        out = min(out, float(np.linalg.eigvalsh(herm).min()))
    return out


def is_passive(S: ScatteringMatrix) -> bool:
    return min_passivity_eigenvalue(S) > 0.0


def random_reciprocal_passive(grid: ModeGrid, rng: np.random.Generator, base: complex = 0.3j,
                              max_halvings: int = 80) -> ScatteringMatrix:
    """base * 1 plus a random reciprocal perturbation, shrunk until strictly passive.

    The constant diagonal is reciprocal on its own; Im(base) > 0 and
    |base| < 1 make it strictly passive on both sectors.
    """
    if not (base.imag > 0 and abs(base) < 1):
        raise DomainError("base must satisfy Im > 0 and |base| < 1")
    shape = (grid.n_blocks, grid.block_size, grid.block_size)
    X = rng.normal(size=shape) + 1j * rng.normal(size=shape)
    X = 0.5 * (X + onsager_partner(X, grid))
    X /= np.abs(X).max()
    eye = np.broadcast_to(np.eye(grid.block_size), shape)
    t = 1.0
    for _ in range(max_halvings):
        S = ScatteringMatrix(grid, base * eye + t * X, reciprocal=True)
        if is_passive(S):
            return S
        t *= 0.5
    return ScatteringMatrix(grid, base * eye, reciprocal=True)
