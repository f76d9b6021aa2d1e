"""Dielectric permittivity models on the real and imaginary frequency axes."""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.interpolate import PchipInterpolator

from .errors import AccuracyError, DomainError, RangeError, StructuralError, UnsupportedModelError

__all__ = [
    "Oscillator",
    "DielectricModel",
    "permittivity",
    "kramers_kronig_rotate",
    "load_permittivity_csv",
    "LIBRARY",
    "library_model",
]

CSV_HEADER = ("omega_rad_s", "eps_re", "eps_im")
MIN_TABLE_ROWS = 16
# tail contribution allowed in the Kramers-Kronig rotation, relative to the total
KK_TAIL_LIMIT = 0.01
GL_NODES, GL_WEIGHTS = np.polynomial.legendre.leggauss(16)


class Oscillator(NamedTuple):
    """Lorentz term strength * w0^2 / (w0^2 - w^2 - i damping w)."""

    strength: float
    resonance: float
    damping: float


@dataclass(frozen=True, eq=False)
class DielectricModel:
    """Local, isotropic permittivity eps(omega).

    Build instances with the classmethods :meth:`constant`, :meth:`drude`,
    :meth:`drude_lorentz` and :meth:`tabulated`.
    """

    kind: str
    eps_inf: complex = 1.0
    plasma_frequency: float = 0.0
    damping: float = 0.0
    oscillators: tuple[Oscillator, ...] = ()
    table: tuple[np.ndarray, np.ndarray, np.ndarray] | None = None
    high_tail: str = "drude"
    low_tail: str = "drude"
    name: str = ""
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    # -- constructors ------------------------------------------------------
    @classmethod
    def constant(cls, eps, name=""):
        eps = complex(eps)
        if eps.imag < 0:
            raise DomainError("constant permittivity must be passive (Im eps >= 0)")
        if eps.imag == 0 and eps.real < 1:
            # eps(i xi) would fall below 1
            raise DomainError("a lossless constant permittivity needs Re eps >= 1")
        return cls("constant", eps_inf=eps, name=name)

    @classmethod
    def drude(cls, plasma_frequency, damping, eps_inf=1.0, name=""):
        return cls.drude_lorentz(eps_inf, plasma_frequency, damping, (), name=name)

    @classmethod
    def drude_lorentz(cls, eps_inf, plasma_frequency, damping, oscillators, name=""):
        oscs = tuple(Oscillator(*map(float, o)) for o in oscillators)
        if eps_inf < 1 or plasma_frequency < 0 or damping < 0:
            raise DomainError("need eps_inf >= 1, plasma_frequency >= 0, damping >= 0")
        for o in oscs:
            if o.strength < 0 or o.resonance <= 0 or o.damping < 0:
                raise DomainError(f"invalid oscillator {o}")
        kind = "drude" if not oscs else ("drude_lorentz" if plasma_frequency > 0 else "lorentz")
        return cls(kind, float(eps_inf), float(plasma_frequency), float(damping), oscs, name=name)

    @classmethod
    def lorentz(cls, eps_inf, oscillators, name=""):
        return cls.drude_lorentz(eps_inf, 0.0, 0.0, oscillators, name=name)

    @classmethod
    def tabulated(cls, omega, eps_re, eps_im, high_tail="drude", low_tail="drude", name=""):
        omega = np.asarray(omega, dtype=float)
        eps_re = np.asarray(eps_re, dtype=float)
        eps_im = np.asarray(eps_im, dtype=float)
        if not (omega.shape == eps_re.shape == eps_im.shape) or omega.ndim != 1:
            raise StructuralError("table columns must be 1-D and of equal length")
        if omega.size < MIN_TABLE_ROWS:
            raise StructuralError(f"table needs at least {MIN_TABLE_ROWS} rows, got {omega.size}")
        if not np.all(np.isfinite(omega)) or not np.all(np.isfinite(eps_re)) or not np.all(np.isfinite(eps_im)):
            raise StructuralError("table contains non-finite values")
        if omega[0] <= 0 or np.any(np.diff(omega) <= 0):
            raise StructuralError("table frequencies must be positive and strictly increasing")
        if np.any(eps_im < 0):
            raise DomainError("table violates passivity (eps_im < 0)")
        for tail in (high_tail, low_tail):
            if tail not in ("drude", "zero"):
                raise DomainError(f"unknown tail model {tail!r}")
        for a in (omega, eps_re, eps_im):
            a.setflags(write=False)
        return cls("tabulated", table=(omega, eps_re, eps_im), high_tail=high_tail,
                   low_tail=low_tail, name=name)

    # -- evaluation --------------------------------------------------------
    def __call__(self, omega, loss_floor=0.0):
        return permittivity(self, omega, loss_floor)

    def imaginary_axis(self, xi):
        """eps(i xi), real, for xi > 0 (inf at xi = 0 for conductors)."""
        xi = float(xi)
        if xi < 0:
            raise DomainError("xi must be non-negative")
        if self.kind == "tabulated":
            if xi == 0.0:
                return np.inf if self.low_tail == "drude" else kramers_kronig_rotate(self, 0.0)
            return kramers_kronig_rotate(self, xi)
        if self.kind == "constant":
            if self.eps_inf.imag != 0:
                raise UnsupportedModelError("a lossy constant permittivity has no imaginary-axis continuation")
            return float(self.eps_inf.real)
        eps = self.eps_inf
        if self.plasma_frequency > 0:
            eps = eps + (self.plasma_frequency**2 / (xi * (xi + self.damping)) if xi > 0 else np.inf)
        for o in self.oscillators:
            eps += o.strength * o.resonance**2 / (o.resonance**2 + xi**2 + o.damping * xi)
        return float(np.real(eps))

    def eps_times_xi_squared(self, xi):
        """eps(i xi) xi^2, finite as xi -> 0 (needed for the n = 0 Matsubara term)."""
        xi = float(xi)
        if xi > 0:
            return self.imaginary_axis(xi) * xi**2
        if self.kind in ("drude", "drude_lorentz") and self.damping == 0.0:
            return self.plasma_frequency**2
        return 0.0

    def static_permittivity(self):
        """eps(i 0): inf for conductors."""
        return self.imaginary_axis(0.0)

    def characteristic_frequencies(self):
        """Frequencies where spectra are likely to be sharp (quadrature breakpoints)."""
        out = []
        eps_bg = float(np.real(self.eps_inf))
        if self.plasma_frequency > 0:
            out.append(self.plasma_frequency / np.sqrt(eps_bg + 1.0))
            out.append(self.plasma_frequency / np.sqrt(eps_bg))
        for o in self.oscillators:
            out.append(o.resonance)
            # lossless surface mode, eps = -1
            out.append(o.resonance * np.sqrt(1.0 + o.strength / (eps_bg + 1.0)))
            # longitudinal frequency, eps = 0
            out.append(o.resonance * np.sqrt(1.0 + o.strength / eps_bg))
        return sorted(out)

    @property
    def is_lossless(self) -> bool:
        if self.kind == "constant":
            return self.eps_inf.imag == 0
        if self.kind == "tabulated":
            return False
        return (self.plasma_frequency == 0 or self.damping == 0) and all(
            o.damping == 0 for o in self.oscillators
        )

    # -- tabulated helpers ------------------------------------------------
    def _interpolants(self):
        if "pchip" not in self._cache:
            omega, re, im = self.table
            x = np.log(omega)
            self._cache["pchip"] = (PchipInterpolator(x, re), PchipInterpolator(x, im))
        return self._cache["pchip"]


def permittivity(model: DielectricModel, omega, loss_floor=0.0):
    """Evaluate eps at a real positive frequency or at ``1j * xi``.

    Drude:  eps = eps_inf - wp^2 / (w (w + i gamma))
    Lorentz: + sum_j f_j w_j^2 / (w_j^2 - w^2 - i gamma_j w)
    Tabulated: monotone cubic interpolation in log(omega), real axis only.

    ``loss_floor`` replaces a vanishing damping by ``loss_floor * omega`` on the
    real axis (lossless cavities are singular at real frequency).
    """
    omega_c = np.asarray(omega, dtype=complex)
    imag = np.all(omega_c.real == 0) and np.all(omega_c.imag > 0)
    real = np.all(omega_c.imag == 0) and np.all(omega_c.real > 0)
    if not (imag or real):
        raise DomainError("omega must be purely real positive or purely imaginary positive")
    if imag:
        if model.kind == "tabulated":
            raise UnsupportedModelError("tabulated models need kramers_kronig_rotate on the imaginary axis")
        xi = omega_c.imag
        out = np.vectorize(model.imaginary_axis, otypes=[float])(xi)
        return out[()] if out.ndim == 0 else out

    w = omega_c.real
    if model.kind == "constant":
        out = np.full(w.shape, model.eps_inf, dtype=complex)
        return out[()] if out.ndim == 0 else out
    if model.kind == "tabulated":
        tw = model.table[0]
        if np.any(w < tw[0]) or np.any(w > tw[-1]):
            raise RangeError(f"frequency outside table range [{tw[0]:.6g}, {tw[-1]:.6g}] rad/s")
        f_re, f_im = model._interpolants()
        x = np.log(w)
        out = f_re(x) + 1j * np.maximum(f_im(x), 0.0)
        return out[()] if out.ndim == 0 else out
    eps = np.full(w.shape, model.eps_inf, dtype=complex)
    if model.plasma_frequency > 0:
        g = model.damping if model.damping > 0 else loss_floor * w
        eps -= model.plasma_frequency**2 / (w * (w + 1j * g))
    for o in model.oscillators:
        g = o.damping if o.damping > 0 else loss_floor * w
        eps += o.strength * o.resonance**2 / (o.resonance**2 - w**2 - 1j * g * w)
    return eps[()] if eps.ndim == 0 else eps


def kramers_kronig_rotate(model: DielectricModel, xi):
    """eps(i xi) = 1 + (2/pi) int_0^inf w Im eps(w) / (w^2 + xi^2) dw for a table.

    Outside the table Im eps is extrapolated by the declared tails: Drude-like
    ``~1/w`` below and ``~1/w^3`` above, or zero.  Raises AccuracyError when the
    extrapolated part exceeds 1% of the integral.
    """
    if model.kind != "tabulated":
        raise UnsupportedModelError("Kramers-Kronig rotation needs a tabulated model")
    xi = float(xi)
    if xi < 0:
        raise DomainError("xi must be non-negative")
    key = ("kk", xi)
    if key in model._cache:
        return model._cache[key]
    omega, _, im = model.table
    _, f_im = model._interpolants()

    # the interpolant is smooth between samples: Gauss-Legendre per interval
    edges = np.log(omega)
    mid = 0.5 * (edges[1:] + edges[:-1])
    half = 0.5 * np.diff(edges)
    u = (mid[:, None] + half[:, None] * GL_NODES[None, :]).ravel()
    wq = (half[:, None] * GL_WEIGHTS[None, :]).ravel()
    wu = np.exp(2 * u)
    body = float(np.sum(wq * wu * np.maximum(f_im(u), 0.0) / (wu + xi * xi)))

    w0, w1 = omega[0], omega[-1]
    low = high = 0.0
    if model.low_tail == "drude":
        c0 = im[0] * w0
        # int_0^w0 w (c0/w) / (w^2 + xi^2)
        low = c0 * (np.arctan(w0 / xi) / xi if xi > 0 else np.inf)
    if model.high_tail == "drude":
        c1 = im[-1] * w1**3
        if xi > 0:
            high = c1 / xi**2 * (1.0 / w1 - (np.pi / 2 - np.arctan(w1 / xi)) / xi)
        else:
            high = c1 / (3 * w1**3)
    total = body + low + high
    if total > 0 and (low + high) > KK_TAIL_LIMIT * total:
        raise AccuracyError(
            f"table bandwidth too small at xi={xi:.4g}: tails are "
            f"{(low + high) / total:.2%} of the integral",
            partial=1.0 + 2.0 / np.pi * total,
        )
    value = 1.0 + 2.0 / np.pi * total
    model._cache[key] = value
    return value


def load_permittivity_csv(path, high_tail="drude", low_tail="drude", name=""):
    """Read a ``omega_rad_s,eps_re,eps_im`` table."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or tuple(h.strip() for h in rows[0]) != CSV_HEADER:
        raise StructuralError(f"{path}: header must be {','.join(CSV_HEADER)}")
    try:
        data = np.array([[float(x) for x in r] for r in rows[1:] if r], dtype=float)
    except ValueError as exc:
        raise StructuralError(f"{path}: {exc}") from None
    if data.ndim != 2 or data.shape[1] != 3:
        raise StructuralError(f"{path}: every row needs three columns")
    return DielectricModel.tabulated(data[:, 0], data[:, 1], data[:, 2], high_tail, low_tail,
                                     name=name or str(path))


# Built-in materials used by the CLI and the acceptance suite.
LIBRARY = {
    "gold": DielectricModel.drude(1.37e16, 5.32e13, name="gold"),
    "sic": DielectricModel.lorentz(
        6.7, [(6.7 * ((1.827e14 / 1.495e14) ** 2 - 1.0), 1.495e14, 8.966e11)], name="sic"
    ),
    "vacuum": DielectricModel.constant(1.0, name="vacuum"),
}


def library_model(name: str) -> DielectricModel:
    try:
        return LIBRARY[name.lower()]
    except KeyError:
        raise DomainError(f"unknown material {name!r}; known: {sorted(LIBRARY)}") from None
