"""Adaptive integration over k_perp and frequency, and Matsubara sums.

All integrators return the nodes and weights they finally used, so a second
integrand can be evaluated on exactly the same rule (oracle comparisons).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.constants import Boltzmann as K_B
from scipy.constants import hbar as HBAR

from .basis import SPEED_OF_LIGHT
from .errors import AccuracyError, DomainError

__all__ = [
    "QuadratureSpec",
    "QuadResult",
    "KperpResult",
    "FrequencyResult",
    "MatsubaraResult",
    "gauss_kronrod",
    "integrate_kperp",
    "integrate_frequency",
    "matsubara_sum",
    "matsubara_frequencies",
    "pairwise_sum",
]

# Gauss-Kronrod 7/15 rule on [-1, 1] (QUADPACK qk15)
_XGK = np.array([
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327,
])
KRONROD_NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
KRONROD_WEIGHTS = np.concatenate([_WGK[:-1], _WGK[::-1]])
GAUSS_WEIGHTS = np.zeros(15)
# Gauss nodes are the odd-indexed Kronrod nodes
GAUSS_WEIGHTS[[1, 3, 5, 7, 9, 11, 13]] = np.concatenate([_WG[:-1], _WG[::-1]])

EPS = np.finfo(float).eps
SPLIT_FRACTION = 0.5


@dataclass(frozen=True)
class QuadratureSpec:
    """Tolerances and cutoffs for every integration in the package.

    ``kperp_cutoff`` sets k_max = omega/c + kperp_cutoff / a, and
    ``omega_cutoff`` sets omega_max = omega_cutoff k_B max(T1, T2) / hbar.
    """

    rel_tol: float = 1e-6
    abs_tol: float = 0.0
    max_subdivisions: int = 2000
    matsubara_max_terms: int = 200_000
    kperp_cutoff: float = 20.0
    omega_cutoff: float = 50.0

    def __post_init__(self):
        if not self.rel_tol > 0:
            raise DomainError("rel_tol must be positive")
        if self.abs_tol < 0:
            raise DomainError("abs_tol must be non-negative")
        if self.max_subdivisions < 1 or self.matsubara_max_terms < 1:
            raise DomainError("subdivision and term limits must be positive")
        if not (self.kperp_cutoff > 0 and self.omega_cutoff > 0):
            raise DomainError("cutoffs must be positive")

    def replace(self, **kw) -> "QuadratureSpec":
        d = {k: getattr(self, k) for k in self.__dataclass_fields__}
        d.update(kw)
        return QuadratureSpec(**d)


def pairwise_sum(values) -> float:
    """Order-fixed pairwise summation (deterministic reductions)."""
    v = np.asarray(values, dtype=float).ravel()
    while v.size > 1:
        if v.size % 2:
            v = np.append(v, 0.0)
        v = v[0::2] + v[1::2]
    return float(v[0]) if v.size else 0.0


@dataclass
class QuadResult:
    value: float
    error: float
    nodes: np.ndarray
    weights: np.ndarray
    n_panels: int
    n_evaluations: int


def gauss_kronrod(f: Callable, panels, rel_tol: float, abs_tol: float = 0.0,
                  max_subdivisions: int = 2000, scale_hint: float = 0.0) -> QuadResult:
    """Globally adaptive G7/K15 integration of a vectorized ``f`` over panels.

    Panels whose error estimate is at least half of the worst one are bisected
    until sum(errors) <= max(abs_tol, rel_tol * max(|I|, scale_hint)).  The
    splitting order does not depend on the tolerance, so tightening it only
    continues the same refinement sequence.
    """
    edges = np.asarray(panels, dtype=float)
    if edges.ndim == 1:
        edges = np.stack([edges[:-1], edges[1:]], axis=-1)
    edges = edges[edges[:, 1] > edges[:, 0]]
    if edges.size == 0:
        return QuadResult(0.0, 0.0, np.empty(0), np.empty(0), 0, 0)

    def evaluate(e):
        mid = 0.5 * (e[:, 0] + e[:, 1])
        half = 0.5 * (e[:, 1] - e[:, 0])
        x = mid[:, None] + half[:, None] * KRONROD_NODES[None, :]
        fx = np.asarray(f(x.ravel()), dtype=float).reshape(x.shape)
        if not np.all(np.isfinite(fx)):
            raise AccuracyError("integrand is not finite on the quadrature nodes")
        K = half * (fx @ KRONROD_WEIGHTS)
        G = half * (fx @ GAUSS_WEIGHTS)
        absK = half * (np.abs(fx) @ KRONROD_WEIGHTS)
        err = np.abs(K - G)
        return x, half[:, None] * KRONROD_WEIGHTS[None, :], K, err, absK

    x, w, K, err, absK = evaluate(edges)
    n_eval = x.size
    while True:
        total = pairwise_sum(K)
        total_err = float(np.sum(err))
        roundoff = 50 * EPS * float(np.sum(absK))
        allowed = max(abs_tol, rel_tol * max(abs(total), scale_hint), roundoff)
        if total_err <= allowed:
            break
        if edges.shape[0] >= max_subdivisions:
            raise AccuracyError(
                f"no convergence within {max_subdivisions} panels (error {total_err:.3g} > {allowed:.3g})",
                partial=total, error=total_err,
            )
        split = err >= SPLIT_FRACTION * err.max()
        old = edges[split]
        mid = 0.5 * (old[:, 0] + old[:, 1])
        new = np.concatenate([np.stack([old[:, 0], mid], -1), np.stack([mid, old[:, 1]], -1)])
        nx, nw, nK, nerr, nabs = evaluate(new)
        n_eval += nx.size
        keep = ~split
        edges = np.concatenate([edges[keep], new])
        x = np.concatenate([x[keep], nx])
        w = np.concatenate([w[keep], nw])
        K = np.concatenate([K[keep], nK])
        err = np.concatenate([err[keep], nerr])
        absK = np.concatenate([absK[keep], nabs])
    order = np.argsort(edges[:, 0], kind="stable")
    return QuadResult(pairwise_sum(K[order]), float(np.sum(err)), x[order].ravel(), w[order].ravel(),
                      edges.shape[0], n_eval)


# -- transverse wave-vector ------------------------------------------------------

@dataclass
class KperpResult:
    """int d^2k / (2 pi)^2 f = int_0^kmax k dk / (2 pi) f(k), by sector."""

    value: float
    error: float
    nodes: np.ndarray
    weights: np.ndarray
    pw: QuadResult | None = None
    ew: QuadResult | None = None

    def rule(self):
        return self.nodes, self.weights


def _kmax(omega_over_c, gap, kmax, spec):
    if kmax is not None:
        return float(kmax)
    if gap is None:
        raise DomainError("integrate_kperp needs either gap or kmax")
    return omega_over_c + spec.kperp_cutoff / gap


def _sorted_call(f, k):
    order = np.argsort(k, kind="stable")
    out = np.empty(k.shape, dtype=float)
    out[order] = np.asarray(f(k[order]), dtype=float)
    return out


def _split_points(upper, gap):
    pts = [0.0]
    if gap:
        pts += [x / gap for x in (0.25, 1.0, 3.0, 8.0) if x / gap < upper]
    return np.array(pts + [upper])


def integrate_kperp(f: Callable, omega: float, spec: QuadratureSpec, *, gap=None, kmax=None,
                    imaginary=False, sectors=("pw", "ew")) -> KperpResult:
    """Integrate ``f(k)`` with the polar measure k dk / (2 pi).

    At real frequency the propagating sector is integrated in k_z (k dk = k_z dk_z)
    and the evanescent one in Im k_z (k dk = kappa dkappa), which removes the
    square-root branch point at k = omega/c.  On the imaginary axis (``omega``
    = xi) the integrand is smooth and k itself is the variable.
    """
    q = omega / SPEED_OF_LIGHT
    upper = _kmax(q, gap, kmax, spec)
    if imaginary:
        def g(k):
            return k / (2 * np.pi) * _sorted_call(f, k)
        res = gauss_kronrod(g, _split_points(upper, gap), spec.rel_tol, spec.abs_tol, spec.max_subdivisions)
        nodes, weights = res.nodes, res.weights * res.nodes / (2 * np.pi)
        order = np.argsort(nodes, kind="stable")
        return KperpResult(res.value, res.error, nodes[order], weights[order], ew=res)

    if omega <= 0:
        raise DomainError("real frequency must be positive")

    def g_pw(t):
        return t / (2 * np.pi) * _sorted_call(f, np.sqrt(np.maximum(q * q - t * t, 0.0)))

    def g_ew(u):
        return u / (2 * np.pi) * _sorted_call(f, np.sqrt(q * q + u * u))

    kappa_max = math.sqrt(max(upper * upper - q * q, 0.0))
    pw_panels = np.linspace(0.0, q, 3)
    ew_panels = _split_points(kappa_max, gap)
    # one coarse pass fixes the overall scale, so a sector that is negligible
    # next to the other is not refined to its own relative accuracy
    hint = 0.0
    if "pw" in sectors:
        hint += abs(gauss_kronrod(g_pw, pw_panels, np.inf).value)
    if "ew" in sectors and kappa_max > 0:
        hint += abs(gauss_kronrod(g_ew, ew_panels, np.inf).value)
    pw = ew = None
    parts_n, parts_w = [], []
    value = error = 0.0
    if "pw" in sectors:
        pw = gauss_kronrod(g_pw, pw_panels, spec.rel_tol, spec.abs_tol, spec.max_subdivisions, hint)
        t = pw.nodes
        parts_n.append(np.sqrt(np.maximum(q * q - t * t, 0.0)))
        parts_w.append(pw.weights * t / (2 * np.pi))
        value += pw.value
        error += pw.error
    if "ew" in sectors and kappa_max > 0:
        ew = gauss_kronrod(g_ew, ew_panels, spec.rel_tol, spec.abs_tol, spec.max_subdivisions, hint)
        u = ew.nodes
        parts_n.append(np.sqrt(q * q + u * u))
        parts_w.append(ew.weights * u / (2 * np.pi))
        value += ew.value
        error += ew.error
    nodes = np.concatenate(parts_n) if parts_n else np.empty(0)
    weights = np.concatenate(parts_w) if parts_w else np.empty(0)
    order = np.argsort(nodes, kind="stable")
    return KperpResult(value, error, nodes[order], weights[order], pw=pw, ew=ew)


# -- real frequency ----------------------------------------------------------------

@dataclass
class FrequencyResult:
    value: float
    error: float
    tail_bound: float
    nodes: np.ndarray
    weights: np.ndarray
    samples: np.ndarray = field(repr=False, default=None)


def integrate_frequency(g: Callable, weight: Callable, spec: QuadratureSpec, *, omega_max: float,
                        thermal_scale: float | None = None, breakpoints=(), omega_min: float = 0.0
                        ) -> FrequencyResult:
    """int_{omega_min}^{omega_max} weight(omega) g(omega) d omega.

    ``g`` is called with one frequency at a time and is skipped wherever the
    weight vanishes.  The neglected tail beyond ``omega_max`` is bounded by
    |integrand(omega_max)| * thermal_scale (exponential decay with scale
    k_B T / hbar); a bound above the tolerance raises AccuracyError.
    """
    if not omega_max > omega_min >= 0:
        raise DomainError("need 0 <= omega_min < omega_max")
    samples = {}

    def integrand(ws):
        ws = np.asarray(ws, dtype=float)
        wt = np.asarray(weight(ws), dtype=float) * np.ones_like(ws)
        out = np.zeros_like(ws)
        for i, (w, c) in enumerate(zip(ws, wt)):
            if c != 0.0:
                gv = float(g(w))
                samples[float(w)] = gv
                out[i] = c * gv
        return out

    span = omega_max - omega_min
    pts = {omega_min, omega_max}
    for frac in (1e-4, 1e-3, 1e-2, 0.03, 0.1, 0.2, 0.35, 0.5, 0.7):
        pts.add(omega_min + frac * span)
    for b in breakpoints:
        for s in (0.97, 0.995, 1.0, 1.005, 1.03):
            x = b * s
            if omega_min < x < omega_max:
                pts.add(x)
    panels = np.array(sorted(pts))
    # half of the budget for the quadrature, half for the neglected tail
    res = gauss_kronrod(integrand, panels, 0.5 * spec.rel_tol, 0.5 * spec.abs_tol, spec.max_subdivisions)
    tail = 0.0
    if thermal_scale is not None:
        tail = abs(float(integrand(np.array([omega_max]))[0])) * thermal_scale
        allowed = 0.5 * max(spec.abs_tol, spec.rel_tol * abs(res.value))
        if tail > allowed and tail > 0:
            raise AccuracyError(f"frequency tail bound {tail:.3g} exceeds tolerance {allowed:.3g}",
                                partial=res.value, error=res.error + tail)
    ordered = np.array(sorted(samples.items())) if samples else np.empty((0, 2))
    return FrequencyResult(res.value, res.error + tail, tail, res.nodes, res.weights, ordered)


# -- Matsubara sums ----------------------------------------------------------------

@dataclass
class MatsubaraResult:
    value: float
    error: float
    n_terms: int
    frequencies: np.ndarray
    weights: np.ndarray
    terms: np.ndarray = field(repr=False, default=None)


def matsubara_frequencies(T: float, n: int) -> np.ndarray:
    """xi_j = 2 pi j k_B T / hbar for j < n."""
    return 2 * np.pi * K_B * T / HBAR * np.arange(n)


def _geometric_tail(terms) -> float:
    # sum of the neglected terms if they keep shrinking by the last ratio
    last = abs(terms[-1])
    prev = abs(terms[-2]) if len(terms) > 1 else 0.0
    if prev > 0 and last < prev:
        rho = last / prev
        return last * rho / (1 - rho)
    return last


def matsubara_sum(h: Callable, T: float, spec: QuadratureSpec, *, xi_scale: float | None = None,
                  min_terms: int = 3) -> MatsubaraResult:
    """k_B T [h(0)/2 + sum_{n>=1} h(xi_n)], truncated once terms drop below rel_tol.

    At T = 0 the sum becomes (hbar / 2 pi) int_0^inf h(xi) d xi, integrated on
    xi = xi_scale t / (1 - t).
    """
    if T < 0:
        raise DomainError("temperature must be non-negative")
    if T == 0:
        scale = xi_scale or 1e14

        def g(t):
            xi = scale * t / (1 - t)
            return np.array([h(x) for x in xi]) * scale / (1 - t) ** 2

        res = gauss_kronrod(g, np.linspace(0.0, 1.0, 5), spec.rel_tol, spec.abs_tol, spec.max_subdivisions)
        pref = HBAR / (2 * np.pi)
        xis = scale * res.nodes / (1 - res.nodes)
        w = pref * res.weights * scale / (1 - res.nodes) ** 2
        return MatsubaraResult(pref * res.value, pref * res.error, xis.size, xis, w)

    dxi = 2 * np.pi * K_B * T / HBAR
    kT = K_B * T
    terms = []
    small = 0
    n = 0
    partial = 0.0
    while True:
        if n >= spec.matsubara_max_terms:
            raise AccuracyError(
                f"Matsubara sum did not decay within {spec.matsubara_max_terms} terms",
                partial=kT * partial, error=kT * abs(terms[-1]) if terms else None,
            )
        val = float(h(n * dxi))
        if not math.isfinite(val):
            raise AccuracyError(f"non-finite Matsubara term at n={n}")
        terms.append(val)
        partial += 0.5 * val if n == 0 else val
        n += 1
        allowed = spec.rel_tol * abs(partial) + spec.abs_tol / kT
        if n >= min_terms and abs(val) <= allowed and _geometric_tail(terms) <= allowed:
            small += 1
            if small >= 2:
                break
        else:
            small = 0
    terms = np.array(terms)
    weights = np.full(n, kT)
    weights[0] = 0.5 * kT
    tail = _geometric_tail(terms)
    value = pairwise_sum(weights * terms)
    return MatsubaraResult(value, kT * tail, n, dxi * np.arange(n), weights, terms)
