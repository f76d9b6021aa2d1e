"""Acceptance suite: oracle equivalences, limits and property checks.

Every test records its outcome through ``conftest.record`` before asserting,
so the terminal summary lists one PASS/FAIL line per criterion.
"""
import time

import numpy as np
from scipy.constants import Stefan_Boltzmann

from conftest import record
from neqcasimir import (
    DielectricModel,
    ModeIndex,
    Polarization,
    QuadratureSpec,
    ZeroPlate,
    equilibrium_force,
    free_energy,
    heat_transfer_power,
    library_model,
    noneq_force_delta,
    noneq_force_total,
    planar_oracle_delta,
    planar_oracle_force,
    planar_oracle_heat,
)
from neqcasimir.basis import SPEED_OF_LIGHT, Direction, ModeGrid, mode_field, inversion_map, polarization_vectors
from neqcasimir.cavity import intracavity_correlators
from neqcasimir.fluctuation import HBAR, bose_occupation, source_correlator, thermal_weight
from neqcasimir.observables import (
    _pair_kernels,
    _pair_matrices,
    as_plate,
    average_observable,
    force_kernel_J,
    heat_kernel_H,
    observable_kernel,
)
from neqcasimir.scattering import check_onsager, planar_scattering_matrix, translate
from neqcasimir.testing import random_grid, random_reciprocal_passive

GOLD = library_model("gold")
SIC = library_model("sic")
ORACLE_SPEC = QuadratureSpec(rel_tol=1e-6)


class Timer:
    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.t0


def _rel(a, b):
    return abs(a - b) / abs(b)


def test_01_lifshitz_oracle():
    ok, detail = False, "not run"
    try:
        worst = 0.0
        with Timer() as t:
            for gap in (50e-9, 100e-9, 500e-9, 1000e-9):
                F = equilibrium_force(GOLD, GOLD, gap, 300.0, ORACLE_SPEC)
                O = planar_oracle_force(GOLD, GOLD, gap, 300.0, rule=F.rule)
                assert F.value < 0
                worst = max(worst, _rel(F.value, O.value))
        ok = worst < 1e-8 and t.elapsed < 30
        detail = f"max rel diff {worst:.2e} (< 1e-8), {t.elapsed:.1f} s (< 30 s)"
    finally:
        record(1, "Lifshitz oracle equivalence", ok, detail)
    assert ok, detail


def test_02_ideal_mirror_limit():
    ok, detail = False, "not run"
    try:
        gap = 1e-6
        mirror = DielectricModel.constant(1e8)
        with Timer() as t:
            F = equilibrium_force(mirror, mirror, gap, 1.0, QuadratureSpec(rel_tol=1e-6))
        ideal = np.pi**2 * HBAR * SPEED_OF_LIGHT / (240 * gap**4)
        rel = _rel(abs(F.value), ideal)
        ok = rel < 5e-3 and t.elapsed < 10
        detail = f"|F| = {abs(F.value):.5e} Pa vs {ideal:.5e} Pa, rel {rel:.2e} (< 5e-3), {t.elapsed:.1f} s"
    finally:
        record(2, "ideal-mirror limit", ok, detail)
    assert ok, detail


def test_03_black_body():
    ok, detail = False, "not run"
    try:
        with Timer() as t:
            W = heat_transfer_power(ZeroPlate(), ZeroPlate(), 1e-6, 400.0, 300.0, QuadratureSpec(rel_tol=1e-8))
        rel = _rel(W.value, 992.1)
        exact = Stefan_Boltzmann * (400.0**4 - 300.0**4)
        ok = rel < 1e-3 and _rel(W.value, exact) < 1e-7 and t.elapsed < 10
        detail = (f"W = {W.value:.4f} W/m^2, rel {rel:.2e} to 992.1 (< 1e-3), "
                  f"rel {_rel(W.value, exact):.1e} to sigma dT^4, {t.elapsed:.1f} s")
    finally:
        record(3, "black-body heat transfer", ok, detail)
    assert ok, detail


def test_04_heat_plane_oracle():
    ok, detail = False, "not run"
    try:
        worst = 0.0
        with Timer() as t:
            for gap in (20e-9, 100e-9, 1000e-9):
                W = heat_transfer_power(SIC, GOLD, gap, 350.0, 300.0, ORACLE_SPEC)
                O = planar_oracle_heat(SIC, GOLD, gap, 350.0, 300.0, rule=W.rule)
                assert W.value > 0
                worst = max(worst, _rel(W.value, O.value))
        ok = worst < 1e-8 and t.elapsed < 60
        detail = f"max rel diff {worst:.2e} (< 1e-8), {t.elapsed:.1f} s (< 60 s)"
    finally:
        record(4, "heat-plane oracle equivalence", ok, detail)
    assert ok, detail


def _raw_delta(p1, p2, gap, T1, T2, rule):
    # unfloored J12 - J21 summed on a frozen rule, and the size of what cancels
    a, b = as_plate(p1), as_plate(p2)
    raw = scale = 0.0
    for om, w, kn, kw in zip(rule.frequencies, rule.weights, rule.k_nodes, rule.k_weights):
        if kn.size == 0:
            continue
        S1, S2 = _pair_matrices(a, b, om, kn, gap, False)
        j12, j21 = _pair_kernels(S1, S2, "J")
        c = w * HBAR / (4 * np.pi) * (bose_occupation(om, T1) - bose_occupation(om, T2))
        raw += c * np.sum(kw * (j12 - j21))
        scale += abs(c) * np.sum(np.abs(kw) * (np.abs(j12) + np.abs(j21)))
    return raw, scale


def test_05_delta_force_oracle_and_zeros():
    ok, detail = False, "not run"
    try:
        worst = 0.0
        with Timer() as t:
            for gap in (20e-9, 100e-9, 1000e-9):
                D = noneq_force_delta(SIC, GOLD, gap, 350.0, 300.0, ORACLE_SPEC)
                O = planar_oracle_delta(SIC, GOLD, gap, 350.0, 300.0, rule=D.rule)
                worst = max(worst, _rel(D.value, O.value))
            same_T = noneq_force_delta(SIC, GOLD, 100e-9, 300.0, 300.0, ORACLE_SPEC)
            same_T_rule = noneq_force_delta(SIC, GOLD, 100e-9, 300.0, 300.0, rule=D.rule)
            twin = noneq_force_delta(GOLD, GOLD, 100e-9, 350.0, 300.0, ORACLE_SPEC)
            raw, scale = _raw_delta(GOLD, GOLD, 100e-9, 350.0, 300.0, D.rule)
        twin_rel = abs(raw) / scale
        ok = (worst < 1e-8 and same_T.value == 0.0 and same_T_rule.value == 0.0
              and twin.value == 0.0 and twin_rel < 1e-12 and t.elapsed < 60)
        detail = (f"max rel diff {worst:.2e} (< 1e-8); T1 = T2 gives {same_T.value!r}; "
                  f"identical plates give {twin.value!r} (unfloored sum / scale {twin_rel:.1e}); {t.elapsed:.1f} s (< 60 s)")
    finally:
        record(5, "delta-force oracle and exact zeros", ok, detail)
    assert ok, detail


def test_06_h_symmetry_and_j_antisymmetry():
    ok, detail = False, "not run"
    try:
        rng = np.random.default_rng(6)
        worst, exact = 0.0, True
        with Timer() as t:
            for i in range(200):
                size = 2 * (1 + i % 6)
                grid = random_grid(rng, size, omega=rng.uniform(1e13, 1e16))
                S1 = random_reciprocal_passive(grid, rng)
                S2 = random_reciprocal_passive(grid, rng).replace(plate=2)
                h12, h21 = heat_kernel_H(S1, S2), heat_kernel_H(S2, S1)
                worst = max(worst, abs(h12 - h21) / abs(h12))
                a12, a21 = _pair_kernels(S1, S2, "J")
                b12, b21 = _pair_kernels(S2, S1, "J")
                exact &= bool(np.all((a12 - a21) == -(b12 - b21)))
        ok = worst < 1e-10 and exact and t.elapsed < 30
        detail = (f"max |H12 - H21|/|H| = {worst:.1e} (< 1e-10), J difference antisymmetric "
                  f"bit for bit: {exact}, {t.elapsed:.1f} s")
    finally:
        record(6, "H symmetry", ok, detail)
    assert ok, detail


def _random_material(rng):
    kind = rng.integers(3)
    wp = 10 ** rng.uniform(14, 16.5)
    if kind == 0:
        return DielectricModel.drude(wp, wp * 10 ** rng.uniform(-4, -1))
    w0 = 10 ** rng.uniform(13, 15.5)
    osc = [(rng.uniform(0.1, 10.0), w0, w0 * 10 ** rng.uniform(-4, -1))]
    if kind == 1:
        return DielectricModel.lorentz(rng.uniform(1, 10), osc)
    return DielectricModel.drude_lorentz(rng.uniform(1, 5), wp, wp * 10 ** rng.uniform(-4, -1), osc)


def test_07_kirchhoff_psd():
    ok, detail = False, "not run"
    try:
        rng = np.random.default_rng(7)
        worst, n_zero = np.inf, 0
        with Timer() as t:
            for _ in range(1000):
                model = _random_material(rng)
                omega = 10 ** rng.uniform(12.5, 16.5)
                q = omega / SPEED_OF_LIGHT
                k = np.sort(q * rng.uniform(0.01, 30.0, size=8))
                k = k[np.abs(k / q - 1) > 1e-6]
                grid = ModeGrid(omega, np.stack([k, np.zeros_like(k)], -1)[:, None, :], np.ones(k.size),
                                isotropic=True)
                plate = int(rng.integers(1, 3))
                S = planar_scattering_matrix(model, grid, plate, rng.uniform(1e-8, 1e-6))
                c = source_correlator(S, omega, rng.uniform(1, 1000), check=False)
                if c.norm() == 0.0:
                    # a far plate 2 can underflow to S = 0, which is trivially PSD
                    n_zero += 1
                    continue
                worst = min(worst, c.min_eigenvalue() / c.norm())
        ok = worst >= -1e-10 and t.elapsed < 30
        detail = (f"min eigenvalue / norm = {worst:.2e} (>= -1e-10) over 1000 samples "
                  f"({n_zero} with S = 0), {t.elapsed:.1f} s")
    finally:
        record(7, "Kirchhoff correlator PSD", ok, detail)
    assert ok, detail


def _mode_identities(rng, n):
    worst = 0.0
    for _ in range(n):
        omega = 10 ** rng.uniform(13, 16)
        q = omega / SPEED_OF_LIGHT
        mag = q * rng.uniform(0.05, 3.0)
        ang = rng.uniform(0, 2 * np.pi)
        mode = ModeIndex(Polarization(int(rng.integers(2))), (mag * np.cos(ang), mag * np.sin(ang)),
                         Direction(int(rng.choice([-1, 1]))))
        r = rng.uniform(-1, 1, size=3) / q
        s = 1 if mag < q else -1
        lhs = np.conj(mode_field(mode, omega, r))
        partner = mode if s > 0 else ModeIndex(mode.polarization, mode.k_perp, mode.direction.flipped())
        rel1 = np.abs(lhs - mode_field(partner, omega, -r)).max()
        sign = (-1) ** mode.parity
        rel2 = np.abs(mode_field(inversion_map(mode), omega, -r) - sign * mode_field(mode, omega, r)).max()
        kz = np.sqrt(complex(q * q - mag * mag))
        kz = kz if kz.imag >= 0 else -kz
        kvec = np.array([mode.k_perp[0], mode.k_perp[1], int(mode.direction) * kz])
        es, ep = polarization_vectors(mode, omega)
        trans = max(abs(kvec @ es), abs(kvec @ ep)) / q
        scale = max(1.0, np.abs(lhs).max())
        worst = max(worst, rel1 / scale, rel2 / scale, trans)
    return worst


def test_08_mode_identities():
    ok, detail = False, "not run"
    try:
        rng = np.random.default_rng(8)
        with Timer() as t:
            field_worst = _mode_identities(rng, 10_000)
            ons_worst, n_modes = 0.0, 0
            while n_modes < 10_000:
                grid = random_grid(rng, 4 * int(rng.integers(1, 26)), omega=10 ** rng.uniform(13, 16))
                S = planar_scattering_matrix(_random_material(rng), grid, int(rng.integers(1, 3)),
                                             rng.uniform(1e-8, 1e-6))
                S = translate(S, (*rng.uniform(-1e-7, 1e-7, 2), 0.0))
                ons_worst = max(ons_worst, check_onsager(S).max_violation)
                n_modes += grid.n_modes
        worst = max(field_worst, ons_worst)
        ok = worst < 1e-13 and t.elapsed < 5
        detail = (f"mode fields {field_worst:.1e}, Onsager {ons_worst:.1e} over {n_modes} modes "
                  f"(< 1e-13), {t.elapsed:.2f} s (< 5 s)")
    finally:
        record(8, "mode identities", ok, detail)
    assert ok, detail


def test_09_thermodynamic_consistency():
    ok, detail = False, "not run"
    try:
        gap, h, T = 200e-9, 0.1e-9, 300.0
        spec = QuadratureSpec(rel_tol=1e-8)
        with Timer() as t:
            F = equilibrium_force(GOLD, GOLD, gap, T, spec)
            up = free_energy(GOLD, GOLD, gap + h, T, spec)
            down = free_energy(GOLD, GOLD, gap - h, T, spec)
            fd = -(up.value - down.value) / (2 * h)
            total = noneq_force_total(GOLD, GOLD, gap, T, T, spec)
        rel_fd = _rel(fd, F.value)
        rel_tot = _rel(total.value, F.value)
        ok = rel_fd < 1e-4 and rel_tot < 1e-12 and t.elapsed < 20
        detail = (f"-dF/da vs force rel {rel_fd:.1e} (< 1e-4), total(T, T) vs eq rel {rel_tot:.1e} "
                  f"(< 1e-12), {t.elapsed:.1f} s")
    finally:
        record(9, "thermodynamic consistency", ok, detail)
    assert ok, detail


def test_10_dual_path():
    ok, detail = False, "not run"
    try:
        rng = np.random.default_rng(10)
        worst_t = worst_s = 0.0
        with Timer() as t:
            for i in range(100):
                size = 2 * (1 + i % 6)
                omega = rng.uniform(1e13, 1e14)
                T1, T2 = rng.uniform(100, 1000, 2)
                grid = random_grid(rng, size, omega=omega)
                S1 = random_reciprocal_passive(grid, rng)
                S2 = random_reciprocal_passive(grid, rng).replace(plate=2)
                C = intracavity_correlators(S1, S2, source_correlator(S1, omega, T1),
                                            source_correlator(S2, omega, T2))
                F1, F2 = thermal_weight(omega, T1), thermal_weight(omega, T2)
                tzz = average_observable(observable_kernel(grid, "stress_zz"), C)
                direct_t = (F1 * force_kernel_J(S1, S2) + F2 * force_kernel_J(S2, S1)) / omega
                sz = average_observable(observable_kernel(grid, "poynting_z"), C)
                direct_s = F1 * heat_kernel_H(S1, S2) - F2 * heat_kernel_H(S2, S1)
                worst_t = max(worst_t, abs(tzz - direct_t) / abs(direct_t))
                worst_s = max(worst_s, abs(sz - direct_s) / abs(direct_s))
        ok = max(worst_t, worst_s) < 1e-12 and t.elapsed < 30
        detail = f"T_zz {worst_t:.1e}, S_z {worst_s:.1e} (< 1e-12), {t.elapsed:.1f} s"
    finally:
        record(10, "dual-path consistency", ok, detail)
    assert ok, detail
