"""Batch front-end.

    neqcasimir compute  --config run.yaml [--out DIR] [--threads N] [--rel-tol X]
    neqcasimir validate --config run.yaml
    neqcasimir oracle   --case {lifshitz,heatplane,delplane,blackbody,idealmirror}

Exit codes: 0 success, 2 configuration error, 3 accuracy error, 4 resonance error.
The environment variable NEQCASIMIR_OUTPUT_DIR overrides the configured
output directory (``--out`` overrides both).
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import platform
import sys
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import scipy
import yaml
from scipy.constants import Stefan_Boltzmann
from scipy.constants import Boltzmann as K_B
from scipy.constants import hbar as HBAR

from . import __version__
from .basis import SPEED_OF_LIGHT
from .errors import (
    AccuracyError,
    ConfigError,
    DomainError,
    NeqCasimirError,
    ResonanceError,
    StructuralError,
    UnsupportedModelError,
)
from .fluctuation import bose_occupation
from .materials import DielectricModel, LIBRARY, library_model, load_permittivity_csv
from .observables import (
    FilePlate,
    PlanarPlate,
    ZeroPlate,
    _kperp_integral,
    _pair_kernels,
    _pair_matrices,
    cancelled_difference,
    equilibrium_force,
    free_energy,
    heat_transfer_power,
    noneq_force_delta,
    noneq_force_total,
    planar_oracle_delta,
    planar_oracle_force,
    planar_oracle_heat,
)
from .quadrature import QuadratureSpec
from .scattering import load_block_matrix

ENV_OUTPUT = "NEQCASIMIR_OUTPUT_DIR"
CONFIG_VERSION = 1
EXIT_OK, EXIT_CONFIG, EXIT_ACCURACY, EXIT_RESONANCE = 0, 2, 3, 4

OBSERVABLES = ("force_eq", "force_neq", "delta_force", "heat_power", "free_energy", "spectra")
UNITS = {"force_eq": "Pa", "force_neq": "Pa", "delta_force": "Pa", "heat_power": "W/m^2",
         "free_energy": "J/m^2"}
TOP_KEYS = {"version", "plate1", "plate2", "gaps", "T1", "T2", "observables", "quadrature",
            "sweep", "spectra", "output"}
PLATE_KEYS = {"material", "model", "table", "file", "thickness"}
MODEL_KEYS = {"kind", "eps", "eps_inf", "plasma_frequency", "damping", "oscillators", "name"}
QUAD_KEYS = {"rel_tol", "abs_tol", "max_subdivisions", "matsubara_max_terms", "kperp_cutoff",
             "omega_cutoff"}
SWEEP_AXES = ("gap", "T1", "T2")
SPECTRA_KEYS = {"omega_min", "omega_max", "points"}
OUTPUT_KEYS = {"directory", "prefix"}


@dataclass
class PlateSpec:
    kind: str                 # library | model | table | file | blackbody
    material: str | None = None
    model: dict | None = None
    path: str | None = None
    thickness: float | None = None

    def build(self, base: Path):
        if self.kind == "blackbody":
            return ZeroPlate()
        if self.kind == "file":
            return FilePlate(load_block_matrix(base / self.path), str(self.path))
        if self.kind == "library":
            model = library_model(self.material)
        elif self.kind == "table":
            model = load_permittivity_csv(base / self.path)
        else:
            model = _build_model(self.model)
        return PlanarPlate(model, self.thickness)


@dataclass
class RunConfig:
    plate1: PlateSpec
    plate2: PlateSpec
    gaps: list
    T1: float
    T2: float
    observables: list
    quadrature: QuadratureSpec = field(default_factory=QuadratureSpec)
    sweep_axis: str | None = None
    sweep_values: list = field(default_factory=list)
    spectra: dict = field(default_factory=dict)
    output_dir: str = "results"
    prefix: str = "run"
    base_dir: Path = field(default_factory=Path.cwd)
    source: dict = field(default_factory=dict)


def _build_model(d: dict) -> DielectricModel:
    kind = d.get("kind")
    name = d.get("name", "")
    osc = [tuple(float(x) for x in o) for o in d.get("oscillators", [])]
    if kind == "constant":
        return DielectricModel.constant(complex(d["eps"]), name=name)
    if kind == "drude":
        return DielectricModel.drude(float(d["plasma_frequency"]), float(d["damping"]),
                                     float(d.get("eps_inf", 1.0)), name=name)
    if kind == "lorentz":
        return DielectricModel.lorentz(float(d.get("eps_inf", 1.0)), osc, name=name)
    if kind == "drude_lorentz":
        return DielectricModel.drude_lorentz(float(d.get("eps_inf", 1.0)), float(d["plasma_frequency"]),
                                             float(d["damping"]), osc, name=name)
    raise ConfigError([f"unknown model kind {kind!r}"])


def _unknown(where, d, allowed, problems):
    for k in sorted(set(d) - allowed):
        problems.append(f"{where}: unknown key {k!r}")


def _number(where, value, problems, positive=False, nonneg=False):
    try:
        x = float(value)
    except (TypeError, ValueError):
        problems.append(f"{where}: expected a number, got {value!r}")
        return None
    if not np.isfinite(x) or (positive and x <= 0) or (nonneg and x < 0):
        problems.append(f"{where}: invalid value {value!r}")
        return None
    return x


def _parse_plate(where, d, base, problems):
    if isinstance(d, str):
        d = {"material": d}
    if not isinstance(d, dict):
        problems.append(f"{where}: expected a mapping")
        return None
    _unknown(where, d, PLATE_KEYS, problems)
    sources = [k for k in ("material", "model", "table", "file") if k in d]
    if len(sources) != 1:
        problems.append(f"{where}: give exactly one of material, model, table, file")
        return None
    thickness = None
    if "thickness" in d:
        thickness = _number(f"{where}.thickness", d["thickness"], problems, positive=True)
    src = sources[0]
    if src == "material":
        name = str(d["material"]).lower()
        if name == "blackbody":
            return PlateSpec("blackbody")
        if name not in LIBRARY:
            problems.append(f"{where}.material: unknown material {name!r}; known: "
                            f"{sorted(LIBRARY) + ['blackbody']}")
            return None
        return PlateSpec("library", material=name, thickness=thickness)
    if src == "model":
        m = d["model"]
        if not isinstance(m, dict):
            problems.append(f"{where}.model: expected a mapping")
            return None
        _unknown(f"{where}.model", m, MODEL_KEYS, problems)
        try:
            _build_model(m)
        except ConfigError as e:
            problems.extend(f"{where}.model: {p}" for p in e.problems)
            return None
        except (KeyError, TypeError, ValueError, NeqCasimirError) as e:
            problems.append(f"{where}.model: {e}")
            return None
        return PlateSpec("model", model=m, thickness=thickness)
    path = str(d[src])
    if not (base / path).is_file():
        problems.append(f"{where}.{src}: file not found: {path}")
        return None
    return PlateSpec(src, path=path, thickness=thickness)


def parse_config(data, base_dir=None) -> RunConfig:
    """Validate a config mapping; every problem is collected before raising ConfigError."""
    base = Path(base_dir or Path.cwd())
    problems = []
    if not isinstance(data, dict):
        raise ConfigError(["config must be a mapping"])
    _unknown("config", data, TOP_KEYS, problems)
    if data.get("version") != CONFIG_VERSION:
        problems.append(f"config: version must be {CONFIG_VERSION}, got {data.get('version')!r}")
    plates = []
    for key in ("plate1", "plate2"):
        if key not in data:
            problems.append(f"config: missing {key}")
            plates.append(None)
        else:
            plates.append(_parse_plate(key, data[key], base, problems))
    gaps = data.get("gaps")
    if gaps is None:
        problems.append("config: missing gaps")
        gaps = []
    if not isinstance(gaps, list):
        gaps = [gaps]
    gaps = [_number(f"gaps[{i}]", g, problems, positive=True) for i, g in enumerate(gaps)]
    T = {}
    for key in ("T1", "T2"):
        if key not in data:
            problems.append(f"config: missing {key}")
        else:
            T[key] = _number(key, data[key], problems, nonneg=True)
    obs = data.get("observables")
    if not obs:
        problems.append("config: at least one observable is required")
        obs = []
    if not isinstance(obs, list):
        obs = [obs]
    for o in obs:
        if o not in OBSERVABLES:
            problems.append(f"observables: unknown observable {o!r}; known: {list(OBSERVABLES)}")
    quad = QuadratureSpec()
    q = data.get("quadrature", {}) or {}
    if not isinstance(q, dict):
        problems.append("quadrature: expected a mapping")
        q = {}
    _unknown("quadrature", q, QUAD_KEYS, problems)
    qv = {}
    for k in QUAD_KEYS & set(q):
        x = _number(f"quadrature.{k}", q[k], problems, positive=(k != "abs_tol"), nonneg=True)
        if x is not None:
            qv[k] = int(x) if k in ("max_subdivisions", "matsubara_max_terms") else x
    try:
        quad = QuadratureSpec(**qv)
    except NeqCasimirError as e:
        problems.append(f"quadrature: {e}")
    axis, values = None, []
    sw = data.get("sweep")
    if sw is not None:
        if not isinstance(sw, dict):
            problems.append("sweep: expected a mapping")
        else:
            _unknown("sweep", sw, {"axis", "values"}, problems)
            axis = sw.get("axis")
            if axis not in SWEEP_AXES:
                problems.append(f"sweep.axis: must be one of {list(SWEEP_AXES)}")
            vals = sw.get("values") or []
            if not isinstance(vals, list) or not vals:
                problems.append("sweep.values: need a non-empty list")
                vals = []
            values = [_number(f"sweep.values[{i}]", v, problems, positive=(axis == "gap"), nonneg=True)
                      for i, v in enumerate(vals)]
    spectra = data.get("spectra", {}) or {}
    if not isinstance(spectra, dict):
        problems.append("spectra: expected a mapping")
        spectra = {}
    _unknown("spectra", spectra, SPECTRA_KEYS, problems)
    out = data.get("output", {}) or {}
    if not isinstance(out, dict):
        problems.append("output: expected a mapping")
        out = {}
    _unknown("output", out, OUTPUT_KEYS, problems)
    # file plates only exist at their own frequency
    if all(p is not None for p in plates) and any(p.kind == "file" for p in plates):
        bad = [o for o in obs if o != "spectra"]
        if bad:
            problems.append(f"observables {bad} need planar plates; block-matrix files support 'spectra' only")
    if problems:
        raise ConfigError(problems)
    return RunConfig(plates[0], plates[1], gaps, T["T1"], T["T2"], list(dict.fromkeys(obs)), quad,
                     axis, values, spectra, str(out.get("directory", "results")),
                     str(out.get("prefix", "run")), base, data)


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as e:
        raise ConfigError([f"cannot read config {path}: {e}"]) from None
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as e:
        raise ConfigError([f"{path}: not valid YAML: {e}"]) from None
    return parse_config(data, path.parent)


# -- execution -----------------------------------------------------------------------

def _dedupe(values, what):
    out = list(dict.fromkeys(values))
    if len(out) < len(values):
        warnings.warn(f"duplicate {what} values removed")
    return out


def expand(cfg: RunConfig) -> list[tuple[float, float, float]]:
    """Cartesian (gap, T1, T2) points, deduplicated in first-seen order."""
    gaps = _dedupe(cfg.gaps, "gap")
    T1s, T2s = [cfg.T1], [cfg.T2]
    if cfg.sweep_axis == "gap":
        gaps = _dedupe(cfg.sweep_values, "gap")
    elif cfg.sweep_axis == "T1":
        T1s = _dedupe(cfg.sweep_values, "T1")
    elif cfg.sweep_axis == "T2":
        T2s = _dedupe(cfg.sweep_values, "T2")
    return [(g, t1, t2) for g in gaps for t1 in T1s for t2 in T2s]


def _evaluate(name, p1, p2, gap, T1, T2, spec):
    if name == "force_eq":
        return equilibrium_force(p1, p2, gap, T1, spec)
    if name == "free_energy":
        return free_energy(p1, p2, gap, T1, spec)
    if name == "force_neq":
        return noneq_force_total(p1, p2, gap, T1, T2, spec)
    if name == "delta_force":
        return noneq_force_delta(p1, p2, gap, T1, T2, spec)
    if name == "heat_power":
        return heat_transfer_power(p1, p2, gap, T1, T2, spec)
    raise ValueError(name)


def _spectra_table(cfg, p1, p2, gap, T1, T2):
    """k_perp-integrated kernels on a fixed frequency list."""
    spec = cfg.quadrature
    if isinstance(p1, FilePlate) or isinstance(p2, FilePlate):
        ref = p1 if isinstance(p1, FilePlate) else p2
        grid = ref.S.grid
        S1, S2 = p1.scattering_matrix(grid, 1, gap), p2.scattering_matrix(grid, 2, gap)
        j12, j21 = _pair_kernels(S1, S2, "J")
        h12, _ = _pair_kernels(S1, S2, "H")
        w = grid.weights
        rows = [(grid.frequency, float(np.sum(w * h12)), float(np.sum(w * cancelled_difference(j12, j21))))]
    else:
        Tmax = max(T1, T2, 1.0)
        omega_max = float(cfg.spectra.get("omega_max", spec.omega_cutoff * K_B * Tmax / HBAR))
        omega_min = float(cfg.spectra.get("omega_min", omega_max * 1e-3))
        n = int(cfg.spectra.get("points", 200))
        rows = []
        for om in np.geomspace(omega_min, omega_max, n):
            def H(k, om=om):
                return _pair_kernels(*_pair_matrices(p1, p2, om, k, gap, False), "H")[0]

            def dJ(k, om=om):
                return cancelled_difference(*_pair_kernels(*_pair_matrices(p1, p2, om, k, gap, False), "J"))
            h = _kperp_integral(H, om, spec, gap, False, None)[0]
            d = _kperp_integral(dJ, om, spec, gap, False, None)[0]
            rows.append((float(om), h, d))
    out = []
    for om, h, d in rows:
        dn = float(bose_occupation(om, T1) - bose_occupation(om, T2))
        out.append((om, h, d, HBAR / (2 * np.pi) * om * dn * h, HBAR / (4 * np.pi) * dn * d))
    return out


SPECTRA_HEADER = ["omega_rad_s", "H_kernel_m^-2", "dJ_kernel_m^-3",
                  "heat_density_W_s_m^-2", "delta_force_density_Pa_s"]
RESULT_HEADER = ["gap_m", "T1_K", "T2_K", "observable", "value_SI", "error_SI", "unit",
                 "rel_tol", "frequency_nodes", "matsubara_terms", "tail_bound_SI"]


def _fmt(x):
    if x is None:
        return ""
    if isinstance(x, float):
        if not np.isfinite(x):
            raise AccuracyError(f"non-finite value {x!r} in results")
        return repr(x)
    return str(x)


def _work(job):
    name, p1, p2, gap, T1, T2, spec = job
    res = _evaluate(name, p1, p2, gap, T1, T2, spec)
    if not (np.isfinite(res.value) and np.isfinite(res.error)):
        raise AccuracyError(f"{name} at gap={gap} produced a non-finite result")
    return res


def run(cfg: RunConfig, out_dir=None, threads: int = 1) -> dict:
    """Evaluate every (point, observable) and write CSV tables plus a JSON sidecar."""
    out_dir = Path(out_dir or os.environ.get(ENV_OUTPUT) or (cfg.base_dir / cfg.output_dir))
    p1, p2 = cfg.plate1.build(cfg.base_dir), cfg.plate2.build(cfg.base_dir)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        points = expand(cfg)
    tasks = [(pt, name) for pt in points for name in cfg.observables if name != "spectra"]
    jobs = [(name, p1, p2, gap, T1, T2, cfg.quadrature) for (gap, T1, T2), name in tasks]
    if threads > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(_work, jobs))
    else:
        results = [_work(j) for j in jobs]
    rows = []
    for ((gap, T1, T2), name), res in zip(tasks, results):
        m = res.meta or {}
        rows.append([gap, T1, T2, name, float(res.value), float(res.error), UNITS[name],
                     cfg.quadrature.rel_tol, m.get("frequency_nodes"), m.get("matsubara_terms"),
                     m.get("tail_bound")])
    spectra_files = []
    if "spectra" in cfg.observables:
        for gap, T1, T2 in points:
            table = _spectra_table(cfg, p1, p2, gap, T1, T2)
            fname = f"{cfg.prefix}_spectra_gap{gap!r}_T1{T1!r}_T2{T2!r}.csv"
            _write_csv(out_dir / fname, SPECTRA_HEADER, table)
            spectra_files.append(fname)
    out_dir.mkdir(parents=True, exist_ok=True)
    _write_csv(out_dir / f"{cfg.prefix}_results.csv", RESULT_HEADER, rows)
    meta = {
        "config": cfg.source,
        "quadrature": asdict(cfg.quadrature),
        "versions": {"neqcasimir": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
                     "python": platform.python_version()},
        "threads": threads,
        "rows": len(rows),
        "spectra_files": spectra_files,
        "warnings": sorted({str(w.message) for w in caught}),
    }
    (out_dir / f"{cfg.prefix}_meta.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    for w in meta["warnings"]:
        print(f"warning: {w}", file=sys.stderr)
    return {"rows": rows, "out_dir": out_dir, "meta": meta}


def _write_csv(path, header, rows):
    path.parent.mkdir(parents=True, exist_ok=True)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(x) for x in r])
    path.write_text(buf.getvalue())


# -- oracle suite ---------------------------------------------------------------------

def _oracle_case(case: str) -> tuple[bool, str]:
    gold, sic = library_model("gold"), library_model("sic")
    tight = QuadratureSpec(rel_tol=1e-9)
    if case == "lifshitz":
        F = equilibrium_force(gold, gold, 100e-9, 300.0, tight)
        O = planar_oracle_force(gold, gold, 100e-9, 300.0, rule=F.rule)
        rel = abs(F.value / O.value - 1)
        return rel < 1e-8, f"trace {F.value:.10e} Pa, oracle {O.value:.10e} Pa, rel diff {rel:.2e}"
    if case in ("heatplane", "delplane"):
        spec = QuadratureSpec(rel_tol=1e-6)
        fn, orc = ((heat_transfer_power, planar_oracle_heat) if case == "heatplane"
                   else (noneq_force_delta, planar_oracle_delta))
        R = fn(sic, gold, 100e-9, 350.0, 300.0, spec)
        O = orc(sic, gold, 100e-9, 350.0, 300.0, rule=R.rule)
        rel = abs(R.value / O.value - 1)
        return rel < 1e-8, f"trace {R.value:.10e}, oracle {O.value:.10e}, rel diff {rel:.2e}"
    if case == "blackbody":
        W = heat_transfer_power(ZeroPlate(), ZeroPlate(), 1e-6, 400.0, 300.0, QuadratureSpec(rel_tol=1e-8))
        ref = Stefan_Boltzmann * (400.0**4 - 300.0**4)
        rel = abs(W.value / ref - 1)
        return rel < 1e-3, f"W = {W.value:.6f} W/m^2, sigma (T1^4 - T2^4) = {ref:.6f}, rel diff {rel:.2e}"
    if case == "idealmirror":
        m = DielectricModel.constant(1e8)
        F = equilibrium_force(m, m, 1e-6, 1.0, QuadratureSpec(rel_tol=1e-6))
        ref = np.pi**2 * HBAR * SPEED_OF_LIGHT / (240 * 1e-24)
        rel = abs(abs(F.value) / ref - 1)
        return rel < 5e-3, f"|F| = {abs(F.value):.6e} Pa, ideal {ref:.6e} Pa, rel diff {rel:.2e}"
    raise ConfigError([f"unknown oracle case {case!r}"])


ORACLE_CASES = ("lifshitz", "heatplane", "delplane", "blackbody", "idealmirror")


# -- entry point ----------------------------------------------------------------------

def _error_block(exc) -> dict:
    d = {"type": type(exc).__name__, "message": str(exc)}
    for k in ("problems", "partial", "error", "omega", "condition"):
        v = getattr(exc, k, None)
        if v is not None:
            d[k] = v if not isinstance(v, complex) else [v.real, v.imag]
    return {"error": d}


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="neqcasimir", description=__doc__.split("\n")[0])
    sub = ap.add_subparsers(dest="command", required=True)
    c = sub.add_parser("compute", help="evaluate the observables of a config")
    c.add_argument("--config", required=True)
    c.add_argument("--out")
    c.add_argument("--threads", type=int, default=1, help="worker processes over (point, observable)")
    c.add_argument("--rel-tol", type=float)
    v = sub.add_parser("validate", help="check a config without computing")
    v.add_argument("--config", required=True)
    o = sub.add_parser("oracle", help="run a built-in oracle comparison")
    o.add_argument("--case", required=True, choices=ORACLE_CASES + ("all",))
    args = ap.parse_args(argv)
    try:
        if args.command == "oracle":
            cases = ORACLE_CASES if args.case == "all" else (args.case,)
            ok_all = True
            for case in cases:
                ok, msg = _oracle_case(case)
                ok_all &= ok
                print(f"{'PASS' if ok else 'FAIL'} {case}: {msg}")
            return EXIT_OK if ok_all else EXIT_ACCURACY
        cfg = load_config(args.config)
        if args.command == "validate":
            print(f"config ok: {len(expand(cfg))} point(s), observables {cfg.observables}")
            return EXIT_OK
        if args.rel_tol is not None:
            cfg.quadrature = cfg.quadrature.replace(rel_tol=args.rel_tol)
        out = run(cfg, args.out, args.threads)
        print(f"wrote {len(out['rows'])} row(s) to {out['out_dir']}")
        return EXIT_OK
    except (ConfigError, DomainError, StructuralError, UnsupportedModelError) as e:
        print(json.dumps(_error_block(e), indent=2), file=sys.stderr)
        return EXIT_CONFIG
    except ResonanceError as e:
        print(json.dumps(_error_block(e), indent=2), file=sys.stderr)
        return EXIT_RESONANCE
    except NeqCasimirError as e:
        print(json.dumps(_error_block(e), indent=2), file=sys.stderr)
        return EXIT_ACCURACY


if __name__ == "__main__":
    sys.exit(main())
