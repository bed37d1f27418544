"""Command-line front end: ``phononblock {g2,sweep,coupling,design,validate}``.

Exit codes: 0 success, 1 computational failure, 2 usage or configuration error.
"""
from __future__ import annotations

import argparse
import math
import os
import re
import sys
import warnings

import numpy as np

from . import design as dz
from .config import RunConfig, load_document, parse_axis_flag, parse_config
from .constants import CONSTANTS
from .coulomb import (
    DiskPair,
    characteristic_temperature,
    coupling_strength,
    disk_potential_energy,
    point_charge_coupling,
    thermal_occupation,
)
from .elliptic import ellipe, ellipk
from .errors import ConfigError, PhononBlockError, SweepError
from .fock import FockBasis
from .lindblad import build_liouvillian, fock_state, steady_state, thermal_state, trace_distance, vec
from .model import RwaParams, build_rwa_hamiltonian
from .observables import g2_zero
from .output import Table, emit, single_point_table, sweep_table
from .sweep import evaluate_point, run_sweep

THREADS_ENV = "PHONONBLOCK_THREADS"

EXIT_OK, EXIT_FAILURE, EXIT_USAGE = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def __init__(self, *args, **kwargs):
        super().__init__(*args, **kwargs)
        # Let values such as -1e-16 through as numbers, not as option names.
        self._negative_number_matcher = re.compile(r"^-(\d+\.?\d*|\.\d+)([eE][-+]?\d+)?$")

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="TOML configuration file")
    common.add_argument("--out", help="output path (default: stdout)")
    common.add_argument("--format", choices=("csv", "json"))
    common.add_argument("--threads", type=int, help=f"worker processes (env {THREADS_ENV})")
    common.add_argument("--materials", help="materials JSON file")
    common.add_argument("--n-max", dest="n_max", type=int, help="Fock cutoff per mode")
    common.add_argument("--timing", action="store_true", default=None, help="fill the wall_ms column")
    common.add_argument("--method", choices=("linear", "eigen"))
    common.add_argument("--solver", choices=("auto", "direct", "krylov"))

    params = argparse.ArgumentParser(add_help=False)
    for name in ("delta", "j", "f", "u", "gamma"):
        params.add_argument(f"--{name}", type=float)
    params.add_argument("--n-th", dest="n_th", type=float)

    parser = _Parser(prog="phononblock", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="subcommand", required=True, parser_class=_Parser)
    sub.add_parser("g2", parents=[common, params], help="steady-state g2(0) at one point")
    sw = sub.add_parser("sweep", parents=[common, params], help="grid scan of g2(0)")
    sw.add_argument("--axis", action="append",
                    help="name=v1,v2,... or name=log:start:stop:num or name=lin:start:stop:num")

    cp = sub.add_parser("coupling", parents=[common], help="disk-disk phonon hopping rate")
    for flag, key in (("--radius", "radius"), ("--q1", "charge_q1"), ("--q2", "charge_q2"),
                      ("--separation", "separation"), ("--m1", "mass_m1"), ("--m2", "mass_m2"),
                      ("--omega-m", "omega_m"), ("--gamma", "gamma"), ("--h0", "h0")):
        cp.add_argument(flag, dest=f"coupling.{key}", type=float)

    ds = sub.add_parser("design", parents=[common], help="temperature-size trade-off")
    tables = ds.add_mutually_exclusive_group()
    for n in (1, 2, 3):
        tables.add_argument(f"--table{n}", dest="design.table", action="store_const", const=n)
    ds.add_argument("--kind", dest="design.kind", choices=[g.value for g in dz.Geometry])
    for key in ("thickness", "radius", "depth", "diameter", "length", "r", "c", "d",
                "temperature", "dimension"):
        ds.add_argument(f"--{key}", dest=f"design.{key}", type=float)
    ds.add_argument("--material", dest="design.material")

    sub.add_parser("validate", parents=[common], help="run the built-in oracle checks")
    return parser


def _overrides(args) -> dict:
    ns = vars(args)
    sc = args.subcommand
    out = {
        "output.path": ns.get("out"),
        "output.format": ns.get("format"),
        "output.timing": ns.get("timing"),
        "solver.method": ns.get("method"),
        "solver.solver": ns.get("solver"),
        "materials": ns.get("materials"),
    }
    threads = ns.get("threads")
    if threads is None and os.environ.get(THREADS_ENV):
        try:
            threads = int(os.environ[THREADS_ENV])
        except ValueError as exc:
            raise ConfigError(f"not an integer: {os.environ[THREADS_ENV]!r}", key=THREADS_ENV) from exc
    out["threads"] = threads
    if sc in ("g2", "sweep"):
        prefix = "g2" if sc == "g2" else "sweep.fixed"
        for name in ("delta", "j", "f", "u", "gamma", "n_th"):
            out[f"{prefix}.{name}"] = ns.get(name)
        out[f"{sc}.n_max"] = ns.get("n_max")
        if sc == "sweep" and ns.get("axis"):
            out["sweep.axes"] = [parse_axis_flag(a) for a in ns["axis"]]
    out.update({k: v for k, v in ns.items() if "." in k})
    return out


def _write(table: Table, cfg: RunConfig):
    try:
        emit(table, cfg.output.format, cfg.output.path, sys.stdout)
    except OSError as exc:
        print(f"error: cannot write {cfg.output.path}: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    return EXIT_OK


def _materials(cfg: RunConfig):
    return dz.load_materials(cfg.materials_path)


def run_g2(cfg: RunConfig) -> int:
    p = cfg.params
    coords = {"delta": p.delta, "j": p.j, "f": p.f, "u": p.u, "n_th": p.n_th, "gamma": p.gamma,
              "n_max": cfg.n_max}
    point = evaluate_point(p, cfg.n_max, cfg.solver, coords)
    code = _write(single_point_table(point, cfg.output.timing), cfg)
    if not point.ok:
        print(f"error: {point.failure_reason}: {point.message} (residual={point.residual})", file=sys.stderr)
        return EXIT_FAILURE
    return code


def run_sweep_cmd(cfg: RunConfig) -> int:
    try:
        result = run_sweep(cfg.sweep, threads=cfg.threads)
    except SweepError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    for p in result.points:
        if not p.ok:
            print(f"warning: {p.coords}: {p.failure_reason}: {p.message}", file=sys.stderr)
    return _write(sweep_table(result, cfg.output.timing), cfg)


def run_coupling(cfg: RunConfig) -> int:
    pair = cfg.pair
    res = coupling_strength(pair, gamma=cfg.gamma, h0=cfg.h0)
    row = {
        "j": res.j,
        "j_star": res.j_star,
        "curvature": res.curvature,
        "curvature_error": res.curvature_error,
        "energy": disk_potential_energy(pair),
        "point_charge_j": point_charge_coupling(pair.charge_q1, pair.charge_q2, pair.separation,
                                                pair.mass_m1, pair.mass_m2, pair.omega_m),
        "n_th_at_3mK": thermal_occupation(3e-3, pair.omega_m),
        "t0": characteristic_temperature(pair.omega_m),
    }
    return _write(Table(tuple(row), (row,)), cfg)


TABLE_COLUMNS = ("geometry", "material", "query", "temperature", "dimension", "p_formula",
                 "p_published", "value_formula", "printed", "rel_error")
TABLE1_COLUMNS = ("geometry", "material", "alpha_g", "p_a", "p_g_formula", "p_g_published",
                  "p_m", "p_formula", "p_published", "p_rel_error", "p_g_rel_error")


def design_table(n: int, materials) -> Table:
    """Published tables next to the formula values, one row per cell."""
    geoms = dz.reference_geometries()
    if n == 1:
        rows = []
        for g in geoms:
            mat = dz.default_material(g.kind, materials)
            b = dz.metrics(g, mat)
            pub_pg = dz.PUBLISHED_P_G[g.kind]
            rows.append({"geometry": g.kind.value, "material": mat.name, "alpha_g": b.alpha_g,
                         "p_a": b.p_a, "p_g_formula": b.p_g, "p_g_published": pub_pg, "p_m": b.p_m,
                         "p_formula": b.p, "p_published": dz.PUBLISHED_P[g.kind],
                         "p_rel_error": abs(b.p / dz.PUBLISHED_P[g.kind] - 1),
                         "p_g_rel_error": abs(b.p_g / pub_pg - 1)})
        return Table(TABLE1_COLUMNS, tuple(rows))
    temps, dims = ([3e-3, 25e-3], []) if n == 2 else ([25e-3], [1e-7])
    rows = []
    for r in dz.table_sweep(materials, geoms, temps, dims):
        row = {k: r[k] for k in ("geometry", "material", "query", "p_formula", "p_published", "printed",
                                 "rel_error")}
        if r["query"] == "temperature":
            row.update(temperature=r["temperature"], dimension=r["dimension_published_p"],
                       value_formula=r["dimension_formula"])
        else:
            row.update(dimension=r["dimension"], temperature=r["temperature_published_p"],
                       value_formula=r["temperature_formula"])
        rows.append(row)
    if n == 3:  # dimension column first, as printed
        rows.sort(key=lambda r: r["query"] != "dimension")
    return Table(TABLE_COLUMNS, tuple(rows))


def run_design(cfg: RunConfig) -> int:
    materials = _materials(cfg)
    req = cfg.design
    if req.table is not None:
        return _write(design_table(req.table, materials), cfg)
    g = req.geometry
    if req.material is None:
        mat = dz.default_material(g.kind, materials)
    elif req.material in materials:
        mat = materials[req.material]
    else:
        raise ConfigError(f"unknown material {req.material!r}", key="design.material")
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", dz.ApproximationWarning)
        b = dz.metrics(g, mat)
        f = dz.natural_frequency(g, mat)
    for w in caught[:1]:
        print(f"warning: {w.message}", file=sys.stderr)
    row = {"geometry": g.kind.value, "material": mat.name, "alpha_g": b.alpha_g, "p_a": b.p_a,
           "p_g": b.p_g, "p_m": b.p_m, "p": b.p, "p_published": dz.PUBLISHED_P[g.kind],
           "frequency": f, "temperature_at_frequency": dz.temperature_at_frequency(f),
           "temperature": None, "dimension": None, "below_refrigeration_limit": None,
           "above_antibunching_limit": None, "warnings": "; ".join(g.approximation_violations()) or None}
    if req.temperature is not None or req.dimension is not None:
        t = dz.tradeoff(b.p, temperature=req.temperature, dimension=req.dimension, frequency=f)
        row.update(temperature=t.temperature, dimension=t.dimension,
                   below_refrigeration_limit=t.below_refrigeration_limit,
                   above_antibunching_limit=t.above_antibunching_limit)
    return _write(Table(tuple(row), (row,)), cfg)


# ---------------------------------------------------------------------------
# validate

def _check_thermal():
    basis = FockBasis(4, 4)
    p = RwaParams(delta=0.3, j=1.0, f=0.0, u=0.0, n_th=0.2)
    L = build_liouvillian(build_rwa_hamiltonian(p, basis), p, basis)
    rho = thermal_state(basis, 0.2)
    defect = np.abs(L.matvec(vec(rho.data))).max() / L.norm_max
    dist = trace_distance(steady_state(L), rho)
    return defect < 1e-12 and dist < 1e-10, f"|L rho_th| = {defect:.2e}, distance {dist:.2e}"


def _check_coherent():
    basis = FockBasis(10, 10)
    p = RwaParams(delta=0.5, j=2.0, f=0.5, u=0.0)
    rho = steady_state(build_liouvillian(build_rwa_hamiltonian(p, basis), p, basis))
    g2 = g2_zero(rho)
    return abs(g2 - 1) < 1e-6, f"g2 = {g2:.12f}"


def _check_fock():
    g2 = g2_zero(fock_state(FockBasis(3, 3), 1, 0))
    return g2 == 0.0, f"g2 = {g2}"


def _check_oracles():
    basis = FockBasis(4, 4)
    p = RwaParams(delta=0.29, j=3.0, f=1.0, u=0.5)
    L = build_liouvillian(build_rwa_hamiltonian(p, basis), p, basis)
    d = trace_distance(steady_state(L, method="linear"), steady_state(L, method="eigen"))
    return d < 1e-6, f"linear vs eigen distance {d:.2e}"


def _check_far_field():
    pair = DiskPair(1e-6, 1e-16, -1e-16, 100e-6, 1e-18, 1e-18, 2 * math.pi * 1e9)
    ratio = disk_potential_energy(pair) / (CONSTANTS.k_e * pair.charge_q1 * pair.charge_q2 / pair.separation)
    return abs(ratio - 1) < 1e-3, f"U/U_point = {ratio:.9f}"


def _check_point_coupling():
    pair = DiskPair(1e-6, 1e-16, -1e-16, 50e-6, 1e-18, 1e-18, 2 * math.pi * 1e9)
    j = coupling_strength(pair).j
    jp = point_charge_coupling(1e-16, -1e-16, 50e-6, 1e-18, 1e-18, 2 * math.pi * 1e9)
    ratio = abs(j / jp)
    return abs(ratio - 1) < 1e-2, f"|J/J_point| = {ratio:.6f}"


def _check_elliptic():
    err = max(abs(ellipk(0.0) / (math.pi / 2) - 1), abs(ellipe(0.0) / (math.pi / 2) - 1),
              abs(ellipk(0.5) / 1.8540746773013719 - 1), abs(ellipe(0.5) / 1.3506438810476755 - 1))
    return err < 1e-12, f"max relative error {err:.1e}"


def _check_occupation():
    omega = 2 * math.pi * 1e9
    t0 = characteristic_temperature(omega)
    n = thermal_occupation(t0, omega)
    return abs(n - 1 / math.expm1(1)) < 1e-12, f"n_th(T0) = {n:.9f}"


def _check_tables():
    materials = dz.load_materials()
    worst_p = 0.0
    for g in dz.reference_geometries():
        if g.kind in (dz.Geometry.CIRCULAR_MEMBRANE, dz.Geometry.I_BEAM):
            continue
        p = dz.metrics(g, dz.default_material(g.kind, materials)).p
        worst_p = max(worst_p, abs(p / dz.PUBLISHED_P[g.kind] - 1))
    rows = dz.table_sweep(materials, dz.reference_geometries(), [3e-3, 25e-3], [1e-7])
    worst_t = max(r["rel_error"] for r in rows if r["rel_error"] is not None)
    return worst_p < 5e-3 and worst_t < 1e-2, f"beam P error {worst_p:.2e}, table cell error {worst_t:.2e}"


VALIDATION_CHECKS = (
    ("thermal-fixed-point", _check_thermal),
    ("coherent-g2", _check_coherent),
    ("fock-g2", _check_fock),
    ("steady-state-oracles", _check_oracles),
    ("coulomb-far-field", _check_far_field),
    ("coupling-point-charge", _check_point_coupling),
    ("elliptic-values", _check_elliptic),
    ("thermal-occupation", _check_occupation),
    ("table-regression", _check_tables),
)


def run_validate(cfg: RunConfig) -> int:
    failed = 0
    for name, check in VALIDATION_CHECKS:
        try:
            ok, detail = check()
        except Exception as exc:  # noqa: BLE001 - any crash is a failed check
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        failed += not ok
        print(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
    print(f"{len(VALIDATION_CHECKS) - failed}/{len(VALIDATION_CHECKS)} checks passed")
    return EXIT_OK if failed == 0 else EXIT_FAILURE


RUNNERS = {"g2": run_g2, "sweep": run_sweep_cmd, "coupling": run_coupling, "design": run_design,
           "validate": run_validate}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        doc = load_document(args.config) if args.config else {}
        cfg = parse_config(args.subcommand, doc, _overrides(args))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        return RUNNERS[cfg.subcommand](cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except PhononBlockError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
