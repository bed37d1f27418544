"""The ten acceptance criteria, one test each, at their stated tolerances."""
import math
import time
import warnings

import numpy as np
import pytest

from conftest import OPERATING_POINT, liouvillian, record_criterion
from phononblock import design as dz
from phononblock.constants import CONSTANTS
from phononblock.coulomb import (
    DiskPair,
    characteristic_temperature,
    coupling_strength,
    disk_potential_energy,
    point_charge_coupling,
    thermal_occupation,
)
from phononblock.elliptic import ellipe, ellipk
from phononblock.fock import FockBasis
from phononblock.lindblad import evolve, fock_state, steady_state, trace_distance
from phononblock.model import RwaParams
from phononblock.observables import g2_zero, mean_phonons
from phononblock.sweep import Axis, SweepSpec, find_minimum, run_sweep
from test_coulomb import disk_oracle, quad_e, quad_k

MATERIALS = dz.load_materials()
G = dz.Geometry

# Self-regression of the 31-point log-spaced J sweep at the operating point,
# frozen from the first validated run (linear solve, n_max = 10).
J_SWEEP_G2 = [
    0.6493840256, 0.6194315884, 0.5873942285, 0.5522422293, 0.5162549546, 0.478077785,
    0.4378227707, 0.3956600829, 0.3518387536, 0.3067109703, 0.2607608144, 0.2146391323,
    0.16920439, 0.1256820928, 0.08525900726, 0.04992152319, 0.02198305209, 0.004352751781,
    0.0006682116435, 0.0154559253, 0.05432524563, 0.1242058047, 0.2336322691, 0.4054556368,
    0.6257541125, 0.9249825383, 1.322283588, 1.841021762, 2.509665145, 3.362849029, 4.442667979,
]


def _formula_breakdowns():
    return {g.kind: dz.metrics(g, dz.default_material(g.kind, MATERIALS)) for g in dz.reference_geometries()}


def test_criterion_01_beam_products():
    b = _formula_breakdowns()
    expected = {G.HOLLOW_RECT_BEAM: 4.72e-10, G.HOLLOW_CIRC_BEAM: 4.06e-10,
                G.SOLID_RECT_BEAM: 3.66e-10, G.SOLID_CIRC_BEAM: 3.17e-10}
    errors = {k.value: abs(b[k].p / v - 1) for k, v in expected.items()}
    worst = max(errors.values())
    assert record_criterion(1, "beam performance products within 0.5%", worst < 5e-3, f"worst {worst:.2e}")


def test_criterion_02_section_factors():
    b = _formula_breakdowns()
    expected = {G.HOLLOW_RECT_BEAM: 0.371, G.HOLLOW_CIRC_BEAM: 0.320,
                G.SOLID_RECT_BEAM: 0.288, G.SOLID_CIRC_BEAM: 0.250}
    worst = max(abs(b[k].p_g / v - 1) for k, v in expected.items())
    # The two rows that do not follow from the printed formulas stay visibly different.
    membrane_ratio = b[G.CIRCULAR_MEMBRANE].p / dz.PUBLISHED_P[G.CIRCULAR_MEMBRANE]
    ibeam_pg = b[G.I_BEAM].p_g
    ok = (worst < 5e-3 and abs(membrane_ratio - 1.226) < 1e-3
          and abs(ibeam_pg - 0.2996) < 1e-4 and dz.PUBLISHED_P_G[G.I_BEAM] == 0.371)
    assert record_criterion(2, "section factors within 0.5%, membrane and I-beam gaps asserted", ok,
                            f"worst {worst:.2e}, membrane P ratio {membrane_ratio:.4f}, I-beam P_g {ibeam_pg:.4f}")


def test_criterion_03_temperature_size_tables():
    rows = dz.table_sweep(MATERIALS, dz.reference_geometries(), [3e-3, 25e-3], [1e-7])
    printed = [r for r in rows if r["printed"] is not None]
    worst = max(r["rel_error"] for r in printed)
    cells = {(r["geometry"], r["temperature"] or r["dimension"]): r for r in printed}
    spot = [
        cells[("circular_membrane", 3e-3)]["dimension_published_p"] / 315e-9,
        cells[("hollow_rect_beam", 3e-3)]["dimension_published_p"] / 157e-9,
        cells[("solid_circ_beam", 25e-3)]["dimension_published_p"] / 12.7e-9,
        cells[("circular_membrane", 1e-7)]["temperature_published_p"] / 9.47e-3,
        cells[("solid_circ_beam", 1e-7)]["temperature_published_p"] / 3.17e-3,
    ]
    ok = len(printed) == 18 and worst < 1e-2 and all(abs(s - 1) < 1e-2 for s in spot)
    assert record_criterion(3, "temperature-size cells within 1%", ok, f"{len(printed)} cells, worst {worst:.2e}")


def test_criterion_04_antibunching_operating_point(operating_steady_state):
    g2_op = g2_zero(operating_steady_state)
    spec = SweepSpec((Axis.log("j", 50.0, 200.0, 31),), OPERATING_POINT)
    start = time.perf_counter()
    result = run_sweep(spec)
    elapsed = time.perf_counter() - start
    minimum = find_minimum(result, log_scale=True)
    g2 = result.values()
    regression = float(np.max(np.abs(g2 / np.array(J_SWEEP_G2) - 1)))
    ok = (math.isfinite(g2_op) and result.n_failed == 0 and not minimum.at_boundary
          and minimum.raw_value < 1 and regression < 1e-6 and elapsed < 60
          and 109.7 < minimum.refined_location < 120.3)
    assert record_criterion(
        4, "finite g2 at J*=110, interior minimum with g2 < 1 over J* in [50, 200]", ok,
        f"g2(110) = {g2_op:.4e}, min {minimum.raw_value:.3e} at J*={minimum.raw_location:.2f} "
        f"(refined J*={minimum.refined_location:.2f}), regression {regression:.1e}, {elapsed:.1f} s")


def test_criterion_05_steady_state_oracles(operating_steady_state, operating_eigen_state,
                                          operating_evolved_state):
    # 3x3 grid around the operating point on a 6x6-level basis, plus the full basis at J*=110.
    worst = 0.0
    for j in (80.0, 110.0, 140.0):
        for delta in (0.1, 0.29, 0.5):
            L, basis = liouvillian(OPERATING_POINT.replace(j=j, delta=delta), 5)
            lin = steady_state(L)
            eig = steady_state(L, method="eigen")
            rk = evolve(fock_state(basis, 0, 0), L, 30.0, 2.5 / L.spectral_bound())
            worst = max(worst, trace_distance(lin, eig), trace_distance(lin, rk), trace_distance(eig, rk))
    full = max(trace_distance(operating_steady_state, operating_eigen_state),
               trace_distance(operating_steady_state, operating_evolved_state),
               trace_distance(operating_eigen_state, operating_evolved_state))
    ok = worst < 1e-6 and full < 1e-6
    assert record_criterion(5, "linear, eigen and RK steady states agree to 1e-6", ok,
                            f"3x3 grid worst {worst:.1e}, full basis {full:.1e}")


def test_criterion_06_analytic_limits():
    L, _ = liouvillian(RwaParams(0.29, 2.0, 0.5, 0.0), 10)
    g2_coh = g2_zero(steady_state(L))
    # The truncated geometric tail must be negligible, so mode 1 keeps 41 levels.
    L, _ = liouvillian(RwaParams(0.29, 1.0, 0.0, 0.0, n_th=0.5), (40, 1))
    thermal = steady_state(L)
    g2_th, n_th = g2_zero(thermal), mean_phonons(thermal)
    g2_fock = g2_zero(fock_state(FockBasis(10, 10), 1, 0))
    ok = abs(g2_coh - 1) < 1e-6 and abs(g2_th - 2) < 1e-6 and abs(n_th - 0.5) < 1e-8 and g2_fock == 0.0
    assert record_criterion(6, "coherent g2 = 1, thermal g2 = 2 and <n> = n_th, Fock g2 = 0", ok,
                            f"coherent {g2_coh:.10f}, thermal {g2_th:.10f}, <n> {n_th:.10f}, Fock {g2_fock}")


def test_criterion_07_structure_preservation(operating_point, operating_steady_state):
    _, L, basis = operating_point
    trace_defect = L.trace_defect() / L.norm_max
    rng = np.random.default_rng(2024)
    herm_err = 0.0
    for _ in range(20):
        x = rng.normal(size=(basis.dim, basis.dim)) + 1j * rng.normal(size=(basis.dim, basis.dim))
        out = L.apply(x + x.conj().T)
        herm_err = max(herm_err, float(np.abs(out - out.conj().T).max() / np.abs(out).max()))
    min_eig = operating_steady_state.min_eigenvalue()
    for j in (50.0, 80.0, 140.0, 200.0):
        L_j, _ = liouvillian(OPERATING_POINT.replace(j=j))
        min_eig = min(min_eig, steady_state(L_j).min_eigenvalue())
    L12, _ = liouvillian(OPERATING_POINT, 12)
    rho12 = steady_state(L12)
    dg2 = abs(g2_zero(rho12) / g2_zero(operating_steady_state) - 1)
    dn1 = abs(mean_phonons(rho12) / mean_phonons(operating_steady_state) - 1)
    ok = trace_defect <= 1e-10 and herm_err < 1e-12 and min_eig >= -1e-8 and dg2 < 1e-3 and dn1 < 1e-3
    assert record_criterion(7, "trace, hermiticity, positivity, truncation 10 -> 12", ok,
                            f"trace defect {trace_defect:.1e}, hermiticity {herm_err:.1e}, "
                            f"min eig {min_eig:.1e}, dg2 {dg2:.1e}, dn1 {dn1:.1e}")


def test_criterion_08_coulomb_limits():
    radius = 1e-6
    pair = DiskPair(radius, 1e-16, -1e-16, 100 * radius, 1e-18, 1e-18, 2 * math.pi * 1e9)
    point = CONSTANTS.k_e * pair.charge_q1 * pair.charge_q2 / pair.separation
    closed = disk_potential_energy(pair)
    oracle = CONSTANTS.k_e * pair.charge_q1 * pair.charge_q2 * disk_oracle(100.0) / radius
    far = max(abs(closed / point - 1), abs(oracle / point - 1))
    agree = abs(closed / oracle - 1)
    near = DiskPair(radius, 1e-16, -1e-16, 50 * radius, 1e-18, 1e-18, 2 * math.pi * 1e9)
    j_ratio = abs(coupling_strength(near).j / point_charge_coupling(
        1e-16, -1e-16, 50 * radius, 1e-18, 1e-18, 2 * math.pi * 1e9))
    ell = max(max(abs(ellipk(m) / quad_k(m) - 1), abs(ellipe(m) / quad_e(m) - 1))
              for m in (-1e6, -1e3, -1.0, 0.0, 0.5))
    ok = far < 1e-3 and agree < 1e-10 and abs(j_ratio - 1) < 1e-2 and ell < 1e-8
    assert record_criterion(8, "far-field energy, point-charge coupling, elliptic integrals", ok,
                            f"U/U_point-1 {far:.1e}, vs area integral {agree:.1e}, "
                            f"|J/J_point| {j_ratio:.5f}, elliptic {ell:.1e}")


def test_criterion_09_thermal_occupation():
    omega = 2 * math.pi * 1e9
    t0 = characteristic_temperature(omega)
    low = thermal_occupation(0.04 * t0, omega)
    unit = thermal_occupation(t0, omega)
    ok = abs(low / 1.389e-11 - 1) < 1e-2 and abs(unit - 0.5819767) < 1e-6
    assert record_criterion(9, "n_th(0.04 T0) and n_th(T0)", ok, f"{low:.4e}, {unit:.7f}")


def test_criterion_10_frequency_identity():
    rng = np.random.default_rng(10)
    worst = 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", dz.ApproximationWarning)
        for kind in dz.Geometry:
            mat = dz.default_material(kind, MATERIALS)
            for _ in range(100):
                z, length = 10 ** rng.uniform(-8, -6), 10 ** rng.uniform(-6, -4)
                r, c, d = rng.uniform(0, 0.95, size=3)
                if kind is G.CIRCULAR_MEMBRANE:
                    g = dz.GeometryConfig(kind, thickness=z, radius=length)
                elif kind.is_circular_section:
                    g = dz.GeometryConfig(kind, diameter=z, length=length, r=r, c=c, d=d)
                else:
                    g = dz.GeometryConfig(kind, depth=z, length=length, r=r, c=c, d=d)
                b = dz.metrics(g, mat)
                f = dz.natural_frequency(g, mat)
                worst = max(worst, abs(f * g.smallest_dimension / (b.alpha_g * b.p_a * b.p_g * b.p_m) - 1))
    membrane = dz.GeometryConfig(G.CIRCULAR_MEMBRANE, thickness=1e-7, radius=1e-6)
    f = dz.natural_frequency(membrane, MATERIALS["graphene"])
    t_sys = dz.temperature_at_frequency(f)
    ok = worst < 1e-12 and abs(f / 3.024e9 - 1) < 1e-3 and abs(t_sys / 5.81e-3 - 1) < 1e-3
    assert record_criterion(10, "f Z identity on 6 x 100 random designs, membrane at 3.024 GHz", ok,
                            f"identity error {worst:.1e}, f = {f / 1e9:.4f} GHz, T_sys = {t_sys * 1e3:.3f} mK")
