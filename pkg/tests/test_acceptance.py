"""End-to-end acceptance criteria A1-A7.

Each test prints one ``PASS``/``FAIL`` line with its measured figures, then
asserts.  Runtimes are part of each criterion.
"""

import time
from dataclasses import replace

import numpy as np
import pytest

from photofridge import (DeviceSpec, Grid, build_generator, closed_form_heat, cooldown_integrate,
                         current_report, estimate_zeta, find_no_charging, intersection_test,
                         model_heat_law, power_law, solve_steady)

from conftest import ORACLE_GRID, equilibrium_spec, gibbs, log_uniform, oracle_spec, random_spec

SEED = 20121114


@pytest.fixture
def report(capsys):
    def emit(name, ok, elapsed, limit, detail):
        ok = bool(ok) and elapsed < limit
        with capsys.disabled():
            print(f"\n{name}: {'PASS' if ok else 'FAIL'}  ({elapsed:.2f} s of {limit:g} s)  {detail}")
        return ok
    return emit


def test_a1_closed_form_oracle(report):
    t0 = time.perf_counter()
    worst = 0.0
    for point in ORACLE_GRID:
        r = current_report(oracle_spec(*point))
        ref_r, ref_l = closed_form_heat(*point)
        worst = max(worst, abs(r.q_r / ref_r - 1), abs(r.q_l / ref_l - 1))
    spot = current_report(oracle_spec(1, 1, 1, 1, 2)).q_r
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-9 and abs(spot - (-0.1441823)) <= 1e-6
    assert report("A1 closed-form oracle", ok, elapsed, 1.0,
                  f"{len(ORACLE_GRID)} points, worst rel err {worst:.2e}, spot q_r {spot:.10f}")


def test_a2_no_refrigeration_with_quench(report):
    t0 = time.perf_counter()
    heated, charge = 0, 0.0
    for point in ORACLE_GRID:
        r = current_report(oracle_spec(*point))
        heated += r.q_r < 0 and r.q_l < 0
        charge = max(charge, abs(r.charge_left) / point[1], abs(r.charge_right) / point[1])
    elapsed = time.perf_counter() - t0
    ok = heated == len(ORACLE_GRID) and charge < 1e-10
    assert report("A2 sign claim", ok, elapsed, 1.0,
                  f"{heated}/{len(ORACLE_GRID)} points with q_r, q_l < 0, "
                  f"max charge/gamma {charge:.1e}")


def a3_grid(n):
    rng = np.random.default_rng(SEED)
    specs = []
    for _ in range(n):
        k = log_uniform(rng, 0.01, 10)
        specs.append(DeviceSpec.symmetric(
            log_uniform(rng, 0.1, 3), log_uniform(rng, 0.1, 3), gamma=log_uniform(rng, 0.1, 10),
            T_l=log_uniform(rng, 0.3, 10), T_r=1.0, quench_mode="equal", k=k,
            photon_override=(log_uniform(rng, 0.1, 10),) * 2))
    return specs


def test_a3_manifolds_do_not_intersect(report):
    specs = a3_grid(10_000)
    t0 = time.perf_counter()
    v = intersection_test(specs, scan_T_r=True)
    elapsed = time.perf_counter() - t0
    assert report("A3 manifold non-intersection", v.empty, elapsed, 30.0,
                  f"verdict {v.label}, {v.evaluated} neutral points from {len(specs)} devices, "
                  f"{v.unresolved} without a resolvable root")


def test_a4_quench_free_device_refrigerates(report):
    # asymmetric levels; photon source at T_s >= 100 eps
    base = DeviceSpec(eps1=-2.178, eps2=1.6, eps_g=0.965, gamma=1, T_l=1.509, T_r=1.0,
                      T_s=1962, gamma_s=0.01)
    grid = Grid(base, {"eps_g": [0.8, 0.965, 1.1], "T_l": [1.3, 1.509, 1.8],
                       "gamma_s": [0.003, 0.01, 0.03]})
    t0 = time.perf_counter()
    v = intersection_test(grid, scan_T_r=True)
    elapsed = time.perf_counter() - t0
    cold = [w for w in v.witnesses if w.spec.T_l > w.spec.T_r and w.report.q_r > 0]
    hot_source = all(s.T_s >= 100 * s.half_gap for s in grid.specs())
    ok = not v.empty and cold and hot_source
    best = max((w.report.q_r for w in cold), default=float("nan"))
    assert report("A4 quench-free refrigeration", ok, elapsed, 30.0,
                  f"verdict {v.label}, {len(cold)} neutral cooling points with T_l > T_r, "
                  f"best q_r {best:.3e}")


def test_a5_zero_exponent(report):
    t0 = time.perf_counter()
    c, g, T0 = 0.1, 1.0, 1.0
    fit = estimate_zeta(power_law(c, 1), g, np.geomspace(1e-3, 1e-1, 16))
    traj = cooldown_integrate(power_law(c, 1), T0, g)
    target = g * T0 / c
    device = DeviceSpec(eps1=-1, eps2=1, eps_g=1, gamma=1, T_l=0.2, T_r=0.1, T_s=100,
                        gamma_s=1)
    model = estimate_zeta(model_heat_law(device, eps_scale=1.0), g,
                          np.geomspace(1e-3, 1e-1, 16))
    elapsed = time.perf_counter() - t0
    ok = (abs(fit.zeta) <= 1e-9 and traj.freeze_time is not None
          and abs(traj.freeze_time - target) <= 1e-6 * target and abs(model.zeta) <= 0.15)
    assert report("A5 zeta = 0 audit", ok, elapsed, 10.0,
                  f"synthetic zeta {fit.zeta:.1e}, freeze_time {traj.freeze_time!r} "
                  f"(expected {target:g}), quench-free model zeta {model.zeta:.2e}")


def test_a6_thermodynamic_properties(report):
    rng = np.random.default_rng(SEED)
    n = 10_000
    t0 = time.perf_counter()
    worst = dict(columns=0.0, norm=0.0, negative=0.0, energy=0.0, sigma=0.0)
    for _ in range(n):
        s = random_spec(rng)
        gen = build_generator(s)
        m = gen.m
        worst["columns"] = max(worst["columns"],
                               np.max(np.abs(m.sum(axis=0)) / np.max(np.abs(m), axis=0)))
        ss = solve_steady(gen)
        worst["norm"] = max(worst["norm"], abs(ss.p.sum() - 1))
        worst["negative"] = min(worst["negative"], ss.p.min())
        r = current_report(s, ss)
        scale = max(abs(r.q_l), abs(r.q_r), abs(r.q_s), s.gamma * s.delta_r)
        worst["energy"] = max(worst["energy"], abs(r.q_l + r.q_r + r.q_s + r.q_q) / scale)
        worst["sigma"] = min(worst["sigma"], r.sigma)
    eq_current, eq_gibbs = 0.0, 0.0
    for _ in range(n):
        s = equilibrium_spec(rng)
        ss = solve_steady(build_generator(s))
        r = current_report(s, ss)
        eq_current = max(eq_current, abs(r.j_ld), abs(r.j_rd), abs(r.j_lu), abs(r.j_ru),
                         abs(r.q_l), abs(r.q_r), abs(r.q_s))
        eq_gibbs = max(eq_gibbs, np.max(np.abs(ss.p - gibbs(s, s.T_l))))
    elapsed = time.perf_counter() - t0
    ok = (worst["columns"] <= 1e-13 and worst["norm"] <= 1e-12 and worst["negative"] >= 0
          and worst["energy"] <= 1e-10 and worst["sigma"] >= -1e-12
          and eq_current <= 1e-12 and eq_gibbs <= 1e-11)
    assert report("A6 thermodynamic properties", ok, elapsed, 60.0,
                  f"{n} random + {n} equilibrium specs; column sum {worst['columns']:.1e}, "
                  f"energy {worst['energy']:.1e}, min sigma {worst['sigma']:.1e}, "
                  f"equilibrium current {eq_current:.1e}, Gibbs error {eq_gibbs:.1e}")


def test_a7_no_gap_means_equal_temperatures(report):
    t0 = time.perf_counter()
    errors = []
    for T_l in (0.5, 1.0, 2.0, 5.0):
        s = DeviceSpec.symmetric(1.0, 0.0, gamma=1, T_l=T_l, T_r=1.0, quench_mode="equal",
                                 k=1, photon_override=(1.0, 1.0))
        root = find_no_charging(replace(s, T_r=0.1 * T_l), bracket=(0.1 * T_l, 10 * T_l))
        errors.append(abs(root.value - T_l))
    elapsed = time.perf_counter() - t0
    assert report("A7 eps_g = 0 gives T_r = T_l", max(errors) <= 1e-10, elapsed, 1.0,
                  f"max |T_r - T_l| {max(errors):.1e} over T_l in 0.5, 1, 2, 5")
