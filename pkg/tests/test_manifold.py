import math
from dataclasses import replace

import numpy as np
import pytest

from photofridge import (BracketError, DeviceSpec, DomainError, Grid, current_report,
                         find_no_charging, intersection_test, no_charging_temperature, sweep)
from photofridge.manifold import neutral_T_r, set_parameter

from conftest import ORACLE_GRID, oracle_spec

# quench-free device with asymmetric levels that refrigerates its right lead at a
# charge-neutral temperature near T_r = 1.0646
COOLING_DEVICE = DeviceSpec(eps1=-2.178, eps2=1.6, eps_g=0.965, gamma=1, T_l=1.509, T_r=1,
                            T_s=1962, gamma_s=0.01)


def oracle_grid():
    return [oracle_spec(*point) for point in ORACLE_GRID]


class TestNoChargingTemperature:
    def test_no_gap_keeps_leads_equal(self):
        assert no_charging_temperature(1.3, 0, 0.7) == 0.7

    def test_reference_point(self):
        assert no_charging_temperature(1, 1, 2) == 1.0

    def test_wide_gap_limit(self):
        assert no_charging_temperature(1, 1e12, 1) < 1e-11

    @pytest.mark.parametrize("args", [(0, 0, 1), (-1, 1, 1), (1, 1, 0)])
    def test_domain(self, args):
        with pytest.raises(DomainError):
            no_charging_temperature(*args)


class TestFindNoCharging:
    def test_reference_point(self, a1_spec):
        root = find_no_charging(replace(a1_spec, T_r=0.3), bracket=(0.1, 10))
        assert root.value == pytest.approx(1.0, abs=1e-10)
        assert abs(root.charge_right) <= 1e-12
        assert root.simultaneous and abs(root.charge_left) <= 1e-12
        assert root.iterations <= 200

    def test_no_gap(self):
        s = DeviceSpec.symmetric(1, 0, gamma=1, T_l=2, T_r=1, quench_mode="equal", k=1,
                                 photon_override=(1, 1))
        assert find_no_charging(s).value == pytest.approx(2.0, abs=1e-10)

    def test_agrees_with_analytic_manifold(self):
        for k, g, e, eg, tl in ORACLE_GRID:
            s = oracle_spec(k, g, e, eg, tl)
            root = find_no_charging(s, bracket=(1e-2 * tl, tl))
            assert root.value == pytest.approx(no_charging_temperature(e, eg, tl), rel=1e-9)

    def test_thermal_photons(self):
        # k_up != k_down: a root still exists; the left lead then balances too
        s = DeviceSpec.symmetric(1, 1, gamma=1, T_l=2, T_r=1, T_s=5, gamma_s=1,
                                 quench_mode="bose")
        root = find_no_charging(s, bracket=(0.05, 10))
        assert 0.05 < root.value < 10
        assert abs(root.charge_right) <= 1e-12
        assert abs(root.charge_left + root.charge_right) <= 1e-15

    def test_other_free_parameter(self, a1_spec):
        root = find_no_charging(a1_spec, free="T_l", bracket=(1, 5))
        assert root.value == pytest.approx(2.0, abs=1e-10)

    def test_bracket_without_sign_change(self, a1_spec):
        with pytest.raises(BracketError):
            find_no_charging(a1_spec, bracket=(2, 10))


class TestGrid:
    def test_order_is_last_axis_fastest(self, a1_spec):
        specs = Grid(a1_spec, {"T_l": [1, 2], "k": [0.1, 0.2, 0.3]}).specs()
        assert [(s.T_l, s.k) for s in specs] == [(1, 0.1), (1, 0.2), (1, 0.3),
                                                 (2, 0.1), (2, 0.2), (2, 0.3)]

    def test_tied_temperature(self, a1_spec):
        specs = Grid(a1_spec, {"eps_g": [0, 1, 3]}, tie_T_r=True).specs()
        assert [s.T_r for s in specs] == [2.0, 1.0, 0.5]

    def test_unknown_axis(self, a1_spec):
        with pytest.raises(DomainError):
            Grid(a1_spec, {"colour": [1]})

    def test_set_parameter(self, a1_spec):
        s = set_parameter(set_parameter(a1_spec, "eps", 2.5), "photon", 0.3)
        assert (s.eps1, s.eps2, s.photon_override) == (-2.5, 2.5, (0.3, 0.3))


class TestSweep:
    def test_equilibrium_point(self):
        s = DeviceSpec.symmetric(1, 0.5, gamma=1, T_l=1, T_r=1, T_s=1, gamma_s=1)
        (pt,) = sweep([s]).points
        assert (pt.is_cooling_right, pt.is_charge_neutral) == (False, True)

    def test_oracle_grid_is_neutral_and_heated(self):
        res = sweep(oracle_grid())
        assert len(res.points) == 216
        assert res.counts == {(False, False): 0, (False, True): 216,
                              (True, False): 0, (True, True): 0}

    def test_empty_grid(self, a1_spec):
        res = sweep(Grid(a1_spec, {"T_r": []}))
        assert res.points == [] and sum(res.counts.values()) == 0

    def test_original_model_cools(self):
        base = DeviceSpec.symmetric(1, 1, gamma=1, T_l=1, T_r=0.5, T_s=200, gamma_s=1)
        res = sweep(Grid(base, {"T_r": np.linspace(0.1, 0.9, 9)}))
        assert any(p.is_cooling_right for p in res.points)

    def test_matches_scalar_pipeline(self, rng):
        from conftest import random_spec
        specs = [random_spec(rng) for _ in range(50)]
        for s, pt in zip(specs, sweep(specs).points):
            ref = current_report(s)
            assert pt.spec is s
            assert pt.report.q_r == pytest.approx(ref.q_r, rel=1e-9, abs=1e-13)
            assert pt.report.charge_right == pytest.approx(ref.charge_right, abs=1e-12)

    def test_order_does_not_depend_on_workers(self, a1_spec):
        g = Grid(a1_spec, {"T_r": np.geomspace(0.1, 3, 5000)})
        one, many = sweep(g), sweep(g, jobs=4)
        assert [p.report.q_r for p in one.points] == [p.report.q_r for p in many.points]

    def test_failures_are_recorded(self):
        good = DeviceSpec.symmetric(1, 0.5, gamma=1, T_l=1, T_r=1)
        bad = DeviceSpec.symmetric(1, 0.5, gamma=1, T_l=0, T_r=0)
        res = sweep([good, bad, good])
        assert [p.error is None for p in res.points] == [True, False, True]
        assert "MultipleSteadyStates" in res.failures[0].error
        assert res.points[1].is_cooling_right is False

    def test_reflag_is_deterministic(self, a1_spec):
        res = sweep(oracle_grid())
        again = res.reflag()
        assert again.counts == res.counts
        assert res.reflag(tol_q=0.0).counts[(False, True)] == 0


class TestIntersection:
    def test_oracle_grid_is_empty(self):
        v = intersection_test(oracle_grid())
        assert v.empty and v.label == "empty" and v.evaluated == 216

    def test_empty_grid(self, a1_spec):
        assert intersection_test(Grid(a1_spec, {"k": []})).empty

    def test_quench_free_device_has_witness(self):
        v = intersection_test([COOLING_DEVICE], scan_T_r=True)
        assert not v.empty
        (w,) = v.witnesses
        assert w.spec.T_r == pytest.approx(1.0646, abs=1e-3)
        assert w.report.q_r > 0 and w.spec.T_r < w.spec.T_l

    def test_symmetric_quench_free_device_has_no_witness(self):
        # equal affinities in both channels: neutrality forces zero heat flow
        s = DeviceSpec.symmetric(1, 1, gamma=1, T_l=2, T_r=1, T_s=300, gamma_s=1)
        assert intersection_test([s], scan_T_r=True).empty

    def test_infinite_cooling_threshold(self):
        assert intersection_test([COOLING_DEVICE], tol_cool=math.inf, scan_T_r=True).empty

    def test_monotone_in_tolerances(self, rng):
        from conftest import log_uniform
        specs = [DeviceSpec(eps1=-log_uniform(rng, 0.3, 3), eps2=log_uniform(rng, 0.3, 3),
                            eps_g=log_uniform(rng, 0.3, 2), gamma=1, T_l=log_uniform(rng, 0.5, 3),
                            T_r=1, T_s=log_uniform(rng, 50, 3000),
                            gamma_s=log_uniform(rng, 0.01, 1))
                 for _ in range(60)]
        specs = [replace(s, T_r=t) for s, ts in zip(specs, neutral_T_r(specs)) for t in ts]
        specs += [replace(s, T_r=s.T_r * 1.001) for s in specs]
        witnesses = []
        for tol_q, tol_cool in [(1e-14, 1e-3), (1e-10, 1e-6), (1e-6, 1e-9), (1e-3, 0.0)]:
            v = intersection_test(specs, tol_q=tol_q, tol_cool=tol_cool)
            witnesses.append({id(w.spec) for w in v.witnesses})
        for looser, tighter in zip(witnesses[1:], witnesses[:-1]):
            assert tighter <= looser
        assert witnesses[-1]

    def test_neutral_scan_finds_analytic_root(self, a1_spec):
        (roots,) = neutral_T_r([replace(a1_spec, T_r=5.0)])
        assert roots == [pytest.approx(1.0, rel=1e-12)]
