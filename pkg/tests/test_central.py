import numpy as np
import pytest
from hypothesis import given, settings
from scipy.optimize import linprog

from energyshare.central import OptimizerConfig, golden_section, solve_central_es, solve_central_pa
from energyshare.equilibrium import social_cost_es, social_cost_pa
from energyshare.model import (StrategyProfile, expected_demands, partition_types,
                               total_day_demand, validate_scenario, with_inv_risks,
                               with_res_capacity)

from conftest import scenarios, two_type


def lp_oracle(s):
    """PA social cost as an LP in (p, grid import)."""
    n, m = s.n_consumers, s.n_types
    c, g, b = s.tariffs.c_res, s.tariffs.gamma, s.tariffs.beta
    w = n * s.shares * s.day_demands
    # cost = c*D + (g-1)*c*grid + b*c*night, night = const - sum(w*eps*p)
    obj = np.concatenate([c * w - b * c * w * s.inv_risks, [(g - 1) * c]])
    const = b * c * float(np.dot(w, s.inv_risks))
    a_ub = np.concatenate([w, [-1.0]])[None, :]
    out = linprog(obj, A_ub=a_ub, b_ub=[s.res_capacity],
                  bounds=[(0, 1)] * m + [(0, None)], method="highs")
    assert out.status == 0
    return out.fun + const


def test_two_type_central(two_type_scenario):
    sol = solve_central_pa(two_type_scenario)
    assert sol.profile.p_day == pytest.approx((0.0, 16250 / 30000), abs=1e-15)
    assert sol.profile.p_day[1] == pytest.approx(0.541667, abs=1e-6)
    assert sol.cost.total == pytest.approx(lp_oracle(two_type_scenario), rel=1e-9)
    assert sol.cost.total == pytest.approx(1.1386e7, rel=1e-4)
    assert sol.dual_threshold == pytest.approx(2 * 100 * two_type_scenario.inv_risks[1])


def test_case1_central():
    s = with_res_capacity(two_type(), 70000.0)
    sol = solve_central_pa(s)
    assert sol.profile.p_day == (1.0, 1.0)
    assert sol.cost.total == pytest.approx(65000 * 100)
    assert sol.day_grid_import == 0.0


def test_all_dominant_day_central():
    s = with_res_capacity(with_inv_risks(two_type(calibrated=False), [2.5, 2.5]), 16250.0)
    sol = solve_central_pa(s)
    assert sol.profile.p_day == (1.0, 1.0)
    assert sol.day_grid_import == pytest.approx(65000 - 16250)


def test_golden_section_checks_endpoints():
    x, fx = golden_section(lambda v: -v, 0.0, 1.0, 1e-9)
    assert x == 1.0 and fx == -1.0


def test_es_central_single_type_matches_scan():
    s = validate_scenario({"n_consumers": 50, "tariffs": {"c_res": 1, "beta": 2, "gamma": 3},
                           "res_capacity": 120.0,
                           "types": [{"day_demand": 6.0, "share": 1.0, "inv_risk": 1.2}]})
    sol = solve_central_es(s)
    grid = np.linspace(0, 1, 100_001)
    scan = min(social_cost_es(s, StrategyProfile.of([q])).total for q in grid[::100])
    fine = [social_cost_es(s, StrategyProfile.of([q])).total for q in grid]
    assert sol.cost.total <= min(fine) + 1e-9
    assert sol.cost.total <= scan


def test_es_central_unrationed_is_all_day():
    s = validate_scenario({"n_consumers": 10, "tariffs": {"c_res": 1, "beta": 2, "gamma": 3},
                           "res_capacity": 200.0,
                           "types": [{"day_demand": 5.0, "share": 0.5},
                                     {"day_demand": 8.0, "share": 0.5}]})
    assert solve_central_es(s).profile.p_day == (1.0, 1.0)


def test_es_central_costlier_than_pa(two_type_scenario):
    es = solve_central_es(two_type_scenario, OptimizerConfig(grid=41))
    pa = solve_central_pa(two_type_scenario)
    assert es.cost.total >= pa.cost.total
    assert es.local_optima >= 1


@given(scenarios(max_types=4))
@settings(max_examples=100)
def test_pa_central_matches_lp(s):
    sol = solve_central_pa(s)
    assert sol.cost.total == pytest.approx(lp_oracle(s), rel=1e-9, abs=1e-9)
    assert sol.cost.total == pytest.approx(social_cost_pa(s, sol.profile).total, rel=1e-9)
    day, _ = expected_demands(s, sol.profile)
    assert sol.day_grid_import >= max(0.0, day - s.res_capacity) - 1e-9 * s.res_capacity


@given(scenarios(max_types=4))
@settings(max_examples=100)
def test_threshold_structure_and_saturation(s):
    sol = solve_central_pa(s)
    p = np.array(sol.profile.p_day)
    part = partition_types(s)
    if part.case1:
        assert np.all(p == 1)
        return
    frac = [k for k in range(s.n_types) if 0 < p[k] < 1]
    assert len(frac) <= 1
    if sol.dual_threshold is not None:
        cut = sol.dual_threshold / (s.tariffs.beta * s.tariffs.c_res)
        sigma2 = [k for k, t in enumerate(s.types) if t.index not in part.sigma1]
        slack = 1e-12 * cut  # the threshold is rebuilt from a product
        for k in sigma2:
            if s.inv_risks[k] > cut + slack:
                assert p[k] == 1.0
            elif s.inv_risks[k] < cut - slack:
                assert p[k] == 0.0
    d1 = total_day_demand(s, part.sigma1)
    if d1 <= s.res_capacity:
        day, _ = expected_demands(s, sol.profile)
        assert day == pytest.approx(s.res_capacity, rel=1e-9)


@given(scenarios(max_types=4))
@settings(max_examples=100)
def test_swapping_fill_order_never_helps(s):
    sol = solve_central_pa(s)
    base = sol.cost.total
    p = np.array(sol.profile.p_day)
    w = s.n_consumers * s.shares * s.day_demands
    # move day energy from a higher-eps type to a lower-eps one
    for i in range(s.n_types):
        for j in range(s.n_types):
            if s.inv_risks[i] <= s.inv_risks[j] or p[i] == 0 or p[j] == 1:
                continue
            moved = min(p[i] * w[i], (1 - p[j]) * w[j])
            q = p.copy()
            q[i] -= moved / w[i]
            q[j] += moved / w[j]
            q = np.clip(q, 0, 1)
            assert social_cost_pa(s, StrategyProfile.of(q)).total >= base * (1 - 1e-12)
