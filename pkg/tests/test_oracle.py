import numpy as np
import pytest
from hypothesis import given, settings

from energyshare.central import OptimizerConfig, solve_central_es, solve_central_pa
from energyshare.equilibrium import select_ne_profile, social_cost_pa, solve_ne_pa
from energyshare.model import StrategyProfile, validate_scenario, with_res_capacity
from energyshare.oracle import (EnumerationBoundError, SmallScenario, exact_expected_costs,
                                grid_search_central, verify_ne_by_deviation)

from conftest import scenarios, two_type


def tiny(n=2, e=10.0, re_cap=15.0, eps=1.0):
    return validate_scenario({"n_consumers": n, "tariffs": {"c_res": 1, "beta": 2, "gamma": 3},
                              "res_capacity": re_cap,
                              "types": [{"day_demand": e, "share": 1.0, "inv_risk": eps}]})


def test_two_outcome_enumeration():
    day, night = exact_expected_costs(tiny(), StrategyProfile.of([0.5]), 0)
    assert day == pytest.approx(0.5 * 15 + 0.5 * 10)
    assert night == 20.0


def test_alone_at_day():
    day, _ = exact_expected_costs(tiny(e=20.0), StrategyProfile.of([0.0]), 0)
    assert day == pytest.approx(15 + 5 * 3)


def test_boundary_eps_alone_prefers_day():
    day, night = exact_expected_costs(tiny(e=10.0, re_cap=15.0, eps=1.5), StrategyProfile.of([0.0]), 0)
    assert day == 10.0 and night == 30.0


def test_es_enumeration():
    day, _ = exact_expected_costs(tiny(), StrategyProfile.of([0.5]), 0, "es")
    # other at day: share 7.5 each
    assert day == pytest.approx(0.5 * (7.5 + 2.5 * 3) + 0.5 * 10)


def test_bounds():
    with pytest.raises(EnumerationBoundError):
        SmallScenario.of(two_type())
    with pytest.raises(EnumerationBoundError):
        SmallScenario.of(two_type(n=10, shares=(0.55, 0.45)))
    with pytest.raises(EnumerationBoundError):
        grid_search_central(validate_scenario({
            "n_consumers": 10, "tariffs": {"c_res": 1, "beta": 2, "gamma": 3}, "res_capacity": 5,
            "types": [{"day_demand": 1.0 + k, "share": 0.25} for k in range(4)]}))


def test_deviation_gain_shrinks_with_population():
    gains = []
    for n in (4, 8, 12):
        s = two_type(n=n, shares=(0.75, 0.25))
        sol = solve_ne_pa(s)
        gains.append(verify_ne_by_deviation(s, select_ne_profile(sol, s)))
    assert gains[0] > gains[1] > gains[2]
    s = two_type(n=12, shares=(0.75, 0.25))
    night = s.inv_risks[0] * 100 * 2 * 100
    assert gains[2] <= 0.05 * night


def test_mean_field_gap_shrinks():
    gaps = []
    for n in (4, 8, 12):
        s = two_type(n=n, shares=(0.75, 0.25), calibrated=False)
        p = StrategyProfile.of([0.6, 0.3])
        exact, _ = exact_expected_costs(s, p, 0)
        demand = 100 + (n - 1) * (0.75 * 100 * 0.6 + 0.25 * 200 * 0.3)
        res = 100 * s.res_capacity / max(s.res_capacity, demand)
        gaps.append(abs(exact - (res * 100 + (100 - res) * 400)))
    assert gaps[0] >= gaps[1] >= gaps[2]


def test_dominant_day_has_no_gain():
    s = with_res_capacity(tiny(n=6), 100.0)
    assert verify_ne_by_deviation(s, StrategyProfile.of([1.0])) <= 0.0


def test_dominant_night_detected():
    s = tiny(n=6, e=10.0, re_cap=1.0)
    assert verify_ne_by_deviation(s, StrategyProfile.of([1.0])) > 0.0


def test_grid_two_type(two_type_scenario):
    profile, cost = grid_search_central(two_type_scenario, "pa", 201)
    exact = solve_central_pa(two_type_scenario).cost.total
    slack = slack_bound(two_type_scenario, 201)
    assert exact - 1e-9 * exact <= cost <= exact + slack


def test_grid_case1_all_ones():
    s = with_res_capacity(two_type(), 70000.0)
    assert grid_search_central(s, "pa", 21)[0].p_day == (1.0, 1.0)


def test_grid_single_type_es():
    s = validate_scenario({"n_consumers": 50, "tariffs": {"c_res": 1, "beta": 2, "gamma": 3},
                           "res_capacity": 120.0,
                           "types": [{"day_demand": 6.0, "share": 1.0, "inv_risk": 1.2}]})
    _, grid_cost = grid_search_central(s, "es", 201)
    es = solve_central_es(s)
    assert es.cost.total <= grid_cost + 1e-9
    assert grid_cost - es.cost.total <= slack_bound(s, 201) + OptimizerConfig().tol


def slack_bound(s, resolution):
    """Cost change when every coordinate moves by one grid step."""
    c, g, b = s.tariffs.c_res, s.tariffs.gamma, s.tariffs.beta
    w = s.n_consumers * s.shares * s.day_demands
    return float(np.sum(w * c * (g + b * s.inv_risks))) / (resolution - 1)


@given(scenarios(max_types=3))
@settings(max_examples=50)
def test_central_pa_within_grid_slack(s):
    _, cost = grid_search_central(s, "pa", 51)
    exact = solve_central_pa(s).cost.total
    assert cost >= exact - 1e-9 * abs(exact)
    assert cost <= exact + slack_bound(s, 51)
