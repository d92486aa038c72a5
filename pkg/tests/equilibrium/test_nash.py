import numpy as np
import pytest

from drnash import SolveOptions, run, verify_nash
from drnash.equilibrium import dr_upper_bounds, hourly_costs, nash_gaps
from drnash.pricing import quote_series
from drnash.prosumer import ProsumerState, theta_matrix
from drnash.scenario import scenario_from_dict
from tests.utils import small_scenario, small_scenario_dict


def states_for(scenario, dr, quotes=None):
    dr = np.asarray(dr, dtype=float)
    theta = theta_matrix(dr)
    if quotes is None:
        quotes = [quote_series(spec, spec.baseline_load.values, scenario.tariff) for spec in scenario.prosumers]
    return tuple(ProsumerState.from_dr(spec, dr[i], theta[i], quotes[i]) for i, spec in enumerate(scenario.prosumers))


def test_zero_price_dr_is_dominated():
    scenario = small_scenario()
    d_max = dr_upper_bounds(scenario)
    dr = np.zeros((2, 4))
    # hour 3 has a PV deficit for both prosumers, so the PV price is zero there
    dr[0, 3] = d_max[0, 3]
    states = states_for(scenario, dr)
    assert states[0].lambda_pv[3] == 0
    report = nash_gaps(scenario, states)
    assert report.improvements[0, 3] > 0.1
    assert report.best_deviation[0, 3] == 0
    assert report.max_improvement == report.improvements[0, 3]


def test_idle_state_is_not_an_equilibrium():
    scenario = small_scenario()
    # the best response against an idle rival is tiny, so scan finely
    report = nash_gaps(scenario, states_for(scenario, np.zeros((2, 4))), SolveOptions(deviation_grid=100_000))
    assert report.improvements[:, 1].min() > 0
    assert np.all(report.improvements[:, [0, 3]] == 0)


def test_single_prosumer_at_closed_form():
    data = small_scenario_dict()
    data["prosumers"] = data["prosumers"][:1]
    scenario = scenario_from_dict(data)
    result = run(scenario)
    assert result.converged
    report = verify_nash(result, scenario)
    assert report.max_improvement <= 1e-6
    state = result.states[0]
    expected = np.clip(state.lambda_pv / (2 * 0.8), 0, dr_upper_bounds(scenario)[0])
    assert np.allclose(state.dr.values, expected)


def test_grid_resolution_bound():
    scenario = small_scenario()
    result = run(scenario)
    fine = verify_nash(result, scenario, SolveOptions(deviation_grid=20_000))
    coarse = verify_nash(result, scenario, SolveOptions(deviation_grid=50))
    assert fine.max_improvement <= 1e-6
    assert coarse.max_improvement <= 1e-6


def test_report_shape():
    scenario = small_scenario()
    result = run(scenario)
    report = result.nash_report
    assert report.prosumer_ids == ("a", "b")
    assert report.improvements.shape == (2, 4)
    assert np.all(report.improvements >= 0)
    assert np.all(report.best_deviation <= dr_upper_bounds(scenario) + 1e-12)


def test_hourly_costs():
    scenario = small_scenario()
    result = run(scenario)
    inc, profit = hourly_costs(scenario, result.states)
    assert inc.shape == profit.shape == (2, 4)
    assert np.all(inc[:, [0, 3]] == 0)
    assert np.all(inc[:, [1, 2]] > 0)
    spec, state = scenario.prosumers[0], result.states[0]
    assert profit[0, 1] == pytest.approx(state.lambda_pv[1] * (spec.pv_generation[1] - state.x[1]))
