import copy
import json

import numpy as np

from drnash.scenario import scenario_from_dict

SMALL_SCENARIO = {
    "name": "small",
    "horizon": 4,
    "tariff": {"retail_rate": [0.5, 0.5, 0.5, 0.5]},
    "system_load": [2000, 2000, 2000, 2000],
    "utility_cost": {"c0": 4207.5, "c1": -6.74, "c2": 0.0029},
    "event_hours": [0, 1, 2, 3],
    "prosumers": [
        {
            "id": "a",
            "alpha": 0.8,
            "baseline_load": [40, 40, 40, 40],
            "pv_generation": [0, 100, 100, 20],
            "pv_gen_cost": 0.1,
        },
        {
            "id": "b",
            "alpha": 0.9,
            "baseline_load": [60, 60, 60, 60],
            "pv_generation": [0, 150, 200, 30],
            "pv_gen_cost": 0.1,
        },
    ],
}


def small_scenario_dict(**overrides):
    """
    A fresh copy of the four-hour, two-prosumer test scenario, with top-level
    keys replaced by `overrides`.
    """
    data = copy.deepcopy(SMALL_SCENARIO)
    data.update(overrides)
    return data


def small_scenario(**overrides):
    return scenario_from_dict(small_scenario_dict(**overrides))


def write_scenario(directory, data, name="test.scenario"):
    path = directory / name
    path.write_text(json.dumps(data, indent=2), encoding="utf-8")
    return str(path)


def reduced_objective(d, alpha, coupling, lambda_pv):
    return alpha * d ** 3 * coupling + alpha * d ** 2 - lambda_pv * d


def grid_argmin(alpha, coupling, lambda_pv, d_max, points=100_000):
    """
    Brute-force minimizer of the per-hour best-response objective.
    @return (argmin, grid step)
    """
    grid = np.linspace(0.0, d_max, points)
    values = reduced_objective(grid, alpha, coupling, lambda_pv)
    step = d_max / (points - 1)
    return float(grid[int(np.argmin(values))]), step
