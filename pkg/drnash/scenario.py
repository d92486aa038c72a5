"""
Copyright (c) 2014 Congressus, The Netherlands
Copyright (c) 2017-2023 Raphael Michel and contributors
Copyright (c) 2026 drnash contributors

Permission is hereby granted, free of charge, to any person obtaining a copy
of this software and associated documentation files (the "Software"), to deal
in the Software without restriction, including without limitation the rights
to use, copy, modify, merge, publish, distribute, sublicense, and/or sell
copies of the Software, and to permit persons to whom the Software is furnished
to do so, subject to the following conditions:

The above copyright notice and this permission notice shall be included in all
copies or substantial portions of the Software.

THE SOFTWARE IS PROVIDED "AS IS", WITHOUT WARRANTY OF ANY KIND, EXPRESS OR
IMPLIED, INCLUDING BUT NOT LIMITED TO THE WARRANTIES OF MERCHANTABILITY,
FITNESS FOR A PARTICULAR PURPOSE AND NONINFRINGEMENT. IN NO EVENT SHALL THE
AUTHORS OR COPYRIGHT HOLDERS BE LIABLE FOR ANY CLAIM, DAMAGES OR OTHER LIABILITY,
WHETHER IN AN ACTION OF CONTRACT, TORT OR OTHERWISE, ARISING FROM, OUT OF OR IN
CONNECTION WITH THE SOFTWARE OR THE USE OR OTHER DEALINGS IN THE SOFTWARE.
"""
import json
import math
import numbers
import os
from dataclasses import dataclass
from typing import FrozenSet, Optional, Tuple

import numpy as np

from .utils import clean_id, event_mask
from .validation import ProblemList, ScenarioFormatError, ValidationError

HORIZON_DEFAULT = 24
DR_CAP_FRACTION_DEFAULT = 0.10

REPLICA_PATH = os.path.join(os.path.dirname(__file__), 'scenarios', 'replica34.scenario')

SCENARIO_KEYS = ("name", "notes", "horizon", "tariff", "system_load", "prosumers", "utility_cost", "event_hours")
SCENARIO_REQUIRED = ("tariff", "system_load", "prosumers", "utility_cost")
TARIFF_KEYS = ("retail_rate",)
PROSUMER_KEYS = ("id", "alpha", "baseline_load", "pv_generation", "pv_gen_cost", "dr_cap_fraction", "retail_rate")
PROSUMER_REQUIRED = ("id", "alpha", "baseline_load", "pv_generation", "pv_gen_cost")
UTILITY_COST_KEYS = ("c0", "c1", "c2")


class HourlySeries:
    """
    Read-only, per-hour series of floats (kW or $/kWh depending on the field).
    Compares by value, so scenarios built from the same numbers are equal.
    """
    __slots__ = ("_values",)

    def __init__(self, values):
        arr = np.array(values, dtype=float)
        if arr.ndim != 1:
            raise ValueError("an hourly series is one-dimensional")
        arr.setflags(write=False)
        self._values = arr

    @classmethod
    def constant(cls, value, horizon):
        return cls(np.full(horizon, float(value)))

    @property
    def values(self):
        return self._values

    def peak(self):
        return float(np.max(self._values))

    def tolist(self):
        return [float(v) for v in self._values]

    def __array__(self, dtype=None, copy=None):
        if dtype is not None:
            return self._values.astype(dtype)
        if copy:
            return self._values.copy()
        return self._values

    def __len__(self):
        return len(self._values)

    def __getitem__(self, item):
        return self._values[item]

    def __iter__(self):
        return iter(self._values)

    def __eq__(self, other):
        if not isinstance(other, HourlySeries):
            return NotImplemented
        return self._values.shape == other._values.shape and bool(np.array_equal(self._values, other._values))

    def __hash__(self):
        return hash(self._values.tobytes())

    def __repr__(self):
        return "HourlySeries({})".format(self.tolist())


@dataclass(frozen=True)
class TouTariff:
    retail_rate: HourlySeries


@dataclass(frozen=True)
class UtilityCostCoefficients:
    c0: float
    c1: float
    c2: float

    def __iter__(self):
        return iter((self.c0, self.c1, self.c2))


@dataclass(frozen=True)
class ProsumerSpec:
    """
    Static description of one (aggregate) PV prosumer.

    retail_rate overrides the scenario tariff for this prosumer when set,
    e.g. business customers on a different TOU schedule.
    """
    id: str
    alpha: float
    baseline_load: HourlySeries
    pv_generation: HourlySeries
    pv_gen_cost: HourlySeries
    dr_cap_fraction: float = DR_CAP_FRACTION_DEFAULT
    retail_rate: Optional[HourlySeries] = None

    @property
    def dr_cap(self):
        """
        Maximum DR per hour, a fraction of the peak baseline load (kW).
        """
        return self.dr_cap_fraction * self.baseline_load.peak()


@dataclass(frozen=True)
class Scenario:
    tariff: TouTariff
    system_load: HourlySeries
    prosumers: Tuple[ProsumerSpec, ...]
    utility_cost: UtilityCostCoefficients
    event_hours: Optional[FrozenSet[int]] = None
    horizon: int = HORIZON_DEFAULT
    name: str = ""
    notes: str = ""

    def __post_init__(self):
        object.__setattr__(self, "prosumers", tuple(self.prosumers))
        if self.event_hours is None:
            if isinstance(self.horizon, int) and self.horizon > 0:
                object.__setattr__(self, "event_hours", frozenset(range(self.horizon)))
            else:
                object.__setattr__(self, "event_hours", frozenset())
        else:
            object.__setattr__(self, "event_hours", frozenset(self.event_hours))
        check_scenario(self)

    @property
    def n(self):
        return len(self.prosumers)

    def retail_rate_for(self, prosumer):
        if prosumer.retail_rate is not None:
            return prosumer.retail_rate
        return self.tariff.retail_rate

    def dr_bounds(self):
        """
        Effective per prosumer-hour DR bound: min(p, cap) during the event, zero
        outside it.
        @return (prosumers x hours) array
        """
        mask = event_mask(self.horizon, self.event_hours)
        return np.array([
            np.where(mask, np.minimum(spec.baseline_load.values, spec.dr_cap), 0.0)
            for spec in self.prosumers
        ])

    def prosumer_index(self, prosumer_id):
        for i, spec in enumerate(self.prosumers):
            if spec.id == prosumer_id:
                return i
        raise KeyError(prosumer_id)


def _is_number(value):
    return isinstance(value, numbers.Real) and not isinstance(value, bool)


def _check_series(series, horizon, field, problems, positive=False):
    """
    Length, finiteness and sign checks shared by every series of a scenario.
    @return True if the series has the right length and finite values.
    """
    if series is None:
        return False
    if len(series) != horizon:
        problems.add(field, "LENGTH_MISMATCH (expected {}, got {})".format(horizon, len(series)))
        return False
    if not np.all(np.isfinite(series.values)):
        problems.add(field, "NOT_FINITE")
        return False
    if positive:
        if np.any(series.values <= 0):
            problems.add(field, "NOT_POSITIVE")
    elif np.any(series.values < 0):
        problems.add(field, "NEGATIVE")
    return True


def check_scenario(scenario):
    """
    Check every invariant of the scenario and its embedded types.
    @raise ValidationError: listing all violations found
    """
    problems = ProblemList()
    horizon = scenario.horizon
    if not isinstance(horizon, int) or isinstance(horizon, bool) or horizon <= 0:
        problems.add("horizon", "HORIZON_NOT_POSITIVE_INTEGER")
        problems.raise_if_any()

    tariff_ok = _check_series(scenario.tariff.retail_rate, horizon, "tariff.retail_rate", problems, positive=True)
    system_ok = _check_series(scenario.system_load, horizon, "system_load", problems)

    coeffs = scenario.utility_cost
    for key in UTILITY_COST_KEYS:
        value = getattr(coeffs, key)
        if not _is_number(value) or not math.isfinite(value):
            problems.add("utility_cost." + key, "NOT_FINITE")
    if _is_number(coeffs.c2) and not coeffs.c2 > 0:
        problems.add("utility_cost.c2", "C2_NOT_POSITIVE")

    events_ok = bool(scenario.event_hours)
    if not events_ok:
        problems.add("event_hours", "EVENT_HOURS_EMPTY")
    for hour in sorted(scenario.event_hours, key=repr):
        if not isinstance(hour, int) or isinstance(hour, bool) or not 0 <= hour < horizon:
            problems.add("event_hours", "HOUR_OUT_OF_RANGE ({!r})".format(hour))
            events_ok = False

    if not scenario.prosumers:
        problems.add("prosumers", "PROSUMERS_EMPTY")

    seen = set()
    loads_ok = True
    bounds_ok = events_ok
    for i, spec in enumerate(scenario.prosumers):
        field = "prosumers[{}]".format(i)
        if not isinstance(spec.id, str) or not spec.id:
            problems.add(field + ".id", "ID_MISSING")
        elif spec.id in seen:
            problems.add(field + ".id", "ID_NOT_UNIQUE ({})".format(spec.id))
        else:
            seen.add(spec.id)

        if not _is_number(spec.alpha) or not 0 <= spec.alpha <= 1:
            problems.add(field + ".alpha", "ALPHA_OUT_OF_RANGE (must be within [0, 1])")
        if not _is_number(spec.dr_cap_fraction) or not 0 <= spec.dr_cap_fraction <= 1:
            problems.add(field + ".dr_cap_fraction", "DR_CAP_FRACTION_OUT_OF_RANGE (must be within [0, 1])")
            bounds_ok = False

        load_ok = _check_series(spec.baseline_load, horizon, field + ".baseline_load", problems)
        loads_ok = loads_ok and load_ok
        pv_ok = _check_series(spec.pv_generation, horizon, field + ".pv_generation", problems)
        bounds_ok = bounds_ok and pv_ok
        cost_ok = _check_series(spec.pv_gen_cost, horizon, field + ".pv_gen_cost", problems, positive=True)

        if spec.retail_rate is not None:
            rate_ok = _check_series(spec.retail_rate, horizon, field + ".retail_rate", problems, positive=True)
        else:
            rate_ok = tariff_ok
        if cost_ok and rate_ok:
            if np.any(spec.pv_gen_cost.values >= scenario.retail_rate_for(spec).values):
                problems.add(field + ".pv_gen_cost", "PV_GEN_COST_NOT_BELOW_RETAIL_RATE")

    if system_ok and loads_ok and scenario.prosumers:
        total = np.sum([spec.baseline_load.values for spec in scenario.prosumers], axis=0)
        short = np.flatnonzero(scenario.system_load.values < total)
        if short.size:
            problems.add("system_load", "SYSTEM_LOAD_BELOW_PROSUMER_LOAD (hours {})".format(short.tolist()))
        elif bounds_ok:
            # adjusted load P - PV - DR must stay nonnegative at the largest allowed DR
            pv = np.sum([spec.pv_generation.values for spec in scenario.prosumers], axis=0)
            reach = pv + np.sum(scenario.dr_bounds(), axis=0)
            short = np.flatnonzero(scenario.system_load.values < reach)
            if short.size:
                problems.add("system_load", "SYSTEM_LOAD_BELOW_PV_AND_DR (hours {})".format(short.tolist()))

    problems.raise_if_any()
    return True


def _check_keys(data, allowed, required, field, problems):
    if not isinstance(data, dict):
        problems.add(field, "NOT_AN_OBJECT")
        return False
    prefix = field + "." if field else ""
    for key in required:
        if key not in data:
            problems.add(prefix + key, key.upper() + "_MISSING")
    for key in data:
        if key not in allowed:
            problems.add(prefix + str(key), "UNKNOWN_KEY")
    return True


def _series(value, horizon, field, problems):
    """
    Parse a series; a single number is broadcast across the horizon.
    """
    if _is_number(value):
        return HourlySeries.constant(value, horizon)
    if isinstance(value, list) and all(_is_number(v) for v in value):
        return HourlySeries(value)
    problems.add(field, "NOT_A_NUMBER_SERIES")
    return None


def _number(value, field, problems):
    if _is_number(value):
        return float(value)
    problems.add(field, "NOT_A_NUMBER")
    return None


def _prosumer_from_dict(data, horizon, field, problems, clean):
    if not _check_keys(data, PROSUMER_KEYS, PROSUMER_REQUIRED, field, problems):
        return None
    if any(key not in data for key in PROSUMER_REQUIRED):
        return None

    prosumer_id = data["id"]
    if not isinstance(prosumer_id, str):
        problems.add(field + ".id", "ID_NOT_A_STRING")
        return None
    if clean:
        prosumer_id = clean_id(prosumer_id)

    retail_rate = None
    if "retail_rate" in data:
        retail_rate = _series(data["retail_rate"], horizon, field + ".retail_rate", problems)

    return ProsumerSpec(
        id=prosumer_id,
        alpha=_number(data["alpha"], field + ".alpha", problems),
        baseline_load=_series(data["baseline_load"], horizon, field + ".baseline_load", problems),
        pv_generation=_series(data["pv_generation"], horizon, field + ".pv_generation", problems),
        pv_gen_cost=_series(data["pv_gen_cost"], horizon, field + ".pv_gen_cost", problems),
        dr_cap_fraction=_number(data.get("dr_cap_fraction", DR_CAP_FRACTION_DEFAULT), field + ".dr_cap_fraction", problems),
        retail_rate=retail_rate,
    )


def scenario_from_dict(data, clean=True):
    """
    Build a Scenario from the decoded scenario file.
    @param data: the decoded JSON object
    @param clean: transliterate prosumer ids to ASCII
    @raise ScenarioFormatError: structural problems (keys, types)
    @raise ValidationError: invariant violations
    """
    problems = ProblemList()
    _check_keys(data, SCENARIO_KEYS, SCENARIO_REQUIRED, "", problems)
    problems.raise_if_any(ScenarioFormatError)

    horizon = data.get("horizon", HORIZON_DEFAULT)
    if not isinstance(horizon, int) or isinstance(horizon, bool) or horizon <= 0:
        raise ValidationError([("horizon", "HORIZON_NOT_POSITIVE_INTEGER")])

    for key in ("name", "notes"):
        if key in data and not isinstance(data[key], str):
            problems.add(key, "NOT_A_STRING")

    retail_rate = None
    if _check_keys(data["tariff"], TARIFF_KEYS, TARIFF_KEYS, "tariff", problems) and "retail_rate" in data["tariff"]:
        retail_rate = _series(data["tariff"]["retail_rate"], horizon, "tariff.retail_rate", problems)

    system_load = _series(data["system_load"], horizon, "system_load", problems)

    coeffs = [None, None, None]
    if _check_keys(data["utility_cost"], UTILITY_COST_KEYS, UTILITY_COST_KEYS, "utility_cost", problems):
        coeffs = [_number(data["utility_cost"].get(key), "utility_cost." + key, problems) if key in data["utility_cost"] else None
                  for key in UTILITY_COST_KEYS]

    event_hours = None
    if "event_hours" in data:
        hours = data["event_hours"]
        if isinstance(hours, list) and all(isinstance(h, int) and not isinstance(h, bool) for h in hours):
            event_hours = frozenset(hours)
        else:
            problems.add("event_hours", "NOT_A_LIST_OF_HOURS")

    prosumers = []
    if isinstance(data["prosumers"], list):
        for i, item in enumerate(data["prosumers"]):
            prosumers.append(_prosumer_from_dict(item, horizon, "prosumers[{}]".format(i), problems, clean))
    else:
        problems.add("prosumers", "NOT_A_LIST")

    problems.raise_if_any(ScenarioFormatError)

    return Scenario(
        horizon=horizon,
        tariff=TouTariff(retail_rate=retail_rate),
        system_load=system_load,
        prosumers=tuple(prosumers),
        utility_cost=UtilityCostCoefficients(*coeffs),
        event_hours=event_hours,
        name=data.get("name", ""),
        notes=data.get("notes", ""),
    )


def scenario_to_dict(scenario):
    data = {}
    if scenario.name:
        data["name"] = scenario.name
    if scenario.notes:
        data["notes"] = scenario.notes
    data["horizon"] = scenario.horizon
    data["tariff"] = {"retail_rate": scenario.tariff.retail_rate.tolist()}
    data["system_load"] = scenario.system_load.tolist()
    data["utility_cost"] = {"c0": scenario.utility_cost.c0, "c1": scenario.utility_cost.c1, "c2": scenario.utility_cost.c2}
    data["event_hours"] = sorted(scenario.event_hours)
    data["prosumers"] = []
    for spec in scenario.prosumers:
        item = {
            "id": spec.id,
            "alpha": spec.alpha,
            "dr_cap_fraction": spec.dr_cap_fraction,
            "baseline_load": spec.baseline_load.tolist(),
            "pv_generation": spec.pv_generation.tolist(),
            "pv_gen_cost": spec.pv_gen_cost.tolist(),
        }
        if spec.retail_rate is not None:
            item["retail_rate"] = spec.retail_rate.tolist()
        data["prosumers"].append(item)
    return data


def load_scenario(path, clean=True):
    """
    Read and validate a scenario file.
    @param path: path of the JSON scenario file
    @raise OSError: file cannot be read
    @raise ScenarioFormatError: invalid JSON or structure
    @raise ValidationError: invariant violations
    """
    with open(path, encoding='utf-8') as f:
        text = f.read()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ScenarioFormatError([("", "INVALID_JSON: " + e.msg)], line=e.lineno, column=e.colno) from e
    return scenario_from_dict(data, clean=clean)


def save_scenario(scenario, path):
    with open(path, 'w', encoding='utf-8', newline='\n') as f:
        json.dump(scenario_to_dict(scenario), f, indent=2)
        f.write("\n")


def replica_scenario():
    """
    The bundled two-prosumer replica of the 34-bus case study. Structure and
    case-study constants are exact; tariff levels, load and PV shapes are
    placeholders (see the `notes` field of the file).
    """
    return load_scenario(REPLICA_PATH)
