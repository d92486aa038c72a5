"""
Money flows for a state of the game: what the DR provider earns between the
two prices, and what the utility saves on its quadratic operating cost.
"""
import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from .validation import ValidationError


@dataclass(frozen=True)
class PaymentLine:
    prosumer_id: str
    hour: int
    surplus: float
    pv_payment: float
    dr_revenue: float


@dataclass(frozen=True, eq=False)
class SettlementReport:
    """
    Per-hour settlement. All arrays have the horizon length.
    """
    provider_profit: np.ndarray
    utility_cost_before: np.ndarray
    utility_cost_after: np.ndarray
    adjusted_load: np.ndarray
    utility_profit: np.ndarray
    payments: Tuple[PaymentLine, ...]

    @property
    def total_provider_profit(self):
        return math.fsum(self.provider_profit)

    @property
    def total_utility_profit(self):
        return math.fsum(self.utility_profit)


def provider_profit(quotes, specs, states, hour):
    """
    Provider margin for one hour, summed over its prosumers:
    (lambda_dr - lambda_pv) * (pv_gen - x).
    @param quotes: per prosumer, the per-hour PriceQuote sequence
    """
    return math.fsum(
        (q[hour].lambda_dr - q[hour].lambda_pv) * (float(spec.pv_generation[hour]) - float(state.x[hour]))
        for q, spec, state in zip(quotes, specs, states)
    )


def utility_cost(load, coeffs):
    c0, c1, c2 = coeffs
    return c0 + c1 * load + c2 * load ** 2


def utility_profit(p_system, total_pv, total_dr, coeffs):
    """
    Operating cost saved by the utility: Cost(P_system) - Cost(Q) with
    Q = P_system - total_pv - total_dr. Not clamped; it is negative on the
    falling branch of the cost curve.
    @raise ValidationError: when Q < 0
    """
    adjusted = p_system - total_pv - total_dr
    if adjusted < 0:
        raise ValidationError(
            [("adjusted_load", "ADJUSTED_LOAD_NEGATIVE (P={}, PV={}, DR={})".format(p_system, total_pv, total_dr))],
            prefix="Settlement failed: ",
        )
    return utility_cost(p_system, coeffs) - utility_cost(adjusted, coeffs)


def settle(scenario, states):
    """
    Settle every hour of the horizon for the given prosumer states, using the
    quotes the states carry.
    """
    specs = scenario.prosumers
    quotes = [state.quotes for state in states]
    coeffs = scenario.utility_cost
    horizon = scenario.horizon

    provider = np.zeros(horizon)
    before = np.zeros(horizon)
    after = np.zeros(horizon)
    adjusted = np.zeros(horizon)
    saved = np.zeros(horizon)
    payments = []

    for t in range(horizon):
        p_system = float(scenario.system_load[t])
        total_pv = math.fsum(float(spec.pv_generation[t]) for spec in specs)
        total_dr = math.fsum(float(state.dr[t]) for state in states)

        provider[t] = provider_profit(quotes, specs, states, t)
        saved[t] = utility_profit(p_system, total_pv, total_dr, coeffs)
        adjusted[t] = p_system - total_pv - total_dr
        before[t] = utility_cost(p_system, coeffs)
        after[t] = utility_cost(adjusted[t], coeffs)

        for spec, state in zip(specs, states):
            q = state.quotes[t]
            surplus = float(spec.pv_generation[t]) - float(state.x[t])
            payments.append(PaymentLine(
                prosumer_id=spec.id,
                hour=t,
                surplus=surplus,
                pv_payment=q.lambda_pv * surplus,
                dr_revenue=q.lambda_dr * surplus,
            ))

    return SettlementReport(
        provider_profit=provider,
        utility_cost_before=before,
        utility_cost_after=after,
        adjusted_load=adjusted,
        utility_profit=saved,
        payments=tuple(payments),
    )
