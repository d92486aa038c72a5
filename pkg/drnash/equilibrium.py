"""
Iterative solution of the coupled game.

Outer loop: prices are computed from the previous iteration's adjusted
consumption, the prosumers play the simultaneous game at those prices,
then provider and utility profits are recomputed and compared with the
previous iteration.

Inner loop: damped Jacobi best-response sweeps. Every prosumer answers the
same frozen profile, so the result does not depend on the prosumer order.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from .pricing import quote_series
from .prosumer import (
    EPS_REG_DEFAULT, BestResponseContext, ProsumerState, best_response, coupling_others, hour_net_cost, inconvenience, pv_sale_profit,
    theta_matrix,
)
from .settlement import SettlementReport, settle
from .validation import DomainError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SolveOptions:
    """
    Solver knobs. eps1 (kW), eps2 and eps3 ($) are the outer convergence
    thresholds on DR, provider profit and utility profit.

    single_sweep: one inner sweep per outer iteration instead of iterating
        the prosumer game to its fixed point
    aggregate_convergence: compare daily profit totals instead of hourly
        profits
    coupled: False drops the competition term, each prosumer then faces the
        plain quadratic inconvenience cost
    """
    eps_reg: float = EPS_REG_DEFAULT
    damping: float = 0.5
    eps1: float = 1e-3
    eps2: float = 1e-3
    eps3: float = 1e-3
    max_outer: int = 500
    max_inner: int = 200
    inner_tol: float = 1e-6
    deviation_grid: int = 10_000
    single_sweep: bool = False
    aggregate_convergence: bool = False
    coupled: bool = True

    def __post_init__(self):
        problems = []
        for name in ("eps_reg", "eps1", "eps2", "eps3", "inner_tol"):
            value = getattr(self, name)
            if not value > 0 or not math.isfinite(value):
                problems.append(name.upper() + "_NOT_POSITIVE")
        if not 0 < self.damping <= 1:
            problems.append("DAMPING_OUT_OF_RANGE")
        for name in ("max_outer", "max_inner"):
            value = getattr(self, name)
            if not isinstance(value, int) or value < 1:
                problems.append(name.upper() + "_NOT_POSITIVE_INTEGER")
        if not isinstance(self.deviation_grid, int) or self.deviation_grid < 2:
            problems.append("DEVIATION_GRID_TOO_SMALL")
        if problems:
            raise DomainError("Solver options did not validate: " + " ".join(problems))


@dataclass(frozen=True, eq=False)
class IterationRecord:
    outer_index: int
    dr: np.ndarray
    provider_profit: np.ndarray
    utility_profit: np.ndarray
    max_dr_delta: float
    inner_sweeps: int = 0
    inner_converged: bool = True

    @property
    def total_provider_profit(self):
        return math.fsum(self.provider_profit)

    @property
    def total_utility_profit(self):
        return math.fsum(self.utility_profit)


@dataclass(frozen=True)
class InnerGameResult:
    states: Tuple[ProsumerState, ...]
    sweeps: int
    converged: bool


@dataclass(frozen=True, eq=False)
class NashReport:
    """
    improvements[i, t]: how much prosumer i could lower its net cost at hour
    t by deviating alone, found by scanning a grid over [0, d_max].
    """
    prosumer_ids: Tuple[str, ...]
    improvements: np.ndarray
    best_deviation: np.ndarray

    @property
    def max_improvement(self):
        if self.improvements.size == 0:
            return 0.0
        return float(np.max(self.improvements))

    def max_by_prosumer(self):
        return {pid: float(np.max(row)) for pid, row in zip(self.prosumer_ids, self.improvements)}


@dataclass(eq=False)
class EquilibriumResult:
    converged: bool
    iterations: List[IterationRecord]
    states: Tuple[ProsumerState, ...]
    settlement: SettlementReport
    nash_report: Optional[NashReport] = None
    options: SolveOptions = field(default_factory=SolveOptions)

    @property
    def quotes(self):
        return tuple(state.quotes for state in self.states)

    @property
    def outer_iterations(self):
        return len(self.iterations) - 1

    def dr_matrix(self):
        return np.array([state.dr.values for state in self.states])


def dr_upper_bounds(scenario):
    return scenario.dr_bounds()


def coupling_matrix(dr, opts):
    """
    C_{-i} for every prosumer-hour; all zero in uncoupled mode.
    """
    dr = np.asarray(dr, dtype=float)
    if not opts.coupled:
        return np.zeros_like(dr)
    return np.array([coupling_others(dr, i, opts.eps_reg) for i in range(dr.shape[0])])


def _quote_all(scenario, x):
    return tuple(quote_series(spec, x[i], scenario.tariff) for i, spec in enumerate(scenario.prosumers))


def _build_states(specs, dr, quotes, eps_reg):
    theta = theta_matrix(dr, eps_reg)
    return tuple(ProsumerState.from_dr(spec, dr[i], theta[i], quotes[i]) for i, spec in enumerate(specs))


def _best_response_profile(specs, dr, lambda_pv, d_max, opts):
    coupling = coupling_matrix(dr, opts)
    return np.array([
        best_response(
            BestResponseContext(coupling=coupling[i], lambda_pv=lambda_pv[i], d_max=d_max[i]),
            spec.alpha,
            spec.baseline_load.values,
        )
        for i, spec in enumerate(specs)
    ])


def inner_game(specs, quotes, start, opts=None, d_max=None):
    """
    Simultaneous game among the prosumers at fixed prices.

    Each sweep moves every prosumer from its current DR towards its best
    response to the frozen profile by the damping factor. Where the best
    response does not depend on the others (zero price, zero headroom, a
    single prosumer or uncoupled mode) it is applied directly.
    @param quotes: per prosumer, the per-hour PriceQuote sequence
    @param start: per prosumer, a feasible ProsumerState to start from
    @param d_max: (prosumers x hours) DR bounds. The default min(p, cap)
        treats every hour as an event hour; pass `Scenario.dr_bounds()` to
        keep DR inside a scenario's event window.
    @return InnerGameResult; converged is False when max_inner was reached
    """
    opts = opts or SolveOptions()
    n = len(specs)
    if d_max is None:
        d_max = np.array([np.minimum(spec.baseline_load.values, spec.dr_cap) for spec in specs])
    lambda_pv = np.array([[q.lambda_pv for q in qs] for qs in quotes])
    dr = np.array([state.dr.values for state in start], dtype=float)

    dominant = (lambda_pv <= 0) | (d_max <= 0)
    if n == 1 or not opts.coupled:
        dominant[:] = True

    max_sweeps = 1 if opts.single_sweep else opts.max_inner
    sweeps = 0
    settled = False
    while sweeps < max_sweeps:
        target = _best_response_profile(specs, dr, lambda_pv, d_max, opts)
        updated = np.where(dominant, target, (1.0 - opts.damping) * dr + opts.damping * target)
        delta = float(np.max(np.abs(updated - dr))) if dr.size else 0.0
        dr = updated
        sweeps += 1
        if delta <= opts.inner_tol:
            settled = True
            break

    if not settled and not opts.single_sweep:
        logger.warning("Prosumer game did not settle within %d sweeps (last change %.3g kW)", max_sweeps, delta)
    return InnerGameResult(states=_build_states(specs, dr, quotes, opts.eps_reg), sweeps=sweeps, converged=settled)


def converged(prev, curr, opts=None):
    """
    Outer convergence test: DR, provider profit and utility profit all moved
    less than their thresholds since the previous iteration.
    """
    opts = opts or SolveOptions()
    dr_delta = float(np.max(np.abs(np.asarray(curr.dr) - np.asarray(prev.dr)))) if np.size(curr.dr) else 0.0
    if opts.aggregate_convergence:
        provider_delta = abs(curr.total_provider_profit - prev.total_provider_profit)
        utility_delta = abs(curr.total_utility_profit - prev.total_utility_profit)
    else:
        provider_delta = float(np.max(np.abs(np.asarray(curr.provider_profit) - np.asarray(prev.provider_profit))))
        utility_delta = float(np.max(np.abs(np.asarray(curr.utility_profit) - np.asarray(prev.utility_profit))))
    return dr_delta <= opts.eps1 and provider_delta <= opts.eps2 and utility_delta <= opts.eps3


def _record(index, dr, report, delta, sweeps=0, inner_converged=True):
    dr = np.array(dr, dtype=float)
    dr.setflags(write=False)
    return IterationRecord(
        outer_index=index,
        dr=dr,
        provider_profit=report.provider_profit,
        utility_profit=report.utility_profit,
        max_dr_delta=delta,
        inner_sweeps=sweeps,
        inner_converged=inner_converged,
    )


def run(scenario, opts=None):
    """
    Solve the coupled game for a scenario.

    Starts from x = p, dr = 0. Each outer iteration quotes prices from the
    previous adjusted consumption, lets the prosumers play the inner game,
    settles the result and checks convergence. Hitting max_outer returns a
    result with converged = False and the full trace.
    """
    opts = opts or SolveOptions()
    specs = scenario.prosumers
    baseline = np.array([spec.baseline_load.values for spec in specs])
    d_max = dr_upper_bounds(scenario)

    dr = np.zeros_like(baseline)
    states = _build_states(specs, dr, _quote_all(scenario, baseline - dr), opts.eps_reg)
    report = settle(scenario, states)
    iterations = [_record(0, dr, report, 0.0)]

    done = False
    for k in range(1, opts.max_outer + 1):
        quotes = _quote_all(scenario, baseline - dr)
        inner = inner_game(specs, quotes, states, opts, d_max)
        states = inner.states
        new_dr = np.array([state.dr.values for state in states])
        report = settle(scenario, states)

        delta = float(np.max(np.abs(new_dr - dr))) if new_dr.size else 0.0
        iterations.append(_record(k, new_dr, report, delta, inner.sweeps, inner.converged))
        dr = new_dr
        logger.debug("outer iteration %d: max dr change %.6g kW after %d inner sweeps", k, delta, inner.sweeps)

        if converged(iterations[-2], iterations[-1], opts):
            done = True
            break

    if done:
        logger.info("Converged after %d outer iterations", len(iterations) - 1)
    else:
        logger.warning("No convergence within %d outer iterations", opts.max_outer)

    result = EquilibriumResult(converged=done, iterations=iterations, states=states, settlement=report, options=opts)
    if done:
        result.nash_report = verify_nash(result, scenario, opts)
    return result


def nash_gaps(scenario, states, opts=None):
    """
    Unilateral-deviation scan for arbitrary prosumer states, holding the
    others' DR and the prices carried by the states fixed.
    """
    opts = opts or SolveOptions()
    d_max = dr_upper_bounds(scenario)
    dr = np.array([state.dr.values for state in states])
    coupling = coupling_matrix(dr, opts)
    steps = np.linspace(0.0, 1.0, opts.deviation_grid)

    improvements = np.zeros_like(dr)
    best = np.zeros_like(dr)
    for i, (spec, state) in enumerate(zip(scenario.prosumers, states)):
        args = (spec.alpha, coupling[i], state.lambda_pv, spec.pv_generation.values, spec.baseline_load.values, opts.eps_reg)
        current = hour_net_cost(dr[i], *args)

        grid = d_max[i][:, None] * steps[None, :]
        costs = hour_net_cost(
            grid, spec.alpha, coupling[i][:, None], state.lambda_pv[:, None],
            spec.pv_generation.values[:, None], spec.baseline_load.values[:, None], opts.eps_reg,
        )
        cheapest = np.argmin(costs, axis=1)
        rows = np.arange(grid.shape[0])
        improvements[i] = np.maximum(current - costs[rows, cheapest], 0.0)
        best[i] = grid[rows, cheapest]

    return NashReport(prosumer_ids=tuple(spec.id for spec in scenario.prosumers), improvements=improvements, best_deviation=best)


def verify_nash(result, scenario, opts=None):
    """
    Check that no prosumer can lower its net cost by changing its own DR at
    any hour, at the prices of the final iteration.
    """
    return nash_gaps(scenario, result.states, opts or result.options)


def hourly_costs(scenario, states, opts=None):
    """
    Inconvenience and PV sale profit per prosumer-hour, the two terms of
    every prosumer's net cost.
    @return (inconvenience, pv_profit), both (prosumers x hours) arrays
    """
    opts = opts or SolveOptions()
    dr = np.array([state.dr.values for state in states])
    coupling = coupling_matrix(dr, opts)
    inc = np.array([
        inconvenience(dr[i], coupling[i] + 1.0 / (dr[i] + opts.eps_reg), spec.alpha)
        for i, spec in enumerate(scenario.prosumers)
    ])
    profit = np.array([
        pv_sale_profit(state.lambda_pv, spec.pv_generation.values, state.x.values)
        for spec, state in zip(scenario.prosumers, states)
    ])
    return inc, profit
