"""
Prosumer side of the game: inconvenience cost with the competition term,
PV sale profit, net cost and the per-hour best response.

All functions accept scalars or numpy arrays (per-hour vectors) and return
a float for scalar input.
"""
import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from .pricing import PriceQuote
from .scenario import HourlySeries
from .validation import DomainError

EPS_REG_DEFAULT = 1e-6


def _as_result(value):
    if np.ndim(value) == 0:
        return float(value)
    return value


@dataclass(frozen=True)
class ProsumerState:
    """
    Decision and price variables of one prosumer for one iteration.
    x = p - dr holds exactly.
    """
    x: HourlySeries
    dr: HourlySeries
    theta: HourlySeries
    quotes: Tuple[PriceQuote, ...]

    @classmethod
    def from_dr(cls, spec, dr, theta, quotes):
        dr = np.asarray(dr, dtype=float)
        return cls(
            x=HourlySeries(spec.baseline_load.values - dr),
            dr=HourlySeries(dr),
            theta=HourlySeries(theta),
            quotes=tuple(quotes),
        )

    @property
    def sdr(self):
        return np.array([q.sdr for q in self.quotes])

    @property
    def lambda_pv(self):
        return np.array([q.lambda_pv for q in self.quotes])

    @property
    def lambda_dr(self):
        return np.array([q.lambda_dr for q in self.quotes])


@dataclass(frozen=True)
class BestResponseContext:
    """
    What a prosumer holds fixed while choosing its DR quantity.
    coupling: sum over the other prosumers of 1 / (dr_k + eps_reg)
    lambda_pv: PV price ($/kWh)
    d_max: upper bound on dr (kW)
    """
    coupling: float
    lambda_pv: float
    d_max: float


def theta(all_dr, i, eps_reg=EPS_REG_DEFAULT):
    """
    Share of prosumer i in the competition term, 1/(dr_i + eps) normalized
    over all prosumers.
    """
    if eps_reg <= 0:
        raise DomainError("eps_reg must be positive")
    weights = [1.0 / (float(d) + eps_reg) for d in all_dr]
    return weights[i] / math.fsum(weights)


def theta_matrix(dr, eps_reg=EPS_REG_DEFAULT):
    """
    theta for every prosumer-hour of a (prosumers x hours) DR array.
    """
    weights = 1.0 / (np.asarray(dr, dtype=float) + eps_reg)
    totals = np.array([math.fsum(column) for column in weights.T])
    return weights / totals


def coupling_others(dr, i, eps_reg=EPS_REG_DEFAULT):
    """
    Per-hour sum of 1 / (dr_k + eps_reg) over k != i.
    @param dr: (prosumers x hours) array
    """
    weights = 1.0 / (np.delete(np.asarray(dr, dtype=float), i, axis=0) + eps_reg)
    return np.array([math.fsum(column) for column in weights.T])


def inconvenience(dr_i, coupling_full, alpha):
    """
    alpha * dr^3 * coupling_full, where coupling_full includes the prosumer's
    own 1 / (dr_i + eps_reg) term. Zero DR costs nothing.
    """
    dr_i = np.asarray(dr_i, dtype=float)
    if np.any(dr_i < 0):
        raise DomainError("DR quantity must be nonnegative")
    with np.errstate(invalid='ignore', over='ignore'):
        value = np.where(dr_i > 0, alpha * dr_i ** 3 * coupling_full, 0.0)
    return _as_result(value)


def pv_sale_profit(lambda_pv, pv_gen, x):
    """
    Revenue from selling PV surplus; negative surplus only occurs together
    with a zero price.
    """
    return _as_result(np.asarray(lambda_pv, dtype=float) * (np.asarray(pv_gen, dtype=float) - np.asarray(x, dtype=float)))


def hour_net_cost(d, alpha, coupling, lambda_pv, pv_gen, p, eps_reg=EPS_REG_DEFAULT):
    """
    Net cost of one prosumer-hour as a function of its own DR quantity d,
    everything else held fixed. d may be a grid.
    @param coupling: the others' share of the competition term (C_{-i})
    """
    d = np.asarray(d, dtype=float)
    coupling_full = coupling + 1.0 / (d + eps_reg)
    return _as_result(inconvenience(d, coupling_full, alpha) - pv_sale_profit(lambda_pv, pv_gen, p - d))


def net_cost(spec, state, coupling, eps_reg=EPS_REG_DEFAULT):
    """
    The prosumer objective: inconvenience minus PV sale profit, summed over
    the horizon.
    @param coupling: per-hour C_{-i}
    """
    hourly = hour_net_cost(
        state.dr.values, spec.alpha, np.asarray(coupling, dtype=float), state.lambda_pv,
        spec.pv_generation.values, spec.baseline_load.values, eps_reg,
    )
    return math.fsum(np.atleast_1d(hourly))


def best_response(ctx, alpha, p=math.inf, pv_gen=None):
    """
    Minimizer over d in [0, min(d_max, p)] of

        alpha * d^3 * C + alpha * d^2 - lambda_pv * d

    i.e. the d-dependent part of the net cost with the own competition term
    taken at its eps_reg -> 0 limit. The positive root of
    3 alpha C d^2 + 2 alpha d - lambda_pv = 0 is written as
    2 lambda / (2 alpha + sqrt(4 alpha^2 + 12 alpha C lambda)), which has no
    cancellation and covers C = 0.

    pv_gen only shifts the objective by a constant and does not enter the
    minimizer.
    """
    if alpha < 0:
        raise DomainError("alpha must be nonnegative")
    coupling = np.asarray(ctx.coupling, dtype=float)
    lam = np.asarray(ctx.lambda_pv, dtype=float)
    d_max = np.minimum(np.asarray(ctx.d_max, dtype=float), p)
    if np.any(d_max < 0):
        raise DomainError("d_max must be nonnegative")

    if alpha == 0:
        # no inconvenience: any positive price makes the full bound optimal
        root = np.where(lam > 0, d_max, 0.0)
    else:
        root = 2.0 * lam / (2.0 * alpha + np.sqrt(4.0 * alpha * alpha + 12.0 * alpha * coupling * np.maximum(lam, 0.0)))
    return _as_result(np.clip(root, 0.0, d_max))
