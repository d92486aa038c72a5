"""
Supply-demand-ratio (SDR) driven prices.

The PV price paid by the DR provider to a prosumer and the DR price paid by
the utility to the provider share one fitted shape

    price(SDR) = r * f * SDR / (r * SDR + (f - r))

with r the retail rate and f the floor the price tends to as SDR grows (the
PV generation cost for the PV price, the PV price for the DR price). The
price is r just above SDR = 1 and zero at or below SDR = 1.
"""
import math
from dataclasses import dataclass

from .validation import DomainError

SDR_INFINITE = math.inf


@dataclass(frozen=True)
class PriceQuote:
    hour: int
    sdr: float
    lambda_pv: float
    lambda_dr: float


def supply_demand_ratio(pv_gen, x):
    """
    PV generation over adjusted consumption.
    @return SDR_INFINITE when nothing is consumed but something is generated,
        0.0 when both are zero
    """
    if pv_gen < 0 or x < 0:
        raise DomainError("supply_demand_ratio needs nonnegative inputs, got pv_gen={}, x={}".format(pv_gen, x))
    if x == 0:
        return SDR_INFINITE if pv_gen > 0 else 0.0
    return pv_gen / x


def _fitted_price(sdr, retail_rate, floor):
    if sdr <= 1:
        return 0.0
    if math.isinf(sdr):
        return floor
    return retail_rate * floor * sdr / (retail_rate * sdr + (floor - retail_rate))


def pv_price(sdr, retail_rate, pv_gen_cost):
    """
    Dynamic PV price ($/kWh), bounded by pv_gen_cost < price <= retail_rate
    whenever SDR > 1.
    """
    if pv_gen_cost <= 0 or pv_gen_cost >= retail_rate:
        raise DomainError(
            "pv_price needs 0 < pv_gen_cost < retail_rate, got pv_gen_cost={}, retail_rate={}".format(pv_gen_cost, retail_rate)
        )
    return _fitted_price(sdr, retail_rate, pv_gen_cost)


def dr_price(sdr, retail_rate, lambda_pv):
    """
    Dynamic DR price ($/kWh) paid by the utility; never below lambda_pv.
    """
    if lambda_pv < 0 or lambda_pv > retail_rate:
        raise DomainError(
            "dr_price needs 0 <= lambda_pv <= retail_rate, got lambda_pv={}, retail_rate={}".format(lambda_pv, retail_rate)
        )
    if lambda_pv == 0:
        return 0.0
    return _fitted_price(sdr, retail_rate, lambda_pv)


def _retail_rate(prosumer, tariff):
    if prosumer.retail_rate is not None:
        return prosumer.retail_rate
    return tariff.retail_rate


def quote(prosumer, x, hour, tariff):
    """
    SDR, then PV price, then DR price for one prosumer-hour.
    @param x: adjusted consumption (kW), 0 <= x <= baseline load
    """
    p = float(prosumer.baseline_load[hour])
    if x < 0 or x > p:
        raise DomainError("adjusted consumption {} outside [0, {}] for {} at hour {}".format(x, p, prosumer.id, hour))
    retail_rate = float(_retail_rate(prosumer, tariff)[hour])
    sdr = supply_demand_ratio(float(prosumer.pv_generation[hour]), float(x))
    lambda_pv = pv_price(sdr, retail_rate, float(prosumer.pv_gen_cost[hour]))
    lambda_dr = dr_price(sdr, retail_rate, lambda_pv)
    return PriceQuote(hour=hour, sdr=sdr, lambda_pv=lambda_pv, lambda_dr=lambda_dr)


def quote_series(prosumer, x, tariff):
    """
    Quotes for every hour of the horizon.
    @param x: adjusted consumption per hour (kW)
    """
    return tuple(quote(prosumer, float(x[t]), t, tariff) for t in range(len(prosumer.baseline_load)))
