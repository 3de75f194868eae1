"""Reliability indices computed from iteration histories.

Classic customer- and energy-oriented indices (SAIFI, SAIDI, ENS) plus
the EV-oriented trio: unserved EV demand, average V2G activations per
EV and average V2G duration per EV.  Indices are computed per Monte
Carlo iteration and then aggregated over the ensemble.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

INDEX_NAMES = ("ens_mwh", "saifi", "saidi_h", "ev_demand_mwh", "ev_dur_h", "ev_int")


@dataclass(frozen=True)
class IndexReport:
    """All indices for one iteration (or an ensemble mean)."""

    lambda_s: float
    u_s_h: float
    r_s_h: Optional[float]
    ens_mwh: float
    saifi: float
    saidi_h: float
    ev_demand_mwh: float
    ev_int: float
    ev_dur_h: float

    def value(self, name: str) -> float:
        return getattr(self, name)


def compute_ens(history) -> float:
    """Energy not supplied, MWh: the per-increment sum of shed power * dt."""
    return sum(history.bus_ens_mwh.values())


def compute_saifi(history, customers: dict[int, int]) -> float:
    """Customer-weighted interruption frequency (per customer, per year)."""
    total = sum(customers.values())
    if total <= 0:
        raise ValueError("SAIFI undefined: no customers in the system")
    ci = sum(
        history.bus_interruptions.get(bus, 0) * n for bus, n in customers.items()
    )
    return ci / total


def compute_saidi(history, customers: dict[int, int]) -> float:
    """Customer-weighted interruption duration, hours per customer-year."""
    total = sum(customers.values())
    if total <= 0:
        raise ValueError("SAIDI undefined: no customers in the system")
    cmi = sum(history.bus_outage_h.get(bus, 0.0) * n for bus, n in customers.items())
    return cmi / total


def compute_ev_demand(history) -> float:
    """Unserved EV energy, MWh: missed charging plus discharged energy."""
    return sum(history.park_ev_demand_mwh.values())


def compute_ev_int(history) -> float:
    """Fleet-weighted mean V2G activations per EV."""
    weights = history.park_fleet_weight
    total = sum(weights.values())
    if total <= 0:
        raise ValueError("EV interruption index undefined: no EVs in the system")
    return sum(history.park_rho.get(bus, 0.0) * n for bus, n in weights.items()) / total


def compute_ev_dur(history) -> float:
    """Fleet-weighted mean V2G duration per EV, hours."""
    weights = history.park_fleet_weight
    total = sum(weights.values())
    if total <= 0:
        raise ValueError("EV duration index undefined: no EVs in the system")
    return sum(history.park_v2g_h.get(bus, 0.0) * n for bus, n in weights.items()) / total


def compute_report(history, customers: dict[int, int]) -> IndexReport:
    lambda_s = float(sum(history.bus_interruptions.values()))
    u_s = float(sum(history.bus_outage_h.values()))
    has_parks = sum(history.park_fleet_weight.values()) > 0
    return IndexReport(
        lambda_s=lambda_s,
        u_s_h=u_s,
        r_s_h=(u_s / lambda_s) if lambda_s > 0 else None,
        ens_mwh=compute_ens(history),
        saifi=compute_saifi(history, customers),
        saidi_h=compute_saidi(history, customers),
        ev_demand_mwh=compute_ev_demand(history) if has_parks else 0.0,
        ev_int=compute_ev_int(history) if has_parks else 0.0,
        ev_dur_h=compute_ev_dur(history) if has_parks else 0.0,
    )


@dataclass(frozen=True)
class IndexStats:
    """Ensemble statistics of one index."""

    mean: float
    variance: float
    minimum: float
    q1: float
    median: float
    q3: float
    maximum: float

    @property
    def five_numbers(self) -> tuple[float, float, float, float, float]:
        return (self.minimum, self.q1, self.median, self.q3, self.maximum)


@dataclass
class AggregateReport:
    n: int
    stats: dict[str, IndexStats] = field(default_factory=dict)

    def mean(self, name: str) -> float:
        return self.stats[name].mean


def aggregate(reports: Sequence[IndexReport]) -> AggregateReport:
    """Unbiased sample statistics per index; quartiles by linear interpolation."""
    if not reports:
        raise ValueError("aggregate needs at least one report")
    out = AggregateReport(n=len(reports))
    for name in INDEX_NAMES:
        values = np.array([r.value(name) for r in reports], dtype=float)
        q1, med, q3 = np.percentile(values, [25, 50, 75], method="linear")
        out.stats[name] = IndexStats(
            mean=float(values.mean()),
            variance=float(values.var(ddof=1)) if len(values) > 1 else 0.0,
            minimum=float(values.min()),
            q1=float(q1),
            median=float(med),
            q3=float(q3),
            maximum=float(values.max()),
        )
    return out
