"""Stateful active components: stationary batteries and EV parks.

An EV park is an aggregated battery: at fault onset the number of
home-connected cars and their individual states of charge are drawn,
then the park behaves as one storage unit whose power limit is the
fleet times the per-car charger rating.  Discharge back to the grid
only happens when the park is V2G-enabled.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .stochastic import EvAvailabilityModel, SocSpec, sample_ev_count, sample_soc

_POWER_TOL_MW = 1e-12


@dataclass
class Battery:
    """Stationary battery with a one-way efficiency on each conversion.

    Discharge delivers ``drawn * efficiency`` to the grid; charging
    stores ``absorbed * efficiency``.  Exchanges are clipped to the
    inverter rating and the state-of-charge window, never rejected.
    """

    capacity_mwh: float
    inverter_mw: float
    efficiency: float = 0.95
    soc_min: float = 0.1
    stored_mwh: float = field(default=-1.0)
    charged_mwh: float = 0.0
    discharged_mwh: float = 0.0

    def __post_init__(self):
        if self.capacity_mwh <= 0 or self.inverter_mw <= 0:
            raise ValueError("battery capacity and inverter rating must be > 0")
        if not 0.0 < self.efficiency <= 1.0:
            raise ValueError("efficiency must be in (0, 1]")
        if not 0.0 <= self.soc_min < 1.0:
            raise ValueError("soc_min must be in [0, 1)")
        if self.stored_mwh < 0:
            self.stored_mwh = self.capacity_mwh

    def clone(self) -> "Battery":
        return replace(self)

    @property
    def floor_mwh(self) -> float:
        return self.soc_min * self.capacity_mwh

    def max_discharge_mw(self, dt_hours: float) -> float:
        """Largest power deliverable to the grid for ``dt_hours``."""
        energy_limited = (self.stored_mwh - self.floor_mwh) * self.efficiency / dt_hours
        return max(0.0, min(self.inverter_mw, energy_limited))

    def max_charge_mw(self, dt_hours: float) -> float:
        """Largest power absorbable from the grid for ``dt_hours``."""
        headroom = (self.capacity_mwh - self.stored_mwh) / (self.efficiency * dt_hours)
        return max(0.0, min(self.inverter_mw, headroom))

    def exchange(self, requested_mw: float, dt_hours: float) -> float:
        """Apply a signed exchange (+ = discharge to grid), return the actual.

        The request is clipped to what the inverter and the SoC window
        allow; state and energy accumulators are updated.
        """
        if dt_hours <= 0:
            raise ValueError("dt must be positive")
        if requested_mw > _POWER_TOL_MW:
            actual = min(requested_mw, self.max_discharge_mw(dt_hours))
            self.stored_mwh -= actual * dt_hours / self.efficiency
            self.discharged_mwh += actual * dt_hours
            return actual
        if requested_mw < -_POWER_TOL_MW:
            actual = min(-requested_mw, self.max_charge_mw(dt_hours))
            self.stored_mwh += actual * dt_hours * self.efficiency
            self.charged_mwh += actual * dt_hours
            return -actual
        return 0.0


@dataclass
class EvPark:
    """Aggregated EVs at one bus, optionally V2G-capable.

    ``max_fleet`` is the number of EV-owning households served by the
    bus; the connected fleet is drawn per fault event.  Charging
    efficiency is 1.0 (only the stationary battery carries a conversion
    loss figure).
    """

    bus: int
    max_fleet: int
    ev_capacity_kwh: float = 70.0
    charging_kw: float = 3.6
    v2g_enabled: bool = False
    soc: SocSpec = field(default_factory=SocSpec)

    # fleet snapshot, valid while the park is fault-affected
    fleet: int = 0
    stored_kwh: float = 0.0
    snapshot_active: bool = False

    # accumulators (per iteration)
    outage_h: float = 0.0
    v2g_h: float = 0.0
    charged_kwh: float = 0.0
    discharged_kwh: float = 0.0
    unmet_charge_kwh: float = 0.0
    rho: float = 0.0
    _in_discharge_run: bool = field(default=False, repr=False)
    _run_peak_fraction: float = field(default=0.0, repr=False)

    def __post_init__(self):
        if self.max_fleet < 0:
            raise ValueError("max_fleet must be >= 0")
        if self.ev_capacity_kwh <= 0 or self.charging_kw <= 0:
            raise ValueError("per-EV capacity and charger rating must be > 0")

    def clone(self) -> "EvPark":
        return replace(self, soc=self.soc)

    # -- fleet snapshot ----------------------------------------------------

    def draw_fleet(
        self, hour_of_day: float, model: EvAvailabilityModel, rng: np.random.Generator
    ) -> int:
        """Draw the connected fleet and its aggregate stored energy.

        Called when a fault pulls the park out of normal supply; the
        snapshot holds until the park is released.
        """
        self.fleet = sample_ev_count(self.max_fleet, hour_of_day, model, rng)
        self.stored_kwh = sum(
            sample_soc(self.soc, self.ev_capacity_kwh, rng) for _ in range(self.fleet)
        )
        self.snapshot_active = True
        return self.fleet

    def release(self) -> None:
        """Drop the fleet snapshot once normal supply returns."""
        self._close_discharge_run()
        self.fleet = 0
        self.stored_kwh = 0.0
        self.snapshot_active = False

    # -- aggregated battery limits ------------------------------------------

    @property
    def power_limit_mw(self) -> float:
        return self.fleet * self.charging_kw / 1000.0

    @property
    def floor_kwh(self) -> float:
        return self.fleet * self.soc.soc_min * self.ev_capacity_kwh

    @property
    def ceiling_kwh(self) -> float:
        return self.fleet * self.soc.soc_max * self.ev_capacity_kwh

    def max_discharge_mw(self, dt_hours: float) -> float:
        if not (self.snapshot_active and self.v2g_enabled):
            return 0.0
        energy_limited = (self.stored_kwh - self.floor_kwh) / 1000.0 / dt_hours
        return max(0.0, min(self.power_limit_mw, energy_limited))

    def charge_want_mw(self, dt_hours: float) -> float:
        """Power the fleet would draw right now if supply were available."""
        if not self.snapshot_active:
            return 0.0
        headroom = (self.ceiling_kwh - self.stored_kwh) / 1000.0 / dt_hours
        return max(0.0, min(self.power_limit_mw, headroom))

    def step(self, balance_mw: float, dt_hours: float) -> float:
        """One increment of the fault procedure; returns the exchange.

        ``balance_mw`` is the network deficit seen by the park
        (demand minus committed generation; positive means the island
        is short of supply).  Positive return = discharge to the grid.
        Accumulators for unserved demand, V2G use and activation counts
        are updated here.
        """
        if dt_hours <= 0:
            raise ValueError("dt must be positive")
        want = self.charge_want_mw(dt_hours)
        exchange = 0.0
        if balance_mw > _POWER_TOL_MW and self.v2g_enabled:
            exchange = min(self.max_discharge_mw(dt_hours), balance_mw)
            if exchange > _POWER_TOL_MW:
                self.apply_discharge(exchange, dt_hours)
        elif balance_mw < -_POWER_TOL_MW:
            exchange = -min(self.charge_want_mw(dt_hours), -balance_mw)
            if exchange < -_POWER_TOL_MW:
                self.apply_charge(-exchange, dt_hours)
        self.record_outage_increment(want, max(0.0, -min(exchange, 0.0)), max(exchange, 0.0), dt_hours)
        return exchange

    # -- state mutation (engine applies dispatched power here) --------------

    def apply_discharge(self, power_mw: float, dt_hours: float) -> None:
        if power_mw <= _POWER_TOL_MW:
            return
        self.stored_kwh -= power_mw * 1000.0 * dt_hours
        self.stored_kwh = max(self.stored_kwh, 0.0)
        self.discharged_kwh += power_mw * 1000.0 * dt_hours

    def apply_charge(self, power_mw: float, dt_hours: float) -> None:
        if power_mw <= _POWER_TOL_MW:
            return
        self.stored_kwh += power_mw * 1000.0 * dt_hours
        self.charged_kwh += power_mw * 1000.0 * dt_hours

    def record_outage_increment(
        self, want_mw: float, charged_mw: float, discharged_mw: float, dt_hours: float
    ) -> None:
        """Update the per-iteration accumulators for one fault increment.

        Unserved EV demand is the charge want not met plus anything
        discharged on top (a discharging car both misses its charge and
        gives energy away, so both add to demand not served).
        """
        unmet = max(0.0, want_mw - charged_mw)
        affected = unmet > 1e-9 or discharged_mw > 1e-9
        if affected:
            self.outage_h += dt_hours
            self.unmet_charge_kwh += unmet * 1000.0 * dt_hours
        if discharged_mw > 1e-9:
            self.v2g_h += dt_hours
            if self.fleet > 0:
                fraction = min(1.0, discharged_mw / self.power_limit_mw)
            else:
                fraction = 0.0
            self._in_discharge_run = True
            self._run_peak_fraction = max(self._run_peak_fraction, fraction)
        else:
            self._close_discharge_run()

    def _close_discharge_run(self) -> None:
        if self._in_discharge_run:
            self.rho += self._run_peak_fraction
            self._in_discharge_run = False
            self._run_peak_fraction = 0.0

    @property
    def ev_demand_kwh(self) -> float:
        """Unserved EV energy: missed charging plus discharged energy."""
        return self.unmet_charge_kwh + self.discharged_kwh

    def reset_accumulators(self) -> None:
        self.release()
        self.outage_h = 0.0
        self.v2g_h = 0.0
        self.charged_kwh = 0.0
        self.discharged_kwh = 0.0
        self.unmet_charge_kwh = 0.0
        self.rho = 0.0
