"""Sequential Monte Carlo driver.

One iteration simulates a full year in fixed increments.  Each
increment with an active failure runs the fault procedure: isolate new
faults, split the network into sub-systems, dispatch batteries and EV
parks against the local balance, shed remaining deficit at minimum cost
and solve the load flow for the physical operating point.  Healthy
stretches carry no history, so the driver jumps between pre-drawn
failure candidates instead of idling through them.

Iterations are independent: each works on a fresh network copy and owns
its random substreams, so runs parallelise across processes without
changing any result.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from functools import partial
from typing import Optional

import numpy as np

from . import loadshed
from .indices import AggregateReport, IndexReport, aggregate, compute_report
from .netfile import NetworkDataset
from .network import PowerNetwork, SubSystem, find_sub_systems, isolate_fault
from .powerflow import FlowSolution, Injection, island_reference, solve_fbs
from .stochastic import (
    HOURS_PER_YEAR,
    RandomStream,
    TruncatedNormalSpec,
    sample_failure_increments,
    sample_truncated_normal,
)

_SHED_TOL_MW = 1e-9
_REPAIR_DONE_TOL_H = 1e-9
_CAP_TOL_MW = 1e-6


@dataclass(frozen=True)
class SimulationConfig:
    """One simulation campaign's knobs."""

    iterations: int = 3000
    increment_min: float = 5.0
    horizon_h: float = HOURS_PER_YEAR
    seed: int = 2022
    v2g: bool = False
    batteries: bool = False
    ev_share: Optional[float] = None
    charging_kw: Optional[float] = None
    repair_loc_h: Optional[float] = None
    repair_scale_h: Optional[float] = None
    workers: int = 1
    trace: bool = False

    def __post_init__(self):
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if self.increment_min <= 0:
            raise ValueError("increment must be positive")
        n = self.horizon_h * 60.0 / self.increment_min
        if abs(n - round(n)) > 1e-9:
            raise ValueError("increment must divide the horizon")

    @property
    def dt_h(self) -> float:
        return self.increment_min / 60.0

    @property
    def n_increments(self) -> int:
        return int(round(self.horizon_h / self.dt_h))


@dataclass(frozen=True)
class FaultEvent:
    line_id: str
    start_h: float
    duration_h: float


@dataclass
class TraceRow:
    """One faulted increment of one sub-system, for the audit trace."""

    t_h: float
    sub_buses: tuple[int, ...]
    kind: str
    demand_mw: float
    shed_mw: float
    generation_mw: float
    discharge_mw: float
    charge_mw: float
    loss_mw: float
    residual_pu: float


@dataclass
class IterationHistory:
    """Per-load-point and per-EV-park accumulators for one year."""

    iteration: int
    horizon_h: float
    bus_interruptions: dict[int, int] = field(default_factory=dict)
    bus_outage_h: dict[int, float] = field(default_factory=dict)
    bus_ens_mwh: dict[int, float] = field(default_factory=dict)
    park_outage_h: dict[int, float] = field(default_factory=dict)
    park_v2g_h: dict[int, float] = field(default_factory=dict)
    park_ev_demand_mwh: dict[int, float] = field(default_factory=dict)
    park_charged_mwh: dict[int, float] = field(default_factory=dict)
    park_discharged_mwh: dict[int, float] = field(default_factory=dict)
    park_rho: dict[int, float] = field(default_factory=dict)
    park_fleet_weight: dict[int, int] = field(default_factory=dict)
    events: list[FaultEvent] = field(default_factory=list)
    faulted_increments: int = 0
    max_balance_residual_pu: float = 0.0
    trace_rows: list[TraceRow] = field(default_factory=list)

    @property
    def system_ens_mwh(self) -> float:
        return sum(self.bus_ens_mwh.values())


@dataclass
class _ActiveFault:
    line_id: str
    start_incr: int
    opened: tuple[str, ...]
    dead_buses: frozenset[int]


class _IterationRunner:
    """State machine for one Monte Carlo iteration."""

    def __init__(self, dataset: NetworkDataset, config: SimulationConfig, iteration: int):
        self.dataset = dataset
        self.config = config
        self.iteration = iteration
        self.dt = config.dt_h
        self.net: PowerNetwork = dataset.build_network(
            ev_share=config.ev_share,
            charging_kw=config.charging_kw,
            v2g=config.v2g,
            with_batteries=config.batteries,
        )
        self.availability = dataset.availability_for(config.ev_share)
        self.repair_models = {
            name: TruncatedNormalSpec(
                loc=config.repair_loc_h if config.repair_loc_h is not None else spec.loc,
                scale=config.repair_scale_h if config.repair_scale_h is not None else spec.scale,
                lower=spec.lower,
                upper=spec.upper,
            )
            for name, spec in dataset.repair_models.items()
        }
        self.stream = RandomStream(config.seed).child(iteration)
        self._repair_rngs: dict[str, np.random.Generator] = {}
        self._park_rngs: dict[int, np.random.Generator] = {}

        self.history = IterationHistory(iteration=iteration, horizon_h=config.horizon_h)
        for bus in self.net.buses.values():
            self.history.bus_interruptions[bus.id] = 0
            self.history.bus_outage_h[bus.id] = 0.0
            self.history.bus_ens_mwh[bus.id] = 0.0
        for bus_id, park in self.net.ev_parks.items():
            self.history.park_fleet_weight[bus_id] = park.max_fleet

        self.active_faults: dict[str, _ActiveFault] = {}
        self.subs: list[SubSystem] = find_sub_systems(self.net)
        self._bus_shed_state: dict[int, bool] = {b: False for b in self.net.buses}
        self._islanded_parks: set[int] = set()

        # per-bus demand shape cache for fast profile lookups
        self._bus_cache = [
            (b.id, b.load_mw, b.load_mvar, b.profile) for b in self.net.buses.values()
        ]

    # -- random substreams -------------------------------------------------

    def _repair_rng(self, line_id: str) -> np.random.Generator:
        if line_id not in self._repair_rngs:
            self._repair_rngs[line_id] = self.stream.child(f"repair:{line_id}").generator()
        return self._repair_rngs[line_id]

    def _park_rng(self, bus_id: int) -> np.random.Generator:
        if bus_id not in self._park_rngs:
            self._park_rngs[bus_id] = self.stream.child(f"park:{bus_id}").generator()
        return self._park_rngs[bus_id]

    def failure_candidates(self) -> list[tuple[int, str]]:
        """Pre-drawn per-increment Bernoulli failure candidates, time ordered."""
        n = self.config.n_increments
        candidates: list[tuple[int, str]] = []
        for line_id in sorted(self.net.lines):
            line = self.net.lines[line_id]
            if line.failure_rate_per_year_km <= 0:
                continue
            rng = self.stream.child(f"fail:{line_id}").generator()
            incs = sample_failure_increments(
                line.failure_rate_per_year_km, line.length_km, self.dt, n, rng
            )
            candidates.extend((int(i), line_id) for i in incs)
        candidates.sort()
        return candidates

    # -- profile demand ----------------------------------------------------

    def demands_at(self, t_h: float) -> dict[int, Injection]:
        profiles = self.dataset.profiles
        out: dict[int, Injection] = {}
        for bus_id, p_nom, q_nom, shape in self._bus_cache:
            frac = profiles.fraction(shape, t_h) if p_nom or q_nom else 1.0
            out[bus_id] = Injection(
                bus=bus_id, p_demand_mw=p_nom * frac, q_demand_mvar=q_nom * frac
            )
        return out

    # -- topology transitions ----------------------------------------------

    def _dead_bus_set(self) -> frozenset[int]:
        dead: set[int] = set()
        for fault in self.active_faults.values():
            dead.update(fault.dead_buses)
        return frozenset(dead)

    def refresh_topology(self, t_h: float) -> None:
        """Recompute sub-systems and manage fleet snapshots on change."""
        self.subs = find_sub_systems(self.net)
        islanded_now: set[int] = set()
        for sub in self.subs:
            if sub.has_slack:
                continue
            islanded_now.update(sub.ev_park_buses)
        for bus_id in sorted(islanded_now - self._islanded_parks):
            park = self.net.ev_parks[bus_id]
            park.draw_fleet(t_h % 24.0, self.availability, self._park_rng(bus_id))
        for bus_id in sorted(self._islanded_parks - islanded_now):
            self.net.ev_parks[bus_id].release()
        self._islanded_parks = islanded_now

    def start_fault(self, incr: int, line_id: str) -> None:
        line = self.net.lines[line_id]
        spec = self.repair_models[line.repair_model]
        repair_h = sample_truncated_normal(spec, self._repair_rng(line_id))
        line.fail(repair_h)
        isolation = isolate_fault(self.net, line_id)
        self.active_faults[line_id] = _ActiveFault(
            line_id=line_id,
            start_incr=incr,
            opened=isolation.opened,
            dead_buses=isolation.dead_buses,
        )

    def finish_repairs(self, incr: int) -> bool:
        """Count down repair clocks; restore and reclose when done."""
        changed = False
        for line_id in sorted(self.active_faults):
            line = self.net.lines[line_id]
            line.remaining_repair_h -= self.dt
            if line.remaining_repair_h <= _REPAIR_DONE_TOL_H:
                fault = self.active_faults.pop(line_id)
                line.repair()
                still_open = {
                    dev for other in self.active_faults.values() for dev in other.opened
                }
                for dev in fault.opened:
                    if dev not in still_open:
                        self.net.switches[dev].open = self.net.switches[dev].normally_open
                duration = (incr - fault.start_incr + 1) * self.dt
                self.history.events.append(
                    FaultEvent(
                        line_id=line_id,
                        start_h=fault.start_incr * self.dt,
                        duration_h=duration,
                    )
                )
                changed = True
        return changed

    # -- per-increment fault procedure --------------------------------------

    def process_faulted_increment(self, incr: int) -> None:
        t_h = incr * self.dt
        injections = self.demands_at(t_h)
        dead = self._dead_bus_set()
        self.history.faulted_increments += 1
        shed_by_bus: dict[int, float] = {}
        for sub in self.subs:
            if sub.has_slack:
                self._process_slack_sub(sub, injections, shed_by_bus, dead, t_h)
            elif dead & set(sub.buses):
                self._process_unserved_sub(sub, injections, shed_by_bus, t_h, kind="dead")
            else:
                self._process_island_sub(sub, injections, shed_by_bus, t_h)
        self._account_bus_shed(shed_by_bus, injections)

    def _record_trace(
        self,
        sub: SubSystem,
        kind: str,
        t_h: float,
        demand: float,
        shed: float,
        gen: float,
        dis: float,
        charge: float,
        loss: float,
    ) -> None:
        residual = abs(gen + dis - charge - demand + shed - loss) / self.net.s_base_mva
        self.history.max_balance_residual_pu = max(
            self.history.max_balance_residual_pu, residual
        )
        if self.config.trace:
            self.history.trace_rows.append(
                TraceRow(
                    t_h=t_h,
                    sub_buses=sub.buses,
                    kind=kind,
                    demand_mw=demand,
                    shed_mw=shed,
                    generation_mw=gen,
                    discharge_mw=dis,
                    charge_mw=charge,
                    loss_mw=loss,
                    residual_pu=residual,
                )
            )

    def _process_slack_sub(
        self,
        sub: SubSystem,
        injections: dict[int, Injection],
        shed_by_bus: dict[int, float],
        dead: frozenset[int],
        t_h: float,
    ) -> None:
        """Slack-connected part: recharge batteries, check capacity, shed if forced."""
        if dead & set(sub.buses):
            # degenerate isolation failure reached the slack: everything here is down
            self._process_unserved_sub(sub, injections, shed_by_bus, t_h, kind="dead")
            return
        local = {b: injections[b] for b in sub.buses}
        charge_mw = 0.0
        for bus_id in sub.battery_buses:
            battery = self.net.batteries[bus_id]
            absorbed = -battery.exchange(-battery.max_charge_mw(self.dt), self.dt)
            if absorbed > 0:
                inj = local[bus_id]
                local[bus_id] = replace(inj, p_demand_mw=inj.p_demand_mw + absorbed)
                charge_mw += absorbed
        flow = solve_fbs(self.net, sub, local)
        shed: dict[int, float] = {}
        if self._caps_violated(sub, flow):
            problem = loadshed.build_problem(self.net, sub, local)
            solution = loadshed.solve_shed(problem)
            shed = {b: v for b, v in solution.shed_mw.items() if v > _SHED_TOL_MW}
            post = {
                b: replace(inj, p_demand_mw=max(0.0, inj.p_demand_mw - shed.get(b, 0.0)))
                for b, inj in local.items()
            }
            flow = solve_fbs(self.net, sub, post)
        for bus_id, value in shed.items():
            shed_by_bus[bus_id] = shed_by_bus.get(bus_id, 0.0) + value
        demand = sum(inj.p_demand_mw for inj in local.values()) - charge_mw
        self._record_trace(
            sub,
            "slack",
            t_h,
            demand=demand,
            shed=sum(shed.values()),
            gen=flow.root_p_mw,
            dis=0.0,
            charge=charge_mw,
            loss=flow.total_loss_mw,
        )

    def _process_unserved_sub(
        self,
        sub: SubSystem,
        injections: dict[int, Injection],
        shed_by_bus: dict[int, float],
        t_h: float,
        kind: str,
    ) -> None:
        """Fully de-energized sub-system: everything is shed, parks starve."""
        demand = 0.0
        for bus_id in sub.buses:
            p = injections[bus_id].p_demand_mw
            demand += p
            if p > _SHED_TOL_MW:
                shed_by_bus[bus_id] = shed_by_bus.get(bus_id, 0.0) + p
        for bus_id in sub.ev_park_buses:
            park = self.net.ev_parks[bus_id]
            want = park.charge_want_mw(self.dt)
            park.record_outage_increment(want, 0.0, 0.0, self.dt)
        self._record_trace(
            sub, kind, t_h, demand=demand, shed=demand, gen=0.0, dis=0.0, charge=0.0, loss=0.0
        )

    def _process_island_sub(
        self,
        sub: SubSystem,
        injections: dict[int, Injection],
        shed_by_bus: dict[int, float],
        t_h: float,
    ) -> None:
        """Island with possible local sources: dispatch, shed the rest.

        Sources commit against the island deficit in order (batteries
        first, then V2G parks, ascending host-bus id).  When the load is
        fully covered, leftover source headroom charges the EV fleets.
        The reference source absorbs line losses on top of its
        commitment, so conservation holds exactly per increment.
        """
        net = self.net
        demand = sum(injections[b].p_demand_mw for b in sub.buses)

        offers: list[tuple[tuple[str, int], float]] = []
        for bus_id in sub.battery_buses:
            offers.append((("battery", bus_id), net.batteries[bus_id].max_discharge_mw(self.dt)))
        for bus_id in sub.ev_park_buses:
            offers.append((("park", bus_id), net.ev_parks[bus_id].max_discharge_mw(self.dt)))
        committed: dict[tuple[str, int], float] = {key: 0.0 for key, _ in offers}
        remaining = demand
        for key, offer in offers:
            take = min(offer, max(0.0, remaining))
            committed[key] = take
            remaining -= take

        ref_bus = island_reference(net, sub)
        if ref_bus is None:
            self._process_unserved_sub(sub, injections, shed_by_bus, t_h, kind="island")
            return
        ref_key = ("battery", ref_bus) if ref_bus in sub.battery_buses else ("park", ref_bus)

        # surplus charging: leftover headroom feeds parks that did not discharge
        park_charge: dict[int, float] = {}
        if remaining <= _SHED_TOL_MW:
            headroom = {key: offer - committed[key] for key, offer in offers}
            for bus_id in sub.ev_park_buses:
                if committed.get(("park", bus_id), 0.0) > _SHED_TOL_MW:
                    continue
                park = net.ev_parks[bus_id]
                want = park.charge_want_mw(self.dt)
                if want <= _SHED_TOL_MW:
                    continue
                take = 0.0
                for key, _ in offers:
                    if key == ("park", bus_id):
                        continue
                    grab = min(headroom[key], want - take)
                    if grab > 0:
                        headroom[key] -= grab
                        committed[key] += grab
                        take += grab
                    if take >= want - _SHED_TOL_MW:
                        break
                if take > _SHED_TOL_MW:
                    park_charge[bus_id] = take

        def make_injections(shed: dict[int, float], dispatch: dict[tuple[str, int], float]):
            local = {}
            for bus_id in sub.buses:
                inj = injections[bus_id]
                p_after = max(0.0, inj.p_demand_mw - shed.get(bus_id, 0.0))
                q_after = inj.q_demand_mvar * (
                    p_after / inj.p_demand_mw if inj.p_demand_mw > 0 else 0.0
                )
                p_after += park_charge.get(bus_id, 0.0)
                p_gen = sum(
                    power
                    for key, power in dispatch.items()
                    if key[1] == bus_id and key != ref_key
                )
                local[bus_id] = Injection(
                    bus=bus_id, p_demand_mw=p_after, q_demand_mvar=q_after, p_gen_mw=p_gen
                )
            return local

        def lp_dispatch():
            problem = loadshed.build_problem(
                net, sub, {b: injections[b] for b in sub.buses}, committed
            )
            solution = loadshed.solve_shed(problem)
            shed = {b: v for b, v in solution.shed_mw.items() if v > _SHED_TOL_MW}
            dispatch = {gen.key: power for gen, power in zip(problem.gens, solution.gen_mw)}
            return shed, dispatch

        shed: dict[int, float] = {}
        dispatch = dict(committed)
        if remaining > _SHED_TOL_MW:
            shed, dispatch = lp_dispatch()

        if len(sub.buses) > 1:
            flow = solve_fbs(net, sub, make_injections(shed, dispatch), root=ref_bus)
            if self._caps_violated(sub, flow):
                # line limits bind: let the LP place the shed, then re-solve
                shed, dispatch = lp_dispatch()
                flow = solve_fbs(net, sub, make_injections(shed, dispatch), root=ref_bus)
            ref_actual = flow.root_p_mw
            loss = flow.total_loss_mw
        else:
            served = sum(
                max(0.0, injections[b].p_demand_mw - shed.get(b, 0.0)) for b in sub.buses
            ) + sum(park_charge.values())
            ref_actual = served - sum(p for key, p in dispatch.items() if key != ref_key)
            loss = 0.0

        # apply the physical dispatch to source states and accumulators
        total_discharge = 0.0
        charge_total = sum(park_charge.values())
        for bus_id in sub.battery_buses:
            key = ("battery", bus_id)
            power = ref_actual if key == ref_key else dispatch.get(key, 0.0)
            battery = net.batteries[bus_id]
            # raw update: the reference's loss top-up may graze the SoC
            # floor by a micro amount that Battery.exchange would clip
            battery.stored_mwh -= power * self.dt / battery.efficiency
            battery.discharged_mwh += power * self.dt
            total_discharge += power
        for bus_id in sub.ev_park_buses:
            key = ("park", bus_id)
            park = net.ev_parks[bus_id]
            power = ref_actual if key == ref_key else dispatch.get(key, 0.0)
            want = park.charge_want_mw(self.dt)
            charged = park_charge.get(bus_id, 0.0)
            park.apply_discharge(power, self.dt)
            park.apply_charge(charged, self.dt)
            park.record_outage_increment(want, charged, power, self.dt)
            total_discharge += power

        for bus_id, value in shed.items():
            shed_by_bus[bus_id] = shed_by_bus.get(bus_id, 0.0) + value
        self._record_trace(
            sub,
            "island",
            t_h,
            demand=demand,
            shed=sum(shed.values()),
            gen=0.0,
            dis=total_discharge,
            charge=charge_total,
            loss=loss,
        )

    def _caps_violated(self, sub: SubSystem, flow: FlowSolution) -> bool:
        for line_id in sub.lines:
            if abs(flow.p_flow_mw[line_id]) > self.net.lines[line_id].capacity_mw + _CAP_TOL_MW:
                return True
        return False

    def _account_bus_shed(
        self, shed_by_bus: dict[int, float], injections: dict[int, Injection]
    ) -> None:
        """Outage duration, energy and interruption events per load point."""
        for bus_id in self.net.buses:
            shed = shed_by_bus.get(bus_id, 0.0)
            is_shed = shed > _SHED_TOL_MW
            if is_shed:
                self.history.bus_ens_mwh[bus_id] += shed * self.dt
                self.history.bus_outage_h[bus_id] += self.dt
                if not self._bus_shed_state[bus_id]:
                    self.history.bus_interruptions[bus_id] += 1
            self._bus_shed_state[bus_id] = is_shed

    # -- top level -----------------------------------------------------------

    def run(self) -> IterationHistory:
        cfg = self.config
        n = cfg.n_increments
        candidates = self.failure_candidates()
        cand_pos = 0
        incr = 0
        last_healthy_incr = 0  # start of the current healthy stretch

        while incr < n:
            if not self.active_faults:
                # jump to the next failure candidate on an operational line
                while cand_pos < len(candidates) and (
                    candidates[cand_pos][0] < incr
                    or self.net.lines[candidates[cand_pos][1]].failed
                ):
                    cand_pos += 1
                if cand_pos >= len(candidates):
                    self._recharge_batteries((n - last_healthy_incr) * self.dt)
                    return self._finalize()
                next_incr = candidates[cand_pos][0]
                self._recharge_batteries((next_incr - last_healthy_incr) * self.dt)
                incr = next_incr

            topology_changed = False
            while (
                cand_pos < len(candidates)
                and candidates[cand_pos][0] == incr
            ):
                line_id = candidates[cand_pos][1]
                cand_pos += 1
                if not self.net.lines[line_id].failed:
                    self.start_fault(incr, line_id)
                    topology_changed = True
            if topology_changed:
                self.refresh_topology(incr * self.dt)

            self.process_faulted_increment(incr)

            if self.finish_repairs(incr):
                self.refresh_topology((incr + 1) * self.dt)
            incr += 1
            if not self.active_faults:
                last_healthy_incr = incr

        return self._finalize()

    def _recharge_batteries(self, span_h: float) -> None:
        """Healthy stretch: batteries refill from the grid at inverter rate."""
        if span_h <= 0:
            return
        for battery in self.net.batteries.values():
            battery.exchange(-battery.max_charge_mw(span_h), span_h)

    def _finalize(self) -> IterationHistory:
        for line_id, fault in sorted(self.active_faults.items()):
            # outage truncated by the end of the year
            duration = (self.config.n_increments - fault.start_incr) * self.dt
            self.history.events.append(
                FaultEvent(line_id=line_id, start_h=fault.start_incr * self.dt, duration_h=duration)
            )
        for bus_id, park in sorted(self.net.ev_parks.items()):
            park.release()
            self.history.park_outage_h[bus_id] = park.outage_h
            self.history.park_v2g_h[bus_id] = park.v2g_h
            self.history.park_ev_demand_mwh[bus_id] = park.ev_demand_kwh / 1000.0
            self.history.park_charged_mwh[bus_id] = park.charged_kwh / 1000.0
            self.history.park_discharged_mwh[bus_id] = park.discharged_kwh / 1000.0
            self.history.park_rho[bus_id] = park.rho
        self.history.events.sort(key=lambda e: (e.start_h, e.line_id))
        return self.history


def run_iteration(dataset: NetworkDataset, config: SimulationConfig, iteration: int) -> IterationHistory:
    """Simulate one year; deterministic in (config.seed, iteration)."""
    return _IterationRunner(dataset, config, iteration).run()


@dataclass
class MonteCarloResult:
    config: SimulationConfig
    reports: list[IndexReport]
    aggregate_report: AggregateReport
    histories: list[IterationHistory]
    convergence_ens: list[float]  # running mean of ENS per iteration

    @property
    def mean_ens(self) -> float:
        return self.convergence_ens[-1]


def _iteration_task(dataset: NetworkDataset, config: SimulationConfig, iteration: int):
    history = run_iteration(dataset, config, iteration)
    customers = {b.id: b.customers for b in dataset.buses}
    report = compute_report(history, customers)
    return history, report


def run_monte_carlo(dataset: NetworkDataset, config: SimulationConfig) -> MonteCarloResult:
    """Run all iterations, in order, optionally across worker processes.

    Results are collected by iteration index, so the outcome is
    identical for any worker count.
    """
    customers = {b.id: b.customers for b in dataset.buses}
    histories: list[IterationHistory] = []
    reports: list[IndexReport] = []
    if config.workers <= 1:
        for i in range(config.iterations):
            history = run_iteration(dataset, config, i)
            histories.append(history)
            reports.append(compute_report(history, customers))
    else:
        task = partial(_iteration_task, dataset, config)
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            chunk = max(1, config.iterations // (config.workers * 8))
            for history, report in pool.map(task, range(config.iterations), chunksize=chunk):
                histories.append(history)
                reports.append(report)

    running = []
    total = 0.0
    for i, rep in enumerate(reports, start=1):
        total += rep.ens_mwh
        running.append(total / i)
    return MonteCarloResult(
        config=config,
        reports=reports,
        aggregate_report=aggregate(reports),
        histories=histories,
        convergence_ens=running,
    )


def converged(result: MonteCarloResult, window: int, rel_tol: float) -> bool:
    """Cumulative-mean stability: range over the last ``window`` points."""
    trace = result.convergence_ens
    if len(trace) < window + 1:
        return False
    tail = trace[-window:]
    final = trace[-1]
    if final == 0:
        return max(tail) - min(tail) == 0
    return (max(tail) - min(tail)) / abs(final) < rel_tol
