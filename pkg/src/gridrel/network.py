"""Radial network model: buses, lines, switchgear and sub-system logic.

The network is a tree per distribution system when healthy.  Failed
lines are treated as open circuits; fault isolation opens the nearest
disconnectors between the fault and the rest of the network so the
feeder breaker can stay closed for the healthy part.  Downstream
portions keep operating as islands if they hold local sources.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Iterable, Optional

from .agents import Battery, EvPark

LINE_OPERATIONAL = "operational"
LINE_FAILED = "failed"


@dataclass
class Bus:
    """A network node with its load point data."""

    id: int
    name: str = ""
    system: str = "ds1"
    customers: int = 0
    households: int = 0
    load_mw: float = 0.0
    load_mvar: float = 0.0
    profile: str = "flat"
    shed_cost: float = 1.0
    coords: Optional[tuple[float, float]] = None

    def __post_init__(self):
        if not self.name:
            self.name = f"B{self.id}"
        if self.customers < 0:
            raise ValueError(f"bus {self.id}: customers must be >= 0")
        if self.shed_cost <= 0:
            raise ValueError(f"bus {self.id}: shed_cost must be > 0")
        if self.load_mw < 0 or self.load_mvar < 0:
            raise ValueError(f"bus {self.id}: nominal load must be >= 0")


@dataclass
class Line:
    """A branch between two buses, the only failing component type."""

    id: str
    from_bus: int
    to_bus: int
    length_km: float = 1.0
    r_ohm: float = 0.0
    x_ohm: float = 0.0
    capacity_mw: float = 10.0
    failure_rate_per_year_km: float = 0.0
    repair_model: str = "default"
    state: str = LINE_OPERATIONAL
    remaining_repair_h: float = 0.0

    def __post_init__(self):
        if self.length_km <= 0:
            raise ValueError(f"line {self.id}: length must be > 0")
        if self.capacity_mw <= 0:
            raise ValueError(f"line {self.id}: capacity must be > 0")
        if self.failure_rate_per_year_km < 0:
            raise ValueError(f"line {self.id}: failure rate must be >= 0")

    @property
    def failed(self) -> bool:
        return self.state == LINE_FAILED

    def fail(self, repair_hours: float) -> None:
        if repair_hours <= 0:
            raise ValueError("repair time must be positive")
        self.state = LINE_FAILED
        self.remaining_repair_h = repair_hours

    def repair(self) -> None:
        self.state = LINE_OPERATIONAL
        self.remaining_repair_h = 0.0


DISCONNECTOR = "disconnector"
CIRCUIT_BREAKER = "circuit_breaker"


@dataclass
class Switch:
    """A disconnector or circuit breaker sitting on one end of a line."""

    id: str
    kind: str
    line_id: str
    end: str  # "from" or "to"
    normally_open: bool = False
    open: bool = False

    def __post_init__(self):
        if self.kind not in (DISCONNECTOR, CIRCUIT_BREAKER):
            raise ValueError(f"switch {self.id}: unknown kind {self.kind!r}")
        if self.end not in ("from", "to"):
            raise ValueError(f"switch {self.id}: end must be 'from' or 'to'")
        self.open = self.open or self.normally_open


@dataclass
class Generator:
    """A dispatchable source; the slack models the overlying grid."""

    id: str
    bus: int
    p_min_mw: float = 0.0
    p_max_mw: float = 0.0
    is_slack: bool = False

    def __post_init__(self):
        if self.p_min_mw > self.p_max_mw:
            raise ValueError(f"generator {self.id}: p_min > p_max")


@dataclass
class SubSystem:
    """A connected component over closed, operational lines."""

    buses: tuple[int, ...]
    lines: tuple[str, ...]
    has_slack: bool = False
    slack_bus: Optional[int] = None
    generator_buses: tuple[int, ...] = ()
    battery_buses: tuple[int, ...] = ()
    ev_park_buses: tuple[int, ...] = ()
    dead: bool = False

    def __contains__(self, bus_id: int) -> bool:
        return bus_id in self.buses


@dataclass
class RadialViolation:
    """Why a network is not operating radially."""

    cycles: list[list[int]] = field(default_factory=list)
    unreachable: list[int] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.cycles and not self.unreachable

    def describe(self) -> str:
        parts = []
        for cyc in self.cycles:
            parts.append("cycle through buses {" + ", ".join(map(str, cyc)) + "}")
        if self.unreachable:
            parts.append(
                "buses unreachable from slack: " + ", ".join(map(str, self.unreachable))
            )
        return "; ".join(parts) if parts else "radial"


@dataclass
class IsolationResult:
    """Outcome of sectioning one failed line.

    ``opened`` lists devices opened by the sectioning; ``dead_buses``
    are buses left galvanically tied to the fault (no disconnector
    bounded them), which stay de-energized until the repair completes.
    """

    line_id: str
    opened: tuple[str, ...]
    dead_buses: frozenset[int] = frozenset()

    @property
    def isolated(self) -> bool:
        return not self.dead_buses


class PowerNetwork:
    """The full model: topology, switchgear state and attached sources."""

    def __init__(
        self,
        buses: Iterable[Bus],
        lines: Iterable[Line],
        switches: Iterable[Switch] = (),
        generators: Iterable[Generator] = (),
        batteries: dict[int, Battery] | None = None,
        ev_parks: dict[int, EvPark] | None = None,
        name: str = "network",
        s_base_mva: float = 10.0,
        v_base_kv: float = 12.66,
    ):
        self.name = name
        self.s_base_mva = s_base_mva
        self.v_base_kv = v_base_kv
        self.buses: dict[int, Bus] = {}
        for bus in buses:
            if bus.id in self.buses:
                raise ValueError(f"duplicate bus id {bus.id}")
            self.buses[bus.id] = bus
        self.lines: dict[str, Line] = {}
        for line in lines:
            if line.id in self.lines:
                raise ValueError(f"duplicate line id {line.id}")
            if line.from_bus not in self.buses or line.to_bus not in self.buses:
                raise ValueError(f"line {line.id} references unknown bus")
            self.lines[line.id] = line
        self.switches: dict[str, Switch] = {}
        for sw in switches:
            if sw.id in self.switches:
                raise ValueError(f"duplicate switch id {sw.id}")
            if sw.line_id not in self.lines:
                raise ValueError(f"switch {sw.id} references unknown line {sw.line_id}")
            self.switches[sw.id] = sw
        self.generators: list[Generator] = list(generators)
        for gen in self.generators:
            if gen.bus not in self.buses:
                raise ValueError(f"generator {gen.id} references unknown bus")
        self.batteries: dict[int, Battery] = dict(batteries or {})
        self.ev_parks: dict[int, EvPark] = dict(ev_parks or {})
        for bus_id in list(self.batteries) + list(self.ev_parks):
            if bus_id not in self.buses:
                raise ValueError(f"attachment references unknown bus {bus_id}")

        slacks = [g for g in self.generators if g.is_slack]
        if len(slacks) > 1:
            raise ValueError("at most one slack generator supported per network")
        self.slack_bus: Optional[int] = slacks[0].bus if slacks else None

        # switches indexed by (line, end) for isolation walks
        self._switch_at: dict[tuple[str, str], Switch] = {}
        for sw in self.switches.values():
            key = (sw.line_id, sw.end)
            if key in self._switch_at:
                raise ValueError(f"two switches on the same end of line {sw.line_id}")
            self._switch_at[key] = sw

    # -- topology helpers -------------------------------------------------

    def switch_on(self, line_id: str, end: str) -> Optional[Switch]:
        return self._switch_at.get((line_id, end))

    def line_is_closed(self, line: Line) -> bool:
        """Conducting: operational and no open switch on either end."""
        if line.failed:
            return False
        for end in ("from", "to"):
            sw = self._switch_at.get((line.id, end))
            if sw is not None and sw.open:
                return False
        return True

    def closed_adjacency(self) -> dict[int, list[tuple[int, str]]]:
        adj: dict[int, list[tuple[int, str]]] = {b: [] for b in self.buses}
        for line in self.lines.values():
            if self.line_is_closed(line):
                adj[line.from_bus].append((line.to_bus, line.id))
                adj[line.to_bus].append((line.from_bus, line.id))
        return adj

    def line_ends(self, line_id: str) -> tuple[int, int]:
        line = self.lines[line_id]
        return line.from_bus, line.to_bus


def validate_radial(net: PowerNetwork) -> RadialViolation:
    """Check the healthy-state topology is a tree reaching every bus.

    Uses the normal switch state (tie switches open) and assumes all
    lines operational; live fault state is ignored on purpose.
    """
    adj: dict[int, list[tuple[int, str]]] = {b: [] for b in net.buses}
    for line in net.lines.values():
        is_open = any(
            net.switch_on(line.id, end) is not None and net.switch_on(line.id, end).normally_open
            for end in ("from", "to")
        )
        if not is_open:
            adj[line.from_bus].append((line.to_bus, line.id))
            adj[line.to_bus].append((line.from_bus, line.id))

    violation = RadialViolation()
    visited: dict[int, Optional[int]] = {}
    roots = [net.slack_bus] if net.slack_bus is not None else []
    order = roots + [b for b in sorted(net.buses) if b not in roots]
    for start in order:
        if start in visited:
            continue
        if visited and start not in visited:
            # a second component: only the slack's component counts as reachable
            pass
        visited[start] = None
        stack = [(start, None)]
        parent = {start: None}
        while stack:
            bus, via = stack.pop()
            for nxt, line_id in adj[bus]:
                if line_id == via:
                    continue
                if nxt in parent:
                    cycle = _trace_cycle(parent, bus, nxt)
                    if sorted(cycle) not in [sorted(c) for c in violation.cycles]:
                        violation.cycles.append(cycle)
                    continue
                parent[nxt] = bus
                visited[nxt] = bus
                stack.append((nxt, line_id))

    if net.slack_bus is not None:
        reachable = _component_of(adj, net.slack_bus)
        violation.unreachable = sorted(b for b in net.buses if b not in reachable)
    return violation


def _trace_cycle(parent: dict[int, Optional[int]], a: int, b: int) -> list[int]:
    path_a = []
    node: Optional[int] = a
    while node is not None:
        path_a.append(node)
        node = parent.get(node)
    seen = set(path_a)
    path_b = []
    node = b
    while node not in seen:
        path_b.append(node)
        node = parent.get(node)
    join = node
    cycle = path_a[: path_a.index(join) + 1] + list(reversed(path_b))
    return cycle


def _component_of(adj: dict[int, list[tuple[int, str]]], start: int) -> set[int]:
    seen = {start}
    stack = [start]
    while stack:
        bus = stack.pop()
        for nxt, _ in adj[bus]:
            if nxt not in seen:
                seen.add(nxt)
                stack.append(nxt)
    return seen


def find_sub_systems(net: PowerNetwork) -> list[SubSystem]:
    """Connected components over closed, operational lines.

    Every bus lands in exactly one sub-system.  Components are listed
    with the slack-holding one first, then by smallest member bus id.
    """
    adj = net.closed_adjacency()
    assigned: set[int] = set()
    comps: list[SubSystem] = []
    for start in sorted(net.buses):
        if start in assigned:
            continue
        members = sorted(_component_of(adj, start))
        assigned.update(members)
        member_set = set(members)
        line_ids = sorted(
            line.id
            for line in net.lines.values()
            if net.line_is_closed(line) and line.from_bus in member_set
        )
        gens = tuple(sorted(g.bus for g in net.generators if g.bus in member_set and not g.is_slack))
        comps.append(
            SubSystem(
                buses=tuple(members),
                lines=tuple(line_ids),
                has_slack=net.slack_bus in member_set,
                slack_bus=net.slack_bus if net.slack_bus in member_set else None,
                generator_buses=gens,
                battery_buses=tuple(sorted(b for b in net.batteries if b in member_set)),
                ev_park_buses=tuple(sorted(b for b in net.ev_parks if b in member_set)),
            )
        )
    comps.sort(key=lambda s: (not s.has_slack, s.buses[0]))
    return comps


def isolate_fault(net: PowerNetwork, line_id: str) -> IsolationResult:
    """Open the nearest disconnectors bounding a failed line.

    If the line carries its own disconnector(s) those are opened and the
    fault is fully sectioned.  Otherwise the walk moves outward from
    each unsealed line end, opening the nearest disconnector on each
    adjacent path; buses reached before any disconnector stay tied to
    the fault and are reported de-energized until repair.
    """
    line = net.lines[line_id]
    if not line.failed:
        raise ValueError(f"line {line_id} is not failed; nothing to isolate")

    opened: list[str] = []
    own = [net.switch_on(line_id, end) for end in ("from", "to")]
    own_switches = [sw for sw in own if sw is not None and sw.kind == DISCONNECTOR]

    if own_switches:
        for sw in own_switches:
            if not sw.open:
                sw.open = True
                opened.append(sw.id)
        return IsolationResult(line_id=line_id, opened=tuple(opened), dead_buses=frozenset())

    # No disconnector on the line itself: bound the fault through the
    # neighbours of each end bus.  Anything reached before a
    # disconnector is tied to the fault.
    dead: set[int] = set()
    for end_bus in (line.from_bus, line.to_bus):
        seen = {end_bus}
        stack = [end_bus]
        while stack:
            bus = stack.pop()
            dead.add(bus)
            for other in net.lines.values():
                if other.id == line_id or other.failed:
                    continue
                if bus == other.from_bus:
                    near_end, far_bus = "from", other.to_bus
                elif bus == other.to_bus:
                    near_end, far_bus = "to", other.from_bus
                else:
                    continue
                sw = net.switch_on(other.id, near_end)
                if sw is not None and sw.kind == DISCONNECTOR:
                    if not sw.open:
                        sw.open = True
                        opened.append(sw.id)
                    continue
                far_sw = net.switch_on(other.id, "to" if near_end == "from" else "from")
                if far_sw is not None and far_sw.kind == DISCONNECTOR:
                    if not far_sw.open:
                        far_sw.open = True
                        opened.append(far_sw.id)
                    dead.add(far_bus)
                    continue
                if far_bus not in seen:
                    seen.add(far_bus)
                    stack.append(far_bus)
    return IsolationResult(line_id=line_id, opened=tuple(sorted(opened)), dead_buses=frozenset(dead))


def downstream_buses(net: PowerNetwork, line_id: str) -> set[int]:
    """Buses fed through ``line_id`` in the healthy radial state.

    Orientation comes from the slack: the end of the line farther from
    the slack is the downstream side.
    """
    if net.slack_bus is None:
        raise ValueError("network has no slack to orient from")
    adj: dict[int, list[tuple[int, str]]] = {b: [] for b in net.buses}
    for line in net.lines.values():
        is_open = any(
            net.switch_on(line.id, end) is not None and net.switch_on(line.id, end).normally_open
            for end in ("from", "to")
        )
        if not is_open:
            adj[line.from_bus].append((line.to_bus, line.id))
            adj[line.to_bus].append((line.from_bus, line.id))
    target = net.lines[line_id]
    # BFS from slack avoiding the target line; unreached end is downstream
    seen = {net.slack_bus}
    stack = [net.slack_bus]
    while stack:
        bus = stack.pop()
        for nxt, lid in adj[bus]:
            if lid == line_id or nxt in seen:
                continue
            seen.add(nxt)
            stack.append(nxt)
    down_root = target.to_bus if target.to_bus not in seen else target.from_bus
    if down_root in seen:
        return set()
    comp = {down_root}
    stack = [down_root]
    while stack:
        bus = stack.pop()
        for nxt, lid in adj[bus]:
            if lid == line_id or nxt in comp:
                continue
            comp.add(nxt)
            stack.append(nxt)
    return comp


def copy_network(net: PowerNetwork) -> PowerNetwork:
    """Independent deep copy for one Monte Carlo iteration."""
    return PowerNetwork(
        buses=[replace(b) for b in net.buses.values()],
        lines=[replace(l) for l in net.lines.values()],
        switches=[replace(s) for s in net.switches.values()],
        generators=[replace(g) for g in net.generators],
        batteries={b: bat.clone() for b, bat in net.batteries.items()},
        ev_parks={b: park.clone() for b, park in net.ev_parks.items()},
        name=net.name,
        s_base_mva=net.s_base_mva,
        v_base_kv=net.v_base_kv,
    )
