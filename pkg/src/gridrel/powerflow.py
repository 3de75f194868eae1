"""Radial load flow by forward-backward sweep.

The backward sweep accumulates downstream demand plus line losses into
branch flows; the forward sweep updates complex bus voltages from the
root outward.  At the fixed point the solution satisfies the exact AC
equations of the radial feeder, so a converged sweep matches the
closed-form two-bus solution to numerical precision.
"""

from __future__ import annotations

import cmath
from dataclasses import dataclass
from typing import Optional

from .network import PowerNetwork, SubSystem

DEFAULT_TOLERANCE = 1e-6
DEFAULT_MAX_ITER = 50


@dataclass
class Injection:
    """Net power at a bus for one increment, in MW / MVAr."""

    bus: int
    p_demand_mw: float = 0.0
    q_demand_mvar: float = 0.0
    p_gen_mw: float = 0.0

    def __post_init__(self):
        if self.p_demand_mw < 0 or self.q_demand_mvar < 0:
            raise ValueError(f"bus {self.bus}: demands must be >= 0")


@dataclass
class FlowSolution:
    """Converged (or flagged) sweep result."""

    root_bus: int
    v_mag: dict[int, float]
    v_angle_rad: dict[int, float]
    p_flow_mw: dict[str, float]
    q_flow_mvar: dict[str, float]
    p_loss_mw: dict[str, float]
    q_loss_mvar: dict[str, float]
    root_p_mw: float
    root_q_mvar: float
    iterations: int
    converged: bool

    @property
    def total_loss_mw(self) -> float:
        return sum(self.p_loss_mw.values())


@dataclass
class _Tree:
    root: int
    parent_line: dict[int, str]
    parent_bus: dict[int, int]
    children: dict[int, list[tuple[int, str]]]
    order: list[int]  # root first, breadth-first


def _build_tree(net: PowerNetwork, sub: SubSystem, root: int) -> _Tree:
    adj: dict[int, list[tuple[int, str]]] = {b: [] for b in sub.buses}
    for line_id in sub.lines:
        line = net.lines[line_id]
        adj[line.from_bus].append((line.to_bus, line_id))
        adj[line.to_bus].append((line.from_bus, line_id))

    parent_line: dict[int, str] = {}
    parent_bus: dict[int, int] = {}
    children: dict[int, list[tuple[int, str]]] = {b: [] for b in sub.buses}
    order = [root]
    seen = {root}
    head = 0
    while head < len(order):
        bus = order[head]
        head += 1
        for nxt, line_id in adj[bus]:
            if nxt in seen:
                if parent_line.get(bus) != line_id:
                    raise ValueError("sub-system is not a tree (cycle detected)")
                continue
            seen.add(nxt)
            parent_line[nxt] = line_id
            parent_bus[nxt] = bus
            children[bus].append((nxt, line_id))
            order.append(nxt)
    if len(order) != len(sub.buses):
        raise ValueError("sub-system is not connected")
    return _Tree(root, parent_line, parent_bus, children, order)


def solve_fbs(
    net: PowerNetwork,
    sub: SubSystem,
    injections: dict[int, Injection],
    root: Optional[int] = None,
    tolerance: float = DEFAULT_TOLERANCE,
    max_iter: int = DEFAULT_MAX_ITER,
) -> FlowSolution:
    """Solve the load flow of one radial sub-system.

    ``root`` defaults to the sub-system's slack; islands must pass the
    reference bus explicitly.  A non-converged solve is returned with
    ``converged=False`` so the caller can escalate to load shedding.
    """
    if root is None:
        root = sub.slack_bus
    if root is None:
        raise ValueError("sub-system has no slack; pass the island reference bus")
    if root not in sub.buses:
        raise ValueError(f"root bus {root} is not in the sub-system")

    tree = _build_tree(net, sub, root)
    s_base = net.s_base_mva
    z_base = net.v_base_kv**2 / s_base

    # net complex demand per bus, per unit (generation subtracts)
    s_net: dict[int, complex] = {}
    for bus in sub.buses:
        inj = injections.get(bus)
        if inj is None:
            s_net[bus] = 0j
        else:
            s_net[bus] = complex(inj.p_demand_mw - inj.p_gen_mw, inj.q_demand_mvar) / s_base

    z_line = {
        line_id: complex(net.lines[line_id].r_ohm, net.lines[line_id].x_ohm) / z_base
        for line_id in sub.lines
    }

    v: dict[int, complex] = {bus: 1.0 + 0j for bus in sub.buses}
    s_send: dict[str, complex] = {line_id: 0j for line_id in sub.lines}
    s_loss: dict[str, complex] = {line_id: 0j for line_id in sub.lines}

    converged = False
    iterations = 0
    for iterations in range(1, max_iter + 1):
        # backward: accumulate power from the leaves toward the root
        for bus in reversed(tree.order):
            if bus == root:
                continue
            line_id = tree.parent_line[bus]
            s_recv = s_net[bus]
            for _, child_line in tree.children[bus]:
                s_recv += s_send[child_line]
            loss = z_line[line_id] * abs(s_recv) ** 2 / abs(v[bus]) ** 2
            s_loss[line_id] = loss
            s_send[line_id] = s_recv + loss

        # forward: update voltages from the root outward
        max_dv = 0.0
        for bus in tree.order:
            for child, line_id in tree.children[bus]:
                if z_line[line_id] == 0:
                    v_new = v[bus]
                else:
                    current = (s_send[line_id] / v[bus]).conjugate()
                    v_new = v[bus] - z_line[line_id] * current
                max_dv = max(max_dv, abs(v_new - v[child]))
                v[child] = v_new
        if max_dv < tolerance:
            converged = True
            break

    root_s = s_net[root] + sum(s_send[line_id] for _, line_id in tree.children[root])
    return FlowSolution(
        root_bus=root,
        v_mag={b: abs(v[b]) for b in sub.buses},
        v_angle_rad={b: cmath.phase(v[b]) for b in sub.buses},
        p_flow_mw={lid: s_send[lid].real * s_base for lid in sub.lines},
        q_flow_mvar={lid: s_send[lid].imag * s_base for lid in sub.lines},
        p_loss_mw={lid: s_loss[lid].real * s_base for lid in sub.lines},
        q_loss_mvar={lid: s_loss[lid].imag * s_base for lid in sub.lines},
        root_p_mw=root_s.real * s_base,
        root_q_mvar=root_s.imag * s_base,
        iterations=iterations,
        converged=converged,
    )


def island_reference(net: PowerNetwork, sub: SubSystem) -> Optional[int]:
    """Voltage-reference bus for an island: its largest dispatchable source.

    Batteries rank above EV parks; size is battery energy capacity or
    the park's current aggregate power limit.  Ties go to the lowest
    bus id.  Returns None for a sourceless island (fully shed, no flow
    is run there).
    """
    if sub.has_slack:
        raise ValueError("sub-system holds the slack; it is not an island")
    if sub.battery_buses:
        return min(
            sub.battery_buses,
            key=lambda b: (-net.batteries[b].capacity_mwh, b),
        )
    dispatchable = [
        b
        for b in sub.ev_park_buses
        if net.ev_parks[b].v2g_enabled and net.ev_parks[b].fleet > 0
    ]
    if dispatchable:
        return min(
            dispatchable,
            key=lambda b: (-net.ev_parks[b].power_limit_mw, b),
        )
    if sub.generator_buses:
        return min(sub.generator_buses)
    return None
