"""Minimum-cost load shedding for one sub-system and one increment.

The model is a lossless active-power LP on the sub-system graph: one
balance row per node, shed bounded by demand, generation bounded by
source limits, and line flows bounded by capacity.  Shedding everything
is always feasible.  The nonlinear sweep runs afterwards on the
post-shed injections to record physical voltages and losses.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import simplex

ORACLE_MAX_NODES = 6

# Tiny cost perturbations: prefer shedding lower node ids among
# equal-cost optima, and dispatch lower-ranked generators first.
_TIE_EPS = 1e-9
_GEN_EPS = 1e-7


class ShedSolveError(Exception):
    """Numerical failure while solving a shed problem; carries the problem."""

    def __init__(self, message: str, problem: "ShedProblem"):
        super().__init__(message)
        self.problem = problem


@dataclass(frozen=True)
class ShedNode:
    bus: int
    demand_mw: float
    cost: float

    def __post_init__(self):
        if self.demand_mw < 0:
            raise ValueError(f"node {self.bus}: demand must be >= 0")
        if self.cost <= 0:
            raise ValueError(f"node {self.bus}: shed cost must be > 0")


@dataclass(frozen=True)
class ShedGen:
    bus: int
    p_min_mw: float
    p_max_mw: float
    rank: int = 0  # dispatch preference, lower first
    source: str = "gen"  # gen | battery | park

    def __post_init__(self):
        if self.p_min_mw > self.p_max_mw:
            raise ValueError(f"generator at bus {self.bus}: p_min > p_max")

    @property
    def key(self) -> tuple[str, int]:
        return (self.source, self.bus)


@dataclass(frozen=True)
class ShedLine:
    id: str
    from_bus: int
    to_bus: int
    capacity_mw: float

    def __post_init__(self):
        if self.capacity_mw < 0:
            raise ValueError(f"line {self.id}: capacity must be >= 0")


@dataclass(frozen=True)
class ShedProblem:
    nodes: tuple[ShedNode, ...]
    gens: tuple[ShedGen, ...]
    lines: tuple[ShedLine, ...]

    def __post_init__(self):
        buses = {n.bus for n in self.nodes}
        for gen in self.gens:
            if gen.bus not in buses:
                raise ValueError(f"generator bus {gen.bus} has no node")
        for line in self.lines:
            if line.from_bus not in buses or line.to_bus not in buses:
                raise ValueError(f"line {line.id} endpoint has no node")

    @property
    def total_demand_mw(self) -> float:
        return sum(n.demand_mw for n in self.nodes)


@dataclass
class ShedSolution:
    shed_mw: dict[int, float]
    gen_mw: list[float]
    flow_mw: dict[str, float]
    objective: float

    @property
    def total_shed_mw(self) -> float:
        return sum(self.shed_mw.values())


def _assemble(problem: ShedProblem, perturb: bool):
    """Matrices for min c.x, A_ub x <= b_ub, A_eq x = b_eq, x >= 0.

    Variable layout: [shed per node | gen per source | f+ per line | f- per line],
    with the signed flow on line l being f+ - f-.
    """
    nodes = problem.nodes
    gens = problem.gens
    lines = problem.lines
    nn, ng, nl = len(nodes), len(gens), len(lines)
    n_var = nn + ng + 2 * nl
    node_index = {node.bus: i for i, node in enumerate(nodes)}

    c = np.zeros(n_var)
    for i, node in enumerate(nodes):
        c[i] = node.cost * (1.0 + _TIE_EPS * i) if perturb else node.cost
    if perturb:
        for j, gen in enumerate(gens):
            c[nn + j] = _GEN_EPS * (1 + gen.rank)

    # per-node balance: sum(out flows) - sum(in flows) - gen - shed = -demand
    a_eq = np.zeros((nn, n_var))
    b_eq = np.zeros(nn)
    for i, node in enumerate(nodes):
        a_eq[i, i] = -1.0
        b_eq[i] = -node.demand_mw
    for j, gen in enumerate(gens):
        a_eq[node_index[gen.bus], nn + j] = -1.0
    for k, line in enumerate(lines):
        fp, fm = nn + ng + k, nn + ng + nl + k
        a_eq[node_index[line.from_bus], fp] += 1.0
        a_eq[node_index[line.from_bus], fm] -= 1.0
        a_eq[node_index[line.to_bus], fp] -= 1.0
        a_eq[node_index[line.to_bus], fm] += 1.0

    ub_rows: list[np.ndarray] = []
    ub_rhs: list[float] = []
    for i, node in enumerate(nodes):
        row = np.zeros(n_var)
        row[i] = 1.0
        ub_rows.append(row)
        ub_rhs.append(node.demand_mw)
    for j, gen in enumerate(gens):
        row = np.zeros(n_var)
        row[nn + j] = 1.0
        ub_rows.append(row)
        ub_rhs.append(gen.p_max_mw)
        if gen.p_min_mw > 0:
            row = np.zeros(n_var)
            row[nn + j] = -1.0
            ub_rows.append(row)
            ub_rhs.append(-gen.p_min_mw)
    for k, line in enumerate(lines):
        for var in (nn + ng + k, nn + ng + nl + k):
            row = np.zeros(n_var)
            row[var] = 1.0
            ub_rows.append(row)
            ub_rhs.append(line.capacity_mw)

    return c, np.array(ub_rows), np.array(ub_rhs), a_eq, b_eq


def _unpack(problem: ShedProblem, x: np.ndarray) -> ShedSolution:
    nn, ng, nl = len(problem.nodes), len(problem.gens), len(problem.lines)
    shed = {node.bus: float(x[i]) for i, node in enumerate(problem.nodes)}
    gen = [float(x[nn + j]) for j in range(ng)]
    flow = {
        line.id: float(x[nn + ng + k] - x[nn + ng + nl + k])
        for k, line in enumerate(problem.lines)
    }
    objective = sum(node.cost * shed[node.bus] for node in problem.nodes)
    return ShedSolution(shed_mw=shed, gen_mw=gen, flow_mw=flow, objective=objective)


def solve_shed(problem: ShedProblem) -> ShedSolution:
    """Optimal shed vector via the built-in simplex.

    Deterministic: equal-cost optima break toward shedding the lowest
    node id first, and generators dispatch in rank order.
    """
    c, a_ub, b_ub, a_eq, b_eq = _assemble(problem, perturb=True)
    try:
        result = simplex.solve_lp(c, a_ub, b_ub, a_eq, b_eq)
    except simplex.LpError as exc:
        raise ShedSolveError(str(exc), problem) from exc
    solution = _unpack(problem, result.x)
    residual = check_feasibility(problem, solution)
    if residual > 1e-6:
        raise ShedSolveError(f"solution violates constraints by {residual:.3e}", problem)
    return solution


def oracle_shed(problem: ShedProblem) -> ShedSolution:
    """Independent reference optimum for small problems (tests only).

    Backed by scipy's HiGHS solver with its own constraint assembly, so
    it shares no code path with ``solve_shed``.  Capped at
    ``ORACLE_MAX_NODES`` nodes to keep its role as a test oracle explicit.
    """
    if len(problem.nodes) > ORACLE_MAX_NODES:
        raise ValueError(f"oracle accepts at most {ORACLE_MAX_NODES} nodes")
    from scipy.optimize import linprog

    nodes, gens, lines = problem.nodes, problem.gens, problem.lines
    nn, ng, nl = len(nodes), len(gens), len(lines)
    node_index = {node.bus: i for i, node in enumerate(nodes)}

    # variables: [shed | gen | signed flow], bounds carry the box limits
    n_var = nn + ng + nl
    c = np.zeros(n_var)
    for i, node in enumerate(nodes):
        c[i] = node.cost
    bounds = (
        [(0.0, node.demand_mw) for node in nodes]
        + [(gen.p_min_mw, gen.p_max_mw) for gen in gens]
        + [(-line.capacity_mw, line.capacity_mw) for line in lines]
    )
    a_eq = np.zeros((nn, n_var))
    b_eq = np.zeros(nn)
    for i, node in enumerate(nodes):
        a_eq[i, i] = 1.0
        b_eq[i] = node.demand_mw
    for j, gen in enumerate(gens):
        a_eq[node_index[gen.bus], nn + j] = 1.0
    for k, line in enumerate(lines):
        a_eq[node_index[line.from_bus], nn + ng + k] -= 1.0
        a_eq[node_index[line.to_bus], nn + ng + k] += 1.0

    res = linprog(c, A_eq=a_eq, b_eq=b_eq, bounds=bounds, method="highs")
    if not res.success:
        raise ShedSolveError(f"oracle solve failed: {res.message}", problem)
    x = res.x
    shed = {node.bus: float(x[i]) for i, node in enumerate(nodes)}
    gen = [float(x[nn + j]) for j in range(ng)]
    flow = {line.id: float(x[nn + ng + k]) for k, line in enumerate(lines)}
    objective = sum(node.cost * shed[node.bus] for node in nodes)
    return ShedSolution(shed_mw=shed, gen_mw=gen, flow_mw=flow, objective=objective)


def build_problem(
    net, sub, injections, source_caps: dict[tuple[str, int], float] | None = None
) -> ShedProblem:
    """Shed problem for one sub-system at its current operating point.

    ``source_caps`` carries the committed discharge bound per storage
    source for this increment, keyed ("battery"|"park", bus); the slack
    contributes its generator rating.  Charging demand is expected to
    already be folded into the injections by the caller.
    """
    caps = source_caps or {}
    nodes = []
    for bus_id in sub.buses:
        inj = injections.get(bus_id)
        demand = inj.p_demand_mw if inj is not None else 0.0
        nodes.append(ShedNode(bus=bus_id, demand_mw=demand, cost=net.buses[bus_id].shed_cost))

    gens: list[ShedGen] = []
    rank = 0
    for gen in net.generators:
        if gen.bus in sub.buses:
            gens.append(
                ShedGen(bus=gen.bus, p_min_mw=0.0, p_max_mw=gen.p_max_mw, rank=rank, source="gen")
            )
            rank += 1
    for bus_id in sub.battery_buses:
        cap = caps.get(("battery", bus_id), 0.0)
        if cap > 0.0:
            gens.append(
                ShedGen(bus=bus_id, p_min_mw=0.0, p_max_mw=cap, rank=rank, source="battery")
            )
            rank += 1
    for bus_id in sub.ev_park_buses:
        cap = caps.get(("park", bus_id), 0.0)
        if cap > 0.0:
            gens.append(ShedGen(bus=bus_id, p_min_mw=0.0, p_max_mw=cap, rank=rank, source="park"))
            rank += 1

    lines = tuple(
        ShedLine(
            id=line_id,
            from_bus=net.lines[line_id].from_bus,
            to_bus=net.lines[line_id].to_bus,
            capacity_mw=net.lines[line_id].capacity_mw,
        )
        for line_id in sub.lines
    )
    return ShedProblem(nodes=tuple(nodes), gens=tuple(gens), lines=lines)


def check_feasibility(problem: ShedProblem, solution: ShedSolution) -> float:
    """Largest constraint violation of a solution, for verification."""
    worst = 0.0
    gen_at: dict[int, float] = {}
    for gen, dispatched in zip(problem.gens, solution.gen_mw):
        worst = max(worst, gen.p_min_mw - dispatched, dispatched - gen.p_max_mw)
        gen_at[gen.bus] = gen_at.get(gen.bus, 0.0) + dispatched
    for node in problem.nodes:
        shed = solution.shed_mw[node.bus]
        worst = max(worst, -shed, shed - node.demand_mw)
        balance = gen_at.get(node.bus, 0.0) + shed - node.demand_mw
        for line in problem.lines:
            flow = solution.flow_mw[line.id]
            if line.from_bus == node.bus:
                balance -= flow
            elif line.to_bus == node.bus:
                balance += flow
        worst = max(worst, abs(balance))
    for line in problem.lines:
        worst = max(worst, abs(solution.flow_mw[line.id]) - line.capacity_mw)
    return worst
