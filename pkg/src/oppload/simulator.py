"""Seeded Monte Carlo simulation of data transmissions.

Two entry points: :func:`run_monte_carlo_delivery` empirically estimates
the delivery probability of one path (the validation oracle for the
analytic estimators), and :func:`simulate_strategy` replays whole
transmission tasks on a network under one of five strategies, reporting
per-task outcomes.

Contact realizations are derived deterministically from ``(seed, task id,
edge)``, so every strategy sees the same contacts for the same task and a
rerun with the same seed reproduces results exactly.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from .delivery import PathSpec
from .distributed import (
    NodeState,
    TwoHopTable,
    _strip,
    criterion_assignment,
    on_contact,
)
from .errors import ConfigError, ProtocolError
from .heuristic import plan_offload
from .netgraph import EdgeKey, Network, edge_key

__all__ = [
    "TransmissionTask",
    "TaskOutcome",
    "SimResult",
    "STRATEGIES",
    "run_monte_carlo_delivery",
    "simulate_strategy",
    "write_results_csv",
    "write_summary_csv",
    "write_event_log_csv",
]

STRATEGIES = ("individual", "heuristic", "distributed", "spread", "maxrate")

_EPS = 1e-9


@dataclass(frozen=True)
class TransmissionTask:
    """One data item to deliver to infrastructure within a deadline."""

    task_id: int
    source: int
    size: float
    deadline: float
    release: float = 0.0

    def __post_init__(self) -> None:
        if self.size <= 0 or self.deadline <= 0:
            raise ValueError("size and deadline must be > 0")


@dataclass(frozen=True)
class TaskOutcome:
    strategy: str
    task_id: int
    size: float
    deadline: float
    offloaded: bool
    success: bool
    completion_time: float | None


@dataclass(frozen=True)
class SimResult:
    strategy: str
    total: int
    offloaded: int
    successful: int
    outcomes: tuple[TaskOutcome, ...]


# ---------------------------------------------------------------------------
# path-level Monte Carlo oracle


def run_monte_carlo_delivery(
    path: PathSpec, data_size: float, deadline: float, runs: int, seed: int
) -> float:
    """Empirical delivery probability of one path.

    Per run, each hop's contact process is sampled afresh from the moment
    the item fully arrives at that hop's sender; a contact moves
    ``min(remaining, duration * rate)`` and the item advances when the
    cumulative amount reaches the item size.  Success means the final hop
    completes by the deadline.
    """
    if runs < 1:
        raise ValueError("runs must be >= 1")
    if data_size <= 0:
        raise ValueError("data_size must be > 0")
    if deadline <= 0:
        return 0.0
    rng = np.random.default_rng(seed)
    ready = np.zeros(runs)
    for hop in path.hops:
        contacts = max(1, math.ceil(data_size / hop.beta - 1e-9))
        gaps = rng.exponential(1.0 / hop.contact_rate, size=(runs, contacts))
        starts = ready[:, None] + np.cumsum(gaps, axis=1)
        durations = (rng.pareto(hop.alpha, size=(runs, contacts)) + 1.0) * (
            hop.beta / hop.rate
        )
        amounts = durations * hop.rate
        cumulative = np.cumsum(amounts, axis=1)
        # first contact index at which the cumulative amount covers the item
        done = np.argmax(cumulative >= data_size - 1e-12, axis=1)
        rows = np.arange(runs)
        carried_before = np.where(done > 0, cumulative[rows, np.maximum(done - 1, 0)], 0.0)
        needed = data_size - carried_before
        ready = starts[rows, done] + needed / hop.rate
    return float(np.mean(ready <= deadline))


# ---------------------------------------------------------------------------
# contact realizations shared by the strategy runners


class _ContactSampler:
    """Lazily samples one contact realization per (task, edge)."""

    def __init__(self, network: Network, seed: int, task_id: int, horizon: float):
        self._network = network
        self._seed = seed
        self._task_id = task_id
        self._horizon = horizon
        self._cache: dict[EdgeKey, list[tuple[float, float]]] = {}

    def events(self, key: EdgeKey) -> list[tuple[float, float]]:
        cached = self._cache.get(key)
        if cached is not None:
            return cached
        params = self._network.edges[key]
        rng = np.random.default_rng(
            np.random.SeedSequence((self._seed, self._task_id, key[0], key[1]))
        )
        starts: list[float] = []
        t = 0.0
        done = False
        while not done:
            for gap in rng.exponential(1.0 / params.contact_rate, size=64):
                t += float(gap)
                if t > self._horizon:
                    done = True
                    break
                starts.append(t)
        durations = (rng.pareto(params.alpha, size=len(starts)) + 1.0) * (
            params.beta / params.rate
        )
        events = list(zip(starts, durations.tolist()))
        self._cache[key] = events
        return events

    def all_events(self) -> list[tuple[float, int, int, float]]:
        """Every edge's contacts merged and time-ordered: (start, a, b, duration)."""
        merged: list[tuple[float, int, int, float]] = []
        for a, b in sorted(self._network.edges):
            for start, duration in self.events((a, b)):
                merged.append((start, a, b, duration))
        merged.sort()
        return merged


def _usable_amount(start: float, duration: float, deadline: float, rate: float) -> float:
    """Data transferable in a contact, truncated at the deadline."""
    usable = min(duration, deadline - start)
    return usable * rate if usable > 0 else 0.0


def _drain_route(
    route: Sequence[int],
    size: float,
    sampler: _ContactSampler,
    network: Network,
    deadline: float,
) -> float | None:
    """Completion time of a segment pushed hop by hop along a route."""
    ready = 0.0
    for a, b in zip(route, route[1:]):
        params = network.edge_params(a, b)
        remaining = size
        completed = None
        for start, duration in sampler.events(edge_key(a, b)):
            if start < ready or start >= deadline:
                continue
            amount = min(remaining, _usable_amount(start, duration, deadline, params.rate))
            if amount <= 0:
                continue
            remaining -= amount
            if remaining <= _EPS * size:
                completed = start + amount / params.rate
                break
        if completed is None:
            return None
        ready = completed
    return ready


# ---------------------------------------------------------------------------
# strategy runners; each returns (offloaded, success, completion or None)

_Runner = Callable[[Network, TransmissionTask, _ContactSampler, "_Hooks"], tuple[bool, bool, float | None]]


@dataclass
class _Hooks:
    """Optional instrumentation for a simulation run."""

    event_log: list[dict] | None = None
    monitor: Callable[[dict, dict[int, NodeState], float], None] | None = None

    def emit(
        self,
        states: dict[int, NodeState] | None,
        delivered: float,
        **row,
    ) -> None:
        if self.event_log is not None:
            self.event_log.append(row)
        if self.monitor is not None and states is not None:
            self.monitor(row, states, delivered)


def _run_individual(
    network: Network, task: TransmissionTask, sampler: _ContactSampler, hooks: _Hooks
) -> tuple[bool, bool, float | None]:
    infra = network.infrastructure_id
    params = network.edge_params(task.source, infra)
    if params is None:
        return False, False, None
    completion = _drain_route((task.source, infra), task.size, sampler, network, task.deadline)
    return False, completion is not None, completion


def _run_heuristic(
    network: Network, task: TransmissionTask, sampler: _ContactSampler, hooks: _Hooks
) -> tuple[bool, bool, float | None]:
    plan = plan_offload(network, task.source, task.size, task.deadline)
    if not plan.offloaded:
        _, success, completion = _run_individual(network, task, sampler, hooks)
        return False, success, completion
    worst = 0.0
    for allocation in plan.allocations:
        completion = _drain_route(
            allocation.route, allocation.assigned, sampler, network, task.deadline
        )
        if completion is None:
            return True, False, None
        worst = max(worst, completion)
    return True, True, worst


def _bootstrap_states(network: Network, task: TransmissionTask) -> dict[int, NodeState]:
    """Node states with two-hop tables primed from the network parameters.

    Nodes are assumed to have met their neighbors before the task was
    released, so each node knows its neighbors' parameters and their
    neighbor tables.
    """
    infra = network.infrastructure_id
    neighbor_tables: dict[int, dict[int, object]] = {}
    for node in range(network.node_count):
        neighbor_tables[node] = {
            nb: network.edge_params(node, nb) for nb in network.neighbors(node)
        }
    states: dict[int, NodeState] = {}
    for node in network.mobile_nodes():
        table = TwoHopTable(neighbors=dict(neighbor_tables[node]))
        for nb in network.neighbors(node):
            if nb != infra:
                table.learn(nb, neighbor_tables[nb], now=0.0)
        states[node] = NodeState(
            node_id=node,
            destination=infra,
            source=task.source,
            table=table,
            staleness_horizon=task.deadline,
        )
    return states


def _run_distributed(
    network: Network, task: TransmissionTask, sampler: _ContactSampler, hooks: _Hooks
) -> tuple[bool, bool, float | None]:
    infra = network.infrastructure_id
    states = _bootstrap_states(network, task)
    source = states[task.source]
    source.carried = task.size
    try:
        source.assignment = criterion_assignment(source, task.size, task.deadline)
    except ProtocolError:
        return False, False, None

    hooks.emit(
        states,
        0.0,
        time=0.0,
        event="start",
        node_a=task.source,
        node_b=task.source,
        planned=0.0,
        actual=0.0,
        carried_a=task.size,
        carried_b=task.size,
    )

    delivered = 0.0
    offloaded = False
    completion = None
    for start, a, b, duration in sampler.all_events():
        params = network.edges[(a, b)]
        capacity = _usable_amount(start, duration, task.deadline, params.rate)
        t_remaining = task.deadline - start
        if infra in (a, b):
            mobile = b if a == infra else a
            holder = states[mobile]
            amount = min(holder.carried, capacity)
            if amount > _EPS:
                holder.carried -= amount
                holder.assignment = _strip_to_carried(holder, t_remaining)
                delivered += amount
                hooks.emit(
                    states,
                    delivered,
                    time=start,
                    event="deliver",
                    node_a=mobile,
                    node_b=infra,
                    planned=amount,
                    actual=amount,
                    carried_a=holder.carried,
                    carried_b=0.0,
                )
                if delivered >= task.size - _EPS * task.size and completion is None:
                    completion = start + amount / params.rate
                    break
            continue
        sa, sb = states[a], states[b]
        if sa.carried <= _EPS and sb.carried <= _EPS:
            # nothing to move; still exchange tables
            sa.table.learn(b, sb.table.neighbors, start)
            sb.table.learn(a, sa.table.neighbors, start)
            continue
        contact = on_contact(sa, sb, capacity, t_remaining, now=start)
        if contact.transferred > _EPS:
            offloaded = True
        hooks.emit(
            states,
            delivered,
            time=start,
            event="contact",
            node_a=a,
            node_b=b,
            planned=contact.planned,
            actual=contact.transferred,
            carried_a=sa.carried,
            carried_b=sb.carried,
        )
    return offloaded, completion is not None, completion


def _strip_to_carried(holder: NodeState, t_remaining: float) -> dict:
    """Rebalance an assignment after a direct delivery to the destination."""
    total = math.fsum(holder.assignment.values())
    excess = total - holder.carried
    if excess > _EPS:
        _strip(holder, excess, t_remaining)
    return holder.assignment


def _run_spread(
    network: Network, task: TransmissionTask, sampler: _ContactSampler, hooks: _Hooks
) -> tuple[bool, bool, float | None]:
    infra = network.infrastructure_id
    carried: dict[int, float] = {task.source: task.size}
    provenance: dict[int, set[int]] = {task.source: set()}
    delivered = 0.0
    offloaded = False
    for start, a, b, duration in sampler.all_events():
        params = network.edges[(a, b)]
        capacity = _usable_amount(start, duration, task.deadline, params.rate)
        if capacity <= 0:
            continue
        if infra in (a, b):
            mobile = b if a == infra else a
            held = carried.get(mobile, 0.0)
            amount = min(held, capacity)
            if amount > _EPS:
                carried[mobile] = held - amount
                delivered += amount
                if delivered >= task.size - _EPS * task.size:
                    return offloaded, True, start + amount / params.rate
            continue
        # larger carrier hands half of its remainder to the other side
        first, second = (a, b) if (carried.get(a, 0.0), -a) >= (carried.get(b, 0.0), -b) else (b, a)
        held = carried.get(first, 0.0)
        if held <= _EPS:
            continue
        if second in provenance.get(first, set()):
            continue
        amount = min(held / 2.0, capacity)
        if amount <= _EPS:
            continue
        carried[first] = held - amount
        carried[second] = carried.get(second, 0.0) + amount
        provenance.setdefault(second, set()).add(first)
        offloaded = True
    return offloaded, False, None


def _run_maxrate(
    network: Network, task: TransmissionTask, sampler: _ContactSampler, hooks: _Hooks
) -> tuple[bool, bool, float | None]:
    infra = network.infrastructure_id
    # per node: the neighbor with the strongest contact rate to infrastructure
    best_relay: dict[int, int | None] = {}
    for node in network.mobile_nodes():
        best = None
        best_rate = 0.0
        for nb in network.neighbors(node):
            if nb == infra:
                continue
            link = network.edge_params(nb, infra)
            if link is not None and link.contact_rate > best_rate:
                best = nb
                best_rate = link.contact_rate
        best_relay[node] = best

    carried: dict[int, float] = {task.source: task.size}
    provenance: dict[int, set[int]] = {task.source: set()}
    delivered = 0.0
    offloaded = False
    for start, a, b, duration in sampler.all_events():
        params = network.edges[(a, b)]
        capacity = _usable_amount(start, duration, task.deadline, params.rate)
        if capacity <= 0:
            continue
        if infra in (a, b):
            mobile = b if a == infra else a
            held = carried.get(mobile, 0.0)
            amount = min(held, capacity)
            if amount > _EPS:
                carried[mobile] = held - amount
                delivered += amount
                if delivered >= task.size - _EPS * task.size:
                    return offloaded, True, start + amount / params.rate
            continue
        for sender, receiver in ((a, b), (b, a)):
            held = carried.get(sender, 0.0)
            if held <= _EPS or best_relay.get(sender) != receiver:
                continue
            if receiver in provenance.get(sender, set()):
                continue
            amount = min(held, capacity)
            carried[sender] = held - amount
            carried[receiver] = carried.get(receiver, 0.0) + amount
            provenance.setdefault(receiver, set()).add(sender)
            offloaded = True
            break
    return offloaded, False, None


_RUNNERS: dict[str, _Runner] = {
    "individual": _run_individual,
    "heuristic": _run_heuristic,
    "distributed": _run_distributed,
    "spread": _run_spread,
    "maxrate": _run_maxrate,
}


def simulate_strategy(
    network: Network,
    tasks: Sequence[TransmissionTask],
    strategy: str,
    seed: int,
    event_log: list[dict] | None = None,
    monitor: Callable[[dict, dict[int, NodeState], float], None] | None = None,
) -> SimResult:
    """Replay every task under one strategy on seeded contact realizations.

    Each task sees a fresh contact realization derived from ``(seed,
    task_id, edge)``, identical across strategies.  ``event_log`` (filled
    with per-event rows) and ``monitor`` (called after every protocol
    event) only apply to the distributed strategy.

    Raises:
        ConfigError: unknown strategy name.
    """
    runner = _RUNNERS.get(strategy)
    if runner is None:
        raise ConfigError(f"unknown strategy {strategy!r}; pick one of {STRATEGIES}")
    hooks = _Hooks(event_log=event_log, monitor=monitor)
    outcomes: list[TaskOutcome] = []
    for task in tasks:
        sampler = _ContactSampler(network, seed, task.task_id, task.deadline)
        offloaded, success, completion = runner(network, task, sampler, hooks)
        outcomes.append(
            TaskOutcome(
                strategy=strategy,
                task_id=task.task_id,
                size=task.size,
                deadline=task.deadline,
                offloaded=offloaded,
                success=success,
                completion_time=(task.release + completion) if completion is not None else None,
            )
        )
    outcomes.sort(key=lambda o: o.task_id)
    return SimResult(
        strategy=strategy,
        total=len(outcomes),
        offloaded=sum(o.offloaded for o in outcomes),
        successful=sum(o.success for o in outcomes),
        outcomes=tuple(outcomes),
    )


def write_results_csv(results: Iterable[SimResult], path: str | Path) -> None:
    """Per-task rows: strategy,task_id,size,deadline,offloaded,success,completion_time."""
    rows = sorted(
        (o for r in results for o in r.outcomes),
        key=lambda o: (o.strategy, o.task_id),
    )
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(
            ["strategy", "task_id", "size", "deadline", "offloaded", "success", "completion_time"]
        )
        for o in rows:
            writer.writerow(
                [
                    o.strategy,
                    o.task_id,
                    repr(float(o.size)),
                    repr(float(o.deadline)),
                    int(o.offloaded),
                    int(o.success),
                    "" if o.completion_time is None else repr(float(o.completion_time)),
                ]
            )


def write_summary_csv(results: Iterable[SimResult], path: str | Path) -> None:
    """Summary rows: strategy,total,offloaded,successful."""
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["strategy", "total", "offloaded", "successful"])
        for r in sorted(results, key=lambda r: r.strategy):
            writer.writerow([r.strategy, r.total, r.offloaded, r.successful])


def write_event_log_csv(rows: Iterable[dict], path: str | Path) -> None:
    """Protocol event rows: time,event,node_a,node_b,planned,actual,carried_a,carried_b."""
    columns = ["time", "event", "node_a", "node_b", "planned", "actual", "carried_a", "carried_b"]
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(columns)
        for row in rows:
            writer.writerow(
                [
                    repr(float(row["time"])),
                    row["event"],
                    row["node_a"],
                    row["node_b"],
                    repr(float(row["planned"])),
                    repr(float(row["actual"])),
                    repr(float(row["carried_a"])),
                    repr(float(row["carried_b"])),
                ]
            )
