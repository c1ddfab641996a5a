"""Centralized cooperative-offload planning.

Given global knowledge of the network, a source node fragments a data item
across edge-disjoint opportunistic paths to the infrastructure node so the
joint delivery probability beats direct transmission.  Planning runs in
three phases: path allocation by availability (a greedy max-availability
search with allocated edges excluded), capacity-sized initial assignment
plus growth of the remaining data onto the currently best path, and a
reallocation pass that retires the weakest path while that improves the
product of per-path probabilities.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, replace
from typing import Iterable, Sequence

from .delivery import (
    DeliveryQuery,
    PathSpec,
    availability,
    delivery_prob_onehop,
    delivery_prob_path,
    path_capacity,
)
from .errors import PlanningError
from .netgraph import EdgeKey, Network, edge_key

__all__ = [
    "Allocation",
    "OffloadPlan",
    "dijkstra_max_q",
    "allocate_paths",
    "assign_remaining",
    "reallocate",
    "plan_offload",
    "plan_to_json",
]

_SIZE_EPS = 1e-9


@dataclass(frozen=True)
class Allocation:
    """One allocated path and the data segment assigned to it."""

    route: tuple[int, ...]
    path: PathSpec
    assigned: float

    def __post_init__(self) -> None:
        if len(self.route) < 2:
            raise ValueError(f"route needs at least two nodes, got {self.route!r}")
        if len(set(self.route)) != len(self.route):
            raise ValueError(f"route revisits a node: {self.route!r}")
        if len(self.route) - 1 != len(self.path):
            raise ValueError("route length does not match the hop count")
        if self.assigned < 0:
            raise ValueError(f"assigned must be >= 0, got {self.assigned!r}")

    def edges(self) -> set[EdgeKey]:
        return {edge_key(a, b) for a, b in zip(self.route, self.route[1:])}


@dataclass(frozen=True)
class OffloadPlan:
    """Outcome of planning: either an offload split or direct transmission."""

    allocations: tuple[Allocation, ...]
    total: float
    deadline: float
    joint_probability: float
    offloaded: bool


def _route_path(network: Network, route: Sequence[int]) -> PathSpec:
    hops = []
    for a, b in zip(route, route[1:]):
        params = network.edge_params(a, b)
        if params is None:
            raise ValueError(f"route uses missing edge {(a, b)}")
        hops.append(params)
    return PathSpec(tuple(hops))


def dijkstra_max_q(
    network: Network,
    u: int,
    v: int,
    deadline: float,
    excluded_edges: Iterable[EdgeKey] = (),
) -> tuple[int, ...] | None:
    """Greedy max-availability route search from ``u`` to ``v``.

    Label-setting search in the style of Dijkstra, except that the label of
    a candidate route is the availability of the whole route within the
    deadline, recomputed at every relaxation.  The unvisited node with the
    highest availability is settled next; ties break toward fewer hops and
    then the lexicographically smallest route.  Edges in ``excluded_edges``
    are ignored.

    Returns the route as a node tuple, or None when ``v`` is unreachable.
    Availability of whole candidate routes is not additive along edges, so
    the result is a deterministic greedy choice, not a guaranteed optimum.
    """
    if u == v:
        raise ValueError("source and destination coincide")
    excluded = set(excluded_edges)

    best: dict[int, tuple[float, int, tuple[int, ...]]] = {u: (1.0, 0, (u,))}
    settled: set[int] = set()
    # heap orders by (-availability, hops, route)
    heap: list[tuple[float, int, tuple[int, ...]]] = [(-1.0, 0, (u,))]
    while heap:
        neg_q, hops, route = heapq.heappop(heap)
        node = route[-1]
        if node in settled:
            continue
        current = best.get(node)
        if current is None or (-neg_q, hops, route) != (current[0], current[1], current[2]):
            continue
        settled.add(node)
        if node == v:
            return route
        for neighbor in network.neighbors(node):
            if neighbor in settled or neighbor in route:
                continue
            if edge_key(node, neighbor) in excluded:
                continue
            candidate = route + (neighbor,)
            q = availability(_route_path(network, candidate), deadline)
            entry = (q, len(candidate) - 1, candidate)
            incumbent = best.get(neighbor)
            if incumbent is None or (-entry[0], entry[1], entry[2]) < (
                -incumbent[0],
                incumbent[1],
                incumbent[2],
            ):
                best[neighbor] = entry
                heapq.heappush(heap, (-q, entry[1], candidate))
    return None


def allocate_paths(
    network: Network, u: int, v: int, total: float, deadline: float
) -> list[Allocation]:
    """Phase one: pick edge-disjoint paths and give each its capacity.

    Repeatedly searches for the max-availability route, stopping when the
    route's availability drops below that of the direct edge (0 when there
    is none), when ``v`` becomes unreachable, or when the assigned sizes
    sum to ``total``.  Each accepted route's edges are excluded from later
    searches, and the route carries ``min(path capacity, unassigned
    remainder)``.

    When the very first search returns the direct one-hop route, no
    alternative path beats plain direct transmission and the result is
    empty, which callers read as "send direct".
    """
    if total <= 0 or deadline <= 0:
        raise ValueError("total and deadline must be > 0")
    direct = network.edge_params(u, v)
    q_direct = availability(PathSpec((direct,)), deadline) if direct else 0.0

    allocations: list[Allocation] = []
    excluded: set[EdgeKey] = set()
    assigned = 0.0
    while total - assigned > _SIZE_EPS:
        route = dijkstra_max_q(network, u, v, deadline, excluded)
        if route is None:
            break
        path = _route_path(network, route)
        if availability(path, deadline) < q_direct:
            break
        if route == (u, v) and not allocations:
            break
        size = min(path_capacity(path), total - assigned)
        allocations.append(Allocation(route=route, path=path, assigned=size))
        excluded |= allocations[-1].edges()
        assigned += size
    return allocations


def _alloc_prob(alloc: Allocation, deadline: float, size: float | None = None) -> float:
    s = alloc.assigned if size is None else size
    if s <= _SIZE_EPS:
        return 1.0
    return delivery_prob_path(alloc.path, DeliveryQuery(data_size=s, deadline=deadline))


def _growth_step(alloc: Allocation) -> float:
    """Next data increment for a path, following its beta ladder.

    Below the largest hop beta the assignment steps up to the next larger
    beta value; at or above it the step is the path capacity.
    """
    betas = sorted({hop.beta for hop in alloc.path.hops})
    if alloc.assigned < betas[-1] - _SIZE_EPS:
        target = min(b for b in betas if b > alloc.assigned + _SIZE_EPS)
        return target - alloc.assigned
    return betas[0]


def _grow_onto(
    allocations: list[Allocation],
    pool: float,
    deadline: float,
    runner_at_own_size: bool = True,
) -> list[Allocation]:
    """Distribute ``pool`` over ``allocations`` by the growth rule.

    The path with the highest delivery probability of its assigned data
    grows step by step while its probability stays at or above the
    runner-up's, then the ranking is refreshed.  With a single path the
    whole pool lands on it.  ``runner_at_own_size=False`` evaluates the
    runner-up at the growing path's size instead of its own, an alternative
    reading of the stop rule kept for experiments.

    The best-ranked path always takes at least one step per round: the
    default comparison cannot fail at entry (it starts at the argmax), and
    the alternative comparison can, which would otherwise drain nothing and
    loop forever.
    """
    current = list(allocations)
    if pool <= _SIZE_EPS:
        return current
    target_total = math.fsum(a.assigned for a in current) + pool
    if len(current) == 1:
        current[0] = replace(current[0], assigned=current[0].assigned + pool)
        pool = 0.0
    while pool > _SIZE_EPS:
        probs = [_alloc_prob(a, deadline) for a in current]
        p = max(range(len(current)), key=lambda i: (probs[i], -i))
        q = max((i for i in range(len(current)) if i != p), key=lambda i: (probs[i], -i))
        stepped = False
        while pool > _SIZE_EPS:
            if stepped:
                threshold = (
                    probs[q]
                    if runner_at_own_size
                    else _alloc_prob(current[q], deadline, size=current[p].assigned)
                )
                if _alloc_prob(current[p], deadline) < threshold:
                    break
            step = min(_growth_step(current[p]), pool)
            current[p] = replace(current[p], assigned=current[p].assigned + step)
            pool -= step
            stepped = True
    # pin the float drift so sizes sum exactly to the intended total
    others = math.fsum(a.assigned for a in current[1:])
    current[0] = replace(current[0], assigned=target_total - others)
    return current


def assign_remaining(
    allocations: Sequence[Allocation], total: float, deadline: float
) -> list[Allocation]:
    """Phase two: grow the allocated paths until they carry ``total``."""
    if not allocations:
        raise ValueError("no allocations to assign to")
    assigned = math.fsum(a.assigned for a in allocations)
    if assigned > total + _SIZE_EPS:
        raise ValueError(f"already assigned {assigned} exceeds total {total}")
    return _grow_onto(list(allocations), total - assigned, deadline)


def reallocate(
    allocations: Sequence[Allocation],
    deadline: float,
    runner_at_own_size: bool = True,
) -> list[Allocation]:
    """Phase three: retire weak paths while the probability product improves.

    Repeatedly removes the allocation with the lowest delivery probability
    and redistributes its segment over the rest with the growth rule; the
    change is kept only when the product of per-path probabilities strictly
    improves, and the pass stops at the first non-improving attempt or when
    a single allocation remains.
    """
    if not allocations:
        raise ValueError("no allocations to reallocate")
    current = list(allocations)
    while len(current) > 1:
        probs = [_alloc_prob(a, deadline) for a in current]
        j = min(range(len(current)), key=lambda i: (probs[i], i))
        rest = [a for i, a in enumerate(current) if i != j]
        candidate = _grow_onto(rest, current[j].assigned, deadline, runner_at_own_size)
        before = math.prod(probs)
        after = math.prod(_alloc_prob(a, deadline) for a in candidate)
        if before < after:
            current = candidate
        else:
            break
    return current


def plan_offload(network: Network, u: int, total: float, deadline: float) -> OffloadPlan:
    """Plan the transmission of ``total`` data units from ``u`` to infrastructure.

    Runs path allocation, remaining-data assignment and reallocation, then
    compares the joint delivery probability of the offload split against
    direct transmission on the edge to infrastructure (0 when absent) and
    returns whichever is better.

    Raises:
        PlanningError: ``u`` has no route of any kind to the infrastructure.
    """
    v = network.infrastructure_id
    if u == v:
        raise ValueError("the infrastructure node does not plan offloads")
    if total <= 0 or deadline <= 0:
        raise ValueError("total and deadline must be > 0")

    direct = network.edge_params(u, v)
    if direct is None and dijkstra_max_q(network, u, v, deadline) is None:
        raise PlanningError(f"node {u} has no path of any kind to infrastructure")

    direct_prob = (
        delivery_prob_onehop(direct, DeliveryQuery(data_size=total, deadline=deadline))
        if direct
        else 0.0
    )

    allocations = allocate_paths(network, u, v, total, deadline)
    if allocations:
        allocations = assign_remaining(allocations, total, deadline)
        allocations = reallocate(allocations, deadline)
        joint = math.prod(_alloc_prob(a, deadline) for a in allocations)
        if joint > direct_prob:
            return OffloadPlan(
                allocations=tuple(allocations),
                total=total,
                deadline=deadline,
                joint_probability=joint,
                offloaded=True,
            )
    return OffloadPlan(
        allocations=(),
        total=total,
        deadline=deadline,
        joint_probability=direct_prob,
        offloaded=False,
    )


def plan_to_json(plan: OffloadPlan) -> dict:
    return {
        "offloaded": plan.offloaded,
        "probability": plan.joint_probability,
        "allocations": [
            {"route": list(a.route), "size": a.assigned} for a in plan.allocations
        ],
    }
