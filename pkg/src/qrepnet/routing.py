"""Sequential path allocation for batches of entanglement requests.

Requests are served one at a time in a randomised establishment order.  Each
request takes a node-weighted shortest path through the residual network,
pays a fidelity check against a threshold, and on success consumes the edges
of its path.  Requests that find no path, or only a path below the fidelity
threshold, are blocked; blocked requests consume nothing.

Path cost is the sum of the weights of the nodes a path enters after the
source; tier nodes always weigh zero, transport nodes are weighed by a
mapping from their noise rate.  Ties in cost resolve to the path whose node
id sequence is lexicographically smallest, which pins down one deterministic
route per (residual graph, request) pair.
"""

from __future__ import annotations

from collections.abc import Callable, MutableMapping, Sequence
from dataclasses import dataclass
from enum import Enum
from heapq import heappop, heappush
from itertools import pairwise

import numpy as np

from .fidelity import NoiseClass, PathComposition, end_to_end_fidelity
from .topology import NetworkGraph, NodeKind

__all__ = [
    "BlockReason",
    "PathAllocation",
    "RoutingRequest",
    "WeightMapping",
    "allocate_batch",
    "noise_aware_mapping",
    "noise_unaware_mapping",
    "path_composition",
    "shortest_path",
    "shuffle_requests",
]

WeightMapping = Callable[[float], float]

DEFAULT_LQ_WEIGHT = 100.0


def noise_unaware_mapping() -> WeightMapping:
    """Weigh every transport node 1 regardless of noise rate (hop count routing)."""

    def weight(eta: float) -> float:
        return 1.0

    return weight


def noise_aware_mapping(
    lq_eta: float, lq_weight: float = DEFAULT_LQ_WEIGHT
) -> WeightMapping:
    """Weigh low-quality nodes ``lq_weight`` and everything else 1.

    A node counts as low quality when its noise rate equals ``lq_eta``.  With
    the default weight of 100 a single low-quality node costs more than any
    detour over high-quality ones, so routing avoids low-quality nodes
    whenever the residual network allows it.
    """
    if lq_weight <= 0.0:
        raise ValueError(f"node weight must be positive, got {lq_weight}")

    def weight(eta: float) -> float:
        return lq_weight if eta == lq_eta else 1.0

    return weight


class BlockReason(Enum):
    NO_PATH = "no_path"
    BELOW_THRESHOLD = "below_threshold"


@dataclass(frozen=True)
class RoutingRequest:
    """One source-destination pair with its establishment order position."""

    source: int
    destination: int
    theta: int


@dataclass(frozen=True)
class PathAllocation:
    """Outcome of serving one request: an allocated path or a block reason."""

    request: RoutingRequest
    path: tuple[int, ...] | None
    fidelity: float | None
    blocked: BlockReason | None

    @property
    def allocated(self) -> bool:
        return self.path is not None


def shuffle_requests(
    pairs: Sequence[tuple[int, int]], rng: np.random.Generator
) -> list[RoutingRequest]:
    """Draw an establishment order for the pairs, uniformly over permutations.

    The returned list is in establishment order, ``theta`` running 1..P.
    """
    order = rng.permutation(len(pairs))
    return [
        RoutingRequest(source=pairs[int(i)][0], destination=pairs[int(i)][1], theta=pos + 1)
        for pos, i in enumerate(order)
    ]


def _node_weights(graph: NetworkGraph, mapping: WeightMapping) -> tuple[float, ...]:
    """Evaluate the weight of every node; tier nodes weigh zero."""
    weights = []
    for v in range(graph.num_nodes):
        if graph.kinds[v] is not NodeKind.TRANSPORT:
            weights.append(0.0)
            continue
        cls = graph.classes[v]
        if cls is None:
            raise ValueError(f"transport node {v} has no noise class assigned")
        w = mapping(cls.eta)
        if w <= 0.0:
            raise ValueError(f"weight mapping returned non-positive weight {w} for node {v}")
        weights.append(float(w))
    return tuple(weights)


def _dijkstra(
    adjacency: dict[int, set[int]],
    weights: Sequence[float],
    source: int,
    destination: int,
) -> tuple[int, ...] | None:
    """Cheapest path by summed entering-node weight, ties broken lexicographically.

    Heap entries carry the whole path so that equal-cost pops order by node id
    sequence; the first time the destination leaves the heap it does so with
    the minimal (cost, id sequence) pair.
    """
    heap: list[tuple[float, tuple[int, ...]]] = [(0.0, (source,))]
    visited: set[int] = set()
    while heap:
        cost, path = heappop(heap)
        tail = path[-1]
        if tail == destination:
            return path
        if tail in visited:
            continue
        visited.add(tail)
        for nxt in sorted(adjacency[tail]):
            if nxt not in visited:
                heappush(heap, (cost + weights[nxt], path + (nxt,)))
    return None


def shortest_path(
    graph: NetworkGraph,
    source: int,
    destination: int,
    mapping: WeightMapping,
) -> tuple[int, ...] | None:
    """Minimum-weight path between two nodes, or ``None`` if disconnected."""
    if source == destination:
        raise ValueError("source and destination must differ")
    return _dijkstra(graph.adjacency, _node_weights(graph, mapping), source, destination)


def path_composition(graph: NetworkGraph, path: Sequence[int]) -> PathComposition:
    """Count the noise classes of the transport nodes along a path."""
    counts: dict[NoiseClass, int] = {}
    for v in path:
        if graph.kinds[v] is not NodeKind.TRANSPORT:
            continue
        cls = graph.classes[v]
        if cls is None:
            raise ValueError(f"transport node {v} has no noise class assigned")
        counts[cls] = counts.get(cls, 0) + 1
    return PathComposition(counts)


def allocate_batch(
    graph: NetworkGraph,
    requests: Sequence[RoutingRequest],
    mapping: WeightMapping,
    fidelity_threshold: float,
    link_fidelity: float,
    path_cache: MutableMapping | None = None,
) -> tuple[list[PathAllocation], int]:
    """Serve the requests in establishment order on a private residual copy.

    Returns the allocations in establishment order together with the number
    of blocked requests.  ``graph`` itself is never mutated.  An optional
    ``path_cache`` memoises shortest paths across calls, keyed by the node
    weights, the endpoints and the set of already-consumed edges; callers may
    share one cache between batches with identical graphs.
    """
    thetas = sorted(r.theta for r in requests)
    if thetas != list(range(1, len(requests) + 1)):
        raise ValueError("request thetas must be exactly 1..P")

    weights = _node_weights(graph, mapping)
    residual = graph.copy()
    consumed: list[tuple[int, int]] = []
    allocations: list[PathAllocation] = []
    blocked = 0
    for request in sorted(requests, key=lambda r: r.theta):
        if path_cache is None:
            path = _dijkstra(residual.adjacency, weights, request.source, request.destination)
        else:
            key = (
                graph.topology,
                graph.n,
                weights,
                request.source,
                request.destination,
                frozenset(consumed),
            )
            try:
                path = path_cache[key]
            except KeyError:
                path = _dijkstra(
                    residual.adjacency, weights, request.source, request.destination
                )
                path_cache[key] = path
        if path is None:
            allocations.append(
                PathAllocation(request, None, None, BlockReason.NO_PATH)
            )
            blocked += 1
            continue
        fidelity = end_to_end_fidelity(path_composition(residual, path), link_fidelity)
        if fidelity >= fidelity_threshold:
            for u, v in pairwise(path):
                residual.remove_edge(u, v)
                consumed.append((u, v) if u < v else (v, u))
            allocations.append(PathAllocation(request, path, fidelity, None))
        else:
            allocations.append(
                PathAllocation(request, None, None, BlockReason.BELOW_THRESHOLD)
            )
            blocked += 1
    return allocations, blocked
