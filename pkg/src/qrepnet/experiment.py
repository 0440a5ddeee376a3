"""Monte-Carlo drivers for the routing studies.

A single trial fixes a source-destination pairing, a noise-class draw and an
establishment order, then allocates the whole batch of requests.  Sweeps
repeat trials over a grid of upgrade fractions ``xi`` with a configurable
number of pairing draws and class draws per point.

Randomness is split into named substreams derived from one root seed, keyed
by purpose and draw index, so any trial can be reproduced in isolation and
trials may run in any order.  The class-draw substream is deliberately keyed
by the draw index only, not by ``xi``: each draw fixes one permutation of
the transport nodes and every ``xi`` upgrades a prefix of it.  Sweeps over
``xi`` therefore use common random numbers, and upgraded node sets grow
monotonically with ``xi`` within a draw.  Pairings and establishment orders
are likewise shared across ``xi`` and across weight mappings, which makes
curve comparisons paired rather than independent.
"""

from __future__ import annotations

import warnings
from collections.abc import Mapping, MutableMapping, Sequence
from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np

from .fidelity import NoiseClass, PathComposition, end_to_end_fidelity
from .routing import (
    PathAllocation,
    WeightMapping,
    allocate_batch,
    noise_aware_mapping,
    noise_unaware_mapping,
    path_composition,
    shuffle_requests,
)
from .topology import TOPOLOGIES, GRID, NetworkGraph, assign_classes, build_network

__all__ = [
    "AWARE",
    "COARSE_XI_GRID",
    "DEFAULT_SEED",
    "MAPPINGS",
    "UNAWARE",
    "BlockingPoint",
    "ExperimentConfig",
    "FiveNumberSummary",
    "RequestOutcome",
    "SampleStats",
    "SweepSummary",
    "ThetaProfile",
    "TrialRecord",
    "XiSummary",
    "default_xi_grid",
    "draw_pairing",
    "run_trial",
    "study_blocking",
    "study_noise_awareness",
    "sweep_eta_l",
    "sweep_xi",
]

DEFAULT_SEED = 12345

UNAWARE = "unaware"
AWARE = "aware"
MAPPINGS = (UNAWARE, AWARE)

# Coarse grid used by the noise-awareness study when no xi values are given.
COARSE_XI_GRID = (0.0, 0.2, 0.4, 0.6, 0.8, 1.0)

_PAIRING_STREAM = 1
_CLASS_STREAM = 2
_SHUFFLE_STREAM = 3

HQ_LABEL = "HQ"
LQ_LABEL = "LQ"


def default_xi_grid(n: int) -> tuple[float, ...]:
    """All multiples of ``1 / n**2`` from 0 to 1, the native upgrade fractions."""
    num = n * n
    return tuple(k / num for k in range(num + 1))


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything that determines a study, including the root seed.

    ``xi_values`` of ``None`` means the study's default grid.  ``mapping``
    selects the routing weight mapping; ``aware_weight`` is the penalty the
    noise-aware mapping puts on low-quality nodes.
    """

    topology: str = GRID
    n: int = 5
    xi_values: tuple[float, ...] | None = None
    eta_h: float = 0.999
    eta_l: float = 0.8
    link_fidelity: float = 0.975
    f_bar: float = 0.0
    mapping: str = UNAWARE
    aware_weight: float = 100.0
    num_pair_draws: int = 5
    num_class_draws: int = 100
    seed: int = DEFAULT_SEED

    def __post_init__(self) -> None:
        if self.topology not in TOPOLOGIES:
            raise ValueError(f"unknown topology {self.topology!r}")
        if self.n < 2:
            raise ValueError(f"core width must be at least 2, got {self.n}")
        if self.xi_values is not None:
            for xi in self.xi_values:
                if not 0.0 <= xi <= 1.0:
                    raise ValueError(f"upgrade fraction must lie in [0, 1], got {xi}")
        for name, eta in (("eta_h", self.eta_h), ("eta_l", self.eta_l)):
            if not 0.5 < eta <= 1.0:
                raise ValueError(f"{name} must lie in (0.5, 1], got {eta}")
        if not 0.25 < self.link_fidelity <= 1.0:
            raise ValueError(
                f"link fidelity must lie in (0.25, 1], got {self.link_fidelity}"
            )
        if not 0.0 <= self.f_bar <= 1.0:
            raise ValueError(f"fidelity threshold must lie in [0, 1], got {self.f_bar}")
        if self.mapping not in MAPPINGS:
            raise ValueError(f"unknown weight mapping {self.mapping!r}")
        if self.aware_weight <= 0.0:
            raise ValueError(f"aware weight must be positive, got {self.aware_weight}")
        if self.num_pair_draws < 1 or self.num_class_draws < 1:
            raise ValueError("draw counts must be at least 1")
        if self.seed < 0:
            raise ValueError(f"seed must be non-negative, got {self.seed}")

    def resolved_xi(self) -> tuple[float, ...]:
        if self.xi_values is not None:
            return self.xi_values
        return default_xi_grid(self.n)

    def hq_class(self) -> NoiseClass:
        return NoiseClass(HQ_LABEL, self.eta_h)

    def lq_class(self) -> NoiseClass:
        return NoiseClass(LQ_LABEL, self.eta_l)

    def weight_mapping(self) -> WeightMapping:
        if self.mapping == AWARE:
            return noise_aware_mapping(self.eta_l, self.aware_weight)
        return noise_unaware_mapping()


def _substream(seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=key))


def draw_pairing(seed: int, n: int, pairing_index: int) -> tuple[int, ...]:
    """The ``pairing_index``-th source-to-destination row bijection for a seed."""
    rng = _substream(seed, _PAIRING_STREAM, pairing_index)
    return tuple(int(x) for x in rng.permutation(n))


def _class_rng(seed: int, class_draw: int) -> np.random.Generator:
    return _substream(seed, _CLASS_STREAM, class_draw)


def _shuffle_rng(seed: int, pairing_index: int, class_draw: int) -> np.random.Generator:
    return _substream(seed, _SHUFFLE_STREAM, pairing_index, class_draw)


@lru_cache(maxsize=8)
def _base_graph(topology: str, n: int) -> NetworkGraph:
    return build_network(topology, n)


def _pairs(graph: NetworkGraph, permutation: Sequence[int]) -> list[tuple[int, int]]:
    return [
        (graph.source_id(row), graph.destination_id(int(permutation[row])))
        for row in range(graph.n)
    ]


@dataclass(frozen=True)
class RequestOutcome:
    """Per-request result of one trial; blocked requests carry no path data."""

    theta: int
    path_node_count: int | None
    n_h: int
    n_l: int
    fidelity: float | None
    blocked: object | None


@dataclass(frozen=True)
class TrialRecord:
    xi: float
    pairing_index: int
    class_draw: int
    outcomes: tuple[RequestOutcome, ...]

    @property
    def num_blocked(self) -> int:
        return sum(1 for o in self.outcomes if o.blocked is not None)


def _outcome(
    graph: NetworkGraph,
    allocation: PathAllocation,
    hq: NoiseClass,
    lq: NoiseClass,
    link_fidelity: float,
) -> RequestOutcome:
    if not allocation.allocated:
        return RequestOutcome(
            theta=allocation.request.theta,
            path_node_count=None,
            n_h=0,
            n_l=0,
            fidelity=None,
            blocked=allocation.blocked,
        )
    # The fidelity is re-evaluated against the classes of ``graph`` rather
    # than taken from the allocation, so that routes computed on one class
    # draw can be scored under another (see the fast path in sweep_xi).
    composition = path_composition(graph, allocation.path)
    return RequestOutcome(
        theta=allocation.request.theta,
        path_node_count=len(allocation.path),
        n_h=composition.class_counts.get(hq, 0),
        n_l=composition.class_counts.get(lq, 0),
        fidelity=end_to_end_fidelity(composition, link_fidelity),
        blocked=None,
    )


def _fast_outcome(
    allocation: PathAllocation,
    upgraded: frozenset[int],
    hq: NoiseClass,
    lq: NoiseClass,
    num_transport: int,
    link_fidelity: float,
) -> RequestOutcome:
    """Score an allocation against an upgraded-node set without a classed graph.

    Replicates :func:`_outcome` exactly, including the class encounter order
    along the path, so both code paths produce bit-identical fidelities.
    """
    if not allocation.allocated:
        return RequestOutcome(
            theta=allocation.request.theta,
            path_node_count=None,
            n_h=0,
            n_l=0,
            fidelity=None,
            blocked=allocation.blocked,
        )
    counts: dict[NoiseClass, int] = {}
    for v in allocation.path:
        if v >= num_transport:
            continue
        cls = hq if v in upgraded else lq
        counts[cls] = counts.get(cls, 0) + 1
    composition = PathComposition(counts)
    return RequestOutcome(
        theta=allocation.request.theta,
        path_node_count=len(allocation.path),
        n_h=composition.class_counts.get(hq, 0),
        n_l=composition.class_counts.get(lq, 0),
        fidelity=end_to_end_fidelity(composition, link_fidelity),
        blocked=None,
    )


def run_trial(
    config: ExperimentConfig, xi: float, pairing_index: int, class_draw: int
) -> TrialRecord:
    """Run one full allocation batch and report the per-request outcomes."""
    base = _base_graph(config.topology, config.n)
    hq, lq = config.hq_class(), config.lq_class()
    classed = assign_classes(base, xi, hq, lq, _class_rng(config.seed, class_draw))
    permutation = draw_pairing(config.seed, config.n, pairing_index)
    requests = shuffle_requests(
        _pairs(base, permutation), _shuffle_rng(config.seed, pairing_index, class_draw)
    )
    allocations, _ = allocate_batch(
        classed, requests, config.weight_mapping(), config.f_bar, config.link_fidelity
    )
    return TrialRecord(
        xi=xi,
        pairing_index=pairing_index,
        class_draw=class_draw,
        outcomes=tuple(
            _outcome(classed, a, hq, lq, config.link_fidelity) for a in allocations
        ),
    )


@dataclass(frozen=True)
class FiveNumberSummary:
    """Box-plot numbers: quartiles plus Tukey whiskers at 1.5 IQR fences."""

    minimum: float
    q1: float
    median: float
    q3: float
    maximum: float
    lower_whisker: float
    upper_whisker: float
    num_outliers: int

    @classmethod
    def from_samples(cls, values: Sequence[float]) -> "FiveNumberSummary":
        arr = np.asarray(values, dtype=float)
        if arr.size == 0:
            raise ValueError("cannot summarise an empty sample")
        q1, median, q3 = (float(q) for q in np.quantile(arr, (0.25, 0.5, 0.75)))
        iqr = q3 - q1
        inside = arr[(arr >= q1 - 1.5 * iqr) & (arr <= q3 + 1.5 * iqr)]
        return cls(
            minimum=float(arr.min()),
            q1=q1,
            median=median,
            q3=q3,
            maximum=float(arr.max()),
            lower_whisker=float(inside.min()),
            upper_whisker=float(inside.max()),
            num_outliers=int(arr.size - inside.size),
        )


@dataclass(frozen=True)
class SampleStats:
    count: int
    mean: float
    summary: FiveNumberSummary

    @classmethod
    def from_samples(cls, values: Sequence[float]) -> "SampleStats":
        arr = np.asarray(values, dtype=float)
        return cls(
            count=int(arr.size),
            mean=float(arr.mean()),
            summary=FiveNumberSummary.from_samples(arr),
        )


@dataclass(frozen=True)
class XiSummary:
    """Aggregates of all trials at one upgrade fraction."""

    xi: float
    num_requests: int
    num_blocked: int
    fidelity: SampleStats | None
    mean_path_nodes: float | None
    by_path_nodes: Mapping[int, SampleStats]
    by_theta: Mapping[int, SampleStats]

    @property
    def blocking_probability(self) -> float:
        return self.num_blocked / self.num_requests


@dataclass(frozen=True)
class SweepSummary:
    config: ExperimentConfig
    per_xi: tuple[XiSummary, ...]

    @property
    def overall_blocking_probability(self) -> float:
        total = sum(x.num_requests for x in self.per_xi)
        return sum(x.num_blocked for x in self.per_xi) / total

    @property
    def overall_mean_fidelity(self) -> float | None:
        total = 0
        acc = 0.0
        for x in self.per_xi:
            if x.fidelity is not None:
                acc += x.fidelity.mean * x.fidelity.count
                total += x.fidelity.count
        return acc / total if total else None

    @property
    def overall_mean_path_nodes(self) -> float | None:
        total = 0
        acc = 0.0
        for x in self.per_xi:
            allocated = x.num_requests - x.num_blocked
            if x.mean_path_nodes is not None:
                acc += x.mean_path_nodes * allocated
                total += allocated
        return acc / total if total else None


class _XiAccumulator:
    """Collects per-request outcomes for one xi and folds them into stats."""

    def __init__(self, xi: float) -> None:
        self.xi = xi
        self.num_requests = 0
        self.num_blocked = 0
        self.fidelities: list[float] = []
        self.path_nodes: list[int] = []
        self.by_nodes: dict[int, list[float]] = {}
        self.by_theta: dict[int, list[float]] = {}

    def add(self, outcome: RequestOutcome) -> None:
        self.num_requests += 1
        if outcome.blocked is not None:
            self.num_blocked += 1
            return
        self.fidelities.append(outcome.fidelity)
        self.path_nodes.append(outcome.path_node_count)
        self.by_nodes.setdefault(outcome.path_node_count, []).append(outcome.fidelity)
        self.by_theta.setdefault(outcome.theta, []).append(outcome.fidelity)

    def summary(self) -> XiSummary:
        return XiSummary(
            xi=self.xi,
            num_requests=self.num_requests,
            num_blocked=self.num_blocked,
            fidelity=SampleStats.from_samples(self.fidelities) if self.fidelities else None,
            mean_path_nodes=(
                float(np.mean(self.path_nodes)) if self.path_nodes else None
            ),
            by_path_nodes={
                k: SampleStats.from_samples(v)
                for k, v in sorted(self.by_nodes.items())
            },
            by_theta={
                k: SampleStats.from_samples(v)
                for k, v in sorted(self.by_theta.items())
            },
        )


def _warn_off_grid(xi_values: Sequence[float], n: int) -> None:
    num = n * n
    for xi in xi_values:
        k = xi * num
        if abs(k - round(k)) > 1e-9:
            warnings.warn(
                f"xi={xi} is not a multiple of 1/{num}; "
                f"the upgraded node count rounds to {round(k)}",
                stacklevel=3,
            )


def sweep_xi(
    config: ExperimentConfig,
    path_cache: MutableMapping | None = None,
) -> SweepSummary:
    """Run the full trial grid of a config and aggregate per upgrade fraction.

    With the noise-unaware mapping and a zero fidelity threshold the routing
    decisions depend on neither the class draw nor ``xi`` (all transport
    weights are 1 and nothing can fall below the threshold), so each batch is
    routed once and only the fidelities are re-evaluated per ``xi``.  The
    general path runs every batch on its classed graph.  Both produce
    identical records.  ``path_cache`` optionally shares shortest-path
    memoisation across calls.
    """
    xi_values = config.resolved_xi()
    _warn_off_grid(xi_values, config.n)
    base = _base_graph(config.topology, config.n)
    hq, lq = config.hq_class(), config.lq_class()
    mapping = config.weight_mapping()
    accumulators = [_XiAccumulator(xi) for xi in xi_values]

    fast = config.mapping == UNAWARE and config.f_bar == 0.0
    if fast:
        batches: list[tuple[int, list[PathAllocation]]] = []
        all_lq = assign_classes(base, 0.0, hq, lq, _class_rng(config.seed, 0))
        for p in range(config.num_pair_draws):
            pairs = _pairs(base, draw_pairing(config.seed, config.n, p))
            for c in range(config.num_class_draws):
                requests = shuffle_requests(pairs, _shuffle_rng(config.seed, p, c))
                allocations, _ = allocate_batch(
                    all_lq, requests, mapping, 0.0, config.link_fidelity, path_cache
                )
                batches.append((c, allocations))
        # One upgrade permutation per class draw; each xi upgrades a prefix of
        # it, exactly as assign_classes would.
        orders = [
            [int(v) for v in _class_rng(config.seed, c).permutation(base.num_transport)]
            for c in range(config.num_class_draws)
        ]
        num_transport = base.num_transport
        for acc in accumulators:
            k = round(acc.xi * num_transport)
            for c, allocations in batches:
                upgraded = frozenset(orders[c][:k])
                for allocation in allocations:
                    acc.add(
                        _fast_outcome(
                            allocation,
                            upgraded,
                            hq,
                            lq,
                            num_transport,
                            config.link_fidelity,
                        )
                    )
        return SweepSummary(config=config, per_xi=tuple(a.summary() for a in accumulators))

    pairings = [
        _pairs(base, draw_pairing(config.seed, config.n, p))
        for p in range(config.num_pair_draws)
    ]
    for acc in accumulators:
        for c in range(config.num_class_draws):
            classed = assign_classes(base, acc.xi, hq, lq, _class_rng(config.seed, c))
            for p, pairs in enumerate(pairings):
                requests = shuffle_requests(pairs, _shuffle_rng(config.seed, p, c))
                allocations, _ = allocate_batch(
                    classed,
                    requests,
                    mapping,
                    config.f_bar,
                    config.link_fidelity,
                    path_cache,
                )
                for allocation in allocations:
                    acc.add(_outcome(classed, allocation, hq, lq, config.link_fidelity))
    return SweepSummary(config=config, per_xi=tuple(a.summary() for a in accumulators))


def sweep_eta_l(
    config: ExperimentConfig,
    eta_l_values: Sequence[float] = (0.99, 0.8),
) -> tuple[tuple[float, SweepSummary], ...]:
    """Repeat the xi sweep for several low-quality noise rates.

    All sweeps share the config's seed, so pairings, establishment orders and
    upgrade draws are identical across the compared noise rates.
    """
    return tuple(
        (eta_l, sweep_xi(replace(config, eta_l=eta_l))) for eta_l in eta_l_values
    )


@dataclass(frozen=True)
class ThetaProfile:
    """All fidelity samples of one establishment position at one study point."""

    mapping: str
    xi: float
    theta: int
    fidelities: tuple[float, ...]

    @property
    def count(self) -> int:
        return len(self.fidelities)

    @property
    def mean(self) -> float:
        return float(np.mean(self.fidelities))


def study_noise_awareness(config: ExperimentConfig) -> tuple[ThetaProfile, ...]:
    """Compare both weight mappings by establishment position.

    Runs the same trials under each mapping (identical pairings, class draws
    and orders) and collects every allocated request's fidelity keyed by
    ``(mapping, xi, theta)``.  Requires a zero fidelity threshold so that the
    comparison isolates the routing weights.
    """
    if config.f_bar != 0.0:
        raise ValueError("the noise-awareness study requires f_bar = 0")
    xi_values = config.xi_values if config.xi_values is not None else COARSE_XI_GRID
    _warn_off_grid(xi_values, config.n)
    profiles: list[ThetaProfile] = []
    for mapping in MAPPINGS:
        cfg = replace(config, mapping=mapping, xi_values=tuple(xi_values))
        for xi in xi_values:
            samples: dict[int, list[float]] = {t: [] for t in range(1, config.n + 1)}
            for p in range(cfg.num_pair_draws):
                for c in range(cfg.num_class_draws):
                    record = run_trial(cfg, xi, p, c)
                    for outcome in record.outcomes:
                        if outcome.blocked is None:
                            samples[outcome.theta].append(outcome.fidelity)
            for theta in sorted(samples):
                profiles.append(
                    ThetaProfile(
                        mapping=mapping,
                        xi=xi,
                        theta=theta,
                        fidelities=tuple(samples[theta]),
                    )
                )
    return tuple(profiles)


@dataclass(frozen=True)
class BlockingPoint:
    mapping: str
    f_bar: float
    xi: float
    blocking_probability: float


def study_blocking(
    config: ExperimentConfig,
    f_bar_values: Sequence[float] = (0.53, 0.7, 0.8),
) -> tuple[BlockingPoint, ...]:
    """Blocking probability versus xi for several fidelity thresholds.

    Runs both weight mappings for every threshold on shared randomness; one
    path cache is reused across all sweeps since cache keys fully describe
    the routing problem.
    """
    cache: dict = {}
    points: list[BlockingPoint] = []
    for mapping in MAPPINGS:
        for f_bar in f_bar_values:
            summary = sweep_xi(
                replace(config, mapping=mapping, f_bar=f_bar), path_cache=cache
            )
            points.extend(
                BlockingPoint(
                    mapping=mapping,
                    f_bar=f_bar,
                    xi=x.xi,
                    blocking_probability=x.blocking_probability,
                )
                for x in summary.per_xi
            )
    return tuple(points)
