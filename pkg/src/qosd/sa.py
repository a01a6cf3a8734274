"""Sampling-based solver: greedy budget chunks guided by an unbiased
estimator of the blocking metric, with a biased self-avoiding walk sampler.

Walks are steered toward each sink's shortest-path tree with bias alpha;
the exact probability of every produced walk is tracked so feasible
samples can be importance-weighted.
"""

from __future__ import annotations

import math
import random
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from heapq import heappop, heappush

from .errors import GammaZeroError, InfeasibleBoxError
from .framework import potential_paths
from .instance import QosdInstance, concave_ratio
from .pathcore import BudgetVector, Path, edge_lengths, unseparated_pairs
from .report import Deadline, RunReport

_INF = float("inf")


@dataclass(frozen=True)
class SampledPath:
    """One walk outcome with its exact sampling probability.

    ``feasible`` is True only for walks that reached their sink with
    initial-weight length below T (truncated and dead-end walks count
    zero in the estimator but still carry their probability).
    """

    path: Path
    rho: float
    pair_index: int
    feasible: bool


@dataclass
class SaConfig:
    """Knobs for the sampling solver.

    ``samples_per_round=None`` uses the practical default max(100, 10k);
    theoretical mode sizes rounds with :func:`sample_count` instead and is
    usually astronomically larger.
    """

    q: int = 1
    alpha: float = 0.8
    epsilon: float = 0.3
    delta: float = 0.2
    sample_mode: str = "practical"
    samples_per_round: int | None = None
    seed: int = 0

    def __post_init__(self):
        if self.q < 1:
            raise ValueError("q must be a positive integer")
        if not (0.0 <= self.alpha < 1.0):
            raise ValueError("alpha must lie in [0, 1)")
        if self.sample_mode not in ("practical", "theoretical"):
            raise ValueError(f"unknown sample mode {self.sample_mode!r}")


def build_sp_tree(instance: QosdInstance, x: BudgetVector, sink: int) -> list[int | None]:
    """Next hop toward ``sink`` on a shortest path under f_e(x_e), per node.

    One reverse-graph Dijkstra; equal-distance candidates resolve to the
    lowest next-hop id. Nodes that cannot reach the sink map to None.
    """
    graph = instance.graph
    lengths = edge_lengths(instance, x)
    n = graph.n
    dist: list[float] = [_INF] * n
    next_hop: list[int | None] = [None] * n
    settled = bytearray(n)
    dist[sink] = 0
    heap: list[tuple[float, int]] = [(0, sink)]
    while heap:
        d, u = heappop(heap)
        if settled[u]:
            continue
        settled[u] = 1
        for w, ei in graph.in_adj[u]:
            if settled[w]:
                continue
            nd = d + lengths[ei]
            dw = dist[w]
            if nd < dw:
                dist[w] = nd
                next_hop[w] = u
                heappush(heap, (nd, w))
            elif nd == dw and next_hop[w] is not None and u < next_hop[w]:
                next_hop[w] = u
    return next_hop


def sample_path(
    instance: QosdInstance,
    x: BudgetVector,
    trees: dict[int, list[int | None]],
    alpha: float,
    rng: random.Random,
    *,
    pair_index: int | None = None,
    lengths: list[int] | None = None,
) -> SampledPath:
    """One biased self-avoiding walk for a uniformly chosen pair.

    Steps toward the shortest-path tree parent with probability alpha and
    uniformly over the other unvisited out-neighbors otherwise; ends on
    reaching the sink, on current-weight length >= T, or at a dead end.
    Forced steps (a single unvisited neighbor) consume no randomness.
    """
    if lengths is None:
        lengths = edge_lengths(instance, x)
    weights = instance.weights
    graph = instance.graph
    threshold = instance.threshold
    if pair_index is None:
        pair_index = rng.randrange(instance.k)
    s, t = instance.pairs[pair_index]
    tree = trees[t]

    rho = 1.0 / instance.k
    nodes = [s]
    edges: list[int] = []
    visited = {s}
    current = 0
    initial = 0
    u = s
    while u != t and current < threshold:
        avail = [(v, ei) for v, ei in graph.out_adj[u] if v not in visited]
        if not avail:
            break
        if len(avail) == 1:
            v, ei = avail[0]
        else:
            parent = tree[u]
            slots = len(avail)
            probs: list[float]
            if parent is not None and any(v == parent for v, _ in avail):
                other = (1.0 - alpha) / (slots - 1)
                probs = [alpha if v == parent else other for v, _ in avail]
            else:
                probs = [1.0 / slots] * slots
            draw = rng.random()
            acc = 0.0
            choice = slots - 1
            for i, p in enumerate(probs):
                acc += p
                if draw < acc:
                    choice = i
                    break
            v, ei = avail[choice]
            rho *= probs[choice]
        visited.add(v)
        nodes.append(v)
        edges.append(ei)
        current += lengths[ei]
        initial += weights[ei].table[0]
        u = v
    feasible = u == t and initial < threshold
    path = Path(tuple(nodes), tuple(edges), initial, pair_index)
    return SampledPath(path, rho, pair_index, feasible)


def estimate_B(instance: QosdInstance, samples: list[SampledPath], x: BudgetVector) -> float:
    """Importance-weighted mean of capped path lengths over the samples."""
    if not samples:
        raise ValueError("cannot estimate from an empty sample set")
    threshold = instance.threshold
    weights = instance.weights
    total = 0.0
    for sp in samples:
        if not sp.feasible:
            continue
        ln = 0
        for e in sp.path.edge_seq:
            ln += weights[e].table[x.values[e]]
            if ln >= threshold:
                ln = threshold
                break
        total += ln / sp.rho
    return total / len(samples)


def sample_count(
    instance: QosdInstance,
    q: int,
    epsilon: float,
    delta_round: float,
    gamma=None,
) -> int:
    """Per-round sample size with guaranteed estimator accuracy.

    Uses the fixed split eps1 = eps/2, delta1 = delta_round/2 and the
    lower bound of 1 on the best chunk's true marginal gain; the binomial
    coefficient is evaluated in the log domain. Undefined at gamma = 0.
    """
    if not (0 < epsilon < 1 and 0 < delta_round < 1):
        raise ValueError("epsilon and delta_round must lie in (0, 1)")
    if gamma is None:
        gamma = concave_ratio(instance.weights)
    gamma = float(gamma)
    if gamma <= 0.0:
        raise GammaZeroError(
            "theoretical sample sizing diverges at concave ratio 0; use practical mode"
        )
    eps1 = epsilon / 2.0
    delta1 = delta_round / 2.0
    t = instance.threshold
    k = instance.k
    d = max(instance.graph.max_out_degree, 1)
    h = instance.hop_bound
    n = instance.graph.n
    scale = (t * k) ** 2 * float(d) ** (2 * h)
    first = math.log(1.0 / delta1) / eps1**2
    log_binom = (
        math.lgamma(n + q + 1) - math.lgamma(q + 1) - math.lgamma(n + 1)
    )
    shrink = 1.0 - math.exp(-gamma)
    second = (log_binom - math.log(delta1)) / (2.0 * shrink**2 * eps1**2)
    return math.ceil(scale * max(first, second))


def greedy_chunk(
    instance: QosdInstance,
    samples: list[SampledPath],
    x: BudgetVector,
    q: int,
) -> BudgetVector:
    """Up to q unit-greedy steps on the estimator's marginal gain,
    restricted to edges of feasible samples with box room left."""
    threshold = instance.threshold
    weights = instance.weights
    box = instance.box
    m = instance.graph.m
    v = [0] * m

    live = [sp for sp in samples if sp.feasible]
    if not live or q <= 0:
        return BudgetVector(v)
    inv = 1.0 / len(samples)
    sample_weight = [inv / sp.rho for sp in live]
    lengths = []
    for sp in live:
        ln = sum(weights[e].table[x.values[e]] for e in sp.path.edge_seq)
        lengths.append(ln)
    support: dict[int, list[int]] = {}
    for si, sp in enumerate(live):
        for e in sp.path.edge_seq:
            support.setdefault(e, []).append(si)
    support_edges = sorted(support)

    for _ in range(q):
        best_edge = -1
        best_gain = 0.0
        for e in support_edges:
            xe = x.values[e] + v[e]
            if xe >= box[e]:
                continue
            delta = weights[e].table[xe + 1] - weights[e].table[xe]
            if delta == 0:
                continue
            gain = 0.0
            for si in support[e]:
                short = threshold - lengths[si]
                if short > 0:
                    gain += (short if delta > short else delta) * sample_weight[si]
            if gain > best_gain:
                best_gain = gain
                best_edge = e
        if best_edge < 0:
            break
        xe = x.values[best_edge] + v[best_edge]
        delta = weights[best_edge].table[xe + 1] - weights[best_edge].table[xe]
        v[best_edge] += 1
        for si in support[best_edge]:
            lengths[si] += delta
    return BudgetVector(v)


def _derived_rng(master: int, round_idx: int, attempt: int, index: int) -> random.Random:
    # string seeding hashes with sha512, stable across runs and platforms
    return random.Random(f"{master}:{round_idx}:{attempt}:{index}")


def _draw_samples(
    instance: QosdInstance,
    x: BudgetVector,
    trees: dict[int, list[int | None]],
    alpha: float,
    master: int,
    round_idx: int,
    attempt: int,
    count: int,
    threads: int,
) -> list[SampledPath]:
    lengths = edge_lengths(instance, x)

    def one(i: int) -> SampledPath:
        rng = _derived_rng(master, round_idx, attempt, i)
        return sample_path(instance, x, trees, alpha, rng, lengths=lengths)

    indices = range(count)
    if threads > 1 and count > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(one, indices))
    return [one(i) for i in indices]


def _exact_unit_step(instance: QosdInstance, x: BudgetVector, threads: int) -> int:
    """Fallback: best unit increment by exact gain over the current
    shortest paths; guarantees progress when sampling keeps missing."""
    paths = potential_paths(instance, x, threads=threads)
    if not paths:
        return -1
    threshold = instance.threshold
    weights = instance.weights
    box = instance.box
    lengths = {}
    support: dict[int, list[Path]] = {}
    for p in paths:
        lengths[p.key] = sum(weights[e].table[x.values[e]] for e in p.edge_seq)
        for e in p.edge_seq:
            support.setdefault(e, []).append(p)
    best_edge = -1
    best_gain = 0
    for e in sorted(support):
        xe = x.values[e]
        if xe >= box[e]:
            continue
        delta = weights[e].table[xe + 1] - weights[e].table[xe]
        if delta == 0:
            continue
        gain = 0
        for p in support[e]:
            short = threshold - lengths[p.key]
            if short > 0:
                gain += short if delta > short else delta
        if gain > best_gain:
            best_gain = gain
            best_edge = e
    if best_edge < 0:
        raise InfeasibleBoxError(
            "no unit increment improves the current shortest paths"
        )
    return best_edge


def run_sa(
    instance: QosdInstance,
    config: SaConfig | None = None,
    *,
    threads: int = 1,
    deadline: Deadline | float | None = None,
) -> RunReport:
    """Sampling rounds until separation.

    Each round rebuilds the shortest-path trees under the current budget,
    draws fresh samples and adds the greedy chunk. A zero chunk escalates
    by doubling the sample count up to three times, then falls back to one
    exact unit step so progress is unconditional.
    """
    config = config or SaConfig()
    deadline = Deadline.ensure(deadline)
    start = time.perf_counter()

    if config.sample_mode == "theoretical":
        total_box = sum(instance.box)
        base_count = sample_count(
            instance, config.q, config.epsilon, config.delta / max(total_box, 1)
        )
    else:
        base_count = (
            config.samples_per_round
            if config.samples_per_round
            else max(100, 10 * instance.k)
        )

    m = instance.graph.m
    x = BudgetVector.zeros(m)
    rounds = 0
    samples_drawn = 0
    escalations = 0
    fallbacks = 0
    sinks = sorted({t for _, t in instance.pairs})
    while True:
        deadline.check("sampling round")
        if not unseparated_pairs(instance, x, threads=threads):
            break
        trees = {t: build_sp_tree(instance, x, t) for t in sinks}
        progressed = False
        for attempt in range(4):  # base try plus three doublings
            if attempt > 0:
                escalations += 1
            count = base_count * (2**attempt)
            samples = _draw_samples(
                instance, x, trees, config.alpha, config.seed,
                rounds, attempt, count, threads,
            )
            samples_drawn += count
            chunk = greedy_chunk(instance, samples, x, config.q)
            if chunk.norm > 0:
                x = x.plus(chunk)
                progressed = True
                break
        if not progressed:
            edge = _exact_unit_step(instance, x, threads)
            if edge < 0:
                break
            x = x.plus(BudgetVector.unit(m, edge))
            fallbacks += 1
        rounds += 1

    feasible = not unseparated_pairs(instance, x, threads=threads)
    return RunReport(
        algorithm="sa",
        budget=x,
        norm=x.norm,
        outer_iterations=rounds,
        inner_iterations=x.norm,
        wall_time=time.perf_counter() - start,
        feasible=feasible,
        seed=config.seed,
        extras={
            "samples_drawn": samples_drawn,
            "escalations": escalations,
            "fallbacks": fallbacks,
            "samples_per_round": base_count,
        },
    )
