"""
Combinatorial instances for the (1+1) EA.

Minimum spanning trees over edge bit strings (non-trees are never accepted),
single-source shortest paths over predecessor trees, the classical exact
oracles used as stopping targets (Kruskal, Dijkstra), drift checks on the
fitness gap, and a surrogate process for the Euler tour bound.
"""

import heapq
import logging
import math
from dataclasses import dataclass

import networkx as nx
import numpy as np

from driftlab.drift import (PotentialTrace, check_multiplicative_condition,
                            pooled_drift_estimates)
from driftlab.ea import (FitnessOracle, RunConfig, RunRecord, run,
                         summarize_records)
from driftlab.errors import ConfigurationError, EmptyInputError
from driftlab.linear import all_masks
from driftlab.seeding import child_seed, make_rng

logger = logging.getLogger(__name__)

E = math.e
W_MAX_CAP = 10**6
MAX_EXACT_EDGES = 16


@dataclass(frozen=True)
class WeightedGraph:
    """Graph with positive integer edge weights; edges are (u, v, w)."""

    n_vertices: int
    edges: tuple
    directed: bool = False

    def __post_init__(self):
        if self.n_vertices < 1:
            raise ConfigurationError("graph needs at least one vertex")
        edges = tuple((int(u), int(v), int(w)) for u, v, w in self.edges)
        for u, v, w in edges:
            if not (0 <= u < self.n_vertices and 0 <= v < self.n_vertices):
                raise ConfigurationError("edge (%d, %d) has a vertex out of range" % (u, v))
            if u == v:
                raise ConfigurationError("self-loop at vertex %d" % u)
            if not 1 <= w <= W_MAX_CAP:
                raise ConfigurationError("edge (%d, %d) weight %d outside [1, %d]" % (u, v, w, W_MAX_CAP))
        object.__setattr__(self, "edges", edges)
        if not nx.is_connected(self.to_networkx(directed=False)):
            raise ConfigurationError("graph is not connected")

    @property
    def m(self):
        return len(self.edges)

    @property
    def w_max(self):
        return max(w for _, _, w in self.edges) if self.edges else 1

    @property
    def connected(self):
        return True

    def to_networkx(self, directed=None):
        directed = self.directed if directed is None else directed
        G = nx.MultiDiGraph() if directed else nx.MultiGraph()
        G.add_nodes_from(range(self.n_vertices))
        for i, (u, v, w) in enumerate(self.edges):
            G.add_edge(u, v, key=i, weight=w)
        return G

    def to_text(self):
        lines = ["%d %d" % (self.n_vertices, self.m)]
        lines.extend("%d %d %d" % e for e in self.edges)
        return "\n".join(lines) + "\n"


def load_graph(text, directed=False):
    """Parse 'n m' followed by m lines 'u v w' (0-based vertices)."""
    tokens = text.replace("/", " ").split()
    try:
        n, m = int(tokens[0]), int(tokens[1])
        values = [int(tok) for tok in tokens[2:]]
    except (IndexError, ValueError) as err:
        raise ConfigurationError("malformed graph: %s" % err)
    if len(values) != 3 * m:
        raise ConfigurationError("expected %d edge lines, found %d values" % (m, len(values)))
    edges = tuple(tuple(values[3 * i:3 * i + 3]) for i in range(m))
    return WeightedGraph(n, edges, directed)


def read_graph(path, directed=False):
    with open(path) as stream:
        return load_graph(stream.read(), directed)


def random_graph(n, m, w_max, rng, directed=False):
    """
    Random connected simple graph with ``m`` edges and weights in 1..w_max.

    A random tree (an arborescence rooted at 0 when directed) guarantees
    connectivity; the remaining edges are distinct random pairs.
    """
    rng = make_rng(rng)
    limit = n * (n - 1) if directed else n * (n - 1) // 2
    if not n - 1 <= m <= limit:
        raise ConfigurationError("m=%d impossible for a simple graph on %d vertices" % (m, n))
    order = rng.permutation(n)
    if directed:
        order = np.concatenate(([0], order[order != 0]))
    pairs = []
    seen = set()
    for i in range(1, n):
        parent = int(order[rng.integers(0, i)])
        child = int(order[i])
        pairs.append((parent, child))
        seen.add((parent, child) if directed else frozenset((parent, child)))
    while len(pairs) < m:
        u, v = (int(a) for a in rng.integers(0, n, size=2))
        key = (u, v) if directed else frozenset((u, v))
        if u == v or key in seen:
            continue
        seen.add(key)
        pairs.append((u, v))
    weights = rng.integers(1, w_max + 1, size=m)
    return WeightedGraph(n, tuple((u, v, int(w)) for (u, v), w in zip(pairs, weights)), directed)


class UnionFind(object):
    """Disjoint sets with path compression and union by rank."""

    def __init__(self, size):
        self.parent = list(range(size))
        self.rank = [0] * size

    def find(self, x):
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, x, y):
        rx, ry = self.find(x), self.find(y)
        if rx == ry:
            return False
        if self.rank[rx] < self.rank[ry]:
            rx, ry = ry, rx
        self.parent[ry] = rx
        if self.rank[rx] == self.rank[ry]:
            self.rank[rx] += 1
        return True


def _greedy_tree(g, keys):
    tree = np.zeros(g.m, dtype=np.int8)
    sets = UnionFind(g.n_vertices)
    for i in sorted(range(g.m), key=lambda i: (keys[i], i)):
        u, v, _ = g.edges[i]
        if sets.union(u, v):
            tree[i] = 1
    return tree


def kruskal(g):
    """Minimum spanning tree weight and edge bit string; ties broken by edge index."""
    tree = _greedy_tree(g, [w for _, _, w in g.edges])
    w_opt = sum(w for (_, _, w), bit in zip(g.edges, tree) if bit)
    return w_opt, tree


def maximum_spanning_tree(g):
    return _greedy_tree(g, [-w for _, _, w in g.edges])


def random_spanning_tree(g, rng):
    """Kruskal on random edge keys."""
    return _greedy_tree(g, make_rng(rng).random(g.m).tolist())


def is_spanning_tree(x, g):
    x = np.asarray(x)
    if x.size != g.m or int(x.sum()) != g.n_vertices - 1:
        return False
    sets = UnionFind(g.n_vertices)
    for i in np.flatnonzero(x):
        u, v, _ = g.edges[i]
        if not sets.union(u, v):
            return False
    return True


class MSTFitness(FitnessOracle):
    """Tree weight for spanning trees, +inf (always rejected) otherwise."""

    description = "mst"

    def __init__(self, g):
        w_opt, tree = kruskal(g)
        super(MSTFitness, self).__init__(g.m, float(w_opt))
        self.graph = g
        self.weights = np.array([w for _, _, w in g.edges], dtype=float)
        self.optimal_tree = tree

    def evaluate(self, x):
        return mst_fitness(x, self.graph, self.weights)

    def gap(self, x):
        return self.evaluate(x) - self.optimum_value


def mst_fitness(x, g, weights=None):
    if not is_spanning_tree(x, g):
        return math.inf
    if weights is None:
        weights = np.array([w for _, _, w in g.edges], dtype=float)
    return float(weights @ np.asarray(x, dtype=float))


def mst_bound(m, w_max):
    """2 e m^2 (1 + ln m + ln w_max)."""
    return 2.0 * E * m * m * (1.0 + math.log(m) + math.log(w_max))


def _mst_start(g, start, seed):
    if isinstance(start, str):
        if start == "random":
            return random_spanning_tree(g, make_rng(child_seed(seed, 0)))
        if start == "worst":
            return maximum_spanning_tree(g)
        if start == "optimal":
            return kruskal(g)[1]
        raise ConfigurationError("unknown MST start %r" % (start,))
    tree = np.asarray(start, dtype=np.int8)
    if not is_spanning_tree(tree, g):
        raise ConfigurationError("explicit MST start is not a spanning tree")
    return tree


def mst_run(g, seed=42, max_iters=None, start="random", record_gap=False, stride=1):
    """
    (1+1) EA on edge bit strings with mutation rate 1/m, starting from a
    spanning tree; stops when the tree weight equals the Kruskal optimum.
    """
    f = MSTFitness(g)
    config = RunConfig(n=g.m, seed=seed,
                       max_iters=max_iters or int(math.ceil(10 * mst_bound(g.m, g.w_max))),
                       init=_mst_start(g, start, seed), record_stride=stride,
                       record_potential=f.gap if record_gap else None)
    return run(f, config)


def mst_batch(g, reps, seed=42, **kwargs):
    records = [mst_run(g, child_seed(seed, i), **kwargs) for i in range(reps)]
    return summarize_records(records)


def mst_exact_drift(g, x):
    """Exact expected one-step decrease of w(x) - w_opt over all 2**m masks."""
    if g.m > MAX_EXACT_EDGES:
        raise ConfigurationError("exact MST drift needs m <= %d" % MAX_EXACT_EDGES)
    f = MSTFitness(g)
    x = np.asarray(x, dtype=np.int8)
    fx = f.evaluate(x)
    masks = all_masks(g.m)
    flips = masks.sum(axis=1)
    p = 1.0 / g.m
    terms = []
    for mask, k in zip(masks, flips):
        fy = f.evaluate(mask ^ x)
        if fy <= fx:
            terms.append(p ** k * (1.0 - p) ** (g.m - k) * (fx - fy))
    return math.fsum(terms)


def mst_drift_check(g, reps, seed=42, min_samples=500):
    """
    Monte-Carlo drift of X = w(x) - w_opt against the required X/(e m^2),
    per level within two CI half-widths; sparse levels are bucketed.
    """
    if reps < 1:
        raise ConfigurationError("reps must be positive")
    traces = [mst_run(g, child_seed(seed, i), record_gap=True).trace for i in range(reps)]
    estimates = pooled_drift_estimates(traces, min_samples)
    return check_multiplicative_condition(estimates, 1.0 / (E * g.m ** 2), min_samples=min_samples)


def _adjacency(g):
    out = [[] for _ in range(g.n_vertices)]
    for u, v, w in g.edges:
        out[u].append((v, w))
        if not g.directed:
            out[v].append((u, w))
    return out


def dijkstra(g, source):
    """Shortest-path distances from ``source`` (inf where unreachable)."""
    dist = [math.inf] * g.n_vertices
    dist[source] = 0
    heap = [(0, source)]
    adjacency = _adjacency(g)
    while heap:
        d, u = heapq.heappop(heap)
        if d > dist[u]:
            continue
        for v, w in adjacency[u]:
            if d + w < dist[v]:
                dist[v] = d + w
                heapq.heappush(heap, (d + w, v))
    return np.array(dist, dtype=float)


def bellman_ford(g, source):
    dist = np.full(g.n_vertices, math.inf)
    dist[source] = 0
    arcs = [(u, v, w) for u, v, w in g.edges]
    if not g.directed:
        arcs += [(v, u, w) for u, v, w in g.edges]
    for _ in range(g.n_vertices - 1):
        changed = False
        for u, v, w in arcs:
            if dist[u] + w < dist[v]:
                dist[v] = dist[u] + w
                changed = True
        if not changed:
            break
    return dist


UNSET = -1
PENDING, WALKING, ROOTED, PENALIZED = 0, 1, 2, 3


@dataclass
class PredecessorTree:
    """pred[v] is an in-neighbor of v or UNSET; pred[source] is ignored."""

    pred: np.ndarray
    source: int

    def copy(self):
        return PredecessorTree(self.pred.copy(), self.source)


class SSSPInstance(object):
    """Directed graph, source and the lookups the shortest-path EA needs."""

    def __init__(self, g, source=0):
        if not 0 <= source < g.n_vertices:
            raise ConfigurationError("source %d out of range" % source)
        self.graph = g
        self.source = source
        self.n = g.n_vertices
        self.penalty = self.n * g.w_max
        self.arc_weight = {}
        for u, v, w in g.edges:
            arcs = [(u, v)] if g.directed else [(u, v), (v, u)]
            for a in arcs:
                self.arc_weight[a] = min(w, self.arc_weight.get(a, w))
        self.in_neighbors = [[] for _ in range(self.n)]
        for u, v in sorted(self.arc_weight):
            self.in_neighbors[v].append(u)
        self.movable = [v for v in range(self.n) if v != source and self.in_neighbors[v]]
        self.distances = dijkstra(g, source)
        if not np.all(np.isfinite(self.distances)):
            raise ConfigurationError("some vertices are unreachable from source %d" % source)
        self.optimum_value = float(self.distances.sum())

    def vertex_weights(self, tree):
        """Path weight to the source per vertex, penalty where no path exists."""
        pred = tree.pred
        weights = np.zeros(self.n)
        state = np.zeros(self.n, dtype=np.int8)
        state[self.source] = ROOTED
        for v in range(self.n):
            path = []
            u = v
            while state[u] == PENDING:
                state[u] = WALKING
                path.append(u)
                if pred[u] == UNSET:
                    break
                u = pred[u]
            if state[u] == ROOTED:
                base = weights[u]
                for x in reversed(path):
                    base += self.arc_weight[(pred[x], x)]
                    weights[x] = base
                    state[x] = ROOTED
            else:
                weights[path] = self.penalty
                state[path] = PENALIZED
        return weights

    def fitness(self, tree):
        return float(self.vertex_weights(tree).sum())

    def dijkstra_tree(self):
        pred = np.full(self.n, UNSET)
        for v in self.movable:
            pred[v] = min(self.in_neighbors[v],
                          key=lambda u: (self.distances[u] + self.arc_weight[(u, v)], u))
        return PredecessorTree(pred, self.source)

    def random_tree(self, rng):
        pred = np.full(self.n, UNSET)
        for v in self.movable:
            pred[v] = self.in_neighbors[v][rng.integers(0, len(self.in_neighbors[v]))]
        return PredecessorTree(pred, self.source)

    def mutate(self, tree, rng):
        """Apply 1 + Poisson(1) elementary moves: reset a random vertex's predecessor."""
        child = tree.copy()
        for _ in range(1 + int(rng.poisson(1.0))):
            v = self.movable[rng.integers(0, len(self.movable))]
            options = self.in_neighbors[v]
            child.pred[v] = options[rng.integers(0, len(options))]
        return child


def sssp_fitness(tree, g):
    return SSSPInstance(g, tree.source).fitness(tree)


def sssp_bound(n, w_max):
    """6 n^3 (1 + 2 ln n + ln w_max)."""
    return 6.0 * n ** 3 * (1.0 + 2.0 * math.log(n) + math.log(w_max))


def sssp_run(g, source=0, seed=42, max_iters=None, start="random", record_gap=False):
    """
    Shortest-path-tree EA: mutate by 1 + Poisson(1) elementary predecessor
    moves, accept iff the fitness does not increase, stop at the Dijkstra total.
    """
    inst = SSSPInstance(g, source)
    rng = make_rng(seed)
    if isinstance(start, PredecessorTree):
        tree = start.copy()
    elif start == "random":
        tree = inst.random_tree(rng)
    elif start == "unset":
        tree = PredecessorTree(np.full(inst.n, UNSET), source)
    elif start == "dijkstra":
        tree = inst.dijkstra_tree()
    else:
        raise ConfigurationError("unknown SSSP start %r" % (start,))

    cap = max_iters or int(math.ceil(10 * sssp_bound(inst.n, g.w_max)))
    fx = inst.fitness(tree)
    gaps = [fx - inst.optimum_value] if record_gap else None
    t = 0
    while fx > inst.optimum_value and t < cap and inst.movable:
        child = inst.mutate(tree, rng)
        fy = inst.fitness(child)
        if fy <= fx:
            tree, fx = child, fy
        t += 1
        if gaps is not None:
            gaps.append(fx - inst.optimum_value)
    capped = fx > inst.optimum_value
    trace = PotentialTrace(np.array(gaps), capped=capped) if gaps is not None else None
    if capped:
        logger.debug("SSSP run with seed %d capped after %d iterations", seed, t)
    return RunRecord(t, t + 1, tree.pred.copy(), fx, capped, trace, seed)


def sssp_batch(g, reps, source=0, seed=42, **kwargs):
    records = [sssp_run(g, source, child_seed(seed, i), **kwargs) for i in range(reps)]
    return summarize_records(records)


def tree_distances(pred, g, source=0):
    inst = SSSPInstance(g, source)
    return inst.vertex_weights(PredecessorTree(np.asarray(pred), source))


@dataclass
class GapRatioReport:
    """Measured E[gap'] / gap per level against 1 - 1/(3 n^3); diagnostic only."""

    passed: bool
    worst_ratio: float
    required_ratio: float
    measured_constant: float
    levels_checked: int
    diagnostic: bool = True


def sssp_drift_check(g, reps, source=0, seed=42, min_samples=500):
    """
    Estimate the conditional gap ratio E[g_{i+1} | g_i] / g_i. The mutation
    operator is a reconstruction, so a failure is reported, not raised.
    """
    if reps < 1:
        raise ConfigurationError("reps must be positive")
    traces = [sssp_run(g, source, child_seed(seed, i), record_gap=True).trace
              for i in range(reps)]
    n = g.n_vertices
    required = 1.0 - 1.0 / (3.0 * n ** 3)
    try:
        estimates = pooled_drift_estimates(traces, min_samples)
        report = check_multiplicative_condition(estimates, 1.0 / (3.0 * n ** 3), min_samples=min_samples)
    except EmptyInputError:
        logger.warning("no SSSP gap level reached %d samples", min_samples)
        return GapRatioReport(False, math.nan, required, math.nan, 0)
    result = GapRatioReport(report.passed, 1.0 - report.worst_ratio, required,
                            report.worst_ratio * n ** 3, report.checked)
    if not result.passed:
        logger.warning("SSSP gap ratio %.6f above %.6f (diagnostic)", result.worst_ratio, required)
    return result


def euler_bound(m):
    """e m ln m."""
    if m < 3:
        raise ConfigurationError("an Euler tour instance has at least 3 edges")
    return E * m * math.log(m)


def euler_bound_internal(m):
    """Multiplicative bound with delta = 1/(e m), smin = 1, s0 = max(1, m/3 - 1)."""
    if m < 3:
        raise ConfigurationError("an Euler tour instance has at least 3 edges")
    return E * m * (1.0 + math.log(max(1.0, m / 3.0 - 1.0)))


def _euler_start(m):
    return m // 3 - 1


def euler_surrogate_process(m, rng):
    """
    Integer potential s (cycle count minus one) from floor(m/3) - 1, dropping
    by one with probability (s+1)/(e m) per iteration.
    """
    if m < 3:
        raise ConfigurationError("an Euler tour instance has at least 3 edges")
    rng = make_rng(rng)
    s0 = _euler_start(m)
    if s0 == 0:
        return PotentialTrace(np.zeros(1))
    levels = np.arange(s0, 0, -1)
    waits = rng.geometric((levels + 1) / (E * m))
    return PotentialTrace(np.append(np.repeat(levels, waits), 0).astype(float))


def euler_surrogate_times(m, runs, rng):
    rng = make_rng(rng)
    s0 = _euler_start(m)
    if s0 == 0:
        return np.zeros(runs, dtype=np.int64)
    p = (np.arange(1, s0 + 1) + 1) / (E * m)
    return rng.geometric(p, size=(runs, s0)).sum(axis=1)


def euler_expected_time(m):
    """Exact mean absorption time e m sum_{s=1}^{s0} 1/(s+1) of the surrogate."""
    return math.fsum(E * m / (s + 1) for s in range(1, _euler_start(m) + 1))
