"""Communication graphs and dynamic graph models.

Vertices are labelled ``1..n``. A :class:`Graph` stores unordered pairs, so
every graph is bidirectional by construction; self-loops are stored
explicitly so that a missing one can be reported by the validator.
"""

from __future__ import annotations

import functools
from collections import deque
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Iterable, Sequence, Union

import numpy as np

RANDOM_RETRY_CAP = 10_000


def _pair(i: int, j: int) -> tuple[int, int]:
    return (i, j) if i <= j else (j, i)


@dataclass(frozen=True)
class Graph:
    """One round's communication topology."""

    n: int
    edges: frozenset[tuple[int, int]]

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"graph needs at least one vertex, got n={self.n}")
        canon = frozenset(_pair(int(i), int(j)) for i, j in self.edges)
        for i, j in canon:
            if not (1 <= i <= self.n and 1 <= j <= self.n):
                raise ValueError(f"edge {{{i},{j}}} outside vertex range 1..{self.n}")
        object.__setattr__(self, "edges", canon)

    @classmethod
    def from_edges(cls, n: int, proper_edges: Iterable[tuple[int, int]],
                   self_loops: bool = True) -> "Graph":
        """Build a graph from its proper edges, adding every self-loop by default."""
        edges = {_pair(i, j) for i, j in proper_edges}
        if self_loops:
            edges.update((i, i) for i in range(1, n + 1))
        return cls(n, frozenset(edges))

    @classmethod
    def from_adjacency(cls, adj: np.ndarray) -> "Graph":
        adj = np.array(adj, dtype=bool)
        n = adj.shape[0]
        if n < 1 or adj.shape != (n, n) or not np.array_equal(adj, adj.T):
            raise ValueError("adjacency must be a non-empty square symmetric matrix")
        ii, jj = np.nonzero(np.triu(adj))
        g = object.__new__(cls)
        object.__setattr__(g, "n", n)
        object.__setattr__(g, "edges", frozenset(zip((ii + 1).tolist(), (jj + 1).tolist())))
        adj.setflags(write=False)
        g.__dict__["adjacency"] = adj
        return g

    @property
    def proper_edges(self) -> list[tuple[int, int]]:
        return sorted(e for e in self.edges if e[0] != e[1])

    @cached_property
    def adjacency(self) -> np.ndarray:
        """Read-only boolean adjacency matrix (0-based), self-loops on the diagonal."""
        adj = np.zeros((self.n, self.n), dtype=bool)
        for i, j in self.edges:
            adj[i - 1, j - 1] = adj[j - 1, i - 1] = True
        adj.setflags(write=False)
        return adj

    @cached_property
    def degrees(self) -> np.ndarray:
        deg = self.adjacency.sum(axis=1)
        deg.setflags(write=False)
        return deg

    @cached_property
    def _neighbor_lists(self) -> tuple[tuple[int, ...], ...]:
        adj = self.adjacency
        return tuple(tuple(int(j) + 1 for j in np.flatnonzero(adj[i])) for i in range(self.n))

    def _check_vertex(self, i: int) -> None:
        if not 1 <= i <= self.n:
            raise IndexError(f"vertex {i} out of range 1..{self.n}")

    def neighbors(self, i: int) -> tuple[int, ...]:
        """Closed neighborhood of ``i`` in ascending order (contains ``i`` when reflexive)."""
        self._check_vertex(i)
        return self._neighbor_lists[i - 1]

    def degree(self, i: int) -> int:
        self._check_vertex(i)
        return len(self._neighbor_lists[i - 1])

    @cached_property
    def violation(self) -> "Violation | None":
        return validate_class_g(self)


def neighbors(g: Graph, i: int) -> tuple[int, ...]:
    return g.neighbors(i)


def degree(g: Graph, i: int) -> int:
    return g.degree(i)


@dataclass(frozen=True)
class Violation:
    """Why a graph falls outside the admissible class.

    ``prop`` is ``"reflexivity"`` or ``"connectivity"``. For reflexivity the
    witness is the first vertex without a self-loop; for connectivity it is
    a pair of vertex sets: the component of vertex 1 and everything else.
    """

    prop: str
    witness: object


def components(g: Graph) -> list[frozenset[int]]:
    """Connected components by breadth-first search, ordered by smallest vertex."""
    seen: set[int] = set()
    comps = []
    for start in range(1, g.n + 1):
        if start in seen:
            continue
        comp = {start}
        queue = deque([start])
        while queue:
            u = queue.popleft()
            for v in g._neighbor_lists[u - 1]:
                if v not in comp:
                    comp.add(v)
                    queue.append(v)
        seen |= comp
        comps.append(frozenset(comp))
    return comps


def validate_class_g(g: Graph) -> Violation | None:
    """Return ``None`` if ``g`` is reflexive and connected, else the first violation."""
    missing = np.flatnonzero(~np.diag(g.adjacency))
    if len(missing):
        return Violation("reflexivity", int(missing[0]) + 1)
    if not _connected(g.adjacency):
        comps = components(g)
        return Violation("connectivity", (comps[0], frozenset().union(*comps[1:])))
    return None


def require_class_g(g: Graph) -> Graph:
    v = g.violation
    if v is not None:
        raise ValueError(f"graph violates {v.prop} (witness {v.witness!r})")
    return g


# -- named families ---------------------------------------------------------

@functools.lru_cache(maxsize=512)
def path_graph(n: int) -> Graph:
    return Graph.from_edges(n, [(i, i + 1) for i in range(1, n)])


@functools.lru_cache(maxsize=512)
def cycle_graph(n: int) -> Graph:
    edges = [(i, i + 1) for i in range(1, n)]
    if n > 2:
        edges.append((1, n))
    return Graph.from_edges(n, edges)


@functools.lru_cache(maxsize=4096)
def star_graph(n: int, hub: int = 1) -> Graph:
    if not 1 <= hub <= n:
        raise ValueError(f"hub {hub} out of range 1..{n}")
    return Graph.from_edges(n, [(hub, j) for j in range(1, n + 1) if j != hub])


@functools.lru_cache(maxsize=512)
def complete_graph(n: int) -> Graph:
    return Graph.from_edges(n, [(i, j) for i in range(1, n + 1) for j in range(i + 1, n + 1)])


NAMED_GRAPHS = {
    "path": path_graph,
    "cycle": cycle_graph,
    "star": star_graph,
    "complete": complete_graph,
}


def named_graph(name: str, n: int) -> Graph:
    try:
        return NAMED_GRAPHS[name](n)
    except KeyError:
        raise ValueError(f"unknown graph family {name!r}; expected one of {sorted(NAMED_GRAPHS)}") from None


# -- dynamic graph models ---------------------------------------------------

@dataclass(frozen=True)
class Static:
    base: Graph
    kind = "Static"

    def __post_init__(self):
        require_class_g(self.base)

    @property
    def n(self) -> int:
        return self.base.n

    def graph(self, t: int) -> Graph:
        return self.base


@dataclass(frozen=True)
class Schedule:
    """Explicit list of graphs; round ``t`` uses entry ``(t - 1) mod len``."""

    rounds: tuple[Graph, ...]
    kind = "Schedule"

    def __post_init__(self):
        object.__setattr__(self, "rounds", tuple(self.rounds))
        if not self.rounds:
            raise ValueError("schedule needs at least one graph")
        n = self.rounds[0].n
        for k, g in enumerate(self.rounds):
            if g.n != n:
                raise ValueError(f"schedule entry {k} has n={g.n}, expected {n}")
            require_class_g(g)

    @property
    def n(self) -> int:
        return self.rounds[0].n

    def graph(self, t: int) -> Graph:
        return self.rounds[(t - 1) % len(self.rounds)]


@dataclass(frozen=True)
class RandomConnected:
    """Erdos-Renyi graph conditioned on connectivity, drawn afresh each round.

    Round ``t`` is drawn from a generator seeded with ``(seed, t)``, so any
    round can be regenerated independently of the others.
    """

    n: int
    p: float
    seed: int = 0
    kind = "RandomConnected"

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"n must be positive, got {self.n}")
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"edge probability must lie in [0, 1], got {self.p}")

    def graph(self, t: int) -> Graph:
        return _random_connected(self.n, self.p, self.seed, t)


@functools.lru_cache(maxsize=65536)
def _random_connected(n: int, p: float, seed: int, t: int) -> Graph:
    rng = np.random.default_rng([seed, t])
    iu = _upper_indices(n)
    m = len(iu[0])
    # Attempts are drawn in growing batches; a (k, m) draw consumes the stream
    # exactly like k draws of size m, so the accepted sample does not depend
    # on the batching.
    done, batch = 0, 1
    while done < RANDOM_RETRY_CAP:
        k = min(batch, RANDOM_RETRY_CAP - done)
        adj = np.zeros((k, n, n), dtype=bool)
        adj[:, iu[0], iu[1]] = rng.random((k, m)) < p
        adj |= adj.transpose(0, 2, 1)
        adj[:, np.arange(n), np.arange(n)] = True
        ok = np.flatnonzero(_connected_batch(adj))
        if len(ok):
            g = Graph.from_adjacency(adj[ok[0]])
            g.__dict__["violation"] = None  # reflexive and connected by construction
            return g
        done += k
        batch = min(batch * 4, 1024)
    # fall back: overlay a random spanning tree on the last sample
    adj = adj[-1].copy()
    order = rng.permutation(n)
    for k in range(1, n):
        u, v = order[k], order[rng.integers(k)]
        adj[u, v] = adj[v, u] = True
    return Graph.from_adjacency(adj)


def _connected_batch(adj: np.ndarray) -> np.ndarray:
    """Connectivity of a stack of reflexive adjacency matrices, by frontier growth from vertex 1."""
    a = adj.astype(np.float64)
    reach = a[:, 0, :] > 0
    count = reach.sum(axis=1)
    while True:
        reach = np.einsum("bi,bij->bj", reach.astype(np.float64), a) > 0
        grown = reach.sum(axis=1)
        if np.array_equal(grown, count):
            return grown == adj.shape[1]
        count = grown


@functools.lru_cache(maxsize=64)
def _upper_indices(n: int) -> tuple[np.ndarray, np.ndarray]:
    return np.triu_indices(n, k=1)


def _connected(adj: np.ndarray) -> bool:
    a = adj.astype(np.float64)
    reach = a[0] > 0
    count = int(reach.sum())
    while True:
        reach = (a @ reach) > 0
        grown = int(reach.sum())
        if grown == count:
            return grown == len(a)
        count = grown


@dataclass(frozen=True)
class RotatingStar:
    """Star whose hub moves to the next vertex every ``period`` rounds."""

    n: int
    period: int = 1
    kind = "RotatingStar"

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"n must be positive, got {self.n}")
        if self.period < 1:
            raise ValueError(f"period must be positive, got {self.period}")

    def hub(self, t: int) -> int:
        return 1 + ((t - 1) // self.period) % self.n

    def graph(self, t: int) -> Graph:
        return star_graph(self.n, self.hub(t))


@dataclass(frozen=True)
class DegreeBurst:
    """``base`` every round except ``burst_round``, where ``burst`` is used."""

    base: Graph
    burst: Graph
    burst_round: int
    kind = "DegreeBurst"

    def __post_init__(self):
        require_class_g(self.base)
        require_class_g(self.burst)
        if self.base.n != self.burst.n:
            raise ValueError(f"base has n={self.base.n} but burst has n={self.burst.n}")
        if self.burst_round < 1:
            raise ValueError(f"burst_round must be >= 1, got {self.burst_round}")

    @property
    def n(self) -> int:
        return self.base.n

    def graph(self, t: int) -> Graph:
        return self.burst if t == self.burst_round else self.base


DynamicGraphModel = Union[Static, Schedule, RandomConnected, RotatingStar, DegreeBurst]
MODEL_KINDS = ("Static", "Schedule", "RandomConnected", "RotatingStar", "DegreeBurst")


def generate(model: DynamicGraphModel, t: int) -> Graph:
    """The round-``t`` communication graph of ``model`` (``t >= 1``)."""
    if t < 1:
        raise ValueError(f"rounds start at 1, got t={t}")
    return model.graph(t)


def model_from_dict(desc: dict, n: int | None = None, seed: int = 0) -> DynamicGraphModel:
    """Build a model from a JSON-style descriptor.

    ``n`` is taken from the descriptor when present, otherwise from the
    argument. Named graphs (``"path"``, ``"star"``, ...) may stand in for
    explicit graphs; ``"edges"`` lists give explicit ones.
    """
    desc = dict(desc)
    kind = desc.pop("kind", None)
    n = desc.pop("n", n)
    seed = desc.pop("seed", seed)

    def graph_arg(value) -> Graph:
        if n is None:
            raise ValueError(f"{kind} model needs n")
        if isinstance(value, str):
            value = {"family": value}
        if isinstance(value, dict) and "family" in value:
            if value["family"] == "star":
                return star_graph(n, int(value.get("hub", 1)))
            return named_graph(value["family"], n)
        edges = value["edges"] if isinstance(value, dict) else value
        return Graph.from_edges(n, [tuple(e) for e in edges])

    if kind == "Static":
        return Static(graph_arg(desc.get("graph", "path")))
    if kind == "Schedule":
        if "file" in desc:
            return read_schedule(desc["file"])
        return Schedule(tuple(graph_arg(g) for g in desc["rounds"]))
    if n is None:
        raise ValueError(f"{kind} model needs n")
    if kind == "RandomConnected":
        return RandomConnected(int(n), float(desc.get("p", 0.3)), int(seed))
    if kind == "RotatingStar":
        return RotatingStar(int(n), int(desc.get("period", 1)))
    if kind == "DegreeBurst":
        return DegreeBurst(graph_arg(desc.get("base", "path")),
                           graph_arg(desc.get("burst", "star")),
                           int(desc.get("burst_round", 1)))
    raise ValueError(f"unknown model kind {kind!r}; expected one of {list(MODEL_KINDS)}")


# -- text format ------------------------------------------------------------

def format_graphs(graphs: Sequence[Graph]) -> str:
    """Serialize graphs sharing one ``n``: header line, ``e i j`` lines, blank line between rounds."""
    if not graphs:
        raise ValueError("nothing to format")
    n = graphs[0].n
    blocks = []
    for g in graphs:
        if g.n != n:
            raise ValueError("all graphs must share the same n")
        blocks.append("".join(f"e {i} {j}\n" for i, j in g.proper_edges))
    return f"n {n}\n" + "\n".join(blocks)


def parse_graphs(text: str) -> list[Graph]:
    lines = text.splitlines()
    if not lines or not lines[0].startswith("n "):
        raise ValueError("graph file must start with 'n <count>'")
    n = int(lines[0].split()[1])
    rounds: list[list[tuple[int, int]]] = [[]]
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            rounds.append([])
            continue
        parts = line.split()
        if len(parts) != 3 or parts[0] != "e":
            raise ValueError(f"line {lineno}: expected 'e <i> <j>', got {line!r}")
        i, j = int(parts[1]), int(parts[2])
        if not i < j:
            raise ValueError(f"line {lineno}: proper edges need i < j")
        rounds[-1].append((i, j))
    # a trailing blank line is tolerated; for n = 1 every round is edgeless, so keep them all
    if n > 1:
        while len(rounds) > 1 and not rounds[-1]:
            rounds.pop()
    return [Graph.from_edges(n, r) for r in rounds]


def read_schedule(path: str | Path) -> Schedule:
    return Schedule(tuple(parse_graphs(Path(path).read_text())))


def write_schedule(path: str | Path, graphs: Sequence[Graph]) -> None:
    Path(path).write_text(format_graphs(graphs))
