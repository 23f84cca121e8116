"""Directed influence graphs.

An edge ``(i, j)`` means agent ``j`` directly influences agent ``i``; the
graph is stored as one sorted in-neighbour list per agent. The sorted order
is the canonical ordering used for influence rows everywhere else in the
package.
"""
from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .exceptions import ParameterError


@dataclass(frozen=True)
class Network:
    """Immutable directed graph given by in-neighbour lists.

    Parameters
    ----------
    n : int
        Number of agents.
    in_neighbors : tuple of tuple of int
        ``in_neighbors[i]`` holds the agents that directly influence ``i``,
        sorted ascending. Self-loops are allowed.
    """

    n: int
    in_neighbors: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        if self.n < 1:
            raise ParameterError(f"network needs at least one agent, got n={self.n}")
        if len(self.in_neighbors) != self.n:
            raise ParameterError(
                f"expected {self.n} neighbour lists, got {len(self.in_neighbors)}"
            )
        canon = []
        for i, nbrs in enumerate(self.in_neighbors):
            nbrs = tuple(int(j) for j in nbrs)
            if any(j < 0 or j >= self.n for j in nbrs):
                raise ParameterError(f"agent {i} has a neighbour outside [0, {self.n})")
            if len(set(nbrs)) != len(nbrs):
                raise ParameterError(f"agent {i} lists a neighbour twice")
            canon.append(tuple(sorted(nbrs)))
        object.__setattr__(self, "in_neighbors", tuple(canon))

    @classmethod
    def from_lists(cls, in_neighbors: Sequence[Iterable[int]]) -> "Network":
        lists = [tuple(nb) for nb in in_neighbors]
        return cls(len(lists), tuple(lists))

    @classmethod
    def complete(cls, n: int) -> "Network":
        """Every agent influenced by every agent, itself included."""
        return cls(n, tuple(tuple(range(n)) for _ in range(n)))

    def degree(self, i: int) -> int:
        self._check_agent(i)
        return len(self.in_neighbors[i])

    @property
    def degrees(self) -> np.ndarray:
        return np.array([len(nb) for nb in self.in_neighbors], dtype=int)

    @property
    def n_edges(self) -> int:
        return int(self.degrees.sum())

    def adjacency(self) -> np.ndarray:
        """Boolean matrix with ``adj[i, j]`` true iff ``j`` influences ``i``."""
        adj = np.zeros((self.n, self.n), dtype=bool)
        for i, nbrs in enumerate(self.in_neighbors):
            adj[i, list(nbrs)] = True
        return adj

    def edge_index(self) -> tuple[np.ndarray, np.ndarray]:
        """Row and column indices of all influence elements, row-major."""
        rows = np.repeat(np.arange(self.n), self.degrees)
        cols = np.fromiter(
            (j for nbrs in self.in_neighbors for j in nbrs), dtype=int, count=self.n_edges
        )
        return rows, cols

    def _check_agent(self, i):
        if not 0 <= i < self.n:
            raise ParameterError(f"agent index {i} outside [0, {self.n})")

    def to_dict(self) -> dict:
        return {"n": self.n, "in_neighbors": [list(nb) for nb in self.in_neighbors]}

    @classmethod
    def from_dict(cls, doc: dict) -> "Network":
        try:
            return cls(int(doc["n"]), tuple(tuple(nb) for nb in doc["in_neighbors"]))
        except (KeyError, TypeError) as exc:
            raise ParameterError(f"malformed network document: {exc}") from exc

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "Network":
        return cls.from_dict(json.loads(text))


def random_regular_network(n: int, d: int, seed: int) -> Network:
    """Sample a network in which every agent has exactly ``d`` in-neighbours.

    Each agent draws its neighbours uniformly without replacement from all
    ``n`` agents, so self-loops occur like any other edge.
    """
    if n < 1:
        raise ParameterError(f"n must be positive, got {n}")
    if not 1 <= d <= n:
        raise ParameterError(f"degree must satisfy 1 <= d <= n, got d={d}, n={n}")
    rng = np.random.default_rng(seed)
    lists = tuple(tuple(np.sort(rng.choice(n, size=d, replace=False)).tolist()) for _ in range(n))
    return Network(n, lists)


def is_influence_element(net: Network, i: int, j: int) -> bool:
    net._check_agent(i)
    net._check_agent(j)
    return j in net.in_neighbors[i]


def has_path(net: Network, i: int, j: int) -> bool:
    """True iff ``j`` indirectly influences ``i`` (a path of one or more edges)."""
    net._check_agent(i)
    net._check_agent(j)
    seen = set()
    queue = deque(net.in_neighbors[i])
    while queue:
        k = queue.popleft()
        if k == j:
            return True
        if k in seen:
            continue
        seen.add(k)
        queue.extend(net.in_neighbors[k])
    return False


def reaches_any(adj: np.ndarray, targets: np.ndarray) -> np.ndarray:
    """Mask of agents from which some target is reachable (length-0 paths count).

    ``adj[i, j]`` means an edge from ``i`` to ``j`` in the path direction,
    i.e. ``j`` influences ``i``. Runs a multi-source search over reversed edges.
    """
    n = adj.shape[0]
    hit = np.asarray(targets, dtype=bool).copy()
    queue = deque(np.flatnonzero(hit))
    rev = [np.flatnonzero(adj[:, j]) for j in range(n)]
    while queue:
        j = queue.popleft()
        for i in rev[j]:
            if not hit[i]:
                hit[i] = True
                queue.append(i)
    return hit
