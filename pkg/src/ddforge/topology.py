"""Coupling graphs for workload construction."""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass
from importlib import resources
from itertools import combinations

__all__ = ["Topology"]


@dataclass(frozen=True)
class Topology:
    num_qubits: int
    edges: tuple[tuple[int, int], ...]

    def __post_init__(self):
        norm = tuple(sorted({tuple(sorted(e)) for e in self.edges}))
        for a, b in norm:
            if a == b or not (0 <= a < self.num_qubits and 0 <= b < self.num_qubits):
                raise ValueError(f"bad edge ({a},{b})")
        object.__setattr__(self, "edges", norm)

    @classmethod
    def line(cls, n: int) -> "Topology":
        return cls(n, tuple((i, i + 1) for i in range(n - 1)))

    @classmethod
    def ring(cls, n: int) -> "Topology":
        return cls(n, tuple((i, (i + 1) % n) for i in range(n)))

    @classmethod
    def complete(cls, n: int) -> "Topology":
        return cls(n, tuple(combinations(range(n), 2)))

    @classmethod
    def heavy_hex_fragment(cls) -> "Topology":
        data = json.loads(
            resources.files("ddforge").joinpath("data/heavy_hex_fragment.json").read_text()
        )
        return cls(int(data["num_qubits"]), tuple(tuple(e) for e in data["edges"]))

    def adjacency(self) -> list[set[int]]:
        adj: list[set[int]] = [set() for _ in range(self.num_qubits)]
        for a, b in self.edges:
            adj[a].add(b)
            adj[b].add(a)
        return adj

    def induced(self, n: int) -> tuple[tuple[int, int], ...]:
        """Edges among qubits 0..n-1."""
        return tuple((a, b) for a, b in self.edges if a < n and b < n)

    def shortest_path(self, src: int, dst: int) -> list[int]:
        """BFS path src..dst inclusive; raises if disconnected."""
        if src == dst:
            return [src]
        adj = self.adjacency()
        prev = {src: src}
        queue = deque([src])
        while queue:
            v = queue.popleft()
            for w in sorted(adj[v]):
                if w not in prev:
                    prev[w] = v
                    if w == dst:
                        path = [dst]
                        while path[-1] != src:
                            path.append(prev[path[-1]])
                        return path[::-1]
                    queue.append(w)
        raise ValueError(f"no path from {src} to {dst}")

    def bfs_tree(self, root: int, n: int) -> list[tuple[int, int]]:
        """Breadth-first spanning tree edges (parent, child) over qubits < n."""
        adj: list[set[int]] = [set() for _ in range(n)]
        for a, b in self.induced(n):
            adj[a].add(b)
            adj[b].add(a)
        seen = {root}
        order: list[tuple[int, int]] = []
        queue = deque([root])
        while queue:
            v = queue.popleft()
            for w in sorted(adj[v]):
                if w not in seen:
                    seen.add(w)
                    order.append((v, w))
                    queue.append(w)
        if len(seen) != n:
            missing = sorted(set(range(n)) - seen)
            raise ValueError(f"qubits {missing} unreachable from {root}")
        return order

    def center(self, n: int) -> int:
        """Minimum-eccentricity vertex among qubits < n (lowest index wins)."""
        adj: list[set[int]] = [set() for _ in range(n)]
        for a, b in self.induced(n):
            adj[a].add(b)
            adj[b].add(a)
        best, best_ecc = 0, None
        for root in range(n):
            dist = {root: 0}
            queue = deque([root])
            while queue:
                v = queue.popleft()
                for w in adj[v]:
                    if w not in dist:
                        dist[w] = dist[v] + 1
                        queue.append(w)
            if len(dist) != n:
                continue
            ecc = max(dist.values())
            if best_ecc is None or ecc < best_ecc:
                best, best_ecc = root, ecc
        if best_ecc is None:
            raise ValueError("graph disconnected")
        return best
