"""Minimum-cost flow via successive shortest augmenting paths.

Small dependency-free solver for the planner's time-expanded networks:
a few dozen nodes, integer capacities, float costs. Paths are found with
SPFA (queue-based Bellman-Ford), which tolerates the negative-cost
residual arcs created by augmentation.
"""

from __future__ import annotations

from collections import deque

__all__ = ["MinCostFlow"]

_INF = float("inf")


class MinCostFlow:
    def __init__(self, n_nodes: int):
        self.n = n_nodes
        self.adj: list[list[int]] = [[] for _ in range(n_nodes)]
        self.to: list[int] = []
        self.cap: list[int] = []
        self.cost: list[float] = []

    def add_edge(self, u: int, v: int, cap: int, cost: float) -> int:
        """Add arc u->v; returns the arc id (reverse arc is id ^ 1)."""
        arc = len(self.to)
        self.adj[u].append(arc)
        self.to.append(v)
        self.cap.append(int(cap))
        self.cost.append(float(cost))
        self.adj[v].append(arc + 1)
        self.to.append(u)
        self.cap.append(0)
        self.cost.append(-float(cost))
        return arc

    def flow_on(self, arc: int) -> int:
        """Units currently routed through the given forward arc."""
        return self.cap[arc ^ 1]

    def run(self, s: int, t: int, max_flow: int | None = None) -> tuple[int, float]:
        """Push up to `max_flow` units from s to t at minimum cost.

        Returns (units pushed, total cost). Stops early when t becomes
        unreachable in the residual graph.
        """
        remaining = _INF if max_flow is None else int(max_flow)
        flow = 0
        total_cost = 0.0
        while remaining > 0:
            dist, parent = self._shortest_path(s)
            if dist[t] == _INF:
                break
            bottleneck = remaining
            v = t
            while v != s:
                arc = parent[v]
                bottleneck = min(bottleneck, self.cap[arc])
                v = self.to[arc ^ 1]
            v = t
            while v != s:
                arc = parent[v]
                self.cap[arc] -= bottleneck
                self.cap[arc ^ 1] += bottleneck
                v = self.to[arc ^ 1]
            flow += bottleneck
            remaining -= bottleneck
            total_cost += bottleneck * dist[t]
        return flow, total_cost

    def _shortest_path(self, s: int):
        dist = [_INF] * self.n
        parent = [-1] * self.n
        in_queue = [False] * self.n
        dist[s] = 0.0
        queue = deque([s])
        in_queue[s] = True
        while queue:
            u = queue.popleft()
            in_queue[u] = False
            du = dist[u]
            for arc in self.adj[u]:
                if self.cap[arc] <= 0:
                    continue
                v = self.to[arc]
                nd = du + self.cost[arc]
                if nd < dist[v] - 1e-12:
                    dist[v] = nd
                    parent[v] = arc
                    if not in_queue[v]:
                        queue.append(v)
                        in_queue[v] = True
        return dist, parent
