"""Exact maximum bipartite matching.

Hopcroft-Karp over adjacency lists with canonical vertex order, so the
matching returned is deterministic for a given input.  A brute-force
maximizer over all injections is included as a test oracle for small
instances.
"""

from __future__ import annotations

import itertools
from collections import deque
from typing import Dict, List, Optional, Sequence

INF = float("inf")


def hopcroft_karp(n_left: int, n_right: int,
                  adj: Sequence[Sequence[int]]) -> Dict[int, int]:
    """Maximum matching; returns {left vertex: right vertex}.

    adj[u] lists the right neighbours of left vertex u; neighbour order is
    respected, which together with increasing vertex order makes the result
    deterministic.
    """
    match_l: List[Optional[int]] = [None] * n_left
    match_r: List[Optional[int]] = [None] * n_right
    dist: List[float] = [INF] * n_left

    def bfs() -> bool:
        q = deque()
        for u in range(n_left):
            if match_l[u] is None:
                dist[u] = 0
                q.append(u)
            else:
                dist[u] = INF
        found = False
        while q:
            u = q.popleft()
            for v in adj[u]:
                w = match_r[v]
                if w is None:
                    found = True
                elif dist[w] is INF:
                    dist[w] = dist[u] + 1
                    q.append(w)
        return found

    def dfs(u: int) -> bool:
        for v in adj[u]:
            w = match_r[v]
            if w is None or (dist[w] == dist[u] + 1 and dfs(w)):
                match_l[u] = v
                match_r[v] = u
                return True
        dist[u] = INF
        return False

    while bfs():
        for u in range(n_left):
            if match_l[u] is None:
                dfs(u)
    return {u: v for u, v in enumerate(match_l) if v is not None}


def brute_force_max_matching(n_left: int, n_right: int,
                             adj: Sequence[Sequence[int]]) -> int:
    """Size of a maximum matching by exhaustive search; oracle use only."""
    best = 0
    order = sorted(range(n_left), key=lambda u: len(adj[u]))

    def rec(i: int, used: int, size: int):
        nonlocal best
        best = max(best, size)
        if i == n_left or size + (n_left - i) <= best:
            return
        u = order[i]
        for v in adj[u]:
            if not used & (1 << v):
                rec(i + 1, used | (1 << v), size + 1)
        rec(i + 1, used, size)

    rec(0, 0, 0)
    return best
