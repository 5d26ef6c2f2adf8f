"""Marker systems: a domain D = D0 u {g_1..g_N} and blocks M_1..M_N whose
occurrences are locally unique, used downstream to announce tile centers and
shape indices inside encoded configurations.
"""

from __future__ import annotations

import functools
import itertools
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Set, Tuple

import numpy as np

from .blocks import Block, canonical_domain, occurs_at
from .groups import Element, Group, get_group


def _is_prime(n: int) -> bool:
    if n < 2:
        return False
    for p in range(2, int(n ** 0.5) + 1):
        if n % p == 0:
            return False
    return True


def _next_prime(n: int) -> int:
    while not _is_prime(n):
        n += 1
    return n


@dataclass(frozen=True)
class MarkerSet:
    group_id: str
    D0: Tuple[Element, ...]
    gs: Tuple[Element, ...]
    delta_M: float
    s: int

    def __post_init__(self):
        group = self.group
        e = group.identity
        d0 = set(self.D0)
        if e not in d0:
            raise ValueError("D0 must contain the identity")
        if not _is_prime(len(d0)):
            raise ValueError("|D0| must be prime")
        if self.s ** -len(d0) > self.delta_M + 1e-15:
            raise ValueError("s^-|D0| exceeds the measure budget delta_M")
        d0sq = {group.mul(a, b) for a in d0 for b in d0}
        seen = set(d0)
        for g in self.gs:
            if g in d0sq:
                raise ValueError(f"g = {g} lies in D0^2")
            if {group.mul(a, g) for a in d0} & d0:
                raise ValueError(f"D0.g meets D0 for g = {g}")
            if g in seen:
                raise ValueError(f"duplicate marker element {g}")
            seen.add(g)

    @property
    def group(self) -> Group:
        return get_group(self.group_id)

    @property
    def N(self) -> int:
        return len(self.gs)

    @property
    def D(self) -> Tuple[Element, ...]:
        return canonical_domain(set(self.D0) | set(self.gs))

    def block(self, i: int) -> Block:
        """M_i: symbol 1 on D0 and at g_i, symbol 2 at every other g_j."""
        assign = {c: 1 for c in self.D0}
        for j, g in enumerate(self.gs, start=1):
            assign[g] = 1 if j == i else 2
        return Block.make(self.D, assign, self.s)

    def blocks(self) -> List[Block]:
        return [self.block(i) for i in range(1, self.N + 1)]

    def guard_region(self) -> Tuple[Element, ...]:
        """(D^-1 D) \\ D, the halo that must be free of symbol 1."""
        group = self.group
        D = set(self.D)
        dinv_d = {group.mul(group.inv(a), b) for a in D for b in D}
        return canonical_domain(dinv_d - D)

    def to_json(self) -> dict:
        return {"group": self.group_id,
                "D0": [list(c) for c in self.D0],
                "gs": [list(c) for c in self.gs],
                "delta_M": self.delta_M, "s": self.s}

    @staticmethod
    def from_json(obj: dict) -> "MarkerSet":
        return MarkerSet(obj["group"],
                         tuple(tuple(c) for c in obj["D0"]),
                         tuple(tuple(c) for c in obj["gs"]),
                         obj["delta_M"], obj["s"])


def construct_markers(N: int, delta_M: float, s: int, group_id: str) -> MarkerSet:
    """Canonical marker system: D0 is the first |D0| elements of the scan
    ray with |D0| the least prime making s^-|D0| <= delta_M; the g_i are the
    earliest ray elements clear of D0^2 with D0.g_i disjoint from D0."""
    if s < 2 or delta_M <= 0 or N < 1:
        raise ValueError("need s >= 2, delta_M > 0, N >= 1")
    group = get_group(group_id)
    import math
    p = _next_prime(max(2, math.ceil(-math.log(delta_M) / math.log(s))))
    ray = group.ray()
    D0 = tuple(itertools.islice(ray, p))
    d0 = set(D0)
    d0sq = {group.mul(a, b) for a in d0 for b in d0}
    gs: List[Element] = []
    for g in ray:
        if len(gs) == N:
            break
        if g in d0sq or g in gs:
            continue
        if {group.mul(a, g) for a in d0} & d0:
            continue
        gs.append(g)
    return MarkerSet(group_id, canonical_domain(D0), tuple(gs), delta_M, s)


def find_marker_occurrences(C: Block, M: MarkerSet) -> List[Tuple[Element, int]]:
    """All (g, i) with D.g inside C and C(D.g) = M_i, in canonical order."""
    group = M.group
    cmap = C.mapping()
    domain = set(C.domain)
    D = M.D
    out: List[Tuple[Element, int]] = []
    for g in C.domain:
        cells = [group.mul(dd, g) for dd in D]
        if any(c not in domain for c in cells):
            continue
        word = [cmap[c] for c in cells]
        hit = _match_word(word, D, M)
        if hit is not None:
            out.append((g, hit))
    return sorted(out)


def _match_word(word: Sequence[int], D: Sequence[Element],
                M: MarkerSet) -> Optional[int]:
    idx = {c: j for j, c in enumerate(D)}
    for c in M.D0:
        if word[idx[c]] != 1:
            return None
    hit = None
    for i, g in enumerate(M.gs, start=1):
        v = word[idx[g]]
        if v == 1:
            if hit is not None:
                return None
            hit = i
        elif v != 2:
            return None
    return hit


@dataclass(frozen=True)
class UniquenessVerdict:
    status: str  # "holds" | "premise-failed" | "violated"
    marker_index: Optional[int] = None
    offender: Optional[Tuple[Element, int]] = None


@dataclass(frozen=True)
class _MarkerPlan:
    D: Tuple[Element, ...]
    d0_idx: Tuple[int, ...]
    gs_idx: Tuple[int, ...]
    guard: Tuple[Element, ...]
    inner: Tuple[Element, ...]  # offsets o != e with D.o inside D u guard



@functools.lru_cache(maxsize=64)
def _marker_plan(M: MarkerSet) -> _MarkerPlan:
    group = M.group
    D = M.D
    idx = {c: j for j, c in enumerate(D)}
    guard = M.guard_region()
    region = set(D) | set(guard)
    e = group.identity
    inner = tuple(o for o in sorted(region)
                  if o != e and all(group.mul(dd, o) in region for dd in D))
    return _MarkerPlan(D,
                       tuple(idx[c] for c in M.D0),
                       tuple(idx[g] for g in M.gs),
                       guard, inner)


def verify_marker_uniqueness(C: Block, M: MarkerSet, g: Element) -> UniquenessVerdict:
    """Check the local uniqueness property at g.

    Premise: C carries some M_i on D.g and no symbol 1 on the guard halo
    (D^-1 D \\ D).g.  Conclusion checked exhaustively: no M_j occurs at any
    h != g with D.h inside (D u D^-1 D).g.
    """
    group = M.group
    plan = _marker_plan(M)
    cmap = C.mapping()

    def word_at(h: Element) -> Optional[int]:
        # fail-fast marker match at h; None if no marker there
        cells = [group.mul(dd, h) for dd in plan.D]
        for j in plan.d0_idx:
            if cmap.get(cells[j]) != 1:
                return None
        hit = None
        for i, j in enumerate(plan.gs_idx, start=1):
            v = cmap.get(cells[j])
            if v == 1:
                if hit is not None:
                    return None
                hit = i
            elif v != 2:
                return None
        return hit

    cells = [group.mul(dd, g) for dd in plan.D]
    if any(c not in cmap for c in cells):
        raise ValueError("D.g escapes the configuration domain")
    guard_cells = [group.mul(dd, g) for dd in plan.guard]
    if any(c not in cmap for c in guard_cells):
        raise ValueError("guard halo escapes the configuration domain")
    i = word_at(g)
    if i is None or any(cmap[c] == 1 for c in guard_cells):
        return UniquenessVerdict("premise-failed")
    for o in plan.inner:
        h = group.mul(o, g)
        j = word_at(h)
        if j is not None:
            return UniquenessVerdict("violated", i, (h, j))
    return UniquenessVerdict("holds", i)
