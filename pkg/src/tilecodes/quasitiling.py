"""Quasitilings of finite windows.

A quasitiling is a family of tiles S.c with finitely many shapes S (each a
large subset of a Folner set) and per-shape center sets.  This module builds
them greedily, turns eta-disjoint families into exactly disjoint ones, and
provides the disjointness and covering predicates used everywhere else.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, List, Optional, Sequence, Tuple

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import maximum_flow

from .blocks import Block, canonical_domain
from .groups import Element, Group, Window, ZGroup, get_group, lower_banach_density_window


@dataclass(frozen=True)
class TilingParams:
    eta: float
    K: int
    seed: int = 0
    schedule: Optional[Tuple[int, ...]] = None

    def __post_init__(self):
        if not 0 < self.eta < 1:
            raise ValueError("eta must lie in (0,1)")
        if self.K < 1:
            raise ValueError("K must be >= 1")


def layer_count(eta: float) -> int:
    """Smallest n with (1-eta)^n < eta."""
    n = 1
    while (1 - eta) ** n >= eta:
        n += 1
    return n


@dataclass
class Quasitiling:
    """Shapes plus per-shape center lists inside a window.

    shapes[i] is a finite subset containing the identity; folner_indices[i]
    records which F_k it came from; centers[i] lists the translates.
    """

    group_id: str
    window: Window
    shapes: List[Tuple[Element, ...]]
    folner_indices: List[int]
    centers: List[Tuple[Element, ...]]

    def __post_init__(self):
        group = self.group
        e = group.identity
        seen = set()
        for i, shape in enumerate(self.shapes):
            if e not in shape:
                raise ValueError(f"shape {i} does not contain the identity")
        for cs in self.centers:
            for c in cs:
                if c in seen:
                    raise ValueError(f"duplicate center {c}")
                seen.add(c)

    @property
    def group(self) -> Group:
        return get_group(self.group_id)

    def tiles(self) -> List[Tuple[int, Element]]:
        return [(i, c) for i, cs in enumerate(self.centers) for c in cs]

    def tile_cells(self, shape_idx: int, center: Element) -> FrozenSet[Element]:
        g = self.group
        return frozenset(g.mul(f, center) for f in self.shapes[shape_idx])

    def n_tiles(self) -> int:
        return sum(len(cs) for cs in self.centers)

    def union_cells(self) -> FrozenSet[Element]:
        out = set()
        for i, c in self.tiles():
            out |= self.tile_cells(i, c)
        return frozenset(out)

    def check_inside_window(self) -> None:
        region = self.window.region
        for i, c in self.tiles():
            if not self.tile_cells(i, c) <= region:
                raise ValueError(f"tile ({i}, {c}) escapes the window")

    def to_json(self) -> dict:
        return {
            "group": self.group_id,
            "window": {"group": self.window.group_id,
                       "region": sorted([list(c) for c in self.window.region]),
                       "shape": list(self.window.shape) if self.window.shape else None},
            "shapes": [[list(c) for c in s] for s in self.shapes],
            "folner_indices": list(self.folner_indices),
            "centers": [[list(c) for c in cs] for cs in self.centers],
        }

    @staticmethod
    def from_json(obj: dict) -> "Quasitiling":
        w = obj["window"]
        window = Window(w["group"],
                        frozenset(tuple(c) for c in w["region"]),
                        tuple(w["shape"]) if w.get("shape") else None)
        return Quasitiling(
            obj["group"], window,
            [tuple(tuple(c) for c in s) for s in obj["shapes"]],
            list(obj["folner_indices"]),
            [tuple(tuple(c) for c in cs) for cs in obj["centers"]])


def is_epsilon_disjoint(T: Quasitiling, eps: float):
    """Exact test: do pairwise-disjoint subsets T* of the tiles exist with
    |T*| > (1-eps)|T| each?  Solved as a feasibility max-flow where every
    cell feeds at most one tile and tile demands are the strict thresholds.

    Returns (bool, witness); the witness maps tile index (in tiles() order)
    to its kept cell set when the answer is positive.
    """
    tiles = T.tiles()
    if not tiles:
        return True, {}
    cells_per_tile = [T.tile_cells(i, c) for i, c in tiles]
    demands = [min(len(cells), math.floor((1 - eps) * len(cells)) + 1)
               for cells in cells_per_tile]
    all_cells = sorted(set().union(*cells_per_tile))
    cell_id = {c: k for k, c in enumerate(all_cells)}
    nt, nc = len(tiles), len(all_cells)
    # nodes: 0 source, 1..nt tiles, nt+1..nt+nc cells, nt+nc+1 sink
    src, snk = 0, nt + nc + 1
    rows, cols, caps = [], [], []
    for t, (cells, dem) in enumerate(zip(cells_per_tile, demands)):
        rows.append(src); cols.append(1 + t); caps.append(dem)
        for c in sorted(cells):
            rows.append(1 + t); cols.append(1 + nt + cell_id[c]); caps.append(1)
    for k in range(nc):
        rows.append(1 + nt + k); cols.append(snk); caps.append(1)
    graph = csr_matrix((caps, (rows, cols)), shape=(snk + 1, snk + 1))
    res = maximum_flow(graph, src, snk)
    if res.flow_value < sum(demands):
        return False, None
    flow = res.flow.tocoo()
    kept: Dict[int, set] = {t: set() for t in range(nt)}
    taken = set()
    for r, c, f in zip(flow.row, flow.col, flow.data):
        if f > 0 and 1 <= r <= nt and nt < c <= nt + nc:
            cell = all_cells[c - 1 - nt]
            kept[r - 1].add(cell)
            taken.add(cell)
    # hand every unclaimed cell back to some tile containing it
    for t, cells in enumerate(cells_per_tile):
        for c in cells:
            if c not in taken:
                kept[t].add(c)
                taken.add(c)
    return True, {t: frozenset(s) for t, s in kept.items()}


def is_disjoint(T: Quasitiling) -> bool:
    total = 0
    seen = set()
    for i, c in T.tiles():
        cells = T.tile_cells(i, c)
        total += len(cells)
        seen |= cells
    return len(seen) == total


def covering_density(T: Quasitiling, n: int) -> float:
    return lower_banach_density_window(T.union_cells(), T.window, n)


def default_schedule(p: TilingParams) -> Tuple[int, ...]:
    n = layer_count(p.eta)
    return tuple(p.K + i for i in range(n))


def _as_box(window: Window) -> Tuple[int, ...]:
    if window.shape is None:
        raise ValueError("construction needs a box window")
    return window.shape


def _rank_grid(kmax: int, d: int) -> np.ndarray:
    """Radial enumeration index of every offset in the F_kmax box."""
    side = 2 * kmax + 1
    offsets = sorted(np.ndindex(*(side,) * d),
                     key=lambda o: radial_key(tuple(x - kmax for x in o)))
    grid = np.empty((side,) * d, dtype=np.int64)
    for r, o in enumerate(offsets):
        grid[o] = r
    return grid


def _bordered_layout(box: Tuple[int, ...], widths: List[int],
                     eta: float) -> List[Tuple[Tuple[int, ...], int]]:
    """Deterministic core-grid-plus-flush-border layout, as (corner, width).

    Core tiles of the largest fitting width W sit on a stride-W grid; the
    leftover margin is sealed by a flush strip of the smallest adequate
    width (biting slightly into the core, whose eta budget absorbs it) and,
    in 2-D, a flush corner square where the two strips meet.  Returns an
    empty list when the arithmetic does not work out; the greedy pass then
    does what it can on its own.
    """
    ws_sorted = sorted(set(widths))
    d = len(box)
    W = max((w for w in ws_sorted if w <= min(box)), default=None)
    if W is None:
        return []
    out: List[Tuple[Tuple[int, ...], int]] = []
    if d == 1:
        L = box[0]
        q, m = divmod(L, W)
        out += [((i * W,), W) for i in range(q)]
        if m:
            w = next((w for w in ws_sorted if w >= m), None)
            if w is None or w > L:
                return []
            out.append(((L - w,), w))
        return out
    L = box[0]
    if box[1] != L:
        return []
    q, m = divmod(L, W)
    out += [((i * W, j * W), W) for i in range(q) for j in range(q)]
    if m == 0:
        return out
    for ws in ws_sorted:
        if ws < m:
            continue
        n_sq, r = divmod(L, ws)
        if r and r not in ws_sorted:
            continue
        if r and (ws - r) ** 2 >= eta * ws * ws:
            # strip-strip corner overlap must fit inside a square's eta budget
            continue
        out += [((i * ws, L - ws), ws) for i in range(n_sq)]
        out += [((L - ws, i * ws), ws) for i in range(n_sq)]
        if r:
            out.append(((L - r, L - r), r))
        return out
    return []


def construct_quasitiling(window: Window, p: TilingParams) -> Quasitiling:
    """Layered construction over a Z^d box window.

    A deterministic bordered layout (core grid of the largest shape, flush
    sealing strips along the window edges) is attempted first; a greedy
    pass then fills anything left, taking candidate positions best new
    coverage first with raster order breaking ties.  Every placement, in
    either phase, goes through the same admission test: under the radial
    enumeration ownership rule that disjointify applies, neither the new
    tile nor any placed tile may lose an eta fraction of itself.  Small
    flush tiles may therefore bite into the edges of large ones to seal the
    border; the large tile pays out of its own eta budget.

    The returned tiling is the disjointified family: pairwise disjoint,
    every shape a (1-eta)-subset of its F_k.  The construction is
    deterministic; the seed in TilingParams only feeds downstream
    randomized consumers.
    """
    import heapq

    group = get_group(window.group_id)
    if not isinstance(group, ZGroup):
        raise ValueError("greedy construction supports Z and Z^2 windows only")
    d = group.d
    box = _as_box(window)
    schedule = p.schedule or default_schedule(p)
    widths = [2 * k + 1 for k in schedule]
    if any(w > min(box) for w in widths):
        raise ValueError("window too small for the largest scheduled shape")

    kmax = schedule[-1]
    full_rank = _rank_grid(kmax, d)
    NO_OWNER = np.iinfo(np.int64).max
    owner_rank = np.full(box, NO_OWNER, dtype=np.int64)
    owner_tile = np.full(box, -1, dtype=np.int32)
    placed: List[Tuple[Tuple[int, ...], int]] = []  # (corner, layer index)
    losses: List[int] = []
    used_centers = set()

    def rank_patch(k: int) -> np.ndarray:
        c0 = kmax - k
        return full_rank[tuple(slice(c0, c0 + 2 * k + 1) for _ in range(d))]

    def try_place(corner: Tuple[int, ...], li: int) -> bool:
        k = schedule[li]
        w = 2 * k + 1
        center = tuple(c + k for c in corner)
        if center in used_centers:
            return False
        R = rank_patch(k)
        sl = tuple(slice(c, c + w) for c in corner)
        er = owner_rank[sl]
        lose = er < R
        my_loss = int(lose.sum())
        if my_loss >= p.eta * w ** d:
            return False
        eaten = owner_tile[sl][~lose & (er != NO_OWNER)]
        counts = np.bincount(eaten) if eaten.size else np.zeros(0, dtype=int)
        for t in np.nonzero(counts)[0]:
            tarea = widths[placed[t][1]] ** d
            if losses[t] + int(counts[t]) >= p.eta * tarea:
                return False
        for t in np.nonzero(counts)[0]:
            losses[t] += int(counts[t])
        tid = len(placed)
        win = ~lose
        owner_rank[sl] = np.where(win, R, er)
        owner_tile[sl] = np.where(win, tid, owner_tile[sl])
        placed.append((corner, li))
        used_centers.add(center)
        losses.append(my_loss)
        return True

    layer_of_width = {w: li for li, w in enumerate(widths)}
    for corner, w in _bordered_layout(box, widths, p.eta):
        try_place(corner, layer_of_width[w])

    def cov_integral() -> np.ndarray:
        ii = (owner_tile >= 0).astype(np.int64)
        for ax in range(d):
            ii = np.cumsum(ii, axis=ax)
        return np.pad(ii, [(1, 0)] * d)

    def box_sum(ii: np.ndarray, lo, w: int) -> int:
        hi = tuple(c + w for c in lo)
        if d == 1:
            return int(ii[hi[0]] - ii[lo[0]])
        return int(ii[hi[0], hi[1]] - ii[lo[0], hi[1]]
                   - ii[hi[0], lo[1]] + ii[lo[0], lo[1]])

    covI = cov_integral()
    if int(covI.flat[-1]) < int(np.prod(box)):
        for li in range(len(schedule) - 1, -1, -1):
            w = widths[li]
            area = w ** d
            heap = [(box_sum(covI, c, w) - area, c)
                    for c in np.ndindex(*[b - w + 1 for b in box])]
            heapq.heapify(heap)
            failed = set()
            while heap:
                neggain, corner = heapq.heappop(heap)
                if corner in failed:
                    continue
                gain = area - box_sum(covI, corner, w)
                if gain < 1:
                    break
                if gain != -neggain:
                    heapq.heappush(heap, (-gain, corner))
                    continue
                if try_place(corner, li):
                    covI = cov_integral()
                else:
                    failed.add(corner)

    shapes, fidx, centers = [], [], []
    by_layer: Dict[int, List[Element]] = {}
    for corner, li in placed:
        k = schedule[li]
        center = tuple(c + k for c in corner)  # box corner + k puts e at center
        by_layer.setdefault(li, []).append(center)
    for li in sorted(by_layer):
        k = schedule[li]
        shapes.append(canonical_domain(group.folner(k)))
        fidx.append(k)
        centers.append(tuple(sorted(by_layer[li])))
    full = Quasitiling(window.group_id, window, shapes, fidx, centers)
    return disjointify(full)


def radial_key(g: Element):
    return (max(abs(x) for x in g), g)


def default_enumeration(T: Quasitiling) -> List[Element]:
    """Canonical listing of the union of all shapes, ordered radially: by
    max-norm first (walking out through the nested Folner sets), then
    lexicographically.  Puts the identity first, so a tile always keeps its
    center, and lets small central offsets beat large peripheral ones."""
    e = T.group.identity
    cells = set().union(*[set(s) for s in T.shapes]) if T.shapes else {e}
    cells.add(e)
    return sorted(cells, key=radial_key)


def disjointify(T: Quasitiling,
                enumeration: Optional[Sequence[Element]] = None) -> Quasitiling:
    """Resolve every contested cell in favor of the tile where it carries the
    smallest enumeration index, then drop it from the others.

    The union of tiles is preserved exactly.  With the default identity-first
    enumeration a tile always keeps its own center.
    """
    group = T.group
    enum = list(enumeration) if enumeration is not None else default_enumeration(T)
    rank = {g: j for j, g in enumerate(enum)}
    tiles = T.tiles()
    owner: Dict[Element, Tuple[int, int]] = {}  # cell -> (rank, tile idx)
    claims: List[List[Tuple[Element, int]]] = []
    for t, (i, c) in enumerate(tiles):
        cinv = group.inv(c)
        mine = []
        for h in T.tile_cells(i, c):
            off = group.mul(h, cinv)
            if off not in rank:
                raise ValueError(f"offset {off} missing from the enumeration")
            mine.append((h, rank[off]))
        claims.append(mine)
    for t, mine in enumerate(claims):
        for h, r in mine:
            best = owner.get(h)
            if best is not None and best[0] == r:
                raise ValueError(
                    f"cell {h} has equal enumeration index in two tiles")
            if best is None or r < best[0]:
                owner[h] = (r, t)
    shapes, fidx, centers = [], [], []
    for t, (i, c) in enumerate(tiles):
        kept = [h for h, r in claims[t] if owner[h][1] == t]
        cinv = group.inv(c)
        shape = canonical_domain(group.mul(h, cinv) for h in kept)
        shapes.append(shape)
        fidx.append(T.folner_indices[i])
        centers.append((c,))
    return Quasitiling(T.group_id, T.window, shapes, fidx, centers)


def consolidate_shapes(T: Quasitiling) -> Quasitiling:
    """Merge tiles with identical shapes into shared shape classes."""
    classes: Dict[Tuple, int] = {}
    shapes, fidx, centers = [], [], []
    for i, c in T.tiles():
        key = (T.shapes[i], T.folner_indices[i])
        if key not in classes:
            classes[key] = len(shapes)
            shapes.append(T.shapes[i])
            fidx.append(T.folner_indices[i])
            centers.append([])
        centers[classes[key]].append(c)
    return Quasitiling(T.group_id, T.window, shapes, fidx,
                       [tuple(cs) for cs in centers])


def translate_tiling(T: Quasitiling, g: Element,
                     window: Optional[Window] = None) -> Quasitiling:
    group = T.group
    return Quasitiling(T.group_id, window or T.window, list(T.shapes),
                       list(T.folner_indices),
                       [tuple(group.mul(c, g) for c in cs) for cs in T.centers])


def symbolic_encode(T: Quasitiling) -> Block:
    """Window-sized block: symbol i+1 at each shape-i center, 0 elsewhere."""
    dom = canonical_domain(T.window.region)
    sym = {c: 0 for c in dom}
    for i, cs in enumerate(T.centers):
        for c in cs:
            if sym.get(c, 0) != 0:
                raise ValueError(f"center collision at {c}")
            sym[c] = i + 1
    return Block(dom, tuple(sym[c] for c in dom), len(T.shapes) + 1)


def symbolic_decode(B: Block, shapes: Sequence[Tuple[Element, ...]],
                    folner_indices: Sequence[int], window: Window) -> Quasitiling:
    centers: List[List[Element]] = [[] for _ in shapes]
    for cell, s in zip(B.domain, B.symbols):
        if s:
            centers[s - 1].append(cell)
    return Quasitiling(window.group_id, window, list(shapes),
                       list(folner_indices),
                       [tuple(sorted(cs)) for cs in centers])


def random_eta_disjoint(window: Window, p: TilingParams,
                        n_tiles: int, rng: np.random.Generator) -> Quasitiling:
    """Random tiling whose per-tile contested budgets stay strictly under
    eta; useful as a disjointify test generator."""
    group = get_group(window.group_id)
    if not isinstance(group, ZGroup):
        raise ValueError("random generator supports Z and Z^d boxes only")
    d = group.d
    box = _as_box(window)
    schedule = p.schedule or default_schedule(p)
    occ = np.zeros(box, dtype=np.int16)
    placed: List[Tuple[Tuple[int, ...], int]] = []
    contested: List[int] = []
    used_centers = set()
    tries = 0
    while len(placed) < n_tiles and tries < 50 * n_tiles:
        tries += 1
        li = int(rng.integers(len(schedule)))
        w = 2 * schedule[li] + 1
        if w > min(box):
            continue
        corner = tuple(int(rng.integers(b - w + 1)) for b in box)
        if tuple(c + schedule[li] for c in corner) in used_centers:
            continue
        sl = tuple(slice(c, c + w) for c in corner)
        overlap = int((occ[sl] > 0).sum())
        if overlap >= p.eta * w ** d:
            continue
        ok = True
        affected = []
        for t, (tc, tli) in enumerate(placed):
            tw = 2 * schedule[tli] + 1
            ilo = tuple(max(a, b) for a, b in zip(corner, tc))
            ihi = tuple(min(a + w, b + tw) for a, b in zip(corner, tc))
            if any(a >= b for a, b in zip(ilo, ihi)):
                continue
            isl = tuple(slice(a, b) for a, b in zip(ilo, ihi))
            newly = int((occ[isl] == 1).sum())
            if contested[t] + newly >= p.eta * tw ** d:
                ok = False
                break
            affected.append((t, newly))
        if not ok:
            continue
        occ[sl] += 1
        placed.append((corner, li))
        used_centers.add(tuple(c + schedule[li] for c in corner))
        contested.append(overlap)
        for t, newly in affected:
            contested[t] += newly
    shapes, fidx, centers = [], [], []
    by_layer: Dict[int, List[Element]] = {}
    for corner, li in placed:
        by_layer.setdefault(li, []).append(
            tuple(c + schedule[li] for c in corner))
    for li in sorted(by_layer):
        k = schedule[li]
        shapes.append(canonical_domain(group.folner(k)))
        fidx.append(k)
        centers.append(tuple(sorted(by_layer[li])))
    return Quasitiling(window.group_id, window, shapes, fidx, centers)
