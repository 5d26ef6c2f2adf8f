"""Marker-based block codec: SMB filters, the Psi marker transform, the
marriage-lemma dictionaries, and the tile-wise encode/decode maps.

The codec turns a Y sample into an X-valued configuration that carries the
tiling structure in marker blocks.  Per shape, an injective dictionary maps
high-probability Y-blocks to marker-normalized X-blocks; decoding locates
the markers, recovers the tiles, and inverts the dictionaries.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from .blocks import (Block, BlockKey, EmpiricalMeasure, MetricParams,
                     canonical_domain, metric_measure_block)
from .entropy import JointEmpirical, approx_inclusion_check, split_symbol, \
    x_partition, y_truncated_partition
from .groups import Element, get_group
from .markers import MarkerSet, find_marker_occurrences
from .matching import hopcroft_karp
from .quasitiling import Quasitiling


@dataclass(frozen=True)
class CodecParams:
    """Slack parameters of the coding step, validated jointly.

    delta is the SMB slack, eta the tiling slack, l the Y-alphabet
    truncation, eps_k the conditional-entropy target at precision index k,
    d_gap the entropy gap h_X - h_Y, j_max the tolerated marker occurrences
    per block, and (n0, eps) the weak-* proximity target.
    """

    delta: float
    eta: float
    s: int
    l: int
    k: int
    eps_k: float
    d_gap: float
    j_max: int
    n0: int
    eps: float
    group_id: str = "z1"

    def __post_init__(self):
        f_n0 = len(get_group(self.group_id).folner(self.n0))
        checks = [
            (self.delta < self.eps / (18 * f_n0),
             f"delta < eps/(18|F_n0|): {self.delta} vs {self.eps / (18 * f_n0)}"),
            (self.eta < self.eps / (12 * f_n0),
             f"eta < eps/(12|F_n0|): {self.eta} vs {self.eps / (12 * f_n0)}"),
            (self.delta < self.d_gap / 12,
             f"delta < d_gap/12: {self.delta} vs {self.d_gap / 12}"),
            ((2 * self.delta + 2 * self.eta)
             * max(math.log2(self.s), math.log2(self.l)) < self.eps_k,
             "(2delta+2eta)max(log s, log l) < eps_k"),
        ]
        for ok, msg in checks:
            if not ok:
                raise ValueError(f"CodecParams invariant violated: {msg}")


def shape_table(config: np.ndarray, S: Sequence[Element]) -> Dict[BlockKey, float]:
    """Empirical distribution of patterns with domain S over all fully
    contained translates of a Z^d box window."""
    arr = np.asarray(config)
    if arr.ndim == 1:
        arr = arr
    offs = np.array(canonical_domain(S))
    if offs.ndim == 1:
        offs = offs[:, None]
    lo = np.maximum(0, -offs.min(axis=0))
    hi = np.array(arr.shape) - np.maximum(0, offs.max(axis=0))
    if (hi <= lo).any():
        raise ValueError("window too small for the shape")
    grids = np.meshgrid(*[np.arange(a, b) for a, b in zip(lo, hi)],
                        indexing="ij")
    base = np.stack([g.ravel() for g in grids], axis=1)  # (m, d)
    pats = np.stack([arr[tuple((base + o).T)] for o in offs], axis=1)
    uniq, counts = np.unique(pats, axis=0, return_counts=True)
    total = counts.sum()
    return {tuple(int(v) for v in row): int(c) / int(total)
            for row, c in zip(uniq, counts)}


@dataclass(frozen=True)
class BlockFamily:
    side: str
    keys: Tuple[BlockKey, ...]
    mass: float
    bound_lo: Optional[float]
    bound_hi: Optional[float]


def _table_of(m: Union[EmpiricalMeasure, JointEmpirical, Mapping],
              S: Sequence[Element]) -> Dict[BlockKey, float]:
    if isinstance(m, JointEmpirical):
        m = m.measure
    if isinstance(m, EmpiricalMeasure):
        dom = canonical_domain(S)
        for n in sorted(m.tables):
            if m.domain(n) == dom:
                return m.tables[n]
        raise ValueError("no table with the requested domain; pass a "
                         "shape table explicitly")
    return dict(m)


def filter_blocks_smb(m, S: Sequence[Element], h: float, delta: float,
                      side: str, delta_prime: Optional[float] = None,
                      ref: Optional[EmpiricalMeasure] = None,
                      mp: Optional[MetricParams] = None,
                      box: Optional[Tuple[int, ...]] = None) -> BlockFamily:
    """SMB block filter over domain S.

    Y side keeps blocks with prob >= 2^{-|S|(h+delta)}; X side keeps blocks
    with prob <= 2^{-|S|(h-delta)}; the joint side applies the two-sided
    band and, when a reference measure is supplied, the weak-* proximity
    d(block, ref) < delta_prime with delta_prime defaulting to delta.
    """
    table = _table_of(m, S)
    size = len(canonical_domain(S))
    lo = hi = None
    if side == "y":
        lo = 2.0 ** (-size * (h + delta))
        keys = [k for k, p in table.items() if p >= lo]
    elif side == "x":
        hi = 2.0 ** (-size * (h - delta))
        keys = [k for k, p in table.items() if p <= hi]
    elif side == "joint":
        lo = 2.0 ** (-size * (h + delta))
        hi = 2.0 ** (-size * (h - delta))
        keys = [k for k, p in table.items() if lo <= p <= hi]
        if ref is not None:
            dp = delta if delta_prime is None else delta_prime
            mp = mp or MetricParams(n_max=1)
            kept = []
            for k in keys:
                cfg = np.array(k).reshape(box) if box else np.array(k)
                if metric_measure_block(ref, cfg, mp) < dp:
                    kept.append(k)
            keys = kept
    else:
        raise ValueError(f"unknown side {side!r}")
    if not keys:
        raise ValueError(f"empty {side} block family: parameters are "
                         "inconsistent with the source")
    mass = sum(table[k] for k in keys)
    return BlockFamily(side, tuple(sorted(keys)), mass, lo, hi)


def psi_transform(Ap: Block, S: Sequence[Element], M: MarkerSet,
                  i: int) -> Block:
    """Normalize an X-block so it carries exactly one marker, M_i at e.

    Writes M_i on D, clears symbol 1 from the positions whose translated
    marker domain leaves S, then repeatedly kills any remaining occurrence
    by flipping its lowest 1 outside D to 2.
    """
    group = M.group
    dom = canonical_domain(S)
    if Ap.domain != dom:
        raise ValueError("block domain does not match S")
    D = M.D
    pos = {c: idx for idx, c in enumerate(dom)}
    if any(c not in pos for c in D):
        raise ValueError("marker domain D is not contained in S")
    vals = list(Ap.symbols)
    for c, v in M.block(i).mapping().items():
        vals[pos[c]] = v
    sset = set(dom)
    for g in dom:
        if g == group.identity:
            continue
        if any(group.mul(c, g) not in sset for c in D):
            if vals[pos[g]] == 1:
                vals[pos[g]] = 2
    dset = set(D)
    while True:
        cur = Block(dom, tuple(vals), Ap.alphabet)
        occ = [(g, j) for g, j in find_marker_occurrences(cur, M)
               if g != group.identity]
        if not occ:
            break
        g, j = occ[0]
        ones = [c for c in canonical_domain(group.mul(c2, g) for c2 in D)
                if vals[pos[c]] == 1 and c not in dset]
        if not ones:
            raise RuntimeError("marker occurrence cannot be removed without "
                               "touching D")
        vals[pos[ones[0]]] = 2
    return Block(dom, tuple(vals), Ap.alphabet)


@dataclass(frozen=True)
class CountingReport:
    lhs: int
    exponent: float
    main: bool
    domain_small: bool
    occurrence_sparse: bool

    def __bool__(self) -> bool:
        return self.main


def counting_bound_check(S_size: int, D_size: int, j: int, s: int,
                         delta: float) -> CountingReport:
    """Exact-integer check of s^|D| + sum_{i<=j} C(|S|,i) 2^i <= 2^{2 delta |S|},
    plus the paper's two sufficient conditions."""
    lhs = s ** D_size + sum(math.comb(S_size, i) * 2 ** i
                            for i in range(1, j + 1))
    t = 2 * delta * S_size
    if t == int(t):
        main = lhs <= 2 ** int(t)
    elif lhs.bit_length() - 1 > t:
        main = False
    elif lhs.bit_length() <= t:
        main = True
    else:
        main = math.log2(lhs) <= t
    domain_small = D_size < (delta / math.log2(s)) * S_size
    if j == 0:
        occurrence_sparse = True
    else:
        occurrence_sparse = (2 * j / S_size
                             + (j / S_size) * math.log2(3 * S_size / j)) <= delta
    return CountingReport(lhs, t, main, domain_small, occurrence_sparse)


@dataclass
class Dictionary:
    """Injective map from Y-blocks to marker-normalized X-blocks, all with
    the same domain shape; out-of-family Y-blocks take the default image."""

    shape: Tuple[Element, ...]
    map: Dict[BlockKey, BlockKey]
    default: BlockKey

    def __post_init__(self):
        self.validate()

    def validate(self, M: Optional[MarkerSet] = None) -> None:
        images = list(self.map.values())
        if len(set(images)) != len(images):
            raise ValueError("dictionary is not injective")
        if self.map and self.default not in set(images):
            raise ValueError("default image is not in the range")
        if M is not None:
            for key in images:
                blk = Block(self.shape, key, M.s)
                if len(find_marker_occurrences(blk, M)) != 1:
                    raise ValueError("image block does not carry exactly "
                                     "one marker occurrence")

    def lookup(self, key: BlockKey) -> BlockKey:
        return self.map.get(key, self.default)

    def inverse(self) -> Dict[BlockKey, BlockKey]:
        return {v: k for k, v in self.map.items()}

    def to_json(self) -> dict:
        return {
            "shape": [list(c) if isinstance(c, tuple) else c
                      for c in self.shape],
            "map": [[list(k), list(v)] for k, v in sorted(self.map.items())],
            "default": list(self.default),
        }

    @classmethod
    def from_json(cls, data: dict) -> "Dictionary":
        shape = tuple(tuple(c) if isinstance(c, list) else c
                      for c in data["shape"])
        mp = {tuple(k): tuple(v) for k, v in data["map"]}
        return cls(shape, mp, tuple(data["default"]))


def build_dictionary(S: Sequence[Element], Bfam: Sequence[BlockKey],
                     Afam: Sequence[BlockKey],
                     relation: Callable[[BlockKey, BlockKey], bool],
                     K: int) -> Dictionary:
    """Injective Bfam -> Afam map along the relation, by exact maximum
    bipartite matching under the marriage-lemma degree conditions."""
    bs = sorted(Bfam)
    avs = sorted(Afam)
    if not bs:
        return Dictionary(canonical_domain(S), {}, tuple())
    adj = [[j for j, a in enumerate(avs) if relation(b, a)] for b in bs]
    for bi, nbrs in enumerate(adj):
        if len(nbrs) < K:
            raise ValueError(f"degree precondition failed: Y-block {bs[bi]} "
                             f"relates to {len(nbrs)} < K={K} X-blocks")
    rdeg = [0] * len(avs)
    for nbrs in adj:
        for j in nbrs:
            rdeg[j] += 1
    for j, d in enumerate(rdeg):
        if d > K:
            raise ValueError(f"degree precondition failed: X-block {avs[j]} "
                             f"relates to {d} > K={K} Y-blocks")
    match = hopcroft_karp(len(bs), len(avs), adj)
    if len(match) != len(bs):
        raise RuntimeError("incomplete matching despite degree conditions")
    mp = {bs[i]: avs[j] for i, j in match.items()}
    default = min(mp.values())
    return Dictionary(canonical_domain(S), mp, default)


def _tile_domains(T: Quasitiling):
    group = T.group
    out = []
    for i, c in T.tiles():
        dom = canonical_domain(group.mul(f, c) for f in T.shapes[i])
        out.append((i, c, dom))
    return out


def _window_index(window_shape: Tuple[int, ...], cell: Element):
    return tuple(cell)


def encode(x: np.ndarray, y: np.ndarray, T: Quasitiling,
           dicts: Mapping[int, Dictionary]) -> np.ndarray:
    """Tile-wise coding: xbar(tile) = Phi_S(y(tile)), symbol 2 off tiles."""
    xbar = np.full(np.asarray(y).shape, 2, dtype=np.int64)
    arr = np.asarray(y)
    for i, c, dom in _tile_domains(T):
        if i not in dicts:
            raise KeyError(f"no dictionary for shape index {i}")
        d = dicts[i]
        exp = canonical_domain(T.group.mul(f, c) for f in d.shape)
        if dom != exp:
            raise KeyError(f"tile at {c} does not match dictionary shape {i}")
        key = tuple(int(arr[_window_index(arr.shape, g)]) for g in dom)
        img = d.lookup(key)
        for g, v in zip(dom, img):
            xbar[_window_index(arr.shape, g)] = v
    return xbar


@dataclass(frozen=True)
class DecodeReport:
    n_occurrences: int
    n_decoded_tiles: int
    n_unmatched_tiles: int
    recovered_fraction: float


def decode(xbar: np.ndarray, M: MarkerSet,
           dicts: Mapping[int, Dictionary]) -> Tuple[np.ndarray, DecodeReport]:
    """Recover tiles from marker occurrences and invert the dictionaries.

    Returns a partial Y window (0 where unrecovered) and a coverage report.
    """
    arr = np.asarray(xbar)
    group = get_group("z" + str(arr.ndim))
    cells = canonical_domain(tuple(idx) for idx in np.ndindex(arr.shape))
    blk = Block(cells, tuple(int(arr[_window_index(arr.shape, g)])
                             for g in cells), max(2, int(arr.max())))
    occs = find_marker_occurrences(blk, M)
    ybar = np.zeros(arr.shape, dtype=np.int64)
    decoded = unmatched = recovered = 0
    domain_set = set(cells)
    for g, i in occs:
        d = dicts.get(i - 1)
        if d is None:
            unmatched += 1
            continue
        dom = canonical_domain(group.mul(f, g) for f in d.shape)
        if any(c not in domain_set for c in dom):
            unmatched += 1
            continue
        key = tuple(int(arr[_window_index(arr.shape, c)]) for c in dom)
        pre = d.inverse().get(key)
        if pre is None:
            unmatched += 1
            continue
        for c, v in zip(dom, pre):
            ybar[_window_index(arr.shape, c)] = v
        decoded += 1
        recovered += len(dom)
    report = DecodeReport(len(occs), decoded, unmatched,
                          recovered / arr.size)
    return ybar, report


def vkl_check(joint: JointEmpirical, k: int, l: int, n: int,
              exhaustive: bool = False) -> bool:
    """Mutual 1/k-inclusion of P and the l-truncated Q at depth n."""
    eps = 1.0 / k
    P = x_partition(joint.s, joint.l)
    Q = y_truncated_partition(joint.s, joint.l, l)
    fwd = approx_inclusion_check(joint, Q, P, eps, n, exhaustive=exhaustive)
    bwd = approx_inclusion_check(joint, P, Q, eps, n, exhaustive=exhaustive)
    return fwd.passed and bwd.passed


def entropy_deficit_bound(h_nu: float, delta: float, eta: float,
                          l: int) -> float:
    """Guaranteed lower bound h_nu - (2 delta + 2 eta) log l on the coded
    X entropy."""
    return h_nu - (2 * delta + 2 * eta) * math.log2(l)
