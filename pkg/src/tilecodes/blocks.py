"""Blocks, occurrence/frequency counting, empirical measures, and the
truncated weak-* metric.

A block is a symbol assignment on a finite subset of the group; a window
configuration is just a block whose domain is the whole window.  Window
configurations over Z^d boxes are handled as NumPy arrays on the fast paths.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from . import _kernels
from .groups import Element, Group, ZGroup, get_group

BlockKey = Tuple[int, ...]


def canonical_domain(cells: Iterable[Element]) -> Tuple[Element, ...]:
    """Lexicographic ordering on coordinates; fixes hashing and serialization."""
    return tuple(sorted(set(cells)))


@dataclass(frozen=True)
class Block:
    """Map from a finite group subset into the alphabet {1, ..., alphabet}."""

    domain: Tuple[Element, ...]
    symbols: BlockKey
    alphabet: int

    def __post_init__(self):
        if len(self.domain) != len(self.symbols):
            raise ValueError("domain/symbol length mismatch")
        if len(set(self.domain)) != len(self.domain):
            raise ValueError("duplicate domain elements")

    @staticmethod
    def make(cells: Iterable[Element], assign: Dict[Element, int],
             alphabet: int) -> "Block":
        dom = canonical_domain(cells)
        return Block(dom, tuple(assign[c] for c in dom), alphabet)

    @staticmethod
    def from_array(arr: np.ndarray, alphabet: int,
                   origin: Optional[Element] = None) -> "Block":
        a = np.asarray(arr)
        origin = origin or (0,) * a.ndim
        cells = [tuple(int(o + i) for o, i in zip(origin, idx))
                 for idx in np.ndindex(a.shape)]
        return Block(tuple(cells), tuple(int(v) for v in a.ravel()), alphabet)

    def mapping(self) -> Dict[Element, int]:
        return dict(zip(self.domain, self.symbols))

    def to_array(self) -> np.ndarray:
        """Dense array view; requires the domain to be a full box."""
        lo = tuple(min(c[i] for c in self.domain) for i in range(len(self.domain[0])))
        hi = tuple(max(c[i] for c in self.domain) for i in range(len(self.domain[0])))
        shape = tuple(h - l + 1 for l, h in zip(lo, hi))
        if int(np.prod(shape)) != len(self.domain):
            raise ValueError("domain is not a full box")
        arr = np.zeros(shape, dtype=np.int64)
        for c, s in zip(self.domain, self.symbols):
            arr[tuple(x - l for x, l in zip(c, lo))] = s
        return arr

    def to_json(self) -> dict:
        return {"domain": [list(c) for c in self.domain],
                "symbols": list(self.symbols),
                "alphabet": self.alphabet}

    @staticmethod
    def from_json(obj: dict) -> "Block":
        return Block(tuple(tuple(c) for c in obj["domain"]),
                     tuple(obj["symbols"]), obj["alphabet"])


def occurs_at(B: Block, C: Block, g: Element, group: Group) -> bool:
    """True iff domain(B)·g lies in domain(C) and C(d·g) = B(d) for all d."""
    cmap = C.mapping()
    for d, s in zip(B.domain, B.symbols):
        cell = group.mul(d, g)
        if cmap.get(cell) != s:
            return False
    return True


def frequency(Bp: Block, B: Block, group: Group) -> float:
    """(1/|domain(B)|) * #occurrences of Bp in B at positions h in domain(B)."""
    count = sum(1 for h in B.domain if occurs_at(Bp, B, h, group))
    return count / len(B.domain)


@dataclass(frozen=True)
class MetricParams:
    """Truncation depth of the weak-* metric series (error <= 2^(1-n_max))."""

    n_max: int = 6

    def __post_init__(self):
        if self.n_max < 1:
            raise ValueError("n_max must be >= 1")


class BlockLaw:
    """Exact block probabilities of a source model (stands in for mu, nu, xi)."""

    def log2_prob(self, symbols: Sequence[int], cells: Sequence[Element]) -> float:
        raise NotImplementedError


@dataclass(frozen=True)
class ProductLaw(BlockLaw):
    """iid product measure; probs[i] is the probability of symbol i+1."""

    probs: Tuple[float, ...]

    def log2_prob(self, symbols, cells=None) -> float:
        total = 0.0
        for s in symbols:
            p = self.probs[s - 1]
            if p == 0.0:
                return -math.inf
            total += math.log2(p)
        return total

    def sitewise_log2(self) -> np.ndarray:
        return np.array([math.log2(p) if p > 0 else -np.inf for p in self.probs])


@dataclass(frozen=True)
class MarkovLaw(BlockLaw):
    """Stationary Markov chain on Z; cells must form a contiguous interval."""

    initial: Tuple[float, ...]
    transitions: Tuple[Tuple[float, ...], ...]

    def log2_prob(self, symbols, cells) -> float:
        xs = sorted(range(len(cells)), key=lambda i: cells[i])
        coords = [cells[i][0] for i in xs]
        if coords != list(range(coords[0], coords[0] + len(coords))):
            raise ValueError("MarkovLaw needs a contiguous interval domain")
        seq = [symbols[i] for i in xs]
        total = math.log2(self.initial[seq[0] - 1])
        for a, b in zip(seq, seq[1:]):
            p = self.transitions[a - 1][b - 1]
            if p == 0.0:
                return -math.inf
            total += math.log2(p)
        return total


@dataclass
class EmpiricalMeasure:
    """Block-frequency tables per Folner domain F_1 ... F_{n_max}.

    tables[n] maps the canonical symbol tuple of a block with domain F_n to
    its (re-normalized) frequency.  `law`, when present, gives exact model
    probabilities for arbitrary domains.
    """

    group_id: str
    alphabet: int
    tables: Dict[int, Dict[BlockKey, float]]
    meta: dict = field(default_factory=dict)
    law: Optional[BlockLaw] = None

    @property
    def group(self) -> Group:
        return get_group(self.group_id)

    @property
    def n_max(self) -> int:
        return max(self.tables)

    def domain(self, n: int) -> Tuple[Element, ...]:
        return canonical_domain(self.group.folner(n))

    def prob(self, n: int, key: BlockKey) -> float:
        return self.tables[n].get(key, 0.0)

    def validate(self, tol: float = 1e-9) -> None:
        for n, table in self.tables.items():
            total = sum(table.values())
            if abs(total - 1.0) > tol:
                raise ValueError(f"table at depth {n} sums to {total}")
            if any(v < 0 for v in table.values()):
                raise ValueError(f"negative entry in table at depth {n}")

    def restrict_table(self, n_from: int, n_to: int) -> Dict[BlockKey, float]:
        """Marginalize the depth n_from table onto the domain F_{n_to}."""
        dom_from = self.domain(n_from)
        dom_to = self.domain(n_to)
        idx = [dom_from.index(c) for c in dom_to]
        out: Dict[BlockKey, float] = {}
        for key, p in self.tables[n_from].items():
            sub = tuple(key[i] for i in idx)
            out[sub] = out.get(sub, 0.0) + p
        return out

    def to_json(self) -> dict:
        return {
            "group": self.group_id,
            "alphabet": self.alphabet,
            "tables": {
                str(n): {",".join(map(str, k)): v
                         for k, v in sorted(table.items())}
                for n, table in sorted(self.tables.items())
            },
            "meta": self.meta,
        }

    @staticmethod
    def from_json(obj: dict) -> "EmpiricalMeasure":
        tables = {
            int(n): {tuple(int(x) for x in k.split(",")): float(v)
                     for k, v in table.items()}
            for n, table in obj["tables"].items()
        }
        return EmpiricalMeasure(obj["group"], obj["alphabet"], tables,
                                meta=obj.get("meta", {}))


def _decode_codes(codes: np.ndarray, width: int, base: int) -> List[BlockKey]:
    keys = []
    for code in codes:
        c = int(code)
        key = []
        for _ in range(width):
            key.append(c % base + 1)
            c //= base
        keys.append(tuple(key))
    return keys


def _config_codes(arr: np.ndarray, n: int, base: int) -> np.ndarray:
    """Codes of all fully-contained F_n-translates of a Z^d box config."""
    w = 2 * n + 1
    if arr.ndim == 1:
        return _kernels.sliding_codes_1d(arr, w, base)
    if arr.ndim == 2:
        return _kernels.sliding_codes_2d(arr, w, w, base).ravel()
    raise ValueError("only 1-D and 2-D configurations supported")


def _check_code_width(n_cells: int, base: int) -> None:
    if n_cells * math.log2(base) > 63:
        raise ValueError(
            f"block domain too large for radix coding ({n_cells} cells, base {base})")


def empirical_measure(config: np.ndarray, group_id: str, p: MetricParams,
                      alphabet: int, meta: Optional[dict] = None) -> EmpiricalMeasure:
    """Frequency tables of a Z^d window configuration at depths 0..n_max.

    Translates not fully contained in the window are excluded; each table is
    normalized over the remaining translates.
    """
    arr = np.asarray(config)
    group = get_group(group_id)
    if not isinstance(group, ZGroup) or arr.ndim != group.d:
        raise ValueError("empirical_measure expects a Z^d box configuration")
    tables: Dict[int, Dict[BlockKey, float]] = {}
    for n in range(0, p.n_max + 1):
        w = 2 * n + 1
        if any(s < w for s in arr.shape):
            raise ValueError(f"window too small for depth {n}")
        _check_code_width(w ** group.d, alphabet)
        codes = _config_codes(arr, n, alphabet)
        uniq, counts = np.unique(codes, return_counts=True)
        total = counts.sum()
        keys = _decode_codes(uniq, w ** group.d, alphabet)
        tables[n] = {k: int(c) / int(total) for k, c in zip(keys, counts)}
    return EmpiricalMeasure(group_id, alphabet, tables, meta=dict(meta or {}))


def model_measure(law: BlockLaw, group_id: str, p: MetricParams,
                  alphabet: int) -> EmpiricalMeasure:
    """Exact tables of a source model, enumerated over all depth-n blocks."""
    group = get_group(group_id)
    tables: Dict[int, Dict[BlockKey, float]] = {}
    for n in range(0, p.n_max + 1):
        dom = canonical_domain(group.folner(n))
        if len(dom) * math.log2(alphabet) > 24:
            raise ValueError(f"model table at depth {n} too large to enumerate")
        table = {}
        for key in itertools.product(range(1, alphabet + 1), repeat=len(dom)):
            lp = law.log2_prob(key, dom)
            if lp > -math.inf:
                table[key] = 2.0 ** lp
        tables[n] = table
    return EmpiricalMeasure(group_id, alphabet, tables, law=law,
                            meta={"model": True})


def point_mass_measure(symbol: int, group_id: str, p: MetricParams,
                       alphabet: int) -> EmpiricalMeasure:
    group = get_group(group_id)
    tables = {}
    for n in range(0, p.n_max + 1):
        size = len(group.folner(n))
        tables[n] = {(symbol,) * size: 1.0}
    return EmpiricalMeasure(group_id, alphabet, tables, meta={"constant": symbol})


def metric_measures(m1: EmpiricalMeasure, m2: EmpiricalMeasure,
                    p: MetricParams) -> float:
    """Truncated weak-* metric: sum over n of 2^-n |B_n|^-1 sum |m1(B)-m2(B)|.

    |B_n| counts all alphabet^|F_n| blocks; absent blocks contribute zero
    difference, so only the union of supports is visited.
    """
    if m1.alphabet != m2.alphabet or m1.group_id != m2.group_id:
        raise ValueError("measures live over different alphabets or groups")
    total = 0.0
    for n in range(1, p.n_max + 1):
        t1, t2 = m1.tables[n], m2.tables[n]
        size = len(m1.group.folner(n))
        bn = m1.alphabet ** size
        diff = 0.0
        for key in t1.keys() | t2.keys():
            diff += abs(t1.get(key, 0.0) - t2.get(key, 0.0))
        total += (2.0 ** -n) * diff / bn
    return total


def metric_measure_block(m: EmpiricalMeasure, config: np.ndarray,
                         p: MetricParams) -> float:
    """Same series with frequencies of blocks in the configuration in place
    of the second measure."""
    emp = empirical_measure(np.asarray(config), m.group_id, p, m.alphabet)
    return metric_measures(m, emp, p)


@dataclass(frozen=True)
class SubsetFrequencyReport:
    status: str              # "ok" | "premise-failed"
    avg_full: float
    avg_subset: float
    mu_B: float
    delta: float
    conclusion_holds: bool


def subset_frequency_bound_check(C: Block, B: Block, F: Sequence[Element],
                                 Fp: Sequence[Element], mu_B: float,
                                 delta: float, group: Group) -> SubsetFrequencyReport:
    """Check the subset-average conclusion: if the F-average of the occurrence
    indicator is within delta of mu_B and F' is a large enough subset, the
    F'-average stays within 2*delta."""
    Fs, Fps = list(F), list(Fp)
    if not set(Fps) <= set(Fs):
        raise ValueError("F' must be a subset of F")
    eta_max = delta / (1 + 2 * delta)
    hits_full = sum(1 for g in Fs if occurs_at(B, C, g, group))
    hits_sub = sum(1 for g in Fps if occurs_at(B, C, g, group))
    avg_full = hits_full / len(Fs)
    avg_sub = hits_sub / len(Fps)
    premise = (abs(avg_full - mu_B) <= delta
               and len(Fps) > (1 - eta_max) * len(Fs))
    status = "ok" if premise else "premise-failed"
    holds = abs(avg_sub - mu_B) <= 2 * delta
    return SubsetFrequencyReport(status, avg_full, avg_sub, mu_B, delta, holds)


def dump_json(obj: dict, path) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, sort_keys=True, indent=1)
        fh.write("\n")
