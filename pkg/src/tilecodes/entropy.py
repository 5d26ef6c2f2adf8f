"""Partition and process entropy, conditional entropy, SMB band checks, and
the inclusion-from-conditional-entropy test.

Partitions act on product-alphabet symbols; a joint measure is an
EmpiricalMeasure over the product alphabet together with the two factor
alphabet sizes.  All entropies are base 2.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .blocks import BlockKey, EmpiricalMeasure


@dataclass(frozen=True)
class Partition:
    """Finite labelled partition realized as a symbol -> label assignment.

    labels[sym - 1] is the label of alphabet symbol sym.
    """

    labels: Tuple[int, ...]

    def __post_init__(self):
        if not self.labels:
            raise ValueError("empty assignment")

    @property
    def n_labels(self) -> int:
        return max(self.labels) + 1

    def label(self, sym: int) -> int:
        return self.labels[sym - 1]


def product_symbol(x: int, y: int, l: int) -> int:
    """Symbol of the pair (x, y) in the product alphabet, both 1-based."""
    return (x - 1) * l + y


def split_symbol(sym: int, l: int) -> Tuple[int, int]:
    return (sym - 1) // l + 1, (sym - 1) % l + 1


def x_partition(s: int, l: int) -> Partition:
    """P: product symbols labelled by their X coordinate."""
    return Partition(tuple(split_symbol(z, l)[0] - 1 for z in range(1, s * l + 1)))


def y_partition(s: int, l: int) -> Partition:
    """Q: product symbols labelled by their Y coordinate."""
    return Partition(tuple(split_symbol(z, l)[1] - 1 for z in range(1, s * l + 1)))


def y_truncated_partition(s: int, l: int, cut: int) -> Partition:
    """Q^(cut): Y symbols >= cut merged into a single label."""
    return Partition(tuple(min(split_symbol(z, l)[1], cut) - 1
                           for z in range(1, s * l + 1)))


@dataclass(frozen=True)
class JointEmpirical:
    """Empirical measure over the product alphabet s*l."""

    measure: EmpiricalMeasure
    s: int
    l: int

    def __post_init__(self):
        if self.measure.alphabet != self.s * self.l:
            raise ValueError("alphabet is not the declared product")

    def marginal(self, side: str) -> EmpiricalMeasure:
        pick = 0 if side == "x" else 1
        tables: Dict[int, Dict[BlockKey, float]] = {}
        for n, table in self.measure.tables.items():
            out: Dict[BlockKey, float] = {}
            for key, prob in table.items():
                mk = tuple(split_symbol(z, self.l)[pick] for z in key)
                out[mk] = out.get(mk, 0.0) + prob
            tables[n] = out
        alpha = self.s if side == "x" else self.l
        return EmpiricalMeasure(self.measure.group_id, alpha, tables,
                                meta=dict(self.measure.meta, marginal=side))


def partition_entropy(dist: Sequence[float]) -> float:
    v = np.asarray(dist, dtype=float)
    if (v < -1e-12).any() or abs(v.sum() - 1.0) > 1e-9:
        raise ValueError("not a probability vector")
    v = v[v > 0]
    return float(-(v * np.log2(v)).sum())


def label_pattern_table(m: EmpiricalMeasure, P: Partition,
                        n: int) -> Dict[BlockKey, float]:
    """Distribution of P-label patterns over the depth-n domain."""
    out: Dict[BlockKey, float] = {}
    for key, prob in m.tables[n].items():
        pat = tuple(P.label(z) for z in key)
        out[pat] = out.get(pat, 0.0) + prob
    return out


def process_entropy_estimate(m: EmpiricalMeasure, P: Partition, n: int) -> float:
    """H of the F_n pattern of P under m, per site."""
    if n not in m.tables:
        raise KeyError(f"no table at depth {n}")
    table = label_pattern_table(m, P, n)
    size = len(m.group.folner(n))
    return partition_entropy(list(table.values())) / size


def process_entropy_profile(m: EmpiricalMeasure, P: Partition) -> List[dict]:
    """Per-depth estimates with the refinement difference as a convergence
    diagnostic."""
    rows = []
    prev_total = 0.0
    prev_size = 0
    for n in sorted(m.tables):
        size = len(m.group.folner(n))
        total = partition_entropy(list(label_pattern_table(m, P, n).values()))
        rows.append({"n": n, "per_site": total / size,
                     "increment": (total - prev_total) / (size - prev_size)})
        prev_total, prev_size = total, size
    return rows


def conditional_entropy(joint: JointEmpirical, P: Partition, Q: Partition,
                        n: int) -> float:
    """H(P at the identity | Q pattern over F_n) under the joint table."""
    m = joint.measure
    if n not in m.tables:
        raise KeyError(f"no table at depth {n}")
    dom = m.domain(n)
    e_idx = dom.index(m.group.identity)
    cond: Dict[BlockKey, Dict[int, float]] = {}
    for key, prob in m.tables[n].items():
        qpat = tuple(Q.label(z) for z in key)
        plab = P.label(key[e_idx])
        cond.setdefault(qpat, {})[plab] = cond.get(qpat, {}).get(plab, 0.0) + prob
    total = 0.0
    for qpat, dist in cond.items():
        mass = sum(dist.values())
        if mass <= 0:
            continue
        total += mass * partition_entropy([v / mass for v in dist.values()])
    return total


def delta_for_inclusion(eps: float) -> float:
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0,1)")
    return eps * eps / 9 * 0.99


@dataclass(frozen=True)
class InclusionReport:
    passed: bool
    eps: float
    worst_atom: int
    worst_sym_diff: float
    unions: Dict[int, Tuple[BlockKey, ...]]


def approx_inclusion_check(joint: JointEmpirical, P: Partition, Q: Partition,
                           eps: float, n: int,
                           exhaustive: bool = False) -> InclusionReport:
    """For each P-atom A, build the union B_A of F_n Q-pattern atoms whose
    dominating P-atom is A (ties to the lowest P-label) and test
    xi(A sym-diff B_A) < eps.  With exhaustive=True the best union over all
    subsets of Q-atoms is searched instead, certifying a negative verdict.
    """
    m = joint.measure
    dom = m.domain(n)
    e_idx = dom.index(m.group.identity)
    # joint mass of (P-label at e, Q-pattern)
    mass: Dict[BlockKey, Dict[int, float]] = {}
    p_mass: Dict[int, float] = {}
    for key, prob in m.tables[n].items():
        qpat = tuple(Q.label(z) for z in key)
        plab = P.label(key[e_idx])
        mass.setdefault(qpat, {})
        mass[qpat][plab] = mass[qpat].get(plab, 0.0) + prob
        p_mass[plab] = p_mass.get(plab, 0.0) + prob
    atoms = sorted(p_mass)
    unions: Dict[int, List[BlockKey]] = {a: [] for a in atoms}
    if exhaustive:
        qpats = sorted(mass)
        for a in atoms:
            for qpat in qpats:
                inter = mass[qpat].get(a, 0.0)
                rest = sum(mass[qpat].values()) - inter
                if inter > rest:
                    unions[a].append(qpat)
    else:
        for qpat in sorted(mass):
            dom_label = max(sorted(mass[qpat]), key=lambda a: (mass[qpat][a], -a))
            unions[dom_label].append(qpat)
    worst_atom, worst = -1, -1.0
    for a in atoms:
        inter = sum(mass[q].get(a, 0.0) for q in unions[a])
        b_mass = sum(sum(mass[q].values()) for q in unions[a])
        sym = (p_mass[a] - inter) + (b_mass - inter)
        if sym > worst:
            worst_atom, worst = a, sym
    return InclusionReport(worst < eps, eps, worst_atom, worst,
                           {a: tuple(unions[a]) for a in atoms})


@dataclass(frozen=True)
class SMBReport:
    mass: float
    passed: bool
    n: int
    h: float
    delta: float
    lo: float
    hi: float
    n_blocks_in_band: int


def smb_check(m: EmpiricalMeasure, h: float, delta: float, n: int) -> SMBReport:
    """Mass of depth-n blocks whose measure sits inside the 2^{-|F_n|(h +- delta)}
    band; passes when it reaches 1 - delta."""
    size = len(m.group.folner(n))
    lo = 2.0 ** (-size * (h + delta))
    hi = 2.0 ** (-size * (h - delta))
    mass = 0.0
    count = 0
    for prob in m.tables[n].values():
        if lo <= prob <= hi:
            mass += prob
            count += 1
    return SMBReport(mass, mass >= 1 - delta, n, h, delta, lo, hi, count)


def smb_subset_eta(delta: float, h: float, s: int) -> float:
    if delta <= 0 or s < 2:
        raise ValueError("need delta > 0 and s >= 2")
    return min(2 * delta / (h + 3 * delta), delta / math.log2(s))


@dataclass(frozen=True)
class RectangleReport:
    integral: float
    premise: bool
    tail_mass: float
    conclusion_holds: bool


def rectangle_rule_check(f: Sequence[float], mu: Sequence[float],
                         a: float, b: float) -> RectangleReport:
    """Markov-style rectangle rule on a finite table:
    if the mu-integral of f >= 0 is below a*b then mu{f > a} < b."""
    fv = np.asarray(f, dtype=float)
    mv = np.asarray(mu, dtype=float)
    if (fv < 0).any():
        raise ValueError("f must be nonnegative")
    if abs(mv.sum() - 1.0) > 1e-9 or (mv < 0).any():
        raise ValueError("mu must be a distribution")
    integral = float((fv * mv).sum())
    premise = integral < a * b
    tail = float(mv[fv > a].sum())
    return RectangleReport(integral, premise, tail, (not premise) or tail < b)
