"""Concrete countable groups, Folner sequences, and window-scale set arithmetic.

Group elements are plain integer tuples; the active group fixes their
interpretation (vector for Z^d, matrix coordinates (a, b, c) for the discrete
Heisenberg group).  All set operations are element-wise.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Optional, Tuple

import numpy as np

Element = Tuple[int, ...]


class Group:
    """Base class for the supported concrete groups."""

    id: str
    rank: int

    @property
    def identity(self) -> Element:
        return (0,) * self.rank

    def mul(self, a: Element, b: Element) -> Element:
        raise NotImplementedError

    def inv(self, a: Element) -> Element:
        raise NotImplementedError

    def folner(self, n: int) -> frozenset:
        """The n-th Folner set (symmetric, increasing, contains identity)."""
        raise NotImplementedError

    def ray(self) -> Iterator[Element]:
        """Canonical scan order over nonnegative coordinates.

        Enumerates N^rank by total coordinate sum, then lexicographically.
        Used by the marker construction, which needs a deterministic choice
        of 'fresh' elements far from the identity.
        """
        for total in itertools.count():
            for c in _compositions(total, self.rank):
                yield c


def _compositions(total: int, parts: int) -> Iterator[Element]:
    if parts == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


class ZGroup(Group):
    """Z^d with coordinate-wise addition, d in {1, 2}."""

    def __init__(self, d: int):
        if d not in (1, 2):
            raise ValueError(f"unsupported dimension {d}")
        self.d = d
        self.rank = d
        self.id = f"z{d}"

    def mul(self, a: Element, b: Element) -> Element:
        return tuple(x + y for x, y in zip(a, b))

    def inv(self, a: Element) -> Element:
        return tuple(-x for x in a)

    def folner(self, n: int) -> frozenset:
        if n < 0:
            raise ValueError("Folner index must be >= 0")
        rng = range(-n, n + 1)
        return frozenset(itertools.product(rng, repeat=self.d))


class HeisenbergGroup(Group):
    """Discrete Heisenberg group H3(Z) in coordinates (a, b, c).

    (a, b, c) * (a', b', c') = (a + a', b + b', c + c' + a * b').
    """

    rank = 3
    id = "heis"

    def mul(self, a: Element, b: Element) -> Element:
        return (a[0] + b[0], a[1] + b[1], a[2] + b[2] + a[0] * b[1])

    def inv(self, a: Element) -> Element:
        return (-a[0], -a[1], a[0] * a[1] - a[2])

    def folner(self, n: int) -> frozenset:
        # |a|, |b| <= n and |2c - ab| <= 2n^2: closed under the inverse
        # (2(ab - c) - ab = -(2c - ab)) and exhausts the group.
        out = []
        for a in range(-n, n + 1):
            for b in range(-n, n + 1):
                for c in range(-2 * n * n, 2 * n * n + 1):
                    if abs(2 * c - a * b) <= 2 * n * n:
                        out.append((a, b, c))
        return frozenset(out)


_GROUPS = {"z1": ZGroup(1), "z2": ZGroup(2), "heis": HeisenbergGroup()}


def get_group(group_id: str) -> Group:
    try:
        return _GROUPS[group_id]
    except KeyError:
        raise KeyError(f"unknown group id {group_id!r}; known: {sorted(_GROUPS)}")


def translate_set(F: Iterable[Element], g: Element, group: Group,
                  side: str = "right") -> frozenset:
    """Element-wise product Fg (side='right') or gF (side='left')."""
    if side == "right":
        return frozenset(group.mul(f, g) for f in F)
    if side == "left":
        return frozenset(group.mul(g, f) for f in F)
    raise ValueError(f"side must be 'left' or 'right', got {side!r}")


def invariance_defect(F: Iterable[Element], K: Iterable[Element],
                      group: Group) -> float:
    """max over g in K of |gF symmetric-difference F| / |F|."""
    Fs = frozenset(F)
    if not Fs:
        raise ValueError("invariance defect undefined for empty F")
    worst = 0.0
    for g in K:
        gF = translate_set(Fs, g, group, side="left")
        worst = max(worst, len(gF ^ Fs) / len(Fs))
    return worst


@dataclass(frozen=True)
class Window:
    """Finite portion of the group on which all experiments live.

    For Z^d this is the box [0, L)^d; `shape` is set only in that case and
    enables the array-backed fast paths.
    """

    group_id: str
    region: frozenset
    shape: Optional[Tuple[int, ...]] = None

    @staticmethod
    def box(group_id: str, size: int) -> "Window":
        group = get_group(group_id)
        if not isinstance(group, ZGroup):
            raise ValueError("box windows are only defined for Z^d")
        region = frozenset(itertools.product(range(size), repeat=group.d))
        return Window(group_id, region, shape=(size,) * group.d)

    def __post_init__(self):
        if not self.region:
            raise ValueError("window must be nonempty")

    @property
    def group(self) -> Group:
        return get_group(self.group_id)

    def __len__(self) -> int:
        return len(self.region)


def lower_banach_density_window(A: Iterable[Element], window: Window,
                                n: int) -> float:
    """min over g with F_n g inside the window of |A ∩ F_n g| / |F_n|.

    Window-scale surrogate for the lower Banach density of A.
    """
    group = window.group
    Fn = group.folner(n)
    As = frozenset(A)
    if window.shape is not None and isinstance(group, ZGroup):
        return _lbd_box(As, window, n, group.d)
    best = None
    for g in window.region:
        Fg = translate_set(Fn, g, group, side="right")
        if Fg <= window.region:
            best = min(best, len(As & Fg)) if best is not None else len(As & Fg)
    if best is None:
        raise ValueError(f"no translate of F_{n} fits inside the window")
    return best / len(Fn)


def _lbd_box(A: frozenset, window: Window, n: int, d: int) -> float:
    L = window.shape[0]
    w = 2 * n + 1
    if w > L:
        raise ValueError(f"no translate of F_{n} fits inside the window")
    mask = np.zeros(window.shape, dtype=np.int64)
    for coord in A:
        mask[coord] = 1
    # box sums of every w-wide span, one axis at a time
    for axis in range(d):
        cs = np.cumsum(mask, axis=axis)
        pad = np.zeros_like(np.take(cs, [0], axis=axis))
        cs = np.concatenate([pad, cs], axis=axis)
        hi = np.take(cs, range(w, L + 1), axis=axis)
        lo = np.take(cs, range(0, L - w + 1), axis=axis)
        mask = hi - lo
    return int(mask.min()) / (w ** d)
