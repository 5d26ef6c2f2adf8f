import json

import numpy as np
import pytest

from tilecodes.blocks import Block, canonical_domain
from tilecodes.markers import (MarkerSet, construct_markers,
                               find_marker_occurrences,
                               verify_marker_uniqueness)


def embed(patterns, window=60, alphabet=3, fill=3):
    """1-D configuration with the given {offset: block} patterns written in."""
    dom = canonical_domain((i,) for i in range(window))
    sym = {c: fill for c in dom}
    for off, blk in patterns.items():
        for c, s in zip(blk.domain, blk.symbols):
            sym[(c[0] + off,)] = s
    return Block.make(dom, sym, alphabet)


def test_small_marker_geometry():
    M = construct_markers(2, 0.04, 3, "z1")
    assert M.D0 == ((0,), (1,), (2,))
    assert M.gs == ((5,), (6,))
    assert M.D == ((0,), (1,), (2,), (5,), (6,))
    assert M.block(1).symbols == (1, 1, 1, 1, 2)
    assert M.block(2).symbols == (1, 1, 1, 2, 1)


def test_prime_base_length():
    M = construct_markers(3, 2 ** -20, 2, "z1")
    assert len(M.D0) == 23


def test_z2_markers_disjoint():
    M = construct_markers(4, 0.1, 3, "z2")
    d0 = set(M.D0)
    for g in M.gs:
        shifted = {(a[0] + g[0], a[1] + g[1]) for a in d0}
        assert not (shifted & d0)


def test_occurrence_scan():
    M = construct_markers(2, 0.04, 3, "z1")
    C = embed({10: M.block(1), 30: M.block(2)})
    assert find_marker_occurrences(C, M) == [((10,), 1), ((30,), 2)]


def test_uniqueness_holds():
    M = construct_markers(2, 0.04, 3, "z1")
    C = embed({20: M.block(2)})
    v = verify_marker_uniqueness(C, M, (20,))
    assert v.status == "holds" and v.marker_index == 2


def test_uniqueness_premise_failed():
    M = construct_markers(2, 0.04, 3, "z1")
    C = embed({20: M.block(1)})
    sym = dict(zip(C.domain, C.symbols))
    # plant a stray 1 on the guard halo of position 20
    sym[(19,)] = 1
    bad = Block.make(C.domain, sym, 3)
    assert verify_marker_uniqueness(bad, M, (20,)).status == "premise-failed"
    # no marker at all
    plain = embed({})
    assert verify_marker_uniqueness(plain, M, (20,)).status == "premise-failed"


def test_bad_parameters_rejected():
    with pytest.raises(ValueError):
        construct_markers(0, 0.04, 3, "z1")
    with pytest.raises(ValueError):
        construct_markers(2, 0.0, 3, "z1")
    with pytest.raises(ValueError):
        construct_markers(2, 0.04, 1, "z1")


def test_marker_json_roundtrip():
    M = construct_markers(3, 0.02, 4, "z1")
    back = MarkerSet.from_json(json.loads(json.dumps(M.to_json())))
    assert back == M
