import json

import numpy as np
import pytest

from tilecodes.groups import Window
from tilecodes.quasitiling import (Quasitiling, TilingParams,
                                   consolidate_shapes, construct_quasitiling,
                                   covering_density, disjointify,
                                   is_disjoint, is_epsilon_disjoint,
                                   layer_count, random_eta_disjoint,
                                   symbolic_decode, symbolic_encode)
from tilecodes.sampling import rng_for


def line_tiling(shapes_and_centers, window=12):
    w = Window.box("z1", window)
    shapes = [tuple((v,) for v in s) for s, _ in shapes_and_centers]
    centers = [tuple((c,) for c in cs) for _, cs in shapes_and_centers]
    return Quasitiling("z1", w, shapes, [3] * len(shapes), centers)


def test_layer_counts():
    assert layer_count(0.1) == 22
    assert layer_count(0.5) == 2


def test_epsilon_disjoint_overlapping_pair():
    # two 5-cell tiles sharing one cell: each can keep 4 >= floor(0.9*5)+1=5? no;
    # eps=0.25 demands 4 kept cells, feasible
    T = line_tiling([((0, 1, 2, 3, 4), (0, 4))])
    ok, witness = is_epsilon_disjoint(T, 0.25)
    assert ok
    cells = list(witness.values())
    assert not (cells[0] & cells[1])


def test_epsilon_disjoint_identical_pair_fails():
    T = line_tiling([((0, 1, 2, 3, 4), (0,)), ((0, 1, 2, 3, 4), (1,))], window=12)
    # tiles 0..4 and 1..5 overlap in 4 of 5 cells; eps=0.1 demands 5 each
    ok, witness = is_epsilon_disjoint(T, 0.1)
    assert not ok and witness is None


def test_disjointify_hand_trace():
    # tiles {0,1,2} and {2,3,4}: the later tile owns 2 via the radial rule
    T = line_tiling([((0, 1, 2), (0,)), ((0, 1, 2), (2,))])
    D = disjointify(T)
    cells = sorted(frozenset(D.tile_cells(i, c)) for i, c in D.tiles())
    assert cells == [frozenset({(0,), (1,)}),
                     frozenset({(2,), (3,), (4,)})]


def test_disjointify_properties_random():
    rng = rng_for(11, "disj")
    for t in range(25):
        T = random_eta_disjoint(Window.box("z1", 256),
                                TilingParams(eta=0.1, K=3), 8, rng)
        D = disjointify(T)
        assert is_disjoint(D)
        assert D.union_cells() == T.union_cells()
        inputs = {c: T.tile_cells(i, c) for i, c in T.tiles()}
        for i, c in D.tiles():
            kept = D.tile_cells(i, c)
            full = inputs[c]
            assert kept <= full
            assert len(kept) >= (1 - 0.1) * len(full)
        again = disjointify(D)
        assert sorted(map(sorted, again.shapes)) == sorted(map(sorted, D.shapes))


def test_construction_covers_1d():
    T = construct_quasitiling(Window.box("z1", 2 ** 12),
                              TilingParams(eta=0.1, K=3, seed=0))
    assert is_disjoint(T)
    assert len(T.union_cells()) / 2 ** 12 >= 0.9


def test_construction_covers_2d():
    T = construct_quasitiling(Window.box("z2", 64),
                              TilingParams(eta=0.1, K=3, seed=0))
    assert is_disjoint(T)
    assert covering_density(T, 4) >= 0.88


def test_consolidate_preserves_tiles():
    T = construct_quasitiling(Window.box("z1", 512),
                              TilingParams(eta=0.25, K=3, seed=1))
    C = consolidate_shapes(T)
    assert C.n_tiles() == T.n_tiles()
    assert C.union_cells() == T.union_cells()
    assert len(C.shapes) < len(T.shapes)


def test_symbolic_roundtrip():
    T = consolidate_shapes(construct_quasitiling(
        Window.box("z1", 256), TilingParams(eta=0.25, K=3, seed=2)))
    B = symbolic_encode(T)
    back = symbolic_decode(B, T.shapes, T.folner_indices, T.window)
    assert sorted(back.tiles()) == sorted(T.tiles())


def test_tiling_json_roundtrip():
    T = construct_quasitiling(Window.box("z1", 128),
                              TilingParams(eta=0.25, K=3, seed=3))
    back = Quasitiling.from_json(json.loads(json.dumps(T.to_json())))
    assert sorted(back.tiles()) == sorted(T.tiles())


def test_duplicate_centers_rejected():
    with pytest.raises(ValueError):
        line_tiling([((0, 1), (0,)), ((0, 1, 2), (0,))])
