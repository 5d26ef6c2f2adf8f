"""End-to-end acceptance checks.

Each test prints a single "ACCEPTANCE n: PASS/FAIL" line (emitted with
capture disabled so it always appears) and then asserts the verdict.
"""

import math
import sys
import time
from fractions import Fraction

import numpy as np
import pytest

from tilecodes.blocks import (Block, MetricParams, canonical_domain,
                              empirical_measure, metric_measures,
                              model_measure, subset_frequency_bound_check)
from tilecodes.cli import ExperimentConfig, run_pipeline, write_reports
from tilecodes.codec import counting_bound_check
from tilecodes.entropy import (EmpiricalMeasure, JointEmpirical,
                               approx_inclusion_check, conditional_entropy,
                               delta_for_inclusion, smb_check, x_partition,
                               y_partition)
from tilecodes.groups import Window, get_group
from tilecodes.markers import construct_markers, verify_marker_uniqueness
from tilecodes.perturb import (NoiseParams, dbar_estimate, perturb_array,
                               verify_perturbation_bounds)
from tilecodes.quasitiling import (TilingParams, construct_quasitiling,
                                   covering_density, disjointify, is_disjoint,
                                   random_eta_disjoint)
from tilecodes.sampling import (law_of_product, rng_for, sample_markov,
                                sample_product)

CONFIG = "configs/zd1_bernoulli.cfg"


def verdict(capfd, num, ok, detail=""):
    line = f"ACCEPTANCE {num}: {'PASS' if ok else 'FAIL'}"
    if detail:
        line += f" ({detail})"
    with capfd.disabled():
        sys.stdout.write(line + "\n")
        sys.stdout.flush()
    assert ok, line


def test_acceptance_01_marker_uniqueness_exhaustive(capfd):
    t0 = time.time()
    per_combo = 84000
    total = holds = 0
    for gid in ("z1", "z2"):
        for s in (2, 3):
            for N in (1, 2, 4):
                M = construct_markers(N, 0.04, s, gid)
                g = M.group
                D = M.D
                guard = M.guard_region()
                DinvD = {g.mul(g.inv(a), b) for a in D for b in D}
                offs = set(D) | DinvD
                region = canonical_domain(
                    {g.mul(d, o) for d in D for o in offs}
                    | set(D) | set(guard))
                idx = {c: i for i, c in enumerate(region)}
                base = np.zeros(len(region), dtype=np.int64)
                mb = M.block(1)
                for c, sym in zip(mb.domain, mb.symbols):
                    base[idx[c]] = sym
                guard_idx = np.array([idx[c] for c in guard], dtype=np.int64)
                gset = set(int(i) for i in guard_idx)
                free_idx = np.array(
                    [i for c, i in idx.items()
                     if base[i] == 0 and i not in gset], dtype=np.int64)
                rng = rng_for(0, f"acc1-{gid}-{s}-{N}")
                gsym = rng.integers(2, s + 1,
                                    size=(per_combo, len(guard_idx)))
                fsym = rng.integers(1, s + 1, size=(per_combo, len(free_idx)))
                for t in range(per_combo):
                    sym = base.copy()
                    sym[guard_idx] = gsym[t]
                    sym[free_idx] = fsym[t]
                    C = Block(region, tuple(int(v) for v in sym), s)
                    total += 1
                    if verify_marker_uniqueness(C, M, g.identity).status \
                            == "holds":
                        holds += 1
    elapsed = time.time() - t0
    verdict(capfd, 1, total >= 10 ** 6 and holds == total and elapsed < 120,
            f"{holds}/{total} hold, {elapsed:.0f}s")


def test_acceptance_02_disjointification_exact(capfd):
    t0 = time.time()
    rng = rng_for(0, "acc2")
    w = Window.box("z1", 256)
    ok = True
    for t in range(1000):
        T = random_eta_disjoint(w, TilingParams(eta=0.1, K=3), 8, rng)
        D = disjointify(T)
        ok &= is_disjoint(D)
        ok &= D.union_cells() == T.union_cells()
        inputs = {c: T.tile_cells(i, c) for i, c in T.tiles()}
        for i, c in D.tiles():
            kept = D.tile_cells(i, c)
            ok &= kept <= inputs[c]
            ok &= len(kept) >= (1 - 0.1) * len(inputs[c])
        again = disjointify(D)
        ok &= sorted(again.tiles()) == sorted(D.tiles())
        ok &= {(i, c): again.tile_cells(i, c) for i, c in again.tiles()} == \
            {(i, c): D.tile_cells(i, c) for i, c in D.tiles()}
        if not ok:
            break
    elapsed = time.time() - t0
    verdict(capfd, 2, ok and elapsed < 60, f"1000 tilings, {elapsed:.0f}s")


def test_acceptance_03_quasitiling_covering(capfd):
    t0 = time.time()
    w = Window.box("z2", 256)
    worst = 1.0
    for seed in range(20):
        T = construct_quasitiling(w, TilingParams(eta=0.1, K=3, seed=seed))
        worst = min(worst, covering_density(T, 4))
    elapsed = time.time() - t0
    verdict(capfd, 3, worst >= 0.88 and elapsed < 300,
            f"min density {worst:.3f}, {elapsed:.0f}s")


def test_acceptance_04_frequency_convergence(capfd):
    t0 = time.time()
    mp = MetricParams(n_max=6)
    truth = model_measure(law_of_product([0.5, 0.5]), "z1", mp, 2)
    worst = 0.0
    for seed in range(20):
        x = sample_product((2 ** 16,), [0.5, 0.5], rng_for(seed, "acc4"))
        emp = empirical_measure(x, "z1", mp, 2)
        worst = max(worst, metric_measures(truth, emp, mp))
    elapsed = time.time() - t0
    verdict(capfd, 4, worst <= 0.05 and elapsed < 60,
            f"max distance {worst:.4f}, {elapsed:.0f}s")


def test_acceptance_05_subset_frequency(capfd):
    t0 = time.time()
    Z = get_group("z1")
    delta, eta = 0.1, 0.08
    assert eta < delta / (1 + 2 * delta)
    B = Block(((0,),), (1,), 2)
    rng = rng_for(0, "acc5")
    n_ok = n_tried = 0
    conclusion_all = True
    while n_ok < 1000 and n_tried < 5000:
        n_tried += 1
        cfg = (rng.random(400) < 0.5).astype(np.int64) + 1
        C = Block.from_array(cfg, 2)
        F = [(i,) for i in range(300)]
        keep = rng.random(300) > eta / 2
        Fp = [f for f, k in zip(F, keep) if k]
        rep = subset_frequency_bound_check(C, B, F, Fp, 0.5, delta, Z)
        if rep.status == "ok":
            n_ok += 1
            conclusion_all &= rep.conclusion_holds
            conclusion_all &= abs(rep.avg_subset - rep.mu_B) <= 2 * delta
    elapsed = time.time() - t0
    verdict(capfd, 5, n_ok == 1000 and conclusion_all and elapsed < 60,
            f"{n_ok} premise-satisfying trials, {elapsed:.0f}s")


def test_acceptance_06_smb_band(capfd):
    t0 = time.time()
    h = -(0.7 * math.log2(0.7) + 0.3 * math.log2(0.3))
    delta = 0.15
    x = sample_product((2 ** 18,), [0.7, 0.3], rng_for(0, "acc6"))
    m = empirical_measure(x, "z1", MetricParams(n_max=8), 2)
    r = smb_check(m, h, delta, 8)
    shifted = smb_check(m, h + 0.5, delta, 8)
    elapsed = time.time() - t0
    verdict(capfd, 6, r.mass >= 1 - delta and r.passed and not shifted.passed
            and elapsed < 120,
            f"band mass {r.mass:.3f} vs {1 - delta}, shifted mass "
            f"{shifted.mass:.3f}, {elapsed:.0f}s")


def test_acceptance_07_inclusion_from_entropy(capfd):
    t0 = time.time()
    rng = rng_for(0, "acc7")
    P, Q = x_partition(4, 4), y_partition(4, 4)
    n_premise = n_counter = 0
    for t in range(500):
        w = rng.random((4, 4))
        if t % 2 == 0:
            # near-diagonal tables so the entropy premise actually fires
            w = np.eye(4) + rng.random((4, 4)) * rng.random() * 0.1
        w = w / w.sum()
        table = {}
        for xi in range(4):
            for yi in range(4):
                if w[xi, yi] > 0:
                    table[(xi * 4 + yi + 1,)] = float(w[xi, yi])
        J = JointEmpirical(EmpiricalMeasure("z1", 16, {0: table}), 4, 4)
        for eps in (0.2, 0.3, 0.5):
            if conditional_entropy(J, P, Q, 0) < delta_for_inclusion(eps):
                n_premise += 1
                rep = approx_inclusion_check(J, P, Q, eps, 0, exhaustive=True)
                if not rep.passed:
                    n_counter += 1
    elapsed = time.time() - t0
    verdict(capfd, 7, n_premise > 0 and n_counter == 0 and elapsed < 60,
            f"{n_premise} premise cases, {n_counter} counterexamples, "
            f"{elapsed:.0f}s")


def test_acceptance_08_perturbation_bounds(capfd):
    t0 = time.time()
    W = 2 ** 16
    mp = MetricParams(n_max=3)
    ok = True
    for name in ("constant", "bernoulli", "markov"):
        for eps in (0.1, 0.3, 0.5):
            for seed in range(20):
                if name == "constant":
                    x = np.ones(W, dtype=np.int64)
                elif name == "bernoulli":
                    x = sample_product((W,), [0.9, 0.1],
                                       rng_for(seed, "acc8x"))
                else:
                    x = sample_markov(W, [0.5, 0.5],
                                      [[0.9, 0.1], [0.1, 0.9]],
                                      rng_for(seed, "acc8x"))
                y = sample_product((W,), [0.5, 0.5], rng_for(seed, "acc8y"))
                p = NoiseParams(eps, 2, seed)
                xa = perturb_array(x, p)
                Jb = JointEmpirical(
                    empirical_measure((x - 1) * 2 + y, "z1", mp, 4), 2, 2)
                Ja = JointEmpirical(
                    empirical_measure((xa - 1) * 2 + y, "z1", mp, 4), 2, 2)
                r = verify_perturbation_bounds(Jb, Ja, p, 3, mp)
                ok &= r.distance_ok and r.entropy_ok and r.y_marginal_ok
                if not ok:
                    break
    elapsed = time.time() - t0
    verdict(capfd, 8, ok and elapsed < 300, f"180 runs, {elapsed:.0f}s")


def test_acceptance_09_counting_inequality(capfd):
    t0 = time.time()
    rng = rng_for(0, "acc9")
    mismatches = 0
    for _ in range(10 ** 4):
        S = int(rng.integers(10, 400))
        D = int(rng.integers(1, S))
        j = int(rng.integers(0, min(S, 30) + 1))
        s = int(rng.integers(2, 6))
        # dyadic deltas are exact in binary floats, so the oracle and the
        # implementation reason about the same rational exponent
        delta = int(rng.integers(0, 65)) / 64
        r = counting_bound_check(S, D, j, s, delta)
        lhs = s ** D + sum(math.comb(S, i) * 2 ** i for i in range(1, j + 1))
        frac = Fraction(2 * delta) * S
        # lhs <= 2^(p/q)  iff  lhs^q <= 2^p, in exact integers
        expect = lhs ** frac.denominator <= 2 ** frac.numerator
        if bool(r.main) != expect or r.lhs != lhs:
            mismatches += 1
    elapsed = time.time() - t0
    verdict(capfd, 9, mismatches == 0 and elapsed < 60,
            f"10^4 tuples, {mismatches} mismatches, {elapsed:.0f}s")


def test_acceptance_10_codec_roundtrip(capfd):
    t0 = time.time()
    cfg = ExperimentConfig.load(CONFIG)
    report = run_pipeline(cfg)
    checks = report["checks"]
    dec = report["decode"]
    ent = report["entropy"]
    d, eta = cfg.codec.delta, cfg.tiling_eta
    ok = all(checks.values())
    ok &= dec["wrong_cells"] == 0
    ok &= dec["unrecovered_fraction"] <= 2 * eta + 2 * d + 0.03
    ok &= ent["H_Q_given_P"] <= (2 * d + 2 * eta) * math.log2(cfg.codec.l) \
        + 0.05
    ok &= ent["H_P_given_Q"] <= (2 * d + 2 * eta) * math.log2(cfg.codec.s) \
        + 0.05
    ok &= ent["h_xbar"] >= ent["h_nu"] \
        - (2 * d + 2 * eta) * math.log2(cfg.codec.l) - 0.05
    elapsed = time.time() - t0
    verdict(capfd, 10, ok and report["passed"] and elapsed < 600,
            f"unrecovered {dec['unrecovered_fraction']:.4f}, {elapsed:.0f}s")


def test_acceptance_11_dbar_estimator(capfd):
    t0 = time.time()
    mp = MetricParams(n_max=4)
    worst = 0.0
    for p, q in ((0.5, 0.6), (0.2, 0.7), (0.5, 0.5)):
        m1 = empirical_measure(
            sample_product((10 ** 4,), [p, 1 - p], rng_for(1, "acc11")),
            "z1", mp, 2)
        m2 = empirical_measure(
            sample_product((10 ** 4,), [q, 1 - q], rng_for(2, "acc11")),
            "z1", mp, 2)
        worst = max(worst, abs(dbar_estimate(m1, m2, 4) - abs(p - q)))
    elapsed = time.time() - t0
    verdict(capfd, 11, worst <= 0.02 and elapsed < 60,
            f"max deviation {worst:.4f}, {elapsed:.0f}s")


def test_acceptance_12_determinism(capfd, tmp_path):
    cfg = ExperimentConfig.load(CONFIG)
    a, b = run_pipeline(cfg), run_pipeline(cfg)
    write_reports(a, str(tmp_path), "a")
    write_reports(b, str(tmp_path), "b")
    same = (tmp_path / "a.json").read_bytes() == \
        (tmp_path / "b.json").read_bytes()
    same &= (tmp_path / "a.csv").read_bytes() == \
        (tmp_path / "b.csv").read_bytes()
    verdict(capfd, 12, same, "byte-identical reports")
