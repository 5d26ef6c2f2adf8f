"""Experiment driver.

Loads JSON configs, runs seeded pipelines end to end, and emits
deterministic CSV/JSON reports carrying the config hash and the per-stage
seed provenance.  Exit codes: 0 pass, 1 usage error, 2 verification
failure.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import __version__
from .blocks import (Block, EmpiricalMeasure, MetricParams, canonical_domain,
                     empirical_measure, metric_measure_block, model_measure)
from .codec import (CodecParams, Dictionary, build_dictionary, decode, encode,
                    entropy_deficit_bound, psi_transform, vkl_check)
from .entropy import (JointEmpirical, Partition, conditional_entropy,
                      process_entropy_estimate, product_symbol, smb_check,
                      x_partition, y_partition)
from .groups import Window, get_group
from .markers import MarkerSet, construct_markers, find_marker_occurrences, \
    verify_marker_uniqueness
from .perturb import NoiseParams, dbar_estimate, perturb_array, \
    verify_perturbation_bounds
from .quasitiling import (Quasitiling, TilingParams, construct_quasitiling,
                          consolidate_shapes, covering_density, disjointify,
                          is_disjoint, random_eta_disjoint)
from .sampling import law_of_markov, law_of_product, rng_for, sample_markov, \
    sample_product


@dataclass(frozen=True)
class ExperimentConfig:
    """Complete, serializable description of one pipeline run."""

    group_id: str
    window: int
    seed: int
    source_x: dict
    source_y: dict
    delta_m: float
    codec: CodecParams
    tiling_eta: float
    tiling_k: int
    n_max: int
    n_cond: int = 8
    out_dir: str = "reports"

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        codec = CodecParams(group_id=d["group"], **d["codec"])
        return cls(
            group_id=d["group"],
            window=int(d["window"]),
            seed=int(d["seed"]),
            source_x=dict(d["source_x"]),
            source_y=dict(d["source_y"]),
            delta_m=float(d["delta_m"]),
            codec=codec,
            tiling_eta=float(d["tiling"]["eta"]),
            tiling_k=int(d["tiling"]["K"]),
            n_max=int(d.get("n_max", 3)),
            n_cond=int(d.get("n_cond", 8)),
            out_dir=d.get("out_dir", "reports"),
        )

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self) -> dict:
        c = self.codec
        return {
            "group": self.group_id,
            "window": self.window,
            "seed": self.seed,
            "source_x": self.source_x,
            "source_y": self.source_y,
            "delta_m": self.delta_m,
            "codec": {
                "delta": c.delta, "eta": c.eta, "s": c.s, "l": c.l,
                "k": c.k, "eps_k": c.eps_k, "d_gap": c.d_gap,
                "j_max": c.j_max, "n0": c.n0, "eps": c.eps,
            },
            "tiling": {"eta": self.tiling_eta, "K": self.tiling_k},
            "n_max": self.n_max,
            "n_cond": self.n_cond,
            "out_dir": self.out_dir,
        }

    def canonical_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    def config_hash(self) -> str:
        return hashlib.sha256(self.canonical_json().encode()).hexdigest()


def sample_source(spec: dict, window: int, rng: np.random.Generator) -> np.ndarray:
    if spec["kind"] == "bernoulli":
        return sample_product((window,), spec["probs"], rng)
    if spec["kind"] == "markov":
        return sample_markov(window, spec["initial"], spec["rows"], rng)
    raise ValueError(f"unknown source kind {spec['kind']!r}")


def source_law(spec: dict):
    if spec["kind"] == "bernoulli":
        return law_of_product(spec["probs"])
    return law_of_markov(spec["initial"], spec["rows"])


def source_entropy(spec: dict) -> float:
    """Exact per-site entropy of the source model."""
    if spec["kind"] == "bernoulli":
        return -sum(p * math.log2(p) for p in spec["probs"] if p > 0)
    rows = np.asarray(spec["rows"], dtype=float)
    init = np.asarray(spec["initial"], dtype=float)
    # stationary distribution of the chain
    w, v = np.linalg.eig(rows.T)
    pi = np.real(v[:, np.argmin(np.abs(w - 1))])
    pi = pi / pi.sum()
    h = 0.0
    for i, row in enumerate(rows):
        h -= pi[i] * sum(p * math.log2(p) for p in row if p > 0)
    return h


def build_codec_dictionaries(x: np.ndarray, y: np.ndarray, T: Quasitiling,
                             M: MarkerSet, s: int
                             ) -> Tuple[Dict[int, Dictionary], Dict[str, int]]:
    """Per-shape dictionaries from the blocks observed on the tiles.

    Each observed Y-block is related to the Psi image of the X-block seen
    on the same tile; collisions of Psi images are pruned in canonical
    order, leaving those Y-blocks on the default image.
    """
    dicts: Dict[int, Dictionary] = {}
    stats = {"pruned_y_blocks": 0, "skipped_shapes": 0, "skipped_cells": 0}
    d_max = max(c[0] for c in M.D)
    for i, shape in enumerate(T.shapes):
        if not T.centers[i]:
            continue
        dom = canonical_domain(shape)
        if d_max >= len(dom) or any(c not in set(dom) for c in M.D):
            stats["skipped_shapes"] += 1
            stats["skipped_cells"] += len(dom) * len(T.centers[i])
            continue
        edges: Dict[tuple, set] = {}
        for c in T.centers[i]:
            cells = canonical_domain(T.group.mul(f, c) for f in shape)
            bkey = tuple(int(y[g[0]]) for g in cells)
            akey = tuple(int(x[g[0]]) for g in cells)
            img = psi_transform(Block(dom, akey, s), dom, M, i + 1)
            edges.setdefault(bkey, set()).add(img.symbols)
        taken: Dict[tuple, tuple] = {}
        for b in sorted(edges):
            for a in sorted(edges[b]):
                if a not in taken:
                    taken[a] = b
                    break
        mp = {b: a for a, b in taken.items()}
        stats["pruned_y_blocks"] += len(edges) - len(mp)
        d = build_dictionary(dom, sorted(mp), sorted(set(mp.values())),
                             lambda bb, aa, mp=mp: mp.get(bb) == aa, 1)
        d.validate(M)
        dicts[i] = d
    return dicts, stats


def run_pipeline(cfg: ExperimentConfig) -> dict:
    """Sample, tile, mark, code, and measure; returns the report dict."""
    if cfg.group_id != "z1":
        raise ValueError("the pipeline driver runs on z1 windows")
    s, l = cfg.codec.s, cfg.codec.l
    report: dict = {
        "provenance": {
            "config_hash": cfg.config_hash(),
            "seed": cfg.seed,
            "versions": {"tilecodes": __version__,
                         "numpy": np.__version__},
        }
    }
    stage = "sample"
    try:
        x = sample_source(cfg.source_x, cfg.window, rng_for(cfg.seed, "x"))
        y = sample_source(cfg.source_y, cfg.window, rng_for(cfg.seed, "y"))
        if len(cfg.source_x.get("probs", [0] * s)) != s:
            raise ValueError("X source alphabet does not match codec s")

        stage = "tile"
        tp = TilingParams(eta=cfg.tiling_eta, K=cfg.tiling_k,
                          seed=int(rng_for(cfg.seed, "tile").integers(2 ** 31)))
        T = consolidate_shapes(construct_quasitiling(
            Window.box("z1", cfg.window), tp))
        covered = len(T.union_cells()) / cfg.window
        report["tile"] = {"n_shapes": len(T.shapes), "n_tiles": T.n_tiles(),
                          "covered_fraction": covered}

        stage = "markers"
        M = construct_markers(len(T.shapes), cfg.delta_m, s, "z1")
        report["markers"] = {"D_size": len(M.D), "N": M.N,
                             "delta_M": cfg.delta_m}

        stage = "dictionaries"
        dicts, dstats = build_codec_dictionaries(x, y, T, M, s)
        report["dictionaries"] = dict(dstats,
                                      sizes={i: len(d.map)
                                             for i, d in dicts.items()})

        stage = "encode"
        Tenc = Quasitiling(T.group_id, T.window,
                           [T.shapes[i] for i in sorted(dicts)],
                           [T.folner_indices[i] for i in sorted(dicts)],
                           [T.centers[i] for i in sorted(dicts)])
        dicts_enc = {j: dicts[i] for j, i in enumerate(sorted(dicts))}
        xbar = encode(x, y, Tenc, dicts_enc)

        stage = "decode"
        ybar, dec = decode(xbar, M, {i: d for i, d in dicts.items()})
        wrong = int(((ybar > 0) & (ybar != y)).sum())
        unrecovered = float((ybar == 0).mean())
        report["decode"] = {
            "n_occurrences": dec.n_occurrences,
            "n_decoded_tiles": dec.n_decoded_tiles,
            "recovered_fraction": dec.recovered_fraction,
            "unrecovered_fraction": unrecovered,
            "wrong_cells": wrong,
            "loss_bound": 2 * cfg.codec.eta + 2 * cfg.codec.delta + 0.03,
        }

        stage = "entropy"
        # conditional entropies need a window deep enough to expose the
        # tile structure; shallow depths overstate them badly
        mp = MetricParams(n_max=max(cfg.n_max, cfg.n_cond))
        z = product_symbol(xbar, y, l)
        joint = JointEmpirical(
            empirical_measure(z, "z1", mp, alphabet=s * l), s, l)
        P = x_partition(s, l)
        Q = y_partition(s, l)
        h_p_given_q = conditional_entropy(joint, P, Q, cfg.n_cond)
        h_q_given_p = conditional_entropy(joint, Q, P, cfg.n_cond)
        h_xbar = process_entropy_estimate(joint.marginal("x"),
                                          Partition(tuple(range(s))),
                                          cfg.n_max)
        h_nu = source_entropy(cfg.source_y)
        bound = entropy_deficit_bound(h_nu, cfg.codec.delta, cfg.codec.eta, l)
        slack = 2 * cfg.codec.delta + 2 * cfg.codec.eta
        report["entropy"] = {
            "H_P_given_Q": h_p_given_q,
            "H_P_given_Q_bound": slack * math.log2(s) + 0.05,
            "H_Q_given_P": h_q_given_p,
            "H_Q_given_P_bound": slack * math.log2(l) + 0.05,
            "h_xbar": h_xbar,
            "h_nu": h_nu,
            "deficit_bound": bound,
            "vkl": bool(vkl_check(joint, cfg.codec.k, l, cfg.n_cond)),
        }

        stage = "assertions"
        checks = {
            "dictionaries_injective": True,  # validated at construction
            "decode_exact_on_tiles": wrong == 0,
            "loss_within_bound": unrecovered
            <= report["decode"]["loss_bound"],
            "H_P_given_Q_ok": h_p_given_q
            <= report["entropy"]["H_P_given_Q_bound"],
            "H_Q_given_P_ok": h_q_given_p
            <= report["entropy"]["H_Q_given_P_bound"],
            "h_xbar_ok": h_xbar >= bound - 0.05,
        }
        report["checks"] = checks
        report["passed"] = all(checks.values())
    except Exception as exc:
        raise RuntimeError(f"pipeline failed at stage {stage!r}: {exc}") from exc
    return report


def _fmt(v) -> str:
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_reports(report: dict, out_dir, stem: str) -> List[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    jpath = out / f"{stem}.json"
    with open(jpath, "w") as fh:
        json.dump(report, fh, sort_keys=True, indent=2, default=_fmt)
        fh.write("\n")
    cpath = out / f"{stem}.csv"
    with open(cpath, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["section", "metric", "value"])
        for section in sorted(report):
            val = report[section]
            if isinstance(val, dict):
                for k in sorted(val):
                    w.writerow([section, k, _fmt(val[k])
                                if not isinstance(val[k], dict)
                                else json.dumps(val[k], sort_keys=True)])
            else:
                w.writerow(["", section, _fmt(val)])
    return [jpath, cpath]


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(1)


def _cmd_folner(args) -> int:
    group = get_group(args.group)
    rows = []
    for n in range(args.n + 1):
        f = group.folner(n)
        rows.append((n, len(f)))
    out = Path(args.out or ".") / f"folner_{args.group}.csv"
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["n", "size"])
        w.writerows(rows)
    print(f"wrote {out}")
    return 0


def _cmd_tile(args) -> int:
    tp = TilingParams(eta=args.eta, K=args.K, seed=args.seed)
    T = construct_quasitiling(Window.box(args.group, args.window), tp)
    out = Path(args.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    jpath = out / "tiling.json"
    with open(jpath, "w") as fh:
        json.dump(T.to_json(), fh, sort_keys=True, indent=2)
        fh.write("\n")
    dens = covering_density(T, args.n)
    with open(out / "density.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["eta", "K", "seed", "n", "covering_density"])
        w.writerow([args.eta, args.K, args.seed, args.n, repr(dens)])
    print(f"covering_density={dens}")
    return 0


def _cmd_markers(args) -> int:
    M = construct_markers(args.n_shapes, args.delta_m, args.s, args.group)
    out = Path(args.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "markers.json", "w") as fh:
        json.dump(M.to_json(), fh, sort_keys=True, indent=2)
        fh.write("\n")
    print(f"|D|={len(M.D)} N={M.N}")
    return 0


def _cmd_entropy(args) -> int:
    rng = rng_for(args.seed, "entropy")
    xs = sample_product((args.window,), args.probs, rng)
    mp = MetricParams(n_max=args.n)
    m = empirical_measure(xs, "z1", mp, alphabet=len(args.probs))
    ident = Partition(tuple(range(len(args.probs))))
    h = process_entropy_estimate(m, ident, args.n)
    print(f"h_hat={h}")
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "entropy.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["n", "h_hat"])
            w.writerow([args.n, repr(h)])
    return 0


def _cmd_code(args) -> int:
    cfg = ExperimentConfig.load(args.config)
    report = run_pipeline(cfg)
    write_reports(report, args.out or cfg.out_dir, "code_report")
    print("passed" if report["passed"] else "FAILED")
    return 0 if report["passed"] else 2


def _cmd_perturb(args) -> int:
    rng = rng_for(args.seed, "src")
    xs = sample_product((args.window,), args.probs, rng)
    ys = sample_product((args.window,), [0.5, 0.5], rng_for(args.seed, "ysrc"))
    s = len(args.probs)
    p = NoiseParams(eps=args.eps, s=s, seed=args.seed)
    x2 = perturb_array(xs, p)
    mp = MetricParams(n_max=args.n)
    z1 = product_symbol(xs, ys, 2)
    z2 = product_symbol(x2, ys, 2)
    before = JointEmpirical(empirical_measure(z1, "z1", mp, alphabet=2 * s), s, 2)
    after = JointEmpirical(empirical_measure(z2, "z1", mp, alphabet=2 * s), s, 2)
    rep = verify_perturbation_bounds(before, after, p, args.n, mp)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "perturb.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["eps", "distance", "distance_bound", "h_before",
                        "h_after", "gain_bound", "y_drift"])
            w.writerow([rep.eps, repr(rep.distance), repr(rep.distance_bound),
                        repr(rep.h_before), repr(rep.h_after),
                        repr(rep.gain_bound), repr(rep.y_drift)])
    print(f"distance={rep.distance} ok={rep.all_ok}")
    return 0 if rep.all_ok else 2


def _cmd_dbar(args) -> int:
    rng = rng_for(args.seed, "dbar")
    xa = (rng.random(args.window) < args.p).astype(np.int64) + 1
    xb = (rng.random(args.window) < args.q).astype(np.int64) + 1
    mp = MetricParams(n_max=args.n)
    m1 = empirical_measure(xa, "z1", mp, alphabet=2)
    m2 = empirical_measure(xb, "z1", mp, alphabet=2)
    v = dbar_estimate(m1, m2, args.n)
    print(f"dbar={v}")
    return 0


def _cmd_verify(args) -> int:
    failures = []
    rng = rng_for(args.seed, "verify")
    # disjointification invariants on random eta-disjoint tilings
    for t in range(5):
        T = random_eta_disjoint(Window.box("z1", 512),
                                TilingParams(eta=0.1, K=3), 12, rng)
        D = disjointify(T)
        if not is_disjoint(D):
            failures.append(f"disjointify output not disjoint (trial {t})")
        if len(D.union_cells()) != len(T.union_cells()):
            failures.append(f"disjointify changed the union (trial {t})")
    # marker uniqueness on premise-satisfying configurations
    M = construct_markers(2, 0.04, 3, "z1")
    region = canonical_domain(set(M.D) | set(M.guard_region()))
    gen = rng_for(args.seed, "verify-markers")
    for t in range(200):
        vals = {c: int(gen.integers(2, 4)) for c in region}
        for c, v in M.block(1).mapping().items():
            vals[c] = v
        C = Block(region, tuple(vals[c] for c in region), 3)
        verdict = verify_marker_uniqueness(C, M, M.group.identity)
        if verdict.status != "holds":
            failures.append(f"marker uniqueness failed at trial {t}")
            break
    # dictionary injectivity round trip
    d = build_dictionary(((0,), (1,)), [(1, 1), (1, 2)],
                         [(2, 1), (2, 2), (2, 3)],
                         lambda b, a: (b, a) in {((1, 1), (2, 1)),
                                                 ((1, 1), (2, 2)),
                                                 ((1, 2), (2, 2)),
                                                 ((1, 2), (2, 3))}, 2)
    rt = Dictionary.from_json(d.to_json())
    if rt.map != d.map:
        failures.append("dictionary serialization round trip")
    for f in failures:
        print(f"FAIL: {f}")
    print(f"{'ok' if not failures else 'FAILED'} "
          f"({3 - bool(failures)}/3 groups)")
    return 0 if not failures else 2


def build_parser() -> _Parser:
    p = _Parser(prog="tilecodes",
                description="desk-scale verification experiments")
    sub = p.add_subparsers(dest="command", required=True)

    f = sub.add_parser("folner", help="Folner set sizes")
    f.add_argument("--group", default="z1")
    f.add_argument("--n", type=int, default=10)
    f.add_argument("--out")
    f.set_defaults(func=_cmd_folner)

    t = sub.add_parser("tile", help="construct a quasitiling")
    t.add_argument("--group", default="z1")
    t.add_argument("--window", type=int, required=True)
    t.add_argument("--eta", type=float, default=0.1)
    t.add_argument("--K", type=int, default=3)
    t.add_argument("--n", type=int, default=4)
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--out")
    t.set_defaults(func=_cmd_tile)

    m = sub.add_parser("markers", help="construct marker blocks")
    m.add_argument("--group", default="z1")
    m.add_argument("--n-shapes", type=int, default=2)
    m.add_argument("--delta-m", type=float, default=0.05)
    m.add_argument("--s", type=int, default=3)
    m.add_argument("--out")
    m.set_defaults(func=_cmd_markers)

    e = sub.add_parser("entropy", help="empirical process entropy")
    e.add_argument("--probs", type=float, nargs="+", required=True)
    e.add_argument("--window", type=int, default=2 ** 16)
    e.add_argument("--n", type=int, default=6)
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--out")
    e.set_defaults(func=_cmd_entropy)

    c = sub.add_parser("code", help="run the full codec pipeline")
    c.add_argument("--config", required=True)
    c.add_argument("--out")
    c.set_defaults(func=_cmd_code)

    pp = sub.add_parser("perturb", help="entropy-boosting perturbation")
    pp.add_argument("--probs", type=float, nargs="+", default=[0.9, 0.1])
    pp.add_argument("--eps", type=float, default=0.3)
    pp.add_argument("--window", type=int, default=2 ** 16)
    pp.add_argument("--n", type=int, default=3)
    pp.add_argument("--seed", type=int, default=0)
    pp.add_argument("--out")
    pp.set_defaults(func=_cmd_perturb)

    d = sub.add_parser("dbar", help="d-bar coupling estimate")
    d.add_argument("--p", type=float, required=True)
    d.add_argument("--q", type=float, required=True)
    d.add_argument("--n", type=int, default=4)
    d.add_argument("--window", type=int, default=10 ** 4)
    d.add_argument("--seed", type=int, default=0)
    d.set_defaults(func=_cmd_dbar)

    v = sub.add_parser("verify", help="run the exact invariant suite")
    v.add_argument("--suite", choices=["exact"], default="exact")
    v.add_argument("--seed", type=int, default=0)
    v.set_defaults(func=_cmd_verify)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, KeyError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except RuntimeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
