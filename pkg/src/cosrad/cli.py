"""Command-line entry point: ``cosrad <subcommand> [--config FILE] [overrides]``."""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import os
import platform
import sys
import time
from dataclasses import fields
from pathlib import Path

import numpy as np

from . import __version__
from . import cospectral, exponents, growth, percolation, twothree
from .config import SUBCOMMANDS, RunConfig, parse_grid, parse_overrides, read_config
from .errors import ConfigError, CosradError, TruncationError
from .graphs import GroupFamily, SubgroupOracle, build_ball, build_schreier, read_graph, write_graph
from .rng import generator
from .walks import WalkKernel, evolve, sample_walks


def _json_default(x):
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating,)):
        return float(x)
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, exponents.Interval):
        return x.to_list()
    if hasattr(x, "to_dict"):
        return x.to_dict()
    raise TypeError(f"cannot serialize {type(x).__name__}")


def _clean(x):
    """Replace non-finite floats by strings so the JSON stays standard."""
    if isinstance(x, float) and not math.isfinite(x):
        return "inf" if x > 0 else ("-inf" if x < 0 else "nan")
    if isinstance(x, dict):
        return {k: _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    return x


def dump_json(obj, path: Path) -> None:
    text = json.dumps(_clean(json.loads(json.dumps(obj, default=_json_default))),
                      indent=2, sort_keys=True, allow_nan=False)
    path.write_text(text + "\n", encoding="utf-8")


def _csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow(["" if v is None else (repr(float(v)) if isinstance(v, (float, np.floating)) else v)
                        for v in row])


# -- helpers --------------------------------------------------------------------------

def _family(cfg: RunConfig) -> GroupFamily:
    try:
        return GroupFamily.parse(cfg.family)
    except ValueError as exc:
        raise ConfigError(str(exc), "[run] family") from None


def _kernel(cfg: RunConfig, family: GroupFamily) -> WalkKernel:
    if not cfg.weights.strip():
        return WalkKernel.simple(family, cfg.hold)
    steps = {}
    for item in cfg.weights.split(","):
        if "=" not in item:
            raise ConfigError(f"weights entries look like letter=weight, got {item!r}", "[run] weights")
        letter, w = item.split("=", 1)
        steps[letter.strip()] = float(w)
    try:
        return WalkKernel.from_steps(family, steps, cfg.hold)
    except ValueError as exc:
        raise ConfigError(str(exc), "[run] weights") from None


def _subgroup(cfg: RunConfig, family: GroupFamily) -> SubgroupOracle:
    try:
        return SubgroupOracle.parse(family, cfg.subgroup)
    except ValueError as exc:
        raise ConfigError(str(exc), "[run] subgroup") from None


def _estimate_rows(instance, est):
    for n, a, root, ratio in est.rows():
        yield instance, n, a, root, ratio


EST_HEADER = ["instance", "n", "p_2n", "root_est", "ratio_est"]


# -- subcommands ----------------------------------------------------------------------

def plan(cfg: RunConfig) -> dict:
    outs = {
        "gen-graph": ["graph.txt", "summary.json"],
        "walk": ["distribution.csv", "summary.json"],
        "percolate": ["edges.csv", "cluster_sizes.csv", "summary.json"],
        "cospectral": ["sequence.csv", "summary.json"],
        "two-three": ["report.json"],
        "walk-growth": ["walk_counts.csv", "summary.json"],
        "scan-exponents": ["scan.csv", "summary.json", "scan.svg"],
    }[cfg.subcommand]
    return {"subcommand": cfg.subcommand, "config_sha256": cfg.digest(),
            "outputs": [str(Path(cfg.out) / o) for o in outs + ["MANIFEST"]],
            "config": {f.name: getattr(cfg, f.name) for f in fields(cfg)}}


def run_gen_graph(cfg, out):
    fam = _family(cfg)
    g = build_schreier(fam, _subgroup(cfg, fam), cfg.R, cfg.max_vertices)
    write_graph(g, out / "graph.txt")
    dump_json({"family": g.family, "radius": g.radius, "vertex_count": g.vertex_count,
               "edge_count": g.edge_count, "closed": g.closed}, out / "summary.json")


def run_walk(cfg, out):
    fam = _family(cfg)
    k = _kernel(cfg, fam)
    g = build_schreier(fam, _subgroup(cfg, fam), cfg.R, cfg.max_vertices)
    start = g.find(fam.parse_word(cfg.start)) if cfg.start else 0
    if start < 0:
        raise ConfigError("start word leaves the ball", "[run] start")
    if cfg.method == "monte-carlo":
        batch = sample_walks(g, k, start, cfg.steps, cfg.samples, cfg.seed, cfg.workers)
        counts = np.bincount(batch.endpoints[batch.valid], minlength=g.vertex_count)
        probs = counts / max(len(batch.endpoints), 1)
        summary = {"method": "monte-carlo", "samples": cfg.samples, "invalid_fraction": batch.invalid_fraction}
    else:
        dist = evolve(g, k, start, cfg.steps)
        if cfg.strict and not dist.exact:
            raise TruncationError("walk reaches the truncation boundary; raise R or unset strict")
        probs = dist.probs
        summary = {"method": "exact", "exact": dist.exact, "total": dist.total()}
    idx = np.flatnonzero(probs)
    _csv(out / "distribution.csv", ["vertex", "word", "probability"],
         ((int(v), fam.format_word(g.word(int(v))), float(probs[v])) for v in idx))
    summary.update({"family": g.family, "steps": cfg.steps, "start": int(start), "support": int(len(idx))})
    dump_json(summary, out / "summary.json")


def run_percolate(cfg, out):
    fam = _family(cfg)
    g = build_ball(fam, cfg.R, cfg.max_vertices)
    s = percolation.percolate(g, percolation.EdgeCoupling(cfg.seed), cfg.p)
    s.write_edges(out / "edges.csv")
    s.write_histogram(out / "cluster_sizes.csv")
    c = percolation.cluster_of_root(s)
    dump_json({"family": fam.name, "radius": cfg.R, "p": cfg.p, "seed": cfg.seed,
               "edges": g.edge_count, "open_edges": s.open_count, "root_cluster_size": c.size,
               "approximate": c.approximate, "clusters": int(s.cluster_id.max()) + 1}, out / "summary.json")


def run_cospectral(cfg, out):
    fam = _family(cfg)
    k = _kernel(cfg, fam)
    summary = {"family": fam.name, "mode": cfg.mode, "n_max": cfg.n_max}
    if cfg.mode == "annealed":
        est = cospectral.annealed_exponent(fam, k, cfg.p, cfg.n_max, cfg.samples, cfg.seed,
                                           R=cfg.R, workers=cfg.workers, method=cfg.method)
        instance = f"cluster(p={cfg.p})"
        summary.update({"p": cfg.p, "samples": cfg.samples, "seed": cfg.seed})
    else:
        H = _subgroup(cfg, fam)
        target_radius = None
        if cfg.target == "coset":
            g = build_schreier(fam, H, cfg.R, cfg.max_vertices)
            target, target_radius = [0], 0
        else:
            g = build_ball(fam, cfg.R, cfg.max_vertices)
            if cfg.target == "identity":
                target, target_radius = [0], 0
            elif cfg.target == "all":
                target = None
            elif cfg.target == "subgroup":
                target = cospectral.subgroup_mask(g, fam, H)
            elif cfg.target == "cluster":
                if cfg.seed is None:
                    raise ConfigError("cluster targets need a seed", "[run] seed")
                s = percolation.percolate(g, percolation.EdgeCoupling(cfg.seed), cfg.p)
                target = percolation.cluster_of_root(s)
            else:
                raise ConfigError(f"unknown target {cfg.target!r}", "[run] target")
        est = cospectral.quenched_exponent(g, k, target, cfg.n_max, target_radius=target_radius,
                                           strict=cfg.strict)
        instance = cfg.target if cfg.target != "subgroup" else H.label(fam)
        summary.update({"target": instance, "radius": cfg.R, "graph": g.family})
        if cfg.spectral:
            sr = cospectral.schreier_spectral_radius(build_schreier(fam, H, cfg.R, cfg.max_vertices), k)
            summary["schreier_spectral_radius"] = sr.to_dict()
    _csv(out / "sequence.csv", EST_HEADER, _estimate_rows(instance, est))
    summary["estimate"] = {key: v for key, v in est.to_dict().items()
                           if key not in ("n", "sequence", "root_seq", "ratio_seq", "accel_seq")}
    dump_json(summary, out / "summary.json")


def run_two_three(cfg, out):
    if cfg.relation == "demo":
        rel, P = twothree.demo_instance()
    elif cfg.relation.startswith("random:"):
        n = int(cfg.relation.split(":", 1)[1])
        if cfg.seed is None:
            raise ConfigError("random relations need a seed", "[run] seed")
        rel, P = twothree.random_instance(generator(cfg.seed, "relation"), n)
    else:
        raise ConfigError("relation must be 'demo' or 'random:N'", "[run] relation")
    ks = twothree.build_kernels_from_walk(rel, P, cfg.k_max, cfg.kernel_mode)
    rep = twothree.full_report(rel, ks)
    dump_json({"relation": cfg.relation, "points": rel.size, "kernel_mode": cfg.kernel_mode,
               "k_max": cfg.k_max, **rep.to_dict()}, out / "report.json")
    if cfg.strict and not rep.ok:
        raise CosradError("two-three checks failed")


def run_walk_growth(cfg, out):
    if cfg.graph:
        g = read_graph(cfg.graph)
    else:
        fam = _family(cfg)
        g = build_schreier(fam, _subgroup(cfg, fam), cfg.R, cfg.max_vertices)
    seq = growth.count_walks(g, cfg.n_max)
    est = growth.walk_growth_rate(seq)
    seq.to_csv(out / "walk_counts.csv", est)
    summary = {"graph": g.family, "n_max": cfg.n_max, "exact": seq.exact,
               "log_growth": est.value, "root_est": est.root}
    if g.closed:
        norm = growth.finite_urg_operator_norm(g)
        summary["operator_norm"] = norm
        summary["log_operator_norm"] = math.log(norm) if norm > 0 else -math.inf
    dump_json(summary, out / "summary.json")


def run_scan(cfg, out):
    from .plotting import plot_scan

    fam = _family(cfg)
    k = _kernel(cfg, fam)
    grid = parse_grid(cfg.p_grid)
    s = exponents.scan(fam, k, grid, cfg.n_max, cfg.samples, cfg.seed, R=cfg.R if cfg.method == "ball" else None,
                       workers=cfg.workers, method=cfg.method)
    _csv(out / "scan.csv", ["p", "n", "p_2n", "root_est", "ratio_est"], s.rows())
    summary = s.summary()
    summary.update({"n_max": cfg.n_max, "samples": cfg.samples, "seed": cfg.seed})
    if cfg.refine_steps:
        bracket = s.p_ram_hat if cfg.refine_target == "ram" else s.p_ca_hat
        r = exponents.refine(fam, k, bracket, cfg.refine_target, cfg.refine_steps, cfg.n_max,
                             cfg.samples, cfg.seed, workers=cfg.workers, method=cfg.method)
        summary["refined"] = {"target": r["target"], "interval": r["interval"].to_list(),
                              "history": r["history"]}
    p_exp = 1.0 if fam.is_tree else None
    known = {"p_u": (1.0, "trees have no unique infinite cluster below p = 1")} if fam.is_tree else {}
    if fam.is_tree:
        known["p_c"] = (1.0 / (fam.degree - 1), "branching number of the regular tree")
    summary["inequalities"] = exponents.inequality_report(s, p_exp=p_exp, known=known)
    dump_json(summary, out / "summary.json")
    plot_scan(s, out / "scan.svg")


RUNNERS = {
    "gen-graph": run_gen_graph,
    "walk": run_walk,
    "percolate": run_percolate,
    "cospectral": run_cospectral,
    "two-three": run_two_three,
    "walk-growth": run_walk_growth,
    "scan-exponents": run_scan,
}


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def write_manifest(cfg: RunConfig, out: Path, runtime: float, artifacts) -> None:
    import matplotlib
    import scipy

    lines = [
        f"config_sha256={cfg.digest()}",
        f"subcommand={cfg.subcommand}",
        f"cosrad={__version__}",
        f"python={platform.python_version()}",
        f"numpy={np.__version__}",
        f"scipy={scipy.__version__}",
        f"matplotlib={matplotlib.__version__}",
        f"runtime_seconds={runtime:.3f}",
    ]
    lines += [f"artifact.{p.name}={_sha256(p)}" for p in sorted(artifacts)]
    (out / "MANIFEST").write_text("\n".join(lines) + "\n", encoding="utf-8")
    (out / "config.ini").write_text(cfg.to_ini(include_out=False), encoding="utf-8")


def run(cfg: RunConfig) -> int:
    cfg.validate()
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    before = set(out.iterdir())
    t0 = time.perf_counter()
    RUNNERS[cfg.subcommand](cfg, out)
    runtime = time.perf_counter() - t0
    made = [p for p in out.iterdir() if p.is_file() and (p not in before or p.name != "MANIFEST")
            and p.name not in ("MANIFEST", "config.ini")]
    write_manifest(cfg, out, runtime, made)
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="cosrad", description=__doc__)
    ap.add_argument("--version", action="version", version=f"cosrad {__version__}")
    sub = ap.add_subparsers(dest="subcommand", required=True)
    for name in SUBCOMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="INI file with a [run] section")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--out")
        sp.add_argument("--workers", type=int)
        sp.add_argument("--strict", action="store_true", default=None)
        sp.add_argument("--dry-run", action="store_true")
        sp.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override any config key")
    return ap


def _config_from_args(args) -> RunConfig:
    if args.config:
        if not os.path.exists(args.config):
            raise ConfigError("config file not found", args.config)
        cfg = read_config(args.config)
    else:
        cfg = RunConfig()
    items = [f"subcommand={args.subcommand}"]
    for flag in ("seed", "out", "workers", "strict"):
        v = getattr(args, flag)
        if v is not None:
            items.append(f"{flag}={v}")
    for item in args.set:
        if "=" not in item:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}", "--set")
        items.append(item)
    for key, value in parse_overrides(items).items():
        setattr(cfg, key, value)
    return cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _config_from_args(args).validate()
        if args.dry_run:
            print(json.dumps(plan(cfg), indent=2, sort_keys=True, default=str))
            return 0
        return run(cfg)
    except CosradError as exc:
        payload = {"error": type(exc).__name__, "message": str(exc), "status": exc.exit_status}
        if getattr(exc, "location", None):
            payload["location"] = exc.location
        print(json.dumps(payload, sort_keys=True), file=sys.stderr)
        return exc.exit_status
    except (ValueError, OSError) as exc:
        payload = {"error": type(exc).__name__, "message": str(exc), "status": 1}
        print(json.dumps(payload, sort_keys=True), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
