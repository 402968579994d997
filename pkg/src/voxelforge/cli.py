"""Command-line pipeline: evolve robots, simulate genomes, analyze champions.

Subcommands:
  evolve    --config F --seed N --out D [--jobs N]
  simulate  --genome F --rule {none|stress|pressure} --out D [--config F]
  analyze   --champions D --kind {diversity|robustness|canalization|compare}
            --out D [--samples N] [--seed N] [--resamples N]

The log level is controlled by VOXELFORGE_LOG={error|info|debug}.
"""

from __future__ import annotations

import argparse
import dataclasses
import datetime
import itertools
import json
import logging
import os
import sys

import numpy as np

from . import __version__
from .analysis import (bootstrap_test, load_champion, m_body,
                       min_rotation_hausdorff, robustness_experiment,
                       significance_stars, v_body, v_gain)
from .config import (ConfigError, EvolutionConfig, config_to_dict,
                     load_config)
from .development import DevelopmentRule
from .evolution import SimulationEvaluator, run_trial, write_snapshots
from .genome import ExpressionError, express, load_genome
from .physics import simulate, write_final_state, write_trajectory
from . import reporting

log = logging.getLogger("voxelforge")


def _setup_logging() -> None:
    level = os.environ.get("VOXELFORGE_LOG", "info").lower()
    levels = {"error": logging.ERROR, "info": logging.INFO,
              "debug": logging.DEBUG}
    logging.basicConfig(
        level=levels.get(level, logging.INFO),
        format="%(asctime)s %(levelname)s %(message)s",
        datefmt="%H:%M:%S")


def _ensure_out_dir(path: str) -> bool:
    try:
        os.makedirs(path, exist_ok=True)
        probe = os.path.join(path, ".write_probe")
        with open(probe, "w"):
            pass
        os.remove(probe)
        return True
    except OSError as exc:
        log.error("output directory %s is not writable: %s", path, exc)
        return False


def _now() -> str:
    return datetime.datetime.now(datetime.timezone.utc).isoformat()


# ---------------------------------------------------------------------------
# evolve

def cmd_evolve(args) -> int:
    try:
        config = load_config(args.config)
    except ConfigError as exc:
        log.error("invalid config: %s", exc)
        return 2
    if args.seed is not None:
        config = dataclasses.replace(config, seed=args.seed)
    if not _ensure_out_dir(args.out):
        return 1

    started = _now()
    evaluator = SimulationEvaluator(config, jobs=args.jobs)
    log.info("evolving: %d generations, population %d, seed %d, rule %s",
             config.generations, config.population_size, config.seed,
             config.development_rule.label)
    champion, run_log = run_trial(config, evaluator)
    evaluator.close()

    run_log.write_csv(os.path.join(args.out, "log.csv"))
    snapshot_names = write_snapshots(run_log, args.out)
    reporting.fitness_figure(run_log.rows,
                             os.path.join(args.out, "fitness.png"))
    final_gen, final_genome = run_log.snapshots[-1]
    manifest = {
        "tool_version": __version__,
        "config": config_to_dict(config),
        "seed": config.seed,
        "started": started,
        "finished": _now(),
        "artifacts": {"log": "log.csv", "figure": "fitness.png",
                      "snapshots": snapshot_names},
        "champion": {"id": champion.genome.id,
                     "fitness": champion.fitness,
                     "file": f"gen{final_gen}_id{final_genome.id}.json"},
    }
    with open(os.path.join(args.out, "manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=1)
        fh.write("\n")
    log.info("champion fitness %.4f voxel lengths (id %d)",
             champion.fitness, champion.genome.id)
    print(f"champion_fitness={champion.fitness!r}")
    return 0


# ---------------------------------------------------------------------------
# simulate

def cmd_simulate(args) -> int:
    if args.config:
        try:
            config = load_config(args.config)
        except ConfigError as exc:
            log.error("invalid config: %s", exc)
            return 2
    else:
        config = EvolutionConfig()
    rule = DevelopmentRule.from_name(args.rule)
    try:
        genome = load_genome(args.genome)
    except (OSError, ValueError) as exc:
        log.error("cannot load genome: %s", exc)
        return 1
    if not _ensure_out_dir(args.out):
        return 1
    try:
        phenotype = express(genome, config.lattice_dims,
                            k_range=(config.lattice.k_min,
                                     config.lattice.k_max))
    except ExpressionError as exc:
        log.error("%s", exc)
        return 1
    result = simulate(phenotype, config.lattice, rule)
    write_trajectory(os.path.join(args.out, "trajectory.csv"),
                     result.trajectory)
    write_final_state(os.path.join(args.out, "final_state.json"),
                      phenotype, result)
    reporting.trajectory_figure(result.trajectory,
                                config.lattice.voxel_edge_length,
                                os.path.join(args.out, "trajectory.png"))
    if result.unstable:
        log.warning("simulation went unstable; displacement scored 0")
    print(f"displacement_xy={result.displacement_xy!r}")
    return 0


# ---------------------------------------------------------------------------
# analyze

def _discover_runs(champions_dir: str) -> list[str]:
    if os.path.isfile(os.path.join(champions_dir, "manifest.json")):
        return [champions_dir]
    runs = []
    for name in sorted(os.listdir(champions_dir)):
        p = os.path.join(champions_dir, name)
        if os.path.isdir(p) and os.path.isfile(os.path.join(p, "manifest.json")):
            runs.append(p)
    return runs


def _analyze_diversity(champs, out_dir) -> int:
    if len(champs) < 2:
        log.error("diversity needs at least 2 champions")
        return 2
    dims = {c.phenotype.dims for c in champs}
    if len(dims) > 1:
        log.error("mixed incompatible lattice dims across champions: %s",
                  sorted(dims))
        return 2
    d = champs[0].phenotype.dims
    n = len(champs)
    matrix = np.zeros((n, n))
    rows = []
    for i, j in itertools.combinations(range(n), 2):
        dist = min_rotation_hausdorff(champs[i].voxel_set,
                                      champs[j].voxel_set, d)
        matrix[i, j] = matrix[j, i] = dist
        rows.append((f"{champs[i].run_name}|{champs[j].run_name}",
                     "min_rotation_hausdorff", dist))
    reporting.write_metric_csv(os.path.join(out_dir, "diversity.csv"), rows)
    names = [c.run_name for c in champs]
    reporting.diversity_figure(names, matrix,
                               os.path.join(out_dir, "diversity.png"))
    groups = {}
    for i, j in itertools.combinations(range(n), 2):
        if champs[i].development_rule == champs[j].development_rule:
            groups.setdefault(champs[i].development_rule.label,
                              []).append(matrix[i, j])
    summary = {"pairs": len(rows),
               "group_mean_pairwise_distance":
                   {g: float(np.mean(v)) for g, v in groups.items()}}
    reporting.write_summary_json(os.path.join(out_dir, "summary.json"),
                                 summary)
    return 0


def _analyze_robustness(champs, out_dir, samples, seed) -> int:
    rng = np.random.default_rng(seed)
    rows, by_champ = [], {}
    for c in champs:
        if c.train_fitness <= 0:
            log.warning("skipping %s: train fitness is 0, R undefined",
                        c.run_name)
            continue
        ratios = robustness_experiment(c, samples, rng)
        by_champ[c.run_name] = ratios
        for i, r in enumerate(ratios):
            rows.append((c.run_name, f"R_sample_{i}", r))
        rows.append((c.run_name, "R_mean", float(np.mean(ratios))))
    if not by_champ:
        log.error("no champion with positive train fitness")
        return 1
    reporting.write_metric_csv(os.path.join(out_dir, "robustness.csv"), rows)
    reporting.robustness_figure(by_champ,
                                os.path.join(out_dir, "robustness.png"))
    summary = {name: {"R_mean": float(np.mean(v)),
                      "R_samples": [float(x) for x in v]}
               for name, v in by_champ.items()}
    reporting.write_summary_json(os.path.join(out_dir, "summary.json"),
                                 summary)
    return 0


def _group_alpha_bounds(champs) -> dict:
    """Per-treatment-group alpha bounds for gain-variance normalization."""
    bounds = {}
    for label in {c.development_rule.label for c in champs}:
        alphas = np.concatenate([c.alphas for c in champs
                                 if c.development_rule.label == label])
        lo, hi = float(alphas.min()), float(alphas.max())
        if not hi > lo:
            lo, hi = -10.0, 10.0  # degenerate group: fall back to gene range
        bounds[label] = (lo, hi)
    return bounds


def _canalization_metrics(champs) -> list[tuple[str, str, dict]]:
    bounds = _group_alpha_bounds(champs)
    out = []
    for c in champs:
        lo, hi = bounds[c.development_rule.label]
        out.append((c.run_name, c.development_rule.label, {
            "m_body": m_body(c.congenital_stiffness, c.final_stiffness),
            "v_body": v_body(c.congenital_stiffness, c.final_stiffness),
            "v_gain": v_gain(c.alphas, lo, hi),
            "fitness": c.train_fitness,
        }))
    return out


def _analyze_canalization(champs, out_dir) -> int:
    per_champ = _canalization_metrics(champs)
    rows = [(name, metric, value)
            for name, _, metrics in per_champ
            for metric, value in metrics.items() if metric != "fitness"]
    reporting.write_metric_csv(os.path.join(out_dir, "canalization.csv"),
                               rows)
    reporting.metric_bars_figure(per_champ, ("m_body", "v_body", "v_gain"),
                                 os.path.join(out_dir, "canalization.png"))
    groups = {}
    for _, label, metrics in per_champ:
        groups.setdefault(label, []).append(metrics)
    summary = {label: {m: float(np.mean([x[m] for x in vals]))
                       for m in ("m_body", "v_body", "v_gain")}
               for label, vals in groups.items()}
    reporting.write_summary_json(os.path.join(out_dir, "summary.json"),
                                 summary)
    return 0


def _analyze_compare(champs, out_dir, resamples, seed) -> int:
    per_champ = _canalization_metrics(champs)
    groups = {}
    for _, label, metrics in per_champ:
        groups.setdefault(label, []).append(metrics)
    if len(groups) < 2:
        log.error("compare needs >= 2 treatment groups, found %d",
                  len(groups))
        return 2
    rng = np.random.default_rng(seed)
    labels = sorted(groups)
    pairs = list(itertools.combinations(labels, 2))
    metrics = ("fitness", "m_body", "v_body", "v_gain")
    rows, summary = [], {"groups": {}, "tests": {}}
    for label in labels:
        summary["groups"][label] = {
            m: float(np.mean([x[m] for x in groups[label]])) for m in metrics}
    fitness_p = {}
    for metric in metrics:
        for a, b in pairs:
            sa = [x[metric] for x in groups[a]]
            sb = [x[metric] for x in groups[b]]
            if len(sa) < 2 or len(sb) < 2:
                log.warning("group too small for %s vs %s on %s; skipping",
                            a, b, metric)
                continue
            p = bootstrap_test(sa, sb, n_resamples=resamples,
                               n_comparisons=len(pairs), rng=rng)
            key = f"{a}_vs_{b}"
            summary["tests"].setdefault(metric, {})[key] = {
                "p_corrected": p, "stars": significance_stars(p)}
            rows.append((key, f"p_{metric}", p))
            if metric == "fitness":
                fitness_p[(a, b)] = p
    reporting.write_metric_csv(os.path.join(out_dir, "compare.csv"), rows)
    reporting.write_summary_json(os.path.join(out_dir, "summary.json"),
                                 summary)
    reporting.compare_figure(
        {l: summary["groups"][l]["fitness"] for l in labels},
        fitness_p, "fitness (voxel lengths)",
        os.path.join(out_dir, "compare.png"))
    return 0


def cmd_analyze(args) -> int:
    runs = _discover_runs(args.champions)
    if not runs:
        log.error("no run directories with manifest.json under %s",
                  args.champions)
        return 2
    if not _ensure_out_dir(args.out):
        return 1
    champs = []
    for run in runs:
        try:
            champs.append(load_champion(run))
        except (OSError, ValueError, ConfigError) as exc:
            log.error("cannot load champion from %s: %s", run, exc)
            return 1
    log.info("loaded %d champions for %s analysis", len(champs), args.kind)
    if args.kind == "diversity":
        return _analyze_diversity(champs, args.out)
    if args.kind == "robustness":
        return _analyze_robustness(champs, args.out, args.samples, args.seed)
    if args.kind == "canalization":
        return _analyze_canalization(champs, args.out)
    return _analyze_compare(champs, args.out, args.resamples, args.seed)


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="voxelforge",
        description="Voxel soft-robot evolution, simulation, and analysis")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    ev = sub.add_parser("evolve", help="run one evolutionary trial")
    ev.add_argument("--config", required=True, help="flat JSON config file")
    ev.add_argument("--seed", type=int, default=None,
                    help="override the config's seed")
    ev.add_argument("--out", required=True, help="output directory")
    ev.add_argument("--jobs", type=int, default=os.cpu_count() or 1,
                    help="parallel evaluation workers")
    ev.set_defaults(func=cmd_evolve)

    si = sub.add_parser("simulate", help="simulate one genome file")
    si.add_argument("--genome", required=True, help="genome JSON file")
    si.add_argument("--rule", required=True,
                    choices=["none", "stress", "pressure"])
    si.add_argument("--out", required=True, help="output directory")
    si.add_argument("--config", default=None,
                    help="optional config file (defaults: 10x10x10 lattice)")
    si.set_defaults(func=cmd_simulate)

    an = sub.add_parser("analyze", help="analyze stored run champions")
    an.add_argument("--champions", required=True,
                    help="directory of evolve output directories")
    an.add_argument("--kind", required=True,
                    choices=["diversity", "robustness", "canalization",
                             "compare"])
    an.add_argument("--out", required=True, help="output directory")
    an.add_argument("--samples", type=int, default=10,
                    help="robustness redraws per champion")
    an.add_argument("--seed", type=int, default=0)
    an.add_argument("--resamples", type=int, default=10_000,
                    help="bootstrap resamples for compare")
    an.set_defaults(func=cmd_analyze)
    return parser


def main(argv=None) -> int:
    _setup_logging()
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
