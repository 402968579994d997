"""Post-hoc metrics over evolved champions.

Geometric diversity via (rotation-minimized) Hausdorff distance,
stiffness robustness via random-redraw re-simulation, canalization
statistics over lifetime stiffness change, and bootstrap hypothesis
tests with Bonferroni correction.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from .config import EvolutionConfig
from .development import DevelopmentRule
from .genome import Genome, Phenotype, express, load_genome
from .physics import simulate


# ---------------------------------------------------------------------------
# Geometric diversity

def hausdorff(a: np.ndarray, b: np.ndarray) -> float:
    """Hausdorff distance between two voxel sets ((N,3) center coords)."""
    a = np.atleast_2d(np.asarray(a, dtype=np.float64))
    b = np.atleast_2d(np.asarray(b, dtype=np.float64))
    if a.size == 0 or b.size == 0:
        raise ValueError("hausdorff is undefined for empty sets")
    d = cdist(a, b)
    return float(max(d.min(axis=1).max(), d.min(axis=0).max()))


def _rot_xy(q: int) -> np.ndarray:
    c, s = [(1, 0), (0, 1), (-1, 0), (0, -1)][q % 4]
    return np.array([[c, -s, 0], [s, c, 0], [0, 0, 1]], dtype=np.float64)


def _rot_yz(q: int) -> np.ndarray:
    c, s = [(1, 0), (0, 1)][q % 2]
    return np.array([[1, 0, 0], [0, c, -s], [0, s, c]], dtype=np.float64)


def lattice_rotations():
    """The 8 composed rotations: xy quarter-turns times yz in {0, 90}."""
    return [_rot_yz(p) @ _rot_xy(q) for q in range(4) for p in range(2)]


def min_rotation_hausdorff(a: np.ndarray, b: np.ndarray, dims) -> float:
    """Min Hausdorff distance over the 8 lattice rotations of b about the
    lattice center."""
    center = (np.asarray(dims, dtype=np.float64) - 1.0) / 2.0
    b = np.asarray(b, dtype=np.float64)
    return min(hausdorff(a, (b - center) @ rot.T + center)
               for rot in lattice_rotations())


# ---------------------------------------------------------------------------
# Champion records

@dataclass
class ChampionRecord:
    """One run champion plus everything its analyses need."""

    run_name: str
    genome: Genome
    phenotype: Phenotype
    development_rule: DevelopmentRule
    config: EvolutionConfig
    train_fitness: float
    congenital_stiffness: np.ndarray  # per present voxel, Pa
    final_stiffness: np.ndarray       # per present voxel, Pa

    @property
    def voxel_set(self) -> np.ndarray:
        return self.phenotype.voxel_coords

    @property
    def alphas(self) -> np.ndarray:
        return self.phenotype.field_flat("alpha")


def champion_from_genome(genome: Genome, config: EvolutionConfig,
                         run_name: str = "",
                         expected_fitness: float | None = None
                         ) -> ChampionRecord:
    """Re-simulate a genome under its config to build a ChampionRecord.

    If expected_fitness is given, the re-simulated fitness must match it
    (reproducibility check on load).
    """
    phenotype = express(genome, config.lattice_dims,
                        k_range=(config.lattice.k_min, config.lattice.k_max))
    result = simulate(phenotype, config.lattice, config.development_rule)
    if expected_fitness is not None and not np.isclose(
            result.displacement_xy, expected_fitness, rtol=1e-9, atol=1e-12):
        raise ValueError(
            f"champion {run_name or genome.id}: stored fitness "
            f"{expected_fitness} does not reproduce "
            f"(got {result.displacement_xy})")
    return ChampionRecord(
        run_name=run_name or str(genome.id),
        genome=genome,
        phenotype=phenotype,
        development_rule=config.development_rule,
        config=config,
        train_fitness=result.displacement_xy,
        congenital_stiffness=result.congenital_stiffness,
        final_stiffness=result.final_stiffness,
    )


def load_champion(run_dir, validate: bool = True) -> ChampionRecord:
    """Load the champion of one evolve output directory (manifest + genome)."""
    import os
    from .config import config_from_dict
    manifest_path = os.path.join(run_dir, "manifest.json")
    with open(manifest_path) as fh:
        manifest = json.load(fh)
    config = config_from_dict(manifest["config"])
    genome = load_genome(os.path.join(run_dir, manifest["champion"]["file"]))
    expected = manifest["champion"]["fitness"] if validate else None
    return champion_from_genome(genome, config,
                                run_name=os.path.basename(os.path.normpath(run_dir)),
                                expected_fitness=expected)


# ---------------------------------------------------------------------------
# Interoceptive robustness

def robustness_experiment(champion: ChampionRecord, n_samples: int,
                          rng: np.random.Generator,
                          stiffness_sampler=None) -> list[float]:
    """Relative fitness under random congenital stiffness, development off.

    Each sample redraws the per-voxel stiffness uniformly in log10 space
    over the configured modulus range, keeps geometry and phase bit-exact,
    re-simulates with no development, and records F_test / F_train.
    """
    if champion.train_fitness <= 0:
        raise ValueError("robustness is undefined for train fitness 0")
    if n_samples < 1:
        raise ValueError("need at least one sample")
    cfg = champion.config.lattice
    pheno = champion.phenotype
    lo, hi = np.log10(cfg.k_min), np.log10(cfg.k_max)
    ratios = []
    for _ in range(n_samples):
        if stiffness_sampler is None:
            k_flat = 10.0 ** rng.uniform(lo, hi, size=pheno.num_voxels)
        else:
            k_flat = np.asarray(stiffness_sampler(rng), dtype=np.float64)
        k_field = pheno.stiffness.copy()
        k_field[pheno.geometry] = k_flat
        test_pheno = dataclasses.replace(pheno, stiffness=k_field)
        result = simulate(test_pheno, cfg, DevelopmentRule.NONE)
        ratios.append(result.displacement_xy / champion.train_fitness)
    return ratios


# ---------------------------------------------------------------------------
# Canalization

def m_body(k_congenital: np.ndarray, k_final: np.ndarray) -> float:
    """Mean relative lifetime stiffness change; lower = more canalized."""
    rel = np.abs(np.asarray(k_final) / np.asarray(k_congenital) - 1.0)
    return float(rel.mean())


def v_body(k_congenital: np.ndarray, k_final: np.ndarray) -> float:
    """Population variance of the relative lifetime stiffness change."""
    rel = np.abs(np.asarray(k_final) / np.asarray(k_congenital) - 1.0)
    return float(rel.var())


def v_gain(alphas: np.ndarray, alpha_min: float, alpha_max: float) -> float:
    """Population variance of gains normalized by group-level bounds."""
    if not alpha_max > alpha_min:
        raise ValueError("alpha_max must exceed alpha_min")
    norm = (np.asarray(alphas) - alpha_min) / (alpha_max - alpha_min)
    return float(norm.var())


# ---------------------------------------------------------------------------
# Hypothesis testing

def bootstrap_test(sample_a, sample_b, n_resamples: int = 10_000,
                   n_comparisons: int = 1,
                   rng: np.random.Generator | None = None) -> float:
    """Two-sided bootstrap test on the difference in means.

    Both groups are centered (null: equal means), resampled with
    replacement, and the observed difference compared against the null
    distribution. The raw p-value is Bonferroni-multiplied by
    n_comparisons and capped at 1.
    """
    a = np.asarray(sample_a, dtype=np.float64)
    b = np.asarray(sample_b, dtype=np.float64)
    if a.size < 2 or b.size < 2:
        raise ValueError("each sample needs at least 2 values")
    if n_resamples < 1000:
        raise ValueError("n_resamples must be >= 1000")
    if rng is None:
        rng = np.random.default_rng()
    observed = abs(a.mean() - b.mean())
    a0 = a - a.mean()
    b0 = b - b.mean()
    ra = a0[rng.integers(a.size, size=(n_resamples, a.size))].mean(axis=1)
    rb = b0[rng.integers(b.size, size=(n_resamples, b.size))].mean(axis=1)
    null = np.abs(ra - rb)
    p_raw = (np.count_nonzero(null >= observed) + 1) / (n_resamples + 1)
    return min(1.0, p_raw * n_comparisons)


def significance_stars(p: float) -> str:
    if p < 0.001:
        return "***"
    if p < 0.01:
        return "**"
    if p < 0.05:
        return "*"
    return "ns"
