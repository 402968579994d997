"""Age-Fitness-Pareto Optimization over quad-CPPN genomes.

Every generation the population is doubled by mutation, ages tick up, one
fresh random genome is injected (age 0), and random-pair dominated
deletion shrinks the pool back to size. Fitness is maximized, age
minimized; children inherit their parent's (incremented) age so age
tracks the lineage.
"""

from __future__ import annotations

import dataclasses
import itertools
import statistics
from dataclasses import dataclass, field
from typing import Callable, Iterator

import numpy as np

from .config import EvolutionConfig
from .genome import (ExpressionError, Genome, express, mutate, random_genome,
                     save_genome)
from .physics import LatticeError, simulate


@dataclass
class Individual:
    genome: Genome
    age: int = 0
    fitness: float | None = None
    unstable: bool = False

    @property
    def evaluated(self) -> bool:
        return self.fitness is not None


def dominates(a: Individual, b: Individual) -> bool:
    """a Pareto-dominates b on (fitness max, age min)."""
    if not (a.evaluated and b.evaluated):
        raise ValueError("both individuals must be evaluated")
    return (a.fitness >= b.fitness and a.age <= b.age
            and (a.fitness > b.fitness or a.age < b.age))


def pareto_front(population: list[Individual]) -> list[Individual]:
    return [p for p in population
            if not any(dominates(q, p) for q in population if q is not p)]


def _evaluate_genome(genome: Genome, config: EvolutionConfig
                     ) -> tuple[float, bool]:
    try:
        phenotype = express(genome, config.lattice_dims,
                            k_range=(config.lattice.k_min,
                                     config.lattice.k_max))
    except ExpressionError:
        return 0.0, False
    try:
        result = simulate(phenotype, config.lattice, config.development_rule)
    except LatticeError:
        return 0.0, False
    if result.unstable:
        return 0.0, True
    return result.displacement_xy, False


def _worker_eval(args) -> tuple[float, bool]:
    from .config import config_from_dict
    genome_dict, config_dict = args
    return _evaluate_genome(Genome.from_dict(genome_dict),
                            config_from_dict(config_dict))


class SimulationEvaluator:
    """Batch evaluator: express each genome and run the physics.

    Degenerate genomes (no body) and unstable simulations score 0.
    With jobs > 1, evaluations run in a process pool; results keep input
    order, so the outcome is independent of the worker count.
    """

    def __init__(self, config: EvolutionConfig, jobs: int = 1):
        self.config = config
        self.jobs = max(1, int(jobs))
        self._pool = None

    def evaluate_one(self, genome: Genome) -> tuple[float, bool]:
        return _evaluate_genome(genome, self.config)

    def __call__(self, genomes: list[Genome]) -> list[tuple[float, bool]]:
        if self.jobs > 1 and len(genomes) > 1:
            from concurrent.futures import ProcessPoolExecutor
            from .config import config_to_dict
            if self._pool is None:
                self._pool = ProcessPoolExecutor(max_workers=self.jobs)
            cfg = config_to_dict(self.config)
            args = [(g.to_dict(), cfg) for g in genomes]
            return list(self._pool.map(_worker_eval, args))
        return [self.evaluate_one(g) for g in genomes]

    def close(self) -> None:
        if self._pool is not None:
            self._pool.shutdown()
            self._pool = None


@dataclass
class GenerationStats:
    generation: int
    pre_selection_size: int
    best_fitness: float
    mean_fitness: float
    median_fitness: float
    best_age: int
    best_id: int


@dataclass
class RunLog:
    rows: list[GenerationStats] = field(default_factory=list)
    snapshots: list[tuple[int, Genome]] = field(default_factory=list)

    def write_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("generation,best_fitness,mean_fitness,median_fitness,"
                     "best_age,best_id\n")
            for r in self.rows:
                fh.write(f"{r.generation},{r.best_fitness!r},"
                         f"{r.mean_fitness!r},{r.median_fitness!r},"
                         f"{r.best_age},{r.best_id}\n")


def _evaluate_missing(pool: list[Individual], evaluator) -> None:
    todo = [ind for ind in pool if not ind.evaluated]
    results = evaluator([ind.genome for ind in todo])
    for ind, (fit, unstable) in zip(todo, results):
        ind.fitness = fit
        ind.unstable = unstable


def _select(pool: list[Individual], size: int, rng: np.random.Generator
            ) -> list[Individual]:
    """Random-pair dominated deletion down to `size`.

    When no dominated individuals remain, delete the oldest (ties: lowest
    fitness, then random).
    """
    pool = list(pool)
    while len(pool) > size:
        dominated = [i for i, p in enumerate(pool)
                     if any(dominates(q, p) for q in pool if q is not p)]
        if dominated:
            while True:
                a, b = rng.choice(len(pool), size=2, replace=False)
                a, b = int(a), int(b)
                if dominates(pool[a], pool[b]):
                    del pool[b]
                    break
                if dominates(pool[b], pool[a]):
                    del pool[a]
                    break
        else:
            max_age = max(p.age for p in pool)
            oldest = [i for i, p in enumerate(pool) if p.age == max_age]
            min_fit = min(pool[i].fitness for i in oldest)
            worst = [i for i in oldest if pool[i].fitness == min_fit]
            del pool[worst[int(rng.integers(len(worst)))]]
    return pool


def afpo_generation(population: list[Individual], rng: np.random.Generator,
                    evaluator: Callable, next_id: Iterator[int],
                    generation: int = 0
                    ) -> tuple[list[Individual], GenerationStats]:
    """One AFPO generation: double, age, inject, evaluate, select."""
    size = len(population)
    children = [Individual(mutate(p.genome, rng, next(next_id)), age=p.age)
                for p in population]
    for ind in itertools.chain(population, children):
        ind.age += 1
    newcomer = Individual(random_genome(rng, next(next_id)), age=0)
    pool = population + children + [newcomer]
    pre_size = len(pool)
    _evaluate_missing(pool, evaluator)
    survivors = _select(pool, size, rng)
    best = max(survivors, key=lambda p: p.fitness)
    fits = [p.fitness for p in survivors]
    stats = GenerationStats(
        generation=generation,
        pre_selection_size=pre_size,
        best_fitness=best.fitness,
        mean_fitness=statistics.fmean(fits),
        median_fitness=statistics.median(fits),
        best_age=best.age,
        best_id=best.genome.id,
    )
    return survivors, stats


def run_trial(config: EvolutionConfig, evaluator: Callable | None = None
              ) -> tuple[Individual, RunLog]:
    """One seeded evolutionary run; fully reproducible from the seed.

    The champion is the best-fitness individual ever observed (first
    encountered on ties). Snapshots of the running champion's genome are
    taken every checkpoint_interval generations and at the end.
    """
    config.validate()
    if evaluator is None:
        evaluator = SimulationEvaluator(config)
    rng = np.random.default_rng(config.seed)
    next_id = itertools.count()

    population = [Individual(random_genome(rng, next(next_id)), age=0)
                  for _ in range(config.population_size)]
    _evaluate_missing(population, evaluator)

    champion: Individual | None = None

    def consider(pop):
        nonlocal champion
        for ind in pop:
            if champion is None or ind.fitness > champion.fitness:
                champion = dataclasses.replace(ind)

    log = RunLog()
    consider(population)
    best = max(population, key=lambda p: p.fitness)
    fits = [p.fitness for p in population]
    log.rows.append(GenerationStats(0, len(population), best.fitness,
                                    statistics.fmean(fits),
                                    statistics.median(fits),
                                    best.age, best.genome.id))
    log.snapshots.append((0, champion.genome))

    for gen in range(1, config.generations + 1):
        population, stats = afpo_generation(population, rng, evaluator,
                                            next_id, generation=gen)
        consider(population)
        log.rows.append(stats)
        if gen % config.checkpoint_interval == 0 or gen == config.generations:
            log.snapshots.append((gen, champion.genome))

    return champion, log


def write_snapshots(log: RunLog, out_dir) -> list[str]:
    """Write gen{G}_id{ID}.json snapshot files; returns the filenames."""
    names = []
    seen = set()
    for gen, genome in log.snapshots:
        name = f"gen{gen}_id{genome.id}.json"
        if name in seen:
            continue
        seen.add(name)
        save_genome(genome, f"{out_dir}/{name}")
        names.append(name)
    return names
