"""Genetic-algorithm receiver: evolves reduced weight pairs to minimize
the two-symbol training cost.

An individual's genes are the 2M complex entries of a reduced pair (top
half of the odd filter followed by the top half of the even filter).
Each generation two parents breed two children by a fixed-ratio gene
split, a handful of mutants are cloned from the current best individuals
with one component sign flipped, and the next population keeps the
per-symbol-cost minimizers unconditionally plus the lowest total costs,
so the best fitness never increases.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigError, DomainError
from .numerics import SeededRng, gaussian_complex
from .receivers import TrainingBatch, WeightPair

SELECTION_STRATEGIES = ("eugenic", "alpha_male", "preferred", "random")


@dataclass(frozen=True)
class GaConfig:
    """Search parameters of the evolutionary loop.

    init_scale is the per-component standard deviation of the initial
    genes; None picks 1/sqrt(2M), matched to the magnitude of
    minimum-error filter entries for unit-energy signatures.
    """

    population_size: int = 32
    selection: str = "preferred"
    crossover_ratio: float = 0.75
    mutants_per_generation: int = 8
    max_cycles: int = 500
    mse_threshold: float = 1e-3
    init_scale: float | None = None
    seed: int = 0

    def __post_init__(self):
        if self.population_size < 4:
            raise ConfigError(f"population_size must be at least 4, got {self.population_size}")
        if not 0.0 < self.crossover_ratio < 1.0:
            raise ConfigError(f"crossover_ratio must lie in (0, 1), got {self.crossover_ratio}")
        if not 0 <= self.mutants_per_generation <= self.population_size:
            raise ConfigError("mutants_per_generation must lie in [0, population_size]")
        if self.max_cycles < 1:
            raise ConfigError(f"max_cycles must be at least 1, got {self.max_cycles}")
        if self.selection not in SELECTION_STRATEGIES:
            raise ConfigError(f"unknown selection strategy {self.selection!r}")
        if self.init_scale is not None and self.init_scale < 0:
            raise ConfigError("init_scale must be non-negative")


@dataclass(eq=False)
class Individual:
    """One candidate solution with its cached per-symbol costs.

    Individuals compare by identity; gene arrays are never shared.
    """

    genes: np.ndarray  # (2M,) complex
    cost_odd: float | None = None
    cost_even: float | None = None

    @property
    def fitness(self) -> float | None:
        if self.cost_odd is None or self.cost_even is None:
            return None
        return self.cost_odd + self.cost_even

    def pair(self) -> WeightPair:
        m = self.genes.shape[0] // 2
        return WeightPair(top_odd=self.genes[:m].copy(), top_even=self.genes[m:].copy())


@dataclass
class Population:
    """Fixed-size list of individuals kept sorted by ascending fitness."""

    individuals: list[Individual]

    @property
    def size(self) -> int:
        return len(self.individuals)

    def best(self) -> Individual:
        return self.individuals[0]

    def fitness_values(self) -> np.ndarray:
        return np.array([ind.fitness for ind in self.individuals])


@dataclass
class GaTrace:
    """Per-cycle best and mean fitness of the population."""

    best: list[float] = field(default_factory=list)
    mean: list[float] = field(default_factory=list)


class BatchFitness:
    """Evaluates gene matrices on a fixed training batch.

    Splitting the genes into the two filter top halves, the expanded
    filters are applied to every block at once, so a whole candidate set
    costs one pair of matrix products.
    """

    def __init__(self, batch: TrainingBatch):
        self.batch = batch

    def __call__(self, genes: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        genes = np.atleast_2d(genes)
        m = genes.shape[1] // 2
        top_odd, top_even = genes[:, :m], genes[:, m:]
        w_odd = np.concatenate([top_odd, np.conj(top_even)], axis=1)  # (q, 2M)
        w_even = np.concatenate([top_even, -np.conj(top_odd)], axis=1)
        y_odd = self.batch.received @ w_odd.conj().T  # (blocks, q)
        y_even = self.batch.received @ w_even.conj().T
        e_odd = y_odd - self.batch.desired[:, 0:1]
        e_even = y_even - self.batch.desired[:, 1:2]
        return (
            np.mean(np.abs(e_odd) ** 2, axis=0),
            np.mean(np.abs(e_even) ** 2, axis=0),
        )


class ExpectedFitness:
    """Exact-expectation fitness from the model autocorrelation."""

    def __init__(self, autocorr, sig_odd: np.ndarray, sig_even: np.ndarray):
        self.matrix = autocorr.matrix
        self.sig_odd = sig_odd
        self.sig_even = sig_even

    def _branch(self, w: np.ndarray, sig: np.ndarray) -> np.ndarray:
        quad = np.real(np.einsum("qi,ij,qj->q", w.conj(), self.matrix, w))
        lin = np.real(w.conj() @ sig)
        return quad - 2.0 * lin + 1.0

    def __call__(self, genes: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        genes = np.atleast_2d(genes)
        m = genes.shape[1] // 2
        top_odd, top_even = genes[:, :m], genes[:, m:]
        w_odd = np.concatenate([top_odd, np.conj(top_even)], axis=1)
        w_even = np.concatenate([top_even, -np.conj(top_odd)], axis=1)
        return self._branch(w_odd, self.sig_odd), self._branch(w_even, self.sig_even)


def _evaluate(individuals: list[Individual], fitness) -> None:
    stale = [ind for ind in individuals if ind.fitness is None]
    if not stale:
        return
    genes = np.stack([ind.genes for ind in stale])
    cost_odd, cost_even = fitness(genes)
    for ind, c1, c2 in zip(stale, cost_odd, cost_even):
        ind.cost_odd = float(c1)
        ind.cost_even = float(c2)


def _sorted(individuals: list[Individual]) -> list[Individual]:
    totals = np.array([ind.fitness for ind in individuals])
    order = np.argsort(totals, kind="stable")
    return [individuals[i] for i in order]


def init_population(cfg: GaConfig, subcarriers: int, rng: SeededRng, fitness) -> Population:
    """Random population with i.i.d. circular Gaussian genes, evaluated
    and sorted ascending by fitness."""
    gene_count = 2 * subcarriers
    scale = cfg.init_scale if cfg.init_scale is not None else 1.0 / np.sqrt(gene_count)
    if scale == 0.0:
        genes = np.zeros((cfg.population_size, gene_count), dtype=np.complex128)
    else:
        genes = gaussian_complex(cfg.population_size * gene_count, scale**2, rng).reshape(
            cfg.population_size, gene_count
        )
    individuals = [Individual(genes=genes[i].copy()) for i in range(cfg.population_size)]
    _evaluate(individuals, fitness)
    return Population(individuals=_sorted(individuals))


def select_parents(
    pop: Population, strategy: str, rng: SeededRng
) -> tuple[Individual, Individual]:
    """Pick two distinct parents; the population must be sorted ascending.

    eugenic: the two best. alpha_male: the best plus a uniform pick from
    the rest. preferred: first parent uniform over ranks 2..size-1, second
    uniform among strictly better ranks. random: two distinct uniform picks.
    """
    size = pop.size
    if strategy == "eugenic":
        i, j = 0, 1
    elif strategy == "alpha_male":
        i = 0
        j = 1 + rng.integers(size - 1)
    elif strategy == "preferred":
        if size < 4:
            raise ConfigError("preferred selection needs a population of at least 4")
        i = 1 + rng.integers(size - 2)  # ranks 2..size-1
        j = rng.integers(i)  # strictly better rank
    elif strategy == "random":
        i = rng.integers(size)
        j = rng.integers(size - 1)
        if j >= i:
            j += 1
    else:
        raise ConfigError(f"unknown selection strategy {strategy!r}")
    return pop.individuals[i], pop.individuals[j]


def crossover(
    parent_a: Individual, parent_b: Individual, ratio: float, rng: SeededRng
) -> tuple[Individual, Individual]:
    """Two children from a fixed-ratio gene split.

    The first child takes the first round(ratio * G) genes from parent A
    and the rest from parent B; the second child is the complement. Every
    child gene is copied verbatim, so no new values enter the gene pool.
    The split point is deterministic; ``rng`` is accepted for interface
    symmetry with the other variation operators.
    """
    del rng
    if not 0.0 < ratio < 1.0:
        raise DomainError(f"crossover ratio must lie in (0, 1), got {ratio}")
    genes_a, genes_b = parent_a.genes, parent_b.genes
    split = int(round(ratio * genes_a.shape[0]))
    child_a = np.concatenate([genes_a[:split], genes_b[split:]])
    child_b = np.concatenate([genes_b[:split], genes_a[split:]])
    return Individual(genes=child_a), Individual(genes=child_b)


def flip_component(genes: np.ndarray, gene_index: int, component: int) -> np.ndarray:
    """Copy of ``genes`` with the real (0) or imaginary (1) part of one
    gene negated; applying the same flip twice restores the original."""
    out = genes.copy()
    value = out[gene_index]
    if component == 0:
        out[gene_index] = complex(-value.real, value.imag)
    else:
        out[gene_index] = complex(value.real, -value.imag)
    return out


def mutate(ind: Individual, rng: SeededRng) -> Individual:
    """Clone with one uniformly chosen gene component sign-flipped;
    the clone's fitness is left unset."""
    gene_index = rng.integers(ind.genes.shape[0])
    component = rng.integers(2)
    return Individual(genes=flip_component(ind.genes, gene_index, component))


def replace_generation(
    pop: Population,
    children: list[Individual],
    mutants: list[Individual],
    batch: TrainingBatch | None,
    fitness=None,
) -> Population:
    """Elitist replacement over the pooled candidates.

    The pool is the old population plus children plus mutants, all scored
    on the same batch. The minimizer of the odd-symbol cost and the
    minimizer of the even-symbol cost are retained unconditionally; the
    remaining slots go to the lowest total costs. The result is truncated
    to the population size and re-sorted ascending, so the best total
    cost never increases.
    """
    if fitness is None:
        if batch is None:
            raise DomainError("either a batch or a fitness evaluator is required")
        fitness = BatchFitness(batch)
    pool = list(pop.individuals) + list(children) + list(mutants)
    _evaluate(pool, fitness)

    odd_costs = np.array([ind.cost_odd for ind in pool])
    even_costs = np.array([ind.cost_even for ind in pool])
    keep_indices: list[int] = []
    for idx in (int(np.argmin(odd_costs)), int(np.argmin(even_costs))):
        if idx not in keep_indices:
            keep_indices.append(idx)

    totals = odd_costs + even_costs
    for idx in np.argsort(totals, kind="stable"):
        if len(keep_indices) >= pop.size:
            break
        if int(idx) not in keep_indices:
            keep_indices.append(int(idx))

    survivors = [pool[i] for i in keep_indices]
    return Population(individuals=_sorted(survivors))


def run_ga(
    cfg: GaConfig,
    batch: TrainingBatch | None,
    subcarriers: int,
    fitness=None,
    on_cycle=None,
) -> tuple[Individual, GaTrace]:
    """Full evolutionary loop, deterministic given the config seed.

    Each cycle: select parents, breed two children at the configured
    crossover ratio, clone-and-flip mutants from the current best
    individuals, score everything on the fixed batch, replace, sort.
    Stops after ``max_cycles`` cycles or once the best fitness reaches
    ``mse_threshold`` (a non-positive or infinite threshold disables the
    early exit, giving a pure cycle-bound stop).
    ``fitness`` may replace the batch evaluator (for exact-expectation
    runs); ``on_cycle(cycle, population)`` is invoked after every cycle.
    """
    if fitness is None:
        if batch is None:
            raise DomainError("either a batch or a fitness evaluator is required")
        fitness = BatchFitness(batch)
    rng = SeededRng(cfg.seed)
    pop = init_population(cfg, subcarriers, rng, fitness)
    trace = GaTrace()
    for cycle in range(1, cfg.max_cycles + 1):
        parent_a, parent_b = select_parents(pop, cfg.selection, rng)
        child_a, child_b = crossover(parent_a, parent_b, cfg.crossover_ratio, rng)
        mutants = [
            mutate(pop.individuals[i], rng) for i in range(cfg.mutants_per_generation)
        ]
        pop = replace_generation(pop, [child_a, child_b], mutants, batch, fitness)
        best = pop.best().fitness
        trace.best.append(float(best))
        trace.mean.append(float(np.mean(pop.fitness_values())))
        if on_cycle is not None:
            on_cycle(cycle, pop)
        if 0 < cfg.mse_threshold < np.inf and best <= cfg.mse_threshold:
            break
    return pop.best(), trace


def with_seed(cfg: GaConfig, seed: int) -> GaConfig:
    """Copy of the config with a different stream seed."""
    return replace(cfg, seed=seed)
