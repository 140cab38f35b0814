import numpy as np
import pytest

from mccdma_ga.airlink import SystemConfig, draw_symbols, draw_noise, generate_channel, generate_spreading_codes, build_signatures, synthesize_batch
from mccdma_ga.errors import ConfigError
from mccdma_ga.ga import (
    BatchFitness,
    ExpectedFitness,
    GaConfig,
    Individual,
    Population,
    crossover,
    flip_component,
    init_population,
    mutate,
    replace_generation,
    run_ga,
    select_parents,
)
from mccdma_ga.numerics import SeededRng, gaussian_complex
from mccdma_ga.receivers import TrainingBatch, analytic_autocorrelation, mmse_cost

# chi-square critical value at 1% significance for 30 degrees of freedom
CHI2_99_DOF30 = 50.892


def make_batch(subcarriers=4, users=2, blocks=32, seed=0, variance=0.1):
    cfg = SystemConfig(subcarriers=subcarriers, users=users, paths=2)
    rng = SeededRng(seed)
    codes = generate_spreading_codes(cfg, rng.derive(0))
    chan = generate_channel(cfg, rng.derive(1))
    sigs = build_signatures(cfg, codes, chan)
    pairs = draw_symbols(blocks * users, rng.derive(2)).reshape(blocks, users, 2)
    noise = draw_noise(blocks, subcarriers, variance, rng.derive(3))
    return cfg, sigs, TrainingBatch(
        received=synthesize_batch(sigs, pairs, noise), desired=pairs[:, 0, :]
    )


def sorted_population(fitness_values, gene_count=4):
    """Population with prescribed total fitness values, already ascending."""
    individuals = []
    for i, value in enumerate(sorted(fitness_values)):
        genes = np.full(gene_count, i + 1, dtype=complex)
        individuals.append(Individual(genes=genes, cost_odd=value / 2, cost_even=value / 2))
    return Population(individuals=individuals)


class TestGaConfig:
    @pytest.mark.parametrize(
        "kwargs",
        [
            dict(population_size=3),
            dict(crossover_ratio=0.0),
            dict(crossover_ratio=1.0),
            dict(mutants_per_generation=40, population_size=32),
            dict(max_cycles=0),
            dict(selection="tournament"),
            dict(init_scale=-1.0),
        ],
    )
    def test_invalid_configs_rejected(self, kwargs):
        with pytest.raises(ConfigError):
            GaConfig(**kwargs)


class TestInitPopulation:
    def test_zero_scale_gives_zero_genes_and_symbol_energy_fitness(self):
        cfg, sigs, batch = make_batch()
        ga = GaConfig(population_size=8, init_scale=0.0)
        pop = init_population(ga, 4, SeededRng(1), BatchFitness(batch))
        for ind in pop.individuals:
            assert np.array_equal(ind.genes, np.zeros(8, dtype=complex))
            assert ind.fitness == pytest.approx(2.0, abs=1e-9)

    def test_reference_size_gene_count(self):
        cfg, sigs, batch = make_batch(subcarriers=32, users=4, blocks=16, seed=5)
        ga = GaConfig(population_size=32)
        pop = init_population(ga, 32, SeededRng(2), BatchFitness(batch))
        assert pop.size == 32
        assert all(ind.genes.shape == (64,) for ind in pop.individuals)

    def test_sorted_ascending_after_init(self):
        cfg, sigs, batch = make_batch()
        pop = init_population(GaConfig(population_size=16), 4, SeededRng(3), BatchFitness(batch))
        values = pop.fitness_values()
        assert np.all(np.diff(values) >= 0)

    def test_same_seed_same_population(self):
        cfg, sigs, batch = make_batch()
        a = init_population(GaConfig(population_size=8), 4, SeededRng(9), BatchFitness(batch))
        b = init_population(GaConfig(population_size=8), 4, SeededRng(9), BatchFitness(batch))
        for x, y in zip(a.individuals, b.individuals):
            assert np.array_equal(x.genes, y.genes)
            assert x.fitness == y.fitness


class TestSelection:
    def test_eugenic_takes_two_best(self):
        pop = sorted_population(range(10))
        p1, p2 = select_parents(pop, "eugenic", SeededRng(0))
        assert p1 is pop.individuals[0]
        assert p2 is pop.individuals[1]

    def test_alpha_male_best_plus_uniform_rest(self):
        pop = sorted_population(range(32))
        rng = SeededRng(4)
        counts = np.zeros(32, dtype=int)
        for _ in range(100_000):
            p1, p2 = select_parents(pop, "alpha_male", rng)
            assert p1 is pop.individuals[0]
            idx = pop.individuals.index(p2)
            assert idx >= 1
            counts[idx] += 1
        observed = counts[1:]
        expected = 100_000 / 31
        chi2 = float(np.sum((observed - expected) ** 2 / expected))
        assert chi2 <= CHI2_99_DOF30

    def test_preferred_second_parent_strictly_better(self):
        pop = sorted_population(range(16))
        rng = SeededRng(5)
        for _ in range(100_000):
            p1, p2 = select_parents(pop, "preferred", rng)
            r1 = pop.individuals.index(p1)
            r2 = pop.individuals.index(p2)
            assert 1 <= r1 <= 14  # ranks 2..size-1
            assert r2 < r1

    def test_random_draws_distinct(self):
        pop = sorted_population(range(8))
        rng = SeededRng(6)
        for _ in range(10_000):
            p1, p2 = select_parents(pop, "random", rng)
            assert p1 is not p2


class TestCrossover:
    def test_three_quarter_split_of_64_genes(self):
        rng = SeededRng(7)
        a = Individual(genes=gaussian_complex(64, 1.0, rng))
        b = Individual(genes=gaussian_complex(64, 1.0, rng))
        c1, c2 = crossover(a, b, 0.75, rng)
        assert np.array_equal(c1.genes[:48], a.genes[:48])
        assert np.array_equal(c1.genes[48:], b.genes[48:])
        assert np.array_equal(c2.genes[:48], b.genes[:48])
        assert np.array_equal(c2.genes[48:], a.genes[48:])

    def test_identical_parents_clone(self):
        rng = SeededRng(8)
        a = Individual(genes=gaussian_complex(8, 1.0, rng))
        c1, c2 = crossover(a, a, 0.75, rng)
        assert np.array_equal(c1.genes, a.genes)
        assert np.array_equal(c2.genes, a.genes)

    def test_positionwise_gene_conservation(self):
        rng = SeededRng(9)
        a = Individual(genes=gaussian_complex(10, 1.0, rng))
        b = Individual(genes=gaussian_complex(10, 1.0, rng))
        c1, c2 = crossover(a, b, 0.3, rng)
        for i in range(10):
            assert {c1.genes[i], c2.genes[i]} == {a.genes[i], b.genes[i]}

    def test_invalid_ratio_rejected(self):
        rng = SeededRng(10)
        a = Individual(genes=gaussian_complex(4, 1.0, rng))
        with pytest.raises(ValueError):
            crossover(a, a, 1.5, rng)


class TestMutation:
    def test_forced_real_component_flip(self):
        genes = np.array([1 + 2j], dtype=complex)
        assert flip_component(genes, 0, 0)[0] == -1 + 2j
        assert flip_component(genes, 0, 1)[0] == 1 - 2j

    def test_zero_gene_unchanged_in_value(self):
        genes = np.array([0j, 1 + 1j])
        flipped = flip_component(genes, 0, 0)
        assert flipped[0] == 0j

    def test_involution(self):
        rng = SeededRng(11)
        genes = gaussian_complex(8, 1.0, rng)
        twice = flip_component(flip_component(genes, 3, 1), 3, 1)
        assert np.array_equal(twice, genes)

    def test_mutate_changes_exactly_one_component(self):
        rng = SeededRng(12)
        ind = Individual(genes=gaussian_complex(16, 1.0, rng), cost_odd=1.0, cost_even=1.0)
        mutant = mutate(ind, rng)
        assert mutant.fitness is None
        diff = mutant.genes != ind.genes
        assert diff.sum() == 1
        idx = int(np.argmax(diff))
        delta = mutant.genes[idx] - ind.genes[idx]
        # exactly one of the two components was negated
        assert (delta.real == -2 * ind.genes[idx].real and delta.imag == 0) or (
            delta.imag == -2 * ind.genes[idx].imag and delta.real == 0
        )


class TestReplacement:
    def test_worse_candidates_leave_population_unchanged(self):
        cfg, sigs, batch = make_batch()
        fitness = BatchFitness(batch)
        pop = init_population(GaConfig(population_size=8), 4, SeededRng(13), fitness)
        worst = pop.individuals[-1]
        bad = [Individual(genes=worst.genes * 10.0) for _ in range(3)]
        new_pop = replace_generation(pop, bad[:2], bad[2:], batch)
        old_ids = {id(ind) for ind in pop.individuals}
        assert all(id(ind) in old_ids for ind in new_pop.individuals)

    def test_dominating_child_takes_first_rank(self):
        cfg, sigs, batch = make_batch()
        fitness = BatchFitness(batch)
        pop = init_population(GaConfig(population_size=8), 4, SeededRng(14), fitness)
        from mccdma_ga.receivers import extract_pair, mmse_weights

        r = analytic_autocorrelation(sigs, 0.1)
        best_pair = extract_pair(mmse_weights(r, sigs.odd[0], sigs.even[0]))
        champion = Individual(genes=np.concatenate([best_pair.top_odd, best_pair.top_even]))
        new_pop = replace_generation(pop, [champion], [], batch)
        assert new_pop.individuals[0] is champion

    def test_per_symbol_minimizers_survive_despite_bad_totals(self):
        pop = sorted_population([1.0, 1.2, 1.4, 1.6])
        # candidate with the lowest odd-symbol cost but a terrible total
        outlier = Individual(genes=np.ones(4, dtype=complex), cost_odd=0.01, cost_even=10.0)
        new_pop = replace_generation(pop, [outlier], [], None, fitness=lambda g: (None, None))
        assert outlier in new_pop.individuals

    def test_best_fitness_never_increases_over_many_generations(self):
        cfg, sigs, batch = make_batch(subcarriers=2, users=1, blocks=16, seed=15)
        ga = GaConfig(
            population_size=8, mutants_per_generation=2, max_cycles=10_000, mse_threshold=0.0
        )
        _, trace = run_ga(ga, batch, 2)
        best = np.array(trace.best)
        assert np.all(np.diff(best) <= 0.0 + 1e-15)


class TestRunGa:
    def test_cycle_bound_stop_and_trace_length(self):
        cfg, sigs, batch = make_batch()
        ga = GaConfig(population_size=8, max_cycles=25, mse_threshold=0.0)
        _, trace = run_ga(ga, batch, 4)
        assert len(trace.best) == 25
        assert len(trace.mean) == 25

    def test_threshold_stops_early(self):
        cfg, sigs, batch = make_batch()
        ga = GaConfig(population_size=8, max_cycles=500, mse_threshold=10.0)
        _, trace = run_ga(ga, batch, 4)
        assert len(trace.best) == 1  # initial population already below 10

    def test_infinite_threshold_means_cycle_bound_stop(self):
        cfg, sigs, batch = make_batch()
        ga = GaConfig(population_size=8, max_cycles=30, mse_threshold=float("inf"))
        _, trace = run_ga(ga, batch, 4)
        assert len(trace.best) == 30

    def test_deterministic_given_seed(self):
        cfg, sigs, batch = make_batch()
        ga = GaConfig(population_size=8, max_cycles=40, mse_threshold=0.0, seed=77)
        best_a, trace_a = run_ga(ga, batch, 4)
        best_b, trace_b = run_ga(ga, batch, 4)
        assert trace_a.best == trace_b.best
        assert trace_a.mean == trace_b.mean
        assert np.array_equal(best_a.genes, best_b.genes)

    def test_permutation_of_initial_population_is_canonicalized(self):
        cfg, sigs, batch = make_batch()
        fitness = BatchFitness(batch)
        pop = init_population(GaConfig(population_size=8), 4, SeededRng(18), fitness)
        shuffled = Population(individuals=list(reversed(pop.individuals)))
        from mccdma_ga.ga import _sorted

        resorted = Population(individuals=_sorted(shuffled.individuals))
        assert [id(i) for i in resorted.individuals] == [id(i) for i in pop.individuals]

    def test_expected_fitness_matches_model_floor_direction(self):
        # exact-expectation fitness never goes below the model floor
        cfg, sigs, batch = make_batch(subcarriers=2, users=1, seed=19)
        r = analytic_autocorrelation(sigs, 0.1)
        floor = mmse_cost(r, sigs.odd[0], sigs.even[0])
        fitness = ExpectedFitness(r, sigs.odd[0], sigs.even[0])
        ga = GaConfig(population_size=16, max_cycles=200, mse_threshold=0.0, seed=3)
        best, trace = run_ga(ga, None, 2, fitness=fitness)
        assert best.fitness >= floor - 1e-12
        assert np.all(np.diff(np.array(trace.best)) <= 1e-15)

    def test_on_cycle_callback_sees_every_cycle(self):
        cfg, sigs, batch = make_batch()
        seen = []
        ga = GaConfig(population_size=8, max_cycles=10, mse_threshold=0.0)
        run_ga(ga, batch, 4, on_cycle=lambda cycle, pop: seen.append(cycle))
        assert seen == list(range(1, 11))
