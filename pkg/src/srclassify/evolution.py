"""Evolution engines: generational tree search with tournament selection and
elitism, and (1+lambda) search for grid genomes.

Both engines treat lower loss as better, quarantine NaN losses as +inf, and
are deterministic functions of their inputs and the supplied random generator.
Fitness callables must be pure; the engines exploit that by reusing known
losses for individuals that survive a generation unchanged and for grid
offspring whose single mutated gene is provably inactive.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .cgp import CgpConfig, decode_active, mutation_is_neutral, point_mutate_traced, random_genome
from .trees import (
    DEFAULT_MAX_DEPTH,
    ExprTree,
    TreeInitConfig,
    random_tree,
    subtree_crossover,
    subtree_mutation,
)


@dataclass(frozen=True)
class EvoConfig:
    """Shared engine settings; the tree engine ignores lambda_/maxiter and the
    (1+lambda) engine ignores everything except lambda_ and maxiter."""

    n_pop: int = 100
    n_gens: int = 50
    tournament_size: int = 7
    p_crossover: float = 0.9
    p_mutation: float = 0.05
    lambda_: int = 4
    maxiter: int = 100

    def __post_init__(self):
        if self.n_pop < 2:
            raise ValueError("n_pop must be >= 2")
        if self.n_gens < 1 or self.maxiter < 1 or self.lambda_ < 1:
            raise ValueError("n_gens, maxiter, and lambda_ must all be >= 1")
        if not (1 <= self.tournament_size <= self.n_pop):
            raise ValueError("require 1 <= tournament_size <= n_pop")
        if self.p_crossover < 0 or self.p_mutation < 0 or self.p_crossover + self.p_mutation > 1:
            raise ValueError("require p_crossover + p_mutation <= 1 with both non-negative")


@dataclass
class EvolutionTrace:
    """Per-generation best individual and loss, plus the final champion."""

    generations: list[int] = field(default_factory=list)
    best_losses: list[float] = field(default_factory=list)
    best_individuals: list = field(default_factory=list)

    def record(self, generation: int, loss: float, individual) -> None:
        self.generations.append(generation)
        self.best_losses.append(loss)
        self.best_individuals.append(individual)

    @property
    def champion(self):
        return self.best_individuals[-1]

    @property
    def champion_loss(self) -> float:
        return self.best_losses[-1]

    def to_lines(self) -> list[str]:
        """Line-delimited (generation, best_loss) records for diagnostics."""
        return [f"{g}\t{loss!r}" for g, loss in zip(self.generations, self.best_losses)]


def _quarantine(loss: float) -> float:
    loss = float(loss)
    return math.inf if math.isnan(loss) else loss


def tournament_select(losses, k: int, rng: np.random.Generator) -> int:
    """Best-of-k selection with replacement; ties keep the lowest index."""
    n = len(losses)
    if n == 0:
        raise ValueError("losses must be nonempty")
    if not (1 <= k <= n):
        raise ValueError(f"require 1 <= k <= {n}, got k={k}")
    draws = rng.integers(0, n, size=k)
    best = int(draws[0])
    for i in draws[1:]:
        i = int(i)
        if losses[i] < losses[best] or (losses[i] == losses[best] and i < best):
            best = i
    return best


def _argmin_lowest_index(losses) -> int:
    best = 0
    for i in range(1, len(losses)):
        if losses[i] < losses[best]:
            best = i
    return best


def breed_tree_population(
    population: list[ExprTree],
    losses: list[float],
    config: EvoConfig,
    init: TreeInitConfig,
    n_features: int,
    rng: np.random.Generator,
    max_depth: int = DEFAULT_MAX_DEPTH,
) -> list[ExprTree]:
    """One generational step: copy the single best unchanged, then fill the
    population with tournament-selected parents undergoing crossover,
    mutation, or reproduction.

    All tournament indices and operator coins for the generation are drawn up
    front (two tournaments reserved per slot), so the random stream advances
    by a fixed amount regardless of which operators fire. Tournament winners
    are resolved through each individual's (loss, index) rank, which matches
    tournament_select's lowest-loss, lowest-index rule.
    """
    n = len(population)
    n_offspring = n - 1
    order = np.lexsort((np.arange(n), np.asarray(losses)))
    rank = np.empty(n, dtype=np.int64)
    rank[order] = np.arange(n)
    draws = rng.integers(0, n, size=(2 * n_offspring, config.tournament_size))
    winners = draws[np.arange(2 * n_offspring), np.argmin(rank[draws], axis=1)]
    coins = rng.random(size=n_offspring)

    nxt = [population[_argmin_lowest_index(losses)]]
    for slot in range(n_offspring):
        parent = population[winners[2 * slot]]
        r = coins[slot]
        if r < config.p_crossover:
            mate = population[winners[2 * slot + 1]]
            nxt.append(subtree_crossover(parent, mate, rng, max_depth))
        elif r < config.p_crossover + config.p_mutation:
            nxt.append(subtree_mutation(parent, init, n_features, rng, max_depth))
        else:
            nxt.append(parent)
    return nxt


def evolve_tree_population(
    config: EvoConfig,
    fitness,
    n_features: int,
    rng: np.random.Generator,
    init: TreeInitConfig | None = None,
    max_depth: int | None = None,
) -> EvolutionTrace:
    """Generational tree evolution; generation 0 is the initial random population."""
    init = init or TreeInitConfig()
    max_depth = init.max_depth if max_depth is None else max_depth
    population = [random_tree(init, n_features, rng) for _ in range(config.n_pop)]
    trace = EvolutionTrace()
    carried: dict[int, float] = {}
    for gen in range(config.n_gens):
        losses = []
        for ind in population:
            loss = carried.get(id(ind))
            if loss is None:
                loss = _quarantine(fitness(ind))
            losses.append(loss)
        best = _argmin_lowest_index(losses)
        trace.record(gen, losses[best], population[best])
        if gen == config.n_gens - 1:
            break
        # Offspring produced by reproduction or a depth-safe fallback are the
        # same immutable objects as their parents; their losses carry over.
        carried = dict(zip(map(id, population), losses))
        population = breed_tree_population(
            population, losses, config, init, n_features, rng, max_depth
        )
    return trace


def evolve_one_plus_lambda(
    config: EvoConfig,
    fitness,
    cgp_config: CgpConfig,
    rng: np.random.Generator,
) -> EvolutionTrace:
    """(1+lambda) evolution from a single random genome.

    Each generation creates lambda_ point-mutated offspring; the best offspring
    replaces the parent whenever its loss is less than or equal to the parent's
    (a draw prefers the offspring). Generation 0 records the initial parent.
    Offspring whose mutated gene cannot influence the output inherit the
    parent's loss without re-evaluation.
    """
    parent = random_genome(cgp_config, rng)
    parent_loss = _quarantine(fitness(parent))
    parent_active = set(decode_active(parent))
    trace = EvolutionTrace()
    trace.record(0, parent_loss, parent)
    for gen in range(1, config.maxiter + 1):
        offspring = []
        losses = []
        for _ in range(config.lambda_):
            child, pos = point_mutate_traced(parent, rng)
            offspring.append(child)
            if mutation_is_neutral(parent, pos, parent_active):
                losses.append(parent_loss)
            else:
                losses.append(_quarantine(fitness(child)))
        best = _argmin_lowest_index(losses)
        if losses[best] <= parent_loss:
            parent, parent_loss = offspring[best], losses[best]
            parent_active = set(decode_active(parent))
        trace.record(gen, parent_loss, parent)
    return trace
