"""Genetic search over DD strategies: selection, identity-preserving
crossover and mutation, the 1/4-3/4 survivor rule, dynamic mutation
probability, the training loop, and the initial-population exploration
simulation.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .pauli import PauliFrame, PulseLabel, completion_frame, frame_product
from .scheduler import GateTimingModel, ScheduledCircuit, find_idle_gaps, insert_dd
from .strategy import (
    ColorAssignment,
    DDSequence,
    DDStrategy,
    Population,
    uniform_initial_population,
)

__all__ = [
    "GAConfig",
    "IterationRecord",
    "TrainingResult",
    "NoInsertableGaps",
    "selection_weights",
    "selection_probabilities",
    "crossover",
    "mutate",
    "strategy_crossover",
    "next_generation",
    "update_mutation_prob",
    "evolve",
    "run_gadd",
    "simulate_exploration",
]


class NoInsertableGaps(ValueError):
    """The training circuit admits no DD at the configured sequence length."""


@dataclass(frozen=True)
class GAConfig:
    population_size: int = 16
    sequence_length: int = 8
    iterations: int = 20
    shots: int = 2000
    mutation_prob_init: float = 0.7
    mutation_step: float = 0.1
    mutation_bounds: tuple[float, float] = (0.1, 0.9)
    equilibrium_statistic: str = "range"  # or "stddev"
    far_threshold: float = 0.15
    close_threshold: float = 0.03
    mutation_direction: str = "paper"  # or "inverted"
    utility_target: float | None = None
    seed: int = 0

    def __post_init__(self):
        if self.population_size % 4:
            raise ValueError("population size must be divisible by 4")
        lo, hi = self.mutation_bounds
        if not (0.0 < lo <= self.mutation_prob_init <= hi < 1.0):
            raise ValueError("need 0 < low <= init <= high < 1 for mutation bounds")
        if not (self.far_threshold > self.close_threshold >= 0.0):
            raise ValueError("need far_threshold > close_threshold >= 0")
        if self.equilibrium_statistic not in ("range", "stddev"):
            raise ValueError("equilibrium_statistic must be 'range' or 'stddev'")
        if self.mutation_direction not in ("paper", "inverted"):
            raise ValueError("mutation_direction must be 'paper' or 'inverted'")


def _rng(master_seed: int, *key: int) -> np.random.Generator:
    """Stream derived from (master seed, structured key): resume-safe."""
    return np.random.default_rng(np.random.SeedSequence([int(master_seed), *key]))


def eval_seed(master_seed: int, generation: int, index: int) -> np.random.SeedSequence:
    """Per-(generation, strategy) evaluation seed, worker-count independent."""
    return np.random.SeedSequence([int(master_seed), 2, int(generation), int(index)])


def selection_weights(utilities: Sequence[float]) -> list[float]:
    """Reproduction weights log(10*u + 1) on [0,1]-normalized utilities."""
    u = np.asarray(utilities, dtype=float)
    if u.size and (u.min() < 0.0 or u.max() > 1.0):
        span = u.max() - u.min()
        u = (u - u.min()) / span if span > 0 else np.zeros_like(u)
    return [float(w) for w in np.log(10.0 * u + 1.0)]


def selection_probabilities(utilities: Sequence[float]) -> np.ndarray:
    w = np.asarray(selection_weights(utilities))
    total = w.sum()
    if total <= 0.0:
        return np.full(len(w), 1.0 / len(w))
    return w / total


def crossover(
    a: DDSequence, b: DDSequence, rng: np.random.Generator
) -> tuple[DDSequence, DDSequence]:
    """Single-site crossover with a completion pulse at the cut.

    Site l is uniform in 1..L; each child takes one parent's prefix, the
    other's suffix, and at site l the unique frame restoring the identity
    product (sign chosen uniformly).
    """
    length = len(a)
    if len(b) != length:
        raise ValueError("parents must share one length")
    cut = int(rng.integers(1, length + 1))
    s1 = int(rng.integers(2))
    s2 = int(rng.integers(2))

    def child(prefix, suffix, sign_bit):
        comp = completion_frame(frame_product(prefix), frame_product(suffix))
        label = PulseLabel((int(comp) << 1) | sign_bit)
        return DDSequence(tuple(prefix) + (label,) + tuple(suffix))

    c1 = child(a.pulses[: cut - 1], b.pulses[cut:], s1)
    c2 = child(b.pulses[: cut - 1], a.pulses[cut:], s2)
    return c1, c2


def mutate(seq: DDSequence, prob: float, rng: np.random.Generator) -> DDSequence:
    """With probability `prob`, resample one site uniformly and repair a
    second (distinct) site to restore the identity frame product."""
    if not (0.0 <= prob <= 1.0):
        raise ValueError("prob must lie in [0, 1]")
    if rng.random() >= prob:
        return seq
    length = len(seq)
    l1 = int(rng.integers(length))
    l2 = (l1 + 1 + int(rng.integers(length - 1))) % length
    new_label = PulseLabel(int(rng.integers(8)))
    sign = int(rng.integers(2))
    pulses = list(seq.pulses)
    pulses[l1] = new_label
    others = frame_product(p for i, p in enumerate(pulses) if i != l2)
    pulses[l2] = PulseLabel((int(others) << 1) | sign)
    return DDSequence(tuple(pulses))


def strategy_crossover(
    a: DDStrategy, b: DDStrategy, rng: np.random.Generator
) -> tuple[DDStrategy, DDStrategy]:
    """Per-color crossover; the two single-color children are assigned to
    the two offspring in uniformly random order, independently per color."""
    if a.num_colors != b.num_colors or a.length != b.length:
        raise ValueError("parents must share colors and length")
    seqs1: list[DDSequence] = []
    seqs2: list[DDSequence] = []
    for c in range(a.num_colors):
        c1, c2 = crossover(a.sequences[c], b.sequences[c], rng)
        if rng.integers(2):
            c1, c2 = c2, c1
        seqs1.append(c1)
        seqs2.append(c2)
    return (
        DDStrategy(tuple(seqs1), a.timing_modes),
        DDStrategy(tuple(seqs2), a.timing_modes),
    )


def mutate_strategy(
    strategy: DDStrategy, prob: float, rng: np.random.Generator
) -> DDStrategy:
    return DDStrategy(
        tuple(mutate(seq, prob, rng) for seq in strategy.sequences),
        strategy.timing_modes,
    )


def next_generation(
    parents: Population,
    offspring: Sequence[DDStrategy],
    offspring_utilities: Sequence[float],
) -> Population:
    """Survivors: top K/4 parents plus top 3K/4 offspring, ties to lower index."""
    k = parents.size
    if parents.utilities is None:
        raise ValueError("parents must carry utilities")
    if len(offspring) != 2 * k or len(offspring_utilities) != 2 * k:
        raise ValueError(f"expected 2K = {2 * k} offspring with utilities")
    top_parents = sorted(range(k), key=lambda i: (-parents.utilities[i], i))[: k // 4]
    top_offspring = sorted(
        range(2 * k), key=lambda i: (-offspring_utilities[i], i)
    )[: 3 * k // 4]
    strategies = [parents.strategies[i] for i in top_parents] + [
        offspring[i] for i in top_offspring
    ]
    utilities = [parents.utilities[i] for i in top_parents] + [
        offspring_utilities[i] for i in top_offspring
    ]
    return Population(
        strategies=strategies, utilities=utilities, generation=parents.generation + 1
    )


def update_mutation_prob(current: float, statistic: float, config: GAConfig) -> float:
    """Step the mutation probability on the equilibrium proxy and clamp.

    In the default direction the probability rises when the population looks
    far from equilibrium (large utility spread) and falls when close;
    `mutation_direction="inverted"` swaps the responses.
    """
    lo, hi = config.mutation_bounds
    step = config.mutation_step
    if config.mutation_direction == "inverted":
        step = -step
    out = current
    if statistic > config.far_threshold:
        out = current + step
    elif statistic < config.close_threshold:
        out = current - step
    return min(max(out, lo), hi)


def _equilibrium_statistic(utilities: Sequence[float], config: GAConfig) -> float:
    u = np.asarray(utilities, dtype=float)
    if config.equilibrium_statistic == "stddev":
        return float(u.std())
    return float(u.max() - u.min())


@dataclass
class IterationRecord:
    iteration: int
    mutation_prob: float
    best_utility: float
    population: list[str]
    utilities: list[float]
    parents: list[str] | None = None
    parent_utilities: list[float] | None = None
    offspring: list[str] | None = None
    offspring_utilities: list[float] | None = None

    def to_json_dict(self) -> dict:
        return {
            "iteration": self.iteration,
            "mutation_prob": self.mutation_prob,
            "best_utility": self.best_utility,
            "population": self.population,
            "utilities": self.utilities,
            "parents": self.parents,
            "parent_utilities": self.parent_utilities,
            "offspring": self.offspring,
            "offspring_utilities": self.offspring_utilities,
        }


@dataclass
class TrainingResult:
    records: list[IterationRecord]
    final_population: Population
    best_strategy: DDStrategy
    best_utility: float
    master_seed: int

    @property
    def best_utility_trace(self) -> list[float]:
        return [r.best_utility for r in self.records]


EvalBatch = Callable[[Sequence[DDStrategy], int, int], list[float]]


def evolve(
    eval_batch: EvalBatch,
    config: GAConfig,
    num_colors: int,
    initial_population: Population | None = None,
    initial_mutation_prob: float | None = None,
    on_iteration: Callable[[IterationRecord], None] | None = None,
) -> TrainingResult:
    """Core GA loop over an arbitrary strategy evaluator.

    `eval_batch(strategies, generation, index_offset)` returns one utility
    in [0,1] per strategy; parents re-measure every iteration.  All
    randomness derives from (config.seed, iteration), so resuming from any
    generation reproduces the uninterrupted run.
    """
    k = config.population_size
    if initial_population is None:
        pop = uniform_initial_population(
            k, config.sequence_length, np.random.SeedSequence([config.seed, 0]), num_colors
        )
        pop.utilities = [float(u) for u in eval_batch(pop.strategies, 0, 0)]
    else:
        pop = initial_population
        if pop.utilities is None:
            pop.utilities = [float(u) for u in eval_batch(pop.strategies, pop.generation, 0)]
    mut_prob = (
        config.mutation_prob_init if initial_mutation_prob is None else initial_mutation_prob
    )

    records = [
        IterationRecord(
            iteration=pop.generation,
            mutation_prob=mut_prob,
            best_utility=max(pop.utilities),
            population=[s.serialize() for s in pop.strategies],
            utilities=list(pop.utilities),
        )
    ]
    if on_iteration is not None:
        on_iteration(records[0])

    for it in range(pop.generation + 1, config.iterations + 1):
        if config.utility_target is not None and max(pop.utilities) >= config.utility_target:
            break
        rng = _rng(config.seed, 1, it)
        probs = selection_probabilities(pop.utilities)
        pair_idx = rng.choice(k, size=(k, 2), replace=True, p=probs)
        offspring: list[DDStrategy] = []
        for i, j in pair_idx:
            o1, o2 = strategy_crossover(pop.strategies[i], pop.strategies[j], rng)
            offspring.append(mutate_strategy(o1, mut_prob, rng))
            offspring.append(mutate_strategy(o2, mut_prob, rng))
        for child in offspring:
            for seq in child.sequences:
                assert frame_product(seq.pulses) is PauliFrame.I

        parent_utils = [float(u) for u in eval_batch(pop.strategies, it, 0)]
        off_utils = [float(u) for u in eval_batch(offspring, it, k)]
        evaluated_parents = Population(
            strategies=pop.strategies, utilities=parent_utils, generation=pop.generation
        )
        new_pop = next_generation(evaluated_parents, offspring, off_utils)
        stat = _equilibrium_statistic(new_pop.utilities, config)
        new_prob = update_mutation_prob(mut_prob, stat, config)

        records.append(
            IterationRecord(
                iteration=it,
                mutation_prob=new_prob,
                best_utility=max(new_pop.utilities),
                population=[s.serialize() for s in new_pop.strategies],
                utilities=list(new_pop.utilities),
                parents=[s.serialize() for s in pop.strategies],
                parent_utilities=parent_utils,
                offspring=[s.serialize() for s in offspring],
                offspring_utilities=off_utils,
            )
        )
        if on_iteration is not None:
            on_iteration(records[-1])
        pop, mut_prob = new_pop, new_prob

    best_strategy, best_utility = pop.best()
    return TrainingResult(
        records=records,
        final_population=pop,
        best_strategy=best_strategy,
        best_utility=best_utility,
        master_seed=config.seed,
    )


def run_gadd(
    training_circuits: ScheduledCircuit | Sequence[ScheduledCircuit],
    utility_fn: Callable,
    backend,
    coloring: ColorAssignment,
    config: GAConfig,
    timing: GateTimingModel | None = None,
    initial_population: Population | None = None,
    initial_mutation_prob: float | None = None,
    on_iteration: Callable[[IterationRecord], None] | None = None,
) -> TrainingResult:
    """Full training loop: insert each strategy into the training circuits,
    execute on the backend, score with `utility_fn(counts_list)`, evolve.

    Raises NoInsertableGaps when no training circuit has a gap long enough
    for the configured sequence length.
    """
    timing = timing or GateTimingModel()
    circuits = (
        [training_circuits]
        if isinstance(training_circuits, ScheduledCircuit)
        else list(training_circuits)
    )
    min_gap = config.sequence_length * timing.pulse_duration
    if not any(find_idle_gaps(c, min_gap) for c in circuits):
        raise NoInsertableGaps(
            f"no idle gap of at least {min_gap} ns in any training circuit"
        )
    num_colors = max(
        coloring.color_of(q) for c in circuits for q in range(c.num_qubits)
    )

    def eval_batch(strategies, generation, index_offset):
        utilities = []
        for i, strat in enumerate(strategies):
            dd_circuits = [insert_dd(c, strat, coloring, timing) for c in circuits]
            seed = eval_seed(config.seed, generation, index_offset + i)
            counts = backend.submit(dd_circuits, config.shots, seed)
            u = float(utility_fn(counts))
            if not (0.0 <= u <= 1.0):
                raise ValueError(f"utility {u} outside [0, 1]")
            utilities.append(u)
        return utilities

    return evolve(
        eval_batch,
        config,
        num_colors,
        initial_population=initial_population,
        initial_mutation_prob=initial_mutation_prob,
        on_iteration=on_iteration,
    )


# --------------------------------------------------------------------------
# exploration simulation (uniform vs random initial populations)
# --------------------------------------------------------------------------


def _pack(codes: np.ndarray) -> np.ndarray:
    weights = (np.int64(8) ** np.arange(codes.shape[1], dtype=np.int64))
    return codes.astype(np.int64) @ weights


def _hash_uniform(keys: np.ndarray, salt: int) -> np.ndarray:
    """Persistent pseudo-random utility in [0,1) per packed sequence key."""
    x = keys.astype(np.uint64) ^ np.uint64(salt)
    x = (x ^ (x >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    x = (x ^ (x >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    x = x ^ (x >> np.uint64(31))
    return x.astype(np.float64) / float(2**64)


def _random_identity_codes(count: int, length: int, rng: np.random.Generator) -> np.ndarray:
    codes = rng.integers(0, 8, size=(count, length), dtype=np.uint8)
    frames = codes >> 1
    residual = np.bitwise_xor.reduce(frames[:, :-1], axis=1)
    sign = rng.integers(0, 2, size=count, dtype=np.uint8)
    codes[:, -1] = (residual << 1) | sign
    return codes


def _crossover_batch(
    pop: np.ndarray, rng: np.random.Generator, mutation_prob: float
) -> np.ndarray:
    """All-pairs reproduction plus mutation, fully vectorized."""
    p, length = pop.shape
    ii, jj = np.triu_indices(p, k=1)
    a, b = pop[ii], pop[jj]
    npairs = a.shape[0]
    cuts = rng.integers(1, length + 1, size=npairs)
    cols = np.arange(length)[None, :]

    frames_a = a >> 1
    frames_b = b >> 1
    pax = np.bitwise_xor.accumulate(frames_a, axis=1)
    pbx = np.bitwise_xor.accumulate(frames_b, axis=1)

    def children(first, second, pfx_first, pfx_second):
        # Prefix from `first`, suffix from `second`, completion at cut-1.
        # The completion inherits the prefix donor's sign at the cut site, so
        # a fully converged population reproduces itself exactly.
        child = np.where(cols < (cuts - 1)[:, None], first, second)
        pre = np.where(cuts >= 2, np.take_along_axis(pfx_first, (cuts - 2)[:, None].clip(0), axis=1)[:, 0], 0)
        # suffix xor of an identity-product row equals its inclusive prefix
        suf = np.take_along_axis(pfx_second, (cuts - 1)[:, None], axis=1)[:, 0]
        comp = (pre ^ suf).astype(np.uint8)
        sign = (np.take_along_axis(first, (cuts - 1)[:, None], axis=1)[:, 0] & 1).astype(np.uint8)
        np.put_along_axis(child, (cuts - 1)[:, None], ((comp << 1) | sign)[:, None], axis=1)
        return child

    c1 = children(a, b, pax, pbx)
    c2 = children(b, a, pbx, pax)
    out = np.concatenate([c1, c2], axis=0)

    nkids = out.shape[0]
    do_mut = rng.random(nkids) < mutation_prob
    l1 = rng.integers(0, length, size=nkids)
    l2 = (l1 + 1 + rng.integers(0, length - 1, size=nkids)) % length
    new_label = rng.integers(0, 8, size=nkids, dtype=np.uint8)
    rows = np.flatnonzero(do_mut)
    if rows.size:
        out[rows, l1[rows]] = new_label[rows]
        frames = out[rows] >> 1
        total = np.bitwise_xor.reduce(frames, axis=1)
        cur_label = out[rows, l2[rows]]
        needed = (total ^ (cur_label >> 1)).astype(np.uint8)
        out[rows, l2[rows]] = (needed << 1) | (cur_label & 1)
    return out


def simulate_exploration(
    init: str = "uniform",
    mutation_probs: Sequence[float] = (0.1, 0.3, 0.5, 0.7, 0.9),
    trials: int = 25,
    iterations: int = 7,
    seed: int = 0,
    init_size: int = 16,
    length: int = 8,
    pool_size: int = 100,
) -> dict:
    """Landscape-agnostic exploration of the single-color sequence space.

    Per trial: build a uniform (site-balanced) or random initial population,
    assign every distinct sequence a persistent pseudo-random utility, cross
    all population pairs each iteration, count the cumulative distinct
    sequences encountered, and keep a uniform random sample of `pool_size`
    offspring as the next population.  Returns per-iteration means over
    trials of the distinct-sequence count (plus the best landscape utility
    stumbled upon, as a diagnostic).
    """
    modes = [init] if init in ("uniform", "random") else ["uniform", "random"]
    out: dict = {
        "iterations": iterations,
        "trials": trials,
        "mutation_probs": [float(p) for p in mutation_probs],
        "modes": {},
    }
    for mode in modes:
        per_prob: dict[str, list[float]] = {}
        per_prob_util: dict[str, list[float]] = {}
        for prob in mutation_probs:
            uniq_acc = np.zeros(iterations)
            util_acc = np.zeros(iterations)
            for trial in range(trials):
                rng = _rng(seed, 3, modes.index(mode), int(round(prob * 1000)), trial)
                salt = int(rng.integers(2**62))
                if mode == "uniform":
                    from .strategy import _balanced_l8_codes

                    pop = _balanced_l8_codes(init_size, rng)
                else:
                    pop = _random_identity_codes(init_size, length, rng)
                seen: set[int] = set(_pack(pop).tolist())
                best_util = float(_hash_uniform(_pack(pop), salt).max())
                for it in range(iterations):
                    kids = _crossover_batch(pop, rng, float(prob))
                    keys = _pack(kids)
                    seen.update(keys.tolist())
                    best_util = max(best_util, float(_hash_uniform(keys, salt).max()))
                    uniq_acc[it] += len(seen)
                    util_acc[it] += best_util
                    if kids.shape[0] > pool_size:
                        pick = rng.choice(kids.shape[0], size=pool_size, replace=False)
                        pop = kids[pick]
                    else:
                        pop = kids
            key = f"{float(prob):g}"
            per_prob[key] = (uniq_acc / trials).tolist()
            per_prob_util[key] = (util_acc / trials).tolist()
        out["modes"][mode] = {
            "unique_strategies": per_prob,
            "best_landscape_utility": per_prob_util,
        }
    return out
