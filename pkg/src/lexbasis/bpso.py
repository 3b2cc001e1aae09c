"""Cardinality-constrained binary particle swarm optimization.

Particles carry bit masks over context-word columns; the objective is the
summed squared distortion of pairwise training-row cosines when the matrix
is restricted to the masked columns. Every particle keeps exactly n_select
bits set: after the stochastic position update, a greedy sigmoid-ranked
repair zeroes surplus ones (lowest sigmoid first) or sets missing ones
(highest sigmoid first), ties falling to the lower index.

Random draw order, per run: for each particle in turn, an initial position
permutation then an initial velocity vector; afterwards, for every iteration
and particle, r1 and r2 (one uniform per bit each), then the position draw
(one uniform per bit). gbest is synchronized once per iteration, so velocity
updates within an iteration all see the previous iteration's gbest.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from .matrix import SparseMatrix

Observer = Callable[[int, np.ndarray, float], None]


@dataclass(frozen=True)
class SwarmConfig:
    n_select: int
    population: int = 30
    iterations: int = 20
    inertia: float = 0.7
    cognitive: float = 0.15
    social: float = 0.15
    v_max: float = 4.0
    seed: int = 0

    def __post_init__(self):
        if self.n_select < 1:
            raise ValueError("n_select must be >= 1")
        if self.population < 1:
            raise ValueError("population must be >= 1")
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if self.v_max <= 0:
            raise ValueError("v_max must be positive")


@dataclass
class Particle:
    position: np.ndarray
    velocity: np.ndarray
    pbest_position: np.ndarray
    pbest_value: float


class ObjectiveEvaluator:
    """Cosine-distortion objective over the training rows of a sparse matrix.

    The unmasked pairwise cosines are precomputed once through the same code
    path used for masked ones, so the all-ones mask scores exactly 0.0.
    """

    def __init__(self, train: SparseMatrix):
        self.col_keys = train.col_keys
        self.n_cols = train.n_cols
        self._w = train.to_dense()
        self.base = self._cosines(np.ones(self.n_cols, dtype=bool))

    def _cosines(self, keep: np.ndarray) -> np.ndarray:
        m = self._w[:, keep]
        gram = m @ m.T
        norms = np.sqrt(np.diag(gram).copy())
        denom = np.outer(norms, norms)
        return np.divide(gram, denom, out=np.zeros_like(gram), where=denom > 0)

    def __call__(self, bits: np.ndarray) -> float:
        masked = self._cosines(np.asarray(bits) != 0)
        diff = self.base - masked
        sq = diff * diff
        return float((sq.sum() - np.trace(sq)) / 2.0)

    def selected_words(self, bits: np.ndarray) -> list[str]:
        return sorted(k for k, b in zip(self.col_keys, bits) if b)


def sigmoid(v: np.ndarray) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(-v))


def repair(bits: np.ndarray, velocity: np.ndarray, n_select: int) -> np.ndarray:
    """Force exactly n_select ones, steering by the velocity sigmoid."""
    bits = bits.astype(np.float64).copy()
    sig = sigmoid(velocity)
    ones = np.flatnonzero(bits == 1)
    count = len(ones)
    if count > n_select:
        order = np.lexsort((ones, sig[ones]))  # lowest sigmoid, then lowest index
        bits[ones[order[: count - n_select]]] = 0.0
    elif count < n_select:
        zeros = np.flatnonzero(bits == 0)
        order = np.lexsort((zeros, -sig[zeros]))  # highest sigmoid, then lowest index
        bits[zeros[order[: n_select - count]]] = 1.0
    return bits


def step_velocity(p: Particle, gbest: np.ndarray, cfg: SwarmConfig,
                  rng: np.random.Generator) -> np.ndarray:
    """Inertia + cognitive pull to pbest + social pull to gbest, with fresh
    uniform r1/r2 per bit, clamped to [-v_max, v_max]."""
    r1 = rng.random(len(p.position))
    r2 = rng.random(len(p.position))
    v = (cfg.inertia * p.velocity
         + cfg.cognitive * r1 * (p.pbest_position - p.position)
         + cfg.social * r2 * (gbest - p.position))
    return np.clip(v, -cfg.v_max, cfg.v_max)


def step_position(p: Particle, cfg: SwarmConfig, rng: np.random.Generator) -> np.ndarray:
    """Sigmoid-Bernoulli resample of every bit, then cardinality repair."""
    draws = rng.random(len(p.position))
    tentative = (draws < sigmoid(p.velocity)).astype(np.float64)
    return repair(tentative, p.velocity, cfg.n_select)


@dataclass
class BPSOResult:
    bits: np.ndarray
    value: float
    trace: list[float]  # gbest value after init (index 0) and each iteration
    selected: list[str]


def run_bpso(train: SparseMatrix, cfg: SwarmConfig,
             observer: Optional[Observer] = None,
             evaluator: Optional[ObjectiveEvaluator] = None) -> BPSOResult:
    """Run one seeded swarm; returns the best mask, its objective value, and
    the per-iteration gbest trace.

    The observer, when given, is called after initialization and after every
    iteration with (iteration, particle positions as an NP x n_cols array,
    gbest value); iteration 0 is the initialized swarm.
    """
    if evaluator is None:
        evaluator = ObjectiveEvaluator(train)
    n_cols = evaluator.n_cols
    if cfg.n_select > n_cols:
        raise ValueError(f"n_select={cfg.n_select} exceeds {n_cols} context columns")

    rng = np.random.default_rng(cfg.seed)
    particles: list[Particle] = []
    for _ in range(cfg.population):
        bits = np.zeros(n_cols)
        bits[rng.permutation(n_cols)[: cfg.n_select]] = 1.0
        velocity = rng.uniform(-1.0, 1.0, n_cols)
        value = evaluator(bits)
        particles.append(Particle(position=bits, velocity=velocity,
                                  pbest_position=bits.copy(), pbest_value=value))

    gbest_idx = int(np.argmin([p.pbest_value for p in particles]))
    gbest_position = particles[gbest_idx].pbest_position.copy()
    gbest_value = particles[gbest_idx].pbest_value
    trace = [gbest_value]
    if observer is not None:
        observer(0, np.stack([p.position for p in particles]), gbest_value)

    for iteration in range(1, cfg.iterations + 1):
        for p in particles:
            p.velocity = step_velocity(p, gbest_position, cfg, rng)
            p.position = step_position(p, cfg, rng)
            value = evaluator(p.position)
            if value < p.pbest_value:
                p.pbest_value = value
                p.pbest_position = p.position.copy()
        best = int(np.argmin([p.pbest_value for p in particles]))
        if particles[best].pbest_value < gbest_value:
            gbest_value = particles[best].pbest_value
            gbest_position = particles[best].pbest_position.copy()
        trace.append(gbest_value)
        if observer is not None:
            observer(iteration, np.stack([p.position for p in particles]), gbest_value)

    return BPSOResult(bits=gbest_position, value=gbest_value, trace=trace,
                      selected=evaluator.selected_words(gbest_position))


def intersect_best(results: Sequence[tuple[float, Iterable[str]]],
                   n_keep: int) -> frozenset:
    """Intersection of the word sets of the n_keep lowest-value runs; ties
    keep the earlier run."""
    if n_keep < 1 or n_keep > len(results):
        raise ValueError(f"n_keep must be in [1, {len(results)}]")
    order = sorted(range(len(results)), key=lambda i: (results[i][0], i))
    golden = set(results[order[0]][1])
    for i in order[1:n_keep]:
        golden &= set(results[i][1])
    return frozenset(golden)


@dataclass
class GoldenResult:
    golden: frozenset
    run_values: list[float]
    kept_runs: list[int]


def extract_golden(train: SparseMatrix, cfg: SwarmConfig, n_runs: int = 20,
                   n_keep: int = 3) -> GoldenResult:
    """Multi-run golden-word extraction: run the swarm n_runs times with
    seeds derived from cfg.seed, keep the n_keep best runs, and intersect
    their selected word sets.
    """
    if n_runs < n_keep:
        raise ValueError(f"n_runs={n_runs} must be >= n_keep={n_keep}")
    evaluator = ObjectiveEvaluator(train)
    children = np.random.SeedSequence(cfg.seed).spawn(n_runs)
    results: list[tuple[float, list[str]]] = []
    for child in children:
        run_seed = int(child.generate_state(1)[0])
        run_cfg = dataclasses.replace(cfg, seed=run_seed)
        out = run_bpso(train, run_cfg, evaluator=evaluator)
        results.append((out.value, out.selected))
    order = sorted(range(n_runs), key=lambda i: (results[i][0], i))
    return GoldenResult(golden=intersect_best(results, n_keep),
                        run_values=[v for v, _ in results],
                        kept_runs=order[:n_keep])


def common_golden(g1: Iterable[str], g2: Iterable[str]) -> frozenset:
    return frozenset(g1) & frozenset(g2)
