"""Monte Carlo simulation of the state-transformation game.

Victor draws g from the prior and hands over N copies of the input state.
The strategy either declares failure or returns an output, which Victor tests
with the projector on the M-copy target state; the pass is a Bernoulli draw
with the fidelity as success probability.
"""

from __future__ import annotations

import dataclasses
import logging
import math
from collections.abc import Callable
from dataclasses import dataclass

import numpy as np

from .benchmarks import EnsembleSpec
from .ensembles import GroupPoint, overlap_sq, sample_prior, state_vector, target_overlap_sq
from .errors import ContractViolation
from .rng import SeededRNG
from .srm import QUBIT, SrmPovm

_LOGGER = logging.getLogger(__name__)

DEFAULT_CHUNK = 65_536


@dataclass(frozen=True)
class Strategy:
    """A probabilistic measure-and-prepare strategy.

    ``acceptance_fn(g)`` is the probability of a non-failure outcome and
    ``conditional_fidelity_fn(g, rng)`` the fidelity of the prepared output given
    success (the rng is for strategies with internal randomness).
    """

    name: str
    acceptance_fn: Callable[[GroupPoint], np.ndarray]
    conditional_fidelity_fn: Callable[[GroupPoint, SeededRNG], np.ndarray]


@dataclass(frozen=True)
class TrialBatch:
    seed: int
    trials: int
    successes: int
    fidelity_sum: float
    fidelity_sq_sum: float
    passes: int

    def __post_init__(self) -> None:
        if not 0 <= self.passes <= self.successes <= self.trials:
            raise ContractViolation(
                f"Inconsistent batch counts: passes={self.passes}, successes={self.successes}, "
                f"trials={self.trials}"
            )

    @property
    def conditional_fidelity(self) -> float:
        if self.successes == 0:
            return math.nan
        return self.fidelity_sum / self.successes

    @property
    def stderr(self) -> float:
        """Standard error of the exact-fidelity estimator."""
        n = self.successes
        if n < 2:
            return math.nan
        variance = (self.fidelity_sq_sum - self.fidelity_sum**2 / n) / (n - 1)
        return math.sqrt(max(variance, 0.0) / n)

    @property
    def success_rate(self) -> float:
        return self.successes / self.trials if self.trials else math.nan

    @property
    def pass_rate(self) -> float:
        if self.successes == 0:
            return math.nan
        return self.passes / self.successes

    @property
    def pass_stderr(self) -> float:
        if self.successes == 0:
            return math.nan
        p = self.pass_rate
        return math.sqrt(p * (1.0 - p) / self.successes)

    def merge(self, other: TrialBatch) -> TrialBatch:
        """Combine two batches; the result keeps this batch's seed."""
        return dataclasses.replace(
            self,
            trials=self.trials + other.trials,
            successes=self.successes + other.successes,
            fidelity_sum=self.fidelity_sum + other.fidelity_sum,
            fidelity_sq_sum=self.fidelity_sq_sum + other.fidelity_sq_sum,
            passes=self.passes + other.passes,
        )

    def as_dict(self) -> dict:
        return {
            "seed": self.seed,
            "trials": self.trials,
            "successes": self.successes,
            "success_rate": self.success_rate,
            "conditional_fidelity": self.conditional_fidelity,
            "stderr": self.stderr,
            "passes": self.passes,
            "pass_rate": self.pass_rate,
            "pass_stderr": self.pass_stderr,
            "fidelity_sum": self.fidelity_sum,
            "fidelity_sq_sum": self.fidelity_sq_sum,
        }


def _target_fidelity(spec: EnsembleSpec, g: GroupPoint) -> np.ndarray:
    overlap = np.atleast_1d(np.asarray(target_overlap_sq(spec.family, g), dtype=float))
    if spec.k_weights is None:
        return overlap**spec.M
    return sum(w * overlap**k for k, w in enumerate(spec.k_weights, start=1))


def optimal_mp_strategy(spec: EnsembleSpec) -> Strategy:
    """Project on the fiducial N-copy state; on "yes" prepare the fiducial target."""
    family = spec.family
    N = spec.N

    def acceptance(g: GroupPoint) -> np.ndarray:
        return np.atleast_1d(np.asarray(overlap_sq(family, g), dtype=float)) ** N

    return Strategy(
        name="optimal-mp",
        acceptance_fn=acceptance,
        conditional_fidelity_fn=lambda g, rng: _target_fidelity(spec, g),
    )


def srm_strategy_qubit(eta: float, N: int = 1, M: int = 1) -> Strategy:
    """Deterministic strategy: measure the η-SRM, re-prepare M copies of the outcome."""
    povm = SrmPovm(eta, N)

    def conditional_fidelity(g: GroupPoint, rng: SeededRNG) -> np.ndarray:
        outcome = povm.sample(g, rng)
        overlaps = np.sum(state_vector(QUBIT, g).conj() * state_vector(QUBIT, outcome), axis=1)
        return np.abs(overlaps) ** (2 * M)

    return Strategy(
        name="srm",
        acceptance_fn=lambda g: np.ones(len(g)),
        conditional_fidelity_fn=conditional_fidelity,
    )


def run_game(
    spec: EnsembleSpec,
    strategy: Strategy,
    trials: int,
    seed: int,
    worker: int = 0,
    chunk: int = DEFAULT_CHUNK,
) -> TrialBatch:
    """Play ``trials`` rounds on the stream (seed, worker)."""
    if trials < 1:
        raise ContractViolation(f"Trial count must be >= 1, got {trials}")
    rng = SeededRNG(seed).fork(worker)
    _LOGGER.debug("Running %d trials of %s on %s (seed=%s, worker=%s)", trials, strategy.name, spec, seed, worker)

    successes = passes = 0
    fidelity_sum = fidelity_sq_sum = 0.0
    remaining = trials
    while remaining:
        size = min(chunk, remaining)
        remaining -= size
        g = sample_prior(spec.prior, rng, size, bloch=True)
        acceptance = np.broadcast_to(np.asarray(strategy.acceptance_fn(g), dtype=float), (size,))
        accepted = rng.random(size) < acceptance
        if not np.any(accepted):
            continue
        fidelity = np.asarray(strategy.conditional_fidelity_fn(g.take(accepted), rng), dtype=float)
        if np.any(fidelity < -1e-12) or np.any(fidelity > 1 + 1e-12):
            raise ContractViolation(f"Strategy {strategy.name} returned a fidelity outside [0, 1]")
        passes += int(np.count_nonzero(rng.random(fidelity.size) < fidelity))
        successes += int(fidelity.size)
        fidelity_sum += float(np.sum(fidelity))
        fidelity_sq_sum += float(np.sum(fidelity**2))

    batch = TrialBatch(seed, trials, successes, fidelity_sum, fidelity_sq_sum, passes)
    _LOGGER.debug("Finished %s: %s", strategy.name, batch)
    return batch
