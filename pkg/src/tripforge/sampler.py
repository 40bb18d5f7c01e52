"""Annealed Metropolis-Hastings over per-demand route choices.

Each proposal changes one demand's route, drawn from its candidate weights
restricted to the non-current candidates.  Acceptance compares objective
values on a log scale with the temperature exponent, so improving moves are
always accepted and the exponent 1/L never overflows.  The temperature decays
once per sweep (one sweep = one proposal per demand on average), keeping
schedules comparable across demand sizes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .metrics import ChainState, MismatchSpec, apply_delta, delta_error


class FrozenChainError(RuntimeError):
    """Every candidate set is a singleton: no move can ever be proposed."""


@dataclass(frozen=True)
class AnnealingSchedule:
    l0: float = 1.0
    decay: float = 0.99
    l_min: float = 1e-3

    def __post_init__(self) -> None:
        if not 0.0 < self.decay <= 1.0:
            raise ValueError(f"decay must lie in (0, 1], got {self.decay}")
        if self.l_min <= 0.0:
            raise ValueError("l_min must be positive")
        if self.l0 < self.l_min:
            raise ValueError("l0 must be at least l_min")


@dataclass(frozen=True)
class SamplerConfig:
    iterations: int
    schedule: AnnealingSchedule = AnnealingSchedule()
    seed: int = 0
    checkpoint_every: int = 25_000
    epsilon: float = 1e-9

    def __post_init__(self) -> None:
        if self.iterations < 0:
            raise ValueError("iterations must be >= 0")
        if self.checkpoint_every < 1:
            raise ValueError("checkpoint_every must be >= 1")
        if self.epsilon <= 0.0:
            raise ValueError("epsilon must be positive")


@dataclass(frozen=True)
class Checkpoint:
    iteration: int
    error: float
    best_error: float
    acceptance_rate: float
    temperature: float


@dataclass(frozen=True)
class RunTrace:
    checkpoints: tuple[Checkpoint, ...]
    final_state: ChainState
    best_state: ChainState

    @property
    def initial_error(self) -> float:
        return self.checkpoints[0].error

    @property
    def best_error(self) -> float:
        return self.best_state.cached_error


def draw_assignment(candidate_sets, seed: int) -> np.ndarray:
    """One candidate index per demand, drawn independently from the candidate
    weights; the seed fixes the draw."""
    rng = np.random.default_rng(seed)
    assignment = np.empty(len(candidate_sets), dtype=np.int64)
    for j, cs in enumerate(candidate_sets):
        assignment[j] = _weighted_draw(cs.weights, rng.random())
    return assignment


def initialize(candidate_sets, spec: MismatchSpec, seed: int) -> ChainState:
    """Draw each demand's route independently from its candidate weights and
    build the chain state with caches computed from scratch."""
    candidate_sets = list(candidate_sets)
    return ChainState(candidate_sets, spec, draw_assignment(candidate_sets, seed))


def _weighted_draw(weights, u: float) -> int:
    acc = 0.0
    last = len(weights) - 1
    for i, w in enumerate(weights):
        acc += w
        if u < acc:
            return i
    return last


def propose(state: ChainState, candidate_sets, rng) -> tuple[int, int, float]:
    """One single-variable proposal.

    Picks a demand uniformly among those with >= 2 candidates, then a
    candidate different from the current one, drawn from the set's weights
    renormalized over the non-current candidates.  Returns (demand index,
    candidate index, Pr(candidate)/Pr(current) from the candidate weights).
    """
    eligible = state.eligible
    if len(eligible) == 0:
        raise FrozenChainError("all candidate sets are singletons; chain cannot move")
    j = int(eligible[rng.integers(0, len(eligible))])
    weights = state.weights[j]
    cur = int(state.assignment[j])
    w_cur = weights[cur]
    u = rng.random() * (1.0 - w_cur)
    acc = 0.0
    cand = -1
    for i, w in enumerate(weights):
        if i == cur:
            continue
        acc += w
        cand = i
        if u < acc:
            break
    return j, cand, weights[cand] / w_cur


def acceptance_probability(
    err_curr: float,
    err_cand: float,
    weight_ratio: float,
    temperature: float,
    epsilon: float = 1e-9,
) -> float:
    """min{1, weight_ratio * ((err_curr + eps)/(err_cand + eps))^(1/L)}.

    weight_ratio is the proposal correction q(current | candidate) /
    q(candidate | current).  Evaluated in log space: the exponent is only
    exponentiated when the log is <= 0, so large 1/L cannot overflow.
    """
    if temperature <= 0.0:
        raise ValueError("temperature must be positive")
    if weight_ratio <= 0.0:
        raise ValueError("weight_ratio must be positive")
    log_alpha = math.log(weight_ratio) + (
        math.log(err_curr + epsilon) - math.log(err_cand + epsilon)
    ) / temperature
    if log_alpha >= 0.0:
        return 1.0
    return math.exp(log_alpha)


def run(candidate_sets, spec: MismatchSpec, config: SamplerConfig) -> RunTrace:
    """Execute the annealed sampling loop and return the full trace.

    Deterministic for fixed inputs and seed.  best_state tracks the lowest
    error seen anywhere along the chain.
    """
    candidate_sets = list(candidate_sets)
    state = initialize(candidate_sets, spec, config.seed)
    # The proposal stream is spawned off the seed so it never replays the
    # initialization draws.
    rng = np.random.default_rng(np.random.SeedSequence(config.seed, spawn_key=(1,)))

    schedule = config.schedule
    temperature = schedule.l0
    n = state.n
    eps = config.epsilon

    best_error = state.cached_error
    best_assignment = state.assignment.copy()

    checkpoints: list[Checkpoint] = []
    accepted_window = 0
    proposed_window = 0

    def record(iteration: int) -> None:
        nonlocal accepted_window, proposed_window
        rate = accepted_window / proposed_window if proposed_window else 0.0
        checkpoints.append(
            Checkpoint(
                iteration=iteration,
                error=state.cached_error,
                best_error=best_error,
                acceptance_rate=rate,
                temperature=temperature,
            )
        )
        accepted_window = 0
        proposed_window = 0

    record(0)
    for it in range(1, config.iterations + 1):
        j, cand, _ = propose(state, candidate_sets, rng)
        weights = state.weights[j]
        w_cur = weights[int(state.assignment[j])]
        w_new = weights[cand]
        # Exact correction for the restricted kernel: candidates are drawn
        # from the set weights excluding the current one, renormalized.
        q_ratio = (w_cur * (1.0 - w_cur)) / (w_new * (1.0 - w_new))
        err_cand, delta = delta_error(state, j, cand)
        alpha = acceptance_probability(state.cached_error, err_cand, q_ratio, temperature, eps)
        proposed_window += 1
        if rng.random() < alpha:
            apply_delta(state, delta)
            accepted_window += 1
            if state.cached_error < best_error:
                best_error = state.cached_error
                best_assignment[:] = state.assignment
        if it % n == 0:
            temperature = max(schedule.l_min, temperature * schedule.decay)
        if it % config.checkpoint_every == 0 or it == config.iterations:
            record(it)

    best_state = ChainState(candidate_sets, spec, best_assignment)
    return RunTrace(
        checkpoints=tuple(checkpoints),
        final_state=state,
        best_state=best_state,
    )
