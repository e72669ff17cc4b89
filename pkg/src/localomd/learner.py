"""The local OMD learner: one stabilized entropic update per visited infoset per episode.

After each observed episode the learner walks its own decisions backwards. At every
visited infoset the chosen action receives the regularized loss
``(step loss + q from below) / sampling probability``; the stabilized update returns
the new local policy and the value ``q`` that is passed one level up.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .game import PLAYER_NAMES, GameSpec, Trajectory
from .omd import stabilized_update
from .sequence_form import (BehavioralPolicy, RealizationPlan, average_plans,
                            behavioral_from_plan, check_policy, kappa, realization_plan)

MATCH_TOL = 1e-12


# ------------------------------------------------------------ rate schedules

@dataclass(frozen=True)
class KappaScaled:
    """Constant per-infoset rates ``eta / kappa(x)`` (CLI name ``theorem4``)."""

    eta: float
    weights: np.ndarray  # kappa of the sampling policy at each infoset

    name = "theorem4"

    def __post_init__(self):
        _check_eta(self.eta)
        if np.any(np.asarray(self.weights) <= 0):
            raise ValueError("kappa weights must be positive")


@dataclass(frozen=True)
class VisitCount:
    """``1/eta(x) = sqrt(visits(x)) / eta`` (CLI name ``count``)."""

    eta: float
    name = "count"

    def __post_init__(self):
        _check_eta(self.eta)


@dataclass(frozen=True)
class LossAdaptive:
    """``1/eta(x) = sqrt(sum of squared regularized losses at x) / eta``, never decreasing."""

    eta: float
    name = "loss-adaptive"

    def __post_init__(self):
        _check_eta(self.eta)


RateSchedule = KappaScaled | VisitCount | LossAdaptive
SCHEDULE_NAMES = ("theorem4", "count", "loss-adaptive")


def _check_eta(eta: float) -> None:
    if not (eta > 0 and math.isfinite(eta)):
        raise ValueError(f"learning rate must be positive and finite, got {eta}")


def initial_inverse_rates(schedule: RateSchedule, n_infosets: int) -> np.ndarray:
    if isinstance(schedule, KappaScaled):
        w = np.asarray(schedule.weights, dtype=float)
        if w.shape != (n_infosets,):
            raise ValueError("one kappa weight per infoset is required")
        return w / schedule.eta
    return np.full(n_infosets, 1.0 / schedule.eta)


def schedule_advance(schedule: RateSchedule, inv_rate: float, visits: int, sq_loss_sum: float) -> float:
    """Inverse rate after a visit; ``visits`` and ``sq_loss_sum`` already include it."""
    if isinstance(schedule, KappaScaled):
        return inv_rate
    if isinstance(schedule, VisitCount):
        return max(inv_rate, math.sqrt(visits) / schedule.eta)
    if isinstance(schedule, LossAdaptive):
        return max(inv_rate, math.sqrt(sq_loss_sum) / schedule.eta)
    raise TypeError(f"unknown schedule {schedule!r}")


def theoretical_eta(game: GameSpec, sampling_policy: BehavioralPolicy, T: int,
                    player: int | None = None) -> float:
    """``sqrt(log(A) kappa / (3 H T))`` for the constant kappa-scaled schedule."""
    if player is None:
        player = sampling_policy.owner
    if T < 1:
        raise ValueError("T must be at least 1")
    A = game.treeplex(player).max_actions
    if A < 2:
        raise ValueError("every infoset has a single action; the rate is degenerate")
    k = kappa(game, sampling_policy, player).total
    return math.sqrt(math.log(A) * k / (3 * game.horizon(player) * T))


def make_schedule(kind: str, eta: float, game: GameSpec,
                  sampling_policy: BehavioralPolicy) -> RateSchedule:
    if kind == "theorem4":
        return KappaScaled(eta, kappa(game, sampling_policy).per_infoset)
    if kind == "count":
        return VisitCount(eta)
    if kind in ("loss", "loss-adaptive"):
        return LossAdaptive(eta)
    raise ValueError(f"unknown schedule {kind!r}; choose one of {', '.join(SCHEDULE_NAMES)}")


# ------------------------------------------------------------ learner

@dataclass(frozen=True)
class StepRecord:
    infoset: int
    action: int
    reg_loss: float  # regularized loss of the chosen action
    q: float  # minimum of the local stabilized objective, passed upwards

@dataclass
class LocalOMD:
    """Mutable learner state for one player. Not safe for concurrent updates."""

    game: GameSpec
    owner: int
    policy: np.ndarray  # current interaction policy, flat per sequence
    anchor: np.ndarray
    sampling: np.ndarray
    schedule: RateSchedule
    inv_rates: np.ndarray
    visits: np.ndarray
    sq_losses: np.ndarray
    plan_sum: np.ndarray
    rounds: int = 0
    record: bool = False
    observed: list = field(default_factory=list)  # (infoset, regularized loss) when recording

    @property
    def t(self) -> int:
        return self.rounds + 1

    def current_policy(self) -> BehavioralPolicy:
        return BehavioralPolicy(self.owner, self.policy.copy())

    def sampling_policy(self) -> BehavioralPolicy:
        return BehavioralPolicy(self.owner, self.sampling)

    def observe_and_update(self, trajectory: Trajectory, current_plan=None) -> list[StepRecord]:
        return observe_and_update(self, trajectory, current_plan)

    def average_policy(self) -> BehavioralPolicy:
        return current_average_policy(self)


def init_learner(game: GameSpec, player: int, sampling_policy: BehavioralPolicy,
                 initial_policy: BehavioralPolicy, schedule: RateSchedule,
                 record: bool = False) -> LocalOMD:
    if sampling_policy.owner != player or initial_policy.owner != player:
        raise ValueError(f"policies must belong to the {PLAYER_NAMES[player]} player")
    check_policy(game, sampling_policy, strict=True, tol=1e-9)
    check_policy(game, initial_policy, tol=1e-9)
    tp = game.treeplex(player)
    n = tp.n_sequences
    return LocalOMD(
        game=game, owner=player,
        policy=np.array(initial_policy.probs, dtype=float),
        anchor=np.array(initial_policy.probs, dtype=float),
        sampling=np.array(sampling_policy.probs, dtype=float),
        schedule=schedule,
        inv_rates=initial_inverse_rates(schedule, tp.n_infosets),
        visits=np.zeros(tp.n_infosets, dtype=np.int64),
        sq_losses=np.zeros(tp.n_infosets),
        plan_sum=np.zeros(n),
        record=record,
    )


def observe_and_update(state: LocalOMD, trajectory: Trajectory,
                       current_plan: np.ndarray | None = None) -> list[StepRecord]:
    """Feed one episode sampled with the learner's own sampling policy.

    The round's interaction policy is added to the running plan sum first, so the
    average covers the policies actually played in rounds ``1..t``. ``current_plan``
    may pass that policy's realization plan when the caller already has it.
    Returns one record per own decision, last decision first.
    """
    tp = state.game.treeplex(state.owner)
    own = trajectory.own(state.owner)
    losses = trajectory.step_losses(state.owner)
    for d in own:
        if abs(d.prob - state.sampling[d.seq]) > MATCH_TOL:
            x = tp.infosets[d.infoset]
            raise ValueError(f"episode was not sampled with this learner's sampling policy "
                             f"(infoset {x.label}: {d.prob!r} vs {state.sampling[d.seq]!r})")

    if current_plan is None:
        current_plan = realization_plan(state.game, BehavioralPolicy(state.owner, state.policy)).values
    state.plan_sum += current_plan
    adaptive_loss = isinstance(state.schedule, LossAdaptive)
    q = 0.0
    steps = []
    for d, step_loss in zip(reversed(own), reversed(losses)):
        x = tp.infosets[d.infoset]
        reg = (step_loss + q) / state.sampling[d.seq]
        if state.record:
            state.observed.append((d.infoset, reg))
        state.visits[d.infoset] += 1
        if adaptive_loss:
            state.sq_losses[d.infoset] += reg * reg
        inv = state.inv_rates[d.infoset]
        new_inv = schedule_advance(state.schedule, inv, int(state.visits[d.infoset]),
                                   float(state.sq_losses[d.infoset]))
        sl = slice(x.start, x.start + x.size)
        xi = np.zeros(x.size)
        xi[d.action] = reg
        state.policy[sl], q = stabilized_update(xi, state.policy[sl], state.anchor[sl], inv, new_inv)
        q = max(q, 0.0)  # nonnegative for nonnegative losses; drop rounding below zero
        state.inv_rates[d.infoset] = new_inv
        steps.append(StepRecord(d.infoset, d.action, reg, q))
    state.rounds += 1
    return steps


def average_plan(state: LocalOMD) -> RealizationPlan:
    return average_plans(state.plan_sum, state.rounds, state.owner)


def current_average_policy(state: LocalOMD) -> BehavioralPolicy:
    """Behavioral policy of the average realization plan over the completed rounds."""
    if state.rounds < 1:
        raise ValueError("no completed rounds to average")
    return behavioral_from_plan(state.game, average_plan(state))
