"""Exact evaluation: values, per-sequence loss vectors, best responses, regret audits.

Every terminal is reached with probability ``chance(z) * plan_min(s_min(z)) *
plan_max(s_max(z))`` where ``s_p(z)`` is the last sequence player ``p`` plays on
the way to ``z``. All exact quantities below are bincounts over terminals.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .game import MAX, MIN, GameSpec, Trajectory, Treeplex
from .sequence_form import BehavioralPolicy, RealizationPlan, realization_plan


def plan_values(game: GameSpec, policy, player: int) -> np.ndarray:
    """Realization-plan vector of a behavioral policy or plan."""
    if isinstance(policy, RealizationPlan):
        if policy.owner != player:
            raise ValueError("plan belongs to the other player")
        return policy.values
    if isinstance(policy, BehavioralPolicy):
        if policy.owner != player:
            raise ValueError("policy belongs to the other player")
        return realization_plan(game, policy).values
    raise TypeError(f"expected a policy or plan, got {type(policy).__name__}")


def _terminal_reach(game: GameSpec, plan: np.ndarray, player: int) -> np.ndarray:
    seq = game.term_seq[player]
    out = np.ones(len(seq))
    acted = seq >= 0
    out[acted] = plan[seq[acted]]
    return out


def expected_value(game: GameSpec, min_policy, max_policy) -> float:
    """Expected min-player loss."""
    pm = plan_values(game, min_policy, MIN)
    px = plan_values(game, max_policy, MAX)
    w = game.term_chance * _terminal_reach(game, pm, MIN) * _terminal_reach(game, px, MAX)
    return float(w @ game.term_loss)


@dataclass(frozen=True)
class AdversarialLossVector:
    """Per-sequence expected own loss, with chance and the opponent folded in.

    ``offset`` is the loss mass on terminals the owner reaches without acting, so the
    owner's expected loss under plan ``x`` is ``values @ x + offset``.
    """

    owner: int
    values: np.ndarray
    offset: float = 0.0

    def dot(self, plan) -> float:
        v = plan.values if isinstance(plan, RealizationPlan) else np.asarray(plan)
        return float(self.values @ v + self.offset)


def own_terminal_loss(game: GameSpec, player: int) -> np.ndarray:
    return game.term_loss if player == MIN else 1.0 - game.term_loss


def adversarial_loss_vector(game: GameSpec, opponent_policy, player: int) -> AdversarialLossVector:
    """Own-loss vector of ``player`` (``1 - loss`` for the max-player) against a fixed opponent."""
    other = 1 - player
    po = plan_values(game, opponent_policy, other)
    w = game.term_chance * _terminal_reach(game, po, other) * own_terminal_loss(game, player)
    seq = game.term_seq[player]
    acted = seq >= 0
    values = np.bincount(seq[acted], weights=w[acted], minlength=game.n_sequences(player))
    return AdversarialLossVector(player, values, float(w[~acted].sum()))


# ------------------------------------------------------------ best response

def _level_blocks(tp: Treeplex, level: np.ndarray):
    ix = tp.seq_infoset[level]
    starts = np.flatnonzero(np.r_[True, ix[1:] != ix[:-1]])
    return ix[starts], starts


def treeplex_min(tp: Treeplex, vec: np.ndarray, want_policy: bool = False):
    """Minimum of ``<vec, x>`` over the treeplex, by backward induction on infosets.

    Returns ``(value, probs)`` where ``probs`` is a deterministic minimizing behavioral
    policy (or ``None`` unless ``want_policy``). Ties go to the lowest action index.
    """
    q = np.array(vec, dtype=float, copy=True)
    n = tp.n_sequences
    inf_val = np.zeros(tp.n_infosets)
    probs = np.zeros(n) if want_policy else None
    for level in reversed(tp.depth_levels):
        if level.size == 0:
            continue
        xs, starts = _level_blocks(tp, level)
        vals = q[level]
        mins = np.minimum.reduceat(vals, starts)
        inf_val[xs] = mins
        parents = np.array([tp.infosets[x].parent_seq for x in xs], dtype=np.int64)
        has_parent = parents >= 0
        np.add.at(q, parents[has_parent], mins[has_parent])
        if want_policy:
            ends = np.r_[starts[1:], len(level)]
            for b, e in zip(starts, ends):
                probs[level[b + int(np.argmin(vals[b:e]))]] = 1.0
    value = float(sum(inf_val[r] for r in tp.roots))
    return value, probs


def best_response_value(game: GameSpec, opponent_policy, player: int):
    """Best value ``player`` can get against a fixed opponent, in min-player-loss units.

    For the min-player this is ``min_mu V(mu, nu)``; for the max-player ``max_nu V(mu, nu)``.
    Also returns one attaining deterministic policy.
    """
    lv = adversarial_loss_vector(game, opponent_policy, player)
    own, probs = treeplex_min(game.treeplex(player), lv.values, want_policy=True)
    own += lv.offset
    value = own if player == MIN else 1.0 - own
    return value, BehavioralPolicy(player, probs)


def _best_own_loss(game: GameSpec, opponent_plan: np.ndarray, player: int) -> float:
    lv = adversarial_loss_vector(game, RealizationPlan(1 - player, opponent_plan), player)
    return treeplex_min(game.treeplex(player), lv.values)[0] + lv.offset


def exploitability(game: GameSpec, min_policy, max_policy) -> float:
    """``max_nu V(mu, nu) - min_mu V(mu, nu)`` for the given profile."""
    pm = plan_values(game, min_policy, MIN)
    px = plan_values(game, max_policy, MAX)
    worst_for_min = 1.0 - _best_own_loss(game, pm, MAX)
    best_for_min = _best_own_loss(game, px, MIN)
    return worst_for_min - best_for_min


# ------------------------------------------------------------ estimation

def estimated_loss(trajectory: Trajectory, sampling_plan: RealizationPlan) -> dict[int, float]:
    """Importance-weighted loss estimate, nonzero only on the visited own sequences."""
    player = sampling_plan.owner
    own = trajectory.own(player)
    losses = trajectory.step_losses(player)
    out: dict[int, float] = {}
    for d, l in zip(own, losses):
        w = sampling_plan.values[d.seq]
        if w <= 0:
            raise ValueError(f"sampling plan is zero on visited sequence {d.seq}")
        if l != 0.0:
            out[d.seq] = l / w
    return out


def gap_iota(n_actions: int, delta: float) -> float:
    return math.log((n_actions + 1) / delta)


def estimation_gap_bound(game: GameSpec, player: int, kappa_total: float, T: int, delta: float) -> float:
    """``4 sqrt(iota H kappa T)`` with ``iota = log((A + 1)/delta)``."""
    iota = gap_iota(game.n_sequences(player), delta)
    return 4.0 * math.sqrt(iota * game.horizon(player) * kappa_total * T)


def kappa_rate_regret_bound(game: GameSpec, player: int, kappa_total: float, T: int,
                            delta: float) -> float:
    """High-probability regret bound for the kappa-scaled constant rates.

    ``(4 + 2 sqrt 3) H^(3/2) sqrt(log(A) iota kappa T)`` with ``iota = log(2(A_X + 1)/delta)``.
    """
    tp = game.treeplex(player)
    iota = math.log(2 * (tp.n_sequences + 1) / delta)
    H = game.horizon(player)
    return (4 + 2 * math.sqrt(3)) * H ** 1.5 * math.sqrt(math.log(tp.max_actions) * iota * kappa_total * T)


@dataclass
class RegretTracker:
    """Online accumulation of true and estimated regret for one player."""

    game: GameSpec
    player: int
    rounds: int = 0
    played_exact: float = 0.0
    played_est: float = 0.0
    sum_exact: np.ndarray = field(default=None)
    sum_est: np.ndarray = field(default=None)

    def __post_init__(self):
        n = self.game.n_sequences(self.player)
        if self.sum_exact is None:
            self.sum_exact = np.zeros(n)
        if self.sum_est is None:
            self.sum_est = np.zeros(n)

    def add_exact(self, own_plan: np.ndarray, opponent_plan: np.ndarray) -> None:
        lv = adversarial_loss_vector(self.game, RealizationPlan(1 - self.player, opponent_plan),
                                     self.player)
        self.sum_exact += lv.values
        self.played_exact += float(lv.values @ own_plan)

    def add_estimate(self, own_plan: np.ndarray, estimate: dict[int, float]) -> None:
        for s, v in estimate.items():
            self.sum_est[s] += v
            self.played_est += v * own_plan[s]

    def end_round(self) -> None:
        self.rounds += 1

    def true_regret(self) -> float:
        return self.played_exact - treeplex_min(self.game.treeplex(self.player), self.sum_exact)[0]

    def estimated_regret(self) -> float:
        return self.played_est - treeplex_min(self.game.treeplex(self.player), self.sum_est)[0]


@dataclass(frozen=True)
class RegretAudit:
    player: int
    T: int
    true_regret: float
    estimated_regret: float | None
    bound: float  # 4 sqrt(iota H kappa T)
    iota: float
    delta: float

    @property
    def holds(self) -> bool | None:
        """Whether ``R <= max(R_hat, 0) + bound``; ``None`` without estimates."""
        if self.estimated_regret is None:
            return None
        return self.true_regret <= max(self.estimated_regret, 0.0) + self.bound


def regret_audit(game: GameSpec, plans: Sequence, opponent_policies: Sequence,
                 sampling_policy: BehavioralPolicy, delta: float,
                 trajectories: Sequence[Trajectory] | None = None,
                 kappa_total: float | None = None) -> RegretAudit:
    """Audit one player's regret over ``T`` rounds.

    ``plans[t]`` is the player's interaction policy (or plan) of round ``t`` and
    ``opponent_policies[t]`` the opponent's. With ``trajectories`` (sampled with
    ``sampling_policy`` on the player's side) the estimated regret is audited too.
    """
    from .sequence_form import kappa

    player = sampling_policy.owner
    T = len(plans)
    if len(opponent_policies) != T or (trajectories is not None and len(trajectories) != T):
        raise ValueError("plans, opponent policies and trajectories must have equal length")
    if T == 0:
        raise ValueError("empty audit")
    tracker = RegretTracker(game, player)
    s_plan = realization_plan(game, sampling_policy)
    for t in range(T):
        own = plan_values(game, plans[t], player)
        opp = plan_values(game, opponent_policies[t], 1 - player)
        tracker.add_exact(own, opp)
        if trajectories is not None:
            tracker.add_estimate(own, estimated_loss(trajectories[t], s_plan))
        tracker.end_round()
    if kappa_total is None:
        kappa_total = kappa(game, sampling_policy).total
    est = tracker.estimated_regret() if trajectories is not None else None
    return RegretAudit(player, T, tracker.true_regret(), est,
                       estimation_gap_bound(game, player, kappa_total, T, delta),
                       gap_iota(game.n_sequences(player), delta), delta)
