"""Behavioral policies, realization plans, balanced sampling policies and kappa."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .game import PLAYER_NAMES, GameSpec, Treeplex

SIMPLEX_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class BehavioralPolicy:
    """Per-infoset action distributions, stored flat in the owner's sequence order."""

    owner: int
    probs: np.ndarray

    def local(self, game: GameSpec, infoset: int) -> np.ndarray:
        x = game.treeplex(self.owner).infosets[infoset]
        return self.probs[x.start:x.start + x.size]

    def copy(self) -> "BehavioralPolicy":
        return BehavioralPolicy(self.owner, self.probs.copy())

    def is_strictly_positive(self) -> bool:
        return bool(np.all(self.probs > 0.0))


@dataclass(frozen=True, eq=False)
class RealizationPlan:
    owner: int
    values: np.ndarray


def _infoset_sums(tp: Treeplex, v: np.ndarray) -> np.ndarray:
    starts = np.array([x.start for x in tp.infosets], dtype=np.int64)
    if len(starts) == 0:
        return np.zeros(0)
    return np.add.reduceat(v, starts)


def check_policy(game: GameSpec, policy: BehavioralPolicy, strict: bool = False,
                 tol: float = SIMPLEX_TOL) -> None:
    """Raise ``ValueError`` unless every infoset vector lies on the simplex."""
    tp = game.treeplex(policy.owner)
    p = np.asarray(policy.probs, dtype=float)
    if p.shape != (tp.n_sequences,):
        raise ValueError(f"policy has {p.size} entries, {PLAYER_NAMES[policy.owner]} has "
                         f"{tp.n_sequences} sequences")
    if not np.all(np.isfinite(p)):
        raise ValueError("policy has non-finite entries")
    if np.any(p < 0):
        raise ValueError("policy has negative entries")
    if strict and np.any(p <= 0):
        bad = tp.infosets[int(tp.seq_infoset[np.flatnonzero(p <= 0)[0]])]
        raise ValueError(f"zero probability at infoset {bad.label}")
    sums = _infoset_sums(tp, p)
    bad = np.flatnonzero(np.abs(sums - 1.0) > tol)
    if bad.size:
        x = tp.infosets[int(bad[0])]
        raise ValueError(f"infoset {x.label} probabilities sum to {sums[bad[0]]:.15g}")


def uniform_policy(game: GameSpec, player: int) -> BehavioralPolicy:
    tp = game.treeplex(player)
    probs = np.empty(tp.n_sequences)
    for x in tp.infosets:
        probs[x.start:x.start + x.size] = 1.0 / x.size
    return BehavioralPolicy(player, probs)


def realization_plan(game: GameSpec, policy: BehavioralPolicy) -> RealizationPlan:
    """Products of own action probabilities along each sequence's history (log domain)."""
    tp = game.treeplex(policy.owner)
    p = np.asarray(policy.probs, dtype=float)
    if p.shape != (tp.n_sequences,):
        raise ValueError(f"policy does not cover all {PLAYER_NAMES[policy.owner]} infosets")
    n = tp.n_sequences
    log_plan = np.zeros(n + 1)  # slot n is the empty sequence
    parent = np.where(tp.seq_parent < 0, n, tp.seq_parent)
    with np.errstate(divide="ignore"):
        log_p = np.log(p)
    for level in tp.depth_levels:
        log_plan[level] = log_plan[parent[level]] + log_p[level]
    return RealizationPlan(policy.owner, np.exp(log_plan[:n]))


def infoset_reach(game: GameSpec, plan: RealizationPlan) -> np.ndarray:
    """Plan value of each infoset's parent sequence (1 at roots)."""
    tp = game.treeplex(plan.owner)
    return _infoset_sums(tp, plan.values)


def check_plan(game: GameSpec, plan: RealizationPlan, tol: float = SIMPLEX_TOL) -> None:
    """Raise ``ValueError`` unless the plan satisfies flow conservation."""
    tp = game.treeplex(plan.owner)
    v = plan.values
    if v.shape != (tp.n_sequences,):
        raise ValueError("plan has the wrong length")
    if np.any(v < -tol) or np.any(v > 1 + tol):
        raise ValueError("plan entries outside [0, 1]")
    sums = _infoset_sums(tp, v)
    for x in tp.infosets:
        target = 1.0 if x.parent_seq < 0 else v[x.parent_seq]
        if abs(sums[x.index] - target) > tol:
            raise ValueError(f"flow conservation fails at infoset {x.label}: "
                             f"{sums[x.index]:.15g} != {target:.15g}")


def behavioral_from_plan(game: GameSpec, plan: RealizationPlan) -> BehavioralPolicy:
    """Invert the realization map; infosets the plan never reaches get the uniform distribution."""
    tp = game.treeplex(plan.owner)
    v = np.asarray(plan.values, dtype=float)
    if np.any(v < 0):
        raise ValueError("plan has negative entries")
    probs = np.empty(tp.n_sequences)
    sums = _infoset_sums(tp, v)
    for x in tp.infosets:
        sl = slice(x.start, x.start + x.size)
        s = sums[x.index]
        probs[sl] = v[sl] / s if s > 0 else 1.0 / x.size
    return BehavioralPolicy(plan.owner, probs)


def average_plans(running_sum: RealizationPlan | np.ndarray, count: int,
                  owner: int | None = None) -> RealizationPlan:
    if count < 1:
        raise ValueError("cannot average zero plans")
    if isinstance(running_sum, RealizationPlan):
        owner, values = running_sum.owner, running_sum.values
    else:
        values = np.asarray(running_sum, dtype=float)
    return RealizationPlan(owner, values / count)


def subtree_action_counts(game: GameSpec, player: int) -> tuple[list[int], list[int]]:
    """Exact integer counts ``A(x, a)`` per sequence and ``A(x)`` per infoset.

    ``A(x, a)`` is one plus the number of sequences of all infosets below ``(x, a)``.
    """
    tp = game.treeplex(player)
    per_seq = [1] * tp.n_sequences
    per_infoset = [0] * tp.n_infosets
    for x in reversed(tp.infosets):
        for s in x.sequences:
            per_seq[s] = 1 + sum(per_infoset[c] for c in tp.seq_children[s])
        per_infoset[x.index] = sum(per_seq[s] for s in x.sequences)
    return per_seq, per_infoset


def balanced_policy(game: GameSpec, player: int) -> BehavioralPolicy:
    """Plays each action proportionally to the number of actions in its subtree."""
    tp = game.treeplex(player)
    per_seq, per_infoset = subtree_action_counts(game, player)
    probs = np.empty(tp.n_sequences)
    for x in tp.infosets:
        for s in x.sequences:
            probs[s] = per_seq[s] / per_infoset[x.index]
    return BehavioralPolicy(player, probs)


@dataclass(frozen=True)
class KappaReport:
    total: float
    per_infoset: np.ndarray
    subtree_seq_counts: list[int]
    subtree_infoset_counts: list[int]


def kappa(game: GameSpec, sampling_policy: BehavioralPolicy, player: int | None = None) -> KappaReport:
    """Worst-case sum of plan ratios against ``sampling_policy``, computed leaves first."""
    if player is None:
        player = sampling_policy.owner
    if player != sampling_policy.owner:
        raise ValueError("sampling policy belongs to the other player")
    tp = game.treeplex(player)
    p = np.asarray(sampling_policy.probs, dtype=float)
    if np.any(p <= 0):
        x = tp.infosets[int(tp.seq_infoset[np.flatnonzero(p <= 0)[0]])]
        raise ValueError(f"sampling policy has a zero probability at infoset {x.label}")
    k = np.zeros(tp.n_infosets)
    for x in reversed(tp.infosets):
        best = 0.0
        for s in x.sequences:
            v = (1.0 + sum(k[c] for c in tp.seq_children[s])) / p[s]
            best = max(best, v)
        k[x.index] = best
    total = float(sum(k[r] for r in tp.roots))
    seq_counts, infoset_counts = subtree_action_counts(game, player)
    return KappaReport(total, k, seq_counts, infoset_counts)


# ---------------------------------------------------------------- files

def format_policy(game: GameSpec, policy: BehavioralPolicy) -> str:
    tp = game.treeplex(policy.owner)
    lines = []
    for x in tp.infosets:
        vals = " ".join(repr(float(v)) for v in policy.probs[x.start:x.start + x.size])
        lines.append(f"{x.label}: {vals}")
    return "\n".join(lines) + "\n"


def parse_policy(game: GameSpec, player: int, text: str) -> BehavioralPolicy:
    """Read ``<infoset-label>: p1 p2 ...`` lines; every infoset must be listed once."""
    tp = game.treeplex(player)
    probs = np.full(tp.n_sequences, np.nan)
    seen = set()
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        label, sep, rest = line.rpartition(":")
        if not sep:
            raise ValueError(f"line {lineno}: expected '<infoset>: p1 p2 ...'")
        label = label.strip()
        if label not in tp.label_index:
            raise ValueError(f"line {lineno}: unknown {PLAYER_NAMES[player]} infoset {label!r}")
        if label in seen:
            raise ValueError(f"line {lineno}: infoset {label!r} listed twice")
        seen.add(label)
        x = tp.infoset_of(label)
        vals = [float(t) for t in rest.split()]
        if len(vals) != x.size:
            raise ValueError(f"line {lineno}: infoset {label!r} has {x.size} actions, got {len(vals)}")
        probs[x.start:x.start + x.size] = vals
    missing = [x.label for x in tp.infosets if x.label not in seen]
    if missing:
        raise ValueError(f"policy misses {len(missing)} infosets, e.g. {missing[0]!r}")
    policy = BehavioralPolicy(player, probs)
    check_policy(game, policy, tol=1e-9)
    return policy


def load_policy(game: GameSpec, player: int, path) -> BehavioralPolicy:
    return parse_policy(game, player, Path(path).read_text())


def save_policy(game: GameSpec, policy: BehavioralPolicy, path) -> None:
    Path(path).write_text(format_policy(game, policy))
