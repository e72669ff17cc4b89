"""Kuhn poker, Leduc hold'em and one-die liar's dice as explicit trees.

Player 0 (min) acts first in every betting round. Payoffs are chip or win/lose
amounts for player 0, rescaled affinely to a min-player loss in ``[0, 1]``.
"""

from __future__ import annotations

import itertools
from collections import Counter
from math import comb, factorial

from .game import DEFAULT_NODE_BUDGET, MAX, MIN, GameError, GameSpec, TreeBuilder


def _loss(utility: float, bound: float) -> float:
    """Min-player loss for a player-0 utility in ``[-bound, bound]``."""
    return (bound - utility) / (2.0 * bound)


def build_kuhn(num_cards: int = 3) -> GameSpec:
    """Kuhn poker (ante 1, bet 1). ``num_cards=3`` is the standard game."""
    if num_cards < 2:
        raise ValueError("Kuhn poker needs at least 2 cards")
    b = TreeBuilder()
    names = "JQKA23456789"[:num_cards] if num_cards <= 12 else [str(c) for c in range(num_cards)]

    def showdown(c0, c1, stake):
        return b.terminal(_loss(stake if c0 > c1 else -stake, 2.0))

    def p1_after_bet(c0, c1, hist):
        fold = b.terminal(_loss(1.0, 2.0))
        call = showdown(c0, c1, 2.0)
        return b.decision(MAX, f"{names[c1]}/{hist}", [("p", fold), ("b", call)])

    deals = []
    for c0, c1 in itertools.permutations(range(num_cards), 2):
        # history "pb": player 0 may fold or call
        pb = b.decision(MIN, f"{names[c0]}/pb",
                        [("p", b.terminal(_loss(-1.0, 2.0))), ("b", showdown(c0, c1, 2.0))])
        after_pass = b.decision(MAX, f"{names[c1]}/p", [("p", showdown(c0, c1, 1.0)), ("b", pb)])
        after_bet = p1_after_bet(c0, c1, "b")
        root = b.decision(MIN, f"{names[c0]}/", [("p", after_pass), ("b", after_bet)])
        deals.append((root, 1.0 / (num_cards * (num_cards - 1))))
    return b.build(b.chance(deals), "kuhn" if num_cards == 3 else f"kuhn{num_cards}")


# Leduc: 6 distinguishable cards (two suits of J, Q, K); raise sizes 2 then 4; two raises per round.
LEDUC_RANKS = 3
LEDUC_SUITS = 2
_LEDUC_BOUND = 13.0  # ante 1 + 2 + 2 in round one + 4 + 4 in round two


def build_leduc() -> GameSpec:
    b = TreeBuilder()
    cards = list(range(LEDUC_RANKS * LEDUC_SUITS))
    rank = lambda c: c // LEDUC_SUITS  # noqa: E731
    raise_size = (2, 4)

    def card_name(c):
        return "JQK"[rank(c)] + "sh"[c % LEDUC_SUITS]

    def showdown_utility(c0, c1, pub):
        r0, r1, rp = rank(c0), rank(c1), rank(pub)
        if r0 == rp:
            return 1
        if r1 == rp:
            return -1
        return (r0 > r1) - (r0 < r1)

    def betting(rnd, c0, c1, pub, round_hist, contrib, raises, to_act, first_round_hist):
        """One node of the betting tree. ``contrib`` holds chips put in by each player."""
        own = (c0, c1)[to_act]
        if rnd == 0:
            label = f"{card_name(own)}/{round_hist}"
        else:
            label = f"{card_name(own)}{card_name(pub)}/{first_round_hist}/{round_hist}"
        facing = contrib[1 - to_act] > contrib[to_act]
        acts = []
        if facing:
            # folding loses what the folder has put in
            u0 = -contrib[0] if to_act == MIN else contrib[1]
            acts.append(("f", b.terminal(_loss(u0, _LEDUC_BOUND))))
        # call / check
        new = list(contrib)
        new[to_act] = contrib[1 - to_act]
        h = round_hist + "c"
        if round_hist and (facing or round_hist.endswith("c")):
            # round closes: check-check, or a call of a raise
            acts.append(("c", end_round(rnd, c0, c1, pub, tuple(new), h if rnd == 0 else first_round_hist)))
        else:
            acts.append(("c", betting(rnd, c0, c1, pub, h, tuple(new), raises, 1 - to_act,
                                      first_round_hist)))
        if raises < 2:
            new = list(contrib)
            new[to_act] = contrib[1 - to_act] + raise_size[rnd]
            acts.append(("r", betting(rnd, c0, c1, pub, round_hist + "r", tuple(new),
                                      raises + 1, 1 - to_act, first_round_hist)))
        return b.decision(to_act, label, acts)

    def end_round(rnd, c0, c1, pub, contrib, first_round_hist):
        if rnd == 1:
            u = showdown_utility(c0, c1, pub) * contrib[0]
            return b.terminal(_loss(u, _LEDUC_BOUND))
        rest = [c for c in cards if c not in (c0, c1)]
        outs = [(betting(1, c0, c1, p, "", contrib, 0, MIN, first_round_hist), 1.0 / len(rest))
                for p in rest]
        return b.chance(outs)

    deals = []
    n_deals = len(cards) * (len(cards) - 1)
    for c0, c1 in itertools.permutations(cards, 2):
        deals.append((betting(0, c0, c1, None, "", (1, 1), 0, MIN, ""), 1.0 / n_deals))
    return b.build(b.chance(deals), "leduc")


def _dice_outcomes(dice: int, faces: int):
    """Sorted dice multisets with their probabilities."""
    total = faces ** dice
    out = []
    for combo in itertools.combinations_with_replacement(range(1, faces + 1), dice):
        counts = Counter(combo).values()
        ways = factorial(dice)
        for c in counts:
            ways //= factorial(c)
        out.append((combo, ways / total))
    return out


def liars_dice_size(dice_per_player: int, faces: int) -> int:
    """Node count of :func:`build_liars_dice` (exact, without building)."""
    n_bids = 2 * dice_per_player * faces
    n_rolls = comb(dice_per_player + faces - 1, dice_per_player)
    # bid histories: every increasing bid subsequence; each non-empty one also has a liar terminal
    histories = 2 ** n_bids
    per_deal = histories + (histories - 1)
    return 1 + n_rolls * n_rolls * per_deal


def build_liars_dice(dice_per_player: int = 1, faces: int = 6,
                     node_budget: int = DEFAULT_NODE_BUDGET) -> GameSpec:
    """Two-player liar's dice.

    Bids are (quantity, face) pairs over all ``2 * dice_per_player`` dice, ordered by
    quantity then face; each bid must exceed the previous one. Instead of bidding, a
    player facing a bid may call "liar": the caller wins if fewer than ``quantity``
    dice show ``face``, otherwise the bidder wins. No face is wild. A player
    observes their own dice (as a multiset) and the public bid history.
    """
    if dice_per_player < 1 or faces < 2:
        raise ValueError("need dice_per_player >= 1 and faces >= 2")
    size = liars_dice_size(dice_per_player, faces)
    if size > node_budget:
        raise GameError(f"liar's dice ({dice_per_player}, {faces}) needs {size} nodes, "
                        f"over the budget of {node_budget}")
    total_dice = 2 * dice_per_player
    bids = [(q, f) for q in range(1, total_dice + 1) for f in range(1, faces + 1)]
    names = [f"{q}-{f}" for q, f in bids]
    b = TreeBuilder(node_budget=node_budget)

    def node(rolls, last, hist, to_act):
        own = "".join(map(str, rolls[to_act]))
        label = f"{own}/{hist}"
        acts = []
        for j in range(last + 1, len(bids)):
            acts.append((names[j], node(rolls, j, f"{hist}.{names[j]}" if hist else names[j], 1 - to_act)))
        if last >= 0:
            q, f = bids[last]
            count = sum(d == f for r in rolls for d in r)
            bidder = 1 - to_act
            bidder_wins = count >= q
            winner = bidder if bidder_wins else to_act
            acts.append(("liar", b.terminal(0.0 if winner == MIN else 1.0)))
        return b.decision(to_act, label, acts)

    outcomes = _dice_outcomes(dice_per_player, faces)
    deals = []
    for (r0, p0), (r1, p1) in itertools.product(outcomes, outcomes):
        deals.append((node((r0, r1), -1, "", MIN), p0 * p1))
    return b.build(b.chance(deals), f"liars_dice_{dice_per_player}x{faces}")


GAMES = {
    "kuhn": build_kuhn,
    "leduc": build_leduc,
    "liars-dice": build_liars_dice,
}
