import itertools

import numpy as np
import pytest

from localomd import MAX, MIN, TreeBuilder, build_kuhn, build_leduc
from localomd.gamefile import parse_game
from localomd.sequence_form import BehavioralPolicy

MATCHING_PENNIES = """\
# min picks a side, max guesses without seeing it; min loses on a match
node root player min infoset m {h:a,t:b}
node a player max infoset g {h:ah,t:at}
node b player max infoset g {h:bh,t:bt}
node ah terminal 1
node at terminal 0
node bh terminal 0
node bt terminal 1
"""


@pytest.fixture(scope="session")
def kuhn():
    return build_kuhn()


@pytest.fixture(scope="session")
def leduc():
    return build_leduc()


@pytest.fixture(scope="session")
def pennies():
    return parse_game(MATCHING_PENNIES, name="pennies")


def single_decision(losses=(1.0, 0.0), player=MIN):
    b = TreeBuilder()
    acts = [(f"a{i}", b.terminal(v)) for i, v in enumerate(losses)]
    return b.build(b.decision(player, "x", acts), "single")


def random_game(seed: int, max_depth: int = 4, signals: int = 2, stop: float = 0.25):
    """Random two-player perfect-recall game.

    Each player sees a private signal and their own past actions, never the
    opponent's. Infosets are keyed by exactly that, so recall is perfect.
    """
    rng = np.random.default_rng(seed)
    b = TreeBuilder()
    sizes = {}

    def rec(depth, sig, own):
        if depth == max_depth or (depth > 0 and rng.random() < stop):
            return b.terminal(float(rng.random()))
        p = depth % 2
        label = f"p{p}s{sig[p]}h{'.'.join(own[p]) or '-'}"
        k = sizes.setdefault(label, int(rng.integers(2, 4)))
        acts = []
        for a in range(k):
            new = list(own)
            new[p] = own[p] + (f"{label}>{a}",)
            acts.append((f"a{a}", rec(depth + 1, sig, tuple(new))))
        return b.decision(p, label, acts)

    outcomes = []
    w = rng.random(signals * signals) + 0.2
    w /= w.sum()
    for i, (s0, s1) in enumerate(itertools.product(range(signals), repeat=2)):
        outcomes.append((rec(0, (s0, s1), ((), ())), float(w[i])))
    total = sum(p for _, p in outcomes)
    outcomes[-1] = (outcomes[-1][0], outcomes[-1][1] + 1.0 - total)
    return b.build(b.chance(outcomes), f"random{seed}")


def deterministic_policies(game, player):
    """Every deterministic behavioral policy of ``player``."""
    tp = game.treeplex(player)
    for choice in itertools.product(*[range(x.size) for x in tp.infosets]):
        probs = np.zeros(tp.n_sequences)
        for x, a in zip(tp.infosets, choice):
            probs[x.start + a] = 1.0
        yield BehavioralPolicy(player, probs)


def random_policy(game, player, rng, floor=0.0):
    tp = game.treeplex(player)
    probs = np.empty(tp.n_sequences)
    for x in tp.infosets:
        v = rng.random(x.size) + floor
        probs[x.start:x.start + x.size] = v / v.sum()
    return BehavioralPolicy(player, probs)


def small_random_games(count, max_infosets=12, max_policies=4096):
    """Seeded random games small enough for exhaustive enumeration."""
    out = []
    seed = 0
    while len(out) < count:
        g = random_game(seed)
        seed += 1
        ok = True
        for p in (MIN, MAX):
            tp = g.treeplex(p)
            n_det = int(np.prod([x.size for x in tp.infosets]))
            if not (2 <= tp.n_infosets <= max_infosets and n_det <= max_policies):
                ok = False
        if ok:
            out.append(g)
    return out


# ------------------------------------------------------------ acceptance report

ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def record_criterion(n: int, ok: bool, detail: str) -> None:
    ACCEPTANCE[n] = (bool(ok), detail)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
