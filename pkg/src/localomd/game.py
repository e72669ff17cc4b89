"""Explicit extensive-form game trees for two-player zero-sum games.

Games are built from raw node records (see :class:`RawNode`), validated once,
and compiled into an immutable :class:`GameSpec` whose nodes are renumbered in
preorder. Player 0 is the min-player and player 1 the max-player; terminal
values are the min-player's loss in ``[0, 1]``.

Each player's information sets form a treeplex. Sequences ``(infoset, action)``
are indexed densely per player, with the actions of one infoset occupying a
contiguous block and parents always indexed before their children.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Hashable, Iterable, Sequence

import numpy as np

MIN, MAX = 0, 1
PLAYER_NAMES = ("min", "max")
DEFAULT_NODE_BUDGET = 10_000_000
PROB_TOL = 1e-12


class NodeKind(enum.IntEnum):
    CHANCE = 0
    DECISION = 1
    TERMINAL = 2


class GameError(ValueError):
    """Invalid game description; ``node`` names the offending node when known."""

    def __init__(self, message: str, node: Hashable | None = None):
        self.node = node
        if node is not None:
            message = f"node {node}: {message}"
        super().__init__(message)


@dataclass(frozen=True)
class RawNode:
    """Unvalidated node record, as produced by builders and the file parser.

    ``children`` holds child ids; for chance nodes ``probs`` is aligned with it,
    for decision nodes ``actions`` holds the action labels.
    """

    id: Hashable
    kind: NodeKind
    children: tuple = ()
    probs: tuple[float, ...] = ()
    player: int = -1
    infoset: str | None = None
    actions: tuple[str, ...] = ()
    loss: float = 0.0


@dataclass(frozen=True)
class GameNode:
    """Read-only view of one compiled node (ids are preorder indices)."""

    id: int
    kind: NodeKind
    label: str
    outcomes: tuple[tuple[int, float], ...] = ()
    player: int = -1
    infoset: int = -1
    actions: tuple[tuple[int, int], ...] = ()
    loss: float | None = None


@dataclass(frozen=True)
class InfoSet:
    index: int
    label: str
    owner: int
    actions: tuple[str, ...]
    members: tuple[int, ...]
    parent: tuple[int, int] | None  # (infoset, action) or None at the root
    parent_seq: int  # -1 at the root
    depth: int  # 1-based count of own decisions up to and including this one
    start: int  # index of the first sequence of this infoset

    @property
    def size(self) -> int:
        return len(self.actions)

    @property
    def sequences(self) -> range:
        return range(self.start, self.start + len(self.actions))


@dataclass(frozen=True, eq=False)
class Treeplex:
    """One player's infoset tree and sequence indexing."""

    owner: int
    infosets: tuple[InfoSet, ...]
    seq_infoset: np.ndarray
    seq_parent: np.ndarray
    seq_children: tuple[tuple[int, ...], ...]  # infosets directly following each sequence
    roots: tuple[int, ...]  # infosets with an empty own history
    depth_levels: tuple[np.ndarray, ...]  # sequence indices grouped by depth
    label_index: dict = field(repr=False)

    @property
    def n_sequences(self) -> int:
        return len(self.seq_infoset)

    @property
    def n_infosets(self) -> int:
        return len(self.infosets)

    @property
    def max_actions(self) -> int:
        return max((x.size for x in self.infosets), default=0)

    @property
    def depth(self) -> int:
        return len(self.depth_levels)

    def seq(self, infoset: int, action: int) -> int:
        return self.infosets[infoset].start + action

    def infoset_of(self, label: str) -> InfoSet:
        return self.infosets[self.label_index[label]]


class GameSpec:
    """Compiled, immutable game tree. Build with :meth:`from_raw`."""

    def __init__(self, name, labels, kind, children, probs, player, infoset, loss,
                 treeplexes, term_nodes, term_chance, term_seq, action_labels):
        self.name = name
        self.labels: list[str] = labels
        self.kind: list[int] = kind
        self.children: list[tuple[int, ...]] = children
        self.probs: list[tuple[float, ...]] = probs
        self.player: list[int] = player
        self.infoset: list[int] = infoset
        self.loss: list[float] = loss
        self.treeplexes: tuple[Treeplex, Treeplex] = treeplexes
        self.action_labels = action_labels
        # terminal tables used by exact evaluation
        self.term_nodes = term_nodes
        self.term_chance = term_chance
        self.term_seq = term_seq  # shape (2, n_terminals), -1 when a player never acted
        self.term_loss = np.array([loss[z] for z in term_nodes], dtype=float)
        self._cum = [np.cumsum(p).tolist() if p else [] for p in probs]
        self._starts = tuple([x.start for x in tp.infosets] for tp in treeplexes)

    # ------------------------------------------------------------------ views
    @property
    def n_nodes(self) -> int:
        return len(self.kind)

    @property
    def root(self) -> int:
        return 0

    def treeplex(self, player: int) -> Treeplex:
        return self.treeplexes[player]

    def n_sequences(self, player: int) -> int:
        return self.treeplexes[player].n_sequences

    @property
    def A_X(self) -> int:
        return self.treeplexes[MIN].n_sequences

    @property
    def B_Y(self) -> int:
        return self.treeplexes[MAX].n_sequences

    def horizon(self, player: int) -> int:
        """Maximum number of the player's decisions on any root-to-terminal path."""
        return self.treeplexes[player].depth

    def node(self, i: int) -> GameNode:
        k = NodeKind(self.kind[i])
        if k == NodeKind.CHANCE:
            return GameNode(i, k, self.labels[i], tuple(zip(self.children[i], self.probs[i])))
        if k == NodeKind.DECISION:
            return GameNode(i, k, self.labels[i], player=self.player[i], infoset=self.infoset[i],
                            actions=tuple(enumerate(self.children[i])))
        return GameNode(i, k, self.labels[i], loss=self.loss[i])

    @property
    def nodes(self) -> Iterable[GameNode]:
        return (self.node(i) for i in range(self.n_nodes))

    def __repr__(self) -> str:
        return (f"GameSpec({self.name!r}, nodes={self.n_nodes}, A_X={self.A_X}, B_Y={self.B_Y}, "
                f"H=({self.horizon(MIN)}, {self.horizon(MAX)}))")

    # ------------------------------------------------------------ compilation
    @classmethod
    def from_raw(cls, nodes: Sequence[RawNode], root: Hashable | None = None, name: str = "game",
                 node_budget: int = DEFAULT_NODE_BUDGET) -> "GameSpec":
        """Validate raw nodes and compile them. ``root`` defaults to the first node."""
        if not nodes:
            raise GameError("empty game")
        if len(nodes) > node_budget:
            raise GameError(f"{len(nodes)} nodes exceed the node budget of {node_budget}")
        table: dict = {}
        for n in nodes:
            if n.id in table:
                raise GameError("duplicate node id", n.id)
            table[n.id] = n
        if root is None:
            root = nodes[0].id
        parent_of: dict = {}
        for n in nodes:
            _check_record(n)
            for c in n.children:
                if c not in table:
                    raise GameError(f"unknown child {c}", n.id)
                if c in parent_of:
                    raise GameError(f"has two parents ({parent_of[c]} and {n.id})", c)
                parent_of[c] = n.id
        if root in parent_of:
            raise GameError("root has a parent", root)

        labels, kind, children, probs, player, infoset, loss = [], [], [], [], [], [], []
        infos: list[list[dict]] = [[], []]
        by_label: dict[str, tuple[int, int]] = {}
        action_labels: list[list[tuple[str, ...]]] = [[], []]
        next_seq = [0, 0]
        term_nodes, term_chance, term_seq = [], [], [[], []]

        # preorder DFS; each stack entry carries chance reach and per-player (last seq, depth)
        stack = [(root, 1.0, (-1, -1), (0, 0), -1, -1)]
        index_of: dict = {}
        while stack:
            rid, reach, last, depth, parent_idx, slot = stack.pop()
            if rid in index_of:
                raise GameError("cycle detected", rid)
            i = len(kind)
            index_of[rid] = i
            if parent_idx >= 0:
                children[parent_idx][slot] = i
            n = table[rid]
            labels.append(str(rid))
            kind.append(int(n.kind))
            player.append(n.player)
            loss.append(n.loss)
            probs.append(tuple(n.probs))
            children.append([None] * len(n.children))
            if n.kind == NodeKind.TERMINAL:
                infoset.append(-1)
                term_nodes.append(i)
                term_chance.append(reach)
                term_seq[MIN].append(last[MIN])
                term_seq[MAX].append(last[MAX])
                continue
            if n.kind == NodeKind.CHANCE:
                infoset.append(-1)
                for slot_c in range(len(n.children) - 1, -1, -1):
                    stack.append((n.children[slot_c], reach * n.probs[slot_c], last, depth, i, slot_c))
                continue
            p = n.player
            key = n.infoset
            if key in by_label:
                owner, x = by_label[key]
                if owner != p:
                    raise GameError(f"infoset {key} is shared by both players", rid)
                rec = infos[p][x]
                if rec["actions"] != n.actions:
                    raise GameError(f"infoset {key} members offer different actions", rid)
                if rec["parent_seq"] != last[p] or rec["depth"] != depth[p] + 1:
                    raise GameError(f"imperfect recall detected in infoset {key}", rid)
                rec["members"].append(i)
            else:
                x = len(infos[p])
                by_label[key] = (p, x)
                infos[p].append(dict(label=key, actions=n.actions, members=[i], parent_seq=last[p],
                                     depth=depth[p] + 1, start=next_seq[p]))
                action_labels[p].append(n.actions)
                next_seq[p] += len(n.actions)
            infoset.append(x)
            start = infos[p][x]["start"]
            for a in range(len(n.children) - 1, -1, -1):
                new_last = (start + a, last[1]) if p == MIN else (last[0], start + a)
                new_depth = (depth[0] + 1, depth[1]) if p == MIN else (depth[0], depth[1] + 1)
                stack.append((n.children[a], reach, new_last, new_depth, i, a))

        if len(index_of) != len(table):
            orphan = next(k for k in table if k not in index_of)
            raise GameError("unreachable from the root", orphan)

        treeplexes = tuple(_make_treeplex(p, infos[p], next_seq[p]) for p in (MIN, MAX))
        return cls(name, labels, kind, [tuple(c) for c in children], probs, player, infoset, loss,
                   treeplexes, np.array(term_nodes, dtype=np.int64), np.array(term_chance, dtype=float),
                   np.array(term_seq, dtype=np.int64).reshape(2, -1), action_labels)


def _check_record(n: RawNode) -> None:
    if n.kind == NodeKind.TERMINAL:
        if n.children:
            raise GameError("terminal node with children", n.id)
        if not np.isfinite(n.loss) or not 0.0 <= n.loss <= 1.0:
            raise GameError(f"loss {n.loss} outside [0, 1]", n.id)
    elif n.kind == NodeKind.CHANCE:
        if not n.children or len(n.probs) != len(n.children):
            raise GameError("chance node needs one probability per child", n.id)
        if any(not (q > 0.0) or not np.isfinite(q) for q in n.probs):
            raise GameError("chance probabilities must be strictly positive", n.id)
        s = float(sum(n.probs))
        if abs(s - 1.0) > PROB_TOL:
            raise GameError(f"probabilities sum to {s:.12g}", n.id)
    elif n.kind == NodeKind.DECISION:
        if n.player not in (MIN, MAX):
            raise GameError(f"invalid player {n.player}", n.id)
        if n.infoset is None:
            raise GameError("decision node without infoset", n.id)
        if not n.children or len(n.actions) != len(n.children):
            raise GameError("decision node needs one action label per child", n.id)
        if len(set(n.actions)) != len(n.actions):
            raise GameError("duplicate action labels", n.id)
    else:
        raise GameError(f"unknown node kind {n.kind}", n.id)


def _make_treeplex(owner: int, infos: list[dict], n_seq: int) -> Treeplex:
    seq_infoset = np.empty(n_seq, dtype=np.int64)
    seq_parent = np.empty(n_seq, dtype=np.int64)
    seq_children: list[list[int]] = [[] for _ in range(n_seq)]
    seq_depth = np.empty(n_seq, dtype=np.int64)
    infosets = []
    roots = []
    for x, rec in enumerate(infos):
        start, k = rec["start"], len(rec["actions"])
        seq_infoset[start:start + k] = x
        seq_parent[start:start + k] = rec["parent_seq"]
        seq_depth[start:start + k] = rec["depth"]
        ps = rec["parent_seq"]
        if ps < 0:
            roots.append(x)
            parent = None
        else:
            seq_children[ps].append(x)
            px = int(seq_infoset[ps])
            parent = (px, ps - infos[px]["start"])
        infosets.append(InfoSet(x, rec["label"], owner, tuple(rec["actions"]), tuple(rec["members"]),
                                parent, ps, rec["depth"], start))
    H = int(seq_depth.max()) if n_seq else 0
    levels = tuple(np.flatnonzero(seq_depth == d) for d in range(1, H + 1))
    return Treeplex(owner, tuple(infosets), seq_infoset, seq_parent,
                    tuple(tuple(c) for c in seq_children), tuple(roots), levels,
                    {x.label: x.index for x in infosets})


class TreeBuilder:
    """Bottom-up construction helper: create children first, then their parent."""

    def __init__(self, node_budget: int = DEFAULT_NODE_BUDGET):
        self.nodes: list[RawNode] = []
        self.node_budget = node_budget

    def _add(self, **kw) -> int:
        if len(self.nodes) >= self.node_budget:
            raise GameError(f"node budget of {self.node_budget} exceeded")
        i = len(self.nodes)
        self.nodes.append(RawNode(id=i, **kw))
        return i

    def terminal(self, loss: float) -> int:
        return self._add(kind=NodeKind.TERMINAL, loss=float(loss))

    def chance(self, outcomes: Iterable[tuple[int, float]]) -> int:
        outcomes = list(outcomes)
        return self._add(kind=NodeKind.CHANCE, children=tuple(c for c, _ in outcomes),
                         probs=tuple(float(q) for _, q in outcomes))

    def decision(self, player: int, infoset: str, actions: Iterable[tuple[str, int]]) -> int:
        actions = list(actions)
        return self._add(kind=NodeKind.DECISION, player=player, infoset=infoset,
                         actions=tuple(a for a, _ in actions), children=tuple(c for _, c in actions))

    def build(self, root: int, name: str) -> GameSpec:
        return GameSpec.from_raw(self.nodes, root=root, name=name, node_budget=self.node_budget)


# ---------------------------------------------------------------- sampling

@dataclass(frozen=True)
class Decision:
    player: int
    infoset: int
    action: int
    seq: int
    prob: float  # probability the episode policy gave the chosen action


@dataclass(frozen=True)
class Trajectory:
    decisions: tuple[Decision, ...]
    terminal: int
    loss: float  # min-player terminal loss
    seed: object = None

    def own(self, player: int) -> list[Decision]:
        return [d for d in self.decisions if d.player == player]

    def step_losses(self, player: int) -> list[float]:
        """Per own decision losses: zero except the last, which carries the terminal loss."""
        n = sum(1 for d in self.decisions if d.player == player)
        out = [0.0] * n
        if n:
            out[-1] = self.loss if player == MIN else 1.0 - self.loss
        return out


def sample_episode(game: GameSpec, min_policy, max_policy, rng: np.random.Generator,
                   seed=None) -> Trajectory:
    """Walk one root-to-terminal path, sampling chance and both players' policies."""
    probs = (_probs_of(min_policy, game, MIN), _probs_of(max_policy, game, MAX))
    kind, children, cum = game.kind, game.children, game._cum
    starts = game._starts
    decisions = []
    i = 0
    while kind[i] != NodeKind.TERMINAL:
        u = rng.random()
        if kind[i] == NodeKind.CHANCE:
            c = cum[i]
            k = 0
            while k < len(c) - 1 and u >= c[k]:
                k += 1
            i = children[i][k]
            continue
        p = game.player[i]
        x = game.infoset[i]
        start = starts[p][x]
        kids = children[i]
        pv = probs[p]
        acc = 0.0
        k = len(kids) - 1
        for a in range(len(kids)):
            q = pv[start + a]
            if not q >= 0.0 or q > 1.0 + 1e-9:
                raise ValueError(f"non-finite or invalid probability at infoset "
                                 f"{game.treeplexes[p].infosets[x].label}")
            acc += q
            if u < acc:
                k = a
                break
        while pv[start + k] <= 0.0:  # rounding guard: never pick a zero-probability action
            k -= 1
        decisions.append(Decision(p, x, k, start + k, float(pv[start + k])))
        i = kids[k]
    return Trajectory(tuple(decisions), i, game.loss[i], seed)


def _probs_of(policy, game: GameSpec, player: int):
    probs = getattr(policy, "probs", policy)
    probs = np.asarray(probs, dtype=float)
    if probs.shape != (game.n_sequences(player),):
        raise ValueError(f"{PLAYER_NAMES[player]} policy covers {probs.size} sequences, "
                         f"game has {game.n_sequences(player)}")
    return probs
