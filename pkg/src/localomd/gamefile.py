"""Plain-text game descriptions.

One record per line, the first record being the root::

    node <id> chance {<child>:<prob>,...}
    node <id> player <min|max> infoset <label> {<action>:<child>,...}
    node <id> terminal <loss>

Probabilities may be written as decimals or fractions (``1/3``). Blank lines and
text after ``#`` are ignored. Ids, labels and actions are whitespace-free tokens
without ``{}:,#``.
"""

from __future__ import annotations

import re
from fractions import Fraction
from pathlib import Path

from .game import DEFAULT_NODE_BUDGET, MAX, MIN, PLAYER_NAMES, GameSpec, NodeKind, RawNode


class GameParseError(ValueError):
    def __init__(self, message: str, line: int):
        self.line = line
        super().__init__(f"line {line}: {message}")


_TOKEN = r"[^\s{}:,#]+"
_HEAD = re.compile(rf"^node\s+({_TOKEN})\s+(chance|player|terminal)\b\s*(.*)$")
_PLAYER = re.compile(rf"^(min|max)\s+infoset\s+({_TOKEN})\s*(\{{.*\}})$")
_PAIR = re.compile(rf"^\s*({_TOKEN})\s*:\s*({_TOKEN})\s*$")


def _pairs(body: str, lineno: int) -> list[tuple[str, str]]:
    body = body.strip()
    if not (body.startswith("{") and body.endswith("}")):
        raise GameParseError("expected {key:value,...}", lineno)
    inner = body[1:-1].strip()
    if not inner:
        raise GameParseError("empty child list", lineno)
    out = []
    for part in inner.split(","):
        m = _PAIR.match(part)
        if not m:
            raise GameParseError(f"malformed entry {part.strip()!r}", lineno)
        out.append((m.group(1), m.group(2)))
    return out


def _number(tok: str, lineno: int) -> float:
    try:
        return float(Fraction(tok))
    except (ValueError, ZeroDivisionError):
        raise GameParseError(f"not a number: {tok!r}", lineno) from None


def parse_game(text: str, name: str = "game",
               node_budget: int = DEFAULT_NODE_BUDGET) -> GameSpec:
    nodes = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        m = _HEAD.match(line)
        if not m:
            raise GameParseError(f"unrecognised record {line!r}", lineno)
        nid, kind, rest = m.groups()
        if kind == "terminal":
            nodes.append(RawNode(nid, NodeKind.TERMINAL, loss=_number(rest.strip(), lineno)))
        elif kind == "chance":
            pairs = _pairs(rest, lineno)
            nodes.append(RawNode(nid, NodeKind.CHANCE, children=tuple(c for c, _ in pairs),
                                 probs=tuple(_number(p, lineno) for _, p in pairs)))
        else:
            pm = _PLAYER.match(rest.strip())
            if not pm:
                raise GameParseError("expected 'player <min|max> infoset <label> {...}'", lineno)
            who, label, body = pm.groups()
            pairs = _pairs(body, lineno)
            nodes.append(RawNode(nid, NodeKind.DECISION, player=MIN if who == "min" else MAX,
                                 infoset=label, actions=tuple(a for a, _ in pairs),
                                 children=tuple(c for _, c in pairs)))
    return GameSpec.from_raw(nodes, name=name, node_budget=node_budget)


def load_game(path, node_budget: int = DEFAULT_NODE_BUDGET) -> GameSpec:
    path = Path(path)
    return parse_game(path.read_text(), name=path.stem, node_budget=node_budget)


def format_game(game: GameSpec) -> str:
    """Serialize a compiled game; ``parse_game(format_game(g))`` rebuilds an isomorphic game."""
    lines = []
    for i in range(game.n_nodes):
        k = game.kind[i]
        if k == NodeKind.TERMINAL:
            lines.append(f"node n{i} terminal {game.loss[i]!r}")
        elif k == NodeKind.CHANCE:
            body = ",".join(f"n{c}:{q!r}" for c, q in zip(game.children[i], game.probs[i]))
            lines.append(f"node n{i} chance {{{body}}}")
        else:
            p = game.player[i]
            x = game.treeplexes[p].infosets[game.infoset[i]]
            body = ",".join(f"{a}:n{c}" for a, c in zip(x.actions, game.children[i]))
            lines.append(f"node n{i} player {PLAYER_NAMES[p]} infoset {x.label} {{{body}}}")
    return "\n".join(lines) + "\n"


def save_game(game: GameSpec, path) -> None:
    Path(path).write_text(format_game(game))


def isomorphic(a: GameSpec, b: GameSpec, tol: float = 0.0) -> bool:
    """Structural equality up to node renaming and infoset relabelling.

    Children are compared in order; infoset labels must correspond one-to-one.
    """
    if a.n_nodes != b.n_nodes:
        return False
    label_map: dict = {}
    stack = [(a.root, b.root)]
    while stack:
        i, j = stack.pop()
        if a.kind[i] != b.kind[j] or len(a.children[i]) != len(b.children[j]):
            return False
        k = a.kind[i]
        if k == NodeKind.TERMINAL:
            if abs(a.loss[i] - b.loss[j]) > tol:
                return False
            continue
        if k == NodeKind.CHANCE:
            if any(abs(p - q) > tol for p, q in zip(a.probs[i], b.probs[j])):
                return False
        else:
            if a.player[i] != b.player[j]:
                return False
            key = (a.player[i], a.infoset[i])
            target = (b.player[j], b.infoset[j])
            if label_map.setdefault(key, target) != target:
                return False
            xa = a.treeplexes[a.player[i]].infosets[a.infoset[i]]
            xb = b.treeplexes[b.player[j]].infosets[b.infoset[j]]
            if xa.actions != xb.actions:
                return False
        stack.extend(zip(a.children[i], b.children[j]))
    return len(set(label_map.values())) == len(label_map)
