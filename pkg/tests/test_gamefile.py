import pytest

from localomd import MAX, MIN, GameError, build_kuhn
from localomd.gamefile import (GameParseError, format_game, isomorphic, load_game, parse_game,
                               save_game)

from conftest import MATCHING_PENNIES, random_game


def test_matching_pennies(tmp_path):
    path = tmp_path / "pennies.game"
    path.write_text(MATCHING_PENNIES)
    g = load_game(path)
    assert g.name == "pennies"
    assert g.A_X == 2 and g.B_Y == 2
    assert g.horizon(MIN) == 1 and g.horizon(MAX) == 1
    assert g.treeplex(MAX).n_infosets == 1


def test_probabilities_not_summing_to_one():
    text = "node r chance {a:0.5,b:0.6}\nnode a terminal 0\nnode b terminal 1\n"
    with pytest.raises(GameError, match="probabilities sum to 1.1") as e:
        parse_game(text)
    assert "node r" in str(e.value)


def test_fraction_probabilities():
    text = "node r chance {a:1/3,b:2/3}\nnode a terminal 0\nnode b terminal 1/2\n"
    g = parse_game(text)
    assert g.probs[g.root] == (1 / 3, 2 / 3)


@pytest.mark.parametrize("text, line", [
    ("node r chance {a:0.5,b:0.5}\nnode a terminal 0\nnode b terminal\n", 3),
    ("node r player mid infoset x {a:a}\nnode a terminal 0\n", 1),
    ("\n\nnode r chance a:1\n", 3),
    ("node r chance {a:1}\nnod a terminal 0\n", 2),
    ("node r chance {a:one}\nnode a terminal 0\n", 1),
])
def test_parse_errors_carry_line(text, line):
    with pytest.raises(GameParseError) as e:
        parse_game(text)
    assert e.value.line == line
    assert str(e.value).startswith(f"line {line}:")


def test_imperfect_recall_in_file():
    text = """node r player min infoset x {a:p,b:q}
node p player min infoset y {c:t0,d:t1}
node q player min infoset y {c:t2,d:t3}
node t0 terminal 0
node t1 terminal 1
node t2 terminal 1
node t3 terminal 0
"""
    with pytest.raises(GameError, match="imperfect recall"):
        parse_game(text)


def test_loss_out_of_range_in_file():
    with pytest.raises(GameError, match="node z"):
        parse_game("node r chance {z:1}\nnode z terminal 1.25\n")


def test_roundtrip_kuhn(tmp_path, kuhn):
    path = tmp_path / "kuhn.game"
    save_game(kuhn, path)
    again = load_game(path)
    assert isomorphic(kuhn, again)
    assert again.A_X == kuhn.A_X and again.B_Y == kuhn.B_Y


def test_roundtrip_leduc_and_random(leduc):
    for g in (leduc, random_game(5)):
        assert isomorphic(g, parse_game(format_game(g)))


def test_isomorphism_detects_differences(kuhn):
    other = build_kuhn(4)
    assert not isomorphic(kuhn, other)
    text = format_game(kuhn)
    changed = text.replace("terminal 0.25", "terminal 0.3", 1)
    assert not isomorphic(kuhn, parse_game(changed))
