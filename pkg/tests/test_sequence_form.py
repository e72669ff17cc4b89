from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from localomd import MAX, MIN, TreeBuilder, build_liars_dice
from localomd.evaluation import adversarial_loss_vector, expected_value
from localomd.sequence_form import (BehavioralPolicy, RealizationPlan, average_plans,
                                    balanced_policy, behavioral_from_plan, check_plan,
                                    check_policy, format_policy, infoset_reach, kappa,
                                    parse_policy, realization_plan, subtree_action_counts,
                                    uniform_policy)

from conftest import deterministic_policies, random_game, random_policy, small_random_games


def plan_by_products(game, policy):
    """Reference plan: walk each sequence's parent chain and multiply."""
    tp = game.treeplex(policy.owner)
    out = np.empty(tp.n_sequences)
    for s in range(tp.n_sequences):
        v, cur = 1.0, s
        while cur >= 0:
            v *= policy.probs[cur]
            cur = tp.seq_parent[cur]
        out[s] = v
    return out


def brute_force_kappa(game, sampling):
    sp = plan_by_products(game, sampling)
    return max(float(np.sum(plan_by_products(game, mu) / sp))
               for mu in deterministic_policies(game, sampling.owner))


# ------------------------------------------------------------ plans

def test_kuhn_uniform_plan(kuhn):
    for p in (MIN, MAX):
        tp = kuhn.treeplex(p)
        plan = realization_plan(kuhn, uniform_policy(kuhn, p)).values
        for x in tp.infosets:
            expected = 0.5 ** x.depth  # depth is 1-based
            assert np.all(plan[x.start:x.start + x.size] == expected)
    depth2 = [x for x in kuhn.treeplex(MIN).infosets if x.depth == 2]
    assert len(depth2) == 3


def test_deterministic_plan_is_indicator(kuhn):
    for mu in list(deterministic_policies(kuhn, MIN))[::7]:
        plan = realization_plan(kuhn, mu).values
        assert set(plan) <= {0.0, 1.0}
        check_plan(kuhn, RealizationPlan(MIN, plan))
        for x in kuhn.treeplex(MIN).infosets:
            reach = 1.0 if x.parent_seq < 0 else plan[x.parent_seq]
            assert plan[x.start:x.start + x.size].sum() == reach


def test_plan_matches_products_and_conserves_flow(leduc):
    rng = np.random.default_rng(0)
    for p in (MIN, MAX):
        pol = random_policy(leduc, p, rng)
        plan = realization_plan(leduc, pol)
        np.testing.assert_allclose(plan.values, plan_by_products(leduc, pol), rtol=1e-12, atol=1e-300)
        check_plan(leduc, plan)


def test_plan_rejects_short_policy(kuhn):
    with pytest.raises(ValueError):
        realization_plan(kuhn, BehavioralPolicy(MIN, np.full(11, 0.5)))


def test_check_policy_errors(kuhn):
    probs = uniform_policy(kuhn, MIN).probs.copy()
    probs[0] = 0.6
    with pytest.raises(ValueError, match="sum to"):
        check_policy(kuhn, BehavioralPolicy(MIN, probs))
    probs = uniform_policy(kuhn, MIN).probs.copy()
    probs[:2] = [1.0, 0.0]
    check_policy(kuhn, BehavioralPolicy(MIN, probs))
    with pytest.raises(ValueError, match="zero probability"):
        check_policy(kuhn, BehavioralPolicy(MIN, probs), strict=True)


def test_deep_plan_does_not_underflow_spuriously():
    # a chain of 400 two-action min decisions; plan values go down to 2^-400
    b = TreeBuilder()
    node = b.terminal(0.0)
    for i in reversed(range(400)):
        node = b.decision(MIN, f"d{i}", [("l", node), ("r", b.terminal(1.0))])
    g = b.build(node, "chain")
    plan = realization_plan(g, uniform_policy(g, MIN)).values
    x = g.treeplex(MIN).infosets[-1]
    assert x.depth == 400
    assert plan[x.start] == pytest.approx(2.0 ** -400, rel=1e-12)


# ------------------------------------------------------------ conversions

def test_uniform_roundtrip(kuhn):
    pol = behavioral_from_plan(kuhn, realization_plan(kuhn, uniform_policy(kuhn, MAX)))
    assert np.array_equal(pol.probs, uniform_policy(kuhn, MAX).probs)


def test_unreachable_infoset_gets_uniform(kuhn):
    probs = uniform_policy(kuhn, MIN).probs.copy()
    tp = kuhn.treeplex(MIN)
    root = tp.infoset_of("J/")
    probs[root.start:root.start + 2] = [0.0, 1.0]  # never check with J: J/pb unreachable
    pol = behavioral_from_plan(kuhn, realization_plan(kuhn, BehavioralPolicy(MIN, probs)))
    x = tp.infoset_of("J/pb")
    assert list(pol.local(kuhn, x.index)) == [0.5, 0.5]


def test_negative_plan_rejected(kuhn):
    v = realization_plan(kuhn, uniform_policy(kuhn, MIN)).values.copy()
    v[0] = -0.1
    with pytest.raises(ValueError, match="negative"):
        behavioral_from_plan(kuhn, RealizationPlan(MIN, v))


def test_leduc_roundtrip_random_policies(leduc):
    for seed in range(100):
        rng = np.random.default_rng(seed)
        p = seed % 2
        pol = random_policy(leduc, p, rng, floor=1e-3)
        back = behavioral_from_plan(leduc, realization_plan(leduc, pol))
        assert np.max(np.abs(back.probs - pol.probs)) <= 1e-10


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10_000))
def test_plan_of_behavioral_of_plan_is_identity(seed):
    g = random_game(seed % 40)
    rng = np.random.default_rng(seed)
    pol = random_policy(g, MIN, rng, floor=0.01)
    plan = realization_plan(g, pol)
    again = realization_plan(g, behavioral_from_plan(g, plan))
    assert np.max(np.abs(again.values - plan.values)) <= 1e-10


# ------------------------------------------------------------ averaging

def test_average_identity_and_midpoint(kuhn):
    plan = realization_plan(kuhn, uniform_policy(kuhn, MIN))
    assert np.array_equal(average_plans(plan, 1).values, plan.values)
    dets = list(deterministic_policies(kuhn, MIN))
    tp = kuhn.treeplex(MIN)
    root = tp.infoset_of("Q/")
    a = next(d for d in dets if d.probs[root.start] == 1.0)
    b = next(d for d in dets if d.probs[root.start + 1] == 1.0)
    avg = average_plans(realization_plan(kuhn, a).values + realization_plan(kuhn, b).values, 2, MIN)
    assert list(avg.values[root.start:root.start + 2]) == [0.5, 0.5]
    check_plan(kuhn, avg)


def test_average_zero_count_rejected(kuhn):
    with pytest.raises(ValueError):
        average_plans(np.zeros(12), 0, MIN)


def test_average_linearity(kuhn):
    rng = np.random.default_rng(5)
    nu = random_policy(kuhn, MAX, rng)
    plans = [realization_plan(kuhn, random_policy(kuhn, MIN, rng)).values for _ in range(50)]
    avg = average_plans(np.sum(plans, axis=0), 50, MIN)
    check_plan(kuhn, avg)
    mean = np.mean([expected_value(kuhn, RealizationPlan(MIN, v), nu) for v in plans])
    assert abs(expected_value(kuhn, avg, nu) - mean) <= 1e-9
    assert abs(expected_value(kuhn, behavioral_from_plan(kuhn, avg), nu) - mean) <= 1e-9


# ------------------------------------------------------------ balanced policy and kappa

def test_balanced_leaf_infoset_is_uniform(kuhn):
    b = TreeBuilder()
    g = b.build(b.decision(MIN, "x", [(str(i), b.terminal(0.5)) for i in range(3)]), "leaf")
    assert np.allclose(balanced_policy(g, MIN).probs, 1 / 3)


def test_balanced_two_level_counts():
    b = TreeBuilder()
    y = b.decision(MIN, "y", [(c, b.terminal(0.2)) for c in "uvw"])
    z = b.decision(MIN, "z", [("s", b.terminal(0.9))])
    g = b.build(b.decision(MIN, "x", [("a", y), ("b", z)]), "toy")
    x = g.treeplex(MIN).infoset_of("x")
    pol = balanced_policy(g, MIN)
    assert list(pol.local(g, x.index)) == [4 / 6, 2 / 6]
    seq, inf = subtree_action_counts(g, MIN)
    assert inf[x.index] == 6
    assert kappa(g, pol).total == pytest.approx(g.A_X)


def test_kappa_single_infoset_uniform():
    b = TreeBuilder()
    for k in (2, 3, 5):
        g = b.build(b.decision(MIN, "x", [(str(i), b.terminal(0.0)) for i in range(k)]), "k")
        assert kappa(g, uniform_policy(g, MIN)).total == pytest.approx(k, abs=1e-12)
        b = TreeBuilder()


def test_balanced_kappa_equals_action_count_exactly(kuhn, leduc):
    for g, expected in ((kuhn, 12), (leduc, 1092)):
        for p in (MIN, MAX):
            rep = kappa(g, balanced_policy(g, p))
            assert rep.total == expected
            assert np.array_equal(rep.per_infoset, np.array(rep.subtree_infoset_counts, dtype=float))


def test_balanced_kappa_exact_rational(leduc):
    """Same identity in exact arithmetic, so float rounding cannot hide a mismatch."""
    tp = leduc.treeplex(MIN)
    seq, inf = subtree_action_counts(leduc, MIN)
    k = {}
    for x in reversed(tp.infosets):
        k[x.index] = max(Fraction(1 + sum(k[c] for c in tp.seq_children[s])) / Fraction(seq[s], inf[x.index])
                         for s in x.sequences)
    assert sum(k[r] for r in tp.roots) == tp.n_sequences


def test_kappa_lower_bound(leduc):
    rng = np.random.default_rng(1)
    for _ in range(5):
        pol = random_policy(leduc, MAX, rng, floor=0.05)
        rep = kappa(leduc, pol)
        assert rep.total >= leduc.B_Y
        assert np.all(rep.per_infoset >= np.array(rep.subtree_infoset_counts) - 1e-9)


def test_kappa_rejects_zero_probability(kuhn):
    probs = uniform_policy(kuhn, MIN).probs.copy()
    probs[:2] = [1.0, 0.0]
    with pytest.raises(ValueError, match="zero probability"):
        kappa(kuhn, BehavioralPolicy(MIN, probs))


def test_kappa_kuhn_uniform_brute_force(kuhn):
    for p in (MIN, MAX):
        pol = uniform_policy(kuhn, p)
        assert kappa(kuhn, pol).total == pytest.approx(brute_force_kappa(kuhn, pol), rel=1e-14)


def test_kappa_random_games_brute_force():
    rng = np.random.default_rng(11)
    for g in small_random_games(5):
        for p in (MIN, MAX):
            for pol in (uniform_policy(g, p), balanced_policy(g, p), random_policy(g, p, rng, floor=0.1)):
                assert kappa(g, pol).total == pytest.approx(brute_force_kappa(g, pol), rel=1e-12)


@pytest.mark.slow
def test_liars_dice_balanced_kappa():
    g = build_liars_dice(1, 6)
    assert kappa(g, balanced_policy(g, MIN)).total == g.A_X == 24570


# ------------------------------------------------------------ cross-module and files

def test_loss_vector_dot_plan_is_value(kuhn):
    rng = np.random.default_rng(3)
    for _ in range(20):
        mu, nu = random_policy(kuhn, MIN, rng), random_policy(kuhn, MAX, rng)
        lv = adversarial_loss_vector(kuhn, nu, MIN)
        assert abs(lv.dot(realization_plan(kuhn, mu)) - expected_value(kuhn, mu, nu)) <= 1e-12


def test_infoset_reach(kuhn):
    plan = realization_plan(kuhn, uniform_policy(kuhn, MIN))
    reach = infoset_reach(kuhn, plan)
    for x in kuhn.treeplex(MIN).infosets:
        assert reach[x.index] == (1.0 if x.parent_seq < 0 else 0.5)


def test_policy_file_roundtrip(leduc):
    pol = random_policy(leduc, MIN, np.random.default_rng(2))
    back = parse_policy(leduc, MIN, format_policy(leduc, pol))
    assert np.array_equal(back.probs, pol.probs)


def test_policy_file_errors(kuhn):
    text = format_policy(kuhn, uniform_policy(kuhn, MIN))
    lines = text.splitlines()
    with pytest.raises(ValueError, match="misses"):
        parse_policy(kuhn, MIN, "\n".join(lines[1:]))
    with pytest.raises(ValueError, match="twice"):
        parse_policy(kuhn, MIN, text + lines[0])
    with pytest.raises(ValueError, match="unknown"):
        parse_policy(kuhn, MIN, text + "nope: 0.5 0.5\n")
    with pytest.raises(ValueError, match="actions"):
        parse_policy(kuhn, MIN, text.replace(lines[0], lines[0] + " 0.0"))
