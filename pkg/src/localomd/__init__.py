"""Local online mirror descent for zero-sum extensive-form games with trajectory feedback."""

from .benchmarks import GAMES, build_kuhn, build_leduc, build_liars_dice
from .evaluation import (AdversarialLossVector, RegretAudit, adversarial_loss_vector,
                         best_response_value, estimated_loss, expected_value, exploitability,
                         regret_audit)
from .game import MAX, MIN, GameError, GameSpec, Trajectory, TreeBuilder, sample_episode
from .gamefile import GameParseError, load_game, parse_game, save_game
from .harness import ExperimentConfig, RunLog, emit_outputs, grid_search, run_selfplay
from .learner import (KappaScaled, LocalOMD, LossAdaptive, VisitCount, current_average_policy,
                      init_learner, observe_and_update, schedule_advance, theoretical_eta)
from .omd import StabilizedStep, numerical_minimizer, stabilized_simplex_update
from .sequence_form import (BehavioralPolicy, RealizationPlan, balanced_policy, kappa,
                            realization_plan, uniform_policy)

__all__ = [
    "GAMES", "build_kuhn", "build_leduc", "build_liars_dice",
    "AdversarialLossVector", "RegretAudit", "adversarial_loss_vector", "best_response_value",
    "estimated_loss", "expected_value", "exploitability", "regret_audit",
    "MAX", "MIN", "GameError", "GameSpec", "Trajectory", "TreeBuilder", "sample_episode",
    "GameParseError", "load_game", "parse_game", "save_game",
    "ExperimentConfig", "RunLog", "emit_outputs", "grid_search", "run_selfplay",
    "KappaScaled", "LocalOMD", "LossAdaptive", "VisitCount", "current_average_policy",
    "init_learner", "observe_and_update", "schedule_advance", "theoretical_eta",
    "StabilizedStep", "numerical_minimizer", "stabilized_simplex_update",
    "BehavioralPolicy", "RealizationPlan", "balanced_policy", "kappa", "realization_plan",
    "uniform_policy",
]
