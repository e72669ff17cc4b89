"""Command line: ``solve``, ``grid``, ``eval`` and ``kappa``."""

from __future__ import annotations

import argparse
import sys

from .evaluation import exploitability, expected_value
from .game import MAX, MIN, PLAYER_NAMES
from .harness import (AUTO_ETA, ExperimentConfig, emit_outputs, grid_search, load_config,
                      resolve_game, resolve_policy, run_selfplay, write_grid)
from .sequence_form import kappa, load_policy


def _run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key=value config file; flags override it")
    p.add_argument("--game", help="kuhn | leduc | liars-dice | file:PATH")
    p.add_argument("--rounds", type=int)
    p.add_argument("--schedule", help="theorem4 | count | loss, or 'min,max'")
    eta = p.add_mutually_exclusive_group()
    eta.add_argument("--eta", help="learning rate, or 'min,max'")
    eta.add_argument("--eta-auto", action="store_true", help="theory-derived rate for --rounds")
    p.add_argument("--sampling", help="balanced | uniform | file:PATH, or 'min,max'")
    p.add_argument("--initial", help="uniform | file:PATH, or 'min,max'")
    p.add_argument("--seed", type=int)
    p.add_argument("--checkpoints", type=int, help="number of log-spaced checkpoints")
    p.add_argument("--delta", type=float, help="confidence level for bound audits")
    p.add_argument("--out", help="output directory")
    p.add_argument("--no-wallclock", dest="wallclock", action="store_const", const=False,
                   help="write 0 in the seconds column (byte-identical reruns)")
    p.add_argument("--exact-regret", dest="exact_regret", action="store_const", const=True,
                   help="also track true regrets from exact loss vectors")


def _config(args) -> ExperimentConfig:
    flags = {k: getattr(args, k) for k in ("game", "rounds", "schedule", "eta", "sampling", "initial",
                                           "seed", "checkpoints", "delta", "out", "wallclock",
                                           "exact_regret")}
    if args.eta_auto:
        flags["eta"] = AUTO_ETA
    if args.config:
        return load_config(args.config, **flags)
    return ExperimentConfig(**{k: v for k, v in flags.items() if v is not None})


def _cmd_solve(args) -> int:
    cfg = _config(args)
    log = run_selfplay(cfg)
    print(f"game {log.game.name}: {cfg.rounds} rounds, {2 * cfg.rounds} episodes")
    print(f"eta min={log.etas[MIN]:.6g} max={log.etas[MAX]:.6g}; "
          f"kappa min={log.kappa_totals[MIN]:.6g} max={log.kappa_totals[MAX]:.6g}")
    print("round,episodes,exploitability,regret_min_est,regret_max_est")
    for r in log.rows:
        print(f"{r.round},{r.episodes},{r.exploitability:.6g},{r.regret_min_est:.6g},{r.regret_max_est:.6g}")
    if log.true_regrets is not None:
        print(f"true regret min={log.true_regrets[MIN]:.6g} max={log.true_regrets[MAX]:.6g}")
    if cfg.out:
        paths = emit_outputs(log, cfg.out)
        print(f"wrote {', '.join(str(p) for p in paths.values())}")
    return 0


def _cmd_grid(args) -> int:
    cfg = _config(args)
    etas = [float(e) for e in args.eta_grid.split(",") if e.strip()]
    res = grid_search(cfg, etas)
    print("eta,exploitability")
    for e, v in res.table:
        print(f"{e!r},{v!r}")
    print(f"best eta {res.best_eta!r}")
    if cfg.out:
        from pathlib import Path
        Path(cfg.out).mkdir(parents=True, exist_ok=True)
        write_grid(res, Path(cfg.out) / "grid.csv")
    return 0


def _cmd_eval(args) -> int:
    game = resolve_game(args.game)
    pmin = load_policy(game, MIN, args.min_policy)
    pmax = load_policy(game, MAX, args.max_policy)
    print(f"value {expected_value(game, pmin, pmax)!r}")
    print(f"exploitability {exploitability(game, pmin, pmax)!r}")
    return 0


def _cmd_kappa(args) -> int:
    game = resolve_game(args.game)
    players = (MIN, MAX) if args.player == "both" else (PLAYER_NAMES.index(args.player),)
    for p in players:
        pol = resolve_policy(game, p, args.policy)
        rep = kappa(game, pol)
        tp = game.treeplex(p)
        print(f"{PLAYER_NAMES[p]}: kappa {rep.total!r}  A_X {tp.n_sequences}  "
              f"infosets {tp.n_infosets}  H {game.horizon(p)}")
        if args.table:
            for x in tp.infosets:
                print(f"  {x.label}\t{float(rep.per_infoset[x.index])!r}\t{rep.subtree_infoset_counts[x.index]}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="localomd", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)
    solve = sub.add_parser("solve", help="run fixed-sampling self-play")
    _run_flags(solve)
    solve.set_defaults(func=_cmd_solve)
    grid = sub.add_parser("grid", help="learning-rate grid search")
    _run_flags(grid)
    grid.add_argument("--eta-grid", required=True, help="comma-separated learning rates")
    grid.set_defaults(func=_cmd_grid)
    ev = sub.add_parser("eval", help="value and exploitability of a policy pair")
    ev.add_argument("--game", required=True)
    ev.add_argument("--min-policy", required=True)
    ev.add_argument("--max-policy", required=True)
    ev.set_defaults(func=_cmd_eval)
    kp = sub.add_parser("kappa", help="kappa of a sampling policy")
    kp.add_argument("--game", required=True)
    kp.add_argument("--policy", default="balanced", help="balanced | uniform | file:PATH")
    kp.add_argument("--player", choices=("min", "max", "both"), default="both")
    kp.add_argument("--table", action="store_true", help="print the per-infoset table")
    kp.set_defaults(func=_cmd_kappa)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError, RuntimeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
