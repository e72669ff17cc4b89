"""Fixed-sampling self-play: configs, runs, checkpoint logs, grid search and output files.

Each round both players first sample their observation episode against the other's
current policy, then both learners update. The min-learner's episode is played with
(min sampling policy, current max policy), the max-learner's with (current min policy,
max sampling policy). Averages are taken over the policies played in rounds ``1..t``.

Randomness: the master seed feeds ``numpy.random.SeedSequence(seed, spawn_key=(p,))``
for player ``p``; each learner draws its episodes from its own PCG64 stream, so the
learning trajectory does not depend on the checkpoint cadence.
"""

from __future__ import annotations

import csv
import dataclasses
import math
import time
from dataclasses import dataclass, field
from importlib import metadata
from pathlib import Path

import numpy as np

from .benchmarks import GAMES
from .evaluation import (RegretTracker, exploitability, kappa_rate_regret_bound,
                         estimation_gap_bound, estimated_loss)
from .game import MAX, MIN, PLAYER_NAMES, GameSpec, sample_episode
from .gamefile import load_game
from .learner import LocalOMD, init_learner, make_schedule, theoretical_eta
from .sequence_form import (BehavioralPolicy, RealizationPlan, balanced_policy,
                            behavioral_from_plan, kappa, load_policy, realization_plan,
                            save_policy, uniform_policy)

CURVE_COLUMNS = ("round", "episodes", "exploitability", "regret_min_est", "regret_max_est", "seconds")
AUTO_ETA = "theorem4-auto"


def artifact_version() -> str:
    try:
        return f"artifact {metadata.version('artifact')}"
    except metadata.PackageNotFoundError:
        return "artifact (unknown version)"


# ------------------------------------------------------------ config

def _pair(value, convert=str) -> tuple:
    """``"a"`` or ``"a,b"`` (or a 2-sequence) to a per-player pair."""
    if isinstance(value, (tuple, list)):
        parts = list(value)
    else:
        parts = [p.strip() for p in str(value).split(",")]
    if len(parts) == 1:
        parts = parts * 2
    if len(parts) != 2:
        raise ValueError(f"expected one value or 'min,max', got {value!r}")
    return tuple(convert(p) for p in parts)


def _eta_value(v):
    if v is None or v in (AUTO_ETA, "auto"):
        return None
    eta = float(v)
    if not (eta > 0 and math.isfinite(eta)):
        raise ValueError(f"eta must be positive, got {v!r}")
    return eta


def _bool(v) -> bool:
    if isinstance(v, bool):
        return v
    s = str(v).strip().lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {v!r}")


@dataclass(frozen=True)
class ExperimentConfig:
    """One self-play run. Per-player fields are ``(min, max)`` pairs.

    ``eta`` entries of ``None`` mean the theory-derived rate for ``rounds``.
    ``exact_regret`` additionally tracks true regrets from exact loss vectors
    (one extra pass over the terminals per player per round).
    """

    game: str = "kuhn"
    rounds: int = 1000
    schedule: tuple = ("theorem4", "theorem4")
    eta: tuple = (None, None)
    sampling: tuple = ("balanced", "balanced")
    initial: tuple = ("uniform", "uniform")
    seed: int = 0
    checkpoints: int = 20
    delta: float = 0.1
    out: str | None = None
    wallclock: bool = True
    exact_regret: bool = False

    def __post_init__(self):
        set_ = lambda k, v: object.__setattr__(self, k, v)  # noqa: E731
        set_("schedule", _pair(self.schedule))
        set_("eta", _pair(self.eta, _eta_value))
        set_("sampling", _pair(self.sampling))
        set_("initial", _pair(self.initial))
        set_("rounds", int(self.rounds))
        set_("seed", int(self.seed))
        set_("checkpoints", int(self.checkpoints))
        set_("delta", float(self.delta))
        set_("wallclock", _bool(self.wallclock))
        set_("exact_regret", _bool(self.exact_regret))
        if self.rounds < 1:
            raise ValueError("rounds must be at least 1")
        if self.checkpoints < 1:
            raise ValueError("need at least one checkpoint")
        if not 0 < self.delta < 1:
            raise ValueError("delta must lie in (0, 1)")
        for s in self.schedule:
            if s not in ("theorem4", "count", "loss", "loss-adaptive"):
                raise ValueError(f"unknown schedule {s!r}")

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)

    def to_lines(self, resolved_eta: tuple | None = None) -> list[str]:
        eta = resolved_eta if resolved_eta is not None else self.eta
        fmt_eta = ",".join(AUTO_ETA if e is None else repr(float(e)) for e in eta)
        return [
            f"game={self.game}",
            f"rounds={self.rounds}",
            f"schedule={','.join(self.schedule)}",
            f"eta={fmt_eta}",
            f"sampling={','.join(self.sampling)}",
            f"initial={','.join(self.initial)}",
            f"seed={self.seed}",
            f"checkpoints={self.checkpoints}",
            f"delta={self.delta!r}",
            f"wallclock={str(self.wallclock).lower()}",
            f"exact_regret={str(self.exact_regret).lower()}",
        ] + ([f"out={self.out}"] if self.out else [])


CONFIG_KEYS = {f.name for f in dataclasses.fields(ExperimentConfig)}


def parse_config(text: str) -> dict:
    """``key=value`` lines (``#`` comments) to a dict of raw config values."""
    out = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip().replace("-", "_")
        if not sep or key not in CONFIG_KEYS:
            raise ValueError(f"config line {lineno}: unknown setting {line!r}")
        out[key] = value.strip()
    return out


def load_config(path, **overrides) -> ExperimentConfig:
    values = parse_config(Path(path).read_text())
    values.update({k: v for k, v in overrides.items() if v is not None})
    return ExperimentConfig(**values)


# ------------------------------------------------------------ resolution

def resolve_game(spec: str) -> GameSpec:
    if spec.startswith("file:"):
        return load_game(spec[5:])
    if spec in GAMES:
        return GAMES[spec]()
    if Path(spec).is_file():
        return load_game(spec)
    raise ValueError(f"unknown game {spec!r}; use {', '.join(GAMES)} or file:PATH")


def resolve_policy(game: GameSpec, player: int, spec: str) -> BehavioralPolicy:
    if spec == "uniform":
        return uniform_policy(game, player)
    if spec == "balanced":
        return balanced_policy(game, player)
    if spec.startswith("file:"):
        return load_policy(game, player, spec[5:])
    raise ValueError(f"unknown policy {spec!r}; use balanced, uniform or file:PATH")


def checkpoint_rounds(T: int, count: int) -> np.ndarray:
    """Up to ``count`` distinct log-spaced rounds in ``[1, T]``, always ending at ``T``."""
    if count < 1:
        raise ValueError("need at least one checkpoint")
    if count == 1:
        return np.array([T])
    r = np.unique(np.rint(np.geomspace(1, T, count)).astype(np.int64))
    r[-1] = T
    return r


# ------------------------------------------------------------ runs

@dataclass(frozen=True)
class CheckpointRow:
    round: int
    episodes: int
    exploitability: float
    regret_min_est: float
    regret_max_est: float
    seconds: float

    def as_tuple(self) -> tuple:
        return tuple(getattr(self, c) for c in CURVE_COLUMNS)


class RunError(RuntimeError):
    pass


@dataclass
class RunLog:
    config: ExperimentConfig
    rows: list[CheckpointRow]
    etas: tuple
    kappa_totals: tuple
    average_plans: tuple  # (RealizationPlan, RealizationPlan)
    game: GameSpec | None = None
    version: str = field(default_factory=artifact_version)
    true_regrets: tuple | None = None  # (R_min, R_max) when tracked
    estimated_regrets: tuple | None = None
    learners: tuple | None = None

    def __post_init__(self):
        if not self.rows:
            raise ValueError("a run log needs at least one checkpoint")
        for r in self.rows:
            if r.episodes != 2 * r.round:
                raise ValueError(f"episode count {r.episodes} at round {r.round}")

    @property
    def final_exploitability(self) -> float:
        return self.rows[-1].exploitability

    def average_policies(self) -> tuple[BehavioralPolicy, BehavioralPolicy]:
        return tuple(behavioral_from_plan(self.game, p) for p in self.average_plans)

    def bounds(self) -> dict:
        """Estimation-gap and kappa-rate regret bounds at the final round, per player."""
        T = self.config.rounds
        out = {}
        for p in (MIN, MAX):
            out[PLAYER_NAMES[p]] = {
                "estimation_gap": estimation_gap_bound(self.game, p, self.kappa_totals[p], T,
                                                       self.config.delta),
                "kappa_rate_regret": kappa_rate_regret_bound(self.game, p, self.kappa_totals[p], T,
                                                             self.config.delta),
            }
        return out


def build_learners(config: ExperimentConfig, game: GameSpec, record: bool = False):
    learners, etas, kappas = [], [], []
    for p in (MIN, MAX):
        sampling = resolve_policy(game, p, config.sampling[p])
        initial = resolve_policy(game, p, config.initial[p])
        eta = config.eta[p]
        if eta is None:
            eta = theoretical_eta(game, sampling, config.rounds, p)
        schedule = make_schedule(config.schedule[p], eta, game, sampling)
        learners.append(init_learner(game, p, sampling, initial, schedule, record=record))
        etas.append(eta)
        kappas.append(kappa(game, sampling).total)
    return learners, tuple(etas), tuple(kappas)


def player_rngs(seed: int) -> tuple[np.random.Generator, np.random.Generator]:
    return tuple(np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(p,))))
                 for p in (MIN, MAX))


def run_selfplay(config: ExperimentConfig, game: GameSpec | None = None,
                 record: bool = False, keep_learners: bool = False,
                 on_round=None) -> RunLog:
    """Run the fixed-sampling protocol for ``config.rounds`` rounds.

    ``on_round(t, min_plan, max_plan)`` is called with the plans played in round ``t``.
    """
    if game is None:
        game = resolve_game(config.game)
    learners, etas, kappas = build_learners(config, game, record)
    lmin, lmax = learners
    rngs = player_rngs(config.seed)
    trackers = (RegretTracker(game, MIN), RegretTracker(game, MAX))
    s_plans = (realization_plan(game, lmin.sampling_policy()).values,
               realization_plan(game, lmax.sampling_policy()).values)
    checkpoints = set(checkpoint_rounds(config.rounds, config.checkpoints).tolist())
    rows = []
    start = time.perf_counter()
    for t in range(1, config.rounds + 1):
        try:
            plans = (realization_plan(game, BehavioralPolicy(MIN, lmin.policy)).values,
                     realization_plan(game, BehavioralPolicy(MAX, lmax.policy)).values)
            if on_round is not None:
                on_round(t, plans[MIN], plans[MAX])
            trajs = (sample_episode(game, lmin.sampling, lmax.policy, rngs[MIN], seed=(config.seed, MIN, t)),
                     sample_episode(game, lmin.policy, lmax.sampling, rngs[MAX], seed=(config.seed, MAX, t)))
            for p, learner in ((MIN, lmin), (MAX, lmax)):
                trackers[p].add_estimate(plans[p], estimated_loss(trajs[p], RealizationPlan(p, s_plans[p])))
                if config.exact_regret:
                    trackers[p].add_exact(plans[p], plans[1 - p])
                trackers[p].end_round()
                learner.observe_and_update(trajs[p], plans[p])
            if t in checkpoints:
                exp = exploitability(game, RealizationPlan(MIN, lmin.plan_sum / t),
                                     RealizationPlan(MAX, lmax.plan_sum / t))
                secs = time.perf_counter() - start if config.wallclock else 0.0
                rows.append(CheckpointRow(t, 2 * t, float(exp), float(trackers[MIN].estimated_regret()),
                                          float(trackers[MAX].estimated_regret()), secs))
        except Exception as e:
            raise RunError(f"round {t}: {e}") from e
    averages = (RealizationPlan(MIN, lmin.plan_sum / lmin.rounds),
                RealizationPlan(MAX, lmax.plan_sum / lmax.rounds))
    true = (tuple(tr.true_regret() for tr in trackers) if config.exact_regret else None)
    est = (rows[-1].regret_min_est, rows[-1].regret_max_est)
    return RunLog(config, rows, etas, kappas, averages, game=game, true_regrets=true,
                  estimated_regrets=est, learners=(lmin, lmax) if keep_learners else None)


# ------------------------------------------------------------ grid search

@dataclass(frozen=True)
class GridResult:
    table: list  # (eta, final exploitability), in grid order
    best_eta: float
    logs: dict

    def best(self) -> tuple[float, float]:
        return min(self.table, key=lambda r: (r[1], r[0]))


def grid_search(base: ExperimentConfig, etas, game: GameSpec | None = None) -> GridResult:
    """One run per rate (same rate for both players), all with the base seed.

    Sharing the seed means cells differ only by the rate, and each cell is exactly
    the run the same config would produce on its own.
    """
    etas = [float(e) for e in etas]
    if not etas:
        raise ValueError("empty learning-rate grid")
    for e in etas:
        _eta_value(e)
    if game is None:
        game = resolve_game(base.game)
    logs = {}
    for e in etas:
        if e not in logs:
            logs[e] = run_selfplay(base.replace(eta=(e, e)), game)
    table = [(e, logs[e].final_exploitability) for e in etas]
    best = min(table, key=lambda r: (r[1], r[0]))[0]
    return GridResult(table, best, logs)


# ------------------------------------------------------------ outputs

def write_curve(rows, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CURVE_COLUMNS)
        for r in rows:
            w.writerow([r.round, r.episodes] + [repr(float(v)) for v in r.as_tuple()[2:]])


def read_curve(path) -> list[CheckpointRow]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(header) != CURVE_COLUMNS:
            raise ValueError(f"{path}: unexpected header {header}")
        return [CheckpointRow(int(r[0]), int(r[1]), *map(float, r[2:])) for r in reader]


def curve_svg(rows, width: int = 640, height: int = 420) -> str:
    """Log-log exploitability against episodes as a standalone SVG."""
    pts = [(r.episodes, r.exploitability) for r in rows if r.exploitability > 0]
    m = 60
    lines = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
             f'font-family="sans-serif" font-size="11">',
             f'<rect width="{width}" height="{height}" fill="white"/>']
    if pts:
        lx = np.log10([p[0] for p in pts])
        ly = np.log10([p[1] for p in pts])
        x0, x1 = math.floor(lx.min()), max(math.ceil(lx.max()), math.floor(lx.min()) + 1)
        y0, y1 = math.floor(ly.min()), max(math.ceil(ly.max()), math.floor(ly.min()) + 1)
        sx = lambda v: m + (v - x0) / (x1 - x0) * (width - 2 * m)  # noqa: E731
        sy = lambda v: height - m - (v - y0) / (y1 - y0) * (height - 2 * m)  # noqa: E731
        for d in range(x0, x1 + 1):
            lines.append(f'<line x1="{sx(d):.1f}" y1="{m}" x2="{sx(d):.1f}" y2="{height - m}" stroke="#ddd"/>')
            lines.append(f'<text x="{sx(d):.1f}" y="{height - m + 16}" text-anchor="middle">1e{d}</text>')
        for d in range(y0, y1 + 1):
            lines.append(f'<line x1="{m}" y1="{sy(d):.1f}" x2="{width - m}" y2="{sy(d):.1f}" stroke="#ddd"/>')
            lines.append(f'<text x="{m - 6}" y="{sy(d) + 4:.1f}" text-anchor="end">1e{d}</text>')
        path = " ".join(f"{sx(a):.2f},{sy(b):.2f}" for a, b in zip(lx, ly))
        lines.append(f'<polyline points="{path}" fill="none" stroke="#1f77b4" stroke-width="2"/>')
        for a, b in zip(lx, ly):
            lines.append(f'<circle cx="{sx(a):.2f}" cy="{sy(b):.2f}" r="2.5" fill="#1f77b4"/>')
    lines.append(f'<rect x="{m}" y="{m}" width="{width - 2 * m}" height="{height - 2 * m}" '
                 f'fill="none" stroke="black"/>')
    lines.append(f'<text x="{width / 2}" y="{height - 15}" text-anchor="middle">episodes</text>')
    lines.append(f'<text x="15" y="{height / 2}" text-anchor="middle" '
                 f'transform="rotate(-90 15 {height / 2})">exploitability</text>')
    lines.append("</svg>")
    return "\n".join(lines) + "\n"


def emit_outputs(log: RunLog, out_dir) -> dict[str, Path]:
    """Write ``curve.csv``, ``config.echo``, ``curve.svg`` and both average policies."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        paths = {
            "curve": out / "curve.csv",
            "config": out / "config.echo",
            "svg": out / "curve.svg",
            "min_policy": out / "average_min.policy",
            "max_policy": out / "average_max.policy",
        }
        write_curve(log.rows, paths["curve"])
        echo = [f"# {log.version}"] + log.config.to_lines(resolved_eta=log.etas)
        echo.append(f"# kappa={log.kappa_totals[MIN]!r},{log.kappa_totals[MAX]!r}")
        paths["config"].write_text("\n".join(echo) + "\n")
        paths["svg"].write_text(curve_svg(log.rows))
        if log.game is not None:
            pmin, pmax = log.average_policies()
            save_policy(log.game, pmin, paths["min_policy"])
            save_policy(log.game, pmax, paths["max_policy"])
    except OSError as e:
        raise OSError(f"cannot write outputs to {out}: {e}") from e
    return paths


def write_grid(result: GridResult, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(("eta", "exploitability"))
        for e, v in result.table:
            w.writerow((repr(e), repr(v)))
