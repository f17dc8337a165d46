"""Evaluation protocols, action statistics, reports and replay files."""

from __future__ import annotations

import csv
import json
import logging
import random
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Optional, Protocol, Sequence

from .game import ACTIONS, Action, LeducConfig, Observation, apply_action, new_game, observe, payoff
from .opponents import Policy
from .records import DeliberationRecord, GameRecord, StepRecord

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1


class ReplayError(Exception):
    pass


class Agent(Protocol):
    name: str

    def begin_game(self, seat: int) -> None: ...

    def act(self, obs: Observation, rng: random.Random) -> tuple[Action, Optional[DeliberationRecord]]: ...

    def end_game(self, record: GameRecord) -> None: ...


class PolicyAgent:
    """Adapter for stateless policies (archetypes, CFR, uniform)."""

    def __init__(self, policy: Policy, name: Optional[str] = None):
        self.policy = policy
        self.name = name or policy.name

    def begin_game(self, seat: int) -> None:
        pass

    def act(self, obs: Observation, rng: random.Random) -> tuple[Action, None]:
        return self.policy.act(obs, rng), None

    def end_game(self, record: GameRecord) -> None:
        pass


def seat_rng(seed: int, seat: int) -> random.Random:
    # Keyed by seat rather than by agent so a swapped leg replays the same
    # random stream at each seat.
    return random.Random(f"{seed}:{seat}")


def play_game(seat_agents: Sequence[Agent], seed: int, game_id: str,
              config: LeducConfig = LeducConfig()) -> GameRecord:
    """Play one game; the full record goes to both agents afterwards."""
    state = new_game(seed, config)
    rngs = [seat_rng(seed, 0), seat_rng(seed, 1)]
    for seat, agent in enumerate(seat_agents):
        agent.begin_game(seat)
    steps = []
    while not state.terminal:
        seat = state.to_act
        obs = observe(state, seat)
        action, delib = seat_agents[seat].act(obs, rngs[seat])
        if action not in obs.legal_actions:
            raise RuntimeError(f"{seat_agents[seat].name} chose illegal action {action.value}")
        steps.append(StepRecord(seat, obs.round, obs.legal_actions, action, delib))
        state = apply_action(state, action)
    record = GameRecord.from_state(game_id, seed, [a.name for a in seat_agents], state, steps, payoff(state))
    for agent in seat_agents:
        agent.end_game(record)
    return record


class MatchProtocol(Enum):
    VARIABLE_SEEDS = "seeds"
    POSITION_SWAP = "swap"


@dataclass(frozen=True)
class GameResult:
    game_id: str
    seed: int
    leg: int
    seat_a: int
    payoff_a: int
    payoff_b: int


@dataclass
class MatchReport:
    agent_a: str
    agent_b: str
    protocol: MatchProtocol
    games: list[GameResult]
    records: list[GameRecord] = field(repr=False)
    histograms: dict[str, dict[str, float]]
    config: dict = field(default_factory=dict)

    def __post_init__(self):
        for g in self.games:
            if g.payoff_a + g.payoff_b != 0:
                raise ValueError(f"game {g.game_id} is not zero-sum")

    @property
    def totals(self) -> dict[str, int]:
        a = sum(g.payoff_a for g in self.games)
        b = sum(g.payoff_b for g in self.games)
        if self.agent_a == self.agent_b:
            return {self.agent_a: a + b}
        return {self.agent_a: a, self.agent_b: b}

    @property
    def total_a(self) -> int:
        return sum(g.payoff_a for g in self.games)

    @property
    def total_b(self) -> int:
        return sum(g.payoff_b for g in self.games)

    @property
    def winner(self) -> Optional[str]:
        """Positive-total convention; ``None`` for an exact tie."""
        if self.total_a > 0:
            return self.agent_a
        if self.total_b > 0:
            return self.agent_b
        return None

    def summary(self) -> dict:
        return {
            "agents": [self.agent_a, self.agent_b],
            "protocol": self.protocol.value,
            "n_games": len(self.games),
            "totals": {"a": self.total_a, "b": self.total_b},
            "winner": self.winner,
            "action_percentages": self.histograms,
            "config": self.config,
        }


def action_percentages(records: Iterable[GameRecord]) -> dict[str, dict[str, float]]:
    """Share of each action kind among every decision, per agent name."""
    counts: dict[str, dict[Action, int]] = {}
    n = 0
    for record in records:
        n += 1
        for step in record.steps:
            cell = counts.setdefault(record.seats[step.seat], {a: 0 for a in ACTIONS})
            cell[step.action] += 1
    if n == 0:
        raise ValueError("no records to summarise")
    out = {}
    for name, cell in counts.items():
        total = sum(cell.values())
        out[name] = {a.value: c / total for a, c in cell.items()}
    return out


def _persisted(record: GameRecord, hindsight: bool, subject_seat: int) -> GameRecord:
    # Without hindsight the subject's opponent card never reaches disk.
    return record if hindsight else record.redacted({1 - subject_seat})


def _run_leg(agent_a: Agent, agent_b: Agent, n_games: int, seed: int, leg: int, swap: bool,
             hindsight: bool, config: LeducConfig, prefix: str) -> tuple[list[GameResult], list[GameRecord]]:
    seats = (agent_b, agent_a) if swap else (agent_a, agent_b)
    seat_a = 1 if swap else 0
    results, records = [], []
    for i in range(n_games):
        game_seed = seed + i
        record = play_game(seats, game_seed, f"{prefix}{i:04d}", config)
        results.append(GameResult(record.game_id, game_seed, leg, seat_a,
                                  record.payoffs[seat_a], record.payoffs[1 - seat_a]))
        records.append(_persisted(record, hindsight, seat_a))
    return results, records


def _snapshot(agent_a: Agent, agent_b: Agent, hindsight: bool, extra: Optional[dict]) -> dict:
    snap = {"hindsight": hindsight}
    for key, agent in (("agent_a", agent_a), ("agent_b", agent_b)):
        order = getattr(agent, "order", None)
        snap[key] = {"name": agent.name, "tom_order": int(order) if order is not None else None,
                     "backend": type(getattr(agent, "backend", None)).__name__
                     if getattr(agent, "backend", None) is not None else "oracle" if order is not None else "policy"}
    snap.update(extra or {})
    return snap


def run_variable_seeds(agent_a: Agent, agent_b: Agent, n_games: int, base_seed: int = 0, *,
                       hindsight: bool = True, config: LeducConfig = LeducConfig(),
                       extra_config: Optional[dict] = None) -> MatchReport:
    """Game i uses seed ``base_seed + i`` with A fixed at seat 0."""
    if n_games < 1:
        raise ValueError("n_games must be >= 1")
    results, records = _run_leg(agent_a, agent_b, n_games, base_seed, 1, False, hindsight, config, "g")
    return MatchReport(agent_a.name, agent_b.name, MatchProtocol.VARIABLE_SEEDS, results, records,
                       action_percentages(records), _snapshot(agent_a, agent_b, hindsight, extra_config))


def run_position_swap(agent_a: Agent, agent_b: Agent, n_games: int, seed: int = 0, *,
                      hindsight: bool = True, config: LeducConfig = LeducConfig(),
                      extra_config: Optional[dict] = None) -> MatchReport:
    """Two legs over the same seeds; leg 2 swaps the seats."""
    if n_games < 1:
        raise ValueError("n_games must be >= 1 per leg")
    r1, rec1 = _run_leg(agent_a, agent_b, n_games, seed, 1, False, hindsight, config, "L1-g")
    r2, rec2 = _run_leg(agent_a, agent_b, n_games, seed, 2, True, hindsight, config, "L2-g")
    records = rec1 + rec2
    return MatchReport(agent_a.name, agent_b.name, MatchProtocol.POSITION_SWAP, r1 + r2, records,
                       action_percentages(records), _snapshot(agent_a, agent_b, hindsight, extra_config))


# --- persistence ------------------------------------------------------------

def write_replays(records: Iterable[GameRecord], path, redact: bool = False) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(record.to_dict(redact), ensure_ascii=False, sort_keys=True) + "\n")


def read_replays(path) -> list[GameRecord]:
    out = []
    with Path(path).open(encoding="utf-8") as fh:
        for n, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                data = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ReplayError(f"{path}:{n}: malformed line ({exc.msg})") from None
            version = data.get("schema_version") if isinstance(data, dict) else None
            if version != SCHEMA_VERSION:
                raise ReplayError(f"{path}:{n}: unsupported schema_version {version!r}")
            try:
                out.append(GameRecord.from_dict(data))
            except (KeyError, TypeError, ValueError) as exc:
                raise ReplayError(f"{path}:{n}: malformed record ({exc})") from None
    return out


def _bar_chart(histograms: dict[str, dict[str, float]], path: Path) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    import numpy as np

    names = list(histograms)
    actions = [a.value for a in ACTIONS]
    x = np.arange(len(actions))
    width = 0.8 / max(len(names), 1)
    # A fixed hash salt keeps SVG element ids, and so the file bytes, stable.
    with plt.rc_context({"svg.hashsalt": "leducmind"}):
        fig, ax = plt.subplots(figsize=(6, 3.5))
        for i, name in enumerate(names):
            ax.bar(x + i * width, [histograms[name][a] for a in actions], width, label=name)
        ax.set_xticks(x + width * (len(names) - 1) / 2, actions)
        ax.set_ylabel("share of decisions")
        ax.set_ylim(0, 1)
        ax.legend()
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)


def emit_report(report: MatchReport, out_dir) -> dict[str, Path]:
    """summary.json, payoffs.csv and action_percentages.svg in ``out_dir``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {"summary": out / "summary.json", "payoffs": out / "payoffs.csv",
             "chart": out / "action_percentages.svg"}
    paths["summary"].write_text(json.dumps(report.summary(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    with paths["payoffs"].open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["game_id", "seed", "leg", "seat_a", report.agent_a + " (a)", report.agent_b + " (b)"])
        for g in report.games:
            writer.writerow([g.game_id, g.seed, g.leg, g.seat_a, g.payoff_a, g.payoff_b])
    _bar_chart(report.histograms, paths["chart"])
    return paths
