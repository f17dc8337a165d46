"""Game records, match datasets and per-turn deliberation traces.

All types serialize to plain JSON-compatible dicts; ``from_dict`` inverts
``to_dict`` exactly so replay files round-trip.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import IntEnum
from typing import Any, Optional

from .belief import BeliefDistribution, OutcomeRates, PlanCandidate
from .game import Action, GameState, Rank


class ToMOrder(IntEnum):
    ZERO = 0
    FIRST = 1
    SECOND = 2

    @classmethod
    def parse(cls, value) -> "ToMOrder":
        if isinstance(value, str):
            names = {"zero": 0, "first": 1, "second": 2, "0": 0, "1": 1, "2": 2}
            if value.lower() not in names:
                raise ValueError(f"unknown ToM order {value!r}; expected zero, first or second")
            return cls(names[value.lower()])
        return cls(value)


def _rank(text: Optional[str]) -> Optional[Rank]:
    return None if text is None else Rank.from_letter(text)


def _letter(rank: Optional[Rank]) -> Optional[str]:
    return None if rank is None else rank.letter


def plan_to_dict(plan: PlanCandidate) -> dict:
    return {
        "action": plan.action.value,
        "rates": {"win": plan.rates.win, "lose": plan.rates.lose, "draw": plan.rates.draw},
        "win_payoff": plan.win_payoff,
        "lose_payoff": plan.lose_payoff,
        "expected_gain": plan.expected_gain,
        "rationale": plan.rationale,
    }


def plan_from_dict(d: dict) -> PlanCandidate:
    r = d["rates"]
    return PlanCandidate(Action(d["action"]), OutcomeRates(r["win"], r["lose"], r["draw"]),
                         d["win_payoff"], d["lose_payoff"], d["expected_gain"], d.get("rationale", ""))


@dataclass
class DeliberationRecord:
    """Full reasoning trace of one decision.

    In oracle mode ``chosen`` is ``best_plan(plans)`` unless a fallback fired.
    With a language-model backend ``chosen`` is the model's stated selection;
    ``plans`` then hold the oracle's candidates and ``oracle_choice`` /
    ``stated_gains`` record the comparison.
    """

    tom_order: ToMOrder
    obs_text: str
    belief: BeliefDistribution
    belief_text: str
    plans: list[PlanCandidate]
    chosen: Action
    raw_prompts: list[str] = field(default_factory=list)
    raw_completions: list[str] = field(default_factory=list)
    fallback_used: bool = False
    oracle_choice: Optional[Action] = None
    stated_gains: dict[Action, float] = field(default_factory=dict)
    opponent_belief_text: str = ""
    diagnostics: list[str] = field(default_factory=list)

    def to_dict(self, redact: bool = False) -> dict:
        return {
            "tom_order": int(self.tom_order),
            "obs_text": self.obs_text,
            "belief": list(self.belief.probs),
            "belief_text": self.belief_text,
            "plans": [plan_to_dict(p) for p in self.plans],
            "chosen": self.chosen.value,
            "raw_prompts": [] if redact else list(self.raw_prompts),
            "raw_completions": [] if redact else list(self.raw_completions),
            "fallback_used": self.fallback_used,
            "oracle_choice": self.oracle_choice.value if self.oracle_choice else None,
            "stated_gains": {a.value: g for a, g in self.stated_gains.items()},
            "opponent_belief_text": self.opponent_belief_text,
            "diagnostics": list(self.diagnostics),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DeliberationRecord":
        return cls(
            tom_order=ToMOrder(d["tom_order"]),
            obs_text=d["obs_text"],
            belief=BeliefDistribution(tuple(d["belief"])),
            belief_text=d["belief_text"],
            plans=[plan_from_dict(p) for p in d["plans"]],
            chosen=Action(d["chosen"]),
            raw_prompts=list(d.get("raw_prompts", [])),
            raw_completions=list(d.get("raw_completions", [])),
            fallback_used=d.get("fallback_used", False),
            oracle_choice=Action(d["oracle_choice"]) if d.get("oracle_choice") else None,
            stated_gains={Action(a): g for a, g in d.get("stated_gains", {}).items()},
            opponent_belief_text=d.get("opponent_belief_text", ""),
            diagnostics=list(d.get("diagnostics", [])),
        )


@dataclass(frozen=True)
class Deal:
    hole0: Optional[Rank]
    hole1: Optional[Rank]
    public: Optional[Rank]

    def hole(self, seat: int) -> Optional[Rank]:
        return self.hole0 if seat == 0 else self.hole1


@dataclass
class StepRecord:
    seat: int
    round: int
    legal: tuple[Action, ...]
    action: Action
    deliberation: Optional[DeliberationRecord] = None

    def to_dict(self, redact: bool = False) -> dict:
        d: dict[str, Any] = {
            "seat": self.seat,
            "round": self.round,
            "legal": [a.value for a in self.legal],
            "action": self.action.value,
        }
        if self.deliberation is not None:
            d["deliberation"] = self.deliberation.to_dict(redact)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "StepRecord":
        delib = d.get("deliberation")
        return cls(d["seat"], d["round"], tuple(Action(a) for a in d["legal"]), Action(d["action"]),
                   DeliberationRecord.from_dict(delib) if delib is not None else None)


@dataclass
class GameRecord:
    """One finished game: deal, public decisions and chip results.

    ``observer`` marks the seat whose view this is (``None`` for the
    harness's full record). Hidden cards are ``None`` in ``deal``.
    """

    game_id: str
    seed: int
    seats: tuple[str, str]
    deal: Deal
    steps: list[StepRecord]
    payoffs: tuple[int, int]
    hindsight: bool = True
    observer: Optional[int] = None

    def __post_init__(self):
        if sum(self.payoffs) != 0:
            raise ValueError(f"payoffs must sum to zero, got {self.payoffs}")
        for p in self.payoffs:
            if p != 0 and not 1 <= abs(p) <= 14:
                raise ValueError(f"payoff {p} outside [1, 14]")

    @property
    def hindsight_opponent_card(self) -> Optional[Rank]:
        if self.observer is None or not self.hindsight:
            return None
        return self.deal.hole(1 - self.observer)

    @property
    def showdown(self) -> bool:
        return bool(self.steps) and self.steps[-1].action is not Action.FOLD

    @property
    def reached_round_two(self) -> bool:
        return any(s.round == 2 for s in self.steps) or self.showdown

    def view_for(self, seat: int, hindsight: bool) -> "GameRecord":
        """The record as seen by ``seat``; the other hole stays hidden without hindsight."""
        deal = self.deal
        steps = self.steps
        if not hindsight:
            other = 1 - seat
            deal = Deal(deal.hole0 if other != 0 else None, deal.hole1 if other != 1 else None,
                        deal.public if self.reached_round_two else None)
            steps = [s if s.seat == seat else replace(s, deliberation=None) for s in steps]
        return replace(self, deal=deal, steps=list(steps), hindsight=hindsight, observer=seat)

    def redacted(self, hidden_seats) -> "GameRecord":
        """Drop the hole cards (and deliberations) of ``hidden_seats``."""
        hidden = set(hidden_seats)
        if not hidden:
            return self
        deal = Deal(None if 0 in hidden else self.deal.hole0,
                    None if 1 in hidden else self.deal.hole1, self.deal.public)
        steps = [replace(s, deliberation=None) if s.seat in hidden else s for s in self.steps]
        return replace(self, deal=deal, steps=steps, hindsight=False)

    def to_dict(self, redact: bool = False) -> dict:
        return {
            "schema_version": 1,
            "game_id": self.game_id,
            "seed": self.seed,
            "seats": {"0": self.seats[0], "1": self.seats[1]},
            "deal": {"hole0": _letter(self.deal.hole0), "hole1": _letter(self.deal.hole1),
                     "public": _letter(self.deal.public)},
            "steps": [s.to_dict(redact) for s in self.steps],
            "payoffs": list(self.payoffs),
            "hindsight": self.hindsight,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GameRecord":
        deal = d["deal"]
        return cls(
            game_id=d["game_id"],
            seed=d["seed"],
            seats=(d["seats"]["0"], d["seats"]["1"]),
            deal=Deal(_rank(deal["hole0"]), _rank(deal["hole1"]), _rank(deal["public"])),
            steps=[StepRecord.from_dict(s) for s in d["steps"]],
            payoffs=tuple(d["payoffs"]),
            hindsight=d["hindsight"],
        )

    @classmethod
    def from_state(cls, game_id: str, seed: int, seats, state: GameState,
                   steps: list[StepRecord], payoffs) -> "GameRecord":
        h0, h1 = state.hole_cards
        return cls(game_id, seed, tuple(seats), Deal(h0.rank, h1.rank, state.board.rank),
                   list(steps), tuple(payoffs))


@dataclass
class MatchDataset:
    """Ordered, append-only list of finished games."""

    games: list[GameRecord] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.games)

    def __iter__(self):
        return iter(self.games)

    def append(self, record: GameRecord) -> "MatchDataset":
        self.games.append(record)
        return self
