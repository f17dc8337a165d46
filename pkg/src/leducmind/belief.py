"""Exact card beliefs, outcome-rate trees and expected-gain planning.

Everything here is brute-force enumeration over the six-card deck, the
opponent's modelled responses and a fixed continuation for our own later
moves (check if possible, otherwise call). The same functions back the
oracle agent and serve as the checker for numbers a language model states.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Mapping, Optional, Sequence

from .game import (
    ACTIONS,
    DRAW,
    Action,
    GameState,
    LeducConfig,
    Observation,
    Rank,
    apply_action,
    hypothetical_state,
    legal_actions,
    new_game,
)
from .opponents import HandStrength, hand_strength

log = logging.getLogger(__name__)

TOL = 1e-9


@dataclass(frozen=True)
class BeliefDistribution:
    """Probability of each opponent hole rank, indexed by ``Rank``."""

    probs: tuple[float, float, float]

    def __post_init__(self):
        total = sum(self.probs)
        if any(p < -TOL for p in self.probs) or abs(total - 1.0) > TOL:
            raise ValueError(f"not a distribution: {self.probs}")

    def __getitem__(self, rank: Rank) -> float:
        return self.probs[rank]

    @classmethod
    def from_weights(cls, weights: Mapping[Rank, float]) -> "BeliefDistribution":
        total = sum(weights.values())
        if total <= 0:
            raise ValueError("weights sum to zero")
        return cls(tuple(weights.get(r, 0.0) / total for r in Rank))

    def as_dict(self) -> dict[str, float]:
        return {r.word: self.probs[r] for r in Rank}

    def describe(self) -> str:
        return ", ".join(f"{r.word} {self.probs[r]:.1%}" for r in Rank)


def remaining_counts(*seen: Optional[Rank]) -> dict[Rank, int]:
    counts = {r: 2 for r in Rank}
    for rank in seen:
        if rank is not None:
            counts[rank] -= 1
            if counts[rank] < 0:
                raise ValueError(f"more than two {rank.word}s accounted for")
    return counts


def card_prior(own: Rank, public: Optional[Rank] = None) -> BeliefDistribution:
    return BeliefDistribution.from_weights(remaining_counts(own, public))


# --- opponent models -------------------------------------------------------

class ModelMode(Enum):
    UNIFORM = "uniform"
    STATIC = "static"
    REACTIVE = "reactive"


ANY = "*"  # wildcard for the my-last-action slot of a key


@dataclass(frozen=True)
class Context:
    """Situation in which the opponent acts."""

    round: int
    facing: bool
    my_last: Optional[Action] = None


def row_actions(facing: bool) -> tuple[Action, ...]:
    """Action cells of a table row for a facing context."""
    if facing:
        return (Action.CALL, Action.RAISE, Action.FOLD)
    return (Action.RAISE, Action.CHECK)


@dataclass
class OpponentModel:
    """Conditional action tables for the opponent.

    Keys are ``(tier, round, facing, my_last)`` where ``my_last`` is ``ANY``
    for static rows. Reactive lookups fall back to the static row, and a
    missing row means uniform over the legal actions.
    """

    mode: ModelMode
    tables: dict = field(default_factory=dict)

    def __post_init__(self):
        for key, row in self.tables.items():
            if abs(sum(row.values()) - 1.0) > TOL:
                raise ValueError(f"row {key} does not sum to 1")

    @classmethod
    def uniform(cls) -> "OpponentModel":
        return cls(ModelMode.UNIFORM)

    def row(self, tier: HandStrength, ctx: Context) -> Optional[Mapping[Action, float]]:
        if self.mode is ModelMode.UNIFORM:
            return None
        if self.mode is ModelMode.REACTIVE:
            key = (tier, ctx.round, ctx.facing, ctx.my_last)
            if key in self.tables:
                return self.tables[key]
        return self.tables.get((tier, ctx.round, ctx.facing, ANY))

    def distribution(self, tier: HandStrength, ctx: Context, legal) -> dict[Action, float]:
        row = self.row(tier, ctx)
        if row is not None:
            out = {a: row.get(a, 0.0) for a in ACTIONS if a in legal}
            total = sum(out.values())
            if total > 0:
                return {a: p / total for a, p in out.items()}
        return {a: 1.0 / len(legal) for a in legal}

    def prob(self, action: Action, tier: HandStrength, ctx: Context, legal) -> float:
        return self.distribution(tier, ctx, legal).get(action, 0.0)


@dataclass(frozen=True)
class ObservedAction:
    """An opponent action together with the context it was taken in."""

    action: Action
    context: Context
    legal: tuple[Action, ...]


def opponent_actions(obs: Observation) -> list[ObservedAction]:
    """Replay the public betting line and collect the opponent's decisions."""
    me = obs.player
    # Hole and board cards do not influence betting; any deal works.
    state = new_game(0)
    out = []
    my_last = None
    for step in obs.betting_sequence_public:
        legal = legal_actions(state)
        if step.player == me:
            my_last = step.action
        else:
            ctx = Context(state.round, state.facing_bet, my_last)
            out.append(ObservedAction(step.action, ctx, legal))
        state = apply_action(state, step.action)
    return out


@dataclass
class PosteriorResult:
    belief: BeliefDistribution
    degenerate: bool = False


def posterior(prior: BeliefDistribution, model: OpponentModel,
              observed: Sequence[ObservedAction], public: Optional[Rank] = None) -> PosteriorResult:
    """Bayes update of ``prior`` on the opponent's observed actions.

    Round-2 actions are scored with the opponent's round-2 hand strength,
    which depends on ``public``. All-zero likelihoods fall back to the prior.
    """
    weights = {}
    for card in Rank:
        w = prior[card]
        for seen in observed:
            if w == 0.0:
                break
            pub = public if seen.context.round == 2 else None
            w *= model.prob(seen.action, hand_strength(card, pub), seen.context, seen.legal)
        weights[card] = w
    if sum(weights.values()) <= 0.0:
        log.warning("all card likelihoods are zero; keeping the prior")
        return PosteriorResult(prior, degenerate=True)
    return PosteriorResult(BeliefDistribution.from_weights(weights))


# --- outcome rates -----------------------------------------------------------

@dataclass(frozen=True)
class OutcomeRates:
    win: float
    lose: float
    draw: float

    def __post_init__(self):
        for v in (self.win, self.lose, self.draw):
            if not -TOL <= v <= 1 + TOL:
                raise ValueError(f"rate out of range: {self}")
        if abs(self.win + self.lose + self.draw - 1.0) > TOL:
            raise ValueError(f"rates do not sum to 1: {self}")


def continuation(legal) -> Action:
    return Action.CHECK if Action.CHECK in legal else Action.CALL


def _last_action_of(state: GameState, player: int) -> Optional[Action]:
    for step in reversed(state.betting_sequence):
        if step.player == player:
            return step.action
    return None


def _walk(state: GameState, me: int, model: OpponentModel, mass: float, acc: list) -> None:
    if state.terminal:
        if state.winner == DRAW:
            acc[2] += mass
        elif state.winner == me:
            acc[0] += mass
        else:
            acc[1] += mass
        return
    legal = legal_actions(state)
    if state.to_act == me:
        _walk(apply_action(state, continuation(legal)), me, model, mass, acc)
        return
    opp = 1 - me
    public = state.board.rank if state.round == 2 else None
    tier = hand_strength(state.hole_cards[opp].rank, public)
    ctx = Context(state.round, state.facing_bet, _last_action_of(state, me))
    for action, p in model.distribution(tier, ctx, legal).items():
        if p > 0.0:
            _walk(apply_action(state, action), me, model, mass * p, acc)


def outcome_rates(obs: Observation, belief: BeliefDistribution, model: OpponentModel,
                  my_action: Action, config: LeducConfig = LeducConfig()) -> OutcomeRates:
    """Win/lose/draw probabilities of playing ``my_action`` now.

    Enumerates the opponent's card (weighted by ``belief``), the unseen
    public card (by remaining copies) and every modelled opponent response.
    """
    if my_action not in obs.legal_actions:
        raise ValueError(f"{my_action.value} is not legal here")
    if my_action is Action.FOLD:
        return OutcomeRates(0.0, 1.0, 0.0)
    own = obs.private_card
    acc = [0.0, 0.0, 0.0]
    for opp in Rank:
        w = belief[opp]
        if w == 0.0:
            continue
        if obs.public_card is not None:
            publics = {obs.public_card: 1.0}
        else:
            counts = remaining_counts(own, opp)
            n = sum(counts.values())
            publics = {r: c / n for r, c in counts.items() if c > 0}
        for pub, pw in publics.items():
            state = hypothetical_state(obs, opp, pub, config)
            _walk(apply_action(state, my_action), obs.player, model, w * pw, acc)
    total = sum(acc)
    return OutcomeRates(acc[0] / total, acc[1] / total, acc[2] / total)


# --- plans -------------------------------------------------------------------

def expected_gain(win, lose, win_payoff, lose_payoff):
    """Win rate times winning payoff minus lose rate times lose payoff."""
    return win * win_payoff - lose * lose_payoff


def plan_payoffs(obs: Observation, my_action: Action,
                 config: LeducConfig = LeducConfig()) -> tuple[float, float]:
    """Half-pot win and lose payoffs after ``my_action``; Fold risks our stake."""
    me = obs.player
    mine, theirs = obs.pot_contribution[me], obs.pot_contribution[1 - me]
    if my_action is Action.FOLD:
        return (0, mine)
    if my_action is Action.CALL:
        mine = theirs
    elif my_action is Action.RAISE:
        mine = theirs + config.raise_sizes[obs.round - 1]
    half = (mine + theirs) / 2
    return (half, half)


@dataclass(frozen=True)
class PlanCandidate:
    action: Action
    rates: OutcomeRates
    win_payoff: float
    lose_payoff: float
    expected_gain: float
    rationale: str = ""

    @classmethod
    def build(cls, action: Action, rates: OutcomeRates, win_payoff, lose_payoff,
              rationale: str = "") -> "PlanCandidate":
        gain = expected_gain(rates.win, rates.lose, win_payoff, lose_payoff)
        return cls(action, rates, win_payoff, lose_payoff, gain, rationale)


# Higher value wins ties.
TIE_PRIORITY = {Action.CHECK: 3, Action.CALL: 2, Action.RAISE: 1, Action.FOLD: 0}


def best_action(gains: Mapping[Action, float]) -> Action:
    if not gains:
        raise ValueError("no candidate plans")
    return max(gains, key=lambda a: (gains[a], TIE_PRIORITY[a]))


def best_plan(candidates: Iterable[PlanCandidate]) -> Action:
    return best_action({c.action: c.expected_gain for c in candidates})


def evaluate_plans(obs: Observation, belief: BeliefDistribution, model: OpponentModel,
                   config: LeducConfig = LeducConfig()) -> list[PlanCandidate]:
    plans = []
    for action in obs.legal_actions:
        rates = outcome_rates(obs, belief, model, action, config)
        win_payoff, lose_payoff = plan_payoffs(obs, action, config)
        plans.append(PlanCandidate.build(action, rates, win_payoff, lose_payoff))
    return plans
