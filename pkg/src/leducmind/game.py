"""Leduc Hold'em engine.

Six cards (two Jacks, two Queens, two Kings), one hole card per player,
one public card revealed for the second betting round. Seat 0 posts the
small blind and acts first in both rounds; seat 1 posts the big blind.
Limit betting with two raises per round.

States are immutable: every operation returns a new ``GameState``.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field, replace
from enum import Enum, IntEnum
from typing import Optional

DRAW = -1


class GameError(Exception):
    """Raised for operations that are invalid in the current state."""


class Rank(IntEnum):
    JACK = 0
    QUEEN = 1
    KING = 2

    @property
    def word(self) -> str:
        return self.name.capitalize()

    @property
    def letter(self) -> str:
        return self.name[0]

    @classmethod
    def from_letter(cls, text: str) -> "Rank":
        for rank in cls:
            if text.upper() in (rank.letter, rank.name):
                return rank
        raise ValueError(f"unknown rank {text!r}")


class Action(Enum):
    CALL = "call"
    RAISE = "raise"
    FOLD = "fold"
    CHECK = "check"

    @property
    def code(self) -> str:
        return _ACTION_CODES[self]

    @classmethod
    def from_code(cls, code: str) -> "Action":
        return _CODE_ACTIONS[code]


# Canonical order used by policy files and tables.
ACTIONS = (Action.CALL, Action.RAISE, Action.FOLD, Action.CHECK)
_ACTION_CODES = {Action.CALL: "c", Action.RAISE: "r", Action.FOLD: "f", Action.CHECK: "k"}
_CODE_ACTIONS = {v: k for k, v in _ACTION_CODES.items()}


@dataclass(frozen=True, order=True)
class Card:
    rank: Rank
    copy_index: int

    def __str__(self) -> str:
        return f"{self.rank.letter}{self.copy_index}"


DECK = tuple(Card(rank, i) for rank in Rank for i in (0, 1))


@dataclass(frozen=True)
class LeducConfig:
    small_blind: int = 1
    big_blind: int = 2
    raise_sizes: tuple[int, int] = (2, 4)
    max_raises: int = 2


@dataclass(frozen=True)
class Step:
    """One action in the public betting sequence."""

    player: int
    action: Action
    round: int


@dataclass(frozen=True)
class GameState:
    round: int
    hole_cards: tuple[Card, Card]
    board: Card  # pre-drawn; only visible through ``public_card``
    pot_contribution: tuple[int, int]
    raises_this_round: int
    to_act: int
    betting_sequence: tuple[Step, ...] = ()
    terminal: bool = False
    winner: Optional[int] = None
    folded: bool = False
    config: LeducConfig = field(default=LeducConfig(), repr=False, compare=False)

    @property
    def public_card(self) -> Optional[Card]:
        if self.round == 2:
            return self.board
        return None

    @property
    def facing_bet(self) -> bool:
        p = self.to_act
        return self.pot_contribution[p] < self.pot_contribution[1 - p]

    def round_steps(self, rnd: Optional[int] = None) -> tuple[Step, ...]:
        rnd = self.round if rnd is None else rnd
        return tuple(s for s in self.betting_sequence if s.round == rnd)


def new_game(seed: int, config: LeducConfig = LeducConfig()) -> GameState:
    """Deal a fresh hand from a seeded shuffle of the deck."""
    deck = list(DECK)
    random.Random(seed).shuffle(deck)
    return GameState(
        round=1,
        hole_cards=(deck[0], deck[1]),
        board=deck[2],
        pot_contribution=(config.small_blind, config.big_blind),
        raises_this_round=0,
        to_act=0,
        config=config,
    )


def legal_actions(state: GameState) -> tuple[Action, ...]:
    """Legal actions in canonical order."""
    if state.terminal:
        raise GameError("game over")
    out = []
    if state.facing_bet:
        out.append(Action.CALL)
    if state.raises_this_round < state.config.max_raises:
        out.append(Action.RAISE)
    if state.facing_bet:
        out.append(Action.FOLD)
    else:
        out.append(Action.CHECK)
    return tuple(out)


def showdown_winner(hole0: Rank, hole1: Rank, public: Rank) -> int:
    """Seat index of the winner, or ``DRAW``."""
    pair0, pair1 = hole0 == public, hole1 == public
    if pair0 != pair1:
        return 0 if pair0 else 1
    if hole0 == hole1:
        return DRAW
    return 0 if hole0 > hole1 else 1


def apply_action(state: GameState, action: Action) -> GameState:
    legal = legal_actions(state)
    if action not in legal:
        names = ", ".join(a.value for a in legal)
        raise GameError(f"illegal action {action.value!r}; legal actions are: {names}")
    p = state.to_act
    contrib = list(state.pot_contribution)
    raises = state.raises_this_round
    seq = state.betting_sequence + (Step(p, action, state.round),)

    if action is Action.FOLD:
        return replace(state, betting_sequence=seq, terminal=True, winner=1 - p, folded=True)
    if action is Action.CALL:
        contrib[p] = contrib[1 - p]
    elif action is Action.RAISE:
        contrib[p] = contrib[1 - p] + state.config.raise_sizes[state.round - 1]
        raises += 1

    acted = {s.player for s in seq if s.round == state.round}
    if contrib[0] != contrib[1] or acted != {0, 1}:
        return replace(
            state,
            pot_contribution=tuple(contrib),
            raises_this_round=raises,
            to_act=1 - p,
            betting_sequence=seq,
        )
    if state.round == 1:
        return replace(
            state,
            round=2,
            pot_contribution=tuple(contrib),
            raises_this_round=0,
            to_act=0,
            betting_sequence=seq,
        )
    h0, h1 = state.hole_cards
    return replace(
        state,
        pot_contribution=tuple(contrib),
        raises_this_round=raises,
        betting_sequence=seq,
        terminal=True,
        winner=showdown_winner(h0.rank, h1.rank, state.board.rank),
    )


def payoff(state: GameState) -> tuple[int, int]:
    """Chip result per seat; the winner takes the loser's contribution."""
    if not state.terminal:
        raise GameError("payoff requested for a non-terminal state")
    if state.winner == DRAW:
        return (0, 0)
    loser = 1 - state.winner
    amount = state.pot_contribution[loser]
    out = [0, 0]
    out[state.winner] = amount
    out[loser] = -amount
    return tuple(out)


@dataclass(frozen=True)
class Observation:
    """What one seat can see. Carries no field for the opponent's hole card."""

    player: int
    private_card: Rank
    public_card: Optional[Rank]
    pot_contribution: tuple[int, int]
    legal_actions: tuple[Action, ...]
    round: int
    betting_sequence_public: tuple[Step, ...]
    raises_this_round: int = 0

    @property
    def facing_bet(self) -> bool:
        p = self.player
        return self.pot_contribution[p] < self.pot_contribution[1 - p]

    @property
    def terminal(self) -> bool:
        return not self.legal_actions


def observe(state: GameState, player: int) -> Observation:
    if player not in (0, 1):
        raise GameError(f"invalid player index {player}")
    public = state.public_card
    legal = legal_actions(state) if not state.terminal and state.to_act == player else ()
    return Observation(
        player=player,
        private_card=state.hole_cards[player].rank,
        public_card=public.rank if public is not None else None,
        pot_contribution=state.pot_contribution,
        legal_actions=legal,
        round=state.round,
        betting_sequence_public=state.betting_sequence,
        raises_this_round=state.raises_this_round,
    )


def sequence_code(steps) -> str:
    """Compact betting history such as ``"rc/kr"``; ``/`` separates rounds."""
    r1 = "".join(s.action.code for s in steps if s.round == 1)
    r2 = "".join(s.action.code for s in steps if s.round == 2)
    if any(s.round == 2 for s in steps):
        return f"{r1}/{r2}"
    return r1


def hypothetical_state(obs: Observation, opp_rank: Rank, public_rank: Rank,
                       config: LeducConfig = LeducConfig()) -> GameState:
    """Rebuild a full engine state from a view plus guessed hidden cards.

    Copies are assigned so all three cards are distinct deck members; raises
    ``GameError`` when the ranks need more than two copies.
    """
    me = obs.player
    ranks = {me: obs.private_card, 1 - me: opp_rank}
    used: dict[Rank, int] = {}

    def take(rank: Rank) -> Card:
        n = used.get(rank, 0)
        if n >= 2:
            raise GameError(f"no copy of {rank.word} left")
        used[rank] = n + 1
        return Card(rank, n)

    holes = (take(ranks[0]), take(ranks[1]))
    board = take(public_rank)
    to_act = obs.player if obs.legal_actions else 1 - obs.player
    return GameState(
        round=obs.round,
        hole_cards=holes,
        board=board,
        pot_contribution=obs.pot_contribution,
        raises_this_round=obs.raises_this_round,
        to_act=to_act,
        betting_sequence=obs.betting_sequence_public,
        config=config,
    )
