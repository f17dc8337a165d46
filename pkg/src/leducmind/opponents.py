"""Scripted opponent archetypes and the common policy interface.

Each archetype is a fixed table over three abstract moves (raise, a passive
call-or-check, fold) keyed by hand strength and betting context. Tables are
resolved against the legal actions of the observation; any mass that lands
on an illegal action moves to Call when legal, otherwise to Check.
"""

from __future__ import annotations

import logging
import random
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Mapping, Optional, Protocol

from .game import ACTIONS, Action, Observation, Rank

log = logging.getLogger(__name__)


class HandStrength(Enum):
    WEAK = "weak"
    MID = "mid"
    STRONG = "strong"
    PAIR = "pair"


_RANK_TIERS = {Rank.JACK: HandStrength.WEAK, Rank.QUEEN: HandStrength.MID, Rank.KING: HandStrength.STRONG}


def hand_strength(card: Rank, public: Optional[Rank] = None) -> HandStrength:
    if public is not None and card == public:
        return HandStrength.PAIR
    return _RANK_TIERS[card]


def resolve_row(row: Mapping[Action, float], legal) -> dict[Action, float]:
    """Project a table row onto ``legal``, reassigning illegal mass."""
    out = {a: 0.0 for a in ACTIONS if a in legal}
    fallback = Action.CALL if Action.CALL in legal else Action.CHECK
    for action, p in row.items():
        if p == 0.0:
            continue
        out[action if action in legal else fallback] += p
    return out


class Policy(Protocol):
    name: str

    def distribution(self, obs: Observation) -> dict[Action, float]: ...

    def act(self, obs: Observation, rng: random.Random) -> Action: ...


def sample_action(dist: Mapping[Action, float], rng: random.Random) -> Action:
    """Inverse-CDF draw over canonical action order; one ``rng.random()`` call."""
    u = rng.random()
    acc = 0.0
    last = None
    for action in ACTIONS:
        p = dist.get(action, 0.0)
        if p <= 0.0:
            continue
        acc += p
        last = action
        if u < acc:
            return action
    return last


def _my_raised_this_round(obs: Observation) -> bool:
    return any(s.player == obs.player and s.round == obs.round and s.action is Action.RAISE
               for s in obs.betting_sequence_public)


def _last_opponent_action(obs: Observation) -> Optional[Action]:
    for s in reversed(obs.betting_sequence_public):
        if s.player != obs.player:
            return s.action
    return None


# Abstract moves used by the tables; PASSIVE resolves to Call or Check.
RAISE, PASSIVE, FOLD = "raise", "passive", "fold"
Table = Callable[[HandStrength, Observation], Mapping[str, float]]


def _always_caller(tier, obs):
    return {PASSIVE: 1.0}


def _aggressive_raiser(tier, obs):
    if tier is HandStrength.WEAK:
        return {PASSIVE: 1.0}
    return {RAISE: 1.0}


def _polar_bluffer(tier, obs):
    if tier is HandStrength.WEAK:
        if obs.facing_bet and obs.raises_this_round >= 2:
            return {FOLD: 0.5, PASSIVE: 0.5}
        return {RAISE: 0.8, PASSIVE: 0.2}
    if tier is HandStrength.MID:
        return {PASSIVE: 0.8, RAISE: 0.2}
    return {RAISE: 1.0}


def _conservative_folder(tier, obs):
    if tier is HandStrength.WEAK:
        return {FOLD: 0.7, PASSIVE: 0.3} if obs.facing_bet else {PASSIVE: 1.0}
    if tier is HandStrength.MID:
        return {PASSIVE: 0.8, RAISE: 0.2}
    return {RAISE: 0.7, PASSIVE: 0.3}


def _reactive_conservative_folder(tier, obs):
    # Weak hands fold to a raise and bet whenever the other player has shown
    # no strength; mid hands give up only after a re-raise.
    raised = [s for s in obs.betting_sequence_public if s.player != obs.player and s.action is Action.RAISE]
    pressured = obs.facing_bet and _last_opponent_action(obs) is Action.RAISE
    if tier is HandStrength.WEAK:
        if pressured:
            return {FOLD: 0.9, PASSIVE: 0.1}
        if not raised:
            return {RAISE: 0.6, PASSIVE: 0.4}
        return {PASSIVE: 1.0}
    if tier is HandStrength.MID:
        if pressured and len(raised) >= 2:
            return {FOLD: 0.6, PASSIVE: 0.4}
        if raised:
            return {PASSIVE: 1.0}
        return {PASSIVE: 0.5, RAISE: 0.5}
    return {RAISE: 0.7, PASSIVE: 0.3}


ARCHETYPES: dict[str, Table] = {
    "always_caller": _always_caller,
    "aggressive_raiser": _aggressive_raiser,
    "polar_bluffer": _polar_bluffer,
    "conservative_folder": _conservative_folder,
    "reactive_conservative_folder": _reactive_conservative_folder,
}


@dataclass(frozen=True)
class TablePolicy:
    """A policy defined by an archetype table."""

    name: str
    table: Table

    def distribution(self, obs: Observation) -> dict[Action, float]:
        legal = obs.legal_actions
        tier = hand_strength(obs.private_card, obs.public_card)
        passive = Action.CALL if obs.facing_bet else Action.CHECK
        moves = {RAISE: Action.RAISE, PASSIVE: passive, FOLD: Action.FOLD}
        row: dict[Action, float] = {}
        for move, p in self.table(tier, obs).items():
            row[moves[move]] = row.get(moves[move], 0.0) + p
        return resolve_row(row, legal)

    def act(self, obs: Observation, rng: random.Random) -> Action:
        return sample_action(self.distribution(obs), rng)


def archetype(name: str) -> TablePolicy:
    try:
        return TablePolicy(name, ARCHETYPES[name])
    except KeyError:
        valid = ", ".join(sorted(ARCHETYPES))
        raise ValueError(f"unknown archetype {name!r}; valid options: {valid}") from None


def policy_act(policy: Policy, obs: Observation, rng: random.Random) -> Action:
    if obs.terminal:
        raise ValueError("cannot act on a terminal observation")
    return policy.act(obs, rng)


@dataclass(frozen=True)
class UniformPolicy:
    name: str = "uniform"

    def distribution(self, obs: Observation) -> dict[Action, float]:
        n = len(obs.legal_actions)
        return {a: 1.0 / n for a in obs.legal_actions}

    def act(self, obs: Observation, rng: random.Random) -> Action:
        return sample_action(self.distribution(obs), rng)
