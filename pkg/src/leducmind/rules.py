"""Game-rule text and observation-to-text conversion.

The rule and conversion descriptions are plain data so that prompts can
embed them and tests can check that every observation field is covered.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Mapping, Optional

from .game import Observation
from .llm import load_template, render_text


@dataclass(frozen=True)
class RuleDescription:
    general_rules: str
    action_descriptions: Mapping[str, str]
    single_win_loss_rule: str
    win_loss_payoff_rule: str
    whole_win_loss_rule: str

    def __post_init__(self):
        for f in dataclasses.fields(self):
            if not getattr(self, f.name):
                raise ValueError(f"rule field {f.name} is empty")

    def text(self) -> str:
        actions = "\n".join(f"- {name}: {desc}" for name, desc in self.action_descriptions.items())
        return (
            f"General Rules: {self.general_rules}\n"
            f"Actions:\n{actions}\n"
            f"Single Win/Loss Rule: {self.single_win_loss_rule}\n"
            f"Win/Loss Payoff Rule: {self.win_loss_payoff_rule}\n"
            f"Whole Win/Loss Rule: {self.whole_win_loss_rule}"
        )


@dataclass(frozen=True)
class ObsConversionRule:
    input_explanation: str
    element_descriptions: Mapping[str, str]
    conversion_tips: str

    def uncovered(self, cls=Observation) -> list[str]:
        """Observation fields with no element description."""
        return [f.name for f in dataclasses.fields(cls) if f.name not in self.element_descriptions]

    def text(self) -> str:
        elements = "\n".join(f"- {name}: {desc}" for name, desc in self.element_descriptions.items())
        return (f"Input Explanation: {self.input_explanation}\nElement Descriptions:\n{elements}\n"
                f"Conversion Tips: {self.conversion_tips}")


LEDUC_RULE = RuleDescription(
    general_rules=(
        "Leduc Hold'em is a two-player poker game with a six-card deck: two Jacks, two Queens and two "
        "Kings. Each player is dealt one private card. Seat 0 posts a small blind of 1 chip and seat 1 a "
        "big blind of 2 chips. There are two betting rounds; after the first, one public card is revealed. "
        "Raises are 2 chips in the first round and 4 chips in the second, with at most two raises per round."
    ),
    action_descriptions={
        "call": "match the opponent's larger pot contribution.",
        "raise": "put in enough chips to match the opponent and then add the round's raise amount.",
        "fold": "give up the hand and lose the chips already in the pot.",
        "check": "pass without adding chips; only possible when both contributions are equal.",
    },
    single_win_loss_rule=(
        "If a player folds, the other wins. Otherwise, at showdown a player whose private card matches the "
        "public card wins; if neither pairs, the higher rank wins (King > Queen > Jack); equal ranks draw."
    ),
    win_loss_payoff_rule=(
        "The winner gains the chips the loser put into the pot; a draw returns all chips. A single game's "
        "payoff ranges from 1 to 14 chips."
    ),
    whole_win_loss_rule=(
        "A match is many games; the player with the larger total chip gain over all games wins the match."
    ),
)

LEDUC_OBS_RULE = ObsConversionRule(
    input_explanation="The observation is a structured record of what one player can see at a decision point.",
    element_descriptions={
        "player": "your seat index, 0 or 1.",
        "private_card": "your private card.",
        "public_card": "the public card, or nothing if it is not revealed yet.",
        "pot_contribution": "chips each seat has put into the pot, indexed by seat.",
        "legal_actions": "the actions you may take now.",
        "round": "the betting round, 1 or 2.",
        "betting_sequence_public": "every action taken so far, with the acting seat and round.",
        "raises_this_round": "how many raises have been made in the current round.",
    },
    conversion_tips=(
        "Name your card and the public card by rank, state both players' chips in the pot, the round and "
        "the legal actions. Never guess the opponent's card."
    ),
)


def _describe_betting(obs: Observation) -> str:
    if not obs.betting_sequence_public:
        return "No actions have been taken yet."
    parts = []
    for step in obs.betting_sequence_public:
        who = "you" if step.player == obs.player else "the opponent"
        parts.append(f"round {step.round}: {who} chose {step.action.value}")
    return "; ".join(parts) + "."


def observation_bindings(obs: Observation, rule: RuleDescription = LEDUC_RULE,
                         conv: ObsConversionRule = LEDUC_OBS_RULE) -> dict[str, str]:
    me = obs.player
    public = obs.public_card.word if obs.public_card is not None else "not revealed"
    return {
        "rule": rule.text(),
        "obs_rule": conv.text(),
        "raw_observation": repr(obs),
        "seat": str(me),
        "own_card": obs.private_card.word,
        "public_card": public,
        "my_chips": str(obs.pot_contribution[me]),
        "opponent_chips": str(obs.pot_contribution[1 - me]),
        "round": str(obs.round),
        "raises": str(obs.raises_this_round),
        "betting": _describe_betting(obs),
        "valid_actions": ", ".join(a.value for a in obs.legal_actions) or "none",
    }


def interpret_observation(rule: RuleDescription, conv: ObsConversionRule, obs: Observation,
                          template: Optional[str] = None) -> str:
    """Deterministic readable text for ``obs`` (the oracle-mode conversion)."""
    if template is None:
        template = load_template("observation")
    return render_text(template, observation_bindings(obs, rule, conv), "observation")


def action_tokens(legal) -> str:
    return ", ".join(a.value for a in legal)

