"""Leduc Hold'em engine, CFR baseline and theory-of-mind planning agents."""

from .game import Action, GameState, LeducConfig, Observation, Rank, apply_action, legal_actions, new_game, observe, payoff

__version__ = "0.1.0"

__all__ = [
    "Action",
    "GameState",
    "LeducConfig",
    "Observation",
    "Rank",
    "apply_action",
    "legal_actions",
    "new_game",
    "observe",
    "payoff",
]
