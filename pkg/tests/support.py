"""Small builders shared by the test modules."""

import random

from oracles import naive_outcome_rates

from leducmind.belief import (ANY, BeliefDistribution, ModelMode, OpponentModel, card_prior, outcome_rates,
                              row_actions)
from leducmind.game import (Action, Card, GameState, Rank, apply_action, legal_actions, new_game, observe,
                            payoff)
from leducmind.opponents import HandStrength
from leducmind.records import GameRecord, StepRecord


def dealt(h0: Rank, h1: Rank, board: Rank, *actions) -> GameState:
    """A state with the given ranks, after playing ``actions``."""
    used = {}

    def card(rank):
        used[rank] = used.get(rank, -1) + 1
        return Card(rank, used[rank])

    state = GameState(round=1, hole_cards=(card(h0), card(h1)), board=card(board),
                      pot_contribution=(1, 2), raises_this_round=0, to_act=0)
    for a in actions:
        state = apply_action(state, a)
    return state


def view(h0, h1, board, *actions):
    """Observation for the seat to act after ``actions``."""
    state = dealt(h0, h1, board, *actions)
    return observe(state, state.to_act)


def oracle_model(model: OpponentModel):
    """Convert a package model into the oracle's plain-string format."""
    tables = {}
    for (tier, rnd, facing, my_last), row in model.tables.items():
        last = my_last if isinstance(my_last, str) else my_last.value
        tables[(tier.value, rnd, facing, last)] = {a.value: p for a, p in row.items()}
    return (model.mode.value, tables)


def model_of(mode: ModelMode, tables) -> OpponentModel:
    return OpponentModel(mode, dict(tables))


def record_of(h0, h1, board, actions, game_id="g", seats=("a", "b")):
    """A finished ``GameRecord`` for the given ranks and betting line."""
    state = dealt(h0, h1, board)
    steps = []
    for a in actions:
        steps.append(StepRecord(state.to_act, state.round, legal_actions(state), a))
        state = apply_action(state, a)
    assert state.terminal, "betting line does not finish the game"
    return GameRecord.from_state(game_id, 0, seats, state, steps, payoff(state))


def random_model(rng: random.Random, mode: ModelMode) -> OpponentModel:
    tables = {}
    lasts = [ANY] + ([Action.RAISE, Action.CALL, Action.CHECK] if mode is ModelMode.REACTIVE else [])
    for tier in HandStrength:
        for rnd in (1, 2):
            for facing in (True, False):
                for last in lasts:
                    if rng.random() < 0.15:
                        continue  # missing row: uniform fallback
                    cells = row_actions(facing)
                    raw = [rng.choice([0.0, rng.random()]) for _ in cells]
                    if sum(raw) == 0:
                        raw[0] = 1.0
                    tables[(tier, rnd, facing, last)] = {a: x / sum(raw) for a, x in zip(cells, raw)}
    return OpponentModel(mode, tables)


def random_case(rng: random.Random):
    while True:
        state = new_game(rng.randrange(10**9))
        for _ in range(rng.randrange(8)):
            if state.terminal:
                break
            state = apply_action(state, rng.choice(legal_actions(state)))
        if not state.terminal:
            break
    obs = observe(state, state.to_act)
    prior = card_prior(obs.private_card, obs.public_card)
    weights = {r: prior[r] * rng.random() for r in Rank}
    if sum(weights.values()) == 0:
        weights = {r: prior[r] for r in Rank}
    belief = BeliefDistribution.from_weights(weights)
    mode = rng.choice(list(ModelMode))
    return obs, belief, random_model(rng, mode), rng.choice(obs.legal_actions)


def compare_with_oracle(obs, belief, model, action):
    got = outcome_rates(obs, belief, model, action)
    history = [(s.player, s.action.value) for s in obs.betting_sequence_public]
    want = naive_outcome_rates(obs.player, int(obs.private_card),
                               None if obs.public_card is None else int(obs.public_card),
                               history, belief.probs, oracle_model(model), action.value)
    for g, w in zip((got.win, got.lose, got.draw), want):
        assert abs(g - w) <= 1e-12


def all_lines(state):
    """Every terminal state reachable from ``state``."""
    if state.terminal:
        yield state
        return
    for a in legal_actions(state):
        yield from all_lines(apply_action(state, a))
