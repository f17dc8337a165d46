"""Independent reference implementations used as test oracles.

These deliberately avoid the package's fast paths: the outcome enumerator
has its own tiny betting engine, and the best-response oracle recurses over
concrete card deals instead of the flattened CFR tree.
"""

from __future__ import annotations

import itertools
from collections import defaultdict

from leducmind.cfr import average_strategy, state_key
from leducmind.game import DECK, Action, GameState, LeducConfig, apply_action, legal_actions, payoff

J, Q, K = 0, 1, 2
RAISE_SIZE = {1: 2, 2: 4}


# --- outcome enumerator ------------------------------------------------------------

def mini_legal(contrib, raises, me):
    facing = contrib[me] < contrib[1 - me]
    acts = []
    if facing:
        acts.append("call")
    if raises < 2:
        acts.append("raise")
    if facing:
        acts.append("fold")
    else:
        acts.append("check")
    return acts


def mini_step(node, action):
    """node = (round, contrib, raises, to_act, acted, result); result None while live."""
    rnd, contrib, raises, p, acted, _ = node
    contrib = list(contrib)
    if action == "fold":
        return (rnd, tuple(contrib), raises, p, acted, ("fold", 1 - p))
    if action == "call":
        contrib[p] = contrib[1 - p]
    elif action == "raise":
        contrib[p] = contrib[1 - p] + RAISE_SIZE[rnd]
        raises += 1
    acted = acted | {p}
    if contrib[0] == contrib[1] and acted == {0, 1}:
        if rnd == 1:
            return (2, tuple(contrib), 0, 0, frozenset(), None)
        return (rnd, tuple(contrib), raises, p, acted, ("showdown", None))
    return (rnd, tuple(contrib), raises, 1 - p, acted, None)


def mini_start(history):
    """Replay (seat, action-name) pairs; returns the node and each seat's last action."""
    node = (1, (1, 2), 0, 0, frozenset(), None)
    last = {0: None, 1: None}
    for seat, action in history:
        assert seat == node[3]
        node = mini_step(node, action)
        last[seat] = action
    return node, last


def tier_of(card, public):
    if public is not None and card == public:
        return "pair"
    return ("weak", "mid", "strong")[card]


def lookup(model, tier, rnd, facing, my_last, legal):
    """model = (mode, tables) with tables keyed by (tier, round, facing, my_last or '*')."""
    mode, tables = model
    row = None
    if mode == "reactive":
        row = tables.get((tier, rnd, facing, my_last))
    if row is None and mode != "uniform":
        row = tables.get((tier, rnd, facing, "*"))
    if row is not None:
        sub = {a: row.get(a, 0.0) for a in legal}
        total = sum(sub.values())
        if total > 0:
            return {a: p / total for a, p in sub.items()}
    return {a: 1.0 / len(legal) for a in legal}


def showdown(me_card, opp_card, public):
    if me_card == public and opp_card != public:
        return 1
    if opp_card == public and me_card != public:
        return -1
    if me_card == opp_card:
        return 0
    return 1 if me_card > opp_card else -1


def naive_outcome_rates(me, own, public, history, belief, model, my_action):
    """Win/lose/draw probabilities by brute force; ``model`` as in ``lookup``."""
    if my_action == "fold":
        return (0.0, 1.0, 0.0)
    node, last = mini_start(history)
    totals = [0.0, 0.0, 0.0]

    def walk(node, opp_card, pub, my_last, mass):
        rnd, contrib, raises, p, acted, result = node
        if result is not None:
            kind, winner = result
            if kind == "fold":
                totals[0 if winner == me else 1] += mass
            else:
                s = showdown(own, opp_card, pub)
                totals[{1: 0, -1: 1, 0: 2}[s]] += mass
            return
        legal = mini_legal(contrib, raises, p)
        if p == me:
            a = "check" if "check" in legal else "call"
            walk(mini_step(node, a), opp_card, pub, a, mass)
            return
        facing = contrib[p] < contrib[1 - p]
        tier = tier_of(opp_card, pub if rnd == 2 else None)
        for a, q in lookup(model, tier, rnd, facing, my_last, legal).items():
            if q > 0:
                walk(mini_step(node, a), opp_card, pub, my_last, mass * q)

    for opp_card in (J, Q, K):
        w = belief[opp_card]
        if w == 0:
            continue
        if public is not None:
            pubs = {public: 1.0}
        else:
            left = {r: 2 - (own == r) - (opp_card == r) for r in (J, Q, K)}
            n = sum(left.values())
            pubs = {r: c / n for r, c in left.items() if c}
        for pub, pw in pubs.items():
            walk(mini_step(node, my_action), opp_card, pub, my_action, w * pw)
    t = sum(totals)
    return tuple(x / t for x in totals)


# --- best-response oracle ----------------------------------------------------------

def _deals():
    for h0, h1, board in itertools.permutations(DECK, 3):
        yield h0, h1, board


def _root(h0, h1, board, config: LeducConfig) -> GameState:
    return GameState(round=1, hole_cards=(h0, h1), board=board,
                     pot_contribution=(config.small_blind, config.big_blind), raises_this_round=0, to_act=0,
                     config=config)


def best_response_value(profile, player: int, config: LeducConfig = LeducConfig()) -> float:
    """Value for ``player`` best-responding to ``profile``'s average strategy."""
    sigma = lambda s: average_strategy(profile, state_key(s), legal_actions(s))  # noqa: E731
    # Collect every state of the BR player with its chance x opponent reach weight.
    by_key = defaultdict(list)
    roots = []

    def collect(state, reach):
        if state.terminal:
            return
        if state.to_act == player:
            by_key[state_key(state)].append((state, reach))
            for a in legal_actions(state):
                collect(apply_action(state, a), reach)
        else:
            for a, q in sigma(state).items():
                if q > 0:
                    collect(apply_action(state, a), reach * q)

    n = 0
    for h0, h1, board in _deals():
        root = _root(h0, h1, board, config)
        roots.append(root)
        n += 1
        collect(root, 1.0)

    best = {}

    def value(state):
        if state.terminal:
            return payoff(state)[player]
        if state.to_act == player:
            return value(apply_action(state, best[state_key(state)]))
        return sum(q * value(apply_action(state, a)) for a, q in sigma(state).items() if q > 0)

    depth = lambda key: len(key.split("|")[3].replace("/", ""))  # noqa: E731
    for key in sorted(by_key, key=depth, reverse=True):
        states = by_key[key]
        acts = legal_actions(states[0][0])
        scores = {a: sum(w * value(apply_action(s, a)) for s, w in states) for a in acts}
        best[key] = max(acts, key=lambda a: scores[a])
    return sum(value(r) for r in roots) / n


def nash_conv_oracle(profile, config: LeducConfig = LeducConfig()) -> float:
    return best_response_value(profile, 0, config) + best_response_value(profile, 1, config)


ACTION_NAMES = {a.value: a for a in Action}
