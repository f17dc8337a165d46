import random
from pathlib import Path

import pytest

from support import record_of, view

from leducmind.agent import (
    AnalysisBundle,
    PatternCounts,
    TomAgent,
    analyze_game,
    end_game_update,
    fallback_action,
    opponent_card_weights,
    plan_and_evaluate,
    predict_cards,
    run_turn,
)
from leducmind.belief import ANY, BeliefDistribution, ModelMode, card_prior
from leducmind.game import Action, Observation, Rank, apply_action, legal_actions, new_game, observe
from leducmind.harness import PolicyAgent, play_game
from leducmind.llm import CompletionResponse, ScriptedBackend, parse_pattern, split_sections
from leducmind.opponents import HandStrength, archetype
from leducmind.records import MatchDataset, ToMOrder
from leducmind.rules import LEDUC_OBS_RULE, LEDUC_RULE, ObsConversionRule, interpret_observation

FIXTURES = Path(__file__).parent / "fixtures"
J, Q, K = Rank.JACK, Rank.QUEEN, Rank.KING
C, R, F, CK = Action.CALL, Action.RAISE, Action.FOLD, Action.CHECK
ZERO, FIRST, SECOND = ToMOrder.ZERO, ToMOrder.FIRST, ToMOrder.SECOND


# --- interpret ------------------------------------------------------------------

def test_interpret_names_own_card_only():
    obs = view(K, J, Q)
    text = interpret_observation(LEDUC_RULE, LEDUC_OBS_RULE, obs)
    assert "King" in text and "Jack" not in text
    assert "not revealed" in text and "call, raise, fold" in text
    assert text == interpret_observation(LEDUC_RULE, LEDUC_OBS_RULE, obs)


def test_conversion_rule_covers_observation():
    assert LEDUC_OBS_RULE.uncovered() == []
    partial = ObsConversionRule("x", {"player": "seat"}, "tips")
    assert "private_card" in partial.uncovered()


# --- analysis -------------------------------------------------------------------

def seven_of_ten_dataset(seat: int):
    """The opponent holds a King and raises in 7 of 10 games at its first decision."""
    ds = MatchDataset()
    for i in range(10):
        opp_raises = i < 7
        if seat == 1:  # opponent is seat 0, first to act and facing the blind
            line = [R, F] if opp_raises else [C, CK, CK, CK]
            rec = record_of(K, J, Q, line, f"g{i}")
        else:  # opponent is the big blind, unfaced after my limp
            line = [C, R, F] if opp_raises else [C, CK, CK, CK]
            rec = record_of(J, K, Q, line, f"g{i}")
        end_game_update(ds, rec.view_for(seat, True), True)
    return ds


def test_laplace_smoothing_facing_row():
    bundle = analyze_game(LEDUC_RULE, seven_of_ten_dataset(1), FIRST)
    row = bundle.model.tables[(HandStrength.STRONG, 1, True, ANY)]
    assert row[R] == pytest.approx(8 / 13)
    assert row[C] == pytest.approx(4 / 13) and row[F] == pytest.approx(1 / 13)


def test_laplace_smoothing_unfaced_row():
    bundle = analyze_game(LEDUC_RULE, seven_of_ten_dataset(0), FIRST)
    row = bundle.model.tables[(HandStrength.STRONG, 1, False, ANY)]
    assert row[R] == pytest.approx(8 / 12) and row[CK] == pytest.approx(4 / 12)


def test_reactive_rows_keyed_by_my_last_action():
    bundle = analyze_game(LEDUC_RULE, seven_of_ten_dataset(0), SECOND)
    assert bundle.model.mode is ModelMode.REACTIVE
    assert (HandStrength.STRONG, 1, False, C) in bundle.model.tables
    assert bundle.opponent_belief_text


def test_empty_dataset_bundle_is_uniform():
    for order in (FIRST, SECOND):
        bundle = analyze_game(LEDUC_RULE, MatchDataset(), order)
        for (tier, rnd, facing, _), row in bundle.model.tables.items():
            assert len(set(round(p, 12) for p in row.values())) == 1


def test_empty_dataset_orders_reduce_to_zero():
    obs = view(Q, K, J, R, C, R)
    zero = AnalysisBundle(order=ZERO)
    plans0, pick0 = plan_and_evaluate(zero, predict_cards(zero, obs, ZERO)[0], obs, ZERO)
    for order in (FIRST, SECOND):
        bundle = analyze_game(LEDUC_RULE, MatchDataset(), order)
        belief, _, _ = predict_cards(bundle, obs, order)
        assert belief.probs == pytest.approx(card_prior(obs.private_card, obs.public_card).probs, abs=1e-12)
        plans, pick = plan_and_evaluate(bundle, belief, obs, order)
        assert pick is pick0
        for a, b in zip(plans, plans0):
            assert a.expected_gain == pytest.approx(b.expected_gain, abs=1e-12)


def test_uniform_bundle_degrades_to_zero():
    assert AnalysisBundle(order=SECOND).effective_order is ZERO


def test_opponent_card_weights_without_hindsight():
    # I (seat 1, Queen) lost a showdown on a Jack board: the opponent held the King or a Jack.
    rec = record_of(K, Q, J, [C, CK, CK, CK]).view_for(1, False)
    assert rec.deal.hole(0) is None
    w = opponent_card_weights(rec)
    assert set(w) == {J, K}
    # A fold reveals nothing beyond the prior.
    folded = record_of(K, Q, J, [R, F]).view_for(1, False)
    assert set(opponent_card_weights(folded)) == {J, Q, K}


def test_pattern_counts_need_observer():
    with pytest.raises(ValueError):
        PatternCounts().add(record_of(K, Q, J, [R, F]))


# --- predict -----------------------------------------------------------------

def test_zero_order_prior():
    belief, text, degenerate = predict_cards(AnalysisBundle(), view(J, K, Q), ZERO)
    assert belief.probs == pytest.approx((0.2, 0.4, 0.4))
    assert not degenerate and "Prior" in text


def test_first_order_sample_tables_after_two_raises():
    model = parse_pattern(split_sections((FIXTURES / "sample_first_order.txt").read_text())["Pattern"])
    bundle = AnalysisBundle(model=model, order=FIRST)
    # Opponent (seat 0) raises, I call with a Jack; public Queen; opponent raises again.
    obs = view(K, J, Q, R, C, R)
    belief, _, _ = predict_cards(bundle, obs, FIRST)
    # Prior (J 1/4, Q 1/4, K 1/2). Round-1 raise: Jack 0, Queen 0.4, King 0.7.
    # Round-2 raise: King 0.8; a paired Queen has no stated row, so uniform 0.5.
    q, k = 0.25 * 0.4 * 0.5, 0.5 * 0.7 * 0.8
    assert belief.probs == pytest.approx((0.0, q / (q + k), k / (q + k)), abs=1e-12)
    assert belief[K] > 0.8


# --- plan and evaluate --------------------------------------------------------

def test_paired_king_never_folds():
    rng = random.Random(3)
    bundle = AnalysisBundle()
    checked = 0
    for seed in range(3000):
        s = new_game(seed)
        while not s.terminal:
            obs = observe(s, s.to_act)
            if obs.public_card is K and obs.private_card is K:
                _, pick = plan_and_evaluate(bundle, card_prior(K, K), obs, ZERO)
                assert pick is not F
                checked += 1
            s = apply_action(s, rng.choice(legal_actions(s)))
    assert checked > 20


def test_single_legal_action():
    obs = view(K, J, Q, R)
    only_call = Observation(obs.player, obs.private_card, obs.public_card, obs.pot_contribution, (C,),
                            obs.round, obs.betting_sequence_public, obs.raises_this_round)
    plans, pick = plan_and_evaluate(AnalysisBundle(), card_prior(J), only_call, ZERO)
    assert pick is C and len(plans) == 1


def test_second_order_sample_bluffs():
    model = parse_pattern(split_sections((FIXTURES / "sample_second_order.txt").read_text())["Pattern"])
    bundle = AnalysisBundle(model=model, order=SECOND)
    obs = view(Q, J, K, C)  # big blind with a Jack after the small blind limps
    assert obs.legal_actions == (R, CK)
    plans, pick = plan_and_evaluate(bundle, BeliefDistribution((0.7, 0.2, 0.1)), obs, SECOND)
    assert pick is R
    raise_plan = next(p for p in plans if p.action is R)
    # Most of the win mass comes from the Jack folding to the raise.
    assert raise_plan.rates.win > 0.56
    assert raise_plan.expected_gain > 0.36


def test_fallback_priority():
    assert fallback_action((R, CK)) is CK
    assert fallback_action((C, R, F)) is C
    assert fallback_action((F,)) is F


# --- the agent ------------------------------------------------------------------

def test_oracle_turn_is_deterministic():
    a1, a2 = TomAgent(SECOND), TomAgent(SECOND)
    opp = PolicyAgent(archetype("conservative_folder"))
    for i in range(20):
        r1 = play_game([a1, opp], 100 + i, f"g{i}")
        r2 = play_game([a2, opp], 100 + i, f"g{i}")
        assert r1.to_dict() == r2.to_dict()


def test_fuzzed_states_stay_legal():
    """10^5 random decision points across orders and histories."""
    agents = []
    for order in (ZERO, FIRST, SECOND):
        agent = TomAgent(order)
        opp = PolicyAgent(archetype("polar_bluffer"))
        for i in range(15):
            play_game([agent, opp] if i % 2 else [opp, agent], i, f"w{i}")
        agent.begin_game(0)
        agents.append(agent)
    rng = random.Random(99)
    n = 0
    while n < 100_000:
        s = new_game(rng.randrange(10**9))
        while not s.terminal:
            obs = observe(s, s.to_act)
            agent = agents[n % 3]
            agent.seat = s.to_act
            action, record = run_turn(agent, obs)
            assert action in obs.legal_actions and record.chosen is action
            assert not record.fallback_used
            n += 1
            s = apply_action(s, rng.choice(obs.legal_actions))


def test_chosen_equals_best_plan_in_oracle_mode():
    agent = TomAgent(FIRST)
    opp = PolicyAgent(archetype("aggressive_raiser"))
    for i in range(30):
        rec = play_game([agent, opp], i, f"g{i}")
        for step in rec.steps:
            d = step.deliberation
            if d is not None:
                best = max(d.plans, key=lambda p: p.expected_gain).expected_gain
                chosen = next(p for p in d.plans if p.action is d.chosen)
                assert chosen.expected_gain == pytest.approx(best)


def test_game_one_plays_zero_order():
    agent = TomAgent(SECOND)
    rec = play_game([agent, PolicyAgent(archetype("always_caller"))], 0, "g0")
    assert all(s.deliberation.tom_order is ZERO for s in rec.steps if s.seat == 0)
    rec = play_game([agent, PolicyAgent(archetype("always_caller"))], 1, "g1")
    assert any(s.deliberation.tom_order is SECOND for s in rec.steps if s.seat == 0)


@pytest.mark.parametrize("hindsight", [True, False])
def test_hindsight_controls_stored_card(hindsight):
    agent = TomAgent(FIRST, hindsight=hindsight)
    opp = PolicyAgent(archetype("always_caller"))
    for i in range(5):
        play_game([agent, opp], i, f"g{i}")
    assert len(agent.dataset) == 5
    for rec in agent.dataset:
        assert (rec.deal.hole(1) is not None) is hindsight
        assert (rec.hindsight_opponent_card is not None) is hindsight


def test_end_game_update_grows_by_one():
    ds = MatchDataset()
    end_game_update(ds, record_of(K, Q, J, [R, F]).view_for(0, True), True)
    assert len(ds) == 1


def test_end_game_update_rejects_unfinished():
    rec = record_of(K, Q, J, [R, F])
    rec.steps = rec.steps[:1]
    with pytest.raises(ValueError, match="not finished"):
        end_game_update(MatchDataset(), rec, True)


# --- language-model mode ----------------------------------------------------------

class Malformed:
    model = "broken"

    def __init__(self):
        self.calls = []

    def complete(self, request):
        self.calls.append(request.template_id)
        return CompletionResponse("I would rather not say.")


def test_malformed_backend_falls_back():
    backend = Malformed()
    agent = TomAgent(SECOND, backend)
    agent.begin_game(1)
    obs = view(Q, J, K, C)
    action, record = agent.act(obs)
    assert action is CK and record.fallback_used
    plan_calls = [t for t in backend.calls if t.startswith("plan")]
    assert plan_calls == ["plan_zero", "plan_zero+reminder1", "plan_zero+reminder2"]
    assert any("fallback" in d for d in record.diagnostics)


def test_malformed_analysis_degrades_to_zero():
    backend = Malformed()
    agent = TomAgent(FIRST, backend)
    agent.dataset.append(record_of(K, Q, J, [R, F]).view_for(0, True))
    agent.counts.add(agent.dataset.games[-1])
    agent.begin_game(0)
    assert agent.bundle.effective_order is ZERO
    assert any("zero order" in d for d in agent.bundle.diagnostics)


def test_scripted_llm_match_records_traces():
    agent = TomAgent(SECOND, ScriptedBackend())
    opp = PolicyAgent(archetype("conservative_folder"))
    for i in range(4):
        rec = play_game([agent, opp], i, f"g{i}")
        mine = [s.deliberation for s in rec.steps if s.seat == 0]
        for j, d in enumerate(mine):
            assert not d.fallback_used
            assert d.oracle_choice is not None and d.stated_gains
            assert d.chosen in {p.action for p in d.plans}
            if j > 0:
                # Later decisions carry only the observation and plan prompts.
                assert len(d.raw_prompts) == 2
        if i > 0 and mine:
            # The game's first decision also carries the analysis prompt.
            assert len(mine[0].raw_prompts) == 3
    assert len(agent.dataset) == 4
