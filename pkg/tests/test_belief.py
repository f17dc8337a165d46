import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from support import compare_with_oracle, random_case, view

from leducmind.belief import (
    ANY,
    BeliefDistribution,
    Context,
    ModelMode,
    ObservedAction,
    OpponentModel,
    OutcomeRates,
    PlanCandidate,
    best_action,
    best_plan,
    card_prior,
    evaluate_plans,
    expected_gain,
    opponent_actions,
    outcome_rates,
    plan_payoffs,
    posterior,
    remaining_counts,
)
from leducmind.game import Action, GameError, Rank, hypothetical_state
from leducmind.opponents import HandStrength

J, Q, K = Rank.JACK, Rank.QUEEN, Rank.KING
C, R, F, CK = Action.CALL, Action.RAISE, Action.FOLD, Action.CHECK
W, M, S, P = HandStrength.WEAK, HandStrength.MID, HandStrength.STRONG, HandStrength.PAIR


# --- priors -------------------------------------------------------------------

def test_card_prior_round_one():
    assert card_prior(J).probs == pytest.approx((0.2, 0.4, 0.4))


def test_card_prior_with_public():
    assert card_prior(K, K).probs == pytest.approx((0.5, 0.5, 0.0))
    assert card_prior(J, Q).probs == pytest.approx((0.25, 0.25, 0.5))


def test_remaining_counts_rejects_three_copies():
    with pytest.raises(ValueError):
        remaining_counts(K, K, K)


def test_distribution_validation():
    with pytest.raises(ValueError):
        BeliefDistribution((0.5, 0.5, 0.5))
    with pytest.raises(ValueError):
        BeliefDistribution((1.2, -0.2, 0.0))


# --- posterior ----------------------------------------------------------------

def test_posterior_matches_hand_bayes():
    # A static model: Kings raise 70%, Queens 40%, Jacks never (round 1, unfaced);
    # in round 2 the Queen-paired hand raises 90%, the King 80%.
    model = OpponentModel(ModelMode.STATIC, {
        (S, 1, False, ANY): {R: 0.7, CK: 0.3},
        (M, 1, False, ANY): {R: 0.4, CK: 0.6},
        (W, 1, False, ANY): {R: 0.0, CK: 1.0},
        (S, 2, False, ANY): {R: 0.8, CK: 0.2},
        (P, 2, False, ANY): {R: 0.9, CK: 0.1},
        (W, 2, False, ANY): {R: 0.5, CK: 0.5},
    })
    # Seat 0 (opponent) limps, seat 1 (me, Jack) checks; round 2 public Queen,
    # opponent raises.
    obs = view(K, J, Q, C, CK, R)
    observed = opponent_actions(obs)
    assert [o.action for o in observed] == [C, R]
    # Round 1 limp is a facing decision with no row: uniform over (call, raise, fold).
    prior = card_prior(J, Q)
    w = {J: Fraction(1, 4) * Fraction(1, 3) * Fraction(5, 10),
         Q: Fraction(1, 4) * Fraction(1, 3) * Fraction(9, 10),
         K: Fraction(1, 2) * Fraction(1, 3) * Fraction(8, 10)}
    total = sum(w.values())
    got = posterior(prior, model, observed, public=Q).belief
    for r in Rank:
        assert got[r] == pytest.approx(float(w[r] / total), abs=1e-12)


def test_posterior_degenerate_keeps_prior(caplog):
    model = OpponentModel(ModelMode.STATIC, {(t, 1, True, ANY): {C: 1.0, R: 0.0, F: 0.0} for t in (W, M, S)})
    seen = [ObservedAction(F, Context(1, True, R), (C, R, F))]
    prior = card_prior(Q)
    res = posterior(prior, model, seen)
    assert res.degenerate and res.belief == prior
    assert "likelihoods are zero" in caplog.text


def test_uniform_model_posterior_is_prior():
    obs = view(Q, K, J, R, C, R)
    res = posterior(card_prior(K, J), OpponentModel.uniform(), opponent_actions(obs), public=J)
    assert res.belief.probs == pytest.approx(card_prior(K, J).probs)


def test_reactive_row_overrides_static():
    model = OpponentModel(ModelMode.REACTIVE, {
        (W, 1, True, ANY): {C: 0.5, R: 0.0, F: 0.5},
        (W, 1, True, R): {C: 0.1, R: 0.0, F: 0.9},
    })
    assert model.prob(F, W, Context(1, True, R), (C, R, F)) == pytest.approx(0.9)
    assert model.prob(F, W, Context(1, True, CK), (C, R, F)) == pytest.approx(0.5)
    static = OpponentModel(ModelMode.STATIC, model.tables)
    assert static.prob(F, W, Context(1, True, R), (C, R, F)) == pytest.approx(0.5)


def test_model_row_validation():
    with pytest.raises(ValueError):
        OpponentModel(ModelMode.STATIC, {(W, 1, True, ANY): {C: 0.5, F: 0.4}})


# --- payoffs and expected gain -----------------------------------------------

def test_expected_gain_fixture_values_exactly():
    f = Fraction
    assert expected_gain(f(0), f(94, 100), 10, 10) == f(-94, 10)
    assert expected_gain(f(0), f(1), 0, 8) == -8
    assert expected_gain(f(56, 100), f(44, 100), 3, 3) == f(36, 100)
    assert expected_gain(f(14, 100), f(86, 100), 2, 2) == f(-144, 100)


def test_plan_payoffs_unfaced_big_blind():
    # Seat 0 limps; the big blind (Jack) may raise, or check.
    obs = view(J, J, K, C)
    assert obs.legal_actions == (R, CK)
    assert plan_payoffs(obs, R) == (3, 3)
    assert plan_payoffs(obs, CK) == (2, 2)
    assert plan_payoffs(obs, F) == (0, 2)


def test_plan_payoffs_facing_round_two_raise():
    # Round 2 after a raise war: 6 in for me, 10 for the raiser.
    obs = view(J, K, Q, C, CK, R, R)
    me = obs.player
    mine, theirs = obs.pot_contribution[me], obs.pot_contribution[1 - me]
    assert (mine, theirs) == (6, 10)
    assert plan_payoffs(obs, C) == (10, 10)
    assert plan_payoffs(obs, R) == (12, 12)
    assert plan_payoffs(obs, F) == (0, 6)


def test_best_action_tie_priority():
    assert best_action({R: 1.0, CK: 1.0}) is CK
    assert best_action({C: 0.0, F: 0.0}) is C
    assert best_action({R: 0.0, F: 0.0}) is R
    with pytest.raises(ValueError):
        best_action({})


def test_best_plan_fixture_selections():
    e1 = {C: -9.4, R: -15.6, F: -8.0}
    e2 = {R: 0.36, F: 0.0, CK: -1.44}
    assert best_action(e1) is F and best_action(e2) is R


def test_plan_candidate_build():
    c = PlanCandidate.build(R, OutcomeRates(0.5, 0.25, 0.25), 4, 4)
    assert c.expected_gain == pytest.approx(1.0)
    assert best_plan([c, PlanCandidate.build(CK, OutcomeRates(0, 1, 0), 2, 2)]) is R


# --- outcome rates ------------------------------------------------------------

def test_fold_rates():
    obs = view(K, J, Q, R)
    assert outcome_rates(obs, card_prior(J), OpponentModel.uniform(), F) == OutcomeRates(0.0, 1.0, 0.0)


def test_illegal_plan_rejected():
    obs = view(K, J, Q, R)
    with pytest.raises(ValueError):
        outcome_rates(obs, card_prior(J), OpponentModel.uniform(), CK)


def test_always_calling_opponent_reduces_to_showdown_odds():
    caller = OpponentModel(ModelMode.STATIC, {
        (t, rnd, facing, ANY): ({C: 1.0, R: 0.0, F: 0.0} if facing else {R: 0.0, CK: 1.0})
        for t in HandStrength for rnd in (1, 2) for facing in (True, False)})
    # King with public King in hand: can only lose to nothing, draw never.
    obs = view(K, J, K, C, CK)
    rates = outcome_rates(obs, card_prior(K, K), caller, R)
    assert rates.win == pytest.approx(1.0)


def test_outcome_rates_match_naive_enumerator():
    rng = random.Random(1234)
    for _ in range(10_000):
        compare_with_oracle(*random_case(rng))


@settings(max_examples=200, deadline=None)
@given(seed=st.integers(0, 2**32))
def test_outcome_rates_property(seed):
    obs, belief, model, action = random_case(random.Random(seed))
    rates = outcome_rates(obs, belief, model, action)
    assert rates.win + rates.lose + rates.draw == pytest.approx(1.0)
    compare_with_oracle(obs, belief, model, action)


def test_evaluate_plans_covers_every_legal_action():
    obs = view(Q, K, J)
    plans = evaluate_plans(obs, card_prior(Q), OpponentModel.uniform())
    assert [p.action for p in plans] == list(obs.legal_actions)
    for p in plans:
        assert p.expected_gain == pytest.approx(p.rates.win * p.win_payoff - p.rates.lose * p.lose_payoff)


def test_hypothetical_conflict_is_skipped():
    # Belief mass is zero on impossible cards, so no impossible deal is built.
    obs = view(K, J, K, C, CK)
    assert card_prior(K, K)[K] == 0.0
    outcome_rates(obs, card_prior(K, K), OpponentModel.uniform(), R)
    with pytest.raises(GameError):
        hypothetical_state(obs, K, K)
