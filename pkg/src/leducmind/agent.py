"""The planning agent: per-game analysis and per-turn deliberation.

A turn runs interpret -> predict -> plan/evaluate. With no backend the agent
is the exact oracle: pattern tables come from counted history, beliefs from
Bayes' rule and plan values from full enumeration. With a completion backend
each stage is a prompt whose answer is parsed, and the oracle runs alongside
as instrumentation.
"""

from __future__ import annotations

import logging
import random
from dataclasses import dataclass, field
from typing import Optional

from .belief import (
    ANY,
    BeliefDistribution,
    ModelMode,
    OpponentModel,
    PlanCandidate,
    best_plan,
    card_prior,
    evaluate_plans,
    opponent_actions,
    posterior,
    remaining_counts,
    row_actions,
)
from .cfr import observation_key
from .game import Action, GameState, LeducConfig, Observation, Rank, apply_action, new_game, showdown_winner
from .llm import (
    Backend,
    CompletionRequest,
    LLMError,
    ParseError,
    bindings_digest,
    load_template,
    parse_analysis,
    parse_deliberation,
    parse_pattern,
    render_text,
)
from .opponents import HandStrength, hand_strength
from .records import DeliberationRecord, GameRecord, MatchDataset, StepRecord, ToMOrder
from .rules import (
    LEDUC_OBS_RULE,
    LEDUC_RULE,
    ObsConversionRule,
    RuleDescription,
    interpret_observation,
    observation_bindings,
)

log = logging.getLogger(__name__)

HISTORY_WINDOW = 30
TEMPLATE_SUFFIX = {ToMOrder.ZERO: "zero", ToMOrder.FIRST: "first", ToMOrder.SECOND: "second"}
ROUND_TIERS = {
    1: (HandStrength.WEAK, HandStrength.MID, HandStrength.STRONG),
    2: (HandStrength.WEAK, HandStrength.MID, HandStrength.STRONG, HandStrength.PAIR),
}


def replay_steps(steps, config: LeducConfig = LeducConfig()) -> GameState:
    """Re-run a public betting line (cards do not affect betting)."""
    state = new_game(0, config)
    for step in steps:
        state = apply_action(state, step.action)
    return state


# --- history analysis --------------------------------------------------------

def opponent_card_weights(record: GameRecord) -> dict[Rank, float]:
    """Weights over the opponent's hole rank in one game seen by ``record.observer``.

    With hindsight the card is known. Otherwise the remaining-copy prior is
    restricted to ranks consistent with the showdown result.
    """
    me = record.observer
    known = record.deal.hole(1 - me)
    if known is not None:
        return {known: 1.0}
    own, public = record.deal.hole(me), record.deal.public
    prior = {r: float(c) for r, c in remaining_counts(own, public).items() if c > 0}
    if not record.showdown or public is None:
        return prior
    mine = record.payoffs[me]
    outcome = 1 if mine > 0 else (-1 if mine < 0 else 0)
    consistent = {}
    for rank, w in prior.items():
        holes = (own, rank) if me == 0 else (rank, own)
        winner = showdown_winner(holes[0], holes[1], public)
        got = 0 if winner < 0 else (1 if winner == me else -1)
        if got == outcome:
            consistent[rank] = w
    return consistent or prior


@dataclass
class PatternCounts:
    """Soft action counts of the opponent (and of me) keyed by context."""

    opponent: dict = field(default_factory=dict)  # (tier, round, facing, my_last) -> {Action: weight}
    mine: dict = field(default_factory=dict)      # (tier, round) -> {Action: count}
    results: list = field(default_factory=list)   # (game_id, own rank, opponent rank or None, chips)
    seen: int = 0

    def add(self, record: GameRecord) -> None:
        me = record.observer
        if me is None:
            raise ValueError("pattern counts need a seat-specific view of the record")
        weights = opponent_card_weights(record)
        total = sum(weights.values())
        own = record.deal.hole(me)
        public = record.deal.public
        state = new_game(0)
        my_last = None
        for step in record.steps:
            if step.seat == me:
                tier = hand_strength(own, public if step.round == 2 else None)
                cell = self.mine.setdefault((tier, step.round), {})
                cell[step.action] = cell.get(step.action, 0.0) + 1.0
                my_last = step.action
            else:
                facing = state.facing_bet
                for rank, w in weights.items():
                    tier = hand_strength(rank, public if step.round == 2 else None)
                    cell = self.opponent.setdefault((tier, step.round, facing, my_last), {})
                    cell[step.action] = cell.get(step.action, 0.0) + w / total
            state = apply_action(state, step.action)
        self.results.append((record.game_id, own, record.deal.hole(1 - me), record.payoffs[me]))
        self.seen += 1

    @classmethod
    def from_dataset(cls, dataset: MatchDataset) -> "PatternCounts":
        counts = cls()
        for record in dataset:
            counts.add(record)
        return counts

    def _smoothed(self, cells: dict[Action, float], facing: bool) -> dict[Action, float]:
        actions = row_actions(facing)
        n = sum(cells.get(a, 0.0) for a in actions)
        return {a: (cells.get(a, 0.0) + 1.0) / (n + len(actions)) for a in actions}

    def model(self, mode: ModelMode) -> OpponentModel:
        """Laplace-smoothed tables (+1 per action cell)."""
        if mode is ModelMode.UNIFORM:
            return OpponentModel.uniform()
        tables = {}
        for rnd, tiers in ROUND_TIERS.items():
            for tier in tiers:
                for facing in (True, False):
                    merged: dict[Action, float] = {}
                    for (t, r, f, _), cells in self.opponent.items():
                        if (t, r, f) == (tier, rnd, facing):
                            for a, w in cells.items():
                                merged[a] = merged.get(a, 0.0) + w
                    tables[(tier, rnd, facing, ANY)] = self._smoothed(merged, facing)
        if mode is ModelMode.REACTIVE:
            for (tier, rnd, facing, my_last), cells in self.opponent.items():
                tables[(tier, rnd, facing, my_last)] = self._smoothed(cells, facing)
        return OpponentModel(mode, tables)


@dataclass
class AnalysisBundle:
    """Reflexion text, opponent pattern and (second order) the opponent's view of me."""

    reflexion_text: str = ""
    model: OpponentModel = field(default_factory=OpponentModel.uniform)
    pattern_text: str = ""
    opponent_belief_text: str = ""
    order: ToMOrder = ToMOrder.ZERO
    diagnostics: list[str] = field(default_factory=list)
    raw_prompts: list[str] = field(default_factory=list)
    raw_completions: list[str] = field(default_factory=list)

    @property
    def effective_order(self) -> ToMOrder:
        """Order actually usable; a bundle without a pattern degrades to zero."""
        if self.order is not ToMOrder.ZERO and self.model.mode is ModelMode.UNIFORM:
            return ToMOrder.ZERO
        return self.order


def _fmt_row(row) -> str:
    return ", ".join(f"{a.value} {p:.0%}" for a, p in row.items())


_TIER_WORDS = {HandStrength.WEAK: "a Jack", HandStrength.MID: "a Queen", HandStrength.STRONG: "a King",
               HandStrength.PAIR: "a card matching the public card"}


def describe_model(model: OpponentModel) -> str:
    if model.mode is ModelMode.UNIFORM:
        return "No pattern yet: every legal action is treated as equally likely."
    lines = []
    for (tier, rnd, facing, my_last), row in sorted(model.tables.items(), key=lambda kv: str(kv[0])):
        spot = "facing a bet" if facing else "not facing a bet"
        after = "" if my_last == ANY else (
            " when I have not acted" if my_last is None else f" after my {my_last.value}")
        lines.append(f"- Holding {_TIER_WORDS[tier]} in round {rnd}, {spot}{after}: {_fmt_row(row)}.")
    return "\n".join(lines)


def describe_my_pattern(counts: PatternCounts) -> str:
    if not counts.mine:
        return "The opponent has no information about my play yet."
    lines = []
    for (tier, rnd), cells in sorted(counts.mine.items(), key=lambda kv: str(kv[0])):
        n = sum(cells.values())
        shares = ", ".join(f"{a.value} {w / n:.0%}" for a, w in sorted(cells.items(), key=lambda kv: kv[0].value))
        lines.append(f"- When I hold {_TIER_WORDS[tier]} in round {rnd} the opponent has seen me {shares}.")
    return "\n".join(lines)


def describe_history(counts: PatternCounts, window: int = HISTORY_WINDOW) -> str:
    """Win/loss summary: the last ``window`` games in full, older ones aggregated."""
    if not counts.results:
        return "No games have been played yet."
    older, recent = counts.results[:-window], counts.results[-window:]
    lines = []
    if older:
        won = sum(1 for r in older if r[3] > 0)
        lost = sum(1 for r in older if r[3] < 0)
        lines.append(f"Earlier {len(older)} games: won {won}, lost {lost}, net {sum(r[3] for r in older):+d} chips.")
    for game_id, own, opp, chips in recent:
        opp_text = opp.word if opp is not None else "unknown"
        verdict = "won" if chips > 0 else ("lost" if chips < 0 else "drew")
        lines.append(f"Game {game_id}: I held {own.word}, opponent held {opp_text}; I {verdict} {abs(chips)} chips.")
    return "\n".join(lines)


def reflexion_summary(counts: PatternCounts) -> str:
    if not counts.results:
        return "No previous games."
    by_card: dict[Rank, list[int]] = {}
    for _, own, _, chips in counts.results:
        by_card.setdefault(own, []).append(chips)
    parts = [f"with {r.word}: {sum(v):+d} chips over {len(v)} games" for r, v in sorted(by_card.items())]
    total = sum(r[3] for r in counts.results)
    worst = min(by_card, key=lambda r: sum(by_card[r]))
    return (f"Net result so far {total:+d} chips ({'; '.join(parts)}). "
            f"Most chips were lost holding {worst.word}; play that card more carefully.")


def analyze_game(rule: RuleDescription, dataset: MatchDataset, order: ToMOrder,
                 counts: Optional[PatternCounts] = None) -> AnalysisBundle:
    """Oracle analysis: empirical pattern tables plus structured reflexion."""
    order = ToMOrder.parse(order)
    if counts is None:
        counts = PatternCounts.from_dataset(dataset)
    mode = {ToMOrder.ZERO: ModelMode.UNIFORM, ToMOrder.FIRST: ModelMode.STATIC,
            ToMOrder.SECOND: ModelMode.REACTIVE}[order]
    model = counts.model(mode)
    return AnalysisBundle(
        reflexion_text=reflexion_summary(counts) + "\n" + describe_history(counts),
        model=model,
        pattern_text=describe_model(model) if order is not ToMOrder.ZERO else "",
        opponent_belief_text=describe_my_pattern(counts) if order is ToMOrder.SECOND else "",
        order=order,
    )


# --- per-turn stages ------------------------------------------------------------

def predict_cards(bundle: AnalysisBundle, obs: Observation,
                  order: ToMOrder) -> tuple[BeliefDistribution, str, bool]:
    """Belief over the opponent's card, its explanation and a degeneracy flag."""
    prior = card_prior(obs.private_card, obs.public_card)
    if ToMOrder.parse(order) is ToMOrder.ZERO:
        return prior, f"Prior from remaining cards: {prior.describe()}.", False
    seen = opponent_actions(obs)
    result = posterior(prior, bundle.model, seen, obs.public_card)
    moves = ", ".join(f"{s.action.value} (round {s.context.round})" for s in seen) or "none"
    text = f"Opponent actions so far: {moves}. Belief on the opponent's card: {result.belief.describe()}."
    if result.degenerate:
        text += " The actions were impossible under the pattern, so the prior is kept."
    return result.belief, text, result.degenerate


def order_model(bundle: AnalysisBundle, order: ToMOrder) -> OpponentModel:
    return OpponentModel.uniform() if order is ToMOrder.ZERO else bundle.model


def plan_and_evaluate(bundle: AnalysisBundle, belief: BeliefDistribution, obs: Observation,
                      order: ToMOrder, config: LeducConfig = LeducConfig()) -> tuple[list[PlanCandidate], Action]:
    if not obs.legal_actions:
        raise ValueError("no legal actions to plan over")
    model = order_model(bundle, ToMOrder.parse(order))
    plans = []
    for plan in evaluate_plans(obs, belief, model, config):
        r = plan.rates
        rationale = (f"{plan.action.value}: win {r.win:.1%}, lose {r.lose:.1%}, draw {r.draw:.1%}; "
                     f"payoffs +{plan.win_payoff:g}/-{plan.lose_payoff:g}")
        plans.append(PlanCandidate(plan.action, r, plan.win_payoff, plan.lose_payoff, plan.expected_gain, rationale))
    return plans, best_plan(plans)


def fallback_action(legal) -> Action:
    for action in (Action.CHECK, Action.CALL, Action.FOLD):
        if action in legal:
            return action
    return legal[0]


def end_game_update(dataset: MatchDataset, record: GameRecord, hindsight: bool) -> MatchDataset:
    """Append a finished game; without hindsight the opponent's card is hidden."""
    if not record.steps or not replay_steps(record.steps).terminal:
        raise ValueError(f"game {record.game_id} is not finished")
    seat = record.observer if record.observer is not None else 0
    return dataset.append(record.view_for(seat, hindsight))


def current_game_text(obs: Observation) -> str:
    if not obs.betting_sequence_public:
        return "No actions yet in this game."
    return "; ".join(
        f"round {s.round}: {'I' if s.player == obs.player else 'opponent'} {s.action.value}"
        for s in obs.betting_sequence_public
    )


class TomAgent:
    """Planning agent at a fixed ToM order over the oracle or an LLM backend."""

    def __init__(self, order=ToMOrder.SECOND, backend: Optional[Backend] = None, *, hindsight: bool = True,
                 name: Optional[str] = None, rule: RuleDescription = LEDUC_RULE,
                 conv: ObsConversionRule = LEDUC_OBS_RULE, model: str = "gpt-4-0613",
                 temperature: float = 0.0, max_tokens: int = 1024, format_retries: int = 2,
                 opponent_name: str = "the opponent", config: LeducConfig = LeducConfig()):
        self.order = ToMOrder.parse(order)
        self.backend = backend
        self.hindsight = hindsight
        self.name = name or f"{'llm' if backend else 'oracle'}-{TEMPLATE_SUFFIX[self.order]}"
        self.rule = rule
        self.conv = conv
        self.model = model
        self.temperature = temperature
        self.max_tokens = max_tokens
        self.format_retries = format_retries
        self.opponent_name = opponent_name
        self.config = config
        self.dataset = MatchDataset()
        self.counts = PatternCounts()
        self.bundle = AnalysisBundle()
        self.seat: Optional[int] = None
        self._bundle_logged = False
        self._turn_cache: dict = {}
        self._cache_owner: Optional[AnalysisBundle] = None
        self._obs_template = load_template("observation")

    # -- game lifecycle ------------------------------------------------------
    def begin_game(self, seat: int) -> None:
        self.seat = seat
        self._bundle_logged = False
        if len(self.dataset) == 0:
            self.bundle = AnalysisBundle(order=ToMOrder.ZERO)
        elif self.backend is None:
            self.bundle = analyze_game(self.rule, self.dataset, self.order, self.counts)
        else:
            self.bundle = self._llm_analysis()

    def end_game(self, record: GameRecord) -> None:
        end_game_update(self.dataset, record.view_for(self.seat, self.hindsight), self.hindsight)
        self.counts.add(self.dataset.games[-1])

    def act(self, obs: Observation, rng: Optional[random.Random] = None) -> tuple[Action, DeliberationRecord]:
        return run_turn(self, obs)

    # -- LLM plumbing --------------------------------------------------------
    def _request(self, template_id: str, bindings: dict) -> tuple[str, str]:
        prompt = render_text(load_template(template_id), bindings, template_id)
        request = CompletionRequest(prompt, self.model, self.temperature, self.max_tokens,
                                    template_id=template_id, bindings_digest=bindings_digest(bindings))
        return prompt, self.backend.complete(request).text

    def _prompt_with_retries(self, template_id: str, bindings: dict, parse, prompts: list,
                             completions: list, diagnostics: list):
        """Prompt, parse, and re-prompt with a format reminder on parse errors."""
        base = render_text(load_template(template_id), bindings, template_id)
        error = None
        for attempt in range(self.format_retries + 1):
            prompt, tid, digest = base, template_id, bindings_digest(bindings)
            if error is not None:
                prompt += render_text(load_template("format_reminder"),
                                      {"error": error, "valid_actions": bindings.get("valid_actions", "any")})
                tid = f"{template_id}+reminder{attempt}"
                digest = bindings_digest(dict(bindings, error=error))
            request = CompletionRequest(prompt, self.model, self.temperature, self.max_tokens,
                                        template_id=tid, bindings_digest=digest)
            text = self.backend.complete(request).text
            prompts.append(prompt)
            completions.append(text)
            try:
                return parse(text)
            except ParseError as exc:
                error = str(exc)
                diagnostics.append(f"{template_id} attempt {attempt + 1}: {error}")
        return None

    def _llm_analysis(self) -> AnalysisBundle:
        bundle = AnalysisBundle(order=self.order)
        bindings = {"rule": self.rule.text(), "game_history": describe_history(self.counts),
                    "opponent_name": self.opponent_name}
        tid = f"analysis_{TEMPLATE_SUFFIX[self.order]}"
        try:
            sections = self._prompt_with_retries(tid, bindings, parse_analysis, bundle.raw_prompts,
                                                 bundle.raw_completions, bundle.diagnostics)
        except LLMError as exc:
            bundle.diagnostics.append(f"analysis request failed: {exc}")
            sections = None
        if sections is None:
            bundle.diagnostics.append("analysis unreadable; playing zero order this game")
            bundle.order = ToMOrder.ZERO
            return bundle
        bundle.reflexion_text = sections.get("Reflexion", "")
        if self.order is not ToMOrder.ZERO:
            bundle.pattern_text = sections.get("Pattern", "")
            try:
                model = parse_pattern(bundle.pattern_text)
                mode = ModelMode.STATIC if self.order is ToMOrder.FIRST else ModelMode.REACTIVE
                bundle.model = OpponentModel(mode, model.tables)
            except ParseError as exc:
                bundle.diagnostics.append(f"pattern unreadable ({exc}); playing zero order this game")
                bundle.order = ToMOrder.ZERO
        if self.order is ToMOrder.SECOND:
            bundle.opponent_belief_text = sections.get("Guess", "")
        return bundle


def run_turn(agent: TomAgent, obs: Observation) -> tuple[Action, DeliberationRecord]:
    """interpret -> predict -> plan/evaluate for one decision."""
    if obs.terminal:
        raise ValueError("cannot act on a terminal observation")
    bundle = agent.bundle
    order = bundle.effective_order
    # Within one game the bundle is fixed, so decisions depend only on the infoset.
    if agent._cache_owner is not bundle:
        agent._turn_cache.clear()
        agent._cache_owner = bundle
    key = observation_key(obs)
    if key not in agent._turn_cache:
        belief, belief_text, degenerate = predict_cards(bundle, obs, order)
        plans, oracle_choice = plan_and_evaluate(bundle, belief, obs, order, agent.config)
        agent._turn_cache[key] = (belief, belief_text, degenerate, plans, oracle_choice)
    belief, belief_text, degenerate, plans, oracle_choice = agent._turn_cache[key]
    plans = list(plans)
    # Analysis traces go with the first decision of the game only.
    first = not agent._bundle_logged
    agent._bundle_logged = True
    diagnostics = list(bundle.diagnostics) if first else []
    prompts = list(bundle.raw_prompts) if first else []
    completions = list(bundle.raw_completions) if first else []
    if degenerate:
        diagnostics.append("posterior degenerate; prior kept")

    if agent.backend is None:
        obs_text = interpret_observation(agent.rule, agent.conv, obs, agent._obs_template)
        return oracle_choice, DeliberationRecord(
            tom_order=order, obs_text=obs_text, belief=belief, belief_text=belief_text, plans=plans,
            chosen=oracle_choice, opponent_belief_text=bundle.opponent_belief_text, diagnostics=diagnostics)

    obs_bindings = observation_bindings(obs, agent.rule, agent.conv)
    try:
        prompt, obs_text = agent._request("observation_prompt", obs_bindings)
        prompts.append(prompt)
        completions.append(obs_text)
    except LLMError as exc:
        diagnostics.append(f"observation request failed: {exc}")
        obs_text = interpret_observation(agent.rule, agent.conv, obs, agent._obs_template)

    bindings = {
        "rule": agent.rule.text(),
        "reflexion": bundle.reflexion_text or "No previous games.",
        "pattern": bundle.pattern_text or describe_model(bundle.model),
        "opponent_guess": bundle.opponent_belief_text or "Unknown.",
        "history": current_game_text(obs),
        "observation": obs_text,
        "valid_actions": ", ".join(a.value for a in obs.legal_actions),
    }
    tid = f"plan_{TEMPLATE_SUFFIX[order]}"
    try:
        parsed = agent._prompt_with_retries(tid, bindings, lambda t: parse_deliberation(t, obs.legal_actions),
                                            prompts, completions, diagnostics)
    except LLMError as exc:
        diagnostics.append(f"plan request failed: {exc}")
        parsed = None

    record = DeliberationRecord(
        tom_order=order, obs_text=obs_text, belief=belief, belief_text=belief_text, plans=plans,
        chosen=oracle_choice, raw_prompts=prompts, raw_completions=completions,
        oracle_choice=oracle_choice, opponent_belief_text=bundle.opponent_belief_text, diagnostics=diagnostics)
    if parsed is None:
        record.chosen = fallback_action(obs.legal_actions)
        record.fallback_used = True
        diagnostics.append(f"fallback to {record.chosen.value}")
        return record.chosen, record

    if parsed.belief is not None:
        record.belief = parsed.belief
        record.belief_text = parsed.sections.get("Belief", belief_text)
    rationales = {a: text for a, text in parsed.plans}
    record.plans = [PlanCandidate(p.action, p.rates, p.win_payoff, p.lose_payoff, p.expected_gain,
                                  rationales.get(p.action, p.rationale)) for p in plans]
    record.stated_gains = dict(parsed.gains)
    record.chosen = parsed.selection
    if parsed.selection is not oracle_choice:
        oracle_gain = {p.action: p.expected_gain for p in plans}
        delta = oracle_gain[oracle_choice] - oracle_gain[parsed.selection]
        diagnostics.append(f"model chose {parsed.selection.value}, oracle prefers {oracle_choice.value} "
                           f"(gain delta {delta:.3f})")
        log.info("LLM choice %s differs from oracle %s", parsed.selection.value, oracle_choice.value)
    return record.chosen, record


def step_record(obs: Observation, action: Action, deliberation: Optional[DeliberationRecord]) -> StepRecord:
    return StepRecord(obs.player, obs.round, obs.legal_actions, action, deliberation)
