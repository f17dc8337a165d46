"""Command-line entry point: ``leducmind eval | solve-cfr | replay | play``."""

from __future__ import annotations

import argparse
import logging
import random
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, TextIO

import yaml

from . import cfr
from .agent import TomAgent
from .game import Action, apply_action, new_game, observe, payoff
from .harness import PolicyAgent, emit_report, read_replays, run_position_swap, run_variable_seeds, write_replays
from .llm import (
    ChatCompletionClient,
    ConfigurationError,
    FixtureBackend,
    LLMError,
    RecordingBackend,
    ScriptedBackend,
    split_sections,
)
from .opponents import ARCHETYPES, archetype
from .records import GameRecord, StepRecord, ToMOrder
from .rules import LEDUC_OBS_RULE, LEDUC_RULE, interpret_observation

log = logging.getLogger(__name__)

EXIT_OK, EXIT_RUNTIME, EXIT_USAGE = 0, 1, 2


class ConfigError(Exception):
    pass


@dataclass
class AgentSpec:
    kind: str
    tom_order: Optional[ToMOrder] = None
    hindsight: bool = True
    name: Optional[str] = None


@dataclass
class LLMSettings:
    endpoint: str = "https://api.openai.com/v1/chat/completions"
    model: str = "gpt-4-0613"
    temperature: float = 0.0
    retries: int = 3
    rate_limit: float = 20.0
    key_env: str = "OPENAI_API_KEY"
    backend: str = "http"          # http | fixture | scripted
    fixture: Optional[str] = None  # transcript to replay (backend: fixture)
    record: Optional[str] = None   # transcript to write while running


@dataclass
class ProtocolSettings:
    kind: str = "swap"
    n_games: int = 50
    seed: int = 0


@dataclass
class RunConfig:
    agents: list[AgentSpec]
    game: str = "leduc"
    llm: LLMSettings = field(default_factory=LLMSettings)
    protocol: ProtocolSettings = field(default_factory=ProtocolSettings)
    output_dir: str = "runs/latest"
    redact: bool = False


_TOP_KEYS = {"game", "agents", "llm", "protocol", "output_dir", "redact"}
_AGENT_KEYS = {"kind", "tom_order", "hindsight", "name"}


def _check_keys(section: dict, allowed, where: str) -> None:
    if not isinstance(section, dict):
        raise ConfigError(f"{where}: expected a mapping")
    unknown = sorted(set(section) - set(allowed))
    if unknown:
        raise ConfigError(f"{where}: unknown key {unknown[0]!r}")


def _typed(section: dict, key: str, kind, where: str):
    value = section[key]
    if kind is float and isinstance(value, int) and not isinstance(value, bool):
        value = float(value)
    if not isinstance(value, kind) or (kind is int and isinstance(value, bool)):
        raise ConfigError(f"{where}.{key}: expected {kind.__name__}, got {value!r}")
    return value


def _agent_spec(raw, i: int) -> AgentSpec:
    where = f"agents[{i}]"
    _check_keys(raw, _AGENT_KEYS, where)
    if "kind" not in raw:
        raise ConfigError(f"{where}.kind: missing")
    kind = _typed(raw, "kind", str, where)
    base = kind.split(":", 1)[0]
    if base not in ("llm", "oracle", "cfr", "archetype"):
        raise ConfigError(f"{where}.kind: unknown agent kind {kind!r}; expected llm, oracle, cfr:<path> "
                          f"or archetype:<name>")
    if base in ("cfr", "archetype") and ":" not in kind:
        raise ConfigError(f"{where}.kind: {base} needs a value, e.g. {base}:<{'path' if base == 'cfr' else 'name'}>")
    if base == "archetype" and kind.split(":", 1)[1] not in ARCHETYPES:
        raise ConfigError(f"{where}.kind: unknown archetype {kind.split(':', 1)[1]!r}; valid options: "
                          + ", ".join(sorted(ARCHETYPES)))
    order = None
    if "tom_order" in raw:
        if base not in ("llm", "oracle"):
            raise ConfigError(f"{where}.tom_order: only meaningful for llm and oracle agents")
        try:
            order = ToMOrder.parse(raw["tom_order"])
        except ValueError as exc:
            raise ConfigError(f"{where}.tom_order: {exc}") from None
    elif base in ("llm", "oracle"):
        order = ToMOrder.SECOND
    hindsight = _typed(raw, "hindsight", bool, where) if "hindsight" in raw else True
    name = _typed(raw, "name", str, where) if "name" in raw else None
    return AgentSpec(kind, order, hindsight, name)


def parse_config(data) -> RunConfig:
    """Validate a loaded config document; errors name the offending key."""
    if data is None:
        data = {}
    _check_keys(data, _TOP_KEYS, "config")
    if data.get("game", "leduc") != "leduc":
        raise ConfigError(f"game: unsupported game {data['game']!r}; only 'leduc' is available")
    agents = data.get("agents")
    if not isinstance(agents, list) or len(agents) != 2:
        raise ConfigError("agents: exactly two agent specs are required")
    specs = [_agent_spec(a, i) for i, a in enumerate(agents)]

    llm = LLMSettings()
    if "llm" in data:
        raw = data["llm"]
        _check_keys(raw, LLMSettings.__dataclass_fields__, "llm")
        types = {"endpoint": str, "model": str, "temperature": float, "retries": int, "rate_limit": float,
                 "key_env": str, "backend": str, "fixture": str, "record": str}
        for key in raw:
            setattr(llm, key, _typed(raw, key, types[key], "llm"))
        if llm.backend not in ("http", "fixture", "scripted"):
            raise ConfigError(f"llm.backend: expected http, fixture or scripted, got {llm.backend!r}")
        if llm.backend == "fixture" and not llm.fixture:
            raise ConfigError("llm.fixture: required when llm.backend is 'fixture'")
        if llm.temperature < 0:
            raise ConfigError("llm.temperature: must be >= 0")
        if llm.retries < 1:
            raise ConfigError("llm.retries: must be >= 1")
        if llm.rate_limit <= 0:
            raise ConfigError("llm.rate_limit: must be positive")

    proto = ProtocolSettings()
    if "protocol" in data:
        raw = data["protocol"]
        _check_keys(raw, {"kind", "n_games", "seed"}, "protocol")
        if "kind" in raw:
            proto.kind = _typed(raw, "kind", str, "protocol")
        if "n_games" in raw:
            proto.n_games = _typed(raw, "n_games", int, "protocol")
        if "seed" in raw:
            proto.seed = _typed(raw, "seed", int, "protocol")
    if proto.kind not in ("seeds", "swap"):
        raise ConfigError(f"protocol.kind: expected seeds or swap, got {proto.kind!r}")
    if proto.n_games < 1:
        raise ConfigError("protocol.n_games: must be >= 1")

    out = data.get("output_dir", "runs/latest")
    if not isinstance(out, str):
        raise ConfigError("output_dir: expected a path string")
    redact = data.get("redact", False)
    if not isinstance(redact, bool):
        raise ConfigError("redact: expected true or false")
    return RunConfig(specs, "leduc", llm, proto, out, redact)


def load_config(path) -> RunConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"config {path} is not valid YAML: {exc}") from None
    return parse_config(data)


def make_backend(settings: LLMSettings):
    if settings.backend == "fixture":
        backend = FixtureBackend(settings.fixture, model=settings.model)
    elif settings.backend == "scripted":
        backend = ScriptedBackend()
    else:
        backend = ChatCompletionClient(settings.endpoint, settings.model, settings.key_env,
                                       retries=settings.retries, rate_limit=settings.rate_limit)
    if settings.record:
        backend = RecordingBackend(backend, settings.record)
    return backend


def build_agent(spec: AgentSpec, cfg: RunConfig, backend_cache: dict, opponent: str = "the opponent"):
    base, _, arg = spec.kind.partition(":")
    if base == "archetype":
        return PolicyAgent(archetype(arg), spec.name or arg)
    if base == "cfr":
        try:
            profile = cfr.load_policy(arg)
        except (OSError, cfr.PolicyFileError) as exc:
            raise ConfigError(f"agents: cannot load CFR policy {arg}: {exc}") from None
        return PolicyAgent(cfr.CFRPolicy(profile, spec.name or "cfr"))
    if base == "oracle":
        return TomAgent(spec.tom_order, hindsight=spec.hindsight, name=spec.name, opponent_name=opponent)
    if "llm" not in backend_cache:
        try:
            backend_cache["llm"] = make_backend(cfg.llm)
        except ConfigurationError as exc:
            raise ConfigError(f"llm: {exc}") from None
        except (OSError, LLMError) as exc:
            raise ConfigError(f"llm.fixture: {exc}") from None
    return TomAgent(spec.tom_order, backend_cache["llm"], hindsight=spec.hindsight, name=spec.name,
                    model=cfg.llm.model, temperature=cfg.llm.temperature, opponent_name=opponent)


def _build_pair(cfg: RunConfig):
    cache: dict = {}
    a = build_agent(cfg.agents[0], cfg, cache)
    b = build_agent(cfg.agents[1], cfg, cache)
    if a.name == b.name:
        a.name, b.name = f"{a.name}-a", f"{b.name}-b"
    return a, b


# --- commands ------------------------------------------------------------------

def cmd_eval(args, out: Optional[TextIO] = None) -> int:
    out = out or sys.stdout
    cfg = load_config(args.config)
    if args.games is not None:
        cfg.protocol.n_games = args.games
    if args.seed is not None:
        cfg.protocol.seed = args.seed
    if args.protocol is not None:
        cfg.protocol.kind = args.protocol
    if args.out is not None:
        cfg.output_dir = args.out
    if cfg.protocol.n_games < 1:
        raise ConfigError("--games: must be >= 1")
    a, b = _build_pair(cfg)
    hindsight = cfg.agents[0].hindsight
    run = run_position_swap if cfg.protocol.kind == "swap" else run_variable_seeds
    report = run(a, b, cfg.protocol.n_games, cfg.protocol.seed, hindsight=hindsight,
                 extra_config={"protocol_seed": cfg.protocol.seed, "llm_model": cfg.llm.model})
    out_dir = Path(cfg.output_dir)
    write_replays(report.records, out_dir / "replays.jsonl", redact=cfg.redact)
    paths = emit_report(report, out_dir)
    print(f"{report.agent_a}: {report.total_a:+d} chips", file=out)
    print(f"{report.agent_b}: {report.total_b:+d} chips", file=out)
    print(f"games: {len(report.games)}; report written to {paths['summary'].parent}", file=out)
    return EXIT_OK


def solve_checkpoints(iterations: int) -> list[int]:
    points, p = [], 1
    while p < iterations:
        points.append(p)
        p *= 10
    return points + [iterations]


def cmd_solve_cfr(args, out: Optional[TextIO] = None) -> int:
    out = out or sys.stdout
    if args.iters < 1:
        raise ConfigError("--iters: must be >= 1")
    path = Path(args.out)
    if path.parent and not path.parent.exists():
        raise OSError(f"directory {path.parent} does not exist")
    tree = cfr.default_tree()

    def report(n, profile):
        print(f"iteration {n}: NashConv {cfr.nash_conv(profile, tree):.6f}", file=out, flush=True)

    profile = cfr.train(args.iters, checkpoints=solve_checkpoints(args.iters), on_checkpoint=report)
    cfr.save_policy(profile, path)
    print(f"saved {len(profile.keys)} infosets to {path}", file=out)
    return EXIT_OK


def _field(label: str, text: str, out: TextIO) -> None:
    # Continuation lines of multi-line texts are indented under their label.
    first, *rest = text.strip().splitlines() or [""]
    print(f"   {label}: {first}", file=out)
    for line in rest:
        print(f"      {line}", file=out)


def cmd_replay(args, out: Optional[TextIO] = None) -> int:
    out = out or sys.stdout
    records = read_replays(args.file)
    match = [r for r in records if r.game_id == args.game]
    if not match:
        raise ConfigError(f"--game: no game {args.game!r} in {args.file}")
    record = match[0]
    deal = record.deal
    letter = lambda r: r.word if r is not None else "hidden"  # noqa: E731
    print(f"Game {record.game_id} (seed {record.seed})", file=out)
    print(f"Seat 0: {record.seats[0]} holding {letter(deal.hole0)}", file=out)
    print(f"Seat 1: {record.seats[1]} holding {letter(deal.hole1)}", file=out)
    print(f"Public card: {letter(deal.public)}", file=out)
    for i, step in enumerate(record.steps, 1):
        print(f"{i}. round {step.round}, seat {step.seat} ({record.seats[step.seat]}): {step.action.value}"
              f"  [legal: {', '.join(a.value for a in step.legal)}]", file=out)
        d = step.deliberation
        if d is None:
            continue
        print(f"   ToM order: {d.tom_order.name.lower()}", file=out)
        _field("Observation", d.obs_text, out)
        _field("Belief", d.belief_text, out)
        if d.opponent_belief_text:
            _field("Opponent's belief on me", d.opponent_belief_text, out)
        for p in d.plans:
            print(f"   Plan {p.action.value}: expected gain {p.expected_gain:+.3f} ({p.rationale})", file=out)
        for text in d.raw_completions:
            selection = split_sections(text).get("Plan Selection")
            if selection:
                _field("Stated selection", selection, out)
        note = " (fallback)" if d.fallback_used else ""
        print(f"   Plan Selection: {d.chosen.value}{note}", file=out)
        for line in d.diagnostics:
            print(f"   note: {line}", file=out)
    print(f"Payoffs: seat 0 {record.payoffs[0]:+d}, seat 1 {record.payoffs[1]:+d}", file=out)
    return EXIT_OK


TOKENS = {a.value: a for a in Action}
QUIT_TOKENS = {"quit", "exit", "q"}


def cmd_play(args, inp: Optional[TextIO] = None, out: Optional[TextIO] = None) -> int:
    inp, out = inp or sys.stdin, out or sys.stdout
    cfg = load_config(args.config)
    if args.human_seat not in (0, 1):
        raise ConfigError("--human-seat: must be 0 or 1")
    # The first agent spec is the human's opponent.
    bot = build_agent(cfg.agents[0], cfg, {})
    human = args.human_seat
    total = 0
    game = 0
    while True:
        seed = cfg.protocol.seed + game
        state = new_game(seed)
        rng = random.Random(f"{seed}:{1 - human}")
        bot.begin_game(1 - human)
        steps = []
        print(f"--- game {game + 1} (you are seat {human}) ---", file=out)
        while not state.terminal:
            obs = observe(state, state.to_act)
            if state.to_act == human:
                print(interpret_observation(LEDUC_RULE, LEDUC_OBS_RULE, obs).strip(), file=out)
                while True:
                    print(f"your action [{', '.join(a.value for a in obs.legal_actions)}]: ", end="", file=out,
                          flush=True)
                    line = inp.readline()
                    token = line.strip().lower()
                    if not line or token in QUIT_TOKENS:
                        print(f"final total: {total:+d} chips over {game} games", file=out)
                        return EXIT_OK
                    action = TOKENS.get(token)
                    if action in obs.legal_actions:
                        break
                    print(f"invalid action {token!r}; legal tokens: "
                          f"{', '.join(a.value for a in obs.legal_actions)}", file=out)
                delib = None
            else:
                action, delib = bot.act(obs, rng)
                print(f"opponent: {action.value}", file=out)
            steps.append(StepRecord(obs.player, obs.round, obs.legal_actions, action, delib))
            state = apply_action(state, action)
        result = payoff(state)
        total += result[human]
        game += 1
        opp_card = state.hole_cards[1 - human].rank.word
        print(f"game over: opponent held {opp_card}; you {result[human]:+d} chips (total {total:+d})", file=out)
        seats = ["human", bot.name] if human == 0 else [bot.name, "human"]
        bot.end_game(GameRecord.from_state(f"play-{game:04d}", seed, seats, state, steps, result))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="leducmind", description="Leduc Hold'em planning agents")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("eval", help="run an evaluation protocol")
    p.add_argument("--config", required=True)
    p.add_argument("--games", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--protocol", choices=["seeds", "swap"])
    p.add_argument("--out")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("solve-cfr", help="train a CFR policy and save it")
    p.add_argument("--iters", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_solve_cfr)

    p = sub.add_parser("replay", help="pretty-print one game from a replay file")
    p.add_argument("--file", required=True)
    p.add_argument("--game", required=True)
    p.set_defaults(func=cmd_replay)

    p = sub.add_parser("play", help="play against an agent in the terminal")
    p.add_argument("--config", required=True)
    p.add_argument("--human-seat", type=int, choices=[0, 1], required=True)
    p.set_defaults(func=cmd_play)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:  # noqa: BLE001 - top-level reporting
        log.debug("command failed", exc_info=True)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
