"""Text-completion backends, prompt templates and output parsers.

Backends share one method, ``complete(request) -> CompletionResponse``:

* ``ChatCompletionClient`` talks to a chat-completion compatible HTTP
  endpoint with retries, exponential backoff and a client-side rate limit.
* ``FixtureBackend`` replays recorded transcripts (one JSON object per line
  with ``key_hash``, ``prompt_sha256`` and ``response_text``).
* ``RecordingBackend`` wraps another backend and writes such transcripts.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import re
import threading
import time
import uuid
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Callable, Mapping, Optional, Protocol

import httpx

from .belief import ANY, BeliefDistribution, ModelMode, OpponentModel, OutcomeRates
from .game import Action, Rank
from .opponents import hand_strength

log = logging.getLogger(__name__)


class LLMError(Exception):
    pass


class ConfigurationError(LLMError):
    pass


class AuthenticationError(LLMError):
    pass


class ProviderError(LLMError):
    """Malformed or empty provider payload."""


class TransientError(LLMError):
    pass


class TemplateError(Exception):
    pass


class ParseError(Exception):
    pass


# --- templates -------------------------------------------------------------------

KNOWN_PLACEHOLDERS = frozenset({
    "rule", "observation", "history", "pattern", "reflexion", "valid_actions", "belief",
    "obs_rule", "raw_observation", "own_card", "public_card", "my_chips", "opponent_chips",
    "round", "seat", "raises", "betting", "opponent_guess", "opponent_name", "game_history", "error",
})
_PLACEHOLDER = re.compile(r"\{\{|\}\}|\{([A-Za-z_][A-Za-z0-9_]*)\}")


def render_text(template: str, bindings: Mapping[str, object], name: str = "<template>") -> str:
    """Substitute ``{name}`` placeholders; ``{{`` and ``}}`` are literal braces."""

    def sub(m: re.Match) -> str:
        token = m.group(0)
        if token == "{{":
            return "{"
        if token == "}}":
            return "}"
        key = m.group(1)
        if key not in KNOWN_PLACEHOLDERS:
            raise TemplateError(f"{name}: unknown placeholder {{{key}}}")
        if key not in bindings:
            raise TemplateError(f"{name}: missing binding for placeholder {{{key}}}")
        return str(bindings[key])

    return _PLACEHOLDER.sub(sub, template)


def template_path(template_id: str, directory: Optional[Path] = None) -> Path:
    if directory is not None:
        return Path(directory) / f"{template_id}.txt"
    return Path(str(resources.files("leducmind") / "templates" / f"{template_id}.txt"))


def load_template(template_id: str, directory: Optional[Path] = None) -> str:
    path = template_path(template_id, directory)
    try:
        return path.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise TemplateError(f"no template {template_id!r} at {path}") from None


def render_template(template_file, bindings: Mapping[str, object]) -> str:
    path = Path(template_file)
    return render_text(path.read_text(encoding="utf-8"), bindings, path.name)


def bindings_digest(bindings: Mapping[str, object]) -> str:
    blob = json.dumps({k: str(v) for k, v in sorted(bindings.items())}, sort_keys=True)
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


# --- requests ----------------------------------------------------------------------

@dataclass(frozen=True)
class CompletionRequest:
    prompt: str
    model: str = "gpt-4-0613"
    temperature: float = 0.0
    max_tokens: int = 1024
    request_id: str = field(default_factory=lambda: uuid.uuid4().hex)
    template_id: str = ""
    bindings_digest: str = ""

    def __post_init__(self):
        if not self.prompt:
            raise ValueError("prompt must be non-empty")
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if self.max_tokens < 1:
            raise ValueError("max_tokens must be positive")

    @property
    def prompt_sha256(self) -> str:
        return hashlib.sha256(self.prompt.encode("utf-8")).hexdigest()

    @property
    def cache_key(self) -> str:
        blob = json.dumps([self.template_id, self.bindings_digest or self.prompt_sha256,
                           self.model, self.temperature])
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class CompletionResponse:
    text: str
    prompt_tokens: int = 0
    completion_tokens: int = 0
    latency: float = 0.0
    metadata: dict = field(default_factory=dict, compare=False)


class Backend(Protocol):
    model: str

    def complete(self, request: CompletionRequest) -> CompletionResponse: ...


class RateLimiter:
    """Evenly spaced departures: at most one request per ``60 / per_minute`` s.

    The first request leaves immediately (burst of one); any half-open
    61-second window then sees at most ``per_minute + 1`` departures for
    ``per_minute <= 60``.
    """

    def __init__(self, per_minute: float, clock: Callable[[], float] = time.monotonic,
                 sleep: Callable[[float], None] = time.sleep):
        if per_minute <= 0:
            raise ValueError("rate limit must be positive")
        self.interval = 60.0 / per_minute
        self.clock = clock
        self.sleep = sleep
        self._next = None
        self._lock = threading.Lock()

    def acquire(self) -> float:
        with self._lock:
            now = self.clock()
            if self._next is not None and now < self._next:
                self.sleep(self._next - now)
                now = self._next
            self._next = now + self.interval
            return now


class ChatCompletionClient:
    """Chat-completion HTTP client with retries and a requests-per-minute cap."""

    def __init__(self, endpoint: str, model: str = "gpt-4-0613", key_env: str = "OPENAI_API_KEY",
                 retries: int = 3, rate_limit: float = 20.0, timeout: float = 60.0,
                 backoff: float = 1.0, transport: Optional[httpx.BaseTransport] = None,
                 sleep: Callable[[float], None] = time.sleep,
                 limiter: Optional[RateLimiter] = None):
        key = os.environ.get(key_env)
        if not key:
            raise ConfigurationError(f"environment variable {key_env} is not set")
        if retries < 1:
            raise ConfigurationError("retries must be >= 1")
        self.endpoint = endpoint
        self.model = model
        self.retries = retries
        self.backoff = backoff
        self.sleep = sleep
        self.limiter = limiter or RateLimiter(rate_limit, sleep=sleep)
        self.attempts_log: list[str] = []
        self._client = httpx.Client(timeout=timeout, transport=transport,
                                    headers={"Authorization": f"Bearer {key}"})

    def _send(self, request: CompletionRequest) -> CompletionResponse:
        payload = {
            "model": request.model or self.model,
            "messages": [{"role": "user", "content": request.prompt}],
            "temperature": request.temperature,
            "max_tokens": request.max_tokens,
        }
        self.limiter.acquire()
        start = time.monotonic()
        try:
            resp = self._client.post(self.endpoint, json=payload)
        except (httpx.TimeoutException, httpx.TransportError) as exc:
            raise TransientError(str(exc)) from exc
        latency = time.monotonic() - start
        if resp.status_code in (401, 403):
            raise AuthenticationError(f"authentication failed ({resp.status_code})")
        if resp.status_code == 429 or resp.status_code >= 500:
            raise TransientError(f"provider returned {resp.status_code}")
        if resp.status_code >= 400:
            raise ProviderError(f"provider returned {resp.status_code}: {resp.text[:200]}")
        try:
            body = resp.json()
            text = body["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise ProviderError("malformed provider payload") from exc
        if not text:
            raise ProviderError("provider returned an empty completion")
        usage = body.get("usage") or {}
        return CompletionResponse(text, usage.get("prompt_tokens", 0), usage.get("completion_tokens", 0),
                                  latency, {"id": body.get("id"), "model": body.get("model")})

    def complete(self, request: CompletionRequest) -> CompletionResponse:
        delay = self.backoff
        for attempt in range(1, self.retries + 1):
            try:
                response = self._send(request)
                self.attempts_log.append(f"{request.request_id} attempt {attempt}: ok")
                log.info("completion %s succeeded on attempt %d", request.request_id, attempt)
                return response
            except TransientError as exc:
                self.attempts_log.append(f"{request.request_id} attempt {attempt}: {exc}")
                log.warning("completion %s attempt %d failed: %s", request.request_id, attempt, exc)
                if attempt == self.retries:
                    raise LLMError(f"request failed after {attempt} attempts: {exc}") from exc
                self.sleep(delay)
                delay *= 2
        raise AssertionError("unreachable")


def _transcript_line(request: CompletionRequest, text: str) -> str:
    return json.dumps({"key_hash": request.cache_key, "prompt_sha256": request.prompt_sha256,
                       "response_text": text}, ensure_ascii=False)


class FixtureBackend:
    """Replays a recorded transcript file keyed by request cache key."""

    def __init__(self, path, model: str = "fixture"):
        self.model = model
        self.entries: dict[str, dict] = {}
        for n, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
            if not line.strip():
                continue
            try:
                entry = json.loads(line)
                self.entries[entry["key_hash"]] = entry
            except (ValueError, KeyError) as exc:
                raise ProviderError(f"{path}:{n}: malformed transcript line") from exc

    def complete(self, request: CompletionRequest) -> CompletionResponse:
        entry = self.entries.get(request.cache_key)
        if entry is None:
            raise LLMError(f"no recorded completion for key {request.cache_key[:12]}")
        if entry["prompt_sha256"] != request.prompt_sha256:
            raise LLMError("recorded prompt differs from the requested prompt")
        return CompletionResponse(entry["response_text"], metadata={"fixture": True})


class RecordingBackend:
    """Forwards to ``inner`` and appends every exchange to a transcript file."""

    def __init__(self, inner: Backend, path):
        self.inner = inner
        self.model = inner.model
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self.path.write_text("", encoding="utf-8")

    def complete(self, request: CompletionRequest) -> CompletionResponse:
        response = self.inner.complete(request)
        with self.path.open("a", encoding="utf-8") as fh:
            fh.write(_transcript_line(request, response.text) + "\n")
        return response


# --- parsing -----------------------------------------------------------------------

RANK_WORDS = {"jack": Rank.JACK, "queen": Rank.QUEEN, "king": Rank.KING}
ACTION_WORDS = {a.value: a for a in Action}

_HEADERS = [
    ("Opponent Belief", r"[\w'’\- ]*?Belief on My Cards?\s*:"),
    ("Belief", r"Belief on (?!my\b)[\w'’\- ]*?Cards?\s*:"),
    ("Pattern", r"(?<!guess on )Opponent'?s Pattern\s*:"),
    ("Guess", r"The opponent'?s guess on [\w'’\- ]+? game pattern\s*:"),
    ("Reflexion", r"Reflexion\s*:"),
    ("Plans", r"(?:Make )?Reasonable Plans\s*:"),
    ("Rates", r"(?:Potential [\w'’\- ]*?actions and )?Estimate Winning/Lose/Draw Rates?(?: for Each Plan)?\s*:"),
    ("Payoffs", r"Potential believes about the number of winning and lose payoffs for each plan\s*:"),
    ("Expected Gain", r"Estimate Expected Chips Gain for Each Plan\s*:"),
    ("Plan Selection", r"Plan Selection\s*:"),
]
_HEADER_RE = re.compile("|".join(f"(?P<h{i}>{p})" for i, (_, p) in enumerate(_HEADERS)), re.IGNORECASE)


def split_sections(text: str) -> dict[str, str]:
    """Canonical section name -> body text. Later duplicates are appended."""
    out: dict[str, str] = {}
    matches = list(_HEADER_RE.finditer(text))
    for i, m in enumerate(matches):
        name = _HEADERS[int(m.lastgroup[1:])][0]
        end = matches[i + 1].start() if i + 1 < len(matches) else len(text)
        body = text[m.end():end].strip()
        out[name] = (out[name] + "\n" + body).strip() if name in out else body
    return out


_NUM = r"-?\d+(?:\.\d+)?"
_RANK_PCT = re.compile(
    rf"\b(jack|queen|king)s?\b\s*[(:]?\s*(?:probability\s*(?:of\s*)?)?({_NUM})\s*(%?)\s*(?:probability)?\)?",
    re.IGNORECASE)


def parse_belief(text: str) -> BeliefDistribution:
    """Last sentence that attaches numbers to card ranks wins.

    ``"King (80%) or a Queen (20%)"`` gives K 0.8, Q 0.2, J 0. Figures that
    do not total 100% are renormalized with a warning.
    """
    sentences = re.split(r"(?<=[.;\n])\s+", text)
    found: dict[Rank, float] = {}
    for sentence in sentences:
        pairs = _RANK_PCT.findall(sentence)
        if pairs:
            found = {}
            for word, num, pct in pairs:
                value = float(num) / 100 if pct or float(num) > 1 else float(num)
                found[RANK_WORDS[word.lower()]] = value
    if not found:
        raise ParseError("no card probabilities found")
    total = sum(found.values())
    if total <= 0:
        raise ParseError("card probabilities sum to zero")
    if abs(total - 1.0) > 1e-9:
        log.warning("belief percentages sum to %.4g; renormalizing", total * 100)
        return BeliefDistribution.from_weights(found)
    return BeliefDistribution(tuple(found.get(r, 0.0) for r in Rank))


_PLAN_SPLIT = re.compile(r"Plan\s*(\d+)\s*[:\-]?\s*\(?\s*([A-Za-z]+)\)?", re.IGNORECASE)


def _plan_segments(body: str) -> list[tuple[str, str]]:
    """``[(action word, segment text), ...]`` for ``Plan N: Action ...`` blocks."""
    marks = list(_PLAN_SPLIT.finditer(body))
    out = []
    for i, m in enumerate(marks):
        end = marks[i + 1].start() if i + 1 < len(marks) else len(body)
        out.append((m.group(2).lower(), body[m.end():end]))
    return out


def parse_gains(body: str) -> dict[Action, float]:
    gains: dict[Action, float] = {}
    for word, seg in _plan_segments(body):
        if word not in ACTION_WORDS:
            raise ParseError(f"unknown plan action {word!r}")
        tail = seg.rsplit("=", 1)[-1] if "=" in seg else seg
        m = re.search(_NUM, tail.replace(",", ""))
        if m is None:
            raise ParseError(f"non-numeric gain for plan {word!r}")
        gains[ACTION_WORDS[word]] = float(m.group(0))
    if not gains:
        raise ParseError("no expected gains found")
    return gains


_RATE_RE = re.compile(
    rf"win\w*\s*(?:rate\s*)?[:=]?\s*({_NUM})\s*(%?)\s*,\s*lose\w*\s*(?:rate\s*)?[:=]?\s*({_NUM})\s*(%?)\s*,"
    rf"\s*draw\w*\s*(?:rate\s*)?[:=]?\s*({_NUM})\s*(%?)", re.IGNORECASE)


def _prob(num: str, pct: str) -> float:
    return float(num) / 100 if pct else float(num)


def parse_rates(body: str) -> dict[Action, OutcomeRates]:
    out = {}
    for word, seg in _plan_segments(body):
        m = _RATE_RE.search(seg)
        if m and word in ACTION_WORDS:
            w, l, d = _prob(m[1], m[2]), _prob(m[3], m[4]), _prob(m[5], m[6])
            try:
                out[ACTION_WORDS[word]] = OutcomeRates(w, l, d)
            except ValueError:
                log.warning("stated rates for %s are not a distribution: %s", word, (w, l, d))
    return out


_SELECTION_PATTERNS = [
    re.compile(r"best (?:plan|strategy|action|option|choice)\s+(?:is|would be|will be)\s+"
               r"(?:to\s+)?(?:plan\s*\d+\s*[:(\-]?\s*)?([A-Za-z]+)", re.IGNORECASE),
    re.compile(r"plan\s*\d+\s*\(\s*([A-Za-z]+)\s*\)\s*(?:would be|is|will be)\s+the best", re.IGNORECASE),
    re.compile(r"(?:I will|I choose to|I select|I decide to|choose)\s+(?:plan\s*\d+\s*[:(\-]?\s*)?([A-Za-z]+)",
               re.IGNORECASE),
    re.compile(r"^\s*(?:plan\s*\d+\s*[:(\-]?\s*)?([A-Za-z]+)", re.IGNORECASE),
]


def parse_selection(body: str, legal) -> Action:
    for pattern in _SELECTION_PATTERNS:
        m = pattern.search(body)
        if m:
            word = m.group(1).lower()
            action = ACTION_WORDS.get(word)
            if action is None or action not in legal:
                raise ParseError(f"illegal selection {m.group(1)!r}")
            return action
    raise ParseError("missing selection")


@dataclass
class ParsedDeliberation:
    sections: dict[str, str] = field(compare=False)
    belief: Optional[BeliefDistribution]
    plans: list[tuple[Action, str]]
    rates: dict[Action, OutcomeRates]
    gains: dict[Action, float]
    selection: Action


def parse_deliberation(text: str, legal_actions) -> ParsedDeliberation:
    sections = split_sections(text)
    if "Plan Selection" not in sections:
        raise ParseError("missing required section 'Plan Selection'")
    if "Expected Gain" not in sections:
        raise ParseError("missing required section 'Expected Gain'")
    belief = parse_belief(sections["Belief"]) if "Belief" in sections else None
    plans = []
    for word, seg in _plan_segments(sections.get("Plans", "")):
        if word in ACTION_WORDS:
            plans.append((ACTION_WORDS[word], seg.strip(" -:\n")))
    rates = parse_rates(sections.get("Rates", ""))
    gains = parse_gains(sections["Expected Gain"])
    selection = parse_selection(sections["Plan Selection"], legal_actions)
    return ParsedDeliberation(sections, belief, plans, rates, gains, selection)


def format_deliberation(parsed: ParsedDeliberation) -> str:
    """Canonical text form; ``parse_deliberation`` reads it back unchanged."""
    lines = []
    if parsed.belief is not None:
        lines.append("Belief on Opponent's Cards:")
        lines.append(", ".join(f"{r.word} (probability {parsed.belief[r]!r})" for r in Rank) + ".")
        lines.append("")
    lines.append("Make Reasonable Plans:")
    for i, (action, rationale) in enumerate(parsed.plans, 1):
        lines.append(f"Plan {i}: {action.value.capitalize()} - {rationale}")
    lines.append("")
    lines.append("Estimate Winning/Lose/Draw Rate for Each Plan:")
    for i, (action, r) in enumerate(parsed.rates.items(), 1):
        lines.append(f"Plan {i}: {action.value.capitalize()} - win {r.win!r}, lose {r.lose!r}, draw {r.draw!r}")
    lines.append("")
    lines.append("Estimate Expected Chips Gain for Each Plan:")
    for i, (action, g) in enumerate(parsed.gains.items(), 1):
        lines.append(f"Plan {i}: {action.value.capitalize()} - Expected Chips Gain = {g!r}")
    lines.append("")
    lines.append("Plan Selection:")
    lines.append(parsed.selection.value.capitalize())
    return "\n".join(lines) + "\n"


def parse_analysis(text: str) -> dict[str, str]:
    """Split an analysis completion into reflexion / pattern / guess texts."""
    sections = split_sections(text)
    if "Pattern" not in sections and "Reflexion" not in sections:
        raise ParseError("analysis has neither a reflexion nor a pattern section")
    return sections


# --- behaviour-pattern text ------------------------------------------------------

_ROUND_WORDS = {"1st": 1, "first": 1, "2nd": 2, "second": 2}
_ROUND_RE = re.compile(r"\b(1st|first|2nd|second)\s+round\b", re.IGNORECASE)
_HOLDS_RE = re.compile(r"\bholds? an?\s+(jack|queen|king)\b", re.IGNORECASE)
_PUBLIC_RE = re.compile(r"public card is an?\s+((?:jack|queen|king)(?:\s+or\s+(?:an?\s+)?(?:jack|queen|king))*)",
                        re.IGNORECASE)
_MOVE_RE = re.compile(rf"\b(raise|call|fold|check)\w*\s*\(\s*(?:probability\s*(?:of\s*)?)?({_NUM})\s*%\s*\)",
                      re.IGNORECASE)
_MY_RAISE_RE = re.compile(r"\bopponent raises\b|\bI raise\b", re.IGNORECASE)
_MY_PASSIVE_RE = re.compile(r"\bopponent (?:checks or calls|calls or checks|checks|calls)\b", re.IGNORECASE)


def _remap_row(row: Mapping[Action, float], facing: bool) -> dict[Action, float]:
    """Call and Check are the same passive move seen from the two contexts."""
    passive = Action.CALL if facing else Action.CHECK
    out: dict[Action, float] = {}
    for action, p in row.items():
        if action in (Action.CALL, Action.CHECK):
            action = passive
        out[action] = out.get(action, 0.0) + p
    return out


def parse_pattern(text: str):
    """Read free-text behaviour patterns into an ``OpponentModel``.

    Understands bullets such as "When X holds a King, he tends to raise
    (70%) or call (30%)", round markers, public-card conditions and
    conditions on my previous move ("If the opponent raises in the first
    round"). The latter make the model Reactive. Statements that land on the
    same table key are averaged.
    """
    collected: dict[tuple, list[dict[Action, float]]] = {}
    reactive = False
    rank = None
    rnd = 1
    for bullet in re.split(r"(?<=[\s.:])-\s+|\n+|(?<=[.:])\s+(?=\d+\.\s)", text):
        m = _ROUND_RE.search(bullet)
        if m:
            rnd = _ROUND_WORDS[m.group(1).lower()]
        m = re.search(r"\b(1st|2nd)\s+Round\s*:", bullet, re.IGNORECASE)
        if m:
            rnd = _ROUND_WORDS[m.group(1).lower()]
        m = _HOLDS_RE.search(bullet)
        if m:
            rank = RANK_WORDS[m.group(1).lower()]
        moves = _MOVE_RE.findall(bullet)
        if rank is None or not moves:
            continue
        row: dict[Action, float] = {}
        for word, num in moves:
            row[ACTION_WORDS[word.lower()]] = row.get(ACTION_WORDS[word.lower()], 0.0) + float(num) / 100
        total = sum(row.values())
        row = {a: p / total for a, p in row.items()}

        if _MY_RAISE_RE.search(bullet):
            my_moves = [Action.RAISE]
        elif _MY_PASSIVE_RE.search(bullet):
            my_moves = [Action.CHECK, Action.CALL]
        else:
            my_moves = [ANY]
        reactive = reactive or my_moves != [ANY]

        pm = _PUBLIC_RE.search(bullet)
        if pm:
            rnd = 2
            publics = [RANK_WORDS[w.lower()] for w in re.findall(r"jack|queen|king", pm.group(1), re.IGNORECASE)]
        elif rnd == 2:
            publics = list(Rank)
        else:
            publics = [None]
        tiers = {hand_strength(rank, p) for p in publics}
        for tier in tiers:
            for facing in (True, False):
                for my_last in my_moves:
                    collected.setdefault((tier, rnd, facing, my_last), []).append(_remap_row(row, facing))
    if not collected:
        raise ParseError("no behaviour pattern statements found")

    tables = {key: _average(rows) for key, rows in collected.items()}
    if reactive:
        # Static fallback for contexts where I have not acted yet.
        grouped: dict[tuple, list] = {}
        for (tier, rnd, facing, my_last), row in tables.items():
            if my_last is not ANY:
                grouped.setdefault((tier, rnd, facing, ANY), []).append(row)
        for key, rows in grouped.items():
            tables.setdefault(key, _average(rows))
    return OpponentModel(ModelMode.REACTIVE if reactive else ModelMode.STATIC, tables)


def _average(rows: list[Mapping[Action, float]]) -> dict[Action, float]:
    out: dict[Action, float] = {}
    for row in rows:
        for action, p in row.items():
            out[action] = out.get(action, 0.0) + p / len(rows)
    return out


# --- offline stand-in ----------------------------------------------------------------

_SCRIPTED_ANALYSIS = """Opponent's Pattern:
1st Round: - When the opponent holds a King, he tends to raise (70%) or call (30%).
- When the opponent holds a Queen, he tends to call (60%) or raise (40%).
- When the opponent holds a Jack, he tends to fold (60%) or call (40%).
2nd Round: - When the opponent holds a King, he tends to raise (80%) or call (20%).
- When the opponent holds a Queen, he tends to call (70%) or raise (30%).
- When the opponent holds a Jack, he tends to fold (60%) or call (40%).

The opponent's guess on my game pattern:
- When I hold a King, the opponent might believe I raise (80%) or call (20%).

Reflexion:
I lost most chips when I kept calling with a Jack; fold it earlier against raises.
"""


class ScriptedBackend:
    """Deterministic offline backend that answers in the expected formats.

    Observation prompts are echoed, analysis prompts get a fixed pattern and
    plan prompts a canonical deliberation picking a legal action by a hash of
    the prompt. Useful for dry runs and for recording fixture transcripts.
    """

    model = "scripted"

    def complete(self, request: CompletionRequest) -> CompletionResponse:
        tid = request.template_id.split("+", 1)[0]
        if tid.startswith("analysis"):
            return CompletionResponse(_SCRIPTED_ANALYSIS)
        if tid.startswith("plan"):
            m = re.findall(r"^Legal actions: (.+)$", request.prompt, re.MULTILINE)
            if not m:
                raise ProviderError("plan prompt lists no legal actions")
            legal = [ACTION_WORDS[w.strip()] for w in m[-1].split(",")]
            pick = legal[int(request.prompt_sha256, 16) % len(legal)]
            share = 1.0 / len(legal)
            parsed = ParsedDeliberation(
                sections={},
                belief=BeliefDistribution((0.25, 0.25, 0.5)),
                plans=[(a, f"{a.value} and see how the opponent responds") for a in legal],
                rates={a: OutcomeRates(0.5, 0.5, 0.0) for a in legal},
                gains={a: (1.0 if a is pick else 0.0) - share for a in legal},
                selection=pick,
            )
            return CompletionResponse(format_deliberation(parsed))
        m = re.search(r"^Observation: (.+)$", request.prompt, re.MULTILINE)
        return CompletionResponse("Readable observation: " + (m.group(1) if m else request.prompt[-200:]))
