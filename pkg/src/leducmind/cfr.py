"""Tabular vanilla CFR for Leduc Hold'em with exact chance enumeration.

The game tree is flattened once into numpy arrays: every terminal history
stores the path of (infoset, action) slots leading to it. One CFR pass for a
player is then a handful of gathers, cumulative products and a bincount over
that path matrix, which keeps 10^5 full-tree iterations in the range of a
minute without compiled extensions.
"""

from __future__ import annotations

import io
import logging
import struct
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Callable, Iterable, Optional

import numpy as np

from .game import (
    ACTIONS,
    Action,
    Card,
    GameState,
    LeducConfig,
    Observation,
    Rank,
    apply_action,
    legal_actions,
    new_game,
    payoff,
    sequence_code,
)
from .opponents import sample_action

log = logging.getLogger(__name__)

NUM_ACTIONS = len(ACTIONS)
ACTION_INDEX = {a: i for i, a in enumerate(ACTIONS)}
MAGIC = b"SUSP-CFR"
FORMAT_VERSION = 1


class PolicyFileError(Exception):
    pass


def infoset_key(player: int, own: Rank, public: Optional[Rank], steps) -> str:
    pub = public.letter if public is not None else "-"
    return f"{player}|{own.letter}|{pub}|{sequence_code(steps)}"


def state_key(state: GameState) -> str:
    p = state.to_act
    pub = state.public_card.rank if state.public_card is not None else None
    return infoset_key(p, state.hole_cards[p].rank, pub, state.betting_sequence)


def observation_key(obs: Observation) -> str:
    return infoset_key(obs.player, obs.private_card, obs.public_card, obs.betting_sequence_public)


def legal_from_key(key: str) -> tuple[Action, ...]:
    """Legal actions at an infoset, recovered by replaying its betting code."""
    _, _, _, seq = key.split("|")
    state = new_game(0)
    for ch in seq.replace("/", ""):
        state = apply_action(state, Action.from_code(ch))
    return legal_actions(state)


# --- flattened game tree -------------------------------------------------------

def deal_classes() -> list[tuple[Rank, Rank, Rank, float]]:
    """Rank-level deals ``(hole0, hole1, public, probability)``."""
    out = []
    for r0 in Rank:
        for r1 in Rank:
            for pub in Rank:
                n = 2 * (2 - (r1 == r0)) * (2 - (pub == r0) - (pub == r1))
                if n > 0:
                    out.append((r0, r1, pub, n / 120))
    return out


@dataclass
class GameTree:
    keys: list[str]
    owner: np.ndarray          # (I,) acting player of each infoset
    legal: np.ndarray          # (I, 4) bool
    depth: np.ndarray          # (I,) betting depth of each infoset
    paths: np.ndarray          # (Z, D) flat slot index, padded with I*4
    weights: np.ndarray        # (Z,) chance probability of each terminal
    utility: np.ndarray        # (Z,) payoff to seat 0
    rep_paths: np.ndarray      # (I, D) path to one history of each infoset
    config: LeducConfig = field(default_factory=LeducConfig)

    @property
    def num_infosets(self) -> int:
        return len(self.keys)


def build_tree(config: LeducConfig = LeducConfig()) -> GameTree:
    keys: dict[str, int] = {}
    owner, legal, depth = [], [], []
    terminal_paths, weights, utility = [], [], []
    rep_paths: dict[int, list[int]] = {}

    def visit(state: GameState, path: list[int], w: float):
        if state.terminal:
            terminal_paths.append(list(path))
            weights.append(w)
            utility.append(payoff(state)[0])
            return
        key = state_key(state)
        if key not in keys:
            keys[key] = len(keys)
            acts = legal_actions(state)
            owner.append(state.to_act)
            legal.append([a in acts for a in ACTIONS])
            depth.append(len(state.betting_sequence))
            rep_paths[keys[key]] = list(path)
        idx = keys[key]
        for action in legal_actions(state):
            path.append(idx * NUM_ACTIONS + ACTION_INDEX[action])
            visit(apply_action(state, action), path, w)
            path.pop()

    for r0, r1, pub, w in deal_classes():
        copies = {}

        def card(rank):
            copies[rank] = copies.get(rank, -1) + 1
            return Card(rank, copies[rank])

        holes = (card(r0), card(r1))
        start = GameState(round=1, hole_cards=holes, board=card(pub),
                          pot_contribution=(config.small_blind, config.big_blind),
                          raises_this_round=0, to_act=0, config=config)
        visit(start, [], w)

    n = len(keys)
    pad = n * NUM_ACTIONS
    width = max(len(p) for p in terminal_paths)

    def matrix(rows):
        out = np.full((len(rows), width), pad, dtype=np.int64)
        for i, row in enumerate(rows):
            out[i, : len(row)] = row
        return out

    return GameTree(
        keys=list(keys),
        owner=np.array(owner, dtype=np.int64),
        legal=np.array(legal, dtype=bool),
        depth=np.array(depth, dtype=np.int64),
        paths=matrix(terminal_paths),
        weights=np.array(weights),
        utility=np.array(utility, dtype=np.float64),
        rep_paths=matrix([rep_paths[i] for i in range(n)]),
        config=config,
    )


@lru_cache(maxsize=4)
def default_tree(config: LeducConfig = LeducConfig()) -> GameTree:
    return build_tree(config)


class _PathCache:
    """Static per-player masks over the terminal path matrix."""

    def __init__(self, tree: GameTree):
        n = tree.num_infosets
        slot_owner = np.append(np.repeat(tree.owner, NUM_ACTIONS), -1)
        owners = slot_owner[tree.paths]
        self.mask = [owners == 0, owners == 1]
        self.sign = [tree.utility, -tree.utility]
        rep_owner = slot_owner[tree.rep_paths]
        self.rep_mask = rep_owner == tree.owner[:, None]
        self.nslots = n * NUM_ACTIONS + 1


def counterfactual_values(tree: GameTree, cache: _PathCache, sigma_ext: np.ndarray,
                          player: int) -> np.ndarray:
    """Sum over histories of counterfactual action values, shape (I, 4)."""
    s = sigma_ext[tree.paths]
    own = cache.mask[player]
    opp = cache.mask[1 - player]
    pi_opp = np.where(opp, s, 1.0).prod(axis=1)
    base = tree.weights * cache.sign[player] * pi_opp
    s_own = np.where(own, s, 1.0)
    suffix = np.cumprod(s_own[:, ::-1], axis=1)[:, ::-1]
    below = np.empty_like(suffix)
    below[:, :-1] = suffix[:, 1:]
    below[:, -1] = 1.0
    contrib = base[:, None] * below
    flat = np.bincount(tree.paths[own], weights=contrib[own], minlength=cache.nslots)
    return flat[:-1].reshape(-1, NUM_ACTIONS)


def regret_matching(regret: np.ndarray, legal: np.ndarray) -> np.ndarray:
    pos = np.where(legal, np.maximum(regret, 0.0), 0.0)
    total = pos.sum(axis=1, keepdims=True)
    uniform = legal / legal.sum(axis=1, keepdims=True)
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(total > 0, pos / np.where(total > 0, total, 1.0), uniform)


def _extend(sigma: np.ndarray) -> np.ndarray:
    return np.append(sigma.ravel(), 1.0)


# --- profiles -------------------------------------------------------------------

@dataclass
class StrategyProfile:
    keys: list[str]
    regret_sum: np.ndarray
    strategy_sum: np.ndarray
    legal: np.ndarray
    iterations: int = 0
    unknown_lookups: int = 0

    def __post_init__(self):
        self.index = {k: i for i, k in enumerate(self.keys)}

    @classmethod
    def empty(cls, tree: GameTree) -> "StrategyProfile":
        shape = (tree.num_infosets, NUM_ACTIONS)
        return cls(list(tree.keys), np.zeros(shape), np.zeros(shape), tree.legal.copy())

    def current_strategy(self) -> np.ndarray:
        return regret_matching(self.regret_sum, self.legal)

    def average_matrix(self) -> np.ndarray:
        s = np.where(self.legal, self.strategy_sum, 0.0)
        total = s.sum(axis=1, keepdims=True)
        uniform = self.legal / self.legal.sum(axis=1, keepdims=True)
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(total > 0, s / np.where(total > 0, total, 1.0), uniform)


def average_strategy(profile: StrategyProfile, key: str,
                     legal: Optional[Iterable[Action]] = None) -> dict[Action, float]:
    """Normalized strategy sum at ``key``; uniform when the key is unknown."""
    i = profile.index.get(key)
    if i is None:
        profile.unknown_lookups += 1
        log.debug("unknown infoset %s; playing uniform", key)
        acts = tuple(legal) if legal is not None else legal_from_key(key)
        return {a: 1.0 / len(acts) for a in acts}
    row = profile.strategy_sum[i]
    mask = profile.legal[i]
    total = float(row[mask].sum())
    out = {}
    for j, a in enumerate(ACTIONS):
        if mask[j]:
            out[a] = float(row[j]) / total if total > 0 else 1.0 / int(mask.sum())
    return out


class CFRSolver:
    """Vanilla CFR with alternating (default) or simultaneous updates."""

    def __init__(self, tree: Optional[GameTree] = None, alternating: bool = True):
        self.tree = tree if tree is not None else default_tree()
        self.cache = _PathCache(self.tree)
        self.alternating = alternating
        self.profile = StrategyProfile.empty(self.tree)
        self.sigma = self.profile.current_strategy()

    def _update_average(self, player: int):
        tree, prof = self.tree, self.profile
        s = _extend(self.sigma)[tree.rep_paths]
        reach = np.where(self.cache.rep_mask, s, 1.0).prod(axis=1)
        mine = tree.owner == player
        prof.strategy_sum[mine] += reach[mine, None] * self.sigma[mine]

    def _update_regret(self, player: int, cfv: np.ndarray):
        mine = self.tree.owner == player
        value = (self.sigma * cfv).sum(axis=1, keepdims=True)
        delta = np.where(self.tree.legal, cfv - value, 0.0)
        self.profile.regret_sum[mine] += delta[mine]

    def iterate(self, n: int = 1) -> StrategyProfile:
        prof = self.profile
        for _ in range(n):
            if self.alternating:
                for p in (0, 1):
                    cfv = counterfactual_values(self.tree, self.cache, _extend(self.sigma), p)
                    self._update_average(p)
                    self._update_regret(p, cfv)
                    self.sigma = prof.current_strategy()
            else:
                ext = _extend(self.sigma)
                cfvs = [counterfactual_values(self.tree, self.cache, ext, p) for p in (0, 1)]
                for p in (0, 1):
                    self._update_average(p)
                    self._update_regret(p, cfvs[p])
                self.sigma = prof.current_strategy()
            prof.iterations += 1
        return prof


def train(iterations: int, seed: int = 0, *, alternating: bool = True,
          checkpoints: Iterable[int] = (),
          on_checkpoint: Optional[Callable[[int, StrategyProfile], None]] = None) -> StrategyProfile:
    """Run ``iterations`` of CFR.

    Chance is enumerated exactly, so ``seed`` does not influence the result;
    it is accepted for interface symmetry with sampled solvers.
    """
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    solver = CFRSolver(alternating=alternating)
    done = 0
    for stop in sorted({c for c in checkpoints if 0 < c <= iterations} | {iterations}):
        solver.iterate(stop - done)
        done = stop
        if on_checkpoint is not None:
            on_checkpoint(stop, solver.profile)
    return solver.profile


# --- exploitability ---------------------------------------------------------------

def _profile_matrix(profile: StrategyProfile, tree: GameTree) -> np.ndarray:
    if profile.keys == tree.keys:
        return profile.average_matrix()
    avg = profile.average_matrix()
    out = tree.legal / tree.legal.sum(axis=1, keepdims=True)
    for i, key in enumerate(tree.keys):
        j = profile.index.get(key)
        if j is not None:
            out[i] = avg[j]
    return out


def best_response_value(tree: GameTree, sigma: np.ndarray, player: int,
                        cache: Optional[_PathCache] = None) -> float:
    """Value to ``player`` of a best response against ``sigma`` (I, 4)."""
    cache = cache or _PathCache(tree)
    sigma = sigma.copy()
    mine = tree.owner == player
    for d in sorted(set(tree.depth[mine].tolist()), reverse=True):
        cfv = counterfactual_values(tree, cache, _extend(sigma), player)
        level = mine & (tree.depth == d)
        scores = np.where(tree.legal[level], cfv[level], -np.inf)
        choice = np.zeros_like(scores)
        choice[np.arange(len(scores)), scores.argmax(axis=1)] = 1.0
        sigma[level] = choice
    s = _extend(sigma)[tree.paths]
    reach = s.prod(axis=1)
    return float((tree.weights * cache.sign[player] * reach).sum())


def expected_value(tree: GameTree, sigma: np.ndarray) -> float:
    """Expected payoff to seat 0 when both seats follow ``sigma``."""
    reach = _extend(sigma)[tree.paths].prod(axis=1)
    return float((tree.weights * tree.utility * reach).sum())


def nash_conv(profile: StrategyProfile, tree: Optional[GameTree] = None) -> float:
    """Sum of both seats' best-response gains over the profile's value (chips/game)."""
    tree = tree if tree is not None else default_tree()
    sigma = _profile_matrix(profile, tree)
    cache = _PathCache(tree)
    br = [best_response_value(tree, sigma, p, cache) for p in (0, 1)]
    value = expected_value(tree, sigma)
    return (br[0] - value) + (br[1] + value)


def uniform_profile(tree: Optional[GameTree] = None) -> StrategyProfile:
    return StrategyProfile.empty(tree if tree is not None else default_tree())


# --- policy files -----------------------------------------------------------------

def save_policy(profile: StrategyProfile, path) -> None:
    """Write ``SUSP-CFR`` | u32 version | u32 count | per infoset:
    u32 key length, UTF-8 key, 4 x f64 strategy_sum, 4 x f64 regret_sum
    (actions in Call, Raise, Fold, Check order). Little-endian throughout."""
    buf = io.BytesIO()
    buf.write(MAGIC)
    buf.write(struct.pack("<II", FORMAT_VERSION, len(profile.keys)))
    for i, key in enumerate(profile.keys):
        raw = key.encode("utf-8")
        buf.write(struct.pack("<I", len(raw)))
        buf.write(raw)
        buf.write(struct.pack("<4d", *profile.strategy_sum[i]))
        buf.write(struct.pack("<4d", *profile.regret_sum[i]))
    Path(path).write_bytes(buf.getvalue())


def load_policy(path) -> StrategyProfile:
    data = Path(path).read_bytes()
    if not data.startswith(MAGIC):
        raise PolicyFileError(f"{path}: not a policy file")
    pos = len(MAGIC)

    def take(fmt):
        nonlocal pos
        size = struct.calcsize(fmt)
        if pos + size > len(data):
            raise PolicyFileError(f"{path}: truncated policy file")
        out = struct.unpack_from(fmt, data, pos)
        pos += size
        return out

    version, count = take("<II")
    if version != FORMAT_VERSION:
        raise PolicyFileError(f"{path}: unsupported policy format version {version}")
    keys, ssum, rsum = [], [], []
    for _ in range(count):
        (n,) = take("<I")
        if pos + n > len(data):
            raise PolicyFileError(f"{path}: truncated policy file")
        try:
            keys.append(data[pos:pos + n].decode("utf-8"))
        except UnicodeDecodeError as exc:
            raise PolicyFileError(f"{path}: malformed infoset key") from exc
        pos += n
        ssum.append(take("<4d"))
        rsum.append(take("<4d"))
    if pos != len(data):
        raise PolicyFileError(f"{path}: trailing bytes after {count} infosets")
    tree = default_tree()
    tree_index = {k: i for i, k in enumerate(tree.keys)}
    legal = np.zeros((count, NUM_ACTIONS), dtype=bool)
    for i, key in enumerate(keys):
        if key in tree_index:
            legal[i] = tree.legal[tree_index[key]]
        else:
            try:
                acts = legal_from_key(key)
            except Exception as exc:
                raise PolicyFileError(f"{path}: malformed infoset key {key!r}") from exc
            legal[i] = [a in acts for a in ACTIONS]
    return StrategyProfile(keys, np.array(rsum).reshape(-1, NUM_ACTIONS),
                           np.array(ssum).reshape(-1, NUM_ACTIONS), legal)


@dataclass
class CFRPolicy:
    """Average-strategy policy usable by the harness."""

    profile: StrategyProfile
    name: str = "cfr"

    def distribution(self, obs: Observation) -> dict[Action, float]:
        return average_strategy(self.profile, observation_key(obs), obs.legal_actions)

    def act(self, obs, rng) -> Action:
        return sample_action(self.distribution(obs), rng)
