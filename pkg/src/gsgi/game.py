"""Grid-world pursuit simulator with footprint information.

An attacker enters the grid from one of several entry cells carrying a
limited number of snares; the defender starts from her patrol post. Both
players move simultaneously. Movement writes directional footprints
(leaving bit at the origin, entering bit at the destination) that the
opponent can only observe in the cell they currently occupy, and players
remember everything they have seen. Deployed snares trigger independently
each step with probability ``trigger_scale * success_map[cell]``; the
defender removes every snare in her cell and catches the attacker on
co-location. Payoffs are zero-sum and tracked from the defender's side.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence, Tuple

import numpy as np

from .rng import substream

# Move indices. UP decreases the row index. STAY moves nowhere and writes no
# footprints; off-grid moves resolve to STAY (and likewise write nothing).
UP, DOWN, LEFT, RIGHT, STAY = range(5)
MOVES = (UP, DOWN, LEFT, RIGHT, STAY)
MOVE_NAMES = ("up", "down", "left", "right", "stay")
MOVE_DELTAS = ((-1, 0), (1, 0), (0, -1), (0, 1), (0, 0))
OPPOSITE = (DOWN, UP, RIGHT, LEFT, STAY)

N_DEFENDER_ACTIONS = 5
N_ATTACKER_ACTIONS = 10  # 5 moves x {place, no-place}


def attacker_action(move: int, place: bool) -> int:
    return move * 2 + int(place)


def attacker_move(action: int) -> int:
    return action // 2


def attacker_place(action: int) -> bool:
    return bool(action % 2)


Cell = Tuple[int, int]


class FootprintGrid:
    """Per-cell, per-direction footprint bits packed into one integer.

    Each cell owns 8 bits: bits 0-3 are entering marks (the walker arrived
    moving up/down/left/right), bits 4-7 are leaving marks (departed moving
    up/down/left/right). Bits are only ever set, never cleared, so masks are
    monotone within an episode and cheap to snapshot (ints are immutable).
    """

    __slots__ = ("mask", "cols")

    def __init__(self, cols: int, mask: int = 0):
        self.cols = cols
        self.mask = mask

    def copy(self) -> "FootprintGrid":
        return FootprintGrid(self.cols, self.mask)

    def _cell_index(self, cell: Cell) -> int:
        return cell[0] * self.cols + cell[1]

    def record_move(self, src: Cell, dst: Cell, direction: int) -> None:
        if direction == STAY or src == dst:
            return
        self.mask |= 1 << (self._cell_index(src) * 8 + 4 + direction)
        self.mask |= 1 << (self._cell_index(dst) * 8 + direction)

    def cell_bits(self, cell: Cell) -> int:
        """The 8 footprint bits at one cell, as a small int."""
        return (self.mask >> (self._cell_index(cell) * 8)) & 0xFF

    def entering(self, cell: Cell, direction: int) -> bool:
        return bool(self.cell_bits(cell) >> direction & 1)

    def leaving(self, cell: Cell, direction: int) -> bool:
        return bool(self.cell_bits(cell) >> (4 + direction) & 1)


def footprint_planes(mask: int, rows: int, cols: int) -> np.ndarray:
    """Unpack a footprint mask into a (rows, cols, 8) float array."""
    n = rows * cols
    raw = mask.to_bytes(n, "little")
    bits = np.unpackbits(np.frombuffer(raw, dtype=np.uint8), bitorder="little")
    return bits.reshape(rows, cols, 8).astype(np.float64)


@dataclass(frozen=True)
class RewardScheme:
    """Zero-sum reward parameters, possibly varying by cell.

    r_tool and p_attack accept either a scalar or a rows x cols array;
    r_catch is a scalar. The attacker's payoff is the negation of the
    defender's, so only defender rewards are represented.
    """

    r_tool: object = 2.0
    r_catch: float = 8.0
    p_attack: object = -4.0

    def validate(self, rows: int, cols: int) -> None:
        if np.min(np.asarray(self.r_tool, dtype=float)) <= 0:
            raise ValueError("r_tool must be positive")
        if self.r_catch <= 0:
            raise ValueError("r_catch must be positive")
        if np.max(np.asarray(self.p_attack, dtype=float)) >= 0:
            raise ValueError("p_attack must be negative")
        for name, value in (("r_tool", self.r_tool), ("p_attack", self.p_attack)):
            arr = np.asarray(value, dtype=float)
            if arr.ndim not in (0, 2) or (arr.ndim == 2 and arr.shape != (rows, cols)):
                raise ValueError(f"{name} must be a scalar or a {rows}x{cols} array")

    def tool_reward(self, cell: Cell) -> float:
        arr = np.asarray(self.r_tool, dtype=float)
        return float(arr if arr.ndim == 0 else arr[cell])

    def attack_penalty(self, cell: Cell) -> float:
        arr = np.asarray(self.p_attack, dtype=float)
        return float(arr if arr.ndim == 0 else arr[cell])


@dataclass(frozen=True)
class GameConfig:
    """Immutable game definition.

    success_map[r, c] is the per-step probability (before trigger_scale)
    that a snare deployed at (r, c) triggers. horizon may be 0, which makes
    the game terminal immediately (useful for degenerate fixtures).
    """

    rows: int
    cols: int
    success_map: np.ndarray
    entry_points: Tuple[Cell, ...]
    patrol_post: Cell
    horizon: int
    num_tools: int
    trigger_scale: float = 0.1
    rewards: RewardScheme = field(default_factory=RewardScheme)
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "success_map", np.asarray(self.success_map, dtype=float))
        object.__setattr__(self, "entry_points", tuple((int(r), int(c)) for r, c in self.entry_points))
        object.__setattr__(self, "patrol_post", (int(self.patrol_post[0]), int(self.patrol_post[1])))
        self.validate()

    def validate(self) -> None:
        if self.rows < 1 or self.cols < 1:
            raise ValueError("grid must have positive dimensions")
        if self.success_map.shape != (self.rows, self.cols):
            raise ValueError("success_map shape does not match grid")
        if np.any(self.success_map < 0) or np.any(self.success_map > 1):
            raise ValueError("success_map values must lie in [0, 1]")
        if not 0 < self.trigger_scale <= 1:
            raise ValueError("trigger_scale must lie in (0, 1]")
        if not self.entry_points:
            raise ValueError("at least one entry point is required")
        for cell in self.entry_points + (self.patrol_post,):
            if not (0 <= cell[0] < self.rows and 0 <= cell[1] < self.cols):
                raise ValueError(f"cell {cell} is off the grid")
        if self.horizon < 0:
            raise ValueError("horizon must be nonnegative")
        if self.num_tools < 0:
            raise ValueError("num_tools must be nonnegative")
        self.rewards.validate(self.rows, self.cols)

    def cell_index(self, cell: Cell) -> int:
        return cell[0] * self.cols + cell[1]

    def move_from(self, cell: Cell, direction: int) -> Cell:
        dr, dc = MOVE_DELTAS[direction]
        r, c = cell[0] + dr, cell[1] + dc
        if 0 <= r < self.rows and 0 <= c < self.cols:
            return (r, c)
        return cell

    def trigger_prob(self, cell: Cell) -> float:
        return self.trigger_scale * float(self.success_map[cell])

    def to_json(self) -> str:
        def reward_field(value):
            arr = np.asarray(value, dtype=float)
            return float(arr) if arr.ndim == 0 else arr.tolist()

        doc = {
            "rows": self.rows,
            "cols": self.cols,
            "success_map": self.success_map.tolist(),
            "trigger_scale": self.trigger_scale,
            "entry_points": [list(c) for c in self.entry_points],
            "patrol_post": list(self.patrol_post),
            "horizon": self.horizon,
            "num_tools": self.num_tools,
            "rewards": {
                "r_tool": reward_field(self.rewards.r_tool),
                "r_catch": float(self.rewards.r_catch),
                "p_attack": reward_field(self.rewards.p_attack),
            },
            "seed": self.seed,
        }
        return json.dumps(doc, indent=2)

    @staticmethod
    def from_json(text: str) -> "GameConfig":
        doc = json.loads(text)
        try:
            rewards = doc.get("rewards", {})
            reward_scheme = RewardScheme(
                r_tool=np.asarray(rewards["r_tool"]) if isinstance(rewards.get("r_tool"), list) else rewards.get("r_tool", 2.0),
                r_catch=rewards.get("r_catch", 8.0),
                p_attack=np.asarray(rewards["p_attack"]) if isinstance(rewards.get("p_attack"), list) else rewards.get("p_attack", -4.0),
            )
            return GameConfig(
                rows=doc["rows"],
                cols=doc["cols"],
                success_map=np.asarray(doc["success_map"], dtype=float),
                entry_points=[tuple(c) for c in doc["entry_points"]],
                patrol_post=tuple(doc["patrol_post"]),
                horizon=doc["horizon"],
                num_tools=doc["num_tools"],
                trigger_scale=doc.get("trigger_scale", 0.1),
                rewards=reward_scheme,
                seed=doc.get("seed", 0),
            )
        except KeyError as exc:
            raise ValueError(f"config is missing required field {exc}") from exc


@dataclass
class GameState:
    """Full simulator state. deployed_tools is a sorted tuple of cells
    (a multiset: several snares may share a cell)."""

    t: int
    defender_pos: Cell
    attacker_pos: Cell
    attacker_entry: Cell
    tools_remaining: int
    deployed_tools: Tuple[Cell, ...]
    footprints_def: FootprintGrid
    footprints_att: FootprintGrid
    memory_def: int  # attacker footprint bits the defender has observed
    memory_att: int  # defender footprint bits the attacker has observed
    attacker_caught: bool = False
    attacker_home: bool = False
    cumulative_defender_reward: float = 0.0
    tools_removed: int = 0
    tools_triggered: int = 0

    def copy(self) -> "GameState":
        return replace(
            self,
            footprints_def=self.footprints_def.copy(),
            footprints_att=self.footprints_att.copy(),
            deployed_tools=tuple(self.deployed_tools),
        )

    def attacker_active(self) -> bool:
        return not (self.attacker_caught or self.attacker_home)

    def is_terminal(self, config: GameConfig) -> bool:
        if self.t >= config.horizon:
            return True
        if not self.deployed_tools and (self.attacker_caught or self.attacker_home):
            return True
        return False


@dataclass(frozen=True)
class StepEvents:
    """What happened during one step, for replays and reward accounting."""

    defender_move: int
    attacker_move: Optional[int]
    placed: Optional[Cell]
    triggered: Tuple[Cell, ...]
    removed: Tuple[Cell, ...]
    caught: bool
    reached_home: bool
    reward: float
    terminal: bool


class Observation:
    """What one player knows: own position and footprints, remembered
    opponent footprints, the success map, and the clock. Attacker-side
    observations additionally carry entry cell and snares remaining, both
    derivable from the attacker's own history."""

    __slots__ = (
        "side", "position", "own_footprints", "opponent_memory",
        "t", "horizon", "rows", "cols", "success_map",
        "tools_remaining", "entry",
    )

    def __init__(self, side, position, own_footprints, opponent_memory, t,
                 horizon, rows, cols, success_map, tools_remaining=None, entry=None):
        self.side = side  # "defender" | "attacker"
        self.position = position
        self.own_footprints = own_footprints
        self.opponent_memory = opponent_memory
        self.t = t
        self.horizon = horizon
        self.rows = rows
        self.cols = cols
        self.success_map = success_map
        self.tools_remaining = tools_remaining
        self.entry = entry

    def opponent_bits_here(self) -> int:
        idx = self.position[0] * self.cols + self.position[1]
        return (self.opponent_memory >> (idx * 8)) & 0xFF


DEFENDER = "defender"
ATTACKER = "attacker"


def observe(state: GameState, config: GameConfig, side: str) -> Observation:
    if side == DEFENDER:
        return Observation(
            DEFENDER, state.defender_pos, state.footprints_def, state.memory_def,
            state.t, config.horizon, config.rows, config.cols, config.success_map,
        )
    return Observation(
        ATTACKER, state.attacker_pos, state.footprints_att, state.memory_att,
        state.t, config.horizon, config.rows, config.cols, config.success_map,
        tools_remaining=state.tools_remaining, entry=state.attacker_entry,
    )


def initial_state(config: GameConfig, entry: Cell) -> GameState:
    if entry not in config.entry_points:
        raise ValueError(f"{entry} is not an entry point")
    state = GameState(
        t=0,
        defender_pos=config.patrol_post,
        attacker_pos=entry,
        attacker_entry=entry,
        tools_remaining=config.num_tools,
        deployed_tools=(),
        footprints_def=FootprintGrid(config.cols),
        footprints_att=FootprintGrid(config.cols),
        memory_def=0,
        memory_att=0,
    )
    _observe_in_place(state, config)
    return state


def _observe_in_place(state: GameState, config: GameConfig) -> None:
    state.memory_def |= state.footprints_att.mask & (
        0xFF << (config.cell_index(state.defender_pos) * 8))
    if state.attacker_active():
        state.memory_att |= state.footprints_def.mask & (
            0xFF << (config.cell_index(state.attacker_pos) * 8))


def transition(
    state: GameState,
    config: GameConfig,
    defender_action: int,
    attacker_action_id: Optional[int],
    triggered_mask: int,
) -> Tuple[GameState, StepEvents]:
    """Apply one step with a fixed snare-trigger outcome.

    triggered_mask selects, by bit position, which entries of
    state.deployed_tools trigger this step. Callers either sample the mask
    (the simulator) or enumerate it (the game tree). Returns a new state;
    the input state is not modified.
    """
    if state.is_terminal(config):
        raise ValueError("cannot step a terminal state")

    nxt = state.copy()
    reward = 0.0

    # (1)-(2) simultaneous movement with footprint writes
    def_dst = config.move_from(state.defender_pos, defender_action)
    nxt.footprints_def.record_move(state.defender_pos, def_dst, defender_action)
    nxt.defender_pos = def_dst

    att_move = None
    place = False
    if state.attacker_active():
        if attacker_action_id is None:
            raise ValueError("attacker action required while the attacker is active")
        att_move = attacker_move(attacker_action_id)
        place = attacker_place(attacker_action_id)
        att_dst = config.move_from(state.attacker_pos, att_move)
        nxt.footprints_att.record_move(state.attacker_pos, att_dst, att_move)
        nxt.attacker_pos = att_dst

    # (3) snare placement at the attacker's new cell
    placed = None
    if state.attacker_active() and place and nxt.tools_remaining > 0:
        placed = nxt.attacker_pos
        nxt.tools_remaining -= 1
        nxt.deployed_tools = tuple(sorted(nxt.deployed_tools + (placed,)))

    # (4) independent snare triggers
    triggered = []
    surviving = []
    for i, cell in enumerate(nxt.deployed_tools):
        if (triggered_mask >> i) & 1:
            triggered.append(cell)
            reward += config.rewards.attack_penalty(cell)
        else:
            surviving.append(cell)
    nxt.tools_triggered += len(triggered)

    # (5) defender removes every surviving snare in her cell
    removed = tuple(c for c in surviving if c == nxt.defender_pos)
    for cell in removed:
        reward += config.rewards.tool_reward(cell)
    nxt.tools_removed += len(removed)
    nxt.deployed_tools = tuple(c for c in surviving if c != nxt.defender_pos)

    # (6) catch on co-location
    caught_now = False
    if (state.attacker_active() and nxt.defender_pos == nxt.attacker_pos
            and not nxt.attacker_caught):
        nxt.attacker_caught = True
        caught_now = True
        reward += config.rewards.r_catch

    # (7) the attacker reaches home: at his entry with no snares left to place
    reached_home = False
    if (not nxt.attacker_caught and not nxt.attacker_home
            and nxt.attacker_pos == nxt.attacker_entry and nxt.tools_remaining == 0):
        nxt.attacker_home = True
        reached_home = True

    nxt.t = state.t + 1
    nxt.cumulative_defender_reward += reward

    # (8) both players observe their current cells
    _observe_in_place(nxt, config)

    events = StepEvents(
        defender_move=defender_action,
        attacker_move=attacker_action_id if state.attacker_active() else None,
        placed=placed,
        triggered=tuple(triggered),
        removed=removed,
        caught=caught_now,
        reached_home=reached_home,
        reward=reward,
        terminal=nxt.is_terminal(config),
    )
    return nxt, events


def sample_triggers(state_after_placement_tools: Sequence[Cell], config: GameConfig,
                    rng: np.random.Generator) -> int:
    mask = 0
    for i, cell in enumerate(state_after_placement_tools):
        if rng.random() < config.trigger_prob(cell):
            mask |= 1 << i
    return mask


def step(state: GameState, config: GameConfig, defender_action: int,
         attacker_action_id: Optional[int], rng: np.random.Generator,
         ) -> Tuple[GameState, float, StepEvents]:
    """Simulator step: samples the snare-trigger outcome, then transitions."""
    # The trigger draw covers snares deployed after this step's placement,
    # so replicate the placement bookkeeping before sampling.
    tools = list(state.deployed_tools)
    if state.attacker_active() and attacker_action_id is not None:
        if attacker_place(attacker_action_id) and state.tools_remaining > 0:
            dst = config.move_from(state.attacker_pos, attacker_move(attacker_action_id))
            tools = sorted(tools + [dst])
    mask = sample_triggers(tools, config, rng)
    nxt, events = transition(state, config, defender_action, attacker_action_id, mask)
    return nxt, events.reward, events


def rollout_episode(
    config: GameConfig,
    defender_policy,
    attacker_policy,
    seed: int,
    entry: Optional[Cell] = None,
    collect_replay: bool = True,
):
    """Play one full episode and return (defender utility, replay).

    The attacker entry is drawn uniformly from the entry set unless pinned
    (local mode). Policies follow the policy protocol in gsgi.policies. The
    replay is a list of per-step dicts ready for JSONL export; pass
    collect_replay=False in hot loops.
    """
    entry_rng = substream(seed, "entry")
    env_rng = substream(seed, "triggers")
    def_rng = substream(seed, "policy", "defender")
    att_rng = substream(seed, "policy", "attacker")

    if entry is None:
        entry = config.entry_points[int(entry_rng.integers(len(config.entry_points)))]
    state = initial_state(config, entry)

    def_state = defender_policy.new_state(def_rng)
    att_state = attacker_policy.new_state(att_rng)

    replay = []
    while not state.is_terminal(config):
        def_obs = observe(state, config, DEFENDER)
        d_probs = defender_policy.action_probs(def_state, def_obs)
        d_action = int(def_rng.choice(len(d_probs), p=d_probs))

        a_action = None
        if state.attacker_active():
            att_obs = observe(state, config, ATTACKER)
            a_probs = attacker_policy.action_probs(att_state, att_obs)
            a_action = int(att_rng.choice(len(a_probs), p=a_probs))

        nxt, reward, events = step(state, config, d_action, a_action, env_rng)

        def_state = defender_policy.advance(def_state, def_obs, d_action)
        if a_action is not None:
            att_state = attacker_policy.advance(att_state, att_obs, a_action)

        if collect_replay:
            replay.append({
                "t": state.t,
                "defender_pos": list(nxt.defender_pos),
                "attacker_pos": list(nxt.attacker_pos),
                "defender_action": MOVE_NAMES[d_action],
                "attacker_action": None if a_action is None else {
                    "move": MOVE_NAMES[attacker_move(a_action)],
                    "place": attacker_place(a_action),
                },
                "placed": None if events.placed is None else list(events.placed),
                "triggered": [list(c) for c in events.triggered],
                "removed": [list(c) for c in events.removed],
                "caught": events.caught,
                "reached_home": events.reached_home,
                "reward": events.reward,
                "terminal": events.terminal,
            })
        state = nxt

    return state.cumulative_defender_reward, replay
