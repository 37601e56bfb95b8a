"""Labeled gridworld environments: DoorKey and MultiRoom.

States are immutable values, dynamics (`step`) and labeling (`label`) are
pure functions, so rollouts and planners can share them freely.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, replace

# cell codes (also the on-disk encoding)
EMPTY, WALL, KEY, DOOR_CLOSED, DOOR_OPEN, GOAL, BALL, BOX = range(8)

# controls, canonical order
TURN_LEFT, TURN_RIGHT, FORWARD, PICKUP, DROP, TOGGLE = range(6)
CONTROLS = (TURN_LEFT, TURN_RIGHT, FORWARD, PICKUP, DROP, TOGGLE)
N_CONTROLS = 6

# agent heading; TURN_LEFT increments (counter-clockwise)
UP, LEFT, DOWN, RIGHT = range(4)
DIR_VEC = ((-1, 0), (0, -1), (1, 0), (0, 1))

# carried-object codes
CARRY_NONE, CARRY_KEY, CARRY_BALL, CARRY_BOX = range(4)

_PICKABLE = {KEY: CARRY_KEY, BALL: CARRY_BALL, BOX: CARRY_BOX}
_CARRY_CELL = {CARRY_KEY: KEY, CARRY_BALL: BALL, CARRY_BOX: BOX}

# cells the agent may stand on
_WALKABLE = (EMPTY, DOOR_OPEN, GOAL)


@dataclass(frozen=True)
class GridState:
    """Full environment state: grid contents, agent pose, carried object.

    `grid` is a row-major bytes buffer of cell codes, which keeps states
    hashable and cheap to compare inside search loops.
    """

    grid: bytes
    h: int
    w: int
    pos: tuple
    dir: int
    carried: int

    def cell(self, r, c):
        return self.grid[r * self.w + c]

    def facing(self):
        dr, dc = DIR_VEC[self.dir]
        return self.pos[0] + dr, self.pos[1] + dc

    def goal_pos(self):
        i = self.grid.index(GOAL)
        return divmod(i, self.w)

    def at_goal(self):
        return self.grid[self.pos[0] * self.w + self.pos[1]] == GOAL


@dataclass(frozen=True)
class TaskSpec:
    """Task definition: geometry, atomic propositions, success threshold."""

    name: str
    ap_names: tuple
    xi: float
    height: int
    width: int
    doors_need_key: bool
    horizon_cap: int
    rooms: int = 0
    room_size: int = 0

    @property
    def ap_count(self):
        return len(self.ap_names)

    @classmethod
    def doorkey(cls, height=8, width=8, xi=0.5):
        return cls(
            name="doorkey",
            ap_names=("key carried", "door open", "at goal"),
            xi=xi,
            height=height,
            width=width,
            doors_need_key=True,
            horizon_cap=4 * height * width,
        )

    @classmethod
    def multiroom(cls, rooms=4, room_size=5, xi=0.5):
        height = room_size + 2
        width = rooms * room_size + rooms + 1
        ap_names = tuple(f"door {i + 1} open" for i in range(rooms - 1)) + ("at goal",)
        return cls(
            name="multiroom",
            ap_names=ap_names,
            xi=xi,
            height=height,
            width=width,
            doors_need_key=False,
            horizon_cap=4 * height * width,
            rooms=rooms,
            room_size=room_size,
        )


def task_by_name(name, xi=0.5):
    if name == "doorkey":
        return TaskSpec.doorkey(xi=xi)
    if name == "multiroom":
        return TaskSpec.multiroom(xi=xi)
    raise ValueError(f"unknown task {name!r}")


def _framed(h, w):
    g = bytearray(h * w)
    for c in range(w):
        g[c] = WALL
        g[(h - 1) * w + c] = WALL
    for r in range(h):
        g[r * w] = WALL
        g[r * w + w - 1] = WALL
    return g


def generate_env(task, seed):
    """Deterministically generate an initial GridState for (task, seed)."""
    rng = random.Random(seed)
    if task.name == "doorkey":
        return _gen_doorkey(task, rng)
    if task.name == "multiroom":
        return _gen_multiroom(task, rng)
    raise ValueError(f"unknown task {task.name!r}")


def _gen_doorkey(task, rng):
    h, w = task.height, task.width
    g = _framed(h, w)
    split = rng.randrange(2, w - 2)
    for r in range(h):
        g[r * w + split] = WALL
    door_r = rng.randrange(1, h - 2)
    is_open = rng.random() < 0.30
    g[door_r * w + split] = DOOR_OPEN if is_open else DOOR_CLOSED
    g[(h - 2) * w + (w - 2)] = GOAL
    left = [(r, c) for r in range(1, h - 1) for c in range(1, split)]
    agent = left[rng.randrange(len(left))]
    d = rng.randrange(4)
    while True:
        key = left[rng.randrange(len(left))]
        if key != agent:
            break
    g[key[0] * w + key[1]] = KEY
    return GridState(bytes(g), h, w, agent, d, CARRY_NONE)


def _gen_multiroom(task, rng):
    h, w = task.height, task.width
    size = task.room_size
    g = _framed(h, w)
    wall_cols = [(size + 1) * k for k in range(1, task.rooms)]
    for c in wall_cols:
        for r in range(h):
            g[r * w + c] = WALL
    for c in wall_cols:
        r = rng.randrange(1, h - 1)
        g[r * w + c] = DOOR_CLOSED
    first = [(r, c) for r in range(1, h - 1) for c in range(1, size + 1)]
    agent = first[rng.randrange(len(first))]
    d = rng.randrange(4)
    last_start = (size + 1) * (task.rooms - 1) + 1
    last = [(r, c) for r in range(1, h - 1) for c in range(last_start, w - 1)]
    goal = last[rng.randrange(len(last))]
    g[goal[0] * w + goal[1]] = GOAL
    return GridState(bytes(g), h, w, agent, d, CARRY_NONE)


def step(task, s, u):
    """Apply control `u` to state `s`; invalid applications are no-ops."""
    if u == TURN_LEFT:
        return replace(s, dir=(s.dir + 1) % 4)
    if u == TURN_RIGHT:
        return replace(s, dir=(s.dir + 3) % 4)
    fr, fc = s.facing()
    if not (0 <= fr < s.h and 0 <= fc < s.w):
        return s
    fi = fr * s.w + fc
    cell = s.grid[fi]
    if u == FORWARD:
        if cell in _WALKABLE:
            return replace(s, pos=(fr, fc))
        return s
    if u == PICKUP:
        if s.carried == CARRY_NONE and cell in _PICKABLE:
            g = bytearray(s.grid)
            g[fi] = EMPTY
            return replace(s, grid=bytes(g), carried=_PICKABLE[cell])
        return s
    if u == DROP:
        if s.carried != CARRY_NONE and cell == EMPTY:
            g = bytearray(s.grid)
            g[fi] = _CARRY_CELL[s.carried]
            return replace(s, grid=bytes(g), carried=CARRY_NONE)
        return s
    if u == TOGGLE:
        if cell == DOOR_CLOSED and (not task.doors_need_key or s.carried == CARRY_KEY):
            g = bytearray(s.grid)
            g[fi] = DOOR_OPEN
            return replace(s, grid=bytes(g))
        if cell == DOOR_OPEN:
            g = bytearray(s.grid)
            g[fi] = DOOR_CLOSED
            return replace(s, grid=bytes(g))
        return s
    raise ValueError(f"unknown control {u!r}")


def ap_bits(task, s):
    """Bitmask of the task's atomic propositions holding in state `s`."""
    if task.name == "doorkey":
        bits = 0
        if s.carried == CARRY_KEY:
            bits |= 1
        if DOOR_OPEN in s.grid:
            bits |= 2
        if s.at_goal():
            bits |= 4
        return bits
    # multiroom: one bit per door, ordered by column, then the goal bit
    doors = [i for i, c in enumerate(s.grid) if c in (DOOR_CLOSED, DOOR_OPEN)]
    doors.sort(key=lambda i: (i % s.w, i // s.w))
    bits = 0
    for k, i in enumerate(doors):
        if s.grid[i] == DOOR_OPEN:
            bits |= 1 << k
    if s.at_goal():
        bits |= 1 << (task.rooms - 1)
    return bits


def label(task, s, u):
    """Symbol emitted by transition (s, u): AP bitmask of the successor state."""
    return ap_bits(task, step(task, s, u))


def success(states):
    """Ground-truth score of a trajectory: 1 iff it ends on the goal cell."""
    if not states:
        raise ValueError("empty trajectory")
    return 1 if states[-1].at_goal() else 0


# --- serialization ---------------------------------------------------------


def encode_state(s):
    return {
        "map": [[s.cell(r, c) for c in range(s.w)] for r in range(s.h)],
        "pos": [s.pos[0], s.pos[1]],
        "dir": s.dir,
        "carried": s.carried,
    }


def decode_state(obj):
    rows = obj["map"]
    h = len(rows)
    w = len(rows[0]) if h else 0
    if any(len(r) != w for r in rows):
        raise ValueError("ragged state map")
    g = bytes(c for row in rows for c in row)
    pos = (obj["pos"][0], obj["pos"][1])
    return GridState(g, h, w, pos, obj["dir"], obj["carried"])
