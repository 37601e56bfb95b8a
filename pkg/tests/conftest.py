"""Shared test helpers: ASCII grid builder, tiny tasks, reference oracles."""

import itertools
import random
from collections import deque

import numpy as np
import pytest

from spectask import gridworld as gw
from spectask.automaton import Wfa, accepts, initial_state
from spectask.automaton import step as wfa_step

CHAR_CELL = {
    ".": gw.EMPTY,
    "W": gw.WALL,
    "K": gw.KEY,
    "C": gw.DOOR_CLOSED,
    "O": gw.DOOR_OPEN,
    "G": gw.GOAL,
    "B": gw.BALL,
    "X": gw.BOX,
}


def build_grid(rows, pos, direction=gw.UP, carried=gw.CARRY_NONE):
    """GridState from ASCII art rows ('.', 'W', 'K', 'C', 'O', 'G', 'B', 'X')."""
    h = len(rows)
    w = len(rows[0])
    assert all(len(r) == w for r in rows)
    g = bytes(CHAR_CELL[ch] for row in rows for ch in row)
    return gw.GridState(g, h, w, pos, direction, carried)


def tiny_doorkey_task(height=6, width=6):
    return gw.TaskSpec.doorkey(height=height, width=width)


def goal_bit_wfa(goal_bit):
    """Two-state WFA accepting exactly the words whose last symbol has goal_bit.

    Right-multiplying a row vector by W moves all mass into coordinate 1 when
    the symbol contains the goal bit and into coordinate 0 otherwise; both
    matrices are idempotent, so compressed stepping agrees with raw scoring.
    """
    to_goal = np.array([[0.0, 1.0], [0.0, 1.0]])
    to_rest = np.array([[1.0, 0.0], [1.0, 0.0]])
    transitions = {}
    for sym in range(2 ** (goal_bit + 1)):
        transitions[sym] = to_goal if sym & (1 << goal_bit) else to_rest
    return Wfa(
        alpha0=np.array([1.0, 0.0]),
        beta=np.array([0.0, 1.0]),
        transitions=transitions,
        xi=0.5,
        ap_count=goal_bit + 1,
    )


def random_wfa(rng, rank, n_symbols):
    """Ground-truth WFA with entries uniform in [-1, 1]."""
    return (
        rng.uniform(-1, 1, rank),
        rng.uniform(-1, 1, rank),
        {s: rng.uniform(-1, 1, (rank, rank)) for s in range(n_symbols)},
    )


def direct_score(alpha0, beta, transitions, word):
    """Reference WFA scoring by the plain matrix product (no compression)."""
    v = alpha0
    for sym in word:
        v = v @ transitions[sym]
    return float(v @ beta)


def all_words(alphabet, max_len):
    words = [()]
    for length in range(1, max_len + 1):
        words.extend(tuple(w) for w in itertools.product(alphabet, repeat=length))
    return words


def tiny_doorkey_instances(n, seed=0):
    """Random small DoorKey-like instances built on a 4x4 canvas.

    The 2x2 interior hosts the agent plus a random arrangement of key,
    door (randomly open/locked) and goal; some are unsolvable, which
    oracle comparisons have to agree on too.
    """
    rng = random.Random(seed)
    task = gw.TaskSpec.doorkey(height=4, width=4)
    out = []
    while len(out) < n:
        cells = [(1, 1), (1, 2), (2, 1), (2, 2)]
        rng.shuffle(cells)
        agent, key_c, door_c, goal_c = cells
        g = bytearray(16)
        for r in range(4):
            for c in range(4):
                if r in (0, 3) or c in (0, 3):
                    g[r * 4 + c] = gw.WALL
        g[key_c[0] * 4 + key_c[1]] = gw.KEY
        g[door_c[0] * 4 + door_c[1]] = (
            gw.DOOR_OPEN if rng.random() < 0.5 else gw.DOOR_CLOSED
        )
        g[goal_c[0] * 4 + goal_c[1]] = gw.GOAL
        out.append((task, gw.GridState(bytes(g), 4, 4, agent, rng.randrange(4), 0)))
    return out


def exhaustive_min_steps(task, env, wfa, horizon):
    """Depth-bounded exhaustive search: fewest controls until acceptance.

    Independent of the planner: breadth-first over (grid, hidden state)
    pairs, equivalent to enumerating all control sequences up to `horizon`.
    """

    def key_of(x, ws):
        return (x, ws.last_symbol, tuple(np.round(ws.alpha, 9)))

    start = (env, initial_state(wfa))
    if accepts(start[1], wfa):
        return 0
    seen = {key_of(*start)}
    frontier = deque([start])
    for depth in range(1, horizon + 1):
        nxt = deque()
        while frontier:
            x, ws = frontier.popleft()
            for u in range(gw.N_CONTROLS):
                x2 = gw.step(task, x, u)
                ws2 = wfa_step(ws, gw.label(task, x, u), wfa)
                if accepts(ws2, wfa):
                    return depth
                k = key_of(x2, ws2)
                if k not in seen:
                    seen.add(k)
                    nxt.append((x2, ws2))
        frontier = nxt
    return None


@pytest.fixture
def doorkey_task():
    return gw.TaskSpec.doorkey()
