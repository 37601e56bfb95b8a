"""Demonstration generation: optimal/tempered expert rollouts and random failures.

The expert plans directly to the goal cell with unit transition costs (the
environment physics already force key-before-door), samples controls from a
Boltzmann distribution over the exact Q values, and keeps only episodes
that reach the goal. Failure sets come from a uniform-random policy, with
accidental successes discarded.
"""

from __future__ import annotations

import random

from . import gridworld as gw
from .core import Demonstration
from .cost_model import UnitCost
from .irl import argmin_control, boltzmann, sample_control
from .planner import GoalAutomaton, ProductPlanner


def expert_planner(task):
    """Unit-cost planner to the goal cell; reusable across environments."""
    return ProductPlanner(task, GoalAutomaton(), UnitCost())


def optimal_steps(task, env, planner=None):
    """Length of the shortest control sequence reaching the goal."""
    planner = planner or expert_planner(task)
    return int(round(planner.plan_value(env).value))


def _episode_rng(seed, attempt):
    return random.Random((seed + 1) * (2**32) + attempt)


def rollout_expert(task, env, eta, rng, planner):
    """Roll one expert episode; returns (states, controls, word, final_state)."""
    states, controls, word = [], [], []
    x = env
    for _ in range(task.horizon_cap):
        if x.at_goal():
            break
        q = {u: e.q for u, e in planner.q_values(x).items()}
        if eta == 0:
            u = argmin_control(q)
        else:
            u = sample_control(boltzmann(q, eta), rng)
        states.append(x)
        controls.append(u)
        word.append(gw.label(task, x, u))
        x = gw.step(task, x, u)
    return states, controls, word, x


def rollout_random(task, env, rng, horizon):
    states, controls, word = [], [], []
    x = env
    for _ in range(horizon):
        if x.at_goal():
            break
        u = rng.randrange(gw.N_CONTROLS)
        states.append(x)
        controls.append(u)
        word.append(gw.label(task, x, u))
        x = gw.step(task, x, u)
    return states, controls, word, x


def gen_success(task, n, eta=0.0, seed=0):
    """n goal-reaching demonstrations (score 1), expert temperature `eta`."""
    if n <= 0:
        raise ValueError("n must be positive")
    planner = expert_planner(task)
    demos = []
    attempt = 0
    while len(demos) < n:
        env_seed = seed + attempt
        env = gw.generate_env(task, env_seed)
        rng = _episode_rng(seed, attempt)
        states, controls, word, final = rollout_expert(task, env, eta, rng, planner)
        attempt += 1
        if not states or not final.at_goal():
            continue
        demos.append(
            Demonstration(
                states=tuple(states),
                controls=tuple(controls),
                word=tuple(word),
                final_state=final,
                score=1.0,
                env_seed=env_seed,
            )
        )
    return demos


def gen_failure(task, n, seed=0, horizon=None):
    """n random-exploration episodes that never reach the goal (score 0)."""
    if n <= 0:
        raise ValueError("n must be positive")
    horizon = horizon or task.horizon_cap
    demos = []
    attempt = 0
    while len(demos) < n:
        env_seed = seed + attempt
        env = gw.generate_env(task, env_seed)
        rng = _episode_rng(seed, attempt)
        states, controls, word, final = rollout_random(task, env, rng, horizon)
        attempt += 1
        if final.at_goal() or not states:
            continue
        demos.append(
            Demonstration(
                states=tuple(states),
                controls=tuple(controls),
                word=tuple(word),
                final_state=final,
                score=0.0,
                env_seed=env_seed,
            )
        )
    return demos
