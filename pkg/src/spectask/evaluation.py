"""Agent evaluation: rollouts on unseen environments, TSR/MHD/return metrics,
and the spectral hyperparameter sweep."""

from __future__ import annotations

import math
import random
from dataclasses import dataclass

from . import gridworld as gw
from .core import compress
from .expert import expert_planner, rollout_expert
from .hankel import basis_from_words, build_hankel_from_words
from .irl import argmin_control, boltzmann, sample_control
from .planner import INF_Q, PlanLimits, ProductPlanner, WfaAutomaton
from .spectral import SpectralConfig, spectral_learn, word_fit_loss

RETURN_FORMULA = "1 - 0.9 * steps / horizon if the goal is reached, else 0"


@dataclass
class EpisodeRecord:
    seed: int
    success: bool  # reached the goal within twice the optimal step count
    reached_goal: bool
    accepted: bool
    steps: int
    optimal_steps: int
    agent_positions: list
    expert_positions: list


@dataclass
class EvalReport:
    task: str
    n_envs: int
    seed: int
    eta: float
    horizon: int
    tsr: float
    mhd: float | None
    mean_return: float
    expert_mean_return: float
    episodes: list

    def to_obj(self):
        return {
            "task": self.task,
            "n_envs": self.n_envs,
            "seed": self.seed,
            "eta": self.eta,
            "horizon": self.horizon,
            "tsr": self.tsr,
            "mhd": self.mhd,
            "mean_return": self.mean_return,
            "expert_mean_return": self.expert_mean_return,
            "return_formula": RETURN_FORMULA,
            "episodes": [
                {
                    "seed": e.seed,
                    "success": e.success,
                    "reached_goal": e.reached_goal,
                    "steps": e.steps,
                    "optimal_steps": e.optimal_steps,
                }
                for e in self.episodes
            ],
        }


def rollout_agent(task, env, planner, eta=0.0, horizon=None, rng=None):
    """Roll the learned policy: argmin of Q when eta == 0, else Boltzmann.

    Stops at WFA acceptance, at the goal cell, on planner failure, or at the
    horizon. Returns (positions, steps, reached_goal, accepted).
    """
    horizon = horizon or task.horizon_cap
    positions = [env.pos]
    x = env
    akey = planner.automaton.initial_key()
    steps = 0
    accepted = planner.automaton.is_accepting(akey, x)
    while steps < horizon and not accepted and not x.at_goal():
        entries = planner.q_values(x, akey)
        q = {u: e.q for u, e in entries.items()}
        if min(q.values()) >= INF_Q:
            break  # acceptance unreachable from here: episode fails
        if eta == 0:
            u = argmin_control(q)
        else:
            u = sample_control(boltzmann(q, eta), rng)
        sigma = gw.label(task, x, u)
        x = gw.step(task, x, u)
        akey = planner.automaton.step_key(akey, sigma)
        positions.append(x.pos)
        steps += 1
        accepted = planner.automaton.is_accepting(akey, x)
    return positions, steps, x.at_goal(), accepted


def tsr(episodes):
    """Fraction of episodes reaching the goal within 2x the optimal steps."""
    if not episodes:
        return 0.0
    return sum(1 for e in episodes if e.success) / len(episodes)


def mhd(agent_positions, expert_positions):
    """Modified Hausdorff distance between two position sequences.

    Each directed term averages, over one trajectory's points, the minimum
    Euclidean distance to the other trajectory; the result is the larger of
    the two terms. Each term is normalized by its own trajectory length.
    """
    if not agent_positions or not expert_positions:
        raise ValueError("mhd undefined for an empty trajectory")

    def directed(src, dst):
        total = 0.0
        for p in src:
            total += min(math.dist(p, q) for q in dst)
        return total / len(src)

    return max(directed(agent_positions, expert_positions),
               directed(expert_positions, agent_positions))


def episode_return(reached_goal, steps, horizon):
    return 1.0 - 0.9 * steps / horizon if reached_goal else 0.0


def mean_return(episodes, horizon):
    if not episodes:
        return 0.0
    return sum(episode_return(e.reached_goal, e.steps, horizon) for e in episodes) / len(
        episodes
    )


def evaluate(task, wfa, model, n_envs, seed, horizon=None, eta=0.0,
             max_expansions=200_000):
    """Run the agent on n_envs unseen environments and compute all metrics."""
    horizon = horizon or task.horizon_cap
    exp_planner = expert_planner(task)
    agent_planner = ProductPlanner(
        task, WfaAutomaton(wfa), model, PlanLimits(max_expansions)
    )
    episodes = []
    expert_returns = []
    for i in range(n_envs):
        env_seed = seed + i
        env = gw.generate_env(task, env_seed)
        opt = int(round(exp_planner.plan_value(env).value))
        rng = random.Random((seed + 1) * (2**32) + i) if eta > 0 else None
        positions, steps, reached, accepted = rollout_agent(
            task, env, agent_planner, eta=eta, horizon=horizon, rng=rng
        )
        e_states, e_controls, _, e_final = rollout_expert(
            task, env, 0.0, None, exp_planner
        )
        expert_positions = [s.pos for s in e_states] + [e_final.pos]
        expert_returns.append(episode_return(e_final.at_goal(), len(e_controls), horizon))
        episodes.append(
            EpisodeRecord(
                seed=env_seed,
                success=reached and steps <= 2 * opt,
                reached_goal=reached,
                accepted=accepted,
                steps=steps,
                optimal_steps=opt,
                agent_positions=positions,
                expert_positions=expert_positions,
            )
        )
    succ = [e for e in episodes if e.success]
    mhd_value = (
        sum(mhd(e.agent_positions, e.expert_positions) for e in succ) / len(succ)
        if succ
        else None
    )
    return EvalReport(
        task=task.name,
        n_envs=n_envs,
        seed=seed,
        eta=eta,
        horizon=horizon,
        tsr=tsr(episodes),
        mhd=mhd_value,
        mean_return=mean_return(episodes, horizon),
        expert_mean_return=sum(expert_returns) / len(expert_returns)
        if expert_returns
        else 0.0,
        episodes=episodes,
    )


def sweep(demos, ranks, rows_range, cols_range, xi=0.5, ap_count=0, seed=0):
    """Grid-search spectral hyperparameters against a held-out 20% word split.

    Returns (best, table) where best is the winning config dict and table
    holds one record per evaluated config. Ties go to the smallest
    (rank, rows, cols) lexicographically.
    """
    scored = [(compress(d.word), float(d.score)) for d in demos]
    if not scored:
        raise ValueError("no demonstrations")
    idx = list(range(len(scored)))
    random.Random(seed).shuffle(idx)
    n_held = max(1, len(idx) // 5)
    held = [scored[i] for i in idx[:n_held]]
    train = [scored[i] for i in idx[n_held:]]
    if not train:
        raise ValueError("not enough demonstrations to split")
    table = []
    best = None
    for rank in ranks:
        for rows in rows_range:
            for cols in cols_range:
                basis = basis_from_words([w for w, _ in train], rows, cols)
                blocks = build_hankel_from_words(train, basis)
                if rank > min(blocks.H_B.shape):
                    continue
                try:
                    wfa = spectral_learn(
                        blocks, SpectralConfig(rank), xi=xi, ap_count=ap_count
                    )
                except ValueError:
                    continue
                loss = word_fit_loss(wfa, held)
                rec = {"rank": rank, "rows": rows, "cols": cols, "loss": loss}
                table.append(rec)
                key = (loss, rank, rows, cols)
                if best is None or key < (best["loss"], best["rank"], best["rows"], best["cols"]):
                    best = rec
    if best is None:
        raise ValueError("no feasible configuration in the sweep ranges")
    return best, table
