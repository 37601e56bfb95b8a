"""Cost learning: Boltzmann policy over planner Q values and its training.

The policy is pi(u|x) proportional to exp(-Q(x,u)/eta). Its log-likelihood
on demonstrated controls is differentiated through the planner: Q(x, u')
depends on the cost parameters only through the transitions on the optimal
path achieving it, so

    d log pi(u_t|x_t) / d theta
        = sum_{u'} (1/eta) (pi(u'|x_t) - 1{u'=u_t})
          * sum_{(x,u) on path(x_t,u')} d c(x,u) / d theta.

The sign and the pi(u') index were pinned against central finite
differences of log pi.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field

import numpy as np

from .automaton import WfaState, initial_state, step
from .planner import INF_Q, PlanLimits, ProductPlanner, WfaAutomaton


class NoFeasibleControlError(ValueError):
    """Every control has infinite Q: no accepting continuation exists."""


@dataclass
class TrainConfig:
    eta: float = 0.5
    lr: float = 0.05
    epochs: int = 10
    optimizer: str = "adam"
    adam_betas: tuple = (0.9, 0.999)
    adam_eps: float = 1e-8
    grad_clip: float = 10.0
    batch_size: int = 16
    seed: int = 0
    max_expansions: int = 200_000


def boltzmann(q, eta):
    """Softmax of -Q/eta; controls at the infinity sentinel get probability 0."""
    if eta <= 0:
        raise ValueError("eta must be positive")
    finite = {u: v for u, v in q.items() if v < INF_Q}
    if not finite:
        raise NoFeasibleControlError("all controls have infinite Q")
    lo = min(finite.values())
    weights = {u: math.exp(-(v - lo) / eta) for u, v in finite.items()}
    z = sum(weights.values())
    return {u: (weights[u] / z if u in weights else 0.0) for u in sorted(q)}


def argmin_control(q):
    """Strictly-rational choice: smallest Q, ties to the smallest control id."""
    return min(sorted(q), key=lambda u: (q[u], u))


def sample_control(probs, rng):
    r = rng.random()
    acc = 0.0
    last = None
    for u in sorted(probs):
        acc += probs[u]
        last = u
        if r < acc:
            return u
    return last


def replay_wfa(wfa, word):
    """Hidden states along a word: out[t] is the state before symbol t."""
    out = [initial_state(wfa)]
    for sym in word:
        out.append(step(out[-1], sym, wfa))
    return out


def _q_dict(entries):
    return {u: e.q for u, e in entries.items()}


def subgradient_from_q(planner, entries, u_t, model, eta):
    """d log pi(u_t | x_t) / d theta given precomputed Q entries."""
    probs = boltzmann(_q_dict(entries), eta)
    if entries[u_t].q >= INF_Q:
        raise NoFeasibleControlError(f"demonstrated control {u_t} is infeasible")
    ids = []
    coeffs = []
    for u, e in entries.items():
        if e.entry_ids is None:
            continue  # infinite Q: constant in theta
        c = (probs[u] - (1.0 if u == u_t else 0.0)) / eta
        if c == 0.0 or not e.entry_ids:
            continue
        ids.extend(e.entry_ids)
        coeffs.extend([c] * len(e.entry_ids))
    if not ids:
        return np.zeros(model.n_params)
    Phi = planner.feature_rows(ids)
    return model.grad_weighted(Phi, np.asarray(coeffs))


def transition_subgradient(planner, grid, wfa_state, u_t, model, eta):
    """Subgradient of log pi at one demonstrated transition."""
    entries = planner.q_values(grid, wfa_state)
    return subgradient_from_q(planner, entries, u_t, model, eta)


def _successful(demos, xi):
    return [d for d in demos if d.score >= xi]


def _transitions(demos, wfa):
    out = []
    for d in demos:
        st = initial_state(wfa)
        for x, u, sym in zip(d.states, d.controls, d.word):
            out.append((x, st, u))
            st = step(st, sym, wfa)
    return out


def nll_loss(task, demos, model, wfa, cfg):
    """Negative log-likelihood of successful demos' controls (Boltzmann policy)."""
    succ = _successful(demos, wfa.xi)
    if not succ:
        return 0.0
    planner = ProductPlanner(
        task, WfaAutomaton(wfa), model, PlanLimits(cfg.max_expansions)
    )
    total = 0.0
    for x, key, u in _transitions(succ, wfa):
        entries = planner.q_values(x, key)
        probs = boltzmann(_q_dict(entries), cfg.eta)
        p = probs[u]
        total += -math.log(p) if p > 0 else INF_Q
    return total


class _Optimizer:
    def __init__(self, cfg, n):
        self.cfg = cfg
        self.m = np.zeros(n)
        self.v = np.zeros(n)
        self.t = 0

    def apply(self, theta, grad):
        cfg = self.cfg
        norm = float(np.linalg.norm(grad))
        if norm > cfg.grad_clip:
            grad = grad * (cfg.grad_clip / norm)
        if cfg.optimizer == "sgd":
            theta -= cfg.lr * grad
            return
        b1, b2 = cfg.adam_betas
        self.t += 1
        self.m = b1 * self.m + (1 - b1) * grad
        self.v = b2 * self.v + (1 - b2) * grad * grad
        mhat = self.m / (1 - b1**self.t)
        vhat = self.v / (1 - b2**self.t)
        theta -= cfg.lr * mhat / (np.sqrt(vhat) + cfg.adam_eps)


def train(task, demos, wfa, model, cfg):
    """Subgradient descent on the demo NLL; returns per-epoch loss trace.

    The model is updated in place; the planner's value memo and cost table
    are invalidated after every parameter update.
    """
    succ = _successful(demos, wfa.xi)
    if not succ:
        raise ValueError("no successful demonstrations to train on")
    planner = ProductPlanner(
        task, WfaAutomaton(wfa), model, PlanLimits(cfg.max_expansions)
    )
    transitions = _transitions(succ, wfa)
    rng = random.Random(cfg.seed)
    opt = _Optimizer(cfg, model.n_params)
    trace = []
    for epoch in range(cfg.epochs):
        order = list(transitions)
        rng.shuffle(order)
        nll_sum = 0.0
        seen = 0
        for lo in range(0, len(order), cfg.batch_size):
            batch = order[lo : lo + cfg.batch_size]
            grad = np.zeros(model.n_params)
            for x, key, u_t in batch:
                entries = planner.q_values(x, key)
                probs = boltzmann(_q_dict(entries), cfg.eta)
                p = probs[u_t]
                if p <= 0.0:
                    raise RuntimeError(
                        f"demonstrated control {u_t} infeasible under current cost"
                    )
                nll_sum += -math.log(p)
                seen += 1
                grad -= subgradient_from_q(planner, entries, u_t, model, cfg.eta)
            if not np.all(np.isfinite(grad)):
                raise RuntimeError("non-finite gradient; training diverged")
            opt.apply(model.theta, grad)
            model.bump()
        mean_nll = nll_sum / max(seen, 1)
        if not math.isfinite(mean_nll):
            raise RuntimeError(f"non-finite loss at epoch {epoch + 1}")
        trace.append((epoch + 1, mean_nll))
    return trace
