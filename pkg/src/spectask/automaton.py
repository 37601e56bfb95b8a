"""Weighted finite automata: scoring, incremental stepping, acceptance.

A WFA scores a word by alpha0' W_{s0} W_{s1} ... W_{sT} beta. Words are
compressed (consecutive duplicate symbols removed) before scoring so the
planner and the trainer always see the same word semantics; `WfaState`
tracks the last symbol to apply the same rule incrementally.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .core import compress


@dataclass
class Wfa:
    """Initial/final weight vectors and one transition matrix per symbol."""

    alpha0: np.ndarray
    beta: np.ndarray
    transitions: dict
    xi: float = 0.5
    ap_count: int = 0
    _zero: np.ndarray = field(default=None, repr=False, compare=False)

    @property
    def num_states(self):
        return self.alpha0.shape[0]

    def matrix(self, symbol):
        """Transition matrix for `symbol`; absent symbols act as the zero map."""
        m = self.transitions.get(symbol)
        if m is not None:
            return m
        if self._zero is None:
            self._zero = np.zeros((self.num_states, self.num_states))
        return self._zero


@dataclass(frozen=True)
class WfaState:
    """Hidden state while reading a word: current alpha and last symbol seen."""

    alpha: np.ndarray
    last_symbol: int | None = None


def initial_state(wfa):
    return WfaState(wfa.alpha0.copy(), None)


def step(state, symbol, wfa):
    """Advance the hidden state by one emitted symbol (compression-aware)."""
    if symbol == state.last_symbol:
        return state
    alpha = wfa.matrix(symbol).T @ state.alpha
    return WfaState(alpha, symbol)


def accepts(state, wfa, xi=None):
    """Whether the current hidden state passes the acceptance threshold."""
    if xi is None:
        xi = wfa.xi
    return float(state.alpha @ wfa.beta) >= xi


def score(wfa, word, compress_word=True):
    """Score a word; by default the word is compressed first."""
    if compress_word:
        word = compress(word)
    v = wfa.alpha0
    for symbol in word:
        v = v @ wfa.matrix(symbol)
    return float(v @ wfa.beta)


def save_wfa(path, wfa):
    obj = {
        "rank": int(wfa.num_states),
        "alpha0": wfa.alpha0.tolist(),
        "beta": wfa.beta.tolist(),
        "W": {
            str(sym): wfa.transitions[sym].reshape(-1).tolist()
            for sym in sorted(wfa.transitions)
        },
        "xi": wfa.xi,
        "ap_count": wfa.ap_count,
    }
    with open(path, "w", encoding="utf-8") as f:
        json.dump(obj, f, indent=2)
        f.write("\n")


def load_wfa(path):
    with open(path, "r", encoding="utf-8") as f:
        obj = json.load(f)
    m = int(obj["rank"])
    transitions = {
        int(sym): np.asarray(flat, dtype=float).reshape(m, m)
        for sym, flat in obj["W"].items()
    }
    return Wfa(
        alpha0=np.asarray(obj["alpha0"], dtype=float),
        beta=np.asarray(obj["beta"], dtype=float),
        transitions=transitions,
        xi=float(obj["xi"]),
        ap_count=int(obj["ap_count"]),
    )
