"""Words over the task alphabet and scored demonstrations.

A symbol is an int bitmask over the task's atomic propositions (bit i set
means proposition i+1 held during the transition); a word is a tuple of
symbols. Everything here is immutable.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from itertools import groupby

from .gridworld import GridState, decode_state, encode_state

Symbol = int
Word = tuple

EMPTY_WORD: Word = ()


class DemoFormatError(ValueError):
    """Raised for malformed or inconsistent demonstration files."""


def compress(word):
    """Collapse every run of equal adjacent symbols to a single occurrence."""
    return tuple(sym for sym, _ in groupby(word))


def concat(u, v):
    return tuple(u) + tuple(v)


@dataclass(frozen=True)
class Demonstration:
    """One episode: per-step pre-transition states, controls, emitted word.

    `states[t]` is the state x_t in which `controls[t]` was applied and
    `word[t]` emitted; `final_state` is the post-transition state after the
    last control. The three per-step sequences have equal length.
    """

    states: tuple
    controls: tuple
    word: tuple
    final_state: GridState
    score: float
    env_seed: int

    def __post_init__(self):
        if not (len(self.states) == len(self.controls) == len(self.word)):
            raise DemoFormatError(
                "inconsistent lengths: %d states, %d controls, %d symbols"
                % (len(self.states), len(self.controls), len(self.word))
            )

    @property
    def compressed_word(self):
        return compress(self.word)

    def trajectory(self):
        """All visited states, x_0 .. x_{T+1}."""
        return tuple(self.states) + (self.final_state,)


def demo_to_obj(demo):
    return {
        "env_seed": demo.env_seed,
        "score": demo.score,
        "controls": list(demo.controls),
        "word": list(demo.word),
        "states": [encode_state(s) for s in demo.trajectory()],
    }


def demo_from_obj(obj):
    states = [decode_state(s) for s in obj["states"]]
    controls = tuple(obj["controls"])
    word = tuple(obj["word"])
    if len(states) != len(controls) + 1:
        raise DemoFormatError(
            "expected %d states for %d controls, got %d"
            % (len(controls) + 1, len(controls), len(states))
        )
    return Demonstration(
        states=tuple(states[:-1]),
        controls=controls,
        word=word,
        final_state=states[-1],
        score=float(obj["score"]),
        env_seed=int(obj["env_seed"]),
    )


def save_demos(path, demos):
    """Write demonstrations as JSON lines (one object per line, UTF-8)."""
    with open(path, "w", encoding="utf-8") as f:
        for demo in demos:
            f.write(json.dumps(demo_to_obj(demo), separators=(",", ":")))
            f.write("\n")


def load_demos(path):
    demos = []
    with open(path, "r", encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as e:
                raise DemoFormatError(f"line {lineno}: invalid JSON ({e.msg})") from e
            try:
                demos.append(demo_from_obj(obj))
            except DemoFormatError as e:
                raise DemoFormatError(f"line {lineno}: {e}") from e
            except (KeyError, TypeError, IndexError) as e:
                raise DemoFormatError(f"line {lineno}: bad record ({e!r})") from e
    return demos
