"""Single-tape Turing machines for the halting-reduction gadget.

Descriptors are JSON objects::

    {"states": ["scan", "done"], "tape_alphabet": ["1", "_"], "blank": "_",
     "start": "scan", "halting": ["done"],
     "transitions": {"scan": {"1": ["scan", "1", "R"], "_": ["done", "_", "S"]}}}

Every non-halting state needs a transition for every tape symbol.  Moves are
``L``, ``R`` or ``S`` (stay).  One step is one transition; a machine whose
start state is halting halts in zero steps.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Mapping

from .errors import InputError

MOVES = {"L": -1, "R": 1, "S": 0}


@dataclass(frozen=True)
class TmDescriptor:
    states: tuple[str, ...]
    tape_alphabet: tuple[str, ...]
    blank: str
    start: str
    halting: frozenset[str]
    transitions: Mapping[str, Mapping[str, tuple[str, str, str]]]

    def __post_init__(self):
        states = set(self.states)
        if self.start not in states:
            raise InputError(f"start state {self.start!r} is not declared")
        if not self.halting <= states:
            raise InputError(f"undeclared halting states: {sorted(self.halting - states)}")
        if self.blank not in self.tape_alphabet:
            raise InputError(f"blank {self.blank!r} is not in the tape alphabet")
        for q in self.states:
            if q in self.halting:
                continue
            row = self.transitions.get(q, {})
            for sym in self.tape_alphabet:
                if sym not in row:
                    raise InputError(f"no transition for ({q!r}, {sym!r}) and {q!r} is not halting")
                nq, write, move = row[sym]
                if nq not in states or write not in self.tape_alphabet or move not in MOVES:
                    raise InputError(f"bad transition ({q!r}, {sym!r}) -> {row[sym]!r}")

    def to_json(self) -> dict:
        return {
            "states": list(self.states),
            "tape_alphabet": list(self.tape_alphabet),
            "blank": self.blank,
            "start": self.start,
            "halting": sorted(self.halting),
            "transitions": {q: {s: list(t) for s, t in row.items()} for q, row in self.transitions.items()},
        }

    def encode(self) -> str:
        """Compact canonical text, suitable for embedding as a program literal."""
        return json.dumps(self.to_json(), sort_keys=True, separators=(",", ":"), ensure_ascii=False)

    @classmethod
    def from_json(cls, obj: Mapping) -> "TmDescriptor":
        try:
            return cls(
                states=tuple(obj["states"]),
                tape_alphabet=tuple(obj["tape_alphabet"]),
                blank=obj["blank"],
                start=obj["start"],
                halting=frozenset(obj["halting"]),
                transitions={q: {s: tuple(t) for s, t in row.items()}
                             for q, row in obj["transitions"].items()},
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"malformed TM descriptor: {exc}") from exc

    @classmethod
    def load(cls, path: str | Path) -> "TmDescriptor":
        try:
            obj = json.loads(Path(path).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise InputError(f"TM file is not valid JSON: {exc}") from exc
        return cls.from_json(obj)


@lru_cache(maxsize=256)
def decode(text: str) -> TmDescriptor:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"TM literal is not valid JSON: {exc}") from exc
    return TmDescriptor.from_json(obj)


def run(tm: TmDescriptor, w: str, max_steps: int) -> tuple[bool, int]:
    """Simulate at most ``max_steps`` transitions on input ``w``.

    Returns ``(halted, steps)`` where ``steps`` is the number of transitions
    actually taken.
    """
    for ch in w:
        if ch not in tm.tape_alphabet:
            raise InputError(f"input symbol {ch!r} is not in the tape alphabet")
    tape = dict(enumerate(w))
    head, state, steps = 0, tm.start, 0
    while state not in tm.halting:
        if steps >= max_steps:
            return False, steps
        nq, write, move = tm.transitions[state][tape.get(head, tm.blank)]
        tape[head] = write
        head += MOVES[move]
        state = nq
        steps += 1
    return True, steps


def halting_time(tm: TmDescriptor, w: str, cap: int) -> int | None:
    """Exact number of steps to halt, or None if it does not halt within cap."""
    halted, steps = run(tm, w, cap)
    return steps if halted else None


# -- fixture machines -----------------------------------------------------------

def chain_machine(t: int) -> TmDescriptor:
    """Halts after exactly t steps on any input over {0, 1}."""
    states = tuple(f"q{i}" for i in range(t + 1))
    trans = {f"q{i}": {s: (f"q{i + 1}", s, "R") for s in ("0", "1", "_")} for i in range(t)}
    return TmDescriptor(states, ("0", "1", "_"), "_", "q0", frozenset({f"q{t}"}), trans)


def scanner_machine() -> TmDescriptor:
    """Walks right over its input and halts on the first blank: |w| + 1 steps."""
    trans = {"scan": {"0": ("scan", "0", "R"), "1": ("scan", "1", "R"), "_": ("done", "_", "S")}}
    return TmDescriptor(("scan", "done"), ("0", "1", "_"), "_", "scan", frozenset({"done"}), trans)


def runaway_machine() -> TmDescriptor:
    """Moves right forever."""
    trans = {"go": {s: ("go", s, "R") for s in ("0", "1", "_")}}
    return TmDescriptor(("go", "halt"), ("0", "1", "_"), "_", "go", frozenset({"halt"}), trans)


def shuttle_machine() -> TmDescriptor:
    """Bounces between two cells forever, flipping the symbol under the head."""
    flip = {"0": "1", "1": "0", "_": "1"}
    trans = {
        "left": {s: ("right", flip[s], "R") for s in ("0", "1", "_")},
        "right": {s: ("left", flip[s], "L") for s in ("0", "1", "_")},
    }
    return TmDescriptor(("left", "right", "halt"), ("0", "1", "_"), "_", "left",
                        frozenset({"halt"}), trans)
