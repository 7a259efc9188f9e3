"""Step-budgeted evaluation of pipeline programs.

Every node visit costs one step; ``SIM_TM`` additionally costs the machine
steps it simulates.  Running out of steps yields ``DIVERGED``, which is how
non-termination shows up at desk scale.

Budget contract
---------------
All evaluations started from one top-level call share a single step meter.
``EVAL`` runs the callee on the caller's remaining steps.  An oracle receives
an :class:`OracleContext`; programs it evaluates through the context draw
from the same meter, under a deadline no later than the caller's.  When an
oracle returns having used up everything the caller had left, the caller
diverges as well.  Together these keep a halted result stable under larger
budgets (budget monotonicity) and bound the total work of any call tree by
the top-level budget, however deeply oracles re-enter the evaluator.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Callable, Mapping

from . import lang, turing
from .errors import ConfigurationError, InputError, ParseError
from .lang import Node
from .scenario import is_padded

TRUE = "1"
FALSE = ""


class Status(str, enum.Enum):
    HALTED = "HALTED"
    DIVERGED = "DIVERGED"


@dataclass(frozen=True)
class EvalOutcome:
    status: Status
    output: str | None
    steps_used: int

    @property
    def halted(self) -> bool:
        return self.status is Status.HALTED

    def to_json(self) -> dict:
        return {"status": self.status.value, "output": self.output, "steps_used": self.steps_used}


class OutOfSteps(Exception):
    """Raised inside the interpreter when the active deadline is reached."""


class Meter:
    """Absolute step counter shared by nested evaluations."""

    __slots__ = ("used",)

    def __init__(self) -> None:
        self.used = 0

    def spend(self, k: int, deadline: int) -> None:
        self.used += k
        if self.used > deadline:
            self.used = deadline
            raise OutOfSteps


Oracle = Callable[[str, "OracleContext"], str]


class OracleRegistry(Mapping[str, Oracle]):
    """Immutable name -> oracle mapping.  An oracle is ``fn(arg, ctx) -> str``."""

    def __init__(self, oracles: Mapping[str, Oracle] | None = None):
        self._oracles = dict(oracles or {})

    def __getitem__(self, name: str) -> Oracle:
        return self._oracles[name]

    def __iter__(self):
        return iter(self._oracles)

    def __len__(self) -> int:
        return len(self._oracles)

    def extended(self, **more: Oracle) -> "OracleRegistry":
        return OracleRegistry({**self._oracles, **more})

    @classmethod
    def of_functions(cls, funcs: Mapping[str, Callable[[str], str]]) -> "OracleRegistry":
        """Wrap context-free text functions (syntactic oracles)."""
        return cls({name: _ignore_context(fn) for name, fn in funcs.items()})


def _ignore_context(fn: Callable[[str], str]) -> Oracle:
    def oracle(arg: str, ctx: "OracleContext") -> str:
        return fn(arg)
    oracle.__name__ = getattr(fn, "__name__", "oracle")
    return oracle


EMPTY_REGISTRY = OracleRegistry()


class OracleContext:
    """What an oracle may do: evaluate programs on the caller's meter."""

    def __init__(self, meter: Meter, deadline: int, registry: OracleRegistry, pad: str):
        self.meter = meter
        self.deadline = deadline
        self.registry = registry
        self.pad = pad

    @property
    def remaining(self) -> int:
        return self.deadline - self.meter.used

    def sub(self, allowance: int) -> "OracleContext":
        """A context whose total spending is capped at ``allowance`` steps
        (and never beyond this context's own deadline)."""
        deadline = min(self.deadline, self.meter.used + max(allowance, 0))
        return OracleContext(self.meter, deadline, self.registry, self.pad)

    def evaluate(self, program: str | Node, x: str, budget: int | None = None) -> EvalOutcome:
        """Run ``program`` on ``x`` with at most ``budget`` steps, drawn from
        this context's meter."""
        deadline = self.deadline if budget is None else min(self.deadline, self.meter.used + max(budget, 0))
        return _guarded_run(program, x, self.meter, deadline, self.registry, self.pad)


def _guarded_run(program: str | Node, x: str, meter: Meter, deadline: int,
                 registry: OracleRegistry, pad: str) -> EvalOutcome:
    start = meter.used
    try:
        tree = lang.parse(program) if isinstance(program, str) else program
    except ParseError:
        # an unparsable index denotes the nowhere-defined function
        meter.used = max(meter.used, deadline)
        return EvalOutcome(Status.DIVERGED, None, meter.used - start)
    try:
        out = _run(tree, x, meter, deadline, registry, pad)
    except OutOfSteps:
        return EvalOutcome(Status.DIVERGED, None, meter.used - start)
    return EvalOutcome(Status.HALTED, out, meter.used - start)


def evaluate(program: str | Node, x: str, budget: int, registry: OracleRegistry | None = None,
             pad: str = "#") -> EvalOutcome:
    """Evaluate ``program`` on input ``x`` with a budget of ``budget`` steps.

    Raises :class:`ParseError` for malformed program text and
    :class:`ConfigurationError` for unknown oracles; running out of steps is
    reported as ``DIVERGED``.
    """
    if budget < 1:
        raise InputError(f"budget must be >= 1, got {budget}")
    tree = lang.parse(program) if isinstance(program, str) else program
    return _guarded_run(tree, x, Meter(), budget, registry or EMPTY_REGISTRY, pad)


def host_context(budget: int, registry: OracleRegistry | None = None, pad: str = "#") -> OracleContext:
    """A fresh top-level context, for calling oracles from host code."""
    return OracleContext(Meter(), budget, registry or EMPTY_REGISTRY, pad)


# -- interpreter ----------------------------------------------------------------

_VISIT, _APPLY, _BRANCH = 0, 1, 2


def _to_int(s: str) -> int:
    return int(s) if s.isdigit() else 0


def _run(root: Node, x: str, meter: Meter, deadline: int, registry: OracleRegistry, pad: str) -> str:
    # explicit stack so that deep EVAL chains cannot exhaust the host stack
    todo: list[tuple[int, Node, str]] = [(_VISIT, root, x)]
    vals: list[str] = []
    while todo:
        kind, n, inp = todo.pop()
        op = n.op
        if kind == _VISIT:
            meter.spend(1, deadline)
            if op == "CONST":
                vals.append(n.literal)
            elif op == "INPUT":
                vals.append(inp)
            elif op == "FIRST":
                vals.append(lang.unpair(inp)[0])
            elif op == "SECOND":
                vals.append(lang.unpair(inp)[1])
            elif op == "NUM":
                vals.append(n.literal)
            elif op == "MATCH_PAD":
                vals.append(TRUE if is_padded(inp, n.literal, pad) else FALSE)
            elif op == "PAD_COUNT":
                vals.append(str(len(inp) - len(n.literal)) if is_padded(inp, n.literal, pad) else FALSE)
            elif op == "IF":
                todo.append((_BRANCH, n, inp))
                todo.append((_VISIT, n.children[0], inp))
            else:
                todo.append((_APPLY, n, inp))
                for child in reversed(n.children):
                    todo.append((_VISIT, child, inp))
        elif kind == _BRANCH:
            cond = vals.pop()
            todo.append((_VISIT, n.children[1] if cond else n.children[2], inp))
        else:
            k = len(n.children)
            args = vals[-k:]
            del vals[-k:]
            if op == "CONCAT":
                vals.append(args[0] + args[1])
            elif op == "EQ":
                vals.append(TRUE if args[0] == args[1] else FALSE)
            elif op == "SQ":
                v = _to_int(args[0])
                vals.append(str(v * v))
            elif op == "SIM_TM":
                limit = _to_int(args[2])
                try:
                    tm = turing.decode(args[0])
                    # probe one step past what we can pay for so exhaustion is detected
                    halted, steps = turing.run(tm, args[1], min(limit, deadline - meter.used + 1))
                except InputError as exc:
                    raise ConfigurationError(f"SIM_TM: {exc}") from exc
                meter.spend(steps, deadline)
                vals.append(TRUE if halted else FALSE)
            elif op == "EVAL":
                try:
                    callee = lang.parse(args[0])
                except ParseError:
                    # an unparsable index denotes the nowhere-defined function
                    meter.used = deadline
                    raise OutOfSteps from None
                todo.append((_VISIT, callee, args[1]))
            elif op == "SPECIALIZE":
                vals.append(specialize_text(args[0], args[1]))
            elif op == "ORACLE":
                vals.append(_call_oracle(n.literal, args[0], meter, deadline, registry, pad))
            else:  # pragma: no cover - parser rejects anything else
                raise AssertionError(f"unhandled op {op}")
    return vals.pop()


def _call_oracle(name: str, arg: str, meter: Meter, deadline: int, registry: OracleRegistry,
                 pad: str) -> str:
    try:
        fn = registry[name]
    except KeyError:
        raise ConfigurationError(f"unknown oracle {name!r}; registered: {sorted(registry)}") from None
    before = meter.used
    result = fn(arg, OracleContext(meter, deadline, registry, pad))
    if meter.used >= deadline and meter.used > before:
        raise OutOfSteps
    if not isinstance(result, str):
        raise ConfigurationError(f"oracle {name!r} returned {type(result).__name__}, expected str")
    return result


def specialize_text(p: str, c: str) -> str:
    """Text of a program that runs ``p`` on ``pair(c, x)`` for input ``x``.

    ``p`` is canonicalized when it parses; otherwise it is embedded verbatim
    (and the specialization then diverges everywhere, as ``p`` does).
    """
    try:
        p = lang.canonicalize(p)
    except ParseError:
        pass
    tree = lang.node("EVAL", lang.const(p),
                     lang.node("CONCAT", lang.const(f"{len(c)}:{c}"), Node("INPUT")))
    return lang.render(tree)
