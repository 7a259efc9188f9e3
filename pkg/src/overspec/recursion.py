"""Program-level constructions: s-m-n specialization, the self-application
operator, Kleene fixed points and an effective enumeration of programs.

Indices are canonical program texts, so every construction here is a plain
text-to-text function.
"""

from __future__ import annotations

import itertools
from functools import lru_cache
from typing import Iterator

from . import lang
from .errors import ConfigurationError
from .lang import ARITY, ATOMS, LITERAL_OPS, SELF_APPLY_TEMPLATE
from .machine import OracleRegistry, specialize_text


def smn_specialize(p: str, c: str) -> str:
    """Bake ``c`` into the first component of ``p``'s paired input.

    For every ``x`` the result behaves like ``p`` run on ``pair(c, x)``.
    Raises :class:`~overspec.errors.ParseError` if ``p`` does not parse.
    """
    lang.parse(p)
    return specialize_text(p, c)


def self_application_operator(n: str) -> str:
    """q(n): a program that behaves like the program *output* by ``n`` on
    input ``n``, i.e. ``eval(q(n), x) ~ eval(eval(n, n), x)``."""
    lang.parse(n)
    return specialize_text(SELF_APPLY_TEMPLATE, n)


def diagonal_program(g_oracle_name: str) -> str:
    """Index p with ``eval(p, n) = G(q(n))``."""
    return lang.canonicalize(f"(ORACLE {g_oracle_name} (SELFAPPLY INPUT))")


def kleene_fixed_point(g_oracle_name: str, registry: OracleRegistry) -> str:
    """Return e* = q(p) so that ``eval(e*, x) ~ eval(G(e*), x)`` for all x,
    where G is the registered oracle ``g_oracle_name``."""
    if g_oracle_name not in registry:
        raise ConfigurationError(f"oracle {g_oracle_name!r} is not registered")
    return self_application_operator(diagonal_program(g_oracle_name))


# -- enumeration ------------------------------------------------------------------

DEFAULT_LITERAL_ALPHABET = "#01DYabny"
_MIN_LEN = 5  # INPUT, FIRST


class ProgramEnumerator:
    """Length-lexicographic enumeration of canonical program texts.

    Literals and numerals range over ``literal_alphabet`` (numerals use the
    digits it contains) and ``ORACLE`` nodes over ``oracle_names``; within
    those limits every canonical program eventually appears.
    """

    def __init__(self, literal_alphabet: str = DEFAULT_LITERAL_ALPHABET, oracle_names: tuple[str, ...] = ()):
        if any(ch in "()\\ \t\r\n" for ch in literal_alphabet):
            raise ValueError("literal alphabet may not contain parens, backslash or whitespace")
        self.literal_alphabet = "".join(sorted(set(literal_alphabet)))
        self.digits = "".join(ch for ch in self.literal_alphabet if ch.isdigit())
        self.oracle_names = tuple(sorted(oracle_names))
        self._of_length = lru_cache(maxsize=None)(self._texts_of_length)

    def _literals(self, n: int) -> list[str]:
        if n < 0:
            return []
        return ["".join(t) for t in itertools.product(self.literal_alphabet, repeat=n)]

    def _numerals(self, n: int) -> list[str]:
        if n <= 0:
            return []
        if n == 1:
            return list(self.digits)
        heads = [d for d in self.digits if d != "0"]
        return [h + "".join(t) for h in heads for t in itertools.product(self.digits, repeat=n - 1)]

    def _texts_of_length(self, L: int) -> tuple[str, ...]:
        if L < _MIN_LEN:
            return ()
        out: list[str] = [a for a in ATOMS if len(a) == L]
        for op in LITERAL_OPS:
            out += [f"({op} {s})" for s in self._literals(L - len(op) - 3)]
        out += [f"(NUM {k})" for k in self._numerals(L - 6)]
        for name in self.oracle_names:
            out += [f"(ORACLE {name} {t})" for t in self._of_length(L - len(name) - 10)]
        for op, k in ARITY.items():
            # "(" + op + k spaces + children + ")"
            room = L - len(op) - 2 - k
            for sizes in _compositions(room, k, _MIN_LEN):
                parts = [self._of_length(s) for s in sizes]
                out += [f"({op} " + " ".join(combo) + ")" for combo in itertools.product(*parts)]
        return tuple(sorted(out))

    def texts_of_length(self, L: int) -> tuple[str, ...]:
        return self._of_length(L)

    def __iter__(self) -> Iterator[str]:
        for L in itertools.count(_MIN_LEN):
            yield from self.texts_of_length(L)

    def up_to_length(self, L: int) -> list[str]:
        out: list[str] = []
        for n in range(_MIN_LEN, L + 1):
            out.extend(self.texts_of_length(n))
        return out


def _compositions(total: int, parts: int, minimum: int) -> Iterator[tuple[int, ...]]:
    if parts == 0:
        if total == 0:
            yield ()
        return
    for first in range(minimum, total - minimum * (parts - 1) + 1):
        for rest in _compositions(total - first, parts - 1, minimum):
            yield (first,) + rest


_DEFAULT_ENUMERATOR = ProgramEnumerator()


def enumerate_programs(stage: int, enumerator: ProgramEnumerator | None = None) -> list[str]:
    """All canonical programs of length at most ``5 + stage`` in length-lex
    order.  Each stage's list is a prefix of the next one's."""
    if stage < 0:
        raise ValueError(f"stage must be >= 0, got {stage}")
    return (enumerator or _DEFAULT_ENUMERATOR).up_to_length(_MIN_LEN + stage)
