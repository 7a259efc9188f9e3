"""Instances, workload signatures, measured warrant and compatibility scores.

A scenario bundles the three extractors that everything else is judged
against:

* ``signature(x)``: the structural features an instance *implies*,
* ``warrant(x)``: the subset of those features the evidence supports,
* ``compat(y, s)``: whether implementation ``y`` realizes (+1), ignores (0)
  or contradicts (-1) feature ``s``.

Extractors are rule tables rather than code so a scenario is total, finite
and serializable.  Rules are tried in order and the first match wins; an
instance that matches no rule gets the empty feature set.
"""

from __future__ import annotations

import hashlib
import itertools
import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Iterator, Mapping

from .errors import InputError

PATTERN_KINDS = ("equals", "padded", "default")


@dataclass(frozen=True)
class Alphabet:
    symbols: tuple[str, ...]
    pad: str

    def __post_init__(self):
        if not self.symbols:
            raise InputError("alphabet must be non-empty")
        if any(len(s) != 1 for s in self.symbols):
            raise InputError(f"alphabet symbols must be single characters: {self.symbols!r}")
        if len(set(self.symbols)) != len(self.symbols):
            raise InputError(f"alphabet symbols must be distinct: {self.symbols!r}")
        if self.pad not in self.symbols:
            raise InputError(f"pad symbol {self.pad!r} is not in the alphabet")

    def __len__(self) -> int:
        return len(self.symbols)

    def check(self, x: str) -> str:
        for i, ch in enumerate(x):
            if ch not in self.symbols:
                raise InputError(f"instance {x!r} has character {ch!r} at {i} outside the alphabet")
        return x

    def strings(self, max_len: int) -> Iterator[str]:
        """All strings of length <= max_len in length-lexicographic order
        (alphabet order as configured)."""
        for n in range(max_len + 1):
            for tup in itertools.product(self.symbols, repeat=n):
                yield "".join(tup)

    def domain_size(self, max_len: int) -> int:
        k = len(self.symbols)
        return sum(k**j for j in range(max_len + 1))


def is_padded(x: str, literal: str, pad: str) -> bool:
    """True iff x = literal followed by zero or more pad symbols."""
    return x.startswith(literal) and all(ch == pad for ch in x[len(literal):])


@dataclass(frozen=True)
class Rule:
    kind: str
    features: tuple[str, ...]
    literal: str = ""

    def __post_init__(self):
        if self.kind not in PATTERN_KINDS:
            raise InputError(f"unknown rule pattern {self.kind!r}; expected one of {PATTERN_KINDS}")
        if any(not f for f in self.features):
            raise InputError("feature labels must be non-empty")
        if len(set(self.features)) != len(self.features):
            raise InputError(f"duplicate features in rule: {self.features!r}")

    def matches(self, x: str, pad: str) -> bool:
        if self.kind == "equals":
            return x == self.literal
        if self.kind == "padded":
            return is_padded(x, self.literal, pad)
        return True

    def to_json(self) -> dict:
        out: dict = {"pattern": self.kind}
        if self.kind != "default":
            out["literal"] = self.literal
        out["features"] = list(self.features)
        return out

    @classmethod
    def from_json(cls, obj: Mapping) -> "Rule":
        try:
            kind = obj["pattern"]
            features = tuple(obj["features"])
        except (KeyError, TypeError) as exc:
            raise InputError(f"malformed rule {obj!r}") from exc
        return cls(kind=kind, features=features, literal=obj.get("literal", ""))


@dataclass(frozen=True)
class WitnessKit:
    x0: str
    s0: str
    y_plus: str
    epsilon: str = ""

    def to_json(self) -> dict:
        return {"x0": self.x0, "s0": self.s0, "y_plus": self.y_plus, "epsilon": self.epsilon}


@dataclass(frozen=True)
class ScenarioConfig:
    alphabet: Alphabet
    signature_rules: tuple[Rule, ...]
    warrant_rules: tuple[Rule, ...]
    compat_table: Mapping[str, Mapping[str, int]]
    witness_kit: WitnessKit
    _hash: str = field(default="", compare=False, repr=False)

    def __post_init__(self):
        for y, row in self.compat_table.items():
            for s, val in row.items():
                if val not in (-1, 0, 1):
                    raise InputError(f"compat[{y!r}][{s!r}] = {val!r} is not in {{-1, 0, +1}}")

    @property
    def pad(self) -> str:
        return self.alphabet.pad

    # -- extractors ---------------------------------------------------------

    def _apply(self, rules: tuple[Rule, ...], x: str) -> frozenset[str]:
        for rule in rules:
            if rule.matches(x, self.pad):
                return frozenset(rule.features)
        return frozenset()

    def signature(self, x: str) -> frozenset[str]:
        return self._apply(self.signature_rules, x)

    def warrant(self, x: str) -> frozenset[str]:
        return self._apply(self.warrant_rules, x)

    def compat(self, y: str, s: str) -> int:
        return self.compat_table.get(y, {}).get(s, 0)

    def feature_universe(self) -> frozenset[str]:
        feats = {self.witness_kit.s0}
        for rule in self.signature_rules + self.warrant_rules:
            feats.update(rule.features)
        for row in self.compat_table.values():
            feats.update(row)
        return frozenset(feats)

    # -- serialization --------------------------------------------------------

    def to_json(self) -> dict:
        return {
            "alphabet": list(self.alphabet.symbols),
            "pad": self.alphabet.pad,
            "signature_rules": [r.to_json() for r in self.signature_rules],
            "warrant_rules": [r.to_json() for r in self.warrant_rules],
            "compat": {y: dict(row) for y, row in self.compat_table.items()},
            "witness_kit": self.witness_kit.to_json(),
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, ensure_ascii=False) + "\n"

    def digest(self) -> str:
        canon = json.dumps(self.to_json(), sort_keys=True, separators=(",", ":"), ensure_ascii=False)
        return hashlib.sha256(canon.encode("utf-8")).hexdigest()

    @classmethod
    def from_json(cls, obj: Mapping) -> "ScenarioConfig":
        missing = {"alphabet", "pad", "signature_rules", "warrant_rules", "compat", "witness_kit"} - set(obj)
        if missing:
            raise InputError(f"scenario is missing keys: {sorted(missing)}")
        kit = obj["witness_kit"]
        try:
            witness = WitnessKit(x0=kit["x0"], s0=kit["s0"], y_plus=kit["y_plus"],
                                 epsilon=kit.get("epsilon", ""))
        except (KeyError, TypeError) as exc:
            raise InputError(f"malformed witness_kit {kit!r}") from exc
        compat = {str(y): {str(s): int(v) for s, v in row.items()} for y, row in obj["compat"].items()}
        return cls(
            alphabet=Alphabet(tuple(obj["alphabet"]), obj["pad"]),
            signature_rules=tuple(Rule.from_json(r) for r in obj["signature_rules"]),
            warrant_rules=tuple(Rule.from_json(r) for r in obj["warrant_rules"]),
            compat_table=compat,
            witness_kit=witness,
        )

    @classmethod
    def loads(cls, text: str) -> "ScenarioConfig":
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as exc:
            raise InputError(f"scenario is not valid JSON: {exc}") from exc
        return cls.from_json(obj)

    @classmethod
    def load(cls, path: str | Path) -> "ScenarioConfig":
        return cls.loads(Path(path).read_text(encoding="utf-8"))


def default_scenario() -> ScenarioConfig:
    """Sigma = {a, b, #}; the pad family a#^n implies {dyn, sorted} but only
    `sorted` is warranted, so `dyn` is the beyond-warrant feature."""
    text = resources.files("overspec").joinpath("data/default_scenario.json").read_text(encoding="utf-8")
    return ScenarioConfig.loads(text)


# -- scores -------------------------------------------------------------------

def compatibility_score(x: str, y: str, cfg: ScenarioConfig) -> int:
    cfg.alphabet.check(x)
    return sum(cfg.compat(y, s) for s in cfg.signature(x))


def beyond_warrant_score(x: str, y: str, cfg: ScenarioConfig) -> int:
    cfg.alphabet.check(x)
    return sum(cfg.compat(y, s) for s in cfg.signature(x) - cfg.warrant(x))


# -- validation -----------------------------------------------------------------

@dataclass
class ValidationReport:
    check_bound: int
    instances_checked: int = 0
    violations: list[dict] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def add(self, check: str, detail: str, **where) -> None:
        self.violations.append({"check": check, "detail": detail, **where})

    def to_json(self) -> dict:
        return {
            "ok": self.ok,
            "check_bound": self.check_bound,
            "instances_checked": self.instances_checked,
            "violations": self.violations,
        }


def _first_failure(items: Iterable, pred):
    for item in items:
        if not pred(item):
            return item
    return None


def validate_scenario(cfg: ScenarioConfig, check_bound: int, domain_bound: int | None = None) -> ValidationReport:
    """Check the scenario and witness-kit invariants.

    The pad family ``x0 #^n`` is checked for ``n <= check_bound``; the subset
    law ``W(x) <= S(x)`` is checked exhaustively over strings of length at most
    ``domain_bound`` (default ``check_bound``).  Violations are collected in
    the report, never raised.
    """
    report = ValidationReport(check_bound=check_bound)
    kit = cfg.witness_kit
    pad = cfg.pad
    domain_bound = check_bound if domain_bound is None else domain_bound

    for x in cfg.alphabet.strings(domain_bound):
        report.instances_checked += 1
        extra = cfg.warrant(x) - cfg.signature(x)
        if extra:
            report.add("subset", f"W(x) has features outside S(x): {sorted(extra)}", instance=x)
            break

    try:
        cfg.alphabet.check(kit.x0)
    except InputError as exc:
        report.add("witness_x0", str(exc), instance=kit.x0)
        return report

    sig0, war0 = cfg.signature(kit.x0), cfg.warrant(kit.x0)
    for n in range(check_bound + 1):
        x = kit.x0 + pad * n
        sig, war = cfg.signature(x), cfg.warrant(x)
        if kit.s0 not in sig - war:
            report.add("witness_s0", f"s0={kit.s0!r} is not in S(x)\\W(x)", instance=x, n=n)
            break
        if sig != sig0 or war != war0:
            report.add("padding", "S or W changes under padding", instance=x, n=n)
            break

    if cfg.compat(kit.y_plus, kit.s0) != 1:
        report.add("witness_y_plus", f"V(y_plus, s0) = {cfg.compat(kit.y_plus, kit.s0)}, expected +1",
                   feature=kit.s0)
    bad = _first_failure(sorted(cfg.feature_universe()), lambda s: cfg.compat(kit.epsilon, s) == 0)
    if bad is not None:
        report.add("witness_epsilon", f"V(epsilon, {bad!r}) != 0", feature=bad)
    return report
