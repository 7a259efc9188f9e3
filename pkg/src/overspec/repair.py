"""Repair operators and the overspecified fixed-point construction.

A repair operator maps program indices to program indices.  It is
*conservative* when it leaves every non-overspecified program untouched.
For any such operator the gadget map

    G(e) = IF Phi(e) == e AND x = x0 #^n THEN y_plus ELSE epsilon

has a Kleene fixed point e* that the operator cannot fix: it leaves e*
unchanged, yet e* outputs y_plus on the whole pad family.

Operators are evaluated as the oracle ``PHI`` so that programs (the gadget
in particular) can call them.  The detector-backed operator runs bounded
detection on the caller's step meter.  On e* that detection re-enters e*,
which calls the operator again; the nested calls share one allowance, run
it dry, and the operator falls back to returning its argument unchanged.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable, Sequence

from . import lang
from .detector import DetectionReport, decide_overspecification
from .errors import ParseError
from .lang import Node, const, node
from .machine import Oracle, OracleContext, OracleRegistry, Status, evaluate, host_context
from .recursion import kleene_fixed_point
from .scenario import ScenarioConfig, is_padded

PHI = "PHI"
GADGET = "G"
DEFAULT_DETECTION_CAP = (2, 400)


class RepairKind(str, enum.Enum):
    SYNTACTIC = "SYNTACTIC"
    DETECTOR_BACKED = "DETECTOR_BACKED"
    HOST_CUSTOM = "HOST_CUSTOM"


@dataclass(frozen=True)
class RepairOperator:
    name: str
    kind: RepairKind
    oracle: Oracle
    conservative: bool = False
    internal_detection_cap: tuple[int, int] | None = None

    def apply(self, e: str, registry: OracleRegistry | None = None, budget: int | None = None,
              pad: str = "#") -> str:
        """Phi(e), called from host code.  ``budget`` defaults to the
        operator's internal detection budget."""
        if budget is None:
            budget = self.internal_detection_cap[1] if self.internal_detection_cap else 1
        registry = (registry or OracleRegistry()).extended(**{PHI: self.oracle})
        return self.oracle(e, host_context(budget, registry, pad))

    transform = apply


def syntactic(name: str, fn: Callable[[str], str], *, conservative: bool = False,
              kind: RepairKind = RepairKind.SYNTACTIC) -> RepairOperator:
    def oracle(e: str, ctx: OracleContext) -> str:
        return fn(e)
    return RepairOperator(name, kind, oracle, conservative=conservative)


def _rewrite(e: str, rule: Callable[[Node], Node]) -> str:
    try:
        tree = lang.parse(e)
    except ParseError:
        return e

    def go(n: Node) -> Node:
        n = rule(n)
        if not n.children:
            return n
        return Node(n.op, tuple(go(c) for c in n.children), n.literal)

    out = lang.render(go(tree))
    return e if out == lang.render(tree) else out


def identity_operator() -> RepairOperator:
    return syntactic("identity", lambda e: e, conservative=True)


def literal_rewriter(cfg: ScenarioConfig) -> RepairOperator:
    """Replaces every ``(CONST y_plus)`` with ``(CONST epsilon)``.  Not
    conservative: it also edits programs that only emit y_plus where no
    feature is unwarranted."""
    kit = cfg.witness_kit

    def rule(n: Node) -> Node:
        if n.op == "CONST" and n.literal == kit.y_plus:
            return const(kit.epsilon)
        return n
    return syntactic("literal-rewriter", lambda e: _rewrite(e, rule))


def constant_operator(cfg: ScenarioConfig) -> RepairOperator:
    """Maps every index to the constant-epsilon baseline selector."""
    target = lang.render(const(cfg.witness_kit.epsilon))
    return syntactic("constant-epsilon", lambda e: target)


def _suppress(current: str, witness: str, cfg: ScenarioConfig) -> str:
    kit = cfg.witness_kit
    if is_padded(witness, kit.x0, cfg.pad):
        guard = Node("MATCH_PAD", literal=kit.x0)
    else:
        guard = node("EQ", Node("INPUT"), const(witness))
    return lang.render(node("IF", guard, const(kit.epsilon), lang.parse(current)))


def detector_backed_operator(cfg: ScenarioConfig, cap: tuple[int, int] = DEFAULT_DETECTION_CAP) -> RepairOperator:
    """Conservative repair: detect on Sigma^{<=n}; while a witness turns up,
    guard the program to emit epsilon on the witness (on the whole pad family
    when the witness belongs to it).

    Returns the argument unchanged when detection finds nothing, and also
    whenever any internal evaluation runs out of steps.  All internal work
    shares one allowance of ``min(budget, caller's remaining steps)``.
    """
    n_cap, budget = cap

    def oracle(e: str, ctx: OracleContext) -> str:
        try:
            current = lang.canonicalize(e)
        except ParseError:
            return e
        inner = ctx.sub(budget)
        for _ in range(cfg.alphabet.domain_size(n_cap) + 1):
            rep = decide_overspecification(current, n_cap, cfg, budget, context=inner,
                                           stop_on_divergence=True)
            if rep.budget_exceeded_on:
                return e
            if rep.verdict == 0:
                return e if current == lang.canonicalize(e) else current
            current = _suppress(current, rep.witness, cfg)
        return e

    return RepairOperator("detector-backed", RepairKind.DETECTOR_BACKED, oracle,
                          conservative=True, internal_detection_cap=cap)


def builtin_repair_operators(cfg: ScenarioConfig,
                             cap: tuple[int, int] = DEFAULT_DETECTION_CAP) -> list[RepairOperator]:
    return [
        identity_operator(),
        literal_rewriter(cfg),
        constant_operator(cfg),
        detector_backed_operator(cfg, cap),
    ]


def get_operator(name: str, cfg: ScenarioConfig, cap: tuple[int, int] = DEFAULT_DETECTION_CAP) -> RepairOperator:
    for op in builtin_repair_operators(cfg, cap):
        if op.name == name:
            return op
    names = [op.name for op in builtin_repair_operators(cfg, cap)]
    raise KeyError(f"unknown repair operator {name!r}; choose from {names}")


# -- gadget and fixed point -------------------------------------------------------

def make_gadget_map(phi: RepairOperator, cfg: ScenarioConfig) -> Callable[[str], str]:
    """G(e): y_plus on the pad family if PHI(e) == e, epsilon otherwise.

    The returned function is purely syntactic; the test ``PHI(e) == e`` is
    evaluated at run time through the registered ``PHI`` oracle.
    """
    kit = cfg.witness_kit

    def gadget(e: str) -> str:
        fixed = node("EQ", Node("ORACLE", (const(e),), literal=PHI), const(e))
        on_family = node("IF", Node("MATCH_PAD", literal=kit.x0), const(kit.y_plus), const(kit.epsilon))
        return lang.render(node("IF", fixed, on_family, const(kit.epsilon)))

    return gadget


def phi_registry(phi: RepairOperator, cfg: ScenarioConfig) -> OracleRegistry:
    """Registry providing ``PHI`` and the gadget map ``G`` for ``phi``."""
    return OracleRegistry.of_functions({GADGET: make_gadget_map(phi, cfg)}).extended(**{PHI: phi.oracle})


def fixed_point_index(phi: RepairOperator, cfg: ScenarioConfig) -> str:
    return kleene_fixed_point(GADGET, phi_registry(phi, cfg))


def _branch(outcome, cfg: ScenarioConfig) -> str:
    if outcome.status is Status.DIVERGED:
        return "diverged"
    if outcome.output == cfg.witness_kit.y_plus:
        return "y_plus"
    if outcome.output == cfg.witness_kit.epsilon:
        return "epsilon"
    return "other"


@dataclass
class FixedPointReport:
    phi: str
    e_star: str
    phi_of_e_star: str
    detection: DetectionReport
    gadget_branch_taken: dict[str, str]
    spot_check_mismatches: list[str] = field(default_factory=list)

    @property
    def phi_of_e_star_equals_e_star(self) -> bool:
        return self.phi_of_e_star == self.e_star

    @property
    def fixed_point_law_holds(self) -> bool:
        return not self.spot_check_mismatches

    @property
    def overspecified_fixed_point(self) -> bool:
        return self.phi_of_e_star_equals_e_star and self.detection.verdict == 1

    def to_json(self) -> dict:
        return {
            "phi": self.phi,
            "e_star": self.e_star,
            "phi_of_e_star_equals_e_star": self.phi_of_e_star_equals_e_star,
            "phi_of_e_star": self.phi_of_e_star,
            "detection": self.detection.to_json(),
            "gadget_branch_taken": self.gadget_branch_taken,
            "fixed_point_law_holds": self.fixed_point_law_holds,
            "spot_check_mismatches": self.spot_check_mismatches,
        }


def construct_overspecified_fixed_point(phi: RepairOperator, cfg: ScenarioConfig, n_cap: int, budget: int,
                                        spot_len: int = 3) -> FixedPointReport:
    """Build e* for ``phi``'s gadget map and report what ``phi`` does to it.

    ``budget`` must comfortably exceed the operator's internal detection
    budget; otherwise evaluations of e* run dry and show up under
    ``detection.budget_exceeded_on``.
    """
    registry = phi_registry(phi, cfg)
    gadget = make_gadget_map(phi, cfg)
    e_star = kleene_fixed_point(GADGET, registry)
    phi_e = phi.apply(e_star, registry, pad=cfg.pad)
    detection = decide_overspecification(e_star, n_cap, cfg, budget, registry=registry)

    g_e = gadget(e_star)
    branches: dict[str, str] = {}
    mismatches: list[str] = []
    for x in cfg.alphabet.strings(spot_len):
        lhs = evaluate(e_star, x, budget, registry, cfg.pad)
        rhs = evaluate(g_e, x, budget, registry, cfg.pad)
        branches[x] = _branch(lhs, cfg)
        if (lhs.status, lhs.output) != (rhs.status, rhs.output):
            mismatches.append(x)
    return FixedPointReport(phi.name, e_star, phi_e, detection, branches, mismatches)


# -- audits -----------------------------------------------------------------------

@dataclass
class AuditReport:
    phi: str
    check: str
    n_cap: int
    entries: list[dict] = field(default_factory=list)

    @property
    def violations(self) -> list[str]:
        return [e["program"] for e in self.entries if e["status"] == "violation"]

    def to_json(self) -> dict:
        return {"phi": self.phi, "check": self.check, "n_cap": self.n_cap,
                "violations": self.violations, "entries": self.entries}


def check_conservative_on_domain(phi: RepairOperator, programs: Sequence[str], n_cap: int,
                                 cfg: ScenarioConfig, budget: int) -> AuditReport:
    """For every program with bounded verdict 0, Phi must return it unchanged.

    Programs whose verdict-0 scan had diverging evaluations are marked
    ``inconclusive``; overspecified programs are ``not_applicable``.
    """
    registry = phi_registry(phi, cfg)
    report = AuditReport(phi.name, "conservativeness", n_cap)
    for e in programs:
        det = decide_overspecification(e, n_cap, cfg, budget, registry=registry)
        if det.verdict == 1:
            status = "not_applicable"
            image = None
        elif det.budget_exceeded_on:
            status = "inconclusive"
            image = None
        else:
            image = phi.apply(e, registry, pad=cfg.pad)
            status = "ok" if image == e else "violation"
        report.entries.append({"program": e, "verdict": det.verdict, "phi_of_e": image, "status": status})
    return report


def check_uniform_elimination_on_domain(phi: RepairOperator, programs: Sequence[str], n_cap: int,
                                        cfg: ScenarioConfig, budget: int) -> AuditReport:
    """Phi(e) must be non-overspecified on the bounded domain for every e."""
    registry = phi_registry(phi, cfg)
    report = AuditReport(phi.name, "uniform_elimination", n_cap)
    for e in programs:
        image = phi.apply(e, registry, pad=cfg.pad)
        det = decide_overspecification(image, n_cap, cfg, budget, registry=registry)
        if det.verdict == 1:
            status = "violation"
        elif det.budget_exceeded_on:
            status = "inconclusive"
        else:
            status = "ok"
        report.entries.append({"program": e, "phi_of_e": image, "verdict_of_image": det.verdict,
                               "witness": det.witness, "status": status})
    return report
