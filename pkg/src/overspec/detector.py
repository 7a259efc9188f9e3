"""Bounded overspecification detection, the dovetailing semi-decider and the
halting-reduction gadget.

A pipeline ``f`` is overspecified when some instance ``x`` gets an
implementation with positive beyond-warrant score, ``v_bw(x, f(x)) > 0``.
On all of Sigma* that question is undecidable; here it is answered exactly on
the finite domain Sigma^{<=n} and semi-decided by dovetailing.
"""

from __future__ import annotations

import enum
import itertools
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Iterator

from . import lang
from .errors import InputError
from .lang import Node, const, node
from .machine import EvalOutcome, OracleContext, OracleRegistry, evaluate
from .scenario import ScenarioConfig, beyond_warrant_score
from .turing import TmDescriptor


@dataclass
class DetectionReport:
    verdict: int
    witness: str | None
    instances_scanned: int
    n_cap: int
    domain_size: int
    eval_steps_total: int = 0
    budget_exceeded_on: list[str] = field(default_factory=list)
    rows: list[dict] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "verdict": self.verdict,
            "witness": self.witness,
            "instances_scanned": self.instances_scanned,
            "n_cap": self.n_cap,
            "domain_size": self.domain_size,
            "eval_steps_total": self.eval_steps_total,
            "budget_exceeded_on": list(self.budget_exceeded_on),
        }


def _scan(tree: Node, xs: list[str], cfg: ScenarioConfig, run, record: bool,
          stop_on_divergence: bool) -> tuple[list[dict], str | None, list[str], int, bool]:
    """Scan ``xs`` in order until the first witness.

    Returns (rows, witness, diverged, steps, stopped_early).
    """
    rows: list[dict] = []
    diverged: list[str] = []
    steps = 0
    scanned = 0
    for x in xs:
        out: EvalOutcome = run(tree, x)
        scanned += 1
        steps += out.steps_used
        if not out.halted:
            diverged.append(x)
            if record:
                rows.append({"instance": x, "output": None, "v_bw": None, "steps": out.steps_used})
            if stop_on_divergence:
                return rows, None, diverged, steps, True
            continue
        score = beyond_warrant_score(x, out.output, cfg)
        if record:
            rows.append({"instance": x, "output": out.output, "v_bw": score, "steps": out.steps_used})
        if score > 0:
            return rows, x, diverged, steps, scanned < len(xs)
    return rows, None, diverged, steps, False


def _chunk_worker(args) -> tuple[int, list[dict], str | None, list[str], int, int]:
    text, xs, cfg, budget = args
    tree = lang.parse(text)
    run = lambda t, x: evaluate(t, x, budget, pad=cfg.pad)  # noqa: E731
    rows, witness, diverged, steps, _ = _scan(tree, xs, cfg, run, record=True, stop_on_divergence=False)
    return len(rows), rows, witness, diverged, steps, len(xs)


def decide_overspecification(f: str, n: int, cfg: ScenarioConfig, budget: int, *,
                             registry: OracleRegistry | None = None,
                             context: OracleContext | None = None,
                             stop_on_divergence: bool = False,
                             record: bool = False,
                             jobs: int = 1) -> DetectionReport:
    """Exhaustively decide overspecification of ``f`` on Sigma^{<=n}.

    Instances are scanned in length-lex order; the first witness found is
    returned.  Evaluations that exhaust ``budget`` are listed in
    ``budget_exceeded_on`` and do not count as witnesses.

    With ``context`` every evaluation draws from that oracle context's meter
    (this is how repair operators run detection from inside an evaluation).
    ``jobs > 1`` splits the domain across processes; only oracle-free runs
    are parallelized and the reported witness is still the length-lex first.
    """
    if n < 0:
        raise ValueError(f"length cap must be >= 0, got {n}")
    if budget < 1:
        raise ValueError(f"budget must be >= 1, got {budget}")
    tree = lang.parse(f)
    xs = list(cfg.alphabet.strings(n))
    report = DetectionReport(verdict=0, witness=None, instances_scanned=0, n_cap=n, domain_size=len(xs))

    if jobs > 1 and context is None and not registry and not stop_on_divergence:
        return _parallel_decide(lang.render(tree), xs, cfg, budget, record, jobs, report)

    if context is not None:
        run = lambda t, x: context.evaluate(t, x, budget)  # noqa: E731
    else:
        run = lambda t, x: evaluate(t, x, budget, registry, cfg.pad)  # noqa: E731
    rows, witness, diverged, steps, _ = _scan(tree, xs, cfg, run, record, stop_on_divergence)
    report.instances_scanned = _count_scanned(xs, witness, diverged, stop_on_divergence)
    report.witness = witness
    report.verdict = int(witness is not None)
    report.budget_exceeded_on = diverged
    report.eval_steps_total = steps
    report.rows = rows
    return report


def _count_scanned(xs: list[str], witness: str | None, diverged: list[str], stopped: bool) -> int:
    if witness is not None:
        return xs.index(witness) + 1
    if stopped and diverged:
        return xs.index(diverged[-1]) + 1
    return len(xs)


def _parallel_decide(text: str, xs: list[str], cfg: ScenarioConfig, budget: int, record: bool,
                     jobs: int, report: DetectionReport) -> DetectionReport:
    size = max(1, -(-len(xs) // jobs))
    chunks = [(text, xs[i:i + size], cfg, budget) for i in range(0, len(xs), size)]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        results = list(pool.map(_chunk_worker, chunks))
    # reduce by domain order, not by arrival
    for _, rows, witness, diverged, steps, _ in results:
        report.eval_steps_total += steps
        report.budget_exceeded_on.extend(diverged)
        report.instances_scanned += len(rows)
        if record:
            report.rows.extend(rows)
        if witness is not None:
            report.witness, report.verdict = witness, 1
            break
    return report


# -- halting reduction ---------------------------------------------------------------

def build_halting_gadget(tm: TmDescriptor, w: str, cfg: ScenarioConfig) -> str:
    """Program computing ``y_plus`` on ``x0 #^n`` when ``tm`` halts on ``w``
    within ``n^2`` steps, and ``epsilon`` everywhere else.

    The result uses no EVAL or ORACLE node, so it halts on every input.
    """
    if not isinstance(tm, TmDescriptor):
        tm = TmDescriptor.from_json(tm)
    for ch in w:
        if ch not in tm.tape_alphabet:
            raise InputError(f"input symbol {ch!r} is not in the tape alphabet")
    kit = cfg.witness_kit
    clock = node("SQ", Node("PAD_COUNT", literal=kit.x0))
    halted = node("SIM_TM", const(tm.encode()), const(w), clock)
    tree = node("IF", Node("MATCH_PAD", literal=kit.x0),
                node("IF", halted, const(kit.y_plus), const(kit.epsilon)),
                const(kit.epsilon))
    return lang.render(tree)


# -- semi-decision -------------------------------------------------------------------

class SemiStatus(str, enum.Enum):
    ACCEPTED = "ACCEPTED"
    EXHAUSTED = "EXHAUSTED"


@dataclass
class SemiDecisionOutcome:
    status: SemiStatus
    witness: str | None
    stage_reached: int

    @property
    def accepted(self) -> bool:
        return self.status is SemiStatus.ACCEPTED

    def to_json(self) -> dict:
        return {"status": self.status.value, "witness": self.witness, "stage_reached": self.stage_reached}


def _instances(cfg: ScenarioConfig) -> Iterator[str]:
    for n in itertools.count():
        for tup in itertools.product(cfg.alphabet.symbols, repeat=n):
            yield "".join(tup)


def semidecide_literal(f: str, cfg: ScenarioConfig, stage_limit: int,
                       registry: OracleRegistry | None = None) -> SemiDecisionOutcome:
    """Dovetailing exactly as stated: at stage t run f on x_0..x_t for t
    steps each.  Quadratic in ``stage_limit``; see
    :func:`semidecide_overspecified` for the equivalent fast schedule."""
    tree = lang.parse(f)
    xs: list[str] = []
    gen = _instances(cfg)
    for t in range(stage_limit + 1):
        while len(xs) <= t:
            xs.append(next(gen))
        if t == 0:
            continue  # zero steps: nothing can halt
        for x in xs[:t + 1]:
            out = evaluate(tree, x, t, registry, cfg.pad)
            if out.halted and beyond_warrant_score(x, out.output, cfg) > 0:
                return SemiDecisionOutcome(SemiStatus.ACCEPTED, x, t)
    return SemiDecisionOutcome(SemiStatus.EXHAUSTED, None, stage_limit)


def _min_halting_budget(tree: Node, x: str, cap: int, cfg: ScenarioConfig,
                        registry: OracleRegistry | None) -> EvalOutcome | None:
    """Smallest-budget halting run of ``tree`` on ``x`` with budget <= cap.

    Halting is upward closed in the budget, so the threshold is found by
    bisection.  Without oracles a halted run uses exactly its threshold.
    """
    if cap < 1:
        return None
    top = evaluate(tree, x, cap, registry, cfg.pad)
    if not top.halted:
        return None
    if not registry:
        return top
    lo, hi, best = 1, cap, top
    while lo < hi:
        mid = (lo + hi) // 2
        out = evaluate(tree, x, mid, registry, cfg.pad)
        if out.halted:
            hi, best = mid, out
        else:
            lo = mid + 1
    return EvalOutcome(best.status, best.output, lo)


def semidecide_overspecified(f: str, cfg: ScenarioConfig, stage_limit: int,
                             registry: OracleRegistry | None = None) -> SemiDecisionOutcome:
    """Dovetailing semi-decision of overspecification, stopped after
    ``stage_limit`` stages.

    Produces the same outcome as :func:`semidecide_literal` without
    re-running every instance at every stage: by budget monotonicity x_j first
    succeeds at stage ``max(j, m_j)``, where ``m_j`` is its minimal halting
    budget, and keeps the same output afterwards.
    """
    if stage_limit < 0:
        raise ValueError(f"stage_limit must be >= 0, got {stage_limit}")
    tree = lang.parse(f)
    best_stage, best_x = stage_limit + 1, None
    for j, x in enumerate(_instances(cfg)):
        if j >= best_stage or j > stage_limit:
            break
        out = _min_halting_budget(tree, x, best_stage - 1, cfg, registry)
        if out is None or beyond_warrant_score(x, out.output, cfg) <= 0:
            continue
        stage = max(j, out.steps_used)
        if stage < best_stage:
            best_stage, best_x = stage, x
    if best_x is None:
        return SemiDecisionOutcome(SemiStatus.EXHAUSTED, None, stage_limit)
    return SemiDecisionOutcome(SemiStatus.ACCEPTED, best_x, best_stage)


# -- cross-check ---------------------------------------------------------------------

@dataclass
class CrossCheckReport:
    detection: DetectionReport
    semi: SemiDecisionOutcome
    violations: list[str] = field(default_factory=list)
    inconclusive: list[str] = field(default_factory=list)

    @property
    def consistent(self) -> bool:
        return not self.violations

    def to_json(self) -> dict:
        return {
            "consistent": self.consistent,
            "detection": self.detection.to_json(),
            "semidecision": self.semi.to_json(),
            "violations": self.violations,
            "inconclusive": self.inconclusive,
        }


def cross_check(f: str, n: int, cfg: ScenarioConfig, budget: int, stage_limit: int,
                registry: OracleRegistry | None = None) -> CrossCheckReport:
    """Check the bounded detector and the semi-decider against each other."""
    det = decide_overspecification(f, n, cfg, budget, registry=registry)
    semi = semidecide_overspecified(f, cfg, stage_limit, registry)
    report = CrossCheckReport(det, semi)
    if det.verdict == 1 and not semi.accepted:
        index = list(cfg.alphabet.strings(n)).index(det.witness)
        out = evaluate(f, det.witness, budget, registry, cfg.pad)
        needed = max(index, out.steps_used)
        if stage_limit >= needed:
            report.violations.append(
                f"detector found witness {det.witness!r} but the semi-decider did not accept "
                f"within {stage_limit} stages (>= {needed} needed)")
        else:
            report.inconclusive.append(f"stage_limit {stage_limit} < {needed} stages needed for {det.witness!r}")
    if semi.accepted and len(semi.witness) <= n and det.verdict == 0:
        if semi.witness in det.budget_exceeded_on:
            report.inconclusive.append(f"detector budget {budget} too small for {semi.witness!r}")
        else:
            report.violations.append(
                f"semi-decider accepted {semi.witness!r} (length <= {n}) but the detector returned 0")
    return report
