"""Acceptance criteria 1-13.  Each test records one PASS/FAIL line, printed
in the terminal summary of the pytest run."""

import itertools
import json
import math
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest
from scipy.special import logit

from overspec import lang
from overspec.aggregation import (
    EvaluatorPopulation, PairCounts, check_deterministic_inheritance, fit_btl, lambda_eff,
    majority_counterexample, majority_pairwise, pairwise_win_probability, population_scores_asymmetric,
    sample_delta_outcomes,
)
from overspec.detector import (
    build_halting_gadget, cross_check, decide_overspecification, semidecide_overspecified,
)
from overspec.fixtures import TM_FIXTURES, fixture_programs, fixture_tm
from overspec.machine import OracleRegistry, evaluate
from overspec.recursion import kleene_fixed_point
from overspec.repair import (
    builtin_repair_operators, check_uniform_elimination_on_domain, construct_overspecified_fixed_point,
    fixed_point_index, get_operator, literal_rewriter, make_gadget_map,
)
from overspec.scenario import beyond_warrant_score, is_padded

ROOT = Path(__file__).resolve().parents[1]
DATA = ROOT / "demos" / "data"
SIGMA4 = ["".join(p) for n in range(5) for p in itertools.product("ab#", repeat=n)]


def test_criterion_01_nontriviality(cfg, criterion):
    pos = decide_overspecification("(CONST YDyn)", 3, cfg, 100)
    neg = decide_overspecification("(CONST )", 3, cfg, 100)
    ok = (pos.verdict, pos.witness, neg.verdict, neg.witness) == (1, cfg.witness_kit.x0, 0, None)
    criterion(1, ok, f"const y+ -> ({pos.verdict}, {pos.witness!r}); const eps -> ({neg.verdict}, {neg.witness!r})")


def test_criterion_02_halting_reduction(cfg, criterion):
    bad = []
    halting = [n for n, (_, _, t) in TM_FIXTURES.items() if t is not None]
    looping = [n for n, (_, _, t) in TM_FIXTURES.items() if t is None]
    for name in halting + looping:
        _, w, t = TM_FIXTURES[name]
        gadget = build_halting_gadget(fixture_tm(name), w, cfg)
        for n in range(5):
            rep = decide_overspecification(gadget, len(cfg.witness_kit.x0) + n, cfg, 10_000)
            want = int(t is not None and any(k * k >= t for k in range(n + 1)))
            if rep.verdict != want or rep.budget_exceeded_on:
                bad.append((name, n, rep.verdict, want))
    ok = not bad and {1, 4, 9} <= {TM_FIXTURES[n][2] for n in halting} and len(looping) >= 2
    criterion(2, ok, f"{len(halting)} halting + {len(looping)} looping machines, pad caps 0..4; mismatches {bad}")


def test_criterion_03_cost_law(cfg, criterion):
    got = {}
    for name, prog in fixture_programs(cfg).items():
        if name.endswith("_neg"):
            got[name] = [decide_overspecification(prog, n, cfg, 10_000).instances_scanned for n in range(5)]
    ok = all(v == [1, 4, 13, 40, 121] for v in got.values())
    criterion(3, ok, f"instances_scanned on {len(got)} verdict-0 programs: {sorted(set(map(tuple, got.values())))}")


@pytest.mark.slow
def test_criterion_04_semidecider(cfg, criterion):
    progs = fixture_programs(cfg)
    problems = []
    for name, prog in progs.items():
        if name.endswith("_pos"):
            out = semidecide_overspecified(prog, cfg, 10**5)
            valid = out.accepted and beyond_warrant_score(out.witness, evaluate(prog, out.witness, 10**5).output, cfg) > 0
            if not valid:
                problems.append(name)
    for name in ("const_eps_neg", "halting_runaway_neg"):
        out = semidecide_overspecified(progs[name], cfg, 10**6)
        if out.accepted:
            problems.append(name)
    for name, prog in progs.items():
        rep = cross_check(prog, 4, cfg, 10_000, 10**4)
        if not rep.consistent:
            problems.append(f"cross_check:{name}")
    criterion(4, not problems, f"positives within 1e5 stages, two negatives exhausted 1e6 stages, "
                               f"cross_check on {len(progs)} fixtures; problems {problems}")


def test_criterion_05_recursion_theorem(cfg, criterion):
    ident = get_operator("identity", cfg)
    gs = {
        "constant": lambda e: "(CONST )",
        "identity": lambda e: e,
        "length-tag": lambda e: f"(CONCAT (CONST {len(e)}:) INPUT)",
        "pad-guard": lambda e: lang.render(lang.node("IF", lang.Node("MATCH_PAD", literal="a"),
                                                     lang.const("YDyn"), lang.node("EVAL", lang.const(e), lang.Node("INPUT")))),
        "literal-rewriter": lambda e: literal_rewriter(cfg).apply(e),
        "gadget(identity)": make_gadget_map(ident, cfg),
    }
    bad = []
    for name, g in gs.items():
        reg = OracleRegistry.of_functions({"G": g}).extended(PHI=ident.oracle)
        e = kleene_fixed_point("G", reg)
        ge = g(e)
        for x in SIGMA4:
            a, b = evaluate(e, x, 5_000, reg), evaluate(ge, x, 5_000, reg)
            if (a.status, a.output) != (b.status, b.output):
                bad.append((name, x))
    criterion(5, not bad, f"{len(gs)} oracles x {len(SIGMA4)} inputs; disagreements {bad[:5]}")


def test_criterion_06_fixed_point_theorem(cfg, criterion):
    lines, ok = [], True
    for name in ("identity", "detector-backed"):
        rep = construct_overspecified_fixed_point(get_operator(name, cfg), cfg, 3, 2_000)
        w = rep.detection.witness
        good = (rep.phi_of_e_star_equals_e_star and rep.detection.verdict == 1
                and w is not None and is_padded(w, cfg.witness_kit.x0, cfg.pad))
        ok &= good
        lines.append(f"{name}: Phi(e*)=e* {rep.phi_of_e_star_equals_e_star}, verdict {rep.detection.verdict}, witness {w!r}")
    rep = construct_overspecified_fixed_point(get_operator("constant-epsilon", cfg), cfg, 3, 2_000)
    collapse = (not rep.phi_of_e_star_equals_e_star and rep.detection.verdict == 0
                and set(rep.gadget_branch_taken.values()) == {"epsilon"})
    ok &= collapse
    lines.append(f"constant-epsilon: eps-collapse {collapse}")
    criterion(6, ok, "; ".join(lines))


def test_criterion_07_corollary(cfg, criterion):
    flagged = {}
    for phi in builtin_repair_operators(cfg):
        if phi.conservative:
            e = fixed_point_index(phi, cfg)
            rep = check_uniform_elimination_on_domain(phi, [e], 3, cfg, 2_000)
            flagged[phi.name] = e in rep.violations
    criterion(7, len(flagged) >= 2 and all(flagged.values()), f"e* flagged: {flagged}")


def test_criterion_08_inheritance_probability(criterion):
    grid = [np.array(a, dtype=float) for a in itertools.product([0.0, 0.1, 0.5, 1.0, 3.0], repeat=3) if max(a) >= 0.1]
    above, increasing = True, True
    for alpha in grid:
        p = [pairwise_win_probability(dv, EvaluatorPopulation(alpha, None)) for dv in (1, 2, 3)]
        above &= min(p) > 0.5
        increasing &= p[0] < p[1] < p[2]
    s1 = pairwise_win_probability(1, EvaluatorPopulation(np.array([1.0, 1.0]), None))
    mixed = pairwise_win_probability(1, EvaluatorPopulation(np.array([0.0, 2.0]), None))
    analytic = abs(s1 - 1 / (1 + math.exp(-1))) <= 1e-9 and abs(mixed - (0.5 + 1 / (1 + math.exp(-2))) / 2) <= 1e-9
    ok = above and increasing and analytic and round(s1, 6) == 0.731059
    criterion(8, ok, f"{len(grid)} alpha vectors x dv in 1..3: >0.5 {above}, increasing {increasing}; "
                     f"sigma(1)={s1:.9f}, mixed={mixed:.9f} (closed form (1/2+sigma(2))/2)")


@pytest.mark.slow
def test_criterion_09_learned_scores(criterion):
    pop = EvaluatorPopulation(np.array([0.5, 0.0, 1.0]), None)
    positive = sum(fit_btl(sample_delta_outcomes(1, pop, 10**5, seed)).difference("y", "y'") > 0
                   for seed in range(100))
    criterion(9, positive >= 99, f"alpha-bar={pop.alpha.mean():.3f}, dv=1, m=1e5: positive in {positive}/100 seeds")


def test_criterion_10_btl_closed_form(criterion):
    worst = 0.0
    for a, b in [(60, 40), (731, 269), (1, 1), (5, 95), (33333, 66667)]:
        fit = fit_btl(PairCounts.from_pairs({("a", "b"): a, ("b", "a"): b}))
        worst = max(worst, abs(fit.difference("a", "b") - logit(a / (a + b))))
    sym = fit_btl(PairCounts.from_pairs({(x, y): 11 for x in "pqr" for y in "pqr" if x != y}))
    zero = max(abs(v) for v in sym.scores.values())
    criterion(10, worst <= 1e-9 and zero <= 1e-9, f"max |dscore - logit(rate)| {worst:.2e}; symmetric max |score| {zero:.2e}")


def test_criterion_11_asymmetry(criterion):
    rng = np.random.default_rng(2024)
    worst, bounds_ok, configs = 0.0, True, 0
    for _ in range(60):
        k = int(rng.integers(1, 7))
        alpha = rng.uniform(0.05, 4.0, size=k)
        lam = rng.uniform(1.0, 6.0, size=k)
        pop = EvaluatorPopulation(alpha, lam)
        leff = lambda_eff(pop)
        bounds_ok &= lam.min() <= leff <= lam.max()
        for delta in (1, 2, 5):
            res = population_scores_asymmetric(delta, pop)
            r = res.scores
            from_scores = (r["y0"] - r["y-"]) / (r["y+"] - r["y0"])
            worst = max(worst, abs(res.ratio - leff), abs(from_scores - leff))
            configs += 1
    criterion(11, worst <= 1e-12 and bounds_ok,
              f"{configs} (alpha, lambda, delta) configurations: max |ratio - lambda_eff| {worst:.1e}; bounds hold {bounds_ok}")


def test_criterion_12_majority(cfg, criterion):
    cands, pair = ["YDyn", "YSorted", ""], ("YDyn", "YSorted")
    r3 = check_deterministic_inheritance(cfg, "a#", cands, pair, 3, [0, 1], 10**4, seed=12)
    r5 = check_deterministic_inheritance(cfg, "a#", cands, pair, 5, [0, 2, 4], 10**4, seed=13, adversarial=True)
    profile, coalition, cpair = majority_counterexample()
    counter = (len(coalition) == profile.k // 2
               and all(profile.rankings[i].index(cpair[0]) < profile.rankings[i].index(cpair[1]) for i in coalition)
               and not majority_pairwise(profile).prefers(*cpair))
    ok = r3.violations == 0 and r5.violations == 0 and counter
    criterion(12, ok, f"violations k=3 |C|=2: {r3.violations}/1e4, k=5 |C|=3 adversarial: {r5.violations}/1e4; "
                      f"stored |C|={len(coalition)} counterexample valid {counter}")


CLI_COMMANDS = [
    ["validate-scenario"],
    ["detect", "--program", DATA / "const_yplus.pl", "--max-len", "3"],
    ["semidecide", "--program", DATA / "programs" / "halting_chain4_pos.pl", "--stages", "1000"],
    ["halting-gadget", "--tm", "chain4"],
    ["fixed-point", "--phi", "detector-backed"],
    ["audit-phi", "--phi", "detector-backed", "--programs", DATA / "programs"],
    ["btl-experiment", "--population", DATA / "population_mixed.json", "--samples", "100,1000", "--repeats", "3", "--seed", "7"],
    ["asymmetry", "--population", DATA / "population_mixed.json", "--delta", "1"],
    ["majority", "--profile", DATA / "profile_condorcet.json"],
    ["demo"],
]


def _run_cli(argv, out_dir):
    cmd = [sys.executable, "-m", "overspec", *map(str, argv), "--out", str(out_dir)]
    done = subprocess.run(cmd, capture_output=True, text=True, timeout=300)
    return done.returncode


@pytest.mark.slow
def test_criterion_13_determinism(tmp_path, criterion):
    differing = []
    for i, argv in enumerate(CLI_COMMANDS):
        codes = [_run_cli(argv, tmp_path / f"{i}-{rep}") for rep in (0, 1)]
        a, b = (sorted(p for p in (tmp_path / f"{i}-{rep}").iterdir() if p.name != "manifest.json")
                for rep in (0, 1))
        same = codes == [0, 0] and [p.name for p in a] == [p.name for p in b] and a and \
            all(x.read_bytes() == y.read_bytes() for x, y in zip(a, b))
        m0, m1 = (json.loads((tmp_path / f"{i}-{rep}" / "manifest.json").read_text()) for rep in (0, 1))
        for m in (m0, m1):
            m.pop("wall_clock_seconds")
            m["parameters"].pop("out")
        if not same or m0 != m1:
            differing.append(argv[0])
    criterion(13, not differing, f"{len(CLI_COMMANDS)} commands run twice in fresh processes; differing payloads {differing}")
