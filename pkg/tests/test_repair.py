import itertools

import pytest

from overspec.detector import decide_overspecification
from overspec.fixtures import fixture_programs
from overspec.machine import Status, evaluate
from overspec.repair import (
    RepairKind, builtin_repair_operators, check_conservative_on_domain, check_uniform_elimination_on_domain,
    constant_operator, construct_overspecified_fixed_point, detector_backed_operator, fixed_point_index,
    get_operator, identity_operator, literal_rewriter, make_gadget_map, phi_registry, syntactic,
)

SIGMA4 = ["".join(p) for n in range(5) for p in itertools.product("ab#", repeat=n)]


def _run(prog, x, phi, cfg, budget=3_000):
    return evaluate(prog, x, budget, phi_registry(phi, cfg), cfg.pad)


def test_gadget_examples(cfg):
    ident = identity_operator()
    g = make_gadget_map(ident, cfg)
    assert _run(g("(CONST )"), "a#", ident, cfg).output == "YDyn"
    assert _run(g("(CONST )"), "b", ident, cfg).output == ""
    const = constant_operator(cfg)
    g2 = make_gadget_map(const, cfg)
    assert {_run(g2("(CONST b)"), x, const, cfg).output for x in SIGMA4} == {""}


@pytest.mark.parametrize("phi_name", ["identity", "literal-rewriter", "constant-epsilon"])
@pytest.mark.parametrize("e", ["(CONST )", "(CONST YDyn)", "INPUT"])
def test_gadget_semantics_exhaustive(cfg, phi_name, e):
    phi = get_operator(phi_name, cfg)
    g = make_gadget_map(phi, cfg)(e)
    fixed = phi.apply(e) == e
    for x in SIGMA4:
        padded = x.startswith("a") and set(x[1:]) <= {"#"}
        assert _run(g, x, phi, cfg).output == ("YDyn" if fixed and padded else "")


def test_literal_rewriter(cfg):
    lr = literal_rewriter(cfg)
    assert lr.apply("(IF INPUT (CONST YDyn) (CONST YDyn))") == "(IF INPUT (CONST ) (CONST ))"
    assert lr.apply("(CONST b)") == "(CONST b)"
    assert lr.apply("not a program") == "not a program"
    assert not lr.conservative


def test_detector_backed_examples(cfg):
    phi = detector_backed_operator(cfg)
    assert phi.kind is RepairKind.DETECTOR_BACKED
    fixed = phi.apply("(CONST YDyn)")
    assert fixed == "(IF (MATCH_PAD a) (CONST ) (CONST YDyn))"
    assert decide_overspecification(fixed, 2, cfg, 400).verdict == 0
    assert phi.apply("(CONST )") == "(CONST )"
    # a non-canonical spelling of an unproblematic program comes back verbatim
    assert phi.apply("  (CONST b) ") == "  (CONST b) "
    e_star = fixed_point_index(phi, cfg)
    assert phi.apply(e_star, phi_registry(phi, cfg)) == e_star


def test_detector_backed_repairs_off_family_witness(cfg):
    phi = detector_backed_operator(cfg)
    prog = "(IF (EQ INPUT (CONST a#)) (CONST YDyn) (CONST ))"
    out = phi.apply(prog)
    assert out.startswith("(IF (MATCH_PAD a) (CONST )")
    assert decide_overspecification(out, 2, cfg, 400).verdict == 0


def test_detector_backed_falls_back_when_budget_is_short(cfg):
    phi = detector_backed_operator(cfg, (2, 5))
    slow = "(EVAL (CONST (EVAL (CONST (CONST YDyn)) INPUT)) INPUT)"
    assert phi.apply(slow) == slow


@pytest.mark.parametrize("phi_name", ["identity", "detector-backed"])
def test_fixed_point_theorem(cfg, phi_name):
    rep = construct_overspecified_fixed_point(get_operator(phi_name, cfg), cfg, 3, 2_000)
    assert rep.phi_of_e_star_equals_e_star
    assert (rep.detection.verdict, rep.detection.witness) == (1, "a")
    assert rep.fixed_point_law_holds
    assert [rep.gadget_branch_taken[x] for x in ("a", "a#", "a##", "b")] == ["y_plus"] * 3 + ["epsilon"]


def test_fixed_point_constant_collapse(cfg):
    rep = construct_overspecified_fixed_point(constant_operator(cfg), cfg, 3, 2_000)
    assert not rep.phi_of_e_star_equals_e_star
    assert rep.detection.verdict == 0
    assert set(rep.gadget_branch_taken.values()) == {"epsilon"}


def test_fixed_point_law_sigma4(cfg):
    for phi in builtin_repair_operators(cfg):
        reg = phi_registry(phi, cfg)
        e = fixed_point_index(phi, cfg)
        g = make_gadget_map(phi, cfg)(e)
        for x in SIGMA4:
            a, b = evaluate(e, x, 3_000, reg), evaluate(g, x, 3_000, reg)
            assert (a.status, a.output) == (b.status, b.output)


def test_small_budget_reported_not_raised(cfg):
    rep = construct_overspecified_fixed_point(detector_backed_operator(cfg), cfg, 1, 50)
    assert rep.detection.verdict == 0
    assert rep.detection.budget_exceeded_on == ["", "a", "b", "#"]


def test_conservativeness_audit(cfg):
    programs = list(fixture_programs(cfg).values())
    assert check_conservative_on_domain(identity_operator(), programs, 3, cfg, 2_000).violations == []
    assert check_conservative_on_domain(detector_backed_operator(cfg), programs, 3, cfg, 2_000).violations == []
    rewrite_all = syntactic("wrap", lambda e: f"(IF INPUT {e} {e})")
    assert "(CONST )" in check_conservative_on_domain(rewrite_all, programs, 3, cfg, 2_000).violations


def test_uniform_elimination_audit(cfg):
    const = constant_operator(cfg)
    programs = list(fixture_programs(cfg).values())
    assert check_uniform_elimination_on_domain(const, programs, 3, cfg, 2_000).violations == []
    ident = identity_operator()
    assert check_uniform_elimination_on_domain(ident, ["(CONST YDyn)"], 3, cfg, 2_000).violations == ["(CONST YDyn)"]
    for phi in (ident, detector_backed_operator(cfg)):
        e = fixed_point_index(phi, cfg)
        assert e in check_uniform_elimination_on_domain(phi, [e], 3, cfg, 2_000).violations


def test_three_way_tradeoff(cfg):
    programs = list(fixture_programs(cfg).values())
    ops = {op.name: op for op in builtin_repair_operators(cfg)}
    with_e = {name: programs + [fixed_point_index(op, cfg)] for name, op in ops.items()}

    def audit(name):
        op = ops[name]
        cons = check_conservative_on_domain(op, with_e[name], 3, cfg, 2_000)
        elim = check_uniform_elimination_on_domain(op, with_e[name], 3, cfg, 2_000)
        return bool(cons.violations), bool(elim.violations)

    # (a) complete on the domain but not conservative
    assert audit("constant-epsilon") == (True, False)
    # (b) conservative but incomplete
    assert audit("identity") == (False, True)
    # (c) conservative; repairs every witness inside its own cap, fails at e*
    assert audit("detector-backed") == (False, True)
    phi = ops["detector-backed"]
    inside = [p for p in programs if decide_overspecification(p, 2, cfg, 400).verdict == 1]
    assert inside
    assert check_uniform_elimination_on_domain(phi, inside, 2, cfg, 400).violations == []


def test_unknown_operator(cfg):
    with pytest.raises(KeyError, match="unknown repair operator"):
        get_operator("nope", cfg)


def test_operator_is_reentrant(cfg):
    phi = detector_backed_operator(cfg)
    reg = phi_registry(phi, cfg)
    prog = "(ORACLE PHI (CONST (CONST YDyn)))"
    out = evaluate(prog, "", 2_000, reg)
    assert out.output == "(IF (MATCH_PAD a) (CONST ) (CONST YDyn))"
    # too little to finish: the operator falls back and the drained caller diverges
    assert evaluate(prog, "", 10, reg).status is Status.DIVERGED
