import pytest
from hypothesis import given, settings, strategies as st

from overspec import lang
from overspec.errors import ConfigurationError, InputError
from overspec.machine import OracleRegistry, Status, evaluate, host_context
from overspec.turing import chain_machine

LOOP = "(EVAL (CONST (EVAL INPUT INPUT)) (CONST (EVAL INPUT INPUT)))"
PAD_SWITCH = "(IF (MATCH_PAD a) (CONST YDyn) (CONST ))"


def test_constant():
    out = evaluate("(CONST YDyn)", "a#", 100)
    assert (out.status, out.output, out.steps_used) == (Status.HALTED, "YDyn", 1)


def test_pad_switch():
    assert evaluate(PAD_SWITCH, "a##", 100).output == "YDyn"
    assert evaluate(PAD_SWITCH, "b", 100).output == ""


def test_self_loop_diverges():
    out = evaluate(LOOP, "ab", 10_000)
    assert out.status is Status.DIVERGED
    assert out.output is None
    assert out.steps_used == 10_000


def test_deep_eval_chain_does_not_overflow():
    # the loop nests EVAL thousands of times before the budget runs out
    assert evaluate(LOOP, "", 200_000).status is Status.DIVERGED


@pytest.mark.parametrize("program, x, expected", [
    ("(CONCAT FIRST SECOND)", "2:abx", "abx"),
    ("FIRST", "nonsense", ""),
    ("SECOND", "nonsense", "nonsense"),
    ("(SQ (NUM 12))", "", "144"),
    ("(SQ INPUT)", "ab", "0"),
    ("(EQ INPUT (CONST a))", "a", "1"),
    ("(EQ INPUT (CONST a))", "b", ""),
    ("(PAD_COUNT a)", "a###", "3"),
    ("(PAD_COUNT a)", "ba", ""),
    ("(IF INPUT (CONST t) (CONST f))", "0", "t"),
    ("(IF INPUT (CONST t) (CONST f))", "", "f"),
    ("(EVAL (CONST (CONCAT INPUT INPUT)) (CONST ab))", "", "abab"),
    ("(SPECIALIZE (CONST SECOND) (CONST ab))", "", "(EVAL (CONST SECOND) (CONCAT (CONST 2:ab) INPUT))"),
])
def test_operators(program, x, expected):
    out = evaluate(program, x, 1000)
    assert out.halted
    assert out.output == expected


def test_unparsable_eval_target_diverges():
    out = evaluate("(EVAL (CONST (NOPE)) INPUT)", "", 50)
    assert out.status is Status.DIVERGED


def test_unknown_oracle():
    with pytest.raises(ConfigurationError, match="unknown oracle"):
        evaluate("(ORACLE MISSING INPUT)", "", 10)


def test_budget_must_be_positive():
    with pytest.raises(InputError):
        evaluate("INPUT", "", 0)


def test_sim_tm_charges_machine_steps():
    tm = chain_machine(5).encode()
    prog = lang.render(lang.node("SIM_TM", lang.const(tm), lang.const(""), lang.Node("NUM", literal="10")))
    out = evaluate(prog, "", 100)
    assert out.output == "1"
    assert out.steps_used == 4 + 5
    # exactly enough to fund the simulation, and one short of it
    assert evaluate(prog, "", 9).halted
    assert not evaluate(prog, "", 8).halted


def test_sim_tm_bad_descriptor():
    with pytest.raises(ConfigurationError, match="SIM_TM"):
        evaluate("(SIM_TM (CONST {}) (CONST ) (NUM 3))", "", 100)


def test_oracle_spending_is_shared():
    def spender(arg, ctx):
        ctx.evaluate(LOOP, "", None)
        return "done"
    reg = OracleRegistry({"S": spender})
    out = evaluate("(ORACLE S INPUT)", "", 500, reg)
    # the oracle ran the caller dry, so the caller diverges too
    assert out.status is Status.DIVERGED
    assert out.steps_used == 500


def test_sub_context_caps_allowance():
    seen = {}

    def capped(arg, ctx):
        sub = ctx.sub(40)
        seen["inner"] = sub.evaluate(LOOP, "").steps_used
        return "ok"
    reg = OracleRegistry({"C": capped})
    out = evaluate("(ORACLE C INPUT)", "", 500, reg)
    assert seen["inner"] == 40
    assert out.output == "ok"


def test_host_context():
    ctx = host_context(30)
    assert ctx.remaining == 30
    assert ctx.evaluate("(CONST a)", "").output == "a"
    assert ctx.remaining == 29


programs = st.sampled_from([
    "(CONST YDyn)", PAD_SWITCH, LOOP, "(CONCAT INPUT INPUT)",
    "(EVAL (CONST (IF (MATCH_PAD a) (CONST YDyn) (CONST ))) INPUT)",
    "(EVAL (EVAL (CONST (CONST (CONCAT INPUT (CONST !)))) INPUT) INPUT)",
    f"(SIM_TM (CONST {chain_machine(3).encode()}) (CONST 1) (SQ (PAD_COUNT a)))",
])


@settings(max_examples=150)
@given(programs, st.text(alphabet="ab#", max_size=5), st.integers(1, 60), st.integers(0, 200))
def test_budget_monotonicity(program, x, budget, extra):
    small = evaluate(program, x, budget)
    if small.halted:
        big = evaluate(program, x, budget + extra)
        assert big.halted
        assert big.output == small.output
        assert big.steps_used == small.steps_used


def test_determinism():
    a = evaluate(PAD_SWITCH, "a#", 50)
    b = evaluate(PAD_SWITCH, "a#", 50)
    assert a == b
