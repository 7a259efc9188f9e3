"""
Bounded detection decides halting within a time bound
=====================================================

For a Turing machine M and input w, the halting gadget emits y+ on
``x0 + '#'*n`` exactly when M halts on w within n*n steps.  Bounded
detection on lengths up to |x0|+n therefore answers a bounded halting
question, and the unbounded problem inherits its undecidability.
"""

# %%
from overspec.detector import build_halting_gadget, decide_overspecification, semidecide_overspecified
from overspec.fixtures import TM_FIXTURES, fixture_tm
from overspec.scenario import default_scenario

cfg = default_scenario()

# %%
# Verdicts by pad cap.  A machine with halting time t flips to 1 at the
# first n with n*n >= t; looping machines never do.
print(f"{'machine':10s} {'t':>5s}  verdicts for n = 0..4")
for name, (_, w, t) in TM_FIXTURES.items():
    gadget = build_halting_gadget(fixture_tm(name), w, cfg)
    verdicts = [decide_overspecification(gadget, len(cfg.witness_kit.x0) + n, cfg, 10_000).verdict
                for n in range(5)]
    print(f"{name:10s} {str(t):>5s}  {verdicts}")

# %%
# The semi-decider dovetails over instances and budgets.  It accepts every
# overspecified program eventually, but can only run out of stages on the
# others.
for name in ("chain4", "chain9", "runaway"):
    _, w, _ = TM_FIXTURES[name]
    out = semidecide_overspecified(build_halting_gadget(fixture_tm(name), w, cfg), cfg, 10_000)
    print(f"{name:8s} {out.status.value:9s} witness={out.witness!r} stage={out.stage_reached}")
