"""Named fixture programs and Turing machines used by tests, demos and the CLI."""

from __future__ import annotations

import json
from importlib import resources

from .detector import build_halting_gadget
from .scenario import ScenarioConfig, default_scenario
from .turing import TmDescriptor, chain_machine, runaway_machine, scanner_machine, shuttle_machine

# name -> (machine, input, halting time or None)
TM_FIXTURES = {
    "chain1": (lambda: chain_machine(1), "", 1),
    "chain4": (lambda: chain_machine(4), "", 4),
    "chain9": (lambda: chain_machine(9), "", 9),
    "scanner": (scanner_machine, "111", 4),
    "runaway": (runaway_machine, "", None),
    "shuttle": (shuttle_machine, "", None),
}


def fixture_tm(name: str) -> TmDescriptor:
    """Load a fixture machine from the shipped ``data/tms`` directory."""
    path = resources.files("overspec").joinpath(f"data/tms/{name}.json")
    if not path.is_file():
        raise KeyError(f"unknown fixture machine {name!r}; available: {sorted(TM_FIXTURES)}")
    return TmDescriptor.from_json(json.loads(path.read_text(encoding="utf-8")))


def fixture_programs(cfg: ScenarioConfig | None = None) -> dict[str, str]:
    """Named programs with known overspecification status under ``cfg``.

    Names ending in ``_pos`` are overspecified (on the pad family at some
    length); ``_neg`` programs are not.
    """
    cfg = cfg or default_scenario()
    kit = cfg.witness_kit
    progs = {
        "const_yplus_pos": f"(CONST {kit.y_plus})",
        "const_eps_neg": f"(CONST {kit.epsilon})",
        "const_b_neg": "(CONST b)",
        "ysorted_neg": "(CONST YSorted)",
        "only_on_b_neg": f"(IF (EQ INPUT (CONST b)) (CONST {kit.y_plus}) (CONST {kit.epsilon}))",
        "deep_pad_pos": f"(IF (EQ INPUT (CONST {kit.x0}{cfg.pad * 2})) (CONST {kit.y_plus}) (CONST {kit.epsilon}))",
        "echo_neg": "INPUT",
    }
    for name, (make, w, t) in TM_FIXTURES.items():
        suffix = "neg" if t is None else "pos"
        progs[f"halting_{name}_{suffix}"] = build_halting_gadget(make(), w, cfg)
    return progs
