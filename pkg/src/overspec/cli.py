"""Command-line entry point: ``overspec <command> [options]``.

Reports go to stdout as JSON (or text for ``demo``) and a run manifest goes
to stderr.  With ``--out DIR`` the report, any CSV and ``manifest.json`` are
written to DIR instead.  Exit status: 0 success, 1 bad input, 2 internal
invariant violation.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import time
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import __version__, aggregation, detector, lang, repair, turing
from .errors import ConfigurationError, FitError, InputError, InvariantViolation
from .fixtures import TM_FIXTURES, fixture_tm
from .scenario import ScenarioConfig, default_scenario, validate_scenario

SCENARIO_ENV = "OVERSPEC_SCENARIO"


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


# -- serialization ------------------------------------------------------------------

def _clean(obj: Any) -> Any:
    """Round floats to 12 significant digits; non-finite floats become strings."""
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if not math.isfinite(x):
            return str(x)
        return float(f"{x:.12g}")
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return obj


def dumps(obj: Any) -> str:
    return json.dumps(_clean(obj), indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def _csv_text(rows: list[dict]) -> str:
    buf = io.StringIO()
    if rows:
        writer = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
        writer.writeheader()
        for r in rows:
            writer.writerow({k: ("" if v is None else _clean(v)) for k, v in r.items()})
    return buf.getvalue()


# -- inputs --------------------------------------------------------------------------

def _scenario(args) -> ScenarioConfig:
    path = getattr(args, "scenario", None) or os.environ.get(SCENARIO_ENV)
    if not path:
        return default_scenario()
    try:
        return ScenarioConfig.load(path)
    except OSError as exc:
        raise InputError(f"cannot read scenario {path}: {exc.strerror}") from None


def _read_program(path: str) -> str:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read program {path}: {exc.strerror}") from None
    return lang.canonicalize(text.strip())


def _load_tm(spec: str) -> turing.TmDescriptor:
    if spec in TM_FIXTURES:
        return fixture_tm(spec)
    try:
        return turing.TmDescriptor.load(spec)
    except OSError as exc:
        raise InputError(f"cannot read machine {spec}: {exc.strerror}") from None


def _operator(name: str, cfg: ScenarioConfig, args) -> repair.RepairOperator:
    try:
        return repair.get_operator(name, cfg, (args.cap_n, args.cap_budget))
    except KeyError as exc:
        raise InputError(exc.args[0]) from None


def _seed_list(args) -> list[int]:
    return list(range(args.seed, args.seed + args.repeats))


def _int_list(text: str) -> list[int]:
    try:
        vals = [int(float(t)) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if not vals or min(vals) < 1:
        raise argparse.ArgumentTypeError("sample sizes must be positive")
    return vals


# -- commands --------------------------------------------------------------------------
# each returns (payload, csv_rows or None, seed or None)

def cmd_validate_scenario(args):
    cfg = _scenario(args)
    report = validate_scenario(cfg, args.check_bound, args.domain_bound)
    payload = {"scenario_sha256": cfg.digest(), **report.to_json()}
    if not report.ok:
        _emit(args, payload)
        raise InputError(f"scenario fails {len(report.violations)} check(s)")
    return payload, None, None


def cmd_detect(args):
    cfg = _scenario(args)
    program = _read_program(args.program)
    rep = detector.decide_overspecification(program, args.max_len, cfg, args.budget,
                                            record=args.csv is not None, jobs=args.jobs)
    if args.csv is not None:
        Path(args.csv).write_text(_csv_text(rep.rows), encoding="utf-8")
    return {"program": program, **rep.to_json()}, None, None


def cmd_semidecide(args):
    cfg = _scenario(args)
    program = _read_program(args.program)
    run = detector.semidecide_literal if args.literal else detector.semidecide_overspecified
    out = run(program, cfg, args.stages)
    return {"program": program, "stage_limit": args.stages, **out.to_json()}, None, None


def cmd_halting_gadget(args):
    cfg = _scenario(args)
    tm = _load_tm(args.tm)
    program = detector.build_halting_gadget(tm, args.input, cfg)
    t = turing.halting_time(tm, args.input, args.pad_cap ** 2)
    rows = []
    for n in range(args.pad_cap + 1):
        # pad depth n is reached by instances of length |x0| + n
        rep = detector.decide_overspecification(program, len(cfg.witness_kit.x0) + n, cfg, args.budget)
        expected = int(t is not None and t <= n * n)
        if rep.budget_exceeded_on:
            raise InputError(f"budget {args.budget} too small at n={n}: {rep.budget_exceeded_on[:3]}")
        if rep.verdict != expected:
            raise InvariantViolation(f"gadget verdict {rep.verdict} at n={n}, expected {expected}")
        rows.append({"pad_cap": n, "verdict": rep.verdict, "expected": expected, "witness": rep.witness})
    payload = {"program": program, "input": args.input, "halting_time_within_cap": t,
               "cap_steps": args.pad_cap ** 2, "verdicts": rows}
    return payload, None, None


def cmd_fixed_point(args):
    cfg = _scenario(args)
    phi = _operator(args.phi, cfg, args)
    rep = repair.construct_overspecified_fixed_point(phi, cfg, args.max_len, args.budget)
    if not rep.fixed_point_law_holds:
        raise InvariantViolation(f"eval(e*) and eval(G(e*)) disagree on {rep.spot_check_mismatches}")
    if (rep.phi_of_e_star_equals_e_star and rep.detection.verdict == 0
            and not rep.detection.budget_exceeded_on and validate_scenario(cfg, 8).ok):
        raise InvariantViolation("Phi fixes e* but e* was not detected as overspecified")
    return {"conservative": phi.conservative, **rep.to_json()}, None, None


def cmd_audit_phi(args):
    cfg = _scenario(args)
    phi = _operator(args.phi, cfg, args)
    files = sorted(Path(args.programs).glob("*.pl"))
    if not files:
        raise InputError(f"no .pl programs in {args.programs}")
    programs = [_read_program(str(f)) for f in files]
    names = [f.name for f in files]
    e_star = repair.fixed_point_index(phi, cfg)
    programs.append(e_star)
    names.append("e_star")
    cons = repair.check_conservative_on_domain(phi, programs, args.max_len, cfg, args.budget)
    elim = repair.check_uniform_elimination_on_domain(phi, programs, args.max_len, cfg, args.budget)
    for rep in (cons, elim):
        for name, entry in zip(names, rep.entries):
            entry["name"] = name
    if phi.conservative and cons.violations:
        raise InvariantViolation(f"{phi.name} is declared conservative but changed {cons.violations}")
    payload = {
        "phi": phi.name,
        "conservative": phi.conservative,
        "e_star": e_star,
        "conservativeness": cons.to_json(),
        "uniform_elimination": elim.to_json(),
        "e_star_flagged": e_star in elim.violations,
    }
    return payload, None, None


def cmd_btl_experiment(args):
    pop = aggregation.EvaluatorPopulation.load(args.population)
    seeds = _seed_list(args)
    sweep = aggregation.consistency_sweep(pop, args.samples, seeds, args.dv)
    rows = [dict(r) for r in sweep.rows]
    positive = {m: int(np.sum(sweep.fitted(m) > 0)) for m in args.samples}
    payload = {
        "delta_v": args.dv,
        "win_probability": aggregation.pairwise_win_probability(args.dv, pop),
        "true_delta": sweep.true_delta,
        "median_abs_error": {str(m): e for m, e in sweep.medians().items()},
        "positive_fits": {str(m): positive[m] for m in args.samples},
        "runs_per_sample_size": len(seeds),
    }
    return payload, rows, args.seed


def cmd_asymmetry(args):
    pop = aggregation.EvaluatorPopulation.load(args.population)
    res = aggregation.population_scores_asymmetric(args.delta, pop)
    try:
        leff = aggregation.lambda_eff(pop)
    except InputError:
        leff = None
    if res.ratio is not None and leff is not None and abs(res.ratio - leff) > 1e-12:
        raise InvariantViolation(f"gap ratio {res.ratio!r} differs from lambda_eff {leff!r}")
    payload = res.to_json()
    payload["lambda_eff"] = leff
    if res.ratio is None:
        payload["ratio_note"] = "undefined: the overprovision gap is zero"
    return payload, None, None


def cmd_majority(args):
    profile = aggregation.BenchmarkProfile.load(args.profile)
    t = aggregation.majority_pairwise(profile)
    return {"k": profile.k, "instance": profile.instance, **t.to_json()}, None, None


def cmd_demo(args):
    cfg = _scenario(args)
    phi = repair.detector_backed_operator(cfg, (args.cap_n, args.cap_budget))
    rep = repair.construct_overspecified_fixed_point(phi, cfg, args.max_len, args.budget)
    kit = cfg.witness_kit
    fam = [kit.x0 + cfg.pad * i for i in range(3)]
    lines = [
        f"scenario sha256: {cfg.digest()}",
        f"repair operator: {phi.name} (internal cap n={args.cap_n}, budget={args.cap_budget})",
        f"e* = {rep.e_star}",
        f"Phi(e*) = e*: {str(rep.phi_of_e_star_equals_e_star).lower()}",
        f"detection on lengths <= {args.max_len}: verdict {rep.detection.verdict}, "
        f"witness {rep.detection.witness!r}",
        "e* on the pad family: " + ", ".join(f"{x!r} -> {rep.gadget_branch_taken[x]}" for x in fam
                                             if x in rep.gadget_branch_taken),
        f"eval(e*, x) == eval(G(e*), x) on all of Sigma^<=3: {str(rep.fixed_point_law_holds).lower()}",
    ]
    if not rep.overspecified_fixed_point:
        raise InvariantViolation("\n".join(lines))
    return "\n".join(lines) + "\n", None, None


# -- wiring ----------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="overspec", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"overspec {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, fn, help_):
        sp = sub.add_parser(name, help=help_)
        sp.set_defaults(func=fn)
        sp.add_argument("--out", help="write report and manifest.json into this directory")
        return sp

    def scenario(sp):
        sp.add_argument("--scenario", help=f"scenario JSON (default: ${SCENARIO_ENV} or the built-in one)")

    def cap(sp):
        sp.add_argument("--cap-n", type=int, default=repair.DEFAULT_DETECTION_CAP[0],
                        help="internal detection length cap of the detector-backed operator")
        sp.add_argument("--cap-budget", type=int, default=repair.DEFAULT_DETECTION_CAP[1],
                        help="internal step allowance of the detector-backed operator")

    sp = add("validate-scenario", cmd_validate_scenario, "check a scenario's laws")
    scenario(sp)
    sp.add_argument("--check-bound", type=int, default=8)
    sp.add_argument("--domain-bound", type=int, default=None)

    sp = add("detect", cmd_detect, "bounded overspecification detection")
    scenario(sp)
    sp.add_argument("--program", required=True)
    sp.add_argument("--max-len", type=int, default=3)
    sp.add_argument("--budget", type=int, default=10_000)
    sp.add_argument("--csv", help="also write per-instance rows to this CSV file")
    sp.add_argument("--jobs", type=int, default=1)

    sp = add("semidecide", cmd_semidecide, "dovetailing semi-decision")
    scenario(sp)
    sp.add_argument("--program", required=True)
    sp.add_argument("--stages", type=int, default=100_000)
    sp.add_argument("--literal", action="store_true", help="use the quadratic stage-by-stage schedule")

    sp = add("halting-gadget", cmd_halting_gadget, "build and check the halting-reduction gadget")
    scenario(sp)
    sp.add_argument("--tm", required=True, help=f"machine JSON file or fixture name {sorted(TM_FIXTURES)}")
    sp.add_argument("--input", default="")
    sp.add_argument("--pad-cap", type=int, default=4, help="check pad depths 0..N")
    sp.add_argument("--budget", type=int, default=10_000)

    sp = add("fixed-point", cmd_fixed_point, "overspecified fixed point of a repair operator")
    scenario(sp)
    sp.add_argument("--phi", required=True)
    sp.add_argument("--max-len", type=int, default=3)
    sp.add_argument("--budget", type=int, default=2_000)
    cap(sp)

    sp = add("audit-phi", cmd_audit_phi, "conservativeness and uniform-elimination audit")
    scenario(sp)
    sp.add_argument("--phi", required=True)
    sp.add_argument("--programs", required=True, help="directory of .pl program files")
    sp.add_argument("--max-len", type=int, default=3)
    sp.add_argument("--budget", type=int, default=2_000)
    cap(sp)

    sp = add("btl-experiment", cmd_btl_experiment, "sampled BTL fits of a population")
    sp.add_argument("--population", required=True)
    sp.add_argument("--dv", type=float, default=1.0)
    sp.add_argument("--samples", type=_int_list, default=[100_000], help="comma-separated sample sizes")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--repeats", type=int, default=1, help="seeds seed .. seed+repeats-1")

    sp = add("asymmetry", cmd_asymmetry, "regret-weighted score gaps")
    sp.add_argument("--population", required=True)
    sp.add_argument("--delta", type=int, default=1)

    sp = add("majority", cmd_majority, "pairwise majority tournament of a profile")
    sp.add_argument("--profile", required=True)

    sp = add("demo", cmd_demo, "fixed-point walkthrough with the detector-backed operator")
    scenario(sp)
    sp.add_argument("--max-len", type=int, default=3)
    sp.add_argument("--budget", type=int, default=2_000)
    cap(sp)
    return p


def _manifest(args, seed, elapsed: float) -> dict:
    params = {k: v for k, v in vars(args).items() if k not in ("func", "command")}
    scenario_hash = None
    if hasattr(args, "scenario"):
        scenario_hash = _scenario(args).digest()
    return {"command": args.command, "parameters": params, "seed": seed,
            "scenario_sha256": scenario_hash, "tool_version": __version__,
            "wall_clock_seconds": round(elapsed, 3)}


def _emit(args, payload, rows=None) -> None:
    text = payload if isinstance(payload, str) else dumps(payload)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        suffix = "txt" if isinstance(payload, str) else "json"
        (out / f"report.{suffix}").write_text(text, encoding="utf-8")
        if rows is not None:
            (out / "report.csv").write_text(_csv_text(rows), encoding="utf-8")
    else:
        sys.stdout.write(text)
        if rows is not None:
            sys.stdout.write(_csv_text(rows))


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    start = time.perf_counter()
    try:
        payload, rows, seed = args.func(args)
        _emit(args, payload, rows)
    except InvariantViolation as exc:
        print(f"overspec: invariant violation: {exc}", file=sys.stderr)
        return 2
    except (InputError, ConfigurationError, FitError) as exc:
        print(f"overspec: error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"overspec: error: {exc.filename}: {exc.strerror}", file=sys.stderr)
        return 1
    manifest = dumps(_manifest(args, seed, time.perf_counter() - start))
    if args.out:
        (Path(args.out) / "manifest.json").write_text(manifest, encoding="utf-8")
    else:
        sys.stderr.write(manifest)
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
