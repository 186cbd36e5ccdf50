"""Command-line entry point.

    risvlc run --problem P1 --config scenario.yaml --out results/
    risvlc sweep --config sweep.yaml --out sweep/
    risvlc baseline --config scenario.yaml --out base/
    risvlc oracle --problem P2 --config tiny.yaml --out oracle/
    risvlc dump-channels --config scenario.yaml --out ch/

Exit status: 0 on success, 1 when every run ended infeasible or the oracle
budget was exceeded, 2 on usage or configuration errors.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import sys
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from .channel import assemble_channels, poses_from_angles
from .configio import ConfigError, RunConfig, ga_config, load_run_config, parse_run_config, read_yaml
from .experiments import (
    SweepResult,
    SweepRow,
    SweepSpec,
    convergence_report,
    decision_variable_dump,
    fixed_power_baseline,
    paired_baseline,
    sweep,
)
from .optimizer import PROBLEMS, BudgetExceeded, GridSpec, ProblemSpec, brute_force_oracle, run_ga
from .scenario import Scenario, ScenarioError, build_default_scenario

VERBS = ("run", "sweep", "baseline", "oracle", "dump-channels")
SCALES = ("desk", "paper")


class UsageError(Exception):
    pass


@dataclass(frozen=True)
class CliCommand:
    verb: str
    config: str | None = None
    out: str = "out"
    seed: int | None = None
    problem: str = "P1"
    scale: str = "desk"
    timing: bool = False
    workers: int | None = None

    def to_argv(self) -> list[str]:
        argv = [self.verb, "--problem", self.problem, "--out", self.out, "--scale", self.scale]
        if self.config is not None:
            argv += ["--config", self.config]
        if self.seed is not None:
            argv += ["--seed", str(self.seed)]
        if self.timing:
            argv.append("--timing")
        if self.workers is not None:
            argv += ["--workers", str(self.workers)]
        return argv

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "CliCommand":
        return cls(**d)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: error: {message}\n{self.format_usage()}")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="risvlc", description="RIS-aided VLC secrecy optimisation")
    parser.add_argument("--version", action="version", version=f"risvlc {__version__}")
    sub = parser.add_subparsers(dest="verb", parser_class=_Parser)
    for verb in VERBS:
        p = sub.add_parser(verb)
        p.add_argument("--problem", choices=sorted(PROBLEMS), default="P1")
        p.add_argument("--config", help="scenario (or sweep) YAML file")
        p.add_argument("--out", default="out", help="output directory")
        p.add_argument("--seed", type=int, help="scenario/GA seed (first seed of a sweep)")
        p.add_argument("--scale", choices=SCALES, default="desk", help="desk: K=30, U=2; paper: K=100, U=4")
        p.add_argument("--timing", action="store_true", help="fill the runtime_s column")
        p.add_argument("--workers", type=int, help="worker processes (default: RVS_THREADS or 1)")
    return parser


def parse_args(argv: Sequence[str]) -> CliCommand:
    ns = build_parser().parse_args(list(argv))
    if ns.verb is None:
        raise UsageError(build_parser().format_help())
    if ns.config is not None and not Path(ns.config).is_file():
        raise UsageError(f"config file not found: {ns.config}")
    if ns.verb == "sweep" and ns.config is None:
        raise UsageError("sweep requires --config")
    if ns.verb == "baseline":
        ns.problem = "P2"  # the baseline is defined for NOMA only
    return CliCommand(ns.verb, ns.config, ns.out, ns.seed, ns.problem, ns.scale, ns.timing, ns.workers)


# -- manifest and file helpers --------------------------------------------------

def _canon(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), default=_json_default)


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    raise TypeError(f"not serialisable: {type(o)}")


def scenario_hash(scenario: Scenario) -> str:
    return hashlib.sha256(_canon(asdict(scenario)).encode()).hexdigest()[:16]


def make_manifest(cmd: CliCommand, payload: dict) -> dict:
    """Run description plus its hash.  The output directory is left out so a
    run reproduced elsewhere yields the same hash and identical files."""
    command = {k: v for k, v in cmd.to_dict().items() if k != "out"}
    body = {"version": __version__, "command": command, **payload}
    body["hash"] = hashlib.sha256(_canon(body).encode()).hexdigest()[:16]
    return body


def _write(path: Path, text: str) -> None:
    try:
        path.write_text(text, newline="")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror}") from exc


def _trace_csv(trace, manifest_hash: str) -> str:
    buf = io.StringIO()
    buf.write(f"# manifest={manifest_hash}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("generation", "best_objective", "feasible_count"))
    for gen, best, nfeas in trace:
        w.writerow([gen, repr(float(best)), nfeas])
    return buf.getvalue()


def _run_config(cmd: CliCommand) -> RunConfig:
    cfg = load_run_config(cmd.config, cmd.scale)
    if cmd.seed is not None:
        cfg = RunConfig(cfg.overrides, cfg.ga, cmd.seed)
    return cfg


# -- verbs -----------------------------------------------------------------------

def _cmd_run(cmd: CliCommand, out: Path) -> int:
    cfg = _run_config(cmd)
    scenario = build_default_scenario(cfg.overrides, seed=cfg.seed)
    spec = ProblemSpec(cmd.problem)
    res = run_ga(scenario, spec, ga_config(asdict(cfg.ga), rng_seed=cfg.seed))
    conv = convergence_report(res.trace)
    manifest = make_manifest(cmd, {
        "config": cfg.to_dict(), "scenario_hash": scenario_hash(scenario),
        "result": {"objective": res.record.objective, "feasible": res.record.feasible,
                   "violations": list(res.record.violations), "evaluations": res.evaluations,
                   "last_improvement": conv.last_improvement, "plateau": conv.plateau},
    })
    h = manifest["hash"]
    obj = res.record.objective if res.feasible else 0.0
    row = SweepRow("run", "-", spec.scheme, spec.problem, cfg.seed, float(obj), res.runtime_s, res.feasible)
    _write(out / "manifest.json", json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    _write(out / "results.csv", SweepResult([row]).to_csv(h, cmd.timing))
    _write(out / "convergence.csv", _trace_csv(res.trace, h))
    _write(out / "decision_variables.csv",
           decision_variable_dump(res.best, scenario, spec, res.record.objective).to_csv(h))
    print(f"{spec.problem} objective={res.record.objective:.6g} feasible={res.feasible} -> {out}")
    return 0 if res.feasible else 1


def load_sweep_spec(cmd: CliCommand) -> SweepSpec:
    doc = read_yaml(cmd.config)
    try:
        param = doc.pop("param")
        values = doc.pop("values")
    except KeyError as exc:
        raise ConfigError(f"{cmd.config}: sweep file needs 'param' and 'values'") from exc
    seeds = doc.pop("seeds", 10)
    problems = doc.pop("problems", [cmd.problem])
    first = cmd.seed if cmd.seed is not None else 0
    seeds = tuple(range(first, first + int(seeds))) if isinstance(seeds, int) else tuple(int(s) for s in seeds)
    base = parse_run_config(doc, cmd.scale)
    try:
        return SweepSpec(param, tuple(values), base.overrides, seeds, tuple(problems), base.ga)
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from exc


def _cmd_sweep(cmd: CliCommand, out: Path) -> int:
    spec = load_sweep_spec(cmd)
    res = sweep(spec, cmd.workers)
    return _write_sweep(cmd, out, res, {"sweep": {
        "param": spec.param, "values": list(spec.values), "fixed": dict(spec.fixed),
        "seeds": list(spec.seeds), "problems": list(spec.problems), "ga": asdict(spec.ga)}})


def _write_sweep(cmd: CliCommand, out: Path, res: SweepResult, payload: dict) -> int:
    manifest = make_manifest(cmd, {**payload, "summary": res.summary()})
    h = manifest["hash"]
    _write(out / "manifest.json", json.dumps(manifest, indent=2, sort_keys=True, default=_json_default) + "\n")
    _write(out / "results.csv", res.to_csv(h, cmd.timing))
    _write(out / "convergence.csv", res.convergence_csv(h))
    for s in res.summary():
        print(f"{s['problem']} {s['value']}: median={s['median']:.6g} IQR=[{s['q1']:.6g}, {s['q3']:.6g}]")
    return 0 if any(r.feasible for r in res.rows) else 1


def _cmd_baseline(cmd: CliCommand, out: Path) -> int:
    cfg = load_run_config(cmd.config, cmd.scale)
    first = cmd.seed if cmd.seed is not None else 0
    seeds = tuple(range(first, first + 10))
    res = fixed_power_baseline(cfg.overrides, cfg.ga, seeds, workers=cmd.workers)
    pairs = paired_baseline(res)
    wins = sum(full > frozen for _, full, frozen in pairs)
    print(f"optimized epsilon beats epsilon=0.6 on {wins}/{len(pairs)} seeds")
    return _write_sweep(cmd, out, res, {"config": cfg.to_dict(), "seeds": list(seeds), "wins": wins})


def _cmd_oracle(cmd: CliCommand, out: Path) -> int:
    cfg = _run_config(cmd)
    scenario = build_default_scenario(cfg.overrides, seed=cfg.seed)
    spec = ProblemSpec(cmd.problem)
    grid = GridSpec.uniform(scenario, spec)
    try:
        orc = brute_force_oracle(scenario, spec, grid)
    except BudgetExceeded as exc:
        print(f"oracle: {exc}", file=sys.stderr)
        return 1
    ga = run_ga(scenario, spec, ga_config(asdict(cfg.ga), rng_seed=cfg.seed), grid=grid)
    manifest = make_manifest(cmd, {
        "config": cfg.to_dict(), "scenario_hash": scenario_hash(scenario),
        "grid": {"angles_deg": [float(np.degrees(a)) for a in grid.angles], "power": list(grid.power)},
        "oracle": {"objective": orc.record.objective, "feasible": orc.record.feasible,
                   "evaluations": orc.evaluations},
        "ga": {"objective": ga.record.objective, "feasible": ga.record.feasible},
    })
    h = manifest["hash"]
    rows = [SweepRow("solver", "oracle", spec.scheme, spec.problem, cfg.seed, orc.record.objective, 0.0),
            SweepRow("solver", "ga", spec.scheme, spec.problem, cfg.seed, ga.record.objective, ga.runtime_s)]
    _write(out / "manifest.json", json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    _write(out / "results.csv", SweepResult(rows).to_csv(h, cmd.timing))
    _write(out / "convergence.csv", _trace_csv(ga.trace, h))
    _write(out / "decision_variables.csv",
           decision_variable_dump(orc.best, scenario, spec, orc.record.objective).to_csv(h))
    ratio = ga.record.objective / orc.record.objective if orc.record.objective > 0 else 1.0
    print(f"oracle={orc.record.objective:.6g} ga={ga.record.objective:.6g} ratio={ratio:.4f}")
    return 0 if orc.record.feasible else 1


def _cmd_dump_channels(cmd: CliCommand, out: Path) -> int:
    cfg = _run_config(cmd)
    scenario = build_default_scenario(cfg.overrides, seed=cfg.seed)
    zeros = np.zeros(scenario.K)
    ch = assemble_channels(scenario, poses_from_angles(scenario, zeros, zeros))
    manifest = make_manifest(cmd, {"config": cfg.to_dict(), "scenario_hash": scenario_hash(scenario)})
    buf = io.StringIO()
    buf.write(f"# manifest={manifest['hash']}\n# omega=gamma=0 for every element\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("k", "receiver", "gain"))
    for k, rx, g in ch.rows():
        w.writerow([k, rx, repr(g)])
    _write(out / "manifest.json", json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    _write(out / "channels.csv", buf.getvalue())
    print(f"wrote {scenario.K * (scenario.U + 1)} gains to {out / 'channels.csv'}")
    return 0


_HANDLERS = {
    "run": _cmd_run, "sweep": _cmd_sweep, "baseline": _cmd_baseline,
    "oracle": _cmd_oracle, "dump-channels": _cmd_dump_channels,
}


def execute(cmd: CliCommand) -> int:
    out = Path(cmd.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        print(f"risvlc: cannot create {out}: {exc.strerror}", file=sys.stderr)
        return 2
    try:
        return _HANDLERS[cmd.verb](cmd, out)
    except (ConfigError, ScenarioError) as exc:
        print(f"risvlc: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"risvlc: {exc}", file=sys.stderr)
        return 1


def main(argv: Sequence[str] | None = None) -> int:
    try:
        cmd = parse_args(sys.argv[1:] if argv is None else argv)
    except UsageError as exc:
        print(str(exc), file=sys.stderr)
        return 2
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    return execute(cmd)


if __name__ == "__main__":
    sys.exit(main())
