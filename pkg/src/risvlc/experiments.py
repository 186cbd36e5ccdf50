"""Parameter sweeps, the fixed-power NOMA baseline and result summaries.

Every run is keyed by (value, problem, seed): the seed fixes both the
device-orientation draw of the scenario and the GA's random streams, so a
row can be regenerated from its key alone.  An infeasible run (no chromosome
met the minimum-rate constraint) scores 0 in the ``objective`` column.
"""

from __future__ import annotations

import csv
import io
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Any, Iterable, Mapping, Sequence

import numpy as np

from .optimizer import GaConfig, GaResult, Population, ProblemSpec, decode, evaluate, run_ga
from .rates import NomaPowerAllocation
from .scenario import DEG, KNOWN_KEYS, Scenario, build_default_scenario

CSV_COLUMNS = ("param", "value", "scheme", "problem", "seed", "objective", "runtime_s")
ANGLE_PARAMS = {"xi_fov", "phi_half", "alpha_mean", "alpha_std", "fixed_alpha", "fixed_beta"}
BASELINE_LABEL = "P2-fixed"


class SweepError(ValueError):
    pass


def override_key(param: str) -> str:
    """Scenario override key for a swept parameter (angles are swept in degrees)."""
    key = f"{param}_deg" if param in ANGLE_PARAMS else param
    if key not in KNOWN_KEYS:
        raise SweepError(f"unknown sweep parameter {param!r}")
    return key


@dataclass(frozen=True)
class SweepSpec:
    param: str
    values: tuple
    fixed: Mapping[str, Any] = field(default_factory=dict)  # scenario overrides
    seeds: tuple[int, ...] = tuple(range(10))
    problems: tuple[str, ...] = ("P1", "P2")
    ga: GaConfig = field(default_factory=GaConfig)

    def __post_init__(self):
        if not self.values:
            raise SweepError("values must be non-empty")
        if not self.seeds:
            raise SweepError("at least one seed (replication) is required")
        override_key(self.param)
        for p in self.problems:
            ProblemSpec(p)


@dataclass(frozen=True)
class SweepRow:
    param: str
    value: Any
    scheme: str
    problem: str
    seed: int
    objective: float  # 0 when infeasible
    runtime_s: float
    feasible: bool = True
    trace: tuple = ()

    @property
    def key(self) -> tuple:
        return (str(self.param), _sort_value(self.value), self.problem, self.seed)


def _sort_value(v):
    return (0, float(v), "") if isinstance(v, (int, float)) else (1, 0.0, str(v))


@dataclass
class SweepResult:
    rows: list[SweepRow]

    def __post_init__(self):
        self.rows = sorted(self.rows, key=lambda r: r.key)

    def values(self) -> list:
        seen = []
        for r in self.rows:
            if r.value not in seen:
                seen.append(r.value)
        return seen

    def objectives(self, value, problem: str) -> np.ndarray:
        return np.array([r.objective for r in self.rows if r.value == value and r.problem == problem])

    def by_seed(self, value, problem: str) -> dict[int, float]:
        return {r.seed: r.objective for r in self.rows if r.value == value and r.problem == problem}

    def median(self, value, problem: str) -> float:
        return float(np.median(self.objectives(value, problem)))

    def iqr(self, value, problem: str) -> tuple[float, float]:
        q1, q3 = np.percentile(self.objectives(value, problem), [25, 75])
        return float(q1), float(q3)

    def summary(self) -> list[dict]:
        out = []
        problems = sorted({r.problem for r in self.rows})
        for v in self.values():
            for p in problems:
                obj = self.objectives(v, p)
                if len(obj):
                    q1, q3 = self.iqr(v, p)
                    out.append({"value": v, "problem": p, "median": float(np.median(obj)),
                                "q1": q1, "q3": q3, "n": len(obj)})
        return out

    def to_csv(self, manifest_hash: str | None = None, timing: bool = True) -> str:
        buf = io.StringIO()
        if manifest_hash:
            buf.write(f"# manifest={manifest_hash}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in self.rows:
            w.writerow([r.param, _fmt(r.value), r.scheme, r.problem, r.seed, _fmt(r.objective),
                        _fmt(r.runtime_s) if timing else ""])
        return buf.getvalue()

    def convergence_csv(self, manifest_hash: str | None = None) -> str:
        buf = io.StringIO()
        if manifest_hash:
            buf.write(f"# manifest={manifest_hash}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(("param", "value", "problem", "seed", "generation", "best_objective", "feasible_count"))
        for r in self.rows:
            for gen, best, nfeas in r.trace:
                w.writerow([r.param, _fmt(r.value), r.problem, r.seed, gen, _fmt(best), nfeas])
        return buf.getvalue()


def _fmt(x) -> str:
    if isinstance(x, float):
        return repr(x)
    return str(x)


def parse_results_csv(text: str) -> list[dict]:
    lines = [ln for ln in text.splitlines() if not ln.startswith("#")]
    return list(csv.DictReader(lines))


def run_point(overrides: Mapping[str, Any], problem: str, seed: int, ga: GaConfig = GaConfig(),
              fixed_epsilon: float | None = None) -> tuple[Scenario, GaResult]:
    """One GA run on the scenario drawn with ``seed``, GA streams seeded by ``seed`` as well."""
    scenario = build_default_scenario(overrides, seed=seed)
    spec = ProblemSpec(problem, fixed_epsilon=fixed_epsilon)
    return scenario, run_ga(scenario, spec, replace(ga, rng_seed=seed))


def _task(args) -> SweepRow:
    param, value, overrides, problem, seed, ga, fixed_epsilon, label = args
    _, res = run_point(overrides, problem, seed, ga, fixed_epsilon)
    obj = res.record.objective if res.feasible else 0.0
    return SweepRow(param, value, res.spec.scheme, label or problem, seed, float(obj), res.runtime_s,
                    res.feasible, tuple(res.trace))


def worker_count(workers: int | None = None) -> int:
    if workers is not None:
        return max(1, workers)
    env = os.environ.get("RVS_THREADS")
    return max(1, int(env)) if env else 1


def _execute(tasks: list, workers: int | None) -> list[SweepRow]:
    n = worker_count(workers)
    if n == 1 or len(tasks) == 1:
        return [_task(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=min(n, len(tasks))) as pool:
        return list(pool.map(_task, tasks))


def replicate(overrides: Mapping[str, Any], problem: str, seeds: Sequence[int], ga: GaConfig = GaConfig(),
              fixed_epsilon: float | None = None, workers: int | None = None,
              param: str = "-", value: Any = "-") -> list[SweepRow]:
    """One row per seed for a single scenario description and problem."""
    label = BASELINE_LABEL if fixed_epsilon is not None else None
    tasks = [(param, value, dict(overrides), problem, s, ga, fixed_epsilon, label) for s in seeds]
    return _execute(tasks, workers)


def sweep(spec: SweepSpec, workers: int | None = None) -> SweepResult:
    """Run the GA for every (value, problem, seed) of ``spec``.

    Worker processes (``workers`` or the RVS_THREADS variable) change only
    wall-clock time; the rows are identical and sorted by key.
    """
    key = override_key(spec.param)
    tasks = [
        (spec.param, v, {**spec.fixed, key: v}, p, s, spec.ga, None, None)
        for v in spec.values for p in spec.problems for s in spec.seeds
    ]
    return SweepResult(_execute(tasks, workers))


def fixed_power_baseline(overrides: Mapping[str, Any], config: GaConfig = GaConfig(),
                         seeds: Sequence[int] = tuple(range(10)), epsilon: float = 0.6,
                         workers: int | None = None) -> SweepResult:
    """Full P2 against P2 with epsilon frozen at ``epsilon``, on identical seeds.

    Rows carry problem ``P2`` and ``P2-fixed``; ``value`` is ``optimized`` or
    the frozen epsilon.
    """
    tasks = []
    for s in seeds:
        tasks.append(("epsilon", "optimized", dict(overrides), "P2", s, config, None, None))
        tasks.append(("epsilon", epsilon, dict(overrides), "P2", s, config, epsilon, BASELINE_LABEL))
    return SweepResult(_execute(tasks, workers))


def paired_baseline(result: SweepResult) -> list[tuple[int, float, float]]:
    """(seed, full P2, frozen-epsilon) triples."""
    full = {r.seed: r.objective for r in result.rows if r.problem == "P2"}
    frozen = {r.seed: r.objective for r in result.rows if r.problem == BASELINE_LABEL}
    return [(s, full[s], frozen[s]) for s in sorted(full) if s in frozen]


@dataclass(frozen=True)
class ConvergenceSummary:
    last_improvement: int  # generation of the last >threshold relative step (0 if none)
    plateau: bool
    generations: int
    final: float
    tail_gain: float  # relative improvement over the final ``window`` generations


def convergence_report(trace: Iterable, threshold: float = 0.01, window: int = 20) -> ConvergenceSummary:
    """Locate the last generation whose best value rose by more than ``threshold``.

    ``trace`` is a sequence of best-so-far values or of the (generation, best,
    feasible_count) tuples kept by :func:`risvlc.optimizer.run_ga`.  The run
    counts as plateaued when no such step falls in the final ``window``
    generations.  A step up from 0 counts as an improvement.
    """
    vals = [t[1] if isinstance(t, (tuple, list)) else t for t in trace]
    if not vals:
        raise ValueError("empty trace")
    t = np.asarray(vals, dtype=float)
    last = 0
    for g in range(1, len(t)):
        prev = t[g - 1]
        if (prev > 0 and t[g] > prev * (1 + threshold)) or (prev <= 0 and t[g] > prev):
            last = g
    n_gen = len(t) - 1
    ref = t[max(0, len(t) - 1 - window)]
    tail = (t[-1] - ref) / ref if ref > 0 else (math.inf if t[-1] > ref else 0.0)
    return ConvergenceSummary(last, last <= n_gen - window, n_gen, float(t[-1]), float(tail))


# -- decision-variable tables --------------------------------------------------

@dataclass
class DecisionTable:
    """Per-element association and mirror angles (degrees) plus the power split."""

    problem: str
    elements: list[tuple[int, int, float, float]]  # (k, user, omega_deg, gamma_deg), 1-based
    power: list[tuple[str, float]]
    objective: float | None = None

    def to_csv(self, manifest_hash: str | None = None) -> str:
        buf = io.StringIO()
        if manifest_hash:
            buf.write(f"# manifest={manifest_hash}\n")
        buf.write(f"# problem={self.problem}\n")
        if self.objective is not None:
            buf.write(f"# objective={self.objective!r}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(("k", "user", "omega_deg", "gamma_deg"))
        for k, u, om, ga in self.elements:
            w.writerow([k, u, repr(om), repr(ga)])
        buf.write("\n")
        w.writerow(("power", "value"))
        for name, v in self.power:
            w.writerow([name, repr(v)])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "DecisionTable":
        problem, objective = None, None
        body = []
        for ln in text.splitlines():
            if ln.startswith("# problem="):
                problem = ln.split("=", 1)[1]
            elif ln.startswith("# objective="):
                objective = float(ln.split("=", 1)[1])
            elif not ln.startswith("#"):
                body.append(ln)
        split = body.index("")
        elems = [(int(r["k"]), int(r["user"]), float(r["omega_deg"]), float(r["gamma_deg"]))
                 for r in csv.DictReader(body[:split])]
        power = [(r["power"], float(r["value"])) for r in csv.DictReader(body[split + 1:])]
        if problem is None:
            raise ValueError("missing '# problem=' line")
        return cls(problem, elems, power, objective)

    def chromosome(self, scenario: Scenario) -> Population:
        """Genome that decodes to this table (RSMA powers are already on budget)."""
        spec = ProblemSpec(self.problem)
        assoc = np.array([[u - 1 for _, u, _, _ in self.elements]], dtype=int)
        omega = np.array([[om * DEG for _, _, om, _ in self.elements]])
        gamma = np.array([[ga * DEG for _, _, _, ga in self.elements]])
        d = dict(self.power)
        if spec.scheme == "RSMA":
            power = [d["P0"]] + [d[f"P{u + 1}"] for u in range(scenario.U)]
        else:
            power = [d["epsilon"]]
        return Population(assoc, omega, gamma, np.array([power], dtype=float))


def decision_variable_dump(best: Population, scenario: Scenario, spec: ProblemSpec,
                           objective: float | None = None) -> DecisionTable:
    G, poses, alloc = decode(best, scenario, spec)
    users = np.argmax(G, axis=1) + 1
    elems = [(p.index + 1, int(users[p.index]), p.omega / DEG, p.gamma / DEG) for p in poses]
    if isinstance(alloc, NomaPowerAllocation):
        power = [("epsilon", float(alloc.epsilon))] + [(f"c{u + 1}", float(c)) for u, c in enumerate(alloc.c)]
    else:
        power = [("P0", float(alloc.P0))] + [(f"P{u + 1}", float(p)) for u, p in enumerate(alloc.P)]
    return DecisionTable(spec.problem, elems, power, objective)


def reevaluate(table: DecisionTable, scenario: Scenario) -> float:
    """Objective of a parsed decision table on ``scenario``."""
    return evaluate(table.chromosome(scenario), scenario, ProblemSpec(table.problem)).objective
