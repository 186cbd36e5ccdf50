"""Genetic-algorithm solver for the four max-min secrecy problems.

A population is stored as a handful of arrays with a leading individual axis
(:class:`Population`); a single chromosome is simply a population of one.
Genes per individual:

* ``assoc`` -- K integers in [0, U), the user served by each RIS element
  (a one-hot row of the association matrix, so each element serves exactly
  one user by construction);
* ``omega``, ``gamma`` -- K roll and K yaw angles in [-pi/2, pi/2];
* ``power`` -- RSMA: U + 1 powers (P0, P_1..P_U) in [0, P_S], rescaled onto
  the budget when decoded; NOMA: the single coefficient epsilon in (0.5, 1];
  empty when epsilon is frozen.

Only the per-user minimum-rate constraints can be violated; they drive the
feasibility indicator and feasibility-first ranking.
"""

from __future__ import annotations

import heapq
import math
import time
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .channel import ChannelGeometry, ChannelState, assemble_channels, poses_from_angles
from .rates import (
    NomaPowerAllocation,
    RsmaPowerAllocation,
    noma_coefficients,
    noma_rates_batch,
    noma_report,
    rsma_rates_batch,
    rsma_report,
    total_power,
)
from .scenario import Scenario

HALF_PI = math.pi / 2
EPS_LOW = float(np.nextafter(0.5, 1.0))

PROBLEMS = {
    "P1": ("RSMA", "SR"),
    "P2": ("NOMA", "SR"),
    "P3": ("RSMA", "SEE"),
    "P4": ("NOMA", "SEE"),
}


class BudgetExceeded(RuntimeError):
    """Exhaustive enumeration larger than the allowed budget."""


@dataclass(frozen=True)
class ProblemSpec:
    problem: str = "P1"
    fixed_epsilon: float | None = None  # NOMA only: freeze the power split
    common_rate: str = "per_user"  # RSMA common-stream rate: "per_user" or "min"

    def __post_init__(self):
        if self.problem not in PROBLEMS:
            raise ValueError(f"unknown problem {self.problem!r}; expected one of {sorted(PROBLEMS)}")
        if self.fixed_epsilon is not None:
            if self.scheme != "NOMA":
                raise ValueError("fixed_epsilon only applies to NOMA problems")
            noma_coefficients(self.fixed_epsilon, 1)  # range check

    @property
    def scheme(self) -> str:
        return PROBLEMS[self.problem][0]

    @property
    def objective(self) -> str:
        return PROBLEMS[self.problem][1]

    def n_power_genes(self, U: int) -> int:
        if self.scheme == "RSMA":
            return U + 1
        return 0 if self.fixed_epsilon is not None else 1


def decision_variable_count(K: int, U: int, scheme: str) -> int:
    """Number of decision variables counting the association as U*K binaries."""
    return U * K + 2 * K + (1 + U if scheme == "RSMA" else 1)


@dataclass(frozen=True)
class GaConfig:
    population: int = 150
    generations: int = 100
    crossover_prob: float = 0.9
    mutation_prob: float | None = None  # None -> 1 / genome length
    tournament_size: int = 3
    elite_count: int = 2
    pairs_per_generation: int | None = None  # None -> population // 2
    mutation_sigma: float = 0.1  # fraction of each real gene's range
    rng_seed: int = 0

    def __post_init__(self):
        if self.population < 2:
            raise ValueError("population must be >= 2")
        if self.generations < 0:
            raise ValueError("generations must be >= 0")
        for name in ("crossover_prob", "mutation_prob"):
            v = getattr(self, name)
            if v is not None and not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v}")
        if self.tournament_size < 1:
            raise ValueError("tournament_size must be >= 1")
        if not 0 <= self.elite_count < self.population:
            raise ValueError("elite_count must lie in [0, population)")

    @property
    def n_pairs(self) -> int:
        return self.pairs_per_generation or max(1, self.population // 2)


@dataclass(frozen=True)
class GridSpec:
    """Discrete values for the real genes (angles and power genes)."""

    angles: tuple[float, ...]
    power: tuple[float, ...]

    @classmethod
    def uniform(cls, scenario: Scenario, spec: ProblemSpec, n_angle: int = 5, n_power: int = 5) -> "GridSpec":
        angles = tuple(np.linspace(-HALF_PI, HALF_PI, n_angle))
        if spec.scheme == "RSMA":
            power = tuple(np.linspace(0.0, scenario.params.P_S, n_power))
        else:
            power = tuple(np.linspace(0.6, 1.0, n_power))
        return cls(angles, power)


@dataclass
class Population:
    assoc: np.ndarray  # (N, K) int
    omega: np.ndarray  # (N, K)
    gamma: np.ndarray  # (N, K)
    power: np.ndarray  # (N, P)

    def __len__(self) -> int:
        return len(self.assoc)

    @property
    def n_genes(self) -> int:
        return 3 * self.assoc.shape[1] + self.power.shape[1]

    def take(self, idx) -> "Population":
        idx = np.atleast_1d(idx)
        return Population(self.assoc[idx], self.omega[idx], self.gamma[idx], self.power[idx])

    def copy(self) -> "Population":
        return Population(self.assoc.copy(), self.omega.copy(), self.gamma.copy(), self.power.copy())

    def put(self, idx, other: "Population") -> None:
        self.assoc[idx] = other.assoc
        self.omega[idx] = other.omega
        self.gamma[idx] = other.gamma
        self.power[idx] = other.power

    @staticmethod
    def concat(parts: Sequence["Population"]) -> "Population":
        return Population(*(np.concatenate([getattr(p, f) for p in parts]) for f in ("assoc", "omega", "gamma", "power")))

    def same_shape(self, other: "Population") -> bool:
        return all(getattr(self, f).shape[1:] == getattr(other, f).shape[1:] for f in ("assoc", "omega", "gamma", "power"))


def genome_length(K: int, U: int, spec: ProblemSpec) -> int:
    """Stored genes per chromosome (association kept as K integers)."""
    return 3 * K + spec.n_power_genes(U)


def power_bounds(scenario: Scenario, spec: ProblemSpec) -> tuple[float, float]:
    return (0.0, scenario.params.P_S) if spec.scheme == "RSMA" else (EPS_LOW, 1.0)


def random_population(scenario: Scenario, spec: ProblemSpec, n: int, rng: np.random.Generator,
                      grid: GridSpec | None = None) -> Population:
    K, U = scenario.K, scenario.U
    n_p = spec.n_power_genes(U)
    assoc = rng.integers(0, U, size=(n, K))
    if grid is None:
        omega = rng.uniform(-HALF_PI, HALF_PI, size=(n, K))
        gamma = rng.uniform(-HALF_PI, HALF_PI, size=(n, K))
        lo, hi = power_bounds(scenario, spec)
        power = rng.uniform(lo, hi, size=(n, n_p))
    else:
        a, pw = np.asarray(grid.angles), np.asarray(grid.power)
        omega = a[rng.integers(0, len(a), size=(n, K))]
        gamma = a[rng.integers(0, len(a), size=(n, K))]
        power = pw[rng.integers(0, len(pw), size=(n, n_p))]
    return Population(assoc, omega, gamma, power)


def _rsma_powers(power: np.ndarray, P_S: float) -> np.ndarray:
    """Scale each row onto {sum <= P_S} by min(1, P_S / sum)."""
    s = power.sum(axis=1, keepdims=True)
    scale = np.where(s > P_S, P_S / np.where(s > 0, s, 1.0), 1.0)
    return power * scale


def decode(chromosome: Population, scenario: Scenario, spec: ProblemSpec):
    """Association matrix, RIS poses and power allocation of a single chromosome."""
    if len(chromosome) != 1:
        raise ValueError("decode expects a single chromosome")
    K, U = scenario.K, scenario.U
    if chromosome.assoc.shape[1] != K or chromosome.power.shape[1] != spec.n_power_genes(U):
        raise ValueError("malformed genome for this scenario/problem")
    a = chromosome.assoc[0]
    if a.min() < 0 or a.max() >= U:
        raise ValueError("association gene out of range")
    G = np.zeros((K, U), dtype=int)
    G[np.arange(K), a] = 1
    poses = poses_from_angles(scenario, chromosome.omega[0], chromosome.gamma[0])
    if spec.scheme == "RSMA":
        p = _rsma_powers(chromosome.power, scenario.params.P_S)[0]
        alloc = RsmaPowerAllocation(float(p[0]), tuple(float(v) for v in p[1:]))
    else:
        eps = spec.fixed_epsilon if spec.fixed_epsilon is not None else float(chromosome.power[0, 0])
        alloc = NomaPowerAllocation(eps, U)
    return G, poses, alloc


@dataclass(frozen=True)
class FitnessRecord:
    objective: float
    feasible: bool
    violations: tuple[float, ...]  # per-user rate shortfall in bit/s

    @property
    def total_violation(self) -> float:
        return float(sum(self.violations))


@dataclass
class Fitness:
    """Objective / violation arrays of a whole population."""

    objective: np.ndarray
    violation: np.ndarray  # (N, U)
    user_rate: np.ndarray  # (N, U)

    @property
    def feasible(self) -> np.ndarray:
        return ~np.any(self.violation > 0, axis=1)

    @property
    def total_violation(self) -> np.ndarray:
        return self.violation.sum(axis=1)

    def __len__(self) -> int:
        return len(self.objective)

    def take(self, idx) -> "Fitness":
        idx = np.atleast_1d(idx)
        return Fitness(self.objective[idx], self.violation[idx], self.user_rate[idx])

    def put(self, idx, other: "Fitness") -> None:
        self.objective[idx] = other.objective
        self.violation[idx] = other.violation
        self.user_rate[idx] = other.user_rate

    def record(self, i: int) -> FitnessRecord:
        return FitnessRecord(float(self.objective[i]), bool(self.feasible[i]), tuple(float(v) for v in self.violation[i]))

    @staticmethod
    def concat(parts: Sequence["Fitness"]) -> "Fitness":
        return Fitness(*(np.concatenate([getattr(p, f) for p in parts]) for f in ("objective", "violation", "user_rate")))


def _objective(spec: ProblemSpec, sr, p_total: float):
    return sr if spec.objective == "SR" else sr / p_total


def evaluate(chromosome: Population, scenario: Scenario, spec: ProblemSpec,
             channels_builder: Callable[..., ChannelState] = assemble_channels) -> FitnessRecord:
    """Fitness of one chromosome through the scalar channel and rate functions."""
    G, poses, alloc = decode(chromosome, scenario, spec)
    channels = channels_builder(scenario, poses)
    if spec.scheme == "RSMA":
        rep = rsma_report(scenario, channels, G, alloc, spec.common_rate)
        user = [c + p for c, p in rep.user_rates]
    else:
        rep = noma_report(scenario, channels, G, alloc.c)
        user = list(rep.user_rates)
    viol = tuple(max(0.0, scenario.params.R_min - r) for r in user)
    obj = _objective(spec, rep.min_secrecy_rate, rep.p_total)
    return FitnessRecord(obj, all(v == 0.0 for v in viol), viol)


class Problem:
    """Vectorised fitness of whole populations for one scenario and problem."""

    def __init__(self, scenario: Scenario, spec: ProblemSpec):
        self.scenario = scenario
        self.spec = spec
        self.geometry = ChannelGeometry(scenario)
        self.p_total = total_power(scenario)
        self.evaluations = 0

    def evaluate(self, pop: Population) -> Fitness:
        sc, spec = self.scenario, self.spec
        U = sc.U
        g = self.geometry.gains(pop.omega, pop.gamma)  # (N, K, U+1)
        onehot = (pop.assoc[:, :, None] == np.arange(U)).astype(float)
        gu = np.einsum("nku,nku->nu", g[:, :, :U], onehot)
        ge = np.einsum("nk,nku->nu", g[:, :, U], onehot)
        if spec.scheme == "RSMA":
            p = _rsma_powers(pop.power, sc.params.P_S)
            user, eve = rsma_rates_batch(sc.params, gu, ge, p[:, 0], p[:, 1:], spec.common_rate)
        else:
            if spec.fixed_epsilon is not None:
                c = np.broadcast_to(noma_coefficients(spec.fixed_epsilon, U), gu.shape)
            else:
                eps = pop.power[:, :1]
                c = eps * (1.0 - eps) ** np.arange(U)
                c[:, -1] = (1.0 - eps[:, 0]) ** (U - 1)
            user, eve = noma_rates_batch(sc.params, gu, ge, c)
        sr = np.maximum(0.0, np.min(user - eve, axis=1))
        self.evaluations += len(pop)
        viol = np.maximum(0.0, sc.params.R_min - user)
        return Fitness(_objective(spec, sr, self.p_total), viol, user)


def rank_order(fit: Fitness) -> np.ndarray:
    """Indices best-first: feasible before infeasible, then higher objective;
    infeasible among themselves by smaller total violation, then objective."""
    feas = fit.feasible
    key = np.where(feas, -fit.objective, fit.total_violation)
    return np.lexsort((-fit.objective, key, ~feas))


def _positions(fit: Fitness) -> np.ndarray:
    pos = np.empty(len(fit), dtype=int)
    pos[rank_order(fit)] = np.arange(len(fit))
    return pos


def tournament_select(fit: Fitness, rng: np.random.Generator, tournament_size: int = 3,
                      n_pairs: int = 1) -> np.ndarray:
    """Parent indices of shape (n_pairs, 2); each parent wins a uniform
    tournament of ``tournament_size`` draws with replacement."""
    pos = _positions(fit)
    draws = rng.integers(0, len(fit), size=(n_pairs, 2, tournament_size))
    best = np.argmin(pos[draws], axis=2)
    return np.take_along_axis(draws, best[..., None], axis=2)[..., 0]


_SEGMENTS = ("assoc", "omega", "gamma", "power")


def crossover(a: Population, b: Population, pc: float, rng: np.random.Generator):
    """Row-wise single-point crossover applied independently per gene segment.

    With probability ``pc`` a pair is recombined; otherwise the offspring are
    clones of the parents.  Returns two offspring populations.
    """
    if len(a) != len(b) or not a.same_shape(b):
        raise ValueError("parents must share genome shape")
    n = len(a)
    do = rng.random(n) < pc
    c1, c2 = a.copy(), b.copy()
    for name in _SEGMENTS:
        x, y = getattr(a, name), getattr(b, name)
        L = x.shape[1]
        if L == 0:
            continue
        locus = rng.integers(1, L, size=n) if L > 1 else rng.integers(0, 2, size=n)
        tail = (np.arange(L)[None, :] >= locus[:, None]) & do[:, None]
        getattr(c1, name)[tail] = y[tail]
        getattr(c2, name)[tail] = x[tail]
    return c1, c2


def mutate(pop: Population, pm: float, rng: np.random.Generator, U: int,
           power_range: tuple[float, float], sigma: float = 0.1, grid: GridSpec | None = None) -> Population:
    """Per-gene mutation with probability ``pm``.

    Association genes are redrawn uniformly; real genes get Gaussian noise of
    ``sigma`` times their range and are clipped, or are redrawn from the grid
    when one is given.
    """
    out = pop.copy()
    m = rng.random(out.assoc.shape) < pm
    out.assoc[m] = rng.integers(0, U, size=int(m.sum()))
    for name, (lo, hi), values in (
        ("omega", (-HALF_PI, HALF_PI), grid.angles if grid else None),
        ("gamma", (-HALF_PI, HALF_PI), grid.angles if grid else None),
        ("power", power_range, grid.power if grid else None),
    ):
        arr = getattr(out, name)
        m = rng.random(arr.shape) < pm
        k = int(m.sum())
        if values is not None:
            arr[m] = np.asarray(values)[rng.integers(0, len(values), size=k)]
        else:
            arr[m] = np.clip(arr[m] + rng.normal(0.0, sigma * (hi - lo), size=k), lo, hi)
    return out


def replace_worst(pop: Population, fit: Fitness, offspring: Population, off_fit: Fitness,
                  protected: Sequence[int] = ()) -> np.ndarray:
    """Insert offspring in place of the lowest-ranked members (in place).

    Infeasible members go first (largest violation first); if fewer infeasible
    members than offspring exist, the lowest-objective feasible ones follow.
    Protected (elite) indices are never evicted.  Returns evicted indices.
    """
    order = rank_order(fit)[::-1]
    if len(protected):
        order = order[~np.isin(order, protected)]
    victims = order[: len(offspring)]
    pop.put(victims, offspring.take(np.arange(len(victims))))
    fit.put(victims, off_fit.take(np.arange(len(victims))))
    return victims


def replace_generation(pop: Population, fit: Fitness, kids: Population, kid_fit: Fitness,
                       protected: Sequence[int] = ()) -> None:
    """Insert offspring pairs one after another, each evicting the two
    lowest-ranked non-protected members present at that moment (in place).

    ``kids`` holds first children in its first half and their siblings in the
    second half.  Equivalent to calling :func:`replace_worst` once per pair,
    except that exact fitness ties may be broken in favour of a different
    (equally ranked) member.
    """
    J, n = len(pop), len(kids) // 2
    grank = np.empty(J + 2 * n, dtype=int)
    grank[rank_order(Fitness.concat([fit, kid_fit]))] = np.arange(J + 2 * n)
    src = np.arange(J)
    prot = set(int(i) for i in protected)
    heap = [(-grank[i], i) for i in range(J) if i not in prot]
    heapq.heapify(heap)
    for p in range(n):
        slots = [heapq.heappop(heap)[1] for _ in range(min(2, len(heap)))]
        for slot, child in zip(slots, (J + p, J + n + p)):
            src[slot] = child
            heapq.heappush(heap, (-grank[child], slot))
    changed = np.flatnonzero(src >= J)
    pop.put(changed, kids.take(src[changed] - J))
    fit.put(changed, kid_fit.take(src[changed] - J))


@dataclass
class GaResult:
    best: Population
    record: FitnessRecord
    trace: list[tuple[int, float, int]]  # (generation, best feasible objective so far, feasible count)
    evaluations: int
    spec: ProblemSpec
    config: GaConfig
    runtime_s: float = 0.0

    @property
    def feasible(self) -> bool:
        return self.record.feasible

    @property
    def best_trace(self) -> list[float]:
        return [t[1] for t in self.trace]


def run_ga(scenario: Scenario, spec: ProblemSpec, config: GaConfig = GaConfig(),
           grid: GridSpec | None = None) -> GaResult:
    """Steady-state GA with tournament selection and worst-member replacement.

    Each generation draws ``config.n_pairs`` parent pairs from the current
    population, recombines and mutates them, evaluates the offspring and
    inserts each pair in place of the two lowest-ranked non-elite members.
    The returned record is the best feasible chromosome ever seen (or the
    best infeasible one, flagged, if none was feasible).
    """
    t0 = time.perf_counter()
    problem = Problem(scenario, spec)
    s_init, s_sel, s_cx, s_mut = (np.random.default_rng(s) for s in np.random.SeedSequence(config.rng_seed).spawn(4))
    prange = power_bounds(scenario, spec)
    n_genes = genome_length(scenario.K, scenario.U, spec)
    pm = config.mutation_prob if config.mutation_prob is not None else 1.0 / n_genes

    pop = random_population(scenario, spec, config.population, s_init, grid)
    fit = problem.evaluate(pop)

    order = rank_order(fit)
    best_pop, best_fit = pop.take(order[0]), fit.take(order[0])
    trace = [(0, _trace_value(best_fit), int(fit.feasible.sum()))]

    for gen in range(1, config.generations + 1):
        elites = rank_order(fit)[: config.elite_count]
        parents = tournament_select(fit, s_sel, config.tournament_size, config.n_pairs)
        c1, c2 = crossover(pop.take(parents[:, 0]), pop.take(parents[:, 1]), config.crossover_prob, s_cx)
        c1 = mutate(c1, pm, s_mut, scenario.U, prange, config.mutation_sigma, grid)
        c2 = mutate(c2, pm, s_mut, scenario.U, prange, config.mutation_sigma, grid)
        kids = Population.concat([c1, c2])
        kid_fit = problem.evaluate(kids)
        replace_generation(pop, fit, kids, kid_fit, elites)

        top = rank_order(kid_fit)[0]
        if _better(kid_fit, top, best_fit):
            best_pop, best_fit = kids.take(top), kid_fit.take(top)
        trace.append((gen, _trace_value(best_fit), int(fit.feasible.sum())))

    return GaResult(best_pop, best_fit.record(0), trace, problem.evaluations, spec, config,
                    time.perf_counter() - t0)


def _trace_value(best: Fitness) -> float:
    return float(best.objective[0]) if best.feasible[0] else 0.0


def _better(fit: Fitness, i: int, incumbent: Fitness) -> bool:
    """True if individual ``i`` of ``fit`` strictly outranks the incumbent."""
    both = Fitness.concat([incumbent, fit.take(i)])
    return rank_order(both)[0] == 1 and not _ties(both)


def _ties(both: Fitness) -> bool:
    f = both.feasible
    if f[0] != f[1]:
        return False
    if f[0]:
        return both.objective[0] == both.objective[1]
    return both.total_violation[0] == both.total_violation[1] and both.objective[0] == both.objective[1]


@dataclass
class OracleResult:
    best: Population
    record: FitnessRecord
    evaluations: int


def oracle_size(scenario: Scenario, spec: ProblemSpec, grid: GridSpec) -> int:
    K, U = scenario.K, scenario.U
    return U**K * len(grid.angles) ** (2 * K) * len(grid.power) ** spec.n_power_genes(U)


def brute_force_oracle(scenario: Scenario, spec: ProblemSpec, grid: GridSpec,
                       budget: float = 1e8, chunk: int = 50_000) -> OracleResult:
    """Exhaustive maximum over every association and every gridded real gene."""
    K, U = scenario.K, scenario.U
    n_p = spec.n_power_genes(U)
    total = oracle_size(scenario, spec, grid)
    if total > budget:
        raise BudgetExceeded(f"{total} grid points exceed the budget of {budget:.0f}")
    shape = (U,) * K + (len(grid.angles),) * (2 * K) + (len(grid.power),) * n_p
    angles, power = np.asarray(grid.angles), np.asarray(grid.power)
    problem = Problem(scenario, spec)
    best_pop = best_fit = None
    for start in range(0, total, chunk):
        idx = np.unravel_index(np.arange(start, min(total, start + chunk)), shape)
        pop = Population(
            np.stack(idx[:K], axis=1),
            angles[np.stack(idx[K:2 * K], axis=1)],
            angles[np.stack(idx[2 * K:3 * K], axis=1)],
            power[np.stack(idx[3 * K:], axis=1)] if n_p else np.zeros((len(idx[0]), 0)),
        )
        fit = problem.evaluate(pop)
        top = rank_order(fit)[0]
        if best_fit is None or _better(fit, top, best_fit):
            best_pop, best_fit = pop.take(top), fit.take(top)
    return OracleResult(best_pop, best_fit.record(0), total)
