"""NSGA-II search over swarm design parameters.

A 19-bit genotype encodes the lander count, required degree and the two
force constants. Each phenotype is scored by running coverage to
settlement, killing 10% of the landers, letting the survivors settle again
and measuring four normalized objectives: area, degree, settling time and
energy (hop count). Selection uses non-dominated sorting with crowding
distance; the weighted scalar of the four objectives is reported alongside.
"""

from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import swarm

log = logging.getLogger(__name__)

GENOME_BITS = 19
FIELDS = {"N": (0, 7), "D": (7, 10), "C_cov": (10, 14), "C_com": (14, 19)}
WEIGHTS = (0.5, 0.25, 0.125, 0.125)
ATTRITION = 0.10
AREA_SIDE = 30.0
R_C = 5.0
MAX_STEPS = 3000

Genotype = tuple


def validate_genotype(bits: Sequence[int]) -> Genotype:
    g = tuple(int(b) for b in bits)
    if len(g) != GENOME_BITS or any(b not in (0, 1) for b in g):
        raise ValueError(f"a genotype is exactly {GENOME_BITS} bits in {{0, 1}}")
    return g


def _field_value(g: Genotype, name: str) -> int:
    lo, hi = FIELDS[name]
    return int("".join(map(str, g[lo:hi])), 2)


def encode(raw_N: int, raw_D: int, raw_Ccov: int, raw_Ccom: int) -> Genotype:
    """Pack raw unsigned field values into a genotype."""
    bits: list[int] = []
    for name, raw in zip(FIELDS, (raw_N, raw_D, raw_Ccov, raw_Ccom)):
        lo, hi = FIELDS[name]
        width = hi - lo
        if not 0 <= raw < 2**width:
            raise ValueError(f"{name} field value {raw} does not fit in {width} bits")
        bits.extend(int(c) for c in format(raw, f"0{width}b"))
    return tuple(bits)


@dataclass(frozen=True)
class Phenotype:
    N: int
    D: int
    C_cov: float
    C_com: float

    @property
    def C_obs(self) -> float:
        return self.C_cov

    def params(self, R_c: float = R_C) -> swarm.VirtualForceParams:
        return swarm.VirtualForceParams(C_cov=self.C_cov, C_com=self.C_com, C_obs=self.C_obs, R_c=R_c, D=self.D)


def decode(g: Sequence[int]) -> Phenotype:
    """Map a genotype to swarm parameters.

    N = max(2, raw), D = raw + 1, C_cov = 0.5 (raw + 1), C_com = 0.05 (raw + 1).
    """
    g = validate_genotype(g)
    return Phenotype(
        N=max(2, _field_value(g, "N")),
        D=_field_value(g, "D") + 1,
        C_cov=0.5 * (_field_value(g, "C_cov") + 1),
        C_com=0.05 * (_field_value(g, "C_com") + 1),
    )


DEFAULT_PHENOTYPE = Phenotype(N=40, D=3, C_cov=1.0, C_com=0.2)
DEFAULT_GENOTYPE = encode(40, 2, 1, 3)


@dataclass(frozen=True)
class FitnessVector:
    A_n: float
    D_n: float
    T_n: float
    E_n: float

    @property
    def objectives(self) -> tuple[float, float, float, float]:
        return (self.A_n, self.D_n, self.T_n, self.E_n)

    @property
    def overall(self) -> float:
        return overall_fitness(self)


def overall_fitness(f: FitnessVector | Sequence[float]) -> float:
    comps = f.objectives if isinstance(f, FitnessVector) else tuple(f)
    return float(sum(w * c for w, c in zip(WEIGHTS, comps)))


@dataclass(frozen=True)
class Measurement:
    """Raw post-attrition outcome averaged over evaluation seeds."""

    area: float
    degree: float
    steps: float
    hops: float
    settled: bool


@dataclass(frozen=True)
class Baseline:
    t_40: float
    e_40: float

    def __post_init__(self):
        if not (self.t_40 > 0 and self.e_40 > 0):
            raise ValueError("baseline time and energy must be positive")


def _clamp01(x: float) -> float:
    return min(1.0, max(0.0, x))


def measure(p: Phenotype, seeds: Iterable[int], *, area_side: float = AREA_SIDE, R_c: float = R_C,
            max_steps: int = MAX_STEPS, deploy_side: float = swarm.DEFAULT_DEPLOY_SIDE) -> Measurement:
    """Deploy, settle, remove 10% of the landers at random, settle again; average over seeds."""
    params = p.params(R_c)
    rows = []
    settled = True
    for seed in seeds:
        rng = np.random.default_rng(seed)
        init = swarm.random_deployment(p.N, rng, deploy_side)
        mid, _, m1 = swarm.run_coverage(init, params, max_steps=max_steps, area_side=area_side, record=False)
        kill = rng.choice(p.N, size=math.ceil(ATTRITION * p.N), replace=False)
        survivors = mid.without(kill)
        _, _, m2 = swarm.run_coverage(survivors, params, max_steps=max_steps, area_side=area_side, record=False)
        settled = settled and m1.settled and m2.settled
        rows.append((m2.area, m2.mean_degree, m1.t_settle + m2.t_settle, m1.hops_total + m2.hops_total))
    if not rows:
        raise ValueError("at least one evaluation seed is required")
    a, d, t, e = np.mean(rows, axis=0)
    return Measurement(float(a), float(d), float(t), float(e), settled)


def make_baseline(seeds: Iterable[int], **kw) -> Baseline:
    """Settling time and hop count of the 40-lander reference swarm."""
    m = measure(DEFAULT_PHENOTYPE, seeds, **kw)
    return Baseline(t_40=m.steps, e_40=m.hops)


def normalize(m: Measurement, p: Phenotype, baseline: Baseline, area_side: float = AREA_SIDE) -> FitnessVector:
    A_n = _clamp01(m.area / area_side**2)
    D_n = _clamp01(m.degree / p.D)
    # (t40 - (t - t40)) / t40; unsettled runs score zero on time
    T_n = _clamp01(2.0 - m.steps / baseline.t_40) if m.settled else 0.0
    E_n = _clamp01(2.0 - m.hops / baseline.e_40)
    return FitnessVector(A_n, D_n, T_n, E_n)


def evaluate(p: Phenotype, baseline: Baseline, seeds: Iterable[int] | int, **kw) -> FitnessVector:
    """Normalized fitness of one phenotype.

    Raw measurements are averaged over the seeds before normalizing, so the
    reference phenotype scored against its own baseline on the same seeds
    gets T_n = E_n = 1 exactly.
    """
    if isinstance(seeds, (int, np.integer)):
        seeds = [int(seeds)]
    area_side = kw.get("area_side", AREA_SIDE)
    return normalize(measure(p, seeds, **kw), p, baseline, area_side)


# --------------------------------------------------------------------------
# NSGA-II machinery
# --------------------------------------------------------------------------

@dataclass
class Individual:
    genotype: Genotype
    fitness: FitnessVector | None = None
    rank: int = 0
    crowding: float = 0.0

    @property
    def objectives(self) -> tuple[float, ...]:
        return self.fitness.objectives

    @property
    def overall(self) -> float:
        return self.fitness.overall


def _objective_matrix(pop) -> np.ndarray:
    rows = [ind.objectives if hasattr(ind, "objectives") else tuple(ind) for ind in pop]
    return np.asarray(rows, dtype=float).reshape(len(rows), -1)


def dominates(a: Sequence[float], b: Sequence[float]) -> bool:
    """True when ``a`` is at least as good everywhere and strictly better somewhere (maximization)."""
    a = np.asarray(a)
    b = np.asarray(b)
    return bool(np.all(a >= b) and np.any(a > b))


def non_dominated_sort(pop) -> list[list[int]]:
    """Fast non-dominated sort; returns fronts as lists of indices into ``pop``.

    ``pop`` may hold Individuals or plain objective vectors; all objectives
    are maximized.
    """
    F = _objective_matrix(pop)
    n = len(F)
    if n == 0:
        return []
    ge = np.all(F[:, None, :] >= F[None, :, :], axis=2)
    gt = np.any(F[:, None, :] > F[None, :, :], axis=2)
    dom = ge & gt  # dom[i, j]: i dominates j
    count = dom.sum(axis=0)
    fronts = []
    current = [i for i in range(n) if count[i] == 0]
    while current:
        fronts.append(current)
        nxt = []
        for i in current:
            for j in np.nonzero(dom[i])[0]:
                count[j] -= 1
                if count[j] == 0:
                    nxt.append(int(j))
        current = sorted(nxt)
    return fronts


def crowding_distance(front) -> np.ndarray:
    """Crowding distance of each member of one front (boundary members are infinite)."""
    F = _objective_matrix(front)
    n = len(F)
    if n == 0:
        raise ValueError("crowding distance needs a non-empty front")
    dist = np.zeros(n)
    if n <= 2:
        return np.full(n, np.inf)
    for k in range(F.shape[1]):
        order = np.argsort(F[:, k], kind="stable")
        vals = F[order, k]
        dist[order[0]] = dist[order[-1]] = np.inf
        span = vals[-1] - vals[0]
        if span <= 0:
            continue
        dist[order[1:-1]] += (vals[2:] - vals[:-2]) / span
    return dist


def assign_rank_and_crowding(pop: list[Individual]) -> list[list[int]]:
    fronts = non_dominated_sort(pop)
    for r, front in enumerate(fronts, start=1):
        cd = crowding_distance([pop[i] for i in front])
        for i, c in zip(front, cd):
            pop[i].rank = r
            pop[i].crowding = float(c)
    return fronts


def _better(a: Individual, b: Individual) -> bool:
    return (a.rank, -a.crowding) <= (b.rank, -b.crowding)


def _tournament(pop: Sequence[Individual], rng: np.random.Generator) -> Individual:
    i, j = rng.integers(len(pop), size=2)
    return pop[i] if _better(pop[i], pop[j]) else pop[j]


def mutate(g: Genotype, p_mut: float, rng: np.random.Generator) -> Genotype:
    """With probability ``p_mut`` flip one uniformly chosen bit."""
    if rng.random() < p_mut:
        k = int(rng.integers(GENOME_BITS))
        g = g[:k] + (1 - g[k],) + g[k + 1:]
    return g


def make_offspring(parents: Sequence[Individual], p_cross: float, p_mut: float,
                   rng: np.random.Generator | int | None) -> list[Genotype]:
    """Binary tournament, single-point crossover and one-bit mutation; returns len(parents) genotypes."""
    if not (0 <= p_cross <= 1 and 0 <= p_mut <= 1):
        raise ValueError("probabilities must lie in [0, 1]")
    rng = np.random.default_rng(rng)
    out: list[Genotype] = []
    while len(out) < len(parents):
        a = _tournament(parents, rng).genotype
        b = _tournament(parents, rng).genotype
        if rng.random() < p_cross:
            cut = int(rng.integers(1, GENOME_BITS))
            a, b = a[:cut] + b[cut:], b[:cut] + a[cut:]
        out.append(mutate(a, p_mut, rng))
        if len(out) < len(parents):
            out.append(mutate(b, p_mut, rng))
    return out


def select(pool: list[Individual], m: int) -> list[Individual]:
    """Environmental selection of ``m`` survivors by (rank, crowding, genotype).

    The individual with the best weighted overall fitness always survives.
    """
    assign_rank_and_crowding(pool)
    ordered = sorted(pool, key=lambda ind: (ind.rank, -ind.crowding, ind.genotype))
    chosen = ordered[:m]
    champion = max(pool, key=lambda ind: (ind.overall, tuple(-b for b in ind.genotype)))
    if all(ind is not champion for ind in chosen):
        chosen[-1] = champion
    return chosen


# --------------------------------------------------------------------------
# Campaign
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class CampaignConfig:
    pop_size: int = 50
    generations: int = 40
    p_crossover: float = 0.8
    p_mutation: float = 0.2
    eval_seeds: tuple[int, ...] = (0, 1, 2)
    master_seed: int = 0
    area_side: float = AREA_SIDE
    r_c: float = R_C
    max_steps: int = MAX_STEPS

    def __post_init__(self):
        if self.pop_size < 4 or self.pop_size % 2:
            raise ValueError("pop_size must be an even number of at least 4")
        if self.generations < 1:
            raise ValueError("generations must be at least 1")
        if not self.eval_seeds:
            raise ValueError("eval_seeds must not be empty")


@dataclass(frozen=True)
class GenerationStats:
    gen: int
    mean_An: float
    mean_Dn: float
    mean_Tn: float
    mean_En: float
    best_overall: float
    best: Phenotype
    best_genotype: Genotype

    def row(self) -> list:
        return [self.gen, self.mean_An, self.mean_Dn, self.mean_Tn, self.mean_En, self.best_overall,
                self.best.N, self.best.D, self.best.C_cov, self.best.C_com]


@dataclass
class CampaignResult:
    history: list[GenerationStats]
    population: list[Individual]
    baseline: Baseline
    evaluations: int = 0
    cache: dict = field(default_factory=dict, repr=False)

    @property
    def best(self) -> Individual:
        return max(self.population, key=lambda ind: ind.overall)

    def pareto_front(self) -> list[Individual]:
        fronts = non_dominated_sort(self.population)
        seen = set()
        out = []
        for i in fronts[0]:
            ind = self.population[i]
            if ind.genotype not in seen:
                seen.add(ind.genotype)
                out.append(ind)
        return out

    def write_history_csv(self, path: str | Path) -> None:
        """One row per generation after the initial population."""
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["gen", "mean_An", "mean_Dn", "mean_Tn", "mean_En", "best_overall",
                        "best_N", "best_D", "best_Ccov", "best_Ccom"])
            for h in self.history[1:]:
                w.writerow(h.row())

    def write_pareto_json(self, path: str | Path) -> None:
        front = []
        for ind in self.pareto_front():
            p = decode(ind.genotype)
            f = ind.fitness
            front.append({
                "genotype": "".join(map(str, ind.genotype)),
                "N": p.N, "D": p.D, "C_cov": p.C_cov, "C_com": p.C_com,
                "A_n": f.A_n, "D_n": f.D_n, "T_n": f.T_n, "E_n": f.E_n, "overall": f.overall,
            })
        payload = {
            "baseline": {"t_40": self.baseline.t_40, "e_40": self.baseline.e_40},
            "pareto_front": front,
        }
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")


def _stats(gen: int, pop: list[Individual]) -> GenerationStats:
    objs = _objective_matrix(pop)
    best = max(pop, key=lambda ind: (ind.overall, tuple(-b for b in ind.genotype)))
    means = objs.mean(axis=0)
    return GenerationStats(gen, *map(float, means), best.overall, decode(best.genotype), best.genotype)


def run_nsga2(cfg: CampaignConfig, baseline: Baseline | None = None) -> CampaignResult:
    """Elitist (M + M) NSGA-II loop; history[0] describes the initial population."""
    rng = np.random.default_rng(cfg.master_seed)
    sim_kw = {"area_side": cfg.area_side, "R_c": cfg.r_c, "max_steps": cfg.max_steps}
    if baseline is None:
        baseline = make_baseline(cfg.eval_seeds, **sim_kw)
    log.info("baseline t_40=%.1f e_40=%.1f", baseline.t_40, baseline.e_40)
    cache: dict[Genotype, FitnessVector] = {}

    def fitness(g: Genotype) -> FitnessVector:
        if g not in cache:
            cache[g] = evaluate(decode(g), baseline, cfg.eval_seeds, **sim_kw)
        return cache[g]

    pop = [Individual(tuple(int(b) for b in rng.integers(0, 2, GENOME_BITS))) for _ in range(cfg.pop_size)]
    for ind in pop:
        ind.fitness = fitness(ind.genotype)
    assign_rank_and_crowding(pop)
    history = [_stats(0, pop)]
    for gen in range(1, cfg.generations + 1):
        children = [Individual(g) for g in make_offspring(pop, cfg.p_crossover, cfg.p_mutation, rng)]
        for ind in children:
            ind.fitness = fitness(ind.genotype)
        pop = select(pop + children, cfg.pop_size)
        history.append(_stats(gen, pop))
        log.info("gen %d best overall %.4f (%s)", gen, history[-1].best_overall, history[-1].best)
    return CampaignResult(history, pop, baseline, len(cache), cache)
