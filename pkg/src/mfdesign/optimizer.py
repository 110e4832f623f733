"""Success-history adaptive differential evolution with linear population
size reduction, for minimizing a black-box fitness over the 3-D design box.

The canonical formulation is used: current-to-pbest/1 mutation with an
external archive, binomial crossover, per-individual F ~ Cauchy(mu_F, 0.1)
resampled into (0, 1] and CR ~ Normal(mu_CR, 0.1) clipped to [0, 1] with
memory-indexed means, and midpoint repair of out-of-bounds trial
coordinates. The fitness threshold is checked on every evaluation, so a run
can stop mid-generation.
"""

from dataclasses import dataclass

import numpy as np

from .data import Bounds, LaserParams

TERMINATED_THRESHOLD = "threshold"
TERMINATED_BUDGET = "budget"


@dataclass(frozen=True)
class DEConfig:
    """Run configuration; defaults follow the published low-budget setup."""

    max_evals: int = 25
    fitness_threshold: float = 2.0
    init_pop_size: int = 10
    min_pop_size: int = 4
    archive_factor: float = 2.0
    history_size: int = 6
    p_best_fraction: float = 0.11
    seed: int = 0

    def __post_init__(self):
        if self.init_pop_size < 4:
            raise ValueError(f"init_pop_size must be >= 4, got {self.init_pop_size}")
        if not 0 < self.p_best_fraction <= 1:
            raise ValueError(
                f"p_best_fraction must be in (0, 1], got {self.p_best_fraction}"
            )
        if self.max_evals < self.init_pop_size:
            raise ValueError(
                f"max_evals ({self.max_evals}) must cover the initial "
                f"population ({self.init_pop_size})"
            )
        if not 2 <= self.min_pop_size <= self.init_pop_size:
            raise ValueError(
                f"min_pop_size must be in [2, init_pop_size], got {self.min_pop_size}"
            )
        if self.history_size < 1:
            raise ValueError(f"history_size must be >= 1, got {self.history_size}")


@dataclass
class OptResult:
    best_x: LaserParams
    best_fitness: float
    evals_used: int
    terminated_by: str


def population_schedule(cfg: DEConfig, evals_so_far: int) -> int:
    """Target population size: linear from init_pop_size down to min_pop_size."""
    if not 0 <= evals_so_far <= cfg.max_evals:
        raise ValueError(f"evals_so_far must be in [0, {cfg.max_evals}]")
    frac = evals_so_far / cfg.max_evals
    return int(round(cfg.init_pop_size + (cfg.min_pop_size - cfg.init_pop_size) * frac))


def _sample_f(rng, mu):
    f = mu + 0.1 * rng.standard_cauchy()
    while f <= 0.0:
        f = mu + 0.1 * rng.standard_cauchy()
    return min(f, 1.0)


def lshade_minimize(fitness, bounds: Bounds, cfg: DEConfig, warm_starts=()):
    """Minimize fitness(LaserParams) -> float over the bounded box.

    warm_starts occupy the first slots of the initial population; remaining
    slots are filled uniformly at random. Every point handed to the fitness
    function lies within bounds. A non-finite fitness value is treated as
    worst rather than raising. The run stops at the first evaluation whose
    fitness falls strictly below the threshold, or when the evaluation
    budget is spent; the reported best is the best point evaluated so far.
    """
    rng = np.random.default_rng(cfg.seed)
    lb, ub = bounds.lower, bounds.upper

    warm = [np.asarray(w, dtype=np.float64) for w in warm_starts]
    for w in warm:
        if w.shape != (3,):
            raise ValueError(f"warm start must be a parameter triple, got shape {w.shape}")
        if not bounds.contains(w):
            raise ValueError(f"warm start {w} outside bounds")
    warm = warm[: cfg.init_pop_size]

    pop = np.empty((cfg.init_pop_size, 3))
    if warm:
        pop[: len(warm)] = warm
    if len(warm) < cfg.init_pop_size:
        pop[len(warm):] = rng.uniform(
            lb, ub, size=(cfg.init_pop_size - len(warm), 3)
        )

    state = {"evals": 0, "best_x": None, "best_f": np.inf}

    def evaluate(x):
        f = float(fitness(LaserParams.from_array(x)))
        if not np.isfinite(f):
            f = np.inf
        state["evals"] += 1
        if f < state["best_f"]:
            state["best_f"] = f
            state["best_x"] = x.copy()
        return f

    def result(reason):
        return OptResult(
            best_x=LaserParams.from_array(state["best_x"]),
            best_fitness=state["best_f"],
            evals_used=state["evals"],
            terminated_by=reason,
        )

    fit = np.empty(cfg.init_pop_size)
    for i in range(cfg.init_pop_size):
        fit[i] = evaluate(pop[i])
        if fit[i] < cfg.fitness_threshold:
            return result(TERMINATED_THRESHOLD)
        if state["evals"] >= cfg.max_evals:
            return result(TERMINATED_BUDGET)

    mem_f = np.full(cfg.history_size, 0.5)
    mem_cr = np.full(cfg.history_size, 0.5)
    mem_pos = 0
    archive = []

    def trim_archive(limit):
        while len(archive) > limit:
            archive.pop(int(rng.integers(len(archive))))

    while state["evals"] < cfg.max_evals:
        ps = pop.shape[0]
        order = np.argsort(fit, kind="stable")
        p_size = min(ps, max(2, round(cfg.p_best_fraction * ps)))
        arch_limit = int(round(cfg.archive_factor * ps))
        new_pop = pop.copy()
        new_fit = fit.copy()
        ok_f, ok_cr, deltas = [], [], []

        for i in range(ps):
            if state["evals"] >= cfg.max_evals:
                break
            r = int(rng.integers(cfg.history_size))
            f_scale = _sample_f(rng, mem_f[r])
            cr = float(np.clip(rng.normal(mem_cr[r], 0.1), 0.0, 1.0))

            pbest = pop[order[int(rng.integers(p_size))]]
            r1 = int(rng.integers(ps))
            while r1 == i:
                r1 = int(rng.integers(ps))
            r2 = int(rng.integers(ps + len(archive)))
            while r2 == i or r2 == r1:
                r2 = int(rng.integers(ps + len(archive)))
            other = pop[r2] if r2 < ps else archive[r2 - ps]

            v = pop[i] + f_scale * (pbest - pop[i]) + f_scale * (pop[r1] - other)
            v = np.where(v < lb, (lb + pop[i]) / 2.0, v)
            v = np.where(v > ub, (ub + pop[i]) / 2.0, v)

            mask = rng.random(3) <= cr
            mask[int(rng.integers(3))] = True
            trial = np.where(mask, v, pop[i])

            f_trial = evaluate(trial)
            if f_trial < cfg.fitness_threshold:
                return result(TERMINATED_THRESHOLD)
            if f_trial <= fit[i]:
                if f_trial < fit[i]:
                    ok_f.append(f_scale)
                    ok_cr.append(cr)
                    deltas.append(fit[i] - f_trial)
                    archive.append(pop[i].copy())
                    trim_archive(arch_limit)
                new_pop[i] = trial
                new_fit[i] = f_trial

        pop, fit = new_pop, new_fit

        if ok_f:
            w = np.asarray(deltas)
            w = w / w.sum()
            sf = np.asarray(ok_f)
            mem_f[mem_pos] = float((w * sf**2).sum() / (w * sf).sum())
            mem_cr[mem_pos] = float((w * np.asarray(ok_cr)).sum())
            mem_pos = (mem_pos + 1) % cfg.history_size

        target = population_schedule(cfg, state["evals"])
        if target < pop.shape[0]:
            keep = np.sort(np.argsort(fit, kind="stable")[:target])
            pop, fit = pop[keep], fit[keep]
        trim_archive(int(round(cfg.archive_factor * pop.shape[0])))

    return result(TERMINATED_BUDGET)
