"""Bargaining-based power allocation across users and triplets.

The energy budget is shared by TDMA slots: user ``k`` is served at power
``P_k`` with ``sum(P_k) <= W_A / T_1``.  Within a user's slot the power of
each image's triplets is split in proportion to their priority.  The
objective is the Nash bargaining product of the users' expected match
scores, evaluated in closed form (no sampling).
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from . import linkperf, semantics
from .errors import DomainError, ParameterError
from .fading import SinrParams
from .linkperf import ModulationParams, TripletCoding
from .rng import substream

__all__ = [
    "PowerBudget",
    "UserLink",
    "Scenario",
    "AllocationResult",
    "RcgaConfig",
    "nbs_utility",
    "proportional_triplet_power",
    "project_simplex",
    "evaluate_allocation",
    "rcga_optimize",
    "naive_allocation",
    "objective_allocation",
    "simplex_grid",
    "grid_search",
]

PRIORITY_MODES = ("fused", "objective", "equal")
FEASIBILITY_RTOL = 1e-9


@dataclass(frozen=True)
class PowerBudget:
    w_a: float
    t_1: float = 1.0

    def __post_init__(self):
        if not (self.w_a > 0 and math.isfinite(self.w_a)):
            raise DomainError(f"energy budget must be positive, got {self.w_a}")
        if not (self.t_1 > 0 and math.isfinite(self.t_1)):
            raise DomainError(f"slot duration must be positive, got {self.t_1}")

    @classmethod
    def from_power(cls, p_total: float, t_1: float = 1.0) -> "PowerBudget":
        return cls(p_total * t_1, t_1)

    @property
    def p_total(self) -> float:
        return self.w_a / self.t_1


@dataclass(frozen=True)
class UserLink:
    """Physical layer of one user: channel, modulation and triplet code."""

    sinr: SinrParams
    modulation: ModulationParams = ModulationParams()
    coding: TripletCoding = TripletCoding()
    tdp_convention: str = "binomial"

    def __post_init__(self):
        if self.tdp_convention not in ("binomial", "literal"):
            raise ValueError(f"unknown tdp convention {self.tdp_convention!r}")

    def delivery(self, powers):
        """Triplet delivery probability at each per-triplet power."""
        p = np.asarray(powers, dtype=float)
        curve = linkperf.bep_curve(self.sinr.with_power(1.0), self.modulation)
        e = curve(p.ravel()).reshape(p.shape)
        return 1.0 - linkperf.tdp(e, self.coding, self.tdp_convention)


def nbs_utility(scores: Sequence[float]) -> float:
    """Nash bargaining product of the users' scores (zero disagreement point)."""
    if len(scores) < 1:
        raise ParameterError("need at least one score")
    return math.prod(float(s) for s in scores)


def proportional_triplet_power(user_power: float, priorities: Sequence[float]) -> np.ndarray:
    """Split ``user_power`` in proportion to the priorities (equal split if all are zero)."""
    if user_power < 0:
        raise DomainError("user power must be >= 0")
    p = np.asarray(priorities, dtype=float)
    if p.ndim != 1 or p.size == 0:
        raise DomainError("need a non-empty list of priorities")
    if np.any(p < 0) or np.any(~np.isfinite(p)):
        raise DomainError("priorities must be finite and >= 0")
    total = math.fsum(p)
    out = np.full(p.size, user_power / p.size) if total == 0 else user_power * (p / total)
    # push the rounding residue onto the largest share so the parts sum exactly
    out[np.argmax(out)] += user_power - math.fsum(out)
    return out


def project_simplex(x) -> np.ndarray:
    """Clamp negatives to zero and renormalise; an all-zero vector becomes uniform."""
    v = np.clip(np.asarray(x, dtype=float), 0.0, None)
    s = v.sum()
    if not s > 0 or not math.isfinite(s):
        return np.full(v.size, 1.0 / v.size)
    return v / s


class Scenario:
    """Users' links and profiles over a shared image set, with a priority rule.

    ``priority`` selects how triplet power is split inside a user's slot:
    ``fused`` (personalised, weight ``alpha`` on objective attention under
    the ``text`` convention), ``objective`` (attention only) or ``equal``.
    """

    def __init__(self, links: Sequence[UserLink], images: Sequence[semantics.ImageRecord],
                 users: Sequence[semantics.UserProfile], *, alpha: float = 0.2,
                 convention: str = "text", priority: str = "fused", threads: int = 1):
        if len(links) < 1:
            raise ParameterError("need at least one user")
        if len(links) != len(users):
            raise ParameterError(f"{len(links)} links but {len(users)} user profiles")
        if priority not in PRIORITY_MODES:
            raise ValueError(f"unknown priority mode {priority!r}; expected one of {PRIORITY_MODES}")
        if not 0.0 <= alpha <= 1.0:
            raise DomainError(f"alpha must lie in [0, 1], got {alpha}")
        ids = [img.id for img in images]
        if len(set(ids)) != len(ids):
            raise ParameterError("image ids must be unique")
        self.links = tuple(links)
        self.images = tuple(images)
        self.users = tuple(users)
        self.alpha = float(alpha)
        self.convention = convention
        self.priority = priority
        self.threads = max(1, int(threads))
        if self.threads > 1:
            with ThreadPoolExecutor(self.threads) as ex:
                self.priorities = tuple(ex.map(self._user_priorities, self.users))
        else:
            self.priorities = tuple(self._user_priorities(u) for u in self.users)
        self._matches = tuple(self._match_table(k) for k in range(self.n_users))

    @property
    def n_users(self) -> int:
        return len(self.links)

    def with_options(self, **kw) -> "Scenario":
        opts = dict(alpha=self.alpha, convention=self.convention, priority=self.priority,
                    threads=self.threads)
        opts.update(kw)
        return Scenario(self.links, self.images, self.users, **opts)

    def with_links(self, links) -> "Scenario":
        new = object.__new__(Scenario)
        new.__dict__.update(self.__dict__)
        if len(links) != self.n_users:
            raise ParameterError("link count must not change")
        new.links = tuple(links)
        return new

    def _user_priorities(self, user):
        out = []
        for img in self.images:
            if self.priority == "equal":
                p = np.ones(len(img.triplets))
            elif self.priority == "objective":
                p = np.array([semantics.objective_priority(t) for t in img.triplets])
            else:
                s = user.saliency_for(img)
                p = np.array([semantics.triplet_priority(t, s, self.alpha, self.convention)
                              for t in img.triplets])
            out.append(p)
        return tuple(out)

    def _match_table(self, k):
        """Power fractions of the query-matching triplets and their image index."""
        fracs, groups = [], []
        query = self.users[k].query
        for i, img in enumerate(self.images):
            idx = semantics.matching_triplets(img, query)
            if not idx:
                continue
            share = proportional_triplet_power(1.0, self.priorities[k][i])
            fracs.extend(share[idx])
            groups.extend([i] * len(idx))
        return np.array(fracs), np.array(groups, dtype=int)

    def n_truth(self, k: int) -> int:
        return int(np.unique(self._matches[k][1]).size)

    def expected_n_in(self, k: int, user_power: float) -> float:
        fracs, groups = self._matches[k]
        if fracs.size == 0:
            return 0.0
        d = self.links[k].delivery(user_power * fracs)
        miss = np.ones(len(self.images))
        np.multiply.at(miss, groups, 1.0 - d)
        return float(np.sum(1.0 - miss[np.unique(groups)]))

    def scores(self, user_powers) -> list:
        n = len(self.images)
        return [self.expected_n_in(k, p) / n for k, p in enumerate(user_powers)]

    def utility(self, user_powers) -> float:
        return nbs_utility(self.scores(user_powers))


@dataclass(frozen=True)
class AllocationResult:
    user_powers: tuple
    triplet_powers: dict
    expected_scores: tuple
    utility: float
    history: tuple = ()

    @property
    def shares(self) -> np.ndarray:
        p = np.asarray(self.user_powers)
        return p / p.sum() if p.sum() > 0 else np.full(p.size, 1.0 / p.size)


@dataclass(frozen=True)
class RcgaConfig:
    population: int = 50
    mutation_prob: float = 0.001
    max_iter: int = 20
    blend: float = 0.5
    tournament: int = 2
    elitism: int = 1
    mutation_sigma: float = 0.1
    seed: int = 0
    workers: int = 1
    refine_triplets: bool = False

    def __post_init__(self):
        if self.population < 2:
            raise ParameterError("population must be >= 2")
        if not 0.0 <= self.mutation_prob <= 1.0:
            raise ParameterError("mutation_prob must lie in [0, 1]")
        if self.max_iter < 1 or self.tournament < 1:
            raise ParameterError("max_iter and tournament must be >= 1")
        if not 0 <= self.elitism < self.population:
            raise ParameterError("elitism must lie in [0, population)")
        if self.blend < 0 or self.mutation_sigma < 0:
            raise ParameterError("blend and mutation_sigma must be >= 0")


def _check_feasible(user_powers, budget: PowerBudget | None):
    p = np.asarray(user_powers, dtype=float)
    if np.any(p < 0) or np.any(~np.isfinite(p)):
        raise DomainError("user powers must be finite and >= 0")
    if budget is not None and p.sum() > budget.p_total * (1.0 + FEASIBILITY_RTOL):
        raise DomainError(f"allocation uses {p.sum():.6g} W, budget is {budget.p_total:.6g} W")
    return p


def evaluate_allocation(user_powers, scenario: Scenario, budget: PowerBudget | None = None,
                        *, fractions=None, history=()) -> AllocationResult:
    """Closed-form expected scores and utility of a user power vector.

    ``fractions`` optionally overrides the priority split with explicit
    per-image triplet fractions, indexed ``fractions[k][i]``.
    """
    p = _check_feasible(user_powers, budget)
    if p.size != scenario.n_users:
        raise ParameterError(f"expected {scenario.n_users} user powers, got {p.size}")
    triplet_powers = {}
    reports = []
    for k in range(scenario.n_users):
        link, user = scenario.links[k], scenario.users[k]
        delivery = {}
        for i, img in enumerate(scenario.images):
            if fractions is not None:
                tp = p[k] * np.asarray(fractions[k][i])
            else:
                tp = proportional_triplet_power(p[k], scenario.priorities[k][i])
            for j, w in enumerate(tp):
                triplet_powers[(k, img.id, j)] = float(w)
            idx = semantics.matching_triplets(img, user.query)
            if idx:
                d = np.atleast_1d(link.delivery(tp[idx]))
                delivery.update({(img.id, j): float(v) for j, v in zip(idx, d)})
        reports.append(semantics.expected_score(user, scenario.images, delivery))
    return AllocationResult(tuple(float(x) for x in p), triplet_powers, tuple(reports),
                            nbs_utility([r.s for r in reports]), tuple(history))


def _tournament(rng, fitness, size):
    picks = rng.integers(0, fitness.size, size=size)
    return int(picks[np.argmax(fitness[picks])])


def _rcga(fitness_fn, dim, cfg: RcgaConfig, inject=(), stream=()):
    """Real-coded GA on the probability simplex; returns ``(best, best_fit, history)``.

    Child ``j`` of generation ``g`` draws from its own substream
    ``(seed, *stream, g, j)``, so results never depend on ``cfg.workers``.
    """
    pop = []
    for j, x in enumerate(inject):
        pop.append(project_simplex(x))
    for j in range(len(pop), cfg.population):
        pop.append(project_simplex(substream(cfg.seed, *stream, 0, j).dirichlet(np.ones(dim))))
    pop = np.array(pop[:cfg.population])
    cache = {}

    def score(pop):
        keys = [x.tobytes() for x in pop]
        todo = [(key, x) for key, x in zip(keys, pop) if key not in cache]
        todo = list(dict(todo).items())
        if cfg.workers > 1 and len(todo) > 1:
            with ThreadPoolExecutor(cfg.workers) as ex:
                vals = list(ex.map(fitness_fn, [x for _, x in todo]))
        else:
            vals = [fitness_fn(x) for _, x in todo]
        cache.update({key: v for (key, _), v in zip(todo, vals)})
        return np.array([cache[key] for key in keys])

    fit = score(pop)
    history = [float(fit.max())]
    for g in range(1, cfg.max_iter + 1):
        order = np.argsort(-fit, kind="stable")
        children = [pop[i].copy() for i in order[:cfg.elitism]]
        for j in range(cfg.elitism, cfg.population):
            rng = substream(cfg.seed, *stream, g, j)
            a = pop[_tournament(rng, fit, cfg.tournament)]
            b = pop[_tournament(rng, fit, cfg.tournament)]
            lo, hi = np.minimum(a, b), np.maximum(a, b)
            spread = cfg.blend * (hi - lo)
            child = project_simplex(rng.uniform(lo - spread, hi + spread))
            mutate = rng.random(dim) < cfg.mutation_prob
            if mutate.any():
                child = child + mutate * rng.normal(0.0, cfg.mutation_sigma, dim)
                child = project_simplex(child)
            children.append(child)
        pop = np.array(children)
        fit = score(pop)
        history.append(max(history[-1], float(fit.max())))
    best = int(np.argmax(fit))
    return pop[best], float(fit[best]), history


def _refine_fractions(scenario: Scenario, powers, cfg: RcgaConfig):
    """Per-(user, image) GA over triplet fractions, seeded with the priority split."""
    out = []
    for k in range(scenario.n_users):
        link, query = scenario.links[k], scenario.users[k].query
        per_image = []
        for i, img in enumerate(scenario.images):
            base = proportional_triplet_power(1.0, scenario.priorities[k][i])
            idx = semantics.matching_triplets(img, query)
            if not idx or powers[k] == 0:
                per_image.append(base)
                continue

            def fit(f, idx=idx, pk=powers[k]):
                return semantics.image_match_prob(np.atleast_1d(link.delivery(pk * f[idx])))

            best, _, _ = _rcga(fit, base.size, cfg, inject=[base], stream=(1, k, i))
            per_image.append(best if fit(best) >= fit(base) else base)
        out.append(per_image)
    return out


def rcga_optimize(scenario: Scenario, budget: PowerBudget, cfg: RcgaConfig = RcgaConfig()) -> AllocationResult:
    """Best full-budget user split found by the GA (equal split always in the start population)."""
    k = scenario.n_users
    p_total = budget.p_total
    if k == 1:
        shares, history = np.ones(1), [scenario.utility([p_total])]
    else:
        equal = np.full(k, 1.0 / k)
        shares, _, history = _rcga(lambda x: scenario.utility(p_total * x), k, cfg,
                                   inject=[equal], stream=(0,))
    powers = p_total * shares
    fractions = _refine_fractions(scenario, powers, cfg) if cfg.refine_triplets else None
    return evaluate_allocation(powers, scenario, budget, fractions=fractions, history=history)


def naive_allocation(scenario: Scenario, budget: PowerBudget) -> AllocationResult:
    """Equal power per user and equal power per triplet."""
    eq = scenario if scenario.priority == "equal" else scenario.with_options(priority="equal")
    k = scenario.n_users
    return evaluate_allocation(np.full(k, budget.p_total / k), eq, budget)


def objective_allocation(scenario: Scenario, budget: PowerBudget, cfg: RcgaConfig = RcgaConfig()) -> AllocationResult:
    """Attention-only priorities with the same GA user split."""
    oa = scenario if scenario.priority == "objective" else scenario.with_options(priority="objective")
    return rcga_optimize(oa, budget, cfg)


def simplex_grid(k: int, step: float):
    """All points of the ``k``-simplex whose coordinates are multiples of ``step``."""
    n = round(1.0 / step)
    if k < 1 or n < 1 or not math.isclose(n * step, 1.0, rel_tol=1e-9):
        raise ParameterError(f"step must divide 1, got {step}")

    def rec(left, parts):
        if parts == 1:
            yield (left,)
            return
        for i in range(left + 1):
            for rest in rec(left - i, parts - 1):
                yield (i,) + rest

    return np.array(list(rec(n, k)), dtype=float) / n


def grid_search(scenario: Scenario, budget: PowerBudget, step: float = 0.02):
    """Exhaustive full-budget search; returns ``(grid, utilities)``."""
    grid = simplex_grid(scenario.n_users, step)
    if scenario.threads > 1:
        with ThreadPoolExecutor(scenario.threads) as ex:
            u = list(ex.map(lambda x: scenario.utility(budget.p_total * x), grid))
    else:
        u = [scenario.utility(budget.p_total * x) for x in grid]
    return grid, np.array(u)
