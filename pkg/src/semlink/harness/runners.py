"""Experiment runners.  Each returns a :class:`Table`; none mutates its inputs."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .. import allocation, fading, linkperf, semantics
from ..allocation import PowerBudget, Scenario
from ..rng import substream
from .config import ScenarioConfig

MC_CHUNK = 250

__all__ = [
    "Table",
    "run_op_curve",
    "run_alpha_sweep",
    "run_power_sweep",
    "run_allocation_surface",
    "run_smallscale_sweep",
    "run_largescale_sweep",
    "comm_cost",
    "run_comm_cost",
    "simulate_scores",
    "mc_end_to_end",
    "run_allocate",
]


@dataclass
class Table:
    name: str
    columns: tuple
    rows: list = field(default_factory=list)
    notes: dict = field(default_factory=dict)

    def column(self, name):
        i = self.columns.index(name)
        return [r[i] for r in self.rows]

    def where(self, **eq):
        idx = {k: self.columns.index(k) for k in eq}
        return [r for r in self.rows if all(r[idx[k]] == v for k, v in eq.items())]

    def records(self):
        return [dict(zip(self.columns, r)) for r in self.rows]


def _pmap(fn, items, threads):
    """Order-preserving map, threaded when asked."""
    items = list(items)
    if threads > 1 and len(items) > 1:
        with ThreadPoolExecutor(threads) as ex:
            return list(ex.map(fn, items))
    return [fn(x) for x in items]


def _share_cols(k):
    return tuple(f"share_{i + 1}" for i in range(k))


def _score_cols(k):
    return tuple(f"score_{i + 1}" for i in range(k))


# --------------------------------------------------------------------------- outage


def run_op_curve(cfg: ScenarioConfig) -> Table:
    """Outage probability vs transmit power by every method, per ``m_f``."""
    op = cfg.op_curve
    g_th = fading.db_to_linear(op.gamma_th_db)
    n = cfg.mc.channel_samples
    tab = Table("op_curve", ("m_f", "p_dbw", "op_quad", "op_accurate", "op_asymptotic",
                             "op_mc", "op_mc_stderr"))
    tab.notes = {"gamma_th_db": op.gamma_th_db, "mc_samples": n}
    tasks = [(i, m_f, j, p_dbw) for i, m_f in enumerate(op.m_f) for j, p_dbw in enumerate(op.power_dbw)]

    def one(task):
        i, m_f, j, p_dbw = task
        sp = op.sinr(m_f, fading.db_to_linear(p_dbw))
        mc = linkperf.outage_probability(g_th, sp, "mc", n_samples=n, rng=substream(cfg.seed, 10, i, j))
        return (m_f, p_dbw,
                linkperf.outage_probability(g_th, sp, "quad"),
                linkperf.outage_probability(g_th, sp, "accurate"),
                linkperf.outage_probability(g_th, sp, "asymptotic"),
                mc.value, mc.stderr)

    tab.rows = _pmap(one, tasks, cfg.threads)
    return tab


# --------------------------------------------------------------------------- allocation sweeps


def _budget(cfg, p_total):
    return PowerBudget.from_power(p_total, cfg.budget.t_1)


def run_alpha_sweep(cfg: ScenarioConfig, data=None) -> Table:
    """NBS utility over (alpha, total power), plus naive and attention-only rows."""
    images, profiles = data or cfg.load_data()
    k = len(cfg.users)
    tab = Table("alpha_sweep", ("method", "alpha", "p_total", "utility") + _share_cols(k))
    base = cfg.scenario(images, profiles)
    scenarios = {a: base.with_options(alpha=a) for a in cfg.sweeps.alpha}
    oa = base.with_options(priority="objective")

    def one(task):
        a, p = task
        r = allocation.rcga_optimize(scenarios[a], _budget(cfg, p), cfg.rcga)
        return ("persf", a, p, r.utility) + tuple(r.shares)

    tab.rows = _pmap(one, [(a, p) for a in cfg.sweeps.alpha for p in cfg.sweeps.p_total], cfg.threads)
    for p in cfg.sweeps.p_total:
        b = _budget(cfg, p)
        r = allocation.naive_allocation(base, b)
        tab.rows.append(("naive", math.nan, p, r.utility) + tuple(r.shares))
        r = allocation.rcga_optimize(oa, b, cfg.rcga)
        tab.rows.append(("objective", math.nan, p, r.utility) + tuple(r.shares))
    return tab


def run_power_sweep(cfg: ScenarioConfig, data=None) -> Table:
    """Per-user expected score vs total power against the drop-free upper bound."""
    images, profiles = data or cfg.load_data()
    sc = cfg.scenario(images, profiles)
    oa = sc.with_options(priority="objective")
    n = len(images)
    bounds = [sc.n_truth(k) / n for k in range(sc.n_users)]
    tab = Table("power_sweep", ("p_total", "method", "user", "score", "upper_bound", "gap"))

    def one(p):
        b = _budget(cfg, p)
        return [("persf", allocation.rcga_optimize(sc, b, cfg.rcga)),
                ("naive", allocation.naive_allocation(sc, b)),
                ("objective", allocation.rcga_optimize(oa, b, cfg.rcga))]

    for p, results in zip(cfg.sweeps.p_total, _pmap(one, cfg.sweeps.p_total, cfg.threads)):
        for method, r in results:
            for k, rep in enumerate(r.expected_scores):
                tab.rows.append((p, method, k + 1, rep.s, bounds[k], bounds[k] - rep.s))
    for k, ub in enumerate(bounds):
        tab.rows.append((math.inf, "upper_bound", k + 1, ub, ub, 0.0))
    return tab


def run_allocation_surface(cfg: ScenarioConfig, data=None) -> Table:
    """Utility over the full-budget simplex, with the GA and equal-split points."""
    images, profiles = data or cfg.load_data()
    sc = cfg.scenario(images, profiles)
    k = sc.n_users
    tab = Table("alloc_surface", ("kind",) + _share_cols(k) + ("utility",))
    grid, util = allocation.grid_search(sc, cfg.budget, cfg.sweeps.simplex_step)
    tab.rows = [("grid",) + tuple(x) + (u,) for x, u in zip(grid, util)]
    r = allocation.rcga_optimize(sc, cfg.budget, cfg.rcga)
    tab.rows.append(("rcga",) + tuple(r.shares) + (r.utility,))
    eq = allocation.naive_allocation(sc, cfg.budget)
    tab.rows.append(("equal",) + tuple(np.full(k, 1.0 / k)) + (sc.utility(np.full(k, cfg.budget.p_total / k)),))
    tab.rows.append(("naive",) + tuple(eq.shares) + (eq.utility,))
    best = int(np.argmax(util))
    tab.notes = {"grid_max": float(util[best]), "grid_argmax": [float(v) for v in grid[best]],
                 "rcga_over_grid": r.utility / util[best] if util[best] > 0 else math.nan}
    return tab


def _fixed_power_utility(sc: Scenario, links, p_user):
    s = sc.with_links(links)
    scores = s.scores([p_user] * s.n_users)
    return allocation.nbs_utility(scores), scores


def run_smallscale_sweep(cfg: ScenarioConfig, data=None) -> Table:
    """Utility over (m_f, m_s) applied to every user at fixed per-user power."""
    images, profiles = data or cfg.load_data()
    sc = cfg.scenario(images, profiles)
    k = sc.n_users
    tab = Table("smallscale", ("m_f", "m_s", "utility") + _score_cols(k))

    def one(task):
        m_f, m_s = task
        links = [replace(u, m_f=m_f, m_s=m_s).to_link() for u in cfg.users]
        u, s = _fixed_power_utility(sc, links, cfg.sweeps.per_user_power)
        return (m_f, m_s, u) + tuple(s)

    tab.rows = _pmap(one, [(a, b) for a in cfg.sweeps.m_f for b in cfg.sweeps.m_s], cfg.threads)
    return tab


def run_largescale_sweep(cfg: ScenarioConfig, data=None) -> Table:
    """Utility over (distance, interference power) applied to every user."""
    images, profiles = data or cfg.load_data()
    sc = cfg.scenario(images, profiles)
    k = sc.n_users
    tab = Table("largescale", ("distance", "p_i", "utility") + _score_cols(k))

    def one(task):
        d, p_i = task
        links = [replace(u, distance=d, p_i=p_i).to_link() for u in cfg.users]
        u, s = _fixed_power_utility(sc, links, cfg.sweeps.per_user_power)
        return (d, p_i, u) + tuple(s)

    tab.rows = _pmap(one, [(a, b) for a in cfg.sweeps.distance for b in cfg.sweeps.p_i], cfg.threads)
    return tab


# --------------------------------------------------------------------------- communication cost


def comm_cost(n_images, image_mb, n_users, downloads, n_triplets, triplet_bytes):
    """``(vanilla_mb, semantic_mb, savings)``: every image to every user vs triplets plus matched downloads."""
    vanilla = n_images * image_mb * n_users
    semantic = downloads * image_mb + n_triplets * triplet_bytes / 1e6
    return vanilla, semantic, 1.0 - semantic / vanilla


def run_comm_cost(cfg: ScenarioConfig, data=None) -> Table:
    c = cfg.comm_cost
    tab = Table("comm_cost", ("source", "n_images", "image_mb", "n_users", "downloads", "n_triplets",
                              "triplet_bytes", "vanilla_mb", "semantic_mb", "savings"))
    stated = (c.n_images, c.image_mb, c.n_users, c.downloads, c.n_triplets, c.triplet_bytes)
    tab.rows.append(("stated",) + stated + comm_cost(*stated))
    if data is not None:
        images, profiles = data
        k = len(profiles)
        mb = float(np.mean([img.size_bytes for img in images])) / 1e6
        downloads = sum(1 for u in profiles for img in images if semantics.matching_triplets(img, u.query))
        n_trip = k * sum(len(img.triplets) for img in images)
        row = (len(images), mb, k, downloads, n_trip, c.triplet_bytes)
        tab.rows.append(("dataset",) + row + comm_cost(*row))
    return tab


# --------------------------------------------------------------------------- end-to-end Monte Carlo


def simulate_scores(sc: Scenario, user_powers, replications: int, seed: int,
                    fading_mode: str = "interleaved") -> np.ndarray:
    """Realised match scores, shape ``(replications, K)``, from bit-level simulation.

    Each replication sends every image's query-matching triplets at their
    priority-split power, draws channel states and bit flips, applies the
    code's correction limit and counts the images where a match survives.
    Other triplets are simulated away: under exact matching a dropped or
    delivered non-matching triplet never changes the score.
    """
    powers = np.asarray(user_powers, dtype=float)
    if np.any(powers < 0) or np.any(np.isnan(powers)):
        raise ValueError("user powers must be >= 0")
    n = len(sc.images)
    out = np.zeros((replications, sc.n_users))
    for k in range(sc.n_users):
        fracs, groups = sc._matches[k]
        if fracs.size == 0:
            continue
        link = sc.links[k]
        unit = link.sinr.with_power(1.0)
        d_t, d_e = link.coding.d_t, link.coding.d_e
        with np.errstate(invalid="ignore"):
            w = np.where(fracs > 0, powers[k] * fracs, 0.0)
        _, gid = np.unique(groups, return_inverse=True)
        n_groups = gid.max() + 1
        onehot = np.zeros((fracs.size, n_groups))
        onehot[np.arange(fracs.size), gid] = 1.0
        for c0 in range(0, replications, MC_CHUNK):
            m = min(MC_CHUNK, replications - c0)
            # one substream per (user, chunk): fixed chunking keeps draws order-free
            rng = substream(seed, 20, k, c0 // MC_CHUNK)
            shape = (m, fracs.size, d_t)
            if fading_mode == "interleaved":
                g = fading.sinr_sample(unit, rng, shape)
            elif fading_mode == "block":
                g = np.broadcast_to(fading.sinr_sample(unit, rng, (m, fracs.size, 1)), shape)
            else:
                raise ValueError(f"unknown fading mode {fading_mode!r}")
            with np.errstate(invalid="ignore"):
                gam = np.where(w[None, :, None] > 0, g * w[None, :, None], 0.0)
            flips = rng.random(shape) < linkperf.conditional_bep(gam, link.modulation)
            ok = (flips.sum(axis=2) <= d_e).astype(float)
            out[c0:c0 + m, k] = np.count_nonzero(ok @ onehot, axis=1) / n
    return out


def mc_end_to_end(cfg: ScenarioConfig, replications: int | None = None, data=None,
                  user_powers=None) -> Table:
    """Closed-form expected scores and utility against bit-level simulation.

    Uses the GA allocation unless ``user_powers`` is given.
    """
    reps = replications or cfg.mc.replications
    images, profiles = data or cfg.load_data()
    sc = cfg.scenario(images, profiles)
    if user_powers is None:
        user_powers = allocation.rcga_optimize(sc, cfg.budget, cfg.rcga).user_powers
    user_powers = np.asarray(user_powers, dtype=float)
    if np.all(np.isfinite(user_powers)):
        closed = sc.scores(user_powers)
    else:
        closed = [sc.n_truth(k) / len(images) if np.isinf(user_powers[k]) else
                  sc.scores(np.where(np.isinf(user_powers), 0.0, user_powers))[k] for k in range(sc.n_users)]
    sims = simulate_scores(sc, user_powers, reps, cfg.seed, cfg.mc.fading_mode)
    tab = Table("mc_validate", ("quantity", "closed_form", "mc_mean", "mc_stderr", "z"))
    rows = [(f"score_{k + 1}", closed[k], sims[:, k]) for k in range(sc.n_users)]
    rows.append(("utility", allocation.nbs_utility(closed), np.prod(sims, axis=1)))
    for name, c, x in rows:
        mean = float(x.mean())
        se = float(x.std(ddof=1) / math.sqrt(reps)) if reps > 1 else math.nan
        z = (mean - c) / se if se > 0 else (0.0 if mean == c else math.inf)
        tab.rows.append((name, c, mean, se, z))
    tab.notes = {"replications": reps, "fading_mode": cfg.mc.fading_mode,
                 "user_powers": [float(p) for p in user_powers]}
    return tab


# --------------------------------------------------------------------------- single allocation


def run_allocate(cfg: ScenarioConfig, data=None):
    """GA, naive and attention-only allocations; returns ``(summary, triplet_powers)`` tables."""
    images, profiles = data or cfg.load_data()
    sc = cfg.scenario(images, profiles)
    results = {
        "persf": allocation.rcga_optimize(sc, cfg.budget, cfg.rcga),
        "naive": allocation.naive_allocation(sc, cfg.budget),
        "objective": allocation.objective_allocation(sc, cfg.budget, cfg.rcga),
    }
    summary = Table("allocation", ("method", "user", "power_w", "share", "score", "upper_bound", "utility"))
    for method, r in results.items():
        for k, rep in enumerate(r.expected_scores):
            summary.rows.append((method, k + 1, r.user_powers[k], r.shares[k], rep.s, rep.s_tilde, r.utility))
    per_triplet = Table("triplet_powers", ("user", "image", "triplet", "power_w"))
    best = results["persf"]
    per_triplet.rows = [(k + 1, img, j, w) for (k, img, j), w in sorted(best.triplet_powers.items())]
    summary.notes = {"generations": len(best.history), "best_history": [float(h) for h in best.history]}
    return summary, per_triplet
