"""Acceptance gate: one PASS/FAIL line per criterion, each at its stated tolerance and time budget.

Run alone with ``pytest tests/test_acceptance.py -v``; the summary block at
the end of the session lists every criterion line.
"""

import math
import time
from dataclasses import replace

import numpy as np
import pytest

from semlink import allocation as al
from semlink import fading as fd
from semlink import linkperf as lp
from semlink import specfun as sf
from semlink.dataset import SynthSpec, synth_dataset
from semlink.harness import runners
from semlink.harness.config import REFERENCE_USERS, ScenarioConfig, config_from_dict
from semlink.rng import substream
from semlink.semantics import UserProfile

RESULTS = []
MOD = lp.ModulationParams()


class Timer:
    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.t0


def record(n, title, ok, detail, elapsed, budget):
    fast = elapsed <= budget
    status = "PASS" if ok and fast else "FAIL"
    line = f"criterion {n:>2} {status}  {title}: {detail} [{elapsed:.1f}s of {budget:g}s]"
    RESULTS.append(line)
    print(line)
    assert ok, line
    assert fast, line


def test_c01_meijer_exponential():
    shape = sf.MeijerShape.of([], [0.0], m=1, n=0)
    zs = np.logspace(-2, math.log10(20), 50)
    with Timer() as t:
        err = max(abs(sf.meijer_g(shape, z) / math.exp(-z) - 1) for z in zs)
    record(1, "G(z|0) = exp(-z) at 50 points", err <= 1e-10, f"max rel err {err:.2e} (tol 1e-10)", t.elapsed, 1)


def test_c02_cdf_three_way():
    cfg = ScenarioConfig().op_curve
    g_th = 1.0
    worst, n_cmp, mc_bad, n_mc = 0.0, 0, 0, 0
    with Timer() as t:
        for i, m_f in enumerate(cfg.m_f):
            for j, p_dbw in enumerate(cfg.power_dbw):
                sp = cfg.sinr(m_f, 10 ** (p_dbw / 10))
                q = fd.sinr_cdf_quad(g_th, sp)
                if 1e-4 <= q <= 0.99:
                    n_cmp += 1
                    worst = max(worst, abs(fd.sinr_cdf_accurate(g_th, sp) / q - 1))
                mc = lp.outage_probability(g_th, sp, "mc", n_samples=1_000_000, rng=substream(77, i, j))
                if mc.stderr > 0:
                    n_mc += 1
                    mc_bad += abs(mc.value - q) > 3 * mc.stderr
    ok = worst <= 1e-2 and n_mc >= 10 and mc_bad == 0
    record(2, "accurate CDF vs quadrature vs Monte Carlo", ok,
           f"accurate max rel err {worst:.3f} over {n_cmp} points (tol 0.01); "
           f"MC outside 3 s.e. at {mc_bad} of {n_mc} points", t.elapsed, 120)


def test_c03_high_snr_slope():
    cfg = ScenarioConfig().op_curve
    ps = np.array([p for p in cfg.power_dbw if p >= 25])
    rel, exact = [], []
    with Timer() as t:
        for m_f in cfg.m_f:
            ys = [math.log10(fd.sinr_cdf_asymptotic(1.0, cfg.sinr(m_f, 10 ** (p / 10)))) for p in ps]
            slope = np.polyfit(ps / 10, ys, 1)[0]
            rel.append(abs(slope / -m_f - 1))
            ye = [math.log10(fd.sinr_cdf_quad(1.0, cfg.sinr(m_f, 10 ** (p / 10)))) for p in ps]
            exact.append(np.polyfit(ps / 10, ye, 1)[0])
    record(3, "asymptotic OP slope = -m_f above 25 dBW", max(rel) <= 0.05,
           f"max rel slope err {max(rel):.1e} (tol 0.05); quadrature slopes "
           + ", ".join(f"{s:.2f}" for s in exact), t.elapsed, 30)


def test_c04_bep_consistency():
    closed_gap, mc_bad, quad_mc_bad, n = 0.0, 0, 0, 0
    with Timer() as t:
        for k, user in enumerate(REFERENCE_USERS):
            for j, p in enumerate((500.0, 1000.0, 2000.0, 3000.0)):
                sp = user.sinr(p)
                c, q = lp.bep(sp, MOD, "closed"), lp.bep(sp, MOD, "quad")
                mc = lp.bep(sp, MOD, "mc", n_samples=1_000_000, rng=substream(44, k, j))
                closed_gap = max(closed_gap, abs(c / q - 1))
                mc_bad += abs(c - mc.value) > 3 * mc.stderr
                quad_mc_bad += abs(q - mc.value) > 3 * mc.stderr
                n += 1
    record(4, "BEP closed form vs quadrature and Monte Carlo", closed_gap <= 1e-2 and mc_bad == 0,
           f"closed/quad max rel gap {closed_gap:.3f} (tol 0.01); closed outside 3 s.e. of MC at "
           f"{mc_bad} of {n}; quadrature outside 3 s.e. at {quad_mc_bad} of {n}", t.elapsed, 60)


def test_c05_tdp_enumeration():
    worst = 0.0
    with Timer() as t:
        for d_t in range(1, 13):
            patterns = np.arange(2**d_t)
            weights = np.array([bin(x).count("1") for x in patterns])
            for e in (0.01, 0.1, 0.3, 0.5):
                probs = e**weights * (1 - e) ** (d_t - weights)
                for d_e in range(d_t):
                    want = math.fsum(probs[weights > d_e])
                    worst = max(worst, abs(lp.tdp(e, lp.TripletCoding(d_t, d_e)) - want))
    record(5, "binomial TDP vs exhaustive enumeration", worst <= 1e-12,
           f"max abs err {worst:.1e} (tol 1e-12)", t.elapsed, 10)


def _shared_semantics(images, users):
    u = users[0]
    return [UserProfile(k + 1, u.query, u.saliency) for k in range(len(users))]


def test_c06_allocation_optimality():
    cfg = ScenarioConfig()
    budget = cfg.budget
    ratios, beat_equal = [], True
    with Timer() as t:
        for s in range(10):
            images, users = synth_dataset(replace(cfg.dataset.synth), seed=1000 + s)
            sc = cfg.scenario(images, users)
            ga = al.rcga_optimize(sc, budget, replace(cfg.rcga, seed=s))
            _, grid_u = al.grid_search(sc, budget, 0.02)
            ratios.append(ga.utility / grid_u.max())
            beat_equal &= ga.utility >= sc.utility(np.full(3, budget.p_total / 3))
        # reference channels, one shared query and saliency: only the channel differs
        images, users = cfg.load_data()
        sc = cfg.scenario(images, _shared_semantics(images, users))
        ga = al.rcga_optimize(sc, budget, cfg.rcga)
        grid, u = al.grid_search(sc, budget, 0.01)
        arg = grid[int(np.argmax(u))]
        worst_first = int(np.argmax(ga.shares)) == 0 and int(np.argmax(arg)) == 0
        beats = ga.utility > sc.utility(np.full(3, budget.p_total / 3))
    ok = beat_equal and min(ratios) >= 0.98 and worst_first and beats
    record(6, "GA vs equal split and 2% simplex grid", ok,
           f"GA/grid min {min(ratios):.4f} (tol 0.98), GA >= equal on all 10: {beat_equal}; "
           f"worst channel largest share: GA {np.round(ga.shares, 3).tolist()}, "
           f"1% grid argmax {np.round(arg, 2).tolist()}", t.elapsed, 300)


def test_c07_end_to_end_monte_carlo():
    cfg = ScenarioConfig()
    with Timer() as t:
        tab = runners.mc_end_to_end(cfg, 10_000)
    z = {r["quantity"]: r["z"] for r in tab.records()}
    ok = all(abs(v) <= 3 for v in z.values())
    record(7, "closed-form utility vs bit-level simulation (1e4 reps)", ok,
           ", ".join(f"{k} z={v:+.2f}" for k, v in z.items()), t.elapsed, 120)


def test_c08_monotonicity():
    cfg = ScenarioConfig()
    with Timer() as t:
        data = cfg.load_data()
        sc = cfg.scenario(*data)
        ps = cfg.sweeps.p_total
        u_p = [al.rcga_optimize(sc, al.PowerBudget(p), cfg.rcga).utility for p in ps]
        large = runners.run_largescale_sweep(cfg, data)
        small = runners.run_smallscale_sweep(cfg, data)
    p_ok = all(a <= b for a, b in zip(u_p, u_p[1:]))

    def grid(tab, xk, yk):
        rec = tab.records()
        xs, ys = sorted({r[xk] for r in rec}), sorted({r[yk] for r in rec})
        g = np.full((len(xs), len(ys)), np.nan)
        for r in rec:
            g[xs.index(r[xk]), ys.index(r[yk])] = r["utility"]
        return xs, ys, g

    _, _, gl = grid(large, "distance", "p_i")
    d_ok = bool(np.all(np.diff(gl, axis=0) <= 1e-15) and np.all(np.diff(gl, axis=1) <= 1e-15))
    mfs, mss, gs = grid(small, "m_f", "m_s")
    s_ok = bool(np.all(np.diff(gs, axis=0) >= -1e-15) and np.all(np.diff(gs, axis=1) >= -1e-15))
    i, j = mfs.index(cfg.sweeps.baseline_m_f), mss.index(cfg.sweeps.baseline_m_s)
    d_mf = gs[i + 1, j] - gs[i, j]
    d_ms = gs[i, j + 1] - gs[i, j]
    ok = p_ok and d_ok and s_ok and d_mf >= d_ms
    record(8, "utility monotone in P, D, P_I, m_f, m_s; m_f step dominates", ok,
           f"P: {p_ok}, D and P_I: {d_ok}, m_f and m_s: {s_ok}; at (m_f, m_s)=({mfs[i]:g}, {mss[j]:g}) "
           f"m_f step +{d_mf:.4g} vs m_s step +{d_ms:.4g}", t.elapsed, 180)


def test_c09_comm_cost():
    with Timer() as t:
        v, s, save = runners.comm_cost(59, 1.27, 3, 64, 873, 12)
    ok = abs(v - 224.8) <= 0.01 + 1e-9 and abs(s - 81.29) <= 0.01
    record(9, "communication-cost arithmetic", ok,
           f"vanilla {v:.2f} MB, semantic {s:.4f} MB, savings {save:.1%}", t.elapsed, 1)


def test_c10_not_reproducible():
    line = ("criterion 10 N/A   absolute utilities, scores, optimal alpha and gap reductions depend on "
            "the original video frames and pretrained detectors; covered by criteria 6-8 and the "
            "interior-alpha-peak check below")
    RESULTS.append(line)
    print(line)
    cfg = ScenarioConfig()
    data = cfg.load_data()
    base = cfg.scenario(*data)
    # fixed full-budget equal user split so only the triplet priorities move with alpha
    p = np.full(3, 1000.0)
    u = [base.with_options(alpha=a).utility(p) for a in cfg.sweeps.alpha]
    best = int(np.argmax(u))
    assert 0 < best < len(u) - 1, f"no interior peak: {u}"


def test_c11_semantic_properties():
    import test_semantics as ts

    checks = [ts.test_normalize_idempotent, ts.test_fusion_in_unit_range, ts.test_priority_scale_invariant,
              ts.test_alpha_one_is_objective_priority, ts.test_expected_score_bounded_by_truth,
              ts.test_match_score_permutation_invariant, ts.test_fusion_endpoints_and_midpoint,
              ts.test_normalize_examples]
    failed = []
    with Timer() as t:
        for fn in checks:
            try:
                fn()
            except Exception as exc:  # noqa: BLE001 - report every failing property
                failed.append(f"{fn.__name__}: {exc!r}"[:200])
    record(11, "semantic property suite", not failed,
           f"{len(checks) - len(failed)} of {len(checks)} property groups green" + (f"; {failed}" if failed else ""),
           t.elapsed, 30)
