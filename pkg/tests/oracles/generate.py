"""Regenerate ``frozen.json``: reference values from independent high-precision routes.

Nothing here imports the package under test.  Run with
``python3 tests/oracles/generate.py``; the output is committed.
"""

import json
from pathlib import Path

import mpmath as mp
import numpy as np

mp.mp.dps = 30


def f_cdf(z, m_f, m_s, z_bar):
    # Z / scale is a ratio of Gamma(m_f) and Gamma(m_s) variates, so Z/(Z+scale) ~ Beta(m_f, m_s)
    scale = (m_s - 1) * z_bar / m_f
    u = z / scale
    return mp.betainc(m_f, m_s, 0, u / (1 + u), regularized=True)


def f_pdf(z, m_f, m_s, z_bar):
    c = (m_s - 1) * z_bar
    return (m_f**m_f * c**m_s * z ** (m_f - 1)
            / (mp.beta(m_f, m_s) * (m_f * z + c) ** (m_f + m_s)))


def sinr_cdf(g, link):
    """E_Y[F_Z(g (s2 + P_I Y) / (P gain))], Y ~ Gamma(N_I, eta)."""
    m_f, m_s, z_bar = link["m_f"] * link["n_t"], link["m_s"], link["z_bar"] * link["n_t"]
    gain = link["p"] * link["d"] ** (-link["alpha"])
    n, eta = link["n_i"], link["eta"]

    def integrand(y):
        return (f_cdf(g * (link["s2"] + link["p_i"] * y) / gain, m_f, m_s, z_bar)
                * y ** (n - 1) * mp.exp(-y / eta) / (eta**n * mp.gamma(n)))

    return mp.quad(integrand, [0, n * eta, 10 * n * eta, mp.inf])


def cdf_mixture_g(z, m_f, m_s, n_i):
    """G^{1,3}_{3,2}(z | 1-m_s, 1-N_I, 1; m_f, 0) as a Gamma mixture of regularised betas."""
    f = lambda u: u ** (n_i - 1) * mp.exp(-u) * mp.betainc(m_f, m_s, 0, z * u / (1 + z * u), regularized=True)
    return mp.gamma(m_f) * mp.gamma(m_s) * mp.quad(f, [0, n_i, 10 * n_i, mp.inf])


def accurate_cdf(g, link):
    m_f, m_s, z_bar = link["m_f"] * link["n_t"], link["m_s"], link["z_bar"] * link["n_t"]
    lam = link["p"] * link["d"] ** (-link["alpha"]) * (m_s - 1) * z_bar / m_f
    d = link["p_i"] * link["eta"]
    n = link["n_i"]
    return (mp.exp(link["s2"] / d) / (mp.gamma(n) * mp.gamma(m_s) * mp.gamma(m_f))
            * cdf_mixture_g(g * d / lam, m_f, m_s, n))


def bep(link, l1, l2):
    """Average conditional BEP, integrated by parts against the SINR CDF."""
    w = lambda x: l1**l2 * x ** (l2 - 1) * mp.exp(-l1 * x) / (2 * mp.gamma(l2))
    return mp.quad(lambda x: sinr_cdf(x, link) * w(x), [0, 1 / l1, 10 / l1, 60 / l1])


def lemma_integral(a, b, c, d, al, be, ep, rho):
    f = lambda x: x**b * (x - a) ** c * mp.exp(-(x - a) / d) * mp.hyp2f1(al, be, ep, -rho * x)
    return mp.quad(f, [a, a + d, a + 10 * d, a + 100 * d, mp.inf])


DB = lambda x: 10 ** (x / 10)
REF_USER1 = dict(m_f=2, m_s=2, z_bar=DB(-3), n_t=3, d=10, alpha=2, n_i=2, eta=DB(-3), p_i=2, s2=1)
REF_USER2 = dict(REF_USER1, m_s=4)
FIG2 = dict(m_f=2.6, m_s=5, z_bar=DB(-1), n_t=1, d=1.5, alpha=2, n_i=3, eta=0.4, p_i=5, s2=1)


def delivery_mc(link, p, l1, l2, d_t, d_e, n_triplets, seed):
    """Bit-level simulation: independent SINR per bit, count triplets with <= d_e errors."""
    from scipy.special import erfc
    rng = np.random.default_rng(seed)
    m_f, m_s, z_bar = link["m_f"] * link["n_t"], link["m_s"], link["z_bar"] * link["n_t"]
    gain = p * link["d"] ** (-link["alpha"])
    ok = 0
    for _ in range(n_triplets // 100_000):
        shape = (100_000, d_t)
        z = (m_s - 1) * z_bar / m_f * rng.gamma(m_f, size=shape) / rng.gamma(m_s, size=shape)
        y = rng.gamma(link["n_i"], link["eta"], size=shape)
        g = gain * z / (link["s2"] + link["p_i"] * y)
        assert l2 == 0.5
        e = 0.5 * erfc(np.sqrt(l1 * g))
        ok += int(np.sum((rng.random(shape) < e).sum(axis=1) <= d_e))
    v = ok / n_triplets
    return v, (v * (1 - v) / n_triplets) ** 0.5


def main():
    out = {}
    out["gamma_half"] = mp.gamma(0.5)
    out["upper_gamma_2.5_1.3"] = mp.quad(lambda t: t**1.5 * mp.exp(-t), [1.3, mp.inf])
    out["beta_7.5_0.3"] = mp.exp(mp.loggamma(7.5) + mp.loggamma(0.3) - mp.loggamma(7.8))
    out["hyp2f1_1_1_2_0.5"] = mp.hyp2f1(1, 1, 2, 0.5)
    out["hyp2f1_0.7_2.3_1.9_-3.5"] = mp.hyp2f1(0.7, 2.3, 1.9, -3.5)
    out["meijer_cdf_shape_0.2_mf2_ms5_ni3"] = cdf_mixture_g(mp.mpf("0.2"), 2, 5, 3)
    out["f_pdf_0.7_2_4_1"] = f_pdf(mp.mpf("0.7"), 2, 4, 1)
    out["f_cdf_1.0_2_4_1"] = mp.quad(lambda z: f_pdf(z, 2, 4, 1), [0, 1])
    out["interference_cdf_1.0_3_0.4"] = mp.quad(lambda y: y**2 * mp.exp(-y / 0.4) / (0.4**3 * 2), [0, 1])
    out["cond_bep_1_0.5_1"] = mp.quad(lambda t: t**-0.5 * mp.exp(-t), [1, mp.inf]) / (2 * mp.gamma(0.5))
    u1 = dict(REF_USER1, p=1000)
    out["sinr_cdf_ref_user1_1kW_g1"] = sinr_cdf(1, u1)
    out["accurate_cdf_ref_user1_1kW_g1"] = accurate_cdf(1, u1)
    out["sinr_cdf_fig2_20dBW_g1"] = sinr_cdf(1, dict(FIG2, p=100))
    out["bep_ref_user2_1kW"] = bep(dict(REF_USER2, p=1000), 1, 0.5)
    out["bep_ref_user1_100W"] = bep(dict(REF_USER1, p=100), 1, 0.5)
    # lemma: random parameter draw, frozen
    lp = dict(a=0.3, b=1.7, c=0.6, d=1.4, alpha=2.2, beta=3.1, eps=2.5)
    out["lemma_params"] = lp
    for rho in ("0.001", "1"):
        out[f"lemma_integral_rho_{rho}"] = lemma_integral(lp["a"], lp["b"], lp["c"], lp["d"], lp["alpha"],
                                                          lp["beta"], lp["eps"], mp.mpf(rho))
    # a second draw with a << d, where the approximation's offset error vanishes
    sp = dict(a=0.005, b=1.7, c=0.6, d=1.4, alpha=2.2, beta=3.1, eps=2.5)
    out["lemma_params_small_a"] = sp
    for rho in ("0.001", "1"):
        out[f"lemma_integral_small_a_rho_{rho}"] = lemma_integral(sp["a"], sp["b"], sp["c"], sp["d"], sp["alpha"],
                                                                  sp["beta"], sp["eps"], mp.mpf(rho))
    v, se = delivery_mc(REF_USER1, 100.0, 1, 0.5, 20, 3, 2_000_000, 12345)
    out["delivery_ref_user1_100W_mc"] = {"value": v, "stderr": se, "n": 2_000_000}
    clean = {k: (float(v) if isinstance(v, mp.mpf) else v) for k, v in out.items()}
    Path(__file__).with_name("frozen.json").write_text(json.dumps(clean, indent=1, sort_keys=True) + "\n")
    for k, v in clean.items():
        print(k, v)


if __name__ == "__main__":
    main()
