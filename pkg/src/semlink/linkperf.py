"""Outage, bit-error and triplet-drop probabilities of one link."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple

import numpy as np
from scipy import special

from . import fading, specfun
from .errors import DomainError, NumericError
from .fading import SinrParams

__all__ = [
    "ModulationParams",
    "TripletCoding",
    "McEstimate",
    "outage_probability",
    "conditional_bep",
    "bep",
    "BepCurve",
    "bep_curve",
    "tdp",
    "triplet_delivery_prob",
    "simulate_bit_errors",
]

OUTAGE_METHODS = ("quad", "accurate", "asymptotic", "mc")
BEP_METHODS = ("closed", "quad", "curve", "mc")


@dataclass(frozen=True)
class ModulationParams:
    """Shape of the conditional BEP ``Gamma(lambda2, lambda1 gamma) / (2 Gamma(lambda2))``."""

    lambda1: float = 1.0
    lambda2: float = 0.5

    def __post_init__(self):
        if not (self.lambda1 > 0 and self.lambda2 > 0):
            raise DomainError("modulation parameters must be > 0")


@dataclass(frozen=True)
class TripletCoding:
    """Coded length ``d_t`` of one triplet and the number of correctable bit errors ``d_e``."""

    d_t: int = 20
    d_e: int = 3

    def __post_init__(self):
        if int(self.d_t) != self.d_t or int(self.d_e) != self.d_e:
            raise DomainError("d_t and d_e must be integers")
        if not (0 <= self.d_e < self.d_t <= 4096):
            raise DomainError(f"need 0 <= d_e < d_t <= 4096, got d_t={self.d_t}, d_e={self.d_e}")


class McEstimate(NamedTuple):
    value: float
    stderr: float
    n: int


def _mc_rng(rng, seed):
    if rng is not None:
        return rng
    from .rng import substream
    return substream(0 if seed is None else seed)


def outage_probability(gamma_th, sp: SinrParams, method="quad", *, n_samples=1_000_000,
                       rng=None):
    """``P(SINR < gamma_th)``; ``mc`` returns an :class:`McEstimate`."""
    if not gamma_th > 0:
        raise DomainError(f"gamma_th must be > 0, got {gamma_th!r}")
    if method == "quad":
        return fading.sinr_cdf_quad(gamma_th, sp)
    if method == "accurate":
        return fading.sinr_cdf_accurate(gamma_th, sp)
    if method == "asymptotic":
        return fading.sinr_cdf_asymptotic(gamma_th, sp)
    if method == "mc":
        g = fading.sinr_sample(sp, _mc_rng(rng, None), n_samples)
        p = float(np.mean(g < gamma_th))
        return McEstimate(p, math.sqrt(max(p * (1 - p), 0.0) / n_samples), n_samples)
    raise ValueError(f"unknown method {method!r}; expected one of {OUTAGE_METHODS}")


def conditional_bep(gamma, mp: ModulationParams):
    g = np.asarray(gamma, dtype=float)
    if np.any(g < 0):
        raise DomainError("gamma must be >= 0")
    x = mp.lambda1 * g
    if mp.lambda2 == 0.5:
        out = 0.5 * special.erfc(np.sqrt(x))
    elif mp.lambda2 == 1.0:
        out = 0.5 * np.exp(-x)
    else:
        out = 0.5 * special.gammaincc(mp.lambda2, x)
    return out if out.ndim else float(out)


def _bep_closed(sp: SinrParams, mp: ModulationParams) -> float:
    fp, n_i = sp.fading, sp.interference.n_paths
    d = sp.interference_scale
    if d <= 0:
        raise DomainError("closed-form BEP needs P_I * eta > 0")
    shape = specfun.MeijerShape.of(
        [1.0 - fp.m_s, 1.0 - n_i, 1.0, 1.0 - mp.lambda2], [fp.m_f, 0.0], m=1, n=4)
    g = specfun.meijer_g(shape, d / (mp.lambda1 * sp.lambda_k))
    log_pref = (sp.geometry.noise_power / d - math.log(2.0) - math.lgamma(mp.lambda2)
                - math.lgamma(n_i) - math.lgamma(fp.m_s) - math.lgamma(fp.m_f))
    return math.exp(log_pref) * g


def _bep_quad(sp: SinrParams, mp: ModulationParams) -> float:
    """Average of the conditional BEP over the SINR law, nested adaptive quadrature.

    Conditioning on the interference ``Y`` makes the SINR a scaled F
    variate, so the inner integral runs over ``Z`` and the outer over ``Y``.
    """
    fp = sp.fading
    g = sp.signal_gain
    s2 = sp.geometry.noise_power
    ip = sp.interference

    def inner(x):
        c = g / x

        def integrand(z):
            return conditional_bep(c * z, mp) * fading.f_pdf(z, fp)

        # breakpoints at the conditional BEP's decay length and the bulk of Z
        knee = fp.scale * max(fp.m_f, 1.0)
        edges = sorted({0.0, min(knee, 1.0 / (mp.lambda1 * c)), min(knee, 40.0 / (mp.lambda1 * c)), knee})
        total = math.fsum(fading._quad(integrand, lo, hi, "bep inner")
                          for lo, hi in zip(edges[:-1], edges[1:]) if hi > lo)
        return total + fading._quad(integrand, knee, math.inf, "bep inner tail")

    if ip.p_i == 0:
        return inner(s2)
    y_hi = fading._interference_upper(sp)
    return fading._quad(lambda y: inner(s2 + ip.p_i * y) * fading.interference_pdf(y, ip),
                        0.0, y_hi, "bep outer", points=[ip.eta * ip.n_paths])


class BepCurve:
    """Exact average BEP of one link as a function of transmit power.

    The SINR is linear in power, so ``F_gamma(x; P) = Phi(x / P)`` with
    ``Phi`` the unit-power SINR CDF.  Integrating the conditional BEP by
    parts gives

        BEP(P) = 1/(2 Gamma(l2)) int exp(l2 v - e^v) Phi(e^v / (l1 P)) dv,

    an analytic integrand decaying at both ends, for which the trapezoid
    rule converges geometrically.  ``Phi`` is tabulated once on a lattice in
    ``log t``; each power then shifts the trapezoid nodes onto that lattice.
    ``Phi`` itself is an expectation over ``log Y``, also by trapezoid.
    """

    STEP = 0.05
    Y_STEP = 0.1
    V_LO, V_HI = -90.0, 4.5

    def __init__(self, sp: SinrParams, mp: ModulationParams, p_min=1e-3, p_max=1e7):
        self.sp = sp
        self.mp = mp
        self.p_min = float(p_min)
        self.p_max = float(p_max)
        h = self.STEP
        u_lo = self.V_LO - math.log(mp.lambda1 * self.p_max)
        u_hi = self.V_HI - math.log(mp.lambda1 * self.p_min)
        j_lo = math.floor(u_lo / h)
        j_hi = math.ceil(u_hi / h)
        self._j0 = j_lo
        self._u = np.arange(j_lo, j_hi + 1) * h
        self._phi = self._unit_cdf(np.exp(self._u))
        self._eu = np.exp(self._u)
        self._a = np.exp(mp.lambda2 * self._u) * self._phi

    def _unit_cdf(self, t):
        """``P(gamma <= t)`` at unit transmit power, vectorised over ``t``."""
        sp = self.sp
        ip = sp.interference
        gain = sp.geometry.path_gain
        s2 = sp.geometry.noise_power
        if ip.p_i == 0:
            return fading.f_cdf(t * s2 / gain, sp.fading)
        n, eta = ip.n_paths, ip.eta
        w_lo = math.log(eta) - 46.0 / n
        w_hi = math.log(eta * 90.0)
        w = np.arange(w_lo, w_hi + self.Y_STEP, self.Y_STEP)
        y = np.exp(w)
        # density of log Y
        weights = np.exp(n * (w - math.log(eta)) - y / eta - math.lgamma(n)) * self.Y_STEP
        x = s2 + ip.p_i * y
        out = np.empty_like(t)
        # chunk to bound memory
        for start in range(0, t.size, 256):
            tt = t[start:start + 256]
            fz = fading.f_cdf(np.outer(tt, x) / gain, sp.fading)
            out[start:start + 256] = fz @ weights
        return np.clip(out, 0.0, 1.0)

    def unit_cdf(self, t):
        return self._unit_cdf(np.atleast_1d(np.asarray(t, dtype=float)))

    def __call__(self, power):
        p = np.atleast_1d(np.asarray(power, dtype=float))
        if np.any(p < 0) or np.any(~np.isfinite(p)):
            raise DomainError("power must be finite and >= 0")
        out = np.full(p.shape, 0.5)
        lam1, lam2 = self.mp.lambda1, self.mp.lambda2
        h = self.STEP
        norm = h / (2.0 * math.gamma(lam2))
        inside = (p >= self.p_min) & (p <= self.p_max)
        for i in np.flatnonzero(inside):
            # node v_j = s + u_j:  exp(l2 v_j - e^{v_j}) = e^{l2 s} e^{l2 u_j} exp(-e^s e^{u_j})
            s = math.log(lam1 * p[i])
            lo = max(0, math.ceil((self.V_LO - h - s) / h - 1e-9) - self._j0)
            hi = min(self._u.size, math.floor((self.V_HI + h - s) / h + 1e-9) - self._j0 + 1)
            sl = slice(lo, hi)
            out[i] = norm * math.exp(lam2 * s) * float(np.exp(-math.exp(s) * self._eu[sl]) @ self._a[sl])
        for i in np.flatnonzero((p > 0) & ~inside):
            # outside the table: same rule, unit CDF evaluated on the spot
            shift = math.log(lam1 * p[i])
            vv = np.arange(self.V_LO, self.V_HI + h, h)
            phi = self._unit_cdf(np.exp(vv - shift))
            out[i] = norm * float(np.exp(lam2 * vv - np.exp(vv)) @ phi)
        out = np.clip(out, 0.0, 0.5)
        return out if np.ndim(power) else float(out[0])


@lru_cache(maxsize=256)
def bep_curve(sp_unit: SinrParams, mp: ModulationParams) -> BepCurve:
    """Cached :class:`BepCurve`; ``sp_unit.p_tx`` is ignored."""
    return BepCurve(sp_unit, mp)


def bep(sp: SinrParams, mp: ModulationParams, method="quad", *, n_samples=1_000_000, rng=None):
    """Average BEP of the link; ``mc`` returns an :class:`McEstimate`."""
    try:
        if method == "closed":
            return _bep_closed(sp, mp)
        if method == "quad":
            return _bep_quad(sp, mp)
        if method == "curve":
            return bep_curve(sp.with_power(1.0), mp)(sp.p_tx)
        if method == "mc":
            g = fading.sinr_sample(sp, _mc_rng(rng, None), n_samples)
            vals = conditional_bep(g, mp)
            return McEstimate(float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(n_samples)),
                              n_samples)
    except NumericError as exc:
        exc.diagnostics.setdefault("method", method)
        raise
    raise ValueError(f"unknown method {method!r}; expected one of {BEP_METHODS}")


def _log_binom_terms(d_t: int, js: np.ndarray):
    return (math.lgamma(d_t + 1) - special.gammaln(js + 1) - special.gammaln(d_t - js + 1))


def tdp(e, coding: TripletCoding, convention="binomial"):
    """Probability that more than ``d_e`` of the ``d_t`` bits are in error.

    ``binomial`` is the block-error probability of i.i.d. bit errors;
    ``literal`` drops the binomial coefficient and is not a probability for
    ``d_t > 1``.
    """
    e_arr = np.asarray(e, dtype=float)
    if np.any((e_arr < 0) | (e_arr > 1)) or np.any(~np.isfinite(e_arr)):
        raise DomainError("bit error probability must lie in [0, 1]")
    if convention not in ("binomial", "literal"):
        raise ValueError(f"unknown convention {convention!r}")
    d_t, d_e = coding.d_t, coding.d_e
    js = np.arange(d_e + 1, d_t + 1, dtype=float)
    flat = e_arr.ravel()
    out = np.zeros_like(flat)
    log_c = _log_binom_terms(d_t, js) if convention == "binomial" else np.zeros_like(js)
    # only the j = d_t term survives at e = 1
    out[flat == 1.0] = math.exp(log_c[-1])
    mid = (flat > 0.0) & (flat < 1.0)
    if mid.any():
        em = flat[mid][:, None]
        logs = log_c[None, :] + js[None, :] * np.log(em) + (d_t - js)[None, :] * np.log1p(-em)
        out[mid] = np.exp(special.logsumexp(logs, axis=1))
    if convention == "binomial":
        out = np.clip(out, 0.0, 1.0)
    out = out.reshape(e_arr.shape)
    return out if out.ndim else float(out)


def triplet_delivery_prob(sp: SinrParams, mp: ModulationParams, coding: TripletCoding,
                          per_triplet_power: float, *, bep_method="curve") -> float:
    """``1 - tdp(BEP at the triplet's power)``; zero power means BEP 1/2."""
    if per_triplet_power < 0:
        raise DomainError("per-triplet power must be >= 0")
    if per_triplet_power == 0:
        e = 0.5
    else:
        e = bep(sp.with_power(per_triplet_power), mp, bep_method)
        if isinstance(e, McEstimate):
            e = e.value
    return 1.0 - tdp(e, coding)


def simulate_bit_errors(sp: SinrParams, mp: ModulationParams, coding: TripletCoding,
                        n_triplets: int, rng: np.random.Generator, *, fading_mode="interleaved"):
    """Bit-level simulation; returns a boolean array, True where a triplet is delivered.

    ``interleaved`` draws an independent SINR for every bit (so bit errors
    are i.i.d. with the average BEP); ``block`` draws one SINR per triplet
    and makes its bits conditionally i.i.d. given that draw.
    """
    d_t = coding.d_t
    if fading_mode == "interleaved":
        gam = fading.sinr_sample(sp, rng, (n_triplets, d_t))
    elif fading_mode == "block":
        gam = np.repeat(fading.sinr_sample(sp, rng, (n_triplets, 1)), d_t, axis=1)
    else:
        raise ValueError(f"unknown fading mode {fading_mode!r}")
    flips = rng.random((n_triplets, d_t)) < conditional_bep(gam, mp)
    return flips.sum(axis=1) <= coding.d_e
