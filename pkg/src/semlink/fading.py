"""Fisher-Snedecor F fading, Gamma interference and the resulting SINR law.

The received SINR of one user is

    gamma = P * D**(-alpha) * Z / (sigma2 + P_I * Y)

with ``Z ~ F(m_f, m_s, z_bar)`` (after folding the ``N_T`` MRT branches into
one equivalent F variate) and ``Y ~ Gamma(N_I, eta)``.  Its CDF is provided
four ways: exact adaptive quadrature (the reference), the Meijer-G
"accurate" form, the high-power power law, and Monte Carlo sampling.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace
from typing import NamedTuple

import numpy as np
from scipy import integrate, special

from . import specfun
from .errors import DomainError, NumericError

__all__ = [
    "db_to_linear",
    "linear_to_db",
    "FadingParams",
    "InterferenceParams",
    "LinkGeometry",
    "SinrParams",
    "f_pdf",
    "f_cdf",
    "f_sample",
    "sum_f_equivalent",
    "interference_pdf",
    "interference_cdf",
    "sinr_pdf_quad",
    "sinr_cdf_quad",
    "sinr_cdf_accurate",
    "sinr_cdf_accurate_detail",
    "AccurateCdf",
    "sinr_cdf_asymptotic",
    "lemma_ia_approx",
    "lemma_ia_quad",
    "sinr_sample",
]

QUAD_EPSABS = 1e-14
QUAD_EPSREL = 1e-10
TAIL_MASS = 1e-13


def db_to_linear(db):
    """Power ratio in dB to linear scale."""
    return 10.0 ** (np.asarray(db, dtype=float) / 10.0) if np.ndim(db) else 10.0 ** (db / 10.0)


def linear_to_db(x):
    return 10.0 * np.log10(x)


def _require(cond, msg):
    if not cond:
        raise DomainError(msg)


@dataclass(frozen=True)
class FadingParams:
    """Fisher-Snedecor F parameters: multipath ``m_f``, shadowing ``m_s``, mean ``z_bar``."""

    m_f: float
    m_s: float
    z_bar: float

    def __post_init__(self):
        _require(math.isfinite(self.m_f) and self.m_f > 0, f"m_f must be > 0, got {self.m_f}")
        _require(math.isfinite(self.m_s) and self.m_s > 1, f"m_s must be > 1, got {self.m_s}")
        _require(math.isfinite(self.z_bar) and self.z_bar > 0, f"z_bar must be > 0, got {self.z_bar}")

    @classmethod
    def from_db(cls, m_f, m_s, z_bar_db):
        return cls(m_f, m_s, db_to_linear(z_bar_db))

    @property
    def scale(self) -> float:
        """``(m_s - 1) * z_bar / m_f``, the scale of the underlying beta-prime variate."""
        return (self.m_s - 1.0) * self.z_bar / self.m_f


@dataclass(frozen=True)
class InterferenceParams:
    n_paths: int
    eta: float
    p_i: float

    def __post_init__(self):
        _require(int(self.n_paths) == self.n_paths and self.n_paths >= 1,
                 f"n_paths must be a positive integer, got {self.n_paths}")
        _require(math.isfinite(self.eta) and self.eta > 0, f"eta must be > 0, got {self.eta}")
        _require(math.isfinite(self.p_i) and self.p_i >= 0, f"p_i must be >= 0, got {self.p_i}")

    @property
    def mean_power(self) -> float:
        """Mean received interference power ``P_I * N_I * eta``."""
        return self.p_i * self.n_paths * self.eta


@dataclass(frozen=True)
class LinkGeometry:
    distance: float
    path_loss_exp: float
    n_antennas: int
    noise_power: float

    def __post_init__(self):
        for name in ("distance", "path_loss_exp", "noise_power"):
            v = getattr(self, name)
            _require(math.isfinite(v) and v > 0, f"{name} must be > 0, got {v}")
        _require(int(self.n_antennas) == self.n_antennas and self.n_antennas >= 1,
                 f"n_antennas must be a positive integer, got {self.n_antennas}")

    @property
    def path_gain(self) -> float:
        return self.distance ** (-self.path_loss_exp)


@dataclass(frozen=True)
class SinrParams:
    """Everything that fixes the SINR distribution of one link.

    ``fading`` is the single-F equivalent of the MRT-combined channel; build
    from per-antenna parameters with :meth:`from_link`.
    """

    fading: FadingParams
    geometry: LinkGeometry
    interference: InterferenceParams
    p_tx: float

    def __post_init__(self):
        _require(math.isfinite(self.p_tx) and self.p_tx > 0, f"p_tx must be > 0, got {self.p_tx}")

    @classmethod
    def from_link(cls, per_antenna: FadingParams, geometry: LinkGeometry,
                  interference: InterferenceParams, p_tx: float) -> "SinrParams":
        return cls(sum_f_equivalent(per_antenna, geometry.n_antennas), geometry, interference, p_tx)

    @property
    def signal_gain(self) -> float:
        """``P_k * D^-alpha``: multiplies ``Z`` in the SINR numerator."""
        return self.p_tx * self.geometry.path_gain

    @property
    def lambda_k(self) -> float:
        f = self.fading
        return self.signal_gain * (f.m_s - 1.0) * f.z_bar / f.m_f

    @property
    def interference_scale(self) -> float:
        """``P_I * eta``; zero when the interferers are silent."""
        return self.interference.p_i * self.interference.eta

    def with_power(self, p_tx: float) -> "SinrParams":
        return replace(self, p_tx=p_tx)


# Fisher-Snedecor F

def f_pdf(z, fp: FadingParams):
    z = np.asarray(z, dtype=float)
    if np.any(z < 0):
        raise DomainError("z must be >= 0")
    mf, ms = fp.m_f, fp.m_s
    s = fp.scale
    with np.errstate(divide="ignore"):
        log_pdf = ((mf - 1.0) * np.log(z) - mf * np.log(s)
                   - (mf + ms) * np.log1p(z / s) - specfun.log_beta(mf, ms))
    out = np.exp(log_pdf)
    if mf == 1.0:
        out = np.where(z == 0, 1.0 / (s * specfun.beta_fn(mf, ms)), out)
    return out if out.ndim else float(out)


def f_cdf(z, fp: FadingParams):
    """CDF of the F variate through its Gauss hypergeometric form.

    ``F(z) = u^m_f / (m_f B) * 2F1(m_f, m_f+m_s; m_f+1; -u)`` with
    ``u = z / scale``.  Pfaff's transformation turns this into a series in
    ``w = u/(1+u)``; for ``w > 1/2`` the complementary series in ``1 - w``
    is summed instead so both branches converge at least geometrically
    with ratio 1/2.
    """
    z = np.asarray(z, dtype=float)
    if np.any(z < 0):
        raise DomainError("z must be >= 0")
    mf, ms = fp.m_f, fp.m_s
    u = z / fp.scale
    w = u / (1.0 + u)
    w = np.where(np.isinf(u), 1.0, w)
    out = np.empty_like(w)
    lb = specfun.log_beta(mf, ms)
    lo = w <= 0.5
    if np.any(lo):
        wl = w[lo]
        with np.errstate(divide="ignore"):
            pref = np.exp(mf * np.log(wl) + ms * np.log1p(-wl) - lb) / mf
        out[lo] = pref * specfun.hyp2f1_series(mf + ms, 1.0, mf + 1.0, wl)
    hi = ~lo
    if np.any(hi):
        v = 1.0 - w[hi]
        with np.errstate(divide="ignore"):
            pref = np.exp(ms * np.log(v) + mf * np.log1p(-v) - lb) / ms
        out[hi] = 1.0 - pref * specfun.hyp2f1_series(mf + ms, 1.0, ms + 1.0, v)
    out = np.clip(out, 0.0, 1.0)
    return out if out.ndim else float(out)


def f_sample(fp: FadingParams, rng: np.random.Generator, size=None):
    """Draw ``Z = z_bar (m_s-1) G1 / (m_f G2)`` with ``G1~Gamma(m_f)``, ``G2~Gamma(m_s)``."""
    g1 = rng.gamma(fp.m_f, 1.0, size=size)
    g2 = rng.gamma(fp.m_s, 1.0, size=size)
    return fp.scale * g1 / g2


def sum_f_equivalent(fp: FadingParams, n_antennas: int) -> FadingParams:
    """Single F variate standing in for the sum over ``n_antennas`` MRT branches.

    Exact when the antennas share one shadowing draw: the Gamma numerators
    add to ``Gamma(N_T m_f)`` over the common inverse-Nakagami denominator.
    """
    if int(n_antennas) != n_antennas or n_antennas < 1:
        raise DomainError(f"n_antennas must be a positive integer, got {n_antennas}")
    if n_antennas == 1:
        return fp
    return FadingParams(n_antennas * fp.m_f, fp.m_s, n_antennas * fp.z_bar)


# Gamma interference

def interference_pdf(y, ip: InterferenceParams):
    y = np.asarray(y, dtype=float)
    if np.any(y < 0):
        raise DomainError("y must be >= 0")
    out = special.gamma(ip.n_paths) ** -1 * y ** (ip.n_paths - 1) * np.exp(-y / ip.eta) / ip.eta ** ip.n_paths
    return out if out.ndim else float(out)


def interference_cdf(y, ip: InterferenceParams):
    """``1 - Gamma(N_I, y/eta) / Gamma(N_I)``."""
    y = np.asarray(y, dtype=float)
    if np.any(y < 0):
        raise DomainError("y must be >= 0")
    out = special.gammainc(ip.n_paths, y / ip.eta)
    return out if out.ndim else float(out)


# SINR distribution: exact quadrature

def _interference_upper(sp: SinrParams) -> float:
    """Upper end for the interference integral.

    Chosen so the Gamma(N_I + ceil(m_f)) law keeps less than ``TAIL_MASS``
    beyond it; the extra shape covers the ``x^m_f`` growth of the SINR
    CDF's integrand in its small-argument regime.
    """
    k = sp.interference.n_paths + math.ceil(sp.fading.m_f)
    return float(sp.interference.eta * special.gammainccinv(k, TAIL_MASS))


def _quad(fn, lo, hi, what, points=None):
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            val, err = integrate.quad(fn, lo, hi, epsabs=QUAD_EPSABS, epsrel=QUAD_EPSREL,
                                      limit=400, points=points)
        except integrate.IntegrationWarning as exc:
            warnings.simplefilter("ignore", integrate.IntegrationWarning)
            val, err = integrate.quad(fn, lo, hi, epsabs=QUAD_EPSABS, epsrel=QUAD_EPSREL,
                                      limit=400, points=points)
            if err > 1e-8 * max(abs(val), 1e-12):
                raise NumericError(f"{what}: quadrature did not converge",
                                   value=val, residual=err, detail=str(exc).splitlines()[0]) from None
    return val


def _validate_gamma(gamma):
    if not math.isfinite(gamma) or gamma < 0:
        raise DomainError(f"gamma must be finite and >= 0, got {gamma!r}")


def sinr_cdf_quad(gamma: float, sp: SinrParams) -> float:
    """``P(SINR <= gamma) = E_Y[F_Z(gamma (sigma2 + P_I Y) / (P D^-alpha))]``."""
    _validate_gamma(gamma)
    if gamma == 0:
        return 0.0
    g = sp.signal_gain
    s2 = sp.geometry.noise_power
    ip = sp.interference
    if ip.p_i == 0:
        return float(f_cdf(gamma * s2 / g, sp.fading))
    y_hi = _interference_upper(sp)

    def integrand(y):
        return f_cdf(gamma * (s2 + ip.p_i * y) / g, sp.fading) * interference_pdf(y, ip)

    val = _quad(integrand, 0.0, y_hi, "sinr_cdf_quad", points=[ip.eta * ip.n_paths])
    return min(max(val, 0.0), 1.0)


def sinr_pdf_quad(gamma: float, sp: SinrParams) -> float:
    """``f(gamma) = int x f_U(gamma x) f_X(x) dx`` with ``X = sigma2 + P_I Y``."""
    _validate_gamma(gamma)
    g = sp.signal_gain
    s2 = sp.geometry.noise_power
    ip = sp.interference
    if ip.p_i == 0:
        return float(s2 / g * f_pdf(gamma * s2 / g, sp.fading))
    y_hi = _interference_upper(sp)

    def integrand(y):
        x = s2 + ip.p_i * y
        return x / g * f_pdf(gamma * x / g, sp.fading) * interference_pdf(y, ip)

    return max(_quad(integrand, 0.0, y_hi, "sinr_pdf_quad", points=[ip.eta * ip.n_paths]), 0.0)


# SINR distribution: closed-form approximations

class AccurateCdf(NamedTuple):
    value: float
    raw: float
    rho: float
    shift_ratio: float


def _cdf_shape(fp: FadingParams, n_i: int) -> specfun.MeijerShape:
    return specfun.MeijerShape.of([1.0 - fp.m_s, 1.0 - n_i, 1.0], [fp.m_f, 0.0], m=1, n=3)


def sinr_cdf_accurate_detail(gamma: float, sp: SinrParams) -> AccurateCdf:
    """Meijer-G approximation of the SINR CDF with its validity indicators.

    ``raw`` is the unclamped formula value.  ``rho`` is the G-function
    argument ``gamma P_I eta / Lambda``; ``shift_ratio`` is
    ``sigma2 / (P_I eta)``, which the underlying integral approximation
    neglects.  The formula tends to ``exp(shift_ratio)`` rather than 1 as
    ``gamma`` grows, so it is only trustworthy when ``shift_ratio`` is small.
    """
    _validate_gamma(gamma)
    d = sp.interference_scale
    if d <= 0:
        raise DomainError("accurate form needs P_I * eta > 0")
    shift = sp.geometry.noise_power / d
    rho = gamma * d / sp.lambda_k
    if gamma == 0:
        return AccurateCdf(0.0, 0.0, 0.0, shift)
    fp, n_i = sp.fading, sp.interference.n_paths
    g = specfun.meijer_g(_cdf_shape(fp, n_i), rho)
    log_pref = shift - (math.lgamma(n_i) + math.lgamma(fp.m_s) + math.lgamma(fp.m_f))
    raw = math.exp(log_pref) * g
    return AccurateCdf(min(max(raw, 0.0), 1.0), raw, rho, shift)


def sinr_cdf_accurate(gamma: float, sp: SinrParams) -> float:
    return sinr_cdf_accurate_detail(gamma, sp).value


def sinr_cdf_asymptotic(gamma: float, sp: SinrParams) -> float:
    """High-power power law ``C * (gamma P_I eta / Lambda)^m_f``.

    Not clamped; exceeds 1 once ``P_k`` is small enough that the power law
    no longer describes the CDF.
    """
    _validate_gamma(gamma)
    fp, n_i = sp.fading, sp.interference.n_paths
    d = sp.interference_scale
    if d <= 0:
        raise DomainError("asymptotic form needs P_I * eta > 0")
    if gamma == 0:
        return 0.0
    log_c = (math.lgamma(fp.m_f + fp.m_s) + math.lgamma(n_i + fp.m_f)
             - math.lgamma(n_i) - math.lgamma(fp.m_s) - math.lgamma(fp.m_f + 1.0))
    return math.exp(log_c + sp.geometry.noise_power / d
                    + fp.m_f * math.log(gamma * d / sp.lambda_k))


def lemma_ia_approx(a, b, c, d, alpha, beta, eps, rho) -> float:
    """Meijer-G approximation of ``int_a^inf x^b (x-a)^c e^{-(x-a)/d} 2F1(alpha,beta;eps;-rho x) dx``.

    Exact when ``a = 0``; otherwise it replaces ``(x - a)^c`` by ``x^c`` over
    ``[0, inf)`` after the change of variable, which costs accuracy as
    ``a/d`` grows.
    """
    _require(d > 0 and rho > 0, "need d > 0 and rho > 0")
    _require(alpha > 0 and beta > 0 and b + c + 1 > 0, "need alpha, beta > 0 and b + c > -1")
    shape = specfun.MeijerShape.of([1.0 - beta, -b - c, 1.0 - alpha], [0.0, 1.0 - eps], m=1, n=3)
    g = specfun.meijer_g(shape, d * rho)
    log_pref = (a / d + math.lgamma(eps) + (b + c + 1.0) * math.log(d)
                - math.lgamma(alpha) - math.lgamma(beta))
    return math.exp(log_pref) * g


def lemma_ia_quad(a, b, c, d, alpha, beta, eps, rho) -> float:
    """Brute-force quadrature of the same integral (decaying exponential)."""
    _require(d > 0 and rho > 0 and a >= 0, "need a >= 0, d > 0 and rho > 0")

    def integrand(v):
        x = a + v
        return x ** b * v ** c * math.exp(-v / d) * specfun.gauss_2f1(alpha, beta, eps, -rho * x)

    # e^{-60} relative to the bulk is far below the quadrature tolerance
    return _quad(integrand, 0.0, 60.0 * d, "lemma_ia_quad", points=[d * max(b + c, 1.0)])


# Monte Carlo

def sinr_sample(sp: SinrParams, rng: np.random.Generator, size=None):
    """Draw SINR values straight from the channel model."""
    z = f_sample(sp.fading, rng, size)
    y = rng.gamma(sp.interference.n_paths, sp.interference.eta, size=size)
    return sp.signal_gain * z / (sp.geometry.noise_power + sp.interference.p_i * y)
