"""Special functions used by the fading and bit-error closed forms.

Gamma, log-gamma and the incomplete gamma are thin wrappers over the
standard library and ``scipy.special`` with argument checking.  The Gauss
hypergeometric series and the Meijer G-function are evaluated here
directly: the former by its power series after a Pfaff transformation,
the latter by numerical integration of its Mellin-Barnes representation
along a vertical line in the complex plane.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import integrate, optimize, special

from .errors import DomainError, NumericError, ParameterError

__all__ = [
    "MeijerShape",
    "SUPPORTED_SHAPES",
    "gamma_fn",
    "log_gamma",
    "upper_incomplete_gamma",
    "beta_fn",
    "log_beta",
    "gauss_2f1",
    "hyp2f1_series",
    "meijer_g",
]

SUPPORTED_SHAPES = frozenset({(1, 0, 0, 1), (1, 3, 3, 2), (1, 4, 4, 2)})

SERIES_RTOL = 1e-15
SERIES_MAX_TERMS = 200_000
PFAFF_LIMIT = 0.999

CONTOUR_RTOL = 1e-8
NARROW_GAP = 1e-3
DEGENERACY_SHIFT = 1e-6


def _check_positive(name, value):
    if not (isinstance(value, (int, float, np.floating, np.integer)) and math.isfinite(value)):
        raise DomainError(f"{name} must be a finite real, got {value!r}")
    if value <= 0:
        raise DomainError(f"{name} must be > 0, got {value!r}")


def gamma_fn(a: float) -> float:
    """Gamma function for positive real arguments.

    Overflows to ``inf`` above roughly 171; use :func:`log_gamma` there.
    """
    _check_positive("a", a)
    try:
        return math.gamma(a)
    except OverflowError:
        return math.inf


def log_gamma(a: float) -> float:
    _check_positive("a", a)
    return math.lgamma(a)


def upper_incomplete_gamma(a: float, x: float) -> float:
    """Unnormalised upper incomplete gamma ``Gamma(a, x)``."""
    _check_positive("a", a)
    if not math.isfinite(x) or x < 0:
        raise DomainError(f"x must be finite and >= 0, got {x!r}")
    if x == 0:
        return gamma_fn(a)
    q = float(special.gammaincc(a, x))
    if a > 170:
        return math.exp(math.log(q) + math.lgamma(a)) if q > 0 else 0.0
    return q * math.gamma(a)


def log_beta(a: float, b: float) -> float:
    _check_positive("a", a)
    _check_positive("b", b)
    return math.lgamma(a) + math.lgamma(b) - math.lgamma(a + b)


def beta_fn(a: float, b: float) -> float:
    """Beta function ``B(a, b)`` evaluated through log-gamma."""
    return math.exp(log_beta(a, b))


def hyp2f1_series(a, b, c, x, *, rtol=SERIES_RTOL, max_terms=SERIES_MAX_TERMS):
    """Plain Gauss series, vectorised over ``x``; requires ``|x| < 1``.

    Summation stops once every element's latest term is below ``rtol`` times
    its partial sum.  Raises :class:`NumericError` if that does not happen
    within ``max_terms`` terms.
    """
    x = np.asarray(x, dtype=float)
    if np.any(np.abs(x) >= 1):
        raise DomainError("series requires |x| < 1")
    term = np.ones_like(x)
    total = np.ones_like(x)
    active = np.ones(x.shape, dtype=bool)
    for n in range(max_terms):
        factor = (a + n) * (b + n) / ((c + n) * (n + 1))
        term = term * factor * x
        total = total + term
        active = np.abs(term) > rtol * np.abs(total)
        # a or b a non-positive integer terminates the series
        if not np.any(active) or factor == 0:
            return total
    bad = np.flatnonzero(active.ravel())
    raise NumericError(
        "hypergeometric series did not converge",
        a=a, b=b, c=c, terms=max_terms,
        worst_x=float(x.ravel()[bad[0]]),
        last_term=float(np.asarray(term).ravel()[bad[0]]),
    )


def gauss_2f1(a: float, b: float, c: float, z: float) -> float:
    """Gauss hypergeometric function ``2F1(a, b; c; z)`` for real ``z < 1``.

    For ``z < 0`` the Pfaff transformation
    ``2F1(a,b;c;z) = (1-z)^(-a) 2F1(a, c-b; c; z/(z-1))`` maps the argument
    into ``[0, 1)``; ``a`` and ``b`` are swapped first when that terminates
    the series or shortens it.
    """
    for name, v in (("a", a), ("b", b), ("c", c), ("z", z)):
        if not math.isfinite(v):
            raise DomainError(f"{name} must be finite, got {v!r}")
    if c <= 0 and float(c).is_integer():
        raise DomainError(f"c must not be a non-positive integer, got {c!r}")
    if z >= 1:
        raise DomainError(f"z must be < 1, got {z!r}")
    if z == 0:
        return 1.0
    if z > -1:
        return float(hyp2f1_series(a, b, c, z))
    w = z / (z - 1.0)
    if w > PFAFF_LIMIT:
        raise NumericError(
            "argument too close to the Pfaff transform's unit circle",
            a=a, b=b, c=c, z=z, w=w,
        )
    # pick the ordering whose transformed series terminates, else either
    if float(c - a).is_integer() and c - a <= 0:
        a, b = b, a
    return float((1.0 - z) ** (-a) * hyp2f1_series(a, c - b, c, w))


@dataclass(frozen=True)
class MeijerShape:
    """Orders and parameters of a Meijer G-function ``G^{m,n}_{p,q}``."""

    m: int
    n: int
    p: int
    q: int
    a: tuple = field(default=())
    b: tuple = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "a", tuple(float(v) for v in self.a))
        object.__setattr__(self, "b", tuple(float(v) for v in self.b))
        if len(self.a) != self.p or len(self.b) != self.q:
            raise ParameterError(
                f"expected {self.p} upper and {self.q} lower parameters, "
                f"got {len(self.a)} and {len(self.b)}"
            )
        if not (self.m <= self.q and self.n <= self.p):
            raise ParameterError("need m <= q and n <= p")
        if (self.m, self.n, self.p, self.q) not in SUPPORTED_SHAPES:
            raise ParameterError(
                f"unsupported Meijer-G shape {(self.m, self.n, self.p, self.q)}"
            )
        if not all(math.isfinite(v) for v in self.a + self.b):
            raise ParameterError("parameters must be finite")

    @classmethod
    def of(cls, a_list: Sequence[float], b_list: Sequence[float], m: int, n: int):
        return cls(m, n, len(a_list), len(b_list), tuple(a_list), tuple(b_list))

    @property
    def right_poles_start(self) -> float:
        """Leftmost pole of the Gamma(b_j - s) family, j <= m."""
        return min(self.b[: self.m])

    @property
    def left_poles_start(self) -> float:
        """Rightmost pole of the Gamma(1 - a_j + s) family, j <= n."""
        if self.n == 0:
            return -math.inf
        return max(aj - 1.0 for aj in self.a[: self.n])

    @property
    def gap(self) -> float:
        return self.right_poles_start - self.left_poles_start

    def log_kernel(self, s):
        """log of the Mellin-Barnes kernel (complex, vectorised over ``s``)."""
        m, n = self.m, self.n
        out = np.zeros_like(s, dtype=complex)
        for bj in self.b[:m]:
            out += special.loggamma(bj - s)
        for aj in self.a[:n]:
            out += special.loggamma(1.0 - aj + s)
        for bj in self.b[m:]:
            out -= special.loggamma(1.0 - bj + s)
        for aj in self.a[n:]:
            out -= special.loggamma(aj - s)
        return out


def _contour_abscissa(shape: MeijerShape, log_z: float) -> float:
    """Real part of the integration line.

    Placed where the integrand's modulus on the real axis is smallest, which
    keeps cancellation along the line to a minimum; it stays at least
    ``min(gap/10, 1/4)`` away from either pole family.
    """
    lo, hi = shape.left_poles_start, shape.right_poles_start
    if math.isinf(lo):
        # no left poles: Gamma(-s)-type kernels, any c < hi works
        lo = hi - max(10.0, abs(log_z) + 10.0)
    gap = hi - lo
    margin = min(0.1 * gap, 0.25)
    a, b = lo + margin, hi - margin

    def objective(c):
        return float(np.real(shape.log_kernel(np.array(c, dtype=complex)))) + c * log_z

    res = optimize.minimize_scalar(objective, bounds=(a, b), method="bounded",
                                   options={"xatol": 1e-6 * max(gap, 1.0)})
    c = float(res.x)
    mid = 0.5 * (lo + hi)
    if objective(mid) <= objective(c):
        c = mid
    return c


def _tail_cutoff(shape, c, log_z, log_ref, rtol):
    """Smallest T with integrand modulus below ``rtol * exp(log_ref)`` for t >= T."""
    target = log_ref + math.log(rtol)

    def log_mod(t):
        s = np.array(c + 1j * t)
        return float(np.real(shape.log_kernel(s))) + c * log_z

    t = 1.0
    while log_mod(t) > target:
        t *= 2.0
        if t > 1e4:
            raise NumericError("Mellin-Barnes integrand does not decay",
                               shape=(shape.m, shape.n, shape.p, shape.q), c=c)
    # the modulus is eventually monotone; refine the crossing
    lo = t / 2.0 if t > 1.0 else 0.0
    if log_mod(lo) <= target:
        return t
    return optimize.brentq(lambda x: log_mod(x) - target, lo, t, xtol=1e-3)


def meijer_g(shape: MeijerShape, z: float, *, rtol: float = CONTOUR_RTOL) -> float:
    """Real Meijer G-function for ``z > 0`` by Mellin-Barnes quadrature.

    ``G(z) = (1/2 pi i) int_L Phi(s) z^s ds`` is integrated along
    ``s = c + i t``.  For real parameters ``Phi(conj s) = conj Phi(s)``, so
    ``G = (1/pi) int_0^inf Re[Phi(c+it) z^(c+it)] dt``.
    """
    if not isinstance(shape, MeijerShape):
        raise ParameterError("shape must be a MeijerShape")
    if not math.isfinite(z) or z < 0:
        raise DomainError(f"z must be finite and >= 0, got {z!r}")
    if z == 0:
        return _meijer_at_zero(shape)

    gap = shape.gap
    if gap <= 0:
        raise ParameterError(
            "pole families of the Mellin-Barnes kernel overlap; no separating contour",
            ) from None
    if gap < NARROW_GAP:
        warnings.warn(
            f"Meijer-G pole gap {gap:.2e} is narrower than {NARROW_GAP}; "
            "lower parameters shifted by +%g" % DEGENERACY_SHIFT,
            RuntimeWarning, stacklevel=2,
        )
        m = shape.m
        shifted_b = tuple(bj + DEGENERACY_SHIFT for bj in shape.b[:m]) + shape.b[m:]
        shape = MeijerShape(shape.m, shape.n, shape.p, shape.q, shape.a, shifted_b)

    log_z = math.log(z)
    c = _contour_abscissa(shape, log_z)
    log_ref = float(np.real(shape.log_kernel(np.array(c, dtype=complex)))) + c * log_z
    t_max = _tail_cutoff(shape, c, log_z, log_ref, 1e-17)

    def integrand(t):
        s = np.array(c + 1j * t)
        return float(np.real(np.exp(shape.log_kernel(s) + s * log_z)))

    # split at roughly one oscillation period of z^(it) so quad sees smooth pieces
    period = 2.0 * math.pi / max(abs(log_z), 1.0)
    n_pieces = max(1, min(400, int(math.ceil(t_max / period))))
    edges = np.linspace(0.0, t_max, n_pieces + 1)
    ref = math.exp(log_ref)
    total = 0.0
    err = 0.0
    with warnings.catch_warnings():
        # quad's roundoff warning is superseded by the error check below
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        for lo, hi in zip(edges[:-1], edges[1:]):
            val, e = integrate.quad(integrand, lo, hi, epsabs=1e-16 * ref,
                                    epsrel=1e-12, limit=200)
            total += val
            err += e
    value = total / math.pi
    err /= math.pi
    if err > max(rtol * abs(value), 1e-300) and err > 1e-15 * ref:
        raise NumericError("Mellin-Barnes quadrature did not reach tolerance",
                           z=z, value=value, error_estimate=err, contour=c)
    return value


def _meijer_at_zero(shape: MeijerShape) -> float:
    """Limit z -> 0+: leading residue at the first right pole."""
    b0 = shape.right_poles_start
    if b0 > 0:
        return 0.0
    if b0 < 0:
        return math.inf
    # b0 == 0: residue of Gamma(-s) at s=0 times the rest of the kernel
    s = np.array(0.0 + 0j)
    others = MeijerShape(shape.m, shape.n, shape.p, shape.q, shape.a, shape.b)
    rest = 0.0 + 0j
    for j, bj in enumerate(others.b[: others.m]):
        if bj != 0.0:
            rest += special.loggamma(bj - s)
    for aj in others.a[: others.n]:
        rest += special.loggamma(1.0 - aj + s)
    for bj in others.b[others.m:]:
        rest -= special.loggamma(1.0 - bj + s)
    for aj in others.a[others.n:]:
        rest -= special.loggamma(aj - s)
    return float(np.real(np.exp(rest)))
