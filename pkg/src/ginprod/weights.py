"""Eigenvalue weights of the product ensemble and its skew-orthogonal polynomials.

A product of ``m`` real Gaussian factors with shapes (N+nu_{i-1}) x (N+nu_i)
has a Pfaffian eigenvalue process driven by a one-point weight ``w_r`` on the
real line and a two-point weight ``w_c`` on the upper half plane.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy import special as sc

from .exactnum import ExactValue, SQRT2, SQRTPI, gamma_half
from .special import (
    DEFAULT_SPEC,
    QuadratureSpec,
    integrate,
    integrate_from_zero,
    factor_exponents,
    weight_wr_numeric,
)

__all__ = [
    "ProductSpec",
    "SkewPolynomial",
    "RepresentationMismatch",
    "skew_coefficient",
    "skew_poly",
    "skew_norm",
    "weight_wr",
    "weight_wc",
    "weight_wc_lemma",
    "i_mu_lemma",
    "sign_moment_numeric",
    "skew_product_numeric",
]


@dataclass(frozen=True)
class ProductSpec:
    """Dimension ``N``, number of factors ``m`` and the full list nu_0..nu_m."""

    N: int
    m: int
    nu: tuple[int, ...] = ()

    def __post_init__(self):
        if self.N < 1 or self.m < 1:
            raise ValueError("N and m must be positive")
        nu = tuple(int(v) for v in self.nu)
        if not nu:
            nu = (0,) * (self.m + 1)
        elif len(nu) == self.m - 1:
            nu = (0, *nu, 0)
        elif len(nu) == 1 and self.m == 1 and nu[0] == 0:
            nu = (0, 0)
        if len(nu) != self.m + 1 or nu[0] or nu[-1] or any(v < 0 for v in nu):
            raise ValueError(
                f"nu must list m+1={self.m + 1} nonnegative entries with nu_0 = nu_m = 0 "
                f"(or the m-1 interior entries), got {self.nu!r}")
        object.__setattr__(self, "nu", nu)

    @property
    def exponents(self) -> tuple[int, ...]:
        """Per-factor weight exponents (nu_1, ..., nu_m)."""
        return self.nu[1:]

    @property
    def interior(self) -> tuple[int, ...]:
        return self.nu[1:-1]

    @property
    def is_square(self) -> bool:
        return not any(self.nu)

    def with_N(self, N: int) -> "ProductSpec":
        return ProductSpec(N, self.m, self.nu)


class RepresentationMismatch(ArithmeticError):
    """Two independent representations of the same quantity disagree."""


@dataclass(frozen=True)
class SkewPolynomial:
    degree: int
    coefficients: tuple[tuple[int, int], ...]  # (power, integer coefficient)

    def __post_init__(self):
        powers = dict(self.coefficients)
        if powers.get(self.degree) != 1:
            raise ValueError("skew polynomials are monic")
        if any((p - self.degree) % 2 for p in powers):
            raise ValueError("skew polynomials have definite parity")

    def __call__(self, x):
        return sum(c * x**p for p, c in self.coefficients)

    def as_dict(self) -> dict[int, int]:
        return dict(self.coefficients)

    def __str__(self):
        parts = []
        for p, c in sorted(self.coefficients, reverse=True):
            mono = "1" if p == 0 else ("x" if p == 1 else f"x^{p}")
            if c == 1:
                term = mono
            elif c == -1:
                term = f"-{mono}"
            else:
                term = f"{c}{'' if p == 0 else mono}" if p == 0 else f"{c}{mono}"
            parts.append(term)
        return " + ".join(parts).replace("+ -", "- ")


def skew_coefficient(spec: ProductSpec, j: int) -> int:
    """c_j in p_{2j+1} = x^{2j+1} - c_j x^{2j-1}: prod over factors of (2j + nu_k)."""
    return math.prod(2 * j + v for v in spec.exponents)


def skew_poly(spec: ProductSpec, degree: int) -> SkewPolynomial:
    if degree < 0:
        raise ValueError("degree must be nonnegative")
    if degree % 2 == 0 or degree == 1:
        return SkewPolynomial(degree, ((degree, 1),))
    j = (degree - 1) // 2
    return SkewPolynomial(degree, ((degree, 1), (degree - 2, -skew_coefficient(spec, j))))


def skew_norm(spec: ProductSpec, j: int) -> ExactValue:
    """h_{j-1} = prod_k (2 sqrt(2 pi) / 2^{nu_k}) Gamma(2j - 1 + nu_k)."""
    if j < 1:
        raise ValueError("j must be positive")
    out = ExactValue.coerce(1)
    for v in spec.exponents:
        # Gamma(2j-1+v) is an integer factorial
        out = out * (2 * SQRT2 * SQRTPI) * Fraction(math.factorial(2 * j - 2 + v), 2**v)
    return out


def weight_wr(spec: ProductSpec, x, quad: QuadratureSpec = DEFAULT_SPEC):
    return weight_wr_numeric(spec.m, spec.interior, x, quad)


def _wc_m1(x, y):
    # 2 e^{-x^2+y^2} erfc(sqrt2 y), written with erfcx to avoid overflow
    return 2.0 * np.exp(-x * x - y * y) * sc.erfcx(math.sqrt(2.0) * y)


def _wc_m2(x, y, quad: QuadratureSpec):
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    r2 = x * x + y * y
    out = np.zeros_like(r2)
    live = r2 < 1.6e5
    if not np.any(live):
        return out
    xr, yr, rr = x[live], y[live], r2[live]
    # t = e^u; the integrand 4 exp(-4 r^2 t - 1/(4t)) k0e(2 r^2 t) erfcx(2 y sqrt t)
    # is negligible once either exponent passes 800
    lo = math.log(1.0 / 3200.0)
    hi = math.log(200.0 / rr.min())

    def integrand(u):
        t = np.exp(u)[:, None]
        arg = 2.0 * rr[None, :] * t
        return 4.0 * np.exp(-2.0 * arg - 0.25 / t) * sc.k0e(arg) * sc.erfcx(2.0 * yr[None, :] * np.sqrt(t))

    peak = -math.log(4.0 * math.sqrt(float(np.median(rr))))
    val, _ = integrate(integrand, lo, hi, quad, points=(min(max(peak, lo), hi),))
    out[live] = val
    return out


def weight_wc(m: int, x, y, quad: QuadratureSpec = DEFAULT_SPEC):
    """Complex two-point weight w_c(x, y) for y > 0 (m = 1 or 2)."""
    xa = np.asarray(x, dtype=float)
    ya = np.asarray(y, dtype=float)
    if np.any(ya <= 0):
        raise ValueError("w_c needs y > 0")
    xa, ya = np.broadcast_arrays(xa, ya)
    if m == 1:
        out = _wc_m1(xa, ya)
    elif m == 2:
        out = _wc_m2(xa, ya, quad).reshape(xa.shape)
    else:
        raise NotImplementedError("pointwise w_c is only available for m <= 2")
    return float(out) if out.ndim == 0 else out


def _lemma_k0(mp_, mm_, quad):
    # 8 int_1^inf s (s^2-1)^{-1/2} K0(s mu+) K0(s mu-) ds with s = cosh(theta)
    mp_ = np.atleast_1d(np.asarray(mp_, dtype=float))
    mm_ = np.atleast_1d(np.asarray(mm_, dtype=float))

    def integrand(th):
        c = np.cosh(th)[:, None]
        a, b = c * mp_[None, :], c * mm_[None, :]
        return 8.0 * c * sc.k0e(a) * sc.k0e(b) * np.exp(-(a + b))

    hi = math.acosh(max(1.0, 800.0 / float(np.min(mp_ + mm_))) + 1.0)
    val, _ = integrate(integrand, 0.0, hi, quad)
    return val


def _lemma_t(mp_, mm_, quad):
    # 4 sqrt(pi) int_0^inf t^{-1/2} exp(-(mu+^2+mu-^2) t - 1/(4t)) K0(2 mu+ mu- t) dt, t = e^u
    mp_ = np.atleast_1d(np.asarray(mp_, dtype=float))
    mm_ = np.atleast_1d(np.asarray(mm_, dtype=float))
    ssq = mp_ * mp_ + mm_ * mm_
    prod = mp_ * mm_

    def integrand(u):
        t = np.exp(u)[:, None]
        arg = 2.0 * prod[None, :] * t
        return (4.0 * math.sqrt(math.pi) * np.sqrt(t)
                * np.exp(-ssq[None, :] * t - 0.25 / t - arg) * sc.k0e(arg))

    lo = math.log(1.0 / 3200.0)
    hi = math.log(800.0 / float(ssq.min()))
    val, _ = integrate(integrand, lo, max(hi, lo + 1.0), quad,
                       points=(-math.log(2.0 * math.sqrt(float(ssq.max()))),))
    return val


def i_mu_lemma(mu_plus: float, mu_minus: float, quad: QuadratureSpec = DEFAULT_SPEC,
               check_rtol: float = 1e-6) -> float:
    """The 2x2 matrix integral I(mu+, mu-), evaluated two ways.

    Returns the K0 x K0 value after checking the t-integral representation
    agrees with it; raises :class:`RepresentationMismatch` otherwise.
    """
    if mu_plus <= 0 or mu_minus <= 0:
        raise ValueError("mu+ and mu- must be positive")
    # sort so the result is symmetric bit-for-bit
    a, b = sorted((float(mu_plus), float(mu_minus)))
    v1 = float(_lemma_k0(a, b, quad)[0])
    v2 = float(_lemma_t(a, b, quad)[0])
    if abs(v1 - v2) > check_rtol * abs(v1):
        raise RepresentationMismatch(f"I({a}, {b}): {v1!r} vs {v2!r}")
    return v1


def i_mu_both(mu_plus, mu_minus, quad: QuadratureSpec = DEFAULT_SPEC):
    """Both representations of I(mu+, mu-) (vectorised, no consistency check)."""
    return _lemma_k0(mu_plus, mu_minus, quad), _lemma_t(mu_plus, mu_minus, quad)


def weight_wc_lemma(x: float, y: float, quad: QuadratureSpec = DEFAULT_SPEC) -> float:
    """m = 2 complex weight through the delta integral of the 2x2 matrix weight.

    w_c = (1/pi) int d delta |delta| / sqrt(delta^2 + 4 y^2) I(mu+, mu-),
    mu+- = (+-|delta| + sqrt(delta^2 + 4 (x^2+y^2))) / 2.
    """
    r2 = x * x + y * y

    def integrand(d):
        root = np.sqrt(d * d + 4.0 * r2)
        mp_ = 0.5 * (d + root)
        mm_ = 0.5 * (root - d)
        val = _lemma_k0(mp_, mm_, quad.loosened(0.1))
        return 2.0 * d / np.sqrt(d * d + 4.0 * y * y) * val / math.pi

    val, _ = integrate(integrand, 0.0, 60.0 + 4.0 * math.sqrt(r2), quad,
                       points=(1.0,))
    return float(val)


def sign_moment_numeric(exps: Sequence[int], a: int, b: int,
                        quad: QuadratureSpec = DEFAULT_SPEC) -> float:
    """int int w(x) w(y) x^a y^b sgn(y - x) dx dy by iterated quadrature."""
    if (a + b) % 2 == 0:
        return 0.0
    if a % 2 == 1:
        return -sign_moment_numeric(exps, b, a, quad)
    m = len(exps)
    interior = tuple(exps[:-1])

    def w(v):
        return weight_wr_numeric(m, interior, v, quad)

    # a even, b odd: 4 int_0^inf y^b w(y) int_0^y x^a w(x) dx dy
    def outer(y):
        def inner(tau):
            v = tau[:, None] * y[None, :]
            return (v**a * w(v.ravel()).reshape(v.shape)) * y[None, :]
        inner_val, _ = integrate_from_zero(inner, 1.0, quad.loosened(0.1))
        return 4.0 * y**b * w(y) * inner_val

    upper = 40.0 + 10.0 * (a + b) ** (m / 2.0 + 0.5) if m > 1 else 12.0 + 2.0 * (a + b)
    val, _ = integrate_from_zero(outer, upper, quad)
    return float(val)


def skew_product_numeric(spec: ProductSpec, deg_a: int, deg_b: int,
                         quad: QuadratureSpec = DEFAULT_SPEC) -> float:
    """<p_a, p_b> = alpha + beta at u = v = 1 from pointwise quadrature (m <= 2).

    The complex part is  i int int w_c (p_a(z) p_b(zbar) - p_b(z) p_a(zbar)),
    which equals -2 int int w_c Im(p_a(z) conj p_b(z)).
    """
    if spec.m > 2 or not spec.is_square:
        raise NotImplementedError("direct skew products need square factors and m <= 2")
    pa = skew_poly(spec, deg_a).as_dict()
    pb = skew_poly(spec, deg_b).as_dict()
    alpha = 0.0
    for i, ci in pa.items():
        for k, ck in pb.items():
            alpha += ci * ck * sign_moment_numeric(spec.exponents, i, k, quad)
    if (deg_a + deg_b) % 2 == 0:
        return alpha
    beta = _beta_numeric(spec.m, pa, pb, quad)
    return alpha + beta


def _poly_eval(coeffs: dict[int, int], z):
    return sum(c * z**p for p, c in coeffs.items())


def _beta_numeric(m: int, pa, pb, quad: QuadratureSpec) -> float:
    span = 12.0 if m == 1 else 44.0
    inner_q = quad.loosened(0.1)

    def outer(y):
        def inner(x):
            X = x[:, None] * np.ones_like(y)[None, :]
            Y = np.ones_like(x)[:, None] * y[None, :]
            z = X + 1j * Y
            im = np.imag(_poly_eval(pa, z) * np.conj(_poly_eval(pb, z)))
            wc = weight_wc(m, X.ravel(), Y.ravel(), inner_q.loosened(0.1)).reshape(X.shape)
            # even in x for odd total degree, so fold onto x > 0
            return -4.0 * wc * im
        val, _ = integrate_from_zero(inner, span, inner_q)
        return val

    val, _ = integrate_from_zero(outer, span, quad)
    return float(val)
