"""Exact and numeric evaluation of the scalars entering the probability determinants.

Notation: ``M(a, b) = int int w(x) w(y) x^a y^b sgn(y - x) dx dy`` is the
sign moment of the real weight.  For even ``a = 2j-2`` and odd ``b = 2k-1``
it equals ``2^{m(j+k-1/2)} a_{j,k}`` where ``a_{j,k}`` is a Meijer G value
at unit argument.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Literal

import mpmath

from .exactnum import ExactValue, gamma_half, to_float
from .special import (
    DEFAULT_SPEC,
    QuadratureSpec,
    meijer_a_mb,
    meijer_a_numeric,
)
from .weights import ProductSpec, skew_coefficient, skew_norm

__all__ = [
    "UnsupportedModeError",
    "AlphaMatrix",
    "gaussian_sign_moment",
    "a_exact_m1",
    "a_exact_m2",
    "a_exact",
    "sign_moment",
    "even_moment",
    "alpha_matrix",
]

Mode = Literal["exact", "numeric"]


class UnsupportedModeError(NotImplementedError):
    """Exact arithmetic was requested where no closed form exists (m >= 3)."""


@lru_cache(maxsize=None)
def _trig_coefficients(a: int, b: int) -> tuple[int, ...]:
    # (w+1)^a (w-1)^b = sum_k p_k w^k; coefficient of z^{2k-(a+b)} in
    # (z+1/z)^a (z-1/z)^b
    out = [0] * (a + b + 1)
    for i in range(a + 1):
        ci = math.comb(a, i)
        for k in range(b + 1):
            out[i + k] += ci * math.comb(b, k) * (-1) ** (b - k)
    return tuple(out)


# e^{i n pi/4} for odd n is (sqrt2/2)(re + i im) with these signs
_EIGHTH_ROOT = {1: (1, 1), 3: (-1, 1), 5: (-1, -1), 7: (1, -1)}


@lru_cache(maxsize=None)
def gaussian_sign_moment(a: int, b: int) -> ExactValue:
    """T(a, b) = int int x^a y^b e^{-(x^2+y^2)/2} sgn(y - x) dx dy, exactly.

    In polar coordinates the radial factor is 2^{n/2} Gamma(n/2 + 1) with
    n = a + b.  The angular factor is integrated term by term from the
    Fourier expansion of cos^a sin^b over the arc where sin > cos minus its
    complement; only odd harmonics survive and each contributes a multiple
    of sqrt(2)/2.
    """
    if a < 0 or b < 0:
        raise ValueError("exponents must be nonnegative")
    n = a + b
    if n % 2 == 0:
        return ExactValue()
    coeffs = _trig_coefficients(a, b)
    # divide by 2^a (2i)^b; i^b handled through the complex accumulation
    re = Fraction(0)
    im = Fraction(0)
    for idx, c in enumerate(coeffs):
        if not c:
            continue
        h = 2 * idx - n  # harmonic, odd
        er, ei = _EIGHTH_ROOT[h % 8]
        # (4i/h) (er + i ei) = (4/h)(-ei + i er)
        re += Fraction(4 * c, h) * -ei
        im += Fraction(4 * c, h) * er
    # multiply by i^{-b} = (-i)^b
    for _ in range(b % 4):
        re, im = im, -re
    scale = Fraction(1, 2 ** (a + b))
    if im != 0:
        raise ArithmeticError("angular integral is not real")
    angular = ExactValue.monomial(re * scale / 2, sqrt2=1)
    radial = ExactValue.monomial(1, sqrt2=n) * gamma_half(n + 2)
    return radial * angular


@lru_cache(maxsize=None)
def a_exact_m1(j: int, k: int) -> ExactValue:
    """One-factor a_{j,k} = Gamma(k) sum_{i<k} Gamma(j-1/2+i) 2^{-(j-1/2+i)} / i!."""
    total = ExactValue()
    for i in range(k):
        # 2^{-(j-1/2+i)} = sqrt2 / 2^{j+i}
        total = total + gamma_half(2 * j - 1 + 2 * i) * ExactValue.monomial(
            Fraction(1, 2 ** (j + i) * math.factorial(i)), sqrt2=1)
    return total * math.factorial(k - 1)


@lru_cache(maxsize=None)
def a_exact_m2(j: int, k: int, nu: int = 0) -> ExactValue:
    """Two-factor a_{j,k} with one rectangular shift ``nu`` as a finite sum.

    Gamma(k) Gamma(j+k-1/2+nu) Gamma(j+k-1/2+nu/2)
        * sum_{i<k} Gamma(j-1/2+i) Gamma(j-1/2+nu/2+i) / (i! Gamma(2j+k-1+nu+i))

    Square factors (nu = 0) give pi^2 times a rational; odd nu gives pi times
    a rational.
    """
    if j < 1 or k < 1 or nu < 0:
        raise ValueError("need j, k >= 1 and nu >= 0")
    total = ExactValue()
    for i in range(k):
        num = gamma_half(2 * j - 1 + 2 * i) * gamma_half(2 * j - 1 + nu + 2 * i)
        total = total + num * Fraction(1, math.factorial(i) * math.factorial(2 * j + k - 2 + nu + i))
    front = gamma_half(2 * j + 2 * k - 1 + 2 * nu) * gamma_half(2 * j + 2 * k - 1 + nu)
    return front * total * math.factorial(k - 1)


def a_exact(spec: ProductSpec, j: int, k: int) -> ExactValue:
    if spec.m == 1:
        return a_exact_m1(j, k)
    if spec.m == 2:
        return a_exact_m2(j, k, spec.exponents[0])
    raise UnsupportedModeError("exact a_{j,k} is only available for m <= 2")


def _a_numeric(spec: ProductSpec, j: int, k: int, quad: QuadratureSpec, method: str, prec: int):
    if method == "mellin-barnes":
        return meijer_a_mb(j, k, spec.exponents, prec)
    return mpmath.mpf(meijer_a_numeric(spec.m, j, k, spec.interior, quad))


def sign_moment(spec: ProductSpec, a: int, b: int, mode: Mode = "exact",
                quad: QuadratureSpec = DEFAULT_SPEC, method: str = "quadrature",
                prec: int = 106):
    """M(a, b) for the product weight; antisymmetric, zero for a + b even."""
    if (a + b) % 2 == 0:
        return ExactValue() if mode == "exact" else mpmath.mpf(0)
    if a % 2 == 1:
        return -sign_moment(spec, b, a, mode, quad, method, prec)
    j, k = a // 2 + 1, (b + 1) // 2
    m = spec.m
    if mode == "exact":
        if m == 1:
            return gaussian_sign_moment(a, b)
        # 2^{m(j+k-1/2)} with m = 2 is an integer power of two
        return a_exact(spec, j, k) * ExactValue.monomial(1, sqrt2=m * (2 * j + 2 * k - 1))
    with mpmath.workprec(prec):
        return mpmath.mpf(2) ** (mpmath.mpf(m * (2 * j + 2 * k - 1)) / 2) * _a_numeric(
            spec, j, k, quad, method, prec)


def even_moment(spec: ProductSpec, j: int) -> ExactValue:
    """mu_{2j-1} = int w(x) x^{2j-2} dx = prod_f 2^{j-1/2} Gamma(j - 1/2 + nu_f/2)."""
    out = ExactValue.coerce(1)
    for v in spec.exponents:
        out = out * ExactValue.monomial(1, sqrt2=2 * j - 1) * gamma_half(2 * j - 1 + v)
    return out


@dataclass
class AlphaMatrix:
    spec: ProductSpec
    mode: str
    entries: list[list] = field(default_factory=list)
    mu_column: list | None = None
    norms: list = field(default_factory=list)

    @property
    def rows(self) -> int:
        return len(self.entries)


def alpha_matrix(spec: ProductSpec, mode: Mode = "exact", quad: QuadratureSpec = DEFAULT_SPEC,
                 method: str | None = None, prec: int = 106) -> AlphaMatrix:
    """Raw alpha_{2j-1,2l} at u = v = 1 plus the odd-N column of even moments.

    alpha_{2j-1,2l} = M(2j-2, 2l-1) - c_{l-1} M(2j-2, 2l-3), with c the skew
    coefficient of p_{2l-1}.  Also returns h_0 .. h_{ceil(N/2)-1}.
    """
    if mode == "exact" and spec.m > 2:
        raise UnsupportedModeError("exact mode requires m <= 2")
    if method is None:
        method = "quadrature" if prec <= 64 or spec.m <= 2 else "mellin-barnes"
    N = spec.N
    rows, cols = (N + 1) // 2, N // 2

    def convert(v):
        if mode == "exact":
            return v
        return to_float(v, prec) if isinstance(v, ExactValue) else v

    cache: dict[tuple[int, int], object] = {}

    def M(a, b):
        if (a, b) not in cache:
            cache[(a, b)] = convert(sign_moment(spec, a, b, mode, quad, method, prec))
        return cache[(a, b)]

    entries = []
    with mpmath.workprec(prec):
        for j in range(1, rows + 1):
            row = []
            for l in range(1, cols + 1):
                val = M(2 * j - 2, 2 * l - 1)
                c = skew_coefficient(spec, l - 1)
                if l > 1 and c:
                    val = val - c * M(2 * j - 2, 2 * l - 3)
                row.append(val)
            entries.append(row)
        mu = [convert(even_moment(spec, j)) for j in range(1, rows + 1)] if N % 2 else None
        norms = [convert(skew_norm(spec, j)) for j in range(1, rows + 1)]
    return AlphaMatrix(spec, mode, entries, mu, norms)
