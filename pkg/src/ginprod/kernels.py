"""Pfaffian correlation kernel of the eigenvalue process at finite and infinite N.

Everything derives from the real pre-kernel

    S(x, y) = sum_{i=0}^{N-2} w(x) x^i (x A_i(y) - A_{i+1}(y)) / C_i,
    A_i(y)  = int w(v) v^i sgn(y - v) dv,

with C_i = prod_f 2 sqrt(2 pi) 2^{-nu_f} Gamma(i + 1 + nu_f).  The moments
A_i are computed by adaptive quadrature against the real weight; a Meijer G
representation is kept for cross-checking at m <= 2.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Literal, Sequence

import mpmath
import numpy as np
from scipy import special as sc

from .moments import UnsupportedModeError
from .special import (
    DEFAULT_SPEC,
    QuadratureSpec,
    SingularPointError,
    hyper_0Fm,
    integrate,
    integrate_from_zero,
)
from .weights import ProductSpec, weight_wc, weight_wr

__all__ = [
    "KernelEntries",
    "DensityGrid",
    "kernel_log_norms",
    "a_moments",
    "a_moments_meijer",
    "pre_kernel_real",
    "pre_kernel_real_m1",
    "density_real",
    "density_complex",
    "integrated_density_real",
    "complex_mass",
    "kernel_entries_real",
    "kernel_entries_complex",
    "pfaffian",
    "two_point_real",
    "local_density_origin",
    "local_density_origin_complex",
    "global_density",
]


@dataclass(frozen=True)
class KernelEntries:
    """The three kernel functions at an ordered pair of points."""

    S: complex | float
    D: complex | float
    I_tilde: complex | float
    sector: Literal["real-real", "complex-complex"]
    points: tuple


@dataclass
class DensityGrid:
    abscissae: list
    values: list[float]
    N: int | None
    m: int
    nu: tuple[int, ...] = ()
    scaling: Literal["none", "global", "local-origin"] = "none"
    kind: Literal["real", "complex"] = "real"
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.abscissae) != len(self.values):
            raise ValueError("abscissae and values differ in length")

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        if self.kind == "complex":
            w.writerow(["x", "y", "value"])
            for z, v in zip(self.abscissae, self.values):
                w.writerow([repr(float(complex(z).real)), repr(float(complex(z).imag)), repr(float(v))])
        else:
            w.writerow(["x", "value"])
            for x, v in zip(self.abscissae, self.values):
                w.writerow([repr(float(x)), repr(float(v))])
        return buf.getvalue()

    def to_json(self) -> dict:
        if self.kind == "complex":
            pts = [[float(complex(z).real), float(complex(z).imag)] for z in self.abscissae]
        else:
            pts = [float(x) for x in self.abscissae]
        return {
            "N": self.N, "m": self.m, "nu": list(self.nu), "scaling": self.scaling,
            "kind": self.kind, "abscissae": pts, "values": [float(v) for v in self.values],
            **({"meta": self.meta} if self.meta else {}),
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json())


def kernel_log_norms(spec: ProductSpec, count: int) -> np.ndarray:
    """log C_i for i = 0 .. count-1."""
    base = spec.m * math.log(2.0 * math.sqrt(2.0 * math.pi))
    return np.array([
        base + sum(math.lgamma(i + 1 + v) - v * math.log(2.0) for v in spec.exponents)
        for i in range(count)])


def _log_weight(spec: ProductSpec, v: np.ndarray, quad: QuadratureSpec) -> np.ndarray:
    v = np.abs(v)
    if spec.m == 1:
        return -0.5 * v * v
    if spec.m == 2:
        va, vb = spec.exponents
        s = 0.5 * (va + vb)
        with np.errstate(divide="ignore"):
            return ((1 - s) * math.log(2.0) + s * np.log(v)
                    + np.log(sc.kve(0.5 * (va - vb), v)) - v)
    with np.errstate(divide="ignore"):
        return np.log(weight_wr(spec, v, quad))


def _weighted_powers(spec: ProductSpec, powers: np.ndarray, quad: QuadratureSpec):
    # v -> w(v) v^j for each j in ``powers``, evaluated in log space
    def f(v):
        v = np.asarray(v, dtype=float)
        lw = _log_weight(spec, v, quad)
        with np.errstate(divide="ignore"):
            lv = np.log(v)
        return np.exp(np.where(v[:, None] > 0, lw[:, None] + powers[None, :] * lv[:, None], -np.inf))
    return f


def a_moments(spec: ProductSpec, y: float, count: int, quad: QuadratureSpec = DEFAULT_SPEC) -> np.ndarray:
    """A_0(y) .. A_{count-1}(y) by quadrature.

    Even powers give 2 sgn(y) int_0^|y| w v^j dv, odd powers give
    -2 int_|y|^inf w v^j dv.
    """
    y = float(y)
    t = abs(y)
    out = np.zeros(count)
    even = np.arange(0, count, 2)
    odd = np.arange(1, count, 2)
    if even.size and t > 0:
        head, _ = integrate_from_zero(_weighted_powers(spec, even.astype(float), quad), t, quad)
        out[even] = 2.0 * math.copysign(1.0, y) * head
    if odd.size:
        f = _weighted_powers(spec, odd.astype(float), quad)
        # the peak of w v^j sits near j^{m/2}; hand it to the integrator as a breakpoint
        peak = float(odd.max()) ** (0.5 * spec.m)
        pts = (peak,) if peak > t else ()
        tail, _ = integrate(f, t, math.inf, quad, points=pts)
        out[odd] = -2.0 * tail
    return out


def a_moments_meijer(m: int, y: float, count: int, prec: int = 80) -> list:
    """A_j(y) through Meijer G functions (square factors), for cross-checking."""
    out = []
    with mpmath.workprec(prec):
        y = mpmath.mpf(y)
        z = y * y / mpmath.mpf(2) ** m
        for j in range(count):
            if j % 2:
                b = [0] + [mpmath.mpf(1 + j) / 2] * m
                val = -mpmath.mpf(2) ** (mpmath.mpf(m * (1 + j)) / 2) * mpmath.meijerg(
                    [[], [1]], [b, []], z)
            elif y == 0:
                val = mpmath.mpf(0)
            else:
                val = y ** (1 + j) * mpmath.meijerg(
                    [[-mpmath.mpf(j - 1) / 2], []], [[0] * m, [-mpmath.mpf(j + 1) / 2]], z)
            out.append(val)
    return out


def _check_even(spec: ProductSpec):
    if spec.N % 2:
        raise ValueError("the real pre-kernel is implemented for even N only")


def _pre_kernel_many(spec: ProductSpec, xs: np.ndarray, A: np.ndarray, quad: QuadratureSpec) -> np.ndarray:
    # S(x, y) for fixed y (through A) and many x
    xs = np.asarray(xs, dtype=float)
    n = spec.N - 1
    logc = kernel_log_norms(spec, n)
    w = weight_wr(spec, xs, quad)
    i = np.arange(n)
    with np.errstate(over="ignore"):
        powers = xs[:, None] ** i[None, :] * np.exp(-logc)[None, :]
    return np.atleast_1d(w) * np.sum(powers * (xs[:, None] * A[None, :n] - A[None, 1:n + 1]), axis=1)


def pre_kernel_real(spec: ProductSpec, x, y: float, quad: QuadratureSpec = DEFAULT_SPEC):
    """S(x, y) for even N; ``x`` may be an array."""
    _check_even(spec)
    A = a_moments(spec, y, spec.N, quad)
    arr = np.asarray(x, dtype=float)
    out = _pre_kernel_many(spec, np.atleast_1d(arr), A, quad)
    return float(out[0]) if arr.ndim == 0 else out.reshape(arr.shape)


def pre_kernel_real_m1(N: int, x: float, y: float) -> float:
    """Closed form of S(x, y) for a single Ginibre factor."""
    n = N - 1
    # e^{-(x-y)^2/2} Gamma(n, xy)/Gamma(n) = e^{-(x^2+y^2)/2} sum_{k<n} (xy)^k / k!
    xy = x * y
    term, total = 1.0, 1.0
    for k in range(1, n):
        term *= xy / k
        total += term
    first = math.exp(-0.5 * (x * x + y * y)) * total
    second = 0.0
    if x != 0 and y != 0:
        a = 0.5 * n
        log_abs = (0.5 * (N - 3) * math.log(2.0) - 0.5 * x * x + n * math.log(abs(x))
                   + math.log(sc.gammainc(a, 0.5 * y * y)) + math.lgamma(a) - math.lgamma(n))
        second = math.copysign(1.0, x) ** n * math.copysign(1.0, y) * math.exp(log_abs)
    return (first + second) / math.sqrt(2.0 * math.pi)


def density_real(spec: ProductSpec, grid: Sequence[float], quad: QuadratureSpec = DEFAULT_SPEC) -> DensityGrid:
    """rho(x) = S(x, x) on ``grid``."""
    _check_even(spec)
    vals = [float(_pre_kernel_many(spec, np.array([x]), a_moments(spec, x, spec.N, quad), quad)[0])
            for x in grid]
    return DensityGrid(list(map(float, grid)), vals, spec.N, spec.m, spec.nu, "none", "real")


def _density_vector(spec: ProductSpec, quad: QuadratureSpec):
    def f(xs):
        return np.array([_pre_kernel_many(spec, np.array([x]), a_moments(spec, x, spec.N, quad), quad)[0]
                         for x in np.asarray(xs, dtype=float)])
    return f


def integrated_density_real(spec: ProductSpec, quad: QuadratureSpec | None = None) -> float:
    """int rho over R; equals the expected number of real eigenvalues."""
    _check_even(spec)
    if quad is None:
        quad = QuadratureSpec(abs_tol=1e-11, rel_tol=1e-10)
    inner = QuadratureSpec(abs_tol=1e-14, rel_tol=1e-12)
    f = _density_vector(spec, inner)
    # the density is even; it lives on |x| up to a few N^{m/2}
    edge = 4.0 * spec.N ** (0.5 * spec.m) + 10.0
    head, _ = integrate_from_zero(f, 1.0, quad)
    body, _ = integrate(f, 1.0, edge, quad, points=(spec.N ** (0.5 * spec.m),))
    tail, _ = integrate(f, edge, math.inf, quad)
    return 2.0 * float(head + body + tail)


def _complex_density(spec: ProductSpec, x, y, quad: QuadratureSpec):
    if not spec.is_square:
        raise UnsupportedModeError("complex densities are implemented for square factors only")
    if spec.m > 2:
        raise UnsupportedModeError("the complex weight is implemented for m <= 2")
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    r2 = x * x + y * y
    logc = kernel_log_norms(spec, spec.N - 1)
    i = np.arange(spec.N - 1)
    with np.errstate(divide="ignore"):
        lr = np.log(r2)
    series = np.sum(np.exp(np.where(r2[..., None] > 0, i * lr[..., None], np.where(i == 0, 0.0, -np.inf))
                           - logc), axis=-1)
    return 2.0 * y * weight_wc(spec.m, x, y, quad).reshape(x.shape) * series


def density_complex(spec: ProductSpec, grid: Sequence[complex],
                    quad: QuadratureSpec = DEFAULT_SPEC) -> DensityGrid:
    """rho^c(z) = 2 y w_c(x, y) sum_{i<N-1} |z|^{2i} / C_i for Im z > 0."""
    pts = [complex(z) for z in grid]
    if any(z.imag <= 0 for z in pts):
        raise ValueError("complex density points must lie in the upper half plane")
    xs = np.array([z.real for z in pts])
    ys = np.array([z.imag for z in pts])
    vals = _complex_density(spec, xs, ys, quad)
    return DensityGrid(pts, [float(v) for v in vals], spec.N, spec.m, spec.nu, "none", "complex")


def complex_mass(spec: ProductSpec, quad: QuadratureSpec | None = None) -> float:
    """int over the whole plane of the complex density (twice the upper half)."""
    if quad is None:
        quad = QuadratureSpec(abs_tol=1e-9, rel_tol=1e-7)
    inner = QuadratureSpec(abs_tol=1e-11, rel_tol=1e-8)
    wq = QuadratureSpec(abs_tol=1e-13, rel_tol=1e-10)
    scale = spec.N ** (0.5 * spec.m)

    def over_x(ys):
        out = []
        for y in np.asarray(ys, dtype=float):
            g = lambda xs: _complex_density(spec, xs, np.full_like(xs, y), wq)
            val, _ = integrate(g, 0.0, math.inf, inner, points=(scale,))
            out.append(2.0 * val)
        return np.array(out)

    head, _ = integrate(over_x, 0.0, 1.0, quad)
    tail, _ = integrate(over_x, 1.0, math.inf, quad, points=(scale,))
    return 2.0 * float(head + tail)


def _richardson_dy(fun, y: float, h: float) -> float:
    # two-level Richardson on central differences: error O(h^4)
    d1 = (fun(y + h) - fun(y - h)) / (2 * h)
    d2 = (fun(y + h / 2) - fun(y - h / 2)) / h
    return (4 * d2 - d1) / 3


def kernel_entries_real(spec: ProductSpec, x: float, y: float,
                        quad: QuadratureSpec = DEFAULT_SPEC) -> KernelEntries:
    """S, D = -dS/dy and I~(x, y) = int_x^y S(t, y) dt + sgn(x - y)/2."""
    _check_even(spec)
    x, y = float(x), float(y)
    A = a_moments(spec, y, spec.N, quad)
    s = float(_pre_kernel_many(spec, np.array([x]), A, quad)[0])

    def s_at(yy):
        return float(_pre_kernel_many(spec, np.array([x]), a_moments(spec, yy, spec.N, quad), quad)[0])

    h = 1e-3 * max(1.0, abs(y))
    d = -_richardson_dy(s_at, y, h)
    if x == y:
        i_tilde = 0.0
    else:
        g = lambda ts: _pre_kernel_many(spec, ts, A, quad)
        pts = (0.0,) if min(x, y) < 0 < max(x, y) else ()
        integral, _ = integrate(g, x, y, quad, points=pts)
        i_tilde = float(integral) + 0.5 * math.copysign(1.0, x - y)
    return KernelEntries(s, d, i_tilde, "real-real", (x, y))


def _complex_pre_kernel(spec: ProductSpec, w: complex, z: complex, quad: QuadratureSpec) -> complex:
    if spec.N % 2:
        raise ValueError("the complex pre-kernel is implemented for even N only")
    wc = math.sqrt(float(weight_wc(spec.m, w.real, abs(w.imag), quad)) *
                   float(weight_wc(spec.m, z.real, abs(z.imag), quad)))
    logc = kernel_log_norms(spec, spec.N - 1)
    q = w * z.conjugate()
    total = sum(q ** i / math.exp(logc[i]) for i in range(spec.N - 1))
    return 2j * wc * (z.conjugate() - w) * total


def kernel_entries_complex(spec: ProductSpec, w: complex, z: complex,
                           quad: QuadratureSpec = DEFAULT_SPEC) -> KernelEntries:
    """Complex sector: I~(w, z) = i S(conj w, z) and D(w, z) = -i S(w, conj z)."""
    if not spec.is_square or spec.m > 2:
        raise UnsupportedModeError("complex kernels need square factors and m <= 2")
    w, z = complex(w), complex(z)
    s = _complex_pre_kernel(spec, w, z, quad)
    i_tilde = 1j * _complex_pre_kernel(spec, w.conjugate(), z, quad)
    d = -1j * _complex_pre_kernel(spec, w, z.conjugate(), quad)
    return KernelEntries(s, d, i_tilde, "complex-complex", (w, z))


def pfaffian(a) -> float:
    """Pfaffian of a small antisymmetric matrix by expansion along the first row."""
    a = np.asarray(a, dtype=float)
    n = a.shape[0]
    if n % 2:
        return 0.0
    if n == 0:
        return 1.0
    total = 0.0
    rest = list(range(1, n))
    for k, j in enumerate(rest):
        if a[0, j] == 0:
            continue
        keep = [r for r in rest if r != j]
        total += (-1) ** k * a[0, j] * pfaffian(a[np.ix_(keep, keep)])
    return total


def two_point_real(spec: ProductSpec, x: float, y: float, quad: QuadratureSpec = DEFAULT_SPEC) -> float:
    """rho_2(x, y) as the Pfaffian of the assembled 4x4 kernel matrix."""
    xy = kernel_entries_real(spec, x, y, quad)
    syx = pre_kernel_real(spec, y, x, quad)
    sxx = pre_kernel_real(spec, x, x, quad)
    syy = pre_kernel_real(spec, y, y, quad)
    # blocks K(a, b) = [[D(a,b), S(a,b)], [-S(b,a), I(a,b)]], with D(a,a) = I(a,a) = 0
    mat = np.array([
        [0.0, sxx, xy.D, xy.S],
        [-sxx, 0.0, -syx, xy.I_tilde],
        [-xy.D, syx, 0.0, syy],
        [-xy.S, -xy.I_tilde, -syy, 0.0],
    ])
    return pfaffian(mat)


def _origin_series(spec: ProductSpec, t):
    # sum_{i>=0} t^i / C_i
    pref = math.prod(2.0 ** v for v in spec.exponents) / (2.0 * math.sqrt(2.0 * math.pi)) ** spec.m
    return pref * hyper_0Fm(spec.m, t, spec.interior if any(spec.interior) else ())


def local_density_origin(m: int, nu: Sequence[int], x: float,
                         quad: QuadratureSpec = DEFAULT_SPEC) -> float:
    """Large-N real density at fixed distance from the origin.

    int |x - v| w(x) w(v) sum_i (x v)^i / C_i dv, where the series sums to a
    0F_{m-1} hypergeometric function.
    """
    spec = ProductSpec(2, m, tuple(nu))
    x = float(x)
    if x == 0 and sum(v == 0 for v in spec.exponents) >= 2:
        raise SingularPointError("the local density is singular at the origin for this weight")
    wx = float(weight_wr(spec, x, quad))

    def side(sign):
        def f(v):
            v = sign * np.asarray(v, dtype=float)
            return np.abs(x - v) * weight_wr(spec, v, quad) * _origin_series(spec, x * v)
        return f

    # the integrand peaks near v = x; beyond |x| + reach it is below exp(-40) of the peak
    reach = abs(x) + (80.0 + 4.0 * abs(x)) ** (0.5 * m)
    total = 0.0
    for sign in (1.0, -1.0):
        f = side(sign)
        kink = abs(x) if sign * x > 0 else 0.0
        first = kink if kink > 0 else 1.0
        head, _ = integrate_from_zero(f, first, quad)
        rest, _ = integrate(f, first, reach, quad)
        total += float(head + rest)
    return wx * total


def local_density_origin_complex(m: int, z: complex, quad: QuadratureSpec = DEFAULT_SPEC) -> float:
    """Large-N complex density near the origin (square factors, m <= 2)."""
    if m > 2:
        raise UnsupportedModeError("the complex weight is implemented for m <= 2")
    z = complex(z)
    if z.imag < 0:
        z = z.conjugate()
    if z.imag == 0:
        return 0.0
    spec = ProductSpec(2, m)
    wc = float(weight_wc(m, z.real, z.imag, quad))
    return 2.0 * z.imag * wc * float(_origin_series(spec, abs(z) ** 2))


def global_density(m: int, kind: Literal["real", "complex"], arg) -> float:
    """Limiting laws after rescaling by N^{m/2}.

    complex: |w|^{2/m - 2} / (m pi) on the unit disk;
    real: |x|^{1/m - 1} / (2m) on [-1, 1], normalised to unit mass.
    """
    r = abs(arg)
    if r >= 1:
        return 0.0
    if r == 0 and m > 1:
        return math.inf
    if kind == "complex":
        return r ** (2.0 / m - 2.0) / (m * math.pi)
    if kind == "real":
        return r ** (1.0 / m - 1.0) / (2.0 * m)
    raise ValueError(f"unknown kind {kind!r}")
