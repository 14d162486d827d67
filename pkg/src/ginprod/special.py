"""Numerical special functions and the adaptive quadrature engine.

The quadrature engine is a globally adaptive Gauss-Kronrod (10/21 point)
rule that works on vector-valued integrands: ``f(x)`` receives a 1-D array of
nodes and returns an array whose leading axis matches the nodes.  All
remaining axes are integrated simultaneously on a shared mesh, which is what
makes the nested integrals below affordable in pure numpy.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Sequence

import mpmath
import numpy as np
from scipy import special as sc

__all__ = [
    "QuadratureSpec",
    "QuadratureError",
    "SingularPointError",
    "DEFAULT_SPEC",
    "integrate",
    "integrate_from_zero",
    "erfc",
    "bessel_k0",
    "hyper_0Fm",
    "weight_wr_numeric",
    "meijer_g_mb",
    "meijer_a_mb",
    "meijer_a_numeric",
    "factor_exponents",
]


@dataclass(frozen=True)
class QuadratureSpec:
    abs_tol: float = 1e-12
    rel_tol: float = 1e-10
    max_subdivisions: int = 4000
    max_depth: int = 4

    def __post_init__(self):
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise ValueError("tolerances must be positive")
        if self.max_subdivisions < 1:
            raise ValueError("max_subdivisions must be at least 1")

    def loosened(self, factor: float) -> "QuadratureSpec":
        return QuadratureSpec(self.abs_tol * factor, self.rel_tol * factor,
                              self.max_subdivisions, self.max_depth)


DEFAULT_SPEC = QuadratureSpec()


class QuadratureError(ArithmeticError):
    """Tolerance not reached; carries the best estimate and its error bound."""

    def __init__(self, message: str, value=None, error=None):
        super().__init__(message)
        self.value = value
        self.error = error


class SingularPointError(ValueError):
    """Raised when a weight is evaluated exactly at its logarithmic singularity."""


# Gauss-Kronrod 10/21 constants (QUADPACK qk21)
_XGK = np.array([
    0.995657163025808080735527280689003, 0.973906528517171720077964012084452,
    0.930157491355708226001207180059508, 0.865063366688984510732096688423493,
    0.780817726586416897063717578345042, 0.679409568299024406234327365114874,
    0.562757134668604683339000099272694, 0.433395394129247190799265943165784,
    0.294392862701460198131126603103866, 0.148874338981631210884826001129720,
    0.0])
_WGK = np.array([
    0.011694638867371874278064396062192, 0.032558162307964727478818972459390,
    0.054755896574351996031381300244580, 0.075039674810919952767043140916190,
    0.093125454583697605535065465083366, 0.109387158802297641899210590325805,
    0.123491976262065851077589432026990, 0.134709217311473325928054001771707,
    0.142775938577060080797094273138717, 0.147739104901338491374841515972068,
    0.149445554002916905664936468389821])
_WG = np.array([
    0.066671344308688137593568809893332, 0.149451349150580593145776339657697,
    0.219086362515982043995534934228163, 0.269266719309996355091226921569469,
    0.295524224714752870173892994651338])

# full symmetric node set on [-1, 1]
NODES = np.concatenate([-_XGK[:-1], [0.0], _XGK[:-1][::-1]])
KRONROD_WEIGHTS = np.concatenate([_WGK[:-1], [_WGK[-1]], _WGK[:-1][::-1]])
GAUSS_WEIGHTS = np.zeros(21)
# Gauss nodes are the odd-indexed Kronrod nodes (xgk[1], xgk[3], ...)
for _i, _w in enumerate(_WG):
    GAUSS_WEIGHTS[2 * _i + 1] = _w
    GAUSS_WEIGHTS[21 - 2 * _i - 2] = _w


def _piece_transform(a: float, b: float):
    """Return (g, ta, tb) mapping a possibly infinite [a, b] onto a finite range."""
    if math.isfinite(a) and math.isfinite(b):
        return None, a, b
    if math.isfinite(a) and b == math.inf:
        return ("right", a), 0.0, 1.0
    if a == -math.inf and math.isfinite(b):
        return ("left", b), 0.0, 1.0
    raise ValueError("a doubly infinite piece must be split first")


def _apply(f, transform, t):
    if transform is None:
        return f(t), None
    kind, c = transform
    s = 1.0 - t
    x = c + t / s if kind == "right" else c - t / s
    return f(x), 1.0 / (s * s)


def integrate(f: Callable[[np.ndarray], np.ndarray], a: float, b: float,
              spec: QuadratureSpec = DEFAULT_SPEC, points: Sequence[float] = ()):
    """Adaptive Gauss-Kronrod integral of a vectorised ``f`` over [a, b].

    Infinite endpoints are mapped to (0, 1] with ``x = c + t/(1-t)``.
    ``points`` are extra breakpoints (kinks, singularities, peak positions).
    Returns ``(value, error)``; raises :class:`QuadratureError` if the
    tolerance is not met within ``spec.max_subdivisions`` intervals.
    """
    sign = 1.0
    if a == b:
        out = np.asarray(f(np.array([a])))[0] * 0.0
        return out, out
    if a > b:
        a, b = b, a
        sign = -1.0
    cuts = sorted({float(p) for p in points if a < p < b})
    if a == -math.inf and b == math.inf and not cuts:
        cuts = [0.0]
    edges = [a, *cuts, b]
    pieces = [_piece_transform(lo, hi) for lo, hi in zip(edges[:-1], edges[1:])]

    # interval bookkeeping: piece id, lo, hi
    pid = np.arange(len(pieces))
    lo = np.array([p[1] for p in pieces], dtype=float)
    hi = np.array([p[2] for p in pieces], dtype=float)
    est, err = _evaluate_intervals(f, pieces, pid, lo, hi)

    while True:
        total = est.sum(axis=0)
        total_err = err.sum(axis=0)
        tol = np.maximum(spec.abs_tol, spec.rel_tol * np.abs(total))
        if np.all(total_err <= tol):
            return sign * total, total_err
        n = len(lo)
        if n >= spec.max_subdivisions:
            raise QuadratureError(
                f"quadrature did not converge in {n} subintervals "
                f"(error {np.max(total_err):.3g})", sign * total, total_err)
        scaled = err / tol
        if scaled.ndim > 1:
            scaled = scaled.reshape(n, -1).max(axis=1)
        pick = scaled > (scaled.sum() / n)
        pick[np.argmax(scaled)] = True
        if n + pick.sum() > spec.max_subdivisions:
            order = np.argsort(-scaled)[: max(1, spec.max_subdivisions - n)]
            pick = np.zeros(n, dtype=bool)
            pick[order] = True
        mid = 0.5 * (lo[pick] + hi[pick])
        new_pid = np.concatenate([pid[pick], pid[pick]])
        new_lo = np.concatenate([lo[pick], mid])
        new_hi = np.concatenate([mid, hi[pick]])
        e2, r2 = _evaluate_intervals(f, pieces, new_pid, new_lo, new_hi)
        keep = ~pick
        pid = np.concatenate([pid[keep], new_pid])
        lo = np.concatenate([lo[keep], new_lo])
        hi = np.concatenate([hi[keep], new_hi])
        est = np.concatenate([est[keep], e2])
        err = np.concatenate([err[keep], r2])


def _evaluate_intervals(f, pieces, pid, lo, hi):
    centre = 0.5 * (lo + hi)
    half = 0.5 * (hi - lo)
    est_parts, err_parts, order = [], [], []
    for k, (transform, _, _) in enumerate(pieces):
        sel = np.nonzero(pid == k)[0]
        if not sel.size:
            continue
        t = (centre[sel, None] + half[sel, None] * NODES[None, :]).ravel()
        vals, jac = _apply(f, transform, t)
        vals = np.asarray(vals, dtype=float)
        if not np.all(np.isfinite(vals)):
            raise QuadratureError("integrand returned non-finite values")
        if jac is not None:
            vals = vals * jac.reshape((-1,) + (1,) * (vals.ndim - 1))
        vals = vals.reshape((sel.size, 21) + vals.shape[1:])
        h = half[sel].reshape((-1,) + (1,) * (vals.ndim - 2))
        kron = np.tensordot(vals, KRONROD_WEIGHTS, axes=([1], [0])) * h
        gauss = np.tensordot(vals, GAUSS_WEIGHTS, axes=([1], [0])) * h
        est_parts.append(kron)
        err_parts.append(np.abs(kron - gauss))
        order.append(sel)
    order = np.concatenate(order)
    inv = np.empty_like(order)
    inv[order] = np.arange(order.size)
    est = np.concatenate(est_parts)[inv]
    err = np.concatenate(err_parts)[inv]
    return est, err


def integrate_from_zero(f, b: float, spec: QuadratureSpec = DEFAULT_SPEC, split: float = 1e-3):
    """Integral of ``f`` over [0, b] for integrands with a log singularity at 0.

    The piece [0, min(b, split)] is integrated in the variable ``x = c e^{-u}``
    which turns the logarithmic blow-up into an exponentially decaying tail.
    """
    if b == 0:
        return integrate(f, 0.0, 1.0, spec)[0] * 0.0
    c = min(b, split)

    def g(u):
        x = c * np.exp(-u)
        vals = np.asarray(f(x), dtype=float)
        return vals * x.reshape((-1,) + (1,) * (vals.ndim - 1))

    # past u = 80 the piece is below c e^{-80} times a power of u
    head, herr = integrate(g, 0.0, 80.0, spec, points=(5.0, 20.0))
    if b <= split:
        return head, herr
    tail, terr = integrate(f, c, b, spec)
    return head + tail, herr + terr


def erfc(x):
    return sc.erfc(x)


def bessel_k0(x):
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise ValueError("bessel_k0 is defined for x > 0 only")
    out = sc.k0(x)
    return float(out) if out.ndim == 0 else out


def _hyper_series(m: int, arr: np.ndarray, nu: tuple[int, ...]) -> np.ndarray:
    nu = nu or (0,) * (m - 1)
    pref = 1.0 / math.prod(math.factorial(v) for v in nu)
    # size of the largest term decides whether double precision is safe
    peak = m * np.abs(arr) ** (1.0 / m)
    risky = (arr < 0) & (peak > 18.0)
    out = np.empty_like(arr)
    ok = ~risky
    if np.any(ok):
        x = arr[ok]
        nterms = int(np.e * max(np.max(np.abs(x)), 1.0) ** (1.0 / m)) + 60
        term = np.ones_like(x)
        total = term.copy()
        for j in range(1, nterms):
            term = term * x / (j * math.prod(j + v for v in nu))
            total += term
        out[ok] = total * pref
    lower = [1 + v for v in nu]
    for i in np.nonzero(risky)[0]:
        out[i] = float(mpmath.hyper([], lower, float(arr[i]))) * pref
    return out


def hyper_0Fm(m: int, x, nu: Sequence[int] = ()):
    """Series sum_j x^j / (j!)^m, or with shifted factorials
    sum_j x^j / (j! prod_k (j + nu_k)!) when ``nu`` (length m-1) is given.

    Overflow yields ``inf`` together with a RuntimeWarning.
    """
    if m < 1:
        raise ValueError("m must be at least 1")
    nu = tuple(nu)
    if nu and len(nu) != m - 1:
        raise ValueError("nu must have m-1 entries")
    arr = np.asarray(x, dtype=float)
    scalar = arr.ndim == 0
    arr = np.atleast_1d(arr)
    if not any(nu) and m == 1:
        with np.errstate(over="ignore"):
            out = np.exp(arr)
    elif not any(nu) and m == 2:
        r = 2.0 * np.sqrt(np.abs(arr))
        with np.errstate(over="ignore"):
            out = np.where(arr >= 0, sc.i0(r), sc.j0(r))
    else:
        out = _hyper_series(m, arr, nu)
    if np.any(np.isinf(out)):
        warnings.warn("hyper_0Fm overflowed to infinity", RuntimeWarning, stacklevel=2)
    return float(out[0]) if scalar else out


def factor_exponents(m: int, nu: Sequence[int] = ()) -> tuple[int, ...]:
    """Per-factor exponents (nu_1, ..., nu_{m-1}, 0) from the interior list."""
    nu = tuple(int(v) for v in nu)
    if not nu:
        return (0,) * m
    if len(nu) == m + 1:
        if nu[0] or nu[-1]:
            raise ValueError("outer entries of a full nu list must be zero")
        nu = nu[1:-1]
    if len(nu) != m - 1:
        raise ValueError(f"expected {m - 1} interior nu entries, got {len(nu)}")
    if any(v < 0 for v in nu):
        raise ValueError("nu entries must be nonnegative")
    return (*nu, 0)


def _factor_density(t, v):
    # |t|^v 2^{-v/2} e^{-t^2/2} on t > 0
    return np.exp(v * np.log(t) - 0.5 * v * math.log(2.0) - 0.5 * t * t) if v \
        else np.exp(-0.5 * t * t)


def _wr_vector(exps: tuple[int, ...], lam: np.ndarray, spec: QuadratureSpec) -> np.ndarray:
    """w_r on |lam| > 0 for per-factor exponents ``exps`` (vectorised)."""
    lam = np.abs(lam)
    m = len(exps)
    if m == 1:
        return _factor_density(lam, exps[0])
    if m == 2:
        va, vb = exps
        order = 0.5 * (va - vb)
        return 2.0 ** (1 - 0.5 * (va + vb)) * lam ** (0.5 * (va + vb)) * sc.kv(order, lam)
    inner = exps[:-1]
    v = exps[-1]
    flat = lam.ravel()

    def integrand(s):
        t = np.exp(s)
        args = flat[None, :] / t[:, None]
        w = _wr_vector(inner, args.ravel(), spec).reshape(args.shape)
        return 2.0 * w * _factor_density(t, v)[:, None]

    # beyond these limits either f(t) or w_{m-1}(x/t) underflows to zero
    lo = float(np.log(flat.min())) - 12.0
    hi = 6.0
    val, _ = integrate(integrand, lo, hi, spec, points=(0.0, float(np.log(flat.max()))))
    return val.reshape(lam.shape)


def weight_wr_numeric(m: int, nu: Sequence[int], lam, spec: QuadratureSpec = DEFAULT_SPEC):
    """Real one-point weight for a product of ``m`` factors.

    ``nu`` is the interior exponent list (m-1 entries, empty for square
    factors).  m=1 and m=2 use closed forms; larger m iterate the
    multiplicative convolution w_m(x) = 2 int w_{m-1}(x/t) f(t) dt/t.
    """
    exps = factor_exponents(m, nu)
    arr = np.asarray(lam, dtype=float)
    scalar = arr.ndim == 0
    arr = np.atleast_1d(arr)
    zero = arr == 0
    if np.any(zero):
        if sum(v == 0 for v in exps) >= 2:
            raise SingularPointError("w_r has a logarithmic singularity at 0")
    out = np.empty_like(arr)
    nz = ~zero
    if np.any(nz):
        out[nz] = _wr_vector(exps, arr[nz], spec)
    if np.any(zero):
        out[zero] = _wr_at_zero(exps)
    return float(out[0]) if scalar else out


def _wr_at_zero(exps) -> float:
    # only reached when at most one exponent vanishes; the Mellin transform then
    # has a simple pole at s=-1 whose residue fixes w(0) = prod Gamma(nu_f/2)
    if len(exps) == 1:
        return 1.0 if exps[0] == 0 else 0.0
    if all(v > 0 for v in exps):
        return 0.0
    return math.prod(math.gamma(0.5 * v) for v in exps if v)


def meijer_g_mb(b: Sequence[float], z: float, prec: int = 80) -> mpmath.mpf:
    """G^{n,0}_{0,n}(z | b) by direct Mellin-Barnes contour integration.

    The contour runs up Re s = c with c to the left of every Gamma pole.
    """
    with mpmath.workprec(prec):
        b = [mpmath.mpf(v) for v in b]
        c = min(b) - mpmath.mpf(1) / 2
        z = mpmath.mpf(z)
        lz = mpmath.log(z)

        def f(t):
            s = c + 1j * t
            return mpmath.fprod(mpmath.gamma(bi - s) for bi in b) * mpmath.exp(s * lz)

        val = mpmath.quad(f, [-mpmath.inf, 0, mpmath.inf])
        return mpmath.re(val) / (2 * mpmath.pi)


def meijer_a_mb(j: int, k: int, exps: Sequence[int], prec: int = 80) -> mpmath.mpf:
    """a_{j,k} from its Mellin-Barnes form

        (1/2 pi i) int (-1/t) prod_f Gamma(j-1/2+nu_f/2+t) Gamma(k+nu_f/2-t) dt

    with the contour in the strip -(j-1/2) < Re t < 0.
    """
    with mpmath.workprec(prec):
        half = mpmath.mpf(1) / 2
        a = [j - half + mpmath.mpf(v) / 2 for v in exps]
        bb = [k + mpmath.mpf(v) / 2 for v in exps]
        c = -min(a) / 2

        def f(t):
            s = c + 1j * t
            return (-1 / s) * mpmath.fprod(mpmath.gamma(ai + s) * mpmath.gamma(bi - s)
                                           for ai, bi in zip(a, bb))

        val = mpmath.quad(f, [-mpmath.inf, -10, -1, 0, 1, 10, mpmath.inf])
        return mpmath.re(val) / (2 * mpmath.pi)


def _log_beta_kernel(a: float, b: float):
    lg = math.lgamma(a + b)

    def phi(u):
        return np.exp(lg + a * u - (a + b) * np.logaddexp(0.0, u))
    return phi


def meijer_a_numeric(m: int, j: int, k: int, nu: Sequence[int] = (),
                     spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    """a_{j,k} for ``m`` factors by nested real quadrature in log coordinates.

    With a_f = j - 1/2 + nu_f/2 and b_f = k + nu_f/2, each factor contributes
    the kernel Gamma(a_f+b_f) e^{a_f u} / (1+e^u)^{a_f+b_f}; the m kernels are
    convolved and the result integrated over u < 0.  The last convolution is
    done in closed form with the regularised incomplete beta function.
    """
    exps = factor_exponents(m, nu)
    if not 1 <= m <= 4:
        raise NotImplementedError("meijer_a_numeric supports 1 <= m <= 4")
    if j < 1 or k < 1:
        raise ValueError("j and k must be positive")
    a = [j - 0.5 + 0.5 * v for v in exps]
    b = [k + 0.5 * v for v in exps]
    am, bm = a[-1], b[-1]
    log_gg = math.lgamma(am) + math.lgamma(bm)

    def tail(w):
        return np.exp(log_gg) * sc.betainc(am, bm, sc.expit(-w))

    if m == 1:
        return float(math.exp(log_gg) * sc.betainc(am, bm, 0.5))

    kernels = [_log_beta_kernel(ai, bi) for ai, bi in zip(a[:-1], b[:-1])]
    modes = [math.log(ai / bi) for ai, bi in zip(a[:-1], b[:-1])]

    def psi(level: int, u: np.ndarray) -> np.ndarray:
        # psi_1 = phi_1, psi_l(u) = int phi_l(u - w) psi_{l-1}(w) dw
        if level == 0:
            return kernels[0](u)
        phi = kernels[level]

        def inner(w):
            return phi(u[None, :] - w[:, None]) * psi(level - 1, w)[:, None]

        centre = sum(modes[:level])
        val, _ = integrate(inner, -math.inf, math.inf, spec.loosened(0.1), points=(centre,))
        return val

    def outer(w):
        return psi(m - 2, w) * tail(w)

    val, _ = integrate(outer, -math.inf, math.inf, spec, points=(sum(modes),))
    return float(val)
