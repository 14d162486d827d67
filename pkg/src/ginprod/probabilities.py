"""Distribution of the number of real eigenvalues.

The generating function sum_k p_{N,k} zeta^k is, up to a constant, the
determinant of the ceil(N/2)-square matrix (zeta - 1) alpha + diag(h),
with the column of even moments appended for odd N.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import mpmath
import numpy as np

from .exactnum import ExactValue, ZetaPolynomial, determinant, gamma_half, to_float
from .moments import AlphaMatrix, Mode, UnsupportedModeError, alpha_matrix, sign_moment
from .special import DEFAULT_SPEC, QuadratureSpec
from .weights import ProductSpec

__all__ = [
    "IllConditionedError",
    "RealCountDistribution",
    "normalisation",
    "real_count_distribution",
    "prob_all_real",
    "prob_all_real_direct",
    "expected_reals",
    "expected_reals_from_moments",
    "pnull",
    "pnull_fit",
]


class IllConditionedError(ArithmeticError):
    def __init__(self, message: str, condition: float):
        super().__init__(message)
        self.condition = condition


@dataclass
class RealCountDistribution:
    spec: ProductSpec
    probabilities: dict[int, object]
    mode: str
    precision_bits: int = 53
    meta: dict = field(default_factory=dict)

    def floats(self) -> dict[int, float]:
        out = {}
        for k, v in self.probabilities.items():
            out[k] = float(v) if isinstance(v, ExactValue) else float(v)
        return out

    def total(self):
        vals = list(self.probabilities.values())
        acc = vals[0]
        for v in vals[1:]:
            acc = acc + v
        return acc

    def mean(self):
        acc = None
        for k, v in self.probabilities.items():
            term = v * k
            acc = term if acc is None else acc + term
        return acc

    def to_json(self) -> dict:
        entries = []
        for k in sorted(self.probabilities):
            v = self.probabilities[k]
            exact = v.canonical() if isinstance(v, ExactValue) else None
            num = to_float(v, max(self.precision_bits, 53)) if isinstance(v, ExactValue) else v
            entries.append({"k": k, "exact": exact,
                            "float": mpmath.nstr(num, _digits(self.precision_bits))})
        return {"spec": _spec_json(self.spec), "mode": self.mode, "entries": entries}


def _digits(bits: int) -> int:
    return max(15, int(bits * 0.30103))


def _spec_json(spec: ProductSpec) -> dict:
    return {"N": spec.N, "m": spec.m, "nu": list(spec.nu)}


def normalisation(spec: ProductSpec) -> ExactValue:
    """prod_f 2^{-N(N+1)/4} / prod_{l=1}^N Gamma((l + nu_f)/2)."""
    N = spec.N
    out = ExactValue.coerce(1)
    for v in spec.exponents:
        denom = ExactValue.monomial(1, sqrt2=N * (N + 1) // 2)
        for l in range(1, N + 1):
            denom = denom * gamma_half(l + v)
        out = out / denom
    return out


def _rescaling(spec: ProductSpec) -> ExactValue:
    """Ratio det(raw) / det(rescaled) for the 2-power rescaled matrix."""
    N, m = spec.N, spec.m
    rows, cols = (N + 1) // 2, N // 2
    # raw = diag(2^{mj}) B diag(2^{m(l-1/2)}), odd column scaled by 2^{-m/2}
    s2 = 2 * m * sum(range(1, rows + 1)) + m * sum(2 * l - 1 for l in range(1, cols + 1))
    out = ExactValue.monomial(1, sqrt2=s2)
    if N % 2:
        out = out / ExactValue.monomial(1, sqrt2=m)
    return out


def _rescaled_matrix(am: AlphaMatrix):
    """The 2-power rescaled entries b_{j,l}, diagonal and odd column."""
    spec = am.spec
    m = spec.m
    ent, diag, col = [], [], None
    for j, row in enumerate(am.entries, start=1):
        ent.append([a / ExactValue.monomial(1, sqrt2=m * (2 * j + 2 * l - 1))
                    for l, a in enumerate(row, start=1)])
        diag.append(am.norms[j - 1] / ExactValue.monomial(1, sqrt2=m * (4 * j - 1)))
    if am.mu_column is not None:
        col = [mu / ExactValue.monomial(1, sqrt2=m * (2 * j - 1))
               for j, mu in enumerate(am.mu_column, start=1)]
    return ent, diag, col


def _zeta_matrix(entries, diag, col, truncate: int):
    rows = len(col) if col is not None else len(entries)
    mat = []
    for j in range(rows):
        row = []
        for l, a in enumerate(entries[j]):
            const = -a + diag[j] if l == j else -a
            row.append(ZetaPolynomial([const, a], truncate))
        if col is not None:
            row.append(ZetaPolynomial([col[j]], truncate))
        mat.append(row)
    return mat


def _distribution_from_coefficients(spec, coeffs, mode, prec, meta=None):
    N = spec.N
    probs = {}
    for i in range(N // 2 + 1):
        k = 2 * i + (N % 2)
        probs[k] = coeffs[i]
    return RealCountDistribution(spec, probs, mode, prec, meta or {})


def real_count_distribution(spec: ProductSpec, mode: Mode = "exact", prec: int = 106,
                            quad: QuadratureSpec = DEFAULT_SPEC, route: str = "raw",
                            method: str | None = None) -> RealCountDistribution:
    """{p_{N,k}} from the generating-function determinant.

    ``route="raw"`` uses the unscaled sign moments directly;
    ``route="rescaled"`` builds the 2-power rescaled matrix instead (exact
    mode only) and must give identical values.
    """
    if mode == "exact" and spec.m > 2:
        raise UnsupportedModeError("exact distributions need m <= 2; use --mode numeric")
    am = alpha_matrix(spec, mode, quad, method, prec)
    top = spec.N // 2
    if mode == "exact":
        if route == "raw":
            entries, diag, col, scale = am.entries, am.norms, am.mu_column, normalisation(spec)
        elif route == "rescaled":
            entries, diag, col = _rescaled_matrix(am)
            scale = normalisation(spec) * _rescaling(spec)
        else:
            raise ValueError(f"unknown route {route!r}")
        mat = _zeta_matrix(entries, diag, col, top)
        det = determinant(mat, ZetaPolynomial([ExactValue.coerce(1)], top))
        coeffs = [det[i] * scale for i in range(top + 1)]
        coeffs = [ExactValue.coerce(c) for c in coeffs]
        return _distribution_from_coefficients(spec, coeffs, mode, prec)
    coeffs, cond = _numeric_coefficients(am, spec, prec)
    return _distribution_from_coefficients(spec, coeffs, mode, prec, {"condition": cond})


def _numeric_det(am: AlphaMatrix, zeta, prec):
    rows = len(am.norms)
    cols = len(am.entries[0]) if am.entries and am.entries[0] else 0
    A = mpmath.matrix(rows, rows)
    for j in range(rows):
        for l in range(cols):
            A[j, l] = (zeta - 1) * am.entries[j][l] + (am.norms[j] if j == l else 0)
        if am.mu_column is not None:
            A[j, rows - 1] = am.mu_column[j]
    return A


def _numeric_coefficients(am: AlphaMatrix, spec: ProductSpec, prec: int):
    """Coefficients by evaluating the determinant on roots of unity and inverting the DFT."""
    top = spec.N // 2
    n = top + 1
    with mpmath.workprec(prec + 16):
        scale = to_float(normalisation(spec), prec + 16)
        values = []
        cond = mpmath.mpf(1)
        for r in range(n):
            z = mpmath.expjpi(mpmath.mpf(2 * r) / n)
            A = _numeric_det(am, z, prec + 16)
            values.append(mpmath.det(A) * scale)
            if r == 0 and A.rows:
                try:
                    cond = mpmath.mnorm(A, 1) * mpmath.mnorm(A**-1, 1)
                except ZeroDivisionError:
                    cond = mpmath.inf
        coeffs = []
        worst_imag = mpmath.mpf(0)
        for k in range(n):
            acc = mpmath.mpc(0)
            for r in range(n):
                acc += values[r] * mpmath.expjpi(-mpmath.mpf(2 * r * k) / n)
            acc /= n
            worst_imag = max(worst_imag, abs(acc.imag))
            coeffs.append(acc.real)
        if cond * mpmath.ldexp(1, -prec) > mpmath.mpf("1e-12") or worst_imag > mpmath.mpf("1e-9"):
            raise IllConditionedError(
                f"numeric determinant is ill-conditioned (condition ~ {mpmath.nstr(cond, 3)})",
                float(cond))
    with mpmath.workprec(prec):
        return [+c for c in coeffs], float(cond)


def prob_all_real(spec: ProductSpec, mode: Mode = "exact", prec: int = 106,
                  quad: QuadratureSpec = DEFAULT_SPEC):
    return real_count_distribution(spec, mode, prec, quad).probabilities[spec.N]


def prob_all_real_direct(spec: ProductSpec, mode: Mode = "exact", prec: int = 106,
                         quad: QuadratureSpec = DEFAULT_SPEC):
    """p_{N,N} directly as normalisation times det[alpha | mu] (no zeta expansion)."""
    am = alpha_matrix(spec, mode, quad, None, prec)
    rows = len(am.norms)
    mat = []
    for j in range(rows):
        row = list(am.entries[j])
        if am.mu_column is not None:
            row.append(am.mu_column[j])
        mat.append(row)
    if mode == "exact":
        return determinant(mat, ExactValue.coerce(1)) * normalisation(spec)
    with mpmath.workprec(prec):
        return mpmath.det(mpmath.matrix(mat)) * to_float(normalisation(spec), prec)


def _kernel_norm(spec: ProductSpec, i: int) -> ExactValue:
    # C_i = prod_f 2 sqrt(2 pi) 2^{-nu_f} Gamma(i + 1 + nu_f)
    out = ExactValue.coerce(1)
    for v in spec.exponents:
        out = out * ExactValue.monomial(Fraction(2 * math.factorial(i + v), 2**v), sqrt2=1, sqrtpi=1)
    return out


def expected_reals_from_moments(spec: ProductSpec, mode: Mode = "exact", prec: int = 106,
                                quad: QuadratureSpec = DEFAULT_SPEC):
    """E[#reals] = 2 sum_{i=0}^{N-2} M(i, i+1) / C_i, plus 1 for odd N."""
    N = spec.N
    if mode == "exact":
        total = ExactValue.coerce(N % 2)
        for i in range(N - 1):
            total = total + sign_moment(spec, i, i + 1) * 2 / _kernel_norm(spec, i)
        return total
    with mpmath.workprec(prec):
        total = mpmath.mpf(N % 2)
        for i in range(N - 1):
            M = sign_moment(spec, i, i + 1, "numeric", quad, "quadrature" if spec.m <= 2 or prec <= 64
                            else "mellin-barnes", prec)
            total += 2 * M / to_float(_kernel_norm(spec, i), prec)
        return total


def expected_reals(spec: ProductSpec, mode: Mode = "exact", prec: int = 106,
                   quad: QuadratureSpec = DEFAULT_SPEC, check: bool = True):
    """Expected number of real eigenvalues; cross-checked against sum_k k p_{N,k}."""
    direct = expected_reals_from_moments(spec, mode, prec, quad)
    if check:
        via_dist = real_count_distribution(spec, mode, prec, quad).mean()
        if mode == "exact" and via_dist != direct:
            raise ArithmeticError(f"expectation paths disagree: {direct} vs {via_dist}")
        if mode != "exact" and abs(via_dist - direct) > 1e-8 * max(1, abs(direct)):
            raise ArithmeticError(f"expectation paths disagree: {direct} vs {via_dist}")
    return direct


def pnull(spec: ProductSpec, prec: int = 256) -> mpmath.mpf:
    """p_{N,0} = normalisation * det(diag(h) - alpha) at ``prec`` bits (N even)."""
    if spec.N % 2:
        raise ValueError("p_{N,0} vanishes for odd N")
    exact = spec.m <= 2
    am = alpha_matrix(spec, "exact" if exact else "numeric", DEFAULT_SPEC, None, prec)
    n = len(am.norms)
    with mpmath.workprec(prec):
        A = mpmath.matrix(n, n)
        for j in range(n):
            for l in range(n):
                a = am.entries[j][l]
                a = to_float(a, prec) if exact else a
                A[j, l] = -a
            A[j, j] += to_float(am.norms[j], prec) if exact else am.norms[j]
        return mpmath.det(A) * to_float(normalisation(spec), prec)


def pnull_fit(m: int, N_range: Sequence[int], precision_bits: int = 256):
    """Least-squares fit log p_{N,0} ~ a sqrt(N) + b + c / sqrt(N).

    Each determinant is computed at ``precision_bits`` and again at twice
    that; a change in the fitted coefficients signals insufficient precision.
    """
    Ns = sorted(set(int(n) for n in N_range))
    if len(Ns) < 3:
        raise ValueError("the fit needs at least three values of N")
    if any(n % 2 for n in Ns):
        raise ValueError("p_{N,0} fits use even N only")

    def fit(bits):
        logs = [float(mpmath.log(pnull(ProductSpec(n, m), bits))) for n in Ns]
        X = np.array([[math.sqrt(n), 1.0, 1.0 / math.sqrt(n)] for n in Ns])
        coef, *_ = np.linalg.lstsq(X, np.array(logs), rcond=None)
        return coef, logs

    coef, logs = fit(precision_bits)
    coef2, _ = fit(2 * precision_bits)
    if np.max(np.abs(coef - coef2)) > 1e-6:
        raise IllConditionedError("p_{N,0} fit is unstable under precision doubling",
                                  float(np.max(np.abs(coef - coef2))))
    return float(coef[0]), float(coef[1]), float(coef[2])
