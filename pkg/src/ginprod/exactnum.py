"""Exact arithmetic in Q[sqrt(2), sqrt(pi)].

Every closed-form probability, moment and normalisation constant used for
one and two factors lives in this ring.  An element is stored as a map from
the monomial key ``(s, p)`` (exponents of sqrt(2) and sqrt(pi)) to a
:class:`fractions.Fraction` coefficient.  ``s`` is kept in ``{0, 1}`` by
folding even powers of sqrt(2) into the coefficient; ``p`` is allowed to be
negative so that division by powers of sqrt(pi) stays inside the ring.
"""

from __future__ import annotations

import re
from fractions import Fraction
from functools import lru_cache
from math import factorial
from typing import Callable, Iterable, Iterator, Mapping, Sequence

import mpmath

__all__ = [
    "ExactValue",
    "ZetaPolynomial",
    "ring_mul",
    "gamma_half",
    "to_float",
    "SQRT2",
    "SQRTPI",
    "PI",
]

Key = tuple[int, int]


def _as_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    raise TypeError(f"cannot coerce {type(x).__name__} to an exact rational")


class ExactValue:
    """Element of Q[sqrt2, sqrtpi] with canonical sparse storage."""

    __slots__ = ("_terms", "_hash")

    def __init__(self, terms: Mapping[Key, Fraction | int] | None = None):
        canon: dict[Key, Fraction] = {}
        if terms:
            for (s, p), c in terms.items():
                c = _as_fraction(c)
                if s < 0:
                    raise ValueError("sqrt2 exponent must be nonnegative")
                c *= 2 ** (s // 2)
                key = (s % 2, p)
                canon[key] = canon.get(key, Fraction(0)) + c
        self._terms = {k: v for k, v in canon.items() if v != 0}
        self._hash = None

    @classmethod
    def _raw(cls, terms: dict[Key, Fraction]) -> "ExactValue":
        out = cls.__new__(cls)
        out._terms = terms
        out._hash = None
        return out

    @classmethod
    def coerce(cls, x) -> "ExactValue":
        if isinstance(x, ExactValue):
            return x
        c = _as_fraction(x)
        return cls._raw({(0, 0): c} if c else {})

    @classmethod
    def monomial(cls, coeff=1, sqrt2: int = 0, sqrtpi: int = 0) -> "ExactValue":
        return cls({(sqrt2, sqrtpi): _as_fraction(coeff)})

    @property
    def terms(self) -> dict[Key, Fraction]:
        return dict(self._terms)

    def keys(self) -> list[Key]:
        return sorted(self._terms, key=lambda k: (k[1], k[0]))

    def is_zero(self) -> bool:
        return not self._terms

    def is_rational(self) -> bool:
        return all(k == (0, 0) for k in self._terms)

    def rational(self) -> Fraction:
        if not self.is_rational():
            raise ValueError(f"{self} is not rational")
        return self._terms.get((0, 0), Fraction(0))

    # ring operations -----------------------------------------------------

    def __add__(self, other):
        try:
            other = ExactValue.coerce(other)
        except TypeError:
            return NotImplemented
        out = dict(self._terms)
        for k, c in other._terms.items():
            v = out.get(k, 0) + c
            if v:
                out[k] = v
            else:
                out.pop(k, None)
        return ExactValue._raw(out)

    __radd__ = __add__

    def __neg__(self):
        return ExactValue._raw({k: -c for k, c in self._terms.items()})

    def __pos__(self):
        return self

    def __sub__(self, other):
        try:
            other = ExactValue.coerce(other)
        except TypeError:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        try:
            other = ExactValue.coerce(other)
        except TypeError:
            return NotImplemented
        return other + (-self)

    def __mul__(self, other):
        try:
            other = ExactValue.coerce(other)
        except TypeError:
            return NotImplemented
        out: dict[Key, Fraction] = {}
        for (s1, p1), c1 in self._terms.items():
            for (s2, p2), c2 in other._terms.items():
                s = s1 + s2
                c = c1 * c2
                if s == 2:
                    c *= 2
                    s = 0
                key = (s, p1 + p2)
                out[key] = out.get(key, 0) + c
        return ExactValue._raw({k: v for k, v in out.items() if v})

    __rmul__ = __mul__

    def _inverse_monomial(self) -> "ExactValue":
        if len(self._terms) != 1:
            raise ZeroDivisionError(
                "division is only defined by nonzero monomials "
                f"(got {self.canonical()!r})")
        (s, p), c = next(iter(self._terms.items()))
        # 1/sqrt2 = sqrt2/2
        if s:
            return ExactValue._raw({(1, -p): 1 / (2 * c)})
        return ExactValue._raw({(0, -p): 1 / c})

    def __truediv__(self, other):
        try:
            other = ExactValue.coerce(other)
        except TypeError:
            return NotImplemented
        return self * other._inverse_monomial()

    def __rtruediv__(self, other):
        try:
            other = ExactValue.coerce(other)
        except TypeError:
            return NotImplemented
        return other * self._inverse_monomial()

    def __pow__(self, n: int):
        if not isinstance(n, int):
            return NotImplemented
        if n < 0:
            return (ExactValue.coerce(1) / self) ** (-n)
        result = ExactValue.coerce(1)
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def __eq__(self, other):
        try:
            other = ExactValue.coerce(other)
        except TypeError:
            return NotImplemented
        return self._terms == other._terms

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(frozenset(self._terms.items()))
        return self._hash

    def __bool__(self):
        return bool(self._terms)

    def __float__(self):
        return float(to_float(self, 53))

    def __repr__(self):
        return f"ExactValue({self.canonical()!r})"

    def __str__(self):
        return self.pretty()

    # serialisation -------------------------------------------------------

    def canonical(self) -> str:
        """Canonical string: summands ``r`` or ``r*sqrt2^s*sqrtpi^p`` joined by ``+``."""
        if not self._terms:
            return "0"
        parts = []
        for s, p in self.keys():
            c = self._terms[(s, p)]
            if (s, p) == (0, 0):
                parts.append(str(c))
            else:
                parts.append(f"{c}*sqrt2^{s}*sqrtpi^{p}")
        return "+".join(parts)

    _SUMMAND = re.compile(r"^(-?\d+(?:/\d+)?)(?:\*sqrt2\^(\d+)\*sqrtpi\^(-?\d+))?$")

    @classmethod
    def parse(cls, text: str) -> "ExactValue":
        text = text.strip()
        if text == "0":
            return cls()
        terms: dict[Key, Fraction] = {}
        # split on '+' that is not part of an exponent sign
        for chunk in text.split("+"):
            m = cls._SUMMAND.match(chunk)
            if m is None:
                raise ValueError(f"malformed exact summand {chunk!r}")
            c = Fraction(m.group(1))
            s = int(m.group(2) or 0)
            p = int(m.group(3) or 0)
            terms[(s, p)] = terms.get((s, p), 0) + c
        return cls(terms)

    def pretty(self) -> str:
        """Human-readable form, e.g. ``1 - (1/4)*pi``."""
        if not self._terms:
            return "0"
        out = []
        for i, (s, p) in enumerate(self.keys()):
            c = self._terms[(s, p)]
            sign = "-" if c < 0 else "+"
            mag = abs(c)
            mono = _pretty_monomial(s, p)
            if not mono:
                body = str(mag)
            elif mag == 1:
                body = mono
            elif mag.denominator == 1:
                body = f"{mag}*{mono}"
            else:
                body = f"({mag})*{mono}"
            if i == 0:
                out.append(("-" if sign == "-" else "") + body)
            else:
                out.append(f" {sign} {body}")
        return "".join(out)


def _pretty_monomial(s: int, p: int) -> str:
    parts = []
    if s:
        parts.append("sqrt(2)")
    if p == 1:
        parts.append("sqrt(pi)")
    elif p == 2:
        parts.append("pi")
    elif p and p % 2 == 0:
        parts.append(f"pi^{p // 2}")
    elif p:
        parts.append(f"pi^({p}/2)")
    return "*".join(parts)


SQRT2 = ExactValue.monomial(1, sqrt2=1)
SQRTPI = ExactValue.monomial(1, sqrtpi=1)
PI = ExactValue.monomial(1, sqrtpi=2)


def ring_mul(a: ExactValue, b: ExactValue) -> ExactValue:
    return a * b


@lru_cache(maxsize=None)
def gamma_half(n: int) -> ExactValue:
    """Gamma(n/2) exactly: rational for even n, rational times sqrt(pi) for odd n."""
    if not isinstance(n, int) or n < 1:
        raise ValueError(f"gamma_half needs a positive integer, got {n!r}")
    if n % 2 == 0:
        return ExactValue.coerce(factorial(n // 2 - 1))
    # Gamma(k + 1/2) = (2k)! / (4^k k!) sqrt(pi)
    k = (n - 1) // 2
    return ExactValue.monomial(Fraction(factorial(2 * k), 4**k * factorial(k)), sqrtpi=1)


def _evaluate(v: ExactValue, wp: int):
    with mpmath.workprec(wp):
        r2 = mpmath.sqrt(2)
        rp = mpmath.sqrt(mpmath.pi)
        acc = mpmath.mpf(0)
        for (s, p), c in v._terms.items():
            acc += mpmath.mpf(c.numerator) / c.denominator * r2**s * rp**p
        return acc


def to_float(v: ExactValue, precision_bits: int = 53):
    """Evaluate to an ``mpmath.mpf`` with ``precision_bits`` of precision.

    Cancellation between summands is handled by raising the working
    precision until two successive evaluations agree well past the target.
    """
    if precision_bits < 53:
        raise ValueError("precision_bits must be at least 53")
    v = ExactValue.coerce(v)
    if not v._terms:
        return mpmath.mpf(0)
    wp = precision_bits + 32
    prev = _evaluate(v, wp)
    while True:
        wp *= 2
        cur = _evaluate(v, wp)
        with mpmath.workprec(wp):
            if cur != 0 and abs(cur - prev) <= abs(cur) * mpmath.ldexp(1, -precision_bits - 8):
                break
        if wp > 1 << 20:
            raise ArithmeticError("to_float failed to stabilise")
        prev = cur
    with mpmath.workprec(precision_bits):
        return +cur


class ZetaPolynomial:
    """Polynomial in the generating-function variable zeta.

    Coefficients may be :class:`ExactValue` or ``mpmath`` numbers; the
    arithmetic only relies on ``+``, ``-``, ``*`` and comparison with zero.
    ``truncate`` (if given) drops every power above that degree after each
    multiplication.
    """

    __slots__ = ("coefficients", "truncate")

    def __init__(self, coefficients: Iterable = (), truncate: int | None = None):
        coeffs = list(coefficients)
        if truncate is not None:
            coeffs = coeffs[: truncate + 1]
        while coeffs and coeffs[-1] == 0:
            coeffs.pop()
        self.coefficients = coeffs
        self.truncate = truncate

    @property
    def degree(self) -> int:
        return max(len(self.coefficients) - 1, 0)

    def is_zero(self) -> bool:
        return not self.coefficients

    def __getitem__(self, k: int):
        if 0 <= k < len(self.coefficients):
            return self.coefficients[k]
        return 0

    def __iter__(self) -> Iterator:
        return iter(self.coefficients)

    def __len__(self):
        return len(self.coefficients)

    def _trunc(self, other) -> int | None:
        t1 = self.truncate
        t2 = other.truncate if isinstance(other, ZetaPolynomial) else None
        if t1 is None:
            return t2
        if t2 is None:
            return t1
        return min(t1, t2)

    def _lift(self, other) -> "ZetaPolynomial":
        if isinstance(other, ZetaPolynomial):
            return other
        return ZetaPolynomial([other], self.truncate)

    def __add__(self, other):
        other = self._lift(other)
        a, b = self.coefficients, other.coefficients
        n = max(len(a), len(b))
        out = []
        for i in range(n):
            if i < len(a) and i < len(b):
                out.append(a[i] + b[i])
            elif i < len(a):
                out.append(a[i])
            else:
                out.append(b[i])
        return ZetaPolynomial(out, self._trunc(other))

    __radd__ = __add__

    def __neg__(self):
        return ZetaPolynomial([-c for c in self.coefficients], self.truncate)

    def __sub__(self, other):
        return self + (-self._lift(other))

    def __rsub__(self, other):
        return self._lift(other) + (-self)

    def __mul__(self, other):
        if not isinstance(other, ZetaPolynomial):
            return ZetaPolynomial([c * other for c in self.coefficients], self.truncate)
        t = self._trunc(other)
        a, b = self.coefficients, other.coefficients
        if not a or not b:
            return ZetaPolynomial([], t)
        n = len(a) + len(b) - 1
        if t is not None:
            n = min(n, t + 1)
        out = [None] * n
        for i, ai in enumerate(a):
            if i >= n:
                break
            for j, bj in enumerate(b):
                if i + j >= n:
                    break
                term = ai * bj
                out[i + j] = term if out[i + j] is None else out[i + j] + term
        zero = a[0] - a[0]
        return ZetaPolynomial([zero if c is None else c for c in out], t)

    __rmul__ = __mul__

    def __eq__(self, other):
        other = self._lift(other)
        return self.coefficients == other.coefficients

    def evaluate(self, zeta):
        acc = 0
        for c in reversed(self.coefficients):
            acc = acc * zeta + c
        return acc

    def map(self, fn: Callable) -> "ZetaPolynomial":
        return ZetaPolynomial([fn(c) for c in self.coefficients], self.truncate)

    def __repr__(self):
        return f"ZetaPolynomial({self.coefficients!r})"


def determinant(matrix: Sequence[Sequence], one=1):
    """Division-free determinant by Laplace expansion over column subsets.

    Works over any commutative ring (ExactValue, ZetaPolynomial, ...).
    Cost is O(n 2^n) ring multiplications, which is fine for the n <= 8
    matrices that exact mode builds.
    """
    n = len(matrix)
    if n == 0:
        return one
    # minors[S] = det of rows 0..|S|-1 restricted to columns S
    minors: dict[int, object] = {0: one}
    for r in range(n):
        row = matrix[r]
        nxt: dict[int, object] = {}
        for mask, minor in minors.items():
            # columns of mask sorted; new column c placed at position by count
            for c in range(n):
                bit = 1 << c
                if mask & bit:
                    continue
                # sign = (-1)^(number of chosen columns greater than c)
                above = bin(mask >> (c + 1)).count("1")
                term = row[c] * minor
                if above % 2:
                    term = -term
                key = mask | bit
                nxt[key] = term if key not in nxt else nxt[key] + term
        minors = nxt
    return minors[(1 << n) - 1]
