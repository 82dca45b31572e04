"""Generating-function moments of the post-loss two-mode state.

``P[x1, y1, x2, y2]`` is the mixed partial derivative of ``exp(w4)`` at the
origin, where ``w4`` is a quadratic polynomial in four formal variables.  The
derivatives are extracted exactly from a truncated Taylor expansion: only the
monomials up to the requested orders contribute, and ``w4`` has no constant
term, so the series for ``exp`` terminates at the total order of the key.

Operator dictionary (fixed by matching against the Fock oracle)::

    lambda1 <-> a^dag      lambda2 <-> a      lambda3 <-> b^dag      lambda4 <-> b

    P[x1, y1, x2, y2] = < a^dag^x1 a^y1 b^dag^x2 b^y2 >

on the reduced (a, b) state ``U_B U_S1 |alpha, 0>`` with equal loss ``T`` in
both arms.  Checked in ``tests/test_moments.py`` against the oracle for
``<a^dag a>``, ``<a^dag^2 a^2>``, the odd moments and all mixed keys in use.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable

import numpy as np

from .errors import CapabilityError, DegenerateStateError, DomainError
from .model import SchemeSpec

MAX_ORDER = 6
MAX_TOTAL = 12
_FACT = [math.factorial(k) for k in range(MAX_TOTAL + 1)]


@dataclass(frozen=True)
class GenFunParams:
    g: float
    T: float = 1.0
    alpha: float = 1.0

    def __post_init__(self):
        if isinstance(self.alpha, complex):
            raise DomainError("alpha must be real")
        if self.g < 0 or self.alpha < 0:
            raise DomainError("g and alpha must be nonnegative")
        if not 0.0 < self.T <= 1.0:
            raise DomainError("T must lie in (0, 1]")


class TruncatedPolynomial:
    """Real polynomial in four variables, truncated to a box and a total degree.

    Coefficients are stored densely; index ``(i, j, k, l)`` holds the
    coefficient of ``l1^i l2^j l3^k l4^l``.
    """

    def __init__(self, coeffs: np.ndarray, max_total: int):
        coeffs = np.asarray(coeffs, dtype=float)
        if coeffs.ndim != 4:
            raise ValueError("expected a 4-variable coefficient array")
        self.coeffs = coeffs * _total_mask(coeffs.shape, max_total)
        self.max_total = max_total

    @property
    def box(self) -> tuple[int, ...]:
        return tuple(s - 1 for s in self.coeffs.shape)

    @classmethod
    def from_terms(cls, terms: dict, box, max_total: int) -> "TruncatedPolynomial":
        arr = np.zeros(tuple(b + 1 for b in box))
        for exps, c in terms.items():
            if all(e <= b for e, b in zip(exps, box)):
                arr[exps] += c
        return cls(arr, max_total)

    def terms(self) -> dict:
        return {tuple(int(i) for i in idx): float(self.coeffs[tuple(idx)]) for idx in np.argwhere(self.coeffs != 0)}

    def __add__(self, other: "TruncatedPolynomial") -> "TruncatedPolynomial":
        return TruncatedPolynomial(self.coeffs + other.coeffs, min(self.max_total, other.max_total))

    def scale(self, c: float) -> "TruncatedPolynomial":
        return TruncatedPolynomial(self.coeffs * c, self.max_total)

    def __mul__(self, other: "TruncatedPolynomial") -> "TruncatedPolynomial":
        # Multiply by shifting one operand over the nonzero monomials of the other.
        a, b = (self, other) if np.count_nonzero(self.coeffs) >= np.count_nonzero(other.coeffs) else (other, self)
        out = np.zeros_like(a.coeffs)
        shape = out.shape
        for idx in np.argwhere(b.coeffs != 0):
            c = b.coeffs[tuple(idx)]
            if any(i >= s for i, s in zip(idx, shape)):
                continue
            dst = tuple(slice(i, s) for i, s in zip(idx, shape))
            src = tuple(slice(0, s - i) for i, s in zip(idx, shape))
            out[dst] += c * a.coeffs[src]
        return TruncatedPolynomial(out, min(a.max_total, b.max_total))

    def exp(self) -> "TruncatedPolynomial":
        """exp of a polynomial with zero constant term, exact within the truncation."""
        if self.coeffs[0, 0, 0, 0] != 0:
            raise ValueError("exp() expects a zero constant term")
        result = np.zeros_like(self.coeffs)
        result[0, 0, 0, 0] = 1.0
        acc = TruncatedPolynomial(result.copy(), self.max_total)
        term = acc
        for k in range(1, self.max_total + 1):
            term = (term * self).scale(1.0 / k)
            if not np.any(term.coeffs):
                break
            acc = acc + term
        return acc

    def coefficient(self, exps) -> float:
        return float(self.coeffs[tuple(exps)])


@lru_cache(maxsize=64)
def _total_mask(shape, max_total):
    grids = np.indices(shape).sum(axis=0)
    return (grids <= max_total).astype(float)


def w4_terms(params: GenFunParams) -> dict:
    """Monomials of w4 = w1 + w2*alpha + w3*alpha (alpha real)."""
    g, T, al = params.g, params.T, params.alpha
    sh, ch = math.sinh(g), math.cosh(g)
    rt = math.sqrt(T)
    terms = {
        # w1: l1 T (l2 sinh g - l3 cosh g) sinh g + l4 T (l3 sinh g - l2 cosh g) sinh g
        (1, 1, 0, 0): T * sh * sh,
        (1, 0, 1, 0): -T * ch * sh,
        (0, 0, 1, 1): T * sh * sh,
        (0, 1, 0, 1): -T * ch * sh,
        # w2 alpha*: l1 sqrt(T) cosh g - l4 sqrt(T) sinh g
        (1, 0, 0, 0): rt * ch * al,
        (0, 0, 0, 1): -rt * sh * al,
        # w3 alpha: l2 sqrt(T) cosh g - l3 sqrt(T) sinh g
        (0, 1, 0, 0): rt * ch * al,
        (0, 0, 1, 0): -rt * sh * al,
    }
    return {k: v for k, v in terms.items() if v != 0}


def build_w4(params: GenFunParams, box=(2, 2, 2, 2), max_total: int = 2) -> TruncatedPolynomial:
    return TruncatedPolynomial.from_terms(w4_terms(params), box, max(max_total, 2))


def _check_key(key) -> tuple[int, int, int, int]:
    key = tuple(int(k) for k in key)
    if len(key) != 4 or any(k < 0 for k in key):
        raise DomainError("moment keys are four nonnegative integers")
    if any(k > MAX_ORDER for k in key) or sum(key) > MAX_TOTAL:
        raise CapabilityError(f"moment key {key} beyond supported orders ({MAX_ORDER} each, {MAX_TOTAL} total)")
    return key


def p_moment(key, params: GenFunParams) -> float:
    """Exact mixed partial derivative of exp(w4) at zero."""
    key = _check_key(key)
    total = sum(key)
    if total == 0:
        return 1.0
    poly = build_w4(params, box=key, max_total=total).exp()
    fact = _FACT[key[0]] * _FACT[key[1]] * _FACT[key[2]] * _FACT[key[3]]
    return poly.coefficient(key) * fact


class MomentTable:
    """All P moments inside one box, from a single truncated exponential.

    Cheaper than repeated :func:`p_moment` calls when a formula needs many keys.
    """

    def __init__(self, params: GenFunParams, box=(MAX_ORDER,) * 4, max_total: int = MAX_TOTAL):
        self.params = params
        self.box = tuple(box)
        self.max_total = max_total
        self._series = build_w4(params, box=self.box, max_total=max_total).exp()

    def __getitem__(self, key) -> float:
        key = _check_key(key)
        if any(k > b for k, b in zip(key, self.box)) or sum(key) > self.max_total:
            raise CapabilityError(f"key {key} outside table box {self.box}")
        fact = _FACT[key[0]] * _FACT[key[1]] * _FACT[key[2]] * _FACT[key[3]]
        return self._series.coefficient(key) * fact

    def combine(self, terms: Iterable[tuple[float, tuple]]) -> float:
        return sum(c * self[k] for c, k in terms)


@lru_cache(maxsize=512)
def moment_table(g: float, T: float, alpha: float) -> MomentTable:
    return MomentTable(GenFunParams(g, T, alpha))


# ----------------------------------------------------------- normalization


def normalization_A(scheme: SchemeSpec | str, params: GenFunParams) -> float:
    """A1 = (P2200 + 3 P1100 + 1)^(-1/2),  A2 = (P2200 + P1100)^(-1/2)."""
    name = _preset(scheme)
    tab = moment_table(params.g, params.T, params.alpha)
    if name == "pa-then-ps":
        radicand = tab[2, 2, 0, 0] + 3 * tab[1, 1, 0, 0] + 1
    elif name == "ps-then-pa":
        radicand = tab[2, 2, 0, 0] + tab[1, 1, 0, 0]
    else:
        raise DomainError("normalization_A is defined for the PA-then-PS and PS-then-PA presets")
    if radicand <= 1e-300:
        raise DegenerateStateError(f"{name}: NCO annihilates the state (alpha = g = 0)")
    return radicand**-0.5


def _preset(scheme) -> str:
    if isinstance(scheme, str):
        scheme = SchemeSpec.preset(scheme)
    name = scheme.preset_name
    if name is None:
        raise DomainError(f"{scheme.label} is not a preset scheme")
    return name


# ------------------------------------------------------ normal ordering helper


def stirling2(k: int, j: int) -> int:
    """Stirling numbers of the second kind (n^k = sum_j S(k,j) a^dag^j a^j)."""
    return _stirling_table(k)[j] if j <= k else 0


@lru_cache(maxsize=None)
def _stirling_table(k: int) -> tuple[int, ...]:
    row = [1]
    for m in range(1, k + 1):
        new = [0] * (m + 1)
        for j in range(1, m + 1):
            new[j] = j * (row[j] if j < len(row) else 0) + row[j - 1]
        row = new
    return tuple(row)


def _poly_mul(p, q):
    out = [0.0] * (len(p) + len(q) - 1)
    for i, a in enumerate(p):
        for j, b in enumerate(q):
            out[i + j] += a * b
    return out


def _poly_shift(p, h):
    """Coefficients of p(n + h)."""
    out = [0.0] * len(p)
    for k, c in enumerate(p):
        for j in range(k + 1):
            out[j] += c * math.comb(k, j) * h ** (k - j)
    return out


def sandwich_normal_order(u: list[float], p: int, q: int, middle: list[float] | None = None) -> dict:
    """Normal-order  u(n) a^dag^p m(n) a^q u(n)  for real polynomials u, m in n.

    Returns ``{(x, y): coeff}`` meaning sum coeff * a^dag^x a^y.  Uses
    ``u(n) a^dag^p = a^dag^p u(n+p)``, ``a^q u(n) = u(n+q) a^q`` and Stirling
    expansion of the remaining polynomial in n.
    """
    middle = middle or [1.0]
    # a^dag^p m(n) a^q with u's moved inside: u(n+p) m(n) u(n+q)  -- m must sit
    # between the ladder strings, so m(n) is taken to commute with u(n+...).
    f = _poly_mul(_poly_mul(_poly_shift(u, p), middle), _poly_shift(u, q))
    out: dict = {}
    for k, c in enumerate(f):
        if c == 0:
            continue
        for j in range(k + 1):
            s = stirling2(k, j)
            if s:
                key = (p + j, j + q)
                out[key] = out.get(key, 0.0) + c * s
    return out
