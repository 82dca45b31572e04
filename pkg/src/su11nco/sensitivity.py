"""Homodyne phase sensitivity, internal photon number and SQL/HL references.

Analytic backend
    ``<a + a^dag>`` and ``<(a + a^dag)^2>`` of the output mode are linear
    combinations of P moments weighted by ``exp(i m phi)`` with ``m`` in
    -2..2.  For the two boundary presets the printed coefficient tables are
    used verbatim.  Any other ``(s, t)`` goes through :func:`generic_expansion`,
    which normal-orders ``u(n) O u(n)`` with ``u(n) = (s + t) n + s``.

Oracle backend
    Full Fock simulation in :mod:`su11nco.oracle`; the phase slope comes from a
    Richardson-extrapolated central difference.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.optimize import minimize_scalar

from . import oracle
from .errors import DegenerateStateError, DivergentSensitivityError, DomainError
from .model import InterferometerParams, SchemeSpec
from .moments import GenFunParams, moment_table, normalization_A, sandwich_normal_order

SLOPE_THRESHOLD = 1e-12
FD_STEP = 1e-5
SQRT2 = math.sqrt(2.0)

# (phase power m, trig weight, [(coeff, key), ...]); trig weight is one of
# "c", "s", "c2", "sc", "s2" for cosh g, sinh g, cosh^2 g, sinh g cosh g, sinh^2 g.
_PA_PS_MEAN = (
    (-1, "c", ((1, (3, 2, 0, 0)), (4, (2, 1, 0, 0)), (2, (1, 0, 0, 0)))),
    (0, "s", ((1, (2, 2, 0, 1)), (3, (1, 1, 0, 1)), (1, (0, 0, 0, 1)))),
    (1, "c", ((1, (2, 3, 0, 0)), (4, (1, 2, 0, 0)), (2, (0, 1, 0, 0)))),
    (0, "s", ((1, (2, 2, 1, 0)), (3, (1, 1, 1, 0)), (1, (0, 0, 1, 0)))),
)
_PA_PS_SQ = (
    (-2, "c2", ((1, (4, 2, 0, 0)), (5, (3, 1, 0, 0)), (3, (2, 0, 0, 0)))),
    (2, "c2", ((1, (2, 4, 0, 0)), (5, (1, 3, 0, 0)), (3, (0, 2, 0, 0)))),
    (0, "c2", ((2, (3, 3, 0, 0)), (10, (2, 2, 0, 0)), (8, (1, 1, 0, 0)))),
    (-1, "sc", (
        (2, (3, 2, 0, 1)), (8, (2, 1, 0, 1)), (4, (1, 0, 0, 1)),
        (2, (3, 2, 1, 0)), (8, (2, 1, 1, 0)), (4, (1, 0, 1, 0)),
    )),
    (1, "sc", (
        (2, (2, 3, 1, 0)), (8, (1, 2, 1, 0)), (4, (0, 1, 1, 0)),
        (2, (2, 3, 0, 1)), (8, (1, 2, 0, 1)), (4, (0, 1, 0, 1)),
    )),
    (0, "s2", (
        (1, (2, 2, 0, 2)), (3, (1, 1, 0, 2)), (1, (0, 0, 0, 2)),
        (1, (2, 2, 2, 0)), (3, (1, 1, 2, 0)), (1, (0, 0, 2, 0)),
        (2, (2, 2, 1, 1)), (6, (1, 1, 1, 1)), (2, (0, 0, 1, 1)),
        (2, (2, 2, 0, 0)), (6, (1, 1, 0, 0)), (2, (0, 0, 0, 0)),
    )),
)
_PS_PA_MEAN = (
    (-1, "c", ((1, (3, 2, 0, 0)), (2, (2, 1, 0, 0)))),
    (0, "s", ((1, (2, 2, 0, 1)), (1, (1, 1, 0, 1)))),
    (1, "c", ((1, (2, 3, 0, 0)), (2, (1, 2, 0, 0)))),
    (0, "s", ((1, (2, 2, 1, 0)), (1, (1, 1, 1, 0)))),
)
_PS_PA_SQ = (
    (-2, "c2", ((1, (4, 2, 0, 0)), (3, (3, 1, 0, 0)))),
    (2, "c2", ((1, (2, 4, 0, 0)), (3, (1, 3, 0, 0)))),
    (0, "c2", ((2, (3, 3, 0, 0)), (6, (2, 2, 0, 0)), (2, (1, 1, 0, 0)))),
    (-1, "sc", ((2, (3, 2, 1, 0)), (4, (2, 1, 1, 0)), (2, (3, 2, 0, 1)), (4, (2, 1, 0, 1)))),
    (1, "sc", ((2, (2, 3, 0, 1)), (4, (1, 2, 0, 1)), (2, (2, 3, 1, 0)), (4, (1, 2, 1, 0)))),
    (0, "s2", (
        (1, (2, 2, 2, 0)), (1, (1, 1, 2, 0)), (1, (2, 2, 0, 2)), (1, (1, 1, 0, 2)),
        (2, (2, 2, 1, 1)), (2, (1, 1, 1, 1)), (2, (2, 2, 0, 0)), (2, (1, 1, 0, 0)),
    )),
)
_PRINTED = {"pa-then-ps": (_PA_PS_MEAN, _PA_PS_SQ), "ps-then-pa": (_PS_PA_MEAN, _PS_PA_SQ)}

# photon number inside the interferometer, a^dag a + b^dag b after the NCO
_PRINTED_N = {
    "pa-then-ps": ((1, (3, 3, 0, 0)), (5, (2, 2, 0, 0)), (4, (1, 1, 0, 0)), (1, (2, 2, 1, 1)), (3, (1, 1, 1, 1)), (1, (0, 0, 1, 1))),
    "ps-then-pa": ((1, (3, 3, 0, 0)), (3, (2, 2, 0, 0)), (1, (1, 1, 0, 0)), (1, (2, 2, 1, 1)), (1, (1, 1, 1, 1))),
}


@dataclass(frozen=True)
class HomodyneExpansion:
    """<a + a^dag> = A^2 sum c e^{i m phi} P  and  <(a + a^dag)^2> = A^2 sum(...) + sq_const.

    Terms are ``(m, coeff, key)`` with coeff already multiplied by the gain
    weights.  ``norm_terms`` give A^-2 as a combination of P moments.
    """

    mean_terms: tuple
    sq_terms: tuple
    sq_const: float
    norm_terms: tuple
    source: str


def _weights(g: float) -> dict:
    c, s = math.cosh(g), math.sinh(g)
    return {"c": c, "s": s, "c2": c * c, "sc": s * c, "s2": s * s}


def _flatten(table, w):
    return tuple((m, w[kind] * coeff, key) for m, kind, items in table for coeff, key in items)


def printed_expansion(preset: str, g: float) -> HomodyneExpansion:
    mean, sq = _PRINTED[preset]
    w = _weights(g)
    if preset == "pa-then-ps":
        norm = ((1.0, (2, 2, 0, 0)), (3.0, (1, 1, 0, 0)), (1.0, (0, 0, 0, 0)))
    else:
        norm = ((1.0, (2, 2, 0, 0)), (1.0, (1, 1, 0, 0)))
    # the bracket ends in "+ A^-2", which contributes exactly 1 after the A^2 prefactor
    return HomodyneExpansion(_flatten(mean, w), _flatten(sq, w), 1.0, norm, "printed")


def _u_poly(scheme: SchemeSpec) -> list[float]:
    c1, c0 = scheme.linear_coefficients
    return [c0, c1]


def _a_terms(u, p, q):
    return sandwich_normal_order(u, p, q)


def generic_expansion(scheme: SchemeSpec, g: float) -> HomodyneExpansion:
    """Normal-ordered expansion for arbitrary (s, t).

    The output annihilator is ``c e^{i phi} a + s b^dag`` with the mode-a and
    mode-b operators taken after loss, so

        a + a^dag            = c (e^{i phi} a + e^{-i phi} a^dag) + s (b + b^dag)
        (a + a^dag)^2        = c^2 (e^{2i phi} a^2 + e^{-2i phi} a^dag^2 + 2 a^dag a + 1)
                               + s^2 (b^2 + b^dag^2 + 2 b^dag b + 1)
                               + 2 c s (e^{i phi} a + e^{-i phi} a^dag)(b + b^dag)
    """
    w = _weights(g)
    c, s, c2, sc, s2 = w["c"], w["s"], w["c2"], w["sc"], w["s2"]
    u = _u_poly(scheme)
    mean: list = []
    sq: list = []

    def add(out, m, weight, p, q, r, t):
        for (x, y), coeff in _a_terms(u, p, q).items():
            if coeff:
                out.append((m, weight * coeff, (x, y, r, t)))

    # <a + a^dag>
    add(mean, 1, c, 0, 1, 0, 0)
    add(mean, -1, c, 1, 0, 0, 0)
    add(mean, 0, s, 0, 0, 0, 1)
    add(mean, 0, s, 0, 0, 1, 0)
    # <(a + a^dag)^2>
    add(sq, 2, c2, 0, 2, 0, 0)
    add(sq, -2, c2, 2, 0, 0, 0)
    add(sq, 0, 2 * c2, 1, 1, 0, 0)
    add(sq, 0, c2 + s2, 0, 0, 0, 0)
    add(sq, 0, s2, 0, 0, 0, 2)
    add(sq, 0, s2, 0, 0, 2, 0)
    add(sq, 0, 2 * s2, 0, 0, 1, 1)
    for r, t in ((0, 1), (1, 0)):
        add(sq, 1, 2 * sc, 0, 1, r, t)
        add(sq, -1, 2 * sc, 1, 0, r, t)
    norm = tuple((coeff, (x, y, 0, 0)) for (x, y), coeff in _a_terms(u, 0, 0).items() if coeff)
    return HomodyneExpansion(tuple(mean), tuple(sq), 0.0, norm, "generic")


def expansion_for(scheme: SchemeSpec, g: float, source: str = "auto") -> HomodyneExpansion:
    preset = scheme.preset_name
    if source == "printed" or (source == "auto" and preset in _PRINTED):
        if preset not in _PRINTED:
            raise DomainError(f"no printed formula for scheme {scheme.label}")
        return printed_expansion(preset, g)
    return generic_expansion(scheme, g)


# ------------------------------------------------------------- analytic backend


def _as_scheme(scheme) -> SchemeSpec:
    return SchemeSpec.parse(scheme) if isinstance(scheme, str) else scheme


def _norm_inv_sq(exp: HomodyneExpansion, tab) -> float:
    return sum(coeff * tab[key] for coeff, key in exp.norm_terms)


def _phase_sum(terms, tab, phi, order=0) -> complex:
    total = 0j
    for m, coeff, key in terms:
        total += coeff * (1j * m) ** order * cmath.exp(1j * m * phi) * tab[key]
    return total


@dataclass(frozen=True)
class AnalyticHomodyne:
    mean_X: float
    mean_X2: float
    dmeanX_dphi: float
    norm_constant: float
    imag_residue: float


def homodyne_analytic(scheme, params: InterferometerParams, source: str = "auto") -> AnalyticHomodyne:
    scheme = _as_scheme(scheme)
    exp = expansion_for(scheme, params.g, source)
    tab = moment_table(params.g, params.T, params.alpha)
    if exp.source == "printed":
        a = normalization_A(scheme, GenFunParams(params.g, params.T, params.alpha))
        a2 = a * a
    else:
        inv = _norm_inv_sq(exp, tab)
        if inv <= 1e-300:
            raise DegenerateStateError(f"NCO {scheme.label} annihilates the state")
        a2 = 1.0 / inv
    mean = a2 * _phase_sum(exp.mean_terms, tab, params.phi)
    sq = a2 * _phase_sum(exp.sq_terms, tab, params.phi) + exp.sq_const
    slope = a2 * _phase_sum(exp.mean_terms, tab, params.phi, order=1)
    residue = max(abs(mean.imag), abs(sq.imag), abs(slope.imag))
    return AnalyticHomodyne(
        mean.real / SQRT2, sq.real / 2, slope.real / SQRT2, math.sqrt(a2), residue
    )


def homodyne_moments_analytic(scheme, g: float, T: float, alpha: float, phi: float) -> tuple[float, float]:
    """(<X>, <X^2>) of the output quadrature X = (a + a^dag)/sqrt(2)."""
    r = homodyne_analytic(scheme, InterferometerParams(g=g, alpha=alpha, phi=phi, T=T))
    return r.mean_X, r.mean_X2


def dmeanX_dphi(scheme, params: InterferometerParams, backend: str = "analytic", **kw) -> float:
    """Slope of <X> in phi (analytic term-by-term, or oracle finite difference)."""
    if backend == "analytic":
        slope = homodyne_analytic(scheme, params).dmeanX_dphi
    elif backend == "oracle":
        slope = _oracle_eval(_as_scheme(scheme), params, **kw)[2]
    else:
        raise DomainError(f"unknown backend {backend!r}")
    return slope


def richardson_slope(f_values, h: float) -> float:
    """Central difference with one Richardson step from samples at phi + (-2h, -h, h, 2h)."""
    fm2, fm1, fp1, fp2 = f_values
    d1 = (fp1 - fm1) / (2 * h)
    d2 = (fp2 - fm2) / (4 * h)
    return (4 * d1 - d2) / 3


def _oracle_eval(scheme, params, h: float = FD_STEP, tol: float = oracle.DEFAULT_TOL, **kw):
    offsets = np.array([0.0, -2 * h, -h, h, 2 * h])
    res = oracle.homodyne_pipeline(scheme, params.g, params.alpha, params.phi + offsets, T_a=params.T, tol=tol, **kw)
    slope = richardson_slope(res.mean_X[1:], h)
    return res.mean_X[0], res.mean_X2[0], slope, res


@dataclass(frozen=True)
class SensitivityPoint:
    params: InterferometerParams
    scheme: SchemeSpec
    mean_X: float
    mean_X2: float
    dmeanX_dphi: float
    delta_phi: float
    backend: str
    diagnostics: dict = field(default_factory=dict, compare=False)


def _delta(mean, mean_sq, slope):
    if not math.isfinite(slope) or abs(slope) < SLOPE_THRESHOLD:
        raise DivergentSensitivityError(f"|d<X>/dphi| = {abs(slope):.3e} below {SLOPE_THRESHOLD:g}")
    var = mean_sq - mean * mean
    # rounding can push a tiny variance negative
    return math.sqrt(max(var, 0.0)) / abs(slope)


def phase_sensitivity(scheme, params: InterferometerParams, backend: str = "analytic", **kw) -> SensitivityPoint:
    """Delta phi = sqrt(<X^2> - <X>^2) / |d<X>/dphi|."""
    scheme = _as_scheme(scheme)
    if backend == "analytic":
        r = homodyne_analytic(scheme, params)
        mean, sq, slope = r.mean_X, r.mean_X2, r.dmeanX_dphi
        diag = {"imag_residue": r.imag_residue, "norm_constant": r.norm_constant}
    elif backend == "oracle":
        mean, sq, slope, res = _oracle_eval(scheme, params, **kw)
        diag = {"imag_residue": res.imag_residue, "norm_constant": res.norm_constant,
                "norm_leak": res.norm_leak, "cutoff": res.cutoff}
    else:
        raise DomainError(f"unknown backend {backend!r}")
    return SensitivityPoint(params, scheme, mean, sq, slope, _delta(mean, sq, slope), backend, diag)


# ---------------------------------------------------------- photon budget


@dataclass(frozen=True)
class PhotonBudget:
    N: float
    scheme: SchemeSpec
    params: InterferometerParams
    backend: str = "analytic"


def generic_n_terms(scheme: SchemeSpec) -> tuple:
    u = _u_poly(scheme)
    terms = [(c, (x, y, 0, 0)) for (x, y), c in _a_terms(u, 1, 1).items() if c]
    terms += [(c, (x, y, 1, 1)) for (x, y), c in _a_terms(u, 0, 0).items() if c]
    return tuple(terms)


def mean_photon_inside(scheme, params: InterferometerParams, backend: str = "analytic", **kw) -> PhotonBudget:
    """Total mean photon number <a^dag a + b^dag b> right after the NCO."""
    scheme = _as_scheme(scheme)
    if backend == "oracle":
        m = oracle.post_nco_moments(scheme, params.g, params.alpha, params.T, **kw)
        return PhotonBudget(m.n_a + m.n_b, scheme, params, "oracle")
    if backend != "analytic":
        raise DomainError(f"unknown backend {backend!r}")
    tab = moment_table(params.g, params.T, params.alpha)
    preset = scheme.preset_name
    if preset in _PRINTED_N:
        a = normalization_A(scheme, GenFunParams(params.g, params.T, params.alpha))
        n = a * a * sum(c * tab[k] for c, k in _PRINTED_N[preset])
    else:
        exp = generic_expansion(scheme, params.g)
        inv = _norm_inv_sq(exp, tab)
        if inv <= 1e-300:
            raise DegenerateStateError(f"NCO {scheme.label} annihilates the state")
        n = sum(c * tab[k] for c, k in generic_n_terms(scheme)) / inv
    return PhotonBudget(n, scheme, params, "analytic")


def sql(N: float) -> float:
    if not N > 0:
        raise DomainError("SQL needs a positive photon number")
    return 1.0 / math.sqrt(N)


def hl(N: float) -> float:
    if not N > 0:
        raise DomainError("HL needs a positive photon number")
    return 1.0 / N


# ------------------------------------------------------------ optimal phase


@dataclass(frozen=True)
class OptimalPhase:
    phi: float
    delta_phi: float
    evaluations: int


def optimal_phase(scheme, params: InterferometerParams, bracket=(0.01, math.pi / 2), xatol: float = 1e-8) -> OptimalPhase:
    """Minimize Delta phi over phi inside ``bracket`` (bounded Brent/golden-section search)."""
    lo, hi = bracket
    if not lo < hi:
        raise DomainError("phase bracket must satisfy lo < hi")
    scheme = _as_scheme(scheme)

    def f(phi):
        try:
            return phase_sensitivity(scheme, params.with_(phi=phi)).delta_phi
        except DivergentSensitivityError:
            return math.inf

    res = minimize_scalar(f, bounds=(lo, hi), method="bounded", options={"xatol": xatol})
    # the bounded search never evaluates the endpoints themselves
    best = min(((float(res.x), float(res.fun)), (lo, f(lo)), (hi, f(hi))), key=lambda p: p[1])
    return OptimalPhase(best[0], best[1], int(res.nfev) + 2)
