"""Quantum Fisher information, Cramer-Rao bound and the lossy bound C_Q(lambda).

Ideal case: the phase generator is n_a, so F = 4 Var(n_a) on the normalized
post-NCO state.  With loss on mode a before the NCO, the pure extended state
sum_l U_P Pi_l(eta, phi, lambda) |psi>|l> has QFI C_Q(lambda) >= F_L, and
F_L = min over lambda.  C_Q is quadratic in lambda, so the minimum is the
vertex of a parabola.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from . import fock, oracle
from .errors import DegenerateStateError, DomainError
from .model import SchemeSpec
from .moments import GenFunParams, moment_table, normalization_A, sandwich_normal_order, stirling2

LAMBDA_FALLBACK = (-2.0, 1.0)
FLAT_RTOL = 1e-11


def _as_scheme(scheme) -> SchemeSpec:
    return SchemeSpec.parse(scheme) if isinstance(scheme, str) else scheme


@dataclass(frozen=True)
class QfiResult:
    scheme: SchemeSpec
    g: float
    alpha: float
    F: float
    qcrb: float
    eta: float = 1.0
    lambda_star: float | None = None
    cq_at_endpoints: tuple | None = None  # C_Q at lambda = 0 and lambda = -1
    flag: str = "ok"  # "ok", "flat" (lambda-independent) or "fallback" (non-convex)
    backend: str = "analytic"


def qcrb(F: float, v: int = 1) -> float:
    """Delta phi_QCRB = 1 / sqrt(v F)."""
    if not F > 0:
        raise DomainError("QCRB needs a positive Fisher information")
    if v < 1 or int(v) != v:
        raise DomainError("number of measurements v must be a positive integer")
    return 1.0 / math.sqrt(v * F)


def _safe_qcrb(F, v=1):
    return qcrb(F, v) if F > 0 else math.inf


# ------------------------------------------------------------------ ideal


_PRINTED_F = {
    # (second-moment terms, first-moment terms) inside 4{A^2(...) - [A^2(...)]^2}
    "pa-then-ps": (
        ((1, (4, 4, 0, 0)), (8, (3, 3, 0, 0)), (14, (2, 2, 0, 0)), (4, (1, 1, 0, 0))),
        ((1, (3, 3, 0, 0)), (5, (2, 2, 0, 0)), (4, (1, 1, 0, 0))),
    ),
    "ps-then-pa": (
        ((1, (4, 4, 0, 0)), (6, (3, 3, 0, 0)), (7, (2, 2, 0, 0)), (1, (1, 1, 0, 0))),
        ((1, (3, 3, 0, 0)), (3, (2, 2, 0, 0)), (1, (1, 1, 0, 0))),
    ),
}


def _generic_number_terms(scheme: SchemeSpec, k: int) -> tuple:
    """<u(n) n^k u(n)> as P_{j,j,0,0} terms (u, n^k commute)."""
    c1, c0 = scheme.linear_coefficients
    middle = [0.0] * k + [1.0]
    return tuple((c, (x, y, 0, 0)) for (x, y), c in sandwich_normal_order([c0, c1], 0, 0, middle).items() if c)


def qfi_ideal(scheme, g: float, alpha: float, backend: str = "analytic", v: int = 1, **kw) -> QfiResult:
    """F = 4 Var(n_a) after the NCO, lossless (T = 1)."""
    scheme = _as_scheme(scheme)
    if backend == "oracle":
        m = oracle.post_nco_moments(scheme, g, alpha, 1.0, **kw)
        F = 4 * m.var_n_a
        return QfiResult(scheme, g, alpha, F, _safe_qcrb(F, v), backend="oracle")
    if backend != "analytic":
        raise DomainError(f"unknown backend {backend!r}")
    tab = moment_table(g, 1.0, alpha)
    preset = scheme.preset_name
    if preset in _PRINTED_F:
        a = normalization_A(scheme, GenFunParams(g, 1.0, alpha))
        second, first = _PRINTED_F[preset]
        a2 = a * a
    else:
        inv = sum(c * tab[k] for c, k in _generic_number_terms(scheme, 0))
        if inv <= 1e-300:
            raise DegenerateStateError(f"NCO {scheme.label} annihilates the state")
        a2 = 1.0 / inv
        second, first = _generic_number_terms(scheme, 2), _generic_number_terms(scheme, 1)
    m2 = a2 * sum(c * tab[k] for c, k in second)
    m1 = a2 * sum(c * tab[k] for c, k in first)
    F = 4 * (m2 - m1 * m1)
    return QfiResult(scheme, g, alpha, F, _safe_qcrb(F, v))


# ---------------------------------------------------------- lossy, analytic


def n_moments_analytic(g: float, alpha: float, k: int) -> float:
    """<n^k> of mode a after the first OPA, k = 1..4."""
    c2, s2, A = math.cosh(g) ** 2, math.sinh(g) ** 2, alpha * alpha
    if k == 1:
        return A * c2 + s2
    if k == 2:
        return A * c2 + s2 + A**2 * c2**2 + 2 * s2**2 + 4 * A * s2 * c2
    if k == 3:
        return (
            A * c2 + s2 + 3 * A**2 * c2**2 + 6 * s2**2 + 12 * A * s2 * c2
            + A**3 * c2**3 + 18 * A * c2 * s2**2 + 6 * s2**3 + 9 * A**2 * c2**2 * s2
        )
    if k == 4:
        return (
            A * c2 + s2 + 7 * A**2 * c2**2 + 14 * s2**2 + 28 * A * s2 * c2
            + 36 * s2**3 + 6 * A**3 * c2**3 + 24 * s2**4 + 108 * A * c2 * s2**2
            + A**4 * c2**4 + 54 * A**2 * c2**2 * s2 + 96 * A * c2 * s2**3
            + 72 * A**2 * c2**2 * s2**2 + 16 * A**3 * c2**3 * s2
        )
    raise DomainError("moment order must be 1..4")


def n_moments_from_table(g: float, alpha: float, k: int) -> float:
    """Same moments from the generating function: n^k = sum_j S(k,j) a^dag^j a^j."""
    tab = moment_table(g, 1.0, alpha)
    return sum(stirling2(k, j) * tab[j, j, 0, 0] for j in range(1, k + 1))


def _preset(scheme) -> str:
    name = _as_scheme(scheme).preset_name
    if name not in ("pa-then-ps", "ps-then-pa"):
        raise DomainError("the lossy closed forms cover the PA-then-PS and PS-then-PA presets")
    return name


def normalization_B(scheme, eta: float, g: float, alpha: float) -> float:
    name = _preset(scheme)
    _check_eta(eta)
    n1, n2 = n_moments_analytic(g, alpha, 1), n_moments_analytic(g, alpha, 2)
    if name == "pa-then-ps":
        radicand = 1 + (3 * eta - eta**2) * n1 + eta**2 * n2
    else:
        radicand = (eta - eta**2) * n1 + eta**2 * n2
    if radicand <= 1e-300:
        raise DegenerateStateError(f"{name}: normalization radicand vanishes")
    return radicand**-0.5


def _check_eta(eta):
    if not 0.0 <= eta <= 1.0:
        raise DomainError("eta must lie in [0, 1]")


def u_coefficients(eta: float, lam: float) -> dict:
    """The twelve lambda-dependent weights of the lossy C_Q expressions."""
    e, l = eta, lam
    l2 = l * l
    return {
        1: l2 * e**4 - 2 * l2 * e**3 + l2 * e**2 + 2 * l * e**4 - 2 * l * e**3 + e**4,
        2: (-6 * l2 * e**4 + 14 * l2 * e**3 - 11 * l2 * e**2 + 3 * l2 * e
            - 12 * l * e**4 + 22 * l * e**3 - 10 * l * e**2 - 6 * e**4 + 8 * e**3),
        3: (11 * l2 * e**4 - 28 * l2 * e**3 + 24 * l2 * e**2 - 8 * l2 * e + l2
            + 22 * l * e**4 - 52 * l * e**3 + 38 * l * e**2 - 8 * l * e
            + 11 * e**4 - 24 * e**3 + 14 * e**2),
        4: (-6 * l2 * e**4 + 16 * l2 * e**3 - 14 * l2 * e**2 + 4 * l2 * e
            - 12 * l * e**4 + 32 * l * e**3 - 28 * l * e**2 + 8 * l * e
            - 6 * e**4 + 16 * e**3 - 14 * e**2 + 4 * e),
        5: l * e**3 - l * e**2 + e**3,
        6: 6 * l * e**2 - 3 * l * e - 3 * l * e**3 + 5 * e**2 - 3 * e**3,
        7: 4 * e - l + 4 * l * e - 5 * l * e**2 + 2 * l * e**3 - 5 * e**2 + 2 * e**3,
        8: (-6 * l2 * e**4 + 12 * l2 * e**3 - 7 * l2 * e**2 + l2 * e
            - 12 * l * e**4 + 18 * l * e**3 - 6 * l * e**2 - 6 * e**4 + 6 * e**3),
        9: (11 * l2 * e**4 - 22 * l2 * e**3 + 13 * l2 * e**2 - 2 * l2 * e
            + 22 * l * e**4 - 40 * l * e**3 + 20 * l * e**2
            - 2 * l * e + 11 * e**4 - 18 * e**3 + 7 * e**2),
        10: (-6 * l2 * e**4 + 12 * l2 * e**3 - 7 * l2 * e**2 + l2 * e
             - 12 * l * e**4 + 24 * l * e**3 - 14 * l * e**2
             + 2 * l * e - 6 * e**4 + 12 * e**3 - 7 * e**2 + e),
        11: 4 * l * e**2 - l * e - 3 * l * e**3 + 3 * e**2 - 3 * e**3,
        12: e + l * e - 3 * l * e**2 + 2 * l * e**3 - 3 * e**2 + 2 * e**3,
    }


_U_INDEX = {"pa-then-ps": ((1, 2, 3, 4), (5, 6, 7)), "ps-then-pa": ((1, 8, 9, 10), (5, 11, 12))}


def cq_of_lambda(scheme, eta: float, g: float, alpha: float, lam: float) -> float:
    """Extended-space QFI C_Q(lambda) with loss eta on mode a before the NCO."""
    name = _preset(scheme)
    _check_eta(eta)
    if eta == 0:
        return 0.0
    b2 = normalization_B(name, eta, g, alpha) ** 2
    u = u_coefficients(eta, lam)
    m = {k: n_moments_analytic(g, alpha, k) for k in (1, 2, 3, 4)}
    second, first = _U_INDEX[name]
    h1 = b2 * sum(u[i] * m[k] for i, k in zip(second, (4, 3, 2, 1)))
    h2 = b2 * sum(u[i] * m[k] for i, k in zip(first, (3, 2, 1)))
    return 4 * (h1 - h2 * h2)


def cq_quadratic(scheme, eta: float, g: float, alpha: float, backend: str = "analytic", **kw) -> tuple[float, float, float]:
    """(a, b, c) with C_Q(lambda) = a lambda^2 + b lambda + c (exact for a quadratic)."""
    if backend == "analytic":
        f = lambda lam: cq_of_lambda(scheme, eta, g, alpha, lam)
    elif backend == "oracle":
        f = lambda lam: cq_oracle(scheme, eta, g, alpha, lam, **kw)
    else:
        raise DomainError(f"unknown backend {backend!r}")
    fm, f0, fp = (f(lam) for lam in (-1.0, 0.0, 1.0))
    return (fp + fm) / 2 - f0, (fp - fm) / 2, f0


def qfi_lossy(scheme, eta: float, g: float, alpha: float, v: int = 1, backend: str = "analytic", **kw) -> QfiResult:
    """F_L = min over lambda of C_Q(lambda).

    The oracle backend builds C_Q from the Kraus purification and so also
    covers schemes outside the two presets.
    """
    scheme = _as_scheme(scheme)
    _check_eta(eta)
    a, b, c = cq_quadratic(scheme, eta, g, alpha, backend, **kw)
    ends = (c, a - b + c)
    scale = max(abs(a), abs(b), abs(c), 1e-300)
    if abs(a) <= FLAT_RTOL * scale and abs(b) <= FLAT_RTOL * scale or eta == 0:
        F, lam, flag = c, None, "flat"
    elif a > 0:
        lam = -b / (2 * a)
        F, flag = c - b * b / (4 * a), "ok"
    else:
        grid = np.linspace(*LAMBDA_FALLBACK, 301)
        vals = a * grid**2 + b * grid + c
        i = int(np.argmin(vals))
        lam, F, flag = float(grid[i]), float(vals[i]), "fallback"
    return QfiResult(scheme, g, alpha, F, _safe_qcrb(F, v), eta, lam, ends, flag, backend)


# ------------------------------------------------------------ Kraus oracle


def kraus_operators(eta: float, phi: float, lam: float, dim: int) -> list[np.ndarray]:
    """Pi_l = sqrt((1-eta)^l / l!) e^{i phi (n - lam l)} eta^{n/2} a^l on a dim-level mode.

    On the truncated space the family with l < dim is exactly complete.
    """
    _check_eta(eta)
    n = np.arange(dim)
    ops = []
    for l in range(dim):
        K = np.zeros((dim, dim), dtype=complex)
        src = n[l:]
        dst = src - l
        if eta == 1.0:
            if l:
                break
            logmag = np.zeros(src.size)
        elif eta == 0.0:
            logmag = np.where(dst == 0, 0.5 * (gammaln(src + 1) - gammaln(l + 1) - gammaln(dst + 1)), -np.inf)
        else:
            # |<n-l|Pi_l|n>|^2 = C(n, l) (1-eta)^l eta^(n-l)
            logmag = 0.5 * (
                gammaln(src + 1) - gammaln(l + 1) - gammaln(dst + 1)
                + l * math.log1p(-eta) + dst * math.log(eta)
            )
        K[dst, src] = np.exp(logmag) * np.exp(1j * phi * (dst - lam * l))
        ops.append(K)
    return ops


def kraus_completeness_error(ops) -> float:
    dim = ops[0].shape[0]
    total = sum(K.conj().T @ K for K in ops)
    return float(np.max(np.abs(total - np.eye(dim))))


def cq_oracle(
    scheme, eta: float, g: float, alpha: float, lam: float, phi: float = 0.0,
    tol: float = oracle.DEFAULT_TOL, max_dim: int = oracle.MAX_DIM,
) -> float:
    """C_Q from the explicit Kraus purification: 4 Var(n_a - lam l) on the extended state."""
    scheme = _as_scheme(scheme)
    psi = oracle.first_opa_state(g, alpha, tol * 1e-3, max_dim)
    ext = fock.kraus_purify(psi, 0, kraus_operators(eta, phi, lam, psi.dims[0]))
    ext, _ = fock.apply_nco(ext, 0, scheme)
    p = np.abs(ext.amplitudes) ** 2
    na = np.arange(ext.dims[0])[:, None, None]
    l = np.arange(ext.dims[2])[None, None, :]
    h = na - lam * l
    mean = float(np.sum(p * h))
    return 4 * (float(np.sum(p * h * h)) - mean * mean)
