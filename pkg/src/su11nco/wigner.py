"""Two-mode Wigner function by displaced parity, and its negative volume.

    W(z, gamma) = (4/pi^2) < D_a(z) P_a D_a(z)^dag  (x)  D_b(gamma) P_b D_b(gamma)^dag >

with P the photon-number parity.  Since D(z) P D(z)^dag = D(2z) P, every grid
point needs only the matrices D(2z) P, which are exact in the truncated basis
(the state vanishes outside the box).  On a tensor grid the four-dimensional
sum factorizes as

    W[z, gamma] = sum_{kl} C[z]_{kl} M_b[gamma]_{kl},   C[z] = psi^dag M_a[z] psi,

which is one matrix product per chunk of z points.

Phase-space coordinates are z = (x1 + i y1)/sqrt(2) and gamma = (x2 + i y2)/sqrt(2).
The measure is d^2z d^2gamma = dx1 dy1 dx2 dy2 / 4, so that W integrates to one.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from numpy.polynomial.legendre import leggauss

from . import fock, oracle
from .errors import DomainError, GridTooSmallError
from .fock import MultiModeState
from .model import SchemeSpec

PREFACTOR = 4.0 / math.pi**2
MEASURE = 0.25  # d^2z d^2gamma per dx1 dy1 dx2 dy2
NORM_WINDOW = (0.98, 1.02)
_CHUNK = 512


@dataclass(frozen=True)
class PhasePoint:
    x1: float
    y1: float
    x2: float
    y2: float

    @property
    def z(self) -> complex:
        return complex(self.x1, self.y1) / math.sqrt(2)

    @property
    def gamma(self) -> complex:
        return complex(self.x2, self.y2) / math.sqrt(2)


@dataclass(frozen=True)
class QuadratureGrid:
    half_width: float = 5.0
    points_per_axis: int = 64
    rule: str = "gauss-legendre"

    def __post_init__(self):
        if not self.half_width > 0:
            raise DomainError("grid half-width must be positive")
        if self.points_per_axis < 8:
            raise DomainError("need at least 8 points per axis")
        if self.rule not in ("gauss-legendre", "midpoint"):
            raise DomainError(f"unknown quadrature rule {self.rule!r}")

    def nodes(self) -> tuple[np.ndarray, np.ndarray]:
        """Nodes and weights along one x axis on [-L, L]."""
        n, L = self.points_per_axis, self.half_width
        if self.rule == "gauss-legendre":
            x, w = leggauss(n)
            return x * L, w * L
        h = 2 * L / n
        return -L + h * (np.arange(n) + 0.5), np.full(n, h)

    def plane(self) -> tuple[np.ndarray, np.ndarray]:
        """Complex amplitudes (x + i y)/sqrt(2) of one 2-D plane and their weights."""
        x, w = self.nodes()
        X, Y = np.meshgrid(x, x, indexing="ij")
        return ((X + 1j * Y) / math.sqrt(2)).ravel(), np.outer(w, w).ravel()

    def refined(self, extra: int = 16) -> "QuadratureGrid":
        return QuadratureGrid(self.half_width, self.points_per_axis + extra, self.rule)

    def extended(self, extra: float = 1.0) -> "QuadratureGrid":
        return QuadratureGrid(self.half_width + extra, self.points_per_axis, self.rule)


def displaced_parity(betas, dim: int) -> np.ndarray:
    """Stack of D(2 beta) P on a dim-level mode."""
    parity = (-1.0) ** np.arange(dim)
    return fock.displacement_matrices(2 * np.asarray(betas, dtype=complex), dim) * parity[None, None, :]


def _two_mode_amplitudes(state: MultiModeState) -> np.ndarray:
    if state.num_modes != 2:
        raise DomainError("Wigner evaluation needs a two-mode state")
    psi = state.amplitudes
    return psi / math.sqrt(float(np.vdot(psi, psi).real))


def wigner_point(state: MultiModeState, p: PhasePoint, imag_tol: float = 1e-8) -> float:
    psi = _two_mode_amplitudes(state)
    da, db = psi.shape
    Ma = displaced_parity([p.z], da)[0]
    Mb = displaced_parity([p.gamma], db)[0]
    val = PREFACTOR * np.vdot(psi, Ma @ psi @ Mb.T)
    if abs(val.imag) > imag_tol:
        raise ArithmeticError(f"Wigner value has imaginary part {val.imag:.2e}")
    return float(val.real)


@dataclass(frozen=True)
class NegativityReport:
    volume: float
    integral: float
    imag_residue: float
    max_abs: float
    min_value: float
    grid: QuadratureGrid
    center: tuple = (0j, 0j)
    refine_delta: float | None = None
    extend_delta: float | None = None


def _grid_sums(psi: np.ndarray, grid: QuadratureGrid, center=(0j, 0j)):
    """Weighted sums of W and of (|W| - W)/2 over the 4-D tensor grid."""
    da, db = psi.shape
    base, wts = grid.plane()
    Mb = displaced_parity(base + center[1], db).reshape(base.size, -1)
    total = neg = 0.0
    imag = max_abs = 0.0
    min_val = math.inf
    # fixed chunk order keeps the reduction order, and the result, reproducible
    for lo in range(0, base.size, _CHUNK):
        za = base[lo : lo + _CHUNK] + center[0]
        Ma = displaced_parity(za, da)
        # C[z] = psi^dag Ma[z] psi, contracted over mode a only
        C = np.einsum("mk,zmn,nl->zkl", psi.conj(), Ma, psi, optimize=True).reshape(za.size, -1)
        Wc = PREFACTOR * (C @ Mb.T)
        Wr = Wc.real
        imag = max(imag, float(np.max(np.abs(Wc.imag))))
        max_abs = max(max_abs, float(np.max(np.abs(Wr))))
        min_val = min(min_val, float(np.min(Wr)))
        wz = wts[lo : lo + _CHUNK]
        total += float(wz @ Wr @ wts)
        neg += float(wz @ (0.5 * (np.abs(Wr) - Wr)) @ wts)
    return total * MEASURE, neg * MEASURE, imag, max_abs, min_val


def negative_volume(
    state: MultiModeState,
    grid: QuadratureGrid | None = None,
    center: tuple | None = None,
    check_convergence: bool = False,
) -> tuple[float, NegativityReport]:
    """V = integral of (|W| - W)/2 over a grid centred at ``center`` (default: <a>, <b>)."""
    grid = grid or QuadratureGrid()
    psi = _two_mode_amplitudes(state)
    if center is None:
        st = MultiModeState(psi)
        center = tuple(fock.ladder_expectations(st, m)[0] for m in (0, 1))
    total, neg, imag, max_abs, min_val = _grid_sums(psi, grid, center)
    lo, hi = NORM_WINDOW
    if not lo <= total <= hi:
        raise GridTooSmallError(
            f"integral of W over the grid is {total:.4f}; enlarge the half-width (now {grid.half_width})"
        )
    refine = extend = None
    if check_convergence:
        refine = _grid_sums(psi, grid.refined(), center)[1] - neg
        extend = _grid_sums(psi, grid.extended(), center)[1] - neg
    report = NegativityReport(neg, total, imag, max_abs, min_val, grid, tuple(center), refine, extend)
    return neg, report


# ------------------------------------------------------------ NCO states


def nco_state_ideal(scheme: SchemeSpec, g: float, alpha: float, tol: float = oracle.DEFAULT_TOL) -> MultiModeState:
    """A_j U_P U_S1 |alpha>|0>, normalized, on an automatically sized box."""
    state, _ = oracle.ideal_nco_state(scheme, g, alpha, tol)
    return state


def compact_frame_state(scheme: SchemeSpec, g: float, alpha: float, tol: float = 1e-15, trim_tol: float = 1e-12) -> MultiModeState:
    """D_a(-alpha) U_S(g, pi) |psi_P>, trimmed to its support.

    U_S(g, pi) undoes the first OPA and D_a(-alpha) removes the input
    displacement, so the result is a low-photon state centred at the origin
    (a quadratic polynomial in creation operators on vacuum, hence at most two
    photons per mode up to rounding noise, which ``trim_tol`` removes).
    Both maps are Gaussian unitaries, which act on W as measure-preserving
    affine changes of variables; the negative volume is therefore unchanged
    while the state becomes small enough for a fixed grid.
    """
    psi = nco_state_ideal(scheme, g, alpha, tol)
    back = oracle.squeeze_adaptive(psi, (0, 1), g, math.pi, tol=tol)
    back = fock.displace(back, 0, -alpha, pad=8, leak_budget=1e-6)
    return fock.trim(back, trim_tol).normalized()


@dataclass(frozen=True)
class VolumeResult:
    scheme: SchemeSpec
    g: float
    alpha: float
    volume: float
    report: NegativityReport
    frame: str


def nco_negative_volume(
    scheme: SchemeSpec,
    g: float,
    alpha: float,
    grid: QuadratureGrid | None = None,
    frame: str = "compact",
    check_convergence: bool = False,
) -> VolumeResult:
    """Negative volume of |psi_P> for a scheme, evaluated in the compact or lab frame."""
    if frame == "compact":
        state = compact_frame_state(scheme, g, alpha)
        center = (0j, 0j)
    elif frame == "lab":
        state = fock.trim(nco_state_ideal(scheme, g, alpha), 1e-15)
        center = None
    else:
        raise DomainError(f"unknown frame {frame!r}")
    vol, rep = negative_volume(state, grid, center, check_convergence)
    return VolumeResult(scheme, g, alpha, vol, rep, frame)


# ------------------------------------------------------------- slice dump


def wigner_slice(state: MultiModeState, x1: np.ndarray, y1: np.ndarray, x2: float = 0.0, y2: float = 0.0) -> np.ndarray:
    """W on the (x1, y1) plane at fixed (x2, y2); shape (len(x1), len(y1))."""
    psi = _two_mode_amplitudes(state)
    da, db = psi.shape
    X, Y = np.meshgrid(np.asarray(x1, float), np.asarray(y1, float), indexing="ij")
    zs = ((X + 1j * Y) / math.sqrt(2)).ravel()
    Mb = displaced_parity([complex(x2, y2) / math.sqrt(2)], db)[0]
    right = psi @ Mb.T
    out = np.empty(zs.size)
    for lo in range(0, zs.size, _CHUNK):
        Ma = displaced_parity(zs[lo : lo + _CHUNK], da)
        out[lo : lo + _CHUNK] = PREFACTOR * np.einsum("mk,zmn,nk->z", psi.conj(), Ma, right).real
    return out.reshape(X.shape)


def write_slice_csv(path, x1, y1, values) -> None:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x1", "y1", "W"])
        for i, xv in enumerate(x1):
            for j, yv in enumerate(y1):
                w.writerow([repr(float(xv)), repr(float(yv)), repr(float(values[i, j]))])
