"""Brute-force interferometer pipelines assembled from the Fock simulator.

These compose the primitive operations of :mod:`su11nco.fock` into the full
states of the interferometer and never touch the generating-function algebra,
so they serve as an independent check on the analytic backends.

Loss in the arms is purified with beam-splitter ancillas.  Rather than holding
the four-mode tensor, the pipeline loops over the Fock index of the mode-a
ancilla (the branches are orthogonal, so expectations add) and keeps the mode-b
ancilla as a batch axis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from . import fock
from .errors import DegenerateStateError, TruncationError
from .fock import FockCutoff, MultiModeState
from .model import SchemeSpec

DEFAULT_TOL = 1e-13
_GROW = 1.25
MAX_DIM = 400


def squeeze_adaptive(
    state: MultiModeState,
    modes: tuple[int, int],
    g: float,
    theta: float = 0.0,
    tol: float = DEFAULT_TOL,
    pad: int = 12,
    ref: float | None = None,
    max_dim: int = MAX_DIM,
) -> MultiModeState:
    """Two-mode squeeze, enlarging the box until this step leaks less than ``tol * ref``.

    ``ref`` defaults to the squared norm of ``state``; pass the weight of the
    whole ensemble when ``state`` is one branch of a mixture.
    """
    ref = state.norm() ** 2 if ref is None else ref
    while True:
        out = fock.two_mode_squeeze(state, modes, g, theta, pad=pad, leak_budget=math.inf)
        lost = out.norm_leak - state.norm_leak
        if lost <= tol * ref:
            return out
        dims = list(state.dims)
        grow = max(10, int(dims[modes[0]] * (_GROW - 1)))
        for m in modes:
            dims[m] += grow
        if max(dims) > max_dim:
            raise TruncationError(f"squeezing needs more than {max_dim} levels per mode")
        state = fock.resize(state, dims)


def coherent_cutoff(alpha: float, tol: float = 1e-16) -> int:
    """Smallest box holding a coherent state up to tail mass ``tol``."""
    n, term, tail = 0, math.exp(-alpha * alpha), 1.0
    while True:
        tail -= term
        n += 1
        if tail < tol or n > 10 * (alpha * alpha + 10):
            return max(n + 1, 2)
        term *= alpha * alpha / n


def first_opa_state(g: float, alpha: float, tol: float = DEFAULT_TOL, max_dim: int = MAX_DIM) -> MultiModeState:
    """U_S(g, 0) |alpha>_a |0>_b on an automatically sized box."""
    da = coherent_cutoff(alpha)
    # rough starting box from the photon statistics; squeeze_adaptive enlarges it as needed
    mean = alpha * alpha * math.cosh(g) ** 2 + math.sinh(g) ** 2
    start = max(da, int(mean + 8 * math.sqrt(mean + 1) * (1 + math.sinh(g)) + 10))
    if start > max_dim:
        raise TruncationError(f"the first squeezer needs more than {max_dim} levels per mode")
    coh = fock.coherent_state(alpha, FockCutoff(start - 1), tail_tol=1e-15)
    psi = fock.tensor(coh, fock.vacuum(1, FockCutoff(start - 1)))
    return squeeze_adaptive(psi, (0, 1), g, 0.0, tol=tol, max_dim=max_dim)


def _loss_branches(psi: MultiModeState, T_a: float, T_b: float, prune: float = 1e-20):
    """Yield 3-mode states (a, b, vb), one per Fock index of the mode-a ancilla.

    Each branch is sub-normalized; their norms squared sum to one.  Branches
    and mode-b ancilla levels with weight below ``prune`` are dropped; both
    decay geometrically in the number of lost photons.
    """
    da, db = psi.dims
    st = fock.beam_splitter(fock.attach_vacuum_ancilla(psi, da), (0, 2), T_a) if T_a < 1 else None
    slices = [psi.amplitudes] if st is None else [st.amplitudes[:, :, k] for k in range(da)]
    for amps in slices:
        if float(np.vdot(amps, amps).real) < prune:
            continue
        if T_b < 1:
            arr = fock.beam_splitter(fock.attach_vacuum_ancilla(MultiModeState(amps), db), (1, 2), T_b).amplitudes
            weights = np.sum(np.abs(arr) ** 2, axis=(0, 1))
            keep = np.nonzero(weights >= prune)[0]
            arr = arr[:, :, : (keep[-1] if keep.size else 0) + 1]
        else:
            arr = amps[:, :, None]
        yield MultiModeState(arr)


@dataclass(frozen=True)
class OraclePipelineResult:
    phis: tuple
    mean_X: np.ndarray
    mean_X2: np.ndarray
    imag_residue: float
    norm_constant: float
    n_inside: float
    norm_leak: float
    cutoff: int


def homodyne_pipeline(
    scheme: SchemeSpec,
    g: float,
    alpha: float,
    phis,
    T_a: float = 1.0,
    T_b: float | None = None,
    tol: float = DEFAULT_TOL,
    second_opa: str = "auto",
    max_dim: int = MAX_DIM,
) -> OraclePipelineResult:
    """<X>, <X^2> of output mode a for each phase in ``phis``.

    Pipeline: |alpha, 0> -> U_S(g, 0) -> loss (T_a, T_b) -> U_P on a ->
    exp(i phi n_a) -> U_S(g, pi) -> homodyne on a.

    ``second_opa`` selects how the last squeezer is applied: ``"schrodinger"``
    evolves every loss branch through U_S(g, pi) in the Fock basis;
    ``"heisenberg"`` uses a_out = cosh(g) e^{i phi} a + sinh(g) b^dag and
    evaluates the needed ladder moments on the post-NCO branches; mode-b loss
    then enters as a rescaling of the b moments.  ``"auto"``
    picks the former without loss (one branch) and the latter with loss, where
    branch-by-branch squeezing costs minutes per point.
    """
    T_b = T_a if T_b is None else T_b
    if second_opa == "auto":
        second_opa = "schrodinger" if T_a == 1 and T_b == 1 else "heisenberg"
    if second_opa not in ("schrodinger", "heisenberg"):
        raise ValueError(f"unknown second_opa mode {second_opa!r}")
    phis = np.atleast_1d(np.asarray(phis, dtype=float))
    # the NCO weights the box edge by ~n^2, and the second OPA spreads whatever
    # the first one truncated, so the first stage needs a much tighter budget
    psi = first_opa_state(g, alpha, tol * 1e-3, max_dim)
    leak = psi.norm_leak
    da, db = psi.dims
    n = np.arange(da)
    u = scheme.diagonal(n).astype(float)
    # loss before the NCO lowers <u^2> by at most T_a^2, so this bounds the ensemble weight from below
    z_ref = float(np.sum(psi.marginal(0) * u**2)) * T_a**2

    z = 0.0
    n_inside = 0.0
    acc_a = np.zeros(phis.size, dtype=complex)
    acc_a2 = np.zeros(phis.size, dtype=complex)
    acc_n = np.zeros(phis.size)
    mom = np.zeros(8, dtype=complex)
    s2_leak = 0.0
    dims_out = (da, db)
    heis = second_opa == "heisenberg"
    # mode b meets nothing but its loss before detection, so in the Heisenberg
    # picture b -> sqrt(T_b) b + vacuum and its moments just rescale
    b_scale = math.sqrt(T_b) if heis else 1.0
    for branch in _loss_branches(psi, T_a, 1.0 if heis else T_b):
        amps = branch.amplitudes * u[:, None, None]
        w = float(np.vdot(amps, amps).real)
        if w == 0:
            continue
        z += w
        pa = np.sum(np.abs(amps) ** 2, axis=(1, 2))
        pb = np.sum(np.abs(amps) ** 2, axis=(0, 2))
        n_inside += float(pa @ np.arange(da) + b_scale**2 * (pb @ np.arange(db)))
        if heis:
            mom += _ladder_moments(amps)
            continue
        batch = amps[..., None] * np.exp(1j * np.outer(n, phis))[:, None, None, :]
        st = MultiModeState(batch)
        if dims_out != (da, db):
            st = fock.resize(st, list(dims_out) + list(batch.shape[2:]))
        out = squeeze_adaptive(st, (0, 1), g, math.pi, tol=tol / phis.size, ref=z_ref * phis.size, max_dim=max_dim)
        dims_out = out.dims[:2]
        s2_leak += out.norm_leak / phis.size
        arr = out.amplitudes
        a_arr = fock.lower(arr, 0)
        acc_a += np.einsum("abkp,abkp->p", arr.conj(), a_arr)
        acc_a2 += np.einsum("abkp,abkp->p", arr.conj(), fock.lower(a_arr, 0))
        acc_n += np.einsum("abkp,abkp->p", a_arr.conj(), a_arr).real
    if z <= 0:
        raise DegenerateStateError(f"NCO {scheme.label} annihilates the state")
    if heis:
        # order: a, b, a^2, b^2, n_a, n_b, ab, b^dag a
        mom *= np.array([1, b_scale, 1, b_scale**2, 1, b_scale**2, b_scale, b_scale])
        a_mean, a2_mean, n_mean = _heisenberg_output(mom / z, g, phis)
    else:
        a_mean, a2_mean, n_mean = acc_a / z, acc_a2 / z, acc_n / z
    mean_x = (a_mean + a_mean.conj()) / math.sqrt(2)
    mean_x2 = (a2_mean + a2_mean.conj()) / 2 + n_mean + 0.5
    residue = float(max(np.max(np.abs(mean_x.imag)), np.max(np.abs(mean_x2.imag))))
    return OraclePipelineResult(
        tuple(phis), mean_x.real, mean_x2.real, residue, z**-0.5, n_inside / z, leak + s2_leak / z, max(dims_out)
    )


def _ladder_moments(amps: np.ndarray) -> np.ndarray:
    """Unnormalized <a>, <b>, <a^2>, <b^2>, <n_a>, <n_b>, <a b>, <b^dag a> (annihilators only)."""
    la = fock.lower(amps, 0)
    lb = fock.lower(amps, 1)
    c = amps.conj()
    return np.array([
        np.sum(c * la),
        np.sum(c * lb),
        np.sum(c * fock.lower(la, 0)),
        np.sum(c * fock.lower(lb, 1)),
        np.vdot(la, la).real,
        np.vdot(lb, lb).real,
        np.sum(c * fock.lower(la, 1)),
        np.vdot(lb, la),
    ])


def _heisenberg_output(m: np.ndarray, g: float, phis: np.ndarray):
    """<a_out>, <a_out^2>, <a_out^dag a_out> for a_out = c e^{i phi} a + s b^dag."""
    a, b, a2, b2, na, nb, ab, bda = m
    c, s = math.cosh(g), math.sinh(g)
    e = np.exp(1j * phis)
    a_out = c * e * a + s * np.conj(b)
    a2_out = c * c * e * e * a2 + s * s * np.conj(b2) + 2 * c * s * e * bda
    n_out = c * c * na.real + s * s * (nb.real + 1) + 2 * c * s * (e * ab).real
    return a_out, a2_out, n_out


@dataclass(frozen=True)
class PostNcoMoments:
    norm_constant: float
    n_a: float
    n_b: float
    var_n_a: float
    norm_leak: float


def post_nco_moments(
    scheme: SchemeSpec, g: float, alpha: float, T: float = 1.0, tol: float = DEFAULT_TOL, max_dim: int = MAX_DIM
) -> PostNcoMoments:
    """Photon statistics of the (possibly lossy) state right after the NCO."""
    psi = first_opa_state(g, alpha, tol * 1e-3, max_dim)
    da, db = psi.dims
    u = scheme.diagonal(np.arange(da)).astype(float)
    z = 0.0
    pa = np.zeros(da)
    nb = 0.0
    # loss on mode b commutes with the NCO on a and only rescales <n_b> by T
    for branch in _loss_branches(psi, T, 1.0):
        amps = branch.amplitudes * u[:, None, None]
        p = np.abs(amps) ** 2
        z += float(p.sum())
        pa += p.sum(axis=(1, 2))
        nb += float(p.sum(axis=(0, 2)) @ np.arange(db))
    if z <= 1e-24:
        raise DegenerateStateError(f"NCO {scheme.label} annihilates the state")
    k = np.arange(da, dtype=float)
    m1 = float(pa @ k) / z
    m2 = float(pa @ k**2) / z
    return PostNcoMoments(z**-0.5, m1, T * nb / z, m2 - m1 * m1, psi.norm_leak)


def ideal_nco_state(
    scheme: SchemeSpec, g: float, alpha: float, tol: float = DEFAULT_TOL, max_dim: int = MAX_DIM
) -> tuple[MultiModeState, float]:
    """A_j U_P U_S1 |alpha, 0> and its normalization constant."""
    psi = first_opa_state(g, alpha, tol * 1e-3, max_dim)
    return fock.apply_nco(psi, 0, scheme)


# ------------------------------------------------ lossy normal-ordered moments


def _loss_reduced_diagonal(x: int, y: int, T: float, dim: int) -> np.ndarray:
    """R = sum_l A_l^dag a^dag^x a^y A_l for the loss Kraus family A_l.

    R maps |n> to |n + x - y> only, so it is returned as the vector of its
    nonzero entries indexed by the source level n.  With
    <n-l|A_l|n> = sqrt(C(n, l) (1-T)^l T^(n-l)):

        R(n) = sum_l k_l(n) k_l(n + x - y) <n-l+x-y| a^dag^x a^y |n-l>
    """
    n = np.arange(dim)
    out = np.zeros(dim)
    d = x - y
    for l in range(dim):
        src = n[(n >= l + y) & (n + d < dim)]
        if src.size == 0:
            continue
        m = src - l
        # <m - y + x| a^dag^x a^y |m>
        log_op = 0.5 * (2 * gammaln(m + 1) - 2 * gammaln(m - y + 1) + gammaln(m - y + x + 1) - gammaln(m + 1))
        if T == 1.0:
            if l:
                break
            log_k = 0.0
        else:
            tgt = src + d
            log_k = 0.5 * (
                gammaln(src + 1) - gammaln(src - l + 1) + gammaln(tgt + 1) - gammaln(tgt - l + 1)
                - 2 * gammaln(l + 1) + 2 * l * math.log1p(-T)
                + (src - l + tgt - l) * math.log(T)
            )
        out[src] += np.exp(log_op + log_k)
    return out


def lossy_normal_ordered(psi: MultiModeState, keys, T_a: float, T_b: float | None = None) -> dict:
    """<a^dag^x1 a^y1 b^dag^x2 b^y2> after independent loss on both modes of ``psi``.

    Each single-mode operator is pulled back through the loss Kraus sum in the
    Fock basis, then evaluated on the pure two-mode state.
    """
    T_b = T_a if T_b is None else T_b
    amps = psi.amplitudes
    da, db = amps.shape
    norm = float(np.vdot(amps, amps).real)
    cache: dict = {}

    def reduced(x, y, T, dim):
        key = (x, y, T, dim)
        if key not in cache:
            cache[key] = _loss_reduced_diagonal(x, y, T, dim)
        return cache[key]

    out = {}
    for key in keys:
        x1, y1, x2, y2 = key
        ra = reduced(x1, y1, T_a, da)
        rb = reduced(x2, y2, T_b, db)
        d1, d2 = x1 - y1, x2 - y2
        # sum over source levels n, m of conj(psi[n+d1, m+d2]) R_a(n) R_b(m) psi[n, m]
        sa = slice(max(0, -d1), min(da, da - d1))
        sb = slice(max(0, -d2), min(db, db - d2))
        src = amps[sa, sb]
        tgt = amps[sa.start + d1 : sa.stop + d1, sb.start + d2 : sb.stop + d2]
        val = np.sum(tgt.conj() * (ra[sa, None] * rb[None, sb]) * src)
        out[tuple(key)] = complex(val / norm)
    return out
