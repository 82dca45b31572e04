"""Truncated Fock-space simulator used as the brute-force oracle.

States are dense complex tensors with one axis per mode.  Every operation is
pure: it returns a new :class:`MultiModeState` and never mutates its input.

Truncation is tracked rather than ignored.  Two-mode unitaries are evaluated
on a temporarily padded box; whatever probability lands outside the caller's
box is dropped and added to ``norm_leak``.  Once the accumulated leak exceeds
``leak_budget`` a :class:`TruncationError` is raised.

Two-mode squeezing and beam splitting each conserve one integer combination of
the photon numbers (difference and sum respectively), so their truncated
generators are block diagonal.  The exponentials are taken block by block,
which keeps memory proportional to the state and never forms an operator on the
full multi-mode space.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import NamedTuple, Sequence

import numpy as np
import scipy.linalg
from scipy.special import gammaln

from .errors import DegenerateStateError, DomainError, NumericError, TruncationError
from .model import SchemeSpec

DEFAULT_LEAK_BUDGET = 1e-6
DEFAULT_PAD = 8


@dataclass(frozen=True)
class FockCutoff:
    """Largest photon number kept per mode (inclusive)."""

    per_mode_max: int

    def __post_init__(self):
        if int(self.per_mode_max) != self.per_mode_max or self.per_mode_max < 1:
            raise DomainError("per_mode_max must be an integer >= 1")

    @property
    def dim(self) -> int:
        return self.per_mode_max + 1


@dataclass(frozen=True, eq=False)
class MultiModeState:
    """Amplitudes over a truncated multi-mode Fock lattice.

    Axis ``k`` of ``amplitudes`` indexes the photon number of mode ``k``.
    Modes need not share a dimension (ancilla registers are often smaller).
    """

    amplitudes: np.ndarray
    norm_leak: float = 0.0
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex)
        if amps.ndim < 1 or amps.ndim > 6:
            raise DomainError("a state needs between 1 and 6 mode axes")
        if not np.all(np.isfinite(amps)):
            raise NumericError("state amplitudes are not finite")
        object.__setattr__(self, "amplitudes", amps)

    @property
    def num_modes(self) -> int:
        return self.amplitudes.ndim

    @property
    def dims(self) -> tuple[int, ...]:
        return self.amplitudes.shape

    @property
    def cutoff(self) -> FockCutoff:
        return FockCutoff(max(max(self.dims) - 1, 1))

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes.ravel()))

    def normalized(self) -> "MultiModeState":
        nrm = self.norm()
        if nrm == 0:
            raise DegenerateStateError("cannot normalize a zero state")
        return self._new(self.amplitudes / nrm)

    def marginal(self, mode: int) -> np.ndarray:
        """Photon-number distribution of one mode (not renormalized)."""
        probs = np.abs(self.amplitudes) ** 2
        axes = tuple(k for k in range(self.num_modes) if k != mode)
        return probs.sum(axis=axes)

    def overlap(self, other: "MultiModeState") -> complex:
        a, b = _common_box(self.amplitudes, other.amplitudes)
        return complex(np.vdot(a, b))

    def fidelity(self, other: "MultiModeState") -> float:
        """|<a|b>| / (|a||b|), which ignores global phase."""
        return abs(self.overlap(other)) / (self.norm() * other.norm())

    def _new(self, amps, extra_leak=0.0) -> "MultiModeState":
        return MultiModeState(amps, self.norm_leak + extra_leak, dict(self.meta))


def _common_box(a: np.ndarray, b: np.ndarray):
    shape = tuple(max(x, y) for x, y in zip(a.shape, b.shape))
    return _pad_to(a, shape), _pad_to(b, shape)


def _pad_to(arr: np.ndarray, shape) -> np.ndarray:
    if arr.shape == tuple(shape):
        return arr
    out = np.zeros(shape, dtype=arr.dtype)
    out[tuple(slice(0, s) for s in arr.shape)] = arr
    return out


def _check_leak(state: MultiModeState, budget: float) -> MultiModeState:
    if state.norm_leak > budget:
        raise TruncationError(
            f"truncation leak {state.norm_leak:.3e} exceeds budget {budget:.1e}; raise the cutoff"
        )
    return state


# --------------------------------------------------------------------------- states


def vacuum(num_modes: int, cutoff: FockCutoff) -> MultiModeState:
    amps = np.zeros((cutoff.dim,) * num_modes, dtype=complex)
    amps[(0,) * num_modes] = 1.0
    return MultiModeState(amps)


def fock_state(ns: Sequence[int], cutoff: FockCutoff) -> MultiModeState:
    if any(n > cutoff.per_mode_max or n < 0 for n in ns):
        raise DomainError("occupation outside the cutoff")
    amps = np.zeros((cutoff.dim,) * len(ns), dtype=complex)
    amps[tuple(ns)] = 1.0
    return MultiModeState(amps)


def coherent_amplitudes(alpha: float, dim: int) -> np.ndarray:
    n = np.arange(dim)
    if alpha == 0:
        return (n == 0).astype(complex)
    logc = -0.5 * alpha * alpha + n * math.log(alpha) - 0.5 * gammaln(n + 1)
    return np.exp(logc).astype(complex)


def coherent_state(alpha: float, cutoff: FockCutoff, tail_tol: float = 1e-12) -> MultiModeState:
    """Single-mode coherent state with real amplitude ``alpha``.

    The Poisson tail beyond the cutoff is recorded as ``norm_leak``.
    """
    if isinstance(alpha, complex) or np.iscomplexobj(alpha):
        raise DomainError("alpha must be real and nonnegative")
    if alpha < 0:
        raise DomainError("alpha must be nonnegative")
    amps = coherent_amplitudes(alpha, cutoff.dim)
    tail = max(0.0, 1.0 - float(np.sum(np.abs(amps) ** 2)))
    if tail > tail_tol:
        raise TruncationError(
            f"coherent state alpha={alpha} loses {tail:.2e} beyond n={cutoff.per_mode_max}"
        )
    return MultiModeState(amps, tail)


def tensor(*states: MultiModeState) -> MultiModeState:
    amps = states[0].amplitudes
    kept = 1.0 - states[0].norm_leak
    for st in states[1:]:
        amps = np.multiply.outer(amps, st.amplitudes)
        kept *= 1.0 - st.norm_leak
    return MultiModeState(amps, 1.0 - kept)


def attach_vacuum_ancilla(state: MultiModeState, dim: int | None = None) -> MultiModeState:
    """Append one mode prepared in vacuum (dimension defaults to the state's cutoff)."""
    dim = dim or state.cutoff.dim
    anc = np.zeros(dim, dtype=complex)
    anc[0] = 1.0
    return state._new(np.multiply.outer(state.amplitudes, anc))


def resize(state: MultiModeState, dims: Sequence[int | None]) -> MultiModeState:
    """Grow or shrink per-mode dimensions; dropped probability counts as leak."""
    shape = tuple(d if d is not None else s for d, s in zip(dims, state.dims))
    kept = state.amplitudes[tuple(slice(0, min(d, s)) for d, s in zip(shape, state.dims))]
    lost = state.norm() ** 2 - float(np.sum(np.abs(kept) ** 2))
    return state._new(_pad_to(kept, shape), max(lost, 0.0))


def trim(state: MultiModeState, tol: float = 1e-15) -> MultiModeState:
    """Shrink each mode to the smallest dimension whose tail mass is below ``tol``."""
    dims = []
    for k in range(state.num_modes):
        p = state.marginal(k)
        tail = np.cumsum(p[::-1])[::-1]
        keep = np.nonzero(tail > tol)[0]
        dims.append(int(keep.max()) + 2 if keep.size else 1)
    dims = [min(d, s) for d, s in zip(dims, state.dims)]
    return resize(state, dims)


# ----------------------------------------------------------------- ladder helpers


def _moveaxis_front(arr, axes):
    return np.moveaxis(arr, axes, tuple(range(len(axes))))


def lower(amps: np.ndarray, axis: int) -> np.ndarray:
    """Apply the annihilation operator along ``axis`` (shape preserved)."""
    arr = np.moveaxis(amps, axis, 0)
    out = np.zeros_like(arr)
    n = np.sqrt(np.arange(1, arr.shape[0]))
    out[:-1] = arr[1:] * n.reshape((-1,) + (1,) * (arr.ndim - 1))
    return np.moveaxis(out, 0, axis)


def raise_(amps: np.ndarray, axis: int) -> np.ndarray:
    """Apply the creation operator along ``axis``; the top level is truncated."""
    arr = np.moveaxis(amps, axis, 0)
    out = np.zeros_like(arr)
    n = np.sqrt(np.arange(1, arr.shape[0]))
    out[1:] = arr[:-1] * n.reshape((-1,) + (1,) * (arr.ndim - 1))
    return np.moveaxis(out, 0, axis)


def number_diagonal(amps: np.ndarray, axis: int, values: np.ndarray) -> np.ndarray:
    """Multiply by a function of the photon number of one mode."""
    shape = [1] * amps.ndim
    shape[axis] = amps.shape[axis]
    return amps * np.asarray(values).reshape(shape)


# ------------------------------------------------------------- block unitaries


@lru_cache(maxsize=256)
def _squeeze_blocks(da: int, db: int, xi_re: float, xi_im: float):
    """Sector exponentials of K = conj(xi) a b - xi a^dag b^dag on a (da, db) box.

    Sectors are labelled by d = n_a - n_b.  Returns a tuple of
    (na_indices, nb_indices, unitary) triples.
    """
    xi = complex(xi_re, xi_im)
    blocks = []
    for d in range(-(db - 1), da):
        nb = np.arange(max(0, -d), db)
        na = nb + d
        ok = na < da
        na, nb = na[ok], nb[ok]
        m = na.size
        if m == 0:
            continue
        K = np.zeros((m, m), dtype=complex)
        if m > 1:
            # <na-1, nb-1| a b |na, nb> = sqrt(na nb)
            amp = np.sqrt(na[1:] * nb[1:].astype(float))
            K[np.arange(m - 1), np.arange(1, m)] = np.conj(xi) * amp
            K[np.arange(1, m), np.arange(m - 1)] = -xi * amp
        blocks.append((na, nb, scipy.linalg.expm(K)))
    return tuple(blocks)


@lru_cache(maxsize=256)
def _beam_splitter_blocks(da: int, dv: int, theta: float):
    """Sector exponentials of theta (a^dag v - a v^dag), sectors by n_a + n_v."""
    blocks = []
    for total in range(da + dv - 1):
        na = np.arange(min(total, da - 1), -1, -1)
        nv = total - na
        ok = nv < dv
        na, nv = na[ok], nv[ok]
        m = na.size
        if m == 0:
            continue
        K = np.zeros((m, m))
        if m > 1:
            # neighbours: (na, nv) -> (na+1, nv-1) via a^dag v
            amp = np.sqrt((na[1:] + 1.0) * nv[1:])
            K[np.arange(m - 1), np.arange(1, m)] = theta * amp
            K[np.arange(1, m), np.arange(m - 1)] = -theta * amp
        blocks.append((na, nv, scipy.linalg.expm(K)))
    return tuple(blocks)


def _sector_order(blocks, db: int):
    """Flat (a, b) indices grouped sector by sector, with block offsets."""
    perm = np.concatenate([ia * db + ib for ia, ib, _ in blocks])
    offsets = np.cumsum([0] + [len(ia) for ia, _, _ in blocks])
    return perm, offsets


def _apply_blocks(amps: np.ndarray, modes, blocks) -> np.ndarray:
    arr = _moveaxis_front(amps, modes)
    da, db = arr.shape[:2]
    rest = arr.shape[2:]
    flat = arr.reshape(da * db, -1)
    perm, offsets = _sector_order(blocks, db)
    # one gather into sector order, contiguous matmuls, one scatter back
    grouped = flat[perm]
    for (lo, hi), (_, _, U) in zip(zip(offsets[:-1], offsets[1:]), blocks):
        grouped[lo:hi] = U @ grouped[lo:hi]
    out = np.zeros_like(flat)
    out[perm] = grouped
    out = out.reshape((da, db) + rest)
    return np.moveaxis(out, tuple(range(2)), modes)


def _mass_outside(arr: np.ndarray, box) -> float:
    """Probability outside ``box``, summed directly to avoid cancellation."""
    outside = arr.copy()
    outside[box] = 0
    return float(np.sum(np.abs(outside) ** 2))


def _padded_two_mode(state, modes, pad, blocks_fn, leak_budget):
    i, j = modes
    if i == j:
        raise DomainError("two-mode operation needs two distinct modes")
    dims = list(state.dims)
    big = list(dims)
    big[i] += pad
    big[j] += pad
    amps = _pad_to(state.amplitudes, big)
    out = _apply_blocks(amps, (i, j), blocks_fn(big[i], big[j]))
    if not np.all(np.isfinite(out)):
        raise NumericError("non-finite amplitudes after two-mode unitary")
    box = tuple(slice(0, d) for d in dims)
    kept = np.ascontiguousarray(out[box])
    return _check_leak(state._new(kept, _mass_outside(out, box)), leak_budget)


def two_mode_squeeze(
    state: MultiModeState,
    modes: tuple[int, int],
    g: float,
    theta: float = 0.0,
    pad: int = DEFAULT_PAD,
    leak_budget: float = DEFAULT_LEAK_BUDGET,
) -> MultiModeState:
    """Apply exp(conj(xi) a b - xi a^dag b^dag) with xi = g exp(i theta)."""
    if g < 0:
        raise DomainError("gain g must be nonnegative")
    if g == 0:
        return state._new(state.amplitudes.copy())
    xi = g * np.exp(1j * theta)
    fn = lambda da, db: _squeeze_blocks(da, db, float(xi.real), float(xi.imag))  # noqa: E731
    return _padded_two_mode(state, modes, pad, fn, leak_budget)


def beam_splitter(
    state: MultiModeState,
    modes: tuple[int, int],
    T: float,
    pad: int = 0,
    leak_budget: float = DEFAULT_LEAK_BUDGET,
) -> MultiModeState:
    """Fictitious beam splitter exp[theta (a^dag v - a v^dag)] with T = cos^2 theta."""
    if not 0.0 < T <= 1.0:
        raise DomainError("beam-splitter transmissivity must lie in (0, 1]")
    if T == 1.0:
        return state._new(state.amplitudes.copy())
    theta = math.acos(math.sqrt(T))
    fn = lambda da, dv: _beam_splitter_blocks(da, dv, theta)  # noqa: E731
    return _padded_two_mode(state, modes, pad, fn, leak_budget)


def phase_shift(state: MultiModeState, mode: int, phi: float) -> MultiModeState:
    """Apply exp(i phi n) to one mode."""
    n = np.arange(state.dims[mode])
    return state._new(number_diagonal(state.amplitudes, mode, np.exp(1j * phi * n)))


def apply_nco(state: MultiModeState, mode: int, scheme: SchemeSpec) -> tuple[MultiModeState, float]:
    """Apply s a a^dag + t a^dag a to ``mode`` and renormalize.

    Returns the normalized state and the normalization constant
    ``1 / || U_P psi ||``.  The operator is diagonal, so this is exact on the
    truncated space.
    """
    n = np.arange(state.dims[mode])
    out = number_diagonal(state.amplitudes, mode, scheme.diagonal(n))
    nrm = float(np.linalg.norm(out.ravel()))
    ref = state.norm()
    if ref == 0 or nrm <= 1e-12 * ref:
        raise DegenerateStateError(f"NCO {scheme.label} annihilates the state")
    return state._new(out / nrm), 1.0 / nrm


# --------------------------------------------------------------- displacement


def displacement_matrix(beta: complex, dim_out: int, dim_in: int | None = None) -> np.ndarray:
    """Exact matrix elements <m|D(beta)|n> for m < dim_out, n < dim_in.

    Uses the normalized Laguerre three-term recurrence, which stays accurate
    to ~1e-15 even for |beta| ~ 15.
    """
    dim_in = dim_in or dim_out
    return displacement_matrices(np.array([beta]), max(dim_out, dim_in))[0, :dim_out, :dim_in]


def displacement_matrices(betas: np.ndarray, dim: int) -> np.ndarray:
    """Stack of <m|D(beta)|n> (m, n < dim) for every entry of ``betas``."""
    betas = np.asarray(betas, dtype=complex).ravel()
    r = np.abs(betas)
    x = r * r
    phase = np.where(r > 0, betas / np.where(r > 0, r, 1.0), 1.0)
    with np.errstate(divide="ignore"):
        logr = np.log(r)
    out = np.zeros((betas.size, dim, dim), dtype=complex)
    for k in range(dim):
        # f_n = sqrt(n!/(n+k)!) |beta|^k e^{-x/2} L_n^{(k)}(x),  element <n+k|D|n>
        nmax = dim - k
        f = np.empty((betas.size, nmax))
        if k == 0:
            f[:, 0] = np.exp(-x / 2)
        else:
            with np.errstate(invalid="ignore"):
                f[:, 0] = np.where(r > 0, np.exp(k * logr - x / 2 - 0.5 * gammaln(k + 1)), 0.0)
        if nmax > 1:
            f[:, 1] = f[:, 0] * (1 + k - x) / math.sqrt(k + 1)
        for n in range(2, nmax):
            c1 = math.sqrt(n / (n + k)) / n
            c2 = (n - 1 + k) * math.sqrt(n * (n - 1) / ((n + k) * (n + k - 1))) / n
            f[:, n] = (2 * n - 1 + k - x) * f[:, n - 1] * c1 - c2 * f[:, n - 2]
        idx = np.arange(nmax)
        out[:, idx + k, idx] = f * (phase**k)[:, None]
        if k:
            out[:, idx, idx + k] = f * ((-np.conj(phase)) ** k)[:, None]
    return out


def displace(
    state: MultiModeState,
    mode: int,
    beta: complex,
    pad: int = DEFAULT_PAD,
    leak_budget: float = DEFAULT_LEAK_BUDGET,
) -> MultiModeState:
    """Apply D(beta) to one mode using exact matrix elements."""
    dim = state.dims[mode]
    D = displacement_matrix(beta, dim + pad, dim)
    arr = np.moveaxis(state.amplitudes, mode, 0)
    out = np.tensordot(D, arr, axes=(1, 0))
    kept = out[:dim]
    lost = float(np.sum(np.abs(out[dim:]) ** 2))
    res = state._new(np.ascontiguousarray(np.moveaxis(kept, 0, mode)), lost)
    return _check_leak(res, leak_budget)


# ------------------------------------------------------------- purification


def kraus_purify(state: MultiModeState, mode: int, kraus_ops: Sequence[np.ndarray]) -> MultiModeState:
    """Purify a Kraus channel on ``mode`` into a new trailing register axis.

    Branch ``l`` of the register holds ``K_l psi``.  Expectation values of
    system operators on the result equal those of the channel output.
    """
    arr = np.moveaxis(state.amplitudes, mode, 0)
    branches = [np.moveaxis(np.tensordot(K, arr, axes=(1, 0)), 0, mode) for K in kraus_ops]
    return state._new(np.stack(branches, axis=-1))


def compress_register(
    state: MultiModeState, system_modes: Sequence[int], tol: float = 1e-16
) -> MultiModeState:
    """Merge all non-system modes into one register via a Schmidt decomposition.

    Expectations of operators on ``system_modes`` are unchanged; discarded
    Schmidt weight (below ``tol`` each) is added to the leak.
    """
    system_modes = list(system_modes)
    others = [k for k in range(state.num_modes) if k not in system_modes]
    if not others:
        return state
    arr = np.transpose(state.amplitudes, system_modes + others)
    sys_shape = arr.shape[: len(system_modes)]
    mat = arr.reshape(int(np.prod(sys_shape)), -1)
    u, s, _ = np.linalg.svd(mat, full_matrices=False)
    keep = s * s > tol
    if not np.any(keep):
        raise DegenerateStateError("state has no weight")
    lost = float(np.sum(s[~keep] ** 2))
    amps = (u[:, keep] * s[keep]).reshape(sys_shape + (int(keep.sum()),))
    return state._new(amps, lost)


# --------------------------------------------------------------- expectations


class QuadratureMoments(NamedTuple):
    mean: float
    mean_sq: float
    imag_residue: float


def ladder_expectations(state: MultiModeState, mode: int) -> tuple[complex, complex, float]:
    """<a>, <a^2>, <n> for one mode, normalized by the state norm."""
    psi = state.amplitudes
    norm2 = float(np.vdot(psi, psi).real)
    if norm2 == 0:
        raise DegenerateStateError("zero state")
    a_psi = lower(psi, mode)
    a = np.vdot(psi, a_psi) / norm2
    a2 = np.vdot(psi, lower(a_psi, mode)) / norm2
    n = float(np.vdot(a_psi, a_psi).real) / norm2
    return complex(a), complex(a2), n


def expectation_quadrature(state: MultiModeState, mode: int) -> QuadratureMoments:
    """<X> and <X^2> for X = (a + a^dag)/sqrt(2) by sparse ladder application.

    Only annihilators are applied (creation would clip the top Fock level):
    <X> = 2 Re<a> / sqrt(2) and <X^2> = Re<a^2> + <n> + 1/2.
    """
    psi = state.amplitudes
    norm2 = float(np.vdot(psi, psi).real)
    if norm2 == 0:
        raise DegenerateStateError("zero state")
    a_psi = lower(psi, mode)
    a = np.vdot(psi, a_psi) / norm2
    adag = np.vdot(a_psi, psi) / norm2
    a2 = np.vdot(psi, lower(a_psi, mode)) / norm2
    adag2 = np.conj(a2)
    n = np.vdot(a_psi, a_psi) / norm2
    mean = (a + adag) / math.sqrt(2)
    mean_sq = (a2 + adag2) / 2 + n + 0.5
    residue = max(abs(mean.imag), abs(mean_sq.imag))
    return QuadratureMoments(float(mean.real), float(mean_sq.real), float(residue))


def number_moments(state: MultiModeState, mode: int, k: int) -> float:
    """<n^k> of one mode for k in 1..4."""
    if k not in (1, 2, 3, 4):
        raise DomainError("moment order must be 1..4")
    p = state.marginal(mode)
    n = np.arange(p.size, dtype=float)
    return float(np.dot(p, n**k) / p.sum())


def expectation_normal_ordered(state: MultiModeState, powers: Sequence[tuple[int, int]]) -> complex:
    """<prod_k a_k^dag^{p_k} a_k^{q_k}> with powers[k] = (p_k, q_k) per mode."""
    psi = state.amplitudes
    left = psi
    right = psi
    for mode, (p, q) in enumerate(powers):
        for _ in range(p):
            left = lower(left, mode)
        for _ in range(q):
            right = lower(right, mode)
    return complex(np.vdot(left, right) / np.vdot(psi, psi).real)
