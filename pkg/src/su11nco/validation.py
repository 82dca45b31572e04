"""Acceptance checks, shared by the ``validate`` subcommand and the test suite.

Every check returns :class:`CheckResult` records; nothing here raises on a
failed comparison, so a report always covers the whole matrix.
"""

from __future__ import annotations

import math
import subprocess
import sys
import tempfile
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.optimize import brentq

from . import oracle, qfi, sensitivity, wigner
from .model import PA_THEN_PS, PS_THEN_PA, STANDARD, InterferometerParams, SchemeSpec
from .moments import moment_table

# reference negative volumes at alpha = 1: g -> (PS-then-PA, PA-then-PS)
REFERENCE_VOLUMES = {0.6: (0.034, 0.009), 0.8: (0.033, 0.014), 1.0: (0.031, 0.017), 1.2: (0.030, 0.020)}
VOLUME_ATOL = 0.003


@dataclass(frozen=True)
class CheckResult:
    criterion: str
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] {self.criterion} {self.name}: {self.detail} ({self.seconds:.1f}s)"


def _timed(criterion, name, fn):
    t0 = time.perf_counter()
    passed, detail = fn()
    return CheckResult(criterion, name, bool(passed), detail, time.perf_counter() - t0)


def _rel(a, b):
    return abs(a - b) / max(abs(b), 1e-300)


# ---------------------------------------------------------------- 1: Wigner


def check_wigner_volumes(gs=(0.6, 0.8, 1.0, 1.2), budget_s: float = 900.0) -> CheckResult:
    def run():
        t0 = time.perf_counter()
        parts, ok = [], True
        for g in gs:
            for scheme, ref in zip((PS_THEN_PA, PA_THEN_PS), REFERENCE_VOLUMES[g]):
                v = wigner.nco_negative_volume(scheme, g, 1.0).volume
                good = abs(v - ref) <= VOLUME_ATOL
                ok &= good
                parts.append(f"g={g} {scheme.label} V={v:.4f} vs {ref:.3f}{'' if good else ' X'}")
        elapsed = time.perf_counter() - t0
        ok &= elapsed <= budget_s
        return ok, "; ".join(parts)

    return _timed("1", "wigner-negative-volume", run)


# --------------------------------------------------------------- 2: moments


def moment_keys_used() -> list[tuple]:
    """Every P-moment key that enters the homodyne, photon-number and QFI expressions."""
    keys = set()
    for g in (0.5, 1.0):
        for preset in ("pa-then-ps", "ps-then-pa"):
            exp = sensitivity.printed_expansion(preset, g)
            keys.update(k for _, _, k in exp.mean_terms + exp.sq_terms)
            keys.update(k for _, k in exp.norm_terms)
        for scheme in (STANDARD, PA_THEN_PS, PS_THEN_PA):
            exp = sensitivity.generic_expansion(scheme, g)
            keys.update(k for _, _, k in exp.mean_terms + exp.sq_terms)
            keys.update(k for _, k in exp.norm_terms)
            keys.update(k for _, k in sensitivity.generic_n_terms(scheme))
    for terms in sensitivity._PRINTED_N.values():
        keys.update(k for _, k in terms)
    for second, first in qfi._PRINTED_F.values():
        keys.update(k for _, k in second + first)
    return sorted(keys)


def check_moment_equivalence(
    gs=(0.0, 0.5, 1.0, 1.2), Ts=(0.5, 0.7, 1.0), alphas=(0.0, 0.5, 1.0, 2.0), rtol: float = 1e-8, budget_s: float = 120.0
) -> CheckResult:
    keys = moment_keys_used()

    def run():
        t0 = time.perf_counter()
        worst, where = 0.0, None
        for g in gs:
            for alpha in alphas:
                psi = oracle.first_opa_state(g, alpha, 1e-16)
                for T in Ts:
                    tab = moment_table(g, T, alpha)
                    diag = oracle.lossy_normal_ordered(
                        psi, {(x1, x1, x2, x2) for x1, _, x2, _ in keys} | {(y1, y1, y2, y2) for _, y1, _, y2 in keys}, T
                    )
                    got = oracle.lossy_normal_ordered(psi, keys, T)
                    for k in keys:
                        x1, y1, x2, y2 = k
                        # Cauchy-Schwarz bound sets the scale for moments that vanish
                        scale = math.sqrt(abs(diag[(x1, x1, x2, x2)]) * abs(diag[(y1, y1, y2, y2)]))
                        err = abs(got[k] - tab[k]) / max(abs(tab[k]), scale, 1e-300)
                        if err > worst:
                            worst, where = err, (g, T, alpha, k)
        elapsed = time.perf_counter() - t0
        detail = f"{len(keys)} keys x {len(gs) * len(Ts) * len(alphas)} points, worst rel {worst:.2e} at {where}"
        return worst <= rtol and elapsed < budget_s, detail

    return _timed("2", "moment-equivalence", run)


# ----------------------------------------------------------- 3: sensitivity


def random_points(n: int, seed: int = 2024):
    rng = np.random.default_rng(seed)
    schemes = [STANDARD, PA_THEN_PS, PS_THEN_PA]
    out = []
    for i in range(n):
        k = rng.integers(0, 4)
        scheme = schemes[k] if k < 3 else SchemeSpec.superposition(round(float(rng.uniform(0.05, 0.95)), 4))
        T = float(rng.choice([1.0, 0.7, 0.5]))
        params = InterferometerParams(
            g=float(rng.uniform(0.2, 1.2)), alpha=float(rng.uniform(0.2, 2.0)), phi=float(rng.uniform(0.1, 1.4)), T=T
        )
        out.append((scheme, params))
    return out


def check_sensitivity_equivalence(n: int = 20, seed: int = 2024, budget_s: float = 300.0) -> CheckResult:
    def run():
        t0 = time.perf_counter()
        ok, worst = True, {1.0: 0.0, "lossy": 0.0}
        for scheme, p in random_points(n, seed):
            a = sensitivity.phase_sensitivity(scheme, p).delta_phi
            o = sensitivity.phase_sensitivity(scheme, p, backend="oracle").delta_phi
            err = _rel(o, a)
            bucket = 1.0 if p.T == 1 else "lossy"
            worst[bucket] = max(worst[bucket], err)
            ok &= err <= (1e-6 if p.T == 1 else 1e-5)
        elapsed = time.perf_counter() - t0
        detail = f"{n} points, worst rel T=1 {worst[1.0]:.2e}, T<1 {worst['lossy']:.2e}"
        return ok and elapsed < budget_s, detail

    return _timed("3", "sensitivity-equivalence", run)


# ------------------------------------------------------------- 4: lossy QFI


def check_lossy_qfi(etas=(0.3, 0.6, 0.9), lams=(0.0, -1.0, -0.5, 0.5), rtol: float = 1e-6) -> CheckResult:
    def run():
        worst = 0.0
        count = 0
        for scheme in (PA_THEN_PS, PS_THEN_PA):
            for eta in etas:
                for lam in lams:
                    a = qfi.cq_of_lambda(scheme, eta, 1.0, 1.0, lam)
                    o = qfi.cq_oracle(scheme, eta, 1.0, 1.0, lam)
                    worst = max(worst, _rel(a, o))
                    count += 1
        return worst <= rtol, f"{count} points, worst rel {worst:.2e}"

    return _timed("4", "lossy-qfi-formula", run)


def check_u_quadratic_fit(eta: float = 0.6, rtol: float = 1e-6) -> CheckResult:
    """Quadratic fit of the closed-form C_Q(lambda) against the Kraus oracle's."""

    def run():
        worst = 0.0
        for scheme in (PA_THEN_PS, PS_THEN_PA):
            qa = qfi.cq_quadratic(scheme, eta, 1.0, 1.0)
            qo = qfi.cq_quadratic(scheme, eta, 1.0, 1.0, backend="oracle")
            scale = max(abs(c) for c in qo)
            worst = max(worst, max(abs(x - y) for x, y in zip(qa, qo)) / scale)
            # a quadratic is reproduced exactly off the fitting nodes
            lam = 0.37
            fit = qa[0] * lam**2 + qa[1] * lam + qa[2]
            worst = max(worst, _rel(qfi.cq_of_lambda(scheme, eta, 1.0, 1.0, lam), fit))
        return worst <= rtol, f"worst rel {worst:.2e}"

    return _timed("4", "u-coefficient-quadratic-fit", run)


# ---------------------------------------------------------------- 5: limits


def check_limits() -> CheckResult:
    def run():
        spread = agree = 0.0
        for scheme in (PA_THEN_PS, PS_THEN_PA):
            vals = np.array([qfi.cq_of_lambda(scheme, 1.0, 1.0, 1.0, lam) for lam in np.linspace(-2, 1, 7)])
            spread = max(spread, float(np.ptp(vals) / abs(vals.mean())))
            agree = max(agree, _rel(float(vals[0]), qfi.qfi_ideal(scheme, 1.0, 1.0).F))
        kraus = max(
            qfi.kraus_completeness_error(qfi.kraus_operators(eta, 0.6, lam, dim))
            for eta in (0.0, 0.3, 0.9, 1.0)
            for lam in (0.0, -1.0, 0.5)
            for dim in (5, 40, 120)
        )
        ok = spread < 1e-10 and agree <= 1e-8 and kraus <= 1e-10
        return ok, f"lambda spread {spread:.1e}, vs ideal F {agree:.1e}, Kraus completeness {kraus:.1e}"

    return _timed("5", "limits", run)


# ---------------------------------------------------------------- 6: trends

_OP = InterferometerParams(g=1.0, alpha=1.0, phi=0.6, T=1.0)


def _dphi(scheme, params):
    return sensitivity.phase_sensitivity(scheme, params).delta_phi


def check_trend_ordering() -> CheckResult:
    def run():
        d = [_dphi(s, _OP) for s in (PS_THEN_PA, PA_THEN_PS, STANDARD)]
        return d[0] < d[1] < d[2], "PS-then-PA {:.5f} < PA-then-PS {:.5f} < standard {:.5f}".format(*d)

    return _timed("6a", "ordering", run)


def check_trend_superposition(ts=(0.25, 0.5, 0.75)) -> CheckResult:
    def run():
        lo_hi = sorted((_dphi(PA_THEN_PS, _OP), _dphi(PS_THEN_PA, _OP)))
        vals = [_dphi(SchemeSpec.superposition(t), _OP) for t in ts]
        ok = all(lo_hi[0] <= v <= lo_hi[1] for v in vals)
        return ok, f"[{lo_hi[0]:.5f}, {lo_hi[1]:.5f}] contains " + ", ".join(f"{v:.5f}" for v in vals)

    return _timed("6b", "superposition-between", run)


TREND_GRIDS = {"g": (0.2, 1.5), "alpha": (0.1, 2.5), "T": (0.3, 1.0)}


def check_trend_monotone(variable: str, points: int = 20) -> CheckResult:
    def run():
        grid = np.linspace(*TREND_GRIDS[variable], points)
        parts, ok = [], True
        for scheme in (STANDARD, PA_THEN_PS, PS_THEN_PA):
            d = np.array([_dphi(scheme, _OP.with_(**{variable: float(v)})) for v in grid])
            mono = bool(np.all(np.diff(d) < 0))
            ok &= mono
            if mono:
                parts.append(f"{scheme.label} decreasing")
            else:
                i = int(np.argmin(d))
                parts.append(f"{scheme.label} not monotone (minimum {d[i]:.4f} at {variable}={grid[i]:.3f})")
        return ok, f"{variable} in [{grid[0]}, {grid[-1]}]: " + "; ".join(parts)

    return _timed("6c", f"monotone-in-{variable}", run)


def check_trend_ideal_qfi() -> CheckResult:
    def run():
        f1 = qfi.qfi_ideal(PA_THEN_PS, 1.0, 1.0).F
        f2 = qfi.qfi_ideal(PS_THEN_PA, 1.0, 1.0).F
        return f1 >= f2, f"F1 {f1:.4f} >= F2 {f2:.4f}"

    return _timed("6d", "ideal-qfi-order", run)


def fl_difference(eta: float) -> float:
    """F_L(PA-then-PS) - F_L(PS-then-PA) at g = 1, alpha = 1."""
    return qfi.qfi_lossy(PA_THEN_PS, eta, 1.0, 1.0).F - qfi.qfi_lossy(PS_THEN_PA, eta, 1.0, 1.0).F


def check_trend_lossy_qfi() -> CheckResult:
    def run():
        low = np.linspace(0.05, 0.8, 16)
        bad = [float(e) for e in low if fl_difference(float(e)) >= 0]
        high = fl_difference(0.95) >= 0
        has_root = fl_difference(0.8) < 0 <= fl_difference(0.95)
        root = brentq(fl_difference, 0.8, 0.95, xtol=1e-10) if has_root else float("nan")
        ok = not bad and high and 0.8 < root < 0.95
        below = "holds" if not bad else "violated at eta = " + ", ".join(f"{e:.2f}" for e in bad)
        return ok, f"F_L2 > F_L1 on [0.05, 0.8] {below}; F_L1 >= F_L2 at 0.95: {high}; crossover eta = {root:.4f}"

    return _timed("6e", "lossy-qfi-crossover", run)


def reference_photon_number(params: InterferometerParams) -> float:
    """Photon number of the standard interferometer, the reference for the SQL and HL curves."""
    return sensitivity.mean_photon_inside(STANDARD, params).N


def check_trend_sql(points: int = 60) -> CheckResult:
    def run():
        phis = np.linspace(0.01, 1.5, points)
        parts, ok = [], True
        for T in (1.0, 0.7):
            base = InterferometerParams(g=0.7, alpha=1.0, T=T)
            limit = sensitivity.sql(reference_photon_number(base))
            for scheme in (STANDARD, PA_THEN_PS, PS_THEN_PA):
                best = min(_dphi(scheme, base.with_(phi=float(p))) for p in phis)
                beats = best < limit
                ok &= beats != (scheme is STANDARD)
                parts.append(f"T={T} {scheme.label} min {best:.4f} vs SQL {limit:.4f}")
        return ok, "; ".join(parts)

    return _timed("6f", "beats-sql", run)


# ------------------------------------------------------------ 7: derivative


def check_derivative(n: int = 10, seed: int = 7, rtol: float = 1e-6) -> CheckResult:
    def run():
        worst = 0.0
        h = sensitivity.FD_STEP
        for scheme, p in random_points(n, seed):
            f = [sensitivity.homodyne_analytic(scheme, p.with_(phi=p.phi + k * h)).mean_X for k in (-2, -1, 1, 2)]
            fd = sensitivity.richardson_slope(f, h)
            worst = max(worst, _rel(sensitivity.dmeanX_dphi(scheme, p), fd))
        return worst <= rtol, f"{n} points, worst rel {worst:.2e}"

    return _timed("7", "derivative", run)


# ----------------------------------------------------------- 8: determinism


def check_determinism(runs: int = 2, preset: str = "fig2b") -> CheckResult:
    def run():
        with tempfile.TemporaryDirectory() as tmp:
            blobs = []
            for i in range(runs):
                out = Path(tmp) / f"run{i}.csv"
                cmd = [sys.executable, "-m", "su11nco", "figure", preset, "--out", str(out)]
                proc = subprocess.run(cmd, capture_output=True, text=True)
                if proc.returncode != 0:
                    return False, f"run {i} exited {proc.returncode}: {proc.stderr.strip()[-200:]}"
                blobs.append(out.read_bytes())
        same = all(b == blobs[0] for b in blobs)
        return same, f"{runs} runs of figure {preset}, {len(blobs[0])} bytes, identical: {same}"

    return _timed("8", "determinism", run)


# ------------------------------------------------------------------ suites


def quick_checks() -> list[CheckResult]:
    """Analytic-versus-oracle spot checks; well under a minute."""
    return [
        check_moment_equivalence(gs=(0.5, 1.2), Ts=(0.7, 1.0), alphas=(0.0, 1.0)),
        check_sensitivity_equivalence(n=4, seed=11),
        check_lossy_qfi(etas=(0.6,), lams=(0.0, -1.0)),
        check_u_quadratic_fit(),
        check_limits(),
        check_derivative(n=4),
    ]


def full_checks() -> list[CheckResult]:
    return [
        check_wigner_volumes(),
        check_moment_equivalence(),
        check_sensitivity_equivalence(),
        check_lossy_qfi(),
        check_u_quadratic_fit(),
        check_limits(),
        check_trend_ordering(),
        check_trend_superposition(),
        *(check_trend_monotone(v) for v in ("g", "alpha", "T")),
        check_trend_ideal_qfi(),
        check_trend_lossy_qfi(),
        check_trend_sql(),
        check_derivative(),
        check_determinism(),
    ]
