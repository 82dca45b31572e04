"""Command-line front end: parameter sweeps, figure presets, validation and Wigner slices.

Exit codes: 0 success, 1 bad specification, 2 validation failure,
3 numeric or convergence failure in at least one sweep point.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import qfi, sensitivity, validation, wigner
from .errors import CapabilityError, DomainError
from .model import PA_THEN_PS, PS_THEN_PA, STANDARD, InterferometerParams, SchemeSpec

EXIT_OK, EXIT_SPEC, EXIT_VALIDATION, EXIT_NUMERIC = 0, 1, 2, 3

VARIABLES = ("phi", "g", "alpha", "T", "eta", "t_coefficient")
QUANTITIES = ("delta_phi", "N", "sql", "hl", "qfi_ideal", "qfi_lossy", "qcrb", "wigner_volume")
BACKENDS = ("analytic", "oracle", "both")
G_MAX, ALPHA_MAX = 1.5, 2.5
DEFAULT_POINTS = 40


class SpecError(ValueError):
    """The sweep or command line is malformed; nothing was computed."""


@dataclass(frozen=True)
class SweepSpec:
    variable: str
    start: float
    stop: float
    count: int
    fixed: InterferometerParams = field(default_factory=InterferometerParams)
    schemes: tuple = (STANDARD, PA_THEN_PS, PS_THEN_PA)
    quantities: tuple = ("delta_phi",)
    backend: str = "analytic"
    cutoff: int | None = None
    grid: wigner.QuadratureGrid = field(default_factory=wigner.QuadratureGrid)
    sql_reference: str = "standard"

    def __post_init__(self):
        if self.variable not in VARIABLES:
            raise SpecError(f"unknown sweep variable {self.variable!r}; choose from {VARIABLES}")
        if int(self.count) != self.count or self.count < 2:
            raise SpecError("a sweep needs count >= 2")
        bad = [q for q in self.quantities if q not in QUANTITIES]
        if bad or not self.quantities:
            raise SpecError(f"unknown quantities {bad}; choose from {QUANTITIES}")
        if self.backend not in BACKENDS:
            raise SpecError(f"unknown backend {self.backend!r}")
        if self.sql_reference not in ("standard", "own"):
            raise SpecError("sql_reference must be 'standard' or 'own'")
        if self.cutoff is not None and self.cutoff < 4:
            raise SpecError("cutoff must be at least 4")
        if not self.schemes and self.variable != "t_coefficient":
            raise SpecError("no schemes given")
        for v in (self.start, self.stop):
            if not math.isfinite(v):
                raise SpecError("sweep range must be finite")
        for v in self.values():
            # every grid point must be a valid parameter set
            self.params_at(v)

    def values(self) -> list[float]:
        # rounding keeps the printed inputs clean (0.8 rather than 0.7999999999999999)
        return [float(round(v, 12)) for v in np.linspace(self.start, self.stop, self.count)]

    def params_at(self, value: float) -> InterferometerParams:
        try:
            p = self.fixed if self.variable == "t_coefficient" else self.fixed.with_(**{self.variable: value})
        except DomainError as exc:
            raise SpecError(str(exc)) from None
        if p.g > G_MAX or p.alpha > ALPHA_MAX:
            raise SpecError(f"outside the validated range g <= {G_MAX}, alpha <= {ALPHA_MAX}")
        if self.variable == "t_coefficient" and not 0 <= value <= 1:
            raise SpecError("t_coefficient must lie in [0, 1]")
        return p

    def schemes_at(self, value: float) -> tuple:
        if self.variable == "t_coefficient":
            return (SchemeSpec.superposition(value),)
        return self.schemes

    def columns(self) -> list[str]:
        """Column set; depends only on the quantities and the backend."""
        cols = ["variable", "scheme", "s", "t", "g", "alpha", "phi", "T", "eta", "backend"]
        both = self.backend == "both"
        q = self.quantities
        if "delta_phi" in q:
            cols += ["delta_phi"] + (["delta_phi_oracle", "delta_phi_rel_diff"] if both else [])
        if "N" in q:
            cols += ["N"] + (["N_oracle"] if both else [])
        if "sql" in q or "hl" in q:
            cols += ["N_ref"] + [k for k in ("sql", "hl") if k in q]
        if "qfi_ideal" in q:
            cols += ["qfi_ideal"] + (["qfi_ideal_oracle"] if both else [])
        if "qfi_lossy" in q:
            cols += ["qfi_lossy", "lambda_star"] + (["qfi_lossy_oracle"] if both else [])
        if "qcrb" in q:
            cols += ["qcrb"]
        if "wigner_volume" in q:
            cols += ["wigner_volume", "wigner_integral"]
        return cols + ["flags", "error"]


# ----------------------------------------------------------------- evaluation


def _oracle_kw(spec: SweepSpec) -> dict:
    return {} if spec.cutoff is None else {"max_dim": spec.cutoff}


def _evaluate(task) -> dict:
    """All requested quantities at one (grid point, scheme)."""
    spec, value, scheme = task
    p = spec.params_at(value)
    row = {
        "variable": value, "scheme": scheme.label, "s": scheme.s, "t": scheme.t,
        "g": p.g, "alpha": p.alpha, "phi": p.phi, "T": p.T, "eta": p.eta, "backend": spec.backend,
    }
    flags, errors = [], []
    kw = _oracle_kw(spec)
    use_analytic = spec.backend in ("analytic", "both")
    use_oracle = spec.backend in ("oracle", "both")
    q = spec.quantities

    def attempt(fn):
        try:
            fn()
        except (DomainError, CapabilityError, ArithmeticError) as exc:
            errors.append(f"{type(exc).__name__}: {exc}")

    def delta_phi():
        main = None
        if use_analytic:
            main = sensitivity.phase_sensitivity(scheme, p).delta_phi
            row["delta_phi"] = main
        if use_oracle:
            pt = sensitivity.phase_sensitivity(scheme, p, backend="oracle", **kw)
            flags.append(f"cutoff={pt.diagnostics['cutoff']}")
            if main is None:
                row["delta_phi"] = pt.delta_phi
            else:
                row["delta_phi_oracle"] = pt.delta_phi
                row["delta_phi_rel_diff"] = abs(pt.delta_phi - main) / abs(main)

    def photons():
        if use_analytic:
            row["N"] = sensitivity.mean_photon_inside(scheme, p).N
        if use_oracle:
            row["N_oracle" if use_analytic else "N"] = sensitivity.mean_photon_inside(scheme, p, "oracle", **kw).N

    def limits():
        ref = STANDARD if spec.sql_reference == "standard" else scheme
        n_ref = sensitivity.mean_photon_inside(ref, p).N
        row["N_ref"] = n_ref
        if "sql" in q:
            row["sql"] = sensitivity.sql(n_ref)
        if "hl" in q:
            row["hl"] = sensitivity.hl(n_ref)

    def fisher_ideal():
        if use_analytic:
            row["qfi_ideal"] = qfi.qfi_ideal(scheme, p.g, p.alpha).F
        if use_oracle:
            row["qfi_ideal_oracle" if use_analytic else "qfi_ideal"] = qfi.qfi_ideal(scheme, p.g, p.alpha, "oracle", **kw).F

    def fisher_lossy():
        res = None
        if use_analytic:
            res = qfi.qfi_lossy(scheme, p.eta, p.g, p.alpha)
            row["qfi_lossy"], row["lambda_star"] = res.F, res.lambda_star
        if use_oracle:
            ores = qfi.qfi_lossy(scheme, p.eta, p.g, p.alpha, backend="oracle", **kw)
            if res is None:
                res = ores
                row["qfi_lossy"], row["lambda_star"] = res.F, res.lambda_star
            else:
                row["qfi_lossy_oracle"] = ores.F
        flags.append(f"lambda={res.flag}")

    def bound():
        # the lossy QCRB when the lossy QFI is part of the sweep, the ideal one otherwise
        if "qfi_lossy" in q:
            F = qfi.qfi_lossy(scheme, p.eta, p.g, p.alpha).F if use_analytic else row.get("qfi_lossy")
        else:
            F = qfi.qfi_ideal(scheme, p.g, p.alpha).F if use_analytic else row.get("qfi_ideal")
            if F is None:
                F = qfi.qfi_ideal(scheme, p.g, p.alpha, "oracle", **kw).F
        row["qcrb"] = qfi.qcrb(F)

    def negativity():
        res = wigner.nco_negative_volume(scheme, p.g, p.alpha, spec.grid)
        row["wigner_volume"], row["wigner_integral"] = res.volume, res.report.integral

    for name, fn in (
        ("delta_phi", delta_phi), ("N", photons), ("sql", limits), ("qfi_ideal", fisher_ideal),
        ("qfi_lossy", fisher_lossy), ("qcrb", bound), ("wigner_volume", negativity),
    ):
        if name in q or (name == "sql" and "hl" in q):
            attempt(fn)
    row["flags"] = ";".join(flags)
    row["error"] = " | ".join(errors)
    return {c: row.get(c, math.nan) for c in spec.columns()}


def run_sweep(spec: SweepSpec, threads: int = 1) -> list[dict]:
    """Rows in grid-major, scheme-minor order; per-point failures land in the error column."""
    tasks = [(spec, v, s) for v in spec.values() for s in spec.schemes_at(v)]
    if threads <= 1 or len(tasks) == 1:
        return [_evaluate(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        # map keeps submission order, so the output does not depend on scheduling
        return list(pool.map(_evaluate, tasks, chunksize=1))


# -------------------------------------------------------------- figure presets

_PHI_AXIS = (0.05, 1.5)
_G_AXIS = (0.05, 1.5)
_ALPHA_AXIS = (0.05, 2.5)
_T_AXIS = (0.05, 1.0)
_ETA_AXIS = (0.05, 0.99)
_LOSSY_T = 0.7  # lossy curves whose transmissivity is not fixed by the figure
_NCO = (PA_THEN_PS, PS_THEN_PA)
_ALL = (STANDARD, PA_THEN_PS, PS_THEN_PA)


def _preset_specs(name: str, points: int) -> list[SweepSpec]:
    P = InterferometerParams
    n = points
    table = {
        "fig2a": [SweepSpec("phi", *_PHI_AXIS, n, P(g=1, alpha=1),
                            tuple(SchemeSpec.superposition(t) for t in (0.0, 0.25, 0.5, 0.75, 1.0)))],
        "fig2b": [SweepSpec("phi", *_PHI_AXIS, n, P(g=1, alpha=1), _ALL)],
        "fig3": [SweepSpec("g", *_G_AXIS, n, P(alpha=1, phi=0.6), _ALL)],
        "fig4": [SweepSpec("alpha", *_ALPHA_AXIS, n, P(g=1, phi=0.6), _ALL)],
        "fig5": [SweepSpec("T", *_T_AXIS, n, P(g=1, alpha=1, phi=0.6), _ALL)],
        "fig6a": [SweepSpec("g", *_G_AXIS, n, P(alpha=1, phi=0.6, T=T), _ALL) for T in (1.0, _LOSSY_T)],
        "fig6b": [SweepSpec("alpha", *_ALPHA_AXIS, n, P(g=1, phi=0.6, T=T), _ALL) for T in (1.0, _LOSSY_T)],
        "fig7a": [SweepSpec("phi", *_PHI_AXIS, n, P(g=0.7, alpha=1, T=1.0), _ALL, ("delta_phi", "N", "sql", "hl"))],
        "fig7b": [SweepSpec("phi", *_PHI_AXIS, n, P(g=0.7, alpha=1, T=0.7), _ALL, ("delta_phi", "N", "sql", "hl"))],
        "fig8a": [SweepSpec("g", *_G_AXIS, n, P(alpha=1), _ALL, ("qfi_ideal",))],
        "fig8b": [SweepSpec("alpha", *_ALPHA_AXIS, n, P(g=1), _ALL, ("qfi_ideal",))],
        "fig9a": [SweepSpec("g", *_G_AXIS, n, P(alpha=1, phi=0.6), _ALL, ("delta_phi", "qcrb"))],
        "fig9b": [SweepSpec("alpha", *_ALPHA_AXIS, n, P(g=1, phi=0.6), _ALL, ("delta_phi", "qcrb"))],
        "fig11a": [SweepSpec("eta", *_ETA_AXIS, n, P(g=1, alpha=1), _NCO, ("qfi_lossy",))],
        "fig11b": [SweepSpec("eta", *_ETA_AXIS, n, P(g=1, alpha=1), _NCO, ("qfi_lossy", "qcrb"))],
        # four fixed gains, not an axis
        "fig12": [SweepSpec("g", 0.6, 1.2, 4, P(alpha=1), _NCO, ("wigner_volume",))],
        "fig13a": [SweepSpec("g", *_G_AXIS, n, P(alpha=1, eta=0.6), _NCO, ("qfi_lossy",))],
        "fig13b": [SweepSpec("alpha", *_ALPHA_AXIS, n, P(g=1, eta=0.6), _NCO, ("qfi_lossy",))],
    }
    if name not in table:
        raise SpecError(f"unknown figure preset {name!r}; choose from {', '.join(FIGURES)}")
    return table[name]


FIGURES = (
    "fig2a", "fig2b", "fig3", "fig4", "fig5", "fig6a", "fig6b", "fig7a", "fig7b",
    "fig8a", "fig8b", "fig9a", "fig9b", "fig11a", "fig11b", "fig12", "fig13a", "fig13b",
)


def figure_preset(name: str, points: int = DEFAULT_POINTS, **overrides) -> list[SweepSpec]:
    """Sweeps behind a figure, with the figure's fixed parameters baked in."""
    return [replace(s, **overrides) if overrides else s for s in _preset_specs(name, points)]


# ------------------------------------------------------------------- output


def _format(value) -> str:
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if value is None:
        return "nan"
    return str(value)


def write_rows(rows: list[dict], columns: list[str], fmt: str, fh) -> None:
    if fmt == "csv":
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([_format(r[c]) for c in columns])
    else:
        for r in rows:
            clean = {c: (None if isinstance(r[c], float) and math.isnan(r[c]) else r[c]) for c in columns}
            fh.write(json.dumps(clean) + "\n")


def _emit(rows, columns, args) -> None:
    buf = io.StringIO()
    write_rows(rows, columns, args.format, buf)
    if args.out in (None, "-"):
        sys.stdout.write(buf.getvalue())
    else:
        with open(args.out, "w", newline="") as fh:
            fh.write(buf.getvalue())


# ----------------------------------------------------------------- config


def load_config(path) -> dict:
    """JSON config; see the README for the schema."""
    if path is None:
        return {}
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise SpecError(f"cannot read config {path}: {exc}") from None
    if not isinstance(cfg, dict):
        raise SpecError("config must be a JSON object")
    allowed = {"fixed", "sweep", "cutoff", "grid", "points", "backend", "sql_reference", "threads", "format"}
    unknown = set(cfg) - allowed
    if unknown:
        raise SpecError(f"unknown config keys {sorted(unknown)}")
    return cfg


def _grid_from(cfg: dict) -> wigner.QuadratureGrid:
    try:
        return wigner.QuadratureGrid(**cfg.get("grid", {}))
    except (TypeError, DomainError) as exc:
        raise SpecError(f"bad grid config: {exc}") from None


def _fixed_from(cfg: dict, args) -> InterferometerParams:
    values = dict(cfg.get("fixed", {}))
    for name in ("g", "alpha", "phi", "T", "eta"):
        v = getattr(args, name, None)
        if v is not None:
            values[name] = v
    try:
        return InterferometerParams(**values)
    except (TypeError, DomainError) as exc:
        raise SpecError(f"bad fixed parameters: {exc}") from None


def _parse_schemes(items) -> tuple:
    try:
        return tuple(SchemeSpec.parse(s) for s in items)
    except (ValueError, DomainError) as exc:
        raise SpecError(str(exc)) from None


def _common(args, cfg) -> dict:
    """Overrides shared by sweep and figure: flags beat the config file."""
    out = {}
    backend = args.backend or cfg.get("backend")
    if backend:
        out["backend"] = backend
    cutoff = args.cutoff if args.cutoff is not None else cfg.get("cutoff")
    if cutoff is not None:
        out["cutoff"] = int(cutoff)
    if "grid" in cfg:
        out["grid"] = _grid_from(cfg)
    if "sql_reference" in cfg:
        out["sql_reference"] = cfg["sql_reference"]
    return out


# ------------------------------------------------------------------ commands


def _finish(specs, args, cfg) -> int:
    threads = args.threads or cfg.get("threads") or os.cpu_count() or 1
    rows = []
    for spec in specs:
        rows += run_sweep(spec, threads)
    columns = specs[0].columns()
    for spec in specs[1:]:
        columns += [c for c in spec.columns() if c not in columns]
    rows = [{c: r.get(c, math.nan) for c in columns} for r in rows]
    _emit(rows, columns, args)
    failed = sum(1 for r in rows if r["error"])
    if failed:
        print(f"{failed} of {len(rows)} points failed; see the error column", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


def cmd_sweep(args, cfg) -> int:
    sweep = dict(cfg.get("sweep", {}))
    for key in ("variable", "start", "stop", "count"):
        v = getattr(args, key)
        if v is not None:
            sweep[key] = v
    missing = [k for k in ("variable", "start", "stop", "count") if k not in sweep]
    if missing:
        raise SpecError(f"sweep needs {', '.join(missing)}")
    schemes = args.scheme or sweep.get("schemes") or ["standard", "pa-then-ps", "ps-then-pa"]
    quantities = args.quantities.split(",") if args.quantities else sweep.get("quantities", ["delta_phi"])
    spec = SweepSpec(
        sweep["variable"], float(sweep["start"]), float(sweep["stop"]), int(sweep["count"]),
        fixed=_fixed_from(cfg, args), schemes=_parse_schemes(schemes),
        quantities=tuple(q.strip() for q in quantities), **_common(args, cfg),
    )
    return _finish([spec], args, cfg)


def cmd_figure(args, cfg) -> int:
    if args.list:
        print("\n".join(FIGURES))
        return EXIT_OK
    if not args.name:
        raise SpecError("figure needs a preset name (see --list)")
    points = args.points or cfg.get("points") or DEFAULT_POINTS
    specs = figure_preset(args.name, int(points), **_common(args, cfg))
    return _finish(specs, args, cfg)


def _inject_fault(kind: str) -> None:
    """Deliberately corrupt one closed-form ingredient so the checks can be seen to fail."""
    if kind == "u-coefficient":
        original = qfi.u_coefficients

        def corrupted(eta, lam):
            u = original(eta, lam)
            u[3] *= 1.001
            return u

        qfi.u_coefficients = corrupted
    else:
        raise SpecError(f"unknown fault {kind!r}")


def cmd_validate(args, cfg) -> int:
    if args.inject_fault:
        _inject_fault(args.inject_fault)
    checks = validation.quick_checks() if args.level == "quick" else validation.full_checks()
    for c in checks:
        print(c.line(), flush=True)
    failed = [c for c in checks if not c.passed]
    print(f"{len(checks) - len(failed)} passed, {len(failed)} failed")
    return EXIT_VALIDATION if failed else EXIT_OK


def cmd_wigner_slice(args, cfg) -> int:
    (scheme,) = _parse_schemes([args.scheme])
    fixed = _fixed_from(cfg, args)
    if fixed.g > G_MAX or fixed.alpha > ALPHA_MAX:
        raise SpecError(f"outside the validated range g <= {G_MAX}, alpha <= {ALPHA_MAX}")
    if args.points < 2 or not args.half_width > 0:
        raise SpecError("need points >= 2 and a positive half-width")
    if args.frame == "compact":
        state = wigner.compact_frame_state(scheme, fixed.g, fixed.alpha)
    else:
        state = wigner.nco_state_ideal(scheme, fixed.g, fixed.alpha)
    axis = np.linspace(-args.half_width, args.half_width, args.points)
    x1 = axis + args.center_x1
    y1 = axis + args.center_y1
    values = wigner.wigner_slice(state, x1, y1, args.x2, args.y2)
    rows = [{"x1": float(a), "y1": float(b), "W": float(values[i, j])} for i, a in enumerate(x1) for j, b in enumerate(y1)]
    _emit(rows, ["x1", "y1", "W"], args)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="output file (default: stdout)")
    common.add_argument("--format", choices=("csv", "jsonl"), help="output format (default csv)")
    common.add_argument("--threads", type=int, help="worker processes (default: all cores)")
    common.add_argument("--cutoff", type=int, help="largest Fock dimension per mode the oracle may use")
    common.add_argument("--backend", choices=BACKENDS, help="analytic formulas, Fock oracle, or both")
    common.add_argument("--config", help="JSON config with fixed parameters and overrides")

    params = argparse.ArgumentParser(add_help=False)
    for name in ("g", "alpha", "phi", "T", "eta"):
        params.add_argument(f"--{name}", type=float, help=f"fixed {name}")

    parser = argparse.ArgumentParser(prog="su11nco", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    sw = sub.add_parser("sweep", parents=[common, params], help="one-parameter sweep")
    sw.add_argument("--variable", choices=VARIABLES)
    sw.add_argument("--start", type=float)
    sw.add_argument("--stop", type=float)
    sw.add_argument("--count", type=int)
    sw.add_argument("--scheme", action="append", help="preset name, t=<value> or s,t (repeatable)")
    sw.add_argument("--quantities", help=f"comma list from {','.join(QUANTITIES)}")
    sw.set_defaults(func=cmd_sweep)

    fg = sub.add_parser("figure", parents=[common], help="data behind a figure")
    fg.add_argument("name", nargs="?")
    fg.add_argument("--points", type=int, help=f"points per axis (default {DEFAULT_POINTS})")
    fg.add_argument("--list", action="store_true", help="list the presets")
    fg.set_defaults(func=cmd_figure)

    va = sub.add_parser("validate", parents=[common], help="run the acceptance checks")
    va.add_argument("level", choices=("quick", "full"), nargs="?", default="quick")
    va.add_argument("--inject-fault", choices=("u-coefficient",), help="corrupt a coefficient to test the checks")
    va.set_defaults(func=cmd_validate)

    ws = sub.add_parser("wigner-slice", parents=[common, params], help="W on the (x1, y1) plane")
    ws.add_argument("--scheme", default="ps-then-pa")
    ws.add_argument("--x2", type=float, default=0.0)
    ws.add_argument("--y2", type=float, default=0.0)
    ws.add_argument("--half-width", type=float, default=5.0)
    ws.add_argument("--points", type=int, default=81)
    ws.add_argument("--center-x1", type=float, default=0.0)
    ws.add_argument("--center-y1", type=float, default=0.0)
    ws.add_argument("--frame", choices=("lab", "compact"), default="lab")
    ws.set_defaults(func=cmd_wigner_slice)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits with 2 on usage errors; report those as specification errors
        return EXIT_OK if exc.code == 0 else EXIT_SPEC
    try:
        cfg = load_config(args.config)
        args.format = args.format or cfg.get("format") or "csv"
        if args.format not in ("csv", "jsonl"):
            raise SpecError(f"unknown format {args.format!r}")
        return args.func(args, cfg)
    except SpecError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SPEC
    except (DomainError, CapabilityError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SPEC
    except ArithmeticError as exc:
        print(f"numeric failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
