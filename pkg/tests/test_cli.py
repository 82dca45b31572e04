import csv
import io
import json
import math
import subprocess
import sys

import pytest

from su11nco import cli
from su11nco.cli import SpecError, SweepSpec, figure_preset, main
from su11nco.model import PS_THEN_PA, InterferometerParams


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def read_csv(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_minimal_sweep(capsys):
    code, out, _ = run(capsys, "sweep", "--variable", "phi", "--start", "0.2", "--stop", "1.0", "--count", "2",
                       "--scheme", "ps-then-pa", "--threads", "1")
    rows = read_csv(out)
    assert code == 0 and len(rows) == 2
    assert [r["phi"] for r in rows] == ["0.2", "1.0"]
    assert all(float(r["delta_phi"]) > 0 and r["error"] == "" for r in rows)


def test_jsonl_output(capsys, tmp_path):
    path = tmp_path / "out.jsonl"
    code, _, _ = run(capsys, "sweep", "--variable", "eta", "--start", "0.5", "--stop", "0.9", "--count", "3",
                     "--scheme", "pa-then-ps", "--quantities", "qfi_lossy,qcrb", "--format", "jsonl",
                     "--threads", "1", "--out", str(path))
    rows = [json.loads(line) for line in path.read_text().splitlines()]
    assert code == 0 and len(rows) == 3
    assert rows[0]["qcrb"] == pytest.approx(1 / math.sqrt(rows[0]["qfi_lossy"]))


def test_columns_depend_only_on_quantities():
    a = SweepSpec("phi", 0.1, 1.0, 3, quantities=("delta_phi", "sql"))
    b = SweepSpec("g", 0.1, 1.0, 7, schemes=(PS_THEN_PA,), quantities=("delta_phi", "sql"))
    assert a.columns() == b.columns()
    both = SweepSpec("phi", 0.1, 1.0, 3, backend="both").columns()
    assert "delta_phi_oracle" in both and "delta_phi_rel_diff" in both
    assert SweepSpec("phi", 0.1, 1.0, 3, quantities=("wigner_volume",)).columns()[-2:] == ["flags", "error"]


@pytest.mark.parametrize(
    "kwargs",
    [dict(count=1), dict(variable="beta"), dict(quantities=("speed",)), dict(stop=3.0, variable="alpha")],
)
def test_spec_validation(kwargs):
    base = dict(variable="phi", start=0.1, stop=1.0, count=3)
    base.update(kwargs)
    with pytest.raises(SpecError):
        SweepSpec(**base)


def test_exit_codes(capsys):
    assert run(capsys, "sweep", "--variable", "phi", "--start", "0", "--stop", "1")[0] == 1
    assert run(capsys, "sweep", "--variable", "g", "--start", "0.1", "--stop", "9", "--count", "3")[0] == 1
    assert run(capsys, "bogus")[0] == 1
    assert run(capsys, "figure", "fig99")[0] == 1
    # no signal at alpha = g = 0: the row is written with an error and the run reports a numeric failure
    code, out, err = run(capsys, "sweep", "--variable", "phi", "--start", "0.2", "--stop", "0.4", "--count", "2",
                         "--g", "0", "--alpha", "0", "--scheme", "standard", "--threads", "1")
    assert code == 3 and "failed" in err
    assert all(r["error"] for r in read_csv(out))


def test_config_precedence(capsys, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"fixed": {"g": 0.5, "alpha": 1.5}, "format": "jsonl"}))
    argv = ["sweep", "--variable", "phi", "--start", "0.3", "--stop", "0.6", "--count", "2",
            "--scheme", "standard", "--threads", "1", "--config", str(cfg)]
    code, out, _ = run(capsys, *argv, "--g", "0.9")
    rows = [json.loads(line) for line in out.splitlines()]
    assert code == 0 and rows[0]["g"] == 0.9 and rows[0]["alpha"] == 1.5
    cfg.write_text(json.dumps({"colour": "red"}))
    assert run(capsys, *argv)[0] == 1


def test_figure_list(capsys):
    code, out, _ = run(capsys, "figure", "--list")
    assert code == 0 and out.split() == list(cli.FIGURES)


def test_figure_presets_are_well_formed():
    for name in cli.FIGURES:
        specs = figure_preset(name, 5)
        assert specs
    (fig5,) = figure_preset("fig5", 5)
    assert fig5.variable == "T" and fig5.fixed == InterferometerParams(g=1.0, alpha=1.0, phi=0.6)
    t_values = sorted(s.fixed.T for s in figure_preset("fig7b", 5))
    assert t_values == [0.7]
    (fig12,) = figure_preset("fig12", 40)
    assert fig12.values() == [0.6, 0.8, 1.0, 1.2]


def test_figure_output_is_deterministic(tmp_path):
    outs = []
    for k in range(2):
        path = tmp_path / f"fig2b_{k}.csv"
        subprocess.run([sys.executable, "-m", "su11nco", "figure", "fig2b", "--points", "6", "--out", str(path)],
                       check=True)
        outs.append(path.read_bytes())
    assert outs[0] == outs[1]
    assert len(read_csv(outs[0].decode())) == 18


def test_wigner_slice(capsys):
    code, out, _ = run(capsys, "wigner-slice", "--frame", "compact", "--points", "5", "--half-width", "2")
    rows = read_csv(out)
    assert code == 0 and len(rows) == 25
    assert min(float(r["W"]) for r in rows) < 0


def test_validate_quick(capsys):
    code, out, _ = run(capsys, "validate", "quick")
    assert code == 0 and "[FAIL]" not in out


def test_validate_catches_injected_fault(monkeypatch, capsys):
    monkeypatch.setattr(cli.qfi, "u_coefficients", cli.qfi.u_coefficients)
    code, out, _ = run(capsys, "validate", "quick", "--inject-fault", "u-coefficient")
    assert code == 2
    assert "[FAIL] 4 u-coefficient-quadratic-fit" in out
