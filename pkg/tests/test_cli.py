import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from psusy import DwsParams, Grid, SampledFunction, dws_potential
from psusy.cli import run
from psusy.core import overlap
from psusy.dws import dws_potential_derivative, energy_special_case

REAL = ["--convention", "standard", "--branch", "plus", "--c", "100", "--q", "1.5", "--V0", "45.7"]


def call(args, tmp_path, name="out.txt"):
    out = tmp_path / name
    code = run([*args, "--out", str(out)])
    return code, out.read_text() if out.exists() else ""


def table(text):
    lines = [ln for ln in text.splitlines() if not ln.startswith("#")]
    cols = lines[0].split(",")
    rows = [[float(v) if v else np.nan for v in ln.split(",")] for ln in lines[1:]]
    return cols, np.array(rows)


def comments(text):
    return dict(ln[2:].split("=", 1) for ln in text.splitlines() if ln.startswith("# ") and "=" in ln)


def test_spectrum_dws_both(tmp_path):
    code, text = call(["spectrum", "--model", "dws", "--q", "1.5", "--a", "0.65", "--V0", "45.7",
                       "--A0", "40", "--mu", "1", "--n-levels", "4", "--method", "both"], tmp_path)
    assert code == 0
    cols, rows = table(text)
    assert cols == ["n", "E_closed_re", "E_closed_im", "E_oracle_re", "E_oracle_im", "abs_delta",
                    "convergence_estimate"]
    assert rows.shape == (4, 7)
    p = DwsParams.from_mass_number(40, q=1.5, V0=45.7)
    for n in range(4):
        m = n + 1
        direct = -(1 / 0.65 ** 2) * ((0.65 ** 2 * 45.7 / (1.5 * m)) ** 2 + (m / 2) ** 2
                                     + 2 * 0.65 * 45.7 ** 2 / 1.5 ** 2)
        assert rows[n, 1] == pytest.approx(direct, rel=1e-12)
        assert rows[n, 1] == energy_special_case(n, p, 1.0)
    assert np.all(rows[:, 3] < 0) and np.all(np.isfinite(rows[:, 5]))


def test_spectrum_real_ladder_matches_oracle(tmp_path):
    code, text = call(["spectrum", *REAL, "--n-levels", "2", "--grid=-10:20.6:2001"], tmp_path)
    assert code == 0
    _, rows = table(text)
    assert np.all(rows[:, 5] <= 1e-6)


def test_spectrum_degenerate_level(tmp_path, capsys):
    code, _ = call(["spectrum", "--G2-override=4.615384615384615,0", "--convention", "standard",
                    "--method", "closed-form", "--n-levels", "4"], tmp_path)
    assert code == 3
    assert "level 3" in capsys.readouterr().err


def test_spectrum_box_oracle(tmp_path):
    code, text = call(["spectrum", "--model", "box", "--L", "1", "--n-levels", "3",
                       "--method", "oracle"], tmp_path)
    assert code == 0
    _, rows = table(text)
    assert np.all(np.isnan(rows[:, 1]))
    assert np.allclose(rows[:, 3], (np.arange(1, 4) * np.pi) ** 2, atol=1e-5, rtol=0)


def test_scan_q_monotone(tmp_path):
    code, text = call(["scan", "--var", "q", "--from", "0.1", "--to", "3", "--steps", "30"], tmp_path)
    assert code == 0
    cols, rows = table(text)
    assert cols == ["sweep_value", "E_0", "E_1", "E_2", "E_3"]
    assert np.all(np.diff(rows[:, 1:], axis=0) > 0) and np.all(rows[:, 1:] < 0)


def test_scan_V0_monotone(tmp_path):
    code, text = call(["scan", "--var", "V0", "--from", "20", "--to", "80", "--steps", "25",
                       "--q", "1.5", "--a", "0.65"], tmp_path)
    assert code == 0
    _, rows = table(text)
    assert np.all(np.diff(rows[:, 1:], axis=0) < 0)


def test_scan_two_steps(tmp_path):
    code, text = call(["scan", "--var", "a", "--from", "0.5", "--to", "0.8", "--steps", "2"], tmp_path)
    assert code == 0
    lines = [ln for ln in text.splitlines() if not ln.startswith("#")]
    assert len(lines) == 3


@pytest.mark.parametrize("args", [["--from", "3", "--to", "1"], ["--from", "1", "--to", "3", "--steps", "1"],
                                  ["--from", "-1", "--to", "3"], ["--to", "3"]])
def test_scan_bad_range(tmp_path, args):
    assert call(["scan", "--var", "q", *args], tmp_path)[0] == 2


def test_verify_oscillator(tmp_path):
    code, text = call(["verify", "--model", "oscillator"], tmp_path)
    assert code == 0
    rep = json.loads(text)
    assert rep["all_hard_checks_pass"]
    assert all(c["status"] != "fail" for c in rep["checks"])


def test_verify_fig1(tmp_path):
    code, text = call(["verify"], tmp_path)
    assert code == 0
    rep = json.loads(text)
    checks = {c["name"]: c for c in rep["checks"]}
    names = list(checks)
    order = ["matching_conditions", "riccati_residual", "factorization_audit", "shape_invariance",
             "hierarchy_telescoping", "supercharge", "oracle_vs_closed_form"]
    idx = [next(i for i, n in enumerate(names) if n.startswith(o)) for o in order]
    assert idx == sorted(idx)
    assert checks["matching_conditions"]["value"] <= 1e-12
    assert checks["shape_invariance[paper]"]["value"] <= 1e-9
    errata = {e["id"]: e for e in rep["errata"]}
    assert errata["G2-radicand"]["location"] == "Eq 5.9"
    assert errata["G2-radicand"]["printed_residual"] > 1e-3
    assert errata["G2-radicand"]["adopted_residual"] <= 1e-12
    assert errata["ladder-numerator"]["printed_residual"] > 1e-3


def test_verify_literal_override_fails(tmp_path):
    code, text = call(["verify", "--G2-override=-1.5384615384615385,0"], tmp_path)
    assert code == 1
    checks = {c["name"]: c for c in json.loads(text)["checks"]}
    assert checks["matching_conditions"]["status"] == "fail"
    assert checks["matching_conditions"]["value"] > 1e-3


def test_verify_csv(tmp_path):
    code, text = call(["verify", "--model", "oscillator", "--format", "csv"], tmp_path)
    body = list(csv.reader(ln for ln in text.splitlines() if not ln.startswith("#")))
    assert code == 0 and body[0] == ["name", "status", "value", "tolerance"]
    assert {r[1] for r in body[1:]} == {"pass"}


def _psi(text):
    _, rows = table(text)
    return rows[:, 0], rows[:, 1] + 1j * rows[:, 2], rows[:, 3]


def test_wavefunction_closed_vs_oracle(tmp_path):
    c1, t1 = call(["wavefunction", *REAL, "--method", "closed-form"], tmp_path, "a.csv")
    c2, t2 = call(["wavefunction", *REAL, "--method", "oracle"], tmp_path, "b.csv")
    assert c1 == c2 == 0
    x, a, _ = _psi(t1)
    _, b, _ = _psi(t2)
    g = Grid(x[0], x[-1], x.size)
    assert overlap(SampledFunction(g, a), SampledFunction(g, b)) >= 1 - 1e-5
    assert comments(t1)["method"] == "closed-form"


def test_wavefunction_box_and_norm(tmp_path):
    code, text = call(["wavefunction", "--model", "box", "--n", "1", "--method", "oracle"], tmp_path)
    assert code == 0
    x, psi, dens = _psi(text)
    g = Grid(x[0], x[-1], x.size)
    assert overlap(SampledFunction(g, psi), SampledFunction(g, np.sin(np.pi * x))) >= 1 - 1e-6
    assert abs(np.trapezoid(dens, x) - 1) <= 1e-6
    assert abs(float(comments(text)["norm"]) - 1) <= 1e-6


def test_wavefunction_fig1_not_normalizable(tmp_path, capsys):
    code, _ = call(["wavefunction"], tmp_path)
    assert code == 3
    assert "grows toward the" in capsys.readouterr().err


def test_wavefunction_excited_needs_oracle(tmp_path):
    assert call(["wavefunction", "--n", "1", "--method", "closed-form"], tmp_path)[0] == 2


def test_reduce_free(tmp_path):
    code, text = call(["reduce", "--model", "box", "--M", "2", "--epsilon", "0.5"], tmp_path)
    assert code == 0
    cols, rows = table(text)
    assert cols == ["x", "nu", "re_U", "im_U"]
    assert np.allclose(rows[:, 2], 4 - 0.25) and np.all(rows[:, 3] == 0)
    meta = comments(text)
    assert float(meta["epsilon"]) == 0.5 and float(meta["M"]) == 2.0 and float(meta["mu"]) == 0.5


def test_reduce_dws_imag_part(tmp_path):
    code, text = call(["reduce", "--epsilon", "0.3"], tmp_path)
    assert code == 0
    _, rows = table(text)
    dnu = dws_potential_derivative(DwsParams.from_mass_number(40))(rows[:, 0])
    assert np.max(np.abs(rows[:, 3] + dnu)) <= 1e-12
    assert np.allclose(rows[:, 1], dws_potential(DwsParams.from_mass_number(40))(rows[:, 0]))


def test_reduce_massless(tmp_path):
    assert call(["reduce", "--M", "0"], tmp_path)[0] == 2


def test_config_file_and_flag_precedence(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# Fig-3 setup\nq = 1.5\nn-levels = 2\nV0 = 50\nhalf-line = true\n")
    code, text = call(["spectrum", "--config", str(cfg), "--V0", "60", "--method", "closed-form",
                       "--no-banner"], tmp_path)
    assert code == 0
    meta = comments(text)
    assert meta["q"] == "1.5" and meta["V0"] == "60.0" and meta["n-levels"] == "2"
    assert meta["half-line"] == "true"
    assert float(meta["X0"]) == pytest.approx(1.25 * 40 ** (1 / 3))
    assert table(text)[1].shape[0] == 2


@pytest.mark.parametrize("content", ["bogus = 1\n", "q 1.5\n", "q = abc\n", "grid = 0:1\n"])
def test_config_file_errors(tmp_path, content):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text(content)
    assert call(["spectrum", "--config", str(cfg)], tmp_path)[0] == 2


@pytest.mark.parametrize("args", [["--G2-override", "1"], ["--convention", "x"], ["--grid", "1:0:10"],
                                  ["--model", "well"], ["--unknown"], ["--a", "-1"]])
def test_bad_input_exit_code(tmp_path, args):
    assert call(["spectrum", *args], tmp_path)[0] == 2


COMMANDS = [
    ["spectrum", "--n-levels", "3"],
    ["scan", "--var", "V0", "--from", "20", "--to", "80", "--steps", "7"],
    ["verify", "--model", "oscillator"],
    ["wavefunction", *REAL],
    ["reduce", "--grid", "0:20:101"],
]


@pytest.mark.parametrize("args", COMMANDS, ids=[c[0] for c in COMMANDS])
def test_no_banner_outputs_are_identical(tmp_path, args):
    c1, t1 = call([*args, "--no-banner"], tmp_path, "1.out")
    c2, t2 = call([*args, "--no-banner"], tmp_path, "2.out")
    assert c1 == c2 == 0
    assert (tmp_path / "1.out").read_bytes() == (tmp_path / "2.out").read_bytes()
    assert "\r" not in t1


def test_banner_and_single_header_row(tmp_path):
    code, text = call(["spectrum", "--model", "oscillator", "--n-levels", "2"], tmp_path)
    assert code == 0
    first = text.splitlines()[0]
    assert first.startswith("# psusy ") and " spectrum " in first
    body = [ln for ln in text.splitlines() if not ln.startswith("#")]
    assert sum(not ln[0].isdigit() and not ln[0] == "-" for ln in body) == 1


def test_json_table_format(tmp_path):
    code, text = call(["spectrum", "--model", "oscillator", "--n-levels", "2", "--format", "json"], tmp_path)
    doc = json.loads(text)
    assert code == 0 and doc["columns"][0] == "n" and len(doc["rows"]) == 2


def test_console_script_stdout():
    out = subprocess.run([sys.executable, "-c", "from psusy.cli import main; main()", "spectrum",
                          "--model", "box", "--n-levels", "1", "--method", "closed-form", "--no-banner"],
                         capture_output=True, text=True, check=False)
    assert out.returncode == 0
    _, rows = table(out.stdout)
    assert rows[0, 1] == pytest.approx(np.pi ** 2)
