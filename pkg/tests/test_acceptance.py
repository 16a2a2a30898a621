"""Acceptance criteria AC1-AC8. Each test records one PASS/FAIL line, shown in
the terminal summary; run this file directly for the same report."""
import json
import sys
import time

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from psusy import Convention, DwsParams, Grid, SampledFunction, SpectralProblem, refine_until
from psusy.cli import run
from psusy.dws import (
    Branch,
    default_window,
    dws_family,
    energy_closed_form,
    parameter_map,
    residual_R,
    solve_matching,
)
from psusy.oracle import discretize, eigen_real
from psusy.susy import (
    apply_lowering,
    ground_state_from_superpotential,
    hierarchy_energies,
    linear_superpotential,
    shape_invariance_residual,
)


def record(tag: str, ok: bool, detail: str) -> None:
    line = f"{tag} {'PASS' if ok else 'FAIL'}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def random_dws(rng, n):
    """(V0, a, q, c) drawn over the ranges the figures explore."""
    return [DwsParams(rng.uniform(20, 80), rng.uniform(0.3, 1.0), rng.uniform(0.1, 3.0),
                      1.25 * 40 ** (1 / 3), c=rng.choice([0.0, rng.uniform(0, 200)]))
            for _ in range(n)]


def matched(p, rng):
    """Matched G2 for a random convention; the plus branch is skipped when it
    is the degenerate G2 = 0 root."""
    conv = rng.choice([Convention.PAPER_SEC4, Convention.STANDARD])
    branch = rng.choice([Branch.PLUS, Branch.MINUS]) if p.c > 0 else Branch.MINUS
    return conv, branch, solve_matching(p, 1.0, branch, conv)


def test_ac1_oracle_validation():
    t0 = time.perf_counter()
    H = discretize(SampledFunction.from_callable(Grid(0.0, 1.0, 4001), lambda x: 0 * x), 1.0)
    box = eigen_real(H, 5).eigenvalues.real
    exact = (np.arange(1, 6) * np.pi) ** 2
    box_err = float(np.max(np.abs(box - exact) / exact))

    osc = refine_until(SpectralProblem(lambda x: x ** 2, -12.0, 12.0, 4001, 1.0, 6), 1e-9, 1)
    osc_err = float(np.max(np.abs(osc.eigenvalues - (2 * np.arange(6) + 1))))

    pt = refine_until(SpectralProblem(lambda x: x ** 2 + 1j * x, -10.0, 10.0, 501, 1.0, 5), 1e-8, 1)
    pt_err = float(np.max(np.abs(pt.eigenvalues.real - (2 * np.arange(5) + 1.25))))
    pt_im = float(np.max(np.abs(pt.eigenvalues.imag)))
    dt = time.perf_counter() - t0
    ok = box_err <= 1e-5 and osc_err <= 1e-4 and pt_err <= 1e-4 and pt_im <= 1e-8 and dt <= 30
    record("AC1", ok, f"box rel {box_err:.1e}, oscillator {osc_err:.1e}, PT {pt_err:.1e} "
                      f"(|Im| {pt_im:.1e}), {dt:.1f} s")


def test_ac2_matching_conditions(rng):
    cases = [(p, *matched(p, rng)) for p in random_dws(rng, 100)]
    t0 = time.perf_counter()
    worst = 0.0
    for p, conv, _, (G1, G2, E0) in cases:
        k = 1j if conv is Convention.PAPER_SEC4 else 1.0
        al = 1 / p.a
        worst = max(worst, abs(G1 ** 2 + E0), abs(2 * G1 * G2 - k * al * G2 + p.V0),
                    abs(G2 ** 2 + k * al * p.q * G2 - p.c))
    dt = time.perf_counter() - t0
    record("AC2", worst <= 1e-12 and dt <= 1, f"max residual {worst:.1e} over 100 sets, {dt:.3f} s")


def test_ac3_shape_invariance(rng):
    t0 = time.perf_counter()
    worst_var = worst_R = 0.0
    for p in random_dws(rng, 20):
        conv, _, (_, G2, _) = matched(p, rng)
        grid = Grid(*default_window(p), 2001)
        a2 = parameter_map(G2, p.alpha, p.q, conv)
        si = shape_invariance_residual(dws_family(p, 1.0), G2, a2, 1.0, conv, grid)
        R = residual_R(G2, a2, p, 1.0)
        worst_var = max(worst_var, si.x_variance / (1 + abs(si.R)))
        worst_R = max(worst_R, abs(si.R - R) / (1 + abs(R)))
    dt = time.perf_counter() - t0
    ok = worst_var <= 1e-9 and worst_R <= 1e-9 and dt <= 5
    record("AC3", ok, f"variance {worst_var:.1e}, R mismatch {worst_R:.1e} (relative), {dt:.2f} s")


def test_ac4_telescoping(rng):
    worst, worst_rel, worst_mag, ground = 0.0, 0.0, 0.0, []
    for p in random_dws(rng, 20):
        conv, branch, (_, G2, _) = matched(p, rng)
        step = lambda a, p=p: parameter_map(a, p.alpha, p.q)  # noqa: E731
        levels = hierarchy_energies(G2, step, lambda a, b, p=p: residual_R(a, b, p, 1.0), 11)
        for n in range(11):
            e = energy_closed_form(n, p, 1.0, branch, matching=conv)
            err = abs(e - levels[n].cumulative_energy)
            if err > worst:
                worst, worst_mag = err, abs(e)
            worst_rel = max(worst_rel, err / (1 + abs(e)))
        ground.append(energy_closed_form(0, p, 1.0, branch, matching=conv))
    exact_zero = all(e == 0 for e in ground)
    record("AC4", worst <= 1e-10 and exact_zero,
           f"max |closed form - telescoped| {worst:.1e} (at |E| {worst_mag:.1e}; max relative "
           f"{worst_rel:.1e}) for n=0..10, E0 exactly zero: {exact_zero}")


def test_ac5_isospectrality():
    mu, omega = 1.0, 1.0
    minus = refine_until(SpectralProblem(lambda x: x ** 2 - 1, -12.0, 12.0, 2001, mu, 6), 1e-9, 2)
    plus = refine_until(SpectralProblem(lambda x: x ** 2 + 1, -12.0, 12.0, 2001, mu, 5), 1e-9, 2)
    iso = float(np.max(np.abs(plus.eigenvalues - minus.eigenvalues[1:6])))
    F = linear_superpotential(omega)
    ratio = {}
    for n in (801, 1601):
        g = Grid(-10.0, 10.0, n)
        phi0 = ground_state_from_superpotential(F, mu, g)
        ratio[n] = (apply_lowering(F, mu, phi0).max_abs() / phi0.max_abs(), g.h)
    order = float(np.log2(ratio[801][0] / ratio[1601][0]))
    bounded = all(r <= h ** 2 for r, h in ratio.values())
    ok = iso <= 1e-4 and 1.8 <= order <= 2.2 and bounded
    record("AC5", ok, f"max |E+_n - E-_(n+1)| {iso:.1e}, annihilation order {order:.2f}, "
                      f"residual <= h^2: {bounded}")


def scan(tmp_path, name, args):
    out = tmp_path / name
    assert run(["scan", *args, "--no-banner", "--out", str(out)]) == 0
    lines = [ln for ln in out.read_text().splitlines() if not ln.startswith("#")]
    return np.array([[float(v) for v in ln.split(",")] for ln in lines[1:]])


def test_ac6_figure_sweeps(tmp_path):
    t0 = time.perf_counter()
    q = scan(tmp_path, "fig1.csv", ["--var", "q", "--from", "0.1", "--to", "3", "--steps", "59"])
    v = scan(tmp_path, "fig3.csv", ["--var", "V0", "--from", "20", "--to", "80", "--steps", "61",
                                    "--q", "1.5", "--a", "0.65"])
    dt = time.perf_counter() - t0
    q_mono = bool(np.all(np.diff(q[:, 1:], axis=0) > 0) and np.all(q[:, 1:] < 0))
    v_mono = bool(np.all(np.diff(v[:, 1:], axis=0) < 0))
    bad = [f"{name} {row[0]:g}" for name, tab in (("q", q), ("V0", v)) for row in tab
           if not np.all(np.diff(row[1:]) > 0)]
    ordered = not bad
    first = f" (first violation at {bad[0]}, {len(bad)} points)" if bad else ""
    record("AC6", q_mono and v_mono and ordered and dt <= 5,
           f"q monotone {q_mono}, V0 monotone {v_mono}, E0<E1<E2<E3 everywhere {ordered}{first}, "
           f"{dt:.2f} s")


def test_ac7_errata(tmp_path):
    out = tmp_path / "verify.json"
    code = run(["verify", "--no-banner", "--out", str(out)])
    errata = {e["location"]: e for e in json.loads(out.read_text())["errata"]}
    needed = [errata.get("Eq 5.9"), errata.get("Eq 5.17")]
    have = all(e is not None and np.isfinite(e["printed_residual"]) and e["printed_residual"] > 0
               for e in needed)
    lit = tmp_path / "literal.json"
    lit_code = run(["verify", "--no-banner", "--G2-override=-1.5384615384615385,0", "--out", str(lit)])
    match = next(c for c in json.loads(lit.read_text())["checks"] if c["name"] == "matching_conditions")
    ok = code == 0 and have and lit_code == 1 and match["value"] > 0
    record("AC7", ok, f"Eq 5.9 and Eq 5.17 errata with printed residuals: {have}; literal G2 "
                      f"residual {match['value']:.3g}, exit {lit_code}")


COMMANDS = [
    ["spectrum", "--n-levels", "4"],
    ["scan", "--var", "q", "--from", "0.1", "--to", "3", "--steps", "30"],
    ["verify"],
    ["wavefunction", "--convention", "standard", "--branch", "plus", "--c", "100", "--q", "1.5"],
    ["reduce"],
]


def test_ac8_determinism(tmp_path):
    same = []
    for i, args in enumerate(COMMANDS):
        outs = []
        for k in range(2):
            path = tmp_path / f"{i}-{k}.out"
            assert run([*args, "--no-banner", "--out", str(path)]) == 0
            outs.append(path.read_bytes())
        same.append(outs[0] == outs[1])
    record("AC8", all(same), f"{sum(same)}/{len(same)} commands byte-identical across two runs")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
