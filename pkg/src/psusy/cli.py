"""``psusy`` command line: spectra, parameter scans, verification reports,
wavefunctions and Dirac reductions as CSV/JSON files.

Exit codes: 0 success, 1 verification failure, 2 bad input, 3 solver failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, fields, replace
from datetime import datetime, timezone
from typing import Any

import numpy as np

from . import __version__
from .core import (
    DegenerateParameterError,
    DwsParams,
    Grid,
    NonNormalizableError,
    PhysicalConfig,
    PsusyError,
    SampledFunction,
    norm,
)
from .dirac import effective_potential
from .dws import (
    Branch,
    DwsSuperpotentialParams,
    default_window,
    dws_ground_state,
    dws_potential,
    dws_potential_derivative,
    energy_absolute,
    energy_special_case,
)
from .oracle import (QRNonconvergenceError, SizeCapError, SpectralProblem, WrongSolverError, bound_states,
                     discretize, eigen_real, refine_until)
from .susy import Convention, ground_state_from_superpotential, linear_superpotential
from .verify import verify_dws, verify_oscillator

EXIT_OK, EXIT_VERIFY, EXIT_INPUT, EXIT_SOLVER = 0, 1, 2, 3

COMMANDS = ("spectrum", "scan", "verify", "wavefunction", "reduce")
MODELS = ("dws", "box", "oscillator")
METHODS = ("closed-form", "oracle", "both")


class ConfigError(ValueError):
    pass


# -- configuration ----------------------------------------------------------

def _bool(text) -> bool:
    if isinstance(text, bool):
        return text
    key = str(text).strip().lower()
    if key in ("1", "true", "yes", "on"):
        return True
    if key in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {text!r}")


def _complex_pair(text) -> complex:
    if isinstance(text, complex):
        return text
    parts = str(text).split(",")
    if len(parts) != 2:
        raise ConfigError(f"expected RE,IM, got {text!r}")
    return complex(float(parts[0]), float(parts[1]))


def _grid_spec(text) -> str:
    text = str(text).strip()
    if text != "auto":
        Grid.parse(text)
    return text


def _choice(options):
    def parse(text):
        text = str(text).strip()
        if text not in options:
            raise ConfigError(f"expected one of {', '.join(options)}, got {text!r}")
        return text
    return parse


@dataclass(frozen=True)
class RunConfig:
    model: str = "dws"
    q: float = 1.0
    a: float = 0.65
    V0: float | None = None
    A0: float = 40.0
    c: float = 0.0
    X0: float | None = None
    mu: float = 1.0
    M: float | None = None
    epsilon: float = 0.0
    branch: str = "minus"
    convention: str = "paper"
    G2_override: complex | None = None
    grid: str = "auto"
    half_line: bool = False
    n_levels: int = 4
    method: str | None = None
    formula: str = "auto"
    format: str | None = None
    no_banner: bool = False
    L: float = 1.0
    omega: float = 1.0
    n: int | None = None
    var: str = "q"
    from_: float | None = None
    to: float | None = None
    steps: int = 30

    # -- derived objects
    def dws(self) -> DwsParams:
        return DwsParams.from_mass_number(self.A0, a=self.a, q=self.q, c=self.c,
                                          V0=self.V0, X0=self.X0)

    @property
    def conv(self) -> Convention:
        return Convention.parse(self.convention)

    @property
    def branch_enum(self) -> Branch:
        return Branch.parse(self.branch)

    def resolved(self) -> "RunConfig":
        """Fill model-dependent defaults so the header shows actual numbers."""
        cfg = self
        if cfg.model == "dws":
            p = cfg.dws()
            cfg = replace(cfg, V0=p.V0, X0=p.X0)
        if cfg.M is None:
            cfg = replace(cfg, M=1.0 / cfg.mu)
        return cfg


_TYPES = {
    "model": _choice(MODELS), "q": float, "a": float, "V0": float, "A0": float, "c": float,
    "X0": float, "mu": float, "M": float, "epsilon": float,
    "branch": _choice(("plus", "minus")), "convention": _choice(("paper", "standard", "transpose")),
    "G2_override": _complex_pair, "grid": _grid_spec, "half_line": _bool, "n_levels": int,
    "method": _choice(METHODS), "formula": _choice(("auto", "special", "ladder")),
    "format": _choice(("csv", "json")), "no_banner": _bool, "L": float, "omega": float,
    "n": int, "var": _choice(("q", "a", "V0")), "from_": float, "to": float, "steps": int,
}

# flag spelling of fields whose name differs; config files accept either
_SPELLING = {"G2_override": "G2-override", "half_line": "half-line", "n_levels": "n-levels",
             "no_banner": "no-banner", "from_": "from"}
_FILE_KEYS = {f.name: f.name for f in fields(RunConfig)}
_FILE_KEYS.update({v: k for k, v in _SPELLING.items()})


def read_config_file(path: str) -> dict[str, Any]:
    """Flat ``key = value`` lines; ``#`` starts a comment."""
    out: dict[str, Any] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key=value")
            key, value = (s.strip() for s in line.split("=", 1))
            name = _FILE_KEYS.get(key)
            if name is None:
                raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
            out[name] = _convert(name, value)
    return out


def _convert(name: str, value) -> Any:
    try:
        return _TYPES[name](value)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{name}: {exc}") from None


def build_config(args: argparse.Namespace) -> RunConfig:
    values: dict[str, Any] = {}
    if args.config:
        values.update(read_config_file(args.config))
    for f in fields(RunConfig):
        v = getattr(args, f.name, None)
        if v is not None:
            values[f.name] = _convert(f.name, v)
    return RunConfig(**values)


def header_lines(command: str, cfg: RunConfig) -> list[str]:
    lines = []
    if not cfg.no_banner:
        stamp = datetime.now(timezone.utc).isoformat(timespec="seconds")
        lines.append(f"psusy {__version__} {command} {stamp}")
    for f in fields(RunConfig):
        if f.name == "no_banner":
            continue
        v = getattr(cfg, f.name)
        if v is None:
            continue
        lines.append(f"{_SPELLING.get(f.name, f.name)}={_fmt(v)}")
    return lines


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, complex):
        return f"{v.real!r},{v.imag!r}"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, str):
        return v
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


# -- output -----------------------------------------------------------------

@dataclass
class Table:
    columns: list[str]
    rows: list[list[Any]]
    meta: dict[str, Any]


def render_csv(header: list[str], table: Table) -> str:
    buf = io.StringIO()
    for line in header:
        buf.write(f"# {line}\n")
    for k, v in table.meta.items():
        buf.write(f"# {k}={_fmt(v)}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(table.columns)
    for row in table.rows:
        w.writerow([_cell(v) for v in row])
    return buf.getvalue()


def _json_value(v):
    if isinstance(v, (np.floating, float)):
        return float(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, complex):
        return [v.real, v.imag]
    return v


def render_json(header: list[str], payload: dict) -> str:
    doc = {"header": header, **payload}
    return json.dumps(doc, indent=2, default=_json_value) + "\n"


def emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# -- models -----------------------------------------------------------------

def _grid(cfg: RunConfig) -> Grid:
    if cfg.grid != "auto":
        return Grid.parse(cfg.grid)
    if cfg.model == "dws":
        return Grid(*default_window(cfg.dws(), cfg.half_line), 2001)
    if cfg.model == "box":
        return Grid(0.0, cfg.L, 4001)
    half = 12.0 * np.sqrt(cfg.mu / cfg.omega)
    return Grid(-half, half, 2001)


def _potential(cfg: RunConfig):
    if cfg.model == "dws":
        return dws_potential(cfg.dws())
    if cfg.model == "box":
        return lambda x: np.zeros_like(np.asarray(x, dtype=float))
    w2 = cfg.omega ** 2
    return lambda x: w2 * np.asarray(x, dtype=float) ** 2


def _first_level(cfg: RunConfig) -> int:
    return 1 if cfg.model == "box" else 0


def closed_form_energies(cfg: RunConfig) -> list[complex]:
    n0 = _first_level(cfg)
    levels = range(n0, n0 + cfg.n_levels)
    if cfg.model == "box":
        return [complex(cfg.mu ** 2 * (n * np.pi / cfg.L) ** 2) for n in levels]
    if cfg.model == "oscillator":
        return [complex(cfg.mu * cfg.omega * (2 * n + 1)) for n in levels]
    p = cfg.dws()
    formula = cfg.formula
    if formula == "auto":
        formula = "special" if p.c == 0 and cfg.G2_override is None else "ladder"
    if formula == "special":
        return [complex(energy_special_case(n, p, cfg.mu)) for n in levels]
    return [energy_absolute(n, p, cfg.mu, cfg.branch_enum, matching=cfg.conv,
                            G2=cfg.G2_override) for n in levels]


def oracle_energies(cfg: RunConfig) -> tuple[np.ndarray, np.ndarray]:
    """Richardson-extrapolated levels; DWS levels are limited to bound states."""
    grid = _grid(cfg)
    V = _potential(cfg)
    count = cfg.n_levels
    if cfg.model == "dws":
        count = min(count, len(bound_states(V, grid, cfg.mu, count, half_line=cfg.half_line,
                                            vectors=False)))
        if count == 0:
            return np.empty(0, complex), np.empty(0)
    res = refine_until(SpectralProblem(V, grid.x_min, grid.x_max, grid.n_points, cfg.mu, count),
                       1e-8, 2)
    return res.eigenvalues, np.asarray(res.convergence_estimate, dtype=float)


# -- commands ---------------------------------------------------------------

def cmd_spectrum(cfg: RunConfig) -> tuple[Table, int]:
    method = cfg.method or "both"
    n0 = _first_level(cfg)
    closed = closed_form_energies(cfg) if method in ("closed-form", "both") else None
    orac, est = oracle_energies(cfg) if method in ("oracle", "both") else (None, None)
    rows = []
    for i in range(cfg.n_levels):
        ec = closed[i] if closed is not None else None
        eo = orac[i] if orac is not None and i < len(orac) else None
        delta = abs(ec - eo) if ec is not None and eo is not None else None
        rows.append([n0 + i,
                     None if ec is None else ec.real, None if ec is None else ec.imag,
                     None if eo is None else eo.real, None if eo is None else eo.imag,
                     delta, None if eo is None else est[i]])
    cols = ["n", "E_closed_re", "E_closed_im", "E_oracle_re", "E_oracle_im", "abs_delta",
            "convergence_estimate"]
    return Table(cols, rows, {}), EXIT_OK


def _scan_point(cfg: RunConfig, value: float) -> list[float]:
    p = replace(cfg.dws(), **{cfg.var: value})
    return [energy_special_case(n, p, cfg.mu) for n in range(cfg.n_levels)]


def cmd_scan(cfg: RunConfig) -> tuple[Table, int]:
    if cfg.from_ is None or cfg.to is None:
        raise ConfigError("scan needs --from and --to")
    if not cfg.from_ < cfg.to:
        raise ConfigError("scan needs from < to")
    if cfg.steps < 2:
        raise ConfigError("scan needs steps >= 2")
    values = np.linspace(cfg.from_, cfg.to, cfg.steps)
    base = cfg.dws()
    # validate every point before dispatching
    for v in values:
        replace(base, **{cfg.var: float(v)})
    with ThreadPoolExecutor() as pool:
        results = list(pool.map(lambda v: _scan_point(cfg, float(v)), values))
    rows = [[float(v), *r] for v, r in zip(values, results)]
    cols = ["sweep_value"] + [f"E_{n}" for n in range(cfg.n_levels)]
    return Table(cols, rows, {"sweep_var": cfg.var}), EXIT_OK


def cmd_verify(cfg: RunConfig) -> tuple[dict, int]:
    grid = None if cfg.grid == "auto" else Grid.parse(cfg.grid)
    if cfg.model == "oscillator":
        rep = verify_oscillator(cfg.omega, cfg.mu, n_levels=5, grid=grid)
    elif cfg.model == "dws":
        rep = verify_dws(cfg.dws(), cfg.mu, cfg.branch_enum, cfg.conv, cfg.G2_override, grid,
                         cfg.n_levels, cfg.half_line)
    else:
        raise ConfigError("verify supports the dws and oscillator models")
    return rep.as_dict(), EXIT_OK if rep.ok else EXIT_VERIFY


def _fix_phase(psi: SampledFunction) -> SampledFunction:
    """Make the largest-magnitude sample real and positive."""
    k = int(np.argmax(np.abs(psi.values)))
    ph = psi.values[k] / abs(psi.values[k])
    return psi.with_values(psi.values / ph)


def wavefunction(cfg: RunConfig) -> tuple[SampledFunction, str]:
    grid = _grid(cfg)
    n0 = _first_level(cfg)
    n = n0 if cfg.n is None else cfg.n
    if n < n0:
        raise ConfigError(f"level {n} does not exist for the {cfg.model} model")
    method = cfg.method or ("closed-form" if n == n0 else "oracle")
    if method == "both":
        raise ConfigError("wavefunction takes --method closed-form or oracle")
    ends = ("right",) if cfg.half_line else ("left", "right")
    if method == "closed-form":
        if cfg.model == "box":
            psi = SampledFunction(grid, np.sin(n * np.pi * (grid.x - grid.x_min) / cfg.L))
        elif n != 0:
            raise ConfigError("the closed form is available for n=0 only; use --method oracle")
        elif cfg.model == "oscillator":
            psi = ground_state_from_superpotential(linear_superpotential(cfg.omega), cfg.mu, grid)
        else:
            p = cfg.dws()
            if cfg.G2_override is not None:
                sp = DwsSuperpotentialParams.from_override(p, cfg.mu, cfg.G2_override, cfg.conv)
            else:
                sp = DwsSuperpotentialParams.from_matching(p, cfg.mu, cfg.branch_enum, cfg.conv)
            psi = dws_ground_state(sp, grid, kernel=cfg.conv, open_ends=ends)
    else:
        if cfg.model == "dws":
            res = bound_states(_potential(cfg), grid, cfg.mu, n - n0 + 1, half_line=cfg.half_line)
        else:
            H = discretize(SampledFunction.from_callable(grid, _potential(cfg)), cfg.mu)
            res = eigen_real(H, n - n0 + 1, vectors=True)
        if len(res) <= n - n0:
            raise ConfigError(f"level {n} is not bound on this grid ({len(res)} bound levels)")
        psi = res.vectors[n - n0]
    psi = _fix_phase(psi / norm(psi))
    return psi, method


def cmd_wavefunction(cfg: RunConfig) -> tuple[Table, int]:
    psi, method = wavefunction(cfg)
    v = psi.values
    rows = [[x, z.real, z.imag, abs(z) ** 2] for x, z in zip(psi.grid.x, v)]
    meta = {"method": method, "norm": norm(psi) ** 2}
    return Table(["x", "re_psi", "im_psi", "abs_psi_sq"], rows, meta), EXIT_OK


def cmd_reduce(cfg: RunConfig) -> tuple[Table, int]:
    M = cfg.M if cfg.M is not None else 1.0 / cfg.mu
    phys = PhysicalConfig(M, cfg.epsilon)
    grid = _grid(cfg)
    if cfg.model == "dws":
        p = cfg.dws()
        nu, dnu = dws_potential(p), dws_potential_derivative(p)
    elif cfg.model == "box":
        nu = lambda x: np.zeros_like(x)  # noqa: E731
        dnu = nu
    else:
        w2 = cfg.omega ** 2
        nu = lambda x: w2 * x ** 2  # noqa: E731
        dnu = lambda x: 2 * w2 * x  # noqa: E731
    U = effective_potential(nu, phys, grid=grid, nu_prime=dnu)
    nus = SampledFunction.from_callable(grid, nu).real
    rows = [[x, v, u.real, u.imag] for x, v, u in zip(grid.x, nus, U.values)]
    meta = {"epsilon": phys.epsilon, "M": phys.M, "mu": phys.mu}
    return Table(["x", "nu", "re_U", "im_U"], rows, meta), EXIT_OK


# -- entry point ------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False, allow_abbrev=False)
    a = common.add_argument
    a("--config", help="key=value file; flags override its values")
    a("--model", help="dws (default), box or oscillator")
    for name in ("q", "a", "V0", "A0", "c", "X0", "mu", "M", "epsilon", "L", "omega"):
        a(f"--{name}", type=float, default=None)
    a("--branch", help="plus|minus root of the G2 quadratic")
    a("--convention", help="paper|standard|transpose")
    a("--G2-override", dest="G2_override", metavar="RE,IM")
    a("--grid", help="auto or MIN:MAX:N")
    a("--half-line", dest="half_line", action="store_const", const=True, default=None)
    a("--n-levels", dest="n_levels", type=int, default=None)
    a("--method", help="closed-form|oracle|both")
    a("--formula", help="closed-form energy for dws: auto|special|ladder")
    a("--out", help="output file (default stdout)")
    a("--format", help="csv|json")
    a("--no-banner", dest="no_banner", action="store_const", const=True, default=None)

    parser = argparse.ArgumentParser(prog="psusy", description=__doc__.splitlines()[0],
                                     allow_abbrev=False)
    parser.add_argument("--version", action="version", version=f"psusy {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("spectrum", parents=[common], allow_abbrev=False, help="closed-form and oracle energies")
    scan = sub.add_parser("scan", parents=[common], allow_abbrev=False, help="energy sweep over q, a or V0")
    scan.add_argument("--var", help="q|a|V0")
    scan.add_argument("--from", dest="from_", type=float, default=None)
    scan.add_argument("--to", type=float, default=None)
    scan.add_argument("--steps", type=int, default=None)
    sub.add_parser("verify", parents=[common], allow_abbrev=False, help="audit report with errata (json)")
    wf = sub.add_parser("wavefunction", parents=[common], allow_abbrev=False, help="normalized eigenfunction samples")
    wf.add_argument("--n", type=int, default=None, help="level index")
    sub.add_parser("reduce", parents=[common], allow_abbrev=False, help="effective potential of the Dirac reduction")
    return parser


_HANDLERS = {"spectrum": cmd_spectrum, "scan": cmd_scan, "verify": cmd_verify,
             "wavefunction": cmd_wavefunction, "reduce": cmd_reduce}


def run(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INPUT
    try:
        cfg = build_config(args).resolved()
        result, code = _HANDLERS[args.command](cfg)
        header = header_lines(args.command, cfg)
        fmt = cfg.format or ("json" if args.command == "verify" else "csv")
        if isinstance(result, Table):
            if fmt == "csv":
                text = render_csv(header, result)
            else:
                text = render_json(header, {"meta": result.meta, "columns": result.columns,
                                            "rows": result.rows})
        elif fmt == "json":
            text = render_json(header, result)
        else:
            table = Table(["name", "status", "value", "tolerance"],
                          [[c["name"], c["status"], _scalar(c.get("value")), c.get("tolerance")]
                           for c in result["checks"]], {})
            text = render_csv(header, table)
        emit(text, args.out)
        return code
    except (DegenerateParameterError, NonNormalizableError, QRNonconvergenceError,
            SizeCapError, WrongSolverError) as exc:
        print(f"psusy: solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (ValueError, TypeError, OSError, PsusyError) as exc:
        print(f"psusy: invalid input: {exc}", file=sys.stderr)
        return EXIT_INPUT


def _scalar(v):
    return v if isinstance(v, (int, float)) and not isinstance(v, bool) else None


def main() -> None:
    sys.exit(run())
