"""First-order factorization machinery: lowering/raising operators, partner
potentials, Riccati and shape-invariance residuals, supercharges and the
Hamiltonian hierarchy.

Three sign conventions are supported because the printed operators and the
printed Riccati forms do not agree with each other:

* ``PAPER_SEC4``: lowering ``mu d + iF``, raising ``-i mu d + F``,
  partners ``V(+/-) = F^2 +/- i mu F' + alpha0``.
* ``STANDARD``: lowering ``mu d + F``, raising the Hermitian adjoint
  ``-mu d + conj(F)``, partners ``V(-/+) = F^2 -/+ mu F' + alpha0``.
* ``TRANSPOSE_ADJOINT``: as ``STANDARD`` but the raising operator is the
  formal transpose ``-mu d + F`` (no conjugation), which keeps the algebra
  exact for complex F.

:func:`factorization_audit` measures which of them actually reproduces
``-mu^2 d^2 + V``.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable, NamedTuple, Sequence

import numpy as np

from .core import (
    DegenerateParameterError,
    Grid,
    NonNormalizableError,
    PhysicalConfig,
    SampledFunction,
    cumulative_integral,
    derivative,
    norm,
    require_same_grid,
)


class Convention(enum.Enum):
    PAPER_SEC4 = "paper"
    STANDARD = "standard"
    TRANSPOSE_ADJOINT = "transpose"

    @property
    def kappa(self) -> complex:
        """Coefficient of mu*F' in the lower partner: V- = F^2 - kappa mu F'."""
        return 1j if self is Convention.PAPER_SEC4 else 1.0

    @property
    def lowering_factor(self) -> complex:
        """Lowering operator is ``mu d + lowering_factor * F``."""
        return 1j if self is Convention.PAPER_SEC4 else 1.0

    @classmethod
    def parse(cls, text: "str | Convention") -> "Convention":
        if isinstance(text, Convention):
            return text
        key = text.strip().lower()
        for conv in cls:
            if key in (conv.value, conv.name.lower()):
                return conv
        raise ValueError(f"unknown convention {text!r}")


@dataclass(frozen=True, eq=False)
class Superpotential:
    """Analytic superpotential F(x) with its exact derivative.

    The derivative is checked against central differences of ``eval`` on the
    ``probe`` interval when the object is built.
    """

    eval: Callable[[np.ndarray], np.ndarray]
    eval_deriv: Callable[[np.ndarray], np.ndarray]
    params: Any = None
    probe: tuple[float, float] = (-1.0, 1.0)
    name: str = "F"
    derivative_mismatch: float = field(init=False, default=0.0)

    def __post_init__(self):
        x = np.linspace(self.probe[0], self.probe[1], 2001)
        h = x[1] - x[0]
        fx = np.asarray(self.eval(x), dtype=complex) * np.ones_like(x)
        numeric = np.gradient(fx, h, edge_order=2)
        exact = np.asarray(self.eval_deriv(x), dtype=complex) * np.ones_like(x)
        mismatch = float(np.max(np.abs(numeric - exact)))
        scale = 1.0 + float(np.max(np.abs(exact)))
        if not mismatch <= 1e-4 * scale:
            raise ValueError(
                f"{self.name}: eval_deriv disagrees with the numeric derivative by {mismatch:.3g}"
            )
        object.__setattr__(self, "derivative_mismatch", mismatch)

    def sample(self, grid: Grid) -> SampledFunction:
        return SampledFunction.from_callable(grid, self.eval)

    def sample_deriv(self, grid: Grid) -> SampledFunction:
        return SampledFunction.from_callable(grid, self.eval_deriv)


def linear_superpotential(omega: float = 1.0) -> Superpotential:
    """F(x) = omega*x, the oscillator family."""
    return Superpotential(lambda x: omega * np.asarray(x, dtype=float),
                          lambda x: np.full_like(np.asarray(x, dtype=float), omega),
                          params=omega, name=f"oscillator(omega={omega})")


def constant_superpotential(f0: complex) -> Superpotential:
    return Superpotential(lambda x: np.full(np.shape(x), f0, dtype=complex),
                          lambda x: np.zeros(np.shape(x), dtype=complex),
                          params=f0, name=f"constant({f0})")


# -- operators --------------------------------------------------------------

def apply_lowering(F: Superpotential, mu: float, psi: SampledFunction,
                   conv: Convention = Convention.STANDARD) -> SampledFunction:
    """``mu psi' + iF psi`` (PAPER_SEC4) or ``mu psi' + F psi``."""
    f = F.sample(psi.grid).values
    return psi.with_values(mu * derivative(psi).values + conv.lowering_factor * f * psi.values)


def apply_raising(F: Superpotential, mu: float, psi: SampledFunction,
                  conv: Convention = Convention.STANDARD) -> SampledFunction:
    f = F.sample(psi.grid).values
    dpsi = derivative(psi).values
    if conv is Convention.PAPER_SEC4:
        out = -1j * mu * dpsi + f * psi.values
    elif conv is Convention.STANDARD:
        out = -mu * dpsi + np.conj(f) * psi.values
    else:
        out = -mu * dpsi + f * psi.values
    return psi.with_values(out)


def apply_hamiltonian(V: SampledFunction, mu: float, psi: SampledFunction) -> SampledFunction:
    """``-mu^2 psi'' + V psi`` with psi'' as the composed first derivative."""
    require_same_grid(V, psi)
    d2 = derivative(derivative(psi)).values
    return psi.with_values(-mu ** 2 * d2 + V.values * psi.values)


def partner_potentials(F: Superpotential, mu: float, conv: Convention, alpha0: complex,
                       grid: Grid) -> tuple[SampledFunction, SampledFunction]:
    """Return ``(V-, V+)`` = F^2 -/+ kappa mu F' + alpha0."""
    f = F.sample(grid).values
    df = F.sample_deriv(grid).values
    k = conv.kappa
    base = f ** 2 + alpha0
    return (SampledFunction(grid, base - k * mu * df),
            SampledFunction(grid, base + k * mu * df))


def riccati_residual(F: Superpotential, V: SampledFunction, E0: complex, mu: float,
                     conv: Convention) -> float:
    """max |V - (F^2 - kappa mu F') - E0| on V's grid."""
    v_minus, _ = partner_potentials(F, mu, conv, E0, V.grid)
    return float(np.max(np.abs(V.values - v_minus.values)))


# -- ground states ----------------------------------------------------------

_ENDS = ("left", "right")


def check_normalizable(psi: SampledFunction, open_ends: Iterable[str] = _ENDS,
                       edge_tol: float = 1e-3) -> None:
    """Raise :class:`NonNormalizableError` if |psi| is still large at an open
    end and not decreasing toward it (its norm would grow with the domain)."""
    mag = np.abs(psi.values)
    peak = mag.max()
    bad = []
    for end in open_ends:
        if end not in _ENDS:
            raise ValueError(f"unknown end {end!r}")
        edge, inner_ = (mag[0], mag[1]) if end == "left" else (mag[-1], mag[-2])
        if edge > edge_tol * peak and edge >= inner_ * (1 - 1e-12):
            bad.append(end)
    if bad:
        direction = bad[0] if len(bad) == 1 else "both"
        raise NonNormalizableError(direction)


def _corrected_cumulative(F: Superpotential, grid: Grid) -> np.ndarray:
    """Running trapezoid of F with the Euler-Maclaurin end correction
    (uses the exact F', error O(h^4))."""
    f = F.sample(grid)
    df = F.sample_deriv(grid).values
    return cumulative_integral(f).values - grid.h ** 2 / 12.0 * (df - df[0])


def ground_state_from_superpotential(F: Superpotential, mu: float, grid: Grid,
                                     conv: Convention = Convention.STANDARD, *,
                                     open_ends: Iterable[str] = _ENDS,
                                     edge_tol: float = 1e-3) -> SampledFunction:
    """Normalized kernel of the lowering operator.

    ``exp(-(1/mu) int F)`` for STANDARD/TRANSPOSE_ADJOINT and
    ``exp(-(i/mu) int F)`` for PAPER_SEC4, integrated from ``x_min``.
    """
    if mu <= 0:
        raise ValueError("mu must be positive")
    log_psi = -conv.lowering_factor / mu * _corrected_cumulative(F, grid)
    log_psi = log_psi - np.max(log_psi.real)
    psi = SampledFunction(grid, np.exp(log_psi))
    check_normalizable(psi, open_ends, edge_tol)
    return psi / norm(psi)


# -- audits -----------------------------------------------------------------

def default_test_functions(grid: Grid, count: int = 3, centre: float | None = None,
                           width: float | None = None) -> list[SampledFunction]:
    """Gaussian-damped Hermite-like bumps, max-normalized. By default they sit
    in the middle of the grid with width span/12."""
    x = grid.x
    if centre is None:
        centre = 0.5 * (grid.x_min + grid.x_max)
    if width is None:
        width = (grid.x_max - grid.x_min) / 12.0
    t = (x - centre) / width
    out = []
    for k in range(count):
        v = (t ** k + 0.5j * t ** (k + 1)) * np.exp(-t ** 2 / 2)
        out.append(SampledFunction(grid, v / np.max(np.abs(v))))
    return out


@dataclass(frozen=True)
class AuditEntry:
    convention: Convention
    residual: float


@dataclass(frozen=True)
class FactorizationReport:
    entries: tuple[AuditEntry, ...]  # ascending residual

    @property
    def best(self) -> Convention:
        return self.entries[0].convention

    def residual(self, conv: Convention) -> float:
        for e in self.entries:
            if e.convention is conv:
                return e.residual
        raise KeyError(conv)

    def as_dict(self) -> dict[str, float]:
        return {e.convention.value: e.residual for e in self.entries}


def factorization_audit(F: Superpotential, mu: float, V: SampledFunction, E0: complex,
                        test_functions: Sequence[SampledFunction] | None = None
                        ) -> FactorizationReport:
    """For each convention, max over test functions of
    ||(raise(lower(psi)) + E0 psi) - (-mu^2 psi'' + V psi)||_inf."""
    tests = list(test_functions) if test_functions is not None else default_test_functions(V.grid)
    entries = []
    for conv in Convention:
        worst = 0.0
        for psi in tests:
            lhs = apply_raising(F, mu, apply_lowering(F, mu, psi, conv), conv).values + E0 * psi.values
            rhs = apply_hamiltonian(V, mu, psi).values
            worst = max(worst, float(np.max(np.abs(lhs - rhs))))
        entries.append(AuditEntry(conv, worst))
    entries.sort(key=lambda e: e.residual)
    return FactorizationReport(tuple(entries))


class BlockOperator:
    """2x2 operator matrix acting on spinors (psi1, psi2); ``None`` is zero."""

    def __init__(self, blocks):
        self.blocks = blocks

    def __call__(self, spinor):
        out = []
        for row in self.blocks:
            acc = None
            for op, comp in zip(row, spinor):
                if op is None:
                    continue
                term = op(comp)
                acc = term if acc is None else acc + term
            out.append(acc if acc is not None else spinor[0].with_values(0.0))
        return tuple(out)


@dataclass(frozen=True)
class SuperchargeReport:
    q_squared: float            # max |Q^2 psi|, structurally zero
    qdag_squared: float
    anticommutator: float       # {Q,Q+} vs block-diag(eta+ eta-, eta- eta+)
    hamiltonian_upper: float    # eta+ eta- vs -mu^2 d^2 + V-
    hamiltonian_lower: float    # eta- eta+ vs -mu^2 d^2 + V+


def supercharges(F: Superpotential, mu: float, conv: Convention) -> tuple[BlockOperator, BlockOperator]:
    """Q = [[0, 0], [eta-, 0]] and Q+ = [[0, eta+], [0, 0]]."""
    lower = lambda psi: apply_lowering(F, mu, psi, conv)  # noqa: E731
    raise_ = lambda psi: apply_raising(F, mu, psi, conv)  # noqa: E731
    return BlockOperator([[None, None], [lower, None]]), BlockOperator([[None, raise_], [None, None]])


def supercharge_algebra_check(F: Superpotential, mu: float, grid: Grid,
                              test_functions: Sequence[SampledFunction] | None = None,
                              conv: Convention = Convention.STANDARD) -> SuperchargeReport:
    tests = list(test_functions) if test_functions is not None else default_test_functions(grid)
    Q, Qd = supercharges(F, mu, conv)
    lower = lambda psi: apply_lowering(F, mu, psi, conv)  # noqa: E731
    raise_ = lambda psi: apply_raising(F, mu, psi, conv)  # noqa: E731
    v_minus, v_plus = partner_potentials(F, mu, conv, 0.0, grid)
    worst = dict(q2=0.0, qd2=0.0, anti=0.0, up=0.0, low=0.0)

    def mx(f):
        return float(np.max(np.abs(f.values)))

    for a in tests:
        for b in tests:
            spinor = (a, b)
            worst["q2"] = max(worst["q2"], *map(mx, Q(Q(spinor))))
            worst["qd2"] = max(worst["qd2"], *map(mx, Qd(Qd(spinor))))
            qqd = Q(Qd(spinor))
            qdq = Qd(Q(spinor))
            anti = (qqd[0] + qdq[0], qqd[1] + qdq[1])
            block = (raise_(lower(a)), lower(raise_(b)))
            worst["anti"] = max(worst["anti"], mx(anti[0] - block[0]), mx(anti[1] - block[1]))
        up = raise_(lower(a)) - apply_hamiltonian(v_minus, mu, a)
        low = lower(raise_(a)) - apply_hamiltonian(v_plus, mu, a)
        worst["up"] = max(worst["up"], mx(up))
        worst["low"] = max(worst["low"], mx(low))
    return SuperchargeReport(worst["q2"], worst["qd2"], worst["anti"], worst["up"], worst["low"])


# -- shape invariance and hierarchy ----------------------------------------

class ShapeInvariance(NamedTuple):
    R: complex
    x_variance: float
    map_consistent: bool | None


def shape_invariance_residual(family: Callable[[Any], Superpotential], a1, a2, mu: float,
                              conv: Convention, grid: Grid,
                              param_map: Callable[[Any], Any] | None = None) -> ShapeInvariance:
    """D(x) = V+(x; a1) - V-(x; a2); R is its mean, x_variance the max
    deviation from the mean. Shape invariance holds iff x_variance ~ 0."""
    _, v_plus = partner_potentials(family(a1), mu, conv, 0.0, grid)
    v_minus, _ = partner_potentials(family(a2), mu, conv, 0.0, grid)
    d = v_plus.values - v_minus.values
    R = complex(np.mean(d))
    consistent = None
    if param_map is not None:
        expected = param_map(a1)
        consistent = bool(np.allclose(expected, a2, rtol=1e-12, atol=1e-14))
    return ShapeInvariance(R, float(np.max(np.abs(d - R))), consistent)


@dataclass(frozen=True)
class HierarchyLevel:
    k: int
    params_k: Any
    residual_k: complex
    cumulative_energy: complex


def hierarchy_energies(a1, param_map: Callable[[Any], Any],
                       R_func: Callable[[Any, Any], complex], n_levels: int) -> list[HierarchyLevel]:
    """Iterate a_{k+1} = param_map(a_k); level k carries R(a_{k-1} -> a_k) and
    the ground energy E0^(k) = sum of residuals up to k (zero at level 1)."""
    if n_levels < 1:
        raise ValueError("n_levels must be at least 1")
    levels = [HierarchyLevel(1, a1, 0j, 0j)]
    a_prev, total = a1, 0j
    for k in range(2, n_levels + 1):
        a_k = param_map(a_prev)
        try:
            r = complex(R_func(a_prev, a_k))
        except (ZeroDivisionError, DegenerateParameterError) as exc:
            raise DegenerateParameterError(f"hierarchy level {k}: {exc}", level=k) from exc
        if not np.isfinite(r):
            raise DegenerateParameterError(f"hierarchy level {k}: non-finite residual", level=k)
        total += r
        levels.append(HierarchyLevel(k, a_k, r, total))
        a_prev = a_k
    return levels


# -- potential decomposition ------------------------------------------------

@dataclass(frozen=True)
class DecompositionReport:
    Z: SampledFunction
    derivative_identity_residual: float  # -i mu^2 F'' vs i mu Z'
    cross_term_residual: float           # 2 mu^3 (eps - nu) nu' vs 2 Z F


def decompose_potential_parts(F: Superpotential, nu: SampledFunction,
                              cfg: PhysicalConfig) -> DecompositionReport:
    """Imaginary part Z = -mu F' and the two consistency residuals (diagnostics).

    F'' is a composed derivative, so the first residual skips two end nodes."""
    grid = nu.grid
    mu = cfg.mu
    Z = SampledFunction(grid, -mu * F.sample_deriv(grid).values)
    f = F.sample(grid)
    f2 = derivative(derivative(f)).values
    r45 = np.abs(-1j * mu ** 2 * f2 - 1j * mu * derivative(Z).values)[2:-2]
    dnu = derivative(nu).values
    r46 = np.max(np.abs(2 * mu ** 3 * (cfg.epsilon - nu.values) * dnu - 2 * Z.values * f.values))
    return DecompositionReport(Z, float(np.max(r45)), float(r46))
