"""Deformed Woods-Saxon (DWS) potential and its superpotential solution.

With s(x) = 1/(q + exp(alpha (x - X0))), alpha = 1/a, the potential is

    V(x) = -V0 s + c s^2

and the superpotential ansatz F = -mu (G1 + G2 s) turns the Riccati form
V - E0 = F^2 - kappa mu F' into three polynomial conditions in s:

    mu^2 G1^2 = -E0
    mu^2 (2 G1 G2 - kappa alpha G2) = -V0
    mu^2 (G2^2 + kappa alpha q G2) = c

kappa = i for the PAPER_SEC4 convention, 1 for the real ones. The family is
shape invariant under G2 -> G2 - kappa alpha q, with G1 regarded as the
function G1(a) = (-V0 + c/q)/(2 mu^2 a) - a/(2q) of the running parameter.
"""
from __future__ import annotations

import cmath
import enum
from dataclasses import dataclass

import numpy as np

from .core import DegenerateParameterError, DwsParams, Grid, SampledFunction, norm
from .susy import Convention, Superpotential, check_normalizable


class Branch(enum.Enum):
    PLUS = "plus"
    MINUS = "minus"

    @classmethod
    def parse(cls, text: "str | Branch") -> "Branch":
        if isinstance(text, Branch):
            return text
        return cls(text.strip().lower())


# -- overflow-safe building blocks ------------------------------------------

def _s_terms(x, X0: float, alpha: float, q: float) -> tuple[np.ndarray, np.ndarray]:
    """Return s = 1/(q + e^u) and e^u s^2 with u = alpha (x - X0), without
    overflowing for large |u|."""
    u = alpha * (np.asarray(x, dtype=float) - X0)
    t = np.exp(-np.abs(u))
    pos = u > 0
    # u > 0: s = t/(1 + q t), e^u s^2 = t/(1 + q t)^2
    # u <= 0: s = 1/(q + t),  e^u s^2 = t/(q + t)^2
    denom = np.where(pos, 1.0 + q * t, q + t)
    s = np.where(pos, t, 1.0) / denom
    ys2 = t / denom ** 2
    return s, ys2


def dws_potential(p: DwsParams):
    """V(x) as a vectorized callable returning real values."""
    def V(x):
        s, _ = _s_terms(x, p.X0, p.alpha, p.q)
        return -p.V0 * s + p.c * s ** 2
    return V


def dws_potential_derivative(p: DwsParams):
    """Exact V'(x); s' = -alpha e^u s^2."""
    def dV(x):
        s, ys2 = _s_terms(x, p.X0, p.alpha, p.q)
        ds = -p.alpha * ys2
        return -p.V0 * ds + 2 * p.c * s * ds
    return dV


def default_window(p: DwsParams, half_line: bool = False) -> tuple[float, float]:
    """[max(0, X0 - 10a), X0 + 25a]; the half-line variant starts at 0."""
    lo = 0.0 if half_line else max(0.0, p.X0 - 10 * p.a)
    return lo, p.X0 + 25 * p.a


# -- matching conditions ----------------------------------------------------

def g1_of(a: complex, p: DwsParams, mu: float) -> complex:
    """G1 as a function of the running parameter a (= G2 at level one)."""
    if a == 0:
        raise DegenerateParameterError("G2 = 0 leaves G1 undefined")
    return (-p.V0 + p.c / p.q) / (2 * mu ** 2 * a) - a / (2 * p.q)


def matching_residuals(G1: complex, G2: complex, E0: complex, p: DwsParams, mu: float,
                       convention: Convention = Convention.PAPER_SEC4) -> tuple[float, float, float]:
    """Residuals of the constant, s and s^2 coefficient conditions."""
    k, al, mu2 = convention.kappa, p.alpha, mu ** 2
    return (abs(mu2 * G1 ** 2 + E0),
            abs(mu2 * (2 * G1 * G2 - k * al * G2) + p.V0),
            abs(mu2 * (G2 ** 2 + k * al * p.q * G2) - p.c))


def g2_roots(p: DwsParams, mu: float,
             convention: Convention = Convention.PAPER_SEC4) -> dict[Branch, complex]:
    """Roots of G2^2 + kappa alpha q G2 - c/mu^2 = 0, i.e.
    -kappa alpha q/2 +/- sqrt((kappa alpha q/2)^2 + c/mu^2).

    The smaller root is recovered from the product of roots to avoid
    cancellation.
    """
    b = convention.kappa * p.alpha * p.q
    prod = -p.c / mu ** 2
    d = cmath.sqrt((b / 2) ** 2 - prod)
    plus, minus = -b / 2 + d, -b / 2 - d
    if abs(plus) >= abs(minus):
        minus = prod / plus if plus != 0 else minus
    else:
        plus = prod / minus
    return {Branch.PLUS: complex(plus), Branch.MINUS: complex(minus)}


def solve_matching(p: DwsParams, mu: float, branch: Branch | str = Branch.MINUS,
                   convention: Convention = Convention.PAPER_SEC4) -> tuple[complex, complex, complex]:
    """Return (G1, G2, E0) solving the three matching conditions."""
    branch = Branch.parse(branch)
    G2 = g2_roots(p, mu, convention)[branch]
    scale = p.alpha * p.q + abs(p.c) ** 0.5 / mu
    if abs(G2) <= 1e-14 * scale:
        raise DegenerateParameterError(
            f"branch {branch.value} gives G2 = 0 (c = 0); G1 is undefined, use the other branch")
    G1 = g1_of(G2, p, mu)
    return G1, G2, -mu ** 2 * G1 ** 2


@dataclass(frozen=True)
class DwsSuperpotentialParams:
    G1: complex
    G2: complex
    alpha: float
    q: float
    X0: float
    mu: float
    branch: Branch = Branch.MINUS
    convention: Convention = Convention.PAPER_SEC4
    source: DwsParams | None = None
    E0: complex | None = None

    def __post_init__(self):
        if self.source is not None:
            if abs(self.alpha - self.source.alpha) > 1e-15 * self.source.alpha:
                raise ValueError("alpha must equal 1/a of the source parameters")
            if self.E0 is not None:
                worst = max(self.matching_residuals())
                if worst > 1e-12:
                    raise ValueError(f"(G1, G2, E0) violate the matching conditions by {worst:.3g}")

    def matching_residuals(self) -> tuple[float, float, float]:
        if self.source is None or self.E0 is None:
            raise ValueError("no source parameters to check against")
        return matching_residuals(self.G1, self.G2, self.E0, self.source, self.mu, self.convention)

    @classmethod
    def from_matching(cls, p: DwsParams, mu: float, branch: Branch | str = Branch.MINUS,
                      convention: Convention = Convention.PAPER_SEC4) -> "DwsSuperpotentialParams":
        branch = Branch.parse(branch)
        G1, G2, E0 = solve_matching(p, mu, branch, convention)
        return cls(G1, G2, p.alpha, p.q, p.X0, mu, branch, convention, p, E0)

    @classmethod
    def from_override(cls, p: DwsParams, mu: float, G2: complex,
                      convention: Convention = Convention.PAPER_SEC4) -> "DwsSuperpotentialParams":
        """Impose G2; G1 and E0 follow from the G1(a) relation. The matching
        conditions are generally violated and not checked here."""
        G1 = g1_of(G2, p, mu)
        return cls(G1, complex(G2), p.alpha, p.q, p.X0, mu, Branch.MINUS, convention, p, None)


def dws_superpotential(sp: DwsSuperpotentialParams) -> Superpotential:
    """F = -mu (G1 + G2 s(x)) with F' = mu alpha G2 e^u s^2."""
    def F(x):
        s, _ = _s_terms(x, sp.X0, sp.alpha, sp.q)
        return -sp.mu * (sp.G1 + sp.G2 * s)

    def dF(x):
        _, ys2 = _s_terms(x, sp.X0, sp.alpha, sp.q)
        return sp.mu * sp.alpha * sp.G2 * ys2

    a = 1.0 / sp.alpha
    return Superpotential(F, dF, params=sp, probe=(sp.X0 - 5 * a, sp.X0 + 5 * a), name="dws")


def dws_family(p: DwsParams, mu: float):
    """a -> superpotential with G2 = a and G1 = G1(a)."""
    def family(a):
        sp = DwsSuperpotentialParams(g1_of(a, p, mu), complex(a), p.alpha, p.q, p.X0, mu)
        return dws_superpotential(sp)
    return family


def ground_state_log(sp: DwsSuperpotentialParams, x, *, printed: bool = False) -> np.ndarray:
    """log of G1 x + (G2/(alpha q)) log(e^u/(q + e^u)), the antiderivative of
    G1 + G2 s. ``printed=True`` uses the base e^u/(e^-u + q) instead."""
    x = np.asarray(x, dtype=float)
    u = sp.alpha * (x - sp.X0)
    logq = np.log(sp.q)
    if printed:
        log_base = u - np.logaddexp(-u, logq)
    else:
        log_base = u - np.logaddexp(u, logq)
    return sp.G1 * x + sp.G2 / (sp.alpha * sp.q) * log_base


def dws_ground_state(sp: DwsSuperpotentialParams, grid: Grid, *, printed: bool = False,
                     kernel: Convention = Convention.STANDARD,
                     open_ends=("left", "right")) -> SampledFunction:
    """Closed-form ground state exp(int (G1 + G2 s)), normalized.

    ``kernel=PAPER_SEC4`` multiplies the exponent by i, giving the kernel of
    the lowering operator ``mu d + iF`` instead of ``mu d + F``.
    """
    log_psi = ground_state_log(sp, grid.x, printed=printed)
    if kernel is Convention.PAPER_SEC4:
        log_psi = 1j * log_psi
    log_psi = log_psi - np.max(log_psi.real)
    psi = SampledFunction(grid, np.exp(log_psi))
    check_normalizable(psi, open_ends)
    return psi / norm(psi)


# -- shape invariance and spectrum ------------------------------------------

def shape_step(alpha: float, q: float, convention: Convention = Convention.STANDARD) -> complex:
    return convention.kappa * alpha * q


def parameter_map(G2: complex, alpha: float, q: float,
                  convention: Convention = Convention.STANDARD) -> complex:
    """G2 -> G2 - alpha q (real conventions) or G2 - i alpha q (PAPER_SEC4)."""
    return G2 - shape_step(alpha, q, convention)


def _bracket_sq(a: complex, p: DwsParams, mu: float, level: int | None = None) -> complex:
    try:
        return mu ** 2 * g1_of(a, p, mu) ** 2
    except DegenerateParameterError as exc:
        raise DegenerateParameterError(
            f"degenerate parameter at level {level}: {exc}" if level is not None else str(exc),
            level=level) from None


def residual_R(a1: complex, a2: complex, p: DwsParams, mu: float) -> complex:
    """mu^2 G1(a1)^2 - mu^2 G1(a2)^2."""
    return _bracket_sq(a1, p, mu) - _bracket_sq(a2, p, mu)


def ladder_parameter(n: int, G2: complex, p: DwsParams,
                     ladder: Convention = Convention.STANDARD) -> complex:
    return G2 - n * shape_step(p.alpha, p.q, ladder)


def _ladder_G2(p, mu, branch, matching, G2):
    if G2 is not None:
        return complex(G2)
    return solve_matching(p, mu, branch, matching)[1]


def energy_closed_form(n: int, p: DwsParams, mu: float, branch: Branch | str = Branch.MINUS, *,
                       matching: Convention = Convention.PAPER_SEC4,
                       ladder: Convention = Convention.STANDARD,
                       G2: complex | None = None) -> complex:
    """Ladder energy relative to the hierarchy ground level,

        E_n = mu^2 G1(G2)^2 - mu^2 G1(G2 - n*step)^2,

    so that E_0 = 0 and E_n - E_(n-1) = R(a_n, a_(n+1)). ``matching`` picks
    the quadratic G2 solves, ``ladder`` the shape-invariance step.
    """
    if n < 0:
        raise ValueError("level index must be non-negative")
    G2 = _ladder_G2(p, mu, Branch.parse(branch), matching, G2)
    top = _bracket_sq(G2, p, mu, level=0)
    return top - _bracket_sq(ladder_parameter(n, G2, p, ladder), p, mu, level=n)


def energy_absolute(n: int, p: DwsParams, mu: float, branch: Branch | str = Branch.MINUS, *,
                    matching: Convention = Convention.PAPER_SEC4,
                    ladder: Convention = Convention.STANDARD,
                    G2: complex | None = None) -> complex:
    """-mu^2 G1(G2 - n*step)^2, i.e. the ladder energy shifted by the
    level-one ground energy E0 = -mu^2 G1^2."""
    if n < 0:
        raise ValueError("level index must be non-negative")
    G2 = _ladder_G2(p, mu, Branch.parse(branch), matching, G2)
    return -_bracket_sq(ladder_parameter(n, G2, p, ladder), p, mu, level=n)


def energy_special_case(n: int, p: DwsParams, mu: float) -> float:
    """Closed-form level energy used for the deformation/diffuseness/depth
    sweeps (c = 0 case):

        E_n = -(mu^2/a^2) [ (a^2 V0/(mu^2 q (n+1)))^2 + ((n+1)/2)^2
                             + 2 a V0^2/(mu^2 q^2) ]
    """
    if n < 0:
        raise ValueError("level index must be non-negative")
    a, q, V0, mu2 = p.a, p.q, p.V0, mu ** 2
    m = n + 1
    bracket = (a ** 2 * V0 / (mu2 * q * m)) ** 2 + (m / 2) ** 2 + 2 * a * V0 ** 2 / (mu2 * q ** 2)
    return float(-mu2 / a ** 2 * bracket)
