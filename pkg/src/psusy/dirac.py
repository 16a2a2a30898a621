"""Reduction of the 1D Dirac equation with a (possibly complex) potential nu(x)
to a Schroedinger-like problem for the combination Phi = u1 + i*u2.

The two spinor components obey

    u1' + (eps - nu) u2 + M u2 = 0
    u2' - (eps - nu) u1 + M u1 = 0

and Phi, chi = u1 -/+ i u2 decouple into -Phi'' + U Phi = 0 with

    U = 2 eps nu - nu**2 - i nu' - eps**2 + M**2 .
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from .core import (
    Grid,
    GridMismatchError,
    MasslessError,
    PhysicalConfig,
    SampledFunction,
    derivative,
    require_same_grid,
)


@dataclass(frozen=True)
class SpinorPair:
    u1: SampledFunction
    u2: SampledFunction

    def __post_init__(self):
        require_same_grid(self.u1, self.u2)


@dataclass(frozen=True)
class CombinedPair:
    phi: SampledFunction
    chi: SampledFunction

    def __post_init__(self):
        require_same_grid(self.phi, self.chi)


class ChiRecovery(NamedTuple):
    chi: SampledFunction
    first_order_residual: float   # ||Phi' + iM chi - i(eps - nu) Phi||
    second_order_residual: float  # ||chi' - iM Phi + i(eps - nu) chi||, interior nodes


def combine_spinors(s: SpinorPair) -> CombinedPair:
    u1, u2 = s.u1.values, s.u2.values
    return CombinedPair(s.u1.with_values(u1 + 1j * u2), s.u1.with_values(u1 - 1j * u2))


def split_spinors(c: CombinedPair) -> SpinorPair:
    phi, chi = c.phi.values, c.chi.values
    return SpinorPair(c.phi.with_values((phi + chi) / 2), c.phi.with_values((phi - chi) / 2j))


def _sample_nu(nu, grid: Grid | None, nu_prime=None) -> tuple[SampledFunction, SampledFunction]:
    if isinstance(nu, SampledFunction):
        if grid is not None and grid != nu.grid:
            raise GridMismatchError(f"nu is tabulated on {nu.grid}, not {grid}")
        sampled = nu
    else:
        if grid is None:
            raise ValueError("a grid is required when nu is given as a callable")
        sampled = SampledFunction.from_callable(grid, nu)
    if nu_prime is not None:
        return sampled, SampledFunction.from_callable(sampled.grid, nu_prime)
    return sampled, derivative(sampled)


def effective_potential(nu: SampledFunction | Callable, cfg: PhysicalConfig, *,
                        grid: Grid | None = None,
                        nu_prime: Callable | None = None) -> SampledFunction:
    """U(x) = 2 eps nu - nu^2 - i nu' - eps^2 + M^2.

    ``nu`` may be tabulated (nu' by finite differences) or a callable; with a
    callable, pass ``grid`` and optionally the exact derivative ``nu_prime``.
    """
    nu_s, dnu = _sample_nu(nu, grid, nu_prime)
    eps, M = cfg.epsilon, cfg.M
    v = nu_s.values
    return nu_s.with_values(2 * eps * v - v ** 2 - 1j * dnu.values - eps ** 2 + M ** 2)


def standard_form(nu: SampledFunction | Callable, cfg: PhysicalConfig, *,
                  grid: Grid | None = None,
                  nu_prime: Callable | None = None) -> tuple[SampledFunction, complex]:
    """Rewrite -Phi'' + U Phi = 0 as -mu^2 Phi'' + W Phi = E Phi.

    One exact rearrangement (divide by M^2, move the constant to the right):
    W = mu^2 (2 eps nu - nu^2 - i nu'), E = mu^2 (eps^2 - M^2). Other splits
    of the constant are equally valid.
    """
    nu_s, dnu = _sample_nu(nu, grid, nu_prime)
    mu2 = cfg.mu ** 2
    eps = cfg.epsilon
    v = nu_s.values
    W = nu_s.with_values(mu2 * (2 * eps * v - v ** 2 - 1j * dnu.values))
    return W, complex(mu2 * (eps ** 2 - cfg.M ** 2))


def recover_chi(phi: SampledFunction, nu: SampledFunction, cfg: PhysicalConfig) -> ChiRecovery:
    """Solve Phi' = -iM chi + i(eps - nu) Phi for chi and report both
    first-order residuals (the second vanishes only if Phi solves the
    reduced equation). chi' differentiates a derivative, so its residual
    skips the two nodes at each end where the one-sided stencils compound."""
    require_same_grid(phi, nu)
    if cfg.M == 0:
        raise MasslessError("M = 0")
    eps, M = cfg.epsilon, cfg.M
    w = eps - nu.values
    dphi = derivative(phi).values
    chi = phi.with_values((w * phi.values + 1j * dphi) / M)
    r1 = np.max(np.abs(dphi + 1j * M * chi.values - 1j * w * phi.values))
    r2 = np.abs(derivative(chi).values - 1j * M * phi.values + 1j * w * chi.values)
    r2 = np.max(r2[2:-2]) if r2.size > 4 else np.max(r2)
    return ChiRecovery(chi, float(r1), float(r2))


def dirac_residual(s: SpinorPair, nu: SampledFunction, cfg: PhysicalConfig) -> tuple[float, float]:
    """Max-norm residuals of the two first-order spinor equations."""
    require_same_grid(s.u1, s.u2, nu)
    eps, M = cfg.epsilon, cfg.M
    w = eps - nu.values
    u1, u2 = s.u1.values, s.u2.values
    r1 = derivative(s.u1).values + w * u2 + M * u2
    r2 = derivative(s.u2).values - w * u1 + M * u1
    return float(np.max(np.abs(r1))), float(np.max(np.abs(r2)))
