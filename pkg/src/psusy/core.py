"""Grids, tabulated complex functions and the small numerical toolkit shared by
every other module (differentiation, quadrature, parameter records).

Units are hbar = c = 1 throughout.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.integrate import cumulative_trapezoid, trapezoid


class PsusyError(Exception):
    """Base class for all library errors."""


class InvalidGridError(PsusyError, ValueError):
    pass


class GridMismatchError(PsusyError, ValueError):
    pass


class MasslessError(PsusyError, ValueError):
    pass


class NonNormalizableError(PsusyError):
    """Raised when a candidate bound state does not decay toward an open end."""

    def __init__(self, direction: str, message: str | None = None):
        self.direction = direction
        super().__init__(message or f"state is not normalizable: grows toward the {direction}")


class DegenerateParameterError(PsusyError, ValueError):
    def __init__(self, message: str, level: int | None = None):
        self.level = level
        super().__init__(message)


@dataclass(frozen=True)
class Grid:
    """Uniform 1D grid; node i sits at ``x_min + i*h``."""

    x_min: float
    x_max: float
    n_points: int

    def __post_init__(self):
        if int(self.n_points) != self.n_points or self.n_points < 3:
            raise InvalidGridError(f"need at least 3 nodes, got {self.n_points}")
        if not (np.isfinite(self.x_min) and np.isfinite(self.x_max)) or self.x_max <= self.x_min:
            raise InvalidGridError(f"invalid interval [{self.x_min}, {self.x_max}]")
        object.__setattr__(self, "x_min", float(self.x_min))
        object.__setattr__(self, "x_max", float(self.x_max))
        object.__setattr__(self, "n_points", int(self.n_points))

    @property
    def h(self) -> float:
        return (self.x_max - self.x_min) / (self.n_points - 1)

    @property
    def x(self) -> np.ndarray:
        return self.x_min + self.h * np.arange(self.n_points)

    def refined(self) -> "Grid":
        """Same interval with the spacing halved (old nodes are kept)."""
        return Grid(self.x_min, self.x_max, 2 * self.n_points - 1)

    @classmethod
    def parse(cls, text: str) -> "Grid":
        """Parse ``MIN:MAX:N``."""
        try:
            lo, hi, n = text.split(":")
            return cls(float(lo), float(hi), int(n))
        except ValueError as exc:
            if isinstance(exc, InvalidGridError):
                raise
            raise InvalidGridError(f"grid must look like MIN:MAX:N, got {text!r}") from None


@dataclass(frozen=True, eq=False)
class SampledFunction:
    """Complex values tabulated on a :class:`Grid`."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        vals = np.array(self.values, dtype=complex)
        if vals.ndim == 0:
            vals = np.full(self.grid.n_points, complex(vals))
        if vals.shape != (self.grid.n_points,):
            raise InvalidGridError(
                f"expected {self.grid.n_points} values, got shape {vals.shape}"
            )
        if not np.all(np.isfinite(vals)):
            raise ValueError("sampled values must be finite")
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)

    @classmethod
    def from_callable(cls, grid: Grid, f: Callable[[np.ndarray], np.ndarray]) -> "SampledFunction":
        return cls(grid, np.broadcast_to(f(grid.x), (grid.n_points,)))

    @property
    def x(self) -> np.ndarray:
        return self.grid.x

    @property
    def real(self) -> np.ndarray:
        return self.values.real

    @property
    def imag(self) -> np.ndarray:
        return self.values.imag

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.values)))

    def with_values(self, values) -> "SampledFunction":
        return SampledFunction(self.grid, values)

    def _other(self, other):
        if isinstance(other, SampledFunction):
            require_same_grid(self, other)
            return other.values
        return other

    def __add__(self, other):
        return self.with_values(self.values + self._other(other))

    __radd__ = __add__

    def __sub__(self, other):
        return self.with_values(self.values - self._other(other))

    def __rsub__(self, other):
        return self.with_values(self._other(other) - self.values)

    def __mul__(self, other):
        return self.with_values(self.values * self._other(other))

    __rmul__ = __mul__

    def __truediv__(self, other):
        return self.with_values(self.values / self._other(other))

    def __neg__(self):
        return self.with_values(-self.values)


def require_same_grid(*fs: SampledFunction) -> Grid:
    grid = fs[0].grid
    for f in fs[1:]:
        if f.grid != grid:
            raise GridMismatchError(f"grid mismatch: {grid} vs {f.grid}")
    return grid


@dataclass(frozen=True)
class PhysicalConfig:
    """Mass and energy of the Dirac problem; ``mu`` is the inverse mass."""

    M: float
    epsilon: complex = 0.0
    mu: float = field(init=False)

    def __post_init__(self):
        if self.M == 0:
            raise MasslessError("M = 0: the spinor reduction divides by the mass")
        if self.M < 0:
            raise ValueError(f"mass must be positive, got {self.M}")
        object.__setattr__(self, "mu", 1.0 / self.M)


@dataclass(frozen=True)
class DwsParams:
    """Deformed Woods-Saxon parameters (depth, diffuseness, deformation, centre,
    squared-term coupling, mass number)."""

    V0: float
    a: float
    q: float
    X0: float
    c: float = 0.0
    A0: float | None = None

    def __post_init__(self):
        if self.a <= 0:
            raise ValueError(f"diffuseness must be positive, got a={self.a}")
        if self.q <= 0:
            raise ValueError(f"deformation must be positive, got q={self.q}")
        if self.X0 <= 0:
            raise ValueError(f"centre must be positive, got X0={self.X0}")
        if not (np.isreal(self.V0) and np.isreal(self.c)):
            raise ValueError("V0 and c must be real")

    @property
    def alpha(self) -> float:
        return 1.0 / self.a

    @classmethod
    def from_mass_number(cls, A0: float = 40.0, *, a: float = 0.65, q: float = 1.0,
                         c: float = 0.0, V0: float | None = None,
                         X0: float | None = None, r0: float = 1.25) -> "DwsParams":
        """Nuclear defaults: ``V0 = 40.5 + 0.13*A0`` and ``X0 = r0*A0**(1/3)``."""
        if V0 is None:
            V0 = 40.5 + 0.13 * A0
        if X0 is None:
            X0 = r0 * A0 ** (1.0 / 3.0)
        return cls(V0=V0, a=a, q=q, X0=X0, c=c, A0=A0)


def derivative(f: SampledFunction) -> SampledFunction:
    """Second-order finite-difference derivative (one-sided at the ends)."""
    if f.grid.n_points < 3:
        raise InvalidGridError("derivative needs at least 3 nodes")
    return f.with_values(np.gradient(f.values, f.grid.h, edge_order=2))


def integrate(f: SampledFunction) -> complex:
    """Trapezoidal rule over the whole grid."""
    return complex(trapezoid(f.values, dx=f.grid.h))


def cumulative_integral(f: SampledFunction) -> SampledFunction:
    """Running trapezoid from ``x_min``; zero at the first node."""
    return f.with_values(cumulative_trapezoid(f.values, dx=f.grid.h, initial=0.0))


def norm(f: SampledFunction) -> float:
    """L2 norm by the trapezoidal rule."""
    return float(np.sqrt(trapezoid(np.abs(f.values) ** 2, dx=f.grid.h)))


def normalized(f: SampledFunction) -> SampledFunction:
    n = norm(f)
    if n == 0:
        raise ValueError("cannot normalize the zero function")
    return f / n


def inner(f: SampledFunction, g: SampledFunction, *, conjugate: bool = True) -> complex:
    """Trapezoidal <f, g>; ``conjugate=False`` gives the bilinear pairing."""
    require_same_grid(f, g)
    left = np.conj(f.values) if conjugate else f.values
    return complex(trapezoid(left * g.values, dx=f.grid.h))


def overlap(f: SampledFunction, g: SampledFunction) -> float:
    """|<f, g>| / (|f| |g|), insensitive to a global phase."""
    return abs(inner(f, g)) / (norm(f) * norm(g))
