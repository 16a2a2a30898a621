"""Finite-difference eigenvalue oracle for -mu^2 d^2/dx^2 + V(x) with Dirichlet
ends.

Real potentials go through Sturm-sequence bisection on the symmetric
tridiagonal matrix; complex ones through shifted QR on the (already
Hessenberg) complex-symmetric tridiagonal. Both are independent of the
closed-form SUSY results they are used to check.
"""
from __future__ import annotations

import enum
import os
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.linalg import solve_banded

from . import _kernels
from .core import Grid, InvalidGridError, PsusyError, SampledFunction, norm

DEFAULT_QR_CAP = 1200
REAL_THRESHOLD = 1e-8
_EPS = np.finfo(float).eps


class WrongSolverError(PsusyError):
    pass


class QRNonconvergenceError(PsusyError):
    def __init__(self, sweeps: int):
        self.sweeps = sweeps
        super().__init__(f"QR iteration did not converge after {sweeps} sweeps")


class SizeCapError(PsusyError):
    pass


class Method(enum.Enum):
    CLOSED_FORM = "closed-form"
    ORACLE_REAL = "oracle-real"
    ORACLE_COMPLEX = "oracle-complex"


@dataclass(frozen=True, eq=False)
class TridiagonalHamiltonian:
    """Interior-node matrix: diagonal 2 mu^2/h^2 + V_i, off-diagonal -mu^2/h^2."""

    grid: Grid
    diagonal: np.ndarray
    off_diagonal: float
    hermitian_flag: bool
    mu: float = 1.0

    @property
    def size(self) -> int:
        return self.diagonal.size

    def matvec(self, v: np.ndarray) -> np.ndarray:
        out = self.diagonal * v
        out[:-1] += self.off_diagonal * v[1:]
        out[1:] += self.off_diagonal * v[:-1]
        return out

    def dense(self) -> np.ndarray:
        n = self.size
        H = np.diag(self.diagonal.astype(complex))
        idx = np.arange(n - 1)
        H[idx, idx + 1] = self.off_diagonal
        H[idx + 1, idx] = self.off_diagonal
        return H


@dataclass(eq=False)
class SpectrumResult:
    eigenvalues: np.ndarray
    method: Method
    grid_meta: tuple[int, float]
    convergence_estimate: np.ndarray
    numerically_real: np.ndarray | None = None
    vectors: list[SampledFunction] | None = None
    warnings: list[str] = field(default_factory=list)
    # filled by refine_until
    raw: np.ndarray | None = None
    converged: bool | None = None
    history: list[tuple[int, np.ndarray]] = field(default_factory=list)
    order_estimate: np.ndarray | None = None

    def __len__(self):
        return self.eigenvalues.size


def _sort_order(vals: np.ndarray) -> np.ndarray:
    return np.lexsort((vals.imag, vals.real))


def discretize(V: SampledFunction, mu: float) -> TridiagonalHamiltonian:
    grid = V.grid
    if grid.n_points < 5:
        raise InvalidGridError("the oracle needs at least 5 nodes")
    h = grid.h
    inner = V.values[1:-1]
    diag = 2 * mu ** 2 / h ** 2 + inner
    hermitian = bool(np.all(np.abs(inner.imag) <= 1e-14))
    if hermitian:
        diag = diag.real.astype(float)
    return TridiagonalHamiltonian(grid, np.array(diag), -mu ** 2 / h ** 2, hermitian, mu)


def _embed(H: TridiagonalHamiltonian, v: np.ndarray) -> SampledFunction:
    full = np.zeros(H.grid.n_points, dtype=complex)
    full[1:-1] = v
    k = np.argmax(np.abs(full))
    full *= abs(full[k]) / full[k]  # fix the global phase
    f = SampledFunction(H.grid, full)
    return f / norm(f)


def inverse_iteration(H: TridiagonalHamiltonian, lam: complex, iterations: int = 3) -> np.ndarray:
    """Eigenvector for ``lam`` by shifted inverse iteration (interior nodes)."""
    n = H.size
    scale = max(abs(H.off_diagonal), float(np.max(np.abs(H.diagonal))))
    shift = lam + 64 * _EPS * scale
    dtype = float if (H.hermitian_flag and np.isreal(lam)) else complex
    if dtype is float:
        shift = float(np.real(shift))
    ab = np.zeros((3, n), dtype=dtype)
    ab[0, 1:] = H.off_diagonal
    ab[1] = H.diagonal - shift
    ab[2, :-1] = H.off_diagonal
    v = np.random.default_rng(12345).standard_normal(n).astype(dtype)
    for _ in range(iterations):
        v = solve_banded((1, 1), ab, v, check_finite=False)
        v /= np.max(np.abs(v))
    return v


def eigen_real(H: TridiagonalHamiltonian, k: int, vectors: bool = False) -> SpectrumResult:
    """Lowest ``k`` eigenvalues by Sturm bisection."""
    if not H.hermitian_flag:
        raise WrongSolverError("potential has an imaginary part; use eigen_complex")
    if not 1 <= k <= H.size:
        raise ValueError(f"k must be in [1, {H.size}], got {k}")
    d = np.ascontiguousarray(H.diagonal, dtype=float)
    e = abs(H.off_diagonal)
    e2 = np.full(H.size - 1, e * e)
    lo = float(d.min() - 2 * e)
    hi = float(d.max() + 2 * e)
    abstol = 2 * _EPS * max(abs(lo), abs(hi))
    pivmin = np.finfo(float).tiny * max(1.0, e * e)
    vals, widths = _kernels.bisect_eigenvalues(d, e2, k, lo, hi, abstol, pivmin)
    res = SpectrumResult(vals.astype(complex), Method.ORACLE_REAL,
                         (H.grid.n_points, H.grid.h), widths.copy(),
                         numerically_real=np.ones(k, dtype=bool))
    if vectors:
        res.vectors = [_embed(H, inverse_iteration(H, lam)) for lam in vals]
    return res


def count_below(H: TridiagonalHamiltonian, x: float) -> int:
    """Sturm count of eigenvalues below ``x`` (real potentials only)."""
    if not H.hermitian_flag:
        raise WrongSolverError("Sturm counts need a real potential")
    e = abs(H.off_diagonal)
    e2 = np.full(H.size - 1, e * e)
    pivmin = np.finfo(float).tiny * max(1.0, e * e)
    return int(_kernels.sturm_count(np.ascontiguousarray(H.diagonal, dtype=float), e2, float(x), pivmin))


def qr_size_cap() -> int:
    return int(os.environ.get("PSUSY_MAX_QR_SIZE", DEFAULT_QR_CAP))


def eigen_complex(H: TridiagonalHamiltonian, vectors: bool = False,
                  real_threshold: float = REAL_THRESHOLD) -> SpectrumResult:
    """All eigenvalues via shifted Hessenberg QR (dense, O(n^3))."""
    cap = qr_size_cap()
    if H.size > cap:
        raise SizeCapError(f"matrix size {H.size} exceeds the QR cap {cap} (PSUSY_MAX_QR_SIZE)")
    return _qr_spectrum(H.dense(), H.grid, real_threshold, H if vectors else None)


def eigenvalues_hessenberg(A: np.ndarray) -> np.ndarray:
    """Eigenvalues of a small dense upper Hessenberg matrix, sorted (Re, Im)."""
    A = np.array(A, dtype=complex)
    if A.shape[0] == 1:
        return A[0]
    if np.any(np.abs(np.tril(A, -2)) > 0):
        raise ValueError("matrix is not upper Hessenberg")
    vals, sweeps, ok = _kernels.hessenberg_qr_eigvals(A, 30 * A.shape[0])
    if not ok:
        raise QRNonconvergenceError(sweeps)
    return vals[_sort_order(vals)]


def _qr_spectrum(A, grid, real_threshold, H=None) -> SpectrumResult:
    anorm = float(np.max(np.sum(np.abs(A), axis=0)))
    vals, sweeps, ok = _kernels.hessenberg_qr_eigvals(A, 30 * A.shape[0])
    if not ok:
        raise QRNonconvergenceError(sweeps)
    vals = vals[_sort_order(vals)]
    real = np.abs(vals.imag) <= real_threshold * (1 + np.abs(vals.real))
    res = SpectrumResult(vals, Method.ORACLE_COMPLEX, (grid.n_points, grid.h),
                         np.full(vals.size, _EPS * anorm), numerically_real=real)
    if H is not None:
        res.vectors = [_embed(H, inverse_iteration(H, lam)) for lam in vals]
    return res


def eigenvector_residual(H: TridiagonalHamiltonian, lam: complex, psi: SampledFunction) -> float:
    """||H v - lam v||_inf / ||v||_inf on the interior nodes."""
    v = psi.values[1:-1]
    return float(np.max(np.abs(H.matvec(v.copy()) - lam * v)) / np.max(np.abs(v)))


def _edge_leak(psi: SampledFunction, check_left: bool) -> float:
    mag = np.abs(psi.values)
    m = max(2, psi.grid.n_points // 50)
    right = mag[-m - 1:-1].max()
    left = mag[1:m + 1].max() if check_left else 0.0
    return max(left, right) / mag.max()


def bound_states(V: Callable[[np.ndarray], np.ndarray], grid: Grid, mu: float,
                 count: int | None = None, *, half_line: bool = False,
                 vectors: bool = True) -> SpectrumResult:
    """Eigenpairs below the right-hand asymptote of V.

    The asymptote is the mean of Re V over the last 5% of nodes. With
    ``half_line`` the left end is a physical wall (psi(x_min) = 0) and is not
    checked for decay.
    """
    Vs = SampledFunction.from_callable(grid, V)
    tail = max(1, grid.n_points // 20)
    limit = float(np.mean(Vs.real[-tail:]))
    H = discretize(Vs, mu)
    if H.hermitian_flag:
        k = count_below(H, limit)
        if count is not None:
            k = min(k, count)
        if k == 0:
            return SpectrumResult(np.empty(0, complex), Method.ORACLE_REAL,
                                  (grid.n_points, grid.h), np.empty(0), vectors=[])
        res = eigen_real(H, k, vectors=vectors)
    else:
        res = eigen_complex(H, vectors=False)
        keep = res.eigenvalues.real < limit
        res.eigenvalues = res.eigenvalues[keep][:count]
        res.convergence_estimate = res.convergence_estimate[keep][:count]
        res.numerically_real = res.numerically_real[keep][:count]
        if vectors:
            res.vectors = [_embed(H, inverse_iteration(H, lam)) for lam in res.eigenvalues]
    if res.vectors:
        for n, psi in enumerate(res.vectors):
            leak = _edge_leak(psi, check_left=not half_line)
            if leak > 1e-6:
                res.warnings.append(
                    f"level {n}: |psi| near the boundary is {leak:.2g} of its peak; domain too small")
    return res


@dataclass(frozen=True)
class SpectralProblem:
    """-mu^2 psi'' + V psi on [x_min, x_max] with ``count`` lowest levels."""

    V: Callable[[np.ndarray], np.ndarray]
    x_min: float
    x_max: float
    n_points: int
    mu: float = 1.0
    count: int = 5

    def solve(self, n_points: int) -> SpectrumResult:
        grid = Grid(self.x_min, self.x_max, n_points)
        H = discretize(SampledFunction.from_callable(grid, self.V), self.mu)
        if H.hermitian_flag:
            return eigen_real(H, self.count)
        res = eigen_complex(H)
        res.eigenvalues = res.eigenvalues[:self.count]
        res.convergence_estimate = res.convergence_estimate[:self.count]
        res.numerically_real = res.numerically_real[:self.count]
        return res


def refine_until(problem: SpectralProblem, target_tol: float, max_doublings: int = 4) -> SpectrumResult:
    """Halve h until the Richardson-extrapolated eigenvalues stop moving.

    The returned eigenvalues are the extrapolated (4 E_h - E_2h)/3 values;
    ``raw`` holds the finest-grid values and ``history`` every grid's.
    ``convergence_estimate`` is the last change of the extrapolated values
    (the raw change while only two grids exist).
    """
    if not 0 <= max_doublings <= 6:
        raise ValueError("max_doublings must be between 0 and 6")
    n = problem.n_points
    first = problem.solve(n)
    history = [(n, first.eigenvalues)]
    method = first.method
    extrap_prev = None
    estimate = np.full(len(first), np.inf)
    best = first.eigenvalues
    raw_changes = []
    for _ in range(max_doublings):
        n = 2 * n - 1
        res = problem.solve(n)
        method = res.method
        prev = history[-1][1]
        m = min(prev.size, res.eigenvalues.size)
        cur = res.eigenvalues[:m]
        prev = prev[:m]
        history.append((n, res.eigenvalues))
        raw_changes.append(np.abs(cur - prev))
        extrap = (4 * cur - prev) / 3
        if extrap_prev is None:
            estimate = raw_changes[-1]
        else:
            k = min(extrap.size, extrap_prev.size)
            estimate = np.abs(extrap[:k] - extrap_prev[:k])
            extrap = extrap[:k]
        best = extrap
        extrap_prev = extrap
        if np.all(estimate < target_tol):
            break
    order = None
    if len(raw_changes) >= 2:
        k = min(raw_changes[-1].size, raw_changes[-2].size)
        with np.errstate(divide="ignore", invalid="ignore"):
            order = np.log2(raw_changes[-2][:k] / raw_changes[-1][:k])
    k = min(best.size, estimate.size)
    best = best[:k]
    finest = history[-1][1][:k]
    result = SpectrumResult(best, method, (n, (problem.x_max - problem.x_min) / (n - 1)),
                            np.asarray(estimate[:k], dtype=float),
                            raw=finest, converged=bool(np.all(estimate[:k] < target_tol)),
                            history=history, order_estimate=order)
    if not result.converged:
        result.warnings.append(
            f"not converged to {target_tol:g} after {len(history) - 1} doublings")
    if order is not None and np.any(order[np.isfinite(order)] < 1.5):
        result.warnings.append("observed convergence order below 1.5 (non-smooth potential?)")
    return result
