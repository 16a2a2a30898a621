"""Compiled inner loops for the eigenvalue oracle."""
import numba
import numpy as np


@numba.njit(cache=True)
def sturm_count(d, e2, x, pivmin):
    """Number of eigenvalues of the symmetric tridiagonal (d, e) below x.

    e2[i] = e[i]**2 couples rows i and i+1.
    """
    n = d.size
    count = 0
    t = d[0] - x
    if abs(t) < pivmin:
        t = -pivmin
    if t < 0:
        count += 1
    for i in range(1, n):
        t = d[i] - x - e2[i - 1] / t
        if abs(t) < pivmin:
            t = -pivmin
        if t < 0:
            count += 1
    return count


@numba.njit(cache=True)
def bisect_eigenvalues(d, e2, k, lo, hi, abstol, pivmin):
    """Lowest k eigenvalues by bisection on the Sturm count.

    Returns (eigenvalues, bracket widths).
    """
    vals = np.empty(k)
    widths = np.empty(k)
    for j in range(k):
        a = lo
        b = hi
        # smallest x with count(x) > j brackets eigenvalue j
        for _ in range(200):
            mid = 0.5 * (a + b)
            if b - a <= abstol or mid == a or mid == b:
                break
            if sturm_count(d, e2, mid, pivmin) > j:
                b = mid
            else:
                a = mid
        vals[j] = 0.5 * (a + b)
        widths[j] = b - a
        lo = a  # eigenvalue j+1 is not below eigenvalue j
    return vals, widths


@numba.njit(cache=True)
def hessenberg_qr_eigvals(H, max_sweeps):
    """All eigenvalues of an upper Hessenberg complex matrix by explicitly
    shifted QR with Givens rotations, Wilkinson shifts and deflation.

    H is overwritten. Returns (eigenvalues, sweeps, converged).
    """
    n = H.shape[0]
    eig = np.empty(n, dtype=np.complex128)
    cs = np.empty(n, dtype=np.complex128)
    sn = np.empty(n, dtype=np.complex128)
    eps = 2.220446049250313e-16
    hi = n - 1
    sweeps = 0
    its = 0
    while hi >= 0:
        if hi == 0:
            eig[0] = H[0, 0]
            break
        # look for a negligible subdiagonal entry
        lo = 0
        for l in range(hi, 0, -1):
            scale = abs(H[l, l]) + abs(H[l - 1, l - 1])
            if scale == 0.0:
                scale = 1.0
            if abs(H[l, l - 1]) <= eps * scale:
                H[l, l - 1] = 0.0
                lo = l
                break
        if lo == hi:
            eig[hi] = H[hi, hi]
            hi -= 1
            its = 0
            continue
        if sweeps >= max_sweeps:
            return eig, sweeps, False
        sweeps += 1
        its += 1
        # Wilkinson shift from the trailing 2x2 block
        a = H[hi - 1, hi - 1]
        b = H[hi - 1, hi]
        c = H[hi, hi - 1]
        dd = H[hi, hi]
        if its % 11 == 10:
            sigma = dd + 0.75 * abs(c)  # exceptional shift
        else:
            tr2 = 0.5 * (a + dd)
            disc = np.sqrt((0.5 * (a - dd)) ** 2 + b * c)
            s1 = tr2 + disc
            s2 = tr2 - disc
            sigma = s1 if abs(s1 - dd) <= abs(s2 - dd) else s2
        for i in range(lo, hi + 1):
            H[i, i] -= sigma
        # H - sigma I = QR on the active window
        for k in range(lo, hi):
            x = H[k, k]
            y = H[k + 1, k]
            r = np.sqrt(abs(x) ** 2 + abs(y) ** 2)
            if r == 0.0:
                cs[k] = 1.0
                sn[k] = 0.0
                continue
            c_ = x / r
            s_ = y / r
            cs[k] = c_
            sn[k] = s_
            for j in range(k, hi + 1):
                t1 = H[k, j]
                t2 = H[k + 1, j]
                H[k, j] = np.conj(c_) * t1 + np.conj(s_) * t2
                H[k + 1, j] = -s_ * t1 + c_ * t2
        # RQ
        for k in range(lo, hi):
            c_ = cs[k]
            s_ = sn[k]
            for i in range(lo, k + 2):
                t1 = H[i, k]
                t2 = H[i, k + 1]
                H[i, k] = c_ * t1 + s_ * t2
                H[i, k + 1] = -np.conj(s_) * t1 + np.conj(c_) * t2
        for i in range(lo, hi + 1):
            H[i, i] += sigma
    return eig, sweeps, True
