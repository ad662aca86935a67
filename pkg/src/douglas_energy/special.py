"""Gegenbauer and zonal polynomials, dimension counts and the J kernel."""

from __future__ import annotations

import math

import numpy as np

MAX_DEGREE = 512


def _check_n(n: int) -> None:
    if int(n) != n or n < 2:
        raise ValueError(f"dimension must be an integer >= 2, got {n!r}")


def _check_k(k: int) -> None:
    if int(k) != k or k < 0:
        raise ValueError(f"degree must be a non-negative integer, got {k!r}")
    if k > MAX_DEGREE:
        raise ValueError(f"degree {k} exceeds the supported cap {MAX_DEGREE}")


def gegenbauer(k: int, lam: float, t):
    """C_k^lam(t) by the forward three-term recurrence (lam > 0)."""
    _check_k(k)
    if not lam > 0:
        raise ValueError(f"Gegenbauer parameter must be positive, got {lam!r}")
    t = np.asarray(t, dtype=float)
    prev = np.ones_like(t)
    if k == 0:
        return prev if prev.ndim else float(prev)
    cur = 2.0 * lam * t
    for j in range(2, k + 1):
        prev, cur = cur, (2.0 * t * (j + lam - 1.0) * cur - (j + 2.0 * lam - 2.0) * prev) / j
    return cur if cur.ndim else float(cur)


def gegenbauer_all(kmax: int, lam: float, t) -> np.ndarray:
    """Stack C_0^lam(t) .. C_kmax^lam(t) along a new leading axis."""
    _check_k(kmax)
    if not lam > 0:
        raise ValueError(f"Gegenbauer parameter must be positive, got {lam!r}")
    t = np.asarray(t, dtype=float)
    out = np.empty((kmax + 1,) + t.shape)
    out[0] = 1.0
    if kmax >= 1:
        out[1] = 2.0 * lam * t
    for j in range(2, kmax + 1):
        out[j] = (2.0 * t * (j + lam - 1.0) * out[j - 1] - (j + 2.0 * lam - 2.0) * out[j - 2]) / j
    return out


def gegenbauer_at_one(k: int, lam: float) -> float:
    # C_k^lam(1) = Gamma(k + 2 lam) / (k! Gamma(2 lam))
    return math.exp(math.lgamma(k + 2 * lam) - math.lgamma(k + 1) - math.lgamma(2 * lam))


def legendre_pkn(n: int, k: int, t):
    """Zonal polynomial P_k^n normalized so that P_k^n(1) = 1.

    For n = 2 this is the Chebyshev polynomial cos(k arccos t).
    """
    _check_n(n)
    _check_k(k)
    t = np.asarray(t, dtype=float)
    if n == 2:
        out = np.cos(k * np.arccos(np.clip(t, -1.0, 1.0)))
    else:
        lam = (n - 2) / 2.0
        out = np.asarray(gegenbauer(k, lam, t)) / gegenbauer_at_one(k, lam)
    return out if out.ndim else float(out)


def legendre_pkn_all(n: int, kmax: int, t) -> np.ndarray:
    _check_n(n)
    t = np.asarray(t, dtype=float)
    if n == 2:
        theta = np.arccos(np.clip(t, -1.0, 1.0))
        return np.cos(np.arange(kmax + 1).reshape((-1,) + (1,) * t.ndim) * theta)
    lam = (n - 2) / 2.0
    c = gegenbauer_all(kmax, lam, t)
    norms = np.array([gegenbauer_at_one(k, lam) for k in range(kmax + 1)])
    return c / norms.reshape((-1,) + (1,) * t.ndim)


def dim_harmonics(n: int, k: int) -> int:
    """Dimension of the space of degree-k spherical harmonics in n variables.

    Uses (n + 2k - 2)(n + k - 3)! / (k! (n - 2)!), k >= 1.
    """
    _check_n(n)
    _check_k(k)
    if k == 0:
        return 1
    num = (n + 2 * k - 2) * math.factorial(n + k - 3)
    den = math.factorial(k) * math.factorial(n - 2)
    q, r = divmod(num, den)
    assert r == 0
    return q


def surface_area(n: int) -> float:
    """Area omega_{n-1} of the unit sphere S^{n-1} in R^n."""
    _check_n(n)
    return 2.0 * math.pi ** (n / 2.0) / math.gamma(n / 2.0)


def ball_volume(n: int) -> float:
    _check_n(n)
    return math.pi ** (n / 2.0) / math.gamma(n / 2.0 + 1.0)


def cnk(n: int, k: int) -> float:
    """Addition-theorem constant c_{n,k} (equals dim_harmonics(n, k) / omega_{n-1})."""
    _check_n(n)
    _check_k(k)
    omega = surface_area(n)
    if k == 0:
        return 1.0 / omega
    # Gamma(n+k-1) / (k! Gamma(n-1)) in log space
    log_ratio = math.lgamma(n + k - 1) - math.lgamma(k + 1) - math.lgamma(n - 1)
    return (n + 2 * k - 2) / (n + k - 2) * math.exp(log_ratio) / omega


def jkernel(n: int, r: float, t):
    """The kernel J(r, t) whose r -> 1 limit is 2 / (2 sin(theta/2))^n.

    At r = 1 the limit form is used; it is singular on the diagonal t = 1
    and finite at the antipode t = -1.
    """
    _check_n(n)
    t = np.asarray(t, dtype=float)
    if not 0.0 < r <= 1.0:
        raise ValueError(f"r must lie in (0, 1], got {r!r}")
    if r == 1.0:
        if np.any(t >= 1.0) or np.any(t < -1.0):
            raise ValueError("J(1, t) needs -1 <= t < 1 (singular on the diagonal t = 1)")
        s2 = (1.0 - t) / 2.0  # sin^2(theta / 2)
        out = 2.0 / (2.0**n * s2 ** (n / 2.0))
    else:
        r2 = r * r
        r4 = r2 * r2
        num = n * t - (n - 4) * t * r4 - (n + 2) * r2 + (n - 2) * r4 * r2
        den = (1.0 - 2.0 * t * r2 + r4) ** (n / 2.0 + 1.0)
        out = -(r**n) * num / den
    return out if out.ndim else float(out)


def jseries(n: int, r: float, t, K: int):
    """Partial sum -omega * sum_{k=1..K} k r^(2k+n-2) c_{n,k} P_k^n(t)."""
    _check_n(n)
    t = np.asarray(t, dtype=float)
    if K <= 0:
        out = np.zeros_like(t)
        return out if out.ndim else 0.0
    omega = surface_area(n)
    p = legendre_pkn_all(n, K, t)
    total = np.zeros_like(t)
    for k in range(1, K + 1):
        total = total + k * r ** (2 * k + n - 2) * cnk(n, k) * p[k]
    out = -omega * total
    return out if out.ndim else float(out)
