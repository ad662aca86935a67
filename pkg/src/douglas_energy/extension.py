"""Extensions of boundary data into the unit ball and the kernels behind them.

Fields are evaluated on batches: points are arrays of shape (N, n) and
hypercomplex values come back as coefficient arrays (N, 2**m).  Two algebra
frames are used: the Clifford frame puts x into Cl(0, n-1) as the paravector
x0 + sum x_k e_k, the quaternion frame (n = 4) puts x into Cl(0, 2) as
x0 + x1 e1 + x2 e2 + x3 e1e2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import clifford as cl
from .harmonics import (
    BoundaryFunction,
    Polynomial,
    SpectralCoefficients,
    harmonic_basis,
    monomial_exponents,
    solid_polynomial,
)
from .quadrature import (
    QuadratureRule,
    evaluate_on,
    graded_panels,
    householder_to,
    polar_template,
)
from .special import gegenbauer_all, surface_area

DEFAULT_MARGIN = 1e-3
DEFAULT_STEP = 1e-4
RADIAL_ORDER = 64


class UnsupportedInput(ValueError):
    """Input outside what an extension route can represent."""


# ---------------------------------------------------------------- frames


@dataclass(frozen=True)
class Frame:
    """How coordinates of R^n sit inside Cl(0, m): x_i multiplies blade units[i]."""

    n: int
    m: int
    units: tuple[int, ...]
    name: str

    def embed(self, points: np.ndarray) -> np.ndarray:
        points = np.asarray(points, dtype=float)
        out = np.zeros(points.shape[:-1] + (1 << self.m,))
        for i, mask in enumerate(self.units):
            out[..., mask] += points[..., i]
        return out

    def embed_conj(self, vectors: np.ndarray) -> np.ndarray:
        """v0 - sum_{i>=1} v_i unit_i."""
        v = np.array(vectors, dtype=float, copy=True)
        v[..., 1:] *= -1.0
        return self.embed(v)


def clifford_frame(n: int) -> Frame:
    if n < 2:
        raise ValueError("n must be >= 2")
    return Frame(n, n - 1, cl.paravector_units(n), f"Cl(0,{n - 1})")


QUATERNION_FRAME = Frame(4, 2, cl.QUATERNION_UNITS, "H=Cl(0,2)")


@dataclass(frozen=True)
class BallPoint:
    coords: tuple[float, ...]

    def __init__(self, coords):
        object.__setattr__(self, "coords", tuple(float(c) for c in coords))

    @property
    def n(self) -> int:
        return len(self.coords)

    @property
    def r(self) -> float:
        return math.sqrt(sum(c * c for c in self.coords))

    @property
    def direction(self) -> np.ndarray:
        r = self.r
        if r == 0.0:
            raise ValueError("direction undefined at the origin")
        return np.asarray(self.coords) / r

    def array(self) -> np.ndarray:
        return np.asarray(self.coords, dtype=float)


def _as_points(x, n: int | None = None) -> tuple[np.ndarray, bool]:
    if isinstance(x, BallPoint):
        x = x.array()
    arr = np.asarray(x, dtype=float)
    single = arr.ndim == 1
    arr = np.atleast_2d(arr)
    if n is not None and arr.shape[1] != n:
        raise ValueError(f"points must have {n} coordinates, got {arr.shape[1]}")
    return arr, single


@dataclass(frozen=True, eq=False)
class MonogenicField:
    """A hypercomplex field F on the ball, left-monogenic by construction.

    ``polynomial`` marks evaluators that are polynomial in x and may be
    evaluated slightly outside the closed ball (finite-difference stencils).
    """

    frame: Frame
    evaluator: Callable[[np.ndarray], np.ndarray]
    provenance: str
    polynomial: bool = False
    source: object = None

    @property
    def n(self) -> int:
        return self.frame.n

    @property
    def m(self) -> int:
        return self.frame.m

    def __call__(self, points) -> np.ndarray:
        pts, single = _as_points(points, self.n)
        out = self.evaluator(pts)
        return out[0] if single else out

    def at(self, point) -> cl.Multivector:
        return cl.Multivector(self.m, self(np.asarray(point, dtype=float)))


# ---------------------------------------------------------------- harmonic


def poisson_extend(coeffs: SpectralCoefficients, x):
    """Harmonic extension U(x) = sum b_{k,j} r^k y_{k,j}(xi) of band-limited data."""
    pts, single = _as_points(x, coeffs.n)
    out = solid_polynomial(coeffs)(pts)
    return float(out[0]) if single else out


def gradient_extension(coeffs: SpectralCoefficients, x):
    pts, single = _as_points(x, coeffs.n)
    out = solid_polynomial(coeffs).gradient(pts)
    return out[0] if single else out


def poisson_kernel(n: int, r: float, xi, eta):
    """(1/omega) (1 - r^2) / |eta - r xi|^n, broadcast over rows of xi and eta."""
    if not 0.0 <= r < 1.0:
        raise ValueError(f"r must lie in [0, 1), got {r!r}")
    xi = np.asarray(xi, dtype=float)
    eta = np.asarray(eta, dtype=float)
    d2 = np.sum((eta - r * xi) ** 2, axis=-1)
    out = (1.0 - r * r) / d2 ** (n / 2.0) / surface_area(n)
    return out if np.ndim(out) else float(out)


# ---------------------------------------------------------------- lemma route


def _dbar_of_gradient(frame: Frame, grad: np.ndarray) -> np.ndarray:
    # Dbar U = (d0 U - sum_k unit_k dk U) / 2 for real U
    return 0.5 * frame.embed_conj(grad)


def _lemma_evaluator(poly: Polynomial, frame: Frame, power: int, order: int):
    s, w = np.polynomial.legendre.leggauss(order)
    s = (s + 1.0) / 2.0
    w = w / 2.0 * s**power
    grads = [poly.derivative(i) for i in range(frame.n)]

    def block(pts: np.ndarray) -> np.ndarray:
        xq = frame.embed(pts)  # (N, 2^m)
        scaled = s[:, None, None] * pts[None, :, :]  # (S, N, n)
        g = np.stack([d(scaled) for d in grads], axis=-1)  # (S, N, n)
        dbar = _dbar_of_gradient(frame, g)
        prod = cl.geometric_product(dbar, xq[None, :, :], frame.m)
        out = 2.0 * np.tensordot(w, prod, axes=(0, 0))
        out[:, 0] = poly(pts)
        return out

    return _chunked(block, 1 << frame.m)


def _chunked(block: Callable[[np.ndarray], np.ndarray], width: int, size: int = 1024):
    def evaluate(pts: np.ndarray) -> np.ndarray:
        out = np.empty((pts.shape[0], width))
        for start in range(0, pts.shape[0], size):
            out[start : start + size] = block(pts[start : start + size])
        return out

    return evaluate


def lemma_field(
    coeffs: SpectralCoefficients, frame: Frame | None = None, order: int = RADIAL_ORDER
) -> MonogenicField:
    """F(x) = U(x) + 2 NSc int_0^1 s^(n-2) Dbar U(s x) x ds in the given frame.

    With the quaternion frame (n = 4) this is the left-regular extension
    with weight s^2 and the non-real part.
    """
    frame = frame or clifford_frame(coeffs.n)
    if frame.n != coeffs.n:
        raise ValueError("frame and spectrum dimensions differ")
    if coeffs.n < 3 and frame.m < 1:
        raise UnsupportedInput("hypercomplex extension needs n >= 2")
    poly = solid_polynomial(coeffs)
    if order <= (poly.degree + coeffs.n) // 2:
        raise UnsupportedInput("radial order too low for exact integration")
    ev = _lemma_evaluator(poly, frame, coeffs.n - 2, order)
    return MonogenicField(frame, ev, "lemma_integral", polynomial=True, source=coeffs)


def _require_band_limited(U) -> SpectralCoefficients:
    if isinstance(U, SpectralCoefficients):
        return U
    if isinstance(U, BoundaryFunction) and U.exact_spectrum is not None:
        return U.exact_spectrum
    raise UnsupportedInput("extension routes need a band-limited spectrum")


def quat_regular_extend(U_coeffs, q, order: int = RADIAL_ORDER):
    """Left-regular quaternionic extension of harmonic U on B_4 (values in Cl(0,2))."""
    coeffs = _require_band_limited(U_coeffs)
    if coeffs.n != 4:
        raise UnsupportedInput("the quaternionic route needs n = 4")
    return lemma_field(coeffs, QUATERNION_FRAME, order)(q)


def clifford_monogenic_extend_lemma(U_coeffs, x, n: int | None = None, order: int = RADIAL_ORDER):
    coeffs = _require_band_limited(U_coeffs)
    if n is not None and n != coeffs.n:
        raise ValueError("n does not match the spectrum")
    if coeffs.n < 3:
        raise UnsupportedInput("the Clifford route needs n >= 3")
    return lemma_field(coeffs, clifford_frame(coeffs.n), order)(x)


# ---------------------------------------------------------------- gradient-potential route


def _harmonic_primitive(poly_k: Polynomial, n: int, k: int) -> Polynomial:
    """Homogeneous harmonic h of degree k+1 with d h / d x0 = poly_k (least squares)."""
    monos = monomial_exponents(n, k + 1)
    target = {e: c for e, c in poly_k.terms.items()}
    rows_d0 = monomial_exponents(n, k)
    rows_lap = monomial_exponents(n, k - 1)
    ri = {e: i for i, e in enumerate(rows_d0)}
    li = {e: i for i, e in enumerate(rows_lap)}
    A = np.zeros((len(rows_d0) + len(rows_lap), len(monos)))
    for c, e in enumerate(monos):
        if e[0] >= 1:
            f = (e[0] - 1,) + e[1:]
            A[ri[f], c] += e[0]
        for i in range(n):
            if e[i] >= 2:
                f = list(e)
                f[i] -= 2
                A[len(rows_d0) + li[tuple(f)], c] += e[i] * (e[i] - 1)
    b = np.zeros(A.shape[0])
    for e, c in target.items():
        b[ri[e]] = c
    sol, *_ = np.linalg.lstsq(A, b, rcond=None)
    resid = np.abs(A @ sol - b).max() if b.size else 0.0
    if resid > 1e-9 * max(1.0, np.abs(b).max(initial=0.0)):
        raise RuntimeError(f"no harmonic primitive found (residual {resid:.3g})")
    return Polynomial(n, np.array(monos, dtype=np.int64).reshape(-1, n), sol)


def gradient_potential_field(coeffs: SpectralCoefficients, frame: Frame | None = None) -> MonogenicField:
    """Paravector-valued monogenic F = 2 Dbar h with h harmonic and d h/d x0 = U.

    Its components solve the Riesz system, so |Dbar F| = |grad U| pointwise.
    """
    frame = frame or clifford_frame(coeffs.n)
    n = coeffs.n
    h = Polynomial.zero(n)
    for k, b in coeffs.values.items():
        if not np.any(b):
            continue
        basis = harmonic_basis(n, k)
        uk = Polynomial(n, basis.exps, b @ basis.matrix)
        h = h + _harmonic_primitive(uk, n, k)
    grads = [h.derivative(i) for i in range(n)]

    def evaluate(pts: np.ndarray) -> np.ndarray:
        g = np.stack([d(pts) for d in grads], axis=-1)
        return frame.embed_conj(g)

    return MonogenicField(frame, evaluate, "gradient_potential", polynomial=True, source=coeffs)


# ---------------------------------------------------------------- kernels


def _bivector_factor(frame: Frame, xi: np.ndarray, eta: np.ndarray) -> np.ndarray:
    """conj(eta) xi - xi . eta for paravector-embedded unit vectors."""
    m = frame.m
    prod = cl.geometric_product(cl.conjugate(frame.embed(eta), m), frame.embed(xi), m)
    prod[..., 0] -= np.sum(xi * eta, axis=-1)
    return prod


def _radial_panels(r: float, per_panel: int) -> tuple[np.ndarray, np.ndarray]:
    # four panels graded toward rho = r, where the integrand can peak
    edges = r * np.array([0.0, 0.75, 0.9375, 0.984375, 1.0])
    x, w = np.polynomial.legendre.leggauss(per_panel)
    lo, hi = edges[:-1, None], edges[1:, None]
    rho = ((hi - lo) / 2.0 * x + (hi + lo) / 2.0).ravel()
    wts = ((hi - lo) / 2.0 * w).ravel()
    return rho, wts


def conjugate_bracket(n: int, r: float, t, order: int = RADIAL_ORDER) -> np.ndarray:
    """Scalar factor (1/omega)[2/|eta - r xi|^n - (n-2) r^(1-n) I(r,t)] r of Q_r."""
    t = np.asarray(t, dtype=float)
    rho, w = _radial_panels(r, max(1, order // 4))
    q = 1.0 - 2.0 * rho[:, None] * t.reshape(1, -1) + rho[:, None] ** 2
    integral = (w[:, None] * rho[:, None] ** (n - 2) / q ** (n / 2.0)).sum(axis=0)
    d = (1.0 - 2.0 * r * t.reshape(-1) + r * r) ** (n / 2.0)
    bracket = 2.0 / d - (n - 2) / r ** (n - 1) * integral
    return (r * bracket / surface_area(n)).reshape(t.shape)


def conjugate_poisson_kernel(n: int, r: float, xi, eta, order: int = RADIAL_ORDER) -> np.ndarray:
    """Q_r(eta, xi) with values in Cl(0, n-1), shape (..., 2**(n-1))."""
    if not 0.0 < r < 1.0:
        raise ValueError(f"r must lie in (0, 1), got {r!r}")
    if n < 3:
        raise UnsupportedInput("the hypercomplex kernels need n >= 3")
    frame = clifford_frame(n)
    xi = np.asarray(xi, dtype=float)
    eta = np.asarray(eta, dtype=float)
    xi, eta = np.broadcast_arrays(xi, eta)
    t = np.sum(xi * eta, axis=-1)
    return conjugate_bracket(n, r, t, order)[..., None] * _bivector_factor(frame, xi, eta)


def schwarz_kernel(n: int, r: float, xi, eta, order: int = RADIAL_ORDER) -> np.ndarray:
    """S_r = P_r + Q_r; at r = 0 only the scalar 1/omega remains."""
    if n < 3:
        raise UnsupportedInput("the hypercomplex kernels need n >= 3")
    xi = np.asarray(xi, dtype=float)
    eta = np.asarray(eta, dtype=float)
    xi, eta = np.broadcast_arrays(xi, eta)
    if r == 0.0:
        out = np.zeros(xi.shape[:-1] + (1 << (n - 1),))
        out[..., 0] = 1.0 / surface_area(n)
        return out
    out = conjugate_poisson_kernel(n, r, xi, eta, order)
    out[..., 0] += poisson_kernel(n, r, xi, eta)
    return out


def zonal_monogenic(n: int, k: int, sign: str, xi, eta) -> np.ndarray:
    """C^+_{n,k} (sign '+') or C^-_{n,k} (sign '-') at paravector-embedded xi, eta.

    C^+_{n,k} = (n+k-2)/(n-2) C_k^{(n-2)/2}(t) + C_{k-1}^{n/2}(t) B
    C^-_{n,k} = (k+1)/(n-2) C_{k+1}^{(n-2)/2}(t) - C_k^{n/2}(t) B
    with t = xi . eta and B = conj(eta) xi - t.
    """
    if n < 3:
        raise UnsupportedInput("zonal monogenics need n >= 3")
    if k < 0:
        raise ValueError("k must be >= 0")
    frame = clifford_frame(n)
    xi = np.asarray(xi, dtype=float)
    eta = np.asarray(eta, dtype=float)
    xi, eta = np.broadcast_arrays(xi, eta)
    t = np.sum(xi * eta, axis=-1)
    lam = (n - 2) / 2.0
    cs = gegenbauer_all(k + 1, lam, t)
    cv = gegenbauer_all(k + 1, n / 2.0, t)
    B = _bivector_factor(frame, xi, eta)
    if sign == "+":
        scalar = (n + k - 2) / (n - 2) * cs[k]
        vec = cv[k - 1] if k >= 1 else np.zeros_like(t)
    elif sign == "-":
        scalar = (k + 1) / (n - 2) * cs[k + 1]
        vec = -cv[k]
    else:
        raise ValueError("sign must be '+' or '-'")
    out = vec[..., None] * B
    out[..., 0] += scalar
    return out


def abel_kernel_sums(n: int, r: float, xi, eta, K: int) -> tuple[np.ndarray, np.ndarray]:
    """Partial Abel sums of P_r and Q_r over |k| <= K.

    P = (1/omega) sum_{|k|<=K} r^|k| P^(k),
    Q = (1/omega) [sum_{k=1..K} k/(n+k-2) r^k P^(k) - sum_{k=-K..-1} r^|k| P^(k)],
    where P^(k) = C^+_{n,k} for k >= 0 and C^-_{n,|k|-1} for k <= -1.
    """
    if not 0.0 <= r < 1.0:
        raise ValueError("r must lie in [0, 1)")
    if K > 200:
        raise ValueError("K is capped at 200")
    omega = surface_area(n)
    xi = np.asarray(xi, dtype=float)
    eta = np.asarray(eta, dtype=float)
    xi, eta = np.broadcast_arrays(xi, eta)
    P = zonal_monogenic(n, 0, "+", xi, eta)
    Q = np.zeros_like(P)
    for k in range(1, K + 1):
        rk = r**k
        plus = zonal_monogenic(n, k, "+", xi, eta)
        minus = zonal_monogenic(n, k - 1, "-", xi, eta)
        P = P + rk * (plus + minus)
        Q = Q + rk * (k / (n + k - 2) * plus - minus)
    P /= omega
    Q /= omega
    return P[..., 0], Q


# ---------------------------------------------------------------- Schwarz integral


def _polar_edges(r: float) -> np.ndarray:
    return graded_panels(max(1.0 - r, 1e-3) / 2.0)


def schwarz_extend(
    u: BoundaryFunction,
    x,
    rule: QuadratureRule | None = None,
    *,
    points_per_panel: int = 16,
    direction_degree: int | None = None,
    order: int = RADIAL_ORDER,
):
    """F(x) = integral of u(eta) S_r(eta, xi) over the sphere.

    With ``rule=None`` each target gets a polar rule centred on its own
    direction, panels graded toward the pole at the kernel's width (1 - r).
    """
    n = u.n
    if n < 3:
        raise UnsupportedInput("the Schwarz integral needs n >= 3")
    pts, single = _as_points(x, n)
    frame = clifford_frame(n)
    out = np.zeros((pts.shape[0], 1 << frame.m))
    deg = direction_degree or (2 * (u.degree or 6) + 4)
    for i, p in enumerate(pts):
        r = float(np.linalg.norm(p))
        if r >= 1.0:
            raise ValueError("Schwarz integral needs interior points")
        if r < 1e-14:
            nodes, weights = _rule_or_polar(n, rule, np.eye(n)[0], 0.0, points_per_panel, deg)
            vals = evaluate_on(u.evaluator, nodes)
            out[i, 0] = np.sum(weights * vals) / surface_area(n)
            continue
        xi = p / r
        nodes, weights = _rule_or_polar(n, rule, xi, r, points_per_panel, deg)
        vals = evaluate_on(u.evaluator, nodes)
        kern = schwarz_kernel(n, r, xi[None, :], nodes, order)
        out[i] = np.tensordot(weights * vals, kern, axes=(0, 0))
    return out[0] if single else out


def _rule_or_polar(n, rule, xi, r, points_per_panel, degree):
    if rule is not None:
        return rule.nodes, rule.weights
    tpl = polar_template(n, _polar_edges(r), points_per_panel, degree)
    local, weights = tpl.local_nodes()
    return householder_to(xi[None, :])(local)[0], weights


def schwarz_field(u: BoundaryFunction, rule: QuadratureRule | None = None, **kw) -> MonogenicField:
    frame = clifford_frame(u.n)
    return MonogenicField(
        frame, lambda pts: schwarz_extend(u, pts, rule, **kw), "schwarz_integral", source=u
    )


def zonal_series_field(coeffs: SpectralCoefficients, rule: QuadratureRule) -> MonogenicField:
    """F = (1/omega) sum_k (n+2k-2)/(n+k-2) r^k int C^+_{n,k}(xi, eta) u(eta) dS."""
    n = coeffs.n
    if n < 3:
        raise UnsupportedInput("zonal monogenic series needs n >= 3")
    frame = clifford_frame(n)
    U = solid_polynomial(coeffs)
    u_nodes = U(rule.nodes)
    omega = surface_area(n)

    def evaluate(pts: np.ndarray) -> np.ndarray:
        r = np.linalg.norm(pts, axis=1)
        xi = np.where(r[:, None] > 0, pts / np.where(r > 0, r, 1.0)[:, None], np.eye(n)[0])
        out = np.zeros((pts.shape[0], 1 << frame.m))
        for k in range(coeffs.K + 1):
            c = zonal_monogenic(n, k, "+", xi[:, None, :], rule.nodes[None, :, :])
            integ = np.tensordot(c, rule.weights * u_nodes, axes=(1, 0))
            out += ((n + 2 * k - 2) / (n + k - 2) * r**k / omega)[:, None] * integ
        return out

    if rule.polynomial_exactness < 2 * coeffs.K + 1:
        raise UnsupportedInput("rule not exact enough for the zonal series")
    return MonogenicField(frame, evaluate, "zonal_series", polynomial=True, source=coeffs)


# ---------------------------------------------------------------- Dirac operators


def partials(F: MonogenicField, x, step: float = DEFAULT_STEP, check_clearance: bool = True):
    """Central differences dF/dx_i, shape (N, n, 2**m)."""
    pts, single = _as_points(x, F.n)
    if check_clearance and not F.polynomial:
        if np.any(np.linalg.norm(pts, axis=1) + step >= 1.0):
            raise ValueError("finite-difference stencil leaves the open ball")
    N, n = pts.shape
    stencil = np.concatenate([pts[:, None, :] + step * np.eye(n)[None], pts[:, None, :] - step * np.eye(n)[None]], axis=1)
    vals = F.evaluator(stencil.reshape(-1, n)).reshape(N, 2 * n, -1)
    d = (vals[:, :n] - vals[:, n:]) / (2.0 * step)
    return d[0] if single else d


def dirac_apply(F: MonogenicField, x, step: float = DEFAULT_STEP) -> tuple[np.ndarray, np.ndarray]:
    """(DF, Dbar F) by central differences, D = (d0 + sum unit_k dk)/2."""
    pts, single = _as_points(x, F.n)
    if np.any(np.linalg.norm(pts, axis=1) + step >= 1.0) and not F.polynomial:
        raise ValueError("point too close to the boundary for the stencil")
    d = partials(F, pts, step, check_clearance=False)  # (N, n, 2^m)
    m = F.m
    units = np.zeros((F.n, 1 << m))
    for i, mask in enumerate(F.frame.units):
        units[i, mask] = 1.0
    left = cl.geometric_product(units[None, :, :], d, m)  # unit_i * dF/dx_i
    D = 0.5 * left.sum(axis=1)
    Dbar = 0.5 * (left[:, 0] - left[:, 1:].sum(axis=1))
    if single:
        return D[0], Dbar[0]
    return D, Dbar
