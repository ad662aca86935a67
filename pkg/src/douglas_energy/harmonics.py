"""Polynomials, orthonormal bases of spherical harmonics, and projections.

A degree-k basis is built from the harmonic projections of the monomials
x^a with a_0 <= 1 (these span H^n_k without redundancy), computed in exact
rational arithmetic, then orthonormalized in L^2(S^{n-1}) with two passes
of Gram-Schmidt against exact monomial moments.
"""

from __future__ import annotations

import csv
import io
import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Iterator

import numpy as np
from scipy.special import gammaln

from .quadrature import MAX_DIM, MIN_DIM, QuadratureRule, evaluate_on, pairwise_sum
from .special import cnk, dim_harmonics, legendre_pkn

MAX_BASIS_DEGREE = 16
_EVAL_CHUNK = 16384


def monomial_exponents(n: int, k: int) -> list[tuple[int, ...]]:
    """All exponent vectors of total degree k, in lexicographic (descending) order."""
    if k < 0:
        return []
    out = []
    for combo in itertools.combinations_with_replacement(range(n), k):
        e = [0] * n
        for i in combo:
            e[i] += 1
        out.append(tuple(e))
    return sorted(set(out), reverse=True)


@dataclass(frozen=True, eq=False)
class Polynomial:
    """Real polynomial in n variables, stored as exponent rows and coefficients."""

    n: int
    exps: np.ndarray
    coeffs: np.ndarray

    def __post_init__(self):
        exps = np.array(self.exps, dtype=np.int64).reshape(-1, self.n)
        coeffs = np.array(self.coeffs, dtype=float).reshape(-1)
        if exps.shape[0] != coeffs.shape[0]:
            raise ValueError("one coefficient per exponent row required")
        exps.setflags(write=False)
        coeffs.setflags(write=False)
        object.__setattr__(self, "exps", exps)
        object.__setattr__(self, "coeffs", coeffs)

    @classmethod
    def from_terms(cls, n: int, terms: dict) -> Polynomial:
        keys = sorted(terms, reverse=True)
        exps = np.array(keys, dtype=np.int64).reshape(-1, n)
        return cls(n, exps, [float(terms[k]) for k in keys])

    @classmethod
    def zero(cls, n: int) -> Polynomial:
        return cls(n, np.zeros((0, n), dtype=np.int64), np.zeros(0))

    @property
    def terms(self) -> dict[tuple[int, ...], float]:
        out: dict[tuple[int, ...], float] = {}
        for e, c in zip(map(tuple, self.exps.tolist()), self.coeffs):
            out[e] = out.get(e, 0.0) + float(c)
        return out

    @property
    def degree(self) -> int:
        return int(self.exps.sum(axis=1).max()) if len(self.coeffs) else 0

    def __add__(self, other: Polynomial) -> Polynomial:
        if other.n != self.n:
            raise ValueError("dimension mismatch")
        merged = self.terms
        for e, c in other.terms.items():
            merged[e] = merged.get(e, 0.0) + c
        return Polynomial.from_terms(self.n, merged)

    def scaled(self, factor: float) -> Polynomial:
        return Polynomial(self.n, self.exps, self.coeffs * factor)

    def monomials(self, points: np.ndarray) -> np.ndarray:
        """Matrix of monomial values, shape (N, T)."""
        points = np.asarray(points, dtype=float)
        if points.shape[-1] != self.n:
            raise ValueError(f"points must have {self.n} coordinates")
        pts = points.reshape(-1, self.n)
        if len(self.coeffs) == 0:
            return np.zeros((pts.shape[0], 0))
        top = int(self.exps.max())
        powers = np.ones((pts.shape[0], self.n, top + 1))
        for e in range(1, top + 1):
            powers[:, :, e] = powers[:, :, e - 1] * pts
        out = powers[:, 0, self.exps[:, 0]]
        for i in range(1, self.n):
            out *= powers[:, i, self.exps[:, i]]
        return out

    def __call__(self, points: np.ndarray) -> np.ndarray:
        points = np.asarray(points, dtype=float)
        if len(self.coeffs) == 0:
            return np.zeros(points.shape[:-1])
        flat = points.reshape(-1, self.n)
        out = np.empty(flat.shape[0])
        for start in range(0, flat.shape[0], _EVAL_CHUNK):
            out[start : start + _EVAL_CHUNK] = self.monomials(flat[start : start + _EVAL_CHUNK]) @ self.coeffs
        return out.reshape(points.shape[:-1])

    def derivative(self, i: int) -> Polynomial:
        e = self.exps[:, i]
        keep = e > 0
        exps = self.exps[keep].copy()
        exps[:, i] -= 1
        return Polynomial(self.n, exps, self.coeffs[keep] * e[keep])

    def gradient(self, points: np.ndarray) -> np.ndarray:
        points = np.asarray(points, dtype=float)
        return np.stack([self.derivative(i)(points) for i in range(self.n)], axis=-1)


@dataclass(frozen=True, eq=False)
class HarmonicPolynomial(Polynomial):
    """Homogeneous harmonic polynomial of degree k (a solid spherical harmonic)."""

    k: int = 0


# ---------------------------------------------------------------- exact algebra


def _laplacian_exact(n: int, poly: dict) -> dict:
    out: dict = {}
    for e, c in poly.items():
        for i in range(n):
            if e[i] >= 2:
                f = list(e)
                f[i] -= 2
                f = tuple(f)
                out[f] = out.get(f, 0) + c * e[i] * (e[i] - 1)
    return {e: c for e, c in out.items() if c != 0}


def _times_r2(n: int, poly: dict) -> dict:
    out: dict = {}
    for e, c in poly.items():
        for i in range(n):
            f = list(e)
            f[i] += 2
            f = tuple(f)
            out[f] = out.get(f, 0) + c
    return out


def harmonic_projection(n: int, alpha: tuple[int, ...]) -> dict:
    """Degree-k harmonic component of x^alpha, exact rational coefficients.

    sum_j (-1)^j |x|^{2j} Lap^j p / (2^j j! prod_{i=1..j} (n + 2k - 2 - 2i)).
    """
    k = sum(alpha)
    result: dict = {}
    lap = {tuple(alpha): Fraction(1)}
    j = 0
    denom = Fraction(1)
    while lap:
        term = lap
        for _ in range(j):
            term = _times_r2(n, term)
        coef = Fraction((-1) ** j) / denom
        for e, c in term.items():
            result[e] = result.get(e, 0) + coef * c
        j += 1
        denom *= 2 * j * (n + 2 * k - 2 - 2 * j)
        lap = _laplacian_exact(n, lap)
    return {e: c for e, c in result.items() if c != 0}


def is_harmonic_exact(n: int, poly: dict) -> bool:
    return not _laplacian_exact(n, poly)


def sphere_moment(alpha) -> float:
    """Integral of x^alpha over S^{n-1} (zero unless every exponent is even)."""
    alpha = np.asarray(alpha)
    if np.any(alpha % 2):
        return 0.0
    b = (alpha + 1) / 2.0
    logv = sum(math.lgamma(x) for x in b) - math.lgamma(b.sum())
    return 2.0 * math.exp(logv)


def sphere_moments(alphas: np.ndarray) -> np.ndarray:
    """Vectorized :func:`sphere_moment` over the trailing exponent axis."""
    alphas = np.asarray(alphas)
    b = (alphas + 1) / 2.0
    logv = gammaln(b).sum(axis=-1) - gammaln(b.sum(axis=-1))
    return np.where(np.any(alphas % 2, axis=-1), 0.0, 2.0 * np.exp(logv))


_PRIME = 2_147_483_647


def _rank_mod_p(rows: list[list[int]]) -> int:
    a = np.array(rows, dtype=np.int64) % _PRIME
    rank = 0
    nrows, ncols = a.shape
    for col in range(ncols):
        piv = None
        for r in range(rank, nrows):
            if a[r, col]:
                piv = r
                break
        if piv is None:
            continue
        a[[rank, piv]] = a[[piv, rank]]
        inv = pow(int(a[rank, col]), _PRIME - 2, _PRIME)
        a[rank] = (a[rank] * inv) % _PRIME
        others = np.flatnonzero(a[:, col])
        others = others[others != rank]
        if others.size:
            factors = a[others, col][:, None]
            a[others] = (a[others] - (factors * a[rank][None, :]) % _PRIME) % _PRIME
        rank += 1
        if rank == nrows:
            break
    return rank


def enumerate_harmonic_dimension(n: int, k: int) -> int:
    """Rank of the harmonic projections of *all* degree-k monomials (brute force)."""
    monos = monomial_exponents(n, k)
    col = {e: i for i, e in enumerate(monos)}
    rows = []
    for alpha in monos:
        proj = harmonic_projection(n, alpha)
        den = math.lcm(*[c.denominator for c in proj.values()]) if proj else 1
        row = [0] * len(monos)
        for e, c in proj.items():
            row[col[e]] = int(c * den) % _PRIME
        rows.append(row)
    return _rank_mod_p(rows)


# ---------------------------------------------------------------- bases


@dataclass(frozen=True, eq=False)
class HarmonicBasis:
    """Orthonormal basis of H^n_k; row j of ``matrix`` holds y_{k,j+1}."""

    n: int
    k: int
    exps: np.ndarray
    matrix: np.ndarray
    _grad: list = field(default_factory=list, repr=False)

    def __len__(self) -> int:
        return self.matrix.shape[0]

    def __iter__(self) -> Iterator[HarmonicPolynomial]:
        for row in self.matrix:
            yield HarmonicPolynomial(self.n, self.exps, row, k=self.k)

    def __getitem__(self, j: int) -> HarmonicPolynomial:
        return HarmonicPolynomial(self.n, self.exps, self.matrix[j], k=self.k)

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        """Values of every basis element, shape (N, dim)."""
        mono = Polynomial(self.n, self.exps, np.zeros(len(self.exps))).monomials(points)
        return mono @ self.matrix.T


def _check_basis_args(n: int, k: int) -> None:
    if int(n) != n or not MIN_DIM <= n <= MAX_DIM:
        raise ValueError(f"supported dimensions are {MIN_DIM}..{MAX_DIM}, got {n!r}")
    if int(k) != k or not 0 <= k <= MAX_BASIS_DEGREE:
        raise ValueError(f"degree must be in 0..{MAX_BASIS_DEGREE}, got {k!r}")


@lru_cache(maxsize=None)
def harmonic_basis(n: int, k: int) -> HarmonicBasis:
    """Deterministic orthonormal basis of the degree-k spherical harmonics in R^n."""
    _check_basis_args(n, k)
    monos = monomial_exponents(n, k)
    col = {e: i for i, e in enumerate(monos)}
    seeds = [a for a in monos if a[0] <= 1]
    cand = np.zeros((len(seeds), len(monos)))
    for r, alpha in enumerate(seeds):
        proj = harmonic_projection(n, alpha)
        assert is_harmonic_exact(n, proj)
        for e, c in proj.items():
            cand[r, col[e]] = float(c)
    exps = np.array(monos, dtype=np.int64).reshape(-1, n)
    # Gram matrix of the monomials: moment of the summed exponent
    moments = sphere_moments(exps[:, None, :] + exps[None, :, :])
    basis = []
    for v in cand:
        w = v.copy()
        for _ in range(2):
            for b in basis:
                w -= (b @ moments @ w) * b
        nrm = math.sqrt(w @ moments @ w)
        w /= nrm
        basis.append(w)
    matrix = np.array(basis).reshape(len(basis), len(monos))
    if matrix.shape[0] != dim_harmonics(n, k):
        raise RuntimeError(f"basis size {matrix.shape[0]} != dim H^{n}_{k}")
    matrix.setflags(write=False)
    exps.setflags(write=False)
    return HarmonicBasis(n, k, exps, matrix)


def zonal_sum(n: int, k: int, xi, eta):
    """sum_j y_j(xi) y_j(eta) over the orthonormal basis of H^n_k."""
    b = harmonic_basis(n, k)
    xi = np.atleast_2d(np.asarray(xi, dtype=float))
    eta = np.atleast_2d(np.asarray(eta, dtype=float))
    out = np.sum(b.evaluate(xi) * b.evaluate(eta), axis=1)
    return float(out[0]) if out.size == 1 else out


def funk_hecke_apply(n: int, k: int, g: Callable, xi, rule: QuadratureRule) -> float:
    """c_{n,k} * integral of P_k^n(xi . eta) g(eta) over the sphere."""
    xi = np.asarray(xi, dtype=float)
    t = rule.nodes @ xi
    values = evaluate_on(g, rule.nodes)
    return cnk(n, k) * pairwise_sum(rule.weights * np.asarray(legendre_pkn(n, k, t)) * values)


# ---------------------------------------------------------------- spectra


@dataclass(frozen=True, eq=False)
class SpectralCoefficients:
    """Coefficients b_{k,j} of u against the orthonormal bases, k = 0..K."""

    n: int
    values: dict

    def __post_init__(self):
        vals = {}
        for k, b in self.values.items():
            b = np.array(b, dtype=float).reshape(-1)
            if b.size != dim_harmonics(self.n, int(k)):
                raise ValueError(f"degree {k} needs {dim_harmonics(self.n, int(k))} coefficients")
            b.setflags(write=False)
            vals[int(k)] = b
        object.__setattr__(self, "values", dict(sorted(vals.items())))

    @property
    def K(self) -> int:
        return max(self.values) if self.values else 0

    @classmethod
    def zeros(cls, n: int, K: int) -> SpectralCoefficients:
        return cls(n, {k: np.zeros(dim_harmonics(n, k)) for k in range(K + 1)})

    @classmethod
    def from_modes(cls, n: int, modes) -> SpectralCoefficients:
        """Build from (k, j, value) triples, j counted from 1."""
        modes = list(modes)
        K = max((k for k, _, _ in modes), default=0)
        vals = {k: np.zeros(dim_harmonics(n, k)) for k in range(K + 1)}
        for k, j, v in modes:
            if not 1 <= j <= dim_harmonics(n, k):
                raise ValueError(f"mode index j={j} outside 1..{dim_harmonics(n, k)} for k={k}")
            vals[k][j - 1] += v
        return cls(n, vals)

    def __getitem__(self, key: tuple[int, int]) -> float:
        k, j = key
        return float(self.values[k][j - 1])

    def items(self) -> Iterator[tuple[int, int, float]]:
        for k, b in self.values.items():
            for j, v in enumerate(b, start=1):
                yield k, j, float(v)

    def scaled(self, factor: float) -> SpectralCoefficients:
        return SpectralCoefficients(self.n, {k: b * factor for k, b in self.values.items()})

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["k", "j", "b"])
        for k, j, v in self.items():
            w.writerow([k, j, format(v, ".17g")])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, n: int, text: str) -> SpectralCoefficients:
        rows = list(csv.reader(io.StringIO(text)))
        if not rows or rows[0] != ["k", "j", "b"]:
            raise ValueError("not a spectral CSV: bad header")
        return cls.from_modes(n, [(int(k), int(j), float(b)) for k, j, b in rows[1:]])


def solid_polynomial(coeffs: SpectralCoefficients) -> Polynomial:
    """U(x) = sum_{k,j} b_{k,j} r^k y_{k,j}(xi) as one polynomial in x."""
    total: dict = {}
    for k, b in coeffs.values.items():
        if not np.any(b):
            continue
        basis = harmonic_basis(coeffs.n, k)
        row = b @ basis.matrix
        for e, c in zip(map(tuple, basis.exps.tolist()), row):
            if c != 0.0:
                total[e] = total.get(e, 0.0) + float(c)
    if not total:
        return Polynomial.zero(coeffs.n)
    return Polynomial.from_terms(coeffs.n, total)


def synthesize(coeffs: SpectralCoefficients, points) -> np.ndarray | float:
    points = np.asarray(points, dtype=float)
    out = solid_polynomial(coeffs)(points)
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True, eq=False)
class BoundaryFunction:
    """Real data u on S^{n-1}; ``evaluator`` maps (N, n) points to N values."""

    n: int
    evaluator: Callable
    label: str = "u"
    exact_spectrum: SpectralCoefficients | None = None
    degree: int | None = None  # polynomial degree when known (band-limited data)

    def __call__(self, points):
        return self.evaluator(np.asarray(points, dtype=float))

    @classmethod
    def from_spectrum(cls, coeffs: SpectralCoefficients, label: str = "modes") -> BoundaryFunction:
        poly = solid_polynomial(coeffs)
        return cls(coeffs.n, poly, label, coeffs, coeffs.K)


def project(u: BoundaryFunction, K: int, rule: QuadratureRule) -> SpectralCoefficients:
    """b_{k,j} = integral of u y_{k,j} over the sphere, k = 0..K, by quadrature."""
    if rule.n != u.n:
        raise ValueError("rule and boundary function dimensions differ")
    values = evaluate_on(u.evaluator, rule.nodes)
    wv = rule.weights * values
    out = {}
    for k in range(K + 1):
        ys = harmonic_basis(u.n, k).evaluate(rule.nodes)
        out[k] = np.array([pairwise_sum(wv * ys[:, j]) for j in range(ys.shape[1])])
    return SpectralCoefficients(u.n, out)
