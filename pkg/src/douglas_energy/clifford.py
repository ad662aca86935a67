"""Dense arithmetic in the real Clifford algebra Cl(0, m).

Generators e_1..e_m satisfy e_j e_k + e_k e_j = -2 delta_jk.  A blade is
addressed by a bitmask: bit i set means e_{i+1} is a factor, mask 0 is the
scalar.  Quaternions are the m = 2 algebra with i = e1, j = e2, k = e1e2.

Two layers are provided: raw coefficient arrays of shape (..., 2**m) that
broadcast over leading axes (used by the field evaluators), and a small
immutable :class:`Multivector` wrapper for single values.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

MAX_GENERATORS = 8


def _check_m(m: int) -> None:
    if not isinstance(m, (int, np.integer)) or m < 1 or m > MAX_GENERATORS:
        raise ValueError(f"generator count must be in 1..{MAX_GENERATORS}, got {m!r}")


def blade_product(mask_a: int, mask_b: int, m: int) -> tuple[int, int]:
    """Product of two basis blades, returned as (mask, sign)."""
    _check_m(m)
    size = 1 << m
    if not (0 <= mask_a < size and 0 <= mask_b < size):
        raise ValueError(f"blade masks must lie in [0, {size}), got {mask_a}, {mask_b}")
    # count transpositions needed to move every factor of b left past a's factors
    swaps = 0
    a = mask_a >> 1
    while a:
        swaps += bin(a & mask_b).count("1")
        a >>= 1
    # each shared generator contracts to e_k^2 = -1
    swaps += bin(mask_a & mask_b).count("1")
    return mask_a ^ mask_b, -1 if swaps & 1 else 1


@lru_cache(maxsize=None)
def product_table(m: int) -> tuple[np.ndarray, np.ndarray]:
    """Cayley table as (index, sign) arrays of shape (2**m, 2**m)."""
    _check_m(m)
    size = 1 << m
    idx = np.empty((size, size), dtype=np.intp)
    sign = np.empty((size, size), dtype=float)
    for a in range(size):
        for b in range(size):
            idx[a, b], sign[a, b] = blade_product(a, b, m)
    idx.setflags(write=False)
    sign.setflags(write=False)
    return idx, sign


@lru_cache(maxsize=None)
def grades(m: int) -> np.ndarray:
    g = np.array([bin(a).count("1") for a in range(1 << m)])
    g.setflags(write=False)
    return g


@lru_cache(maxsize=None)
def conj_signs(m: int) -> np.ndarray:
    # Clifford conjugation: grade-k blade picks up (-1)^(k(k+1)/2)
    g = grades(m)
    s = np.where((g * (g + 1) // 2) % 2 == 0, 1.0, -1.0)
    s.setflags(write=False)
    return s


def geometric_product(a: np.ndarray, b: np.ndarray, m: int) -> np.ndarray:
    """Batched product of coefficient arrays with trailing axis 2**m."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    size = 1 << m
    if a.shape[-1] != size or b.shape[-1] != size:
        raise ValueError(f"coefficient arrays must end in axis of length {size}")
    idx, sign = product_table(m)
    shape = np.broadcast_shapes(a.shape, b.shape)
    out = np.zeros(shape, dtype=float)
    for blade in range(size):
        # for fixed left blade the map B -> blade ^ B is a permutation
        out[..., idx[blade]] += sign[blade] * a[..., blade : blade + 1] * b
    return out


def conjugate(a: np.ndarray, m: int) -> np.ndarray:
    return np.asarray(a, dtype=float) * conj_signs(m)


def norm(a: np.ndarray) -> np.ndarray:
    return np.sqrt(np.sum(np.asarray(a, dtype=float) ** 2, axis=-1))


def paravector_coeffs(points: np.ndarray) -> np.ndarray:
    """Embed points (..., n) as paravectors x0 + sum x_k e_k in Cl(0, n-1)."""
    points = np.asarray(points, dtype=float)
    n = points.shape[-1]
    m = n - 1
    _check_m(m)
    out = np.zeros(points.shape[:-1] + (1 << m,), dtype=float)
    out[..., 0] = points[..., 0]
    for k in range(1, n):
        out[..., 1 << (k - 1)] = points[..., k]
    return out


# i -> e1, j -> e2, k -> e1e2
QUATERNION_UNITS = (0, 1, 2, 3)


def quaternion_coeffs(points: np.ndarray) -> np.ndarray:
    """Embed 4-vectors (..., 4) as quaternions x0 + x1 i + x2 j + x3 k in Cl(0, 2)."""
    points = np.asarray(points, dtype=float)
    if points.shape[-1] != 4:
        raise ValueError("quaternion embedding needs 4 coordinates")
    out = np.empty(points.shape, dtype=float)
    out[..., list(QUATERNION_UNITS)] = points
    return out


def paravector_units(n: int) -> tuple[int, ...]:
    """Blade masks of 1, e_1, ..., e_{n-1}."""
    return (0,) + tuple(1 << (k - 1) for k in range(1, n))


def homomorphism(a: np.ndarray, m_from: int, m_to: int, images: Sequence[int]) -> np.ndarray:
    """Push coefficients through the algebra map fixed by generator images.

    ``images[i]`` is the target blade mask of e_{i+1}.  The images must
    anticommute pairwise and square to -1 for the map to be a homomorphism;
    this is checked.
    """
    if len(images) != m_from:
        raise ValueError("need one image per generator")
    idx, sign = product_table(m_to)
    for i, gi in enumerate(images):
        if idx[gi, gi] != 0 or sign[gi, gi] != -1.0:
            raise ValueError(f"image of e{i + 1} does not square to -1")
        for j in range(i):
            gj = images[j]
            if idx[gi, gj] != idx[gj, gi] or sign[gi, gj] != -sign[gj, gi]:
                raise ValueError(f"images of e{j + 1}, e{i + 1} do not anticommute")
    # image of each source blade: ordered product of its generator images
    targets = []
    for blade in range(1 << m_from):
        mask, s = 0, 1.0
        for i in range(m_from):
            if blade >> i & 1:
                mask, s2 = idx[mask, images[i]], sign[mask, images[i]]
                s *= s2
        targets.append((mask, s))
    a = np.asarray(a, dtype=float)
    out = np.zeros(a.shape[:-1] + (1 << m_to,), dtype=float)
    for blade, (mask, s) in enumerate(targets):
        out[..., mask] += s * a[..., blade]
    return out


def cl03_to_quaternion(a: np.ndarray) -> np.ndarray:
    """Map Cl(0, 3) onto H = Cl(0, 2) by e1 -> i, e2 -> j, e3 -> k."""
    return homomorphism(a, 3, 2, images=(1, 2, 3))


@dataclass(frozen=True, eq=False)
class Multivector:
    """An element of Cl(0, m) stored as 2**m blade coefficients."""

    m: int
    coeffs: np.ndarray

    def __post_init__(self):
        _check_m(self.m)
        c = np.array(self.coeffs, dtype=float)
        if c.shape != (1 << self.m,):
            raise ValueError(f"expected {1 << self.m} coefficients, got shape {c.shape}")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def scalar_value(cls, value: float, m: int) -> Multivector:
        c = np.zeros(1 << m)
        c[0] = value
        return cls(m, c)

    @classmethod
    def blade(cls, mask: int, m: int, value: float = 1.0) -> Multivector:
        c = np.zeros(1 << m)
        c[mask] = value
        return cls(m, c)

    @classmethod
    def from_paravector(cls, point: Sequence[float]) -> Multivector:
        return embed_paravector(point)

    def _coerce(self, other) -> Multivector:
        if isinstance(other, Multivector):
            if other.m != self.m:
                raise ValueError(f"mismatched algebras: m={self.m} vs m={other.m}")
            return other
        if np.isscalar(other):
            return Multivector.scalar_value(float(other), self.m)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return Multivector(self.m, self.coeffs + other.coeffs)

    __radd__ = __add__

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return Multivector(self.m, self.coeffs - other.coeffs)

    def __rsub__(self, other):
        return (-self) + other

    def __neg__(self):
        return Multivector(self.m, -self.coeffs)

    def __mul__(self, other):
        if np.isscalar(other):
            return Multivector(self.m, self.coeffs * float(other))
        if isinstance(other, Multivector):
            return mv_mul(self, other)
        return NotImplemented

    def __rmul__(self, other):
        if np.isscalar(other):
            return Multivector(self.m, self.coeffs * float(other))
        return NotImplemented

    def __truediv__(self, other):
        if np.isscalar(other):
            return Multivector(self.m, self.coeffs / float(other))
        return NotImplemented

    def conj(self) -> Multivector:
        return mv_conj(self)

    @property
    def scalar(self) -> float:
        return float(self.coeffs[0])

    @property
    def nonscalar(self) -> Multivector:
        c = self.coeffs.copy()
        c[0] = 0.0
        return Multivector(self.m, c)

    def norm(self) -> float:
        return float(np.sqrt(np.sum(self.coeffs**2)))

    def allclose(self, other, atol: float = 1e-12) -> bool:
        other = self._coerce(other)
        return bool(np.allclose(self.coeffs, other.coeffs, rtol=0.0, atol=atol))

    def __repr__(self) -> str:
        terms = []
        for mask, c in enumerate(self.coeffs):
            if c == 0.0:
                continue
            name = "".join(f"e{i + 1}" for i in range(self.m) if mask >> i & 1) or "1"
            terms.append(f"{c:+.6g}*{name}")
        return f"Multivector(m={self.m}, " + (" ".join(terms) or "0") + ")"


def mv_mul(a: Multivector, b: Multivector) -> Multivector:
    if a.m != b.m:
        raise ValueError(f"mismatched algebras: m={a.m} vs m={b.m}")
    return Multivector(a.m, geometric_product(a.coeffs, b.coeffs, a.m))


def mv_conj(a: Multivector) -> Multivector:
    return Multivector(a.m, conjugate(a.coeffs, a.m))


def mv_parts(a: Multivector) -> tuple[float, Multivector, float]:
    """Split into (scalar part, non-scalar part, norm)."""
    return a.scalar, a.nonscalar, a.norm()


def embed_paravector(point: Sequence[float], m: int | None = None) -> Multivector:
    p = np.asarray(point, dtype=float)
    if p.ndim != 1:
        raise ValueError("paravector must be a flat coordinate sequence")
    if m is not None and p.size != m + 1:
        raise ValueError(f"paravector in Cl(0,{m}) needs {m + 1} coordinates, got {p.size}")
    return Multivector(p.size - 1, paravector_coeffs(p))
