"""Quadrature on the unit sphere S^{n-1}, the unit ball, and zonal pairs.

Spherical product rules use spherical coordinates

    x0 = cos t1, x1 = sin t1 cos t2, ..., x_{n-1} = sin t1 ... sin t_{n-2} sin phi

with Gauss-Jacobi in each cos t_i (weight (1 - s^2)^((n-2-i)/2)) and an
even trapezoid in phi.  With p Gauss points per polar angle and 2p azimuths
the rule integrates every polynomial of degree <= 2p - 1 exactly.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.special import roots_jacobi

from .special import ball_volume, surface_area

MIN_DIM = 2
MAX_DIM = 6
GOLDEN_ANGLE = math.pi * (3.0 - math.sqrt(5.0))


class EvaluationError(ArithmeticError):
    """A function returned a non-finite value at a quadrature node."""

    def __init__(self, message: str, node=None):
        super().__init__(message)
        self.node = None if node is None else np.asarray(node, dtype=float)


def _check_dim(n: int) -> None:
    if int(n) != n or not MIN_DIM <= n <= MAX_DIM:
        raise ValueError(f"supported dimensions are {MIN_DIM}..{MAX_DIM}, got {n!r}")


def _sphere_area(d: int) -> float:
    # area of S^d for d >= 0 (S^0 is two points)
    return 2.0 * math.pi ** ((d + 1) / 2.0) / math.gamma((d + 1) / 2.0)


def pairwise_sum(values: np.ndarray) -> float:
    """Sum by a fixed binary tree: a[0::2] + a[1::2] until one value is left."""
    a = np.asarray(values, dtype=float).ravel()
    if a.size == 0:
        return 0.0
    while a.size > 1:
        if a.size % 2:
            a = np.append(a, 0.0)
        a = a[0::2] + a[1::2]
    return float(a[0])


@dataclass(frozen=True, eq=False)
class QuadratureRule:
    n: int
    nodes: np.ndarray
    weights: np.ndarray
    polynomial_exactness: int
    label: str

    def __post_init__(self):
        nodes = np.array(self.nodes, dtype=float)
        weights = np.array(self.weights, dtype=float)
        if nodes.ndim != 2 or nodes.shape[1] != self.n:
            raise ValueError(f"nodes must have shape (count, {self.n})")
        if weights.shape != (nodes.shape[0],):
            raise ValueError("node count and weight count differ")
        if np.any(weights <= 0):
            raise ValueError("quadrature weights must be positive")
        nodes.setflags(write=False)
        weights.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)

    def __len__(self) -> int:
        return self.weights.size

    def rotated(self, matrix: np.ndarray, label: str | None = None) -> QuadratureRule:
        return QuadratureRule(
            self.n,
            self.nodes @ np.asarray(matrix, dtype=float).T,
            self.weights,
            self.polynomial_exactness,
            label or f"{self.label}+rotated",
        )

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["n", "count", "exactness", "label"])
        w.writerow([self.n, len(self), self.polynomial_exactness, self.label])
        for wt, x in zip(self.weights, self.nodes):
            w.writerow([format(wt, ".17g")] + [format(v, ".17g") for v in x])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> QuadratureRule:
        rows = list(csv.reader(io.StringIO(text)))
        if len(rows) < 2 or rows[0] != ["n", "count", "exactness", "label"]:
            raise ValueError("not a quadrature CSV: bad header")
        n, count, exactness = int(rows[1][0]), int(rows[1][1]), int(rows[1][2])
        data = np.array([[float(v) for v in row] for row in rows[2:]], dtype=float)
        if data.shape != (count, n + 1):
            raise ValueError(f"expected {count} rows of {n + 1} values")
        return cls(n, data[:, 1:], data[:, 0], exactness, rows[1][3])


def _angle_nodes(n: int, p: int) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """Per-angle (cosine nodes, weights) for the polar angles t1..t_{n-2}."""
    xs, ws = [], []
    for i in range(1, n - 1):
        a = (n - 2 - i) / 2.0  # sin^(n-1-i) dt  ->  (1 - s^2)^((n-2-i)/2) ds
        x, w = roots_jacobi(p, a, a)
        xs.append(x)
        ws.append(w)
    return xs, ws


def _product_nodes(n: int, p: int) -> tuple[np.ndarray, np.ndarray]:
    m_phi = 2 * p
    phi = 2.0 * math.pi * np.arange(m_phi) / m_phi
    w_phi = np.full(m_phi, 2.0 * math.pi / m_phi)
    # start from the circle and prepend polar angles from the innermost outwards
    pts = np.stack([np.cos(phi), np.sin(phi)], axis=1)
    wts = w_phi
    xs, ws = _angle_nodes(n, p)
    for x, w in zip(reversed(xs), reversed(ws)):
        s = np.sqrt(1.0 - x * x)
        new_pts = np.concatenate(
            [
                np.repeat(x, len(pts))[:, None],
                (s[:, None, None] * pts[None, :, :]).reshape(-1, pts.shape[1]),
            ],
            axis=1,
        )
        wts = (w[:, None] * wts[None, :]).ravel()
        pts = new_pts
    return pts, wts


def rule_for_degree(n: int, degree: int) -> QuadratureRule:
    """Smallest product rule exact for polynomials of the given degree."""
    _check_dim(n)
    p = max(1, (int(degree) + 2) // 2)
    nodes, weights = _product_nodes(n, p)
    return QuadratureRule(n, nodes, weights, 2 * p - 1, f"product(n={n},p={p})")


def product_rule(n: int, level: int) -> QuadratureRule:
    """Product Gauss rule with 4*level points per polar angle (exact to degree 8*level - 1)."""
    _check_dim(n)
    if int(level) != level or level < 1:
        raise ValueError(f"level must be a positive integer, got {level!r}")
    p = 4 * int(level)
    nodes, weights = _product_nodes(n, p)
    return QuadratureRule(n, nodes, weights, 2 * p - 1, f"product(n={n},level={level})")


def monte_carlo_rule(n: int, count: int, seed: int) -> QuadratureRule:
    """Equal-weight rule from normalized Gaussian vectors (numpy PCG64 generator)."""
    _check_dim(n)
    if count < 1:
        raise ValueError("count must be >= 1")
    rng = np.random.Generator(np.random.PCG64(seed))
    g = rng.standard_normal((count, n))
    nodes = g / np.linalg.norm(g, axis=1, keepdims=True)
    weights = np.full(count, surface_area(n) / count)
    return QuadratureRule(n, nodes, weights, 0, f"montecarlo(n={n},count={count},seed={seed})")


def givens_rotation(n: int, angle: float = GOLDEN_ANGLE) -> np.ndarray:
    g = np.eye(n)
    c, s = math.cos(angle), math.sin(angle)
    g[0, 0], g[0, 1], g[1, 0], g[1, 1] = c, -s, s, c
    return g


def offset_rule(rule: QuadratureRule, angle: float = GOLDEN_ANGLE) -> QuadratureRule:
    """Companion rule: ``rule`` rotated by a Givens rotation in the (x0, x1) plane."""
    return rule.rotated(givens_rotation(rule.n, angle), label=f"{rule.label}+givens")


def evaluate_on(f: Callable, points: np.ndarray) -> np.ndarray:
    """Evaluate a vectorized function and reject non-finite values."""
    with np.errstate(all="ignore"):
        values = np.asarray(f(points), dtype=float)
    if values.shape != (points.shape[0],):
        values = np.broadcast_to(values, (points.shape[0],)).astype(float)
    bad = ~np.isfinite(values)
    if np.any(bad):
        i = int(np.flatnonzero(bad)[0])
        raise EvaluationError(
            f"non-finite value {values[i]!r} at node {points[i].tolist()}", points[i]
        )
    return values


def integrate(rule: QuadratureRule, f: Callable) -> float:
    """sum_i w_i f(node_i); ``f`` maps an (N, n) array of points to N values."""
    return pairwise_sum(rule.weights * evaluate_on(f, rule.nodes))


def integrate_zonal_pair(n: int, g: Callable, level: int) -> float:
    """Double integral over S^{n-1} x S^{n-1} of g(eta1 . eta2).

    Reduces to omega_{n-1} omega_{n-2} int_{-1}^{1} g(t) (1 - t^2)^((n-3)/2) dt.
    """
    _check_dim(n)
    p = 16 * int(level)
    a = (n - 3) / 2.0
    t, w = roots_jacobi(p, a, a)
    values = evaluate_on(lambda x: g(x[:, 0]), t[:, None])
    return surface_area(n) * _sphere_area(n - 2) * pairwise_sum(w * values)


@dataclass(frozen=True, eq=False)
class BallRule:
    n: int
    nodes: np.ndarray
    weights: np.ndarray
    radial_order: int
    sphere: QuadratureRule
    radius: float = 1.0
    label: str = ""

    def __len__(self) -> int:
        return self.weights.size


def ball_rule(n: int, radial_order: int, sphere_level: int, radius: float = 1.0) -> BallRule:
    """Radial Gauss-Jacobi (weight r^(n-1) on [0, radius]) times a product sphere rule."""
    sphere = product_rule(n, sphere_level)
    return ball_rule_from(sphere, radial_order, radius)


def ball_rule_from(sphere: QuadratureRule, radial_order: int, radius: float = 1.0) -> BallRule:
    n = sphere.n
    if radial_order < 1:
        raise ValueError("radial_order must be >= 1")
    if not 0.0 < radius <= 1.0:
        raise ValueError("radius must lie in (0, 1]")
    x, w = roots_jacobi(radial_order, 0.0, n - 1.0)
    r = radius * (1.0 + x) / 2.0
    wr = w * (radius / 2.0) ** n
    nodes = (r[:, None, None] * sphere.nodes[None, :, :]).reshape(-1, n)
    weights = (wr[:, None] * sphere.weights[None, :]).ravel()
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return BallRule(
        n, nodes, weights, radial_order, sphere, radius,
        f"ball(n={n},radial={radial_order},{sphere.label},R={radius:g})",
    )


def integrate_ball(rule: BallRule, f: Callable) -> float:
    return pairwise_sum(rule.weights * evaluate_on(f, rule.nodes))


def householder_to(poles: np.ndarray) -> Callable[[np.ndarray], np.ndarray]:
    """Reflections H with H e0 = pole, applied row-wise to (P, M, n) arrays."""
    poles = np.atleast_2d(np.asarray(poles, dtype=float))
    n = poles.shape[1]
    e0 = np.zeros(n)
    e0[0] = 1.0
    v = e0[None, :] - poles
    vn = np.linalg.norm(v, axis=1, keepdims=True)
    trivial = vn[:, 0] < 1e-14
    v = np.where(trivial[:, None], 0.0, v / np.where(vn == 0, 1.0, vn))

    def apply(x: np.ndarray) -> np.ndarray:
        # x has shape (P, M, n) or (M, n) shared by all poles
        if x.ndim == 2:
            x = np.broadcast_to(x, (poles.shape[0],) + x.shape)
        dots = np.einsum("pmn,pn->pm", x, v)
        return x - 2.0 * dots[:, :, None] * v[:, None, :]

    return apply


def graded_panels(scale: float, top: float = math.pi) -> np.ndarray:
    """Panel edges 0, scale, 2 scale, 4 scale, ... up to ``top``."""
    edges = [0.0]
    h = max(float(scale), 1e-8)
    while edges[-1] + h < top * 0.999:
        edges.append(edges[-1] + h)
        h = edges[-1]
    edges.append(top)
    return np.array(edges)


@dataclass(frozen=True, eq=False)
class PolarTemplate:
    """A rule on S^{n-1} centred at e0: polar angle theta times S^{n-2} directions.

    ``theta``/``theta_weights`` carry the sin^{n-2} Jacobian; ``directions``
    are unit vectors in the span of e1..e_{n-1}.
    """

    n: int
    theta: np.ndarray
    theta_weights: np.ndarray
    directions: np.ndarray
    direction_weights: np.ndarray

    def local_nodes(self) -> tuple[np.ndarray, np.ndarray]:
        c = np.cos(self.theta)[:, None, None]
        s = np.sin(self.theta)[:, None, None]
        e0 = np.zeros(self.n)
        e0[0] = 1.0
        pts = c * e0[None, None, :] + s * self.directions[None, :, :]
        wts = self.theta_weights[:, None] * self.direction_weights[None, :]
        return pts.reshape(-1, self.n), wts.ravel()


def polar_template(
    n: int, edges: np.ndarray, points_per_panel: int, direction_degree: int
) -> PolarTemplate:
    _check_dim(n)
    x, w = np.polynomial.legendre.leggauss(points_per_panel)
    edges = np.asarray(edges, dtype=float)
    lo, hi = edges[:-1, None], edges[1:, None]
    theta = ((hi - lo) / 2.0 * x[None, :] + (hi + lo) / 2.0).ravel()
    tw = ((hi - lo) / 2.0 * w[None, :]).ravel() * np.sin(theta) ** (n - 2)
    if n == 2:
        dirs = np.array([[0.0, 1.0], [0.0, -1.0]])
        dw = np.ones(2)
    else:
        sub = rule_for_degree(n - 1, direction_degree) if n - 1 >= MIN_DIM else None
        dirs = np.concatenate([np.zeros((len(sub), 1)), sub.nodes], axis=1)
        dw = sub.weights
    return PolarTemplate(n, theta, tw, dirs, dw)


def polar_rule(
    n: int,
    pole,
    edges: np.ndarray | None = None,
    points_per_panel: int = 16,
    direction_degree: int = 8,
) -> QuadratureRule:
    """A sphere rule whose polar axis is ``pole``; nodes cluster near the pole."""
    pole = np.asarray(pole, dtype=float)
    if edges is None:
        edges = np.linspace(0.0, math.pi, 5)
    tpl = polar_template(n, edges, points_per_panel, direction_degree)
    local, weights = tpl.local_nodes()
    nodes = householder_to(pole[None, :])(local)[0]
    return QuadratureRule(n, nodes, weights, 0, f"polar(n={n},panels={len(edges) - 1})")
