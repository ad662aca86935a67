"""Independent numerical routes to the Douglas energy A(u) and the report tying them together.

Every form takes its own inputs (boundary evaluator, spectrum or extension
field) and never reads another form's value, so agreement between forms is
a genuine cross-check.
"""

from __future__ import annotations

import itertools
import json
import math
import time
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from . import clifford as cl
from .extension import (
    DEFAULT_MARGIN,
    DEFAULT_STEP,
    QUATERNION_FRAME,
    MonogenicField,
    UnsupportedInput,
    clifford_frame,
    dirac_apply,
    gradient_potential_field,
    lemma_field,
    schwarz_field,
    zonal_series_field,
)
from .harmonics import BoundaryFunction, SpectralCoefficients, project, solid_polynomial
from .quadrature import (
    BallRule,
    EvaluationError,
    QuadratureRule,
    ball_rule_from,
    evaluate_on,
    graded_panels,
    householder_to,
    offset_rule,
    pairwise_sum,
    polar_template,
    product_rule,
    rule_for_degree,
)
from .special import jkernel, surface_area

HARMONIC_FORMS = ("spectral", "gradient_volume", "boundary_flux", "double_integral")
HYPERCOMPLEX_FORMS = ("dbar_volume", "stokes_boundary")
ALL_FORMS = HARMONIC_FORMS + HYPERCOMPLEX_FORMS
DOUBLE_MODES = ("offset_grids", "abel_J", "polar")
EXTENSIONS = ("lemma", "schwarz", "zonal_series", "gradient_potential")
DEFAULT_ABEL = (0.90, 0.95, 0.975, 0.9875)


class InvalidField(ValueError):
    """A supplied field failed its monogenicity check."""


class OrientationError(RuntimeError):
    """The boundary form's sign convention failed validation."""


# ---------------------------------------------------------------- harmonic forms


def energy_spectral(coeffs: SpectralCoefficients) -> float:
    """sum_{k>=1} k sum_j b_{k,j}^2."""
    return float(sum(k * float(np.dot(b, b)) for k, b in coeffs.values.items() if k >= 1))


def _default_ball(n: int, degree: int) -> BallRule:
    # |grad U|^2 has degree 2K - 2; the radial factor is handled by the Jacobi weight
    return ball_rule_from(rule_for_degree(n, degree + 2), degree // 2 + 2)


def energy_gradient_volume(coeffs: SpectralCoefficients, ball_rule: BallRule | None = None) -> float:
    """Quadrature of |grad U|^2 over the ball with analytic gradients."""
    rule = ball_rule or _default_ball(coeffs.n, 2 * coeffs.K)
    grad = solid_polynomial(coeffs).gradient(rule.nodes)
    return pairwise_sum(rule.weights * np.sum(grad * grad, axis=1))


def energy_boundary_flux(
    coeffs: SpectralCoefficients, sphere_rule: QuadratureRule | None = None, r: float = 1.0
) -> float:
    """r^(n-1) times the integral of U dU/dr over the sphere of radius r."""
    if not 0.0 <= r <= 1.0:
        raise ValueError(f"r must lie in [0, 1], got {r!r}")
    n = coeffs.n
    rule = sphere_rule or rule_for_degree(n, 2 * coeffs.K + 2)
    poly = solid_polynomial(coeffs)
    pts = r * rule.nodes
    du_dr = np.sum(poly.gradient(pts) * rule.nodes, axis=1)
    return pairwise_sum(rule.weights * poly(pts) * du_dr) * r ** (n - 1)


# ---------------------------------------------------------------- double integral


@dataclass(frozen=True)
class DoubleParams:
    """Discretization knobs of the double boundary integral."""

    level: int = 2
    abel: tuple[float, ...] = DEFAULT_ABEL
    points_per_panel: int = 10
    direction_degree: int | None = None
    outer_degree: int | None = None
    chunk: int = 64


def _chunks(count: int, size: int):
    for start in range(0, count, size):
        yield slice(start, min(start + size, count))


def _offset_grids(u: BoundaryFunction, p: DoubleParams) -> float:
    n = u.n
    a = product_rule(n, p.level)
    b = offset_rule(a)
    ua = evaluate_on(u.evaluator, a.nodes)
    ub = evaluate_on(u.evaluator, b.nodes)
    partial = []
    for sl in _chunks(len(a), 256):
        d2 = np.sum((a.nodes[sl, None, :] - b.nodes[None, :, :]) ** 2, axis=-1)
        if np.any(d2 == 0.0):
            i, j = np.argwhere(d2 == 0.0)[0]
            raise ValueError(
                f"offset grids share a node: pair ({sl.start + i}, {j}) at {a.nodes[sl.start + i]}"
            )
        vals = (ua[sl, None] - ub[None, :]) ** 2 / d2 ** (n / 2.0)
        partial.append(np.sum(a.weights[sl, None] * b.weights[None, :] * vals, axis=1))
    return pairwise_sum(np.concatenate(partial)) / surface_area(n)


def _outer_rule(u: BoundaryFunction, p: DoubleParams) -> QuadratureRule:
    if p.outer_degree is not None:
        return rule_for_degree(u.n, p.outer_degree)
    if u.degree is not None:
        return rule_for_degree(u.n, max(2 * u.degree, 2))
    return product_rule(u.n, p.level)


def _direction_degree(u: BoundaryFunction, p: DoubleParams) -> int:
    if p.direction_degree is not None:
        return p.direction_degree
    if u.degree is not None:
        return max(2 * u.degree, 4)
    return 8 * p.level - 1


def _polar_sum(u: BoundaryFunction, p: DoubleParams, edges: np.ndarray, kernel: Callable) -> float:
    """sum_i w_i sum_j v_j (u_i - u_j)^2 kernel(t_ij) with a pole-centred inner rule per outer node."""
    n = u.n
    outer = _outer_rule(u, p)
    tpl = polar_template(n, edges, p.points_per_panel, _direction_degree(u, p))
    local, inner_w = tpl.local_nodes()
    t = local[:, 0]  # cosine of the angle to the pole, shared by every rotated copy
    kern = inner_w * kernel(t)
    u_out = evaluate_on(u.evaluator, outer.nodes)
    rows = []
    for sl in _chunks(len(outer), p.chunk):
        inner = householder_to(outer.nodes[sl])(local)  # (P, M, n)
        ui = evaluate_on(u.evaluator, inner.reshape(-1, n)).reshape(inner.shape[:2])
        rows.append(((u_out[sl, None] - ui) ** 2) @ kern)
    return pairwise_sum(outer.weights * np.concatenate(rows))


def _singular_kernel(n: int) -> Callable:
    def kernel(t: np.ndarray) -> np.ndarray:
        d2 = np.maximum(2.0 - 2.0 * t, np.finfo(float).tiny)
        return d2 ** (-n / 2.0)

    return kernel


def _polar_direct(u: BoundaryFunction, p: DoubleParams) -> float:
    edges = np.linspace(0.0, math.pi, 5)
    return _polar_sum(u, p, edges, _singular_kernel(u.n)) / surface_area(u.n)


def neville(h: np.ndarray, values: np.ndarray, at: float = 0.0) -> float:
    """Value at ``at`` of the interpolating polynomial through (h_i, values_i)."""
    h = np.asarray(h, dtype=float)
    p = np.array(values, dtype=float)
    m = len(h)
    for k in range(1, m):
        p[: m - k] = ((at - h[k:]) * p[: m - k] + (h[: m - k] - at) * p[1 : m - k + 1]) / (
            h[: m - k] - h[k:]
        )
    return float(p[0])


def abel_sequence(u: BoundaryFunction, p: DoubleParams) -> list[float]:
    """(1 / 2 omega) times the double integral of (u1 - u2)^2 J(r, eta1 . eta2), per r."""
    n = u.n
    out = []
    for r in p.abel:
        if not 0.0 < r < 1.0:
            raise ValueError(f"Abel radii must lie in (0, 1), got {r!r}")
        edges = graded_panels((1.0 - r * r) / 2.0)
        out.append(_polar_sum(u, p, edges, lambda t, r=r: jkernel(n, r, t)) / (2.0 * surface_area(n)))
    return out


def _abel_J(u: BoundaryFunction, p: DoubleParams) -> float:
    seq = abel_sequence(u, p)
    return neville(1.0 - np.asarray(p.abel), np.asarray(seq))


def energy_double_integral(u: BoundaryFunction, mode: str = "polar", params: DoubleParams | None = None) -> float:
    """(1/omega) times the double integral of |u(eta1) - u(eta2)|^2 / |eta1 - eta2|^n.

    Modes: ``offset_grids`` sums over a product rule against a rotated copy;
    ``abel_J`` replaces the singular kernel by J(r, .)/2 for a sequence of r
    and extrapolates to r = 1; ``polar`` integrates the singular kernel with
    an inner rule centred on each outer node.
    """
    params = params or DoubleParams()
    if mode == "offset_grids":
        return _offset_grids(u, params)
    if mode == "abel_J":
        return _abel_J(u, params)
    if mode == "polar":
        return _polar_direct(u, params)
    raise ValueError(f"unknown double-integral mode {mode!r}; choose from {DOUBLE_MODES}")


# ---------------------------------------------------------------- hypercomplex forms


def _dbar_on(F: MonogenicField, pts: np.ndarray, step: float) -> np.ndarray:
    return dirac_apply(F, pts, step)[1]


def check_monogenic(F: MonogenicField, tol: float = 1e-6, count: int = 16, seed: int = 0, step: float = DEFAULT_STEP) -> float:
    """Largest |DF| over seeded interior points with r <= 0.9; raises InvalidField above ``tol``."""
    rng = np.random.Generator(np.random.PCG64(seed))
    g = rng.standard_normal((count, F.n))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    pts = g * (0.9 * rng.uniform(size=count) ** (1.0 / F.n))[:, None]
    D = dirac_apply(F, pts, step)[0]
    worst = float(np.max(cl.norm(D)))
    if worst > tol:
        raise InvalidField(f"field is not monogenic: |DF| = {worst:.3g} > {tol:.3g}")
    return worst


def _sweep_radii(margin: float) -> np.ndarray:
    return 1.0 - margin * np.array([1.0, 2.0, 4.0])


def energy_dbar_volume(
    F: MonogenicField,
    ball_rule: BallRule | None = None,
    *,
    degree: int | None = None,
    margin: float = DEFAULT_MARGIN,
    step: float = DEFAULT_STEP,
    check: bool = True,
) -> float:
    """Quadrature of |Dbar F|^2 over the unit ball.

    Polynomial fields are integrated on the closed ball directly.  Other
    fields are integrated over balls of radius 1 - margin, 1 - 2 margin,
    1 - 4 margin and extrapolated to radius 1.
    """
    if check:
        check_monogenic(F, step=step)
    if ball_rule is None:
        deg = degree if degree is not None else _field_degree(F)
        sphere = rule_for_degree(F.n, 2 * deg + 2)
        radial = deg + 2
    else:
        sphere, radial = ball_rule.sphere, ball_rule.radial_order

    def over(radius: float) -> float:
        rule = ball_rule_from(sphere, radial, radius)
        d = _dbar_on(F, rule.nodes, step)
        return pairwise_sum(rule.weights * np.sum(d * d, axis=1))

    if F.polynomial:
        return over(ball_rule.radius if ball_rule is not None else 1.0)
    radii = _sweep_radii(margin)
    return neville(1.0 - radii, np.array([over(R) for R in radii]))


def stokes_integral(F: MonogenicField, sphere_rule: QuadratureRule, r: float, step: float = DEFAULT_STEP) -> np.ndarray:
    """1/2 times the full multivector integral of conj(F) nu Dbar F over the sphere of radius r."""
    m = F.m
    pts = r * sphere_rule.nodes
    vals = F(pts)
    dbar = _dbar_on(F, pts, step)
    nu = F.frame.embed(sphere_rule.nodes)
    integrand = cl.geometric_product(cl.geometric_product(cl.conjugate(vals, m), nu, m), dbar, m)
    total = np.array([pairwise_sum(sphere_rule.weights * integrand[:, b]) for b in range(1 << m)])
    return 0.5 * total * r ** (F.n - 1)


def energy_stokes_boundary(
    F: MonogenicField,
    sphere_rule: QuadratureRule | None = None,
    r: float | None = None,
    *,
    degree: int | None = None,
    margin: float = DEFAULT_MARGIN,
    step: float = DEFAULT_STEP,
) -> tuple[float, float]:
    """Scalar part of the boundary form and the norm of the discarded non-scalar residue.

    With ``r=None`` the form is taken at r = 1 (polynomial fields) or
    extrapolated from r = 1 - margin, 1 - 2 margin, 1 - 4 margin.
    """
    if sphere_rule is None:
        deg = degree if degree is not None else _field_degree(F)
        sphere_rule = rule_for_degree(F.n, 2 * deg + 2)
    if r is not None:
        total = stokes_integral(F, sphere_rule, r, step)
        return float(total[0]), float(np.linalg.norm(total[1:]))
    if F.polynomial:
        total = stokes_integral(F, sphere_rule, 1.0, step)
        return float(total[0]), float(np.linalg.norm(total[1:]))
    radii = _sweep_radii(margin)
    totals = np.array([stokes_integral(F, sphere_rule, R, step) for R in radii])
    ext = np.array([neville(1.0 - radii, totals[:, b]) for b in range(totals.shape[1])])
    return float(ext[0]), float(np.linalg.norm(ext[1:]))


def validate_orientation(n: int, frame=None, tol: float = 1e-6) -> float:
    """Check the boundary form's sign on U = x0, where it must equal vol(B_n) > 0."""
    coeffs = _coordinate_spectrum(n)
    F = lemma_field(coeffs, frame or clifford_frame(n))
    value, _ = energy_stokes_boundary(F, degree=1)
    target = math.pi ** (n / 2.0) / math.gamma(n / 2.0 + 1.0)
    if abs(value - target) > tol * target:
        raise OrientationError(f"boundary form gives {value!r} for U = x0, expected {target!r}")
    return value


def _coordinate_spectrum(n: int) -> SpectralCoefficients:
    from .harmonics import harmonic_basis

    basis = harmonic_basis(n, 1)
    # x0 = sum_j <x0, y_j> y_j with y_j linear; solve for the coefficients
    target = np.zeros(basis.matrix.shape[1])
    target[[i for i, e in enumerate(map(tuple, basis.exps)) if e[0] == 1][0]] = 1.0
    b, *_ = np.linalg.lstsq(basis.matrix.T, target, rcond=None)
    return SpectralCoefficients(n, {0: np.zeros(1), 1: b})


def _field_degree(F: MonogenicField) -> int:
    src = F.source
    if isinstance(src, SpectralCoefficients):
        return max(src.K, 1)
    if isinstance(src, BoundaryFunction) and src.degree is not None:
        return max(src.degree, 1)
    return 8


def build_field(coeffs: SpectralCoefficients, kind: str = "lemma", u: BoundaryFunction | None = None, quaternion: bool = False) -> MonogenicField:
    """Monogenic extension with scalar part U by the named construction."""
    n = coeffs.n
    if n < 3:
        raise UnsupportedInput("hypercomplex forms need n >= 3")
    # the lemma's radial integrand is a polynomial in s of degree K + n - 3,
    # so this Gauss-Legendre order is already exact
    order = coeffs.K + n + 2
    if quaternion:
        if n != 4:
            raise UnsupportedInput("the quaternionic route needs n = 4")
        if kind == "lemma":
            return lemma_field(coeffs, QUATERNION_FRAME, order)
        if kind == "gradient_potential":
            return gradient_potential_field(coeffs, QUATERNION_FRAME)
        raise UnsupportedInput(f"extension {kind!r} has no quaternionic form")
    if kind == "lemma":
        return lemma_field(coeffs, order=order)
    if kind == "gradient_potential":
        return gradient_potential_field(coeffs)
    if kind == "zonal_series":
        return zonal_series_field(coeffs, rule_for_degree(n, 2 * coeffs.K + 2))
    if kind == "schwarz":
        return schwarz_field(u if u is not None else BoundaryFunction.from_spectrum(coeffs))
    raise ValueError(f"unknown extension {kind!r}; choose from {EXTENSIONS}")


# ---------------------------------------------------------------- report


@dataclass(frozen=True)
class EnergyConfig:
    forms: tuple[str, ...] = ALL_FORMS
    K: int = 8
    level: int = 2
    double_mode: str = "polar"
    abel: tuple[float, ...] = DEFAULT_ABEL
    extension: str = "lemma"
    quaternion: bool = True
    margin: float = DEFAULT_MARGIN
    step: float = DEFAULT_STEP
    seed: int = 0
    divergence_cap: float = 1e8
    record_timings: bool = True

    def __post_init__(self):
        bad = [f for f in self.forms if f not in ALL_FORMS]
        if bad:
            raise ValueError(f"unknown forms {bad}; choose from {ALL_FORMS}")
        if not self.forms:
            raise ValueError("at least one form must be requested")
        if self.double_mode not in DOUBLE_MODES:
            raise ValueError(f"unknown double-integral mode {self.double_mode!r}")
        if self.extension not in EXTENSIONS:
            raise ValueError(f"unknown extension {self.extension!r}")
        if not all(0.0 < r < 1.0 for r in self.abel) or len(set(self.abel)) != len(self.abel):
            raise ValueError("Abel radii must be distinct values in (0, 1)")
        if self.K < 0 or self.K > 16:
            raise ValueError("K must lie in 0..16")
        if self.level < 1:
            raise ValueError("level must be >= 1")


def relative(a: float, b: float) -> float:
    scale = max(abs(a), abs(b))
    return abs(a - b) / scale if scale > 0.0 else 0.0


@dataclass
class EnergyReport:
    n: int
    label: str
    params: dict = field(default_factory=dict)
    forms: dict = field(default_factory=dict)
    errors: dict = field(default_factory=dict)
    residues: dict = field(default_factory=dict)
    timings: dict = field(default_factory=dict)
    diagnostics: dict = field(default_factory=dict)

    @property
    def deviations(self) -> dict:
        out = {}
        for a, b in itertools.combinations(self.forms, 2):
            va, vb = self.forms[a], self.forms[b]
            out[f"{a}|{b}"] = {"abs": abs(va - vb), "rel": relative(va, vb)}
        return out

    def max_relative_deviation(self, names=None) -> float:
        names = [k for k in (names or self.forms) if k in self.forms]
        return max((relative(self.forms[a], self.forms[b]) for a, b in itertools.combinations(names, 2)), default=0.0)

    def as_dict(self) -> dict:
        return {
            "n": self.n,
            "label": self.label,
            "params": self.params,
            "forms": self.forms,
            "deviations": self.deviations,
            "residues": self.residues,
            "timings": self.timings,
            "errors": self.errors,
            "diagnostics": self.diagnostics,
        }


def _fmt(x) -> str:
    if isinstance(x, bool) or x is None:
        return json.dumps(x)
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if not math.isfinite(x):
            return json.dumps(str(x))
        return format(x, ".17g")
    if isinstance(x, str):
        return json.dumps(x)
    if isinstance(x, dict):
        return "{" + ", ".join(f"{json.dumps(str(k))}: {_fmt(v)}" for k, v in x.items()) + "}"
    if isinstance(x, (list, tuple, np.ndarray)):
        return "[" + ", ".join(_fmt(v) for v in x) + "]"
    raise TypeError(f"cannot serialize {type(x).__name__}")


def emit_report(report: EnergyReport, fmt: str = "json") -> bytes:
    """Bit-stable serialization: fixed field order, reals with 17 significant digits."""
    if fmt == "json":
        return (_fmt(report.as_dict()) + "\n").encode()
    if fmt == "csv":
        lines = ["form,value,abs_dev_vs_spectral,rel_dev_vs_spectral,seconds"]
        s = report.forms.get("spectral")
        for name, v in report.forms.items():
            if s is None:
                ad = rd = ""
            else:
                ad = format(abs(v - s), ".17g")
                rd = format(abs(v - s) / abs(s) if s != 0.0 else abs(v - s), ".17g")
            sec = report.timings.get(name)
            lines.append(f"{name},{format(v, '.17g')},{ad},{rd},{'' if sec is None else format(sec, '.17g')}")
        return ("\n".join(lines) + "\n").encode()
    raise ValueError(f"unknown format {fmt!r}")


def spectrum_for(u: BoundaryFunction, config: EnergyConfig) -> SpectralCoefficients:
    """Exact spectrum when known, otherwise quadrature projection up to config.K."""
    if u.exact_spectrum is not None:
        return u.exact_spectrum
    if u.degree is not None:
        K = u.degree
        return project(u, K, rule_for_degree(u.n, 2 * K + 2))
    K = config.K
    rule = rule_for_degree(u.n, max(2 * K + 2, 8 * config.level - 1))
    return project(u, K, rule)


def _flux_divergence(coeffs: SpectralCoefficients, radii, cap: float) -> dict:
    seq = [energy_boundary_flux(coeffs, r=r) for r in radii]
    return {"flux_sequence": seq, "diverging": bool(max(seq, default=0.0) > cap)}


def energy_report(u: BoundaryFunction, config: EnergyConfig | None = None) -> EnergyReport:
    """Run every requested form independently; failures are recorded per form."""
    config = config or EnergyConfig()
    n = u.n
    report = EnergyReport(
        n=n,
        label=u.label,
        params={
            "K": config.K,
            "level": config.level,
            "double_mode": config.double_mode,
            "abel": list(config.abel),
            "extension": config.extension,
            "margin": config.margin,
            "step": config.step,
            "seed": config.seed,
        },
    )

    def run(name: str, fn: Callable):
        start = time.perf_counter()
        try:
            value = fn()
        except (ValueError, ArithmeticError, RuntimeError, EvaluationError) as exc:
            report.errors[name] = f"{type(exc).__name__}: {exc}"
            return
        finally:
            if config.record_timings:
                report.timings[name] = time.perf_counter() - start
        if isinstance(value, tuple):
            value, residue = value
            report.residues[name] = residue
        value = float(value)
        if not math.isfinite(value):
            report.errors[name] = "non-finite value"
            return
        report.forms[name] = value

    coeffs_cache: dict = {}

    def coeffs() -> SpectralCoefficients:
        if "c" not in coeffs_cache:
            coeffs_cache["c"] = spectrum_for(u, config)
        return coeffs_cache["c"]

    dparams = DoubleParams(level=config.level, abel=tuple(config.abel))
    forms = config.forms
    if "spectral" in forms:
        run("spectral", lambda: energy_spectral(coeffs()))
    if "gradient_volume" in forms:
        run("gradient_volume", lambda: energy_gradient_volume(coeffs()))
    if "boundary_flux" in forms:
        run("boundary_flux", lambda: energy_boundary_flux(coeffs(), r=1.0))
    if "double_integral" in forms:
        if config.double_mode == "abel_J":
            def abel():
                seq = abel_sequence(u, dparams)
                report.diagnostics["abel_sequence"] = seq
                if max(seq) > config.divergence_cap:
                    report.diagnostics["diverging"] = True
                    raise ArithmeticError("Abel sequence exceeds the divergence cap")
                return neville(1.0 - np.asarray(dparams.abel), np.asarray(seq))

            run("double_integral", abel)
        else:
            run("double_integral", lambda: energy_double_integral(u, config.double_mode, dparams))

    hyper = [f for f in HYPERCOMPLEX_FORMS if f in forms]
    if hyper and n >= 3:
        routes = [("", False)]
        if n == 4 and config.quaternion:
            routes.append(("_quaternion", True))
        for suffix, quat in routes:
            def field_fn(quat=quat):
                return build_field(coeffs(), config.extension, u, quaternion=quat)

            if "dbar_volume" in hyper:
                run("dbar_volume" + suffix, lambda f=field_fn: energy_dbar_volume(
                    f(), degree=max(coeffs().K, 1), margin=config.margin, step=config.step))
            if "stokes_boundary" in hyper:
                run("stokes_boundary" + suffix, lambda f=field_fn: energy_stokes_boundary(
                    f(), degree=max(coeffs().K, 1), margin=config.margin, step=config.step))
    elif hyper:
        for f in hyper:
            report.errors[f] = "UnsupportedInput: hypercomplex forms need n >= 3"

    if "spectral" in forms and "c" in coeffs_cache:
        report.diagnostics.update(_flux_divergence(coeffs(), config.abel, config.divergence_cap))
    return report


def with_forms(config: EnergyConfig, forms) -> EnergyConfig:
    return replace(config, forms=tuple(forms))
