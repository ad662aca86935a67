"""Quick invariant checks behind the ``verify`` subcommand.

Each check returns (name, passed, detail).  The thresholds are the ones the
test suite uses; the checks run at reduced sample counts to stay fast.
"""

from __future__ import annotations

import math

import numpy as np

from . import clifford as cl
from .energy import EnergyConfig, energy_dbar_volume, energy_report, energy_spectral, energy_stokes_boundary
from .extension import (
    QUATERNION_FRAME,
    abel_kernel_sums,
    conjugate_poisson_kernel,
    dirac_apply,
    gradient_potential_field,
    lemma_field,
    poisson_kernel,
    schwarz_extend,
)
from .harmonics import (
    BoundaryFunction,
    SpectralCoefficients,
    enumerate_harmonic_dimension,
    harmonic_basis,
    zonal_sum,
)
from .quadrature import product_rule
from .special import cnk, dim_harmonics, gegenbauer_all, jkernel, jseries, legendre_pkn, legendre_pkn_all


def _unit(rng, count, n):
    g = rng.standard_normal((count, n))
    return g / np.linalg.norm(g, axis=1, keepdims=True)


def _ball(rng, count, n, rmax=0.9):
    return _unit(rng, count, n) * (rmax * rng.uniform(size=count) ** (1.0 / n))[:, None]


def _random_spectrum(rng, n, K):
    return SpectralCoefficients(n, {k: rng.uniform(-1, 1, len(harmonic_basis(n, k))) for k in range(K + 1)})


def check_quaternion_table(rng):
    i, j, k = (cl.Multivector.blade(b, 2) for b in (1, 2, 3))
    ok = (i * j).allclose(k) and (j * k).allclose(i) and (k * i).allclose(j)
    ok &= (j * i).allclose(-k) and all((q * q).allclose(-1.0) for q in (i, j, k))
    return "quaternion table", ok, "i j = k, j k = i, k i = j, squares -1"


def check_generating_functions(rng):
    worst = 0.0
    t = np.linspace(-1, 1, 21)
    for n in (3, 4, 5):
        lam = (n - 2) / 2.0
        for x in (0.3, 0.6):
            c = gegenbauer_all(300, lam, t)
            total = (x ** np.arange(301))[:, None] * c
            worst = max(worst, float(np.max(np.abs(total.sum(0) - (1 - 2 * t * x + x * x) ** -lam))))
    p = legendre_pkn_all(2, 500, t)
    ks = np.arange(1, 501)[:, None]
    log_sum = np.sum(0.5**ks / ks * p[1:], axis=0)
    worst = max(worst, float(np.max(np.abs(log_sum + 0.5 * np.log(1 - t + 0.25)))))
    return "generating functions", worst <= 1e-9, f"max error {worst:.2e}"


def check_jseries(rng):
    worst = 0.0
    for n in (2, 3, 4):
        for r in (0.5, 0.9):
            t = np.linspace(-0.9, 0.9, 7)
            worst = max(worst, float(np.max(np.abs(jseries(n, r, t, 400) - jkernel(n, r, t)))))
    return "J series", worst <= 1e-9, f"max error {worst:.2e}"


def check_jratio(rng):
    ok = True
    worst = 0.0
    for n in (2, 3, 4):
        r = np.linspace(0.5, 0.999, 40)[:, None]
        theta = np.linspace(0.1, math.pi, 60)[None, :]
        ratios = np.abs(np.vectorize(lambda rr, tt: jkernel(n, rr, math.cos(tt)))(r, theta)) / jkernel(
            n, 1.0, np.cos(theta)
        )
        worst = max(worst, float(ratios.max()) / (n - 1))
        ok &= bool(ratios.max() <= n - 1)
    return "J ratio bound", ok, f"max ratio / (n - 1) = {worst:.4f}"


def check_addition_theorem(rng):
    worst = 0.0
    for n in (2, 3, 4):
        for k in range(5):
            xi, eta = _unit(rng, 5, n), _unit(rng, 5, n)
            lhs = zonal_sum(n, k, xi, eta)
            rhs = cnk(n, k) * legendre_pkn(n, k, np.sum(xi * eta, axis=1))
            worst = max(worst, float(np.max(np.abs(lhs - rhs))))
    return "addition theorem", worst <= 1e-10, f"max error {worst:.2e}"


def check_dimensions(rng):
    bad = [
        (n, k)
        for n in (2, 3, 4, 5)
        for k in range(7)
        if not dim_harmonics(n, k) == len(harmonic_basis(n, k)) == enumerate_harmonic_dimension(n, k)
    ]
    return "dimension audit", not bad, "all match" if not bad else f"mismatch at {bad}"


def check_kernels(rng):
    worst = 0.0
    for n in (3, 4):
        xi, eta = _unit(rng, 10, n), _unit(rng, 10, n)
        P, Q = abel_kernel_sums(n, 0.5, xi, eta, 120)
        worst = max(worst, float(np.max(np.abs(P - poisson_kernel(n, 0.5, xi, eta)))))
        worst = max(worst, float(np.max(np.abs(Q - conjugate_poisson_kernel(n, 0.5, xi, eta)))))
    rule = product_rule(4, 32)  # the r = 0.9 kernel needs degree ~250 to reach 1e-8
    mass = float(np.sum(rule.weights * poisson_kernel(4, 0.9, np.eye(4)[0], rule.nodes)))
    ok = worst <= 1e-8 and abs(mass - 1.0) <= 1e-8
    return "Abel kernel sums", ok, f"max error {worst:.2e}, |mass - 1| = {abs(mass - 1):.2e}"


def check_monogenic(rng):
    worst = route = quat = 0.0
    for n in (3, 4):
        coeffs = _random_spectrum(rng, n, 3)
        F = lemma_field(coeffs)
        x = _ball(rng, 20, n)
        worst = max(worst, float(np.max(cl.norm(dirac_apply(F, x)[0]))))
        u = BoundaryFunction.from_spectrum(coeffs)
        route = max(route, float(np.max(np.abs(schwarz_extend(u, x[:5]) - F(x[:5])))))
        if n == 4:
            Fq = lemma_field(coeffs, QUATERNION_FRAME)
            quat = float(np.max(np.abs(cl.cl03_to_quaternion(F(x)) - Fq(x))))
    ok = worst <= 1e-6 and route <= 1e-6 and quat <= 1e-10
    return "monogenic extensions", ok, f"|DF| {worst:.1e}, routes {route:.1e}, quaternion {quat:.1e}"


def check_closed_forms(rng):
    details = []
    ok = True
    for n, target in ((2, math.pi), (3, 4 * math.pi / 3), (4, math.pi**2 / 2)):
        u = BoundaryFunction(n, lambda x: x[:, 0].copy(), "x0", degree=1)
        report = energy_report(u, EnergyConfig(record_timings=False, quaternion=False))
        dev = max(abs(v - target) / target for v in report.forms.values())
        ok &= dev <= 1e-3 and not report.errors if n >= 3 else dev <= 1e-3
        details.append(f"n={n} {dev:.1e}")
    return "closed-form energies", ok, ", ".join(details)


def _hypercomplex_deviation(rng, build) -> float:
    worst = 0.0
    for n in (3, 4):
        coeffs = _random_spectrum(rng, n, 3)
        F = build(coeffs)
        target = energy_spectral(coeffs)
        for value in (energy_dbar_volume(F, degree=3), energy_stokes_boundary(F, degree=3)[0]):
            worst = max(worst, abs(value - target) / target)
    return worst


def check_hypercomplex_lemma(rng):
    dev = _hypercomplex_deviation(rng, lemma_field)
    return "hypercomplex energy, integral extension", dev <= 1e-3, f"max relative deviation {dev:.2e}"


def check_hypercomplex_potential(rng):
    dev = _hypercomplex_deviation(rng, gradient_potential_field)
    return "hypercomplex energy, gradient potential", dev <= 1e-3, f"max relative deviation {dev:.2e}"


CHECKS = (
    check_quaternion_table,
    check_generating_functions,
    check_jseries,
    check_jratio,
    check_addition_theorem,
    check_dimensions,
    check_kernels,
    check_monogenic,
    check_closed_forms,
    check_hypercomplex_lemma,
    check_hypercomplex_potential,
)


def run_checks(seed: int = 0) -> list[tuple[str, bool, str]]:
    rng = np.random.Generator(np.random.PCG64(seed))
    return [check(rng) for check in CHECKS]
