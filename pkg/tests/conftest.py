import numpy as np
import pytest

from douglas_energy.harmonics import SpectralCoefficients, harmonic_basis


def unit_vectors(rng, count, n):
    g = rng.standard_normal((count, n))
    return g / np.linalg.norm(g, axis=1, keepdims=True)


def ball_points(rng, count, n, rmax=0.9):
    return unit_vectors(rng, count, n) * (rmax * rng.uniform(size=count) ** (1.0 / n))[:, None]


def random_spectrum(rng, n, K, low=-1.0, high=1.0):
    return SpectralCoefficients(n, {k: rng.uniform(low, high, len(harmonic_basis(n, k))) for k in range(K + 1)})


@pytest.fixture
def rng():
    return np.random.Generator(np.random.PCG64(20240611))


_CRITERIA: list[str] = []


@pytest.fixture
def criterion():
    """Record one PASS/FAIL line per acceptance criterion, then assert it."""

    def record(number: int, ok: bool, detail: str) -> None:
        line = f"{'PASS' if ok else 'FAIL'} criterion {number}: {detail}"
        print(line)
        _CRITERIA.append(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_CRITERIA, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
