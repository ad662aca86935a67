"""Command line entry point: energy reports, convergence sweeps, checks and kernel tables."""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from .energy import (
    ALL_FORMS,
    DEFAULT_ABEL,
    DOUBLE_MODES,
    EXTENSIONS,
    HARMONIC_FORMS,
    EnergyConfig,
    EnergyReport,
    emit_report,
    energy_report,
    energy_spectral,
    spectrum_for,
)
from .expr import ExprError, eval_expression, parse_expression, polynomial_degree
from .extension import abel_kernel_sums, conjugate_poisson_kernel, poisson_kernel
from .harmonics import MAX_BASIS_DEGREE, BoundaryFunction, SpectralCoefficients, harmonic_basis
from .quadrature import MAX_DIM, MIN_DIM

PRESETS = ("constant", "coordinate", "cos", "random")


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    n: int = 3
    expr: str | None = None
    modes: list | None = None  # [(k, j, value), ...]
    preset: str | None = None
    forms: list | None = None  # default: every form that applies to n
    level: int = 2
    levels: list = field(default_factory=lambda: [1, 2, 3, 4])
    K: int = 8
    abel: list = field(default_factory=lambda: list(DEFAULT_ABEL))
    double_mode: str = "polar"
    extension: str = "lemma"
    seed: int = 0
    out: str | None = None
    format: str = "json"
    fail_over: float | None = None
    record_timings: bool = True

    def validate(self) -> None:
        if not MIN_DIM <= self.n <= MAX_DIM:
            raise ConfigError(f"n must lie in {MIN_DIM}..{MAX_DIM}, got {self.n}")
        given = [x for x in (self.expr, self.modes, self.preset) if x is not None]
        if len(given) != 1:
            raise ConfigError("give exactly one of expr, modes, preset")
        if self.preset is not None and self.preset not in PRESETS:
            raise ConfigError(f"unknown preset {self.preset!r}; choose from {PRESETS}")
        if self.preset == "cos" and self.n != 2:
            raise ConfigError("preset 'cos' is the n = 2 function cos t")
        if self.forms is not None and not self.forms:
            raise ConfigError("at least one form must be requested")
        if self.format not in ("json", "csv"):
            raise ConfigError("format must be json or csv")
        if self.fail_over is not None and not self.fail_over >= 0.0:
            raise ConfigError("fail_over must be a non-negative tolerance")
        try:
            self.energy_config()
            if self.modes is not None:
                if any(not 0 <= int(k) <= MAX_BASIS_DEGREE for k, _, _ in self.modes):
                    raise ValueError(f"mode degrees must lie in 0..{MAX_BASIS_DEGREE}")
                SpectralCoefficients.from_modes(self.n, [(int(k), int(j), float(v)) for k, j, v in self.modes])
        except (ValueError, TypeError) as exc:
            raise ConfigError(str(exc)) from None
        if self.expr is not None:
            parse_expression(self.expr, self.n)

    def energy_config(self) -> EnergyConfig:
        forms = self.forms
        if forms is None:
            forms = ALL_FORMS if self.n >= 3 else HARMONIC_FORMS
        return EnergyConfig(
            forms=tuple(forms),
            K=self.K,
            level=self.level,
            double_mode=self.double_mode,
            abel=tuple(self.abel),
            extension=self.extension,
            seed=self.seed,
            record_timings=self.record_timings,
        )


def _random_spectrum(n: int, K: int, seed: int) -> SpectralCoefficients:
    rng = np.random.Generator(np.random.PCG64(seed))
    return SpectralCoefficients(n, {k: rng.uniform(-1.0, 1.0, len(harmonic_basis(n, k))) for k in range(K + 1)})


def boundary_from_config(cfg: RunConfig) -> BoundaryFunction:
    n = cfg.n
    if cfg.preset == "constant":
        return BoundaryFunction(n, lambda x: np.ones(x.shape[0]), "constant", degree=0)
    if cfg.preset in ("coordinate", "cos"):
        label = "cos t" if cfg.preset == "cos" else "x0"
        return BoundaryFunction(n, lambda x: x[:, 0].copy(), label, degree=1)
    if cfg.preset == "random":
        coeffs = _random_spectrum(n, min(cfg.K, 5), cfg.seed)
        return BoundaryFunction.from_spectrum(coeffs, f"random(seed={cfg.seed})")
    if cfg.modes is not None:
        coeffs = SpectralCoefficients.from_modes(n, [(int(k), int(j), float(v)) for k, j, v in cfg.modes])
        return BoundaryFunction.from_spectrum(coeffs, "modes")
    ast = parse_expression(cfg.expr, n)
    deg = polynomial_degree(ast)
    if deg is not None and deg > MAX_BASIS_DEGREE:
        deg = None
    return BoundaryFunction(n, lambda x: eval_expression(ast, x), cfg.expr, degree=deg)


def parse_modes(text: str) -> list:
    """'k:j:v,k:j:v' into [(k, j, v), ...]."""
    out = []
    for item in filter(None, (s.strip() for s in text.split(","))):
        parts = item.split(":")
        if len(parts) != 3:
            raise ConfigError(f"mode {item!r} is not of the form k:j:value")
        try:
            out.append((int(parts[0]), int(parts[1]), float(parts[2])))
        except ValueError:
            raise ConfigError(f"mode {item!r} is not of the form k:j:value") from None
    if not out:
        raise ConfigError("empty mode list")
    return out


def _floats(text: str) -> list:
    try:
        return [float(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise ConfigError(f"expected comma separated numbers, got {text!r}") from None


def _ints(text: str) -> list:
    try:
        return [int(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise ConfigError(f"expected comma separated integers, got {text!r}") from None


def violations(report: EnergyReport, tol: float) -> list[str]:
    """Forms whose deviation from the spectral value exceeds ``tol`` (relative; absolute when it is 0)."""
    bad = [f"{name}: {msg}" for name, msg in report.errors.items()]
    s = report.forms.get("spectral")
    if s is None:
        if len(report.forms) > 1 and report.max_relative_deviation() > tol:
            bad.append(f"pairwise deviation {report.max_relative_deviation():.3g} > {tol:g}")
        return bad
    for name, v in report.forms.items():
        dev = abs(v - s) / abs(s) if s != 0.0 else abs(v - s)
        if dev > tol:
            bad.append(f"{name}: deviation {dev:.3g} > {tol:g}")
    return bad


def _write(data: bytes, out: str | None) -> None:
    if out is None or out == "-":
        sys.stdout.write(data.decode())
    else:
        Path(out).write_bytes(data)


def run_energy(cfg: RunConfig) -> int:
    u = boundary_from_config(cfg)
    report = energy_report(u, cfg.energy_config())
    _write(emit_report(report, cfg.format), cfg.out)
    if cfg.fail_over is not None:
        bad = violations(report, cfg.fail_over)
        for line in bad:
            print(f"threshold violated: {line}", file=sys.stderr)
        return 1 if bad else 0
    return 0


def run_converge(cfg: RunConfig) -> int:
    """Double-integral sweep over levels; the level drives the outer and direction rules."""
    u = boundary_from_config(cfg)
    general = replace(u, degree=None)  # let the level, not the degree hint, pick the rules
    reference = energy_spectral(spectrum_for(u, cfg.energy_config()))
    rows = ["level,value,abs_dev,rel_dev"]
    rel = 0.0
    stem = Path(cfg.out) if cfg.out else None
    for level in cfg.levels:
        sweep = replace(cfg, level=level, forms=["double_integral"]).energy_config()
        report = energy_report(general, sweep)
        if "double_integral" not in report.forms:
            raise ConfigError(f"level {level}: {report.errors.get('double_integral')}")
        value = report.forms["double_integral"]
        dev = abs(value - reference)
        rel = dev / abs(reference) if reference != 0.0 else dev
        rows.append(f"{level},{value:.17g},{dev:.17g},{rel:.17g}")
        if stem is not None:
            path = stem.with_name(f"{stem.stem}_level{level}.{cfg.format}")
            path.write_bytes(emit_report(report, cfg.format))
    _write(("\n".join(rows) + "\n").encode(), cfg.out)
    if cfg.fail_over is not None and rel > cfg.fail_over:
        print(f"threshold violated: final relative deviation {rel:.3g}", file=sys.stderr)
        return 1
    return 0


def run_kernels(cfg: RunConfig, radii: list, K: int) -> int:
    """Tabulate P_r, |Q_r|, |S_r| and Abel partial sums along a meridian."""
    n = cfg.n
    if n < 3:
        raise ConfigError("kernel tables need n >= 3")
    rows = ["r,t,P,Q_norm,S_norm,abel_P,abel_Q_norm,abel_error"]
    xi = np.zeros(n)
    xi[0] = 1.0
    for r in radii:
        for t in np.linspace(-0.95, 0.95, 11):
            eta = np.zeros(n)
            eta[0], eta[1] = t, math.sqrt(1.0 - t * t)
            P = poisson_kernel(n, r, xi, eta)
            Q = conjugate_poisson_kernel(n, r, xi, eta)
            S = Q.copy()
            S[0] += P
            aP, aQ = abel_kernel_sums(n, r, xi, eta, K)
            err = max(abs(float(aP) - P), float(np.max(np.abs(aQ - Q))))
            rows.append(
                f"{r:.17g},{t:.17g},{P:.17g},{np.linalg.norm(Q):.17g},{np.linalg.norm(S):.17g},"
                f"{float(aP):.17g},{np.linalg.norm(aQ):.17g},{err:.17g}"
            )
    _write(("\n".join(rows) + "\n").encode(), cfg.out)
    return 0


def run_verify(cfg: RunConfig) -> int:
    from .verify import run_checks

    results = run_checks(cfg.seed)
    lines = [f"{'PASS' if ok else 'FAIL'} {name}: {detail}" for name, ok, detail in results]
    _write(("\n".join(lines) + "\n").encode(), cfg.out)
    return 0 if all(ok for _, ok, _ in results) else 1


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file with RunConfig fields; flags override it")
    common.add_argument("--n", type=int, help="ambient dimension (2..6)")
    src = common.add_mutually_exclusive_group()
    src.add_argument("--expr", help="boundary function, e.g. 'x0^2 - x1^2'")
    src.add_argument("--modes", help="spectral modes k:j:value, comma separated")
    src.add_argument("--preset", choices=PRESETS)
    common.add_argument("--forms", help=f"comma separated subset of {','.join(ALL_FORMS)}")
    common.add_argument("--level", type=int, help="quadrature level")
    common.add_argument("--K", type=int, help="spectral truncation for non-polynomial data")
    common.add_argument("--abel", help="comma separated Abel radii in (0, 1)")
    common.add_argument("--seed", type=int)
    common.add_argument("--out", help="output path (default stdout)")
    common.add_argument("--format", choices=("json", "csv"))
    common.add_argument("--fail-over", type=float, dest="fail_over", metavar="REL_TOL",
                        help="exit 1 when any form deviates from the spectral value by more")
    common.add_argument("--double-mode", choices=DOUBLE_MODES, dest="double_mode")
    common.add_argument("--extension", choices=EXTENSIONS)
    common.add_argument("--no-timings", action="store_true", help="omit wall-clock times (byte-stable output)")

    parser = argparse.ArgumentParser(prog="douglas-energy", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("energy", parents=[common], help="compute an energy report")
    conv = sub.add_parser("converge", parents=[common], help="double-integral sweep over levels")
    conv.add_argument("--levels", help="comma separated levels (default 1,2,3,4)")
    sub.add_parser("verify", parents=[common], help="run the invariant checks")
    kern = sub.add_parser("kernels", parents=[common], help="tabulate kernels and Abel sums")
    kern.add_argument("--radii", default="0.3,0.5,0.9")
    kern.add_argument("--terms", type=int, default=120)
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    base: dict = {}
    if args.config:
        try:
            base = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from None
        if not isinstance(base, dict):
            raise ConfigError("config file must hold a JSON object")
        known = {f.name for f in fields(RunConfig)}
        unknown = set(base) - known
        if unknown:
            raise ConfigError(f"unknown config fields: {sorted(unknown)}")
    cfg = RunConfig(**base)
    overrides = {}
    for name in ("n", "level", "K", "seed", "out", "format", "fail_over", "double_mode", "extension"):
        value = getattr(args, name, None)
        if value is not None:
            overrides[name] = value
    if args.expr is not None or args.modes is not None or args.preset is not None:
        overrides.update(expr=None, modes=None, preset=None)
        if args.expr is not None:
            overrides["expr"] = args.expr
        elif args.modes is not None:
            overrides["modes"] = parse_modes(args.modes)
        else:
            overrides["preset"] = args.preset
    if args.forms:
        overrides["forms"] = [s.strip() for s in args.forms.split(",") if s.strip()]
    if args.abel:
        overrides["abel"] = _floats(args.abel)
    if getattr(args, "levels", None):
        overrides["levels"] = _ints(args.levels)
    if args.no_timings:
        overrides["record_timings"] = False
    cfg = replace(cfg, **overrides)
    if args.command in ("verify", "kernels") and cfg.expr is None and cfg.modes is None and cfg.preset is None:
        cfg = replace(cfg, preset="constant")
    return cfg


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = config_from_args(args)
        cfg.validate()
        if args.command == "energy":
            return run_energy(cfg)
        if args.command == "converge":
            return run_converge(cfg)
        if args.command == "kernels":
            return run_kernels(cfg, _floats(args.radii), args.terms)
        return run_verify(cfg)
    except (ConfigError, ExprError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def config_to_json(cfg: RunConfig) -> str:
    return json.dumps(asdict(cfg), indent=2)


if __name__ == "__main__":
    sys.exit(main())
