"""Batch command-line front end.

Every operation is a subcommand taking parameters from inline flags and/or a
JSON config (``--config``); inline flags win.  Primary output goes to
``--out`` (CSV or JSON per subcommand; JSON prints to stdout when ``--out``
is omitted) with a JSON metadata sidecar ``<out>.meta.json`` carrying the
package version, the merged config echo, and timings.  ``--plot`` renders a
figure next to the delimited output.

Exit codes: 0 success, 2 invalid input, 3 numerical failure (singular
approach, blow-up, non-convergence), 4 internal invariant violation.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import random
import sys
import time
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from .errors import InputError, InvariantViolationError, NumericalError, OscqError

TWO_PI = 2 * math.pi

GLOBAL_KEYS = {"out", "seed", "tol", "threads", "plot", "config"}


@dataclass
class Ctx:
    command: str
    params: dict
    out: Path | None
    seed: int
    tol: float | None
    threads: int
    plot: bool

    def require_out(self) -> Path:
        if self.out is None:
            raise InputError(f"{self.command} writes CSV and requires --out")
        return self.out

    def tol_or(self, default: float) -> float:
        return default if self.tol is None else self.tol


# ---------------------------------------------------------------------------
# Output helpers
# ---------------------------------------------------------------------------


def _round_floats(obj):
    """Clamp every float to 17 significant digits for stable serialization."""
    if isinstance(obj, float):
        return float(f"{obj:.17g}")
    if isinstance(obj, dict):
        return {k: _round_floats(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round_floats(v) for v in obj]
    return obj


def _emit_json(ctx: Ctx, payload: dict) -> None:
    text = json.dumps(_round_floats(payload), indent=2, sort_keys=True)
    if ctx.out is not None:
        ctx.out.write_text(text + "\n")
    else:
        print(text)


def _write_sidecar(ctx: Ctx, seconds: float, extra: dict | None = None) -> None:
    if ctx.out is None:
        return
    sidecar = {
        "version": __version__,
        "command": ctx.command,
        "config": _round_floats(dict(ctx.params)),
        "seed": ctx.seed,
        "tol": ctx.tol,
        "threads": ctx.threads,
        "timings": {"seconds": seconds},
    }
    if extra:
        sidecar.update(extra)
    path = Path(str(ctx.out) + ".meta.json")
    path.write_text(json.dumps(sidecar, indent=2, sort_keys=True) + "\n")


def _figure_path(ctx: Ctx) -> Path:
    return ctx.require_out().with_suffix(".png")


def _maybe_announce(message: str) -> None:
    print(message)


# ---------------------------------------------------------------------------
# Subcommand implementations (each returns the stdout/JSON payload)
# ---------------------------------------------------------------------------


def _parse_poly_arg(text: str, dof):
    from .poly_algebra import parse_poly

    return parse_poly(text, int(dof) if dof else None)


def cmd_bracket(ctx: Ctx) -> dict:
    from .poly_algebra import poisson_bracket

    f = _parse_poly_arg(ctx.params["f"], ctx.params.get("dof"))
    g = _parse_poly_arg(ctx.params["g"], ctx.params.get("dof"))
    if f.num_dof != g.num_dof:
        dof = max(f.num_dof, g.num_dof)
        f = _parse_poly_arg(ctx.params["f"], dof)
        g = _parse_poly_arg(ctx.params["g"], dof)
    result = poisson_bracket(f, g)
    return {"f": f.to_text(), "g": g.to_text(), "result": result.to_text()}


def cmd_moyal(ctx: Ctx) -> dict:
    from .poly_algebra import moyal_bracket

    f = _parse_poly_arg(ctx.params["f"], ctx.params.get("dof"))
    g = _parse_poly_arg(ctx.params["g"], ctx.params.get("dof"))
    if f.num_dof != g.num_dof:
        dof = max(f.num_dof, g.num_dof)
        f = _parse_poly_arg(ctx.params["f"], dof)
        g = _parse_poly_arg(ctx.params["g"], dof)
    result = moyal_bracket(f, g)
    return {"f": f.to_text(), "g": g.to_text(), "result": result.to_text()}


def cmd_classify(ctx: Ctx) -> dict:
    from .poly_algebra import classify_subalgebra

    f = _parse_poly_arg(ctx.params["f"], ctx.params.get("dof"))
    return {"f": f.to_text(), "tag": classify_subalgebra(f).value}


def cmd_quantize(ctx: Ctx) -> dict:
    from .weyl_algebra import weyl_quantize

    f = _parse_poly_arg(ctx.params["f"], ctx.params.get("dof"))
    return {
        "f": f.to_text(),
        "operator": weyl_quantize(f).to_text(),
        "ordering": "weyl-symmetric",
    }


def cmd_dirac_defect(ctx: Ctx) -> dict:
    from .weyl_algebra import dirac_defect

    f = _parse_poly_arg(ctx.params["f"], ctx.params.get("dof"))
    g = _parse_poly_arg(ctx.params["g"], ctx.params.get("dof"))
    if f.num_dof != g.num_dof:
        dof = max(f.num_dof, g.num_dof)
        f = _parse_poly_arg(ctx.params["f"], dof)
        g = _parse_poly_arg(ctx.params["g"], dof)
    defect = dirac_defect(f, g)
    return {
        "f": f.to_text(),
        "g": g.to_text(),
        "defect": defect.to_text(),
        "is_zero": defect.is_zero,
        "ordering": "weyl-symmetric",
    }


def cmd_gvh(ctx: Ctx) -> dict:
    from .poly_algebra import moyal_bracket, PolyObservable
    from .weyl_algebra import gvh_contradiction, weyl_quantize_graded

    report = gvh_contradiction()
    q = PolyObservable.q()
    p = PolyObservable.p()
    oracle = moyal_bracket(q**3, p**3) * Fraction(1, 9) - moyal_bracket(
        q**2 * p, q * p**2
    ) * Fraction(1, 3)
    payload = report.to_jsonable()
    payload["matches_moyal_oracle"] = weyl_quantize_graded(oracle) == report.difference
    return payload


def cmd_verify_conditions(ctx: Ctx) -> dict:
    from .weyl_algebra import verify_quantization_conditions

    basis_text = ctx.params["basis"]
    if isinstance(basis_text, str):
        pieces = [s for s in basis_text.split(";") if s.strip()]
    else:
        pieces = list(basis_text)
    if not pieces:
        raise InputError("empty basis")
    dof = ctx.params.get("dof")
    polys = [_parse_poly_arg(s, dof) for s in pieces]
    width = max(f.num_dof for f in polys)
    polys = [_parse_poly_arg(s, width) for s in pieces]
    report = verify_quantization_conditions(
        polys, rng=random.Random(ctx.seed), samples=int(ctx.params.get("samples", 12))
    )
    payload = report.to_jsonable()
    payload["basis"] = [f.to_text() for f in polys]
    return payload


def _build_system(which: str, c: float):
    from .dynamics import build_oscillator, harmonic_system

    if which == "harmonic":
        return harmonic_system()
    return build_oscillator(which, c)


def cmd_simulate(ctx: Ctx) -> dict:
    from .dynamics import integrate

    which = ctx.params["system"]
    system = _build_system(which, float(ctx.params.get("c", 1.0)))
    z0 = [float(ctx.params["q0"]), float(ctx.params.get("p0", 0.0))]
    t_end = float(ctx.params.get("t_end", 2 * TWO_PI))
    tol = ctx.tol_or(1e-10)
    method = ctx.params.get("method", "adaptive")
    steps = ctx.params.get("steps")
    traj = integrate(system, z0, t_end, tol, method=method,
                     steps=int(steps) if steps else None)
    out = ctx.require_out()
    samples = ctx.params.get("samples")
    sample_times = (
        np.linspace(0.0, t_end, int(samples)) if samples else None
    )
    traj.to_csv(out, sample_times=sample_times)
    payload = traj.metadata()
    if ctx.plot:
        from .plots import plot_trajectory

        payload["figure"] = plot_trajectory(traj, _figure_path(ctx))
    return payload


def cmd_period(ctx: Ctx) -> dict:
    from .dynamics import detect_period, harmonic_system, integrate, isochrony_trajectory

    which = ctx.params["system"]
    c = float(ctx.params.get("c", 1.0))
    z0 = [float(ctx.params.get("q0", 2.0)), float(ctx.params.get("p0", 0.0))]
    t_end = float(ctx.params.get("t_end", 3.5 * TWO_PI))
    tol = ctx.tol_or(1e-11)
    detect_tol = float(ctx.params.get("detect_tol", 1e-6))
    if which == "harmonic":
        traj = integrate(harmonic_system(), z0, t_end, tol)
    else:
        traj = isochrony_trajectory(which, c, z0, t_end, tol)
    estimate = detect_period(traj, detect_tol)
    _maybe_announce(f"period = {estimate.period:.6f} (residual {estimate.residual:.3e})")
    return {
        "system": which,
        "c": c,
        "q0": z0[0],
        "p0": z0[1],
        "period": estimate.period,
        "residual": estimate.residual,
    }


def cmd_newton_check(ctx: Ctx) -> dict:
    from .dynamics import build_oscillator, integrate, newton_residual

    c = float(ctx.params.get("c", 1.0))
    z0 = [float(ctx.params.get("q0", 2.0)), float(ctx.params.get("p0", 0.0))]
    t_end = float(ctx.params.get("t_end", 2 * TWO_PI))
    tol = ctx.tol_or(1e-12)
    traj = integrate(build_oscillator("H2", c), z0, t_end, tol)
    return {
        "c": c,
        "q0": z0[0],
        "p0": z0[1],
        "t_end": t_end,
        "tol": tol,
        "max_residual": newton_residual(traj),
    }


def cmd_c_scaling(ctx: Ctx) -> dict:
    from .dynamics import build_oscillator, c_scaling_check, integrate

    c1 = float(ctx.params["c1"])
    c2 = float(ctx.params["c2"])
    q0 = float(ctx.params.get("q0", 2.0))
    t_end = float(ctx.params.get("t_end", 2 * TWO_PI))
    tol = ctx.tol_or(1e-11)
    report = c_scaling_check(c1, c2, q0, t_end, tol)
    payload = report.to_jsonable()
    if ctx.plot:
        from .plots import plot_c_scaling

        ts = np.linspace(0.0, t_end, 1024)
        pairs = []
        for c in (c1, c2):
            traj = integrate(build_oscillator("H2", c), [q0, 0.0], t_end, tol)
            pairs.append((ts, traj.sample(ts)))
        payload["figure"] = plot_c_scaling(report, pairs, _figure_path(ctx))
    return payload


def _config_matrix(ctx: Ctx, key: str, default: np.ndarray) -> np.ndarray:
    raw = ctx.params.get(key)
    if raw is None:
        return default
    arr = np.asarray(raw, dtype=float)
    if arr.shape != default.shape:
        raise InputError(f"{key} must have shape {default.shape}, got {arr.shape}")
    return arr


def cmd_matrix(ctx: Ctx) -> dict:
    from .matrix_oscillator import MatrixState, integrate_matrix

    n = int(ctx.params.get("n", 2))
    b = float(ctx.params.get("b", 0.0))
    t_end = float(ctx.params.get("t_end", TWO_PI))
    tol = ctx.tol_or(1e-11)
    a_mat = _config_matrix(ctx, "a", -np.eye(n))
    u0 = _config_matrix(ctx, "u0", np.eye(n))
    v0 = _config_matrix(ctx, "v0", np.zeros((n, n)))
    traj = integrate_matrix(a_mat, b, MatrixState(u0, v0), t_end, tol)
    out = ctx.require_out()
    traj.to_csv(out)
    payload = traj.metadata()
    if ctx.plot:
        from .plots import plot_matrix_trajectory

        payload["figure"] = plot_matrix_trajectory(traj, _figure_path(ctx))
    return payload


def cmd_manybody(ctx: Ctx) -> dict:
    from .quartic_manybody import ManyBodyState, QuarticParams, integrate_manybody

    n = int(ctx.params.get("n", 2))
    b = float(ctx.params.get("b", 0.0))
    t_end = float(ctx.params.get("t_end", 10.0))
    tol = ctx.tol_or(1e-11)
    a_mat = _config_matrix(ctx, "a", -np.eye(n))
    raw_state = ctx.params.get("state")
    if raw_state is not None:
        state = ManyBodyState.from_json(
            raw_state if isinstance(raw_state, str) else json.dumps(raw_state)
        )
        if state.n != n:
            raise InputError(f"state has N={state.n}, expected n={n}")
    else:
        rng = np.random.default_rng(ctx.seed)
        state = ManyBodyState.random(n, rng, scale=float(ctx.params.get("scale", 0.3)))
    traj = integrate_manybody(state, QuarticParams(a_mat, b), t_end, tol)
    out = ctx.require_out()
    traj.to_csv(out)
    payload = traj.metadata()
    if ctx.plot:
        from .plots import plot_manybody_trajectory

        payload["figure"] = plot_manybody_trajectory(traj, _figure_path(ctx))
    return payload


def cmd_rotation_check(ctx: Ctx) -> dict:
    from .quartic_manybody import (
        ManyBodyState,
        QuarticParams,
        evaluate_H,
        random_rotation,
        rotation_invariance_check,
    )

    n = int(ctx.params.get("n", 2))
    rotations = int(ctx.params.get("rotations", 100))
    rng = np.random.default_rng(ctx.seed)
    worst = 0.0
    for _ in range(rotations):
        state = ManyBodyState.random(n, rng, scale=0.6)
        params = QuarticParams(rng.standard_normal((n, n)), float(rng.standard_normal()))
        rot = random_rotation(rng)
        dev = rotation_invariance_check(state, params, rot)
        worst = max(worst, dev / (1.0 + abs(evaluate_H(state, params))))
    return {"n": n, "rotations": rotations, "max_relative_deviation": worst}


def cmd_spectrum(ctx: Ctx) -> dict:
    from .schrodinger_spectra import (
        SpectralProblem,
        build_quantum_operator,
        dump_operator,
        ground_state,
    )

    which = ctx.params["system"]
    interval = None
    if ctx.params.get("x_lo") is not None or ctx.params.get("x_hi") is not None:
        if ctx.params.get("x_lo") is None or ctx.params.get("x_hi") is None:
            raise InputError("provide both x_lo and x_hi, or neither")
        interval = (float(ctx.params["x_lo"]), float(ctx.params["x_hi"]))
    problem = SpectralProblem(
        which,
        float(ctx.params.get("c", 1.0)),
        float(ctx.params.get("hbar", 1.0)),
        interval,
        int(ctx.params.get("grid", 2048)),
    )
    result = ground_state(
        problem,
        k=int(ctx.params.get("k", 1)),
        margin_check=bool(ctx.params.get("margin_check", False)),
    )
    dump = ctx.params.get("dump_operator")
    if dump:
        dump_operator(build_quantum_operator(problem), dump)
    payload = result.to_jsonable()
    if ctx.plot:
        from .plots import plot_ground_state

        payload["figure"] = plot_ground_state(result, _figure_path(ctx))
    return payload


def cmd_e0_scan(ctx: Ctx) -> dict:
    from .schrodinger_spectra import e0_scan

    which = ctx.params["system"]
    raw = ctx.params["c_values"]
    if isinstance(raw, str):
        c_values = [float(s) for s in raw.split(",") if s.strip()]
    else:
        c_values = [float(v) for v in raw]
    interval = None
    if ctx.params.get("x_lo") is not None and ctx.params.get("x_hi") is not None:
        interval = (float(ctx.params["x_lo"]), float(ctx.params["x_hi"]))
    scan = e0_scan(
        which,
        c_values,
        hbar=float(ctx.params.get("hbar", 1.0)),
        grid_points=int(ctx.params.get("grid", 2048)),
        interval=interval,
        classical_check=bool(ctx.params.get("classical_check", False)),
        threads=ctx.threads,
    )
    out = ctx.require_out()
    scan.to_csv(out)
    payload = scan.to_jsonable()
    if ctx.plot:
        from .plots import plot_e0_scan

        payload["figure"] = plot_e0_scan(scan, _figure_path(ctx))
    return payload


def cmd_selftest(ctx: Ctx) -> dict:
    checks: list[tuple[str, bool, str]] = []

    def check(name: str, fn):
        try:
            fn()
            checks.append((name, True, ""))
            print(f"ok   - {name}")
        except Exception as exc:  # noqa: BLE001 - aggregated into the exit code
            checks.append((name, False, f"{type(exc).__name__}: {exc}"))
            print(f"FAIL - {name}: {type(exc).__name__}: {exc}")

    def bracket_axioms():
        from .poly_algebra import poisson_bracket, random_observable

        rng = random.Random(ctx.seed)
        for _ in range(30):
            f = random_observable(rng, 2, 4)
            g = random_observable(rng, 2, 4)
            h = random_observable(rng, 2, 4)
            assert poisson_bracket(f, g) == -poisson_bracket(g, f)
            jac = (
                poisson_bracket(f, poisson_bracket(g, h))
                + poisson_bracket(g, poisson_bracket(h, f))
                + poisson_bracket(h, poisson_bracket(f, g))
            )
            assert jac.is_zero
            assert (
                poisson_bracket(f, g * h)
                == poisson_bracket(f, g) * h + g * poisson_bracket(f, h)
            )

    def moyal_fingerprints():
        from .poly_algebra import PolyObservable, moyal_bracket

        q = PolyObservable.q()
        p = PolyObservable.p()
        expected = q**2 * p**2 * 9 - PolyObservable.hbar(2) * Fraction(3, 2)
        assert moyal_bracket(q**3, p**3) == expected
        expected2 = q**2 * p**2 * 3 + PolyObservable.hbar(2) * Fraction(1, 2)
        assert moyal_bracket(q**2 * p, q * p**2) == expected2

    def gvh_exact():
        from .weyl_algebra import GaussianRational, WeylOperator, gvh_contradiction

        report = gvh_contradiction()
        expected = WeylOperator(1, {(0, 0, 2): GaussianRational.of(Fraction(-1, 3))})
        assert report.difference == expected

    def dirac_dichotomy():
        from .poly_algebra import PolyObservable
        from .weyl_algebra import dirac_defect

        rng = random.Random(ctx.seed + 1)
        q = PolyObservable.q()
        p = PolyObservable.p()
        basis_p2 = [PolyObservable.one(), q, p, q**2, p**2, q * p]
        for _ in range(20):
            f = sum(
                (b * Fraction(rng.randint(-5, 5), rng.randint(1, 3)) for b in basis_p2),
                PolyObservable.zero(1),
            )
            g = sum(
                (b * Fraction(rng.randint(-5, 5), rng.randint(1, 3)) for b in basis_p2),
                PolyObservable.zero(1),
            )
            assert dirac_defect(f, g).is_zero
        assert not dirac_defect(q**3, p**3).is_zero

    def oscillator_dynamics():
        from .dynamics import (
            build_oscillator,
            detect_period,
            harmonic_system,
            integrate,
            newton_residual,
        )

        traj = integrate(harmonic_system(), [1.0, 0.0], TWO_PI, 1e-11)
        assert np.max(np.abs(traj.states[-1] - np.array([1.0, 0.0]))) < 1e-8
        traj2 = integrate(build_oscillator("H2", 1.0), [2.0, 0.0], 3.5 * TWO_PI, 1e-11)
        est = detect_period(traj2, 1e-6)
        assert abs(est.period - TWO_PI) < 1e-5
        assert newton_residual(traj2) < 1e-7

    def matrix_case():
        from .matrix_oscillator import MatrixState, integrate_matrix

        traj = integrate_matrix(
            -np.eye(2), 0.0, MatrixState(np.eye(2), np.zeros((2, 2))), TWO_PI, 1e-11
        )
        assert np.max(np.abs(traj.states[-1].U - np.eye(2))) < 1e-8

    def manybody_case():
        from .quartic_manybody import (
            ManyBodyState,
            QuarticParams,
            evaluate_H,
            gradient,
            random_rotation,
            rotation_invariance_check,
        )

        rng = np.random.default_rng(ctx.seed)
        state = ManyBodyState.random(2, rng)
        params = QuarticParams(rng.standard_normal((2, 2)), 0.3)
        d_r, d_rho, d_p, d_pi = gradient(state, params)
        vec = state.flatten()
        h = 1e-5
        probe = vec.copy()
        probe[0] += h
        up = evaluate_H(ManyBodyState.unflatten(probe, 2), params)
        probe[0] -= 2 * h
        dn = evaluate_H(ManyBodyState.unflatten(probe, 2), params)
        fd = (up - dn) / (2 * h)
        assert abs(fd - d_r.ravel()[0]) < 1e-6 * (1 + abs(fd))
        for _ in range(5):
            dev = rotation_invariance_check(state, params, random_rotation(rng))
            assert dev <= 1e-10 * (1 + abs(evaluate_H(state, params)))

    def spectrum_case():
        from .schrodinger_spectra import SpectralProblem, ground_state

        result = ground_state(
            SpectralProblem("harmonic", grid_points=512, interval=(-10, 10)), k=3
        )
        for n in range(3):
            assert abs(result.eigenvalues[n] - (n + 0.5)) < 1e-3

    check("bracket axioms (antisymmetry, Jacobi, Leibniz)", bracket_axioms)
    check("moyal hbar^2 fingerprints", moyal_fingerprints)
    check("gvh contradiction is -(1/3) hbar^2 I", gvh_exact)
    check("dirac dichotomy on quantizable pairs", dirac_dichotomy)
    check("oscillator dynamics / period / newton residual", oscillator_dynamics)
    check("matrix oscillator harmonic return", matrix_case)
    check("quartic many-body gradient and rotation invariance", manybody_case)
    check("harmonic spectrum (n + 1/2)", spectrum_case)

    failed = [name for name, ok, _ in checks if not ok]
    if failed:
        raise InvariantViolationError(f"selftest failures: {', '.join(failed)}")
    return {
        "checks": [{"name": n, "ok": ok, "detail": d} for n, ok, d in checks],
        "all_ok": True,
    }


# ---------------------------------------------------------------------------
# Argument handling
# ---------------------------------------------------------------------------

# name -> (runner, {param: help}, needs_out)
COMMANDS: dict = {
    "bracket": (cmd_bracket, {"f": "first polynomial", "g": "second polynomial",
                              "dof": "degrees of freedom"}, False),
    "moyal": (cmd_moyal, {"f": "first polynomial", "g": "second polynomial",
                          "dof": "degrees of freedom"}, False),
    "classify": (cmd_classify, {"f": "polynomial", "dof": "degrees of freedom"}, False),
    "quantize": (cmd_quantize, {"f": "classical polynomial",
                                "dof": "degrees of freedom"}, False),
    "dirac-defect": (cmd_dirac_defect, {"f": "first polynomial",
                                        "g": "second polynomial",
                                        "dof": "degrees of freedom"}, False),
    "gvh": (cmd_gvh, {}, False),
    "verify-conditions": (cmd_verify_conditions,
                          {"basis": "semicolon-separated polynomials",
                           "samples": "random linear combinations to draw",
                           "dof": "degrees of freedom"}, False),
    "simulate": (cmd_simulate, {"system": "H2|H3|H4|harmonic", "c": "parameter c",
                                "q0": "initial coordinate", "p0": "initial momentum",
                                "t_end": "integration span", "samples": "resample count",
                                "method": "adaptive|midpoint", "steps": "midpoint steps"},
                 True),
    "period": (cmd_period, {"system": "H2|H3|H4|harmonic", "c": "parameter c",
                            "q0": "initial coordinate", "p0": "initial momentum",
                            "t_end": "window (>= 3 periods)",
                            "detect_tol": "return-distance threshold"}, False),
    "newton-check": (cmd_newton_check, {"c": "parameter c", "q0": "initial coordinate",
                                        "p0": "initial momentum",
                                        "t_end": "integration span"}, False),
    "c-scaling": (cmd_c_scaling, {"c1": "first c", "c2": "second c",
                                  "q0": "shared initial coordinate",
                                  "t_end": "integration span"}, False),
    "matrix": (cmd_matrix, {"n": "matrix size", "b": "cubic coefficient",
                            "t_end": "integration span",
                            "a": "config-only: A matrix entries",
                            "u0": "config-only: U(0)", "v0": "config-only: V(0)"}, True),
    "manybody": (cmd_manybody, {"n": "particle-index size", "b": "quartic coefficient",
                                "t_end": "integration span",
                                "a": "config-only: coupling matrix",
                                "state": "config-only: initial state JSON",
                                "scale": "random state scale"}, True),
    "rotation-check": (cmd_rotation_check, {"n": "particle-index size",
                                            "rotations": "number of rotations"}, False),
    "spectrum": (cmd_spectrum, {"system": "H2|H3|H4|harmonic", "c": "parameter c",
                                "hbar": "numeric hbar", "x_lo": "interval start",
                                "x_hi": "interval end", "grid": "interior grid points",
                                "k": "eigenvalues to report",
                                "margin_check": "also widen the interval",
                                "dump_operator": "write sparse operator text here"},
                 False),
    "e0-scan": (cmd_e0_scan, {"system": "H2|H3|H4|harmonic",
                              "c_values": "comma-separated c list",
                              "hbar": "numeric hbar", "grid": "interior grid points",
                              "x_lo": "interval start", "x_hi": "interval end",
                              "classical_check": "add classical q-deviation column"},
                True),
    "selftest": (cmd_selftest, {}, False),
}

_FLAG_TYPES = {
    "samples": str, "steps": str, "grid": str, "k": str, "n": str,
    "rotations": str, "dof": str,
    "margin_check": "bool_flag", "classical_check": "bool_flag",
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="oscq",
        description="Exact bracket/operator algebra and nonlinear-oscillator workbench",
    )
    parser.add_argument("--version", action="version", version=f"oscq {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, param_help, _needs_out) in COMMANDS.items():
        p = sub.add_parser(name, help=f"run the {name} operation")
        for key, help_text in param_help.items():
            flag = "--" + key.replace("_", "-")
            if _FLAG_TYPES.get(key) == "bool_flag":
                p.add_argument(flag, action="store_true", default=None, help=help_text)
            else:
                p.add_argument(flag, default=None, help=help_text)
        p.add_argument("--config", default=None, help="JSON config file")
        p.add_argument("--out", default=None, help="primary output path")
        p.add_argument("--seed", default=None, help="64-bit unsigned seed")
        p.add_argument("--tol", default=None, help="tolerance override")
        p.add_argument("--threads", default=None,
                       help="parallel scan workers (or OSCQ_THREADS)")
        p.add_argument("--plot", action="store_true", default=None,
                       help="render a figure next to the output")
    return parser


def _merge_config(command: str, args: argparse.Namespace) -> dict:
    _, param_help, _ = COMMANDS[command]
    allowed = set(param_help) | GLOBAL_KEYS
    merged: dict = {}
    if args.config:
        try:
            loaded = json.loads(Path(args.config).read_text())
        except FileNotFoundError:
            raise InputError(f"config file not found: {args.config}") from None
        except json.JSONDecodeError as exc:
            raise InputError(f"config is not valid JSON: {exc}") from None
        if not isinstance(loaded, dict):
            raise InputError("config must be a JSON object")
        unknown = set(loaded) - allowed
        if unknown:
            raise InputError(
                f"unknown config keys for {command}: {', '.join(sorted(unknown))}"
            )
        merged.update(loaded)
    for key in param_help:
        value = getattr(args, key, None)
        if value is not None:
            merged[key] = value
    for key in ("out", "seed", "tol", "threads", "plot"):
        value = getattr(args, key, None)
        if value is not None:
            merged[key] = value
    return merged


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    command = args.command
    try:
        merged = _merge_config(command, args)
        seed = int(merged.pop("seed", 0))
        if not 0 <= seed < 2**64:
            raise InputError("seed must be a 64-bit unsigned integer")
        tol = merged.pop("tol", None)
        tol = float(tol) if tol is not None else None
        threads_raw = merged.pop("threads", None)
        if threads_raw is None:
            threads_raw = os.environ.get("OSCQ_THREADS", "1")
        threads = int(threads_raw)
        if threads < 1:
            raise InputError("threads must be >= 1")
        plot = bool(merged.pop("plot", False))
        out_raw = merged.pop("out", None)
        merged.pop("config", None)
        ctx = Ctx(
            command=command,
            params=merged,
            out=Path(out_raw) if out_raw else None,
            seed=seed,
            tol=tol,
            threads=threads,
            plot=plot,
        )
        runner, param_help, needs_out = COMMANDS[command]
        if needs_out:
            ctx.require_out()
        missing = sorted(_required_params(command) - set(merged))
        if missing:
            raise InputError(
                f"{command} requires: "
                + ", ".join("--" + m.replace("_", "-") for m in missing)
            )
        start = time.perf_counter()
        payload = runner(ctx)
        elapsed = time.perf_counter() - start
        if needs_out:
            _write_sidecar(ctx, elapsed, extra={"summary": _round_floats(payload)})
            print(json.dumps(_round_floats(payload), indent=2, sort_keys=True))
        else:
            _emit_json(ctx, payload)
            _write_sidecar(ctx, elapsed)
        return 0
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except InvariantViolationError as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return 4
    except OscqError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4


def _required_params(command: str) -> set:
    return {
        "bracket": {"f", "g"},
        "moyal": {"f", "g"},
        "classify": {"f"},
        "quantize": {"f"},
        "dirac-defect": {"f", "g"},
        "verify-conditions": {"basis"},
        "simulate": {"system", "q0"},
        "period": {"system"},
        "c-scaling": {"c1", "c2"},
        "spectrum": {"system"},
        "e0-scan": {"system", "c_values"},
    }.get(command, set())


if __name__ == "__main__":
    sys.exit(main())
