"""Acceptance suite: one test per criterion, tolerances pinned as stated.

Each test prints a single `PASS criterion N` line with its runtime; run with
`pytest -s tests/test_acceptance.py` to see them live.
"""

import math
import random
import time
from fractions import Fraction

import numpy as np

from oscq.dynamics import (
    build_oscillator,
    c_scaling_check,
    detect_period,
    integrate,
    isochrony_trajectory,
    newton_residual,
)
from oscq.matrix_oscillator import (
    MatrixState,
    integrate_matrix,
    linear_closed_form,
)
from oscq.poly_algebra import (
    PolyObservable,
    moyal_bracket,
    poisson_bracket,
    random_observable,
)
from oscq.quartic_manybody import (
    ManyBodyState,
    QuarticParams,
    evaluate_H,
    gradient,
    integrate_manybody,
    random_rotation,
    rotation_invariance_check,
)
from oscq.schrodinger_spectra import (
    SpectralProblem,
    e0_scan,
    ground_state,
    observed_order,
)
from oscq.weyl_algebra import (
    GaussianRational,
    WeylOperator,
    commutator,
    dirac_defect,
    gvh_contradiction,
    over_i_hbar,
    weyl_quantize,
    weyl_quantize_graded,
    weyl_symbol,
)

TWO_PI = 2 * math.pi
Q = PolyObservable.q()
P = PolyObservable.p()


class _Budget:
    def __init__(self, number: int, seconds: float, label: str):
        self.number = number
        self.seconds = seconds
        self.label = label

    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, exc_type, exc, tb):
        elapsed = time.perf_counter() - self.start
        if exc_type is None:
            print(f"PASS criterion {self.number}: {self.label} [{elapsed:.2f}s]")
            assert elapsed < self.seconds, (
                f"criterion {self.number} exceeded its {self.seconds}s budget "
                f"({elapsed:.2f}s)"
            )
        else:
            print(f"FAIL criterion {self.number}: {self.label} [{elapsed:.2f}s]")
        return False


def _random_p2(rng):
    out = PolyObservable.zero(1)
    for basis in (PolyObservable.one(), Q, P, Q**2, P**2, Q * P):
        if rng.random() < 0.7:
            out = out + basis * Fraction(rng.randint(-9, 9), rng.randint(1, 5))
    return out


def _random_pinf1(rng):
    out = PolyObservable.zero(1)
    for _ in range(rng.randint(1, 4)):
        a = rng.randint(0, 6)
        b = rng.randint(0, 1)
        out = out + PolyObservable.monomial(
            1, q={1: a}, p={1: b}, coeff=Fraction(rng.randint(-9, 9), rng.randint(1, 5))
        )
    return out


def hbar2_identity(scalar) -> WeylOperator:
    return WeylOperator(1, {(0, 0, 2): GaussianRational.of(scalar)})


def test_criterion_1_gvh_contradiction():
    with _Budget(1, 1.0, "GvH difference = -(1/3) hbar^2 I, exact vs Moyal oracle"):
        report = gvh_contradiction()
        assert report.difference == hbar2_identity(Fraction(-1, 3))
        # Independent oracle: candidate symbols from the Moyal bracket.
        oracle = moyal_bracket(Q**3, P**3) * Fraction(1, 9) - moyal_bracket(
            Q**2 * P, Q * P**2
        ) * Fraction(1, 3)
        assert weyl_quantize_graded(oracle) == report.difference
        assert oracle == PolyObservable.hbar(2) * Fraction(-1, 3)


def test_criterion_2_dirac_dichotomy():
    with _Budget(2, 10.0, "dirac_defect: 0 on 200+200 quantizable pairs, "
                          "nonzero with nonvanishing Moyal correction"):
        rng = random.Random(2024)
        for _ in range(200):
            assert dirac_defect(_random_p2(rng), _random_p2(rng)).is_zero
        for _ in range(200):
            assert dirac_defect(_random_pinf1(rng), _random_pinf1(rng)).is_zero
        # GENERAL pairs with nonvanishing Moyal correction. (A pair of equal
        # arguments such as (q^2 p^2, q^2 p^2) is identically zero by
        # antisymmetry, so the witnesses are distinct-argument pairs.)
        assert dirac_defect(Q**3, P**3) == hbar2_identity(Fraction(-3, 2))
        assert dirac_defect(Q**2 * P, Q * P**2) == hbar2_identity(Fraction(1, 2))
        quartic_defect = dirac_defect(Q**4, P**4)
        assert not quartic_defect.is_zero


def test_criterion_3_bracket_axioms():
    with _Budget(3, 30.0, "antisymmetry/Jacobi/Leibniz exact on 500 random triples"):
        rng = random.Random(3)
        for _ in range(500):
            n = rng.randint(1, 3)
            f = random_observable(rng, num_dof=n, max_degree=5)
            g = random_observable(rng, num_dof=n, max_degree=5)
            h = random_observable(rng, num_dof=n, max_degree=5)
            assert poisson_bracket(f, g) == -poisson_bracket(g, f)
            jacobi = (
                poisson_bracket(f, poisson_bracket(g, h))
                + poisson_bracket(g, poisson_bracket(h, f))
                + poisson_bracket(h, poisson_bracket(f, g))
            )
            assert jacobi.is_zero
            assert poisson_bracket(f, g * h) == (
                poisson_bracket(f, g) * h + g * poisson_bracket(f, h)
            )


def test_criterion_4_moyal_weyl_cross_validation():
    with _Budget(4, 30.0, "moyal == symbol of commutator/(i hbar), 100 pairs"):
        rng = random.Random(4)
        for _ in range(100):
            n = rng.randint(1, 2)
            f = random_observable(rng, num_dof=n, max_degree=6)
            g = random_observable(rng, num_dof=n, max_degree=6)
            op = over_i_hbar(commutator(weyl_quantize(f), weyl_quantize(g)))
            sym = weyl_symbol(op)
            assert sym.is_real
            assert sym.re == moyal_bracket(f, g)


def test_criterion_5_isochronicity():
    with _Budget(5, 60.0, "H2/H3/H4 periods = 2 pi at 5 initial conditions each"):
        rng = np.random.default_rng(5)
        windows = {
            "H2": (0.5, 2.5),
            "H3": (math.pi / 8, 3 * math.pi / 8),
            "H4": (math.pi / 6, math.pi / 3),
        }
        for which, (lo, hi) in windows.items():
            for _ in range(5):
                q0 = rng.uniform(lo, hi)
                traj = isochrony_trajectory(which, 1.0, [q0, 0.0], 3.2 * TWO_PI, 1e-11)
                est = detect_period(traj, 1e-5)
                assert abs(est.period - TWO_PI) <= 1e-5 * TWO_PI, (which, q0)


def test_criterion_6_classical_invariance_vs_quantum_dependence():
    with _Budget(6, 300.0, "q-path c-invariant while E0(c) gaps >> error bars"):
        report = c_scaling_check(1.0, 2.0, q0=2.0)
        assert report.max_q_deviation <= 1e-7
        assert report.max_p_scaling_deviation <= 1e-7
        scan = e0_scan("H2", [1.0, 2.0, 4.0], hbar=1.0, grid_points=2048)
        rows = scan.rows
        assert all(r.e0 is not None for r in rows)
        for i in range(len(rows)):
            for j in range(i + 1, len(rows)):
                gap = abs(rows[i].e0 - rows[j].e0)
                assert gap > 10 * (rows[i].e0_error + rows[j].e0_error)


def test_criterion_7_newtonian_consistency():
    with _Budget(7, 10.0, "H2 Newtonian residual <= 1e-8 for c in {1, 5}"):
        for c in (1.0, 5.0):
            traj = integrate(build_oscillator("H2", c), [2.0, 0.0], 2 * TWO_PI, 1e-12)
            assert newton_residual(traj) <= 1e-8, c


def test_criterion_8_matrix_oscillator():
    with _Budget(8, 60.0, "matrix energy drift, linear oracle, harmonic return"):
        rng = np.random.default_rng(8)
        for n in (2, 3):
            s = rng.standard_normal((n, n))
            a_stable = -(np.eye(n) + 0.3 * (s @ s.T))
            s0 = MatrixState(0.4 * rng.standard_normal((n, n)),
                             0.4 * rng.standard_normal((n, n)))
            for b in (0.0, 0.1):
                traj = integrate_matrix(a_stable, b, s0, 20.0, 1e-11)
                assert traj.energy_drift <= 1e-8, (n, b)
            linear = integrate_matrix(a_stable, 0.0, s0, 8.0, 1e-11)
            ts = np.linspace(0.0, 8.0, 17)
            exact = linear_closed_form(a_stable, s0.U, s0.V, ts)
            worst = max(
                np.max(np.abs(s.U - e)) for s, e in zip(linear.sample(ts), exact)
            )
            assert worst <= 1e-7, n
        harmonic = integrate_matrix(
            -np.eye(2), 0.0, MatrixState(np.eye(2), np.zeros((2, 2))), TWO_PI, 1e-11
        )
        assert np.max(np.abs(harmonic.states[-1].U - np.eye(2))) <= 1e-8


def test_criterion_9_quartic_manybody():
    with _Budget(9, 120.0, "gradient vs Richardson, rotation invariance, drift"):
        rng = np.random.default_rng(9)
        # 100 random states with N <= 3: analytic gradient vs Richardson FD.
        for trial in range(100):
            n = int(rng.integers(1, 4))
            state = ManyBodyState.random(n, rng)
            params = QuarticParams(rng.standard_normal((n, n)),
                                   float(rng.standard_normal()))
            d_r, d_rho, d_p, d_pi = gradient(state, params)
            analytic = np.concatenate(
                [d_r.ravel(), d_rho.ravel(), d_p.ravel(), d_pi.ravel()]
            )
            vec = state.flatten()
            fd = np.zeros_like(vec)
            h = 1e-4
            for idx in range(vec.size):
                def central(step):
                    up = vec.copy()
                    dn = vec.copy()
                    up[idx] += step
                    dn[idx] -= step
                    return (
                        evaluate_H(ManyBodyState.unflatten(up, n), params)
                        - evaluate_H(ManyBodyState.unflatten(dn, n), params)
                    ) / (2 * step)

                fd[idx] = (4 * central(h / 2) - central(h)) / 3
            rel = np.max(np.abs(fd - analytic) / (1.0 + np.abs(analytic)))
            assert rel <= 1e-6, trial

        # 100 random rotations and states.
        for trial in range(100):
            n = int(rng.integers(1, 4))
            state = ManyBodyState.random(n, rng)
            params = QuarticParams(rng.standard_normal((n, n)),
                                   float(rng.standard_normal()))
            dev = rotation_invariance_check(state, params, random_rotation(rng))
            assert dev <= 1e-10 * (1.0 + abs(evaluate_H(state, params))), trial

        # Energy drift on N=2 runs.
        params = QuarticParams(-np.eye(2), 0.01)
        s0 = ManyBodyState.random(2, rng, scale=0.3)
        traj = integrate_manybody(s0, params, 20.0, 1e-11)
        assert traj.energy_drift <= 1e-8


def test_criterion_10_spectral_self_test():
    with _Budget(10, 60.0, "harmonic E_n = n + 1/2 and second-order convergence"):
        problem = SpectralProblem("harmonic", hbar=1.0, interval=(-10, 10),
                                  grid_points=1024)
        result = ground_state(problem, k=3)
        for n in range(3):
            assert abs(result.eigenvalues[n] - (n + 0.5)) <= 1e-3, n
        for which in ("harmonic", "H2", "H3", "H4"):
            order = observed_order(which, 1.0, base_grid=256)
            assert 1.8 <= order <= 2.2, (which, order)
