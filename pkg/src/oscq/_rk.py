"""Adaptive embedded Runge-Kutta core shared by the dynamics-style modules.

Implements the Dormand-Prince 5(4) explicit pair with local error control,
a quartic dense-output interpolant, guard functions (terminate when any guard
crosses zero, with the crossing time located on the interpolant), and exact
accepted/rejected step counts.  A fixed-step implicit midpoint rule is
provided for long-time runs on non-separable Hamiltonians.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import SolverConvergenceError

# Dormand-Prince 5(4) tableau and the Shampine dense-output matrix.
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0])
_A = np.array(
    [
        [0, 0, 0, 0, 0],
        [1 / 5, 0, 0, 0, 0],
        [3 / 40, 9 / 40, 0, 0, 0],
        [44 / 45, -56 / 15, 32 / 9, 0, 0],
        [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729, 0],
        [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    ]
)
_B = np.array([35 / 384, 0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84])
_E = np.array(
    [71 / 57600, 0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40]
)
_P = np.array(
    [
        [1, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432],
        [0, 0, 0, 0],
        [0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799],
        [0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072],
        [0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632],
        [0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844],
        [0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
    ]
)

_SAFETY = 0.9
_MIN_FACTOR = 0.2
_MAX_FACTOR = 10.0


@dataclass
class StepStats:
    accepted: int
    rejected: int
    nfev: int
    tol: float
    method: str


class DenseOutput:
    """Piecewise polynomial interpolant over the accepted steps."""

    def __init__(self, lefts: np.ndarray, widths: np.ndarray, y_lefts: np.ndarray,
                 coeffs: np.ndarray):
        self._lefts = lefts      # (n_steps,)
        self._widths = widths    # (n_steps,)
        self._y = y_lefts        # (n_steps, dim)
        self._q = coeffs         # (n_steps, dim, order)
        self.t_min = float(lefts[0])
        self.t_max = float(lefts[-1] + widths[-1])

    def __call__(self, t):
        t_arr = np.atleast_1d(np.asarray(t, dtype=float))
        idx = np.searchsorted(self._lefts, t_arr, side="right") - 1
        idx = np.clip(idx, 0, len(self._lefts) - 1)
        theta = (t_arr - self._lefts[idx]) / self._widths[idx]
        order = self._q.shape[2]
        powers = np.vstack([theta ** (k + 1) for k in range(order)])  # (order, m)
        out = self._y[idx] + self._widths[idx, None] * np.einsum(
            "mdo,om->md", self._q[idx], powers
        )
        if np.isscalar(t) or np.asarray(t).ndim == 0:
            return out[0]
        return out


@dataclass
class IntegrationResult:
    t: np.ndarray
    y: np.ndarray
    dense: DenseOutput
    stats: StepStats
    status: str           # "done" | "guard" | "underflow"
    stop_time: float
    guard_index: int = -1


def _rms_norm(x: np.ndarray) -> float:
    return float(np.sqrt(np.mean(x * x)))


def _initial_step(fun, t0, y0, f0, t1, rtol, atol):
    """Hairer-Norsett-Wanner starting step heuristic."""
    scale = atol + np.abs(y0) * rtol
    d0 = _rms_norm(y0 / scale)
    d1 = _rms_norm(f0 / scale)
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    y1 = y0 + h0 * f0
    f1 = fun(t0 + h0, y1)
    d2 = _rms_norm((f1 - f0) / scale) / h0
    if d1 <= 1e-15 and d2 <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** 0.2
    return min(100 * h0, h1, t1 - t0)


def solve_adaptive(
    fun: Callable[[float, np.ndarray], np.ndarray],
    t0: float,
    t1: float,
    y0: np.ndarray,
    tol: float,
    guards: Sequence[Callable[[float, np.ndarray], float]] = (),
    max_step: float = np.inf,
) -> IntegrationResult:
    """Integrate y' = fun(t, y) from t0 to t1 > t0 at mixed tolerance ``tol``.

    Guards must be positive along the solution; when one crosses zero the
    integration stops with status "guard" and the crossing time bisected on
    the dense interpolant.  Step-size underflow gives status "underflow".
    """
    if t1 <= t0:
        raise ValueError("t1 must exceed t0")
    rtol = atol = tol
    y = np.asarray(y0, dtype=float).copy()
    t = float(t0)
    nfev = 0

    f = fun(t, y)
    nfev += 1
    h = _initial_step(fun, t, y, f, t1, rtol, atol)
    nfev += 1

    ts = [t]
    ys = [y.copy()]
    lefts, widths, y_lefts, coeffs = [], [], [], []
    accepted = rejected = 0
    status = "done"
    stop_time = float(t1)
    guard_index = -1
    K = np.empty((7, y.size))

    while t < t1:
        h = min(h, max_step, t1 - t)
        if h < 1e-14 * max(1.0, abs(t)):
            status = "underflow"
            stop_time = t
            break

        K[0] = f
        for s in range(1, 6):
            K[s] = fun(t + _C[s] * h, y + h * (K[:s].T @ _A[s, :s]))
        nfev += 5
        y_new = y + h * (K[:6].T @ _B)
        f_new = fun(t + h, y_new)
        nfev += 1
        K[6] = f_new

        scale = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
        err = _rms_norm(h * (K.T @ _E) / scale)

        if err > 1.0:
            rejected += 1
            h *= max(_MIN_FACTOR, _SAFETY * err ** -0.2)
            continue

        accepted += 1
        q = K.T @ _P  # (dim, 4)
        lefts.append(t)
        widths.append(h)
        y_lefts.append(y.copy())
        coeffs.append(q)

        t_new = t + h
        hit = -1
        for gi, g in enumerate(guards):
            if g(t_new, y_new) <= 0.0:
                hit = gi
                break
        if hit >= 0:
            dense_step = DenseOutput(
                np.array(lefts[-1:]), np.array(widths[-1:]),
                np.array(y_lefts[-1:]), np.array(coeffs[-1:]),
            )
            lo, hi = t, t_new
            g = guards[hit]
            for _ in range(80):
                mid = 0.5 * (lo + hi)
                if g(mid, dense_step(mid)) <= 0.0:
                    hi = mid
                else:
                    lo = mid
            status = "guard"
            stop_time = hi
            guard_index = hit
            ts.append(t_new)
            ys.append(y_new.copy())
            break

        t, y, f = t_new, y_new, f_new
        ts.append(t)
        ys.append(y.copy())
        h *= min(_MAX_FACTOR, _SAFETY * err ** -0.2) if err > 0 else _MAX_FACTOR

    dense = DenseOutput(
        np.array(lefts), np.array(widths), np.array(y_lefts),
        np.array(coeffs),
    )
    stats = StepStats(accepted, rejected, nfev, tol, "dp54")
    return IntegrationResult(
        np.array(ts), np.array(ys), dense, stats, status, stop_time, guard_index
    )


class HermiteDense:
    """Cubic Hermite interpolant from nodes and node derivatives."""

    def __init__(self, t: np.ndarray, y: np.ndarray, f: np.ndarray):
        self._t = t
        self._y = y
        self._f = f
        self.t_min = float(t[0])
        self.t_max = float(t[-1])

    def __call__(self, t):
        t_arr = np.atleast_1d(np.asarray(t, dtype=float))
        idx = np.clip(np.searchsorted(self._t, t_arr, side="right") - 1, 0,
                      len(self._t) - 2)
        h = self._t[idx + 1] - self._t[idx]
        s = (t_arr - self._t[idx]) / h
        s = s[:, None]
        h = h[:, None]
        y0, y1 = self._y[idx], self._y[idx + 1]
        f0, f1 = self._f[idx], self._f[idx + 1]
        h00 = (1 + 2 * s) * (1 - s) ** 2
        h10 = s * (1 - s) ** 2
        h01 = s * s * (3 - 2 * s)
        h11 = s * s * (s - 1)
        out = h00 * y0 + h10 * h * f0 + h01 * y1 + h11 * h * f1
        if np.isscalar(t) or np.asarray(t).ndim == 0:
            return out[0]
        return out


def solve_midpoint(
    fun: Callable[[float, np.ndarray], np.ndarray],
    t0: float,
    t1: float,
    y0: np.ndarray,
    n_steps: int,
    guards: Sequence[Callable[[float, np.ndarray], float]] = (),
    solve_tol: float = 1e-13,
    max_iter: int = 200,
) -> IntegrationResult:
    """Fixed-step implicit midpoint rule, solved by damped fixed-point
    iteration on the stage derivative."""
    if n_steps < 1:
        raise ValueError("n_steps must be positive")
    y = np.asarray(y0, dtype=float).copy()
    h = (t1 - t0) / n_steps
    ts = [t0]
    ys = [y.copy()]
    fs = [fun(t0, y)]
    nfev = 1
    status = "done"
    stop_time = float(t1)
    guard_index = -1

    t = float(t0)
    for _ in range(n_steps):
        k = fs[-1].copy()
        t_mid = t + 0.5 * h
        for it in range(max_iter):
            k_next = fun(t_mid, y + 0.5 * h * k)
            nfev += 1
            delta = np.max(np.abs(k_next - k))
            k = k_next
            if delta <= solve_tol * (1.0 + np.max(np.abs(k))):
                break
        else:
            raise SolverConvergenceError(
                f"implicit midpoint stage did not converge at t={t_mid:.6g}"
            )
        y = y + h * k
        t += h
        ts.append(t)
        ys.append(y.copy())
        fs.append(fun(t, y))
        nfev += 1
        hit = -1
        for gi, g in enumerate(guards):
            if g(t, y) <= 0.0:
                hit = gi
                break
        if hit >= 0:
            status = "guard"
            stop_time = t
            guard_index = hit
            break

    t_arr = np.array(ts)
    y_arr = np.array(ys)
    f_arr = np.array(fs)
    dense = HermiteDense(t_arr, y_arr, f_arr)
    stats = StepStats(len(ts) - 1, 0, nfev, solve_tol, "implicit-midpoint")
    return IntegrationResult(t_arr, y_arr, dense, stats, status, stop_time, guard_index)
