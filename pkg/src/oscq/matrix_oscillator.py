"""Integration and verification of the solvable matrix evolution equation

    Udd = (1/2)(A U + U A) + b U^3

for square real matrices U(t), constant A and scalar b.  Trace cyclicity
gives the first integral

    E = (1/2) tr(V^2) - (1/2) tr(A U^2) - (b/4) tr(U^4),    V = Udot,

which holds for arbitrary (not necessarily symmetric) real square matrices
and is monitored along every run.  The cubic term admits finite-time escape
for some data; integration aborts once any entry magnitude exceeds 1e12.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.linalg import eig as dense_eig

from . import _rk
from .errors import (
    FiniteTimeEscapeError,
    InputError,
    StepSizeUnderflowError,
)

BLOWUP_THRESHOLD = 1e12


@dataclass(frozen=True)
class MatrixState:
    """Pair (U, V = Udot) of square real matrices."""

    U: np.ndarray
    V: np.ndarray

    def __post_init__(self):
        u = np.asarray(self.U, dtype=float)
        v = np.asarray(self.V, dtype=float)
        if u.ndim != 2 or u.shape[0] != u.shape[1]:
            raise InputError(f"U must be square, got shape {u.shape}")
        if v.shape != u.shape:
            raise InputError(f"V shape {v.shape} != U shape {u.shape}")
        if not (np.isfinite(u).all() and np.isfinite(v).all()):
            raise InputError("matrix state entries must be finite")
        object.__setattr__(self, "U", u)
        object.__setattr__(self, "V", v)

    @property
    def n(self) -> int:
        return self.U.shape[0]

    def flatten(self) -> np.ndarray:
        return np.concatenate([self.U.ravel(), self.V.ravel()])

    @classmethod
    def unflatten(cls, vec: np.ndarray, n: int) -> "MatrixState":
        return cls(vec[: n * n].reshape(n, n), vec[n * n :].reshape(n, n))


@dataclass
class MatrixTrajectory:
    times: np.ndarray
    states: list[MatrixState]
    energies: np.ndarray
    stats: _rk.StepStats
    dense: object
    A: np.ndarray
    b: float

    @property
    def n(self) -> int:
        return self.states[0].n

    @property
    def energy_drift(self) -> float:
        return float(np.max(np.abs(self.energies - self.energies[0])))

    def sample(self, ts) -> list[MatrixState]:
        flat = np.atleast_2d(self.dense(ts))
        return [MatrixState.unflatten(row, self.n) for row in flat]

    def metadata(self) -> dict:
        return {
            "n": self.n,
            "b": self.b,
            "A": self.A.tolist(),
            "tol": self.stats.tol,
            "integrator": self.stats.method,
            "accepted_steps": self.stats.accepted,
            "rejected_steps": self.stats.rejected,
            "energy_drift": self.energy_drift,
        }

    def to_csv(self, path) -> None:
        """Rows of `t` followed by row-major U then V entries."""
        n = self.n
        header = (
            ["t"]
            + [f"U_{i + 1}_{j + 1}" for i in range(n) for j in range(n)]
            + [f"V_{i + 1}_{j + 1}" for i in range(n) for j in range(n)]
        )
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            for t, s in zip(self.times, self.states):
                row = [f"{t:.17g}"]
                row += [f"{v:.17g}" for v in s.U.ravel()]
                row += [f"{v:.17g}" for v in s.V.ravel()]
                writer.writerow(row)

    def to_metadata_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.metadata(), fh, indent=2, sort_keys=True)


def matrix_energy(s: MatrixState, A, b: float) -> float:
    """First integral E = tr(V^2)/2 - tr(A U^2)/2 - b tr(U^4)/4."""
    A = _check_A(A, s.n)
    U, V = s.U, s.V
    U2 = U @ U
    return float(
        0.5 * np.trace(V @ V) - 0.5 * np.trace(A @ U2) - 0.25 * b * np.trace(U2 @ U2)
    )


def _check_A(A, n: int) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    if A.shape != (n, n):
        raise InputError(f"A has shape {A.shape}, expected ({n}, {n})")
    return A


def integrate_matrix(
    A,
    b: float,
    s0: MatrixState,
    t_end: float,
    tol: float,
    method: str = "adaptive",
    steps: int | None = None,
) -> MatrixTrajectory:
    """Integrate the second-order matrix equation as a first-order system in
    (U, V).  Escape past the blow-up threshold raises FiniteTimeEscapeError
    with the escape time."""
    n = s0.n
    A = _check_A(A, n)
    if t_end <= 0:
        raise InputError("t_end must be positive")
    if method == "adaptive" and not (1e-13 <= tol <= 1e-3):
        raise InputError("tol must lie in [1e-13, 1e-3]")

    def rhs(t, y):
        U = y[: n * n].reshape(n, n)
        V = y[n * n :]
        acc = 0.5 * (A @ U + U @ A) + b * (U @ U @ U)
        return np.concatenate([V, acc.ravel()])

    def blowup_guard(t, y):
        return BLOWUP_THRESHOLD - float(np.max(np.abs(y)))

    y0 = s0.flatten()
    if method == "adaptive":
        result = _rk.solve_adaptive(rhs, 0.0, float(t_end), y0, tol, guards=[blowup_guard])
    elif method == "midpoint":
        if steps is None:
            raise InputError("midpoint mode requires steps")
        result = _rk.solve_midpoint(rhs, 0.0, float(t_end), y0, steps, guards=[blowup_guard])
    else:
        raise InputError(f"unknown integration method {method!r}")

    if result.status == "guard":
        raise FiniteTimeEscapeError(
            f"matrix state exceeded {BLOWUP_THRESHOLD:g} at t={result.stop_time:.9g}",
            time=result.stop_time,
        )
    if result.status == "underflow":
        raise StepSizeUnderflowError(
            f"step size underflow at t={result.stop_time:.9g}"
        )

    states = [MatrixState.unflatten(row, n) for row in result.y]
    energies = np.array([matrix_energy(s, A, b) for s in states])
    return MatrixTrajectory(result.t, states, energies, result.stats, result.dense, A, float(b))


def time_reversal_check(A, b: float, s0: MatrixState, t_end: float, tol: float) -> float:
    """Integrate forward, negate V, integrate the same span again; return the
    max entrywise |U_final - U0| + |V_final + V0|."""
    fwd = integrate_matrix(A, b, s0, t_end, tol)
    turn = MatrixState(fwd.states[-1].U, -fwd.states[-1].V)
    back = integrate_matrix(A, b, turn, t_end, tol)
    final = back.states[-1]
    return float(
        np.max(np.abs(final.U - s0.U)) + np.max(np.abs(final.V + s0.V))
    )


def linear_closed_form(A, U0, V0, ts: Sequence[float]) -> list[np.ndarray]:
    """Closed-form solution of the b = 0 equation Udd = (AU + UA)/2.

    Eigendecomposes the first-order block operator on (vec U, vec V):
    d/dt (u, v) = ((0, I), (L, 0)) (u, v) with L = (A (x) I + I (x) A^T)/2.
    Serves as the independent linear-limit oracle for the integrator.
    """
    A = np.asarray(A, dtype=float)
    n = A.shape[0]
    eye = np.eye(n)
    L = 0.5 * (np.kron(A, eye) + np.kron(eye, A.T))
    m = n * n
    block = np.zeros((2 * m, 2 * m))
    block[:m, m:] = np.eye(m)
    block[m:, :m] = L
    w, P = dense_eig(block)
    Pinv = np.linalg.inv(P)
    x0 = np.concatenate([np.asarray(U0, float).ravel(), np.asarray(V0, float).ravel()])
    coeffs = Pinv @ x0
    out = []
    for t in ts:
        x = (P * np.exp(w * t)) @ coeffs
        out.append(np.real(x[:m]).reshape(n, n))
    return out
