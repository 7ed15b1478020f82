"""Quartic many-body oscillator in 3-vector / pseudoscalar variables.

Canonical coordinates are N x N arrays of 3-vectors r[n][m] and pseudoscalars
rho[n][m], with conjugate momenta p[n][m] (3-vectors) and pi[n][m]
(pseudoscalars).  The Hamiltonian is the sum of

    kinetic    (1/2) sum_ij [ p_ij . p_ji - pi_ij pi_ji ]
    quadratic -(1/2) sum_ijk a_ij [ r_jk . r_ki - rho_jk rho_ki ]
    quartic   -(b/4) sum_ijkl { 2 [ rho_ij rho_kl (r_jk . r_li)
                                  + rho_ij rho_li (r_jk . r_kl)
                                  + rho_ij rho_jk (r_kl . r_li) ]
                                - rho_ij rho_jk rho_kl rho_ki
                                - 2 (r_ij . r_kl)(r_jk . r_li)
                                - (r_kl ^ r_li) . (rho_ij r_jk + rho_jk r_ij) }

with ^ and . the 3-vector wedge (cross) and dot products.  Coefficients are
implemented sign-for-sign as displayed in the source, including the net -2
on the (r.r)(r.r) product (displayed as +2 - 2 - 2 over three identical
factors) and the rho_ki index in the four-pseudoscalar term.

Every term is declared once as an einsum specification; the energy contracts
it fully and the gradient differentiates it mechanically (sum over each
occurrence of the target array, contracting the rest onto that factor's
indices).  The potential involves only r and rho, so its p and pi gradients
vanish identically by construction, and all contractions are built from
rotation-invariant dot and triple products.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass

import numpy as np

from . import _rk
from .errors import (
    FiniteTimeEscapeError,
    InputError,
    StepSizeUnderflowError,
)

BLOWUP_THRESHOLD = 1e12

# Levi-Civita tensor: (u ^ v) . w = EPS_xyz u_x v_y w_z.
_EPS = np.zeros((3, 3, 3))
for _i, _j, _k in [(0, 1, 2), (1, 2, 0), (2, 0, 1)]:
    _EPS[_i, _j, _k] = 1.0
    _EPS[_k, _j, _i] = -1.0


@dataclass(frozen=True)
class ManyBodyState:
    """State arrays (r, rho, p, pi); shapes (N,N,3), (N,N), (N,N,3), (N,N)."""

    r: np.ndarray
    rho: np.ndarray
    p: np.ndarray
    pi: np.ndarray

    def __post_init__(self):
        r = np.asarray(self.r, dtype=float)
        rho = np.asarray(self.rho, dtype=float)
        p = np.asarray(self.p, dtype=float)
        pi = np.asarray(self.pi, dtype=float)
        if r.ndim != 3 or r.shape[2] != 3 or r.shape[0] != r.shape[1]:
            raise InputError(f"r must have shape (N, N, 3), got {r.shape}")
        n = r.shape[0]
        if rho.shape != (n, n):
            raise InputError(f"rho must have shape ({n}, {n}), got {rho.shape}")
        if p.shape != r.shape:
            raise InputError(f"p must have shape {r.shape}, got {p.shape}")
        if pi.shape != rho.shape:
            raise InputError(f"pi must have shape {rho.shape}, got {pi.shape}")
        for arr in (r, rho, p, pi):
            if not np.isfinite(arr).all():
                raise InputError("state entries must be finite")
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "rho", rho)
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "pi", pi)

    @property
    def n(self) -> int:
        return self.r.shape[0]

    def flatten(self) -> np.ndarray:
        return np.concatenate(
            [self.r.ravel(), self.rho.ravel(), self.p.ravel(), self.pi.ravel()]
        )

    @classmethod
    def unflatten(cls, vec: np.ndarray, n: int) -> "ManyBodyState":
        sizes = [3 * n * n, n * n, 3 * n * n, n * n]
        offsets = np.cumsum([0] + sizes)
        return cls(
            vec[offsets[0] : offsets[1]].reshape(n, n, 3),
            vec[offsets[1] : offsets[2]].reshape(n, n),
            vec[offsets[2] : offsets[3]].reshape(n, n, 3),
            vec[offsets[3] : offsets[4]].reshape(n, n),
        )

    @classmethod
    def zero(cls, n: int) -> "ManyBodyState":
        return cls(
            np.zeros((n, n, 3)), np.zeros((n, n)), np.zeros((n, n, 3)), np.zeros((n, n))
        )

    @classmethod
    def random(cls, n: int, rng, scale: float = 0.5) -> "ManyBodyState":
        return cls(
            scale * rng.standard_normal((n, n, 3)),
            scale * rng.standard_normal((n, n)),
            scale * rng.standard_normal((n, n, 3)),
            scale * rng.standard_normal((n, n)),
        )

    def to_json(self) -> str:
        return json.dumps(
            {
                "r": self.r.tolist(),
                "rho": self.rho.tolist(),
                "p": self.p.tolist(),
                "pi": self.pi.tolist(),
            },
            sort_keys=True,
        )

    @classmethod
    def from_json(cls, text: str) -> "ManyBodyState":
        data = json.loads(text)
        try:
            return cls(
                np.array(data["r"], dtype=float),
                np.array(data["rho"], dtype=float),
                np.array(data["p"], dtype=float),
                np.array(data["pi"], dtype=float),
            )
        except KeyError as exc:
            raise InputError(f"state JSON missing key {exc}") from exc


@dataclass(frozen=True)
class QuarticParams:
    """Coupling matrix a[i][j] and quartic strength b."""

    a: np.ndarray
    b: float

    def __post_init__(self):
        a = np.asarray(self.a, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise InputError(f"coupling matrix must be square, got shape {a.shape}")
        if not np.isfinite(a).all() or not np.isfinite(self.b):
            raise InputError("parameters must be finite")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", float(self.b))

    @property
    def n(self) -> int:
        return self.a.shape[0]


# Each Hamiltonian term: (coefficient key, [(array name, index string), ...]).
# The coefficient key is "one" (1/2 handled in the constant), and factors
# named "a"/"eps" are parameters, never differentiated.  Index letters x,y,z
# are vector components; i,j,k,l particle indices.
_H_TERMS = [
    # kinetic
    (0.5, [("p", "ijx"), ("p", "jix")]),
    (-0.5, [("pi", "ij"), ("pi", "ji")]),
    # quadratic
    (-0.5, [("a", "ij"), ("r", "jkx"), ("r", "kix")]),
    (0.5, [("a", "ij"), ("rho", "jk"), ("rho", "ki")]),
]

# Quartic block: coefficients carry the overall -(b/4) times the displayed
# braces; 'b' multiplies in at evaluation time.
_H_QUARTIC = [
    (-0.5, [("rho", "ij"), ("rho", "kl"), ("r", "jkx"), ("r", "lix")]),
    (-0.5, [("rho", "ij"), ("rho", "li"), ("r", "jkx"), ("r", "klx")]),
    (-0.5, [("rho", "ij"), ("rho", "jk"), ("r", "klx"), ("r", "lix")]),
    (0.25, [("rho", "ij"), ("rho", "jk"), ("rho", "kl"), ("rho", "ki")]),
    (0.5, [("r", "ijx"), ("r", "klx"), ("r", "jky"), ("r", "liy")]),
    (0.25, [("eps", "xyz"), ("r", "klx"), ("r", "liy"), ("rho", "ij"), ("r", "jkz")]),
    (0.25, [("eps", "xyz"), ("r", "klx"), ("r", "liy"), ("rho", "jk"), ("r", "ijz")]),
]


def _operands(state: ManyBodyState, params: QuarticParams) -> dict:
    return {
        "r": state.r,
        "rho": state.rho,
        "p": state.p,
        "pi": state.pi,
        "a": params.a,
        "eps": _EPS,
    }


def _term_value(coeff, factors, arrays) -> float:
    spec = ",".join(idx for _, idx in factors) + "->"
    return coeff * float(np.einsum(spec, *[arrays[name] for name, _ in factors]))


def _term_gradient(coeff, factors, arrays, target: str, out: np.ndarray) -> None:
    """Accumulate d(term)/d(target array) into ``out``.

    A letter of the removed factor's index string may not occur in the rest
    of the term (a dangling summation index, as in the four-pseudoscalar
    block); the derivative is then constant along that axis and broadcasts.
    """
    for pos, (name, idx) in enumerate(factors):
        if name != target:
            continue
        rest = [factors[q] for q in range(len(factors)) if q != pos]
        if not rest:
            out += coeff * np.ones(out.shape)
            continue
        rest_letters = set("".join(ix for _, ix in rest))
        out_idx = "".join(ch for ch in idx if ch in rest_letters)
        spec = ",".join(ix for _, ix in rest) + "->" + out_idx
        partial = np.einsum(spec, *[arrays[nm] for nm, _ in rest])
        if out_idx != idx:
            for axis, ch in enumerate(idx):
                if ch not in rest_letters:
                    partial = np.expand_dims(partial, axis)
            partial = np.broadcast_to(partial, out.shape)
        out += coeff * partial


def _all_terms(params: QuarticParams):
    for coeff, factors in _H_TERMS:
        yield coeff, factors
    if params.b != 0.0:
        for coeff, factors in _H_QUARTIC:
            yield params.b * coeff, factors


def evaluate_H(state: ManyBodyState, params: QuarticParams) -> float:
    """Total energy of the quartic many-body Hamiltonian."""
    if params.n != state.n:
        raise InputError(f"params are {params.n}x{params.n} but state has N={state.n}")
    arrays = _operands(state, params)
    return sum(_term_value(c, f, arrays) for c, f in _all_terms(params))


def gradient(state: ManyBodyState, params: QuarticParams):
    """(dH/dr, dH/drho, dH/dp, dH/dpi), each shaped like its variable."""
    if params.n != state.n:
        raise InputError(f"params are {params.n}x{params.n} but state has N={state.n}")
    arrays = _operands(state, params)
    grads = {
        "r": np.zeros_like(state.r),
        "rho": np.zeros_like(state.rho),
        "p": np.zeros_like(state.p),
        "pi": np.zeros_like(state.pi),
    }
    for coeff, factors in _all_terms(params):
        for name in ("r", "rho", "p", "pi"):
            _term_gradient(coeff, factors, arrays, name, grads[name])
    return grads["r"], grads["rho"], grads["p"], grads["pi"]


def equations_of_motion(state: ManyBodyState, params: QuarticParams) -> ManyBodyState:
    """Hamiltonian time derivative packed as a state-shaped container:
    rdot = dH/dp, rhodot = dH/dpi, pdot = -dH/dr, pidot = -dH/drho."""
    d_r, d_rho, d_p, d_pi = gradient(state, params)
    return ManyBodyState(r=d_p, rho=d_pi, p=-d_r, pi=-d_rho)


@dataclass
class ManyBodyTrajectory:
    times: np.ndarray
    states: list[ManyBodyState]
    energies: np.ndarray
    stats: _rk.StepStats
    dense: object
    params: QuarticParams

    @property
    def n(self) -> int:
        return self.states[0].n

    @property
    def energy_drift(self) -> float:
        return float(np.max(np.abs(self.energies - self.energies[0])))

    def sample(self, ts) -> list[ManyBodyState]:
        flat = np.atleast_2d(self.dense(ts))
        return [ManyBodyState.unflatten(row, self.n) for row in flat]

    def metadata(self) -> dict:
        return {
            "n": self.n,
            "b": self.params.b,
            "a": self.params.a.tolist(),
            "tol": self.stats.tol,
            "integrator": self.stats.method,
            "accepted_steps": self.stats.accepted,
            "rejected_steps": self.stats.rejected,
            "energy_drift": self.energy_drift,
        }

    def to_csv(self, path) -> None:
        """Flattened per-sample rows; the header names every component."""
        n = self.n
        axes = "xyz"
        header = ["t"]
        header += [f"r_{i + 1}_{j + 1}_{axes[x]}" for i in range(n) for j in range(n) for x in range(3)]
        header += [f"rho_{i + 1}_{j + 1}" for i in range(n) for j in range(n)]
        header += [f"p_{i + 1}_{j + 1}_{axes[x]}" for i in range(n) for j in range(n) for x in range(3)]
        header += [f"pi_{i + 1}_{j + 1}" for i in range(n) for j in range(n)]
        header += ["H"]
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            for t, s, e in zip(self.times, self.states, self.energies):
                row = [f"{t:.17g}"]
                row += [f"{v:.17g}" for v in s.flatten()]
                row += [f"{e:.17g}"]
                writer.writerow(row)


def integrate_manybody(
    s0: ManyBodyState, params: QuarticParams, t_end: float, tol: float
) -> ManyBodyTrajectory:
    """Adaptive integration of the flattened canonical equations."""
    if params.n != s0.n:
        raise InputError(f"params are {params.n}x{params.n} but state has N={s0.n}")
    if t_end <= 0:
        raise InputError("t_end must be positive")
    if not (1e-13 <= tol <= 1e-3):
        raise InputError("tol must lie in [1e-13, 1e-3]")
    n = s0.n

    def rhs(t, y):
        return equations_of_motion(ManyBodyState.unflatten(y, n), params).flatten()

    def blowup_guard(t, y):
        return BLOWUP_THRESHOLD - float(np.max(np.abs(y)))

    result = _rk.solve_adaptive(rhs, 0.0, float(t_end), s0.flatten(), tol,
                                guards=[blowup_guard])
    if result.status == "guard":
        raise FiniteTimeEscapeError(
            f"state magnitude exceeded {BLOWUP_THRESHOLD:g} at t={result.stop_time:.9g}",
            time=result.stop_time,
        )
    if result.status == "underflow":
        raise StepSizeUnderflowError(f"step size underflow at t={result.stop_time:.9g}")

    states = [ManyBodyState.unflatten(row, n) for row in result.y]
    energies = np.array([evaluate_H(s, params) for s in states])
    return ManyBodyTrajectory(result.t, states, energies, result.stats, result.dense, params)


def rotation_invariance_check(
    state: ManyBodyState, params: QuarticParams, rotation: np.ndarray
) -> float:
    """|H(R s) - H(s)| where R acts on every 3-vector and leaves rho, pi alone.

    ``rotation`` must be orthogonal with determinant +1 (validated to 1e-12);
    reflections are rejected.
    """
    rotation = np.asarray(rotation, dtype=float)
    if rotation.shape != (3, 3):
        raise InputError("rotation must be a 3x3 matrix")
    if np.max(np.abs(rotation @ rotation.T - np.eye(3))) > 1e-12:
        raise InputError("matrix is not orthogonal to 1e-12")
    if abs(np.linalg.det(rotation) - 1.0) > 1e-12:
        raise InputError("improper rotation (det != +1) rejected")
    rotated = ManyBodyState(
        r=np.einsum("xy,ijy->ijx", rotation, state.r),
        rho=state.rho,
        p=np.einsum("xy,ijy->ijx", rotation, state.p),
        pi=state.pi,
    )
    return abs(evaluate_H(rotated, params) - evaluate_H(state, params))


def random_rotation(rng) -> np.ndarray:
    """Haar-ish random proper rotation from a QR decomposition."""
    m = rng.standard_normal((3, 3))
    q, r = np.linalg.qr(m)
    q = q @ np.diag(np.sign(np.diag(r)))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q
