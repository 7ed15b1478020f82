"""Numerical integration of the 1-D nonlinear oscillators and their checks.

The three solvable oscillators share the structure H = (1/2)[p^2 K(q) + V(q)]
on a singular domain.  Tagged "H2", "H3", "H4":

    H2: H = (1/2) [ p^2 q^3 / c + c (q + 1/q) ],             q > 0,   c > 0
    H3: H = (1/2) [ p^2 sin^2(q) sin(2q) / (2c) + 2c/sin(2q) ],  0 < q < pi/2
    H4: H = (1/2) [ p^2 sin^2(q) sin(2q) / (2c) + 2c cot(2q) ],  0 < q < pi/2

All their motions are expected to be periodic with period 2*pi independent of
the value of c; the Newtonian form of H2,

    qdd = 3 qd^2 / (2q) + (1/2) q (1 - q^2),

contains no c at all, making c a pure momentum scale classically.

Integration uses an adaptive embedded 5(4) pair (non-separable kinetic terms
rule out split-step symplectic schemes); energy drift is monitored rather
than structurally enforced, and a fixed-step implicit midpoint mode is
available for long runs.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np
from scipy.optimize import minimize_scalar

from . import _rk
from .errors import (
    InputError,
    PeriodNotFoundError,
    SingularApproachError,
    StepSizeUnderflowError,
)

TOL_RANGE = (1e-13, 1e-3)
GUARD_BAND = 1e-6


@dataclass(frozen=True)
class CoordinateDomain:
    """Open interval constraint for one position coordinate."""

    lo: float = -np.inf
    hi: float = np.inf
    guard: float = GUARD_BAND

    def contains(self, x: float) -> bool:
        return self.lo < x < self.hi

    def guard_functions(self, slot: int):
        """Guard callables g(t, z) > 0 inside the guard band, for state
        vectors z = (q..., p...)."""
        out = []
        if np.isfinite(self.lo):
            out.append(lambda t, z, s=slot: z[s] - (self.lo + self.guard))
        if np.isfinite(self.hi):
            out.append(lambda t, z, s=slot: (self.hi - self.guard) - z[s])
        return out


@dataclass(frozen=True)
class HamiltonianSystem:
    """Hamiltonian with exact analytic gradient on a constrained domain.

    ``energy`` maps a state (q1..qn, p1..pn) to H; ``gradient`` returns
    (dH/dq..., dH/dp...).  The gradient is expected to match central finite
    differences of the energy to 1e-6 relative error (see gradient_check).
    """

    tag: str
    dof: int
    params: Mapping[str, float]
    domain: tuple[CoordinateDomain, ...]
    energy_fn: Callable[[np.ndarray], float] = field(repr=False)
    gradient_fn: Callable[[np.ndarray], np.ndarray] = field(repr=False)

    def energy(self, state) -> float:
        return float(self.energy_fn(np.asarray(state, dtype=float)))

    def gradient(self, state) -> np.ndarray:
        return np.asarray(self.gradient_fn(np.asarray(state, dtype=float)), dtype=float)

    def vector_field(self, state) -> np.ndarray:
        """Hamilton's equations: qdot = dH/dp, pdot = -dH/dq."""
        g = self.gradient(state)
        n = self.dof
        return np.concatenate([g[n:], -g[:n]])

    def in_domain(self, state, margin: float = 0.0) -> bool:
        state = np.asarray(state, dtype=float)
        return all(
            d.lo + margin < state[i] < d.hi - margin
            for i, d in enumerate(self.domain)
        )


def build_oscillator(which: str, c: float) -> HamiltonianSystem:
    """Construct one of the solvable oscillators H2 / H3 / H4.

    H2 needs c > 0; H3 and H4 accept any nonzero real c.
    """
    c = float(c)
    if which == "H2":
        if not c > 0:
            raise InputError(f"H2 requires c > 0, got c={c}")

        def energy(z):
            q, p = z
            return 0.5 * (p * p * q**3 / c + c * (q + 1.0 / q))

        def gradient(z):
            q, p = z
            dq = 0.5 * (3.0 * p * p * q * q / c + c * (1.0 - 1.0 / (q * q)))
            dp = p * q**3 / c
            return np.array([dq, dp])

        domain = (CoordinateDomain(0.0, np.inf),)
    elif which in ("H3", "H4"):
        if c == 0:
            raise InputError(f"{which} requires nonzero c")

        def kinetic(q):
            return math.sin(q) ** 2 * math.sin(2 * q) / (2 * c)

        def kinetic_prime(q):
            return (
                math.sin(2 * q) ** 2 + 2 * math.sin(q) ** 2 * math.cos(2 * q)
            ) / (2 * c)

        if which == "H3":

            def potential(q):
                return 2 * c / math.sin(2 * q)

            def potential_prime(q):
                return -4 * c * math.cos(2 * q) / math.sin(2 * q) ** 2

        else:

            def potential(q):
                return 2 * c * math.cos(2 * q) / math.sin(2 * q)

            def potential_prime(q):
                return -4 * c / math.sin(2 * q) ** 2

        def energy(z):
            q, p = z
            return 0.5 * (p * p * kinetic(q) + potential(q))

        def gradient(z):
            q, p = z
            dq = 0.5 * (p * p * kinetic_prime(q) + potential_prime(q))
            dp = p * kinetic(q)
            return np.array([dq, dp])

        domain = (CoordinateDomain(0.0, math.pi / 2),)
    else:
        raise InputError(f"unknown oscillator tag {which!r}; expected H2, H3 or H4")

    return HamiltonianSystem(
        tag=which,
        dof=1,
        params={"c": c},
        domain=domain,
        energy_fn=energy,
        gradient_fn=gradient,
    )


def harmonic_system() -> HamiltonianSystem:
    """H = (p^2 + q^2)/2 on an unconstrained domain; self-test reference."""
    return HamiltonianSystem(
        tag="harmonic",
        dof=1,
        params={},
        domain=(CoordinateDomain(),),
        energy_fn=lambda z: 0.5 * float(z[0] ** 2 + z[1] ** 2),
        gradient_fn=lambda z: np.array([z[0], z[1]]),
    )


def gradient_check(system: HamiltonianSystem, n_points: int = 100, rng=None) -> float:
    """Max mixed relative error |fd - grad| / (1 + |grad|) of the analytic
    gradient against central finite differences at random interior states."""
    if rng is None:
        rng = np.random.default_rng(0)
    worst = 0.0
    for _ in range(n_points):
        state = _random_interior_state(system, rng)
        grad = system.gradient(state)
        for j in range(2 * system.dof):
            h = 1e-5 * max(1.0, abs(state[j]))
            zp = state.copy()
            zm = state.copy()
            zp[j] += h
            zm[j] -= h
            fd = (system.energy(zp) - system.energy(zm)) / (2 * h)
            worst = max(worst, abs(fd - grad[j]) / (1.0 + abs(grad[j])))
    return worst


def _random_interior_state(system: HamiltonianSystem, rng) -> np.ndarray:
    qs = []
    for d in system.domain:
        if np.isfinite(d.lo) and np.isfinite(d.hi):
            span = d.hi - d.lo
            qs.append(rng.uniform(d.lo + 0.15 * span, d.hi - 0.15 * span))
        elif np.isfinite(d.lo):
            qs.append(rng.uniform(d.lo + 0.3, d.lo + 3.0))
        else:
            qs.append(rng.uniform(-2.0, 2.0))
    ps = rng.uniform(-2.0, 2.0, size=system.dof)
    return np.array(qs + list(ps))


@dataclass
class Trajectory:
    """Integrated Hamiltonian trajectory with dense output.

    ``times``/``states`` hold the accepted integration nodes (full accuracy);
    arbitrary sample times go through ``sample``.
    """

    system: HamiltonianSystem
    times: np.ndarray
    states: np.ndarray
    energies: np.ndarray
    stats: _rk.StepStats
    dense: object

    def sample(self, ts) -> np.ndarray:
        return self.dense(ts)

    @property
    def energy_drift(self) -> float:
        return float(np.max(np.abs(self.energies - self.energies[0])))

    @property
    def t_end(self) -> float:
        return float(self.times[-1])

    def metadata(self) -> dict:
        return {
            "system": self.system.tag,
            "params": dict(self.system.params),
            "tol": self.stats.tol,
            "integrator": self.stats.method,
            "accepted_steps": self.stats.accepted,
            "rejected_steps": self.stats.rejected,
            "rhs_evaluations": self.stats.nfev,
            "energy_drift": self.energy_drift,
            "t_end": self.t_end,
        }

    def to_csv(self, path, sample_times=None) -> None:
        """Write `t,q1..qn,p1..pn,H` rows (17 significant digits)."""
        n = self.system.dof
        if sample_times is None:
            times = self.times
            states = self.states
        else:
            times = np.asarray(sample_times, dtype=float)
            states = self.sample(times)
        header = (
            ["t"]
            + [f"q{i + 1}" for i in range(n)]
            + [f"p{i + 1}" for i in range(n)]
            + ["H"]
        )
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            for t, z in zip(times, states):
                energy = self.system.energy(z)
                writer.writerow(
                    [f"{t:.17g}"] + [f"{v:.17g}" for v in z] + [f"{energy:.17g}"]
                )


def integrate(
    system: HamiltonianSystem,
    z0,
    t_end: float,
    tol: float,
    method: str = "adaptive",
    steps: int | None = None,
) -> Trajectory:
    """Integrate Hamilton's equations from state ``z0`` over [0, t_end].

    ``method`` is "adaptive" (embedded 5(4) pair, local error ``tol``) or
    "midpoint" (fixed-step implicit midpoint with ``steps`` steps).  Failure
    modes: approaching a domain boundary within the guard band raises
    SingularApproachError with the crossing time; step-size underflow raises
    StepSizeUnderflowError.
    """
    z0 = np.asarray(z0, dtype=float)
    if z0.shape != (2 * system.dof,):
        raise InputError(f"state must have shape ({2 * system.dof},), got {z0.shape}")
    if not (TOL_RANGE[0] <= tol <= TOL_RANGE[1]):
        raise InputError(f"tol must lie in [{TOL_RANGE[0]}, {TOL_RANGE[1]}]")
    if not system.in_domain(z0):
        raise InputError(f"initial state {z0} outside the system domain")
    if t_end <= 0:
        raise InputError("t_end must be positive")

    guards = []
    for i, dom in enumerate(system.domain):
        guards.extend(dom.guard_functions(i))

    def rhs(t, z):
        return system.vector_field(z)

    if method == "adaptive":
        result = _rk.solve_adaptive(rhs, 0.0, float(t_end), z0, tol, guards=guards)
    elif method == "midpoint":
        if steps is None:
            raise InputError("midpoint mode requires steps")
        result = _rk.solve_midpoint(rhs, 0.0, float(t_end), z0, steps, guards=guards)
    else:
        raise InputError(f"unknown integration method {method!r}")

    if result.status == "guard":
        raise SingularApproachError(
            f"{system.tag}: trajectory entered the singular guard band at "
            f"t={result.stop_time:.9g}",
            time=result.stop_time,
        )
    if result.status == "underflow":
        raise StepSizeUnderflowError(
            f"{system.tag}: step size underflow at t={result.stop_time:.9g}"
        )

    energies = np.array([system.energy(z) for z in result.y])
    return Trajectory(system, result.t, result.y, energies, result.stats, result.dense)


# ---------------------------------------------------------------------------
# Period detection
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PeriodEstimate:
    period: float
    residual: float  # phase-space distance |z(T) - z(0)| at the refined T


def detect_period(traj: Trajectory, tol: float) -> PeriodEstimate:
    """First phase-space return time of a trajectory.

    Scans the return distance |z(t) - z(0)| on a uniform grid of the dense
    output, then refines the first local minimum that drops below ``tol`` by
    parabolic minimization.  The trajectory should span at least three
    conjectured periods so a genuine return is in view.
    """
    z0 = traj.states[0]
    t_end = traj.t_end
    n_grid = max(4096, 512 * max(1, int(t_end / (2 * math.pi))))
    ts = np.linspace(0.0, t_end, n_grid)
    zs = traj.sample(ts)
    d2 = np.sum((zs - z0) ** 2, axis=1)

    scale = math.sqrt(float(np.max(d2)))
    if scale == 0.0:
        raise PeriodNotFoundError(
            "trajectory is constant (equilibrium); period undefined"
        )
    # Skip the departure from z0 before looking for returns.
    start = 1
    while start < n_grid and d2[start] < 0.25 * scale**2:
        start += 1

    def dist2(t: float) -> float:
        dz = traj.sample(float(t)) - z0
        return float(np.dot(dz, dz))

    for i in range(max(start, 1), n_grid - 1):
        if d2[i] <= d2[i - 1] and d2[i] <= d2[i + 1]:
            res = minimize_scalar(
                dist2,
                bounds=(ts[i - 1], ts[i + 1]),
                method="bounded",
                options={"xatol": 1e-13},
            )
            residual = math.sqrt(max(res.fun, 0.0))
            if residual < tol:
                return PeriodEstimate(float(res.x), residual)
    raise PeriodNotFoundError(
        f"no phase-space return below tol={tol:g} in [0, {t_end:g}]: "
        "aperiodic motion or window too short"
    )


# ---------------------------------------------------------------------------
# Isochrony probing
# ---------------------------------------------------------------------------


def isochrony_trajectory(
    which: str, c: float, z0, t_end: float, tol: float
) -> Trajectory:
    """Trajectory suitable for period detection, for each oscillator.

    H2 and H3 orbits stay inside their canonical charts, so this is plain
    canonical integration.  Every H4 orbit, however, spans a q-interval of
    width exactly pi/2 (from qdot^2 = sin^2(q) [(E/c) sin 2q - cos 2q]) and
    therefore crosses q = pi/2, where the canonical momentum diverges even
    though the motion q(t) is perfectly regular.  For H4 the motion is
    integrated in the globally regular coordinate u = cot q, in which it
    obeys the shifted harmonic law u'' = -u + E/c; states are reported as
    (q, qdot) with q in (0, pi).
    """
    system = build_oscillator(which, c)
    if which in ("H2", "H3"):
        return integrate(system, z0, t_end, tol)

    z0 = np.asarray(z0, dtype=float)
    if z0.shape != (2,):
        raise InputError(f"state must have shape (2,), got {z0.shape}")
    q0, p0 = z0
    if not 0.0 < q0 < math.pi:
        raise InputError("H4 regularized integration needs q0 in (0, pi)")
    # Energy and initial qdot from the canonical data (K has a continuous
    # extension through pi/2; H itself needs q0 != pi/2 for the potential).
    if abs(q0 - math.pi / 2) < 1e-12:
        raise InputError("q0 = pi/2 sits on the chart seam; perturb it")
    kin = math.sin(q0) ** 2 * math.sin(2 * q0) / (2 * c)
    energy0 = 0.5 * (p0 * p0 * kin + 2 * c * math.cos(2 * q0) / math.sin(2 * q0))
    qdot0 = p0 * kin
    center = energy0 / c

    u0 = 1.0 / math.tan(q0)
    v0 = -qdot0 * (1.0 + u0 * u0)  # u = cot q => udot = -qdot / sin^2 q

    regular = HamiltonianSystem(
        tag="H4-regular",
        dof=1,
        params={"c": c, "energy": energy0},
        domain=(CoordinateDomain(),),
        energy_fn=lambda z: 0.5 * float(z[1] ** 2 + z[0] ** 2) - center * float(z[0]),
        gradient_fn=lambda z: np.array([z[0] - center, z[1]]),
    )
    inner = integrate(regular, [u0, v0], t_end, tol)

    def to_q_qdot(states_uv: np.ndarray) -> np.ndarray:
        u = states_uv[..., 0]
        v = states_uv[..., 1]
        q = np.arctan2(1.0, u)  # arccot with range (0, pi)
        qdot = -v / (1.0 + u * u)
        return np.stack([q, qdot], axis=-1)

    class _MappedDense:
        def __init__(self, dense):
            self._dense = dense

        def __call__(self, t):
            if np.isscalar(t) or np.asarray(t).ndim == 0:
                return to_q_qdot(np.atleast_2d(self._dense(t)))[0]
            return to_q_qdot(self._dense(t))

    states = to_q_qdot(inner.states)
    # On true orbits (udot^2 + u^2 - 2(E/c)u)/2 == 1/2 identically; report the
    # drift of that invariant in energy units around the exact initial energy.
    invariant = 0.5 * (inner.states[:, 1] ** 2 + inner.states[:, 0] ** 2) - center * inner.states[:, 0]
    energies = energy0 + c * (invariant - 0.5)
    probe_system = HamiltonianSystem(
        tag="H4-newtonian",
        dof=1,
        params={"c": c, "energy": energy0},
        domain=(CoordinateDomain(0.0, math.pi),),
        energy_fn=lambda z: energy0,
        gradient_fn=lambda z: np.zeros(2),
    )
    return Trajectory(
        probe_system, inner.times, states, energies, inner.stats, _MappedDense(inner.dense)
    )


# ---------------------------------------------------------------------------
# Newtonian consistency for H2
# ---------------------------------------------------------------------------


def newton_residual(traj: Trajectory) -> float:
    """Max residual of qdd = 3 qd^2/(2q) + q(1 - q^2)/2 along an H2 trajectory.

    qd and qdd come from Hamilton's equations analytically (qd = p q^3 / c,
    qdd by the chain rule), never from numerical differentiation of samples.
    """
    if traj.system.tag != "H2":
        raise InputError(f"newton_residual applies to H2 trajectories, got {traj.system.tag!r}")
    c = traj.system.params["c"]
    q = traj.states[:, 0]
    p = traj.states[:, 1]
    qd = p * q**3 / c
    pd = -0.5 * (3.0 * p * p * q * q / c + c * (1.0 - 1.0 / (q * q)))
    qdd = pd * q**3 / c + 3.0 * p * p * q**5 / (c * c)
    residual = qdd - 3.0 * qd * qd / (2.0 * q) - 0.5 * q * (1.0 - q * q)
    return float(np.max(np.abs(residual)))


# ---------------------------------------------------------------------------
# Classical c-invariance
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CScalingReport:
    """Deviation of H2 trajectories under a change of the constant c.

    The coordinate path q(t) must not depend on c, while the momentum scales
    as p -> (c2/c1) p.
    """

    c1: float
    c2: float
    q0: float
    t_end: float
    tol: float
    max_q_deviation: float
    max_p_scaling_deviation: float

    def to_jsonable(self) -> dict:
        return {
            "c1": self.c1,
            "c2": self.c2,
            "q0": self.q0,
            "t_end": self.t_end,
            "tol": self.tol,
            "max_q_deviation": self.max_q_deviation,
            "max_p_scaling_deviation": self.max_p_scaling_deviation,
        }


def c_scaling_check(
    c1: float,
    c2: float,
    q0: float,
    t_end: float = 4 * math.pi,
    tol: float = 1e-11,
    samples: int = 2048,
) -> CScalingReport:
    """Integrate H2 with c1 and c2 from (q0, 0) and compare sampled paths."""
    if not (c1 > 0 and c2 > 0):
        raise InputError("c-scaling check requires positive c1, c2")
    sys1 = build_oscillator("H2", c1)
    sys2 = build_oscillator("H2", c2)
    z0 = np.array([q0, 0.0])
    traj1 = integrate(sys1, z0, t_end, tol)
    traj2 = integrate(sys2, z0, t_end, tol)
    ts = np.linspace(0.0, t_end, samples)
    z1 = traj1.sample(ts)
    z2 = traj2.sample(ts)
    q_dev = float(np.max(np.abs(z1[:, 0] - z2[:, 0])))
    p_dev = float(np.max(np.abs(z2[:, 1] - (c2 / c1) * z1[:, 1])))
    return CScalingReport(c1, c2, float(q0), float(t_end), tol, q_dev, p_dev)
