"""Weyl-ordered quantization of the 1-D oscillators and ground-state spectra.

For a kinetic term (1/2) p^2 g(q) the symmetric (Weyl) ordering of the
operator, with p = -i hbar d/dx, is the differential operator

    -(hbar^2 / 2) [ g(x) d^2/dx^2 + g'(x) d/dx + (1/4) g''(x) ]

whose (1, 1, 1/4) coefficient pattern is exactly what the operator algebra
produces on polynomial symbols; for H2 (kinetic factor q^3/c, a polynomial)
the operator is taken directly from the exact algebra with hbar substituted
numerically, while the trigonometric factors of H3/H4 use the same pattern
with analytic derivatives.

Discretization: second-order central differences on a uniform grid strictly
inside the singular domain, Dirichlet boundaries.  The assembled matrix is
symmetrized (M <- (M + M^T)/2) with the pre-symmetrization asymmetry kept as
a diagnostic; the ground state is Richardson-extrapolated from two grids
(exact spacing halving).  Dirichlet truncation near singular endpoints is a
pragmatic stand-in for self-adjointness analysis and is flagged in every
result.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .dynamics import c_scaling_check
from .errors import (
    InputError,
    InvariantViolationError,
    OscqError,
    SolverConvergenceError,
)
from .poly_algebra import PolyObservable
from .weyl_algebra import weyl_quantize

ASYMMETRY_BOUND = 1e-6
DENSE_GRID_LIMIT = 4096

_DOMAINS = {
    "H2": (0.0, math.inf),
    "H3": (0.0, math.pi / 2),
    "H4": (0.0, math.pi / 2),
    "harmonic": (-math.inf, math.inf),
}

_DEFAULT_INTERVALS = {
    "H2": (0.05, 20.0),
    "H3": (0.02, math.pi / 2 - 0.02),
    "H4": (0.02, math.pi / 2 - 0.02),
    "harmonic": (-10.0, 10.0),
}


def default_interval(which: str, c: float = 1.0) -> tuple[float, float]:
    try:
        return _DEFAULT_INTERVALS[which]
    except KeyError:
        raise InputError(f"unknown spectral system {which!r}") from None


@dataclass(frozen=True)
class SpectralProblem:
    """Grid eigenproblem description for one oscillator at fixed c and hbar.

    ``which`` is one of H2 / H3 / H4, or "harmonic" for the self-test mode
    H = (p^2 + q^2)/2.  ``grid_points`` counts interior points; boundaries
    are Dirichlet.
    """

    which: str
    c: float = 1.0
    hbar: float = 1.0
    interval: tuple[float, float] | None = None
    grid_points: int = 2048
    boundary: str = "dirichlet"

    def __post_init__(self):
        if self.which not in _DOMAINS:
            raise InputError(f"unknown spectral system {self.which!r}")
        if self.boundary != "dirichlet":
            raise InputError("only Dirichlet boundaries are supported")
        if self.grid_points < 64:
            raise InputError("grid_points must be at least 64")
        if not self.hbar > 0:
            raise InputError("hbar must be positive")
        if self.which == "H2" and not self.c > 0:
            raise InputError("H2 requires c > 0")
        if self.which in ("H3", "H4") and self.c == 0:
            raise InputError(f"{self.which} requires nonzero c")
        interval = self.interval or default_interval(self.which, self.c)
        lo, hi = float(interval[0]), float(interval[1])
        if not lo < hi:
            raise InputError(f"empty interval ({lo}, {hi})")
        dom_lo, dom_hi = _DOMAINS[self.which]
        if not (dom_lo < lo and hi < dom_hi):
            raise InputError(
                f"interval ({lo}, {hi}) must lie strictly inside the domain "
                f"({dom_lo}, {dom_hi}) of {self.which}"
            )
        object.__setattr__(self, "interval", (lo, hi))

    def with_grid(self, grid_points: int) -> "SpectralProblem":
        return SpectralProblem(
            self.which, self.c, self.hbar, self.interval, grid_points, self.boundary
        )


# ---------------------------------------------------------------------------
# Coefficient functions
# ---------------------------------------------------------------------------


def _h2_exact_stencil(c: float, hbar: float):
    """Coefficient functions for H2 straight from the exact operator algebra.

    Quantizes the polynomial kinetic symbol q^3 p^2 exactly, then substitutes
    the numeric hbar and the 1/(2c) prefactor.  Returns (A2, A1, A0) with the
    kinetic operator A2 d^2 + A1 d + A0.
    """
    q = PolyObservable.q()
    p = PolyObservable.p()
    op = weyl_quantize(q**3 * p**2)
    poly_coeffs: dict[int, list[tuple[int, float]]] = {0: [], 1: [], 2: []}
    for key, gauss in op.terms.items():
        a, b, h = key
        if gauss.im != 0:
            raise InvariantViolationError("kinetic operator coefficient not real")
        poly_coeffs[b].append((a, float(gauss.re) * hbar**h))

    def make(order):
        terms = poly_coeffs[order]

        def fn(x):
            out = np.zeros_like(x)
            for a, coeff in terms:
                out = out + coeff * x**a
            return out / (2.0 * c)

        return fn

    return make(2), make(1), make(0)


def _stencil_functions(which: str, c: float, hbar: float):
    """(A2, A1, A0, V): kinetic differential coefficients and potential."""
    if which == "H2":
        a2, a1, a0 = _h2_exact_stencil(c, hbar)
        return a2, a1, a0, lambda x: 0.5 * c * (x + 1.0 / x)
    if which == "harmonic":
        return (
            lambda x: -0.5 * hbar**2 * np.ones_like(x),
            lambda x: np.zeros_like(x),
            lambda x: np.zeros_like(x),
            lambda x: 0.5 * x**2,
        )
    # H3 / H4 share the trigonometric kinetic factor.
    def g(x):
        return np.sin(x) ** 2 * np.sin(2 * x) / (2 * c)

    def g1(x):
        return (np.sin(2 * x) ** 2 + 2 * np.sin(x) ** 2 * np.cos(2 * x)) / (2 * c)

    def g2(x):
        return (3 * np.sin(4 * x) - 4 * np.sin(x) ** 2 * np.sin(2 * x)) / (2 * c)

    if which == "H3":
        potential = lambda x: c / np.sin(2 * x)
    else:
        potential = lambda x: c * np.cos(2 * x) / np.sin(2 * x)
    return (
        lambda x: -0.5 * hbar**2 * g(x),
        lambda x: -0.5 * hbar**2 * g1(x),
        lambda x: -0.125 * hbar**2 * g2(x),
        potential,
    )


@dataclass
class OperatorBuild:
    """Assembled symmetric grid operator with its diagnostics."""

    problem: SpectralProblem
    matrix: np.ndarray
    x: np.ndarray
    spacing: float
    asymmetry: float


def build_quantum_operator(problem: SpectralProblem) -> OperatorBuild:
    """Discretize the Weyl-ordered Hamiltonian on the problem's grid.

    Raises if the kinetic coefficient is not strictly positive on the grid
    (possible for negative c with H3/H4) or if the pre-symmetrization
    asymmetry exceeds 1e-6 times the matrix max-norm.
    """
    lo, hi = problem.interval
    m = problem.grid_points
    h = (hi - lo) / (m + 1)
    x = lo + h * np.arange(1, m + 1)
    a2f, a1f, a0f, vf = _stencil_functions(problem.which, problem.c, problem.hbar)
    a2 = a2f(x)
    a1 = a1f(x)
    a0 = a0f(x)
    v = vf(x)
    # A2 = -(hbar^2/2) g(x): the classical kinetic factor g must be positive.
    if np.any(a2 >= 0):
        raise InputError(
            f"kinetic coefficient of {problem.which} is not positive over "
            f"({lo:g}, {hi:g}) at c={problem.c:g}; choose another interval or c"
        )

    matrix = np.zeros((m, m))
    idx = np.arange(m)
    matrix[idx, idx] = -2.0 * a2 / h**2 + a0 + v
    matrix[idx[:-1], idx[:-1] + 1] = a2[:-1] / h**2 + a1[:-1] / (2 * h)
    matrix[idx[1:], idx[1:] - 1] = a2[1:] / h**2 - a1[1:] / (2 * h)

    asymmetry = float(np.max(np.abs(matrix - matrix.T)))
    norm = float(np.max(np.abs(matrix)))
    if asymmetry > ASYMMETRY_BOUND * norm:
        raise InvariantViolationError(
            f"pre-symmetrization asymmetry {asymmetry:.3e} exceeds "
            f"{ASYMMETRY_BOUND:g} * ||M|| = {ASYMMETRY_BOUND * norm:.3e}"
        )
    matrix = 0.5 * (matrix + matrix.T)
    return OperatorBuild(problem, matrix, x, h, asymmetry)


def dump_operator(build: OperatorBuild, path) -> None:
    """Coordinate-format text dump `i j value` (1-based, nonzeros only)."""
    with open(path, "w") as fh:
        fh.write(f"# {build.problem.which} grid={build.problem.grid_points}\n")
        m = build.matrix
        rows, cols = np.nonzero(m)
        for i, j in zip(rows, cols):
            fh.write(f"{i + 1} {j + 1} {m[i, j]:.17g}\n")


def _lowest_eigenpairs(matrix: np.ndarray, k: int):
    """Lowest k eigenpairs of a symmetric tridiagonal grid operator."""
    m = matrix.shape[0]
    if k < 1 or k >= m:
        raise InputError(f"need 1 <= k < grid size, got k={k}")
    if m <= DENSE_GRID_LIMIT:
        d = np.diag(matrix).copy()
        e = np.diag(matrix, 1).copy()
        w, v = eigh_tridiagonal(d, e, select="i", select_range=(0, k - 1))
        return w, v
    from scipy.sparse import csr_matrix
    from scipy.sparse.linalg import ArpackNoConvergence, eigsh

    # Shift below the spectrum (Gershgorin bound) for shift-invert.
    d = np.diag(matrix)
    radius = np.zeros(m)
    radius[:-1] += np.abs(np.diag(matrix, 1))
    radius[1:] += np.abs(np.diag(matrix, -1))
    sigma = float(np.min(d - radius)) - 1.0
    try:
        w, v = eigsh(csr_matrix(matrix), k=k, sigma=sigma, which="LM")
    except ArpackNoConvergence as exc:
        raise SolverConvergenceError(f"shift-invert eigensolver failed: {exc}") from exc
    order = np.argsort(w)
    return w[order], v[:, order]


@dataclass
class SpectrumResult:
    """Eigenvalues and Richardson-extrapolated ground state for one problem."""

    problem: SpectralProblem
    eigenvalues: np.ndarray          # lowest k, fine grid
    ground_state: np.ndarray         # fine grid, L2-normalized
    x: np.ndarray
    e0: float                        # Richardson extrapolation
    e0_error: float                  # |E_fine - E_coarse| / 3
    e0_coarse: float
    e0_fine: float
    grid_coarse: int
    grid_fine: int
    asymmetry: float
    nodeless: bool
    margin_shift: float | None = None
    notes: dict = field(default_factory=lambda: {
        "ordering": "weyl-symmetric",
        "boundary": "dirichlet-truncated",
    })

    def to_jsonable(self) -> dict:
        return {
            "which": self.problem.which,
            "c": self.problem.c,
            "hbar": self.problem.hbar,
            "interval": list(self.problem.interval),
            "grid_coarse": self.grid_coarse,
            "grid_fine": self.grid_fine,
            "eigenvalues": [float(w) for w in self.eigenvalues],
            "e0": self.e0,
            "e0_error": self.e0_error,
            "e0_coarse": self.e0_coarse,
            "e0_fine": self.e0_fine,
            "asymmetry": self.asymmetry,
            "nodeless": self.nodeless,
            "margin_shift": self.margin_shift,
            "notes": dict(self.notes),
        }


def _is_nodeless(psi: np.ndarray) -> bool:
    significant = psi[np.abs(psi) > 1e-8 * np.max(np.abs(psi))]
    return bool(np.all(significant > 0) or np.all(significant < 0))


def ground_state(problem: SpectralProblem, k: int = 1,
                 margin_check: bool = False) -> SpectrumResult:
    """Lowest k eigenpairs with a two-grid Richardson estimate of E0.

    The fine grid has exactly half the coarse spacing (2m+1 interior points
    against m).  With ``margin_check`` the interval is widened by 30% on each
    non-singular end and E0 recomputed at comparable spacing; the shift is
    reported so truncation error can be compared with the discretization
    estimate.
    """
    coarse = build_quantum_operator(problem)
    fine_problem = problem.with_grid(2 * problem.grid_points + 1)
    fine = build_quantum_operator(fine_problem)

    w_coarse, _ = _lowest_eigenpairs(coarse.matrix, 1)
    w_fine, v_fine = _lowest_eigenpairs(fine.matrix, k)

    e_coarse = float(w_coarse[0])
    e_fine = float(w_fine[0])
    e0 = (4.0 * e_fine - e_coarse) / 3.0
    e0_error = abs(e_fine - e_coarse) / 3.0

    psi = v_fine[:, 0] / math.sqrt(fine.spacing)
    if psi[int(np.argmax(np.abs(psi)))] < 0:
        psi = -psi
    norm = float(np.sqrt(np.sum(psi**2) * fine.spacing))
    if abs(norm - 1.0) > 1e-10:
        raise InvariantViolationError(f"ground state norm {norm} != 1")

    margin_shift = None
    if margin_check:
        margin_shift = _margin_shift(problem, e_fine)

    return SpectrumResult(
        problem=problem,
        eigenvalues=w_fine,
        ground_state=psi,
        x=fine.x,
        e0=e0,
        e0_error=e0_error,
        e0_coarse=e_coarse,
        e0_fine=e_fine,
        grid_coarse=problem.grid_points,
        grid_fine=fine_problem.grid_points,
        asymmetry=max(coarse.asymmetry, fine.asymmetry),
        nodeless=_is_nodeless(psi),
        margin_shift=margin_shift,
    )


def _margin_shift(problem: SpectralProblem, e_ref: float) -> float:
    """E0 shift under widening the interval on its non-singular ends."""
    lo, hi = problem.interval
    dom_lo, dom_hi = _DOMAINS[problem.which]
    new_lo = lo - 0.3 * (hi - lo) if not math.isfinite(dom_lo) else lo
    new_hi = hi + 0.3 * (hi - lo) if not math.isfinite(dom_hi) else hi
    if (new_lo, new_hi) == (lo, hi):
        return 0.0
    spacing = (hi - lo) / (problem.grid_points + 1)
    points = max(64, int(round((new_hi - new_lo) / spacing)) - 1)
    widened = SpectralProblem(
        problem.which, problem.c, problem.hbar, (new_lo, new_hi), points
    )
    build = build_quantum_operator(widened)
    w, _ = _lowest_eigenpairs(build.matrix, 1)
    return float(w[0] - e_ref)


def observed_order(which: str, c: float, hbar: float = 1.0,
                   interval: tuple[float, float] | None = None,
                   base_grid: int = 256) -> float:
    """Empirical convergence order of E0 from three exactly-halved spacings."""
    grids = [base_grid, 2 * base_grid + 1, 4 * base_grid + 3]
    energies = []
    for g in grids:
        problem = SpectralProblem(which, c, hbar, interval, g)
        build = build_quantum_operator(problem)
        w, _ = _lowest_eigenpairs(build.matrix, 1)
        energies.append(float(w[0]))
    d1 = abs(energies[0] - energies[1])
    d2 = abs(energies[1] - energies[2])
    if d2 == 0:
        raise SolverConvergenceError("refinement differences vanished; cannot estimate order")
    return math.log2(d1 / d2)


# ---------------------------------------------------------------------------
# c-scan
# ---------------------------------------------------------------------------


@dataclass
class ScanRow:
    c: float
    e0: float | None
    e0_error: float | None
    grid: int
    interval: tuple[float, float]
    hbar: float
    error: str | None = None
    classical_q_dev: float | None = None

    def to_jsonable(self) -> dict:
        return {
            "c": self.c,
            "e0": self.e0,
            "e0_error": self.e0_error,
            "grid": self.grid,
            "interval_lo": self.interval[0],
            "interval_hi": self.interval[1],
            "hbar": self.hbar,
            "error": self.error,
            "classical_q_dev": self.classical_q_dev,
        }


@dataclass
class ScanResult:
    which: str
    rows: list[ScanRow]
    notes: dict = field(default_factory=lambda: {
        "ordering": "weyl-symmetric",
        "boundary": "dirichlet-truncated",
    })

    @property
    def e0_spread(self) -> float | None:
        values = [r.e0 for r in self.rows if r.e0 is not None]
        if not values:
            return None
        return max(values) - min(values)

    def to_jsonable(self) -> dict:
        return {
            "which": self.which,
            "rows": [r.to_jsonable() for r in self.rows],
            "e0_spread": self.e0_spread,
            "notes": dict(self.notes),
        }

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            fh.write("c,E0,E0_error,grid,interval_lo,interval_hi,hbar\n")
            for r in self.rows:
                e0 = "nan" if r.e0 is None else f"{r.e0:.17g}"
                err = "nan" if r.e0_error is None else f"{r.e0_error:.17g}"
                fh.write(
                    f"{r.c:.17g},{e0},{err},{r.grid},"
                    f"{r.interval[0]:.17g},{r.interval[1]:.17g},{r.hbar:.17g}\n"
                )


def e0_scan(
    which: str,
    c_values,
    hbar: float = 1.0,
    grid_points: int = 2048,
    interval: tuple[float, float] | None = None,
    classical_check: bool = False,
    threads: int = 1,
) -> ScanResult:
    """Converged E0 per c; failures are captured per row and the scan goes on.

    With ``classical_check`` (H2 only) each row also records the maximum
    classical q-trajectory deviation against the first c: the classical paths
    coincide while the quantum ground state moves with c.
    """
    c_values = [float(c) for c in c_values]
    if not c_values:
        raise InputError("e0_scan requires at least one c value")

    def run_one(c: float) -> ScanRow:
        try:
            problem = SpectralProblem(which, c, hbar, interval, grid_points)
            result = ground_state(problem)
            return ScanRow(
                c, result.e0, result.e0_error, grid_points, problem.interval, hbar
            )
        except OscqError as exc:
            lo, hi = interval if interval else default_interval(which)
            return ScanRow(c, None, None, grid_points, (lo, hi), hbar,
                           error=f"{type(exc).__name__}: {exc}")

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(run_one, c_values))
    else:
        rows = [run_one(c) for c in c_values]

    if classical_check and which == "H2":
        c_ref = c_values[0]
        for row in rows:
            if row.error is None and row.c > 0:
                report = c_scaling_check(c_ref, row.c, q0=2.0,
                                         t_end=4 * math.pi, tol=1e-10)
                row.classical_q_dev = report.max_q_deviation
    return ScanResult(which, rows)
