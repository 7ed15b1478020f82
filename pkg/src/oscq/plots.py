"""Matplotlib report figures rendered next to the delimited outputs.

Every function takes the already-computed result objects and a target path;
figures are written to file (Agg backend), never shown interactively.
"""

from __future__ import annotations


import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

_DPI = 150


def _finish(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)
    return str(path)


def plot_trajectory(traj, path):
    """Coordinate/momentum time series, phase portrait, and energy drift."""
    fig, axes = plt.subplots(1, 3, figsize=(11, 3.4))
    n = traj.states.shape[1] // 2
    for i in range(n):
        axes[0].plot(traj.times, traj.states[:, i], label=f"q{i + 1}")
        axes[0].plot(traj.times, traj.states[:, n + i], "--", label=f"p{i + 1}")
    axes[0].set_xlabel("t")
    axes[0].legend(fontsize=8)
    axes[0].set_title(f"{traj.system.tag} time series")

    axes[1].plot(traj.states[:, 0], traj.states[:, n], lw=0.8)
    axes[1].set_xlabel("q1")
    axes[1].set_ylabel("p1")
    axes[1].set_title("phase portrait")

    axes[2].semilogy(traj.times, np.abs(traj.energies - traj.energies[0]) + 1e-18)
    axes[2].set_xlabel("t")
    axes[2].set_ylabel("|H(t) - H(0)|")
    axes[2].set_title("energy drift")
    return _finish(fig, path)


def plot_c_scaling(report, traj_pairs, path):
    """Overlay of q(t) for two c values plus the scaled-momentum mismatch."""
    (t1, z1), (t2, z2) = traj_pairs
    fig, axes = plt.subplots(1, 2, figsize=(8.5, 3.4))
    axes[0].plot(t1, z1[:, 0], label=f"c={report.c1:g}")
    axes[0].plot(t2, z2[:, 0], "--", label=f"c={report.c2:g}")
    axes[0].set_xlabel("t")
    axes[0].set_ylabel("q(t)")
    axes[0].set_title("coordinate paths coincide")
    axes[0].legend(fontsize=8)

    scale = report.c2 / report.c1
    axes[1].semilogy(t1, np.abs(z2[:, 1] - scale * z1[:, 1]) + 1e-18)
    axes[1].set_xlabel("t")
    axes[1].set_ylabel(f"|p2 - {scale:g} p1|")
    axes[1].set_title("momentum scaling residual")
    return _finish(fig, path)


def plot_matrix_trajectory(traj, path):
    """Matrix entries over time and the conserved-energy drift."""
    fig, axes = plt.subplots(1, 2, figsize=(8.5, 3.4))
    n = traj.n
    us = np.array([s.U.ravel() for s in traj.states])
    for col in range(us.shape[1]):
        axes[0].plot(traj.times, us[:, col], lw=0.8)
    axes[0].set_xlabel("t")
    axes[0].set_ylabel("U entries")
    axes[0].set_title(f"N={n} matrix evolution")

    axes[1].semilogy(traj.times, np.abs(traj.energies - traj.energies[0]) + 1e-18)
    axes[1].set_xlabel("t")
    axes[1].set_ylabel("|E(t) - E(0)|")
    axes[1].set_title("energy drift")
    return _finish(fig, path)


def plot_manybody_trajectory(traj, path):
    """Energy drift and a norm-per-block view of the state."""
    fig, axes = plt.subplots(1, 2, figsize=(8.5, 3.4))
    norms = {
        "r": [float(np.linalg.norm(s.r)) for s in traj.states],
        "rho": [float(np.linalg.norm(s.rho)) for s in traj.states],
        "p": [float(np.linalg.norm(s.p)) for s in traj.states],
        "pi": [float(np.linalg.norm(s.pi)) for s in traj.states],
    }
    for name, series in norms.items():
        axes[0].plot(traj.times, series, label=name)
    axes[0].set_xlabel("t")
    axes[0].set_ylabel("block norm")
    axes[0].legend(fontsize=8)
    axes[0].set_title(f"N={traj.n} quartic many-body")

    axes[1].semilogy(traj.times, np.abs(traj.energies - traj.energies[0]) + 1e-18)
    axes[1].set_xlabel("t")
    axes[1].set_ylabel("|H(t) - H(0)|")
    axes[1].set_title("energy drift")
    return _finish(fig, path)


def plot_ground_state(result, path):
    """Ground-state wavefunction with the E0 estimate in the title."""
    fig, ax = plt.subplots(figsize=(5.5, 3.6))
    ax.plot(result.x, result.ground_state)
    ax.set_xlabel("x")
    ax.set_ylabel("psi0(x)")
    ax.set_title(
        f"{result.problem.which} c={result.problem.c:g}: "
        f"E0 = {result.e0:.8g} (err ~ {result.e0_error:.1e})"
    )
    return _finish(fig, path)


def plot_e0_scan(scan, path):
    """Ground-state energy against c with Richardson error bars."""
    rows = [r for r in scan.rows if r.e0 is not None]
    fig, ax = plt.subplots(figsize=(5.5, 3.6))
    if rows:
        cs = [r.c for r in rows]
        e0s = [r.e0 for r in rows]
        errs = [r.e0_error for r in rows]
        ax.errorbar(cs, e0s, yerr=errs, fmt="o-", capsize=3)
    ax.set_xlabel("c")
    ax.set_ylabel("E0")
    ax.set_title(f"{scan.which}: quantum ground state depends on c")
    return _finish(fig, path)
