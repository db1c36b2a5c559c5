"""Reference solvers independent of the perturbative machinery.

Two back ends validate the cascade output:

* ``fp_fd_solve`` integrates the density equation directly,
  dw/dt = -d/dx(D1 w) + D w'' with D1 = -dU/dx, in conservative flux form
  with Crank-Nicolson time stepping and absorbing (zero) boundary values.

* ``em_simulate`` runs Euler-Maruyama paths of the matching stochastic
  process dx = D1(x,t) dt + sqrt(2D) dB.  Normal increments come from
  Box-Muller over per-path splitmix64 substreams, so ensembles are
  bit-reproducible and independent of any path partitioning.

Both start from the family's closed-form density at t0 > 0, the same initial
data the cascade uses, so all solvers address one initial-value problem.
"""

from dataclasses import dataclass

import numpy as np

from . import kernels
from .analysis import trapezoid
from .errors import SolverError
from .model import (
    DensityField,
    DriftSpec,
    FAMILY_LINEAR,
    FAMILY_QUADRATIC,
    FAMILY_ZERO,
    Grid,
)
from .oracles import ou_density_exact, w0_diffusion


def oracle_density(drift: DriftSpec, d_coeff: float, lam: float, x, t):
    """Closed-form density of a built-in family at time t (lam = 0 falls back
    to the heat kernel)."""
    if drift.family == FAMILY_ZERO or lam == 0.0:
        return w0_diffusion(x, t, d_coeff)
    if drift.family == FAMILY_LINEAR:
        return w0_diffusion(
            np.asarray(x, dtype=float) + lam * drift.modulation.antiderivative(t), t, d_coeff
        )
    if drift.family == FAMILY_QUADRATIC:
        return ou_density_exact(x, t, d_coeff, lam)
    raise ValueError(f"no closed-form density for drift family {drift.family!r}")


def oracle_moments(drift: DriftSpec, d_coeff: float, lam: float, t):
    """(mean, variance) of the closed-form density at time t."""
    if drift.family == FAMILY_ZERO or lam == 0.0:
        return 0.0, 2.0 * d_coeff * t
    if drift.family == FAMILY_LINEAR:
        return -lam * float(drift.modulation.antiderivative(t)), 2.0 * d_coeff * t
    if drift.family == FAMILY_QUADRATIC:
        return 0.0, d_coeff * (1.0 - np.exp(-2.0 * lam * t)) / lam
    raise ValueError(f"no closed-form moments for drift family {drift.family!r}")


def fp_fd_solve(
    drift: DriftSpec,
    d_coeff: float,
    lam: float,
    grid: Grid,
    w_init: np.ndarray,
    mass_tol: float = 1e-8,
    boundary_tol: float = 1e-12,
) -> DensityField:
    """Crank-Nicolson flux-form integration of the density equation.

    The initial slice must be non-negative with trapezoid mass 1 within 1e-8.
    Aborts if the per-slice mass drifts beyond ``mass_tol`` or if the density
    next to the absorbing boundary ever exceeds ``boundary_tol`` of the slice
    peak (the domain is then too narrow for the run).
    """
    if grid.nx < 5:
        raise SolverError("the FD solver needs nx >= 5")
    w_init = np.asarray(w_init, dtype=float)
    if w_init.shape != (grid.nx,):
        raise ValueError(f"initial slice must have shape ({grid.nx},)")
    if w_init.min() < 0:
        raise ValueError("initial density must be non-negative")
    if abs(float(trapezoid(w_init, grid.dx)) - 1.0) > 1e-8:
        raise ValueError("initial density must have unit trapezoid mass within 1e-8")
    x = grid.x
    x_half = x[:-1] + 0.5 * grid.dx
    dx, dt = grid.dx, grid.dt
    vals = np.empty((grid.nt, grid.nx))
    vals[0] = w_init
    vals[0, 0] = 0.0
    vals[0, -1] = 0.0

    def check_slice(j):
        w = vals[j]
        mass = float(trapezoid(w, dx))
        if abs(mass - 1.0) > mass_tol:
            raise SolverError(
                f"FD mass drift |{mass:.12g} - 1| > {mass_tol:g} first at step {j} (t={grid.t[j]:.6g})"
            )
        peak = w.max()
        if max(w[1], w[-2]) > boundary_tol * peak:
            raise SolverError(
                f"FD boundary leak at step {j} (t={grid.t[j]:.6g}): density next to the edge "
                f"exceeds {boundary_tol:g} of the peak; widen the domain"
            )
        if w.min() < -1e-12:
            raise SolverError(
                f"FD undershoot {w.min():.3e} below -1e-12 at step {j}; refine the grid"
            )

    check_slice(0)
    for j in range(grid.nt - 1):
        tm = grid.t[j] + 0.5 * dt
        a_half = drift.drift_coefficient(x_half, tm, lam)
        try:
            kernels.fp_cn_step(a_half, d_coeff, dt, dx, vals[j], vals[j + 1])
        except ZeroDivisionError as exc:
            raise SolverError(f"FD tridiagonal solve failed at step {j}") from exc
        check_slice(j + 1)
    if not np.all(np.isfinite(vals)):
        raise SolverError("FD solve produced non-finite values")
    return DensityField(grid=grid, values=vals)


@dataclass(frozen=True)
class SampleEnsemble:
    """Particle positions at each checkpoint time, plus the seed that made them."""

    checkpoints: tuple
    positions: tuple  # of float arrays, one per checkpoint, each length n_paths
    seed: int

    def __post_init__(self):
        if not self.positions:
            raise ValueError("ensemble needs at least one checkpoint")
        n = len(self.positions[0])
        for k, arr in enumerate(self.positions):
            if len(arr) != n:
                raise ValueError(f"checkpoint {k} has {len(arr)} paths, expected {n}")

    @property
    def n_paths(self) -> int:
        return len(self.positions[0])


def em_simulate(
    drift: DriftSpec,
    d_coeff: float,
    lam: float,
    t0: float,
    checkpoints,
    dt: float,
    n_paths: int,
    seed: int,
) -> SampleEnsemble:
    """Euler-Maruyama paths from the closed-form density at t0.

    ``dt`` is the maximum step; each inter-checkpoint interval is subdivided
    evenly so checkpoints are hit exactly.  Path p draws its initial position
    and all increments from substream mix64(seed + (p+1)*GOLDEN), normal k of
    the path consuming stream outputs 2k+1 and 2k+2 (Box-Muller).
    """
    if not t0 > 0:
        raise ValueError("t0 must be > 0")
    if not dt > 0:
        raise ValueError("dt must be > 0")
    if n_paths < 1:
        raise ValueError("n_paths must be >= 1")
    checkpoints = [float(c) for c in checkpoints]
    if not checkpoints or list(checkpoints) != sorted(checkpoints):
        raise ValueError("checkpoints must be a non-empty ascending sequence")
    if checkpoints[0] < t0:
        raise ValueError("checkpoints must be >= t0")

    states = kernels.path_stream_states(seed, n_paths)
    z = np.empty(n_paths)
    k = 0  # index of the next normal to consume per path
    kernels.bm_normals(states, k, z)
    k += 1
    mean0, var0 = oracle_moments(drift, d_coeff, lam, t0)
    xpos = mean0 + np.sqrt(var0) * z

    noise_scale = np.sqrt(2.0 * d_coeff)
    out = []
    t_now = t0
    for c in checkpoints:
        span = c - t_now
        if span > 0:
            n_steps = max(int(np.ceil(span / dt - 1e-12)), 1)
            h = span / n_steps
            sqrt_h = np.sqrt(h)
            for _ in range(n_steps):
                kernels.bm_normals(states, k, z)
                k += 1
                xpos = xpos + drift.drift_coefficient(xpos, t_now, lam) * h + noise_scale * sqrt_h * z
                t_now += h
            t_now = c
        out.append(xpos.copy())
    return SampleEnsemble(checkpoints=tuple(checkpoints), positions=tuple(out), seed=seed)


def density_from_samples(ensemble: SampleEnsemble, grid: Grid) -> DensityField:
    """Histogram density on the grid's x nodes at each checkpoint slice.

    Bins are dx wide and centered on the nodes; counts are normalized so the
    trapezoid mass of each populated slice is exactly 1.  Time slices that are
    not checkpoints are left unpopulated (NaN values, mask False).
    """
    t_nodes = grid.t
    edges = grid.x_min + (np.arange(grid.nx + 1) - 0.5) * grid.dx
    vals = np.full((grid.nt, grid.nx), np.nan)
    mask = np.zeros(grid.nt, dtype=bool)
    for c, pos in zip(ensemble.checkpoints, ensemble.positions):
        if len(pos) == 0:
            raise ValueError(f"checkpoint t={c} holds no samples")
        diffs = np.abs(t_nodes - c)
        j = int(np.argmin(diffs))
        if diffs[j] > 1e-9 * max(1.0, abs(c)):
            raise ValueError(f"checkpoint t={c} does not coincide with a grid time node")
        counts, _ = np.histogram(pos, bins=edges)
        w = counts / (len(pos) * grid.dx)
        mass = float(trapezoid(w, grid.dx))
        if mass <= 0:
            raise ValueError(f"all samples of checkpoint t={c} fall outside the grid")
        vals[j] = w / mass
        mask[j] = True
    return DensityField(grid=grid, values=vals, populated=mask)
