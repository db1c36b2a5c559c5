"""Mapping between the Fokker-Planck density and its Schrodinger-like form.

The substitution psi = exp(U/2D) W turns the density equation into
d(psi)/dt = D psi'' + Ubar psi with the effective potential

    Ubar = (D/2) U'' - (1/4) (U')^2 + (1/2) dU/dt.

Collecting powers of lam in Ubar gives the per-order sources consumed by the
cascade:

    Ubar_n = (D/2) U_n'' + (1/2) dU_n/dt - (1/4) sum_{j+k=n} U_j' U_k'.
"""

import numpy as np

from .errors import TransformOverflowError
from .model import DensityField, DriftSpec, ScalarField, TAG_WAVEFUNCTION

# |exponent| above this would overflow/underflow exp() in double precision
_EXP_LIMIT = 700.0


def effective_potential(drift: DriftSpec, d_coeff: float, lam: float, x, t):
    """Ubar(x,t) for the full potential at the given lam."""
    upp = drift.d2u_dx2_total(x, t, lam)
    up = drift.du_dx_total(x, t, lam)
    ut = drift.du_dt_total(x, t, lam)
    return 0.5 * d_coeff * upp - 0.25 * up * up + 0.5 * ut


def effective_potential_order(drift: DriftSpec, d_coeff: float, n: int, x, t):
    """Coefficient of lam^n in Ubar; zero beyond 2*max_order (the U'^2 reach)."""
    if n < 0:
        raise ValueError(f"order must be >= 0, got {n}")
    x = np.asarray(x, dtype=float)
    if n > 2 * drift.max_order:
        return np.zeros_like(x)
    acc = 0.5 * d_coeff * drift.term(n).d2u_dx2(x, t) + 0.5 * drift.term(n).du_dt(x, t)
    conv = np.zeros_like(x)
    for j in range(0, n + 1):
        k = n - j
        if j <= drift.max_order and k <= drift.max_order:
            conv = conv + drift.term(j).du_dx(x, t) * drift.term(k).du_dx(x, t)
    return acc - 0.25 * conv


def potential_exponent(drift: DriftSpec, d_coeff: float, lam: float, grid):
    t_nodes = grid.t
    x_nodes = grid.x
    expo = np.empty((grid.nt, grid.nx))
    for j, tj in enumerate(t_nodes):
        expo[j] = drift.u_total(x_nodes, tj, lam) / (2.0 * d_coeff)
    bad = np.argwhere(np.abs(expo) > _EXP_LIMIT)
    if bad.size:
        j, i = bad[0]
        raise TransformOverflowError(
            f"U/2D = {expo[j, i]:.3e} exceeds the exp() range at node "
            f"(t={t_nodes[j]:.6g}, x={x_nodes[i]:.6g}); shrink the domain or lam"
        )
    return expo


def to_wavefunction(w: DensityField, drift: DriftSpec, d_coeff: float, lam: float) -> ScalarField:
    """psi = exp(U/2D) W, pointwise on the grid."""
    if not d_coeff > 0:
        raise ValueError("diffusion constant must be > 0")
    expo = potential_exponent(drift, d_coeff, lam, w.grid)
    return ScalarField(grid=w.grid, values=np.exp(expo) * w.values, tag=TAG_WAVEFUNCTION)


def from_wavefunction(psi: ScalarField, drift: DriftSpec, d_coeff: float, lam: float) -> DensityField:
    """W = exp(-U/2D) psi, the exact inverse of to_wavefunction."""
    if not d_coeff > 0:
        raise ValueError("diffusion constant must be > 0")
    expo = potential_exponent(drift, d_coeff, lam, psi.grid)
    return DensityField(grid=psi.grid, values=np.exp(-expo) * psi.values)
