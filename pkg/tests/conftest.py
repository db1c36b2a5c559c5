import numpy as np
import pytest

from fpcascade.analysis import trapezoid
from fpcascade.model import DensityField, Grid


@pytest.fixture
def small_grid():
    return Grid(-10.0, 10.0, 201, 0.05, 2.0, 79)


def sample_density(grid: Grid, sampler, normalize=True) -> DensityField:
    """Sample a closed-form density on a grid, optionally slice-normalized."""
    vals = np.array([sampler(grid.x, tj) for tj in grid.t], dtype=float)
    if normalize:
        vals = vals / trapezoid(vals, grid.dx)[:, None]
    return DensityField(grid=grid, values=vals)
