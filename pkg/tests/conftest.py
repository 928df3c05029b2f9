import numpy as np
import pytest

from tomoflow import Grid2D, ScalarImage, VectorField2D, make_kernel, smooth


@pytest.fixture
def grid16():
    return Grid2D(16, 16)


@pytest.fixture
def grid32():
    return Grid2D(32, 32)


@pytest.fixture
def grid64():
    return Grid2D(64, 64)


def gaussian_blob(grid, cx=0.0, cy=0.0, width=3.0, peak=1.0):
    X, Y = grid.meshgrid()
    return ScalarImage(grid, peak * np.exp(-((X - cx) ** 2 + (Y - cy) ** 2) / (2.0 * width**2)))


def random_smooth_field(grid, seed, sigma=4.0, amplitude=1.0):
    """White noise pushed through the kernel, normalized to a max amplitude."""
    rng = np.random.default_rng(seed)
    raw = VectorField2D(grid, rng.standard_normal(grid.shape), rng.standard_normal(grid.shape))
    spec = make_kernel(grid, sigma)
    s = smooth(spec, raw)
    mx = max(np.abs(s.vx).max(), np.abs(s.vy).max())
    return VectorField2D(grid, amplitude * s.vx / mx, amplitude * s.vy / mx)
