"""Figures of merit: SSIM, PSNR and sinogram SNR."""

from __future__ import annotations

import math

import numpy as np
from scipy.signal import fftconvolve

from .grid import GridMismatchError, ScalarImage
from .tomo import Sinogram

_WINDOW_SIZE = 11
_WINDOW_SIGMA = 1.5
_K1 = 0.01
_K2 = 0.03


def _window() -> np.ndarray:
    r = np.arange(_WINDOW_SIZE) - (_WINDOW_SIZE - 1) / 2.0
    g = np.exp(-(r**2) / (2.0 * _WINDOW_SIGMA**2))
    w = np.outer(g, g)
    return w / w.sum()


def ssim(a: ScalarImage, b: ScalarImage, dynamic_range: float = 1.0) -> float:
    """Mean local structural similarity (11x11 Gaussian window, sigma 1.5)."""
    if a.grid != b.grid:
        raise GridMismatchError("ssim needs both images on one grid")
    if dynamic_range <= 0:
        raise ValueError("dynamic_range must be > 0")
    if min(a.grid.nx, a.grid.ny) < _WINDOW_SIZE:
        raise ValueError(f"images must be at least {_WINDOW_SIZE} pixels on each side")
    x = a.values
    y = b.values
    w = _window()
    mu_x = fftconvolve(x, w, mode="valid")
    mu_y = fftconvolve(y, w, mode="valid")
    var_x = fftconvolve(x * x, w, mode="valid") - mu_x * mu_x
    var_y = fftconvolve(y * y, w, mode="valid") - mu_y * mu_y
    cov = fftconvolve(x * y, w, mode="valid") - mu_x * mu_y
    c1 = (_K1 * dynamic_range) ** 2
    c2 = (_K2 * dynamic_range) ** 2
    num = (2.0 * mu_x * mu_y + c1) * (2.0 * cov + c2)
    den = (mu_x * mu_x + mu_y * mu_y + c1) * (var_x + var_y + c2)
    return float(np.mean(num / den))


def psnr(a: ScalarImage, ref: ScalarImage, dynamic_range: float = 1.0) -> float:
    """Peak signal-to-noise ratio in dB; +inf for identical images."""
    if a.grid != ref.grid:
        raise GridMismatchError("psnr needs both images on one grid")
    if dynamic_range <= 0:
        raise ValueError("dynamic_range must be > 0")
    mse = float(np.mean((a.values - ref.values) ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(dynamic_range**2 / mse)


def measure_snr(ideal: Sinogram, noisy: Sinogram) -> float:
    """SNR in dB of noisy = ideal + noise, with mean-subtracted energies."""
    if ideal.geometry != noisy.geometry:
        raise ValueError("sinogram geometries differ")
    delta = noisy.values - ideal.values
    sig = ideal.values - ideal.values.mean()
    noise = delta - delta.mean()
    noise_energy = float(np.sum(noise * noise))
    if noise_energy == 0.0:
        raise ValueError("noise component has zero variance; SNR is undefined")
    return 10.0 * math.log10(float(np.sum(sig * sig)) / noise_energy)
