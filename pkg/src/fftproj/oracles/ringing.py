"""Spectral checkerboard metric."""

from __future__ import annotations

import numpy as np

from ..grid import Grid, build_wavevectors

# modes with |k_alpha| >= 3/4 k_Ny in every direction count as ringing
HIGH_BAND_FRACTION = 0.75


def high_band_mask(grid: Grid, fraction: float = HIGH_BAND_FRACTION) -> np.ndarray:
    k = build_wavevectors(grid).k
    k_ny = np.pi / np.asarray(grid.spacing)
    return np.all(np.abs(k) >= fraction * k_ny * (1 - 1e-12), axis=-1)


def ringing_score(values: np.ndarray, grid: Grid, fraction: float = HIGH_BAND_FRACTION) -> float:
    """
    Fraction of the fluctuation spectral energy that sits in the high band.

    ``values`` is a scalar voxel field (Nx, Ny).  The mean is excluded, so
    the score is invariant under adding a constant and under scaling; a
    constant field scores 0.
    """
    values = np.asarray(values, dtype=float)
    if values.shape != grid.nb_pts:
        raise ValueError(f"expected a scalar field of shape {grid.nb_pts}, got {values.shape}")
    power = np.abs(np.fft.fftn(values)) ** 2
    power[0, 0] = 0
    total = power.sum()
    if total <= 1e-30 * max(np.sum(values**2), 1e-300):
        return 0.0
    return float(power[high_band_mask(grid, fraction)].sum() / total)


def voxel_average(values: np.ndarray) -> np.ndarray:
    """Mean over evaluation points of a (Nx, Ny, nq) field; 2-d input passes through."""
    values = np.asarray(values, dtype=float)
    return values if values.ndim == 2 else values.mean(axis=2)


def voxel_ringing_score(values: np.ndarray, grid: Grid, fraction: float = HIGH_BAND_FRACTION) -> float:
    """
    Score of the voxel-averaged field.

    Every evaluation point of the two-point schemes covers half a voxel, so
    the plain mean is the voxel integral.  Scoring a single evaluation point
    instead would count the sub-voxel triangle pattern as ringing.
    """
    return ringing_score(voxel_average(values), grid, fraction)
