"""
Periodic 2D grid geometry, wavevectors and the discrete Fourier transform pair.

Fields live on the grid as plain numpy arrays whose two leading axes are the
voxel indices (I, J).  Tensor fields carry the shape ``(Nx, Ny, nq, D, D)``,
vector fields ``(Nx, Ny, D)``.  The forward transform is unnormalized and the
inverse carries the factor 1/N, which keeps derivative symbols literal.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.fft

DIM = 2


@dataclass(frozen=True)
class Grid:
    """
    Periodic rectangular grid.

    Parameters
    ----------
    nb_pts : tuple of int
        Number of voxels (Nx, Ny), each at least 2.
    lengths : tuple of float
        Cell edge lengths (Lx, Ly).
    nb_quad : int
        Evaluation points per voxel carried by fields on this grid.
    """

    nb_pts: tuple[int, int]
    lengths: tuple[float, float] = (1.0, 1.0)
    nb_quad: int = 1

    def __post_init__(self) -> None:
        nb_pts = tuple(int(n) for n in self.nb_pts)
        lengths = tuple(float(length) for length in self.lengths)
        if len(nb_pts) != DIM or len(lengths) != DIM:
            raise ValueError("only two-dimensional grids are supported")
        if min(nb_pts) < 2:
            raise ValueError(f"need at least 2 voxels per direction, got {nb_pts}")
        if min(lengths) <= 0:
            raise ValueError(f"cell lengths must be positive, got {lengths}")
        if self.nb_quad < 1:
            raise ValueError("nb_quad must be >= 1")
        object.__setattr__(self, "nb_pts", nb_pts)
        object.__setattr__(self, "lengths", lengths)

    @property
    def spacing(self) -> tuple[float, float]:
        return tuple(length / n for length, n in zip(self.lengths, self.nb_pts))

    @property
    def nb_voxels(self) -> int:
        return self.nb_pts[0] * self.nb_pts[1]

    @property
    def is_even(self) -> tuple[bool, bool]:
        return tuple(n % 2 == 0 for n in self.nb_pts)

    def with_quad(self, nb_quad: int) -> "Grid":
        return Grid(self.nb_pts, self.lengths, nb_quad)

    def positions(self) -> np.ndarray:
        """Lower-left voxel corners, shape (Nx, Ny, 2)."""
        axes = [np.arange(n) * d for n, d in zip(self.nb_pts, self.spacing)]
        return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)

    def centers(self) -> np.ndarray:
        """Voxel centers, shape (Nx, Ny, 2)."""
        return self.positions() + 0.5 * np.asarray(self.spacing)

    def tensor_shape(self, nb_quad: int | None = None) -> tuple[int, ...]:
        nq = self.nb_quad if nb_quad is None else nb_quad
        return (*self.nb_pts, nq, DIM, DIM)


@dataclass(frozen=True)
class WavevectorTable:
    """Integer mode numbers and wavevectors in FFT storage order."""

    grid: Grid
    modes: np.ndarray = field(repr=False)
    k: np.ndarray = field(repr=False)

    @property
    def nyquist(self) -> tuple[float | None, float | None]:
        """Nyquist wavenumber per direction (negative branch), None for odd N."""
        return tuple(
            -np.pi / d if n % 2 == 0 else None
            for n, d in zip(self.grid.nb_pts, self.grid.spacing)
        )

    def nyquist_mask(self) -> np.ndarray:
        """True where any component sits on the Nyquist frequency."""
        mask = np.zeros(self.grid.nb_pts, dtype=bool)
        for axis, n in enumerate(self.grid.nb_pts):
            if n % 2 == 0:
                mask |= self.modes[..., axis] == -n // 2
        return mask


def mode_numbers(n: int) -> np.ndarray:
    """Mode numbers m in FFT order: {-n/2..n/2-1} for even n, {-(n-1)/2..(n-1)/2} for odd n."""
    return np.rint(np.fft.fftfreq(n) * n).astype(int)


def build_wavevectors(grid: Grid) -> WavevectorTable:
    """k_i = 2 pi m_i / L_i for every grid index, so that k_i Delta_i lies in [-pi, pi)."""
    m = [mode_numbers(n) for n in grid.nb_pts]
    modes = np.stack(np.meshgrid(*m, indexing="ij"), axis=-1)
    k = 2 * np.pi * modes / np.asarray(grid.lengths)
    return WavevectorTable(grid, modes, k)


def _check_shape(grid: Grid, values: np.ndarray) -> None:
    if values.shape[:2] != grid.nb_pts:
        raise ValueError(
            f"field with leading shape {values.shape[:2]} does not match grid {grid.nb_pts}"
        )


def dft(grid: Grid, values: np.ndarray) -> np.ndarray:
    """Unnormalized forward transform sum_r f(r) exp(-i k.r) over the two grid axes."""
    _check_shape(grid, values)
    return scipy.fft.fftn(values, axes=(0, 1))


def idft(grid: Grid, values: np.ndarray) -> np.ndarray:
    """Inverse transform (1/N) sum_k f(k) exp(i k.r); returns a complex array."""
    _check_shape(grid, values)
    return scipy.fft.ifftn(values, axes=(0, 1))


@dataclass
class TensorField:
    """
    Field values on a grid tagged with the space they live in.

    ``values`` has the grid axes first.  Use :meth:`to_fourier` and
    :meth:`to_real` to move between spaces; transforming a field that is
    already in the requested space is an error.
    """

    grid: Grid
    values: np.ndarray
    fourier: bool = False

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values)
        _check_shape(self.grid, self.values)

    @property
    def nb_quad(self) -> int | None:
        return self.values.shape[2] if self.values.ndim == 5 else None

    def to_fourier(self) -> "TensorField":
        if self.fourier:
            raise ValueError("field is already in Fourier space")
        return TensorField(self.grid, dft(self.grid, self.values), fourier=True)

    def to_real(self, check_real: bool = True) -> "TensorField":
        if not self.fourier:
            raise ValueError("field is already in real space")
        values = idft(self.grid, self.values)
        if check_real:
            values = real_part(values)
        return TensorField(self.grid, values, fourier=False)


def real_part(values: np.ndarray, rtol: float = 1e-10, scale: float | None = None) -> np.ndarray:
    """Drop the imaginary part, raising if it exceeds ``rtol * scale`` (default |values|)."""
    if scale is None:
        scale = np.linalg.norm(values)
    residue = np.linalg.norm(values.imag)
    if residue > rtol * max(scale, np.finfo(float).tiny):
        raise FloatingPointError(
            f"imaginary residue {residue:.3e} exceeds {rtol:g} x |field| = {rtol * scale:.3e}"
        )
    return np.ascontiguousarray(values.real)
