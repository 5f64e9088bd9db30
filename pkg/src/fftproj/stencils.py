"""
Real-space derivative stencils and their Fourier symbols.

A stencil maps nodal values chi (stored at voxel corners) to the derivative in
direction alpha assigned to evaluation point q of voxel (I, J):

    D_alpha chi(I, J) = 1/Delta_alpha * sum_{ij} s_ij chi(I + i, J + j)

Its Fourier symbol is D(k) = 1/Delta_alpha * sum_{ij} s_ij exp(i k.r_ij).
Symbol tables have shape (Nx, Ny, nq, D) in FFT storage order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import DIM, Grid, build_wavevectors

SCHEMES = (
    "fourier",
    "central",
    "forward",
    "least_squares",
    "fe_linear",
    "fourier_two_point",
)


@dataclass(frozen=True)
class Stencil:
    direction: int
    eval_point: int
    taps: tuple[tuple[tuple[int, int], float], ...]

    def __post_init__(self) -> None:
        total = sum(c for _, c in self.taps)
        if abs(total) > 1e-14:
            raise ValueError(f"stencil coefficients must sum to zero, got {total}")
        for (i, j), _ in self.taps:
            if abs(i) > 1 or abs(j) > 1:
                raise ValueError(f"tap offset {(i, j)} outside the 3x3 neighbourhood")

    def as_dict(self) -> dict[tuple[int, int], float]:
        return {offset: c for offset, c in self.taps}

    def symbol(self, k: np.ndarray, spacing) -> np.ndarray:
        """Evaluate the symbol at wavevectors ``k`` of shape (..., 2)."""
        dx, dy = spacing
        out = np.zeros(k.shape[:-1], dtype=complex)
        for (i, j), c in self.taps:
            out += c * np.exp(1j * (k[..., 0] * i * dx + k[..., 1] * j * dy))
        return out / spacing[self.direction]

    def apply(self, nodal: np.ndarray, spacing) -> np.ndarray:
        """Apply to a periodic nodal field whose first two axes are the grid axes."""
        out = np.zeros_like(nodal, dtype=np.result_type(nodal, float))
        for (i, j), c in self.taps:
            out += c * np.roll(nodal, shift=(-i, -j), axis=(0, 1))
        return out / spacing[self.direction]


def _stencil(direction, q, taps: dict) -> Stencil:
    return Stencil(direction, q, tuple(sorted(taps.items())))


# offsets are (i, j) node shifts relative to the lower-left corner of the voxel
_TAP_TABLES: dict[str, list[list[dict]]] = {
    # [q][alpha] -> {offset: coefficient}
    "central": [[
        {(-1, 0): -0.5, (1, 0): 0.5},
        {(0, -1): -0.5, (0, 1): 0.5},
    ]],
    "forward": [[
        {(0, 0): -1.0, (1, 0): 1.0},
        {(0, 0): -1.0, (0, 1): 1.0},
    ]],
    "least_squares": [[
        {(0, 0): -0.5, (1, 0): 0.5, (0, 1): -0.5, (1, 1): 0.5},
        {(0, 0): -0.5, (0, 1): 0.5, (1, 0): -0.5, (1, 1): 0.5},
    ]],
    # element 1: lower triangle (00, 10, 01); element 2: upper triangle (10, 01, 11)
    "fe_linear": [
        [
            {(0, 0): -1.0, (1, 0): 1.0},
            {(0, 0): -1.0, (0, 1): 1.0},
        ],
        [
            {(0, 1): -1.0, (1, 1): 1.0},
            {(1, 0): -1.0, (1, 1): 1.0},
        ],
    ],
}

_NB_QUAD = {
    "fourier": 1,
    "central": 1,
    "forward": 1,
    "least_squares": 1,
    "fe_linear": 2,
    "fourier_two_point": 2,
}


@dataclass(frozen=True)
class DerivativeScheme:
    """A discrete gradient: one derivative per (evaluation point, direction)."""

    name: str

    def __post_init__(self) -> None:
        if self.name not in SCHEMES:
            raise ValueError(f"unknown scheme {self.name!r}; choose from {SCHEMES}")

    @property
    def nb_quad(self) -> int:
        return _NB_QUAD[self.name]

    @property
    def has_stencil(self) -> bool:
        return self.name in _TAP_TABLES

    def stencils(self) -> list[Stencil]:
        return stencil_table(self)

    def symbols(self, grid: Grid) -> np.ndarray:
        """Dense table D_{q,alpha}(k), shape (Nx, Ny, nq, D)."""
        k = build_wavevectors(grid).k
        return self.symbols_at(k, grid.spacing)

    def symbols_at(self, k: np.ndarray, spacing) -> np.ndarray:
        """Symbols at arbitrary wavevectors ``k`` of shape (..., 2)."""
        k = np.asarray(k, dtype=float)
        out = np.empty(k.shape[:-1] + (self.nb_quad, DIM), dtype=complex)
        if self.has_stencil:
            for st in stencil_table(self):
                out[..., st.eval_point, st.direction] = st.symbol(k, spacing)
        elif self.name == "fourier":
            out[..., 0, :] = 1j * k
        else:
            # gradient at the centroids of the two triangles, shifted by -/+ Delta/6
            phase = (k[..., 0] * spacing[0] + k[..., 1] * spacing[1]) / 6
            out[..., 0, :] = 1j * k * np.exp(-1j * phase)[..., None]
            out[..., 1, :] = 1j * k * np.exp(1j * phase)[..., None]
        return out

    def even_grid_safe(self, grid: Grid) -> bool:
        """
        Whether the projection is unambiguous on the Nyquist modes of ``grid``.

        For every even direction the symbol must not vanish at the pure
        Nyquist mode, and it must take the same value at +k_Ny and -k_Ny for
        every transverse wavevector on the grid.
        """
        wv = build_wavevectors(grid)
        for axis, nyq in enumerate(wv.nyquist):
            if nyq is None:
                continue
            other = 1 - axis
            k_other = np.unique(wv.k[..., other])
            k_minus = np.zeros((len(k_other), DIM))
            k_minus[:, axis] = nyq
            k_minus[:, other] = k_other
            k_plus = k_minus.copy()
            k_plus[:, axis] = -nyq
            d_minus = self.symbols_at(k_minus, grid.spacing)
            d_plus = self.symbols_at(k_plus, grid.spacing)
            scale = np.abs(d_minus).max()
            if not np.allclose(d_minus, d_plus, rtol=0, atol=1e-12 * scale):
                return False
            pure = np.zeros(DIM)
            pure[axis] = nyq
            d_pure = self.symbols_at(pure, grid.spacing)
            if np.vdot(d_pure, d_pure).real <= 1e-24 * scale**2:
                return False
        return True


def stencil_table(scheme: DerivativeScheme | str) -> list[Stencil]:
    """Tap sets of a finite-stencil scheme; symbol-only schemes raise."""
    if isinstance(scheme, str):
        scheme = DerivativeScheme(scheme)
    if not scheme.has_stencil:
        raise ValueError(f"scheme {scheme.name!r} is symbol-only and has no finite tap set")
    return [
        _stencil(alpha, q, taps)
        for q, per_q in enumerate(_TAP_TABLES[scheme.name])
        for alpha, taps in enumerate(per_q)
    ]


def symbol(scheme: DerivativeScheme | str, direction: int, eval_point: int, k, grid: Grid) -> complex:
    """Single symbol value D_{q,alpha}(k)."""
    if isinstance(scheme, str):
        scheme = DerivativeScheme(scheme)
    if not 0 <= eval_point < scheme.nb_quad:
        raise IndexError(f"eval_point {eval_point} out of range for {scheme.name!r}")
    if direction not in (0, 1):
        raise IndexError(f"direction must be 0 or 1, got {direction}")
    values = scheme.symbols_at(np.asarray(k, dtype=float), grid.spacing)
    return complex(values[eval_point, direction])


def stencil_gradient(scheme: DerivativeScheme | str, nodal: np.ndarray, grid: Grid) -> np.ndarray:
    """
    Real-space discrete gradient of a nodal vector field.

    ``nodal`` has shape (Nx, Ny, D) (rows i of the gradient); the result has
    shape (Nx, Ny, nq, D, D) with entry [..., q, i, alpha].
    """
    if isinstance(scheme, str):
        scheme = DerivativeScheme(scheme)
    out = np.zeros((*grid.nb_pts, scheme.nb_quad, DIM, DIM))
    for st in stencil_table(scheme):
        out[..., st.eval_point, :, st.direction] = st.apply(nodal, grid.spacing)
    return out


def spectral_gradient(scheme: DerivativeScheme | str, nodal: np.ndarray, grid: Grid) -> np.ndarray:
    """Gradient through the symbol table; works for symbol-only schemes too (complex result)."""
    if isinstance(scheme, str):
        scheme = DerivativeScheme(scheme)
    sym = scheme.symbols(grid)
    nodal_hat = np.fft.fftn(nodal, axes=(0, 1))
    grad_hat = np.einsum("xyqa,xyi->xyqia", sym, nodal_hat)
    return np.fft.ifftn(grad_hat, axes=(0, 1))


def least_squares_gradient(corners: np.ndarray, grid: Grid) -> np.ndarray:
    """
    Uniform gradient that best matches four deformed voxel corners.

    ``corners[k, l]`` is the placement of corner r_kl, k, l in {0, 1}.
    """
    c = np.asarray(corners, dtype=float)
    dx, dy = grid.spacing
    col_x = (c[1, 0] - c[0, 0] + c[1, 1] - c[0, 1]) / (2 * dx)
    col_y = (c[0, 1] - c[0, 0] + c[1, 1] - c[1, 0]) / (2 * dy)
    return np.stack([col_x, col_y], axis=-1)
