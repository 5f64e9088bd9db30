"""
Compatibility projection built from an arbitrary discrete gradient.

For every wavevector k != 0 the finite-strain block is

    g_ab(k) = D_a(k) D_b(k)^* / (D_c(k) D_c(k)^*)

over the combined index a = (q, alpha), q-major.  The full operator acts as
G_{i a b j} = delta_ij g_ab, so rows of the deformation gradient are projected
independently.  The small-strain variant projects sets of symmetric strains
(one per evaluation point) onto symmetrized discrete gradients of a single
displacement field.  Blocks at k = 0 are zero: the mean is prescribed by the
solver, not by the operator.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.fft

from .grid import DIM, Grid, TensorField, dft, idft, real_part
from .stencils import DerivativeScheme

FINITE_STRAIN = "finite_strain"
SMALL_STRAIN = "small_strain"


class InadmissibleSchemeError(ValueError):
    """The derivative scheme is ambiguous on the Nyquist modes of an even grid."""


class SingularBlockError(ArithmeticError):
    pass


@dataclass
class ProjectionOperator:
    """
    Dense per-wavevector blocks of the projection.

    ``blocks`` has shape (Nx, Ny, n, n): n = nq*D for the finite-strain
    operator (acting on each row i of the tensor), n = nq*D*D for the
    small-strain operator (acting on the flattened (q, i, j) strain).
    """

    grid: Grid
    scheme: DerivativeScheme
    formulation: str
    blocks: np.ndarray = field(repr=False)
    symbols: np.ndarray = field(repr=False)
    null_modes: np.ndarray = field(repr=False, default=None)
    h_blocks: np.ndarray | None = field(repr=False, default=None)

    @property
    def nb_quad(self) -> int:
        return self.scheme.nb_quad

    @property
    def field_shape(self) -> tuple[int, ...]:
        return self.grid.tensor_shape(self.nb_quad)

    def inverse_symbols(self) -> np.ndarray:
        """D^{-1} = D^* / (D.D^*) over the combined index, zero where D vanishes."""
        d = self.symbols.reshape(*self.grid.nb_pts, -1)
        denom = np.einsum("xya,xya->xy", d, d.conj()).real
        out = np.zeros_like(d)
        ok = denom > 0
        out[ok] = d[ok].conj() / denom[ok][:, None]
        return out.reshape(self.symbols.shape)

    @cached_property
    def real_preserving(self) -> bool:
        """True if blocks(-k) = conj(blocks(k)), so real fields map to real fields."""
        b = self.blocks
        mirrored = np.roll(np.flip(b, axis=(0, 1)), 1, axis=(0, 1))
        return bool(np.allclose(mirrored, b.conj(), rtol=0, atol=1e-12 * np.abs(b).max()))

    @cached_property
    def _half_blocks(self) -> np.ndarray:
        return np.ascontiguousarray(self.blocks[:, : self.grid.nb_pts[1] // 2 + 1])

    @cached_property
    def _packed_half_blocks(self) -> np.ndarray | None:
        """
        Small-strain half-spectrum blocks on the (xx, xy, yy) components.

        Symmetric input only needs three transforms per point instead of
        four.  None if the operator does not treat xy and yx alike.
        """
        if self.formulation != SMALL_STRAIN:
            return None
        b = self._half_blocks
        nq = self.nb_quad
        rows = np.array([[4 * q, 4 * q + 1, 4 * q + 3] for q in range(nq)]).ravel()
        xy, yx = 4 * np.arange(nq) + 1, 4 * np.arange(nq) + 2
        scale = np.abs(b).max()
        if not (np.allclose(b[..., xy, :], b[..., yx, :], rtol=0, atol=1e-14 * scale)
                and np.allclose(b[..., :, xy], b[..., :, yx], rtol=0, atol=1e-14 * scale)):
            return None
        cols = b[..., :, rows].copy()
        cols[..., :, 1::3] += b[..., :, yx]
        return np.ascontiguousarray(cols[..., rows, :])

    def _apply_packed(self, values: np.ndarray) -> np.ndarray:
        nx, ny = self.grid.nb_pts
        nq = self.nb_quad
        flat = values.reshape(nx, ny, nq, 4)[..., [0, 1, 3]]
        w_hat = np.matmul(
            self._packed_half_blocks,
            scipy.fft.rfftn(flat, axes=(0, 1)).reshape(nx, -1, 3 * nq, 1),
        )
        w = scipy.fft.irfftn(w_hat.reshape(nx, -1, nq, 3), s=(nx, ny), axes=(0, 1))
        return w[..., [0, 1, 1, 2]].reshape(values.shape)

    def _apply_blocks(self, blocks: np.ndarray, values_hat: np.ndarray) -> np.ndarray:
        nx, ny = values_hat.shape[:2]
        nq = self.nb_quad
        if self.formulation == FINITE_STRAIN:
            v = values_hat.transpose(0, 1, 3, 2, 4).reshape(nx, ny, DIM, nq * DIM)
            w = np.einsum("xyab,xyib->xyia", blocks, v)
            return w.reshape(nx, ny, DIM, nq, DIM).transpose(0, 1, 3, 2, 4)
        v = values_hat.reshape(nx, ny, nq * DIM * DIM, 1)
        return np.matmul(blocks, v).reshape(values_hat.shape)

    def apply_hat(self, values_hat: np.ndarray) -> np.ndarray:
        """Apply the blocks to a Fourier-space tensor field."""
        if values_hat.shape != self.field_shape:
            raise ValueError(
                f"field shape {values_hat.shape} does not match operator {self.field_shape}"
            )
        return self._apply_blocks(self.blocks, values_hat)

    def apply(self, values, rtol: float = 1e-10):
        """
        Project a real-space tensor field.

        Accepts an array of shape (Nx, Ny, nq, D, D) or a real-space
        :class:`TensorField`; returns the same kind.  Real input to a
        real-preserving operator goes through half-spectrum transforms.
        """
        if isinstance(values, TensorField):
            if values.fourier:
                return TensorField(self.grid, self.apply_hat(values.values), fourier=True)
            return TensorField(self.grid, self.apply(values.values, rtol))
        values = np.asarray(values)
        if np.iscomplexobj(values):
            return idft(self.grid, self.apply_hat(dft(self.grid, values)))
        if values.shape != self.field_shape:
            raise ValueError(
                f"field shape {values.shape} does not match operator {self.field_shape}"
            )
        if self.real_preserving:
            if (self._packed_half_blocks is not None
                    and np.array_equal(values[..., 0, 1], values[..., 1, 0])):
                return self._apply_packed(values)
            w = self._apply_blocks(self._half_blocks, scipy.fft.rfftn(values, axes=(0, 1)))
            return scipy.fft.irfftn(w, s=self.grid.nb_pts, axes=(0, 1))
        out = idft(self.grid, self.apply_hat(dft(self.grid, values)))
        return real_part(out, rtol, scale=np.linalg.norm(values))

    __call__ = apply

    def complement(self) -> "ProjectionOperator":
        return divergence_projection(self)


def _check_admissible(grid: Grid, scheme: DerivativeScheme) -> None:
    if any(grid.is_even) and not scheme.even_grid_safe(grid):
        raise InadmissibleSchemeError(
            f"scheme {scheme.name!r} is not even-grid-safe; grid {grid.nb_pts} "
            "samples the Nyquist frequency (use an odd grid or a local stencil)"
        )


def _as_scheme(scheme) -> DerivativeScheme:
    return scheme if isinstance(scheme, DerivativeScheme) else DerivativeScheme(scheme)


def _null_mask(denom: np.ndarray, strict: bool, scheme, grid) -> np.ndarray:
    """Nonzero wavevectors at which the gradient symbol vanishes identically."""
    scale = denom.max()
    null = denom <= 1e-24 * scale
    null[0, 0] = False
    if strict and null.any():
        idx = tuple(np.argwhere(null)[0])
        raise ZeroDivisionError(
            f"derivative symbol of {scheme.name!r} vanishes at k-index {idx} on grid {grid.nb_pts}"
        )
    return null


def build_projection(
    grid: Grid,
    scheme,
    *,
    strict: bool = False,
    allow_unsafe: bool = False,
    symbols: np.ndarray | None = None,
) -> ProjectionOperator:
    """
    Finite-strain projection blocks g(k) = D D^dagger / (D^dagger D).

    Nonzero wavevectors where the symbol vanishes (for instance the
    hourglass mode of the least-squares stencil on even grids) get a zero
    block unless ``strict`` is set, in which case they raise.  ``symbols``
    (Nx, Ny, nq, D) replaces the scheme's own table.
    """
    scheme = _as_scheme(scheme)
    if not allow_unsafe:
        _check_admissible(grid, scheme)
    sym = scheme.symbols(grid) if symbols is None else np.asarray(symbols, dtype=complex)
    if sym.shape != (*grid.nb_pts, scheme.nb_quad, DIM):
        raise ValueError(f"symbol table of shape {sym.shape} does not fit {scheme.name!r} on {grid.nb_pts}")
    d = sym.reshape(*grid.nb_pts, -1)
    denom = np.einsum("xya,xya->xy", d, d.conj()).real
    null = _null_mask(denom, strict, scheme, grid)
    ok = denom > 0
    ok &= ~null
    blocks = np.zeros((*grid.nb_pts, d.shape[-1], d.shape[-1]), dtype=complex)
    blocks[ok] = np.einsum("na,nb->nab", d[ok], d[ok].conj()) / denom[ok][:, None, None]
    return ProjectionOperator(
        grid.with_quad(scheme.nb_quad), scheme, FINITE_STRAIN, blocks, sym, np.argwhere(null)
    )


def _sym_identity(nq: int) -> np.ndarray:
    eye = np.eye(DIM)
    ident = 0.5 * (np.einsum("il,jm->ijlm", eye, eye) + np.einsum("im,jl->ijlm", eye, eye))
    out = np.zeros((nq, DIM, DIM, nq, DIM, DIM))
    for q in range(nq):
        out[q, :, :, q] = ident
    return out.reshape(nq * DIM * DIM, nq * DIM * DIM)


def build_small_strain_projection(
    grid: Grid,
    scheme,
    *,
    strict: bool = False,
    allow_unsafe: bool = False,
) -> ProjectionOperator:
    """
    Projection of per-element symmetric strains onto symmetrized gradients.

    With D_T the gradient symbol of element T, S = sum_T D_T.D_T^*,
    D_T^{-1} = D_T^*/S, g_TL = D_T (x) D_L^{-1} and h = (1 + sum_T g_TT)^{-1}:

        G_{TL,ijlm} = 1/2 (g_TL,il h_jm + g_TL,im h_jl + g_TL,jl h_im + g_TL,jm h_il)
    """
    scheme = _as_scheme(scheme)
    if not allow_unsafe:
        _check_admissible(grid, scheme)
    nq = scheme.nb_quad
    sym = scheme.symbols(grid)  # (x, y, T, i)
    denom = np.einsum("xyti,xyti->xy", sym, sym.conj()).real
    null = _null_mask(denom, strict, scheme, grid)
    ok = (denom > 0) & ~null

    dk = sym[ok]  # (n, T, i)
    dinv = dk.conj() / denom[ok][:, None, None]
    g = np.einsum("nti,nlj->ntlij", dk, dinv)  # g[T, L, i, l]
    m = np.eye(DIM) + np.einsum("nttij->nij", g)
    det = np.linalg.det(m)
    if np.any(np.abs(det) < 1e-14):
        bad = np.argwhere(ok)[np.argmin(np.abs(det))]
        raise SingularBlockError(
            f"1 + sum g is singular at k-index {tuple(bad)} for scheme {scheme.name!r}"
        )
    h = np.linalg.inv(m)
    G = 0.5 * (
        np.einsum("ntuil,njm->ntijulm", g, h)
        + np.einsum("ntuim,njl->ntijulm", g, h)
        + np.einsum("ntujl,nim->ntijulm", g, h)
        + np.einsum("ntujm,nil->ntijulm", g, h)
    )
    n = nq * DIM * DIM
    blocks = np.zeros((*grid.nb_pts, n, n), dtype=complex)
    blocks[ok] = G.reshape(-1, n, n)
    h_blocks = np.zeros((*grid.nb_pts, DIM, DIM), dtype=complex)
    h_blocks[ok] = h
    return ProjectionOperator(
        grid.with_quad(nq), scheme, SMALL_STRAIN, blocks, sym, np.argwhere(null), h_blocks
    )


def divergence_projection(op: ProjectionOperator) -> ProjectionOperator:
    """Complement 1 - g at k != 0; zero at k = 0, so it acts on fluctuations only."""
    n = op.blocks.shape[-1]
    if op.formulation == FINITE_STRAIN:
        ident = np.eye(n)
    else:
        ident = _sym_identity(op.nb_quad)
    blocks = ident - op.blocks
    blocks[0, 0] = 0
    return ProjectionOperator(
        op.grid, op.scheme, op.formulation, blocks, op.symbols, op.null_modes, op.h_blocks
    )


def reconstruct_displacement(op: ProjectionOperator, values: np.ndarray):
    """
    Least-squares potential of a tensor field.

    Returns ``(fluctuation, mean_gradient)``: the zero-mean nodal field u with
    u_hat_i(k) = D^{-1}(k) . v_hat_i(k), and the average of ``values`` over
    voxels and evaluation points.
    """
    values = np.asarray(values)
    nx, ny = op.grid.nb_pts
    v_hat = dft(op.grid, values)
    if op.formulation == FINITE_STRAIN:
        dinv = op.inverse_symbols().reshape(nx, ny, -1)
        v = v_hat.transpose(0, 1, 3, 2, 4).reshape(nx, ny, DIM, -1)
        u_hat = np.einsum("xya,xyia->xyi", dinv, v)
    else:
        sym = op.symbols
        denom = np.einsum("xyti,xyti->xy", sym, sym.conj()).real
        dinv = np.zeros_like(sym)
        pos = denom > 0
        dinv[pos] = sym[pos].conj() / denom[pos][:, None, None]
        rhs = np.einsum("xytl,xytlm->xym", dinv, v_hat) + np.einsum("xytlm,xytm->xyl", v_hat, dinv)
        u_hat = np.einsum("xyim,xym->xyi", op.h_blocks, rhs)
    u_hat[0, 0] = 0
    if op.null_modes is not None:
        for i, j in op.null_modes:
            u_hat[i, j] = 0
    u = idft(op.grid, u_hat)
    if not np.iscomplexobj(values):
        u = real_part(u)
    mean = values.mean(axis=(0, 1, 2))
    return u, mean


def gradient_of(op: ProjectionOperator, nodal: np.ndarray) -> np.ndarray:
    """Discrete gradient (finite strain) or symmetrized gradient (small strain) via symbols."""
    nodal = np.asarray(nodal)
    u_hat = dft(op.grid, nodal)
    grad_hat = np.einsum("xyqa,xyi->xyqia", op.symbols, u_hat)
    if op.formulation == SMALL_STRAIN:
        grad_hat = 0.5 * (grad_hat + grad_hat.transpose(0, 1, 2, 4, 3))
    out = idft(op.grid, grad_hat)
    return out if np.iscomplexobj(nodal) else real_part(out)
