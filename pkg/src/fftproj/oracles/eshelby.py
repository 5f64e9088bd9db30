"""
Plane-strain circular inhomogeneity in an infinite matrix.

Closed-form solution via Kolosov-Muskhelishvili potentials.  With z = x + iy
and the inclusion radius a, the matrix carries

    phi(z) = Gamma z + c / z,    psi(z) = Gamma2 z + d / z + e / z**3

and the inclusion phi = A z, psi = B z (uniform strain).  Gamma and Gamma2
encode the remote stress; the interface conditions on |z| = a fix A, B, c, d,
e.  Periodic boundary conditions are approximated by superposing the
fluctuation fields of non-interacting images.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..grid import DIM, Grid
from ..materials import hooke_stress, lame


@dataclass(frozen=True)
class EshelbyProblem:
    """
    Circular inhomogeneity of radius ``a`` under remote strain ``strain``.

    ``axes`` holds the half axes (a, b); only a == b is supported.
    """

    axes: tuple[float, float]
    E_matrix: float
    nu_matrix: float
    E_inclusion: float
    nu_inclusion: float
    strain: np.ndarray = field(default_factory=lambda: 0.01 * np.eye(DIM))
    images: int = 5

    def __post_init__(self) -> None:
        a, b = self.axes
        if a <= 0 or b <= 0:
            raise ValueError("half axes must be positive")
        if not np.isclose(a, b, rtol=1e-12):
            raise NotImplementedError("only circular inhomogeneities (a == b) are implemented")
        strain = np.asarray(self.strain, dtype=float).reshape(DIM, DIM)
        if not np.allclose(strain, strain.T):
            raise ValueError("remote strain must be symmetric")
        object.__setattr__(self, "strain", strain)

    @property
    def radius(self) -> float:
        return self.axes[0]

    def coefficients(self) -> dict:
        lam1, mu1 = lame(self.E_matrix, self.nu_matrix)
        lam2, mu2 = lame(self.E_inclusion, self.nu_inclusion)
        kappa1 = 3 - 4 * self.nu_matrix
        kappa2 = 3 - 4 * self.nu_inclusion
        a2 = self.radius**2
        s = hooke_stress(self.strain, lam1, mu1)
        gamma = (s[0, 0] + s[1, 1]) / 4
        gamma2 = (s[1, 1] - s[0, 0]) / 2 + 1j * s[0, 1]
        A = (kappa1 + 1) * gamma * mu2 / (2 * mu2 + mu1 * (kappa2 - 1))
        B = gamma2 * mu2 * (kappa1 + 1) / (kappa1 * mu2 + mu1)
        c = np.conj(gamma2) * a2 * (mu2 - mu1) / (kappa1 * mu2 + mu1)
        return dict(
            gamma=gamma, gamma2=gamma2, A=A, B=B, c=c, d=2 * a2 * (A - gamma), e=a2 * c,
            lam1=float(lam1), mu1=float(mu1), lam2=float(lam2), mu2=float(mu2),
            kappa1=kappa1, kappa2=kappa2,
        )

    def interior_strain(self) -> np.ndarray:
        co = self.coefficients()
        s_sum, s_dev = 4 * co["A"], 2 * co["B"]
        return _strain_from_invariants(s_sum, s_dev, co["lam2"], co["mu2"])


def _strain_from_invariants(s_sum, s_dev, lam, mu):
    """Plane-strain strain from sxx + syy and syy - sxx + 2i sxy."""
    s_sum = np.real(s_sum)
    sxx = (s_sum - np.real(s_dev)) / 2
    syy = (s_sum + np.real(s_dev)) / 2
    sxy = np.imag(s_dev) / 2
    tr = s_sum / (2 * (lam + mu))
    exx = (sxx - lam * tr) / (2 * mu)
    eyy = (syy - lam * tr) / (2 * mu)
    exy = sxy / (2 * mu)
    exx, eyy, exy = np.broadcast_arrays(exx, eyy, exy)
    return np.stack([np.stack([exx, exy], -1), np.stack([exy, eyy], -1)], -2)


def _inside(prob: EshelbyProblem, x: np.ndarray) -> np.ndarray:
    # boundary points go to the exterior branch
    return np.einsum("...i,...i->...", x, x) < prob.radius**2


def eshelby_field(prob: EshelbyProblem, x) -> np.ndarray:
    """Strain tensor at positions ``x`` (..., 2) measured from the inclusion center."""
    x = np.asarray(x, dtype=float)
    co = prob.coefficients()
    z = x[..., 0] + 1j * x[..., 1]
    inside = _inside(prob, x)
    zo = np.where(inside, 1.0, z)
    s_sum = 4 * np.real(co["gamma"] - co["c"] / zo**2)
    s_dev = 2 * (
        np.conj(zo) * 2 * co["c"] / zo**3 + co["gamma2"] - co["d"] / zo**2 - 3 * co["e"] / zo**4
    )
    outer = _strain_from_invariants(s_sum, s_dev, co["lam1"], co["mu1"])
    inner = prob.interior_strain()
    return np.where(inside[..., None, None], inner, outer)


def eshelby_displacement(prob: EshelbyProblem, x) -> np.ndarray:
    """Displacement (..., 2), continuous across the interface; used to validate the strains."""
    x = np.asarray(x, dtype=float)
    co = prob.coefficients()
    z = x[..., 0] + 1j * x[..., 1]
    inside = _inside(prob, x)
    zo = np.where(inside, 1.0, z)
    phi = co["gamma"] * zo + co["c"] / zo
    dphi = co["gamma"] - co["c"] / zo**2
    psi = co["gamma2"] * zo + co["d"] / zo + co["e"] / zo**3
    u_out = (co["kappa1"] * phi - zo * np.conj(dphi) - np.conj(psi)) / (2 * co["mu1"])
    u_in = (
        co["kappa2"] * co["A"] * z - z * np.conj(co["A"]) - np.conj(co["B"] * z)
    ) / (2 * co["mu2"])
    u = np.where(inside, u_in, u_out)
    return np.stack([u.real, u.imag], axis=-1)


@dataclass
class PeriodicEshelby:
    strain: np.ndarray  # (Nx, Ny, 2, 2) at voxel centers
    inclusion: np.ndarray  # voxel mask
    load_strain: np.ndarray  # cell average of the corrected field
    inclusion_mean: np.ndarray  # average over the central inclusion voxels


def eshelby_periodic(prob: EshelbyProblem, grid: Grid, images: int | None = None) -> PeriodicEshelby:
    """
    Image-corrected analytic field sampled at voxel centers.

    The inclusion sits at the center of the center voxel; fluctuations of
    (2M + 1)^2 copies on the periodic lattice are added to the remote strain.
    """
    m = prob.images if images is None else images
    lengths = np.asarray(grid.lengths)
    centers = grid.centers()
    origin = centers[grid.nb_pts[0] // 2, grid.nb_pts[1] // 2]
    rel = centers - origin
    total = np.broadcast_to(prob.strain, (*grid.nb_pts, DIM, DIM)).copy()
    for i in range(-m, m + 1):
        for j in range(-m, m + 1):
            shift = np.array([i, j]) * lengths
            total += eshelby_field(prob, rel - shift) - prob.strain
    mask = _inside(prob, rel)
    return PeriodicEshelby(
        strain=total,
        inclusion=mask,
        load_strain=total.mean(axis=(0, 1)),
        inclusion_mean=total[mask].mean(axis=0),
    )
