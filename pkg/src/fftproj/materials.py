"""
Pointwise constitutive laws (plane strain, isotropic).

All functions are vectorized: tensors carry two trailing axes (D, D) and the
Lame parameters broadcast against the leading axes.  Tangents are returned as
rank-4 arrays K[..., i, a, j, b] = dP_ia / dF_jb.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .grid import DIM

ELASTIC, SOFTENING, FAILED = 0, 1, 2

_EYE = np.eye(DIM)


class NonInvertibleDeformation(ValueError):
    pass


def lame(E, nu):
    """Plane-strain Lame parameters (lambda, mu) from Young's modulus and Poisson ratio."""
    E = np.asarray(E, dtype=float)
    nu = np.asarray(nu, dtype=float)
    lam = E * nu / ((1 + nu) * (1 - 2 * nu))
    mu = E / (2 * (1 + nu))
    return lam, mu


def isotropic_stiffness(lam, mu) -> np.ndarray:
    """C_ijkl = lam d_ij d_kl + mu (d_ik d_jl + d_il d_jk), broadcast over leading axes."""
    lam = np.asarray(lam, dtype=float)[..., None, None, None, None]
    mu = np.asarray(mu, dtype=float)[..., None, None, None, None]
    ii = np.einsum("ij,kl->ijkl", _EYE, _EYE)
    sym = np.einsum("ik,jl->ijkl", _EYE, _EYE) + np.einsum("il,jk->ijkl", _EYE, _EYE)
    return lam * ii + mu * sym


def _trace(a):
    return a[..., 0, 0] + a[..., 1, 1]


def svk_stress(F, lam, mu, check: bool = True):
    """
    Saint Venant-Kirchhoff: S = lam tr(E) 1 + 2 mu E with E = (F^T F - 1)/2, P = F S.

    Returns P and the consistent tangent
    K_iajb = d_ij S_ab + lam F_ia F_jb + mu (F_ib F_ja + (F F^T)_ij d_ab).
    """
    F = np.asarray(F, dtype=float)
    lam = np.asarray(lam, dtype=float)
    mu = np.asarray(mu, dtype=float)
    if check:
        det = np.linalg.det(F)
        stiff = np.broadcast_to((lam != 0) | (mu != 0), det.shape)
        bad = (det <= 0) & stiff
        if np.any(bad):
            idx = tuple(int(i) for i in np.argwhere(bad)[0])
            raise NonInvertibleDeformation(f"det F = {det[idx]:.3e} <= 0 at point {idx}")
    E = 0.5 * (np.einsum("...ki,...kj->...ij", F, F) - _EYE)
    S = lam[..., None, None] * _trace(E)[..., None, None] * _EYE + 2 * mu[..., None, None] * E
    P = np.einsum("...ik,...kj->...ij", F, S)
    FFt = np.einsum("...ik,...jk->...ij", F, F)
    K = (
        np.einsum("ij,...ab->...iajb", _EYE, S)
        + lam[..., None, None, None, None] * np.einsum("...ia,...jb->...iajb", F, F)
        + mu[..., None, None, None, None]
        * (np.einsum("...ib,...ja->...iajb", F, F) + np.einsum("...ij,ab->...iajb", FFt, _EYE))
    )
    return P, K


def finite_strain_stress(F, E, nu):
    """First Piola-Kirchhoff stress and tangent of the SVK law for given (E, nu)."""
    lam, mu = lame(E, nu)
    return svk_stress(F, lam, mu)


def hooke_stress(e, lam, mu):
    """sigma = lam tr(e) 1 + 2 mu e."""
    e = np.asarray(e, dtype=float)
    lam = np.asarray(lam, dtype=float)[..., None, None]
    mu = np.asarray(mu, dtype=float)[..., None, None]
    return lam * _trace(e)[..., None, None] * _EYE + 2 * mu * e


def small_strain_stress(e, E, nu):
    """Linear elastic stress and (constant) stiffness."""
    lam, mu = lame(E, nu)
    return hooke_stress(e, lam, mu), isotropic_stiffness(lam, mu)


@dataclass
class DamageState:
    """History per evaluation point: maximum equivalent strain and damage stage."""

    kappa: np.ndarray
    stage: np.ndarray = field(default=None)

    def __post_init__(self) -> None:
        self.kappa = np.asarray(self.kappa, dtype=float)
        if self.stage is None:
            self.stage = np.full(self.kappa.shape, ELASTIC, dtype=np.int8)

    @classmethod
    def zeros(cls, shape) -> "DamageState":
        return cls(np.zeros(shape))

    def copy(self) -> "DamageState":
        return DamageState(self.kappa.copy(), self.stage.copy())


def secant_factor(kappa, eps_u, alpha):
    """
    Ratio of secant to initial stiffness on the bilinear envelope.

    The envelope rises with slope E0 up to eps_u and then falls with slope
    -alpha E0 until it reaches zero at eps_u (1 + 1/alpha).
    """
    kappa = np.asarray(kappa, dtype=float)
    eps_u = np.asarray(eps_u, dtype=float)
    alpha = np.asarray(alpha, dtype=float)
    if np.any(alpha <= 0):
        raise ValueError("softening slope alpha must be positive")
    eps_f = eps_u * (1 + 1 / alpha)
    with np.errstate(divide="ignore", invalid="ignore"):
        soft = (eps_u - alpha * (kappa - eps_u)) / kappa
    out = np.where(kappa <= eps_u, 1.0, soft)
    return np.where(kappa >= eps_f, 0.0, out)


def damage_stage(kappa, eps_u, alpha):
    eps_f = np.asarray(eps_u) * (1 + 1 / np.asarray(alpha))
    stage = np.where(kappa > eps_u, SOFTENING, ELASTIC)
    return np.where(kappa >= eps_f, FAILED, stage).astype(np.int8)


def damage_stress(e, eigenstrain, state: DamageState, E0, nu, eps_u, alpha):
    """
    Bilinear isotropic damage with secant unloading.

    The equivalent strain is the Frobenius norm of e - eigenstrain.  Returns
    the stress, the secant stiffness and the trial state; the caller commits
    the state once the load step is accepted.  Failed points stay failed.
    """
    e = np.asarray(e, dtype=float)
    e_eff = e - np.asarray(eigenstrain, dtype=float)
    norm = np.sqrt(np.einsum("...ij,...ij->...", e_eff, e_eff))
    kappa = np.maximum(state.kappa, norm)
    factor = secant_factor(kappa, eps_u, alpha)
    stage = np.maximum(damage_stage(kappa, eps_u, alpha), state.stage)
    factor = np.where(stage == FAILED, 0.0, factor)
    lam, mu = lame(E0, nu)
    sigma = factor[..., None, None] * hooke_stress(e_eff, lam, mu)
    C = factor[..., None, None, None, None] * isotropic_stiffness(lam, mu)
    return sigma, C, DamageState(kappa, stage)


@dataclass(frozen=True)
class Phase:
    """
    Material parameters of one phase.

    ``E == 0`` encodes vacuum.  ``eps_u = inf`` disables damage.
    ``eigenstrain`` is the weight of the isotropic eigenstrain ramp applied to
    this phase (1 for expanding gel, 0 otherwise).
    """

    name: str
    E: float
    nu: float = 0.33
    eps_u: float = np.inf
    alpha: float = 1.0
    eigenstrain: float = 0.0

    def __post_init__(self) -> None:
        if self.E < 0:
            raise ValueError(f"phase {self.name!r}: Young's modulus must be >= 0")
        if not -1 < self.nu < 0.5:
            raise ValueError(f"phase {self.name!r}: Poisson ratio {self.nu} out of range")
        if self.alpha <= 0:
            raise ValueError(f"phase {self.name!r}: alpha must be positive")

    @property
    def damages(self) -> bool:
        return np.isfinite(self.eps_u)


@dataclass
class PhaseMap:
    """Voxel-wise phase ids; every evaluation point of a voxel shares its phase."""

    ids: np.ndarray
    phases: list[Phase]

    def __post_init__(self) -> None:
        self.ids = np.asarray(self.ids, dtype=int)
        if self.ids.ndim != 2:
            raise ValueError("phase ids must be a 2D voxel array")
        if self.ids.min() < 0 or self.ids.max() >= len(self.phases):
            raise ValueError(
                f"phase ids span [{self.ids.min()}, {self.ids.max()}] "
                f"but only {len(self.phases)} phases are defined"
            )

    @property
    def shape(self) -> tuple[int, int]:
        return self.ids.shape

    def per_point(self, attr: str, nb_quad: int) -> np.ndarray:
        table = np.array([getattr(p, attr) for p in self.phases], dtype=float)
        return np.repeat(table[self.ids][:, :, None], nb_quad, axis=2)

    def lame_fields(self, nb_quad: int):
        return lame(self.per_point("E", nb_quad), self.per_point("nu", nb_quad))

    def mask(self, name: str) -> np.ndarray:
        idx = [i for i, p in enumerate(self.phases) if p.name == name]
        if not idx:
            raise KeyError(name)
        return np.isin(self.ids, idx)
