"""
Projected equilibrium solver.

The unknown is the strain measure itself (deformation gradient or small
strain) with a prescribed mean.  Equilibrium is G * P(F) = 0; Newton steps
solve G * K : dF = -G * P(F) with conjugate gradients.  Both the right-hand
side and every Krylov vector lie in the image of G, so iterates remain
compatible and the mean is never touched.  No reference medium is involved.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .grid import DIM, Grid
from .materials import (
    DamageState,
    ELASTIC,
    FAILED,
    PhaseMap,
    hooke_stress,
    secant_factor,
    damage_stage,
    svk_stress,
)
from .projection import (
    FINITE_STRAIN,
    SMALL_STRAIN,
    ProjectionOperator,
    build_projection,
    build_small_strain_projection,
)
from .stencils import DerivativeScheme

log = logging.getLogger(__name__)


class ConvergenceError(RuntimeError):
    """Raised when CG or Newton fails; ``result`` holds the last state."""

    def __init__(self, message, result=None, step=None):
        super().__init__(message)
        self.result = result
        self.step = step


@dataclass
class SolverConfig:
    cg_tol: float = 1e-10
    cg_max_iter: int = 10000
    newton_tol: float = 1e-8
    newton_max_iter: int = 50
    line_search: bool = False
    # "explicit": each step is solved with the secant stiffness of the last
    # committed damage state, then the state is updated from the converged
    # strain.  "implicit": damage is updated inside the iteration; cheaper
    # per step but stalls on snap-back.
    damage_update: str = "explicit"

    def __post_init__(self) -> None:
        if self.damage_update not in ("explicit", "implicit"):
            raise ValueError(f"unknown damage_update {self.damage_update!r}")
        for name in ("cg_tol", "newton_tol"):
            value = getattr(self, name)
            if not 0 < value < 1:
                raise ValueError(f"{name} must lie in (0, 1), got {value}")


@dataclass
class LoadCase:
    """Prescribed mean strain measure and, for damage runs, the eigenstrain ramp."""

    mean: np.ndarray
    n_steps: int = 1
    eigenstrain_amplitude: float = 0.0
    formulation: str = FINITE_STRAIN

    def __post_init__(self) -> None:
        self.mean = np.asarray(self.mean, dtype=float).reshape(DIM, DIM)
        if self.formulation == SMALL_STRAIN and not np.allclose(self.mean, self.mean.T):
            raise ValueError("small-strain mean strain must be symmetric")

    @classmethod
    def finite_strain(cls, strain) -> "LoadCase":
        """Mean deformation gradient 1 + strain."""
        return cls(np.eye(DIM) + np.asarray(strain, dtype=float), formulation=FINITE_STRAIN)

    @classmethod
    def small_strain(cls, strain, n_steps=1, eigenstrain_amplitude=0.0) -> "LoadCase":
        return cls(strain, n_steps, eigenstrain_amplitude, SMALL_STRAIN)


@dataclass
class SolveResult:
    converged: bool
    newton_iterations: int
    cg_iterations: list[int]
    strain: np.ndarray = field(repr=False)
    stress: np.ndarray = field(repr=False)
    residuals: list[float]
    step: int | None = None
    load_factor: float | None = None
    damage: np.ndarray | None = field(default=None, repr=False)
    damage_fraction: np.ndarray | None = field(default=None, repr=False)
    failed_fraction: np.ndarray | None = field(default=None, repr=False)
    message: str = ""


@dataclass
class CGResult:
    x: np.ndarray
    iterations: int
    residuals: list[float]
    converged: bool


def _dot(a, b) -> float:
    return float(np.vdot(a, b).real)


def conjugate_gradients(
    apply_a: Callable[[np.ndarray], np.ndarray],
    b: np.ndarray,
    tol: float,
    max_iter: int,
    callback: Callable[[np.ndarray, np.ndarray], None] | None = None,
    atol: float = 0.0,
) -> CGResult:
    """
    Plain CG from x0 = 0 until |r| <= max(tol |b|, atol).

    ``callback(x, p)`` sees every iterate and search direction.
    """
    x = np.zeros_like(b)
    r = b.copy()
    p = r.copy()
    rr = _dot(r, r)
    bnorm = np.sqrt(rr)
    history = [bnorm]
    target = max(tol * bnorm, atol)
    if bnorm <= target:
        return CGResult(x, 0, history, True)
    for it in range(1, max_iter + 1):
        ap = apply_a(p)
        pap = _dot(p, ap)
        if pap <= 0:
            # search direction in the (semi-definite) kernel: nothing left to gain
            return CGResult(x, it - 1, history, np.sqrt(rr) <= target)
        step = rr / pap
        x += step * p
        r -= step * ap
        rr_new = _dot(r, r)
        history.append(np.sqrt(rr_new))
        if callback is not None:
            callback(x, p)
        if np.sqrt(rr_new) <= target:
            return CGResult(x, it, history, True)
        p = r + (rr_new / rr) * p
        rr = rr_new
    return CGResult(x, max_iter, history, False)


class Material:
    """Maps a strain field to stress and a tangent operator; see :func:`make_material`."""

    formulation: str

    def stress(self, strain):  # pragma: no cover - interface
        raise NotImplementedError

    def linearize(self, strain):  # pragma: no cover - interface
        """Return (stress, tangent) where tangent(v) applies the linearization."""
        raise NotImplementedError


class FiniteStrainElastic(Material):
    formulation = FINITE_STRAIN

    def __init__(self, phases: PhaseMap, nb_quad: int):
        self.lam, self.mu = phases.lame_fields(nb_quad)

    def stress(self, F):
        return svk_stress(F, self.lam, self.mu)[0]

    def linearize(self, F):
        P, K = svk_stress(F, self.lam, self.mu)
        return P, lambda v: np.einsum("...iajb,...jb->...ia", K, v)


class SmallStrainElastic(Material):
    formulation = SMALL_STRAIN

    def __init__(self, phases: PhaseMap, nb_quad: int):
        self.lam, self.mu = phases.lame_fields(nb_quad)

    def stress(self, e):
        return hooke_stress(e, self.lam, self.mu)

    def linearize(self, e):
        return self.stress(e), lambda v: hooke_stress(v, self.lam, self.mu)


class SmallStrainDamage(Material):
    """Bilinear damage with secant stiffness; eigenstrain weights come from the phases."""

    formulation = SMALL_STRAIN

    def __init__(self, phases: PhaseMap, nb_quad: int):
        self.lam, self.mu = phases.lame_fields(nb_quad)
        self.eps_u = phases.per_point("eps_u", nb_quad)
        self.alpha = phases.per_point("alpha", nb_quad)
        self.weight = phases.per_point("eigenstrain", nb_quad)
        self.state = DamageState.zeros(self.lam.shape)
        self.amplitude = 0.0
        self.trial = self.state
        self.frozen = False

    def eigenstrain(self):
        return (self.amplitude * self.weight)[..., None, None] * np.eye(DIM)

    def _evaluate(self, e):
        # history is monotone within a step: each iterate sees the largest
        # kappa reached so far, which keeps the secant iteration from cycling
        e_eff = e - self.eigenstrain()
        norm = np.sqrt(np.einsum("...ij,...ij->...", e_eff, e_eff))
        kappa = np.maximum(self.trial.kappa, norm)
        stage = np.maximum(damage_stage(kappa, self.eps_u, self.alpha), self.trial.stage)
        return e_eff, self._factor(kappa, stage), DamageState(kappa, stage)

    def _factor(self, kappa, stage):
        return np.where(stage == FAILED, 0.0, secant_factor(kappa, self.eps_u, self.alpha))

    def _secant(self, e):
        if self.frozen:
            e_eff = e - self.eigenstrain()
            return e_eff, self._factor(self.state.kappa, self.state.stage)
        e_eff, factor, self.trial = self._evaluate(e)
        return e_eff, factor

    def stress(self, e):
        if self.frozen:
            e_eff, factor = self._secant(e)
        else:
            e_eff, factor, _ = self._evaluate(e)
        return factor[..., None, None] * hooke_stress(e_eff, self.lam, self.mu)

    def linearize(self, e):
        e_eff, factor = self._secant(e)
        lam, mu = factor * self.lam, factor * self.mu
        return hooke_stress(e_eff, lam, mu), lambda v: hooke_stress(v, lam, mu)

    def update(self, e):
        """Advance the trial history to strain ``e`` (explicit update)."""
        self.trial = self._evaluate(e)[2]

    def commit(self):
        self.state = self.trial.copy()

    def rollback(self):
        """Discard in-step history, e.g. before retrying a step."""
        self.trial = self.state.copy()

    def damage(self):
        return 1 - np.where(
            self.state.stage == FAILED, 0.0, secant_factor(self.state.kappa, self.eps_u, self.alpha)
        )


def make_material(phases: PhaseMap, formulation: str, nb_quad: int) -> Material:
    damaging = any(p.damages or p.eigenstrain for p in phases.phases)
    if formulation == FINITE_STRAIN:
        if damaging:
            raise ValueError("damage and eigenstrain are only supported in small strain")
        return FiniteStrainElastic(phases, nb_quad)
    if damaging:
        return SmallStrainDamage(phases, nb_quad)
    return SmallStrainElastic(phases, nb_quad)


def make_operator(grid: Grid, scheme, formulation: str) -> ProjectionOperator:
    if formulation == FINITE_STRAIN:
        return build_projection(grid, scheme)
    return build_small_strain_projection(grid, scheme)


def residual(strain: np.ndarray, material: Material, op: ProjectionOperator) -> np.ndarray:
    """Projected stress G * P(F); zero at equilibrium."""
    return op(material.stress(strain))


def _newton(strain, material, op, cfg: SolverConfig, callback=None, inexact=False):
    """
    Newton loop on ``strain`` in place.  Returns (stress, iterations, cg counts, residuals, ok).

    CG stops at cg_tol relative to its right-hand side, but never demands
    more than cg_tol times the first residual of the loop.  With ``inexact``
    it also stops once the residual is half the Newton tolerance, which
    pays off when the starting guess is already close.
    """
    cg_counts: list[int] = []
    residuals: list[float] = []
    first = None
    for it in range(cfg.newton_max_iter + 1):
        stress, tangent = material.linearize(strain)
        r = op(stress)
        rnorm = np.linalg.norm(r)
        # floor the scale at the initial stress: structures that float in
        # vacuum relax to zero stress, where |G P| / |P| is meaningless
        scale = np.linalg.norm(stress)
        scale0 = scale if it == 0 else scale0
        scale = max(scale, scale0)
        rel = rnorm / scale if scale > 0 else 0.0
        residuals.append(rel)
        log.debug("newton %d: |G P| / max(|P|, |P_0|) = %.3e", it, rel)
        if rel <= cfg.newton_tol:
            return stress, it, cg_counts, residuals, True
        if it == cfg.newton_max_iter:
            break
        first = rnorm if first is None else first
        atol = cfg.cg_tol * first
        if inexact:
            atol = max(atol, 0.5 * cfg.newton_tol * scale)
        cg = conjugate_gradients(
            lambda v: op(tangent(v)), -r, cfg.cg_tol, cfg.cg_max_iter, callback, atol=atol,
        )
        cg_counts.append(cg.iterations)
        if not cg.converged:
            raise ConvergenceError(
                f"CG stagnated after {cg.iterations} iterations "
                f"(|r|/|b| = {cg.residuals[-1] / cg.residuals[0]:.3e})"
            )
        step = cg.x
        if cfg.line_search:
            for _ in range(10):
                trial = strain + step
                if np.linalg.norm(op(material.stress(trial))) < rnorm:
                    break
                step = 0.5 * step
        strain += step
    return stress, cfg.newton_max_iter, cg_counts, residuals, False


def solve(
    grid: Grid,
    scheme,
    phases: PhaseMap,
    load: LoadCase,
    cfg: SolverConfig | None = None,
    op: ProjectionOperator | None = None,
    callback=None,
) -> SolveResult:
    """
    Static equilibrium under the mean strain of ``load``.

    The initial guess is the uniform mean field; ``load.formulation`` selects
    finite strain (SVK) or small strain (Hooke).
    """
    cfg = cfg or SolverConfig()
    scheme = scheme if isinstance(scheme, DerivativeScheme) else DerivativeScheme(scheme)
    if phases.shape != grid.nb_pts:
        raise ValueError(f"phase map {phases.shape} does not match grid {grid.nb_pts}")
    op = op or make_operator(grid, scheme, load.formulation)
    material = make_material(phases, load.formulation, scheme.nb_quad)
    strain = np.broadcast_to(load.mean, op.field_shape).copy()
    stress, its, cg_counts, residuals, ok = _newton(strain, material, op, cfg, callback)
    result = SolveResult(ok, its, cg_counts, strain, stress, residuals)
    if not ok:
        result.message = f"Newton did not converge in {cfg.newton_max_iter} iterations"
        raise ConvergenceError(result.message, result)
    return result


def solve_damage(
    grid: Grid,
    scheme,
    phases: PhaseMap,
    load: LoadCase,
    cfg: SolverConfig | None = None,
    checkpoints: Sequence[int] | None = None,
    progress: Callable[[int, SolveResult], None] | None = None,
) -> list[SolveResult]:
    """
    Incremental eigenstrain loading with damage history.

    The eigenstrain amplitude grows linearly to ``load.eigenstrain_amplitude``
    over ``load.n_steps`` steps at fixed mean strain.  Damage states are
    committed after each converged step (see ``SolverConfig.damage_update``).
    Results are returned for the requested ``checkpoints`` (1-based step
    numbers, default: last step); each carries the damage and failed
    fraction histories up to that step.
    """
    cfg = cfg or SolverConfig()
    scheme = scheme if isinstance(scheme, DerivativeScheme) else DerivativeScheme(scheme)
    op = make_operator(grid, scheme, SMALL_STRAIN)
    material = SmallStrainDamage(phases, scheme.nb_quad)
    material.frozen = cfg.damage_update == "explicit"
    n = load.n_steps
    checkpoints = set(checkpoints or [n])
    strain = np.broadcast_to(load.mean, op.field_shape).copy()
    previous = strain.copy()
    fraction = np.zeros(n)
    failed = np.zeros(n)
    out = []
    last = None
    for step in range(1, n + 1):
        material.amplitude = load.eigenstrain_amplitude * step / n
        # the ramp is linear, so extrapolating the last increment is a good guess
        increment = strain - previous
        previous = strain.copy()
        strain += increment
        try:
            stress, its, cg_counts, residuals, ok = _newton(strain, material, op, cfg, inexact=True)
        except ConvergenceError as err:
            raise ConvergenceError(f"step {step}: {err}", last, step) from err
        if not ok:
            raise ConvergenceError(
                f"step {step}: damage iteration did not converge", last, step
            )
        if material.frozen:
            material.update(strain)
        material.commit()
        damage = material.damage()
        fraction[step - 1] = np.mean(material.state.stage != ELASTIC)
        failed[step - 1] = np.mean(material.state.stage == FAILED)
        last = SolveResult(
            True, its, cg_counts, strain.copy(), stress, residuals,
            step=step, load_factor=step / n, damage=damage,
            damage_fraction=fraction[:step].copy(), failed_fraction=failed[:step].copy(),
        )
        if progress is not None:
            progress(step, last)
        if step in checkpoints:
            out.append(last)
    return out
