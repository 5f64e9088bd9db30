"""
Direct linear finite-element solve on the periodic grid.

Every voxel is split into two linear triangles: element 1 with nodes
(I, J), (I+1, J), (I, J+1) and element 2 with nodes (I+1, J), (I, J+1),
(I+1, J+1).  The displacement is split as u = e_mean . r + u~ with u~
periodic; the global system for u~ is assembled and solved directly.  This
module deliberately does not use the stencil or projection code.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sparse
import scipy.sparse.linalg as spla

from ..grid import Grid
from ..materials import PhaseMap


@dataclass
class FEMSolution:
    displacement: np.ndarray  # periodic fluctuation, (Nx, Ny, 2)
    strain: np.ndarray  # (Nx, Ny, 2, 2, 2): [voxel, element, i, j]
    stress: np.ndarray


def _triangle_gradients(coords: np.ndarray):
    """Shape-function gradients (3, 2) and area of a linear triangle."""
    x = np.column_stack([np.ones(3), coords])
    inv = np.linalg.inv(x)
    area = 0.5 * abs(np.linalg.det(x))
    return inv[1:].T, area


def _voigt_b(grads: np.ndarray) -> np.ndarray:
    """Strain-displacement matrix for [e_xx, e_yy, 2 e_xy] and dofs (u0x, u0y, u1x, ...)."""
    b = np.zeros((3, 6))
    for a, (gx, gy) in enumerate(grads):
        b[0, 2 * a] = gx
        b[1, 2 * a + 1] = gy
        b[2, 2 * a] = gy
        b[2, 2 * a + 1] = gx
    return b


def _plane_strain_d(E: float, nu: float) -> np.ndarray:
    lam = E * nu / ((1 + nu) * (1 - 2 * nu))
    mu = E / (2 * (1 + nu))
    return np.array([[lam + 2 * mu, lam, 0], [lam, lam + 2 * mu, 0], [0, 0, mu]])


def _voigt_to_tensor(v: np.ndarray, engineering: bool) -> np.ndarray:
    shear = v[..., 2] / 2 if engineering else v[..., 2]
    return np.stack(
        [np.stack([v[..., 0], shear], -1), np.stack([shear, v[..., 1]], -1)], -2
    )


def fem_direct_solve(grid: Grid, phases: PhaseMap, mean_strain) -> FEMSolution:
    """
    Small-strain periodic linear-elastic solve with prescribed mean strain.

    One node is pinned to remove rigid translation; any further singularity
    (for instance a floating island surrounded by vacuum) raises.
    """
    nx, ny = grid.nb_pts
    dx, dy = grid.spacing
    if phases.shape != (nx, ny):
        raise ValueError("phase map does not match grid")
    ebar = np.asarray(mean_strain, dtype=float)
    ebar_v = np.array([ebar[0, 0], ebar[1, 1], ebar[0, 1] + ebar[1, 0]])

    local = [
        np.array([[0, 0], [1, 0], [0, 1]]),
        np.array([[1, 0], [0, 1], [1, 1]]),
    ]
    b_mats, areas = [], []
    for offs in local:
        grads, area = _triangle_gradients(offs * np.array([dx, dy], dtype=float))
        b_mats.append(_voigt_b(grads))
        areas.append(area)

    d_mats = [_plane_strain_d(p.E, p.nu) for p in phases.phases]

    ii, jj = np.meshgrid(np.arange(nx), np.arange(ny), indexing="ij")
    rows, cols, vals = [], [], []
    rhs = np.zeros(2 * nx * ny)
    for e, offs in enumerate(local):
        b, area = b_mats[e], areas[e]
        nodes = np.stack(
            [((ii + oi) % nx) * ny + (jj + oj) % ny for oi, oj in offs], axis=-1
        ).reshape(-1, 3)
        dofs = np.empty((nodes.shape[0], 6), dtype=int)
        dofs[:, 0::2] = 2 * nodes
        dofs[:, 1::2] = 2 * nodes + 1
        pid = phases.ids.reshape(-1)
        ke_by_phase = np.array([area * b.T @ d @ b for d in d_mats])
        fe_by_phase = np.array([-area * b.T @ (d @ ebar_v) for d in d_mats])
        ke = ke_by_phase[pid]
        rows.append(np.repeat(dofs, 6, axis=1).ravel())
        cols.append(np.tile(dofs, (1, 6)).ravel())
        vals.append(ke.ravel())
        np.add.at(rhs, dofs.ravel(), fe_by_phase[pid].ravel())

    n = 2 * nx * ny
    k = sparse.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n)
    ).tocsr()
    free = np.arange(2, n)
    k_ff = k[free][:, free].tocsc()
    u = np.zeros(n)
    u[free] = spla.spsolve(k_ff, rhs[free])
    check = k_ff @ u[free] - rhs[free]
    scale = max(np.linalg.norm(rhs), np.finfo(float).tiny)
    if not np.all(np.isfinite(u)) or np.linalg.norm(check) > 1e-8 * scale:
        raise np.linalg.LinAlgError("stiffness matrix is singular beyond rigid translation")

    disp = u.reshape(nx, ny, 2)
    strain_v = np.zeros((nx, ny, 2, 3))
    stress_v = np.zeros((nx, ny, 2, 3))
    d_by_voxel = np.array(d_mats)[phases.ids]
    for e, offs in enumerate(local):
        ue = np.concatenate(
            [np.roll(disp, (-oi, -oj), axis=(0, 1)) for oi, oj in offs], axis=-1
        )
        ev = ue @ b_mats[e].T + ebar_v
        strain_v[:, :, e] = ev
        stress_v[:, :, e] = np.einsum("xyab,xyb->xya", d_by_voxel, ev)
    return FEMSolution(
        disp - disp.mean(axis=(0, 1)),
        _voigt_to_tensor(strain_v, engineering=True),
        _voigt_to_tensor(stress_v, engineering=False),
    )
