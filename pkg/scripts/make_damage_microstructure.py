"""
Generate the 89x89 concrete-like test microstructure used by the damage runs.

Phases: 0 paste, 1 aggregate, 2 gel.  Aggregates are random star-shaped
polygons placed without overlap on the periodic cell; gel pockets are 2x2
voxel blocks inside aggregates filling 2% of the cell.  This is a fixed test
input, not a reproduction of any particular sieve curve.

    python scripts/make_damage_microstructure.py data/damage_89.csv --seed 7
"""

import argparse

import numpy as np

from fftproj.io import write_phase_map_csv


def star_polygon(rng, radius, n_vertices=7, roughness=0.25):
    angles = np.sort(rng.uniform(0, 2 * np.pi, n_vertices))
    radii = radius * (1 + roughness * rng.uniform(-1, 1, n_vertices))
    return angles, radii


def inside_star(dx, dy, angles, radii):
    theta = np.mod(np.arctan2(dy, dx), 2 * np.pi)
    a = np.concatenate([angles - 2 * np.pi, angles, angles + 2 * np.pi])
    r = np.tile(radii, 3)
    return np.hypot(dx, dy) <= np.interp(theta, a, r)


def generate(n=89, seed=7, aggregate_fraction=0.45, gel_fraction=0.02, r_min=4.0, r_max=11.0):
    rng = np.random.default_rng(seed)
    ids = np.zeros((n, n), dtype=int)
    ii, jj = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    attempts = 0
    while (ids == 1).mean() < aggregate_fraction and attempts < 20000:
        attempts += 1
        radius = rng.uniform(r_min, r_max)
        cx, cy = rng.uniform(0, n, 2)
        dx = (ii + 0.5 - cx + n / 2) % n - n / 2
        dy = (jj + 0.5 - cy + n / 2) % n - n / 2
        angles, radii = star_polygon(rng, radius)
        shape = inside_star(dx, dy, angles, radii)
        # keep a one-voxel paste gap between aggregates
        grown = shape | np.roll(shape, 1, 0) | np.roll(shape, -1, 0) | np.roll(shape, 1, 1) | np.roll(shape, -1, 1)
        if np.any(grown & (ids == 1)):
            continue
        ids[shape] = 1
    target = int(round(gel_fraction * n * n))
    while (ids == 2).sum() < target:
        i, j = rng.integers(0, n, 2)
        block = (np.array([i, i, i + 1, i + 1]) % n, np.array([j, j + 1, j, j + 1]) % n)
        # pockets sit strictly inside aggregates and do not touch each other
        window = np.roll(np.roll(ids, -(i - 1), 0), -(j - 1), 1)[:4, :4]
        if np.all(window == 1):
            ids[block] = 2
    return ids


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[1])
    parser.add_argument("output")
    parser.add_argument("--size", type=int, default=89)
    parser.add_argument("--seed", type=int, default=7)
    args = parser.parse_args()
    ids = generate(args.size, args.seed)
    header = [
        f"damage test microstructure {args.size}x{args.size}, seed {args.seed}",
        "phase ids: 0 paste, 1 aggregate, 2 gel",
        f"area fractions: paste {np.mean(ids == 0):.4f}, aggregate {np.mean(ids == 1):.4f}, gel {np.mean(ids == 2):.4f}",
    ]
    write_phase_map_csv(args.output, ids, header)
    print("\n".join(header))


if __name__ == "__main__":
    main()
