"""
Circular inhomogeneity against the image-corrected analytic field.

Runs the small-strain solve on a sequence of grids and reports the relative
error of the mean strain over the inclusion, then checks how fast the image
sum converges.

    python3 scripts/run_eshelby_convergence.py --grids 75 151 303
"""

import argparse

import numpy as np

from fftproj.grid import Grid
from fftproj.oracles import EshelbyProblem, eshelby_periodic
from fftproj.scenarios import preset, run_scenario


def main():
    parser = argparse.ArgumentParser(description="grid convergence of the inclusion mean strain")
    parser.add_argument("--grids", type=int, nargs="+", default=[75, 151, 303])
    parser.add_argument("--scheme", default="fe_linear")
    parser.add_argument("--output-dir", default="out/eshelby")
    args = parser.parse_args()

    for n in args.grids:
        manifest = run_scenario(
            preset("eshelby", scheme=args.scheme, nx=n, ny=n), f"{args.output_dir}/{n}"
        )
        res = manifest["results"]
        print(f"{n:>5} x {n:<5} inclusion mean error = {res['inclusion_mean_rel_error']:.4%}   "
              f"field L2 error = {res['field_rel_error_l2']:.4%}   "
              f"({res['wall_time_s']:.1f} s)")

    # a sheared load shows the image sum converging; for a biaxial load the
    # inclusion mean does not depend on the number of images at all
    shear = np.array([[0.01, 0.004], [0.004, -0.002]])
    prob = EshelbyProblem((0.1, 0.1), 1.0, 0.33, 0.1, 0.33, strain=shear)
    grid = Grid((75, 75))
    prev = None
    for m in range(8):
        mean = eshelby_periodic(prob, grid, images=m).inclusion_mean
        change = "" if prev is None else f"   change {np.linalg.norm(mean - prev) / np.linalg.norm(mean):.2e}"
        print(f"images M = {m}: inclusion mean {mean.ravel()}{change}")
        prev = mean


if __name__ == "__main__":
    main()
