"""
Two pillars separated by vacuum, every scheme.

Prints the ratio of the largest shear stress in the right pillar to that in
the left one; a decoupling scheme gives a ratio at round-off level.

    python3 scripts/run_two_pillars.py --output-dir out/two_pillars
"""

import argparse

from fftproj.scenarios import preset, run_scenario
from fftproj.stencils import SCHEMES


def main():
    parser = argparse.ArgumentParser(description="two pillars separated by vacuum")
    parser.add_argument("--output-dir", default="out/two_pillars")
    args = parser.parse_args()
    for scheme in SCHEMES:
        manifest = run_scenario(preset("two_pillars", scheme=scheme), f"{args.output_dir}/{scheme}")
        res = manifest["results"]
        print(f"{scheme:<18} right/left max|P_xy| = {res['right_left_ratio']:.3e}   "
              f"ringing = {res['ringing_score']:.4f}")


if __name__ == "__main__":
    main()
