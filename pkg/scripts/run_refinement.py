"""Radius response to the contraction factor on a radius-sqrt(10) sphere.

Runs the same capped cover twice, once with rho = 1/8 and once with
rho = 1/80, and prints the ratio of average box radii. The tighter factor
forces radii down by roughly the factor ratio.
"""

import pathlib
import sys
import time

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parent.parent / "src"))

from certsurf.surface import certified_surface_approximation
from certsurf.system import AnalyticSystem

SOURCE = "variables = x y z\nx^2 + y^2 + z^2 - 10 = 0\n"
START = (0.0, 0.0, 3.16)


def average_radius(rho: float) -> tuple[float, int, float]:
    system = AnalyticSystem.from_source(SOURCE)
    t0 = time.time()
    run = certified_surface_approximation(
        system, START, 0.1, rho, max_boxes=2000
    )
    elapsed = time.time() - t0
    radii = [p.r for _, p in run.live_patches()]
    return sum(radii) / len(radii), len(radii), elapsed


def main() -> int:
    loose, n1, t1 = average_radius(0.125)
    tight, n2, t2 = average_radius(0.0125)
    print(f"rho=1/8:  avg r = {loose:.6f} over {n1} boxes ({t1:.1f}s)")
    print(f"rho=1/80: avg r = {tight:.6f} over {n2} boxes ({t2:.1f}s)")
    print(f"ratio: {loose / tight:.3f}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
