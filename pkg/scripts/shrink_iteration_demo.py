#!/usr/bin/env python3
"""Drive a synthetic Gauss-image cloud below the case threshold and print the trace."""
import math

from gbl import grassmann, shrinking
from gbl.rng import substream

def main() -> None:
    n = m = 2
    beta0 = 2.9
    eps = shrinking.compute_epsilon1(3.0, beta0, m=m)
    print(f"eps1 = {eps.epsilon1:.6f} (first branch {eps.first_branch:.6f}, "
          f"interior minimum {eps.epsilon2:.6f})")
    P0 = grassmann.standard_plane(n, m)
    cloud = [
        grassmann.from_chart(Z, P0)
        for Z in grassmann.sample_chart_sublevel(n, m, beta0, 48, substream(1, 0))
    ]
    params = shrinking.ShrinkParameters(a=3.0, b=beta0, beta0=beta0)
    trace = shrinking.iterate(cloud, beta0, params, epsilon1=eps.epsilon1)
    print(f"threshold sqrt(6)/2 = {math.sqrt(6)/2:.6f}")
    print(f"planned steps {trace.k_planned}, actual {trace.k_actual}")
    for j, (b, case) in enumerate(zip(trace.bounds[1:], trace.cases)):
        print(f"  step {j + 1}: case {case:13s} certified bound {b:.6f}")

if __name__ == "__main__":
    main()
