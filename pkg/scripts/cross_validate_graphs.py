#!/usr/bin/env python3
"""Closed-form vs finite-difference Laplacian of v on the nonlinear builtins.

Prints per-point records and a Richardson convergence table for a rotated
reference plane (where the FD scheme has genuine truncation error).
"""
import numpy as np

from gbl import graphs, grassmann
from gbl.rng import substream

def main() -> None:
    rng = substream(0, 0)
    for name in ("holomorphic_pair", "lawson_osserman"):
        G = graphs.builtin(name)
        print(f"== {name}")
        worst = 0.0
        for _ in range(25):
            if name == "lawson_osserman":
                x = rng.standard_normal(G.n)
                x *= rng.uniform(0.5, 2.0) / np.linalg.norm(x)
            else:
                x = rng.uniform(-0.7, 0.7, G.n)
            pg = graphs.point_geometry(G, x)
            cf = graphs.laplacian_v_closed_form(G, x)
            fd = graphs.laplacian_v_finite_difference(G, x, step=1e-3)
            scale = max(abs(cf), abs(fd), pg.slope * max(pg.norm_b2, 1e-12))
            worst = max(worst, abs(cf - fd) / scale)
        print(f"   worst scaled rel diff over 25 points: {worst:.3e}")

        P0 = grassmann.from_chart(np.full((G.n, G.m), 0.05), grassmann.standard_plane(G.n, G.m))
        x = np.full(G.n, 0.45) if name != "lawson_osserman" else np.array([1.0, -0.2, 0.4, 0.3])
        cf = graphs.laplacian_v_closed_form(G, x, P0)
        print("   step        fd error      order")
        prev = None
        for step in (4e-3, 2e-3, 1e-3):
            err = abs(graphs.laplacian_v_finite_difference(G, x, P0, step=step) - cf)
            order = "" if prev is None else f"{np.log2(prev / err):.2f}"
            print(f"   {step:.0e}      {err:.3e}    {order}")
            prev = err

if __name__ == "__main__":
    main()
