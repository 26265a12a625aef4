#!/usr/bin/env python3
"""Sweep the subharmonicity constant K0 over slope bounds and print CSV.

Usage: python scripts/k0_sweep.py [n] [m]
"""
import sys

from gbl import certifier

def main() -> None:
    n = int(sys.argv[1]) if len(sys.argv) > 1 else 4
    m = int(sys.argv[2]) if len(sys.argv) > 2 else 3
    print("beta0,k0,v_at_argmin,argmin_lambda")
    for beta0 in (1.0, 1.25, 1.5, 1.75, 2.0, 2.25, 2.5, 2.75, 2.9, 2.95, 2.99):
        cert = certifier.compute_K0(n, m, beta0, audit_samples=5_000, seed=0)
        lam = ";".join(f"{x:.6f}" for x in cert.argmin_lambda.lambdas)
        print(f"{beta0},{cert.k0:.12g},{cert.argmin_lambda.v:.6f},{lam}")

if __name__ == "__main__":
    main()
