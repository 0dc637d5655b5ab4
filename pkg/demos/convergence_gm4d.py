"""Convergence of PSKK under the parameter schedule on the 4-dimensional mixture.

    python3 demos/convergence_gm4d.py [max_log10_M]

Uses a = sqrt((ln M - 1) / 2), lambda = 0.1 M^(-4/5) and N near 3 sqrt(M),
writes convergence_gm4d.csv and convergence_gm4d.svg and prints the fitted
log-log slope (theory: -0.8). The default sweep M = 10^2..10^5 with S = 10
takes about three minutes.
"""

import sys

import numpy as np

from pskk import StudyConfig, convergence_study, fit_loglog_slope


def main(max_log10_M=5):
    Ms = [10**k for k in range(2, int(max_log10_M) + 1)]
    cfg = StudyConfig(
        example="gm4d", Ms=Ms, methods=["pskk"], S=10, t=14,
        pskk=dict(alpha=2, beta=1.0, q=2.0, epsilon=0.0, eta=float(np.exp(-1.0))),
    )
    reports = convergence_study(cfg, csv_path="convergence_gm4d.csv", plot_path="convergence_gm4d.svg")
    for r in reports:
        print(f"M={r.M:>7d}  N={r.params['N']:>4d}  a={r.params['a']:.3f}  MISE {r.mise:.3e} +- {r.stderr:.1e}")
    slope, _ = fit_loglog_slope([r.M for r in reports], [r.mise for r in reports])
    print(f"fitted slope {slope:.3f}")


if __name__ == "__main__":
    main(*sys.argv[1:])
