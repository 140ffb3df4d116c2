"""
Linear Stokes decay on a modest grid.

Evolves a seeded divergence-free bump with the exact Stokes flow, samples a
few mixed norms on log-spaced times and compares the fitted log-log slopes
with the rate table.  Runs in well under a minute on one core.

    python demos/linear_decay.py
"""

import math

from anisolab import RateQuery, make_grid, run_linear_campaign

INF = math.inf


def main():
    grid = make_grid(L=32.0, N=64, Z=16.0, M=64)
    queries = [
        RateQuery("horizontal", 2, 2),
        RateQuery("horizontal", INF, INF),
        RateQuery("horizontal", 2, 2, alpha=(1, 0)),
        RateQuery("vertical", INF, INF),
        RateQuery("vertical", 2, INF),
    ]
    result = run_linear_campaign(grid, queries, window=(2.0, 16.0), seed=0, n_times=12)
    print(f"residuals: div {result['residuals']['div_max']:.1e}  wall {result['residuals']['bc_max']:.1e}")
    print(f"{'query':<28}{'fitted':>9}{'rate':>7}  verdict")
    for e in result["queries"]:
        verdict = "ok" if e["passed"] else "off"
        print(f"{e['query']:<28}{e['fitted']:>9.3f}{-e['theoretical']:>7.2f}  {verdict}")


if __name__ == "__main__":
    main()
