"""
Operator and Littlewood-Paley sanity checks.

Prints the random-trial operator bound table and the dyadic partition suite
on the grid of ``configs/small_linear.yaml``, then shows that a damaged
shell profile is caught.

    python demos/operator_checks.py
"""

from pathlib import Path

from anisolab import build_partition, verify_operator_bounds
from anisolab.io import load_config
from anisolab.lp_besov import chi_profile, phi_profile, run_lp_checks

CONFIG = Path(__file__).parent / "configs" / "small_linear.yaml"


def show(rows):
    for r in rows:
        print(f"  {r['check']:<40} {r['value']:.3e} <= {r['bound']:.3e}  {'ok' if r['passed'] else 'FAIL'}")


def main():
    table = verify_operator_bounds(seed=0, trials=20)
    print("operator bounds (largest ratio over trials):")
    for name, row in table.items():
        if isinstance(row, dict):
            print(f"  {name:<8} {row['max_ratio']:.3f} <= {row['bound']:.1f}  {'ok' if row['passed'] else 'FAIL'}")

    grid = load_config(CONFIG).make_grid()
    print("Littlewood-Paley suite:")
    show(run_lp_checks(grid, build_partition(grid)))
    print("same suite with phi scaled by 0.9:")
    bad = build_partition(grid, chi_profile, lambda r: 0.9 * phi_profile(r))
    show([r for r in run_lp_checks(grid, bad) if not r["passed"]])


if __name__ == "__main__":
    main()
