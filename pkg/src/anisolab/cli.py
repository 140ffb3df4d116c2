"""
Command-line entry points.

    anisolab simulate --config run.yaml --out results/
    anisolab decay-fit --series results/norms.csv --t0 5 --t1 50
    anisolab verify-ops --seed 0 --trials 100
    anisolab lp-check --config run.yaml

Exit codes: 0 success, 1 a check failed, 2 bad input, 3 blow-up.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
import warnings
from pathlib import Path

import numpy as np

from .decay import RateQuery, fit_exponent, grade_series, verify_operator_bounds
from .initial_data import make_divfree_ic
from .io import (
    ConfigError,
    atomic_write_text,
    format_exponent,
    json_text,
    load_config,
    norms_csv_text,
    read_norms_csv,
    write_checkpoint,
)
from .lp_besov import NormSpec, build_partition, chi_profile, phi_profile, run_lp_checks, xs_norm
from .mild import BlowUpError, IntegratorConfig, NormSeries, energy_ledger, integrate, record_norm
from .stokes import check_bc, check_div, stokes_evolve

__all__ = ["main", "cmd_simulate", "cmd_decay_fit", "cmd_verify_ops", "cmd_lp_check"]

log = logging.getLogger("anisolab")

EXIT_OK, EXIT_CHECK, EXIT_CONFIG, EXIT_BLOWUP = 0, 1, 2, 3
RESIDUAL_TOL = {"linear": 1e-6, "nonlinear": 1e-5}


def _emit(obj) -> None:
    sys.stdout.write(json.dumps(_jsonable(obj), sort_keys=True, allow_nan=False) + "\n")


def _jsonable(obj):
    """Replace infinite floats (Lebesgue exponents) by ``"inf"`` and NaN by ``None``."""
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if math.isnan(v):
            return None
        return format_exponent(v) if math.isinf(v) and v > 0 else v
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _rate_query(s: NormSeries) -> RateQuery | None:
    try:
        return RateQuery(s.component, s.spec.p, s.spec.q, s.spec.alpha)
    except ValueError:
        return None


def _fit_entries(series, window, tolerance) -> list[dict]:
    out = []
    for s in series:
        rq = _rate_query(s)
        label = f"{s.component}:p={format_exponent(s.spec.p)}:q={format_exponent(s.spec.q)}:a={s.spec.alpha[0]}{s.spec.alpha[1]}"
        if rq is None:
            out.append({"query": label, "status": "no_rate", "passed": None})
            continue
        try:
            out.append(grade_series(rq, s, window, tolerance))
        except ValueError as exc:
            out.append({"query": label, "status": "fit_error", "error": str(exc), "passed": False})
    return out


def _linear_run(cfg, u0, specs, on_save):
    series = [NormSeries(c, s) for c, s in specs]
    n_saves = int(round(cfg.t_max / cfg.dt)) // cfg.save_every
    div_max = bc_max = 0.0
    for n in range(n_saves + 1):
        t = n * cfg.save_every * cfg.dt
        u = stokes_evolve(u0, t, tol=None)
        if not u.is_zero():
            div_max = max(div_max, check_div(u))
            bc_max = max(bc_max, check_bc(u))
        for s in series:
            s.append(t, record_norm(u, s.component, s.spec))
        on_save(t, u)
    return series, {"div_max": div_max, "bc_max": bc_max}


def cmd_simulate(config_path, out_dir) -> int:
    """Run one configured experiment and write ``norms.csv``, checkpoints and ``report.json``."""
    try:
        cfg = load_config(config_path)
    except ConfigError as exc:
        log.error("configuration error: %s", exc)
        return EXIT_CONFIG
    grid = cfg.make_grid()
    u0 = make_divfree_ic(grid, cfg.seed, cfg.amplitude, cfg.profile, cfg.width)
    specs = [(n.component, NormSpec(n.p, n.q, alpha=n.alpha)) for n in cfg.norms]
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    report = {"mode": cfg.mode, "config": str(config_path), "status": "completed"}
    partition = build_partition(grid)
    size = 0.0 if u0.is_zero() else xs_norm(u0, cfg.xs_order, partition).value
    report["initial_xs_norm"] = size
    report["smallness_delta"] = cfg.smallness_delta
    report["within_smallness"] = size <= cfg.smallness_delta
    code = EXIT_OK

    def checkpoint(t, u):
        if cfg.checkpoints:
            write_checkpoint(out / f"ckpt_{t:.6f}.ans", u, t)

    if cfg.mode == "linear":
        series, residuals = _linear_run(cfg, u0, specs, checkpoint)
    else:
        integ = IntegratorConfig(cfg.dt, cfg.t_max, cfg.picard_iters, True, cfg.smallness_delta,
                                 cfg.save_every, cfg.xs_order)
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", RuntimeWarning)
                traj, series = integrate(u0, integ, specs, partition=partition, keep_states=False,
                                         on_save=checkpoint)
        except BlowUpError as exc:
            log.error("blow-up: %s", exc)
            traj, series = exc.trajectory, exc.series
            report["status"] = "blowup"
            report["error"] = str(exc)
            code = EXIT_BLOWUP
        residuals = {"div_max": max((m.get("div", 0.0) for m in traj.step_meta), default=0.0),
                     "bc_max": max((m.get("bc", 0.0) for m in traj.step_meta), default=0.0)}
        defect = energy_ledger(traj)
        report["energy_defect"] = defect if math.isfinite(defect) else None
    report["residuals"] = residuals
    window = (cfg.t0, cfg.t1)
    report["fits"] = [] if code == EXIT_BLOWUP else _fit_entries(series, window, cfg.tolerance)
    tol = RESIDUAL_TOL[cfg.mode]
    checks = {
        "rates": all(e["passed"] is not False for e in report["fits"]),
        "div": residuals["div_max"] < tol,
        "bc": residuals["bc_max"] < tol,
    }
    report["checks"] = checks
    report["residual_tolerance"] = tol
    report["passed"] = code == EXIT_OK and all(checks.values())
    atomic_write_text(out / "norms.csv", norms_csv_text(series))
    atomic_write_text(out / "report.json", json_text(_jsonable(report)))
    if code == EXIT_OK and not report["passed"]:
        code = EXIT_CHECK
    log.info("simulate finished with exit code %d", code)
    return code


def cmd_decay_fit(csv_path, t0: float, t1: float) -> int:
    """Fit every series of a ``norms.csv`` file and print one JSON line per series."""
    try:
        groups = read_norms_csv(csv_path)
    except (OSError, ValueError) as exc:
        log.error("cannot read series: %s", exc)
        return EXIT_CONFIG
    for (comp, p, q, ah, a3), (ts, vs) in groups.items():
        line = {"component": comp, "p": format_exponent(p), "q": format_exponent(q), "alpha_h": ah, "alpha_3": a3}
        try:
            line.update(fit_exponent((np.asarray(ts), np.asarray(vs)), t0, t1).to_dict())
        except ValueError as exc:
            line["error"] = str(exc)
        _emit(line)
    return EXIT_OK


def cmd_verify_ops(seed: int, trials: int) -> int:
    """Print the operator-bound table; exit 0 iff every ratio is under its bound."""
    if trials < 20:
        log.error("trials must be at least 20, got %d", trials)
        return EXIT_CONFIG
    table = verify_operator_bounds(seed, trials)
    for name, row in table.items():
        if isinstance(row, dict):
            _emit({"operator": name, **row})
    return EXIT_OK if table["passed"] else EXIT_CHECK


def _corrupt_phi(r):
    return 0.9 * phi_profile(r)


def cmd_lp_check(config_path, phi=None) -> int:
    """Run the Littlewood-Paley suite on the configured grid."""
    try:
        cfg = load_config(config_path)
    except ConfigError as exc:
        log.error("configuration error: %s", exc)
        return EXIT_CONFIG
    grid = cfg.make_grid()
    part = build_partition(grid, chi_profile, phi or phi_profile)
    rows = run_lp_checks(grid, part, seed=cfg.seed)
    for row in rows:
        _emit(row)
    return EXIT_OK if all(r["passed"] for r in rows) else EXIT_CHECK


def _u64(text: str) -> int:
    v = int(text)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in 64 unsigned bits")
    return v


def _finite(text: str) -> float:
    v = float(text)
    if not math.isfinite(v):
        raise argparse.ArgumentTypeError("expected a finite number")
    return v


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="anisolab", description=__doc__.strip().splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("simulate", help="run a configured experiment")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p = sub.add_parser("decay-fit", help="fit decay exponents in a norms.csv file")
    p.add_argument("--series", required=True)
    p.add_argument("--t0", type=_finite, required=True)
    p.add_argument("--t1", type=_finite, required=True)
    p = sub.add_parser("verify-ops", help="operator boundedness suite")
    p.add_argument("--seed", type=_u64, default=0)
    p.add_argument("--trials", type=int, default=100)
    p = sub.add_parser("lp-check", help="Littlewood-Paley partition and Bernstein suite")
    p.add_argument("--config", required=True)
    p.add_argument("--fault", choices=["corrupt-phi"], help=argparse.SUPPRESS)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    if args.command == "simulate":
        return cmd_simulate(args.config, args.out)
    if args.command == "decay-fit":
        return cmd_decay_fit(args.series, args.t0, args.t1)
    if args.command == "verify-ops":
        return cmd_verify_ops(args.seed, args.trials)
    phi = _corrupt_phi if args.fault == "corrupt-phi" else None
    return cmd_lp_check(args.config, phi)


if __name__ == "__main__":
    sys.exit(main())
