"""Command-line surface tying the modules into reproducible pipelines.

Subcommands: simulate-fringe, simulate-mc (alias mc-validate), fit-fringe,
fit-contrast, exclusion, wavepacket-report.  Exit codes: 0 success, 1 usage
error, 2 data/schema error, 3 numerical non-convergence or failed
validation.  Outputs carry '#' provenance headers with the fully resolved
configuration and seed, and are byte-identical across repeated runs and
across --threads settings (parallel substreams are merged in fixed order).
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .config import RunConfig
from .core import (
    CslParams,
    contrast as closed_form_contrast,
    phase_variance,
    variance_bracket,
)
from .datafiles import SchemaError, read_data_file, write_data_file
from .inference import (
    ContrastSeries,
    DegenerateScanError,
    FitConvergenceError,
    FringeScan,
    FringeTruth,
    ReadNoise,
    SingularFitError,
    exclusion_curve,
    fit_contrast_decay,
    fit_fringe,
    fit_lambda_at_rc,
    lambda_upper_bound,
    synth_fringe,
)
from .montecarlo import (
    NoiseModel,
    estimate_contrast_mc,
    estimate_phase_variance_mc,
)
from .wavepacket import (
    QuadratureError,
    csl_position_variance,
    overlap_bound,
    packet_width,
    spread_report,
)

__all__ = ["main", "entrypoint", "regenerate_fringe_rows"]

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERIC = 3


class _Parser(argparse.ArgumentParser):
    # usage errors exit 1 per the CLI contract (argparse default is 2)
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _emit_report(payload: dict, path: str | None, cfg: RunConfig) -> None:
    payload = {**payload, "config": cfg.header_items()}
    text = json.dumps(payload, indent=2) + "\n"
    if path:
        Path(path).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _float_list(raw: str) -> list[float]:
    return [float(x) for x in raw.split(",") if x.strip()]


def _resolve_config(args) -> RunConfig:
    cfg = RunConfig.load(getattr(args, "config", None))
    if getattr(args, "seed", None) is not None:
        cfg = replace(cfg, seed=args.seed)
    if getattr(args, "format", None) is not None:
        cfg = replace(cfg, output_format=args.format)
    return cfg


def _add_common(sub) -> None:
    sub.add_argument("--config", metavar="JSON", default=None,
                     help="config file (default: $CSLMZI_CONFIG if set)")
    sub.add_argument("--seed", type=int, default=None, help="override config seed")


def _t_values(args) -> list[float]:
    if args.t_list:
        return _float_list(args.t_list)
    return list(np.linspace(args.t_min, args.t_max, args.t_count))


# ---------------------------------------------------------------- simulate


def _fringe_header(cfg: RunConfig, truth: FringeTruth, noise: ReadNoise,
                   t: float, index: int, n_points: int) -> dict:
    header = dict(cfg.header_items())
    header.update(
        seed=noise.seed,
        scan_index=index,
        t_s=t,
        lambda_s=truth.collapse_rate,
        r_c_m=truth.correlation_length,
        c0=truth.c0,
        p_mean=truth.p_mean,
        sigma_p=noise.sigma_p,
        n_points=n_points,
    )
    return header


def regenerate_fringe_rows(header: dict[str, str]) -> list[tuple[float, float]]:
    """Rebuild the data rows of a fringe file from its own header."""
    h = {k: float(v) for k, v in header.items()}
    cfg = RunConfig(
        nucleon_count=int(h["nucleon_count"]),
        mass=h["mass_kg"],
        v1=h["v1_m_s"],
        v2=h["v2_m_s"],
        gravity=h["g_m_s2"],
        sigma=h["sigma_m"],
        seed=int(h["seed"]),
    )
    truth = FringeTruth(h["lambda_s"], h["r_c_m"], h["c0"], h["p_mean"])
    noise = ReadNoise(h["sigma_p"], int(h["seed"]))
    scan = synth_fringe(
        truth,
        cfg.geometry(h["t_s"]),
        h["t_s"],
        noise,
        cfg.species,
        n_points=int(h["n_points"]),
        scan_index=int(h["scan_index"]),
    )
    return list(zip(scan.alpha.tolist(), scan.population.tolist()))


def _cmd_simulate_fringe(args) -> int:
    cfg = _resolve_config(args)
    truth = FringeTruth(args.lam, args.r_c, args.c0, args.p_mean)
    noise = ReadNoise(args.sigma_p, cfg.seed)
    t_values = _t_values(args)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    logger.info("simulate-fringe: %d scans, threads=%d", len(t_values), args.threads)
    ext = "json" if cfg.output_format == "json" else "csv"
    for i, t in enumerate(t_values):
        scan = synth_fringe(
            truth, cfg.geometry(t), t, noise, cfg.species,
            n_points=args.n_points, scan_index=i,
        )
        rows = list(zip(scan.alpha.tolist(), scan.population.tolist()))
        write_data_file(
            out_dir / f"fringe_{i:02d}.{ext}",
            "fringe",
            _fringe_header(cfg, truth, noise, t, i, args.n_points),
            rows,
            fmt=cfg.output_format,
        )
    print(f"wrote {len(t_values)} fringe file(s) to {out_dir}")
    return EXIT_OK


# --------------------------------------------------------------------- fit


def _scan_from_file(path: str) -> FringeScan:
    data = read_data_file(path, kind="fringe")
    if "t_s" not in data.header:
        raise SchemaError(f"{path}: missing t_s header")
    alphas = np.array([row[0] for row in data.rows])
    pops = np.array([row[1] for row in data.rows])
    return FringeScan(
        t_sep=float(data.header["t_s"]), alpha=alphas, population=pops
    )


def _cmd_fit_fringe(args) -> int:
    cfg = _resolve_config(args)
    entries = []
    for path in args.files:
        scan = _scan_from_file(path)
        fit = fit_fringe(scan)
        entries.append(
            {
                "file": str(path),
                "t_s": scan.t_sep,
                "p_mean": fit.p_mean,
                "contrast": fit.contrast,
                "alpha0_rad_s2": fit.alpha0,
                "sigma_c": fit.sigma_c,
                "residual_rms": fit.residual_rms,
            }
        )
    entries.sort(key=lambda e: e["t_s"])
    _emit_report({"kind": "fringe-fit-report", "fits": entries}, args.report, cfg)
    if args.contrast_out:
        header = dict(cfg.header_items())
        header["n_scans"] = len(entries)
        rows = [(e["t_s"], e["contrast"], e["sigma_c"]) for e in entries]
        write_data_file(args.contrast_out, "contrast", header, rows,
                        fmt=cfg.output_format)
    return EXIT_OK


def _series_from_file(path: str) -> ContrastSeries:
    data = read_data_file(path, kind="contrast")
    if not data.rows:
        raise SchemaError(f"{path}: no contrast rows")
    t, c, s = (np.array(col) for col in zip(*data.rows))
    return ContrastSeries(t_sep=t, contrast=c, sigma_c=s)


def _cmd_fit_contrast(args) -> int:
    cfg = _resolve_config(args)
    series = _series_from_file(args.contrast_file)
    if args.r_c is not None:
        fit = fit_lambda_at_rc(series, args.r_c, cfg.species, cfg.geometry(0.2))
    else:
        fit = fit_contrast_decay(series, cfg.species)
    bound = lambda_upper_bound(fit, args.policy, args.k)
    payload = {
        "kind": "contrast-decay-report",
        "r_c_m": args.r_c,
        "ln_c0": fit.ln_c0,
        "c0": math.exp(fit.ln_c0),
        "lambda_s": fit.lambda_fit,
        "sigma_lambda_s": fit.sigma_lambda,
        "covariance": [list(row) for row in fit.covariance.tolist()],
        "bound_policy": args.policy,
        "lambda_bound_s": bound,
        "n_points": int(series.t_sep.size),
    }
    _emit_report(payload, args.report, cfg)
    if args.units == "paper":
        print(f"lambda = {fit.lambda_fit / 1e-5:.2f}(+-{fit.sigma_lambda / 1e-5:.2f}) x 1e-5 /s")
        print(f"T range = {series.t_sep.min() * 1e3:.0f} .. {series.t_sep.max() * 1e3:.0f} ms")
    return EXIT_OK


# --------------------------------------------------------------- exclusion


def _cmd_exclusion(args) -> int:
    cfg = _resolve_config(args)
    series = _series_from_file(args.contrast_file)
    if args.rc_count < 1 or args.rc_min <= 0 or args.rc_max < args.rc_min:
        raise ValueError("invalid r_C grid (need 0 < min <= max, count >= 1)")
    grid = np.geomspace(args.rc_min, args.rc_max, args.rc_count)
    curve = exclusion_curve(
        series, cfg.species, cfg.geometry(0.2), cfg.sigma, grid,
        safety=args.safety, policy=args.policy, k=args.k,
    )
    header = dict(cfg.header_items())
    header.update(
        safety=args.safety,
        bound_policy=args.policy,
        rc_min_m=args.rc_min,
        rc_max_m=args.rc_max,
        rc_count=args.rc_count,
        overlap_slope_m2_s=overlap_bound(
            cfg.sigma, 2.0 * float(series.t_sep.max()), cfg.species, args.safety
        ),
    )
    if curve.crossover_rc is not None:
        header["crossover_rc_m"] = curve.crossover_rc
    write_data_file(args.out, "exclusion", header, curve.samples,
                    fmt=cfg.output_format)
    if curve.crossover_rc is not None:
        print(f"crossover_rc_m = {curve.crossover_rc!r}")
    print(f"wrote {len(curve.samples)} exclusion rows to {args.out}")
    return EXIT_OK


# --------------------------------------------------------------------- MC


def _validation_sets(cfg: RunConfig) -> list[dict]:
    """Ten parameter sets with u = |v2-v1|*T/(2*r_C) spanning 1e-3..1e4,
    crossing both correlation-length regimes; lambda chosen so each phase
    variance is 0.2 rad^2."""
    sets = []
    t_cycle = (0.26, 0.13, 0.052)
    n2 = cfg.species.nucleon_count**2
    dv = abs(cfg.v2 - cfg.v1)
    for i in range(10):
        u = 10.0 ** (-3.0 + 7.0 * i / 9.0)
        t = t_cycle[i % 3]
        r_c = dv * t / (2.0 * u)
        lam = 0.2 / (4.0 * n2 * t * variance_bracket(u))
        sets.append({"t_s": t, "r_c_m": r_c, "lambda_s": lam, "u": u})
    return sets


def _z_score(estimate, truth: float) -> float:
    diff = estimate.mean - truth
    if estimate.std_error == 0.0:
        return 0.0 if diff == 0.0 else math.inf
    return diff / estimate.std_error


def _cmd_simulate_mc(args) -> int:
    cfg = _resolve_config(args)
    if args.n_samples < 100:
        raise ValueError("need --n-samples >= 100")
    logger.info("simulate-mc: threads=%d", args.threads)
    rows = []
    worst = 0.0
    for i, params in enumerate(_validation_sets(cfg)):
        csl = CslParams(params["lambda_s"], params["r_c_m"])
        ifo = cfg.geometry(params["t_s"])
        dt = args.dt if args.dt is not None else params["t_s"] / args.dt_frac
        noise = NoiseModel(seed=cfg.seed + i, dt=dt)
        var_true = phase_variance(csl, cfg.species, ifo)
        c_true = closed_form_contrast(csl, cfg.species, ifo)
        var_mc = estimate_phase_variance_mc(
            csl, cfg.species, ifo, args.n_samples, noise, threads=args.threads
        )
        c_mc = estimate_contrast_mc(
            csl, cfg.species, ifo, args.n_samples, noise, threads=args.threads
        )
        z_v, z_c = _z_score(var_mc, var_true), _z_score(c_mc, c_true)
        worst = max(worst, abs(z_v), abs(z_c))
        rows.append(
            {
                "t_s": params["t_s"],
                "r_c_m": params["r_c_m"],
                "lambda_s": params["lambda_s"],
                "u": params["u"],
                "dt_s": dt,
                "var_analytic": var_true,
                "var_mc": var_mc.mean,
                "var_std_error": var_mc.std_error,
                "z_var": z_v,
                "contrast_analytic": c_true,
                "contrast_mc": c_mc.mean,
                "contrast_std_error": c_mc.std_error,
                "z_contrast": z_c,
            }
        )
    payload = {
        "kind": "mc-validation-report",
        "n_samples": args.n_samples,
        "seed": cfg.seed,
        "max_abs_z": worst,
        "sets": rows,
    }
    _emit_report(payload, args.report, cfg)
    if worst > 4.0:
        logger.error("MC validation failed: max |z| = %.2f > 4", worst)
        return EXIT_NUMERIC
    return EXIT_OK


# -------------------------------------------------------------- wavepacket


def _cmd_wavepacket_report(args) -> int:
    cfg = _resolve_config(args)
    csl = CslParams(args.lam, args.r_c)
    if args.t > 0.0:
        report = spread_report(csl, cfg.species, cfg.sigma, args.t)
        bound = overlap_bound(cfg.sigma, args.t, cfg.species, args.safety)
        payload = {
            "kind": "wavepacket-report",
            "sigma_m": cfg.sigma,
            "t_s": args.t,
            "ell_m": report.ell_t,
            "sigma_t_mag_m": report.sigma_t_mag,
            "csl_variance_m2": report.csl_variance,
            "total_variance_m2": report.total_variance,
            "safety": args.safety,
            "overlap_bound_m2_s": bound,
        }
    else:
        payload = {
            "kind": "wavepacket-report",
            "sigma_m": cfg.sigma,
            "t_s": args.t,
            "ell_m": packet_width(cfg.sigma, args.t, cfg.species),
            "sigma_t_mag_m": cfg.sigma,
            "csl_variance_m2": csl_position_variance(csl, cfg.species, args.t),
            "total_variance_m2": cfg.sigma**2,
            "safety": args.safety,
            "overlap_bound_m2_s": None,
        }
    _emit_report(payload, args.report, cfg)
    if args.units == "paper":
        print(f"t = {args.t * 1e3:.0f} ms; sigma = {cfg.sigma * 1e6:.2f} um; "
              f"ell = {payload['ell_m'] * 1e3:.3g} mm")
    return EXIT_OK


# ------------------------------------------------------------------ parser


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="cslmzi",
        description="Collapse-noise contrast loss in Mach-Zehnder atom "
        "interferometry: simulation, fitting, and exclusion bounds.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sf = sub.add_parser("simulate-fringe", help="synthesize fringe scan files")
    _add_common(sf)
    sf.add_argument("--out-dir", default="fringes", metavar="DIR")
    sf.add_argument("--t-list", default=None, metavar="S,S,...",
                    help="explicit pulse separation times (s)")
    sf.add_argument("--t-min", type=float, default=0.011)
    sf.add_argument("--t-max", type=float, default=0.26)
    sf.add_argument("--t-count", type=int, default=23)
    sf.add_argument("--lambda", dest="lam", type=float, default=0.0,
                    metavar="RATE", help="true collapse rate (1/s)")
    sf.add_argument("--r-c", type=float, default=1e-7, metavar="M")
    sf.add_argument("--c0", type=float, default=0.45)
    sf.add_argument("--p-mean", type=float, default=0.5)
    sf.add_argument("--sigma-p", type=float, default=0.01)
    sf.add_argument("--n-points", type=int, default=40)
    sf.add_argument("--format", choices=["csv", "json"], default=None)
    sf.add_argument("--threads", type=int, default=1)
    sf.set_defaults(handler=_cmd_simulate_fringe)

    ff = sub.add_parser("fit-fringe", help="fit fringe files, report contrasts")
    _add_common(ff)
    ff.add_argument("files", nargs="+", metavar="FRINGE_FILE")
    ff.add_argument("--report", default=None, metavar="JSON")
    ff.add_argument("--contrast-out", default=None, metavar="FILE")
    ff.add_argument("--format", choices=["csv", "json"], default=None)
    ff.set_defaults(handler=_cmd_fit_fringe)

    fc = sub.add_parser("fit-contrast", help="fit the contrast decay over T")
    _add_common(fc)
    fc.add_argument("contrast_file", metavar="CONTRAST_FILE")
    fc.add_argument("--r-c", type=float, default=None, metavar="M",
                    help="fit with the full r_C dependence at this value")
    fc.add_argument("--policy", choices=["fit-value", "fit-plus-k-sigma"],
                    default="fit-value")
    fc.add_argument("--k", type=float, default=1.0)
    fc.add_argument("--report", default=None, metavar="JSON")
    fc.add_argument("--units", choices=["si", "paper"], default="si")
    fc.set_defaults(handler=_cmd_fit_contrast)

    ex = sub.add_parser("exclusion", help="exclusion curve over an r_C grid")
    _add_common(ex)
    ex.add_argument("contrast_file", metavar="CONTRAST_FILE")
    ex.add_argument("--rc-min", type=float, default=1e-9)
    ex.add_argument("--rc-max", type=float, default=1e-2)
    ex.add_argument("--rc-count", type=int, default=181)
    ex.add_argument("--safety", type=float, default=0.1)
    ex.add_argument("--policy", choices=["fit-value", "fit-plus-k-sigma"],
                    default="fit-value")
    ex.add_argument("--k", type=float, default=1.0)
    ex.add_argument("--out", default="exclusion.csv", metavar="FILE")
    ex.add_argument("--format", choices=["csv", "json"], default=None)
    ex.set_defaults(handler=_cmd_exclusion)

    mc = sub.add_parser("simulate-mc", aliases=["mc-validate"],
                        help="Monte Carlo vs closed-form validation sweep")
    _add_common(mc)
    mc.add_argument("--n-samples", type=int, default=100_000)
    mc.add_argument("--dt-frac", type=float, default=1e4,
                    help="time step as T/dt-frac (default T/1e4)")
    mc.add_argument("--dt", type=float, default=None,
                    help="absolute time step (s), overrides --dt-frac")
    mc.add_argument("--threads", type=int, default=1)
    mc.add_argument("--report", default=None, metavar="JSON")
    mc.set_defaults(handler=_cmd_simulate_mc)

    wp = sub.add_parser("wavepacket-report",
                        help="packet spread, collapse diffusion, overlap bound")
    _add_common(wp)
    wp.add_argument("--t", type=float, default=0.52, metavar="S",
                    help="total drift time (s)")
    wp.add_argument("--lambda", dest="lam", type=float, default=0.0)
    wp.add_argument("--r-c", type=float, default=1e-7, metavar="M")
    wp.add_argument("--safety", type=float, default=0.1)
    wp.add_argument("--report", default=None, metavar="JSON")
    wp.add_argument("--units", choices=["si", "paper"], default="si")
    wp.set_defaults(handler=_cmd_wavepacket_report)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.handler(args)
    except (SchemaError, DegenerateScanError, SingularFitError) as exc:
        print(f"cslmzi: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (OSError, ValueError) as exc:
        print(f"cslmzi: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (FitConvergenceError, QuadratureError) as exc:
        print(f"cslmzi: numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


def entrypoint() -> None:
    logging.basicConfig(
        level=logging.INFO, format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    sys.exit(main())
