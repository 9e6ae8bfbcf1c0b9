"""Experiment runner: analytical sweeps, simulation sweeps, validation reports
and per-figure data exports.

Exit codes: 0 success, 1 validation tolerance failure, 2 usage/config error,
3 numerical failure (quadrature non-convergence).

Sweep syntax is ``name:start:stop:count`` with the threshold grid given in dB
(converted at this boundary); other variables use display units (theta_c in
rad, lambda1 per km^2, r_los in m). Config values can be overridden through
``MMWHCN_<SECTION>__<KEY>`` environment variables.
"""

from __future__ import annotations

import argparse
import json
import secrets
import sys
import time
from pathlib import Path

import numpy as np

from . import coverage as cov
from . import geometry, intensity, montecarlo
from .curves import CoverageCurve, write_curves_csv, write_sidecar
from .model import ConfigError, LinkState, PRESETS, load_config, preset
from .quadrature import QuadratureError

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_USAGE = 2
EXIT_NUMERICAL = 3

_DUMP_CLASSES = {
    "los_mbs": (1, LinkState.LOS),
    "nlos_mbs": (1, LinkState.NLOS),
    "los_sbs": (2, LinkState.LOS),
    "nlos_sbs": (2, LinkState.NLOS),
}

FIGURES = (
    "fig2_distance",
    "fig3_association",
    "fig4_setup1",
    "fig5_setup2",
    "fig6_circular",
    "fig7_los_nlos",
    "fig8_theta_c",
    "fig9_lambda1",
    "fig10_ratio",
)


class UsageError(Exception):
    pass


def parse_sweep(text: str) -> cov.SweepSpec:
    parts = text.split(":")
    if len(parts) != 4:
        raise UsageError(f"sweep must be name:start:stop:count, got {text!r}")
    name = parts[0]
    try:
        start, stop = float(parts[1]), float(parts[2])
        count = int(parts[3])
    except ValueError as exc:
        raise UsageError(f"malformed sweep {text!r}: {exc}") from exc
    if count < 1:
        raise UsageError("sweep count must be at least 1")
    if count == 1:
        values = (start,)
    else:
        values = tuple(np.linspace(start, stop, count))
    try:
        return cov.SweepSpec(name, values)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _load_cfg(args):
    if args.config:
        return load_config(args.config)
    return preset(args.preset)


def _resolve_seed(args) -> int:
    if getattr(args, "seed", None) is not None:
        return args.seed
    return secrets.randbits(32)


def _resolve_approaches(names) -> list:
    if not names or "all" in names:
        return list(cov.APPROACHES)
    out = []
    for n in names:
        try:
            out.append(cov.Approach(n))
        except ValueError:
            valid = ", ".join(a.value for a in cov.APPROACHES)
            raise UsageError(f"unknown approach {n!r}; valid: {valid}, all")
    return out


def _sidecar_payload(cfg, args, seed, extra=None):
    payload = {
        "command": " ".join(sys.argv) if sys.argv else "",
        "config_fingerprint": cfg.fingerprint(),
        "seed": seed,
        "created_unix": time.time(),
        "workers": getattr(args, "workers", 1),
    }
    payload.update(extra or {})
    return payload


def _simulate_curves(cfg, sweep, trials, seed, window, workers):
    """Monte Carlo curve along a sweep; threshold sweeps share one trial set,
    other sweeps re-simulate per point with a derived per-point seed."""
    if sweep.variable == "tau":
        return montecarlo.estimate_coverage(
            cfg, np.asarray(sweep.values), trials, seed, window, workers
        )
    probs = np.empty(len(sweep.values))
    err = np.empty(len(sweep.values))
    for i, value in enumerate(sweep.values):
        cfg_i = cov._apply_sweep_value(cfg, sweep.variable, value)
        point_seed = montecarlo.splitmix64(seed, i)
        c = montecarlo.estimate_coverage(
            cfg_i,
            [10.0 * np.log10(cfg_i.tau_macro)],
            trials,
            point_seed,
            window,
            workers,
        )
        probs[i], err[i] = c.probabilities[0], c.stderr[0]
    return CoverageCurve(
        sweep_variable=sweep.variable,
        values=np.asarray(sweep.values),
        probabilities=probs,
        approach="montecarlo",
        stderr=err,
        fingerprint=cfg.fingerprint(),
        metadata={"trials": trials, "master_seed": seed},
    )


def cmd_analyze(args) -> int:
    cfg = _load_cfg(args)
    sweep = parse_sweep(args.sweep)
    approaches = _resolve_approaches(args.approach)
    seed = _resolve_seed(args)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    curves = []
    diagnostics = {}
    for ap in approaches:
        curve = cov.coverage(cfg, ap, sweep, opts=_coverage_opts(args), workers=args.workers)
        curves.append(curve)
        diagnostics[ap.value] = curve.metadata
    stem = out_dir / f"analyze_{sweep.variable}"
    write_curves_csv(f"{stem}.csv", curves)
    write_sidecar(
        f"{stem}.json",
        _sidecar_payload(cfg, args, seed, {"sweep": args.sweep, "diagnostics": diagnostics}),
    )
    print(f"wrote {stem}.csv ({len(curves)} curves x {len(sweep.values)} points)")
    return EXIT_OK


def cmd_simulate(args) -> int:
    cfg = _load_cfg(args)
    sweep = parse_sweep(args.sweep)
    if args.trials < 1:
        raise UsageError("--trials must be at least 1")
    seed = _resolve_seed(args)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    window = args.window_radius

    if args.dump_realization:
        rng = montecarlo.trial_rng(seed, 0)
        n = geometry.dump_realization(
            cfg, window or geometry.default_window_radius(cfg), rng, args.dump_realization
        )
        print(f"wrote {args.dump_realization} ({n} stations)")

    if args.dump_trials:
        if sweep.variable != "tau":
            raise UsageError("--dump-trials applies to threshold sweeps (one trial set)")
        batch = montecarlo.run_trials(cfg, args.trials, seed, window, args.workers)
        montecarlo.dump_trials(batch, args.dump_trials)
        print(f"wrote {args.dump_trials}")
        curve = montecarlo.estimate_coverage(
            cfg, np.asarray(sweep.values), 0, seed, window, args.workers, batch=batch
        )
    else:
        curve = _simulate_curves(cfg, sweep, args.trials, seed, window, args.workers)
    stem = out_dir / f"simulate_{sweep.variable}"
    write_curves_csv(f"{stem}.csv", [curve])
    write_sidecar(
        f"{stem}.json",
        _sidecar_payload(
            cfg, args, seed, {"sweep": args.sweep, "trials": args.trials, "window": window}
        ),
    )
    print(f"wrote {stem}.csv")

    if args.dump_distances:
        tier, state = _DUMP_CLASSES[args.dump_distances]
        edges, density = montecarlo.estimate_nearest_distance_hist(
            cfg, tier, state, args.trials, args.bin_width, seed, window, args.workers
        )
        hist_path = out_dir / f"distances_{args.dump_distances}.csv"
        with open(hist_path, "w") as fh:
            fh.write("bin_left_m,bin_right_m,density_per_m\n")
            for i in range(len(density)):
                fh.write(
                    f"{float(edges[i])!r},{float(edges[i + 1])!r},{float(density[i])!r}\n"
                )
        print(f"wrote {hist_path}")
    return EXIT_OK


def cmd_validate(args) -> int:
    cfg = _load_cfg(args)
    sweep = parse_sweep(args.sweep)
    if sweep.variable != "tau":
        raise UsageError("validation compares threshold sweeps; use a tau sweep")
    if args.trials < 1:
        raise UsageError("--trials must be at least 1")
    approaches = _resolve_approaches(args.approach)
    seed = _resolve_seed(args)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    mc_curve = _simulate_curves(cfg, sweep, args.trials, seed, args.window_radius, args.workers)
    curves = [mc_curve]
    report = {"tolerance": args.tolerance, "approaches": {}, "sweep": args.sweep, "seed": seed}
    failed = []
    for ap in approaches:
        curve = cov.coverage(cfg, ap, sweep, opts=_coverage_opts(args), workers=args.workers)
        curves.append(curve)
        dev = np.abs(curve.probabilities - mc_curve.probabilities)
        entry = {
            "max_abs_deviation": float(dev.max()),
            "mean_abs_deviation": float(dev.mean()),
            "per_point": [float(d) for d in dev],
            "pass": bool(dev.max() <= args.tolerance),
        }
        report["approaches"][ap.value] = entry
        status = "pass" if entry["pass"] else "FAIL"
        print(
            f"{ap.value:20s} max|d|={entry['max_abs_deviation']:.4f} "
            f"mean|d|={entry['mean_abs_deviation']:.4f} {status}"
        )
        if not entry["pass"]:
            failed.append(ap.value)
    stem = out_dir / "validate"
    write_curves_csv(f"{stem}.csv", curves)
    write_sidecar(f"{stem}.json", _sidecar_payload(cfg, args, seed, {"report": report}))
    print(f"wrote {stem}.csv")
    return EXIT_VALIDATION if failed else EXIT_OK


def _coverage_opts(args):
    flavor = getattr(args, "intensity_flavor", None)
    if flavor in (None, "printed"):
        return cov.CoverageOptions()
    return cov.CoverageOptions(intensity_flavor=flavor)


def _plot_stub(path, csv_name, title, xlabel):
    lines = [
        f"# Plot stub for {csv_name} - any tool; columns are named in the header row.",
        f"# gnuplot example:",
        f"#   set datafile separator ','",
        f"#   set key autotitle columnheader; set xlabel '{xlabel}'; set ylabel 'probability'",
        f"#   plot for [a in system(\"awk -F, 'NR>1{{print $3}}' {csv_name} | sort -u\")] \\",
        f"#       '< grep -E \"^sweep_var|,'.a.',\" {csv_name}' using 2:4 with linespoints title a",
        f"# title: {title}",
    ]
    Path(path).write_text("\n".join(lines) + "\n")


def _figure_jobs(name, args):
    """Per-figure recipe: (config, sweep, approaches, simulate?, extras)."""
    t9 = "tau:-10:30:9"
    if name == "fig4_setup1":
        return preset("setup1"), parse_sweep(args.sweep or t9), list(cov.APPROACHES), True, {}
    if name == "fig5_setup2":
        return preset("setup2"), parse_sweep(args.sweep or t9), list(cov.APPROACHES), True, {}
    if name == "fig6_circular":
        cfg = preset("setup2").replace(hole_angle=2 * np.pi, hole_radius=100.0)
        return cfg, parse_sweep(args.sweep or t9), list(cov.APPROACHES), True, {}
    if name == "fig8_theta_c":
        cfg = preset("setup2")
        sweep = parse_sweep(args.sweep or "theta_c:0:6.2832:9")
        return cfg, sweep, list(cov.APPROACHES), True, {}
    if name == "fig9_lambda1":
        cfg = preset("setup2")
        sweep = parse_sweep(args.sweep or "lambda1:2:30:8")
        return cfg, sweep, list(cov.APPROACHES), True, {}
    if name == "fig10_ratio":
        cfg = preset("setup2")
        sweep = parse_sweep(args.sweep or "lambda2_over_lambda1:5:40:8")
        return cfg, sweep, list(cov.APPROACHES), True, {}
    raise UsageError(f"unknown figure {name!r}")


def _emit_figure(name, args, out_dir, seed) -> None:
    fig_dir = out_dir / name
    fig_dir.mkdir(parents=True, exist_ok=True)

    if name == "fig2_distance":
        cfg = preset("setup2")
        bin_width = args.bin_width
        batch = montecarlo.run_trials(cfg, args.trials, seed, args.window_radius, args.workers)
        rows = ["r_m,series,density_per_m"]
        for state, label in ((LinkState.LOS, "los_sbs"), (LinkState.NLOS, "nlos_sbs")):
            edges, density = montecarlo.estimate_nearest_distance_hist(
                cfg, 2, state, args.trials, bin_width, seed, batch=batch
            )
            centers = 0.5 * (edges[:-1] + edges[1:])
            pdf = intensity.nearest_bs_distance_pdf(cfg, 2, state, centers)
            for c, d, p in zip(centers, density, pdf):
                rows.append(f"{float(c)!r},sim_{label},{float(d)!r}")
                rows.append(f"{float(c)!r},analytic_{label},{float(p)!r}")
        (fig_dir / "distance_pdf.csv").write_text("\n".join(rows) + "\n")
        _plot_stub(fig_dir / "plot_stub.txt", "distance_pdf.csv",
                   "nearest small-cell distance density", "r [m]")
        return

    if name == "fig3_association":
        cfg = preset("setup2")
        r_grid = np.linspace(50, 400, args.points or 8)
        rows = ["r_los_m,series,probability,stderr"]
        for r_los in r_grid:
            cfg_i = cov._apply_sweep_value(cfg, "r_los", float(r_los))
            analytic = intensity.association_probabilities(cfg_i)
            est = montecarlo.estimate_association(
                cfg_i, args.trials, montecarlo.splitmix64(seed, int(r_los)),
                args.window_radius, args.workers,
            )
            for (k, s), p in analytic.items():
                label = f"tier{k}_{s.name.lower()}"
                rows.append(f"{float(r_los)!r},analytic_{label},{float(p)!r},")
                rows.append(
                    f"{float(r_los)!r},sim_{label},{float(est.prob[(k, s)])!r},"
                    f"{float(est.stderr[(k, s)])!r}"
                )
        (fig_dir / "association.csv").write_text("\n".join(rows) + "\n")
        _plot_stub(fig_dir / "plot_stub.txt", "association.csv",
                   "association probability vs mean LOS range", "r_los [m]")
        return

    if name == "fig7_los_nlos":
        cfg = preset("setup2")
        r_grid = tuple(np.linspace(50, 400, args.points or 8))
        sweep = cov.SweepSpec("r_los", r_grid)
        curves = []
        for states, label in (
            ((LinkState.LOS,), "los_holes_only"),
            ((LinkState.NLOS,), "nlos_holes_only"),
            ((LinkState.LOS, LinkState.NLOS), "both_holes"),
        ):
            opts = cov.CoverageOptions(hole_states=states)
            curve = cov.coverage(cfg, cov.Approach.ALL_HOLES, sweep, opts=opts, workers=args.workers)
            curve.approach = label
            curves.append(curve)
        write_curves_csv(fig_dir / "coverage_vs_rlos.csv", curves)
        _plot_stub(fig_dir / "plot_stub.txt", "coverage_vs_rlos.csv",
                   "hole-state contributions vs mean LOS range", "r_los [m]")
        return

    cfg, sweep, approaches, simulate, _ = _figure_jobs(name, args)
    curves = [
        cov.coverage(cfg, ap, sweep, opts=_coverage_opts(args), workers=args.workers)
        for ap in approaches
    ]
    if simulate and args.trials > 0:
        curves.append(
            _simulate_curves(cfg, sweep, args.trials, seed, args.window_radius, args.workers)
        )
    write_curves_csv(fig_dir / "coverage.csv", curves)
    _plot_stub(fig_dir / "plot_stub.txt", "coverage.csv",
               f"{name} coverage comparison", sweep.variable)


def cmd_figures(args) -> int:
    names = FIGURES if args.figure == "all" else (args.figure,)
    if args.figure != "all" and args.figure not in FIGURES:
        raise UsageError(f"unknown figure {args.figure!r}; valid: {', '.join(FIGURES)}, all")
    seed = _resolve_seed(args)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    for name in names:
        t0 = time.perf_counter()
        _emit_figure(name, args, out_dir, seed)
        print(f"{name}: done in {time.perf_counter() - t0:.1f}s")
    write_sidecar(out_dir / "figures.json", {"seed": seed, "figures": list(names)})
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mmwhcn",
        description="Two-tier mmWave network coverage: analytics, simulation, validation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, trials_default=None):
        src = p.add_mutually_exclusive_group()
        src.add_argument("--preset", default="setup2", choices=PRESETS)
        src.add_argument("--config", help="path to a TOML config file")
        p.add_argument("--out", default="out", help="output directory")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--workers", type=int, default=1)
        p.add_argument("--window-radius", type=float, default=None, help="override in metres")
        if trials_default is not None:
            p.add_argument("--trials", type=int, default=trials_default)

    p = sub.add_parser("analyze", help="evaluate analytical coverage curves")
    common(p)
    p.add_argument("--approach", action="append", default=None,
                   help="approach name or 'all' (repeatable)")
    p.add_argument("--sweep", default="tau:-10:30:9")
    p.add_argument("--intensity-flavor", choices=["printed", "baseline", "php"],
                   default="printed")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("simulate", help="Monte Carlo coverage estimation")
    common(p, trials_default=10000)
    p.add_argument("--sweep", default="tau:-10:30:9")
    p.add_argument("--dump-distances", choices=sorted(_DUMP_CLASSES), default=None)
    p.add_argument("--bin-width", type=float, default=10.0)
    p.add_argument("--dump-realization", default=None, help="write one realization CSV")
    p.add_argument("--dump-trials", default=None, help="write per-trial debug records CSV")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("validate", help="compare analytics against simulation")
    common(p, trials_default=10000)
    p.add_argument("--approach", action="append", default=None)
    p.add_argument("--sweep", default="tau:-10:30:9")
    p.add_argument("--tolerance", type=float, default=0.05)
    p.add_argument("--intensity-flavor", choices=["printed", "baseline", "php"],
                   default="printed")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("figures", help="emit per-figure data files")
    common(p, trials_default=4000)
    p.add_argument("figure", help=f"one of {', '.join(FIGURES)}, or 'all'")
    p.add_argument("--sweep", default=None)
    p.add_argument("--points", type=int, default=None)
    p.add_argument("--bin-width", type=float, default=10.0)
    p.add_argument("--intensity-flavor", choices=["printed", "baseline", "php"],
                   default="printed")
    p.set_defaults(func=cmd_figures)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    try:
        return args.func(args)
    except (UsageError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except QuadratureError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
