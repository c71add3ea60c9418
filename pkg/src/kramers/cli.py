"""Command-line front end.

Exit codes: 0 success, 1 invalid input (or a failed self-test), 2 numerical
failure, 3 internal error.
"""

from __future__ import annotations

import argparse
import math
import sys
import traceback
from pathlib import Path

from . import __version__
from .config import ConfigError, load_config
from .integrator import IntegrationError
from .medium import ResonanceError
from .quadrature import QuadratureError

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERICAL, EXIT_INTERNAL = 0, 1, 2, 3


def _bloch_str(S) -> str:
    return "(" + ", ".join(f"{x:+.6f}" for x in S) + ")"


def _print_class(label: str, cls, T_min: float) -> None:
    line = f"{label}: {cls.kind}"
    if cls.period_s is not None:
        line += f"  period {cls.period_s:.9g} s = {cls.period_s / T_min:.6f} T_min"
    print(line)
    print(f"final Bloch point: {_bloch_str(cls.final_bloch)}")
    reason = cls.diagnostics.get("reason")
    if reason:
        print(f"  note: {reason}")


def _result_meta(res, extra=None) -> dict:
    meta = dict(res.meta)
    meta["classification"] = res.classification.kind
    if res.classification.period_s is not None:
        meta["period_s"] = res.classification.period_s
    if res.backward_classification is not None:
        meta["classification_t_to_minus_inf"] = res.backward_classification.kind
    meta.update(extra or {})
    return meta


def _write_partial(err: IntegrationError, out: Path, sc, fmt: str, extras=()) -> None:
    from .output import write_trajectory

    if err.partial is None:
        print("no samples were completed; nothing written", file=sys.stderr)
        return
    p = out.with_name(out.stem + ".partial" + out.suffix)
    write_trajectory(p, err.partial, sc, {"status": "integration failed", "error": str(err)}, fmt, extras)
    print(f"partial trajectory ({len(err.partial.t)} samples) written to {p}", file=sys.stderr)


# --------------------------------------------------------------------------
# subcommands
# --------------------------------------------------------------------------

def cmd_run(args) -> int:
    from .output import write_trajectory
    from .runner import run_scenario

    sc = load_config(args.config)
    fmt = args.format or sc.run.format
    if fmt not in ("csv", "jsonl"):
        raise ConfigError(f"unknown format {fmt!r}; expected csv or jsonl", "--format")
    out = Path(args.out) if args.out else Path(args.config).with_suffix("." + fmt)
    try:
        res = run_scenario(sc)
    except IntegrationError as err:
        _write_partial(err, out, sc, fmt)
        raise
    write_trajectory(out, res.trajectory, sc, _result_meta(res), fmt)
    T = res.meta["T_min_s"]
    print(f"wrote {len(res.trajectory.t)} samples to {out}")
    _print_class("classification", res.classification, T)
    if res.backward_classification is not None:
        _print_class("t -> -inf", res.backward_classification, T)
    return EXIT_OK


def cmd_figure(args) -> int:
    from .output import write_trajectory
    from .presets import FIGURES, get_preset
    from .runner import run_scenario

    try:
        preset = get_preset(args.id)
    except KeyError:
        print(f"error: unknown figure {args.id!r}; available: {', '.join(FIGURES)}", file=sys.stderr)
        return EXIT_VALIDATION
    outdir = Path(args.out)
    out = outdir / f"fig{preset.id}.{args.format}"
    sc = preset.scenario
    try:
        res = run_scenario(sc)
    except IntegrationError as err:
        _write_partial(err, out, sc, args.format, preset.extras)
        raise
    extra = {"figure": preset.id, "note": preset.note, "expected": preset.expected}
    if preset.id == "2c":
        ini = sc.initial
        D = abs(2.0 * ini.rho11 - 1.0)
        extra["T_spin_s"] = res.meta["T_min_s"] / D if D > 0 else math.inf
        extra["T_spin_over_Tmin"] = 1.0 / D if D > 0 else math.inf
    write_trajectory(out, res.trajectory, sc, _result_meta(res, extra), args.format, preset.extras)
    T = res.meta["T_min_s"]
    print(f"figure {preset.id}: {preset.note}")
    print(f"wrote {len(res.trajectory.t)} samples to {out}")
    _print_class("classification", res.classification, T)
    if res.backward_classification is not None:
        _print_class("t -> -inf", res.backward_classification, T)
    if "T_spin_s" in extra:
        print(f"T_spin = {extra['T_spin_s']:.9g} s = {extra['T_spin_over_Tmin']:.6f} T_min")
    if res.classification.kind != preset.expected:
        print(f"warning: expected {preset.expected}", file=sys.stderr)
    return EXIT_OK


def cmd_sweep(args) -> int:
    from .sweep import load_sweep_spec, run_sweep

    spec = load_sweep_spec(args.spec)
    out = Path(args.out) if args.out else Path(args.spec).with_suffix(".records.jsonl")
    if args.workers < 1:
        raise ConfigError("must be at least 1", "--workers")

    def progress(rec, done, total):
        if not args.quiet:
            print(f"[{done}/{total}] h={rec['handedness']:+d} ratio={rec['ratio']:g} "
                  f"phase={rec['phase_deg']:g} g_sp={rec['g_sp']}: {rec['kind']}", flush=True)

    recs = run_sweep(spec, out=out, workers=args.workers, resume=args.resume, progress=progress)
    counts: dict = {}
    for r in recs:
        counts[r["kind"]] = counts.get(r["kind"], 0) + 1
    print(f"wrote {len(recs)} records to {out}")
    print("  " + ", ".join(f"{k}: {v}" for k, v in sorted(counts.items())))
    n_err = sum(r["status"] != "ok" for r in recs)
    if n_err:
        print(f"  {n_err} points failed and are recorded as undetermined", file=sys.stderr)
    return EXIT_OK


def cmd_report(args) -> int:
    from .report import format_report, parameter_report

    sc = load_config(args.config)
    rep = parameter_report(sc.to_system())
    print(format_report(rep))
    errs = rep.consistency_errors()
    if errs:
        print("inconsistent: " + "; ".join(errs), file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


def cmd_selftest(args) -> int:
    from .checks import SelftestOptions, run_checks

    opts = SelftestOptions(fault=args.inject_fault, rtol=args.rtol)
    results = run_checks(args.only, opts, report=lambda r: print(r.line(), flush=True))
    n_fail = sum(not r.passed for r in results)
    print(f"{len(results) - n_fail}/{len(results)} checks passed")
    return EXIT_OK if n_fail == 0 else EXIT_VALIDATION


# --------------------------------------------------------------------------
# entry point
# --------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="kramers", description="Spin dynamics of a Kramers atom near a gyroelectric nanosphere.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("--debug", action="store_true", help="print tracebacks on internal errors")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="integrate one configuration file")
    r.add_argument("config")
    r.add_argument("--out", help="output path (default: config path with the format suffix)")
    r.add_argument("--format", choices=("csv", "jsonl"), help="overrides [run] format")
    r.set_defaults(func=cmd_run)

    f = sub.add_parser("figure", help="reproduce a named figure preset")
    f.add_argument("id", help="2a 2b 2c 3a 3bi 3bii 3biii 4a 4b 5a 5b 6a 6b")
    f.add_argument("--out", default="figures", help="output directory (default: ./figures)")
    f.add_argument("--format", choices=("csv", "jsonl"), default="csv")
    f.set_defaults(func=cmd_figure)

    s = sub.add_parser("sweep", help="phase-diagram sweep over a parameter grid")
    s.add_argument("spec")
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--resume", action="store_true", help="skip points already in the manifest")
    s.add_argument("--out", help="records path (default: <spec>.records.jsonl)")
    s.add_argument("--quiet", action="store_true")
    s.set_defaults(func=cmd_sweep)

    rp = sub.add_parser("report", help="print derived physical scales")
    rp.add_argument("config")
    rp.set_defaults(func=cmd_report)

    t = sub.add_parser("selftest", help="run the invariant and acceptance suite")
    t.add_argument("--inject-fault", choices=("population_sum",), help="break the spin-to-field map on purpose")
    t.add_argument("--rtol", type=float, help="integrator rtol override (deliberate degradation)")
    t.add_argument("--only", nargs="+", metavar="ID", help="check ids, e.g. 1 2 8 I1")
    t.set_defaults(func=cmd_selftest)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, KeyError) as err:
        msg = err.args[0] if isinstance(err, KeyError) else str(err)
        print(f"error: {msg}", file=sys.stderr)
        return EXIT_VALIDATION
    except ValueError as err:
        print(f"error: invalid input: {err}", file=sys.stderr)
        return EXIT_VALIDATION
    except (IntegrationError, QuadratureError, ResonanceError, FloatingPointError) as err:
        print(f"numerical failure: {err}", file=sys.stderr)
        return EXIT_NUMERICAL
    except Exception as err:
        if args.debug:
            traceback.print_exc()
        print(f"internal error: {type(err).__name__}: {err}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
