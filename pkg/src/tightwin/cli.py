"""Command-line frontend.

Subcommands: ``slepian``, ``design``, ``sweep``, ``analyze``, ``verify`` and
``schema-check``.  Exit codes: 0 success, 2 usage, 3 solver failure,
4 verification failure, 5 I/O error.
"""
from __future__ import annotations

import argparse
import datetime as _dt
import json
import logging
import os
import sys
from fractions import Fraction
from importlib import metadata
from pathlib import Path

import numpy as np

from . import io as tio
from .exceptions import TightwinError, ZeroFrameDiagonalError
from .gabor import GaborParams, canonical_tight, is_tight, verify_reconstruction
from .solver import SolverConfig, Status, init_from_slepian, solve, solve_continuation, sweep
from .spectral import build_q, concentration_ratio, sidelobe_energy, slepian, spectrum

logger = logging.getLogger("tightwin")

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_SOLVER = 3
EXIT_VERIFY = 4
EXIT_IO = 5

VERIFY_TOL = 1e-10

CONVENTIONS = {
    "M_default": "M = K when --M is omitted",
    "L_default": "L = 4K (verification only) when --L is omitted",
    "sampling_interval": 1,
    "slepian_a_default": "a = K/4 for slepian when --a is omitted (metadata only)",
    "frequency_units": "cycles per sample; the nyquist column is scaled so Nyquist = 1",
    "frame_constant": "designed windows have lambda = M / a",
}


class UsageError(Exception):
    """Bad command-line arguments detected after parsing."""


def _version() -> str:
    try:
        return metadata.version("tightwin")
    except metadata.PackageNotFoundError:
        return "0+unknown"


def _timestamp() -> str:
    # SOURCE_DATE_EPOCH pins the timestamp so manifests reproduce bitwise too
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    if epoch is not None:
        t = _dt.datetime.fromtimestamp(int(epoch), tz=_dt.timezone.utc)
    else:
        t = _dt.datetime.now(tz=_dt.timezone.utc)
    return t.isoformat(timespec="seconds")


def parse_p(text: str) -> Fraction | float:
    """Parse ``"n/K"`` into an exact Fraction, anything else into a float."""
    text = text.strip()
    try:
        if "/" in text:
            num, den = text.split("/")
            return Fraction(int(num), int(den))
        return float(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise argparse.ArgumentTypeError(f"invalid p {text!r}: use n/K or a decimal") from exc


def _positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from exc
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {v}")
    return v


def _positive_float(text: str) -> float:
    try:
        v = float(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}") from exc
    if not v > 0:
        raise argparse.ArgumentTypeError(f"expected a positive number, got {v}")
    return v


def _p_fields(p) -> dict:
    if isinstance(p, Fraction):
        return {"p": float(p), "p_fraction": f"{p.numerator}/{p.denominator}"}
    return {"p": float(p), "p_fraction": None}


def _p_str(p) -> str:
    return f"{p.numerator}/{p.denominator}" if isinstance(p, Fraction) else repr(float(p))


def _check_p(p) -> None:
    if not 0 < p < 1:
        raise UsageError(f"p must lie in (0, 1) for design, got {_p_str(p)}")


def _params(args) -> GaborParams:
    M = args.M if args.M is not None else args.K
    L = getattr(args, "L", None)
    return GaborParams.for_design(args.K, args.a, M=M, L=L)


def _max_condition(trace):
    conds = [c for c in trace.condition_numbers if np.isfinite(c)]
    return max(conds) if conds else None


def _window_metrics(w, p, params: GaborParams) -> dict:
    Q = build_q(float(p), params.K, dtype=np.longdouble)
    report = is_tight(w, params)
    return {
        "p": float(p),
        "concentration": concentration_ratio(w, Q),
        "sidelobe_energy": sidelobe_energy(w, Q),
        "is_tight": report.tight,
        "lambda": report.lam,
    }


def _write_manifest(path: Path, command: str, args, parameters: dict, outputs: list) -> Path:
    manifest = {
        "command": command,
        "argv": list(args._argv),
        "parameters": parameters,
        "tool_version": _version(),
        "timestamp": _timestamp(),
        "outputs": [str(o) for o in outputs],
        "conventions": CONVENTIONS,
    }
    return tio.write_json(path, manifest)


def _solver_config(args, dump_dir=None) -> SolverConfig:
    return SolverConfig(delta=args.delta, i_max=args.imax, dump_dir=dump_dir)


def _emit(args, msg: str) -> None:
    if not args.quiet:
        print(msg)


# ---------------------------------------------------------------- commands


def cmd_slepian(args) -> int:
    p = args.p
    _check_p(p)
    a = args.a if args.a is not None else max(args.K // 4, 1)
    M = args.M if args.M is not None else args.K
    w = slepian(float(p), args.K)
    out = Path(args.out or f"slepian_p{tio.p_label(p, args.K)}.json")
    out.parent.mkdir(parents=True, exist_ok=True)
    wf = tio.WindowFile(coeffs=w, K=args.K, a=a, M=M, lam=None, **_p_fields(p))
    outputs = [
        tio.write_window_json(out, wf),
        tio.write_window_csv(out.with_suffix(".csv"), w),
    ]
    manifest = out.with_name(out.stem + "_manifest.json")
    _write_manifest(
        manifest, "slepian", args, {"K": args.K, "a": a, "M": M, "p": _p_str(p)}, outputs
    )
    _emit(args, f"wrote {out}")
    return EXIT_OK


def _load_init(spec: str, p, params: GaborParams) -> np.ndarray:
    if spec == "slepian":
        return init_from_slepian(float(p), params)
    if not spec.startswith("file:"):
        raise UsageError(
            f"--init must be 'slepian', 'continuation' or 'file:<path>', got {spec!r}"
        )
    wf = tio.read_window(spec[len("file:"):])
    if wf.K != params.K:
        raise UsageError(f"initial window has K={wf.K}, expected {params.K}")
    # any window with nonzero residue classes becomes tight after rescaling;
    # for an already tight window this only changes the frame constant
    return canonical_tight(wf.coeffs, params.M / params.a, params)


def _write_result(outdir: Path, stem: str, res, p, params: GaborParams) -> tuple[list, dict]:
    label = tio.p_label(p, params.K)
    lam = params.M / params.a
    wf = tio.WindowFile(
        coeffs=res.window, K=params.K, a=params.a, M=params.M, lam=lam, **_p_fields(p)
    )
    metrics = _window_metrics(res.window, p, params)
    metrics.update(
        status=res.trace.status.value,
        iterations=res.trace.iterations,
        final_grad_norm=res.trace.final_grad_norm,
        max_condition_number=_max_condition(res.trace),
    )
    outputs = [
        tio.write_window_json(outdir / f"{stem}.json", wf),
        tio.write_window_csv(outdir / f"{stem}.csv", res.window),
        tio.write_trace_csv(outdir / f"trace_p{label}.csv", res.trace),
        tio.write_json(outdir / f"{stem}_metrics.json", metrics),
    ]
    return outputs, metrics


def cmd_design(args) -> int:
    p = args.p
    _check_p(p)
    params = _params(args)
    cfg = _solver_config(args, args.dump_systems)
    if args.init == "continuation":
        res = solve_continuation(float(p), params, cfg)
    else:
        res = solve(_load_init(args.init, p, params), float(p), params, cfg)
    out = Path(args.out or f"design_p{tio.p_label(p, params.K)}.json")
    outdir = out.parent
    outdir.mkdir(parents=True, exist_ok=True)
    outputs, metrics = _write_result(outdir, out.stem, res, p, params)
    parameters = {
        "K": params.K, "a": params.a, "M": params.M, "p": _p_str(p),
        "delta": args.delta, "imax": args.imax, "init": args.init,
    }
    _write_manifest(out.with_name(out.stem + "_manifest.json"), "design", args, parameters, outputs)
    status = res.trace.status
    _emit(
        args,
        f"{status.value} after {res.trace.iterations} iterations, "
        f"gradient {res.trace.final_grad_norm:.3e}, sidelobe energy "
        f"{metrics['sidelobe_energy']:.6e}",
    )
    if not status.ok:
        print(f"error: solver stopped with status {status.value}: {res.trace.message}",
              file=sys.stderr)
        return EXIT_SOLVER
    return EXIT_OK


def cmd_sweep(args) -> int:
    params = _params(args)
    if args.pmax >= params.K:
        raise UsageError(f"--pmax must be below K={params.K}")
    ps = [Fraction(n, params.K) for n in range(1, args.pmax + 1)]
    outdir = Path(args.outdir or "sweep")
    outdir.mkdir(parents=True, exist_ok=True)
    results = sweep([float(p) for p in ps], params, _solver_config(args))
    outputs, rows = [], []
    for n, (p, res) in enumerate(zip(ps, results), start=1):
        files, metrics = _write_result(outdir, f"window_p{tio.p_label(p, params.K)}", res, p, params)
        outputs += files
        rows.append({
            "p_numerator": n,
            "iterations": res.trace.iterations,
            "status": res.trace.status.value,
            "concentration": metrics["concentration"],
            "sidelobe_energy": metrics["sidelobe_energy"],
        })
        _emit(args, f"p={n}/{params.K}: {res.trace.status.value}, {res.trace.iterations} iterations")
    outputs.append(tio.write_summary_csv(outdir / "summary.csv", rows))
    parameters = {
        "K": params.K, "a": params.a, "M": params.M,
        "p_range": f"1/{params.K}..{args.pmax}/{params.K}",
        "delta": args.delta, "imax": args.imax,
    }
    _write_manifest(outdir / "manifest.json", "sweep", args, parameters, outputs)
    failed = [r for r in rows if not Status(r["status"]).ok]
    if failed:
        print(f"error: {len(failed)} of {len(rows)} designs did not converge", file=sys.stderr)
        return EXIT_SOLVER
    return EXIT_OK


def cmd_analyze(args) -> int:
    outdir = Path(args.outdir or ".")
    outdir.mkdir(parents=True, exist_ok=True)
    outputs = []
    for path in args.windows:
        wf = tio.read_window(path)
        p = args.p if args.p is not None else wf.p
        if p is None:
            raise UsageError(f"{path} records no p; pass --p")
        if not 0 < p <= 1:
            raise UsageError(f"p must lie in (0, 1], got {_p_str(p)}")
        if args.num_points is not None and args.num_points < wf.K:
            raise UsageError(f"--num-points={args.num_points} must be at least K={wf.K}")
        params = GaborParams.for_design(wf.K, wf.a, M=wf.M)
        spec = spectrum(wf.coeffs, args.num_points)
        stem = Path(path).stem
        outputs.append(tio.write_spectrum_csv(outdir / f"{stem}_spectrum.csv", spec))
        metrics = _window_metrics(wf.coeffs, p, params)
        outputs.append(tio.write_json(outdir / f"{stem}_metrics.json", metrics))
        _emit(args, f"{path}: sidelobe energy {metrics['sidelobe_energy']:.6e}, "
                    f"tight={metrics['is_tight']}")
    parameters = {"windows": [str(w) for w in args.windows], "num_points": args.num_points,
                  "p": None if args.p is None else _p_str(args.p)}
    _write_manifest(outdir / "analyze_manifest.json", "analyze", args, parameters, outputs)
    return EXIT_OK


def cmd_verify(args) -> int:
    wf = tio.read_window(args.window)
    L = args.L if args.L is not None else 4 * wf.K
    params = GaborParams(L=L, K=wf.K, a=wf.a, M=wf.M)
    report = is_tight(wf.coeffs, params)
    err = None
    if report.tight:
        err = verify_reconstruction(wf.coeffs, params, trials=args.trials, seed=args.seed)
    passed = report.tight and err is not None and err < VERIFY_TOL
    result = {
        "tight": report.tight,
        "lambda": report.lam,
        "max_deviation": report.max_deviation,
        "max_relative_error": err,
        "passed": passed,
        "L": L,
        "trials": args.trials,
        "seed": args.seed,
    }
    out = Path(args.out or Path(args.window).with_name(Path(args.window).stem + "_verify.json"))
    out.parent.mkdir(parents=True, exist_ok=True)
    tio.write_json(out, result)
    _emit(args, f"tight: {report.tight} (lambda {report.lam:.12g}, "
                f"max relative deviation {report.max_deviation:.3e})")
    if err is not None:
        _emit(args, f"max round-trip relative error: {err:.3e}")
    if not passed:
        reason = ("window is not tight" if not report.tight
                  else f"reconstruction error {err:.3e} exceeds {VERIFY_TOL:.0e}")
        print(f"error: verification failed: {reason}", file=sys.stderr)
        return EXIT_VERIFY
    return EXIT_OK


def cmd_schema_check(args) -> int:
    code = EXIT_OK
    for path in args.files:
        try:
            kind = tio.schema_check(path)
        except tio.SchemaError as exc:
            print(f"FAIL {exc}", file=sys.stderr)
            code = EXIT_VERIFY
        else:
            _emit(args, f"ok   {path} ({kind})")
    return code


# ------------------------------------------------------------------ parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="output file path")
    common.add_argument("--outdir", help="output directory")
    common.add_argument("--seed", type=int, default=0, help="random seed (default 0)")
    common.add_argument("--quiet", action="store_true", help="suppress progress output")
    common.add_argument("--delta", type=_positive_float, default=1e-15,
                        help="gradient-norm stopping threshold (default 1e-15)")
    common.add_argument("--imax", type=_positive_int, default=1000,
                        help="maximum Newton iterations (default 1000)")
    common.add_argument("-v", "--verbose", action="count", default=0)

    parser = argparse.ArgumentParser(
        prog="tightwin", description="Design and check tight minimum-sidelobe Gabor windows."
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {_version()}")
    sub = parser.add_subparsers(dest="command", required=True)

    def lattice(sp, with_a=True):
        sp.add_argument("--K", type=_positive_int, required=True, help="window length")
        if with_a:
            sp.add_argument("--a", type=_positive_int, required=True, help="hop size")
        sp.add_argument("--M", type=_positive_int, help="frequency channels (default K)")

    sp = sub.add_parser("slepian", parents=[common], help="compute a Slepian window")
    lattice(sp, with_a=False)
    sp.add_argument("--a", type=_positive_int, help="hop recorded in the file (default K/4)")
    sp.add_argument("--p", type=parse_p, required=True, help="mainlobe width, n/K or decimal")
    sp.set_defaults(func=cmd_slepian)

    sp = sub.add_parser("design", parents=[common], help="design one tight window")
    lattice(sp)
    sp.add_argument("--p", type=parse_p, required=True, help="mainlobe width, n/K or decimal")
    sp.add_argument("--init", default="slepian", 
                    help="'slepian' (default), 'file:<window.json>', or 'continuation' "
                         "(warm-start along 1/K, 2/K, ... up to p)")
    sp.add_argument("--dump-systems", metavar="DIR",
                    help="write the Newton matrix of every iteration as CSV into DIR")
    sp.set_defaults(func=cmd_design)

    sp = sub.add_parser("sweep", parents=[common], help="warm-started sweep p = 1/K .. pmax/K")
    lattice(sp)
    sp.add_argument("--pmax", type=_positive_int, required=True, help="largest numerator")
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("analyze", parents=[common], help="spectrum CSV and metrics JSON")
    sp.add_argument("windows", nargs="+", help="window JSON files")
    sp.add_argument("--p", type=parse_p, help="mainlobe width (default: from the file)")
    sp.add_argument("--num-points", type=_positive_int, help="spectrum samples (default 16K)")
    sp.set_defaults(func=cmd_analyze)

    sp = sub.add_parser("verify", parents=[common], help="tightness and round-trip check")
    sp.add_argument("window", help="window JSON file")
    sp.add_argument("--L", type=_positive_int, help="signal length (default 4K)")
    sp.add_argument("--trials", type=_positive_int, default=10)
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("schema-check", parents=[common], help="validate produced files")
    sp.add_argument("files", nargs="+")
    sp.set_defaults(func=cmd_schema_check)
    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    args._argv = argv
    level = logging.WARNING if args.quiet else (logging.DEBUG if args.verbose > 1 else
                                                logging.INFO if args.verbose else logging.WARNING)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (UsageError, ZeroFrameDiagonalError) as exc:
        print(f"{parser.prog} {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (tio.SchemaError, json.JSONDecodeError) as exc:
        print(f"{parser.prog} {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"{parser.prog} {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (TightwinError, ValueError) as exc:
        print(f"{parser.prog} {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
