"""Command-line entry point.

Exit codes: 0 success, 1 experiment criterion failed, 2 usage or config
error, 3 numerical abort (NumericalBlowup or ResolutionLost).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import scipy.fft as sfft

from .config import ConfigError, RunConfig, emit, load_config, parse_config
from .experiments import (
    diffusive_floor,
    picard_contraction_experiment,
    radius_decay,
    viscosity_sweep,
)
from .io import read_checkpoint, write_checkpoint, write_json, write_manifest
from .laws import certify
from .solver import NumericalAbort, run

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_ABORT = 0, 1, 2, 3

_DEFAULT_NU_GRID = (0.0,) + tuple(2.0**-j for j in range(11))
_DEFAULT_BETA_GRID = (0.25, 0.5, 0.75, 1.0)


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="activescalar", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    for name, text in [
        ("check-symbols", "scan a constitutive law and certify its symbol assumptions"),
        ("simulate", "integrate one run and record its diagnostic series"),
        ("sweep", "vanishing-viscosity sweep against the inviscid run"),
        ("radius", "track the fitted analyticity radius (diffusive floor when kappa > 0)"),
        ("picard", "bisect the Picard window until the iterates contract"),
    ]:
        sp = sub.add_parser(name, help=text)
        sp.add_argument("--config", help="config file (defaults apply when omitted)")
        sp.add_argument("--set", action="append", default=[], metavar="SECTION.KEY=VALUE",
                        help="override one config value; repeatable")
        sp.add_argument("--out", help="output directory (overrides output.dir)")
        sp.add_argument("--threads", type=int, default=1, help="FFT worker threads")
    info = sub.add_parser("info", help="print checkpoint metadata")
    info.add_argument("checkpoint")
    return p


def _load(args) -> RunConfig:
    if args.config:
        return load_config(args.config, args.set)
    return parse_config("", args.set)


def _out_dir(args, cfg: RunConfig) -> Path:
    out = Path(args.out or cfg.output.dir or f"activescalar-out/{args.command}")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _check_symbols(cfg: RunConfig, out: Path):
    law = cfg.make_law()
    L = cfg.check.L or (128.0 if law.d == 2 else 64.0)
    grid = cfg.check.nu_grid or (_DEFAULT_BETA_GRID if law.family == "SIPM" else _DEFAULT_NU_GRID)
    if law.family == "Table":
        grid = (0.0,)
    report = certify(law, L, grid)
    print(report.table())
    path = out / "report.json"
    write_json(path, report.to_dict())
    return (EXIT_OK if report.passed else EXIT_FAIL), [path], "pass" if report.passed else "fail"


def _simulate(cfg: RunConfig, out: Path):
    res = run(cfg)
    files = [out / "series.csv", out / "final.ascl"]
    res.series.to_csv(files[0])
    write_checkpoint(files[1], res.final)
    if not res.ok:
        files.append(out / "last_good.ascl")
        write_checkpoint(files[-1], res.last_good)
    summary = {"status": res.status, "message": res.message, "steps": res.steps,
               "t_final": res.final.t, "t_lost": res.t_lost}
    files.append(out / "summary.json")
    write_json(files[-1], summary)
    print(f"{res.status}: {res.message} ({res.steps} steps)")
    return (EXIT_OK if res.ok else EXIT_ABORT), files, res.status


def _sweep(cfg: RunConfig, out: Path):
    result = viscosity_sweep(cfg)
    files = result.write(out)
    s = result.summary()
    print(json.dumps({k: s[k] for k in ("T", "norm_kind", "final_errors", "statuses",
                                        "strictly_decreasing", "measured_rate")}, indent=2))
    if not result.complete:
        return EXIT_ABORT, files, "member run aborted"
    return (EXIT_OK if s["passed"] else EXIT_FAIL), files, "pass" if s["passed"] else "fail"


def _radius(cfg: RunConfig, out: Path):
    if cfg.kappa > 0:
        series = diffusive_floor(cfg)
        control_cfg = cfg.with_values(physics={"kappa": cfg.radius.compare_kappa})
        if cfg.radius.compare_kappa > 0:
            control = diffusive_floor(control_cfg)
        else:
            control = radius_decay(control_cfg)
        tv = control.times[control.valid]
        tail = control.tau_hat[control.valid][tv >= 0.5 * tv[-1]] if tv.size else tv
        control_floor = float(tail.min()) if tail.size else float("nan")
        extra = {"control_kappa": cfg.radius.compare_kappa, "control_floor": control_floor,
                 "floor_exceeds_control": bool(series.floor > control_floor)}
        passed = series.summary()["passed"] and extra["floor_exceeds_control"]
    else:
        series = radius_decay(cfg)
        extra = {}
        passed = series.summary()["passed"] and series.r2 >= 0.9
    files = series.write(out)
    summary = {**series.summary(), **extra, "passed": bool(passed)}
    write_json(out / "summary.json", summary)
    print(json.dumps(summary, indent=2, default=str))
    return (EXIT_OK if passed else EXIT_FAIL), files, "pass" if passed else "fail"


def _picard(cfg: RunConfig, out: Path):
    exp = picard_contraction_experiment(cfg)
    files = exp.write(out)
    print(json.dumps(exp.summary(), indent=2))
    return (EXIT_OK if exp.passed else EXIT_FAIL), files, "pass" if exp.passed else "fail"


_COMMANDS = {
    "check-symbols": _check_symbols,
    "simulate": _simulate,
    "sweep": _sweep,
    "radius": _radius,
    "picard": _picard,
}


def _info(path) -> int:
    try:
        header, theta, law = read_checkpoint(path)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    meta = dict(header.__dict__)
    meta["law"] = law.label
    meta["hermitian_defect"] = theta.hermitian_defect()
    print(json.dumps(meta, indent=2))
    return EXIT_OK


def main(argv=None) -> int:
    parser = _parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    if args.command == "info":
        return _info(args.checkpoint)
    if args.threads < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return EXIT_USAGE
    try:
        cfg = _load(args)
    except ConfigError as exc:
        for e in exc.errors:
            print(f"config error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    out = _out_dir(args, cfg)
    cfg = cfg.with_values(output={"dir": str(out)})
    cfg_path = out / "config.ini"
    cfg_path.write_text(emit(cfg), encoding="utf-8")
    try:
        with sfft.set_workers(args.threads):
            code, files, status = _COMMANDS[args.command](cfg, out)
    except NumericalAbort as exc:
        files = []
        if exc.last_good is not None:
            files.append(out / "last_good.ascl")
            write_checkpoint(files[0], exc.last_good)
        print(f"{exc.status}: {exc}", file=sys.stderr)
        code, status = EXIT_ABORT, exc.status
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        code, files, status = EXIT_USAGE, [], "usage error"
    write_manifest(out, args.command, status, code, [cfg_path, *files],
                   {"threads": args.threads, "argv": list(argv if argv is not None else sys.argv[1:])})
    return code


if __name__ == "__main__":
    sys.exit(main())
