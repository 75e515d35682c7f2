"""Command-line interface.

Every subcommand writes its results into ``--out`` (a directory) together
with ``manifest.json``.  Exit codes: 0 success, 1 numerical best-effort
failure, 2 usage or parse error.  Errors are reported as one JSON object on
stderr.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

from . import __version__, appendix
from . import construction as con
from . import potential as pot
from .errors import IntegrationError, RefinementError, ShrinkBudgetExhausted
from .floquet import band_set
from .intervalset import IntervalSet, dimension_profile

EXIT_OK = 0
EXIT_NUMERIC = 1
EXIT_USAGE = 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


@dataclass
class RunManifest:
    subcommand: str
    inputs: list[str] = field(default_factory=list)
    parameters: dict = field(default_factory=dict)
    outputs: list[str] = field(default_factory=list)
    version: str = __version__
    duration_s: float = 0.0


# ---------------------------------------------------------------------------
# file helpers

def fmt(x) -> str:
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, float):
        return format(x, ".17g")
    return str(x)


def write_csv(path: Path, header: list[str], rows) -> Path:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(x) for x in row])
    return path


def write_json(path: Path, data) -> Path:
    with open(path, "w") as fh:
        json.dump(data, fh, indent=2, sort_keys=True, allow_nan=True)
        fh.write("\n")
    return path


def read_json(path: str):
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path}: invalid JSON ({exc})") from exc


def load_potential(path: str) -> pot.PeriodicPotential:
    data = read_json(path)
    if not isinstance(data, dict):
        raise UsageError(f"{path}: potential JSON must be an object")
    return pot.from_json_dict(data)


def load_config(path: str | None, seed: int | None, window: float | None) -> con.ShrinkConfig:
    data = read_json(path) if path else {}
    if not isinstance(data, dict):
        raise UsageError(f"{path}: config JSON must be an object")
    if seed is not None:
        data["seed"] = seed
    if window is not None:
        data["window"] = window
    return con.ShrinkConfig.from_json_dict(data)


# ---------------------------------------------------------------------------
# subcommands

def cmd_bands(args, out: Path, man: RunManifest):
    V = load_potential(args.potential)
    man.inputs.append(args.potential)
    man.parameters.update(window=args.window, tol=args.tol)
    bs = band_set(V, args.window, args.tol)
    rows = [(lo, hi, f.clipped_low, f.clipped_high, f.floored) for (lo, hi), f in zip(bs.bands, bs.flags)]
    man.outputs.append(str(write_csv(out / "bands.csv", ["lower", "upper", "clipped_low", "clipped_high", "floored"], rows)))
    trace = sorted(bs.samples)
    man.outputs.append(str(write_csv(out / "trace.csv", ["E", "delta"], trace)))
    return EXIT_OK


def cmd_dim(args, out: Path, man: RunManifest):
    data = read_json(args.intervalset)
    S = IntervalSet.from_json_dict(data)
    man.inputs.append(args.intervalset)
    man.parameters.update(eps=list(args.eps))
    prof = dimension_profile(S, args.eps)
    man.outputs.append(str(write_csv(out / "profile.csv", ["eps", "count", "ratio"], prof.to_csv_rows())))
    return EXIT_OK


def cmd_shrink(args, out: Path, man: RunManifest):
    V = load_potential(args.potential)
    cfg = load_config(args.config, args.seed, None)
    man.inputs += [p for p in (args.potential, args.config) if p]
    man.parameters.update(eps=args.eps, window=args.window, tol=args.tol, config=cfg.to_json_dict())
    status = EXIT_OK
    try:
        Vt, N, delta = con.shrink_spectrum(V, args.eps, args.window, cfg, args.tol)
        ok = True
    except ShrinkBudgetExhausted as exc:
        Vt, N, delta, ok = exc.potential, exc.multiple, exc.delta, False
        status = EXIT_NUMERIC
    result = {"potential": pot.to_json_dict(Vt), "multiple": N, "delta": delta, "target_met": ok}
    man.outputs.append(str(write_json(out / "shrink.json", result)))
    return status


def cmd_construct(args, out: Path, man: RunManifest):
    V = load_potential(args.potential)
    cfg = load_config(args.config, args.seed, args.window)
    man.inputs += [p for p in (args.potential, args.config) if p]
    man.parameters.update(eps0=args.eps0, n_max=args.n_max, tol=args.tol, config=cfg.to_json_dict())
    state = con.build_sequence(V, args.eps0, args.n_max, cfg, args.tol)
    man.outputs.append(str(write_json(out / "state.json", con.state_to_json_dict(state))))
    rows = con.certificate_rows(state)
    man.outputs.append(str(write_csv(out / "certificate.csv", con.CERTIFICATE_HEADER, rows)))
    return EXIT_NUMERIC if state.status == con.STATUS_FAILED else EXIT_OK


def cmd_separable(args, out: Path, man: RunManifest):
    W = load_potential(args.potential)
    lams = list(args.couplings) if args.couplings else [1.0] * args.d
    if args.couplings and args.d is not None and args.d != len(lams):
        raise UsageError(f"--d {args.d} does not match {len(lams)} couplings")
    man.inputs.append(args.potential)
    man.parameters.update(couplings=lams, window=args.window, tol=args.tol)
    S = con.separable_spectrum(W, lams, args.window, args.tol)
    man.outputs.append(str(write_json(out / "separable.json", S.to_json_dict())))
    return EXIT_OK


def cmd_verify_appendix(args, out: Path, man: RunManifest):
    fixtures = None
    if args.fixtures:
        man.inputs.append(args.fixtures)
        fixtures = read_json(args.fixtures)
        if not isinstance(fixtures, dict):
            raise UsageError(f"{args.fixtures}: fixture JSON must be an object")
    results = appendix.run_all(fixtures)
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'}  {r.name}  ({r.checks} checks)")
    report = {"passed": all(r.passed for r in results), "suites": [r.to_json_dict() for r in results]}
    man.outputs.append(str(write_json(out / "appendix.json", report)))
    return EXIT_OK if report["passed"] else EXIT_NUMERIC


# ---------------------------------------------------------------------------

def _float_list(text: str) -> list[float]:
    try:
        return [float(x) for x in text.replace(",", " ").split()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"not a list of numbers: {text!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="hillspec", description="Band spectra of periodic potentials and thin-spectrum constructions.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, window_default=None):
        sp.add_argument("--out", default=".", help="output directory")
        sp.add_argument("--tol", type=float, default=1e-9, help="band-edge tolerance")
        if window_default is not None:
            sp.add_argument("--window", type=float, default=window_default, help="half-width a of [-a, a]")

    sp = sub.add_parser("bands", help="band set of a periodic potential")
    sp.add_argument("potential")
    common(sp, 2.0)
    sp.set_defaults(func=cmd_bands)

    sp = sub.add_parser("dim", help="covering counts of an interval set")
    sp.add_argument("intervalset")
    sp.add_argument("--eps", type=_float_list, required=True, help="decreasing scales, comma separated")
    sp.add_argument("--out", default=".", help="output directory")
    sp.set_defaults(func=cmd_dim)

    sp = sub.add_parser("shrink", help="one measure-shrinking step")
    sp.add_argument("potential")
    sp.add_argument("--eps", type=float, required=True, help="perturbation size bound")
    sp.add_argument("--config", help="ShrinkConfig JSON")
    sp.add_argument("--seed", type=int, help="overrides the config seed")
    common(sp, 2.0)
    sp.set_defaults(func=cmd_shrink)

    sp = sub.add_parser("construct", help="run the inductive construction")
    sp.add_argument("potential")
    sp.add_argument("--eps0", type=float, required=True, help="initial epsilon")
    sp.add_argument("--n-max", type=int, default=3, help="number of stages to build")
    sp.add_argument("--config", help="ShrinkConfig JSON")
    sp.add_argument("--seed", type=int, help="overrides the config seed")
    sp.add_argument("--window", type=float, help="constant window instead of 2^n; stages flagged off_paper")
    common(sp)
    sp.set_defaults(func=cmd_construct)

    sp = sub.add_parser("separable", help="spectrum of a separable potential as a sumset")
    sp.add_argument("potential")
    sp.add_argument("--couplings", type=_float_list, help="comma separated; default all 1")
    sp.add_argument("--d", type=int, help="dimension when --couplings is omitted (default 1)")
    common(sp, 4.0)
    sp.set_defaults(func=cmd_separable)

    sp = sub.add_parser("verify-appendix", help="run the sum-of-sets check suites")
    sp.add_argument("--fixtures", help="fixture JSON; built-in fixtures if omitted")
    sp.add_argument("--out", default=".", help="output directory")
    sp.set_defaults(func=cmd_verify_appendix)
    return p


def _fail(code: int, kind: str, message: str, **extra) -> int:
    print(json.dumps({"error": kind, "message": message, "exit_code": code, **extra}), file=sys.stderr)
    return code


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        return _fail(EXIT_USAGE, "usage", str(exc))
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    if args.command == "separable" and not args.couplings and args.d is None:
        args.d = 1
    out = Path(args.out)
    man = RunManifest(args.command)
    start = time.perf_counter()
    try:
        out.mkdir(parents=True, exist_ok=True)
        code = args.func(args, out, man)
    except (IntegrationError, RefinementError) as exc:
        return _fail(EXIT_NUMERIC, type(exc).__name__, str(exc))
    except UsageError as exc:
        return _fail(EXIT_USAGE, "parse", str(exc))
    except (ValueError, OSError) as exc:
        return _fail(EXIT_USAGE, type(exc).__name__, str(exc))
    man.duration_s = time.perf_counter() - start
    man.outputs.append(str(out / "manifest.json"))
    write_json(out / "manifest.json", _clean(asdict(man)))
    return code


def _clean(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return obj


if __name__ == "__main__":
    sys.exit(main())
