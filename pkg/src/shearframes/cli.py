"""Command-line front end: frame bounds, N-term benchmarks and half-space decay.

Every command accepts ``--config file.json``; flags given on the command
line override the file.  Outputs are deterministic for a fixed config.

Exit codes: 0 success, 1 a ``--check`` threshold failed, 2 usage or
configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import frame, phantom, sparsebench, transform
from .generators import (BandlimitedGenerator, CompactGenerator, CompactSpec, FactorizationError,
                         ResolutionError)
from .lattice import LatticeSpec

EXIT_OK, EXIT_CHECK, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3


class ConfigError(ValueError):
    pass


# defaults per command; a JSON config and then the flags are layered on top
DEFAULTS = {
    "frame-bounds": {
        "dim": 3, "gen": "compact", "K": 39, "L": 19, "c1": 0.9, "c2": [0.25], "grid": 64,
        "f0": 16.0, "j_max": None, "sampling": None, "method": "operator-lobpcg", "tol": 1e-6,
        "max_iter": 500, "seed": 0, "expect": None, "out": None,
    },
    "bench": {
        "dim": 2, "grid": 512, "phantom": "ball", "phantom_file": None, "radius": 0.25,
        "systems": ["fourier", "haar", "shearlet"], "N": None, "n_min": 64, "n_max": 16384,
        "n_count": 24, "K": 7, "L": 4, "f0": 8.0, "c1": 2.0, "c2": 2.0, "filter_tol": 1e-7,
        "a_method": "operator-lobpcg", "a_tol": 1e-2, "cg_tol": 1e-6, "seed": 0, "check": False,
        "out": "bench-out",
    },
    "decay": {
        "dim": 2, "grid": 512, "s": [0.0], "case": "i", "j_min": 1, "j_max": None, "fit_j": 6,
        "K": 7, "L": 4, "f0": 8.0, "c1": 1.0, "c2": 1.0, "offset": 0.5, "window": 0.25,
        "check": False, "out": "decay-out",
    },
}

# targets used by --check
BENCH_TARGETS = {
    2: {"fourier": (-0.6, -0.4), "haar": (-1.15, -0.85), "shearlet": (-math.inf, -1.7)},
    3: {"fourier": (-0.43, -0.23), "haar": (-0.65, -0.35), "shearlet": (-math.inf, -0.8)},
}
DECAY_TARGETS = {"i": (-0.85, -0.65), "ii": (-math.inf, -2.0), "iii": (-math.inf, -2.5)}


# ---------------------------------------------------------------------------
# argument parsing

def _parser() -> argparse.ArgumentParser:
    S = argparse.SUPPRESS
    p = argparse.ArgumentParser(prog="shearframes", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", default=S, help="JSON file with parameters (flags override it)")
        sp.add_argument("--threads", type=int, default=S, help="FFT worker cap")
        sp.add_argument("--out", default=S, help="output directory")

    fb = sub.add_parser("frame-bounds", help="estimate frame bounds of a digital shearlet system")
    common(fb)
    fb.add_argument("--dim", type=int, choices=(2, 3), default=S)
    fb.add_argument("--gen", choices=("compact", "bandlimited"), default=S)
    fb.add_argument("--K", type=int, default=S)
    fb.add_argument("--L", type=int, default=S)
    fb.add_argument("--c1", type=float, default=S)
    fb.add_argument("--c2", type=float, nargs="+", default=S, help="one table row per value")
    fb.add_argument("--grid", type=int, default=S)
    fb.add_argument("--f0", type=float, default=S, help="generator units per torus length")
    fb.add_argument("--j-max", dest="j_max", type=int, default=S)
    fb.add_argument("--sampling", choices=("stride", "lattice"), default=S)
    fb.add_argument("--method", choices=frame.METHODS, default=S)
    fb.add_argument("--tol", type=float, default=S)
    fb.add_argument("--max-iter", dest="max_iter", type=int, default=S)
    fb.add_argument("--seed", type=int, default=S)
    fb.add_argument("--expect", type=float, nargs=2, metavar=("LO", "HI"), default=S,
                    help="exit 1 unless every ratio lies in [LO, HI]")

    b = sub.add_parser("bench", help="N-term approximation curves and fitted rates")
    common(b)
    b.add_argument("--dim", type=int, choices=(2, 3), default=S)
    b.add_argument("--grid", type=int, default=S)
    b.add_argument("--phantom", choices=("ball", "deformed-sphere", "piecewise", "file"), default=S)
    b.add_argument("--phantom-file", dest="phantom_file", default=S, help="raw field with JSON sidecar")
    b.add_argument("--radius", type=float, default=S)
    b.add_argument("--systems", nargs="+", choices=("fourier", "haar", "shearlet"), default=S)
    b.add_argument("--N", type=int, nargs="+", default=S, help="explicit ascending N list")
    b.add_argument("--n-min", dest="n_min", type=int, default=S)
    b.add_argument("--n-max", dest="n_max", type=int, default=S)
    b.add_argument("--n-count", dest="n_count", type=int, default=S)
    b.add_argument("--K", type=int, default=S)
    b.add_argument("--L", type=int, default=S)
    b.add_argument("--f0", type=float, default=S)
    b.add_argument("--c1", type=float, default=S)
    b.add_argument("--c2", type=float, default=S)
    b.add_argument("--filter-tol", dest="filter_tol", type=float, default=S)
    b.add_argument("--a-method", dest="a_method", choices=frame.METHODS + ("constant-field",), default=S)
    b.add_argument("--a-tol", dest="a_tol", type=float, default=S)
    b.add_argument("--cg-tol", dest="cg_tol", type=float, default=S)
    b.add_argument("--seed", type=int, default=S)
    b.add_argument("--check", action="store_true", default=S, help="exit 1 if a rate misses its target")

    dc = sub.add_parser("decay", help="coefficient decay for a half-space boundary")
    common(dc)
    dc.add_argument("--dim", type=int, choices=(2, 3), default=S)
    dc.add_argument("--grid", type=int, default=S)
    dc.add_argument("--s", type=float, nargs="+", default=S, help="slope vector (d-1 entries)")
    dc.add_argument("--case", choices=("i", "ii", "iii"), default=S)
    dc.add_argument("--j-min", dest="j_min", type=int, default=S)
    dc.add_argument("--j-max", dest="j_max", type=int, default=S)
    dc.add_argument("--fit-j", dest="fit_j", type=int, default=S)
    dc.add_argument("--K", type=int, default=S)
    dc.add_argument("--L", type=int, default=S)
    dc.add_argument("--f0", type=float, default=S)
    dc.add_argument("--c1", type=float, default=S)
    dc.add_argument("--c2", type=float, default=S)
    dc.add_argument("--offset", type=float, default=S)
    dc.add_argument("--window", type=float, default=S)
    dc.add_argument("--check", action="store_true", default=S)
    return p


def load_config(command: str, flags: dict) -> dict:
    """Defaults, then the JSON file named by ``--config``, then explicit flags."""
    cfg = dict(DEFAULTS[command])
    path = flags.pop("config", None)
    if path is not None:
        try:
            data = json.loads(Path(path).read_text())
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {path}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {path} is not valid JSON: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError("config file must hold a JSON object")
        data = {k.replace("-", "_"): v for k, v in data.items()}
        unknown = sorted(set(data) - set(cfg) - {"threads"})
        if unknown:
            raise ConfigError(f"unknown config keys for {command}: {', '.join(unknown)}")
        cfg.update(data)
    cfg.update(flags)
    return cfg


def _positive(cfg, *names):
    for name in names:
        v = cfg.get(name)
        if v is not None and not v > 0:
            raise ConfigError(f"{name} must be positive, got {v}")


def _grid_ok(n):
    if n < 8 or n & (n - 1):
        raise ConfigError(f"grid must be a power of two >= 8, got {n}")


def _compact(K, L):
    try:
        return CompactGenerator(CompactSpec(int(K), int(L)))
    except ValueError as exc:
        if isinstance(exc, FactorizationError):
            raise
        raise ConfigError(str(exc)) from None


def _write_json(path: Path, obj) -> None:
    sparsebench.write_json(path, obj)


# ---------------------------------------------------------------------------
# commands

def cmd_frame_bounds(cfg: dict, out=None) -> int:
    out = sys.stdout if out is None else out
    _grid_ok(cfg["grid"])
    _positive(cfg, "c1", "f0", "tol")
    c2_list = cfg["c2"] if isinstance(cfg["c2"], list) else [cfg["c2"]]
    for c2 in c2_list:
        if not c2 > 0:
            raise ConfigError(f"c2 must be positive, got {c2}")
        if c2 > cfg["c1"]:
            raise ConfigError(f"translation constants need c2 <= c1, got c1={cfg['c1']}, c2={c2}")
    if cfg["gen"] == "compact":
        gen = _compact(cfg["K"], cfg["L"])
        sampling = cfg["sampling"] or "lattice"
    else:
        gen = BandlimitedGenerator()
        sampling = cfg["sampling"] or "stride"
    shape = (cfg["grid"],) * cfg["dim"]
    rows = []
    for c2 in c2_list:
        system = transform.ShearletSystem(shape, gen, LatticeSpec(cfg["c1"], c2), base_freq=cfg["f0"],
                                          j_max=cfg["j_max"], sampling=sampling)
        est = frame.estimate_frame_bounds(system, tol=cfg["tol"], max_iter=cfg["max_iter"],
                                          method=cfg["method"], seed=cfg["seed"])
        rows.append({"c1": cfg["c1"], "c2": c2, "j_max": system.j_max, "tiles": len(system.tiles),
                     "estimate": json.loads(est.to_json())})
    gen_label = f"compact K={cfg['K']}, L={cfg['L']}" if cfg["gen"] == "compact" else "band-limited"
    print(f"Frame bound ratio, {gen_label}, {cfg['dim']}D grid {cfg['grid']}, f0={cfg['f0']:g}, "
          f"{sampling} sampling", file=out)
    print(f"{'Numerical (B/A)':>16}  {'A':>10}  {'B':>10}  Translation constants (c1, c2)", file=out)
    for r in rows:
        e = r["estimate"]
        print(f"{e['ratio']:16.4f}  {e['A_est']:10.4f}  {e['B_est']:10.4f}  ({r['c1']:g}, {r['c2']:g})",
              file=out)
    report = {"command": "frame-bounds", "config": _public(cfg), "rows": rows}
    print(json.dumps(report, indent=2, sort_keys=True), file=out)
    if cfg["out"]:
        d = Path(cfg["out"])
        d.mkdir(parents=True, exist_ok=True)
        _write_json(d / "frame_bounds.json", report)
    if cfg["expect"] is not None:
        lo, hi = cfg["expect"]
        bad = [r for r in rows if not lo <= r["estimate"]["ratio"] <= hi]
        for r in bad:
            print(f"FAIL: ratio {r['estimate']['ratio']:.4f} for c2={r['c2']:g} outside [{lo}, {hi}]",
                  file=sys.stderr)
        if bad:
            return EXIT_CHECK
    return EXIT_OK


def _bench_phantom(cfg):
    d, n = cfg["dim"], cfg["grid"]
    kind = cfg["phantom"]
    if cfg["phantom_file"] is not None or kind == "file":
        if cfg["phantom_file"] is None:
            raise ConfigError("--phantom file needs --phantom-file")
        try:
            f = phantom.import_raw(cfg["phantom_file"])
        except FileNotFoundError as exc:
            raise ConfigError(str(exc)) from None
        if f.shape != (n,) * d:
            raise ConfigError(f"phantom file has shape {f.shape}, expected {(n,) * d}")
        return f, Path(cfg["phantom_file"]).name
    if kind == "ball":
        return phantom.ball_phantom((0.5,) * d, cfg["radius"], n, d), f"ball-r{cfg['radius']:g}"
    if kind == "deformed-sphere":
        return phantom.deformed_sphere_phantom(0.1, 2, n, d, r0=cfg["radius"]), "deformed-sphere"
    return phantom.piecewise_phantom(3, n, d), "piecewise-L3"


def cmd_bench(cfg: dict, out=None) -> int:
    out = sys.stdout if out is None else out
    _grid_ok(cfg["grid"])
    _positive(cfg, "c1", "c2", "f0", "radius", "cg_tol", "a_tol")
    if cfg["c2"] > cfg["c1"]:
        raise ConfigError(f"translation constants need c2 <= c1, got c1={cfg['c1']}, c2={cfg['c2']}")
    d = cfg["dim"]
    if cfg["N"] is not None:
        N_list = [int(v) for v in cfg["N"]]
    else:
        if not 1 <= cfg["n_min"] < cfg["n_max"]:
            raise ConfigError("need 1 <= n_min < n_max")
        N_list = sparsebench.geometric_n(cfg["n_min"], cfg["n_max"], cfg["n_count"])
    if len(N_list) < 4:
        raise ConfigError("need at least 4 values of N")
    f, phantom_id = _bench_phantom(cfg)
    outdir = Path(cfg["out"])
    outdir.mkdir(parents=True, exist_ok=True)
    results = {}
    for name in cfg["systems"]:
        if name == "fourier":
            res = sparsebench.bench_fourier(f, N_list, phantom_id)
        elif name == "haar":
            res = sparsebench.bench_haar(f, N_list, phantom_id)
        else:
            gen = _compact(cfg["K"], cfg["L"])
            system = transform.ShearletSystem(f.shape, gen, LatticeSpec(cfg["c1"], cfg["c2"]),
                                              base_freq=cfg["f0"], filter_tol=cfg["filter_tol"])
            if cfg["a_method"] == "constant-field":
                A_est = frame.constant_field_quotient(system)
            else:
                A_est = frame.estimate_frame_bounds(system, method=cfg["a_method"], tol=cfg["a_tol"],
                                                    max_iter=100, seed=cfg["seed"]).A_est
            res = sparsebench.bench_shearlet(f, system, N_list, A_est, phantom_id, cfg["cg_tol"])
        results[name] = res
        res.curve.to_csv(outdir / f"{name}.csv")
        line = f"{name:9s} slope {res.fit.slope:8.4f}  r2 {res.fit.r_squared:.4f}"
        if res.log_fit is not None:
            line += f"  log-corrected {res.log_fit.slope:8.4f}"
        if res.coeff_fit is not None:
            line += f"  coefficients {res.coeff_fit.slope:8.4f}"
        print(line, file=out)
    from . import report
    report.error_curves_svg({k: r.curve for k, r in results.items()},
                            {k: r.fit for k, r in results.items()}, d, outdir / "bench.svg",
                            title=f"{phantom_id}, grid {cfg['grid']}^{d}")
    summary = {"command": "bench", "config": _public(cfg), "N": N_list,
               "results": {k: r.to_dict() for k, r in results.items()}}
    _write_json(outdir / "fits.json", summary)
    if cfg["check"]:
        failed = []
        for name, res in results.items():
            lo, hi = BENCH_TARGETS[d][name]
            if not lo <= res.fit.slope <= hi:
                failed.append(f"{name} slope {res.fit.slope:.3f} outside [{lo}, {hi}]")
            if res.curve.lemma1_violations:
                failed.append(f"{name}: {res.curve.lemma1_violations} Lemma-1 violations")
        for msg in failed:
            print("FAIL: " + msg, file=sys.stderr)
        if failed:
            return EXIT_CHECK
    return EXIT_OK


def cmd_decay(cfg: dict, out=None) -> int:
    out = sys.stdout if out is None else out
    _grid_ok(cfg["grid"])
    _positive(cfg, "c1", "c2", "f0")
    d = cfg["dim"]
    s = [float(v) for v in (cfg["s"] if isinstance(cfg["s"], list) else [cfg["s"]])]
    if len(s) != d - 1:
        raise ConfigError(f"--s needs {d - 1} value(s) in {d}D")
    case = cfg["case"]
    if case == "i" and max(abs(v) for v in s) > 3:
        print("warning: |s| > 3 belongs to case (ii); running case (ii)", file=sys.stderr)
        case = "ii"
    gen = _compact(cfg["K"], cfg["L"])
    shape = (cfg["grid"],) * d
    system = transform.ShearletSystem(shape, gen, LatticeSpec(cfg["c1"], cfg["c2"]), base_freq=cfg["f0"],
                                      j_max=cfg["j_max"])
    j_range = range(cfg["j_min"], system.j_max + 1)
    rows, fits = sparsebench.halfplane_decay_experiment(s, j_range, system, case=case, offset=cfg["offset"],
                                                        window=cfg["window"], fit_j=cfg["fit_j"])
    outdir = Path(cfg["out"])
    outdir.mkdir(parents=True, exist_ok=True)
    sparsebench.write_csv(outdir / "decay.csv", rows)
    summary = {"command": "decay", "config": _public(cfg), "case_run": case,
               "fits": {k: v.to_dict() for k, v in fits.items()}}
    _write_json(outdir / "decay.json", summary)
    from . import report
    report.decay_svg(rows, fits, outdir / "decay.svg", title=f"half-space, case ({case}), s={s}")
    for k, v in sorted(fits.items()):
        print(f"{k:14s} {v.slope:8.4f}  r2 {v.r_squared:.4f}", file=out)
    if cfg["check"]:
        lo, hi = DECAY_TARGETS[case]
        fit = fits.get("j_slope")
        if fit is None or not lo <= fit.slope <= hi:
            got = "none" if fit is None else f"{fit.slope:.3f}"
            print(f"FAIL: j-slope {got} outside [{lo}, {hi}]", file=sys.stderr)
            return EXIT_CHECK
    return EXIT_OK


def _public(cfg: dict) -> dict:
    return {k: v for k, v in sorted(cfg.items()) if k not in ("out", "threads")}


COMMANDS = {"frame-bounds": cmd_frame_bounds, "bench": cmd_bench, "decay": cmd_decay}


def main(argv=None) -> int:
    parser = _parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse exits 2 on usage errors already
        return int(exc.code or 0)
    flags = vars(args)
    command = flags.pop("command")
    try:
        cfg = load_config(command, flags)
        if cfg.get("threads"):
            transform.set_threads(cfg["threads"])
        return COMMANDS[command](cfg)
    except (ConfigError, transform.GridMismatchError, phantom.PhantomDomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (frame.NumericalFailure, FactorizationError, ResolutionError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (KeyError, TypeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
