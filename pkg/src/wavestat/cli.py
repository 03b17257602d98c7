"""Command-line driver: ``wavestat {solve,validate,field,sweep}``."""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
import time
from contextlib import contextmanager
from importlib import metadata
from pathlib import Path

import numpy as np

from .config import OUTPUT_ENV, RunConfig, load_config
from .errors import ConfigError, ConjugatePointError, WaveStatError
from .propagator import WaveState, propagate_profile, trotter_kato_gap
from .riccati import FundamentalSolution, limit_eigs_masked
from .spectral import SpectralVector, make_operator, reconstruct
from .tpbvp import Displacement, TpbvpProblem, Velocity, solve
from .validation import SUITES, run_all

EXIT_OK, EXIT_CONFIG, EXIT_CONJUGATE, EXIT_SUITE = 0, 2, 3, 4
ROUND_TRIP_TOL = 1e-8
DEFAULT_OUT = "wavestat-out"


def package_version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "unknown"


def _fmt(v) -> str:
    return format(float(v), ".17g")


class Writer:
    """Collects output files, their checksums and timings for the manifest."""

    def __init__(self, out: Path):
        self.out = out
        self.files: list[dict] = []
        self.timings: dict[str, float] = {}
        out.mkdir(parents=True, exist_ok=True)

    def write(self, name: str, text: str):
        data = text.encode()
        (self.out / name).write_bytes(data)
        self.files.append({"name": name, "bytes": len(data), "sha256": hashlib.sha256(data).hexdigest()})

    def csv(self, name: str, header: str, rows):
        lines = [header] + [",".join(_fmt(v) if not isinstance(v, (int, np.integer)) else str(int(v))
                                     for v in row) for row in rows]
        self.write(name, "\n".join(lines) + "\n")

    def spectral(self, name: str, x: SpectralVector):
        self.csv(name, "n,coeff", zip(x.basis.modes, x.coeffs))

    @contextmanager
    def timed(self, label: str):
        start = time.perf_counter()
        yield
        self.timings[label] = time.perf_counter() - start

    def manifest(self, command: str, cfg: RunConfig | None, status: str, diagnostics: dict):
        body = {
            "command": command,
            "version": package_version(),
            "status": status,
            "config": cfg.echo() if cfg else None,
            "diagnostics": diagnostics,
            "files": self.files,
            "timings_s": self.timings,
        }
        (self.out / "manifest.json").write_text(json.dumps(body, indent=2, sort_keys=True, default=_json) + "\n")


def _json(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, (tuple, set)):
        return list(obj)
    raise TypeError(type(obj))


def _problem(cfg: RunConfig) -> TpbvpProblem:
    basis = cfg.basis
    pr = cfg.problem
    x0 = cfg.profile(pr.x0)
    target = cfg.profile(pr.target)
    terminal = Displacement(target) if pr.kind == "displacement" else Velocity(target)
    return TpbvpProblem(basis, pr.t, x0, terminal, cfg.numerics.mu, pr.n_segments, cfg.numerics.delta_min)


def _grid(cfg: RunConfig) -> np.ndarray:
    return np.linspace(0.0, cfg.physical.L, cfg.outputs.grid)


def _solve_and_write(cfg: RunConfig, w: Writer) -> tuple[dict, object, TpbvpProblem]:
    prob = _problem(cfg)
    with w.timed("solve"):
        sol = solve(prob, cfg.numerics.conjugate_tol)
    basis, grid = prob.cfg, _grid(cfg)
    w.csv("velocity.csv", "lambda,v", zip(grid, reconstruct(sol.w0, grid)))
    w.spectral("velocity_spectral.csv", sol.w0)
    if isinstance(prob.terminal, Velocity):
        w.spectral("z_star_spectral.csv", sol.z_star)
    horizon = sol.plan.tau if sol.plan else prob.t
    p, q, r, _ = limit_eigs_masked(horizon, prob.mu, basis, cfg.numerics.conjugate_tol)
    w.write("eigen.csv", FundamentalSolution(basis, prob.mu, math.inf, horizon, p, q, r).eigen_table_csv())

    with w.timed("verify"):
        end = propagate_profile(prob.x0, sol.w0, prob.t, prob.mu)[-1]
    keep = np.ones(basis.N, bool)
    keep[np.asarray(sol.singular_modes, int) - 1] = False
    if isinstance(prob.terminal, Displacement):
        got, want = end.xi.coeffs, prob.terminal.z.coeffs
    else:
        got = end.velocity(prob.mu).coeffs
        want = make_operator("I_mu", prob.mu, basis)(prob.terminal.v).coeffs
    scale = float(np.linalg.norm(want[keep]))
    err = float(np.linalg.norm((got - want)[keep]))
    rel = err / scale if scale > 0 else err
    target = prob.terminal.z if isinstance(prob.terminal, Displacement) else prob.terminal.v
    diag = {
        "kind": cfg.problem.kind,
        "singular_modes": list(sol.singular_modes),
        "n_segments": sol.plan.n_t if sol.plan else 1,
        "max_condition": float(np.max(np.where(keep, sol.condition, 0.0))),
        "round_trip_error": rel,
        "round_trip_tol": ROUND_TRIP_TOL,
        "tail_indicator": {"x0": prob.x0.tail_indicator(), "target": target.tail_indicator(),
                           "w0": sol.w0.tail_indicator()},
    }
    return diag, sol, prob


def _status(diag: dict) -> tuple[str, int]:
    if diag["singular_modes"]:
        return "conjugate_point", EXIT_CONJUGATE
    if not diag["round_trip_error"] < ROUND_TRIP_TOL:
        return "round_trip_failed", EXIT_SUITE
    return "ok", EXIT_OK


def cmd_solve(cfg: RunConfig, out: Path, args) -> int:
    w = Writer(out)
    diag, _, _ = _solve_and_write(cfg, w)
    status, code = _status(diag)
    w.manifest("solve", cfg, status, diag)
    _report(status, diag)
    return code


def cmd_field(cfg: RunConfig, out: Path, args) -> int:
    w = Writer(out)
    diag, sol, prob = _solve_and_write(cfg, w)
    horizon = cfg.outputs.field_horizon or prob.t
    grid = _grid(cfg)
    with w.timed("field"):
        snaps = propagate_profile(prob.x0, sol.w0, horizon, prob.mu, cfg.outputs.snapshots)
        times = np.linspace(0.0, horizon, cfg.outputs.snapshots) if cfg.outputs.snapshots > 1 else [horizon]
        rows = [(s, lam, u) for s, st in zip(times, snaps) for lam, u in zip(grid, reconstruct(st.xi, grid))]
    w.csv("field.csv", "s,lambda,u", rows)
    diag["field"] = {"horizon": horizon, "snapshots": cfg.outputs.snapshots, "grid": cfg.outputs.grid,
                     "energy": [st.energy() for st in snaps[:: max(1, len(snaps) // 8)]]}
    status, code = _status(diag)
    w.manifest("field", cfg, status, diag)
    _report(status, diag)
    return code


def cmd_sweep(cfg: RunConfig, out: Path, args) -> int:
    w = Writer(out)
    basis = cfg.basis
    x0 = cfg.profile(cfg.sweep.initial)
    y0 = WaveState.from_velocity(x0, SpectralVector.zeros(basis))
    with w.timed("sweep"):
        table = trotter_kato_gap(y0, cfg.sweep.t, cfg.sweep.mu)
    w.write("gap.csv", table.to_csv())
    diag = {"t": cfg.sweep.t, "gaps": dict(zip(map(str, table.mu), table.gap))}
    try:
        diag["fitted_order"] = table.fitted_order()
    except ValueError:
        diag["fitted_order"] = None
    w.manifest("sweep", cfg, "ok", diag)
    _report("ok", diag)
    return EXIT_OK


def cmd_validate(cfg: RunConfig, out: Path, args) -> int:
    w = Writer(out)
    suites = tuple(args.suite) if args.suite else SUITES
    with w.timed("validate"):
        results = run_all(cfg.basis, seed=args.seed, suites=suites)
    report = {"seed": args.seed, "passed": all(r.passed for r in results),
              "suites": [r.to_dict() for r in results]}
    w.write("validation.json", json.dumps(report, indent=2, sort_keys=True) + "\n")
    status = "ok" if report["passed"] else "suite_failure"
    summary = {r.name: r.passed for r in results}
    w.manifest("validate", cfg, status, {"seed": args.seed, "suites": summary})
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'} {r.name}")
        for c in r.failures():
            print(f"    {c.name}: observed {c.observed:.3e}, threshold {c.threshold:.3e} {c.detail}")
    return EXIT_OK if report["passed"] else EXIT_SUITE


def _report(status: str, diag: dict):
    print(json.dumps({"status": status, **{k: v for k, v in diag.items() if k != "field"}},
                     sort_keys=True, default=_json))


COMMANDS = {"solve": cmd_solve, "validate": cmd_validate, "field": cmd_field, "sweep": cmd_sweep}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="wavestat", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="flat key = value config file")
        p.add_argument("--out", help=f"output directory (else outputs.dir, ${OUTPUT_ENV}, ./{DEFAULT_OUT})")
        p.add_argument("--seed", type=int, default=0, help="seed for randomized suites")
        p.add_argument("--modes", type=int, help="override numerics.N")
        p.add_argument("--mu", help="override numerics.mu")
        if name == "validate":
            p.add_argument("--suite", action="append", choices=SUITES, help="run only this suite (repeatable)")
    return parser


def _output_dir(args, cfg: RunConfig) -> Path:
    return Path(args.out or cfg.outputs.dir or os.environ.get(OUTPUT_ENV) or DEFAULT_OUT)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    overrides = {}
    if args.modes is not None:
        overrides["numerics.N"] = str(args.modes)
    if args.mu is not None:
        overrides["numerics.mu"] = args.mu
    try:
        cfg = load_config(args.config, overrides)
        return COMMANDS[args.command](cfg, _output_dir(args, cfg), args)
    except ConfigError as exc:
        print(json.dumps({"status": "config_error", "issues": [{"key": k, "message": m} for k, m in exc.issues]}),
              file=sys.stderr)
        return EXIT_CONFIG
    except ConjugatePointError as exc:
        print(json.dumps({"status": "conjugate_point", "modes": list(exc.modes), "message": str(exc)}),
              file=sys.stderr)
        return EXIT_CONJUGATE
    except (WaveStatError, ValueError) as exc:
        print(json.dumps({"status": "config_error", "issues": [{"key": "problem", "message": str(exc)}]}),
              file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
