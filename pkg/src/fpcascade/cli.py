"""Command-line front end: run the solvers and emit CSV/JSON artifacts.

Subcommands:

* ``example1``  linear drift x*V(t): perturbative (analytic and numeric
  paths), finite-difference and Monte Carlo solvers; the summary carries the
  shifted-heat-kernel translation residual.
* ``ou``        quadratic drift x^2/2: same solver set; the summary adds the
  lambda-sweep scaling fit and the log-resummation gaps.
* ``custom``    any built-in drift family, configured via JSON.

Outputs (in --out): ``density.csv`` with one row per (t-slice, x-node) in
time-major order, and ``summary.json``.  Floats are written with 17
significant digits and LF line endings so identical invocations produce
byte-identical files.

Exit codes: 0 success, 2 config rejection, 3 solver abort, 4 invariant
violation at emission.
"""

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import kernels
from .analysis import (
    METRICS,
    field_distance,
    scaling_order_fit,
    slice_mass,
    slice_moments,
    translation_residual,
    trapezoid,
)
from .errors import ConfigError, InvariantViolation, SolverError
from .hierarchy import analytic_expansion, assemble_density, solve_expansion
from .model import (
    DensityField,
    FAMILY_LINEAR,
    FAMILY_QUADRATIC,
    RunConfig,
    Tolerances,
    ValidatedConfig,
    validate_config,
)
from .oracles import log_resummation_gap, ou_density_exact, ou_density_pert
from .reference import density_from_samples, em_simulate, fp_fd_solve, oracle_density

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVER = 3
EXIT_INVARIANT = 4

# evaluation lattice for the oracle-vs-oracle lambda sweep (grid independent)
_SWEEP_T = 1.0
_SWEEP_X = np.linspace(-12.0, 12.0, 4801)

_MASS_TOL = {"w_pert": 1e-9, "w_pert_numeric": 1e-9, "w_exact": 1e-8, "w_fd": 1e-8, "w_mc": 1e-9}


def _fmt(v) -> str:
    return f"{v:.17g}"


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj]
    return obj


def _load_config_file(path) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    if not isinstance(data, dict):
        raise ConfigError("config file must hold a JSON object")
    known = set(RunConfig.__dataclass_fields__)
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    if "tolerances" in data:
        data["tolerances"] = Tolerances(**data["tolerances"])
    if "checkpoints" in data:
        data["checkpoints"] = tuple(data["checkpoints"])
    return data


def _config_from_args(args, family: str | None) -> RunConfig:
    overrides = {}
    if args.config:
        overrides.update(_load_config_file(args.config))
    if family is not None:
        overrides["family"] = family
    flag_map = {
        "v": "v_kind",
        "omega": "omega",
        "v0": "v0",
        "lam": "lam",
        "d": "d_coeff",
        "order": "order",
        "x_min": "x_min",
        "x_max": "x_max",
        "nx": "nx",
        "nt": "nt",
        "t0": "t0",
        "t_max": "t_max",
        "paths": "n_paths",
        "seed": "seed",
        "mc_dt": "mc_dt",
        "out": "out_dir",
    }
    for flag, field_name in flag_map.items():
        val = getattr(args, flag, None)
        if val is not None:
            overrides[field_name] = val
    try:
        return replace(RunConfig(), **overrides)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def _checkpoint_indices(cfg: ValidatedConfig):
    t_nodes = cfg.grid.t
    return [int(np.argmin(np.abs(t_nodes - c))) for c in cfg.checkpoints]


def _run_solvers(cfg: ValidatedConfig):
    grid, drift = cfg.grid, cfg.drift
    d, lam = cfg.d_coeff, cfg.lam
    fields = {}
    fields["w_pert"] = assemble_density(analytic_expansion(drift, d, lam, cfg.order, grid), drift)
    fields["w_pert_numeric"] = assemble_density(solve_expansion(drift, d, lam, cfg.order, grid), drift)

    exact_vals = np.array([oracle_density(drift, d, lam, grid.x, tj) for tj in grid.t])
    fields["w_exact"] = DensityField(grid=grid, values=exact_vals)

    w_init = oracle_density(drift, d, lam, grid.x, grid.t0)
    w_init = w_init / float(trapezoid(w_init, grid.dx))
    fields["w_fd"] = fp_fd_solve(
        drift, d, lam, grid, w_init,
        mass_tol=cfg.tolerances.mass_tol, boundary_tol=cfg.tolerances.boundary_tol,
    )

    ensemble = em_simulate(
        drift, d, lam, grid.t0, cfg.checkpoints, cfg.raw.mc_dt, cfg.raw.n_paths, cfg.raw.seed
    )
    fields["w_mc"] = density_from_samples(ensemble, grid)
    return fields


def _check_emission(fields: dict, cfg: ValidatedConfig):
    for name, field in fields.items():
        tol = _MASS_TOL[name]
        for j in np.flatnonzero(field.populated):
            mass = slice_mass(field, int(j))
            if abs(mass - 1.0) > tol:
                raise InvariantViolation(
                    f"{name} slice {j} mass {mass:.12g} deviates from 1 beyond {tol:g}"
                )
        vals = field.values[field.populated]
        if vals.size and vals.min() < -1e-12:
            raise InvariantViolation(f"{name} holds a value below -1e-12")


def _summarize(fields: dict, cfg: ValidatedConfig, lambda_sweep):
    grid, drift = cfg.grid, cfg.drift
    idx = _checkpoint_indices(cfg)
    masses = {}
    moments = {}
    for name, field in fields.items():
        js = [j for j in idx if field.populated[j]]
        masses[name] = {
            "t": [float(grid.t[j]) for j in js],
            "mass": [slice_mass(field, j) for j in js],
        }
        mom = [slice_moments(field, j) for j in js]
        moments[name] = {
            "t": [float(grid.t[j]) for j in js],
            "mean": [m[0] for m in mom],
            "variance": [m[1] for m in mom],
        }
    distances = {}
    names = list(fields)
    for i, a in enumerate(names):
        for b in names[i + 1:]:
            fa, fb = fields[a], fields[b]
            both = fa.populated & fb.populated
            js = [j for j in idx if both[j]]
            if not js:
                continue
            per_metric = {}
            for metric in METRICS:
                dist = field_distance(fa, fb, metric)
                per_metric[metric] = {
                    "t": [float(grid.t[j]) for j in js],
                    "value": [float(dist[j]) for j in js],
                }
            distances[f"{a}_vs_{b}"] = per_metric

    summary = {
        "config": _config_dict(cfg),
        "masses": masses,
        "moments": moments,
        "distances": distances,
        "translation_residual": None,
        "scaling_fit": None,
        "resummation_gaps": None,
    }
    if drift.family == FAMILY_LINEAR:
        summary["translation_residual"] = translation_residual(
            fields["w_pert"], cfg.d_coeff, cfg.lam, drift.modulation
        )
    if drift.family == FAMILY_QUADRATIC:
        lams = lambda_sweep if lambda_sweep else [0.02, 0.04, 0.08, 0.16]
        errors = []
        for lam in lams:
            exact = ou_density_exact(_SWEEP_X, _SWEEP_T, cfg.d_coeff, lam)
            pert = ou_density_pert(_SWEEP_X, _SWEEP_T, cfg.d_coeff, lam)
            errors.append(float(np.abs(pert - exact).max() / exact.max()))
        summary["scaling_fit"] = {
            "lambdas": [float(l) for l in lams],
            "errors": errors,
            "slope": scaling_order_fit(list(zip(lams, errors))),
        }
        summary["resummation_gaps"] = {
            "t": [float(tj) for tj in grid.t],
            "gap": [float(log_resummation_gap(cfg.lam, tj)) for tj in grid.t],
        }
    return summary


def _config_dict(cfg: ValidatedConfig):
    raw = cfg.raw
    return {
        "family": raw.family,
        "v_kind": raw.v_kind,
        "omega": raw.omega,
        "v0": raw.v0,
        "d_coeff": raw.d_coeff,
        "lam": raw.lam,
        "order": raw.order,
        "x_min": raw.x_min,
        "x_max": raw.x_max,
        "nx": raw.nx,
        "t0": raw.t0,
        "t_max": raw.t_max,
        "nt": raw.nt,
        "dx": cfg.grid.dx,
        "dt": cfg.grid.dt,
        "n_paths": raw.n_paths,
        "seed": raw.seed,
        "mc_dt": raw.mc_dt,
        "checkpoints": list(cfg.checkpoints),
        "tolerances": {
            "mass_tol": raw.tolerances.mass_tol,
            "solver_tol": raw.tolerances.solver_tol,
            "boundary_tol": raw.tolerances.boundary_tol,
        },
        "kernel_lane": kernels.active_lane(),
    }


def _write_outputs(fields: dict, summary: dict, cfg: ValidatedConfig):
    out_dir = Path(cfg.raw.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    grid = cfg.grid
    columns = ["w_pert", "w_pert_numeric", "w_exact", "w_fd", "w_mc"]
    lines = ["x,t," + ",".join(columns)]
    x_strs = [_fmt(xv) for xv in grid.x]
    for j, tj in enumerate(grid.t):
        t_str = _fmt(tj)
        cells = {}
        for name in columns:
            field = fields[name]
            cells[name] = [_fmt(v) for v in field.values[j]] if field.populated[j] else None
        for i in range(grid.nx):
            row = [x_strs[i], t_str]
            row.extend(cells[name][i] if cells[name] is not None else "" for name in columns)
            lines.append(",".join(row))
    (out_dir / "density.csv").write_bytes(("\n".join(lines) + "\n").encode("ascii"))
    payload = json.dumps(_jsonable(summary), indent=2, sort_keys=True)
    (out_dir / "summary.json").write_bytes((payload + "\n").encode("ascii"))
    return out_dir


def _run(args, family: str | None, lambda_sweep=None):
    cfg = validate_config(_config_from_args(args, family))
    fields = _run_solvers(cfg)
    _check_emission(fields, cfg)
    summary = _summarize(fields, cfg, lambda_sweep)
    out_dir = _write_outputs(fields, summary, cfg)
    print(f"wrote {out_dir / 'density.csv'} and {out_dir / 'summary.json'}")
    return EXIT_OK


def cmd_example1(args) -> int:
    return _run(args, FAMILY_LINEAR)


def cmd_ou(args) -> int:
    sweep = None
    if args.lambda_sweep:
        try:
            sweep = [float(s) for s in args.lambda_sweep.split(",") if s.strip()]
        except ValueError as exc:
            raise ConfigError(f"bad --lambda-sweep list: {args.lambda_sweep!r}") from exc
        if len(sweep) < 3:
            raise ConfigError("--lambda-sweep needs at least 3 values for a slope fit")
    return _run(args, FAMILY_QUADRATIC, lambda_sweep=sweep)


def cmd_custom(args) -> int:
    if not args.config:
        raise ConfigError("custom runs need --config pointing at a JSON file")
    return _run(args, None)


def _add_common_flags(p: argparse.ArgumentParser):
    p.add_argument("--lambda", dest="lam", type=float, default=None, help="perturbation strength")
    p.add_argument("--d", type=float, default=None, help="diffusion constant D")
    p.add_argument("--order", type=int, default=None, help="expansion order N (<= 8)")
    p.add_argument("--x-min", dest="x_min", type=float, default=None)
    p.add_argument("--x-max", dest="x_max", type=float, default=None)
    p.add_argument("--nx", type=int, default=None)
    p.add_argument("--nt", type=int, default=None)
    p.add_argument("--t0", type=float, default=None, help="start time (> 0)")
    p.add_argument("--t-max", dest="t_max", type=float, default=None)
    p.add_argument("--paths", type=int, default=None, help="Monte Carlo path count")
    p.add_argument("--seed", type=int, default=None, help="master seed (64-bit)")
    p.add_argument("--mc-dt", dest="mc_dt", type=float, default=None, help="max Monte Carlo step")
    p.add_argument("--out", type=str, default=None, help="output directory")
    p.add_argument("--config", type=str, default=None, help="JSON config file; flags override it")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fpcascade",
        description="perturbative, finite-difference and Monte Carlo solvers "
        "for 1-D constant-diffusion Fokker-Planck problems",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p1 = sub.add_parser("example1", help="linear drift potential x*V(t)")
    p1.add_argument("--v", choices=["cos", "sin", "const"], default=None, help="modulation V(t)")
    p1.add_argument("--omega", type=float, default=None, help="angular frequency of V")
    p1.add_argument("--v0", type=float, default=None, help="constant V value")
    _add_common_flags(p1)
    p1.set_defaults(func=cmd_example1)

    p2 = sub.add_parser("ou", help="quadratic drift potential x^2/2")
    p2.add_argument(
        "--lambda-sweep",
        dest="lambda_sweep",
        type=str,
        default=None,
        help="comma list of lambdas for the scaling fit (default 0.02,0.04,0.08,0.16)",
    )
    _add_common_flags(p2)
    p2.set_defaults(func=cmd_ou)

    p3 = sub.add_parser("custom", help="any built-in drift family from a JSON config")
    p3.add_argument("--v", choices=["cos", "sin", "const"], default=None)
    p3.add_argument("--omega", type=float, default=None)
    p3.add_argument("--v0", type=float, default=None)
    _add_common_flags(p3)
    p3.set_defaults(func=cmd_custom)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config rejected: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SolverError as exc:
        print(f"solver abort: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except InvariantViolation as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return EXIT_INVARIANT


if __name__ == "__main__":
    sys.exit(main())
