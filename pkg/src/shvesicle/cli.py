"""Command-line front end.

Subcommands: ``minimize``, ``sweep``, ``gradcheck``, ``reconstruct`` and
``export-mesh``.  Every flag can also come from a JSON file given with
``--config``; flags on the command line take precedence.  Failures exit
nonzero and print a JSON error object to stderr (also written to
``error.json`` in the output directory).
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict
from pathlib import Path
from typing import Sequence

import numpy as np

from . import io
from .energy import EnergyParams
from .geometry import GeometryError, truncation_degree
from .optimize import LineSearchError, NcgConfig, fd_gradient_check
from .quadrature import build_grid
from .reconstruct import (
    DENSE_N_T,
    RECON_N_T,
    RBC_FORMS,
    AxisymmetricTarget,
    CoefficientTarget,
    dense_grid_for,
    profile_to_radius,
    project_coefficients,
    rbc_target,
    read_profile_csv,
    reconstruction_errors,
    reconstruction_grid,
)
from .study import (
    FINE_N_T,
    REFERENCE_SH,
    REFERENCE_SHAPE_EQ,
    REFERENCE_V,
    Perturbation,
    ReducedVolumeRun,
    initial_coeffs,
    minimize_reduced_volume,
)

logger = logging.getLogger("shvesicle")

EXIT_CONFIG = 2
EXIT_GEOMETRY = 3
EXIT_LINE_SEARCH = 4
CONSTRAINT_TOL = 0.01
TRACE_HEADER = ("k", "energy", "grad_norm", "alpha", "beta", "s_area", "volume", "reduced_v")


class ConfigError(ValueError):
    pass


class CliFailure(RuntimeError):
    """Raised after artifacts are written when the run itself failed."""

    def __init__(self, kind: str, message: str, code: int):
        super().__init__(message)
        self.kind = kind
        self.code = code


# ---------------------------------------------------------------- parsing


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="JSON file of option defaults (keys are flag names)")
    p.add_argument("--out", type=Path, default=Path("out"), help="output directory (default: out)")
    p.add_argument("--no-plots", action="store_true", help="skip PNG figures")
    p.add_argument("-v", "--verbose", action="count", default=0)


def _grid(p: argparse.ArgumentParser, n_t_default=None) -> None:
    p.add_argument("--N", type=int, help="truncation degree")
    p.add_argument("--n-t", type=int, default=n_t_default, help="polar quadrature nodes")
    p.add_argument("--n-p", type=int, help="azimuthal quadrature nodes (default 2*n_t)")


def _energy(p: argparse.ArgumentParser) -> None:
    d = EnergyParams()
    p.add_argument("--kappa-c", type=float, default=d.kappa_c, help="bending rigidity")
    p.add_argument("--kappa-g", type=float, default=d.kappa_g, help="Gaussian rigidity")
    p.add_argument("--c0", type=float, default=d.c0, help="spontaneous curvature")
    p.add_argument("--k-s", type=float, default=d.k_s, help="area penalty")
    p.add_argument("--k-v", type=float, default=d.k_v, help="volume penalty")


def _ncg(p: argparse.ArgumentParser) -> None:
    d = NcgConfig()
    p.add_argument("--eps-g", type=float, default=d.eps_g, help="gradient-change tolerance")
    p.add_argument("--eps-a", type=float, default=d.eps_a, help="coefficient-step tolerance")
    p.add_argument("--max-iters", type=int, default=d.max_iters)
    p.add_argument("--ls-max-iters", type=int, default=d.ls_max_iters)
    p.add_argument("--ls-eps", type=float, default=d.ls_eps)
    p.add_argument("--beta-verbatim", action="store_true", help="no beta clamp and no restarts")


def _perturb(p: argparse.ArgumentParser) -> None:
    d = Perturbation()
    p.add_argument("--perturb-n", type=int, default=d.n, help="degree of the perturbed mode")
    p.add_argument("--perturb-m", type=int, default=d.m, help="order of the perturbed mode")
    p.add_argument("--amplitude", type=float, default=d.amplitude, help="perturbation amplitude")
    p.add_argument("--noise", type=float, default=d.noise, help="uniform noise on all non-constant modes")
    p.add_argument("--seed", type=int, default=d.seed)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="shvesicle", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("minimize", help="minimize the bending energy at one reduced volume")
    _common(p), _grid(p), _energy(p), _ncg(p), _perturb(p)
    p.add_argument("--v", type=float, default=1.0, help="target reduced volume")
    p.add_argument("--coeffs", type=Path, help="start from this coefficient file instead of a sphere")
    p.add_argument("--fine-n-t", type=int, default=FINE_N_T, help="polar nodes of the re-evaluation grid")
    p.add_argument("--no-mesh", action="store_true", help="skip surface.obj")
    p.add_argument("--mesh-n-t", type=int, default=48)

    p = sub.add_parser("sweep", help="minimize over a list of reduced volumes")
    _common(p), _grid(p), _energy(p), _ncg(p), _perturb(p)
    p.add_argument("--v-list", help="comma-separated reduced volumes")
    p.add_argument("--v-range", nargs=3, type=float, metavar=("START", "STOP", "STEP"))
    p.add_argument("--fine-n-t", type=int, default=FINE_N_T)
    p.add_argument("--jobs", type=int, default=1, help="worker processes")

    p = sub.add_parser("gradcheck", help="analytic gradient versus central differences")
    _common(p), _grid(p, n_t_default=20), _energy(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--noise", type=float, default=0.05, help="uniform amplitude on non-constant modes")
    p.add_argument("--step", type=float, default=1e-6)
    p.add_argument("--tol", type=float, default=1e-6, help="exit 1 if the max error exceeds this")

    p = sub.add_parser("reconstruct", help="project a target surface and report truncation errors")
    _common(p), _grid(p, n_t_default=RECON_N_T), _energy(p)
    p.add_argument("--target", choices=("rbc", "profile", "coeffs"), default="rbc")
    p.add_argument("--blend", type=float, default=0.5, help="rbc: weight on the 217 mOsm row")
    p.add_argument("--form", choices=RBC_FORMS, default="smooth", help="rbc: rim factor")
    p.add_argument("--profile", type=Path, help="profile: CSV with header x,h")
    p.add_argument("--coeffs", type=Path, help="coeffs: coefficient file of the target")
    p.add_argument("--degrees", default="1,2,4,6,8,12", help="comma-separated N values (overridden by --N)")
    p.add_argument("--dense-n-t", type=int, default=DENSE_N_T)

    p = sub.add_parser("export-mesh", help="write an OBJ mesh of a coefficient file")
    _common(p), _grid(p, n_t_default=48)
    p.add_argument("--coeffs", type=Path, help="coefficient file (required)")
    return ap


def _apply_config(ap: argparse.ArgumentParser, argv: Sequence[str] | None, args: argparse.Namespace):
    if args.config is None:
        return args
    try:
        cfg = json.loads(args.config.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    cfg = {k.replace("-", "_"): v for k, v in cfg.items()}
    if cfg.pop("command", args.command) != args.command:
        raise ConfigError(f"config is for a different command than {args.command!r}")
    unknown = sorted(set(cfg) - set(vars(args)))
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    for key in ("out", "profile", "coeffs"):
        if cfg.get(key) is not None:
            cfg[key] = Path(cfg[key])
    sub = next(a for a in ap._actions if isinstance(a, argparse._SubParsersAction))
    sub.choices[args.command].set_defaults(**cfg)
    return ap.parse_args(argv)


# ---------------------------------------------------------------- config objects


def _params(args) -> EnergyParams:
    return EnergyParams(kappa_c=args.kappa_c, kappa_g=args.kappa_g, c0=args.c0, k_s=args.k_s, k_v=args.k_v)


def _ncg_cfg(args) -> NcgConfig:
    return NcgConfig(
        eps_g=args.eps_g,
        eps_a=args.eps_a,
        max_iters=args.max_iters,
        ls_max_iters=args.ls_max_iters,
        ls_eps=args.ls_eps,
        beta_floor_at_zero=not args.beta_verbatim,
    )


def _perturbation(args) -> Perturbation:
    if abs(args.perturb_m) > args.perturb_n:
        raise ConfigError("|perturb-m| must not exceed perturb-n")
    return Perturbation(args.perturb_n, args.perturb_m, args.amplitude, args.noise, args.seed)


def _check_grid(args, N: int | None = None) -> None:
    if args.N is not None and args.N < 0:
        raise ConfigError("N must be nonnegative")
    if args.n_t is not None and args.n_t < 2:
        raise ConfigError("n-t must be at least 2")
    if args.n_p is not None and args.n_p < 4:
        raise ConfigError("n-p must be at least 4")
    N = args.N if N is None else N
    if N is not None and args.n_t is not None and args.n_t <= N:
        raise ConfigError(f"n-t={args.n_t} cannot resolve degree N={N}")


def _v_values(args) -> list[float]:
    if args.v_list is not None and args.v_range is not None:
        raise ConfigError("give --v-list or --v-range, not both")
    if args.v_range is not None:
        start, stop, step = args.v_range
        if step <= 0 or stop < start:
            raise ConfigError("v-range needs START <= STOP and STEP > 0")
        n = int(math.floor((stop - start) / step + 1e-9)) + 1
        vals = [round(start + i * step, 12) for i in range(n)]
    elif args.v_list is not None:
        raw = args.v_list if isinstance(args.v_list, list) else str(args.v_list).split(",")
        try:
            vals = [float(x) for x in raw]
        except ValueError as exc:
            raise ConfigError(f"bad v-list: {exc}") from exc
    else:
        vals = list(REFERENCE_V)
    for v in vals:
        if not 0.0 < v <= 1.0:
            raise ConfigError(f"reduced volume must be in (0, 1], got {v}")
    return vals


def _degrees(args) -> list[int]:
    if args.N is not None:
        return [args.N]
    try:
        out = sorted({int(x) for x in str(args.degrees).split(",")})
    except ValueError as exc:
        raise ConfigError(f"bad degrees: {exc}") from exc
    if not out or out[0] < 0:
        raise ConfigError("degrees must be nonnegative")
    return out


# ---------------------------------------------------------------- outputs


def _trace_rows(run: ReducedVolumeRun):
    for r in run.result.trace.rows:
        yield (r.k, r.energy, r.grad_norm, r.alpha, r.beta, r.s_area, r.volume, r.reduced_v)


def run_summary(run: ReducedVolumeRun) -> dict:
    rep, fine, p = run.report, run.fine_report, run.params
    return {
        "command": "minimize",
        "v_target": run.v_target,
        "N": run.N,
        "n_t": run.n_t,
        "n_p": run.n_p,
        "params": asdict(p),
        "E": rep.e_bend,
        "E_total": rep.e_total,
        "E_over_E0": run.e_ratio_coarse,
        "S_A": rep.s_area,
        "V": rep.volume,
        "v": rep.reduced_v,
        "grad_norm": rep.grad_norm,
        "iterations": run.result.iterations,
        "stop_reason": run.result.stop_reason,
        "area_residual": run.area_residual,
        "volume_residual": run.volume_residual,
        "constraints_ok": run.area_residual < CONSTRAINT_TOL and run.volume_residual < CONSTRAINT_TOL,
        "fine": {
            "n_t": run.fine_n_t,
            "E": fine.e_bend,
            "E_over_E0": run.e_ratio,
            "S_A": fine.s_area,
            "V": fine.volume,
            "v": fine.reduced_v,
        },
        "fine_rel_gap": abs(fine.e_bend - rep.e_bend) / abs(fine.e_bend),
    }


def _write_run(run: ReducedVolumeRun, out: Path, plots: bool) -> dict:
    out.mkdir(parents=True, exist_ok=True)
    summary = run_summary(run)
    io.write_json(out / "summary.json", summary)
    io.write_coeffs(out / "coeffs.json", run.result.coeffs)
    io.write_csv(out / "trace.csv", TRACE_HEADER, _trace_rows(run))
    if plots:
        from .plotting import plot_shape, plot_trace

        rows = run.result.trace.rows
        plot_trace([r.energy for r in rows], [r.grad_norm for r in rows], out / "trace.png")
        plot_shape(run.result.coeffs, out / "shape.png")
    return summary


def _check_stop(run: ReducedVolumeRun) -> None:
    if run.result.stop_reason == "line_search_failed":
        raise CliFailure(
            "line_search_failed",
            f"no energy decrease found after {run.result.iterations} iterations at v={run.v_target}",
            EXIT_LINE_SEARCH,
        )


# ---------------------------------------------------------------- commands


def _minimize_point(v, N, n_t, n_p, params, perturb, cfg, fine_n_t, coeffs0=None) -> ReducedVolumeRun:
    return minimize_reduced_volume(v, N, n_t, n_p, params, perturb, cfg, fine_n_t, coeffs0=coeffs0)


def cmd_minimize(args) -> int:
    coeffs0 = io.read_coeffs(args.coeffs) if args.coeffs else None
    _check_grid(args, truncation_degree(coeffs0.size) if coeffs0 is not None else None)
    if not 0.0 < args.v <= 1.0:
        raise ConfigError(f"reduced volume must be in (0, 1], got {args.v}")
    params, cfg, perturb = _params(args), _ncg_cfg(args), _perturbation(args)
    run = _minimize_point(args.v, args.N, args.n_t, args.n_p, params, perturb, cfg, args.fine_n_t, coeffs0)
    summary = _write_run(run, args.out, not args.no_plots)
    if not args.no_mesh:
        io.write_obj(args.out / "surface.obj", run.result.coeffs, build_grid(args.mesh_n_t))
    print(io.dumps({k: summary[k] for k in ("E_over_E0", "v", "iterations", "stop_reason")}, indent=None))
    _check_stop(run)
    return 0


SWEEP_HEADER = (
    "v_target",
    "N",
    "n_t",
    "n_p",
    "E_over_E0",
    "E_over_E0_coarse",
    "S_A",
    "V",
    "v",
    "area_residual",
    "volume_residual",
    "iterations",
    "stop_reason",
    "ref_harmonic",
    "ref_shape_eq",
)


def _reference(v: float, table) -> float:
    for rv, val in zip(REFERENCE_V, table):
        if abs(rv - v) < 1e-9:
            return val
    return float("nan")


def cmd_sweep(args) -> int:
    _check_grid(args)
    vals = _v_values(args)
    params, cfg, perturb = _params(args), _ncg_cfg(args), _perturbation(args)
    if args.jobs < 1:
        raise ConfigError("jobs must be positive")
    jobs = [(v, args.N, args.n_t, args.n_p, params, perturb, cfg, args.fine_n_t) for v in vals]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            runs = list(pool.map(_minimize_point, *zip(*jobs)))
    else:
        runs = [_minimize_point(*j) for j in jobs]

    args.out.mkdir(parents=True, exist_ok=True)
    rows = []
    for run in runs:
        _write_run(run, args.out / f"v{run.v_target:.3f}", plots=False)
        rep = run.report
        rows.append(
            (
                run.v_target,
                run.N,
                run.n_t,
                run.n_p,
                run.e_ratio,
                run.e_ratio_coarse,
                rep.s_area,
                rep.volume,
                rep.reduced_v,
                run.area_residual,
                run.volume_residual,
                run.result.iterations,
                run.result.stop_reason,
                _reference(run.v_target, REFERENCE_SH),
                _reference(run.v_target, REFERENCE_SHAPE_EQ),
            )
        )
    io.write_csv(args.out / "sweep.csv", SWEEP_HEADER, rows)
    if not args.no_plots:
        from .plotting import plot_sweep

        plot_sweep([r.v_target for r in runs], [r.e_ratio for r in runs], args.out / "sweep.png")
    for run in runs:
        print(f"v={run.v_target:.3f}  E/E0={run.e_ratio:.4f}  iters={run.result.iterations}  {run.result.stop_reason}")
    for run in runs:
        _check_stop(run)
    return 0


def cmd_gradcheck(args) -> int:
    N = 4 if args.N is None else args.N
    _check_grid(args, N)
    if not args.step > 0:
        raise ConfigError("step must be positive")
    grid = build_grid(args.n_t, args.n_p)
    coeffs = initial_coeffs(N, Perturbation(amplitude=0.0, noise=args.noise, seed=args.seed))
    chk = fd_gradient_check(coeffs, grid, _params(args), step=args.step)
    args.out.mkdir(parents=True, exist_ok=True)
    doc = {
        "command": "gradcheck",
        "N": N,
        "seed": args.seed,
        "step": args.step,
        "max_rel_error": chk.max_error,
        "passed": chk.max_error < args.tol,
        "analytic": chk.analytic,
        "numeric": chk.numeric,
        "rel_errors": chk.rel_errors,
    }
    io.write_json(args.out / "gradcheck.json", doc)
    print(io.dumps({"N": N, "seed": args.seed, "max_rel_error": chk.max_error}, indent=None))
    return 0 if chk.max_error < args.tol else 1


RECON_HEADER = ("N", "e_rms", "e_ms", "e_vol", "e_sa", "e_eng", "star_shaped")


def _recon_target(args):
    if args.target == "rbc":
        if not 0.0 <= args.blend <= 1.0:
            raise ConfigError("blend must be in [0, 1]")
        return rbc_target(args.blend, args.form)
    if args.target == "profile":
        if args.profile is None:
            raise ConfigError("--target profile needs --profile")
        return AxisymmetricTarget(read_profile_csv(args.profile), tag=args.profile.stem)
    if args.coeffs is None:
        raise ConfigError("--target coeffs needs --coeffs")
    return CoefficientTarget(io.read_coeffs(args.coeffs), tag=args.coeffs.stem)


def cmd_reconstruct(args) -> int:
    degrees = _degrees(args)
    _check_grid(args, max(degrees))
    target = _recon_target(args)
    params = _params(args)
    args.out.mkdir(parents=True, exist_ok=True)
    rows, fits = [], {}
    for N in degrees:
        grid = reconstruction_grid(N, args.n_t, args.n_p)
        coeffs = project_coefficients(target, N, grid)
        err = reconstruction_errors(target, coeffs, grid, params, dense_grid_for(N, args.dense_n_t))
        fits[N] = coeffs
        io.write_coeffs(args.out / f"coeffs_N{N}.json", coeffs)
        rows.append((N, err.e_rms, err.e_ms, err.e_vol, err.e_sa, err.e_eng, int(err.star_shaped)))
    io.write_csv(args.out / "reconstruct.csv", RECON_HEADER, rows)
    io.write_json(
        args.out / "summary.json",
        {
            "command": "reconstruct",
            "target": target.tag,
            "n_t": args.n_t,
            "rows": [dict(zip(RECON_HEADER, r)) for r in rows],
        },
    )
    if not args.no_plots:
        from .plotting import plot_reconstruction

        th = np.linspace(1e-6, math.pi - 1e-6, 361)
        if isinstance(target, AxisymmetricTarget):
            r = profile_to_radius(target.profile, th)
            rho = np.concatenate([r * np.sin(th), -r[::-1] * np.sin(th[::-1])])
            rz = (rho, np.concatenate([r * np.cos(th), r[::-1] * np.cos(th[::-1])]))
        else:
            from .plotting import meridian

            rz = meridian(target.coeffs)
        plot_reconstruction(rz, fits, args.out / "reconstruct.png")
    for r in rows:
        print(f"N={r[0]:2d}  e_rms={r[1]:.3e}  e_ms={r[2]:.3e}  e_vol={r[3]:.3e}  e_sa={r[4]:.3e}  e_eng={r[5]:.3e}")
    return 0


def cmd_export_mesh(args) -> int:
    if args.coeffs is None:
        raise ConfigError("export-mesh needs --coeffs")
    coeffs = io.read_coeffs(args.coeffs)
    _check_grid(args)
    args.out.mkdir(parents=True, exist_ok=True)
    path = io.write_obj(args.out / "surface.obj", coeffs, build_grid(args.n_t, args.n_p))
    print(path)
    return 0


COMMANDS = {
    "minimize": cmd_minimize,
    "sweep": cmd_sweep,
    "gradcheck": cmd_gradcheck,
    "reconstruct": cmd_reconstruct,
    "export-mesh": cmd_export_mesh,
}


def _fail(args, kind: str, message: str, code: int, extra=None) -> int:
    doc = {"error": kind, "message": message, "command": getattr(args, "command", None)}
    if extra:
        doc.update(extra)
    text = io.dumps(doc, indent=None)
    print(text, file=sys.stderr)
    out = getattr(args, "out", None)
    if out is not None:
        try:
            Path(out).mkdir(parents=True, exist_ok=True)
            (Path(out) / "error.json").write_text(text + "\n")
        except OSError:
            pass
    return code


def main(argv: Sequence[str] | None = None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2), format="%(levelname)s %(message)s")
    try:
        args = _apply_config(ap, argv, args)
        return COMMANDS[args.command](args)
    except CliFailure as exc:
        return _fail(args, exc.kind, str(exc), exc.code)
    except GeometryError as exc:
        return _fail(args, "geometry", str(exc), EXIT_GEOMETRY, {"nodes": [list(map(int, n)) for n in exc.nodes[:20]]})
    except LineSearchError as exc:
        return _fail(args, "line_search_failed", str(exc), EXIT_LINE_SEARCH)
    except (ConfigError, ValueError, OSError, np.linalg.LinAlgError) as exc:
        return _fail(args, "config", str(exc), EXIT_CONFIG)


if __name__ == "__main__":
    sys.exit(main())
