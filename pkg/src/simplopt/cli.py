"""Command-line driver: problem presets, run orchestration, result writers.

Outputs per run directory: convergence.csv, density_final.pgm,
fields_final.vtk, config_echo.json, and (unless disabled) convergence.png
and density_final.png.

Exit status: 0 converged, 2 iteration cap reached, 1 any error.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import asdict, dataclass, replace

# Cap kernel parallelism before the numeric stack loads its thread pools
# (SIMPL_THREADS=0 or unset leaves the libraries' defaults alone).
_threads = os.environ.get("SIMPL_THREADS")
if _threads and _threads != "0":
    for _var in (
        "OMP_NUM_THREADS",
        "OPENBLAS_NUM_THREADS",
        "MKL_NUM_THREADS",
        "NUMEXPR_NUM_THREADS",
    ):
        os.environ.setdefault(_var, _threads)

import numpy as np

from .baselines import BaselineConfig, oc_solve, pgd_solve
from .output import write_convergence_csv, write_pgm, write_vtk
from .presets import PRESET_NAMES, build_problem, mirror_cell_field, mirror_point_field
from .report import save_convergence_figure, save_density_figure
from .simpl import simpl_solve

__all__ = ["RunConfig", "run", "main"]

_STOP_CHOICES = ("kkt", "kkt-relative", "s")


@dataclass
class RunConfig:
    problem: str = "mbb"
    nx: int | None = None
    ny: int | None = None
    theta: float | None = None
    rmin: float | None = None
    nu: float | None = None
    optimizer: str = "simpl"  # simpl | pgd | oc
    line_search: str | None = None  # armijo | bregman
    kkt_variant: str | None = None  # a | b
    stop: str | None = None  # kkt | kkt-relative | s
    tol: float | None = None
    max_iters: int | None = None
    initial: str = "uniform"  # inverter seed recipe
    out: str = "simplopt_out"
    seed: int = 0  # reserved for randomized studies; echoed into the config
    figures: bool = True


def _problem_kwargs(config: RunConfig) -> dict:
    kwargs = {}
    if config.theta is not None:
        kwargs["theta"] = config.theta
    if config.rmin is not None:
        kwargs["r_min"] = config.rmin
    if config.nu is not None:
        kwargs["nu"] = config.nu
    if config.problem == "inverter":
        kwargs["initial"] = config.initial
    return kwargs


def run(config: RunConfig) -> int:
    """Execute one optimization run and write all result files."""
    problem = build_problem(
        config.problem, nx=config.nx, ny=config.ny, **_problem_kwargs(config)
    )
    cfg = replace(problem.simpl_defaults)
    if config.line_search is not None:
        cfg = replace(cfg, line_search=config.line_search)
    if config.kkt_variant is not None:
        cfg = replace(cfg, kkt_variant=config.kkt_variant.upper())
    if config.stop is not None:
        stop_on, tol_mode = {
            "kkt": ("kkt", "absolute"),
            "kkt-relative": ("kkt", "relative"),
            "s": ("stationarity", "absolute"),
        }[config.stop]
        cfg = replace(cfg, stop_on=stop_on, tol_mode=tol_mode)
    if config.tol is not None:
        cfg = replace(cfg, tol=config.tol)
    if config.max_iters is not None:
        cfg = replace(cfg, max_iters=config.max_iters)

    obj, adm = problem.objective, problem.adm
    if config.optimizer == "simpl":
        trace = simpl_solve(obj, adm, cfg, problem.rho0)
    elif config.optimizer in ("pgd", "oc"):
        if cfg.stop_on != "stationarity":
            raise ValueError(
                f"{config.optimizer} supports only the stationarity stop (--stop s)"
            )
        bcfg = BaselineConfig(
            method=config.optimizer,
            c1=cfg.c1,
            tol=cfg.tol,
            max_iters=cfg.max_iters if config.max_iters is not None else 300,
            bisection_tol=cfg.bisection_tol,
        )
        solver = pgd_solve if config.optimizer == "pgd" else oc_solve
        trace = solver(obj, adm, bcfg, problem.rho0)
    else:
        raise ValueError(f"unknown optimizer {config.optimizer!r}")

    os.makedirs(config.out, exist_ok=True)
    echo = asdict(config)
    with open(os.path.join(config.out, "config_echo.json"), "w") as fh:
        json.dump(echo, fh, indent=2, sort_keys=True)
        fh.write("\n")

    write_convergence_csv(trace, os.path.join(config.out, "convergence.csv"))

    mesh = problem.mesh
    rho = trace.final_density
    # final-state fields for the VTK/figure writers
    _, cache = obj.evaluate(rho)
    rho_cells = rho.values.reshape(mesh.ny, mesh.nx)
    e_cells = cache.e_cells.reshape(mesh.ny, mesh.nx)
    rt_nodes = cache.rho_tilde.reshape(mesh.ny + 1, mesh.nx + 1)
    ux = cache.u[0::2].reshape(mesh.ny + 1, mesh.nx + 1)
    uy = cache.u[1::2].reshape(mesh.ny + 1, mesh.nx + 1)
    ly = mesh.ly
    if problem.mirror_y:
        rho_cells = mirror_cell_field(rho_cells)
        e_cells = mirror_cell_field(e_cells)
        rt_nodes = mirror_point_field(rt_nodes)
        ux = mirror_point_field(ux)
        uy = mirror_point_field(uy, odd=True)
        ly = 2.0 * mesh.ly

    write_pgm(rho_cells, os.path.join(config.out, "density_final.pgm"))
    write_vtk(
        os.path.join(config.out, "fields_final.vtk"),
        rho_cells.shape[1],
        rho_cells.shape[0],
        mesh.hx,
        mesh.hy,
        {"design_density": rho_cells, "stiffness": e_cells},
        {"filtered_density": rt_nodes, "displacement_x": ux, "displacement_y": uy},
    )
    if config.figures:
        save_convergence_figure(trace, os.path.join(config.out, "convergence.png"))
        save_density_figure(
            mesh.cell_average(cache.rho_tilde).reshape(mesh.ny, mesh.nx)
            if not problem.mirror_y
            else mirror_cell_field(
                mesh.cell_average(cache.rho_tilde).reshape(mesh.ny, mesh.nx)
            ),
            mesh.lx,
            ly,
            os.path.join(config.out, "density_final.png"),
        )

    frac = rho.volume() / adm.domain_volume
    active = abs(rho.volume() - adm.volume_budget) <= 1e-6 * adm.domain_volume
    status = "converged" if trace.converged else "hit the iteration cap"
    print(
        f"[simplopt] {config.problem}/{config.optimizer}: {status} after "
        f"{trace.iterations} iterations, {trace.evals[-1]} evaluations, "
        f"F = {trace.F[-1]:.6e} ({trace.stop_reason})"
    )
    print(
        f"[simplopt] final volume fraction {frac:.4f} vs theta = {adm.theta} "
        f"(constraint {'active' if active else 'inactive'})"
    )
    return 0 if trace.converged else 2


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="simplopt",
        description="Density-based topology optimization with the SiMPL method",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("run", help="run one optimization problem")
    p.add_argument("--problem", choices=PRESET_NAMES, default=None)
    p.add_argument("--nx", type=int, default=None)
    p.add_argument("--ny", type=int, default=None)
    p.add_argument("--theta", type=float, default=None)
    p.add_argument("--rmin", type=float, default=None)
    p.add_argument("--nu", type=float, default=None)
    p.add_argument("--optimizer", choices=("simpl", "pgd", "oc"), default=None)
    p.add_argument("--line-search", choices=("armijo", "bregman"), default=None)
    p.add_argument("--kkt-variant", choices=("a", "b"), default=None)
    p.add_argument("--stop", choices=_STOP_CHOICES, default=None)
    p.add_argument("--tol", type=float, default=None)
    p.add_argument("--max-iters", type=int, default=None)
    p.add_argument(
        "--initial", choices=("uniform", "strip-center", "strip-bottom"), default=None
    )
    p.add_argument("--out", default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--config", default=None, help="JSON file with RunConfig fields")
    p.add_argument("--figures", action=argparse.BooleanOptionalAction, default=None)
    return parser


def _merge_config(args: argparse.Namespace) -> RunConfig:
    config = RunConfig()
    if args.config:
        with open(args.config) as fh:
            data = json.load(fh)
        valid = set(RunConfig.__dataclass_fields__)
        unknown = set(data) - valid
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        config = replace(config, **data)
    overrides = {
        key: getattr(args, attr)
        for key, attr in [
            ("problem", "problem"),
            ("nx", "nx"),
            ("ny", "ny"),
            ("theta", "theta"),
            ("rmin", "rmin"),
            ("nu", "nu"),
            ("optimizer", "optimizer"),
            ("line_search", "line_search"),
            ("kkt_variant", "kkt_variant"),
            ("stop", "stop"),
            ("tol", "tol"),
            ("max_iters", "max_iters"),
            ("initial", "initial"),
            ("out", "out"),
            ("seed", "seed"),
            ("figures", "figures"),
        ]
        if getattr(args, attr) is not None
    }
    return replace(config, **overrides)


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse exits 2 on usage errors, 0 on --help
        return 0 if exc.code == 0 else 1
    try:
        config = _merge_config(args)
        return run(config)
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"simplopt: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
