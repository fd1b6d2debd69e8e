"""Command-line entry point: ``blptomo <subcommand> ...``."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import asdict
from pathlib import Path

from . import dataio, table1
from .errors import DatasetFormatError, OptimizerError, ValidationError
from .measure import METHODS, MODES, OptimizerOptions, grid_scan_qubit, optimize_pair
from .tomography import DynamicsDataset, prepared_states, recover_basis_dynamics
from .walk import QWConfig, config_from_metadata, generate_prepared_dataset

log = logging.getLogger("blptomo")

CONFIG_FLAGS = {
    "X": ("--X", int),
    "steps": ("--steps", int),
    "omega0": ("--omega0", float),
    "Omega": ("--Omega", float),
    "n_h": ("--n-h", float),
    "n_v": ("--n-v", float),
    "dt_h": ("--dt-h", float),
    "dt_v": ("--dt-v", float),
}


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("walk configuration (defaults: published values)")
    g.add_argument("--config", type=Path, help="QWConfig document; flags below override it")
    for field, (flag, typ) in CONFIG_FLAGS.items():
        g.add_argument(flag, dest=field, type=typ, default=None)
    g.add_argument("--boundary", choices=["periodic"], default=None)
    g.add_argument("--phase-convention", dest="phase_convention", choices=["literal", "omega-dt"], default=None)
    g.add_argument("--coin-map", dest="coin_map", choices=["L=H", "L=V"], default=None)


def _add_optimizer_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("optimizer")
    g.add_argument("--restarts", type=int, default=64)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--mode", choices=MODES, default="orthogonal-pure")
    g.add_argument("--method", choices=METHODS, default="nelder-mead")
    g.add_argument("--tol", type=float, default=1e-6, help="convergence tolerance on the objective")
    g.add_argument("--max-iter", dest="max_iter", type=int, default=2000)


def _resolve_config(args) -> QWConfig:
    cfg = dataio.read_config(args.config.read_bytes()) if args.config else QWConfig()
    changes = {}
    for name in list(CONFIG_FLAGS) + ["boundary", "phase_convention", "coin_map"]:
        value = getattr(args, name, None)
        if value is not None:
            changes[name] = value
    return cfg.replace(**changes) if changes else cfg


def _options(args) -> OptimizerOptions:
    return OptimizerOptions(
        mode=args.mode, restarts=args.restarts, max_iter=args.max_iter, tol=args.tol, seed=args.seed, method=args.method
    )


def _echo(label: str, obj) -> None:
    print(f"{label}: {json.dumps(obj, sort_keys=True)}")


def _read_basis(path: Path, tol: float | None) -> DynamicsDataset:
    ds = dataio.read_dataset(path.read_bytes(), tol=tol)
    return recover_basis_dynamics(ds) if ds.flavor == "prepared" else ds


def _write(path: Path, data: bytes | str) -> None:
    if isinstance(data, str):
        data = data.encode("utf-8")
    path.write_bytes(data)


def cmd_simulate(args) -> int:
    cfg = _resolve_config(args)
    _echo("config", dataio.config_to_doc(cfg))
    print("seed: none (deterministic simulation)")
    ds = generate_prepared_dataset(cfg)
    _write(args.out, dataio.write_dataset(ds))
    print(f"wrote prepared dataset: N={ds.dim}, {len(ds.series)} series, {ds.n_times} times -> {args.out}")
    return 0


def cmd_tomo_plan(args) -> int:
    _echo("config", {"dim": args.dim})
    print("seed: none")
    lines = [f"# {args.dim ** 2} preparation states for N={args.dim} (levels 1..N)"]
    for lab, _ in prepared_states(args.dim):
        if lab.kind == "diag":
            state = f"|{lab.m}>"
        elif lab.kind == "x":
            state = f"(|{lab.m}> + |{lab.n}>)/sqrt2"
        else:
            state = f"(|{lab.m}> + i|{lab.n}>)/sqrt2"
        lines.append(f"{str(lab):<14} {state}")
    text = "\n".join(lines) + "\n"
    if args.out:
        _write(args.out, text)
    sys.stdout.write(text)
    return 0


def cmd_reconstruct(args) -> int:
    _echo("config", {"in": str(args.inp), "data_tol": args.data_tol})
    print("seed: none")
    prepared = dataio.read_dataset(args.inp.read_bytes(), tol=args.data_tol)
    basis = recover_basis_dynamics(prepared)
    _write(args.out, dataio.write_dataset(basis))
    print(f"wrote basis dataset: N={basis.dim}, {len(basis.series)} series -> {args.out}")
    return 0


def _report(result, basis: DynamicsDataset, args) -> None:
    config = config_from_metadata(basis.metadata)
    doc, table = dataio.write_result(result, config, basis.metadata)
    _write(args.out, doc)
    table_path = args.table or args.out.with_suffix(".dat")
    _write(table_path, table)
    print(f"non-Markovianity: {result.value!r}")
    print(f"wrote result -> {args.out}; trajectory table -> {table_path}")


def cmd_quantify(args) -> int:
    opts = _options(args)
    basis = _read_basis(args.inp, args.data_tol)
    cfg = config_from_metadata(basis.metadata)
    _echo("config", dataio.config_to_doc(cfg) if cfg else dict(basis.metadata))
    _echo("optimizer", asdict(opts))
    print(f"seed: {opts.seed}")
    result = optimize_pair(basis, opts)
    _report(result, basis, args)
    return 0


def cmd_scan(args) -> int:
    basis = _read_basis(args.inp, args.data_tol)
    _echo("config", {"resolution": args.resolution, "in": str(args.inp)})
    print("seed: none (deterministic grid)")
    result = grid_scan_qubit(basis, tuple(args.resolution))
    _report(result, basis, args)
    return 0


def cmd_table1(args) -> int:
    cfg = _resolve_config(args)
    opts = _options(args)
    _echo("config", dataio.config_to_doc(cfg))
    _echo("optimizer", asdict(opts))
    print(f"seed: {opts.seed}")
    rows = table1.run(cfg, opts)
    text = table1.format_table(rows)
    sys.stdout.write(text)
    if args.out:
        _write(args.out, text)
    if args.plot_dir:
        args.plot_dir.mkdir(parents=True, exist_ok=True)
        for row in rows:
            for conv, res in row.results.items():
                _write(args.plot_dir / f"trajectory_X{row.X}_{conv}.dat", dataio.trajectory_table(res.trajectory))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="blptomo", description="BLP non-Markovianity from N^2 prepared-state dynamics."
    )
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="simulate the open quantum walk for all preparation states")
    _add_config_flags(p)
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("tomo-plan", help="list the N^2 preparation states")
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--out", type=Path)
    p.set_defaults(func=cmd_tomo_plan)

    for name, func, help_ in (
        ("reconstruct", cmd_reconstruct, "recover basis-operator dynamics from a prepared dataset"),
        ("quantify", cmd_quantify, "maximize the non-Markovianity over initial pairs"),
        ("scan", cmd_scan, "brute-force Bloch-sphere scan (N=2 only)"),
    ):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--in", dest="inp", type=Path, required=True)
        p.add_argument("--out", type=Path, required=True)
        p.add_argument("--data-tol", dest="data_tol", type=float, default=None, help="override dataset tolerance")
        if name != "reconstruct":
            p.add_argument("--table", type=Path, help="trajectory table path (default: OUT with .dat suffix)")
        if name == "quantify":
            _add_optimizer_flags(p)
        if name == "scan":
            p.add_argument("--resolution", type=int, nargs=2, default=[200, 400], metavar=("NTHETA", "NPHI"))
        p.set_defaults(func=func)

    p = sub.add_parser("table1", help="X = 0, 1, 2 regression under both phase conventions")
    _add_config_flags(p)
    _add_optimizer_flags(p)
    p.add_argument("--out", type=Path)
    p.add_argument("--plot-dir", dest="plot_dir", type=Path)
    p.set_defaults(func=cmd_table1)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2), format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except FileNotFoundError as exc:
        print(f"error: file not found: {exc.filename}", file=sys.stderr)
    except (ValidationError, DatasetFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
    except OptimizerError as exc:
        print(f"error: optimizer failed: {exc}", file=sys.stderr)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
    return 1


if __name__ == "__main__":
    sys.exit(main())
