"""Command-line entry point: ``cutrom <command> [options]``.

Commands write CSV files into ``--out`` and, unless ``--no-figures`` is
given, a PNG figure next to each CSV.
"""
import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import pipeline, pod, report, rom, snapshot
from .cases import RunConfig, make_case
from .errors import CutromError, ParameterRangeError

log = logging.getLogger("cutrom")

CONFIG_FLAGS = (
    "case", "h", "train", "test", "nmax", "extension", "transport", "gamma_d", "gamma_n",
    "gamma_1", "gamma_1u", "gamma_1p", "paper_faces", "lifting", "seed", "workers", "out",
)


class UsageError(CutromError):
    pass


def build_parser():
    parser = argparse.ArgumentParser(prog="cutrom", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file with run settings; flags override it")
    common.add_argument("--case", choices=("darcy-ellipse", "stokes-cylinder"))
    common.add_argument("--h", type=float, help="background mesh size")
    common.add_argument("--train", type=int, help="number of training snapshots")
    common.add_argument("--test", type=int, help="number of test parameters")
    common.add_argument("--nmax", type=int, help="largest reduced basis size")
    common.add_argument("--extension", choices=snapshot.EXTENSION_MODES)
    common.add_argument("--transport", action="store_true", default=None)
    common.add_argument("--gamma-d", dest="gamma_d", type=float)
    common.add_argument("--gamma-n", dest="gamma_n", type=float)
    common.add_argument("--gamma-1", dest="gamma_1", type=float)
    common.add_argument("--gamma-1u", dest="gamma_1u", type=float)
    common.add_argument("--gamma-1p", dest="gamma_1p", type=float)
    common.add_argument("--paper-faces", dest="paper_faces", action="store_true", default=None,
                        help="pressure jump penalty on ghost faces only")
    common.add_argument("--lifting", action="store_true", default=None,
                        help="Stokes: reduce fluctuations around the reference solution")
    common.add_argument("--seed", type=int)
    common.add_argument("--workers", type=int)
    common.add_argument("--out", help="output directory (default: out)")
    common.add_argument("--no-figures", dest="figures", action="store_false",
                        help="write CSV files only")
    common.add_argument("-v", "--verbose", action="store_true")

    sub.add_parser("offline", parents=[common], help="train snapshots and POD bases")
    p = sub.add_parser("online", parents=[common], help="reduced solve at one parameter")
    p.add_argument("--mu", type=float, nargs="+", required=True)
    p.add_argument("--n", type=int, help="basis size (default: all modes)")
    p.add_argument("--basis-dir", help="directory written by offline (default: --out)")
    p = sub.add_parser("errors", parents=[common], help="mean relative errors on a test set")
    p.add_argument("--basis-dir", help="directory written by offline (default: --out)")
    p.add_argument("--step", type=int, default=5, help="spacing of the N grid")
    p = sub.add_parser("eigs-export", parents=[common], help="rewrite eigenvalue CSVs from saved bases")
    p.add_argument("--basis-dir", help="directory written by offline (default: --out)")
    p = sub.add_parser("gamma-sweep", parents=[common], help="error at fixed N for several gamma_D")
    p.add_argument("--gammas", type=float, nargs="+", required=True)
    p = sub.add_parser("hf-solve", parents=[common], help="single high-fidelity solve")
    p.add_argument("--mu", type=float, nargs="+", required=True)
    return parser


def config_from_args(args, base=None):
    overrides = {k: getattr(args, k, None) for k in CONFIG_FLAGS}
    if args.config:
        return RunConfig.from_json(args.config, **overrides)
    if base is not None:
        data = base.to_dict()
        data.update({k: v for k, v in overrides.items() if v is not None})
        return RunConfig(**data)
    return RunConfig(**{k: v for k, v in overrides.items() if v is not None})


def _saved_config(directory):
    path = Path(directory) / "config.json"
    if not path.exists():
        raise UsageError(f"{directory} has no config.json; run offline first")
    return RunConfig(**json.loads(path.read_text()))


def _check_mu(case, mu):
    try:
        return case.domain.check_parameter(mu)
    except ParameterRangeError as exc:
        raise UsageError(str(exc)) from exc


def _eigen_csvs(out, bases, figures):
    """``eigenvalues.csv`` for the primary field, ``eigenvalues_<kind>.csv`` for the others."""
    kinds = list(bases)
    paths = []
    for i, kind in enumerate(kinds):
        name = "eigenvalues.csv" if i == 0 else f"eigenvalues_{kind}.csv"
        paths.append(report.write_csv(
            out / name, ["index", "lambda", "lambda_normalized"],
            report.eigenvalue_rows(bases[kind].eigenvalues),
        ))
    if figures:
        report.plot_eigenvalues(out / "eigenvalues.png", {k: b.eigenvalues for k, b in bases.items()})
    return paths


def _load_model(directory, case):
    directory = Path(directory)
    bases = {kind: pod.load_basis(directory / "basis" / kind) for kind in case.kinds}
    lift = None
    if (directory / "lift").exists():
        v = snapshot.load(directory / "lift" / "velocity").fields[0]
        p = snapshot.load(directory / "lift" / "pressure").fields[0]
        lift = (v, p)
    return pipeline.OnlineModel(bases, lift)


def cmd_offline(args):
    config = config_from_args(args)
    case = make_case(config)
    out = Path(config.out)
    out.mkdir(parents=True, exist_ok=True)
    params = pipeline.sample_parameters(case.parameter_box, config.train, config.seed, pipeline.TRAIN_STREAM)
    variant = pipeline.Variant(config.extension, config.transport)
    log.info("training %s on %d parameters (%s)", case.name, config.train, variant.label)
    sets, bases, models = pipeline.train(
        case, [variant], params, config.nmax, lifting=config.lifting and case.name != "darcy-ellipse",
        workers=config.workers,
    )
    for kind, s in sets[variant].items():
        snapshot.save(s, out / "snapshots" / kind)
    for kind, b in bases[variant].items():
        pod.save_basis(b, out / "basis" / kind)
    lift = models[variant.label].lift
    if lift is not None:
        ref = case.transport.reference
        for kind, values in (("velocity", lift[0]), ("pressure", lift[1])):
            snapshot.save(snapshot.SnapshotSet(kind, values[None], [ref]), out / "lift" / kind)
    (out / "config.json").write_text(json.dumps(config.to_dict(), indent=1, sort_keys=True) + "\n")
    _eigen_csvs(out, bases[variant], args.figures)
    return 0


def _solution_rows(mesh, columns):
    return [tuple(mesh.vertices[i]) + tuple(c[i] for c in columns) for i in range(mesh.n_vertices)]


def cmd_online(args):
    directory = Path(args.basis_dir or args.out or "out")
    config = config_from_args(args, base=_saved_config(directory))
    case = make_case(config)
    mu = _check_mu(case, args.mu)
    model = _load_model(directory, case)
    out = Path(config.out)
    N = model.available if args.n is None else args.n
    if not 1 <= N <= model.available:
        raise UsageError(f"--n must lie in [1, {model.available}]")
    online = pipeline._online(case, model, mu, N)
    sol = online.solve(N)
    if case.name == "darcy-ellipse":
        header, columns, shown = ["x", "y", "value"], [sol.field], sol.field
    else:
        header = ["x", "y", "u1", "u2", "p"]
        columns = [sol.velocity[:, 0], sol.velocity[:, 1], sol.pressure]
        shown = np.linalg.norm(sol.velocity, axis=1)
    report.write_csv(out / "solution.csv", header, _solution_rows(case.mesh, columns))
    report.write_csv(out / "alpha.csv", ["index", "alpha"], [(i + 1, float(a)) for i, a in enumerate(sol.alpha)])
    if args.figures:
        report.plot_field(out / "solution.png", case.mesh, shown, sol.active, f"reduced solution, N={N}")
    return 0


def cmd_errors(args):
    directory = Path(args.basis_dir or args.out or "out")
    config = config_from_args(args, base=_saved_config(directory))
    case = make_case(config)
    model = _load_model(directory, case)
    out = Path(config.out)
    params = pipeline.sample_parameters(case.parameter_box, config.test, config.seed, pipeline.TEST_STREAM)
    grid = pipeline.error_grid(min(config.nmax, model.available), args.step)
    label = pipeline.Variant(config.extension, config.transport).label
    errors = pipeline.error_analysis(case, {label: model}, params, grid, config.workers)[label]
    names = pipeline.field_names(case)
    header = ["N"] + [f"mean_rel_err_{n}" for n in names]
    report.write_csv(out / "errors.csv", header, [(N,) + tuple(map(float, row)) for N, row in zip(grid, errors)])
    if args.figures:
        report.plot_errors(out / "errors.png", grid, {n: errors[:, k] for k, n in enumerate(names)}, label)
    return 0


def cmd_eigs_export(args):
    directory = Path(args.basis_dir or args.out or "out")
    config = config_from_args(args, base=_saved_config(directory))
    case = make_case(config)
    bases = {kind: pod.load_basis(directory / "basis" / kind) for kind in case.kinds}
    _eigen_csvs(Path(config.out), bases, args.figures)
    return 0


def cmd_gamma_sweep(args):
    config = config_from_args(args)
    if args.nmax is None and not args.config:
        config = config.with_(nmax=min(120, config.train))
    out = Path(config.out)
    rows = []
    for gamma in args.gammas:
        c = config.with_(gamma_d=gamma)
        case = make_case(c)
        train = pipeline.sample_parameters(case.parameter_box, c.train, c.seed, pipeline.TRAIN_STREAM)
        test = pipeline.sample_parameters(case.parameter_box, c.test, c.seed, pipeline.TEST_STREAM)
        variant = pipeline.Variant(c.extension, c.transport)
        _, _, models = pipeline.train(case, [variant], train, c.nmax, workers=c.workers)
        err = pipeline.error_analysis(case, models, test, [c.nmax], c.workers)[variant.label]
        log.info("gamma_D=%g: mean error %.4g", gamma, err[0, 0])
        rows.append((float(gamma), float(err[0, 0])))
    report.write_csv(out / "gamma_sweep.csv", ["gamma_D", "mean_rel_err"], rows)
    if args.figures:
        report.plot_gamma_sweep(out / "gamma_sweep.png", [r[0] for r in rows], [r[1] for r in rows])
    return 0


def cmd_hf_solve(args):
    config = config_from_args(args)
    case = make_case(config)
    mu = _check_mu(case, args.mu)
    active = case.classify(mu)
    hf = case.solve_hf(mu, active)
    out = Path(config.out)
    if case.name == "darcy-ellipse":
        u = hf["scalar"].to_background()
        header, columns, shown = ["x", "y", "value"], [u], u
    else:
        v, p = hf["velocity"].to_background(), hf["pressure"].to_background()
        header, columns = ["x", "y", "u1", "u2", "p"], [v[:, 0], v[:, 1], p]
        shown = np.linalg.norm(v, axis=1)
    report.write_csv(out / "solution.csv", header, _solution_rows(case.mesh, columns))
    if args.figures:
        report.plot_field(out / "solution.png", case.mesh, shown, active, "high-fidelity solution")
    return 0


COMMANDS = {
    "offline": cmd_offline,
    "online": cmd_online,
    "errors": cmd_errors,
    "eigs-export": cmd_eigs_export,
    "gamma-sweep": cmd_gamma_sweep,
    "hf-solve": cmd_hf_solve,
}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        parser.exit(2, f"cutrom: error: {exc}\n")
    except CutromError as exc:
        print(f"cutrom: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
