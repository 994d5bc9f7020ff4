"""Command line interface: ``heavybo <subcommand> ...``.

Exit codes: 0 success, 1 configuration error, 2 data error, 3 runtime failure.
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from pathlib import Path

import numpy as np

from . import bounds as bd
from .datagen import MeanSpec, MixtureConfig, build_mean_vector, generate_dataset, load_dataset, save_csv, save_dataset
from .errors import ConfigError, DataError, HeavyBOError
from .plotting import emit_plot
from .sweep import emit_csv, emit_trials_csv, load_grid, parse_grid_values, read_csv, run_sweep, SweepGrid
from .tailindex import estimate_dataset_tails
from .trainer import TrainConfig, evaluate_error, gd_train, hard_margin_oracle

log = logging.getLogger("heavybo")


def _cmd_generate(args):
    cfg = MixtureConfig(
        p=args.p,
        n=args.n,
        shape=args.gamma,
        calibration=args.calibration,
        mean=MeanSpec.parse(args.mean),
        noise_rate=args.eta,
        mixing=args.mixing,
        seed=args.seed,
    )
    ds = generate_dataset(cfg)
    out = Path(args.out)
    if out.suffix.lower() == ".csv":
        save_csv(ds, out)
    else:
        save_dataset(ds, out)
    print(f"wrote {ds.n} samples (p={ds.p}, noisy={int(ds.noise_mask.sum())}) to {out}")


def _cmd_train(args):
    ds = load_dataset(args.data)
    oracle = None
    if args.oracle:
        oracle = hard_margin_oracle(ds).w
    cfg = TrainConfig(
        learning_rate=args.beta,
        epochs=args.epochs,
        direction_tol=args.direction_tol,
        log_every=args.log_every,
    )
    state = gd_train(ds, cfg, oracle=oracle)
    if args.report:
        with open(args.report, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["epoch", "loss", "grad_norm", "train_error", "cosine_to_oracle"])
            for row in state.history:
                cos = "" if row.cosine_to_oracle is None else repr(row.cosine_to_oracle)
                w.writerow([row.epoch, repr(row.loss), repr(row.grad_norm), repr(row.train_error), cos])
    print(f"epochs={state.epoch} loss={state.loss:.6g} grad_norm={state.grad_norm:.3g} "
          f"train_error={evaluate_error(state.theta, ds):.4f} monotone={state.monotone}")
    if args.theta_out:
        np.savetxt(args.theta_out, state.theta)


def _cmd_bounds(args):
    consts = bd.BoundConstants.load(args.consts) if args.consts else bd.BoundConstants()
    mu = build_mean_vector(MeanSpec.parse(args.mean), args.p) if args.mean else None
    mu_norm = args.mu_norm if args.mu_norm is not None else (float(np.linalg.norm(mu)) if mu is not None else None)
    if mu_norm is None:
        raise ConfigError("give --mu-norm or --mean")
    s1 = None
    rows = []
    if mu is not None:
        s1 = bd.singular_value_bound(args.p, args.n, mu, args.delta, args.alpha, consts)
        rows.append(("s1_bound", s1))
        rows.append(("A6.lr_bound", bd.lr_bound_A6(args.p, args.n, mu, args.delta, args.alpha, args.kappa, consts)))
    rep = bd.check_assumptions(args.p, args.n, mu_norm, args.delta, args.alpha, args.kappa,
                               beta=args.beta, s1_bound=s1, consts=consts)
    rows = bd.report_rows(rep) + rows
    rows.append(("theorem1.bound", bd.theorem1_bound(args.eta, mu_norm, args.p, args.alpha, consts.c)))
    rows.append(("cor7.lr_bound", bd.lr_bound_cor7(args.p, consts.c9)))
    if args.n >= 2:
        rows.append(("cor8.lr_bound", bd.lr_bound_cor8(args.p, args.n, args.alpha, consts.c10)))

    print(f"{'assumption':<11}{'lhs':>14}  {'rel':<3}{'rhs':>14}  satisfied")
    for chk in rep.checks:
        sat = "-" if chk.satisfied is None else ("yes" if chk.satisfied else "NO")
        print(f"{chk.name:<11}{chk.lhs:>14.6g}  {chk.relation:<3}{chk.rhs:>14.6g}  {sat}")
    print()
    for key, val in rows:
        print(f"{key}={'' if val is None else val}")
    if args.out:
        with open(args.out, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["key", "value"])
            w.writerows(rows)


def _cmd_tail_index(args):
    data = _read_matrix(args.inp)
    summary = estimate_dataset_tails(data, args.fraction)
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["column", "xi", "a", "b", "rss", "status"])
        for c in summary.columns:
            if c.fit is None:
                w.writerow([c.column, "", "", "", "", c.status])
            else:
                f = c.fit
                w.writerow([c.column, repr(f.xi), repr(f.a), repr(f.b), repr(f.rss), c.status])
    if summary.mean_xi is None:
        raise DataError("no column could be fitted")
    print(f"columns={len(summary.columns)} fitted={summary.n_ok} "
          f"mean_xi={summary.mean_xi:.4f} var_xi={summary.var_xi:.4f}")


def _read_matrix(path):
    """Headerless or headered numeric CSV -> (rows, columns) array."""
    with open(path) as fh:
        first = fh.readline()
    try:
        [float(v) for v in first.strip().split(",")]
        skip = 0
    except ValueError:
        skip = 1
    try:
        return np.loadtxt(path, delimiter=",", skiprows=skip, ndmin=2)
    except ValueError as exc:
        raise DataError(f"{path}: {exc}") from exc


_GRID_FLAGS = {
    "p_values": "p_values",
    "gamma_values": "gamma_values",
    "beta_values": "beta_values",
    "n_train": "n_train",
    "n_test": "n_test",
    "eta": "eta",
    "mean": "mean",
    "mixing": "mixing",
    "calibration": "calibration",
    "trials": "trials",
    "epochs": "epochs",
    "seed": "master_seed",
}


def _cmd_sweep(args):
    grid = load_grid(args.config) if args.config else SweepGrid()
    overrides = {field: getattr(args, flag) for flag, field in _GRID_FLAGS.items()}
    grid = parse_grid_values(overrides, base=grid)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    cells, trials = run_sweep(grid, workers=args.workers, return_trials=True)
    emit_csv(cells, out / "aggregate.csv")
    emit_trials_csv(trials, out / "trials.csv")
    figures = []
    if len(grid.p_values) > 1 and len(grid.beta_values) == 1:
        emit_plot(cells, "error-vs-p", out / "error_vs_p.svg", eta=grid.eta)
        figures.append("error_vs_p.svg")
    varying = [len(v) > 1 for v in (grid.p_values, grid.gamma_values, grid.beta_values)]
    if sum(varying) == 2:
        emit_plot(cells, "heatmap", out / "heatmap.svg")
        figures.append("heatmap.svg")
    for c in cells:
        ci = "" if c.ci95_halfwidth is None else f" +/- {c.ci95_halfwidth:.4f}"
        print(f"p={c.p:<6} gamma={c.gamma:<6g} beta={c.beta:<8g} test={c.mean_test_error:.4f}{ci} "
              f"train={c.mean_train_error:.4f} used={c.trials_used} failed={c.failed_trials}")
    print(f"wrote {out / 'aggregate.csv'}, {out / 'trials.csv'}" + "".join(f", {out / f}" for f in figures))


def _cmd_plot(args):
    cells = read_csv(args.inp)
    kwargs = {}
    if args.kind == "heatmap" and args.x and args.y:
        kwargs = {"x": args.x, "y": args.y}
    emit_plot(cells, args.kind, args.out, eta=args.eta if args.kind == "error-vs-p" else None, **kwargs)
    print(f"wrote {args.out}")


def build_parser():
    ap = argparse.ArgumentParser(prog="heavybo", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="sample a noisy heavy-tailed mixture dataset")
    g.add_argument("--p", type=int, required=True)
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--gamma", type=float, default=2.0)
    g.add_argument("--eta", type=float, default=0.0)
    g.add_argument("--mean", default="dense", help="dense | ones | rareweak:s,lambda")
    g.add_argument("--mixing", choices=["identity", "haar"], default="identity")
    g.add_argument("--calibration", choices=["variance", "orlicz"], default="variance")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True, help="*.csv for CSV, anything else for the binary format")
    g.set_defaults(func=_cmd_generate)

    t = sub.add_parser("train", help="gradient descent on the logistic loss")
    t.add_argument("--data", required=True)
    t.add_argument("--beta", type=float, default=1e-3)
    t.add_argument("--epochs", type=int, default=100_000)
    t.add_argument("--seed", type=int, default=0, help="accepted for symmetry; training is deterministic")
    t.add_argument("--direction-tol", type=float, default=0.0)
    t.add_argument("--log-every", type=int, default=1000)
    t.add_argument("--oracle", action="store_true", help="add cosine to the hard-margin solution")
    t.add_argument("--report", help="CSV of logged epochs")
    t.add_argument("--theta-out")
    t.set_defaults(func=_cmd_train)

    s = sub.add_parser("sweep", help="Monte Carlo sweep over (p, gamma, beta)")
    s.add_argument("--config", help="key = value file mirroring the sweep grid fields")
    s.add_argument("--p-values")
    s.add_argument("--gamma-values")
    s.add_argument("--beta-values")
    s.add_argument("--n-train")
    s.add_argument("--n-test")
    s.add_argument("--eta")
    s.add_argument("--mean")
    s.add_argument("--mixing")
    s.add_argument("--calibration")
    s.add_argument("--trials")
    s.add_argument("--epochs")
    s.add_argument("--seed")
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--out-dir", default="sweep_out")
    s.set_defaults(func=_cmd_sweep)

    b = sub.add_parser("bounds", help="evaluate assumptions and analytic bounds")
    b.add_argument("--p", type=int, required=True)
    b.add_argument("--n", type=int, required=True)
    b.add_argument("--mu-norm", type=float)
    b.add_argument("--mean", help="build mu (dense | ones | rareweak:s,lambda) for the singular-value bound")
    b.add_argument("--delta", type=float, default=0.05)
    b.add_argument("--alpha", type=float, default=2.0)
    b.add_argument("--kappa", type=float, default=1.0)
    b.add_argument("--eta", type=float, default=0.0)
    b.add_argument("--beta", type=float)
    b.add_argument("--consts", help="JSON or key = value file of constants")
    b.add_argument("--out", help="also write key,value CSV")
    b.set_defaults(func=_cmd_bounds)

    ti = sub.add_parser("tail-index", help="per-column tail-index estimates")
    ti.add_argument("--in", dest="inp", required=True)
    ti.add_argument("--fraction", type=float, default=0.05)
    ti.add_argument("--out", required=True)
    ti.set_defaults(func=_cmd_tail_index)

    pl = sub.add_parser("plot", help="render an aggregate CSV")
    pl.add_argument("--in", dest="inp", required=True)
    pl.add_argument("--kind", choices=["error-vs-p", "heatmap"], default="error-vs-p")
    pl.add_argument("--eta", type=float)
    pl.add_argument("--x", choices=["p", "gamma", "beta"])
    pl.add_argument("--y", choices=["p", "gamma", "beta"])
    pl.add_argument("--out", required=True)
    pl.set_defaults(func=_cmd_plot)
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 1
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        args.func(args)
    except HeavyBOError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except (FileNotFoundError, IsADirectoryError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
