"""Experiment runner: deterministic CSV benchmarks over the library.

Subcommands::

    geodp mse-bench  --gradients g.gds --sigma 1 --beta 0.1 1 --batch-size 256 --out r.csv
    geodp train      --images i.idx --labels l.idx --mode geodp --out run.csv
    geodp collect    --images i.idx --labels l.idx --epochs 2 --out g.gds
    geodp ed-check   --trials 1000 --dim 100
    geodp privacy    --sigma 4.8449 --delta 1e-5 --steps 10 --beta 0.1

Every command is a deterministic function of its flags (the seed
included): repeated invocations produce byte-identical output.  Floats
are serialized with 17 significant digits so CSV readers recover them
exactly.  Exit codes: 0 success, 1 runtime/I-O failure, 2 flag errors.
``GEODP_THREADS`` caps the mse-bench worker pool; grid rows are written
in grid order regardless of which worker finishes first.
"""

import argparse
import csv
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from geodp import analysis, data, mechanisms, training
from geodp.errors import GeoDPError
from geodp.hypersphere import to_spherical_batch

MSE_HEADER = (
    "mechanism",
    "dim",
    "batch_size",
    "sigma",
    "beta",
    "clip",
    "seed",
    "trials",
    "mse_direction",
    "mse_gradient",
)
TRAIN_HEADER = ("row_type", "iteration", "loss", "grad_norm", "test_accuracy")


def _fmt(x) -> str:
    return format(float(x), ".17g")


def _workers() -> int:
    env = os.environ.get("GEODP_THREADS")
    if env:
        n = int(env)
        if n < 1:
            raise ValueError(f"GEODP_THREADS must be >= 1, got {env}")
        return n
    return min(8, os.cpu_count() or 1)


def _grid_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence((seed, index)))


def _prepare_rows(gds: data.GradientDataset, dim, trials: int, clip: float, seed: int):
    """Select, optionally project, and re-clip the benchmark gradients.

    Projection to a lower dimension uses a seeded Gaussian map scaled to
    preserve norms in expectation.  Zero-norm rows are dropped (they have
    no direction to perturb).
    """
    rows = gds.rows[np.arange(trials) % gds.count]
    if dim is not None and dim != gds.dim:
        if dim > gds.dim:
            raise GeoDPError(f"cannot project {gds.dim}-dim gradients up to {dim}")
        proj_rng = np.random.default_rng(np.random.SeedSequence((seed, 1 << 32)))
        proj = proj_rng.standard_normal((gds.dim, dim)) / np.sqrt(dim)
        rows = rows @ proj
    norms = np.linalg.norm(rows, axis=1)
    rows = rows[norms > 0.0]
    if rows.shape[0] == 0:
        raise GeoDPError("no nonzero gradients to perturb")
    norms = norms[norms > 0.0]
    rows = rows / np.maximum(1.0, norms / clip)[:, None]
    return np.ascontiguousarray(rows)


def cmd_mse_bench(args) -> int:
    gds = data.load_gradients(args.gradients)
    clip = args.clip if args.clip is not None else gds.metadata.get("clip")
    if clip is None:
        raise GeoDPError("gradient file has no clip metadata; pass --clip")
    rows = _prepare_rows(gds, args.dim, args.trials, clip, args.seed)
    dim = rows.shape[1]
    orig_angles = to_spherical_batch(rows)[1]

    grid = [
        (mech, sigma, beta, batch)
        for mech in ("dp", "geodp")
        for sigma in args.sigma
        for beta in args.beta
        for batch in args.batch_size
    ]

    def run_point(index_point):
        index, (mech, sigma, beta, batch) = index_point
        cfg = mechanisms.PerturbConfig(
            clip=clip, sigma=sigma, batch_size=batch, beta=beta, dim=dim
        )
        rng = _grid_rng(args.seed, index)
        if mech == "dp":
            pert = mechanisms.dp_perturb_batch(rows, cfg, rng)
            pert_angles = to_spherical_batch(pert)[1]
            mse_dir = analysis.mse_directions(orig_angles, pert_angles)
        else:
            pert, ang, noisy = mechanisms.geodp_perturb_batch(rows, cfg, rng)
            mse_dir = analysis.mse_directions(ang, noisy)
        mse_grad = analysis.mse_gradients(rows, pert)
        return (
            mech,
            str(dim),
            str(batch),
            _fmt(sigma),
            _fmt(beta),
            _fmt(clip),
            str(args.seed),
            str(rows.shape[0]),
            _fmt(mse_dir),
            _fmt(mse_grad),
        )

    with ThreadPoolExecutor(max_workers=_workers()) as pool:
        results = list(pool.map(run_point, enumerate(grid)))

    with open(args.out, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(MSE_HEADER)
        writer.writerows(results)
    return 0


def _load_train_data(args):
    train_ds = data.load_mnist(args.images, args.labels)
    test_images = getattr(args, "test_images", None)
    test_labels = getattr(args, "test_labels", None)
    test_ds = None
    if test_images or test_labels:
        if not (test_images and test_labels):
            raise GeoDPError("--test-images and --test-labels must be given together")
        test_ds = data.load_mnist(test_images, test_labels)
    return train_ds, test_ds


def cmd_train(args) -> int:
    train_ds, test_ds = _load_train_data(args)
    dim = (train_ds.num_features + 1) * train_ds.num_classes
    cfg = training.TrainConfig(
        mode=args.mode,
        perturb=mechanisms.PerturbConfig(
            clip=args.clip,
            sigma=args.sigma,
            batch_size=args.batch_size,
            beta=args.beta,
            dim=dim,
        ),
        learning_rate=args.learning_rate,
        iterations=args.iterations,
        seed=args.seed,
    )
    traj = training.train(train_ds, cfg, test=test_ds)

    acc_at = dict(zip(traj.acc_steps.tolist(), traj.acc_values.tolist()))
    with open(args.out, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(TRAIN_HEADER)
        for t in range(cfg.iterations):
            acc = acc_at.get(t + 1)
            writer.writerow(
                (
                    "iter",
                    str(t),
                    _fmt(traj.losses[t]),
                    _fmt(traj.grad_norms[t]),
                    "" if acc is None else _fmt(acc),
                )
            )
        writer.writerow(
            (
                "summary",
                str(cfg.iterations),
                _fmt(traj.losses[-1]),
                "",
                "" if traj.final_accuracy is None else _fmt(traj.final_accuracy),
            )
        )
    return 0


def cmd_collect(args) -> int:
    train_ds, _ = _load_train_data(args)
    gds = training.collect_gradients(
        train_ds, args.epochs, args.clip, args.seed, learning_rate=args.learning_rate
    )
    data.save_gradients(gds, args.out)
    return 0


def cmd_ed_check(args) -> int:
    worst = analysis.ed_identity_max_error(args.trials, args.dim, args.seed)
    print(f"instances={args.trials}")
    print(f"max_relative_error={_fmt(worst)}")
    return 0 if worst <= 1e-9 else 1


def cmd_privacy(args) -> int:
    report = mechanisms.privacy_report(args.sigma, args.delta, args.steps, args.beta)
    print(f"epsilon_per_step={_fmt(report.epsilon_per_step)}")
    print(f"delta={_fmt(report.delta)}")
    print(f"steps={report.steps}")
    print(f"epsilon_total={_fmt(report.epsilon_total)}")
    print(f"delta_total={_fmt(report.delta_total)}")
    print(f"relaxation_note={report.relaxation_note}")
    return 0


def _positive_int(value: str) -> int:
    n = int(value)
    if n < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {value}")
    return n


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="geodp", description="DP-SGD experiments with geometric gradient perturbation"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("mse-bench", help="perturbation error over a parameter grid")
    p.add_argument("--gradients", required=True, help="GDS1 gradient file")
    p.add_argument("--sigma", type=float, nargs="+", required=True)
    p.add_argument("--beta", type=float, nargs="+", default=[1.0])
    p.add_argument("--batch-size", type=_positive_int, nargs="+", required=True)
    p.add_argument("--dim", type=_positive_int, default=None, help="project gradients to this dimension")
    p.add_argument("--trials", type=_positive_int, default=1000, help="gradients perturbed per grid point")
    p.add_argument("--clip", type=float, default=None, help="re-clip threshold (default: file metadata)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_mse_bench)

    p = sub.add_parser("train", help="train logistic regression on IDX data")
    p.add_argument("--images", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--test-images", default=None)
    p.add_argument("--test-labels", default=None)
    p.add_argument("--mode", choices=training.TRAIN_MODES, default="none")
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--beta", type=float, default=0.1)
    p.add_argument("--clip", type=float, default=0.1)
    p.add_argument("--batch-size", type=_positive_int, default=256)
    p.add_argument("--learning-rate", type=float, default=0.1)
    p.add_argument("--iterations", type=_positive_int, default=350)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("collect", help="capture per-example clipped gradients to GDS1")
    p.add_argument("--images", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--epochs", type=_positive_int, default=1)
    p.add_argument("--clip", type=float, default=0.1)
    p.add_argument("--learning-rate", type=float, default=0.1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_collect)

    p = sub.add_parser("ed-check", help="verify the efficiency-difference identity")
    p.add_argument("--trials", type=_positive_int, default=1000)
    p.add_argument("--dim", type=_positive_int, default=100, help="per-instance dimension is drawn from [2, dim]")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_ed_check)

    p = sub.add_parser("privacy", help="per-step and composed privacy levels")
    p.add_argument("--sigma", type=float, required=True)
    p.add_argument("--delta", type=float, default=1e-5)
    p.add_argument("--steps", type=_positive_int, default=1)
    p.add_argument("--beta", type=float, default=1.0)
    p.set_defaults(func=cmd_privacy)

    return parser


def _validate_flags(parser, args):
    if args.command == "ed-check" and args.dim < 2:
        parser.error("--dim must be >= 2")
    if args.command == "privacy" and not (
        0 < args.delta < 1 and args.sigma > 0 and 0 < args.beta <= 1
    ):
        parser.error("need sigma > 0, 0 < delta < 1 and 0 < beta <= 1")
    if args.command == "mse-bench":
        if any(s < 0 for s in args.sigma):
            parser.error("--sigma values must be >= 0")
        if any(not 0 < b <= 1 for b in args.beta):
            parser.error("--beta values must be in (0, 1]")
        if args.clip is not None and args.clip <= 0:
            parser.error("--clip must be positive")
    if args.command in ("train", "collect") and args.clip <= 0:
        parser.error("--clip must be positive")
    if args.command == "train":
        if args.sigma < 0:
            parser.error("--sigma must be >= 0")
        if not 0 < args.beta <= 1:
            parser.error("--beta must be in (0, 1]")
        if args.learning_rate <= 0:
            parser.error("--learning-rate must be positive")


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    _validate_flags(parser, args)
    try:
        return args.func(args)
    except (GeoDPError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
