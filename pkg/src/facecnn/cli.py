"""``facecnn`` command line.

Exit codes: 0 success, 1 training failure (no plateau / threshold not
reached), 2 usage error, 3 I/O error.
"""

import argparse
import sys
from dataclasses import replace

from .checkpoint import read_checkpoint, save_checkpoint
from .dataio import generate_synthetic, load_dataset, synthetic_class_names, write_dataset
from .exceptions import CheckpointError, ConfigurationError, DatasetError, PGMError
from .network import (
    DEFAULT_SPEC,
    REDUCED_SPEC,
    build,
    connection_count,
    count_parameters,
    forward_full,
)
from .parallel import WorkerPool, benchmark, write_report_csv
from .trainer import (
    TrainConfig,
    classify,
    train_epoch,
    train_phase1,
    train_phase2,
    write_curve_csv,
)

EXIT_OK = 0
EXIT_TRAIN_FAILURE = 1
EXIT_USAGE = 2
EXIT_IO = 3

ARCHITECTURES = {"full": DEFAULT_SPEC, "reduced": REDUCED_SPEC}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _worker_list(text):
    try:
        values = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated integer list: {text!r}")
    if not values or any(v < 1 for v in values):
        raise argparse.ArgumentTypeError("worker counts must be positive integers")
    return values


def _positive_int(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {value}")
    return value


def _add_data_args(p, with_arch=True):
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--data", metavar="DIR", help="dataset root: DIR/<class>/*.pgm")
    src.add_argument("--synthetic", action="store_true", help="use generated gratings")
    p.add_argument("--classes", type=_positive_int, default=17, help="synthetic class count")
    p.add_argument("--per-class", type=_positive_int, default=8, help="synthetic images per class")
    p.add_argument("--noise", type=float, default=0.1, help="synthetic noise amplitude")
    p.add_argument("--seed", type=int, default=0)
    if with_arch:
        p.add_argument("--arch", choices=sorted(ARCHITECTURES), default="full")


def build_parser():
    parser = _Parser(prog="facecnn", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("train", help="two-phase training")
    _add_data_args(p)
    p.add_argument("--epochs", type=_positive_int, default=100, help="max epochs")
    p.add_argument("--lr", type=float, default=TrainConfig.learning_rate)
    p.add_argument("--threshold", type=int, help="phase-2 error threshold")
    p.add_argument("--plateau-window", type=_positive_int, default=4)
    p.add_argument("--workers", type=_positive_int, default=1)
    p.add_argument("--checkpoint-out", metavar="PATH")
    p.add_argument("--curve-out", metavar="PATH")

    p = sub.add_parser("eval", help="accuracy of a checkpoint on a dataset")
    p.add_argument("--checkpoint", required=True, metavar="PATH")
    _add_data_args(p, with_arch=False)

    p = sub.add_parser("bench", help="serial vs data-parallel epoch timing")
    _add_data_args(p)
    p.add_argument("--workers-list", type=_worker_list, default=[1, 2, 4])
    p.add_argument("--epochs", type=_positive_int, default=1)
    p.add_argument("--repeats", type=_positive_int, default=5)
    p.add_argument("--lr", type=float, default=TrainConfig.learning_rate)
    p.add_argument("--report", metavar="PATH")

    p = sub.add_parser("synth", help="write a synthetic dataset as PGM files")
    p.add_argument("--out", required=True, metavar="DIR")
    p.add_argument("--classes", type=_positive_int, default=17)
    p.add_argument("--per-class", type=_positive_int, default=8)
    p.add_argument("--size", type=_positive_int, default=32)
    p.add_argument("--upscale", type=_positive_int, default=3, help="pixel repeat factor (3 gives 96x96)")
    p.add_argument("--noise", type=float, default=0.1)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("inspect", help="layer shapes and parameter counts")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--checkpoint", metavar="PATH")
    src.add_argument("--spec-defaults", action="store_true")
    return parser


def _load_samples(args, input_size):
    if args.synthetic:
        return synthetic_class_names(args.classes), generate_synthetic(
            args.classes, args.per_class, input_size, args.seed, args.noise
        )
    manifest, samples = load_dataset(args.data, target_size=input_size)
    return manifest.class_names, samples


def cmd_train(args, out):
    spec = ARCHITECTURES[args.arch]
    class_names, samples = _load_samples(args, spec.input_size)
    spec = replace(spec, num_classes=len(class_names))
    config = TrainConfig(
        learning_rate=args.lr,
        max_epochs=args.epochs,
        error_threshold=args.threshold,
        plateau_window=args.plateau_window,
        seed=args.seed,
    )
    params = build(spec, seed=args.seed)
    pool = WorkerPool(args.workers) if args.workers > 1 else None
    epoch_fn = train_epoch if pool is None else (
        lambda p, data, lr, epoch=0: pool.epoch(p, data, lr, epoch)
    )
    try:
        if args.threshold is None:
            result = train_phase1(params, samples, config, epoch_fn=epoch_fn)
            print(f"plateau_error={result.plateau_error}", file=out)
            print(
                f"plateau_reached={str(result.plateau_reached).lower()} "
                f"epochs={len(result.curve)}",
                file=out,
            )
            ok = result.plateau_reached
        else:
            result = train_phase2(params, samples, config, epoch_fn=epoch_fn)
            print(
                f"outcome={result.outcome} elapsed_ms={result.elapsed_ms:.3f} "
                f"epochs={len(result.curve)} final_error={result.curve[-1].error}",
                file=out,
            )
            ok = result.success
    finally:
        if pool is not None:
            pool.close()
    if args.checkpoint_out:
        save_checkpoint(params, args.checkpoint_out, seed=args.seed)
    if args.curve_out:
        write_curve_csv(args.curve_out, result.curve)
    return EXIT_OK if ok else EXIT_TRAIN_FAILURE


def cmd_eval(args, out):
    params, spec, _ = read_checkpoint(args.checkpoint)
    class_names, samples = _load_samples(args, spec.input_size)
    if len(class_names) > spec.num_classes:
        raise ConfigurationError(
            f"dataset has {len(class_names)} classes, checkpoint predicts {spec.num_classes}"
        )
    totals = [0] * len(class_names)
    correct = [0] * len(class_names)
    for sample in samples:
        predicted = classify(forward_full(params, sample.image)[1])
        totals[sample.label] += 1
        correct[sample.label] += predicted == sample.label
    for name, n, k in zip(class_names, totals, correct):
        print(f"class {name} accuracy={k / n:.4f} ({k}/{n})", file=out)
    right = sum(correct)
    print(f"accuracy={right / len(samples):.4f}", file=out)
    print(f"error={len(samples) - right}", file=out)
    return EXIT_OK


def cmd_bench(args, out):
    spec = ARCHITECTURES[args.arch]
    class_names, samples = _load_samples(args, spec.input_size)
    spec = replace(spec, num_classes=len(class_names))
    params = build(spec, seed=args.seed)
    reports = benchmark(
        params, samples, args.lr, args.workers_list, epochs=args.epochs, repeats=args.repeats
    )
    for r in reports:
        prof = r.profile
        print(
            f"n={r.n_nodes} t1={prof.t1_ms:.6f} t2={prof.t2_ms:.6f} t3={prof.t3_ms:.6f} "
            f"images={prof.n_images}",
            file=out,
        )
    for r in reports:
        print(r.summary_line(), file=out)
    if args.report:
        write_report_csv(args.report, reports)
    return EXIT_OK


def cmd_synth(args, out):
    samples = generate_synthetic(args.classes, args.per_class, args.size, args.seed, args.noise)
    paths = write_dataset(args.out, samples, upscale=args.upscale)
    side = args.size * args.upscale
    print(f"wrote {len(paths)} images ({args.classes} classes, {side}x{side}) to {args.out}", file=out)
    return EXIT_OK


def print_architecture(params, out):
    spec = params.spec
    shapes = spec.layer_shapes()
    counts = count_parameters(params)

    def fmt(shape):
        return f"{shape[0]}@{shape[1]}x{shape[2]}" if len(shape) == 3 else str(shape[0])

    print(f"{'layer':<7}{'shape':<12}{'parameters':>10}", file=out)
    print(f"{'input':<7}{fmt(shapes['input']):<12}{0:>10}", file=out)
    for layer in ("c1", "s1", "c2", "s2", "h", "f"):
        print(f"{layer.upper():<7}{fmt(shapes[layer]):<12}{counts[layer]:>10}", file=out)
    print(f"{'total':<7}{'':<12}{counts['total']:>10}", file=out)
    print(
        f"connections S1={connection_count(spec, 's1')} S2={connection_count(spec, 's2')}",
        file=out,
    )


def cmd_inspect(args, out):
    if args.spec_defaults:
        params = build(DEFAULT_SPEC, seed=0)
    else:
        params, _, _ = read_checkpoint(args.checkpoint)
    print_architecture(params, out)
    return EXIT_OK


COMMANDS = {
    "train": cmd_train,
    "eval": cmd_eval,
    "bench": cmd_bench,
    "synth": cmd_synth,
    "inspect": cmd_inspect,
}


def main(argv=None, out=None):
    out = sys.stdout if out is None else out
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    try:
        return COMMANDS[args.command](args, out)
    except ConfigurationError as exc:
        print(f"facecnn: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (CheckpointError, DatasetError, PGMError, OSError) as exc:
        print(f"facecnn: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
