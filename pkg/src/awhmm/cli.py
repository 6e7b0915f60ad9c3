"""Command-line surface: distances, benchmarks, toys, and model inspection.

Every command with a ``--seed`` flag is byte-for-byte reproducible; all
failures exit nonzero with a single ``error: <code>: <message>`` line on
standard error.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from .bench.config import ExperimentConfig, substream
from .bench.generators import generate_seeds
from .bench.retrieval import METHODS, run_retrieval, select_alpha
from .bench.toys import toy_remark3
from .distances import iaw, maw
from .errors import AwhmmError, InvalidInputError
from .kl_baseline import kl_hmm
from .model_io import load_model

# the knob flag both names the sweep values and pins the family it belongs to
_KNOB_FAMILY = {
    "dmu": "mu-perturb",
    "dsigma": "sigma-perturb",
    "gamma": "sigma-perturb",
    "dt": "trans-perturb",
}

_BENCH_COLUMNS = (
    "family", "M", "D", "scale", "method",
    "mean_auc", "std_auc", "mean_ms_per_distance",
)


def _float_list(text: str) -> list[float]:
    try:
        return [float(tok) for tok in text.split(",") if tok.strip()]
    except ValueError as exc:
        raise InvalidInputError(f"bad numeric list {text!r}: {exc}") from exc


def cmd_dist(args: argparse.Namespace) -> None:
    h1 = load_model(args.model_a)
    h2 = load_model(args.model_b)
    print(f"method={args.method}")
    if args.method == "kl":
        value = kl_hmm(h1, h2, seed=args.seed)
        print(f"value={value!r}")
        return
    if args.method == "maw":
        report = maw(h1, h2, args.alpha, args.p)
    else:
        rng = substream(args.seed, 13, 0, 0)
        report = iaw(h1, h2, args.alpha, args.p, n=args.n, rng=rng)
    print(f"alpha={report.alpha!r}")
    print(f"p={report.registration.p!r}")
    print(f"marginal={report.marginal!r}")
    print(f"transition={report.transition!r}")
    print(f"combined={report.combined!r}")


def _bench_scales(args: argparse.Namespace) -> list[float]:
    given = {k: v for k, v in vars(args).items() if k in _KNOB_FAMILY and v}
    if len(given) > 1:
        raise InvalidInputError(
            f"give at most one knob flag, got {sorted('--' + k for k in given)}"
        )
    if not given:
        return [0.5]
    (knob, values), = given.items()
    if _KNOB_FAMILY[knob] != args.family:
        raise InvalidInputError(
            f"--{knob} belongs to the {_KNOB_FAMILY[knob]} family, not {args.family}"
        )
    return values


def cmd_bench(args: argparse.Namespace) -> None:
    scales = _bench_scales(args)
    methods = tuple(args.methods.split(","))
    for m in methods:
        if m not in METHODS:
            raise InvalidInputError(f"unknown method {m!r}; choose from {METHODS}")
    override = "oracle" if args.oracle_distances else None
    rows = []
    per_method: dict[str, list[float]] = {m: [] for m in methods}
    for scale in scales:
        for rep in range(args.replicates):
            cfg = ExperimentConfig(
                family=args.family,
                alpha=args.alpha,
                scale=scale,
                states=args.states,
                dim=args.dim,
                n_classes=args.classes,
                sequences_per_class=args.sequences_per_class,
                seq_len=args.seq_len,
                p=args.p,
                iaw_n=args.n,
                kl_total_samples=args.kl_samples,
                em_restarts=args.em_restarts,
                master_seed=args.seed + rep,
                preset=args.preset,
                jobs=args.jobs,
            )
            seeds = generate_seeds(cfg, substream(cfg.master_seed, 10))
            results = run_retrieval(
                seeds, cfg, methods=methods,
                distance_override=override, timed=args.timing,
            )
            for method in methods:
                res = results[method]
                ms = res.mean_ms_per_distance
                rows.append((
                    cfg.family, str(cfg.states), str(cfg.dim),
                    f"{scale!r}", method,
                    f"{res.mean_auc:.6f}", f"{res.std_auc:.6f}",
                    "" if ms is None else f"{ms:.3f}",
                ))
                per_method[method].append(res.mean_auc)
    out = Path(args.out) if args.out else None
    stream = out.open("w", newline="") if out else sys.stdout
    try:
        writer = csv.writer(stream, lineterminator="\n")
        writer.writerow(_BENCH_COLUMNS)
        writer.writerows(rows)
    finally:
        if out:
            stream.close()
    for method in methods:
        print(f"mean_auc_{method}={np.mean(per_method[method]):.6f}")


def cmd_toy(args: argparse.Namespace) -> None:
    rng = substream(args.seed, 17)
    result = toy_remark3(args.variant, args.batches, args.batch_size, rng)
    out = Path(args.out) if args.out else None
    stream = out.open("w", newline="") if out else sys.stdout
    try:
        writer = csv.writer(stream, lineterminator="\n")
        writer.writerow(("i", "w2_mean", "w2_std", "kl_mean", "kl_std"))
        for k, i in enumerate(result.index):
            writer.writerow((
                int(i),
                repr(float(result.w2_mean[k])), repr(float(result.w2_std[k])),
                repr(float(result.kl_mean[k])), repr(float(result.kl_std[k])),
            ))
    finally:
        if out:
            stream.close()


def _load_labeled_models(models_dir: str) -> tuple[list, list[str]]:
    root = Path(models_dir)
    manifest_path = root / "manifest.json"
    if not manifest_path.is_file():
        raise InvalidInputError(f"no manifest.json in {models_dir}")
    try:
        manifest = json.loads(manifest_path.read_text())
    except json.JSONDecodeError as exc:
        raise InvalidInputError(f"malformed manifest: {exc}") from exc
    if not isinstance(manifest, dict) or not manifest:
        raise InvalidInputError("manifest must map model filenames to labels")
    models, labels = [], []
    for name in sorted(manifest):
        models.append(load_model(root / name))
        labels.append(str(manifest[name]))
    return models, labels


def cmd_select_alpha(args: argparse.Namespace) -> None:
    models, labels = _load_labeled_models(args.models_dir)
    if len(set(labels)) < 2:
        raise InvalidInputError("alpha selection needs at least 2 classes")
    cfg = ExperimentConfig(
        family="mu-perturb", alpha=0.5, p=args.p, iaw_n=args.n,
        master_seed=args.seed,
    )
    grid = _float_list(args.grid) if args.grid else None
    codes = np.asarray([sorted(set(labels)).index(l) for l in labels])
    best, accuracies = select_alpha(models, codes, args.method, grid, cfg)
    grid_values = grid if grid is not None else np.round(np.arange(0.0, 1.0001, 0.05), 10)
    for a, acc in zip(grid_values, accuracies):
        print(f"grid={float(a)!r} accuracy={float(acc)!r}")
    print(f"alpha={best!r}")


def cmd_model_info(args: argparse.Namespace) -> None:
    model = load_model(args.model)
    print(f"states={model.n_states}")
    print(f"dim={model.dim}")
    print(f"stationary={model.stationary.tolist()!r}")
    print(f"transition={model.trans.t.tolist()!r}")
    for i, e in enumerate(model.emissions):
        print(f"mean_{i}={e.mean.tolist()!r}")
        print(f"cov_{i}={e.cov.tolist()!r}")
        print(f"degenerate_{i}={str(e.is_degenerate).lower()}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="awhmm",
        description="Aggregated Wasserstein distances between Gaussian-emission HMMs.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_dist = sub.add_parser("dist", help="distance between two model files")
    p_dist.add_argument("model_a")
    p_dist.add_argument("model_b")
    p_dist.add_argument("--method", choices=METHODS, default="maw")
    p_dist.add_argument("--alpha", type=float, default=0.5)
    p_dist.add_argument("--p", type=float, default=1.0)
    p_dist.add_argument("--n", type=int, default=500)
    p_dist.add_argument("--seed", type=int, default=0)
    p_dist.set_defaults(func=cmd_dist)

    p_bench = sub.add_parser("bench", help="synthetic perturbation benchmark")
    p_bench.add_argument("--family", required=True,
                         choices=("mu-perturb", "sigma-perturb", "trans-perturb"))
    p_bench.add_argument("--preset", choices=("auto", "table1"), default="auto")
    p_bench.add_argument("--alpha", type=float, default=0.5)
    p_bench.add_argument("--dmu", type=_float_list, default=None,
                         help="mean knob sweep, comma separated")
    p_bench.add_argument("--dsigma", type=_float_list, default=None,
                         help="covariance knob sweep (table1 preset)")
    p_bench.add_argument("--gamma", type=_float_list, default=None,
                         help="covariance blend sweep (procedural generator)")
    p_bench.add_argument("--dt", type=_float_list, default=None,
                         help="transition blend sweep")
    p_bench.add_argument("--methods", default=",".join(METHODS))
    p_bench.add_argument("--states", type=int, default=2)
    p_bench.add_argument("--dim", type=int, default=2)
    p_bench.add_argument("--classes", type=int, default=5)
    p_bench.add_argument("--sequences-per-class", type=int, default=10)
    p_bench.add_argument("--seq-len", type=int, default=100)
    p_bench.add_argument("--p", type=float, default=1.0)
    p_bench.add_argument("--n", type=int, default=500, help="IAW sample count")
    p_bench.add_argument("--kl-samples", type=int, default=2000)
    p_bench.add_argument("--em-restarts", type=int, default=3)
    p_bench.add_argument("--replicates", type=int, default=1)
    p_bench.add_argument("--seed", type=int, default=0)
    p_bench.add_argument("--jobs", type=int, default=1)
    p_bench.add_argument("--timing", action="store_true",
                         help="time distance calls (timing column varies run to run)")
    p_bench.add_argument("--oracle-distances", action="store_true",
                         help="replace distances with the class oracle (debugging)")
    p_bench.add_argument("--out", default=None, help="result table path (default stdout)")
    p_bench.set_defaults(func=cmd_bench)

    p_toy = sub.add_parser("toy", help="estimator-variance toy comparison")
    p_toy.add_argument("--variant", choices=("mean-shift", "var-scale"),
                       default="mean-shift")
    p_toy.add_argument("--batches", type=int, default=100)
    p_toy.add_argument("--batch-size", type=int, default=50)
    p_toy.add_argument("--seed", type=int, default=0)
    p_toy.add_argument("--out", default=None)
    p_toy.set_defaults(func=cmd_toy)

    p_sel = sub.add_parser("select-alpha", help="pick alpha by LOO 1-NN accuracy")
    p_sel.add_argument("models_dir",
                       help="directory of model files plus a manifest.json label map")
    p_sel.add_argument("--method", choices=("maw", "iaw"), default="maw")
    p_sel.add_argument("--grid", default=None, help="comma-separated alpha values")
    p_sel.add_argument("--p", type=float, default=1.0)
    p_sel.add_argument("--n", type=int, default=500)
    p_sel.add_argument("--seed", type=int, default=0)
    p_sel.set_defaults(func=cmd_select_alpha)

    p_info = sub.add_parser("model-info", help="inspect a model file")
    p_info.add_argument("model")
    p_info.set_defaults(func=cmd_model_info)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except AwhmmError as exc:
        print(f"error: {exc.code}: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: io: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
