"""Command-line entry points (``ferlab <subcommand>``)."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .. import gradcheck
from ..data import NoiseSpec, inject_noise, load_delimited, make_blobs, split, write_delimited
from ..errors import FerError
from ..metrics import PredictionHistory
from .config import load_config
from .training import compare, format_comparison, run_experiment, summary_csv


def _cmd_train(args) -> int:
    cfg = load_config(args.config)
    if args.output_dir:
        cfg = cfg.with_(output_dir=args.output_dir)
    cfg.validate_paths()
    result = run_experiment(cfg)
    sys.stdout.write(summary_csv(result.summary_rows()))
    return 0


def _cmd_compare(args) -> int:
    cfgs = [load_config(p) for p in args.configs]
    for c in cfgs:
        c.validate_paths()
    rows = compare(cfgs)
    print(format_comparison(rows))
    if args.output:
        Path(args.output).write_text(json.dumps([r.as_dict() for r in rows], indent=1))
    return 0


def _cmd_flip_report(args) -> int:
    hist = PredictionHistory.load(args.history)
    rep = hist.flip_report(args.at_epoch)
    print(
        f"epoch={rep.epoch} n_eval={rep.n_eval} misclassified={rep.n_misclassified} "
        f"WFS={rep.n_wfs} FE={rep.fe:.3f} RFE={rep.rfe:.3f} accuracy={rep.accuracy:.3f}"
    )
    return 0


def _cmd_noise_inject(args) -> int:
    ds = load_delimited(args.dataset, args.label_column, delimiter=args.delimiter or None, header=args.header)
    ds = split(ds, tuple(args.split), args.split_seed)
    noisy = inject_noise(ds, NoiseSpec(args.rate, args.seed, args.exclude_true))
    out = Path(args.output)
    write_delimited(noisy, out, args.delimiter or " ")
    manifest = noisy.manifest()
    manifest.update(noise_rate=args.rate, noise_seed=args.seed, source=str(args.dataset))
    Path(str(out) + ".manifest.json").write_text(json.dumps(manifest, indent=1))
    print(f"wrote {out} ({int(noisy.noise_mask.sum())} of {noisy.train_idx.size} training labels redrawn)")
    return 0


def _cmd_gradcheck(args) -> int:
    results = gradcheck.run_all(args.points, args.configs, args.seed)
    worst = max(results.values())
    for name, err in results.items():
        print(f"{name:<28} max relative error {err:.3e}")
    ok = worst < gradcheck.TOLERANCE
    print(f"{'PASS' if ok else 'FAIL'}: max relative error {worst:.3e} (tolerance {gradcheck.TOLERANCE:g})")
    return 0 if ok else 1


def _cmd_make_blobs(args) -> int:
    ds = make_blobs(args.classes, args.per_class, args.dim, args.separation, args.seed)
    write_delimited(ds, args.output, args.delimiter)
    print(f"wrote {args.output} ({ds.n} samples, d={ds.d}, K={ds.n_classes})")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ferlab", description=__doc__)
    p.add_argument(
        "--deterministic",
        action="store_true",
        default=True,
        help="single-threaded deterministic execution (the default and only mode)",
    )
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("train", help="run an experiment config over all its seeds")
    s.add_argument("config")
    s.add_argument("--output-dir", default="")
    s.set_defaults(func=_cmd_train)

    s = sub.add_parser("compare", help="paired comparison of configs sharing data and seeds")
    s.add_argument("configs", nargs="+")
    s.add_argument("--output", default="", help="also write the table as JSON")
    s.set_defaults(func=_cmd_compare)

    s = sub.add_parser("flip-report", help="FE / RFE from a saved prediction history")
    s.add_argument("history")
    s.add_argument("--at-epoch", type=int, default=None)
    s.set_defaults(func=_cmd_flip_report)

    s = sub.add_parser("noise-inject", help="redraw a fraction of training labels")
    s.add_argument("dataset")
    s.add_argument("--rate", type=float, required=True)
    s.add_argument("--seed", type=int, required=True)
    s.add_argument("--output", required=True)
    s.add_argument("--delimiter", default=",")
    s.add_argument("--label-column", type=int, default=-1)
    s.add_argument("--header", action="store_true")
    s.add_argument("--split", type=float, nargs=3, default=(1.0, 0.0, 0.0))
    s.add_argument("--split-seed", type=int, default=0)
    s.add_argument("--exclude-true", action="store_true")
    s.set_defaults(func=_cmd_noise_inject)

    s = sub.add_parser("gradcheck", help="finite-difference check of all gradients")
    s.add_argument("--points", type=int, default=50)
    s.add_argument("--configs", type=int, default=20)
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=_cmd_gradcheck)

    s = sub.add_parser("make-blobs", help="write a Gaussian-blob dataset")
    s.add_argument("--classes", type=int, default=4)
    s.add_argument("--per-class", type=int, default=100)
    s.add_argument("--dim", type=int, default=4)
    s.add_argument("--separation", type=float, default=2.0)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--delimiter", default=",")
    s.add_argument("--output", required=True)
    s.set_defaults(func=_cmd_make_blobs)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except (FerError, OSError, ValueError, IndexError) as exc:
        print(f"ferlab {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
