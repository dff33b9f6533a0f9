"""Command-line surface for batch map processing and the toy experiments.

Exit codes: 0 success, 1 usage error, 2 validation/format error, 3 numeric
error (divergence, degenerate statistic). Every error is a single line on
stderr prefixed ``error:``. Outputs are always new files; identical argv
plus identical inputs produce byte-identical outputs.
"""

from __future__ import annotations

import argparse
import sys
from typing import Optional, Sequence

from . import __version__
from .errors import (BadConfig, DegenerateInput, Divergence, DomainError,
                     EmptyInput, EmptyMask, FormatError, NonFinite,
                     ShapeMismatch)
from .fusion import inter_fuse, intra_fuse
from .head import head_decode, read_etv
from .losses import LossWeights
from .maps import decode, read_epm, read_pfm, write_epm, write_pfm
from .metrics import analyze, metrics_report, write_report_csv
from .trainer import (DEFAULT_HIDDEN, DEFAULT_LR, DEFAULT_NOISE_SIGMA,
                      ToyModel, fusion_experiment, make_synthetic, train,
                      write_curves_csv, write_fusion_table_csv)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_VALIDATION = 2
EXIT_NUMERIC = 3

_VALIDATION_ERRORS = (DomainError, NonFinite, ShapeMismatch, EmptyInput,
                      EmptyMask, FormatError, OSError)
_NUMERIC_ERRORS = (Divergence, DegenerateInput)


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _parse_thresholds(text: str) -> tuple[float, ...]:
    try:
        values = tuple(float(tok) for tok in text.split(",") if tok.strip())
    except ValueError:
        raise _UsageError(f"bad --thresholds value {text!r}")
    if not values or any(not v > 0.0 for v in values):
        raise _UsageError(f"--thresholds must be positive numbers, got {text!r}")
    return values


def _cmd_validate(args) -> int:
    emap = read_epm(args.epm)
    print(f"ok: {emap.width}x{emap.height} map, all pixels valid")
    return EXIT_OK


def _cmd_fuse_intra(args) -> int:
    fused = intra_fuse(read_epm(args.first), read_epm(args.second),
                       read_epm(args.third))
    write_epm(fused, args.output)
    return EXIT_OK


def _cmd_fuse_inter(args) -> int:
    fused = inter_fuse(read_epm(args.local), read_epm(args.glob))
    write_epm(fused, args.output)
    return EXIT_OK


def _cmd_decode(args) -> int:
    if args.disparity is None and args.aleatoric is None and args.epistemic is None:
        raise _UsageError("decode needs at least one of --disparity/"
                          "--aleatoric/--epistemic")
    disparity, aleatoric, epistemic = decode(read_epm(args.epm))
    if args.disparity is not None:
        write_pfm(disparity, args.disparity)
    if args.aleatoric is not None:
        write_pfm(aleatoric, args.aleatoric)
    if args.epistemic is not None:
        write_pfm(epistemic, args.epistemic)
    return EXIT_OK


def _cmd_regress(args) -> int:
    write_epm(head_decode(read_etv(args.volume)), args.output)
    return EXIT_OK


def _cmd_metrics(args) -> int:
    report = metrics_report(read_pfm(args.pred), read_pfm(args.gt),
                            thresholds=args.thresholds)
    write_report_csv(report, args.report)
    return EXIT_OK


def _cmd_analyze(args) -> int:
    report = analyze(read_epm(args.epm), read_pfm(args.gt),
                     thresholds=args.thresholds)
    write_report_csv(report, args.report)
    return EXIT_OK


def _cmd_train_toy(args) -> int:
    if args.fusion_table is not None and args.kind != "two-region":
        raise _UsageError("--fusion-table requires --kind two-region")
    dataset = make_synthetic(args.kind, args.samples, args.noise, args.seed)
    if args.curves is not None:
        model = ToyModel.initialize(hidden_dim=args.hidden, seed=args.seed)
        fitted, curves = train(model, dataset, tau=args.tau, lr=args.lr,
                               epochs=args.epochs)
        write_curves_csv(curves, args.curves)
        if len(curves):
            print(f"trained {args.epochs} epochs: final loss "
                  f"{curves.loss[-1]:.6f}, heldout epe {curves.heldout_epe[-1]:.6f}")
    if args.fusion_table is not None:
        table = fusion_experiment(dataset, args.seed, experts="trained",
                                  tau=args.tau, lr=args.lr, epochs=args.epochs,
                                  hidden_dim=args.hidden)
        write_fusion_table_csv(table, args.fusion_table)
        print(f"fusion table: avg epe {table.avg_epe:.6f}, "
              f"monig epe {table.monig_epe:.6f}")
    return EXIT_OK


def build_parser() -> _Parser:
    parser = _Parser(prog="evifuse",
                     description="Evidential disparity map processing")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check every pixel of an EPM map")
    p.add_argument("epm")
    p.set_defaults(handler=_cmd_validate)

    fuse = sub.add_parser("fuse", help="grid fusion of EPM maps")
    fuse_sub = fuse.add_subparsers(dest="mode", required=True)
    p = fuse_sub.add_parser("intra", help="fold three multi-scale maps")
    p.add_argument("first")
    p.add_argument("second")
    p.add_argument("third")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(handler=_cmd_fuse_intra)
    p = fuse_sub.add_parser("inter", help="fuse local and global maps")
    p.add_argument("local")
    p.add_argument("glob", metavar="global")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(handler=_cmd_fuse_inter)

    p = sub.add_parser("decode", help="EPM -> disparity/uncertainty PFMs")
    p.add_argument("epm")
    p.add_argument("--disparity")
    p.add_argument("--aleatoric")
    p.add_argument("--epistemic")
    p.set_defaults(handler=_cmd_decode)

    p = sub.add_parser("regress", help="ETV volume -> EPM via the soft head")
    p.add_argument("volume")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(handler=_cmd_regress)

    p = sub.add_parser("metrics", help="EPE/outlier report for two PFMs")
    p.add_argument("pred")
    p.add_argument("gt")
    p.add_argument("--thresholds", type=_parse_thresholds, default=(1.0, 3.0))
    p.add_argument("--report", required=True)
    p.set_defaults(handler=_cmd_metrics)

    p = sub.add_parser("analyze", help="EPM vs ground truth with correlations")
    p.add_argument("epm")
    p.add_argument("gt")
    p.add_argument("--thresholds", type=_parse_thresholds, default=(1.0, 3.0))
    p.add_argument("--report", required=True)
    p.set_defaults(handler=_cmd_analyze)

    p = sub.add_parser("train-toy", help="seeded toy training experiments")
    p.add_argument("--kind", required=True, choices=["smooth-1d", "two-region"])
    p.add_argument("--samples", type=int, default=512)
    p.add_argument("--epochs", type=int, default=300)
    p.add_argument("--tau", type=float, default=LossWeights().tau)
    p.add_argument("--lr", type=float, default=DEFAULT_LR)
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--noise", type=float, default=DEFAULT_NOISE_SIGMA)
    p.add_argument("--hidden", type=int, default=DEFAULT_HIDDEN)
    p.add_argument("--curves")
    p.add_argument("--fusion-table", dest="fusion_table")
    p.set_defaults(handler=_cmd_train_toy)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help/--version paths
        return int(exc.code or 0)

    try:
        return args.handler(args)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except BadConfig as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except _NUMERIC_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except _VALIDATION_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
