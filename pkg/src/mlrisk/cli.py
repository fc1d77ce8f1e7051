"""Command-line interface.

Exit status: 0 on success, 1 on a pipeline or I/O error, 2 on a usage error.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from mlrisk.ensemble import EnsembleConfig
from mlrisk.heterotic import symmetrize
from mlrisk.ingest import load_returns
from mlrisk.matrixio import read_matrix, write_matrix, write_series
from mlrisk.riskmodel import build_model
from mlrisk.spectrum import SUMMARY_COLUMNS, summarize_values
from mlrisk.synth import synth_returns, write_returns

log = logging.getLogger("mlrisk")

EXIT_OK, EXIT_ERROR, EXIT_USAGE = 0, 1, 2
SEED_ENV = "MLRM_SEED"


def _positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {v}")
    return v


def _seed(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"seed must be a non-negative integer, got {text!r}") from None
    if v < 0:
        raise argparse.ArgumentTypeError(f"seed must be a non-negative integer, got {v}")
    return v


def table_lines(summary) -> list[str]:
    head = "".join(f"{c:>12}" for c in SUMMARY_COLUMNS)
    row = "".join(f"{x:>12.4g}" for x in summary.row())
    return [head, row]


def resolve_seed(arg: int | None, parser: argparse.ArgumentParser) -> int:
    if arg is not None:
        return arg
    env = os.environ.get(SEED_ENV)
    if env is not None:
        try:
            return _seed(env)
        except argparse.ArgumentTypeError as exc:
            parser.error(f"{SEED_ENV}: {exc}")
    return int(np.random.SeedSequence().entropy % (2 ** 63))


def cmd_build(args, parser) -> int:
    seed = resolve_seed(args.seed, parser)
    out = Path(args.out)
    spectrum_out = Path(args.spectrum_out) if args.spectrum_out else out.with_suffix(".spectrum.txt")
    summary_out = Path(args.summary_out) if args.summary_out else out.with_suffix(".summary.json")
    try:
        cfg = EnsembleConfig(
            K=args.k, M=args.samplings, iterations=args.iterations, iter_max=args.iter_max,
            master_seed=seed, regularization=args.reg,
            rounding="round" if args.round_erank else "floor", threads=args.threads,
        )
    except ValueError as exc:
        parser.error(str(exc))
    try:
        panel = load_returns(args.input)
    except (OSError, ValueError) as exc:
        print(f"mlrisk: [load] {exc}", file=sys.stderr)
        return EXIT_ERROR
    log.info("loaded %d assets x %d observations", panel.n_assets, panel.n_obs)
    try:
        result = build_model(panel, cfg)
    except Exception as exc:
        print(f"mlrisk: {exc}", file=sys.stderr)
        return EXIT_ERROR

    eig = np.sort(np.linalg.eigvalsh(result.correlation))[::-1]
    try:
        write_matrix(out, result.inverse_covariance, args.format, labels=panel.tickers)
        write_series(spectrum_out, eig)
        if args.corr_out:
            write_matrix(args.corr_out, result.correlation, args.format, labels=panel.tickers)
        report = result.report()
        report["input"] = str(args.input)
        report["outputs"] = {"inverse_covariance": str(out), "spectrum": str(spectrum_out),
                             "format": args.format}
        summary_out.write_text(json.dumps(report, indent=2) + "\n", encoding="utf-8")
    except OSError as exc:
        print(f"mlrisk: [write] {exc}", file=sys.stderr)
        return EXIT_ERROR
    for line in table_lines(result.summary):
        print(line)
    print(f"n_star={result.summary.n_star} erank={result.summary.erank_value:.6g} seed={seed}")
    return EXIT_OK


def cmd_synth(args, parser) -> int:
    try:
        tickers, returns, _ = synth_returns(args.n, args.t, args.k_true, seed=args.seed)
    except ValueError as exc:
        parser.error(str(exc))
    try:
        write_returns(args.output, tickers, returns)
    except OSError as exc:
        print(f"mlrisk: [write] {exc}", file=sys.stderr)
        return EXIT_ERROR
    return EXIT_OK


def cmd_spectrum_report(args, parser) -> int:
    try:
        m, _ = read_matrix(args.matrix)
        if np.max(np.abs(m - m.T), initial=0.0) > 1e-10 * max(np.max(np.abs(m)), 1.0):
            raise ValueError(f"{args.matrix}: matrix is not symmetric")
        eig = np.sort(np.linalg.eigvalsh(symmetrize(m)))[::-1]
        summary = summarize_values(eig, "round" if args.round_erank else "floor")
        if args.series_out:
            with np.errstate(divide="ignore", invalid="ignore"):
                write_series(args.series_out, np.where(eig > 0, np.log(np.where(eig > 0, eig, 1.0)), np.nan))
    except (OSError, ValueError) as exc:
        print(f"mlrisk: [spectrum] {exc}", file=sys.stderr)
        return EXIT_ERROR
    for line in table_lines(summary):
        print(line)
    print(f"n_star={summary.n_star} erank={summary.erank_value:.6g} N={eig.size}")
    return EXIT_OK


def make_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mlrisk", description="Clustering-ensemble risk models.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    b = sub.add_parser("build", help="build the inverse model covariance from a returns file")
    b.add_argument("--input", required=True)
    b.add_argument("--k", type=_positive_int, required=True, help="number of clusters")
    b.add_argument("--samplings", type=_positive_int, default=100)
    b.add_argument("--iterations", type=_positive_int, default=1)
    b.add_argument("--iter-max", type=_positive_int, default=100)
    b.add_argument("--seed", type=_seed, default=None, help=f"master seed (fallback: ${SEED_ENV})")
    b.add_argument("--reg", choices=("none", "tail", "rescale"), default="none")
    b.add_argument("--round-erank", action="store_true", help="round instead of floor the tail eRank")
    b.add_argument("--out", required=True, help="inverse covariance output path")
    b.add_argument("--spectrum-out")
    b.add_argument("--summary-out")
    b.add_argument("--corr-out", help="also write the model correlation matrix")
    b.add_argument("--format", choices=("csv", "bin"), default="csv")
    b.add_argument("--threads", type=_positive_int, default=None)
    b.set_defaults(func=cmd_build)

    s = sub.add_parser("synth", help="write a synthetic returns file")
    s.add_argument("--n", type=_positive_int, required=True)
    s.add_argument("--t", type=_positive_int, required=True)
    s.add_argument("--k-true", type=_positive_int, default=10)
    s.add_argument("--seed", type=_seed, default=0)
    s.add_argument("--output", required=True)
    s.set_defaults(func=cmd_synth)

    r = sub.add_parser("spectrum", help="eigenvalue summary of a matrix file")
    r.add_argument("matrix")
    r.add_argument("--series-out", help="write descending log-eigenvalues, one per line")
    r.add_argument("--round-erank", action="store_true")
    r.set_defaults(func=cmd_spectrum_report)
    return p


def main(argv=None) -> int:
    parser = make_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args, parser)
    except SystemExit as exc:
        return int(exc.code or 0)


if __name__ == "__main__":
    sys.exit(main())
