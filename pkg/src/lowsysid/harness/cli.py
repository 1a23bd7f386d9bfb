"""``lowsysid`` command line: ``gen``, ``fit``, ``sweep`` and ``spectrum``.

Exit status is 0 on success, 1 for configuration or input-file errors and 2
when every requested method diverged.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .. import io
from .config import ConfigError, ExperimentConfig, load_config
from . import experiments as ex

log = logging.getLogger("lowsysid")

EXIT_OK, EXIT_CONFIG, EXIT_DIVERGED = 0, 1, 2
DATA_SUBDIR = "data"


class _Parser(argparse.ArgumentParser):
    """Usage errors exit with the config-error status (argparse's default 2 means divergence here)."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _parser() -> argparse.ArgumentParser:
    p = _Parser(prog="lowsysid", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp):
        sp.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
        sp.add_argument("--config", required=True, type=Path, help="experiment config file")
        sp.add_argument("--out", type=Path, default=None, help="output directory (default: config output_dir)")
        sp.add_argument("--seed", type=int, default=None, help="override data and solver seeds")
        sp.add_argument("--budget-s", type=float, default=None, help="per-method CPU time budget in seconds")
        return sp

    common(sub.add_parser("gen", help="simulate a dataset"))
    fit = common(sub.add_parser("fit", help="run the configured methods on a dataset"))
    fit.add_argument("--data", type=Path, default=None,
                     help="dataset directory (default: generate into OUT/data)")
    sweep = common(sub.add_parser("sweep", help="sample-size or trajectory-length sweep"))
    sweep.add_argument("--data", type=Path, default=None,
                       help="dataset to subsample on the samples axis (default: generate)")
    spec = common(sub.add_parser("spectrum", help="Hankel spectra of stored fit checkpoints"))
    spec.add_argument("--data", type=Path, default=None, help="dataset directory (default: OUT/data)")
    spec.add_argument("--report", type=Path, default=None, help="fit output directory (default: OUT)")
    return p


def _config(args) -> ExperimentConfig:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg = cfg.with_seed(args.seed)
    if args.budget_s is not None:
        if args.budget_s <= 0:
            raise ConfigError("must be > 0", "--budget-s")
        cfg = cfg.with_budget(args.budget_s)
    return cfg


def _dataset(path, cfg: ExperimentConfig, out: Path) -> ex.Dataset:
    if path is None:
        path = out / DATA_SUBDIR
        if not (path / ex.MANIFEST_FILE).exists():
            ex.cmd_gen(cfg, path)
    return ex.load_dataset(path)


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        cfg = _config(args)
        out = args.out if args.out is not None else Path(cfg.output_dir)
        if args.command == "gen":
            ex.cmd_gen(cfg, out)
            log.info("dataset written to %s", out)
            return EXIT_OK
        if args.command == "fit":
            ds = _dataset(args.data, cfg, out)
            reports = ex.cmd_fit(ds, cfg, out)
            for m, r in reports.items():
                log.info("%s: %s, recovery error %.3g", m, r.certificate, r.final_recovery_error())
            return EXIT_DIVERGED if ex.all_diverged(reports) else EXIT_OK
        if args.command == "sweep":
            ds = ex.load_dataset(args.data) if args.data is not None else None
            rows = ex.cmd_sweep(cfg, out, ds)
            points = [r for r in rows if r[0] == "point"]
            if points and all(r[8] == "diverged" for r in points):
                return EXIT_DIVERGED
            return EXIT_OK
        if args.command == "spectrum":
            ds = _dataset(args.data, cfg, out)
            ex.cmd_spectrum(ds, args.report if args.report is not None else out, cfg, out)
            return EXIT_OK
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (io.FormatError, FileNotFoundError, ValueError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_CONFIG  # unreachable: argparse enforces a command


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
