"""``descentlab`` command line.

Exit status is 0 on success, 1 when an experiment or check fails and 2 on
configuration or usage errors.  Logs go to stderr; stdout only carries
result paths and check reports.
"""

from __future__ import annotations

import argparse
import logging
import shutil
import sys
import urllib.request
from pathlib import Path

from . import __version__
from .config import FEATURE_EXPERIMENTS, NN_EXPERIMENTS, SweepConfig, data_dir, load_config, parse_config
from .errors import ConfigError, DescentLabError, SchemaMismatch

log = logging.getLogger("descentlab")

# train split files and their published compressed sizes in bytes
MNIST_FILES = {
    "train-images-idx3-ubyte.gz": 9912422,
    "train-labels-idx1-ubyte.gz": 28881,
}


def _overrides(pairs):
    out = {}
    for item in pairs or ():
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        key, value = (t.strip() for t in item.split("=", 1))
        if key in out and out[key] != value:
            raise ConfigError(f"conflicting --set values for {key!r}: {out[key]!r} and {value!r}")
        out[key] = value
    return out


def _config(args, default_experiment):
    overrides = _overrides(args.set)
    if args.seed is not None:
        overrides["seed"] = str(args.seed)
    if args.out is not None:
        overrides["output_path"] = args.out
    if args.config:
        cfg = load_config(args.config, overrides)
    else:
        overrides.setdefault("experiment", default_experiment)
        cfg = parse_config("", "<defaults>", overrides)
    return cfg


def _run_sweep(args, allowed, default_experiment):
    from .sweep import build_dataset, run_sweep, write_results

    cfg = _config(args, default_experiment)
    if cfg.experiment not in allowed:
        raise ConfigError(f"{args.command} runs {', '.join(allowed)}, config asks for {cfg.experiment}")
    log.info("running %s (config %s)", cfg.experiment, cfg.digest())
    dataset = build_dataset(cfg)
    points = run_sweep(cfg, dataset, jobs=args.jobs)
    out = Path(cfg.output_path)
    csv_path, json_path = write_results(cfg, points, out, dataset)
    (out / f"{cfg.experiment}-{cfg.digest()}.cfg").write_text(cfg.to_text())
    print(csv_path)
    print(json_path)
    failed = [p for p in points if not p.ok]
    for p in failed:
        log.error("capacity %d lambda %g R %g: %s", p.capacity, p.lam, p.R, p.error)
    return 1 if failed else 0


def cmd_feature_sweep(args):
    return _run_sweep(args, FEATURE_EXPERIMENTS, "FeatureSweep")


def cmd_nn_sweep(args):
    return _run_sweep(args, NN_EXPERIMENTS, "NnReuseSweep")


def cmd_oracle_check(args):
    from .oracle import run_oracle_suite

    seed = 0 if args.seed is None else args.seed
    results = run_oracle_suite(seed)
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'}  {r.name}: {r.detail}")
    return 0 if all(r.passed for r in results) else 1


def cmd_plot(args):
    from .plot import emit_plot_script

    csv_path = Path(args.csv)
    if not csv_path.exists():
        raise ConfigError(f"no such results file: {csv_path}")
    print(emit_plot_script(csv_path, threshold=args.threshold, out_dir=args.out))
    return 0


def cmd_fetch_data(args):
    if not args.url:
        raise ConfigError("fetch-data needs --url (no default download location)")
    dest = Path(args.out) if args.out else data_dir()
    dest.mkdir(parents=True, exist_ok=True)
    bad = 0
    for name, size in MNIST_FILES.items():
        target = dest / name
        url = args.url.rstrip("/") + "/" + name
        log.info("fetching %s", url)
        tmp = target.with_suffix(target.suffix + ".part")
        with urllib.request.urlopen(url) as resp, open(tmp, "wb") as fh:
            shutil.copyfileobj(resp, fh)
        got = tmp.stat().st_size
        if got != size:
            log.error("%s: expected %d bytes, got %d", name, size, got)
            tmp.unlink()
            bad += 1
            continue
        tmp.replace(target)
        print(target)
    return 1 if bad else 0


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="key = value config file")
    common.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a config key (repeatable)")
    common.add_argument("--seed", type=int, metavar="U64", help="master seed")
    common.add_argument("--out", metavar="DIR", help="output directory")
    common.add_argument("--jobs", type=int, default=1, metavar="N", help="worker processes")
    common.add_argument("--verbose", "-v", action="count", default=0)

    parser = argparse.ArgumentParser(prog="descentlab", description="Double-descent experiment engine.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("feature-sweep", parents=[common], help="random-feature sweeps").set_defaults(func=cmd_feature_sweep)
    sub.add_parser("nn-sweep", parents=[common], help="network width sweeps").set_defaults(func=cmd_nn_sweep)
    sub.add_parser("oracle-check", parents=[common], help="brute-force checks").set_defaults(func=cmd_oracle_check)
    p = sub.add_parser("plot", parents=[common], help="gnuplot script from a results CSV")
    p.add_argument("csv")
    p.add_argument("--threshold", type=float, help="N x K parameter count for the threshold line")
    p.set_defaults(func=cmd_plot)
    p = sub.add_parser("fetch-data", parents=[common], help="download the MNIST train split")
    p.add_argument("--url", help="base URL holding the gzipped IDX files")
    p.set_defaults(func=cmd_fetch_data)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s", force=True)
    if args.jobs < 1:
        parser.error("--jobs must be >= 1")
    try:
        return args.func(args)
    except (ConfigError, SchemaMismatch) as exc:
        log.error("%s", exc)
        return 2
    except (DescentLabError, OSError) as exc:
        log.error("%s", exc)
        return 1


if __name__ == "__main__":
    sys.exit(main())
