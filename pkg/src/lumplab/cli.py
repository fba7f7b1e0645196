"""Command-line experiment runner.

Usage::

    lumplab <command> [--config PATH] [--out DIR] [--seed N] [--threads N]

Commands: ``assemble``, ``spectrum``, ``lump``, ``nkp``, ``integrate``,
``converge`` and ``verify``.  ``lumplab schema`` prints the config schema.

Exit codes: 0 success, 1 check failure, 2 config error, 3 numerical error.
"""

import argparse
import json
import logging
import os
import sys

from . import __version__
from .config import ENV_PREFIX, MAX_SEED, load, resolve, schema_json
from .errors import ConfigError, DimensionError, LumplabError, NumericalError

EXIT_OK = 0
EXIT_CHECK = 1
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3

COMMANDS = ("assemble", "spectrum", "lump", "nkp", "integrate", "converge", "verify")

log = logging.getLogger("lumplab")


def _seed(text):
    try:
        v = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid seed {text!r}") from None
    if not 0 <= v <= MAX_SEED:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit integer")
    return v


def _positive(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid count {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def build_parser():
    parser = argparse.ArgumentParser(prog="lumplab", description="Mass-lumping experiments and invariant checks.")
    parser.add_argument("--version", action="version", version=f"lumplab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")
    helps = {
        "assemble": "assemble M and K and export them",
        "spectrum": "generalized spectra of K against each mass operator",
        "lump": "build and export lumped mass operators",
        "nkp": "nearest Kronecker product study",
        "integrate": "explicit time integration per mass operator",
        "converge": "first-eigenfrequency convergence study",
        "verify": "run the invariant suite",
    }
    for name in COMMANDS:
        p = sub.add_parser(name, help=helps[name])
        p.add_argument("--config", help=f"JSON config (env {ENV_PREFIX}CONFIG)")
        p.add_argument("--out", help=f"output directory (env {ENV_PREFIX}OUT, default ./lumplab_out)")
        p.add_argument("--seed", type=_seed, help=f"64-bit seed overriding the config (env {ENV_PREFIX}SEED)")
        p.add_argument("--threads", type=_positive, help=f"thread cap for numeric kernels (env {ENV_PREFIX}THREADS)")
        p.add_argument("-q", "--quiet", action="store_true", help="only print errors")
    sub.add_parser("schema", help="print the config JSON schema")
    return parser


def _env(args, environ):
    """Fill unset flags from ``LUMPLAB_*`` variables."""
    if args.config is None:
        args.config = environ.get(ENV_PREFIX + "CONFIG")
    if args.out is None:
        args.out = environ.get(ENV_PREFIX + "OUT", "lumplab_out")
    try:
        if args.seed is None and ENV_PREFIX + "SEED" in environ:
            args.seed = _seed(environ[ENV_PREFIX + "SEED"])
        if args.threads is None and ENV_PREFIX + "THREADS" in environ:
            args.threads = _positive(environ[ENV_PREFIX + "THREADS"])
    except argparse.ArgumentTypeError as exc:
        raise ConfigError(f"environment: {exc}") from None
    return args


def _config(args, environ):
    if args.config:
        return load(args.config, args.seed, args.threads, environ)
    if args.command == "verify":
        return resolve({"experiment": "verify"}, args.seed, args.threads, environ)
    raise ConfigError(f"{args.command} needs --config")


def _limit_threads(n):
    # the compiled kernels are serial; only the BLAS pools need a cap
    from threadpoolctl import threadpool_limits

    return threadpool_limits(limits=n)


def run(argv=None, environ=None):
    """Run the CLI and return the exit code instead of exiting."""
    environ = os.environ if environ is None else environ
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_CONFIG
    if args.command == "schema":
        sys.stdout.write(schema_json())
        return EXIT_OK
    logging.basicConfig(format="%(message)s", stream=sys.stderr)
    log.setLevel(logging.ERROR if args.quiet else logging.INFO)
    try:
        args = _env(args, environ)
        cfg = _config(args, environ)
        from . import experiments

        with _limit_threads(cfg["threads"]):
            if args.command == "verify":
                doc, results = experiments.run_verify(cfg, args.out)
                for r in results:
                    log.info(r.line())
                log.info("verify: %s", "all checks passed" if doc["passed"] else "FAILED")
                return EXIT_OK if doc["passed"] else EXIT_CHECK
            doc = experiments.RUNNERS[args.command](cfg, args.out)
    except (ConfigError, DimensionError) as exc:
        log.error("config error: %s", exc)
        return EXIT_CONFIG
    except NumericalError as exc:
        log.error("numerical error: %s", exc)
        return EXIT_NUMERICAL
    except LumplabError as exc:
        log.error("error: %s", exc)
        return EXIT_NUMERICAL
    log.info("%s: wrote %d files to %s (config %s)", args.command, len(doc["files"]) + 1, args.out, doc["config_hash"])
    if not args.quiet:
        brief = {k: doc[k] for k in ("slopes", "step_counts", "sigma2_over_sigma1", "kappa_M_NKP") if k in doc}
        if brief:
            sys.stdout.write(json.dumps(brief, sort_keys=True) + "\n")
    return EXIT_OK


def main(argv=None):
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
