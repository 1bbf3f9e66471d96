import argparse
import logging
import sys
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from robkat import __version__
from robkat.comm.errors import InputError, NumericalError
from robkat.engine.kernel import KernelKind
from robkat.engine.loss import LossFamily, LossSpec
from robkat.io import emit_report, emit_simulation_report, load_study, run_batch
from robkat.sim import SimConfig, run_simulation

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_NUMERICAL = 2

# built-in values of the `test` options; a --config file and then flags override them
TEST_DEFAULTS = {
    "pheno": None,
    "covar": None,
    "geno": None,
    "sets": None,
    "kernel": "linear,quadratic,ibs",
    "custom_kernel": None,
    "loss": "huber",
    "tuning": None,
    "method": "pearson3",
    "mc_reps": 10000,
    "seed": None,
    "alpha": None,
    "n_tests": None,
    "weights": "none",
    "beta_params": "1,25",
    "no_intercept": False,
    "threads": 1,
    "out": "-",
}


def split_csv(value):
    if isinstance(value, (list, tuple)):
        return [str(x).strip() for x in value]
    return [x.strip() for x in str(value).split(",") if x.strip()]


def parse_losses(names, tuning=None):
    """Loss specs from "huber,ls,lad"; tuning constants need a single loss."""
    names = split_csv(names)
    if tuning not in (None, "") and len(names) != 1:
        raise InputError("--tuning applies to a single --loss")
    return [LossSpec.from_name(name, tuning) for name in names]


def parse_kernels(names):
    try:
        return [KernelKind(name) for name in split_csv(names)]
    except ValueError as e:
        raise InputError(f"unknown kernel: {e}") from e


def parse_beta_params(value):
    try:
        a, b = (float(x) for x in split_csv(value))
    except ValueError:
        raise InputError(f"--beta-params needs two numbers, got '{value}'") from None
    return a, b


def read_config(path):
    if path is None:
        return {}
    try:
        with open(path, "rb") as f:
            return tomllib.load(f)
    except OSError as e:
        raise InputError(f"cannot read config {path}: {e}") from e
    except tomllib.TOMLDecodeError as e:
        raise InputError(f"{path}: {e}") from e


def merge_options(args, defaults, config):
    """Flags win over config file values, which win over built-in defaults."""
    unknown = sorted(set(config) - set(defaults))
    if unknown:
        raise InputError(f"unknown config keys: {', '.join(unknown)}")
    options = {}
    for key, default in defaults.items():
        flag = getattr(args, key, None)
        # store_true flags default to False and count as absent; 0 is a value
        if flag is None or flag is False:
            flag = config.get(key, default)
        options[key] = flag
    return options


def build_parser():
    parser = argparse.ArgumentParser(
        prog="robkat", description="Robust kernel association tests for SNP sets."
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress (INFO)")
    sub = parser.add_subparsers(dest="command", required=True)

    test = sub.add_parser("test", help="test SNP sets for association with a phenotype")
    test.add_argument("--config", help="TOML file with default values for these options")
    test.add_argument("--pheno", help="phenotype TSV (sample_id, value)")
    test.add_argument("--covar", help="covariate TSV (sample_id, covariates...)")
    test.add_argument("--geno", help="genotype TSV (sample_id, SNP columns coded 0/1/2/NA)")
    test.add_argument("--sets", help="SNP-set TSV (set_name, snp_id)")
    test.add_argument(
        "--kernel",
        help="comma-separated kernels among "
        + ", ".join(k.value for k in KernelKind)
        + f" (default {TEST_DEFAULTS['kernel']})",
    )
    test.add_argument("--custom-kernel", help="n x n kernel file with a sample ID header")
    test.add_argument(
        "--loss",
        help="comma-separated losses among " + ", ".join(f.value for f in LossFamily),
    )
    test.add_argument("--tuning", help="tuning constants as CSV, e.g. 1.345")
    test.add_argument("--method", choices=["pearson3", "exact", "mc"])
    test.add_argument("--mc-reps", type=int, help="Monte Carlo permutations")
    test.add_argument("--seed", type=int)
    test.add_argument("--alpha", type=float, help="add Bonferroni threshold/significant columns")
    test.add_argument("--n-tests", type=int, help="Bonferroni test count (default: rows)")
    test.add_argument("--weights", choices=["none", "beta"], help="SNP weights for linear/quadratic")
    test.add_argument("--beta-params", help="Beta weight parameters a,b (default 1,25)")
    test.add_argument("--no-intercept", action="store_true", help="do not prepend an intercept")
    test.add_argument("--threads", type=int)
    test.add_argument("--out", help="output TSV (default stdout)")

    sim = sub.add_parser("sim", help="run a Type I error / power simulation")
    sim.add_argument("--config", help="TOML scenario (default: bundled Type I scenario)")
    sim.add_argument("--seed", type=int)
    sim.add_argument("--replications", type=int)
    sim.add_argument("--threads", type=int)
    sim.add_argument("--out", default="-", help="output TSV (default stdout)")
    return parser


def run_test(args):
    options = merge_options(args, TEST_DEFAULTS, read_config(args.config))
    if options["pheno"] is None:
        raise InputError("--pheno is required")
    kernels = parse_kernels(options["kernel"])
    if KernelKind.CUSTOM not in kernels and options["geno"] is None:
        raise InputError("--geno is required for genotype kernels")

    study = load_study(options["pheno"], options["covar"], options["geno"], options["sets"])
    results = run_batch(
        study,
        parse_losses(options["loss"], options["tuning"]),
        kernels,
        method=options["method"],
        mc_reps=int(options["mc_reps"]),
        seed=options["seed"],
        add_intercept=not options["no_intercept"],
        weights=None if options["weights"] == "none" else options["weights"],
        beta_params=parse_beta_params(options["beta_params"]),
        custom_kernel=options["custom_kernel"],
        threads=int(options["threads"]),
    )
    out = sys.stdout if options["out"] == "-" else options["out"]
    emit_report(results, out, options["alpha"], options["n_tests"])
    numerical = int((results["failure"] == "numerical").sum())
    if numerical:
        logging.warning("%d test(s) failed numerically", numerical)
        return EXIT_NUMERICAL
    return EXIT_OK


def run_sim(args):
    overrides = {"seed": args.seed, "replications": args.replications, "threads": args.threads}
    if args.config:
        config = SimConfig.from_toml(args.config, **overrides)
    else:
        config = SimConfig.default(**overrides)
    table = run_simulation(config)
    emit_simulation_report(table, sys.stdout if args.out == "-" else args.out)
    return EXIT_OK


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        format="%(asctime)s - %(levelname)s - %(message)s",
        level=logging.INFO if args.verbose else logging.WARNING,
    )
    try:
        if args.command == "test":
            return run_test(args)
        return run_sim(args)
    except InputError as e:
        logging.error("%s", e)
        return EXIT_INPUT
    except NumericalError as e:
        logging.error("%s", e)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
