"""Command-line entry point for reproducible simulation runs.

Commands: ``gen-trace``, ``rank``, ``simulate``, ``sweep``, ``compare``,
``oracle-check``. Options may come from an INI-style flat key-value config
file (``--config FILE``); explicit flags override file values. Every
command validates its configuration before any computation and, given a
``--seed``, produces byte-identical outputs across runs and thread counts.

Exit codes: 0 success, 1 usage/config error, 2 data error,
3 check failure (oracle-check).
"""

from __future__ import annotations

import argparse
import configparser
import math
import os
import sys

from .epidemic import EnumerationCapError, SimParams, exact_oracle
from .experiment import (PURPOSE_POLICY, device_probabilities, diff_grid,
                         optimal_patch_time, sweep_grid, trial_rng,
                         write_results, write_series)
from .policy import make_plan, parse_policy, rank_aps, tally_traffic
from .trace import (SyntheticParams, TraceFormatError, generate_synthetic,
                    load_trace, serialize_trace)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_CHECK = 3


class UsageError(Exception):
    def __init__(self, message: str, parser: argparse.ArgumentParser | None = None):
        super().__init__(message)
        self.parser = parser


class ArgumentParser(argparse.ArgumentParser):
    """argparse parser that raises instead of exiting, for exit-code control."""

    def error(self, message):
        raise UsageError(message, self)


_SYNTH_KEYS = {
    "devices": "n_devices", "aps": "n_aps", "duration": "duration",
    "rate": "contact_rate", "contact-rate": "contact_rate",
    "direct": "direct_fraction", "direct-fraction": "direct_fraction",
    "alpha": "ap_zipf_alpha", "zipf-alpha": "ap_zipf_alpha",
    "max-path": "max_path_len", "max-path-len": "max_path_len",
    "seed": "seed",
}

_SYNTH_INT_FIELDS = {"n_devices", "n_aps", "max_path_len", "seed"}


def _parse_synthetic(text: str) -> SyntheticParams:
    """Parse ``key=value,key=value`` synthetic-trace specs."""
    kwargs = {}
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        key, sep, value = part.partition("=")
        key = key.strip().lower().replace("_", "-")
        if not sep or key not in _SYNTH_KEYS:
            raise UsageError(f"bad synthetic spec entry {part!r}; "
                             f"known keys: {', '.join(sorted(_SYNTH_KEYS))}")
        field = _SYNTH_KEYS[key]
        try:
            kwargs[field] = int(value) if field in _SYNTH_INT_FIELDS else float(value)
        except ValueError:
            raise UsageError(f"bad value in synthetic spec entry {part!r}") from None
    for required in ("n_devices", "n_aps", "duration", "contact_rate"):
        if required not in kwargs:
            raise UsageError(f"synthetic spec is missing {required}")
    return SyntheticParams(**kwargs)


def _float_list(text: str) -> list[float]:
    try:
        values = [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise UsageError(f"bad numeric list {text!r}") from None
    if not values:
        raise UsageError(f"empty numeric list {text!r}")
    return values


def _add_source_args(p: ArgumentParser) -> None:
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--trace", metavar="FILE", help="trace CSV file")
    src.add_argument("--synthetic", metavar="SPEC",
                     help="synthetic trace spec, e.g. "
                          "devices=50,aps=200,duration=1000,rate=0.01,"
                          "direct=0.2,alpha=1.2,max-path=3,seed=1")
    p.add_argument("--compact-ids", action="store_true",
                   help="re-map sparse file ids to dense ranges")


def _add_sim_args(p: ArgumentParser) -> None:
    p.add_argument("--lambda-inf", type=float, default=0.00004,
                   help="infection probability per infrastructure contact")
    p.add_argument("--lambda-dir", type=float, default=0.00001,
                   help="infection probability per direct contact")
    p.add_argument("--trials", type=int, default=500)
    p.add_argument("--seed", type=int, default=0, help="master seed")
    p.add_argument("--threads", type=int, default=os.cpu_count() or 1)


def _get_trace(args):
    if args.trace is not None:
        if not os.path.exists(args.trace):
            raise UsageError(f"trace file not found: {args.trace}")
        return load_trace(args.trace, compact_ids=args.compact_ids)
    return generate_synthetic(_parse_synthetic(args.synthetic))


def _check_output_paths(*paths: str | None) -> None:
    for path in paths:
        if path is None:
            continue
        parent = os.path.dirname(os.path.abspath(path))
        if not os.path.isdir(parent):
            raise UsageError(f"output directory does not exist: {parent}")


def _sim_params(args, policy: str, patch_time: float, fraction: float) -> SimParams:
    return SimParams(lambda_inf=args.lambda_inf, lambda_dir=args.lambda_dir,
                     patch_time=patch_time, patch_fraction=fraction,
                     policy=parse_policy(policy), trials=args.trials,
                     master_seed=args.seed)


def cmd_gen_trace(args) -> int:
    _check_output_paths(args.output)
    params = SyntheticParams(
        n_devices=args.devices, n_aps=args.aps, duration=args.duration,
        contact_rate=args.contact_rate, direct_fraction=args.direct_fraction,
        ap_zipf_alpha=args.zipf_alpha, max_path_len=args.max_path_len,
        seed=args.seed)
    trace = generate_synthetic(params)
    with open(args.output, "w", encoding="utf-8", newline="") as fh:
        serialize_trace(trace, fh)
    print(f"devices={trace.devices} aps={trace.aps} events={len(trace.events)} "
          f"duration={trace.duration!r}")
    return EXIT_OK


def cmd_rank(args) -> int:
    _check_output_paths(args.output)
    trace = _get_trace(args)
    tally = tally_traffic(trace, args.window_end)
    ranked = rank_aps(tally)
    with open(args.output, "w", encoding="utf-8", newline="") as fh:
        fh.write("rank,ap_id,event_count\n")
        for rank, ap in enumerate(ranked, start=1):
            fh.write(f"{rank},{trace.raw_ap_id(ap)},{tally.counts[ap]}\n")
    print(f"ranked {trace.aps} APs by traffic in [0, {args.window_end!r})")
    return EXIT_OK


def cmd_simulate(args) -> int:
    _check_output_paths(args.output, args.series_out)
    trace = _get_trace(args)
    params = _sim_params(args, args.policy, args.patch_time, args.fraction)
    grid = sweep_grid(trace, params, [args.patch_time], [args.fraction],
                      threads=args.threads)
    cell = grid.cell(0, 0)
    print(f"policy={params.policy.kind} patch_time={args.patch_time!r} "
          f"fraction={args.fraction!r} trials={cell.trials} "
          f"mean_fraction={cell.mean_fraction!r} stderr={cell.stderr!r}")
    if args.output:
        with open(args.output, "w", encoding="utf-8", newline="") as fh:
            write_results(grid, fh)
    if args.series_out:
        with open(args.series_out, "w", encoding="utf-8", newline="") as fh:
            write_series(grid, fh)
    return EXIT_OK


def cmd_sweep(args) -> int:
    _check_output_paths(args.output, args.series_out, args.optimal_out)
    trace = _get_trace(args)
    params = _sim_params(args, args.policy, 0.0, 0.0)
    grid = sweep_grid(trace, params, args.patch_times, args.fractions,
                      threads=args.threads)
    with open(args.output, "w", encoding="utf-8", newline="") as fh:
        write_results(grid, fh)
    if args.series_out:
        with open(args.series_out, "w", encoding="utf-8", newline="") as fh:
            write_series(grid, fh)
    if args.optimal_out:
        with open(args.optimal_out, "w", encoding="utf-8", newline="") as fh:
            write_results(optimal_patch_time(grid), fh)
    print(f"swept {len(args.patch_times)}x{len(args.fractions)} grid "
          f"({params.policy.kind}, {params.trials} trials/cell)")
    return EXIT_OK


def cmd_compare(args) -> int:
    _check_output_paths(args.output)
    trace = _get_trace(args)

    def one_grid(policy: str, pin: float | None):
        params = _sim_params(args, policy, 0.0, 0.0)
        if pin is None and params.policy.kind == "random":
            pin = 0.0  # canonical baseline: random patching is immediate
        return sweep_grid(trace, params, args.patch_times, args.fractions,
                          threads=args.threads, pin_patch_time=pin)

    diff = diff_grid(one_grid(args.policy_a, args.patch_time_a),
                     one_grid(args.policy_b, args.patch_time_b))
    with open(args.output, "w", encoding="utf-8", newline="") as fh:
        write_results(diff, fh)
    print(f"compared {args.policy_a} - {args.policy_b} on "
          f"{len(args.patch_times)}x{len(args.fractions)} grid")
    return EXIT_OK


def cmd_oracle_check(args) -> int:
    trace = _get_trace(args)
    params = _sim_params(args, args.policy, args.patch_time, args.fraction)
    plan = make_plan(params.policy, trace, params.patch_time, params.patch_fraction,
                     trial_rng(params.master_seed, 0, PURPOSE_POLICY))
    exact = exact_oracle(trace, params, plan, args.seed_device, cap=args.cap)
    estimate = device_probabilities(trace, params, plan, args.seed_device)

    failures = 0
    print("device  exact        estimate     tolerance(3se)  verdict")
    for d in range(trace.devices):
        se = math.sqrt(exact[d] * (1.0 - exact[d]) / params.trials)
        ok = abs(estimate[d] - exact[d]) <= 3.0 * se
        failures += not ok
        print(f"{d:>6}  {exact[d]:<11.9f}  {estimate[d]:<11.9f}  "
              f"{3.0 * se:<14.9f}  {'pass' if ok else 'FAIL'}")
    if failures:
        print(f"oracle check FAILED for {failures} device(s)", file=sys.stderr)
        return EXIT_CHECK
    print(f"oracle check passed for all {trace.devices} devices "
          f"({params.trials} trials)")
    return EXIT_OK


def build_parser() -> ArgumentParser:
    parser = ArgumentParser(prog="patchsim",
                            description="Malware propagation simulator with "
                                        "traffic-aware AP patching")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    def add(name: str, func, help_text: str) -> ArgumentParser:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", metavar="FILE",
                       help="INI-style key=value config; flags override")
        p.set_defaults(func=func)
        return p

    p = add("gen-trace", cmd_gen_trace, "generate a synthetic trace CSV")
    p.add_argument("--devices", type=int, required=True)
    p.add_argument("--aps", type=int, required=True)
    p.add_argument("--duration", type=float, default=1000.0)
    p.add_argument("--contact-rate", type=float, default=0.01,
                   help="contacts initiated per device per second")
    p.add_argument("--direct-fraction", type=float, default=0.2)
    p.add_argument("--zipf-alpha", type=float, default=1.2)
    p.add_argument("--max-path-len", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output", required=True, metavar="FILE")

    p = add("rank", cmd_rank, "rank APs by observed traffic")
    _add_source_args(p)
    p.add_argument("--window-end", type=float, required=True,
                   help="monitoring cutoff in seconds (events at or after are ignored)")
    p.add_argument("-o", "--output", required=True, metavar="FILE")

    p = add("simulate", cmd_simulate, "run one Monte Carlo configuration")
    _add_source_args(p)
    _add_sim_args(p)
    p.add_argument("--policy", choices=["none", "random", "traffic"], default="none")
    p.add_argument("--patch-time", type=float, default=0.0)
    p.add_argument("--fraction", type=float, default=0.0)
    p.add_argument("-o", "--output", metavar="FILE")
    p.add_argument("--series-out", metavar="FILE")

    p = add("sweep", cmd_sweep, "sweep a (patch time x fraction) grid")
    _add_source_args(p)
    _add_sim_args(p)
    p.add_argument("--policy", choices=["none", "random", "traffic"], required=True)
    p.add_argument("--patch-times", type=_float_list, required=True, metavar="A,B,...")
    p.add_argument("--fractions", type=_float_list, required=True, metavar="A,B,...")
    p.add_argument("-o", "--output", required=True, metavar="FILE")
    p.add_argument("--series-out", metavar="FILE")
    p.add_argument("--optimal-out", metavar="FILE",
                   help="also write the per-fraction optimal patch-time curve")

    p = add("compare", cmd_compare, "difference grid between two policies")
    _add_source_args(p)
    _add_sim_args(p)
    p.add_argument("--policy-a", choices=["none", "random", "traffic"], required=True)
    p.add_argument("--policy-b", choices=["none", "random", "traffic"], required=True)
    p.add_argument("--patch-time-a", type=float, default=None,
                   help="pin side A to one patch time (random defaults to 0)")
    p.add_argument("--patch-time-b", type=float, default=None,
                   help="pin side B to one patch time (random defaults to 0)")
    p.add_argument("--patch-times", type=_float_list, required=True, metavar="A,B,...")
    p.add_argument("--fractions", type=_float_list, required=True, metavar="A,B,...")
    p.add_argument("-o", "--output", required=True, metavar="FILE")

    p = add("oracle-check", cmd_oracle_check,
            "verify Monte Carlo against exact enumeration on a small trace")
    _add_source_args(p)
    _add_sim_args(p)
    p.add_argument("--policy", choices=["none", "random", "traffic"], default="none")
    p.add_argument("--patch-time", type=float, default=0.0)
    p.add_argument("--fraction", type=float, default=0.0)
    p.add_argument("--seed-device", type=int, default=0)
    p.add_argument("--cap", type=int, default=20,
                   help="max number of potentially-infecting events to enumerate")

    return parser


def _config_tokens(path: str) -> list[str]:
    """Turn a flat INI config file into CLI tokens (prepended, so flags win)."""
    if not os.path.exists(path):
        raise UsageError(f"config file not found: {path}")
    cp = configparser.ConfigParser()
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    try:
        cp.read_string(text)
    except configparser.MissingSectionHeaderError:
        cp.read_string("[patchsim]\n" + text)
    tokens: list[str] = []
    sections = list(cp.sections())
    for section in sections:
        for key, value in cp.items(section):
            flag = "--" + key.strip().lower().replace("_", "-")
            value = value.strip()
            if value.lower() in ("true", "yes", "on"):
                tokens.append(flag)
            elif value.lower() in ("false", "no", "off"):
                continue
            else:
                tokens.extend([flag, value])
    return tokens


def _merge_config(argv: list[str]) -> list[str]:
    """Splice config-file tokens right after the subcommand."""
    path = None
    for i, tok in enumerate(argv):
        if tok == "--config" and i + 1 < len(argv):
            path = argv[i + 1]
        elif tok.startswith("--config="):
            path = tok.split("=", 1)[1]
    if path is None or not argv:
        return argv
    return [argv[0]] + _config_tokens(path) + argv[1:]


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(_merge_config(argv))
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        if exc.parser is not None:
            exc.parser.print_usage(sys.stderr)
        return EXIT_USAGE
    except (TraceFormatError, EnumerationCapError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ValueError as exc:  # bad parameters from library validation
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
