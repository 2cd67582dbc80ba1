"""Command-line driver.

    orderdrop svd       [--config PATH] [--seed N] [--out DIR] [--quiet]
    orderdrop central   [--config PATH] [--seed N] [--out DIR] [--quiet]
    orderdrop federated [--config PATH] [--seed N] [--out DIR] [--threads N] [--quiet]
    orderdrop cost      [--config PATH] [--out DIR]
    orderdrop inspect   CHECKPOINT [--extract P] [--out DIR]

Exit codes: 0 ok, 1 runtime failure, 2 usage or config error.
The default output root is ``$ORDERDROP_OUT`` (else ``./runs``).
"""

import argparse
import contextlib
import json
import os
import sys
import time

from .experiments import centralized, config, cost_table, federated, report, svd_recovery
from .nn import checkpoint
from .od.cost import cost_model, from_architecture
from .od.submodel import extract_submodel, materialize_submodel

OUT_ENV = "ORDERDROP_OUT"
LOCK_NAME = ".orderdrop.lock"


class UsageError(Exception):
    pass


class OutputLocked(RuntimeError):
    pass


@contextlib.contextmanager
def output_lock(directory):
    """Exclusive ownership of ``directory`` for the lifetime of the block."""
    os.makedirs(directory, exist_ok=True)
    path = os.path.join(directory, LOCK_NAME)
    try:
        fd = os.open(path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
    except FileExistsError:
        raise OutputLocked(f"output directory {directory} is in use (remove {path} if stale)") from None
    try:
        os.write(fd, str(os.getpid()).encode())
        os.close(fd)
        yield directory
    finally:
        with contextlib.suppress(FileNotFoundError):
            os.remove(path)


def _logger(args):
    if args.quiet:
        return None
    start = time.perf_counter()
    return lambda msg: print(f"[{time.perf_counter() - start:7.1f}s] {msg}", file=sys.stderr, flush=True)


def resolve_config(args, experiment):
    cfg = config.load_config(args.config, experiment) if args.config else config.default_config(experiment)
    changes = {}
    if args.seed is not None:
        changes["seeds"] = (args.seed,)
    if getattr(args, "threads", None) is not None:
        if args.threads < 1:
            raise UsageError("--threads must be >= 1")
        changes["threads"] = args.threads
    if args.out:
        changes["output"] = args.out
    return cfg.replace(**changes) if changes else cfg


def output_dir(cfg, experiment):
    if cfg.output:
        return cfg.output
    return os.path.join(os.environ.get(OUT_ENV) or "runs", experiment)


def _print_checks(summary):
    checks = summary.get("checks")
    if checks:
        print(json.dumps(report._jsonable(checks), indent=2, sort_keys=True))


def cmd_svd(args):
    cfg = resolve_config(args, "svd")
    out = output_dir(cfg, "svd")
    with output_lock(out):
        try:
            results, summary = svd_recovery.run_svd_experiment(cfg, _logger(args))
        except svd_recovery.Divergence as e:
            print(f"error: training diverged: {e}", file=sys.stderr)
            return 1
        svd_recovery.write_svd_report(out, cfg, results, summary)
    verdict = "recovered" if summary["recovered"] else "not recovered"
    print(f"max final distance {summary['max_final_distance']:.4f} (threshold {cfg.svd.threshold:g}): {verdict}")
    print(f"report written to {out}")
    return 0


def cmd_central(args):
    cfg = resolve_config(args, "central")
    out = output_dir(cfg, "central")
    with output_lock(out):
        traces, summary, models = centralized.run_centralized(cfg, _logger(args))
        report.write_report(out, cfg, traces, summary, models)
    _print_checks(summary)
    print(f"report written to {out}")
    return 0


def cmd_federated(args):
    cfg = resolve_config(args, "federated")
    out = output_dir(cfg, "federated")
    with output_lock(out):
        traces, summary, models = federated.run_federated(cfg, _logger(args))
        report.write_report(out, cfg, traces, summary, models)
    _print_checks(summary)
    print(f"report written to {out}")
    return 0


def cmd_cost(args):
    cfg = resolve_config(args, "cost")
    from .od.distribution import make_uniform_k

    _, text = cost_table.run_cost_table(cfg.cost.descriptors, make_uniform_k(cfg.dropout.k))
    sys.stdout.write(text)
    if args.out:
        with output_lock(args.out):
            with open(os.path.join(args.out, "cost.csv"), "w") as f:
                f.write(text)
    return 0


def describe_checkpoint(net, header):
    lines = [f"format version: {header['format_version']}"]
    arch = header["architecture"]
    lines.append(f"input shape: {tuple(arch['input_shape'])}")
    lines.append("layers:")
    lines += [f"  {i}: {json.dumps(layer, sort_keys=True)}" for i, layer in enumerate(arch["layers"])]
    lines.append("widths: " + ", ".join(f"{p:g}" for p in net.widths))
    desc = from_architecture(net.arch)
    lines.append("parameters per width:")
    for p in net.widths:
        lines.append(f"  p={p:g}: {net.param_count(p)} params, {cost_model(desc, p).macs} MACs")
    keys = [f"{p:g}/{i}" for p in net.widths for i in net.arch.batchnorm_layers()]
    lines.append("normalisation statistics: " + (", ".join(keys) if keys else "none"))
    return "\n".join(lines)


def cmd_inspect(args):
    with open(args.checkpoint, "rb") as f:
        data = f.read()
    net = checkpoint.loads(data)
    print(describe_checkpoint(net, checkpoint.read_header(data)))
    if args.extract is None:
        return 0
    try:
        net.width_key(args.extract)
    except ValueError:
        raise UsageError(f"--extract {args.extract:g} is not one of the checkpoint widths {net.widths}") from None
    stem = os.path.splitext(os.path.basename(args.checkpoint))[0]
    out = args.out or os.path.dirname(os.path.abspath(args.checkpoint))
    path = os.path.join(out, f"{stem}-p{args.extract:g}.ckpt")
    with output_lock(out):
        checkpoint.save(materialize_submodel(extract_submodel(net, args.extract)), path)
    print(f"extracted p={args.extract:g} to {path}")
    return 0


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="JSON experiment config")
    common.add_argument("--seed", type=int, help="run this single seed instead of the configured ones")
    common.add_argument("--out", metavar="DIR", help=f"output directory (default ${OUT_ENV}/<experiment> or runs/<experiment>)")
    common.add_argument("--threads", type=int, help="client threads per federated round")
    common.add_argument("--quiet", action="store_true", help="suppress progress output")

    parser = argparse.ArgumentParser(prog="orderdrop", description="Ordered-dropout experiments.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn, help_ in (
        ("svd", cmd_svd, "SVD recovery with a two-layer linear net"),
        ("central", cmd_central, "centralised OD against independently trained submodels"),
        ("federated", cmd_federated, "federated FjORD against eFD and FD"),
        ("cost", cmd_cost, "MACs and parameter table"),
    ):
        p = sub.add_parser(name, parents=[common], help=help_)
        p.set_defaults(func=fn)
    p = sub.add_parser("inspect", parents=[common], help="print a checkpoint summary")
    p.add_argument("checkpoint")
    p.add_argument("--extract", type=float, metavar="P", help="write the width-P submodel as its own checkpoint")
    p.set_defaults(func=cmd_inspect)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (config.ConfigError, UsageError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except (OSError, checkpoint.CheckpointError, OutputLocked, ArithmeticError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
