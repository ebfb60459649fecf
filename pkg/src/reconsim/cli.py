"""Command-line front end: table-reproduction runs, typical-set reports,
and posterior-entropy oracle queries, with reproducible CSV output.

Every file written is paired with a JSON manifest (resolved configuration,
seed, duration, output checksums) sufficient to reproduce it bit-for-bit.
"""

from __future__ import annotations

import argparse
import hashlib
import io
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .bitcore import ChannelConfig, ConfigurationError, RngSeed, sample_error_pattern, BitString
from .montecarlo import ExperimentConfig, bs94_bound, run_experiment
from .protocols import (
    BBBSS,
    CASCADE,
    ProtocolParams,
    run_bbbss,
    run_cascade,
    skeleton_of,
)
from .renyi import (
    PARITY_MODE_CAP,
    SKELETON_MODE_CAP,
    ParityConstraint,
    posterior_from_parities,
    posterior_from_skeleton,
    prior_posterior,
    renyi2,
    renyi_reduction,
)
from .typicality import (
    EmptyTypicalWindow,
    SourceDist,
    TypicalityParams,
    extreme_typical_logprobs,
    format_log10_sci,
    typical_mass,
    typical_ratio_log,
    LN10,
)


def _fail(msg: str) -> int:
    print(f"error: {msg}", file=sys.stderr)
    return 2


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    h.update(path.read_bytes())
    return h.hexdigest()


def _write_manifest(out_path: Path, argv, config: dict, master_seed, started: float):
    manifest = {
        "tool": "reconsim",
        "version": __version__,
        "argv": list(argv),
        "config": config,
        "master_seed": master_seed,
        "duration_seconds": round(time.monotonic() - started, 3),
        "outputs": [
            {
                "path": str(out_path),
                "sha256": _sha256(out_path),
                "bytes": out_path.stat().st_size,
            }
        ],
    }
    manifest_path = out_path.with_suffix(out_path.suffix + ".manifest.json")
    manifest_path.write_text(json.dumps(manifest, indent=2) + "\n")


def _simulate_csv(args) -> str:
    header = [
        "protocol",
        "n",
        "epsilon",
        "trials",
        "mean_announced_bits",
        "se_announced",
        "bs94_bound",
        "failure_prob",
        "mean_round_trips",
        "se_round_trips",
    ] + [f"resid_after_pass_{i}" for i in range(1, args.passes + 1)]
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    for n in args.n:
        for eps in args.epsilon:
            params = ProtocolParams(
                channel=ChannelConfig(epsilon_ch=eps, n=n),
                passes=args.passes,
                protocol_kind=args.protocol,
            )
            cfg = ExperimentConfig(params=params, trials=args.trials, master_seed=args.seed)
            stats = run_experiment(cfg, threads=args.threads)
            try:
                bound = f"{bs94_bound(n, eps):.6g}"
            except ConfigurationError:
                bound = ""
            row = [
                args.protocol,
                str(n),
                f"{eps:g}",
                str(args.trials),
                f"{stats.mean_announced_bits:.6g}",
                f"{stats.se_announced_bits:.6g}",
                bound,
                f"{stats.failure_probability:.6f}",
                f"{stats.mean_round_trips:.6g}",
                f"{stats.se_round_trips:.6g}",
            ] + [f"{r:.6g}" for r in stats.mean_residual_after_pass]
            buf.write(",".join(row) + "\n")
    return buf.getvalue()


def cmd_simulate(args, argv) -> int:
    started = time.monotonic()
    if args.trials < 1:
        return _fail("--trials must be >= 1")
    if not args.n:
        return _fail("at least one --n is required")
    if not args.epsilon:
        return _fail("at least one --epsilon is required")
    for n in args.n:
        if n < 1:
            return _fail(f"--n must be >= 1, got {n}")
    for eps in args.epsilon:
        if not (0.0 < eps <= 0.5):
            return _fail(f"--epsilon must be in (0, 1/2], got {eps}")
    if args.passes < 1:
        return _fail("--passes must be >= 1")
    try:
        csv_text = _simulate_csv(args)
    except ConfigurationError as exc:
        return _fail(str(exc))
    if args.out:
        out_path = Path(args.out)
        out_path.write_text(csv_text)
        _write_manifest(
            out_path,
            argv,
            {
                "command": "simulate",
                "protocol": args.protocol,
                "n": args.n,
                "epsilon": args.epsilon,
                "trials": args.trials,
                "passes": args.passes,
                "threads": args.threads,
            },
            args.seed,
            started,
        )
    else:
        sys.stdout.write(csv_text)
    return 0


def cmd_typical(args) -> int:
    try:
        dist = SourceDist.binary(args.p)
        tp = TypicalityParams(n=args.n, eps_typ=args.eps_typ)
    except (ValueError, TypeError) as exc:
        return _fail(str(exc))
    try:
        p_min, p_max = extreme_typical_logprobs(dist, tp)
    except EmptyTypicalWindow as exc:
        return _fail(str(exc))
    ratio_ln = typical_ratio_log(dist, tp)
    mass = typical_mass(dist, tp)
    print(f"P_min = {p_min.sci()}")
    print(f"P_max = {p_max.sci()}")
    print(f"ratio = {format_log10_sci(ratio_ln / LN10)}")
    print(f"mass = {mass:.3g}")
    return 0


def _print_oracle(prior, post, extra: dict):
    r_prior = renyi2(prior)
    r_post = renyi2(post)
    print(f"prior_renyi2 = {r_prior:.6f} bits")
    print(f"posterior_renyi2 = {r_post:.6f} bits")
    print(f"reduction = {renyi_reduction(prior, post):.6f} bits")
    for key, val in extra.items():
        print(f"{key} = {val}")


def _dump_posterior(post, path: Path, argv, config, seed, started):
    with path.open("w") as fh:
        fh.write("pattern,weight\n")
        for text, weight in post.rows():
            fh.write(f"{text},{weight:.17g}\n")
    _write_manifest(path, argv, config, seed, started)


def cmd_oracle(args, argv) -> int:
    started = time.monotonic()
    if not (0.0 < args.epsilon <= 0.5):
        return _fail(f"--epsilon must be in (0, 1/2], got {args.epsilon}")
    if args.mode == "parities":
        if args.n > PARITY_MODE_CAP:
            return _fail(f"--n above the parities-mode cap {PARITY_MODE_CAP}")
        try:
            constraints = [ParityConstraint.parse(c) for c in args.constraint]
            if args.covered == "true":
                constraints = [c.covered() for c in constraints]
            prior = prior_posterior(args.n, args.epsilon)
            post = posterior_from_parities(args.n, args.epsilon, constraints)
        except ConfigurationError as exc:
            return _fail(str(exc))
        _print_oracle(prior, post, {"support": post.support().size})
        config = {
            "command": "oracle",
            "mode": "parities",
            "n": args.n,
            "epsilon": args.epsilon,
            "constraints": args.constraint,
            "covered": args.covered,
        }
    else:
        if args.n > SKELETON_MODE_CAP:
            return _fail(f"--n above the skeleton-mode cap {SKELETON_MODE_CAP}")
        seed = RngSeed(args.seed, 0)
        channel = ChannelConfig(epsilon_ch=args.epsilon, n=args.n)
        params = ProtocolParams(
            channel=channel, passes=args.passes, protocol_kind=CASCADE
        )
        pattern = sample_error_pattern(channel, seed)
        alice = BitString.zeros(args.n)
        outcome = run_cascade(alice, alice ^ pattern, params, seed)
        skel = skeleton_of(outcome.transcript)
        prior = prior_posterior(args.n, args.epsilon)
        post = posterior_from_skeleton(args.n, args.epsilon, params, skel, seed)
        _print_oracle(
            prior,
            post,
            {
                "true_pattern": pattern.to_text(),
                "support": post.support().size,
                "protocol_success": outcome.success,
            },
        )
        config = {
            "command": "oracle",
            "mode": "skeleton",
            "n": args.n,
            "epsilon": args.epsilon,
            "passes": args.passes,
        }
    if args.dump_posterior:
        _dump_posterior(
            post, Path(args.dump_posterior), argv, config, args.seed, started
        )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="reconsim",
        description="Reconciliation-protocol simulator and typical-set numerics.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="Monte-Carlo protocol tables as CSV")
    sim.add_argument("--protocol", choices=[CASCADE, BBBSS], required=True)
    sim.add_argument("--n", action="append", type=int, default=None,
                     help="sequence length; repeatable for a grid")
    sim.add_argument("--epsilon", action="append", type=float, default=None,
                     help="channel error probability; repeatable for a grid")
    sim.add_argument("--trials", type=int, required=True)
    sim.add_argument("--passes", type=int, default=4)
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--threads", type=int, default=None)
    sim.add_argument("--out", type=str, default=None)

    typ = sub.add_parser("typical", help="typical-set extremes, ratio and mass")
    typ.add_argument("--n", type=int, required=True)
    typ.add_argument("--p", type=str, required=True,
                     help="P(0) as an exact decimal, e.g. 0.1")
    typ.add_argument("--eps-typ", dest="eps_typ", type=str, required=True)

    orc = sub.add_parser("oracle", help="posterior collision entropy on small instances")
    orc.add_argument("--n", type=int, required=True)
    orc.add_argument("--epsilon", type=float, required=True)
    orc.add_argument("--mode", choices=["parities", "skeleton"], default="parities")
    orc.add_argument("--covered", choices=["true", "false"], default="false")
    orc.add_argument("--constraint", action="append", default=[],
                     help="'i,j,...=v' with v in {0,1,?}; '?' means covered")
    orc.add_argument("--seed", type=int, default=0)
    orc.add_argument("--passes", type=int, default=4)
    orc.add_argument("--dump-posterior", type=str, default=None)

    return parser


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code else 0
    if args.command == "simulate":
        return cmd_simulate(args, argv)
    if args.command == "typical":
        return cmd_typical(args)
    return cmd_oracle(args, argv)


def run() -> None:
    sys.exit(main())


if __name__ == "__main__":
    run()
