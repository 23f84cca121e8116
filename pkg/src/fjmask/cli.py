"""Command-line interface: ``fjmask {generate,simulate,attack,sweep,plot}``.

Exit codes: 0 success, 1 simulation stopped at ``--t-max`` without
converging, 2 parameter error, 3 numerical failure, 4 I/O error.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .attacker import KnowledgeSet, attack_agent, identify_unmasked
from .dynamics import (
    example1_system,
    limit_opinions,
    load_system,
    random_fj_system,
    read_trajectory_csv,
    save_system,
    simulate,
)
from .exceptions import NumericalError, ParameterError
from .experiments import (
    SweepConfig,
    load_config,
    read_results_csv,
    run_sweep,
    summarize,
    write_outputs,
)
from .mask import MaskConfig, simulate_masked
from .network import Network, random_regular_network
from .plotting import box_plot_svg, histogram_svg, trajectory_svg

EXIT_OK, EXIT_CAPPED, EXIT_PARAM, EXIT_NUMERIC, EXIT_IO = 0, 1, 2, 3, 4

GRAPH_REQUIRED = (
    "the attack needs the network graph: without it the influence elements of "
    "the target row cannot be isolated and the estimate would have to cover all n agents"
)


def redacted_path(path) -> Path:
    path = Path(path)
    return path.with_name(path.stem + ".redacted" + path.suffix)


def cmd_generate(args) -> int:
    if args.example1:
        sys_ = example1_system()
    else:
        if args.n is None or args.d is None:
            raise ParameterError("--n and --d are required unless --example1 is given")
        if not 1 <= args.d <= args.n:
            raise ParameterError(f"need 1 <= d <= n, got d={args.d}, n={args.n}")
        net_seed, sys_seed = np.random.SeedSequence(args.seed % 2**64).generate_state(2, dtype=np.uint64)
        net = random_regular_network(args.n, args.d, int(net_seed))
        sys_ = random_fj_system(net, args.lambda_lo, args.lambda_hi, int(sys_seed))
    red = Path(args.redacted_out) if args.redacted_out else redacted_path(args.out)
    save_system(sys_, args.out)
    save_system(sys_, red, redact=True)
    print(f"wrote system with n={sys_.n} to {args.out} (redacted copy: {red})")
    return EXIT_OK


def cmd_simulate(args) -> int:
    sys_ = load_system(args.system)
    if args.phi is None:
        traj = simulate(sys_, args.eps, args.t_max)
        label = "unmasked"
    else:
        run = simulate_masked(sys_, MaskConfig(args.phi, args.seed), args.eps, args.t_max)
        traj = run.trajectory
        label = f"masked (phi={args.phi}, seed={args.seed})"
        if args.noise_log:
            run.write_noise_log(args.noise_log, seed=args.seed)
    traj.write_csv(args.out)
    status = "converged" if traj.converged else "stopped at t_max"
    print(f"{label} run: T={traj.T}, {status}; wrote {args.out}")
    try:
        gap = float(np.max(np.abs(traj.final - limit_opinions(sys_))))
        print(f"max distance of final state from the limit: {gap:.3e}")
    except NumericalError:
        pass
    return EXIT_OK if traj.converged else EXIT_CAPPED


def _load_knowledge_doc(path) -> dict:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"system file {path} not found; {GRAPH_REQUIRED}")
    doc = json.loads(path.read_text())
    if "W" in doc:
        raise ParameterError(
            f"{path} contains the influence structure W; pass the redacted system file"
        )
    if "network" not in doc:
        raise ParameterError(f"{path} has no network; {GRAPH_REQUIRED}")
    for key in ("lambda", "u"):
        if key not in doc:
            raise ParameterError(f"{path} is missing field {key!r}")
    return doc


def cmd_attack(args) -> int:
    doc = _load_knowledge_doc(args.system)
    states = read_trajectory_csv(args.trajectory)
    K = KnowledgeSet(Network.from_dict(doc["network"]), doc["u"], doc["lambda"], states)
    if args.phi is None:
        lam_hat, W_hat = identify_unmasked(K)
        out = {"lambda_hat": lam_hat.tolist(), "W_hat": W_hat.tolist()}
        print(f"identified diag(lambda) W from {K.T + 1} states")
    else:
        report = attack_agent(K, args.agent, args.phi)
        out = report.to_dict()
        print(f"agent {args.agent}: estimate error {report.estimate_error:.6g} over T={K.T} observations")
    Path(args.out).write_text(json.dumps(out, indent=2))
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = load_config(args.config)
    overrides = {k: getattr(args, k) for k in ("trials", "seed", "phi", "eps") if getattr(args, k) is not None}
    if overrides:
        cfg = SweepConfig.from_dict({**cfg.to_dict(), **overrides})
    result = run_sweep(cfg, workers=args.workers)
    res_path, sum_path = write_outputs(result, args.out_dir, overwrite=args.overwrite)
    for row in summarize(result):
        print(
            f"{cfg.swept}={row['swept_value']}: median {row['median']:.4g}, "
            f"mean {row['mean']:.4g}, inf {row['fraction_infinite']:.3f}, excluded {row['excluded']}"
        )
    print(f"wrote {res_path} and {sum_path}")
    return EXIT_OK


def cmd_plot(args) -> int:
    if args.kind == "trajectory":
        panels = [read_trajectory_csv(p) for p in args.input]
        titles = args.title or [Path(p).stem for p in args.input]
        trajectory_svg(panels, args.out, titles=titles)
    else:
        if len(args.input) != 1:
            raise ParameterError(f"--kind {args.kind} takes exactly one --input")
        rows = read_results_csv(args.input[0])
        if args.kind == "box":
            box_plot_svg(rows, args.out, xlabel=args.xlabel, log_y=not args.linear)
        else:
            if args.value is not None:
                rows = [r for r in rows if r[0] == args.value]
            histogram_svg([r[2] for r in rows], args.out, bins=args.bins, log_x=not args.linear)
    print(f"wrote {args.out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fjmask", description="Masked Friedkin-Johnsen systems and eavesdropper attacks"
    )
    parser.add_argument("--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a random (or the 3-agent example) system as JSON")
    g.add_argument("--n", type=int)
    g.add_argument("--d", type=int)
    g.add_argument("--lambda-lo", type=float, default=0.0)
    g.add_argument("--lambda-hi", type=float, default=1.0)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--example1", action="store_true", help="emit the 3-agent worked example")
    g.add_argument("--out", required=True)
    g.add_argument("--redacted-out", help="path of the copy without W (default: <out>.redacted.json)")
    g.set_defaults(func=cmd_generate)

    s = sub.add_parser("simulate", help="run a system, optionally masked, to a trajectory CSV")
    s.add_argument("--system", required=True)
    s.add_argument("--eps", type=float, default=1e-4)
    s.add_argument("--t-max", type=int, default=100_000)
    s.add_argument("--phi", type=float, help="apply the mask with this decay rate")
    s.add_argument("--seed", type=int, default=0, help="mask noise seed")
    s.add_argument("--noise-log", help="write the mask noise (test use only) to this JSON file")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_simulate)

    a = sub.add_parser("attack", help="eavesdrop on a trajectory using a redacted system file")
    a.add_argument("--system", required=True, help="redacted system JSON (no W)")
    a.add_argument("--trajectory", required=True)
    a.add_argument("--phi", type=float, help="mask decay rate; omit for an unmasked run")
    a.add_argument("--agent", type=int, default=0)
    a.add_argument("--out", required=True)
    a.set_defaults(func=cmd_attack)

    w = sub.add_parser("sweep", help="Monte Carlo sweep from a JSON or TOML config")
    w.add_argument("--config", required=True)
    w.add_argument("--out-dir", required=True)
    w.add_argument("--overwrite", action="store_true", help="replace existing output files")
    w.add_argument("--workers", type=int, default=1)
    w.add_argument("--trials", type=int)
    w.add_argument("--seed", type=int)
    w.add_argument("--phi", type=float)
    w.add_argument("--eps", type=float)
    w.set_defaults(func=cmd_sweep)

    p = sub.add_parser("plot", help="render a static SVG from CSV output")
    p.add_argument("--input", action="append", required=True)
    p.add_argument("--kind", choices=("box", "histogram", "trajectory"), required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--xlabel", default="swept value")
    p.add_argument("--value", type=float, help="histogram only this swept value")
    p.add_argument("--bins", type=int, default=50)
    p.add_argument("--linear", action="store_true", help="linear instead of log error axis")
    p.add_argument("--title", action="append", help="panel title (trajectory plots)")
    p.set_defaults(func=cmd_plot)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    try:
        return args.func(args)
    except ParameterError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARAM
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (OSError, json.JSONDecodeError) as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
