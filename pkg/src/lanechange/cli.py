"""Command-line entry points: ``train``, ``eval``, ``simulate``, ``gradcheck``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from .config import ConfigError, dump_config, load_config
from .nn import HEADS, Mlp, gradient_check
from .persistence import CheckpointError, export_metrics, load_checkpoint, save_checkpoint, write_csv
from .training import EpisodeRecord, evaluate, run_training
from .world import CollisionError

EPISODE_HEADER = tuple(EpisodeRecord.__dataclass_fields__)
TRACE_HEADER = ("step", "time", "vid", "lane", "x", "y", "v", "a", "theta", "omega")


def _parser():
    p = argparse.ArgumentParser(prog="lanechange", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    t = sub.add_parser("train", help="train a lane-change policy")
    t.add_argument("--config")
    t.add_argument("--seed", type=int)
    t.add_argument("--out", required=True, help="output directory")

    e = sub.add_parser("eval", help="evaluate a checkpoint on fresh traffic")
    e.add_argument("--model", required=True)
    e.add_argument("--config")
    e.add_argument("--episodes", type=int, default=200)
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--sigma", type=float, default=0.0, help="exploration noise (0 = greedy)")
    e.add_argument("--out", default="eval.csv", help="per-episode CSV")

    s = sub.add_parser("simulate", help="traffic-only run with a vehicle trace")
    s.add_argument("--config")
    s.add_argument("--steps", type=int, required=True)
    s.add_argument("--trace", required=True)
    s.add_argument("--seed", type=int)

    g = sub.add_parser("gradcheck", help="compare backprop against finite differences")
    g.add_argument("--trials", type=int, default=3)
    g.add_argument("--seed", type=int, default=0)
    return p


def _config(args):
    cfg = load_config(args.config)
    if getattr(args, "seed", None) is not None:
        cfg = cfg.with_seed(args.seed)
    return cfg


def cmd_train(args):
    cfg = _config(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    result = run_training(cfg.env, cfg.train, progress_every=1000 if args.verbose else 0)
    export_metrics(result.metrics, out / "metrics.csv")
    write_csv(out / "episodes.csv", EPISODE_HEADER, result.episodes)
    save_checkpoint(result.q, out / "model.ckpt",
                    {"seed": cfg.train.seed, "step": len(result.metrics), "config": dump_config(cfg)})
    losses = [m.loss for m in result.metrics]
    k = min(4000, len(losses))
    print(f"gradient steps {len(losses)}  env steps {result.env_steps}  episodes {len(result.episodes)}")
    print(f"mean loss first {k}: {np.mean(losses[:k]):.6g}  last {k}: {np.mean(losses[-k:]):.6g}")
    return 0


def cmd_eval(args):
    cfg = _config(args)
    q, _ = load_checkpoint(args.model)
    report = evaluate(q, cfg.env, args.episodes, args.seed, args.sigma)
    write_csv(args.out, EPISODE_HEADER, report.episodes)
    for key, value in report.summary().items():
        print(f"{key}: {value:.6g}" if isinstance(value, float) else f"{key}: {value}")
    return 0


def cmd_simulate(args):
    cfg = _config(args)
    world = cfg.env.world(np.random.default_rng(cfg.scenario.seed), lane_changes=False)
    rows = []
    for _ in range(args.steps):
        world.step()
        rows.extend(world.trace_rows())
    write_csv(args.trace, TRACE_HEADER, rows)
    print(f"steps {args.steps}  spawned {world.spawned}  exited {world.exited}  collisions 0")
    return 0


def run_gradchecks(trials: int = 3, seed: int = 0):
    """All gradient checks; returns ``[(name, max_error, tol, passed)]``."""
    from .qlearning import QuadraticQ
    from .verification import loss_gradient_check

    rng = np.random.default_rng(seed)
    results = []
    for head in HEADS:
        for sizes in ([8, 100, 1], [8, 150, 1]):
            net = Mlp.initialize(sizes, head, rng)
            err, ok = gradient_check(net, trials=trials, h=1e-5, tol=1e-5, rng=rng)
            results.append((f"mlp {head} {sizes}", err, 1e-5, ok))
    q = QuadraticQ.initialize(rng)
    err = loss_gradient_check(q, trials=trials, rng=rng)
    results.append(("td loss", err, 1e-4, err < 1e-4))
    return results


def cmd_gradcheck(args):
    results = run_gradchecks(args.trials, args.seed)
    for name, err, tol, ok in results:
        print(f"{'PASS' if ok else 'FAIL'}  {name:28s} max rel err {err:.3e} (tol {tol:g})")
    return 0 if all(ok for *_, ok in results) else 1


COMMANDS = {"train": cmd_train, "eval": cmd_eval, "simulate": cmd_simulate, "gradcheck": cmd_gradcheck}


def main(argv=None) -> int:
    parser = _parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (CheckpointError, CollisionError, OSError, RuntimeError, FloatingPointError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def run_cli(argv) -> int:
    return main(argv)


if __name__ == "__main__":
    sys.exit(main())
