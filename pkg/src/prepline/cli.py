"""Command line interface: serve, train, run, diff."""

from __future__ import annotations

import argparse
import os
import sys

from . import recommender
from .config import load_config
from .errors import PreplineError
from .qnet import save_network


def _cmd_serve(args):
    import uvicorn

    from .service import create_app

    config = load_config(args.config)
    if args.port is not None:
        config["port"] = args.port
    app = create_app(config)
    uvicorn.run(app, host=str(config["host"]), port=int(config["port"]), log_level="warning")
    return 0


def _corpus_pairs(corpus_dir, label):
    names = sorted(
        n for n in os.listdir(corpus_dir) if n.endswith(".csv")
    )
    if not names:
        raise PreplineError(f"no CSV files under {corpus_dir}")
    return [(os.path.join(corpus_dir, n), label) for n in names]


def _cmd_train(args):
    cfg = recommender.TrainConfig(episodes=args.episodes, seed=args.seed)
    pairs = _corpus_pairs(args.corpus, args.label)
    logical, physical, log = recommender.train(pairs, cfg)
    os.makedirs(args.out, exist_ok=True)
    meta = {"seed": args.seed, "episodes": args.episodes, "corpus_size": len(pairs)}
    save_network(logical, os.path.join(args.out, "logical.qnet"), meta=meta)
    save_network(physical, os.path.join(args.out, "physical.qnet"), meta=meta)
    final = log[-1]["final_metric"] if log else 0.0
    print(f"trained {args.episodes} episodes on {len(pairs)} datasets; "
          f"last episode metric={final:.4f}")
    print(f"models written to {args.out}/logical.qnet and {args.out}/physical.qnet")
    return 0


def _cmd_run(args):
    from .executor import Executor, baseline_program, insertion_dataset
    from .generation import TemplateBackend
    from .qnet import load_network
    from .script import insert_call, parse

    if args.models:
        nets = (
            load_network(os.path.join(args.models, "logical.qnet")),
            load_network(os.path.join(args.models, "physical.qnet")),
        )
    else:
        nets = recommender.default_networks(seed=0)
    data_dir = os.path.dirname(os.path.abspath(args.dataset)) or "."
    csv_name = os.path.basename(args.dataset)
    runner = Executor(data_dir)
    backend = TemplateBackend()
    src = baseline_program(csv_name, args.label)
    graph = parse(src)
    result = runner.run(graph)
    if not result.ok:
        print(f"baseline failed: {result.error_message}", file=sys.stderr)
        return 1
    print(f"step 0: op=baseline metric={result.metric:.6f}")
    for step in range(1, args.auto_steps + 1):
        dataset = insertion_dataset(graph, result.env)
        recs = recommender.recommend(dataset, graph, nets)
        if not recs:
            print(f"step {step}: all operation families applied; stopping")
            break
        top = recs[0]
        op, overrides = backend.resolve(top.prompt)
        src = insert_call(src, op.name, args.target_var, overrides)
        graph = parse(src)
        result = runner.run(graph)
        if not result.ok:
            print(f"step {step}: op={op.name} failed: {result.error_message}", file=sys.stderr)
            return 1
        print(f"step {step}: op={op.name} metric={result.metric:.6f}")
    return 0


def _cmd_diff(args):
    from .versions import diff_lines

    try:
        with open(args.a, "r", encoding="utf-8") as fh:
            text_a = fh.read().rstrip("\n")
        with open(args.b, "r", encoding="utf-8") as fh:
            text_b = fh.read().rstrip("\n")
    except OSError as exc:
        print(f"cannot read input: {exc}", file=sys.stderr)
        return 1
    script = diff_lines(text_a, text_b)
    for change in script.changes:
        marker = "-" if change.kind == "delete" else "+"
        print(f"{marker} {change.text}")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(prog="prepline")
    sub = parser.add_subparsers(dest="command", required=True)

    serve = sub.add_parser("serve", help="run the HTTP service")
    serve.add_argument("--port", type=int, default=None)
    serve.add_argument("--config", default=None)
    serve.set_defaults(func=_cmd_serve)

    train = sub.add_parser("train", help="train the recommendation policies")
    train.add_argument("--corpus", required=True, help="directory of labeled CSVs")
    train.add_argument("--label", default="label")
    train.add_argument("--episodes", type=int, default=200)
    train.add_argument("--seed", type=int, default=0)
    train.add_argument("--out", default="models")
    train.set_defaults(func=_cmd_train)

    run = sub.add_parser("run", help="apply top recommendations unattended")
    run.add_argument("--dataset", required=True)
    run.add_argument("--label", required=True)
    run.add_argument("--auto-steps", type=int, default=0)
    run.add_argument("--models", default=None)
    run.add_argument("--target-var", default="X")
    run.set_defaults(func=_cmd_run)

    diff = sub.add_parser("diff", help="semantic diff of two PrepScript files")
    diff.add_argument("a")
    diff.add_argument("b")
    diff.set_defaults(func=_cmd_diff)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except PreplineError as exc:
        print(str(exc), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
