"""Command-line entry points: synth, train, eval, serve."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys

from .config import RunConfig, load_config
from .errors import TsadError


def _parse_set(pairs: list[str]) -> dict:
    """--set key=value overrides; values are parsed as JSON, else kept as strings."""
    out = {}
    for pair in pairs:
        key, sep, raw = pair.partition("=")
        if not sep or not key:
            raise TsadError(f"--set expects key=value, got {pair!r}")
        try:
            out[key] = json.loads(raw)
        except json.JSONDecodeError:
            out[key] = raw
    return out


def _base_config(args) -> RunConfig:
    config = load_config(args.config) if args.config else RunConfig()
    overrides = {}
    for name in ("data_path", "label_path", "seed", "episodes", "mode", "potential"):
        value = getattr(args, name, None)
        if value is not None:
            overrides[name] = value
    overrides.update(_parse_set(args.set or []))
    return config.with_overrides(**overrides) if overrides else config


def cmd_synth(args) -> int:
    from .data import synth_spike_series, write_series_csv, write_series_matrix

    series = synth_spike_series(
        T=args.length, d=args.dim, n_anomalies=args.anomalies,
        seed=args.seed, noise_sigma=args.noise_sigma,
    )
    if args.dim == 1:
        write_series_csv(series, args.out)
        print(f"wrote {series.length} rows ({args.anomalies} anomalies) to {args.out}")
    else:
        if not args.labels_out:
            raise TsadError("--labels-out is required when --dim > 1")
        write_series_matrix(series, args.out, args.labels_out)
        print(f"wrote {series.length}x{args.dim} matrix to {args.out}, "
              f"labels to {args.labels_out}")
    return 0


def cmd_train(args) -> int:
    from .active import LabelStore
    from .pipeline import train_run

    config = _base_config(args)
    store = None
    if args.labels_in:
        store = LabelStore.load_jsonl(args.labels_in)
        print(f"preloaded {len(store)} labels from {args.labels_in}")
    result = train_run(config, run_dir=args.run_dir, store=store)
    overall = result.metrics.get("overall", {})
    print(f"run complete: {args.run_dir}")
    print(f"test precision={overall.get('precision', 0.0):.4f} "
          f"recall={overall.get('recall', 0.0):.4f} f1={overall.get('f1', 0.0):.4f}")
    return 0


def cmd_eval(args) -> int:
    from .pipeline import eval_run

    payload = eval_run(args.run_dir, data_path=args.data_path, label_path=args.label_path,
                       out_dir=args.out, split=args.split)
    overall = payload.get("overall", {})
    print(f"precision={overall.get('precision', 0.0):.4f} "
          f"recall={overall.get('recall', 0.0):.4f} f1={overall.get('f1', 0.0):.4f}")
    return 0


def cmd_serve(args) -> int:
    import numpy as np

    from . import checkpoint
    from .active import LabelStore, Query, select_queries
    from .agent import QNet
    from .data import (
        NormStats,
        decided_indices,
        load_csv_univariate,
        load_matrix_multivariate,
        normalize,
    )
    from .service import AnnotationServer, AnnotationState

    if args.label_path:
        series = load_matrix_multivariate(args.data_path, args.label_path)
    else:
        series = load_csv_univariate(args.data_path)

    store = LabelStore()
    if args.labels_file and os.path.exists(args.labels_file):
        store = LabelStore.load_jsonl(args.labels_file)
        print(f"loaded {len(store)} labels from {args.labels_file}")

    n_steps = args.n_steps
    if args.run_dir:
        qnet_path = os.path.join(args.run_dir, "qnet.ckpt")
        _, meta = checkpoint.load_params(qnet_path)
        net = QNet.load(qnet_path)
        norm = NormStats(mean=np.asarray(meta["norm_mean"], dtype=np.float64),
                         std=np.asarray(meta["norm_std"], dtype=np.float64))
        n_steps = int(meta.get("n_steps", n_steps))
        queries = select_queries(net, [normalize(series, norm)], n_steps, store,
                                 args.max_queries)
    else:
        ts = decided_indices(series, n_steps)
        queries = [
            Query(series.id, int(t), 0.0)
            for t in ts[: args.max_queries]
            if store.get(series.id, int(t)) is None
        ]

    state = AnnotationState([series], store, n_steps, labels_path=args.labels_file)
    state.set_queries(queries)
    server = AnnotationServer((args.host, args.port), state, static_dir=args.static)
    host, port = server.server_address[:2]
    print(f"annotation service on http://{host}:{port} "
          f"({len(queries)} pending queries); Ctrl-C to stop")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        print("shutting down")
        server.shutdown()
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tsadrl",
        description="Reward-shaped anomaly detection over time series",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_synth = sub.add_parser("synth", help="generate a synthetic labeled series")
    p_synth.add_argument("--out", required=True, help="output CSV (or matrix for --dim > 1)")
    p_synth.add_argument("--labels-out", help="label matrix output (only for --dim > 1)")
    p_synth.add_argument("--length", "-T", type=int, default=2000)
    p_synth.add_argument("--anomalies", type=int, default=20)
    p_synth.add_argument("--dim", type=int, default=1)
    p_synth.add_argument("--seed", type=int, default=0)
    p_synth.add_argument("--noise-sigma", type=float, default=0.1)
    p_synth.set_defaults(func=cmd_synth)

    p_train = sub.add_parser("train", help="train a detector end to end")
    p_train.add_argument("--run-dir", required=True)
    p_train.add_argument("--config", help="JSON config; defaults apply if omitted")
    p_train.add_argument("--data", dest="data_path")
    p_train.add_argument("--labels", dest="label_path",
                         help="label matrix (multivariate input)")
    p_train.add_argument("--labels-in", help="preload annotation records (JSONL)")
    p_train.add_argument("--seed", type=int)
    p_train.add_argument("--episodes", type=int)
    p_train.add_argument("--mode", choices=("active", "full"))
    p_train.add_argument("--potential", choices=("heuristic", "llm", "constant"))
    p_train.add_argument("--set", action="append", metavar="KEY=VALUE",
                         help="override any config field")
    p_train.set_defaults(func=cmd_train)

    p_eval = sub.add_parser("eval", help="evaluate a finished run's checkpoints")
    p_eval.add_argument("--run-dir", required=True)
    p_eval.add_argument("--data", dest="data_path")
    p_eval.add_argument("--labels", dest="label_path")
    p_eval.add_argument("--out", help="write metrics/predictions here instead")
    p_eval.add_argument("--split", choices=("test", "train", "all"), default="test")
    p_eval.set_defaults(func=cmd_eval)

    p_serve = sub.add_parser("serve", help="run the annotation HTTP service")
    p_serve.add_argument("--data", dest="data_path", required=True)
    p_serve.add_argument("--labels", dest="label_path")
    p_serve.add_argument("--run-dir", help="use this run's Q-net to rank queries")
    p_serve.add_argument("--labels-file", help="JSONL file to load and persist answers")
    p_serve.add_argument("--n-steps", type=int, default=25)
    p_serve.add_argument("--max-queries", type=int, default=50)
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--port", type=int, default=8765)
    p_serve.add_argument("--static", help="directory of UI assets to serve at /")
    p_serve.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=os.environ.get("TSADRL_LOG", "WARNING"))
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except TsadError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
