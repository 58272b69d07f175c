"""Command-line entry point: one subcommand per pipeline stage, a full
pipeline runner, and the annotation server.

Exit codes: 0 success, 1 validation failure, 2 missing prerequisite,
3 annotation port in use.
"""

from __future__ import annotations

import argparse
import errno
import json
import sys
from pathlib import Path

from .agreement import (
    AnnotationError,
    krippendorff_alpha,
    labels_to_matrix,
    read_labels,
)
from .config import ConfigError, MissingInputError, load_config
from .pipeline import STAGES, TASKS, TASK_KEY, PipelineRunner

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_MISSING_INPUT = 2
EXIT_PORT_IN_USE = 3

STAGE_HELP = {
    "ingest": "segment, filter and dedup raw documents; map labeled corpora",
    "featurize": "build the feature schema and sparse matrices",
    "cv-report": "outer CV with nested hyperparameter search",
    "train": "train the boosted-tree classifier on the labeled corpus",
    "classify": "score the unlabeled corpus with the trained model",
    "select": "pick the most confident premises and render training lines",
    "train-lm": "train the n-gram generation backends",
    "generate": "sample candidate premises for every prompt",
    "build-tasks": "shuffle candidates into blind annotation tasks",
    "simulate-labels": "generate deterministic stand-in annotator labels",
    "vote": "aggregate labels by quorum vote",
    "agree": "compute Krippendorff's alpha over the labels",
    "report": "render the per-model premise report",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="argforge",
        description="Weakly-supervised argument-generation pipeline",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", help="pipeline config file (or $ARGFORGE_CONFIG)")
        p.add_argument("--seed", type=int, help="override the global seed")
        p.add_argument("--out", help="override the output directory")

    for name in STAGES:
        stage_parser = sub.add_parser(name, help=STAGE_HELP[name])
        add_common(stage_parser)
        if name == "agree":
            stage_parser.add_argument(
                "--labels",
                help="standalone mode: compute alpha for this labels file and print JSON",
            )

    run_all = sub.add_parser("run-all", help="run every configured stage in order")
    add_common(run_all)

    serve = sub.add_parser("serve", help="serve the annotation protocol over HTTP")
    add_common(serve)
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8040)
    serve.add_argument("--tasks", help="tasks file (defaults to the pipeline artifact)")
    serve.add_argument("--key", help="provenance key file (evaluator mode)")
    serve.add_argument("--labels", help="labels file (defaults to the configured path)")
    serve.add_argument("--static-dir", help="directory with the browser client assets")
    serve.add_argument("--quorum", type=int, default=3)
    serve.add_argument("--n-annotators", type=int, default=4)
    return parser


def _standalone_agree(labels_path: str) -> int:
    path = Path(labels_path)
    if not path.exists():
        print(f"missing labels file: {path}", file=sys.stderr)
        return EXIT_MISSING_INPUT
    try:
        result = krippendorff_alpha(labels_to_matrix(read_labels(path)))
    except AnnotationError as err:
        print(f"cannot compute agreement: {err}", file=sys.stderr)
        return EXIT_VALIDATION
    print(json.dumps(result.to_dict(), ensure_ascii=False, sort_keys=True))
    return EXIT_OK


def _serve(args) -> int:
    from .server import create_server

    if args.tasks:
        tasks_path = Path(args.tasks)
        key_path = Path(args.key) if args.key else None
        labels_path = Path(args.labels) if args.labels else tasks_path.parent / "labels.tsv"
        quorum, n_annotators = args.quorum, args.n_annotators
    else:
        config = load_config(args.config, args.seed, args.out)
        tasks_path = config.artifact(TASKS)
        key_candidate = config.artifact(TASK_KEY)
        key_path = Path(args.key) if args.key else (key_candidate if key_candidate.exists() else None)
        labels_path = Path(args.labels) if args.labels else config.annotation.labels
        quorum, n_annotators = config.annotation.quorum, config.annotation.n_annotators
    if not tasks_path.exists():
        print(f"missing tasks file: {tasks_path}", file=sys.stderr)
        return EXIT_MISSING_INPUT
    try:
        server = create_server(
            tasks_path,
            labels_path,
            key_path,
            host=args.host,
            port=args.port,
            quorum=quorum,
            n_annotators=n_annotators,
            static_dir=args.static_dir,
        )
    except OSError as err:
        if err.errno == errno.EADDRINUSE:
            print(f"port {args.port} is already in use", file=sys.stderr)
            return EXIT_PORT_IN_USE
        raise
    host, port = server.server_address[:2]
    print(f"argforge annotation server listening on http://{host}:{port}", flush=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "serve":
            return _serve(args)
        if args.command == "agree" and getattr(args, "labels", None):
            return _standalone_agree(args.labels)
        config = load_config(args.config, args.seed, args.out)
        runner = PipelineRunner(config)
        if args.command == "run-all":
            for manifest in runner.run_all():
                print(f"wrote {manifest}")
        else:
            manifest = runner.run_stage(args.command)
            print(f"wrote {manifest}")
        return EXIT_OK
    except MissingInputError as err:
        print(f"missing input: {err}", file=sys.stderr)
        return EXIT_MISSING_INPUT
    except (ConfigError, ValueError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
