"""``forge``: thin client for the forge service.

Every subcommand posts a job to the service API. By default the app runs
in-process (so paths resolve on this machine and no daemon is needed);
``--server URL`` targets a running ``forge review-serve`` instead.
Flags can be preloaded from a TOML config file with one table per
subcommand; explicit flags win.
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import Any

from .pipeline.config import load_config_file


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="forge", description=__doc__)
    parser.add_argument("--server", default=None, help="base URL of a running forge service")
    parser.add_argument("--config", default=None, help="TOML config file mirroring flags")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("stage1-synth", help="generate synthetic object-editing samples")
    p.add_argument("--count", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--stacks", default=None, help="layered-stack fixture directory")
    p.add_argument("--objects", default=None, help="RGBA object-asset directory")
    p.add_argument("--out", default=None)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--tasks", default=None, help="comma list: ad,rm,rp,tr")
    p.add_argument("--distractors", type=int, default=0, help="max distractor scribbles (0=off)")
    p.add_argument("--tau", type=int, default=8)
    p.add_argument("--llm-url", default=None)

    p = sub.add_parser(
        "text-gen", aliases=["stage1-text"], help="generate synthetic text-editing samples"
    )
    p.add_argument("--count", type=int, default=None)
    p.add_argument("--tasks", default=None, help="comma list: ins,del,rep,style")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)

    p = sub.add_parser("mosaic", help="mosaic single-task samples into multi-task tuples")
    p.add_argument("--in", dest="manifest_root", default=None, help="source manifest root")
    p.add_argument("--out", default=None)
    p.add_argument("--k", default="2,4", help="cell counts, e.g. 2,4")
    p.add_argument("--count", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("train-toy", help="train the toy velocity model")
    p.add_argument("--manifest", dest="manifest_root", default=None)
    p.add_argument("--lambda", dest="lam", type=float, default=0.1)
    p.add_argument("--steps", type=int, default=2000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--factor", type=int, default=8)
    p.add_argument("--report", default=None)

    p = sub.add_parser("eval-text", help="judge model outputs against a text dataset")
    p.add_argument("--manifest", dest="manifest_root", default=None)
    p.add_argument("--outputs", default=None)
    p.add_argument("--judge", default="stub", help="stub | replay:<file> | http:<url>")
    p.add_argument("--repeats", type=int, default=3)
    p.add_argument("--report", default=None)

    p = sub.add_parser("stage2-candidates", help="build real-image candidates for review")
    p.add_argument("--images", default=None)
    p.add_argument("--store", default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--editor-url", default=None)
    p.add_argument("--segmenter-url", default=None)
    p.add_argument("--vlm-url", default=None)

    p = sub.add_parser("export", help="write the two training splits")
    p.add_argument("--stage1", action="append", default=None, help="stage-1 manifest root (repeatable)")
    p.add_argument("--store", default=None, help="candidate store with review verdicts")
    p.add_argument("--out-stage1", default=None)
    p.add_argument("--out-stage2", default=None)

    p = sub.add_parser("review-serve", help="run the review service over HTTP")
    p.add_argument("--store", default=None, required=False)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8080)
    p.add_argument("--lease-seconds", type=float, default=600.0)

    return parser


def _merge_config(parser: argparse.ArgumentParser, args: argparse.Namespace) -> None:
    if not args.config:
        return
    table = load_config_file(args.config).get(args.command, {})
    for key, value in table.items():
        dest = key.replace("-", "_")
        if not hasattr(args, dest):
            continue
        if getattr(args, dest) == parser.get_default(dest) or getattr(args, dest) is None:
            setattr(args, dest, value)


def _require(args: argparse.Namespace, *names: str) -> None:
    missing = [n for n in names if getattr(args, n) in (None, [])]
    if missing:
        flags = ", ".join(f"--{n.replace('_', '-')}" for n in missing)
        raise SystemExit(f"forge {args.command}: missing required flags: {flags}")


def _payload(args: argparse.Namespace) -> tuple[str, dict[str, Any]]:
    cmd = args.command
    if cmd == "stage1-synth":
        _require(args, "count", "stacks", "objects", "out")
        return "/jobs/stage1-synth", {
            "count": args.count,
            "seed": args.seed,
            "stacks_dir": args.stacks,
            "objects_dir": args.objects,
            "out_dir": args.out,
            "workers": args.workers,
            "tasks": args.tasks.split(",") if args.tasks else None,
            "distractor_max": args.distractors,
            "tau": args.tau,
            "llm_url": args.llm_url,
        }
    if cmd == "text-gen":
        _require(args, "count", "out")
        return "/jobs/text-gen", {
            "count": args.count,
            "seed": args.seed,
            "out_dir": args.out,
            "tasks": args.tasks.split(",") if args.tasks else None,
        }
    if cmd == "mosaic":
        _require(args, "manifest_root", "out", "count")
        return "/jobs/mosaic", {
            "manifest_root": args.manifest_root,
            "out_dir": args.out,
            "count": args.count,
            "seed": args.seed,
            "k": [int(k) for k in str(args.k).split(",")],
        }
    if cmd == "train-toy":
        _require(args, "manifest_root")
        return "/jobs/train-toy", {
            "manifest_root": args.manifest_root,
            "lam": args.lam,
            "steps": args.steps,
            "seed": args.seed,
            "factor": args.factor,
            "report_path": args.report,
        }
    if cmd == "eval-text":
        _require(args, "manifest_root", "outputs")
        return "/jobs/eval-text", {
            "manifest_root": args.manifest_root,
            "outputs_dir": args.outputs,
            "judge": args.judge,
            "repeats": args.repeats,
            "report_path": args.report,
        }
    if cmd == "stage2-candidates":
        _require(args, "images", "store")
        return "/jobs/stage2-candidates", {
            "images_dir": args.images,
            "store_dir": args.store,
            "seed": args.seed,
            "editor_url": args.editor_url,
            "segmenter_url": args.segmenter_url,
            "vlm_url": args.vlm_url,
        }
    if cmd == "export":
        _require(args, "stage1", "out_stage1", "out_stage2")
        return "/jobs/export-splits", {
            "stage1_roots": args.stage1,
            "store_dir": args.store,
            "out_stage1": args.out_stage1,
            "out_stage2": args.out_stage2,
        }
    raise SystemExit(f"unhandled command {cmd}")


def _serve(args: argparse.Namespace) -> None:
    import uvicorn

    from .service import create_app

    app = create_app(store_dir=args.store, lease_seconds=args.lease_seconds)
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")


def _client(server: str | None):
    if server:
        import httpx

        return httpx.Client(base_url=server, timeout=None)
    # in-process transport against the same app the server would run
    import warnings

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DeprecationWarning)
        from fastapi.testclient import TestClient

    from .service import create_app

    return TestClient(create_app())


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    args.command = {"stage1-text": "text-gen"}.get(args.command, args.command)
    _merge_config(parser, args)

    if args.command == "review-serve":
        _serve(args)
        return 0

    path, payload = _payload(args)
    with _client(args.server) as client:
        resp = client.post(path, json=payload)
    if resp.status_code >= 400:
        try:
            detail = resp.json().get("detail", resp.text)
        except Exception:
            detail = resp.text
        print(f"forge {args.command}: {detail}", file=sys.stderr)
        return 1
    body = resp.json()
    if "table" in body:
        print(body.pop("table"))
    for key, value in body.items():
        if isinstance(value, (dict, list)):
            value = json.dumps(value)
        print(f"{key}: {value}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
