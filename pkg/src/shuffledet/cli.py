"""Command-line client.

Subcommands build the same request models the HTTP service accepts and call
the shared handlers in-process, so CLI and API behavior are identical:

    shuffledet detect --image img.png [--config cfg.json] [--weights W]
                      [--tile] --out dets.json
    shuffledet flops  [--config cfg.json] [--ablation-grid] [--json]
    shuffledet priors [--config cfg.json]
    shuffledet eval   --dets dets.json --gt boxes.csv [--ap]
    shuffledet selftest
    shuffledet serve  [--host H] [--port P]

Exit codes: 0 success, 1 runtime failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import sys

import pydantic

from .errors import EngineError
from .service import handlers, schemas


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="shuffledet",
        description="Vehicle-detection inference engine and complexity auditor.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    detect = sub.add_parser("detect", help="run detection on an image")
    detect.add_argument("--config", help="network config JSON")
    detect.add_argument("--weights", help="weight file base path (.json/.bin pair)")
    detect.add_argument("--image", required=True, help="input image (PNG)")
    detect.add_argument("--out", required=True, help="output detections JSON")
    detect.add_argument("--tile", action="store_true",
                        help="tile large images with overlap and merge")
    detect.add_argument("--overlap", type=int, default=100,
                        help="tile overlap in pixels (default 100)")
    detect.add_argument("--seed", type=int, default=0,
                        help="random-init seed when no weights are given")
    detect.add_argument("--conf-threshold", type=float, default=0.5)
    detect.add_argument("--nms-threshold", type=float, default=0.3)
    detect.add_argument("--image-id", default=None,
                        help="image id written to the output (default: file stem)")

    flops = sub.add_parser("flops", help="analytic FLOP/parameter report")
    flops.add_argument("--config", help="network config JSON")
    flops.add_argument("--ablation-grid", action="store_true",
                       help="also print the cumulative DAB enablement grid")
    flops.add_argument("--json", action="store_true", dest="as_json",
                       help="emit the report as JSON")

    priors = sub.add_parser("priors", help="prior box counts per tap")
    priors.add_argument("--config", help="network config JSON")

    evalp = sub.add_parser("eval", help="counting metrics (and optional AP)")
    evalp.add_argument("--dets", required=True, help="detections JSON")
    evalp.add_argument("--gt", required=True, help="ground-truth CSV")
    evalp.add_argument("--ap", action="store_true", help="also compute AP@0.5")
    evalp.add_argument("--iou-threshold", type=float, default=0.5)

    sub.add_parser("selftest", help="run the built-in oracle checks")

    serve = sub.add_parser("serve", help="start the HTTP service")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8000)

    return parser


def _cmd_detect(args) -> int:
    from pathlib import Path

    image_id = args.image_id or Path(args.image).stem
    req = schemas.DetectRequest(
        config_path=args.config,
        weights_path=args.weights,
        seed=args.seed,
        image_path=args.image,
        image_id=image_id,
        tile=args.tile,
        tile_overlap=args.overlap,
        conf_threshold=args.conf_threshold,
        nms_threshold=args.nms_threshold,
    )
    resp = handlers.handle_detect(req)
    records = [d.model_dump(by_alias=True) for d in resp.detections]
    Path(args.out).write_text(json.dumps(records, indent=2) + "\n")
    print(f"{resp.count} detections written to {args.out}")
    return 0


def _cmd_flops(args) -> int:
    req = schemas.FlopsRequest(config_path=args.config,
                               ablation_grid=args.ablation_grid)
    resp = handlers.handle_flops(req)
    if args.as_json:
        print(resp.model_dump_json(indent=2, exclude_none=True))
        return 0
    print(resp.table)
    print()
    print(f"full network:   {resp.full_gflops:.4f} GFLOPs "
          f"({resp.full_params:,} params)")
    print(f"plain baseline: {resp.baseline_gflops:.4f} GFLOPs "
          f"({resp.baseline_params:,} params)")
    print(f"delta:          {resp.delta_gflops:+.4f} GFLOPs")
    print(f"published reference: full {resp.published_full_gflops} GFLOPs, "
          f"baseline {resp.published_baseline_gflops} GFLOPs")
    if resp.ablation:
        print()
        print(f"{'row':<10} {'GFLOPs':>10} {'params':>12}")
        for row in resp.ablation:
            print(f"{row.label:<10} {row.gflops:>10.4f} {row.total_params:>12,}")
    return 0


def _cmd_priors(args) -> int:
    resp = handlers.handle_priors(schemas.PriorsRequest(config_path=args.config))
    print(f"{'tap':<10} {'grid':>9} {'B':>3} {'priors':>9}")
    for t in resp.taps:
        print(f"{t.name:<10} {t.height:>4}x{t.width:<4} {t.boxes_per_location:>3} "
              f"{t.count:>9,}")
    print(f"total priors per class: {resp.total:,}")
    print(f"published total:        {resp.published_total:,}")
    print(f"note: {resp.note}")
    return 0


def _cmd_eval(args) -> int:
    req = schemas.EvalRequest(detections_path=args.dets,
                              ground_truth_path=args.gt,
                              ap=args.ap, iou_threshold=args.iou_threshold)
    resp = handlers.handle_eval(req)
    print(f"images: {len(resp.per_image)}")
    print(f"MAE:  {resp.mae:.4f}")
    print(f"RMSE: {resp.rmse:.4f}")
    if resp.ap is not None:
        print(f"AP@{args.iou_threshold}: {resp.ap:.4f}")
    return 0


def _cmd_selftest(_args) -> int:
    from . import selftest

    results = selftest.run_all(verbose=True)
    return 0 if all(ok for _, ok, _ in results) else 1


def _cmd_serve(args) -> int:
    import uvicorn

    from .service import app

    uvicorn.run(app, host=args.host, port=args.port)
    return 0


_COMMANDS = {
    "detect": _cmd_detect,
    "flops": _cmd_flops,
    "priors": _cmd_priors,
    "eval": _cmd_eval,
    "selftest": _cmd_selftest,
    "serve": _cmd_serve,
}


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return _COMMANDS[args.command](args)
    except (EngineError, pydantic.ValidationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
