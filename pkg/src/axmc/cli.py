"""Batch driver: headless runs, continuation, front export, server launch.

Exit codes: 0 success, 1 runtime error, 2 usage error. The AXMC_SEED
environment variable overrides --seed when set.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys

from . import engine
from .data import Schema, SplitSpec, ingest_csv
from .errors import AxmcError
from .measures import MeasureSpec
from .mobo import WeightBox

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="axmc", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="start a fresh optimization run")
    run_p.add_argument("--data", required=True, help="CSV dataset path")
    run_p.add_argument("--schema", required=True, help="JSON schema sidecar path")
    run_p.add_argument("--measures", required=True, help="comma-separated measure ids")
    run_p.add_argument("--budget", required=True, type=int, help="loop iterations")
    run_p.add_argument("--seed", type=int, default=0)
    run_p.add_argument("--m", type=int, default=None, help="initial design size")
    run_p.add_argument("--out", required=True, help="session output directory")
    run_p.add_argument("--include-protected", action="store_true")

    cont_p = sub.add_parser("continue", help="resume a snapshotted session")
    cont_p.add_argument("--session", required=True, help="session directory or snapshot file")
    cont_p.add_argument("--budget", required=True, type=int)
    cont_p.add_argument("--wmin", type=float, default=None, help="lower bound on w1 (k=2)")
    cont_p.add_argument("--wmax", type=float, default=None, help="upper bound on w1 (k=2)")
    cont_p.add_argument("--box", default=None, help="JSON file with per-objective weight bounds")

    front_p = sub.add_parser("front", help="export the Pareto front")
    front_p.add_argument("--session", required=True)
    front_p.add_argument("--split", choices=("valid", "test", "both"), default="both")
    front_p.add_argument("--format", choices=("csv", "json"), default="csv")
    front_p.add_argument("--out", default=None, help="write to file instead of stdout")

    serve_p = sub.add_parser("serve", help="launch the HTTP control plane")
    serve_p.add_argument("--port", type=int, default=8080)
    serve_p.add_argument("--host", default="127.0.0.1")
    serve_p.add_argument("--sessions-dir", default="axmc-sessions")
    serve_p.add_argument("--ui-dir", default=None, help="static UI bundle directory")
    return parser


def _seed_override(seed: int) -> int:
    env = os.environ.get("AXMC_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise AxmcError(f"AXMC_SEED={env!r} is not an integer")
    return seed


def _snapshot_path(session: str) -> str:
    if os.path.isdir(session):
        return os.path.join(session, engine.SNAPSHOT_FILE)
    return session


def _write_fronts(state: engine.SessionState, out_dir: str) -> None:
    for split in ("valid", "test"):
        engine._atomic_write(
            os.path.join(out_dir, f"front_{split}.csv"), engine.front_csv(state, split)
        )


def _print_front(state: engine.SessionState, split: str) -> None:
    rows = engine.report(state, split)
    ids = state.measure_ids
    print(f"# {split} front ({len(rows)} points)")
    header = "  ".join(f"{mid:>12}" for mid in ids)
    print(f"{'provenance':>10}  {'nrounds':>7}  {'thr':>5}  {header}")
    for row in rows:
        vals = "  ".join(f"{row[mid]:12.4f}" for mid in ids)
        print(f"{row['provenance']:>10}  {row['nrounds']:>7}  {row['thr']:>5.2f}  {vals}")


def cmd_run(args) -> int:
    seed = _seed_override(args.seed)
    schema = Schema.from_json(open(args.schema, encoding="utf-8").read())
    data = ingest_csv(args.data, schema, include_protected=args.include_protected)
    specs = tuple(MeasureSpec(id=mid.strip()) for mid in args.measures.split(",") if mid.strip())
    state = engine.init_session(
        data,
        specs,
        budget=None,
        seed=seed,
        m=args.m,
        split_spec=SplitSpec(seed=seed),
    )
    engine.run(state, iterations=args.budget, out_dir=args.out)
    engine.checkpoint(state, args.out)
    _write_fronts(state, args.out)
    _print_front(state, "valid")
    return 0


def cmd_continue(args) -> int:
    state = engine.load_snapshot(_snapshot_path(args.session))
    box = None
    if args.box is not None:
        with open(args.box, encoding="utf-8") as fh:
            box = WeightBox.from_list(json.load(fh))
    elif args.wmin is not None or args.wmax is not None:
        if state.k != 2:
            raise AxmcError("--wmin/--wmax apply to two-objective sessions; use --box")
        lo = args.wmin if args.wmin is not None else 0.0
        hi = args.wmax if args.wmax is not None else 1.0
        box = WeightBox(bounds=((lo, hi), (0.0, 1.0)))
    if box is not None:
        engine.set_weight_box(state, box)
    out_dir = args.session if os.path.isdir(args.session) else os.path.dirname(args.session) or "."
    engine.run(state, iterations=args.budget, out_dir=out_dir)
    engine.checkpoint(state, out_dir)
    _write_fronts(state, out_dir)
    _print_front(state, "valid")
    return 0


def cmd_front(args) -> int:
    state = engine.load_snapshot(_snapshot_path(args.session))
    if len(state.archive) == 0:
        raise AxmcError("session archive is empty; nothing to export")
    splits = ("valid", "test") if args.split == "both" else (args.split,)
    chunks = []
    for split in splits:
        if args.format == "csv":
            chunks.append(engine.front_csv(state, split))
        else:
            chunks.append(
                json.dumps(
                    {
                        "split": split,
                        "measures": list(state.measure_ids),
                        "rows": engine.report(state, split),
                    }
                )
            )
    text = "\n".join(chunks)
    if args.out:
        engine._atomic_write(args.out, text)
    else:
        print(text)
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    app = create_app(sessions_dir=args.sessions_dir, ui_dir=args.ui_dir)
    try:
        uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    except (OSError, SystemExit) as exc:
        print(f"axmc: cannot serve on port {args.port}: {exc}", file=sys.stderr)
        return 1
    return 0


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.WARNING)
    parser = _build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "run": cmd_run,
        "continue": cmd_continue,
        "front": cmd_front,
        "serve": cmd_serve,
    }
    try:
        return handlers[args.command](args)
    except AxmcError as exc:
        print(f"axmc: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"axmc: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
