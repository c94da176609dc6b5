"""HTTP control plane: create sessions, run, pause, steer, inspect fronts.

One background worker thread per running session; control commands apply
at iteration boundaries only (that is what keeps runs deterministic), so
the handlers never mutate a live optimizer. Readers take cheap snapshots
of the append-only archive. Sessions are checkpointed to the sessions
directory after every iteration and restored on server start.
"""

from __future__ import annotations

import json
import logging
import os
import tempfile
import threading
import time

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse, PlainTextResponse
from fastapi.staticfiles import StaticFiles

from . import engine
from .data import Schema, SplitSpec, ingest_csv
from .errors import AxmcError, ConfigurationError, InfeasibleBoxError, InputError, RestoreError
from .measures import MeasureSpec
from .mobo import WeightBox

logger = logging.getLogger("axmc.service")


class ServiceError(Exception):
    def __init__(self, status_code: int, code: str, message: str, field: str | None = None):
        super().__init__(message)
        self.status_code = status_code
        self.code = code
        self.message = message
        self.field = field

    def body(self) -> dict:
        out = {"code": self.code, "message": self.message}
        if self.field:
            out["field"] = self.field
        return out


class SessionRunner:
    """Owns one session's state, worker thread and pause flag."""

    def __init__(self, state: engine.SessionState, out_dir: str | None):
        self.state = state
        self.out_dir = out_dir
        self.created = time.time()
        self.lock = threading.Lock()
        self.pause_flag = threading.Event()
        self.busy = False
        self.thread: threading.Thread | None = None
        self.error: str | None = None

    @property
    def status(self) -> str:
        return engine.RUNNING if self.busy else self.state.status

    def start(self, iterations: int | None, seconds: float | None) -> None:
        with self.lock:
            if self.busy:
                raise ServiceError(409, "already_running", "session is already running")
            if self.state.status not in (engine.IDLE, engine.PAUSED, engine.DONE):
                raise ServiceError(409, "bad_status", f"cannot run from status {self.state.status}")
            self.pause_flag.clear()
            self.error = None
            self.busy = True
            self.thread = threading.Thread(
                target=self._work, args=(iterations, seconds), daemon=True
            )
            self.thread.start()

    def _work(self, iterations: int | None, seconds: float | None) -> None:
        try:
            engine.run(
                self.state,
                iterations=iterations,
                seconds=seconds,
                out_dir=self.out_dir,
                pause=self.pause_flag,
            )
        except Exception as exc:  # keep the session reachable after bugs
            logger.exception("session %s run failed", self.state.id)
            self.error = str(exc)
            self.state.status = engine.PAUSED
        finally:
            self.busy = False

    def pause(self) -> None:
        # takes effect at the next iteration boundary; idempotent
        self.pause_flag.set()

    def set_weights(self, box: WeightBox) -> None:
        with self.lock:
            if self.busy:
                raise ServiceError(409, "running", "pause the session before changing weights")
            engine.set_weight_box(self.state, box)
            if self.out_dir is not None:
                engine.save_snapshot(self.state, os.path.join(self.out_dir, engine.SNAPSHOT_FILE))

    def summary(self) -> dict:
        state = self.state
        return {
            "id": state.id,
            "created": self.created,
            "status": self.status,
            "iterations_done": state.budget.iterations_done,
            "iterations_allowed": state.budget.iterations_allowed,
            "k": state.k,
            "measures": list(state.measure_ids),
            "box": state.box.to_list(),
            "archive_size": len(state.archive),
            "error": self.error,
        }


def _parse_specs(raw) -> tuple[MeasureSpec, ...]:
    if not isinstance(raw, list) or not raw:
        raise ServiceError(422, "invalid_measures", "measures must be a non-empty list", "measures")
    specs = []
    for item in raw:
        try:
            if isinstance(item, str):
                specs.append(MeasureSpec(id=item))
            elif isinstance(item, dict) and "id" in item:
                specs.append(MeasureSpec(id=item["id"], params=item.get("params", {})))
            else:
                raise ServiceError(422, "invalid_measures", f"bad measure entry {item!r}", "measures")
        except ConfigurationError as exc:
            raise ServiceError(422, "invalid_measures", str(exc), "measures")
    return tuple(specs)


def _parse_schema(body: dict) -> Schema:
    if "schema" in body and body["schema"] is not None:
        return Schema.from_json(json.dumps(body["schema"]))
    if "schema_path" in body and body["schema_path"]:
        try:
            with open(body["schema_path"], encoding="utf-8") as fh:
                return Schema.from_json(fh.read())
        except OSError as exc:
            raise ServiceError(400, "unreadable_schema", str(exc), "schema_path")
    raise ServiceError(422, "missing_schema", "provide schema or schema_path", "schema")


def create_app(sessions_dir: str | None = None, ui_dir: str | None = None) -> FastAPI:
    """Build the API app; restores any snapshots found under sessions_dir."""
    app = FastAPI(title="axmc", version="0.1.0")
    runners: dict[str, SessionRunner] = {}

    if sessions_dir is not None:
        os.makedirs(sessions_dir, exist_ok=True)
        for name in sorted(os.listdir(sessions_dir)):
            snap = os.path.join(sessions_dir, name, engine.SNAPSHOT_FILE)
            if os.path.isfile(snap):
                try:
                    state = engine.load_snapshot(snap)
                except RestoreError as exc:
                    logger.warning("skipping snapshot %s: %s", snap, exc)
                    continue
                runners[state.id] = SessionRunner(state, os.path.join(sessions_dir, name))
                logger.info("restored session %s (%s)", state.id, state.status)

    @app.exception_handler(ServiceError)
    async def _service_error(_req: Request, exc: ServiceError):
        return JSONResponse(status_code=exc.status_code, content=exc.body())

    def _runner(session_id: str) -> SessionRunner:
        runner = runners.get(session_id)
        if runner is None:
            raise ServiceError(404, "unknown_session", f"no session {session_id!r}")
        return runner

    @app.get("/sessions")
    def list_sessions():
        return [runner.summary() for runner in runners.values()]

    @app.post("/sessions", status_code=201)
    async def create_session(request: Request):
        body = await request.json()
        if not isinstance(body, dict):
            raise ServiceError(422, "invalid_body", "request body must be a JSON object")
        schema = _map_error(lambda: _parse_schema(body))
        specs = _parse_specs(body.get("measures"))
        if isinstance(body.get("robustness"), dict):
            # measure-specific settings may also come as a top-level section
            specs = tuple(
                MeasureSpec(id=s.id, params={**body["robustness"], **s.params})
                if s.id == "robustness"
                else s
                for s in specs
            )
        csv_text = body.get("csv")
        dataset_path = body.get("dataset_path")
        if csv_text is None and dataset_path is None:
            raise ServiceError(422, "missing_dataset", "provide csv or dataset_path", "csv")
        seed = int(body.get("seed", 0))

        def build():
            if csv_text is not None:
                fd, tmp = tempfile.mkstemp(suffix=".csv")
                try:
                    with os.fdopen(fd, "w", encoding="utf-8") as fh:
                        fh.write(csv_text)
                    data = ingest_csv(tmp, schema, include_protected=bool(body.get("include_protected", False)))
                finally:
                    os.unlink(tmp)
            else:
                if not os.path.isfile(dataset_path):
                    raise ServiceError(400, "unreadable_dataset", f"no file {dataset_path!r}", "dataset_path")
                data = ingest_csv(dataset_path, schema, include_protected=bool(body.get("include_protected", False)))
            split_spec = SplitSpec(seed=seed) if "split" not in body else SplitSpec(
                fractions=tuple(body["split"].get("fractions", (0.70, 0.15, 0.15))),
                seed=body["split"].get("seed", seed),
                stratified=body["split"].get("stratified", True),
            )
            return engine.init_session(
                data,
                specs,
                budget=None,
                seed=seed,
                m=body.get("m"),
                split_spec=split_spec,
                rho=float(body.get("rho", 0.05)),
                n_candidates=int(body.get("n_candidates", 1000)),
                forest_size=int(body.get("forest_size", 100)),
            )

        state = _map_error(build)
        out_dir = None
        if sessions_dir is not None:
            out_dir = os.path.join(sessions_dir, state.id)
            engine.checkpoint(state, out_dir, new_records_from=0)
        runners[state.id] = SessionRunner(state, out_dir)
        return {"id": state.id, "status": state.status}

    @app.post("/sessions/{session_id}/run", status_code=202)
    async def start_run(session_id: str, request: Request):
        runner = _runner(session_id)
        body = await request.json()
        iterations = body.get("iterations")
        seconds = body.get("seconds")
        if iterations is None and seconds is None:
            raise ServiceError(422, "missing_budget", "provide iterations or seconds", "iterations")
        if iterations is not None and (not isinstance(iterations, int) or iterations < 1):
            raise ServiceError(422, "invalid_budget", "iterations must be a positive integer", "iterations")
        if seconds is not None and not (isinstance(seconds, (int, float)) and seconds > 0):
            raise ServiceError(422, "invalid_budget", "seconds must be positive", "seconds")
        runner.start(iterations, seconds)
        return {"id": session_id, "status": engine.RUNNING}

    @app.post("/sessions/{session_id}/pause", status_code=202)
    def pause(session_id: str):
        runner = _runner(session_id)
        runner.pause()
        return {"id": session_id, "status": runner.status}

    @app.get("/sessions/{session_id}")
    def status(session_id: str):
        return _runner(session_id).summary()

    @app.get("/sessions/{session_id}/front")
    def front(session_id: str, split: str = "valid", format: str = "json"):
        runner = _runner(session_id)
        if split not in ("valid", "test"):
            raise ServiceError(422, "invalid_split", "split must be valid or test", "split")
        if format not in ("json", "csv"):
            raise ServiceError(422, "invalid_format", "format must be json or csv", "format")
        if format == "csv":
            text = _map_error(lambda: engine.front_csv(runner.state, split))
            return PlainTextResponse(text, media_type="text/csv")
        rows = _map_error(lambda: engine.report(runner.state, split))
        return {"split": split, "measures": list(runner.state.measure_ids), "rows": rows}

    @app.get("/sessions/{session_id}/path")
    def path(session_id: str):
        runner = _runner(session_id)
        return {"measures": list(runner.state.measure_ids), "iterations": engine.optimization_path(runner.state)}

    @app.patch("/sessions/{session_id}/weights")
    def set_weights(session_id: str, body: dict):
        runner = _runner(session_id)
        bounds = body.get("bounds")
        if bounds is None:
            raise ServiceError(422, "missing_bounds", "provide bounds: [[lo, hi], ...]", "bounds")
        try:
            box = WeightBox.from_list(bounds)
        except (InfeasibleBoxError, AxmcError, TypeError, ValueError) as exc:
            raise ServiceError(422, "infeasible_box", str(exc), "bounds")
        runner.set_weights(box)
        return {"id": session_id, "box": runner.state.box.to_list()}

    if ui_dir is not None and os.path.isdir(ui_dir):
        app.mount("/", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app


def _map_error(fn):
    """Translate domain errors into HTTP error bodies."""
    try:
        return fn()
    except ServiceError:
        raise
    except ConfigurationError as exc:
        raise ServiceError(422, "configuration_error", str(exc))
    except InputError as exc:
        raise ServiceError(400, "input_error", str(exc))
    except AxmcError as exc:
        raise ServiceError(422, "invalid_request", str(exc))
