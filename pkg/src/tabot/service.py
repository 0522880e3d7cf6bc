"""HTTP facade tying the pipeline together.

Endpoints (all payloads are versioned UTF-8 JSON documents):

    POST   /datasets                          upload CSV, get default schema
    GET    /datasets/{id}/schema              current schema document
    PATCH  /datasets/{id}/schema              apply enrichment commands
    POST   /datasets/{id}/bot                 generate a bundle
    POST   /datasets/{id}/chat                one conversation turn
    POST   /datasets/{id}/chat/{session}/rating
    GET    /datasets/{id}/log                 interaction records
    GET    /health

Persistence is a directory per dataset under the storage root (source
bytes, schema versions, active bundle, interaction log), so restarting the
service over the same directory reproduces identical chat behavior.
Errors always carry a machine-readable code; no endpoint returns a stack
trace.  Schema edits and generation are serialized per dataset; turns are
serialized per session.
"""

from __future__ import annotations

import json
import threading
import uuid
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from .config import DEFAULT_CONFIG, TabotConfig
from .dialogue import (Answer, DialogueManager, InteractionLog, Session,
                       SessionStore, UnknownTurn)
from .fallback import FallbackClient, HttpFallbackClient
from .generator import (BotBundle, bundle_to_json, generate, load_bundle)
from .ingest import IngestError, MalformedCsv, Table, load_csv
from .patterns import catalog
from .schema import (DataSchema, SchemaError, apply_enrichment,
                     build_default_schema, command_from_dict, load_schema,
                     save_schema, schema_to_json)

_CATALOG = catalog()


class ApiError(Exception):
    def __init__(self, status: int, code: str, message: str,
                 details: Any = None) -> None:
        super().__init__(message)
        self.status = status
        self.code = code
        self.message = message
        self.details = details

    def response(self) -> JSONResponse:
        body = {"error": {"code": self.code, "message": self.message}}
        if self.details is not None:
            body["error"]["details"] = self.details
        return JSONResponse(status_code=self.status, content=body)


@dataclass
class DatasetEntry:
    dataset_id: str
    directory: Path
    table: Table
    schema: DataSchema
    schema_version: int
    bundle: BotBundle | None = None
    manager: DialogueManager | None = None
    sessions: SessionStore = field(default_factory=SessionStore)
    log: InteractionLog | None = None
    lock: threading.Lock = field(default_factory=threading.Lock)
    generating: bool = False
    session_locks: dict[str, threading.Lock] = field(default_factory=dict)

    def session_lock(self, session_id: str) -> threading.Lock:
        with self.lock:
            return self.session_locks.setdefault(session_id, threading.Lock())


class DatasetRegistry:
    """Directory-per-dataset storage plus the in-memory runtime objects."""

    def __init__(self, storage_dir: Path, config: TabotConfig,
                 fallback_client: FallbackClient | None = None) -> None:
        self.storage_dir = Path(storage_dir)
        self.storage_dir.mkdir(parents=True, exist_ok=True)
        self.config = config
        self.fallback_client = fallback_client
        if fallback_client is None and config.fallback_url:
            self.fallback_client = HttpFallbackClient(config.fallback_url,
                                                      config.fallback_timeout_s)
        self._entries: dict[str, DatasetEntry] = {}
        self._registry_lock = threading.Lock()
        self._load_existing()

    def _load_existing(self) -> None:
        for directory in sorted(self.storage_dir.iterdir()) if self.storage_dir.exists() else []:
            if not directory.is_dir() or not (directory / "source.csv").exists():
                continue
            try:
                self._restore(directory)
            except Exception:
                continue  # a corrupt dataset directory must not block startup

    def _restore(self, directory: Path) -> None:
        dataset_id = directory.name
        table = load_csv(directory / "source.csv")
        versions = sorted(directory.glob("schema_v*.json"),
                          key=lambda p: int(p.stem.split("_v")[1]))
        if versions:
            schema = load_schema(json.loads(versions[-1].read_text(encoding="utf-8")))
            version = int(versions[-1].stem.split("_v")[1])
        else:
            schema = build_default_schema(table, self.config)
            version = 1
        entry = DatasetEntry(dataset_id=dataset_id, directory=directory,
                             table=table, schema=schema, schema_version=version)
        entry.sessions = SessionStore(self.config.session_timeout_s)
        entry.log = InteractionLog(directory / "log.jsonl")
        bundle_path = directory / "bundle.json"
        if bundle_path.exists():
            entry.bundle = load_bundle(json.loads(bundle_path.read_text(encoding="utf-8")))
            entry.manager = DialogueManager(entry.bundle, entry.table,
                                            self.config, self.fallback_client,
                                            entry.log)
        self._entries[dataset_id] = entry

    def create(self, payload: bytes, name: str | None) -> DatasetEntry:
        dataset_id = uuid.uuid4().hex[:12]
        directory = self.storage_dir / dataset_id
        directory.mkdir(parents=True)
        source_path = directory / "source.csv"
        source_path.write_bytes(payload)
        origin = name or f"upload:{dataset_id}"
        table = load_csv(source_path, origin=origin)
        schema = build_default_schema(table, self.config)
        (directory / "schema_v1.json").write_text(schema_to_json(schema),
                                                  encoding="utf-8")
        entry = DatasetEntry(dataset_id=dataset_id, directory=directory,
                             table=table, schema=schema, schema_version=1)
        entry.sessions = SessionStore(self.config.session_timeout_s)
        entry.log = InteractionLog(directory / "log.jsonl")
        with self._registry_lock:
            self._entries[dataset_id] = entry
        return entry

    def get(self, dataset_id: str) -> DatasetEntry:
        entry = self._entries.get(dataset_id)
        if entry is None:
            raise ApiError(404, "unknown_dataset", f"no dataset {dataset_id!r}")
        return entry


class PatchSchemaRequest(BaseModel):
    commands: list[dict]


class GenerateBotRequest(BaseModel):
    strategy: str = "auto"


class ChatRequest(BaseModel):
    session_id: str
    utterance: str


class RatingRequest(BaseModel):
    turn_index: int
    rating: str


def _answer_to_doc(answer: Answer, session: Session) -> dict:
    doc: dict[str, Any] = {
        "kind": answer.kind,
        "text": answer.text,
        "fallback_warning": answer.fallback_warning,
        "interpretation_notes": list(answer.interpretation_notes),
        "suggested_replies": list(answer.suggested_replies),
        "session_id": session.session_id,
        "turn_index": session.turn_count - 1,
        "rows": None,
    }
    if answer.payload is not None:
        doc["rows"] = {
            "columns": list(answer.payload.columns),
            "rows": [[_json_cell(cell) for cell in row]
                     for row in answer.payload.rows],
            "total_row_count": answer.payload.total_row_count,
            "offset": answer.payload.offset,
        }
    return doc


def _json_cell(cell: Any) -> Any:
    if cell is None or isinstance(cell, (bool, int, float, str)):
        return cell
    return str(cell)


def create_app(storage_dir: str | Path, config: TabotConfig = DEFAULT_CONFIG,
               fallback_client: FallbackClient | None = None,
               frontend_dir: str | Path | None = None) -> FastAPI:
    app = FastAPI(title="tabot", version="0.1.0")
    registry = DatasetRegistry(Path(storage_dir), config, fallback_client)
    app.state.registry = registry

    @app.exception_handler(ApiError)
    async def _api_error(_request: Request, exc: ApiError) -> JSONResponse:
        return exc.response()

    @app.exception_handler(Exception)
    async def _unexpected(_request: Request, exc: Exception) -> JSONResponse:
        return JSONResponse(status_code=500, content={
            "error": {"code": "internal", "message": str(exc)}})

    @app.get("/health")
    def health() -> dict:
        return {"status": "ok", "datasets": len(registry._entries)}

    @app.post("/datasets", status_code=201)
    async def upload_dataset(request: Request) -> dict:
        payload = await request.body()
        if not payload or not payload.strip():
            raise ApiError(400, "empty_payload", "the request body is empty")
        name = request.headers.get("x-dataset-name") or request.query_params.get("name")
        try:
            entry = registry.create(payload, name)
        except MalformedCsv as exc:
            raise ApiError(400, "malformed_csv", str(exc),
                           details={"row": exc.row_index, "reason": exc.reason})
        except IngestError as exc:
            raise ApiError(400, "malformed_csv", str(exc))
        return {"dataset_id": entry.dataset_id,
                "schema_version": entry.schema_version,
                "schema": save_schema(entry.schema)}

    @app.get("/datasets/{dataset_id}/schema")
    def get_schema(dataset_id: str) -> dict:
        entry = registry.get(dataset_id)
        return {"schema_version": entry.schema_version,
                "schema": save_schema(entry.schema)}

    @app.patch("/datasets/{dataset_id}/schema")
    def patch_schema(dataset_id: str, body: PatchSchemaRequest) -> dict:
        entry = registry.get(dataset_id)
        with entry.lock:  # edits queue; all-or-nothing
            schema = entry.schema
            diagnostics = []
            for i, doc in enumerate(body.commands):
                try:
                    schema = apply_enrichment(schema, command_from_dict(doc))
                except (SchemaError, IngestError, KeyError, TypeError) as exc:
                    diagnostics.append({"command_index": i, "command": doc,
                                        "error": str(exc)})
            if diagnostics:
                raise ApiError(422, "invalid_commands",
                               "one or more enrichment commands failed; "
                               "nothing was applied", details=diagnostics)
            entry.schema = schema
            entry.schema_version += 1
            path = entry.directory / f"schema_v{entry.schema_version}.json"
            path.write_text(schema_to_json(schema), encoding="utf-8")
        return {"schema_version": entry.schema_version,
                "schema": save_schema(schema)}

    @app.post("/datasets/{dataset_id}/bot")
    def generate_bot(dataset_id: str, body: GenerateBotRequest) -> dict:
        entry = registry.get(dataset_id)
        if not entry.lock.acquire(blocking=False):
            raise ApiError(409, "generation_in_progress",
                           "another generation or schema edit is running")
        try:
            if entry.generating:
                raise ApiError(409, "generation_in_progress",
                               "generation already in progress")
            entry.generating = True
        finally:
            entry.lock.release()
        try:
            strategy = body.strategy if body.strategy != "auto" else None
            try:
                bundle = generate(entry.schema, _CATALOG, registry.config, strategy)
            except Exception as exc:
                raise ApiError(422, "generation_failed", str(exc))
            (entry.directory / "bundle.json").write_text(bundle_to_json(bundle),
                                                         encoding="utf-8")
            entry.bundle = bundle
            entry.manager = DialogueManager(bundle, entry.table, registry.config,
                                            registry.fallback_client, entry.log)
            return {"strategy": bundle.strategy,
                    "intent_count": len(bundle.intents),
                    "entity_count": len(bundle.entities),
                    "generator_version": bundle.generator_version,
                    "schema_version": entry.schema_version}
        finally:
            entry.generating = False

    @app.post("/datasets/{dataset_id}/chat")
    def chat(dataset_id: str, body: ChatRequest) -> dict:
        entry = registry.get(dataset_id)
        if entry.manager is None:
            raise ApiError(409, "no_active_bundle",
                           "generate a bot for this dataset first")
        with entry.session_lock(body.session_id):
            session = entry.sessions.get(body.session_id)
            answer, session = entry.manager.handle_turn(session, body.utterance)
            entry.sessions.put(session)
        return _answer_to_doc(answer, session)

    @app.post("/datasets/{dataset_id}/chat/{session_id}/rating")
    def rate(dataset_id: str, session_id: str, body: RatingRequest) -> dict:
        entry = registry.get(dataset_id)
        if entry.manager is None:
            raise ApiError(409, "no_active_bundle",
                           "generate a bot for this dataset first")
        rating = body.rating.strip().lower()
        if rating in ("up", "+1", "1", "thumbs_up", "good"):
            rating = "up"
        elif rating in ("down", "-1", "thumbs_down", "bad"):
            rating = "down"
        else:
            raise ApiError(422, "invalid_rating", f"unknown rating {body.rating!r}")
        try:
            record = entry.manager.record_rating(session_id, body.turn_index, rating)
        except UnknownTurn as exc:
            raise ApiError(404, "unknown_turn", str(exc))
        return {"session_id": session_id, "turn_index": body.turn_index,
                "rating": record.rating,
                "rating_count": len(record.rating_history)}

    @app.get("/datasets/{dataset_id}/log")
    def get_log(dataset_id: str) -> dict:
        entry = registry.get(dataset_id)
        if entry.log is None:
            return {"records": []}
        return {"records": [
            {"timestamp": r.timestamp, "session_id": r.session_id,
             "turn_index": r.turn_index, "utterance": r.utterance,
             "outcome": r.outcome, "intent": r.intent,
             "confidence": r.confidence, "rating": r.rating}
            for r in entry.log.records
        ]}

    if frontend_dir is not None and Path(frontend_dir).exists():
        app.mount("/", StaticFiles(directory=str(frontend_dir), html=True),
                  name="ui")

    return app
