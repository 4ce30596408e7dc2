"""HTTP facade for the steering UI: project CRUD, expansion, graph ops,
search runs with live progress streaming, and judging.

Concurrency model: one mutation at a time per project, guarded by a
per-project lock and an optimistic revision number. Reads serve the last
committed snapshot, so a running search never exposes partial state; its
results land in one revision bump when the run finishes.
"""

from __future__ import annotations

import json
import os
import threading
import uuid
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Literal

from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import StreamingResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, Field

from . import mcts
from .errors import (
    NotFoundError,
    ParseError,
    StoryEngineError,
    UpstreamError,
    ValidationError,
)
from .evaluation import judge_narrative
from .expansion import ExpansionParams, expand_backward, expand_forward
from .graph import EntityGraph, generate_graph, graph_from_doc
from .llm import HttpProvider, MockProvider, Provider, ProviderConfig
from .project_io import deserialize_project, serialize_project
from .tree import EventTree, ancestor_chain, story_order_texts

ENV_PREFIX = "STORYSEARCH"
DEFAULT_ROOT_TEXT = "The story begins."


@dataclass
class ServiceConfig:
    data_dir: Path
    provider: Provider


def config_from_env() -> ServiceConfig:
    """Build service configuration from STORYSEARCH_* environment variables."""
    data_dir = Path(os.environ.get(f"{ENV_PREFIX}_DATA_DIR", "./storysearch-data"))
    if os.environ.get(f"{ENV_PREFIX}_MOCK", "").lower() in ("1", "true", "yes"):
        provider: Provider = MockProvider(
            seed=int(os.environ.get(f"{ENV_PREFIX}_SEED", "0")),
            delay_seconds=float(os.environ.get(f"{ENV_PREFIX}_MOCK_DELAY", "0")),
        )
    else:
        provider = HttpProvider(
            ProviderConfig(
                base_url=os.environ.get(f"{ENV_PREFIX}_BASE_URL", "https://api.openai.com/v1"),
                api_key_env=os.environ.get(f"{ENV_PREFIX}_API_KEY_ENV", "OPENAI_API_KEY"),
                generator_model=os.environ.get(f"{ENV_PREFIX}_GENERATOR_MODEL", "gpt-4o-mini"),
                judge_model=os.environ.get(f"{ENV_PREFIX}_JUDGE_MODEL", "o1"),
                request_timeout=float(os.environ.get(f"{ENV_PREFIX}_TIMEOUT", "60")),
                max_retries=int(os.environ.get(f"{ENV_PREFIX}_MAX_RETRIES", "2")),
            )
        )
    return ServiceConfig(data_dir=data_dir, provider=provider)


class RunHandle:
    """One search run: buffered progress records plus lifecycle state."""

    def __init__(self, run_id: str):
        self.run_id = run_id
        self.status: str = "running"
        self.records: list[dict] = []
        self.iterations_run = 0
        self.error: str | None = None
        self.cancel = threading.Event()
        self.condition = threading.Condition()

    def push(self, record: dict) -> None:
        with self.condition:
            self.records.append(record)
            if record.get("phase") == "backpropagated":
                self.iterations_run += 1
            self.condition.notify_all()

    def finish(self, status: str, error: str | None = None) -> None:
        with self.condition:
            self.status = status
            self.error = error
            self.records.append(
                {"phase": "done", "status": status, "iterations_run": self.iterations_run}
            )
            self.condition.notify_all()

    def stream(self) -> Iterator[dict]:
        index = 0
        while True:
            with self.condition:
                while index >= len(self.records) and self.status == "running":
                    self.condition.wait(timeout=0.1)
                if index < len(self.records):
                    record = self.records[index]
                    index += 1
                else:
                    return
            yield record
            if record.get("phase") == "done":
                return


@dataclass
class ProjectRecord:
    project_id: str
    tree: EventTree
    graph: EntityGraph
    settings: dict
    revision: int = 0
    snapshot: bytes = b""
    run: RunHandle | None = None
    lock: threading.Lock = field(default_factory=threading.Lock)


class ProjectStore:
    """In-memory project registry backed by one project file per id."""

    def __init__(self, data_dir: Path):
        self.data_dir = data_dir
        self.data_dir.mkdir(parents=True, exist_ok=True)
        self._projects: dict[str, ProjectRecord] = {}
        self._registry_lock = threading.Lock()

    def _path(self, project_id: str) -> Path:
        return self.data_dir / f"{project_id}.json"

    def create(self, tree: EventTree, graph: EntityGraph, settings: dict) -> ProjectRecord:
        project_id = uuid.uuid4().hex[:12]
        record = ProjectRecord(project_id=project_id, tree=tree, graph=graph, settings=settings)
        self._commit(record)
        with self._registry_lock:
            self._projects[project_id] = record
        return record

    def get(self, project_id: str) -> ProjectRecord:
        with self._registry_lock:
            if project_id in self._projects:
                return self._projects[project_id]
        path = self._path(project_id)
        if not path.exists():
            raise NotFoundError(f"unknown project {project_id!r}")
        tree, graph, settings = deserialize_project(path.read_bytes())
        record = ProjectRecord(project_id=project_id, tree=tree, graph=graph, settings=settings)
        record.snapshot = serialize_project(tree, graph, settings)
        with self._registry_lock:
            return self._projects.setdefault(project_id, record)

    def _commit(self, record: ProjectRecord) -> None:
        record.snapshot = serialize_project(record.tree, record.graph, record.settings)
        record.revision += 1
        path = self._path(record.project_id)
        tmp = path.with_suffix(".tmp")
        tmp.write_bytes(record.snapshot)
        tmp.replace(path)

    def mutate(self, record: ProjectRecord, expected_revision: int, apply) -> object:
        """Apply one mutation under the project lock with a revision precondition."""
        with record.lock:
            if record.run is not None and record.run.status == "running":
                raise HTTPException(409, "a search run is active on this project")
            if expected_revision != record.revision:
                raise HTTPException(
                    409, f"stale revision {expected_revision}, current is {record.revision}"
                )
            result = apply(record)
            self._commit(record)
            return result

    def finish_run(self, record: ProjectRecord) -> None:
        with record.lock:
            self._commit(record)


# -- request bodies ---------------------------------------------------------------


class ParamsBody(BaseModel):
    guide_prompt: str | None = None
    likelihood: int = Field(3, ge=1, le=5)
    severity: int = Field(3, ge=1, le=5)
    temperature: float = Field(1.0, ge=0.0, le=2.0)
    use_entity_graph: bool = False

    def to_params(self) -> ExpansionParams:
        return ExpansionParams(
            guide_prompt=self.guide_prompt,
            likelihood=self.likelihood,
            severity=self.severity,
            temperature=self.temperature,
            use_entity_graph=self.use_entity_graph,
        )


class CreateProjectBody(BaseModel):
    root_text: str | None = None
    settings: dict = Field(default_factory=dict)
    project: dict | None = None


class PutProjectBody(BaseModel):
    revision: int
    project: dict


class ExpandBody(BaseModel):
    revision: int
    direction: Literal["forward", "backward"]
    params: ParamsBody = Field(default_factory=ParamsBody)


class GenerateGraphBody(BaseModel):
    revision: int
    instruction: str
    entity_types: list[str]
    relationship_types: list[str]


class PutGraphBody(BaseModel):
    revision: int
    graph: dict


class StartMctsBody(BaseModel):
    revision: int
    scoring_prompt: str
    max_children: int = Field(3, ge=1)
    iterations: int = Field(25, ge=1)
    scoring_depth: int = Field(1, ge=0)
    rollout_depth: int = Field(1, ge=0)
    exploration_c: float | None = Field(None, gt=0.0)
    desired_chain_length: int | None = Field(None, ge=1)
    min_num_chains: int | None = Field(None, ge=1)
    domain_constraints: str | None = None
    root_id: str | None = None
    params: ParamsBody = Field(default_factory=ParamsBody)

    def to_config(self) -> mcts.SearchConfig:
        kwargs = dict(
            scoring_prompt=self.scoring_prompt,
            max_children=self.max_children,
            iterations=self.iterations,
            scoring_depth=self.scoring_depth,
            rollout_depth=self.rollout_depth,
            desired_chain_length=self.desired_chain_length,
            min_num_chains=self.min_num_chains,
            domain_constraints=self.domain_constraints,
            expansion_params=self.params.to_params(),
        )
        if self.exploration_c is not None:
            kwargs["exploration_c"] = self.exploration_c
        return mcts.SearchConfig(**kwargs)


# -- app ---------------------------------------------------------------------------


def _project_payload(record: ProjectRecord, **extra) -> dict:
    payload = {
        "project_id": record.project_id,
        "revision": record.revision,
        "root_id": record.tree.root_id,
        "project": json.loads(record.snapshot.decode("utf-8")),
    }
    payload.update(extra)
    return payload


def create_app(config: ServiceConfig | None = None) -> FastAPI:
    config = config or config_from_env()
    store = ProjectStore(config.data_dir)
    provider = config.provider
    app = FastAPI(title="storysearch", version="0.1.0")
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )
    runs: dict[str, RunHandle] = {}

    def get_record(project_id: str) -> ProjectRecord:
        try:
            return store.get(project_id)
        except NotFoundError as exc:
            raise HTTPException(404, str(exc)) from exc
        except (ParseError, StoryEngineError) as exc:
            raise HTTPException(500, f"project file unreadable: {exc}") from exc

    @app.get("/api/v1/health")
    def health() -> dict:
        return {"status": "ok"}

    @app.post("/api/v1/projects", status_code=201)
    def create_project(body: CreateProjectBody) -> dict:
        try:
            if body.project is not None:
                tree, graph, settings = deserialize_project(
                    json.dumps(body.project).encode("utf-8")
                )
            else:
                tree = EventTree.new(body.root_text or DEFAULT_ROOT_TEXT)
                graph = EntityGraph.empty([], [])
                settings = body.settings
        except StoryEngineError as exc:
            raise HTTPException(422, str(exc)) from exc
        record = store.create(tree, graph, settings)
        return _project_payload(record)

    @app.get("/api/v1/projects/{project_id}")
    def get_project(project_id: str) -> dict:
        return _project_payload(get_record(project_id))

    @app.put("/api/v1/projects/{project_id}")
    def put_project(project_id: str, body: PutProjectBody) -> dict:
        record = get_record(project_id)

        def apply(rec: ProjectRecord):
            try:
                rec.tree, rec.graph, rec.settings = deserialize_project(
                    json.dumps(body.project).encode("utf-8")
                )
            except StoryEngineError as exc:
                raise HTTPException(422, str(exc)) from exc

        store.mutate(record, body.revision, apply)
        return _project_payload(record)

    @app.post("/api/v1/projects/{project_id}/nodes/{node_id}/expand")
    def expand(project_id: str, node_id: str, body: ExpandBody) -> dict:
        record = get_record(project_id)

        def apply(rec: ProjectRecord) -> str:
            try:
                if body.direction == "forward":
                    return expand_forward(
                        rec.tree, node_id, body.params.to_params(), rec.graph, provider
                    )
                return expand_backward(
                    rec.tree, node_id, body.params.to_params(), rec.graph, provider
                )
            except NotFoundError as exc:
                raise HTTPException(404, str(exc)) from exc
            except UpstreamError as exc:
                raise HTTPException(502, str(exc)) from exc

        new_id = store.mutate(record, body.revision, apply)
        return _project_payload(record, created_node_id=new_id)

    @app.post("/api/v1/projects/{project_id}/graph/generate")
    def graph_generate(project_id: str, body: GenerateGraphBody) -> dict:
        record = get_record(project_id)

        def apply(rec: ProjectRecord):
            try:
                rec.graph = generate_graph(
                    body.instruction, body.entity_types, body.relationship_types, provider
                )
            except ValidationError as exc:
                raise HTTPException(422, str(exc)) from exc
            except UpstreamError as exc:
                raise HTTPException(502, str(exc)) from exc

        store.mutate(record, body.revision, apply)
        return _project_payload(record)

    @app.put("/api/v1/projects/{project_id}/graph")
    def put_graph(project_id: str, body: PutGraphBody) -> dict:
        record = get_record(project_id)

        def apply(rec: ProjectRecord):
            try:
                rec.graph = graph_from_doc(body.graph)
            except StoryEngineError as exc:
                raise HTTPException(422, str(exc)) from exc

        store.mutate(record, body.revision, apply)
        return _project_payload(record)

    @app.post("/api/v1/projects/{project_id}/mcts", status_code=202)
    def start_mcts(project_id: str, body: StartMctsBody) -> dict:
        record = get_record(project_id)
        try:
            search_config = body.to_config()
        except StoryEngineError as exc:
            raise HTTPException(422, str(exc)) from exc

        with record.lock:
            if record.run is not None and record.run.status == "running":
                raise HTTPException(409, "a search run is already active")
            if body.revision != record.revision:
                raise HTTPException(
                    409, f"stale revision {body.revision}, current is {record.revision}"
                )
            root_scope = body.root_id or record.tree.root_id
            if root_scope not in record.tree.nodes:
                raise HTTPException(404, f"unknown node {root_scope!r}")
            handle = RunHandle(run_id=uuid.uuid4().hex[:12])
            record.run = handle
            runs[handle.run_id] = handle

        def work() -> None:
            try:
                report = mcts.run_mcts(
                    record.tree,
                    root_scope,
                    search_config,
                    provider,
                    graph=record.graph,
                    observer=handle.push,
                    cancel=handle.cancel.is_set,
                )
                status = "stopped" if report.cancelled else "failed" if report.incomplete else "done"
                store.finish_run(record)
                handle.finish(status)
            except Exception as exc:  # surface anything unexpected through the stream
                handle.finish("failed", error=str(exc))

        threading.Thread(target=work, name=f"mcts-{handle.run_id}", daemon=True).start()
        return {"run_id": handle.run_id, "status": handle.status}

    def get_run(project_id: str, run_id: str) -> RunHandle:
        get_record(project_id)
        handle = runs.get(run_id)
        if handle is None:
            raise HTTPException(404, f"unknown run {run_id!r}")
        return handle

    @app.get("/api/v1/projects/{project_id}/mcts/{run_id}")
    def run_status(project_id: str, run_id: str) -> dict:
        handle = get_run(project_id, run_id)
        return {
            "run_id": handle.run_id,
            "status": handle.status,
            "iterations_run": handle.iterations_run,
            "error": handle.error,
        }

    @app.get("/api/v1/projects/{project_id}/mcts/{run_id}/events")
    def run_events(project_id: str, run_id: str) -> StreamingResponse:
        handle = get_run(project_id, run_id)

        def sse() -> Iterator[str]:
            for record in handle.stream():
                yield f"data: {json.dumps(record, sort_keys=True)}\n\n"

        return StreamingResponse(sse(), media_type="text/event-stream")

    @app.delete("/api/v1/projects/{project_id}/mcts/{run_id}")
    def stop_run(project_id: str, run_id: str) -> dict:
        handle = get_run(project_id, run_id)
        handle.cancel.set()
        return {"run_id": handle.run_id, "status": handle.status, "stopping": True}

    @app.post("/api/v1/projects/{project_id}/chains/{leaf_id}/judge")
    def judge_chain(project_id: str, leaf_id: str) -> dict:
        record = get_record(project_id)
        node = record.tree.nodes.get(leaf_id)
        if node is None or node.ephemeral:  # rollout nodes are never addressable
            raise HTTPException(404, f"unknown node {leaf_id!r}")
        try:
            chain = ancestor_chain(record.tree, leaf_id)
        except NotFoundError as exc:
            raise HTTPException(404, str(exc)) from exc
        prose = "\n\n".join(story_order_texts(record.tree, chain))
        try:
            report = judge_narrative(prose, provider)
        except UpstreamError as exc:
            raise HTTPException(502, str(exc)) from exc
        except StoryEngineError as exc:
            raise HTTPException(422, str(exc)) from exc
        return {
            "leaf_id": leaf_id,
            "narrative": prose,
            "report": report.to_document(),
        }

    ui_dir = os.environ.get(f"{ENV_PREFIX}_UI_DIR")
    if ui_dir and Path(ui_dir).is_dir():
        app.mount("/", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app
