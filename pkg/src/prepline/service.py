"""HTTP service: sessions, recommendations, prompt application, version
tree, diff, rollback, and the operation catalog, under /v1.

Sessions live on disk (one directory per 128-bit token) and survive
restarts.  Requests within one session serialize on a per-session lock;
distinct sessions run concurrently.  Errors never mutate state: every
mutation happens after generation/execution succeeded.
"""

from __future__ import annotations

import json
import os
import secrets
import shutil
import threading

from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from . import cache as cachemod
from . import ops, qnet, recommender
from .config import DEFAULTS
from .dataset import Dataset, from_csv_text, load_csv, write_csv
from .errors import (
    FormatError,
    IoError,
    NonBinaryLabel,
    PreplineError,
    RemoteError,
    RepairExhausted,
    UnknownParent,
    UnknownPrompt,
    UnknownVersion,
)
from .executor import Executor, baseline_program, insertion_dataset
from .generation import Prompt, generate_checked, make_backend
from .script import parse
from .versions import VersionStore, diff_lines


def _binary_label_or_raise(dataset, label):
    if not dataset.has_column(label):
        raise FormatError(f"label column {label!r} not present")
    values = [v for v in dataset.column(label).values if v is not None]
    if len(set(values)) != 2:
        raise NonBinaryLabel(
            f"label column {label!r} has {len(set(values))} distinct values, need exactly 2"
        )


def _node_depths(g):
    depths = {}
    for node in g.nodes:
        parents = [p for p, c in g.edges if c == node.id]
        depths[node.id] = 1 + max((depths[p] for p in parents), default=0)
    return depths


class Session:
    def __init__(self, root, token):
        self.token = token
        self.dir = os.path.join(root, token)
        self.lock = threading.Lock()
        with open(os.path.join(self.dir, "session.json"), "r", encoding="utf-8") as fh:
            meta = json.load(fh)
        self.csv_name = meta["csv_name"]
        self.label = meta["label"]
        self.store = VersionStore(os.path.join(self.dir, "versions.json"))
        self.cache = cachemod.CacheStore(os.path.join(self.dir, "cache"))
        self.executor = Executor(self.dir)
        self._timings_path = os.path.join(self.dir, "timings.json")
        self._reuse_path = os.path.join(self.dir, "reuse.json")
        self.timings = self._load_counts(self._timings_path)
        self.reuse = self._load_counts(self._reuse_path)

    @staticmethod
    def _load_counts(path):
        if os.path.exists(path):
            with open(path, "r", encoding="utf-8") as fh:
                return {int(k, 16): v for k, v in json.load(fh).items()}
        return {}

    @staticmethod
    def _save_counts(path, counts):
        with open(path + ".tmp", "w", encoding="utf-8") as fh:
            json.dump({f"{k:016x}": v for k, v in counts.items()}, fh, sort_keys=True)
        os.replace(path + ".tmp", path)

    def persist_counters(self):
        self._save_counts(self._timings_path, self.timings)
        self._save_counts(self._reuse_path, self.reuse)


class Engine:
    """Session manager shared by the HTTP app and the CLI."""

    def __init__(self, config=None):
        self.config = dict(DEFAULTS)
        if config:
            self.config.update(config)
        self.root = str(self.config["session_root"])
        os.makedirs(self.root, exist_ok=True)
        self.budget = int(self.config["cache_budget_bytes"])
        self.cost_model = cachemod.CostModel()
        self.backend = make_backend(self.config)
        self._sessions = {}
        self._registry_lock = threading.Lock()
        self.networks = self._load_networks()

    def _load_networks(self):
        models_dir = str(self.config.get("models_dir", "models"))
        logical_path = os.path.join(models_dir, "logical.qnet")
        physical_path = os.path.join(models_dir, "physical.qnet")
        if os.path.exists(logical_path) and os.path.exists(physical_path):
            return qnet.load_network(logical_path), qnet.load_network(physical_path)
        return recommender.default_networks(seed=0)

    # -- session lifecycle

    def create_session(self, label, csv_text=None, path=None, name=None):
        if csv_text is None and path is None:
            raise FormatError("need csv_text or path")
        if csv_text is not None:
            dataset = from_csv_text(csv_text, name=name or "data")
        else:
            dataset = load_csv(path)
            name = name or dataset.name
        _binary_label_or_raise(dataset, label)
        token = secrets.token_hex(16)
        session_dir = os.path.join(self.root, token)
        os.makedirs(session_dir)
        csv_name = f"{os.path.basename(name or 'data')}.csv"
        write_csv(dataset, os.path.join(session_dir, csv_name))
        with open(os.path.join(session_dir, "session.json"), "w", encoding="utf-8") as fh:
            json.dump({"id": token, "csv_name": csv_name, "label": label}, fh, indent=2)
        session = Session(self.root, token)
        with self._registry_lock:
            self._sessions[token] = session
        src = baseline_program(csv_name, label)
        graph = parse(src)
        result = self._execute(session, graph, version_hint=1)
        if not result.ok:
            shutil.rmtree(session_dir, ignore_errors=True)
            with self._registry_lock:
                self._sessions.pop(token, None)
            raise FormatError(f"baseline execution failed: {result.error_message}")
        session.store.commit(None, src.text, prompt=None, metric=result.metric)
        self._note_reuse(session, graph)
        return session

    def session(self, token) -> Session:
        with self._registry_lock:
            if token in self._sessions:
                return self._sessions[token]
            if os.path.isdir(os.path.join(self.root, token)):
                session = Session(self.root, token)
                self._sessions[token] = session
                return session
        raise UnknownVersion(f"no session {token}")

    # -- execution with cache planning

    def _execute(self, session: Session, graph, version_hint=None):
        costs = cachemod.build_costs(graph, session.cache, session.timings)
        targets = cachemod.default_targets(graph)
        exec_plan = cachemod.plan(graph, costs, targets)
        result = session.executor.run(graph, plan=exec_plan, store=session.cache)
        if not result.ok:
            return result
        depths = _node_depths(graph)
        metric = result.metric if result.metric is not None else 0.0
        version_id = version_hint or (session.store.current_id or 0)
        for report in result.node_reports:
            if report.action != "compute":
                continue
            session.timings[report.trace_hash] = report.micros
            value = result.env.get(graph.node_by_id(report.node_id).output)
            if not isinstance(value, Dataset):
                continue
            if session.cache.has(report.trace_hash):
                continue
            features = cachemod.cache_features(
                report.byte_size,
                report.micros,
                depths[report.node_id],
                session.reuse.get(report.trace_hash, 0),
                metric,
            )
            score = self.cost_model.score(features)
            if cachemod.decide_materialize(features, self.cost_model):
                session.cache.admit(
                    value, report.trace_hash, report.micros, version_id,
                    score, self.budget,
                )
        session.persist_counters()
        return result

    def _note_reuse(self, session: Session, graph):
        for node_hash in graph.trace.values():
            session.reuse[node_hash] = session.reuse.get(node_hash, 0) + 1
        session.persist_counters()

    # -- operations

    def recommend(self, token):
        session = self.session(token)
        with session.lock:
            current = session.store.current
            graph = parse(current.program)
            result = self._execute(session, graph)
            if not result.ok:
                raise FormatError(f"current version fails to execute: {result.error_message}")
            dataset = insertion_dataset(graph, result.env)
            recs = recommender.recommend(dataset, graph, self.networks)
            return recs

    def apply_prompt(self, token, prompt_text, parent_version=None):
        session = self.session(token)
        with session.lock:
            parent = (
                session.store.get(parent_version)
                if parent_version is not None
                else session.store.current
            )
            runner = _PlannedRunner(self, session)
            outcome = generate_checked(
                parent.program,
                Prompt(text=prompt_text, kind="fine"),
                self.backend,
                runner,
            )
            version = session.store.commit(
                parent.id,
                outcome.final_program.text,
                prompt=prompt_text,
                metric=outcome.final_result.metric,
            )
            self._note_reuse(session, parse(outcome.final_program.text))
            return version, outcome

    def versions(self, token):
        session = self.session(token)
        with session.lock:
            return session.store.tree(), session.store.current_id

    def diff(self, token, a, b):
        session = self.session(token)
        with session.lock:
            va, vb = session.store.get(a), session.store.get(b)
            return diff_lines(va.program, vb.program)

    def rollback(self, token, version_id):
        session = self.session(token)
        with session.lock:
            return session.store.rollback(version_id)


class _PlannedRunner:
    """Executor facade handing graphs to Engine._execute for caching."""

    def __init__(self, engine: Engine, session: Session):
        self.engine = engine
        self.session = session

    def run(self, graph):
        return self.engine._execute(self.session, graph)


# ---------------------------------------------------------------------------
# HTTP layer


def _version_json(version):
    return {
        "id": version.id,
        "parent_id": version.parent_id,
        "program": version.program,
        "prompt": version.prompt,
        "metric": version.metric,
        "created_at": version.created_at,
    }


def _recommendation_json(rec):
    return {
        "kind": rec.kind,
        "name": rec.name,
        "score": rec.score,
        "prompt": rec.prompt.text,
        "prompt_kind": rec.prompt.kind,
    }


def create_app(config=None) -> FastAPI:
    engine = Engine(config)
    app = FastAPI(title="prepline", version="0.1.0")
    app.state.engine = engine
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    @app.exception_handler(PreplineError)
    async def prepline_error_handler(request: Request, exc: PreplineError):
        status = 400
        if isinstance(exc, (UnknownVersion, UnknownParent)):
            status = 404
        elif isinstance(exc, NonBinaryLabel):
            status = 422
        elif isinstance(exc, UnknownPrompt):
            status = 422
        elif isinstance(exc, RepairExhausted):
            return JSONResponse(
                status_code=422,
                content={
                    "error": exc.render(),
                    "kind": exc.kind,
                    "attempts": [
                        {
                            "prompt": attempt.prompt.text,
                            "program": attempt.program.text,
                            "status": attempt.result.status,
                            "error_message": attempt.result.error_message,
                        }
                        for attempt in exc.attempts
                    ],
                },
            )
        elif isinstance(exc, RemoteError):
            status = 502
        elif isinstance(exc, (FormatError, IoError)):
            status = 400
        return JSONResponse(
            status_code=status, content={"error": exc.render(), "kind": exc.kind}
        )

    @app.get("/v1/catalog")
    @app.get("/catalog")
    async def get_catalog():
        families = []
        for family, members in ops.catalog():
            families.append(
                {
                    "id": family.id,
                    "description": family.description,
                    "coarse_prompt": family.coarse_prompt,
                    "operations": [
                        {
                            "name": op.name,
                            "params": dict(op.params),
                            "prompt": ops.prompt_for(op).text,
                        }
                        for op in members
                    ],
                }
            )
        return {"families": families}

    @app.post("/v1/sessions", status_code=201)
    async def create_session(body: dict):
        label = body.get("label")
        if not label:
            raise FormatError("label is required")
        session = engine.create_session(
            label=label,
            csv_text=body.get("csv_text"),
            path=body.get("path"),
            name=body.get("name"),
        )
        root = session.store.current
        return {"session_id": session.token, "version": _version_json(root)}

    @app.post("/v1/sessions/{token}/recommend")
    async def recommend(token: str):
        recs = engine.recommend(token)
        if not recs:
            return JSONResponse(
                status_code=409,
                content={"error": "all operation families already applied", "recommendations": []},
            )
        return {"recommendations": [_recommendation_json(r) for r in recs]}

    @app.post("/v1/sessions/{token}/apply")
    async def apply_prompt(token: str, body: dict):
        prompt = body.get("prompt")
        if not prompt:
            raise FormatError("prompt is required")
        version, outcome = engine.apply_prompt(
            token, prompt, parent_version=body.get("parent_version")
        )
        return {
            "version": _version_json(version),
            "exec": {
                "status": "ok",
                "metric": outcome.final_result.metric,
                "attempts": len(outcome.attempts),
                "repaired": outcome.repaired,
            },
        }

    @app.get("/v1/sessions/{token}/versions")
    async def versions(token: str):
        tree, current = engine.versions(token)
        return {"versions": [_version_json(v) for v in tree], "current": current}

    @app.get("/v1/sessions/{token}/diff")
    async def version_diff(token: str, a: int, b: int):
        script = engine.diff(token, a, b)
        return {
            "changes": [
                {"kind": c.kind, "index": c.index, "text": c.text}
                for c in script.changes
            ]
        }

    @app.post("/v1/sessions/{token}/rollback")
    async def rollback(token: str, body: dict):
        version_id = body.get("version")
        if version_id is None:
            raise FormatError("version is required")
        version = engine.rollback(token, int(version_id))
        return {"current": version.id, "version": _version_json(version)}

    ui_dir = str(engine.config.get("ui_dir", ""))
    if ui_dir and os.path.isdir(ui_dir):
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app
