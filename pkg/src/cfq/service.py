"""HTTP service exposing the store, reports, documents, and background jobs.

All data endpoints live under /api and speak JSON; errors come back as
{"error": <ExceptionName>, "detail": <message>} with a matching status
code (404 for unknown ids, 409 for conflicts, 400 for bad input). When a
bearer token is configured, every /api route requires it.

Long-running work (generation, label suggestions) runs through a job
queue with one worker thread, so writes to the store never race: POST
/api/jobs returns a job id immediately and GET /api/jobs/{id} reports
queued/running/done/failed with the result or error attached.

The root path serves a review UI from a static directory when one is
available, and a minimal built-in page otherwise.
"""

from __future__ import annotations

import itertools
import queue
import threading
from contextlib import asynccontextmanager
from pathlib import Path
from typing import Optional

from fastapi import APIRouter, FastAPI, Request, Response
from fastapi.responses import HTMLResponse, JSONResponse, PlainTextResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from . import analytics, corpus, pipeline, taxonomy, textbook
from .bank import DatasetFormatError, SchemaMismatch, Store
from .corpus import DuplicateId, UnknownChallenge
from .errors import CfqError
from .gateway import Gateway
from .promptgen import PromptCategory
from .qparser import AnchorStatus
from .taxonomy import (
    Decision,
    DuplicateTheme,
    LabelClass,
    ReservedId,
    UnknownQuestion,
    UnknownTheme,
)


class BadParameter(CfqError):
    pass


class Unauthorized(CfqError):
    def __init__(self):
        super().__init__("missing or invalid bearer token")


class NoProvider(CfqError):
    def __init__(self):
        super().__init__("no model provider is configured for this service")


class UnknownJob(CfqError):
    def __init__(self, job_id):
        super().__init__(f"unknown job: {job_id}")
        self.job_id = job_id


_ERROR_STATUS = (
    (Unauthorized, 401),
    (UnknownQuestion, 404),
    (UnknownChallenge, 404),
    (UnknownTheme, 404),
    (UnknownJob, 404),
    (DuplicateTheme, 409),
    (ReservedId, 409),
    (DuplicateId, 409),
    (SchemaMismatch, 400),
    (DatasetFormatError, 400),
    (NoProvider, 503),
)


def _status_for(exc: CfqError) -> int:
    for cls, status in _ERROR_STATUS:
        if isinstance(exc, cls):
            return status
    return 400


def _parse_enum(enum_cls, raw, name: str):
    try:
        return enum_cls(raw)
    except ValueError:
        valid = ", ".join(member.value for member in enum_cls)
        raise BadParameter(f"{name} must be one of: {valid}") from None


class JobManager:
    """One worker thread draining a queue of store-mutating jobs."""

    def __init__(self, store: Store, gateway: Optional[Gateway]):
        self.store = store
        self.gateway = gateway
        self._jobs: dict[str, dict] = {}
        self._queue: queue.Queue = queue.Queue()
        self._ids = itertools.count(1)
        self._lock = threading.Lock()
        self._thread: Optional[threading.Thread] = None
        self._done = threading.Condition(self._lock)

    def _ensure_worker(self) -> None:
        if self._thread is None or not self._thread.is_alive():
            self._thread = threading.Thread(target=self._run, name="cfq-jobs", daemon=True)
            self._thread.start()

    def submit(self, kind: str, params: dict) -> dict:
        if self.gateway is None:
            raise NoProvider()
        if kind not in ("generate", "suggest-labels"):
            raise BadParameter("job kind must be generate or suggest-labels")
        with self._lock:
            job = {
                "id": f"job-{next(self._ids)}",
                "kind": kind,
                "status": "queued",
                "params": params,
                "result": None,
                "error": None,
            }
            self._jobs[job["id"]] = job
        self._queue.put(job["id"])
        self._ensure_worker()
        return self._public(job)

    def get(self, job_id: str) -> dict:
        with self._lock:
            job = self._jobs.get(job_id)
            if job is None:
                raise UnknownJob(job_id)
            return self._public(job)

    def wait(self, job_id: str, timeout: float = 30.0) -> dict:
        with self._done:
            self._done.wait_for(
                lambda: self._jobs.get(job_id, {}).get("status") in ("done", "failed"),
                timeout=timeout,
            )
        return self.get(job_id)

    def stop(self) -> None:
        if self._thread is not None and self._thread.is_alive():
            self._queue.put(None)
            self._thread.join(timeout=5)

    @staticmethod
    def _public(job: dict) -> dict:
        return {key: value for key, value in job.items() if key != "params"}

    def _run(self) -> None:
        while True:
            job_id = self._queue.get()
            if job_id is None:
                return
            with self._lock:
                job = self._jobs[job_id]
                job["status"] = "running"
                params = job["params"]
            try:
                result = self._execute(job["kind"], params)
                with self._done:
                    job["status"] = "done"
                    job["result"] = result
                    self._done.notify_all()
            except Exception as exc:
                with self._done:
                    job["status"] = "failed"
                    job["error"] = f"{type(exc).__name__}: {exc}"
                    self._done.notify_all()

    def _execute(self, kind: str, params: dict) -> dict:
        challenges = params.get("challenges")
        if kind == "generate":
            categories = params.get("categories")
            report = pipeline.generate_questions(
                self.store,
                self.gateway,
                challenges,
                [PromptCategory(c) for c in categories] if categories else None,
            )
            return {
                "inserted": report.inserted,
                "duplicates": report.duplicates,
                "failures": report.failures,
                "summary": report.summary_lines(),
            }
        created = pipeline.suggest_labels(
            self.store, self.gateway, challenges, refresh=bool(params.get("refresh"))
        )
        return {"suggested": len(created)}


class ChallengeIn(BaseModel):
    title: str
    goal: str
    category: str
    source: str


class AnnotationIn(BaseModel):
    question_id: str
    annotator: str
    label: str
    theme: Optional[str] = None
    decision: str = Decision.PENDING.value


class ThemeIn(BaseModel):
    id: str
    display_name: str
    description: str


class JobIn(BaseModel):
    kind: str
    challenges: Optional[list[str]] = None
    categories: Optional[list[str]] = None
    refresh: bool = False


def _challenge_payload(challenge: corpus.CodeChallenge) -> dict:
    return {
        "id": challenge.id,
        "title": challenge.title,
        "category": challenge.category.value,
        "goal": challenge.goal,
        "provenance": challenge.provenance.value,
        "source": [{"number": line.number, "text": line.text} for line in challenge.source],
    }


def _annotation_payload(annotation: taxonomy.Annotation) -> dict:
    return {
        "id": annotation.id,
        "question_id": annotation.question_id,
        "annotator": annotation.annotator,
        "label": annotation.label.value,
        "theme": annotation.theme,
        "decision": annotation.decision.value,
        "timestamp": annotation.timestamp.isoformat(),
    }


def _question_payload(store: Store, question) -> dict:
    return {
        "id": question.id,
        "challenge_id": question.challenge_id,
        "category": question.category.value,
        "line_number": question.row.line_number,
        "line_code": question.row.line_code,
        "question": question.row.question,
        "anchor_status": question.anchor.status.value,
        "anchored_line": question.anchor.line,
        "response_fingerprint": question.response_fingerprint,
        "created_at": question.created_at.isoformat(),
        "annotations": [
            _annotation_payload(a) for a in store.annotations(question_id=question.id)
        ],
    }


_FALLBACK_PAGE = """<!DOCTYPE html>
<html lang="en">
<head><meta charset="utf-8"><title>cfq service</title></head>
<body>
<h1>cfq service</h1>
<p>No review UI build was found. The JSON API is available under <code>/api</code>:
challenges, questions, annotations, themes, jobs, reports, enhanced documents,
export, and import.</p>
</body>
</html>
"""


def build_app(
    store: Store,
    gateway: Optional[Gateway] = None,
    *,
    token: Optional[str] = None,
    ui_dir: Optional[Path | str] = None,
) -> FastAPI:
    jobs = JobManager(store, gateway)

    @asynccontextmanager
    async def lifespan(app: FastAPI):
        yield
        jobs.stop()

    app = FastAPI(
        title="cfq", docs_url=None, redoc_url=None, openapi_url=None, lifespan=lifespan
    )
    app.state.store = store
    app.state.jobs = jobs

    @app.exception_handler(CfqError)
    async def _handle_cfq_error(request: Request, exc: CfqError):
        return JSONResponse(
            status_code=_status_for(exc),
            content={"error": type(exc).__name__, "detail": str(exc)},
        )

    api = APIRouter(prefix="/api")

    def check_token(request: Request) -> None:
        if token is None:
            return
        header = request.headers.get("authorization", "")
        if header != f"Bearer {token}":
            raise Unauthorized()

    @api.get("/challenges")
    def list_challenges(request: Request):
        check_token(request)
        return [_challenge_payload(c) for c in store.challenges()]

    @api.get("/challenges/{challenge_id}")
    def get_challenge(challenge_id: str, request: Request):
        check_token(request)
        return _challenge_payload(store.get_challenge(challenge_id))

    @api.post("/challenges", status_code=201)
    def create_challenge(payload: ChallengeIn, request: Request):
        check_token(request)
        category = _parse_enum(corpus.FunctionalCategory, payload.category, "category")
        try:
            challenge = corpus.CodeChallenge(
                id=corpus.slugify(payload.title),
                title=payload.title,
                category=category,
                goal=payload.goal,
                source=tuple(corpus.segment_source(payload.source)),
                provenance=corpus.Provenance.USER_IMPORTED,
            )
        except ValueError as exc:
            raise BadParameter(str(exc)) from None
        store.add_challenge(challenge)
        return _challenge_payload(challenge)

    @api.get("/questions")
    def list_questions(
        request: Request,
        challenge: Optional[str] = None,
        category: Optional[str] = None,
        anchor_status: Optional[str] = None,
    ):
        check_token(request)
        parsed_category = (
            _parse_enum(PromptCategory, category, "category") if category else None
        )
        parsed_status = (
            _parse_enum(AnchorStatus, anchor_status, "anchor_status") if anchor_status else None
        )
        if challenge is not None:
            store.get_challenge(challenge)
        questions = store.questions(
            challenge_id=challenge, category=parsed_category, anchor_status=parsed_status
        )
        questions.sort(key=lambda q: q.id)
        return [_question_payload(store, q) for q in questions]

    @api.get("/questions/{question_id}")
    def get_question(question_id: str, request: Request):
        check_token(request)
        return _question_payload(store, store.get_question(question_id))

    @api.post("/annotations")
    def post_annotation(payload: AnnotationIn, request: Request):
        check_token(request)
        label = _parse_enum(LabelClass, payload.label, "label")
        decision = _parse_enum(Decision, payload.decision, "decision")
        if not payload.annotator.strip():
            raise BadParameter("annotator must be non-empty")
        annotation = taxonomy.annotate(
            store, payload.question_id, payload.annotator, label,
            theme=payload.theme, decision=decision,
        )
        return _annotation_payload(annotation)

    @api.get("/themes")
    def list_themes(request: Request):
        check_token(request)
        return [
            {
                "id": theme.id,
                "display_name": theme.display_name,
                "description": theme.description,
                "builtin": theme.builtin,
            }
            for theme in store.themes()
        ]

    @api.post("/themes", status_code=201)
    def create_theme(payload: ThemeIn, request: Request):
        check_token(request)
        try:
            theme = taxonomy.add_theme(store, payload.id, payload.display_name, payload.description)
        except ValueError as exc:
            raise BadParameter(str(exc)) from None
        return {
            "id": theme.id,
            "display_name": theme.display_name,
            "description": theme.description,
            "builtin": theme.builtin,
        }

    @api.get("/labels")
    def list_labels(request: Request):
        check_token(request)
        return [
            {
                "id": label.value,
                "display": label.display,
                "definition": label.definition,
            }
            for label in taxonomy.LABEL_ORDER
        ]

    @api.post("/jobs", status_code=202)
    def submit_job(payload: JobIn, request: Request):
        check_token(request)
        params = {
            "challenges": payload.challenges,
            "categories": payload.categories,
            "refresh": payload.refresh,
        }
        return jobs.submit(payload.kind, params)

    @api.get("/jobs/{job_id}")
    def get_job(job_id: str, request: Request):
        check_token(request)
        return jobs.get(job_id)

    @api.get("/reports/agreement")
    def report_agreement(
        request: Request,
        annotator_a: str,
        annotator_b: str,
        challenge: Optional[str] = None,
    ):
        check_token(request)
        report = analytics.agreement_report(store, annotator_a, annotator_b, challenge)
        return {
            "annotator_a": report.annotator_a,
            "annotator_b": report.annotator_b,
            "classes": [cls.value for cls in report.matrix.classes],
            "matrix": [list(row) for row in report.matrix.counts],
            "pairs": report.pairs,
            "percent_agreement": report.percent_agreement,
            "kappa": report.kappa,
        }

    @api.get("/reports/proportions")
    def report_proportions(
        request: Request, dimension: str, challenge: Optional[str] = None
    ):
        check_token(request)
        if dimension == "labels":
            proportions = analytics.label_proportions(store, challenge_id=challenge)
        elif dimension == "themes":
            proportions = analytics.theme_proportions(store, challenge_id=challenge)
        elif dimension == "categories":
            proportions = analytics.category_proportions(store, challenge_id=challenge)
        else:
            raise BadParameter("dimension must be labels, themes, or categories")
        return {
            "dimension": dimension,
            "entries": [
                {
                    "key": getattr(key, "value", key),
                    "fraction": str(value),
                    "decimal": float(value),
                }
                for key, value in proportions.items()
            ],
        }

    @api.get("/reports/crosstab")
    def report_crosstab(request: Request, challenge: Optional[str] = None):
        check_token(request)
        report = analytics.crosstab(store, challenge_id=challenge)
        return {
            "categories": [c.value for c in report.categories],
            "labels": [l.value for l in report.labels],
            "counts": [list(row) for row in report.counts],
            "total": report.total,
        }

    @api.get("/enhanced/{challenge_id}")
    def enhanced(challenge_id: str, request: Request, format: str = "json"):
        check_token(request)
        document = textbook.enhance(store, challenge_id)
        if format == "json":
            return Response(
                content=textbook.render_json(document), media_type="application/json"
            )
        if format == "html":
            return HTMLResponse(textbook.render_html(document))
        raise BadParameter("format must be json or html")

    @api.get("/export")
    def export_dataset(request: Request, format: str = "csv"):
        check_token(request)
        if format not in ("csv", "jsonl"):
            raise BadParameter("format must be csv or jsonl")
        media = "text/csv" if format == "csv" else "application/x-ndjson"
        return PlainTextResponse(store.export_dataset(format=format), media_type=media)

    @api.post("/import")
    async def import_dataset(request: Request, format: str = "csv"):
        check_token(request)
        if format not in ("csv", "jsonl"):
            raise BadParameter("format must be csv or jsonl")
        body = await request.body()
        report = store.import_dataset(body.decode("utf-8"), format=format)
        return {"inserted": len(report.inserted), "duplicates": len(report.duplicates)}

    app.include_router(api)

    ui_path = Path(ui_dir) if ui_dir is not None else None
    if ui_path is not None and ui_path.is_dir():
        app.mount("/", StaticFiles(directory=ui_path, html=True), name="ui")
    else:

        @app.get("/", response_class=HTMLResponse)
        def fallback_index():
            return _FALLBACK_PAGE

    return app
