"""HTTP service: synchronous detection, async ZIP batch jobs, vocabulary browsing.

The API mirrors the in-process pipeline exactly: a /detect response is the
same JSON detect() produces, so anything built against the service can be
replayed offline.  Batch jobs live on disk under one directory per job with
a JSON manifest, which makes interrupted jobs visible after a restart
instead of silently vanishing.
"""

from __future__ import annotations

import io
import json
import os
import re
import secrets
import threading
import time
import zipfile
from dataclasses import dataclass, field
from pathlib import Path

from fastapi import BackgroundTasks, FastAPI, File, Request, UploadFile
from fastapi.exceptions import RequestValidationError
from fastapi.responses import HTMLResponse, JSONResponse, Response
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, Field

from .disambiguator import LlmClient, LlmClientConfig
from .pipeline import (
    PipelineConfig,
    PipelineResources,
    PipelineStageError,
    detect,
    detect_batch,
)
from .vocabulary import lookup_issue, stats as vocab_stats

DEFAULT_MAX_TEXT_BYTES = 1 << 20  # 1 MiB
DEFAULT_MAX_UPLOAD_BYTES = 64 << 20

_JOB_ID_RE = re.compile(r"^[A-Za-z0-9_-]{8,}$")


class ApiError(Exception):
    """Transported as JSON: {"code": ..., "message": ...} with the status."""

    def __init__(self, status_code: int, code: str, message: str):
        super().__init__(message)
        self.status_code = status_code
        self.code = code
        self.message = message


class ZipValidationError(ValueError):
    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code


@dataclass
class ServiceConfig:
    max_text_bytes: int = DEFAULT_MAX_TEXT_BYTES
    max_upload_bytes: int = DEFAULT_MAX_UPLOAD_BYTES
    jobs_dir: str | Path = "debias_jobs"
    parallelism: int = 4
    # server-side caps: a request can switch a stage off but never force one
    # on that the operator disabled at startup
    ner_enabled: bool = True
    llm_enabled: bool = True
    ner_backend: str = "heuristic"
    ner_endpoint: str = ""
    llm: LlmClientConfig = field(default_factory=LlmClientConfig)
    context_window: int = 64
    ui_dir: str | Path | None = None

    @classmethod
    def from_env(cls, environ=None, **overrides) -> "ServiceConfig":
        environ = os.environ if environ is None else environ
        values: dict = {}
        if environ.get("DEBIAS_MAX_UPLOAD_BYTES"):
            values["max_upload_bytes"] = int(environ["DEBIAS_MAX_UPLOAD_BYTES"])
        values["llm"] = LlmClientConfig.from_env(environ)
        values.update(overrides)
        return cls(**values)


# --- batch jobs on disk -------------------------------------------------------

LEGAL_TRANSITIONS = {
    "queued": {"running", "failed"},
    "running": {"done", "failed"},
    "done": set(),
    "failed": set(),
}


@dataclass
class BatchJob:
    job_id: str
    state: str
    submitted_at: str
    completed_at: str
    input_manifest: list[dict]
    skipped: list[dict]
    config: dict
    result_path: str = ""
    error: str = ""

    def to_dict(self) -> dict:
        return {
            "job_id": self.job_id,
            "state": self.state,
            "submitted_at": self.submitted_at,
            "completed_at": self.completed_at,
            "input_manifest": list(self.input_manifest),
            "skipped": list(self.skipped),
            "config": dict(self.config),
            "error": self.error,
            # locator is non-empty exactly when the job is done
            "result_url": f"/api/v1/jobs/{self.job_id}/result" if self.state == "done" else "",
        }


def _utc_now() -> str:
    return time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime())


class JobStore:
    """One directory per job holding manifest.json, input.zip, result.zip."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()

    def _dir(self, job_id: str) -> Path:
        return self.root / job_id

    def _persist(self, job: BatchJob) -> None:
        payload = {
            "job_id": job.job_id, "state": job.state,
            "submitted_at": job.submitted_at, "completed_at": job.completed_at,
            "input_manifest": job.input_manifest, "skipped": job.skipped,
            "config": job.config, "result_path": job.result_path, "error": job.error,
        }
        path = self._dir(job.job_id) / "manifest.json"
        tmp = path.with_suffix(".json.tmp")
        tmp.write_text(json.dumps(payload, indent=2), encoding="utf-8")
        tmp.replace(path)

    def create(self, input_manifest: list[dict], skipped: list[dict],
               config: dict, input_bytes: bytes | None = None) -> BatchJob:
        job = BatchJob(
            job_id=secrets.token_urlsafe(16),
            state="queued",
            submitted_at=_utc_now(),
            completed_at="",
            input_manifest=input_manifest,
            skipped=skipped,
            config=config,
        )
        with self._lock:
            self._dir(job.job_id).mkdir(parents=True)
            if input_bytes is not None:
                (self._dir(job.job_id) / "input.zip").write_bytes(input_bytes)
            self._persist(job)
        return job

    def get(self, job_id: str) -> BatchJob | None:
        if not _JOB_ID_RE.match(job_id):
            return None
        path = self._dir(job_id) / "manifest.json"
        if not path.is_file():
            return None
        raw = json.loads(path.read_text(encoding="utf-8"))
        return BatchJob(**raw)

    def transition(self, job: BatchJob, state: str, result_path: str = "",
                   error: str = "") -> BatchJob:
        with self._lock:
            if state not in LEGAL_TRANSITIONS[job.state]:
                raise ValueError(f"illegal transition {job.state} -> {state}")
            job.state = state
            if state in ("done", "failed"):
                job.completed_at = _utc_now()
            if result_path:
                job.result_path = result_path
            if error:
                job.error = error
            self._persist(job)
        return job

    def write_result(self, job: BatchJob, payload: bytes) -> str:
        path = self._dir(job.job_id) / "result.zip"
        path.write_bytes(payload)
        return str(path)

    def recover_interrupted(self) -> list[str]:
        """Mark jobs left queued/running by a previous process as failed."""
        recovered = []
        for manifest in self.root.glob("*/manifest.json"):
            job = self.get(manifest.parent.name)
            if job and job.state in ("queued", "running"):
                self.transition(job, "failed", error="interrupted by service restart")
                recovered.append(job.job_id)
        return recovered


# --- ZIP handling (shared with the CLI batch command) ---------------------------

def extract_zip_documents(
    data: bytes, max_uncompressed: int,
) -> tuple[list[tuple[str, str]], list[dict], list[dict]]:
    """(documents, input manifest, skipped entries) from an uploaded ZIP.

    Directory entries and non-UTF-8 files are skipped and noted, never fatal;
    a ZIP that does not parse at all is.
    """
    try:
        archive = zipfile.ZipFile(io.BytesIO(data))
        infos = archive.infolist()
    except (zipfile.BadZipFile, zipfile.LargeZipFile) as err:
        raise ZipValidationError("malformed_zip", f"cannot read ZIP: {err}") from err
    total = sum(info.file_size for info in infos if not info.is_dir())
    if total > max_uncompressed:
        raise ZipValidationError(
            "upload_too_large",
            f"uncompressed size {total} exceeds limit {max_uncompressed}")
    documents: list[tuple[str, str]] = []
    manifest: list[dict] = []
    skipped: list[dict] = []
    for info in infos:
        if info.is_dir():
            skipped.append({"name": info.filename, "reason": "directory"})
            continue
        raw = archive.read(info)
        try:
            text = raw.decode("utf-8")
        except UnicodeDecodeError:
            skipped.append({"name": info.filename, "reason": "not_utf8"})
            continue
        documents.append((info.filename, text))
        manifest.append({"name": info.filename, "size": info.file_size})
    return documents, manifest, skipped


def build_result_zip(results, stats, skipped: list[dict]) -> bytes:
    """ZIP of annotations.jsonl (one document per line) and report.json."""
    jsonl = "".join(json.dumps(doc.to_dict(), ensure_ascii=False) + "\n" for doc in results)
    report = stats.to_dict()
    report["skipped"] = list(skipped)
    buffer = io.BytesIO()
    with zipfile.ZipFile(buffer, "w", zipfile.ZIP_DEFLATED) as archive:
        archive.writestr("annotations.jsonl", jsonl)
        archive.writestr("report.json", json.dumps(report, ensure_ascii=False, indent=2))
    return buffer.getvalue()


# --- request models --------------------------------------------------------------

class DetectOptions(BaseModel):
    ner: bool = True
    llm: bool = True
    diagnostics: bool = False


class DetectRequest(BaseModel):
    text: str
    language: str
    options: DetectOptions = Field(default_factory=DetectOptions)
    document_id: str = "doc"


# --- app factory -------------------------------------------------------------------

_UI_PLACEHOLDER = """<!doctype html>
<html><head><title>debias</title></head>
<body><p>The web UI has not been built. Build the frontend and point the
service at its output directory.</p></body></html>
"""


def create_app(
    resources: PipelineResources,
    config: ServiceConfig | None = None,
    llm_client: LlmClient | None = None,
    ner_backend=None,
) -> FastAPI:
    """Assemble the service around loaded resources.

    `llm_client` and `ner_backend` are injectable for tests; when omitted,
    an HTTP client is built from config.llm the first time a request needs
    one.
    """
    config = config or ServiceConfig()
    store = JobStore(config.jobs_dir)
    store.recover_interrupted()

    app = FastAPI(title="debias", docs_url=None, redoc_url=None)
    app.state.job_store = store
    app.state.config = config

    shared_llm_client = llm_client
    if shared_llm_client is None and config.llm.endpoint:
        shared_llm_client = LlmClient(config.llm)

    @app.exception_handler(ApiError)
    async def handle_api_error(request: Request, exc: ApiError):
        return JSONResponse(status_code=exc.status_code,
                            content={"code": exc.code, "message": exc.message})

    @app.exception_handler(RequestValidationError)
    async def handle_validation_error(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=422,
                            content={"code": "invalid_body", "message": "malformed request body"})

    def pipeline_config(language: str, ner: bool, llm: bool, diagnostics: bool) -> PipelineConfig:
        if language not in resources.automatons:
            raise ApiError(400, "unsupported_language", f"language {language!r} not supported")
        return PipelineConfig(
            language=language,
            ner_enabled=ner and config.ner_enabled,
            llm_enabled=llm and config.llm_enabled,
            ner_backend=config.ner_backend,
            ner_endpoint=config.ner_endpoint,
            llm=config.llm,
            diagnostic_mode=diagnostics,
            context_window=config.context_window,
        )

    def run_detect(text: str, cfg: PipelineConfig, document_id: str = "doc"):
        try:
            return detect(text, cfg, resources, document_id=document_id,
                          llm_client=shared_llm_client, ner_backend=ner_backend)
        except PipelineStageError as err:
            raise ApiError(502, f"{err.stage}_backend_failure", str(err)) from err

    @app.post("/api/v1/detect")
    def api_detect(request: DetectRequest):
        if len(request.text.encode("utf-8")) > config.max_text_bytes:
            raise ApiError(400, "text_too_large",
                           f"text exceeds {config.max_text_bytes} bytes")
        cfg = pipeline_config(request.language, request.options.ner,
                              request.options.llm, request.options.diagnostics)
        return run_detect(request.text, cfg, document_id=request.document_id).to_dict()

    def process_job(job_id: str, documents: list[tuple[str, str]], cfg: PipelineConfig):
        job = store.get(job_id)
        store.transition(job, "running")
        try:
            results, stats = detect_batch(
                documents, cfg, resources, parallelism=config.parallelism,
                llm_client=shared_llm_client, ner_backend=ner_backend)
            payload = build_result_zip(results, stats, job.skipped)
            path = store.write_result(job, payload)
            store.transition(job, "done", result_path=path)
        except Exception as err:  # job must land in a terminal state
            store.transition(job, "failed", error=str(err))

    @app.post("/api/v1/batch", status_code=202)
    async def api_batch(
        background: BackgroundTasks,
        language: str = "en",
        ner: bool = True,
        llm: bool = True,
        file: UploadFile = File(...),
    ):
        data = await file.read()
        if len(data) > config.max_upload_bytes:
            raise ApiError(400, "upload_too_large",
                           f"upload exceeds {config.max_upload_bytes} bytes")
        try:
            documents, manifest, skipped = extract_zip_documents(data, config.max_upload_bytes)
        except ZipValidationError as err:
            raise ApiError(400, err.code, str(err)) from err
        cfg = pipeline_config(language, ner, llm, diagnostics=False)
        job = store.create(
            manifest, skipped,
            config={"language": cfg.language, "ner": cfg.ner_enabled, "llm": cfg.llm_enabled},
            input_bytes=data)
        background.add_task(process_job, job.job_id, documents, cfg)
        return {"job_id": job.job_id}

    def job_or_404(job_id: str) -> BatchJob:
        job = store.get(job_id)
        if job is None:
            raise ApiError(404, "unknown_job", f"no job {job_id!r}")
        return job

    @app.get("/api/v1/jobs/{job_id}")
    def api_job_status(job_id: str):
        return job_or_404(job_id).to_dict()

    @app.get("/api/v1/jobs/{job_id}/result")
    def api_job_result(job_id: str):
        job = job_or_404(job_id)
        if job.state != "done":
            raise ApiError(409, "result_not_ready", f"job is {job.state}")
        payload = Path(job.result_path).read_bytes()
        return Response(content=payload, media_type="application/zip")

    @app.get("/api/v1/vocabulary")
    def api_vocabulary_metadata():
        report = vocab_stats(resources.graph)
        return {
            "format_version": resources.graph.format_version,
            "total_terms": report.total_terms,
            "total_issues": report.total_issues,
            "per_language": dict(report.per_language),
            "ambiguous_fraction": report.ambiguous_fraction,
            "languages": sorted(l for l, n in report.per_language.items() if n > 0),
        }

    @app.get("/api/v1/vocabulary/terms")
    def api_vocabulary_terms(
        language: str | None = None,
        query: str | None = None,
        page: int = 1,
        page_size: int = 50,
    ):
        if page < 1 or page_size < 1 or page_size > 500:
            raise ApiError(400, "bad_pagination", "page >= 1 and 1 <= page_size <= 500")
        terms = resources.graph.terms
        if language is not None:
            terms = [t for t in terms if t.language == language]
        if query:
            needle = query.casefold()
            terms = [t for t in terms if needle in t.label.casefold()]
        terms = sorted(terms, key=lambda t: (t.label.casefold(), t.id))
        start = (page - 1) * page_size
        items = []
        for term in terms[start:start + page_size]:
            payload = lookup_issue(resources.graph, term.id)
            items.append({
                "id": term.id,
                "label": term.label,
                "language": term.language,
                "ambiguous": term.ambiguous,
                "issue": {
                    "id": payload.issue.id,
                    "description": payload.issue.description,
                    "suggestion_note": payload.suggestion_note,
                    "suggested_terms": list(payload.suggested_terms),
                    "categories": list(payload.categories),
                },
            })
        return {"total": len(terms), "page": page, "page_size": page_size, "items": items}

    @app.get("/healthz")
    def healthz():
        reachable = False
        if shared_llm_client is not None:
            try:
                shared_llm_client.backend.complete("healthcheck", 1, 0.0)
                reachable = True
            except Exception:
                reachable = False
        loaded = bool(resources.graph.terms)
        return {
            "status": "ok" if loaded else "degraded",
            "vocabulary_loaded": loaded,
            "llm_reachable": reachable,
        }

    ui_dir = Path(config.ui_dir) if config.ui_dir else None
    if ui_dir is None:
        bundled = Path(__file__).parent / "resources" / "webui"
        if (bundled / "index.html").is_file():
            ui_dir = bundled
    if ui_dir is not None and (ui_dir / "index.html").is_file():
        app.mount("/ui", StaticFiles(directory=ui_dir, html=True), name="ui")
    else:
        @app.get("/ui/", include_in_schema=False)
        def ui_placeholder():
            return HTMLResponse(_UI_PLACEHOLDER)

    return app
