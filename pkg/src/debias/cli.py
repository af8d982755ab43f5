"""Command line entry points.

Settings resolve in order: explicit flag, then DEBIAS_* environment
variable, then the JSON file given with --config, then built-in defaults.
"""

from __future__ import annotations

import json
import os
import sys
from pathlib import Path

import click

from . import SUPPORTED_LANGUAGES, __version__
from .disambiguator import HttpLlmBackend, LlmClient, LlmClientConfig, MockLlmBackend
from .evalharness import (
    compute_precision,
    load_eval_dataset,
    measure_throughput,
    run_ablation,
)
from .pipeline import PipelineConfig, load_resources
from .service import (
    ServiceConfig,
    ZipValidationError,
    build_result_zip,
    extract_zip_documents,
)

LANG_CHOICE = click.Choice(SUPPORTED_LANGUAGES)


def _load_config_file(path: str | None) -> dict:
    if not path:
        return {}
    try:
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as err:
        raise click.UsageError(f"cannot read config file {path}: {err}")
    if not isinstance(payload, dict):
        raise click.UsageError(f"config file {path} must hold a JSON object")
    return payload


def _first(*candidates):
    for value in candidates:
        if value not in (None, ""):
            return value
    return None


def _resolve_vocab(flag: str | None, file_cfg: dict) -> str:
    vocab = _first(flag, os.environ.get("DEBIAS_VOCAB"), file_cfg.get("vocab"))
    if vocab is None:
        raise click.UsageError(
            "no vocabulary given: pass --vocab, set DEBIAS_VOCAB, "
            "or put a 'vocab' key in the config file")
    return str(vocab)


def _resolve_llm_config(file_cfg: dict, endpoint_flag: str | None = None) -> LlmClientConfig:
    kwargs = {}
    endpoint = _first(endpoint_flag, os.environ.get("DEBIAS_LLM_ENDPOINT"),
                      file_cfg.get("llm_endpoint"))
    model = _first(os.environ.get("DEBIAS_LLM_MODEL"), file_cfg.get("llm_model"))
    if endpoint:
        kwargs["endpoint"] = str(endpoint)
    if model:
        kwargs["model"] = str(model)
    return LlmClientConfig(**kwargs)


def _llm_client_or_fail(llm_cfg: LlmClientConfig, llm_enabled: bool) -> LlmClient | None:
    if not llm_enabled:
        return None
    if not llm_cfg.endpoint:
        raise click.UsageError(
            "the disambiguation stage is enabled but no LLM endpoint is "
            "configured; pass --llm-endpoint, set DEBIAS_LLM_ENDPOINT, or "
            "disable the stage with --no-llm")
    return LlmClient(llm_cfg)


def _write_output(payload: str, output: str) -> None:
    if output == "-":
        click.echo(payload)
    else:
        Path(output).write_text(payload + "\n", encoding="utf-8")


@click.group()
@click.version_option(version=__version__, prog_name="debias")
@click.option("--config", "config_path", type=click.Path(), default=None,
              help="JSON file with default settings (vocab, llm_endpoint, ...).")
@click.pass_context
def main(ctx, config_path):
    """Detect contentious terms in cultural heritage metadata."""
    ctx.obj = _load_config_file(config_path)


@main.command()
@click.option("--port", default=8080, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--vocab", default=None, type=click.Path())
@click.option("--dicts", default=None, type=click.Path(),
              help="Directory with per-language dictionaries and lexicons.")
@click.option("--templates", default=None, type=click.Path(),
              help="Prompt template JSON file or directory.")
@click.option("--no-ner", is_flag=True, help="Disable entity filtering server-wide.")
@click.option("--no-llm", is_flag=True, help="Disable LLM disambiguation server-wide.")
@click.option("--llm-endpoint", default=None)
@click.option("--jobs-dir", default=None, type=click.Path())
@click.option("--ui-dir", default=None, type=click.Path())
@click.pass_obj
def serve(file_cfg, port, host, vocab, dicts, templates, no_ner, no_llm,
          llm_endpoint, jobs_dir, ui_dir):
    """Run the HTTP service."""
    import uvicorn

    from .service import create_app

    vocab = _resolve_vocab(vocab, file_cfg)
    dicts = _first(dicts, file_cfg.get("dicts"))
    templates = _first(templates, file_cfg.get("templates"))
    resources = load_resources(vocab, dicts_dir=dicts, templates_path=templates)
    config = ServiceConfig.from_env(
        llm=_resolve_llm_config(file_cfg, llm_endpoint),
        ner_enabled=not no_ner,
        llm_enabled=not no_llm,
        jobs_dir=_first(jobs_dir, file_cfg.get("jobs_dir"), "debias_jobs"),
        ui_dir=_first(ui_dir, file_cfg.get("ui_dir")),
    )
    app = create_app(resources, config)
    uvicorn.run(app, host=host, port=port)


@main.command()
@click.option("--lang", default="en", type=LANG_CHOICE, show_default=True)
@click.option("--vocab", default=None, type=click.Path())
@click.option("--input", "input_path", required=True,
              help="Text file to annotate, or - for stdin.")
@click.option("--output", default="-", show_default=True,
              help="Where to write the annotation JSON, - for stdout.")
@click.option("--no-ner", is_flag=True)
@click.option("--no-llm", is_flag=True)
@click.option("--diagnostics", is_flag=True,
              help="Include spans removed by the filtering stages.")
@click.option("--llm-endpoint", default=None)
@click.option("--dicts", default=None, type=click.Path())
@click.option("--templates", default=None, type=click.Path())
@click.pass_obj
def detect(file_cfg, lang, vocab, input_path, output, no_ner, no_llm,
           diagnostics, llm_endpoint, dicts, templates):
    """Annotate a single document and print the result as JSON."""
    from .pipeline import detect as run_detect

    vocab = _resolve_vocab(vocab, file_cfg)
    if input_path == "-":
        text = sys.stdin.read()
        document_id = "stdin"
    else:
        text = Path(input_path).read_text(encoding="utf-8")
        document_id = Path(input_path).name
    llm_cfg = _resolve_llm_config(file_cfg, llm_endpoint)
    client = _llm_client_or_fail(llm_cfg, not no_llm)
    resources = load_resources(vocab, dicts_dir=_first(dicts, file_cfg.get("dicts")),
                               templates_path=_first(templates, file_cfg.get("templates")),
                               languages=(lang,))
    config = PipelineConfig(language=lang, ner_enabled=not no_ner,
                            llm_enabled=not no_llm, llm=llm_cfg,
                            diagnostic_mode=diagnostics)
    result = run_detect(text, config, resources, document_id=document_id,
                        llm_client=client)
    _write_output(json.dumps(result.to_dict(), ensure_ascii=False, indent=2), output)


@main.command()
@click.option("--zip", "zip_path", required=True, type=click.Path(exists=True),
              help="ZIP archive of UTF-8 text files.")
@click.option("--lang", default="en", type=LANG_CHOICE, show_default=True)
@click.option("--out", required=True, type=click.Path(),
              help="Where to write the result ZIP.")
@click.option("--vocab", default=None, type=click.Path())
@click.option("--no-ner", is_flag=True)
@click.option("--no-llm", is_flag=True)
@click.option("--llm-endpoint", default=None)
@click.option("--parallelism", default=4, show_default=True)
@click.pass_obj
def batch(file_cfg, zip_path, lang, out, vocab, no_ner, no_llm, llm_endpoint,
          parallelism):
    """Annotate every file in a ZIP and write annotations plus a report."""
    from .pipeline import detect_batch

    vocab = _resolve_vocab(vocab, file_cfg)
    data = Path(zip_path).read_bytes()
    max_upload = int(_first(os.environ.get("DEBIAS_MAX_UPLOAD_BYTES"),
                            file_cfg.get("max_upload_bytes"), 64 << 20))
    try:
        documents, _manifest, skipped = extract_zip_documents(data, max_upload)
    except ZipValidationError as err:
        raise click.ClickException(str(err))
    llm_cfg = _resolve_llm_config(file_cfg, llm_endpoint)
    client = _llm_client_or_fail(llm_cfg, not no_llm)
    resources = load_resources(vocab, dicts_dir=file_cfg.get("dicts"),
                               templates_path=file_cfg.get("templates"),
                               languages=(lang,))
    config = PipelineConfig(language=lang, ner_enabled=not no_ner,
                            llm_enabled=not no_llm, llm=llm_cfg)
    results, stats = detect_batch(documents, config, resources,
                                  parallelism=parallelism, llm_client=client)
    Path(out).write_bytes(build_result_zip(results, stats, skipped))
    click.echo(f"{stats.documents} documents, {stats.annotations} annotations, "
               f"{len(skipped)} skipped -> {out}", err=True)


@main.command(name="eval")
@click.option("--dataset", required=True, type=click.Path(exists=True),
              help="Gold annotations as JSON lines.")
@click.option("--vocab", default=None, type=click.Path())
@click.option("--no-ner", is_flag=True)
@click.option("--no-llm", is_flag=True)
@click.option("--llm-endpoint", default=None)
@click.pass_obj
def eval_command(file_cfg, dataset, vocab, no_ner, no_llm, llm_endpoint):
    """Score detection precision against a gold dataset."""
    vocab = _resolve_vocab(vocab, file_cfg)
    loaded = load_eval_dataset(dataset)
    if loaded.rejects:
        click.echo(f"skipped {len(loaded.rejects)} malformed lines", err=True)
        for reject in loaded.rejects:
            click.echo(f"  line {reject.line_no}: {reject.reason}", err=True)
    llm_cfg = _resolve_llm_config(file_cfg, llm_endpoint)
    client = _llm_client_or_fail(llm_cfg, not no_llm)
    resources = load_resources(vocab, dicts_dir=file_cfg.get("dicts"),
                               templates_path=file_cfg.get("templates"))
    config = PipelineConfig(ner_enabled=not no_ner, llm_enabled=not no_llm,
                            llm=llm_cfg)
    report = compute_precision(loaded, config, resources, llm_client=client)
    click.echo(json.dumps(report.to_dict(), ensure_ascii=False, indent=2))


@main.command()
@click.option("--corpus", required=True, type=click.Path(exists=True),
              help="Directory of .txt files to time.")
@click.option("--runs", default=5, show_default=True)
@click.option("--warmup", default=1, show_default=True)
@click.option("--lang", default="en", type=LANG_CHOICE, show_default=True)
@click.option("--vocab", default=None, type=click.Path())
@click.option("--no-ner", is_flag=True)
@click.option("--no-llm", is_flag=True)
@click.option("--llm-endpoint", default=None)
@click.pass_obj
def bench(file_cfg, corpus, runs, warmup, lang, vocab, no_ner, no_llm,
          llm_endpoint):
    """Measure sequential throughput over a corpus directory."""
    vocab = _resolve_vocab(vocab, file_cfg)
    llm_cfg = _resolve_llm_config(file_cfg, llm_endpoint)
    client = _llm_client_or_fail(llm_cfg, not no_llm)
    resources = load_resources(vocab, dicts_dir=file_cfg.get("dicts"),
                               templates_path=file_cfg.get("templates"),
                               languages=(lang,))
    config = PipelineConfig(language=lang, ner_enabled=not no_ner,
                            llm_enabled=not no_llm, llm=llm_cfg)
    report = measure_throughput(corpus, config, resources, runs=runs,
                                warmup=warmup, llm_client=client)
    click.echo(json.dumps(report.to_dict(), ensure_ascii=False, indent=2))


@main.command()
@click.option("--dataset", required=True, type=click.Path(exists=True))
@click.option("--corpus", required=True, type=click.Path(exists=True))
@click.option("--vocab", default=None, type=click.Path())
@click.option("--runs", default=5, show_default=True)
@click.option("--warmup", default=1, show_default=True)
@click.option("--llm-endpoint", default=None)
@click.option("--mock-llm", is_flag=True,
              help="Use a canned always-negative LLM instead of a live endpoint.")
@click.pass_obj
def ablation(file_cfg, dataset, corpus, vocab, runs, warmup, llm_endpoint,
             mock_llm):
    """Run the 2x2 stage-toggle grid: precision and throughput per row."""
    vocab = _resolve_vocab(vocab, file_cfg)
    loaded = load_eval_dataset(dataset)
    if loaded.rejects:
        click.echo(f"skipped {len(loaded.rejects)} malformed lines", err=True)
    llm_cfg = _resolve_llm_config(file_cfg, llm_endpoint)
    if mock_llm:
        backend = MockLlmBackend(default="no")
    elif llm_cfg.endpoint:
        backend = HttpLlmBackend(llm_cfg.endpoint, timeout_ms=llm_cfg.timeout_ms)
    else:
        raise click.UsageError(
            "the ablation needs an LLM for its enabled rows; pass "
            "--llm-endpoint, set DEBIAS_LLM_ENDPOINT, or use --mock-llm")
    resources = load_resources(vocab, dicts_dir=file_cfg.get("dicts"),
                               templates_path=file_cfg.get("templates"))
    config = PipelineConfig(llm=llm_cfg)
    table = run_ablation(loaded, corpus, resources, backend, config=config,
                         runs=runs, warmup=warmup)
    click.echo(table.render_text(), err=True)
    click.echo(json.dumps(table.to_dict(), ensure_ascii=False, indent=2))


if __name__ == "__main__":
    main()
