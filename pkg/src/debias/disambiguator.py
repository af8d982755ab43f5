"""LLM-based disambiguation of matches on ambiguity-flagged terms.

A quarter of the vocabulary is contentious only in certain senses ("race"
the concept vs. "race" the competition).  For those terms, a prompt is built
from a per-(model family, language) template, the issue context, and a text
excerpt around the match, and a local inference server answers with a single
word.  The answer parses to a binary verdict; anything unparseable after one
retry drops the detection, since false positives cost more than misses here.

Backends are pluggable: an HTTP client for a real completion server and a
scriptable mock for hermetic tests and benchmarks.
"""

from __future__ import annotations

import hashlib
import json
import re
import threading
import time
import unicodedata
from dataclasses import dataclass, field
from importlib import resources as importlib_resources
from pathlib import Path

import httpx

from .matcher import RawMatch
from .textproc import LemmatizedDocument
from .vocabulary import VocabularyGraph

CONTENTIOUS = "contentious"
NOT_CONTENTIOUS = "not_contentious"
UNPARSEABLE = "unparseable"

# answer tokens compared against the normalized first word of the reply
AFFIRMATIVE = {"en": ("yes",), "it": ("si",), "de": ("ja",), "nl": ("ja",), "fr": ("oui",)}
NEGATIVE = {"en": ("no",), "it": ("no", "non"), "fr": ("no", "non"), "de": ("nein",), "nl": ("nee",)}

_PLACEHOLDER_RE = re.compile(r"\{([a-z_]+)\}")
_KNOWN_PLACEHOLDERS = ("term", "vocabulary_context", "text")


class TemplateError(ValueError):
    pass


class LlmBackendError(RuntimeError):
    def __init__(self, endpoint: str, cause: str):
        super().__init__(f"LLM backend at {endpoint} failed: {cause}")
        self.endpoint = endpoint
        self.cause = cause


@dataclass(frozen=True)
class PromptTemplate:
    """Raw prompt string with {term}, {vocabulary_context}, {text} slots.

    Special-token framing (Llama header tokens, Mixtral [INST]) lives in the
    template text itself, so supporting a new model family is data, not code.
    {term} may repeat; the context and text slots appear exactly once.
    """

    language: str
    model_family: str
    template: str

    def __post_init__(self):
        names = _PLACEHOLDER_RE.findall(self.template)
        unknown = sorted(set(names) - set(_KNOWN_PLACEHOLDERS))
        if unknown:
            raise TemplateError(
                f"template {self.model_family}/{self.language}: unknown placeholders {unknown}")
        if names.count("term") < 1:
            raise TemplateError(
                f"template {self.model_family}/{self.language}: missing {{term}} placeholder")
        for required in ("vocabulary_context", "text"):
            if names.count(required) != 1:
                raise TemplateError(
                    f"template {self.model_family}/{self.language}: needs exactly one "
                    f"{{{required}}} placeholder")


def load_templates(path: str | Path | None = None) -> dict[tuple[str, str], PromptTemplate]:
    """Load prompt templates keyed by (model_family, language).

    Accepts a JSON file of {model_family: {language: template}} or a
    directory of such files; defaults to the bundled templates.
    """
    if path is None:
        path = Path(str(importlib_resources.files("debias") / "resources" / "templates"))
    path = Path(path)
    files = sorted(path.glob("*.json")) if path.is_dir() else [path]
    if not files:
        raise TemplateError(f"no template files found under {path}")
    templates: dict[tuple[str, str], PromptTemplate] = {}
    for file in files:
        payload = json.loads(file.read_text(encoding="utf-8"))
        for model_family, by_language in payload.items():
            for language, template in by_language.items():
                templates[(model_family, language)] = PromptTemplate(
                    language=language, model_family=model_family, template=template,
                )
    return templates


def model_family_for(model_name: str) -> str:
    """Map a concrete model identifier onto a template family."""
    lowered = model_name.lower()
    if "mixtral" in lowered or "mistral" in lowered:
        return "mixtral"
    return "llama3"


def build_prompt(
    term_label: str,
    issue_description: str,
    text: str,
    language: str,
    template: PromptTemplate,
    suggestion_note: str = "",
) -> str:
    """Byte-exact single-pass substitution into the template.

    vocabulary_context is the issue description and the suggestion note
    joined by one space.  Single-pass substitution keeps braces inside the
    substituted values inert.
    """
    if template.language != language:
        raise TemplateError(
            f"template is for {template.language!r}, prompt requested for {language!r}")
    context = f"{issue_description} {suggestion_note}" if suggestion_note else issue_description
    values = {"term": term_label, "vocabulary_context": context, "text": text}
    return _PLACEHOLDER_RE.sub(lambda m: values[m.group(1)], template.template)


def _normalize_answer_word(word: str) -> str:
    word = word.strip("\"'.,;:!?()[]…*«»").lower()
    decomposed = unicodedata.normalize("NFKD", word)
    return "".join(ch for ch in decomposed if not unicodedata.combining(ch))


def parse_answer(raw: str, language: str) -> str:
    """Map a model reply onto a verdict value using only its first word."""
    words = raw.strip().split()
    if not words:
        return UNPARSEABLE
    first = _normalize_answer_word(words[0])
    if first in AFFIRMATIVE[language]:
        return CONTENTIOUS
    if first in NEGATIVE[language]:
        return NOT_CONTENTIOUS
    return UNPARSEABLE


@dataclass(frozen=True)
class Verdict:
    value: str  # contentious | not_contentious | unparseable
    raw_answer: str
    latency_ms: float


@dataclass
class LlmClientConfig:
    endpoint: str = ""
    model: str = "llama3"
    max_tokens: int = 8
    temperature: float = 0.0
    timeout_ms: int = 30_000
    retries: int = 1
    max_in_flight: int = 4
    cache_enabled: bool = True

    def __post_init__(self):
        if self.timeout_ms <= 0:
            raise ValueError("timeout_ms must be positive")
        if self.retries < 0:
            raise ValueError("retries must be >= 0")

    @classmethod
    def from_env(cls, environ, **overrides) -> "LlmClientConfig":
        values = {}
        if environ.get("DEBIAS_LLM_ENDPOINT"):
            values["endpoint"] = environ["DEBIAS_LLM_ENDPOINT"]
        if environ.get("DEBIAS_LLM_MODEL"):
            values["model"] = environ["DEBIAS_LLM_MODEL"]
        values.update(overrides)
        return cls(**values)


class MockLlmBackend:
    """Scriptable stand-in for a completion server.

    Rules are ((term_fragment, excerpt_fragment), answer) pairs checked by
    substring against the full prompt; the first matching rule answers, the
    default otherwise.  Counts every call and can inject latency, which the
    throughput benchmarks rely on.
    """

    def __init__(self, default: str = "no", rules=(), latency_ms: float = 0.0):
        self.default = default
        self.rules = list(rules)
        self.latency_ms = latency_ms
        self.calls = 0
        self.prompts: list[str] = []
        self._lock = threading.Lock()

    def complete(self, prompt: str, max_tokens: int, temperature: float) -> str:
        with self._lock:
            self.calls += 1
            self.prompts.append(prompt)
        if self.latency_ms:
            time.sleep(self.latency_ms / 1000)
        for (term_fragment, excerpt_fragment), answer in self.rules:
            if term_fragment in prompt and excerpt_fragment in prompt:
                return answer
        return self.default


class HttpLlmBackend:
    """Completion-over-HTTP: POST {prompt, n_predict, temperature} -> {content}."""

    def __init__(self, endpoint: str, timeout_ms: int = 30_000, client: httpx.Client | None = None):
        self.endpoint = endpoint
        self._client = client or httpx.Client(timeout=timeout_ms / 1000)

    def complete(self, prompt: str, max_tokens: int, temperature: float) -> str:
        try:
            response = self._client.post(self.endpoint, json={
                "prompt": prompt, "n_predict": max_tokens, "temperature": temperature,
            })
            response.raise_for_status()
            return str(response.json()["content"])
        except (httpx.HTTPError, KeyError, TypeError, ValueError) as err:
            raise LlmBackendError(self.endpoint, repr(err)) from err


class LlmClient:
    """Verdict-level client: retries, in-flight bound, (term, excerpt) cache."""

    def __init__(self, config: LlmClientConfig, backend=None):
        self.config = config
        self.backend = backend if backend is not None else HttpLlmBackend(
            config.endpoint, timeout_ms=config.timeout_ms)
        self._semaphore = threading.BoundedSemaphore(config.max_in_flight)
        self._cache: dict[tuple[str, str], Verdict] = {}
        self._cache_lock = threading.Lock()

    def _complete_with_retries(self, prompt: str) -> str:
        last_error = None
        for _ in range(self.config.retries + 1):
            try:
                return self.backend.complete(prompt, self.config.max_tokens, self.config.temperature)
            except LlmBackendError as err:
                last_error = err
        raise last_error

    def classify(self, prompt: str, language: str) -> Verdict:
        """One verdict for one prompt; an unparseable reply is retried once."""
        started = time.perf_counter()
        with self._semaphore:
            raw = self._complete_with_retries(prompt)
            value = parse_answer(raw, language)
            if value == UNPARSEABLE:
                raw = self._complete_with_retries(prompt)
                value = parse_answer(raw, language)
        return Verdict(value=value, raw_answer=raw,
                       latency_ms=(time.perf_counter() - started) * 1000)

    def classify_cached(self, term_id: str, excerpt: str, prompt: str, language: str) -> Verdict:
        if not self.config.cache_enabled:
            return self.classify(prompt, language)
        key = (term_id, hashlib.sha256(excerpt.encode("utf-8")).hexdigest())
        with self._cache_lock:
            cached = self._cache.get(key)
        if cached is not None:
            return cached
        verdict = self.classify(prompt, language)
        with self._cache_lock:
            self._cache.setdefault(key, verdict)
        return verdict


@dataclass(frozen=True)
class DisambiguationDiagnostic:
    match: RawMatch
    reason: str  # llm | llm_unparseable
    raw_answer: str


@dataclass
class DisambiguationResult:
    kept: list[RawMatch] = field(default_factory=list)
    dropped: list[RawMatch] = field(default_factory=list)
    diagnostics: list[DisambiguationDiagnostic] = field(default_factory=list)


def excerpt_around(doc: LemmatizedDocument, match: RawMatch, context_window: int) -> str:
    """The original text covering +-context_window tokens around the match."""
    if not doc.tokens:
        return doc.text
    lo = max(0, match.first_token_index - context_window)
    hi = min(len(doc.tokens) - 1, match.last_token_index + context_window)
    return doc.text[doc.tokens[lo].token.char_start:doc.tokens[hi].token.char_end]


def disambiguate(
    matches: list[RawMatch],
    doc: LemmatizedDocument,
    graph: VocabularyGraph,
    templates: dict[tuple[str, str], PromptTemplate],
    client: LlmClient,
    context_window: int = 64,
) -> DisambiguationResult:
    """Route ambiguous-term matches through the LLM; pass the rest through.

    A backend error aborts the whole call rather than producing a silently
    partial result.
    """
    result = DisambiguationResult()
    family = model_family_for(client.config.model)
    for match in matches:
        term = graph.term(match.term_id)
        if not term.ambiguous:
            result.kept.append(match)
            continue
        template = templates.get((family, doc.language))
        if template is None:
            raise TemplateError(f"no template for model family {family!r}, language {doc.language!r}")
        issue = graph.issue(term.issue_id)
        excerpt = excerpt_around(doc, match, context_window)
        prompt = build_prompt(term.label, issue.description, excerpt, doc.language,
                              template, suggestion_note=issue.suggestion_note)
        verdict = client.classify_cached(term.id, excerpt, prompt, doc.language)
        if verdict.value == CONTENTIOUS:
            result.kept.append(match)
        elif verdict.value == NOT_CONTENTIOUS:
            result.dropped.append(match)
            result.diagnostics.append(DisambiguationDiagnostic(match, "llm", verdict.raw_answer))
        else:
            result.dropped.append(match)
            result.diagnostics.append(
                DisambiguationDiagnostic(match, "llm_unparseable", verdict.raw_answer))
    return result
