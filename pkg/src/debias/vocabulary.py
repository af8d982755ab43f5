"""Contentious-term vocabulary: loading, validation, indexing, queries.

The vocabulary is a small knowledge graph: terms carry a surface label and
detection flags, issues carry the contextual explanation and usage guidance
shown to curators.  Several terms may share one issue (synonym grouping),
and terms link to their counterparts in other languages.

Serialization is a plain JSON document (see the schema in the README).
Unknown fields are kept opaquely so third-party extensions survive a
load/serialize round-trip.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from typing import IO, Iterable, NamedTuple

from . import SUPPORTED_LANGUAGES
from .textproc import TextResources, preprocess

_ISSUE_FIELDS = ("id", "description", "suggestion_note", "suggested_terms",
                 "categories", "sources", "modified", "version")
_TERM_FIELDS = ("id", "label", "language", "issue_id", "ambiguous",
                "variant_group", "cross_language_links")


class VocabularyParseError(ValueError):
    """Malformed vocabulary syntax; message carries line and column."""


class VocabularySchemaError(ValueError):
    def __init__(self, field_name: str, record_id: str):
        super().__init__(f"vocabulary record {record_id}: missing or invalid field {field_name!r}")
        self.field_name = field_name
        self.record_id = record_id


class TermNotFoundError(KeyError):
    def __init__(self, term_id: str):
        super().__init__(f"unknown term id: {term_id}")
        self.term_id = term_id


class IndexingError(ValueError):
    pass


@dataclass
class ContentiousIssue:
    id: str
    description: str
    suggestion_note: str = ""
    suggested_terms: list[str] = field(default_factory=list)
    categories: list[str] = field(default_factory=list)
    sources: list[str] = field(default_factory=list)
    modified: str = ""
    version: str = ""
    extra: dict = field(default_factory=dict)


@dataclass
class ContentiousTerm:
    id: str
    label: str
    language: str
    issue_id: str
    ambiguous: bool = False
    variant_group: str | None = None
    cross_language_links: list[str] = field(default_factory=list)
    extra: dict = field(default_factory=dict)
    # populated by build_term_index; not part of record identity
    lemma_sequence: tuple[str, ...] | None = field(default=None, compare=False)


@dataclass
class VocabularyGraph:
    terms: list[ContentiousTerm] = field(default_factory=list)
    issues: list[ContentiousIssue] = field(default_factory=list)
    format_version: str = "1.0"
    extra: dict = field(default_factory=dict)
    warnings: list[str] = field(default_factory=list, compare=False, repr=False)

    def __post_init__(self):
        # first occurrence wins; duplicates surface through validate()
        self._terms_by_id: dict[str, ContentiousTerm] = {}
        for term in self.terms:
            self._terms_by_id.setdefault(term.id, term)
        self._issues_by_id: dict[str, ContentiousIssue] = {}
        for issue in self.issues:
            self._issues_by_id.setdefault(issue.id, issue)

    def term(self, term_id: str) -> ContentiousTerm:
        try:
            return self._terms_by_id[term_id]
        except KeyError:
            raise TermNotFoundError(term_id) from None

    def has_issue(self, issue_id: str) -> bool:
        return issue_id in self._issues_by_id

    def issue(self, issue_id: str) -> ContentiousIssue:
        return self._issues_by_id[issue_id]


def _require(record: dict, field_name: str, record_id: str) -> object:
    if field_name not in record:
        raise VocabularySchemaError(field_name, record_id)
    return record[field_name]


def load_vocabulary(source: IO, format: str = "json") -> VocabularyGraph:
    """Parse a vocabulary from a readable byte or text stream.

    Unknown fields at any level are ignored for behavior but recorded in a
    warning and preserved on the parsed records for round-tripping.
    """
    if format != "json":
        raise ValueError(f"unsupported vocabulary format: {format!r}")
    raw = source.read()
    if isinstance(raw, bytes):
        raw = raw.decode("utf-8")
    try:
        payload = json.loads(raw)
    except json.JSONDecodeError as err:
        raise VocabularyParseError(
            f"malformed vocabulary JSON at line {err.lineno}, column {err.colno}: {err.msg}"
        ) from err
    if not isinstance(payload, dict):
        raise VocabularyParseError("vocabulary root must be a JSON object")

    warnings: list[str] = []
    issues: list[ContentiousIssue] = []
    for record in payload.get("issues", []):
        record_id = str(record.get("id", "<missing id>"))
        issue = ContentiousIssue(
            id=str(_require(record, "id", record_id)),
            description=str(_require(record, "description", record_id)),
            suggestion_note=str(record.get("suggestion_note", "")),
            suggested_terms=list(record.get("suggested_terms", [])),
            categories=list(record.get("categories", [])),
            sources=list(record.get("sources", [])),
            modified=str(record.get("modified", "")),
            version=str(record.get("version", "")),
            extra={k: v for k, v in record.items() if k not in _ISSUE_FIELDS},
        )
        if issue.extra:
            warnings.append(f"issue {issue.id}: ignoring unknown fields {sorted(issue.extra)}")
        issues.append(issue)

    terms: list[ContentiousTerm] = []
    for record in payload.get("terms", []):
        record_id = str(record.get("id", "<missing id>"))
        language = str(_require(record, "language", record_id))
        if language not in SUPPORTED_LANGUAGES:
            raise VocabularySchemaError("language", record_id)
        term = ContentiousTerm(
            id=str(_require(record, "id", record_id)),
            label=str(_require(record, "label", record_id)),
            language=language,
            issue_id=str(_require(record, "issue_id", record_id)),
            ambiguous=bool(record.get("ambiguous", False)),
            variant_group=record.get("variant_group"),
            cross_language_links=list(record.get("cross_language_links", [])),
            extra={k: v for k, v in record.items() if k not in _TERM_FIELDS},
        )
        if term.extra:
            warnings.append(f"term {term.id}: ignoring unknown fields {sorted(term.extra)}")
        terms.append(term)

    extra = {k: v for k, v in payload.items() if k not in ("terms", "issues", "format_version")}
    return VocabularyGraph(
        terms=terms,
        issues=issues,
        format_version=str(payload.get("format_version", "1.0")),
        extra=extra,
        warnings=warnings,
    )


def serialize(graph: VocabularyGraph) -> str:
    """Inverse of load_vocabulary, including preserved unknown fields."""
    payload = {
        "format_version": graph.format_version,
        "issues": [
            {
                "id": i.id,
                "description": i.description,
                "suggestion_note": i.suggestion_note,
                "suggested_terms": i.suggested_terms,
                "categories": i.categories,
                "sources": i.sources,
                "modified": i.modified,
                "version": i.version,
                **i.extra,
            }
            for i in graph.issues
        ],
        "terms": [
            {
                "id": t.id,
                "label": t.label,
                "language": t.language,
                "issue_id": t.issue_id,
                "ambiguous": t.ambiguous,
                "variant_group": t.variant_group,
                "cross_language_links": t.cross_language_links,
                **t.extra,
            }
            for t in graph.terms
        ],
        **graph.extra,
    }
    return json.dumps(payload, ensure_ascii=False, indent=2)


@dataclass(frozen=True)
class Violation:
    kind: str  # dangling_issue_ref | duplicate_id | empty_label | same_language_cross_link
    record_id: str
    message: str


@dataclass
class ValidationReport:
    violations: list[Violation] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


def validate(graph: VocabularyGraph) -> ValidationReport:
    """Structural validation; reports every violation, never raises."""
    report = ValidationReport()

    seen_terms: set[str] = set()
    for term in graph.terms:
        if term.id in seen_terms:
            report.violations.append(Violation("duplicate_id", term.id, f"duplicate term id {term.id}"))
        seen_terms.add(term.id)
    seen_issues: set[str] = set()
    for issue in graph.issues:
        if issue.id in seen_issues:
            report.violations.append(Violation("duplicate_id", issue.id, f"duplicate issue id {issue.id}"))
        seen_issues.add(issue.id)

    for term in graph.terms:
        if not term.label.strip():
            report.violations.append(Violation("empty_label", term.id, f"term {term.id} has an empty label"))
        if not graph.has_issue(term.issue_id):
            report.violations.append(Violation(
                "dangling_issue_ref", term.id,
                f"term {term.id} references missing issue {term.issue_id}",
            ))
        for link in term.cross_language_links:
            if link not in graph._terms_by_id:
                report.warnings.append(f"term {term.id}: cross-language link {link} not in graph")
                continue
            other = graph.term(link)
            if other.language == term.language:
                report.violations.append(Violation(
                    "same_language_cross_link", term.id,
                    f"term {term.id} cross-links {link} of the same language {term.language}",
                ))
            elif term.id not in other.cross_language_links:
                # asymmetry is tolerated in published data; flag, don't fail
                report.warnings.append(f"cross-language link {term.id} -> {link} is not symmetric")

    return report


class IssuePayload(NamedTuple):
    issue: ContentiousIssue
    suggestion_note: str
    suggested_terms: list[str]
    categories: list[str]


def lookup_issue(graph: VocabularyGraph, term_id: str) -> IssuePayload:
    """The guidance payload for a term, via its single linked issue."""
    term = graph.term(term_id)
    issue = graph.issue(term.issue_id)
    return IssuePayload(issue, issue.suggestion_note, issue.suggested_terms, issue.categories)


@dataclass
class TermIndex:
    """Per-language map from lemma sequence to the term ids that produce it."""

    patterns: dict[str, dict[tuple[str, ...], set[str]]] = field(default_factory=dict)
    ambiguous: dict[str, bool] = field(default_factory=dict)

    def for_language(self, language: str) -> dict[tuple[str, ...], set[str]]:
        return self.patterns.get(language, {})

    def pattern_count(self, language: str) -> int:
        return sum(len(ids) for ids in self.for_language(language).values())


def build_term_index(
    graph: VocabularyGraph,
    resources: TextResources,
    languages: Iterable[str] | None = None,
) -> TermIndex:
    """Preprocess every term label exactly as query text is preprocessed.

    Using the same tokenize/compound-split/lemmatize path on both sides is
    what makes index keys and document lemmas comparable at all.
    """
    wanted = set(languages) if languages is not None else set(SUPPORTED_LANGUAGES)
    index = TermIndex()
    for term in graph.terms:
        if term.language not in wanted:
            continue
        doc = preprocess(term.label, term.language, resources)
        sequence = tuple(
            lemma for lemma, token_idx in doc.flat_lemmas
            if doc.tokens[token_idx].token.kind != "punctuation"
        )
        if not sequence:
            raise IndexingError(f"term {term.id} ({term.label!r}) lemmatizes to an empty sequence")
        term.lemma_sequence = sequence
        index.patterns.setdefault(term.language, {}).setdefault(sequence, set()).add(term.id)
        index.ambiguous[term.id] = term.ambiguous
    return index


@dataclass(frozen=True)
class VocabStats:
    total_terms: int
    total_issues: int
    per_language: dict[str, int]
    ambiguous_fraction: float


def stats(graph: VocabularyGraph) -> VocabStats:
    counts = Counter(term.language for term in graph.terms)
    total = len(graph.terms)
    ambiguous = sum(1 for term in graph.terms if term.ambiguous)
    return VocabStats(
        total_terms=total,
        total_issues=len(graph.issues),
        per_language={lang: counts.get(lang, 0) for lang in SUPPORTED_LANGUAGES},
        # 0 by convention on an empty graph
        ambiguous_fraction=(ambiguous / total) if total else 0.0,
    )
