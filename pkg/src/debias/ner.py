"""Named-entity detection and the entity filter for vocabulary matches.

Vocabulary surfaces show up inside proper names (surnames, place names), and
those occurrences are not contentious usage.  Matches overlapping an entity
span by at least one character are discarded.

Two backends: a dependency-free heuristic over capitalization patterns, and
a proxy for any external HTTP annotator.  Both produce EntitySpan lists in
character offsets of the analyzed text.
"""

from __future__ import annotations

from dataclasses import dataclass

import httpx

from .matcher import RawMatch
from .textproc import SENTENCE_FINAL_PUNCT, LemmatizedDocument, TextResources

_ENTITY_KINDS = ("person", "location", "organization", "other")


@dataclass(frozen=True)
class EntitySpan:
    char_start: int
    char_end: int
    kind: str = "other"
    source: str = "heuristic"


class NerBackendError(RuntimeError):
    def __init__(self, endpoint: str, cause: str):
        super().__init__(f"entity backend at {endpoint} failed: {cause}")
        self.endpoint = endpoint
        self.cause = cause


class HeuristicNerBackend:
    """Capitalization heuristic, total and deterministic.

    Entities are maximal runs of two or more adjacent capitalized word
    tokens, plus single capitalized word tokens that are not sentence-initial
    and whose lowercase form the language dictionary does not know.
    Sentence-initial means start of text or right after sentence-final
    punctuation.
    """

    def __init__(self, resources: TextResources):
        self._resources = resources

    def detect(self, doc: LemmatizedDocument) -> list[EntitySpan]:
        dictionary = self._resources.for_language(doc.language).dictionary
        tokens = doc.tokens
        capitalized = [
            lt.token.kind == "word" and lt.token.surface[:1].isupper()
            for lt in tokens
        ]
        spans: list[EntitySpan] = []
        i = 0
        while i < len(tokens):
            if not capitalized[i]:
                i += 1
                continue
            j = i
            while j + 1 < len(tokens) and capitalized[j + 1]:
                j += 1
            if j > i:
                spans.append(EntitySpan(tokens[i].token.char_start, tokens[j].token.char_end))
            else:
                sentence_initial = i == 0 or (
                    tokens[i - 1].token.kind == "punctuation"
                    and tokens[i - 1].token.surface in SENTENCE_FINAL_PUNCT
                )
                if not sentence_initial and tokens[i].token.surface.lower() not in dictionary:
                    spans.append(EntitySpan(tokens[i].token.char_start, tokens[i].token.char_end))
            i = j + 1
        return spans


class ExternalNerBackend:
    """Proxy for a deployed annotator speaking the plain span contract."""

    def __init__(self, endpoint: str, timeout_ms: int = 10_000, client: httpx.Client | None = None):
        self.endpoint = endpoint
        self._client = client or httpx.Client(timeout=timeout_ms / 1000)

    def detect(self, doc: LemmatizedDocument) -> list[EntitySpan]:
        try:
            response = self._client.post(
                self.endpoint, json={"text": doc.text, "language": doc.language},
            )
            response.raise_for_status()
            payload = response.json()
            return [
                EntitySpan(
                    char_start=int(entity["start"]),
                    char_end=int(entity["end"]),
                    kind=entity.get("kind", "other") if entity.get("kind") in _ENTITY_KINDS else "other",
                    source="external",
                )
                for entity in payload["entities"]
            ]
        except (httpx.HTTPError, KeyError, TypeError, ValueError) as err:
            raise NerBackendError(self.endpoint, repr(err)) from err


def detect_entities(doc: LemmatizedDocument, backend) -> list[EntitySpan]:
    return backend.detect(doc)


def filter_matches(
    matches: list[RawMatch], entities: list[EntitySpan],
) -> tuple[list[RawMatch], list[RawMatch]]:
    """Split matches into (kept, dropped) by any-overlap with entity spans."""
    kept: list[RawMatch] = []
    dropped: list[RawMatch] = []
    for match in matches:
        overlaps = any(
            match.char_start < entity.char_end and entity.char_start < match.char_end
            for entity in entities
        )
        (dropped if overlaps else kept).append(match)
    return kept, dropped
