"""Vocabulary graph loading, validation, indexing, and stats."""

import io
import json

import pytest

from debias.vocabulary import (
    IndexingError,
    TermNotFoundError,
    VocabularyParseError,
    VocabularySchemaError,
    build_term_index,
    load_vocabulary,
    lookup_issue,
    serialize,
    stats,
    validate,
)

from conftest import FIXTURES, load_script


def load_fixture():
    with open(FIXTURES / "vocabulary.json", "rb") as fh:
        return load_vocabulary(fh)


def graph_from(payload: dict):
    return load_vocabulary(io.StringIO(json.dumps(payload)))


MINIMAL_ISSUE = {"id": "issue:0001", "description": "why this is contentious"}
MINIMAL_TERM = {"id": "term:0001", "label": "savage", "language": "en", "issue_id": "issue:0001"}


# --- load -------------------------------------------------------------------

def test_load_fixture_counts_match_raw_record_count():
    # oracle: count the arrays in the raw JSON, independent of the loader
    raw = json.loads((FIXTURES / "vocabulary.json").read_text(encoding="utf-8"))
    graph = load_fixture()
    assert len(graph.terms) == len(raw["terms"]) == 12
    assert len(graph.issues) == len(raw["issues"]) == 9


def test_load_empty_graph():
    graph = graph_from({"format_version": "1.0", "terms": [], "issues": []})
    assert graph.terms == [] and graph.issues == []
    report = stats(graph)
    assert report.total_terms == 0 and report.total_issues == 0
    assert report.ambiguous_fraction == 0


def test_load_malformed_json_reports_position():
    with pytest.raises(VocabularyParseError, match=r"line \d+"):
        load_vocabulary(io.StringIO('{"terms": [,]}'))


def test_load_missing_required_field_names_field_and_record():
    payload = {"issues": [MINIMAL_ISSUE], "terms": [{k: v for k, v in MINIMAL_TERM.items() if k != "issue_id"}]}
    with pytest.raises(VocabularySchemaError) as err:
        graph_from(payload)
    assert err.value.field_name == "issue_id"
    assert err.value.record_id == "term:0001"


def test_load_rejects_unsupported_term_language():
    payload = {"issues": [MINIMAL_ISSUE], "terms": [dict(MINIMAL_TERM, language="pt")]}
    with pytest.raises(VocabularySchemaError):
        graph_from(payload)


def test_load_unknown_fields_warn_and_round_trip():
    payload = {
        "issues": [dict(MINIMAL_ISSUE, rights="CC-BY")],
        "terms": [dict(MINIMAL_TERM, editor="someone")],
        "custom_top_level": 7,
    }
    graph = graph_from(payload)
    assert any("rights" in w for w in graph.warnings)
    assert any("editor" in w for w in graph.warnings)
    reparsed = json.loads(serialize(graph))
    assert reparsed["issues"][0]["rights"] == "CC-BY"
    assert reparsed["terms"][0]["editor"] == "someone"
    assert reparsed["custom_top_level"] == 7


def test_round_trip_is_identical():
    graph = load_fixture()
    again = load_vocabulary(io.StringIO(serialize(graph)))
    assert [t.id for t in again.terms] == [t.id for t in graph.terms]
    assert [i.id for i in again.issues] == [i.id for i in graph.issues]
    assert again.terms == graph.terms
    assert again.issues == graph.issues


# --- validate ---------------------------------------------------------------

def test_validate_fixture_is_clean():
    report = validate(load_fixture())
    assert report.ok
    assert report.violations == []


def test_validate_dangling_issue_reference():
    payload = {"issues": [MINIMAL_ISSUE], "terms": [dict(MINIMAL_TERM, issue_id="issue:9999")]}
    report = validate(graph_from(payload))
    assert [v.kind for v in report.violations] == ["dangling_issue_ref"]


def test_validate_duplicate_term_id():
    payload = {"issues": [MINIMAL_ISSUE], "terms": [MINIMAL_TERM, dict(MINIMAL_TERM, label="primitive")]}
    report = validate(graph_from(payload))
    assert [v.kind for v in report.violations] == ["duplicate_id"]


def test_validate_empty_label():
    payload = {"issues": [MINIMAL_ISSUE], "terms": [dict(MINIMAL_TERM, label="   ")]}
    report = validate(graph_from(payload))
    assert [v.kind for v in report.violations] == ["empty_label"]


def test_validate_same_language_cross_link():
    payload = {
        "issues": [MINIMAL_ISSUE],
        "terms": [
            dict(MINIMAL_TERM, cross_language_links=["term:0002"]),
            dict(MINIMAL_TERM, id="term:0002", label="primitive", cross_language_links=["term:0001"]),
        ],
    }
    report = validate(graph_from(payload))
    assert {v.kind for v in report.violations} == {"same_language_cross_link"}


def test_validate_asymmetric_cross_link_is_warning_not_violation():
    payload = {
        "issues": [MINIMAL_ISSUE],
        "terms": [
            dict(MINIMAL_TERM, cross_language_links=["term:0002"]),
            dict(MINIMAL_TERM, id="term:0002", label="Wilde", language="de"),
        ],
    }
    report = validate(graph_from(payload))
    assert report.ok
    assert any("not symmetric" in w for w in report.warnings)


def test_valid_graph_supports_all_lookups():
    graph = load_fixture()
    assert validate(graph).ok
    for term in graph.terms:
        payload = lookup_issue(graph, term.id)
        assert payload.issue.id == term.issue_id


# --- lookup_issue -----------------------------------------------------------

def test_lookup_issue_guidance_payload():
    graph = load_fixture()
    caucasian = next(t for t in graph.terms if t.label == "Caucasian")
    payload = lookup_issue(graph, caucasian.id)
    assert payload.suggestion_note.startswith("Use with caution in the context of people")
    assert payload.suggested_terms == ["White"]
    assert payload.categories == ["Ethnicity", "Race"]


def test_lookup_issue_synonyms_share_issue():
    graph = load_fixture()
    savage = next(t for t in graph.terms if t.label == "savage")
    primitive = next(t for t in graph.terms if t.label == "primitive")
    assert lookup_issue(graph, savage.id).issue.id == lookup_issue(graph, primitive.id).issue.id


def test_lookup_issue_unknown_term():
    with pytest.raises(TermNotFoundError):
        lookup_issue(load_fixture(), "term:none")


# --- build_term_index -------------------------------------------------------

def test_index_single_token_term(text_resources):
    graph = load_fixture()
    index = build_term_index(graph, text_resources)
    assert ("caucasian",) in index.for_language("en")
    assert graph.term("term:0001").lemma_sequence == ("caucasian",)


def test_index_multi_token_term_keeps_order(text_resources):
    graph = load_fixture()
    index = build_term_index(graph, text_resources)
    assert ("third", "world") in index.for_language("en")
    assert ("world", "third") not in index.for_language("en")


def test_index_lowercase_label_is_identity(text_resources):
    graph = load_fixture()
    build_term_index(graph, text_resources)
    assert graph.term("term:0004").lemma_sequence == ("savage",)


def test_index_compound_language_labels(text_resources):
    graph = load_fixture()
    index = build_term_index(graph, text_resources)
    assert ("dritt", "welt") in index.for_language("de")
    assert ("indiaan",) in index.for_language("nl")


def test_index_is_bijective_onto_terms(text_resources):
    graph = load_fixture()
    index = build_term_index(graph, text_resources)
    indexed_ids = [
        term_id
        for language in index.patterns
        for ids in index.patterns[language].values()
        for term_id in ids
    ]
    assert sorted(indexed_ids) == sorted(t.id for t in graph.terms)
    assert len(indexed_ids) == len(set(indexed_ids)) == 12


def test_index_respects_language_selection(text_resources):
    graph = load_fixture()
    index = build_term_index(graph, text_resources, languages={"fr"})
    assert set(index.patterns) == {"fr"}
    assert index.pattern_count("fr") == 1


def test_index_empty_sequence_names_term(text_resources):
    payload = {"issues": [MINIMAL_ISSUE], "terms": [dict(MINIMAL_TERM, label="...")]}
    with pytest.raises(IndexingError, match="term:0001"):
        build_term_index(graph_from(payload), text_resources)


def test_index_ambiguity_lookup(text_resources):
    graph = load_fixture()
    index = build_term_index(graph, text_resources)
    assert index.ambiguous["term:0001"] is True   # Caucasian
    assert index.ambiguous["term:0002"] is False  # Third World


# --- stats ------------------------------------------------------------------

def test_stats_fixture_counts():
    report = stats(load_fixture())
    assert report.total_terms == 12
    assert report.total_issues == 9
    assert report.per_language == {"en": 5, "de": 3, "nl": 2, "fr": 1, "it": 1}
    assert report.ambiguous_fraction == pytest.approx(0.25)


def test_stats_totals_equal_language_sum():
    report = stats(load_fixture())
    assert sum(report.per_language.values()) == report.total_terms


def test_full_scale_vocabulary_structure(text_resources):
    generator = load_script("make_full_scale_vocab")
    graph = generator.build_graph()
    assert validate(graph).ok
    report = stats(graph)
    assert report.total_terms == 687
    assert report.total_issues == 530
    assert report.per_language == {"en": 220, "de": 163, "nl": 161, "fr": 75, "it": 68}
    assert 0.2 <= report.ambiguous_fraction <= 0.3
    index = build_term_index(graph, text_resources)
    assert index.pattern_count("en") == 220
    # survives a serialize/load round trip at scale
    again = load_vocabulary(io.StringIO(serialize(graph)))
    assert stats(again) == report
