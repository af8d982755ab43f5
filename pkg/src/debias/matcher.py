"""Multi-pattern matching of term lemma sequences over lemmatized documents.

Patterns are short sequences over a huge alphabet (lemmas, not characters),
so the automaton is a token-level Aho-Corasick: goto transitions are dicts
keyed by lemma, failure links are computed breadth-first, and output sets
propagate along them.  One pass over flat_lemmas finds every occurrence of
every pattern, including overlapping and nested ones.

A candidate occurrence in lemma space still has to be anchored back to
original-text tokens.  A match is valid when it either touches exactly one
token (possibly inside a compound's components) or spans several tokens of
which none is compound-split and none is punctuation.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

from .textproc import LemmatizedDocument
from .vocabulary import TermIndex


@dataclass(frozen=True)
class RawMatch:
    term_id: str
    char_start: int
    char_end: int
    first_token_index: int
    last_token_index: int
    matched_lemmas: tuple[str, ...]
    via_compound: bool


class MatcherAutomaton:
    """Compiled, immutable multi-pattern structure for one language."""

    def __init__(self, language: str, patterns: list[tuple[tuple[str, ...], str]]):
        self.language = language
        # one entry per term id; synonym terms with equal sequences coexist
        self.patterns = list(patterns)
        self._goto: list[dict[str, int]] = [{}]
        self._out: list[list[int]] = [[]]
        for pattern_idx, (sequence, _) in enumerate(self.patterns):
            state = 0
            for lemma in sequence:
                next_state = self._goto[state].get(lemma)
                if next_state is None:
                    self._goto.append({})
                    self._out.append([])
                    next_state = len(self._goto) - 1
                    self._goto[state][lemma] = next_state
                state = next_state
            self._out[state].append(pattern_idx)

        self._fail = [0] * len(self._goto)
        queue = deque(self._goto[0].values())
        while queue:
            state = queue.popleft()
            for lemma, next_state in self._goto[state].items():
                queue.append(next_state)
                fallback = self._fail[state]
                while fallback and lemma not in self._goto[fallback]:
                    fallback = self._fail[fallback]
                self._fail[next_state] = self._goto[fallback].get(lemma, 0)
                self._out[next_state].extend(self._out[self._fail[next_state]])

    @property
    def pattern_count(self) -> int:
        return len(self.patterns)


def compile_patterns(index: TermIndex, language: str) -> MatcherAutomaton:
    """Build the automaton for one language of a TermIndex.

    Entries are sorted so compilation order (and with it match ordering on
    ties) is independent of set/dict iteration order.
    """
    patterns = [
        (sequence, term_id)
        for sequence, term_ids in sorted(index.for_language(language).items())
        for term_id in sorted(term_ids)
    ]
    return MatcherAutomaton(language, patterns)


def _anchor_run(
    doc: LemmatizedDocument,
    flat_start: int,
    flat_end: int,
    sequence: tuple[str, ...],
    term_id: str,
) -> RawMatch | None:
    """Map a flat_lemmas run onto tokens, or reject it.

    Valid anchors: entirely inside one token (via_compound when that token
    was split), or across several tokens none of which is compound-split.
    Punctuation tokens never participate.
    """
    first_token = doc.flat_lemmas[flat_start][1]
    last_token = doc.flat_lemmas[flat_end][1]
    touched = range(first_token, last_token + 1)
    if any(doc.tokens[t].token.kind == "punctuation" for t in touched):
        return None
    if first_token == last_token:
        via_compound = doc.tokens[first_token].is_compound
    else:
        if any(doc.tokens[t].is_compound for t in touched):
            return None
        via_compound = False
    return RawMatch(
        term_id=term_id,
        char_start=doc.tokens[first_token].token.char_start,
        char_end=doc.tokens[last_token].token.char_end,
        first_token_index=first_token,
        last_token_index=last_token,
        matched_lemmas=sequence,
        via_compound=via_compound,
    )


def find_matches(doc: LemmatizedDocument, automaton: MatcherAutomaton) -> list[RawMatch]:
    """Every valid occurrence of every pattern, ordered by char_start then
    longer span first (term id as the final tie-break)."""
    matches: set[RawMatch] = set()
    state = 0
    for flat_idx, (lemma, _) in enumerate(doc.flat_lemmas):
        while state and lemma not in automaton._goto[state]:
            state = automaton._fail[state]
        state = automaton._goto[state].get(lemma, 0)
        for pattern_idx in automaton._out[state]:
            sequence, term_id = automaton.patterns[pattern_idx]
            match = _anchor_run(doc, flat_idx - len(sequence) + 1, flat_idx, sequence, term_id)
            if match is not None:
                # a lemma repeated inside one compound can yield the same
                # anchored match twice; the set keeps one
                matches.add(match)
    return sorted(matches, key=lambda m: (m.char_start, -m.char_end, m.term_id))
