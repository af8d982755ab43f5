"""Tokenization, compound splitting, and lemmatization with exact offsets.

Every downstream stage works on a ``LemmatizedDocument``: the original text
plus a token stream whose character offsets always point back into that text.
German and Dutch word tokens are decomposed into dictionary components before
lemmatization so that terms hidden inside arbitrary compounds stay reachable.

The lemmatizer is a deterministic layered lookup (custom rules, then a
full-form lexicon, then suffix rules, then identity).  Resolution is iterated
to a fixed point, which makes the mapping idempotent regardless of how the
rule files interact.
"""

from __future__ import annotations

import re
import unicodedata
from dataclasses import dataclass, field
from importlib import resources as importlib_resources
from pathlib import Path
from typing import Iterable

from . import COMPOUND_LANGUAGES, SUPPORTED_LANGUAGES

# Permitted linking morphemes between compound components (Fugenelemente).
LINKING_MORPHEMES = {
    "de": ("es", "en", "er", "s", "n", "e"),
    "nl": ("en", "s", "e"),
}

# Minimum length of every compound component; guards against degenerate
# two-letter splits.
MIN_COMPONENT_LENGTH = 4

SENTENCE_FINAL_PUNCT = frozenset({".", "!", "?", "…"})

# Languages whose apostrophe clitics (l', d', un') are split off the
# following word.  Elsewhere the apostrophe stays inside the word (don't).
_CLITIC_LANGUAGES = frozenset({"fr", "it"})

_LETTER = r"[^\W\d_]"
_WORD_CLITIC = rf"{_LETTER}+(?:-{_LETTER}+)*['’]?"
_WORD_JOINED = rf"{_LETTER}+(?:['’-]{_LETTER}+)*"
_NUMBER = r"\d+(?:[.,]\d+)*"

_TOKEN_RE_CLITIC = re.compile(rf"(?P<word>{_WORD_CLITIC})|(?P<number>{_NUMBER})|(?P<other>\S)")
_TOKEN_RE_JOINED = re.compile(rf"(?P<word>{_WORD_JOINED})|(?P<number>{_NUMBER})|(?P<other>\S)")


class UnsupportedLanguageError(ValueError):
    def __init__(self, language: str):
        super().__init__(f"unsupported language: {language!r} (expected one of {', '.join(SUPPORTED_LANGUAGES)})")
        self.language = language


@dataclass(frozen=True)
class Token:
    """A contiguous slice of the original text.

    ``surface`` always equals ``text[char_start:char_end]``; offsets are
    0-based character positions with an exclusive end.
    """

    surface: str
    char_start: int
    char_end: int
    kind: str  # word | punctuation | number | other


@dataclass(frozen=True)
class LemmatizedToken:
    token: Token
    components: tuple[str, ...]
    lemmas: tuple[str, ...]

    @property
    def is_compound(self) -> bool:
        return len(self.components) > 1


@dataclass(frozen=True)
class LemmatizedDocument:
    text: str
    language: str
    tokens: tuple[LemmatizedToken, ...]
    flat_lemmas: tuple[tuple[str, int], ...]  # (lemma, token index), document order


def tokenize(text: str, language: str) -> list[Token]:
    """Unicode-aware word segmentation with exact character offsets.

    Hyphenated words stay single tokens.  In fr/it, apostrophe clitics are
    split off ("l'indigène" -> "l'", "indigène"); in the other languages the
    apostrophe joins ("don't" stays one token).
    """
    if language not in SUPPORTED_LANGUAGES:
        raise UnsupportedLanguageError(language)
    pattern = _TOKEN_RE_CLITIC if language in _CLITIC_LANGUAGES else _TOKEN_RE_JOINED
    tokens: list[Token] = []
    for m in pattern.finditer(text):
        kind = m.lastgroup
        if kind == "other":
            ch = m.group()
            kind = "punctuation" if unicodedata.category(ch).startswith("P") else "other"
        tokens.append(Token(m.group(), m.start(), m.end(), kind))
    return tokens


class Dictionary:
    """Case-insensitive word list that remembers the casing of its source.

    Word lists may contain inflected forms alongside lemmas; the lemmatizer
    normalizes afterwards.  Lines starting with '#' are comments.
    """

    def __init__(self, words: Iterable[str] = ()):
        self._canonical: dict[str, str] = {}
        for word in words:
            self.add(word)

    def add(self, word: str) -> None:
        word = word.strip()
        if word:
            self._canonical.setdefault(word.lower(), word)

    def __contains__(self, word: str) -> bool:
        return word.lower() in self._canonical

    def __len__(self) -> int:
        return len(self._canonical)

    def canonical(self, word: str) -> str:
        """The stored casing for a word, e.g. 'boot' -> 'Boot' in German."""
        return self._canonical[word.lower()]

    @classmethod
    def from_file(cls, path: str | Path) -> "Dictionary":
        d = cls()
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if line and not line.startswith("#"):
                    d.add(line)
        return d


@dataclass(frozen=True)
class CompoundSplit:
    """A decomposition into dictionary components.

    ``linkers`` records the linking morphemes consumed between components
    (possibly empty strings), so joining parts and linkers reproduces the
    original word case-insensitively.
    """

    parts: tuple[str, ...]
    linkers: tuple[str, ...]

    def reassemble(self) -> str:
        pieces = [self.parts[0]]
        for linker, part in zip(self.linkers, self.parts[1:]):
            pieces.append(linker)
            pieces.append(part)
        return "".join(pieces)


def split_compound(
    word: str,
    language: str,
    dictionary: Dictionary,
    linkers: tuple[str, ...] | None = None,
    min_component_len: int = MIN_COMPONENT_LENGTH,
) -> CompoundSplit | None:
    """Decompose a German/Dutch compound into dictionary words.

    Components must each be at least ``min_component_len`` characters and may
    be joined by the language's linking morphemes.  Among valid segmentations
    the one with the fewest components wins, ties broken by the longest first
    component (then recursively on the remainder).  Returns ``None`` when the
    word itself is a dictionary word or no valid segmentation exists.
    """
    if language not in COMPOUND_LANGUAGES:
        raise ValueError(f"compound splitting only supported for {COMPOUND_LANGUAGES}, got {language!r}")
    if linkers is None:
        linkers = LINKING_MORPHEMES[language]
    lower = word.lower()
    if lower in dictionary:
        return None
    n = len(word)

    # best[i] = minimal segmentation of lower[i:] as
    # (component count, negated component lengths, parts, linkers).
    # Lexicographic comparison implements "fewest components, then longest
    # first component" with optimal substructure.
    best: list[tuple | None] = [None] * (n + 1)
    best[n] = (0, (), (), ())
    for i in range(n - 1, -1, -1):
        chosen = None
        for j in range(i + min_component_len, n + 1):
            piece = lower[i:j]
            if piece not in dictionary:
                continue
            part = dictionary.canonical(piece)
            if j == n:
                candidate = (1, (-(j - i),), (part,), ())
                if chosen is None or candidate[:2] < chosen[:2]:
                    chosen = candidate
                continue
            for link in ("",) + tuple(linkers):
                k = j + len(link)
                if k >= n or lower[j:k] != link:
                    continue
                tail = best[k]
                if tail is None:
                    continue
                candidate = (
                    1 + tail[0],
                    (-(j - i),) + tail[1],
                    (part,) + tail[2],
                    (link,) + tail[3],
                )
                if chosen is None or candidate[:2] < chosen[:2]:
                    chosen = candidate
        best[i] = chosen

    result = best[0]
    if result is None or result[0] < 2:
        return None
    return CompoundSplit(parts=result[2], linkers=result[3])


@dataclass(frozen=True)
class LemmaRule:
    language: str
    match_form: str
    lemma: str

    def __post_init__(self):
        if not self.match_form or not self.lemma:
            raise ValueError("lemma rule needs a non-empty form and lemma")


@dataclass(frozen=True)
class SuffixRule:
    language: str
    suffix: str
    replacement: str
    min_stem_length: int


class Lemmatizer:
    """Deterministic layered lookup for one language.

    Resolution order per step: custom rules, full-form lexicon, first
    applicable suffix rule, identity.  Steps are iterated until the form
    stops changing, so the final mapping is idempotent.  The step budget
    scales with input length; suffix rules shorten (or fix the last
    character), so curated rule files always converge within it.
    """

    def __init__(
        self,
        language: str,
        custom_rules: dict[str, str] | None = None,
        lexicon: dict[str, str] | None = None,
        suffix_rules: list[SuffixRule] | None = None,
    ):
        self.language = language
        self.custom_rules = dict(custom_rules or {})
        self.lexicon = dict(lexicon or {})
        self.suffix_rules = list(suffix_rules or [])

    def _step(self, form: str) -> str:
        rule_lemma = self.custom_rules.get(form)
        if rule_lemma is not None:
            return rule_lemma
        lexicon_lemma = self.lexicon.get(form)
        if lexicon_lemma is not None:
            return lexicon_lemma
        for rule in self.suffix_rules:
            if form.endswith(rule.suffix) and len(form) - len(rule.suffix) >= rule.min_stem_length:
                return form[: len(form) - len(rule.suffix)] + rule.replacement
        return form

    def __call__(self, form: str) -> str:
        for _ in range(len(form) + 33):
            next_form = self._step(form)
            if next_form == form:
                return form
            form = next_form
        return form


def lemmatize(form: str, language: str, resources: "TextResources") -> str:
    """Map a lowercased word form to its lemma."""
    return resources.for_language(language).lemmatizer(form)


@dataclass
class LanguageResources:
    language: str
    dictionary: Dictionary
    lemmatizer: Lemmatizer


@dataclass
class TextResources:
    """Immutable per-language resources, shareable across workers."""

    languages: dict[str, LanguageResources] = field(default_factory=dict)

    def for_language(self, language: str) -> LanguageResources:
        try:
            return self.languages[language]
        except KeyError:
            raise UnsupportedLanguageError(language) from None

    def supports(self, language: str) -> bool:
        return language in self.languages


def preprocess(text: str, language: str, resources: TextResources) -> LemmatizedDocument:
    """tokenize -> compound-split (de/nl) -> lemmatize, building flat_lemmas."""
    lang_res = resources.for_language(language)
    out: list[LemmatizedToken] = []
    flat: list[tuple[str, int]] = []
    for idx, token in enumerate(tokenize(text, language)):
        if token.kind == "word":
            components: tuple[str, ...] = (token.surface,)
            if language in COMPOUND_LANGUAGES:
                split = split_compound(token.surface, language, lang_res.dictionary)
                if split is not None:
                    components = split.parts
            lemmas = tuple(lang_res.lemmatizer(c.lower()) for c in components)
        else:
            components = (token.surface,)
            lemmas = (token.surface,)
        out.append(LemmatizedToken(token=token, components=components, lemmas=lemmas))
        for lemma in lemmas:
            flat.append((lemma, idx))
    return LemmatizedDocument(text=text, language=language, tokens=tuple(out), flat_lemmas=tuple(flat))


# ---------------------------------------------------------------------------
# Resource file loading

def load_lexicon(path: str | Path) -> dict[str, str]:
    """TSV of form<TAB>lemma; '#' comments and blank lines skipped."""
    lexicon: dict[str, str] = {}
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise ValueError(f"{path}:{line_no}: expected form<TAB>lemma, got {line!r}")
            lexicon[parts[0]] = parts[1]
    return lexicon


def load_custom_rules(path: str | Path) -> dict[str, dict[str, str]]:
    """TSV of language<TAB>form<TAB>lemma, returned keyed by language."""
    rules: dict[str, dict[str, str]] = {}
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise ValueError(f"{path}:{line_no}: expected language<TAB>form<TAB>lemma, got {line!r}")
            language, form, lemma = parts
            LemmaRule(language, form, lemma)  # validates non-empty
            rules.setdefault(language, {})[form] = lemma
    return rules


def load_suffix_rules(path: str | Path) -> dict[str, list[SuffixRule]]:
    """TSV of language<TAB>suffix<TAB>replacement<TAB>min_stem_length.

    Rules apply in file order; the first match per step wins.  An empty
    replacement cell strips the suffix.
    """
    rules: dict[str, list[SuffixRule]] = {}
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 4:
                raise ValueError(
                    f"{path}:{line_no}: expected language<TAB>suffix<TAB>replacement<TAB>min_stem_length"
                )
            rules.setdefault(parts[0], []).append(
                SuffixRule(parts[0], parts[1], parts[2], int(parts[3]))
            )
    return rules


def bundled_resource_dir() -> Path:
    return Path(str(importlib_resources.files("debias") / "resources"))


def load_text_resources(
    dicts_dir: str | Path | None = None,
    lexicons_dir: str | Path | None = None,
    custom_rules_path: str | Path | None = None,
    suffix_rules_path: str | Path | None = None,
    languages: Iterable[str] = SUPPORTED_LANGUAGES,
) -> TextResources:
    """Load per-language dictionaries and lemmatizer rule files.

    Any path left as None falls back to the data bundled with the package.
    Missing per-language files yield empty resources for that language rather
    than an error, so deployments can override only what they need.
    """
    base = bundled_resource_dir()
    dicts = Path(dicts_dir) if dicts_dir else base / "dictionaries"
    lexicons = Path(lexicons_dir) if lexicons_dir else base / "lexicons"
    custom_path = Path(custom_rules_path) if custom_rules_path else base / "lemma_rules.tsv"
    suffix_path = Path(suffix_rules_path) if suffix_rules_path else base / "suffix_rules.tsv"

    custom = load_custom_rules(custom_path) if custom_path.exists() else {}
    suffix = load_suffix_rules(suffix_path) if suffix_path.exists() else {}

    out = TextResources()
    for language in languages:
        if language not in SUPPORTED_LANGUAGES:
            raise UnsupportedLanguageError(language)
        dict_path = dicts / f"{language}.txt"
        lex_path = lexicons / f"{language}.tsv"
        dictionary = Dictionary.from_file(dict_path) if dict_path.exists() else Dictionary()
        lexicon = load_lexicon(lex_path) if lex_path.exists() else {}
        out.languages[language] = LanguageResources(
            language=language,
            dictionary=dictionary,
            lemmatizer=Lemmatizer(language, custom.get(language), lexicon, suffix.get(language)),
        )
    return out
