"""Multilingual contentious-term detection for cultural-heritage metadata.

The package detects terms from a curated vocabulary in free text, in five
languages (en, de, nl, fr, it), and attaches contextual guidance to every
detection.  Detection runs as a staged pipeline: tokenization, compound
splitting (de/nl), lemmatization, multi-pattern matching, named-entity
filtering, and LLM-based disambiguation of ambiguous terms.
"""

__version__ = "0.1.0"

SUPPORTED_LANGUAGES = ("en", "de", "nl", "fr", "it")
COMPOUND_LANGUAGES = ("de", "nl")
