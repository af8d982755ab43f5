"""Generate a synthetic vocabulary at production scale.

The bundled test fixture stays small on purpose; this script emits a
structurally faithful large vocabulary (687 terms over 530 shared issues,
per-language sizes en 220 / de 163 / nl 161 / fr 75 / it 68, roughly a
quarter of terms flagged ambiguous) for index and stats testing at scale.
Labels are synthetic pronounceable words, deterministic run to run.

Usage: python scripts/make_full_scale_vocab.py --out vocab-full-scale.json
"""

import argparse
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from debias.vocabulary import ContentiousIssue, ContentiousTerm, VocabularyGraph, serialize

PER_LANGUAGE = {"en": 220, "de": 163, "nl": 161, "fr": 75, "it": 68}
TOTAL_ISSUES = 530

_SYLLABLES = ["ba", "do", "ke", "lu", "mi", "no", "pa", "re", "si", "tu", "va", "zo"]


def synthetic_word(n: int) -> str:
    """Unique pronounceable word for an index, base-12 over syllables."""
    word = ""
    n += len(_SYLLABLES) ** 2  # at least three syllables, avoids collisions
    while n:
        n, digit = divmod(n, len(_SYLLABLES))
        word = _SYLLABLES[digit] + word
    return word


def build_graph() -> VocabularyGraph:
    issues = [
        ContentiousIssue(
            id=f"issue:{i:04d}",
            description=f"Synthetic contentious issue number {i} for scale testing.",
            suggestion_note="Synthetic guidance.",
            suggested_terms=[f"alternative-{i}"],
            categories=["Synthetic"],
            modified="2024-07-01T00:00:00Z",
            version="1",
        )
        for i in range(1, TOTAL_ISSUES + 1)
    ]

    terms = []
    counter = 0
    for language, count in PER_LANGUAGE.items():
        for _ in range(count):
            label = synthetic_word(counter)
            if counter % 7 == 3:  # sprinkle in multi-token terms
                label = f"{label} {synthetic_word(counter + 10_000)}"
            terms.append(ContentiousTerm(
                id=f"term:{counter + 1:04d}",
                label=label,
                language=language,
                # terms beyond the issue count share issues round-robin,
                # mirroring synonym grouping in the real vocabulary
                issue_id=f"issue:{(counter % TOTAL_ISSUES) + 1:04d}",
                ambiguous=(counter % 4 == 0),
            ))
            counter += 1

    return VocabularyGraph(terms=terms, issues=issues)


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", type=Path, default=Path("vocab-full-scale.json"))
    args = parser.parse_args()
    args.out.write_text(serialize(build_graph()), encoding="utf-8")
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
