"""Token-level Levenshtein alignment between a formal source and its rewrite.

The alignment stores coarse per-token edit tags plus the inserted/replacing
target tokens, which is enough to reconstruct the target exactly and to emit
training labels for a token tagger.
"""

import enum
from collections import defaultdict
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .corpus import Sentence
from .errors import AlignmentError


class EditTag(str, enum.Enum):
    EQUAL = "equal"
    REPLACE = "replace"
    DELETE = "delete"
    INSERT = "insert"


@dataclass(frozen=True)
class EditAlignment:
    """Minimal edit script for one sentence pair.

    source_tags holds EQUAL/REPLACE/DELETE, one per source token.
    insertions maps gap index g (position before source token g, so g runs
    0..n) to the target tokens inserted there. replacements maps a REPLACE
    position to its target-token run.
    """

    source_tags: tuple[EditTag, ...]
    insertions: Mapping[int, tuple[str, ...]]
    replacements: Mapping[int, tuple[str, ...]]

    def cost(self) -> int:
        edits = sum(1 for t in self.source_tags if t is not EditTag.EQUAL)
        return edits + sum(len(v) for v in self.insertions.values())


@dataclass(frozen=True)
class TaggerExample:
    """Per-token training labels with insertions folded onto the left token."""

    tokens: tuple[str, ...]
    labels: tuple[EditTag, ...]
    bos_label: EditTag

    def __post_init__(self):
        if len(self.tokens) != len(self.labels):
            raise ValueError("labels must be one per token")


def align(source: Sentence, target: Sentence) -> EditAlignment:
    """Minimal unit-cost edit script from source tokens to target tokens.

    Token equality is case sensitive (case edits are style-bearing). Among
    minimal scripts the backtrace prefers match > substitution > deletion >
    insertion, scanning from the end, which makes the result canonical.
    """
    s = source.token_texts()
    t = target.token_texts()
    n, m = len(s), len(t)

    dist = [[0] * (m + 1) for _ in range(n + 1)]
    for i in range(1, n + 1):
        dist[i][0] = i
    for j in range(1, m + 1):
        dist[0][j] = j
    for i in range(1, n + 1):
        row = dist[i]
        prev = dist[i - 1]
        si = s[i - 1]
        for j in range(1, m + 1):
            sub = prev[j - 1] + (0 if si == t[j - 1] else 1)
            row[j] = min(sub, prev[j] + 1, row[j - 1] + 1)

    tags: list[EditTag | None] = [None] * n
    inserted: dict[int, list[str]] = defaultdict(list)
    replacements: dict[int, tuple[str, ...]] = {}
    i, j = n, m
    while i > 0 or j > 0:
        here = dist[i][j]
        if i > 0 and j > 0 and s[i - 1] == t[j - 1] and here == dist[i - 1][j - 1]:
            tags[i - 1] = EditTag.EQUAL
            i, j = i - 1, j - 1
        elif i > 0 and j > 0 and s[i - 1] != t[j - 1] and here == dist[i - 1][j - 1] + 1:
            tags[i - 1] = EditTag.REPLACE
            replacements[i - 1] = (t[j - 1],)
            i, j = i - 1, j - 1
        elif i > 0 and here == dist[i - 1][j] + 1:
            tags[i - 1] = EditTag.DELETE
            i -= 1
        else:
            assert j > 0 and here == dist[i][j - 1] + 1
            inserted[i].append(t[j - 1])
            j -= 1

    insertions = {g: tuple(reversed(toks)) for g, toks in inserted.items()}
    return EditAlignment(tuple(tags), insertions, replacements)


def apply_edits(source: Sentence, alignment: EditAlignment) -> list[str]:
    """Replay the edit script; returns exactly the target token sequence."""
    s = source.token_texts()
    n = len(s)
    if len(alignment.source_tags) != n:
        raise AlignmentError(
            f"alignment has {len(alignment.source_tags)} tags for {n} source tokens"
        )
    for gap in alignment.insertions:
        if not 0 <= gap <= n:
            raise AlignmentError(f"insertion gap {gap} out of range 0..{n}")
    for pos in alignment.replacements:
        if not 0 <= pos < n:
            raise AlignmentError(f"replacement index {pos} out of range")
        if alignment.source_tags[pos] is not EditTag.REPLACE:
            raise AlignmentError(f"replacement given for non-REPLACE position {pos}")

    out: list[str] = []
    for i in range(n + 1):
        out.extend(alignment.insertions.get(i, ()))
        if i == n:
            break
        tag = alignment.source_tags[i]
        if tag is EditTag.EQUAL:
            out.append(s[i])
        elif tag is EditTag.REPLACE:
            run = alignment.replacements.get(i)
            if not run:
                raise AlignmentError(f"REPLACE position {i} has no replacement tokens")
            out.extend(run)
        elif tag is EditTag.DELETE:
            pass
        else:
            raise AlignmentError("INSERT is not a valid source tag")
    return out


def to_tagger_example(alignment: EditAlignment, source: Sentence) -> TaggerExample:
    """Fold insertions onto the preceding token's label.

    INSERT overrides EQUAL only: REPLACE/DELETE dominate, and the inserted
    tokens themselves stay recoverable from the alignment. Insertions before
    the first token are reported through bos_label.
    """
    labels = list(alignment.source_tags)
    for i in range(len(labels)):
        if labels[i] is EditTag.EQUAL and alignment.insertions.get(i + 1):
            labels[i] = EditTag.INSERT
    bos = EditTag.INSERT if alignment.insertions.get(0) else EditTag.EQUAL
    return TaggerExample(tuple(source.token_texts()), tuple(labels), bos)


def tag_distribution(examples: Iterable[TaggerExample | Sequence[EditTag]]) -> dict[EditTag, float]:
    """Fraction of each label over all token labels; fractions sum to 1."""
    counts: dict[EditTag, int] = {}
    total = 0
    for item in examples:
        labels = item.labels if isinstance(item, TaggerExample) else item
        for label in labels:
            counts[EditTag(label)] = counts.get(EditTag(label), 0) + 1
            total += 1
    if total == 0:
        raise ValueError("empty tag collection")
    return {tag: count / total for tag, count in counts.items()}
