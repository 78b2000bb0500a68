"""Gap-infill templates: construction from edit tags and/or slots, training
example emission, filling from infiller output, and slot derivation.

A template alternates kept-token runs with indexed gaps. Serialized form uses
self-describing sentinels ("<gap_0>"); exports can remap them to the T5
convention ("<extra_id_0>").
"""

import re
from dataclasses import dataclass
from typing import Iterable, Sequence

from . import editalign, slotmetric, textnorm
from .corpus import ParallelPair, Sentence, SlotSet
from .editalign import EditAlignment, EditTag
from .errors import TemplateError
from .textnorm import NormTables

SENTINEL_FORMATS = {"gap": "<gap_{}>", "t5": "<extra_id_{}>"}
SENTINEL_RES = {
    "gap": re.compile(r"<gap_(\d+)>"),
    "t5": re.compile(r"<extra_id_(\d+)>"),
}


def _sentinel(style: str, index: int) -> str:
    try:
        return SENTINEL_FORMATS[style].format(index)
    except KeyError:
        raise ValueError(f"unknown sentinel style {style!r}") from None


@dataclass(frozen=True)
class Keep:
    tokens: tuple[str, ...]


@dataclass(frozen=True)
class Gap:
    index: int


@dataclass(frozen=True)
class Template:
    segments: tuple[Keep | Gap, ...]

    def __post_init__(self):
        if not self.segments:
            raise TemplateError("template must have at least one segment")
        expected_gap = 0
        prev: Keep | Gap | None = None
        for seg in self.segments:
            if isinstance(seg, Gap):
                if isinstance(prev, Gap):
                    raise TemplateError("adjacent gaps must be merged")
                if seg.index != expected_gap:
                    raise TemplateError(
                        f"gap indices must be 0..k in order, got {seg.index}"
                    )
                expected_gap += 1
            else:
                if isinstance(prev, Keep):
                    raise TemplateError("adjacent keep runs must be merged")
                if not seg.tokens:
                    raise TemplateError("empty keep run")
            prev = seg

    @property
    def gap_count(self) -> int:
        return sum(1 for seg in self.segments if isinstance(seg, Gap))

    def keep_token_count(self) -> int:
        return sum(len(seg.tokens) for seg in self.segments if isinstance(seg, Keep))

    def serialize(self, sentinel_style: str = "gap") -> str:
        parts = []
        for seg in self.segments:
            if isinstance(seg, Gap):
                parts.append(_sentinel(sentinel_style, seg.index))
            else:
                parts.extend(seg.tokens)
        return " ".join(parts)

    @classmethod
    def parse(cls, text: str, sentinel_style: str = "gap") -> "Template":
        pattern = SENTINEL_RES[sentinel_style]
        segments: list[Keep | Gap] = []
        run: list[str] = []
        for token in text.split():
            m = pattern.fullmatch(token)
            if m:
                if run:
                    segments.append(Keep(tuple(run)))
                    run = []
                segments.append(Gap(int(m.group(1))))
            else:
                run.append(token)
        if run:
            segments.append(Keep(tuple(run)))
        return cls(tuple(segments))


@dataclass(frozen=True)
class InfillExample:
    """Input/target text pair for training a gap infiller."""

    input_text: str
    target_text: str


def _segments_from_mask(tokens: list[str], keep_mask: Sequence[bool], active_gaps: set[int]) -> Template:
    """Assemble segments from per-position keep flags plus live insertion gaps.

    Inactive insertion points are neutral: they neither break a keep run nor
    open a gap. Consecutive gap-like elements collapse into one gap.
    """
    n = len(tokens)
    kinds: list[str | None] = []  # token text for keeps, None for gap-like elements
    for i in range(n):
        if i in active_gaps:
            kinds.append(None)
        kinds.append(tokens[i] if keep_mask[i] else None)
    if n in active_gaps:
        kinds.append(None)
    segments: list[Keep | Gap] = []
    gap_index = 0
    run: list[str] = []
    in_gap = False
    for kind in kinds:
        if kind is not None:
            run.append(kind)
            in_gap = False
        else:
            if run:
                segments.append(Keep(tuple(run)))
                run = []
            if not in_gap:
                segments.append(Gap(gap_index))
                gap_index += 1
            in_gap = True
    if run:
        segments.append(Keep(tuple(run)))
    if not segments:
        segments = [Gap(0)]
    return Template(tuple(segments))


def _mask_from_labels(
    labels: Sequence[EditTag], bos_label: EditTag = EditTag.EQUAL
) -> tuple[list[bool], set[int]]:
    keep_mask = [label in (EditTag.EQUAL, EditTag.INSERT) for label in labels]
    active = {i + 1 for i, label in enumerate(labels) if label is EditTag.INSERT}
    if bos_label is EditTag.INSERT:
        active.add(0)
    return keep_mask, active


def _mask_from_alignment(alignment: EditAlignment) -> tuple[list[bool], set[int]]:
    keep_mask = [tag is EditTag.EQUAL for tag in alignment.source_tags]
    active = {g for g, toks in alignment.insertions.items() if toks}
    return keep_mask, active


def template_from_tags(
    source: Sentence,
    alignment_or_labels: EditAlignment | Sequence[EditTag],
    bos_label: EditTag = EditTag.EQUAL,
) -> Template:
    """Template whose gaps cover every non-EQUAL region and live insertion point."""
    tokens = source.token_texts()
    if isinstance(alignment_or_labels, EditAlignment):
        keep_mask, active = _mask_from_alignment(alignment_or_labels)
    else:
        labels = [EditTag(l) for l in alignment_or_labels]
        keep_mask, active = _mask_from_labels(labels, bos_label)
    if len(keep_mask) != len(tokens):
        raise TemplateError(
            f"{len(keep_mask)} labels for {len(tokens)} tokens"
        )
    return _segments_from_mask(tokens, keep_mask, active)


def template_from_slots(
    source: Sentence,
    slots: SlotSet | Iterable[str],
    tables: NormTables | None = None,
) -> Template:
    """Keep only the slots, in source order, with gaps everywhere else.

    Leading and trailing gaps are always present: informal rewrites freely
    add prefixes and suffixes. An empty slot set yields a single gap.
    """
    spans = sorted(slotmetric.locate_slots(source, slots, tables))
    tokens = source.token_texts()
    segments: list[Keep | Gap] = [Gap(0)]
    gap_index = 1
    for start, end in spans:
        segments.append(Keep(tuple(tokens[start:end])))
        segments.append(Gap(gap_index))
        gap_index += 1
    return Template(tuple(segments))


def template_union(
    source: Sentence,
    slots: SlotSet | Iterable[str],
    labels: Sequence[EditTag],
    tables: NormTables | None = None,
    bos_label: EditTag = EditTag.EQUAL,
) -> Template:
    """Keep the union of slot-covered positions and EQUAL-labelled positions.

    Insertion gaps from the labels survive except inside a slot span: a slot
    is kept verbatim, so no gap may split it.
    """
    tokens = source.token_texts()
    labels = [EditTag(l) for l in labels]
    if len(labels) != len(tokens):
        raise TemplateError(f"{len(labels)} labels for {len(tokens)} tokens")
    keep_mask, active = _mask_from_labels(labels, bos_label)
    spans = slotmetric.locate_slots(source, slots, tables)
    for start, end in spans:
        for i in range(start, end):
            keep_mask[i] = True
        active -= set(range(start + 1, end))
    return _segments_from_mask(tokens, keep_mask, active)


def _keep_spans(template: Template, source: Sentence, alignment: EditAlignment) -> list[tuple[int, int]]:
    """Resolve each keep run to a source span consistent with the alignment.

    Greedy leftmost placement: a keep run must match the source tokens, carry
    EQUAL tags throughout, and contain no live insertion point strictly
    inside. Raises TemplateError when the template cannot have come from this
    pair.
    """
    tokens = source.token_texts()
    tags = alignment.source_tags
    n = len(tokens)
    if len(tags) != n:
        raise TemplateError("alignment does not cover the source sentence")
    spans: list[tuple[int, int]] = []
    pos = 0
    for seg in template.segments:
        if not isinstance(seg, Keep):
            continue
        width = len(seg.tokens)
        found = None
        for start in range(pos, n - width + 1):
            if tuple(tokens[start : start + width]) != seg.tokens:
                continue
            if any(tags[i] is not EditTag.EQUAL for i in range(start, start + width)):
                continue
            if any(alignment.insertions.get(i) for i in range(start + 1, start + width)):
                continue
            found = start
            break
        if found is None:
            raise TemplateError(
                f"keep run {' '.join(seg.tokens)!r} has no EQUAL-aligned source span"
            )
        spans.append((found, found + width))
        pos = found + width
    first, last = template.segments[0], template.segments[-1]
    if isinstance(first, Keep) and (spans[0][0] != 0 or alignment.insertions.get(0)):
        raise TemplateError("template starts with a keep but the target does not")
    if isinstance(last, Keep) and (spans[-1][1] != n or alignment.insertions.get(n)):
        raise TemplateError("template ends with a keep but the target does not")
    return spans


def gold_fillers(template: Template, alignment: EditAlignment, source: Sentence) -> list[str]:
    """Target-side text each gap must produce to reconstruct the rewrite.

    A gap owns the source positions between its neighbouring keep runs plus
    the insertion points on both of its boundaries; EQUAL positions inside a
    gap re-emit their source token, deletions emit nothing.
    """
    tokens = source.token_texts()
    n = len(tokens)
    spans = _keep_spans(template, source, alignment)
    fillers: list[str] = []
    keep_idx = 0
    pos = 0
    for seg in template.segments:
        if isinstance(seg, Keep):
            pos = spans[keep_idx][1]
            keep_idx += 1
            continue
        end = spans[keep_idx][0] if keep_idx < len(spans) else n
        parts: list[str] = []
        for i in range(pos, end):
            parts.extend(alignment.insertions.get(i, ()))
            tag = alignment.source_tags[i]
            if tag is EditTag.EQUAL:
                parts.append(tokens[i])
            elif tag is EditTag.REPLACE:
                run = alignment.replacements.get(i)
                if not run:
                    raise TemplateError(f"REPLACE position {i} has no replacement tokens")
                parts.extend(run)
        parts.extend(alignment.insertions.get(end, ()))
        fillers.append(" ".join(parts))
        pos = end
    return fillers


def render_fillers(fillers: Sequence[str], sentinel_style: str = "gap") -> str:
    pieces = []
    for index, filler in enumerate(fillers):
        pieces.append(_sentinel(sentinel_style, index))
        if filler:
            pieces.append(filler)
    return " ".join(pieces)


def parse_fillers(target_text: str, gap_count: int, sentinel_style: str = "gap") -> list[str]:
    """Split infiller output back into per-gap fillers by its sentinels."""
    pattern = SENTINEL_RES[sentinel_style]
    markers = list(pattern.finditer(target_text))
    indices = [int(m.group(1)) for m in markers]
    if indices != list(range(gap_count)):
        raise TemplateError(
            f"expected sentinels 0..{gap_count - 1} in order, got {indices}"
        )
    if markers and target_text[: markers[0].start()].strip():
        raise TemplateError("text before the first sentinel")
    fillers = []
    for k, marker in enumerate(markers):
        end = markers[k + 1].start() if k + 1 < len(markers) else len(target_text)
        fillers.append(" ".join(target_text[marker.end() : end].split()))
    return fillers


def make_infill_example(
    pair: ParallelPair,
    template: Template,
    alignment: EditAlignment,
    sentinel_style: str = "gap",
) -> InfillExample:
    """Training example: source + template in, sentinel-tagged fillers out."""
    fillers = gold_fillers(template, alignment, pair.formal)
    input_text = pair.formal.raw + " | " + template.serialize(sentinel_style)
    return InfillExample(input_text, render_fillers(fillers, sentinel_style))


def fill_template(template: Template, fillers: Sequence[str]) -> str:
    """Splice fillers into the gaps; single-spaced output."""
    if len(fillers) != template.gap_count:
        raise TemplateError(
            f"template has {template.gap_count} gaps but {len(fillers)} fillers given"
        )
    parts = []
    for seg in template.segments:
        if isinstance(seg, Keep):
            parts.extend(seg.tokens)
        else:
            parts.append(fillers[seg.index])
    return " ".join(" ".join(parts).split())


def _is_punct(token: str) -> bool:
    return all(not ch.isalnum() for ch in token)


def derive_slots(pair: ParallelPair, stopwords: frozenset[str] | None = None) -> SlotSet:
    """Slots = maximal EQUAL runs of the pair's alignment, minus noise.

    Runs made only of stopwords/punctuation are dropped; surviving runs are
    trimmed of leading/trailing stopwords and punctuation.
    """
    if stopwords is None:
        stopwords = textnorm.default_stopwords()
    alignment = editalign.align(pair.formal, pair.informal)
    tokens = pair.formal.token_texts()
    slots: list[str] = []
    run: list[str] = []
    for token, tag in zip(tokens, alignment.source_tags):
        if tag is EditTag.EQUAL:
            run.append(token)
        else:
            _flush_run(run, stopwords, slots)
            run = []
    _flush_run(run, stopwords, slots)
    return SlotSet(tuple(slots))


def _flush_run(run: list[str], stopwords: frozenset[str], out: list[str]) -> None:
    def is_noise(token: str) -> bool:
        return token.lower() in stopwords or _is_punct(token)

    start, end = 0, len(run)
    while start < end and is_noise(run[start]):
        start += 1
    while end > start and is_noise(run[end - 1]):
        end -= 1
    if end > start:
        out.append(" ".join(run[start:end]))
