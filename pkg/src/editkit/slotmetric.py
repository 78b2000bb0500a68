"""Slot-preservation scoring: exact matching in original and normalized form,
with a character n-gram F-score weighting approximate matches.

Every slot claims at most one hypothesis span. Claims are tracked over raw
token positions (normalized tokens carry their raw spans), so a duplicate
slot cannot re-claim the same surface text through a different stage of the
cascade.
"""

import enum
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Mapping

from . import corpus, textnorm
from .corpus import ParallelPair, Sentence, SlotSet
from .errors import EditkitError, SlotNotFoundError
from .textnorm import NormTables

DEFAULT_BETA = 2.0
DEFAULT_MAX_ORDER = 6
DEFAULT_APPROX_FLOOR = 0.1


class MatchKind(str, enum.Enum):
    EXACT_ORIGINAL = "exact_original"
    EXACT_NORMALIZED = "exact_normalized"
    APPROX = "approx"
    MISS = "miss"


@dataclass(frozen=True)
class SlotMatch:
    slot: str
    kind: MatchKind
    weight: float
    matched_span: str | None = None

    def __post_init__(self):
        if self.kind in (MatchKind.EXACT_ORIGINAL, MatchKind.EXACT_NORMALIZED):
            ok = self.weight == 1.0
        elif self.kind is MatchKind.MISS:
            ok = self.weight == 0.0
        else:
            ok = 0.0 < self.weight < 1.0 and self.matched_span is not None
        if not ok:
            raise ValueError(f"inconsistent SlotMatch: {self.kind.value} weight {self.weight}")


@dataclass(frozen=True)
class SlotScore:
    value: float
    matches: tuple[SlotMatch, ...] = ()


def chrf(
    hypothesis: str,
    reference: str,
    *,
    max_order: int = DEFAULT_MAX_ORDER,
    beta: float = DEFAULT_BETA,
) -> float:
    """Character n-gram F-score over whitespace-stripped lowercase text.

    Per order: clipped precision and recall combined with F_beta (beta=2
    weights recall); the final score is the arithmetic mean over orders for
    which the reference has any n-grams.
    """
    hyp = "".join(hypothesis.lower().split())
    ref = "".join(reference.lower().split())
    if not hyp or not ref:
        raise ValueError("chrf requires non-empty strings")
    beta_sq = beta * beta
    scores = []
    for order in range(1, max_order + 1):
        ref_total = len(ref) - order + 1
        if ref_total <= 0:
            continue
        ref_grams = Counter(ref[i : i + order] for i in range(ref_total))
        hyp_total = len(hyp) - order + 1
        if hyp_total <= 0:
            scores.append(0.0)
            continue
        hyp_grams = Counter(hyp[i : i + order] for i in range(hyp_total))
        overlap = sum((hyp_grams & ref_grams).values())
        precision = overlap / hyp_total
        recall = overlap / ref_total
        denom = beta_sq * precision + recall
        scores.append((1 + beta_sq) * precision * recall / denom if denom else 0.0)
    return sum(scores) / len(scores)


def _find_unclaimed(haystack: list[str], needle: list[str], claimed, span_of) -> tuple[int, int] | None:
    """Leftmost contiguous match of needle whose raw positions are all free."""
    width = len(needle)
    if width == 0 or width > len(haystack):
        return None
    for start in range(len(haystack) - width + 1):
        if haystack[start : start + width] != needle:
            continue
        raw_start, raw_end = span_of(start, start + width)
        if not any(claimed[raw_start:raw_end]):
            return start, start + width
    return None


def _match_one(
    slot: str,
    hyp_tokens: list[str],
    hyp_lower: list[str],
    norm: list[textnorm.Spanned],
    claimed: list[bool],
    tables: NormTables,
    beta: float,
    max_order: int,
    approx_floor: float,
) -> SlotMatch:
    slot_tokens = corpus.tokenize(slot).token_texts()
    slot_lower = [t.lower() for t in slot_tokens]

    def raw_span(i: int, j: int) -> tuple[int, int]:
        return i, j

    found = _find_unclaimed(hyp_lower, slot_lower, claimed, raw_span)
    if found:
        start, end = found
        claimed[start:end] = [True] * (end - start)
        return SlotMatch(slot, MatchKind.EXACT_ORIGINAL, 1.0, " ".join(hyp_tokens[start:end]))

    slot_norm = textnorm.normalize_tokens(slot_tokens, tables)
    norm_texts = [text for text, _, _ in norm]

    def norm_span(i: int, j: int) -> tuple[int, int]:
        return norm[i][1], norm[j - 1][2]

    found = _find_unclaimed(norm_texts, slot_norm, claimed, norm_span)
    if found:
        start, end = found
        raw_start, raw_end = norm_span(start, end)
        claimed[raw_start:raw_end] = [True] * (raw_end - raw_start)
        return SlotMatch(slot, MatchKind.EXACT_NORMALIZED, 1.0, " ".join(hyp_tokens[raw_start:raw_end]))

    slot_text = " ".join(slot_norm)
    max_width = len(slot_norm) + 2
    best_weight = -1.0
    best_span: tuple[int, int] | None = None
    for start in range(len(norm_texts)):
        for width in range(1, min(max_width, len(norm_texts) - start) + 1):
            raw_start, raw_end = norm_span(start, start + width)
            if any(claimed[raw_start:raw_end]):
                continue
            candidate = " ".join(norm_texts[start : start + width])
            weight = chrf(candidate, slot_text, max_order=max_order, beta=beta)
            if weight > best_weight:  # strict: ties keep the leftmost, shortest span
                best_weight = weight
                best_span = (raw_start, raw_end)
    if best_span is not None and best_weight >= approx_floor:
        raw_start, raw_end = best_span
        if best_weight >= 1.0:
            # ChrF can reach 1.0 on differently tokenized surfaces; treat as
            # a normalized exact match so the SlotMatch invariants hold.
            claimed[raw_start:raw_end] = [True] * (raw_end - raw_start)
            return SlotMatch(
                slot, MatchKind.EXACT_NORMALIZED, 1.0, " ".join(hyp_tokens[raw_start:raw_end])
            )
        claimed[raw_start:raw_end] = [True] * (raw_end - raw_start)
        return SlotMatch(
            slot, MatchKind.APPROX, best_weight, " ".join(hyp_tokens[raw_start:raw_end])
        )
    return SlotMatch(slot, MatchKind.MISS, 0.0, None)


def slot_score(
    hypothesis: Sentence,
    slots: SlotSet | Iterable[str],
    tables: NormTables | None = None,
    *,
    beta: float = DEFAULT_BETA,
    max_order: int = DEFAULT_MAX_ORDER,
    approx_floor: float = DEFAULT_APPROX_FLOOR,
) -> SlotScore:
    """Score how well `hypothesis` preserves `slots`.

    Cascade per slot: case-insensitive token-sequence match, then match of
    normalized forms, then best-ChrF approximate match over hypothesis token
    n-grams (window 1..slot_len+2); below `approx_floor` counts as a miss.
    The value is the weight sum over the slot count; no slots scores 1.0.
    """
    tables = tables or textnorm.default_tables()
    hyp_tokens = hypothesis.token_texts()
    hyp_lower = [t.lower() for t in hyp_tokens]
    norm = textnorm.normalize_tokens_spanned(hyp_tokens, tables)
    claimed = [False] * len(hyp_tokens)
    matches = [
        _match_one(slot, hyp_tokens, hyp_lower, norm, claimed, tables, beta, max_order, approx_floor)
        for slot in slots
    ]
    value = 1.0 if not matches else sum(m.weight for m in matches) / len(matches)
    return SlotScore(value, tuple(matches))


def corpus_slot_scores(
    pairs: Iterable[ParallelPair],
    hypotheses: Mapping[str, Sentence],
    tables: NormTables | None = None,
    **kwargs,
) -> dict[str, SlotScore]:
    """Score every pair's slots against the system hypothesis for its id."""
    pairs = list(pairs)
    missing = sorted(p.id for p in pairs if p.id not in hypotheses)
    if missing:
        raise EditkitError(f"missing hypothesis for id(s): {', '.join(missing)}")
    return {p.id: slot_score(hypotheses[p.id], p.slots, tables, **kwargs) for p in pairs}


def locate_slots(
    sentence: Sentence,
    slots: SlotSet | Iterable[str],
    tables: NormTables | None = None,
) -> list[tuple[int, int]]:
    """Find each slot's token span in `sentence`, exact or normalized form.

    Spans are disjoint (duplicate slots need their own occurrence); raises
    SlotNotFoundError listing every slot that could not be placed.
    """
    tables = tables or textnorm.default_tables()
    tokens = sentence.token_texts()
    lower = [t.lower() for t in tokens]
    norm = textnorm.normalize_tokens_spanned(tokens, tables)
    norm_texts = [text for text, _, _ in norm]
    claimed = [False] * len(tokens)
    spans: list[tuple[int, int]] = []
    unplaced: list[str] = []
    for slot in slots:
        slot_tokens = corpus.tokenize(slot).token_texts()
        slot_lower = [t.lower() for t in slot_tokens]
        found = _find_unclaimed(lower, slot_lower, claimed, lambda i, j: (i, j))
        if found is None:
            slot_norm = textnorm.normalize_tokens(slot_tokens, tables)
            found_norm = _find_unclaimed(
                norm_texts, slot_norm, claimed, lambda i, j: (norm[i][1], norm[j - 1][2])
            )
            if found_norm is None:
                unplaced.append(slot)
                continue
            start, end = norm[found_norm[0]][1], norm[found_norm[1] - 1][2]
        else:
            start, end = found
        claimed[start:end] = [True] * (end - start)
        spans.append((start, end))
    if unplaced:
        raise SlotNotFoundError(unplaced)
    return spans
