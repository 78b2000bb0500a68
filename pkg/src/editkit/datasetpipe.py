"""Evaluation-dataset construction: informality filtering, rewrite flagging,
slot attachment. The rewriting itself is a human step; this pipeline only
emits the worklist.
"""

from dataclasses import dataclass, replace
from typing import Iterable, Mapping, NamedTuple, Sequence

from . import corpus
from .corpus import ParallelPair, SlotSet
from .errors import CorpusFormatError

DEFAULT_INCREASE_THRESHOLD = 0.45


@dataclass(frozen=True)
class CandidatePair:
    pair: ParallelPair
    formality_formal: float
    formality_informal: float
    similarity: float
    needs_rewrite: bool = False

    @property
    def informality_increase(self) -> float:
        return self.formality_formal - self.formality_informal


def read_candidates(path) -> list[CandidatePair]:
    """Pairs schema plus formality_formal/formality_informal/similarity."""
    cands = []
    seen: set[str] = set()
    for line_no, obj in corpus.iter_jsonl(path):
        pair = corpus.pair_from_obj(obj, path, line_no)
        if pair.id in seen:
            raise CorpusFormatError(path, line_no, "id", f"duplicate id {pair.id!r}")
        seen.add(pair.id)
        formal_score = corpus.expect_number(obj, "formality_formal", path, line_no)
        informal_score = corpus.expect_number(obj, "formality_informal", path, line_no)
        similarity = corpus.expect_number(obj, "similarity", path, line_no)
        cands.append(CandidatePair(pair, formal_score, informal_score, similarity))
    return cands


def write_candidates(cands: Iterable[CandidatePair], path) -> None:
    corpus.write_jsonl(
        (
            {
                "id": c.pair.id,
                "formal": c.pair.formal.raw,
                "informal": c.pair.informal.raw,
                "slots": list(c.pair.slots),
                "formality_formal": c.formality_formal,
                "formality_informal": c.formality_informal,
                "similarity": c.similarity,
                "needs_rewrite": c.needs_rewrite,
            }
            for c in cands
        ),
        path,
    )


def filter_by_informality(
    cands: Sequence[CandidatePair], threshold: float = DEFAULT_INCREASE_THRESHOLD
) -> list[CandidatePair]:
    """Keep pairs whose informality increase is strictly above the threshold."""
    return [c for c in cands if c.informality_increase > threshold]


def flag_rewrites(cands: Sequence[CandidatePair], sim_threshold: float) -> list[CandidatePair]:
    """Mark pairs whose similarity falls below the threshold for manual rewriting."""
    return [replace(c, needs_rewrite=c.similarity < sim_threshold) for c in cands]


class AttachResult(NamedTuple):
    pairs: list[ParallelPair]
    missing_ids: list[str]


def attach_slots(
    cands: Sequence[CandidatePair], slot_source: Mapping[str, SlotSet]
) -> AttachResult:
    """Copy slots from `slot_source` onto the candidates.

    Candidates without an entry get an empty slot set and are reported in
    missing_ids rather than failing the pipeline.
    """
    pairs = []
    missing = []
    for cand in cands:
        slots = slot_source.get(cand.pair.id)
        if slots is None:
            slots = SlotSet()
            missing.append(cand.pair.id)
        pairs.append(replace(cand.pair, slots=slots))
    return AttachResult(pairs, missing)


def read_slot_map(path) -> dict[str, SlotSet]:
    """JSONL of {"id": ..., "slots": [...]} -> id to SlotSet."""
    slot_map: dict[str, SlotSet] = {}
    for line_no, obj in corpus.iter_jsonl(path):
        sid = corpus.expect_str(obj, "id", path, line_no)
        if sid in slot_map:
            raise CorpusFormatError(path, line_no, "id", f"duplicate id {sid!r}")
        if "slots" not in obj:
            raise CorpusFormatError(path, line_no, "slots", "missing")
        slot_map[sid] = corpus.clean_slots(obj["slots"], path, line_no)
    return slot_map
