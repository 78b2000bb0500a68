"""Data model and JSONL I/O for parallel formality corpora.

The tokenizer is deliberately rule based: whitespace split plus peeling of
leading/trailing punctuation. Per-token edit tags only need a consistent,
reversible segmentation, so anything learned would be overkill here.
"""

import json
import re
import unicodedata
from dataclasses import dataclass
from typing import Iterable, Iterator

from .errors import CorpusFormatError

PUNCT_CHARS = set(".,!?;:\"'()")

# A leading apostrophe stays attached when it spells a contraction, so
# targets written with detached clitics ("I 'll be back") keep "'ll" as a
# single token.
_CONTRACTION_SUFFIXES = {"ll", "m", "re", "s", "t", "ve", "d", "em"}

_CHUNK_RE = re.compile(r"\S+")


@dataclass(frozen=True)
class Token:
    """A whitespace-free token and its character offset in the raw string."""

    text: str
    char_offset: int


@dataclass(frozen=True)
class Sentence:
    raw: str
    tokens: tuple[Token, ...]

    def token_texts(self) -> list[str]:
        return [t.text for t in self.tokens]

    def __len__(self) -> int:
        return len(self.tokens)


@dataclass(frozen=True)
class SlotSet:
    """Ordered phrases that must survive rewriting; duplicates count twice."""

    slots: tuple[str, ...] = ()

    def __post_init__(self):
        for slot in self.slots:
            if not slot.strip():
                raise ValueError("slots must be non-empty phrases")

    def __iter__(self) -> Iterator[str]:
        return iter(self.slots)

    def __len__(self) -> int:
        return len(self.slots)

    def __bool__(self) -> bool:
        return bool(self.slots)


@dataclass(frozen=True)
class ParallelPair:
    id: str
    formal: Sentence
    informal: Sentence
    slots: SlotSet


@dataclass(frozen=True)
class ExternalScores:
    """Per-sentence scores produced by external classifiers."""

    id: str
    style: float
    content: float
    fluency: float

    def __post_init__(self):
        for name in ("style", "content", "fluency"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} score {value!r} outside [0, 1]")


def tokenize(raw: str) -> Sentence:
    """Split text into tokens, peeling leading/trailing punctuation.

    Interior apostrophes are kept ("don't" is one token), and a leading
    apostrophe followed by a contraction suffix stays attached ("'ll").
    Input is NFC-normalized, so offsets index NFC characters.
    """
    raw = unicodedata.normalize("NFC", raw)
    tokens: list[Token] = []
    for match in _CHUNK_RE.finditer(raw):
        tokens.extend(_split_punct(match.group(), match.start()))
    return Sentence(raw=raw, tokens=tuple(tokens))


def _split_punct(chunk: str, start: int) -> list[Token]:
    core = chunk
    trail: list[Token] = []
    while core and core[-1] in PUNCT_CHARS:
        trail.append(Token(core[-1], start + len(core) - 1))
        core = core[:-1]
    lead: list[Token] = []
    while core and core[0] in PUNCT_CHARS:
        if core[0] == "'" and core[1:].lower() in _CONTRACTION_SUFFIXES:
            break
        lead.append(Token(core[0], start))
        core = core[1:]
        start += 1
    out = lead
    if core:
        out.append(Token(core, start))
    out.extend(reversed(trail))
    return out


def iter_jsonl(path) -> Iterator[tuple[int, dict]]:
    """Yield (line_no, object) for every non-blank line of a JSONL file."""
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusFormatError(path, line_no, None, f"invalid JSON: {exc}") from exc
            if not isinstance(obj, dict):
                raise CorpusFormatError(path, line_no, None, "expected a JSON object")
            yield line_no, obj


def write_jsonl(records: Iterable[dict], path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for record in records:
            fh.write(json.dumps(record, ensure_ascii=False) + "\n")


def expect_str(obj: dict, field: str, path, line_no) -> str:
    value = obj.get(field)
    if not isinstance(value, str):
        kind = "missing" if field not in obj else f"expected string, got {type(value).__name__}"
        raise CorpusFormatError(path, line_no, field, kind)
    return value


def expect_number(obj: dict, field: str, path, line_no) -> float:
    value = obj.get(field)
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        kind = "missing" if field not in obj else f"expected number, got {type(value).__name__}"
        raise CorpusFormatError(path, line_no, field, kind)
    return float(value)


def clean_slots(raw_slots, path=None, line_no=None) -> SlotSet:
    """Build a SlotSet, dropping "--"/blank placeholders used for "no slots"."""
    if not isinstance(raw_slots, list) or not all(isinstance(s, str) for s in raw_slots):
        raise CorpusFormatError(path, line_no, "slots", "expected a list of strings")
    kept = []
    for slot in raw_slots:
        slot = unicodedata.normalize("NFC", slot).strip()
        if slot and slot != "--":
            kept.append(slot)
    return SlotSet(tuple(kept))


def pair_from_obj(obj: dict, path, line_no) -> ParallelPair:
    pid = expect_str(obj, "id", path, line_no)
    formal = expect_str(obj, "formal", path, line_no)
    informal = expect_str(obj, "informal", path, line_no)
    if "slots" not in obj:
        raise CorpusFormatError(path, line_no, "slots", "missing")
    slots = clean_slots(obj["slots"], path, line_no)
    return ParallelPair(pid, tokenize(formal), tokenize(informal), slots)


def read_pairs(path) -> list[ParallelPair]:
    """Read a pairs file; raises CorpusFormatError naming line and field."""
    pairs = []
    seen: set[str] = set()
    for line_no, obj in iter_jsonl(path):
        pair = pair_from_obj(obj, path, line_no)
        if pair.id in seen:
            raise CorpusFormatError(path, line_no, "id", f"duplicate id {pair.id!r}")
        seen.add(pair.id)
        pairs.append(pair)
    return pairs


def write_pairs(pairs: Iterable[ParallelPair], path) -> None:
    write_jsonl(
        (
            {
                "id": p.id,
                "formal": p.formal.raw,
                "informal": p.informal.raw,
                "slots": list(p.slots),
            }
            for p in pairs
        ),
        path,
    )


def read_scores(path) -> dict[str, ExternalScores]:
    """Read per-sentence style/content/fluency scores, validated to [0, 1]."""
    scores: dict[str, ExternalScores] = {}
    for line_no, obj in iter_jsonl(path):
        sid = expect_str(obj, "id", path, line_no)
        if sid in scores:
            raise CorpusFormatError(path, line_no, "id", f"duplicate id {sid!r}")
        values = {}
        for field in ("style", "content", "fluency"):
            value = expect_number(obj, field, path, line_no)
            if not 0.0 <= value <= 1.0:
                raise CorpusFormatError(path, line_no, field, f"value {value} outside [0, 1]")
            values[field] = value
        scores[sid] = ExternalScores(sid, **values)
    return scores


def read_hypotheses(path) -> dict[str, Sentence]:
    """Read system outputs: JSONL objects with "id" and "text"."""
    hyps: dict[str, Sentence] = {}
    for line_no, obj in iter_jsonl(path):
        hid = expect_str(obj, "id", path, line_no)
        if hid in hyps:
            raise CorpusFormatError(path, line_no, "id", f"duplicate id {hid!r}")
        hyps[hid] = tokenize(expect_str(obj, "text", path, line_no))
    return hyps
