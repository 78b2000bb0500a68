"""Normalization cascade backing slot matching.

Pipeline order: lowercase, rule-based lemmatization, number-word to digit,
time-expression canonicalization (which may merge a multi-token span into one
canonical token), then place-alias/abbreviation mapping. The cascade only has
to be *consistent* between slots and hypotheses; where the lemmatizer is
linguistically wrong it is wrong on both sides, and matching degrades to the
ChrF fallback rather than breaking.
"""

import functools
import re
from importlib import resources
from typing import Callable, Iterable, Mapping

_VOWELS = "aeiou"

# Irregular forms plus identity entries protecting words the suffix rules
# would mangle in ways the time grammar depends on ("morning", "evening").
# "am" is deliberately absent: mapping it to "be" would swallow "9 am".
_IRREGULAR = {
    "began": "begin",
    "became": "become",
    "bought": "buy",
    "brought": "bring",
    "built": "build",
    "came": "come",
    "children": "child",
    "did": "do",
    "done": "do",
    "during": "during",
    "evening": "evening",
    "feet": "foot",
    "felt": "feel",
    "found": "find",
    "gave": "give",
    "geese": "goose",
    "gone": "go",
    "got": "get",
    "heard": "hear",
    "held": "hold",
    "kept": "keep",
    "knew": "know",
    "left": "leave",
    "lost": "lose",
    "made": "make",
    "meant": "mean",
    "men": "man",
    "met": "meet",
    "mice": "mouse",
    "morning": "morning",
    "news": "news",
    "paid": "pay",
    "ran": "run",
    "said": "say",
    "sat": "sit",
    "saw": "see",
    "sent": "send",
    "spent": "spend",
    "spoke": "speak",
    "stood": "stand",
    "teeth": "tooth",
    "thing": "thing",
    "anything": "anything",
    "everything": "everything",
    "nothing": "nothing",
    "something": "something",
    "thought": "think",
    "told": "tell",
    "took": "take",
    "went": "go",
    "within": "within",
    "women": "woman",
    "won": "win",
    "wrote": "write",
    "king": "king",
    "ring": "ring",
    "spring": "spring",
    "string": "string",
    "wing": "wing",
}

_UNDOUBLE = {"bb", "dd", "ff", "gg", "kk", "mm", "nn", "pp", "rr", "tt"}


def lemmatize(token: str) -> str:
    """Rule-based lemma of a lowercase token; idempotent, approximate."""
    if token in _IRREGULAR:
        return _IRREGULAR[token]
    if len(token) > 2 and token.endswith("'s"):
        token = token[:-2]
    if not token.isalpha():
        return token
    if len(token) >= 5 and token.endswith("ies"):
        return token[:-3] + "y"
    if token.endswith(("ches", "shes", "xes", "zes", "sses", "oes")):
        return token[:-2]
    if (
        len(token) >= 4
        and token.endswith("s")
        and not token.endswith(("ss", "us", "is"))
    ):
        return token[:-1]
    if len(token) >= 5 and token.endswith("ied"):
        return token[:-3] + "y"
    if len(token) >= 5 and token.endswith("ed"):
        return _restore_stem(token[:-2])
    if len(token) >= 5 and token.endswith("ing"):
        stem = token[:-3]
        if len(stem) >= 3:
            return _restore_stem(stem)
    return token


def _restore_stem(stem: str) -> str:
    if stem[-2:] in _UNDOUBLE:
        return stem[:-1]
    if (
        len(stem) >= 3
        and stem[-1] not in _VOWELS + "wxy"
        and stem[-2] in _VOWELS
        and stem[-3] not in _VOWELS
    ):
        return stem + "e"
    return stem


_PERIOD_WORDS = {"morning": "am", "afternoon": "pm", "evening": "pm", "night": "pm"}


def _to_24h(hour_s: str, minute_s: str | None, period: str | None) -> str | None:
    hour = int(hour_s)
    minute = int(minute_s) if minute_s else 0
    if minute > 59:
        return None
    if period == "am":
        if not 1 <= hour <= 12:
            return None
        hour = 0 if hour == 12 else hour
    elif period == "pm":
        if not 1 <= hour <= 12:
            return None
        hour = 12 if hour == 12 else hour + 12
    elif hour > 23:
        return None
    return f"{hour:02d}:{minute:02d}"


def _period_time(m: re.Match) -> str | None:
    return _to_24h(m.group(1), m.group(2), _PERIOD_WORDS[m.group(3)])


def _oclock_time(m: re.Match) -> str | None:
    return _to_24h(m.group(1), m.group(2), None)


def _ampm_time(m: re.Match) -> str | None:
    return _to_24h(m.group(1), m.group(2), "am" if m.group(3)[0] == "a" else "pm")


# Tried in order against space-joined token spans, longest span first.
TIME_PATTERNS: tuple[tuple[re.Pattern, Callable[[re.Match], str | None]], ...] = (
    (
        re.compile(r"(\d{1,2})(?::(\d{2}))? o'?clock in the (morning|afternoon|evening|night)"),
        _period_time,
    ),
    (
        re.compile(r"(\d{1,2})(?::(\d{2}))? in the (morning|afternoon|evening|night)"),
        _period_time,
    ),
    (re.compile(r"(\d{1,2})(?::(\d{2}))? o'?clock"), _oclock_time),
    (re.compile(r"(\d{1,2})(?::(\d{2}))? ?(am|pm|a\.m\.?|p\.m\.?)"), _ampm_time),
)

_MAX_TIME_SPAN = 5


def _lemma_key(phrase: str) -> str:
    return " ".join(lemmatize(w) for w in phrase.lower().split())


class NormTables:
    """Lookup tables for the cascade; immutable after construction.

    Surface keys are also registered in lemmatized form, because the span
    lookup runs after lemmatization; canonical values are registered as keys
    of themselves, which makes every canonical form a fixed point.
    """

    def __init__(
        self,
        place_aliases: Mapping[str, str],
        abbreviations: Mapping[str, str],
        number_words: Mapping[str, int],
        time_patterns=None,
    ):
        self.place_aliases = dict(place_aliases)
        self.abbreviations = dict(abbreviations)
        self.number_words = {k.lower(): int(v) for k, v in number_words.items()}
        self.time_patterns = tuple(time_patterns if time_patterns is not None else TIME_PATTERNS)
        self._span_lookup: dict[str, str] = {}
        for mapping in (self.abbreviations, self.place_aliases):  # places win collisions
            for surface, canonical in mapping.items():
                canonical = canonical.lower()
                for key in (surface.lower(), _lemma_key(surface), canonical, _lemma_key(canonical)):
                    self._span_lookup[key] = canonical
        self._max_span = max((k.count(" ") + 1 for k in self._span_lookup), default=1)

    @classmethod
    def load(cls, place_path=None, abbrev_path=None, number_path=None) -> "NormTables":
        return cls(
            place_aliases=read_table(place_path) if place_path else _builtin_table("place_aliases.tsv"),
            abbreviations=read_table(abbrev_path) if abbrev_path else _builtin_table("abbreviations.tsv"),
            number_words=(
                read_table(number_path) if number_path else _builtin_table("number_words.tsv")
            ),
        )


def read_table(path) -> dict[str, str]:
    """Read a surface<TAB>canonical table; '#' lines are comments."""
    table: dict[str, str] = {}
    with open(path, encoding="utf-8") as fh:
        table.update(_parse_table_lines(fh, str(path)))
    return table


def _parse_table_lines(lines: Iterable[str], origin: str) -> dict[str, str]:
    table: dict[str, str] = {}
    for line_no, line in enumerate(lines, 1):
        line = line.rstrip("\n")
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 2 or not parts[0].strip() or not parts[1].strip():
            raise ValueError(f"{origin}:{line_no}: expected 'surface<TAB>canonical'")
        table[parts[0].strip().lower()] = parts[1].strip()
    return table


def _builtin_table(name: str) -> dict[str, str]:
    text = resources.files("editkit").joinpath("data", name).read_text(encoding="utf-8")
    return _parse_table_lines(text.splitlines(), name)


@functools.lru_cache(maxsize=1)
def default_tables() -> NormTables:
    return NormTables.load()


@functools.lru_cache(maxsize=1)
def default_stopwords() -> frozenset[str]:
    text = resources.files("editkit").joinpath("data", "stopwords.txt").read_text(encoding="utf-8")
    return frozenset(w.strip().lower() for w in text.splitlines() if w.strip())


def canonical_time(span: Iterable[str], tables: NormTables | None = None) -> str | None:
    """Canonicalize a full token span as a time, e.g. ["9", "a.m."] -> "09:00".

    Number words are mapped to digits first, so ["nine", "in", "the",
    "evening"] parses. Returns None when the span is not in the grammar.
    """
    tables = tables or default_tables()
    toks = [t.lower() for t in span]
    toks = [str(tables.number_words[t]) if t in tables.number_words else t for t in toks]
    joined = " ".join(toks)
    for pattern, canonicalizer in tables.time_patterns:
        m = pattern.fullmatch(joined)
        if m:
            value = canonicalizer(m)
            if value:
                return value
    return None


Spanned = tuple[str, int, int]  # (text, first raw index, one past last raw index)


def normalize_tokens_spanned(tokens: Iterable[str], tables: NormTables | None = None) -> list[Spanned]:
    """Run the cascade, tracking which raw token range each output covers."""
    tables = tables or default_tables()
    items: list[Spanned] = [(tok.lower(), i, i + 1) for i, tok in enumerate(tokens)]
    items = [(lemmatize(t) if " " not in t else t, s, e) for t, s, e in items]
    items = [
        (str(tables.number_words[t]) if t in tables.number_words else t, s, e)
        for t, s, e in items
    ]
    items = _merge_times(items, tables)
    return _map_spans(items, tables)


def normalize_tokens(tokens: Iterable[str], tables: NormTables | None = None) -> list[str]:
    return [text for text, _, _ in normalize_tokens_spanned(tokens, tables)]


def _merge_times(items: list[Spanned], tables: NormTables) -> list[Spanned]:
    out: list[Spanned] = []
    i = 0
    while i < len(items):
        merged = None
        if items[i][0][:1].isdigit():
            for width in range(min(_MAX_TIME_SPAN, len(items) - i), 0, -1):
                window = items[i : i + width]
                joined = " ".join(text for text, _, _ in window)
                for pattern, canonicalizer in tables.time_patterns:
                    m = pattern.fullmatch(joined)
                    if m:
                        value = canonicalizer(m)
                        if value:
                            merged = (value, window[0][1], window[-1][2], width)
                            break
                if merged:
                    break
        if merged:
            text, start, end, width = merged
            out.append((text, start, end))
            i += width
        else:
            out.append(items[i])
            i += 1
    return out


def _map_spans(items: list[Spanned], tables: NormTables) -> list[Spanned]:
    lookup = tables._span_lookup
    out: list[Spanned] = []
    i = 0
    while i < len(items):
        replaced = False
        for width in range(min(tables._max_span, len(items) - i), 0, -1):
            window = items[i : i + width]
            key = " ".join(text for text, _, _ in window)
            canonical = lookup.get(key)
            if canonical is not None:
                out.append((canonical, window[0][1], window[-1][2]))
                i += width
                replaced = True
                break
        if not replaced:
            out.append(items[i])
            i += 1
    return out
