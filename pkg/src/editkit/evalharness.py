"""Joint-score aggregation, leaderboards, and significance testing.

The joint measure is the mean over sentences of the per-sentence product of
style, content, slot, and fluency scores. It is NOT the product of the four
column means; tests only ever assert the definitional identity.
"""

import math
import random
from dataclasses import dataclass
from statistics import fmean
from typing import Mapping, NamedTuple, Sequence

from .corpus import ExternalScores
from .slotmetric import SlotScore

_PRODUCT_TOL = 1e-12


@dataclass(frozen=True)
class EvalRecord:
    id: str
    style: float
    content: float
    slot: float
    fluency: float
    product: float

    def __post_init__(self):
        for name in ("style", "content", "slot", "fluency", "product"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} {value!r} outside [0, 1]")
        expected = self.style * self.content * self.slot * self.fluency
        if abs(self.product - expected) > _PRODUCT_TOL:
            raise ValueError(f"product {self.product} != {expected}")

    @classmethod
    def from_measures(cls, id, style, content, slot, fluency) -> "EvalRecord":
        return cls(id, style, content, slot, fluency, style * content * slot * fluency)


class LeaderboardRow(NamedTuple):
    style: float
    content: float
    slot: float
    fluency: float
    joint: float


@dataclass(frozen=True)
class Leaderboard:
    """System rows sorted by joint score, descending (ties by name)."""

    rows: tuple[tuple[str, LeaderboardRow], ...]


def joint_score(records: Sequence[EvalRecord]) -> float:
    """Mean over sentences of the per-sentence four-way product."""
    if not records:
        raise ValueError("joint_score of no records")
    return fmean(r.product for r in records)


def make_records(
    external: Mapping[str, ExternalScores],
    slot_scores: Mapping[str, "SlotScore | float"],
) -> list[EvalRecord]:
    """Join external classifier scores with slot scores on sentence id."""
    missing_external = sorted(set(slot_scores) - set(external))
    missing_slots = sorted(set(external) - set(slot_scores))
    problems = []
    if missing_external:
        problems.append(f"ids without external scores: {', '.join(missing_external)}")
    if missing_slots:
        problems.append(f"ids without slot scores: {', '.join(missing_slots)}")
    if problems:
        raise ValueError("; ".join(problems))
    records = []
    for sid in sorted(external):
        ext = external[sid]
        slot = slot_scores[sid]
        slot_value = slot.value if isinstance(slot, SlotScore) else float(slot)
        records.append(EvalRecord.from_measures(sid, ext.style, ext.content, slot_value, ext.fluency))
    return records


def build_leaderboard(records_by_system: Mapping[str, Sequence[EvalRecord]]) -> Leaderboard:
    entries = []
    for name in sorted(records_by_system):
        records = records_by_system[name]
        row = LeaderboardRow(
            style=fmean(r.style for r in records),
            content=fmean(r.content for r in records),
            slot=fmean(r.slot for r in records),
            fluency=fmean(r.fluency for r in records),
            joint=joint_score(records),
        )
        entries.append((name, row))
    entries.sort(key=lambda item: (-item[1].joint, item[0]))
    return Leaderboard(tuple(entries))


class WilcoxonResult(NamedTuple):
    statistic: float
    p_value: float


def _average_ranks(values: Sequence[float]) -> list[float]:
    order = sorted(range(len(values)), key=lambda i: values[i])
    ranks = [0.0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        mean_rank = (i + j) / 2 + 1
        for k in range(i, j + 1):
            ranks[order[k]] = mean_rank
        i = j + 1
    return ranks


def _exact_p(ranks: Sequence[float], w_plus: float) -> float:
    # Ranks are multiples of 0.5 (average ranks), so doubling makes them
    # integral and the null distribution of 2*W+ enumerable by convolution.
    scaled = [round(2 * r) for r in ranks]
    total = sum(scaled)
    counts = [0] * (total + 1)
    counts[0] = 1
    for r in scaled:
        for w in range(total - r, -1, -1):
            if counts[w]:
                counts[w + r] += counts[w]
    target = round(2 * w_plus)
    n_assignments = 2 ** len(ranks)
    upper = sum(counts[target:])
    lower = sum(counts[: target + 1])
    return min(1.0, 2 * min(upper, lower) / n_assignments)


def _approx_p(diffs: Sequence[float], ranks: Sequence[float], w_plus: float) -> float:
    n = len(diffs)
    mean = n * (n + 1) / 4
    variance = n * (n + 1) * (2 * n + 1) / 24
    tie_groups: dict[float, int] = {}
    for d in diffs:
        tie_groups[abs(d)] = tie_groups.get(abs(d), 0) + 1
    variance -= sum(t**3 - t for t in tie_groups.values()) / 48
    if variance <= 0:
        raise ValueError("degenerate variance; all differences tied at one magnitude")
    d = w_plus - mean
    if d > 0:
        d -= 0.5
    elif d < 0:
        d += 0.5
    z = d / math.sqrt(variance)
    return math.erfc(abs(z) / math.sqrt(2))


def wilcoxon_signed_rank(
    a: Sequence[float], b: Sequence[float], method: str = "auto"
) -> WilcoxonResult:
    """Two-sided Wilcoxon signed-rank test on paired samples.

    Zero differences are dropped. The statistic is the positive rank sum W+.
    The exact null distribution is enumerated for n <= 20; larger samples use
    the normal approximation with tie and continuity corrections. `method`
    can force "exact" or "approx".
    """
    if len(a) != len(b):
        raise ValueError("paired samples must have equal length")
    diffs = [x - y for x, y in zip(a, b) if x != y]
    if not diffs:
        raise ValueError("all differences are zero: no information")
    n = len(diffs)
    if n < 5:
        raise ValueError(f"need at least 5 non-zero differences, got {n}")
    ranks = _average_ranks([abs(d) for d in diffs])
    w_plus = sum(r for d, r in zip(diffs, ranks) if d > 0)
    if method not in ("auto", "exact", "approx"):
        raise ValueError(f"unknown method {method!r}")
    use_exact = method == "exact" or (method == "auto" and n <= 20)
    p = _exact_p(ranks, w_plus) if use_exact else _approx_p(diffs, ranks, w_plus)
    return WilcoxonResult(w_plus, p)


class SplitSignificance(NamedTuple):
    p_value: float
    statistic: float
    means_a: tuple[float, ...]
    means_b: tuple[float, ...]


def significance_by_splits(
    scores_a: Mapping[str, float],
    scores_b: Mapping[str, float],
    n_splits: int = 30,
    split_size: int = 900,
    *,
    seed: int,
) -> SplitSignificance:
    """Wilcoxon test over per-split mean scores of two systems.

    Each split is an independent draw of `split_size` ids without replacement
    (splits may overlap each other: with fewer ids than n_splits*split_size a
    partition is impossible). Identical seeds give identical splits.
    """
    ids = sorted(scores_a)
    if set(scores_b) != set(ids):
        raise ValueError("systems are scored on different id sets")
    if split_size > len(ids):
        raise ValueError(f"split size {split_size} exceeds population {len(ids)}")
    rng = random.Random(seed)
    means_a: list[float] = []
    means_b: list[float] = []
    for _ in range(n_splits):
        chosen = rng.sample(ids, split_size)
        means_a.append(fmean(scores_a[i] for i in chosen))
        means_b.append(fmean(scores_b[i] for i in chosen))
    statistic, p_value = wilcoxon_signed_rank(means_a, means_b)
    return SplitSignificance(p_value, statistic, tuple(means_a), tuple(means_b))
