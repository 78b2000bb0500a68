"""editkit: edit-tag extraction, gap-infill templates, and slot-preservation
evaluation for content-preserving formality transfer corpora.

Neural taggers/infillers/classifiers live outside this package; they interact
through the JSONL interfaces of each module.
"""

from .corpus import (
    ExternalScores,
    ParallelPair,
    Sentence,
    SlotSet,
    Token,
    read_hypotheses,
    read_pairs,
    read_scores,
    tokenize,
    write_pairs,
)
from .editalign import (
    EditAlignment,
    EditTag,
    TaggerExample,
    align,
    apply_edits,
    tag_distribution,
    to_tagger_example,
)
from .errors import (
    AlignmentError,
    CorpusFormatError,
    EditkitError,
    SlotNotFoundError,
    TemplateError,
)
from .evalharness import (
    EvalRecord,
    Leaderboard,
    build_leaderboard,
    joint_score,
    make_records,
    significance_by_splits,
    wilcoxon_signed_rank,
)
from .slotmetric import MatchKind, SlotMatch, SlotScore, chrf, corpus_slot_scores, slot_score
from .template import (
    InfillExample,
    Template,
    derive_slots,
    fill_template,
    gold_fillers,
    make_infill_example,
    template_from_slots,
    template_from_tags,
    template_union,
)
from .textnorm import NormTables, canonical_time, default_tables, lemmatize, normalize_tokens

__version__ = "0.1.0"
