"""Command line entry point: every pipeline stage as a subcommand.

Exit codes: 0 success, 1 input/usage error, 2 internal invariant violation.
Settings resolve as defaults < config file < EDITKIT_* environment < flags.
All outputs are JSONL/TSV written deterministically in input order.
"""

import argparse
import dataclasses
import json
import os
import sys
import traceback
from pathlib import Path

from . import corpus, datasetpipe, editalign, evalharness, slotmetric, template, textnorm
from .editalign import EditTag
from .errors import EditkitError

ENV_PREFIX = "EDITKIT_"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{message}\n\n{self.format_usage()}")


@dataclasses.dataclass
class Config:
    chrf_beta: float = 2.0
    chrf_max_n: int = 6
    approx_floor: float = 0.1
    sentinel_style: str = "gap"
    seed: int | None = None
    place_aliases: str | None = None
    abbreviations: str | None = None
    number_words: str | None = None
    stopwords: str | None = None

    def validate(self):
        if self.chrf_beta <= 0:
            raise UsageError("chrf_beta must be positive")
        if not 1 <= self.chrf_max_n <= 10:
            raise UsageError("chrf_max_n must be in 1..10")
        if not 0.0 <= self.approx_floor <= 1.0:
            raise UsageError("approx_floor must be in [0, 1]")
        if self.sentinel_style not in template.SENTINEL_FORMATS:
            raise UsageError(f"sentinel_style must be one of {sorted(template.SENTINEL_FORMATS)}")

    def tables(self) -> textnorm.NormTables:
        if self.place_aliases or self.abbreviations or self.number_words:
            return textnorm.NormTables.load(self.place_aliases, self.abbreviations, self.number_words)
        return textnorm.default_tables()

    def stopword_set(self) -> frozenset[str]:
        if self.stopwords:
            with open(self.stopwords, encoding="utf-8") as fh:
                return frozenset(w.strip().lower() for w in fh if w.strip())
        return textnorm.default_stopwords()


_INT_FIELDS = {"chrf_max_n", "seed"}
_FLOAT_FIELDS = {"chrf_beta", "approx_floor"}
_CONFIG_FIELDS = {f.name for f in dataclasses.fields(Config)}


def _coerce(key: str, value: str):
    try:
        if key in _INT_FIELDS:
            return int(value)
        if key in _FLOAT_FIELDS:
            return float(value)
    except ValueError:
        raise UsageError(f"invalid value for {key}: {value!r}") from None
    return value


def load_config(path: str | None, args: argparse.Namespace) -> Config:
    config = Config()
    if path:
        try:
            lines = Path(path).read_text(encoding="utf-8").splitlines()
        except OSError as exc:
            raise UsageError(f"cannot read config file: {exc}") from None
        for line_no, line in enumerate(lines, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{line_no}: expected key=value")
            key, _, value = line.partition("=")
            key, value = key.strip(), value.strip()
            if key not in _CONFIG_FIELDS:
                raise UsageError(f"{path}:{line_no}: unknown config key {key!r}")
            setattr(config, key, _coerce(key, value))
    for key in _CONFIG_FIELDS:
        env_value = os.environ.get(ENV_PREFIX + key.upper())
        if env_value is not None:
            setattr(config, key, _coerce(key, env_value))
    for key in _CONFIG_FIELDS:
        flag_value = getattr(args, key, None)
        if flag_value is not None:
            setattr(config, key, flag_value)
    config.validate()
    return config


def _write_lines(lines, out_path: str | None):
    if out_path:
        with open(out_path, "w", encoding="utf-8", newline="\n") as fh:
            fh.writelines(line + "\n" for line in lines)
    else:
        for line in lines:
            sys.stdout.write(line + "\n")


def _jsonl(records):
    return [json.dumps(r, ensure_ascii=False) for r in records]


def _alignments(pairs):
    for pair in pairs:
        yield pair, editalign.align(pair.formal, pair.informal)


def cmd_align(args, config: Config) -> int:
    pairs = corpus.read_pairs(args.pairs)
    records = []
    for pair, alignment in _alignments(pairs):
        example = editalign.to_tagger_example(alignment, pair.formal)
        records.append(
            {
                "id": pair.id,
                "tokens": list(example.tokens),
                "labels": [label.value for label in example.labels],
                "bos_label": example.bos_label.value,
            }
        )
    _write_lines(_jsonl(records), args.out)
    return 0


def cmd_stats(args, config: Config) -> int:
    sequences = []
    for line_no, obj in corpus.iter_jsonl(args.tags):
        labels = obj.get("labels")
        if not isinstance(labels, list):
            raise corpus.CorpusFormatError(args.tags, line_no, "labels", "expected a list")
        try:
            sequences.append([EditTag(l) for l in labels])
        except ValueError as exc:
            raise corpus.CorpusFormatError(args.tags, line_no, "labels", str(exc)) from None
    fractions = editalign.tag_distribution(sequences)
    payload = {tag.value: fraction for tag, fraction in sorted(fractions.items(), key=lambda kv: kv[0].value)}
    _write_lines([json.dumps(payload, ensure_ascii=False)], args.out)
    return 0


def _build_template(pair, mode, tables, stopwords=None):
    if mode == "tag":
        alignment = editalign.align(pair.formal, pair.informal)
        return template.template_from_tags(pair.formal, alignment), alignment
    if mode == "constr":
        alignment = editalign.align(pair.formal, pair.informal)
        return template.template_from_slots(pair.formal, pair.slots, tables), alignment
    alignment = editalign.align(pair.formal, pair.informal)
    example = editalign.to_tagger_example(alignment, pair.formal)
    tpl = template.template_union(
        pair.formal, pair.slots, example.labels, tables, bos_label=example.bos_label
    )
    return tpl, alignment


def cmd_make_templates(args, config: Config) -> int:
    tables = config.tables()
    pairs = corpus.read_pairs(args.pairs)
    records = []
    for pair in pairs:
        tpl, _ = _build_template(pair, args.mode, tables)
        records.append({"id": pair.id, "template": tpl.serialize(config.sentinel_style)})
    _write_lines(_jsonl(records), args.out)
    return 0


def cmd_make_training_data(args, config: Config) -> int:
    tables = config.tables()
    pairs = corpus.read_pairs(args.pairs)
    records = []
    for pair in pairs:
        tpl, alignment = _build_template(pair, args.mode, tables)
        try:
            example = template.make_infill_example(pair, tpl, alignment, config.sentinel_style)
        except EditkitError as exc:
            raise EditkitError(f"pair {pair.id!r}: {exc}") from exc
        records.append(
            {"id": pair.id, "input_text": example.input_text, "target_text": example.target_text}
        )
    _write_lines(_jsonl(records), args.out)
    return 0


def cmd_fill(args, config: Config) -> int:
    style = config.sentinel_style
    templates: dict[str, template.Template] = {}
    order: list[str] = []
    for line_no, obj in corpus.iter_jsonl(args.templates):
        tid = corpus.expect_str(obj, "id", args.templates, line_no)
        tpl = template.Template.parse(corpus.expect_str(obj, "template", args.templates, line_no), style)
        templates[tid] = tpl
        order.append(tid)
    fillers: dict[str, list[str]] = {}
    for line_no, obj in corpus.iter_jsonl(args.fillers):
        fid = corpus.expect_str(obj, "id", args.fillers, line_no)
        if fid not in templates:
            raise EditkitError(f"{args.fillers}:{line_no}: no template for id {fid!r}")
        if "fillers" in obj:
            got = obj["fillers"]
            if not isinstance(got, list) or not all(isinstance(x, str) for x in got):
                raise corpus.CorpusFormatError(args.fillers, line_no, "fillers", "expected a list of strings")
            fillers[fid] = got
        else:
            text = corpus.expect_str(obj, "target_text", args.fillers, line_no)
            fillers[fid] = template.parse_fillers(text, templates[fid].gap_count, style)
    missing = [tid for tid in order if tid not in fillers]
    if missing:
        raise EditkitError(f"no fillers for id(s): {', '.join(missing)}")
    records = [
        {"id": tid, "text": template.fill_template(templates[tid], fillers[tid])} for tid in order
    ]
    _write_lines(_jsonl(records), args.out)
    return 0


def cmd_score_slots(args, config: Config) -> int:
    tables = config.tables()
    pairs = corpus.read_pairs(args.pairs)
    hyps = corpus.read_hypotheses(args.hyps)
    scores = slotmetric.corpus_slot_scores(
        pairs,
        hyps,
        tables,
        beta=config.chrf_beta,
        max_order=config.chrf_max_n,
        approx_floor=config.approx_floor,
    )
    records = []
    for pair in pairs:
        score = scores[pair.id]
        records.append(
            {
                "id": pair.id,
                "slot_score": score.value,
                "matches": [
                    {"slot": m.slot, "kind": m.kind.value, "weight": m.weight}
                    for m in score.matches
                ],
            }
        )
    _write_lines(_jsonl(records), args.out)
    return 0


def cmd_chrf(args, config: Config) -> int:
    value = slotmetric.chrf(args.hypothesis, args.reference, max_order=config.chrf_max_n, beta=config.chrf_beta)
    _write_lines([json.dumps({"chrf": value})], args.out)
    return 0


def cmd_evaluate(args, config: Config) -> int:
    tables = config.tables()
    pairs = corpus.read_pairs(args.pairs)
    records_by_system = {}
    for name, hyps_path, scores_path in args.system:
        if name in records_by_system:
            raise UsageError(f"duplicate system name {name!r}")
        hyps = corpus.read_hypotheses(hyps_path)
        external = corpus.read_scores(scores_path)
        slot_scores = slotmetric.corpus_slot_scores(
            pairs,
            hyps,
            tables,
            beta=config.chrf_beta,
            max_order=config.chrf_max_n,
            approx_floor=config.approx_floor,
        )
        records_by_system[name] = evalharness.make_records(external, slot_scores)
    board = evalharness.build_leaderboard(records_by_system)
    tsv = ["system\tstyle\tcontent\tslot\tfluency\tjoint"]
    for name, row in board.rows:
        tsv.append(
            f"{name}\t{row.style:.2f}\t{row.content:.2f}\t{row.slot:.2f}\t{row.fluency:.2f}\t{row.joint:.2f}"
        )
    payload = {
        "systems": [
            {"system": name, **{k: getattr(row, k) for k in LeaderboardRowFields}}
            for name, row in board.rows
        ]
    }
    if args.out_json:
        _write_lines([json.dumps(payload, ensure_ascii=False)], args.out_json)
    if args.out_tsv:
        _write_lines(tsv, args.out_tsv)
    if not args.out_tsv and not args.out_json:
        _write_lines(tsv, None)
    return 0


LeaderboardRowFields = ("style", "content", "slot", "fluency", "joint")


def _read_products(path) -> dict[str, float]:
    products: dict[str, float] = {}
    for line_no, obj in corpus.iter_jsonl(path):
        sid = corpus.expect_str(obj, "id", path, line_no)
        if sid in products:
            raise corpus.CorpusFormatError(path, line_no, "id", f"duplicate id {sid!r}")
        if "product" in obj:
            products[sid] = corpus.expect_number(obj, "product", path, line_no)
        else:
            value = 1.0
            for field in ("style", "content", "slot", "fluency"):
                value *= corpus.expect_number(obj, field, path, line_no)
            products[sid] = value
    return products


def cmd_significance(args, config: Config) -> int:
    if config.seed is None:
        raise UsageError("significance requires --seed (or EDITKIT_SEED / config seed)")
    scores_a = _read_products(args.a)
    scores_b = _read_products(args.b)
    result = evalharness.significance_by_splits(
        scores_a, scores_b, n_splits=args.splits, split_size=args.split_size, seed=config.seed
    )
    payload = {
        "p_value": result.p_value,
        "statistic": result.statistic,
        "n_splits": args.splits,
        "split_size": args.split_size,
        "seed": config.seed,
        "means_a": list(result.means_a),
        "means_b": list(result.means_b),
    }
    _write_lines([json.dumps(payload, ensure_ascii=False)], args.out)
    return 0


def cmd_filter_dataset(args, config: Config) -> int:
    cands = datasetpipe.read_candidates(args.candidates)
    kept = datasetpipe.filter_by_informality(cands, args.informality_threshold)
    kept = datasetpipe.flag_rewrites(kept, args.sim_threshold)
    flagged = [c for c in kept if c.needs_rewrite]
    missing_ids: list[str] = []
    if args.slots:
        slot_map = datasetpipe.read_slot_map(args.slots)
        pairs, missing_ids = datasetpipe.attach_slots(kept, slot_map)
    else:
        pairs = [c.pair for c in kept]
    corpus.write_pairs(pairs, args.out)
    if args.worklist:
        datasetpipe.write_candidates(flagged, args.worklist)
    if args.report:
        report = {
            "input": len(cands),
            "kept": len(kept),
            "flagged_for_rewrite": len(flagged),
            "missing_slot_ids": missing_ids,
        }
        with open(args.report, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(json.dumps(report, ensure_ascii=False) + "\n")
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="editkit", description=__doc__)
    parser.add_argument("--config", help="key=value config file")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_text):
        p = sub.add_parser(name, help=help_text)
        p.set_defaults(func=func)
        p.add_argument("--out", help="output file (default: stdout)")
        return p

    p = add("align", cmd_align, "derive per-token edit labels from parallel pairs")
    p.add_argument("--pairs", required=True)

    p = add("stats", cmd_stats, "tag fractions over a tagger-label file")
    p.add_argument("--tags", required=True)

    for name, func in (
        ("make-templates", cmd_make_templates),
        ("make-training-data", cmd_make_training_data),
    ):
        p = add(name, func, f"{name.replace('-', ' ')} from parallel pairs")
        p.add_argument("--pairs", required=True)
        p.add_argument("--mode", choices=("tag", "constr", "constr-tag"), required=True)
        p.add_argument("--sentinel-style", dest="sentinel_style", choices=("gap", "t5"))

    p = add("fill", cmd_fill, "splice infiller output into templates")
    p.add_argument("--templates", required=True)
    p.add_argument("--fillers", required=True)
    p.add_argument("--sentinel-style", dest="sentinel_style", choices=("gap", "t5"))

    p = add("score-slots", cmd_score_slots, "slot-preservation score per sentence")
    p.add_argument("--pairs", required=True)
    p.add_argument("--hyps", required=True)
    p.add_argument("--approx-floor", dest="approx_floor", type=float)
    p.add_argument("--chrf-beta", dest="chrf_beta", type=float)
    p.add_argument("--chrf-max-n", dest="chrf_max_n", type=int)

    p = add("chrf", cmd_chrf, "character n-gram F-score of two strings")
    p.add_argument("hypothesis")
    p.add_argument("reference")
    p.add_argument("--chrf-beta", dest="chrf_beta", type=float)
    p.add_argument("--chrf-max-n", dest="chrf_max_n", type=int)

    p = sub.add_parser("evaluate", help="leaderboard over systems")
    p.set_defaults(func=cmd_evaluate)
    p.add_argument("--pairs", required=True)
    p.add_argument(
        "--system",
        nargs=3,
        metavar=("NAME", "HYPS", "SCORES"),
        action="append",
        required=True,
    )
    p.add_argument("--out-tsv")
    p.add_argument("--out-json")
    p.add_argument("--approx-floor", dest="approx_floor", type=float)

    p = add("significance", cmd_significance, "split-based Wilcoxon significance test")
    p.add_argument("--a", required=True, help="per-sentence scores of system A")
    p.add_argument("--b", required=True, help="per-sentence scores of system B")
    p.add_argument("--splits", type=int, default=30)
    p.add_argument("--split-size", type=int, default=900)
    p.add_argument("--seed", type=int)

    p = add("filter-dataset", cmd_filter_dataset, "informality filter + rewrite worklist")
    p.add_argument("--candidates", required=True)
    p.add_argument(
        "--informality-threshold", type=float, default=datasetpipe.DEFAULT_INCREASE_THRESHOLD
    )
    p.add_argument("--sim-threshold", type=float, required=True)
    p.add_argument("--slots", help="optional slot map JSONL to attach")
    p.add_argument("--worklist", help="where to write pairs flagged for rewriting")
    p.add_argument("--report", help="machine-readable summary JSON")

    # global table overrides
    for table_flag in ("place-aliases", "abbreviations", "number-words", "stopwords"):
        parser.add_argument(f"--{table_flag}", dest=table_flag.replace("-", "_"), help=argparse.SUPPRESS)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        config = load_config(args.config, args)
        return args.func(args, config)
    except UsageError as exc:
        print(f"editkit: {exc}", file=sys.stderr)
        return 1
    except (EditkitError, OSError, ValueError) as exc:
        print(f"editkit: error: {exc}", file=sys.stderr)
        return 1
    except Exception:
        print("editkit: internal error", file=sys.stderr)
        traceback.print_exc()
        return 2


if __name__ == "__main__":
    sys.exit(main())
