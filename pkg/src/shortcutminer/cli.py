"""Command-line entry points for the full pipeline and experiments.

Subcommands: mine, stats, agreement, contaminate, decoy, serve. Settings
come from an optional flat config file plus flags; flags win. Exit codes:
0 success, 1 usage/config error, 2 data error, 3 internal error.
"""

from __future__ import annotations

import argparse
import logging
import shlex
import sys
from dataclasses import dataclass
from pathlib import Path

from . import artifacts
from .miner import Pattern
from .annotate import AnnotationStore
from .causality import NoNeutralContextsError, extract_rules
from .config import ConfigError, RunConfig, build_run_config
from .corpus import (
    Dataset,
    DatasetFormatError,
    contains,
    load_dataset,
    save_dataset,
    tokenize,
)
from .decoys import (
    PAIR_DECOYS,
    REVIEW_DECOYS,
    ContaminationConfig,
    ContaminationError,
    DecoySpec,
    contaminate,
    run_grid,
)
from .explain import ablation_report, import_attributions, mean_agreement, occlusion_attribute, top_by_coverage
from .predictor import (
    HttpPredictor,
    StdioPredictor,
    TrainingError,
    cache_predictions,
    train_native,
)

log = logging.getLogger(__name__)


class DataError(RuntimeError):
    """Input data is unusable (missing files, schema violations, mismatches)."""


@dataclass(frozen=True)
class _Candidate:
    """Pattern/consequent carrier for candidates outside the final rule set."""

    pattern: Pattern
    consequent: int


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # exit 1 on usage errors instead of argparse's 2
        raise ConfigError(message)


def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", help="flat key=value config file")
    sub.add_argument("--dataset", help="JSONL dataset path")
    sub.add_argument("--out-dir", help="output directory (default: out)")
    sub.add_argument("--seed", type=int, help="run seed")
    sub.add_argument("--threads", type=int, help="worker parallelism cap")
    sub.add_argument("--model-kind", help="naive_bayes | logistic_ngram | external")
    sub.add_argument("--ngram-orders", help="comma list, e.g. 1,2")
    sub.add_argument("--alpha", type=float, help="naive Bayes smoothing")
    sub.add_argument("--l2", type=float, help="logistic ridge strength")
    sub.add_argument("--transport", help="external model transport: stdio | http")
    sub.add_argument("--endpoint", help="external model URL or command line")
    sub.add_argument("--preset", help="miner preset: review | sentence | qa_pair | claim_evidence")
    sub.add_argument("--doc-len-range", help="e.g. 4,10")
    sub.add_argument("--query-len-range", help="e.g. 3,10 (two-part datasets)")
    sub.add_argument("--min-support", type=int)
    sub.add_argument("--npmi-threshold", type=float)
    sub.add_argument("--eps-n", type=float, help="neutrality tolerance")
    sub.add_argument("--mean-threshold", type=float)
    sub.add_argument("--max-contexts", type=int)
    sub.add_argument("--min-contexts", type=int)


def _parse_pair(raw: str | None) -> tuple[int, int] | None:
    if raw is None:
        return None
    parts = raw.split(",")
    if len(parts) != 2:
        raise ConfigError(f"expected 'lo,hi', got {raw!r}")
    return (int(parts[0]), int(parts[1]))


def _overrides(args: argparse.Namespace) -> dict:
    orders = None
    if getattr(args, "ngram_orders", None):
        orders = [int(v) for v in args.ngram_orders.split(",")]
    return {
        "dataset": args.dataset,
        "out_dir": args.out_dir,
        "seed": args.seed,
        "threads": args.threads,
        "model.kind": args.model_kind,
        "model.ngram_orders": orders,
        "model.alpha": args.alpha,
        "model.l2": args.l2,
        "model.transport": args.transport,
        "model.endpoint": args.endpoint,
        "miner.preset": args.preset,
        "miner.doc_len_range": _parse_pair(args.doc_len_range),
        "miner.query_len_range": _parse_pair(args.query_len_range),
        "miner.min_support": args.min_support,
        "npmi_threshold": args.npmi_threshold,
        "eps_n": args.eps_n,
        "mean_threshold": args.mean_threshold,
        "max_contexts": args.max_contexts,
        "min_contexts": args.min_contexts,
    }


def _resolve(args: argparse.Namespace) -> RunConfig:
    config = build_run_config(getattr(args, "config", None), _overrides(args))
    if not config.dataset:
        raise ConfigError("a dataset is required (--dataset or config file)")
    return config


def _load(config: RunConfig) -> Dataset:
    path = Path(config.dataset)
    if not path.exists():
        raise DataError(f"dataset file not found: {path}")
    return load_dataset(path)


def _make_model(config: RunConfig, dataset: Dataset):
    model = config.model
    if model.kind == "external":
        if model.transport == "stdio":
            if not model.endpoint:
                raise ConfigError("stdio transport requires --endpoint (a command line)")
            return StdioPredictor(shlex.split(model.endpoint))
        if model.transport == "http":
            if not model.endpoint:
                raise ConfigError("http transport requires --endpoint (a URL)")
            return HttpPredictor(model.endpoint)
        raise ConfigError(f"external model needs --transport stdio|http, got {model.transport!r}")
    return train_native(dataset, model.native_config())


def _out_dir(config: RunConfig) -> Path:
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _print_stats(stats: dict) -> None:
    print(f"frequent patterns  : {stats['n_frequent']}")
    print(f"NPMI candidates    : {stats['n_npmi']}")
    print(f"rules              : {stats['n_rules']}")
    print(f"avg pattern length : {stats['avg_pattern_len']:.3f}")


def cmd_mine(args: argparse.Namespace) -> int:
    config = _resolve(args)
    dataset = _load(config)
    model = _make_model(config, dataset)
    out = _out_dir(config)

    predictions = cache_predictions(model, dataset, out / artifacts.PREDICTIONS_FILE)
    result = extract_rules(dataset, model, config.pipeline(), predictions)

    artifacts.write_rules_file(
        out / artifacts.RULES_FILE, result, config.to_dict(), config.hash(), config.seed
    )
    artifacts.write_contexts_file(
        out / artifacts.CONTEXTS_FILE, result.contexts, config.hash(), config.seed
    )
    artifacts.write_frequent_file(out / artifacts.FREQUENT_FILE, result.frequent)
    artifacts.write_candidates_file(out / artifacts.CANDIDATES_FILE, result.candidates)
    _print_stats(result.stats)
    print(f"wrote {out / artifacts.RULES_FILE}")
    return 0


def cmd_stats(args: argparse.Namespace) -> int:
    path = Path(args.rules)
    if not path.exists():
        raise DataError(f"rules file not found: {path}")
    doc = artifacts.read_rules_file(path)
    _print_stats(doc["stats"])
    print(f"config hash        : {doc['config_hash']}")
    print(f"model fingerprint  : {doc['model_fingerprint'][:16]}")
    rejected = doc.get("rejected", [])
    undetermined = sum(1 for r in rejected if r.get("status") == "undetermined")
    print(f"rejected candidates: {len(rejected)} ({undetermined} undetermined)")
    return 0


def _rules_path(args: argparse.Namespace, config: RunConfig) -> Path:
    rules_path = Path(args.rules) if args.rules else Path(config.out_dir) / artifacts.RULES_FILE
    if not rules_path.exists():
        raise DataError(f"rules file not found: {rules_path}")
    return rules_path


def _rules_doc(args: argparse.Namespace, config: RunConfig) -> dict:
    return artifacts.read_rules_file(_rules_path(args, config))


def cmd_agreement(args: argparse.Namespace) -> int:
    config = _resolve(args)
    dataset = _load(config)
    rules_path = _rules_path(args, config)
    doc = artifacts.read_rules_file(rules_path)
    rules = artifacts.rules_from_doc(doc)
    out = _out_dir(config)

    model = _make_model(config, dataset)
    predictions = cache_predictions(model, dataset, out / artifacts.PREDICTIONS_FILE)

    # the NPMI-only condition: the scorer's dump when present, otherwise
    # reconstructed as the rules plus everything causality removed
    candidates_path = rules_path.parent / artifacts.CANDIDATES_FILE
    if candidates_path.exists():
        candidates: list = artifacts.read_candidates_file(candidates_path)
    else:
        rejected = [
            _Candidate(artifacts.pattern_from_dict(r["pattern"]), r["consequent"])
            for r in doc.get("rejected", [])
        ]
        candidates = list(rules) + rejected

    if args.ablation:
        targets = top_by_coverage(candidates, dataset, predictions, args.top_n) + top_by_coverage(
            rules, dataset, predictions, args.top_n
        )
    else:
        targets = top_by_coverage(rules, dataset, predictions, args.top_n)

    errors: list[str] = []
    if args.source == "occlusion":
        needed_ids = set()
        for rule in targets:
            for inst in dataset.split("train"):
                if predictions[inst.id].predicted == rule.consequent and contains(inst, rule.pattern):
                    needed_ids.add(inst.id)
        by_id = dataset.by_id()
        attributions = {i: occlusion_attribute(model, by_id[i]) for i in sorted(needed_ids)}
    else:
        path = Path(args.source)
        if not path.exists():
            raise DataError(f"attribution file not found: {path}")
        vectors, errors = import_attributions(path, dataset)
        for err in errors:
            print(f"attribution record rejected: {err}", file=sys.stderr)
        attributions = {v.instance_id: v for v in vectors}

    report_doc: dict = {
        "config": config.to_dict(),
        "config_hash": config.hash(),
        "seed": config.seed,
        "source": args.source,
        "top_n": args.top_n,
        "import_errors": errors,
    }
    if args.ablation:
        reports = ablation_report(
            candidates, rules, dataset, attributions, predictions,
            top_n=args.top_n, doc_only=args.doc_only,
        )
        report_doc["ablation"] = {name: rep.to_dict() for name, rep in reports.items()}
        for name, rep in reports.items():
            print(f"{name:>12}: mean={rep.mean:.3f} var={rep.variance:.4f} rules={rep.n_rules}")
    else:
        rep = mean_agreement(
            top_by_coverage(rules, dataset, predictions, args.top_n),
            dataset, attributions, predictions, doc_only=args.doc_only,
        )
        report_doc["report"] = rep.to_dict()
        print(f"agreement: mean={rep.mean:.3f} var={rep.variance:.4f} rules={rep.n_rules}")

    artifacts.write_report(out / artifacts.AGREEMENT_FILE, report_doc)
    print(f"wrote {out / artifacts.AGREEMENT_FILE}")
    return 0


def _decoy_spec(args: argparse.Namespace, dataset: Dataset) -> DecoySpec:
    if args.decoy0 or args.decoy1:
        if not (args.decoy0 and args.decoy1):
            raise ConfigError("provide both --decoy0 and --decoy1, or neither")
        placement = args.placement or ("prepend_both" if dataset.two_part else "prepend_doc")
        return DecoySpec(tokenize(args.decoy0), tokenize(args.decoy1), placement)
    return PAIR_DECOYS if dataset.two_part else REVIEW_DECOYS


def cmd_contaminate(args: argparse.Namespace) -> int:
    config = _resolve(args)
    dataset = _load(config)
    spec = _decoy_spec(args, dataset)
    out = _out_dir(config)
    contamination = ContaminationConfig(rate=args.rate, bias=args.bias, seed=config.seed)
    contaminated, manifest = contaminate(
        dataset, spec, contamination, manifest_path=out / "manifest.jsonl"
    )
    save_dataset(contaminated, out / "contaminated.jsonl")
    print(f"contaminated {len(manifest)} instances "
          f"(rate={args.rate}, bias={args.bias}, placement={spec.placement})")
    print(f"wrote {out / 'contaminated.jsonl'} and {out / 'manifest.jsonl'}")
    return 0


def _parse_grid(raw: str) -> list[tuple[float, float]]:
    cells = []
    for chunk in raw.split(","):
        parts = chunk.split(":")
        if len(parts) != 2:
            raise ConfigError(f"grid cells are 'rate:bias', got {chunk!r}")
        cells.append((float(parts[0]), float(parts[1])))
    return cells


def cmd_decoy(args: argparse.Namespace) -> int:
    config = _resolve(args)
    dataset = _load(config)
    spec = _decoy_spec(args, dataset)
    out = _out_dir(config)
    grid = [
        ContaminationConfig(rate=r, bias=b, seed=config.seed)
        for r, b in _parse_grid(args.grid)
    ]
    report = run_grid(
        dataset, spec, config.model.native_config(), grid, config.pipeline(),
        detection_mode=args.detection,
    )
    report["config"] = config.to_dict()
    report["config_hash"] = config.hash()
    report["seed"] = config.seed
    artifacts.write_report(out / artifacts.GRID_FILE, report)
    print(f"baseline clean accuracy: {report['baseline_clean_acc']:.3f}")
    for cell in report["cells"]:
        print(
            f"rate={cell['rate']:<4} bias={cell['bias']:<4} "
            f"retention={cell['retention']:.2f} clean_acc={cell['clean_acc']:.3f} "
            f"stress_delta={cell['stress_delta']:+.3f}"
        )
    print(f"wrote {out / artifacts.GRID_FILE}")
    return 0


def cmd_serve(args: argparse.Namespace) -> int:
    # imported lazily so the CLI works without the service extras loaded
    import uvicorn

    from .service import build_state, create_app

    config = _resolve(args)
    dataset = _load(config)
    doc = _rules_doc(args, config)
    model = _make_model(config, dataset)
    if doc["model_fingerprint"] != model.fingerprint:
        raise DataError(
            "rules file was produced by a different model "
            f"(rules: {doc['model_fingerprint'][:16]}, current: {model.fingerprint[:16]}); "
            "refusing to serve"
        )
    contexts_path = (
        Path(args.contexts) if args.contexts else Path(config.out_dir) / artifacts.CONTEXTS_FILE
    )
    if not contexts_path.exists():
        raise DataError(f"contexts file not found: {contexts_path}")
    _, contexts = artifacts.read_contexts_file(contexts_path)
    journal = Path(args.journal) if args.journal else Path(config.out_dir) / "annotations.jsonl"
    state = build_state(doc, contexts, model, journal)
    app = create_app(state, ui_dir=args.ui_dir)
    print(f"serving {len(doc['rules'])} rules on http://{args.host}:{args.port}/v1")
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="shortcutminer",
        description=__doc__,
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="Settings resolve as: built-in defaults, then --config file, then flags.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("mine", help="run the full rule-extraction pipeline")
    _add_common(p)
    p.set_defaults(func=cmd_mine)

    p = sub.add_parser("stats", help="print the funnel statistics of a rules file")
    p.add_argument("--rules", required=True)
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("agreement", help="score rules against local attributions")
    _add_common(p)
    p.add_argument("--rules", help="rules.json (default: <out-dir>/rules.json)")
    p.add_argument("--source", default="occlusion",
                   help="'occlusion' or a path to imported attribution JSONL")
    p.add_argument("--top-n", type=int, default=15)
    p.add_argument("--ablation", action="store_true",
                   help="compare NPMI-only, full pipeline, and their intersection")
    p.add_argument("--doc-only", action="store_true",
                   help="mask query positions (two-part datasets)")
    p.set_defaults(func=cmd_agreement)

    p = sub.add_parser("contaminate", help="inject decoys into train/validation splits")
    _add_common(p)
    p.add_argument("--rate", type=float, required=True)
    p.add_argument("--bias", type=float, required=True)
    p.add_argument("--decoy0", help="decoy text for label 0 (default: stock pair)")
    p.add_argument("--decoy1", help="decoy text for label 1")
    p.add_argument("--placement", choices=["prepend_doc", "prepend_both"])
    p.set_defaults(func=cmd_contaminate)

    p = sub.add_parser("decoy", help="contamination grid: inject, retrain, measure retention")
    _add_common(p)
    p.add_argument("--grid", default="0.2:0.6,0.2:0.9,0.8:0.6,0.8:0.9",
                   help="comma list of rate:bias cells")
    p.add_argument("--decoy0")
    p.add_argument("--decoy1")
    p.add_argument("--placement", choices=["prepend_doc", "prepend_both"])
    p.add_argument("--detection", choices=["exact", "relaxed"], default="exact")
    p.set_defaults(func=cmd_decoy)

    p = sub.add_parser("serve", help="HTTP inspection/annotation service")
    _add_common(p)
    p.add_argument("--rules", help="rules.json (default: <out-dir>/rules.json)")
    p.add_argument("--contexts", help="contexts.jsonl (default: <out-dir>/contexts.jsonl)")
    p.add_argument("--journal", help="annotation journal path")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8765)
    p.add_argument("--ui-dir", help="static UI directory to mount at /ui")
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except (DataError, DatasetFormatError, ContaminationError, TrainingError,
            NoNeutralContextsError, FileNotFoundError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except KeyboardInterrupt:
        raise
    except Exception as exc:  # pragma: no cover - defensive
        log.exception("internal error")
        print(f"internal error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
