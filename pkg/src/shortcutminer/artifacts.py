"""Readers and writers for the run artifacts shared across tools.

All artifacts embed the resolved config hash and seed, and are written
deterministically (sorted keys, stable ordering) so identical runs
produce byte-identical files.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Sequence

from .causality import CausalRule, ExtractionResult, NeutralContext
from .miner import FrequentPattern, Pattern
from .scorer import CandidateStats

RULES_FILE = "rules.json"
CONTEXTS_FILE = "contexts.jsonl"
PREDICTIONS_FILE = "predictions.jsonl"
FREQUENT_FILE = "frequent.jsonl"
CANDIDATES_FILE = "candidates.jsonl"
AGREEMENT_FILE = "agreement.json"
GRID_FILE = "grid.json"


def _dump(doc: dict) -> str:
    return json.dumps(doc, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def write_rules_file(
    path: str | Path,
    result: ExtractionResult,
    config: dict,
    config_hash: str,
    seed: int,
) -> None:
    doc = {
        "config": config,
        "config_hash": config_hash,
        "seed": seed,
        "model_fingerprint": result.model_fingerprint,
        "stats": result.stats,
        "rules": [r.to_dict() for r in result.rules],
        "rejected": [r.to_dict() for r in result.rejected],
    }
    Path(path).write_text(_dump(doc), encoding="utf-8")


def read_rules_file(path: str | Path) -> dict:
    return json.loads(Path(path).read_text(encoding="utf-8"))


def pattern_from_dict(doc: dict) -> Pattern:
    return Pattern(
        tuple(doc["doc_part"]),
        tuple(doc["query_part"]) if doc.get("query_part") is not None else None,
    )


def rule_from_dict(doc: dict) -> CausalRule:
    return CausalRule(
        id=doc["id"],
        pattern=pattern_from_dict(doc["pattern"]),
        consequent=doc["consequent"],
        support=doc["support"],
        npmi=doc["npmi"],
        coverage=doc["coverage"],
        mean_cf_prob=doc["mean_cf_prob"],
        n_counterfactuals=doc["n_counterfactuals"],
        argmax_agreement=doc.get("argmax_agreement", 0.0),
        cf_probs=tuple(doc.get("cf_probs", ())),
        example_counterfactuals=tuple(doc.get("examples", ())),
    )


def rules_from_doc(doc: dict) -> list[CausalRule]:
    return [rule_from_dict(r) for r in doc["rules"]]


def write_contexts_file(
    path: str | Path, contexts: Sequence[NeutralContext], config_hash: str, seed: int
) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        fh.write(json.dumps({"config_hash": config_hash, "seed": seed}) + "\n")
        for ctx in contexts:
            fh.write(
                json.dumps(
                    {
                        "id": ctx.id,
                        "source_instance_id": ctx.source_instance_id,
                        "doc_tokens_without_span": list(ctx.doc_tokens_without_span),
                        "doc_insertion_index": ctx.doc_insertion_index,
                        "query_tokens_without_span": list(ctx.query_tokens_without_span)
                        if ctx.query_tokens_without_span is not None
                        else None,
                        "query_insertion_index": ctx.query_insertion_index,
                        "neutrality": ctx.neutrality,
                        "probs": [ctx.probs[0], ctx.probs[1]],
                    },
                    ensure_ascii=False,
                )
                + "\n"
            )


def read_contexts_file(path: str | Path) -> tuple[dict, list[NeutralContext]]:
    contexts: list[NeutralContext] = []
    with Path(path).open(encoding="utf-8") as fh:
        header = json.loads(fh.readline())
        for line in fh:
            line = line.strip()
            if not line:
                continue
            rec = json.loads(line)
            contexts.append(
                NeutralContext(
                    id=rec["id"],
                    source_instance_id=rec["source_instance_id"],
                    doc_tokens_without_span=tuple(rec["doc_tokens_without_span"]),
                    doc_insertion_index=rec["doc_insertion_index"],
                    query_tokens_without_span=tuple(rec["query_tokens_without_span"])
                    if rec["query_tokens_without_span"] is not None
                    else None,
                    query_insertion_index=rec["query_insertion_index"],
                    neutrality=rec["neutrality"],
                    probs=(rec["probs"][0], rec["probs"][1]),
                )
            )
    return header, contexts


def write_frequent_file(path: str | Path, frequent: Sequence[FrequentPattern]) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        for fp in frequent:
            fh.write(
                json.dumps(
                    {
                        "doc_part": list(fp.pattern.doc_part),
                        "query_part": list(fp.pattern.query_part)
                        if fp.pattern.query_part is not None
                        else None,
                        "support": fp.support,
                    },
                    ensure_ascii=False,
                )
                + "\n"
            )


def read_frequent_file(path: str | Path) -> list[FrequentPattern]:
    out = []
    with Path(path).open(encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            rec = json.loads(line)
            out.append(FrequentPattern(pattern_from_dict(rec), rec["support"]))
    return out


def write_candidates_file(path: str | Path, candidates: Sequence[CandidateStats]) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        for cand in candidates:
            fh.write(json.dumps(cand.to_dict(), ensure_ascii=False) + "\n")


def read_candidates_file(path: str | Path) -> list[CandidateStats]:
    out = []
    with Path(path).open(encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            rec = json.loads(line)
            out.append(
                CandidateStats(
                    pattern=pattern_from_dict(rec["pattern"]),
                    consequent=rec["consequent"],
                    p_y=rec["p_y"],
                    p_y_given_s=rec["p_y_given_s"],
                    p_s_y=rec["p_s_y"],
                    npmi=rec["npmi"],
                    support=rec["support"],
                )
            )
    return out


def write_report(path: str | Path, doc: dict) -> None:
    Path(path).write_text(_dump(doc), encoding="utf-8")
