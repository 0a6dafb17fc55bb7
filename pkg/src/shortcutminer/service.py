"""HTTP API for rule inspection, what-if probes, and annotation.

Read-only over the rules and contexts artifacts; the only writable state
is the annotation journal. What-if requests replay the same splice
semantics as the causality check, so probing a rule's own stored context
reproduces the persisted probability bit for bit.
"""

from __future__ import annotations

import logging
from pathlib import Path
from typing import Sequence

from fastapi import FastAPI, HTTPException, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from .annotate import AnnotationStore, IncompleteMatrixError, UnknownRuleError, VERDICTS
from .causality import NeutralContext, synthesize_counterfactual
from .corpus import PatternArityError, tokenize
from .miner import Pattern
from .predictor import TransportError, encode_pair

log = logging.getLogger(__name__)

SORT_KEYS = ("coverage", "npmi", "mean_cf_prob")


class ServiceState:
    def __init__(
        self,
        rules_doc: dict,
        contexts: Sequence[NeutralContext],
        model,
        store: AnnotationStore,
    ):
        self.rules_doc = rules_doc
        self.rules = {r["id"]: r for r in rules_doc["rules"]}
        self.rule_order = [r["id"] for r in rules_doc["rules"]]
        self.contexts = {c.id: c for c in contexts}
        self.context_order = [c.id for c in contexts]
        self.model = model
        self.store = store


def build_state(
    rules_doc: dict,
    contexts: Sequence[NeutralContext],
    model,
    journal_path: str | Path,
) -> ServiceState:
    store = AnnotationStore(journal_path, [r["id"] for r in rules_doc["rules"]])
    return ServiceState(rules_doc, contexts, model, store)


class RawContext(BaseModel):
    text: str
    insertion_index: int
    query_text: str | None = None
    query_insertion_index: int | None = None


class WhatIfRequest(BaseModel):
    doc_pattern: list[str]
    query_pattern: list[str] | None = None
    context_id: str | None = None
    raw_context: RawContext | None = None


class AnnotationRequest(BaseModel):
    rule_id: str
    annotator: str
    verdict: str


def _error(status: int, code: str, message: str) -> JSONResponse:
    return JSONResponse(status_code=status, content={"error": {"code": code, "message": message}})


def _context_to_dict(ctx: NeutralContext) -> dict:
    return {
        "id": ctx.id,
        "source_instance_id": ctx.source_instance_id,
        "doc_text": " ".join(ctx.doc_tokens_without_span),
        "doc_insertion_index": ctx.doc_insertion_index,
        "query_text": " ".join(ctx.query_tokens_without_span)
        if ctx.query_tokens_without_span is not None
        else None,
        "query_insertion_index": ctx.query_insertion_index,
        "neutrality": ctx.neutrality,
        "probs": [ctx.probs[0], ctx.probs[1]],
    }


def _raw_to_context(raw: RawContext) -> NeutralContext:
    doc = tokenize(raw.text)
    if not 0 <= raw.insertion_index <= len(doc):
        raise HTTPException(422, f"insertion_index out of bounds (0..{len(doc)})")
    query = tokenize(raw.query_text) if raw.query_text is not None else None
    qi = raw.query_insertion_index
    if query is not None:
        qi = 0 if qi is None else qi
        if not 0 <= qi <= len(query):
            raise HTTPException(422, f"query_insertion_index out of bounds (0..{len(query)})")
    elif qi is not None:
        raise HTTPException(422, "query_insertion_index given without query_text")
    return NeutralContext(
        id="raw",
        source_instance_id="raw",
        doc_tokens_without_span=doc,
        doc_insertion_index=raw.insertion_index,
        query_tokens_without_span=query,
        query_insertion_index=qi,
        neutrality=1.0,  # unknown until scored
        probs=(0.5, 0.5),
    )


def create_app(state: ServiceState, ui_dir: str | None = None) -> FastAPI:
    app = FastAPI(title="shortcutminer inspection service", version="1")

    @app.exception_handler(HTTPException)
    async def http_error(_req: Request, exc: HTTPException):
        code = {404: "not_found", 422: "invalid_request", 503: "predictor_unavailable"}.get(
            exc.status_code, "error"
        )
        return _error(exc.status_code, code, str(exc.detail))

    @app.exception_handler(RequestValidationError)
    async def validation_error(_req: Request, exc: RequestValidationError):
        return _error(422, "invalid_request", str(exc.errors()[:3]))

    @app.get("/v1/health")
    def health() -> dict:
        return {
            "status": "ok",
            "rules": len(state.rules),
            "contexts": len(state.contexts),
            "model_fingerprint": state.rules_doc.get("model_fingerprint"),
        }

    @app.get("/v1/rules")
    def list_rules(sort: str = "coverage") -> dict:
        if sort not in SORT_KEYS:
            raise HTTPException(422, f"sort must be one of {SORT_KEYS}")
        rules = sorted(state.rules.values(), key=lambda r: -r[sort])
        return {"rules": rules, "total": len(rules), "sort": sort}

    @app.get("/v1/rules/{rule_id}")
    def get_rule(rule_id: str) -> dict:
        rule = state.rules.get(rule_id)
        if rule is None:
            raise HTTPException(404, f"unknown rule id {rule_id!r}")
        verdicts = state.store.verdicts_for_rule(rule_id)
        return {"rule": rule, "annotations": verdicts}

    @app.get("/v1/contexts")
    def list_contexts(page: int = 1, page_size: int = 50) -> dict:
        if page < 1 or not 1 <= page_size <= 500:
            raise HTTPException(422, "page must be >= 1 and page_size in 1..500")
        start = (page - 1) * page_size
        ids = state.context_order[start : start + page_size]
        return {
            "contexts": [_context_to_dict(state.contexts[i]) for i in ids],
            "page": page,
            "page_size": page_size,
            "total": len(state.context_order),
        }

    @app.post("/v1/whatif")
    def whatif(req: WhatIfRequest) -> dict:
        if not req.doc_pattern:
            raise HTTPException(422, "pattern must be non-empty")
        try:
            pattern = Pattern(
                tuple(req.doc_pattern),
                tuple(req.query_pattern) if req.query_pattern is not None else None,
            )
        except ValueError as exc:
            raise HTTPException(422, str(exc))

        if (req.context_id is None) == (req.raw_context is None):
            raise HTTPException(422, "provide exactly one of context_id or raw_context")
        if req.context_id is not None:
            ctx = state.contexts.get(req.context_id)
            if ctx is None:
                raise HTTPException(404, f"unknown context id {req.context_id!r}")
            neutrality = ctx.neutrality
        else:
            ctx = _raw_to_context(req.raw_context)
            neutrality = None

        try:
            query, doc = synthesize_counterfactual(ctx, pattern)
        except PatternArityError as exc:
            raise HTTPException(422, str(exc))
        try:
            pred = state.model.predict_batch([encode_pair(query, doc)])[0]
            if neutrality is None:
                # score the raw context itself so the caller can see how
                # far from the decision border their probe sits
                ctx_tokens = encode_pair(
                    ctx.query_tokens_without_span, ctx.doc_tokens_without_span
                )
                if ctx_tokens:
                    ctx_pred = state.model.predict_batch([ctx_tokens])[0]
                    neutrality = abs(2.0 * ctx_pred.probs[0] - 1.0)
                else:
                    neutrality = 0.0
        except TransportError as exc:
            raise HTTPException(503, f"predictor unreachable: {exc}")

        return {
            "counterfactual": {
                "doc_text": " ".join(doc),
                "doc_span": [ctx.doc_insertion_index, len(pattern.doc_part)],
                "query_text": " ".join(query) if query is not None else None,
                "query_span": [ctx.query_insertion_index, len(pattern.query_part)]
                if pattern.query_part is not None
                else None,
            },
            "probs": [pred.probs[0], pred.probs[1]],
            "predicted": pred.predicted,
            "context_neutrality": neutrality,
        }

    @app.post("/v1/annotations")
    def post_annotation(req: AnnotationRequest) -> dict:
        if req.verdict not in VERDICTS:
            raise HTTPException(422, f"verdict must be one of {VERDICTS}")
        if not req.annotator.strip():
            raise HTTPException(422, "annotator must be non-empty")
        try:
            ann = state.store.record(req.rule_id, req.annotator.strip(), req.verdict)
        except UnknownRuleError:
            raise HTTPException(404, f"unknown rule id {req.rule_id!r}")
        return {"annotation": ann.to_dict()}

    @app.get("/v1/kappa")
    def kappa(rules: str | None = None, annotators: str | None = None) -> dict:
        rule_ids = rules.split(",") if rules else state.rule_order
        raters = annotators.split(",") if annotators else state.store.annotators()
        unknown = [r for r in rule_ids if r not in state.rules]
        if unknown:
            raise HTTPException(404, f"unknown rule id {unknown[0]!r}")
        base = {"n_rules": len(rule_ids), "n_annotators": len(raters)}
        if len(rule_ids) < 2 or len(raters) < 2:
            return {
                "kappa": None,
                "missing": [],
                "reason": "need at least 2 rules and 2 annotators",
                **base,
            }
        missing = state.store.missing_cells(rule_ids, raters)
        if missing:
            return {
                "kappa": None,
                "missing": [[r, a] for r, a in missing],
                "annotated_rules": len(rule_ids) - len({r for r, _ in missing}),
                **base,
            }
        try:
            value = state.store.fleiss_kappa(rule_ids, raters)
        except IncompleteMatrixError as exc:  # pragma: no cover - guarded above
            return {"kappa": None, "missing": [[r, a] for r, a in exc.missing], **base}
        return {"kappa": value, "missing": [], **base}

    if ui_dir:
        from fastapi.staticfiles import StaticFiles

        app.mount("/ui", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app
