// Pure HTML-string renderers. No fetching, no arithmetic beyond
// formatting: every displayed number comes from the server as-is.

import type {
  ContextRow,
  KappaResponse,
  Rule,
  SortKey,
  WhatIfResponse,
} from "./types.js";

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

/** Wrap the span's tokens (token offsets, not characters) in <u>. */
export function underlineSpan(text: string, span: [number, number] | null): string {
  const tokens = text.split(" ").filter((t) => t.length > 0);
  if (!span) return escapeHtml(tokens.join(" "));
  const [start, length] = span;
  return tokens
    .map((tok, i) => {
      const safe = escapeHtml(tok);
      return i >= start && i < start + length ? `<u>${safe}</u>` : safe;
    })
    .join(" ");
}

export function patternText(rule: Rule): string {
  const doc = rule.pattern.doc_part.join(" ");
  if (rule.pattern.query_part === null) return doc;
  return `(${rule.pattern.query_part.join(" ")}, ${doc})`;
}

export function labelName(label: number): string {
  return label === 1 ? "label 1" : "label 0";
}

export function probBar(p1: number): string {
  const pct = (p1 * 100).toFixed(1);
  return (
    `<div class="prob-bar" data-p1="${p1}">` +
    `<div class="prob-fill" style="width:${pct}%"></div>` +
    `<span class="prob-text">P(label 1) = ${pct}%</span></div>`
  );
}

export function renderRuleList(
  rules: Rule[],
  sort: SortKey,
  selectedId: string | null,
  annotationStatus: Record<string, string>,
): string {
  if (rules.length === 0) {
    return `<p class="empty-state">No rules loaded. Run the mining pipeline first.</p>`;
  }
  const rows = rules
    .map((rule) => {
      const selected = rule.id === selectedId ? " selected" : "";
      const verdict = annotationStatus[rule.id];
      const chip = verdict
        ? `<span class="chip chip-${escapeHtml(verdict)}">${escapeHtml(verdict)}</span>`
        : `<span class="chip chip-pending">unreviewed</span>`;
      return (
        `<tr class="rule-row${selected}" data-rule-id="${escapeHtml(rule.id)}">` +
        `<td class="pattern">${escapeHtml(patternText(rule))} &rarr; ${labelName(rule.consequent)}</td>` +
        `<td>${rule.coverage}</td>` +
        `<td>${rule.npmi.toFixed(3)}</td>` +
        `<td>${rule.mean_cf_prob.toFixed(3)}</td>` +
        `<td>${chip}</td></tr>`
      );
    })
    .join("");
  const arrow = (key: SortKey) => (key === sort ? " &darr;" : "");
  return (
    `<table class="rule-table"><thead><tr>` +
    `<th>rule</th>` +
    `<th class="sortable" data-sort="coverage">coverage${arrow("coverage")}</th>` +
    `<th class="sortable" data-sort="npmi">NPMI${arrow("npmi")}</th>` +
    `<th class="sortable" data-sort="mean_cf_prob">mean cf${arrow("mean_cf_prob")}</th>` +
    `<th>status</th>` +
    `</tr></thead><tbody>${rows}</tbody></table>`
  );
}

export function renderRuleDetail(rule: Rule, annotations: Record<string, string>): string {
  const examples = rule.examples
    .map((ex) => {
      const query =
        ex.query_text !== null
          ? `<div class="cf-query">query: ${underlineSpan(ex.query_text, ex.query_span)}</div>`
          : "";
      return (
        `<li class="cf-example" data-context-id="${escapeHtml(ex.context_id)}">` +
        query +
        `<div class="cf-doc">${underlineSpan(ex.doc_text, ex.doc_span)}</div>` +
        probBar(ex.probs[1]) +
        `</li>`
      );
    })
    .join("");
  const verdicts = Object.entries(annotations)
    .map(([who, verdict]) => `<li>${escapeHtml(who)}: ${escapeHtml(verdict)}</li>`)
    .join("");
  return (
    `<h2>${escapeHtml(patternText(rule))} &rarr; ${labelName(rule.consequent)}</h2>` +
    `<dl class="rule-stats">` +
    `<dt>support</dt><dd>${rule.support}</dd>` +
    `<dt>coverage</dt><dd>${rule.coverage}</dd>` +
    `<dt>NPMI</dt><dd>${rule.npmi.toFixed(4)}</dd>` +
    `<dt>mean counterfactual probability</dt><dd>${rule.mean_cf_prob.toFixed(4)} over ${rule.n_counterfactuals}</dd>` +
    `</dl>` +
    `<h3>counterfactual evidence</h3><ul class="cf-list">${examples || "<li>none stored</li>"}</ul>` +
    `<h3>verdicts</h3><ul class="verdict-list">${verdicts || "<li>none yet</li>"}</ul>`
  );
}

export function renderContextOptions(contexts: ContextRow[], selectedId: string | null): string {
  return contexts
    .map((ctx) => {
      const label = ctx.doc_text.length > 60 ? ctx.doc_text.slice(0, 57) + "..." : ctx.doc_text;
      const sel = ctx.id === selectedId ? " selected" : "";
      return `<option value="${escapeHtml(ctx.id)}"${sel}>${escapeHtml(label)} (neutrality ${ctx.neutrality.toFixed(3)})</option>`;
    })
    .join("");
}

/** Probe result plus a badge when the context is off the decision border. */
export function renderWhatIf(resp: WhatIfResponse, neutralityWarnAbove: number): string {
  const query =
    resp.counterfactual.query_text !== null
      ? `<div class="cf-query">query: ${underlineSpan(resp.counterfactual.query_text, resp.counterfactual.query_span)}</div>`
      : "";
  const neutrality = resp.context_neutrality;
  const badge =
    neutrality !== null && neutrality > neutralityWarnAbove
      ? `<span class="badge badge-warn">non-neutral context (neutrality ${neutrality.toFixed(3)})</span>`
      : "";
  return (
    `<div class="whatif-result">` +
    query +
    `<div class="cf-doc">${underlineSpan(resp.counterfactual.doc_text, resp.counterfactual.doc_span)}</div>` +
    probBar(resp.probs[1]) +
    `<div class="predicted">predicted: ${labelName(resp.predicted)}</div>` +
    badge +
    `</div>`
  );
}

export function renderWhatIfError(message: string): string {
  return `<div class="whatif-result error">${escapeHtml(message)}</div>`;
}

export function renderKappa(resp: KappaResponse): string {
  if (resp.kappa === null) {
    if (resp.reason) {
      return `<div class="kappa">&kappa; unavailable: ${escapeHtml(resp.reason)}</div>`;
    }
    const pendingRules = new Set(resp.missing.map(([ruleId]) => ruleId)).size;
    return `<div class="kappa">&kappa; pending: ${pendingRules}/${resp.n_rules} rules pending</div>`;
  }
  return (
    `<div class="kappa">Fleiss &kappa; = <strong>${resp.kappa.toFixed(3)}</strong> ` +
    `(${resp.n_rules} rules, ${resp.n_annotators} annotators)</div>`
  );
}
