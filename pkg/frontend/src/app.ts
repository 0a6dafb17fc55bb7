// Browser wiring: state, event handlers, and re-rendering. All data comes
// from the /v1 API; annotation writes are optimistic with rollback.

import { ApiClient, ApiRequestError } from "./api.js";
import {
  renderContextOptions,
  renderKappa,
  renderRuleDetail,
  renderRuleList,
  renderWhatIf,
  renderWhatIfError,
} from "./render.js";
import type { Rule, SortKey, Verdict } from "./types.js";

const NEUTRALITY_WARN_ABOVE = 0.2;

const api = new ApiClient("");

interface AppState {
  rules: Rule[];
  sort: SortKey;
  selectedId: string | null;
  annotations: Record<string, string>; // rule id -> current annotator's verdict
  contextsLoaded: boolean;
}

const state: AppState = {
  rules: [],
  sort: "coverage",
  selectedId: null,
  annotations: {},
  contextsLoaded: false,
};

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function annotatorName(): string {
  return (el<HTMLInputElement>("annotator").value || "").trim();
}

async function refreshRules(): Promise<void> {
  const body = await api.listRules(state.sort);
  state.rules = body.rules;
  if (state.selectedId === null && state.rules.length > 0) {
    state.selectedId = state.rules[0].id;
  }
  el("rule-list").innerHTML = renderRuleList(
    state.rules, state.sort, state.selectedId, state.annotations,
  );
  await refreshDetail();
}

async function refreshDetail(): Promise<void> {
  if (state.selectedId === null) {
    el("rule-detail").innerHTML = "<p class='empty-state'>Select a rule.</p>";
    return;
  }
  const body = await api.getRule(state.selectedId);
  el("rule-detail").innerHTML = renderRuleDetail(body.rule, body.annotations);
  const who = annotatorName();
  if (who && body.annotations[who]) {
    state.annotations[state.selectedId] = body.annotations[who];
  }
  el<HTMLInputElement>("whatif-pattern").value = body.rule.pattern.doc_part.join(" ");
  if (body.rule.pattern.query_part !== null) {
    el<HTMLInputElement>("whatif-query-pattern").value = body.rule.pattern.query_part.join(" ");
  }
}

async function refreshKappa(): Promise<void> {
  el("kappa").innerHTML = renderKappa(await api.kappa());
}

async function loadContexts(): Promise<void> {
  const body = await api.listContexts(1, 200);
  el<HTMLSelectElement>("whatif-context").innerHTML =
    `<option value="">(raw text below)</option>` + renderContextOptions(body.contexts, null);
  state.contextsLoaded = true;
}

async function runWhatIf(): Promise<void> {
  const docPattern = el<HTMLInputElement>("whatif-pattern").value.trim().split(/\s+/).filter(Boolean);
  const queryPatternRaw = el<HTMLInputElement>("whatif-query-pattern").value.trim();
  const contextId = el<HTMLSelectElement>("whatif-context").value;
  const rawText = el<HTMLInputElement>("whatif-raw-text").value;
  const rawIndex = Number(el<HTMLInputElement>("whatif-raw-index").value || "0");
  try {
    const resp = await api.whatIf({
      doc_pattern: docPattern,
      query_pattern: queryPatternRaw ? queryPatternRaw.split(/\s+/) : null,
      context_id: contextId || null,
      raw_context: contextId ? null : { text: rawText, insertion_index: rawIndex },
    });
    el("whatif-output").innerHTML = renderWhatIf(resp, NEUTRALITY_WARN_ABOVE);
  } catch (err) {
    const message = err instanceof ApiRequestError ? `${err.code}: ${err.message}` : String(err);
    el("whatif-output").innerHTML = renderWhatIfError(message);
  }
}

async function submitVerdict(verdict: Verdict): Promise<void> {
  const ruleId = state.selectedId;
  const who = annotatorName();
  if (!ruleId) return;
  if (!who) {
    alert("Set your annotator name first.");
    return;
  }
  const previous = state.annotations[ruleId];
  state.annotations[ruleId] = verdict; // optimistic
  el("rule-list").innerHTML = renderRuleList(state.rules, state.sort, ruleId, state.annotations);
  try {
    await api.annotate(ruleId, who, verdict);
    await Promise.all([refreshDetail(), refreshKappa()]);
  } catch (err) {
    if (previous === undefined) delete state.annotations[ruleId];
    else state.annotations[ruleId] = previous;
    el("rule-list").innerHTML = renderRuleList(state.rules, state.sort, ruleId, state.annotations);
    alert(`annotation failed: ${err instanceof Error ? err.message : err}`);
  }
}

function attachHandlers(): void {
  el("rule-list").addEventListener("click", (event) => {
    const target = event.target as HTMLElement;
    const header = target.closest<HTMLElement>("th.sortable");
    if (header?.dataset.sort) {
      state.sort = header.dataset.sort as SortKey;
      void refreshRules();
      return;
    }
    const row = target.closest<HTMLElement>("tr.rule-row");
    if (row?.dataset.ruleId) {
      state.selectedId = row.dataset.ruleId;
      void refreshRules();
    }
  });
  el("rule-detail").addEventListener("click", (event) => {
    const item = (event.target as HTMLElement).closest<HTMLElement>("li.cf-example");
    if (item?.dataset.contextId) {
      el<HTMLSelectElement>("whatif-context").value = item.dataset.contextId;
      void runWhatIf();
    }
  });
  el("whatif-run").addEventListener("click", () => void runWhatIf());
  el("whatif-pattern").addEventListener("change", () => void runWhatIf());
  for (const verdict of ["wrong_reason", "right_reason", "cannot_tell"] as Verdict[]) {
    el(`verdict-${verdict}`).addEventListener("click", () => void submitVerdict(verdict));
  }
  el("annotator").addEventListener("change", () => void refreshRules());
}

async function start(): Promise<void> {
  const health = await api.health();
  el("status").textContent =
    `${health.rules} rules, ${health.contexts} contexts, ` +
    `model ${String(health.model_fingerprint).slice(0, 12)}`;
  attachHandlers();
  await Promise.all([refreshRules(), refreshKappa(), loadContexts()]);
}

start().catch((err) => {
  el("status").textContent = `failed to reach the service: ${err}`;
});
