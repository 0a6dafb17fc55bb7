import { describe, expect, it } from "vitest";

import {
  escapeHtml,
  patternText,
  renderKappa,
  renderRuleDetail,
  renderRuleList,
  renderWhatIf,
  underlineSpan,
} from "../src/render.js";
import type { Rule, WhatIfResponse } from "../src/types.js";

function makeRule(overrides: Partial<Rule> = {}): Rule {
  return {
    id: "r1",
    pattern: { doc_part: ["this", "book"], query_part: null },
    consequent: 1,
    support: 70,
    npmi: 1.0,
    coverage: 70,
    mean_cf_prob: 0.985,
    n_counterfactuals: 100,
    argmax_agreement: 1.0,
    cf_probs: [0.98, 0.99],
    examples: [
      {
        context_id: "ctx-abc",
        doc_text: "this book was read on a train",
        doc_span: [0, 2],
        query_text: null,
        query_span: null,
        probs: [0.01, 0.99],
      },
    ],
    ...overrides,
  };
}

describe("underlineSpan", () => {
  it("wraps exactly the span tokens", () => {
    expect(underlineSpan("a b c d", [1, 2])).toBe("a <u>b</u> <u>c</u> d");
  });

  it("handles a null span", () => {
    expect(underlineSpan("a b", null)).toBe("a b");
  });

  it("escapes html inside tokens", () => {
    expect(underlineSpan("<x> ok", [0, 1])).toBe("<u>&lt;x&gt;</u> ok");
  });
});

describe("renderRuleList", () => {
  it("shows an empty state without rules", () => {
    expect(renderRuleList([], "coverage", null, {})).toContain("No rules loaded");
  });

  it("keeps the server order and marks the sort column", () => {
    const rules = [makeRule({ id: "a", coverage: 5 }), makeRule({ id: "b", coverage: 9 })];
    const html = renderRuleList(rules, "npmi", null, {});
    expect(html.indexOf('data-rule-id="a"')).toBeLessThan(html.indexOf('data-rule-id="b"'));
    expect(html).toContain('data-sort="npmi">NPMI &darr;');
    expect(html).toContain('data-sort="coverage">coverage</th>');
  });

  it("renders annotation status chips", () => {
    const html = renderRuleList([makeRule()], "coverage", "r1", { r1: "wrong_reason" });
    expect(html).toContain("chip-wrong_reason");
    const unreviewed = renderRuleList([makeRule()], "coverage", null, {});
    expect(unreviewed).toContain("unreviewed");
  });
});

describe("renderRuleDetail", () => {
  it("underlines the pattern span inside examples", () => {
    const html = renderRuleDetail(makeRule(), {});
    expect(html).toContain("<u>this</u> <u>book</u> was read on a train");
    expect(html).toContain('data-context-id="ctx-abc"');
  });

  it("lists verdicts verbatim", () => {
    const html = renderRuleDetail(makeRule(), { dana: "wrong_reason" });
    expect(html).toContain("dana: wrong_reason");
  });

  it("formats two-part patterns with both sides", () => {
    const rule = makeRule({
      pattern: { doc_part: ["of", "the"], query_part: ["why", "is"] },
    });
    expect(patternText(rule)).toBe("(why is, of the)");
  });
});

describe("renderWhatIf", () => {
  const resp: WhatIfResponse = {
    counterfactual: {
      doc_text: "the worst film ever",
      doc_span: [1, 2],
      query_text: null,
      query_span: null,
    },
    probs: [0.8, 0.2],
    predicted: 0,
    context_neutrality: 0.05,
  };

  it("shows the spliced text and the served probability", () => {
    const html = renderWhatIf(resp, 0.2);
    expect(html).toContain("the <u>worst</u> <u>film</u> ever");
    expect(html).toContain('data-p1="0.2"');
    expect(html).not.toContain("badge-warn");
  });

  it("flags non-neutral contexts", () => {
    const html = renderWhatIf({ ...resp, context_neutrality: 0.9 }, 0.2);
    expect(html).toContain("badge-warn");
    expect(html).toContain("0.900");
  });
});

describe("renderKappa", () => {
  it("shows the value when complete", () => {
    const html = renderKappa({ kappa: -1.0, missing: [], n_rules: 2, n_annotators: 2 });
    expect(html).toContain("-1.000");
  });

  it("shows pending rule counts when incomplete", () => {
    const html = renderKappa({
      kappa: null,
      missing: [
        ["r1", "a"],
        ["r1", "b"],
        ["r2", "a"],
      ],
      n_rules: 3,
      n_annotators: 2,
    });
    expect(html).toContain("2/3 rules pending");
  });

  it("passes through the server reason", () => {
    const html = renderKappa({
      kappa: null, missing: [], n_rules: 1, n_annotators: 1,
      reason: "need at least 2 rules and 2 annotators",
    });
    expect(html).toContain("need at least 2");
  });
});

describe("escapeHtml", () => {
  it("escapes the dangerous characters", () => {
    expect(escapeHtml('<a href="x">&</a>')).toBe("&lt;a href=&quot;x&quot;&gt;&amp;&lt;/a&gt;");
  });
});
