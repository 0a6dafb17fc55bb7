import type {
  AnnotationResponse,
  ContextListResponse,
  HealthResponse,
  KappaResponse,
  RuleDetailResponse,
  RuleListResponse,
  SortKey,
  Verdict,
  WhatIfRequest,
  WhatIfResponse,
} from "./types.js";

export class ApiRequestError extends Error {
  constructor(
    public readonly status: number,
    public readonly code: string,
    message: string,
  ) {
    super(message);
    this.name = "ApiRequestError";
  }
}

/** Thin fetch wrapper over the service's /v1 endpoints. */
export class ApiClient {
  constructor(private readonly baseUrl: string = "") {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    let resp: Response;
    try {
      resp = await fetch(this.baseUrl + path, {
        headers: { "Content-Type": "application/json" },
        ...init,
      });
    } catch (err) {
      throw new ApiRequestError(0, "unreachable", String(err));
    }
    const body = await resp.json().catch(() => null);
    if (!resp.ok) {
      const code = body?.error?.code ?? "error";
      const message = body?.error?.message ?? resp.statusText;
      throw new ApiRequestError(resp.status, code, message);
    }
    return body as T;
  }

  health(): Promise<HealthResponse> {
    return this.request("/v1/health");
  }

  listRules(sort: SortKey = "coverage"): Promise<RuleListResponse> {
    return this.request(`/v1/rules?sort=${encodeURIComponent(sort)}`);
  }

  getRule(id: string): Promise<RuleDetailResponse> {
    return this.request(`/v1/rules/${encodeURIComponent(id)}`);
  }

  listContexts(page = 1, pageSize = 50): Promise<ContextListResponse> {
    return this.request(`/v1/contexts?page=${page}&page_size=${pageSize}`);
  }

  whatIf(req: WhatIfRequest): Promise<WhatIfResponse> {
    return this.request("/v1/whatif", { method: "POST", body: JSON.stringify(req) });
  }

  annotate(ruleId: string, annotator: string, verdict: Verdict): Promise<AnnotationResponse> {
    return this.request("/v1/annotations", {
      method: "POST",
      body: JSON.stringify({ rule_id: ruleId, annotator, verdict }),
    });
  }

  kappa(ruleIds?: string[], annotators?: string[]): Promise<KappaResponse> {
    const params = new URLSearchParams();
    if (ruleIds?.length) params.set("rules", ruleIds.join(","));
    if (annotators?.length) params.set("annotators", annotators.join(","));
    const qs = params.toString();
    return this.request(`/v1/kappa${qs ? "?" + qs : ""}`);
  }
}
