/**
 * Typed client for the platform's JSON API. All business logic lives
 * server-side; this module only shapes requests and responses.
 */

export interface Reference {
  n: number;
  doc_id: string;
  display: string;
}

export interface TraceSummary {
  iterations: { thought: string; tool: string; query: string; hit_ids: string[] }[];
  iteration_cap: number;
  degraded: boolean;
}

export interface MessageResponse {
  text: string;
  references: Reference[];
  degraded: boolean;
  trace_summary: TraceSummary;
}

export interface Health {
  status: string;
  collections: Record<string, number>;
}

export interface SectionChart {
  kind: "stance_series" | "topic_weights" | "chat_themes";
  dates?: string[];
  supportive?: number[];
  opposed?: number[];
  neutral?: number[];
  unclear?: number[];
  labels?: string[];
  weights?: number[];
  counts?: number[];
}

export interface ReportSection {
  key: string;
  title: Record<string, string>;
  body: Record<string, string>;
  references: Reference[];
  charts: SectionChart[];
  notices: string[];
  empty: boolean;
}

export interface ReportDoc {
  id: string;
  window: { start: string; end: string };
  languages: string[];
  sections: ReportSection[];
  generated_at: string;
}

export interface ReportSummary {
  id: string;
  window: { start: string; end: string };
  generated_at: string;
}

export class ApiError extends Error {
  constructor(public status: number, message: string) {
    super(message);
  }
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    private baseUrl: string,
    private fetchImpl: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchImpl(`${this.baseUrl}${path}`, {
      headers: { "content-type": "application/json" },
      ...init,
    });
    if (!response.ok) {
      let detail = response.statusText;
      try {
        const body = await response.json();
        if (body && body.detail) detail = String(body.detail);
      } catch {
        /* non-JSON error body */
      }
      throw new ApiError(response.status, detail);
    }
    return (await response.json()) as T;
  }

  health(): Promise<Health> {
    return this.request<Health>("/health");
  }

  createSession(consent: boolean): Promise<{ session_id: string; consent: boolean }> {
    return this.request("/sessions", {
      method: "POST",
      body: JSON.stringify({ consent }),
    });
  }

  sendMessage(sessionId: string, text: string): Promise<MessageResponse> {
    return this.request(`/sessions/${sessionId}/messages`, {
      method: "POST",
      body: JSON.stringify({ text }),
    });
  }

  createReport(from: string, to: string): Promise<{ report_id: string }> {
    return this.request("/reports", {
      method: "POST",
      body: JSON.stringify({ from, to }),
    });
  }

  listReports(): Promise<{ reports: ReportSummary[] }> {
    return this.request("/reports");
  }

  getReport(reportId: string): Promise<ReportDoc> {
    return this.request(`/reports/${reportId}`);
  }

  reportHtmlUrl(reportId: string): string {
    return `${this.baseUrl}/reports/${reportId}/html`;
  }
}
