// Thin client for the questlog HTTP API; fetch is injectable for tests.

import { QARequestBody, QAResponseBody, ReportDocument } from "./types.js";

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(
    public status: number,
    public detail: unknown,
  ) {
    super(`API error ${status}`);
  }
}

export class ApiClient {
  constructor(
    private baseUrl: string = "",
    private fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchFn(this.baseUrl + path, init);
    const body = await response.json().catch(() => null);
    if (!response.ok) {
      throw new ApiError(response.status, body && (body as { detail?: unknown }).detail);
    }
    return body as T;
  }

  createReport(student: string, unit: string, backend = "template"): Promise<{ report_id: string }> {
    return this.request("/reports", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ student, unit, backend }),
    });
  }

  getReport(reportId: string): Promise<ReportDocument> {
    return this.request(`/reports/${reportId}`);
  }

  ask(reportId: string, body: QARequestBody): Promise<QAResponseBody> {
    return this.request(`/reports/${reportId}/qa`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
  }
}
