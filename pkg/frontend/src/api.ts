import type { AgreementView, JudgmentSubmission, ProgressView, SubmitOutcome, TaskView } from "./types.js";

export class ApiError extends Error {
  constructor(message: string, readonly status?: number) {
    super(message);
  }
}

type FetchLike = typeof fetch;

/** Thin client over the four annotation endpoints. */
export class AnnotationApi {
  constructor(
    private readonly baseUrl: string = "",
    private readonly fetchFn: FetchLike = fetch,
  ) {}

  private async request(path: string, init?: RequestInit): Promise<Response> {
    let response: Response;
    try {
      response = await this.fetchFn(`${this.baseUrl}${path}`, init);
    } catch (err) {
      throw new ApiError(`network failure: ${String(err)}`);
    }
    return response;
  }

  /** Next unlabeled task for this annotator, or null when everything is done. */
  async nextTask(annotatorId: string): Promise<TaskView | null> {
    const response = await this.request(
      `/api/tasks/next?annotator=${encodeURIComponent(annotatorId)}`,
    );
    if (response.status === 204) return null;
    if (!response.ok) throw new ApiError(`next-task failed: ${response.status}`, response.status);
    return (await response.json()) as TaskView;
  }

  /** Submit one judgment; a duplicate (task, annotator) resolves to "conflict". */
  async submitLabel(submission: JudgmentSubmission): Promise<SubmitOutcome> {
    const response = await this.request("/api/labels", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(submission),
    });
    if (response.status === 201) return "created";
    if (response.status === 409) return "conflict";
    const detail = await response.text().catch(() => "");
    throw new ApiError(`submission failed: ${response.status} ${detail}`, response.status);
  }

  async progress(): Promise<ProgressView> {
    const response = await this.request("/api/progress");
    if (!response.ok) throw new ApiError(`progress failed: ${response.status}`, response.status);
    return (await response.json()) as ProgressView;
  }

  /** Agreement result, or null while no unit has two labels yet (409). */
  async agreement(): Promise<AgreementView | null> {
    const response = await this.request("/api/agreement");
    if (response.status === 409) return null;
    if (!response.ok) throw new ApiError(`agreement failed: ${response.status}`, response.status);
    return (await response.json()) as AgreementView;
  }
}
