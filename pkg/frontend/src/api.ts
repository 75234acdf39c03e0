// Typed client for the review-service HTTP contract. Everything the UI
// sends or reads goes through here, so the contract lives in one place.

export type Layer = "input" | "mask" | "gt";
export type Status = "pending" | "accepted" | "rejected";
export type Verdict = "accepted" | "rejected";

export const REJECTION_REASONS = [
  "floating_humans",
  "disappearing_objects",
  "subtitles_or_overlays",
  "abrupt_camera_motion",
  "clip_overlap",
  "other",
] as const;
export type RejectionReason = (typeof REJECTION_REASONS)[number];

export interface ShadowParamsSummary {
  theta: number;
  s_x: number;
  s_y: number;
  alpha: number;
  sigma: number;
}

export interface ClipCard {
  clip_id: string;
  crowd_bin: number | null;
  crowd_percent: number | null;
  status: Status;
  split: string;
  shadow_params: ShadowParamsSummary | null;
}

export interface ClipDetail extends ClipCard {
  frame_count: number;
  fps: number;
}

export interface ClipListResponse {
  clips: ClipCard[];
  total: number;
  frame_count: number;
}

export interface DecisionBody {
  verdict: Verdict;
  reasons?: RejectionReason[];
  note?: string;
}

export interface ClipFilters {
  bin?: number;
  status?: Status;
  split?: string;
}

export interface ExportResponse {
  splits: Record<string, Record<string, string[]>>;
  accepted_count: number;
  rejected_count: number;
  pending_count: number;
}

/**
 * Client-side mirror of the service's decision invariant. Returns an
 * error message, or null when the body is postable. The service enforces
 * the same rule with a 422; this guard keeps invalid posts from ever
 * leaving the browser.
 */
export function validateDecision(body: DecisionBody): string | null {
  if (body.verdict !== "accepted" && body.verdict !== "rejected") {
    return `unknown verdict: ${String(body.verdict)}`;
  }
  const reasons = body.reasons ?? [];
  const unknown = reasons.filter(
    (r) => !(REJECTION_REASONS as readonly string[]).includes(r),
  );
  if (unknown.length > 0) {
    return `unknown reason tags: ${unknown.join(", ")}`;
  }
  if (body.verdict === "rejected" && reasons.length === 0) {
    return "a rejection needs at least one reason";
  }
  return null;
}

export class ApiError extends Error {
  constructor(
    public status: number,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

export class ValidationGuardError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "ValidationGuardError";
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ReviewApi {
  constructor(
    private baseUrl = "",
    private fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    let resp: Response;
    try {
      resp = await this.fetchFn(this.baseUrl + path, init);
    } catch (err) {
      throw new ApiError(0, `service unreachable: ${String(err)}`);
    }
    if (!resp.ok) {
      let detail = resp.statusText;
      try {
        const body = await resp.json();
        detail = JSON.stringify(body.detail ?? body);
      } catch {
        // non-JSON error body; keep the status text
      }
      throw new ApiError(resp.status, detail);
    }
    return (await resp.json()) as T;
  }

  listClips(filters: ClipFilters = {}): Promise<ClipListResponse> {
    const params = new URLSearchParams();
    if (filters.bin !== undefined) params.set("bin", String(filters.bin));
    if (filters.status !== undefined) params.set("status", filters.status);
    if (filters.split !== undefined) params.set("split", filters.split);
    const query = params.toString();
    return this.request<ClipListResponse>(`/clips${query ? "?" + query : ""}`);
  }

  clipDetail(clipId: string): Promise<ClipDetail> {
    return this.request<ClipDetail>(`/clips/${encodeURIComponent(clipId)}`);
  }

  frameUrl(clipId: string, index: number, layer: Layer): string {
    return `${this.baseUrl}/clips/${encodeURIComponent(clipId)}/frames/${index}?layer=${layer}`;
  }

  /** Posts a decision; throws ValidationGuardError before any network I/O
   *  when the body violates the contract. */
  postDecision(clipId: string, body: DecisionBody): Promise<ClipCard> {
    const problem = validateDecision(body);
    if (problem !== null) {
      return Promise.reject(new ValidationGuardError(problem));
    }
    return this.request<ClipCard>(
      `/clips/${encodeURIComponent(clipId)}/decision`,
      {
        method: "POST",
        headers: { "content-type": "application/json" },
        body: JSON.stringify(body),
      },
    );
  }

  getExport(): Promise<ExportResponse> {
    return this.request<ExportResponse>("/export");
  }
}
