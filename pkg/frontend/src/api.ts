/** Thin fetch client over the annotation service API. */

import type {
  AnnotationBody,
  ApiErrorBody,
  NextResponse,
  Stats,
  SubmitAck,
} from "./types.js";

export class ApiError extends Error {
  readonly code: string;
  readonly status: number;

  constructor(status: number, body: ApiErrorBody) {
    super(body.message);
    this.code = body.error;
    this.status = status;
  }
}

async function asJson<T>(res: Response): Promise<T> {
  if (!res.ok) {
    let body: ApiErrorBody;
    try {
      body = (await res.json()) as ApiErrorBody;
    } catch {
      body = { error: "http-error", message: `HTTP ${res.status}` };
    }
    throw new ApiError(res.status, body);
  }
  return (await res.json()) as T;
}

export class ApiClient {
  constructor(
    private readonly base = "",
    private readonly doFetch: typeof fetch = (...args) => fetch(...args),
  ) {}

  next(annotator: string): Promise<NextResponse> {
    const q = encodeURIComponent(annotator);
    return this.doFetch(`${this.base}/api/next?annotator=${q}`).then((r) =>
      asJson<NextResponse>(r),
    );
  }

  submit(body: AnnotationBody): Promise<SubmitAck> {
    return this.doFetch(`${this.base}/api/annotation`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    }).then((r) => asJson<SubmitAck>(r));
  }

  stats(): Promise<Stats> {
    return this.doFetch(`${this.base}/api/stats`).then((r) => asJson<Stats>(r));
  }

  imageUrl(path: string): string {
    return this.base + path;
  }
}
