/** Thin typed client over the annotation service's /api endpoints. */

import type { ApiQuery, ApiStatus, SeriesSlice, SubmitOk } from "./types.js";

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

async function readJson(resp: Response): Promise<unknown> {
  try {
    return await resp.json();
  } catch {
    return {};
  }
}

export class ApiClient {
  constructor(
    private readonly baseUrl: string = "",
    private readonly fetchImpl: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async get<T>(path: string, signal?: AbortSignal): Promise<T> {
    const resp = await this.fetchImpl(this.baseUrl + path, { signal });
    const body = await readJson(resp);
    if (!resp.ok) {
      const msg = (body as { error?: string }).error ?? `GET ${path} failed`;
      throw new ApiError(resp.status, msg);
    }
    return body as T;
  }

  status(signal?: AbortSignal): Promise<ApiStatus> {
    return this.get<ApiStatus>("/api/status", signal);
  }

  async queries(signal?: AbortSignal): Promise<ApiQuery[]> {
    const body = await this.get<{ queries: ApiQuery[] }>("/api/queries", signal);
    return body.queries;
  }

  seriesSlice(
    id: string,
    from: number,
    to: number,
    signal?: AbortSignal,
  ): Promise<SeriesSlice> {
    const params = `from=${from}&to=${to}`;
    return this.get<SeriesSlice>(
      `/api/series/${encodeURIComponent(id)}?${params}`,
      signal,
    );
  }

  async submitLabel(
    series: string,
    t: number,
    label: 0 | 1 | "skip",
  ): Promise<SubmitOk> {
    const resp = await this.fetchImpl(`${this.baseUrl}/api/labels`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ series, t, label }),
    });
    const body = await readJson(resp);
    if (!resp.ok) {
      const msg = (body as { error?: string }).error ?? "label rejected";
      throw new ApiError(resp.status, msg);
    }
    return body as SubmitOk;
  }
}
