// Thin REST client over the documented endpoints. fetch is injectable so
// tests can run without a browser or a live server.

import type {
  ApiErrorBody, BotInfo, ChatAnswer, EnrichmentCommand, SchemaResponse,
} from "./types.js";

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiRequestError extends Error {
  constructor(
    public status: number,
    public code: string,
    message: string,
    public details?: unknown,
  ) {
    super(message);
  }
}

async function parseError(response: Response): Promise<never> {
  let body: ApiErrorBody | null = null;
  try {
    body = (await response.json()) as ApiErrorBody;
  } catch {
    // non-JSON error body; fall through to the generic message
  }
  throw new ApiRequestError(
    response.status,
    body?.error?.code ?? "http_error",
    body?.error?.message ?? `HTTP ${response.status}`,
    body?.error?.details,
  );
}

export class TabotClient {
  constructor(
    private baseUrl: string = "",
    private fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async json<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchFn(this.baseUrl + path, init);
    if (!response.ok) await parseError(response);
    return (await response.json()) as T;
  }

  uploadDataset(csv: string, name: string): Promise<{ dataset_id: string } & SchemaResponse> {
    return this.json("/datasets", {
      method: "POST",
      headers: { "content-type": "text/csv", "x-dataset-name": name },
      body: csv,
    });
  }

  getSchema(datasetId: string): Promise<SchemaResponse> {
    return this.json(`/datasets/${datasetId}/schema`);
  }

  patchSchema(datasetId: string, commands: EnrichmentCommand[]): Promise<SchemaResponse> {
    return this.json(`/datasets/${datasetId}/schema`, {
      method: "PATCH",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ commands }),
    });
  }

  generateBot(datasetId: string, strategy = "auto"): Promise<BotInfo> {
    return this.json(`/datasets/${datasetId}/bot`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ strategy }),
    });
  }

  chat(datasetId: string, sessionId: string, utterance: string): Promise<ChatAnswer> {
    return this.json(`/datasets/${datasetId}/chat`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ session_id: sessionId, utterance }),
    });
  }

  rate(datasetId: string, sessionId: string, turnIndex: number,
       rating: "up" | "down"): Promise<{ rating: string }> {
    return this.json(`/datasets/${datasetId}/chat/${sessionId}/rating`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ turn_index: turnIndex, rating }),
    });
  }

  health(): Promise<{ status: string }> {
    return this.json("/health");
  }
}
