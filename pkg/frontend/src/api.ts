// Typed client for the kzb HTTP service. Every call goes through fetch so
// tests can record request payloads by stubbing the global.

export interface Citation {
  chunk_id: string;
  doc_id: string;
  score: number;
  text: string;
}

export interface ChatResponse {
  session_id: string;
  text: string;
  citations: Citation[];
  refused: boolean;
  question: string;
  created_at: string;
}

export interface IngestStatus {
  state: "idle" | "running" | "done" | "failed";
  docs_found: number;
  docs_extracted: number;
  docs_skipped: number;
  chunks_indexed: number;
  errors: string[];
}

export interface HistoryTurn {
  turn_index: number;
  role: "user" | "assistant";
  content: string;
  timestamp: string;
  citations: string[];
}

export interface HistoryResponse {
  session_id: string;
  created_at: string;
  turns: HistoryTurn[];
}

export interface SessionInfo {
  session_id: string;
  created_at: string;
}

export interface HealthResponse {
  status: string;
  index_size: number;
  dimension: number;
}

// Redacted view of the server configuration; secrets come back as "***".
export interface ServerConfig {
  zotero: {
    library_type: string;
    library_id: string;
    api_key: string;
    api_base: string;
    collection_id?: string;
  };
  provider: {
    endpoint_url: string;
    api_key: string;
    embedding_model: string;
    chat_model: string;
    request_timeout: number;
    mode: string;
    mock_dimension: number;
  };
  chunking: { chunk_size: number; chunk_overlap: number };
  rag: {
    top_k: number;
    similarity_floor: number;
    max_history_turns: number;
    system_message: string;
    chat_model: string;
  };
  server: { listen_addr: string };
}

export class ApiError extends Error {
  constructor(
    public readonly code: string,
    message: string,
    public readonly status: number,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

async function request(method: string, path: string, body?: unknown): Promise<unknown> {
  const init: RequestInit = { method };
  if (body !== undefined) {
    init.headers = { "content-type": "application/json" };
    init.body = JSON.stringify(body);
  }
  const res = await fetch(path, init);
  if (!res.ok) {
    throw await toApiError(res);
  }
  return res.json();
}

async function toApiError(res: Response): Promise<ApiError> {
  let code = "http_error";
  let message = `HTTP ${res.status}`;
  try {
    const envelope = (await res.json()) as { error?: { code?: string; message?: string } };
    if (envelope && envelope.error) {
      code = envelope.error.code ?? code;
      message = envelope.error.message ?? message;
    }
  } catch {
    // non-JSON error body; keep the generic message
  }
  return new ApiError(code, message, res.status);
}

export class ApiClient {
  constructor(private readonly base: string = "") {}

  getConfig(): Promise<ServerConfig> {
    return request("GET", `${this.base}/api/config`) as Promise<ServerConfig>;
  }

  postConfig(payload: object): Promise<ServerConfig> {
    return request("POST", `${this.base}/api/config`, payload) as Promise<ServerConfig>;
  }

  health(): Promise<HealthResponse> {
    return request("GET", `${this.base}/api/health`) as Promise<HealthResponse>;
  }

  startIngest(): Promise<unknown> {
    return request("POST", `${this.base}/api/ingest`, {});
  }

  ingestStatus(): Promise<IngestStatus> {
    return request("GET", `${this.base}/api/ingest/status`) as Promise<IngestStatus>;
  }

  createSession(): Promise<SessionInfo> {
    return request("POST", `${this.base}/api/sessions`, {}) as Promise<SessionInfo>;
  }

  chat(sessionId: string, question: string): Promise<ChatResponse> {
    return request(
      "POST",
      `${this.base}/api/sessions/${encodeURIComponent(sessionId)}/chat`,
      { question },
    ) as Promise<ChatResponse>;
  }

  history(sessionId: string): Promise<HistoryResponse> {
    return request(
      "GET",
      `${this.base}/api/sessions/${encodeURIComponent(sessionId)}/history`,
    ) as Promise<HistoryResponse>;
  }

  // Returns the raw CSV bytes so the download preserves them exactly.
  async exportCsv(sessionId: string): Promise<Uint8Array<ArrayBuffer>> {
    const res = await fetch(
      `${this.base}/api/sessions/${encodeURIComponent(sessionId)}/export.csv`,
    );
    if (!res.ok) {
      throw await toApiError(res);
    }
    return new Uint8Array(await res.arrayBuffer());
  }
}
