// Shared test scaffolding: a programmable stand-in for the kzb HTTP service
// installed over global fetch (recording every request for payload
// assertions), plus DOM helpers for driving the mounted app.

import { Citation, ChatResponse, HistoryResponse, IngestStatus, ServerConfig } from "../src/api";
import { App, MountOptions, mountApp } from "../src/app";

export const REFUSAL =
  "I apologize, but I do not have any information about it in my Zotero library.";

export const TS = "2024-06-01T12:00:00+00:00";

export interface RecordedRequest {
  method: string;
  path: string;
  body: unknown;
}

export type Reply =
  | { status: number; body?: unknown; bytes?: Uint8Array; headers?: Record<string, string> }
  | "network";

export type AnswerFixture = Omit<ChatResponse, "session_id">;

export function defaultConfig(): ServerConfig {
  return {
    zotero: {
      library_type: "user",
      library_id: "",
      api_key: "",
      api_base: "https://api.zotero.org",
    },
    provider: {
      endpoint_url: "https://api.openai.com/v1",
      api_key: "",
      embedding_model: "text-embedding-ada-002",
      chat_model: "gpt-4",
      request_timeout: 30,
      mode: "live",
      mock_dimension: 64,
    },
    chunking: { chunk_size: 3000, chunk_overlap: 300 },
    rag: {
      top_k: 5,
      similarity_floor: 0.25,
      max_history_turns: 10,
      system_message: "",
      chat_model: "",
    },
    server: { listen_addr: "127.0.0.1:8765" },
  };
}

export function idleStatus(): IngestStatus {
  return { state: "idle", docs_found: 0, docs_extracted: 0, docs_skipped: 0, chunks_indexed: 0, errors: [] };
}

export function runningStatus(found: number, extracted: number): IngestStatus {
  return { state: "running", docs_found: found, docs_extracted: extracted, docs_skipped: 0, chunks_indexed: extracted * 3, errors: [] };
}

export function doneStatus(found = 3, extracted = 3, chunks = 9): IngestStatus {
  return { state: "done", docs_found: found, docs_extracted: extracted, docs_skipped: found - extracted, chunks_indexed: chunks, errors: [] };
}

export function failedStatus(errors: string[]): IngestStatus {
  return { state: "failed", docs_found: 0, docs_extracted: 0, docs_skipped: 0, chunks_indexed: 0, errors };
}

export const GROUNDED_CITATIONS: Citation[] = [
  {
    chunk_id: "BBB22222#0000",
    doc_id: "BBB22222",
    score: 0.6234,
    text: "Zobotite is a brittle gray mineral. The melting point of zobotite is 451 degrees.",
  },
  {
    chunk_id: "AAA11111#0002",
    doc_id: "AAA11111",
    score: 0.4418,
    text: "Granite is an igneous rock that forms from slowly cooling magma.",
  },
];

export function groundedAnswer(question: string): AnswerFixture {
  return {
    text: "The melting point of zobotite is 451 degrees.",
    citations: GROUNDED_CITATIONS,
    refused: false,
    question,
    created_at: TS,
  };
}

export function refusalAnswer(question: string): AnswerFixture {
  return { text: REFUSAL, citations: [], refused: true, question, created_at: TS };
}

function envelope(code: string, message: string): object {
  return { error: { code, message } };
}

export class FakeServer {
  requests: RecordedRequest[] = [];
  config = defaultConfig();
  health = { status: "ok", index_size: 0, dimension: 0 };
  ingestQueue: IngestStatus[] = [];
  lastIngest = idleStatus();
  ingestPostReply: Reply | null = null;
  configReply: Reply | null = null;
  offline = false;
  histories = new Map<string, HistoryResponse>();
  answerQueue: AnswerFixture[] = [];
  chatIntercept: ((sessionId: string, body: unknown) => Promise<Reply> | Reply) | null = null;
  exportBytes = new TextEncoder().encode(
    "session_id,turn_index,role,content,timestamp,citations\r\n",
  );
  private sessionCounter = 0;

  install(): () => void {
    const original = globalThis.fetch;
    const fake = async (input: RequestInfo | URL, init?: RequestInit): Promise<Response> => {
      const url =
        typeof input === "string" ? input : input instanceof URL ? input.toString() : input.url;
      const path = url.startsWith("http") ? new URL(url).pathname : url.split("?")[0];
      const method = (init?.method ?? "GET").toUpperCase();
      const body = init?.body ? JSON.parse(init.body as string) : undefined;
      this.requests.push({ method, path, body });
      if (this.offline) {
        throw new TypeError("fetch failed");
      }
      const reply = await this.handle(method, path, body);
      if (reply === "network") {
        throw new TypeError("fetch failed");
      }
      if (reply.bytes !== undefined) {
        return bytesResponse(reply.status, reply.bytes);
      }
      return jsonResponse(reply.status, reply.body ?? {});
    };
    globalThis.fetch = fake as typeof fetch;
    return () => {
      globalThis.fetch = original;
    };
  }

  async handle(method: string, path: string, body: unknown): Promise<Reply> {
    if (method === "GET" && path === "/api/config") {
      return { status: 200, body: this.config };
    }
    if (method === "POST" && path === "/api/config") {
      if (this.configReply) {
        const reply = this.configReply;
        this.configReply = null;
        return reply;
      }
      this.applyConfig(body);
      return { status: 200, body: this.config };
    }
    if (method === "GET" && path === "/api/health") {
      return { status: 200, body: this.health };
    }
    if (method === "POST" && path === "/api/ingest") {
      if (this.ingestPostReply) {
        const reply = this.ingestPostReply;
        this.ingestPostReply = null;
        return reply;
      }
      return { status: 202, body: { status: "accepted", status_url: "/api/ingest/status" } };
    }
    if (method === "GET" && path === "/api/ingest/status") {
      if (this.ingestQueue.length > 0) {
        this.lastIngest = this.ingestQueue.shift()!;
      }
      return { status: 200, body: this.lastIngest };
    }
    if (method === "POST" && path === "/api/sessions") {
      const id = `s-${++this.sessionCounter}`;
      this.histories.set(id, { session_id: id, created_at: TS, turns: [] });
      return { status: 201, body: { session_id: id, created_at: TS } };
    }
    const chat = path.match(/^\/api\/sessions\/([^/]+)\/chat$/);
    if (method === "POST" && chat) {
      const id = decodeURIComponent(chat[1]);
      if (this.chatIntercept) {
        return this.chatIntercept(id, body);
      }
      return this.defaultChat(id, body);
    }
    const history = path.match(/^\/api\/sessions\/([^/]+)\/history$/);
    if (method === "GET" && history) {
      const id = decodeURIComponent(history[1]);
      const record = this.histories.get(id);
      if (!record) {
        return { status: 404, body: envelope("unknown_session", `no session ${id}`) };
      }
      return { status: 200, body: record };
    }
    const exportCsv = path.match(/^\/api\/sessions\/([^/]+)\/export\.csv$/);
    if (method === "GET" && exportCsv) {
      if (!this.histories.has(decodeURIComponent(exportCsv[1]))) {
        return { status: 404, body: envelope("unknown_session", `no session ${exportCsv[1]}`) };
      }
      return { status: 200, bytes: this.exportBytes, headers: { "content-type": "text/csv" } };
    }
    return { status: 404, body: envelope("not_found", `no route for ${method} ${path}`) };
  }

  // Mimics the real endpoint: appends both turns to the session history and
  // returns the answer body. Tests queue canned answers to steer it.
  defaultChat(sessionId: string, body: unknown): Reply {
    const record = this.histories.get(sessionId);
    if (!record) {
      return { status: 404, body: envelope("unknown_session", `no session ${sessionId}`) };
    }
    const question = (body as { question?: string }).question ?? "";
    const answer = this.answerQueue.shift() ?? groundedAnswer(question);
    const base = record.turns.length;
    record.turns.push({ turn_index: base, role: "user", content: question, timestamp: TS, citations: [] });
    record.turns.push({
      turn_index: base + 1,
      role: "assistant",
      content: answer.text,
      timestamp: TS,
      citations: answer.citations.map((c) => c.chunk_id),
    });
    return { status: 200, body: { session_id: sessionId, ...answer } };
  }

  private applyConfig(body: unknown): void {
    const b = body as {
      zotero?: Record<string, unknown>;
      provider?: Record<string, unknown>;
      chunking?: Record<string, number>;
    };
    if (b?.zotero) {
      const z = this.config.zotero;
      if (typeof b.zotero.library_type === "string") z.library_type = b.zotero.library_type;
      if (typeof b.zotero.library_id === "string") z.library_id = b.zotero.library_id;
      if (b.zotero.api_key) z.api_key = "***";
      if ("collection_id" in b.zotero) {
        const collection = b.zotero.collection_id as string;
        if (collection) {
          z.collection_id = collection;
        } else {
          delete z.collection_id;
        }
      }
    }
    if (b?.provider) {
      if (b.provider.api_key) this.config.provider.api_key = "***";
      if (typeof b.provider.chat_model === "string") this.config.provider.chat_model = b.provider.chat_model;
      if (typeof b.provider.mode === "string") this.config.provider.mode = b.provider.mode;
    }
    if (b?.chunking) {
      Object.assign(this.config.chunking, b.chunking);
    }
  }
}

// A server already set up end to end: credentials saved, index populated.
// Ingest state is idle, as after a service restart; the populated index is
// what keeps the chat tab reachable.
export function configuredServer(): FakeServer {
  const server = new FakeServer();
  server.config.zotero.library_id = "12345";
  server.config.zotero.api_key = "***";
  server.config.provider.api_key = "***";
  server.health.index_size = 42;
  server.health.dimension = 64;
  return server;
}

function jsonResponse(status: number, body: unknown): Response {
  const text = JSON.stringify(body);
  return {
    ok: status >= 200 && status < 300,
    status,
    json: async () => JSON.parse(text),
    arrayBuffer: async () => new TextEncoder().encode(text).buffer,
  } as unknown as Response;
}

function bytesResponse(status: number, bytes: Uint8Array): Response {
  return {
    ok: status >= 200 && status < 300,
    status,
    json: async () => JSON.parse(new TextDecoder().decode(bytes)),
    arrayBuffer: async () => bytes.slice().buffer,
  } as unknown as Response;
}

export class MemoryStorage implements Storage {
  private map = new Map<string, string>();

  get length(): number {
    return this.map.size;
  }

  clear(): void {
    this.map.clear();
  }

  getItem(key: string): string | null {
    return this.map.has(key) ? this.map.get(key)! : null;
  }

  key(index: number): string | null {
    return [...this.map.keys()][index] ?? null;
  }

  removeItem(key: string): void {
    this.map.delete(key);
  }

  setItem(key: string, value: string): void {
    this.map.set(key, value);
  }
}

export interface Mounted {
  root: HTMLElement;
  app: App;
  storage: MemoryStorage;
}

export async function mount(options: Partial<MountOptions> = {}): Promise<Mounted> {
  document.body.innerHTML = '<div id="app"></div>';
  const root = document.getElementById("app") as HTMLElement;
  const storage = (options.storage as MemoryStorage) ?? new MemoryStorage();
  const app = mountApp(root, { pollIntervalMs: 5, ...options, storage });
  await app.ready;
  return { root, app, storage };
}

export async function waitFor(cond: () => boolean, ms = 3000): Promise<void> {
  const start = Date.now();
  while (!cond()) {
    if (Date.now() - start > ms) {
      throw new Error("waitFor: condition not met in time");
    }
    await new Promise((resolve) => setTimeout(resolve, 5));
  }
}

export async function flush(): Promise<void> {
  for (let i = 0; i < 5; i++) {
    await new Promise((resolve) => setTimeout(resolve, 0));
  }
}

export function deferred<T>(): { promise: Promise<T>; resolve: (v: T) => void; reject: (e: unknown) => void } {
  let resolve!: (v: T) => void;
  let reject!: (e: unknown) => void;
  const promise = new Promise<T>((res, rej) => {
    resolve = res;
    reject = rej;
  });
  return { promise, resolve, reject };
}

export function $(root: HTMLElement, selector: string): HTMLElement {
  const el = root.querySelector<HTMLElement>(selector);
  if (!el) {
    throw new Error(`missing element: ${selector}`);
  }
  return el;
}

export function setInput(root: HTMLElement, selector: string, value: string): void {
  const input = $(root, selector) as HTMLInputElement;
  input.value = value;
  input.dispatchEvent(new Event("input", { bubbles: true }));
}

export function clickRadio(root: HTMLElement, name: string, value: string): void {
  const radio = root.querySelector<HTMLInputElement>(`input[name="${name}"][value="${value}"]`);
  if (!radio) {
    throw new Error(`missing radio ${name}=${value}`);
  }
  radio.click();
}

export function click(root: HTMLElement, selector: string): void {
  ($(root, selector) as HTMLButtonElement).click();
}

export function visible(root: HTMLElement, selector: string): boolean {
  return !$(root, selector).classList.contains("hidden");
}

export function posts(server: FakeServer, path: string): RecordedRequest[] {
  return server.requests.filter((r) => r.method === "POST" && r.path === path);
}

// jsdom's Blob has no arrayBuffer(); FileReader is the portable route.
export function blobBytes(blob: Blob): Promise<Uint8Array> {
  return new Promise((resolve, reject) => {
    const reader = new FileReader();
    reader.onerror = () => reject(reader.error);
    reader.onload = () => resolve(new Uint8Array(reader.result as ArrayBuffer));
    reader.readAsArrayBuffer(blob);
  });
}
