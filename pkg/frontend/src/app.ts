// Single-page wizard and chat client over the kzb HTTP service.
//
// Three tabs mirror the setup flow: Zotero credentials, OpenAI and chunking
// settings, then the chat itself. The chat tab stays locked until both
// config sections have been accepted and an ingestion run has finished.
// All rendered state is a projection of server responses, so a reload
// rebuilds the same transcript from the history endpoint.

import {
  ApiClient,
  ApiError,
  ChatResponse,
  HistoryTurn,
  IngestStatus,
  ServerConfig,
} from "./api";
import {
  Step,
  openaiPayload,
  splitChunkId,
  validateOpenai,
  validateZotero,
  zoteroPayload,
} from "./state";

const SESSION_KEY = "kzb.session_id";
const DEFAULT_POLL_MS = 1000;
const SAVED_KEY_PLACEHOLDER = "saved (leave blank to keep)";
const NETWORK_MSG = "network error: could not reach the server";

const STEPS: readonly Step[] = ["zotero", "openai", "chat"];

const FIELD_SPANS: Record<string, Record<string, string>> = {
  zotero: {
    apiKey: "#err-zotero-api-key",
    libraryId: "#err-zotero-library-id",
    collectionId: "#err-zotero-collection-id",
  },
  openai: {
    apiKey: "#err-openai-api-key",
    chunkSize: "#err-chunk-size",
    chunkOverlap: "#err-chunk-overlap",
  },
};

const TEMPLATE = `
<header class="masthead">
  <h1>KnimeZoBot</h1>
  <p class="tagline">Ask questions about the papers in your Zotero library</p>
</header>
<nav class="tabs" role="tablist">
  <button id="tab-zotero" class="tab" data-step="zotero" role="tab">Setting up Zotero</button>
  <button id="tab-openai" class="tab" data-step="openai" role="tab">Setting up OpenAI</button>
  <button id="tab-chat" class="tab" data-step="chat" role="tab">Chat App</button>
</nav>
<div id="global-banner" class="banner hidden"></div>

<section id="panel-zotero" class="panel" role="tabpanel">
  <h2>Step 1: Select Zotero Library Type</h2>
  <p class="hint">Select "User" to access your own library. Select "Group" to access a shared group library.</p>
  <div class="field radio-row">
    <label><input type="radio" name="library-type" value="user" checked> User</label>
    <label><input type="radio" name="library-type" value="group"> Group</label>
  </div>

  <h2>Step 2: Enter your Zotero API key</h2>
  <p class="hint">To create a Zotero API key, <a href="https://www.zotero.org/settings/keys" target="_blank" rel="noreferrer">click here</a>.</p>
  <div class="field">
    <label for="zotero-api-key">Zotero API key</label>
    <input id="zotero-api-key" type="password" autocomplete="off">
    <span class="field-error" id="err-zotero-api-key"></span>
  </div>

  <h2>Step 3: Enter your Zotero UserID / GroupID</h2>
  <p class="hint">To find your Zotero userID, <a href="https://www.zotero.org/settings/keys" target="_blank" rel="noreferrer">click here</a>. A group ID is part of the group URL (e.g. 2515542).</p>
  <div class="field">
    <label for="zotero-library-id">UserID / GroupID</label>
    <input id="zotero-library-id" inputmode="numeric" autocomplete="off">
    <span class="field-error" id="err-zotero-library-id"></span>
  </div>

  <h2>Step 4: Interacting with Collections</h2>
  <p class="hint">Select "Yes" to work with one collection, or "No" to use every PDF in the library. The collection ID is the part of the URL after the collections word (e.g. /collections/V2ZRQXE).</p>
  <div class="field radio-row">
    <span>Do you want to interact with a collection?</span>
    <label><input type="radio" name="use-collection" value="yes"> Yes</label>
    <label><input type="radio" name="use-collection" value="no" checked> No</label>
  </div>
  <div class="field hidden" id="collection-row">
    <label for="zotero-collection-id">Collection ID</label>
    <input id="zotero-collection-id" autocomplete="off">
    <span class="field-error" id="err-zotero-collection-id"></span>
  </div>

  <div class="actions">
    <button id="zotero-save" class="primary">Save and continue</button>
  </div>
  <div id="zotero-banner" class="banner hidden"></div>
</section>

<section id="panel-openai" class="panel hidden" role="tabpanel">
  <h2>Set up OpenAI</h2>
  <p class="hint">To create an OpenAI API key, <a href="https://platform.openai.com/api-keys" target="_blank" rel="noreferrer">click here</a>.</p>
  <div class="field">
    <label for="openai-api-key">OpenAI API key</label>
    <input id="openai-api-key" type="password" autocomplete="off">
    <span class="field-error" id="err-openai-api-key"></span>
  </div>
  <div class="field-grid">
    <div class="field">
      <label for="chunk-size">Chunk size</label>
      <input id="chunk-size" inputmode="numeric" value="3000">
      <span class="field-error" id="err-chunk-size"></span>
    </div>
    <div class="field">
      <label for="chunk-overlap">Chunk overlap</label>
      <input id="chunk-overlap" inputmode="numeric" value="300">
      <span class="field-error" id="err-chunk-overlap"></span>
    </div>
  </div>
  <div class="field">
    <label for="model-select">Model</label>
    <select id="model-select">
      <option value="gpt-4">gpt-4</option>
      <option value="gpt-3.5-turbo">gpt-3.5-turbo</option>
    </select>
  </div>
  <div class="actions">
    <button id="openai-save" class="primary">Save and build the index</button>
  </div>
  <div id="ingest-progress" class="progress hidden">
    <p id="ingest-state-line"></p>
    <ul class="counters">
      <li>documents found: <span id="count-found">0</span></li>
      <li>extracted: <span id="count-extracted">0</span></li>
      <li>skipped: <span id="count-skipped">0</span></li>
      <li>chunks indexed: <span id="count-chunks">0</span></li>
    </ul>
    <ul id="ingest-errors" class="error-list"></ul>
  </div>
  <div id="openai-banner" class="banner hidden"></div>
</section>

<section id="panel-chat" class="panel hidden" role="tabpanel">
  <div class="chat-head">
    <h2>Chat App</h2>
    <button id="download-history">Download history</button>
  </div>
  <div id="transcript" class="transcript"></div>
  <div id="chat-error" class="banner hidden">
    <span id="chat-error-text"></span>
    <button id="chat-retry">Retry</button>
  </div>
  <form id="chat-form">
    <input id="chat-input" placeholder="Ask about your library" autocomplete="off">
    <button id="chat-send" class="primary" type="submit">Send</button>
  </form>
</section>
`;

export interface MountOptions {
  api?: ApiClient;
  pollIntervalMs?: number;
  storage?: Storage;
}

export class App {
  readonly ready: Promise<void>;

  private readonly api: ApiClient;
  private readonly pollMs: number;
  private readonly storage: Storage;

  private step: Step = "zotero";
  private savedZoteroKey = false;
  private savedOpenaiKey = false;
  private mockProvider = false;
  private zoteroSaved = false;
  private openaiSaved = false;
  private ingest: IngestStatus | null = null;
  private indexSize = 0;
  private sessionId: string | null = null;
  private history: HistoryTurn[] = [];
  private rich = new Map<number, ChatResponse>();
  private inFlight = false;
  private polling = false;

  constructor(private readonly root: HTMLElement, options: MountOptions = {}) {
    this.api = options.api ?? new ApiClient();
    this.pollMs = options.pollIntervalMs ?? DEFAULT_POLL_MS;
    this.storage = options.storage ?? window.localStorage;
    this.root.innerHTML = TEMPLATE;
    this.wireEvents();
    this.renderTabs();
    this.ready = this.boot();
  }

  // ---- boot and navigation -------------------------------------------

  private async boot(): Promise<void> {
    const [configR, healthR, statusR] = await Promise.allSettled([
      this.api.getConfig(),
      this.api.health(),
      this.api.ingestStatus(),
    ]);
    if (configR.status === "fulfilled") {
      this.projectConfig(configR.value);
    } else {
      this.setBanner("#global-banner", "cannot reach the local server; start it with: kzb serve");
    }
    if (healthR.status === "fulfilled") {
      this.indexSize = healthR.value.index_size;
    }
    if (statusR.status === "fulfilled") {
      this.ingest = statusR.value;
      this.renderIngest();
      if (statusR.value.state === "running") {
        void this.pollIngest();
      }
    }
    if (this.chatReady() && this.storage.getItem(SESSION_KEY)) {
      await this.ensureSession();
      this.renderTranscript();
      this.goTo("chat");
    } else {
      this.goTo("zotero");
    }
  }

  private chatReady(): boolean {
    const ingested = this.ingest?.state === "done" || this.indexSize > 0;
    return this.zoteroSaved && this.openaiSaved && ingested;
  }

  private goTo(step: Step): void {
    if (step === "chat") {
      if (!this.chatReady()) {
        return;
      }
      if (!this.sessionId) {
        void this.enterChat();
      }
    }
    this.step = step;
    for (const s of STEPS) {
      this.$(`#panel-${s}`).classList.toggle("hidden", s !== step);
    }
    this.renderTabs();
  }

  // ---- server-state projection ---------------------------------------

  private projectConfig(config: ServerConfig): void {
    this.projectSecrets(config);
    this.zoteroSaved = Boolean(config.zotero.library_id) && this.savedZoteroKey;
    this.openaiSaved = this.savedOpenaiKey || this.mockProvider;

    this.setRadio("library-type", config.zotero.library_type || "user");
    this.$input("#zotero-library-id").value = config.zotero.library_id ?? "";
    const collection = config.zotero.collection_id ?? "";
    this.setRadio("use-collection", collection ? "yes" : "no");
    this.$input("#zotero-collection-id").value = collection;
    this.$("#collection-row").classList.toggle("hidden", !collection);

    this.$input("#chunk-size").value = String(config.chunking.chunk_size);
    this.$input("#chunk-overlap").value = String(config.chunking.chunk_overlap);
    const select = this.$<HTMLSelectElement>("#model-select");
    const model = config.provider.chat_model;
    if (model && !Array.from(select.options).some((o) => o.value === model)) {
      const option = document.createElement("option");
      option.value = model;
      option.textContent = model;
      select.appendChild(option);
    }
    if (model) {
      select.value = model;
    }
  }

  // Secrets never come back from the server in the clear; reflect only
  // whether one is stored, via the input placeholder.
  private projectSecrets(config: ServerConfig): void {
    this.savedZoteroKey = config.zotero.api_key === "***";
    this.savedOpenaiKey = config.provider.api_key === "***";
    this.mockProvider = config.provider.mode === "mock";
    this.$input("#zotero-api-key").placeholder = this.savedZoteroKey ? SAVED_KEY_PLACEHOLDER : "";
    this.$input("#openai-api-key").placeholder = this.savedOpenaiKey ? SAVED_KEY_PLACEHOLDER : "";
  }

  // ---- wizard steps ----------------------------------------------------

  private async saveZotero(): Promise<void> {
    const form = this.readZoteroForm();
    const errors = validateZotero(form, this.savedZoteroKey);
    this.renderFieldErrors("zotero", errors);
    this.setBanner("#zotero-banner", null);
    if (Object.keys(errors).length > 0) {
      return;
    }
    const button = this.$<HTMLButtonElement>("#zotero-save");
    button.disabled = true;
    try {
      const config = await this.api.postConfig(zoteroPayload(form));
      this.projectSecrets(config);
      this.zoteroSaved = true;
      this.$input("#zotero-api-key").value = "";
      this.goTo("openai");
    } catch (err) {
      if (err instanceof ApiError && err.code === "auth_failed") {
        this.renderFieldErrors("zotero", { apiKey: "invalid API key" });
      } else if (err instanceof ApiError) {
        this.setBanner("#zotero-banner", `${err.message} (${err.code})`);
      } else {
        this.setBanner("#zotero-banner", NETWORK_MSG);
      }
    } finally {
      button.disabled = false;
    }
  }

  private async saveOpenai(): Promise<void> {
    const form = this.readOpenaiForm();
    const errors = validateOpenai(form, this.savedOpenaiKey || this.mockProvider);
    this.renderFieldErrors("openai", errors);
    this.setBanner("#openai-banner", null);
    if (Object.keys(errors).length > 0) {
      return;
    }
    const button = this.$<HTMLButtonElement>("#openai-save");
    button.disabled = true;
    try {
      const config = await this.api.postConfig(openaiPayload(form));
      this.projectSecrets(config);
      this.openaiSaved = true;
      this.$input("#openai-api-key").value = "";
      try {
        await this.api.startIngest();
      } catch (err) {
        // a run already in progress is fine, just watch it
        if (!(err instanceof ApiError && err.code === "ingest_running")) {
          throw err;
        }
      }
      void this.pollIngest();
    } catch (err) {
      if (err instanceof ApiError && err.code === "auth_failed") {
        this.renderFieldErrors("openai", { apiKey: "invalid API key" });
      } else if (err instanceof ApiError && err.code === "invalid_params") {
        this.renderFieldErrors("openai", { chunkOverlap: err.message });
      } else if (err instanceof ApiError) {
        this.setBanner("#openai-banner", `${err.message} (${err.code})`);
      } else {
        this.setBanner("#openai-banner", NETWORK_MSG);
      }
    } finally {
      button.disabled = false;
    }
  }

  private async pollIngest(): Promise<void> {
    if (this.polling) {
      return;
    }
    this.polling = true;
    try {
      for (;;) {
        let status: IngestStatus | null = null;
        try {
          status = await this.api.ingestStatus();
        } catch {
          // transient poll failure, try again next tick
        }
        if (status) {
          this.ingest = status;
          this.renderIngest();
          this.renderTabs();
          if (status.state === "done") {
            await this.onIngestDone();
            return;
          }
          if (status.state === "failed" || status.state === "idle") {
            return;
          }
        }
        await sleep(this.pollMs);
      }
    } finally {
      this.polling = false;
    }
  }

  private async onIngestDone(): Promise<void> {
    try {
      this.indexSize = (await this.api.health()).index_size;
    } catch {
      // keep the previous value; ingest state alone already unlocks chat
    }
    try {
      await this.ensureSession();
    } catch (err) {
      this.setBanner("#openai-banner", describeError(err));
      return;
    }
    this.renderTranscript();
    this.goTo("chat");
  }

  // ---- chat ------------------------------------------------------------

  private async enterChat(): Promise<void> {
    try {
      await this.ensureSession();
      this.renderTranscript();
    } catch (err) {
      this.setChatError(describeError(err));
    }
  }

  private async ensureSession(): Promise<void> {
    if (!this.sessionId) {
      this.sessionId = this.storage.getItem(SESSION_KEY);
    }
    if (this.sessionId) {
      try {
        const hist = await this.api.history(this.sessionId);
        this.history = hist.turns;
        return;
      } catch {
        // stale or foreign id; start a fresh session
        this.sessionId = null;
        this.storage.removeItem(SESSION_KEY);
      }
    }
    const info = await this.api.createSession();
    this.sessionId = info.session_id;
    this.storage.setItem(SESSION_KEY, info.session_id);
    this.history = [];
  }

  private async sendQuestion(): Promise<void> {
    if (this.inFlight || !this.sessionId) {
      return;
    }
    const input = this.$input("#chat-input");
    const question = input.value.trim();
    if (!question) {
      return;
    }
    this.inFlight = true;
    this.setChatError(null);
    this.renderChatControls();
    try {
      const answer = await this.api.chat(this.sessionId, question);
      input.value = "";
      await this.syncTranscript(question, answer);
      this.renderTranscript();
    } catch (err) {
      // the typed question stays in the input so Retry can resend it
      this.setChatError(describeError(err));
    } finally {
      this.inFlight = false;
      this.renderChatControls();
    }
  }

  // The transcript is rendered from server history; the live answer only
  // enriches its own assistant turn with scores and snippet text.
  private async syncTranscript(question: string, answer: ChatResponse): Promise<void> {
    if (!this.sessionId) {
      return;
    }
    try {
      const hist = await this.api.history(this.sessionId);
      this.history = hist.turns;
      const last = [...hist.turns].reverse().find((t) => t.role === "assistant");
      if (last) {
        this.rich.set(last.turn_index, answer);
      }
    } catch {
      // degraded: append this exchange locally; the next fetch resyncs
      const base = this.history.length > 0
        ? this.history[this.history.length - 1].turn_index + 1
        : 0;
      this.history = [
        ...this.history,
        { turn_index: base, role: "user", content: question, timestamp: answer.created_at, citations: [] },
        {
          turn_index: base + 1,
          role: "assistant",
          content: answer.text,
          timestamp: answer.created_at,
          citations: answer.citations.map((c) => c.chunk_id),
        },
      ];
      this.rich.set(base + 1, answer);
    }
  }

  private async downloadHistory(): Promise<void> {
    if (!this.sessionId) {
      return;
    }
    try {
      const bytes = await this.api.exportCsv(this.sessionId);
      const blob = new Blob([bytes], { type: "text/csv" });
      const url = URL.createObjectURL(blob);
      const anchor = document.createElement("a");
      anchor.href = url;
      anchor.download = `kzb-history-${this.sessionId}.csv`;
      document.body.appendChild(anchor);
      anchor.click();
      anchor.remove();
      URL.revokeObjectURL(url);
    } catch (err) {
      this.setChatError(describeError(err));
    }
  }

  // ---- rendering -------------------------------------------------------

  private renderTabs(): void {
    for (const s of STEPS) {
      const tab = this.$<HTMLButtonElement>(`#tab-${s}`);
      tab.classList.toggle("active", this.step === s);
      if (s === "chat") {
        tab.disabled = !this.chatReady();
      }
    }
  }

  private renderIngest(): void {
    const box = this.$("#ingest-progress");
    const status = this.ingest;
    if (!status || status.state === "idle") {
      box.classList.add("hidden");
      return;
    }
    box.classList.remove("hidden");
    box.dataset.state = status.state;
    const lines: Record<string, string> = {
      running: "indexing your library, this can take a while",
      done: "ingestion complete",
      failed: "ingestion failed",
    };
    this.$("#ingest-state-line").textContent = lines[status.state] ?? status.state;
    this.$("#count-found").textContent = String(status.docs_found);
    this.$("#count-extracted").textContent = String(status.docs_extracted);
    this.$("#count-skipped").textContent = String(status.docs_skipped);
    this.$("#count-chunks").textContent = String(status.chunks_indexed);
    const list = this.$("#ingest-errors");
    list.textContent = "";
    for (const message of status.errors) {
      const item = document.createElement("li");
      item.textContent = message;
      list.appendChild(item);
    }
  }

  private renderTranscript(): void {
    const box = this.$("#transcript");
    box.textContent = "";
    for (const turn of this.history) {
      box.appendChild(this.renderTurn(turn));
    }
    box.scrollTop = box.scrollHeight;
  }

  private renderTurn(turn: HistoryTurn): HTMLElement {
    const msg = document.createElement("div");
    msg.className = `msg ${turn.role}`;
    msg.dataset.turnIndex = String(turn.turn_index);
    const bubble = document.createElement("div");
    bubble.className = "bubble";
    bubble.textContent = turn.content;
    msg.appendChild(bubble);
    if (turn.role === "assistant") {
      if (turn.citations.length === 0) {
        msg.classList.add("refusal");
        const tag = document.createElement("span");
        tag.className = "refusal-tag";
        tag.textContent = "not in library";
        msg.appendChild(tag);
      } else {
        msg.appendChild(this.renderCitations(turn));
      }
    }
    return msg;
  }

  private renderCitations(turn: HistoryTurn): HTMLElement {
    const rich = this.rich.get(turn.turn_index);
    const wrap = document.createElement("div");
    wrap.className = "citations";
    turn.citations.forEach((chunkId, i) => {
      const { doc, chunk } = splitChunkId(chunkId);
      const details = document.createElement("details");
      details.className = "citation-chip";
      const summary = document.createElement("summary");
      summary.textContent = `[${i + 1}] ${doc}`;
      const chunkRef = document.createElement("span");
      chunkRef.className = "chunk-ref";
      chunkRef.textContent = chunk ? ` #${chunk}` : "";
      summary.appendChild(chunkRef);
      details.appendChild(summary);
      const body = document.createElement("div");
      body.className = "citation-body";
      const ids = document.createElement("p");
      ids.className = "citation-ids";
      ids.textContent = `document ${doc}, chunk ${chunk || "?"}`;
      body.appendChild(ids);
      const hit = rich?.citations.find((c) => c.chunk_id === chunkId);
      if (hit) {
        const score = document.createElement("p");
        score.className = "citation-score";
        score.textContent = `score ${hit.score.toFixed(4)}`;
        body.appendChild(score);
        const text = document.createElement("p");
        text.className = "citation-text";
        text.textContent = hit.text;
        body.appendChild(text);
      }
      details.appendChild(body);
      wrap.appendChild(details);
    });
    return wrap;
  }

  private renderChatControls(): void {
    this.$input("#chat-input").disabled = this.inFlight;
    this.$<HTMLButtonElement>("#chat-send").disabled = this.inFlight;
  }

  private renderFieldErrors(section: "zotero" | "openai", errors: Record<string, string>): void {
    for (const [field, selector] of Object.entries(FIELD_SPANS[section])) {
      this.$(selector).textContent = errors[field] ?? "";
    }
  }

  private setChatError(message: string | null): void {
    this.$("#chat-error").classList.toggle("hidden", message === null);
    this.$("#chat-error-text").textContent = message ?? "";
  }

  private setBanner(selector: string, message: string | null): void {
    const banner = this.$(selector);
    banner.classList.toggle("hidden", message === null);
    banner.textContent = message ?? "";
  }

  // ---- form access -----------------------------------------------------

  private readZoteroForm() {
    return {
      libraryType: (this.readRadio("library-type") || "user") as "user" | "group",
      apiKey: this.$input("#zotero-api-key").value.trim(),
      libraryId: this.$input("#zotero-library-id").value.trim(),
      useCollection: this.readRadio("use-collection") === "yes",
      collectionId: this.$input("#zotero-collection-id").value.trim(),
    };
  }

  private readOpenaiForm() {
    return {
      apiKey: this.$input("#openai-api-key").value.trim(),
      chunkSize: this.$input("#chunk-size").value,
      chunkOverlap: this.$input("#chunk-overlap").value,
      model: this.$<HTMLSelectElement>("#model-select").value,
    };
  }

  private onUseCollectionChange(): void {
    const yes = this.readRadio("use-collection") === "yes";
    this.$("#collection-row").classList.toggle("hidden", !yes);
    if (!yes) {
      this.$input("#zotero-collection-id").value = "";
      this.$("#err-zotero-collection-id").textContent = "";
    }
  }

  private readRadio(name: string): string {
    const checked = this.root.querySelector<HTMLInputElement>(`input[name="${name}"]:checked`);
    return checked?.value ?? "";
  }

  private setRadio(name: string, value: string): void {
    for (const radio of this.root.querySelectorAll<HTMLInputElement>(`input[name="${name}"]`)) {
      radio.checked = radio.value === value;
    }
  }

  private wireEvents(): void {
    for (const s of STEPS) {
      this.$(`#tab-${s}`).addEventListener("click", () => this.goTo(s));
    }
    for (const radio of this.root.querySelectorAll<HTMLInputElement>('input[name="use-collection"]')) {
      radio.addEventListener("change", () => this.onUseCollectionChange());
    }
    this.$("#zotero-save").addEventListener("click", () => void this.saveZotero());
    this.$("#openai-save").addEventListener("click", () => void this.saveOpenai());
    this.$("#chat-form").addEventListener("submit", (event) => {
      event.preventDefault();
      void this.sendQuestion();
    });
    this.$("#chat-retry").addEventListener("click", () => void this.sendQuestion());
    this.$("#download-history").addEventListener("click", () => void this.downloadHistory());
    // typing in a field clears its stale validation message
    for (const fields of Object.values(FIELD_SPANS)) {
      for (const selector of Object.values(fields)) {
        const inputId = selector.replace("#err-", "#");
        const input = this.root.querySelector<HTMLInputElement>(inputId);
        input?.addEventListener("input", () => {
          this.$(selector).textContent = "";
        });
      }
    }
  }

  private $<T extends Element = HTMLElement>(selector: string): T {
    const el = this.root.querySelector<T>(selector);
    if (!el) {
      throw new Error(`missing element: ${selector}`);
    }
    return el;
  }

  private $input(selector: string): HTMLInputElement {
    return this.$<HTMLInputElement>(selector);
  }
}

export function mountApp(root: HTMLElement, options: MountOptions = {}): App {
  return new App(root, options);
}

function describeError(err: unknown): string {
  if (err instanceof ApiError) {
    return `${err.message} (${err.code})`;
  }
  return NETWORK_MSG;
}

function sleep(ms: number): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, ms));
}
