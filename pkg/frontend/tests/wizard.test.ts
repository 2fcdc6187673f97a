// Wizard behavior: tab gating, field validation, collection toggle,
// error mapping, secret placeholders, and ingest progress rendering.

import { afterEach, beforeEach, describe, expect, it } from "vitest";
import {
  $,
  FakeServer,
  click,
  clickRadio,
  configuredServer,
  doneStatus,
  failedStatus,
  mount,
  posts,
  runningStatus,
  setInput,
  visible,
  waitFor,
} from "./helpers";

let server: FakeServer;
let restore: () => void;

beforeEach(() => {
  server = new FakeServer();
  restore = server.install();
});

afterEach(() => {
  restore();
});

function fillZotero(root: HTMLElement): void {
  setInput(root, "#zotero-api-key", "zk-secret-1");
  setInput(root, "#zotero-library-id", "12345");
}

describe("boot", () => {
  it("starts on the zotero tab with chat locked", async () => {
    const { root } = await mount();
    expect(visible(root, "#panel-zotero")).toBe(true);
    expect(visible(root, "#panel-chat")).toBe(false);
    expect(($(root, "#tab-chat") as HTMLButtonElement).disabled).toBe(true);
  });

  it("shows a banner when the server is unreachable", async () => {
    server.offline = true;
    const { root } = await mount();
    expect(visible(root, "#global-banner")).toBe(true);
    expect($(root, "#global-banner").textContent).toContain("kzb serve");
  });

  it("projects saved config into the form fields", async () => {
    server.config.zotero.library_type = "group";
    server.config.zotero.library_id = "2515542";
    server.config.zotero.api_key = "***";
    server.config.zotero.collection_id = "V2ZRQXE";
    server.config.chunking = { chunk_size: 1000, chunk_overlap: 100 };
    const { root } = await mount();
    const groupRadio = root.querySelector<HTMLInputElement>('input[name="library-type"][value="group"]');
    expect(groupRadio?.checked).toBe(true);
    expect(($(root, "#zotero-library-id") as HTMLInputElement).value).toBe("2515542");
    expect(visible(root, "#collection-row")).toBe(true);
    expect(($(root, "#zotero-collection-id") as HTMLInputElement).value).toBe("V2ZRQXE");
    expect(($(root, "#chunk-size") as HTMLInputElement).value).toBe("1000");
    expect(($(root, "#chunk-overlap") as HTMLInputElement).value).toBe("100");
  });

  it("never places a saved secret into an input, only a placeholder", async () => {
    const there = configuredServer();
    restore();
    restore = there.install();
    const { root } = await mount();
    const key = $(root, "#zotero-api-key") as HTMLInputElement;
    expect(key.value).toBe("");
    expect(key.placeholder).toContain("saved");
    const openaiKey = $(root, "#openai-api-key") as HTMLInputElement;
    expect(openaiKey.value).toBe("");
    expect(openaiKey.placeholder).toContain("saved");
  });
});

describe("zotero step", () => {
  it("letters in the id show an inline error and send no request", async () => {
    const { root } = await mount();
    setInput(root, "#zotero-api-key", "zk-secret-1");
    setInput(root, "#zotero-library-id", "12a45");
    click(root, "#zotero-save");
    expect($(root, "#err-zotero-library-id").textContent).toMatch(/digits only/);
    expect(posts(server, "/api/config")).toHaveLength(0);
    expect(visible(root, "#panel-zotero")).toBe(true);
  });

  it("accepts the group id 2515542 and posts it", async () => {
    const { root } = await mount();
    clickRadio(root, "library-type", "group");
    setInput(root, "#zotero-api-key", "zk-secret-1");
    setInput(root, "#zotero-library-id", "2515542");
    click(root, "#zotero-save");
    await waitFor(() => visible(root, "#panel-openai"));
    expect($(root, "#err-zotero-library-id").textContent).toBe("");
    const [post] = posts(server, "/api/config");
    expect((post.body as { zotero: { library_id: string; library_type: string } }).zotero).toMatchObject({
      library_type: "group",
      library_id: "2515542",
    });
  });

  it("selecting Yes shows the collection field, No hides and clears it", async () => {
    const { root } = await mount();
    expect(visible(root, "#collection-row")).toBe(false);
    clickRadio(root, "use-collection", "yes");
    expect(visible(root, "#collection-row")).toBe(true);
    setInput(root, "#zotero-collection-id", "V2ZRQXE");
    clickRadio(root, "use-collection", "no");
    expect(visible(root, "#collection-row")).toBe(false);
    expect(($(root, "#zotero-collection-id") as HTMLInputElement).value).toBe("");
  });

  it("requires a collection id when Yes is selected", async () => {
    const { root } = await mount();
    fillZotero(root);
    clickRadio(root, "use-collection", "yes");
    click(root, "#zotero-save");
    expect($(root, "#err-zotero-collection-id").textContent).toBeTruthy();
    expect(posts(server, "/api/config")).toHaveLength(0);
  });

  it("maps a 403 onto the api key field as 'invalid API key'", async () => {
    server.configReply = {
      status: 403,
      body: { error: { code: "auth_failed", message: "Zotero rejected the API key (403)" } },
    };
    const { root } = await mount();
    fillZotero(root);
    click(root, "#zotero-save");
    await waitFor(() => $(root, "#err-zotero-api-key").textContent === "invalid API key");
    expect(visible(root, "#panel-zotero")).toBe(true);
    expect(($(root, "#tab-chat") as HTMLButtonElement).disabled).toBe(true);
  });

  it("an empty key field after save keeps the stored secret", async () => {
    const ready = configuredServer();
    restore();
    restore = ready.install();
    const { root } = await mount();
    click(root, "#zotero-save");
    await waitFor(() => visible(root, "#panel-openai"));
    const [post] = posts(ready, "/api/config");
    expect((post.body as { zotero: { api_key: string } }).zotero.api_key).toBe("");
    expect(ready.config.zotero.api_key).toBe("***");
  });
});

describe("openai step and ingest", () => {
  async function reachOpenai(root: HTMLElement): Promise<void> {
    fillZotero(root);
    click(root, "#zotero-save");
    await waitFor(() => visible(root, "#panel-openai"));
  }

  it("client-side chunking errors block the request", async () => {
    const { root } = await mount();
    await reachOpenai(root);
    setInput(root, "#openai-api-key", "sk-secret-2");
    setInput(root, "#chunk-size", "200");
    setInput(root, "#chunk-overlap", "300");
    click(root, "#openai-save");
    expect($(root, "#err-chunk-overlap").textContent).toMatch(/smaller than chunk size/);
    expect(posts(server, "/api/config")).toHaveLength(1); // only the zotero save
  });

  it("renders progress counters while running and unlocks chat when done", async () => {
    const { root } = await mount();
    await reachOpenai(root);
    setInput(root, "#openai-api-key", "sk-secret-2");
    server.ingestQueue = [runningStatus(3, 1), runningStatus(3, 2), doneStatus(3, 3, 12)];
    click(root, "#openai-save");

    await waitFor(() => $(root, "#ingest-progress").dataset.state === "running");
    expect(($(root, "#tab-chat") as HTMLButtonElement).disabled).toBe(true);
    click(root, "#tab-chat");
    expect(visible(root, "#panel-chat")).toBe(false);

    await waitFor(() => $(root, "#ingest-progress").dataset.state === "done");
    expect($(root, "#count-found").textContent).toBe("3");
    expect($(root, "#count-extracted").textContent).toBe("3");
    expect($(root, "#count-chunks").textContent).toBe("12");
    await waitFor(() => visible(root, "#panel-chat"));
    expect(($(root, "#tab-chat") as HTMLButtonElement).disabled).toBe(false);
    expect(posts(server, "/api/ingest")).toHaveLength(1);
    expect(posts(server, "/api/sessions")).toHaveLength(1);
  });

  it("a failed run lists its errors and keeps chat locked", async () => {
    const { root } = await mount();
    await reachOpenai(root);
    setInput(root, "#openai-api-key", "sk-secret-2");
    server.ingestQueue = [runningStatus(2, 0), failedStatus(["listing failed: HTTP 500"])];
    click(root, "#openai-save");
    await waitFor(() => $(root, "#ingest-progress").dataset.state === "failed");
    expect($(root, "#ingest-state-line").textContent).toBe("ingestion failed");
    expect($(root, "#ingest-errors").textContent).toContain("listing failed: HTTP 500");
    expect(($(root, "#tab-chat") as HTMLButtonElement).disabled).toBe(true);
    expect(visible(root, "#panel-chat")).toBe(false);
  });

  it("treats a 409 ingest_running as a run to watch", async () => {
    const { root } = await mount();
    await reachOpenai(root);
    setInput(root, "#openai-api-key", "sk-secret-2");
    server.ingestPostReply = {
      status: 409,
      body: { error: { code: "ingest_running", message: "an ingestion run is already in progress" } },
    };
    server.ingestQueue = [runningStatus(1, 0), doneStatus(1, 1, 4)];
    click(root, "#openai-save");
    await waitFor(() => visible(root, "#panel-chat"));
    expect($(root, "#openai-banner").textContent).toBe("");
  });
});

describe("restore", () => {
  it("resumes polling when a run is already in progress at boot", async () => {
    server.config.zotero.library_id = "12345";
    server.config.zotero.api_key = "***";
    server.config.provider.api_key = "***";
    server.lastIngest = runningStatus(5, 1);
    server.ingestQueue = [runningStatus(5, 3), doneStatus(5, 5, 20)];
    const { root } = await mount();
    await waitFor(() => $(root, "#ingest-progress").dataset.state === "done");
    expect(($(root, "#tab-chat") as HTMLButtonElement).disabled).toBe(false);
  });
});
