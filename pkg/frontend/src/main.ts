/** App wiring: polling, rendering, optimistic submits, keyboard handling. */

import { ApiClient, ApiError } from "./api.js";
import { intentFor, type Intent } from "./keyboard.js";
import { plotModel, renderPlot } from "./plot.js";
import { Poller } from "./poll.js";
import { QueueStore } from "./state.js";
import { queryKey, type QueryView } from "./types.js";

const CONTEXT_BEFORE = 3; // window lengths of context left of the query
const CONTEXT_AFTER = 2;

export class App {
  readonly store = new QueueStore();
  readonly poller: Poller;
  private nSteps = 25;
  private seriesLength = new Map<string, number>();
  private contextToken = 0;
  private notice = "";
  private bannerText: string | null = null;
  private readonly onKey = (e: KeyboardEvent): void => this.handleKey(e);

  constructor(
    private readonly root: HTMLElement,
    private readonly api: ApiClient,
    pollMs = 2000,
  ) {
    this.poller = new Poller((signal) => this.refresh(signal), pollMs);
    this.buildSkeleton();
    this.doc.addEventListener("keydown", this.onKey);
  }

  private get doc(): Document {
    return this.root.ownerDocument;
  }

  private buildSkeleton(): void {
    this.root.innerHTML = `
      <header id="status-bar">connecting…</header>
      <div id="banner" hidden>
        <span id="banner-text"></span>
        <button id="banner-retry" type="button">retry</button>
      </div>
      <div id="notice" hidden></div>
      <main>
        <section id="queue-pane">
          <h2>Queries</h2>
          <ul id="queue"></ul>
        </section>
        <section id="context-pane">
          <h2 id="context-title">Context</h2>
          <div id="context"></div>
        </section>
      </main>
      <footer id="help">
        keys: <b>a</b> anomalous · <b>n</b> normal · <b>s</b> skip ·
        <b>j</b>/<b>k</b> move · <b>r</b> refresh
      </footer>`;
    const retry = this.root.querySelector("#banner-retry") as HTMLButtonElement;
    retry.addEventListener("click", () => void this.poller.runOnce());
  }

  async refresh(signal?: AbortSignal): Promise<void> {
    try {
      const [status, queries] = await Promise.all([
        this.api.status(signal),
        this.api.queries(signal),
      ]);
      this.nSteps = status.n_steps;
      this.store.ingest(queries);
      this.bannerText = null;
    } catch (err) {
      if ((err as { name?: string }).name === "AbortError") throw err;
      // keep stale data on screen; only surface the failure
      this.bannerText = `fetch failed: ${(err as Error).message}`;
    }
    this.render();
  }

  handleKey(event: KeyboardEvent): void {
    const intent = intentFor(event);
    if (!intent) return;
    event.preventDefault();
    this.handleIntent(intent);
  }

  handleIntent(intent: Intent): void {
    switch (intent.kind) {
      case "label":
        void this.submitFocused(intent.label);
        break;
      case "skip":
        void this.submitFocused("skip");
        break;
      case "next":
        this.store.focusNext();
        this.render();
        break;
      case "prev":
        this.store.focusPrev();
        this.render();
        break;
      case "refresh":
        void this.poller.runOnce();
        break;
    }
  }

  async submitFocused(label: 0 | 1 | "skip"): Promise<void> {
    const view = this.store.focused();
    if (!view) return;
    const key = queryKey(view);
    if (!this.store.beginSubmit(key)) return;
    const decided = this.store.decide(
      key,
      label === "skip" ? { kind: "skipped" } : { kind: "labeled", label },
    );
    if (!decided) {
      this.store.endSubmit(key);
      return;
    }
    this.render();
    try {
      await this.api.submitLabel(view.series, view.t, label);
      this.store.focusNext();
    } catch (err) {
      if (err instanceof ApiError && err.status === 409) {
        this.store.markStale(key);
        this.notice = `t=${view.t} was already labeled elsewhere; removed`;
      } else {
        this.store.rollback(key);
        this.bannerText = `label failed: ${(err as Error).message}`;
      }
    } finally {
      this.store.endSubmit(key);
    }
    this.render();
  }

  render(): void {
    const statusBar = this.root.querySelector("#status-bar")!;
    const counts = this.store.counts();
    statusBar.textContent =
      `${counts.pending} pending · ${counts.labeled} labeled · ` +
      `${counts.skipped} skipped this session`;

    const banner = this.root.querySelector("#banner") as HTMLElement;
    const bannerText = this.root.querySelector("#banner-text")!;
    if (this.bannerText) {
      bannerText.textContent = this.bannerText;
      banner.hidden = false;
    } else {
      banner.hidden = true;
    }

    const noticeEl = this.root.querySelector("#notice") as HTMLElement;
    if (this.notice) {
      noticeEl.textContent = this.notice;
      noticeEl.hidden = false;
    } else {
      noticeEl.hidden = true;
    }

    this.renderQueue();
    void this.renderContext();
  }

  private renderQueue(): void {
    const list = this.root.querySelector("#queue") as HTMLElement;
    const views = this.store.visible();
    list.innerHTML = "";
    if (views.length === 0) {
      const empty = this.doc.createElement("li");
      empty.className = "empty";
      empty.textContent = "no pending queries";
      list.appendChild(empty);
      return;
    }
    const focusedId = this.store.focusedId();
    for (const view of views) {
      const key = queryKey(view);
      const item = this.doc.createElement("li");
      item.dataset.key = key;
      item.className = `query ${view.decision.kind}${key === focusedId ? " focused" : ""}`;
      item.textContent =
        `${view.series} @ ${view.t} · margin ${view.margin.toFixed(4)}` +
        (view.decision.kind === "labeled"
          ? ` · ${view.decision.label === 1 ? "anomalous" : "normal"}`
          : view.decision.kind === "skipped"
            ? " · skipped"
            : "");
      item.addEventListener("click", () => {
        this.store.focus(key);
        this.render();
      });
      list.appendChild(item);
    }
  }

  private async renderContext(): Promise<void> {
    const target = this.root.querySelector("#context") as HTMLElement;
    const title = this.root.querySelector("#context-title") as HTMLElement;
    const view = this.store.focused();
    if (!view) {
      title.textContent = "Context";
      target.innerHTML = "";
      return;
    }
    title.textContent = `Context: ${view.series} @ t=${view.t}`;
    const token = ++this.contextToken;
    const t0 = view.t - this.nSteps + 1;
    const from = Math.max(0, t0 - CONTEXT_BEFORE * this.nSteps);
    const to = view.t + 1 + CONTEXT_AFTER * this.nSteps;
    try {
      const slice = await this.api.seriesSlice(view.series, from, to);
      if (token !== this.contextToken) return; // focus moved on
      const model = plotModel(slice, { window: { t0, t1: view.t } });
      target.innerHTML = "";
      target.appendChild(renderPlot(this.doc, model));
    } catch (err) {
      if (token !== this.contextToken) return;
      target.innerHTML = "";
      const card = this.doc.createElement("div");
      card.className = "error-card";
      card.textContent = `context unavailable: ${(err as Error).message}`;
      target.appendChild(card);
    }
  }

  start(): void {
    void this.poller.runOnce();
    this.poller.start();
  }

  stop(): void {
    this.poller.stop();
    this.doc.removeEventListener("keydown", this.onKey);
  }
}

export function bootstrap(doc: Document = document): App {
  const root = doc.getElementById("app");
  if (!root) throw new Error("missing #app mount point");
  const app = new App(root, new ApiClient(""));
  app.start();
  return app;
}

declare global {
  interface Window {
    __annotator?: App;
  }
}

if (typeof window !== "undefined" && typeof document !== "undefined") {
  if (document.getElementById("app")) {
    window.__annotator = bootstrap(document);
  }
}
