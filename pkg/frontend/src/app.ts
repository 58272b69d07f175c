import { AnnotationApi, ApiError } from "./api.js";
import type { Label, TaskView } from "./types.js";

const ANNOTATOR_KEY = "argforge.annotator_id";

interface StorageLike {
  getItem(key: string): string | null;
  setItem(key: string, value: string): void;
  removeItem(key: string): void;
}

function el<T extends HTMLElement>(root: ParentNode, id: string): T {
  const node = root.querySelector(`#${id}`);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

/**
 * Single-page client for the blind annotation protocol.
 *
 * One submission is in flight at a time; a duplicate answered with 409
 * advances exactly once. The only state that survives a reload is the
 * annotator id.
 */
export class AnnotationApp {
  private annotatorId = "";
  private currentTask: TaskView | null = null;
  private labeledCount = 0;
  private totalTasks = 0;
  private inFlight = false;
  private retryAction: (() => Promise<void>) | null = null;
  private pendingNotice = "";

  constructor(
    private readonly root: ParentNode,
    private readonly api: AnnotationApi,
    private readonly storage: StorageLike,
  ) {}

  init(): void {
    const stored = this.storage.getItem(ANNOTATOR_KEY);
    if (stored) el<HTMLInputElement>(this.root, "annotator-input").value = stored;

    el<HTMLButtonElement>(this.root, "start-annotating").addEventListener("click", () => {
      void this.startAnnotating();
    });
    el<HTMLButtonElement>(this.root, "open-dashboard").addEventListener("click", () => {
      void this.openDashboard();
    });
    el<HTMLButtonElement>(this.root, "btn-premise").addEventListener("click", () => {
      void this.submit("premise");
    });
    el<HTMLButtonElement>(this.root, "btn-non-premise").addEventListener("click", () => {
      void this.submit("non_premise");
    });
    el<HTMLButtonElement>(this.root, "retry-button").addEventListener("click", () => {
      void this.retry();
    });
    el<HTMLButtonElement>(this.root, "refresh-dashboard").addEventListener("click", () => {
      void this.openDashboard();
    });
    for (const id of ["switch-user", "back-to-login"]) {
      el<HTMLButtonElement>(this.root, id).addEventListener("click", () => {
        this.storage.removeItem(ANNOTATOR_KEY);
        this.showView("login");
      });
    }
    (this.root as unknown as HTMLElement).addEventListener("keydown", (event) => {
      this.onKey(event as KeyboardEvent);
    });
    this.showView("login");
  }

  /** Keyboard shortcuts: 1 = premise, 2 = non-premise (task view only). */
  private onKey(event: KeyboardEvent): void {
    if (el<HTMLElement>(this.root, "view-task").hidden) return;
    if (event.key === "1") void this.submit("premise");
    if (event.key === "2") void this.submit("non_premise");
  }

  private showView(name: "login" | "task" | "done" | "dashboard"): void {
    for (const view of ["login", "task", "done", "dashboard"]) {
      el<HTMLElement>(this.root, `view-${view}`).hidden = view !== name;
    }
    el<HTMLElement>(this.root, "error-banner").hidden = true;
  }

  private showError(message: string, retry: () => Promise<void>): void {
    this.retryAction = retry;
    const banner = el<HTMLElement>(this.root, "error-banner");
    el<HTMLElement>(this.root, "error-message").textContent = message;
    banner.hidden = false;
  }

  private async retry(): Promise<void> {
    const action = this.retryAction;
    this.retryAction = null;
    el<HTMLElement>(this.root, "error-banner").hidden = true;
    if (action) await action();
  }

  private notice(message: string): void {
    const node = el<HTMLElement>(this.root, "task-notice");
    node.textContent = message;
    node.hidden = !message;
  }

  async startAnnotating(): Promise<void> {
    const value = el<HTMLInputElement>(this.root, "annotator-input").value.trim();
    if (!value) {
      this.notice("");
      el<HTMLElement>(this.root, "login-hint").textContent = "Enter an annotator id first.";
      return;
    }
    this.annotatorId = value;
    this.storage.setItem(ANNOTATOR_KEY, value);
    await this.loadNext();
  }

  private async loadNext(): Promise<void> {
    try {
      const progress = await this.api.progress();
      this.totalTasks = progress.total_tasks;
      this.labeledCount = progress.per_annotator[this.annotatorId] ?? 0;
      this.currentTask = await this.api.nextTask(this.annotatorId);
    } catch (err) {
      this.showError(this.describe(err), () => this.loadNext());
      return;
    }
    if (this.currentTask === null) {
      this.showView("done");
      el<HTMLElement>(this.root, "done-summary").textContent =
        `All ${this.totalTasks} tasks are labeled. Thank you, ${this.annotatorId}.`;
      return;
    }
    this.renderTask(this.currentTask);
    this.showView("task");
  }

  private renderTask(task: TaskView): void {
    el<HTMLElement>(this.root, "claim-text").textContent = task.claim;
    el<HTMLElement>(this.root, "sentence-text").textContent = task.sentence;
    el<HTMLElement>(this.root, "progress-text").textContent =
      `Task ${this.labeledCount + 1} of ${this.totalTasks} — annotator ${this.annotatorId}`;
    this.notice(this.pendingNotice);
    this.pendingNotice = "";
  }

  async submit(label: Label): Promise<void> {
    if (this.inFlight || !this.currentTask) return;
    this.inFlight = true;
    const submission = {
      task_id: this.currentTask.task_id,
      annotator_id: this.annotatorId,
      label,
    };
    try {
      const outcome = await this.api.submitLabel(submission);
      if (outcome === "conflict") {
        this.pendingNotice = "This task was already labeled under your id; moving on.";
      }
      await this.loadNext();
    } catch (err) {
      this.showError(this.describe(err), async () => {
        this.inFlight = false;
        await this.submit(label);
      });
    } finally {
      this.inFlight = false;
    }
  }

  async openDashboard(): Promise<void> {
    this.showView("dashboard");
    try {
      const [progress, agreement] = await Promise.all([
        this.api.progress(),
        this.api.agreement(),
      ]);

      const bars = el<HTMLElement>(this.root, "progress-bars");
      bars.innerHTML = "";
      const annotators = Object.keys(progress.per_annotator).sort();
      if (annotators.length === 0) {
        bars.textContent = "No labels submitted yet.";
      }
      for (const annotator of annotators) {
        const count = progress.per_annotator[annotator];
        const row = bars.ownerDocument!.createElement("div");
        row.className = "progress-row";
        const share = progress.total_tasks ? Math.round((100 * count) / progress.total_tasks) : 0;
        row.innerHTML =
          `<span class="annotator-name"></span>` +
          `<span class="bar"><span class="bar-fill" style="width:${share}%"></span></span>` +
          `<span class="bar-count">${count} / ${progress.total_tasks}</span>`;
        (row.querySelector(".annotator-name") as HTMLElement).textContent = annotator;
        bars.appendChild(row);
      }

      const badge = el<HTMLElement>(this.root, "alpha-badge");
      if (agreement === null) {
        badge.textContent = "agreement unavailable (needs two labels on some task)";
        badge.className = "alpha-badge alpha-missing";
      } else {
        badge.textContent = `alpha = ${agreement.alpha.toFixed(4)} (${agreement.band})`;
        badge.className = "alpha-badge alpha-ready";
        badge.dataset.alpha = String(agreement.alpha);
      }

      const table = el<HTMLTableElement>(this.root, "model-table");
      const note = el<HTMLElement>(this.root, "dashboard-note");
      const body = el<HTMLElement>(this.root, "model-table-body");
      body.innerHTML = "";
      if (progress.report === null) {
        table.hidden = true;
        note.textContent = progress.complete
          ? "Model results stay hidden until the provenance key is configured."
          : "Model results stay hidden until every annotator finishes.";
      } else {
        table.hidden = false;
        note.textContent = "";
        for (const [model, row] of Object.entries(progress.report.models)) {
          const tr = body.ownerDocument!.createElement("tr");
          tr.innerHTML =
            `<td class="model-name"></td><td>${row.premise} / ${row.premise_pct}%</td>` +
            `<td>${row.non_premise} / ${row.non_premise_pct}%</td><td>${row.unassigned}</td>`;
          (tr.querySelector(".model-name") as HTMLElement).textContent = model;
          body.appendChild(tr);
        }
      }
    } catch (err) {
      this.showError(this.describe(err), () => this.openDashboard());
    }
  }

  private describe(err: unknown): string {
    if (err instanceof ApiError) return err.message;
    return `unexpected failure: ${String(err)}`;
  }
}

export function createApp(root: ParentNode, api: AnnotationApi, storage: StorageLike): AnnotationApp {
  const app = new AnnotationApp(root, api, storage);
  app.init();
  return app;
}
