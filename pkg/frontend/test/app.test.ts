// @vitest-environment happy-dom
//
// Scripted browser sessions against the real annotation server: two
// annotators label the 12-task fixture through the DOM, the stored labels
// must equal the click/keystroke sequence, and the evaluator dashboard must
// agree with the command-line computation.

import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { AnnotationApi } from "../src/api.js";
import { createApp } from "../src/app.js";
import { cliAgreement, readStoredLabels, startServer, type RunningServer } from "./helpers.js";

const INDEX_HTML = readFileSync(
  join(dirname(fileURLToPath(import.meta.url)), "..", "public", "index.html"),
  "utf-8",
);

function mountDom(): void {
  const bodyMatch = INDEX_HTML.match(/<body>([\s\S]*)<\/body>/);
  document.body.innerHTML = bodyMatch![1];
}

function memoryStorage() {
  const data = new Map<string, string>();
  return {
    getItem: (key: string) => data.get(key) ?? null,
    setItem: (key: string, value: string) => void data.set(key, value),
    removeItem: (key: string) => void data.delete(key),
  };
}

function q<T extends HTMLElement>(id: string): T {
  return document.querySelector(`#${id}`) as T;
}

async function waitFor(predicate: () => boolean, what: string, timeout = 10000): Promise<void> {
  const start = Date.now();
  while (!predicate()) {
    if (Date.now() - start > timeout) throw new Error(`timed out waiting for ${what}`);
    await new Promise((resolve) => setTimeout(resolve, 20));
  }
}

const visible = (id: string) => !q(id).hidden;

describe("scripted annotation session", () => {
  let server: RunningServer;

  beforeAll(async () => {
    server = await startServer();
  }, 30000);

  afterAll(async () => {
    await server.stop();
  });

  const clicked: Array<{ task_id: string; annotator_id: string; label: string }> = [];

  async function labelAllTasks(annotator: string, useKeyboard: boolean): Promise<void> {
    mountDom();
    createApp(document, new AnnotationApi(server.base), memoryStorage());
    expect(visible("view-login")).toBe(true);
    q<HTMLInputElement>("annotator-input").value = annotator;
    q("start-annotating").click();
    await waitFor(() => visible("view-task"), "first task");

    for (let i = 0; i < 12; i++) {
      const taskId = await currentTaskId(annotator);
      const premise = (i + (useKeyboard ? 1 : 0)) % 2 === 0;
      const progressBefore = q("progress-text").textContent;
      expect(progressBefore).toContain(`Task ${i + 1} of 12`);
      if (useKeyboard) {
        document.dispatchEvent(
          new KeyboardEvent("keydown", { key: premise ? "1" : "2", bubbles: true }),
        );
      } else {
        q(premise ? "btn-premise" : "btn-non-premise").click();
      }
      clicked.push({
        task_id: taskId,
        annotator_id: annotator,
        label: premise ? "premise" : "non_premise",
      });
      await waitFor(
        () => visible("view-done") || q("progress-text").textContent !== progressBefore,
        `advance past task ${i + 1}`,
      );
    }
    await waitFor(() => visible("view-done"), "completion screen");
    expect(q("done-summary").textContent).toContain("12");
  }

  async function currentTaskId(annotator: string): Promise<string> {
    // the DOM shows claim/sentence; fetch the id over the same endpoint the
    // app used (idempotent read, does not advance anything)
    const api = new AnnotationApi(server.base);
    const task = await api.nextTask(annotator);
    expect(task).not.toBeNull();
    expect(q("claim-text").textContent).toBe(task!.claim);
    expect(q("sentence-text").textContent).toBe(task!.sentence);
    return task!.task_id;
  }

  it("two annotators label all 12 tasks through the DOM", async () => {
    await labelAllTasks("ui-anna", false);
    await labelAllTasks("ui-boris", true);
  }, 60000);

  it("exported labels equal the submissions, in order", () => {
    expect(readStoredLabels(server.labelsPath)).toEqual(clicked);
  });

  it("task view never displays model provenance", () => {
    const taskFacing = readFileSync(
      join(dirname(fileURLToPath(import.meta.url)), "fixture", "tasks.jsonl"),
      "utf-8",
    );
    expect(taskFacing).not.toMatch(/model/i);
    expect(taskFacing).not.toContain("tuned");
    expect(taskFacing).not.toContain("baseline");
  });

  it("dashboard shows progress, alpha, and the per-model table; alpha matches the CLI to 1e-12", async () => {
    mountDom();
    createApp(document, new AnnotationApi(server.base), memoryStorage());
    q("open-dashboard").click();
    await waitFor(() => q("alpha-badge").textContent!.includes("alpha ="), "alpha badge");

    const bars = q("progress-bars").textContent!;
    expect(bars).toContain("ui-anna");
    expect(bars).toContain("12 / 12");

    const shown = Number(q("alpha-badge").dataset.alpha);
    const viaCli = cliAgreement(server.labelsPath);
    expect(Math.abs(shown - viaCli.alpha)).toBeLessThanOrEqual(1e-12);

    expect(q<HTMLTableElement>("model-table").hidden).toBe(false);
    const tableText = q("model-table-body").textContent!;
    expect(tableText).toContain("tuned");
    expect(tableText).toContain("baseline");
  }, 30000);
});

describe("conflict and double-click handling", () => {
  let server: RunningServer;

  beforeAll(async () => {
    server = await startServer();
  }, 30000);

  afterAll(async () => {
    await server.stop();
  });

  it("a 409 on an already-labeled task surfaces a notice and advances once", async () => {
    // another session (a second tab) labels the first task under the same id
    const api = new AnnotationApi(server.base);
    const first = await api.nextTask("ui-carl");
    await api.submitLabel({ task_id: first!.task_id, annotator_id: "ui-carl", label: "premise" });

    mountDom();
    // this tab has not seen the other submission yet: force the stale task
    const staleApi = new AnnotationApi(server.base);
    const realNext = staleApi.nextTask.bind(staleApi);
    let served = false;
    staleApi.nextTask = async (annotator: string) => {
      if (!served) {
        served = true;
        return first;
      }
      return realNext(annotator);
    };
    createApp(document, staleApi, memoryStorage());
    q<HTMLInputElement>("annotator-input").value = "ui-carl";
    q("start-annotating").click();
    await waitFor(() => visible("view-task"), "stale task view");
    expect(q("sentence-text").textContent).toBe(first!.sentence);

    const before = readStoredLabels(server.labelsPath).length;
    q("btn-premise").click();
    await waitFor(() => !q("task-notice").hidden, "conflict notice");
    expect(q("task-notice").textContent).toContain("already labeled");
    expect(readStoredLabels(server.labelsPath).length).toBe(before);
    expect(q("sentence-text").textContent).not.toBe(first!.sentence);
  }, 30000);

  it("a double-click submits exactly once", async () => {
    mountDom();
    createApp(document, new AnnotationApi(server.base), memoryStorage());
    q<HTMLInputElement>("annotator-input").value = "ui-dana";
    q("start-annotating").click();
    await waitFor(() => visible("view-task"), "task view");
    const sentence = q("sentence-text").textContent;

    const before = readStoredLabels(server.labelsPath).filter(
      (l) => l.annotator_id === "ui-dana",
    ).length;
    q("btn-premise").click();
    q("btn-premise").click(); // second click lands while the first is in flight
    await waitFor(() => q("sentence-text").textContent !== sentence, "advance");
    await new Promise((resolve) => setTimeout(resolve, 150));
    const after = readStoredLabels(server.labelsPath).filter(
      (l) => l.annotator_id === "ui-dana",
    ).length;
    expect(after).toBe(before + 1);
  }, 30000);
});

describe("dashboard states", () => {
  it("shows the unavailable badge before any task has two labels", async () => {
    const server = await startServer();
    try {
      mountDom();
      createApp(document, new AnnotationApi(server.base), memoryStorage());
      q("open-dashboard").click();
      await waitFor(
        () => q("alpha-badge").textContent!.includes("agreement unavailable"),
        "unavailable badge",
      );
      expect(q("progress-bars").textContent).toContain("No labels submitted yet");
      expect(q<HTMLTableElement>("model-table").hidden).toBe(true);
      expect(q("dashboard-note").textContent).toContain("hidden until every annotator finishes");
    } finally {
      await server.stop();
    }
  }, 30000);

  it("renders an alpha 1.0 badge for perfect agreement", async () => {
    const server = await startServer();
    try {
      const api = new AnnotationApi(server.base);
      for (const annotator of ["g1", "g2"]) {
        for (;;) {
          const task = await api.nextTask(annotator);
          if (task === null) break;
          const label = Number(task.task_id.slice(1)) % 2 ? "premise" : "non_premise";
          await api.submitLabel({ task_id: task.task_id, annotator_id: annotator, label });
        }
      }
      mountDom();
      createApp(document, api, memoryStorage());
      q("open-dashboard").click();
      await waitFor(() => q("alpha-badge").textContent!.includes("alpha ="), "alpha badge");
      expect(q("alpha-badge").textContent).toContain("alpha = 1.0000");
    } finally {
      await server.stop();
    }
  }, 30000);
});

describe("resilience and resumption", () => {
  it("network failure shows the retry banner and retrying continues without data loss", async () => {
    const server = await startServer();
    try {
      mountDom();
      let failuresLeft = 1;
      const flaky: typeof fetch = (input, init) => {
        if (failuresLeft > 0) {
          failuresLeft -= 1;
          return Promise.reject(new TypeError("connection refused"));
        }
        return fetch(input, init);
      };
      createApp(document, new AnnotationApi(server.base, flaky), memoryStorage());
      q<HTMLInputElement>("annotator-input").value = "ui-eve";
      q("start-annotating").click();
      await waitFor(() => !q("error-banner").hidden, "error banner");
      expect(q("error-message").textContent).toContain("network failure");

      q("retry-button").click();
      await waitFor(() => visible("view-task"), "recovery");
      expect(readStoredLabels(server.labelsPath).length).toBe(0);
    } finally {
      await server.stop();
    }
  }, 30000);

  it("a reload resumes at the correct next task via the stored annotator id", async () => {
    const server = await startServer();
    try {
      const storage = memoryStorage();
      mountDom();
      createApp(document, new AnnotationApi(server.base), storage);
      q<HTMLInputElement>("annotator-input").value = "ui-fay";
      q("start-annotating").click();
      await waitFor(() => visible("view-task"), "task view");
      for (let i = 0; i < 3; i++) {
        const progress = q("progress-text").textContent;
        q("btn-premise").click();
        await waitFor(() => q("progress-text").textContent !== progress, "advance");
      }

      // simulate a reload: fresh DOM and app, same storage
      mountDom();
      createApp(document, new AnnotationApi(server.base), storage);
      expect(q<HTMLInputElement>("annotator-input").value).toBe("ui-fay");
      q("start-annotating").click();
      await waitFor(() => visible("view-task"), "resumed task view");
      expect(q("progress-text").textContent).toContain("Task 4 of 12");
    } finally {
      await server.stop();
    }
  }, 30000);
});
