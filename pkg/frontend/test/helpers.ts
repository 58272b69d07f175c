import { spawn, spawnSync, type ChildProcess } from "node:child_process";
import { mkdtempSync, readFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";

const here = dirname(fileURLToPath(import.meta.url));
export const FIXTURE_TASKS = join(here, "fixture", "tasks.jsonl");
export const FIXTURE_KEY = join(here, "fixture", "key.jsonl");

export interface RunningServer {
  base: string;
  labelsPath: string;
  stop(): Promise<void>;
}

/** Spawn the real annotation server (the Python backend) on an ephemeral port. */
export async function startServer(options: { key?: boolean; nAnnotators?: number } = {}): Promise<RunningServer> {
  const labelsPath = join(mkdtempSync(join(tmpdir(), "argforge-ui-")), "labels.tsv");
  const argv = [
    "-m", "argforge.cli", "serve",
    "--tasks", FIXTURE_TASKS,
    "--labels", labelsPath,
    "--port", "0",
    "--quorum", "2",
    "--n-annotators", String(options.nAnnotators ?? 2),
  ];
  if (options.key !== false) argv.push("--key", FIXTURE_KEY);
  const child: ChildProcess = spawn("python3", argv, { stdio: ["ignore", "pipe", "pipe"] });

  const base = await new Promise<string>((resolve, reject) => {
    let out = "";
    let err = "";
    const timer = setTimeout(() => reject(new Error(`server did not start: ${out} ${err}`)), 15000);
    child.stdout!.on("data", (chunk) => {
      out += String(chunk);
      const match = out.match(/listening on (http:\/\/[^\s]+)/);
      if (match) {
        clearTimeout(timer);
        resolve(match[1]);
      }
    });
    child.stderr!.on("data", (chunk) => { err += String(chunk); });
    child.on("exit", (code) => {
      clearTimeout(timer);
      reject(new Error(`server exited early (${code}): ${err}`));
    });
  });

  return {
    base,
    labelsPath,
    stop: () =>
      new Promise<void>((resolve) => {
        child.once("exit", () => resolve());
        child.kill("SIGINT");
        setTimeout(() => child.kill("SIGKILL"), 3000).unref();
      }),
  };
}

export interface StoredLabel {
  task_id: string;
  annotator_id: string;
  label: string;
}

/** The server's append-only persistence, parsed. */
export function readStoredLabels(labelsPath: string): StoredLabel[] {
  const text = readFileSync(labelsPath, "utf-8");
  return text
    .split("\n")
    .filter((line) => line.trim().length > 0)
    .map((line) => {
      const [task_id, annotator_id, label] = line.split("\t");
      return { task_id, annotator_id, label };
    });
}

/** Run the command-line agreement computation on a labels file. */
export function cliAgreement(labelsPath: string): { alpha: number; D_o: number; D_e: number } {
  const proc = spawnSync("python3", ["-m", "argforge.cli", "agree", "--labels", labelsPath], {
    encoding: "utf-8",
  });
  if (proc.status !== 0) throw new Error(`agree failed: ${proc.stderr}`);
  return JSON.parse(proc.stdout);
}
