// Global setup: boot a real backend for the round-trip tests and tear it
// down afterwards. The server process is the same artifact users run.

import { spawn, type ChildProcess } from "node:child_process";
import { createServer } from "node:net";
import { fileURLToPath } from "node:url";
import path from "node:path";
import type { GlobalSetupContext } from "vitest/node";

const REPO_ROOT = path.resolve(
  path.dirname(fileURLToPath(import.meta.url)),
  "..",
  "..",
);

function freePort(): Promise<number> {
  return new Promise((resolve, reject) => {
    const probe = createServer();
    probe.once("error", reject);
    probe.listen(0, "127.0.0.1", () => {
      const address = probe.address();
      if (address === null || typeof address === "string") {
        reject(new Error("no port"));
        return;
      }
      const port = address.port;
      probe.close(() => resolve(port));
    });
  });
}

async function waitForBackend(base: string, child: ChildProcess): Promise<void> {
  const deadline = Date.now() + 30000;
  let lastError: unknown = null;
  while (Date.now() < deadline) {
    if (child.exitCode !== null) {
      throw new Error(`backend exited with code ${child.exitCode}`);
    }
    try {
      const response = await fetch(`${base}/v1/sessions`, { method: "POST" });
      if (response.ok) {
        const { session_id } = (await response.json()) as { session_id: string };
        await fetch(`${base}/v1/sessions/${session_id}`, { method: "DELETE" });
        return;
      }
    } catch (err) {
      lastError = err;
    }
    await new Promise((r) => setTimeout(r, 250));
  }
  throw new Error(`backend never came up: ${String(lastError)}`);
}

export default async function setup({ provide }: GlobalSetupContext) {
  const port = await freePort();
  const base = `http://127.0.0.1:${port}`;
  const fixture = (name: string) => path.join(REPO_ROOT, "fixtures", name);
  const child = spawn(
    "python3",
    [
      "-m", "facetalk.cli", "serve",
      "--schema", fixture("schema.json"),
      "--lexicon", fixture("lexicon.json"),
      "--catalog", fixture("catalog.json"),
      "--port", String(port),
    ],
    { cwd: REPO_ROOT, stdio: ["ignore", "pipe", "pipe"] },
  );
  const stderr: string[] = [];
  child.stderr?.on("data", (chunk) => stderr.push(String(chunk)));
  try {
    await waitForBackend(base, child);
  } catch (err) {
    child.kill();
    throw new Error(`${String(err)}\n${stderr.join("")}`);
  }
  provide("backendUrl", base);
  return () => {
    child.kill();
  };
}

declare module "vitest" {
  export interface ProvidedContext {
    backendUrl: string;
  }
}
