/**
 * Trainer-facing client for the docreward scoring service.
 *
 * Exposes the service as a drop-in reward function for RL training
 * loops: `rewardFn` returns one composite reward per rollout and
 * `advantages` mirrors the group-normalization endpoint. Two transports
 * are supported: HTTP against a running service, and a subprocess
 * speaking newline-delimited JSON on its stdio (no network setup for
 * single-host training).
 *
 * Retries apply only to transport failures (connection errors,
 * timeouts, 5xx). Application errors carry the service's reason and are
 * never retried, so results stay deterministic.
 */

import { spawn, type ChildProcessByStdio } from "node:child_process";
import { createInterface, type Interface } from "node:readline";
import type { Readable, Writable } from "node:stream";

/** Spawned with piped stdin/stdout and inherited stderr. */
type EngineProcess = ChildProcessByStdio<Writable, Readable, null>;

export type Transport =
  | { kind: "http"; baseUrl: string }
  | { kind: "subprocess"; command: string; args?: string[] };

export interface ClientOptions {
  transport: Transport;
  /** Named reward-config profile sent with scoring requests. */
  profile?: string;
  /** Per-request budget in milliseconds. Default 30000. */
  timeoutMs?: number;
  /** Retry attempts after the first try, transport failures only. Default 2. */
  retries?: number;
  /** Base delay for exponential back-off between retries. Default 250. */
  backoffMs?: number;
}

/** The request could not be delivered or answered within the retry budget. */
export class TransportError extends Error {
  readonly attempts: number;

  constructor(message: string, attempts: number, options?: { cause?: unknown }) {
    super(message, options);
    this.name = "TransportError";
    this.attempts = attempts;
  }
}

/** The service understood the request and rejected it; not retried. */
export class ApplicationError extends Error {
  readonly reason: string;
  readonly status?: number;

  constructor(reason: string, status?: number) {
    super(status === undefined ? reason : `${reason} (HTTP ${status})`);
    this.name = "ApplicationError";
    this.reason = reason;
    this.status = status;
  }
}

interface RewardRow {
  id: string;
  text?: number;
  formula?: number;
  table?: number;
  composite?: number;
  error?: string;
}

interface HealthInfo {
  version: string;
  profiles: string[];
}

function delay(ms: number): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, ms));
}

/** One in-flight stdio request waiting for its response line. */
interface PendingLine {
  resolve: (line: string) => void;
  reject: (err: Error) => void;
}

export class RewardClient {
  private readonly transport: Transport;
  private readonly profile?: string;
  private readonly timeoutMs: number;
  private readonly retries: number;
  private readonly backoffMs: number;

  private child: EngineProcess | null = null;
  private reader: Interface | null = null;
  private pending: PendingLine[] = [];
  /** Serializes subprocess requests: the pipe answers strictly in order. */
  private queue: Promise<unknown> = Promise.resolve();

  constructor(options: ClientOptions) {
    this.transport = options.transport;
    this.profile = options.profile;
    this.timeoutMs = options.timeoutMs ?? 30_000;
    this.retries = options.retries ?? 2;
    this.backoffMs = options.backoffMs ?? 250;
  }

  /**
   * Composite reward per prediction/ground-truth pair, order preserved.
   * An inline per-item error from the service (for example an empty
   * ground truth) surfaces as an ApplicationError.
   */
  async rewardFn(predictions: string[], groundTruths: string[]): Promise<number[]> {
    if (predictions.length !== groundTruths.length) {
      throw new TypeError(
        `${predictions.length} predictions vs ${groundTruths.length} ground truths`,
      );
    }
    if (predictions.length === 0) {
      return [];
    }
    const items = predictions.map((prediction, i) => ({
      id: String(i),
      prediction,
      ground_truth: groundTruths[i],
    }));
    const body: Record<string, unknown> = { items };
    if (this.profile !== undefined) {
      body.config_profile = this.profile;
    }
    const rows = (await this.request("/v1/reward", body)) as RewardRow[];
    return rows.map((row) => {
      if (row.error !== undefined) {
        throw new ApplicationError(`item ${row.id}: ${row.error}`);
      }
      return row.composite as number;
    });
  }

  /** Group-normalized advantages; mirrors the service's math exactly. */
  async advantages(groups: number[][]): Promise<number[][]> {
    return (await this.request("/v1/advantages", { groups })) as number[][];
  }

  /** Service build version and loaded profiles (HTTP transport only). */
  async health(): Promise<HealthInfo> {
    if (this.transport.kind !== "http") {
      throw new TypeError("health checks require the HTTP transport");
    }
    const response = await fetch(new URL("/v1/health", this.transport.baseUrl), {
      signal: AbortSignal.timeout(this.timeoutMs),
    });
    if (!response.ok) {
      throw new ApplicationError(`health check failed`, response.status);
    }
    return (await response.json()) as HealthInfo;
  }

  /** Ends the subprocess, if any. Safe to call on either transport. */
  async close(): Promise<void> {
    const child = this.child;
    if (child === null) {
      return;
    }
    this.child = null;
    this.reader?.close();
    this.reader = null;
    await new Promise<void>((resolve) => {
      child.once("exit", () => resolve());
      child.stdin.end();
      setTimeout(() => {
        child.kill();
        resolve();
      }, 2000).unref();
    });
  }

  // --------------------------------------------------------------------
  // transport plumbing

  private request(path: string, body: unknown): Promise<unknown> {
    if (this.transport.kind === "http") {
      return this.httpRequest(path, body);
    }
    // The pipe carries one response line per request line, so requests
    // must not interleave; queue them.
    const next = this.queue.then(() => this.pipeRequest(body));
    this.queue = next.catch(() => undefined);
    return next;
  }

  private async httpRequest(path: string, body: unknown): Promise<unknown> {
    const url = new URL(path, (this.transport as { baseUrl: string }).baseUrl);
    const payload = JSON.stringify(body);
    let lastFailure: unknown = null;

    for (let attempt = 0; attempt <= this.retries; attempt++) {
      if (attempt > 0) {
        await delay(this.backoffMs * 2 ** (attempt - 1));
      }
      let response: Response;
      try {
        response = await fetch(url, {
          method: "POST",
          headers: { "Content-Type": "application/json" },
          body: payload,
          signal: AbortSignal.timeout(this.timeoutMs),
        });
      } catch (err) {
        lastFailure = err; // connection refused, DNS, timeout: retryable
        continue;
      }
      if (response.status === 429 || response.status >= 500) {
        lastFailure = new Error(`HTTP ${response.status}`);
        continue;
      }
      const parsed = (await response.json()) as Record<string, unknown>;
      if (!response.ok) {
        const reason =
          typeof parsed.reason === "string" ? parsed.reason : response.statusText;
        throw new ApplicationError(reason, response.status);
      }
      return parsed;
    }
    throw new TransportError(
      `request failed after ${this.retries + 1} attempt(s)`,
      this.retries + 1,
      { cause: lastFailure },
    );
  }

  private async pipeRequest(body: unknown): Promise<unknown> {
    let lastFailure: unknown = null;
    for (let attempt = 0; attempt <= this.retries; attempt++) {
      if (attempt > 0) {
        await delay(this.backoffMs * 2 ** (attempt - 1));
      }
      try {
        const line = await this.exchangeLine(JSON.stringify(body));
        const parsed = JSON.parse(line) as Record<string, unknown> | unknown[];
        if (!Array.isArray(parsed) && typeof parsed.error === "string") {
          throw new ApplicationError(parsed.error);
        }
        return parsed;
      } catch (err) {
        if (err instanceof ApplicationError) {
          throw err; // the engine answered; retrying cannot change it
        }
        lastFailure = err;
      }
    }
    throw new TransportError(
      `subprocess request failed after ${this.retries + 1} attempt(s)`,
      this.retries + 1,
      { cause: lastFailure },
    );
  }

  /** Writes one request line and resolves with the matching response line. */
  private exchangeLine(line: string): Promise<string> {
    const child = this.ensureChild();
    return new Promise<string>((resolve, reject) => {
      const entry: PendingLine = { resolve: () => undefined, reject: () => undefined };
      const timer = setTimeout(() => {
        // The pipe's request/response pairing is unknown after a timeout;
        // drop the process so the next attempt starts clean.
        this.teardown(new TransportError("request timed out", 1));
      }, this.timeoutMs);
      entry.resolve = (value) => {
        clearTimeout(timer);
        resolve(value);
      };
      entry.reject = (err) => {
        clearTimeout(timer);
        reject(err);
      };
      this.pending.push(entry);
      child.stdin.write(line + "\n", (err) => {
        if (err) {
          this.teardown(err instanceof Error ? err : new Error(String(err)));
        }
      });
    });
  }

  private ensureChild(): EngineProcess {
    if (this.child !== null) {
      return this.child;
    }
    const transport = this.transport as { command: string; args?: string[] };
    const child = spawn(transport.command, transport.args ?? [], {
      stdio: ["pipe", "pipe", "inherit"],
    });
    this.child = child;
    this.reader = createInterface({ input: child.stdout });
    this.reader.on("line", (line) => {
      const entry = this.pending.shift();
      entry?.resolve(line);
    });
    child.on("error", (err) => this.teardown(err));
    child.on("exit", () => {
      if (this.child === child) {
        this.teardown(new Error("subprocess exited"));
      }
    });
    return child;
  }

  /** Kills the subprocess and fails everything still waiting on it. */
  private teardown(cause: Error): void {
    const child = this.child;
    this.child = null;
    this.reader?.close();
    this.reader = null;
    const waiting = this.pending;
    this.pending = [];
    for (const entry of waiting) {
      entry.reject(cause);
    }
    child?.kill();
  }
}
