import { afterEach, beforeEach, describe, expect, it, vi } from "vitest";

import { ApiClient, pollRun } from "../src/api";
import type { RunRecord } from "../src/types";

function record(status: RunRecord["status"]): RunRecord {
  return {
    run_id: "r1",
    district_id: "d1",
    status,
    config: { epsilons: [2], replicates: 3 },
    created_at: "2026-01-01T00:00:00Z",
    finished_at: null,
    error: null,
  };
}

function fetchReturning(sequence: RunRecord[]): typeof fetch {
  let call = 0;
  return vi.fn(async () => {
    const body = sequence[Math.min(call, sequence.length - 1)];
    call += 1;
    return new Response(JSON.stringify(body), {
      status: 200,
      headers: { "Content-Type": "application/json" },
    });
  }) as unknown as typeof fetch;
}

beforeEach(() => {
  vi.useFakeTimers();
});

afterEach(() => {
  vi.useRealTimers();
});

describe("pollRun", () => {
  it("polls through queued/running and stops permanently at done", async () => {
    const impl = fetchReturning([record("queued"), record("running"), record("done")]);
    const api = new ApiClient("", impl);
    const seen: string[] = [];
    pollRun(api, "r1", (r) => seen.push(r.status), 100);

    await vi.advanceTimersByTimeAsync(1000);
    expect(seen).toEqual(["queued", "running", "done"]);
    const callsAtDone = (impl as ReturnType<typeof vi.fn>).mock.calls.length;

    await vi.advanceTimersByTimeAsync(2000);
    expect((impl as ReturnType<typeof vi.fn>).mock.calls.length).toBe(callsAtDone);
  });

  it("stops permanently at failed", async () => {
    const impl = fetchReturning([record("running"), record("failed")]);
    const api = new ApiClient("", impl);
    const seen: string[] = [];
    pollRun(api, "r1", (r) => seen.push(r.status), 50);
    await vi.advanceTimersByTimeAsync(500);
    expect(seen[seen.length - 1]).toBe("failed");
    const calls = (impl as ReturnType<typeof vi.fn>).mock.calls.length;
    await vi.advanceTimersByTimeAsync(500);
    expect((impl as ReturnType<typeof vi.fn>).mock.calls.length).toBe(calls);
  });

  it("cancel stops the loop early", async () => {
    const impl = fetchReturning([record("running")]);
    const api = new ApiClient("", impl);
    const cancel = pollRun(api, "r1", () => {}, 50);
    await vi.advanceTimersByTimeAsync(120);
    cancel();
    const calls = (impl as ReturnType<typeof vi.fn>).mock.calls.length;
    await vi.advanceTimersByTimeAsync(500);
    expect((impl as ReturnType<typeof vi.fn>).mock.calls.length).toBe(calls);
  });
});
