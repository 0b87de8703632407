// Thin typed client over the job service HTTP API.

import type { AssignmentGeo, DistrictHandle, RunConfig, RunRecord } from "./types";

export type FetchLike = typeof fetch;

export class ApiError extends Error {
  constructor(public status: number, public code: string, message: string) {
    super(message);
  }
}

async function asJson<T>(resp: Response): Promise<T> {
  if (!resp.ok) {
    let code = "error";
    let message = resp.statusText;
    try {
      const blob = (await resp.json()) as { code?: string; message?: string };
      code = blob.code ?? code;
      message = blob.message ?? message;
    } catch {
      // non-JSON error body; keep the status text
    }
    throw new ApiError(resp.status, code, message);
  }
  return (await resp.json()) as T;
}

export class ApiClient {
  constructor(
    private base: string = "",
    private fetchImpl: FetchLike = (...args) => fetch(...args),
  ) {}

  listDistricts(): Promise<DistrictHandle[]> {
    return this.fetchImpl(`${this.base}/api/districts`).then((r) =>
      asJson<DistrictHandle[]>(r),
    );
  }

  createSyntheticDistrict(
    params: { rows: number; cols: number; schools: number; strength: number; mean_pop: number; seed: number },
    name: string,
  ): Promise<DistrictHandle> {
    return this.fetchImpl(`${this.base}/api/districts`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ synthetic: params, name }),
    }).then((r) => asJson<DistrictHandle>(r));
  }

  createRun(districtId: string, config: RunConfig): Promise<RunRecord> {
    return this.fetchImpl(`${this.base}/api/runs`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ district_id: districtId, config }),
    }).then((r) => asJson<RunRecord>(r));
  }

  getRun(runId: string): Promise<RunRecord> {
    return this.fetchImpl(`${this.base}/api/runs/${runId}`).then((r) =>
      asJson<RunRecord>(r),
    );
  }

  listRuns(): Promise<RunRecord[]> {
    return this.fetchImpl(`${this.base}/api/runs`).then((r) => asJson<RunRecord[]>(r));
  }

  /** One fetch serves every layer: the properties carry all scenarios. */
  getAssignmentGeo(runId: string): Promise<AssignmentGeo> {
    return this.fetchImpl(
      `${this.base}/api/runs/${runId}/assignment.geojson?scenario=current`,
    ).then((r) => asJson<AssignmentGeo>(r));
  }

  metricsCsvUrl(runId: string): string {
    return `${this.base}/api/runs/${runId}/metrics.csv`;
  }
}

/**
 * Poll a run until it reaches a terminal status; polling stops permanently
 * once the status is done or failed. Returns a cancel function.
 */
export function pollRun(
  api: ApiClient,
  runId: string,
  onUpdate: (record: RunRecord) => void,
  intervalMs = 1000,
): () => void {
  let stopped = false;
  let timer: ReturnType<typeof setTimeout> | null = null;

  const tick = async () => {
    if (stopped) return;
    let record: RunRecord | null = null;
    try {
      record = await api.getRun(runId);
    } catch {
      // transient fetch failure: keep polling
    }
    if (stopped) return;
    if (record) {
      onUpdate(record);
      if (record.status === "done" || record.status === "failed") {
        stopped = true;
        return;
      }
    }
    timer = setTimeout(tick, intervalMs);
  };

  void tick();
  return () => {
    stopped = true;
    if (timer !== null) clearTimeout(timer);
  };
}
