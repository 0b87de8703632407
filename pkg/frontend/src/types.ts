// API payload shapes, mirroring the job service's JSON exactly.

export interface DistrictHandle {
  district_id: string;
  name: string;
  n_blocks: number;
  n_schools: number;
  group_totals: Record<string, number>;
  total_students: number;
  created_at: string;
}

export interface RunConfig {
  epsilons: number[];
  replicates: number;
  alpha_t: number;
  alpha_p: number;
  seed: number;
  objective: "race" | "ses";
  restarts?: number;
  max_iters?: number;
}

export interface PrivateSummary {
  epsilon: number;
  mean_dissimilarity: number;
  dissimilarity_ci: [number, number];
  mean_blocks_rezoned: number;
  mean_travel_by_group: Record<string, number>;
  mean_pct_rezoned_by_group: Record<string, number>;
}

export interface RunSummary {
  current_dissimilarity: number;
  nonprivate_dissimilarity: number;
  private: PrivateSummary[];
  travel_by_group: {
    current: Record<string, number>;
    nonprivate: Record<string, number>;
  };
  pct_rezoned_by_group: {
    nonprivate: Record<string, number>;
  };
}

export type RunStatus = "queued" | "running" | "done" | "failed";

export interface RunRecord {
  run_id: string;
  district_id: string;
  status: RunStatus;
  config: Partial<RunConfig>;
  created_at: string;
  finished_at: string | null;
  error: string | null;
  summary?: RunSummary;
}

export interface BlockProperties {
  block_id: string;
  block_group_id: string;
  n_total: number;
  current: string;
  nonprivate: string;
  school?: string;
  rezone_probability?: number;
  [key: string]: unknown;
}

export interface BlockFeature {
  type: "Feature";
  geometry: { type: "Point"; coordinates: [number, number] };
  properties: BlockProperties;
}

export interface AssignmentGeo {
  type: "FeatureCollection";
  features: BlockFeature[];
  scenario?: string;
  epsilon?: number;
}

export type Scenario = "current" | "nonprivate" | "private";
export type LayerKind = "assignment" | "rezone_probability" | "population";

/** What the map is currently showing. */
export interface ScenarioView {
  scenario: Scenario;
  epsilon: number | null; // selected budget when scenario is private
  layer: LayerKind;
  runId: string | null;
}

/** Two runs being compared in the metrics panel. */
export interface CompareState {
  baselineRunId: string | null;
  candidateRunId: string | null;
}
