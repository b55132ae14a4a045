// Wire formats served by the questlog HTTP API. The viewer renders these
// verbatim and computes no analytics of its own.

export const SUPPORTED_SCHEMA_VERSION = 1;

export interface ChartElement {
  objectives: string[];
  unit_id: string | null;
  metric: string | null;
}

export interface RegistryElement extends ChartElement {
  stage_id: string;
}

export interface ChartSeries {
  name: string;
  x: (string | number)[];
  y: (number | null)[];
  element_ids: string[];
  y_unit: string;
}

export interface ChartAnnotation {
  target: string;
  text: string;
}

export interface ChartLink {
  source: string;
  target: string;
}

export interface ChartSpec {
  chart_id: string;
  kind: "line" | "bar" | "stacked_bar" | "pie" | "radial_progress" | "node_link";
  title: string;
  x_label: string;
  y_label: string;
  series: ChartSeries[];
  annotations: ChartAnnotation[];
  elements: Record<string, ChartElement>;
  links: ChartLink[];
}

export interface InsightPayload {
  id: string;
  kind: string;
  text?: string;
  subspace: { mode: string; objective: string | null; measure: string };
  significance: number;
  impact: number;
  score: number;
  evidence: Record<string, unknown>;
}

export interface FeedbackPayload {
  objective_id: string;
  label: string;
  category: string;
  praise: string | null;
  gap: string | null;
  action: string;
}

export interface Stage {
  stage_id: string;
  phase: string;
  info_group: string;
  title: string;
  transitional: boolean;
  narrative: string;
  insights: InsightPayload[];
  feedback: FeedbackPayload[];
  data: Record<string, unknown>;
  charts: ChartSpec[];
}

export interface SidebarEntry {
  stage_id: string;
  title: string;
  info_group: string;
}

export interface ReportMetadata {
  student_token: string;
  unit_id: string;
  unit_title: string;
  generated_at: string | null;
  engine_version: string;
  backend_mode: string;
  fallback_stages: string[];
}

export interface ReportDocument {
  schema_version: number;
  metadata: ReportMetadata;
  stages: Stage[];
  sidebar: SidebarEntry[];
  registry: Record<string, RegistryElement>;
}

export interface QARequestBody {
  selection: string[];
  question: string;
}

export interface QAGrounding {
  objective_ids: string[];
  intent: string;
  slices: { label: string; payload: Record<string, unknown> }[];
}

export interface QAResponseBody {
  answer: string;
  charts: ChartSpec[];
  grounding: QAGrounding;
  backend_mode: string;
  fallback: boolean;
}
