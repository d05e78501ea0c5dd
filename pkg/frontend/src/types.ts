/** Wire types mirroring the evaluator API's JSON shapes. */

export type Modality = "text" | "image" | "document" | "table";

export interface ChartAxis {
  label: string;
  min?: number;
  max?: number;
  categories?: string[];
}

export interface TableData {
  columns: [string, string][];
  rows: (number | string)[][];
  chart_meta?: {
    chart_kind: string;
    x_axis: ChartAxis;
    y_axis: ChartAxis;
    title: string;
  };
}

export interface InputRefData {
  modality: Modality;
  text: string;
  blob_ref: string;
  media_type: string;
}

export interface ExampleData {
  example_id: string;
  task_id: string;
  inputs: InputRefData[];
  fm_output: { table?: TableData; text?: string };
  reference: { table?: TableData; answer?: string; approved_sources?: number[] } | null;
  created_at: string;
}

export interface SpanData {
  passage_index: number;
  start_word: number;
  end_word: number;
}

export interface ViolationData {
  constraint_index: number;
  path: string;
  observed: string;
  message: string;
}

export interface ArtifactData {
  name: string;
  media_type: string;
  ref: string;
}

export interface ErrorReportData {
  incorrect: { row_index: number; column: string; extracted: number; reference: number }[];
  spurious: { row_index: number; cells: (number | string)[] }[];
  missing: { row_index: number; cells: (number | string)[] }[];
  correct: number;
  counts: { incorrect: number; spurious: number; missing: number };
}

export interface EvalOutputData {
  score?: number;
  metrics?: Record<string, number>;
  stats?: Record<string, number>;
  artifacts?: ArtifactData[];
  report?: ErrorReportData;
  spans?: SpanData[];
  support_ranking?: [number, number][];
  violations?: ViolationData[];
  rationale?: string;
  error?: string;
  skipped_missing_reference?: boolean;
}

export interface ResultData {
  example_id: string;
  plan_id: string;
  plan_version: number;
  verdict: "pass" | "fail" | "needs_review";
  outputs: Record<string, EvalOutputData>;
}

export type ComponentKind =
  | "side_by_side_image"
  | "editable_table"
  | "highlighted_document"
  | "metric_cards"
  | "approval_buttons"
  | "summary_panel";

export interface UIComponentData {
  kind: ComponentKind;
  source: string;
}

export interface UISpecData {
  layout: "single_column" | "two_column";
  components: UIComponentData[];
}

export type ChannelKind = "cell_edit" | "binary_approval" | "free_text";

export interface LabelChannelData {
  channel_id: string;
  kind: ChannelKind;
  target: string;
}

export interface LabelSpecData {
  channels: LabelChannelData[];
}

export interface FailureModeData {
  id: string;
  name: string;
  description: string;
  severity: "low" | "medium" | "high";
  origin: "seeded" | "inferred" | "human_added";
}

export interface ObjectiveData {
  name: string;
  description: string;
  threshold?: number;
}

export interface BindingData {
  failure_mode_id: string;
  category: string;
  template_id: string;
  params: Record<string, unknown>;
}

export interface DescriptorData {
  task_id: string;
  title: string;
  description: string;
  task_type: string;
  status: string;
  failure_modes: FailureModeData[];
  objectives: ObjectiveData[];
  strategy_bindings: BindingData[];
  markdown: string;
}

export interface SessionView {
  session_id: string;
  stage: "Elicit" | "Map" | "Run" | "Refine" | "Finalised";
  plan_version: number;
  plan_approved: boolean;
  next_seq: number;
  allowed_messages: string[];
  descriptor: DescriptorData;
  task_id?: string;
}

export interface UiSpecResponse {
  approved: boolean;
  plan_version: number;
  ui_spec: UISpecData;
  label_spec: LabelSpecData;
}

export interface PlanResponse {
  approved: boolean;
  plan: { plan_id: string; version: number; plan_hash: string };
}

export interface ExampleView {
  example: ExampleData;
  labels: unknown[];
  corrected_table: TableData | null;
  approved_sources: number[];
  latest_result: ResultData | null;
}

export interface EditOpData {
  op: "add" | "delete" | "edit";
  target: "failure_mode" | "objective" | "strategy_binding" | "constraint";
  target_id?: string;
  value?: unknown;
}

export interface MessageData {
  kind: string;
  session_id: string;
  seq: number;
  payload: unknown;
}

export interface ResponseData {
  verdict: "approve" | "reject" | "amend";
  amendments?: EditOpData[];
  note?: string;
}
