/** Wire types mirroring the JSON the API serves. */

export interface NodeItem {
  id: string;
  type: string;
  label: string;
  attributes: Record<string, unknown>;
  hidden: boolean;
  hide_reason: string | null;
  reviewed: boolean;
  cascade_depth: number;
  attributions: string[];
  annotations: unknown[];
  created_at: number;
}

export interface EdgeItem {
  id: string;
  kind: string;
  from: string;
  to: string;
  grade: string;
  attributes: Record<string, unknown>;
  hidden: boolean;
  hide_reason: string | null;
  reviewed: boolean;
  attribution: string | null;
  created_at: number;
}

export interface ClusterInfo {
  representative: string;
  members: string[];
  confirming_edges: string[];
  grade: string;
}

export interface GraphViewPage {
  nodes: NodeItem[];
  edges: EdgeItem[];
  clusters: ClusterInfo[];
  total_nodes: number;
  total_edges: number;
  next_cursor: string | null;
  center?: string;
  k?: number;
}

export interface Mention {
  edge: string;
  node: string;
  node_label: string;
  node_type: string;
  grade: string;
  start: number;
  end: number;
  label: string;
  surface: string;
}

export interface SearchHit {
  target: string;
  node: string | null;
  document: string | null;
  span: [number, number] | null;
  matched_term: string;
  mode: string;
  score: number;
  explanation: string[];
}

export interface JobInfo {
  job_id: string;
  status: string;
  document: string | null;
  produced: string[];
  warnings: string[];
  error: string | null;
}

export interface ContextAction {
  action: string;
  label: string;
  params: Record<string, unknown>;
}

export interface Position {
  id: string;
  x: number;
  y: number;
}

export interface ApiError {
  code: string;
  message: string;
  details: unknown;
}
