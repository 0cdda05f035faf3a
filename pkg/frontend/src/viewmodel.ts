/** Client view model: the single source of interface state.
 *
 * It never mutates graph data locally — every change to what is visible is a
 * filter change followed by a refetch, so reloading the page reproduces the
 * same state from the server. All filter controls edit one shared FilterState
 * and a refresh sends it as one request.
 */

import { ApiClient } from "./api.js";
import {
  type FilterState,
  brushTimeline,
  clearTimeline,
  emptyFilter,
  setMinGrade,
  toggleType,
} from "./filters.js";
import { shouldSimulateLocally } from "./graphScene.js";
import type { EdgeItem, GraphViewPage, JobInfo, NodeItem, Position } from "./types.js";

export interface ViewSnapshot {
  nodes: NodeItem[];
  edges: EdgeItem[];
  totalNodes: number;
  totalEdges: number;
  center: string | null;
  k: number;
}

const PAGE_LIMIT = 1000;

export class ViewModel {
  filter: FilterState = emptyFilter();
  selection: string | null = null;
  /** null center = overview mode; otherwise neighborhood spotlight */
  center: string | null = null;
  k = 2;
  positions: Position[] = [];
  pendingJobs: JobInfo[] = [];
  current: ViewSnapshot = { nodes: [], edges: [], totalNodes: 0, totalEdges: 0, center: null, k: 2 };

  constructor(readonly api: ApiClient) {}

  /** Fetch the full current view (all pages) under the combined filter. */
  async refresh(): Promise<ViewSnapshot> {
    const nodes: NodeItem[] = [];
    const edges = new Map<string, EdgeItem>();
    let cursor: string | undefined;
    let first: GraphViewPage | null = null;
    do {
      const page: GraphViewPage =
        this.center === null
          ? await this.api.graphView(this.filter, cursor, PAGE_LIMIT)
          : await this.api.neighborhood(this.center, this.k, this.filter, PAGE_LIMIT);
      first ??= page;
      nodes.push(...page.nodes);
      for (const edge of page.edges) edges.set(edge.id, edge);
      cursor = page.next_cursor ?? undefined;
      // neighborhood views are spotlight-sized; one page covers them
      if (this.center !== null) break;
    } while (cursor);
    this.current = {
      nodes,
      edges: [...edges.values()],
      totalNodes: first?.total_nodes ?? nodes.length,
      totalEdges: first?.total_edges ?? edges.size,
      center: this.center,
      k: this.k,
    };
    return this.current;
  }

  /** Server layout when the view is too large to simulate locally. */
  async fetchLayout(params?: Record<string, unknown>): Promise<Position[]> {
    this.positions = (await this.api.layout(this.filter, params)).positions;
    return this.positions;
  }

  needsServerLayout(): boolean {
    return !shouldSimulateLocally(this.current.nodes.length);
  }

  // -- filter controls; each edits the shared state then refetches once -------

  async brush(t0: number, t1: number): Promise<ViewSnapshot> {
    this.filter = brushTimeline(this.filter, t0, t1);
    return this.refresh();
  }

  async clearBrush(): Promise<ViewSnapshot> {
    this.filter = clearTimeline(this.filter);
    return this.refresh();
  }

  async slideGrade(grade: string | null): Promise<ViewSnapshot> {
    this.filter = setMinGrade(this.filter, grade);
    return this.refresh();
  }

  async toggle(typePrefix: string): Promise<ViewSnapshot> {
    this.filter = toggleType(this.filter, typePrefix);
    return this.refresh();
  }

  // -- neighborhood spotlight --------------------------------------------------

  async enterNeighborhood(center: string, k: number): Promise<ViewSnapshot> {
    this.center = center;
    this.k = k;
    return this.refresh();
  }

  /** Clicking a visible node recenters the spotlight: one view fetch, and a
   * layout fetch only when the result is too big to simulate locally. */
  async recenter(nodeId: string): Promise<ViewSnapshot> {
    this.center = nodeId;
    this.selection = nodeId;
    const snapshot = await this.refresh();
    if (this.needsServerLayout()) await this.fetchLayout();
    return snapshot;
  }

  async exitNeighborhood(): Promise<ViewSnapshot> {
    this.center = null;
    return this.refresh();
  }

  // -- jobs ---------------------------------------------------------------------

  /** Poll a job to completion with 1 s cadence and gentle backoff. */
  async awaitJob(jobId: string, pollMs = 1000, maxPolls = 60): Promise<JobInfo> {
    let wait = pollMs;
    for (let i = 0; i < maxPolls; i++) {
      const job = await this.api.job(jobId);
      if (job.status === "done" || job.status === "failed") {
        this.pendingJobs = this.pendingJobs.filter((j) => j.job_id !== jobId);
        return job;
      }
      await new Promise((resolve) => setTimeout(resolve, wait));
      wait = Math.min(wait * 1.5, 10_000);
    }
    throw new Error(`job ${jobId} still running after ${maxPolls} polls`);
  }
}
